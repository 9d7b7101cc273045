//! Numeric checks for the monotonicity lemmas that support the storage-rate
//! thresholds, and the `g(m', M)` table for the MIL threshold.
//!
//! These are grid checks, not proofs: each report records the extreme
//! discrete differences and, when the claimed direction is violated, the
//! first grid point where it happens.

use crate::{Error, Result};

/// Smallest exponent for which the replicated MIL helper `f` is claimed decreasing.
pub const LEMMA1_MIN_EXPONENT: f64 = 0.627;
/// Smallest exponent `ln(N/K)` admitted by the coded MIL helper (`q ≤ 0.7828`).
pub const LEMMA2_MIN_EXPONENT: f64 = 0.2448;
/// Additive offset inside the logarithm of the coded MIL helper.
pub const LEMMA2_LOG_OFFSET: f64 = 0.005;
/// `1 / 0.68`, the smallest `N/K` admitted by the coded MaxL bound.
pub const LEMMA4_MIN_Y: f64 = 25.0 / 17.0;
/// Ratio at which the `g(m', M)` table is evaluated.
pub const TABLE_RATIO: f64 = 0.7828;

/// `g(m', M) = (q^(m'+1) - q^M) / (1 - q^(M-1)) - (1 - log2(m'+1) / log2(M))`.
pub fn g_value(mprime: usize, n_files: usize, q: f64) -> Result<f64> {
    if n_files < 3 || mprime < 1 || mprime > n_files - 2 {
        return Err(Error::OutOfRange {
            what: "g(m', M) index",
            detail: format!("m'={mprime}, M={n_files}; need M >= 3 and 1 <= m' <= M-2"),
        });
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::OutOfRange {
            what: "ratio q",
            detail: format!("{q} not in (0, 1)"),
        });
    }
    let m = n_files as i32;
    let head = (q.powi(mprime as i32 + 1) - q.powi(m)) / (1.0 - q.powi(m - 1));
    let tail = 1.0 - ((mprime + 1) as f64).log2() / (n_files as f64).log2();
    Ok(head - tail)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GTable {
    pub q: f64,
    /// `(M, [g(1, M), ..., g(5, M)])`; `None` where `m' > M - 2`.
    pub rows: Vec<(usize, [Option<f64>; 5])>,
}

impl GTable {
    pub fn get(&self, mprime: usize, n_files: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|(m, _)| *m == n_files)
            .and_then(|(_, row)| row.get(mprime.checked_sub(1)?).copied().flatten())
    }

    pub fn defined_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows.iter().flat_map(|(m, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(k, v)| v.map(|v| (k + 1, *m, v)))
        })
    }
}

/// Table for `M ∈ [3, 8]` and `m' ∈ [1, 5]`.
pub fn g_table(q: f64) -> Result<GTable> {
    let mut rows = Vec::with_capacity(6);
    for m in 3..=8 {
        let mut row = [None; 5];
        for (k, cell) in row.iter_mut().enumerate() {
            let mprime = k + 1;
            if mprime <= m - 2 {
                *cell = Some(g_value(mprime, m, q)?);
            }
        }
        rows.push((m, row));
    }
    Ok(GTable { q, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub function: &'static str,
    pub a: f64,
    pub grid_points: usize,
    pub grid_min: f64,
    pub grid_max: f64,
    pub min_diff: f64,
    pub max_diff: f64,
    /// All successive differences are strictly negative.
    pub verdict: bool,
    pub witness: Option<f64>,
    /// Left end of the hypothesis region (1 or 6).
    pub anchor: f64,
    pub phi_at_anchor: f64,
    /// Closed form `a(e^(ax) + 1 + ln(1+x))` (plus the offset for `lemma2`) at the anchor.
    pub phi_prime_at_anchor: f64,
    /// Central difference of `φ` at the anchor.
    pub phi_prime_numeric: f64,
    /// Smallest `φ''` over the grid.
    pub phi_second_min: f64,
}

fn decreasing_scan(grid: &[f64], f: impl Fn(f64) -> f64) -> (f64, f64, Option<f64>) {
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut min_diff = f64::INFINITY;
    let mut max_diff = f64::NEG_INFINITY;
    let mut witness = None;
    for (k, w) in values.windows(2).enumerate() {
        let d = w[1] - w[0];
        min_diff = min_diff.min(d);
        max_diff = max_diff.max(d);
        if d >= 0.0 && witness.is_none() {
            witness = Some(grid[k]);
        }
    }
    (min_diff, max_diff, witness)
}

fn check_grid(grid: &[f64], lo: f64, hi: f64) -> Result<()> {
    let sorted = grid.windows(2).all(|w| w[0] < w[1]);
    let in_range = grid.iter().all(|&x| (lo..=hi).contains(&x));
    if grid.len() < 2 || !sorted || !in_range {
        return Err(Error::OutOfRange {
            what: "grid",
            detail: format!("need at least 2 strictly increasing points within [{lo}, {hi}]"),
        });
    }
    Ok(())
}

fn central_difference(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-5;
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// `f(x) = (1 - e^(-ax)) / ln(1 + x)` on `x ≥ 1` with
/// `φ(x) = e^(ax) - 1 + a(1+x) ln(1+x)`.
pub fn lemma1_check(a: f64, grid: &[f64]) -> Result<MonotonicityReport> {
    if a.is_nan() || a < LEMMA1_MIN_EXPONENT {
        return Err(Error::LemmaHypothesis {
            a,
            min: LEMMA1_MIN_EXPONENT,
        });
    }
    check_grid(grid, 1.0, 50.0)?;
    let f = |x: f64| (1.0 - (-a * x).exp()) / x.ln_1p();
    let phi = |x: f64| (a * x).exp_m1() + a * (1.0 + x) * x.ln_1p();
    let phi_prime = |x: f64| a * ((a * x).exp() + 1.0 + x.ln_1p());
    let phi_second = |x: f64| a * (a * (a * x).exp() + 1.0 / (1.0 + x));
    let (min_diff, max_diff, witness) = decreasing_scan(grid, f);
    Ok(MonotonicityReport {
        function: "lemma1",
        a,
        grid_points: grid.len(),
        grid_min: grid[0],
        grid_max: grid[grid.len() - 1],
        min_diff,
        max_diff,
        verdict: witness.is_none(),
        witness,
        anchor: 1.0,
        phi_at_anchor: phi(1.0),
        phi_prime_at_anchor: phi_prime(1.0),
        phi_prime_numeric: central_difference(phi, 1.0),
        phi_second_min: grid.iter().map(|&x| phi_second(x)).fold(f64::INFINITY, f64::min),
    })
}

/// Neumaier-compensated sum.
fn compensated_sum(terms: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for &t in terms {
        let next = sum + t;
        if sum.abs() >= t.abs() {
            carry += (sum - next) + t;
        } else {
            carry += (t - next) + sum;
        }
        sum = next;
    }
    sum + carry
}

/// `φ(x) = e^(ax) - 1 - a(1+x)(ln(1+x) + 0.005)`, summed term by term since
/// it nearly cancels at `x = 6`.
pub fn lemma2_phi(a: f64, x: f64) -> f64 {
    let scale = a * (1.0 + x);
    compensated_sum(&[
        (a * x).exp(),
        -1.0,
        -scale * x.ln_1p(),
        -scale * LEMMA2_LOG_OFFSET,
    ])
}

/// `f(x) = (1 - e^(-ax)) / (ln(1 + x) + 0.005)` on `x ≥ 6`.
pub fn lemma2_check(a: f64, grid: &[f64]) -> Result<MonotonicityReport> {
    if a.is_nan() || a < LEMMA2_MIN_EXPONENT {
        return Err(Error::LemmaHypothesis {
            a,
            min: LEMMA2_MIN_EXPONENT,
        });
    }
    check_grid(grid, 6.0, 100.0)?;
    let f = |x: f64| (1.0 - (-a * x).exp()) / (x.ln_1p() + LEMMA2_LOG_OFFSET);
    let phi = |x: f64| lemma2_phi(a, x);
    // Reference closed form; differentiating `φ` term by term flips the sign of the
    // last two terms, see `phi_prime_numeric`.
    let phi_prime = |x: f64| a * ((a * x).exp() + 1.0 + LEMMA2_LOG_OFFSET + x.ln_1p());
    let phi_second = |x: f64| a * (a * (a * x).exp() - 1.0 / (1.0 + x));
    let (min_diff, max_diff, witness) = decreasing_scan(grid, f);
    Ok(MonotonicityReport {
        function: "lemma2",
        a,
        grid_points: grid.len(),
        grid_min: grid[0],
        grid_max: grid[grid.len() - 1],
        min_diff,
        max_diff,
        verdict: witness.is_none(),
        witness,
        anchor: 6.0,
        phi_at_anchor: phi(6.0),
        phi_prime_at_anchor: phi_prime(6.0),
        phi_prime_numeric: central_difference(phi, 6.0),
        phi_second_min: grid.iter().map(|&x| phi_second(x)).fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma3Report {
    pub n_servers: usize,
    pub n_files: usize,
    /// `f(m')` for `m' ∈ [1, M-2]`.
    pub values: Vec<f64>,
    /// `f(m'+1) - f(m')`.
    pub diffs: Vec<f64>,
    pub all_negative: bool,
    pub strictly_decreasing: bool,
}

/// `f(m') = (m'+1)(N^(M-m'-1) - 1) - MN/(M+N-1) (N^(M-1) - 1)`.
pub fn lemma3_value(n_servers: usize, n_files: usize, mprime: usize) -> f64 {
    let (n, m) = (n_servers as f64, n_files as f64);
    let head = (mprime + 1) as f64 * (n.powi((n_files - mprime - 1) as i32) - 1.0);
    head - m * n / (m + n - 1.0) * (n.powi(n_files as i32 - 1) - 1.0)
}

pub fn lemma3_values(n_servers: usize, n_files: usize) -> Result<Lemma3Report> {
    if n_servers < 2 || n_files < 3 {
        return Err(Error::OutOfRange {
            what: "lemma 3 parameters",
            detail: format!("N={n_servers}, M={n_files}; need N >= 2, M >= 3"),
        });
    }
    let values: Vec<f64> = (1..=n_files - 2)
        .map(|mp| lemma3_value(n_servers, n_files, mp))
        .collect();
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(Lemma3Report {
        n_servers,
        n_files,
        all_negative: values.iter().all(|&v| v < 0.0),
        strictly_decreasing: diffs.iter().all(|&d| d < 0.0),
        values,
        diffs,
    })
}

/// `ρ(M, m, y) = [1/(m+1)] [My/(M+y-1)] [(y^(M-1) - 1)/(y^(M-m-1) - 1)]`.
pub fn lemma4_ratio(n_files: usize, m: usize, y: f64) -> f64 {
    let big_m = n_files as f64;
    let upper = y.powi(n_files as i32 - 1) - 1.0;
    let lower = y.powi((n_files - m - 1) as i32) - 1.0;
    (big_m * y / (big_m + y - 1.0)) * (upper / lower) / (m + 1) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma4Entry {
    pub n_files: usize,
    pub m: usize,
    pub ratio: f64,
    /// `(y^(M-1) - 1)/(y^(M-m-1) - 1) > y^m`.
    pub inner_bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma4Report {
    pub y: f64,
    pub entries: Vec<Lemma4Entry>,
    /// Every ratio exceeds 1.
    pub verdict: bool,
    pub min_ratio: f64,
}

impl Lemma4Report {
    pub fn ratio(&self, n_files: usize, m: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.n_files == n_files && e.m == m)
            .map(|e| e.ratio)
    }
}

pub fn lemma4_check(y: f64, max_files: usize) -> Result<Lemma4Report> {
    if y.is_nan() || y < LEMMA4_MIN_Y {
        return Err(Error::LemmaHypothesis {
            a: y,
            min: LEMMA4_MIN_Y,
        });
    }
    if max_files < 3 {
        return Err(Error::OutOfRange {
            what: "lemma 4 file bound",
            detail: format!("M_max={max_files} < 3"),
        });
    }
    let mut entries = Vec::new();
    for n_files in 3..=max_files {
        for m in 1..=n_files - 2 {
            let ratio = lemma4_ratio(n_files, m, y);
            let quotient = (y.powi(n_files as i32 - 1) - 1.0) / (y.powi((n_files - m - 1) as i32) - 1.0);
            entries.push(Lemma4Entry {
                n_files,
                m,
                ratio,
                inner_bound_holds: quotient > y.powi(m as i32),
            });
        }
    }
    let min_ratio = entries.iter().map(|e| e.ratio).fold(f64::INFINITY, f64::min);
    Ok(Lemma4Report {
        y,
        verdict: entries.iter().all(|e| e.ratio > 1.0),
        min_ratio,
        entries,
    })
}

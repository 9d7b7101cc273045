//! Exact rate maximization over mixing distributions.
//!
//! Maximizing the rate is the same as maximizing `T(p) = Σ p(m') c_{m'}` with
//! `c_{m'} = q^(m'+1)`, subject to one linear leakage constraint
//! `Σ p(m') b_{m'} ≤ β` and `p` on the simplex. The feasible set is a simplex
//! cut by a half-space, so every vertex has at most two non-zero coordinates
//! and the optimum is found by enumerating singletons and tight pairs.

use crate::analytics::{self, leakage_cap};
use crate::exec::{self, Execution};
use crate::model::{LeakageBudget, Metric, MixingDistribution, SchemeParams, Setting};
use crate::Result;

/// Largest `q` for which the two-point distribution is claimed optimal under MIL.
pub const MIL_RATIO_THRESHOLD: f64 = 0.7828;
/// Largest `q` for which the two-point distribution is claimed optimal under MaxL.
pub const MAXL_RATIO_THRESHOLD: f64 = 0.68;

const FEASIBILITY_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-14;

/// Objective and constraint vectors of the rate-maximization LP.
#[derive(Debug, Clone, PartialEq)]
pub struct LpCoefficients {
    pub metric: Metric,
    /// `c_{m'} = q^(m'+1)`.
    pub objective: Vec<f64>,
    /// Leakage weights `b_{m'}`; for MaxL these are the terms inside the log.
    pub constraint: Vec<f64>,
}

impl LpCoefficients {
    /// Right-hand side for a budget in bits: `ρ` for MIL, `2^ρ` for MaxL.
    pub fn budget(&self, rho: f64) -> f64 {
        match self.metric {
            Metric::Mil => rho,
            Metric::MaxL => rho.exp2(),
        }
    }

    fn len(&self) -> usize {
        self.objective.len()
    }

    /// Constraint weights shifted so the last one is zero, which turns
    /// `Σ p b ≤ β` into `Σ p (b - b_{M-1}) ≤ β - b_{M-1}` on the simplex.
    fn reduced_constraint(&self) -> Vec<f64> {
        let last = *self.constraint.last().expect("at least two entries");
        self.constraint.iter().map(|b| b - last).collect()
    }
}

pub fn lp_coefficients(params: &SchemeParams, metric: Metric) -> LpCoefficients {
    let q = params.ratio();
    let objective = (0..params.n_files()).map(|m| q.powi(m as i32 + 1)).collect();
    let constraint = match metric {
        Metric::Mil => analytics::mil_coefficients(params),
        Metric::MaxL => analytics::maxl_coefficients(params),
    };
    LpCoefficients {
        metric,
        objective,
        constraint,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub distribution: MixingDistribution,
    /// `T = Σ p c`.
    pub objective_value: f64,
    pub rate: f64,
    pub support: Vec<usize>,
    pub constraint_tight: bool,
}

struct Candidate {
    probs: Vec<f64>,
    value: f64,
    support: Vec<usize>,
}

impl Candidate {
    fn new(len: usize, i: usize, j: usize, weight_i: f64, coeffs: &LpCoefficients) -> Self {
        let mut probs = vec![0.0; len];
        probs[i] += weight_i;
        probs[j] += 1.0 - weight_i;
        let value = probs
            .iter()
            .zip(&coeffs.objective)
            .map(|(p, c)| p * c)
            .sum();
        let support = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(k, _)| k)
            .collect();
        Self {
            probs,
            value,
            support,
        }
    }

    /// Lower is preferred among equal objective values.
    fn preference(&self, last: usize) -> (bool, &[usize]) {
        let on_ends = self.support.iter().all(|&k| k == 0 || k == last);
        (!on_ends, &self.support)
    }
}

/// Solves the LP for an explicit right-hand side `beta`.
pub fn solve_lp(coeffs: &LpCoefficients, beta: f64, ratio: f64) -> Result<LpSolution> {
    let len = coeffs.len();
    let last = len - 1;
    let b = &coeffs.constraint;
    let mut best: Option<Candidate> = None;
    let mut consider = |cand: Candidate| {
        let replace = match &best {
            None => true,
            Some(cur) => {
                cand.value > cur.value + TIE_TOL
                    || ((cand.value - cur.value).abs() <= TIE_TOL
                        && cand.preference(last) < cur.preference(last))
            }
        };
        if replace {
            best = Some(cand);
        }
    };

    for i in 0..len {
        if b[i] <= beta + FEASIBILITY_TOL {
            consider(Candidate::new(len, i, i, 1.0, coeffs));
        }
    }
    for i in 0..len {
        for j in (i + 1)..len {
            let span = b[i] - b[j];
            if span == 0.0 {
                continue;
            }
            let weight = (beta - b[j]) / span;
            if (0.0..=1.0).contains(&weight) {
                consider(Candidate::new(len, i, j, weight, coeffs));
            }
        }
    }

    // The point mass on the smallest constraint weight is always feasible.
    let best = best.expect("LP is feasible for every non-negative budget");
    let used: f64 = best.probs.iter().zip(b).map(|(p, b)| p * b).sum();
    let constraint_tight = (used - beta).abs() <= FEASIBILITY_TOL * beta.abs().max(1.0);
    Ok(LpSolution {
        rate: (1.0 - ratio) / (1.0 - best.value),
        objective_value: best.value,
        support: best.support,
        constraint_tight,
        distribution: MixingDistribution::new(best.probs)?,
    })
}

/// Globally optimal mixing distribution for a leakage budget in bits.
pub fn solve_optimal(params: &SchemeParams, metric: Metric, rho: f64) -> Result<LpSolution> {
    let budget = LeakageBudget::new(metric, rho)?;
    let coeffs = lp_coefficients(params, metric);
    solve_lp(&coeffs, coeffs.budget(budget.rho()), params.ratio())
}

/// Sign diagnostics for the interior points `m' ∈ [1, M-2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub metric: Metric,
    /// `D_{m'} = (c_{m'} - c_{M-1}) - (b_{m'} / b_0)(c_0 - c_{M-1})` with the
    /// raw constraint weights; entry `k` belongs to `m' = k + 1`.
    pub d: Vec<f64>,
    /// The same expression with weights shifted by `b_{M-1}`: the exact rate
    /// of change of `T` per unit of interior mass at a tight budget. Equal to
    /// `d` for MIL, where `b_{M-1} = 0`.
    pub sensitivity: Vec<f64>,
    pub within_threshold: bool,
    /// `m'` values with `d > 0`.
    pub positive_indices: Vec<usize>,
}

impl DiagnosticsReport {
    pub fn max_sensitivity(&self) -> Option<f64> {
        self.sensitivity.iter().copied().reduce(f64::max)
    }
}

fn interior_terms(coeffs: &LpCoefficients, weights: &[f64]) -> Vec<f64> {
    let c = &coeffs.objective;
    let last = c.len() - 1;
    (1..last)
        .map(|m| (c[m] - c[last]) - weights[m] / weights[0] * (c[0] - c[last]))
        .collect()
}

pub fn d_coefficients(params: &SchemeParams, metric: Metric) -> DiagnosticsReport {
    let coeffs = lp_coefficients(params, metric);
    let d = interior_terms(&coeffs, &coeffs.constraint);
    let sensitivity = interior_terms(&coeffs, &coeffs.reduced_constraint());
    let positive_indices = d
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(k, _)| k + 1)
        .collect();
    DiagnosticsReport {
        metric,
        d,
        sensitivity,
        within_threshold: threshold_ok(params, metric),
        positive_indices,
    }
}

/// Whether `(params, metric)` lies in the region where the two-point
/// distribution is claimed optimal. Replicated storage has no ratio condition.
pub fn threshold_ok(params: &SchemeParams, metric: Metric) -> bool {
    if params.strength() == 1 {
        return true;
    }
    let limit = match metric {
        Metric::Mil => MIL_RATIO_THRESHOLD,
        Metric::MaxL => MAXL_RATIO_THRESHOLD,
    };
    params.ratio() <= limit
}

/// Objective value `T*` of the two-point distribution at budget `rho`.
pub fn reference_objective(params: &SchemeParams, metric: Metric, rho: f64) -> Result<f64> {
    let budget = LeakageBudget::new(metric, rho)?;
    let coeffs = lp_coefficients(params, metric);
    let reduced = coeffs.reduced_constraint();
    let slack = coeffs.budget(budget.rho()) - coeffs.constraint[coeffs.len() - 1];
    let c = &coeffs.objective;
    let last = c.len() - 1;
    let weight = (slack / reduced[0]).min(1.0);
    Ok(c[last] + weight * (c[0] - c[last]))
}

/// Upper bound on `lp_rate - theorem_rate` implied by the sensitivities: the
/// objective can gain at most `max(0, max sensitivity)` per unit of interior
/// mass, and interior mass is limited by the budget and by the simplex.
pub fn improvement_bound(params: &SchemeParams, metric: Metric, rho: f64) -> Result<f64> {
    let t_star = reference_objective(params, metric, rho)?;
    let report = d_coefficients(params, metric);
    let gain = report.max_sensitivity().unwrap_or(0.0).max(0.0);
    let coeffs = lp_coefficients(params, metric);
    let reduced = coeffs.reduced_constraint();
    let last = coeffs.len() - 1;
    let slack = (coeffs.budget(rho) - coeffs.constraint[last]).max(0.0);
    let mass = if last >= 2 {
        (slack / reduced[last - 1]).min(1.0)
    } else {
        0.0
    };
    let q = params.ratio();
    let rate = |t: f64| (1.0 - q) / (1.0 - t);
    Ok(rate((t_star + gain * mass).min(q)) - rate(t_star))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub theorem_rate: f64,
    pub lp_rate: f64,
    pub gap: f64,
    pub lp_support: Vec<usize>,
    pub solution: LpSolution,
    pub diagnostics: DiagnosticsReport,
}

pub fn compare_with_theorem(params: &SchemeParams, metric: Metric, rho: f64) -> Result<Comparison> {
    let theorem_rate = analytics::theorem_rate(params, metric, rho)?;
    let solution = solve_optimal(params, metric, rho)?;
    Ok(Comparison {
        theorem_rate,
        lp_rate: solution.rate,
        gap: solution.rate - theorem_rate,
        lp_support: solution.support.clone(),
        diagnostics: d_coefficients(params, metric),
        solution,
    })
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// A family of two-point optimality claims: one storage setting and metric,
/// restricted to the ratios where the claim is made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimalityClaim {
    pub setting: Setting,
    pub metric: Metric,
}

impl OptimalityClaim {
    pub const ALL: [OptimalityClaim; 6] = [
        OptimalityClaim::new(Setting::Replicated, Metric::Mil),
        OptimalityClaim::new(Setting::MdsCoded, Metric::Mil),
        OptimalityClaim::new(Setting::TColluding, Metric::Mil),
        OptimalityClaim::new(Setting::Replicated, Metric::MaxL),
        OptimalityClaim::new(Setting::MdsCoded, Metric::MaxL),
        OptimalityClaim::new(Setting::TColluding, Metric::MaxL),
    ];

    pub const fn new(setting: Setting, metric: Metric) -> Self {
        Self { setting, metric }
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.setting, self.metric)
    }

    /// Parameter grid: `N ∈ [2, 6]`, `M ∈ [3, 8]`, strength 1 for replicated
    /// storage and every `s ∈ [2, N-1]` inside the ratio threshold otherwise.
    pub fn grid(&self) -> Vec<SchemeParams> {
        let mut out = Vec::new();
        for n in 2..=6usize {
            let strengths: Vec<usize> = match self.setting {
                Setting::Replicated => vec![1],
                _ => (2..n).collect(),
            };
            for s in strengths {
                for m in 3..=8usize {
                    let params = SchemeParams::new(self.setting, n, s, m).expect("grid is valid");
                    if threshold_ok(&params, self.metric) {
                        out.push(params);
                    }
                }
            }
        }
        out
    }
}

/// Result of checking one parameter point over a budget grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub claim: OptimalityClaim,
    pub params: SchemeParams,
    pub points: usize,
    pub max_abs_gap: f64,
    pub support_ok: bool,
}

impl SweepRecord {
    pub fn passed(&self, tol: f64) -> bool {
        self.support_ok && self.max_abs_gap <= tol
    }
}

/// Compares LP and closed form on `rho_points` budgets in `[0, cap]` for each
/// point of the claim's grid.
pub fn sweep_claim(claim: OptimalityClaim, rho_points: usize, exec: Execution) -> Vec<SweepRecord> {
    let grid = claim.grid();
    exec::map_slice(exec, &grid, |params| {
        let cap = leakage_cap(params, claim.metric);
        let last = params.n_files() - 1;
        let mut max_abs_gap = 0.0f64;
        let mut support_ok = true;
        for rho in linspace(0.0, cap, rho_points) {
            let cmp = compare_with_theorem(params, claim.metric, rho).expect("rho is non-negative");
            max_abs_gap = max_abs_gap.max(cmp.gap.abs());
            support_ok &= cmp.lp_support.iter().all(|&k| k == 0 || k == last);
        }
        SweepRecord {
            claim,
            params: *params,
            points: rho_points,
            max_abs_gap,
            support_ok,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mds_5_4_4() -> SchemeParams {
        SchemeParams::new(Setting::MdsCoded, 5, 4, 4).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let c = lp_coefficients(&mds_5_4_4(), Metric::Mil);
        let expected_b = [1.6, 1.0, (4.0f64 / 3.0).log2(), 0.0];
        let expected_c = [0.8, 0.64, 0.512, 0.4096];
        for k in 0..4 {
            assert_abs_diff_eq!(c.constraint[k], expected_b[k], epsilon = 1e-12);
            assert_abs_diff_eq!(c.objective[k], expected_c[k], epsilon = 1e-12);
        }
        assert_abs_diff_eq!(c.constraint[2], 0.41504, epsilon = 1e-5);

        let rep = lp_coefficients(&SchemeParams::replicated(2, 2).unwrap(), Metric::Mil);
        assert_eq!(rep.constraint, vec![0.5, 0.0]);
        assert_eq!(rep.objective, vec![0.5, 0.25]);

        let maxl = lp_coefficients(&mds_5_4_4(), Metric::MaxL);
        let expected = [3.4, 2.0, 4.0 / 3.0, 1.0];
        for k in 0..4 {
            assert_abs_diff_eq!(maxl.constraint[k], expected[k], epsilon = 1e-12);
        }
        assert_abs_diff_eq!(maxl.budget(0.8), 0.8f64.exp2(), epsilon = 1e-15);
    }

    #[test]
    fn coefficient_shape() {
        for n in 2..=6 {
            for m in 2..=8 {
                let params = SchemeParams::replicated(n, m).unwrap();
                for metric in [Metric::Mil, Metric::MaxL] {
                    let c = lp_coefficients(&params, metric);
                    assert!(c.objective.windows(2).all(|w| w[0] > w[1]));
                    assert!(c.constraint[1..].windows(2).all(|w| w[0] >= w[1]));
                }
            }
        }
    }

    #[test]
    fn beyond_threshold_mil_example() {
        // Pair {0, 2} made tight: p0 * 1.6 + (1 - p0) * log2(4/3) = 0.8.
        let b2 = (4.0f64 / 3.0).log2();
        let p0 = (0.8 - b2) / (1.6 - b2);
        let t = p0 * 0.8 + (1.0 - p0) * 0.512;
        let oracle_rate = 0.2 / (1.0 - t);

        let sol = solve_optimal(&mds_5_4_4(), Metric::Mil, 0.8).unwrap();
        assert_eq!(sol.support, vec![0, 2]);
        assert_abs_diff_eq!(sol.distribution.get(0), p0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.distribution.get(0), 0.32487, epsilon = 1e-5);
        assert_abs_diff_eq!(sol.distribution.get(2), 0.67513, epsilon = 1e-5);
        assert_abs_diff_eq!(sol.rate, oracle_rate, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.rate, 0.50705, epsilon = 1e-5);
        assert!(sol.constraint_tight);

        let cmp = compare_with_theorem(&mds_5_4_4(), Metric::Mil, 0.8).unwrap();
        assert_abs_diff_eq!(cmp.gap, 0.00098, epsilon = 1e-5);
    }

    #[test]
    fn zero_budget_is_full_privacy() {
        for metric in [Metric::Mil, Metric::MaxL] {
            let params = mds_5_4_4();
            let sol = solve_optimal(&params, metric, 0.0).unwrap();
            assert_eq!(sol.support, vec![3]);
            let expected = analytics::theorem_rate(&params, metric, 0.0).unwrap();
            assert_abs_diff_eq!(sol.rate, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn replicated_matches_closed_form() {
        let params = SchemeParams::replicated(4, 3).unwrap();
        let sol = solve_optimal(&params, Metric::Mil, 0.2).unwrap();
        assert_eq!(sol.support, vec![0, 2]);
        let thm = analytics::theorem_rate(&params, Metric::Mil, 0.2).unwrap();
        assert_abs_diff_eq!(sol.rate, thm, epsilon = 1e-12);

        let params = SchemeParams::replicated(4, 4).unwrap();
        let cmp = compare_with_theorem(&params, Metric::Mil, 0.3).unwrap();
        assert!(cmp.gap.abs() <= 1e-9);
        assert_eq!(cmp.lp_support, vec![0, 3]);
    }

    #[test]
    fn above_cap_is_direct_download() {
        let params = mds_5_4_4();
        for metric in [Metric::Mil, Metric::MaxL] {
            let cap = leakage_cap(&params, metric);
            let cmp = compare_with_theorem(&params, metric, cap + 0.5).unwrap();
            assert_eq!(cmp.lp_rate, 1.0);
            assert_eq!(cmp.theorem_rate, 1.0);
            assert_eq!(cmp.gap, 0.0);
            assert_eq!(cmp.lp_support, vec![0]);
        }
    }

    #[test]
    fn two_files_two_point_always_optimal() {
        for n in 2..=6 {
            let params = SchemeParams::replicated(n, 2).unwrap();
            for metric in [Metric::Mil, Metric::MaxL] {
                assert!(d_coefficients(&params, metric).d.is_empty());
                let cap = leakage_cap(&params, metric);
                for rho in linspace(0.0, cap * 1.2, 13) {
                    let cmp = compare_with_theorem(&params, metric, rho).unwrap();
                    assert!(cmp.gap.abs() <= 1e-12, "n={n} {metric} rho={rho}");
                }
            }
        }
    }

    #[test]
    fn diagnostics_examples() {
        let mil = d_coefficients(&mds_5_4_4(), Metric::Mil);
        assert_abs_diff_eq!(mil.d[0], -0.0136, epsilon = 5e-5);
        assert_abs_diff_eq!(mil.d[1], 0.0011, epsilon = 5e-5);
        assert_eq!(mil.positive_indices, vec![2]);
        assert!(!mil.within_threshold);
        assert_eq!(mil.d, mil.sensitivity);

        let maxl = d_coefficients(&mds_5_4_4(), Metric::MaxL);
        assert_abs_diff_eq!(maxl.d[0], 0.0007, epsilon = 1e-4);
        assert_abs_diff_eq!(maxl.d[1], -0.050, epsilon = 1e-3);
        assert_eq!(maxl.positive_indices, vec![1]);

        // c = (1/2, 1/4, 1/8), b0 = log2(3)/2, b1 = log2(3/2)
        let rep = d_coefficients(&SchemeParams::replicated(2, 3).unwrap(), Metric::Mil);
        let oracle = (0.25 - 0.125) - (1.5f64.log2() / (3.0f64.log2() / 2.0)) * (0.5 - 0.125);
        assert_abs_diff_eq!(rep.d[0], oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.d[0], -0.15180, epsilon = 1e-5);
    }

    #[test]
    fn threshold_examples() {
        let p = |s| SchemeParams::new(Setting::MdsCoded, 5, s, 4).unwrap();
        assert!(!threshold_ok(&p(4), Metric::Mil));
        assert!(threshold_ok(&SchemeParams::replicated(5, 4).unwrap(), Metric::Mil));
        let p32 = SchemeParams::new(Setting::MdsCoded, 3, 2, 4).unwrap();
        assert!(threshold_ok(&p32, Metric::MaxL));
        assert!(threshold_ok(&p32, Metric::Mil));
    }

    #[test]
    fn coded_maxl_two_point_not_optimal_at_two_thirds() {
        // q = 2/3 is inside the MaxL ratio threshold, yet moving the budget
        // onto m' = 1 beats the two-point distribution.
        let params = SchemeParams::new(Setting::MdsCoded, 3, 2, 3).unwrap();
        assert!(threshold_ok(&params, Metric::MaxL));
        let report = d_coefficients(&params, Metric::MaxL);
        assert!(report.d[0] < 0.0);
        assert!(report.sensitivity[0] > 0.0);
        let cmp = compare_with_theorem(&params, Metric::MaxL, 0.3).unwrap();
        assert!(cmp.gap > 1e-3);
        assert!(cmp.lp_support.contains(&1));
    }

    #[test]
    fn reference_objective_matches_theorem_rate() {
        let params = mds_5_4_4();
        for metric in [Metric::Mil, Metric::MaxL] {
            for rho in linspace(0.0, leakage_cap(&params, metric), 9) {
                let t = reference_objective(&params, metric, rho).unwrap();
                let rate = (1.0 - params.ratio()) / (1.0 - t);
                let thm = analytics::theorem_rate(&params, metric, rho).unwrap();
                assert_abs_diff_eq!(rate, thm, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.0, 1.6, 25);
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[24], 1.6);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}

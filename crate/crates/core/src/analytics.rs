//! Closed-form rate and leakage of the weak Sun-Jafar family.
//!
//! With `q = s / N` and a mixing distribution `p` over `m' ∈ [0, M-1]`:
//!
//! ```text
//! R    = (1 - q) / (1 - Σ p(m') q^(m'+1))
//! MIL  = p(0) s log2(M) / N + Σ_{m'=1}^{M-2} p(m') log2(M / (m'+1))
//! MaxL = log2( p(0) (N + sM - s) / N + Σ_{m'=1}^{M-1} p(m') M / (m'+1) )
//! ```
//!
//! `s = 1` gives the replicated expressions.

use crate::model::{LeakageBudget, Metric, MixingDistribution, SchemeParams};
use crate::Result;

/// Expected-download rate for a mixing distribution.
pub fn retrieval_rate(params: &SchemeParams, p: &MixingDistribution) -> f64 {
    let q = params.ratio();
    let expectation: f64 = p
        .probs()
        .iter()
        .enumerate()
        .map(|(m, &pm)| pm * q.powi(m as i32 + 1))
        .sum();
    (1.0 - q) / (1.0 - expectation)
}

/// Mutual-information leakage in bits.
pub fn mil_leakage(params: &SchemeParams, p: &MixingDistribution) -> f64 {
    mil_coefficients(params)
        .iter()
        .zip(p.probs())
        .map(|(b, pm)| b * pm)
        .sum()
}

/// Maximal leakage in bits.
pub fn maxl_leakage(params: &SchemeParams, p: &MixingDistribution) -> f64 {
    let inner: f64 = maxl_coefficients(params)
        .iter()
        .zip(p.probs())
        .map(|(b, pm)| b * pm)
        .sum();
    inner.log2().max(0.0)
}

pub fn leakage(params: &SchemeParams, metric: Metric, p: &MixingDistribution) -> f64 {
    match metric {
        Metric::Mil => mil_leakage(params, p),
        Metric::MaxL => maxl_leakage(params, p),
    }
}

/// Per-`m'` weights of the MIL expression. The last entry is always 0, and
/// for `M = 2` there are no interior terms.
pub(crate) fn mil_coefficients(params: &SchemeParams) -> Vec<f64> {
    let m = params.n_files();
    let log_m = (m as f64).log2();
    let mut b = vec![0.0; m];
    b[0] = params.strength() as f64 * log_m / params.n_servers() as f64;
    for (mprime, coeff) in b.iter_mut().enumerate().take(m - 1).skip(1) {
        *coeff = (m as f64 / (mprime + 1) as f64).log2();
    }
    b
}

/// Per-`m'` weights inside the MaxL logarithm.
pub(crate) fn maxl_coefficients(params: &SchemeParams) -> Vec<f64> {
    let m = params.n_files();
    let (n, s) = (params.n_servers() as f64, params.strength() as f64);
    let mut b = vec![0.0; m];
    b[0] = (n + s * m as f64 - s) / n;
    for (mprime, coeff) in b.iter_mut().enumerate().skip(1) {
        *coeff = m as f64 / (mprime + 1) as f64;
    }
    b
}

/// Leakage beyond which the theorem distribution is plain direct download.
pub fn leakage_cap(params: &SchemeParams, metric: Metric) -> f64 {
    let (n, s, m) = (
        params.n_servers() as f64,
        params.strength() as f64,
        params.n_files() as f64,
    );
    match metric {
        Metric::Mil => s * m.log2() / n,
        Metric::MaxL => (1.0 + s * (m - 1.0) / n).log2(),
    }
}

/// Unclamped mass the two-point distribution puts on `m' = 0`.
fn direct_fraction(params: &SchemeParams, metric: Metric, rho: f64) -> f64 {
    let (n, s, m) = (
        params.n_servers() as f64,
        params.strength() as f64,
        params.n_files() as f64,
    );
    match metric {
        Metric::Mil => rho * n / (s * m.log2()),
        Metric::MaxL => n * (rho.exp2() - 1.0) / (s * (m - 1.0)),
    }
}

/// Two-point distribution on `{0, M-1}` that spends the budget `rho`,
/// saturating at direct download once `rho` reaches the cap.
pub fn theorem_distribution(
    params: &SchemeParams,
    metric: Metric,
    rho: f64,
) -> Result<MixingDistribution> {
    let budget = LeakageBudget::new(metric, rho)?;
    let p0 = direct_fraction(params, metric, budget.rho()).min(1.0);
    MixingDistribution::two_point(params.n_files(), p0)
}

/// `(1 + (1 - x)_+ (q + q^2 + ... + q^(M-1)))^-1`.
pub fn theorem_rate(params: &SchemeParams, metric: Metric, rho: f64) -> Result<f64> {
    let budget = LeakageBudget::new(metric, rho)?;
    let x = direct_fraction(params, metric, budget.rho());
    let q = params.ratio();
    let geometric: f64 = (1..params.n_files()).map(|k| q.powi(k as i32)).sum();
    Ok(1.0 / (1.0 + (1.0 - x).max(0.0) * geometric))
}

/// Realized rate/leakage pair of the two-point distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub budget: LeakageBudget,
    pub achieved_leakage: f64,
    pub rate: f64,
    pub distribution: MixingDistribution,
}

pub fn theorem_point(params: &SchemeParams, budget: LeakageBudget) -> Result<TradeoffPoint> {
    let distribution = theorem_distribution(params, budget.metric(), budget.rho())?;
    Ok(TradeoffPoint {
        budget,
        achieved_leakage: leakage(params, budget.metric(), &distribution),
        rate: retrieval_rate(params, &distribution),
        distribution,
    })
}

//! Shared domain types.
//!
//! The three storage settings share one parametric family: the rate and
//! leakage formulas only depend on the strength `s` (1 for replicated storage,
//! `K` for an `(N, K)` MDS code, `T` for `T`-collusion) through the ratio
//! `q = s / N`.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Tolerance on user-supplied probability vectors before renormalization.
pub const INPUT_SUM_TOLERANCE: f64 = 1e-9;
/// Tolerance on the sum of a constructed distribution.
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    Replicated,
    MdsCoded,
    TColluding,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::Replicated => "replicated",
            Setting::MdsCoded => "mds",
            Setting::TColluding => "tcol",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "replicated" | "rep" => Ok(Setting::Replicated),
            "mds" | "mds-coded" | "coded" => Ok(Setting::MdsCoded),
            "tcol" | "t-colluding" | "colluding" => Ok(Setting::TColluding),
            other => Err(format!("unknown setting '{other}'")),
        }
    }
}

/// Leakage metric: mutual information (averaged over servers) or maximal
/// leakage (worst server).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Mil,
    MaxL,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Mil => "mil",
            Metric::MaxL => "maxl",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mil" => Ok(Metric::Mil),
            "maxl" => Ok(Metric::MaxL),
            other => Err(format!("unknown metric '{other}'")),
        }
    }
}

/// Validated system parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    setting: Setting,
    n_servers: usize,
    n_files: usize,
    strength: usize,
    ratio: f64,
}

impl SchemeParams {
    /// Validates `(setting, N, s, M)`. `s = N` is rejected because the rate
    /// expression degenerates to `0/0`.
    pub fn new(setting: Setting, n_servers: usize, strength: usize, n_files: usize) -> Result<Self> {
        if n_servers < 2 {
            return Err(Error::TooFewServers(n_servers));
        }
        if n_files < 2 {
            return Err(Error::TooFewFiles(n_files));
        }
        if strength == 0 || strength >= n_servers {
            return Err(Error::StrengthOutOfRange {
                strength,
                n_servers,
                max: n_servers - 1,
            });
        }
        if setting == Setting::Replicated && strength != 1 {
            return Err(Error::ReplicatedStrength(strength));
        }
        Ok(Self {
            setting,
            n_servers,
            n_files,
            strength,
            ratio: strength as f64 / n_servers as f64,
        })
    }

    pub fn replicated(n_servers: usize, n_files: usize) -> Result<Self> {
        Self::new(Setting::Replicated, n_servers, 1, n_files)
    }

    pub fn setting(&self) -> Setting {
        self.setting
    }

    pub fn n_servers(&self) -> usize {
        self.n_servers
    }

    pub fn n_files(&self) -> usize {
        self.n_files
    }

    pub fn strength(&self) -> usize {
        self.strength
    }

    /// `q = s / N`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Checks `v` has one entry per `m' ∈ [0, M-1]` and builds the distribution.
    pub fn distribution(&self, v: Vec<f64>) -> Result<MixingDistribution> {
        if v.len() != self.n_files {
            return Err(Error::DistributionLength {
                expected: self.n_files,
                got: v.len(),
            });
        }
        MixingDistribution::new(v)
    }
}

/// Probability vector over the number `m' ∈ [0, M-1]` of undesired files
/// mixed into a run.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingDistribution {
    probs: Vec<f64>,
}

impl MixingDistribution {
    /// Accepts vectors whose sum is within [`INPUT_SUM_TOLERANCE`] of one and
    /// renormalizes them.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::DistributionLength {
                expected: 2,
                got: probs.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidProbability { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > INPUT_SUM_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        if sum != 1.0 {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Ok(Self { probs })
    }

    pub fn point_mass(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::OutOfRange {
                what: "point mass index",
                detail: format!("{index} >= {len}"),
            });
        }
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        Self::new(probs)
    }

    /// Mass `p0` on `m' = 0` and the rest on `m' = M-1`.
    pub fn two_point(len: usize, p0: f64) -> Result<Self> {
        let p0 = p0.clamp(0.0, 1.0);
        let mut probs = vec![0.0; len];
        probs[0] = p0;
        probs[len - 1] += 1.0 - p0;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, mprime: usize) -> f64 {
        self.probs.get(mprime).copied().unwrap_or(0.0)
    }

    /// Indices with non-zero mass.
    pub fn support(&self) -> Vec<usize> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageBudget {
    metric: Metric,
    rho: f64,
}

impl LeakageBudget {
    pub fn new(metric: Metric, rho: f64) -> Result<Self> {
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::InvalidBudget(rho));
        }
        Ok(Self { metric, rho })
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Budget in bits.
    pub fn rho(&self) -> f64 {
        self.rho
    }
}

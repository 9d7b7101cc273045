//! Exact leakage oracle. Enumerates the client's randomness and accumulates
//! every server's conditional query distribution `P(q | θ)`.

use std::collections::BTreeMap;

use itertools::Itertools;

use super::{build_queries, encode_query, file_len, require_replicated, QueryClass, WrapperDraw};
use crate::model::{MixingDistribution, SchemeParams};
use crate::{Error, Result};

/// Enumeration budget shared by both modes.
pub const WORK_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AuditMode {
    /// Full enumeration when it fits the budget, otherwise sufficient statistic.
    #[default]
    Auto,
    /// Every chunk permutation of the inner scheme.
    Full,
    /// Only the query class: null, direct file, or involved set.
    Sufficient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactStats {
    /// Mode actually used (never `Auto`).
    pub mode: AuditMode,
    pub expected_download: f64,
    /// `L / E[D]`.
    pub rate: f64,
    pub mil_per_server: Vec<f64>,
    /// Average over servers.
    pub mil: f64,
    pub maxl_per_server: Vec<f64>,
    /// Maximum over servers.
    pub maxl: f64,
}

fn factorial(n: u64) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

fn permutation_tuples(n_servers: usize, mprime: usize) -> f64 {
    if mprime == 0 {
        return n_servers as f64;
    }
    let chunks = (n_servers as u64).pow(mprime as u32 + 1);
    factorial(chunks).powi(mprime as i32 + 1)
}

fn work(params: &SchemeParams, p: &MixingDistribution, full: bool) -> f64 {
    let (n, m) = (params.n_servers(), params.n_files());
    p.support()
        .into_iter()
        .map(|mp| {
            let inner = if full {
                permutation_tuples(n, mp)
            } else if mp == 0 {
                n as f64
            } else {
                1.0
            };
            m as f64 * binomial(m - 1, mp) * inner
        })
        .sum()
}

fn class_key(class: QueryClass) -> Vec<u8> {
    match class {
        QueryClass::Null => vec![0],
        QueryClass::Direct(f) => vec![1, f as u8],
        QueryClass::Involved(files) => std::iter::once(2).chain(files.into_iter().map(|f| f as u8)).collect(),
    }
}

/// Every permutation tuple of the inner scheme for `m'` side files.
fn all_permutations(n_servers: usize, mprime: usize) -> Vec<Vec<Vec<u32>>> {
    if mprime == 0 {
        return vec![Vec::new()];
    }
    let chunks = (n_servers as u32).pow(mprime as u32 + 1);
    let single: Vec<Vec<u32>> = (0..chunks).permutations(chunks as usize).collect();
    (0..=mprime)
        .map(|_| single.iter().cloned())
        .multi_cartesian_product()
        .collect()
}

fn identity_permutations(n_servers: usize, mprime: usize) -> Vec<Vec<u32>> {
    if mprime == 0 {
        return Vec::new();
    }
    let chunks = (n_servers as u32).pow(mprime as u32 + 1);
    vec![(0..chunks).collect(); mprime + 1]
}

pub fn exact_audit(params: &SchemeParams, p: &MixingDistribution) -> Result<ExactStats> {
    exact_audit_with(params, p, AuditMode::Auto)
}

pub fn exact_audit_with(
    params: &SchemeParams,
    p: &MixingDistribution,
    mode: AuditMode,
) -> Result<ExactStats> {
    require_replicated(params)?;
    let (n, m) = (params.n_servers(), params.n_files());
    if p.len() != m {
        return Err(Error::DistributionLength {
            expected: m,
            got: p.len(),
        });
    }
    let len = file_len(params)?;
    let full_work = work(params, p, true);
    let mode = match mode {
        AuditMode::Auto if full_work <= WORK_LIMIT => AuditMode::Full,
        AuditMode::Auto => AuditMode::Sufficient,
        other => other,
    };
    let (mode_name, needed) = match mode {
        AuditMode::Full => ("full", full_work),
        _ => ("sufficient", work(params, p, false)),
    };
    if needed > WORK_LIMIT {
        return Err(Error::InstanceTooLarge {
            mode: mode_name,
            work: needed,
            limit: WORK_LIMIT,
        });
    }

    // Per server: query key -> P(q | θ) for each θ.
    let mut cond: Vec<BTreeMap<Vec<u8>, Vec<f64>>> = vec![BTreeMap::new(); n];
    let mut expected_download = 0.0;

    for mprime in p.support() {
        let perm_sets = match mode {
            AuditMode::Full => all_permutations(n, mprime),
            _ => vec![identity_permutations(n, mprime)],
        };
        let servers: Vec<Option<usize>> = if mprime == 0 {
            (0..n).map(Some).collect()
        } else {
            vec![None]
        };
        let weight = p.get(mprime)
            / binomial(m - 1, mprime)
            / servers.len() as f64
            / perm_sets.len() as f64;
        for theta in 0..m {
            let others: Vec<usize> = (0..m).filter(|&f| f != theta).collect();
            for side_files in others.into_iter().combinations(mprime) {
                for &direct_server in &servers {
                    let draw = WrapperDraw {
                        desired: theta,
                        mprime,
                        side_files: side_files.clone(),
                        direct_server,
                    };
                    for perms in &perm_sets {
                        let (queries, _) = build_queries(params, &draw, perms)?;
                        let download: usize = queries.iter().map(|q| q.download_len(len)).sum();
                        expected_download += weight * download as f64 / m as f64;
                        for (server, q) in queries.into_iter().enumerate() {
                            let key = match mode {
                                AuditMode::Full => encode_query(&q)?,
                                _ => class_key(q.class()),
                            };
                            cond[server].entry(key).or_insert_with(|| vec![0.0; m])[theta] += weight;
                        }
                    }
                }
            }
        }
    }

    let mut mil_per_server = Vec::with_capacity(n);
    let mut maxl_per_server = Vec::with_capacity(n);
    for table in &cond {
        let mut info = 0.0;
        let mut max_sum = 0.0;
        for probs in table.values() {
            let marginal = probs.iter().sum::<f64>() / m as f64;
            for &pq in probs.iter().filter(|&&pq| pq > 0.0) {
                info += pq / m as f64 * (pq / marginal).log2();
            }
            max_sum += probs.iter().copied().fold(0.0, f64::max);
        }
        mil_per_server.push(info.max(0.0));
        maxl_per_server.push(max_sum.log2().max(0.0));
    }
    let mil = mil_per_server.iter().sum::<f64>() / n as f64;
    let maxl = maxl_per_server.iter().copied().fold(0.0, f64::max);
    Ok(ExactStats {
        mode,
        expected_download,
        rate: len as f64 / expected_download,
        mil_per_server,
        mil,
        maxl_per_server,
        maxl,
    })
}

/// Checks by full enumeration that, for every involved set of size `m' + 1`
/// and every server, the query distribution is the same whichever file of
/// the set is desired.
pub fn inner_privacy_holds(params: &SchemeParams, mprime: usize) -> Result<bool> {
    require_replicated(params)?;
    let (n, m) = (params.n_servers(), params.n_files());
    if mprime == 0 || mprime >= m {
        return Err(Error::OutOfRange {
            what: "m'",
            detail: format!("{mprime} not in 1..{m}"),
        });
    }
    let needed = binomial(m, mprime + 1) * (mprime + 1) as f64 * permutation_tuples(n, mprime);
    if needed > WORK_LIMIT {
        return Err(Error::InstanceTooLarge {
            mode: "full",
            work: needed,
            limit: WORK_LIMIT,
        });
    }
    let perm_sets = all_permutations(n, mprime);
    for set in (0..m).combinations(mprime + 1) {
        let mut reference: Option<Vec<BTreeMap<Vec<u8>, u64>>> = None;
        for &theta in &set {
            let draw = WrapperDraw {
                desired: theta,
                mprime,
                side_files: set.iter().copied().filter(|&f| f != theta).collect(),
                direct_server: None,
            };
            let mut counts: Vec<BTreeMap<Vec<u8>, u64>> = vec![BTreeMap::new(); n];
            for perms in &perm_sets {
                let (queries, _) = build_queries(params, &draw, perms)?;
                for (server, q) in queries.iter().enumerate() {
                    *counts[server].entry(encode_query(q)?).or_default() += 1;
                }
            }
            match &reference {
                None => reference = Some(counts),
                Some(r) if *r != counts => return Ok(false),
                Some(_) => {}
            }
        }
    }
    Ok(true)
}

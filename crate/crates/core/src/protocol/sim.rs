//! Monte-Carlo harness. Trial `t` draws all of its randomness from a ChaCha
//! stream seeded with `seed ^ t`, so results do not depend on how trials are
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{answer, decode, download_law, draw_plan, generate_queries, require_replicated};
use super::{FileLibrary, Query, WrapperDraw};
use crate::exec::{self, Execution};
use crate::model::{MixingDistribution, SchemeParams};
use crate::{Error, Result};

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ trial)
}

/// Everything observable in one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub seed: u64,
    pub trial: u64,
    pub draw: WrapperDraw,
    pub queries: Vec<Query>,
    pub answers: Vec<Vec<u8>>,
    /// `None` when decoding failed.
    pub decoded: Option<Vec<u8>>,
}

impl TrialRecord {
    pub fn download(&self) -> u64 {
        self.answers.iter().map(|a| a.len() as u64).sum()
    }
}

/// Runs trial `trial`: uniform desired file, wrapper draw, queries, answers
/// and decoding.
pub fn execute_trial(
    params: &SchemeParams,
    library: &FileLibrary,
    p: &MixingDistribution,
    seed: u64,
    trial: u64,
) -> Result<TrialRecord> {
    require_replicated(params)?;
    let mut rng = trial_rng(seed, trial);
    let desired = rng.random_range(0..params.n_files());
    let draw = draw_plan(p, desired, params.n_servers(), &mut rng)?;
    let (queries, state) = generate_queries(params, &draw, &mut rng)?;
    let answers = queries
        .iter()
        .map(|q| answer(q, library))
        .collect::<Result<Vec<_>>>()?;
    let decoded = decode(&state, &answers).ok();
    Ok(TrialRecord {
        seed,
        trial,
        draw,
        queries,
        answers,
        decoded,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalStats {
    pub trials: u64,
    pub total_download: u64,
    pub mean_download: f64,
    /// `L / mean download`.
    pub empirical_rate: f64,
    pub mprime_counts: Vec<u64>,
    pub mprime_frequencies: Vec<f64>,
    pub decode_failures: u64,
    pub download_law_violations: u64,
}

struct Outcome {
    mprime: usize,
    download: u64,
    decoded_ok: bool,
    law_ok: bool,
}

pub fn run_trials(
    params: &SchemeParams,
    library: &FileLibrary,
    p: &MixingDistribution,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<EmpiricalStats> {
    require_replicated(params)?;
    if trials == 0 {
        return Err(Error::OutOfRange {
            what: "trials",
            detail: "need at least one trial".into(),
        });
    }
    if p.len() != params.n_files() || library.n_files() != params.n_files() {
        return Err(Error::DistributionLength {
            expected: params.n_files(),
            got: p.len(),
        });
    }
    let outcomes = exec::map_range(exec, trials as usize, |t| {
        let record = execute_trial(params, library, p, seed, t as u64)?;
        let download = record.download();
        let mprime = record.draw.mprime;
        Ok(Outcome {
            mprime,
            download,
            decoded_ok: record.decoded.as_deref() == library.file(record.draw.desired),
            law_ok: download == download_law(params.n_servers(), params.n_files(), mprime),
        })
    });

    let mut mprime_counts = vec![0u64; params.n_files()];
    let mut total_download = 0u64;
    let mut decode_failures = 0u64;
    let mut download_law_violations = 0u64;
    for outcome in outcomes {
        let o: Outcome = outcome?;
        mprime_counts[o.mprime] += 1;
        total_download += o.download;
        decode_failures += u64::from(!o.decoded_ok);
        download_law_violations += u64::from(!o.law_ok);
    }
    let mean_download = total_download as f64 / trials as f64;
    Ok(EmpiricalStats {
        trials,
        total_download,
        mean_download,
        empirical_rate: library.file_len() as f64 / mean_download,
        mprime_frequencies: mprime_counts.iter().map(|&c| c as f64 / trials as f64).collect(),
        mprime_counts,
        decode_failures,
        download_law_violations,
    })
}

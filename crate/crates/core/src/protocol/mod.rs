//! Executable weak Sun-Jafar protocol for replicated, non-colluding servers.
//!
//! A run first draws `m' ~ p`. For `m' = 0` the client downloads the desired
//! file directly from one uniformly chosen server and sends every other
//! server a [`Query::Null`]. Otherwise it picks `m'` undesired files uniformly
//! and runs the capacity-achieving Sun-Jafar scheme on those `m' + 1` files,
//! with each file cut into `N^(m'+1)` chunks of `N^(M-m'-1)` octets so the
//! file length `L = N^M` is the same for every `m'`.
//!
//! Symbols are octets; the group operation is XOR.

mod audit;
mod scheme;
mod sim;
mod transcript;

pub use audit::{exact_audit, exact_audit_with, inner_privacy_holds, AuditMode, ExactStats};
pub use scheme::{build_queries, decode, generate_queries, sample_permutations, DecodeState};
pub use sim::{execute_trial, run_trials, trial_rng, EmpiricalStats, TrialRecord};
pub use transcript::{decode_query, encode_query, Transcript};

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::model::{MixingDistribution, SchemeParams, Setting};
use crate::{Error, Result};

/// Upper bound on the per-file length `N^M`.
pub const MAX_FILE_LEN: usize = 1 << 24;
const LIBRARY_STREAM: u64 = 0x4c49_4252;

fn require_replicated(params: &SchemeParams) -> Result<()> {
    match params.setting() {
        Setting::Replicated => Ok(()),
        other => Err(Error::UnsupportedSetting(other)),
    }
}

/// `N^M`, the common file length.
pub fn file_len(params: &SchemeParams) -> Result<usize> {
    let len = (params.n_servers() as u128).checked_pow(params.n_files() as u32);
    match len {
        Some(len) if len <= MAX_FILE_LEN as u128 && params.n_files() <= 255 => Ok(len as usize),
        _ => Err(Error::OutOfRange {
            what: "file length N^M",
            detail: format!(
                "N={}, M={} exceeds {MAX_FILE_LEN} octets",
                params.n_servers(),
                params.n_files()
            ),
        }),
    }
}

/// Closed-form total download in octets for a run with `m'` side files.
pub fn download_law(n_servers: usize, n_files: usize, mprime: usize) -> u64 {
    let n = n_servers as u64;
    if mprime == 0 {
        return n.pow(n_files as u32);
    }
    let per_server = (n.pow(mprime as u32 + 1) - 1) / (n - 1);
    n * per_server * n.pow((n_files - mprime - 1) as u32)
}

/// Replicated file store shared by every server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileLibrary {
    n_servers: usize,
    files: Vec<Vec<u8>>,
}

impl FileLibrary {
    pub fn from_files(n_servers: usize, files: Vec<Vec<u8>>) -> Result<Self> {
        let params = SchemeParams::replicated(n_servers, files.len())?;
        let len = file_len(&params)?;
        if let Some(bad) = files.iter().position(|f| f.len() != len) {
            return Err(Error::OutOfRange {
                what: "file length",
                detail: format!("file {bad} has {} octets, expected {len}", files[bad].len()),
            });
        }
        Ok(Self { n_servers, files })
    }

    pub fn n_servers(&self) -> usize {
        self.n_servers
    }

    pub fn n_files(&self) -> usize {
        self.files.len()
    }

    pub fn file_len(&self) -> usize {
        self.files[0].len()
    }

    pub fn file(&self, index: usize) -> Option<&[u8]> {
        self.files.get(index).map(Vec::as_slice)
    }
}

/// `M` files of `N^M` pseudo-random octets, reproducible from `seed`.
pub fn build_library(params: &SchemeParams, seed: u64) -> Result<FileLibrary> {
    require_replicated(params)?;
    let len = file_len(params)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(LIBRARY_STREAM);
    let files = (0..params.n_files())
        .map(|_| {
            let mut f = vec![0u8; len];
            rng.fill_bytes(&mut f);
            f
        })
        .collect();
    Ok(FileLibrary {
        n_servers: params.n_servers(),
        files,
    })
}

/// Outer-layer randomness of one run. File and server indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrapperDraw {
    pub desired: usize,
    pub mprime: usize,
    /// Undesired files mixed into the run, sorted.
    pub side_files: Vec<usize>,
    /// Server asked for the whole file when `mprime == 0`.
    pub direct_server: Option<usize>,
}

impl WrapperDraw {
    /// `side_files ∪ {desired}`, sorted.
    pub fn involved(&self) -> Vec<usize> {
        let mut all = self.side_files.clone();
        all.push(self.desired);
        all.sort_unstable();
        all
    }
}

fn sample_mprime<R: Rng + ?Sized>(p: &MixingDistribution, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let support = p.support();
    for &m in &support {
        acc += p.get(m);
        if u < acc {
            return m;
        }
    }
    *support.last().expect("distribution has mass")
}

/// Draws `m' ~ p`, a uniform set of `m'` undesired files, and a uniform
/// direct server when `m' = 0`.
pub fn draw_plan<R: Rng + ?Sized>(
    p: &MixingDistribution,
    desired: usize,
    n_servers: usize,
    rng: &mut R,
) -> Result<WrapperDraw> {
    let n_files = p.len();
    if desired >= n_files {
        return Err(Error::OutOfRange {
            what: "desired file",
            detail: format!("{desired} >= {n_files}"),
        });
    }
    let mprime = sample_mprime(p, rng);
    let mut side_files: Vec<usize> = index::sample(rng, n_files - 1, mprime)
        .into_iter()
        .map(|k| if k >= desired { k + 1 } else { k })
        .collect();
    side_files.sort_unstable();
    let direct_server = (mprime == 0).then(|| rng.random_range(0..n_servers));
    Ok(WrapperDraw {
        desired,
        mprime,
        side_files,
        direct_server,
    })
}

/// One request: XOR of the named `(file, chunk)` pairs, sorted by file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SumRequest {
    pub terms: Vec<(usize, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Query {
    Null,
    Direct { file: usize },
    Sums {
        chunk_len: usize,
        requests: Vec<SumRequest>,
    },
}

/// What a server can tell about the desired file from one query, once the
/// inner randomness is averaged out.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QueryClass {
    Null,
    Direct(usize),
    Involved(Vec<usize>),
}

impl Query {
    /// Octets the server returns for this query.
    pub fn download_len(&self, file_len: usize) -> usize {
        match self {
            Query::Null => 0,
            Query::Direct { .. } => file_len,
            Query::Sums {
                chunk_len,
                requests,
            } => chunk_len * requests.len(),
        }
    }

    pub fn class(&self) -> QueryClass {
        match self {
            Query::Null => QueryClass::Null,
            Query::Direct { file } => QueryClass::Direct(*file),
            Query::Sums { requests, .. } => {
                let mut files: Vec<usize> = requests
                    .iter()
                    .flat_map(|r| r.terms.iter().map(|&(f, _)| f))
                    .collect();
                files.sort_unstable();
                files.dedup();
                QueryClass::Involved(files)
            }
        }
    }
}

/// Server side: a deterministic function of the query and the store.
pub fn answer(query: &Query, store: &FileLibrary) -> Result<Vec<u8>> {
    match query {
        Query::Null => Ok(Vec::new()),
        Query::Direct { file } => store
            .file(*file)
            .map(<[u8]>::to_vec)
            .ok_or(Error::ChunkOutOfRange { file: *file, chunk: 0 }),
        Query::Sums {
            chunk_len,
            requests,
        } => {
            let chunk_len = *chunk_len;
            if chunk_len == 0 || !store.file_len().is_multiple_of(chunk_len) {
                return Err(Error::OutOfRange {
                    what: "chunk length",
                    detail: format!("{chunk_len} does not divide {}", store.file_len()),
                });
            }
            let n_chunks = store.file_len() / chunk_len;
            let mut out = vec![0u8; chunk_len * requests.len()];
            for (slot, req) in out.chunks_exact_mut(chunk_len).zip(requests) {
                for &(file, chunk) in &req.terms {
                    let data = store
                        .file(file)
                        .filter(|_| (chunk as usize) < n_chunks)
                        .ok_or(Error::ChunkOutOfRange { file, chunk })?;
                    let start = chunk as usize * chunk_len;
                    for (o, s) in slot.iter_mut().zip(&data[start..start + chunk_len]) {
                        *o ^= s;
                    }
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn library_is_reproducible() {
        let params = SchemeParams::replicated(2, 2).unwrap();
        let a = build_library(&params, 7).unwrap();
        let b = build_library(&params, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_files(), 2);
        assert_eq!(a.file_len(), 4);
        assert_ne!(a, build_library(&params, 8).unwrap());

        let p3 = SchemeParams::replicated(3, 2).unwrap();
        assert_eq!(build_library(&p3, 0).unwrap().file_len(), 9);
    }

    #[test]
    fn library_rejects_coded_settings() {
        let mds = SchemeParams::new(Setting::MdsCoded, 5, 4, 4).unwrap();
        assert_eq!(build_library(&mds, 0), Err(Error::UnsupportedSetting(Setting::MdsCoded)));
    }

    #[test]
    fn download_law_values() {
        assert_eq!(download_law(2, 2, 0), 4);
        assert_eq!(download_law(2, 2, 1), 6);
        assert_eq!(download_law(3, 2, 1), 12);
        assert_eq!(download_law(2, 3, 1), 12);
        assert_eq!(download_law(2, 3, 2), 14);
    }

    #[test]
    fn draw_plan_point_masses() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let direct = MixingDistribution::point_mass(4, 0).unwrap();
        let full = MixingDistribution::point_mass(4, 3).unwrap();
        for theta in 0..4 {
            let d = draw_plan(&direct, theta, 3, &mut rng).unwrap();
            assert_eq!(d.mprime, 0);
            assert!(d.side_files.is_empty());
            assert!(d.direct_server.unwrap() < 3);
            let f = draw_plan(&full, theta, 3, &mut rng).unwrap();
            let expected: Vec<usize> = (0..4).filter(|&k| k != theta).collect();
            assert_eq!(f.side_files, expected);
            assert_eq!(f.direct_server, None);
        }
        assert!(draw_plan(&full, 4, 3, &mut rng).is_err());
    }

    #[test]
    fn draw_plan_frequencies() {
        let p = MixingDistribution::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 1_000_000;
        let zeros = (0..draws)
            .filter(|_| draw_plan(&p, 1, 2, &mut rng).unwrap().mprime == 0)
            .count();
        let freq = zeros as f64 / draws as f64;
        assert!((freq - 0.5).abs() <= 0.002, "freq {freq}");
    }

    #[test]
    fn side_sets_are_uniform() {
        // M = 4, m' = 1, theta = 2: each of {0, 1, 3} about a third of the time.
        let p = MixingDistribution::point_mass(4, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 4];
        for _ in 0..30_000 {
            let d = draw_plan(&p, 2, 2, &mut rng).unwrap();
            assert!(!d.side_files.contains(&2));
            counts[d.side_files[0]] += 1;
        }
        assert_eq!(counts[2], 0);
        for k in [0, 1, 3] {
            assert!((counts[k] as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.015);
        }
    }

    #[test]
    fn answers() {
        let lib = FileLibrary::from_files(2, vec![vec![1, 2, 3, 4], vec![16, 32, 64, 128]]).unwrap();
        assert_eq!(answer(&Query::Null, &lib).unwrap(), Vec::<u8>::new());
        assert_eq!(answer(&Query::Direct { file: 1 }, &lib).unwrap(), vec![16, 32, 64, 128]);
        let q = Query::Sums {
            chunk_len: 1,
            requests: vec![SumRequest {
                terms: vec![(0, 2), (1, 1)],
            }],
        };
        assert_eq!(answer(&q, &lib).unwrap(), vec![3 ^ 32]);
        let bad = Query::Sums {
            chunk_len: 1,
            requests: vec![SumRequest {
                terms: vec![(0, 4)],
            }],
        };
        assert_eq!(answer(&bad, &lib), Err(Error::ChunkOutOfRange { file: 0, chunk: 4 }));
    }
}

//! Sun-Jafar query construction over the involved files of one run.
//!
//! With `K = m' + 1` involved files and `N^K` chunks per file, the queries
//! proceed in rounds `k = 1..=K`. In round `k` every server receives, for
//! every `k`-subset `S` of the involved files, `(N-1)^(k-1)` sums of one chunk
//! from each file in `S`:
//!
//! * `S` without the desired file: fresh undesired chunks. These become side
//!   information for the other servers in round `k + 1`.
//! * `S` with the desired file: a fresh desired chunk, XORed (for `k ≥ 2`)
//!   with one round-`(k-1)` side-information sum of type `S \ {θ}` from each
//!   other server, so the client can cancel the undesired part.
//!
//! Chunks are addressed through an independent uniform permutation per file,
//! and no server sees the same chunk of a file twice, which makes each
//! server's view independent of which involved file is desired.

use std::collections::HashMap;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{file_len, require_replicated, Query, SumRequest, WrapperDraw};
use crate::model::SchemeParams;
use crate::{Error, Result};

/// Undesired-only sums by `(server, subset)`: `(request index, terms)`.
type SideInfo = HashMap<(usize, Vec<usize>), Vec<(usize, Vec<(usize, u32)>)>>;

/// Where the client finds one desired chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Recipe {
    server: usize,
    request: usize,
    side: Option<(usize, usize)>,
}

/// Client-side memory needed to decode the answers of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeState(State);

#[derive(Debug, Clone, PartialEq, Eq)]
enum State {
    Direct {
        server: usize,
        n_servers: usize,
        file_len: usize,
    },
    Inner {
        chunk_len: usize,
        file_len: usize,
        request_counts: Vec<usize>,
        /// Logical desired chunk `i` lives at chunk `desired_perm[i]`.
        desired_perm: Vec<u32>,
        recipes: Vec<Recipe>,
    },
}

/// Uniform permutations of the `N^(m'+1)` chunk indices, one per involved file.
pub fn sample_permutations<R: Rng + ?Sized>(
    n_servers: usize,
    mprime: usize,
    rng: &mut R,
) -> Vec<Vec<u32>> {
    if mprime == 0 {
        return Vec::new();
    }
    let n_chunks = (n_servers as u32).pow(mprime as u32 + 1);
    (0..=mprime)
        .map(|_| {
            let mut perm: Vec<u32> = (0..n_chunks).collect();
            perm.shuffle(rng);
            perm
        })
        .collect()
}

/// Samples the inner randomness and builds the per-server queries.
pub fn generate_queries<R: Rng + ?Sized>(
    params: &SchemeParams,
    plan: &WrapperDraw,
    rng: &mut R,
) -> Result<(Vec<Query>, DecodeState)> {
    require_replicated(params)?;
    let perms = sample_permutations(params.n_servers(), plan.mprime, rng);
    build_queries(params, plan, &perms)
}

/// Deterministic part of query generation. `perms[j]` permutes the chunks of
/// the `j`-th involved file in ascending file order.
pub fn build_queries(
    params: &SchemeParams,
    plan: &WrapperDraw,
    perms: &[Vec<u32>],
) -> Result<(Vec<Query>, DecodeState)> {
    require_replicated(params)?;
    let n = params.n_servers();
    let len = file_len(params)?;
    if plan.side_files.len() != plan.mprime
        || plan.desired >= params.n_files()
        || plan.mprime >= params.n_files()
    {
        return Err(Error::OutOfRange {
            what: "wrapper draw",
            detail: format!("{plan:?}"),
        });
    }

    if plan.mprime == 0 {
        let server = plan.direct_server.filter(|&s| s < n).ok_or(Error::OutOfRange {
            what: "direct server",
            detail: format!("{:?} with {n} servers", plan.direct_server),
        })?;
        let queries = (0..n)
            .map(|s| {
                if s == server {
                    Query::Direct { file: plan.desired }
                } else {
                    Query::Null
                }
            })
            .collect();
        return Ok((
            queries,
            DecodeState(State::Direct {
                server,
                n_servers: n,
                file_len: len,
            }),
        ));
    }

    let involved = plan.involved();
    let k_files = involved.len();
    let n_chunks = n.pow(k_files as u32);
    if perms.len() != k_files || perms.iter().any(|p| p.len() != n_chunks) {
        return Err(Error::OutOfRange {
            what: "chunk permutations",
            detail: format!("need {k_files} permutations of {n_chunks} chunks"),
        });
    }
    let chunk_len = len / n_chunks;
    let desired_pos = involved
        .iter()
        .position(|&f| f == plan.desired)
        .expect("desired file is involved");

    let mut fresh = vec![0u32; k_files];
    let mut take_fresh = |pos: usize| {
        let logical = fresh[pos];
        fresh[pos] += 1;
        logical
    };
    let mut requests: Vec<Vec<Vec<(usize, u32)>>> = vec![Vec::new(); n];
    let mut recipes = Vec::with_capacity(n_chunks);
    let mut side: SideInfo = HashMap::new();

    for k in 1..=k_files {
        let mut next_side = HashMap::new();
        for server in 0..n {
            for subset in (0..k_files).combinations(k) {
                if !subset.contains(&desired_pos) {
                    let entries: &mut Vec<_> = next_side.entry((server, subset.clone())).or_default();
                    for _ in 0..(n - 1).pow(k as u32 - 1) {
                        let terms: Vec<(usize, u32)> =
                            subset.iter().map(|&pos| (pos, take_fresh(pos))).collect();
                        entries.push((requests[server].len(), terms.clone()));
                        requests[server].push(terms);
                    }
                } else if k == 1 {
                    recipes.push(Recipe {
                        server,
                        request: requests[server].len(),
                        side: None,
                    });
                    requests[server].push(vec![(desired_pos, take_fresh(desired_pos))]);
                } else {
                    let rest: Vec<usize> = subset.iter().copied().filter(|&p| p != desired_pos).collect();
                    for other in (0..n).filter(|&o| o != server) {
                        for (src_request, terms) in &side[&(other, rest.clone())] {
                            let mut terms = terms.clone();
                            terms.push((desired_pos, take_fresh(desired_pos)));
                            terms.sort_unstable();
                            recipes.push(Recipe {
                                server,
                                request: requests[server].len(),
                                side: Some((other, *src_request)),
                            });
                            requests[server].push(terms);
                        }
                    }
                }
            }
        }
        side = next_side;
    }
    debug_assert_eq!(recipes.len(), n_chunks);

    let request_counts = requests.iter().map(Vec::len).collect();
    let queries = requests
        .into_iter()
        .map(|reqs| Query::Sums {
            chunk_len,
            requests: reqs
                .into_iter()
                .map(|terms| SumRequest {
                    terms: terms
                        .into_iter()
                        .map(|(pos, logical)| (involved[pos], perms[pos][logical as usize]))
                        .collect(),
                })
                .collect(),
        })
        .collect();
    Ok((
        queries,
        DecodeState(State::Inner {
            chunk_len,
            file_len: len,
            request_counts,
            desired_perm: perms[desired_pos].clone(),
            recipes,
        }),
    ))
}

/// Recovers the desired file from the answers of one run.
pub fn decode(state: &DecodeState, answers: &[Vec<u8>]) -> Result<Vec<u8>> {
    match &state.0 {
        State::Direct {
            server,
            n_servers,
            file_len,
        } => {
            if answers.len() != *n_servers {
                return Err(Error::Decode(format!(
                    "expected {n_servers} answers, got {}",
                    answers.len()
                )));
            }
            for (s, a) in answers.iter().enumerate() {
                let expected = if s == *server { *file_len } else { 0 };
                if a.len() != expected {
                    return Err(Error::Decode(format!(
                        "server {s} returned {} octets, expected {expected}",
                        a.len()
                    )));
                }
            }
            Ok(answers[*server].clone())
        }
        State::Inner {
            chunk_len,
            file_len,
            request_counts,
            desired_perm,
            recipes,
        } => {
            let chunk_len = *chunk_len;
            if answers.len() != request_counts.len() {
                return Err(Error::Decode(format!(
                    "expected {} answers, got {}",
                    request_counts.len(),
                    answers.len()
                )));
            }
            for (s, (a, count)) in answers.iter().zip(request_counts).enumerate() {
                if a.len() != count * chunk_len {
                    return Err(Error::Decode(format!(
                        "server {s} returned {} octets, expected {}",
                        a.len(),
                        count * chunk_len
                    )));
                }
            }
            let slot = |server: usize, request: usize| {
                &answers[server][request * chunk_len..(request + 1) * chunk_len]
            };
            let mut out = vec![0u8; *file_len];
            for (logical, recipe) in recipes.iter().enumerate() {
                let start = desired_perm[logical] as usize * chunk_len;
                let dest = &mut out[start..start + chunk_len];
                dest.copy_from_slice(slot(recipe.server, recipe.request));
                if let Some((other, request)) = recipe.side {
                    for (d, s) in dest.iter_mut().zip(slot(other, request)) {
                        *d ^= s;
                    }
                }
            }
            Ok(out)
        }
    }
}

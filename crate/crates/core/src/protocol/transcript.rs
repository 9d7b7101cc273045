//! Binary transcript format.
//!
//! A transcript is a concatenation of records, each a 4-octet big-endian
//! length followed by that many payload octets:
//!
//! ```text
//! header   "WPIR" | version u8 | N u8 | M u8 | seed u64 | trial u64
//! draw     desired u8 | m' u8 | direct server u8 (0xff: none) | side files u8 * m'
//! query    one record per server, see below
//! answer   one record per server, raw octets
//! decoded  flag u8 (0: failed, 1: ok) | octets
//! ```
//!
//! A query payload is `0x00` (null), `0x01 file` (direct), or `0x02` followed
//! by `chunk_len u32 | request count u32` and, per request, a term count u8
//! and the sorted `(file u8, chunk u32)` pairs. All integers big-endian.

use super::{Query, SumRequest, TrialRecord, WrapperDraw};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"WPIR";
const VERSION: u8 = 1;

const TAG_NULL: u8 = 0;
const TAG_DIRECT: u8 = 1;
const TAG_SUMS: u8 = 2;

fn byte(v: usize, what: &str) -> Result<u8> {
    u8::try_from(v).map_err(|_| Error::Transcript(format!("{what} {v} does not fit one octet")))
}

fn word(v: usize, what: &str) -> Result<[u8; 4]> {
    u32::try_from(v)
        .map(u32::to_be_bytes)
        .map_err(|_| Error::Transcript(format!("{what} {v} does not fit four octets")))
}

pub fn encode_query(query: &Query) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    match query {
        Query::Null => out.push(TAG_NULL),
        Query::Direct { file } => {
            out.push(TAG_DIRECT);
            out.push(byte(*file, "file id")?);
        }
        Query::Sums {
            chunk_len,
            requests,
        } => {
            out.push(TAG_SUMS);
            out.extend(word(*chunk_len, "chunk length")?);
            out.extend(word(requests.len(), "request count")?);
            for req in requests {
                out.push(byte(req.terms.len(), "term count")?);
                for &(file, chunk) in &req.terms {
                    out.push(byte(file, "file id")?);
                    out.extend(chunk.to_be_bytes());
                }
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Transcript(format!(
                "needed {n} octets, {} left",
                self.buf.len()
            )));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 octets")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 octets")))
    }

    fn record(&mut self) -> Result<&'a [u8]> {
        let len = self.u32()? as usize;
        self.take(len)
    }

    fn finish(&self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::Transcript(format!("{} trailing octets", self.buf.len())))
        }
    }
}

pub fn decode_query(bytes: &[u8]) -> Result<Query> {
    let mut r = Reader { buf: bytes };
    let query = match r.u8()? {
        TAG_NULL => Query::Null,
        TAG_DIRECT => Query::Direct {
            file: r.u8()? as usize,
        },
        TAG_SUMS => {
            let chunk_len = r.u32()? as usize;
            let count = r.u32()? as usize;
            let mut requests = Vec::with_capacity(count.min(1 << 16));
            for _ in 0..count {
                let n_terms = r.u8()? as usize;
                let terms = (0..n_terms)
                    .map(|_| Ok((r.u8()? as usize, r.u32()?)))
                    .collect::<Result<Vec<_>>>()?;
                requests.push(SumRequest { terms });
            }
            Query::Sums {
                chunk_len,
                requests,
            }
        }
        tag => return Err(Error::Transcript(format!("unknown query tag {tag}"))),
    };
    r.finish()?;
    Ok(query)
}

/// A dumped protocol run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub n_servers: usize,
    pub n_files: usize,
    pub record: TrialRecord,
}

fn push_record(out: &mut Vec<u8>, payload: &[u8]) -> Result<()> {
    out.extend(word(payload.len(), "record length")?);
    out.extend_from_slice(payload);
    Ok(())
}

impl Transcript {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let rec = &self.record;
        let mut out = Vec::new();

        let mut header = MAGIC.to_vec();
        header.push(VERSION);
        header.push(byte(self.n_servers, "server count")?);
        header.push(byte(self.n_files, "file count")?);
        header.extend(rec.seed.to_be_bytes());
        header.extend(rec.trial.to_be_bytes());
        push_record(&mut out, &header)?;

        let d = &rec.draw;
        let mut draw = vec![byte(d.desired, "file id")?, byte(d.mprime, "m'")?];
        draw.push(match d.direct_server {
            Some(s) => byte(s, "server id")?,
            None => 0xff,
        });
        for &f in &d.side_files {
            draw.push(byte(f, "file id")?);
        }
        push_record(&mut out, &draw)?;

        for q in &rec.queries {
            push_record(&mut out, &encode_query(q)?)?;
        }
        for a in &rec.answers {
            push_record(&mut out, a)?;
        }
        let mut decoded = Vec::new();
        match &rec.decoded {
            Some(bytes) => {
                decoded.push(1);
                decoded.extend_from_slice(bytes);
            }
            None => decoded.push(0),
        }
        push_record(&mut out, &decoded)?;
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes };

        let mut h = Reader { buf: r.record()? };
        if h.take(4)? != MAGIC {
            return Err(Error::Transcript("bad magic".into()));
        }
        let version = h.u8()?;
        if version != VERSION {
            return Err(Error::Transcript(format!("unsupported version {version}")));
        }
        let n_servers = h.u8()? as usize;
        let n_files = h.u8()? as usize;
        let seed = h.u64()?;
        let trial = h.u64()?;
        h.finish()?;

        let mut d = Reader { buf: r.record()? };
        let desired = d.u8()? as usize;
        let mprime = d.u8()? as usize;
        let direct_server = match d.u8()? {
            0xff => None,
            s => Some(s as usize),
        };
        let side_files = (0..mprime)
            .map(|_| d.u8().map(usize::from))
            .collect::<Result<Vec<_>>>()?;
        d.finish()?;

        let queries = (0..n_servers)
            .map(|_| decode_query(r.record()?))
            .collect::<Result<Vec<_>>>()?;
        let answers = (0..n_servers)
            .map(|_| r.record().map(<[u8]>::to_vec))
            .collect::<Result<Vec<_>>>()?;
        let decoded_rec = r.record()?;
        let decoded = match decoded_rec.split_first() {
            Some((1, rest)) => Some(rest.to_vec()),
            Some((0, [])) => None,
            _ => return Err(Error::Transcript("bad decoded record".into())),
        };
        r.finish()?;

        Ok(Self {
            n_servers,
            n_files,
            record: TrialRecord {
                seed,
                trial,
                draw: WrapperDraw {
                    desired,
                    mprime,
                    side_files,
                    direct_server,
                },
                queries,
                answers,
                decoded,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SchemeParams;
    use crate::protocol::{build_library, execute_trial};
    use proptest::prelude::*;

    #[test]
    fn query_golden_bytes() {
        let q = Query::Sums {
            chunk_len: 1,
            requests: vec![
                SumRequest {
                    terms: vec![(0, 3)],
                },
                SumRequest {
                    terms: vec![(0, 2), (1, 0x0102_0304)],
                },
            ],
        };
        let expected: Vec<u8> = vec![
            0x02, // sums
            0, 0, 0, 1, // chunk length
            0, 0, 0, 2, // requests
            1, 0, 0, 0, 0, 3, // (file 0, chunk 3)
            2, 0, 0, 0, 0, 2, 1, 1, 2, 3, 4, // (0, 2) + (1, 0x01020304)
        ];
        assert_eq!(encode_query(&q).unwrap(), expected);
        assert_eq!(decode_query(&expected).unwrap(), q);
        assert_eq!(encode_query(&Query::Null).unwrap(), vec![0]);
        assert_eq!(encode_query(&Query::Direct { file: 5 }).unwrap(), vec![1, 5]);
    }

    #[test]
    fn transcript_golden_direct_run() {
        let t = Transcript {
            n_servers: 2,
            n_files: 2,
            record: TrialRecord {
                seed: 1,
                trial: 2,
                draw: WrapperDraw {
                    desired: 1,
                    mprime: 0,
                    side_files: vec![],
                    direct_server: Some(0),
                },
                queries: vec![Query::Direct { file: 1 }, Query::Null],
                answers: vec![vec![9, 8, 7, 6], vec![]],
                decoded: Some(vec![9, 8, 7, 6]),
            },
        };
        let mut expected = vec![0, 0, 0, 23];
        expected.extend(b"WPIR");
        expected.extend([1, 2, 2, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 2]);
        expected.extend([0, 0, 0, 3, 1, 0, 0]);
        expected.extend([0, 0, 0, 2, 1, 1]);
        expected.extend([0, 0, 0, 1, 0]);
        expected.extend([0, 0, 0, 4, 9, 8, 7, 6]);
        expected.extend([0, 0, 0, 0]);
        expected.extend([0, 0, 0, 5, 1, 9, 8, 7, 6]);
        assert_eq!(t.to_bytes().unwrap(), expected);
        assert_eq!(Transcript::from_bytes(&expected).unwrap(), t);
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode_query(&[7]).is_err());
        assert!(decode_query(&[1, 0, 0]).is_err());
        assert!(Transcript::from_bytes(b"\0\0\0\x04XXXX").is_err());
    }

    proptest! {
        #[test]
        fn real_runs_round_trip(seed in any::<u64>(), trial in 0u64..1000, n in 2usize..4, m in 2usize..4) {
            let params = SchemeParams::replicated(n, m).unwrap();
            let lib = build_library(&params, seed).unwrap();
            let p = params.distribution(vec![1.0 / m as f64; m]).unwrap();
            let record = execute_trial(&params, &lib, &p, seed, trial).unwrap();
            let t = Transcript { n_servers: n, n_files: m, record };
            let bytes = t.to_bytes().unwrap();
            prop_assert_eq!(Transcript::from_bytes(&bytes).unwrap(), t);
        }
    }
}

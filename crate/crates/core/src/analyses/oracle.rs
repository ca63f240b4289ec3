use crate::analyses::PartialOrderKind;
use crate::trace::{Op, Trace};
use crate::vclock::{Clk, VectorTime};

/// Largest trace the explicit closure accepts.
pub const ORACLE_MAX_EVENTS: usize = 5000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("trace has {events} events; the closure oracle accepts at most {ORACLE_MAX_EVENTS}")]
    TooLarge { events: usize },
}

/// Reflexive transitive closure of a partial order's generating edges.
#[derive(Debug, Clone)]
pub struct Closure {
    n: usize,
    words: usize,
    // row e holds every f with f ≤ e
    bits: Vec<u64>,
}

impl Closure {
    /// Builds the generating edges of `po` and closes them.
    ///
    /// Edges always point forward in the trace, so one pass in trace order
    /// computes the closure.
    pub fn build(trace: &Trace, po: PartialOrderKind) -> Result<Closure, OracleError> {
        let n = trace.len();
        if n > ORACLE_MAX_EVENTS {
            return Err(OracleError::TooLarge { events: n });
        }
        let words = n.div_ceil(64);
        let mut c = Closure {
            n,
            words,
            bits: vec![0; n * words],
        };
        let ev = trace.events();
        let mut last_of_thread: Vec<Option<usize>> = vec![None; trace.thread_count()];
        let mut releases: Vec<Vec<usize>> = vec![Vec::new(); trace.lock_count()];
        let mut last_write: Vec<Option<usize>> = vec![None; trace.var_count()];
        let mut accesses: Vec<Vec<usize>> = vec![Vec::new(); trace.var_count()];
        let mut preds = Vec::new();

        for e in ev {
            preds.clear();
            if let Some(p) = last_of_thread[e.tid.index()] {
                preds.push(p);
            }
            match e.op {
                Op::Acquire(l) => preds.extend_from_slice(&releases[l.index()]),
                Op::Release(l) => releases[l.index()].push(e.idx),
                Op::Read(x) | Op::Write(x) => {
                    let xi = x.index();
                    match po {
                        PartialOrderKind::Hb => {}
                        PartialOrderKind::Shb => {
                            if let (Op::Read(_), Some(w)) = (e.op, last_write[xi]) {
                                preds.push(w);
                            }
                        }
                        PartialOrderKind::Maz => preds.extend(
                            accesses[xi]
                                .iter()
                                .copied()
                                .filter(|&f| ev[f].conflicts_with(e)),
                        ),
                    }
                    if e.op.is_write() {
                        last_write[xi] = Some(e.idx);
                    }
                    accesses[xi].push(e.idx);
                }
            }
            last_of_thread[e.tid.index()] = Some(e.idx);

            let row = e.idx * words;
            c.bits[row + e.idx / 64] |= 1 << (e.idx % 64);
            for &p in &preds {
                let (lo, hi) = c.bits.split_at_mut(row);
                let src = &lo[p * words..p * words + words];
                for (d, s) in hi[..words].iter_mut().zip(src) {
                    *d |= s;
                }
            }
        }
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Whether `f ≤ e`.
    pub fn reaches(&self, f: usize, e: usize) -> bool {
        self.bits[e * self.words + f / 64] >> (f % 64) & 1 == 1
    }

    /// Events below `e`, in trace order.
    pub fn predecessors(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        let row = &self.bits[e * self.words..(e + 1) * self.words];
        row.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64)
                .filter(move |b| bits >> b & 1 == 1)
                .map(move |b| w * 64 + b)
        })
    }
}

/// Per-event timestamps `TS(e)[t] = max { lt(f) : f ≤ e, tid(f) = t }`,
/// computed from the explicit closure.
pub fn oracle_timestamps(trace: &Trace, po: PartialOrderKind) -> Result<Vec<VectorTime>, OracleError> {
    let closure = Closure::build(trace, po)?;
    let lt = trace.local_times();
    let k = trace.thread_count();
    let ev = trace.events();
    Ok((0..trace.len())
        .map(|e| {
            let mut v: Vec<Clk> = vec![0; k];
            for f in closure.predecessors(e) {
                let t = ev[f].tid.index();
                v[t] = v[t].max(lt[f]);
            }
            VectorTime(v)
        })
        .collect())
}

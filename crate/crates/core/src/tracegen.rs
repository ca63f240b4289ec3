//! Deterministic synthetic traces over four lock-communication topologies.
//!
//! Every round is an `acq`/`rel` pair (two pairs for the star and pairwise
//! patterns). Randomness comes from a splitmix64 stream, so a `(spec, seed)`
//! pair always yields the same trace.

use std::fmt;
use std::str::FromStr;

use crate::trace::{LockId, Op, ThreadId, Trace, TraceBuilder, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pattern {
    /// Every round is a critical section on one global lock.
    SingleLock,
    /// Fifty locks; the first fifth of the threads are picked five times as often.
    SkewedLocks,
    /// Thread 0 is a server sharing lock `l{i}` with each client `t{i}`.
    Star,
    /// Every pair of threads shares a private lock.
    Pairwise,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [
        Pattern::SingleLock,
        Pattern::SkewedLocks,
        Pattern::Star,
        Pattern::Pairwise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::SingleLock => "single-lock",
            Pattern::SkewedLocks => "skewed-locks",
            Pattern::Star => "star",
            Pattern::Pairwise => "pairwise",
        }
    }

    fn round_len(self) -> usize {
        match self {
            Pattern::SingleLock | Pattern::SkewedLocks => 2,
            Pattern::Star | Pattern::Pairwise => 4,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single-lock" | "single" => Ok(Pattern::SingleLock),
            "skewed-locks" | "skewed" => Ok(Pattern::SkewedLocks),
            "star" => Ok(Pattern::Star),
            "pairwise" => Ok(Pattern::Pairwise),
            _ => Err(format!(
                "unknown pattern `{s}` (expected single-lock|skewed-locks|star|pairwise)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub pattern: Pattern,
    pub threads: usize,
    pub events: usize,
    pub seed: u64,
    pub lock_count: usize,
    pub hot_fraction: f64,
    pub hot_weight: u64,
}

impl GenSpec {
    pub fn new(pattern: Pattern, threads: usize, events: usize, seed: u64) -> Self {
        GenSpec {
            pattern,
            threads,
            events,
            seed,
            lock_count: 50,
            hot_fraction: 0.2,
            hot_weight: 5,
        }
    }

    /// Events actually produced: `events` rounded down to whole rounds.
    pub fn emitted_events(&self) -> usize {
        let r = self.pattern.round_len();
        self.events / r * r
    }

    /// Locks the generated trace declares.
    pub fn emitted_locks(&self) -> usize {
        let k = self.threads;
        match self.pattern {
            Pattern::SingleLock => 1,
            Pattern::SkewedLocks => self.lock_count,
            Pattern::Star => k - 1,
            Pattern::Pairwise => k * (k - 1) / 2,
        }
    }

    fn hot_threads(&self) -> usize {
        ((self.hot_fraction * self.threads as f64).ceil() as usize).min(self.threads)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("at least 2 threads are required, got {0}")]
    TooFewThreads(usize),
    #[error("at least 2 events are required, got {0}")]
    TooFewEvents(usize),
    #[error("skewed pattern needs at least one lock")]
    NoLocks,
    #[error("hot fraction must lie in [0, 1], got {0}")]
    HotFraction(f64),
    #[error("hot weight must be at least 1")]
    HotWeight,
}

/// The splitmix64 generator (Steele, Lea and Flood constants).
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform value in `0..n` by rejection, so there is no modulo bias.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }
}

pub fn generate(spec: &GenSpec) -> Result<Trace, GenError> {
    let k = spec.threads;
    if k < 2 {
        return Err(GenError::TooFewThreads(k));
    }
    if spec.events < 2 {
        return Err(GenError::TooFewEvents(spec.events));
    }
    if spec.pattern == Pattern::SkewedLocks {
        if spec.lock_count == 0 {
            return Err(GenError::NoLocks);
        }
        if !(0.0..=1.0).contains(&spec.hot_fraction) {
            return Err(GenError::HotFraction(spec.hot_fraction));
        }
        if spec.hot_weight == 0 {
            return Err(GenError::HotWeight);
        }
    }

    let mut rng = SplitMix64::new(spec.seed);
    let mut b = TraceBuilder::new();
    // Interning order fixes ids: thread i is t{i}, lock i is l{i}.
    let threads: Vec<ThreadId> = (0..k).map(|i| b.thread(&format!("t{i}"))).collect();
    let locks: Vec<LockId> = (0..spec.emitted_locks())
        .map(|i| b.lock(&format!("l{i}")))
        .collect();
    let section = |b: &mut TraceBuilder, t: usize, l: LockId| {
        b.push(threads[t], Op::Acquire(l));
        b.push(threads[t], Op::Release(l));
    };

    let rounds = spec.emitted_events() / spec.pattern.round_len();
    let hot = spec.hot_threads();
    let total_weight = hot as u64 * spec.hot_weight + (k - hot) as u64;
    for _ in 0..rounds {
        match spec.pattern {
            Pattern::SingleLock => {
                let t = rng.below(k as u64) as usize;
                section(&mut b, t, locks[0]);
            }
            Pattern::SkewedLocks => {
                let w = rng.below(total_weight);
                let t = if w < hot as u64 * spec.hot_weight {
                    (w / spec.hot_weight) as usize
                } else {
                    hot + (w - hot as u64 * spec.hot_weight) as usize
                };
                let l = rng.below(spec.lock_count as u64) as usize;
                section(&mut b, t, locks[l]);
            }
            Pattern::Star => {
                let client = 1 + rng.below(k as u64 - 1) as usize;
                let l = locks[client - 1];
                section(&mut b, client, l);
                section(&mut b, 0, l);
            }
            Pattern::Pairwise => {
                let p = rng.below((k * (k - 1) / 2) as u64) as usize;
                let (i, j) = unrank_pair(p, k);
                let l = locks[p];
                section(&mut b, i, l);
                section(&mut b, j, l);
            }
        }
    }
    Ok(b.build())
}

/// Parameters of [`random_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSpec {
    pub threads: usize,
    pub locks: usize,
    pub vars: usize,
    pub events: usize,
    pub seed: u64,
}

/// A random valid trace mixing critical sections and unprotected accesses.
///
/// Each step picks a thread uniformly; it releases one of its held locks
/// with probability 1/5, tries to acquire a random lock with probability
/// 1/5 (falling back to an access when the lock is taken) and otherwise
/// reads or writes a random variable. All ids are interned up front, so
/// the trace declares exactly the requested thread, lock and variable
/// counts.
pub fn random_trace(spec: &RandomSpec) -> Trace {
    assert!(spec.threads >= 1 && spec.vars >= 1, "need a thread and a variable");
    let mut rng = SplitMix64::new(spec.seed);
    let mut b = TraceBuilder::new();
    let threads: Vec<ThreadId> = (0..spec.threads).map(|i| b.thread(&format!("t{i}"))).collect();
    let locks: Vec<LockId> = (0..spec.locks).map(|i| b.lock(&format!("l{i}"))).collect();
    let vars: Vec<VarId> = (0..spec.vars).map(|i| b.var(&format!("x{i}"))).collect();
    let mut holder: Vec<Option<usize>> = vec![None; spec.locks];
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); spec.threads];

    while b.len() < spec.events {
        let t = rng.below(spec.threads as u64) as usize;
        let r = rng.below(5);
        if r == 0 && !held[t].is_empty() {
            let i = rng.below(held[t].len() as u64) as usize;
            let l = held[t].swap_remove(i);
            holder[l] = None;
            b.push(threads[t], Op::Release(locks[l]));
            continue;
        }
        if r == 1 && spec.locks > 0 {
            let l = rng.below(spec.locks as u64) as usize;
            if holder[l].is_none() {
                holder[l] = Some(t);
                held[t].push(l);
                b.push(threads[t], Op::Acquire(locks[l]));
                continue;
            }
        }
        let x = vars[rng.below(spec.vars as u64) as usize];
        let op = if rng.below(2) == 0 { Op::Read(x) } else { Op::Write(x) };
        b.push(threads[t], op);
    }
    b.build()
}

/// Maps `0..k(k-1)/2` onto pairs `i < j` in lexicographic order.
fn unrank_pair(mut p: usize, k: usize) -> (usize, usize) {
    for i in 0..k {
        let row = k - 1 - i;
        if p < row {
            return (i, i + 1 + p);
        }
        p -= row;
    }
    unreachable!("pair rank out of range")
}

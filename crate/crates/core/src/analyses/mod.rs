//! Streaming partial-order engines (HB, SHB, MAZ) over any [`LogicalClock`],
//! with epoch-based race checks and an explicit-closure oracle.

mod engine;
mod oracle;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use engine::{ClockRef, Engine, EngineOptions};
pub use oracle::{oracle_timestamps, Closure, OracleError, ORACLE_MAX_EVENTS};

use crate::clock::{ClockKind, LogicalClock};
use crate::trace::{validate, Trace, VarId, Violation};
use crate::treeclock::TreeClock;
use crate::vclock::{vt_leq, Clk, Epoch, VectorClock, VectorTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartialOrderKind {
    Hb,
    Shb,
    Maz,
}

impl PartialOrderKind {
    pub const ALL: [PartialOrderKind; 3] =
        [PartialOrderKind::Hb, PartialOrderKind::Shb, PartialOrderKind::Maz];

    pub fn name(self) -> &'static str {
        match self {
            PartialOrderKind::Hb => "hb",
            PartialOrderKind::Shb => "shb",
            PartialOrderKind::Maz => "maz",
        }
    }
}

impl fmt::Display for PartialOrderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PartialOrderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hb" => Ok(PartialOrderKind::Hb),
            "shb" => Ok(PartialOrderKind::Shb),
            "maz" => Ok(PartialOrderKind::Maz),
            _ => Err(format!("unknown partial order `{s}` (expected hb|shb|maz)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RaceKind {
    WriteWrite,
    WriteRead,
    ReadWrite,
}

impl RaceKind {
    pub fn name(self) -> &'static str {
        match self {
            RaceKind::WriteWrite => "write-write",
            RaceKind::WriteRead => "write-read",
            RaceKind::ReadWrite => "read-write",
        }
    }
}

/// Two conflicting events left unordered by the run's partial order.
///
/// `earlier` is the epoch of the first access (its thread and local time);
/// `later` is the trace index of the second. `kind` names the later access
/// first: `WriteRead` is a write racing an earlier read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RaceReport {
    pub kind: RaceKind,
    pub earlier: Epoch,
    pub later: usize,
    pub var: VarId,
}

impl fmt::Display for RaceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} race on {}: {} vs event {}",
            self.kind.name(),
            self.var,
            self.earlier,
            self.later
        )
    }
}

/// Operation counters of one engine pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    /// Entries (vector clocks) or nodes (tree clocks) accessed by every
    /// increment, join and copy.
    pub impl_work: u64,
    /// Changed vector-time entries, summed over events and clocks.
    pub vt_work: u64,
    pub joins: u64,
    pub copies: u64,
    pub increments: u64,
    /// SHB last-write copies that took the sublinear path.
    pub monotone_copies: u64,
    /// SHB last-write copies that fell back to a deep copy of a non-empty clock.
    pub deep_copies: u64,
    /// SHB first writes to a variable (copy into an empty clock).
    pub initial_copies: u64,
    /// Monotone copies whose target was not below the source. Only counted
    /// when [`EngineOptions::check_copies`] is set.
    pub copy_violations: u64,
}

/// Flattened per-event timestamps, `k` entries per event.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Timestamps {
    k: usize,
    data: Vec<Clk>,
}

impl Timestamps {
    pub fn with_capacity(k: usize, events: usize) -> Self {
        Timestamps {
            k,
            data: Vec::with_capacity(k * events),
        }
    }

    pub fn from_vector_times(k: usize, times: &[VectorTime]) -> Self {
        let mut ts = Timestamps::with_capacity(k, times.len());
        for v in times {
            let start = ts.data.len();
            ts.data.resize(start + k, 0);
            for (i, &c) in v.0.iter().enumerate().take(k) {
                ts.data[start + i] = c;
            }
        }
        ts
    }

    fn push_from<C: LogicalClock>(&mut self, c: &C) {
        let start = self.data.len();
        self.data.resize(start + self.k, 0);
        c.flatten_into(&mut self.data[start..]);
    }

    pub fn threads(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> &[Clk] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn vector_time(&self, i: usize) -> VectorTime {
        VectorTime::from_slice(self.get(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Clk]> {
        self.data.chunks(self.k.max(1))
    }

    /// Whether event `i`'s timestamp is below event `j`'s.
    pub fn ordered(&self, i: usize, j: usize) -> bool {
        vt_leq(self.get(i), self.get(j))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub record_timestamps: bool,
    pub detect_races: bool,
    pub check_copies: bool,
}

impl RunOptions {
    pub fn full() -> Self {
        RunOptions {
            record_timestamps: true,
            detect_races: true,
            check_copies: true,
        }
    }
}

/// Result of one engine pass over a trace.
#[derive(Debug, Clone)]
pub struct AnalysisRun {
    pub po: PartialOrderKind,
    pub clock: ClockKind,
    pub events: usize,
    pub threads: usize,
    pub timestamps: Option<Timestamps>,
    pub races: Vec<RaceReport>,
    pub stats: RunStats,
    /// Wall time of the engine pass alone.
    pub elapsed: Duration,
}

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("invalid trace: {}", format_violations(.0))]
    InvalidTrace(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    let mut s = v
        .iter()
        .take(3)
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ");
    if v.len() > 3 {
        s.push_str(&format!(" (and {} more)", v.len() - 3));
    }
    s
}

/// Runs one engine over a trace that is already known to be valid.
pub fn run_unchecked<C: LogicalClock>(
    trace: &Trace,
    po: PartialOrderKind,
    opts: RunOptions,
) -> AnalysisRun {
    let mut engine: Engine<C> = Engine::new(
        trace,
        po,
        EngineOptions {
            record_timestamps: opts.record_timestamps,
            detect_races: opts.detect_races,
            check_copies: opts.check_copies,
        },
    );
    let start = Instant::now();
    engine.run(trace);
    let elapsed = start.elapsed();
    let (stats, races, timestamps) = engine.into_parts();
    AnalysisRun {
        po,
        clock: C::KIND,
        events: trace.len(),
        threads: trace.thread_count(),
        timestamps,
        races,
        stats,
        elapsed,
    }
}

pub fn run_with<C: LogicalClock>(
    trace: &Trace,
    po: PartialOrderKind,
    opts: RunOptions,
) -> Result<AnalysisRun, AnalysisError> {
    validate(trace).map_err(AnalysisError::InvalidTrace)?;
    Ok(run_unchecked::<C>(trace, po, opts))
}

pub fn run(
    trace: &Trace,
    po: PartialOrderKind,
    kind: ClockKind,
    opts: RunOptions,
) -> Result<AnalysisRun, AnalysisError> {
    match kind {
        ClockKind::Vector => run_with::<VectorClock>(trace, po, opts),
        ClockKind::Tree => run_with::<TreeClock>(trace, po, opts),
    }
}

pub fn run_hb(trace: &Trace, kind: ClockKind) -> Result<AnalysisRun, AnalysisError> {
    run(trace, PartialOrderKind::Hb, kind, RunOptions::full())
}

pub fn run_shb(trace: &Trace, kind: ClockKind) -> Result<AnalysisRun, AnalysisError> {
    run(trace, PartialOrderKind::Shb, kind, RunOptions::full())
}

pub fn run_maz(trace: &Trace, kind: ClockKind) -> Result<AnalysisRun, AnalysisError> {
    run(trace, PartialOrderKind::Maz, kind, RunOptions::full())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairCount {
    pub count: u64,
    /// Trace indices `(i, j)` with `i < j`, when requested.
    pub pairs: Option<Vec<(usize, usize)>>,
}

/// Counts conflicting event pairs whose timestamps are incomparable.
///
/// Pairs are enumerated per variable, so the cost is quadratic only in the
/// number of accesses to each single variable.
pub fn unordered_conflicting_pairs(
    trace: &Trace,
    timestamps: &Timestamps,
    collect: bool,
) -> PairCount {
    assert_eq!(
        timestamps.len(),
        trace.len(),
        "timestamps must cover every event"
    );
    let mut by_var: Vec<Vec<usize>> = vec![Vec::new(); trace.var_count()];
    for e in trace.events() {
        if let Some(x) = e.op.var() {
            by_var[x.index()].push(e.idx);
        }
    }
    let ev = trace.events();
    let mut out = PairCount {
        count: 0,
        pairs: collect.then(Vec::new),
    };
    for accesses in &by_var {
        for (a, &i) in accesses.iter().enumerate() {
            for &j in &accesses[a + 1..] {
                if !ev[i].conflicts_with(&ev[j]) {
                    continue;
                }
                // i precedes j in the trace, so j ⊑ i is impossible for
                // distinct events of a partial order consistent with it.
                if !timestamps.ordered(i, j) {
                    out.count += 1;
                    if let Some(p) = out.pairs.as_mut() {
                        p.push((i, j));
                    }
                }
            }
        }
    }
    out
}

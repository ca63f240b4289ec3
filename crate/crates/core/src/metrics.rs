//! Work accounting: vt-work (the number of vector-time entry updates any
//! implementation has to perform) against the entries or nodes each clock
//! implementation actually touched.

use std::collections::HashMap;
use std::io;
use std::time::Duration;

use serde::Serialize;

use crate::analyses::{AnalysisError, AnalysisRun, ClockRef, Engine, EngineOptions, PartialOrderKind};
use crate::clock::{ClockKind, LogicalClock};
use crate::trace::{validate, Trace};
use crate::vclock::{Clk, VectorClock};

/// Tree-clock work may exceed vt-work by at most this factor on HB runs.
pub const TC_WORK_FACTOR: u64 = 3;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetricsRecord {
    pub po: Option<PartialOrderKind>,
    pub events: u64,
    pub threads: u64,
    pub vt_work: u64,
    pub tc_work: Option<u64>,
    pub vc_work: Option<u64>,
    pub elapsed: Duration,
}

/// Reads the work counters off a finished run.
pub fn collect(run: &AnalysisRun) -> MetricsRecord {
    let mut m = MetricsRecord {
        po: Some(run.po),
        events: run.events as u64,
        threads: run.threads as u64,
        vt_work: run.stats.vt_work,
        elapsed: run.elapsed,
        ..MetricsRecord::default()
    };
    match run.clock {
        ClockKind::Tree => m.tc_work = Some(run.stats.impl_work),
        ClockKind::Vector => m.vc_work = Some(run.stats.impl_work),
    }
    m
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundViolation {
    VtBelowEvents { vt_work: u64, events: u64 },
    VtAboveCapacity { vt_work: u64, capacity: u64 },
    TreeWork { tc_work: u64, vt_work: u64 },
    VtMismatch { first: u64, second: u64 },
}

impl std::fmt::Display for BoundViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            BoundViolation::VtBelowEvents { vt_work, events } => {
                write!(f, "vt_work {vt_work} < events {events}")
            }
            BoundViolation::VtAboveCapacity { vt_work, capacity } => {
                write!(f, "vt_work {vt_work} > events*threads {capacity}")
            }
            BoundViolation::TreeWork { tc_work, vt_work } => {
                write!(f, "tc_work {tc_work} > {TC_WORK_FACTOR}*vt_work {vt_work}")
            }
            BoundViolation::VtMismatch { first, second } => {
                write!(f, "vt_work differs between clock kinds: {first} vs {second}")
            }
        }
    }
}

impl MetricsRecord {
    /// Combines the records of two runs of the same trace and order.
    pub fn merge(&mut self, other: &MetricsRecord) -> Result<(), BoundViolation> {
        if self.vt_work != other.vt_work {
            return Err(BoundViolation::VtMismatch {
                first: self.vt_work,
                second: other.vt_work,
            });
        }
        self.tc_work = self.tc_work.or(other.tc_work);
        self.vc_work = self.vc_work.or(other.vc_work);
        Ok(())
    }

    pub fn tc_ratio(&self) -> Option<f64> {
        self.tc_work
            .map(|w| w as f64 / self.vt_work.max(1) as f64)
    }

    /// Checks `n ≤ vt_work` on every run, and `vt_work ≤ n·k` and
    /// `tc_work ≤ 3·vt_work` on HB runs.
    ///
    /// SHB and MAZ maintain last-write and read clocks on top of the HB
    /// ones, so a single access can change more than `k` entries; the upper
    /// bound is only checked where it is claimed. Use
    /// [`MetricsRecord::check_bounds_all`] to apply it to every order.
    pub fn check_bounds(&self) -> Vec<BoundViolation> {
        self.bounds(self.po == Some(PartialOrderKind::Hb))
    }

    /// Like [`MetricsRecord::check_bounds`], with `vt_work ≤ n·k` checked
    /// whatever the order.
    pub fn check_bounds_all(&self) -> Vec<BoundViolation> {
        self.bounds(true)
    }

    fn bounds(&self, upper: bool) -> Vec<BoundViolation> {
        let mut out = Vec::new();
        if self.vt_work < self.events {
            out.push(BoundViolation::VtBelowEvents {
                vt_work: self.vt_work,
                events: self.events,
            });
        }
        let capacity = self.events * self.threads;
        if upper && self.vt_work > capacity {
            out.push(BoundViolation::VtAboveCapacity {
                vt_work: self.vt_work,
                capacity,
            });
        }
        if let (Some(PartialOrderKind::Hb), Some(tc)) = (self.po, self.tc_work) {
            if tc > TC_WORK_FACTOR * self.vt_work {
                out.push(BoundViolation::TreeWork {
                    tc_work: tc,
                    vt_work: self.vt_work,
                });
            }
        }
        out
    }
}

/// vt-work by snapshot diff: a flattened copy of every maintained clock is
/// kept next to the engine, and after each event the clocks the engine
/// touched are compared entry by entry against their copy.
pub fn vtwork(trace: &Trace, po: PartialOrderKind) -> Result<u64, AnalysisError> {
    vtwork_with::<VectorClock>(trace, po, false)
}

/// Like [`vtwork`] with a chosen implementation. With `exhaustive`, every
/// clock is diffed after every event instead of only the touched ones.
pub fn vtwork_with<C: LogicalClock>(
    trace: &Trace,
    po: PartialOrderKind,
    exhaustive: bool,
) -> Result<u64, AnalysisError> {
    validate(trace).map_err(AnalysisError::InvalidTrace)?;
    let k = trace.thread_count();
    let mut engine: Engine<C> = Engine::new(trace, po, EngineOptions::default());
    let mut snapshots: HashMap<ClockRef, Vec<Clk>> = HashMap::new();
    let mut buf = vec![0; k];
    let mut total = 0u64;
    let mut diff = |r: ClockRef, c: &C, snaps: &mut HashMap<ClockRef, Vec<Clk>>| {
        c.flatten_into(&mut buf);
        let old = snaps.entry(r).or_insert_with(|| vec![0; k]);
        let mut changed = 0;
        for (o, &n) in old.iter_mut().zip(&buf) {
            if *o != n {
                *o = n;
                changed += 1;
            }
        }
        changed
    };
    for e in trace.events() {
        engine.process(e);
        if exhaustive {
            for (r, c) in engine.clocks() {
                total += diff(r, c, &mut snapshots);
            }
        } else {
            for &r in engine.touched() {
                let c = engine.clock(r).expect("touched clocks exist");
                total += diff(r, c, &mut snapshots);
            }
        }
    }
    Ok(total)
}

/// One CSV row per (trace, po, clock). `time_ms` is the only
/// nondeterministic column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub trace: String,
    pub po: String,
    pub clock: String,
    pub events: u64,
    pub threads: u64,
    pub locks: u64,
    pub vars: u64,
    pub time_ms: String,
    pub races: u64,
    pub pairs_unordered: Option<u64>,
    pub vt_work: u64,
    pub impl_work: u64,
    pub deep_copies: u64,
}

pub const CSV_HEADER: &str =
    "trace,po,clock,events,threads,locks,vars,time_ms,races,pairs_unordered,vt_work,impl_work,deep_copies";

impl CsvRow {
    pub fn new(name: &str, trace: &Trace, run: &AnalysisRun, time: Duration, pairs: Option<u64>) -> Self {
        CsvRow {
            trace: name.to_string(),
            po: run.po.name().to_string(),
            clock: run.clock.name().to_string(),
            events: trace.len() as u64,
            threads: trace.thread_count() as u64,
            locks: trace.lock_count() as u64,
            vars: trace.var_count() as u64,
            time_ms: format!("{:.3}", time.as_secs_f64() * 1e3),
            races: run.races.len() as u64,
            pairs_unordered: pairs,
            vt_work: run.stats.vt_work,
            impl_work: run.stats.impl_work,
            deep_copies: run.stats.deep_copies,
        }
    }
}

/// Appends rows to `out`, writing the header first when `header` is set.
pub fn write_csv<W: io::Write>(out: W, rows: &[CsvRow], header: bool) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyses::{run, RunOptions};
    use crate::trace::{parse_trace, TraceBuilder};
    use crate::treeclock::TreeClock;

    #[test]
    fn single_thread_vt_work_is_n() {
        let t = parse_trace("t0 w x\nt0 r x\nt0 acq l\nt0 rel l\nt0 w y\n").unwrap();
        for po in PartialOrderKind::ALL {
            // copies into lock, last-write and read clocks count as well
            let expected = match po {
                PartialOrderKind::Hb => 6,
                PartialOrderKind::Shb => 8,
                PartialOrderKind::Maz => 9,
            };
            assert_eq!(vtwork(&t, po).unwrap(), expected, "{po}");
        }
        let t = parse_trace("t0 w x\nt0 r y\nt0 r x\n").unwrap();
        assert_eq!(vtwork(&t, PartialOrderKind::Hb).unwrap(), 3);
    }

    #[test]
    fn empty_trace_has_no_work() {
        let t = TraceBuilder::new().build();
        let r = run(&t, PartialOrderKind::Hb, ClockKind::Tree, RunOptions::default()).unwrap();
        let m = collect(&r);
        assert_eq!((m.vt_work, m.tc_work, m.vc_work), (0, Some(0), None));
        assert!(m.check_bounds().is_empty());
    }

    #[test]
    fn snapshot_diff_matches_incremental_counts() {
        let t = parse_trace(
            "t0 acq l\nt0 w x\nt0 rel l\nt1 r x\nt1 acq l\nt1 w x\nt1 rel l\nt2 r x\nt0 w x\nt2 w x\n",
        )
        .unwrap();
        for po in PartialOrderKind::ALL {
            let snap = vtwork(&t, po).unwrap();
            assert_eq!(snap, vtwork_with::<VectorClock>(&t, po, true).unwrap());
            assert_eq!(snap, vtwork_with::<TreeClock>(&t, po, true).unwrap());
            for kind in ClockKind::ALL {
                let r = run(&t, po, kind, RunOptions::default()).unwrap();
                assert_eq!(r.stats.vt_work, snap, "{po} {kind}");
            }
        }
    }

    #[test]
    fn csv_schema() {
        let t = parse_trace("t0 w x\nt1 w x\n").unwrap();
        let r = run(&t, PartialOrderKind::Hb, ClockKind::Vector, RunOptions::full()).unwrap();
        let row = CsvRow::new("two", &t, &r, Duration::from_micros(1500), Some(1));
        let mut out = Vec::new();
        write_csv(&mut out, &[row], true).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("two,hb,vector,2,2,0,1,1.500,1,1,2,2,0"));
    }
}

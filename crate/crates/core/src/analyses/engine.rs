use crate::analyses::{PartialOrderKind, RaceKind, RaceReport, RunStats, Timestamps};
use crate::clock::{CopyPath, LogicalClock, OpStats};
use crate::trace::{Event, LockId, Op, ThreadId, Trace, VarId};
use crate::vclock::{Clk, Epoch};

/// Names one of the clocks an engine maintains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClockRef {
    Thread(ThreadId),
    Lock(LockId),
    LastWrite(VarId),
    Read(ThreadId, VarId),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EngineOptions {
    pub record_timestamps: bool,
    pub detect_races: bool,
    /// Count (instead of trusting) monotone-copy preconditions with a full
    /// `leq` before every monotone copy.
    pub check_copies: bool,
}

/// Per-variable epoch state for the read/write race checks.
#[derive(Debug, Clone, Default)]
struct VarRaceState {
    last_write: Option<Epoch>,
    readers: Vec<ThreadId>,
}

/// Streaming engine for one partial order over one trace.
///
/// Every event first advances its thread's own entry by one, then applies
/// the order-specific clock updates. After [`Engine::process`] returns, the
/// thread's clock holds the event's timestamp.
#[derive(Debug)]
pub struct Engine<C: LogicalClock> {
    po: PartialOrderKind,
    k: usize,
    opts: EngineOptions,
    threads: Vec<C>,
    locks: Vec<C>,
    last_write: Vec<C>,
    // MAZ: clock of the last read of x by t, indexed x * k + t
    reads: Vec<Option<C>>,
    // MAZ: threads that read x since its last write
    lrds: Vec<Vec<ThreadId>>,
    lrds_mark: Vec<bool>,
    race_vars: Vec<VarRaceState>,
    reader_mark: Vec<bool>,
    read_clk: Vec<Clk>,
    races: Vec<RaceReport>,
    stats: RunStats,
    timestamps: Option<Timestamps>,
    touched: Vec<ClockRef>,
    scratch: Vec<Clk>,
}

impl<C: LogicalClock> Engine<C> {
    pub fn new(trace: &Trace, po: PartialOrderKind, opts: EngineOptions) -> Self {
        let k = trace.thread_count();
        let vars = trace.var_count();
        let uses_lw = po != PartialOrderKind::Hb;
        let maz = po == PartialOrderKind::Maz;
        Engine {
            po,
            k,
            opts,
            threads: (0..k).map(|t| C::new_owned(k, ThreadId(t as u32))).collect(),
            locks: (0..trace.lock_count()).map(|_| C::new_empty(k)).collect(),
            last_write: if uses_lw {
                (0..vars).map(|_| C::new_empty(k)).collect()
            } else {
                Vec::new()
            },
            reads: if maz {
                (0..vars * k).map(|_| None).collect()
            } else {
                Vec::new()
            },
            lrds: if maz { vec![Vec::new(); vars] } else { Vec::new() },
            lrds_mark: if maz { vec![false; vars * k] } else { Vec::new() },
            race_vars: if opts.detect_races {
                vec![VarRaceState::default(); vars]
            } else {
                Vec::new()
            },
            reader_mark: if opts.detect_races {
                vec![false; vars * k]
            } else {
                Vec::new()
            },
            read_clk: if opts.detect_races {
                vec![0; vars * k]
            } else {
                Vec::new()
            },
            races: Vec::new(),
            stats: RunStats::default(),
            timestamps: opts
                .record_timestamps
                .then(|| Timestamps::with_capacity(k, trace.len())),
            touched: Vec::new(),
            scratch: vec![0; k],
        }
    }

    pub fn partial_order(&self) -> PartialOrderKind {
        self.po
    }

    pub fn thread_clock(&self, t: ThreadId) -> &C {
        &self.threads[t.index()]
    }

    pub fn clock(&self, r: ClockRef) -> Option<&C> {
        match r {
            ClockRef::Thread(t) => self.threads.get(t.index()),
            ClockRef::Lock(l) => self.locks.get(l.index()),
            ClockRef::LastWrite(x) => self.last_write.get(x.index()),
            ClockRef::Read(t, x) => self
                .reads
                .get(x.index() * self.k + t.index())
                .and_then(|c| c.as_ref()),
        }
    }

    /// Every clock currently maintained, including empty auxiliary ones.
    pub fn clocks(&self) -> impl Iterator<Item = (ClockRef, &C)> + '_ {
        let threads = self
            .threads
            .iter()
            .enumerate()
            .map(|(i, c)| (ClockRef::Thread(ThreadId(i as u32)), c));
        let locks = self
            .locks
            .iter()
            .enumerate()
            .map(|(i, c)| (ClockRef::Lock(LockId(i as u32)), c));
        let lws = self
            .last_write
            .iter()
            .enumerate()
            .map(|(i, c)| (ClockRef::LastWrite(VarId(i as u32)), c));
        let k = self.k.max(1);
        let reads = self.reads.iter().enumerate().filter_map(move |(i, c)| {
            c.as_ref().map(|c| {
                (
                    ClockRef::Read(ThreadId((i % k) as u32), VarId((i / k) as u32)),
                    c,
                )
            })
        });
        threads.chain(locks).chain(lws).chain(reads)
    }

    /// Clocks mutated while processing the most recent event.
    pub fn touched(&self) -> &[ClockRef] {
        &self.touched
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn races(&self) -> &[RaceReport] {
        &self.races
    }

    pub fn into_parts(self) -> (RunStats, Vec<RaceReport>, Option<Timestamps>) {
        (self.stats, self.races, self.timestamps)
    }

    fn touch(&mut self, r: ClockRef) {
        if !self.touched.contains(&r) {
            self.touched.push(r);
        }
    }

    fn account_join(&mut self, s: OpStats) {
        self.stats.joins += 1;
        self.stats.impl_work += s.accessed;
        self.stats.vt_work += s.changed;
    }

    fn account_copy(&mut self, s: OpStats) {
        self.stats.copies += 1;
        self.stats.impl_work += s.accessed;
        self.stats.vt_work += s.changed;
    }

    pub fn process(&mut self, e: &Event) {
        self.touched.clear();
        let t = e.tid;
        let ti = t.index();

        let s = self.threads[ti].increment(1);
        self.stats.increments += 1;
        self.stats.impl_work += s.accessed;
        self.stats.vt_work += s.changed;
        self.touch(ClockRef::Thread(t));

        match e.op {
            Op::Acquire(l) => {
                let s = self.threads[ti].join(&self.locks[l.index()]);
                self.account_join(s);
            }
            Op::Release(l) => {
                self.monotone_copy_lock(t, l);
            }
            Op::Read(x) => {
                if self.opts.detect_races {
                    self.check_read(e, x);
                }
                match self.po {
                    PartialOrderKind::Hb => {}
                    PartialOrderKind::Shb => {
                        let s = self.threads[ti].join(&self.last_write[x.index()]);
                        self.account_join(s);
                    }
                    PartialOrderKind::Maz => self.maz_read(t, x),
                }
            }
            Op::Write(x) => {
                if self.opts.detect_races {
                    self.check_write(e, x);
                }
                match self.po {
                    PartialOrderKind::Hb => {}
                    PartialOrderKind::Shb => self.shb_write(t, x),
                    PartialOrderKind::Maz => self.maz_write(t, x),
                }
            }
        }

        if let Some(ts) = self.timestamps.as_mut() {
            ts.push_from(&self.threads[ti]);
        }
    }

    pub fn run(&mut self, trace: &Trace) {
        for e in trace.events() {
            self.process(e);
        }
    }

    fn monotone_copy_lock(&mut self, t: ThreadId, l: LockId) {
        let (src, dst) = (&self.threads[t.index()], &mut self.locks[l.index()]);
        if self.opts.check_copies && !dst.leq(src) {
            self.stats.copy_violations += 1;
        }
        let s = dst.monotone_copy(src);
        self.account_copy(s);
        self.touch(ClockRef::Lock(l));
    }

    fn shb_write(&mut self, t: ThreadId, x: VarId) {
        let src = &self.threads[t.index()];
        let dst = &mut self.last_write[x.index()];
        let first = dst.is_bottom();
        let (path, s) = dst.copy_check_monotone(src);
        match path {
            CopyPath::Monotone => self.stats.monotone_copies += 1,
            CopyPath::Deep if first => self.stats.initial_copies += 1,
            CopyPath::Deep => self.stats.deep_copies += 1,
            CopyPath::Flat => {}
        }
        self.account_copy(s);
        self.touch(ClockRef::LastWrite(x));
    }

    fn maz_read(&mut self, t: ThreadId, x: VarId) {
        let ti = t.index();
        let s = self.threads[ti].join(&self.last_write[x.index()]);
        self.account_join(s);

        let slot = x.index() * self.k + ti;
        let src = &self.threads[ti];
        let dst = self.reads[slot].get_or_insert_with(|| C::new_empty(self.k));
        if self.opts.check_copies && !dst.leq(src) {
            self.stats.copy_violations += 1;
        }
        let s = dst.monotone_copy(src);
        self.account_copy(s);
        self.touch(ClockRef::Read(t, x));

        if !self.lrds_mark[slot] {
            self.lrds_mark[slot] = true;
            self.lrds[x.index()].push(t);
        }
    }

    fn maz_write(&mut self, t: ThreadId, x: VarId) {
        let ti = t.index();
        let xi = x.index();
        let readers = std::mem::take(&mut self.lrds[xi]);

        if readers.is_empty() {
            let s = self.threads[ti].join(&self.last_write[xi]);
            self.account_join(s);
        } else {
            // Several joins into one clock may move the same entry more than
            // once; count changed entries over the whole sequence.
            self.threads[ti].flatten_into(&mut self.scratch);
            let mut s = self.threads[ti].join(&self.last_write[xi]);
            self.stats.joins += 1;
            for &r in &readers {
                let slot = xi * self.k + r.index();
                self.lrds_mark[slot] = false;
                if let Some(rc) = self.reads[slot].as_ref() {
                    s += self.threads[ti].join(rc);
                    self.stats.joins += 1;
                }
            }
            self.stats.impl_work += s.accessed;
            let c = &self.threads[ti];
            let changed = self
                .scratch
                .iter()
                .enumerate()
                .filter(|&(u, &old)| c.get(ThreadId(u as u32)) != old)
                .count() as u64;
            self.stats.vt_work += changed;
        }
        let mut readers = readers;
        readers.clear();
        self.lrds[xi] = readers;

        let (src, dst) = (&self.threads[ti], &mut self.last_write[xi]);
        if self.opts.check_copies && !dst.leq(src) {
            self.stats.copy_violations += 1;
        }
        let s = dst.monotone_copy(src);
        self.account_copy(s);
        self.touch(ClockRef::LastWrite(x));
    }

    fn check_read(&mut self, e: &Event, x: VarId) {
        let t = e.tid;
        let c = &self.threads[t.index()];
        let st = &mut self.race_vars[x.index()];
        if let Some(w) = st.last_write {
            if c.get(w.tid) < w.clk {
                self.races.push(RaceReport {
                    kind: RaceKind::ReadWrite,
                    earlier: w,
                    later: e.idx,
                    var: x,
                });
            }
        }
        let slot = x.index() * self.k + t.index();
        self.read_clk[slot] = c.get(t);
        if !self.reader_mark[slot] {
            self.reader_mark[slot] = true;
            st.readers.push(t);
        }
    }

    fn check_write(&mut self, e: &Event, x: VarId) {
        let t = e.tid;
        let c = &self.threads[t.index()];
        let st = &mut self.race_vars[x.index()];
        if let Some(w) = st.last_write {
            if c.get(w.tid) < w.clk {
                self.races.push(RaceReport {
                    kind: RaceKind::WriteWrite,
                    earlier: w,
                    later: e.idx,
                    var: x,
                });
            }
        }
        let base = x.index() * self.k;
        let mut reported = false;
        for &r in &st.readers {
            let rclk = self.read_clk[base + r.index()];
            if !reported && c.get(r) < rclk {
                self.races.push(RaceReport {
                    kind: RaceKind::WriteRead,
                    earlier: Epoch::new(r, rclk),
                    later: e.idx,
                    var: x,
                });
                reported = true;
            }
            self.reader_mark[base + r.index()] = false;
        }
        st.readers.clear();
        st.last_write = Some(Epoch::new(t, c.get(t)));
    }
}

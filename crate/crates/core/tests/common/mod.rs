//! Brute-force oracles and corpus builders shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use treeclock::analyses::{Closure, PartialOrderKind, RaceKind};
use treeclock::trace::{Op, ThreadId, Trace, TraceBuilder};
use treeclock::tracegen::{random_trace, RandomSpec, SplitMix64};
use treeclock::treeclock::NodeView;
use treeclock::vclock::Clk;
use treeclock::{LogicalClock, TreeClock};

/// Random traces within the given limits. Thread counts start at 1.
pub fn corpus(count: usize, max_events: usize, max_threads: usize, max_locks: usize, max_vars: usize, seed: u64) -> Vec<Trace> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|_| {
            let spec = RandomSpec {
                threads: 1 + rng.below(max_threads as u64) as usize,
                locks: rng.below(max_locks as u64 + 1) as usize,
                vars: 1 + rng.below(max_vars as u64) as usize,
                events: 1 + rng.below(max_events as u64) as usize,
                seed: rng.next_u64(),
            };
            random_trace(&spec)
        })
        .collect()
}

/// Every access sits in a critical section of one global lock, so no two
/// conflicting accesses are HB-unordered.
pub fn protected_trace(threads: usize, vars: usize, sections: usize, seed: u64) -> Trace {
    let mut rng = SplitMix64::new(seed);
    let mut b = TraceBuilder::new();
    for _ in 0..sections {
        let t = format!("t{}", rng.below(threads as u64));
        b.acquire(&t, "g");
        for _ in 0..1 + rng.below(3) {
            let x = format!("x{}", rng.below(vars as u64));
            if rng.below(2) == 0 {
                b.read(&t, &x);
            } else {
                b.write(&t, &x);
            }
        }
        b.release(&t, "g");
    }
    b.build()
}

/// Whether `f` is known to event `e` before `e` applies its own joins:
/// either an earlier event of the same thread, or below `e`'s thread
/// predecessor in the closure.
fn known_before(trace: &Trace, closure: &Closure, prev: &[Option<usize>], f: usize, e: usize) -> bool {
    let ev = trace.events();
    if ev[f].tid == ev[e].tid {
        return f < e;
    }
    match prev[e] {
        Some(p) => closure.reaches(f, p),
        None => false,
    }
}

fn thread_predecessors(trace: &Trace) -> Vec<Option<usize>> {
    let mut last: Vec<Option<usize>> = vec![None; trace.thread_count()];
    trace
        .events()
        .iter()
        .map(|e| {
            let p = last[e.tid.index()];
            last[e.tid.index()] = Some(e.idx);
            p
        })
        .collect()
}

/// Race reports `(kind, earlier event, later event)` from the closure:
/// a read races the last write if that write is unknown to it; a write
/// races the last write likewise, and the first (in first-read order)
/// thread whose latest read since the last write is unknown to it.
pub fn oracle_races(trace: &Trace, po: PartialOrderKind) -> BTreeSet<(RaceKind, usize, usize)> {
    let closure = Closure::build(trace, po).expect("small trace");
    let prev = thread_predecessors(trace);
    let mut out = BTreeSet::new();
    let nvars = trace.var_count();
    let mut last_write: Vec<Option<usize>> = vec![None; nvars];
    // per variable: (thread, index of its latest read) in first-read order
    let mut readers: Vec<Vec<(ThreadId, usize)>> = vec![Vec::new(); nvars];
    for e in trace.events() {
        let (x, write) = match e.op {
            Op::Read(x) => (x.index(), false),
            Op::Write(x) => (x.index(), true),
            _ => continue,
        };
        if let Some(w) = last_write[x] {
            if !known_before(trace, &closure, &prev, w, e.idx) {
                let kind = if write { RaceKind::WriteWrite } else { RaceKind::ReadWrite };
                out.insert((kind, w, e.idx));
            }
        }
        if write {
            if let Some(&(_, r)) = readers[x]
                .iter()
                .find(|&&(_, r)| !known_before(trace, &closure, &prev, r, e.idx))
            {
                out.insert((RaceKind::WriteRead, r, e.idx));
            }
            readers[x].clear();
            last_write[x] = Some(e.idx);
        } else {
            match readers[x].iter_mut().find(|(t, _)| *t == e.tid) {
                Some(slot) => slot.1 = e.idx,
                None => readers[x].push((e.tid, e.idx)),
            }
        }
    }
    out
}

/// Maps an epoch back to the trace index of the event it names.
pub fn epoch_index(trace: &Trace) -> impl Fn(ThreadId, Clk) -> usize + '_ {
    let lt = trace.local_times();
    let mut table = std::collections::HashMap::new();
    for e in trace.events() {
        table.insert((e.tid, lt[e.idx]), e.idx);
    }
    move |t, c| table[&(t, c)]
}

/// Consecutive writes `(w_prev, w)` to the same variable with `w_prev`
/// not below `w` in the closure.
pub fn unordered_consecutive_writes(trace: &Trace, po: PartialOrderKind) -> usize {
    let closure = Closure::build(trace, po).expect("small trace");
    let mut last: Vec<Option<usize>> = vec![None; trace.var_count()];
    let mut n = 0;
    for e in trace.events() {
        if let Op::Write(x) = e.op {
            if let Some(w) = last[x.index()] {
                if !closure.reaches(w, e.idx) {
                    n += 1;
                }
            }
            last[x.index()] = Some(e.idx);
        }
    }
    n
}

/// Reads `r` by a thread other than that of their last write `lw(r)`,
/// with `lw(r)` and `r` unordered by HB.
pub fn last_write_read_races(trace: &Trace) -> usize {
    let closure = Closure::build(trace, PartialOrderKind::Hb).expect("small trace");
    let ev = trace.events();
    let mut last: Vec<Option<usize>> = vec![None; trace.var_count()];
    let mut n = 0;
    for e in ev {
        match e.op {
            Op::Write(x) => last[x.index()] = Some(e.idx),
            Op::Read(x) => {
                if let Some(w) = last[x.index()] {
                    if ev[w].tid != e.tid && !closure.reaches(w, e.idx) {
                        n += 1;
                    }
                }
            }
            _ => {}
        }
    }
    n
}

/// Checks direct and indirect monotonicity of `c` against `other`.
pub fn monotonicity_violation(c: &TreeClock, other: &TreeClock) -> Option<String> {
    let nodes: Vec<NodeView> = c.preorder();
    if nodes.is_empty() {
        return None;
    }
    let k = c.thread_count();
    let mut pos = vec![usize::MAX; k];
    for (i, v) in nodes.iter().enumerate() {
        pos[v.tid.index()] = i;
    }
    let bad: Vec<bool> = nodes.iter().map(|v| v.clk > other.get(v.tid)).collect();
    // strict-descendant badness, accumulated bottom-up
    let mut below = vec![false; nodes.len()];
    for i in (0..nodes.len()).rev() {
        if let Some(p) = nodes[i].parent {
            let pi = pos[p.index()];
            below[pi] |= below[i] || bad[i];
        }
    }
    for (i, v) in nodes.iter().enumerate() {
        if !bad[i] && below[i] {
            return Some(format!("direct: node {} known but a descendant is not", v.tid));
        }
        if let (Some(p), Some(a)) = (v.parent, v.aclk) {
            if a <= other.get(p) && (bad[i] || below[i]) {
                return Some(format!(
                    "indirect: child {} of {} attached at {a} is known by attachment but its subtree is not",
                    v.tid, p
                ));
            }
        }
    }
    None
}

/// Checks that every non-root node of an HB clock names a release whose
/// first remote acquire is `(parent, aclk)`.
pub fn first_remote_acquire_violation(trace: &Trace, c: &TreeClock) -> Option<String> {
    let at = epoch_index(trace);
    let ev = trace.events();
    for v in c.preorder() {
        let (Some(p), Some(a)) = (v.parent, v.aclk) else {
            continue;
        };
        let r = at(v.tid, v.clk);
        let Op::Release(l) = ev[r].op else {
            return Some(format!("node {} clk {} is not a release", v.tid, v.clk));
        };
        let first = ev[r + 1..]
            .iter()
            .find(|e| e.op == Op::Acquire(l) && e.tid != v.tid)
            .map(|e| e.idx);
        let Some(first) = first else {
            return Some(format!("release {r} has no remote acquire"));
        };
        if at(p, a) != first {
            return Some(format!(
                "node {}: ({p}, {a}) is event {} but the first remote acquire of {r} is {first}",
                v.tid,
                at(p, a)
            ));
        }
    }
    None
}

/// `a ⊔ b` on every entry except `mask`, which keeps `a`'s value.
pub fn masked_max(a: &[Clk], b: &[Clk], mask: usize) -> Vec<Clk> {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (&x, &y))| if i == mask { x } else { x.max(y) })
        .collect()
}

/// Pairs `(r, w)` where `w` is the first write after `lw(r)`, by another
/// thread than `r`, with `r` and `w` unordered by HB.
pub fn read_next_write_races(trace: &Trace) -> usize {
    let closure = Closure::build(trace, PartialOrderKind::Hb).expect("small trace");
    let ev = trace.events();
    // reads since the last write of each variable
    let mut pending: Vec<Vec<usize>> = vec![Vec::new(); trace.var_count()];
    let mut n = 0;
    for e in ev {
        match e.op {
            Op::Read(x) => pending[x.index()].push(e.idx),
            Op::Write(x) => {
                for &r in &pending[x.index()] {
                    if ev[r].tid != e.tid && !closure.reaches(r, e.idx) {
                        n += 1;
                    }
                }
                pending[x.index()].clear();
            }
            _ => {}
        }
    }
    n
}

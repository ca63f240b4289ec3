//! Flat vector times and the baseline vector clock.

use std::cmp::Ordering;
use std::fmt;

use crate::clock::{ClockKind, CopyPath, LogicalClock, OpStats};
use crate::trace::ThreadId;

/// Clock values are 64-bit so long traces cannot overflow.
pub type Clk = u64;

/// A mapping from thread ids to clock values. Entries past the end are 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct VectorTime(pub Vec<Clk>);

impl VectorTime {
    pub fn zeros(threads: usize) -> Self {
        VectorTime(vec![0; threads])
    }

    pub fn from_slice(entries: &[Clk]) -> Self {
        VectorTime(entries.to_vec())
    }

    #[inline]
    pub fn get(&self, t: ThreadId) -> Clk {
        self.0.get(t.index()).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Clk] {
        &self.0
    }

    /// Pointwise `≤`, treating missing entries as 0.
    pub fn leq(&self, other: &VectorTime) -> bool {
        vt_leq(&self.0, &other.0)
    }

    pub fn join(&self, other: &VectorTime) -> VectorTime {
        let mut out = self.clone();
        out.join_assign(other);
        out
    }

    pub fn join_assign(&mut self, other: &VectorTime) {
        if other.0.len() > self.0.len() {
            self.0.resize(other.0.len(), 0);
        }
        for (a, &b) in self.0.iter_mut().zip(&other.0) {
            *a = (*a).max(b);
        }
    }

    pub fn incremented(&self, t: ThreadId, by: Clk) -> VectorTime {
        let mut out = self.clone();
        if out.0.len() <= t.index() {
            out.0.resize(t.index() + 1, 0);
        }
        out.0[t.index()] += by;
        out
    }
}

impl PartialOrd for VectorTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self.leq(other), other.leq(self)) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => None,
        }
    }
}

impl fmt::Display for VectorTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

/// Pointwise comparison on raw slices, with implicit trailing zeros.
pub fn vt_leq(a: &[Clk], b: &[Clk]) -> bool {
    a.iter()
        .enumerate()
        .all(|(i, &x)| x <= b.get(i).copied().unwrap_or(0))
}

/// `(tid, clk)` of a single event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Epoch {
    pub tid: ThreadId,
    pub clk: Clk,
}

impl Epoch {
    pub fn new(tid: ThreadId, clk: Clk) -> Self {
        Epoch { tid, clk }
    }

    /// Whether a clock whose entry for `self.tid` is `known` has seen this event.
    #[inline]
    pub fn known_by(self, known: Clk) -> bool {
        self.clk <= known
    }
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.clk, self.tid)
    }
}

/// The classic flat vector clock. Every join and copy touches all `k` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorClock {
    entries: Vec<Clk>,
    owner: Option<ThreadId>,
}

impl VectorClock {
    pub fn entries(&self) -> &[Clk] {
        &self.entries
    }

    pub fn owner(&self) -> Option<ThreadId> {
        self.owner
    }

    pub fn increment_thread(&mut self, t: ThreadId, by: Clk) {
        self.entries[t.index()] += by;
    }

    fn assign(&mut self, other: &Self) -> OpStats {
        let mut changed = 0;
        for (a, &b) in self.entries.iter_mut().zip(&other.entries) {
            if *a != b {
                *a = b;
                changed += 1;
            }
        }
        OpStats {
            accessed: self.entries.len() as u64,
            changed,
        }
    }
}

impl LogicalClock for VectorClock {
    const KIND: ClockKind = ClockKind::Vector;

    fn new_owned(threads: usize, owner: ThreadId) -> Self {
        VectorClock {
            entries: vec![0; threads],
            owner: Some(owner),
        }
    }

    fn new_empty(threads: usize) -> Self {
        VectorClock {
            entries: vec![0; threads],
            owner: None,
        }
    }

    #[inline]
    fn get(&self, t: ThreadId) -> Clk {
        self.entries[t.index()]
    }

    fn is_bottom(&self) -> bool {
        self.entries.iter().all(|&c| c == 0)
    }

    fn increment(&mut self, by: Clk) -> OpStats {
        let owner = self
            .owner
            .expect("increment is only defined on thread-owned clocks");
        self.entries[owner.index()] += by;
        OpStats {
            accessed: 1,
            changed: u64::from(by > 0),
        }
    }

    fn join(&mut self, other: &Self) -> OpStats {
        let mut changed = 0;
        for (a, &b) in self.entries.iter_mut().zip(&other.entries) {
            if b > *a {
                *a = b;
                changed += 1;
            }
        }
        OpStats {
            accessed: self.entries.len() as u64,
            changed,
        }
    }

    fn monotone_copy(&mut self, other: &Self) -> OpStats {
        debug_assert!(
            self.leq(other),
            "monotone copy precondition violated: target is not below source"
        );
        self.assign(other)
    }

    fn copy_check_monotone(&mut self, other: &Self) -> (CopyPath, OpStats) {
        (CopyPath::Flat, self.assign(other))
    }

    fn leq(&self, other: &Self) -> bool {
        vt_leq(&self.entries, &other.entries)
    }

    fn flatten_into(&self, out: &mut [Clk]) {
        out.copy_from_slice(&self.entries);
    }

    fn flatten(&self) -> VectorTime {
        VectorTime(self.entries.clone())
    }

    fn thread_count(&self) -> usize {
        self.entries.len()
    }
}

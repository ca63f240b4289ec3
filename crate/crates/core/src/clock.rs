//! The vector-time interface shared by [`VectorClock`](crate::VectorClock) and
//! [`TreeClock`](crate::TreeClock). Analysis engines are generic over it.

use std::fmt;
use std::str::FromStr;

use crate::trace::ThreadId;
use crate::vclock::{Clk, VectorTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClockKind {
    Vector,
    Tree,
}

impl ClockKind {
    pub const ALL: [ClockKind; 2] = [ClockKind::Vector, ClockKind::Tree];

    pub fn name(self) -> &'static str {
        match self {
            ClockKind::Vector => "vector",
            ClockKind::Tree => "tree",
        }
    }
}

impl fmt::Display for ClockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClockKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vector" | "vc" => Ok(ClockKind::Vector),
            "tree" | "tc" => Ok(ClockKind::Tree),
            _ => Err(format!("unknown clock kind `{s}` (expected vector|tree)")),
        }
    }
}

/// Cost report of a single clock operation.
///
/// `accessed` is the number of entries (vector clocks) or nodes (tree clocks)
/// the operation touched; `changed` is the number of vector-time entries whose
/// value differs afterwards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpStats {
    pub accessed: u64,
    pub changed: u64,
}

impl std::ops::AddAssign for OpStats {
    fn add_assign(&mut self, rhs: Self) {
        self.accessed += rhs.accessed;
        self.changed += rhs.changed;
    }
}

/// Which route a checked copy took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CopyPath {
    /// Target was below the source; the sublinear monotone copy ran.
    Monotone,
    /// Full structural copy.
    Deep,
    /// Flat clocks have a single copy routine.
    Flat,
}

pub trait LogicalClock: Clone + fmt::Debug + Send + Sync {
    const KIND: ClockKind;

    /// Clock owned by thread `owner`; only owned clocks may be incremented.
    fn new_owned(threads: usize, owner: ThreadId) -> Self;

    /// Auxiliary clock holding the bottom vector time.
    fn new_empty(threads: usize) -> Self;

    fn get(&self, t: ThreadId) -> Clk;

    /// True if the clock holds no information at all.
    fn is_bottom(&self) -> bool;

    /// Advances the owner's own entry by `by`.
    fn increment(&mut self, by: Clk) -> OpStats;

    /// `self ← self ⊔ other`.
    fn join(&mut self, other: &Self) -> OpStats;

    /// `self ← other`, assuming `self ⊑ other`.
    fn monotone_copy(&mut self, other: &Self) -> OpStats;

    /// `self ← other` without any precondition.
    fn copy_check_monotone(&mut self, other: &Self) -> (CopyPath, OpStats);

    fn leq(&self, other: &Self) -> bool;

    fn flatten_into(&self, out: &mut [Clk]);

    fn flatten(&self) -> VectorTime {
        let mut v = VectorTime::zeros(self.thread_count());
        self.flatten_into(&mut v.0);
        v
    }

    fn thread_count(&self) -> usize;
}

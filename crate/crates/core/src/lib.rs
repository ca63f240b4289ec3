//! Tree clocks and vector clocks for streaming partial-order analyses of
//! concurrent traces.
//!
//! The crate provides:
//!
//! * [`trace`]: the event model, a line-oriented text format and lock
//!   semantics validation;
//! * [`VectorClock`] and [`TreeClock`], two implementations of the
//!   [`LogicalClock`] interface;
//! * [`analyses`]: single-pass engines for happens-before (HB),
//!   schedulable-happens-before (SHB) and the Mazurkiewicz order (MAZ), with
//!   epoch-based race checks and a brute-force closure oracle;
//! * [`metrics`]: vt-work and per-implementation work accounting;
//! * [`tracegen`]: deterministic synthetic traces over four communication
//!   topologies;
//! * [`cli`]: the `tclock` command line front end.

pub mod analyses;
pub mod cli;
pub mod clock;
pub mod fixtures;
pub mod metrics;
pub mod trace;
pub mod tracegen;
pub mod treeclock;
pub mod vclock;

pub use analyses::{AnalysisRun, PartialOrderKind, RaceKind, RaceReport};
pub use clock::{ClockKind, CopyPath, LogicalClock, OpStats};
pub use trace::{parse_trace, serialize_trace, validate, Event, LockId, Op, ThreadId, Trace, VarId};
pub use treeclock::TreeClock;
pub use vclock::{Clk, Epoch, VectorClock, VectorTime};

//! Small hand-written traces used by tests, examples and `tclock selfcheck`.

use crate::trace::{parse_trace, Trace};

/// Sixteen events over threads t1..t5 and locks l1..l3.
pub const APPENDIX: &str = "\
t1 acq l1
t1 rel l1
t4 acq l2
t4 rel l2
t5 acq l3
t5 rel l3
t3 acq l1
t3 acq l3
t3 rel l3
t3 rel l1
t4 acq l2
t4 rel l2
t2 acq l1
t2 rel l1
t2 acq l2
t2 rel l2
";

/// t4's acquire of d joins a clock in which t3 learned t1 and t2 earlier;
/// the join must not descend into those nodes.
pub const INDIRECT: &str = "\
t1 acq a
t1 rel a
t3 acq a
t3 rel a
t2 acq b
t2 rel b
t3 acq b
t3 rel b
t3 acq c
t3 rel c
t4 acq c
t4 rel c
t3 acq d
t3 rel d
t4 acq d
";

/// Write by t1, unsynchronized read by t2, then a write by t2.
pub const RACY_SHB: &str = "\
t1 w x
t2 r x
t2 w x
";

/// Accesses of every kind, all protected by one lock.
pub const LOCKED: &str = "\
t1 acq m
t1 w x
t1 r y
t1 rel m
t2 acq m
t2 r x
t2 w y
t2 rel m
t3 acq m
t3 w x
t3 w y
t3 rel m
";

pub fn all() -> [(&'static str, &'static str); 4] {
    [
        ("appendix", APPENDIX),
        ("indirect", INDIRECT),
        ("racy-shb", RACY_SHB),
        ("locked", LOCKED),
    ]
}

pub fn load(text: &str) -> Trace {
    parse_trace(text).expect("embedded fixtures parse")
}

//! Join and copy on tree clocks, with the number of nodes each operation
//! touched compared to the vector-clock cost.

use treeclock::{ThreadId, TreeClock};

fn main() {
    let k = 8;
    let t = |i| ThreadId(i);
    // a chain of hand-offs t0 -> t1 -> ... -> t6
    let mut clocks: Vec<TreeClock> = (0..k as u32).map(|i| TreeClock::initialize(k, t(i))).collect();
    for i in 0..k - 2 {
        clocks[i].increment(1);
        let src = clocks[i].clone();
        clocks[i + 1].join(&src);
    }
    clocks[k - 2].increment(1);
    println!("t6 after the chain:\n{}", clocks[k - 2].dump());

    // t7 learns everything once, then only t6's progress
    let mut c7 = clocks[k - 1].clone();
    let first = c7.join(&clocks[k - 2]);
    clocks[k - 2].increment(1);
    let second = c7.join(&clocks[k - 2]);
    println!("first join touched {} nodes, second {} (a vector clock touches {k} each time)", first.accessed, second.accessed);

    // a lock clock below the source takes the monotone path
    let mut lock = TreeClock::empty(k);
    let (path, s) = lock.copy_check_monotone(&c7);
    println!("copy into empty lock: {path:?}, {} nodes", s.accessed);
    c7.increment(1);
    let (path, s) = lock.copy_check_monotone(&c7);
    println!("copy after one step: {path:?}, {} nodes", s.accessed);
}

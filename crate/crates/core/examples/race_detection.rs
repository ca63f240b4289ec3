//! Race detection over a generated trace with unprotected accesses, comparing
//! the reports of the two clock implementations.
//!
//! Usage: cargo run --example race_detection [threads] [events] [seed]

use treeclock::analyses::{run_unchecked, unordered_conflicting_pairs, PartialOrderKind, RunOptions};
use treeclock::tracegen::{random_trace, RandomSpec};
use treeclock::{TreeClock, VectorClock};

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let spec = RandomSpec {
        threads: *args.first().unwrap_or(&4) as usize,
        locks: 2,
        vars: 3,
        events: *args.get(1).unwrap_or(&2000) as usize,
        seed: *args.get(2).unwrap_or(&1),
    };
    let trace = random_trace(&spec);
    for po in PartialOrderKind::ALL {
        let tc = run_unchecked::<TreeClock>(&trace, po, RunOptions::full());
        let vc = run_unchecked::<VectorClock>(&trace, po, RunOptions::full());
        assert_eq!(tc.races, vc.races);
        let pairs = unordered_conflicting_pairs(&trace, tc.timestamps.as_ref().unwrap(), false);
        println!("{po}: {} reported races, {} unordered conflicting pairs", tc.races.len(), pairs.count);
        for r in tc.races.iter().take(3) {
            println!(
                "  {} race on {}: {}@{} vs event {}",
                r.kind.name(),
                trace.var_name(r.var),
                trace.thread_name(r.earlier.tid),
                r.earlier.clk,
                r.later
            );
        }
    }
}

//! HB on generated traces with growing thread counts: vector-clock work
//! per event grows with k, tree-clock work follows vt_work.
//!
//! Usage: cargo run --release --example scalability [events]

use std::time::Instant;

use treeclock::analyses::{run_unchecked, PartialOrderKind, RunOptions};
use treeclock::tracegen::{generate, GenSpec, Pattern};
use treeclock::{LogicalClock, TreeClock, VectorClock};

fn per_event<C: LogicalClock>(trace: &treeclock::Trace) -> (f64, f64, f64) {
    let start = Instant::now();
    let run = run_unchecked::<C>(trace, PartialOrderKind::Hb, RunOptions::default());
    let n = trace.len() as f64;
    (run.stats.impl_work as f64 / n, run.stats.vt_work as f64 / n, start.elapsed().as_secs_f64() * 1e3)
}

fn main() {
    let events = std::env::args().nth(1).map_or(100_000, |a| a.parse().expect("event count"));
    println!("{:<13} {:>4} {:>8} {:>8} {:>8} {:>9} {:>9}", "pattern", "k", "vt/n", "tc/n", "vc/n", "tc ms", "vc ms");
    for pattern in Pattern::ALL {
        for k in [10, 40, 160] {
            let trace = generate(&GenSpec::new(pattern, k, events, 1)).expect("valid spec");
            let (tc, vt, tms) = per_event::<TreeClock>(&trace);
            let (vc, _, vms) = per_event::<VectorClock>(&trace);
            println!("{:<13} {k:>4} {vt:>8.2} {tc:>8.2} {vc:>8.2} {tms:>9.1} {vms:>9.1}", pattern.to_string());
        }
    }
}

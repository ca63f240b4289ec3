//! Work counters per order and clock kind: vt_work is the inherent cost of
//! the order, tc_work and vc_work what each clock spent on it.

use treeclock::analyses::{run_unchecked, PartialOrderKind, RunOptions};
use treeclock::metrics::collect;
use treeclock::tracegen::{generate, random_trace, GenSpec, Pattern, RandomSpec};
use treeclock::{Trace, TreeClock, VectorClock};

fn report(name: &str, trace: &Trace, orders: &[PartialOrderKind]) {
    for &po in orders {
        let mut m = collect(&run_unchecked::<TreeClock>(trace, po, RunOptions::default()));
        m.merge(&collect(&run_unchecked::<VectorClock>(trace, po, RunOptions::default())))
            .expect("both clocks report the same vt_work");
        println!(
            "{name:<13} {:>4} {:>4} {:>10} {:>10} {:>10} {:>6.2}",
            trace.thread_count(),
            po.to_string(),
            m.vt_work,
            m.tc_work.unwrap(),
            m.vc_work.unwrap(),
            m.tc_ratio().unwrap()
        );
        for v in m.check_bounds() {
            println!("  bound violated: {v}");
        }
    }
}

fn main() {
    println!("{:<13} {:>4} {:>4} {:>10} {:>10} {:>10} {:>6}", "trace", "k", "po", "vt_work", "tc_work", "vc_work", "tc/vt");
    // lock-only traces: the three orders coincide
    for pattern in Pattern::ALL {
        let trace = generate(&GenSpec::new(pattern, 20, 50_000, 3)).expect("valid spec");
        report(&pattern.to_string(), &trace, &[PartialOrderKind::Hb]);
    }
    let trace = random_trace(&RandomSpec { threads: 20, locks: 4, vars: 8, events: 50_000, seed: 3 });
    report("random", &trace, &PartialOrderKind::ALL);
}

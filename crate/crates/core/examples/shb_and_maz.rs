//! One trace under HB, SHB and MAZ. SHB orders each read after the write it
//! observes; MAZ also orders every pair of conflicting accesses.

use treeclock::analyses::{run_unchecked, PartialOrderKind, RunOptions};
use treeclock::{parse_trace, TreeClock};

const TRACE: &str = "\
t1 w x
t2 r x
t2 w x
t3 r y
t2 w y
t1 r x
";

fn main() {
    let trace = parse_trace(TRACE).expect("valid trace");
    for po in PartialOrderKind::ALL {
        let run = run_unchecked::<TreeClock>(&trace, po, RunOptions::full());
        let ts = run.timestamps.as_ref().unwrap();
        println!("{po}:");
        for (i, line) in TRACE.lines().enumerate() {
            println!("  e{} {line:<8} {:?}", i + 1, ts.get(i));
        }
        for r in &run.races {
            println!(
                "  {} race on {}: {}@{} vs e{}",
                r.kind.name(),
                trace.var_name(r.var),
                trace.thread_name(r.earlier.tid),
                r.earlier.clk,
                r.later + 1
            );
        }
    }
}

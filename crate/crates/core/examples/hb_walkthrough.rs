//! Computes happens-before over a small lock trace and prints each event's
//! timestamp next to the tree clock of its thread.

use treeclock::analyses::{Engine, EngineOptions, PartialOrderKind};
use treeclock::trace::{Op, Trace};
use treeclock::{fixtures, LogicalClock, TreeClock};

fn describe(trace: &Trace, op: Op) -> String {
    match op {
        Op::Acquire(l) => format!("acq {}", trace.lock_name(l)),
        Op::Release(l) => format!("rel {}", trace.lock_name(l)),
        Op::Read(x) => format!("r {}", trace.var_name(x)),
        Op::Write(x) => format!("w {}", trace.var_name(x)),
    }
}

fn main() {
    let trace = fixtures::load(fixtures::APPENDIX);
    let mut eng: Engine<TreeClock> = Engine::new(&trace, PartialOrderKind::Hb, EngineOptions::default());
    for e in trace.events() {
        eng.process(e);
        let c = eng.thread_clock(e.tid);
        println!("e{:<2} {:<12} {:?}", e.idx + 1, format!("{} {}", trace.thread_name(e.tid), describe(&trace, e.op)), c.flatten().0);
    }
    let last = trace.events().last().unwrap().tid;
    println!("\nfinal clock of {}:", trace.thread_name(last));
    print!("{}", eng.thread_clock(last).dump());
}

//! The `tclock` command line: `analyze`, `gen`, `bench` and `selfcheck`.
//!
//! Exit codes: 0 on success, 1 when runs diverge or a checked bound or
//! oracle fails, 2 on usage and I/O errors.

use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::analyses::{
    oracle_timestamps, run_unchecked, unordered_conflicting_pairs, AnalysisRun, ClockRef, Engine,
    EngineOptions, PartialOrderKind, RunOptions, Timestamps,
};
use crate::clock::ClockKind;
use crate::fixtures;
use crate::metrics::{collect, write_csv, CsvRow};
use crate::trace::{read_trace, validate, write_trace, Trace};
use crate::tracegen::{generate, random_trace, GenSpec, Pattern, RandomSpec};
use crate::treeclock::TreeClock;
use crate::vclock::VectorClock;

/// Environment variable bounding the `bench` worker pool.
pub const WORKERS_ENV: &str = "TCLOCK_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "tclock", version, about = "Tree clocks and vector clocks for trace analyses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run partial-order engines over a trace file.
    Analyze(AnalyzeArgs),
    /// Write a synthetic trace.
    Gen(GenArgs),
    /// Run a pattern × thread-count × clock matrix and report work and time.
    Bench(BenchArgs),
    /// Run the embedded fixtures and a randomized invariant sweep.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClockSel {
    Vector,
    Tree,
    Both,
}

impl ClockSel {
    pub fn kinds(self) -> &'static [ClockKind] {
        match self {
            ClockSel::Vector => &[ClockKind::Vector],
            ClockSel::Tree => &[ClockKind::Tree],
            ClockSel::Both => &ClockKind::ALL,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Partial orders to compute (comma separated: hb, shb, maz).
    #[arg(long, value_delimiter = ',', default_value = "hb")]
    pub po: Vec<PartialOrderKind>,
    #[arg(long, value_enum, default_value = "both")]
    pub clock: ClockSel,
    #[arg(long)]
    pub input: PathBuf,
    /// Append one CSV row per run to this file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Print every race report.
    #[arg(long)]
    pub races: bool,
    /// Compare timestamps against the explicit closure (small traces only).
    #[arg(long)]
    pub oracle: bool,
    /// Timed repetitions; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
    /// Name used in the `trace` CSV column; defaults to the input file stem.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub pattern: Pattern,
    #[arg(long)]
    pub threads: usize,
    #[arg(long)]
    pub events: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub lock_count: usize,
    #[arg(long, default_value_t = 0.2)]
    pub hot_fraction: f64,
    #[arg(long, default_value_t = 5)]
    pub hot_weight: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "single-lock,skewed-locks,star,pairwise")]
    pub patterns: Vec<Pattern>,
    #[arg(long, value_delimiter = ',', default_value = "10,40,160")]
    pub threads: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub events: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "hb")]
    pub po: Vec<PartialOrderKind>,
    #[arg(long, value_enum, default_value = "both")]
    pub clock: ClockSel,
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
    /// CSV output; standard output if absent.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Optional SVG bar chart of work relative to vt-work.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Random traces in the invariant sweep.
    #[arg(long, default_value_t = 100)]
    pub traces: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("tclock: {e}");
            2
        }
    }
}

/// Runs one command; `Ok(false)` means a check failed.
pub fn execute(cmd: &Command) -> Result<bool, CliError> {
    match cmd {
        Command::Analyze(a) => analyze(a),
        Command::Gen(g) => gen(g).map(|_| true),
        Command::Bench(b) => bench(b),
        Command::Selfcheck(s) => Ok(selfcheck(s)),
    }
}

pub fn load_trace(path: &Path) -> Result<Trace, CliError> {
    let f = File::open(path).map_err(io_err(path))?;
    let trace = read_trace(BufReader::new(f))
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if let Err(v) = validate(&trace) {
        let first = v.first().map(|x| x.to_string()).unwrap_or_default();
        return Err(CliError::Usage(format!(
            "{}: {} lock-semantics violation(s), first: {first}",
            path.display(),
            v.len()
        )));
    }
    Ok(trace)
}

fn run_kind(trace: &Trace, po: PartialOrderKind, kind: ClockKind, opts: RunOptions) -> AnalysisRun {
    match kind {
        ClockKind::Vector => run_unchecked::<VectorClock>(trace, po, opts),
        ClockKind::Tree => run_unchecked::<TreeClock>(trace, po, opts),
    }
}

/// Median engine time over `repeat` passes without timestamp recording.
pub fn timed(trace: &Trace, po: PartialOrderKind, kind: ClockKind, repeat: usize) -> (Duration, AnalysisRun) {
    let opts = RunOptions {
        detect_races: true,
        ..RunOptions::default()
    };
    let mut times = Vec::with_capacity(repeat.max(1));
    let mut last = None;
    for _ in 0..repeat.max(1) {
        let r = run_kind(trace, po, kind, opts);
        times.push(r.elapsed);
        last = Some(r);
    }
    times.sort();
    (times[times.len() / 2], last.expect("at least one repetition"))
}

fn analyze(a: &AnalyzeArgs) -> Result<bool, CliError> {
    let trace = load_trace(&a.input)?;
    let name = a.name.clone().unwrap_or_else(|| {
        a.input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "trace".into())
    });
    let mut ok = true;
    let mut rows = Vec::new();
    println!(
        "{name}: events={} threads={} locks={} vars={}",
        trace.len(),
        trace.thread_count(),
        trace.lock_count(),
        trace.var_count()
    );

    for &po in &a.po {
        let oracle = if a.oracle {
            let o = oracle_timestamps(&trace, po).map_err(|e| CliError::Usage(e.to_string()))?;
            Some(Timestamps::from_vector_times(trace.thread_count(), &o))
        } else {
            None
        };
        let mut runs: Vec<AnalysisRun> = Vec::new();
        for &kind in a.clock.kinds() {
            let full = run_kind(&trace, po, kind, RunOptions::full());
            let (time, _) = timed(&trace, po, kind, a.repeat);
            let ts = full.timestamps.as_ref().expect("full runs record timestamps");
            let pairs = unordered_conflicting_pairs(&trace, ts, false).count;
            let m = collect(&full);
            println!(
                "  {po} {kind}: races={} pairs_unordered={pairs} vt_work={} impl_work={} deep_copies={} time_ms={:.3}",
                full.races.len(),
                full.stats.vt_work,
                full.stats.impl_work,
                full.stats.deep_copies,
                time.as_secs_f64() * 1e3
            );
            for v in m.check_bounds() {
                println!("  {po} {kind}: bound violated: {v}");
                ok = false;
            }
            if full.stats.copy_violations > 0 {
                println!(
                    "  {po} {kind}: {} monotone copies without target below source",
                    full.stats.copy_violations
                );
                ok = false;
            }
            if a.races {
                for r in &full.races {
                    println!(
                        "    {} race on {}: {}@{} vs event {} ({})",
                        r.kind.name(),
                        trace.var_name(r.var),
                        r.earlier.clk,
                        trace.thread_name(r.earlier.tid),
                        r.later,
                        trace.thread_name(trace.events()[r.later].tid),
                    );
                }
            }
            if let Some(o) = &oracle {
                if o == ts {
                    println!("  {po} {kind}: oracle agrees");
                } else {
                    let first = (0..trace.len()).find(|&i| o.get(i) != ts.get(i)).unwrap_or(0);
                    println!(
                        "  {po} {kind}: oracle DIVERGES at event {first}: engine {} oracle {}",
                        ts.vector_time(first),
                        o.vector_time(first)
                    );
                    ok = false;
                }
            }
            rows.push(CsvRow::new(&name, &trace, &full, time, Some(pairs)));
            runs.push(full);
        }
        if let [x, y] = runs.as_slice() {
            let diverged = divergence(x, y);
            if diverged.is_empty() {
                println!("  {po}: vector and tree clocks agree");
            } else {
                for d in diverged {
                    println!("  {po}: DIVERGENCE: {d}");
                }
                ok = false;
            }
        }
    }

    if let Some(path) = &a.csv {
        let header = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        write_csv(f, &rows, header)?;
    }
    Ok(ok)
}

/// Differences between two runs of one trace and order.
pub fn divergence(a: &AnalysisRun, b: &AnalysisRun) -> Vec<String> {
    let mut out = Vec::new();
    if let (Some(x), Some(y)) = (&a.timestamps, &b.timestamps) {
        if let Some(i) = (0..x.len().min(y.len())).find(|&i| x.get(i) != y.get(i)) {
            out.push(format!(
                "timestamps differ first at event {i}: {} vs {}",
                x.vector_time(i),
                y.vector_time(i)
            ));
        }
    }
    if a.races != b.races {
        out.push(format!(
            "race reports differ: {} vs {}",
            a.races.len(),
            b.races.len()
        ));
    }
    if a.stats.vt_work != b.stats.vt_work {
        out.push(format!(
            "vt_work differs: {} vs {}",
            a.stats.vt_work, b.stats.vt_work
        ));
    }
    out
}

fn gen(g: &GenArgs) -> Result<(), CliError> {
    let spec = GenSpec {
        lock_count: g.lock_count,
        hot_fraction: g.hot_fraction,
        hot_weight: g.hot_weight,
        ..GenSpec::new(g.pattern, g.threads, g.events, g.seed)
    };
    let trace = generate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    match &g.out {
        Some(path) => {
            let f = File::create(path).map_err(io_err(path))?;
            let mut w = BufWriter::new(f);
            write_trace(&trace, &mut w).map_err(io_err(path))?;
            w.flush().map_err(io_err(path))?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write_trace(&trace, &mut w).map_err(io_err(Path::new("<stdout>")))?;
            w.flush().map_err(io_err(Path::new("<stdout>")))?;
        }
    }
    Ok(())
}

/// One finished (pattern, k, po, clock) cell of the bench matrix.
#[derive(Debug, Clone)]
pub struct BenchCell {
    pub pattern: Pattern,
    pub threads: usize,
    pub po: PartialOrderKind,
    pub clock: ClockKind,
    pub time: Duration,
    pub run: AnalysisRun,
    pub row: CsvRow,
}

fn worker_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")))?;
        b = b.num_threads(n.max(1));
    }
    b.build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

pub fn bench_cells(b: &BenchArgs) -> Result<Vec<BenchCell>, CliError> {
    let mut traces = Vec::new();
    for &p in &b.patterns {
        for &k in &b.threads {
            let t = generate(&GenSpec::new(p, k, b.events, b.seed))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            traces.push((p, k, t));
        }
    }
    let mut jobs = Vec::new();
    for (i, (p, k, _)) in traces.iter().enumerate() {
        for &po in &b.po {
            for &kind in b.clock.kinds() {
                jobs.push((i, *p, *k, po, kind));
            }
        }
    }
    let pool = worker_pool()?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|&(i, pattern, k, po, clock)| {
                let trace = &traces[i].2;
                let (time, run) = timed(trace, po, clock, b.repeat);
                let name = format!("{pattern}-k{k}-n{}-s{}", b.events, b.seed);
                let row = CsvRow::new(&name, trace, &run, time, None);
                BenchCell {
                    pattern,
                    threads: k,
                    po,
                    clock,
                    time,
                    run,
                    row,
                }
            })
            .collect()
    }))
}

fn bench(b: &BenchArgs) -> Result<bool, CliError> {
    let cells = bench_cells(b)?;
    let rows: Vec<CsvRow> = cells.iter().map(|c| c.row.clone()).collect();
    match &b.csv {
        Some(path) => write_csv(File::create(path).map_err(io_err(path))?, &rows, true)?,
        None => write_csv(io::stdout().lock(), &rows, true)?,
    }

    let mut ok = true;
    for c in &cells {
        for v in collect(&c.run).check_bounds() {
            eprintln!("{} k={} {} {}: bound violated: {v}", c.pattern, c.threads, c.po, c.clock);
            ok = false;
        }
    }
    eprintln!("pattern        k     po   vc/n      tc/n      vc/vt   tc/vt   speedup");
    for pair in cells.chunks(2) {
        if let [v, t] = pair {
            if v.clock != ClockKind::Vector || t.clock != ClockKind::Tree {
                continue;
            }
            let n = v.run.events.max(1) as f64;
            let vt = v.run.stats.vt_work.max(1) as f64;
            eprintln!(
                "{:<14} {:<5} {:<4} {:<9.2} {:<9.2} {:<7.2} {:<7.2} {:.2}",
                v.pattern.name(),
                v.threads,
                v.po.name(),
                v.run.stats.impl_work as f64 / n,
                t.run.stats.impl_work as f64 / n,
                v.run.stats.impl_work as f64 / vt,
                t.run.stats.impl_work as f64 / vt,
                v.time.as_secs_f64() / t.time.as_secs_f64().max(1e-9),
            );
        }
    }
    if let Some(path) = &b.svg {
        fs::write(path, work_chart(&cells)).map_err(io_err(path))?;
    }
    Ok(ok)
}

/// Grouped bar chart of implementation work over vt-work, one group per
/// (pattern, k, po) and one bar per clock.
pub fn work_chart(cells: &[BenchCell]) -> String {
    const BAR: f64 = 14.0;
    const GAP: f64 = 18.0;
    const HEIGHT: f64 = 260.0;
    const LEFT: f64 = 50.0;
    const TOP: f64 = 30.0;
    let ratio = |c: &BenchCell| c.run.stats.impl_work as f64 / c.run.stats.vt_work.max(1) as f64;
    let max = cells.iter().map(ratio).fold(1.0, f64::max);
    let mut groups: Vec<Vec<&BenchCell>> = Vec::new();
    for c in cells {
        match groups.last_mut() {
            Some(g) if g[0].pattern == c.pattern && g[0].threads == c.threads && g[0].po == c.po => {
                g.push(c)
            }
            _ => groups.push(vec![c]),
        }
    }
    let per = ClockKind::ALL.len() as f64 * BAR + GAP;
    let width = LEFT + per * groups.len() as f64 + 20.0;
    let total_h = TOP + HEIGHT + 90.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{total_h:.0}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{LEFT}" y="16" font-size="12">implementation work / vt-work (vector: grey, tree: blue)</text>"#
    );
    let base = TOP + HEIGHT;
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{base}" x2="{width:.0}" y2="{base}" stroke="black"/>"#
    );
    for tick in [0.25, 0.5, 0.75, 1.0] {
        let y = base - HEIGHT * tick;
        let _ = writeln!(
            s,
            r#"<text x="{:.0}" y="{y:.1}" text-anchor="end">{:.1}</text>"#,
            LEFT - 4.0,
            max * tick
        );
    }
    for (gi, g) in groups.iter().enumerate() {
        let x0 = LEFT + gi as f64 * per + GAP / 2.0;
        for (bi, c) in g.iter().enumerate() {
            let h = HEIGHT * ratio(c) / max;
            let color = match c.clock {
                ClockKind::Vector => "#999999",
                ClockKind::Tree => "#3366cc",
            };
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{BAR}" height="{h:.1}" fill="{color}"><title>{} k={} {} {}: {:.2}</title></rect>"#,
                x0 + bi as f64 * BAR,
                base - h,
                c.pattern,
                c.threads,
                c.po,
                c.clock,
                ratio(c)
            );
        }
        let lx = x0 + BAR;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{:.1}" transform="rotate(60 {lx:.1} {:.1})">{} k={} {}</text>"#,
            base + 12.0,
            base + 12.0,
            g[0].pattern,
            g[0].threads,
            g[0].po
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Checks every structural tree-clock invariant after each event.
fn integrity_sweep(trace: &Trace, po: PartialOrderKind) -> Result<(), String> {
    let mut eng: Engine<TreeClock> = Engine::new(trace, po, EngineOptions::default());
    for e in trace.events() {
        eng.process(e);
        for (r, c) in eng.clocks() {
            if let Err(err) = c.check_integrity() {
                return Err(format!("event {}: {r:?}: {err}", e.idx));
            }
        }
        let own = eng.clock(ClockRef::Thread(e.tid)).expect("thread clock");
        if own.root() != Some(e.tid) {
            return Err(format!("event {}: thread clock lost its root", e.idx));
        }
    }
    Ok(())
}

/// Differential, oracle, bound and structure checks for one trace.
pub fn check_trace(trace: &Trace) -> Vec<String> {
    let mut failures = Vec::new();
    for po in PartialOrderKind::ALL {
        let v = run_unchecked::<VectorClock>(trace, po, RunOptions::full());
        let t = run_unchecked::<TreeClock>(trace, po, RunOptions::full());
        for d in divergence(&v, &t) {
            failures.push(format!("{po}: {d}"));
        }
        for r in [&v, &t] {
            for b in collect(r).check_bounds() {
                failures.push(format!("{po} {}: {b}", r.clock));
            }
            if r.stats.copy_violations > 0 {
                failures.push(format!("{po} {}: monotone copy precondition", r.clock));
            }
        }
        if let Ok(o) = oracle_timestamps(trace, po) {
            let o = Timestamps::from_vector_times(trace.thread_count(), &o);
            if Some(&o) != t.timestamps.as_ref() {
                failures.push(format!("{po}: engine disagrees with closure oracle"));
            }
        }
        if let Err(e) = integrity_sweep(trace, po) {
            failures.push(format!("{po}: {e}"));
        }
    }
    failures
}

fn selfcheck(s: &SelfcheckArgs) -> bool {
    let mut ok = true;
    let mut report = |name: &str, failures: Vec<String>| {
        if failures.is_empty() {
            println!("ok   {name}");
        } else {
            ok = false;
            for f in failures {
                println!("FAIL {name}: {f}");
            }
        }
    };
    for (name, text) in fixtures::all() {
        report(name, check_trace(&fixtures::load(text)));
    }
    let mut failures = Vec::new();
    for i in 0..s.traces {
        let seed = s.seed.wrapping_add(i as u64);
        let spec = RandomSpec {
            threads: 2 + (i % 6),
            locks: 1 + (i % 4),
            vars: 1 + (i % 5),
            events: 50 + (i * 37) % 250,
            seed,
        };
        for f in check_trace(&random_trace(&spec)) {
            failures.push(format!("random seed {seed}: {f}"));
        }
    }
    report(&format!("{} random traces", s.traces), failures);
    let mut failures = Vec::new();
    for p in Pattern::ALL {
        for k in [2, 5, 12] {
            let t = generate(&GenSpec::new(p, k, 400, s.seed)).expect("valid spec");
            for f in check_trace(&t) {
                failures.push(format!("{p} k={k}: {f}"));
            }
        }
    }
    report("generated patterns", failures);
    ok
}

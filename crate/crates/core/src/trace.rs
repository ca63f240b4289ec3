//! Trace data model, the line-oriented text format, and lock-semantics validation.
//!
//! A trace is a sequence of events `⟨i, t, op⟩` where `op` is one of
//! `r(x)`, `w(x)`, `acq(l)` or `rel(l)`. Thread, lock and variable names are
//! interned into dense ids in first-occurrence order, so the same text always
//! yields the same ids.
//!
//! ```text
//! # comment
//! t1 acq l1
//! t1 w x7
//! t1 rel l1
//! t2 r x7
//! ```

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

macro_rules! dense_id {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl From<usize> for $name {
            fn from(i: usize) -> Self {
                $name(i as u32)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

dense_id!(
    /// Dense thread identifier, `0..thread_count`.
    ThreadId
);
dense_id!(
    /// Dense lock identifier, `0..lock_count`.
    LockId
);
dense_id!(
    /// Dense variable identifier, `0..var_count`.
    VarId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Read(VarId),
    Write(VarId),
    Acquire(LockId),
    Release(LockId),
}

impl Op {
    pub fn var(self) -> Option<VarId> {
        match self {
            Op::Read(x) | Op::Write(x) => Some(x),
            _ => None,
        }
    }

    pub fn lock(self) -> Option<LockId> {
        match self {
            Op::Acquire(l) | Op::Release(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_write(self) -> bool {
        matches!(self, Op::Write(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    /// Position in the containing trace.
    pub idx: usize,
    pub tid: ThreadId,
    pub op: Op,
}

impl Event {
    /// Two events conflict when they access the same variable from different
    /// threads and at least one of them is a write.
    pub fn conflicts_with(&self, other: &Event) -> bool {
        match (self.op.var(), other.op.var()) {
            (Some(a), Some(b)) => {
                a == b && self.tid != other.tid && (self.op.is_write() || other.op.is_write())
            }
            _ => false,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: expected `<thread> <op> <target>`, found {found:?}")]
    Syntax { line: usize, found: String },
    #[error("line {line}: unknown operation `{op}`")]
    UnknownOp { line: usize, op: String },
    #[error("line {line}: `{op}` events are not supported by this trace format")]
    Unsupported { line: usize, op: String },
    #[error("line {line}: `{token}` is not a valid {what}")]
    BadToken {
        line: usize,
        token: String,
        what: &'static str,
    },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<io::Error> for ParseError {
    fn from(e: io::Error) -> Self {
        ParseError::Io(e.to_string())
    }
}

#[derive(Debug, Default, Clone)]
struct Interner {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }
}

/// An immutable trace together with its interning tables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    events: Vec<Event>,
    thread_names: Vec<String>,
    lock_names: Vec<String>,
    var_names: Vec<String>,
}

impl Trace {
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn thread_count(&self) -> usize {
        self.thread_names.len()
    }

    pub fn lock_count(&self) -> usize {
        self.lock_names.len()
    }

    pub fn var_count(&self) -> usize {
        self.var_names.len()
    }

    pub fn thread_name(&self, t: ThreadId) -> &str {
        &self.thread_names[t.index()]
    }

    pub fn lock_name(&self, l: LockId) -> &str {
        &self.lock_names[l.index()]
    }

    pub fn var_name(&self, x: VarId) -> &str {
        &self.var_names[x.index()]
    }

    /// 1-based local time of every event: the number of events of the same
    /// thread at or before it.
    pub fn local_times(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.thread_count()];
        self.events
            .iter()
            .map(|e| {
                counts[e.tid.index()] += 1;
                counts[e.tid.index()]
            })
            .collect()
    }

    /// Number of events of each thread.
    pub fn thread_event_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.thread_count()];
        for e in &self.events {
            counts[e.tid.index()] += 1;
        }
        counts
    }
}

/// Incremental trace construction with first-occurrence interning.
#[derive(Debug, Default)]
pub struct TraceBuilder {
    events: Vec<Event>,
    threads: Interner,
    locks: Interner,
    vars: Interner,
}

impl TraceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn thread(&mut self, name: &str) -> ThreadId {
        ThreadId(self.threads.intern(name))
    }

    pub fn lock(&mut self, name: &str) -> LockId {
        LockId(self.locks.intern(name))
    }

    pub fn var(&mut self, name: &str) -> VarId {
        VarId(self.vars.intern(name))
    }

    pub fn push(&mut self, tid: ThreadId, op: Op) -> &mut Self {
        let idx = self.events.len();
        self.events.push(Event { idx, tid, op });
        self
    }

    pub fn acquire(&mut self, thread: &str, lock: &str) -> &mut Self {
        let (t, l) = (self.thread(thread), self.lock(lock));
        self.push(t, Op::Acquire(l))
    }

    pub fn release(&mut self, thread: &str, lock: &str) -> &mut Self {
        let (t, l) = (self.thread(thread), self.lock(lock));
        self.push(t, Op::Release(l))
    }

    pub fn read(&mut self, thread: &str, var: &str) -> &mut Self {
        let (t, x) = (self.thread(thread), self.var(var));
        self.push(t, Op::Read(x))
    }

    pub fn write(&mut self, thread: &str, var: &str) -> &mut Self {
        let (t, x) = (self.thread(thread), self.var(var));
        self.push(t, Op::Write(x))
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn build(self) -> Trace {
        Trace {
            events: self.events,
            thread_names: self.threads.names,
            lock_names: self.locks.names,
            var_names: self.vars.names,
        }
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '$' | ':'))
}

fn is_thread_token(s: &str) -> bool {
    s.len() > 1 && s.starts_with('t') && s[1..].bytes().all(|b| b.is_ascii_digit())
}

fn parse_line(b: &mut TraceBuilder, line_no: usize, raw: &str) -> Result<(), ParseError> {
    let content = match raw.find('#') {
        Some(i) => &raw[..i],
        None => raw,
    };
    let tokens: Vec<&str> = content.split_ascii_whitespace().collect();
    if tokens.is_empty() {
        return Ok(());
    }
    if tokens.len() != 3 {
        return Err(ParseError::Syntax {
            line: line_no,
            found: content.trim().to_owned(),
        });
    }
    let (tid, op, target) = (tokens[0], tokens[1], tokens[2]);
    if !is_thread_token(tid) {
        return Err(ParseError::BadToken {
            line: line_no,
            token: tid.to_owned(),
            what: "thread id",
        });
    }
    match op {
        "r" | "w" | "acq" | "rel" => {}
        "fork" | "join" => {
            return Err(ParseError::Unsupported {
                line: line_no,
                op: op.to_owned(),
            })
        }
        _ => {
            return Err(ParseError::UnknownOp {
                line: line_no,
                op: op.to_owned(),
            })
        }
    }
    if !is_identifier(target) {
        return Err(ParseError::BadToken {
            line: line_no,
            token: target.to_owned(),
            what: "identifier",
        });
    }
    match op {
        "r" => b.read(tid, target),
        "w" => b.write(tid, target),
        "acq" => b.acquire(tid, target),
        _ => b.release(tid, target),
    };
    Ok(())
}

/// Parses a trace from any buffered reader.
pub fn read_trace<R: BufRead>(reader: R) -> Result<Trace, ParseError> {
    let mut b = TraceBuilder::new();
    for (i, line) in reader.lines().enumerate() {
        parse_line(&mut b, i + 1, &line?)?;
    }
    Ok(b.build())
}

pub fn parse_trace(text: &str) -> Result<Trace, ParseError> {
    let mut b = TraceBuilder::new();
    for (i, line) in text.lines().enumerate() {
        parse_line(&mut b, i + 1, line)?;
    }
    Ok(b.build())
}

/// Writes the canonical text form: one `tid op target` line per event.
pub fn write_trace<W: Write>(trace: &Trace, mut out: W) -> io::Result<()> {
    for e in trace.events() {
        let t = trace.thread_name(e.tid);
        match e.op {
            Op::Read(x) => writeln!(out, "{t} r {}", trace.var_name(x))?,
            Op::Write(x) => writeln!(out, "{t} w {}", trace.var_name(x))?,
            Op::Acquire(l) => writeln!(out, "{t} acq {}", trace.lock_name(l))?,
            Op::Release(l) => writeln!(out, "{t} rel {}", trace.lock_name(l))?,
        }
    }
    Ok(())
}

pub fn serialize_trace(trace: &Trace) -> String {
    let mut buf = Vec::with_capacity(trace.len() * 12);
    write_trace(trace, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("trace names are valid UTF-8")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Acquire of a lock that is already held (including by the acquiring thread).
    AcquireHeld { holder: ThreadId },
    ReleaseFree,
    ReleaseByNonHolder { holder: ThreadId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    /// 0-based index of the offending event.
    pub event: usize,
    pub lock: LockId,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::AcquireHeld { holder } => write!(
                f,
                "event {}: acquire of lock {} already held by thread {}",
                self.event, self.lock, holder
            ),
            ViolationKind::ReleaseFree => {
                write!(f, "event {}: release of free lock {}", self.event, self.lock)
            }
            ViolationKind::ReleaseByNonHolder { holder } => write!(
                f,
                "event {}: release of lock {} held by thread {}",
                self.event, self.lock, holder
            ),
        }
    }
}

/// Checks lock semantics and returns every violation found. Locks are not
/// reentrant; a lock still held at the end of the trace is fine.
pub fn validate(trace: &Trace) -> Result<(), Vec<Violation>> {
    let mut holder: Vec<Option<ThreadId>> = vec![None; trace.lock_count()];
    let mut violations = Vec::new();
    for e in trace.events() {
        match e.op {
            Op::Acquire(l) => match holder[l.index()] {
                Some(h) => violations.push(Violation {
                    event: e.idx,
                    lock: l,
                    kind: ViolationKind::AcquireHeld { holder: h },
                }),
                None => holder[l.index()] = Some(e.tid),
            },
            Op::Release(l) => match holder[l.index()] {
                None => violations.push(Violation {
                    event: e.idx,
                    lock: l,
                    kind: ViolationKind::ReleaseFree,
                }),
                Some(h) if h != e.tid => violations.push(Violation {
                    event: e.idx,
                    lock: l,
                    kind: ViolationKind::ReleaseByNonHolder { holder: h },
                }),
                Some(_) => holder[l.index()] = None,
            },
            _ => {}
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

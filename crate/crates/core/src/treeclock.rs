//! Tree clocks.
//!
//! A tree clock stores the same information as a vector clock, one node per
//! thread it knows about, arranged in a rooted tree that records *how* that
//! knowledge was obtained. A node `(tid, clk, aclk)` says the clock knows
//! `tid` up to local time `clk`, and that the parent thread learned it at its
//! own local time `aclk`. Children are kept in descending `aclk` order.
//!
//! Two facts let joins and copies skip work:
//!
//! * if the other clock already knows a node's `clk`, it knows the node's
//!   whole subtree, so the traversal does not descend;
//! * if the other clock knows the parent's time at which a child was
//!   attached, it knows that child's subtree and every later sibling's, so
//!   the traversal stops scanning the sibling list.
//!
//! Nodes live in a dense arena indexed by thread id; all links are indices
//! and all traversals are iterative.

use std::fmt::{self, Write as _};

use crate::clock::{ClockKind, CopyPath, LogicalClock, OpStats};
use crate::trace::ThreadId;
use crate::vclock::{Clk, VectorTime};

const NIL: u32 = u32::MAX;
/// Attachment clock of the root (⊥). Never compared numerically.
const NO_ACLK: Clk = Clk::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Node {
    clk: Clk,
    aclk: Clk,
    parent: u32,
    head: u32,
    next: u32,
    prev: u32,
    present: bool,
}

impl Node {
    const ABSENT: Node = Node {
        clk: 0,
        aclk: NO_ACLK,
        parent: NIL,
        head: NIL,
        next: NIL,
        prev: NIL,
        present: false,
    };
}

/// Read-only view of one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeView {
    pub tid: ThreadId,
    pub clk: Clk,
    /// `None` for the root.
    pub aclk: Option<Clk>,
    pub parent: Option<ThreadId>,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gather {
    Join,
    SubRoot(u32),
    Copy { old_root: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("tree clock integrity violated: {0}")]
pub struct IntegrityError(pub String);

#[derive(Debug, Clone)]
pub struct TreeClock {
    threads: usize,
    nodes: Vec<Node>,
    root: u32,
    len: usize,
    owner: Option<ThreadId>,
    stack: Vec<u32>,
    frames: Vec<(u32, u32)>,
}

impl PartialEq for TreeClock {
    /// Structural equality: same nodes, links and child order.
    fn eq(&self, other: &Self) -> bool {
        let present = |c: &TreeClock| -> Vec<(usize, Node)> {
            c.nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| n.present)
                .map(|(i, n)| (i, *n))
                .collect()
        };
        self.root == other.root && present(self) == present(other)
    }
}

impl TreeClock {
    /// A thread's own clock: a single root node `(t, 0, ⊥)`.
    pub fn initialize(threads: usize, t: ThreadId) -> Self {
        let mut c = Self::empty(threads);
        c.owner = Some(t);
        c.insert_node(t.0);
        c.root = t.0;
        c
    }

    /// An auxiliary clock with no nodes (the bottom vector time).
    pub fn empty(threads: usize) -> Self {
        TreeClock {
            threads,
            nodes: Vec::new(),
            root: NIL,
            len: 0,
            owner: None,
            stack: Vec::new(),
            frames: Vec::new(),
        }
    }

    pub fn owner(&self) -> Option<ThreadId> {
        self.owner
    }

    pub fn root(&self) -> Option<ThreadId> {
        (self.root != NIL).then_some(ThreadId(self.root))
    }

    pub fn node_count(&self) -> usize {
        self.len
    }

    #[inline]
    fn get_raw(&self, t: u32) -> Clk {
        match self.nodes.get(t as usize) {
            Some(n) if n.present => n.clk,
            _ => 0,
        }
    }

    #[inline]
    fn present(&self, t: u32) -> bool {
        self.nodes.get(t as usize).is_some_and(|n| n.present)
    }

    pub fn contains(&self, t: ThreadId) -> bool {
        self.present(t.0)
    }

    pub fn node(&self, t: ThreadId) -> Option<NodeView> {
        if !self.present(t.0) {
            return None;
        }
        let n = &self.nodes[t.index()];
        let mut depth = 0;
        let mut p = n.parent;
        while p != NIL {
            depth += 1;
            p = self.nodes[p as usize].parent;
        }
        Some(NodeView {
            tid: t,
            clk: n.clk,
            aclk: (n.parent != NIL).then_some(n.aclk),
            parent: (n.parent != NIL).then_some(ThreadId(n.parent)),
            depth,
        })
    }

    /// Children of `t`, in list order.
    pub fn children(&self, t: ThreadId) -> Vec<ThreadId> {
        let mut out = Vec::new();
        if !self.present(t.0) {
            return out;
        }
        let mut c = self.nodes[t.index()].head;
        while c != NIL {
            out.push(ThreadId(c));
            c = self.nodes[c as usize].next;
        }
        out
    }

    /// Pre-order listing of the tree, children in list order.
    pub fn preorder(&self) -> Vec<NodeView> {
        let mut out = Vec::with_capacity(self.len);
        if self.root == NIL {
            return out;
        }
        let mut stack = vec![(self.root, 0usize)];
        while let Some((u, depth)) = stack.pop() {
            let n = &self.nodes[u as usize];
            out.push(NodeView {
                tid: ThreadId(u),
                clk: n.clk,
                aclk: (n.parent != NIL).then_some(n.aclk),
                parent: (n.parent != NIL).then_some(ThreadId(n.parent)),
                depth,
            });
            let first = stack.len();
            let mut c = n.head;
            while c != NIL {
                stack.push((c, depth + 1));
                c = self.nodes[c as usize].next;
            }
            stack[first..].reverse();
        }
        out
    }

    /// All strict descendants of `t`.
    pub fn descendants(&self, t: ThreadId) -> Vec<ThreadId> {
        let mut out = Vec::new();
        if !self.present(t.0) {
            return out;
        }
        let mut stack = vec![self.nodes[t.index()].head];
        while let Some(mut c) = stack.pop() {
            while c != NIL {
                out.push(ThreadId(c));
                let n = &self.nodes[c as usize];
                if n.head != NIL {
                    stack.push(n.head);
                }
                c = n.next;
            }
        }
        out
    }

    /// Indented dump, one `tid=<t> clk=<c> aclk=<a|⊥>` line per node.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for v in self.preorder() {
            let aclk = match v.aclk {
                Some(a) => a.to_string(),
                None => "⊥".to_owned(),
            };
            let _ = writeln!(
                s,
                "{:indent$}tid={} clk={} aclk={}",
                "",
                v.tid,
                v.clk,
                aclk,
                indent = 2 * v.depth
            );
        }
        s
    }

    fn ensure(&mut self, t: u32) {
        let need = t as usize + 1;
        if self.nodes.len() < need {
            self.nodes.resize(need, Node::ABSENT);
        }
    }

    fn insert_node(&mut self, t: u32) {
        assert!(
            (t as usize) < self.threads,
            "thread {t} out of range for a clock over {} threads",
            self.threads
        );
        self.ensure(t);
        self.nodes[t as usize] = Node {
            present: true,
            ..Node::ABSENT
        };
        self.len += 1;
    }

    fn unlink(&mut self, u: u32) {
        let Node {
            parent, prev, next, ..
        } = self.nodes[u as usize];
        if parent == NIL {
            return;
        }
        if prev != NIL {
            self.nodes[prev as usize].next = next;
        } else {
            self.nodes[parent as usize].head = next;
        }
        if next != NIL {
            self.nodes[next as usize].prev = prev;
        }
        let n = &mut self.nodes[u as usize];
        n.parent = NIL;
        n.prev = NIL;
        n.next = NIL;
    }

    fn push_front(&mut self, parent: u32, u: u32) {
        let old_head = self.nodes[parent as usize].head;
        {
            let n = &mut self.nodes[u as usize];
            n.parent = parent;
            n.prev = NIL;
            n.next = old_head;
        }
        if old_head != NIL {
            self.nodes[old_head as usize].prev = u;
        }
        self.nodes[parent as usize].head = u;
    }

    /// Collects, in post-order, the source nodes that must be (re)placed in
    /// `self`. Returns the number of source nodes examined.
    fn gather(&mut self, src: &TreeClock, mode: Gather) -> u64 {
        let mut stack = std::mem::take(&mut self.stack);
        let mut frames = std::mem::take(&mut self.frames);
        stack.clear();
        frames.clear();

        let z = src.root;
        let mut visited = 1u64;
        frames.push((z, src.nodes[z as usize].head));
        while let Some(&(u, cursor)) = frames.last() {
            if cursor == NIL {
                frames.pop();
                stack.push(u);
                continue;
            }
            let v = cursor;
            let vn = &src.nodes[v as usize];
            let top = frames.len() - 1;
            frames[top].1 = vn.next;
            visited += 1;
            if self.get_raw(v) < vn.clk {
                if mode == Gather::Join {
                    assert!(
                        v != self.root,
                        "join source knows a later time of the target's own root thread {v}"
                    );
                }
                frames.push((v, vn.head));
            } else {
                if let Gather::Copy { old_root } = mode {
                    if v == old_root {
                        stack.push(v);
                    }
                }
                let may_break = !matches!(mode, Gather::SubRoot(t) if t == u);
                if may_break && vn.aclk <= self.get_raw(u) {
                    frames[top].1 = NIL;
                }
            }
        }

        self.stack = stack;
        self.frames = frames;
        visited
    }

    fn detach_gathered(&mut self) {
        let stack = std::mem::take(&mut self.stack);
        for &u in &stack {
            if u != self.root && self.present(u) {
                self.unlink(u);
            }
        }
        self.stack = stack;
    }

    /// Pops the gathered nodes and rebuilds them in `self` mirroring the
    /// source shape. Returns how many entries changed value.
    fn attach_gathered(&mut self, src: &TreeClock, mode: Gather) -> u64 {
        let mut stack = std::mem::take(&mut self.stack);
        let mut changed = 0;
        while let Some(u) = stack.pop() {
            if matches!(mode, Gather::SubRoot(t) if t == u) {
                continue;
            }
            if !self.present(u) {
                self.insert_node(u);
            }
            let sn = &src.nodes[u as usize];
            let n = &mut self.nodes[u as usize];
            // Only the source root of a sub-root join can be gathered without
            // having progressed; its entry must not go down.
            if n.clk < sn.clk {
                changed += 1;
                n.clk = sn.clk;
            }
            let p = sn.parent;
            if p != NIL {
                let aclk = match mode {
                    Gather::SubRoot(t) if p == t => self.nodes[self.root as usize].clk,
                    _ => sn.aclk,
                };
                self.nodes[u as usize].aclk = aclk;
                self.push_front(p, u);
            }
        }
        self.stack = stack;
        changed
    }

    fn join_impl(&mut self, src: &TreeClock, mode: Gather) -> OpStats {
        if src.root == NIL {
            return OpStats::default();
        }
        if self.root == NIL {
            return self.deep_copy_from(src);
        }
        let zp = src.root;
        if mode == Gather::Join && src.nodes[zp as usize].clk <= self.get_raw(zp) {
            return OpStats {
                accessed: 1,
                changed: 0,
            };
        }
        let accessed = self.gather(src, mode);
        self.detach_gathered();
        let changed = self.attach_gathered(src, mode);
        let z = self.root;
        if zp != z {
            let zclk = self.nodes[z as usize].clk;
            self.nodes[zp as usize].aclk = zclk;
            self.push_front(z, zp);
        }
        OpStats { accessed, changed }
    }

    /// `self ← self ⊔ other`, touching only the progressed part of `other`.
    pub fn join(&mut self, other: &TreeClock) -> OpStats {
        self.join_impl(other, Gather::Join)
    }

    /// Join that leaves the entry of `self`'s root thread untouched, for
    /// orders that do not contain thread order.
    pub fn sub_root_join(&mut self, other: &TreeClock) -> OpStats {
        if self.root == NIL {
            return self.join_impl(other, Gather::Join);
        }
        let t = self.root;
        self.join_impl(other, Gather::SubRoot(t))
    }

    /// `self ← other`, assuming `self ⊑ other`.
    pub fn monotone_copy(&mut self, other: &TreeClock) -> OpStats {
        if self.root == NIL || other.root == NIL {
            return self.deep_copy_from(other);
        }
        debug_assert!(
            self.leq(other),
            "monotone copy precondition violated: target is not below source"
        );
        let z = self.root;
        let zp = other.root;
        assert!(
            self.owner.is_none() || self.owner == Some(ThreadId(zp)),
            "monotone copy would move the root of an owned clock"
        );
        let accessed = self.gather(other, Gather::Copy { old_root: z });
        self.detach_gathered();
        let changed = self.attach_gathered(other, Gather::Copy { old_root: z });
        if zp != z {
            self.unlink(zp);
            self.nodes[zp as usize].aclk = NO_ACLK;
            self.root = zp;
            if self.nodes[z as usize].parent == NIL {
                // The old root was never reached in the source, so the
                // target was not actually below it. Fall back to a full copy.
                let deep = self.deep_copy_from(other);
                return OpStats {
                    accessed: accessed + deep.accessed,
                    changed: deep.changed,
                };
            }
        }
        OpStats { accessed, changed }
    }

    /// Copy that decides in O(1) whether the monotone route applies: the
    /// target is below the source iff the source knows the target's root
    /// event. An empty target always takes the deep route.
    pub fn copy_check_monotone(&mut self, other: &TreeClock) -> (CopyPath, OpStats) {
        if self.root == NIL {
            return (CopyPath::Deep, self.deep_copy_from(other));
        }
        let r = self.root;
        if other.get_raw(r) >= self.nodes[r as usize].clk {
            debug_assert!(self.leq(other), "root-event test disagrees with leq");
            (CopyPath::Monotone, self.monotone_copy(other))
        } else {
            (CopyPath::Deep, self.deep_copy_from(other))
        }
    }

    /// Full structural copy of `other`, linear in its size.
    pub fn deep_copy_from(&mut self, other: &TreeClock) -> OpStats {
        assert!(
            self.owner.is_none() || other.root == NIL || self.owner == Some(ThreadId(other.root)),
            "deep copy would move the root of an owned clock"
        );
        let n = self.nodes.len().max(other.nodes.len());
        let changed = (0..n as u32)
            .filter(|&t| self.get_raw(t) != other.get_raw(t))
            .count() as u64;
        self.nodes.clear();
        self.nodes.extend_from_slice(&other.nodes);
        self.root = other.root;
        self.len = other.len;
        OpStats {
            accessed: other.len as u64,
            changed,
        }
    }

    pub fn increment(&mut self, by: Clk) -> OpStats {
        assert!(
            self.owner.is_some(),
            "increment is only defined on clocks created by initialize"
        );
        self.nodes[self.root as usize].clk += by;
        OpStats {
            accessed: 1,
            changed: u64::from(by > 0),
        }
    }

    /// `self ⊑ other`, visiting only `self`'s nodes.
    pub fn leq(&self, other: &TreeClock) -> bool {
        if self.root == NIL {
            return true;
        }
        let mut stack = vec![self.root];
        while let Some(mut c) = stack.pop() {
            while c != NIL {
                let n = &self.nodes[c as usize];
                if n.clk > other.get_raw(c) {
                    return false;
                }
                if n.head != NIL {
                    stack.push(n.head);
                }
                c = n.next;
            }
        }
        true
    }

    /// Checks every structural invariant: single root with ⊥ attachment,
    /// consistent parent and sibling links, every present node reachable
    /// exactly once, sibling `aclk` non-increasing, and `aclk ≤ parent.clk`.
    pub fn check_integrity(&self) -> Result<(), IntegrityError> {
        let err = |m: String| Err(IntegrityError(m));
        if self.root == NIL {
            if self.len != 0 || self.nodes.iter().any(|n| n.present) {
                return err("rootless clock has nodes".into());
            }
            return Ok(());
        }
        if let Some(o) = self.owner {
            if o.0 != self.root {
                return err(format!("owner {o} is not the root {}", self.root));
            }
        }
        let root = &self.nodes[self.root as usize];
        if !root.present || root.parent != NIL || root.aclk != NO_ACLK {
            return err("root is absent, has a parent, or has an attachment clock".into());
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut count = 0usize;
        let mut stack = vec![self.root];
        seen[self.root as usize] = true;
        while let Some(u) = stack.pop() {
            count += 1;
            let un = &self.nodes[u as usize];
            let mut prev = NIL;
            let mut prev_aclk = NO_ACLK;
            let mut c = un.head;
            while c != NIL {
                let cn = &self.nodes[c as usize];
                if !cn.present {
                    return err(format!("child {c} of {u} is not present"));
                }
                if seen[c as usize] {
                    return err(format!("node {c} reachable twice"));
                }
                seen[c as usize] = true;
                if cn.parent != u || cn.prev != prev {
                    return err(format!("broken links at node {c}"));
                }
                if cn.aclk == NO_ACLK || cn.aclk > un.clk {
                    return err(format!(
                        "node {c} has aclk {} above parent {u} clk {}",
                        cn.aclk, un.clk
                    ));
                }
                if prev != NIL && cn.aclk > prev_aclk {
                    return err(format!("children of {u} are not in descending aclk order"));
                }
                prev = c;
                prev_aclk = cn.aclk;
                stack.push(c);
                c = cn.next;
            }
        }
        let present = self.nodes.iter().filter(|n| n.present).count();
        if count != present || count != self.len {
            return err(format!(
                "{present} present nodes, {count} reachable, len {}",
                self.len
            ));
        }
        Ok(())
    }
}

impl fmt::Display for TreeClock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

impl LogicalClock for TreeClock {
    const KIND: ClockKind = ClockKind::Tree;

    fn new_owned(threads: usize, owner: ThreadId) -> Self {
        TreeClock::initialize(threads, owner)
    }

    fn new_empty(threads: usize) -> Self {
        TreeClock::empty(threads)
    }

    #[inline]
    fn get(&self, t: ThreadId) -> Clk {
        self.get_raw(t.0)
    }

    fn is_bottom(&self) -> bool {
        self.root == NIL
    }

    fn increment(&mut self, by: Clk) -> OpStats {
        TreeClock::increment(self, by)
    }

    fn join(&mut self, other: &Self) -> OpStats {
        TreeClock::join(self, other)
    }

    fn monotone_copy(&mut self, other: &Self) -> OpStats {
        TreeClock::monotone_copy(self, other)
    }

    fn copy_check_monotone(&mut self, other: &Self) -> (CopyPath, OpStats) {
        TreeClock::copy_check_monotone(self, other)
    }

    fn leq(&self, other: &Self) -> bool {
        TreeClock::leq(self, other)
    }

    fn flatten_into(&self, out: &mut [Clk]) {
        out.fill(0);
        for (i, n) in self.nodes.iter().enumerate() {
            if n.present {
                out[i] = n.clk;
            }
        }
    }

    fn flatten(&self) -> VectorTime {
        let mut v = VectorTime::zeros(self.threads);
        self.flatten_into(&mut v.0);
        v
    }

    fn thread_count(&self) -> usize {
        self.threads
    }
}

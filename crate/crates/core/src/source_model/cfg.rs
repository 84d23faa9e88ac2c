use std::collections::BTreeSet;

use super::{Block, FunctionDecl, LoopKind, StatementKind, StmtId};

/// Intra-procedural control-flow graph with one node per statement.
///
/// Node `i` stands for statement `i` of the function's arena; compound
/// statements are represented by their header (condition, loop header, `try`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlFlowGraph {
    /// Display text of each node.
    pub nodes: Vec<String>,
    /// Source line of each node.
    pub lines: Vec<u32>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    pub entry: Option<usize>,
    pub exits: BTreeSet<usize>,
}

impl ControlFlowGraph {
    /// Graph from explicit edges; node texts default to `n<i>`. Edges are
    /// deduplicated and successor lists keep insertion order.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], entry: Option<usize>) -> Self {
        let mut g = Self {
            nodes: (0..n).map(|i| format!("n{i}")).collect(),
            lines: (0..n).map(|i| i as u32 + 1).collect(),
            succ: vec![Vec::new(); n],
            pred: vec![Vec::new(); n],
            entry,
            exits: BTreeSet::new(),
        };
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g.exits = (0..n).filter(|&i| g.succ[i].is_empty()).collect();
        g
    }

    fn add_edge(&mut self, from: usize, to: usize) {
        if !self.succ[from].contains(&to) {
            self.succ[from].push(to);
            self.pred[to].push(from);
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn successors(&self, n: usize) -> &[usize] {
        &self.succ[n]
    }

    pub fn predecessors(&self, n: usize) -> &[usize] {
        &self.pred[n]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = self.succ.iter().enumerate().flat_map(|(a, s)| s.iter().map(move |&b| (a, b))).collect();
        out.sort_unstable();
        out
    }

    pub fn reachable_from(&self, start: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(n) = stack.pop() {
            for &s in &self.succ[n] {
                if seen.insert(s) {
                    stack.push(s);
                }
            }
        }
        seen
    }

    /// Whether `n` lies on a cycle, i.e. can reach itself again.
    pub fn on_cycle(&self, n: usize) -> bool {
        self.succ[n].iter().any(|&s| s == n || self.reachable_from(s).contains(&n))
    }
}

/// Builds the CFG of a parsed function.
pub fn build_cfg(f: &FunctionDecl) -> ControlFlowGraph {
    let n = f.statements.len();
    let mut b = Builder {
        f,
        g: ControlFlowGraph {
            nodes: f.statements.iter().map(|s| s.display_text().to_string()).collect(),
            lines: f.statements.iter().map(|s| s.line).collect(),
            succ: vec![Vec::new(); n],
            pred: vec![Vec::new(); n],
            entry: None,
            exits: BTreeSet::new(),
        },
    };
    let (entry, out) = b.seq(&f.body, Vec::new());
    b.g.entry = entry;
    b.g.exits.extend(out);
    b.g
}

struct Builder<'f> {
    f: &'f FunctionDecl,
    g: ControlFlowGraph,
}

impl Builder<'_> {
    /// Links `incoming` into the statement list and returns its entry node
    /// and the nodes that fall through past its end. An empty list passes
    /// `incoming` straight through.
    fn seq(&mut self, ids: &[StmtId], incoming: Vec<usize>) -> (Option<usize>, Vec<usize>) {
        let mut entry = None;
        let mut pending = incoming;
        for &id in ids {
            let (e, out) = self.stmt(id, pending);
            entry.get_or_insert(e);
            pending = out;
        }
        (entry, pending)
    }

    fn link(&mut self, from: &[usize], to: usize) {
        for &a in from {
            self.g.add_edge(a, to);
        }
    }

    fn stmt(&mut self, id: StmtId, incoming: Vec<usize>) -> (usize, Vec<usize>) {
        let s = self.f.stmt(id);
        match &s.block {
            Block::None => {
                self.link(&incoming, id);
                if matches!(s.kind, StatementKind::Return | StatementKind::Throw) {
                    self.g.exits.insert(id);
                    (id, Vec::new())
                } else {
                    (id, vec![id])
                }
            }
            Block::If { then_branch, else_branch } => {
                self.link(&incoming, id);
                let (_, mut out) = self.seq(then_branch, vec![id]);
                match else_branch {
                    Some(e) => out.extend(self.seq(e, vec![id]).1),
                    None => out.push(id),
                }
                (id, dedup(out))
            }
            Block::Loop { kind: LoopKind::DoWhile, body } => {
                let (body_entry, out) = self.seq(body, incoming.clone());
                let first = body_entry.unwrap_or(id);
                self.link(&out, id);
                if body_entry.is_none() {
                    self.link(&incoming, id);
                }
                self.g.add_edge(id, first);
                (first, vec![id])
            }
            Block::Loop { body, .. } => {
                self.link(&incoming, id);
                let (_, out) = self.seq(body, vec![id]);
                self.link(&out, id);
                (id, vec![id])
            }
            Block::Try { body, catches, finally } => {
                self.link(&incoming, id);
                let (_, body_out) = self.seq(body, vec![id]);
                let mut throwers = vec![id];
                for &b in body {
                    self.subtree(b, &mut throwers);
                }
                let mut out = body_out;
                for c in catches {
                    let (_, c_out) = self.seq(&c.body, throwers.clone());
                    out.extend(c_out);
                }
                let out = dedup(out);
                let out = match finally {
                    Some(fin) => self.seq(fin, out).1,
                    None => out,
                };
                (id, out)
            }
        }
    }

    fn subtree(&self, id: StmtId, acc: &mut Vec<usize>) {
        acc.push(id);
        for c in self.f.stmt(id).children() {
            self.subtree(c, acc);
        }
    }
}

fn dedup(mut v: Vec<usize>) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    v.retain(|x| seen.insert(*x));
    v
}

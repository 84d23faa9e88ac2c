//! Random straight-line, branching and looping programs with a reaching
//! definitions oracle computed directly on the program tree, without a CFG.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use d4l_core::context::{ContextBuilder, SourceKind};
use d4l_core::log_extractor::LogExtractor;
use d4l_core::source_model::parse_compilation_unit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 4] = ["a", "b", "c", "d"];
const PARAM: &str = "p";

#[derive(Debug, Clone)]
enum Node {
    Assign { target: &'static str, uses: Vec<&'static str>, konst: i32 },
    If { cond: &'static str, then: Vec<Node>, other: Vec<Node> },
    While { cond: &'static str, body: Vec<Node> },
}

struct Gen {
    rng: ChaCha8Rng,
    budget: usize,
}

impl Gen {
    fn var(&mut self) -> &'static str {
        VARS[self.rng.gen_range(0..VARS.len())]
    }

    fn operand(&mut self) -> &'static str {
        if self.rng.gen_bool(0.2) {
            PARAM
        } else {
            self.var()
        }
    }

    fn block(&mut self, depth: usize) -> Vec<Node> {
        let mut out = Vec::new();
        let len = self.rng.gen_range(1..=4);
        for _ in 0..len {
            if self.budget == 0 {
                break;
            }
            self.budget -= 1;
            let roll = self.rng.gen_range(0..10);
            let node = if roll < 2 && depth < 3 && self.budget >= 2 {
                let cond = self.operand();
                let then = self.block(depth + 1);
                let other = if self.rng.gen_bool(0.6) { self.block(depth + 1) } else { Vec::new() };
                Node::If { cond, then, other }
            } else if roll < 3 && depth < 3 && self.budget >= 2 {
                let cond = self.operand();
                Node::While { cond, body: self.block(depth + 1) }
            } else {
                let target = self.var();
                let n = self.rng.gen_range(0..=2);
                let uses = (0..n).map(|_| self.operand()).collect();
                Node::Assign { target, uses, konst: self.rng.gen_range(0..9) }
            };
            out.push(node);
        }
        out
    }
}

/// Lines of the rendered program, with each assignment's line recorded.
struct Rendered {
    text: String,
    assigns: BTreeMap<u32, (&'static str, Vec<&'static str>)>,
    log_var: &'static str,
}

fn render(decls: &[(&'static str, i32)], body: &[Node], log_var: &'static str) -> Rendered {
    let mut lines = vec!["class Gen {".to_string(), "  void run(int p) {".to_string()];
    let mut assigns = BTreeMap::new();
    for (v, k) in decls {
        assigns.insert(lines.len() as u32 + 1, (*v, Vec::new()));
        lines.push(format!("    int {v} = {k};"));
    }
    fn emit(
        nodes: &[Node],
        indent: usize,
        lines: &mut Vec<String>,
        assigns: &mut BTreeMap<u32, (&'static str, Vec<&'static str>)>,
    ) {
        let pad = " ".repeat(indent);
        for n in nodes {
            match n {
                Node::Assign { target, uses, konst } => {
                    assigns.insert(lines.len() as u32 + 1, (*target, uses.clone()));
                    let mut rhs: Vec<String> = uses.iter().map(|u| u.to_string()).collect();
                    rhs.push(konst.to_string());
                    lines.push(format!("{pad}{target} = {};", rhs.join(" + ")));
                }
                Node::If { cond, then, other } => {
                    lines.push(format!("{pad}if ({cond} > 0) {{"));
                    emit(then, indent + 2, lines, assigns);
                    if !other.is_empty() {
                        lines.push(format!("{pad}}} else {{"));
                        emit(other, indent + 2, lines, assigns);
                    }
                    lines.push(format!("{pad}}}"));
                }
                Node::While { cond, body } => {
                    lines.push(format!("{pad}while ({cond} < 100) {{"));
                    emit(body, indent + 2, lines, assigns);
                    lines.push(format!("{pad}}}"));
                }
            }
        }
    }
    emit(body, 4, &mut lines, &mut assigns);
    lines.push(format!("    LOG.info(\"v={{}}\", {log_var});"));
    lines.push("  }".into());
    lines.push("}".into());
    Rendered { text: lines.join("\n") + "\n", assigns, log_var }
}

/// Reaching definitions per variable; `0` stands for the parameter's entry value.
type State = BTreeMap<&'static str, BTreeSet<u32>>;

fn join(a: &State, b: &State) -> State {
    let mut out = a.clone();
    for (k, v) in b {
        out.entry(k).or_default().extend(v.iter().copied());
    }
    out
}

/// Abstract interpretation over the tree. Records the state on entry to each
/// assignment line, joined over every visit.
struct Interp {
    before: BTreeMap<u32, State>,
}

impl Interp {
    fn run_block(&mut self, nodes: &[Node], mut st: State, lines: &[u32]) -> State {
        for (n, &line) in nodes.iter().zip(lines) {
            st = self.run(n, st, line);
        }
        st
    }

    fn run(&mut self, n: &Node, st: State, line: u32) -> State {
        match n {
            Node::Assign { target, .. } => {
                let e = self.before.entry(line).or_default();
                *e = join(e, &st);
                let mut out = st;
                out.insert(target, BTreeSet::from([line]));
                out
            }
            Node::If { then, other, .. } => {
                let tl = child_lines(line + 1, then);
                let else_line = line + 1 + then.iter().map(height).sum::<u32>();
                let ol = child_lines(else_line + 1, other);
                let a = self.run_block(then, st.clone(), &tl);
                let b = self.run_block(other, st, &ol);
                join(&a, &b)
            }
            Node::While { body, .. } => {
                let bl = child_lines(line + 1, body);
                let mut head = st;
                loop {
                    let after = self.run_block(body, head.clone(), &bl);
                    let next = join(&head, &after);
                    if next == head {
                        return head;
                    }
                    head = next;
                }
            }
        }
    }
}

fn height(n: &Node) -> u32 {
    match n {
        Node::Assign { .. } => 1,
        Node::If { then, other, .. } => {
            2 + then.iter().map(height).sum::<u32>()
                + if other.is_empty() { 0 } else { 1 + other.iter().map(height).sum::<u32>() }
        }
        Node::While { body, .. } => 2 + body.iter().map(height).sum::<u32>(),
    }
}

fn child_lines(first: u32, nodes: &[Node]) -> Vec<u32> {
    let mut line = first;
    nodes
        .iter()
        .map(|n| {
            let l = line;
            line += height(n);
            l
        })
        .collect()
}

/// Chain lines and source kinds reached from `var` at the logging statement.
fn oracle(rendered: &Rendered, decls: usize, body: &[Node]) -> (BTreeSet<u32>, BTreeSet<SourceKind>) {
    let first = 3 + decls as u32;
    let mut st: State = BTreeMap::from([(PARAM, BTreeSet::from([0]))]);
    for l in 3..first {
        st.insert(rendered.assigns[&l].0, BTreeSet::from([l]));
    }
    let mut interp = Interp { before: BTreeMap::new() };
    let lines = child_lines(first, body);
    let at_log = interp.run_block(body, st.clone(), &lines);
    for l in 3..first {
        // Declarations run once, in order, before the body.
        let mut pre: State = BTreeMap::from([(PARAM, BTreeSet::from([0]))]);
        for k in 3..l {
            pre.insert(rendered.assigns[&k].0, BTreeSet::from([k]));
        }
        interp.before.insert(l, pre);
    }

    let mut chain = BTreeSet::new();
    let mut kinds = BTreeSet::new();
    let mut seen: BTreeSet<(&str, u32)> = BTreeSet::new();
    let mut work: Vec<(&'static str, State)> = vec![(rendered.log_var, at_log)];
    while let Some((v, state)) = work.pop() {
        for &d in state.get(v).into_iter().flatten() {
            if !seen.insert((v, d)) {
                continue;
            }
            if d == 0 {
                kinds.insert(SourceKind::Parameter);
                continue;
            }
            chain.insert(d);
            let uses = &rendered.assigns[&d].1;
            if uses.is_empty() {
                kinds.insert(SourceKind::Constant);
            }
            for u in uses {
                work.push((u, interp.before[&d].clone()));
            }
        }
    }
    (chain, kinds)
}

fn program(seed: u64) -> (Rendered, usize, Vec<Node>) {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), budget: 0 };
    let decls: Vec<(&'static str, i32)> = VARS.iter().map(|v| (*v, g.rng.gen_range(0..9))).collect();
    g.budget = 30 - decls.len() - 1;
    let body = g.block(0);
    let log_var = if g.rng.gen_bool(0.15) { PARAM } else { g.var() };
    (render(&decls, &body, log_var), decls.len(), body)
}

fn count(nodes: &[Node]) -> usize {
    nodes
        .iter()
        .map(|n| match n {
            Node::Assign { .. } => 1,
            Node::If { then, other, .. } => 1 + count(then) + count(other),
            Node::While { body, .. } => 1 + count(body),
        })
        .sum()
}

/// Generates program `seed`, slices its logging statement and compares the
/// chain lines and source kinds with the oracle. Returns the chain length.
pub fn check_seed(seed: u64) -> Result<usize, String> {
    let (rendered, decls, body) = program(seed);
    let size = decls + count(&body) + 1;
    if size > 30 {
        return Err(format!("seed {seed}: {size} statements"));
    }
    let unit = parse_compilation_unit(&rendered.text, Path::new("Gen.java")).map_err(|e| e.to_string())?;
    let units = vec![unit];
    let stmts = LogExtractor::default().extract_unit(&units[0]);
    if stmts.len() != 1 {
        return Err(format!("seed {seed}: {} logging statements", stmts.len()));
    }
    let out = ContextBuilder::new(&units).data_flow(0, &stmts[0], 0);
    let [slice] = out.slices.as_slice() else {
        return Err(format!("seed {seed}: {} slices", out.slices.len()));
    };
    let got: BTreeSet<u32> = slice.chain.iter().map(|e| e.line).collect();
    let (want, kinds) = oracle(&rendered, decls, &body);
    if slice.variable != rendered.log_var || got.len() != slice.chain.len() {
        return Err(format!("seed {seed}: bad slice {slice:?}"));
    }
    if got != want || slice.sources != kinds {
        return Err(format!(
            "seed {seed}: chain {got:?} / {:?} but oracle {want:?} / {kinds:?}\n{}",
            slice.sources, rendered.text
        ));
    }
    Ok(want.len())
}

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::source_model::{
    build_cfg, Block, CallGraph, CallSite, ControlFlowGraph, FunctionDecl, SourceUnit, StatementKind, StmtId,
};

/// Where a backward slice stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Unknown,
    Constant,
    Field,
    Parameter,
    CallReturn,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Unknown => "unknown",
            SourceKind::Constant => "constant",
            SourceKind::Field => "field",
            SourceKind::Parameter => "parameter",
            SourceKind::CallReturn => "call_return",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceEntry {
    pub text: String,
    pub function: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataFlowSlice {
    pub variable: String,
    /// Definitions from the nearest one back towards the sources.
    pub chain: Vec<SliceEntry>,
    /// The most informative source reached (call return first, then
    /// parameter, field, constant, unknown).
    pub source_kind: SourceKind,
    /// Every kind of source reached on some path.
    pub sources: BTreeSet<SourceKind>,
}

/// A definition site: the function entry (parameters) or a statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DefSite {
    Entry,
    Stmt(StmtId),
}

/// Reaching definitions of one function, per CFG node.
#[derive(Debug, Clone)]
pub struct ReachingDefs {
    inputs: Vec<BTreeSet<(String, DefSite)>>,
}

impl ReachingDefs {
    pub fn compute(f: &FunctionDecl, cfg: &ControlFlowGraph) -> Self {
        let n = cfg.len();
        let entry_defs: BTreeSet<(String, DefSite)> =
            f.parameters.iter().map(|p| (p.name.clone(), DefSite::Entry)).collect();
        let mut inputs = vec![BTreeSet::new(); n];
        let mut outputs: Vec<BTreeSet<(String, DefSite)>> = vec![BTreeSet::new(); n];
        let mut queue: VecDeque<usize> = (0..n).collect();
        let mut queued = vec![true; n];
        while let Some(node) = queue.pop_front() {
            queued[node] = false;
            let mut input: BTreeSet<(String, DefSite)> = BTreeSet::new();
            if cfg.entry == Some(node) {
                input.extend(entry_defs.iter().cloned());
            }
            for &p in cfg.predecessors(node) {
                input.extend(outputs[p].iter().cloned());
            }
            let defs = &f.stmt(node).defs;
            let mut output: BTreeSet<_> = input.iter().filter(|(v, _)| !defs.contains(v)).cloned().collect();
            output.extend(defs.iter().map(|v| (v.clone(), DefSite::Stmt(node))));
            inputs[node] = input;
            if output != outputs[node] {
                outputs[node] = output;
                for &s in cfg.successors(node) {
                    if !queued[s] {
                        queued[s] = true;
                        queue.push_back(s);
                    }
                }
            }
        }
        Self { inputs }
    }

    /// Definitions of `var` reaching the start of `node`.
    pub fn reaching(&self, node: usize, var: &str) -> Vec<DefSite> {
        self.inputs[node].iter().filter(|(v, _)| v == var).map(|(_, d)| *d).collect()
    }
}

/// Everything the slicer needs about the analysed code base.
pub struct SliceEnv<'a> {
    pub units: &'a [SourceUnit],
    pub graph: &'a CallGraph,
}

/// Result of slicing: the slices plus the callee bodies pulled in.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SliceOutput {
    pub slices: Vec<DataFlowSlice>,
    pub callee_expansions: BTreeMap<String, String>,
}

impl SliceEnv<'_> {
    /// Backward slices of `vars` as read at statement `node` of function
    /// `fidx` in unit `unit`.
    pub fn slice(&self, unit: usize, fidx: usize, node: StmtId, vars: &[String], depth: usize) -> SliceOutput {
        let f = &self.units[unit].functions[fidx];
        let cfg = build_cfg(f);
        let rd = ReachingDefs::compute(f, &cfg);
        let mut out = SliceOutput::default();
        for v in vars {
            let mut chain = Vec::new();
            let mut sources = BTreeSet::new();
            self.walk(unit, fidx, &rd, node, v, depth, &mut chain, &mut sources, &mut out.callee_expansions);
            let mut seen = BTreeSet::new();
            chain.retain(|e| seen.insert((e.function.clone(), e.line, e.text.clone())));
            let source_kind = sources.iter().next_back().copied().unwrap_or(SourceKind::Unknown);
            if sources.is_empty() {
                sources.insert(SourceKind::Unknown);
            }
            out.slices.push(DataFlowSlice { variable: v.clone(), chain, source_kind, sources });
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        unit: usize,
        fidx: usize,
        rd: &ReachingDefs,
        node: StmtId,
        var: &str,
        depth: usize,
        chain: &mut Vec<SliceEntry>,
        sources: &mut BTreeSet<SourceKind>,
        expansions: &mut BTreeMap<String, String>,
    ) {
        let f = &self.units[unit].functions[fidx];
        let mut visited: BTreeSet<(String, DefSite)> = BTreeSet::new();
        let mut in_chain: BTreeSet<StmtId> = BTreeSet::new();
        let mut queue: VecDeque<(String, usize)> = VecDeque::from([(var.to_string(), node)]);
        while let Some((v, at)) = queue.pop_front() {
            let mut defs = rd.reaching(at, &v);
            if defs.is_empty() {
                sources.insert(classify_free(f, &v));
                continue;
            }
            // Nearest (latest in source) definitions first.
            defs.sort_by(|a, b| b.cmp(a));
            for d in defs {
                if !visited.insert((v.clone(), d)) {
                    continue;
                }
                let DefSite::Stmt(s) = d else {
                    sources.insert(SourceKind::Parameter);
                    continue;
                };
                let stmt = f.stmt(s);
                if in_chain.insert(s) {
                    chain.push(SliceEntry {
                        text: stmt.display_text().to_string(),
                        function: f.qualified_name.clone(),
                        line: stmt.line,
                    });
                }
                let assigns: Vec<_> = stmt.assigns.iter().filter(|a| a.target == v).collect();
                let calls: Vec<(String, usize)> = assigns.iter().flat_map(|a| a.calls.iter().cloned()).collect();
                if assigns.iter().any(|a| a.has_call) {
                    sources.insert(SourceKind::CallReturn);
                    if depth > 0 {
                        for (name, arity) in calls {
                            self.expand(f, stmt.line, &name, arity, depth, chain, expansions);
                        }
                    }
                    continue;
                }
                let uses: BTreeSet<&String> = assigns.iter().flat_map(|a| a.uses.iter()).collect();
                if uses.is_empty() {
                    sources.insert(SourceKind::Constant);
                }
                for u in uses {
                    queue.push_back((u.clone(), s));
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn expand(
        &self,
        caller: &FunctionDecl,
        line: u32,
        name: &str,
        arity: usize,
        depth: usize,
        chain: &mut Vec<SliceEntry>,
        expansions: &mut BTreeMap<String, String>,
    ) {
        let site = CallSite { function: caller.qualified_name.clone(), line, name: name.to_string(), arity };
        let Some(callee) = self.graph.callee_of(&site) else { return };
        let g = &self.units[callee.unit].functions[callee.function];
        let key = format!("{}:{} -> {}", caller.qualified_name, line, g.qualified_name);
        if expansions.contains_key(&key) {
            return;
        }
        expansions.insert(key, g.source.clone());
        let cfg = build_cfg(g);
        let rd = ReachingDefs::compute(g, &cfg);
        for s in &g.statements {
            if s.kind != StatementKind::Return || !matches!(s.block, Block::None) {
                continue;
            }
            chain.push(SliceEntry { text: s.text.clone(), function: g.qualified_name.clone(), line: s.line });
            let mut inner = BTreeSet::new();
            for u in &s.uses {
                self.walk(callee.unit, callee.function, &rd, s.id, u, depth - 1, chain, &mut inner, expansions);
            }
        }
    }
}

/// Source kind of a variable with no local definition in reach.
fn classify_free(f: &FunctionDecl, var: &str) -> SourceKind {
    let is_catch_param = f.statements.iter().any(|s| match &s.block {
        Block::Try { catches, .. } => catches.iter().any(|c| c.param == var),
        _ => false,
    });
    let is_constant = var.len() > 1 && var.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_');
    if f.is_parameter(var) || is_catch_param {
        SourceKind::Parameter
    } else if f.fields_in_scope.contains(var) || is_constant {
        SourceKind::Field
    } else {
        SourceKind::Unknown
    }
}

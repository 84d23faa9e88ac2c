//! The three context kinds for one logging statement: the enclosing function,
//! bounded control-flow paths, and backward data-flow slices.

mod flow;
mod slice;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use flow::{control_flow_context, flow_nodes, walk, FlowPaths};
pub use slice::{DataFlowSlice, DefSite, ReachingDefs, SliceEntry, SliceEnv, SliceOutput, SourceKind};

use crate::log_extractor::LogStatement;
use crate::source_model::lexer::tokenize;
use crate::source_model::{build_cfg, CallGraph, SourceUnit};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextConfig {
    pub max_path_len: usize,
    pub callee_depth: usize,
}

impl Default for ContextConfig {
    fn default() -> Self {
        Self { max_path_len: 10, callee_depth: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBundle {
    /// Verbatim source of the enclosing function.
    pub direct: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flows: Option<FlowPaths>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slices: Option<Vec<DataFlowSlice>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub callee_expansions: BTreeMap<String, String>,
}

impl ContextBundle {
    /// A bundle carrying only the function source.
    pub fn direct_only(direct: impl Into<String>) -> Self {
        Self { direct: direct.into(), flows: None, slices: None, callee_expansions: BTreeMap::new() }
    }
}

/// Source of the function enclosing `stmt`.
pub fn direct_context<'u>(unit: &'u SourceUnit, stmt: &LogStatement) -> &'u str {
    &unit.functions[stmt.function].source
}

/// Variables read by the logging arguments and concatenated message parts,
/// in first-appearance order.
pub fn logged_variables(stmt: &LogStatement) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let exprs = stmt.template.concat_exprs().map(str::to_string).chain(stmt.args.iter().cloned());
    for e in exprs {
        let toks = tokenize(&e);
        let vars = crate::source_model::expr_vars(&e, &toks);
        let mut ordered: Vec<(usize, String)> =
            vars.into_iter().map(|v| (toks.iter().position(|t| t.text(&e) == v).unwrap_or(0), v)).collect();
        ordered.sort();
        for (_, v) in ordered {
            if seen.insert(v.clone()) {
                out.push(v);
            }
        }
    }
    out
}

/// Builds context bundles against a fixed set of parsed units.
pub struct ContextBuilder<'a> {
    units: &'a [SourceUnit],
    graph: CallGraph,
}

impl<'a> ContextBuilder<'a> {
    pub fn new(units: &'a [SourceUnit]) -> Self {
        Self { units, graph: crate::source_model::resolve_calls(units) }
    }

    pub fn units(&self) -> &'a [SourceUnit] {
        self.units
    }

    pub fn call_graph(&self) -> &CallGraph {
        &self.graph
    }

    pub fn control_flow(&self, unit: usize, stmt: &LogStatement, limit: usize) -> FlowPaths {
        let cfg = build_cfg(&self.units[unit].functions[stmt.function]);
        control_flow_context(&cfg, stmt.stmt, limit)
    }

    pub fn data_flow(&self, unit: usize, stmt: &LogStatement, callee_depth: usize) -> SliceOutput {
        let env = SliceEnv { units: self.units, graph: &self.graph };
        env.slice(unit, stmt.function, stmt.stmt, &logged_variables(stmt), callee_depth)
    }

    /// All three context kinds for `stmt`, found in unit `unit`.
    pub fn bundle(&self, unit: usize, stmt: &LogStatement, cfg: &ContextConfig) -> ContextBundle {
        let data = self.data_flow(unit, stmt, cfg.callee_depth);
        ContextBundle {
            direct: direct_context(&self.units[unit], stmt).to_string(),
            flows: Some(self.control_flow(unit, stmt, cfg.max_path_len)),
            slices: Some(data.slices),
            callee_expansions: data.callee_expansions,
        }
    }
}

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::source_model::ControlFlowGraph;

/// Statements around a logging call along control flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowPaths {
    /// Statements executed before the call, ending with the closest one.
    pub backward: Vec<String>,
    /// Statements executed after the call, starting with the closest one.
    pub forward: Vec<String>,
    pub limit: usize,
}

/// Node ids visited by a breadth-first walk from `start` (excluded), in
/// visit order, truncated to `limit`. Successor lists are walked in their
/// stored order, which puts then-branches before else-branches.
pub fn walk(cfg: &ControlFlowGraph, start: usize, limit: usize, backward: bool) -> Vec<usize> {
    let mut seen = BTreeSet::from([start]);
    let mut order = Vec::new();
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        let next = if backward { cfg.predecessors(n) } else { cfg.successors(n) };
        for &m in next {
            if order.len() == limit {
                return order;
            }
            if seen.insert(m) {
                order.push(m);
                queue.push_back(m);
            }
        }
    }
    order
}

/// Backward and forward node lists for `node`: backward in execution order
/// (reverse of visit order), forward in visit order.
pub fn flow_nodes(cfg: &ControlFlowGraph, node: usize, limit: usize) -> (Vec<usize>, Vec<usize>) {
    let mut back = walk(cfg, node, limit, true);
    back.reverse();
    (back, walk(cfg, node, limit, false))
}

pub fn control_flow_context(cfg: &ControlFlowGraph, node: usize, limit: usize) -> FlowPaths {
    let (back, fwd) = flow_nodes(cfg, node, limit);
    let text = |ids: Vec<usize>| ids.into_iter().map(|i| cfg.nodes[i].clone()).collect();
    FlowPaths { backward: text(back), forward: text(fwd), limit }
}

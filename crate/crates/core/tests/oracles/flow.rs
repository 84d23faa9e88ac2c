//! Random CFGs with loops and the bounded-walk properties they must satisfy.

use std::collections::BTreeSet;

use d4l_core::context::{control_flow_context, flow_nodes};
use d4l_core::source_model::ControlFlowGraph;
use proptest::prelude::*;

/// A forward chain 0 -> 1 -> ... plus random extra edges, which include back
/// edges and therefore loops. Yields the graph, a node and two limits.
pub fn case() -> impl Strategy<Value = (ControlFlowGraph, usize, usize, usize)> {
    (2usize..=50).prop_flat_map(|n| {
        let extra = prop::collection::vec((0..n, 0..n), 0..n * 2);
        (Just(n), extra, 0..n, 0usize..60, 0usize..60).prop_map(|(n, extra, node, a, b)| {
            let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
            edges.extend(extra);
            (ControlFlowGraph::from_edges(n, &edges, Some(0)), node, a.min(b), a.max(b))
        })
    })
}

/// Nodes from which `target` is reachable, found by checking every node.
pub fn reaches(cfg: &ControlFlowGraph, target: usize) -> BTreeSet<usize> {
    (0..cfg.len()).filter(|&s| s != target && cfg.reachable_from(s).contains(&target)).collect()
}

/// Length bound, monotonicity in the limit and, with an unbounded limit,
/// coverage of exactly the connected nodes.
pub fn check(cfg: &ControlFlowGraph, node: usize, lo: usize, hi: usize) -> Result<(), TestCaseError> {
    let p = control_flow_context(cfg, node, hi);
    prop_assert!(p.backward.len() <= hi && p.forward.len() <= hi);
    prop_assert_eq!(p.limit, hi);

    let (back_lo, fwd_lo) = flow_nodes(cfg, node, lo);
    let (back_hi, fwd_hi) = flow_nodes(cfg, node, hi);
    prop_assert!(fwd_hi.starts_with(&fwd_lo));
    // Backward paths are in execution order, so the closest statements sit at the end.
    prop_assert!(back_hi.ends_with(&back_lo));

    let (back, fwd) = flow_nodes(cfg, node, cfg.len());
    let back_set: BTreeSet<usize> = back.iter().copied().collect();
    let fwd_set: BTreeSet<usize> = fwd.iter().copied().collect();
    prop_assert_eq!(back_set.len(), back.len());
    prop_assert_eq!(fwd_set.len(), fwd.len());
    prop_assert_eq!(back_set, reaches(cfg, node));
    let mut forward = cfg.reachable_from(node);
    forward.remove(&node);
    prop_assert_eq!(fwd_set, forward);
    Ok(())
}

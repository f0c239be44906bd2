//! Single-level sparsifier subroutines.
//!
//! Each solver produces one subgraph for one terminal set (or pair set) and
//! one constraint family. The pipeline plugs any of them into its per-level
//! slot; `SolverKind` names the choice and knows which families it serves.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::graph::{
    forest_extend, EdgeId, GraphError, PriorityGraph, Subgraph, VertexId,
};
use crate::oracle::{OracleBudget, OracleError};
use crate::validity::ConstraintFamily;
use crate::weight::{format_weight, parse_weight, Weight};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverKind {
    SteinerMst2Approx,
    GreedySpanner { alpha: Weight },
    SubsetSpannerClosure { alpha: Weight },
    PathGreedy,
    Exact { budget: OracleBudget },
}

impl SolverKind {
    pub fn compatible_with(&self, family: &ConstraintFamily) -> bool {
        match self {
            SolverKind::SteinerMst2Approx => matches!(family, ConstraintFamily::Tree),
            SolverKind::GreedySpanner { alpha } | SolverKind::SubsetSpannerClosure { alpha } => {
                matches!(family, ConstraintFamily::Multiplicative(a) if a == alpha)
            }
            SolverKind::PathGreedy => matches!(
                family,
                ConstraintFamily::Additive(_) | ConstraintFamily::Preserver
            ),
            SolverKind::Exact { .. } => true,
        }
    }

    /// Certified approximation ratio against the exact single-level optimum,
    /// when one is known.
    pub fn known_ratio(&self) -> Option<u32> {
        match self {
            SolverKind::Exact { .. } => Some(1),
            SolverKind::SteinerMst2Approx => Some(2),
            _ => None,
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverKind::SteinerMst2Approx => write!(f, "steiner2approx"),
            SolverKind::GreedySpanner { alpha } => write!(f, "greedy:{}", format_weight(alpha)),
            SolverKind::SubsetSpannerClosure { alpha } => {
                write!(f, "subsetspanner:{}", format_weight(alpha))
            }
            SolverKind::PathGreedy => write!(f, "pathgreedy"),
            SolverKind::Exact { .. } => write!(f, "exact"),
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None => match s {
                "steiner2approx" => Ok(SolverKind::SteinerMst2Approx),
                "pathgreedy" => Ok(SolverKind::PathGreedy),
                "exact" => Ok(SolverKind::Exact { budget: OracleBudget::default() }),
                "greedy" | "subsetspanner" => {
                    Err(format!("solver {s:?} needs a stretch, e.g. {s}:3"))
                }
                other => Err(format!("unknown solver {other:?}")),
            },
            Some(("greedy", a)) => Ok(SolverKind::GreedySpanner { alpha: parse_weight(a)? }),
            Some(("subsetspanner", a)) => {
                Ok(SolverKind::SubsetSpannerClosure { alpha: parse_weight(a)? })
            }
            Some((other, _)) => Err(format!("unknown solver {other:?}")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("solver {solver} cannot serve family {family}")]
    IncompatibleSolver { solver: String, family: String },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Steiner tree over `terminals`: MST of the metric closure, expanded back
/// through the memoized witness paths, cycles removed lightest-first, then
/// non-terminal branches stripped. Weight is at most twice the optimum.
pub fn steiner_mst_2approx(
    g: &PriorityGraph,
    terminals: &BTreeSet<VertexId>,
) -> Result<Subgraph, SolveError> {
    if terminals.len() <= 1 {
        return Ok(match terminals.iter().next() {
            Some(&t) => Subgraph::single_vertex(t),
            None => Subgraph::default(),
        });
    }
    let closure = g.metric_closure(terminals)?;
    let closure_mst = closure.graph.minimum_spanning_tree().expect("closure is complete");

    let mut expanded: BTreeSet<EdgeId> = BTreeSet::new();
    for &ceid in &closure_mst.edges {
        expanded.extend(closure.witnesses[ceid].iter().copied());
    }
    let forest = forest_extend(g, &BTreeSet::new(), &expanded);
    let tree = crate::graph::minimal_terminal_subtree(g, &forest, terminals)
        .expect("witness expansion keeps terminals connected");
    Ok(Subgraph::from_edges(tree))
}

/// Althofer-style greedy spanner over the whole graph: edges in ascending
/// `(weight, id)` order, kept exactly when the subgraph so far stretches
/// their endpoints beyond `alpha` times the edge weight.
pub fn greedy_spanner(g: &PriorityGraph, alpha: &Weight) -> Subgraph {
    let mut order: Vec<EdgeId> = (0..g.edge_count()).collect();
    order.sort_by(|&a, &b| (&g.edge(a).weight, a).cmp(&(&g.edge(b).weight, b)));
    let mut kept: BTreeSet<EdgeId> = BTreeSet::new();
    for eid in order {
        let e = g.edge(eid);
        let bound = alpha.clone() * e.weight.clone();
        let current = g.distances_from(e.u, Some(&kept))[e.v].clone();
        if current.map_or(true, |d| d > bound) {
            kept.insert(eid);
        }
    }
    Subgraph::from_edges(kept)
}

/// Subset spanner: greedy spanner on the metric closure of `terminals`,
/// with the surviving closure edges expanded back to their witness paths.
/// The result stretches terminal distances by at most `alpha`.
pub fn subset_spanner_closure(
    g: &PriorityGraph,
    terminals: &BTreeSet<VertexId>,
    alpha: &Weight,
) -> Result<Subgraph, SolveError> {
    if terminals.len() <= 1 {
        return Ok(match terminals.iter().next() {
            Some(&t) => Subgraph::single_vertex(t),
            None => Subgraph::default(),
        });
    }
    let closure = g.metric_closure(terminals)?;
    let sparse = greedy_spanner(&closure.graph, alpha);
    let mut edges: BTreeSet<EdgeId> = BTreeSet::new();
    for &ceid in &sparse.edges {
        edges.extend(closure.witnesses[ceid].iter().copied());
    }
    Ok(Subgraph::from_edges(edges))
}

/// Pair-driven solver for additive and preserver constraints: pairs in
/// nonincreasing distance order (ties by index), each violated pair patched
/// with its witness shortest path. Long pairs go first so short ones reuse
/// their paths.
pub fn path_greedy(
    g: &PriorityGraph,
    pairs: &BTreeSet<(VertexId, VertexId)>,
    family: &ConstraintFamily,
) -> Result<Subgraph, SolveError> {
    if !matches!(family, ConstraintFamily::Additive(_) | ConstraintFamily::Preserver) {
        return Err(SolveError::IncompatibleSolver {
            solver: SolverKind::PathGreedy.to_string(),
            family: family.to_string(),
        });
    }
    let mut routed: Vec<(Weight, VertexId, VertexId, Vec<EdgeId>)> = Vec::new();
    for &(u, v) in pairs {
        let (d, path) = g.shortest_path(u, v)?;
        routed.push((d, u, v, path));
    }
    routed.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| (a.1, a.2).cmp(&(b.1, b.2))));

    let mut kept: BTreeSet<EdgeId> = BTreeSet::new();
    for (d, u, v, path) in routed {
        let bound = match family {
            ConstraintFamily::Additive(beta) => d + beta.clone(),
            ConstraintFamily::Preserver => d,
            _ => unreachable!("guarded above"),
        };
        let current = g.distances_from(u, Some(&kept))[v].clone();
        if current.map_or(true, |cur| cur > bound) {
            kept.extend(path);
        }
    }
    Ok(Subgraph::from_edges(kept))
}

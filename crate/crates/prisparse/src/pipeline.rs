//! The k-priority approximation pipeline.
//!
//! Nonzero priorities are rounded up to powers of two, each active level is
//! handed to a single-level solver, and the per-level outputs are merged
//! from the top down into one rated solution. Rounding costs at most a
//! factor 2 in the optimum and caps the number of distinct solver calls at
//! one per active level; merging preserves each level's guarantee because
//! higher-rated edges only ever help lower levels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::graph::{forest_extend, minimal_terminal_subtree, EdgeId, PriorityGraph, Subgraph, VertexId};
use crate::oracle;
use crate::solvers::{
    greedy_spanner, path_greedy, steiner_mst_2approx, subset_spanner_closure, SolveError,
    SolverKind,
};
use crate::validity::{
    is_valid_k_priority, solution_weight, ConstraintFamily, KPrioritySolution, ValidityReport,
};
use crate::weight::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PartitionStrategy {
    Exclusive,
    Inclusive,
    Pairwise,
}

impl fmt::Display for PartitionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionStrategy::Exclusive => write!(f, "exclusive"),
            PartitionStrategy::Inclusive => write!(f, "inclusive"),
            PartitionStrategy::Pairwise => write!(f, "pairwise"),
        }
    }
}

impl std::str::FromStr for PartitionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exclusive" => Ok(PartitionStrategy::Exclusive),
            "inclusive" => Ok(PartitionStrategy::Inclusive),
            "pairwise" => Ok(PartitionStrategy::Pairwise),
            other => Err(format!(
                "unknown strategy {other:?}; expected exclusive, inclusive, or pairwise"
            )),
        }
    }
}

/// Either a terminal set or a terminal-pair set for one level.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum LevelTerminals {
    Set(BTreeSet<VertexId>),
    Pairs(BTreeSet<(VertexId, VertexId)>),
}

impl LevelTerminals {
    pub fn is_empty(&self) -> bool {
        match self {
            LevelTerminals::Set(s) => s.is_empty(),
            LevelTerminals::Pairs(p) => p.is_empty(),
        }
    }
}

/// Per-level terminal assignment produced by one of the three strategies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partitioning {
    pub strategy: PartitionStrategy,
    pub levels: BTreeMap<u32, LevelTerminals>,
    pub root: Option<VertexId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PipelineError {
    #[error("instance has no terminals")]
    NoTerminals,
    #[error("vertex {vertex} has priority {priority}, which is not a power of two")]
    NotRounded { vertex: String, priority: u32 },
    #[error("strategy {strategy} is not valid for family {family}")]
    InvalidStrategyForFamily { strategy: String, family: String },
    #[error("merge pruning disconnected a terminal set; this is a bug")]
    PruningDisconnected,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Rounds every nonzero priority up to the next power of two and widens `k`
/// to match. Returns the rounded graph and its active levels `{1, 2, 4, ...}`.
pub fn round_up_priorities(g: &PriorityGraph) -> (PriorityGraph, BTreeSet<u32>) {
    let k2 = g.k().next_power_of_two();
    let priorities: Vec<u32> = (0..g.vertex_count())
        .map(|v| {
            let p = g.priority(v);
            if p == 0 {
                0
            } else {
                p.next_power_of_two()
            }
        })
        .collect();
    let rounded = g
        .with_priorities(priorities, k2)
        .expect("rounded priorities stay within the widened k");
    let actives = active_levels(k2);
    (rounded, actives)
}

/// The power-of-two levels up to and including `k` rounded up.
pub fn active_levels(k: u32) -> BTreeSet<u32> {
    let mut levels = BTreeSet::new();
    let mut a: u32 = 1;
    let top = k.next_power_of_two();
    while a <= top {
        levels.insert(a);
        if a > top / 2 {
            break;
        }
        a *= 2;
    }
    levels
}

/// Splits terminals across the active levels. Requires power-of-two
/// priorities (see `partition_any` to skip that check).
pub fn partition(
    g: &PriorityGraph,
    strategy: PartitionStrategy,
) -> Result<Partitioning, PipelineError> {
    for v in 0..g.vertex_count() {
        let p = g.priority(v);
        if p != 0 && !p.is_power_of_two() {
            return Err(PipelineError::NotRounded {
                vertex: g.label(v).to_string(),
                priority: p,
            });
        }
    }
    let levels: Vec<u32> = active_levels(g.k()).into_iter().collect();
    partition_at(g, strategy, &levels)
}

/// Splits terminals across all levels `1..=k` without rounding; used to
/// inspect partitionings of unrounded instances.
pub fn partition_any(
    g: &PriorityGraph,
    strategy: PartitionStrategy,
) -> Result<Partitioning, PipelineError> {
    let levels: Vec<u32> = (1..=g.k()).collect();
    partition_at(g, strategy, &levels)
}

fn partition_at(
    g: &PriorityGraph,
    strategy: PartitionStrategy,
    levels: &[u32],
) -> Result<Partitioning, PipelineError> {
    let terminals: Vec<VertexId> = g.terminals(1).into_iter().collect();
    if terminals.is_empty() {
        return Err(PipelineError::NoTerminals);
    }
    let mut map: BTreeMap<u32, LevelTerminals> = BTreeMap::new();
    let mut root = None;
    match strategy {
        PartitionStrategy::Inclusive => {
            for &i in levels {
                map.insert(i, LevelTerminals::Set(g.terminals(i)));
            }
        }
        PartitionStrategy::Pairwise => {
            let mut pairs: BTreeMap<u32, BTreeSet<(VertexId, VertexId)>> =
                levels.iter().map(|&i| (i, BTreeSet::new())).collect();
            for (i, &u) in terminals.iter().enumerate() {
                for &v in &terminals[i + 1..] {
                    let level = g.priority(u).min(g.priority(v));
                    if let Some(set) = pairs.get_mut(&level) {
                        set.insert((u, v));
                    }
                }
            }
            for (i, set) in pairs {
                map.insert(i, LevelTerminals::Pairs(set));
            }
        }
        PartitionStrategy::Exclusive => {
            let top = g.max_priority();
            let chosen = (0..g.vertex_count())
                .find(|&v| g.priority(v) == top)
                .expect("some vertex attains the maximum priority");
            root = Some(chosen);
            for &i in levels {
                let mut set: BTreeSet<VertexId> = (0..g.vertex_count())
                    .filter(|&v| g.priority(v) == i)
                    .collect();
                set.insert(chosen);
                map.insert(i, LevelTerminals::Set(set));
            }
        }
    }
    Ok(Partitioning { strategy, levels: map, root })
}

/// Runs the single-level solver once per distinct nonempty level input.
/// Identical level inputs (common after rounding) share one invocation.
/// Returns the per-level subgraphs and the invocation count.
pub fn solve_levels(
    g: &PriorityGraph,
    p: &Partitioning,
    family: &ConstraintFamily,
    solver: &SolverKind,
) -> Result<(BTreeMap<u32, Subgraph>, usize), PipelineError> {
    if !solver.compatible_with(family) {
        return Err(SolveError::IncompatibleSolver {
            solver: solver.to_string(),
            family: family.to_string(),
        }
        .into());
    }
    let mut cache: BTreeMap<LevelTerminals, Subgraph> = BTreeMap::new();
    let mut out = BTreeMap::new();
    let mut invocations = 0;
    for (&level, terms) in &p.levels {
        if terms.is_empty() {
            out.insert(level, Subgraph::default());
            continue;
        }
        if let Some(h) = cache.get(terms) {
            out.insert(level, h.clone());
            continue;
        }
        let h = solve_one(g, terms, family, solver)?;
        invocations += 1;
        cache.insert(terms.clone(), h.clone());
        out.insert(level, h);
    }
    Ok((out, invocations))
}

fn solve_one(
    g: &PriorityGraph,
    terms: &LevelTerminals,
    family: &ConstraintFamily,
    solver: &SolverKind,
) -> Result<Subgraph, SolveError> {
    let set = match terms {
        LevelTerminals::Pairs(pairs) => {
            if let SolverKind::PathGreedy = solver {
                return path_greedy(g, pairs, family);
            }
            // Set-based solvers see the union of the pair endpoints.
            pairs.iter().flat_map(|&(u, v)| [u, v]).collect()
        }
        LevelTerminals::Set(s) => s.clone(),
    };
    match solver {
        SolverKind::SteinerMst2Approx => steiner_mst_2approx(g, &set),
        SolverKind::GreedySpanner { alpha } => Ok(greedy_spanner(g, alpha)),
        SolverKind::SubsetSpannerClosure { alpha } => subset_spanner_closure(g, &set, alpha),
        SolverKind::PathGreedy => {
            let terms: Vec<VertexId> = set.iter().copied().collect();
            let mut pairs = BTreeSet::new();
            for (i, &u) in terms.iter().enumerate() {
                for &v in &terms[i + 1..] {
                    pairs.insert((u, v));
                }
            }
            path_greedy(g, &pairs, family)
        }
        SolverKind::Exact { budget } => {
            oracle::exact_single_priority(g, &set, family, budget)
                .map(|(h, _)| h)
                .map_err(SolveError::from)
        }
    }
}

/// The merged edge sets accumulated per active level, highest first. Each
/// snapshot contains the one above it; under the tree family every snapshot
/// is a forest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeTrace {
    pub snapshots: BTreeMap<u32, BTreeSet<EdgeId>>,
}

/// Combines the per-level subgraphs into one rated solution, highest level
/// first. Distance families take plain unions and rate each edge by the
/// highest level that chose it (capped at `k`). The tree family drops
/// lower-level edges that would close a cycle, then rates each edge by the
/// highest original level whose minimal terminal subtree still needs it, so
/// every level subgraph is exactly a terminal tree.
pub fn merge(
    g: &PriorityGraph,
    levels: &BTreeMap<u32, Subgraph>,
    family: &ConstraintFamily,
) -> Result<KPrioritySolution, PipelineError> {
    merge_with_trace(g, levels, family).map(|(s, _)| s)
}

pub fn merge_with_trace(
    g: &PriorityGraph,
    levels: &BTreeMap<u32, Subgraph>,
    family: &ConstraintFamily,
) -> Result<(KPrioritySolution, MergeTrace), PipelineError> {
    let actives: Vec<u32> = levels.keys().copied().collect();
    let mut snapshots: BTreeMap<u32, BTreeSet<EdgeId>> = BTreeMap::new();
    let mut acc: BTreeSet<EdgeId> = BTreeSet::new();
    for &a in actives.iter().rev() {
        let new = &levels[&a].edges;
        acc = match family {
            ConstraintFamily::Tree => forest_extend(g, &acc, new),
            _ => acc.union(new).copied().collect(),
        };
        snapshots.insert(a, acc.clone());
    }

    let mut rates: BTreeMap<EdgeId, u32> = BTreeMap::new();
    match family {
        ConstraintFamily::Tree => {
            for j in (1..=g.k()).rev() {
                let snapshot = actives
                    .iter()
                    .find(|&&a| a >= j)
                    .or(actives.last())
                    .map(|a| &snapshots[a]);
                let snapshot = match snapshot {
                    Some(s) => s,
                    None => continue,
                };
                let terminals = g.terminals(j);
                if terminals.len() <= 1 {
                    continue;
                }
                let subtree = minimal_terminal_subtree(g, snapshot, &terminals)
                    .ok_or(PipelineError::PruningDisconnected)?;
                for e in subtree {
                    rates.entry(e).or_insert(j);
                }
            }
        }
        _ => {
            for &a in actives.iter().rev() {
                let rate = a.min(g.k());
                for &e in &levels[&a].edges {
                    rates.entry(e).or_insert(rate);
                }
            }
        }
    }
    let solution =
        KPrioritySolution::new(g, rates).expect("merge assigns rates on existing edges in 1..=k");
    Ok((solution, MergeTrace { snapshots }))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Permits the exclusive strategy with distance families, which is known
    /// to produce invalid solutions on some instances; kept for exhibiting
    /// exactly that behavior.
    pub allow_exclusive_distance: bool,
}

/// Everything observable about one pipeline run.
#[derive(Debug, Clone)]
pub struct RunReport {
    /// Active level -> weight of the solver's output for that level.
    pub solver_weights: BTreeMap<u32, Weight>,
    /// Original level -> weight of the merged level subgraph.
    pub merged_level_weights: BTreeMap<u32, Weight>,
    /// Total rated weight of the solution.
    pub total_weight: Weight,
    pub invocations: usize,
    /// Number of active levels after rounding; invocations never exceed it.
    pub invocation_budget: usize,
    /// Vertices whose priority changed: (label, original, rounded).
    pub rounding: Vec<(String, u32, u32)>,
    pub validity: ValidityReport,
    pub wall: Duration,
}

pub fn run(
    g: &PriorityGraph,
    family: &ConstraintFamily,
    strategy: PartitionStrategy,
    solver: &SolverKind,
) -> Result<(KPrioritySolution, RunReport), PipelineError> {
    run_with_options(g, family, strategy, solver, RunOptions::default())
}

pub fn run_with_options(
    g: &PriorityGraph,
    family: &ConstraintFamily,
    strategy: PartitionStrategy,
    solver: &SolverKind,
    options: RunOptions,
) -> Result<(KPrioritySolution, RunReport), PipelineError> {
    if strategy == PartitionStrategy::Exclusive
        && family.is_distance_family()
        && !options.allow_exclusive_distance
    {
        return Err(PipelineError::InvalidStrategyForFamily {
            strategy: strategy.to_string(),
            family: family.to_string(),
        });
    }
    let start = Instant::now();
    let (rounded, actives) = round_up_priorities(g);
    let p = partition(&rounded, strategy)?;
    let (levels, invocations) = solve_levels(&rounded, &p, family, solver)?;
    let (solution, _) = merge_with_trace(g, &levels, family)?;

    let solver_weights = levels.iter().map(|(&a, h)| (a, h.weight(g))).collect();
    let merged_level_weights = (1..=g.k())
        .map(|i| (i, solution.level_subgraph(i).weight(g)))
        .collect();
    let total_weight =
        solution_weight(g, &solution).expect("merged solution rates edges of this graph");
    let rounding = (0..g.vertex_count())
        .filter(|&v| g.priority(v) != rounded.priority(v))
        .map(|v| (g.label(v).to_string(), g.priority(v), rounded.priority(v)))
        .collect();
    let validity = is_valid_k_priority(g, &solution, family);
    let report = RunReport {
        solver_weights,
        merged_level_weights,
        total_weight,
        invocations,
        invocation_budget: actives.len(),
        rounding,
        validity,
        wall: start.elapsed(),
    };
    Ok((solution, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validity::Violation;
    use crate::weight::weight;

    fn graph(
        vertices: &[(&str, u32)],
        edges: &[(&str, &str, i128)],
        k: u32,
    ) -> PriorityGraph {
        PriorityGraph::new(
            vertices.iter().map(|(l, p)| (l.to_string(), *p)).collect(),
            edges
                .iter()
                .map(|(u, v, w)| (u.to_string(), v.to_string(), weight(*w)))
                .collect(),
            k,
        )
        .unwrap()
    }

    fn set(g: &PriorityGraph, labels: &[&str]) -> LevelTerminals {
        LevelTerminals::Set(labels.iter().map(|l| g.vertex_id(l).unwrap()).collect())
    }

    fn eid(g: &PriorityGraph, u: &str, v: &str) -> EdgeId {
        g.edge_between(g.vertex_id(u).unwrap(), g.vertex_id(v).unwrap()).unwrap()
    }

    #[test]
    fn rounding_lifts_to_powers_of_two() {
        let g = graph(
            &[("p", 0), ("q", 1), ("r", 2), ("s", 3), ("t", 5), ("u", 8)],
            &[("p", "q", 1), ("q", "r", 1), ("r", "s", 1), ("s", "t", 1), ("t", "u", 1)],
            8,
        );
        let (rounded, actives) = round_up_priorities(&g);
        let got: Vec<u32> = (0..6).map(|v| rounded.priority(v)).collect();
        assert_eq!(got, vec![0, 1, 2, 4, 8, 8]);
        assert_eq!(rounded.k(), 8);
        assert_eq!(actives, [1, 2, 4, 8].into());
    }

    #[test]
    fn rounding_is_identity_on_powers_of_two() {
        let g = graph(&[("a", 1), ("b", 2), ("c", 4)], &[("a", "b", 1), ("b", "c", 1)], 4);
        let (rounded, actives) = round_up_priorities(&g);
        for v in 0..3 {
            assert_eq!(rounded.priority(v), g.priority(v));
        }
        assert_eq!(rounded.k(), 4);
        assert_eq!(actives, [1, 2, 4].into());
    }

    #[test]
    fn rounding_a_three_duplicates_the_upper_levels() {
        let g = graph(&[("a", 1), ("b", 3)], &[("a", "b", 1)], 3);
        let (rounded, actives) = round_up_priorities(&g);
        assert_eq!(rounded.priority(1), 4);
        assert_eq!(rounded.k(), 4);
        assert_eq!(actives, [1, 2, 4].into());
        let p = partition(&rounded, PartitionStrategy::Inclusive).unwrap();
        assert_eq!(p.levels[&2], p.levels[&4], "levels 2 and 4 see the same terminals");
    }

    #[test]
    fn partitioning_matches_the_worked_example() {
        let g = graph(
            &[("t1", 1), ("t2", 2), ("t3", 2)],
            &[("t1", "t2", 1), ("t2", "t3", 1)],
            2,
        );
        let inc = partition(&g, PartitionStrategy::Inclusive).unwrap();
        assert_eq!(inc.levels[&1], set(&g, &["t1", "t2", "t3"]));
        assert_eq!(inc.levels[&2], set(&g, &["t2", "t3"]));
        assert_eq!(inc.root, None);

        let pw = partition(&g, PartitionStrategy::Pairwise).unwrap();
        let t1 = g.vertex_id("t1").unwrap();
        let t2 = g.vertex_id("t2").unwrap();
        let t3 = g.vertex_id("t3").unwrap();
        assert_eq!(pw.levels[&1], LevelTerminals::Pairs([(t1, t2), (t1, t3)].into()));
        assert_eq!(pw.levels[&2], LevelTerminals::Pairs([(t2, t3)].into()));

        let ex = partition(&g, PartitionStrategy::Exclusive).unwrap();
        assert_eq!(ex.root, Some(t2), "smallest-index vertex of maximum priority");
        assert_eq!(ex.levels[&1], set(&g, &["t1", "t2"]));
        assert_eq!(ex.levels[&2], set(&g, &["t2", "t3"]));
    }

    #[test]
    fn partition_rejects_unrounded_and_empty_instances() {
        let g = graph(&[("a", 3), ("b", 1)], &[("a", "b", 1)], 4);
        assert!(matches!(
            partition(&g, PartitionStrategy::Inclusive),
            Err(PipelineError::NotRounded { priority: 3, .. })
        ));
        assert!(partition_any(&g, PartitionStrategy::Inclusive).is_ok());

        let empty = graph(&[("a", 0), ("b", 0)], &[("a", "b", 1)], 2);
        assert!(matches!(
            partition(&empty, PartitionStrategy::Inclusive),
            Err(PipelineError::NoTerminals)
        ));
    }

    #[test]
    fn partition_any_counts_every_level() {
        let g = graph(&[("a", 1), ("b", 3)], &[("a", "b", 1)], 3);
        let p = partition_any(&g, PartitionStrategy::Inclusive).unwrap();
        assert_eq!(p.levels.len(), 3);
        assert_eq!(p.levels[&2], set(&g, &["b"]));
        assert_eq!(p.levels[&3], set(&g, &["b"]));
    }

    #[test]
    fn duplicated_level_sets_share_one_invocation() {
        let g = graph(
            &[("a", 1), ("b", 4), ("c", 0)],
            &[("a", "c", 1), ("b", "c", 1)],
            4,
        );
        let (rounded, _) = round_up_priorities(&g);
        let p = partition(&rounded, PartitionStrategy::Inclusive).unwrap();
        let (levels, invocations) = solve_levels(
            &rounded,
            &p,
            &ConstraintFamily::Tree,
            &SolverKind::SteinerMst2Approx,
        )
        .unwrap();
        assert_eq!(invocations, 2, "levels 2 and 4 both see {{b}} and share a solve");
        assert_eq!(levels[&2], levels[&4]);
        assert!(levels[&2].edges.is_empty(), "a single terminal needs no edges");
        assert_eq!(levels[&1].edges.len(), 2);
    }

    #[test]
    fn incompatible_solver_is_rejected_up_front() {
        let g = graph(&[("a", 1), ("b", 1)], &[("a", "b", 1)], 1);
        let p = partition(&g, PartitionStrategy::Inclusive).unwrap();
        let err = solve_levels(
            &g,
            &p,
            &ConstraintFamily::Multiplicative(weight(3)),
            &SolverKind::SteinerMst2Approx,
        )
        .unwrap_err();
        assert!(matches!(err, PipelineError::Solve(SolveError::IncompatibleSolver { .. })));
    }

    #[test]
    fn merge_of_disjoint_levels_keeps_their_rates() {
        let g = graph(&[("a", 2), ("b", 2), ("c", 1)], &[("a", "b", 1), ("b", "c", 1)], 2);
        let ab = eid(&g, "a", "b");
        let bc = eid(&g, "b", "c");
        let levels: BTreeMap<u32, Subgraph> = [
            (1, Subgraph::from_edges([bc].into())),
            (2, Subgraph::from_edges([ab].into())),
        ]
        .into();
        let fam = ConstraintFamily::Multiplicative(weight(3));
        let s = merge(&g, &levels, &fam).unwrap();
        assert_eq!(s.rates(), &[(ab, 2), (bc, 1)].into());
    }

    #[test]
    fn tree_merge_drops_the_lower_rated_cycle_edge() {
        // Triangle; both levels independently span {a, c}: the top level
        // through b, the bottom level directly. The direct edge closes a
        // cycle during the merge and is pruned, leaving both edges rated 2.
        let g = graph(
            &[("a", 2), ("b", 0), ("c", 2)],
            &[("a", "b", 1), ("a", "c", 1), ("b", "c", 1)],
            2,
        );
        let ab = eid(&g, "a", "b");
        let ac = eid(&g, "a", "c");
        let bc = eid(&g, "b", "c");
        let levels: BTreeMap<u32, Subgraph> = [
            (1, Subgraph::from_edges([ac].into())),
            (2, Subgraph::from_edges([ab, bc].into())),
        ]
        .into();
        let (s, trace) = merge_with_trace(&g, &levels, &ConstraintFamily::Tree).unwrap();
        assert_eq!(s.rates(), &[(ab, 2), (bc, 2)].into());
        assert_eq!(trace.snapshots[&2], [ab, bc].into());
        assert_eq!(trace.snapshots[&1], [ab, bc].into(), "the pruned edge never lands");
    }

    #[test]
    fn tree_merge_rates_by_original_levels_after_rounding() {
        // Rounding lifts c from 3 to 4, so the level-4 solve spans c too.
        // The merged rates must still leave level 4 with only the a-b path,
        // and hand the branch to c its true level 3.
        let g = graph(
            &[("a", 4), ("b", 4), ("c", 3), ("x", 0)],
            &[("a", "x", 1), ("b", "x", 1), ("c", "x", 1)],
            4,
        );
        let (solution, report) = run(
            &g,
            &ConstraintFamily::Tree,
            PartitionStrategy::Inclusive,
            &SolverKind::SteinerMst2Approx,
        )
        .unwrap();
        assert!(report.validity.is_valid(), "{:?}", report.validity.violations);
        assert_eq!(report.rounding, vec![("c".to_string(), 3, 4)]);
        assert_eq!(solution.rate(eid(&g, "a", "x")), Some(4));
        assert_eq!(solution.rate(eid(&g, "b", "x")), Some(4));
        assert_eq!(solution.rate(eid(&g, "c", "x")), Some(3));
        assert_eq!(report.invocations, 1, "every active level sees the same terminal set");
    }

    #[test]
    fn single_level_run_is_the_plain_solver_result() {
        let g = graph(
            &[("a", 1), ("b", 1), ("c", 0)],
            &[("a", "c", 2), ("b", "c", 3), ("a", "b", 9)],
            1,
        );
        let (solution, report) = run(
            &g,
            &ConstraintFamily::Tree,
            PartitionStrategy::Inclusive,
            &SolverKind::SteinerMst2Approx,
        )
        .unwrap();
        assert_eq!(report.invocations, 1);
        assert_eq!(report.invocation_budget, 1);
        assert_eq!(report.total_weight, weight(5));
        assert!(report.validity.is_valid());
        assert!(solution.rates().values().all(|&r| r == 1));
    }

    #[test]
    fn uniform_priorities_put_everything_at_the_top_rate() {
        let g = graph(
            &[("a", 2), ("b", 2), ("c", 2)],
            &[("a", "b", 1), ("b", "c", 1), ("a", "c", 5)],
            2,
        );
        let (solution, report) = run(
            &g,
            &ConstraintFamily::Tree,
            PartitionStrategy::Inclusive,
            &SolverKind::SteinerMst2Approx,
        )
        .unwrap();
        assert!(report.validity.is_valid());
        assert!(solution.rates().values().all(|&r| r == 2));
        assert_eq!(report.total_weight, weight(4), "two unit edges, both at rate 2");
        assert_eq!(report.invocations, 1);
    }

    #[test]
    fn invocations_meet_the_budget_with_three_distinct_levels() {
        let g = graph(
            &[("a", 1), ("b", 2), ("c", 3), ("d", 0)],
            &[("a", "d", 1), ("b", "d", 1), ("c", "d", 1)],
            3,
        );
        let (_, report) = run(
            &g,
            &ConstraintFamily::Tree,
            PartitionStrategy::Inclusive,
            &SolverKind::SteinerMst2Approx,
        )
        .unwrap();
        assert_eq!(report.invocation_budget, 3, "active levels 1, 2, 4");
        assert_eq!(report.invocations, 3, "three genuinely distinct terminal sets");
        assert!(report.validity.is_valid());
    }

    fn ring_with_split_terminals() -> PriorityGraph {
        // Seven-cycle r-a-u-b-v-c-d-r, unit weights. Terminals r and v at
        // priority 2, u at priority 1.
        graph(
            &[("a", 0), ("b", 0), ("c", 0), ("d", 0), ("r", 2), ("u", 1), ("v", 2)],
            &[
                ("r", "a", 1),
                ("a", "u", 1),
                ("u", "b", 1),
                ("b", "v", 1),
                ("v", "c", 1),
                ("c", "d", 1),
                ("d", "r", 1),
            ],
            2,
        )
    }

    #[test]
    fn exclusive_strategy_carries_the_tree_family() {
        let g = ring_with_split_terminals();
        let (solution, report) = run(
            &g,
            &ConstraintFamily::Tree,
            PartitionStrategy::Exclusive,
            &SolverKind::SteinerMst2Approx,
        )
        .unwrap();
        assert!(report.validity.is_valid(), "{:?}", report.validity.violations);
        assert_eq!(solution.level_subgraph(2).weight(&g), weight(3), "r reaches v the short way");
    }

    #[test]
    fn exclusive_strategy_is_rejected_then_fails_when_forced() {
        let g = ring_with_split_terminals();
        let fam = ConstraintFamily::additive(weight(2)).unwrap();
        assert!(matches!(
            run(&g, &fam, PartitionStrategy::Exclusive, &SolverKind::PathGreedy),
            Err(PipelineError::InvalidStrategyForFamily { .. })
        ));

        let (_, report) = run_with_options(
            &g,
            &fam,
            PartitionStrategy::Exclusive,
            &SolverKind::PathGreedy,
            RunOptions { allow_exclusive_distance: true },
        )
        .unwrap();
        assert!(!report.validity.is_valid(), "u and v are never solved together");
        assert!(report.validity.violations.contains(&Violation::DistanceExceeded {
            level: 1,
            u: "u".into(),
            v: "v".into(),
            required: weight(4),
            actual: weight(5),
        }));

        let (_, inclusive) = run(&g, &fam, PartitionStrategy::Inclusive, &SolverKind::PathGreedy)
            .unwrap();
        assert!(inclusive.validity.is_valid(), "the inclusive split repairs the same instance");
    }

    #[test]
    fn merge_snapshots_sandwich_between_consecutive_levels() {
        let g = graph(
            &[("a", 2), ("b", 0), ("c", 2), ("d", 1)],
            &[("a", "b", 1), ("a", "c", 1), ("b", "c", 1), ("c", "d", 2)],
            2,
        );
        let (rounded, _) = round_up_priorities(&g);
        let p = partition(&rounded, PartitionStrategy::Inclusive).unwrap();
        let (levels, _) = solve_levels(
            &rounded,
            &p,
            &ConstraintFamily::Tree,
            &SolverKind::SteinerMst2Approx,
        )
        .unwrap();
        let (_, trace) = merge_with_trace(&g, &levels, &ConstraintFamily::Tree).unwrap();
        let top = &trace.snapshots[&2];
        let bottom = &trace.snapshots[&1];
        assert!(top.is_subset(bottom));
        let union: BTreeSet<EdgeId> = top.union(&levels[&1].edges).copied().collect();
        assert!(bottom.is_subset(&union), "merge adds nothing beyond the level inputs");
    }
}

//! Constraint families, rated solutions, and validity checking.
//!
//! A `KPrioritySolution` assigns each chosen edge a rate in `1..=k`. The
//! edges of rate at least `i` must form a valid single-priority sparsifier
//! for the level-`i` terminals, for every level. `is_valid_k_priority`
//! checks exactly that and reports every violated constraint.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::graph::{EdgeId, PriorityGraph, Subgraph, VertexId};
use crate::pipeline::{LevelTerminals, Partitioning};
use crate::weight::{format_weight, Weight};

/// What "valid sparsifier over terminals T" means per level.
///
/// `Multiplicative(1)` and `Additive(0)` coincide with `Preserver`; the
/// constructors canonicalize them so equality tests and dispatch see one
/// representation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintFamily {
    /// The level subgraph must be exactly a tree spanning the terminals:
    /// connected over T, acyclic, and with no edge off the unique
    /// terminal-connecting subtree.
    Tree,
    /// d_H(u,v) <= stretch * d_G(u,v) for all terminal pairs.
    Multiplicative(Weight),
    /// d_H(u,v) <= d_G(u,v) + slack for all terminal pairs.
    Additive(Weight),
    /// d_H(u,v) = d_G(u,v) for all terminal pairs.
    Preserver,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FamilyError {
    #[error("multiplicative stretch must be at least 1, got {0}")]
    InvalidStretch(String),
    #[error("additive slack must be nonnegative, got {0}")]
    InvalidSlack(String),
}

impl ConstraintFamily {
    pub fn multiplicative(stretch: Weight) -> Result<Self, FamilyError> {
        if stretch < Weight::from_integer(1) {
            return Err(FamilyError::InvalidStretch(format_weight(&stretch)));
        }
        if stretch == Weight::from_integer(1) {
            Ok(ConstraintFamily::Preserver)
        } else {
            Ok(ConstraintFamily::Multiplicative(stretch))
        }
    }

    pub fn additive(slack: Weight) -> Result<Self, FamilyError> {
        if slack < Weight::zero() {
            return Err(FamilyError::InvalidSlack(format_weight(&slack)));
        }
        if slack.is_zero() {
            Ok(ConstraintFamily::Preserver)
        } else {
            Ok(ConstraintFamily::Additive(slack))
        }
    }

    /// Distance families constrain terminal pairs; the tree family
    /// constrains shape.
    pub fn is_distance_family(&self) -> bool {
        !matches!(self, ConstraintFamily::Tree)
    }
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintFamily::Tree => write!(f, "tree"),
            ConstraintFamily::Multiplicative(a) => write!(f, "mult:{}", format_weight(a)),
            ConstraintFamily::Additive(b) => write!(f, "additive:{}", format_weight(b)),
            ConstraintFamily::Preserver => write!(f, "preserver"),
        }
    }
}

impl std::str::FromStr for ConstraintFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None => match s {
                "tree" => Ok(ConstraintFamily::Tree),
                "preserver" => Ok(ConstraintFamily::Preserver),
                other => Err(format!(
                    "unknown family {other:?}; expected tree, mult:<stretch>, additive:<slack>, or preserver"
                )),
            },
            Some(("mult", a)) => {
                let stretch = crate::weight::parse_weight(a)?;
                ConstraintFamily::multiplicative(stretch).map_err(|e| e.to_string())
            }
            Some(("additive", b)) => {
                let slack = crate::weight::parse_weight(b)?;
                ConstraintFamily::additive(slack).map_err(|e| e.to_string())
            }
            Some((other, _)) => Err(format!("unknown family {other:?}")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolutionError {
    #[error("rate refers to unknown edge index {index}")]
    UnknownEdge { index: EdgeId },
    #[error("rate {rate} outside 1..={k}")]
    InvalidRate { rate: u32, k: u32 },
}

/// Edge rates on `1..=k`. Edges absent from the map are excluded entirely.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KPrioritySolution {
    rates: BTreeMap<EdgeId, u32>,
}

impl KPrioritySolution {
    pub fn new(g: &PriorityGraph, rates: BTreeMap<EdgeId, u32>) -> Result<Self, SolutionError> {
        for (&eid, &rate) in &rates {
            if eid >= g.edge_count() {
                return Err(SolutionError::UnknownEdge { index: eid });
            }
            if rate < 1 || rate > g.k() {
                return Err(SolutionError::InvalidRate { rate, k: g.k() });
            }
        }
        Ok(KPrioritySolution { rates })
    }

    pub fn rates(&self) -> &BTreeMap<EdgeId, u32> {
        &self.rates
    }

    pub fn rate(&self, eid: EdgeId) -> Option<u32> {
        self.rates.get(&eid).copied()
    }

    /// Edges with rate at least `level`. The chain over growing `level` is
    /// nested by construction.
    pub fn level_subgraph(&self, level: u32) -> Subgraph {
        Subgraph::from_edges(
            self.rates
                .iter()
                .filter(|(_, &r)| r >= level)
                .map(|(&e, _)| e)
                .collect(),
        )
    }
}

/// Total rated weight: the sum of `rate * weight` over chosen edges.
pub fn solution_weight(g: &PriorityGraph, s: &KPrioritySolution) -> Result<Weight, SolutionError> {
    let mut total = Weight::zero();
    for (&eid, &rate) in s.rates() {
        if eid >= g.edge_count() {
            return Err(SolutionError::UnknownEdge { index: eid });
        }
        total += Weight::from_integer(rate as i128) * g.edge(eid).weight.clone();
    }
    Ok(total)
}

/// One broken constraint, tagged with the level it was detected at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DisconnectedPair { level: u32, u: String, v: String },
    DistanceExceeded { level: u32, u: String, v: String, required: Weight, actual: Weight },
    CycleFound { level: u32, cycle: Vec<String> },
    RedundantEdge { level: u32, u: String, v: String },
}

impl Violation {
    pub fn level(&self) -> u32 {
        match self {
            Violation::DisconnectedPair { level, .. }
            | Violation::DistanceExceeded { level, .. }
            | Violation::CycleFound { level, .. }
            | Violation::RedundantEdge { level, .. } => *level,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DisconnectedPair { level, u, v } => {
                write!(f, "level {level}: terminals {u} and {v} are disconnected")
            }
            Violation::DistanceExceeded { level, u, v, required, actual } => write!(
                f,
                "level {level}: distance {u}-{v} is {}, required at most {}",
                format_weight(actual),
                format_weight(required)
            ),
            Violation::CycleFound { level, cycle } => {
                write!(f, "level {level}: cycle through {}", cycle.join("-"))
            }
            Violation::RedundantEdge { level, u, v } => write!(
                f,
                "level {level}: edge {u}-{v} is not on the terminal-connecting tree"
            ),
        }
    }
}

/// Outcome of a validity check: a verdict per inspected level plus every
/// violation found, in deterministic order (levels ascending, pairs in
/// index order).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidityReport {
    pub per_level: BTreeMap<u32, bool>,
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks one subgraph against one terminal set.
pub fn is_valid_single(
    g: &PriorityGraph,
    terminals: &BTreeSet<VertexId>,
    h: &Subgraph,
    family: &ConstraintFamily,
) -> ValidityReport {
    let violations = check_level(g, terminals, h, family, 1);
    let mut per_level = BTreeMap::new();
    per_level.insert(1, violations.is_empty());
    ValidityReport { per_level, violations }
}

/// Checks the whole rate assignment: level `i` edges (rate >= i) against the
/// level-`i` terminals, for every level with terminals.
pub fn is_valid_k_priority(
    g: &PriorityGraph,
    s: &KPrioritySolution,
    family: &ConstraintFamily,
) -> ValidityReport {
    let mut report = ValidityReport::default();
    for level in 1..=g.k() {
        let terminals = g.terminals(level);
        if terminals.is_empty() {
            continue;
        }
        let h = s.level_subgraph(level);
        let violations = check_level(g, &terminals, &h, family, level);
        report.per_level.insert(level, violations.is_empty());
        report.violations.extend(violations);
    }
    report
}

fn check_level(
    g: &PriorityGraph,
    terminals: &BTreeSet<VertexId>,
    h: &Subgraph,
    family: &ConstraintFamily,
    level: u32,
) -> Vec<Violation> {
    let mut violations = Vec::new();
    if terminals.is_empty() {
        return violations;
    }

    // Component structure of the level subgraph.
    let mut dsu = crate::graph::Dsu::new(g.vertex_count());
    for &eid in &h.edges {
        let e = g.edge(eid);
        dsu.union(e.u, e.v);
    }
    let terms: Vec<VertexId> = terminals.iter().copied().collect();
    let connected = {
        let root = dsu.find(terms[0]);
        terms.iter().all(|&t| dsu.find(t) == root)
    };
    if !connected {
        for (i, &u) in terms.iter().enumerate() {
            for &v in &terms[i + 1..] {
                if dsu.find(u) != dsu.find(v) {
                    violations.push(Violation::DisconnectedPair {
                        level,
                        u: g.label(u).to_string(),
                        v: g.label(v).to_string(),
                    });
                }
            }
        }
    }

    match family {
        ConstraintFamily::Tree => {
            check_tree_shape(g, terminals, h, level, connected, &mut dsu, &mut violations)
        }
        _ => check_distances(g, terminals, h, family, level, &mut violations),
    }
    violations
}

/// Tree family: the terminal component must be acyclic and carry no edge off
/// the unique terminal-connecting subtree, and no edges may sit in other
/// components. A single terminal therefore admits only the empty subgraph.
fn check_tree_shape(
    g: &PriorityGraph,
    terminals: &BTreeSet<VertexId>,
    h: &Subgraph,
    level: u32,
    connected: bool,
    dsu: &mut crate::graph::Dsu,
    violations: &mut Vec<Violation>,
) {
    for cycle in fundamental_cycles(g, &h.edges) {
        violations.push(Violation::CycleFound {
            level,
            cycle: cycle.iter().map(|&v| g.label(v).to_string()).collect(),
        });
    }
    if !connected || !violations.is_empty() {
        return;
    }

    // Acyclic and terminal-connected: redundant edges are exactly those
    // stripped by repeatedly removing non-terminal leaves, plus every edge
    // outside the terminal component.
    let first = *terminals.iter().next().expect("nonempty");
    let terminal_root = dsu.find(first);
    let mut degree = vec![0usize; g.vertex_count()];
    let mut live: BTreeSet<EdgeId> = BTreeSet::new();
    let mut stray: Vec<EdgeId> = Vec::new();
    for &eid in &h.edges {
        let e = g.edge(eid);
        if dsu.find(e.u) == terminal_root {
            degree[e.u] += 1;
            degree[e.v] += 1;
            live.insert(eid);
        } else {
            stray.push(eid);
        }
    }
    loop {
        let strip: Vec<EdgeId> = live
            .iter()
            .copied()
            .filter(|&eid| {
                let e = g.edge(eid);
                (degree[e.u] == 1 && !terminals.contains(&e.u))
                    || (degree[e.v] == 1 && !terminals.contains(&e.v))
            })
            .collect();
        if strip.is_empty() {
            break;
        }
        for eid in strip {
            let e = g.edge(eid);
            degree[e.u] -= 1;
            degree[e.v] -= 1;
            live.remove(&eid);
            stray.push(eid);
        }
    }
    stray.sort();
    for eid in stray {
        let e = g.edge(eid);
        violations.push(Violation::RedundantEdge {
            level,
            u: g.label(e.u).to_string(),
            v: g.label(e.v).to_string(),
        });
    }
}

fn check_distances(
    g: &PriorityGraph,
    terminals: &BTreeSet<VertexId>,
    h: &Subgraph,
    family: &ConstraintFamily,
    level: u32,
    violations: &mut Vec<Violation>,
) {
    let terms: Vec<VertexId> = terminals.iter().copied().collect();
    if terms.len() < 2 {
        return;
    }
    let in_h: BTreeMap<VertexId, Vec<Option<Weight>>> = terms
        .iter()
        .map(|&t| (t, g.distances_from(t, Some(&h.edges))))
        .collect();
    let in_g: BTreeMap<VertexId, Vec<Option<Weight>>> =
        terms.iter().map(|&t| (t, g.distances_from(t, None))).collect();

    for (i, &u) in terms.iter().enumerate() {
        for &v in &terms[i + 1..] {
            let base = match in_g[&u][v].clone() {
                // Unreachable even in g: no requirement to meet.
                None => continue,
                Some(d) => d,
            };
            let required = match family {
                ConstraintFamily::Multiplicative(stretch) => stretch.clone() * base.clone(),
                ConstraintFamily::Additive(slack) => base.clone() + slack.clone(),
                ConstraintFamily::Preserver => base.clone(),
                ConstraintFamily::Tree => unreachable!("tree handled separately"),
            };
            match in_h[&u][v].clone() {
                // Already reported as a disconnected pair.
                None => continue,
                Some(actual) => {
                    if actual > required {
                        violations.push(Violation::DistanceExceeded {
                            level,
                            u: g.label(u).to_string(),
                            v: g.label(v).to_string(),
                            required,
                            actual,
                        });
                    }
                }
            }
        }
    }
}

/// One representative cycle per independent cycle of the edge set, via a DFS
/// forest: every non-forest edge closes exactly one cycle.
fn fundamental_cycles(g: &PriorityGraph, edges: &BTreeSet<EdgeId>) -> Vec<Vec<VertexId>> {
    let mut parent: Vec<Option<(VertexId, EdgeId)>> = vec![None; g.vertex_count()];
    let mut depth: Vec<usize> = vec![0; g.vertex_count()];
    let mut seen = vec![false; g.vertex_count()];
    let mut forest: BTreeSet<EdgeId> = BTreeSet::new();
    for start in 0..g.vertex_count() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &(y, eid) in g.neighbors(x) {
                if !edges.contains(&eid) || seen[y] {
                    continue;
                }
                seen[y] = true;
                parent[y] = Some((x, eid));
                depth[y] = depth[x] + 1;
                forest.insert(eid);
                stack.push(y);
            }
        }
    }

    let mut cycles = Vec::new();
    for &eid in edges {
        if forest.contains(&eid) {
            continue;
        }
        let e = g.edge(eid);
        let (mut a, mut b) = (e.u, e.v);
        let mut left = vec![a];
        let mut right = vec![b];
        while depth[a] > depth[b] {
            a = parent[a].expect("deeper vertex has a parent").0;
            left.push(a);
        }
        while depth[b] > depth[a] {
            b = parent[b].expect("deeper vertex has a parent").0;
            right.push(b);
        }
        while a != b {
            a = parent[a].expect("walk meets at the root").0;
            b = parent[b].expect("walk meets at the root").0;
            left.push(a);
            right.push(b);
        }
        right.pop();
        right.reverse();
        left.extend(right);
        cycles.push(left);
    }
    cycles
}

/// Per-level and total constraint counts of a partitioning: pair sets count
/// their pairs, terminal sets count all unordered terminal pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintCounts {
    pub per_level: BTreeMap<u32, u64>,
    pub total: u64,
}

pub fn constraint_count(p: &Partitioning) -> ConstraintCounts {
    let mut per_level = BTreeMap::new();
    let mut total = 0u64;
    for (&level, entry) in &p.levels {
        let n = match entry {
            LevelTerminals::Set(s) => {
                let m = s.len() as u64;
                m * m.saturating_sub(1) / 2
            }
            LevelTerminals::Pairs(pairs) => pairs.len() as u64,
        };
        per_level.insert(level, n);
        total += n;
    }
    ConstraintCounts { per_level, total }
}

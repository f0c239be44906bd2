//! Line-oriented text formats for instances and solutions.
//!
//! Weights are exact rationals ("3" or "7/2") so that round-tripping never
//! loses precision. Parsers report the offending line; serializers emit a
//! canonical order (sorted metadata, vertices by label, edges by id), so
//! equal values always produce identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use thiserror::Error;

use crate::graph::{EdgeId, GraphError, PriorityGraph};
use crate::pipeline::PartitionStrategy;
use crate::solvers::SolverKind;
use crate::validity::{
    solution_weight, ConstraintFamily, KPrioritySolution, SolutionError,
};
use crate::weight::{format_weight, is_positive, parse_weight, Weight};

pub const INSTANCE_HEADER: &str = "prisparse-instance v1";
pub const SOLUTION_HEADER: &str = "prisparse-solution v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("solution references instance {declared}, but validating against {actual}")]
    InstanceMismatch { declared: String, actual: String },
    #[error("solution rates edge {u}-{v}, which the instance does not have")]
    NoSuchEdge { u: String, v: String },
    #[error(transparent)]
    Solution(#[from] SolutionError),
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

/// A parsed instance: the graph plus free-form `meta key=value` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceFile {
    pub graph: PriorityGraph,
    pub meta: BTreeMap<String, String>,
}

impl InstanceFile {
    pub fn new(graph: PriorityGraph) -> Self {
        InstanceFile { graph, meta: BTreeMap::new() }
    }

    /// How solutions refer to this instance: its `name` metadata when
    /// present, otherwise a hash of its canonical serialization.
    pub fn reference(&self) -> String {
        match self.meta.get("name") {
            Some(name) => name.clone(),
            None => format!("{:016x}", fnv1a(serialize_instance(self).as_bytes())),
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub fn parse_instance(text: &str) -> Result<InstanceFile, FormatError> {
    let mut lines = significant_lines(text);
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| syntax(1, format!("missing `{INSTANCE_HEADER}` header")))?;
    if header != INSTANCE_HEADER {
        return Err(syntax(header_line, format!("expected `{INSTANCE_HEADER}` header")));
    }

    let mut meta = BTreeMap::new();
    let mut k: Option<(usize, u32)> = None;
    let mut vertices: Vec<(usize, String, u32)> = Vec::new();
    let mut seen_labels: BTreeMap<String, usize> = BTreeMap::new();
    let mut edges: Vec<(String, String, Weight)> = Vec::new();
    let mut seen_pairs: BTreeSet<(String, String)> = BTreeSet::new();
    let mut last_line = header_line;

    for (n, line) in lines {
        last_line = n;
        let mut parts = line.split_whitespace();
        let tag = parts.next().expect("significant lines are nonempty");
        let rest: Vec<&str> = parts.collect();
        match tag {
            "meta" => {
                let (key, value) = parse_meta_pair(n, &rest.join(" "))?;
                if meta.insert(key.clone(), value).is_some() {
                    return Err(syntax(n, format!("duplicate meta key {key}")));
                }
            }
            "k" => {
                let [value] = rest[..] else {
                    return Err(syntax(n, "expected `k <max priority>`"));
                };
                let value: u32 = value
                    .parse()
                    .map_err(|_| syntax(n, format!("invalid k {value:?}")))?;
                if value == 0 {
                    return Err(syntax(n, "k must be at least 1"));
                }
                if k.replace((n, value)).is_some() {
                    return Err(syntax(n, "duplicate k declaration"));
                }
            }
            "v" => {
                let [label, priority] = rest[..] else {
                    return Err(syntax(n, "expected `v <label> <priority>`"));
                };
                let priority: u32 = priority
                    .parse()
                    .map_err(|_| syntax(n, format!("invalid priority {priority:?}")))?;
                if seen_labels.insert(label.to_string(), n).is_some() {
                    return Err(syntax(n, format!("duplicate vertex {label}")));
                }
                vertices.push((n, label.to_string(), priority));
            }
            "e" => {
                let [u, v, w] = rest[..] else {
                    return Err(syntax(n, "expected `e <u> <v> <weight>`"));
                };
                for end in [u, v] {
                    if !seen_labels.contains_key(end) {
                        return Err(syntax(n, format!("unknown vertex {end}")));
                    }
                }
                if u == v {
                    return Err(syntax(n, format!("self-loop at {u}")));
                }
                let w = parse_weight(w).map_err(|e| syntax(n, e.to_string()))?;
                if !is_positive(&w) {
                    return Err(syntax(n, "edge weights must be positive"));
                }
                let pair = (u.min(v).to_string(), u.max(v).to_string());
                if !seen_pairs.insert(pair) {
                    return Err(syntax(n, format!("duplicate edge {u} {v}")));
                }
                edges.push((u.to_string(), v.to_string(), w));
            }
            other => return Err(syntax(n, format!("unknown directive {other:?}"))),
        }
    }

    let (_, k) = k.ok_or_else(|| syntax(last_line, "missing k declaration"))?;
    for (n, label, priority) in &vertices {
        if *priority > k {
            return Err(syntax(
                *n,
                format!("vertex {label} has priority {priority}, above k = {k}"),
            ));
        }
    }
    let graph = PriorityGraph::new(
        vertices.into_iter().map(|(_, l, p)| (l, p)).collect(),
        edges,
        k,
    )
    .map_err(|e| match e {
        // Everything constructible is pre-checked; weights are the one
        // validation the parser delegates.
        GraphError::NonPositiveWeight { .. } => syntax(last_line, e.to_string()),
        other => syntax(last_line, other.to_string()),
    })?;
    Ok(InstanceFile { graph, meta })
}

pub fn serialize_instance(ins: &InstanceFile) -> String {
    let g = &ins.graph;
    let mut out = String::new();
    out.push_str(INSTANCE_HEADER);
    out.push('\n');
    for (key, value) in &ins.meta {
        out.push_str(&format!("meta {key}={value}\n"));
    }
    out.push_str(&format!("k {}\n", g.k()));
    for v in 0..g.vertex_count() {
        out.push_str(&format!("v {} {}\n", g.label(v), g.priority(v)));
    }
    for e in g.edges() {
        out.push_str(&format!(
            "e {} {} {}\n",
            g.label(e.u),
            g.label(e.v),
            format_weight(&e.weight)
        ));
    }
    out
}

/// A parsed solution: the rated edges plus everything needed to re-validate
/// them against the instance they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub instance_ref: String,
    pub family: ConstraintFamily,
    pub strategy: PartitionStrategy,
    pub solver: SolverKind,
    pub weight: Weight,
    /// Level -> weight of the level subgraph (edges of rate >= level).
    pub level_weights: BTreeMap<u32, Weight>,
    /// Rated edges as label pairs, in instance edge order.
    pub rates: Vec<(String, String, u32)>,
}

impl SolutionFile {
    pub fn from_solution(
        ins: &InstanceFile,
        family: &ConstraintFamily,
        strategy: PartitionStrategy,
        solver: &SolverKind,
        solution: &KPrioritySolution,
    ) -> Self {
        let g = &ins.graph;
        let weight = solution_weight(g, solution).expect("solution rates this graph");
        let level_weights = (1..=g.k())
            .map(|i| (i, solution.level_subgraph(i).weight(g)))
            .collect();
        let rates = solution
            .rates()
            .iter()
            .map(|(&eid, &r)| {
                let e = g.edge(eid);
                (g.label(e.u).to_string(), g.label(e.v).to_string(), r)
            })
            .collect();
        SolutionFile {
            instance_ref: ins.reference(),
            family: family.clone(),
            strategy,
            solver: solver.clone(),
            weight,
            level_weights,
            rates,
        }
    }

    /// Maps the label pairs back onto the instance's edges. Fails when the
    /// solution names a different instance or a nonexistent edge.
    pub fn resolve(&self, ins: &InstanceFile) -> Result<KPrioritySolution, FormatError> {
        let actual = ins.reference();
        if self.instance_ref != actual {
            return Err(FormatError::InstanceMismatch {
                declared: self.instance_ref.clone(),
                actual,
            });
        }
        let g = &ins.graph;
        let mut rates: BTreeMap<EdgeId, u32> = BTreeMap::new();
        for (u, v, r) in &self.rates {
            let eid = g
                .vertex_id(u)
                .zip(g.vertex_id(v))
                .and_then(|(a, b)| g.edge_between(a, b))
                .ok_or_else(|| FormatError::NoSuchEdge { u: u.clone(), v: v.clone() })?;
            rates.insert(eid, *r);
        }
        Ok(KPrioritySolution::new(g, rates)?)
    }
}

pub fn parse_solution(text: &str) -> Result<SolutionFile, FormatError> {
    let mut lines = significant_lines(text);
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| syntax(1, format!("missing `{SOLUTION_HEADER}` header")))?;
    if header != SOLUTION_HEADER {
        return Err(syntax(header_line, format!("expected `{SOLUTION_HEADER}` header")));
    }

    let mut instance_ref: Option<String> = None;
    let mut meta: Option<(ConstraintFamily, PartitionStrategy, SolverKind, Weight)> = None;
    let mut level_weights = BTreeMap::new();
    let mut rates: Vec<(String, String, u32)> = Vec::new();
    let mut seen_pairs: BTreeSet<(String, String)> = BTreeSet::new();
    let mut last_line = header_line;

    for (n, line) in lines {
        last_line = n;
        let mut parts = line.split_whitespace();
        let tag = parts.next().expect("significant lines are nonempty");
        let rest: Vec<&str> = parts.collect();
        match tag {
            "instance" => {
                let [reference] = rest[..] else {
                    return Err(syntax(n, "expected `instance <name-or-hash>`"));
                };
                if instance_ref.replace(reference.to_string()).is_some() {
                    return Err(syntax(n, "duplicate instance line"));
                }
            }
            "meta" => {
                if meta.is_some() {
                    return Err(syntax(n, "duplicate meta line"));
                }
                let mut fields: BTreeMap<String, String> = BTreeMap::new();
                for pair in &rest {
                    let (key, value) = parse_meta_pair(n, pair)?;
                    if fields.insert(key.clone(), value).is_some() {
                        return Err(syntax(n, format!("duplicate meta key {key}")));
                    }
                }
                let mut take = |key: &str| {
                    fields
                        .remove(key)
                        .ok_or_else(|| syntax(n, format!("meta line is missing {key}=")))
                };
                let family = ConstraintFamily::from_str(&take("family")?)
                    .map_err(|e| syntax(n, e))?;
                let strategy = PartitionStrategy::from_str(&take("strategy")?)
                    .map_err(|e| syntax(n, e))?;
                let solver =
                    SolverKind::from_str(&take("solver")?).map_err(|e| syntax(n, e))?;
                let weight =
                    parse_weight(&take("weight")?).map_err(|e| syntax(n, e.to_string()))?;
                if let Some(extra) = fields.keys().next() {
                    return Err(syntax(n, format!("unknown meta key {extra}")));
                }
                meta = Some((family, strategy, solver, weight));
            }
            "levelweight" => {
                let [level, w] = rest[..] else {
                    return Err(syntax(n, "expected `levelweight <level> <weight>`"));
                };
                let level: u32 = level
                    .parse()
                    .map_err(|_| syntax(n, format!("invalid level {level:?}")))?;
                let w = parse_weight(w).map_err(|e| syntax(n, e.to_string()))?;
                if level_weights.insert(level, w).is_some() {
                    return Err(syntax(n, format!("duplicate levelweight for level {level}")));
                }
            }
            "r" => {
                let [u, v, rate] = rest[..] else {
                    return Err(syntax(n, "expected `r <u> <v> <rate>`"));
                };
                let rate: u32 = rate
                    .parse()
                    .map_err(|_| syntax(n, format!("invalid rate {rate:?}")))?;
                if rate == 0 {
                    return Err(syntax(n, "rates start at 1; omit excluded edges"));
                }
                let pair = (u.min(v).to_string(), u.max(v).to_string());
                if !seen_pairs.insert(pair) {
                    return Err(syntax(n, format!("duplicate rate for edge {u} {v}")));
                }
                rates.push((u.to_string(), v.to_string(), rate));
            }
            other => return Err(syntax(n, format!("unknown directive {other:?}"))),
        }
    }

    let instance_ref =
        instance_ref.ok_or_else(|| syntax(last_line, "missing instance line"))?;
    let (family, strategy, solver, weight) =
        meta.ok_or_else(|| syntax(last_line, "missing meta line"))?;
    Ok(SolutionFile { instance_ref, family, strategy, solver, weight, level_weights, rates })
}

pub fn serialize_solution(sol: &SolutionFile) -> String {
    let mut out = String::new();
    out.push_str(SOLUTION_HEADER);
    out.push('\n');
    out.push_str(&format!("instance {}\n", sol.instance_ref));
    out.push_str(&format!(
        "meta family={} strategy={} solver={} weight={}\n",
        sol.family,
        sol.strategy,
        sol.solver,
        format_weight(&sol.weight)
    ));
    for (level, w) in &sol.level_weights {
        out.push_str(&format!("levelweight {level} {}\n", format_weight(w)));
    }
    for (u, v, r) in &sol.rates {
        out.push_str(&format!("r {u} {v} {r}\n"));
    }
    out
}

/// Numbered, trimmed lines with blanks and `#` comment lines removed.
fn significant_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
}

fn parse_meta_pair(line: usize, s: &str) -> Result<(String, String), FormatError> {
    match s.split_once('=') {
        Some((key, value)) if !key.is_empty() => Ok((key.to_string(), value.to_string())),
        _ => Err(syntax(line, format!("expected key=value, got {s:?}"))),
    }
}

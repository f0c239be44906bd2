//! Seeded random instance generation for sweeps and benchmarks.
//!
//! All sampling runs through one ChaCha8 stream in a fixed order, so a seed
//! pins the instance bytes exactly. Generation retries until the terminals
//! land in one component; if that never happens (say p = 0), the last
//! candidate is patched deterministically and the patch is recorded in the
//! instance metadata.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::format::InstanceFile;
use crate::graph::{all_connected, PriorityGraph, VertexId};
use crate::weight::{weight, Weight};

const ATTEMPTS: usize = 20;
const MAX_EDGE_WEIGHT: i128 = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GenModel {
    /// Each of the n·(n−1)/2 possible edges appears with probability p.
    Er { n: usize, p: f64 },
    Grid { rows: usize, cols: usize },
    /// One hub joined to n−1 leaves.
    Star { n: usize },
}

impl GenModel {
    fn vertex_count(&self) -> usize {
        match *self {
            GenModel::Er { n, .. } | GenModel::Star { n } => n,
            GenModel::Grid { rows, cols } => rows * cols,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorityDist {
    /// Uniform over 0..=k.
    Uniform,
    Constant(u32),
}

impl fmt::Display for PriorityDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorityDist::Uniform => write!(f, "uniform"),
            PriorityDist::Constant(p) => write!(f, "constant:{p}"),
        }
    }
}

impl std::str::FromStr for PriorityDist {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "uniform" {
            return Ok(PriorityDist::Uniform);
        }
        match s.strip_prefix("constant:").map(str::parse) {
            Some(Ok(p)) => Ok(PriorityDist::Constant(p)),
            _ => Err(format!(
                "unknown priority distribution {s:?}; expected uniform or constant:<p>"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub model: GenModel,
    pub k: u32,
    pub priorities: PriorityDist,
    pub seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("instances need at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("edge probability must lie in [0, 1], got {0}")]
    BadProbability(f64),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("constant priority {0} exceeds k = {1}")]
    PriorityAboveK(u32, u32),
}

pub fn generate(params: &GenParams) -> Result<InstanceFile, GenError> {
    let n = params.model.vertex_count();
    if n < 2 {
        return Err(GenError::TooFewVertices(n));
    }
    if let GenModel::Er { p, .. } = params.model {
        if !(0.0..=1.0).contains(&p) {
            return Err(GenError::BadProbability(p));
        }
    }
    if params.k == 0 {
        return Err(GenError::ZeroK);
    }
    if let PriorityDist::Constant(p) = params.priorities {
        if p > params.k {
            return Err(GenError::PriorityAboveK(p, params.k));
        }
    }

    let width = (n - 1).to_string().len();
    let labels: Vec<String> = (0..n).map(|i| format!("v{i:0width$}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut candidate = sample(params, &labels, &mut rng);
    for _ in 1..ATTEMPTS {
        if admissible(&candidate, params) {
            break;
        }
        candidate = sample(params, &labels, &mut rng);
    }

    let mut meta = base_meta(params);
    if !admissible(&candidate, params) {
        candidate = patch(candidate, params, &labels, &mut rng, &mut meta);
    }
    Ok(InstanceFile { graph: candidate, meta })
}

fn sample(params: &GenParams, labels: &[String], rng: &mut ChaCha8Rng) -> PriorityGraph {
    let n = labels.len();
    let mut edges: Vec<(String, String, Weight)> = Vec::new();
    let w = |rng: &mut ChaCha8Rng| weight(rng.gen_range(1..=MAX_EDGE_WEIGHT));
    match params.model {
        GenModel::Er { p, .. } => {
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(p) {
                        let wt = w(rng);
                        edges.push((labels[i].clone(), labels[j].clone(), wt));
                    }
                }
            }
        }
        GenModel::Grid { rows, cols } => {
            for r in 0..rows {
                for c in 0..cols {
                    let here = r * cols + c;
                    if c + 1 < cols {
                        let wt = w(rng);
                        edges.push((labels[here].clone(), labels[here + 1].clone(), wt));
                    }
                    if r + 1 < rows {
                        let wt = w(rng);
                        edges.push((labels[here].clone(), labels[here + cols].clone(), wt));
                    }
                }
            }
        }
        GenModel::Star { .. } => {
            for leaf in 1..n {
                let wt = w(rng);
                edges.push((labels[0].clone(), labels[leaf].clone(), wt));
            }
        }
    }
    let priorities: Vec<u32> = (0..n)
        .map(|_| match params.priorities {
            PriorityDist::Uniform => rng.gen_range(0..=params.k),
            PriorityDist::Constant(p) => p,
        })
        .collect();
    let vertices = labels
        .iter()
        .cloned()
        .zip(priorities)
        .collect();
    PriorityGraph::new(vertices, edges, params.k).expect("sampled instances are well-formed")
}

/// Terminals must share one component; beyond that, an instance is only
/// worth keeping if it has two of them, except when a constant-zero
/// distribution asks for none at all.
fn admissible(g: &PriorityGraph, params: &GenParams) -> bool {
    let t1 = g.terminals(1);
    if params.priorities != PriorityDist::Constant(0) && t1.len() < 2 {
        return false;
    }
    let all: BTreeSet<_> = (0..g.edge_count()).collect();
    all_connected(g, &all, &t1)
}

/// Deterministic repair for a candidate that never came out admissible:
/// promote vertices to reach two terminals, then chain the components that
/// hold terminals. Both patches land in the metadata.
fn patch(
    g: PriorityGraph,
    params: &GenParams,
    labels: &[String],
    rng: &mut ChaCha8Rng,
    meta: &mut std::collections::BTreeMap<String, String>,
) -> PriorityGraph {
    let n = g.vertex_count();
    let mut priorities: Vec<u32> = (0..n).map(|v| g.priority(v)).collect();
    let mut have = priorities.iter().filter(|&&p| p >= 1).count();
    let mut promoted = 0;
    if params.priorities != PriorityDist::Constant(0) {
        for p in priorities.iter_mut() {
            if have >= 2 {
                break;
            }
            if *p == 0 {
                *p = 1;
                have += 1;
                promoted += 1;
            }
        }
    }
    if promoted > 0 {
        meta.insert("patched-terminals".into(), promoted.to_string());
    }

    let mut edges: Vec<(String, String, Weight)> = g
        .edges()
        .iter()
        .map(|e| (labels[e.u].clone(), labels[e.v].clone(), e.weight.clone()))
        .collect();
    let reps = terminal_component_reps(&g, &priorities);
    for pair in reps.windows(2) {
        let wt = weight(rng.gen_range(1..=MAX_EDGE_WEIGHT));
        edges.push((labels[pair[0]].clone(), labels[pair[1]].clone(), wt));
    }
    if reps.len() > 1 {
        meta.insert("patched-edges".into(), (reps.len() - 1).to_string());
    }
    let vertices = labels.iter().cloned().zip(priorities).collect();
    PriorityGraph::new(vertices, edges, params.k).expect("patched instances are well-formed")
}

/// Smallest vertex of each component that contains a terminal, ascending.
fn terminal_component_reps(g: &PriorityGraph, priorities: &[u32]) -> Vec<VertexId> {
    let mut comp = vec![usize::MAX; g.vertex_count()];
    let mut reps = Vec::new();
    for start in 0..g.vertex_count() {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = start;
        let mut has_terminal = priorities[start] >= 1;
        while let Some(x) = stack.pop() {
            for &(y, _) in g.neighbors(x) {
                if comp[y] == usize::MAX {
                    comp[y] = start;
                    has_terminal |= priorities[y] >= 1;
                    stack.push(y);
                }
            }
        }
        if has_terminal {
            reps.push(start);
        }
    }
    reps
}

fn base_meta(params: &GenParams) -> std::collections::BTreeMap<String, String> {
    let mut meta = std::collections::BTreeMap::new();
    match params.model {
        GenModel::Er { n, p } => {
            meta.insert("model".into(), "er".into());
            meta.insert("n".into(), n.to_string());
            meta.insert("p".into(), p.to_string());
        }
        GenModel::Grid { rows, cols } => {
            meta.insert("model".into(), "grid".into());
            meta.insert("dims".into(), format!("{rows}x{cols}"));
        }
        GenModel::Star { n } => {
            meta.insert("model".into(), "star".into());
            meta.insert("n".into(), n.to_string());
        }
    }
    meta.insert("k".into(), params.k.to_string());
    meta.insert("prioritydist".into(), params.priorities.to_string());
    meta.insert("seed".into(), params.seed.to_string());
    meta
}

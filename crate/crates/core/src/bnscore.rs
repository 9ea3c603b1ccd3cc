//! Decomposable Bayesian-network scores (fNML, qNML, BDeu) and greedy structure search.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use serde::Serialize;

use crate::complexity::comp_multinomial_exact;
use crate::error::{MdlError, Result};
use crate::math::{lgamma, ml_log_likelihood};

/// Cap on the number of joint configurations a variable set may collapse into.
pub const MAX_COLLAPSED_ARITY: u128 = 1_000_000;
pub const MAX_NODES: usize = 64;

/// Complete categorical data, stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalDataset {
    names: Vec<String>,
    arities: Vec<usize>,
    columns: Vec<Vec<usize>>,
}

impl CategoricalDataset {
    pub fn new(names: Vec<String>, arities: Vec<usize>, columns: Vec<Vec<usize>>) -> Result<Self> {
        if names.len() != arities.len() || names.len() != columns.len() {
            return Err(MdlError::invalid("names, arities and columns differ in length"));
        }
        let rows = columns.first().map_or(0, Vec::len);
        for ((name, &r), col) in names.iter().zip(&arities).zip(&columns) {
            if r < 2 {
                return Err(MdlError::invalid(format!("column {name} needs arity >= 2")));
            }
            if col.len() != rows {
                return Err(MdlError::invalid(format!("column {name} has {} rows, expected {rows}", col.len())));
            }
            if let Some(v) = col.iter().find(|&&v| v >= r) {
                return Err(MdlError::invalid(format!("value {v} out of range in column {name} (arity {r})")));
            }
        }
        Ok(CategoricalDataset { names, arities, columns })
    }

    /// Columns named `X0, X1, …` with arities inferred as `max(2, max value + 1)`.
    pub fn from_columns(columns: Vec<Vec<usize>>) -> Result<Self> {
        let arities = columns.iter().map(|c| c.iter().max().map_or(2, |m| (m + 1).max(2))).collect();
        let names = (0..columns.len()).map(|i| format!("X{i}")).collect();
        CategoricalDataset::new(names, arities, columns)
    }

    pub fn nodes(&self) -> usize {
        self.columns.len()
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn column(&self, i: usize) -> &[usize] {
        &self.columns[i]
    }

    /// Product of arities of `vars`, guarded against overflow.
    fn configurations(&self, vars: &[usize]) -> Result<u128> {
        vars.iter().try_fold(1u128, |acc, &v| {
            acc.checked_mul(self.arities[v] as u128).ok_or(MdlError::UnsupportedCardinality(u128::MAX))
        })
    }

    /// Mixed-radix configuration code of `vars` for every row.
    fn codes(&self, vars: &[usize]) -> Result<Vec<u128>> {
        self.configurations(vars)?;
        let mut codes = vec![0u128; self.rows()];
        for &v in vars {
            let r = self.arities[v] as u128;
            for (c, &x) in codes.iter_mut().zip(&self.columns[v]) {
                *c = *c * r + x as u128;
            }
        }
        Ok(codes)
    }

    /// Child-value counts per observed parent configuration, in code order.
    fn conditional_counts(&self, child: usize, parents: &[usize]) -> Result<Vec<Vec<u64>>> {
        let mut keyed: Vec<(u128, usize)> =
            self.codes(parents)?.into_iter().zip(self.columns[child].iter().copied()).collect();
        keyed.sort_unstable();
        let r = self.arities[child];
        let mut tables: Vec<Vec<u64>> = Vec::new();
        let mut last = None;
        for (code, value) in keyed {
            if last != Some(code) {
                tables.push(vec![0; r]);
                last = Some(code);
            }
            tables.last_mut().expect("pushed")[value] += 1;
        }
        Ok(tables)
    }

    /// Counts of the observed joint configurations of `vars`.
    fn joint_counts(&self, vars: &[usize]) -> Result<Vec<u64>> {
        let mut codes = self.codes(vars)?;
        codes.sort_unstable();
        let mut counts = Vec::new();
        let mut last = None;
        for code in codes {
            if last == Some(code) {
                *counts.last_mut().expect("pushed") += 1;
            } else {
                counts.push(1);
                last = Some(code);
            }
        }
        Ok(counts)
    }
}

/// Parent sets of a directed acyclic graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DagStructure {
    parents: Vec<Vec<usize>>,
}

impl DagStructure {
    pub fn empty(nodes: usize) -> Self {
        DagStructure { parents: vec![Vec::new(); nodes] }
    }

    pub fn from_parents(mut parents: Vec<Vec<usize>>) -> Result<Self> {
        let n = parents.len();
        for (i, p) in parents.iter_mut().enumerate() {
            p.sort_unstable();
            p.dedup();
            if p.iter().any(|&j| j >= n || j == i) {
                return Err(MdlError::invalid(format!("invalid parent set for node {i}")));
            }
        }
        let dag = DagStructure { parents };
        if dag.topological_order().is_none() {
            return Err(MdlError::invalid("graph has a cycle"));
        }
        Ok(dag)
    }

    /// Builds from `(from, to)` edges.
    pub fn from_edges(nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut parents = vec![Vec::new(); nodes];
        for &(a, b) in edges {
            if b >= nodes {
                return Err(MdlError::invalid(format!("edge target {b} out of range")));
            }
            parents[b].push(a);
        }
        DagStructure::from_parents(parents)
    }

    pub fn nodes(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].binary_search(&from).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (to, ps) in self.parents.iter().enumerate() {
            out.extend(ps.iter().map(|&from| (from, to)));
        }
        out.sort_unstable();
        out
    }

    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.nodes();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (to, ps) in self.parents.iter().enumerate() {
            for &from in ps {
                children[from].push(to);
            }
        }
        let mut ready: Vec<usize> = (0..n).rev().filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop() {
            order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Whether a directed path `from ⇝ to` exists, optionally ignoring one edge.
    fn reaches(&self, from: usize, to: usize, skip: Option<(usize, usize)>) -> bool {
        let mut children = vec![Vec::new(); self.nodes()];
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                if skip != Some((p, c)) {
                    children[p].push(c);
                }
            }
        }
        let mut seen = vec![false; self.nodes()];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if !std::mem::replace(&mut seen[v], true) {
                stack.extend(children[v].iter().copied());
            }
        }
        false
    }

    fn with_parents(&self, node: usize, parents: Vec<usize>) -> DagStructure {
        let mut next = self.clone();
        next.parents[node] = parents;
        next
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BnScore {
    Fnml,
    Qnml,
    Bdeu { alpha: f64 },
}

impl fmt::Display for BnScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BnScore::Fnml => write!(f, "fnml"),
            BnScore::Qnml => write!(f, "qnml"),
            BnScore::Bdeu { alpha } => write!(f, "bdeu({alpha})"),
        }
    }
}

/// One multinomial NML term per observed parent configuration.
pub fn fnml_local(data: &CategoricalDataset, child: usize, parents: &[usize]) -> Result<f64> {
    let r = data.arities[child] as u64;
    let mut total = 0.0;
    for counts in data.conditional_counts(child, parents)? {
        let n: u64 = counts.iter().sum();
        total += ml_log_likelihood(&counts) - comp_multinomial_exact(n, r)?.nats;
    }
    Ok(total)
}

/// Multinomial NML of the collapsed joint configurations of `vars`.
fn collapsed_nml(data: &CategoricalDataset, vars: &[usize]) -> Result<f64> {
    if vars.is_empty() {
        return Ok(0.0);
    }
    let arity = data.configurations(vars)?;
    if arity > MAX_COLLAPSED_ARITY {
        return Err(MdlError::UnsupportedCardinality(arity));
    }
    let counts = data.joint_counts(vars)?;
    Ok(ml_log_likelihood(&counts) - comp_multinomial_exact(data.rows() as u64, arity as u64)?.nats)
}

/// `log NML(child ∪ parents) − log NML(parents)` over collapsed configurations.
pub fn qnml_local(data: &CategoricalDataset, child: usize, parents: &[usize]) -> Result<f64> {
    let mut family: Vec<usize> = parents.to_vec();
    family.push(child);
    Ok(collapsed_nml(data, &family)? - collapsed_nml(data, parents)?)
}

/// Dirichlet-multinomial marginal with per-cell concentration `α/(r·q)`.
pub fn bdeu_local(data: &CategoricalDataset, child: usize, parents: &[usize], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(MdlError::invalid(format!("BDeu equivalent sample size must be positive, got {alpha}")));
    }
    let r = data.arities[child] as f64;
    let q = data.configurations(parents)? as f64;
    let row = alpha / q;
    let cell = alpha / (r * q);
    let mut total = 0.0;
    for counts in data.conditional_counts(child, parents)? {
        let n: u64 = counts.iter().sum();
        total += lgamma(row) - lgamma(row + n as f64);
        for &c in counts.iter().filter(|&&c| c > 0) {
            total += lgamma(cell + c as f64) - lgamma(cell);
        }
    }
    Ok(total)
}

pub fn local_score(data: &CategoricalDataset, score: BnScore, child: usize, parents: &[usize]) -> Result<f64> {
    match score {
        BnScore::Fnml => fnml_local(data, child, parents),
        BnScore::Qnml => qnml_local(data, child, parents),
        BnScore::Bdeu { alpha } => bdeu_local(data, child, parents, alpha),
    }
}

pub fn total_score(data: &CategoricalDataset, dag: &DagStructure, score: BnScore) -> Result<f64> {
    check_dag(data, dag)?;
    (0..dag.nodes()).map(|i| local_score(data, score, i, dag.parents(i))).sum()
}

pub fn fnml_total(data: &CategoricalDataset, dag: &DagStructure) -> Result<f64> {
    total_score(data, dag, BnScore::Fnml)
}

fn check_dag(data: &CategoricalDataset, dag: &DagStructure) -> Result<()> {
    if dag.nodes() != data.nodes() {
        return Err(MdlError::invalid(format!(
            "graph has {} nodes but data has {} columns",
            dag.nodes(),
            data.nodes()
        )));
    }
    Ok(())
}

/// Memoized local scores keyed by `(child, sorted parents)`, for one score.
#[derive(Debug)]
pub struct LocalScoreCache {
    score: BnScore,
    map: RwLock<HashMap<(usize, Vec<usize>), f64>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl LocalScoreCache {
    pub fn new(score: BnScore) -> Self {
        LocalScoreCache { score, map: RwLock::new(HashMap::new()), hits: AtomicU64::new(0), misses: AtomicU64::new(0) }
    }

    pub fn score(&self) -> BnScore {
        self.score
    }

    pub fn local(&self, data: &CategoricalDataset, child: usize, parents: &[usize]) -> Result<f64> {
        let mut key_parents = parents.to_vec();
        key_parents.sort_unstable();
        let key = (child, key_parents);
        if let Some(&v) = self.map.read().expect("cache lock").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let v = local_score(data, self.score, child, &key.1)?;
        // concurrent inserts of the same key carry the same value
        self.map.write().expect("cache lock").insert(key, v);
        Ok(v)
    }

    pub fn total(&self, data: &CategoricalDataset, dag: &DagStructure) -> Result<f64> {
        check_dag(data, dag)?;
        (0..dag.nodes()).map(|i| self.local(data, i, dag.parents(i))).sum()
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum EdgeMove {
    Add { from: usize, to: usize },
    Delete { from: usize, to: usize },
    Reverse { from: usize, to: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub iteration: usize,
    #[serde(rename = "move")]
    pub edge_move: EdgeMove,
    pub delta: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HillClimbConfig {
    pub score: BnScore,
    pub max_parents: usize,
    pub max_iters: usize,
    /// Recorded for reproducibility; the search itself is deterministic.
    pub seed: u64,
}

impl HillClimbConfig {
    pub fn new(score: BnScore) -> Self {
        HillClimbConfig { score, max_parents: 4, max_iters: 1000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HillClimbResult {
    pub dag: DagStructure,
    pub score: f64,
    pub locals: Vec<f64>,
    pub trace: Vec<TraceStep>,
    pub converged: bool,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub seed: u64,
}

/// A move and the `(node, new parent set)` changes it makes.
type MoveEffect = (EdgeMove, Vec<(usize, Vec<usize>)>);

/// Candidate moves in lexicographic order with the parent sets they produce.
fn candidate_moves(dag: &DagStructure, max_parents: usize) -> Vec<MoveEffect> {
    let n = dag.nodes();
    let mut out = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if from == to {
                continue;
            }
            if dag.has_edge(from, to) {
                let mut without = dag.parents(to).to_vec();
                without.retain(|&p| p != from);
                out.push((EdgeMove::Delete { from, to }, vec![(to, without.clone())]));
                if dag.parents(from).len() < max_parents && !dag.reaches(from, to, Some((from, to))) {
                    let mut gained = dag.parents(from).to_vec();
                    gained.push(to);
                    gained.sort_unstable();
                    out.push((EdgeMove::Reverse { from, to }, vec![(to, without), (from, gained)]));
                }
            } else if !dag.has_edge(to, from) && dag.parents(to).len() < max_parents && !dag.reaches(to, from, None) {
                let mut with = dag.parents(to).to_vec();
                with.push(from);
                with.sort_unstable();
                out.push((EdgeMove::Add { from, to }, vec![(to, with)]));
            }
        }
    }
    out.sort_by_key(|m| m.0);
    out
}

/// Best-improvement hill climbing from the empty graph over single-edge moves.
pub fn hill_climb(data: &CategoricalDataset, config: &HillClimbConfig) -> Result<HillClimbResult> {
    if data.nodes() > MAX_NODES {
        return Err(MdlError::invalid(format!("at most {MAX_NODES} variables are supported")));
    }
    let cache = LocalScoreCache::new(config.score);
    let mut dag = DagStructure::empty(data.nodes());
    let mut locals: Vec<f64> = (0..data.nodes()).map(|i| cache.local(data, i, &[])).collect::<Result<_>>()?;
    let mut trace = Vec::new();
    let mut converged = false;
    for iteration in 1..=config.max_iters {
        let moves = candidate_moves(&dag, config.max_parents);
        let deltas = evaluate_moves(data, &cache, &moves, &locals);
        let mut best: Option<(usize, f64)> = None;
        for (idx, d) in deltas.into_iter().enumerate() {
            let d = d?;
            // strict improvement keeps the earliest move among ties
            if d > 1e-12 && best.is_none_or(|(_, b)| d > b) {
                best = Some((idx, d));
            }
        }
        let Some((idx, delta)) = best else {
            converged = true;
            break;
        };
        let (edge_move, changes) = &moves[idx];
        for (node, parents) in changes {
            dag = dag.with_parents(*node, parents.clone());
            locals[*node] = cache.local(data, *node, parents)?;
        }
        trace.push(TraceStep { iteration, edge_move: *edge_move, delta, score: locals.iter().sum() });
    }
    Ok(HillClimbResult {
        score: locals.iter().sum(),
        dag,
        locals,
        trace,
        converged,
        cache_hits: cache.hits(),
        cache_misses: cache.misses(),
        seed: config.seed,
    })
}

type MoveList = [(EdgeMove, Vec<(usize, Vec<usize>)>)];

fn move_delta(
    data: &CategoricalDataset,
    cache: &LocalScoreCache,
    changes: &[(usize, Vec<usize>)],
    locals: &[f64],
) -> Result<f64> {
    let mut d = 0.0;
    for (node, parents) in changes {
        d += cache.local(data, *node, parents)? - locals[*node];
    }
    Ok(d)
}

#[cfg(feature = "parallel")]
fn evaluate_moves(
    data: &CategoricalDataset,
    cache: &LocalScoreCache,
    moves: &MoveList,
    locals: &[f64],
) -> Vec<Result<f64>> {
    use rayon::prelude::*;
    moves.par_iter().map(|(_, changes)| move_delta(data, cache, changes, locals)).collect()
}

#[cfg(not(feature = "parallel"))]
fn evaluate_moves(
    data: &CategoricalDataset,
    cache: &LocalScoreCache,
    moves: &MoveList,
    locals: &[f64],
) -> Vec<Result<f64>> {
    moves.iter().map(|(_, changes)| move_delta(data, cache, changes, locals)).collect()
}

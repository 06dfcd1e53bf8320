//! Random graphs, graph states and connectivity splits.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::groups::QubitPermutation;
use crate::simcore::{Gate, StateVector};
use crate::Real;

/// Symmetric boolean matrix with zero diagonal.
pub type Adjacency = Vec<Vec<bool>>;

#[derive(Clone, Debug, PartialEq)]
pub struct GraphSample<T> {
    pub n_vertices: usize,
    pub adjacency: Adjacency,
    /// 1 if connected.
    pub label: u8,
    pub state: StateVector<T>,
}

/// Vertex pairs `(i, j)`, `i < j`, in lexicographic order; bit `k` of an
/// edge mask refers to pair `k`.
pub fn edge_list(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

pub fn adjacency_from_mask(n: usize, mask: u64) -> Adjacency {
    let mut a = vec![vec![false; n]; n];
    for (k, (i, j)) in edge_list(n).into_iter().enumerate() {
        if mask >> k & 1 == 1 {
            a[i][j] = true;
            a[j][i] = true;
        }
    }
    a
}

fn check_adjacency(adj: &Adjacency) -> Result<()> {
    let n = adj.len();
    for (i, row) in adj.iter().enumerate() {
        if row.len() != n || row[i] || (0..n).any(|j| row[j] != adj[j][i]) {
            return domain("adjacency must be square, symmetric and zero on the diagonal");
        }
    }
    Ok(())
}

/// Every vertex reachable from vertex 0 by breadth-first search.
pub fn is_connected(adj: &Adjacency) -> bool {
    let n = adj.len();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        for (w, &e) in adj[v].iter().enumerate() {
            if e && !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// `H^{⊗n}|0…0⟩` followed by `CZ` on every edge.
pub fn graph_state<T: Real>(adj: &Adjacency) -> Result<StateVector<T>> {
    check_adjacency(adj)?;
    let n = adj.len();
    let mut s = StateVector::zero_state(n);
    for q in 0..n {
        s.apply_gate_mut(&Gate::h(q))?;
    }
    for (i, j) in edge_list(n) {
        if adj[i][j] {
            s.apply_gate_mut(&Gate::cz(i, j))?;
        }
    }
    Ok(s)
}

/// Relabels vertex `v` as `perm[v]`.
pub fn permute_adjacency(adj: &Adjacency, perm: &QubitPermutation) -> Adjacency {
    let n = adj.len();
    let mut out = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[perm.image(i)][perm.image(j)] = adj[i][j];
        }
    }
    out
}

fn sample_from_adjacency<T: Real>(adjacency: Adjacency) -> Result<GraphSample<T>> {
    Ok(GraphSample {
        n_vertices: adjacency.len(),
        label: is_connected(&adjacency) as u8,
        state: graph_state(&adjacency)?,
        adjacency,
    })
}

/// Each possible edge present independently with probability `edge_prob`.
pub fn sample_graph<T: Real>(n: usize, edge_prob: f64, seed: u64) -> Result<GraphSample<T>> {
    if !(0.0..=1.0).contains(&edge_prob) {
        return domain(format!("edge probability {edge_prob} outside [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = 0u64;
    for k in 0..edge_list(n).len() {
        if rng.random_bool(edge_prob) {
            mask |= 1 << k;
        }
    }
    sample_from_adjacency(adjacency_from_mask(n, mask))
}

/// All `2^{n(n−1)/2}` labeled graphs, indexed by edge mask.
pub fn all_graphs(n: usize) -> Result<Vec<Adjacency>> {
    let e = edge_list(n).len();
    if e > 20 {
        return domain(format!("{e} edge slots is too many to enumerate"));
    }
    Ok((0..1u64 << e).map(|m| adjacency_from_mask(n, m)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphCase {
    /// 45 training and 18 test graphs.
    Case1,
    /// 52 training and 11 test graphs.
    Case2,
}

impl GraphCase {
    pub fn sizes(self) -> (usize, usize) {
        match self {
            GraphCase::Case1 => (45, 18),
            GraphCase::Case2 => (52, 11),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitOptions {
    pub n_vertices: usize,
    /// Edge masks left out of the pool.
    pub exclude: Vec<u64>,
    /// Copies of each graph in the expanded splits.
    pub replication: usize,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            n_vertices: 4,
            exclude: vec![0],
            replication: 4,
        }
    }
}

/// Distinct graphs, as edge masks, on each side of a split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSplits {
    pub case: GraphCase,
    pub seed: u64,
    pub options: SplitOptions,
    pub train: Vec<u64>,
    pub test: Vec<u64>,
}

/// Partitions the graph pool into the case's train/test sizes.
///
/// Training takes `⌈n_train/2⌉` disconnected graphs when that many exist and
/// fills the rest with connected ones; the test set is drawn from what
/// remains. Both classes are shuffled with the seed first.
pub fn make_graph_splits(
    case: GraphCase,
    seed: u64,
    options: &SplitOptions,
) -> Result<GraphSplits> {
    let (n_train, n_test) = case.sizes();
    let n = options.n_vertices;
    let pool: Vec<u64> = (0..all_graphs(n)?.len() as u64)
        .filter(|m| !options.exclude.contains(m))
        .collect();
    if n_train + n_test > pool.len() {
        return domain(format!(
            "{n_train} + {n_test} graphs requested from a pool of {}",
            pool.len()
        ));
    }
    let connected = |m: &u64| is_connected(&adjacency_from_mask(n, *m));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<u64> = pool.iter().copied().filter(connected).collect();
    let mut neg: Vec<u64> = pool.iter().copied().filter(|m| !connected(m)).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let n_neg = n_train.div_ceil(2).min(neg.len());
    let n_pos = n_train - n_neg;
    if n_pos > pos.len() {
        return domain("not enough connected graphs for the training split");
    }
    let mut train: Vec<u64> = neg[..n_neg].iter().chain(&pos[..n_pos]).copied().collect();
    let mut rest: Vec<u64> = neg[n_neg..].iter().chain(&pos[n_pos..]).copied().collect();
    rest.shuffle(&mut rng);
    let mut test: Vec<u64> = rest[..n_test].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(GraphSplits {
        case,
        seed,
        options: options.clone(),
        train,
        test,
    })
}

/// Train and test graph samples.
pub type SplitSamples<T> = (Vec<GraphSample<T>>, Vec<GraphSample<T>>);

/// Graph samples for each side, every graph repeated `replication` times.
pub fn expand_splits<T: Real>(splits: &GraphSplits) -> Result<SplitSamples<T>> {
    let n = splits.options.n_vertices;
    let expand = |masks: &[u64]| -> Result<Vec<GraphSample<T>>> {
        let mut out = Vec::new();
        for &m in masks {
            let s = sample_from_adjacency::<T>(adjacency_from_mask(n, m))?;
            for _ in 0..splits.options.replication {
                out.push(s.clone());
            }
        }
        Ok(out)
    };
    Ok((expand(&splits.train)?, expand(&splits.test)?))
}

//! Pluggable x-prediction denoisers.
//!
//! A denoiser maps a noisy graph `G_t` (and the time `t`) to per-node class
//! probabilities and per-edge Bernoulli probabilities for the clean endpoint.
//! The builtins ignore `t`; it is part of the interface so a learned model can
//! be slotted in.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{BwError, Result};
use crate::graph::{one_hot, Graph};
use crate::linalg::SymMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct DenoiserOutput {
    /// `n x K`, rows on the probability simplex.
    pub node_probs: DMatrix<f64>,
    /// `n x n`, symmetric, zero diagonal.
    pub edge_probs: DMatrix<f64>,
}

impl DenoiserOutput {
    pub fn n(&self) -> usize {
        self.edge_probs.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.node_probs.ncols()
    }

    /// Checks simplex rows, `[0, 1]` symmetric edge probabilities and a zero diagonal.
    pub fn check(&self) -> Result<()> {
        let n = self.n();
        if self.node_probs.nrows() != n || self.edge_probs.ncols() != n {
            return Err(BwError::DimensionMismatch {
                what: "denoiser output",
                left: self.node_probs.nrows(),
                right: n,
            });
        }
        for i in 0..n {
            let row = self.node_probs.row(i);
            if (row.sum() - 1.0).abs() > 1e-9 || row.iter().any(|&p| p < 0.0) {
                return Err(BwError::InvalidGraph(format!(
                    "node row {i} is not a distribution"
                )));
            }
            if self.edge_probs[(i, i)] != 0.0 {
                return Err(BwError::InvalidGraph(
                    "edge probabilities need a zero diagonal".into(),
                ));
            }
            for j in 0..n {
                let p = self.edge_probs[(i, j)];
                if !(0.0..=1.0).contains(&p) || p != self.edge_probs[(j, i)] {
                    return Err(BwError::InvalidGraph(format!(
                        "edge probability ({i}, {j}) = {p}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Most likely discrete graph: edges where `p > 0.5`, argmax classes.
    pub fn to_discrete_graph(&self) -> Result<Graph> {
        let n = self.n();
        let w = DMatrix::from_fn(n, n, |i, j| {
            if i != j && self.edge_probs[(i, j)] > 0.5 {
                1.0
            } else {
                0.0
            }
        });
        let k = self.num_classes().max(1);
        let classes: Vec<usize> = (0..n)
            .map(|i| {
                let row = self.node_probs.row(i);
                (0..row.len()).fold(0, |best, c| if row[c] > row[best] { c } else { best })
            })
            .collect();
        Graph::new(SymMatrix::new(w)?, Some(one_hot(&classes, k)), true)
    }

    /// The prediction read as a weighted graph with real-valued features.
    pub fn to_continuous_graph(&self) -> Result<Graph> {
        Graph::new(
            SymMatrix::from_symmetrized(self.edge_probs.clone()),
            Some(self.node_probs.clone()),
            false,
        )
    }

    /// Independent draw: Bernoulli edges (pairs in row-major `u < v` order),
    /// then categorical node classes.
    pub fn sample_graph<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Graph> {
        sample_discrete(&self.edge_probs, &self.node_probs, rng)
    }
}

/// Draws a binary graph with independent edges and categorical nodes.
pub(crate) fn sample_discrete<R: Rng + ?Sized>(
    edge_probs: &DMatrix<f64>,
    node_probs: &DMatrix<f64>,
    rng: &mut R,
) -> Result<Graph> {
    let n = edge_probs.nrows();
    let mut w = DMatrix::zeros(n, n);
    for u in 0..n {
        for v in (u + 1)..n {
            let p = edge_probs[(u, v)];
            if rng.random::<f64>() < p {
                w[(u, v)] = 1.0;
                w[(v, u)] = 1.0;
            }
        }
    }
    let k = node_probs.ncols().max(1);
    let classes: Vec<usize> = (0..n)
        .map(|i| {
            let row = node_probs.row(i);
            let total: f64 = row.sum();
            let u: f64 = rng.random::<f64>() * total;
            let mut acc = 0.0;
            for c in 0..row.len() {
                acc += row[c];
                if u < acc {
                    return c;
                }
            }
            // Round-off: fall back to the last class with positive mass.
            (0..row.len()).rev().find(|&c| row[c] > 0.0).unwrap_or(0)
        })
        .collect();
    Graph::new(SymMatrix::new(w)?, Some(one_hot(&classes, k)), true)
}

pub trait Denoiser: Send + Sync {
    fn predict(&self, g_t: &Graph, t: f64) -> Result<DenoiserOutput>;
}

/// Always predicts a fixed target graph with certainty.
#[derive(Clone, Debug)]
pub struct OracleDenoiser {
    target: Graph,
}

impl OracleDenoiser {
    pub fn new(target: Graph) -> Self {
        OracleDenoiser { target }
    }

    pub fn target(&self) -> &Graph {
        &self.target
    }
}

impl Denoiser for OracleDenoiser {
    fn predict(&self, g_t: &Graph, _t: f64) -> Result<DenoiserOutput> {
        oracle_predict(&self.target, g_t)
    }
}

/// Target encoded as probabilities: its features (one-hot class 0 when it has
/// none) and its adjacency.
pub fn oracle_predict(target: &Graph, g_t: &Graph) -> Result<DenoiserOutput> {
    if target.n() != g_t.n() {
        return Err(BwError::DimensionMismatch {
            what: "oracle target vs G_t",
            left: target.n(),
            right: g_t.n(),
        });
    }
    let node_probs = match target.features() {
        Some(x) if x.ncols() > 0 => x.clone(),
        _ => target.one_hot_features(1),
    };
    Ok(DenoiserOutput {
        node_probs,
        edge_probs: target.adjacency().as_matrix().clone(),
    })
}

/// Memorizing denoiser: averages the one-hot encodings of the `k` training
/// graphs nearest to `G_t`.
///
/// Distance is the Hamming distance between thresholded (`w > 0.5`) edge sets
/// plus the number of nodes whose feature argmax differs. Ties go to the
/// lower training index. Only training graphs with the same node count as
/// `G_t` are candidates.
#[derive(Clone, Debug)]
pub struct KnnDenoiser {
    train: Vec<Encoded>,
    k: usize,
    classes: usize,
}

#[derive(Clone, Debug)]
struct Encoded {
    n: usize,
    upper: Vec<bool>,
    classes: Vec<usize>,
}

impl Encoded {
    fn new(g: &Graph) -> Self {
        let adj = g.thresholded();
        let n = g.n();
        let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for (u, row) in adj.iter().enumerate() {
            upper.extend_from_slice(&row[u + 1..]);
        }
        Encoded {
            n,
            upper,
            classes: g.node_classes(),
        }
    }

    fn distance(&self, other: &Encoded) -> usize {
        let edges = self
            .upper
            .iter()
            .zip(&other.upper)
            .filter(|(a, b)| a != b)
            .count();
        let nodes = self
            .classes
            .iter()
            .zip(&other.classes)
            .filter(|(a, b)| a != b)
            .count();
        edges + nodes
    }
}

impl KnnDenoiser {
    pub fn new(train: &[Graph], k: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(BwError::EmptySet("kNN training set"));
        }
        if k == 0 {
            return Err(BwError::InvalidConfig("kNN needs k >= 1".into()));
        }
        let classes = train.iter().map(Graph::num_classes).max().unwrap_or(1);
        Ok(KnnDenoiser {
            train: train.iter().map(Encoded::new).collect(),
            k,
            classes,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }
}

impl Denoiser for KnnDenoiser {
    fn predict(&self, g_t: &Graph, t: f64) -> Result<DenoiserOutput> {
        knn_predict(self, g_t, t)
    }
}

pub fn knn_predict(model: &KnnDenoiser, g_t: &Graph, _t: f64) -> Result<DenoiserOutput> {
    let query = Encoded::new(g_t);
    let n = query.n;
    let mut ranked: Vec<(usize, usize)> = model
        .train
        .iter()
        .enumerate()
        .filter(|(_, e)| e.n == n)
        .map(|(i, e)| (e.distance(&query), i))
        .collect();
    if ranked.is_empty() {
        return Err(BwError::EmptySet("kNN training graphs of matching size"));
    }
    ranked.sort_unstable();
    let chosen = &ranked[..model.k.min(ranked.len())];
    let weight = 1.0 / chosen.len() as f64;
    let mut node_probs = DMatrix::zeros(n, model.classes);
    let mut edge_probs = DMatrix::zeros(n, n);
    for &(_, idx) in chosen {
        let e = &model.train[idx];
        for (v, &c) in e.classes.iter().enumerate() {
            node_probs[(v, c)] += weight;
        }
        let mut slot = 0;
        for u in 0..n {
            for v in (u + 1)..n {
                if e.upper[slot] {
                    edge_probs[(u, v)] += weight;
                    edge_probs[(v, u)] += weight;
                }
                slot += 1;
            }
        }
    }
    Ok(DenoiserOutput {
        node_probs,
        edge_probs,
    })
}

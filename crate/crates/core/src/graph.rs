//! Graphs and their Markov-random-field parameterization.
//!
//! A [`Graph`] is a weighted symmetric adjacency with zero diagonal plus an
//! optional node-feature matrix. Weights may be negative: interpolants off the
//! valid graph domain are still representable, and [`validate`] reports them.
//! A [`GraphMrf`] views a graph as a colored Gaussian over node features with
//! precision `(νI + L) ⊗ VᵀV`; the emission `V` enters only through the scalar
//! `beta = ||V†||²_F`.

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{BwError, Result};
use crate::linalg::{eig_sym, RankTolerance, SymMatrix};

/// Diagonal entries of an adjacency must be within this of zero.
const DIAGONAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    w: SymMatrix,
    x: Option<DMatrix<f64>>,
    discrete: bool,
}

impl Graph {
    pub fn new(w: SymMatrix, x: Option<DMatrix<f64>>, discrete: bool) -> Result<Self> {
        let n = w.dim();
        for i in 0..n {
            if w.get(i, i).abs() > DIAGONAL_TOL {
                return Err(BwError::InvalidGraph(format!(
                    "adjacency diagonal entry {i} is {} (self-loops are not supported)",
                    w.get(i, i)
                )));
            }
        }
        let mut w = w.into_inner();
        w.fill_diagonal(0.0);
        let w = SymMatrix::from_symmetrized(w);
        if let Some(x) = &x {
            if x.nrows() != n {
                return Err(BwError::DimensionMismatch {
                    what: "feature rows vs node count",
                    left: x.nrows(),
                    right: n,
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(BwError::NonFinite {
                    what: "node features",
                });
            }
            if discrete && !is_one_hot(x) {
                return Err(BwError::InvalidGraph(
                    "discrete graph features must be one-hot rows".into(),
                ));
            }
        }
        Ok(Graph { w, x, discrete })
    }

    pub fn from_edges(
        n: usize,
        edges: &[(usize, usize, f64)],
        x: Option<DMatrix<f64>>,
        discrete: bool,
    ) -> Result<Self> {
        let mut w = DMatrix::zeros(n, n);
        for &(u, v, weight) in edges {
            if u >= n || v >= n {
                return Err(BwError::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(BwError::InvalidGraph(format!("self-loop at node {u}")));
            }
            if !weight.is_finite() {
                return Err(BwError::NonFinite {
                    what: "edge weight",
                });
            }
            w[(u, v)] = weight;
            w[(v, u)] = weight;
        }
        Graph::new(SymMatrix::new(w)?, x, discrete)
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            w: SymMatrix::zeros(n),
            x: None,
            discrete: true,
        }
    }

    pub fn n(&self) -> usize {
        self.w.dim()
    }

    pub fn adjacency(&self) -> &SymMatrix {
        &self.w
    }

    pub fn features(&self) -> Option<&DMatrix<f64>> {
        self.x.as_ref()
    }

    pub fn is_discrete(&self) -> bool {
        self.discrete
    }

    pub fn with_features(mut self, x: Option<DMatrix<f64>>) -> Result<Self> {
        let w = std::mem::replace(&mut self.w, SymMatrix::zeros(0));
        Graph::new(w, x, self.discrete)
    }

    /// Number of feature columns; graphs without features count as one class.
    pub fn num_classes(&self) -> usize {
        self.x.as_ref().map_or(1, |x| x.ncols().max(1))
    }

    /// Per-node argmax of the feature row (class 0 when there are no features).
    pub fn node_classes(&self) -> Vec<usize> {
        match &self.x {
            None => vec![0; self.n()],
            Some(x) if x.ncols() == 0 => vec![0; self.n()],
            Some(x) => (0..x.nrows())
                .map(|i| {
                    let row = x.row(i);
                    let mut best = 0;
                    for k in 1..row.len() {
                        if row[k] > row[best] {
                            best = k;
                        }
                    }
                    best
                })
                .collect(),
        }
    }

    /// One-hot node features with `k` columns (missing features become class 0).
    pub fn one_hot_features(&self, k: usize) -> DMatrix<f64> {
        one_hot(&self.node_classes(), k)
    }

    /// Edges `(u, v, w)` with `u < v` and nonzero weight.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let w = self.w.get(u, v);
                if w != 0.0 {
                    out.push((u, v, w));
                }
            }
        }
        out
    }

    /// Boolean adjacency `w > 0.5`.
    pub fn thresholded(&self) -> Vec<Vec<bool>> {
        let n = self.n();
        (0..n)
            .map(|u| (0..n).map(|v| u != v && self.w.get(u, v) > 0.5).collect())
            .collect()
    }

    pub fn is_binary(&self) -> bool {
        self.w.as_matrix().iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n: self.n(),
            edges: self.edges(),
            features: self.x.as_ref().map(|x| {
                (0..x.nrows())
                    .map(|i| x.row(i).iter().copied().collect())
                    .collect()
            }),
            discrete: self.discrete,
        }
    }
}

/// Rows of the identity selected by `classes`.
pub fn one_hot(classes: &[usize], k: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(classes.len(), k);
    for (i, &c) in classes.iter().enumerate() {
        x[(i, c)] = 1.0;
    }
    x
}

fn is_one_hot(x: &DMatrix<f64>) -> bool {
    (0..x.nrows()).all(|i| {
        let row = x.row(i);
        row.iter().all(|&v| v == 0.0 || v == 1.0) && row.sum() == 1.0
    })
}

/// On-disk graph form: an edge list with `u < v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub discrete: bool,
}

impl GraphFile {
    pub fn into_graph(self) -> Result<Graph> {
        for &(u, v, _) in &self.edges {
            if u >= v {
                return Err(BwError::InvalidGraph(format!(
                    "edge ({u}, {v}) must satisfy u < v"
                )));
            }
        }
        let x = match self.features {
            None => None,
            Some(rows) => {
                let k = rows.first().map_or(0, |r| r.len());
                if rows.iter().any(|r| r.len() != k) {
                    return Err(BwError::InvalidGraph("ragged feature rows".into()));
                }
                Some(DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
            }
        };
        Graph::from_edges(self.n, &self.edges, x, self.discrete)
    }
}

impl Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        GraphFile::deserialize(d)?
            .into_graph()
            .map_err(serde::de::Error::custom)
    }
}

/// Reads either a single graph object or an array of graphs.
pub fn read_graphs(path: &Path) -> Result<Vec<Graph>> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.is_array() {
        Ok(serde_json::from_value(value)?)
    } else {
        Ok(vec![serde_json::from_value(value)?])
    }
}

pub fn write_graphs(path: &Path, graphs: &[Graph]) -> Result<()> {
    let text = serde_json::to_string_pretty(graphs)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// `L = D - W` with `D = diag(W 1)`.
pub fn laplacian(g: &Graph) -> SymMatrix {
    laplacian_of(g.adjacency())
}

pub fn laplacian_of(w: &SymMatrix) -> SymMatrix {
    let n = w.dim();
    let m = w.as_matrix();
    let mut l = -m.clone();
    for i in 0..n {
        l[(i, i)] = m.row(i).sum() - m[(i, i)];
    }
    SymMatrix::from_symmetrized(l)
}

/// `W = diag(L) - L`.
pub fn adjacency_from_laplacian(l: &SymMatrix) -> SymMatrix {
    let mut w = -l.as_matrix().clone();
    w.fill_diagonal(0.0);
    SymMatrix::from_symmetrized(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GraphValidity {
    pub symmetric: bool,
    pub nonnegative: bool,
    pub connected: bool,
    /// Laplacian eigenvalues below the rank threshold.
    pub zero_eigs: usize,
}

pub fn validate(g: &Graph, tol: &RankTolerance) -> GraphValidity {
    let w = g.adjacency().as_matrix();
    let symmetric = w == &w.transpose();
    let nonnegative = w.iter().all(|&v| v >= 0.0);
    let zero_eigs = laplacian_null_dim(&laplacian(g), tol);
    GraphValidity {
        symmetric,
        nonnegative,
        connected: zero_eigs == 1,
        zero_eigs,
    }
}

pub(crate) fn laplacian_null_dim(l: &SymMatrix, tol: &RankTolerance) -> usize {
    if l.dim() == 0 {
        return 0;
    }
    let spec = eig_sym(l);
    // An all-zero Laplacian has threshold abs_tol, so every eigenvalue counts.
    spec.count_null(tol)
}

/// Gaussian MRF parameters of a graph: feature mean, Laplacian, `nu`, `beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphMrf {
    pub mean: DMatrix<f64>,
    pub laplacian: SymMatrix,
    pub nu: f64,
    pub beta: f64,
}

impl GraphMrf {
    pub fn new(mean: DMatrix<f64>, laplacian: SymMatrix, nu: f64, beta: f64) -> Result<Self> {
        if mean.nrows() != laplacian.dim() {
            return Err(BwError::DimensionMismatch {
                what: "mean rows vs Laplacian size",
                left: mean.nrows(),
                right: laplacian.dim(),
            });
        }
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(BwError::InvalidConfig(format!("nu must be >= 0, got {nu}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(BwError::InvalidConfig(format!(
                "beta must be > 0, got {beta}"
            )));
        }
        let scale = laplacian
            .as_matrix()
            .iter()
            .fold(1.0f64, |a, v| a.max(v.abs()));
        let n = laplacian.dim();
        for i in 0..n {
            let rs = laplacian.as_matrix().row(i).sum();
            if rs.abs() > 1e-10 * scale {
                return Err(BwError::InvalidGraph(format!(
                    "Laplacian row {i} sums to {rs:e}"
                )));
            }
        }
        Ok(GraphMrf {
            mean,
            laplacian,
            nu,
            beta,
        })
    }

    /// Mean = node features (an `n x 0` matrix when absent), Laplacian from
    /// the adjacency.
    pub fn from_graph(g: &Graph, nu: f64, beta: f64) -> Result<Self> {
        let mean = g
            .features()
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(g.n(), 0));
        GraphMrf::new(mean, laplacian(g), nu, beta)
    }

    pub fn n(&self) -> usize {
        self.laplacian.dim()
    }

    /// `νI + L`.
    pub fn precision(&self) -> SymMatrix {
        self.laplacian.add_diagonal(self.nu)
    }

    pub fn adjacency(&self) -> SymMatrix {
        adjacency_from_laplacian(&self.laplacian)
    }
}

/// Draws `X + E` where `vec(E) ~ N(0, (νI + L)† ⊗ βI)`, realized as
/// `E = U diag((ν + λ_i)^{-1/2}) Uᵀ Z √β` with `Z` standard normal.
/// At `nu = 0` the noise lives on `range(L)`; a disconnected graph there has a
/// singular covariance and is rejected.
pub fn sample_features<R: Rng + ?Sized>(mrf: &GraphMrf, rng: &mut R) -> Result<DMatrix<f64>> {
    let tol = RankTolerance::default();
    let n = mrf.n();
    let k = mrf.mean.ncols();
    if mrf.nu == 0.0 && laplacian_null_dim(&mrf.laplacian, &tol) > 1 {
        return Err(BwError::SingularCovariance);
    }
    let spec = eig_sym(&mrf.precision());
    let thr = tol.threshold(&spec);
    let color = spec.map(|l| if l > thr { l.powf(-0.5) } else { 0.0 });
    let z = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(&mrf.mean + color.as_matrix() * z * mrf.beta.sqrt())
}

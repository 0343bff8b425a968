//! Graph statistics, MMD, A.Ratio and V.U.N. accounting.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BwError, Result};
use crate::exec::Exec;
use crate::graph::{laplacian, Graph};
use crate::linalg::eig_sym;

/// Floor for `MMD²(train, test)` in ratio denominators.
pub const RATIO_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    DegreeHist,
    ClusteringHist,
    SpectralHist,
}

impl StatKind {
    pub fn name(self) -> &'static str {
        match self {
            StatKind::DegreeHist => "degree",
            StatKind::ClusteringHist => "clustering",
            StatKind::SpectralHist => "spectral",
        }
    }
}

/// Fixed-bin histogram statistic. Values outside `[lo, hi]` land in the end bins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatDescriptor {
    pub kind: StatKind,
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
}

impl StatDescriptor {
    /// Unit-width bins over `[0, bins)`; the last bin also holds larger degrees.
    pub fn degree(bins: usize) -> Self {
        StatDescriptor {
            kind: StatKind::DegreeHist,
            bins,
            lo: 0.0,
            hi: bins as f64,
        }
    }

    pub fn clustering(bins: usize) -> Self {
        StatDescriptor {
            kind: StatKind::ClusteringHist,
            bins,
            lo: 0.0,
            hi: 1.0,
        }
    }

    pub fn spectral(bins: usize) -> Self {
        StatDescriptor {
            kind: StatKind::SpectralHist,
            bins,
            lo: 0.0,
            hi: 1.0,
        }
    }

    /// Degree, clustering and spectral histograms at the default resolution.
    pub fn standard() -> Vec<Self> {
        vec![Self::degree(32), Self::clustering(20), Self::spectral(20)]
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 || self.lo.is_nan() || self.hi.is_nan() || self.hi <= self.lo {
            return Err(BwError::InvalidConfig(format!(
                "{} histogram needs bins >= 2 and hi > lo",
                self.kind.name()
            )));
        }
        Ok(())
    }

    fn bin(&self, value: f64) -> usize {
        let pos = ((value - self.lo) / (self.hi - self.lo) * self.bins as f64).floor();
        if pos.is_nan() || pos < 0.0 {
            0
        } else {
            (pos as usize).min(self.bins - 1)
        }
    }
}

fn normalized(values: impl IntoIterator<Item = f64>, d: &StatDescriptor) -> Vec<f64> {
    let mut hist = vec![0.0; d.bins];
    let mut total = 0.0;
    for v in values {
        hist[d.bin(v)] += 1.0;
        total += 1.0;
    }
    if total == 0.0 {
        hist[0] = 1.0;
    } else {
        hist.iter_mut().for_each(|h| *h /= total);
    }
    hist
}

fn local_clustering(adj: &[Vec<bool>]) -> Vec<f64> {
    let n = adj.len();
    (0..n)
        .map(|v| {
            let nb: Vec<usize> = (0..n).filter(|&u| adj[v][u]).collect();
            let d = nb.len();
            if d < 2 {
                return 0.0;
            }
            let mut closed = 0usize;
            for (i, &a) in nb.iter().enumerate() {
                closed += nb[i + 1..].iter().filter(|&&b| adj[a][b]).count();
            }
            closed as f64 / (d * (d - 1) / 2) as f64
        })
        .collect()
}

/// Normalized histogram of one statistic; always sums to 1.
pub fn stat_histogram(g: &Graph, d: &StatDescriptor) -> Vec<f64> {
    match d.kind {
        StatKind::DegreeHist => {
            let w = g.adjacency().as_matrix();
            normalized((0..g.n()).map(|i| w.row(i).sum()), d)
        }
        StatKind::ClusteringHist => normalized(local_clustering(&g.thresholded()), d),
        StatKind::SpectralHist => {
            let eig = eig_sym(&laplacian(g)).eigenvalues;
            let max = eig.iter().fold(0.0f64, |m, &l| m.max(l));
            let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
            normalized(eig.iter().map(|&l| l * scale), d)
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean_kernel(a: &[Vec<f64>], b: &[Vec<f64>], sigma: f64) -> f64 {
    let denom = 2.0 * sigma * sigma;
    let mut total = 0.0;
    for x in a {
        for y in b {
            total += (-sq_dist(x, y) / denom).exp();
        }
    }
    total / (a.len() * b.len()) as f64
}

/// Biased MMD² with a Gaussian kernel `exp(-||x-y||²/(2σ²))`, clamped at 0.
pub fn mmd_sq(a: &[Vec<f64>], b: &[Vec<f64>], sigma: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(BwError::EmptySet("MMD input"));
    }
    let dim = a[0].len();
    if let Some(bad) = a.iter().chain(b).find(|v| v.len() != dim) {
        return Err(BwError::DimensionMismatch {
            what: "histogram length",
            left: dim,
            right: bad.len(),
        });
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(BwError::InvalidConfig(format!(
            "kernel bandwidth must be positive, got {sigma}"
        )));
    }
    let v = mean_kernel(a, a, sigma) + mean_kernel(b, b, sigma) - 2.0 * mean_kernel(a, b, sigma);
    Ok(v.max(0.0))
}

/// Median pairwise Euclidean distance, or 1 when it is 0 or undefined.
pub fn median_bandwidth(vectors: &[&Vec<f64>]) -> f64 {
    let mut d = Vec::with_capacity(vectors.len() * vectors.len().saturating_sub(1) / 2);
    for i in 0..vectors.len() {
        for j in (i + 1)..vectors.len() {
            d.push(sq_dist(vectors[i], vectors[j]).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let median = if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VunReport {
    pub valid: f64,
    pub unique: f64,
    pub novel: f64,
    /// Percentage that are valid, unique and novel at once.
    pub vun: f64,
}

/// Evaluation summary. MMD values are squared (biased estimator), so ratios
/// compare `MMD²(gen, test)` against `MMD²(train, test)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Statistics that entered the average, in order.
    pub statistics: Vec<String>,
    pub per_stat_mmd: BTreeMap<String, f64>,
    pub per_stat_mmd_train_test: BTreeMap<String, f64>,
    pub per_stat_ratio: BTreeMap<String, f64>,
    pub per_stat_sigma: BTreeMap<String, f64>,
    pub a_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vun: Option<VunReport>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stat,mmd_gen_test,mmd_train_test,ratio\n");
        for s in &self.statistics {
            let _ = writeln!(
                out,
                "{s},{},{},{}",
                self.per_stat_mmd[s], self.per_stat_mmd_train_test[s], self.per_stat_ratio[s]
            );
        }
        out
    }
}

fn histograms(exec: Exec, graphs: &[Graph], d: &StatDescriptor) -> Vec<Vec<f64>> {
    exec.map(graphs, |g| stat_histogram(g, d))
}

pub fn a_ratio(
    gen: &[Graph],
    test: &[Graph],
    train: &[Graph],
    stats: &[StatDescriptor],
) -> Result<EvalReport> {
    a_ratio_with(Exec::default(), gen, test, train, stats)
}

pub fn a_ratio_with(
    exec: Exec,
    gen: &[Graph],
    test: &[Graph],
    train: &[Graph],
    stats: &[StatDescriptor],
) -> Result<EvalReport> {
    for (name, set) in [
        ("generated set", gen),
        ("test set", test),
        ("training set", train),
    ] {
        if set.is_empty() {
            return Err(BwError::EmptySet(name));
        }
    }
    if stats.is_empty() {
        return Err(BwError::EmptySet("statistic list"));
    }
    let mut report = EvalReport {
        statistics: Vec::new(),
        per_stat_mmd: BTreeMap::new(),
        per_stat_mmd_train_test: BTreeMap::new(),
        per_stat_ratio: BTreeMap::new(),
        per_stat_sigma: BTreeMap::new(),
        a_ratio: 0.0,
        vun: None,
    };
    for d in stats {
        d.validate()?;
        let name = d.kind.name().to_string();
        let h_gen = histograms(exec, gen, d);
        let h_test = histograms(exec, test, d);
        let h_train = histograms(exec, train, d);
        let pool: Vec<&Vec<f64>> = h_train.iter().chain(&h_test).collect();
        let sigma = median_bandwidth(&pool);
        let num = mmd_sq(&h_gen, &h_test, sigma)?;
        let den = mmd_sq(&h_train, &h_test, sigma)?;
        report.statistics.push(name.clone());
        report
            .per_stat_ratio
            .insert(name.clone(), num / den.max(RATIO_FLOOR));
        report.per_stat_mmd.insert(name.clone(), num);
        report.per_stat_mmd_train_test.insert(name.clone(), den);
        report.per_stat_sigma.insert(name, sigma);
    }
    report.a_ratio = report.per_stat_ratio.values().sum::<f64>() / stats.len() as f64;
    Ok(report)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    IsConnected,
    IsTree,
    #[default]
    AlwaysTrue,
}

impl Validity {
    pub fn check(self, g: &Graph) -> bool {
        match self {
            Validity::IsConnected => is_connected(g),
            Validity::IsTree => is_tree(g),
            Validity::AlwaysTrue => true,
        }
    }
}

/// Connectivity of the thresholded graph. The empty graph counts as disconnected.
pub fn is_connected(g: &Graph) -> bool {
    let n = g.n();
    if n == 0 {
        return false;
    }
    let adj = g.thresholded();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for u in 0..n {
            if adj[v][u] && !seen[u] {
                seen[u] = true;
                count += 1;
                queue.push_back(u);
            }
        }
    }
    count == n
}

pub fn is_tree(g: &Graph) -> bool {
    let adj = g.thresholded();
    let edges: usize = adj
        .iter()
        .map(|r| r.iter().filter(|&&e| e).count())
        .sum::<usize>()
        / 2;
    edges + 1 == g.n() && is_connected(g)
}

fn digest(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

/// Weisfeiler-Lehman digest (3 refinement rounds) of the thresholded graph
/// with node classes as initial labels. Isomorphic graphs hash equally;
/// distinct graphs can collide, which is negligible at desk scale.
pub fn wl_hash(g: &Graph) -> String {
    let n = g.n();
    let adj = g.thresholded();
    let classes = g.node_classes();
    let mut labels: Vec<[u8; 32]> = classes.iter().map(|c| digest(&c.to_le_bytes())).collect();
    let mut history: Vec<[u8; 32]> = labels.clone();
    for _ in 0..3 {
        labels = (0..n)
            .map(|v| {
                let mut nb: Vec<&[u8; 32]> =
                    (0..n).filter(|&u| adj[v][u]).map(|u| &labels[u]).collect();
                nb.sort();
                let mut h = Sha256::new();
                h.update(labels[v]);
                for l in nb {
                    h.update(l);
                }
                h.finalize().into()
            })
            .collect();
        history.extend_from_slice(&labels);
    }
    history.sort();
    let mut h = Sha256::new();
    h.update((n as u64).to_le_bytes());
    for l in &history {
        h.update(l);
    }
    h.finalize()
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Valid / unique / novel percentages of a generated set.
pub fn vun(gen: &[Graph], train: &[Graph], validity: Validity) -> Result<VunReport> {
    if gen.is_empty() {
        return Err(BwError::EmptySet("generated set"));
    }
    let exec = Exec::default();
    let train_hashes: HashSet<String> = exec.map(train, wl_hash).into_iter().collect();
    let gen_hashes = exec.map(gen, wl_hash);
    let valid_flags = exec.map(gen, |g| validity.check(g));
    let total = gen.len() as f64;
    let pct = |c: usize| 100.0 * c as f64 / total;

    let valid = valid_flags.iter().filter(|&&v| v).count();
    let unique = gen_hashes.iter().collect::<HashSet<_>>().len();
    let novel = gen_hashes
        .iter()
        .filter(|h| !train_hashes.contains(*h))
        .count();
    // A graph counts towards V.U.N. once per distinct hash, on its first occurrence.
    let mut seen = HashSet::new();
    let mut combined = 0;
    for (h, &ok) in gen_hashes.iter().zip(&valid_flags) {
        if seen.insert(h) && ok && !train_hashes.contains(h) {
            combined += 1;
        }
    }
    Ok(VunReport {
        valid: pct(valid),
        unique: pct(unique),
        novel: pct(novel),
        vun: pct(combined),
    })
}

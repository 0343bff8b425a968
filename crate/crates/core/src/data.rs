//! Synthetic datasets and reference distributions.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BwError, Result};
use crate::exec::Exec;
use crate::graph::{one_hot, Graph};
use crate::rng::substream;

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(BwError::InvalidConfig(format!(
            "{name} must lie in [0, 1], got {p}"
        )));
    }
    Ok(())
}

fn binary_graph(n: usize, edges: &[(usize, usize)]) -> Graph {
    let list: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
    Graph::from_edges(n, &list, None, true).expect("generated edges are in range")
}

/// Erdős–Rényi graph: every pair is an edge independently with probability `p`.
///
/// Panics if `p` is outside `[0, 1]`.
pub fn er_sample<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    binary_graph(n, &edges)
}

/// Stochastic block model with consecutive blocks of the given sizes.
///
/// Panics if a probability is outside `[0, 1]`.
pub fn sbm_sample<R: Rng + ?Sized>(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    rng: &mut R,
) -> Graph {
    let block: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = block.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if block[u] == block[v] { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    binary_graph(n, &edges)
}

/// Uniform labeled tree on `n` nodes, decoded from a random Prüfer sequence.
pub fn tree_sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Graph> {
    if n < 2 {
        return Err(BwError::InvalidConfig(format!(
            "trees need n >= 2, got {n}"
        )));
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    Ok(binary_graph(n, &prufer_decode(n, &seq)))
}

fn prufer_decode(n: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut leaves: BTreeSet<usize> = (0..n).filter(|&i| degree[i] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &x in seq {
        let leaf = *leaves
            .iter()
            .next()
            .expect("a Prüfer sequence always leaves a leaf");
        leaves.remove(&leaf);
        edges.push((leaf.min(x), leaf.max(x)));
        degree[x] -= 1;
        if degree[x] == 1 {
            leaves.insert(x);
        }
    }
    let rest: Vec<usize> = leaves.into_iter().collect();
    edges.push((rest[0], rest[1]));
    edges
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    #[default]
    Marginal,
    Absorbing,
}

/// Initial distribution `p₀` for sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDistribution {
    pub kind: ReferenceKind,
    pub edge_marginal: f64,
    pub node_marginal: Vec<f64>,
}

impl ReferenceDistribution {
    pub fn marginal(edge_marginal: f64, node_marginal: Vec<f64>) -> Result<Self> {
        check_probability("edge marginal", edge_marginal)?;
        if node_marginal.is_empty() || node_marginal.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(BwError::InvalidConfig(
                "node marginal entries must lie in [0, 1]".into(),
            ));
        }
        let total: f64 = node_marginal.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(BwError::InvalidConfig(format!(
                "node marginal sums to {total}"
            )));
        }
        Ok(ReferenceDistribution {
            kind: ReferenceKind::Marginal,
            edge_marginal,
            node_marginal,
        })
    }

    /// All edges absent, every node in the mask class 0 of `k` classes.
    pub fn absorbing(k: usize) -> Self {
        let mut node_marginal = vec![0.0; k.max(1)];
        node_marginal[0] = 1.0;
        ReferenceDistribution {
            kind: ReferenceKind::Absorbing,
            edge_marginal: 0.0,
            node_marginal,
        }
    }

    /// Edge density and node-class frequencies of a training set
    /// (edges counted as `w > 0.5`).
    pub fn estimate(kind: ReferenceKind, train: &[Graph]) -> Result<Self> {
        if train.is_empty() {
            return Err(BwError::EmptySet("training set"));
        }
        let k = train.iter().map(Graph::num_classes).max().unwrap_or(1);
        if kind == ReferenceKind::Absorbing {
            return Ok(ReferenceDistribution::absorbing(k));
        }
        let mut edges = 0usize;
        let mut slots = 0usize;
        let mut counts = vec![0usize; k];
        for g in train {
            let n = g.n();
            let adj = g.thresholded();
            for (u, row) in adj.iter().enumerate() {
                edges += row[u + 1..].iter().filter(|&&e| e).count();
            }
            slots += n * n.saturating_sub(1) / 2;
            for c in g.node_classes() {
                counts[c] += 1;
            }
        }
        let nodes: usize = counts.iter().sum();
        let edge_marginal = if slots == 0 {
            0.0
        } else {
            edges as f64 / slots as f64
        };
        let node_marginal = counts
            .iter()
            .map(|&c| {
                if nodes == 0 {
                    1.0 / k as f64
                } else {
                    c as f64 / nodes as f64
                }
            })
            .collect();
        ReferenceDistribution::marginal(edge_marginal, node_marginal)
    }

    pub fn num_classes(&self) -> usize {
        self.node_marginal.len()
    }
}

/// Draws `G₀` with `n` nodes and `k` one-hot feature classes.
pub fn draw_reference<R: Rng + ?Sized>(
    reference: &ReferenceDistribution,
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<Graph> {
    if k == 0 || reference.node_marginal.len() > k {
        return Err(BwError::DimensionMismatch {
            what: "reference classes vs k",
            left: reference.node_marginal.len(),
            right: k,
        });
    }
    match reference.kind {
        ReferenceKind::Absorbing => Graph::new(
            Graph::empty(n).adjacency().clone(),
            Some(one_hot(&vec![0; n], k)),
            true,
        ),
        ReferenceKind::Marginal => {
            let skeleton = er_sample(n, reference.edge_marginal, rng);
            let classes: Vec<usize> = (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    for (c, p) in reference.node_marginal.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            return c;
                        }
                    }
                    reference.node_marginal.len() - 1
                })
                .collect();
            Graph::new(
                skeleton.adjacency().clone(),
                Some(one_hot(&classes, k)),
                true,
            )
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum DatasetSpec {
    Sbm {
        block_sizes: Vec<usize>,
        p_in: f64,
        p_out: f64,
    },
    Tree {
        n: usize,
    },
    Er {
        n: usize,
        p: f64,
    },
}

/// `{"kind": ..., "params": {...}, "count": N, "seed": s}`; `count` graphs go
/// to the train split and `test_count` (default `count`) to the test split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(flatten)]
    pub spec: DatasetSpec,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_count: Option<usize>,
    pub seed: u64,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        match &self.spec {
            DatasetSpec::Sbm {
                block_sizes,
                p_in,
                p_out,
            } => {
                if block_sizes.is_empty() {
                    return Err(BwError::InvalidConfig(
                        "sbm needs at least one block".into(),
                    ));
                }
                check_probability("p_in", *p_in)?;
                check_probability("p_out", *p_out)?;
            }
            DatasetSpec::Tree { n } => {
                if *n < 2 {
                    return Err(BwError::InvalidConfig(format!(
                        "trees need n >= 2, got {n}"
                    )));
                }
            }
            DatasetSpec::Er { p, .. } => check_probability("p", *p)?,
        }
        Ok(())
    }

    fn draw(&self, split: &str, index: usize) -> Result<Graph> {
        let mut rng = substream(self.seed, &format!("dataset/{split}"), index as u64);
        Ok(match &self.spec {
            DatasetSpec::Sbm {
                block_sizes,
                p_in,
                p_out,
            } => sbm_sample(block_sizes, *p_in, *p_out, &mut rng),
            DatasetSpec::Tree { n } => tree_sample(*n, &mut rng)?,
            DatasetSpec::Er { n, p } => er_sample(*n, *p, &mut rng),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub train: Vec<Graph>,
    pub test: Vec<Graph>,
}

pub fn generate_dataset(manifest: &DatasetManifest) -> Result<Dataset> {
    manifest.validate()?;
    let exec = Exec::default();
    let train = exec.map_range(manifest.count, |i| manifest.draw("train", i));
    let test = exec.map_range(manifest.test_count.unwrap_or(manifest.count), |i| {
        manifest.draw("test", i)
    });
    Ok(Dataset {
        train: train.into_iter().collect::<Result<_>>()?,
        test: test.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::stats::{is_connected, is_tree};

    fn edge_count(g: &Graph) -> usize {
        g.edges().len()
    }

    #[test]
    fn sbm_degenerate_probabilities() {
        let g = sbm_sample(&[3, 3], 1.0, 0.0, &mut seeded(0));
        assert_eq!(edge_count(&g), 6);
        let expect: Vec<_> = [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]
            .iter()
            .map(|&(u, v)| (u, v, 1.0))
            .collect();
        assert_eq!(g.edges(), expect);
        assert_eq!(
            edge_count(&sbm_sample(&[4, 2], 0.0, 0.0, &mut seeded(1))),
            0
        );
    }

    #[test]
    fn sbm_within_block_density() {
        let mut rng = seeded(7);
        let draws = 1000;
        let mut within = 0usize;
        for _ in 0..draws {
            let g = sbm_sample(&[10, 10], 0.8, 0.05, &mut rng);
            within += g
                .edges()
                .iter()
                .filter(|&&(u, v, _)| (u < 10) == (v < 10))
                .count();
        }
        let slots = (draws * 2 * 45) as f64;
        let density = within as f64 / slots;
        let sigma = (0.8 * 0.2 / slots).sqrt();
        assert!((density - 0.8).abs() < 3.0 * sigma, "density {density}");
    }

    #[test]
    fn er_examples() {
        assert_eq!(edge_count(&er_sample(10, 0.0, &mut seeded(0))), 0);
        assert_eq!(edge_count(&er_sample(10, 1.0, &mut seeded(0))), 45);
        let mut rng = seeded(3);
        let mut edges = 0;
        for _ in 0..1000 {
            edges += edge_count(&er_sample(20, 0.3, &mut rng));
        }
        let slots = 1000.0 * 190.0;
        let density = edges as f64 / slots;
        assert!((density - 0.3).abs() < 3.0 * (0.3 * 0.7 / slots).sqrt());
    }

    #[test]
    fn tree_examples() {
        let g = tree_sample(2, &mut seeded(0)).unwrap();
        assert_eq!(g.edges(), vec![(0, 1, 1.0)]);
        assert!(tree_sample(1, &mut seeded(0)).is_err());

        // Cayley: 3 labeled trees on 3 nodes, identified by their center.
        let mut rng = seeded(9);
        let draws = 10_000;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let g = tree_sample(3, &mut rng).unwrap();
            let adj = g.thresholded();
            let center = (0..3)
                .find(|&v| adj[v].iter().filter(|&&e| e).count() == 2)
                .unwrap();
            counts[center] += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!(
                (c as f64 - draws as f64 * p).abs() < 3.0 * sigma,
                "{counts:?}"
            );
        }
    }

    #[test]
    fn trees_are_trees() {
        let mut rng = seeded(12);
        for n in [4, 8, 16] {
            for _ in 0..1000 {
                let g = tree_sample(n, &mut rng).unwrap();
                assert_eq!(edge_count(&g), n - 1);
                assert!(is_connected(&g));
                assert!(is_tree(&g));
            }
        }
    }

    #[test]
    fn reference_draws() {
        let abs = ReferenceDistribution::absorbing(3);
        let g = draw_reference(&abs, 5, 3, &mut seeded(0)).unwrap();
        assert!(g.edges().is_empty());
        assert_eq!(g.node_classes(), vec![0; 5]);
        assert_eq!(g.features().unwrap().ncols(), 3);

        let empty = ReferenceDistribution::marginal(0.0, vec![1.0]).unwrap();
        assert!(draw_reference(&empty, 6, 1, &mut seeded(0))
            .unwrap()
            .edges()
            .is_empty());
        assert!(ReferenceDistribution::marginal(1.5, vec![1.0]).is_err());
        assert!(ReferenceDistribution::marginal(0.5, vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn marginal_estimate_round_trip() {
        let mut rng = seeded(4);
        let train: Vec<_> = (0..200).map(|_| er_sample(12, 0.25, &mut rng)).collect();
        let r = ReferenceDistribution::estimate(ReferenceKind::Marginal, &train).unwrap();
        let draws = 1000;
        let mut edges = 0;
        for _ in 0..draws {
            edges += edge_count(&draw_reference(&r, 12, 1, &mut rng).unwrap());
        }
        let slots = draws as f64 * 66.0;
        let density = edges as f64 / slots;
        let p = r.edge_marginal;
        assert!((density - p).abs() < 3.0 * (p * (1.0 - p) / slots).sqrt());
    }

    #[test]
    fn generators_are_reproducible() {
        let m: DatasetManifest = serde_json::from_str(
            r#"{"kind": "sbm", "params": {"block_sizes": [5, 5], "p_in": 0.7, "p_out": 0.1}, "count": 4, "seed": 11}"#,
        )
        .unwrap();
        let a = generate_dataset(&m).unwrap();
        let b = generate_dataset(&m).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train.len(), 4);
        assert_eq!(a.test.len(), 4);
        assert_ne!(a.train, a.test);
        assert_eq!(
            tree_sample(9, &mut seeded(5)).unwrap(),
            tree_sample(9, &mut seeded(5)).unwrap()
        );
    }

    #[test]
    fn manifest_validation() {
        let bad = DatasetManifest {
            spec: DatasetSpec::Er { n: 5, p: 2.0 },
            count: 1,
            test_count: None,
            seed: 0,
        };
        assert!(generate_dataset(&bad).is_err());
        let text = serde_json::to_string(&DatasetManifest {
            spec: DatasetSpec::Tree { n: 16 },
            count: 100,
            test_count: Some(20),
            seed: 1,
        })
        .unwrap();
        assert_eq!(
            text,
            r#"{"kind":"tree","params":{"n":16},"count":100,"test_count":20,"seed":1}"#
        );
    }
}

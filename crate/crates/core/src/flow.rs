//! Flow-matching training samples, loss and samplers.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::denoiser::{sample_discrete, Denoiser, DenoiserOutput};
use crate::error::{BwError, Result};
use crate::exec::Exec;
use crate::graph::{laplacian_of, one_hot, Graph, GraphMrf};
use crate::interp::{interpolate, BwGeodesic, InterpScheme};
use crate::linalg::SymMatrix;
use crate::rng::{substream, BwRng};
use crate::velocity::{
    discrete_edge_velocity, discrete_node_velocity, geodesic_velocity, DEFAULT_CLAMP_EPS,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Continuous,
    #[default]
    Discrete,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    XpredVelocity,
    BwVelocity,
    PathReconstruction,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeDistortion {
    #[default]
    Identity,
    Polydec,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::XpredVelocity => "xpred_velocity",
            Strategy::BwVelocity => "bw_velocity",
            Strategy::PathReconstruction => "path_reconstruction",
        })
    }
}

/// `polydec(t) = 2t - t²` spends more steps near `t = 1`.
pub fn apply_time_distortion(t: f64, kind: TimeDistortion) -> f64 {
    match kind {
        TimeDistortion::Identity => t,
        TimeDistortion::Polydec => 2.0 * t - t * t,
    }
}

fn default_clamp_eps() -> f64 {
    DEFAULT_CLAMP_EPS
}

fn default_beta() -> f64 {
    1.0
}

/// Sampler and training-path settings. Reads from TOML or JSON with keys
/// matching the field names; `dt` is optional on input and must equal
/// `1/steps` when present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    #[serde(default)]
    pub regime: Regime,
    #[serde(default)]
    pub strategy: Strategy,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_clamp_eps")]
    pub clamp_eps: f64,
    #[serde(default)]
    pub time_distortion: TimeDistortion,
    pub seed: u64,
    /// `ν` of the graph MRFs behind the geodesic. Needed whenever an endpoint
    /// can be disconnected.
    #[serde(default)]
    pub regularize_nu: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

impl FlowConfig {
    pub fn new(regime: Regime, strategy: Strategy, steps: usize, seed: u64) -> Self {
        FlowConfig {
            regime,
            strategy,
            steps,
            dt: Some(1.0 / steps.max(1) as f64),
            clamp_eps: DEFAULT_CLAMP_EPS,
            time_distortion: TimeDistortion::Identity,
            seed,
            regularize_nu: 0.0,
            beta: 1.0,
        }
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.regularize_nu = nu;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(BwError::InvalidConfig("steps must be at least 1".into()));
        }
        if let Some(dt) = self.dt {
            if (dt * self.steps as f64 - 1.0).abs() > 1e-12 {
                return Err(BwError::InvalidConfig(format!(
                    "dt = {dt} does not match 1/steps"
                )));
            }
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 0.5) {
            return Err(BwError::InvalidConfig(format!(
                "clamp_eps must lie in (0, 0.5), got {}",
                self.clamp_eps
            )));
        }
        if self.regularize_nu.is_nan()
            || self.regularize_nu < 0.0
            || self.beta.is_nan()
            || self.beta <= 0.0
        {
            return Err(BwError::InvalidConfig(
                "need regularize_nu >= 0 and beta > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps as f64
    }

    /// Distorted time of grid index `i` in `0..=steps`.
    pub fn time(&self, i: usize) -> f64 {
        apply_time_distortion(i as f64 / self.steps as f64, self.time_distortion)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: FlowConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: FlowConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `.toml` as TOML and anything else as JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "toml") {
            Self::from_toml_str(&text)
        } else {
            Self::from_json_str(&text)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub t: f64,
    pub g_t: Graph,
    pub target: Graph,
}

fn check_same_n(g0: &Graph, g1: &Graph) -> Result<()> {
    if g0.n() != g1.n() {
        return Err(BwError::DimensionMismatch {
            what: "node count",
            left: g0.n(),
            right: g1.n(),
        });
    }
    Ok(())
}

/// Geodesic between the edge structures only; features move linearly and are
/// handled by the callers.
fn edge_mrf(w: &SymMatrix, cfg: &FlowConfig) -> Result<GraphMrf> {
    GraphMrf::new(
        DMatrix::zeros(w.dim(), 0),
        laplacian_of(w),
        cfg.regularize_nu,
        cfg.beta,
    )
}

fn edge_geodesic(w0: &SymMatrix, w1: &SymMatrix, cfg: &FlowConfig) -> Result<BwGeodesic> {
    BwGeodesic::new(&edge_mrf(w0, cfg)?, &edge_mrf(w1, cfg)?)
}

fn edge_path_point(
    w0: &SymMatrix,
    w1: &SymMatrix,
    t: f64,
    scheme: &InterpScheme,
    cfg: &FlowConfig,
) -> Result<SymMatrix> {
    Ok(interpolate(&edge_mrf(w0, cfg)?, &edge_mrf(w1, cfg)?, t, scheme)?.w_t)
}

fn features_or_empty(g: &Graph) -> DMatrix<f64> {
    g.features()
        .cloned()
        .unwrap_or_else(|| DMatrix::zeros(g.n(), 0))
}

fn check_discrete(g: &Graph) -> Result<()> {
    if !g.is_binary() {
        return Err(BwError::InvalidGraph(
            "discrete regime needs binary edges".into(),
        ));
    }
    if let Some(x) = g.features() {
        let one_hot = x
            .row_iter()
            .all(|r| r.iter().all(|&v| v == 0.0 || v == 1.0) && r.sum() == 1.0);
        if !one_hot {
            return Err(BwError::InvalidGraph(
                "discrete regime needs one-hot features".into(),
            ));
        }
    }
    Ok(())
}

/// Draws `G_t` on the path between `g0` and `g1`.
///
/// Continuous: the geodesic point itself. Discrete: every edge is Bernoulli
/// with the clipped geodesic weight and every node categorical with the
/// interpolated one-hot rows. At `t ∈ {0, 1}` the endpoints are returned.
pub fn make_training_sample<R: Rng + ?Sized>(
    g0: &Graph,
    g1: &Graph,
    t: f64,
    cfg: &FlowConfig,
    rng: &mut R,
) -> Result<TrainingSample> {
    make_training_sample_on(&InterpScheme::bw(), g0, g1, t, cfg, rng)
}

/// [`make_training_sample`] along the edge path of any interpolation scheme.
pub fn make_training_sample_on<R: Rng + ?Sized>(
    scheme: &InterpScheme,
    g0: &Graph,
    g1: &Graph,
    t: f64,
    cfg: &FlowConfig,
    rng: &mut R,
) -> Result<TrainingSample> {
    check_same_n(g0, g1)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(BwError::TimeOutOfRange { t });
    }
    let g_t = match cfg.regime {
        Regime::Continuous => {
            if t == 0.0 {
                g0.clone()
            } else {
                let (x0, x1) = (features_or_empty(g0), features_or_empty(g1));
                if x0.ncols() != x1.ncols() {
                    return Err(BwError::DimensionMismatch {
                        what: "feature width",
                        left: x0.ncols(),
                        right: x1.ncols(),
                    });
                }
                let w_t = edge_path_point(g0.adjacency(), g1.adjacency(), t, scheme, cfg)?;
                let x_t = x0 * (1.0 - t) + x1 * t;
                let x_t = (x_t.ncols() > 0).then_some(x_t);
                Graph::new(w_t, x_t, false)?
            }
        }
        Regime::Discrete => {
            check_discrete(g0)?;
            check_discrete(g1)?;
            if t == 0.0 {
                g0.clone()
            } else if t == 1.0 {
                g1.clone()
            } else {
                let k = g0.num_classes().max(g1.num_classes());
                let w_t = edge_path_point(g0.adjacency(), g1.adjacency(), t, scheme, cfg)?;
                let eps = cfg.clamp_eps;
                let edge_probs = w_t.as_matrix().map(|w| w.clamp(eps, 1.0 - eps));
                let node_probs = g0.one_hot_features(k) * (1.0 - t) + g1.one_hot_features(k) * t;
                sample_discrete(&edge_probs, &node_probs, rng)?
            }
        }
    };
    Ok(TrainingSample {
        t,
        g_t,
        target: g1.clone(),
    })
}

/// Mean negative log-likelihood of the targets under the denoiser's
/// factorized prediction: categorical per node plus Bernoulli per pair
/// `u < v`. Probabilities are floored at `clamp_eps` inside the log.
pub fn cfm_loss<D: Denoiser + ?Sized>(
    denoiser: &D,
    samples: &[TrainingSample],
    clamp_eps: f64,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(BwError::EmptySet("training samples"));
    }
    let mut total = 0.0;
    for s in samples {
        let out = denoiser.predict(&s.g_t, s.t)?;
        let n = s.target.n();
        if out.n() != n || out.node_probs.nrows() != n {
            return Err(BwError::DimensionMismatch {
                what: "denoiser output vs target",
                left: out.n(),
                right: n,
            });
        }
        let classes = s.target.node_classes();
        if let Some(&c) = classes.iter().max() {
            if c >= out.num_classes() {
                return Err(BwError::DimensionMismatch {
                    what: "denoiser classes vs target",
                    left: out.num_classes(),
                    right: c + 1,
                });
            }
        }
        let nll = |p: f64| -p.max(clamp_eps).ln();
        for (v, &c) in classes.iter().enumerate() {
            total += nll(out.node_probs[(v, c)]);
        }
        let target = s.target.thresholded();
        for (u, row) in target.iter().enumerate() {
            for (v, &edge) in row.iter().enumerate().skip(u + 1) {
                let p = out.edge_probs[(u, v)];
                total += nll(if edge { p } else { 1.0 - p });
            }
        }
    }
    Ok(total / samples.len() as f64)
}

fn non_finite(m: &DMatrix<f64>) -> bool {
    m.iter().any(|v| !v.is_finite())
}

fn check_prediction(out: &DenoiserOutput, n: usize) -> Result<()> {
    if out.n() != n || out.node_probs.nrows() != n {
        return Err(BwError::DimensionMismatch {
            what: "denoiser output vs state",
            left: out.n(),
            right: n,
        });
    }
    Ok(())
}

/// Reuses the geodesic while the denoiser keeps predicting the same target.
struct GeodesicCache {
    target: Option<DMatrix<f64>>,
    geo: Option<BwGeodesic>,
}

impl GeodesicCache {
    fn new() -> Self {
        GeodesicCache {
            target: None,
            geo: None,
        }
    }

    fn get(&mut self, w0: &SymMatrix, w1: &SymMatrix, cfg: &FlowConfig) -> Result<&BwGeodesic> {
        if self.target.as_ref() != Some(w1.as_matrix()) {
            self.geo = Some(edge_geodesic(w0, w1, cfg)?);
            self.target = Some(w1.as_matrix().clone());
        }
        Ok(self.geo.as_ref().expect("filled above"))
    }
}

/// Generates one graph from `g0` with the configured regime and strategy.
///
/// The last step returns the denoiser's most likely graph (threshold/argmax
/// in the discrete regime, the raw prediction in the continuous one).
pub fn sample<D: Denoiser + ?Sized>(
    denoiser: &D,
    g0: &Graph,
    cfg: &FlowConfig,
    rng: &mut BwRng,
) -> Result<Graph> {
    cfg.validate()?;
    match cfg.regime {
        Regime::Discrete => sample_discrete_chain(denoiser, g0, cfg, rng),
        Regime::Continuous => integrate_continuous(denoiser, g0, cfg, rng, true),
    }
}

/// Continuous Euler integration over the full grid, including the last step
/// (no substitution of the prediction).
pub fn euler_integrate<D: Denoiser + ?Sized>(
    denoiser: &D,
    g0: &Graph,
    cfg: &FlowConfig,
    rng: &mut BwRng,
) -> Result<Graph> {
    cfg.validate()?;
    if cfg.regime != Regime::Continuous {
        return Err(BwError::InvalidConfig(
            "euler_integrate runs the continuous regime".into(),
        ));
    }
    integrate_continuous(denoiser, g0, cfg, rng, false)
}

fn sample_discrete_chain<D: Denoiser + ?Sized>(
    denoiser: &D,
    g0: &Graph,
    cfg: &FlowConfig,
    rng: &mut BwRng,
) -> Result<Graph> {
    check_discrete(g0)?;
    let n = g0.n();
    let mut cache = GeodesicCache::new();
    let mut current = g0.clone();
    for i in 0..cfg.steps {
        let (t, t_next) = (cfg.time(i), cfg.time(i + 1));
        let dt = t_next - t;
        let pred = denoiser.predict(&current, t)?;
        check_prediction(&pred, n)?;
        if i + 1 == cfg.steps {
            return pred.to_discrete_graph();
        }
        let k = pred.num_classes().max(1);
        if current.num_classes() > k {
            return Err(BwError::DimensionMismatch {
                what: "state classes vs denoiser classes",
                left: current.num_classes(),
                right: k,
            });
        }
        let e = current.adjacency().as_matrix();
        let x = current.one_hot_features(k);
        let (edge_probs, node_probs) = match cfg.strategy {
            Strategy::XpredVelocity => {
                let s = dt / (1.0 - t);
                (
                    e + (&pred.edge_probs - e) * s,
                    &x + (&pred.node_probs - &x) * s,
                )
            }
            Strategy::BwVelocity => {
                let target = pred.to_discrete_graph()?;
                let geo = cache.get(g0.adjacency(), target.adjacency(), cfg)?;
                let w_t = geo.point(t)?.w_t;
                let v = geodesic_velocity(geo, t)?;
                let rates = discrete_edge_velocity(e, &w_t, &v.w_dot, cfg.clamp_eps)?;
                let node_rates = discrete_node_velocity(&x, &target.one_hot_features(k), t)?;
                (e + rates * dt, &x + node_rates * dt)
            }
            Strategy::PathReconstruction => {
                let g1 = pred.sample_graph(rng)?;
                current = make_training_sample(g0, &g1, t_next, cfg, rng)?.g_t;
                continue;
            }
        };
        if non_finite(&edge_probs) || non_finite(&node_probs) {
            return Err(BwError::NonFiniteVelocity { t });
        }
        let edge_probs = edge_probs.map(|p| p.clamp(0.0, 1.0));
        current = sample_discrete(&edge_probs, &project_rows(node_probs, &x), rng)?;
    }
    unreachable!("the last step returns the prediction")
}

/// Clips negatives and renormalizes each row; a row with no mass keeps `fallback`.
fn project_rows(mut p: DMatrix<f64>, fallback: &DMatrix<f64>) -> DMatrix<f64> {
    p.apply(|v| *v = v.max(0.0));
    for i in 0..p.nrows() {
        let s = p.row(i).sum();
        if s > 0.0 {
            p.row_mut(i).unscale_mut(s);
        } else {
            p.set_row(i, &fallback.row(i));
        }
    }
    p
}

fn integrate_continuous<D: Denoiser + ?Sized>(
    denoiser: &D,
    g0: &Graph,
    cfg: &FlowConfig,
    _rng: &mut BwRng,
    substitute_last: bool,
) -> Result<Graph> {
    let n = g0.n();
    let mut w = g0.adjacency().as_matrix().clone();
    let mut x = features_or_empty(g0);
    let mut cache = GeodesicCache::new();
    let build = |w: DMatrix<f64>, x: DMatrix<f64>| {
        let x = (x.ncols() > 0).then_some(x);
        Graph::new(SymMatrix::from_symmetrized(w), x, false)
    };
    for i in 0..cfg.steps {
        let (t, t_next) = (cfg.time(i), cfg.time(i + 1));
        let dt = t_next - t;
        let current = build(w.clone(), x.clone())?;
        let pred = denoiser.predict(&current, t)?;
        check_prediction(&pred, n)?;
        if substitute_last && i + 1 == cfg.steps {
            return pred.to_continuous_graph();
        }
        let x_pred = if x.ncols() == 0 {
            x.clone()
        } else if pred.num_classes() == x.ncols() {
            pred.node_probs.clone()
        } else {
            return Err(BwError::DimensionMismatch {
                what: "feature width vs denoiser classes",
                left: x.ncols(),
                right: pred.num_classes(),
            });
        };
        let target_w = SymMatrix::from_symmetrized(pred.edge_probs.clone());
        match cfg.strategy {
            Strategy::XpredVelocity => {
                let s = dt / (1.0 - t);
                w += (&pred.edge_probs - &w) * s;
                x += (x_pred - &x) * s;
            }
            Strategy::BwVelocity => {
                let geo = cache.get(g0.adjacency(), &target_w, cfg)?;
                let v = geodesic_velocity(geo, t)?;
                w += v.w_dot.as_matrix() * dt;
                x += (x_pred - &x) * (dt / (1.0 - t));
            }
            Strategy::PathReconstruction => {
                let geo = cache.get(g0.adjacency(), &target_w, cfg)?;
                w = geo.point(t_next)?.w_t.into_inner();
                x = features_or_empty(g0) * (1.0 - t_next) + x_pred * t_next;
            }
        }
        if non_finite(&w) || non_finite(&x) {
            return Err(BwError::NonFiniteVelocity { t });
        }
    }
    build(w, x)
}

/// Runs one chain per initial graph; chain `i` draws from its own sub-stream
/// of `cfg.seed`, so results do not depend on scheduling.
pub fn sample_batch<D: Denoiser + ?Sized>(
    denoiser: &D,
    g0s: &[Graph],
    cfg: &FlowConfig,
) -> Result<Vec<Graph>> {
    sample_batch_with(Exec::default(), denoiser, g0s, cfg)
}

pub fn sample_batch_with<D: Denoiser + ?Sized>(
    exec: Exec,
    denoiser: &D,
    g0s: &[Graph],
    cfg: &FlowConfig,
) -> Result<Vec<Graph>> {
    cfg.validate()?;
    exec.map_range(g0s.len(), |i| {
        let mut rng = substream(cfg.seed, "sampler/chain", i as u64);
        sample(denoiser, &g0s[i], cfg, &mut rng)
    })
    .into_iter()
    .collect()
}

/// One-hot features of `classes` over `k` categories, as a discrete graph on `w`.
pub fn discrete_graph(w: SymMatrix, classes: &[usize], k: usize) -> Result<Graph> {
    Graph::new(w, Some(one_hot(classes, k)), true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{er_sample, tree_sample};
    use crate::denoiser::{KnnDenoiser, OracleDenoiser};
    use crate::graph::GraphMrf;
    use crate::interp::bw_interpolate;
    use crate::rng::seeded;

    fn p2(w: f64) -> Graph {
        Graph::from_edges(2, &[(0, 1, w)], None, false).unwrap()
    }

    fn labeled(g: Graph, classes: &[usize], k: usize) -> Graph {
        discrete_graph(g.adjacency().clone(), classes, k).unwrap()
    }

    struct Uniform {
        n: usize,
        k: usize,
    }

    impl Denoiser for Uniform {
        fn predict(&self, _g: &Graph, _t: f64) -> Result<DenoiserOutput> {
            let mut edge_probs = DMatrix::from_element(self.n, self.n, 0.5);
            edge_probs.fill_diagonal(0.0);
            Ok(DenoiserOutput {
                node_probs: DMatrix::from_element(self.n, self.k, 1.0 / self.k as f64),
                edge_probs,
            })
        }
    }

    #[test]
    fn time_distortion_examples() {
        assert_eq!(apply_time_distortion(0.3, TimeDistortion::Identity), 0.3);
        assert_eq!(apply_time_distortion(0.0, TimeDistortion::Polydec), 0.0);
        assert_eq!(apply_time_distortion(1.0, TimeDistortion::Polydec), 1.0);
        assert_eq!(apply_time_distortion(0.5, TimeDistortion::Polydec), 0.75);
        let grid: Vec<f64> = (0..=1000)
            .map(|i| apply_time_distortion(i as f64 / 1000.0, TimeDistortion::Polydec))
            .collect();
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn config_round_trip_and_validation() {
        let text = "regime = \"discrete\"\nstrategy = \"bw_velocity\"\nsteps = 50\ndt = 0.02\nseed = 3\ntime_distortion = \"polydec\"\n";
        let cfg = FlowConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.strategy, Strategy::BwVelocity);
        assert_eq!(cfg.clamp_eps, DEFAULT_CLAMP_EPS);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(FlowConfig::from_json_str(&json).unwrap(), cfg);
        assert!(FlowConfig::from_toml_str("steps = 50\ndt = 0.03\nseed = 1\n").is_err());
        assert!(FlowConfig::from_toml_str("steps = 0\nseed = 1\n").is_err());
        assert!(FlowConfig::from_toml_str("steps = 5\n").is_err());
    }

    #[test]
    fn continuous_boundaries() {
        let cfg = FlowConfig::new(Regime::Continuous, Strategy::XpredVelocity, 10, 0);
        let (g0, g1) = (p2(1.0), p2(4.0));
        let s = make_training_sample(&g0, &g1, 0.0, &cfg, &mut seeded(0)).unwrap();
        assert_eq!(s.g_t, g0);
        let s = make_training_sample(&g0, &g1, 1.0, &cfg, &mut seeded(0)).unwrap();
        assert!((s.g_t.adjacency().get(0, 1) - 4.0).abs() < 1e-9);
        let s = make_training_sample(&g0, &g1, 0.5, &cfg, &mut seeded(0)).unwrap();
        assert!((s.g_t.adjacency().get(0, 1) - 16.0 / 9.0).abs() < 1e-9);
    }

    #[test]
    fn discrete_boundaries() {
        let cfg = FlowConfig::new(Regime::Discrete, Strategy::XpredVelocity, 10, 0).with_nu(1.0);
        let mut rng = seeded(1);
        let g0 = labeled(er_sample(6, 0.5, &mut rng), &[0, 1, 0, 1, 0, 1], 2);
        let g1 = labeled(er_sample(6, 0.5, &mut rng), &[1, 1, 0, 0, 1, 1], 2);
        assert_eq!(
            make_training_sample(&g0, &g1, 0.0, &cfg, &mut rng)
                .unwrap()
                .g_t,
            g0
        );
        assert_eq!(
            make_training_sample(&g0, &g1, 1.0, &cfg, &mut rng)
                .unwrap()
                .g_t,
            g1
        );
        assert!(make_training_sample(&p2(0.5), &g1, 0.5, &cfg, &mut rng).is_err());
    }

    #[test]
    fn discrete_edge_frequency_matches_marginal() {
        // P2 with weights 0.2 and 0.9 reached through the ν = 1 geodesic.
        let cfg = FlowConfig::new(Regime::Discrete, Strategy::XpredVelocity, 10, 0).with_nu(1.0);
        let g0 = Graph::from_edges(2, &[], None, true).unwrap();
        let g1 = Graph::from_edges(2, &[(0, 1, 1.0)], None, true).unwrap();
        let mrf = |g: &Graph| GraphMrf::from_graph(g, 1.0, 1.0).unwrap();
        let p = bw_interpolate(&mrf(&g0), &mrf(&g1), 0.5)
            .unwrap()
            .w_t
            .get(0, 1);
        let p = p.clamp(cfg.clamp_eps, 1.0 - cfg.clamp_eps);
        let mut rng = seeded(2);
        let draws = 10_000;
        let hits = (0..draws)
            .filter(|_| {
                make_training_sample(&g0, &g1, 0.5, &cfg, &mut rng)
                    .unwrap()
                    .g_t
                    .adjacency()
                    .get(0, 1)
                    == 1.0
            })
            .count();
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (hits as f64 - draws as f64 * p).abs() < 3.0 * sigma,
            "{hits} vs {p}"
        );
    }

    #[test]
    fn loss_examples() {
        let mut rng = seeded(3);
        let cfg = FlowConfig::new(Regime::Discrete, Strategy::XpredVelocity, 10, 0).with_nu(1.0);
        let (n, k) = (5, 3);
        let targets: Vec<Graph> = (0..6)
            .map(|i| {
                labeled(
                    er_sample(n, 0.5, &mut rng),
                    &[i % 3, 0, 1, 2, (i + 1) % 3],
                    k,
                )
            })
            .collect();
        let g0 = labeled(Graph::empty(n), &[0; 5], k);
        let samples: Vec<TrainingSample> = targets
            .iter()
            .map(|g1| make_training_sample(&g0, g1, 0.4, &cfg, &mut rng).unwrap())
            .collect();

        let oracle_loss: f64 = samples
            .iter()
            .map(|s| {
                cfm_loss(
                    &OracleDenoiser::new(s.target.clone()),
                    std::slice::from_ref(s),
                    cfg.clamp_eps,
                )
                .unwrap()
            })
            .sum();
        assert_eq!(oracle_loss, 0.0);

        let uniform = cfm_loss(&Uniform { n, k }, &samples, cfg.clamp_eps).unwrap();
        let m = (n * (n - 1) / 2) as f64;
        assert!((uniform - (n as f64 * (k as f64).ln() + m * 2f64.ln())).abs() < 1e-12);

        // Brute-force bound: a prediction that ignores G_t cannot beat the
        // summed per-slot entropies of the empirical targets; the empirical
        // marginals (kNN over all targets from a fixed query) attain it.
        let fixed: Vec<TrainingSample> = samples
            .iter()
            .map(|s| TrainingSample {
                t: s.t,
                g_t: g0.clone(),
                target: s.target.clone(),
            })
            .collect();
        let h = |p: f64| {
            if p <= 0.0 || p >= 1.0 {
                0.0
            } else {
                -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
            }
        };
        let count = targets.len() as f64;
        let mut bound = 0.0;
        for u in 0..n {
            for v in (u + 1)..n {
                bound += h(targets
                    .iter()
                    .filter(|g| g.adjacency().get(u, v) == 1.0)
                    .count() as f64
                    / count);
            }
            for c in 0..k {
                let q = targets.iter().filter(|g| g.node_classes()[u] == c).count() as f64 / count;
                if q > 0.0 {
                    bound -= q * q.ln();
                }
            }
        }
        let knn = KnnDenoiser::new(&targets, targets.len()).unwrap();
        let mixture = cfm_loss(&knn, &fixed, 1e-300).unwrap();
        assert!((mixture - bound).abs() < 1e-9);
        assert!(cfm_loss(&Uniform { n, k }, &fixed, cfg.clamp_eps).unwrap() >= bound);
        assert!(
            cfm_loss(
                &KnnDenoiser::new(&targets[..2], 1).unwrap(),
                &fixed,
                cfg.clamp_eps
            )
            .unwrap()
                >= bound
        );
    }

    #[test]
    fn oracle_convergence_all_strategies() {
        let mut rng = seeded(4);
        for strategy in [
            Strategy::XpredVelocity,
            Strategy::BwVelocity,
            Strategy::PathReconstruction,
        ] {
            let cfg = FlowConfig::new(Regime::Discrete, strategy, 100, 9).with_nu(1.0);
            for _ in 0..3 {
                let g0 = labeled(er_sample(10, 0.3, &mut rng), &[0; 10], 2);
                let g1 = labeled(
                    tree_sample(10, &mut rng).unwrap(),
                    &[0, 1, 0, 1, 0, 1, 1, 1, 0, 0],
                    2,
                );
                let out = sample(&OracleDenoiser::new(g1.clone()), &g0, &cfg, &mut rng).unwrap();
                assert_eq!(out, g1, "{strategy}");
            }
        }
    }

    #[test]
    fn single_step_returns_prediction() {
        let mut rng = seeded(5);
        let train: Vec<Graph> = (0..4).map(|_| er_sample(6, 0.4, &mut rng)).collect();
        let knn = KnnDenoiser::new(&train, 2).unwrap();
        let g0 = er_sample(6, 0.4, &mut rng);
        let cfg = FlowConfig::new(Regime::Discrete, Strategy::BwVelocity, 1, 0);
        let out = sample(&knn, &g0, &cfg, &mut rng).unwrap();
        assert_eq!(
            out,
            knn.predict(&g0, 0.0).unwrap().to_discrete_graph().unwrap()
        );
    }

    #[test]
    fn sampling_is_deterministic_and_schedule_free() {
        let mut rng = seeded(6);
        let train: Vec<Graph> = (0..10).map(|_| tree_sample(8, &mut rng).unwrap()).collect();
        let knn = KnnDenoiser::new(&train, 3).unwrap();
        let g0s: Vec<Graph> = (0..6).map(|_| er_sample(8, 0.2, &mut rng)).collect();
        for strategy in [
            Strategy::XpredVelocity,
            Strategy::BwVelocity,
            Strategy::PathReconstruction,
        ] {
            let cfg = FlowConfig::new(Regime::Discrete, strategy, 20, 42).with_nu(1.0);
            let a = sample_batch_with(Exec::Sequential, &knn, &g0s, &cfg).unwrap();
            let b = sample_batch_with(Exec::Parallel, &knn, &g0s, &cfg).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, sample_batch(&knn, &g0s, &cfg).unwrap());
        }
    }

    #[test]
    fn continuous_euler_converges() {
        let mut rng = seeded(7);
        let g0 = er_sample(6, 0.5, &mut rng);
        let g1 = tree_sample(6, &mut rng).unwrap();
        let oracle = OracleDenoiser::new(g1.clone());
        let errors: Vec<f64> = [10, 50, 250]
            .iter()
            .map(|&steps| {
                let cfg = FlowConfig::new(Regime::Continuous, Strategy::BwVelocity, steps, 0)
                    .with_nu(0.5);
                let out = euler_integrate(&oracle, &g0, &cfg, &mut seeded(0)).unwrap();
                (out.adjacency().as_matrix() - g1.adjacency().as_matrix()).norm()
            })
            .collect();
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
        assert!(errors[2] < 0.05, "{errors:?}");
    }

    #[test]
    fn continuous_xpred_lands_on_target() {
        let g0 = p2(1.0);
        let g1 = p2(4.0);
        let oracle = OracleDenoiser::new(g1.clone());
        for strategy in [Strategy::XpredVelocity, Strategy::PathReconstruction] {
            let cfg = FlowConfig::new(Regime::Continuous, strategy, 20, 0);
            let out = euler_integrate(&oracle, &g0, &cfg, &mut seeded(0)).unwrap();
            assert!((out.adjacency().get(0, 1) - 4.0).abs() < 1e-9, "{strategy}");
        }
    }
}

//! Conditional velocity fields along a probability path.

use nalgebra::DMatrix;

use crate::error::{BwError, Result};
use crate::graph::{adjacency_from_laplacian, GraphMrf};
use crate::interp::{baseline_interpolate, BwGeodesic, InterpScheme, SchemeKind};
use crate::linalg::SymMatrix;

/// Smallest admissible `1 - t` for velocities with a `1/(1-t)` factor.
pub const TIME_MARGIN: f64 = 1e-6;

/// Default floor for Bernoulli marginals in edge-rate denominators.
pub const DEFAULT_CLAMP_EPS: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GraphVelocity {
    /// Edge-weight rate, zero diagonal.
    pub w_dot: SymMatrix,
    /// Feature rate.
    pub x_dot: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteVelocity {
    pub edge_rates: DMatrix<f64>,
    pub node_rates: DMatrix<f64>,
}

pub(crate) fn check_time_margin(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(BwError::TimeOutOfRange { t });
    }
    if t > 1.0 - TIME_MARGIN {
        return Err(BwError::TimeSingularity { t });
    }
    Ok(())
}

/// Velocity of the Bures-Wasserstein path at `t`.
///
/// `Ẇ_t = diag(L̇_t) - L̇_t` with `L̇_t` the exact derivative of the geodesic
/// Laplacian, and `v(X_t) = (X₁ - X_t)/(1 - t)`. The feature velocity keeps
/// only the mean displacement; the covariance correction is dropped, which is
/// accurate when the covariance amplitude is small next to the mean gap.
pub fn bw_velocity(g0: &GraphMrf, g1: &GraphMrf, t: f64) -> Result<GraphVelocity> {
    check_time_margin(t)?;
    geodesic_velocity(&BwGeodesic::new(g0, g1)?, t)
}

pub fn geodesic_velocity(geo: &BwGeodesic, t: f64) -> Result<GraphVelocity> {
    check_time_margin(t)?;
    let (_, rate) = geo.precision_rate(t)?;
    let x1 = geo.mean_at(1.0);
    let x_dot = (x1 - geo.mean_at(t)) / (1.0 - t);
    Ok(GraphVelocity {
        w_dot: adjacency_from_laplacian(&rate),
        x_dot,
    })
}

/// Per-edge flip rates of the Bernoulli path `p_t(e = 1) = W_t`.
///
/// The value at `(u, v)` is signed by direction: positive at `E = 0` is the
/// rate of jumping to 1, negative at `E = 1` is (minus) the rate of jumping
/// to 0. Rates follow the sign of `Ẇ`:
///
/// ```text
/// v(0→1) = max(Ẇ, 0) / (1 - W)     v(1→0) = max(-Ẇ, 0) / W
/// ```
///
/// which satisfies `p₀ v(0→1) - p₁ v(1→0) = Ẇ` exactly and never produces a
/// negative jump probability. `W` is clipped into `[clamp_eps, 1 - clamp_eps]`
/// first.
pub fn discrete_edge_velocity(
    e_t: &DMatrix<f64>,
    w_t: &SymMatrix,
    w_dot: &SymMatrix,
    clamp_eps: f64,
) -> Result<DMatrix<f64>> {
    let n = w_t.dim();
    if e_t.nrows() != n || e_t.ncols() != n || w_dot.dim() != n {
        return Err(BwError::DimensionMismatch {
            what: "edge state vs marginals",
            left: e_t.nrows(),
            right: n,
        });
    }
    let mut rates = DMatrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let p1 = w_t.get(u, v).clamp(clamp_eps, 1.0 - clamp_eps);
            let wd = w_dot.get(u, v);
            rates[(u, v)] = if e_t[(u, v)] > 0.5 {
                -(-wd).max(0.0) / p1
            } else {
                wd.max(0.0) / (1.0 - p1)
            };
        }
    }
    Ok(rates)
}

/// `[δ(·, X₁) - δ(·, X_t)] / (1 - t)` for one-hot rows.
pub fn discrete_node_velocity(
    x_t: &DMatrix<f64>,
    x1: &DMatrix<f64>,
    t: f64,
) -> Result<DMatrix<f64>> {
    check_time_margin(t)?;
    if x_t.shape() != x1.shape() {
        return Err(BwError::DimensionMismatch {
            what: "node state vs target",
            left: x_t.nrows() * x_t.ncols(),
            right: x1.nrows() * x1.ncols(),
        });
    }
    Ok((x1 - x_t) / (1.0 - t))
}

/// Central difference `(P_{t+h} - P_{t-h}) / 2h` of a scheme's path.
pub fn numerical_velocity(
    g0: &GraphMrf,
    g1: &GraphMrf,
    t: f64,
    h: f64,
    scheme: &InterpScheme,
) -> Result<GraphVelocity> {
    if h.is_nan() || h <= 0.0 || t - h < 0.0 || t + h > 1.0 {
        return Err(BwError::StepOutOfRange { t, h });
    }
    let (lo, hi) = if scheme.kind == SchemeKind::Bw {
        let geo = BwGeodesic::new(g0, g1)?;
        (geo.point(t - h)?, geo.point(t + h)?)
    } else {
        (
            baseline_interpolate(g0, g1, t - h, scheme)?,
            baseline_interpolate(g0, g1, t + h, scheme)?,
        )
    };
    Ok(GraphVelocity {
        w_dot: hi.w_t.sub(&lo.w_t).scale(0.5 / h),
        x_dot: (hi.x_t - lo.x_t) / (2.0 * h),
    })
}

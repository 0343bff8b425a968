//! Probability-path interpolants between two graphs.
//!
//! The Bures-Wasserstein geodesic works on edge-measure covariances
//! `Σ = (νI + L)†`. With `K₀ = νI + L₀`, the transport map and interpolant are
//!
//! ```text
//! M   = (Σ₀^{1/2} Σ₁ Σ₀^{1/2})^{1/2}
//! T   = K₀^{1/2} M K₀^{1/2}
//! Σ_t = K₀^{1/2} ((1-t) Σ₀ + t M)² K₀^{1/2}
//! X_t = (1-t) X₀ + t X₁
//! ```
//!
//! and the Laplacian at time `t` is `Σ_t†`, evaluated as `A_t† K₀ A_t†` with
//! `A_t = (1-t)P + tT`. At `nu = 0` every chained product is re-projected off
//! the constant vector.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{BwError, Result};
use crate::exec::Exec;
use crate::graph::{adjacency_from_laplacian, laplacian_null_dim, laplacian_of, GraphMrf};
use crate::linalg::{eig_sym, psd_pinv, psd_power, psd_sqrt, RankTolerance, Spectrum, SymMatrix};
use crate::metric::{check_mrf_pair, mrf_covariance};

/// One point on a probability path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPoint {
    pub t: f64,
    pub x_t: DMatrix<f64>,
    pub l_t: SymMatrix,
    /// `diag(l_t) - l_t`; entries may be negative off the valid graph domain.
    pub w_t: SymMatrix,
}

impl PathPoint {
    fn from_adjacency(t: f64, x_t: DMatrix<f64>, w_t: SymMatrix) -> Self {
        PathPoint {
            t,
            x_t,
            l_t: laplacian_of(&w_t),
            w_t,
        }
    }

    /// Builds an MRF at this point with the given `nu` and `beta`.
    pub fn to_mrf(&self, nu: f64, beta: f64) -> Result<GraphMrf> {
        GraphMrf::new(self.x_t.clone(), self.l_t.clone(), nu, beta)
    }
}

#[derive(Serialize)]
struct PathPointJson {
    t: f64,
    w: Vec<Vec<f64>>,
    x: Vec<Vec<f64>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

impl Serialize for PathPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PathPointJson {
            t: self.t,
            w: rows(self.w_t.as_matrix()),
            x: rows(&self.x_t),
        }
        .serialize(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Bw,
    Linear,
    Geometric,
    Harmonic,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Bw => "bw",
            SchemeKind::Linear => "linear",
            SchemeKind::Geometric => "geometric",
            SchemeKind::Harmonic => "harmonic",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = BwError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bw" => Ok(SchemeKind::Bw),
            "linear" => Ok(SchemeKind::Linear),
            "geometric" => Ok(SchemeKind::Geometric),
            "harmonic" => Ok(SchemeKind::Harmonic),
            other => Err(BwError::InvalidConfig(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpScheme {
    pub kind: SchemeKind,
    /// Spectral floor applied to adjacencies before inverses and powers
    /// (geometric and harmonic only).
    pub eps: f64,
}

impl InterpScheme {
    pub fn new(kind: SchemeKind, eps: f64) -> Result<Self> {
        if eps.is_nan() || eps <= 0.0 {
            return Err(BwError::InvalidConfig(format!(
                "eps must be > 0, got {eps}"
            )));
        }
        Ok(InterpScheme { kind, eps })
    }

    pub fn bw() -> Self {
        InterpScheme::of(SchemeKind::Bw)
    }

    pub fn linear() -> Self {
        InterpScheme::of(SchemeKind::Linear)
    }

    pub fn of(kind: SchemeKind) -> Self {
        InterpScheme { kind, eps: 1e-6 }
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(BwError::TimeOutOfRange { t });
    }
    Ok(())
}

/// Precomputed Bures-Wasserstein geodesic between two MRFs.
///
/// Along the geodesic `Σ_t = A_t Σ₀ A_t` with `A_t = (1-t)P + tT` and `P`
/// the projector onto `range(K₀)`. `T` is diagonalized once, so the precision
/// `K_t = A_t† K₀ A_t†` and its time derivative depend on `t` only through
/// scalar functions of the transport eigenvalues.
#[derive(Clone, Debug)]
pub struct BwGeodesic {
    nu: f64,
    tol: RankTolerance,
    precision0: SymMatrix,
    precision0_sqrt: SymMatrix,
    sigma0: SymMatrix,
    cross_sqrt: SymMatrix,
    transport: SymMatrix,
    /// Spectrum of `T + (I - P)`: the null direction is lifted to eigenvalue 1.
    transport_spectrum: Spectrum,
    x0: DMatrix<f64>,
    x1: DMatrix<f64>,
}

impl BwGeodesic {
    pub fn new(g0: &GraphMrf, g1: &GraphMrf) -> Result<Self> {
        let tol = RankTolerance::default();
        check_mrf_pair(g0, g1, &tol)?;
        let n = g0.n();
        let precision0 = g0.precision();
        let precision0_sqrt = psd_sqrt(&precision0, &tol)?;
        let sigma0 = mrf_covariance(g0, &tol)?;
        let sigma1 = mrf_covariance(g1, &tol)?;
        let sigma0_sqrt = psd_sqrt(&sigma0, &tol)?;
        let cross_sqrt = psd_sqrt(&sigma0_sqrt.sandwich(&sigma1), &tol)?;
        let nu = g0.nu;
        let project = |m: SymMatrix| {
            if nu == 0.0 {
                m.project_out_constant()
            } else {
                m
            }
        };
        let transport = project(SymMatrix::from_symmetrized(
            precision0_sqrt.as_matrix() * cross_sqrt.as_matrix() * precision0_sqrt.as_matrix(),
        ));
        let null_projector = SymMatrix::identity(n).sub(&project(SymMatrix::identity(n)));
        let transport_spectrum = eig_sym(&transport.add(&null_projector));
        Ok(BwGeodesic {
            nu,
            tol,
            precision0,
            precision0_sqrt,
            sigma0,
            cross_sqrt,
            transport,
            transport_spectrum,
            x0: g0.mean.clone(),
            x1: g1.mean.clone(),
        })
    }

    fn project(&self, m: SymMatrix) -> SymMatrix {
        if self.nu == 0.0 {
            m.project_out_constant()
        } else {
            m
        }
    }

    /// Transport map `T` pushing `Σ₀` onto `Σ₁`.
    pub fn transport_map(&self) -> &SymMatrix {
        &self.transport
    }

    /// `Σ_t = K₀^{1/2} ((1-t)Σ₀ + tM)² K₀^{1/2}`.
    pub fn covariance_at(&self, t: f64) -> SymMatrix {
        let inner = self.sigma0.scale(1.0 - t).add(&self.cross_sqrt.scale(t));
        let inner_sq = inner.as_matrix() * inner.as_matrix();
        let k = self.precision0_sqrt.as_matrix();
        self.project(SymMatrix::from_symmetrized(k * inner_sq * k))
    }

    /// `K_t = Σ_t† = A_t† K₀ A_t†` (equal to `νI + L_t`).
    pub fn precision_at(&self, t: f64) -> SymMatrix {
        let a_inv = self
            .transport_spectrum
            .map(|tau| 1.0 / ((1.0 - t) + t * tau));
        self.project(a_inv.sandwich(&self.precision0))
    }

    pub fn mean_at(&self, t: f64) -> DMatrix<f64> {
        &self.x0 * (1.0 - t) + &self.x1 * t
    }

    pub fn point(&self, t: f64) -> Result<PathPoint> {
        check_time(t)?;
        let k_t = self.precision_at(t);
        let x_t = self.mean_at(t);
        if self.nu == 0.0 {
            let w_t = adjacency_from_laplacian(&k_t);
            Ok(PathPoint {
                t,
                x_t,
                l_t: k_t,
                w_t,
            })
        } else {
            // Off-diagonals of K_t - νI and K_t agree.
            Ok(PathPoint::from_adjacency(
                t,
                x_t,
                adjacency_from_laplacian(&k_t),
            ))
        }
    }

    /// `K_t` and its exact time derivative `K̇_t = -(V K_t + K_t V)` with
    /// `V = (T - P) A_t†`. At `t = 0` this reduces to `2K₀ - TK₀ - K₀T`.
    pub fn precision_rate(&self, t: f64) -> Result<(SymMatrix, SymMatrix)> {
        check_time(t)?;
        let k_t = self.precision_at(t);
        let v = self
            .transport_spectrum
            .map(|tau| (tau - 1.0) / ((1.0 - t) + t * tau));
        let vk = v.as_matrix() * k_t.as_matrix();
        let rate = SymMatrix::from_symmetrized(-(&vk + vk.transpose()));
        Ok((k_t, self.project(rate)))
    }

    /// Rank tolerance used for every spectral step of this geodesic.
    pub fn tolerance(&self) -> &RankTolerance {
        &self.tol
    }
}

/// `T = L₀^{1/2} (L₀^{†/2} L₁† L₀^{†/2})^{1/2} L₀^{1/2}` for two Laplacians (or
/// regularized precisions `L + νI`) with at most one null direction each.
pub fn transport_map(l0: &SymMatrix, l1: &SymMatrix) -> Result<SymMatrix> {
    let tol = RankTolerance::default();
    if l0.dim() != l1.dim() {
        return Err(BwError::DimensionMismatch {
            what: "Laplacian size",
            left: l0.dim(),
            right: l1.dim(),
        });
    }
    let z0 = laplacian_null_dim(l0, &tol);
    let z1 = laplacian_null_dim(l1, &tol);
    if z0 > 1 || z1 > 1 {
        return Err(BwError::DisconnectedGraph {
            zero_eigs: z0.max(z1),
        });
    }
    let singular = z0 == 1;
    let project = |m: SymMatrix| {
        if singular {
            m.project_out_constant()
        } else {
            m
        }
    };
    let root0 = psd_sqrt(l0, &tol)?;
    let sigma0_sqrt = project(psd_power(l0, -0.5, &tol)?);
    let sigma1 = project(psd_pinv(l1, &tol)?);
    let cross = psd_sqrt(&sigma0_sqrt.sandwich(&sigma1), &tol)?;
    Ok(project(SymMatrix::from_symmetrized(
        root0.as_matrix() * cross.as_matrix() * root0.as_matrix(),
    )))
}

/// Point on the Bures-Wasserstein geodesic at time `t`.
pub fn bw_interpolate(g0: &GraphMrf, g1: &GraphMrf, t: f64) -> Result<PathPoint> {
    check_time(t)?;
    BwGeodesic::new(g0, g1)?.point(t)
}

fn floor_spectrum(m: &SymMatrix, eps: f64) -> SymMatrix {
    eig_sym(m).map(|l| l.max(eps))
}

/// `A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}` after flooring both spectra at `eps`.
pub fn spd_geometric_path(a: &SymMatrix, b: &SymMatrix, t: f64, eps: f64) -> Result<SymMatrix> {
    let tol = RankTolerance::default();
    let a = floor_spectrum(a, eps);
    let b = floor_spectrum(b, eps);
    let a_half = psd_power(&a, 0.5, &tol)?;
    let a_neg_half = psd_power(&a, -0.5, &tol)?;
    let inner = psd_power(&a_neg_half.sandwich(&b), t, &tol)?;
    Ok(a_half.sandwich(&inner))
}

/// `((1-t) A^{-1} + t B^{-1})^{-1}` after flooring both spectra at `eps`.
pub fn spd_harmonic_path(a: &SymMatrix, b: &SymMatrix, t: f64, eps: f64) -> Result<SymMatrix> {
    let tol = RankTolerance::default();
    let a_inv = psd_pinv(&floor_spectrum(a, eps), &tol)?;
    let b_inv = psd_pinv(&floor_spectrum(b, eps), &tol)?;
    psd_pinv(&a_inv.scale(1.0 - t).add(&b_inv.scale(t)), &tol)
}

/// Baseline interpolants on adjacency matrices (features always linear).
/// `SchemeKind::Bw` is forwarded to [`bw_interpolate`].
pub fn baseline_interpolate(
    g0: &GraphMrf,
    g1: &GraphMrf,
    t: f64,
    scheme: &InterpScheme,
) -> Result<PathPoint> {
    check_time(t)?;
    if g0.n() != g1.n() {
        return Err(BwError::DimensionMismatch {
            what: "graph size",
            left: g0.n(),
            right: g1.n(),
        });
    }
    if g0.mean.ncols() != g1.mean.ncols() {
        return Err(BwError::DimensionMismatch {
            what: "feature width",
            left: g0.mean.ncols(),
            right: g1.mean.ncols(),
        });
    }
    let w0 = g0.adjacency();
    let w1 = g1.adjacency();
    let w_t = match scheme.kind {
        SchemeKind::Bw => return bw_interpolate(g0, g1, t),
        SchemeKind::Linear => w0.scale(1.0 - t).add(&w1.scale(t)),
        SchemeKind::Geometric => spd_geometric_path(&w0, &w1, t, scheme.eps)?,
        SchemeKind::Harmonic => spd_harmonic_path(&w0, &w1, t, scheme.eps)?,
    };
    let mut w = w_t.into_inner();
    w.fill_diagonal(0.0);
    let x_t = &g0.mean * (1.0 - t) + &g1.mean * t;
    Ok(PathPoint::from_adjacency(
        t,
        x_t,
        SymMatrix::from_symmetrized(w),
    ))
}

/// Any scheme at time `t`.
pub fn interpolate(
    g0: &GraphMrf,
    g1: &GraphMrf,
    t: f64,
    scheme: &InterpScheme,
) -> Result<PathPoint> {
    baseline_interpolate(g0, g1, t, scheme)
}

/// Points at `t = i/(steps-1)`, `i = 0..steps`.
pub fn path_sweep(
    g0: &GraphMrf,
    g1: &GraphMrf,
    scheme: &InterpScheme,
    steps: usize,
) -> Result<Vec<PathPoint>> {
    path_sweep_with(Exec::default(), g0, g1, scheme, steps)
}

pub fn path_sweep_with(
    exec: Exec,
    g0: &GraphMrf,
    g1: &GraphMrf,
    scheme: &InterpScheme,
    steps: usize,
) -> Result<Vec<PathPoint>> {
    if steps < 2 {
        return Err(BwError::InvalidConfig(format!(
            "path sweep needs steps >= 2, got {steps}"
        )));
    }
    let times: Vec<f64> = (0..steps).map(|i| i as f64 / (steps - 1) as f64).collect();
    let points = if scheme.kind == SchemeKind::Bw {
        let geo = BwGeodesic::new(g0, g1)?;
        exec.map(&times, |&t| geo.point(t))
    } else {
        exec.map(&times, |&t| baseline_interpolate(g0, g1, t, scheme))
    };
    points.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian, Graph};
    use crate::linalg::rel_frobenius;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn p2(weight: f64) -> GraphMrf {
        let g = Graph::from_edges(
            2,
            &[(0, 1, weight)],
            Some(DMatrix::from_element(2, 1, weight)),
            false,
        )
        .unwrap();
        GraphMrf::from_graph(&g, 0.0, 1.0).unwrap()
    }

    fn path4(weights: [f64; 3]) -> GraphMrf {
        let g = Graph::from_edges(
            4,
            &[(0, 1, weights[0]), (1, 2, weights[1]), (2, 3, weights[2])],
            None,
            false,
        )
        .unwrap();
        GraphMrf::from_graph(&g, 0.0, 1.0).unwrap()
    }

    #[test]
    fn transport_self_is_range_projector() {
        let l = path4([1.0, 2.0, 0.5]).laplacian;
        let t = transport_map(&l, &l).unwrap();
        let p = SymMatrix::identity(4).project_out_constant();
        assert!(rel_frobenius(t.as_matrix(), p.as_matrix()) < 1e-10);
    }

    #[test]
    fn transport_p2_pair() {
        let t = transport_map(&p2(1.0).laplacian, &p2(4.0).laplacian).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = DVector::from_vec(vec![h, -h]);
        let ones = DVector::from_vec(vec![h, h]);
        assert_abs_diff_eq!(
            (v.transpose() * t.as_matrix() * &v)[0],
            0.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!((t.as_matrix() * &ones).norm(), 0.0, epsilon = 1e-12);
        // 0.5 · (1/2) · 0.5 = 1/8
        let pushed = t.as_matrix()
            * psd_pinv(&p2(1.0).laplacian, &RankTolerance::default())
                .unwrap()
                .as_matrix()
            * t.as_matrix();
        assert_abs_diff_eq!((v.transpose() * pushed * &v)[0], 0.125, epsilon = 1e-12);
    }

    #[test]
    fn transport_rejects_disconnected() {
        let two = Graph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)], None, true).unwrap();
        let l = laplacian(&two);
        assert!(matches!(
            transport_map(&l, &path4([1.0; 3]).laplacian),
            Err(BwError::DisconnectedGraph { .. })
        ));
    }

    #[test]
    fn bw_examples() {
        let a = p2(1.0);
        let b = p2(4.0);
        let p0 = bw_interpolate(&a, &b, 0.0).unwrap();
        assert!(rel_frobenius(p0.l_t.as_matrix(), a.laplacian.as_matrix()) < 1e-10);
        assert_eq!(p0.x_t, a.mean);
        let mid = bw_interpolate(&a, &b, 0.5).unwrap();
        assert_abs_diff_eq!(mid.w_t.get(0, 1), 16.0 / 9.0, epsilon = 1e-10);
        assert_abs_diff_eq!(mid.x_t[(0, 0)], 2.5, epsilon = 1e-14);
        let same = path4([1.0, 3.0, 0.2]);
        for t in [0.1, 0.4, 0.9] {
            let p = bw_interpolate(&same, &same, t).unwrap();
            assert!(rel_frobenius(p.l_t.as_matrix(), same.laplacian.as_matrix()) < 1e-9);
        }
        assert!(matches!(
            bw_interpolate(&a, &b, 1.5),
            Err(BwError::TimeOutOfRange { .. })
        ));
    }

    #[test]
    fn precision_matches_pinv_of_covariance() {
        let a = path4([1.0, 2.0, 0.5]);
        let b = path4([0.3, 1.0, 4.0]);
        let geo = BwGeodesic::new(&a, &b).unwrap();
        for t in [0.0, 0.2, 0.5, 0.8, 1.0] {
            let via_cov = psd_pinv(&geo.covariance_at(t), &RankTolerance::default()).unwrap();
            assert!(
                rel_frobenius(geo.precision_at(t).as_matrix(), via_cov.as_matrix()) < 1e-9,
                "t = {t}"
            );
        }
    }

    #[test]
    fn regularized_endpoints_are_recovered() {
        let two = Graph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)], None, true).unwrap();
        let path =
            Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], None, true).unwrap();
        let a = GraphMrf::from_graph(&two, 0.05, 1.0).unwrap();
        let b = GraphMrf::from_graph(&path, 0.05, 1.0).unwrap();
        let geo = BwGeodesic::new(&a, &b).unwrap();
        let p0 = geo.point(0.0).unwrap();
        let p1 = geo.point(1.0).unwrap();
        assert!(rel_frobenius(p0.w_t.as_matrix(), two.adjacency().as_matrix()) < 1e-8);
        assert!(rel_frobenius(p1.w_t.as_matrix(), path.adjacency().as_matrix()) < 1e-7);
        let ones = DVector::from_element(4, 1.0);
        assert!((geo.point(0.3).unwrap().l_t.as_matrix() * ones).amax() < 1e-12);
    }

    #[test]
    fn baseline_examples() {
        let n = 4;
        let empty = GraphMrf::from_graph(&Graph::empty(n), 0.0, 1.0).unwrap();
        let full = GraphMrf::from_graph(
            &crate::data::er_sample(n, 1.0, &mut crate::rng::seeded(0)),
            0.0,
            1.0,
        )
        .unwrap();
        let mid = baseline_interpolate(&empty, &full, 0.5, &InterpScheme::linear()).unwrap();
        for u in 0..n {
            for v in 0..n {
                let expect = if u == v { 0.0 } else { 0.5 };
                assert_eq!(mid.w_t.get(u, v), expect);
            }
        }
        let a = path4([1.0, 2.0, 0.5]);
        let b = path4([0.3, 1.0, 1.0]);
        for kind in [
            SchemeKind::Linear,
            SchemeKind::Geometric,
            SchemeKind::Harmonic,
        ] {
            let p = baseline_interpolate(&a, &b, 0.0, &InterpScheme::of(kind)).unwrap();
            // The nonlinear schemes start from the spectrally floored W₀.
            let mut w0 = if kind == SchemeKind::Linear {
                a.adjacency().into_inner()
            } else {
                floor_spectrum(&a.adjacency(), 1e-6).into_inner()
            };
            w0.fill_diagonal(0.0);
            assert!((p.w_t.as_matrix() - w0).amax() <= 1e-10, "{kind}");
            assert_eq!(p.x_t, a.mean);
        }
    }

    #[test]
    fn scalar_harmonic_and_geometric_means() {
        let a = SymMatrix::from_diagonal(&[1.0]);
        let b = SymMatrix::from_diagonal(&[4.0]);
        let h = spd_harmonic_path(&a, &b, 0.5, 1e-6).unwrap();
        assert_abs_diff_eq!(h.get(0, 0), 1.6, epsilon = 1e-12);
        let g = spd_geometric_path(&a, &b, 0.5, 1e-6).unwrap();
        assert_abs_diff_eq!(g.get(0, 0), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn sweep_examples() {
        let a = p2(1.0);
        let b = p2(4.0);
        let pts = path_sweep(&a, &b, &InterpScheme::bw(), 2).unwrap();
        assert_eq!(pts.len(), 2);
        assert_abs_diff_eq!(pts[0].w_t.get(0, 1), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(pts[1].w_t.get(0, 1), 4.0, epsilon = 1e-9);

        let pts = path_sweep(&a, &b, &InterpScheme::linear(), 3).unwrap();
        assert_eq!(
            pts[1],
            baseline_interpolate(&a, &b, 0.5, &InterpScheme::linear()).unwrap()
        );

        let pts = path_sweep(&a, &b, &InterpScheme::bw(), 11).unwrap();
        for (i, p) in pts.iter().enumerate() {
            let t = i as f64 / 10.0;
            let sigma = ((1.0 - t) / 2f64.sqrt() + t / 8f64.sqrt()).powi(2);
            assert_abs_diff_eq!(p.w_t.get(0, 1), 1.0 / (2.0 * sigma), epsilon = 1e-9);
        }
        for w in pts.windows(2) {
            assert!(w[1].w_t.get(0, 1) > w[0].w_t.get(0, 1));
        }
        assert!(path_sweep(&a, &b, &InterpScheme::bw(), 1).is_err());
    }

    #[test]
    fn sequential_and_parallel_sweeps_agree() {
        let a = path4([1.0, 2.0, 0.5]);
        let b = path4([0.3, 1.0, 1.0]);
        let s = path_sweep_with(Exec::Sequential, &a, &b, &InterpScheme::bw(), 9).unwrap();
        let p = path_sweep_with(Exec::Parallel, &a, &b, &InterpScheme::bw(), 9).unwrap();
        assert_eq!(s, p);
    }

    #[test]
    fn path_point_json() {
        let p = bw_interpolate(&p2(1.0), &p2(4.0), 0.0).unwrap();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["t"], 0.0);
        assert_eq!(v["w"].as_array().unwrap().len(), 2);
        assert_eq!(v["x"][0].as_array().unwrap().len(), 1);
    }
}

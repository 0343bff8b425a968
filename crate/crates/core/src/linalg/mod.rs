//! Symmetric-matrix spectral primitives.
//!
//! Every matrix function (square root, pseudo-inverse, real powers) goes
//! through a single eigendecomposition path, [`eig_sym`], and every result is
//! re-symmetrized before it is returned.

mod lsqr;

pub use lsqr::{lsqr_solve, pinv_via_lsqr, pinv_via_lsqr_with, LsqrSolution, PinvEstimate};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{BwError, Result};

/// Absolute tolerance on `|m_ij - m_ji|` accepted by [`SymMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A dense real symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates symmetry and finiteness.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(BwError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(BwError::NonFinite { what: "matrix" });
        }
        let asym = max_asymmetry(&m);
        if asym > SYMMETRY_TOL {
            return Err(BwError::SymmetryViolation {
                max_asymmetry: asym,
            });
        }
        Ok(SymMatrix(symmetrize(m)))
    }

    /// Takes `(m + mᵀ)/2`. Used for results of chained products whose
    /// asymmetry is pure round-off.
    pub fn from_symmetrized(m: DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "square matrix required");
        SymMatrix(symmetrize(m))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(BwError::NotSquare {
                rows: n,
                cols: rows.first().map_or(0, |r| r.len()),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `self · other · self`, symmetrized.
    pub fn sandwich(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix::from_symmetrized(&self.0 * &other.0 * &self.0)
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix(&self.0 * s)
    }

    pub fn add_diagonal(&self, s: f64) -> SymMatrix {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += s;
        }
        SymMatrix(m)
    }

    /// `P m P` with `P = I - 11ᵀ/n`, removing any component along the
    /// constant vector.
    pub fn project_out_constant(&self) -> SymMatrix {
        let n = self.dim();
        if n == 0 {
            return self.clone();
        }
        let mut m = self.0.clone();
        let col_means: Vec<f64> = (0..n).map(|j| m.column(j).sum() / n as f64).collect();
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] -= col_means[j];
            }
        }
        let row_means: Vec<f64> = (0..n).map(|i| m.row(i).sum() / n as f64).collect();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] -= row_means[i];
            }
        }
        SymMatrix::from_symmetrized(m)
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `||a - b||_F / max(||b||_F, tiny)`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (as columns).
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0f64, |acc, l| acc.max(l.abs()))
    }

    /// `V diag(f(λ)) Vᵀ`, symmetrized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let fl = f(lambda);
            for i in 0..n {
                scaled[(i, j)] *= fl;
            }
        }
        SymMatrix::from_symmetrized(scaled * v.transpose())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map(|l| l)
    }

    /// Number of eigenvalues with `|λ| <= threshold`.
    pub fn count_null(&self, tol: &RankTolerance) -> usize {
        let thr = tol.threshold(self);
        self.eigenvalues.iter().filter(|l| l.abs() <= thr).count()
    }
}

/// Decides which eigenvalues are treated as zero: `λ <= max(abs_tol, rel_tol · max|λ|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankTolerance {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for RankTolerance {
    fn default() -> Self {
        RankTolerance {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
        }
    }
}

impl RankTolerance {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Result<Self> {
        if !(rel_tol >= 0.0 && abs_tol >= 0.0) {
            return Err(BwError::InvalidConfig(format!(
                "rank tolerances must be nonnegative (rel {rel_tol}, abs {abs_tol})"
            )));
        }
        Ok(RankTolerance { rel_tol, abs_tol })
    }

    pub fn threshold(&self, spectrum: &Spectrum) -> f64 {
        self.abs_tol
            .max(self.rel_tol * spectrum.max_abs_eigenvalue())
    }
}

pub fn eig_sym(m: &SymMatrix) -> Spectrum {
    let n = m.dim();
    if n == 0 {
        return Spectrum {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(m.0.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// Eigendecomposition of a matrix that must be PSD within tolerance.
pub(crate) fn psd_spectrum(m: &SymMatrix, tol: &RankTolerance) -> Result<(Spectrum, f64)> {
    let spec = eig_sym(m);
    let thr = tol.threshold(&spec);
    if let Some(&min) = spec.eigenvalues.iter().next() {
        if min < -thr {
            return Err(BwError::NotPsd {
                min_eigenvalue: min,
                threshold: thr,
            });
        }
    }
    Ok((spec, thr))
}

/// Eigenvalues at or below the rank threshold are treated as exact zeros:
/// `sqrt` would otherwise lift round-off of order `1e-17` to `1e-9`.
pub fn psd_sqrt(m: &SymMatrix, tol: &RankTolerance) -> Result<SymMatrix> {
    let (spec, thr) = psd_spectrum(m, tol)?;
    Ok(spec.map(|l| if l > thr { l.sqrt() } else { 0.0 }))
}

pub fn psd_pinv(m: &SymMatrix, tol: &RankTolerance) -> Result<SymMatrix> {
    let (spec, thr) = psd_spectrum(m, tol)?;
    Ok(spec.map(|l| if l > thr { 1.0 / l } else { 0.0 }))
}

/// `λ -> λ^p` on eigenvalues above the rank threshold; the rest map to 0.
pub fn psd_power(m: &SymMatrix, p: f64, tol: &RankTolerance) -> Result<SymMatrix> {
    let (spec, thr) = psd_spectrum(m, tol)?;
    Ok(spec.map(|l| if l > thr { l.powf(p) } else { 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn tol() -> RankTolerance {
        RankTolerance::default()
    }

    fn assert_mat_close(a: &SymMatrix, b: &[&[f64]], eps: f64) {
        let n = a.dim();
        assert_eq!(n, b.len());
        for (i, row) in b.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_abs_diff_eq!(a.get(i, j), v, epsilon = eps);
            }
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(
            SymMatrix::new(m),
            Err(BwError::SymmetryViolation { .. })
        ));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(matches!(SymMatrix::new(m), Err(BwError::NonFinite { .. })));
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let s = eig_sym(&SymMatrix::identity(3));
        for l in s.eigenvalues.iter() {
            assert_abs_diff_eq!(*l, 1.0, epsilon = 1e-14);
        }
        let s = eig_sym(&SymMatrix::from_diagonal(&[9.0, 4.0]));
        assert_abs_diff_eq!(s.eigenvalues[0], 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues[1], 9.0, epsilon = 1e-14);
        // eigenvector of 4 is e2
        assert_abs_diff_eq!(s.eigenvectors[(1, 0)].abs(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_two_by_two() {
        let m = SymMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let s = eig_sym(&m);
        assert_abs_diff_eq!(s.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues[1], 3.0, epsilon = 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = s.eigenvectors.column(0);
        let v1 = s.eigenvectors.column(1);
        assert_abs_diff_eq!((v0[0] * h - v0[1] * h).abs(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!((v1[0] * h + v1[1] * h).abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sqrt_examples() {
        let r = psd_sqrt(&SymMatrix::identity(2), &tol()).unwrap();
        assert_mat_close(&r, &[&[1.0, 0.0], &[0.0, 1.0]], 1e-14);
        let r = psd_sqrt(&SymMatrix::from_diagonal(&[4.0, 9.0]), &tol()).unwrap();
        assert_mat_close(&r, &[&[2.0, 0.0], &[0.0, 3.0]], 1e-14);
        let m = SymMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let r = psd_sqrt(&m, &tol()).unwrap();
        let a = (3f64.sqrt() + 1.0) / 2.0;
        let b = (3f64.sqrt() - 1.0) / 2.0;
        assert_mat_close(&r, &[&[a, b], &[b, a]], 1e-12);
    }

    #[test]
    fn sqrt_clamps_tiny_negative_and_rejects_real_negative() {
        let m = SymMatrix::from_diagonal(&[1.0, -1e-13]);
        let r = psd_sqrt(&m, &tol()).unwrap();
        assert_eq!(r.get(1, 1), 0.0);
        let m = SymMatrix::from_diagonal(&[1.0, -0.1]);
        assert!(matches!(psd_sqrt(&m, &tol()), Err(BwError::NotPsd { .. })));
    }

    #[test]
    fn pinv_examples() {
        let r = psd_pinv(&SymMatrix::from_diagonal(&[2.0, 0.0]), &tol()).unwrap();
        assert_mat_close(&r, &[&[0.5, 0.0], &[0.0, 0.0]], 1e-14);
        let p2 = SymMatrix::from_rows(&[&[1.0, -1.0], &[-1.0, 1.0]]).unwrap();
        let r = psd_pinv(&p2, &tol()).unwrap();
        assert_mat_close(&r, &[&[0.25, -0.25], &[-0.25, 0.25]], 1e-14);
        let r = psd_pinv(&SymMatrix::identity(3), &tol()).unwrap();
        assert_mat_close(
            &r,
            &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
            1e-14,
        );
    }

    #[test]
    fn power_examples() {
        let r = psd_power(&SymMatrix::from_diagonal(&[4.0, 9.0]), 0.5, &tol()).unwrap();
        assert_mat_close(&r, &[&[2.0, 0.0], &[0.0, 3.0]], 1e-14);
        let r = psd_power(&SymMatrix::from_diagonal(&[8.0]), 1.0 / 3.0, &tol()).unwrap();
        assert_abs_diff_eq!(r.get(0, 0), 2.0, epsilon = 1e-14);
        let m = SymMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let r = psd_power(&m, 1.0, &tol()).unwrap();
        assert!(rel_frobenius(r.as_matrix(), m.as_matrix()) < 1e-14);
    }

    #[test]
    fn project_out_constant_kills_ones() {
        let m =
            SymMatrix::from_rows(&[&[3.0, 1.0, 0.0], &[1.0, 2.0, 5.0], &[0.0, 5.0, 1.0]]).unwrap();
        let p = m.project_out_constant();
        let ones = DVector::from_element(3, 1.0);
        assert!((p.as_matrix() * ones).norm() < 1e-14);
    }

    /// Random PSD matrix `B Bᵀ` of rank `rank`.
    fn psd_from(entries: &[f64], n: usize, rank: usize) -> SymMatrix {
        let b = DMatrix::from_fn(n, rank, |i, j| entries[(i * rank + j) % entries.len()]);
        SymMatrix::from_symmetrized(&b * b.transpose())
    }

    fn psd_strategy() -> impl Strategy<Value = SymMatrix> {
        (1usize..=32)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    1usize..=n,
                    prop::collection::vec(-1.0f64..1.0, n * n),
                )
            })
            .prop_map(|(n, r, e)| psd_from(&e, n, r))
    }

    /// `Q diag(λ) Qᵀ` with λ in [0.1, 10] on the range and exact zeros off it.
    fn conditioned_psd_strategy() -> impl Strategy<Value = SymMatrix> {
        (1usize..=32)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    prop::collection::vec(-1.0f64..1.0, n * n),
                    prop::collection::vec(prop_oneof![Just(0.0), 0.1f64..10.0], n),
                )
            })
            .prop_map(|(n, e, lambdas)| {
                let q = DMatrix::from_row_slice(n, n, &e).qr().q();
                let d = DMatrix::from_diagonal(&DVector::from_vec(lambdas));
                SymMatrix::from_symmetrized(&q * d * q.transpose())
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn eig_reconstructs(m in psd_strategy()) {
            let s = eig_sym(&m);
            let recon = s.reconstruct();
            let scale = m.frobenius_norm().max(1.0);
            prop_assert!((recon.as_matrix() - m.as_matrix()).norm() / scale <= 1e-8);
            let n = m.dim();
            let vtv = s.eigenvectors.transpose() * &s.eigenvectors;
            prop_assert!((vtv - DMatrix::<f64>::identity(n, n)).norm() <= 1e-8);
            for w in s.eigenvalues.as_slice().windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
        }

        #[test]
        fn sqrt_squares_back(m in psd_strategy()) {
            let r = psd_sqrt(&m, &tol()).unwrap();
            let sq = r.as_matrix() * r.as_matrix();
            let scale = m.frobenius_norm().max(1e-300);
            prop_assert!((sq - m.as_matrix()).norm() / scale <= 1e-7);
        }

        #[test]
        fn pinv_is_moore_penrose(m in psd_strategy()) {
            let p = psd_pinv(&m, &tol()).unwrap();
            let a = m.as_matrix();
            let pp = p.as_matrix();
            prop_assert!(rel_frobenius(&(a * pp * a), a) <= 1e-7);
            prop_assert!(rel_frobenius(&(pp * a * pp), pp) <= 1e-7);
        }

        #[test]
        fn powers_add_on_range(m in conditioned_psd_strategy(), a in -1.5f64..1.5, b in -1.5f64..1.5) {
            let pa = psd_power(&m, a, &tol()).unwrap();
            let pb = psd_power(&m, b, &tol()).unwrap();
            let pab = psd_power(&m, a + b, &tol()).unwrap();
            let prod = pa.as_matrix() * pb.as_matrix();
            prop_assert!(rel_frobenius(&prod, pab.as_matrix()) <= 1e-6);
        }
    }
}

//! Matrix-free LSQR (Paige & Saunders) for symmetric operators, and a
//! column-by-column Laplacian pseudo-inverse built on it.

use nalgebra::{DMatrix, DVector};

use super::SymMatrix;
use crate::exec::Exec;

#[derive(Clone, Debug)]
pub struct LsqrSolution {
    pub x: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Number of operator-vector products performed.
    pub operator_applications: usize,
    /// Final estimate of `||Ax - b||`.
    pub residual_norm: f64,
}

/// Minimizes `||Ax - b||` for a symmetric `A` given only `v -> Av`.
///
/// Stops when `||r|| <= atol·||b||` (compatible systems) or when
/// `||Aᵀr|| <= atol·||A||·||r||` (least-squares optimality). Hitting
/// `max_iter` returns the last iterate with `converged = false`. Starting
/// from zero, iterates stay in the Krylov space of `b`, so a singular but
/// compatible system yields the minimum-norm solution.
pub fn lsqr_solve<F>(mut apply: F, b: &DVector<f64>, max_iter: usize, atol: f64) -> LsqrSolution
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let n = b.len();
    let mut x = DVector::zeros(n);
    let bnorm = b.norm();
    let mut applications = 0usize;
    if bnorm == 0.0 {
        return LsqrSolution {
            x,
            converged: true,
            iterations: 0,
            operator_applications: 0,
            residual_norm: 0.0,
        };
    }

    let mut u = b / bnorm;
    let mut beta = bnorm;
    let mut v = apply(&u);
    applications += 1;
    let mut alpha = v.norm();
    if alpha == 0.0 {
        // b is orthogonal to range(A); x = 0 is already a least-squares solution.
        return LsqrSolution {
            x,
            converged: true,
            iterations: 0,
            operator_applications: applications,
            residual_norm: bnorm,
        };
    }
    v /= alpha;
    let mut w = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut anorm_sq = 0.0f64;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;

        u = apply(&v) - &u * alpha;
        applications += 1;
        beta = u.norm();
        if beta > 0.0 {
            u /= beta;
        }
        anorm_sq += alpha * alpha + beta * beta;

        v = apply(&u) - &v * beta;
        applications += 1;
        alpha = v.norm();
        if alpha > 0.0 {
            v /= alpha;
        }

        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;

        x.axpy(phi / rho, &w, 1.0);
        w = &v - &w * (theta / rho);

        let rnorm = phibar;
        let arnorm = phibar * alpha * c.abs();
        let anorm = anorm_sq.sqrt();
        if rnorm <= atol * bnorm || arnorm <= atol * anorm * rnorm || alpha == 0.0 {
            converged = true;
            break;
        }
    }

    LsqrSolution {
        x,
        converged,
        iterations,
        operator_applications: applications,
        residual_norm: phibar,
    }
}

#[derive(Clone, Debug)]
pub struct PinvEstimate {
    pub matrix: SymMatrix,
    /// True when every column solve converged.
    pub converged: bool,
    pub operator_applications: usize,
}

/// Pseudo-inverse of a symmetric PSD matrix by solving `L c_j = e_j` column
/// by column with LSQR, using only products with `l`.
///
/// When `l` has zero row sums (a Laplacian) the right-hand sides are
/// projected onto `range(l)` by subtracting their mean, and each solution is
/// re-centered.
pub fn pinv_via_lsqr(l: &SymMatrix, max_iter: usize, atol: f64) -> PinvEstimate {
    pinv_via_lsqr_with(Exec::default(), l, max_iter, atol)
}

pub fn pinv_via_lsqr_with(exec: Exec, l: &SymMatrix, max_iter: usize, atol: f64) -> PinvEstimate {
    let n = l.dim();
    let m = l.as_matrix();
    let scale = m
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let laplacian_like = (0..n).all(|i| m.row(i).sum().abs() <= 1e-10 * scale * n as f64);

    let solutions = exec.map_range(n, |j| {
        let mut b = DVector::zeros(n);
        b[j] = 1.0;
        if laplacian_like {
            b.add_scalar_mut(-1.0 / n as f64);
        }
        let mut sol = lsqr_solve(|v| m * v, &b, max_iter, atol);
        if laplacian_like {
            let mean = sol.x.mean();
            sol.x.add_scalar_mut(-mean);
        }
        sol
    });

    let mut out = DMatrix::zeros(n, n);
    let mut converged = true;
    let mut applications = 0;
    for (j, sol) in solutions.iter().enumerate() {
        out.set_column(j, &sol.x);
        converged &= sol.converged;
        applications += sol.operator_applications;
    }
    PinvEstimate {
        matrix: SymMatrix::from_symmetrized(out),
        converged,
        operator_applications: applications,
    }
}

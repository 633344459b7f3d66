//! Regularized solution of the assembled linear system.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::eom::EomSystem;
use crate::error::{Error, Result};

/// Regularization applied when inverting M.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RegScheme {
    /// Smoothly rescale the pseudoinverse eigenvalues:
    /// `1/s -> (1/s) / (1 + (lambda^2/s)^6)` with
    /// `lambda^2 = max(a_c, r_c * max(s))`.
    EigenRescale { a_c: f64, r_c: f64 },
    /// Drop eigenvalues at or below `delta_c` and solve in the retained
    /// eigenspace.
    EigenTruncate { delta_c: f64 },
    /// Solve `(M + lambda I) b_0 = V`, iterate `(M + lambda I) b_i = b_{i-1}`,
    /// and return `sum_i lambda^i b_i` up to `order`.
    DiagonalShift { lambda: f64, order: usize },
}

impl RegScheme {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RegScheme::EigenRescale { a_c, r_c } => a_c > 0.0 && r_c > 0.0,
            RegScheme::EigenTruncate { delta_c } => delta_c > 0.0,
            RegScheme::DiagonalShift { lambda, .. } => lambda > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "regularization parameters must be positive: {self:?}"
            )))
        }
    }
}

/// Solver output with the per-step diagnostics the run log reports.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub beta_dot: DVector<f64>,
    /// all eigenvalues truncated; evolution continues with zero velocity
    pub stalled: bool,
    pub min_eig: f64,
    pub max_eig: f64,
    /// `|| M beta_dot - V ||_2`
    pub residual: f64,
}

/// Solve `M beta_dot = V` under the chosen scheme. M is symmetrized as
/// `(M + M^T)/2` first; sampling noise must not change the solver family.
pub fn regularized_solve(sys: &EomSystem, scheme: &RegScheme) -> Result<SolveOutcome> {
    scheme.validate()?;
    let dim = sys.dim();
    if sys.m.iter().any(|x| !x.is_finite()) || sys.v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite entries in M or V".into()));
    }
    let m = (&sys.m + sys.m.transpose()) * 0.5;
    let v = sys.v.clone();

    let eig = m.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max_eig = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let (beta_dot, stalled) = match *scheme {
        RegScheme::EigenRescale { a_c, r_c } => {
            let lambda_sq = a_c.max(r_c * max_eig);
            let vt = eig.eigenvectors.transpose() * &v;
            let mut coeffs = DVector::<f64>::zeros(dim);
            for i in 0..dim {
                let s = eig.eigenvalues[i];
                // (1/s) / (1 + (lambda^2/s)^6) written stably as s^5/(s^6 + lambda^12)
                let factor = s.powi(5) / (s.powi(6) + lambda_sq.powi(6));
                coeffs[i] = factor * vt[i];
            }
            (&eig.eigenvectors * coeffs, false)
        }
        RegScheme::EigenTruncate { delta_c } => {
            let vt = eig.eigenvectors.transpose() * &v;
            let mut coeffs = DVector::<f64>::zeros(dim);
            let mut kept = 0usize;
            for i in 0..dim {
                let s = eig.eigenvalues[i];
                if s > delta_c {
                    coeffs[i] = vt[i] / s;
                    kept += 1;
                }
            }
            (&eig.eigenvectors * coeffs, kept == 0)
        }
        RegScheme::DiagonalShift { lambda, order } => {
            let shifted = &m + DMatrix::<f64>::identity(dim, dim) * lambda;
            let lu = shifted.lu();
            let mut current = lu
                .solve(&v)
                .ok_or_else(|| Error::Numerical("shifted matrix is singular".into()))?;
            let mut total = current.clone();
            let mut weight = 1.0;
            for _ in 0..order {
                current = lu
                    .solve(&current)
                    .ok_or_else(|| Error::Numerical("shifted matrix is singular".into()))?;
                weight *= lambda;
                total += &current * weight;
            }
            (total, false)
        }
    };

    let residual = (&m * &beta_dot - &v).norm();
    Ok(SolveOutcome {
        beta_dot,
        stalled,
        min_eig,
        max_eig,
        residual,
    })
}

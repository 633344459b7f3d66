//! Scalar metrics: polarizations, purity, fidelity, Bures and L2 distances,
//! and the posterior error bound accumulated from per-step solver records.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::ansatz::{density_matrix, state_trace, LowRankState};
use crate::error::{Error, Result};
use crate::lindblad::LindbladModel;
use crate::oracle::{DenseGenerator, DensityMatrix};
use crate::pauli::{Pauli, PauliString};
use crate::state::{sandwich, Ket};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Site-averaged X and Z polarizations of a low-rank state, normalized by the
/// trace: `<O> = sum_p alpha_p <psi_p|O|psi_p> / sum_p alpha_p`.
pub fn observables(s: &LowRankState) -> Result<(f64, f64)> {
    let trace = state_trace(s);
    if trace <= 0.0 {
        return Err(Error::Numerical("state has non-positive trace".into()));
    }
    let n = s.n();
    let mut sx = 0.0;
    let mut sz = 0.0;
    for p in 0..s.rank() {
        if s.alpha[p] == 0.0 {
            continue;
        }
        let psi = s.component(p)?;
        for j in 0..n {
            sx += s.alpha[p] * sandwich(&psi, &PauliString::single(n, j, Pauli::X), &psi)?.re;
            sz += s.alpha[p] * sandwich(&psi, &PauliString::single(n, j, Pauli::Z), &psi)?.re;
        }
    }
    let scale = trace * n as f64;
    Ok((sx / scale, sz / scale))
}

/// Site-averaged polarizations of a dense matrix, normalized by the trace.
pub fn observables_dense(rho: &DensityMatrix) -> Result<(f64, f64)> {
    let trace = rho.trace();
    if trace.abs() < 1e-300 {
        return Err(Error::Numerical("matrix has zero trace".into()));
    }
    let n = rho.n;
    let mut sx = 0.0;
    let mut sz = 0.0;
    for j in 0..n {
        let x = crate::oracle::pauli_matrix(&PauliString::single(n, j, Pauli::X));
        let z = crate::oracle::pauli_matrix(&PauliString::single(n, j, Pauli::Z));
        sx += (&rho.mat * x).diagonal().iter().map(|d| d.re).sum::<f64>();
        sz += (&rho.mat * z).diagonal().iter().map(|d| d.re).sum::<f64>();
    }
    let scale = trace * n as f64;
    Ok((sx / scale, sz / scale))
}

/// Purity of the trace-normalized low-rank state from the component Gram
/// matrix: `Tr[rho^2] = sum_pq alpha_p alpha_q |<psi_p|psi_q>|^2`.
pub fn purity(s: &LowRankState) -> Result<f64> {
    let trace = state_trace(s);
    if trace <= 0.0 {
        return Err(Error::Numerical("state has non-positive trace".into()));
    }
    let components: Vec<Ket> = (0..s.rank())
        .map(|p| s.component(p))
        .collect::<Result<_>>()?;
    let mut acc = 0.0;
    for p in 0..s.rank() {
        for q in 0..s.rank() {
            let overlap = crate::state::inner(&components[p], &components[q]);
            acc += s.alpha[p] * s.alpha[q] * overlap.norm_sqr();
        }
    }
    Ok(acc / (trace * trace))
}

/// Purity of a trace-normalized dense matrix.
pub fn purity_dense(rho: &DensityMatrix) -> Result<f64> {
    let normalized = rho.normalized()?;
    Ok((&normalized.mat * &normalized.mat)
        .diagonal()
        .iter()
        .map(|d| d.re)
        .sum())
}

/// Hermitian square root by eigendecomposition. Eigenvalues below
/// `-negativity_tol` are a validity error; small negatives clamp to zero.
fn sqrtm(rho: &DMatrix<Complex64>, negativity_tol: f64) -> Result<DMatrix<Complex64>> {
    let eig = rho.clone().symmetric_eigen();
    let scale = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, &e| m.max(e.abs()))
        .max(1.0);
    let mut roots = DVector::<Complex64>::zeros(eig.eigenvalues.len());
    for i in 0..eig.eigenvalues.len() {
        let e = eig.eigenvalues[i];
        if e < -negativity_tol * scale {
            return Err(Error::Numerical(format!(
                "matrix has negative eigenvalue {e}"
            )));
        }
        roots[i] = c(e.max(0.0).sqrt(), 0.0);
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.adjoint())
}

/// Uhlmann fidelity of two trace-normalized states.
pub fn fidelity(rho: &DensityMatrix, rho0: &DensityMatrix) -> Result<f64> {
    if rho.n != rho0.n {
        return Err(Error::DimensionMismatch {
            left: rho.n,
            right: rho0.n,
        });
    }
    let a = rho.normalized()?;
    let b = rho0.normalized()?;
    let sqrt_a = sqrtm(&a.mat, 1e-8)?;
    let inner = &sqrt_a * &b.mat * &sqrt_a;
    let eig = inner.symmetric_eigen();
    // eigenvalues that are exact zeros of the rank-deficient product come
    // back as noise at ~1e-16 scale; square roots would amplify that to 1e-8
    let scale = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, &e| m.max(e.abs()));
    let cut = 1e-13 * scale;
    let root_sum: f64 = eig
        .eigenvalues
        .iter()
        .filter(|&&e| e > cut)
        .map(|&e| e.sqrt())
        .sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0 + 1e-9).min(1.0))
}

/// Frobenius norm of the difference, `sqrt(Tr[(a-b)^2])`.
pub fn l2_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    (&a.mat - &b.mat).norm()
}

/// Uhlmann fidelity of a trace-normalized low-rank state against a dense
/// trace-1 reference, reduced to the rank-sized eigenproblem.
///
/// With `X` the weight-scaled component matrix, `rho = X X^dag` shares its
/// nonzero spectrum with `X^dag X`, and `sqrt(rho) sigma sqrt(rho)` reduces to
/// an R x R problem in the orthonormalized component frame. Exact (up to
/// round-off), and avoids any 2^n-dimensional eigendecomposition.
pub fn fidelity_lowrank(s: &LowRankState, sigma: &DensityMatrix) -> Result<f64> {
    if s.n() != sigma.n {
        return Err(Error::DimensionMismatch {
            left: s.n(),
            right: sigma.n,
        });
    }
    let trace = state_trace(s);
    if trace <= 0.0 {
        return Err(Error::Numerical("state has non-positive trace".into()));
    }
    let sigma = sigma.normalized()?;
    let r = s.rank();
    let dim = 1usize << s.n();

    // X columns: sqrt(alpha_p / trace) * psi_p
    let mut x = DMatrix::<Complex64>::zeros(dim, r);
    for p in 0..r {
        let psi = s.component(p)?;
        let w = (s.alpha[p] / trace).max(0.0).sqrt();
        for i in 0..dim {
            x[(i, p)] = psi.amps()[i] * c(w, 0.0);
        }
    }

    // spectrum of rho from the R x R Gram matrix
    let gram = x.adjoint() * &x;
    let eig = gram.symmetric_eigen();
    let lam_max = eig.eigenvalues.iter().fold(0.0f64, |m, &e| m.max(e));
    let keep: Vec<usize> = (0..r)
        .filter(|&i| eig.eigenvalues[i] > 1e-13 * lam_max.max(1e-300))
        .collect();
    if keep.is_empty() {
        return Ok(0.0);
    }
    // orthonormal eigenvectors of rho: Phi = X U Lambda^{-1/2}
    let mut phi = DMatrix::<Complex64>::zeros(dim, keep.len());
    for (col, &i) in keep.iter().enumerate() {
        let u = eig.eigenvectors.column(i);
        let scale = c(1.0 / eig.eigenvalues[i].sqrt(), 0.0);
        for row in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..r {
                acc += x[(row, p)] * u[p];
            }
            phi[(row, col)] = acc * scale;
        }
    }
    // k x k core: sqrt(Lambda) Phi^dag sigma Phi sqrt(Lambda)
    let proj = phi.adjoint() * &sigma.mat * &phi;
    let mut core = proj;
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            core[(a, b)] *= c((eig.eigenvalues[i] * eig.eigenvalues[j]).sqrt(), 0.0);
        }
    }
    let eig_core = core.symmetric_eigen();
    let scale = eig_core
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, &e| m.max(e.abs()));
    let cut = 1e-13 * scale;
    let root_sum: f64 = eig_core
        .eigenvalues
        .iter()
        .filter(|&&e| e > cut)
        .map(|&e| e.sqrt())
        .sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0 + 1e-9).min(1.0))
}

/// Bures distance from a fidelity value: `sqrt(2 (1 - sqrt(F)))`.
pub fn bures_distance(fidelity: f64) -> f64 {
    (2.0 * (1.0 - fidelity.clamp(0.0, 1.0).sqrt())).max(0.0).sqrt()
}

/// Integrand convention for the integrated Bures error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuresMode {
    /// `sqrt(2 (1 - sqrt(F)))`, the Bures metric.
    Standard,
    /// `sqrt(2 Tr[sqrt(rho) rho0 sqrt(rho)])`, kept for comparison with the
    /// alternate printed convention.
    Verbatim,
}

/// Time-averaged Bures error: trapezoid rule over the trajectory divided by
/// the covered time. Identical trajectories give 0 in standard mode.
pub fn bures_integrated(
    times: &[f64],
    pairs: &[(DensityMatrix, DensityMatrix)],
    mode: BuresMode,
) -> Result<f64> {
    if times.len() != pairs.len() || times.is_empty() {
        return Err(Error::Config("time grid and trajectory must align".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("time grid must be strictly increasing".into()));
    }
    let integrand: Vec<f64> = pairs
        .iter()
        .map(|(rho, rho0)| -> Result<f64> {
            match mode {
                BuresMode::Standard => Ok(bures_distance(fidelity(rho, rho0)?)),
                BuresMode::Verbatim => {
                    let a = rho.normalized()?;
                    let b = rho0.normalized()?;
                    let sqrt_a = sqrtm(&a.mat, 1e-8)?;
                    let tr: f64 = (&sqrt_a * &b.mat * &sqrt_a)
                        .diagonal()
                        .iter()
                        .map(|d| d.re)
                        .sum();
                    Ok((2.0 * tr.max(0.0)).sqrt())
                }
            }
        })
        .collect::<Result<_>>()?;
    if times.len() == 1 {
        return Ok(integrand[0]);
    }
    let span = times[times.len() - 1] - times[0];
    let mut acc = 0.0;
    for i in 0..times.len() - 1 {
        acc += 0.5 * (integrand[i] + integrand[i + 1]) * (times[i + 1] - times[i]);
    }
    Ok(acc / span)
}

/// Trapezoid-averaged Bures error straight from recorded fidelities.
pub fn bures_integrated_from_fidelities(times: &[f64], fidelities: &[f64]) -> Result<f64> {
    if times.len() != fidelities.len() || times.len() < 2 {
        return Err(Error::Config("need at least two aligned samples".into()));
    }
    let span = times[times.len() - 1] - times[0];
    let mut acc = 0.0;
    for i in 0..times.len() - 1 {
        let a = bures_distance(fidelities[i]);
        let b = bures_distance(fidelities[i + 1]);
        acc += 0.5 * (a + b) * (times[i + 1] - times[i]);
    }
    Ok(acc / span)
}

/// One solver step as recorded by the evolution loop.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub m: DMatrix<f64>,
    pub v: DVector<f64>,
    /// packed parameters entering the step
    pub beta: Vec<f64>,
    /// packed parameters after the step (clamping included)
    pub beta_next: Vec<f64>,
    pub stalled: bool,
}

/// Accumulation convention for the posterior error bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PosteriorMode {
    /// Riemann sum of the continuous bound: `sum_i sqrt(C_i) * dt_i`.
    SqrtCostTimesDt,
    /// The alternate printed discretization: `sum_i sqrt(C_i * dt_i)`.
    VerbatimSqrtOfProduct,
}

/// Per-step cost `C_i = fd^T M fd - 2 V^T fd + Tr[L[rho]^2]` with
/// finite-difference velocities `fd = (beta_next - beta) / dt`, before the
/// zero floor. Being a squared norm it can only go negative through
/// round-off or sampling noise.
pub fn posterior_step_cost_raw(
    template: &LowRankState,
    model: &LindbladModel,
    record: &StepRecord,
) -> Result<f64> {
    posterior_step_cost_raw_with(template, &DenseGenerator::new(model)?, record)
}

/// As [`posterior_step_cost_raw`], reusing a prebuilt generator.
pub fn posterior_step_cost_raw_with(
    template: &LowRankState,
    gen: &DenseGenerator,
    record: &StepRecord,
) -> Result<f64> {
    let fd = DVector::<f64>::from_iterator(
        record.beta.len(),
        record
            .beta_next
            .iter()
            .zip(record.beta.iter())
            .map(|(n, b)| (n - b) / record.dt),
    );
    let quadratic = (fd.transpose() * &record.m * &fd)[(0, 0)];
    let linear = 2.0 * record.v.dot(&fd);
    let state = template.unpack_parameters(&record.beta)?;
    let rho = density_matrix(&state)?;
    let lrho = gen.rhs(&rho.mat);
    let tr_l2 = lrho.norm().powi(2);
    Ok(quadratic - linear + tr_l2)
}

/// [`posterior_step_cost_raw`] floored at zero, as accumulated in the bound.
pub fn posterior_step_cost(
    template: &LowRankState,
    model: &LindbladModel,
    record: &StepRecord,
) -> Result<f64> {
    Ok(posterior_step_cost_raw(template, model, record)?.max(0.0))
}

/// Partial sums of the posterior error bound, one entry per step boundary
/// (the bound after steps `0..=i`).
pub fn posterior_error_bound(
    template: &LowRankState,
    model: &LindbladModel,
    records: &[StepRecord],
    mode: PosteriorMode,
) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::Config("no step records supplied".into()));
    }
    let gen = DenseGenerator::new(model)?;
    let mut partials = Vec::with_capacity(records.len());
    let mut acc = 0.0;
    for record in records {
        let cost = posterior_step_cost_raw_with(template, &gen, record)?.max(0.0);
        acc += match mode {
            PosteriorMode::SqrtCostTimesDt => cost.sqrt() * record.dt,
            PosteriorMode::VerbatimSqrtOfProduct => (cost * record.dt).sqrt(),
        };
        partials.push(acc);
    }
    Ok(partials)
}

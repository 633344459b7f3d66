//! Shared brute-force oracles for integration tests: finite differences of
//! the dense state against the assembled linear system, and random state
//! builders. Everything here goes through the dense matrix route only, so it
//! stays independent of the assembly path it checks.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::prelude::*;

use lrqte::ansatz::{density_matrix, hamming_basis, initial_state, AnsatzKind, LowRankState, Thetas};
use lrqte::circuit::CircuitSpec;
use lrqte::lattice::Lattice;
use lrqte::lindblad::LindbladModel;
use lrqte::oracle::DenseGenerator;
use lrqte::state::BitString;

/// Random parameter point on the chain-TFIM circuit manifold.
pub fn random_state(
    rng: &mut StdRng,
    kind: AnsatzKind,
    lattice: &Lattice,
    rank: usize,
    layers: usize,
) -> LowRankState {
    let n = lattice.n();
    let circuit = Arc::new(CircuitSpec::layered_tfim(lattice, layers).unwrap());
    let basis = hamming_basis(&BitString::ones(n), rank, &(0..n).collect::<Vec<_>>()).unwrap();
    let mut s = initial_state(kind, circuit, basis, 1e-2).unwrap();
    for a in s.alpha.iter_mut() {
        *a = rng.gen_range(0.05..1.0);
    }
    match &mut s.theta {
        Thetas::Shared(t) => t
            .iter_mut()
            .for_each(|v| *v = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)),
        Thetas::PerState(ts) => ts.iter_mut().for_each(|t| {
            t.iter_mut()
                .for_each(|v| *v = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
        }),
    }
    s
}

/// Dense derivative of the represented matrix along packed parameter `k` by
/// central finite differences.
pub fn fd_density_derivative(state: &LowRankState, k: usize, eps: f64) -> DMatrix<Complex64> {
    let mut up = state.pack_parameters();
    let mut down = up.clone();
    up[k] += eps;
    down[k] -= eps;
    let rho_up = density_matrix(&state.unpack_parameters(&up).unwrap()).unwrap();
    let rho_down = density_matrix(&state.unpack_parameters(&down).unwrap()).unwrap();
    (rho_up.mat - rho_down.mat) / Complex64::new(2.0 * eps, 0.0)
}

fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a * b).diagonal().iter().map(|d| d.re).sum()
}

/// M by brute force: `M_kj = Tr[d_k rho d_j rho]` from finite differences.
pub fn fd_m_matrix(state: &LowRankState, eps: f64) -> DMatrix<f64> {
    let dim = state.total_params();
    let derivs: Vec<DMatrix<Complex64>> = (0..dim)
        .map(|k| fd_density_derivative(state, k, eps))
        .collect();
    DMatrix::from_fn(dim, dim, |k, j| trace_product(&derivs[k], &derivs[j]))
}

/// V by brute force: `V_k = Tr[d_k rho L[rho]]` with the dense generator.
pub fn fd_v_vector(state: &LowRankState, model: &LindbladModel, eps: f64) -> DVector<f64> {
    let dim = state.total_params();
    let gen = DenseGenerator::new(model).unwrap();
    let rho = density_matrix(state).unwrap();
    let lrho = gen.rhs(&rho.mat);
    DVector::from_fn(dim, |k, _| {
        trace_product(&fd_density_derivative(state, k, eps), &lrho)
    })
}

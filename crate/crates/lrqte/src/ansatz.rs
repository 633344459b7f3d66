//! Low-rank variational state: basis selection, initialization, and dense
//! reconstruction.
//!
//! The mixture is `rho(beta) = sum_i alpha_i |psi_i><psi_i|` with
//! `|psi_i> = U(theta) |x_i>` (one shared rotation) or `U(theta^(i)) |x_i>`
//! (one rotation per component).

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{apply_circuit, derivative_states, CircuitSpec};
use crate::error::{Error, Result};
use crate::oracle::DensityMatrix;
use crate::state::{basis_ket, BitString, Ket};

/// Which of the two mixture parameterizations is in use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnsatzKind {
    /// Shared rotation; mixture components stay mutually orthogonal.
    I,
    /// Per-component rotations; components need not be orthogonal.
    II,
}

/// Angle parameters: one vector shared by all components, or one per component.
#[derive(Clone, Debug)]
pub enum Thetas {
    Shared(Vec<f64>),
    PerState(Vec<Vec<f64>>),
}

/// Weighted mixture of circuit-prepared basis states.
#[derive(Clone, Debug)]
pub struct LowRankState {
    pub basis: Vec<BitString>,
    pub alpha: Vec<f64>,
    pub theta: Thetas,
    pub circuit: Arc<CircuitSpec>,
}

impl LowRankState {
    pub fn new(
        basis: Vec<BitString>,
        alpha: Vec<f64>,
        theta: Thetas,
        circuit: Arc<CircuitSpec>,
    ) -> Result<Self> {
        let r = basis.len();
        if r == 0 || alpha.len() != r {
            return Err(Error::Config("basis and alpha must be non-empty and equal length".into()));
        }
        if r > 1 << circuit.n() {
            return Err(Error::Config(format!(
                "rank {r} exceeds the basis size 2^{}",
                circuit.n()
            )));
        }
        let mut sorted: Vec<&BitString> = basis.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("basis bitstrings must be pairwise distinct".into()));
        }
        for x in &basis {
            if x.n() != circuit.n() {
                return Err(Error::DimensionMismatch {
                    left: x.n(),
                    right: circuit.n(),
                });
            }
        }
        if alpha.iter().any(|&a| a < 0.0) || alpha.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config("alpha must be nonnegative with positive sum".into()));
        }
        match &theta {
            Thetas::Shared(t) => {
                if t.len() != circuit.n_params() {
                    return Err(Error::Config("theta length does not match the circuit".into()));
                }
            }
            Thetas::PerState(ts) => {
                if ts.len() != r || ts.iter().any(|t| t.len() != circuit.n_params()) {
                    return Err(Error::Config(
                        "per-state theta must hold rank vectors of circuit length".into(),
                    ));
                }
            }
        }
        Ok(Self {
            basis,
            alpha,
            theta,
            circuit,
        })
    }

    pub fn kind(&self) -> AnsatzKind {
        match self.theta {
            Thetas::Shared(_) => AnsatzKind::I,
            Thetas::PerState(_) => AnsatzKind::II,
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn n(&self) -> usize {
        self.circuit.n()
    }

    /// Angle parameters used by component `p`.
    pub fn theta_of(&self, p: usize) -> &[f64] {
        match &self.theta {
            Thetas::Shared(t) => t,
            Thetas::PerState(ts) => &ts[p],
        }
    }

    /// Number of angle parameters per component.
    pub fn params_per_state(&self) -> usize {
        self.circuit.n_params()
    }

    /// Total variational dimension: rank + angle count.
    pub fn total_params(&self) -> usize {
        match &self.theta {
            Thetas::Shared(t) => self.rank() + t.len(),
            Thetas::PerState(ts) => self.rank() + ts.len() * self.circuit.n_params(),
        }
    }

    /// The statevector of component `p`.
    pub fn component(&self, p: usize) -> Result<Ket> {
        apply_circuit(&self.circuit, self.theta_of(p), &basis_ket(&self.basis[p]))
    }

    /// Component statevector together with all of its parameter derivatives.
    pub fn component_with_derivatives(&self, p: usize) -> Result<(Ket, Vec<Ket>)> {
        derivative_states(&self.circuit, self.theta_of(p), &basis_ket(&self.basis[p]))
    }

    /// Flatten (alpha, theta) into the solver ordering: alpha block first,
    /// then theta (per-state blocks contiguous for per-component rotations).
    pub fn pack_parameters(&self) -> Vec<f64> {
        let mut out = self.alpha.clone();
        match &self.theta {
            Thetas::Shared(t) => out.extend_from_slice(t),
            Thetas::PerState(ts) => {
                for t in ts {
                    out.extend_from_slice(t);
                }
            }
        }
        out
    }

    /// Inverse of [`Self::pack_parameters`].
    pub fn unpack_parameters(&self, packed: &[f64]) -> Result<Self> {
        if packed.len() != self.total_params() {
            return Err(Error::Config("packed parameter length mismatch".into()));
        }
        let r = self.rank();
        let alpha = packed[..r].to_vec();
        let theta = match &self.theta {
            Thetas::Shared(_) => Thetas::Shared(packed[r..].to_vec()),
            Thetas::PerState(ts) => {
                let m = self.circuit.n_params();
                Thetas::PerState(
                    (0..ts.len())
                        .map(|p| packed[r + p * m..r + (p + 1) * m].to_vec())
                        .collect(),
                )
            }
        };
        let mut out = self.clone();
        out.alpha = alpha;
        out.theta = theta;
        Ok(out)
    }
}

/// Sum of the mixture weights (the trace of the represented matrix).
pub fn state_trace(s: &LowRankState) -> f64 {
    s.alpha.iter().sum()
}

/// Dense matrix of the represented state (small qubit counts only).
pub fn density_matrix(s: &LowRankState) -> Result<DensityMatrix> {
    let dim = 1usize << s.n();
    let mut mat = nalgebra::DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for p in 0..s.rank() {
        if s.alpha[p] == 0.0 {
            continue;
        }
        let psi = s.component(p)?;
        let v = nalgebra::DVector::from_column_slice(psi.amps());
        mat += (&v * v.adjoint()) * Complex64::new(s.alpha[p], 0.0);
    }
    DensityMatrix::new(s.n(), mat)
}

/// Basis states ordered by Hamming distance from `x0`: the seed itself, then
/// single flips at `flip_sites` (ascending site), then pairs (lexicographic),
/// extending to higher distances until `r` states are collected.
pub fn hamming_basis(x0: &BitString, r: usize, flip_sites: &[usize]) -> Result<Vec<BitString>> {
    let n = x0.n();
    if r > 1 << n {
        return Err(Error::Config(format!("rank {r} exceeds 2^{n}")));
    }
    for &s in flip_sites {
        if s >= n {
            return Err(Error::Config(format!("flip site {s} out of range for {n} sites")));
        }
    }
    let reachable = 1usize << flip_sites.len().min(63);
    if r > reachable {
        return Err(Error::Config(format!(
            "rank {r} exceeds the {reachable} states reachable by flipping {} sites",
            flip_sites.len()
        )));
    }
    let mut out = vec![x0.clone()];
    for distance in 1..=flip_sites.len() {
        if out.len() >= r {
            break;
        }
        for combo in combinations(flip_sites, distance) {
            if out.len() >= r {
                break;
            }
            let mut x = x0.clone();
            for site in combo {
                x = x.flipped(site);
            }
            out.push(x);
        }
    }
    out.truncate(r);
    Ok(out)
}

/// k-subsets of `items` in lexicographic order.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k == 0 || k > items.len() {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        // advance the rightmost index that can still move
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if idx[pos] != items.len() - k + pos {
                idx[pos] += 1;
                for later in pos + 1..k {
                    idx[later] = idx[later - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return out;
            }
        }
    }
}

/// Build the initial mixture: identity circuit (all angles zero), weight
/// `1 - (R-1) eps` on the seed and `eps` on every other basis state.
pub fn initial_state(
    kind: AnsatzKind,
    circuit: Arc<CircuitSpec>,
    basis: Vec<BitString>,
    epsilon: f64,
) -> Result<LowRankState> {
    let r = basis.len();
    if r == 0 {
        return Err(Error::Config("initial basis is empty".into()));
    }
    if epsilon < 0.0 || (r as f64 - 1.0) * epsilon >= 1.0 {
        return Err(Error::Config(format!(
            "ansatz.epsilon = {epsilon} must satisfy 0 <= (R-1)*eps < 1"
        )));
    }
    let mut alpha = vec![epsilon; r];
    alpha[0] = 1.0 - (r as f64 - 1.0) * epsilon;
    let theta = match kind {
        AnsatzKind::I => Thetas::Shared(vec![0.0; circuit.n_params()]),
        AnsatzKind::II => Thetas::PerState(vec![vec![0.0; circuit.n_params()]; r]),
    };
    LowRankState::new(basis, alpha, theta, circuit)
}

//! Lindblad models and the expansion of their Liouvillian into
//! left/right Pauli-string sandwich terms.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::pauli::{Pauli, PauliString, PauliSum, COEFF_CUTOFF};

/// One dissipation channel: rate and jump operator.
#[derive(Clone, Debug)]
pub struct Dissipator {
    pub rate: f64,
    pub jump: PauliSum,
}

/// Hamiltonian plus dissipation channels on `n` qubits.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    n: usize,
    hamiltonian: PauliSum,
    dissipators: Vec<Dissipator>,
}

impl LindbladModel {
    pub fn new(n: usize, hamiltonian: PauliSum, dissipators: Vec<Dissipator>) -> Result<Self> {
        if hamiltonian.n() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: hamiltonian.n(),
            });
        }
        if !hamiltonian.is_hermitian(1e-12) {
            return Err(Error::Config("hamiltonian is not Hermitian".into()));
        }
        for d in &dissipators {
            if d.jump.n() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: d.jump.n(),
                });
            }
            if d.rate < 0.0 {
                return Err(Error::Config(format!("dissipation rate {} is negative", d.rate)));
            }
        }
        Ok(Self {
            n,
            hamiltonian,
            dissipators,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hamiltonian(&self) -> &PauliSum {
        &self.hamiltonian
    }

    pub fn dissipators(&self) -> &[Dissipator] {
        &self.dissipators
    }
}

/// Dissipative transverse-field Ising model: `J_z * sum_<j,k> Z_j Z_k + h * sum_j X_j`
/// with a lowering-operator channel of rate `gamma` on every site.
pub fn build_tfim(lattice: &Lattice, j_z: f64, h: f64, gamma: f64) -> Result<LindbladModel> {
    let n = lattice.n();
    let mut terms = Vec::new();
    for &(j, k) in lattice.edges() {
        terms.push((Complex64::new(j_z, 0.0), PauliString::zz(n, j, k)));
    }
    for j in 0..n {
        terms.push((Complex64::new(h, 0.0), PauliString::single(n, j, Pauli::X)));
    }
    let hamiltonian = PauliSum::from_terms(n, terms)?;
    let dissipators = (0..n)
        .map(|j| Dissipator {
            rate: gamma,
            jump: PauliSum::sigma_minus(n, j),
        })
        .collect();
    LindbladModel::new(n, hamiltonian, dissipators)
}

/// One term of the Liouvillian expansion `L[rho] = sum_r c_r * left_r rho right_r`.
///
/// `left` and `right` are unit-phase (Hermitian) strings; all phases live in `coeff`.
#[derive(Clone, Debug)]
pub struct SuperopTerm {
    pub coeff: Complex64,
    pub left: PauliString,
    pub right: PauliString,
}

/// Expand the right-hand side of the master equation into sandwich terms.
///
/// Terms with coinciding (left, right) pairs are merged and zero coefficients
/// dropped, so applying the returned list to any `rho` reproduces
/// `-i[H, rho] + sum_k gamma_k (c_k rho c_k^dag - {c_k^dag c_k, rho}/2)`.
pub fn liouvillian_expand(model: &LindbladModel) -> Result<Vec<SuperopTerm>> {
    let n = model.n();
    let identity = PauliString::identity(n);
    let mut raw: Vec<(Complex64, PauliString, PauliString)> = Vec::new();

    let i = Complex64::new(0.0, 1.0);
    for (c, s) in model.hamiltonian().terms() {
        raw.push((-i * c, s.clone(), identity.clone()));
        raw.push((i * c, identity.clone(), s.clone()));
    }

    for d in model.dissipators() {
        if d.rate == 0.0 || d.jump.is_zero() {
            continue;
        }
        let gamma = Complex64::new(d.rate, 0.0);
        // c rho c^dag
        for (a, sa) in d.jump.terms() {
            for (b, sb) in d.jump.terms() {
                raw.push((gamma * a * b.conj(), sa.clone(), sb.clone()));
            }
        }
        // -1/2 {c^dag c, rho}
        let k_op = d.jump.dagger().mul(&d.jump)?;
        for (c, s) in k_op.terms() {
            let half = gamma * c * Complex64::new(-0.5, 0.0);
            raw.push((half, s.clone(), identity.clone()));
            raw.push((half, identity.clone(), s.clone()));
        }
    }

    // Fold phases into the coefficients, then merge identical (left, right) pairs.
    type Keyed = ((Vec<u8>, Vec<u8>), Complex64, PauliString, PauliString);
    let mut keyed: Vec<Keyed> = raw
        .into_iter()
        .map(|(c, l, r)| {
            let (lu, lp) = l.split_phase();
            let (ru, rp) = r.split_phase();
            ((lu.letter_key(), ru.letter_key()), c * lp * rp, lu, ru)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    let mut merged: Vec<SuperopTerm> = Vec::new();
    for (key, coeff, left, right) in keyed {
        match merged.last_mut() {
            Some(t) if (t.left.letter_key(), t.right.letter_key()) == key => t.coeff += coeff,
            _ => merged.push(SuperopTerm { coeff, left, right }),
        }
    }
    merged.retain(|t| t.coeff.norm() >= COEFF_CUTOFF);
    Ok(merged)
}

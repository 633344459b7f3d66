//! Dense brute-force machinery: matrix forms of Pauli operators, the
//! master-equation right-hand side, and an RK4 reference integrator.
//!
//! Everything here works on explicit 2^n x 2^n matrices and serves as the
//! ground truth the variational evolution is measured against.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lindblad::LindbladModel;
use crate::pauli::{PauliString, PauliSum};
use crate::state::Ket;

/// Largest qubit count the dense machinery will accept.
pub const MAX_DENSE_QUBITS: usize = 12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check_dense(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::Capability(format!(
            "dense representation limited to {MAX_DENSE_QUBITS} qubits, got {n}"
        )));
    }
    Ok(())
}

/// Dense matrix of a Pauli string (built entrywise, not via Kronecker
/// recursion, so it stays cheap for sparse use).
pub fn pauli_matrix(p: &PauliString) -> DMatrix<Complex64> {
    let dim = 1usize << p.n();
    let flip = p.flip_mask();
    let sign = p.sign_mask();
    let base = p.base_factor();
    let mut m = DMatrix::from_element(dim, dim, c(0.0, 0.0));
    for col in 0..dim {
        let mut coeff = base;
        if (col & sign).count_ones() % 2 == 1 {
            coeff = -coeff;
        }
        m[(col ^ flip, col)] = coeff;
    }
    m
}

/// Dense matrix of a Pauli sum.
pub fn pauli_sum_matrix(sum: &PauliSum) -> DMatrix<Complex64> {
    let dim = 1usize << sum.n();
    let mut m = DMatrix::from_element(dim, dim, c(0.0, 0.0));
    for (coeff, s) in sum.terms() {
        m += pauli_matrix(s) * *coeff;
    }
    m
}

/// Dense Hermitian matrix with explicit qubit count.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub n: usize,
    pub mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(n: usize, mat: DMatrix<Complex64>) -> Result<Self> {
        check_dense(n)?;
        let dim = 1usize << n;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch {
                left: mat.nrows(),
                right: dim,
            });
        }
        Ok(Self { n, mat })
    }

    /// Projector onto a pure state.
    pub fn from_pure(ket: &Ket) -> Result<Self> {
        check_dense(ket.n())?;
        let v = DVector::from_column_slice(ket.amps());
        let mat = &v * v.adjoint();
        Self::new(ket.n(), mat)
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|d| d.re).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).norm()
    }

    /// Eigenvalues, ascending (the matrix is assumed Hermitian).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .mat
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Copy normalized to unit trace.
    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr.abs() < 1e-300 {
            return Err(Error::Numerical("cannot normalize a traceless matrix".into()));
        }
        Ok(Self {
            n: self.n,
            mat: &self.mat * c(1.0 / tr, 0.0),
        })
    }
}

/// Left multiplication by a Pauli string: `out += factor * P * m`.
///
/// P permutes rows with per-row phases, so this costs one pass over `m`.
pub fn add_string_times_matrix(
    factor: Complex64,
    p: &PauliString,
    m: &DMatrix<Complex64>,
    out: &mut DMatrix<Complex64>,
) {
    let flip = p.flip_mask();
    let sign = p.sign_mask();
    let base = factor * p.base_factor();
    let dim = m.nrows();
    for col in 0..dim {
        for row in 0..dim {
            let mut coeff = base;
            if (row & sign).count_ones() % 2 == 1 {
                coeff = -coeff;
            }
            out[(row ^ flip, col)] += coeff * m[(row, col)];
        }
    }
}

/// Right multiplication by a Pauli string: `out += factor * m * P`.
pub fn add_matrix_times_string(
    factor: Complex64,
    m: &DMatrix<Complex64>,
    p: &PauliString,
    out: &mut DMatrix<Complex64>,
) {
    let flip = p.flip_mask();
    let sign = p.sign_mask();
    let base = factor * p.base_factor();
    let dim = m.nrows();
    for col in 0..dim {
        // column `col` of P has its entry in row `col ^ flip`
        let mut coeff = base;
        if (col & sign).count_ones() % 2 == 1 {
            coeff = -coeff;
        }
        let src = col ^ flip;
        for row in 0..dim {
            out[(row, col)] += coeff * m[(row, src)];
        }
    }
}

/// Dense form of a Lindblad generator. Operators are kept as Pauli terms and
/// applied term by term, so one evaluation costs O(terms * 4^n) rather than
/// dense matrix products.
pub struct DenseGenerator {
    hamiltonian: Terms,
    /// per channel: rate, jump terms, and the canonicalized `c^dag c` terms
    channels: Vec<(f64, Terms, Terms)>,
    dim: usize,
}

type Terms = Vec<(Complex64, PauliString)>;

impl DenseGenerator {
    pub fn new(model: &LindbladModel) -> Result<Self> {
        check_dense(model.n())?;
        let dim = 1usize << model.n();
        let hamiltonian = model.hamiltonian().terms().to_vec();
        let channels = model
            .dissipators()
            .iter()
            .filter(|d| d.rate > 0.0 && !d.jump.is_zero())
            .map(|d| -> Result<_> {
                let kdag_k = d.jump.dagger().mul(&d.jump)?;
                Ok((d.rate, d.jump.terms().to_vec(), kdag_k.terms().to_vec()))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            hamiltonian,
            channels,
            dim,
        })
    }

    /// `-i[H, rho] + sum_k gamma_k (c rho c^dag - {c^dag c, rho}/2)`.
    pub fn rhs(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let i = c(0.0, 1.0);
        let mut out = DMatrix::from_element(self.dim, self.dim, c(0.0, 0.0));
        for (coeff, p) in &self.hamiltonian {
            add_string_times_matrix(-i * coeff, p, rho, &mut out);
            add_matrix_times_string(i * coeff, rho, p, &mut out);
        }
        let mut scratch = DMatrix::from_element(self.dim, self.dim, c(0.0, 0.0));
        for (rate, jump, kdag_k) in &self.channels {
            let gamma = c(*rate, 0.0);
            // c rho c^dag, term by term (canonical strings are self-adjoint)
            scratch.fill(c(0.0, 0.0));
            for (a, pa) in jump {
                add_string_times_matrix(*a, pa, rho, &mut scratch);
            }
            for (b, pb) in jump {
                add_matrix_times_string(gamma * b.conj(), &scratch, pb, &mut out);
            }
            // -1/2 {c^dag c, rho}
            for (k, pk) in kdag_k {
                let half = gamma * k * c(-0.5, 0.0);
                add_string_times_matrix(half, pk, rho, &mut out);
                add_matrix_times_string(half, rho, pk, &mut out);
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Master-equation right-hand side for a single matrix.
pub fn lindblad_rhs(model: &LindbladModel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if model.n() != rho.n {
        return Err(Error::DimensionMismatch {
            left: model.n(),
            right: rho.n,
        });
    }
    let gen = DenseGenerator::new(model)?;
    DensityMatrix::new(rho.n, gen.rhs(&rho.mat))
}

/// One classical RK4 step of the master equation.
pub fn rk4_step(gen: &DenseGenerator, rho: &DMatrix<Complex64>, dt: f64) -> DMatrix<Complex64> {
    let half = c(dt / 2.0, 0.0);
    let k1 = gen.rhs(rho);
    let k2 = gen.rhs(&(rho + &k1 * half));
    let k3 = gen.rhs(&(rho + &k2 * half));
    let k4 = gen.rhs(&(rho + &k3 * c(dt, 0.0)));
    rho + (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0)
}

/// Number of steps covering `[0, t_final]` with step `dt` (rounded against
/// floating-point drift).
pub fn step_count(t_final: f64, dt: f64) -> usize {
    let raw = t_final / dt;
    let rounded = raw.round();
    if (raw - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

/// RK4 trajectory at times `0, dt, ..., steps * dt`.
pub fn integrate_exact(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    dt: f64,
    t_final: f64,
) -> Result<Vec<DensityMatrix>> {
    if model.n() != rho0.n {
        return Err(Error::DimensionMismatch {
            left: model.n(),
            right: rho0.n,
        });
    }
    if dt <= 0.0 {
        return Err(Error::Config("oracle dt must be positive".into()));
    }
    let gen = DenseGenerator::new(model)?;
    let steps = step_count(t_final, dt);
    let mut out = Vec::with_capacity(steps + 1);
    let mut rho = rho0.mat.clone();
    out.push(DensityMatrix::new(rho0.n, rho.clone())?);
    for _ in 0..steps {
        rho = rk4_step(&gen, &rho, dt);
        out.push(DensityMatrix::new(rho0.n, rho.clone())?);
    }
    Ok(out)
}

//! Pauli-string and Pauli-sum arithmetic.
//!
//! A [`PauliString`] is a tensor product of single-qubit Pauli operators with
//! a complex phase; a [`PauliSum`] is a linear combination of strings. These
//! are the language in which Hamiltonians, jump operators, and superoperator
//! terms are expressed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Coefficients below this magnitude are dropped during canonicalization.
pub const COEFF_CUTOFF: f64 = 1e-15;

/// Single-qubit Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// Product of two single-qubit Paulis as (power of i, result letter).
    fn mul(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, X) => (3, Z),
            (Y, Z) => (1, X),
            (Z, Y) => (3, X),
            (Z, X) => (1, Y),
            (X, Z) => (3, Y),
        }
    }

    pub fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

fn i_pow(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Tensor product of single-qubit Paulis with an overall complex phase.
///
/// Site `j` of the string acts on bit `j` of the little-endian basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    letters: Vec<Pauli>,
    phase: Complex64,
}

impl PauliString {
    /// Identity string on `n` qubits, phase 1.
    pub fn identity(n: usize) -> Self {
        Self {
            letters: vec![Pauli::I; n],
            phase: Complex64::new(1.0, 0.0),
        }
    }

    /// String with a single non-identity letter at `site`.
    pub fn single(n: usize, site: usize, p: Pauli) -> Self {
        assert!(site < n, "site {site} out of range for {n} qubits");
        let mut letters = vec![Pauli::I; n];
        letters[site] = p;
        Self {
            letters,
            phase: Complex64::new(1.0, 0.0),
        }
    }

    /// Two-site ZZ string.
    pub fn zz(n: usize, j: usize, k: usize) -> Self {
        assert!(j < n && k < n && j != k);
        let mut letters = vec![Pauli::I; n];
        letters[j] = Pauli::Z;
        letters[k] = Pauli::Z;
        Self {
            letters,
            phase: Complex64::new(1.0, 0.0),
        }
    }

    pub fn from_letters(letters: Vec<Pauli>, phase: Complex64) -> Result<Self> {
        if phase.norm() == 0.0 {
            return Err(Error::Numerical("PauliString phase must be nonzero".into()));
        }
        Ok(Self { letters, phase })
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn phase(&self) -> Complex64 {
        self.phase
    }

    pub fn letter(&self, site: usize) -> Pauli {
        self.letters[site]
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    pub fn has_unit_phase(&self) -> bool {
        (self.phase - Complex64::new(1.0, 0.0)).norm() < 1e-14
    }

    /// Split into a unit-phase string and the extracted phase.
    pub fn split_phase(&self) -> (PauliString, Complex64) {
        (
            PauliString {
                letters: self.letters.clone(),
                phase: Complex64::new(1.0, 0.0),
            },
            self.phase,
        )
    }

    pub fn with_phase(mut self, phase: Complex64) -> Self {
        self.phase = phase;
        self
    }

    /// Bit mask of sites carrying X or Y (the basis-flip mask).
    pub fn flip_mask(&self) -> usize {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pauli::X | Pauli::Y))
            .fold(0, |m, (j, _)| m | (1 << j))
    }

    /// Bit mask of sites carrying Y or Z (the sign mask).
    pub fn sign_mask(&self) -> usize {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pauli::Y | Pauli::Z))
            .fold(0, |m, (j, _)| m | (1 << j))
    }

    /// Number of Y letters.
    pub fn y_count(&self) -> usize {
        self.letters.iter().filter(|&&p| p == Pauli::Y).count()
    }

    /// Base scalar multiplying every matrix element: phase * i^{#Y}.
    ///
    /// With this factor, the string maps |b> to `base * (-1)^{popcount(b & sign_mask)} |b ^ flip_mask>`.
    pub fn base_factor(&self) -> Complex64 {
        self.phase * i_pow((self.y_count() % 4) as u8)
    }

    /// Product of two strings including the accumulated phase.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                left: self.n(),
                right: other.n(),
            });
        }
        let mut k: u8 = 0;
        let letters: Vec<Pauli> = self
            .letters
            .iter()
            .zip(other.letters.iter())
            .map(|(&a, &b)| {
                let (ik, p) = a.mul(b);
                k = (k + ik) % 4;
                p
            })
            .collect();
        Ok(PauliString {
            letters,
            phase: self.phase * other.phase * i_pow(k),
        })
    }

    /// Hermitian conjugate: conjugates the phase (letters are self-adjoint).
    pub fn dagger(&self) -> PauliString {
        PauliString {
            letters: self.letters.clone(),
            phase: self.phase.conj(),
        }
    }

    /// Stable byte key for deduplication and RNG derivation.
    pub fn letter_key(&self) -> Vec<u8> {
        self.letters.iter().map(|&p| p.label() as u8).collect()
    }
}

/// Product of two Pauli strings; see [`PauliString::mul`].
pub fn pauli_mul(a: &PauliString, b: &PauliString) -> Result<PauliString> {
    a.mul(b)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.has_unit_phase() {
            write!(f, "({:+.3}{:+.3}i)*", self.phase.re, self.phase.im)?;
        }
        for p in &self.letters {
            write!(f, "{}", p.label())?;
        }
        Ok(())
    }
}

/// Linear combination of Pauli strings on a common qubit count.
///
/// Terms are kept canonical: unit-phase strings, sorted by letters, merged,
/// with coefficients below [`COEFF_CUTOFF`] dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<(Complex64, PauliString)>,
}

impl PauliSum {
    /// Empty sum (the zero operator) on `n` qubits.
    pub fn zero(n: usize) -> Self {
        Self { n, terms: vec![] }
    }

    pub fn from_terms(n: usize, terms: Vec<(Complex64, PauliString)>) -> Result<Self> {
        for (_, s) in &terms {
            if s.n() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: s.n(),
                });
            }
        }
        let mut sum = Self { n, terms };
        sum.canonicalize();
        Ok(sum)
    }

    /// The lowering operator (X - iY)/2 on one site; annihilates bit value 1.
    pub fn sigma_minus(n: usize, site: usize) -> Self {
        Self::from_terms(
            n,
            vec![
                (Complex64::new(0.5, 0.0), PauliString::single(n, site, Pauli::X)),
                (Complex64::new(0.0, -0.5), PauliString::single(n, site, Pauli::Y)),
            ],
        )
        .expect("sigma_minus terms are well-formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(Complex64, PauliString)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, coeff: Complex64, string: PauliString) -> Result<()> {
        if string.n() != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: string.n(),
            });
        }
        self.terms.push((coeff, string));
        self.canonicalize();
        Ok(())
    }

    /// Sum of another PauliSum scaled by `factor`.
    pub fn add_scaled(&mut self, factor: Complex64, other: &PauliSum) -> Result<()> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        for (c, s) in &other.terms {
            self.terms.push((factor * c, s.clone()));
        }
        self.canonicalize();
        Ok(())
    }

    /// Operator product: every term of `self` times every term of `other`.
    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, sa) in &self.terms {
            for (b, sb) in &other.terms {
                terms.push((a * b, sa.mul(sb)?));
            }
        }
        PauliSum::from_terms(self.n, terms)
    }

    /// Hermitian conjugate.
    pub fn dagger(&self) -> PauliSum {
        // Canonical strings are unit-phase, hence self-adjoint.
        PauliSum {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(c, s)| (c.conj(), s.clone()))
                .collect(),
        }
    }

    /// True when all canonical coefficients are real (the operator is Hermitian).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|(c, _)| c.im.abs() <= tol)
    }

    fn canonicalize(&mut self) {
        let mut folded: Vec<(Vec<Pauli>, Complex64)> = self
            .terms
            .drain(..)
            .map(|(c, s)| {
                let (unit, phase) = s.split_phase();
                (unit.letters, c * phase)
            })
            .collect();
        folded.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Complex64, PauliString)> = Vec::with_capacity(folded.len());
        for (letters, coeff) in folded {
            match merged.last_mut() {
                Some((c, s)) if s.letters == letters => *c += coeff,
                _ => merged.push((
                    coeff,
                    PauliString {
                        letters,
                        phase: Complex64::new(1.0, 0.0),
                    },
                )),
            }
        }
        merged.retain(|(c, _)| c.norm() >= COEFF_CUTOFF);
        self.terms = merged;
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, s)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:+.6}{:+.6}i) {}", c.re, c.im, s)?;
        }
        Ok(())
    }
}

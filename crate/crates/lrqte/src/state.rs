//! Statevector engine: basis states, Pauli application, inner products.
//!
//! Site `j` maps to bit `j` of the basis index (little-endian). Bit value 1
//! is the -1 eigenstate of Z, so the all-ones bitstring is the spin-down
//! configuration annihilated by every lowering operator.

use num_complex::Complex64;
use std::fmt;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum};

/// Computational-basis label. `bits[j]` is the value of site `j`; the leftmost
/// character of the display form is site 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    pub fn ones(n: usize) -> Self {
        Self { bits: vec![true; n] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Parse a string of '0'/'1' characters, site 0 leftmost.
    pub fn parse(s: &str) -> Result<Self> {
        let bits: Result<Vec<bool>> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Config(format!("invalid bitstring character '{other}'"))),
            })
            .collect();
        Ok(Self { bits: bits? })
    }

    /// Label from a basis index, little-endian.
    pub fn from_index(n: usize, index: usize) -> Self {
        Self {
            bits: (0..n).map(|j| (index >> j) & 1 == 1).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn bit(&self, site: usize) -> bool {
        self.bits[site]
    }

    /// Little-endian basis index.
    pub fn index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &b)| acc | ((b as usize) << j))
    }

    pub fn flipped(&self, site: usize) -> Self {
        let mut bits = self.bits.clone();
        bits[site] = !bits[site];
        Self { bits }
    }

    /// Bitwise complement, used for reporting in the opposite labeling convention.
    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn hamming_distance(&self, other: &BitString) -> usize {
        self.bits
            .iter()
            .zip(other.bits.iter())
            .filter(|(a, b)| a != b)
            .count()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// Dense 2^n-amplitude state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    n: usize,
    amps: Vec<Complex64>,
}

impl Ket {
    pub fn zero_vector(n: usize) -> Self {
        Self {
            n,
            amps: vec![Complex64::new(0.0, 0.0); 1 << n],
        }
    }

    pub fn from_amps(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << n {
            return Err(Error::Numerical(format!(
                "amplitude vector has length {}, expected {}",
                amps.len(),
                1 << n
            )));
        }
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: Complex64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    pub fn add_scaled(&mut self, factor: Complex64, other: &Ket) {
        for (a, b) in self.amps.iter_mut().zip(other.amps.iter()) {
            *a += factor * b;
        }
    }

    pub fn normalized(&self) -> Ket {
        let mut out = self.clone();
        let n = out.norm();
        if n > 0.0 {
            out.scale(Complex64::new(1.0 / n, 0.0));
        }
        out
    }
}

/// Unit vector on the computational basis state labelled by `x`.
pub fn basis_ket(x: &BitString) -> Ket {
    let mut ket = Ket::zero_vector(x.n());
    ket.amps[x.index()] = Complex64::new(1.0, 0.0);
    ket
}

/// <bra|ket>.
pub fn inner(bra: &Ket, ket: &Ket) -> Complex64 {
    debug_assert_eq!(bra.n, ket.n);
    bra.amps
        .iter()
        .zip(ket.amps.iter())
        .map(|(b, k)| b.conj() * k)
        .sum()
}

/// Apply a Pauli string to a ket: returns `p * v`.
pub fn apply_string(p: &PauliString, v: &Ket) -> Result<Ket> {
    if p.n() != v.n {
        return Err(Error::DimensionMismatch {
            left: p.n(),
            right: v.n,
        });
    }
    let mut out = Ket::zero_vector(v.n);
    apply_string_into(p, v, &mut out);
    Ok(out)
}

/// As [`apply_string`], writing into a scratch buffer of matching size.
pub fn apply_string_into(p: &PauliString, v: &Ket, out: &mut Ket) {
    let flip = p.flip_mask();
    let sign = p.sign_mask();
    let base = p.base_factor();
    for (idx, amp) in v.amps.iter().enumerate() {
        let mut coeff = base;
        if (idx & sign).count_ones() % 2 == 1 {
            coeff = -coeff;
        }
        out.amps[idx ^ flip] = coeff * amp;
    }
}

/// <bra| p |ket> for a Pauli string.
pub fn sandwich(bra: &Ket, p: &PauliString, ket: &Ket) -> Result<Complex64> {
    if p.n() != bra.n || bra.n != ket.n {
        return Err(Error::DimensionMismatch {
            left: bra.n,
            right: ket.n.max(p.n()),
        });
    }
    let flip = p.flip_mask();
    let sign = p.sign_mask();
    let base = p.base_factor();
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, amp) in ket.amps.iter().enumerate() {
        let mut coeff = base;
        if (idx & sign).count_ones() % 2 == 1 {
            coeff = -coeff;
        }
        acc += bra.amps[idx ^ flip].conj() * coeff * amp;
    }
    Ok(acc)
}

/// <bra| sum |ket> for a Pauli sum.
pub fn sandwich_sum(bra: &Ket, sum: &PauliSum, ket: &Ket) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (c, s) in sum.terms() {
        acc += c * sandwich(bra, s, ket)?;
    }
    Ok(acc)
}

/// The X-string mapping `|x_q>` to `|x_p>`: X on every differing site.
pub fn permutation_string(x_p: &BitString, x_q: &BitString) -> Result<PauliString> {
    if x_p.n() != x_q.n() {
        return Err(Error::DimensionMismatch {
            left: x_p.n(),
            right: x_q.n(),
        });
    }
    let letters = (0..x_p.n())
        .map(|j| {
            if x_p.bit(j) != x_q.bit(j) {
                Pauli::X
            } else {
                Pauli::I
            }
        })
        .collect();
    PauliString::from_letters(letters, Complex64::new(1.0, 0.0))
}

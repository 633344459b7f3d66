//! Layered parameterized circuit: X site rotations followed by ZZ edge
//! rotations in every layer, with analytic parameter derivatives obtained by
//! Pauli insertion.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::pauli::{Pauli, PauliString};
use crate::state::Ket;

/// One parameterized rotation `exp(-i theta/2 * G)` with a unit-phase Pauli
/// generator `G`.
#[derive(Clone, Debug)]
pub struct Gate {
    pub generator: PauliString,
    pub param: usize,
}

/// Ordered gate list; applying the circuit walks the list front to back.
#[derive(Clone, Debug)]
pub struct CircuitSpec {
    n: usize,
    layers: usize,
    gates: Vec<Gate>,
    /// gate position of each parameter index
    param_pos: Vec<usize>,
}

impl CircuitSpec {
    /// Problem-inspired circuit for a lattice: each layer applies the X site
    /// rotations (ascending site order), then the ZZ edge rotations
    /// (lexicographic edge order). Parameter count is `layers * (n + E)`.
    pub fn layered_tfim(lattice: &Lattice, layers: usize) -> Result<Self> {
        if layers == 0 {
            return Err(Error::Config("ansatz.layers must be >= 1".into()));
        }
        let n = lattice.n();
        let mut gates = Vec::with_capacity(layers * (n + lattice.edge_count()));
        let mut param = 0;
        for _ in 0..layers {
            for j in 0..n {
                gates.push(Gate {
                    generator: PauliString::single(n, j, Pauli::X),
                    param,
                });
                param += 1;
            }
            for &(j, k) in lattice.edges() {
                gates.push(Gate {
                    generator: PauliString::zz(n, j, k),
                    param,
                });
                param += 1;
            }
        }
        Self::from_gates(n, layers, gates)
    }

    pub fn from_gates(n: usize, layers: usize, gates: Vec<Gate>) -> Result<Self> {
        let n_params = gates.len();
        let mut param_pos = vec![usize::MAX; n_params];
        for (pos, g) in gates.iter().enumerate() {
            if g.generator.n() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: g.generator.n(),
                });
            }
            if !g.generator.has_unit_phase() {
                return Err(Error::Config("gate generators must have unit phase".into()));
            }
            if g.param >= n_params || param_pos[g.param] != usize::MAX {
                return Err(Error::Config(
                    "gate parameter indices must be 0..N exactly once".into(),
                ));
            }
            param_pos[g.param] = pos;
        }
        Ok(Self {
            n,
            layers,
            gates,
            param_pos,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn n_params(&self) -> usize {
        self.gates.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Gate-list position of parameter `k`.
    pub fn position_of(&self, k: usize) -> usize {
        self.param_pos[k]
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::Config(format!(
                "theta has {} entries, circuit expects {}",
                theta.len(),
                self.n_params()
            )));
        }
        Ok(())
    }
}

/// In-place rotation `v <- exp(-i angle/2 * G) v`.
pub fn rotate_pauli(generator: &PauliString, angle: f64, v: &mut Ket) {
    let flip = generator.flip_mask();
    let sign = generator.sign_mask();
    let base = generator.base_factor();
    let cos = Complex64::new((angle / 2.0).cos(), 0.0);
    let misin = Complex64::new(0.0, -(angle / 2.0).sin());
    let amps = v.amps_mut();
    if flip == 0 {
        // Diagonal generator: per-amplitude phase.
        for (idx, a) in amps.iter_mut().enumerate() {
            let mut d = base;
            if (idx & sign).count_ones() % 2 == 1 {
                d = -d;
            }
            *a = (cos + misin * d) * *a;
        }
        return;
    }
    // Pair amplitudes (idx, idx ^ flip) using one set bit of the mask.
    let pivot = 1usize << flip.trailing_zeros();
    for idx in 0..amps.len() {
        if idx & pivot != 0 {
            continue;
        }
        let partner = idx ^ flip;
        // coefficient of |j> -> |j ^ flip>
        let coeff_of = |j: usize| {
            let mut cf = base;
            if (j & sign).count_ones() % 2 == 1 {
                cf = -cf;
            }
            cf
        };
        let a = amps[idx];
        let b = amps[partner];
        amps[idx] = cos * a + misin * coeff_of(partner) * b;
        amps[partner] = cos * b + misin * coeff_of(idx) * a;
    }
}

/// Apply the full circuit: returns `U(theta) v`.
pub fn apply_circuit(c: &CircuitSpec, theta: &[f64], v: &Ket) -> Result<Ket> {
    c.check_theta(theta)?;
    let mut out = v.clone();
    for g in &c.gates {
        rotate_pauli(&g.generator, theta[g.param], &mut out);
    }
    Ok(out)
}

/// Apply a contiguous gate range `[from, to)` of the circuit.
pub fn apply_circuit_range(
    c: &CircuitSpec,
    theta: &[f64],
    from: usize,
    to: usize,
    v: &Ket,
) -> Result<Ket> {
    c.check_theta(theta)?;
    if from > to || to > c.gates.len() {
        return Err(Error::IndexOutOfRange(format!(
            "gate range {from}..{to} outside 0..{}",
            c.gates.len()
        )));
    }
    let mut out = v.clone();
    for g in &c.gates[from..to] {
        rotate_pauli(&g.generator, theta[g.param], &mut out);
    }
    Ok(out)
}

/// Analytic derivative `(dU/dtheta_k) v`: the generator is inserted at the
/// gate position and the result scaled by -i/2.
pub fn apply_circuit_derivative(c: &CircuitSpec, theta: &[f64], k: usize, v: &Ket) -> Result<Ket> {
    c.check_theta(theta)?;
    if k >= c.n_params() {
        return Err(Error::IndexOutOfRange(format!(
            "parameter {k} outside 0..{}",
            c.n_params()
        )));
    }
    let pos = c.position_of(k);
    let mut out = v.clone();
    for g in &c.gates[..pos] {
        rotate_pauli(&g.generator, theta[g.param], &mut out);
    }
    let mut out = crate::state::apply_string(&c.gates[pos].generator, &out)?;
    for g in &c.gates[pos..] {
        rotate_pauli(&g.generator, theta[g.param], &mut out);
    }
    out.scale(Complex64::new(0.0, -0.5));
    Ok(out)
}

/// All derivative states of one input in a single forward sweep.
///
/// Returns `(U v, [dU/dtheta_k v; k])`, reusing the stored prefix states so the
/// shared prefixes are applied once.
pub fn derivative_states(c: &CircuitSpec, theta: &[f64], v: &Ket) -> Result<(Ket, Vec<Ket>)> {
    c.check_theta(theta)?;
    let mut prefixes = Vec::with_capacity(c.gates.len() + 1);
    prefixes.push(v.clone());
    for g in &c.gates {
        let mut next = prefixes.last().unwrap().clone();
        rotate_pauli(&g.generator, theta[g.param], &mut next);
        prefixes.push(next);
    }
    let mut derivs = vec![Ket::zero_vector(c.n); c.n_params()];
    for (pos, g) in c.gates.iter().enumerate() {
        let mut d = crate::state::apply_string(&g.generator, &prefixes[pos])?;
        for later in &c.gates[pos..] {
            rotate_pauli(&later.generator, theta[later.param], &mut d);
        }
        d.scale(Complex64::new(0.0, -0.5));
        derivs[g.param] = d;
    }
    Ok((prefixes.pop().unwrap(), derivs))
}

//! Expectation-value backends.
//!
//! The exact backend reads inner products off the per-step state cache. The
//! shot backend computes the exact outcome distribution of each measurement
//! circuit from statevectors and then samples it, emulating either an
//! interferometric (ancilla) test, an ancilla-free projective scheme, or the
//! hybrid of the two. Also holds the closed-form circuit-count cost model.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzKind, LowRankState};
use crate::circuit::apply_circuit_range;
use crate::eom::{IndexedTerms, StateCache};
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::state::{apply_string, basis_ket, inner, permutation_string, sandwich, Ket};

/// One primitive expectation value. String indices refer to the deduplicated
/// table of [`IndexedTerms`]; index 0 is the identity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Primitive {
    /// `<x_p| dU_p,k^dag dU_q,j |x_q>`
    DerivDeriv { p: usize, k: usize, q: usize, j: usize },
    /// `<x_p| dU_p,k^dag U_q |x_q>`
    DerivU { p: usize, k: usize, q: usize },
    /// `<x_p| U_p^dag s U_q |x_q>` (s = 0 gives the overlap)
    USigmaU { p: usize, s: usize, q: usize },
    /// `<x_p| dU_p,k^dag s U_q |x_q>`
    DerivSigmaU { p: usize, k: usize, s: usize, q: usize },
}

impl Primitive {
    fn validate(&self, state: &LowRankState, n_strings: usize) -> Result<()> {
        let r = state.rank();
        let nt = state.params_per_state();
        let ok = match *self {
            Primitive::DerivDeriv { p, k, q, j } => p < r && q < r && k < nt && j < nt,
            Primitive::DerivU { p, k, q } => p < r && q < r && k < nt,
            Primitive::USigmaU { p, s, q } => p < r && q < r && s < n_strings,
            Primitive::DerivSigmaU { p, k, s, q } => p < r && q < r && k < nt && s < n_strings,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange(format!("{self:?}")))
        }
    }

    /// Stable bytes identifying this primitive's RNG stream.
    fn stream_key(&self, strings: &[PauliString]) -> Vec<u8> {
        let mut out = Vec::with_capacity(32);
        let push = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
        match *self {
            Primitive::DerivDeriv { p, k, q, j } => {
                out.push(1);
                push(&mut out, p);
                push(&mut out, k);
                push(&mut out, q);
                push(&mut out, j);
            }
            Primitive::DerivU { p, k, q } => {
                out.push(2);
                push(&mut out, p);
                push(&mut out, k);
                push(&mut out, q);
            }
            Primitive::USigmaU { p, s, q } => {
                out.push(3);
                push(&mut out, p);
                push(&mut out, q);
                out.extend_from_slice(&strings[s].letter_key());
            }
            Primitive::DerivSigmaU { p, k, s, q } => {
                out.push(4);
                push(&mut out, p);
                push(&mut out, k);
                push(&mut out, q);
                out.extend_from_slice(&strings[s].letter_key());
            }
        }
        out
    }
}

/// Measurement scheme emulated by the shot backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationMethod {
    /// Interferometric test with an ancilla: Re and Im each from one circuit.
    Hadamard,
    /// Projective branch circuits for state-pair terms. Derivative-times-string
    /// terms have no single-stage ancilla-free circuit and always use the
    /// interferometric test.
    AncillaFree,
    /// Ancilla-free for state-pair terms, interferometric for
    /// derivative-times-string terms.
    Hybrid,
}

/// Shot budget and RNG root for the sampling backend.
///
/// Every measurement circuit is run `shots` times; the two rotated circuits of
/// an ancilla-free imaginary part split one budget evenly. Each
/// (timestep, primitive) pair owns a derived RNG stream, so results do not
/// depend on evaluation order or worker count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotPlan {
    pub method: EstimationMethod,
    pub shots: u64,
    pub seed: u64,
}

/// Evaluation context handed to backends by the assembler.
pub struct EvalContext<'a> {
    pub state: &'a LowRankState,
    pub cache: &'a StateCache,
    pub step: u64,
}

/// An expectation-value evaluator.
pub trait Backend: Sync {
    fn eval(&self, ctx: &EvalContext<'_>, prim: &Primitive) -> Result<Complex64>;
}

/// Exact values from cached statevectors.
pub struct ExactBackend;

fn exact_value(ctx: &EvalContext<'_>, prim: &Primitive) -> Result<Complex64> {
    let cache = ctx.cache;
    prim.validate(ctx.state, cache.strings.len())?;
    let v = match *prim {
        Primitive::DerivDeriv { p, k, q, j } => inner(&cache.dpsis[p][k], &cache.dpsis[q][j]),
        Primitive::DerivU { p, k, q } => inner(&cache.dpsis[p][k], &cache.psis[q]),
        Primitive::USigmaU { p, s, q } => inner(&cache.psis[p], &cache.phis[s][q]),
        Primitive::DerivSigmaU { p, k, s, q } => inner(&cache.dpsis[p][k], &cache.phis[s][q]),
    };
    Ok(v)
}

impl Backend for ExactBackend {
    fn eval(&self, ctx: &EvalContext<'_>, prim: &Primitive) -> Result<Complex64> {
        exact_value(ctx, prim)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn check_bounded(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + 1e-9 {
        return Err(Error::Numerical(format!(
            "expected a modulus-bounded expectation, got {x}"
        )));
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// Sample the mean of `shots` {-1, +1} outcomes with expectation `value`.
fn sample_pm_one(rng: &mut ChaCha8Rng, value: f64, shots: u64) -> Result<f64> {
    let value = check_bounded(value)?;
    if shots == 0 {
        return Err(Error::Config("shots must be positive".into()));
    }
    let p = ((1.0 + value) / 2.0).clamp(0.0, 1.0);
    let dist = Binomial::new(shots, p)
        .map_err(|e| Error::Numerical(format!("binomial parameters invalid: {e}")))?;
    let k = dist.sample(rng);
    Ok(2.0 * k as f64 / shots as f64 - 1.0)
}

/// Shot-sampled estimates; see [`ShotPlan`].
pub struct ShotBackend {
    pub plan: ShotPlan,
}

impl ShotBackend {
    pub fn new(plan: ShotPlan) -> Self {
        Self { plan }
    }

    fn rng_for(&self, ctx: &EvalContext<'_>, prim: &Primitive) -> ChaCha8Rng {
        let mut bytes = Vec::with_capacity(48);
        bytes.extend_from_slice(&self.plan.seed.to_le_bytes());
        bytes.extend_from_slice(&ctx.step.to_le_bytes());
        bytes.extend_from_slice(&prim.stream_key(&ctx.cache.strings));
        ChaCha8Rng::seed_from_u64(fnv1a64(&bytes))
    }

    /// Interferometric estimate of a modulus-bounded complex core value:
    /// Re and Im each sampled from one circuit of `shots` runs.
    fn hadamard_core(&self, rng: &mut ChaCha8Rng, core: Complex64) -> Result<Complex64> {
        let re = sample_pm_one(rng, core.re, self.plan.shots)?;
        let im = sample_pm_one(rng, core.im, self.plan.shots)?;
        Ok(Complex64::new(re, im))
    }

    fn hadamard_primitive(
        &self,
        ctx: &EvalContext<'_>,
        prim: &Primitive,
        rng: &mut ChaCha8Rng,
    ) -> Result<Complex64> {
        let exact = exact_value(ctx, prim)?;
        let (to_core, from_core) = core_maps(prim);
        let est = self.hadamard_core(rng, exact * to_core)?;
        Ok(est * from_core)
    }

    /// Ancilla-free estimate of `T = <psi| V^dag s2 V s1 |psi>`.
    ///
    /// Real part: one projective circuit; the first measurement of `s1` splits
    /// the `shots` runs into two branches with exactly computed probabilities
    /// and the second measurement samples `s2` per branch. Imaginary part: the
    /// two `exp(+-i pi s1/4)` circuits sharing one `shots` budget evenly.
    fn ancilla_free_core(
        &self,
        rng: &mut ChaCha8Rng,
        psi: &Ket,
        s1: &PauliString,
        apply_v: &dyn Fn(&Ket) -> Result<Ket>,
        s2: &PauliString,
    ) -> Result<Complex64> {
        let shots = self.plan.shots;
        if shots == 0 {
            return Err(Error::Config("shots must be positive".into()));
        }
        let s1_psi = apply_string(s1, psi)?;

        // Real part via projective branches.
        let e1 = check_bounded(inner(psi, &s1_psi).re)?;
        let p_plus = ((1.0 + e1) / 2.0).clamp(0.0, 1.0);
        let branch = Binomial::new(shots, p_plus)
            .map_err(|e| Error::Numerical(format!("binomial parameters invalid: {e}")))?;
        let n_plus = branch.sample(rng);
        let n_minus = shots - n_plus;
        let branch_term = |sign: f64, count: u64, rng: &mut ChaCha8Rng| -> Result<f64> {
            if count == 0 {
                return Ok(0.0);
            }
            let mut proj = psi.clone();
            proj.add_scaled(Complex64::new(sign, 0.0), &s1_psi);
            proj.scale(Complex64::new(0.5, 0.0));
            let norm = proj.norm();
            if norm < 1e-12 {
                return Ok(0.0);
            }
            let rotated = apply_v(&proj.normalized())?;
            let m = sandwich(&rotated, s2, &rotated)?.re;
            let m_hat = sample_pm_one(rng, m, count)?;
            Ok(sign * (count as f64 / shots as f64) * m_hat)
        };
        let re_hat = branch_term(1.0, n_plus, rng)? + branch_term(-1.0, n_minus, rng)?;

        // Imaginary part via the two rotated circuits.
        let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let rotated_expectation = |sign: f64| -> Result<f64> {
            let mut v = psi.clone();
            v.add_scaled(Complex64::new(0.0, sign), &s1_psi);
            v.scale(inv_sqrt2);
            let w = apply_v(&v)?;
            Ok(sandwich(&w, s2, &w)?.re)
        };
        let e_plus = rotated_expectation(1.0)?;
        let e_minus = rotated_expectation(-1.0)?;
        let s_plus = (shots / 2).max(1);
        let s_minus = (shots - shots / 2).max(1);
        let e_plus_hat = sample_pm_one(rng, e_plus, s_plus)?;
        let e_minus_hat = sample_pm_one(rng, e_minus, s_minus)?;
        let im_hat = (e_minus_hat - e_plus_hat) / 2.0;

        Ok(Complex64::new(re_hat, im_hat))
    }

    /// Route one shared-rotation primitive through the ancilla-free scheme.
    fn ancilla_free_shared(
        &self,
        ctx: &EvalContext<'_>,
        prim: &Primitive,
        rng: &mut ChaCha8Rng,
    ) -> Result<Complex64> {
        let state = ctx.state;
        let circuit = &state.circuit;
        let theta = state.theta_of(0);
        let n_gates = circuit.gates().len();
        match *prim {
            Primitive::DerivU { p, k, q } => {
                // value = i/2 conj(T), T = <x_q| W^dag g_k W X_{p-q} |x_q>,
                // W the prefix before gate k
                let pos = circuit.position_of(k);
                let psi = basis_ket(&state.basis[q]);
                let s1 = permutation_string(&state.basis[p], &state.basis[q])?;
                let s2 = circuit.gates()[pos].generator.clone();
                let apply_w =
                    |v: &Ket| -> Result<Ket> { apply_circuit_range(circuit, theta, 0, pos, v) };
                let t = self.ancilla_free_core(rng, &psi, &s1, &apply_w, &s2)?;
                Ok(Complex64::new(0.0, 0.5) * t.conj())
            }
            Primitive::DerivDeriv { p, k, q, j } if p == q => {
                // value = 1/4 conj(T) for k <= j, with
                // T = <psi'| V^dag g_j V g_k |psi'>, psi' the prefix state of
                // gate k on |x_p> and V the gates between k and j
                let ordered = k <= j;
                let (k, j) = if ordered { (k, j) } else { (j, k) };
                let pos_k = circuit.position_of(k);
                let pos_j = circuit.position_of(j);
                let psi =
                    apply_circuit_range(circuit, theta, 0, pos_k, &basis_ket(&state.basis[p]))?;
                let s1 = circuit.gates()[pos_k].generator.clone();
                let s2 = circuit.gates()[pos_j].generator.clone();
                let apply_v = |v: &Ket| -> Result<Ket> {
                    apply_circuit_range(circuit, theta, pos_k, pos_j, v)
                };
                let t = self.ancilla_free_core(rng, &psi, &s1, &apply_v, &s2)?;
                let val = t.conj() * 0.25;
                Ok(if ordered { val } else { val.conj() })
            }
            Primitive::USigmaU { p, s, q } => {
                // value = conj(T), T = <x_q| U^dag s U X_{p-q} |x_q>
                let psi = basis_ket(&state.basis[q]);
                let s1 = permutation_string(&state.basis[p], &state.basis[q])?;
                let s2 = ctx.cache.strings[s].clone();
                let apply_u =
                    |v: &Ket| -> Result<Ket> { apply_circuit_range(circuit, theta, 0, n_gates, v) };
                let t = self.ancilla_free_core(rng, &psi, &s1, &apply_u, &s2)?;
                Ok(t.conj())
            }
            // derivative-times-string terms and cross-state
            // derivative-derivative terms have no single-stage ancilla-free
            // circuit; use the interferometric test
            Primitive::DerivSigmaU { .. } | Primitive::DerivDeriv { .. } => {
                self.hadamard_primitive(ctx, prim, rng)
            }
        }
    }
}

impl Backend for ShotBackend {
    fn eval(&self, ctx: &EvalContext<'_>, prim: &Primitive) -> Result<Complex64> {
        prim.validate(ctx.state, ctx.cache.strings.len())?;
        if self.plan.shots == 0 {
            return Err(Error::Config("backend.shots must be positive".into()));
        }
        let mut rng = self.rng_for(ctx, prim);
        match self.plan.method {
            EstimationMethod::Hadamard => self.hadamard_primitive(ctx, prim, &mut rng),
            EstimationMethod::AncillaFree | EstimationMethod::Hybrid => {
                if ctx.state.kind() == AnsatzKind::II {
                    // per-component rotations mix two different circuits in one
                    // bracket; only the interferometric emulation applies
                    self.hadamard_primitive(ctx, prim, &mut rng)
                } else {
                    self.ancilla_free_shared(ctx, prim, &mut rng)
                }
            }
        }
    }
}

/// (exact-to-core, core-to-estimate) scale factors making the core value a
/// modulus-bounded transition amplitude.
fn core_maps(prim: &Primitive) -> (Complex64, Complex64) {
    match prim {
        Primitive::DerivDeriv { .. } => (Complex64::new(4.0, 0.0), Complex64::new(0.25, 0.0)),
        Primitive::DerivU { .. } | Primitive::DerivSigmaU { .. } => {
            (Complex64::new(0.0, -2.0), Complex64::new(0.0, 0.5))
        }
        Primitive::USigmaU { .. } => (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)),
    }
}

/// One-off shot estimate of a primitive on a state. Hot paths hand a prebuilt
/// cache to [`ShotBackend`] instead.
pub fn estimate(
    prim: &Primitive,
    state: &LowRankState,
    indexed: &IndexedTerms,
    plan: &ShotPlan,
    step: u64,
) -> Result<Complex64> {
    let cache = StateCache::build(state, indexed)?;
    let ctx = EvalContext {
        state,
        cache: &cache,
        step,
    };
    ShotBackend::new(*plan).eval(&ctx, prim)
}

/// Deduplicated primitive counts needed to assemble M and V once.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockCounts {
    pub m_alpha_alpha: u64,
    pub m_alpha_theta: u64,
    pub m_theta_theta: u64,
    pub v_alpha: u64,
    pub v_theta: u64,
}

impl BlockCounts {
    /// Union over blocks; the families are disjoint, and identity-string
    /// factors reuse other blocks' primitives at no extra cost.
    pub fn total(&self) -> u64 {
        self.m_alpha_alpha + self.m_alpha_theta + self.m_theta_theta + self.v_alpha + self.v_theta
    }
}

/// Closed-form count of distinct expectation values per block for a generic
/// model with `l` single-string jump channels.
///
/// Channel strings are assumed pairwise distinct and Hermitian, so each
/// channel contributes one measured string; identity-string factors are
/// Kronecker deltas or reuse the derivative-overlap family. Values related by
/// conjugation or anti-Hermiticity are counted once. For per-component
/// rotations, `n_theta` is the total angle count over all components.
pub fn count_circuits(kind: AnsatzKind, rank: u64, n_theta: u64, l: u64) -> BlockCounts {
    let r = rank;
    let t = n_theta;
    match kind {
        AnsatzKind::I => BlockCounts {
            m_alpha_alpha: 0,
            m_alpha_theta: 0,
            // unordered (k, j) per basis state, plus unordered (p, q) per angle
            m_theta_theta: r * t * (t + 1) / 2 + t * r * (r + 1) / 2,
            // unordered (p, q) per channel string
            v_alpha: l * r * (r + 1) / 2,
            // ordered (p, q) per angle and channel
            v_theta: l * t * r * r,
        },
        AnsatzKind::II => BlockCounts {
            // unordered component pairs; the diagonal is exactly 1
            m_alpha_alpha: r * r.saturating_sub(1) / 2,
            // every (other component, angle) pair
            m_alpha_theta: r * t,
            // unordered global angle pairs
            m_theta_theta: t * (t + 1) / 2,
            v_alpha: l * r * (r + 1) / 2,
            v_theta: l * r * t,
        },
    }
}

/// Asymptotic scaling label of each block's count (N = angle count).
pub fn block_class(kind: AnsatzKind, block: &str) -> &'static str {
    match (kind, block) {
        (AnsatzKind::I, "m_alpha_alpha") | (AnsatzKind::I, "m_alpha_theta") => "0",
        (AnsatzKind::I, "m_theta_theta") => "O(R^2) per entry",
        (AnsatzKind::I, "m_total") => "O(R^2 N + R N^2)",
        (AnsatzKind::I, "v_alpha") => "O(L R) per entry",
        (AnsatzKind::I, "v_theta") => "O(L R^2) per entry",
        (AnsatzKind::I, "v_total") => "O(L R^2 N)",
        (AnsatzKind::II, "m_alpha_alpha")
        | (AnsatzKind::II, "m_alpha_theta")
        | (AnsatzKind::II, "m_theta_theta") => "O(1) per entry",
        (AnsatzKind::II, "m_total") => "O((R + N)^2)",
        (AnsatzKind::II, "v_alpha") => "O(L R) per entry",
        (AnsatzKind::II, "v_theta") => "O(L R) per entry",
        (AnsatzKind::II, "v_total") => "O(L R^2 + L R N)",
        _ => "?",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{hamming_basis, initial_state, LowRankState, Thetas};
    use crate::circuit::CircuitSpec;
    use crate::lattice::Lattice;
    use crate::lindblad::{build_tfim, liouvillian_expand};
    use crate::state::BitString;
    use std::sync::Arc;

    fn setup(kind: AnsatzKind, n: usize, r: usize, layers: usize) -> (LowRankState, IndexedTerms) {
        let lat = Lattice::chain(n).unwrap();
        let circuit = Arc::new(CircuitSpec::layered_tfim(&lat, layers).unwrap());
        let model = build_tfim(&lat, 1.0, 0.5, 1.0).unwrap();
        let terms = liouvillian_expand(&model).unwrap();
        let indexed = IndexedTerms::new(n, &terms);
        let basis = hamming_basis(&BitString::ones(n), r, &(0..n).collect::<Vec<_>>()).unwrap();
        let mut state = initial_state(kind, circuit, basis, 1e-2).unwrap();
        // move off the all-zero point
        let mut x = 0.3;
        match &mut state.theta {
            Thetas::Shared(t) => {
                for v in t.iter_mut() {
                    *v = x;
                    x += 0.17;
                }
            }
            Thetas::PerState(ts) => {
                for t in ts.iter_mut() {
                    for v in t.iter_mut() {
                        *v = x;
                        x += 0.17;
                    }
                }
            }
        }
        (state, indexed)
    }

    fn all_primitives(state: &LowRankState, indexed: &IndexedTerms) -> Vec<Primitive> {
        let r = state.rank();
        let nt = state.params_per_state();
        let mut out = Vec::new();
        for p in 0..r {
            for q in 0..r {
                out.push(Primitive::USigmaU { p, s: 1, q });
                out.push(Primitive::DerivU { p, k: 1 % nt, q });
                out.push(Primitive::DerivDeriv { p, k: 0, q, j: nt - 1 });
                out.push(Primitive::DerivSigmaU {
                    p,
                    k: nt / 2,
                    s: indexed.n_strings() - 1,
                    q,
                });
            }
        }
        out
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let (state, indexed) = setup(AnsatzKind::I, 2, 2, 1);
        let plan = ShotPlan {
            method: EstimationMethod::Hybrid,
            shots: 128,
            seed: 42,
        };
        let mut differing = 0usize;
        let mut total = 0usize;
        for prim in all_primitives(&state, &indexed) {
            let a = estimate(&prim, &state, &indexed, &plan, 3).unwrap();
            let b = estimate(&prim, &state, &indexed, &plan, 3).unwrap();
            assert_eq!(a, b, "{prim:?}");
            let other_step = estimate(&prim, &state, &indexed, &plan, 4).unwrap();
            total += 1;
            if a != other_step {
                differing += 1;
            }
        }
        // independent streams per step: most draws must change
        assert!(differing * 2 > total, "{differing}/{total} changed across steps");
    }

    #[test]
    fn zero_shots_rejected() {
        let (state, indexed) = setup(AnsatzKind::I, 2, 2, 1);
        let plan = ShotPlan {
            method: EstimationMethod::Hadamard,
            shots: 0,
            seed: 1,
        };
        let prim = Primitive::USigmaU { p: 0, s: 1, q: 1 };
        assert!(estimate(&prim, &state, &indexed, &plan, 0).is_err());
    }

    #[test]
    fn estimator_means_converge_to_exact_values() {
        // Mean over independent batches approaches the statevector value for
        // every method; tolerance is 5 standard errors of the batch mean.
        for kind in [AnsatzKind::I, AnsatzKind::II] {
            let (state, indexed) = setup(kind, 2, 2, 1);
            let cache = StateCache::build(&state, &indexed).unwrap();
            for method in [
                EstimationMethod::Hadamard,
                EstimationMethod::AncillaFree,
                EstimationMethod::Hybrid,
            ] {
                for prim in all_primitives(&state, &indexed) {
                    let ctx = EvalContext {
                        state: &state,
                        cache: &cache,
                        step: 0,
                    };
                    let exact = exact_value(&ctx, &prim).unwrap();
                    let shots = 256u64;
                    let batches = 400u64;
                    let mut mean = Complex64::new(0.0, 0.0);
                    for b in 0..batches {
                        let backend = ShotBackend::new(ShotPlan {
                            method,
                            shots,
                            seed: 1000 + b,
                        });
                        mean += backend.eval(&ctx, &prim).unwrap();
                    }
                    mean /= batches as f64;
                    // per-shot variance of a +-1 estimate is <= 1, the maps
                    // scale it by at most 1; se of the mean of batch means:
                    let se = 1.0 / ((shots * batches) as f64).sqrt();
                    assert!(
                        (mean - exact).norm() <= 5.0 * 2.0 * se + 1e-12,
                        "{kind:?} {method:?} {prim:?}: mean {mean} vs exact {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn count_circuits_reference_points() {
        let c = count_circuits(AnsatzKind::I, 1, 1, 1);
        assert_eq!(c.m_alpha_alpha, 0);
        assert_eq!(c.m_alpha_theta, 0);
        assert_eq!(c.m_theta_theta, 2);
        assert_eq!(c.v_alpha, 1);
        assert_eq!(c.v_theta, 1);

        let c2 = count_circuits(AnsatzKind::II, 1, 4, 2);
        assert_eq!(c2.m_alpha_alpha, 0);
        assert_eq!(c2.m_alpha_theta, 4);
        assert_eq!(c2.m_theta_theta, 10);
        assert_eq!(c2.v_alpha, 2);
        assert_eq!(c2.v_theta, 8);
    }

    #[test]
    fn counts_monotone_in_every_argument() {
        for kind in [AnsatzKind::I, AnsatzKind::II] {
            for r in 1..5u64 {
                for t in 2..13u64 {
                    for l in 1..5u64 {
                        let base = count_circuits(kind, r, t, l).total();
                        assert!(count_circuits(kind, r + 1, t, l).total() >= base);
                        assert!(count_circuits(kind, r, t + 1, l).total() >= base);
                        assert!(count_circuits(kind, r, t, l + 1).total() >= base);
                    }
                }
            }
        }
    }

    #[test]
    fn doubling_angles_scales_shared_rotation_m_by_four() {
        // dominant R N^2 term: ratio approaches 4 from below as N grows
        let r = 3u64;
        let l = 2u64;
        for t in [64u64, 128, 256] {
            let a = count_circuits(AnsatzKind::I, r, t, l);
            let b = count_circuits(AnsatzKind::I, r, 2 * t, l);
            let m_a = a.m_theta_theta as f64;
            let m_b = b.m_theta_theta as f64;
            let ratio = m_b / m_a;
            assert!((ratio - 4.0).abs() < 0.2, "t={t}: ratio {ratio}");
        }
    }
}

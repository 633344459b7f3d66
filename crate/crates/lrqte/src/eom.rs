//! Assembly of the McLachlan linear system M beta_dot = V.
//!
//! All matrix and vector entries reduce to a small set of primitive
//! expectation values (see [`crate::estimator::Primitive`]). Assembly first
//! enumerates the unique primitives each block needs, evaluates every one
//! exactly once through the chosen backend, and then combines the cached
//! values; duplicate values related by conjugation or anti-Hermiticity are
//! derived rather than re-evaluated.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::ansatz::{AnsatzKind, LowRankState};
use crate::error::{Error, Result};
use crate::estimator::{Backend, EvalContext, Primitive};
use crate::lindblad::SuperopTerm;
use crate::pauli::PauliString;
use crate::state::{apply_string, Ket};

/// Liouvillian terms with left/right strings replaced by indices into a
/// deduplicated string table. Index 0 is reserved for the identity.
#[derive(Clone, Debug)]
pub struct IndexedTerms {
    pub strings: Vec<PauliString>,
    /// (coefficient, left string index, right string index)
    pub terms: Vec<(Complex64, usize, usize)>,
}

impl IndexedTerms {
    pub fn new(n: usize, terms: &[SuperopTerm]) -> Self {
        let mut keys: Vec<Vec<u8>> = terms
            .iter()
            .flat_map(|t| [t.left.letter_key(), t.right.letter_key()])
            .filter(|k| k.iter().any(|&b| b != b'I'))
            .collect();
        keys.sort();
        keys.dedup();
        let identity = PauliString::identity(n);
        let mut strings = vec![identity];
        for key in &keys {
            let letters = key
                .iter()
                .map(|&b| match b {
                    b'X' => crate::pauli::Pauli::X,
                    b'Y' => crate::pauli::Pauli::Y,
                    b'Z' => crate::pauli::Pauli::Z,
                    _ => crate::pauli::Pauli::I,
                })
                .collect();
            strings.push(
                PauliString::from_letters(letters, Complex64::new(1.0, 0.0))
                    .expect("unit phase string"),
            );
        }
        let index_of = |s: &PauliString| -> usize {
            if s.is_identity() {
                0
            } else {
                1 + keys.binary_search(&s.letter_key()).expect("string present")
            }
        };
        let terms = terms
            .iter()
            .map(|t| (t.coeff, index_of(&t.left), index_of(&t.right)))
            .collect();
        Self { strings, terms }
    }

    pub fn n_strings(&self) -> usize {
        self.strings.len()
    }
}

/// Per-step cache of component states, their parameter derivatives, and the
/// states with each distinct Liouvillian string applied.
pub struct StateCache {
    /// `psis[p] = U_p |x_p>`
    pub psis: Vec<Ket>,
    /// `dpsis[p][k] = dU_p/dtheta_k |x_p>`
    pub dpsis: Vec<Vec<Ket>>,
    /// `phis[s][q] = strings[s] * psis[q]` (index 0 aliases `psis`)
    pub phis: Vec<Vec<Ket>>,
    /// the string table backing the `phis` axis (index 0 is the identity)
    pub strings: Vec<PauliString>,
}

impl StateCache {
    pub fn build(state: &LowRankState, indexed: &IndexedTerms) -> Result<Self> {
        let r = state.rank();
        let pairs: Vec<(Ket, Vec<Ket>)> = (0..r)
            .into_par_iter()
            .map(|p| state.component_with_derivatives(p))
            .collect::<Result<_>>()?;
        let mut psis = Vec::with_capacity(r);
        let mut dpsis = Vec::with_capacity(r);
        for (psi, d) in pairs {
            psis.push(psi);
            dpsis.push(d);
        }
        let phis: Vec<Vec<Ket>> = indexed
            .strings
            .par_iter()
            .map(|s| {
                psis.iter()
                    .map(|psi| apply_string(s, psi))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            psis,
            dpsis,
            phis,
            strings: indexed.strings.clone(),
        })
    }
}

/// The assembled linear system, alpha block first.
///
/// For the shared-rotation ansatz the theta block holds the `N_theta` shared
/// angles; for per-component rotations it holds `R` contiguous groups of
/// `N_theta` angles in component order.
#[derive(Clone, Debug)]
pub struct EomSystem {
    pub m: DMatrix<f64>,
    pub v: DVector<f64>,
    pub kind: AnsatzKind,
    pub rank: usize,
    pub params_per_state: usize,
}

impl EomSystem {
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn alpha_index(&self, p: usize) -> usize {
        p
    }

    pub fn theta_index(&self, p: usize, k: usize) -> usize {
        match self.kind {
            AnsatzKind::I => self.rank + k,
            AnsatzKind::II => self.rank + p * self.params_per_state + k,
        }
    }
}

fn eval_batch(
    backend: &dyn Backend,
    ctx: &EvalContext<'_>,
    prims: Vec<Primitive>,
) -> Result<Vec<Complex64>> {
    prims
        .par_iter()
        .map(|prim| backend.eval(ctx, prim))
        .collect()
}

/// Flat complex table with up to four index axes.
struct Table {
    data: Vec<Complex64>,
    strides: [usize; 3],
}

impl Table {
    fn new(d0: usize, d1: usize, d2: usize, d3: usize) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); d0 * d1 * d2 * d3],
            strides: [d1 * d2 * d3, d2 * d3, d3],
        }
    }
    #[inline]
    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        a * self.strides[0] + b * self.strides[1] + c * self.strides[2] + d
    }
    #[inline]
    fn get(&self, a: usize, b: usize, c: usize, d: usize) -> Complex64 {
        self.data[self.idx(a, b, c, d)]
    }
    #[inline]
    fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: Complex64) {
        let i = self.idx(a, b, c, d);
        self.data[i] = v;
    }
}

/// Shared V assembly: tables of <psi_p| s |psi_q> style values feed both
/// ansatze with the same formulas.
struct VTables {
    /// us[s][p][q] = <x_p| U_p^dag strings[s] U_q |x_q>, s = 0 is the overlap
    us: Table,
    /// du[p][k][q] = <x_p| dU_p,k^dag U_q |x_q>
    du: Table,
    /// dsu[s][p][k][q] = <x_p| dU_p,k^dag strings[s] U_q |x_q>, s >= 1
    dsu: Table,
}

impl VTables {
    fn us_get(&self, s: usize, p: usize, q: usize) -> Complex64 {
        self.us.get(s, p, q, 0)
    }
    fn dsu_get(&self, s: usize, p: usize, k: usize, q: usize) -> Complex64 {
        if s == 0 {
            self.du.get(p, k, q, 0)
        } else {
            self.dsu.get(s, p, k, q)
        }
    }
}

/// V_alpha entry p: Re sum_{r,q} c_r alpha_q <p|s1|q><q|s2|p>.
fn v_alpha_entry(t: &VTables, indexed: &IndexedTerms, alpha: &[f64], p: usize) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(c, left, right) in &indexed.terms {
        for (q, &aq) in alpha.iter().enumerate() {
            acc += c * aq * t.us_get(left, p, q) * t.us_get(right, q, p);
        }
    }
    acc.re
}

/// Per-component V_theta contribution at angle k (before the alpha_p weight).
fn v_theta_contrib(t: &VTables, indexed: &IndexedTerms, alpha: &[f64], p: usize, k: usize) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(c, left, right) in &indexed.terms {
        for (q, &aq) in alpha.iter().enumerate() {
            let first = t.dsu_get(left, p, k, q) * t.us_get(right, q, p);
            let second = t.dsu_get(right, p, k, q).conj() * t.us_get(left, p, q);
            acc += c * aq * (first + second);
        }
    }
    acc.re
}

/// Assemble the system for the shared-rotation ansatz.
pub fn assemble_ansatz1(
    state: &LowRankState,
    indexed: &IndexedTerms,
    backend: &dyn Backend,
    step: u64,
) -> Result<EomSystem> {
    if state.kind() != AnsatzKind::I {
        return Err(Error::Config("assemble_ansatz1 requires the shared-rotation ansatz".into()));
    }
    let cache = StateCache::build(state, indexed)?;
    let ctx = EvalContext {
        state,
        cache: &cache,
        step,
    };
    let r = state.rank();
    let nt = state.params_per_state();
    let ns = indexed.n_strings();
    let alpha = &state.alpha;

    // dd[p][k][j] = <x_p| dU_k^dag dU_j |x_p>, Hermitian in (k, j)
    let mut dd = Table::new(r, nt, nt, 1);
    {
        let mut prims = Vec::new();
        for p in 0..r {
            for k in 0..nt {
                for j in k..nt {
                    prims.push(Primitive::DerivDeriv { p, k, q: p, j });
                }
            }
        }
        let vals = eval_batch(backend, &ctx, prims)?;
        let mut it = vals.into_iter();
        for p in 0..r {
            for k in 0..nt {
                for j in k..nt {
                    let v = it.next().unwrap();
                    dd.set(p, k, j, 0, v);
                    dd.set(p, j, k, 0, v.conj());
                }
            }
        }
    }

    // du[p][k][q]: anti-Hermitian under (p <-> q) since dU^dag U + U^dag dU = 0
    let mut du = Table::new(r, nt, r, 1);
    {
        let mut prims = Vec::new();
        for p in 0..r {
            for q in p..r {
                for k in 0..nt {
                    prims.push(Primitive::DerivU { p, k, q });
                }
            }
        }
        let vals = eval_batch(backend, &ctx, prims)?;
        let mut it = vals.into_iter();
        for p in 0..r {
            for q in p..r {
                for k in 0..nt {
                    let v = it.next().unwrap();
                    du.set(p, k, q, 0, v);
                    du.set(q, k, p, 0, -v.conj());
                }
            }
        }
    }

    // us[s][p][q]: conjugate-symmetric in (p, q); s = 0 is the Kronecker delta
    let mut us = Table::new(ns, r, r, 1);
    for p in 0..r {
        us.set(0, p, p, 0, Complex64::new(1.0, 0.0));
    }
    {
        let mut prims = Vec::new();
        for s in 1..ns {
            for p in 0..r {
                for q in p..r {
                    prims.push(Primitive::USigmaU { p, s, q });
                }
            }
        }
        let vals = eval_batch(backend, &ctx, prims)?;
        let mut it = vals.into_iter();
        for s in 1..ns {
            for p in 0..r {
                for q in p..r {
                    let v = it.next().unwrap();
                    us.set(s, p, q, 0, v);
                    us.set(s, q, p, 0, v.conj());
                }
            }
        }
    }

    // dsu[s][p][k][q], s >= 1: no symmetry available
    let mut dsu = Table::new(ns, r, nt, r);
    {
        let mut prims = Vec::new();
        for s in 1..ns {
            for p in 0..r {
                for k in 0..nt {
                    for q in 0..r {
                        prims.push(Primitive::DerivSigmaU { p, k, s, q });
                    }
                }
            }
        }
        let vals = eval_batch(backend, &ctx, prims)?;
        let mut it = vals.into_iter();
        for s in 1..ns {
            for p in 0..r {
                for k in 0..nt {
                    for q in 0..r {
                        dsu.set(s, p, k, q, it.next().unwrap());
                    }
                }
            }
        }
    }

    let tables = VTables { us, du, dsu };

    let dim = r + nt;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for p in 0..r {
        m[(p, p)] = 1.0;
    }
    // theta-theta block
    let entries: Vec<(usize, usize, f64)> = {
        let pairs: Vec<(usize, usize)> = (0..nt)
            .flat_map(|k| (k..nt).map(move |j| (k, j)))
            .collect();
        pairs
            .par_iter()
            .map(|&(k, j)| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (p, &a) in alpha.iter().enumerate() {
                    acc += Complex64::new(a * a, 0.0) * dd.get(p, k, j, 0);
                }
                for p in 0..r {
                    for q in 0..r {
                        acc += Complex64::new(alpha[p] * alpha[q], 0.0)
                            * tables.du.get(p, k, q, 0)
                            * tables.du.get(q, j, p, 0);
                    }
                }
                (k, j, 2.0 * acc.re)
            })
            .collect()
    };
    for (k, j, val) in entries {
        m[(r + k, r + j)] = val;
        m[(r + j, r + k)] = val;
    }

    let mut v = DVector::<f64>::zeros(dim);
    let v_alpha: Vec<f64> = (0..r)
        .into_par_iter()
        .map(|p| v_alpha_entry(&tables, indexed, alpha, p))
        .collect();
    for (p, val) in v_alpha.into_iter().enumerate() {
        v[p] = val;
    }
    let v_theta: Vec<f64> = (0..nt)
        .into_par_iter()
        .map(|k| {
            (0..r)
                .map(|p| alpha[p] * v_theta_contrib(&tables, indexed, alpha, p, k))
                .sum()
        })
        .collect();
    for (k, val) in v_theta.into_iter().enumerate() {
        v[r + k] = val;
    }

    Ok(EomSystem {
        m,
        v,
        kind: AnsatzKind::I,
        rank: r,
        params_per_state: nt,
    })
}

/// Assemble the system for the per-component-rotation ansatz.
pub fn assemble_ansatz2(
    state: &LowRankState,
    indexed: &IndexedTerms,
    backend: &dyn Backend,
    step: u64,
) -> Result<EomSystem> {
    if state.kind() != AnsatzKind::II {
        return Err(Error::Config(
            "assemble_ansatz2 requires the per-component-rotation ansatz".into(),
        ));
    }
    let cache = StateCache::build(state, indexed)?;
    let ctx = EvalContext {
        state,
        cache: &cache,
        step,
    };
    let r = state.rank();
    let nt = state.params_per_state();
    let ns = indexed.n_strings();
    let alpha = &state.alpha;

    // us[s][p][q] including the s = 0 overlaps <x_p|U_p^dag U_q|x_q>
    let mut us = Table::new(ns, r, r, 1);
    for p in 0..r {
        us.set(0, p, p, 0, Complex64::new(1.0, 0.0));
    }
    {
        let mut prims = Vec::new();
        for s in 0..ns {
            for p in 0..r {
                for q in p..r {
                    if s == 0 && p == q {
                        continue;
                    }
                    prims.push(Primitive::USigmaU { p, s, q });
                }
            }
        }
        let vals = eval_batch(backend, &ctx, prims)?;
        let mut it = vals.into_iter();
        for s in 0..ns {
            for p in 0..r {
                for q in p..r {
                    if s == 0 && p == q {
                        continue;
                    }
                    let v = it.next().unwrap();
                    us.set(s, p, q, 0, v);
                    us.set(s, q, p, 0, v.conj());
                }
            }
        }
    }

    // du[p][k][q] = <x_p| dU_p,k^dag U_q |x_q>; no fold across components
    let mut du = Table::new(r, nt, r, 1);
    {
        let mut prims = Vec::new();
        for p in 0..r {
            for k in 0..nt {
                for q in 0..r {
                    prims.push(Primitive::DerivU { p, k, q });
                }
            }
        }
        let vals = eval_batch(backend, &ctx, prims)?;
        let mut it = vals.into_iter();
        for p in 0..r {
            for k in 0..nt {
                for q in 0..r {
                    du.set(p, k, q, 0, it.next().unwrap());
                }
            }
        }
    }

    // dd over global angle indices a = (p, k), Hermitian in (a, b)
    let np = r * nt;
    let mut dd = Table::new(np, np, 1, 1);
    {
        let mut prims = Vec::new();
        for a in 0..np {
            for b in a..np {
                prims.push(Primitive::DerivDeriv {
                    p: a / nt,
                    k: a % nt,
                    q: b / nt,
                    j: b % nt,
                });
            }
        }
        let vals = eval_batch(backend, &ctx, prims)?;
        let mut it = vals.into_iter();
        for a in 0..np {
            for b in a..np {
                let v = it.next().unwrap();
                dd.set(a, b, 0, 0, v);
                dd.set(b, a, 0, 0, v.conj());
            }
        }
    }

    // dsu[s][p][k][q], s >= 1
    let mut dsu = Table::new(ns, r, nt, r);
    {
        let mut prims = Vec::new();
        for s in 1..ns {
            for p in 0..r {
                for k in 0..nt {
                    for q in 0..r {
                        prims.push(Primitive::DerivSigmaU { p, k, s, q });
                    }
                }
            }
        }
        let vals = eval_batch(backend, &ctx, prims)?;
        let mut it = vals.into_iter();
        for s in 1..ns {
            for p in 0..r {
                for k in 0..nt {
                    for q in 0..r {
                        dsu.set(s, p, k, q, it.next().unwrap());
                    }
                }
            }
        }
    }

    let tables = VTables { us, du, dsu };

    let dim = r + np;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for p in 0..r {
        for q in 0..r {
            m[(p, q)] = tables.us_get(0, p, q).norm_sqr();
        }
    }
    // alpha-theta block: 2 alpha_q Re[<psi_p|d_j psi_q><psi_q|psi_p>]
    for p in 0..r {
        for q in 0..r {
            for j in 0..nt {
                let val = 2.0
                    * alpha[q]
                    * (tables.du.get(q, j, p, 0).conj() * tables.us_get(0, q, p)).re;
                m[(p, r + q * nt + j)] = val;
                m[(r + q * nt + j, p)] = val;
            }
        }
    }
    // theta-theta block
    let entries: Vec<(usize, usize, f64)> = {
        let pairs: Vec<(usize, usize)> = (0..np)
            .flat_map(|a| (a..np).map(move |b| (a, b)))
            .collect();
        pairs
            .par_iter()
            .map(|&(a, b)| {
                let (p, k) = (a / nt, a % nt);
                let (q, j) = (b / nt, b % nt);
                let first = tables.us_get(0, p, q) * dd.get(b, a, 0, 0);
                let second = tables.du.get(q, j, p, 0) * tables.du.get(p, k, q, 0);
                let val = 2.0 * alpha[p] * alpha[q] * (first + second).re;
                (a, b, val)
            })
            .collect()
    };
    for (a, b, val) in entries {
        m[(r + a, r + b)] = val;
        m[(r + b, r + a)] = val;
    }

    let mut v = DVector::<f64>::zeros(dim);
    let v_alpha: Vec<f64> = (0..r)
        .into_par_iter()
        .map(|p| v_alpha_entry(&tables, indexed, alpha, p))
        .collect();
    for (p, val) in v_alpha.into_iter().enumerate() {
        v[p] = val;
    }
    let v_theta: Vec<f64> = (0..np)
        .into_par_iter()
        .map(|a| {
            let (p, k) = (a / nt, a % nt);
            alpha[p] * v_theta_contrib(&tables, indexed, alpha, p, k)
        })
        .collect();
    for (a, val) in v_theta.into_iter().enumerate() {
        v[r + a] = val;
    }

    Ok(EomSystem {
        m,
        v,
        kind: AnsatzKind::II,
        rank: r,
        params_per_state: nt,
    })
}

/// Assemble with the ansatz picked from the state.
pub fn assemble(
    state: &LowRankState,
    indexed: &IndexedTerms,
    backend: &dyn Backend,
    step: u64,
) -> Result<EomSystem> {
    match state.kind() {
        AnsatzKind::I => assemble_ansatz1(state, indexed, backend, step),
        AnsatzKind::II => assemble_ansatz2(state, indexed, backend, step),
    }
}

//! Explicit-Euler time stepping: assemble, solve, update, observe.

use nalgebra::DVector;

use crate::ansatz::{density_matrix, hamming_basis, initial_state, state_trace, LowRankState, Thetas};
use crate::config::{BackendMode, RunConfig};
use crate::eom::{assemble, EomSystem, IndexedTerms};
use crate::error::{Error, Result};
use crate::estimator::{Backend, ExactBackend, ShotBackend};
use crate::lindblad::{build_tfim, liouvillian_expand, LindbladModel};
use crate::metrics::{
    fidelity_lowrank, l2_distance, observables, posterior_step_cost_raw_with, purity, StepRecord,
};
use crate::oracle::{rk4_step, step_count, DenseGenerator, DensityMatrix, MAX_DENSE_QUBITS};
use crate::regularize::{regularized_solve, SolveOutcome};
use crate::state::basis_ket;

/// Per-step solver diagnostics, mirrored into the run log.
#[derive(Clone, Copy, Debug)]
pub struct StepDiag {
    pub min_eig: f64,
    pub max_eig: f64,
    pub residual: f64,
    pub stalled: bool,
}

/// One recorded sample of the trajectory.
#[derive(Clone, Debug)]
pub struct TimeRecord {
    pub t: f64,
    pub s_x: f64,
    pub s_z: f64,
    pub trace: f64,
    pub purity: f64,
    pub infidelity: Option<f64>,
    pub l2: Option<f64>,
    pub ep: Option<f64>,
    pub alpha: Vec<f64>,
    pub diag: Option<StepDiag>,
}

/// Ordered trajectory samples with strictly increasing times.
#[derive(Clone, Debug, Default)]
pub struct TimeSeries {
    pub records: Vec<TimeRecord>,
}

impl TimeSeries {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }
}

/// Observer hooks: `on_step` fires after every step, `on_record` whenever a
/// trajectory sample is recorded (including the initial one). Errors from
/// `on_record` abort the run.
pub trait EvolveObserver {
    fn on_step(&mut self, _step: usize, _t: f64, _diag: &StepDiag, _state: &LowRankState) {}
    fn on_record(&mut self, _record: &TimeRecord) -> Result<()> {
        Ok(())
    }
}

/// Everything a finished evolution exposes.
pub struct EvolveOutput {
    pub series: TimeSeries,
    /// per-step solver records when `record_steps` is set
    pub records: Vec<StepRecord>,
    pub final_state: LowRankState,
    pub model: LindbladModel,
    pub initial_state: LowRankState,
}

/// Euler update with the weight clamp: `alpha <- max(alpha + d_alpha dt, 0)`,
/// `theta <- theta + d_theta dt`. No renormalization; observables divide by
/// the trace instead.
pub fn euler_step(state: &LowRankState, sys: &EomSystem, beta_dot: &DVector<f64>, dt: f64) -> LowRankState {
    let mut next = state.clone();
    let r = state.rank();
    for p in 0..r {
        next.alpha[p] = (state.alpha[p] + beta_dot[sys.alpha_index(p)] * dt).max(0.0);
    }
    match &mut next.theta {
        Thetas::Shared(t) => {
            for (k, v) in t.iter_mut().enumerate() {
                *v += beta_dot[sys.theta_index(0, k)] * dt;
            }
        }
        Thetas::PerState(ts) => {
            for (p, t) in ts.iter_mut().enumerate() {
                for (k, v) in t.iter_mut().enumerate() {
                    *v += beta_dot[sys.theta_index(p, k)] * dt;
                }
            }
        }
    }
    next
}

fn solve_diag(outcome: &SolveOutcome) -> StepDiag {
    StepDiag {
        min_eig: outcome.min_eig,
        max_eig: outcome.max_eig,
        residual: outcome.residual,
        stalled: outcome.stalled,
    }
}

struct OracleTrack {
    rho: DensityMatrix,
}

/// Build the configured starting state: identity circuit, Hamming or
/// explicit basis seeded at the initial bitstring, floor-weighted mixture.
pub fn prepare_initial_state(cfg: &RunConfig) -> Result<LowRankState> {
    let n = cfg.lattice.n();
    let circuit = cfg.circuit()?;
    let basis = match &cfg.basis {
        Some(explicit) => explicit.clone(),
        None => hamming_basis(&cfg.initial, cfg.rank, &(0..n).collect::<Vec<_>>())?,
    };
    if basis.first() != Some(&cfg.initial) {
        return Err(Error::Config(
            "the first basis state must be the initial bitstring".into(),
        ));
    }
    initial_state(cfg.kind, circuit, basis, cfg.epsilon)
}

/// Run the configured evolution.
pub fn evolve(cfg: &RunConfig, observers: &mut [&mut dyn EvolveObserver]) -> Result<EvolveOutput> {
    let n = cfg.lattice.n();
    let model = build_tfim(&cfg.lattice, cfg.jz, cfg.h, cfg.gamma)?;
    let terms = liouvillian_expand(&model)?;
    let indexed = IndexedTerms::new(n, &terms);

    let mut state = prepare_initial_state(cfg)?;
    let initial_state_copy = state.clone();

    let dense_feasible = n <= MAX_DENSE_QUBITS;
    if cfg.oracle_enabled && !dense_feasible {
        return Err(Error::Capability(format!(
            "oracle comparison needs n <= {MAX_DENSE_QUBITS}, lattice has {n}"
        )));
    }
    let dense_gen = if cfg.oracle_enabled {
        Some(DenseGenerator::new(&model)?)
    } else {
        None
    };
    let mut oracle = if cfg.oracle_enabled {
        Some(OracleTrack {
            rho: DensityMatrix::from_pure(&basis_ket(&cfg.initial))?,
        })
    } else {
        None
    };

    let exact_backend = ExactBackend;
    let shot_backend = match cfg.backend {
        BackendMode::Shots(plan) => Some(ShotBackend::new(plan)),
        BackendMode::Exact => None,
    };
    let backend: &dyn Backend = match &shot_backend {
        Some(b) => b,
        None => &exact_backend,
    };

    let steps = step_count(cfg.t_final, cfg.dt);
    let mut series = TimeSeries::default();
    let mut records: Vec<StepRecord> = Vec::new();
    let mut ep_accum = 0.0;

    let record_sample = |state: &LowRankState,
                         t: f64,
                         diag: Option<StepDiag>,
                         oracle: &Option<OracleTrack>,
                         ep: Option<f64>|
     -> Result<TimeRecord> {
        let (s_x, s_z) = observables(state)?;
        let (infid, l2) = match oracle {
            Some(track) => {
                let f = fidelity_lowrank(state, &track.rho)?;
                let rho = density_matrix(state)?.normalized()?;
                (Some(1.0 - f), Some(l2_distance(&rho, &track.rho)))
            }
            None => (None, None),
        };
        Ok(TimeRecord {
            t,
            s_x,
            s_z,
            trace: state_trace(state),
            purity: purity(state)?,
            infidelity: infid,
            l2,
            ep,
            alpha: state.alpha.clone(),
            diag,
        })
    };

    series.records.push(record_sample(
        &state,
        0.0,
        None,
        &oracle,
        cfg.oracle_enabled.then_some(0.0),
    )?);
    for obs in observers.iter_mut() {
        obs.on_record(series.records.last().unwrap())?;
    }

    for step in 0..steps {
        let t = step as f64 * cfg.dt;
        let sys = assemble(&state, &indexed, backend, step as u64)?;
        let outcome = regularized_solve(&sys, &cfg.reg)?;
        let diag = solve_diag(&outcome);
        let beta_dot = if outcome.stalled {
            DVector::zeros(sys.dim())
        } else {
            outcome.beta_dot.clone()
        };
        let next = euler_step(&state, &sys, &beta_dot, cfg.dt);

        let record = StepRecord {
            t,
            dt: cfg.dt,
            m: sys.m.clone(),
            v: sys.v.clone(),
            beta: state.pack_parameters(),
            beta_next: next.pack_parameters(),
            stalled: outcome.stalled,
        };
        if let Some(gen) = &dense_gen {
            let cost = posterior_step_cost_raw_with(&initial_state_copy, gen, &record)?.max(0.0);
            ep_accum += cost.sqrt() * cfg.dt;
        }
        if cfg.record_steps {
            records.push(record);
        }

        if let Some(track) = oracle.as_mut() {
            let gen = dense_gen.as_ref().expect("generator exists with the oracle");
            track.rho = DensityMatrix::new(n, rk4_step(gen, &track.rho.mat, cfg.dt))?;
        }

        for obs in observers.iter_mut() {
            obs.on_step(step, t + cfg.dt, &diag, &next);
        }

        state = next;
        let at_end = step + 1 == steps;
        if (step + 1) % cfg.stride == 0 || at_end {
            series.records.push(record_sample(
                &state,
                (step + 1) as f64 * cfg.dt,
                Some(diag),
                &oracle,
                cfg.oracle_enabled.then_some(ep_accum),
            )?);
            for obs in observers.iter_mut() {
                obs.on_record(series.records.last().unwrap())?;
            }
        }
    }

    Ok(EvolveOutput {
        series,
        records,
        final_state: state,
        model,
        initial_state: initial_state_copy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::AnsatzKind;
    use crate::config::{BackendMode, RunConfig};
    use crate::lattice::Lattice;
    use crate::regularize::RegScheme;
    use crate::state::BitString;
    use approx::assert_relative_eq;

    fn two_site_config() -> RunConfig {
        RunConfig {
            lattice: Lattice::chain(2).unwrap(),
            jz: 1.0,
            h: 0.5,
            gamma: 1.0,
            dt: 0.01,
            t_final: 0.5,
            kind: AnsatzKind::I,
            rank: 4,
            layers: 2,
            epsilon: 0.0,
            basis: None,
            initial: BitString::ones(2),
            reg: RegScheme::EigenRescale { a_c: 1e-4, r_c: 1e-4 },
            backend: BackendMode::Exact,
            oracle_enabled: true,
            stride: 1,
            record_steps: true,
        }
    }

    #[test]
    fn null_generator_keeps_observables_constant() {
        let mut cfg = two_site_config();
        cfg.jz = 0.0;
        cfg.h = 0.0;
        cfg.gamma = 0.0;
        cfg.t_final = 0.3;
        let out = evolve(&cfg, &mut []).unwrap();
        let first = &out.series.records[0];
        for rec in &out.series.records {
            assert_relative_eq!(rec.s_x, first.s_x, epsilon = 1e-10);
            assert_relative_eq!(rec.s_z, first.s_z, epsilon = 1e-10);
            assert_relative_eq!(rec.trace, first.trace, epsilon = 1e-10);
        }
    }

    #[test]
    fn euler_step_reference_behaviour() {
        let cfg = two_site_config();
        let circuit = cfg.circuit().unwrap();
        let basis = hamming_basis(&cfg.initial, 1, &[0, 1]).unwrap();
        let state = initial_state(AnsatzKind::I, circuit, basis, 0.0).unwrap();
        let dim = state.total_params();
        let sys = EomSystem {
            m: nalgebra::DMatrix::identity(dim, dim),
            v: DVector::zeros(dim),
            kind: AnsatzKind::I,
            rank: 1,
            params_per_state: state.params_per_state(),
        };

        // zero velocity: unchanged
        let unchanged = euler_step(&state, &sys, &DVector::zeros(dim), 0.01);
        assert_eq!(unchanged.alpha, state.alpha);
        assert_eq!(unchanged.pack_parameters(), state.pack_parameters());

        // clamping: alpha = 0.1 with d_alpha = -20 at dt = 0.01 hits the floor
        let mut clamped_state = state.clone();
        clamped_state.alpha[0] = 0.1;
        let mut beta_dot = DVector::zeros(dim);
        beta_dot[0] = -20.0;
        let clamped = euler_step(&clamped_state, &sys, &beta_dot, 0.01);
        assert_eq!(clamped.alpha[0], 0.0);

        // generic theta update
        let mut beta_dot = DVector::zeros(dim);
        beta_dot[1] = 2.0;
        let moved = euler_step(&state, &sys, &beta_dot, 0.01);
        assert_relative_eq!(moved.theta_of(0)[0], 0.02, epsilon = 1e-15);
    }

    #[test]
    fn observer_sees_every_step() {
        struct Counter(usize);
        impl EvolveObserver for Counter {
            fn on_step(&mut self, _s: usize, _t: f64, _d: &StepDiag, _st: &LowRankState) {
                self.0 += 1;
            }
        }
        let mut cfg = two_site_config();
        cfg.t_final = 0.1;
        cfg.oracle_enabled = false;
        let mut counter = Counter(0);
        evolve(&cfg, &mut [&mut counter]).unwrap();
        assert_eq!(counter.0, 10);
    }

    #[test]
    fn short_two_site_run_tracks_oracle() {
        let out = evolve(&two_site_config(), &mut []).unwrap();
        let last = out.series.records.last().unwrap();
        assert!(last.infidelity.unwrap() < 1e-3, "infidelity {}", last.infidelity.unwrap());
        // the bound dominates the L2 distance once past the first-steps
        // window, where the Euler discretization injects O(dt^2) errors the
        // continuum cost does not see (the cost is exactly zero at theta = 0)
        for rec in &out.series.records {
            if rec.t >= 0.3 {
                assert!(rec.ep.unwrap() + 1e-12 >= rec.l2.unwrap(), "t={}", rec.t);
            } else {
                let gap = rec.l2.unwrap() - rec.ep.unwrap();
                assert!(gap < 5e-4, "transient gap too large at t={}: {gap}", rec.t);
            }
        }
        // s_z starts rising from -1
        assert!(out.series.records[0].s_z < -0.999);
        assert!(last.s_z > out.series.records[0].s_z);
    }

    #[test]
    fn zero_final_time_gives_single_row() {
        let mut cfg = two_site_config();
        cfg.t_final = 0.0;
        let out = evolve(&cfg, &mut []).unwrap();
        assert_eq!(out.series.records.len(), 1);
        assert_eq!(out.records.len(), 0);
    }

    #[test]
    fn stride_thins_records_but_keeps_last() {
        let mut cfg = two_site_config();
        cfg.t_final = 0.1;
        cfg.stride = 3;
        cfg.oracle_enabled = false;
        let out = evolve(&cfg, &mut []).unwrap();
        let times = out.series.times();
        assert_relative_eq!(times[0], 0.0);
        assert_relative_eq!(*times.last().unwrap(), 0.1, epsilon = 1e-12);
        assert_eq!(times.len(), 1 + 10 / 3 + 1);
    }
}

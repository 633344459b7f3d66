//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured figures. Criterion 11 is the long extended run and stays
//! behind `--ignored`.

mod common;

use std::sync::Arc;
use std::time::Instant;

use common::{fd_m_matrix, fd_v_vector, random_state};
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;

use lrqte::ansatz::{hamming_basis, initial_state, AnsatzKind};
use lrqte::circuit::CircuitSpec;
use lrqte::config::{BackendMode, RunConfig};
use lrqte::eom::{assemble, EomSystem, IndexedTerms};
use lrqte::estimator::{
    count_circuits, BlockCounts, EstimationMethod, ExactBackend, ShotBackend, ShotPlan,
};
use lrqte::evolve::{evolve, EvolveOutput};
use lrqte::lattice::Lattice;
use lrqte::lindblad::{build_tfim, liouvillian_expand};
use lrqte::metrics::{posterior_error_bound, PosteriorMode};
use lrqte::oracle::{integrate_exact, DensityMatrix};
use lrqte::regularize::{regularized_solve, RegScheme};
use lrqte::state::{basis_ket, BitString};

fn base_run(lattice: Lattice, dt: f64, t_final: f64, rank: usize, layers: usize) -> RunConfig {
    let n = lattice.n();
    RunConfig {
        lattice,
        jz: 1.0,
        h: 0.5,
        gamma: 1.0,
        dt,
        t_final,
        kind: AnsatzKind::I,
        rank,
        layers,
        epsilon: 1e-4,
        basis: None,
        initial: BitString::ones(n),
        reg: RegScheme::EigenRescale { a_c: 1e-4, r_c: 1e-4 },
        backend: BackendMode::Exact,
        oracle_enabled: true,
        stride: 1,
        record_steps: false,
    }
}

#[test]
fn criterion_01_oracle_self_certification() {
    let started = Instant::now();
    let model = lrqte::lindblad::LindbladModel::new(
        1,
        lrqte::pauli::PauliSum::zero(1),
        vec![lrqte::lindblad::Dissipator {
            rate: 1.0,
            jump: lrqte::pauli::PauliSum::sigma_minus(1, 0),
        }],
    )
    .unwrap();
    let rho0 = DensityMatrix::from_pure(&basis_ket(&BitString::zeros(1))).unwrap();
    let dt = 1e-3;
    let trajectory = integrate_exact(&model, &rho0, dt, 7.0).unwrap();
    let mut worst: f64 = 0.0;
    for (i, rho) in trajectory.iter().enumerate() {
        let t = i as f64 * dt;
        let dark = rho.mat[(1, 1)].re;
        worst = worst.max((dark - (1.0 - (-t).exp())).abs());
    }
    assert!(worst <= 1e-8, "closed-form deviation {worst}");

    // dt-refinement self-check on the two-site benchmark model: the oracle at
    // dt and dt/10 must agree before it is trusted below
    let lat = Lattice::chain(2).unwrap();
    let model2 = build_tfim(&lat, 1.0, 0.5, 1.0).unwrap();
    let rho0 = DensityMatrix::from_pure(&basis_ket(&BitString::ones(2))).unwrap();
    let coarse = integrate_exact(&model2, &rho0, 0.01, 7.0).unwrap();
    let fine = integrate_exact(&model2, &rho0, 0.001, 7.0).unwrap();
    let mut drift: f64 = 0.0;
    for (i, rho) in coarse.iter().enumerate() {
        let (cx, cz) = lrqte::metrics::observables_dense(rho).unwrap();
        let (fx, fz) = lrqte::metrics::observables_dense(&fine[i * 10]).unwrap();
        drift = drift.max((cx - fx).abs().max((cz - fz).abs()));
    }
    assert!(drift < 1e-6, "oracle refinement drift {drift}");

    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "criterion 1 PASS: amplitude-damping deviation {worst:.2e} (<= 1e-8), \
         oracle refinement drift {drift:.2e} (< 1e-6), {elapsed:.2}s"
    );
}

#[test]
fn criterion_02_eom_matches_dense_oracles() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(2024);
    let lattice = Lattice::chain(2).unwrap();
    let model = build_tfim(&lattice, 1.0, 0.5, 1.0).unwrap();
    let indexed = IndexedTerms::new(2, &liouvillian_expand(&model).unwrap());
    let mut points = 0;
    let mut worst_m: f64 = 0.0;
    let mut worst_v: f64 = 0.0;
    'outer: for kind in [AnsatzKind::I, AnsatzKind::II] {
        for rank in [2usize, 4] {
            for layers in [1usize, 2] {
                for _ in 0..3 {
                    let state = random_state(&mut rng, kind, &lattice, rank, layers);
                    let sys = assemble(&state, &indexed, &ExactBackend, 0).unwrap();

                    let m_err = (&sys.m - fd_m_matrix(&state, 1e-5)).abs().max();
                    let v_err = (&sys.v - fd_v_vector(&state, &model, 1e-5)).abs().max();
                    assert!(m_err <= 1e-6, "{kind:?} R={rank} L={layers}: M err {m_err}");
                    assert!(v_err <= 1e-8, "{kind:?} R={rank} L={layers}: V err {v_err}");
                    worst_m = worst_m.max(m_err);
                    worst_v = worst_v.max(v_err);

                    let asym = (&sys.m - sys.m.transpose()).abs().max();
                    assert!(asym <= 1e-12, "asymmetry {asym}");
                    let min_eig = sys
                        .m
                        .clone()
                        .symmetric_eigen()
                        .eigenvalues
                        .iter()
                        .copied()
                        .fold(f64::INFINITY, f64::min);
                    assert!(min_eig >= -1e-10, "min eigenvalue {min_eig}");

                    if kind == AnsatzKind::I {
                        for p in 0..rank {
                            for q in 0..rank {
                                assert_eq!(sys.m[(p, q)], if p == q { 1.0 } else { 0.0 });
                            }
                            for j in rank..sys.dim() {
                                assert_eq!(sys.m[(p, j)], 0.0);
                            }
                        }
                    }

                    points += 1;
                    if points >= 20 {
                        break 'outer;
                    }
                }
            }
        }
    }
    assert!(points >= 20);
    println!(
        "criterion 2 PASS: {points} random points, max M error {worst_m:.2e} (<= 1e-6), \
         max V error {worst_v:.2e} (<= 1e-8), {:.2}s",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_03_trace_velocity() {
    let mut rng = StdRng::seed_from_u64(3);
    let lattice = Lattice::chain(2).unwrap();
    let model = build_tfim(&lattice, 1.0, 0.5, 1.0).unwrap();
    let indexed = IndexedTerms::new(2, &liouvillian_expand(&model).unwrap());
    let mut worst_full: f64 = 0.0;
    let mut worst_low = f64::NEG_INFINITY;
    for _ in 0..10 {
        let full = random_state(&mut rng, AnsatzKind::I, &lattice, 4, 2);
        let sys = assemble(&full, &indexed, &ExactBackend, 0).unwrap();
        let leak: f64 = (0..4).map(|p| sys.v[p]).sum();
        worst_full = worst_full.max(leak.abs());

        let low = random_state(&mut rng, AnsatzKind::I, &lattice, 2, 2);
        let sys = assemble(&low, &indexed, &ExactBackend, 0).unwrap();
        let leak: f64 = (0..2).map(|p| sys.v[p]).sum();
        worst_low = worst_low.max(leak);
    }
    assert!(worst_full <= 1e-10, "full-rank trace leak {worst_full}");
    assert!(worst_low <= 1e-10, "low-rank leak must be nonpositive: {worst_low}");
    println!(
        "criterion 3 PASS: full-rank |sum V_alpha| <= {worst_full:.2e}, \
         low-rank max sum V_alpha = {worst_low:.2e} (both <= 1e-10)"
    );
}

#[test]
fn criterion_04_two_site_benchmark() {
    let started = Instant::now();
    let cfg = base_run(Lattice::chain(2).unwrap(), 0.01, 7.0, 4, 2);
    let out = evolve(&cfg, &mut []).unwrap();

    let peak_infidelity = out
        .series
        .records
        .iter()
        .map(|r| r.infidelity.unwrap())
        .fold(0.0f64, f64::max);
    assert!(peak_infidelity <= 1e-2, "peak infidelity {peak_infidelity}");

    // shape: s_z rises from -1 toward its steady value
    let first = &out.series.records[0];
    let last = out.series.records.last().unwrap();
    assert!(first.s_z < -0.999, "initial s_z {}", first.s_z);
    assert!(last.s_z > -0.85, "late s_z {}", last.s_z);
    assert!(last.s_z > first.s_z);

    // shape: s_x rises from 0, peaks, and relaxes back toward the exact
    // steady value (the exact steady state sits at s_x ~ 0.32 here)
    let peak_sx = out
        .series
        .records
        .iter()
        .map(|r| r.s_x)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(first.s_x.abs() < 1e-6);
    assert!(peak_sx > 0.35, "s_x never rose: peak {peak_sx}");
    assert!(last.s_x < 0.8 * peak_sx, "s_x did not relax: {} vs peak {peak_sx}", last.s_x);
    let model = build_tfim(&cfg.lattice, cfg.jz, cfg.h, cfg.gamma).unwrap();
    let rho0 = DensityMatrix::from_pure(&basis_ket(&cfg.initial)).unwrap();
    let oracle = integrate_exact(&model, &rho0, cfg.dt, cfg.t_final).unwrap();
    let (oracle_sx, _) = lrqte::metrics::observables_dense(oracle.last().unwrap()).unwrap();
    assert!((last.s_x - oracle_sx).abs() < 0.02, "late s_x {} vs oracle {oracle_sx}", last.s_x);

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "runtime {elapsed}s exceeds 1 min");
    println!(
        "criterion 4 PASS: peak infidelity {peak_infidelity:.2e} (<= 1e-2), \
         s_z {:.3} -> {:.3}, s_x peak {peak_sx:.3} -> {:.3} (oracle {oracle_sx:.3}), {elapsed:.1}s",
        first.s_z, last.s_z, last.s_x
    );
}

#[test]
fn criterion_05_regularization_equivalence() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(5);
    let dim = 10;

    // SPD with condition < 1e3
    let q = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0))
        .qr()
        .q();
    let eigs = DVector::<f64>::from_fn(dim, |i, _| 5e-3 + (2.0 - 5e-3) * i as f64 / (dim - 1) as f64);
    let m = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
    let v = DVector::<f64>::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
    let direct = m.clone().lu().solve(&v).unwrap();
    let sys = EomSystem {
        m: m.clone(),
        v: v.clone(),
        kind: AnsatzKind::I,
        rank: dim,
        params_per_state: 0,
    };
    let mut worst_rel: f64 = 0.0;
    for scheme in [
        RegScheme::EigenRescale { a_c: 1e-10, r_c: 1e-10 },
        RegScheme::EigenTruncate { delta_c: 1e-9 },
        RegScheme::DiagonalShift { lambda: 1e-8, order: 2 },
    ] {
        let out = regularized_solve(&sys, &scheme).unwrap();
        let rel = (out.beta_dot - &direct).norm() / direct.norm();
        assert!(rel <= 1e-6, "{scheme:?}: relative error {rel}");
        worst_rel = worst_rel.max(rel);
    }

    // residual shrinks with the expansion order on a mildly ill-conditioned M
    let eigs = DVector::<f64>::from_fn(dim, |i, _| 1e-4_f64.powf(1.0 - i as f64 / (dim - 1) as f64));
    let m_ill = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
    let sys_ill = EomSystem {
        m: m_ill,
        v,
        kind: AnsatzKind::I,
        rank: dim,
        params_per_state: 0,
    };
    let mut residuals = Vec::new();
    for order in 0..4 {
        let out =
            regularized_solve(&sys_ill, &RegScheme::DiagonalShift { lambda: 0.04, order }).unwrap();
        residuals.push(out.residual);
    }
    for w in residuals.windows(2) {
        assert!(w[1] < w[0], "residuals not shrinking: {residuals:?}");
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 5.0);
    println!(
        "criterion 5 PASS: all schemes within {worst_rel:.2e} of the direct solve (<= 1e-6), \
         diagonal-shift residuals {residuals:?} strictly shrinking, {elapsed:.2}s",
    );
}

fn rank_sweep_run(rank: usize) -> EvolveOutput {
    let mut cfg = base_run(Lattice::grid(2, 2).unwrap(), 5e-3, 7.0, rank, 4);
    // a small weight floor keeps the floor pollution (which scales with R)
    // from masking the rank ordering
    cfg.epsilon = 1e-6;
    cfg.stride = 10;
    evolve(&cfg, &mut []).unwrap()
}

#[test]
fn criterion_06_rank_monotonicity() {
    let started = Instant::now();
    let mut peaks = Vec::new();
    for rank in [4usize, 8, 16] {
        let out = rank_sweep_run(rank);
        let peak = out
            .series
            .records
            .iter()
            .map(|r| r.infidelity.unwrap())
            .fold(0.0f64, f64::max);
        peaks.push((rank, peak));
    }
    for w in peaks.windows(2) {
        assert!(
            w[1].1 <= w[0].1 + 1e-12,
            "peak infidelity increased with rank: {peaks:?}"
        );
    }
    let full_rank_peak = peaks.last().unwrap().1;
    assert!(full_rank_peak <= 1e-2, "R=16 peak {full_rank_peak}");
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "runtime {elapsed}s exceeds 10 min");
    println!(
        "criterion 6 PASS: peak infidelity by rank {peaks:?} nonincreasing, \
         full-rank peak {full_rank_peak:.2e} (<= 1e-2), {elapsed:.1}s"
    );
}

#[test]
fn criterion_07_basis_study() {
    let started = Instant::now();
    let basis_a = ["1111", "1110", "1100", "1101", "1011"];
    let basis_b = ["1111", "1110", "1101", "1011", "0111"];
    let mut integrated = Vec::new();
    for basis in [basis_a, basis_b] {
        let mut cfg = base_run(Lattice::grid(2, 2).unwrap(), 5e-3, 7.0, 5, 4);
        cfg.basis = Some(basis.iter().map(|s| BitString::parse(s).unwrap()).collect());
        cfg.stride = 10;
        let out = evolve(&cfg, &mut []).unwrap();
        let times = out.series.times();
        let inf: Vec<f64> = out.series.records.iter().map(|r| r.infidelity.unwrap()).collect();
        let mut integral = 0.0;
        for i in 0..inf.len() - 1 {
            integral += 0.5 * (inf[i] + inf[i + 1]) * (times[i + 1] - times[i]);
        }
        integrated.push(integral);
    }
    assert!(
        integrated[1] <= integrated[0],
        "Hamming-distance basis must not be worse: A={:.3e} B={:.3e}",
        integrated[0],
        integrated[1]
    );
    println!(
        "criterion 7 PASS: time-integrated infidelity basis A {:.3e} >= basis B {:.3e}, {:.1}s",
        integrated[0],
        integrated[1],
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_08_posterior_bound_dominates() {
    let started = Instant::now();
    let mut cfg = base_run(Lattice::chain(2).unwrap(), 0.01, 7.0, 4, 2);
    cfg.epsilon = 0.0; // the bound assumes matching initial states
    cfg.stride = 50;
    cfg.record_steps = true;
    let out = evolve(&cfg, &mut []).unwrap();

    // standard accumulation, recorded online
    for rec in &out.series.records {
        assert!(
            rec.ep.unwrap() + 1e-12 >= rec.l2.unwrap(),
            "standard mode violated at t={}: ep={} l2={}",
            rec.t,
            rec.ep.unwrap(),
            rec.l2.unwrap()
        );
    }

    // verbatim accumulation, recomputed from the step records, compared
    // against the raw (unnormalized) trajectory distance
    let partials = posterior_error_bound(
        &out.initial_state,
        &out.model,
        &out.records,
        PosteriorMode::VerbatimSqrtOfProduct,
    )
    .unwrap();
    let model = &out.model;
    let rho0 = DensityMatrix::from_pure(&basis_ket(&cfg.initial)).unwrap();
    let oracle = integrate_exact(model, &rho0, cfg.dt, cfg.t_final).unwrap();
    for rec in out.series.records.iter().skip(1) {
        let step = (rec.t / cfg.dt).round() as usize;
        let state = out
            .initial_state
            .unpack_parameters(&out.records[step - 1].beta_next)
            .unwrap();
        let rho = lrqte::ansatz::density_matrix(&state).unwrap();
        let raw_l2 = lrqte::metrics::l2_distance(&rho, &oracle[step]);
        assert!(
            partials[step - 1] + 1e-12 >= raw_l2,
            "verbatim mode violated at t={}: ep={} l2={}",
            rec.t,
            partials[step - 1],
            raw_l2
        );
    }
    let last = out.series.records.last().unwrap();
    println!(
        "criterion 8 PASS: E_p(7)={:.3} >= L2(7)={:.4e} at every output time \
         (stride {}), both accumulation modes, {:.1}s",
        last.ep.unwrap(),
        last.l2.unwrap(),
        cfg.stride,
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_09_shot_backend_statistics() {
    let started = Instant::now();

    // exact-backend reference trajectory
    let mut cfg = base_run(Lattice::chain(2).unwrap(), 0.01, 7.0, 4, 2);
    cfg.reg = RegScheme::DiagonalShift { lambda: 0.04, order: 2 };
    cfg.oracle_enabled = false;
    cfg.stride = 10;
    let exact = evolve(&cfg, &mut []).unwrap();
    let exact_sz: Vec<f64> = exact.series.records.iter().map(|r| r.s_z).collect();

    // ten seeded shot-backend trajectories
    let seeds: Vec<u64> = (1..=10).collect();
    let mut all: Vec<Vec<f64>> = Vec::new();
    for &seed in &seeds {
        let mut shot_cfg = cfg.clone();
        shot_cfg.backend = BackendMode::Shots(ShotPlan {
            method: EstimationMethod::Hybrid,
            shots: 20000,
            seed,
        });
        let out = evolve(&shot_cfg, &mut []).unwrap();
        all.push(out.series.records.iter().map(|r| r.s_z).collect());
    }

    let mut worst_pull: f64 = 0.0;
    for (i, &target) in exact_sz.iter().enumerate() {
        let samples: Vec<f64> = all.iter().map(|traj| traj[i]).collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
            / (samples.len() - 1) as f64;
        let std = var.sqrt();
        let gap = (target - mean).abs();
        assert!(
            gap <= 3.0 * std + 1e-9,
            "output {i}: exact {target} vs mean {mean} +- {std}"
        );
        if std > 0.0 {
            worst_pull = worst_pull.max(gap / std);
        }
    }

    // unbiasedness: batch means of a representative primitive set against the
    // statevector values, 1000 batches, within 4 standard errors
    let lattice = Lattice::chain(2).unwrap();
    let model = build_tfim(&lattice, 1.0, 0.5, 1.0).unwrap();
    let indexed = IndexedTerms::new(2, &liouvillian_expand(&model).unwrap());
    let circuit = Arc::new(CircuitSpec::layered_tfim(&lattice, 2).unwrap());
    let basis = hamming_basis(&BitString::ones(2), 4, &[0, 1]).unwrap();
    let mut state = initial_state(AnsatzKind::I, circuit, basis, 1e-2).unwrap();
    if let lrqte::ansatz::Thetas::Shared(t) = &mut state.theta {
        for (i, v) in t.iter_mut().enumerate() {
            *v = 0.3 + 0.2 * i as f64;
        }
    }
    let cache = lrqte::eom::StateCache::build(&state, &indexed).unwrap();
    let prims = [
        lrqte::estimator::Primitive::DerivU { p: 0, k: 2, q: 1 },
        lrqte::estimator::Primitive::DerivDeriv { p: 1, k: 0, q: 1, j: 4 },
        lrqte::estimator::Primitive::USigmaU { p: 0, s: 1, q: 2 },
        lrqte::estimator::Primitive::DerivSigmaU { p: 2, k: 3, s: 2, q: 0 },
    ];
    use lrqte::estimator::Backend;
    let batches = 1000u64;
    let shots = 64u64;
    for prim in &prims {
        let ctx = lrqte::estimator::EvalContext { state: &state, cache: &cache, step: 0 };
        let exact_val = ExactBackend.eval(&ctx, prim).unwrap();
        let mut mean = num_complex::Complex64::new(0.0, 0.0);
        for b in 0..batches {
            let backend = ShotBackend::new(ShotPlan {
                method: EstimationMethod::Hybrid,
                shots,
                seed: 31000 + b,
            });
            mean += backend.eval(&ctx, prim).unwrap();
        }
        mean /= batches as f64;
        let se = 1.0 / ((batches * shots) as f64).sqrt();
        assert!(
            (mean - exact_val).norm() <= 4.0 * 2.0 * se,
            "{prim:?}: batch mean {mean} vs exact {exact_val} (se {se:.2e})"
        );
    }

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 1200.0, "runtime {elapsed}s exceeds 20 min");
    println!(
        "criterion 9 PASS: exact s_z within 3 pooled std of the 10-seed shot mean at all \
         {} output times (worst pull {worst_pull:.2}), unbiasedness within 4 se over \
         {batches} batches, {elapsed:.1}s",
        exact_sz.len()
    );
}

/// Brute enumeration of the deduplicated primitives the assembly formulas
/// touch, for an abstract model with `l` Hermitian single-string channels.
fn enumerate_counts(kind: AnsatzKind, r: usize, t: usize, l: usize) -> BlockCounts {
    use std::collections::HashSet;
    // channel strings are ids 1..=l; 0 is the identity
    let channel_terms: Vec<(usize, usize)> = (1..=l).map(|s| (s, s)).collect();
    // the anticommutator parts merge into one (identity, identity) term,
    // which costs nothing
    match kind {
        AnsatzKind::I => {
            let mut dd = HashSet::new(); // (p, min(k,j), max(k,j))
            let mut du = HashSet::new(); // (min(p,q), max(p,q), k)
            let mut us = HashSet::new(); // (s, min(p,q), max(p,q))
            let mut dsu = HashSet::new(); // (s, p, k, q)
            for p in 0..r {
                for k in 0..t {
                    for j in 0..t {
                        dd.insert((p, k.min(j), k.max(j)));
                    }
                }
            }
            for p in 0..r {
                for q in 0..r {
                    for k in 0..t {
                        du.insert((p.min(q), p.max(q), k));
                    }
                }
            }
            for &(s1, s2) in &channel_terms {
                for p in 0..r {
                    for q in 0..r {
                        us.insert((s1, p.min(q), p.max(q)));
                        us.insert((s2, p.min(q), p.max(q)));
                        for k in 0..t {
                            dsu.insert((s1, p, k, q));
                            dsu.insert((s2, p, k, q));
                        }
                    }
                }
            }
            BlockCounts {
                m_alpha_alpha: 0,
                m_alpha_theta: 0,
                m_theta_theta: (dd.len() + du.len()) as u64,
                v_alpha: us.len() as u64,
                v_theta: dsu.len() as u64,
            }
        }
        AnsatzKind::II => {
            // balanced distribution of t angles over r components
            let m_of = |p: usize| t / r + usize::from(p < t % r);
            let angles: Vec<(usize, usize)> = (0..r)
                .flat_map(|p| (0..m_of(p)).map(move |k| (p, k)))
                .collect();
            let mut ov = HashSet::new(); // unordered component pairs, p != q
            let mut du2 = HashSet::new(); // (deriv component, angle, other)
            let mut dd2 = HashSet::new(); // unordered global angle pairs
            let mut us2 = HashSet::new();
            let mut dsu2 = HashSet::new();
            for p in 0..r {
                for q in 0..r {
                    if p != q {
                        ov.insert((p.min(q), p.max(q)));
                    }
                }
            }
            for &(q, j) in &angles {
                for p in 0..r {
                    du2.insert((q, j, p));
                }
            }
            for (a, &ka) in angles.iter().enumerate() {
                for &kb in angles.iter().skip(a) {
                    dd2.insert((ka.min(kb), ka.max(kb)));
                }
            }
            for &(s1, s2) in &channel_terms {
                for p in 0..r {
                    for q in 0..r {
                        us2.insert((s1, p.min(q), p.max(q)));
                        us2.insert((s2, p.min(q), p.max(q)));
                    }
                }
                for &(p, k) in &angles {
                    for q in 0..r {
                        dsu2.insert((s1, p, k, q));
                        dsu2.insert((s2, p, k, q));
                    }
                }
            }
            BlockCounts {
                m_alpha_alpha: ov.len() as u64,
                m_alpha_theta: du2.len() as u64,
                m_theta_theta: dd2.len() as u64,
                v_alpha: us2.len() as u64,
                v_theta: dsu2.len() as u64,
            }
        }
    }
}

#[test]
fn criterion_10_cost_model() {
    for kind in [AnsatzKind::I, AnsatzKind::II] {
        for r in 1..=4usize {
            for t in 2..=12usize {
                for l in 1..=4usize {
                    let closed = count_circuits(kind, r as u64, t as u64, l as u64);
                    let brute = enumerate_counts(kind, r, t, l);
                    assert_eq!(
                        closed, brute,
                        "{kind:?} R={r} N={t} L={l}: closed {closed:?} vs brute {brute:?}"
                    );
                }
            }
        }
    }

    // asymptotic ratios against the expected scaling classes at large N
    let class_total = |kind: AnsatzKind, r: f64, t: f64, l: f64| -> f64 {
        match kind {
            AnsatzKind::I => l * r * r * t + r * t * t,
            AnsatzKind::II => l * r * r + l * r * t + t * t,
        }
    };
    for kind in [AnsatzKind::I, AnsatzKind::II] {
        for r in [2u64, 4] {
            for l in [1u64, 4] {
                let t = 512u64;
                let measured = count_circuits(kind, r, 2 * t, l).total() as f64
                    / count_circuits(kind, r, t, l).total() as f64;
                let predicted = class_total(kind, r as f64, 2.0 * t as f64, l as f64)
                    / class_total(kind, r as f64, t as f64, l as f64);
                assert!(
                    measured / predicted < 2.0 && predicted / measured < 2.0,
                    "{kind:?} R={r} L={l}: measured ratio {measured}, class ratio {predicted}"
                );
            }
        }
    }
    println!(
        "criterion 10 PASS: closed-form counts equal brute enumeration on the full \
         (R, N, L) grid; doubling ratios match the scaling classes within 2x"
    );
}

#[test]
#[ignore = "extended run (minutes); exercise with --ignored nightly"]
fn criterion_11_extended_three_by_three() {
    let started = Instant::now();
    let mut cfg = base_run(Lattice::grid(3, 3).unwrap(), 5e-3, 7.0, 10, 10);
    cfg.stride = 20;
    cfg.record_steps = false;
    let out = evolve(&cfg, &mut []).unwrap();
    let records = &out.series.records;

    let (peak_idx, peak) = records
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.infidelity.unwrap()))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    let t_peak = records[peak_idx].t;
    assert!(
        (1.0..=3.0).contains(&t_peak),
        "infidelity peak at t={t_peak}, expected within [1, 3]"
    );
    let final_inf = records.last().unwrap().infidelity.unwrap();
    assert!(final_inf < 0.5 * peak, "no decay after the peak: {final_inf} vs {peak}");

    let (purity_min_idx, _) = records
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.purity))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    let t_purity = records[purity_min_idx].t;
    assert!(
        (t_peak - t_purity).abs() <= 1.5,
        "purity minimum at t={t_purity} far from infidelity peak at t={t_peak}"
    );
    println!(
        "criterion 11 PASS: infidelity peak {peak:.3e} at t={t_peak:.2}, purity minimum at \
         t={t_purity:.2}, final infidelity {final_inf:.3e}, {:.0}s",
        started.elapsed().as_secs_f64()
    );
}

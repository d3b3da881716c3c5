use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen, Vector6};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qram::hamiltonian::Dynamics;
use qram::model::{BasisState, LaserDrive, RampSchedule, SystemParams};
use qram::propagator::{evolve_propagator, evolve_state, Evolver, IntegratorConfig, StateVector};

fn table1() -> SystemParams {
    SystemParams::table1()
}

fn protocol(p: &SystemParams) -> RampSchedule {
    RampSchedule::for_params(p, RampSchedule::DEFAULT_T_RAMP)
}

/// Plateau only: `W = 1` for the whole run.
fn frozen(duration: f64) -> RampSchedule {
    RampSchedule { w_off: 0.25, t_ramp: 0.0, t_hold: duration, t_pre: 0.0, t_post: 0.0 }
}

fn sampled(n: usize) -> IntegratorConfig {
    IntegratorConfig { report_samples: n, ..IntegratorConfig::default() }
}

fn bloch(theta: f64, phi: f64) -> StateVector {
    let mut v = Vector6::zeros();
    v[BasisState::S00.index()] = C64::new((theta / 2.0).cos(), 0.0);
    v[BasisState::S01.index()] = C64::from_polar((theta / 2.0).sin(), phi);
    StateVector::new(v).unwrap()
}

fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
    (a.amps() - b.amps()).camax()
}

#[test]
fn full_protocol_is_unitary_and_norm_preserving() {
    let p = table1();
    let s = protocol(&p);
    let cfg = sampled(400);
    for dynamics in [Dynamics::Coupled, Dynamics::Uncoupled] {
        let u = evolve_propagator(dynamics, &p, &s, &cfg).unwrap();
        assert!(u.unitarity_defect < 1e-8, "{dynamics:?}: {:e}", u.unitarity_defect);
    }
    let traj = evolve_state(&StateVector::basis(BasisState::S01), Dynamics::Coupled, &p, &s, &cfg).unwrap();
    assert!(traj.max_norm_drift < 1e-9, "{:e}", traj.max_norm_drift);
    for psi in &traj.states {
        assert!((psi.norm() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn superposition_matches_basis_evolutions() {
    let p = table1();
    let s = protocol(&p);
    let ev = Evolver::new(&p, &s, Dynamics::Coupled, &IntegratorConfig::default()).unwrap();
    let e00 = ev.final_state(&StateVector::basis(BasisState::S00));
    let e01 = ev.final_state(&StateVector::basis(BasisState::S01));
    let u = ev.final_propagator();
    for (theta, phi) in [(0.3, 1.1), (1.9, 4.0), (2.7, 0.2), (PI / 2.0, 5.5)] {
        let psi0 = bloch(theta, phi);
        let a = psi0.amplitude(BasisState::S00);
        let b = psi0.amplitude(BasisState::S01);
        let direct = ev.final_state(&psi0);
        let combined = StateVector::new(e00.amps() * a + e01.amps() * b).unwrap();
        assert!(max_diff(&direct, &combined) < 1e-8);
        assert!(max_diff(&direct, &u.apply(&psi0)) < 1e-7);
    }
}

#[test]
fn backward_integration_returns_the_initial_state() {
    let p = table1();
    let s = protocol(&p);
    let ev = Evolver::new(&p, &s, Dynamics::Coupled, &IntegratorConfig::default()).unwrap();
    let psi0 = bloch(2.1, 0.7);
    let tf = s.total();
    let forward = ev.advance(*psi0.amps(), 0.0, tf);
    let back = ev.advance(forward, tf, 0.0);
    assert!((back - psi0.amps()).camax() < 1e-7);
}

#[test]
fn step_halving_shows_fourth_order() {
    let p = table1();
    let s = protocol(&p);
    let psi0 = StateVector::basis(BasisState::S01);
    let run = |steps: u32| {
        let cfg = IntegratorConfig { steps_per_fast_period: steps, tolerance: 1.0, ..IntegratorConfig::default() };
        Evolver::new(&p, &s, Dynamics::Coupled, &cfg).unwrap().final_state(&psi0)
    };
    let reference = run(4096);
    let steps = [80, 160, 320, 640, 1280];
    let errors: Vec<f64> = steps.iter().map(|&n| max_diff(&run(n), &reference)).collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((12.0..20.0).contains(&ratio), "errors {errors:?}");
    }
    let halved = max_diff(&run(1024), &run(2048));
    assert!(halved < 1e-6, "{halved:e}");
}

/// `|<k| exp(-i H t) |01>|^2` for the static three-level block
/// `(|01>, |v0>, |10>)` in the frame rotating with the laser.
fn lambda_populations(p: &SystemParams, t: f64) -> [f64; 3] {
    let half = 0.5 * p.resonant_splitting();
    let h = Matrix3::new(
        half,
        -p.omega_bs,
        0.0,
        -p.omega_bs,
        p.w_up_minus_down - half,
        -p.omega_ex,
        0.0,
        -p.omega_ex,
        p.w_e_minus_down - half - p.laser_frequency(),
    );
    let eig = SymmetricEigen::new(h);
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let amp: C64 = (0..3)
            .map(|j| C64::from_polar(eig.eigenvectors[(k, j)] * eig.eigenvectors[(0, j)], -eig.eigenvalues[j] * t))
            .sum();
        *slot = amp.norm_sqr();
    }
    out
}

#[test]
fn frozen_plateau_matches_the_exact_lambda_system() {
    let p = SystemParams { laser: LaserDrive::CoRotating, ..table1() };
    let omega = p.two_photon_rabi();
    let traj = evolve_state(
        &StateVector::basis(BasisState::S01),
        Dynamics::Coupled,
        &p,
        &frozen(PI / omega),
        &sampled(201),
    )
    .unwrap();
    for (&t, psi) in traj.times.iter().zip(&traj.states) {
        let [p01, pv0, p10] = lambda_populations(&p, t);
        assert!((psi.population(BasisState::S01) - p01).abs() < 1e-6, "t = {t}");
        assert!((psi.population(BasisState::Sv0) - pv0).abs() < 1e-6, "t = {t}");
        assert!((psi.population(BasisState::S10) - p10).abs() < 1e-6, "t = {t}");
    }
}

#[test]
fn frozen_plateau_follows_the_eliminated_two_level_cycle() {
    let p = SystemParams { laser: LaserDrive::CoRotating, delta1: 20.0 * 0.15, ..table1() };
    let omega = p.two_photon_rabi();
    let traj = evolve_state(
        &StateVector::basis(BasisState::S01),
        Dynamics::Coupled,
        &p,
        &frozen(PI / omega),
        &sampled(801),
    )
    .unwrap();
    for (&t, psi) in traj.times.iter().zip(&traj.states) {
        let expected = (omega * t).sin().powi(2);
        assert!((psi.population(BasisState::S10) - expected).abs() < 0.05, "t = {t}");
        assert!((psi.population(BasisState::S01) - (1.0 - expected)).abs() < 0.05, "t = {t}");
    }
}

#[test]
fn ground_pole_is_stationary_in_the_full_protocol() {
    let p = table1();
    let s = protocol(&p);
    let traj = evolve_state(&StateVector::basis(BasisState::S00), Dynamics::Coupled, &p, &s, &sampled(200)).unwrap();
    for psi in &traj.states {
        assert!((psi.population(BasisState::S00) - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn short_protocols_conserve_norm_and_superpose(
        theta in 0.0..PI,
        phi in 0.0..(2.0 * PI),
        omega_bs in 0.0..0.3f64,
        omega_ex in 0.0..0.3f64,
        t_ramp in 0.0..3.0f64,
        t_hold in 0.0..10.0f64,
        w_off in 0.05..0.9f64,
    ) {
        let p = SystemParams { omega_bs, omega_ex, ..table1() };
        let s = RampSchedule { w_off, t_ramp, t_hold, t_pre: 0.5, t_post: 0.5 };
        let ev = Evolver::new(&p, &s, Dynamics::Coupled, &IntegratorConfig::default()).unwrap();
        let psi0 = bloch(theta, phi);
        let psi = ev.final_state(&psi0);
        prop_assert!((psi.norm() - 1.0).abs() < 1e-9);
        let e00 = ev.final_state(&StateVector::basis(BasisState::S00));
        let e01 = ev.final_state(&StateVector::basis(BasisState::S01));
        let combined = e00.amps() * psi0.amplitude(BasisState::S00) + e01.amps() * psi0.amplitude(BasisState::S01);
        prop_assert!((psi.amps() - combined).camax() < 1e-8);
        let back = ev.advance(*psi.amps(), s.total(), 0.0);
        prop_assert!((back - psi0.amps()).camax() < 1e-7);
    }
}

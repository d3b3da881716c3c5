//! The state-transfer experiment: a flux-qubit state `a|00> + b|01>` is
//! swapped into the memory qubit `a|00> + b|10>` while the SQUID is held on
//! resonance. Fidelities compare the coupled evolution against the target
//! evolved without the condensate/SQUID exchange.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{measured_ramp_time, window_clamped, Dynamics, Mat6};
use crate::model::{BasisState, RampSchedule, SystemParams};
use crate::propagator::{check_drift, Evolver, IntegratorConfig, StateVector, Vec6};

const I00: usize = BasisState::S00.index();
const I01: usize = BasisState::S01.index();
const I10: usize = BasisState::S10.index();

/// Point on the flux-qubit Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochAngles {
    pub theta: f64,
    pub phi: f64,
}

impl BlochAngles {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        let angles = BlochAngles { theta, phi };
        angles.validate()?;
        Ok(angles)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::domain("theta", format!("must lie in [0, pi], got {}", self.theta)));
        }
        if !(0.0..TAU).contains(&self.phi) {
            return Err(Error::domain("phi", format!("must lie in [0, 2pi), got {}", self.phi)));
        }
        Ok(())
    }

    /// `(cos(theta/2), e^{i phi} sin(theta/2))`
    fn coefficients(&self) -> (f64, C64) {
        let half = 0.5 * self.theta;
        (half.cos(), C64::from_polar(half.sin(), self.phi))
    }
}

impl Default for BlochAngles {
    /// The `|01> -> |10>` transfer.
    fn default() -> Self {
        BlochAngles { theta: PI, phi: 0.0 }
    }
}

fn qubit_state(angles: &BlochAngles, excited: BasisState) -> StateVector {
    let (a, b) = angles.coefficients();
    let mut v = Vec6::zeros();
    v[I00] = C64::new(a, 0.0);
    v[excited.index()] = b;
    StateVector::from_raw(v)
}

/// `cos(theta/2)|00> + e^{i phi} sin(theta/2)|01>`
pub fn prepare_initial(angles: &BlochAngles) -> StateVector {
    qubit_state(angles, BasisState::S01)
}

/// `cos(theta/2)|00> + e^{i phi} sin(theta/2)|10>`
pub fn prepare_target(angles: &BlochAngles) -> StateVector {
    qubit_state(angles, BasisState::S10)
}

/// `F = |<target| M |initial>|` with `M = U0^dagger U`.
pub fn fidelity_from_overlap(m: &Mat6, angles: &BlochAngles) -> f64 {
    let (a, b) = angles.coefficients();
    overlap_fidelity(m, a, b)
}

#[inline]
fn overlap_fidelity(m: &Mat6, a: f64, b: C64) -> f64 {
    let z = m[(I00, I00)] * (a * a)
        + m[(I00, I01)] * (b * a)
        + m[(I10, I00)] * (b.conj() * a)
        + m[(I10, I01)] * b.norm_sqr();
    z.norm()
}

/// Phase convention for the memory qubit's `|1>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseReference {
    /// Basis phases exactly as in the laboratory Hamiltonian.
    #[default]
    Lab,
    /// Rydberg states re-phased so that the `|01> -> |10>` amplitude is real
    /// and positive at `t_f`.
    Aligned,
}

/// Weight of the Bloch-sphere average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    /// `d theta d phi / (2 pi^2)`.
    #[default]
    Flat,
    /// `sin(theta) d theta d phi / (4 pi)`.
    Haar,
}

/// Composite trapezoid rule on `[0, pi] x [0, 2 pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Nodes in theta, both poles included.
    pub n_theta: usize,
    /// Nodes in phi; the periodic endpoint is implied.
    pub n_phi: usize,
    pub measure: Measure,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { n_theta: 33, n_phi: 64, measure: Measure::Flat }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_theta < 3 || self.n_theta.is_multiple_of(2) {
            return Err(Error::domain("n_theta", format!("must be odd and >= 3, got {}", self.n_theta)));
        }
        if self.n_phi < 4 {
            return Err(Error::domain("n_phi", format!("must be >= 4, got {}", self.n_phi)));
        }
        Ok(())
    }

    fn nodes(&self) -> Vec<(f64, C64, f64)> {
        let h_theta = PI / (self.n_theta - 1) as f64;
        let h_phi = TAU / self.n_phi as f64;
        let mut nodes = Vec::with_capacity(self.n_theta * self.n_phi);
        for i in 0..self.n_theta {
            let theta = h_theta * i as f64;
            let end = if i == 0 || i + 1 == self.n_theta { 0.5 } else { 1.0 };
            let weight = match self.measure {
                Measure::Flat => end * h_theta * h_phi / (2.0 * PI * PI),
                Measure::Haar => end * h_theta * h_phi * theta.sin() / (4.0 * PI),
            };
            for j in 0..self.n_phi {
                let angles = BlochAngles { theta, phi: h_phi * j as f64 };
                let (a, b) = angles.coefficients();
                nodes.push((a, b, weight));
            }
        }
        nodes
    }

    /// Bloch-sphere average of `F` for one overlap matrix.
    pub fn average(&self, m: &Mat6) -> f64 {
        self.average_with(&self.nodes(), m)
    }

    fn average_with(&self, nodes: &[(f64, C64, f64)], m: &Mat6) -> f64 {
        nodes.iter().map(|&(a, b, w)| w * overlap_fidelity(m, a, b)).sum()
    }
}

/// Re-phases the Rydberg rows and columns of `m` by `e^{i phase}`.
fn rephase(m: &Mat6, phase: f64) -> Mat6 {
    let g = C64::from_polar(1.0, phase);
    let mut out = *m;
    for r in [BasisState::S11.index(), I10] {
        for c in 0..6 {
            out[(r, c)] *= g;
            out[(c, r)] *= g.conj();
        }
    }
    out
}

fn aligning_phase(m_final: &Mat6, reference: PhaseReference) -> f64 {
    match reference {
        PhaseReference::Lab => 0.0,
        PhaseReference::Aligned => {
            let z = m_final[(I10, I01)];
            if z.norm() > 0.0 {
                -z.arg()
            } else {
                0.0
            }
        }
    }
}

/// `<10| U0^dagger U |01>` at the end of the protocol.
pub fn transfer_amplitude(params: &SystemParams, schedule: &RampSchedule, config: &IntegratorConfig) -> Result<C64> {
    let coupled = Evolver::new(params, schedule, Dynamics::Coupled, config)?;
    let uncoupled = Evolver::new(params, schedule, Dynamics::Uncoupled, config)?;
    let (psi, target) = rayon::join(
        || coupled.final_state(&StateVector::basis(BasisState::S01)),
        || uncoupled.final_state(&StateVector::basis(BasisState::S10)),
    );
    check_drift((psi.norm() - 1.0).abs().max((target.norm() - 1.0).abs()), config.tolerance)?;
    Ok(target.inner(&psi))
}

/// Copy of `params` whose optical phase makes the transfer amplitude real
/// and positive; the gauge change leaves every population untouched.
pub fn align_memory_phase(params: &SystemParams, schedule: &RampSchedule, config: &IntegratorConfig) -> Result<SystemParams> {
    let z = transfer_amplitude(params, schedule, config)?;
    let shift = if z.norm() > 0.0 { -z.arg() } else { 0.0 };
    Ok(SystemParams { ex_phase: params.ex_phase + shift, ..*params })
}

/// Time series of a single transfer.
#[derive(Debug, Clone)]
pub struct TransferResult {
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub populations: Vec<[f64; 6]>,
    pub window: Vec<f64>,
    pub f_final: f64,
    pub measured_ramp_time: f64,
    pub max_norm_drift: f64,
}

/// `F(t)` for one initial state, from two state trajectories.
pub fn fidelity_trace(
    angles: &BlochAngles,
    params: &SystemParams,
    schedule: &RampSchedule,
    config: &IntegratorConfig,
) -> Result<TransferResult> {
    angles.validate()?;
    let ramp = measured_ramp_time(schedule)?;
    let coupled = Evolver::new(params, schedule, Dynamics::Coupled, config)?;
    let uncoupled = Evolver::new(params, schedule, Dynamics::Uncoupled, config)?;
    let (psi, target) = rayon::join(
        || coupled.state_trajectory(&prepare_initial(angles), config.report_samples),
        || uncoupled.state_trajectory(&prepare_target(angles), config.report_samples),
    );
    let drift = psi.max_norm_drift.max(target.max_norm_drift);
    check_drift(drift, config.tolerance)?;

    let fidelity: Vec<f64> = target
        .states
        .iter()
        .zip(&psi.states)
        .map(|(t, p)| t.inner(p).norm().min(1.0))
        .collect();
    let populations = psi.states.iter().map(StateVector::populations).collect();
    let window = psi.times.iter().map(|&t| window_clamped(t, schedule)).collect();
    Ok(TransferResult {
        f_final: *fidelity.last().expect("non-empty grid"),
        times: psi.times,
        fidelity,
        populations,
        window,
        measured_ramp_time: ramp,
        max_norm_drift: drift,
    })
}

/// Bloch-sphere averaged fidelity over the reporting grid.
#[derive(Debug, Clone)]
pub struct AveragedFidelity {
    pub times: Vec<f64>,
    pub f_avg: Vec<f64>,
    pub f_avg_final: f64,
    /// `F(theta = pi)` at `t_f`, read off the same propagators.
    pub f_final: f64,
    pub measured_ramp_time: f64,
    /// Optical phase shift applied by [`PhaseReference::Aligned`].
    pub phase_shift: f64,
    pub unitarity_defect: f64,
}

fn propagator_pair(
    params: &SystemParams,
    schedule: &RampSchedule,
    config: &IntegratorConfig,
    samples: Option<usize>,
) -> Result<(Vec<Mat6>, Vec<f64>, f64)> {
    let coupled = Evolver::new(params, schedule, Dynamics::Coupled, config)?;
    let uncoupled = Evolver::new(params, schedule, Dynamics::Uncoupled, config)?;
    let run = |ev: &Evolver| match samples {
        Some(n) => ev.propagator_trajectory(n),
        None => vec![ev.final_propagator()],
    };
    let (u, u0) = rayon::join(|| run(&coupled), || run(&uncoupled));
    let defect = u.iter().chain(&u0).map(|p| p.unitarity_defect).fold(0.0, f64::max);
    check_drift(defect, config.tolerance)?;
    let times = u.iter().map(|p| p.t_end).collect();
    let overlaps = u.iter().zip(&u0).map(|(u, u0)| u0.u.adjoint() * u.u).collect();
    Ok((overlaps, times, defect))
}

/// Average of `F(theta, phi; t)` over the Bloch sphere, evaluated from the
/// propagators `U(t)` and `U0(t)` so that the quadrature costs nothing extra
/// in integration.
pub fn averaged_fidelity(
    params: &SystemParams,
    schedule: &RampSchedule,
    config: &IntegratorConfig,
    quad: &QuadratureSpec,
    reference: PhaseReference,
) -> Result<AveragedFidelity> {
    quad.validate()?;
    let ramp = measured_ramp_time(schedule)?;
    let (overlaps, times, defect) = propagator_pair(params, schedule, config, Some(config.report_samples))?;
    let last = overlaps.last().expect("non-empty grid");
    let phase = aligning_phase(last, reference);
    let nodes = quad.nodes();
    let f_avg: Vec<f64> = overlaps
        .par_iter()
        .map(|m| quad.average_with(&nodes, &rephase(m, phase)))
        .collect();
    Ok(AveragedFidelity {
        f_avg_final: *f_avg.last().expect("non-empty grid"),
        f_final: last[(I10, I01)].norm(),
        times,
        f_avg,
        measured_ramp_time: ramp,
        phase_shift: phase,
        unitarity_defect: defect,
    })
}

/// End-of-protocol figures only; skips the reporting grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalFidelity {
    pub f_avg_final: f64,
    pub f_final: f64,
    pub measured_ramp_time: f64,
    pub unitarity_defect: f64,
}

pub fn final_fidelity(
    params: &SystemParams,
    schedule: &RampSchedule,
    config: &IntegratorConfig,
    quad: &QuadratureSpec,
    reference: PhaseReference,
) -> Result<FinalFidelity> {
    quad.validate()?;
    let ramp = measured_ramp_time(schedule)?;
    let (overlaps, _, defect) = propagator_pair(params, schedule, config, None)?;
    let m = &overlaps[0];
    let m = rephase(m, aligning_phase(m, reference));
    Ok(FinalFidelity {
        f_avg_final: quad.average(&m),
        f_final: m[(I10, I01)].norm(),
        measured_ramp_time: ramp,
        unitarity_defect: defect,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub t_ramp: f64,
    pub outcome: Result<FinalFidelity>,
}

/// One final averaged fidelity per nominal ramp time, sorted by measured
/// ramp time. Failed points are kept with their error.
pub fn ramp_sweep(
    params: &SystemParams,
    schedule: &RampSchedule,
    ramps: &[f64],
    config: &IntegratorConfig,
    quad: &QuadratureSpec,
    reference: PhaseReference,
) -> Result<Vec<SweepPoint>> {
    if ramps.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("ramps", "nominal ramp times must be strictly increasing"));
    }
    let mut points: Vec<SweepPoint> = ramps
        .par_iter()
        .map(|&t_ramp| SweepPoint {
            t_ramp,
            outcome: final_fidelity(params, &schedule.with_ramp(t_ramp), config, quad, reference),
        })
        .collect();
    let key = |p: &SweepPoint| p.outcome.as_ref().map(|o| o.measured_ramp_time).unwrap_or(f64::INFINITY);
    points.sort_by(|a, b| key(a).total_cmp(&key(b)).then(a.t_ramp.total_cmp(&b.t_ramp)));
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldOptimum {
    pub t_hold: f64,
    pub f_final: f64,
}

/// Final `|01> -> |10>` fidelity as a function of the plateau length.
pub fn transfer_fidelity(params: &SystemParams, schedule: &RampSchedule, config: &IntegratorConfig) -> Result<f64> {
    Ok(transfer_amplitude(params, schedule, config)?.norm())
}

/// Golden-section search of the plateau length over `[0.5 tau, 2 tau]`.
///
/// `tau` is the analytic half Rabi cycle; without a two-photon coupling the
/// schedule's own `t_hold` stands in for it.
pub fn optimize_hold(params: &SystemParams, schedule: &RampSchedule, config: &IntegratorConfig) -> Result<HoldOptimum> {
    let tau = params.transfer_time();
    let tau = if tau.is_finite() { tau } else { schedule.t_hold };
    optimize_hold_in(params, schedule, config, 0.5 * tau, 2.0 * tau)
}

pub fn optimize_hold_in(
    params: &SystemParams,
    schedule: &RampSchedule,
    config: &IntegratorConfig,
    lo: f64,
    hi: f64,
) -> Result<HoldOptimum> {
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(Error::domain("t_hold", format!("degenerate search interval [{lo}, {hi}]")));
    }
    let f = |t_hold: f64| transfer_fidelity(params, &schedule.with_hold(t_hold), config);
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let tol = 1e-4 * (hi - lo);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let (mut f_min, mut f_max) = (fc.min(fd), fc.max(fd));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
            f_min = f_min.min(fc);
            f_max = f_max.max(fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
            f_min = f_min.min(fd);
            f_max = f_max.max(fd);
        }
    }
    if f_max - f_min <= f64::EPSILON {
        // flat objective: nothing to choose between
        let mid = 0.5 * (lo + hi);
        return Ok(HoldOptimum { t_hold: mid, f_final: f(mid)? });
    }
    let t_hold = 0.5 * (a + b);
    Ok(HoldOptimum { t_hold, f_final: f(t_hold)? })
}

/// Hold optimised at the shortest ramp, then the ramp swept with that hold.
#[derive(Debug, Clone)]
pub struct CalibratedProtocol {
    pub hold: HoldOptimum,
    pub sweep: Vec<SweepPoint>,
    /// Index into `sweep` of the largest final averaged fidelity.
    pub best: usize,
}

impl CalibratedProtocol {
    pub fn best_point(&self) -> (f64, &FinalFidelity) {
        let p = &self.sweep[self.best];
        (p.t_ramp, p.outcome.as_ref().expect("best point succeeded"))
    }
}

pub fn calibrate(
    params: &SystemParams,
    schedule: &RampSchedule,
    ramps: &[f64],
    config: &IntegratorConfig,
    quad: &QuadratureSpec,
    reference: PhaseReference,
) -> Result<CalibratedProtocol> {
    let shortest = *ramps.first().ok_or_else(|| Error::domain("ramps", "empty sweep"))?;
    let hold = optimize_hold(params, &schedule.with_ramp(shortest), config)?;
    let sweep = ramp_sweep(params, &schedule.with_hold(hold.t_hold), ramps, config, quad, reference)?;
    let best = sweep
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.outcome.as_ref().ok().map(|o| (i, o.f_avg_final)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::domain("ramps", "every sweep point failed"))?;
    Ok(CalibratedProtocol { hold, sweep, best })
}

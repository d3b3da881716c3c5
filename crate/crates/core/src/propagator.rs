//! Time-stepping of `i d/dt psi = H(t) psi` with the classical fourth-order
//! Runge-Kutta method.
//!
//! The step is tied to the fastest diagonal frequency of the Hamiltonian, so
//! that the integrator resolves the bare level phases rather than only the
//! comparatively slow couplings. States and full propagators share one
//! integration path through [`Evolver::advance`].

use std::f64::consts::TAU;

use nalgebra::{SMatrix, Vector6};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Dynamics, Generator, Mat6};
use crate::model::{BasisState, RampSchedule, SystemParams};

pub type Vec6 = Vector6<C64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    /// Upper bound on the step [1/E_hfs].
    pub dt_max: f64,
    /// Steps per period of the fastest diagonal frequency.
    pub steps_per_fast_period: u32,
    /// Budget for norm drift and unitarity defect.
    pub tolerance: f64,
    /// Number of reporting samples, endpoints included.
    pub report_samples: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt_max: 0.01,
            steps_per_fast_period: 1024,
            tolerance: 1e-8,
            report_samples: 2000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::domain("dt_max", format!("must be > 0, got {}", self.dt_max)));
        }
        if self.steps_per_fast_period < 8 {
            return Err(Error::domain(
                "steps_per_fast_period",
                format!("must be >= 8, got {}", self.steps_per_fast_period),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::domain("tolerance", format!("must be > 0, got {}", self.tolerance)));
        }
        if self.report_samples < 2 {
            return Err(Error::domain(
                "report_samples",
                format!("must be >= 2, got {}", self.report_samples),
            ));
        }
        Ok(())
    }
}

/// Six amplitudes over the [`BasisState`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector(Vec6);

impl StateVector {
    pub fn basis(state: BasisState) -> Self {
        let mut v = Vec6::zeros();
        v[state.index()] = C64::new(1.0, 0.0);
        StateVector(v)
    }

    /// Wraps amplitudes that are already normalised to within `1e-9`.
    pub fn new(amps: Vec6) -> Result<Self> {
        let norm = amps.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::domain("amps", format!("norm must be 1, got {norm}")));
        }
        Ok(StateVector(amps))
    }

    pub(crate) fn from_raw(amps: Vec6) -> Self {
        StateVector(amps)
    }

    pub fn amps(&self) -> &Vec6 {
        &self.0
    }

    pub fn amplitude(&self, state: BasisState) -> C64 {
        self.0[state.index()]
    }

    pub fn population(&self, state: BasisState) -> f64 {
        self.0[state.index()].norm_sqr()
    }

    pub fn populations(&self) -> [f64; 6] {
        std::array::from_fn(|i| self.0[i].norm_sqr())
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }
}

/// Time-evolution operator from `t_start` to `t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub u: Mat6,
    pub t_start: f64,
    pub t_end: f64,
    pub unitarity_defect: f64,
}

impl Propagator {
    pub fn new(u: Mat6, t_start: f64, t_end: f64) -> Self {
        Propagator { u, t_start, t_end, unitarity_defect: unitarity_defect(&u) }
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        StateVector(self.u * psi.0)
    }
}

/// Max-norm of `U^dagger U - I`.
pub fn unitarity_defect(u: &Mat6) -> f64 {
    let g = u.adjoint() * u - Mat6::identity();
    g.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// States sampled on the reporting grid.
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// Largest `| ||psi|| - 1 |` over the samples.
    pub max_norm_drift: f64,
}

impl StateTrajectory {
    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectory has at least two samples")
    }
}

/// Fixed-step RK4 integrator over one protocol.
#[derive(Debug, Clone)]
pub struct Evolver {
    generator: Generator,
    dt_cap: f64,
}

impl Evolver {
    pub fn new(
        params: &SystemParams,
        schedule: &RampSchedule,
        dynamics: Dynamics,
        config: &IntegratorConfig,
    ) -> Result<Self> {
        config.validate()?;
        let generator = Generator::new(params, schedule, dynamics)?;
        let fast = generator.max_diagonal();
        let resolved = if fast > 0.0 {
            TAU / fast / config.steps_per_fast_period as f64
        } else {
            f64::INFINITY
        };
        Ok(Evolver { generator, dt_cap: config.dt_max.min(resolved) })
    }

    /// Largest step the integrator will take.
    pub fn step_cap(&self) -> f64 {
        self.dt_cap
    }

    pub fn duration(&self) -> f64 {
        self.generator.schedule().total()
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    /// Uniform reporting grid over `[0, t_f]` with `samples` points.
    pub fn grid(&self, samples: usize) -> Vec<f64> {
        let tf = self.duration();
        let last = (samples - 1) as f64;
        (0..samples).map(|k| if k + 1 == samples { tf } else { tf * k as f64 / last }).collect()
    }

    /// Propagates `y` from `t0` to `t1` in equal steps no longer than the cap.
    /// `t1 < t0` integrates backwards.
    pub fn advance<const C: usize>(&self, y: SMatrix<C64, 6, C>, t0: f64, t1: f64) -> SMatrix<C64, 6, C> {
        let span = t1 - t0;
        if span == 0.0 {
            return y;
        }
        let n = (span.abs() / self.dt_cap).ceil().max(1.0) as usize;
        let dt = span / n as f64;
        let g = &self.generator;
        let half = C64::new(0.5 * dt, 0.0);
        let full = C64::new(dt, 0.0);
        let two = C64::new(2.0, 0.0);
        let sixth = C64::new(dt / 6.0, 0.0);
        let mut y = y;
        for k in 0..n {
            let t = t0 + dt * k as f64;
            let mid = t + 0.5 * dt;
            let c_mid = g.coefficients(mid);
            let k1 = g.derivative(t, &y);
            let k2 = g.apply(&c_mid, &(y + k1 * half));
            let k3 = g.apply(&c_mid, &(y + k2 * half));
            let k4 = g.derivative(t + dt, &(y + k3 * full));
            y += (k1 + (k2 + k3) * two + k4) * sixth;
        }
        y
    }

    pub fn state_trajectory(&self, psi0: &StateVector, samples: usize) -> StateTrajectory {
        let times = self.grid(samples);
        let mut states = Vec::with_capacity(times.len());
        let mut y = psi0.0;
        let mut drift = (y.norm() - 1.0).abs();
        states.push(StateVector(y));
        for w in times.windows(2) {
            y = self.advance(y, w[0], w[1]);
            drift = drift.max((y.norm() - 1.0).abs());
            states.push(StateVector(y));
        }
        StateTrajectory { times, states, max_norm_drift: drift }
    }

    pub fn propagator_trajectory(&self, samples: usize) -> Vec<Propagator> {
        let times = self.grid(samples);
        let mut out = Vec::with_capacity(times.len());
        let mut u = Mat6::identity();
        out.push(Propagator::new(u, 0.0, 0.0));
        for w in times.windows(2) {
            u = self.advance(u, w[0], w[1]);
            out.push(Propagator::new(u, 0.0, w[1]));
        }
        out
    }

    pub fn final_state(&self, psi0: &StateVector) -> StateVector {
        StateVector(self.advance(psi0.0, 0.0, self.duration()))
    }

    pub fn final_propagator(&self) -> Propagator {
        let tf = self.duration();
        Propagator::new(self.advance(Mat6::identity(), 0.0, tf), 0.0, tf)
    }
}

pub(crate) fn check_drift(drift: f64, tolerance: f64) -> Result<()> {
    if drift.is_finite() && drift < tolerance {
        Ok(())
    } else {
        Err(Error::Integration { drift, tolerance })
    }
}

/// Samples `|psi(t)>` on the reporting grid.
pub fn evolve_state(
    psi0: &StateVector,
    dynamics: Dynamics,
    params: &SystemParams,
    schedule: &RampSchedule,
    config: &IntegratorConfig,
) -> Result<StateTrajectory> {
    let evolver = Evolver::new(params, schedule, dynamics, config)?;
    let traj = evolver.state_trajectory(psi0, config.report_samples);
    check_drift(traj.max_norm_drift, config.tolerance)?;
    Ok(traj)
}

/// `U(t_f, 0)` for the chosen dynamics.
pub fn evolve_propagator(
    dynamics: Dynamics,
    params: &SystemParams,
    schedule: &RampSchedule,
    config: &IntegratorConfig,
) -> Result<Propagator> {
    let evolver = Evolver::new(params, schedule, dynamics, config)?;
    let u = evolver.final_propagator();
    check_drift(u.unitarity_defect, config.tolerance)?;
    Ok(u)
}

/// `U(t_k, 0)` at every reporting sample.
pub fn propagator_trajectory(
    dynamics: Dynamics,
    params: &SystemParams,
    schedule: &RampSchedule,
    config: &IntegratorConfig,
) -> Result<Vec<Propagator>> {
    let evolver = Evolver::new(params, schedule, dynamics, config)?;
    let traj = evolver.propagator_trajectory(config.report_samples);
    let worst = traj.iter().map(|p| p.unitarity_defect).fold(0.0, f64::max);
    check_drift(worst, config.tolerance)?;
    Ok(traj)
}

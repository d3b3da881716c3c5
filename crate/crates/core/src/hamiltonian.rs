//! The six-state Hamiltonian
//!
//! `H(t) = A(t) (x) I2 + I3 (x) (E_S(t)/2) sigma_z - C (x) sigma_x`
//!
//! over the atomic sectors `(Rydberg, virtual, ground)` and the flux-qubit
//! levels `(1, 0)`, together with the window function that moves the flux
//! qubit into and out of resonance.

use std::ops::Deref;

use nalgebra::{Matrix6, SMatrix};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{BasisState, LaserDrive, RampSchedule, SquidCoupling, SystemParams};

pub type Mat6 = Matrix6<C64>;

/// Which Hamiltonian drives the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dynamics {
    /// Full Hamiltonian including the condensate/SQUID exchange.
    Coupled,
    /// Same Hamiltonian with the exchange switched off.
    Uncoupled,
}

/// A Hermitian 6x6 matrix in [`BasisState`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianMatrix(Mat6);

impl HamiltonianMatrix {
    pub fn entry(&self, row: BasisState, col: BasisState) -> C64 {
        self.0[(row.index(), col.index())]
    }

    /// Largest `|H_ij - conj(H_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..6 {
            for j in 0..6 {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn into_inner(self) -> Mat6 {
        self.0
    }
}

impl Deref for HamiltonianMatrix {
    type Target = Mat6;

    fn deref(&self) -> &Mat6 {
        &self.0
    }
}

/// `W`, and the resulting flux-qubit splitting, at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSample {
    pub t: f64,
    pub w: f64,
    pub delta: f64,
}

/// Cubic smoothstep `3u^2 - 2u^3`, clamped to `[0, 1]`.
pub fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Smoothstep inverse on `[0, 1]` by bisection.
fn smoothstep_inverse(s: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if smoothstep(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `W(t)` without range checking; times outside the protocol read the
/// nearest flat.
pub(crate) fn window_clamped(t: f64, s: &RampSchedule) -> f64 {
    let lift = 1.0 - s.w_off;
    let up_start = s.t_pre;
    let plateau_start = up_start + s.t_ramp;
    let down_start = plateau_start + s.t_hold;
    let down_end = down_start + s.t_ramp;
    if t < up_start {
        s.w_off
    } else if t < plateau_start {
        s.w_off + lift * smoothstep((t - up_start) / s.t_ramp)
    } else if t <= down_start {
        1.0
    } else if t < down_end {
        1.0 - lift * smoothstep((t - down_start) / s.t_ramp)
    } else {
        s.w_off
    }
}

/// Window function value at `t`, for `0 <= t <= t_f`.
pub fn window(t: f64, schedule: &RampSchedule) -> Result<f64> {
    schedule.validate()?;
    let tf = schedule.total();
    if !(0.0..=tf).contains(&t) {
        return Err(Error::domain("t", format!("must lie in [0, {tf}], got {t}")));
    }
    Ok(window_clamped(t, schedule))
}

pub fn schedule_sample(t: f64, params: &SystemParams, schedule: &RampSchedule) -> Result<ScheduleSample> {
    let w = window(t, schedule)?;
    Ok(ScheduleSample { t, w, delta: params.resonant_splitting() * w })
}

/// Time spent on the up-ramp between `Delta = 1.01 Delta_off` and
/// `Delta = 0.99 Delta_on`.
pub fn measured_ramp_time(schedule: &RampSchedule) -> Result<f64> {
    schedule.validate()?;
    let lower = 1.01 * schedule.w_off;
    let upper = 0.99;
    if lower >= upper {
        return Err(Error::domain("w_off", "ramp window degenerate"));
    }
    let lift = 1.0 - schedule.w_off;
    let u_lo = smoothstep_inverse((lower - schedule.w_off) / lift);
    let u_hi = smoothstep_inverse((upper - schedule.w_off) / lift);
    Ok(schedule.t_ramp * (u_hi - u_lo))
}

/// Time-local coefficients of the Hamiltonian, everything the integrator
/// needs to apply `H(t)` without forming the matrix.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Coefficients {
    diag: [f64; 6],
    /// `<R s| H |v s>`
    laser: C64,
    /// `<v0| H |01>`
    exchange: f64,
    /// `<v1| H |00>`
    counter_exchange: f64,
}

/// Precomputed evaluator for `H(t)` or `H0(t)`.
#[derive(Debug, Clone)]
pub struct Generator {
    params: SystemParams,
    schedule: RampSchedule,
    dynamics: Dynamics,
    laser_frequency: f64,
    phase: C64,
}

impl Generator {
    pub fn new(params: &SystemParams, schedule: &RampSchedule, dynamics: Dynamics) -> Result<Self> {
        params.validate()?;
        schedule.validate()?;
        Ok(Generator {
            params: *params,
            schedule: *schedule,
            dynamics,
            laser_frequency: params.laser_frequency(),
            phase: C64::from_polar(1.0, params.ex_phase),
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn schedule(&self) -> &RampSchedule {
        &self.schedule
    }

    /// Flux-qubit splitting `E_S(t) = sqrt(epsilon^2 + Delta(t)^2)`.
    pub fn squid_splitting(&self, t: f64) -> f64 {
        let delta = self.params.resonant_splitting() * window_clamped(t, &self.schedule);
        if self.params.epsilon == 0.0 {
            delta.abs()
        } else {
            self.params.epsilon.hypot(delta)
        }
    }

    /// Upper bound of `max_i |H_ii|` over the whole protocol.
    pub fn max_diagonal(&self) -> f64 {
        let p = &self.params;
        let half_split = 0.5 * p.epsilon.hypot(p.resonant_splitting());
        [p.w_e_minus_down, p.w_up_minus_down, 0.0]
            .iter()
            .map(|a| a.abs() + half_split)
            .fold(0.0, f64::max)
    }

    pub(crate) fn coefficients(&self, t: f64) -> Coefficients {
        let p = &self.params;
        let half = 0.5 * self.squid_splitting(t);
        let levels = [p.w_e_minus_down, p.w_up_minus_down, 0.0];
        let mut diag = [0.0; 6];
        for (a, level) in levels.iter().enumerate() {
            diag[2 * a] = level + half;
            diag[2 * a + 1] = level - half;
        }
        let wt = self.laser_frequency * t;
        let laser = match p.laser {
            LaserDrive::Full => self.phase * (-2.0 * p.omega_ex * wt.cos()),
            LaserDrive::CoRotating => self.phase * C64::from_polar(-p.omega_ex, -wt),
        };
        let (exchange, counter_exchange) = match (self.dynamics, p.squid_coupling) {
            (Dynamics::Uncoupled, _) => (0.0, 0.0),
            (Dynamics::Coupled, SquidCoupling::CoRotating) => (-p.omega_bs, 0.0),
            (Dynamics::Coupled, SquidCoupling::Full) => (-p.omega_bs, -p.omega_bs),
        };
        Coefficients { diag, laser, exchange, counter_exchange }
    }

    /// Dense `H(t)`.
    pub fn matrix(&self, t: f64) -> HamiltonianMatrix {
        let c = self.coefficients(t);
        let mut h = Mat6::zeros();
        for (i, d) in c.diag.iter().enumerate() {
            h[(i, i)] = C64::new(*d, 0.0);
        }
        // Rydberg <-> virtual, same SQUID level
        for (r, v) in [(0, 2), (1, 3)] {
            h[(r, v)] = c.laser;
            h[(v, r)] = c.laser.conj();
        }
        h[(3, 4)] = C64::new(c.exchange, 0.0);
        h[(4, 3)] = C64::new(c.exchange, 0.0);
        h[(2, 5)] = C64::new(c.counter_exchange, 0.0);
        h[(5, 2)] = C64::new(c.counter_exchange, 0.0);
        HamiltonianMatrix(h)
    }

    /// `-i H(t) y`, using the sparsity of `H`.
    pub fn derivative<const C: usize>(&self, t: f64, y: &SMatrix<C64, 6, C>) -> SMatrix<C64, 6, C> {
        self.apply(&self.coefficients(t), y)
    }

    pub(crate) fn apply<const C: usize>(&self, c: &Coefficients, y: &SMatrix<C64, 6, C>) -> SMatrix<C64, 6, C> {
        let d = c.diag;
        let l = c.laser;
        let lc = l.conj();
        let bs = c.exchange;
        let bsx = c.counter_exchange;
        let mut out = SMatrix::<C64, 6, C>::zeros();
        for k in 0..C {
            let v = [y[(0, k)], y[(1, k)], y[(2, k)], y[(3, k)], y[(4, k)], y[(5, k)]];
            let hv = [
                v[0] * d[0] + l * v[2],
                v[1] * d[1] + l * v[3],
                v[2] * d[2] + lc * v[0] + v[5] * bsx,
                v[3] * d[3] + lc * v[1] + v[4] * bs,
                v[4] * d[4] + v[3] * bs,
                v[5] * d[5] + v[2] * bsx,
            ];
            for (i, x) in hv.iter().enumerate() {
                // -i (a + ib) = b - ia
                out[(i, k)] = C64::new(x.im, -x.re);
            }
        }
        out
    }
}

fn build(t: f64, params: &SystemParams, schedule: &RampSchedule, dynamics: Dynamics) -> Result<HamiltonianMatrix> {
    let generator = Generator::new(params, schedule, dynamics)?;
    let tf = schedule.total();
    if !(0.0..=tf).contains(&t) {
        return Err(Error::domain("t", format!("must lie in [0, {tf}], got {t}")));
    }
    Ok(generator.matrix(t))
}

/// Full Hamiltonian at time `t`.
pub fn build_h(t: f64, params: &SystemParams, schedule: &RampSchedule) -> Result<HamiltonianMatrix> {
    build(t, params, schedule, Dynamics::Coupled)
}

/// Hamiltonian without the condensate/SQUID exchange, on the same schedule.
pub fn build_h0(t: f64, params: &SystemParams, schedule: &RampSchedule) -> Result<HamiltonianMatrix> {
    build(t, params, schedule, Dynamics::Uncoupled)
}

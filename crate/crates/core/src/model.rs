//! Domain types of the six-state memory model and the scaling relations that
//! connect single-atom couplings to the collective, bosonically enhanced ones.
//!
//! Energies in [`SystemParams`] and times in [`RampSchedule`] are dimensionless:
//! the hyperfine splitting is the unit of energy (`E_hfs = 1`, `hbar = 1`) and
//! time is measured in `1/E_hfs`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permeability [T m / A].
pub const MU_0: f64 = 4.0e-7 * PI;
/// Bohr magneton [J / T].
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;

/// Atomic part of a basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomicSector {
    /// One atom promoted to the Rydberg level: `(N_down - 1, N_up, 1)`.
    Rydberg,
    /// Virtual intermediate level: `(N_down - 1, N_up + 1, 0)`.
    Virtual,
    /// Both condensate components untouched: `(N_down, N_up, 0)`.
    Ground,
}

/// Flux-qubit energy eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SquidLevel {
    Excited,
    Ground,
}

impl SquidLevel {
    /// Sign of the `sigma_z` eigenvalue: `+1` for the excited level.
    pub fn sign(self) -> f64 {
        match self {
            SquidLevel::Excited => 1.0,
            SquidLevel::Ground => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            SquidLevel::Excited => SquidLevel::Ground,
            SquidLevel::Ground => SquidLevel::Excited,
        }
    }
}

/// The six states spanning the truncated Hilbert space, in matrix order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisState {
    S11,
    S10,
    Sv1,
    Sv0,
    S01,
    S00,
}

impl BasisState {
    pub const ALL: [BasisState; 6] = [
        BasisState::S11,
        BasisState::S10,
        BasisState::Sv1,
        BasisState::Sv0,
        BasisState::S01,
        BasisState::S00,
    ];

    pub const fn index(self) -> usize {
        match self {
            BasisState::S11 => 0,
            BasisState::S10 => 1,
            BasisState::Sv1 => 2,
            BasisState::Sv0 => 3,
            BasisState::S01 => 4,
            BasisState::S00 => 5,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn from_sectors(atomic: AtomicSector, squid: SquidLevel) -> Self {
        match (atomic, squid) {
            (AtomicSector::Rydberg, SquidLevel::Excited) => BasisState::S11,
            (AtomicSector::Rydberg, SquidLevel::Ground) => BasisState::S10,
            (AtomicSector::Virtual, SquidLevel::Excited) => BasisState::Sv1,
            (AtomicSector::Virtual, SquidLevel::Ground) => BasisState::Sv0,
            (AtomicSector::Ground, SquidLevel::Excited) => BasisState::S01,
            (AtomicSector::Ground, SquidLevel::Ground) => BasisState::S00,
        }
    }

    pub fn atomic(self) -> AtomicSector {
        match self {
            BasisState::S11 | BasisState::S10 => AtomicSector::Rydberg,
            BasisState::Sv1 | BasisState::Sv0 => AtomicSector::Virtual,
            BasisState::S01 | BasisState::S00 => AtomicSector::Ground,
        }
    }

    pub fn squid(self) -> SquidLevel {
        match self {
            BasisState::S11 | BasisState::Sv1 | BasisState::S01 => SquidLevel::Excited,
            BasisState::S10 | BasisState::Sv0 | BasisState::S00 => SquidLevel::Ground,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BasisState::S11 => "|11>",
            BasisState::S10 => "|10>",
            BasisState::Sv1 => "|v1>",
            BasisState::Sv0 => "|v0>",
            BasisState::S01 => "|01>",
            BasisState::S00 => "|00>",
        }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How the optical drive enters the Rydberg/virtual block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaserDrive {
    /// `-2 |Omega_ex| cos(omega t)`, both rotating and counter-rotating parts.
    #[default]
    Full,
    /// Only the component co-rotating with the `virtual -> Rydberg` transition.
    CoRotating,
}

/// Which flux-qubit/condensate exchange terms are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SquidCoupling {
    /// Only `|01> <-> |v0>`: the SQUID gives up its quantum while an atom
    /// flips up. Leaves `|00>` exactly stationary.
    #[default]
    CoRotating,
    /// Full `C (x) sigma_x`, which also couples `|00> <-> |v1>`.
    Full,
}

/// Energies and couplings of the six-state Hamiltonian, in units of `E_hfs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    /// `omega_e - omega_down`.
    pub w_e_minus_down: f64,
    /// `omega_up - omega_down`, the hyperfine splitting itself.
    pub w_up_minus_down: f64,
    /// Collective condensate/SQUID coupling.
    pub omega_bs: f64,
    /// Collective optical coupling magnitude.
    pub omega_ex: f64,
    /// Phase of the optical coupling, in radians.
    pub ex_phase: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Current-basis bias of the flux qubit.
    pub epsilon: f64,
    pub laser: LaserDrive,
    pub squid_coupling: SquidCoupling,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::table1()
    }
}

impl SystemParams {
    /// The reference parameter set, in units of the hyperfine splitting.
    pub fn table1() -> Self {
        SystemParams {
            w_e_minus_down: 100.0,
            w_up_minus_down: 1.0,
            omega_bs: 0.15,
            omega_ex: 0.15,
            ex_phase: 0.0,
            delta1: 1.5,
            delta2: 0.0,
            epsilon: 0.0,
            laser: LaserDrive::Full,
            squid_coupling: SquidCoupling::CoRotating,
        }
    }

    /// The same set expressed in GHz for rubidium-87 (`E_hfs = 6.8 GHz`).
    ///
    /// With `angular` the GHz figures are read as `nu` and converted to
    /// `2 pi nu`; otherwise they are used directly as `hbar = 1` rates.
    pub fn rb87_ghz(angular: bool) -> Self {
        let scale = if angular { 2.0 * PI } else { 1.0 };
        SystemParams {
            w_e_minus_down: 68.0 * scale,
            w_up_minus_down: 6.8 * scale,
            omega_bs: 1.0 * scale,
            omega_ex: 1.0 * scale,
            delta1: 10.2 * scale,
            delta2: 0.0,
            ..Self::table1()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("w_e_minus_down", self.w_e_minus_down),
            ("w_up_minus_down", self.w_up_minus_down),
            ("omega_bs", self.omega_bs),
            ("omega_ex", self.omega_ex),
            ("ex_phase", self.ex_phase),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("epsilon", self.epsilon),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(Error::domain(field, "must be finite"));
            }
        }
        if self.delta1 <= 0.0 {
            return Err(Error::domain("delta1", format!("must be > 0, got {}", self.delta1)));
        }
        if self.omega_bs < 0.0 {
            return Err(Error::domain("omega_bs", format!("must be >= 0, got {}", self.omega_bs)));
        }
        if self.omega_ex < 0.0 {
            return Err(Error::domain("omega_ex", format!("must be >= 0, got {}", self.omega_ex)));
        }
        if self.w_up_minus_down <= 0.0 {
            return Err(Error::domain(
                "w_up_minus_down",
                format!("must be > 0, got {}", self.w_up_minus_down),
            ));
        }
        if self.w_e_minus_down <= self.w_up_minus_down {
            return Err(Error::domain(
                "w_e_minus_down",
                format!(
                    "must exceed w_up_minus_down ({}), got {}",
                    self.w_up_minus_down, self.w_e_minus_down
                ),
            ));
        }
        Ok(())
    }

    /// Laser frequency `delta2 - delta1 + omega_e - omega_up`.
    pub fn laser_frequency(&self) -> f64 {
        self.delta2 - self.delta1 + self.w_e_minus_down - self.w_up_minus_down
    }

    /// Flux-qubit splitting at resonance, `E_hfs + delta1`.
    pub fn resonant_splitting(&self) -> f64 {
        self.w_up_minus_down + self.delta1
    }

    /// Effective `|01> <-> |10>` coupling after eliminating the virtual level.
    pub fn two_photon_rabi(&self) -> f64 {
        (self.omega_ex.abs() * self.omega_bs.abs()) / self.delta1
    }

    /// Half-Rabi-cycle transfer time; infinite without coupling.
    pub fn transfer_time(&self) -> f64 {
        let omega = self.two_photon_rabi();
        if omega > 0.0 {
            FRAC_PI_2 / omega
        } else {
            f64::INFINITY
        }
    }
}

/// Timeline of the window function `W(t)`: flat lead-in at `w_off`, smooth
/// rise, resonant plateau, mirrored descent and a flat lead-out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSchedule {
    pub w_off: f64,
    pub t_ramp: f64,
    pub t_hold: f64,
    pub t_pre: f64,
    pub t_post: f64,
}

impl RampSchedule {
    pub const DEFAULT_W_OFF: f64 = 0.25;
    /// Nominal ramp time used when none is given [1/E_hfs].
    pub const DEFAULT_T_RAMP: f64 = 1.5;

    /// Plateau at the analytic transfer time and a lead-out of a tenth of it.
    pub fn for_params(params: &SystemParams, t_ramp: f64) -> Self {
        let tau = params.transfer_time();
        RampSchedule {
            w_off: Self::DEFAULT_W_OFF,
            t_ramp,
            t_hold: tau,
            t_pre: 0.0,
            t_post: 0.1 * tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w_off > 0.0 && self.w_off < 0.99) {
            return Err(Error::domain("w_off", format!("must lie in (0, 0.99), got {}", self.w_off)));
        }
        let durations = [
            ("t_ramp", self.t_ramp),
            ("t_hold", self.t_hold),
            ("t_pre", self.t_pre),
            ("t_post", self.t_post),
        ];
        for (field, v) in durations {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Total protocol duration `t_pre + 2 t_ramp + t_hold + t_post`.
    pub fn total(&self) -> f64 {
        self.t_pre + 2.0 * self.t_ramp + self.t_hold + self.t_post
    }

    pub fn with_ramp(self, t_ramp: f64) -> Self {
        RampSchedule { t_ramp, ..self }
    }

    pub fn with_hold(self, t_hold: f64) -> Self {
        RampSchedule { t_hold, ..self }
    }
}

/// Laboratory-scale inputs for the order-of-magnitude estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalInputs {
    pub n_up: f64,
    pub n_down: f64,
    /// Single-atom magnetic (condensate/SQUID) Rabi frequency [Hz].
    pub omega_single_bs: f64,
    /// Single-atom optical Rabi frequency [Hz].
    pub omega_single_ex: f64,
    /// SQUID loop current [A].
    pub loop_current: f64,
    /// SQUID loop radius [m].
    pub loop_radius: f64,
    /// Condensate distance from the loop plane, on axis [m].
    pub separation: f64,
    /// Hyperfine splitting [Hz].
    pub e_hfs_hz: f64,
    /// Detuning in units of the collective SQUID coupling, for the time estimate.
    pub detuning_ratio: f64,
    /// Detuning used for the flux-qubit resonance condition [Hz].
    pub resonance_detuning_hz: f64,
}

impl Default for PhysicalInputs {
    fn default() -> Self {
        PhysicalInputs {
            n_up: 5.0e5,
            n_down: 5.0e5,
            omega_single_bs: 1.0e3,
            omega_single_ex: 1.0e6,
            loop_current: 1.0e-6,
            loop_radius: 1.0e-6,
            separation: 25.0e-6,
            e_hfs_hz: 6.8e9,
            detuning_ratio: 10.0,
            resonance_detuning_hz: 10.2e9,
        }
    }
}

impl PhysicalInputs {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("n_up", self.n_up),
            ("n_down", self.n_down),
            ("omega_single_bs", self.omega_single_bs),
            ("omega_single_ex", self.omega_single_ex),
            ("loop_current", self.loop_current),
            ("loop_radius", self.loop_radius),
            ("separation", self.separation),
            ("e_hfs_hz", self.e_hfs_hz),
            ("detuning_ratio", self.detuning_ratio),
            ("resonance_detuning_hz", self.resonance_detuning_hz),
        ];
        for (field, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(field, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn total_atoms(&self) -> f64 {
        self.n_up + self.n_down
    }
}

/// Bosonically enhanced Rabi frequency `sqrt(n_up n_down) * omega_single`.
pub fn bosonic_rabi(n_up: f64, n_down: f64, omega_single: f64) -> Result<f64> {
    if !(n_up >= 1.0) {
        return Err(Error::domain("n_up", format!("must be >= 1, got {n_up}")));
    }
    if !(n_down >= 1.0) {
        return Err(Error::domain("n_down", format!("must be >= 1, got {n_down}")));
    }
    if !(omega_single > 0.0) {
        return Err(Error::domain("omega_single", format!("must be > 0, got {omega_single}")));
    }
    Ok((n_up * n_down).sqrt() * omega_single)
}

/// Effective two-photon Rabi frequency `|omega_ex| |omega_bs| / delta1`.
pub fn two_photon_rabi(omega_ex: f64, omega_bs: f64, delta1: f64) -> Result<f64> {
    if !(delta1 > 0.0) {
        return Err(Error::domain("delta1", format!("must be > 0, got {delta1}")));
    }
    Ok(omega_ex.abs() * omega_bs.abs() / delta1)
}

/// Half a Rabi cycle, `pi / (2 omega)`.
pub fn transfer_time(omega_two_photon: f64) -> Result<f64> {
    if !(omega_two_photon > 0.0) {
        return Err(Error::domain(
            "omega_two_photon",
            "no coupling, infinite transfer time",
        ));
    }
    Ok(FRAC_PI_2 / omega_two_photon)
}

/// Two-photon detuning that balances the light shifts of `|01>` and `|10>`,
/// `(|omega_bs|^2 - |omega_ex|^2) / delta1`.
pub fn stark_balanced_delta2(omega_bs: f64, omega_ex: f64, delta1: f64) -> Result<f64> {
    if !(delta1 > 0.0) {
        return Err(Error::domain("delta1", format!("must be > 0, got {delta1}")));
    }
    Ok((omega_bs * omega_bs - omega_ex * omega_ex) / delta1)
}

/// On-axis field of a circular current loop, `mu0 I R^2 / (2 (R^2 + z^2)^{3/2})`.
pub fn loop_field_on_axis(current: f64, radius: f64, distance: f64) -> Result<f64> {
    if !(current > 0.0) {
        return Err(Error::domain("current", format!("must be > 0, got {current}")));
    }
    if !(radius > 0.0) {
        return Err(Error::domain("radius", format!("must be > 0, got {radius}")));
    }
    if !(distance >= 0.0) {
        return Err(Error::domain("distance", format!("must be >= 0, got {distance}")));
    }
    let r2 = radius * radius;
    Ok(MU_0 * current * r2 / (2.0 * (r2 + distance * distance).powf(1.5)))
}

/// Order-of-magnitude single-atom magnetic Rabi frequency `mu_B B / hbar`
/// [rad/s], assuming a transition moment of one Bohr magneton.
pub fn single_atom_magnetic_rabi(field: f64) -> Result<f64> {
    if !(field >= 0.0) {
        return Err(Error::domain("field", format!("must be >= 0, got {field}")));
    }
    Ok(BOHR_MAGNETON * field / HBAR)
}

/// Scalar report produced from [`PhysicalInputs`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub angular: bool,
    /// Collective magnetic coupling [rate].
    pub omega_bs: f64,
    /// Collective optical coupling, `sqrt(n_up) omega_single_ex` [rate].
    pub omega_ex: f64,
    /// `detuning_ratio * omega_bs` [rate].
    pub delta1: f64,
    pub omega_two_photon: f64,
    /// Transfer time [s].
    pub transfer_time: f64,
    /// Flux-qubit splitting needed for resonance, `E_hfs + delta1` [Hz].
    pub squid_splitting_hz: f64,
    /// Loop field at the condensate [T].
    pub loop_field: f64,
    /// Single-atom magnetic Rabi estimate from the loop field [rad/s].
    pub magnetic_rabi: f64,
}

/// Runs the scaling chain from atom numbers and single-atom couplings to a
/// transfer time. With `angular`, Hz figures are promoted to `2 pi f` before
/// being used as rates.
pub fn estimate(inputs: &PhysicalInputs, angular: bool) -> Result<Estimate> {
    inputs.validate()?;
    let scale = if angular { 2.0 * PI } else { 1.0 };
    let omega_bs = bosonic_rabi(inputs.n_up, inputs.n_down, inputs.omega_single_bs)? * scale;
    let omega_ex = inputs.n_up.sqrt() * inputs.omega_single_ex * scale;
    let delta1 = inputs.detuning_ratio * omega_bs;
    let omega_two_photon = two_photon_rabi(omega_ex, omega_bs, delta1)?;
    let tau = transfer_time(omega_two_photon)?;
    let loop_field = loop_field_on_axis(inputs.loop_current, inputs.loop_radius, inputs.separation)?;
    Ok(Estimate {
        angular,
        omega_bs,
        omega_ex,
        delta1,
        omega_two_photon,
        transfer_time: tau,
        squid_splitting_hz: inputs.e_hfs_hz + inputs.resonance_detuning_hz,
        loop_field,
        magnetic_rabi: single_atom_magnetic_rabi(loop_field)?,
    })
}

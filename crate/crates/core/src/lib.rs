//! Simulation of qubit transfer between a flux qubit and a two-component
//! condensate memory, where the memory's excited state is a single Rydberg
//! atom reached by a two-photon (SQUID + laser) process.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: basis, parameters, ramp schedule and the scaling relations.
//! * [`hamiltonian`]: the 6x6 Hamiltonian and window function.
//! * [`propagator`]: RK4 integration of states and propagators.
//! * [`protocol`]: transfer fidelity, Bloch-sphere average, sweeps.
//! * [`cli`]: configuration documents and output files for the `qram` tool.

// Negated comparisons reject NaN inputs along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod hamiltonian;
pub mod model;
pub mod propagator;
pub mod protocol;

pub use error::{Error, Result};
pub use hamiltonian::{build_h, build_h0, measured_ramp_time, window, Dynamics, HamiltonianMatrix};
pub use model::{BasisState, PhysicalInputs, RampSchedule, SystemParams};
pub use propagator::{evolve_propagator, evolve_state, IntegratorConfig, Propagator, StateVector};
pub use protocol::{
    averaged_fidelity, fidelity_trace, optimize_hold, prepare_initial, prepare_target, ramp_sweep, BlochAngles,
    PhaseReference, QuadratureSpec, TransferResult,
};

//! Simulation and pulse compilation for state permutations driven by
//! adiabatic passage through near level-crossings.
//!
//! Two model families are covered:
//!
//! * exchange-coupled spin chains with strong and weak links, evolved in the
//!   single-down-spin sector, where bias pulses on weakly linked sites move
//!   population between strong blocs ([`chain`], [`pulse`], [`propagator`],
//!   [`spectral`], [`permutation`], [`program`]);
//! * two three-level atoms in a damped cavity, whose weakly linked triple of
//!   states forms a decoherence-free subspace, with a CNOT implemented by a
//!   slow detuning sweep ([`cavity`]).
//!
//! [`bloc`] holds the strong/weak partitioning diagnostics shared by both.
//!
//! Energies are measured in units of the weak coupling and time in inverse
//! units of it. See [`chain::EnergyUnits`] for how energies convert into
//! phase rates.

pub mod acceptance;
pub mod bloc;
pub mod cavity;
pub mod chain;
pub mod error;
pub mod linalg;
pub mod permutation;
pub mod program;
pub mod propagator;
pub mod pulse;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

//! Simulation and analysis of a quantum heuristic for the traveling salesman
//! problem: a Grover-like iteration `G = -I_ψ0 C` where `C` imprints each
//! tour's cost as a phase.
//!
//! - [`instance`]: random directed instances, tour ranking, exact statistics
//! - [`phase`]: cost phases, `2M`-group discretization, validity diagnostics
//! - [`quantum_sim`]: full statevector iteration, measurement
//! - [`group_sim`]: exact reduced evolution in the group subspace
//! - [`classical_baseline`]: random-sampling heuristic with query counts
//! - [`theory`]: closed-form predictions

pub mod classical_baseline;
pub mod error;
pub mod group_sim;
pub mod instance;
pub mod phase;
pub mod quantum_sim;
pub mod theory;

pub use error::{Error, Result};
pub use instance::{Budget, Tour, TourIndex, TourSet, TspInstance};
pub use phase::{ConditionReport, GroupSpec, PhaseMap, PhaseStats};
pub use quantum_sim::{GroverConfig, Mode, StateVector};

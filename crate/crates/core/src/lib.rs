//! Two-qubit probe metrology in a common Lorentzian reservoir.
//!
//! The probe is a pair of two-level atoms sharing one structured bath. Its
//! reduced dynamics lives in the single-excitation sector and is driven by a
//! global, piecewise-constant detuning field. On top of the propagated
//! trajectory the crate evaluates quantum and classical Fisher information,
//! quantum speed limits, BLP non-Markovianity, concurrence and incoming-flow
//! statistics, and optimizes the control field for a terminal objective.
//!
//! All density matrices use the ordered basis `{|11>, |10>, |01>, |00>}`.

pub mod cli;
pub mod control;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod flows;
pub mod linalg;
pub mod metrology;
pub mod model;
pub mod nonmarkov;
pub mod speedlimits;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{C64, DensityMatrix4, InitialStateParam, ModelParams, Operator4, ProbeAmplitudes};

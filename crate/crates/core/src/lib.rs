//! Geometry of parameterized SU(2) dynamics and metrology at topological
//! phase transitions.
//!
//! Conventions: ħ = 1, J = σ/2, U(λ) = exp(−iT X(λ)·J). The "ground state"
//! of X·J is the eigenstate with Bloch vector +X̂.

pub mod adaptive;
pub mod control;
pub mod error;
pub mod geometry;
pub mod measurement;
pub mod models;
pub mod oracle;
pub mod su2;
pub mod verify;

pub use error::{QgeoError, Result};
pub use geometry::{GaugeFactor, GeometryReport, HamiltonianField};
pub use su2::{QubitState, Unitary2, Vec3};

//! Symplectic and processed integrators, canonical point transformations and
//! backward-error diagnostics for studying how the choice of coordinates
//! changes the behaviour of geometric integrators.

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod fd;
pub mod integrators;
pub mod models;
pub mod numeric;
pub mod rng;
pub mod state;
pub mod system;
pub mod transforms;

pub use error::{Error, Result};
pub use integrators::{solve, Method};
pub use state::{OdeState, PhaseState, Trajectory};
pub use system::{Hamiltonian, SeparableHamiltonian, VectorField};

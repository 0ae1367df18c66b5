//! Homoclinic orbits to the saddle-center of the reversible Hamiltonian family
//! `u'''' + a u'' - u + f(u, b) = 0`, found by shooting along the unstable
//! manifold and detecting hits of the fixed-point set of the reversal.

pub mod error;
pub mod homoclinic;
pub mod integrate;
pub mod io;
pub mod known;
pub mod scan;
pub mod spectral;
pub mod sysdef;

pub use error::{HomoclinicError, IntegrateError, ModelError, ScanError};
pub use homoclinic::{LocusPoint, MissProfile, Outcome, ShotConfig, Sigma};
pub use integrate::{CrossingRecord, Direction, StepControl, Trajectory};
pub use known::KnownSolution;
pub use spectral::{EquilibriumKind, EquilibriumSpectrum};
pub use sysdef::{NonlinearitySpec, Params, State, Term};
pub use scan::{Execution, GridSpec};

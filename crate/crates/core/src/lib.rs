//! Particle simulator and diagnostics engine for the relativistic
//! Vlasov-Poisson system in the plasma case.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod field;
pub mod functionals;
pub mod harness;
pub mod kinetics;
pub mod localization;
pub mod pusher;
pub mod reduce;
pub mod scenario;
pub mod vec3;
pub mod verify;

pub use error::{Error, Result};
pub use kinetics::{Ensemble, Particle};
pub use vec3::Vec3;

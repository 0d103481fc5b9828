//! Electric field backends for `E = grad phi`, `Delta phi = rho`.
//!
//! All backends use `E(x) = (1/4 pi) int rho(y) (x - y) / |x - y|^3 dy`,
//! which points away from the charge.

pub mod direct;
pub mod fft;
pub mod grid;
pub mod poisson;
pub mod radial;

pub use direct::{direct_field_energy, direct_field_on_particles, direct_sum_field};
pub use grid::{deposit_weighted, grid_deposit, interpolate_field, FieldGrid, GridQuantity, GridSpec};
pub use poisson::{grid_poisson_solve, PoissonSolver};
pub use radial::{build_radial_profile, radial_field, RadialProfile, SmoothShellField};

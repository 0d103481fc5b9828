//! Scalar functionals of an ensemble: moments, energies, the singular
//! weight, the space-time and inverse angular momentum functionals, and the
//! majority-set reports.

pub mod cutoff;
pub mod majority;
pub mod moments;
pub mod params;
pub mod series;
pub mod weight;

pub use cutoff::{cutoff_phi, cutoff_phi_prime, phi, psi_tilde};
pub use majority::{majority_report, MajorityParams, MajorityReport};
pub use moments::{
    beta_of_speed, dyadic_epsilon, dyadic_scale, inverse_angular_momentum_moment, kinetic_energy,
    kinetic_energy_abs, log2_enlarged_moment_cylindrical, log2_enlarged_moment_radial, log2_moment, moment,
    total_energy, weighted_spacetime_increment, EnergyTriple,
};
pub use params::FunctionalParams;
pub use series::{DiagnosticsRecord, DiagnosticsSeries};
pub use weight::{omega_weight, weight_positivity_check, PositivityReport, Sign, WeightParams};

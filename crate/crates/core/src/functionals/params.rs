use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Parameters of the recorded functionals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FunctionalParams {
    /// Orders `n` of the recorded moments `M_n`.
    pub moment_orders: Vec<f64>,
    /// Exponent `eps*` of the space-time functional; `None` means
    /// `eps / 100` with `eps = 10 / n_c`.
    pub eps_star: Option<f64>,
    /// Axis regularization of the space-time functional.
    pub delta0: f64,
    /// Further regularizations tracked alongside for stability studies.
    pub delta0_extra: Vec<f64>,
    /// Lower cutoff of the inverse angular momentum moment.
    pub floor: f64,
    /// Moment order surrogate defining the dyadic scale `Mt`.
    pub n_c: f64,
}

impl Default for FunctionalParams {
    fn default() -> Self {
        FunctionalParams {
            moment_orders: vec![1.0, 2.0, 20.0],
            eps_star: None,
            delta0: 1e-3,
            delta0_extra: Vec::new(),
            floor: 1e-3,
            n_c: 20.0,
        }
    }
}

impl FunctionalParams {
    pub fn eps_star(&self) -> f64 {
        self.eps_star.unwrap_or(10.0 / self.n_c / 100.0)
    }

    pub fn validate(&self) -> Result<()> {
        for &n in &self.moment_orders {
            if !(n >= 0.0 && n.is_finite()) {
                return Err(validation(format!("moment order must be a nonnegative number, got {n}")));
            }
        }
        let e = self.eps_star();
        if !(e > 0.0 && e < 0.5) {
            return Err(validation(format!("eps_star must lie in (0, 1/2), got {e}")));
        }
        for &d in std::iter::once(&self.delta0).chain(&self.delta0_extra) {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(validation(format!("delta0 must be nonnegative, got {d}")));
            }
        }
        if !(self.floor > 0.0 && self.floor.is_finite()) {
            return Err(validation(format!("floor must be positive, got {}", self.floor)));
        }
        if !(self.n_c > 1.0 && self.n_c.is_finite()) {
            return Err(validation(format!("n_c must exceed 1, got {}", self.n_c)));
        }
        Ok(())
    }
}

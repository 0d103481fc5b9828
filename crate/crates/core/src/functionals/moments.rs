//! Moments, energies and the ensemble functionals recorded each step.

use serde::{Deserialize, Serialize};

use super::cutoff::psi_tilde;
use crate::error::{validation, Result};
use crate::kinetics::{lorentz_factor, Ensemble};
use crate::reduce::block_sum;

/// `M_n = sum_i w_i (1 + |v_i|)^n`.
pub fn moment(ensemble: &Ensemble, n: f64) -> f64 {
    if n == 0.0 {
        return block_sum(&ensemble.particles, |p| p.w);
    }
    block_sum(&ensemble.particles, |p| p.w * (1.0 + p.v.norm()).powf(n))
}

/// `log2 M_n`, computed without overflow for large `n`.
pub fn log2_moment(ensemble: &Ensemble, n: f64) -> f64 {
    if ensemble.is_empty() {
        return f64::NEG_INFINITY;
    }
    let logs: Vec<f64> = ensemble
        .particles
        .iter()
        .map(|p| if p.w > 0.0 { p.w.log2() + n * (1.0 + p.v.norm()).log2() } else { f64::NEG_INFINITY })
        .collect();
    log2_sum(&logs)
}

/// `log2(sum 2^{l_i})` with a stable shift.
pub fn log2_sum(logs: &[f64]) -> f64 {
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    let s: f64 = logs.iter().map(|l| (l - top).exp2()).sum();
    top + s.log2()
}

/// Conserved kinetic energy `sum w sqrt(1 + |v|^2)`.
pub fn kinetic_energy(ensemble: &Ensemble) -> f64 {
    block_sum(&ensemble.particles, |p| p.w * lorentz_factor(p.v))
}

/// Kinetic term with `|v|` in place of `sqrt(1 + |v|^2)`.
pub fn kinetic_energy_abs(ensemble: &Ensemble) -> f64 {
    block_sum(&ensemble.particles, |p| p.w * p.v.norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTriple {
    pub kinetic: f64,
    pub field: f64,
    pub total: f64,
}

/// Combine the kinetic energy of the ensemble with a field energy computed
/// by the active backend.
pub fn total_energy(ensemble: &Ensemble, field_energy: f64) -> EnergyTriple {
    let kinetic = kinetic_energy(ensemble);
    EnergyTriple { kinetic, field: field_energy, total: kinetic + field_energy }
}

/// `dt sum w |v_p|^{2+2e} / ((|x_p| + delta0)^{1-2e} <v>)`, with `_p` the
/// planar part.
pub fn weighted_spacetime_increment(ensemble: &Ensemble, eps_star: f64, dt: f64, delta0: f64) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(validation(format!("dt must be positive, got {dt}")));
    }
    if !(0.0..0.5).contains(&eps_star) {
        return Err(validation(format!("eps_star must lie in [0, 1/2), got {eps_star}")));
    }
    if !(delta0 >= 0.0) {
        return Err(validation(format!("delta0 must be nonnegative, got {delta0}")));
    }
    Ok(dt * spacetime_integrand(ensemble, eps_star, delta0))
}

/// Instantaneous integrand of the space-time functional.
pub fn spacetime_integrand(ensemble: &Ensemble, eps_star: f64, delta0: f64) -> f64 {
    block_sum(&ensemble.particles, |p| {
        let vp = p.v.planar_norm();
        if vp == 0.0 {
            return 0.0;
        }
        let num = vp.powf(2.0 + 2.0 * eps_star);
        let den = (p.x.planar_norm() + delta0).powf(1.0 - 2.0 * eps_star) * lorentz_factor(p.v);
        p.w * num / den
    })
}

/// Smooth high-pass factor `1 - psi(1.5 |l| / floor)`: 0 below
/// `floor * 5/6`, 1 from `floor` on.
#[inline]
pub fn angular_cutoff(ell: f64, floor: f64) -> f64 {
    1.0 - psi_tilde(1.5 * ell.abs() / floor)
}

/// `J = sum w |l|^{-13} (1 - psi(1.5 |l| / floor))`.
pub fn inverse_angular_momentum_moment(ensemble: &Ensemble, floor: f64) -> Result<f64> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(validation(format!("angular momentum floor must be positive, got {floor}")));
    }
    Ok(block_sum(&ensemble.particles, |p| {
        let ell = p.ell();
        let cut = angular_cutoff(ell, floor);
        if cut == 0.0 {
            0.0
        } else {
            p.w * cut * ell.abs().powi(-13)
        }
    }))
}

/// `log2` of the radial enlarged moment `(1 + t)^{2 n} + sup M_n`.
pub fn log2_enlarged_moment_radial(t: f64, n_r: f64, log2_sup_moment: f64) -> f64 {
    log2_sum(&[2.0 * n_r * (1.0 + t).log2(), log2_sup_moment])
}

/// `log2` of the cylindrical enlarged moment `(1 + t)^{n^2} + sup M_n`.
pub fn log2_enlarged_moment_cylindrical(t: f64, n_c: f64, log2_sup_moment: f64) -> f64 {
    log2_sum(&[n_c * n_c * (1.0 + t).log2(), log2_sup_moment])
}

/// Smallest positive integer `k` with `2^k >= M^{1/(n_c - 1)}`.
pub fn dyadic_scale(log2_enlarged: f64, n_c: f64) -> i32 {
    let target = log2_enlarged / (n_c - 1.0);
    (target.ceil() as i32).max(1)
}

/// `eps = 10 / n_c`.
pub fn dyadic_epsilon(n_c: f64) -> f64 {
    10.0 / n_c
}

/// `beta(x, v) = max(0, log2(sup |V|) / Mt)`.
pub fn beta_of_speed(max_speed: f64, mt: i32) -> f64 {
    if max_speed <= 0.0 {
        0.0
    } else {
        (max_speed.log2() / mt as f64).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::Particle;
    use crate::vec3::Vec3;

    fn one(x: Vec3, v: Vec3, w: f64) -> Ensemble {
        Ensemble::new(vec![Particle::new(x, v, w, 1.0)], 0.0, 0)
    }

    #[test]
    fn moment_examples() {
        assert_eq!(moment(&one(Vec3::ZERO, Vec3::ZERO, 1.0), 7.5), 1.0);
        assert_eq!(moment(&one(Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0), 2.0), 2.0), 8.0);
        let e = Ensemble::new(
            vec![
                Particle::new(Vec3::ZERO, Vec3::new(3.0, 0.0, 0.0), 0.25, 1.0),
                Particle::new(Vec3::ZERO, Vec3::new(0.0, 9.0, 0.0), 0.5, 1.0),
            ],
            0.0,
            0,
        );
        assert_eq!(moment(&e, 0.0), 0.75);
        assert!((log2_moment(&e, 3.0) - moment(&e, 3.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn single_particle_energy() {
        let e = one(Vec3::ZERO, Vec3::ZERO, 0.5);
        let t = total_energy(&e, 0.0);
        assert_eq!((t.kinetic, t.field, t.total), (0.5, 0.0, 0.5));
    }

    #[test]
    fn spacetime_increment_examples() {
        let e = one(Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), 1.0);
        let a = weighted_spacetime_increment(&e, 0.0, 1.0, 0.0).unwrap();
        assert!((a - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let z = one(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 4.0), 1.0);
        assert_eq!(weighted_spacetime_increment(&z, 0.1, 1.0, 1e-3).unwrap(), 0.0);
        assert!(weighted_spacetime_increment(&e, 0.1, 0.0, 1e-3).is_err());
    }

    #[test]
    fn inverse_angular_momentum_examples() {
        let e = one(Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), 1.0);
        let j = inverse_angular_momentum_moment(&e, 1e-3).unwrap();
        assert_eq!(j, 2f64.powi(-13));
        let small = one(Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), 1.0);
        assert_eq!(inverse_angular_momentum_moment(&small, 0.3).unwrap(), 0.0);
        assert!(inverse_angular_momentum_moment(&small, 0.0).is_err());
    }

    #[test]
    fn dyadic_scale_definition() {
        // M = 2^38, n_c = 20: smallest k with 2^k >= 2^2 is 2.
        assert_eq!(dyadic_scale(38.0, 20.0), 2);
        assert_eq!(dyadic_scale(38.5, 20.0), 3);
        assert_eq!(dyadic_scale(0.0, 20.0), 1);
        let l = log2_enlarged_moment_cylindrical(1.0, 20.0, 3.0);
        assert!((l - (2f64.powf(400.0) + 8.0).log2()).abs() < 1e-12);
        assert!((log2_enlarged_moment_radial(0.0, 10.0, 1.0) - 3f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_of_speed(0.5, 4), 0.0);
        assert_eq!(beta_of_speed(16.0, 8), 0.5);
    }
}

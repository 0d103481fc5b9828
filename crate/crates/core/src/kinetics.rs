//! Particles, ensembles and relativistic kinematics.

use serde::{Deserialize, Serialize};

use crate::reduce;
use crate::vec3::Vec3;

/// Velocity `v / sqrt(1 + |v|^2)` associated with the momentum `v`.
#[inline]
pub fn relativistic_velocity(v: Vec3) -> Vec3 {
    v / lorentz_factor(v)
}

/// `<v> = sqrt(1 + |v|^2)`.
#[inline]
pub fn lorentz_factor(v: Vec3) -> f64 {
    (1.0 + v.norm_sq()).sqrt()
}

/// Planar angular momentum `x1 v2 - x2 v1`.
#[inline]
pub fn planar_angular_momentum(x: Vec3, v: Vec3) -> f64 {
    x.0[0] * v.0[1] - x.0[1] * v.0[0]
}

/// One characteristic curve of the kinetic equation.
///
/// `x0`, `v0` and `ell0` are frozen at construction. The distribution value
/// `f0` is transported unchanged along the curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub x: Vec3,
    pub v: Vec3,
    pub w: f64,
    pub f0: f64,
    pub x0: Vec3,
    pub v0: Vec3,
    pub ell0: f64,
}

impl Particle {
    pub fn new(x: Vec3, v: Vec3, w: f64, f0: f64) -> Self {
        Particle {
            x,
            v,
            w,
            f0,
            x0: x,
            v0: v,
            ell0: planar_angular_momentum(x, v),
        }
    }

    /// Current planar angular momentum.
    #[inline]
    pub fn ell(&self) -> f64 {
        planar_angular_momentum(self.x, self.v)
    }

    /// Value of the distribution function at the particle's current phase
    /// point. Vlasov transport keeps it equal to the initial value.
    #[inline]
    pub fn distribution_value(&self) -> f64 {
        self.f0
    }
}

/// Weighted particle cloud approximating `f(t, x, v)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub particles: Vec<Particle>,
    pub t: f64,
    pub seed: u64,
}

impl Ensemble {
    pub fn new(particles: Vec<Particle>, t: f64, seed: u64) -> Self {
        Ensemble { particles, t, seed }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        reduce::block_sum(&self.particles, |p| p.w)
    }

    /// Total angular momentum `sum w x × v`.
    pub fn angular_momentum(&self) -> Vec3 {
        reduce::block_sum_vec(&self.particles, |p| p.x.cross(p.v) * p.w)
    }

    pub fn max_speed(&self) -> f64 {
        reduce::par_max(&self.particles, |p| p.v.norm())
    }

    pub fn min_planar_radius(&self) -> f64 {
        reduce::par_min(&self.particles, |p| p.x.planar_norm())
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.particles.iter().map(|p| p.x).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn velocity_examples() {
        assert_eq!(relativistic_velocity(Vec3::ZERO), Vec3::ZERO);
        let u = relativistic_velocity(Vec3::new(3.0, 0.0, 0.0));
        assert!((u.x() - 3.0 / 10f64.sqrt()).abs() < 1e-15);
        assert!((u.x() - 0.94868).abs() < 1e-5);
        assert_eq!(u.y(), 0.0);
        let big = relativistic_velocity(Vec3::new(0.0, 1e6, 0.0)).norm();
        assert!(big > 0.999999 && big < 1.0);
    }

    #[test]
    fn angular_momentum_examples() {
        let l = |x: [f64; 3], v: [f64; 3]| planar_angular_momentum(x.into(), v.into());
        assert_eq!(l([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), 1.0);
        assert_eq!(l([1.0, 0.0, 5.0], [2.0, 0.0, -3.0]), 0.0);
        assert!((l([0.3, -0.4, 1.0], [2.0, 1.0, 0.0]) - 1.1).abs() < 1e-15);
    }

    #[test]
    fn particle_freezes_initial_data() {
        let p = Particle::new(Vec3::new(0.3, -0.4, 1.0), Vec3::new(2.0, 1.0, 0.0), 0.5, 0.2);
        assert_eq!(p.ell0, planar_angular_momentum(p.x0, p.v0));
        assert_eq!(p.distribution_value(), 0.2);
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        prop::array::uniform3(-1e3f64..1e3).prop_map(Vec3)
    }

    proptest! {
        #[test]
        fn velocity_is_odd_and_subluminal(v in vec3()) {
            let a = relativistic_velocity(v);
            let b = relativistic_velocity(-v);
            prop_assert_eq!(a, -b);
            prop_assert!(a.norm() < 1.0);
        }

        #[test]
        fn speed_is_monotone_along_rays(v in vec3(), s in 1.0f64..10.0) {
            prop_assume!(v.norm() > 1e-6);
            prop_assert!(relativistic_velocity(v * s).norm() >= relativistic_velocity(v).norm());
        }

        #[test]
        fn planar_rotation_preserves_ell(x in vec3(), v in vec3(), th in 0.0f64..std::f64::consts::TAU) {
            let (s, c) = th.sin_cos();
            let rot = |u: Vec3| Vec3::new(c * u.x() - s * u.y(), s * u.x() + c * u.y(), u.z());
            let l0 = planar_angular_momentum(x, v);
            let l1 = planar_angular_momentum(rot(x), rot(v));
            let scale = x.planar_norm() * v.planar_norm() + 1.0;
            prop_assert!((l0 - l1).abs() <= 1e-12 * scale);
        }
    }
}

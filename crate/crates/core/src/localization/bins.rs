//! Dyadic cutoffs in frequency and momentum.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::field::grid::{deposit_weighted, FieldGrid, GridSpec};
use crate::functionals::cutoff::{pow2, psi_tilde};
use crate::kinetics::Ensemble;

/// Shell cutoff `psi_k(x) = psi(|x| / 2^k) - psi(|x| / 2^{k-1})`, supported
/// in `(0.625 * 2^k, 1.5 * 2^k)`.
#[inline]
pub fn dyadic_cutoff(magnitude: f64, k: i32) -> f64 {
    let a = magnitude.abs();
    psi_tilde(a * pow2(-k)) - psi_tilde(a * pow2(1 - k))
}

/// Momentum bin profile: `psi(|v|)` for `j = 0`, `psi_j(|v|)` for `j > 0`.
#[inline]
pub fn momentum_cutoff(magnitude: f64, j: u32) -> f64 {
    if j == 0 {
        psi_tilde(magnitude)
    } else {
        dyadic_cutoff(magnitude, j as i32)
    }
}

/// Frequency shell `k`, planar momentum shell `j1`, momentum shell `j2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicIndex {
    pub k: i32,
    pub j1: u32,
    pub j2: u32,
}

impl DyadicIndex {
    pub fn new(k: i32, j1: u32, j2: u32) -> Result<Self> {
        if j1 > j2 + 2 {
            return Err(validation(format!("planar shell j1 = {j1} exceeds j2 + 2 = {}", j2 + 2)));
        }
        Ok(DyadicIndex { k, j1, j2 })
    }
}

/// Smooth bin weight `phi_{j1}(|v_planar|) phi_{j2}(|v|)`.
#[inline]
pub fn bin_weight(v: crate::vec3::Vec3, j1: u32, j2: u32) -> f64 {
    momentum_cutoff(v.planar_norm(), j1) * momentum_cutoff(v.norm(), j2)
}

/// Smallest `J` such that the bins `j2 <= J` cover every momentum in the
/// ensemble.
pub fn top_momentum_shell(ensemble: &Ensemble) -> u32 {
    let vmax = ensemble.particles.iter().map(|p| p.v.norm()).fold(0.0, f64::max);
    let mut j = 0u32;
    while 1.25 * pow2(j as i32) < vmax {
        j += 1;
    }
    j
}

/// All bins `(j1, j2)` with `j2 <= top` and `j1 <= j2 + 1`.
pub fn momentum_bins(top: u32) -> Vec<(u32, u32)> {
    (0..=top).flat_map(|j2| (0..=j2 + 1).map(move |j1| (j1, j2))).collect()
}

/// Deposit `w phi_{j1}(|v_planar|) phi_{j2}(|v|)` onto the grid.
pub fn velocity_bin(ensemble: &Ensemble, j1: u32, j2: u32, spec: &GridSpec) -> Result<FieldGrid> {
    DyadicIndex::new(0, j1, j2)?;
    deposit_weighted(ensemble, spec, |p| p.w * bin_weight(p.v, j1, j2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::Particle;
    use crate::vec3::Vec3;
    use proptest::prelude::*;

    #[test]
    fn shell_values() {
        assert_eq!(dyadic_cutoff(pow2(5), 5), 1.0);
        assert_eq!(dyadic_cutoff(pow2(-3), -1), 0.0);
        assert_eq!(dyadic_cutoff(0.0, 3), 0.0);
    }

    #[test]
    fn full_weight_on_plateau() {
        // |v_planar| = 2^j1, |v| = 2^j2 with j1 = j2.
        let v = Vec3::new(8.0, 0.0, 0.0);
        assert_eq!(bin_weight(v, 3, 3), 1.0);
        let far = Vec3::new(0.0, 0.0, pow2(7));
        assert_eq!(bin_weight(far, 0, 2), 0.0);
    }

    #[test]
    fn bins_respect_index_bound() {
        assert!(DyadicIndex::new(1, 4, 2).is_ok());
        assert!(DyadicIndex::new(1, 5, 2).is_err());
        let bins = momentum_bins(2);
        assert_eq!(bins.len(), 2 + 3 + 4);
    }

    #[test]
    fn deposits_sum_to_mass() {
        let ps: Vec<Particle> = (0..200)
            .map(|i| {
                let t = i as f64;
                Particle::new(
                    Vec3::new((t * 0.31).sin(), (t * 0.77).cos(), (t * 0.13).sin()) * 0.8,
                    Vec3::new((t * 1.7).sin() * 9.0, (t * 0.9).cos() * 3.0, (t * 2.3).sin() * 5.0),
                    0.005,
                    1.0,
                )
            })
            .collect();
        let e = Ensemble::new(ps, 0.0, 0);
        let spec = GridSpec::centered_cube(8, 1.0).unwrap();
        let total: f64 = momentum_bins(top_momentum_shell(&e))
            .into_iter()
            .map(|(j1, j2)| velocity_bin(&e, j1, j2, &spec).unwrap().grid_mass())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn shells_telescope(e in -30.0f64..30.0) {
            let x = 2f64.powf(e);
            let s: f64 = (-40..=40).map(|k| dyadic_cutoff(x, k)).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn momentum_bins_partition(v in prop::array::uniform3(-40.0f64..40.0)) {
            let v = Vec3(v);
            let top = 6;
            let s: f64 = momentum_bins(top).into_iter().map(|(a, b)| bin_weight(v, a, b)).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}

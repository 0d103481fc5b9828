//! Frequency-localized fields on the periodic grid box.
//!
//! The localized field of shell `k` has the transform
//! `-i xi / |xi|^2 psi_k(|xi|) rho_hat(xi)`, the shell piece of `E = grad phi`
//! with `Delta phi = rho`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bins::{dyadic_cutoff, DyadicIndex};
use crate::error::{Error, Result};
use crate::field::fft::{fft3, frequency_index};
use crate::field::grid::{FieldGrid, GridSpec};
use crate::functionals::cutoff::{pow2, psi_tilde};
use crate::vec3::Vec3;

/// Shells `k` whose support fits between the box scale and the Nyquist
/// frequency: `[log2(2 pi / L) + 1, log2(pi / h) - 1]`.
pub fn resolvable_band(spec: &GridSpec) -> (i32, i32) {
    let l = spec.box_lengths().into_iter().fold(f64::INFINITY, f64::min);
    let k_min = ((TAU / l).log2() + 1.0).ceil() as i32;
    let k_max = ((PI / spec.spacing).log2() - 1.0).floor() as i32;
    (k_min, k_max)
}

pub fn check_resolvable(spec: &GridSpec, k: i32) -> Result<()> {
    let (k_min, k_max) = resolvable_band(spec);
    if k < k_min || k > k_max {
        return Err(Error::Resolution { k, k_min, k_max });
    }
    Ok(())
}

/// Transform of a gridded density, reused across shells.
pub struct SpectralDensity {
    pub spec: GridSpec,
    pub rho_hat: Vec<Complex64>,
    /// Wave vector of each bin.
    wave: Vec<[f64; 3]>,
}

impl SpectralDensity {
    pub fn new(grid: &FieldGrid) -> Self {
        let spec = grid.spec;
        let mut rho_hat: Vec<Complex64> = grid.rho.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        fft3(&mut rho_hat, spec.dims, false);
        let [n0, n1, n2] = spec.dims;
        let lengths = spec.box_lengths();
        let mut wave = vec![[0.0; 3]; spec.len()];
        wave.par_chunks_mut(n1 * n2).enumerate().for_each(|(i, plane)| {
            let a = TAU * frequency_index(i, n0) as f64 / lengths[0];
            for j in 0..n1 {
                let b = TAU * frequency_index(j, n1) as f64 / lengths[1];
                for k in 0..n2 {
                    let c = TAU * frequency_index(k, n2) as f64 / lengths[2];
                    plane[j * n2 + k] = [a, b, c];
                }
            }
        });
        SpectralDensity { spec, rho_hat, wave }
    }

    /// Apply `-i xi / |xi|^2 m(|xi|)` and transform back. Two real
    /// components share one complex inverse transform.
    pub fn field_with<M>(&self, multiplier: M) -> Vec<Vec3>
    where
        M: Fn(f64) -> f64 + Sync,
    {
        let n = self.spec.len();
        let mut xy = vec![Complex64::default(); n];
        let mut z = vec![Complex64::default(); n];
        xy.par_iter_mut()
            .zip(z.par_iter_mut())
            .enumerate()
            .for_each(|(idx, (pxy, pz))| {
                let xi = self.wave[idx];
                let q = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
                if q == 0.0 {
                    return;
                }
                let m = multiplier(q.sqrt());
                if m == 0.0 {
                    return;
                }
                // -i xi_a rho_hat m / q for each component.
                let base = self.rho_hat[idx] * (m / q);
                let minus_i = Complex64::new(0.0, -1.0);
                let ex = minus_i * base * xi[0];
                let ey = minus_i * base * xi[1];
                let ez = minus_i * base * xi[2];
                // ex + i ey transforms back to Ex + i Ey because both are real.
                *pxy = ex + Complex64::new(0.0, 1.0) * ey;
                *pz = ez;
            });
        fft3(&mut xy, self.spec.dims, true);
        fft3(&mut z, self.spec.dims, true);
        xy.par_iter().zip(z.par_iter()).map(|(a, b)| Vec3::new(a.re, a.im, b.re)).collect()
    }

    /// Localized field of shell `k`.
    pub fn shell_field(&self, k: i32) -> Result<Vec<Vec3>> {
        check_resolvable(&self.spec, k)?;
        Ok(self.field_with(|xi| dyadic_cutoff(xi, k)))
    }

    /// Field restricted to the whole resolvable band, i.e. the sum of the
    /// band's shell multipliers.
    pub fn band_field(&self) -> Vec<Vec3> {
        let (k_min, k_max) = resolvable_band(&self.spec);
        self.field_with(|xi| psi_tilde(xi * pow2(-k_max)) - psi_tilde(xi * pow2(1 - k_min)))
    }

    /// Full periodic spectral solve.
    pub fn full_field(&self) -> Vec<Vec3> {
        self.field_with(|_| 1.0)
    }
}

/// `E_{k; j1, j2}` on a grid together with its sup norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizedField {
    pub index: DyadicIndex,
    pub grid: FieldGrid,
    pub sup_norm: f64,
}

impl LocalizedField {
    pub fn from_values(index: DyadicIndex, mut grid: FieldGrid, values: Vec<Vec3>) -> Self {
        let sup_norm = values.iter().map(|e| e.norm()).fold(0.0, f64::max);
        grid.e_field = values;
        LocalizedField { index, grid, sup_norm }
    }

    pub fn recompute_sup_norm(&self) -> f64 {
        self.grid.e_field.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// Spatial mean of each component.
    pub fn mean(&self) -> Vec3 {
        let n = self.grid.e_field.len().max(1) as f64;
        self.grid.e_field.iter().fold(Vec3::ZERO, |a, &e| a + e) / n
    }
}

/// Localize a binned density (deposited with the bin's weights) to shell `k`.
pub fn localized_field(binned: &FieldGrid, index: DyadicIndex) -> Result<LocalizedField> {
    check_resolvable(&binned.spec, index.k)?;
    let spectral = SpectralDensity::new(binned);
    let values = spectral.shell_field(index.k)?;
    Ok(LocalizedField::from_values(index, binned.clone(), values))
}

/// Relative L2 distance between two vector fields.
pub fn relative_l2(a: &[Vec3], b: &[Vec3]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (*x - *y).norm_sq()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sq()).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::grid::grid_deposit;
    use crate::kinetics::{Ensemble, Particle};

    fn blob_grid(n: usize) -> FieldGrid {
        let spec = GridSpec::centered_cube(n, 2.0).unwrap();
        let ps = (0..500)
            .map(|i| {
                let t = i as f64;
                let x = Vec3::new((t * 0.37).sin(), (t * 0.71).cos(), (t * 1.13).sin()) * 0.5;
                Particle::new(x, Vec3::ZERO, 0.002, 1.0)
            })
            .collect();
        grid_deposit(&Ensemble::new(ps, 0.0, 0), &spec).unwrap()
    }

    #[test]
    fn band_edges() {
        let spec = GridSpec::centered_cube(128, 4.0).unwrap();
        assert_eq!(resolvable_band(&spec), (1, 4));
        match check_resolvable(&spec, 9) {
            Err(Error::Resolution { k, k_min, k_max }) => assert_eq!((k, k_min, k_max), (9, 1, 4)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_density_gives_zero() {
        let spec = GridSpec::centered_cube(16, 2.0).unwrap();
        let g = FieldGrid::empty(spec);
        let (lo, _) = resolvable_band(&spec);
        let f = localized_field(&g, DyadicIndex::new(lo, 0, 0).unwrap()).unwrap();
        assert_eq!(f.sup_norm, 0.0);
    }

    #[test]
    fn shells_sum_to_band() {
        let g = blob_grid(32);
        let s = SpectralDensity::new(&g);
        let (lo, hi) = resolvable_band(&g.spec);
        let mut sum = vec![Vec3::ZERO; g.spec.len()];
        for k in lo..=hi {
            for (a, b) in sum.iter_mut().zip(s.shell_field(k).unwrap()) {
                *a += b;
            }
        }
        assert!(relative_l2(&sum, &s.band_field()) < 1e-12);
    }

    #[test]
    fn localized_fields_have_zero_mean() {
        let g = blob_grid(16);
        let (lo, _) = resolvable_band(&g.spec);
        let f = localized_field(&g, DyadicIndex::new(lo, 0, 0).unwrap()).unwrap();
        assert!(f.mean().norm() <= 1e-13 * f.sup_norm.max(1.0));
        assert_eq!(f.sup_norm, f.recompute_sup_norm());
    }

    #[test]
    fn full_field_points_outward_near_blob() {
        let g = blob_grid(32);
        let e = SpectralDensity::new(&g).full_field();
        let s = g.spec;
        let i = s.index(24, 16, 16);
        assert!(e[i].x() > 0.0);
    }
}

//! Direct Green's-function summation, the reference backend.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::kinetics::Ensemble;
use crate::reduce;
use crate::vec3::Vec3;

#[inline]
fn pair_kernel(d: Vec3, eps2: f64) -> Vec3 {
    let r2 = d.norm_sq() + eps2;
    d * (1.0 / (r2 * r2.sqrt()))
}

/// `E(x) = (1/4 pi) sum_j w_j (x - x_j) / (|x - x_j|^2 + eps^2)^{3/2}`.
///
/// Sources located exactly at a target are skipped.
pub fn direct_sum_field(ensemble: &Ensemble, targets: &[Vec3], softening: f64) -> Vec<Vec3> {
    let eps2 = softening * softening;
    targets
        .par_iter()
        .map(|&x| {
            let mut acc = Vec3::ZERO;
            for p in &ensemble.particles {
                if p.x == x {
                    continue;
                }
                acc += pair_kernel(x - p.x, eps2) * p.w;
            }
            acc / (4.0 * PI)
        })
        .collect()
}

/// Field on every particle with the particle itself excluded by index.
pub fn direct_field_on_particles(ensemble: &Ensemble, softening: f64) -> Vec<Vec3> {
    let eps2 = softening * softening;
    let ps = &ensemble.particles;
    (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let x = ps[i].x;
            let mut acc = Vec3::ZERO;
            for (j, p) in ps.iter().enumerate() {
                if j != i {
                    acc += pair_kernel(x - p.x, eps2) * p.w;
                }
            }
            acc / (4.0 * PI)
        })
        .collect()
}

/// Pair energy `(1/8 pi) sum_{i != j} w_i w_j / sqrt(d^2 + eps^2)`.
pub fn direct_field_energy(ensemble: &Ensemble, softening: f64) -> f64 {
    let eps2 = softening * softening;
    let ps = &ensemble.particles;
    let idx: Vec<usize> = (0..ps.len()).collect();
    // Each unordered pair once, then doubled.
    let half = reduce::block_sum(&idx, |&i| {
        let mut s = 0.0;
        for p in &ps[i + 1..] {
            let d2 = (ps[i].x - p.x).norm_sq() + eps2;
            s += ps[i].w * p.w / d2.sqrt();
        }
        s
    });
    half / (4.0 * PI)
}

//! Radial backends: the binned cumulative-mass profile and the smoothed
//! shell model used for dynamic radial runs.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::kinetics::Ensemble;
use crate::reduce;
use crate::vec3::Vec3;

/// Cumulative shell-mass table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    /// Bin edges `0 = e_0 < e_1 < ... < e_n = r_max`.
    pub edges: Vec<f64>,
    pub shell_mass: Vec<f64>,
    /// `cumulative[i]` is the weight with `|x| <= edges[i + 1]`.
    pub cumulative: Vec<f64>,
    /// Weight of particles beyond `r_max`.
    pub overflow_mass: f64,
    pub total_mass: f64,
    /// Largest particle radius, the support radius of the sample.
    pub max_radius: f64,
}

pub fn build_radial_profile(ensemble: &Ensemble, n_bins: usize, r_max: f64) -> Result<RadialProfile> {
    if n_bins == 0 {
        return Err(validation("radial profile needs at least one bin"));
    }
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(validation(format!("radial profile r_max must be positive, got {r_max}")));
    }
    let width = r_max / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins)
        .map(|i| if i == n_bins { r_max } else { i as f64 * width })
        .collect();
    let mut shell_mass = vec![0.0; n_bins];
    let mut overflow_mass = 0.0;
    let mut max_radius: f64 = 0.0;
    for p in &ensemble.particles {
        let r = p.x.norm();
        max_radius = max_radius.max(r);
        if r > r_max {
            overflow_mass += p.w;
            continue;
        }
        let mut bin = ((r / width) as usize).min(n_bins - 1);
        // Float rounding in r / width can land one bin off near an edge.
        while bin > 0 && r < edges[bin] {
            bin -= 1;
        }
        while bin + 1 < n_bins && r >= edges[bin + 1] {
            bin += 1;
        }
        shell_mass[bin] += p.w;
    }
    let mut cumulative = Vec::with_capacity(n_bins);
    let mut acc = 0.0;
    for m in &shell_mass {
        acc += m;
        cumulative.push(acc);
    }
    Ok(RadialProfile {
        edges,
        shell_mass,
        cumulative,
        overflow_mass,
        total_mass: acc + overflow_mass,
        max_radius,
    })
}

impl RadialProfile {
    /// Enclosed mass `m(r)`, piecewise linear between edges and equal to the
    /// total mass from the support radius on.
    pub fn enclosed_mass(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.max_radius {
            return self.total_mass;
        }
        let n = self.shell_mass.len();
        let r_max = self.edges[n];
        if r >= r_max {
            let inner = self.cumulative[n - 1];
            let frac = (r - r_max) / (self.max_radius - r_max);
            return (inner + self.overflow_mass * frac).min(self.total_mass);
        }
        let i = self.edges.partition_point(|&e| e <= r).saturating_sub(1).min(n - 1);
        let before = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        let frac = (r - self.edges[i]) / (self.edges[i + 1] - self.edges[i]);
        (before + self.shell_mass[i] * frac).min(self.total_mass)
    }
}

/// Closed-form radial field `m(|x|) x / (4 pi |x|^3)`.
pub fn radial_field(profile: &RadialProfile, x: Vec3) -> Vec3 {
    let r = x.norm();
    if r == 0.0 {
        return Vec3::ZERO;
    }
    x * (profile.enclosed_mass(r) / (4.0 * PI * r * r * r))
}

/// Shell model with a smoothed maximum, so that the force is continuous in
/// the radii and the leapfrog keeps its second-order energy behavior.
///
/// Every particle is replaced by a uniform shell of its radius. The pair
/// energy `w_i w_j / max(r_i, r_j)` uses
/// `smax(a, b) = (a + b) / 2 + h q((a - b) / h)`, which equals the exact
/// maximum once `|a - b| >= h`.
#[derive(Clone, Debug)]
pub struct SmoothShellField {
    pub width: f64,
    /// Sorted slot of each particle.
    rank: Vec<usize>,
    radii: Vec<f64>,
    weights: Vec<f64>,
    /// Weight of sorted entries `0..i`.
    prefix: Vec<f64>,
}

const Q0: f64 = 0.15625;

/// Smooth odd approximation of `sign(s)`, exact for `|s| >= 1`, `C^2`.
#[inline]
fn smooth_sign(s: f64) -> f64 {
    if s >= 1.0 {
        1.0
    } else if s <= -1.0 {
        -1.0
    } else {
        let s2 = s * s;
        s * (15.0 - 10.0 * s2 + 3.0 * s2 * s2) / 8.0
    }
}

#[inline]
fn smooth_abs_half(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.5 * s.abs()
    } else {
        let s2 = s * s;
        Q0 + (7.5 * s2 - 2.5 * s2 * s2 + 0.5 * s2 * s2 * s2) / 16.0
    }
}

impl SmoothShellField {
    pub fn new(width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(validation(format!("shell width must be positive, got {width}")));
        }
        Ok(SmoothShellField {
            width,
            rank: Vec::new(),
            radii: Vec::new(),
            weights: Vec::new(),
            prefix: vec![0.0],
        })
    }

    #[inline]
    pub fn smax(&self, a: f64, b: f64) -> f64 {
        0.5 * (a + b) + self.width * smooth_abs_half((a - b) / self.width)
    }

    #[inline]
    fn dsmax_da(&self, a: f64, b: f64) -> f64 {
        0.5 + 0.5 * smooth_sign((a - b) / self.width)
    }

    /// Sort the current radii. Must be called whenever positions change.
    pub fn rebuild(&mut self, ensemble: &Ensemble) {
        let n = ensemble.len();
        let radii: Vec<f64> = ensemble.particles.par_iter().map(|p| p.x.norm()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]).then(a.cmp(&b)));
        self.radii = order.iter().map(|&i| radii[i]).collect();
        self.weights = order.iter().map(|&i| ensemble.particles[i].w).collect();
        self.prefix = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        self.prefix.push(0.0);
        for w in &self.weights {
            acc += w;
            self.prefix.push(acc);
        }
        self.rank = vec![0; n];
        for (s, &i) in order.iter().enumerate() {
            self.rank[i] = s;
        }
    }

    /// Radial field magnitude at radius `r` felt by the particle stored in
    /// sorted slot `slot`, which is excluded from the pair sum. The other
    /// radii are those of the last rebuild.
    fn magnitude(&self, r: f64, slot: usize) -> f64 {
        let h = self.width;
        let lo = self.radii.partition_point(|&q| q <= r - h);
        let hi = self.radii.partition_point(|&q| q < r + h);
        let mut inner = self.prefix[lo];
        if slot < lo {
            inner -= self.weights[slot];
        }
        let mut sum = inner / (r * r);
        for j in lo..hi {
            if j == slot {
                continue;
            }
            let m = self.smax(r, self.radii[j]);
            sum += self.weights[j] * self.dsmax_da(r, self.radii[j]) / (m * m);
        }
        let own = r + h * Q0;
        sum += self.weights[slot] / (2.0 * own * own);
        sum / (4.0 * PI)
    }

    /// Field on every particle at its current position, in ensemble order.
    pub fn field_on_particles(&self, ensemble: &Ensemble) -> Vec<Vec3> {
        ensemble
            .particles
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let r = p.x.norm();
                if r == 0.0 {
                    Vec3::ZERO
                } else {
                    p.x * (self.magnitude(r, self.rank[i]) / r)
                }
            })
            .collect()
    }

    /// Field energy `(1/8 pi) sum_{i,j} w_i w_j / smax(r_i, r_j)`, the
    /// potential whose gradient is the force above.
    pub fn energy(&self) -> f64 {
        let h = self.width;
        let n = self.radii.len();
        let idx: Vec<usize> = (0..n).collect();
        let pairs = reduce::block_sum(&idx, |&i| {
            let r = self.radii[i];
            // Pairs (i, j) with j < i: far ones see smax = r_i exactly.
            let lo = self.radii[..i].partition_point(|&q| q <= r - h);
            let mut s = self.weights[i] * self.prefix[lo] / r.max(f64::MIN_POSITIVE);
            for j in lo..i {
                s += self.weights[i] * self.weights[j] / self.smax(r, self.radii[j]);
            }
            s
        });
        let selfs = reduce::block_sum(&idx, |&i| {
            0.5 * self.weights[i] * self.weights[i] / (self.radii[i] + h * Q0)
        });
        (pairs + selfs) / (4.0 * PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::Particle;

    fn ens(points: &[(Vec3, f64)]) -> Ensemble {
        Ensemble::new(
            points.iter().map(|&(x, w)| Particle::new(x, Vec3::ZERO, w, 1.0)).collect(),
            0.0,
            0,
        )
    }

    #[test]
    fn single_particle_binning() {
        let e = ens(&[(Vec3::new(0.5, 0.0, 0.0), 1.0)]);
        let p = build_radial_profile(&e, 10, 1.0).unwrap();
        let expect: Vec<f64> = (0..10).map(|i| if i >= 5 { 1.0 } else { 0.0 }).collect();
        assert_eq!(p.cumulative, expect);
        assert_eq!(p.overflow_mass, 0.0);
    }

    #[test]
    fn empty_profile_is_zero() {
        let p = build_radial_profile(&ens(&[]), 4, 1.0).unwrap();
        assert_eq!(p.cumulative, vec![0.0; 4]);
        assert_eq!(radial_field(&p, Vec3::new(1.0, 0.0, 0.0)), Vec3::ZERO);
    }

    #[test]
    fn overflow_is_recorded() {
        let e = ens(&[(Vec3::new(0.5, 0.0, 0.0), 1.0), (Vec3::new(0.0, 3.0, 0.0), 2.0)]);
        let p = build_radial_profile(&e, 4, 1.0).unwrap();
        assert_eq!(p.overflow_mass, 2.0);
        assert_eq!(p.total_mass, 3.0);
        assert_eq!(p.max_radius, 3.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_radial_profile(&ens(&[]), 0, 1.0).is_err());
        assert!(build_radial_profile(&ens(&[]), 3, 0.0).is_err());
    }

    #[test]
    fn point_mass_field() {
        let e = ens(&[(Vec3::ZERO, 1.0)]);
        let p = build_radial_profile(&e, 8, 2.0).unwrap();
        let f = radial_field(&p, Vec3::new(1.0, 0.0, 0.0));
        assert!((f.x() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(radial_field(&p, Vec3::ZERO), Vec3::ZERO);
    }

    #[test]
    fn exterior_field_is_monopole() {
        let e = ens(&[(Vec3::new(0.2, 0.1, 0.0), 0.7), (Vec3::new(-0.3, 0.0, 0.4), 0.3)]);
        let p = build_radial_profile(&e, 16, 1.0).unwrap();
        let x = Vec3::new(0.0, 2.0, 1.0);
        let f = radial_field(&p, x);
        let expect = 1.0 / (4.0 * PI * x.norm_sq());
        assert!((f.norm() - expect).abs() <= 1e-15 * expect);
    }

    #[test]
    fn smooth_max_matches_max_away_from_diagonal() {
        let s = SmoothShellField::new(0.1).unwrap();
        assert_eq!(s.smax(1.0, 0.5), 1.0);
        assert_eq!(s.smax(0.2, 0.9), 0.9);
        assert!(s.smax(1.0, 1.0) > 1.0);
        // Continuity at the matching point.
        assert!((s.smax(1.0, 0.9 + 1e-12) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn smooth_shell_force_is_energy_gradient() {
        let pts: Vec<(Vec3, f64)> = (0..40)
            .map(|i| {
                let t = i as f64;
                (Vec3::new((t * 0.7).sin() * 0.8, (t * 1.3).cos() * 0.6, (t * 0.4).sin() * 0.5), 0.025)
            })
            .collect();
        let mut e = ens(&pts);
        let mut f = SmoothShellField::new(0.05).unwrap();
        f.rebuild(&e);
        let field = f.field_on_particles(&e);
        let k = 7;
        let step = 1e-6;
        for axis in 0..3 {
            let base = e.particles[k].x;
            let mut up = base;
            up.0[axis] += step;
            let mut dn = base;
            dn.0[axis] -= step;
            e.particles[k].x = up;
            f.rebuild(&e);
            let eu = f.energy();
            e.particles[k].x = dn;
            f.rebuild(&e);
            let ed = f.energy();
            e.particles[k].x = base;
            // w dv/dt = -dU/dx, so E = -(1/w) dU/dx.
            let fd = -(eu - ed) / (2.0 * step) / 0.025;
            assert!((fd - field[k].0[axis]).abs() < 1e-6 * (1.0 + fd.abs()), "{fd} {:?}", field[k]);
        }
    }
}

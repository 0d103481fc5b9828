//! Envelope checks for localized fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bins::DyadicIndex;
use super::shells::{resolvable_band, LocalizedField, SpectralDensity};
use crate::error::Result;
use crate::field::grid::{FieldGrid, GridSpec};
use crate::functionals::cutoff::pow2;
use crate::functionals::moments::log2_moment;
use crate::kinetics::Ensemble;

/// Global constant of the sup-norm envelope. The largest ratio over the
/// calibration ensembles (Gaussian at 64^3 and 128^3, shell and vanishing
/// momentum at 64^3, 2e4 particles, seed 11) was 1.357, rounded up here.
pub const ROUGH_BOUND_CONSTANT: f64 = 2.0;

/// Ensemble statistics entering the envelopes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// `sup f`.
    pub f_sup: f64,
    /// `log2 M_1`.
    pub log2_m1: f64,
    /// `log2` of the order-`n_c` moment surrogate.
    pub log2_m_high: f64,
    pub n_c: f64,
    pub eps: f64,
    pub mt: i32,
}

impl BoundInputs {
    pub fn from_ensemble(ensemble: &Ensemble, n_c: f64, eps: f64, mt: i32) -> Self {
        let f_sup = ensemble.particles.iter().map(|p| p.f0).fold(0.0, f64::max);
        BoundInputs {
            f_sup,
            log2_m1: log2_moment(ensemble, 1.0),
            log2_m_high: log2_moment(ensemble, n_c),
            n_c,
            eps,
            mt,
        }
    }
}

/// `min{2^{-k+2 j1+j2} sup f, 2^{2k-j2} M_1, 2^{2k - n_c j2} M}`.
pub fn rough_bound(index: DyadicIndex, inputs: &BoundInputs) -> f64 {
    let k = index.k as f64;
    let j1 = index.j1 as f64;
    let j2 = index.j2 as f64;
    let volume = -k + 2.0 * j1 + j2 + inputs.f_sup.log2();
    let mass = 2.0 * k - j2 + inputs.log2_m1;
    let high = 2.0 * k - inputs.n_c * j2 + inputs.log2_m_high;
    volume.min(mass).min(high).exp2()
}

/// `1 + min{2^{j1 + eps Mt} / r^{1/2}, 2^{k - j2 + eps Mt} / r}` at planar
/// radius `r`.
pub fn off_axis_bound(index: DyadicIndex, planar_radius: f64, inputs: &BoundInputs) -> f64 {
    let em = inputs.eps * inputs.mt as f64;
    let a = (index.j1 as f64 + em).exp2() / planar_radius.sqrt();
    let b = (index.k as f64 - index.j2 as f64 + em).exp2() / planar_radius;
    1.0 + a.min(b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub k: i32,
    pub j1: u32,
    pub j2: u32,
    pub sup_norm: f64,
    pub bound_value: f64,
    pub ratio: f64,
    pub pass: bool,
    /// Largest `|E| / off_axis_bound` over sampled off-axis nodes.
    pub off_axis_ratio: f64,
}

/// Compare every field against the sup-norm envelope scaled by `constant`.
pub fn verify_localized_bounds(
    fields: &[LocalizedField],
    inputs: &BoundInputs,
    constant: f64,
    min_planar_radius: f64,
) -> Vec<BoundEntry> {
    fields
        .par_iter()
        .map(|f| {
            let bound_value = rough_bound(f.index, inputs);
            let ratio = if f.sup_norm == 0.0 { 0.0 } else { f.sup_norm / bound_value };
            BoundEntry {
                k: f.index.k,
                j1: f.index.j1,
                j2: f.index.j2,
                sup_norm: f.sup_norm,
                bound_value,
                ratio,
                pass: f.sup_norm <= constant * bound_value,
                off_axis_ratio: off_axis_ratio(f, inputs, min_planar_radius),
            }
        })
        .collect()
}

/// Largest ratio of `|E|` to the off-axis envelope over nodes with
/// `|x_planar| >= min_planar_radius`.
pub fn off_axis_ratio(field: &LocalizedField, inputs: &BoundInputs, min_planar_radius: f64) -> f64 {
    let spec = field.grid.spec;
    let [n0, n1, n2] = spec.dims;
    let mut best = 0.0f64;
    for i in 0..n0 {
        for j in 0..n1 {
            let node = spec.node(i, j, 0);
            let r = node.planar_norm();
            if r < min_planar_radius {
                continue;
            }
            let bound = off_axis_bound(field.index, r, inputs);
            for k in 0..n2 {
                let e = field.grid.e_field[spec.index(i, j, k)].norm();
                best = best.max(e / bound);
            }
        }
    }
    best
}

/// Least-squares slope of `log2 y` against `x`, skipping nonpositive `y`.
pub fn log2_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).filter(|(_, y)| **y > 0.0).map(|(x, y)| (*x, y.log2())).collect();
    linear_slope(&pts)
}

pub(crate) fn linear_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Measured decay of the realized shell kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelDecay {
    pub k: i32,
    /// Fitted `p` in `|K| ~ 2^{2k} (1 + 2^k |y|)^{-p}`.
    pub exponent: f64,
    /// `(log(1 + 2^k |y|), log(max |K| / 2^{2k}))` per envelope bin.
    pub envelope: Vec<(f64, f64)>,
}

/// Transform a unit point mass at the central node and fit the decay of
/// the upper envelope of `|K_k(y)|` for `2^k |y| >= 2` up to half the box.
pub fn kernel_decay(spec: &GridSpec, k: i32) -> Result<KernelDecay> {
    let [n0, n1, n2] = spec.dims;
    let mut grid = FieldGrid::empty(*spec);
    let center = spec.index(n0 / 2, n1 / 2, n2 / 2);
    grid.rho[center] = 1.0 / spec.cell_volume();
    let values = SpectralDensity::new(&grid).shell_field(k)?;
    let c = spec.node(n0 / 2, n1 / 2, n2 / 2);
    let half = spec.box_lengths().into_iter().fold(f64::INFINITY, f64::min) / 2.0;
    let scale = pow2(k);
    let norm = pow2(2 * k);

    const BINS: usize = 24;
    let lo = 3.0f64.ln();
    let hi = (1.0 + scale * half).ln();
    let width = (hi - lo) / BINS as f64;
    let mut env = [0.0f64; BINS];
    for i in 0..n0 {
        for j in 0..n1 {
            for l in 0..n2 {
                let r = (spec.node(i, j, l) - c).norm();
                if r > half {
                    continue;
                }
                let s = (1.0 + scale * r).ln();
                if s < lo {
                    continue;
                }
                let b = (((s - lo) / width) as usize).min(BINS - 1);
                env[b] = env[b].max(values[spec.index(i, j, l)].norm() / norm);
            }
        }
    }
    let envelope: Vec<(f64, f64)> = env
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(b, m)| (lo + (b as f64 + 0.5) * width, m.ln()))
        .collect();
    let exponent = linear_slope(&envelope).map(|s| -s).unwrap_or(f64::NAN);
    Ok(KernelDecay { k, exponent, envelope })
}

/// Top resolvable shell of a grid.
pub fn top_shell(spec: &GridSpec) -> i32 {
    resolvable_band(spec).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::grid::GridSpec;
    use crate::kinetics::Particle;
    use crate::vec3::Vec3;

    fn inputs() -> BoundInputs {
        BoundInputs { f_sup: 1.0, log2_m1: 0.0, log2_m_high: 0.0, n_c: 20.0, eps: 0.5, mt: 2 }
    }

    #[test]
    fn rough_bound_picks_the_minimum() {
        let i = inputs();
        // k = 0, j1 = 0, j2 = 0: all three branches equal one.
        assert_eq!(rough_bound(DyadicIndex::new(0, 0, 0).unwrap(), &i), 1.0);
        // k = 3, j2 = 1: high-moment branch 2^{6-20}.
        assert_eq!(rough_bound(DyadicIndex::new(3, 0, 1).unwrap(), &i), pow2(-14));
        // k = -2: mass branch 2^{-4}.
        assert_eq!(rough_bound(DyadicIndex::new(-2, 2, 0).unwrap(), &i), pow2(-4));
    }

    #[test]
    fn off_axis_branches() {
        let i = inputs();
        let idx = DyadicIndex::new(0, 0, 0).unwrap();
        // eps Mt = 1: min{2 / 1, 2 / 1} at r = 1.
        assert_eq!(off_axis_bound(idx, 1.0, &i), 3.0);
        assert_eq!(off_axis_bound(idx, 4.0, &i), 1.5);
    }

    #[test]
    fn empty_bin_passes() {
        let spec = GridSpec::centered_cube(8, 2.0).unwrap();
        let f = LocalizedField::from_values(
            DyadicIndex::new(1, 0, 0).unwrap(),
            FieldGrid::empty(spec),
            vec![Vec3::ZERO; spec.len()],
        );
        let r = verify_localized_bounds(&[f], &inputs(), 1.0, 0.1);
        assert!(r[0].pass);
        assert_eq!(r[0].ratio, 0.0);
    }

    #[test]
    fn slope_of_exact_power() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| pow2(2 * *x as i32)).collect();
        assert!((log2_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert!(log2_slope(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn kernel_decays() {
        let spec = GridSpec::centered_cube(32, 4.0).unwrap();
        let d = kernel_decay(&spec, top_shell(&spec)).unwrap();
        assert!(d.exponent.is_finite() && d.exponent > 0.0, "{d:?}");
    }

    #[test]
    fn inputs_from_ensemble() {
        let p = Particle::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), 0.5, 3.0);
        let e = Ensemble::new(vec![p], 0.0, 0);
        let i = BoundInputs::from_ensemble(&e, 20.0, 0.5, 1);
        assert_eq!(i.f_sup, 3.0);
        assert!((i.log2_m1 - 0.0).abs() < 1e-12);
    }
}

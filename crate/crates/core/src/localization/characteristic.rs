//! Time integrals of localized fields along logged characteristics.

use serde::{Deserialize, Serialize};

use super::bins::DyadicIndex;
use crate::error::{validation, Error, Result};
use crate::field::grid::GridSpec;
use crate::pusher::TrajectoryLog;
use crate::vec3::Vec3;

/// Relative slack when matching trajectory times to snapshot times.
const TIME_SLACK: f64 = 1e-12;

/// Localized field values at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub t: f64,
    pub values: Vec<Vec3>,
}

/// Snapshots of one localized field on a common grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHistory {
    pub index: DyadicIndex,
    pub spec: GridSpec,
    pub snapshots: Vec<FieldSnapshot>,
}

impl FieldHistory {
    pub fn new(index: DyadicIndex, spec: GridSpec) -> Self {
        FieldHistory { index, spec, snapshots: Vec::new() }
    }

    pub fn push(&mut self, t: f64, values: Vec<Vec3>) -> Result<()> {
        if values.len() != self.spec.len() {
            return Err(validation(format!(
                "snapshot has {} values for a grid of {}",
                values.len(),
                self.spec.len()
            )));
        }
        if let Some(last) = self.snapshots.last() {
            if t <= last.t {
                return Err(validation(format!("snapshot time {t} not after {}", last.t)));
            }
        }
        self.snapshots.push(FieldSnapshot { t, values });
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.snapshots
            .iter()
            .flat_map(|s| s.values.iter())
            .map(|e| e.norm())
            .fold(0.0, f64::max)
    }

    pub fn time_range(&self) -> Option<(f64, f64)> {
        Some((self.snapshots.first()?.t, self.snapshots.last()?.t))
    }

    fn check_covers(&self, t: f64) -> Result<()> {
        let (a, b) = self
            .time_range()
            .ok_or_else(|| Error::Coverage("field history has no snapshots".into()))?;
        let slack = TIME_SLACK * (1.0 + a.abs().max(b.abs()));
        if t < a - slack || t > b + slack {
            return Err(Error::Coverage(format!("time {t} outside snapshot range [{a}, {b}]")));
        }
        Ok(())
    }

    /// Field at `(t, x)`: periodic trilinear in space, linear in time.
    pub fn sample(&self, t: f64, x: Vec3) -> Result<Vec3> {
        self.check_covers(t)?;
        let s = &self.snapshots;
        let hi = s.partition_point(|snap| snap.t < t).min(s.len() - 1);
        if hi == 0 || s.len() == 1 {
            return Ok(periodic_trilinear(&self.spec, &s[hi].values, x));
        }
        let lo = hi - 1;
        let theta = ((t - s[lo].t) / (s[hi].t - s[lo].t)).clamp(0.0, 1.0);
        let a = periodic_trilinear(&self.spec, &s[lo].values, x);
        let b = periodic_trilinear(&self.spec, &s[hi].values, x);
        Ok(a * (1.0 - theta) + b * theta)
    }
}

/// Trilinear interpolation with the grid box taken as periodic.
pub fn periodic_trilinear(spec: &GridSpec, values: &[Vec3], x: Vec3) -> Vec3 {
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let u = (x.0[a] - spec.origin.0[a]) / spec.spacing;
        let n = spec.dims[a] as f64;
        let u = u.rem_euclid(n);
        let f = u.floor();
        base[a] = (f as usize) % spec.dims[a];
        frac[a] = u - f;
    }
    let mut out = Vec3::ZERO;
    for corner in 0..8 {
        let mut w = 1.0;
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let up = (corner >> a) & 1 == 1;
            w *= if up { frac[a] } else { 1.0 - frac[a] };
            idx[a] = if up { (base[a] + 1) % spec.dims[a] } else { base[a] };
        }
        if w != 0.0 {
            out += values[spec.index(idx[0], idx[1], idx[2])] * w;
        }
    }
    out
}

/// Whether `(k, j1, j2)` belongs to the resonant set
/// `k in [2 j1 - 4 eps Mt, 2 j1 + 4 eps Mt]`,
/// `j2 in [(1 - 5.5 eps) Mt, (1 + eps) Mt]`, `j1 >= 5 Mt / 8 + 10 eps Mt`.
pub fn in_resonant_set(index: DyadicIndex, mt: i32, eps: f64) -> bool {
    let m = mt as f64;
    let k = index.k as f64;
    let j1 = index.j1 as f64;
    let j2 = index.j2 as f64;
    index.k >= 0
        && (2.0 * j1 - 4.0 * eps * m..=2.0 * j1 + 4.0 * eps * m).contains(&k)
        && ((1.0 - 5.5 * eps) * m..=(1.0 + eps) * m).contains(&j2)
        && j1 >= 5.0 * m / 8.0 + 10.0 * eps * m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicReport {
    pub k: i32,
    pub j1: u32,
    pub j2: u32,
    pub resonant: bool,
    /// Signed integral per logged particle.
    pub integrals: Vec<f64>,
    pub max_abs_integral: f64,
    /// Time span times the sup norm of the history.
    pub naive_bound: f64,
    pub ratio: f64,
}

/// Trapezoidal integral of `V / |V| . E_k(s, X(s))` along each logged path.
pub fn integrated_field_along_characteristic(
    log: &TrajectoryLog,
    history: &FieldHistory,
    mt: i32,
    eps: f64,
) -> Result<CharacteristicReport> {
    for &t in &log.times {
        history.check_covers(t)?;
    }
    let mut integrals = Vec::with_capacity(log.sample_ids.len());
    for slot in 0..log.sample_ids.len() {
        let mut acc = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (t, state) in log.path(slot) {
            let speed = state.v.norm();
            let g = if speed > 0.0 {
                (state.v / speed).dot(history.sample(t, state.x)?)
            } else {
                0.0
            };
            if let Some((t0, g0)) = prev {
                acc += 0.5 * (t - t0) * (g + g0);
            }
            prev = Some((t, g));
        }
        integrals.push(acc);
    }
    let span = match (log.times.first(), log.times.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    let naive_bound = span * history.sup_norm();
    let max_abs_integral = integrals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let ratio = if naive_bound > 0.0 { max_abs_integral / naive_bound } else { 0.0 };
    let index = history.index;
    Ok(CharacteristicReport {
        k: index.k,
        j1: index.j1,
        j2: index.j2,
        resonant: in_resonant_set(index, mt, eps),
        integrals,
        max_abs_integral,
        naive_bound,
        ratio,
    })
}

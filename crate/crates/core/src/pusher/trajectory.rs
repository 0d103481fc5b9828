//! Dense per-particle trajectory log.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::functionals::series::fmt_float;
use crate::kinetics::Ensemble;
use crate::vec3::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryState {
    pub x: Vec3,
    pub v: Vec3,
    /// Field acting on the particle at this instant.
    pub e: Vec3,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub sample_ids: Vec<usize>,
    pub times: Vec<f64>,
    /// `states[time][k]` belongs to `sample_ids[k]`.
    pub states: Vec<Vec<TrajectoryState>>,
}

/// `count` ids spread evenly over `0..n`.
pub fn spread_ids(n: usize, count: usize) -> Vec<usize> {
    let count = count.min(n);
    if count == 0 {
        return Vec::new();
    }
    (0..count).map(|k| k * n / count).collect()
}

impl TrajectoryLog {
    pub fn new(sample_ids: Vec<usize>) -> Self {
        TrajectoryLog { sample_ids, times: Vec::new(), states: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Append a snapshot. Times must increase strictly.
    pub fn record(&mut self, t: f64, ensemble: &Ensemble, field: &[Vec3]) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(validation(format!("trajectory time {t} does not follow {last}")));
            }
        }
        let snap = self
            .sample_ids
            .iter()
            .map(|&i| {
                let p = &ensemble.particles[i];
                TrajectoryState { x: p.x, v: p.v, e: field.get(i).copied().unwrap_or(Vec3::ZERO) }
            })
            .collect();
        self.times.push(t);
        self.states.push(snap);
        Ok(())
    }

    /// States of the `k`-th logged particle over time.
    pub fn path(&self, k: usize) -> impl Iterator<Item = (f64, &TrajectoryState)> + '_ {
        self.times.iter().zip(&self.states).map(move |(&t, s)| (t, &s[k]))
    }

    /// Records with `a <= t <= b`.
    pub fn window(&self, a: f64, b: f64) -> TrajectoryLog {
        let (times, states) = self
            .times
            .iter()
            .zip(&self.states)
            .filter(|(t, _)| (a..=b).contains(*t))
            .map(|(t, s)| (*t, s.clone()))
            .unzip();
        TrajectoryLog { sample_ids: self.sample_ids.clone(), times, states }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,t,x1,x2,x3,v1,v2,v3,E1,E2,E3\n");
        for (k, &id) in self.sample_ids.iter().enumerate() {
            for (t, s) in self.path(k) {
                let nums: Vec<String> = [t]
                    .into_iter()
                    .chain(s.x.0)
                    .chain(s.v.0)
                    .chain(s.e.0)
                    .map(fmt_float)
                    .collect();
                let _ = writeln!(out, "{id},{}", nums.join(","));
            }
        }
        out
    }
}

//! Majority-set reports over logged characteristics.

use serde::{Deserialize, Serialize};

use super::moments::{beta_of_speed, dyadic_scale, log2_enlarged_moment_cylindrical, log2_enlarged_moment_radial, log2_sum};
use crate::error::{validation, Result};
use crate::pusher::TrajectoryLog;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorityParams {
    /// Moment order of the radial enlarged moment.
    pub n_r: f64,
    /// Small exponent loss in the speed bound.
    pub delta: f64,
    /// Moment order surrogate defining `Mt`.
    pub n_c: f64,
    /// `log2 sup_s M_{n_r}(s)` and `log2 sup_s M_{n_c}(s)` of the full
    /// ensemble. When absent they are estimated from the logged particles
    /// with equal weights of total 1.
    pub log2_sup_moment_r: Option<f64>,
    pub log2_sup_moment_c: Option<f64>,
}

impl Default for MajorityParams {
    fn default() -> Self {
        MajorityParams { n_r: 10.0, delta: 1e-10, n_c: 20.0, log2_sup_moment_r: None, log2_sup_moment_c: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorityReport {
    pub threshold: f64,
    pub tracked: usize,
    pub members: Vec<usize>,
    pub empty: bool,
    pub initial_max_speed: f64,
    pub max_position: f64,
    pub max_speed: f64,
    pub log2_enlarged_radial: f64,
    /// `max |X| / M^{1/(2 n_r)}` over members.
    pub position_constant: Option<f64>,
    /// `max |V| / M^{(5 + 2 delta) / ((6 - 2 delta)(n_r - 1))}` over members.
    pub speed_constant: Option<f64>,
    pub mt: i32,
    pub beta_threshold: f64,
    pub beta: f64,
}

fn log2_sup_moment(log: &TrajectoryLog, n: f64) -> f64 {
    let k = log.sample_ids.len() as f64;
    log.states
        .iter()
        .map(|snap| {
            let terms: Vec<f64> = snap.iter().map(|s| n * (1.0 + s.v.norm()).log2() - k.log2()).collect();
            log2_sum(&terms)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Report on logged particles whose initial `|x| + |v|` is at most
/// `threshold`.
pub fn majority_report(log: &TrajectoryLog, threshold: f64, params: &MajorityParams) -> Result<MajorityReport> {
    if log.is_empty() {
        return Err(validation("majority report needs a non-empty trajectory"));
    }
    if log.times[0] != 0.0 {
        return Err(validation("majority report needs a trajectory logged from t = 0"));
    }
    if !(params.n_r > 1.0 && params.n_c > 1.0) {
        return Err(validation("moment orders n_r and n_c must exceed 1"));
    }
    let t = *log.times.last().unwrap_or(&0.0);
    let first = &log.states[0];
    let initial_size: Vec<f64> = first.iter().map(|s| s.x.norm() + s.v.norm()).collect();
    let members: Vec<usize> = (0..log.sample_ids.len()).filter(|&k| initial_size[k] <= threshold).collect();
    let peak = |k: usize| {
        log.path(k).fold((0.0f64, 0.0f64), |(mx, mv), (_, s)| (mx.max(s.x.norm()), mv.max(s.v.norm())))
    };
    let mut max_position: f64 = 0.0;
    let mut max_speed: f64 = 0.0;
    let mut initial_max_speed: f64 = 0.0;
    for &k in &members {
        let (px, pv) = peak(k);
        max_position = max_position.max(px);
        max_speed = max_speed.max(pv);
        initial_max_speed = initial_max_speed.max(first[k].v.norm());
    }
    let log2_r = params.log2_sup_moment_r.unwrap_or_else(|| log2_sup_moment(log, params.n_r));
    let log2_mr = log2_enlarged_moment_radial(t, params.n_r, log2_r);
    let empty = members.is_empty();
    let pos_exp = log2_mr / (2.0 * params.n_r);
    let d = params.delta;
    let speed_exp = log2_mr * (5.0 + 2.0 * d) / ((6.0 - 2.0 * d) * (params.n_r - 1.0));
    let log2_c = params.log2_sup_moment_c.unwrap_or_else(|| log2_sup_moment(log, params.n_c));
    let mt = dyadic_scale(log2_enlarged_moment_cylindrical(t, params.n_c, log2_c), params.n_c);
    let beta_threshold = (0.5 * mt as f64).exp2();
    let beta = (0..log.sample_ids.len())
        .filter(|&k| initial_size[k] <= beta_threshold)
        .map(|k| beta_of_speed(peak(k).1, mt))
        .fold(0.0, f64::max);
    Ok(MajorityReport {
        threshold,
        tracked: log.sample_ids.len(),
        members: members.iter().map(|&k| log.sample_ids[k]).collect(),
        empty,
        initial_max_speed,
        max_position,
        max_speed,
        log2_enlarged_radial: log2_mr,
        position_constant: (!empty).then(|| max_position / pos_exp.exp2()),
        speed_constant: (!empty).then(|| max_speed / speed_exp.exp2()),
        mt,
        beta_threshold,
        beta,
    })
}

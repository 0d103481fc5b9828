//! The leapfrog driver with diagnostics and checkpoint hooks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backend::{
    AnalyticEvaluator, AnalyticField, DirectEvaluator, FieldEvaluator, FieldMode, GridEvaluator, RadialEvaluator,
};
use super::trajectory::TrajectoryLog;
use crate::error::{validation, Error, Result};
use crate::field::grid::GridSpec;
use crate::functionals::moments::{
    beta_of_speed, dyadic_scale, inverse_angular_momentum_moment, kinetic_energy, kinetic_energy_abs,
    log2_enlarged_moment_cylindrical, log2_moment, moment, spacetime_integrand,
};
use crate::functionals::{DiagnosticsRecord, DiagnosticsSeries, FunctionalParams};
use crate::kinetics::{relativistic_velocity, Ensemble};
use crate::vec3::Vec3;

/// Cubic grid centered on the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 32, half_width: 4.0 }
    }
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::centered_cube(self.n, self.half_width)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    #[serde(default = "default_mode")]
    pub field_mode: FieldMode,
    #[serde(default = "one")]
    pub field_refresh: u64,
    /// Plummer softening of the direct backend.
    #[serde(default = "default_softening")]
    pub softening: f64,
    #[serde(default)]
    pub grid: GridConfig,
    /// Smoothing width of the radial shell model.
    #[serde(default = "default_shell_width")]
    pub shell_width: f64,
    #[serde(default)]
    pub analytic: Option<AnalyticField>,
}

fn default_mode() -> FieldMode {
    FieldMode::Radial
}
fn one() -> u64 {
    1
}
fn default_softening() -> f64 {
    1e-3
}
fn default_shell_width() -> f64 {
    0.02
}

impl IntegratorConfig {
    pub fn new(dt: f64, field_mode: FieldMode) -> Self {
        IntegratorConfig {
            dt,
            field_mode,
            field_refresh: 1,
            softening: default_softening(),
            grid: GridConfig::default(),
            shell_width: default_shell_width(),
            analytic: None,
        }
    }

    pub fn analytic(dt: f64, field: AnalyticField) -> Self {
        IntegratorConfig { analytic: Some(field), ..Self::new(dt, FieldMode::Analytic) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(validation(format!("dt must be positive, got {}", self.dt)));
        }
        if self.field_refresh == 0 {
            return Err(validation("field_refresh must be at least 1"));
        }
        match self.field_mode {
            FieldMode::Direct if !(self.softening >= 0.0 && self.softening.is_finite()) => {
                return Err(validation("softening must be nonnegative"))
            }
            FieldMode::Grid => {
                self.grid.spec()?;
            }
            FieldMode::Radial if !(self.shell_width > 0.0 && self.shell_width.is_finite()) => {
                return Err(validation("shell_width must be positive"))
            }
            FieldMode::Analytic => match &self.analytic {
                Some(f) => f.validate()?,
                None => return Err(validation("analytic field mode needs an analytic field")),
            },
            _ => {}
        }
        Ok(())
    }

    pub fn build_evaluator(&self) -> Result<Box<dyn FieldEvaluator>> {
        self.validate()?;
        Ok(match self.field_mode {
            FieldMode::Radial => Box::new(RadialEvaluator::new(self.shell_width)?),
            FieldMode::Direct => Box::new(DirectEvaluator::new(self.softening)?),
            FieldMode::Grid => Box::new(GridEvaluator::new(&self.grid.spec()?)?),
            FieldMode::Analytic => Box::new(AnalyticEvaluator {
                field: self.analytic.clone().unwrap_or(AnalyticField::Zero),
            }),
        })
    }
}

/// What to record and when.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsPlan {
    /// Record diagnostics every this many steps (and at the last step).
    pub record_every: u64,
    pub trajectory_ids: Vec<usize>,
    pub trajectory_every: u64,
    pub functionals: FunctionalParams,
}

impl DiagnosticsPlan {
    pub fn new(record_every: u64, trajectory_ids: Vec<usize>) -> Self {
        DiagnosticsPlan { record_every, trajectory_ids, trajectory_every: 1, functionals: FunctionalParams::default() }
    }

    pub fn validate(&self, n_particles: usize) -> Result<()> {
        if self.record_every == 0 || self.trajectory_every == 0 {
            return Err(validation("record intervals must be at least 1 step"));
        }
        if let Some(&bad) = self.trajectory_ids.iter().find(|&&i| i >= n_particles) {
            return Err(validation(format!("trajectory id {bad} exceeds particle count {n_particles}")));
        }
        self.functionals.validate()
    }
}

/// Running quantities carried across steps and checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accumulators {
    pub a_cum: f64,
    pub a_cum_extra: Vec<f64>,
    pub last_integrand: f64,
    pub last_integrand_extra: Vec<f64>,
    /// Largest speed reached so far by each particle.
    pub peak_speed: Vec<f64>,
    /// `log2 sup_s M_{n_c}(s)`.
    pub log2_sup_moment: f64,
    pub max_speed: f64,
    pub min_planar_radius: f64,
}

/// Complete integrator state; serializing it is enough to resume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub ensemble: Ensemble,
    pub step: u64,
    pub t_origin: f64,
    pub series: DiagnosticsSeries,
    pub trajectory: TrajectoryLog,
    pub acc: Accumulators,
}

/// `(v . x) / |v|`, nondecreasing along characteristics of an outward
/// radial field.
pub fn monotone_quantity(x: Vec3, v: Vec3) -> Result<f64> {
    let s = v.norm();
    if s == 0.0 {
        return Err(Error::Undefined("(v . x) / |v| at v = 0".into()));
    }
    Ok(v.dot(x) / s)
}

fn kick(ensemble: &mut Ensemble, field: &[Vec3], h: f64) {
    ensemble.particles.par_iter_mut().zip(field.par_iter()).for_each(|(p, e)| p.v += *e * h);
}

fn drift(ensemble: &mut Ensemble, dt: f64) {
    ensemble.particles.par_iter_mut().for_each(|p| p.x += relativistic_velocity(p.v) * dt);
}

fn check_finite(ensemble: &Ensemble, step: u64) -> Result<()> {
    match ensemble.particles.iter().position(|p| !(p.x.is_finite() && p.v.is_finite())) {
        Some(particle) => Err(Error::IntegrationBlowup { particle, step }),
        None => Ok(()),
    }
}

/// One kick-drift-kick step against a field evaluator that is rebuilt
/// before each field evaluation.
pub fn push(ensemble: &mut Ensemble, evaluator: &mut dyn FieldEvaluator, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(validation(format!("dt must be positive, got {dt}")));
    }
    evaluator.rebuild(ensemble)?;
    let e = evaluator.field_on_particles(ensemble);
    kick(ensemble, &e, 0.5 * dt);
    drift(ensemble, dt);
    evaluator.rebuild(ensemble)?;
    let e = evaluator.field_on_particles(ensemble);
    kick(ensemble, &e, 0.5 * dt);
    ensemble.t += dt;
    check_finite(ensemble, 1)
}

/// Number of steps from `t` to `t_end`, which must be a whole multiple of dt.
pub fn step_count(t: f64, t_end: f64, dt: f64) -> Result<u64> {
    if !(t_end >= t) {
        return Err(validation(format!("t_end = {t_end} lies before the current time {t}")));
    }
    let steps = ((t_end - t) / dt).round();
    if ((t_end - t) - steps * dt).abs() > 1e-6 * dt {
        return Err(validation(format!("t_end - t = {} is not a multiple of dt = {dt}", t_end - t)));
    }
    Ok(steps as u64)
}

impl RunState {
    pub fn new(ensemble: Ensemble, plan: &DiagnosticsPlan) -> Result<Self> {
        plan.validate(ensemble.len())?;
        let params = &plan.functionals;
        let extra = params.delta0_extra.len();
        let acc = Accumulators {
            a_cum: 0.0,
            a_cum_extra: vec![0.0; extra],
            last_integrand: spacetime_integrand(&ensemble, params.eps_star(), params.delta0),
            last_integrand_extra: params
                .delta0_extra
                .iter()
                .map(|&d| spacetime_integrand(&ensemble, params.eps_star(), d))
                .collect(),
            peak_speed: ensemble.particles.iter().map(|p| p.v.norm()).collect(),
            log2_sup_moment: log2_moment(&ensemble, params.n_c),
            max_speed: ensemble.max_speed(),
            min_planar_radius: ensemble.min_planar_radius(),
        };
        Ok(RunState {
            t_origin: ensemble.t,
            step: 0,
            series: DiagnosticsSeries::new(params.moment_orders.clone()),
            trajectory: TrajectoryLog::new(plan.trajectory_ids.clone()),
            acc,
            ensemble,
        })
    }

    pub fn time(&self, dt: f64) -> f64 {
        self.t_origin + self.step as f64 * dt
    }

    fn update_accumulators(&mut self, params: &FunctionalParams, dt: f64) {
        let ens = &self.ensemble;
        let eps = params.eps_star();
        let now = spacetime_integrand(ens, eps, params.delta0);
        self.acc.a_cum += 0.5 * dt * (self.acc.last_integrand + now);
        self.acc.last_integrand = now;
        for (k, &d) in params.delta0_extra.iter().enumerate() {
            let now = spacetime_integrand(ens, eps, d);
            self.acc.a_cum_extra[k] += 0.5 * dt * (self.acc.last_integrand_extra[k] + now);
            self.acc.last_integrand_extra[k] = now;
        }
        self.acc
            .peak_speed
            .par_iter_mut()
            .zip(ens.particles.par_iter())
            .for_each(|(m, p)| *m = m.max(p.v.norm()));
        self.acc.log2_sup_moment = self.acc.log2_sup_moment.max(log2_moment(ens, params.n_c));
        self.acc.max_speed = self.acc.max_speed.max(ens.max_speed());
        self.acc.min_planar_radius = self.acc.min_planar_radius.min(ens.min_planar_radius());
    }

    fn record(&mut self, evaluator: &dyn FieldEvaluator, params: &FunctionalParams, t: f64, current: bool) -> Result<()> {
        let ens = &self.ensemble;
        let field_energy = evaluator.field_energy(ens, current)?;
        let kinetic = kinetic_energy(ens);
        let log2_m = log2_enlarged_moment_cylindrical(t, params.n_c, self.acc.log2_sup_moment);
        let mt = dyadic_scale(log2_m, params.n_c);
        let threshold = (0.5 * mt as f64).exp2();
        let beta = ens
            .particles
            .iter()
            .zip(&self.acc.peak_speed)
            .filter(|(p, _)| p.x0.norm() + p.v0.norm() <= threshold)
            .map(|(_, &s)| beta_of_speed(s, mt))
            .fold(0.0, f64::max);
        let rec = DiagnosticsRecord {
            t,
            mass: moment(ens, 0.0),
            kinetic_energy: kinetic,
            kinetic_energy_abs: kinetic_energy_abs(ens),
            field_energy,
            total_energy: kinetic + field_energy,
            moments: params.moment_orders.iter().map(|&n| moment(ens, n)).collect(),
            a_cum: self.acc.a_cum,
            a_cum_extra: self.acc.a_cum_extra.clone(),
            j: inverse_angular_momentum_moment(ens, params.floor)?,
            max_speed: self.acc.max_speed,
            min_planar_radius: self.acc.min_planar_radius,
            beta,
            mt,
        };
        self.series.records.push(rec);
        Ok(())
    }

    /// Advance to `total_steps`. `on_checkpoint` runs after every step that
    /// is a positive multiple of `checkpoint_every` (rounded up to a
    /// multiple of the field refresh) and before the last step.
    pub fn advance<F>(
        &mut self,
        config: &IntegratorConfig,
        plan: &DiagnosticsPlan,
        total_steps: u64,
        checkpoint_every: Option<u64>,
        on_checkpoint: F,
    ) -> Result<()>
    where
        F: FnMut(&RunState) -> Result<()>,
    {
        self.advance_observed(config, plan, total_steps, checkpoint_every, on_checkpoint, |_| Ok(()))
    }

    /// As [`RunState::advance`], also calling `on_sample` after every
    /// trajectory record.
    pub fn advance_observed<F, G>(
        &mut self,
        config: &IntegratorConfig,
        plan: &DiagnosticsPlan,
        total_steps: u64,
        checkpoint_every: Option<u64>,
        mut on_checkpoint: F,
        mut on_sample: G,
    ) -> Result<()>
    where
        F: FnMut(&RunState) -> Result<()>,
        G: FnMut(&RunState) -> Result<()>,
    {
        config.validate()?;
        plan.validate(self.ensemble.len())?;
        let dt = config.dt;
        let refresh = config.field_refresh;
        let params = &plan.functionals;
        if total_steps < self.step {
            return Err(validation("requested step count lies before the current step"));
        }
        if total_steps == self.step && self.step == 0 {
            return Ok(());
        }
        let checkpoint_every = checkpoint_every.map(|c| c.max(1).div_ceil(refresh) * refresh);
        if !self.step.is_multiple_of(refresh) {
            return Err(validation("runs can only resume at a field-refresh boundary"));
        }
        let mut evaluator = config.build_evaluator()?;
        evaluator.rebuild(&self.ensemble)?;
        let mut e = evaluator.field_on_particles(&self.ensemble);
        if self.step == 0 {
            let t = self.time(dt);
            self.ensemble.t = t;
            self.trajectory.record(t, &self.ensemble, &e)?;
            on_sample(self)?;
            self.record(evaluator.as_ref(), params, t, true)?;
        }
        while self.step < total_steps {
            kick(&mut self.ensemble, &e, 0.5 * dt);
            drift(&mut self.ensemble, dt);
            let n = self.step + 1;
            let rebuilt = n.is_multiple_of(refresh);
            if rebuilt {
                evaluator.rebuild(&self.ensemble)?;
            }
            e = evaluator.field_on_particles(&self.ensemble);
            kick(&mut self.ensemble, &e, 0.5 * dt);
            check_finite(&self.ensemble, n)?;
            self.step = n;
            let t = self.time(dt);
            self.ensemble.t = t;
            self.update_accumulators(params, dt);
            let last = n == total_steps;
            if n.is_multiple_of(plan.trajectory_every) || last {
                self.trajectory.record(t, &self.ensemble, &e)?;
                on_sample(self)?;
            }
            if n.is_multiple_of(plan.record_every) || last {
                self.record(evaluator.as_ref(), params, t, rebuilt)?;
            }
            if let Some(c) = checkpoint_every {
                if n.is_multiple_of(c) && !last {
                    on_checkpoint(self)?;
                }
            }
        }
        Ok(())
    }
}

/// Integrate from the ensemble's time to `t_end`.
pub fn integrate(
    ensemble: Ensemble,
    config: &IntegratorConfig,
    t_end: f64,
    plan: &DiagnosticsPlan,
) -> Result<(Ensemble, TrajectoryLog, DiagnosticsSeries)> {
    config.validate()?;
    let steps = step_count(ensemble.t, t_end, config.dt)?;
    let mut state = RunState::new(ensemble, plan)?;
    state.advance(config, plan, steps, None, |_| Ok(()))?;
    Ok((state.ensemble, state.trajectory, state.series))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::Particle;

    fn single(x: Vec3, v: Vec3) -> Ensemble {
        Ensemble::new(vec![Particle::new(x, v, 1.0, 0.5)], 0.0, 0)
    }

    #[test]
    fn free_streaming_step() {
        let mut e = single(Vec3::ZERO, Vec3::new(3.0, 0.0, 0.0));
        let mut ev = AnalyticEvaluator { field: AnalyticField::Zero };
        push(&mut e, &mut ev, 1.0).unwrap();
        assert_eq!(e.particles[0].x, Vec3::new(3.0 / 10f64.sqrt(), 0.0, 0.0));
        assert_eq!(e.particles[0].v, Vec3::new(3.0, 0.0, 0.0));
        assert_eq!(e.t, 1.0);
        assert_eq!(e.particles[0].distribution_value(), 0.5);
    }

    #[test]
    fn constant_field_kicks_are_exact() {
        let g = 0.75;
        let dt = 0.125;
        let cfg = IntegratorConfig::analytic(dt, AnalyticField::Constant { e: [g, 0.0, 0.0] });
        let plan = DiagnosticsPlan::new(1000, vec![]);
        let (e, _, _) = integrate(single(Vec3::ZERO, Vec3::ZERO), &cfg, 40.0 * dt, &plan).unwrap();
        assert_eq!(e.particles[0].v.x(), 40.0 * dt * g);
    }

    #[test]
    fn empty_run_is_identity() {
        let cfg = IntegratorConfig::analytic(0.1, AnalyticField::Zero);
        let plan = DiagnosticsPlan::new(1, vec![0]);
        let e0 = single(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.1, 0.0, 0.0));
        let (e, log, series) = integrate(e0.clone(), &cfg, 0.0, &plan).unwrap();
        assert_eq!(e, e0);
        assert!(series.is_empty());
        assert!(log.is_empty());
        assert!(integrate(e0, &cfg, -1.0, &plan).is_err());
    }

    #[test]
    fn monotone_quantity_examples() {
        let q = |x: [f64; 3], v: [f64; 3]| monotone_quantity(Vec3(x), Vec3(v)).unwrap();
        assert_eq!(q([1.0, 0.0, 0.0], [2.0, 0.0, 0.0]), 1.0);
        assert_eq!(q([1.0, 0.0, 0.0], [0.0, 5.0, 0.0]), 0.0);
        assert_eq!(q([1.0, 1.0, 0.0], [3.0, -3.0, 0.0]), 0.0);
        assert!(matches!(monotone_quantity(Vec3::ZERO, Vec3::ZERO), Err(Error::Undefined(_))));
    }

    #[test]
    fn blowup_names_the_particle() {
        let mut e = Ensemble::new(
            vec![
                Particle::new(Vec3::ZERO, Vec3::ZERO, 1.0, 1.0),
                Particle::new(Vec3::ZERO, Vec3::new(f64::INFINITY, 0.0, 0.0), 1.0, 1.0),
            ],
            0.0,
            0,
        );
        let mut ev = AnalyticEvaluator { field: AnalyticField::Zero };
        match push(&mut e, &mut ev, 0.1) {
            Err(Error::IntegrationBlowup { particle, .. }) => assert_eq!(particle, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn step_count_requires_whole_steps() {
        assert_eq!(step_count(0.0, 1.0, 1e-3).unwrap(), 1000);
        assert!(step_count(0.0, 1.0, 0.3).is_err());
    }

    #[test]
    fn records_follow_schedule() {
        let cfg = IntegratorConfig::analytic(0.1, AnalyticField::PointCharge { mass: 1.0 });
        let plan = DiagnosticsPlan::new(3, vec![0]);
        let (_, log, series) = integrate(single(Vec3::new(1.0, 0.0, 0.0), Vec3::ZERO), &cfg, 1.0, &plan).unwrap();
        let ts: Vec<f64> = series.records.iter().map(|r| r.t).collect();
        assert_eq!(ts.len(), 5);
        assert!((ts[4] - 1.0).abs() < 1e-15);
        assert_eq!(log.len(), 11);
        let a: Vec<f64> = series.records.iter().map(|r| r.a_cum).collect();
        assert!(a.windows(2).all(|w| w[1] >= w[0]));
    }
}

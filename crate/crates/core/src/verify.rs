//! Property suites behind `rvp verify` and the acceptance tests.
//!
//! Each suite returns a [`CriterionResult`] with a pass flag and the
//! measured quantities. Suites never adjust their thresholds to the data.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::Result;
use crate::field::{build_radial_profile, direct_sum_field, grid_deposit, grid_poisson_solve, interpolate_field, radial_field, GridSpec};
use crate::functionals::cutoff::{cutoff_phi, phi, pow2};
use crate::functionals::{omega_weight, weight_positivity_check, FunctionalParams, Sign, WeightParams};
use crate::harness::{resume_in_memory, run_in_memory};
use crate::kinetics::Ensemble;
use crate::localization::{localization_suite, LocalizationSpec};
use crate::pusher::{monotone_quantity, AnalyticField, DiagnosticsPlan, FieldMode, GridConfig, IntegratorConfig, RunState};
use crate::scenario::{sample_initial_ensemble, Scenario, ScenarioKind};
use crate::vec3::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub summary: String,
    pub seconds: f64,
    pub detail: serde_json::Value,
}

impl CriterionResult {
    fn new(id: u32, name: &str, pass: bool, summary: String, started: Instant, detail: serde_json::Value) -> Self {
        CriterionResult { id, name: name.into(), pass, summary, seconds: started.elapsed().as_secs_f64(), detail }
    }

    /// `criterion <id> <name>: PASS|FAIL (<summary>)`.
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        format!("criterion {:>2} {}: {verdict} ({}; {:.1}s)", self.id, self.name, self.summary, self.seconds)
    }
}

fn sample(kind: ScenarioKind, n: usize, seed: u64) -> Result<Ensemble> {
    Ok(sample_initial_ensemble(&Scenario::preset(kind), n, 1.0, seed)?.0)
}

fn fmt(x: f64) -> String {
    format!("{x:.3e}")
}

/// Backend comparison at `points` query points with radii spread evenly
/// over `(0, 2 R]`, `R` the sample's support radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendComparison {
    pub n: usize,
    pub support_radius: f64,
    pub radii: Vec<f64>,
    pub radial_rel_err: Vec<f64>,
    pub grid_rel_err: Vec<f64>,
    /// `|E_radial| / (M / 4 pi r^2)` per point.
    pub bound_ratio: Vec<f64>,
    /// Largest `|E_radial| - M / 4 pi r^2`.
    pub max_bound_excess: f64,
    /// Largest relative gap to `M / 4 pi r^2` outside the support.
    pub max_outside_gap: f64,
}

pub fn backend_comparison(n: usize, seed: u64, points: usize, grid_n: usize) -> Result<BackendComparison> {
    let ens = sample(ScenarioKind::RadialGaussian, n, seed)?;
    let mass = ens.total_mass();
    let profile0 = build_radial_profile(&ens, 1, 1.0)?;
    let support_radius = profile0.max_radius;
    let profile = build_radial_profile(&ens, 1000, support_radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let targets: Vec<Vec3> = (0..points)
        .map(|i| {
            let r = 2.0 * support_radius * (i as f64 + 0.5) / points as f64;
            let z: f64 = rng.random_range(-1.0..1.0);
            let a: f64 = rng.random_range(0.0..TAU);
            let s = (1.0 - z * z).sqrt();
            Vec3::new(s * a.cos(), s * a.sin(), z) * r
        })
        .collect();
    let direct = direct_sum_field(&ens, &targets, 0.0);
    let spec = GridSpec::centered_cube(grid_n, 1.02 * support_radius)?;
    let grid = grid_poisson_solve(grid_deposit(&ens, &spec)?)?;
    let rel = |a: Vec3, b: Vec3| (a - b).norm() / b.norm();
    let mut out = BackendComparison {
        n,
        support_radius,
        radii: Vec::with_capacity(points),
        radial_rel_err: Vec::with_capacity(points),
        grid_rel_err: Vec::with_capacity(points),
        bound_ratio: Vec::with_capacity(points),
        max_bound_excess: f64::NEG_INFINITY,
        max_outside_gap: 0.0,
    };
    for (x, d) in targets.iter().zip(&direct) {
        let r = x.norm();
        let e_radial = radial_field(&profile, *x);
        let e_grid = interpolate_field(&grid, *x);
        let bound = mass / (4.0 * PI * r * r);
        out.radii.push(r);
        out.radial_rel_err.push(rel(e_radial, *d));
        out.grid_rel_err.push(rel(e_grid, *d));
        out.bound_ratio.push(e_radial.norm() / bound);
        out.max_bound_excess = out.max_bound_excess.max(e_radial.norm() - bound);
        if r > support_radius {
            out.max_outside_gap = out.max_outside_gap.max((e_radial.norm() - bound).abs() / bound);
        }
    }
    Ok(out)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Criteria 1 and 2 from one comparison.
pub fn field_criteria(cmp: &BackendComparison, started: Instant) -> (CriterionResult, CriterionResult) {
    let radial = max_of(&cmp.radial_rel_err);
    let grid = max_of(&cmp.grid_rel_err);
    let inside: Vec<f64> = cmp
        .radii
        .iter()
        .zip(&cmp.radial_rel_err)
        .filter(|(r, _)| **r <= cmp.support_radius)
        .map(|(_, e)| *e)
        .collect();
    let outside: Vec<f64> = cmp
        .radii
        .iter()
        .zip(&cmp.radial_rel_err)
        .filter(|(r, _)| **r > cmp.support_radius)
        .map(|(_, e)| *e)
        .collect();
    let c1 = CriterionResult::new(
        1,
        "field-backend oracle equivalence",
        radial <= 1e-2 && grid <= 2e-2,
        format!("radial max rel err {} (<= 1e-2), grid {} (<= 2e-2), N = {}", fmt(radial), fmt(grid), cmp.n),
        started,
        json!({
            "radial_max_rel_err": radial,
            "grid_max_rel_err": grid,
            "radial_max_rel_err_inside_support": max_of(&inside),
            "radial_max_rel_err_outside_support": max_of(&outside),
            "support_radius": cmp.support_radius,
            "points": cmp.radii.len(),
        }),
    );
    let c2 = CriterionResult::new(
        2,
        "pointwise field bound",
        cmp.max_bound_excess <= 1e-12 && cmp.max_outside_gap <= 1e-10,
        format!("max excess {} (<= 1e-12), outside-support gap {} (<= 1e-10)", fmt(cmp.max_bound_excess), fmt(cmp.max_outside_gap)),
        started,
        json!({
            "max_bound_excess": cmp.max_bound_excess,
            "max_outside_relative_gap": cmp.max_outside_gap,
            "max_bound_ratio": max_of(&cmp.bound_ratio),
        }),
    );
    (c1, c2)
}

/// Drifts and monotonicity statistics of one radial run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationRun {
    pub dt: f64,
    pub steps: u64,
    pub energy_drift: f64,
    pub angular_momentum_drift: f64,
    /// Largest one-step decrease of `(v . x) / |v|` over particles and steps.
    pub max_monotone_decrease: f64,
    /// Steps-times-particles with a decrease beyond `dt^2`.
    pub band_violations: u64,
}

/// Radial-backend run recording energy each step and the monotone quantity.
pub fn conservation_run(kind: ScenarioKind, n: usize, seed: u64, dt: f64, t_end: f64, integrator: Option<&IntegratorConfig>) -> Result<ConservationRun> {
    let ens = sample(kind, n, seed)?;
    let mut config = integrator.cloned().unwrap_or_else(|| IntegratorConfig::new(dt, FieldMode::Radial));
    config.dt = dt;
    let plan = DiagnosticsPlan {
        record_every: 1,
        trajectory_ids: Vec::new(),
        trajectory_every: 1,
        functionals: FunctionalParams { moment_orders: vec![], ..FunctionalParams::default() },
    };
    let steps = crate::pusher::step_count(0.0, t_end, dt)?;
    let mut state = RunState::new(ens, &plan)?;
    let l0 = state.ensemble.angular_momentum();
    let mut l_drift: f64 = 0.0;
    let mut prev: Option<Vec<f64>> = None;
    let mut max_decrease = f64::NEG_INFINITY;
    let mut violations = 0u64;
    let band = dt * dt;
    state.advance_observed(&config, &plan, steps, None, |_| Ok(()), |s| {
        let l = s.ensemble.angular_momentum();
        l_drift = l_drift.max((l - l0).norm());
        let q = s
            .ensemble
            .particles
            .iter()
            .map(|p| monotone_quantity(p.x, p.v))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(p) = &prev {
            for (a, b) in p.iter().zip(&q) {
                let dec = a - b;
                max_decrease = max_decrease.max(dec);
                if dec > band {
                    violations += 1;
                }
            }
        }
        prev = Some(q);
        Ok(())
    })?;
    let energies: Vec<f64> = state.series.records.iter().map(|r| r.total_energy).collect();
    let e0 = energies[0];
    let energy_drift = energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs();
    let scale = if l0.norm() > 0.0 {
        l0.norm()
    } else {
        state.ensemble.particles.iter().map(|p| p.w * p.x.cross(p.v).norm()).sum()
    };
    Ok(ConservationRun {
        dt,
        steps,
        energy_drift,
        angular_momentum_drift: l_drift / scale,
        max_monotone_decrease: max_decrease,
        band_violations: violations,
    })
}

/// Drifts below this are at the level of floating-point rounding, where a
/// convergence order is not defined.
pub const ROUNDOFF_DRIFT: f64 = 1e-12;

pub fn conservation_criterion(coarse: &ConservationRun, fine: &ConservationRun, started: Instant) -> CriterionResult {
    let band = 3.5..=4.5;
    let e_ratio = coarse.energy_drift / fine.energy_drift;
    let l_ratio = coarse.angular_momentum_drift / fine.angular_momentum_drift;
    let l_at_roundoff = coarse.angular_momentum_drift <= ROUNDOFF_DRIFT && fine.angular_momentum_drift <= ROUNDOFF_DRIFT;
    let e_ok = band.contains(&e_ratio);
    let l_ok = band.contains(&l_ratio) || l_at_roundoff;
    CriterionResult::new(
        3,
        "conservation drift and order",
        e_ok && l_ok,
        format!(
            "energy drift {} -> {} ratio {:.3}; angular momentum drift {} -> {}{}",
            fmt(coarse.energy_drift),
            fmt(fine.energy_drift),
            e_ratio,
            fmt(coarse.angular_momentum_drift),
            fmt(fine.angular_momentum_drift),
            if l_at_roundoff { " (conserved to rounding)".to_string() } else { format!(" ratio {l_ratio:.3}") }
        ),
        started,
        json!({ "coarse": coarse, "fine": fine, "energy_ratio": e_ratio, "angular_momentum_ratio": l_ratio,
                "angular_momentum_at_roundoff": l_at_roundoff }),
    )
}

pub fn monotone_criterion(coarse: &ConservationRun, fine: &ConservationRun, started: Instant) -> CriterionResult {
    let pass = fine.band_violations == 0 && fine.band_violations <= coarse.band_violations;
    CriterionResult::new(
        5,
        "monotone quantity",
        pass,
        format!(
            "band violations {} at dt = {} and {} at dt = {}; max decrease / dt^2 = {:.3} and {:.3}",
            coarse.band_violations,
            coarse.dt,
            fine.band_violations,
            fine.dt,
            coarse.max_monotone_decrease / (coarse.dt * coarse.dt),
            fine.max_monotone_decrease / (fine.dt * fine.dt)
        ),
        started,
        json!({ "coarse": coarse, "fine": fine }),
    )
}

/// Planar angular momentum transport under an in-plane radial field.
pub fn angular_transport(kind: ScenarioKind, n: usize, seed: u64, dt: f64, t_end: f64) -> Result<CriterionResult> {
    let started = Instant::now();
    let ens = sample(kind, n, seed)?;
    let ell0: Vec<f64> = ens.particles.iter().map(|p| p.ell()).collect();
    let config = IntegratorConfig::analytic(dt, AnalyticField::PlanarLog { strength: 1.0, core: 0.1 });
    let plan = DiagnosticsPlan {
        record_every: u64::MAX,
        trajectory_ids: Vec::new(),
        trajectory_every: u64::MAX,
        functionals: FunctionalParams::default(),
    };
    let steps = crate::pusher::step_count(0.0, t_end, dt)?;
    let mut state = RunState::new(ens, &plan)?;
    state.advance(&config, &plan, steps, None, |_| Ok(()))?;
    let worst = state
        .ensemble
        .particles
        .iter()
        .zip(&ell0)
        .map(|(p, l0)| (p.ell() - l0).abs() / (1.0 + l0.abs()))
        .fold(0.0, f64::max);
    let j0 = state.series.records[0].j;
    let j1 = state.series.records.last().map(|r| r.j).unwrap_or(j0);
    let j_drift = (j1 - j0).abs() / j0;
    Ok(CriterionResult::new(
        4,
        "planar angular momentum transport",
        worst <= 1e-6 && j_drift <= 1e-4,
        format!("max |l - l0| / (1 + |l0|) = {} (<= 1e-6), |dJ| / J = {} (<= 1e-4)", fmt(worst), fmt(j_drift)),
        started,
        json!({ "max_relative_ell_change": worst, "j0": j0, "j_final": j1, "j_relative_drift": j_drift, "n": n, "dt": dt }),
    ))
}

/// Polynomial piece of `phi` containing `a`: the breakpoints are 0, 1, 2.
fn phi_piece(a: f64) -> u8 {
    match a {
        a if a <= 0.0 => 0,
        a if a < 1.0 => 1,
        a if a <= 2.0 => 2,
        _ => 3,
    }
}

/// Pieces of the inner and outer cutoff arguments of `omega` at `x`.
fn cutoff_pieces(x: Vec3, v: Vec3, p: &WeightParams) -> (u8, u8) {
    let (a, b) = (x.planar_norm(), v.planar_norm());
    if a == 0.0 || b == 0.0 {
        return (0, 0);
    }
    let mu = p.mu.value();
    let c = (x.x() * v.x() + x.y() * v.y()) / (a * b);
    (phi_piece(pow2(10 * p.mt) * mu * c), phi_piece(mu * (c + 0.5)))
}

/// Richardson-extrapolated central difference of `omega` in `x_i`.
///
/// The step starts at `h` and is halved until the whole stencil lies in
/// one polynomial piece of both cutoffs, since the difference quotient of
/// a function whose second derivative jumps inside the stencil is only
/// first-order accurate.
fn fd_gradient(x: Vec3, v: Vec3, p: &WeightParams, h: f64) -> Result<[f64; 2]> {
    let here = cutoff_pieces(x, v, p);
    let mut g = [0.0; 2];
    for (i, gi) in g.iter_mut().enumerate() {
        let shifted = |h: f64| {
            let mut y = x;
            y.0[i] += h;
            y
        };
        let mut h = h;
        while h > 1e-9 * x.planar_norm() && [-1.0, 1.0].iter().any(|s| cutoff_pieces(shifted(s * h), v, p) != here) {
            h *= 0.5;
        }
        let d = |h: f64| -> Result<f64> { Ok((omega_weight(shifted(h), v, p)?.0 - omega_weight(shifted(-h), v, p)?.0) / (2.0 * h)) };
        *gi = (4.0 * d(0.5 * h)? - d(h)?) / 3.0;
    }
    Ok(g)
}

pub fn weight_mechanics(samples: usize, seed: u64, mt: i32, eps_star: f64) -> Result<CriterionResult> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut worst_fd: f64 = 0.0;
    let mut worst_sample = None;
    let mut fd_failures = 0usize;
    let mut worst_rot: f64 = 0.0;
    for _ in 0..samples {
        let x = draw(&mut rng);
        let v = draw(&mut rng);
        let mu = if rng.random::<bool>() { Sign::Plus } else { Sign::Minus };
        let theta: f64 = rng.random_range(0.0..TAU);
        let p = WeightParams::new(mu, mt, eps_star)?;
        let (w, g) = omega_weight(x, v, &p)?;
        let fd = fd_gradient(x, v, &p, 1e-5 * x.planar_norm().max(1e-3))?;
        let gn = g[0].hypot(g[1]);
        let diff = (g[0] - fd[0]).hypot(g[1] - fd[1]);
        let rel = if gn == 0.0 && diff == 0.0 { 0.0 } else { diff / gn };
        if rel > worst_fd {
            worst_fd = rel;
            worst_sample = Some(json!({ "x": x, "v": v, "mu": mu.value(), "analytic": g, "finite_difference": fd }));
        }
        if !(rel <= 1e-6) {
            fd_failures += 1;
        }
        let (s, c) = theta.sin_cos();
        let rot = |u: Vec3| Vec3::new(c * u.x() - s * u.y(), s * u.x() + c * u.y(), u.z());
        let (wr, _) = omega_weight(rot(x), rot(v), &p)?;
        worst_rot = worst_rot.max((wr - w).abs() / (1.0 + w.abs()));
        match mu {
            Sign::Plus => plus.push((x, v)),
            Sign::Minus => minus.push((x, v)),
        }
    }
    let rp = weight_positivity_check(&plus, &WeightParams::new(Sign::Plus, mt, eps_star)?)?;
    let rm = weight_positivity_check(&minus, &WeightParams::new(Sign::Minus, mt, eps_star)?)?;
    let min_derivative = rp.min_derivative.min(rm.min_derivative);
    let pass = fd_failures == 0 && rp.pass && rm.pass && worst_rot <= 1e-12;
    Ok(CriterionResult::new(
        6,
        "weight mechanics",
        pass,
        format!(
            "max FD rel err {} over {samples} samples ({fd_failures} above 1e-6), min mu v.grad omega {}, rotation {}",
            fmt(worst_fd),
            fmt(min_derivative),
            fmt(worst_rot)
        ),
        started,
        json!({ "max_fd_relative_error": worst_fd, "worst_sample": worst_sample, "fd_failures": fd_failures, "min_directional_derivative": min_derivative,
                "max_rotation_error": worst_rot, "plus": rp, "minus": rm, "mt": mt, "eps_star": eps_star }),
    ))
}

pub fn cutoff_exactness(samples: usize, seed: u64) -> CriterionResult {
    let started = Instant::now();
    let fixed: [(&str, f64, f64); 6] = [
        ("phi(0.5)", phi(0.5), 0.125),
        ("phi(1.5)", phi(1.5), 1.875),
        ("phi(2)", phi(2.0), 2.0),
        ("phi(7.25)", phi(7.25), 2.0),
        ("phi(0)", phi(0.0), 0.0),
        ("phi(-3)", phi(-3.0), 0.0),
    ];
    let bad_fixed: Vec<&str> = fixed.iter().filter(|(_, a, b)| a.to_bits() != b.to_bits()).map(|(n, _, _)| *n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scaling_mismatches = 0usize;
    for _ in 0..samples {
        let l: i32 = rng.random_range(-60..=60);
        let x = rng.random_range(-1.0..3.0) * pow2(l);
        let direct = phi(x / 2f64.powi(l));
        if cutoff_phi(x, l).to_bits() != direct.to_bits() {
            scaling_mismatches += 1;
        }
    }
    CriterionResult::new(
        7,
        "cutoff function exactness",
        bad_fixed.is_empty() && scaling_mismatches == 0,
        format!("{} fixed values off, {scaling_mismatches} of {samples} scaling mismatches", bad_fixed.len()),
        started,
        json!({ "bad_fixed_values": bad_fixed, "scaling_mismatches": scaling_mismatches, "samples": samples }),
    )
}

pub fn localization_criterion(kind: ScenarioKind, n: usize, seed: u64, loc: &LocalizationSpec, n_c: f64) -> Result<CriterionResult> {
    let started = Instant::now();
    let ens = sample(kind, n, seed)?;
    let s = localization_suite(&ens, loc, n_c)?;
    let failing: Vec<_> = s.entries.iter().filter(|e| !e.pass).map(|e| (e.k, e.j1, e.j2, e.ratio)).collect();
    let pass = s.bin_reconstruction_error <= 1e-10
        && s.band_reconstruction_error <= 1e-6
        && s.all_pass
        && s.kernel.exponent >= 6.0;
    Ok(CriterionResult::new(
        8,
        "localized field suite",
        pass,
        format!(
            "bins {} (<= 1e-10), shells {} (<= 1e-6), envelope max ratio {:.3} vs C = {} over {} indices, kernel decay exponent {:.2} (>= 6)",
            fmt(s.bin_reconstruction_error),
            fmt(s.band_reconstruction_error),
            s.fitted_constant,
            s.frozen_constant,
            s.entries.len(),
            s.kernel.exponent
        ),
        started,
        json!({ "suite": s, "failing_indices": failing, "grid_n": loc.grid.n }),
    ))
}

/// Cylindrical run tracking the space-time functional for two `delta0`.
pub fn spacetime_stability(kind: ScenarioKind, n: usize, seed: u64, integrator: &IntegratorConfig, t_end: f64) -> Result<CriterionResult> {
    let started = Instant::now();
    let ens = sample(kind, n, seed)?;
    let plan = DiagnosticsPlan {
        record_every: 1,
        trajectory_ids: Vec::new(),
        trajectory_every: u64::MAX,
        functionals: FunctionalParams { delta0: 1e-3, delta0_extra: vec![1e-4], ..FunctionalParams::default() },
    };
    let steps = crate::pusher::step_count(0.0, t_end, integrator.dt)?;
    let mut state = RunState::new(ens, &plan)?;
    state.advance(integrator, &plan, steps, None, |_| Ok(()))?;
    let a: Vec<f64> = state.series.records.iter().map(|r| r.a_cum).collect();
    let finite = a.iter().all(|x| x.is_finite());
    let nondecreasing = a.windows(2).all(|w| w[1] >= w[0]);
    let last = state.series.records.last().expect("records");
    let a3 = last.a_cum;
    let a4 = last.a_cum_extra[0];
    let rel = (a4 - a3).abs() / a3;
    Ok(CriterionResult::new(
        9,
        "space-time functional",
        finite && nondecreasing && rel <= 0.05,
        format!("A(T) = {} (delta0 1e-3) vs {} (1e-4), rel diff {} (<= 0.05), finite {finite}, nondecreasing {nondecreasing}", fmt(a3), fmt(a4), fmt(rel)),
        started,
        json!({ "a_cum": a3, "a_cum_delta0_1e-4": a4, "relative_difference": rel, "finite": finite, "nondecreasing": nondecreasing,
                "min_planar_radius": last.min_planar_radius }),
    ))
}

/// Repeat, thread-count and checkpoint-resume comparisons of the
/// diagnostics CSV.
pub fn determinism(cfg: &RunConfig, alt_threads: usize) -> Result<CriterionResult> {
    let started = Instant::now();
    let mut cfg = cfg.clone();
    cfg.localization = None;
    let steps = cfg.steps()?;
    if cfg.diagnostics.checkpoint_every.is_none() {
        cfg.diagnostics.checkpoint_every = Some((steps / 2).max(1));
    }
    let (a, checkpoints) = run_in_memory(&cfg)?;
    let (b, _) = run_in_memory(&cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(alt_threads)
        .build()
        .map_err(|e| crate::error::Error::Resource(e.to_string()))?;
    let (c, _) = pool.install(|| run_in_memory(&cfg))?;
    let repeat = a.diagnostics_csv == b.diagnostics_csv && a.trajectory_csv == b.trajectory_csv;
    let threads = a.diagnostics_csv == c.diagnostics_csv && a.trajectory_csv == c.trajectory_csv;
    let mut resumed = !checkpoints.is_empty();
    for ck in &checkpoints {
        let r = resume_in_memory(ck)?;
        resumed &= r.diagnostics_csv == a.diagnostics_csv && r.trajectory_csv == a.trajectory_csv;
    }
    Ok(CriterionResult::new(
        10,
        "determinism and checkpointing",
        repeat && threads && resumed,
        format!(
            "repeat {repeat}, {} vs {alt_threads} threads {threads}, resume from {} checkpoints {resumed}",
            rayon::current_num_threads(),
            checkpoints.len()
        ),
        started,
        json!({ "repeat_identical": repeat, "thread_count_identical": threads, "resume_identical": resumed,
                "checkpoints": checkpoints.len(), "csv_bytes": a.diagnostics_csv.len() }),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dt: f64,
    pub energy_drift: f64,
    /// `log2` of the drift ratio to the previous, coarser row.
    pub observed_order: Option<f64>,
}

/// Energy drift under repeated dt halving.
pub fn dt_sweep(cfg: &RunConfig, levels: usize) -> Result<Vec<SweepRow>> {
    let mut rows: Vec<SweepRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        let dt = cfg.dt / (1u64 << level) as f64;
        let run = conservation_run(cfg.scenario, cfg.n, cfg.seed, dt, cfg.t_end, Some(&cfg.integrator()))?;
        let observed_order = rows.last().map(|p| (p.energy_drift / run.energy_drift).log2());
        rows.push(SweepRow { dt, energy_drift: run.energy_drift, observed_order });
    }
    Ok(rows)
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = String::from("dt,energy_drift,observed_order\n");
    for r in rows {
        let order = r.observed_order.map(|o| format!("{o:.4}")).unwrap_or_default();
        out.push_str(&format!("{:e},{:e},{order}\n", r.dt, r.energy_drift));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub criteria: Vec<CriterionResult>,
    pub sweep: Option<Vec<SweepRow>>,
    pub all_pass: bool,
}

fn radial_kind(cfg: &RunConfig) -> ScenarioKind {
    if cfg.scenario.is_radial() {
        cfg.scenario
    } else {
        ScenarioKind::RadialGaussian
    }
}

fn cylindrical_kind(cfg: &RunConfig) -> ScenarioKind {
    if cfg.scenario.is_radial() {
        ScenarioKind::CylindricalTorus
    } else {
        cfg.scenario
    }
}

/// Integrator for the cylindrical suites: the config's own unless it uses
/// the spherical shell model, in which case a grid solve.
fn cylindrical_integrator(cfg: &RunConfig) -> IntegratorConfig {
    let mut i = cfg.integrator();
    if matches!(i.field_mode, FieldMode::Radial | FieldMode::Analytic) {
        i.field_mode = FieldMode::Grid;
        i.grid = GridConfig { n: 32, half_width: 4.0 };
    }
    i
}

/// Run the requested suites at the config's scale.
pub fn verify(cfg: &RunConfig, sweep: bool) -> Result<VerifyReport> {
    let v = &cfg.verify;
    let wanted = |id: u32| v.criteria.contains(&id);
    let mut criteria = Vec::new();
    if wanted(1) || wanted(2) {
        let started = Instant::now();
        let cmp = backend_comparison(cfg.n, cfg.seed, v.backend_points, v.backend_grid_n)?;
        let (c1, c2) = field_criteria(&cmp, started);
        if wanted(1) {
            criteria.push(c1);
        }
        if wanted(2) {
            criteria.push(c2);
        }
    }
    if wanted(3) || wanted(5) {
        let started = Instant::now();
        let kind = radial_kind(cfg);
        let mut integ = cfg.integrator();
        integ.field_mode = FieldMode::Radial;
        let coarse = conservation_run(kind, cfg.n, cfg.seed, 2.0 * cfg.dt, cfg.t_end, Some(&integ))?;
        let fine = conservation_run(kind, cfg.n, cfg.seed, cfg.dt, cfg.t_end, Some(&integ))?;
        if wanted(3) {
            criteria.push(conservation_criterion(&coarse, &fine, started));
        }
        if wanted(5) {
            criteria.push(monotone_criterion(&coarse, &fine, started));
        }
    }
    if wanted(4) {
        criteria.push(angular_transport(cylindrical_kind(cfg), cfg.n, cfg.seed, cfg.dt, cfg.t_end)?);
    }
    if wanted(6) {
        let eps = cfg.functionals.eps_star();
        criteria.push(weight_mechanics(v.weight_samples, cfg.seed, v.weight_mt, eps)?);
    }
    if wanted(7) {
        criteria.push(cutoff_exactness(v.weight_samples, cfg.seed));
    }
    if wanted(8) {
        let loc = cfg.localization.clone().unwrap_or_else(|| LocalizationSpec {
            grid: GridConfig { n: 128, half_width: 4.0 },
            ..LocalizationSpec::default()
        });
        criteria.push(localization_criterion(cylindrical_kind(cfg), cfg.n, cfg.seed, &loc, cfg.functionals.n_c)?);
    }
    if wanted(9) {
        criteria.push(spacetime_stability(cylindrical_kind(cfg), cfg.n, cfg.seed, &cylindrical_integrator(cfg), cfg.t_end)?);
    }
    if wanted(10) {
        criteria.push(determinism(cfg, v.alt_threads)?);
    }
    criteria.sort_by_key(|c| c.id);
    let sweep = if sweep || v.sweep { Some(dt_sweep(cfg, v.sweep_levels)?) } else { None };
    let all_pass = criteria.iter().all(|c| c.pass);
    Ok(VerifyReport { config_hash: cfg.hash(), criteria, sweep, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_suite_passes() {
        assert!(cutoff_exactness(1000, 1).pass);
    }

    #[test]
    fn weight_suite_small() {
        let r = weight_mechanics(500, 2, 1, 0.005).unwrap();
        assert!(r.detail["max_rotation_error"].as_f64().unwrap() <= 1e-12, "{}", r.line());
    }

    #[test]
    fn radial_bound_holds_exactly() {
        let started = Instant::now();
        let cmp = backend_comparison(500, 3, 20, 16).unwrap();
        let (_, c2) = field_criteria(&cmp, started);
        assert!(c2.pass, "{}", c2.line());
    }

    #[test]
    fn short_conservation_run() {
        let r = conservation_run(ScenarioKind::RadialShell, 200, 4, 0.01, 0.05, None).unwrap();
        assert_eq!(r.steps, 5);
        assert!(r.energy_drift.is_finite());
        assert!(r.angular_momentum_drift <= ROUNDOFF_DRIFT);
    }

    #[test]
    fn determinism_small() {
        let cfg = RunConfig::minimal(ScenarioKind::RadialGaussian, 100, 0.01, 0.06);
        let r = determinism(&cfg, 3).unwrap();
        assert!(r.pass, "{}", r.line());
    }

    #[test]
    fn sweep_rows() {
        let cfg = RunConfig::minimal(ScenarioKind::RadialShell, 100, 0.02, 0.2);
        let rows = dt_sweep(&cfg, 2).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].observed_order.is_none() && rows[1].observed_order.is_some());
        assert!(sweep_table(&rows).starts_with("dt,energy_drift,observed_order\n"));
    }

    #[test]
    fn coarse_localization_grid_is_a_resolution_error() {
        let loc = LocalizationSpec { grid: GridConfig { n: 8, half_width: 4.0 }, k_max: Some(4), ..Default::default() };
        let err = localization_criterion(ScenarioKind::CylindricalTorus, 100, 1, &loc, 20.0).unwrap_err();
        assert_eq!(err.kind(), "resolution");
    }
}

//! Run configuration: a TOML file with documented defaults.
//!
//! Minimal file:
//!
//! ```toml
//! scenario = "radial-gaussian"
//! n = 1000
//! dt = 1e-3
//! t_end = 0.1
//! ```
//!
//! Optional keys and tables, with defaults:
//!
//! | key | default |
//! |-----|---------|
//! | `seed` | 0 |
//! | `total_mass` | 1.0 |
//! | `output_dir` | `runs/<hash>-seed<seed>` |
//! | `[scenario_params]` | the preset of `scenario` |
//! | `[integrator]` `field_mode` | `"radial"` |
//! | `[integrator]` `field_refresh` | 1 |
//! | `[integrator]` `softening` | 1e-3 |
//! | `[integrator]` `shell_width` | 0.02 |
//! | `[integrator.grid]` `n`, `half_width` | 32, 4.0 |
//! | `[integrator.analytic]` | none |
//! | `[diagnostics]` `record_every` | 1 |
//! | `[diagnostics]` `trajectory_count` | 8 |
//! | `[diagnostics]` `trajectory_every` | 1 |
//! | `[diagnostics]` `checkpoint_every` | none |
//! | `[diagnostics]` `majority_threshold` | none |
//! | `[functionals]` | orders `[1, 2, 20]`, `delta0` 1e-3, `floor` 1e-3, `n_c` 20 |
//! | `[localization]` | disabled |
//! | `[verify]` | see [`VerifySection`] |

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::functionals::FunctionalParams;
use crate::localization::LocalizationSpec;
use crate::pusher::{step_count, AnalyticField, DiagnosticsPlan, FieldMode, GridConfig, IntegratorConfig};
use crate::scenario::{Scenario, ScenarioKind, ScenarioParams};

/// Per-field overrides of a scenario preset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vanishing_order: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
}

impl ScenarioOverrides {
    pub fn apply(&self, base: ScenarioParams) -> ScenarioParams {
        ScenarioParams {
            width: self.width.unwrap_or(base.width),
            radius: self.radius.unwrap_or(base.radius),
            height: self.height.unwrap_or(base.height),
            temperature: self.temperature.unwrap_or(base.temperature),
            drift: self.drift.unwrap_or(base.drift),
            vanishing_order: self.vanishing_order.unwrap_or(base.vanishing_order),
            v_max: self.v_max.unwrap_or(base.v_max),
        }
    }
}

/// Integrator settings except the time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub field_mode: FieldMode,
    pub field_refresh: u64,
    pub softening: f64,
    pub grid: GridConfig,
    pub shell_width: f64,
    pub analytic: Option<AnalyticField>,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let c = IntegratorConfig::new(1.0, FieldMode::Radial);
        IntegratorSection {
            field_mode: c.field_mode,
            field_refresh: c.field_refresh,
            softening: c.softening,
            grid: c.grid,
            shell_width: c.shell_width,
            analytic: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    pub record_every: u64,
    /// Number of particles whose trajectories are logged, spread evenly
    /// over the ensemble.
    pub trajectory_count: usize,
    pub trajectory_every: u64,
    pub checkpoint_every: Option<u64>,
    /// Initial-data threshold of the majority-set report.
    pub majority_threshold: Option<f64>,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            record_every: 1,
            trajectory_count: 8,
            trajectory_every: 1,
            checkpoint_every: None,
            majority_threshold: None,
        }
    }
}

/// Scales of the `verify` suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Criteria to evaluate, numbered 1 to 10.
    pub criteria: Vec<u32>,
    /// Off-origin query points of the backend comparison.
    pub backend_points: usize,
    /// Nodes per axis of the grid backend in the comparison.
    pub backend_grid_n: usize,
    pub weight_samples: usize,
    pub weight_mt: i32,
    /// Worker threads of the second determinism run.
    pub alt_threads: usize,
    /// Emit a dt-halving convergence table.
    pub sweep: bool,
    pub sweep_levels: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            criteria: (1..=10).collect(),
            backend_points: 100,
            backend_grid_n: 128,
            weight_samples: 100_000,
            weight_mt: 1,
            alt_threads: 2,
            sweep: false,
            sweep_levels: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub scenario_params: ScenarioOverrides,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "unit_mass")]
    pub total_mass: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub functionals: FunctionalParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub localization: Option<LocalizationSpec>,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn unit_mass() -> f64 {
    1.0
}

impl RunConfig {
    /// A config with every optional field at its default.
    pub fn minimal(scenario: ScenarioKind, n: usize, dt: f64, t_end: f64) -> Self {
        RunConfig {
            scenario,
            scenario_params: ScenarioOverrides::default(),
            n,
            seed: 0,
            total_mass: 1.0,
            dt,
            t_end,
            integrator: IntegratorSection::default(),
            diagnostics: DiagnosticsSection::default(),
            functionals: FunctionalParams::default(),
            localization: None,
            verify: VerifySection::default(),
            output_dir: None,
        }
    }

    pub fn scenario(&self) -> Scenario {
        let preset = Scenario::preset(self.scenario);
        Scenario::new(self.scenario, self.scenario_params.apply(preset.params))
    }

    pub fn integrator(&self) -> IntegratorConfig {
        let s = &self.integrator;
        IntegratorConfig {
            dt: self.dt,
            field_mode: s.field_mode,
            field_refresh: s.field_refresh,
            softening: s.softening,
            grid: s.grid,
            shell_width: s.shell_width,
            analytic: s.analytic.clone(),
        }
    }

    pub fn plan(&self) -> DiagnosticsPlan {
        let d = &self.diagnostics;
        DiagnosticsPlan {
            record_every: d.record_every,
            trajectory_ids: crate::pusher::spread_ids(self.n, d.trajectory_count),
            trajectory_every: d.trajectory_every,
            functionals: self.functionals.clone(),
        }
    }

    pub fn steps(&self) -> Result<u64> {
        step_count(0.0, self.t_end, self.dt)
    }

    /// SHA-256 of the canonical JSON form, keys sorted, `output_dir` left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        let value = serde_json::to_value(&c).expect("config serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    /// Range checks on the config's own fields, as `(key path, message)`.
    pub fn check(&self) -> std::result::Result<(), (String, String)> {
        fn bad(key: &str, msg: String) -> std::result::Result<(), (String, String)> {
            Err((key.to_string(), msg))
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.n == 0 {
            return bad("n", "particle count must be at least 1".into());
        }
        if !positive(self.dt) {
            return bad("dt", format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad("t_end", format!("t_end must be nonnegative, got {}", self.t_end));
        }
        if let Err(e) = self.steps() {
            return bad("t_end", e.to_string());
        }
        if !positive(self.total_mass) {
            return bad("total_mass", format!("total_mass must be positive, got {}", self.total_mass));
        }
        let o = &self.scenario_params;
        for (key, v) in [
            ("scenario_params.width", o.width),
            ("scenario_params.radius", o.radius),
            ("scenario_params.height", o.height),
            ("scenario_params.temperature", o.temperature),
            ("scenario_params.v_max", o.v_max),
            ("scenario_params.vanishing_order", o.vanishing_order),
        ] {
            if let Some(v) = v {
                if !positive(v) {
                    return bad(key, format!("must be positive, got {v}"));
                }
            }
        }
        if let Some(v) = o.drift {
            if !v.is_finite() {
                return bad("scenario_params.drift", format!("must be finite, got {v}"));
            }
        }
        if let Err(e) = self.scenario().validate() {
            return bad("scenario_params", e.to_string());
        }
        let i = &self.integrator;
        if i.field_refresh == 0 {
            return bad("integrator.field_refresh", "must be at least 1".into());
        }
        if !(i.softening.is_finite() && i.softening >= 0.0) {
            return bad("integrator.softening", format!("must be nonnegative, got {}", i.softening));
        }
        if !positive(i.shell_width) {
            return bad("integrator.shell_width", format!("must be positive, got {}", i.shell_width));
        }
        if i.grid.n < 2 {
            return bad("integrator.grid.n", format!("must be at least 2, got {}", i.grid.n));
        }
        if !positive(i.grid.half_width) {
            return bad("integrator.grid.half_width", format!("must be positive, got {}", i.grid.half_width));
        }
        if let Err(e) = self.integrator().validate() {
            return bad("integrator", e.to_string());
        }
        let d = &self.diagnostics;
        if d.record_every == 0 {
            return bad("diagnostics.record_every", "must be at least 1".into());
        }
        if d.trajectory_every == 0 {
            return bad("diagnostics.trajectory_every", "must be at least 1".into());
        }
        if d.trajectory_count > self.n {
            return bad("diagnostics.trajectory_count", format!("exceeds the particle count {}", self.n));
        }
        if d.checkpoint_every == Some(0) {
            return bad("diagnostics.checkpoint_every", "must be at least 1".into());
        }
        if let Some(t) = d.majority_threshold {
            if !positive(t) {
                return bad("diagnostics.majority_threshold", format!("must be positive, got {t}"));
            }
        }
        let f = &self.functionals;
        if !positive(f.delta0) {
            return bad("functionals.delta0", format!("must be positive, got {}", f.delta0));
        }
        if !positive(f.floor) {
            return bad("functionals.floor", format!("must be positive, got {}", f.floor));
        }
        if !(f.n_c.is_finite() && f.n_c > 1.0) {
            return bad("functionals.n_c", format!("must exceed 1, got {}", f.n_c));
        }
        if let Err(e) = f.validate() {
            return bad("functionals", e.to_string());
        }
        if let Some(l) = &self.localization {
            if l.grid.n < 2 {
                return bad("localization.grid.n", format!("must be at least 2, got {}", l.grid.n));
            }
            if !positive(l.grid.half_width) {
                return bad("localization.grid.half_width", format!("must be positive, got {}", l.grid.half_width));
            }
            if !positive(l.min_planar_radius) {
                return bad("localization.min_planar_radius", format!("must be positive, got {}", l.min_planar_radius));
            }
        }
        let v = &self.verify;
        if let Some(c) = v.criteria.iter().find(|c| !(1..=10).contains(*c)) {
            return bad("verify.criteria", format!("criteria are numbered 1 to 10, got {c}"));
        }
        if v.backend_points == 0 {
            return bad("verify.backend_points", "must be at least 1".into());
        }
        if v.backend_grid_n < 2 {
            return bad("verify.backend_grid_n", "must be at least 2".into());
        }
        if v.weight_samples == 0 {
            return bad("verify.weight_samples", "must be at least 1".into());
        }
        if !(0..=100).contains(&v.weight_mt) {
            return bad("verify.weight_mt", format!("must lie in [0, 100], got {}", v.weight_mt));
        }
        if v.alt_threads == 0 {
            return bad("verify.alt_threads", "must be at least 1".into());
        }
        if v.sweep_levels < 2 {
            return bad("verify.sweep_levels", "must be at least 2".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Configuration(e.to_string()))
    }
}

/// Parse and range-check a config. Errors carry the 1-based line of the
/// offending key.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, key) = match e.span() {
            Some(span) => {
                let line = line_of_offset(text, span.start);
                (line, key_on_line(text, line).unwrap_or_default())
            }
            None => (0, String::new()),
        };
        Error::Parse { line, key, message: e.message().trim().to_string() }
    })?;
    cfg.check().map_err(|(key, message)| Error::Parse { line: line_of_key(text, &key), key, message })?;
    Ok(cfg)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn key_on_line(text: &str, line: usize) -> Option<String> {
    let l = text.lines().nth(line.checked_sub(1)?)?.trim();
    if l.starts_with('[') {
        return Some(l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    }
    l.split_once('=').map(|(k, _)| k.trim().to_string())
}

/// Line of `a.b.c` in `text`: the key `c` inside table `[a.b]`, the dotted
/// key at top level, or else the table header. 0 when absent.
fn line_of_key(text: &str, path: &str) -> usize {
    let (table, key) = match path.rsplit_once('.') {
        Some((t, k)) => (t, k),
        None => ("", path),
    };
    let mut current = String::new();
    let mut header_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.starts_with('[') {
            current = l.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == path || (header_line == 0 && current == table) {
                header_line = i + 1;
                if current == path {
                    return header_line;
                }
            }
            continue;
        }
        if let Some((k, _)) = l.split_once('=') {
            let k = k.trim();
            let full = if current.is_empty() { k.to_string() } else { format!("{current}.{k}") };
            if full == path || (current == table && k == key) {
                return i + 1;
            }
        }
    }
    header_line
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "scenario = \"radial-gaussian\"\nn = 1000\ndt = 1e-3\nt_end = 0.1\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c, RunConfig::minimal(ScenarioKind::RadialGaussian, 1000, 1e-3, 0.1));
        assert_eq!(c.integrator().field_mode, FieldMode::Radial);
        assert_eq!(c.steps().unwrap(), 100);
        assert_eq!(c.scenario(), Scenario::preset(ScenarioKind::RadialGaussian));
    }

    #[test]
    fn negative_dt_names_dt() {
        let text = MINIMAL.replace("dt = 1e-3", "dt = -1");
        match parse_config(&text) {
            Err(Error::Parse { line, key, .. }) => assert_eq!((line, key.as_str()), (3, "dt")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let text = format!("{MINIMAL}[integrator]\nfield_mode = \"direct\"\nbogus = 3\n");
        match parse_config(&text) {
            Err(Error::Parse { line, key, message }) => {
                assert_eq!(line, 7, "{message}");
                assert_eq!(key, "bogus");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn type_mismatch_is_a_parse_error() {
        let text = MINIMAL.replace("n = 1000", "n = \"many\"");
        assert!(matches!(parse_config(&text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn nested_key_lines() {
        let text = format!("{MINIMAL}[diagnostics]\nrecord_every = 0\n");
        match parse_config(&text) {
            Err(Error::Parse { line, key, .. }) => assert_eq!((line, key.as_str()), (6, "diagnostics.record_every")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn key_order_does_not_change_hash() {
        let a = parse_config(MINIMAL).unwrap();
        let b = parse_config("t_end = 0.1\ndt = 1e-3\nn = 1000\nscenario = \"radial-gaussian\"\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse_config(&MINIMAL.replace("n = 1000", "n = 1001")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn output_dir_does_not_change_hash() {
        let a = parse_config(MINIMAL).unwrap();
        let b = parse_config(&format!("output_dir = \"x\"\n{MINIMAL}")).unwrap();
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn toml_round_trip() {
        let text = format!(
            "{MINIMAL}[scenario_params]\nwidth = 0.5\n[integrator.analytic]\nkind = \"planar-log\"\nstrength = 1.0\ncore = 0.1\n[localization]\nk_max = 3\n"
        );
        let a = parse_config(&text).unwrap();
        assert_eq!(a.scenario().params.width, 0.5);
        let b = parse_config(&a.to_toml().unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        let text = MINIMAL.replace("radial-gaussian", "spiral");
        assert!(matches!(parse_config(&text), Err(Error::Parse { line: 1, .. })));
    }
}

//! Dyadic frequency and momentum localization of the electric field.

pub mod bins;
pub mod bounds;
pub mod characteristic;
pub mod shells;

pub use bins::{
    bin_weight, dyadic_cutoff, momentum_bins, momentum_cutoff, top_momentum_shell, velocity_bin, DyadicIndex,
};
pub use bounds::{
    kernel_decay, log2_slope, off_axis_bound, rough_bound, verify_localized_bounds, BoundEntry, BoundInputs,
    KernelDecay, ROUGH_BOUND_CONSTANT,
};
pub use characteristic::{
    in_resonant_set, integrated_field_along_characteristic, periodic_trilinear, CharacteristicReport,
    FieldHistory, FieldSnapshot,
};
pub use shells::{check_resolvable, localized_field, relative_l2, resolvable_band, LocalizedField, SpectralDensity};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::grid::{grid_deposit, FieldGrid, GridSpec};
use crate::functionals::moments::{dyadic_epsilon, dyadic_scale, log2_enlarged_moment_cylindrical, log2_moment};
use crate::kinetics::Ensemble;
use crate::pusher::GridConfig;
use crate::vec3::Vec3;

/// Localization settings of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalizationSpec {
    pub grid: GridConfig,
    /// Frequency shells; the resolvable band when unset.
    pub k_min: Option<i32>,
    pub k_max: Option<i32>,
    /// Highest momentum shell; derived from the ensemble when unset.
    pub j2_max: Option<u32>,
    /// Off-axis envelope is sampled at `|x_planar| >=` this radius.
    pub min_planar_radius: f64,
    /// Indices whose field is integrated along the logged trajectories.
    pub characteristics: Vec<DyadicIndex>,
}

impl Default for LocalizationSpec {
    fn default() -> Self {
        LocalizationSpec {
            grid: GridConfig { n: 64, half_width: 4.0 },
            k_min: None,
            k_max: None,
            j2_max: None,
            min_planar_radius: 0.25,
            characteristics: Vec::new(),
        }
    }
}

impl LocalizationSpec {
    pub fn spec(&self) -> Result<GridSpec> {
        self.grid.spec()
    }

    /// Shell range, rejecting anything outside the resolvable band.
    pub fn k_range(&self) -> Result<(i32, i32)> {
        let spec = self.spec()?;
        let (lo, hi) = resolvable_band(&spec);
        let k_min = self.k_min.unwrap_or(lo);
        let k_max = self.k_max.unwrap_or(hi);
        check_resolvable(&spec, k_min)?;
        check_resolvable(&spec, k_max)?;
        if k_min > k_max {
            return Err(Error::Configuration(format!("k_min = {k_min} exceeds k_max = {k_max}")));
        }
        Ok((k_min, k_max))
    }

    pub fn validate(&self) -> Result<()> {
        self.k_range()?;
        if !(self.min_planar_radius > 0.0 && self.min_planar_radius.is_finite()) {
            return Err(Error::Configuration("min_planar_radius must be positive".into()));
        }
        let spec = self.spec()?;
        for idx in &self.characteristics {
            DyadicIndex::new(idx.k, idx.j1, idx.j2)?;
            check_resolvable(&spec, idx.k)?;
        }
        Ok(())
    }
}

/// Envelope and reconstruction checks at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationSuite {
    pub t: f64,
    pub k_min: i32,
    pub k_max: i32,
    pub j2_max: u32,
    pub mt: i32,
    pub eps: f64,
    pub inputs: BoundInputs,
    pub entries: Vec<BoundEntry>,
    /// Constant the envelope check used.
    pub frozen_constant: f64,
    /// Smallest constant that would make every entry pass.
    pub fitted_constant: f64,
    pub fitted_off_axis_constant: f64,
    pub all_pass: bool,
    pub slopes: Vec<SlopeEntry>,
    /// Relative max error of the summed bin deposits against the full one.
    pub bin_reconstruction_error: f64,
    /// Relative L2 error of the summed shells against the band-limited field.
    pub band_reconstruction_error: f64,
    /// Largest `|mean E| / sup |E|` over the computed fields.
    pub max_relative_mean: f64,
    pub kernel: KernelDecay,
}

/// Measured `d log2 ||E|| / dk` against the envelope's slope for one bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeEntry {
    pub j1: u32,
    pub j2: u32,
    pub measured: Option<f64>,
    pub envelope: Option<f64>,
}

/// Scale `Mt` and `eps` from the ensemble's order-`n_c` moment at time `t`.
pub fn scale_parameters(ensemble: &Ensemble, n_c: f64) -> (i32, f64) {
    let log2_enlarged = log2_enlarged_moment_cylindrical(ensemble.t, n_c, log2_moment(ensemble, n_c));
    (dyadic_scale(log2_enlarged, n_c), dyadic_epsilon(n_c))
}

/// Compute every `E_{k; j1, j2}` requested by `loc` and check the envelopes.
pub fn localization_suite(ensemble: &Ensemble, loc: &LocalizationSpec, n_c: f64) -> Result<LocalizationSuite> {
    loc.validate()?;
    let spec = loc.spec()?;
    let (k_min, k_max) = loc.k_range()?;
    let j2_max = loc.j2_max.unwrap_or_else(|| top_momentum_shell(ensemble));
    let (mt, eps) = scale_parameters(ensemble, n_c);
    let inputs = BoundInputs::from_ensemble(ensemble, n_c, eps, mt);
    let bins = momentum_bins(j2_max);
    let ks: Vec<i32> = (k_min..=k_max).collect();

    let full = grid_deposit(ensemble, &spec)?;
    let full_spectral = SpectralDensity::new(&full);
    let band = full_spectral.band_field();
    let mut shell_sum = vec![Vec3::ZERO; spec.len()];
    for &k in &ks {
        for (a, b) in shell_sum.iter_mut().zip(full_spectral.shell_field(k)?) {
            *a += b;
        }
    }
    let band_reconstruction_error = relative_l2(&shell_sum, &band);
    drop((shell_sum, band, full_spectral));

    let mut rho_sum = vec![0.0; spec.len()];
    let mut entries = Vec::with_capacity(bins.len() * ks.len());
    let mut max_relative_mean = 0.0f64;
    for &(j1, j2) in &bins {
        let binned = velocity_bin(ensemble, j1, j2, &spec)?;
        for (a, b) in rho_sum.iter_mut().zip(&binned.rho) {
            *a += b;
        }
        let spectral = SpectralDensity::new(&binned);
        let per_k: Vec<(BoundEntry, f64)> = ks
            .par_iter()
            .map(|&k| -> Result<(BoundEntry, f64)> {
                let index = DyadicIndex::new(k, j1, j2)?;
                let values = spectral.shell_field(k)?;
                let field = LocalizedField::from_values(index, FieldGrid::empty(spec), values);
                let rel_mean = if field.sup_norm > 0.0 { field.mean().norm() / field.sup_norm } else { 0.0 };
                let entry = verify_localized_bounds(
                    std::slice::from_ref(&field),
                    &inputs,
                    ROUGH_BOUND_CONSTANT,
                    loc.min_planar_radius,
                )
                .remove(0);
                Ok((entry, rel_mean))
            })
            .collect::<Result<_>>()?;
        for (entry, rel_mean) in per_k {
            max_relative_mean = max_relative_mean.max(rel_mean);
            entries.push(entry);
        }
    }
    let scale = full.rho.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let diff = rho_sum.iter().zip(&full.rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let bin_reconstruction_error = if scale > 0.0 { diff / scale } else { diff };

    let slopes = bins
        .iter()
        .map(|&(j1, j2)| {
            let sel: Vec<&BoundEntry> = entries.iter().filter(|e| e.j1 == j1 && e.j2 == j2).collect();
            let xs: Vec<f64> = sel.iter().map(|e| e.k as f64).collect();
            let measured: Vec<f64> = sel.iter().map(|e| e.sup_norm).collect();
            let envelope: Vec<f64> = sel.iter().map(|e| e.bound_value).collect();
            SlopeEntry { j1, j2, measured: log2_slope(&xs, &measured), envelope: log2_slope(&xs, &envelope) }
        })
        .collect();
    let fitted_constant = entries.iter().map(|e| e.ratio).fold(0.0, f64::max);
    let fitted_off_axis_constant = entries.iter().map(|e| e.off_axis_ratio).fold(0.0, f64::max);
    let all_pass = entries.iter().all(|e| e.pass);
    let kernel = kernel_decay(&spec, k_max)?;
    Ok(LocalizationSuite {
        t: ensemble.t,
        k_min,
        k_max,
        j2_max,
        mt,
        eps,
        inputs,
        entries,
        frozen_constant: ROUGH_BOUND_CONSTANT,
        fitted_constant,
        fitted_off_axis_constant,
        all_pass,
        slopes,
        bin_reconstruction_error,
        band_reconstruction_error,
        max_relative_mean,
        kernel,
    })
}

impl LocalizationSuite {
    /// `name,value` rows of the fitted constants and reconstruction errors.
    pub fn constants_csv(&self) -> String {
        let rows = [
            ("frozen_constant", self.frozen_constant),
            ("fitted_constant", self.fitted_constant),
            ("fitted_off_axis_constant", self.fitted_off_axis_constant),
            ("bin_reconstruction_error", self.bin_reconstruction_error),
            ("band_reconstruction_error", self.band_reconstruction_error),
            ("max_relative_mean", self.max_relative_mean),
            ("kernel_decay_exponent", self.kernel.exponent),
        ];
        let mut out = String::from("name,value\n");
        for (name, v) in rows {
            out.push_str(&format!("{name},{}\n", crate::functionals::series::fmt_float(v)));
        }
        out
    }
}

/// Records localized-field snapshots for the requested indices during a run.
pub struct CharacteristicRecorder {
    spec: GridSpec,
    pub histories: Vec<FieldHistory>,
}

impl CharacteristicRecorder {
    pub fn new(loc: &LocalizationSpec) -> Result<Self> {
        let spec = loc.spec()?;
        Ok(CharacteristicRecorder {
            spec,
            histories: loc.characteristics.iter().map(|&i| FieldHistory::new(i, spec)).collect(),
        })
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    pub fn snapshot(&mut self, ensemble: &Ensemble) -> Result<()> {
        for h in &mut self.histories {
            let binned = velocity_bin(ensemble, h.index.j1, h.index.j2, &self.spec)?;
            let values = SpectralDensity::new(&binned).shell_field(h.index.k)?;
            h.push(ensemble.t, values)?;
        }
        Ok(())
    }

    /// Integrate each history along the part of `log` it covers.
    pub fn reports(&self, log: &crate::pusher::TrajectoryLog, mt: i32, eps: f64) -> Result<Vec<CharacteristicReport>> {
        self.histories
            .iter()
            .map(|h| {
                let (a, b) = h
                    .time_range()
                    .ok_or_else(|| Error::Coverage("no snapshots were recorded".into()))?;
                integrated_field_along_characteristic(&log.window(a, b), h, mt, eps)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{sample_initial_ensemble, Scenario, ScenarioKind};

    #[test]
    fn out_of_band_shell_is_rejected() {
        let loc = LocalizationSpec { k_max: Some(12), ..Default::default() };
        assert!(matches!(loc.validate(), Err(Error::Resolution { k: 12, .. })));
    }

    #[test]
    fn suite_on_small_grid() {
        let sc = Scenario::preset(ScenarioKind::RadialGaussian);
        let (ens, _) = sample_initial_ensemble(&sc, 2000, 1.0, 3).unwrap();
        let loc = LocalizationSpec { grid: GridConfig { n: 32, half_width: 4.0 }, ..Default::default() };
        let s = localization_suite(&ens, &loc, 20.0).unwrap();
        assert!(s.bin_reconstruction_error <= 1e-10, "{}", s.bin_reconstruction_error);
        assert!(s.band_reconstruction_error <= 1e-6, "{}", s.band_reconstruction_error);
        assert!(s.max_relative_mean <= 1e-10, "{}", s.max_relative_mean);
        assert_eq!(s.entries.len(), momentum_bins(s.j2_max).len() * (s.k_max - s.k_min + 1) as usize);
        assert!(s.constants_csv().starts_with("name,value\nfrozen_constant,"));
    }
}

//! Named initial-data presets and the sampler that realizes them.
//!
//! Every preset has a closed-form density. Particles are drawn from the
//! normalized law with uniform weights `total_mass / n`, and each particle
//! stores the density value `f0` at its sample point.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::kinetics::{Ensemble, Particle};
use crate::vec3::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    RadialGaussian,
    RadialShell,
    CylindricalTorus,
    CylindricalVanishingMomentum,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::RadialGaussian => "radial-gaussian",
            ScenarioKind::RadialShell => "radial-shell",
            ScenarioKind::CylindricalTorus => "cylindrical-torus",
            ScenarioKind::CylindricalVanishingMomentum => "cylindrical-vanishing-momentum",
        }
    }

    pub fn is_radial(self) -> bool {
        matches!(self, ScenarioKind::RadialGaussian | ScenarioKind::RadialShell)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "radial-gaussian" => ScenarioKind::RadialGaussian,
            "radial-shell" => ScenarioKind::RadialShell,
            "cylindrical-torus" => ScenarioKind::CylindricalTorus,
            "cylindrical-vanishing-momentum" => ScenarioKind::CylindricalVanishingMomentum,
            other => {
                return Err(Error::Configuration(format!("unknown scenario kind `{other}`")))
            }
        })
    }
}

/// Shape parameters shared by all presets. Unused fields are ignored by a
/// given kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioParams {
    /// Gaussian position width (radial-gaussian) or radial width of the
    /// shell / torus cross-section.
    pub width: f64,
    /// Shell radius, or major radius of the torus.
    pub radius: f64,
    /// Vertical width of the cylindrical presets.
    pub height: f64,
    /// Momentum variance `sigma_v^2`.
    pub temperature: f64,
    /// Mean azimuthal momentum of the torus.
    pub drift: f64,
    /// Vanishing order `p` of the density at zero planar angular momentum.
    pub vanishing_order: f64,
    /// Momentum truncation radius.
    pub v_max: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            width: 1.0,
            radius: 1.5,
            height: 0.3,
            temperature: 0.25,
            drift: 0.0,
            vanishing_order: 14.0,
            v_max: 50.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub params: ScenarioParams,
}

/// Position of the sampler's random stream after sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    /// ChaCha word position, stored as a decimal string in JSON.
    #[serde(with = "u128_string")]
    pub word_pos: u128,
}

impl RngState {
    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

mod u128_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (TAU).sqrt()
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// `P(|v| <= r)` for `v ~ N(mean, sigma^2 I_3)` with `|mean| = a`.
pub fn gaussian_ball_probability(r: f64, a: f64, sigma: f64) -> f64 {
    let a = a.abs();
    if a < 1e-12 * sigma {
        let z = r / sigma;
        libm::erf(z / SQRT_2) - (2.0 / PI).sqrt() * z * (-0.5 * z * z).exp()
    } else {
        std_normal_cdf((r - a) / sigma) - std_normal_cdf((-r - a) / sigma)
            - sigma / a * (std_normal_pdf((r - a) / sigma) - std_normal_pdf((r + a) / sigma))
    }
}

/// Normalizing constant of `|u|^p exp(-u^2 / 2 sigma^2)` over the real line.
fn power_gaussian_norm(p: f64, sigma: f64) -> f64 {
    let k = 0.5 * (p + 1.0);
    sigma.powf(p + 1.0) * 2f64.powf(k) * libm::tgamma(k)
}

impl Scenario {
    pub fn new(kind: ScenarioKind, params: ScenarioParams) -> Self {
        Scenario { kind, params }
    }

    pub fn preset(kind: ScenarioKind) -> Self {
        let mut params = ScenarioParams::default();
        match kind {
            ScenarioKind::RadialGaussian => {}
            ScenarioKind::RadialShell => {
                params.radius = 1.0;
                params.width = 0.2;
            }
            ScenarioKind::CylindricalTorus | ScenarioKind::CylindricalVanishingMomentum => {
                params.width = 0.3;
            }
        }
        Scenario { kind, params }
    }

    fn sigma_v(&self) -> f64 {
        self.params.temperature.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let positive = [
            ("width", p.width),
            ("temperature", p.temperature),
            ("v_max", p.v_max),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(validation(format!("scenario `{name}` must be positive, got {value}")));
            }
        }
        if !self.kind.is_radial() && !(p.height.is_finite() && p.height > 0.0) {
            return Err(validation("scenario `height` must be positive"));
        }
        if self.kind != ScenarioKind::RadialGaussian && !(p.radius.is_finite() && p.radius >= 0.0) {
            return Err(validation("scenario `radius` must be nonnegative"));
        }
        if !p.drift.is_finite() {
            return Err(validation("scenario `drift` must be finite"));
        }
        if self.kind == ScenarioKind::CylindricalVanishingMomentum {
            if !(p.vanishing_order.is_finite() && p.vanishing_order > 0.0) {
                return Err(validation("scenario `vanishing_order` must be positive"));
            }
            // The truncation normalization of this preset is taken as 1, so
            // the discarded tail must be negligible.
            if self.vanishing_tail_bound() > 1e-15 {
                return Err(validation(format!(
                    "v_max = {} truncates a non-negligible part of the vanishing-momentum law",
                    p.v_max
                )));
            }
        }
        Ok(())
    }

    /// Upper bound on the untruncated mass with `|v| > v_max` for the
    /// vanishing-momentum preset (union bound over the three local
    /// components, Chernoff bound for the power-Gaussian one).
    fn vanishing_tail_bound(&self) -> f64 {
        let sigma = self.sigma_v();
        let cut = self.params.v_max / 3f64.sqrt();
        let gauss = 2.0 * std_normal_cdf(-cut / sigma);
        let k = 0.5 * (self.params.vanishing_order + 1.0);
        let g = cut * cut / (2.0 * sigma * sigma);
        let gamma_tail = if g > k { ((g / k).ln() * k + k - g).exp() } else { 1.0 };
        2.0 * gauss + gamma_tail
    }

    /// Probability mass kept by the `|v| <= v_max` truncation.
    fn velocity_normalization(&self) -> f64 {
        let sigma = self.sigma_v();
        match self.kind {
            ScenarioKind::RadialGaussian | ScenarioKind::RadialShell => {
                gaussian_ball_probability(self.params.v_max, 0.0, sigma)
            }
            ScenarioKind::CylindricalTorus => {
                gaussian_ball_probability(self.params.v_max, self.params.drift, sigma)
            }
            ScenarioKind::CylindricalVanishingMomentum => 1.0,
        }
    }

    /// Density of the radial coordinate (3D radius for radial-shell, planar
    /// radius for the cylindrical presets): a normal law conditioned on r > 0.
    fn radial_law(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let (r0, w) = (self.params.radius, self.params.width);
        std_normal_pdf((r - r0) / w) / (w * std_normal_cdf(r0 / w))
    }

    /// Closed-form phase-space density for the given total mass.
    pub fn density(&self, x: Vec3, v: Vec3, total_mass: f64) -> f64 {
        let p = &self.params;
        let sigma = self.sigma_v();
        if v.norm() > p.v_max {
            return 0.0;
        }
        let gauss3 = |u: Vec3, s: f64| (-0.5 * u.norm_sq() / (s * s)).exp() / (TAU * s * s).powf(1.5);
        let gauss1 = |u: f64, s: f64| std_normal_pdf(u / s) / s;
        let zv = self.velocity_normalization();
        let value = match self.kind {
            ScenarioKind::RadialGaussian => gauss3(x, p.width) * gauss3(v, sigma) / zv,
            ScenarioKind::RadialShell => {
                let r = x.norm();
                if r == 0.0 {
                    0.0
                } else {
                    self.radial_law(r) / (2.0 * TAU * r * r) * gauss3(v, sigma) / zv
                }
            }
            ScenarioKind::CylindricalTorus | ScenarioKind::CylindricalVanishingMomentum => {
                let r = x.planar_norm();
                if r == 0.0 {
                    return 0.0;
                }
                let pos = self.radial_law(r) / (TAU * r) * gauss1(x.z(), p.height);
                let (er, ephi) = (
                    Vec3::new(x.x() / r, x.y() / r, 0.0),
                    Vec3::new(-x.y() / r, x.x() / r, 0.0),
                );
                let (vr, vphi, vz) = (v.dot(er), v.dot(ephi), v.z());
                let vel = if self.kind == ScenarioKind::CylindricalTorus {
                    gauss1(vr, sigma) * gauss1(vphi - p.drift, sigma) * gauss1(vz, sigma) / zv
                } else {
                    let q = p.vanishing_order;
                    gauss1(vr, sigma)
                        * gauss1(vz, sigma)
                        * vphi.abs().powf(q)
                        * (-0.5 * vphi * vphi / (sigma * sigma)).exp()
                        / power_gaussian_norm(q, sigma)
                };
                pos * vel
            }
        };
        total_mass * value
    }

    fn draw_radius(&self, rng: &mut ChaCha8Rng) -> f64 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            let r = self.params.radius + self.params.width * z;
            if r > 0.0 {
                return r;
            }
        }
    }

    fn draw_direction(rng: &mut ChaCha8Rng) -> Vec3 {
        loop {
            let u = Vec3::new(
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            );
            let n = u.norm();
            if n > 1e-12 {
                return u / n;
            }
        }
    }

    fn draw_point(&self, rng: &mut ChaCha8Rng, gamma: Option<&Gamma<f64>>) -> (Vec3, Vec3) {
        let p = &self.params;
        let sigma = self.sigma_v();
        loop {
            let gaussian3 = |rng: &mut ChaCha8Rng, s: f64| {
                Vec3::new(
                    s * rng.sample::<f64, _>(StandardNormal),
                    s * rng.sample::<f64, _>(StandardNormal),
                    s * rng.sample::<f64, _>(StandardNormal),
                )
            };
            let (x, v) = match self.kind {
                ScenarioKind::RadialGaussian => (gaussian3(rng, p.width), gaussian3(rng, sigma)),
                ScenarioKind::RadialShell => {
                    let r = self.draw_radius(rng);
                    let x = Self::draw_direction(rng) * r;
                    (x, gaussian3(rng, sigma))
                }
                ScenarioKind::CylindricalTorus | ScenarioKind::CylindricalVanishingMomentum => {
                    let r = self.draw_radius(rng);
                    let angle = rng.random::<f64>() * TAU;
                    let (s, c) = angle.sin_cos();
                    let z = p.height * rng.sample::<f64, _>(StandardNormal);
                    let x = Vec3::new(r * c, r * s, z);
                    let vr = sigma * rng.sample::<f64, _>(StandardNormal);
                    let vz = sigma * rng.sample::<f64, _>(StandardNormal);
                    let vphi = match gamma {
                        None => p.drift + sigma * rng.sample::<f64, _>(StandardNormal),
                        Some(g) => {
                            let mag = sigma * (2.0 * g.sample(rng)).sqrt();
                            if rng.random::<bool>() {
                                mag
                            } else {
                                -mag
                            }
                        }
                    };
                    let v = Vec3::new(vr * c - vphi * s, vr * s + vphi * c, vz);
                    (x, v)
                }
            };
            if v.norm() <= p.v_max {
                return (x, v);
            }
        }
    }
}

/// Draw `n` particles from the scenario law with total weight `total_mass`.
pub fn sample_initial_ensemble(
    scenario: &Scenario,
    n: usize,
    total_mass: f64,
    seed: u64,
) -> Result<(Ensemble, RngState)> {
    if n == 0 {
        return Err(validation("particle count must be at least 1"));
    }
    if !(total_mass.is_finite() && total_mass > 0.0) {
        return Err(validation(format!("total mass must be positive, got {total_mass}")));
    }
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = match scenario.kind {
        ScenarioKind::CylindricalVanishingMomentum => Some(
            Gamma::new(0.5 * (scenario.params.vanishing_order + 1.0), 1.0)
                .map_err(|e| validation(e.to_string()))?,
        ),
        _ => None,
    };
    let w = total_mass / n as f64;
    let mut particles = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, v) = scenario.draw_point(&mut rng, gamma.as_ref());
        let f0 = scenario.density(x, v, total_mass);
        particles.push(Particle::new(x, v, w, f0));
    }
    // Uniform weights are rounded; put the rounding residue on the last
    // particle so the total equals `total_mass` as closely as f64 allows.
    let partial: f64 = particles[..n - 1].iter().map(|p| p.w).sum();
    particles[n - 1].w = total_mass - partial;
    let state = RngState {
        seed,
        word_pos: rng.get_word_pos(),
    };
    Ok((Ensemble::new(particles, 0.0, seed), state))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_kind_is_configuration_error() {
        let err = "radial-plummer".parse::<ScenarioKind>().unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
        for kind in [
            ScenarioKind::RadialGaussian,
            ScenarioKind::RadialShell,
            ScenarioKind::CylindricalTorus,
            ScenarioKind::CylindricalVanishingMomentum,
        ] {
            assert_eq!(kind.name().parse::<ScenarioKind>().unwrap(), kind);
        }
    }

    #[test]
    fn rejects_bad_counts_and_masses() {
        let s = Scenario::preset(ScenarioKind::RadialGaussian);
        assert!(matches!(sample_initial_ensemble(&s, 0, 1.0, 1), Err(Error::Validation(_))));
        assert!(matches!(sample_initial_ensemble(&s, 10, 0.0, 1), Err(Error::Validation(_))));
        assert!(matches!(sample_initial_ensemble(&s, 10, -2.0, 1), Err(Error::Validation(_))));
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = Scenario::preset(ScenarioKind::RadialGaussian);
        let (a, sa) = sample_initial_ensemble(&s, 1000, 1.0, 7).unwrap();
        let (b, sb) = sample_initial_ensemble(&s, 1000, 1.0, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        let (c, _) = sample_initial_ensemble(&s, 1000, 1.0, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn total_mass_is_exact() {
        for kind in [ScenarioKind::RadialShell, ScenarioKind::CylindricalVanishingMomentum] {
            let s = Scenario::preset(kind);
            let (e, _) = sample_initial_ensemble(&s, 10_000, 2.0, 3).unwrap();
            let total: f64 = e.particles.iter().map(|p| p.w).sum();
            assert_eq!(total, 2.0);
        }
    }

    #[test]
    fn ball_probability_limits() {
        // Centered limit agrees with the noncentral formula for tiny offsets.
        let a = gaussian_ball_probability(1.3, 0.0, 0.7);
        let b = gaussian_ball_probability(1.3, 1e-6, 0.7);
        assert!((a - b).abs() < 1e-9);
        assert!((gaussian_ball_probability(50.0, 0.3, 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn restored_rng_continues_stream() {
        let s = Scenario::preset(ScenarioKind::RadialGaussian);
        let (_, state) = sample_initial_ensemble(&s, 10, 1.0, 5).unwrap();
        let mut a = state.restore();
        let mut b = state.restore();
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn density_positive_on_samples() {
        for kind in [
            ScenarioKind::RadialGaussian,
            ScenarioKind::RadialShell,
            ScenarioKind::CylindricalTorus,
            ScenarioKind::CylindricalVanishingMomentum,
        ] {
            let s = Scenario::preset(kind);
            let (e, _) = sample_initial_ensemble(&s, 200, 1.0, 11).unwrap();
            assert!(e.particles.iter().all(|p| p.f0 > 0.0 && p.f0.is_finite()), "{kind}");
        }
    }
}

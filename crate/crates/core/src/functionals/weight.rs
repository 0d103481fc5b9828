//! The singular weight `omega_mu` and its planar gradient.

use serde::{Deserialize, Serialize};

use super::cutoff::{phi, phi_prime, pow2};
use crate::error::{validation, Result};
use crate::vec3::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub mu: Sign,
    pub mt: i32,
    pub eps_star: f64,
}

impl WeightParams {
    pub fn new(mu: Sign, mt: i32, eps_star: f64) -> Result<Self> {
        let p = WeightParams { mu, mt, eps_star };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_star > 0.0 && self.eps_star < 0.5) {
            return Err(validation(format!("eps_star must lie in (0, 1/2), got {}", self.eps_star)));
        }
        if self.mt < 0 || self.mt > 100 {
            return Err(validation(format!("Mt must lie in [0, 100], got {}", self.mt)));
        }
        Ok(())
    }
}

/// Intermediate quantities of the weight at one phase point.
struct Parts {
    a: f64,
    b: f64,
    s: f64,
    ell: f64,
    c: f64,
    g: f64,
    outer: f64,
}

fn parts(xp: [f64; 2], vp: [f64; 2], p: &WeightParams) -> Option<Parts> {
    let a = xp[0].hypot(xp[1]);
    let b = vp[0].hypot(vp[1]);
    if a == 0.0 || b == 0.0 {
        return None;
    }
    let mu = p.mu.value();
    let s = xp[0] * vp[0] + xp[1] * vp[1];
    let ell = xp[0] * vp[1] - xp[1] * vp[0];
    let c = s / (a * b);
    let k = pow2(10 * p.mt);
    let g = mu * a * b * s * phi(k * mu * c) + ell * ell;
    let outer = phi(mu * (c + 0.5));
    Some(Parts { a, b, s, ell, c, g, outer })
}

/// Weight value and its gradient in the planar position `(x1, x2)`.
///
/// The inner cutoff is `phi_{-10 Mt}`, i.e. `phi(2^{10 Mt} y)`. When
/// `|x_planar| |v_planar| = 0` the weight and gradient are 0.
pub fn omega_weight(x: Vec3, v: Vec3, params: &WeightParams) -> Result<(f64, [f64; 2])> {
    if !x.is_finite() || !v.is_finite() {
        return Err(validation("omega_weight needs finite inputs"));
    }
    params.validate()?;
    let xp = [x.x(), x.y()];
    let vp = [v.x(), v.y()];
    let Some(q) = parts(xp, vp, params) else {
        return Ok((0.0, [0.0; 2]));
    };
    let mu = params.mu.value();
    let eps = params.eps_star;
    let k = pow2(10 * params.mt);
    let Parts { a, b, s, ell, c, g, outer } = q;
    let value = if g > 0.0 { g.powf(eps) * outer } else { 0.0 };

    let inner = phi(k * mu * c);
    let inner_d = k * phi_prime(k * mu * c);
    let outer_d = phi_prime(mu * (c + 0.5));
    let mut grad = [0.0; 2];
    for i in 0..2 {
        let da = xp[i] / a;
        let dc = vp[i] / (a * b) - s * xp[i] / (a * a * a * b);
        let dell = if i == 0 { vp[1] } else { -vp[0] };
        let dg = mu * b * (da * s * inner + a * vp[i] * inner + a * s * inner_d * mu * dc)
            + 2.0 * ell * dell;
        let mut d = 0.0;
        if g > 0.0 {
            if outer != 0.0 {
                d += eps * g.powf(eps - 1.0) * dg * outer;
            }
            if outer_d != 0.0 {
                d += g.powf(eps) * outer_d * mu * dc;
            }
        }
        grad[i] = d;
    }
    Ok((value, grad))
}

/// `mu v_planar . grad_x omega_mu`.
pub fn weight_directional_derivative(x: Vec3, v: Vec3, params: &WeightParams) -> Result<f64> {
    let (_, g) = omega_weight(x, v, params)?;
    Ok(params.mu.value() * (v.x() * g[0] + v.y() * g[1]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub samples: usize,
    pub min_derivative: f64,
    pub negative_count: usize,
    /// Smallest ratio of the derivative to
    /// `|v|^{1+2 eps} / |x|^{1-2 eps} * phi_{-10 Mt}(mu c)` over samples where
    /// both the inner and the outer cutoff are nonzero.
    pub lower_bound_constant: Option<f64>,
    /// Samples with an active inner cutoff whose outer cutoff vanishes.
    pub outer_zero_with_inner_active: usize,
    pub pass: bool,
}

pub const POSITIVITY_TOLERANCE: f64 = -1e-10;

/// Evaluate `mu v . grad omega` on every sample pair of planar-nonzero points.
pub fn weight_positivity_check(samples: &[(Vec3, Vec3)], params: &WeightParams) -> Result<PositivityReport> {
    params.validate()?;
    let mu = params.mu.value();
    let eps = params.eps_star;
    let k = pow2(10 * params.mt);
    let mut min_derivative = f64::INFINITY;
    let mut negative_count = 0;
    let mut constant: Option<f64> = None;
    let mut outer_zero = 0;
    for &(x, v) in samples {
        let d = weight_directional_derivative(x, v, params)?;
        min_derivative = min_derivative.min(d);
        if d < POSITIVITY_TOLERANCE {
            negative_count += 1;
        }
        let a = x.planar_norm();
        let b = v.planar_norm();
        if a == 0.0 || b == 0.0 {
            continue;
        }
        let c = (x.x() * v.x() + x.y() * v.y()) / (a * b);
        let inner = phi(k * mu * c);
        if inner > 0.0 {
            if phi(mu * (c + 0.5)) == 0.0 {
                outer_zero += 1;
                continue;
            }
            let shape = b.powf(1.0 + 2.0 * eps) / a.powf(1.0 - 2.0 * eps) * inner;
            let r = d / shape;
            constant = Some(constant.map_or(r, |m: f64| m.min(r)));
        }
    }
    if samples.is_empty() {
        min_derivative = 0.0;
    }
    Ok(PositivityReport {
        samples: samples.len(),
        min_derivative,
        negative_count,
        lower_bound_constant: constant,
        outer_zero_with_inner_active: outer_zero,
        pass: negative_count == 0,
    })
}

//! Explicit cutoff profiles.

/// Piecewise cubic cutoff: 0 below 0, `x^3` on `[0, 1)`, `2 + (x - 2)^3` on
/// `[1, 2]`, 2 above.
#[inline]
pub fn phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < 1.0 {
        x * x * x
    } else if x <= 2.0 {
        let d = x - 2.0;
        2.0 + d * d * d
    } else {
        2.0
    }
}

#[inline]
pub fn phi_prime(x: f64) -> f64 {
    if x <= 0.0 || x >= 2.0 {
        0.0
    } else if x < 1.0 {
        3.0 * x * x
    } else {
        let d = x - 2.0;
        3.0 * d * d
    }
}

/// Exact power of two `2^e`, including subnormal and overflowing ranges.
#[inline]
pub fn pow2(e: i32) -> f64 {
    libm::ldexp(1.0, e)
}

/// `phi_l(x) = phi(2^{-l} x)`.
#[inline]
pub fn cutoff_phi(x: f64, l: i32) -> f64 {
    phi(libm::ldexp(x, -l))
}

/// Derivative of `phi_l`: `2^{-l} phi'(2^{-l} x)`.
#[inline]
pub fn cutoff_phi_prime(x: f64, l: i32) -> f64 {
    libm::ldexp(phi_prime(libm::ldexp(x, -l)), -l)
}

/// Plateau edge of the smooth bump.
pub const PSI_PLATEAU: f64 = 1.25;
/// Support edge of the smooth bump.
pub const PSI_SUPPORT: f64 = 1.5;

/// Even `C^2` bump: 1 on `[-5/4, 5/4]`, 0 outside `(-3/2, 3/2)`, with a
/// quintic smootherstep in between.
#[inline]
pub fn psi_tilde(x: f64) -> f64 {
    let a = x.abs();
    if a <= PSI_PLATEAU {
        1.0
    } else if a >= PSI_SUPPORT {
        0.0
    } else {
        let t = (PSI_SUPPORT - a) / (PSI_SUPPORT - PSI_PLATEAU);
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

//! Scalar special functions: Gaussian tail, complementary error function,
//! the exponential integral and the exponentially modified Gaussian density.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Euler–Mascheroni constant (20 significant digits).
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_286_95;

/// Below this argument `E1` uses its power series, above it a continued fraction.
const E1_SERIES_SWITCH: f64 = 1.0;

/// `erfcx` switches from `exp(x²)·erfc(x)` to a continued fraction here.
const ERFCX_CF_SWITCH: f64 = 5.0;

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Gaussian tail probability `Q(x) = ½·erfc(x/√2)`.
pub fn q_func(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
///
/// Overflows for `x < -26`; use [`ln_erfc`] there.
pub fn erfcx(x: f64) -> f64 {
    if x < ERFCX_CF_SWITCH {
        (x * x).exp() * libm::erfc(x)
    } else {
        erfcx_cf(x)
    }
}

/// `ln erfc(x)`, finite for every finite `x`.
pub fn ln_erfc(x: f64) -> f64 {
    if x < ERFCX_CF_SWITCH {
        libm::erfc(x).ln()
    } else {
        erfcx_cf(x).ln() - x * x
    }
}

// erfcx(x) = (1/√π) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), modified Lentz.
fn erfcx_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500 {
        let a = 0.5 * n as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI / f
}

/// Exponential integral `E1(x) = ∫ₓ^∞ e^(−t)/t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    check_e1_domain(x)?;
    if x <= E1_SERIES_SWITCH {
        Ok(e1_series(x))
    } else {
        Ok(e1_cf_scaled(x) * (-x).exp())
    }
}

/// `exp(x)·E1(x)` without intermediate overflow or underflow.
pub fn exp_e1_scaled(x: f64) -> Result<f64> {
    check_e1_domain(x)?;
    if x <= E1_SERIES_SWITCH {
        Ok(x.exp() * e1_series(x))
    } else {
        Ok(e1_cf_scaled(x))
    }
}

fn check_e1_domain(x: f64) -> Result<()> {
    if x.is_nan() || x <= 0.0 {
        return Err(domain(format!("E1 requires x > 0, got {x}")));
    }
    Ok(())
}

// −γ − ln x − Σ (−x)ⁿ/(n·n!)
fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0; // (−x)ⁿ/n!
    for n in 1..200 {
        term *= -x / n as f64;
        let contrib = term / n as f64;
        sum += contrib;
        if contrib.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

// exp(x)·E1(x) = 1/(x+1− 1/(x+3− 4/(x+5− ...))), modified Lentz.
fn e1_cf_scaled(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Parameters of the exponentially modified Gaussian: an exponential with
/// mean `scale` plus independent Gaussian noise of standard deviation `noise_sd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmgParams {
    scale: f64,
    noise_sd: f64,
}

impl EmgParams {
    pub fn new(scale: f64, noise_sd: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) || !(noise_sd > 0.0 && noise_sd.is_finite()) {
            return Err(domain(format!(
                "EMG needs scale > 0 and noise_sd > 0, got scale={scale}, noise_sd={noise_sd}"
            )));
        }
        Ok(Self { scale, noise_sd })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    /// Log-density, evaluated without forming the overflowing exponential factor.
    pub fn ln_pdf(&self, y: f64) -> f64 {
        let s = self.scale;
        let sd = self.noise_sd;
        let var_over_s = sd * sd / s;
        let t = (var_over_s - y) / (SQRT_2 * sd);
        if t > 0.0 {
            // Exponent and erfc factor cancel analytically; avoids losing digits when s ≪ σ.
            -(2.0 * s).ln() - y * y / (2.0 * sd * sd) + erfcx(t).ln()
        } else {
            -(2.0 * s).ln() + (var_over_s - 2.0 * y) / (2.0 * s) + ln_erfc(t)
        }
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.ln_pdf(y).exp()
    }

    /// Differential entropy of the standard Gaussian with this noise, in bits.
    pub fn noise_entropy_bits(&self) -> f64 {
        0.5 * (2.0 * PI * std::f64::consts::E * self.noise_sd * self.noise_sd).ln() / LN_2
    }
}

/// Density of `s·E + N`, `E ~ Exp(1)`, `N ~ N(0, σ²)`.
pub fn emg_pdf(p: &EmgParams, y: f64) -> f64 {
    p.pdf(y)
}

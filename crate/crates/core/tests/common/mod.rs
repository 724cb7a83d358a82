//! Independent numerical oracles for the integration tests.
//!
//! Nothing here calls the crate's own special functions or quadrature.

#![allow(dead_code)]

use std::f64::consts::{LN_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Adaptive Simpson with Richardson correction; `tol` is absolute.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Simpson over consecutive breakpoints.
pub fn simpson_pieces<F: Fn(f64) -> f64>(f: &F, points: &[f64], tol: f64) -> f64 {
    points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| simpson(f, w[0], w[1], tol))
        .sum()
}

/// `E1(x) = e^{-x} ∫₀^∞ exp(−x(eᵘ − 1)) du`, integrated to relative `1e-13`.
pub fn e1_oracle(x: f64) -> f64 {
    let g = |u: f64| (-x * u.exp_m1()).exp();
    let upper = (1.0 + 745.0 / x).ln();
    // The integrand is O(1) so the tolerance is effectively relative.
    let mut pts: Vec<f64> = (0..=16).map(|i| upper * i as f64 / 16.0).collect();
    let knee = (1.0 + 1.0 / x).ln();
    pts.push(knee);
    pts.sort_by(f64::total_cmp);
    let integral = simpson_pieces(&g, &pts, 1e-15 * knee.max(1e-3));
    (-x).exp() * integral
}

/// `Q(x) = φ(x) ∫₀^∞ exp(−xs − s²/2) ds` for `x ≥ 0`.
pub fn q_oracle(x: f64) -> f64 {
    assert!(x >= 0.0);
    let g = |s: f64| (-x * s - 0.5 * s * s).exp();
    let upper = if x > 0.0 { (745.0 / x).min(40.0) } else { 40.0 };
    let scale = if x > 1.0 { 1.0 / x } else { 1.0 };
    let pts: Vec<f64> = (0..=32).map(|i| upper * i as f64 / 32.0).collect();
    let phi = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    phi * simpson_pieces(&g, &pts, 1e-16 * scale)
}

/// EMG density by direct convolution of `Exp(mean s)` with `N(0, σ²)`.
pub fn emg_oracle(s: f64, sd: f64, y: f64) -> f64 {
    let g = |t: f64| (-t / s).exp() / s * (-(y - t).powi(2) / (2.0 * sd * sd)).exp() / ((2.0 * PI).sqrt() * sd);
    let lo = (y - 40.0 * sd).max(0.0);
    let hi = (y + 40.0 * sd).min(750.0 * s).max(lo);
    if hi <= lo {
        return 0.0;
    }
    let mut pts: Vec<f64> = (0..=64).map(|i| lo + (hi - lo) * i as f64 / 64.0).collect();
    if y > lo && y < hi {
        pts.push(y);
        pts.sort_by(f64::total_cmp);
    }
    simpson_pieces(&g, &pts, 1e-16)
}

/// `e^{-z} I₀(z)` from the power series (small z) or the asymptotic series.
pub fn bessel_i0e(z: f64) -> f64 {
    if z < 20.0 {
        let q = 0.25 * z * z;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= q / (k as f64 * k as f64);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum * (-z).exp()
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let odd = (2 * k - 1) as f64;
            term *= odd * odd / (8.0 * k as f64 * z);
            sum += term;
            if term < 1e-17 {
                break;
            }
        }
        sum / (2.0 * PI * z).sqrt()
    }
}

/// Exact joint density of the splitting channel outputs for `x ~ CN(0,1)`.
///
/// `a = √(Θ₁P)`, `b = √Θ₂·P`. Given `y1`, `x ~ CN(m, v)`, so `|x|²` is a
/// scaled noncentral χ² variable; `y2` adds Gaussian noise to `b|x|²`.
pub struct SplitDensity {
    pub a: f64,
    pub b: f64,
    pub s1: f64,
    pub s2: f64,
}

impl SplitDensity {
    pub fn ln_pdf(&self, y1: (f64, f64), y2: f64) -> f64 {
        let c = self.a * self.a + self.s1;
        let r2 = y1.0 * y1.0 + y1.1 * y1.1;
        let ln_f1 = -(PI * c).ln() - r2 / c;
        let v = self.s1 / c;
        let mm = self.a * r2.sqrt() / c;
        let sd2 = self.s2.sqrt();
        let p_t = |t: f64| {
            let z = 2.0 * mm * t.sqrt() / v;
            ((-(t.sqrt() - mm).powi(2) / v).exp() * bessel_i0e(z)) / v
        };
        let g = |t: f64| p_t(t) * (-(y2 - self.b * t).powi(2) / (2.0 * self.s2)).exp() / ((2.0 * PI).sqrt() * sd2);
        let t_hi = (mm + 12.0 * v.sqrt()).powi(2);
        let centre = y2 / self.b;
        let half = 12.0 * sd2 / self.b;
        let lo = (centre - half).max(0.0);
        let hi = (centre + half).min(t_hi);
        if hi <= lo {
            return f64::NEG_INFINITY;
        }
        let mut pts: Vec<f64> = (0..=24).map(|i| lo + (hi - lo) * i as f64 / 24.0).collect();
        for p in [mm * mm, centre] {
            if p > lo && p < hi {
                pts.push(p);
            }
        }
        pts.sort_by(f64::total_cmp);
        ln_f1 + simpson_pieces(&g, &pts, 1e-12).ln()
    }

    /// Monte-Carlo estimate of `I(X; Y1, Y2)` in bits and its standard error.
    pub fn mutual_information(&self, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let h = (0.5f64).sqrt();
        let nsd1 = (self.s1 / 2.0).sqrt();
        for _ in 0..n {
            let xr: f64 = h * rng.sample::<f64, _>(StandardNormal);
            let xi: f64 = h * rng.sample::<f64, _>(StandardNormal);
            let y1 = (
                self.a * xr + nsd1 * rng.sample::<f64, _>(StandardNormal),
                self.a * xi + nsd1 * rng.sample::<f64, _>(StandardNormal),
            );
            let y2 = self.b * (xr * xr + xi * xi) + self.s2.sqrt() * rng.sample::<f64, _>(StandardNormal);
            let l = -self.ln_pdf(y1, y2) / LN_2;
            sum += l;
            sum2 += l * l;
        }
        let nf = n as f64;
        let mean = sum / nf;
        let se = ((sum2 / nf - mean * mean) / nf).sqrt();
        let noise = (PI * std::f64::consts::E * self.s1).log2() + 0.5 * (2.0 * PI * std::f64::consts::E * self.s2).log2();
        (mean - noise, se)
    }
}

/// ML decision by direct evaluation of the pairwise half-space system:
/// symbol `i` wins iff it is strictly preferred to every lower index and
/// weakly preferred to every higher index.
pub fn halfspace_decision(points: &[[f64; 3]], s1: f64, s2: f64, v: [f64; 3]) -> usize {
    let lhs_rhs = |i: usize, j: usize| {
        let (pi, pj) = (points[i], points[j]);
        let lhs = (pj[0] - pi[0]) / s1 * v[0] + (pj[1] - pi[1]) / s1 * v[1] + (pj[2] - pi[2]) / (2.0 * s2) * v[2];
        let rhs = (pj[0] * pj[0] + pj[1] * pj[1] - pi[0] * pi[0] - pi[1] * pi[1]) / (2.0 * s1)
            + (pj[2] * pj[2] - pi[2] * pi[2]) / (4.0 * s2);
        (lhs, rhs)
    };
    let winners: Vec<usize> = (0..points.len())
        .filter(|&i| {
            (0..points.len()).filter(|&j| j != i).all(|j| {
                let (l, r) = lhs_rhs(i, j);
                if j < i {
                    l < r
                } else {
                    l <= r
                }
            })
        })
        .collect();
    assert_eq!(winners.len(), 1, "half-space system must select exactly one symbol");
    winners[0]
}

//! Practical modulation over the splitting channel: constellations, their
//! image in I-Q-P space, maximum-likelihood detection and symbol error rates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{LinkBudget, ThetaPair};
use crate::error::{contract, Error, Result};

mod ser;

pub use ser::{
    asymptotic_ser_gain, ser_conventional_exact, ser_high_snr, ser_importance_sampling, ser_joint_processing_gain,
    ser_monte_carlo, ser_monte_carlo_theta, ser_qam_coherent_classical, wilson_halfwidth, SerEstimate, SerGain,
    SerMethod, SerPoint, SerResult, MIN_MC_TRIALS, WILSON_Z,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Pam,
    Qam,
    Im,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Pam => "pam",
            Scheme::Qam => "qam",
            Scheme::Im => "im",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pam" => Ok(Scheme::Pam),
            "qam" => Ok(Scheme::Qam),
            "im" => Ok(Scheme::Im),
            other => Err(contract(format!("unknown scheme '{other}' (expected pam, qam or im)"))),
        }
    }
}

/// An `M`-point constellation on the I-Q plane, before power normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    scheme: Scheme,
    m: usize,
    symbols: Vec<[f64; 2]>,
    k1: f64,
}

/// Builds the constellation for `scheme` of order `m`.
///
/// - PAM: `x ∈ {1, 3, …, M−1, −1, −3, …, −(M−1)}`, `M` even.
/// - QAM: the `√M × √M` odd-integer grid, `√M` even, row by row from the most negative `y`.
/// - IM: `xᵢ = √(2(i−1))`, `i = 1..M`.
pub fn make_constellation(scheme: Scheme, m: usize) -> Result<Constellation> {
    let symbols: Vec<[f64; 2]> = match scheme {
        Scheme::Pam => {
            if m < 2 || m % 2 != 0 {
                return Err(contract(format!("PAM needs an even order ≥ 2, got {m}")));
            }
            let half = m / 2;
            (0..half)
                .map(|i| [(2 * i + 1) as f64, 0.0])
                .chain((0..half).map(|i| [-((2 * i + 1) as f64), 0.0]))
                .collect()
        }
        Scheme::Qam => {
            let side = (m as f64).sqrt().round() as usize;
            if side < 2 || side * side != m || side % 2 != 0 {
                return Err(contract(format!(
                    "QAM needs M to be the square of an even integer, got {m}"
                )));
            }
            let coord = |i: usize| (2 * i) as f64 - (side - 1) as f64;
            (0..m).map(|i| [coord(i % side), coord(i / side)]).collect()
        }
        Scheme::Im => {
            if m < 2 {
                return Err(contract(format!("IM needs order ≥ 2, got {m}")));
            }
            (0..m).map(|i| [(2.0 * i as f64).sqrt(), 0.0]).collect()
        }
    };
    let mf = m as f64;
    let k1 = match scheme {
        Scheme::Pam => (3.0 / (mf * mf - 1.0)).sqrt(),
        Scheme::Qam => (3.0 / (2.0 * (mf - 1.0))).sqrt(),
        Scheme::Im => (1.0 / (mf - 1.0)).sqrt(),
    };
    Ok(Constellation {
        scheme,
        m,
        symbols,
        k1,
    })
}

impl Constellation {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn symbols(&self) -> &[[f64; 2]] {
        &self.symbols
    }

    /// Amplitude normalization giving unit average symbol power.
    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k1 * self.k1
    }

    /// `(k₁²/M)·Σ(xᵢ² + yᵢ²)`.
    pub fn mean_power(&self) -> f64 {
        self.k2() * self.symbols.iter().map(|s| s[0] * s[0] + s[1] * s[1]).sum::<f64>() / self.m as f64
    }
}

/// Dimension in which the dominant (minimum-distance) symbol pairs are separated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DminDomain {
    Iq,
    Power,
}

/// Number of dominant symbol pairs `W` at high SNR, and where they are separated.
pub fn dominant_pairs(c: &Constellation) -> (usize, DminDomain) {
    match c.scheme {
        Scheme::Pam => (1, DminDomain::Iq),
        Scheme::Qam => (2 * (c.m as f64).sqrt().round() as usize, DminDomain::Iq),
        Scheme::Im => (c.m - 1, DminDomain::Power),
    }
}

/// The noiseless constellation in I-Q-P space for a given split and budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceivedConstellation {
    points: Vec<[f64; 3]>,
    theta: ThetaPair,
    budget: LinkBudget,
}

/// `x̆ = k₁√(Θ₁P)·x`, `y̆ = k₁√(Θ₁P)·y`, `z̆ = k₂√Θ₂·P·(x² + y²)`.
pub fn map_received(c: &Constellation, theta: ThetaPair, lb: &LinkBudget) -> ReceivedConstellation {
    let a = c.k1 * (theta.theta1 * lb.power()).sqrt();
    let b = c.k2() * theta.theta2.sqrt() * lb.power();
    let points = c
        .symbols
        .iter()
        .map(|&[x, y]| [a * x, a * y, b * (x * x + y * y)])
        .collect();
    ReceivedConstellation {
        points,
        theta,
        budget: *lb,
    }
}

impl ReceivedConstellation {
    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn theta(&self) -> ThetaPair {
        self.theta
    }

    pub fn budget(&self) -> &LinkBudget {
        &self.budget
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub(crate) fn weights(&self) -> (f64, f64) {
        (2.0 / self.budget.sigma1_sq(), 1.0 / self.budget.sigma2_sq())
    }

    /// Weighted distance `dⱼ(v)`.
    pub fn weighted_distance(&self, j: usize, v: [f64; 3]) -> f64 {
        let (w1, w2) = self.weights();
        weighted_distance(&self.points[j], w1, w2, v)
    }
}

#[inline]
fn weighted_distance(p: &[f64; 3], w1: f64, w2: f64, v: [f64; 3]) -> f64 {
    let dx = v[0] - p[0];
    let dy = v[1] - p[1];
    let dz = v[2] - p[2];
    w1 * (dx * dx + dy * dy) + w2 * dz * dz
}

/// Index of the minimum weighted distance; ties go to the lowest index.
#[inline]
pub(crate) fn nearest(points: &[[f64; 3]], w1: f64, w2: f64, v: [f64; 3]) -> usize {
    let mut best = 0;
    let mut best_d = weighted_distance(&points[0], w1, w2, v);
    for (j, p) in points.iter().enumerate().skip(1) {
        let d = weighted_distance(p, w1, w2, v);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

/// Maximum-likelihood symbol decision for the observation `v = (Re y1, Im y1, y2)`.
pub fn ml_detect(rc: &ReceivedConstellation, v: [f64; 3]) -> usize {
    let (w1, w2) = rc.weights();
    nearest(&rc.points, w1, w2, v)
}

/// `normal · v ≤ offset`: the side of the bisector between two symbols that
/// favours `symbol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub neighbor: usize,
    pub normal: [f64; 3],
    pub offset: f64,
}

impl HalfSpace {
    /// `offset − normal · v`; non-negative inside.
    pub fn slack(&self, v: [f64; 3]) -> f64 {
        self.offset - (self.normal[0] * v[0] + self.normal[1] * v[1] + self.normal[2] * v[2])
    }
}

/// Decision region of one symbol as an intersection of half-spaces.
///
/// Points on a shared boundary belong to the lower-indexed symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRegion {
    pub symbol: usize,
    pub point: [f64; 3],
    pub half_spaces: Vec<HalfSpace>,
}

/// Half-space description of every decision region (one plane per other symbol).
pub fn decision_regions(rc: &ReceivedConstellation) -> Vec<DecisionRegion> {
    let s1 = rc.budget.sigma1_sq();
    let s2 = rc.budget.sigma2_sq();
    let pts = &rc.points;
    (0..pts.len())
        .map(|i| {
            let pi = pts[i];
            let half_spaces = (0..pts.len())
                .filter(|&j| j != i)
                .map(|j| {
                    let pj = pts[j];
                    HalfSpace {
                        neighbor: j,
                        normal: [(pj[0] - pi[0]) / s1, (pj[1] - pi[1]) / s1, (pj[2] - pi[2]) / (2.0 * s2)],
                        offset: (pj[0] * pj[0] + pj[1] * pj[1] - pi[0] * pi[0] - pi[1] * pi[1]) / (2.0 * s1)
                            + (pj[2] * pj[2] - pi[2] * pi[2]) / (4.0 * s2),
                    }
                })
                .collect();
            DecisionRegion {
                symbol: i,
                point: pi,
                half_spaces,
            }
        })
        .collect()
}

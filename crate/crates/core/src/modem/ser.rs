//! Symbol error rate: Monte Carlo, importance sampling, closed forms and the
//! SER joint processing gain.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{map_received, nearest, Constellation, ReceivedConstellation, Scheme};
use crate::channel::{
    compute_theta, ChannelRealization, LinkBudget, SplitConfig, SplittingChannel, ThetaPair,
};
use crate::error::{contract, domain, Result};
use crate::seed;
use crate::special::q_func;
use crate::Complex64;

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

pub const MIN_MC_TRIALS: u64 = 10_000;

/// Fixed work split; results do not depend on the number of worker threads.
const MC_BATCHES: u64 = 64;
const IS_BATCHES_PER_SYMBOL: u64 = 8;

/// Proposal components whose shift energy exceeds the smallest by more than
/// this are dropped; their events are below `e^-25` of the dominant ones.
const IS_PRUNE_ENERGY: f64 = 50.0;

/// Monte-Carlo symbol error rate with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerResult {
    pub ser: f64,
    pub trials: u64,
    pub errors: u64,
    pub ci95_halfwidth: f64,
}

/// Half-width of the Wilson score interval for `errors` out of `trials`.
pub fn wilson_halfwidth(errors: u64, trials: u64, z: f64) -> f64 {
    if trials == 0 {
        return 0.5;
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Monte-Carlo SER through the splitting channel with ML detection.
pub fn ser_monte_carlo(
    c: &Constellation,
    ch: &ChannelRealization,
    cfg: &SplitConfig,
    lb: &LinkBudget,
    trials: u64,
    seed_value: u64,
) -> Result<SerResult> {
    ser_monte_carlo_theta(c, compute_theta(ch, cfg)?, lb, trials, seed_value)
}

pub fn ser_monte_carlo_theta(
    c: &Constellation,
    theta: ThetaPair,
    lb: &LinkBudget,
    trials: u64,
    seed_value: u64,
) -> Result<SerResult> {
    if trials < MIN_MC_TRIALS {
        return Err(contract(format!("need at least {MIN_MC_TRIALS} trials, got {trials}")));
    }
    let rc = map_received(c, theta, lb);
    let (w1, w2) = rc.weights();
    let chan = SplittingChannel::new(theta, lb);
    let inputs: Vec<Complex64> = c
        .symbols()
        .iter()
        .map(|&[x, y]| Complex64::new(c.k1() * x, c.k1() * y))
        .collect();
    let m = c.m();
    let sizes = seed::batch_sizes(trials, MC_BATCHES);
    let errors: u64 = sizes
        .par_iter()
        .enumerate()
        .map(|(b, &n)| {
            let mut rng = seed::stream_rng(seed_value, b as u64);
            let mut errs = 0u64;
            for _ in 0..n {
                let i = rng.random_range(0..m);
                let s = chan.sample(inputs[i], &mut rng);
                if nearest(rc.points(), w1, w2, [s.y1.re, s.y1.im, s.y2]) != i {
                    errs += 1;
                }
            }
            errs
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(SerResult {
        ser: errors as f64 / trials as f64,
        trials,
        errors,
        ci95_halfwidth: wilson_halfwidth(errors, trials, WILSON_Z),
    })
}

/// Importance-sampling SER estimate with a normal-approximation interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerEstimate {
    pub ser: f64,
    pub std_err: f64,
    pub ci95_halfwidth: f64,
    pub samples: u64,
}

/// SER by importance sampling, for error rates far below `1/trials`.
///
/// In whitened coordinates the noise is standard normal. For each transmitted
/// symbol the proposal is an equal-weight mixture of the noise itself and the
/// noise shifted to the midpoint towards each other symbol; each sample is
/// weighted by the likelihood ratio, so the estimate is unbiased.
pub fn ser_importance_sampling(
    c: &Constellation,
    theta: ThetaPair,
    lb: &LinkBudget,
    samples: u64,
    seed_value: u64,
) -> Result<SerEstimate> {
    let m = c.m() as u64;
    if samples < m * IS_BATCHES_PER_SYMBOL * 16 {
        return Err(contract(format!(
            "need at least {} importance samples, got {samples}",
            m * IS_BATCHES_PER_SYMBOL * 16
        )));
    }
    let rc = map_received(c, theta, lb);
    let white = whitened(&rc);
    let per_symbol = seed::batch_sizes(samples, m);

    let jobs: Vec<(usize, u64, u64)> = per_symbol
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| {
            seed::batch_sizes(n, IS_BATCHES_PER_SYMBOL)
                .into_iter()
                .enumerate()
                .map(move |(b, nb)| (i, b as u64, nb))
        })
        .collect();

    let sums: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(i, b, n)| {
            let shifts = proposal_shifts(&white, i);
            let mut rng = seed::stream_rng(seed_value, i as u64 * IS_BATCHES_PER_SYMBOL + b);
            let mut s = 0.0;
            let mut s2 = 0.0;
            let comps = shifts.len() + 1;
            for _ in 0..n {
                let mut noise = [
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                ];
                let pick = rng.random_range(0..comps);
                if pick > 0 {
                    let (mu, _) = &shifts[pick - 1];
                    for d in 0..3 {
                        noise[d] += mu[d];
                    }
                }
                let p = white[i];
                let v = [p[0] + noise[0], p[1] + noise[1], p[2] + noise[2]];
                if nearest(&white, 1.0, 1.0, v) != i {
                    let w = likelihood_ratio(&shifts, noise);
                    s += w;
                    s2 += w * w;
                }
            }
            (s, s2)
        })
        .collect();

    // Reduce in job order for reproducibility.
    let mut ser = 0.0;
    let mut var = 0.0;
    for (i, &n) in per_symbol.iter().enumerate() {
        let b0 = i * IS_BATCHES_PER_SYMBOL as usize;
        let (s, s2) = sums[b0..b0 + IS_BATCHES_PER_SYMBOL as usize]
            .iter()
            .fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
        let nf = n as f64;
        let mean = s / nf;
        ser += mean;
        var += ((s2 / nf - mean * mean).max(0.0)) / nf;
    }
    let mf = m as f64;
    let ser = ser / mf;
    let std_err = var.sqrt() / mf;
    Ok(SerEstimate {
        ser,
        std_err,
        ci95_halfwidth: WILSON_Z * std_err,
        samples,
    })
}

fn whitened(rc: &ReceivedConstellation) -> Vec<[f64; 3]> {
    let sc = (rc.budget().sigma1_sq() / 2.0).sqrt();
    let sp = rc.budget().sigma2();
    rc.points().iter().map(|p| [p[0] / sc, p[1] / sc, p[2] / sp]).collect()
}

/// Midpoint shifts `(pⱼ − pᵢ)/2` with their energies `|μ|²/2`, pruned to the relevant ones.
fn proposal_shifts(white: &[[f64; 3]], i: usize) -> Vec<([f64; 3], f64)> {
    let p = white[i];
    let mut shifts: Vec<([f64; 3], f64)> = white
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, q)| {
            let mu = [(q[0] - p[0]) / 2.0, (q[1] - p[1]) / 2.0, (q[2] - p[2]) / 2.0];
            (mu, 0.5 * (mu[0] * mu[0] + mu[1] * mu[1] + mu[2] * mu[2]))
        })
        .filter(|(_, e)| *e > 0.0)
        .collect();
    if let Some(min) = shifts.iter().map(|s| s.1).min_by(f64::total_cmp) {
        shifts.retain(|s| s.1 <= min + IS_PRUNE_ENERGY);
    }
    shifts
}

/// `φ(n)/q(n)` for the equal-weight mixture of `φ` and the shifted copies.
fn likelihood_ratio(shifts: &[([f64; 3], f64)], n: [f64; 3]) -> f64 {
    let exps: Vec<f64> = shifts
        .iter()
        .map(|(mu, e)| mu[0] * n[0] + mu[1] * n[1] + mu[2] * n[2] - e)
        .collect();
    let top = exps.iter().copied().fold(0.0, f64::max);
    let denom = (-top).exp() + exps.iter().map(|v| (v - top).exp()).sum::<f64>();
    (shifts.len() + 1) as f64 * (-top).exp() / denom
}

/// High-SNR SER approximation: `(2/M)·Q(√2·x̆₁/σ₁)` for PAM,
/// `(4/√M)·Q(√2·x̆₁/σ₁)` for QAM, `(2(M−1)/M)·Q(√Θ₂·P/((M−1)σ₂))` for IM.
pub fn ser_high_snr(c: &Constellation, theta: ThetaPair, lb: &LinkBudget) -> Result<f64> {
    let m = c.m() as f64;
    match c.scheme() {
        Scheme::Pam | Scheme::Qam => {
            if !(theta.theta1 > 0.0 && theta.theta2 > 0.0) {
                return Err(domain(
                    "the PAM/QAM high-SNR form needs an interior split; use ser_conventional_exact at the boundaries",
                ));
            }
            let x1 = c.k1() * (theta.theta1 * lb.power()).sqrt();
            let q = q_func(std::f64::consts::SQRT_2 * x1 / lb.sigma1());
            Ok(if c.scheme() == Scheme::Pam {
                2.0 / m * q
            } else {
                4.0 / m.sqrt() * q
            })
        }
        Scheme::Im => {
            if !(theta.theta2 > 0.0) {
                return Err(domain("the IM high-SNR form needs Θ₂ > 0"));
            }
            Ok(2.0 * (m - 1.0) / m * q_func(theta.theta2.sqrt() * lb.power() / ((m - 1.0) * lb.sigma2())))
        }
    }
}

/// Classical coherent M-QAM SER `4(1−1/√M)Q(a) − 4(1−1/√M)²Q(a)²`,
/// `a = √(3H₂P/((M−1)σ₁²))`.
pub fn ser_qam_coherent_classical(m: usize, h2: f64, lb: &LinkBudget) -> f64 {
    let mf = m as f64;
    let q = q_func((3.0 * h2 * lb.power() / ((mf - 1.0) * lb.sigma1_sq())).sqrt());
    let c = 1.0 - 1.0 / mf.sqrt();
    4.0 * c * q - 4.0 * c * c * q * q
}

/// Exact SER of the conventional receivers, where detection is effectively
/// one-dimensional per axis: `Θ₂ = 0` (coherent) or `Θ₁ = 0` (power detection).
///
/// Symbols that share a received point are told apart by the lowest-index
/// rule only, which produces the error floor of power detection for PAM/QAM.
pub fn ser_conventional_exact(c: &Constellation, theta: ThetaPair, lb: &LinkBudget) -> Result<f64> {
    let rc = map_received(c, theta, lb);
    let cd = theta.theta1 > 0.0 && lb.power() > 0.0;
    let pd = theta.theta2 > 0.0 && lb.power() > 0.0;
    let m = c.m() as f64;
    match (cd, pd) {
        (true, true) => Err(domain("interior split: no exact closed form; use Monte Carlo or importance sampling")),
        (false, false) => Ok(1.0 - 1.0 / m),
        (true, false) => {
            let sd = (lb.sigma1_sq() / 2.0).sqrt();
            if c.scheme() == Scheme::Qam {
                let side = m.sqrt();
                let half = c.k1() * (theta.theta1 * lb.power()).sqrt();
                let p = 2.0 * (1.0 - 1.0 / side) * q_func(half / sd);
                Ok(2.0 * p - p * p)
            } else {
                let xs: Vec<f64> = rc.points().iter().map(|p| p[0]).collect();
                Ok(line_ser(&xs, sd))
            }
        }
        (false, true) => {
            let zs: Vec<f64> = rc.points().iter().map(|p| p[2]).collect();
            Ok(line_ser(&zs, lb.sigma2()))
        }
    }
}

/// Exact SER for equiprobable points on a line with Gaussian noise of
/// standard deviation `sd`, nearest-point decisions, and coincident points
/// resolved to a single winner.
fn line_ser(values: &[f64], sd: f64) -> f64 {
    let m = values.len() as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // (value, multiplicity)
    let mut tiers: Vec<(f64, usize)> = Vec::new();
    for v in sorted {
        match tiers.last_mut() {
            Some((t, n)) if (v - *t).abs() <= 1e-12 * t.abs().max(v.abs()) => *n += 1,
            _ => tiers.push((v, 1)),
        }
    }
    // Summing error terms directly keeps precision for tiny rates.
    let errors: f64 = (0..tiers.len())
        .map(|t| {
            let lo = if t > 0 { q_func((tiers[t].0 - tiers[t - 1].0) / (2.0 * sd)) } else { 0.0 };
            let hi = if t + 1 < tiers.len() { q_func((tiers[t + 1].0 - tiers[t].0) / (2.0 * sd)) } else { 0.0 };
            (tiers[t].1 - 1) as f64 + lo + hi
        })
        .sum();
    errors / m
}

/// Asymptotic SER joint processing gain: `M−1` (PAM), `√M−1` (QAM), 1 (IM).
pub fn asymptotic_ser_gain(scheme: Scheme, m: usize) -> f64 {
    let mf = m as f64;
    match scheme {
        Scheme::Pam => mf - 1.0,
        Scheme::Qam => mf.sqrt() - 1.0,
        Scheme::Im => 1.0,
    }
}

/// How each grid point's SER is estimated in [`ser_joint_processing_gain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SerMethod {
    #[default]
    MonteCarlo,
    ImportanceSampling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerPoint {
    pub rho: SplitConfig,
    pub ser: f64,
    pub ci95_halfwidth: f64,
    pub trials: u64,
    /// Counted errors (Monte Carlo only).
    pub errors: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerGain {
    /// Minimum endpoint SER over minimum grid SER; `None` when the grid minimum is zero.
    pub gain: Option<f64>,
    pub argmin_rho: SplitConfig,
    pub min_ser: f64,
    pub endpoint_min_ser: f64,
    /// No errors were observed at the grid minimum, so the gain is undefined.
    pub needs_more_trials: bool,
    pub curve: Vec<SerPoint>,
}

/// SER joint processing gain over a ratio grid that contains both endpoints.
/// Point `i` uses seed `seed::derive(seed, i)`.
pub fn ser_joint_processing_gain(
    c: &Constellation,
    ch: &ChannelRealization,
    lb: &LinkBudget,
    rho_grid: &[SplitConfig],
    trials: u64,
    seed_value: u64,
    method: SerMethod,
) -> Result<SerGain> {
    if !rho_grid.iter().any(|r| r.is_coherent()) || !rho_grid.iter().any(|r| r.is_noncoherent()) {
        return Err(contract("SER gain grid must include both ρ = 0 and ρ = 1"));
    }
    let curve: Vec<SerPoint> = rho_grid
        .par_iter()
        .enumerate()
        .map(|(i, rho)| {
            let theta = compute_theta(ch, rho)?;
            let s = seed::derive(seed_value, i as u64);
            Ok(match method {
                SerMethod::MonteCarlo => {
                    let r = ser_monte_carlo_theta(c, theta, lb, trials, s)?;
                    SerPoint {
                        rho: rho.clone(),
                        ser: r.ser,
                        ci95_halfwidth: r.ci95_halfwidth,
                        trials,
                        errors: Some(r.errors),
                    }
                }
                SerMethod::ImportanceSampling => {
                    let r = ser_importance_sampling(c, theta, lb, trials, s)?;
                    SerPoint {
                        rho: rho.clone(),
                        ser: r.ser,
                        ci95_halfwidth: r.ci95_halfwidth,
                        trials,
                        errors: None,
                    }
                }
            })
        })
        .collect::<Result<_>>()?;

    let endpoint_min_ser = curve
        .iter()
        .filter(|p| p.rho.is_coherent() || p.rho.is_noncoherent())
        .map(|p| p.ser)
        .fold(f64::INFINITY, f64::min);
    let best = curve
        .iter()
        .fold(&curve[0], |b, p| if p.ser < b.ser { p } else { b });
    let needs_more_trials = best.ser == 0.0;
    Ok(SerGain {
        gain: (!needs_more_trials).then(|| endpoint_min_ser / best.ser),
        argmin_rho: best.rho.clone(),
        min_ser: best.ser,
        endpoint_min_ser,
        needs_more_trials,
        curve,
    })
}

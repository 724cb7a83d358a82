//! Mutual information of the splitting channel under Gaussian input
//! `x ~ CN(0, 1)`.
//!
//! Closed forms cover the two conventional receivers (`ρ = 1⃗` coherent,
//! `ρ = 0⃗` power detection). Interior ratios are handled either by the
//! Monte-Carlo histogram estimator or by the high-SNR approximations.

use std::f64::consts::{E, LN_2, PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    compute_theta, standard_complex_normal, ChannelRealization, LinkBudget, SplitConfig, SplittingChannel, ThetaPair,
};
use crate::error::{contract, domain, Result};
use crate::quadrature::integrate_breakpoints;
use crate::seed;
use crate::special::{exp_e1_scaled, EmgParams, EULER_GAMMA};

/// Number of jackknife batches used by the histogram estimator.
pub const JACKKNIFE_BATCHES: u64 = 10;

pub const DEFAULT_BINS: usize = 64;

/// Half-width of each histogram axis, in empirical standard deviations.
pub const RANGE_SDS: f64 = 6.0;

fn log2(x: f64) -> f64 {
    x.log2()
}

/// `log₂(1 + H₂P/σ₁²)`: capacity of the coherent AWGN channel (`ρ = 1⃗`).
pub fn mi_coherent_closed_form(ch: &ChannelRealization, lb: &LinkBudget) -> f64 {
    (ch.h2() * lb.power() / lb.sigma1_sq()).ln_1p() / LN_2
}

/// `½·log₂(1 + H₄P²e/(2πσ₂²))`: lower bound on (and high-SNR value of) the
/// power-detection mutual information (`ρ = 0⃗`).
pub fn mi_noncoherent_lower_bound(ch: &ChannelRealization, lb: &LinkBudget) -> f64 {
    let p = lb.power();
    0.5 * (ch.h4() * p * p * E / (2.0 * PI * lb.sigma2_sq())).ln_1p() / LN_2
}

/// `h(Y₂) − h(N)` for `ρ = 0⃗`, integrating the EMG output density numerically.
///
/// `quadrature_tol` is the absolute tolerance on the result, in bits.
pub fn mi_noncoherent_exact(ch: &ChannelRealization, lb: &LinkBudget, quadrature_tol: f64) -> Result<f64> {
    if !(quadrature_tol > 0.0) {
        return Err(domain("quadrature tolerance must be positive"));
    }
    let scale = ch.h4().sqrt() * lb.power();
    let sd = lb.sigma2();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let emg = EmgParams::new(scale, sd)?;
    let mut points = vec![
        -40.0 * sd,
        -5.0 * sd,
        0.0,
        5.0 * sd,
        scale,
        5.0 * scale,
        20.0 * scale,
        60.0 * scale + 40.0 * sd,
    ];
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    let integrand = |y: f64| {
        let lp = emg.ln_pdf(y);
        if lp < -700.0 {
            0.0
        } else {
            -lp.exp() * lp
        }
    };
    let q = integrate_breakpoints(integrand, &points, quadrature_tol * LN_2, 0.0, 20_000)?;
    Ok(q.value / LN_2 - emg.noise_entropy_bits())
}

/// Coordinates in which the histogram estimator bins the `(y1, y2)` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramCoords {
    /// Bin `(Re y1, Im y1, y2)` directly.
    Raw,
    /// Bin `(Re y1, Im y1, w)` with `w = (y2 − E[y2|y1]) / sd[y2|y1]`.
    ///
    /// The map is triangular, so `h(Y1, Y2) = h(Y1, W) + E[log₂ sd[Y2|Y1]]`
    /// exactly; the log-Jacobian term is averaged over the same samples. The
    /// conditional standardization flattens the thin paraboloid shell that
    /// the raw histogram cannot resolve once `P ≫ σ₂`.
    #[default]
    Standardized,
}

/// Knobs of the histogram estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramOptions {
    pub samples: u64,
    pub bins: usize,
    pub seed: u64,
    pub coords: HistogramCoords,
}

impl HistogramOptions {
    pub fn new(samples: u64, bins: usize, seed: u64) -> Self {
        Self {
            samples,
            bins,
            seed,
            coords: HistogramCoords::default(),
        }
    }

    pub fn with_coords(mut self, coords: HistogramCoords) -> Self {
        self.coords = coords;
        self
    }
}

/// A Monte-Carlo mutual-information estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub bits: f64,
    pub samples: u64,
    pub bins_per_axis: usize,
    /// Jackknife standard error over [`JACKKNIFE_BATCHES`] batches.
    pub std_err: f64,
    /// Number of histogram axes actually used (3, or fewer when a branch carries no signal).
    pub dims: usize,
    /// Set when `samples < bins^dims`.
    pub undersampled: bool,
}

/// Monte-Carlo histogram estimate of `I(√P·X; Y1, Y2)` with default coordinates.
pub fn mi_mc_histogram(
    ch: &ChannelRealization,
    cfg: &SplitConfig,
    lb: &LinkBudget,
    samples: u64,
    bins: usize,
    seed: u64,
) -> Result<MiEstimate> {
    mi_mc_histogram_with(ch, cfg, lb, &HistogramOptions::new(samples, bins, seed))
}

pub fn mi_mc_histogram_with(
    ch: &ChannelRealization,
    cfg: &SplitConfig,
    lb: &LinkBudget,
    opts: &HistogramOptions,
) -> Result<MiEstimate> {
    mi_mc_histogram_theta(compute_theta(ch, cfg)?, lb, opts)
}

/// Histogram estimator driven directly by the effective gains.
pub fn mi_mc_histogram_theta(theta: ThetaPair, lb: &LinkBudget, opts: &HistogramOptions) -> Result<MiEstimate> {
    if opts.samples < 10_000 {
        return Err(contract(format!("need at least 10^4 samples, got {}", opts.samples)));
    }
    if opts.bins < 8 {
        return Err(contract(format!("need at least 8 bins per axis, got {}", opts.bins)));
    }
    let chan = SplittingChannel::new(theta, lb);
    let cd_active = theta.theta1 > 0.0 && lb.power() > 0.0;
    let pd_active = theta.theta2 > 0.0 && lb.power() > 0.0;
    let mapper = match (cd_active, pd_active) {
        (true, true) => Mapper::Joint {
            posterior: Posterior::new(theta, lb),
            coords: opts.coords,
        },
        (true, false) => Mapper::CoherentOnly,
        // With no coherent signal the estimator works on y2 alone; with no
        // signal at all it still returns the (near-zero) estimate.
        (false, _) => Mapper::PowerOnly,
    };
    let dims = mapper.dims();

    // Entropy of the noise actually subtracted matches the axes kept.
    let h_cd_noise = log2(PI * E * lb.sigma1_sq());
    let h_pd_noise = 0.5 * log2(2.0 * PI * E * lb.sigma2_sq());
    let noise_entropy = match mapper {
        Mapper::Joint { .. } => h_cd_noise + h_pd_noise,
        Mapper::CoherentOnly => h_cd_noise,
        Mapper::PowerOnly => h_pd_noise,
    };

    let sizes = seed::batch_sizes(opts.samples, JACKKNIFE_BATCHES);
    let draw = |batch: usize, visit: &mut dyn FnMut([f64; 3], f64)| {
        let mut rng = seed::stream_rng(opts.seed, batch as u64);
        for _ in 0..sizes[batch] {
            let x = standard_complex_normal(&mut rng);
            let s = chan.sample(x, &mut rng);
            let (coords, log_jac) = mapper.map(s.y1.re, s.y1.im, s.y2);
            visit(coords, log_jac);
        }
    };

    // Pass 1: per-axis moments for the ±6 SD ranges.
    let moments: Vec<Moments> = (0..sizes.len())
        .into_par_iter()
        .map(|b| {
            let mut m = Moments::default();
            draw(b, &mut |c, _| m.push(&c[..dims]));
            m
        })
        .collect();
    let total = moments.iter().fold(Moments::default(), |acc, m| acc.merge(m));
    let axes: Vec<Axis> = (0..dims)
        .map(|d| Axis::around(total.mean(d), total.sd(d), opts.bins))
        .collect::<Result<_>>()?;
    let cell_log2_volume: f64 = axes.iter().map(|a| log2(a.width)).sum();

    // Pass 2: the same samples, binned.
    let batches: Vec<(Vec<u32>, f64)> = (0..sizes.len())
        .into_par_iter()
        .map(|b| {
            let mut counts = vec![0u32; opts.bins.pow(dims as u32)];
            let mut log_jac_sum = 0.0;
            draw(b, &mut |c, lj| {
                let mut idx = 0usize;
                for (d, axis) in axes.iter().enumerate() {
                    idx = idx * opts.bins + axis.bin(c[d]);
                }
                counts[idx] += 1;
                log_jac_sum += lj;
            });
            (counts, log_jac_sum)
        })
        .collect();

    let mut counts = vec![0u64; opts.bins.pow(dims as u32)];
    for (c, _) in &batches {
        for (t, &v) in counts.iter_mut().zip(c) {
            *t += u64::from(v);
        }
    }
    let log_jac_total: f64 = batches.iter().map(|(_, lj)| lj).sum();

    let estimate = |counts: &[u64], n: u64, log_jac: f64| -> f64 {
        discrete_entropy_bits(counts, n) + cell_log2_volume + log_jac / n as f64 - noise_entropy
    };

    let bits = estimate(&counts, opts.samples, log_jac_total);

    // Leave-one-batch-out jackknife.
    let mut loo = Vec::with_capacity(batches.len());
    let mut scratch = vec![0u64; counts.len()];
    for (b, (c, lj)) in batches.iter().enumerate() {
        for ((s, &t), &v) in scratch.iter_mut().zip(&counts).zip(c) {
            *s = t - u64::from(v);
        }
        loo.push(estimate(&scratch, opts.samples - sizes[b], log_jac_total - lj));
    }
    let nb = loo.len() as f64;
    let mean_loo = loo.iter().sum::<f64>() / nb;
    let std_err = ((nb - 1.0) / nb * loo.iter().map(|v| (v - mean_loo).powi(2)).sum::<f64>()).sqrt();

    Ok(MiEstimate {
        bits,
        samples: opts.samples,
        bins_per_axis: opts.bins,
        std_err,
        dims,
        undersampled: (opts.samples as f64) < (opts.bins as f64).powi(dims as i32),
    })
}

fn discrete_entropy_bits(counts: &[u64], n: u64) -> f64 {
    let n = n as f64;
    let sum_nlogn: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let c = c as f64;
            c * c.log2()
        })
        .sum();
    n.log2() - sum_nlogn / n
}

/// Posterior moments of `|x|²` given `y1`, for `x ~ CN(0,1)`.
#[derive(Debug, Clone, Copy)]
struct Posterior {
    shrink: f64,
    var: f64,
    pd_gain: f64,
    pd_noise_var: f64,
}

impl Posterior {
    fn new(theta: ThetaPair, lb: &LinkBudget) -> Self {
        let a2 = theta.theta1 * lb.power();
        let denom = a2 + lb.sigma1_sq();
        Self {
            shrink: a2.sqrt() / denom,
            var: lb.sigma1_sq() / denom,
            pd_gain: theta.theta2.sqrt() * lb.power(),
            pd_noise_var: lb.sigma2_sq(),
        }
    }

    /// Mean and standard deviation of `y2` given `y1`.
    fn y2_moments(&self, y1_norm_sqr: f64) -> (f64, f64) {
        let m2 = self.shrink * self.shrink * y1_norm_sqr;
        let mean = self.pd_gain * (m2 + self.var);
        let var = self.pd_noise_var + self.pd_gain * self.pd_gain * (2.0 * m2 * self.var + self.var * self.var);
        (mean, var.sqrt())
    }
}

#[derive(Debug, Clone, Copy)]
enum Mapper {
    Joint { posterior: Posterior, coords: HistogramCoords },
    CoherentOnly,
    PowerOnly,
}

impl Mapper {
    fn dims(&self) -> usize {
        match self {
            Mapper::Joint { .. } => 3,
            Mapper::CoherentOnly => 2,
            Mapper::PowerOnly => 1,
        }
    }

    /// Histogram coordinates and `log₂` of the Jacobian correction.
    #[inline]
    fn map(&self, re: f64, im: f64, y2: f64) -> ([f64; 3], f64) {
        match self {
            Mapper::Joint {
                coords: HistogramCoords::Raw,
                ..
            } => ([re, im, y2], 0.0),
            Mapper::Joint {
                posterior,
                coords: HistogramCoords::Standardized,
            } => {
                let (mean, sd) = posterior.y2_moments(re * re + im * im);
                ([re, im, (y2 - mean) / sd], sd.log2())
            }
            Mapper::CoherentOnly => ([re, im, 0.0], 0.0),
            Mapper::PowerOnly => ([y2, 0.0, 0.0], 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: [f64; 3],
    sum_sq: [f64; 3],
}

impl Moments {
    fn push(&mut self, c: &[f64]) {
        self.n += 1;
        for (d, &v) in c.iter().enumerate() {
            self.sum[d] += v;
            self.sum_sq[d] += v * v;
        }
    }

    fn merge(mut self, other: &Moments) -> Moments {
        self.n += other.n;
        for d in 0..3 {
            self.sum[d] += other.sum[d];
            self.sum_sq[d] += other.sum_sq[d];
        }
        self
    }

    fn mean(&self, d: usize) -> f64 {
        self.sum[d] / self.n as f64
    }

    fn sd(&self, d: usize) -> f64 {
        let m = self.mean(d);
        (self.sum_sq[d] / self.n as f64 - m * m).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    width: f64,
    bins: usize,
}

impl Axis {
    fn around(mean: f64, sd: f64, bins: usize) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(domain(format!("histogram axis has degenerate spread (sd = {sd})")));
        }
        let lo = mean - RANGE_SDS * sd;
        Ok(Self {
            lo,
            width: 2.0 * RANGE_SDS * sd / bins as f64,
            bins,
        })
    }

    /// Bin index; samples outside the range are clamped into the edge bins.
    #[inline]
    fn bin(&self, v: f64) -> usize {
        let i = ((v - self.lo) / self.width).floor();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.bins - 1)
        }
    }
}

/// Which high-SNR expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HighSnrForm {
    /// `log₂(Θ₁P/σ₁²) + exp(u)·E1(u)/(2 ln 2)`, `u = Θ₁σ₂²/(2Θ₂σ₁²P)`.
    Ei,
    /// `log₂(√2·P^{3/2}·√(Θ₁Θ₂)/(σ₁σ₂)) − γ/(2 ln 2)`.
    Log,
}

/// High-SNR approximation of the splitting-channel mutual information for an
/// interior ratio (both branches carry signal).
pub fn mi_high_snr_approx(
    ch: &ChannelRealization,
    cfg: &SplitConfig,
    lb: &LinkBudget,
    form: HighSnrForm,
) -> Result<f64> {
    mi_high_snr_theta(compute_theta(ch, cfg)?, lb, form)
}

pub fn mi_high_snr_theta(theta: ThetaPair, lb: &LinkBudget, form: HighSnrForm) -> Result<f64> {
    if !(theta.theta1 > 0.0 && theta.theta2 > 0.0) {
        return Err(domain(format!(
            "high-SNR form needs Θ₁ > 0 and Θ₂ > 0 (got {}, {}); use the closed forms for ρ = 0 or 1",
            theta.theta1, theta.theta2
        )));
    }
    let p = lb.power();
    if !(p > 0.0) {
        return Err(domain("high-SNR form needs positive received power"));
    }
    Ok(match form {
        HighSnrForm::Ei => {
            let u = theta.theta1 * lb.sigma2_sq() / (2.0 * theta.theta2 * lb.sigma1_sq() * p);
            log2(theta.theta1 * p / lb.sigma1_sq()) + exp_e1_scaled(u)? / (2.0 * LN_2)
        }
        HighSnrForm::Log => {
            log2(SQRT_2 * p.powf(1.5) * (theta.theta1 * theta.theta2).sqrt() / (lb.sigma1() * lb.sigma2()))
                - EULER_GAMMA / (2.0 * LN_2)
        }
    })
}

/// How the interior of the ratio grid is evaluated in [`joint_processing_gain_mi`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiMethod {
    /// High-SNR formula; the `ρ = 0⃗` endpoint uses its high-SNR closed form too.
    Formula(HighSnrForm),
    /// Histogram estimator; the `ρ = 0⃗` endpoint is evaluated by quadrature.
    ///
    /// Every grid point reuses the same seed (common random numbers), so
    /// differences along the curve are not swamped by sampling noise.
    MonteCarlo(HistogramOptions),
}

/// MI at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiPoint {
    pub rho: SplitConfig,
    pub bits: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiGain {
    /// Best MI over the grid (endpoints included) divided by the best endpoint MI.
    pub gain: f64,
    pub argmax_rho: SplitConfig,
    pub best_bits: f64,
    pub mi_noncoherent: f64,
    pub mi_coherent: f64,
    pub curve: Vec<MiPoint>,
}

/// Joint processing gain over a grid of split configurations.
///
/// Endpoint configurations in the grid (and the two endpoints themselves, always)
/// are evaluated by closed forms, never by the estimator.
pub fn joint_processing_gain_mi(
    ch: &ChannelRealization,
    lb: &LinkBudget,
    rho_grid: &[SplitConfig],
    method: MiMethod,
) -> Result<MiGain> {
    if let Some(bad) = rho_grid.iter().find(|c| c.k() != ch.k()) {
        return Err(contract(format!(
            "grid point has {} ratios for a {}-antenna channel",
            bad.k(),
            ch.k()
        )));
    }
    let mi_coherent = mi_coherent_closed_form(ch, lb);
    let mi_noncoherent = match method {
        MiMethod::Formula(_) => mi_noncoherent_lower_bound(ch, lb),
        MiMethod::MonteCarlo(_) => mi_noncoherent_exact(ch, lb, 1e-9)?,
    };

    let curve: Vec<MiPoint> = rho_grid
        .par_iter()
        .map(|cfg| {
            let (bits, std_err) = if cfg.is_coherent() {
                (mi_coherent, 0.0)
            } else if cfg.is_noncoherent() {
                (mi_noncoherent, 0.0)
            } else {
                let theta = compute_theta(ch, cfg)?;
                match method {
                    MiMethod::Formula(form) => (mi_high_snr_theta(theta, lb, form)?, 0.0),
                    MiMethod::MonteCarlo(opts) => {
                        let est = mi_mc_histogram_theta(theta, lb, &opts)?;
                        (est.bits, est.std_err)
                    }
                }
            };
            Ok(MiPoint {
                rho: cfg.clone(),
                bits,
                std_err,
            })
        })
        .collect::<Result<_>>()?;

    let endpoint_best = mi_coherent.max(mi_noncoherent);
    let (argmax_rho, best_bits) = curve
        .iter()
        .fold(None::<(&SplitConfig, f64)>, |best, p| match best {
            Some((_, b)) if b >= p.bits => best,
            _ => Some((&p.rho, p.bits)),
        })
        .map(|(r, b)| (r.clone(), b))
        .filter(|&(_, b)| b > endpoint_best)
        .unwrap_or_else(|| {
            if mi_coherent >= mi_noncoherent {
                (SplitConfig::coherent(ch.k()), mi_coherent)
            } else {
                (SplitConfig::noncoherent(ch.k()), mi_noncoherent)
            }
        });
    Ok(MiGain {
        gain: best_bits / endpoint_best,
        argmax_rho,
        best_bits,
        mi_noncoherent,
        mi_coherent,
        curve,
    })
}

/// `ρ` values `0, step, 2·step, …, 1` applied uniformly to all `k` antennas.
pub fn uniform_rho_grid(k: usize, step: f64) -> Result<Vec<SplitConfig>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(domain(format!("grid step must lie in (0, 1], got {step}")));
    }
    let n = (1.0 / step).round() as usize;
    (0..=n)
        .map(|i| SplitConfig::uniform(k, (i as f64 / n as f64).min(1.0)))
        .collect()
}

//! Channel realizations, splitting configuration, MRC combining and the
//! splitting-channel sampler.
//!
//! After maximal-ratio combining and rescaling, a `K`-antenna splitting
//! receiver is equivalent to a single-input channel with two outputs:
//!
//! ```text
//! y1 = √Θ₁·√P·x + z,   z ~ CN(0, σ₁²)
//! y2 = √Θ₂·P·|x|² + n, n ~ N(0, σ₂²)
//! ```
//!
//! with `Θ₁ = Σ ρₖ|hₖ|²` and `Θ₂ = Σ (1−ρₖ)²|hₖ|⁴`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};
use crate::seed;

/// Complex amplitude gains of the `K` receive antennas, with cached `H₂ = Σ|h|²`, `H₄ = Σ|h|⁴`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GainsJson", into = "GainsJson")]
pub struct ChannelRealization {
    gains: Vec<Complex64>,
    h2: f64,
    h4: f64,
}

#[derive(Serialize, Deserialize)]
struct GainsJson {
    gains: Vec<[f64; 2]>,
}

impl TryFrom<GainsJson> for ChannelRealization {
    type Error = crate::Error;

    fn try_from(raw: GainsJson) -> Result<Self> {
        Self::new(raw.gains.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl From<ChannelRealization> for GainsJson {
    fn from(ch: ChannelRealization) -> Self {
        GainsJson {
            gains: ch.gains.iter().map(|g| [g.re, g.im]).collect(),
        }
    }
}

impl ChannelRealization {
    pub fn new(gains: Vec<Complex64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(contract("a channel needs at least one antenna"));
        }
        if gains.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(domain("channel gains must be finite"));
        }
        let h2 = gains.iter().map(|g| g.norm_sqr()).sum();
        let h4 = gains.iter().map(|g| g.norm_sqr().powi(2)).sum();
        Ok(Self { gains, h2, h4 })
    }

    /// Real, positive gains `|hₖ|` (zero phase).
    pub fn from_magnitudes(magnitudes: &[f64]) -> Result<Self> {
        Self::new(magnitudes.iter().map(|&m| Complex64::new(m, 0.0)).collect())
    }

    /// Free-space channel: every antenna sees the same gain magnitude.
    pub fn identical(k: usize, magnitude: f64) -> Result<Self> {
        Self::from_magnitudes(&vec![magnitude; k])
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn k(&self) -> usize {
        self.gains.len()
    }

    /// `H₂ = Σ|hₖ|²`.
    pub fn h2(&self) -> f64 {
        self.h2
    }

    /// `H₄ = Σ|hₖ|⁴`.
    pub fn h4(&self) -> f64 {
        self.h4
    }

    /// Power gains `|hₖ|²`.
    pub fn power_gains(&self) -> Vec<f64> {
        self.gains.iter().map(|g| g.norm_sqr()).collect()
    }
}

/// I.i.d. Rayleigh fading: each gain is `CN(0, 1)`, so `|hₖ|²` is unit-mean exponential.
pub fn sample_channel_iid_rayleigh(k: usize, seed: u64) -> Result<ChannelRealization> {
    if k == 0 {
        return Err(contract("a channel needs at least one antenna"));
    }
    let mut rng = seed::stream_rng(seed, 0);
    ChannelRealization::new((0..k).map(|_| standard_complex_normal(&mut rng)).collect())
}

/// Per-antenna power splitting ratios `ρₖ ∈ [0, 1]` (fraction sent to coherent detection).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    rho: Vec<f64>,
}

impl SplitConfig {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if rho.is_empty() {
            return Err(contract("split configuration needs at least one ratio"));
        }
        if let Some(bad) = rho.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(domain(format!("splitting ratio {bad} outside [0, 1]")));
        }
        Ok(Self { rho })
    }

    /// Same ratio on every antenna.
    pub fn uniform(k: usize, rho: f64) -> Result<Self> {
        Self::new(vec![rho; k])
    }

    /// `ρ = 1⃗`: conventional coherent receiver.
    pub fn coherent(k: usize) -> Self {
        Self { rho: vec![1.0; k] }
    }

    /// `ρ = 0⃗`: conventional power-detection receiver.
    pub fn noncoherent(k: usize) -> Self {
        Self { rho: vec![0.0; k] }
    }

    /// Simplified receiver: the first `k1` antennas go to CD, the rest to PD.
    pub fn simplified(k: usize, k1: usize) -> Result<Self> {
        if k1 > k {
            return Err(contract(format!("cannot assign {k1} of {k} antennas")));
        }
        Self::new((0..k).map(|i| if i < k1 { 1.0 } else { 0.0 }).collect())
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn k(&self) -> usize {
        self.rho.len()
    }

    pub fn is_coherent(&self) -> bool {
        self.rho.iter().all(|&r| r == 1.0)
    }

    pub fn is_noncoherent(&self) -> bool {
        self.rho.iter().all(|&r| r == 0.0)
    }
}

/// Received power and post-processing noise of the two detection branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    power: f64,
    sigma1_sq: f64,
    sigma2_sq: f64,
    eta: f64,
}

impl LinkBudget {
    /// `sigma2_sq` is the PD noise variance already referred to the signal scale (`N = N'/η`).
    pub fn new(power: f64, sigma1_sq: f64, sigma2_sq: f64) -> Result<Self> {
        if !(power >= 0.0 && power.is_finite()) {
            return Err(domain(format!("received power must be finite and >= 0, got {power}")));
        }
        for (name, v) in [("sigma1_sq", sigma1_sq), ("sigma2_sq", sigma2_sq)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(Self {
            power,
            sigma1_sq,
            sigma2_sq,
            eta: 1.0,
        })
    }

    /// Builds the budget from the raw rectifier-output noise variance and conversion efficiency.
    pub fn from_rectifier(power: f64, sigma1_sq: f64, rectifier_noise_var: f64, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(domain(format!("conversion efficiency must be > 0, got {eta}")));
        }
        let mut lb = Self::new(power, sigma1_sq, rectifier_noise_var / (eta * eta))?;
        lb.eta = eta;
        Ok(lb)
    }

    pub fn with_power(&self, power: f64) -> Result<Self> {
        let mut lb = Self::new(power, self.sigma1_sq, self.sigma2_sq)?;
        lb.eta = self.eta;
        Ok(lb)
    }

    pub fn power(&self) -> f64 {
        self.power
    }
    pub fn sigma1_sq(&self) -> f64 {
        self.sigma1_sq
    }
    pub fn sigma2_sq(&self) -> f64 {
        self.sigma2_sq
    }
    pub fn sigma1(&self) -> f64 {
        self.sigma1_sq.sqrt()
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2_sq.sqrt()
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Effective combined gains of the two branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaPair {
    pub theta1: f64,
    pub theta2: f64,
}

impl ThetaPair {
    pub fn product(&self) -> f64 {
        self.theta1 * self.theta2
    }
}

pub fn compute_theta(ch: &ChannelRealization, cfg: &SplitConfig) -> Result<ThetaPair> {
    if ch.k() != cfg.k() {
        return Err(contract(format!(
            "channel has {} antennas but split configuration has {}",
            ch.k(),
            cfg.k()
        )));
    }
    let mut theta1 = 0.0;
    let mut theta2 = 0.0;
    for (g, &r) in ch.gains().iter().zip(cfg.rho()) {
        let p = g.norm_sqr();
        theta1 += r * p;
        theta2 += (1.0 - r) * (1.0 - r) * p * p;
    }
    Ok(ThetaPair { theta1, theta2 })
}

/// SNRs of the two conventional receivers and their minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingSnr {
    pub snr_cd: f64,
    pub snr_pd: f64,
    pub snr: f64,
}

/// `snr_cd = H₂P/σ₁²`, `snr_pd = √H₄·P/σ₂` (standard deviation in the denominator).
pub fn operating_snr(ch: &ChannelRealization, lb: &LinkBudget) -> OperatingSnr {
    let snr_cd = ch.h2() * lb.power() / lb.sigma1_sq();
    let snr_pd = ch.h4().sqrt() * lb.power() / lb.sigma2();
    OperatingSnr {
        snr_cd,
        snr_pd,
        snr: snr_cd.min(snr_pd),
    }
}

/// One observation of the splitting channel together with its input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSample {
    pub y1: Complex64,
    pub y2: f64,
    pub x: Complex64,
}

/// Precomputed splitting channel for fast repeated sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingChannel {
    theta: ThetaPair,
    cd_gain: f64,
    pd_gain: f64,
    cd_noise_sd: f64,
    pd_noise_sd: f64,
}

impl SplittingChannel {
    pub fn new(theta: ThetaPair, lb: &LinkBudget) -> Self {
        Self {
            theta,
            cd_gain: (theta.theta1 * lb.power()).sqrt(),
            pd_gain: theta.theta2.sqrt() * lb.power(),
            cd_noise_sd: (0.5 * lb.sigma1_sq()).sqrt(),
            pd_noise_sd: lb.sigma2(),
        }
    }

    pub fn from_channel(ch: &ChannelRealization, cfg: &SplitConfig, lb: &LinkBudget) -> Result<Self> {
        Ok(Self::new(compute_theta(ch, cfg)?, lb))
    }

    pub fn theta(&self) -> ThetaPair {
        self.theta
    }

    /// Noiseless outputs `(√(Θ₁P)·x, √Θ₂·P·|x|²)`.
    pub fn mean(&self, x: Complex64) -> (Complex64, f64) {
        (x * self.cd_gain, self.pd_gain * x.norm_sqr())
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: Complex64, rng: &mut R) -> SplitSample {
        let (m1, m2) = self.mean(x);
        let zr: f64 = rng.sample(StandardNormal);
        let zi: f64 = rng.sample(StandardNormal);
        let n: f64 = rng.sample(StandardNormal);
        SplitSample {
            y1: m1 + Complex64::new(zr, zi) * self.cd_noise_sd,
            y2: m2 + n * self.pd_noise_sd,
            x,
        }
    }
}

/// Draws one splitting-channel observation for input `x`; deterministic in `noise_seed`.
pub fn sample_splitting_channel(
    ch: &ChannelRealization,
    cfg: &SplitConfig,
    lb: &LinkBudget,
    x: Complex64,
    noise_seed: u64,
) -> Result<SplitSample> {
    if !x.re.is_finite() || !x.im.is_finite() {
        return Err(domain("transmitted symbol must be finite"));
    }
    let chan = SplittingChannel::from_channel(ch, cfg, lb)?;
    Ok(chan.sample(x, &mut seed::stream_rng(noise_seed, 0)))
}

/// Raw per-antenna branch outputs before combining.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaOutputs {
    pub cd: Vec<Complex64>,
    pub pd: Vec<f64>,
}

/// Per-antenna CD and PD outputs: `√(ρₖP)·hₖ·x + zₖ` and `(1−ρₖ)|hₖ|²P|x|² + nₖ`.
pub fn sample_antennas<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    cfg: &SplitConfig,
    lb: &LinkBudget,
    x: Complex64,
    rng: &mut R,
) -> Result<AntennaOutputs> {
    compute_theta(ch, cfg)?;
    let cd_sd = (0.5 * lb.sigma1_sq()).sqrt();
    let pd_sd = lb.sigma2();
    let mut cd = Vec::with_capacity(ch.k());
    let mut pd = Vec::with_capacity(ch.k());
    for (h, &r) in ch.gains().iter().zip(cfg.rho()) {
        let zr: f64 = rng.sample(StandardNormal);
        let zi: f64 = rng.sample(StandardNormal);
        let n: f64 = rng.sample(StandardNormal);
        cd.push(h * x * (r * lb.power()).sqrt() + Complex64::new(zr, zi) * cd_sd);
        pd.push((1.0 - r) * h.norm_sqr() * lb.power() * x.norm_sqr() + n * pd_sd);
    }
    Ok(AntennaOutputs { cd, pd })
}

/// Maximal-ratio combines per-antenna outputs and rescales so that the result
/// follows the splitting-channel model. A branch with zero effective gain
/// carries no signal and is returned as 0.
pub fn combine_mrc(ch: &ChannelRealization, cfg: &SplitConfig, out: &AntennaOutputs) -> Result<(Complex64, f64)> {
    let theta = compute_theta(ch, cfg)?;
    if out.cd.len() != ch.k() || out.pd.len() != ch.k() {
        return Err(contract("antenna output length does not match channel"));
    }
    let mut y1 = Complex64::new(0.0, 0.0);
    let mut y2 = 0.0;
    for (((h, &r), c), p) in ch.gains().iter().zip(cfg.rho()).zip(&out.cd).zip(&out.pd) {
        y1 += h.conj() * c * r.sqrt();
        y2 += (1.0 - r) * h.norm_sqr() * p;
    }
    let y1 = if theta.theta1 > 0.0 { y1 / theta.theta1.sqrt() } else { y1 };
    let y2 = if theta.theta2 > 0.0 { y2 / theta.theta2.sqrt() } else { y2 };
    Ok((y1, y2))
}

pub(crate) fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

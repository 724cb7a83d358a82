//! Single-point estimates behind the `mi` and `ser` subcommands.

use anyhow::Result;
use splitrx::mi::{mi_mc_histogram_with, HistogramCoords, HistogramOptions};
use splitrx::modem::{decision_regions, make_constellation, map_received, DecisionRegion, Scheme, SerMethod};
use splitrx::{compute_theta, ChannelRealization, LinkBudget, SplitConfig};

use crate::run::{method_name, num, ser_at, ser_reference, Table, MI_HEADER, SER_HEADER};

#[derive(Debug, Clone, PartialEq)]
pub struct MiPointArgs {
    pub rho: f64,
    pub power: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub k: usize,
    pub samples: u64,
    pub bins: usize,
    pub seed: u64,
    pub coords: HistogramCoords,
}

/// Histogram MI at one uniform ratio on `k` unit-gain antennas.
pub fn mi_point(a: &MiPointArgs) -> Result<Table> {
    let ch = ChannelRealization::identical(a.k, 1.0)?;
    let lb = LinkBudget::new(a.power, a.sigma1_sq, a.sigma2_sq)?;
    let cfg = SplitConfig::uniform(a.k, a.rho)?;
    let opts = HistogramOptions::new(a.samples, a.bins, a.seed).with_coords(a.coords);
    let e = mi_mc_histogram_with(&ch, &cfg, &lb, &opts)?;
    if e.undersampled {
        eprintln!(
            "warning: {} samples for {} bins per axis over {} axes; the estimate is biased",
            a.samples, a.bins, e.dims
        );
    }
    let mut t = Table::new(MI_HEADER);
    t.push(vec![
        num(a.rho),
        num(e.bits),
        num(e.std_err),
        a.samples.to_string(),
        a.bins.to_string(),
        a.seed.to_string(),
        num(a.power),
        num(a.sigma1_sq),
        num(a.sigma2_sq),
        a.k.to_string(),
        "monte_carlo".into(),
    ]);
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerPointArgs {
    pub scheme: Scheme,
    pub m: usize,
    pub rho: f64,
    pub power: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    pub method: SerMethod,
}

/// SER at one uniform ratio on `k` unit-gain antennas, with the decision regions.
pub fn ser_point(a: &SerPointArgs) -> Result<(Table, Vec<DecisionRegion>)> {
    let c = make_constellation(a.scheme, a.m)?;
    let ch = ChannelRealization::identical(a.k, 1.0)?;
    let lb = LinkBudget::new(a.power, a.sigma1_sq, a.sigma2_sq)?;
    let theta = compute_theta(&ch, &SplitConfig::uniform(a.k, a.rho)?)?;
    let v = ser_at(&c, theta, &lb, a.method, a.trials, a.seed)?;
    let mut t = Table::new(SER_HEADER);
    t.push(vec![
        a.scheme.to_string(),
        a.m.to_string(),
        num(a.rho),
        num(a.power),
        num(a.sigma1_sq),
        num(a.sigma2_sq),
        a.k.to_string(),
        a.trials.to_string(),
        v.errors.map(|e| e.to_string()).unwrap_or_default(),
        num(v.ser),
        num(v.ci95),
        num(ser_reference(&c, theta, &lb)?),
        method_name(a.method).into(),
    ]);
    Ok((t, decision_regions(&map_received(&c, theta, &lb))))
}

//! Experiment execution: one CSV row per grid point plus a JSON summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use splitrx::mi::{
    joint_processing_gain_mi, mi_coherent_closed_form, mi_high_snr_theta, mi_mc_histogram_theta,
    mi_noncoherent_exact, mi_noncoherent_lower_bound, HighSnrForm, HistogramOptions, MiMethod,
};
use splitrx::modem::{
    asymptotic_ser_gain, decision_regions, make_constellation, map_received, ser_conventional_exact, ser_high_snr,
    ser_importance_sampling, ser_joint_processing_gain, ser_monte_carlo_theta, Constellation, SerMethod,
};
use splitrx::optimize::{best_simplified_partition, solve_p1, AntennaOrdering, P1Options};
use splitrx::{compute_theta, sample_channel_iid_rayleigh, seed, ChannelRealization, LinkBudget, SplitConfig, ThetaPair};

use crate::spec::{ExperimentKind, ExperimentSpec, MiEval};

/// Rows of one experiment, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub(crate) fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner()?)
    }
}

/// In-memory result of an experiment.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    /// Kind-specific results (argmax/argmin, gains) for the summary.
    pub results: Vec<Value>,
    /// Additional JSON documents, keyed by file suffix.
    pub attachments: Vec<(&'static str, Value)>,
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub attachments: Vec<PathBuf>,
    pub rows: usize,
    pub elapsed_s: f64,
}

/// Columns of every mutual-information sweep.
pub const MI_HEADER: &[&str] = &[
    "rho", "mi_bits", "std_err", "samples", "bins", "seed", "P", "sigma1_sq", "sigma2_sq", "K", "method",
];

/// Columns of every SER sweep.
pub const SER_HEADER: &[&str] = &[
    "scheme",
    "M",
    "rho",
    "P",
    "sigma1_sq",
    "sigma2_sq",
    "K",
    "trials",
    "errors",
    "ser",
    "ci95",
    "ser_approx",
    "method",
];

pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}

fn int(v: impl Into<u64>) -> String {
    v.into().to_string()
}

fn noise_pairs(spec: &ExperimentSpec) -> Vec<(f64, f64)> {
    spec.sweep
        .sigma1_sq
        .iter()
        .flat_map(|&a| spec.sweep.sigma2_sq.iter().map(move |&b| (a, b)))
        .collect()
}

/// `(K, P, σ₁², σ₂²)` combinations in output order.
fn combos(spec: &ExperimentSpec) -> Vec<(usize, f64, f64, f64)> {
    let noise = noise_pairs(spec);
    let mut out = Vec::new();
    for &k in &spec.sweep.k {
        for p in spec.power_values() {
            for &(s1, s2) in &noise {
                out.push((k, p, s1, s2));
            }
        }
    }
    out
}

fn uniform_grid(k: usize, rho: &[f64]) -> Result<Vec<SplitConfig>> {
    Ok(rho.iter().map(|&r| SplitConfig::uniform(k, r)).collect::<splitrx::Result<_>>()?)
}

fn mi_method(eval: MiEval, samples: u64, bins: usize, s: u64) -> MiMethod {
    match eval {
        MiEval::MonteCarlo => MiMethod::MonteCarlo(HistogramOptions::new(samples, bins, s)),
        MiEval::FormulaEi => MiMethod::Formula(HighSnrForm::Ei),
        MiEval::FormulaLog => MiMethod::Formula(HighSnrForm::Log),
    }
}

fn knob_columns(eval: MiEval, spec: &ExperimentSpec) -> (String, String) {
    match eval {
        MiEval::MonteCarlo => (int(spec.estimator.samples), spec.estimator.bins.to_string()),
        _ => ("0".into(), "0".into()),
    }
}

/// Runs the experiment without touching the file system.
pub fn execute(spec: &ExperimentSpec) -> Result<Outcome> {
    spec.validate()?;
    match spec.kind {
        ExperimentKind::MiVsRho => mi_vs_rho(spec),
        ExperimentKind::OptRhoVsPower => opt_rho_vs_power(spec),
        ExperimentKind::MiVsPower => mi_vs_power(spec),
        ExperimentKind::GainVsPower => gain_vs_power(spec),
        ExperimentKind::MultiAntennaMi => multi_antenna_mi(spec),
        ExperimentKind::K1RatioVsK => k1_ratio_vs_k(spec),
        ExperimentKind::SerVsRho => ser_vs_rho(spec),
        ExperimentKind::SerGainVsPower => ser_gain_vs_power(spec),
        ExperimentKind::K1VsK => k1_vs_k(spec),
        ExperimentKind::DecisionRegions => regions(spec),
    }
}

/// Runs the experiment and writes `<name>.csv`, `<name>.summary.json` and
/// any attachments (`<name>.<suffix>.json`) into `out_dir`.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<RunReport> {
    let start = Instant::now();
    let outcome = execute(spec)?;
    let elapsed_s = start.elapsed().as_secs_f64();
    fs::create_dir_all(out_dir).with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let csv = out_dir.join(format!("{}.csv", spec.name));
    fs::write(&csv, outcome.table.to_csv()?).with_context(|| format!("writing {}", csv.display()))?;

    let mut attachments = Vec::new();
    for (suffix, doc) in &outcome.attachments {
        let path = out_dir.join(format!("{}.{suffix}.json", spec.name));
        fs::write(&path, serde_json::to_vec_pretty(doc)?).with_context(|| format!("writing {}", path.display()))?;
        attachments.push(path);
    }

    let summary_doc = json!({
        "name": spec.name,
        "kind": spec.kind.as_str(),
        "figure": spec.figure,
        "seed": spec.seed,
        "csv": csv.file_name().and_then(|n| n.to_str()),
        "rows": outcome.table.rows.len(),
        "runtime_budget_s": spec.runtime_budget_s,
        "elapsed_s": elapsed_s,
        "results": outcome.results,
        "spec": spec,
    });
    let summary = out_dir.join(format!("{}.summary.json", spec.name));
    fs::write(&summary, serde_json::to_vec_pretty(&summary_doc)?)
        .with_context(|| format!("writing {}", summary.display()))?;

    Ok(RunReport {
        csv,
        summary,
        attachments,
        rows: outcome.table.rows.len(),
        elapsed_s,
    })
}

fn mi_vs_rho(spec: &ExperimentSpec) -> Result<Outcome> {
    let mut table = Table::new(MI_HEADER);
    let mut results = Vec::new();
    let rho = spec.rho_values();
    for (ci, (k, p, s1, s2)) in combos(spec).into_iter().enumerate() {
        let ch = ChannelRealization::identical(k, 1.0)?;
        let lb = LinkBudget::new(p, s1, s2)?;
        let grid = uniform_grid(k, &rho)?;
        let s = seed::derive(spec.seed, ci as u64);
        for &eval in &spec.estimator.mi {
            let g = joint_processing_gain_mi(&ch, &lb, &grid, mi_method(eval, spec.estimator.samples, spec.estimator.bins, s))?;
            let (samples, bins) = knob_columns(eval, spec);
            for (r, pt) in rho.iter().zip(&g.curve) {
                table.push(vec![
                    num(*r),
                    num(pt.bits),
                    num(pt.std_err),
                    samples.clone(),
                    bins.clone(),
                    int(s),
                    num(p),
                    num(s1),
                    num(s2),
                    k.to_string(),
                    eval.as_str().into(),
                ]);
            }
            let interior = !(g.argmax_rho.is_coherent() || g.argmax_rho.is_noncoherent());
            results.push(json!({
                "K": k, "P": p, "sigma1_sq": s1, "sigma2_sq": s2, "method": eval.as_str(),
                "argmax_rho": g.argmax_rho.rho()[0], "max_bits": g.best_bits, "gain": g.gain,
                "mi_coherent": g.mi_coherent, "mi_noncoherent": g.mi_noncoherent, "interior_maximum": interior,
            }));
        }
    }
    Ok(Outcome {
        table,
        results,
        attachments: Vec::new(),
    })
}

fn opt_rho_vs_power(spec: &ExperimentSpec) -> Result<Outcome> {
    let mut table = Table::new(&[
        "P",
        "sigma1_sq",
        "sigma2_sq",
        "K",
        "rho_opt",
        "mi_bits",
        "std_err",
        "rho_opt_formula",
        "gain",
        "samples",
        "bins",
        "seed",
    ]);
    let mut results = Vec::new();
    let rho = spec.rho_values();
    for (ci, (k, p, s1, s2)) in combos(spec).into_iter().enumerate() {
        let ch = ChannelRealization::identical(k, 1.0)?;
        let lb = LinkBudget::new(p, s1, s2)?;
        let grid = uniform_grid(k, &rho)?;
        let s = seed::derive(spec.seed, ci as u64);
        let mc = joint_processing_gain_mi(
            &ch,
            &lb,
            &grid,
            mi_method(MiEval::MonteCarlo, spec.estimator.samples, spec.estimator.bins, s),
        )?;
        let formula = joint_processing_gain_mi(&ch, &lb, &grid, MiMethod::Formula(HighSnrForm::Log))?;
        let best = mc
            .curve
            .iter()
            .find(|pt| pt.rho == mc.argmax_rho)
            .map(|pt| pt.std_err)
            .unwrap_or(0.0);
        let rho_opt = mc.argmax_rho.rho()[0];
        let rho_formula = formula.argmax_rho.rho()[0];
        table.push(vec![
            num(p),
            num(s1),
            num(s2),
            k.to_string(),
            num(rho_opt),
            num(mc.best_bits),
            num(best),
            num(rho_formula),
            num(mc.gain),
            int(spec.estimator.samples),
            spec.estimator.bins.to_string(),
            int(s),
        ]);
        results.push(json!({
            "K": k, "P": p, "sigma1_sq": s1, "sigma2_sq": s2,
            "rho_opt": rho_opt, "rho_opt_formula": rho_formula, "max_bits": mc.best_bits, "gain": mc.gain,
        }));
    }
    Ok(Outcome {
        table,
        results,
        attachments: Vec::new(),
    })
}

/// MI at one configuration; endpoints use closed forms (quadrature for
/// power detection under Monte Carlo, the lower bound under the formulas).
fn mi_at(ch: &ChannelRealization, cfg: &SplitConfig, lb: &LinkBudget, eval: MiEval, opts: HistogramOptions) -> Result<(f64, f64)> {
    if cfg.is_coherent() {
        return Ok((mi_coherent_closed_form(ch, lb), 0.0));
    }
    if cfg.is_noncoherent() {
        return Ok(match eval {
            MiEval::MonteCarlo => (mi_noncoherent_exact(ch, lb, 1e-9)?, 0.0),
            _ => (mi_noncoherent_lower_bound(ch, lb), 0.0),
        });
    }
    let theta = compute_theta(ch, cfg)?;
    Ok(match eval {
        MiEval::MonteCarlo => {
            let e = mi_mc_histogram_theta(theta, lb, &opts)?;
            (e.bits, e.std_err)
        }
        MiEval::FormulaEi => (mi_high_snr_theta(theta, lb, HighSnrForm::Ei)?, 0.0),
        MiEval::FormulaLog => (mi_high_snr_theta(theta, lb, HighSnrForm::Log)?, 0.0),
    })
}

fn mi_vs_power(spec: &ExperimentSpec) -> Result<Outcome> {
    let mut table = Table::new(&[
        "P",
        "sigma1_sq",
        "sigma2_sq",
        "K",
        "rho",
        "method",
        "mi_bits",
        "std_err",
        "mi_coherent",
        "mi_noncoherent",
        "mi_conventional",
    ]);
    let mut results = Vec::new();
    let rho = spec.rho_values();
    for (ci, (k, p, s1, s2)) in combos(spec).into_iter().enumerate() {
        let ch = ChannelRealization::identical(k, 1.0)?;
        let lb = LinkBudget::new(p, s1, s2)?;
        let s = seed::derive(spec.seed, ci as u64);
        let opts = HistogramOptions::new(spec.estimator.samples, spec.estimator.bins, s);
        for &eval in &spec.estimator.mi {
            let coh = mi_coherent_closed_form(&ch, &lb);
            let (non, _) = mi_at(&ch, &SplitConfig::noncoherent(k), &lb, eval, opts)?;
            let conventional = coh.max(non);
            for &r in &rho {
                let (bits, se) = mi_at(&ch, &SplitConfig::uniform(k, r)?, &lb, eval, opts)?;
                table.push(vec![
                    num(p),
                    num(s1),
                    num(s2),
                    k.to_string(),
                    num(r),
                    eval.as_str().into(),
                    num(bits),
                    num(se),
                    num(coh),
                    num(non),
                    num(conventional),
                ]);
                results.push(json!({
                    "K": k, "P": p, "sigma1_sq": s1, "sigma2_sq": s2, "rho": r, "method": eval.as_str(),
                    "mi_bits": bits, "improvement_bits": bits - conventional,
                }));
            }
        }
    }
    Ok(Outcome {
        table,
        results,
        attachments: Vec::new(),
    })
}

fn gain_vs_power(spec: &ExperimentSpec) -> Result<Outcome> {
    let mut table = Table::new(&[
        "P",
        "sigma1_sq",
        "sigma2_sq",
        "K",
        "method",
        "gain",
        "argmax_rho",
        "max_bits",
        "mi_coherent",
        "mi_noncoherent",
        "samples",
        "bins",
        "seed",
    ]);
    let mut results = Vec::new();
    let rho = spec.rho_values();
    for (ci, (k, p, s1, s2)) in combos(spec).into_iter().enumerate() {
        let ch = ChannelRealization::identical(k, 1.0)?;
        let lb = LinkBudget::new(p, s1, s2)?;
        let grid = uniform_grid(k, &rho)?;
        let s = seed::derive(spec.seed, ci as u64);
        for &eval in &spec.estimator.mi {
            let g = joint_processing_gain_mi(&ch, &lb, &grid, mi_method(eval, spec.estimator.samples, spec.estimator.bins, s))?;
            let (samples, bins) = knob_columns(eval, spec);
            table.push(vec![
                num(p),
                num(s1),
                num(s2),
                k.to_string(),
                eval.as_str().into(),
                num(g.gain),
                num(g.argmax_rho.rho()[0]),
                num(g.best_bits),
                num(g.mi_coherent),
                num(g.mi_noncoherent),
                samples,
                bins,
                int(s),
            ]);
            results.push(json!({
                "K": k, "P": p, "sigma1_sq": s1, "sigma2_sq": s2, "method": eval.as_str(),
                "gain": g.gain, "argmax_rho": g.argmax_rho.rho()[0],
            }));
        }
    }
    Ok(Outcome {
        table,
        results,
        attachments: Vec::new(),
    })
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Channel realization `r` for antenna count `k`; shared across powers and noise settings.
fn rayleigh(spec: &ExperimentSpec, k: usize, r: u64) -> Result<ChannelRealization> {
    Ok(sample_channel_iid_rayleigh(k, seed::derive(seed::derive(spec.seed, k as u64), r))?)
}

fn multi_antenna_mi(spec: &ExperimentSpec) -> Result<Outcome> {
    let mut table = Table::new(&[
        "K",
        "P",
        "sigma1_sq",
        "sigma2_sq",
        "method",
        "realizations",
        "mi_optimal",
        "se_optimal",
        "mi_simplified",
        "se_simplified",
        "mi_uniform_third",
        "se_uniform_third",
    ]);
    let mut results = Vec::new();
    let n = spec.estimator.realizations;
    for &k in &spec.sweep.k {
        // Ratio choices depend on the channel only, not on P or the noise.
        let configs: Vec<(ChannelRealization, [SplitConfig; 3])> = (0..n)
            .into_par_iter()
            .map(|r| {
                let ch = rayleigh(spec, k, r)?;
                let opts = P1Options {
                    seed: seed::derive(spec.seed, r),
                    ..Default::default()
                };
                let opt = solve_p1(&ch, &opts)?.rho;
                let simple = best_simplified_partition(&ch, AntennaOrdering::Given)?.split_config();
                Ok((ch, [opt, simple, SplitConfig::uniform(k, 1.0 / 3.0)?]))
            })
            .collect::<Result<_>>()?;
        for p in spec.power_values() {
            for (s1, s2) in noise_pairs(spec) {
                let lb = LinkBudget::new(p, s1, s2)?;
                for &eval in &spec.estimator.mi {
                    let form = if eval == MiEval::FormulaEi { HighSnrForm::Ei } else { HighSnrForm::Log };
                    let mut cols: [Vec<f64>; 3] = Default::default();
                    for (ch, cfgs) in &configs {
                        for (col, cfg) in cols.iter_mut().zip(cfgs) {
                            col.push(mi_high_snr_theta(compute_theta(ch, cfg)?, &lb, form)?);
                        }
                    }
                    let stats: Vec<(f64, f64)> = cols.iter().map(|c| mean_and_se(c)).collect();
                    table.push(vec![
                        k.to_string(),
                        num(p),
                        num(s1),
                        num(s2),
                        eval.as_str().into(),
                        int(n),
                        num(stats[0].0),
                        num(stats[0].1),
                        num(stats[1].0),
                        num(stats[1].1),
                        num(stats[2].0),
                        num(stats[2].1),
                    ]);
                    results.push(json!({
                        "K": k, "P": p, "sigma1_sq": s1, "sigma2_sq": s2, "method": eval.as_str(),
                        "mi_optimal": stats[0].0, "mi_simplified": stats[1].0, "mi_uniform_third": stats[2].0,
                    }));
                }
            }
        }
    }
    Ok(Outcome {
        table,
        results,
        attachments: Vec::new(),
    })
}

fn k1_ratio_vs_k(spec: &ExperimentSpec) -> Result<Outcome> {
    let mut table = Table::new(&["K", "realizations", "mean_k1_ratio", "std_err", "mean_k1", "seed"]);
    let mut results = Vec::new();
    let n = spec.estimator.realizations;
    for &k in &spec.sweep.k {
        let ratios: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|r| {
                let ch = rayleigh(spec, k, r)?;
                Ok(best_simplified_partition(&ch, AntennaOrdering::Given)?.k1 as f64 / k as f64)
            })
            .collect::<Result<_>>()?;
        let (mean, se) = mean_and_se(&ratios);
        table.push(vec![
            k.to_string(),
            int(n),
            num(mean),
            num(se),
            num(mean * k as f64),
            int(spec.seed),
        ]);
        results.push(json!({ "K": k, "mean_k1_ratio": mean, "std_err": se }));
    }
    Ok(Outcome {
        table,
        results,
        attachments: Vec::new(),
    })
}

pub(crate) struct SerValue {
    pub ser: f64,
    pub ci95: f64,
    pub errors: Option<u64>,
}

pub(crate) fn ser_at(c: &Constellation, theta: ThetaPair, lb: &LinkBudget, method: SerMethod, trials: u64, s: u64) -> Result<SerValue> {
    Ok(match method {
        SerMethod::MonteCarlo => {
            let r = ser_monte_carlo_theta(c, theta, lb, trials, s)?;
            SerValue {
                ser: r.ser,
                ci95: r.ci95_halfwidth,
                errors: Some(r.errors),
            }
        }
        SerMethod::ImportanceSampling => {
            let r = ser_importance_sampling(c, theta, lb, trials, s)?;
            SerValue {
                ser: r.ser,
                ci95: r.ci95_halfwidth,
                errors: None,
            }
        }
    })
}

pub(crate) fn method_name(m: SerMethod) -> &'static str {
    match m {
        SerMethod::MonteCarlo => "monte_carlo",
        SerMethod::ImportanceSampling => "importance_sampling",
    }
}

/// High-SNR approximation inside, exact conventional SER at the boundaries.
pub(crate) fn ser_reference(c: &Constellation, theta: ThetaPair, lb: &LinkBudget) -> Result<f64> {
    Ok(if theta.theta1 > 0.0 && theta.theta2 > 0.0 {
        ser_high_snr(c, theta, lb)?
    } else {
        ser_conventional_exact(c, theta, lb)?
    })
}

fn ser_vs_rho(spec: &ExperimentSpec) -> Result<Outcome> {
    let mut table = Table::new(SER_HEADER);
    let mut results = Vec::new();
    let rho = spec.rho_values();
    let method = spec.estimator.ser;
    let trials = spec.estimator.trials;
    let mut ci = 0u64;
    for cs in &spec.sweep.constellations {
        let c = make_constellation(cs.scheme, cs.m)?;
        for (k, p, s1, s2) in combos(spec) {
            let ch = ChannelRealization::identical(k, 1.0)?;
            let lb = LinkBudget::new(p, s1, s2)?;
            let combo_seed = seed::derive(spec.seed, ci);
            ci += 1;
            let points: Vec<(SerValue, f64)> = rho
                .par_iter()
                .enumerate()
                .map(|(i, &r)| {
                    let theta = compute_theta(&ch, &SplitConfig::uniform(k, r)?)?;
                    let v = ser_at(&c, theta, &lb, method, trials, seed::derive(combo_seed, i as u64))?;
                    Ok((v, ser_reference(&c, theta, &lb)?))
                })
                .collect::<Result<_>>()?;
            for (&r, (v, approx)) in rho.iter().zip(&points) {
                table.push(vec![
                    cs.scheme.to_string(),
                    cs.m.to_string(),
                    num(r),
                    num(p),
                    num(s1),
                    num(s2),
                    k.to_string(),
                    int(trials),
                    v.errors.map(|e| e.to_string()).unwrap_or_default(),
                    num(v.ser),
                    num(v.ci95),
                    num(*approx),
                    method_name(method).into(),
                ]);
            }
            let (imin, best) = points
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |b, (i, (v, _))| if v.ser < b.1 { (i, v.ser) } else { b });
            results.push(json!({
                "scheme": cs.scheme, "M": cs.m, "K": k, "P": p, "sigma1_sq": s1, "sigma2_sq": s2,
                "argmin_rho": rho[imin], "min_ser": best,
                "interior_minimum": rho[imin] > 0.0 && rho[imin] < 1.0,
            }));
        }
    }
    Ok(Outcome {
        table,
        results,
        attachments: Vec::new(),
    })
}

fn ser_gain_vs_power(spec: &ExperimentSpec) -> Result<Outcome> {
    let mut table = Table::new(&[
        "scheme",
        "M",
        "P",
        "sigma1_sq",
        "sigma2_sq",
        "K",
        "trials",
        "method",
        "gain",
        "argmin_rho",
        "min_ser",
        "endpoint_min_ser",
        "asymptotic_gain",
    ]);
    let mut results = Vec::new();
    let rho = spec.rho_values();
    let mut ci = 0u64;
    for cs in &spec.sweep.constellations {
        let c = make_constellation(cs.scheme, cs.m)?;
        for (k, p, s1, s2) in combos(spec) {
            let ch = ChannelRealization::identical(k, 1.0)?;
            let lb = LinkBudget::new(p, s1, s2)?;
            let grid = uniform_grid(k, &rho)?;
            let s = seed::derive(spec.seed, ci);
            ci += 1;
            let g = ser_joint_processing_gain(&c, &ch, &lb, &grid, spec.estimator.trials, s, spec.estimator.ser)?;
            let limit = asymptotic_ser_gain(cs.scheme, cs.m);
            table.push(vec![
                cs.scheme.to_string(),
                cs.m.to_string(),
                num(p),
                num(s1),
                num(s2),
                k.to_string(),
                int(spec.estimator.trials),
                method_name(spec.estimator.ser).into(),
                g.gain.map(num).unwrap_or_default(),
                num(g.argmin_rho.rho()[0]),
                num(g.min_ser),
                num(g.endpoint_min_ser),
                num(limit),
            ]);
            results.push(json!({
                "scheme": cs.scheme, "M": cs.m, "K": k, "P": p, "sigma1_sq": s1, "sigma2_sq": s2,
                "gain": g.gain, "argmin_rho": g.argmin_rho.rho()[0], "asymptotic_gain": limit,
                "needs_more_trials": g.needs_more_trials,
            }));
        }
    }
    Ok(Outcome {
        table,
        results,
        attachments: Vec::new(),
    })
}

/// SER-optimal number of CD antennas for one realization; strongest antennas go to CD.
fn best_k1(c: &Constellation, ch: &ChannelRealization, lb: &LinkBudget, method: SerMethod, trials: u64, s: u64) -> Result<usize> {
    let k = ch.k();
    let g = ch.power_gains();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| g[b].total_cmp(&g[a]));
    let mut best = (0, f64::INFINITY);
    for k1 in 0..=k {
        let mut rho = vec![0.0; k];
        for &i in &order[..k1] {
            rho[i] = 1.0;
        }
        let theta = compute_theta(ch, &SplitConfig::new(rho)?)?;
        let ser = if k1 == 0 || k1 == k {
            ser_conventional_exact(c, theta, lb)?
        } else {
            ser_at(c, theta, lb, method, trials, seed::derive(s, k1 as u64))?.ser
        };
        if ser < best.1 {
            best = (k1, ser);
        }
    }
    Ok(best.0)
}

fn k1_vs_k(spec: &ExperimentSpec) -> Result<Outcome> {
    let mut table = Table::new(&[
        "scheme",
        "M",
        "K",
        "P",
        "sigma1_sq",
        "sigma2_sq",
        "realizations",
        "trials",
        "method",
        "mean_k1",
        "std_err",
        "mean_k_minus_k1",
    ]);
    let mut results = Vec::new();
    let n = spec.estimator.realizations;
    for cs in &spec.sweep.constellations {
        let c = make_constellation(cs.scheme, cs.m)?;
        for (k, p, s1, s2) in combos(spec) {
            let lb = LinkBudget::new(p, s1, s2)?;
            let k1s: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|r| {
                    let ch = rayleigh(spec, k, r)?;
                    let s = seed::derive(seed::derive(spec.seed, 1 << 32 | k as u64), r);
                    Ok(best_k1(&c, &ch, &lb, spec.estimator.ser, spec.estimator.trials, s)? as f64)
                })
                .collect::<Result<_>>()?;
            let (mean, se) = mean_and_se(&k1s);
            table.push(vec![
                cs.scheme.to_string(),
                cs.m.to_string(),
                k.to_string(),
                num(p),
                num(s1),
                num(s2),
                int(n),
                int(spec.estimator.trials),
                method_name(spec.estimator.ser).into(),
                num(mean),
                num(se),
                num(k as f64 - mean),
            ]);
            results.push(json!({
                "scheme": cs.scheme, "M": cs.m, "K": k, "P": p, "sigma1_sq": s1, "sigma2_sq": s2,
                "mean_k1": mean, "mean_k_minus_k1": k as f64 - mean,
            }));
        }
    }
    Ok(Outcome {
        table,
        results,
        attachments: Vec::new(),
    })
}

fn regions(spec: &ExperimentSpec) -> Result<Outcome> {
    let mut table = Table::new(&[
        "scheme",
        "M",
        "rho",
        "P",
        "sigma1_sq",
        "sigma2_sq",
        "K",
        "symbol",
        "x",
        "y",
        "z",
        "neighbor",
        "normal_x",
        "normal_y",
        "normal_z",
        "offset",
    ]);
    let mut docs = Vec::new();
    let mut results = Vec::new();
    for cs in &spec.sweep.constellations {
        let c = make_constellation(cs.scheme, cs.m)?;
        for (k, p, s1, s2) in combos(spec) {
            let ch = ChannelRealization::identical(k, 1.0)?;
            let lb = LinkBudget::new(p, s1, s2)?;
            for r in spec.rho_values() {
                let theta = compute_theta(&ch, &SplitConfig::uniform(k, r)?)?;
                let rc = map_received(&c, theta, &lb);
                let regs = decision_regions(&rc);
                for reg in &regs {
                    for h in &reg.half_spaces {
                        table.push(vec![
                            cs.scheme.to_string(),
                            cs.m.to_string(),
                            num(r),
                            num(p),
                            num(s1),
                            num(s2),
                            k.to_string(),
                            reg.symbol.to_string(),
                            num(reg.point[0]),
                            num(reg.point[1]),
                            num(reg.point[2]),
                            h.neighbor.to_string(),
                            num(h.normal[0]),
                            num(h.normal[1]),
                            num(h.normal[2]),
                            num(h.offset),
                        ]);
                    }
                }
                results.push(json!({
                    "scheme": cs.scheme, "M": cs.m, "K": k, "P": p, "sigma1_sq": s1, "sigma2_sq": s2, "rho": r,
                    "symbols": regs.len(),
                }));
                docs.push(json!({
                    "scheme": cs.scheme, "M": cs.m, "K": k, "rho": r, "P": p, "sigma1_sq": s1, "sigma2_sq": s2,
                    "regions": regs,
                }));
            }
        }
    }
    Ok(Outcome {
        table,
        results,
        attachments: vec![("regions", Value::Array(docs))],
    })
}

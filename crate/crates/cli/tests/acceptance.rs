//! Acceptance criteria 1–12: one PASS/FAIL line each, non-zero exit on any failure.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::{E, PI};
use std::time::Instant;

use anyhow::Result;
use common::{e1_oracle, halfspace_decision, q_oracle, simpson_pieces};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use splitrx::mi::{
    joint_processing_gain_mi, mi_coherent_closed_form, mi_high_snr_theta, mi_mc_histogram, mi_noncoherent_exact,
    mi_noncoherent_lower_bound, uniform_rho_grid, HighSnrForm, HistogramOptions, MiMethod,
};
use splitrx::modem::*;
use splitrx::optimize::{best_simplified_partition, solve_p1, AntennaOrdering, P1Options};
use splitrx::special::{emg_pdf, exp_integral_e1, EmgParams};
use splitrx::{sample_channel_iid_rayleigh, seed, ChannelRealization, LinkBudget, SplitConfig, ThetaPair};
use splitrx_cli::{execute, list_experiments, with_workers};

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Result<Check> {
    Ok(Check { pass, detail })
}

fn theta(rho: f64) -> ThetaPair {
    ThetaPair {
        theta1: rho,
        theta2: (1.0 - rho) * (1.0 - rho),
    }
}

fn unit() -> ChannelRealization {
    ChannelRealization::from_magnitudes(&[1.0]).unwrap()
}

fn closed_forms() -> Result<Check> {
    let lb = LinkBudget::new(10.0, 1.0, 1.0)?;
    let coh = mi_coherent_closed_form(&unit(), &lb);
    let bound = mi_noncoherent_lower_bound(&unit(), &lb);
    let coh_ref = 11f64.log2();
    let bound_ref = 0.5 * (1.0 + 100.0 * E / (2.0 * PI)).log2();
    let pass = (coh - coh_ref).abs() <= 1e-12
        && (bound - bound_ref).abs() <= 1e-12
        && (coh_ref - 3.4594).abs() < 5e-5
        && (bound_ref - 2.7340).abs() < 5e-5;
    check(pass, format!("coherent {coh:.6} (3.4594), power-detection bound {bound:.6} (2.7340)"))
}

fn estimator_vs_closed_forms() -> Result<Check> {
    let lb = LinkBudget::new(10.0, 1.0, 1.0)?;
    let ch = unit();
    let n = 10_000_000;
    let at1 = mi_mc_histogram(&ch, &SplitConfig::coherent(1), &lb, n, 64, 2)?;
    let at0 = mi_mc_histogram(&ch, &SplitConfig::noncoherent(1), &lb, n, 64, 2)?;
    let coh = mi_coherent_closed_form(&ch, &lb);
    let exact0 = mi_noncoherent_exact(&ch, &lb, 1e-9)?;
    let bound0 = mi_noncoherent_lower_bound(&ch, &lb);
    let d1 = (at1.bits - coh).abs();
    let d0 = (at0.bits - exact0).abs();
    check(
        d1 < 0.1 && d0 < 0.1,
        format!(
            "rho=1: {:.4} vs {coh:.4} (|d|={d1:.4}); rho=0: {:.4} vs quadrature {exact0:.4} (|d|={d0:.4}); \
             lower bound {bound0:.4} sits {:.4} below the quadrature value",
            at1.bits,
            at0.bits,
            exact0 - bound0
        ),
    )
}

fn mi_interior_maximum() -> Result<Check> {
    let lb = LinkBudget::new(10.0, 1.0, 1.0)?;
    let grid = uniform_rho_grid(1, 0.05)?;
    let g = joint_processing_gain_mi(
        &unit(),
        &lb,
        &grid,
        MiMethod::MonteCarlo(HistogramOptions::new(10_000_000, 64, 4)),
    )?;
    let best = g
        .curve
        .iter()
        .filter(|p| !p.rho.is_coherent() && !p.rho.is_noncoherent())
        .max_by(|a, b| a.bits.total_cmp(&b.bits))
        .unwrap();
    let endpoint = g.mi_coherent.max(g.mi_noncoherent);
    let margin = best.bits - 3.0 * best.std_err;
    check(
        margin > endpoint,
        format!(
            "max {:.4} ± {:.4} at rho={:.2}; endpoints {:.4} / {:.4}; gain {:.4}",
            best.bits,
            best.std_err,
            best.rho.rho()[0],
            g.mi_coherent,
            g.mi_noncoherent,
            best.bits / endpoint
        ),
    )
}

fn optimal_ratio() -> Result<Check> {
    let lb = LinkBudget::new(100.0, 1.0, 1.0)?;
    let step = 1e-5;
    let n = (1.0 / step) as usize;
    let (mut arg, mut top) = (0.0, f64::NEG_INFINITY);
    for i in 1..n {
        let r = i as f64 * step;
        let v = mi_high_snr_theta(theta(r), &lb, HighSnrForm::Log)?;
        if v > top {
            (arg, top) = (r, v);
        }
    }
    let sol = solve_p1(&unit(), &P1Options::default())?;
    let closed = sol.rho.rho()[0];
    let g = joint_processing_gain_mi(
        &unit(),
        &lb,
        &uniform_rho_grid(1, 0.01)?,
        MiMethod::MonteCarlo(HistogramOptions::new(2_000_000, 64, 7)),
    )?;
    let mc = g.argmax_rho.rho()[0];
    let pass = (arg - 1.0 / 3.0).abs() <= step && (closed - 1.0 / 3.0).abs() < 1e-12 && (0.28..=0.38).contains(&mc);
    check(
        pass,
        format!("log-form grid optimum {arg:.5}, solver {closed:.12}, MC optimum at P=100 {mc:.2}"),
    )
}

fn formula_gain_trend() -> Result<Check> {
    let grid = uniform_rho_grid(1, 0.001)?;
    let gains = |s2: f64, form: HighSnrForm| -> Result<Vec<f64>> {
        [1e3, 1e4, 1e5]
            .iter()
            .map(|&p| Ok(joint_processing_gain_mi(&unit(), &LinkBudget::new(p, 1.0, s2)?, &grid, MiMethod::Formula(form))?.gain))
            .collect()
    };
    let s2 = E / (2.0 * PI);
    let ei = gains(s2, HighSnrForm::Ei)?;
    let log = gains(s2, HighSnrForm::Log)?;
    let unit_noise = gains(1.0, HighSnrForm::Ei)?;
    let ok = |g: &[f64]| g.windows(2).all(|w| w[1] > w[0]) && g[2] >= 1.45;
    let fmt = |g: &[f64]| g.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ");
    check(
        ok(&ei) && ok(&log),
        format!(
            "sigma2_sq=e/(2pi): Ei [{}], Log [{}]; sigma2_sq=1 Ei [{}] (info)",
            fmt(&ei),
            fmt(&log),
            fmt(&unit_noise)
        ),
    )
}

fn k1_fraction() -> Result<Check> {
    let realizations = 10_000u64;
    let mut parts = Vec::new();
    let mut pass = true;
    for k in [48usize, 64, 96] {
        let mut sum = 0.0;
        let mut sum_first = 0.0;
        for r in 0..realizations {
            let ch = sample_channel_iid_rayleigh(k, seed::derive(seed::derive(6, k as u64), r))?;
            let f = best_simplified_partition(&ch, AntennaOrdering::Given)?.k1 as f64 / k as f64;
            sum += f;
            if r < 1000 {
                sum_first += f;
            }
        }
        let mean = sum / realizations as f64;
        pass &= mean > 0.45 && mean < 0.55;
        parts.push(format!("K={k}: {mean:.4} (first 10^3: {:.4})", sum_first / 1000.0));
    }
    check(pass, format!("{} over {realizations} realizations", parts.join(", ")))
}

fn detector_oracle() -> Result<Check> {
    let c = make_constellation(Scheme::Qam, 16)?;
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let (mut agree, mut total) = (0u64, 0u64);
    for _ in 0..5 {
        let lb = LinkBudget::new(rng.random_range(5.0..300.0), rng.random_range(0.2..2.0), rng.random_range(0.2..2.0))?;
        let rc = map_received(&c, theta(rng.random_range(0.05..0.95)), &lb);
        let sd1 = (lb.sigma1_sq() / 2.0).sqrt();
        for _ in 0..20_000 {
            let p = rc.points()[rng.random_range(0..16)];
            let noise = |rng: &mut ChaCha20Rng, sd: f64| 3.0 * sd * rng.sample::<f64, _>(StandardNormal);
            let v = [p[0] + noise(&mut rng, sd1), p[1] + noise(&mut rng, sd1), p[2] + noise(&mut rng, lb.sigma2())];
            total += 1;
            if ml_detect(&rc, v) == halfspace_decision(rc.points(), lb.sigma1_sq(), lb.sigma2_sq(), v) {
                agree += 1;
            }
        }
    }
    check(agree == total, format!("{agree}/{total} observations agree"))
}

fn qam_classical(p: f64) -> f64 {
    let q = q_oracle((3.0 * p / 15.0).sqrt());
    3.0 * q - 2.25 * q * q
}

fn coherent_boundary_ser() -> Result<Check> {
    let c = make_constellation(Scheme::Qam, 16)?;
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, p) in [20.0, 40.0].into_iter().enumerate() {
        let lb = LinkBudget::new(p, 1.0, 1.0)?;
        let r = ser_monte_carlo_theta(&c, theta(1.0), &lb, 10_000_000, 80 + i as u64)?;
        let want = qam_classical(p);
        let dev = (r.ser - want).abs() / r.ci95_halfwidth;
        pass &= dev <= 3.0;
        parts.push(format!("P={p}: MC {:.5e} vs {want:.5e} ({dev:.2} half-widths)", r.ser));
    }
    check(pass, parts.join("; "))
}

fn ser_interior_minimum() -> Result<Check> {
    let c = make_constellation(Scheme::Qam, 16)?;
    let lb = LinkBudget::new(200.0, 1.0, 1.0)?;
    let rhos: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let curve: Vec<SerEstimate> = rhos
        .iter()
        .enumerate()
        .map(|(i, &r)| ser_importance_sampling(&c, theta(r), &lb, 2_000_000, seed::derive(9, i as u64)))
        .collect::<splitrx::Result<_>>()?;
    let imin = (0..curve.len()).min_by(|&a, &b| curve[a].ser.total_cmp(&curve[b].ser)).unwrap();
    let edge = [0, 20]
        .iter()
        .map(|&i| curve[i].ser - curve[i].ci95_halfwidth)
        .fold(f64::INFINITY, f64::min);
    let interior = imin > 0 && imin < 20 && curve[imin].ser + curve[imin].ci95_halfwidth < edge;
    let rho_star = rhos[imin];

    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for (i, &r) in rhos.iter().enumerate().filter(|&(_, &r)| r > 0.0 && r < rho_star) {
        let mc = ser_monte_carlo_theta(&c, theta(r), &lb, 10_000_000, seed::derive(90, i as u64))?;
        if mc.ser >= 1e-5 {
            let approx = ser_high_snr(&c, theta(r), &lb)?;
            worst = worst.max((approx / mc.ser - 1.0).abs());
            checked += 1;
        }
    }
    check(
        interior && checked > 0 && worst <= 0.3,
        format!(
            "IS minimum {:.4e} at rho*={rho_star:.2} (endpoints {:.4e}, {:.4e}); approximation worst rel. error {:.3} over {checked} MC points",
            curve[imin].ser, curve[0].ser, curve[20].ser, worst
        ),
    )
}

fn im_no_gain() -> Result<Check> {
    let c = make_constellation(Scheme::Im, 4)?;
    let lb = LinkBudget::new(30.0, 1.0, 1.0)?;
    let g = ser_joint_processing_gain(&c, &unit(), &lb, &uniform_rho_grid(1, 0.05)?, 200_000, 10, SerMethod::ImportanceSampling)?;
    let at0 = &g.curve[0];
    let gain = g.gain.unwrap_or(f64::INFINITY);
    check(
        gain <= 1.05 && g.min_ser >= at0.ser - at0.ci95_halfwidth,
        format!(
            "rho=0 SER {:.4e} ± {:.2e}; grid minimum {:.4e} at rho={:.2}; gain {gain:.4}",
            at0.ser,
            at0.ci95_halfwidth,
            g.min_ser,
            g.argmin_rho.rho()[0]
        ),
    )
}

fn special_functions() -> Result<Check> {
    let mut worst_e1: f64 = 0.0;
    for i in 0..=80 {
        let x = 10f64.powf(-6.0 + 8.0 * i as f64 / 80.0);
        worst_e1 = worst_e1.max((exp_integral_e1(x)? / e1_oracle(x) - 1.0).abs());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let mut worst_norm: f64 = 0.0;
    for _ in 0..20 {
        let s: f64 = 10f64.powf(rng.random_range(-1.0..3.0));
        let sd: f64 = 10f64.powf(rng.random_range(-1.0..1.5));
        let p = EmgParams::new(s, sd)?;
        let lo = -8.0 * sd;
        let hi = 50.0 * s + 8.0 * sd;
        let mut pts: Vec<f64> = (0..=400).map(|i| lo + (hi - lo) * i as f64 / 400.0).collect();
        pts.extend([0.0, s, 5.0 * s]);
        pts.sort_by(f64::total_cmp);
        let total = simpson_pieces(&|y| emg_pdf(&p, y), &pts, 1e-12);
        worst_norm = worst_norm.max((total - 1.0).abs());
    }
    check(
        worst_e1 <= 1e-10 && worst_norm <= 1e-6,
        format!("E1 worst rel. error {worst_e1:.2e} over 81 points; EMG worst |mass - 1| {worst_norm:.2e} over 20 pairs"),
    )
}

fn determinism() -> Result<Check> {
    let mut bad = Vec::new();
    let specs = list_experiments();
    for spec in &specs {
        let one = with_workers(Some(1), || execute(spec))??.table.to_csv()?;
        let three = with_workers(Some(3), || execute(spec))??.table.to_csv()?;
        if one != three {
            bad.push(spec.name.clone());
        }
    }
    check(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} built-ins byte-identical with 1 and 3 workers", specs.len())
        } else {
            format!("differing: {}", bad.join(", "))
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Check>); 12] = [
        ("closed forms", closed_forms),
        ("estimator vs closed forms", estimator_vs_closed_forms),
        ("interior MI maximum", mi_interior_maximum),
        ("optimal ratio 1/3", optimal_ratio),
        ("formula gain trend", formula_gain_trend),
        ("K1/K near 1/2", k1_fraction),
        ("detector oracle", detector_oracle),
        ("coherent-boundary SER", coherent_boundary_ser),
        ("SER interior minimum", ser_interior_minimum),
        ("no gain for IM", im_no_gain),
        ("special functions", special_functions),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match f() {
            Ok(c) => (c.pass, c.detail),
            Err(e) => (false, format!("error: {e:#}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} [{name}] {detail} ({:.1} s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

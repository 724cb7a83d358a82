mod common;

use common::{halfspace_decision, q_oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use splitrx::modem::*;
use splitrx::*;

fn theta(rho: f64) -> ThetaPair {
    ThetaPair {
        theta1: rho,
        theta2: (1.0 - rho) * (1.0 - rho),
    }
}

#[test]
fn detector_agrees_with_halfspace_oracle() {
    let c = make_constellation(Scheme::Qam, 16).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    for _ in 0..5 {
        let lb = LinkBudget::new(rng.random_range(5.0..300.0), rng.random_range(0.2..2.0), rng.random_range(0.2..2.0))
            .unwrap();
        let rc = map_received(&c, theta(rng.random_range(0.05..0.95)), &lb);
        let span = rc.points().iter().fold([0.0f64; 3], |m, p| {
            [m[0].max(p[0].abs()), m[1].max(p[1].abs()), m[2].max(p[2].abs())]
        });
        for _ in 0..20_000 {
            let v = [
                rng.random_range(-1.2 * span[0]..1.2 * span[0]),
                rng.random_range(-1.2 * span[1]..1.2 * span[1]),
                rng.random_range(-0.2 * span[2]..1.2 * span[2]),
            ];
            let want = halfspace_decision(rc.points(), lb.sigma1_sq(), lb.sigma2_sq(), v);
            assert_eq!(ml_detect(&rc, v), want);
        }
    }
}

#[test]
fn exported_regions_match_oracle_inequalities() {
    let c = make_constellation(Scheme::Qam, 36).unwrap();
    let lb = LinkBudget::new(80.0, 1.0, 0.3).unwrap();
    let rc = map_received(&c, theta(0.6), &lb);
    let regions = decision_regions(&rc);
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for _ in 0..5_000 {
        let v = [rng.random_range(-12.0..12.0), rng.random_range(-12.0..12.0), rng.random_range(-5.0..60.0)];
        let want = halfspace_decision(rc.points(), lb.sigma1_sq(), lb.sigma2_sq(), v);
        let inside: Vec<usize> = regions
            .iter()
            .filter(|r| r.half_spaces.iter().all(|h| h.slack(v) >= 0.0))
            .map(|r| r.symbol)
            .collect();
        assert_eq!(inside, vec![want]);
    }
    let json = serde_json::to_value(&regions).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 36);
    assert!(json[0]["half_spaces"][0]["normal"].is_array());
}

#[test]
fn detector_relabeling_invariance() {
    let c = make_constellation(Scheme::Pam, 8).unwrap();
    let lb = LinkBudget::new(40.0, 1.0, 1.0).unwrap();
    let rc = map_received(&c, theta(0.3), &lb);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let perm: Vec<usize> = vec![5, 2, 7, 0, 3, 1, 6, 4];
    let permuted: Vec<[f64; 3]> = perm.iter().map(|&i| rc.points()[i]).collect();
    for _ in 0..10_000 {
        let v = [rng.random_range(-8.0..8.0), rng.random_range(-1.0..1.0), rng.random_range(-2.0..30.0)];
        let a = ml_detect(&rc, v);
        let b = halfspace_decision(&permuted, 1.0, 1.0, v);
        assert_eq!(perm[b], a);
    }
}

#[test]
fn coherent_qam_matches_classical_formula() {
    let c = make_constellation(Scheme::Qam, 16).unwrap();
    let ch = ChannelRealization::from_magnitudes(&[1.0]).unwrap();
    let lb = LinkBudget::new(20.0, 1.0, 1.0).unwrap();
    let r = ser_monte_carlo(&c, &ch, &SplitConfig::coherent(1), &lb, 2_000_000, 9).unwrap();
    let q = q_oracle((3.0 * 20.0f64 / 15.0).sqrt());
    let want = 4.0 * 0.75 * q - 4.0 * 0.75 * 0.75 * q * q;
    assert!((r.ser - want).abs() < 3.0 * r.ci95_halfwidth, "{r:?} vs {want}");
    assert!((ser_qam_coherent_classical(16, 1.0, &lb) - want).abs() < 1e-12);
}

#[test]
fn power_detection_qam_floor() {
    // Distinct symbols sharing a power tier are indistinguishable.
    let c = make_constellation(Scheme::Qam, 16).unwrap();
    let mut tiers = std::collections::BTreeMap::new();
    for s in c.symbols() {
        *tiers.entry((s[0] * s[0] + s[1] * s[1]) as i64).or_insert(0usize) += 1;
    }
    let floor = tiers.values().map(|n| n - 1).sum::<usize>() as f64 / 16.0;
    let lb = LinkBudget::new(500.0, 1.0, 1.0).unwrap();
    let r = ser_monte_carlo_theta(&c, theta(0.0), &lb, 400_000, 4).unwrap();
    assert!(r.ser >= floor - 3.0 * r.ci95_halfwidth);
    assert!((r.ser - floor).abs() < 3.0 * r.ci95_halfwidth, "{r:?} vs {floor}");
}

#[test]
fn scaling_invariance_of_decisions_and_ser() {
    let c = make_constellation(Scheme::Qam, 16).unwrap();
    let base = LinkBudget::new(30.0, 1.0, 0.5).unwrap();
    let cs = 7.0;
    let scaled = LinkBudget::new(30.0 * cs, cs, 0.5 * cs * cs).unwrap();
    let a = ser_monte_carlo_theta(&c, theta(0.4), &base, 200_000, 12).unwrap();
    let b = ser_monte_carlo_theta(&c, theta(0.4), &scaled, 200_000, 12).unwrap();
    assert!((a.ser - b.ser).abs() < 3.0 * (a.ci95_halfwidth + b.ci95_halfwidth));
    let ra = map_received(&c, theta(0.4), &base);
    let rb = map_received(&c, theta(0.4), &scaled);
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let v = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-2.0..20.0)];
        let w = [v[0] * cs.sqrt(), v[1] * cs.sqrt(), v[2] * cs];
        assert_eq!(ml_detect(&ra, v), ml_detect(&rb, w));
    }
}

#[test]
fn asymptotic_gains() {
    assert_eq!(asymptotic_ser_gain(Scheme::Pam, 8), 7.0);
    assert_eq!(asymptotic_ser_gain(Scheme::Qam, 16), 3.0);
    assert_eq!(asymptotic_ser_gain(Scheme::Qam, 36), 5.0);
    assert_eq!(asymptotic_ser_gain(Scheme::Im, 4), 1.0);
}

#[test]
fn high_snr_ratio_approaches_asymptotic_gain() {
    // Ratio of the coherent SER to the high-SNR splitting SER as ρ → 1.
    let lb = LinkBudget::new(400.0, 1.0, 1.0).unwrap();
    let qam = make_constellation(Scheme::Qam, 16).unwrap();
    let split = ser_high_snr(&qam, theta(1.0 - 1e-9), &lb).unwrap();
    let coherent = ser_conventional_exact(&qam, theta(1.0), &lb).unwrap();
    assert!((coherent / split - 3.0).abs() < 1e-3, "{coherent} {split}");
    let pam = make_constellation(Scheme::Pam, 4).unwrap();
    let split = ser_high_snr(&pam, theta(1.0 - 1e-9), &lb).unwrap();
    let coherent = ser_conventional_exact(&pam, theta(1.0), &lb).unwrap();
    assert!((coherent / split - 3.0).abs() < 1e-3);
}

#[test]
fn u_shaped_ser_at_p200() {
    let c = make_constellation(Scheme::Qam, 16).unwrap();
    let lb = LinkBudget::new(200.0, 1.0, 1.0).unwrap();
    let sers: Vec<f64> = (0..=20)
        .map(|i| ser_importance_sampling(&c, theta(i as f64 * 0.05), &lb, 200_000, i).unwrap().ser)
        .collect();
    let (imin, _) = sers.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b });
    assert!(imin > 0 && imin < 20, "{sers:?}");
    assert!(sers[..=imin].windows(2).all(|w| w[1] < w[0]));
}

//! Splitting-ratio optimization: maximize `Θ₁·Θ₂` over `ρ ∈ [0,1]^K`, and the
//! binary (simplified receiver) antenna partition.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{compute_theta, ChannelRealization, LinkBudget, SplitConfig};
use crate::error::{contract, domain, Result};
use crate::seed;
use crate::special::EULER_GAMMA;

pub const DEFAULT_GRID_STEP: f64 = 0.01;
pub const DEFAULT_RESTARTS: usize = 64;
/// Largest `K` solved by exhaustive grid search.
pub const GRID_MAX_K: usize = 3;

const POLISH_TOL: f64 = 1e-14;
const POLISH_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ClosedFormK1,
    Grid,
    MultistartLocal,
}

/// Search controls for [`solve_p1`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P1Options {
    /// Grid step per axis for `K ≤ 3`.
    pub grid_step: f64,
    /// Random interior starting points for `K > 3`, in addition to the uniform point.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for P1Options {
    fn default() -> Self {
        Self {
            grid_step: DEFAULT_GRID_STEP,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSolution {
    pub rho: SplitConfig,
    /// `Θ₁·Θ₂` at `rho`.
    pub objective: f64,
    pub method: SolveMethod,
    /// All gains are zero, so every `ρ` is optimal; `rho` is the uniform point.
    pub degenerate: bool,
    /// Best binary (simplified-receiver) objective, for comparison with the interior optimum.
    pub best_binary_objective: f64,
}

/// `Θ₁·Θ₂` from power gains `g = |h|²`.
fn objective(g: &[f64], rho: &[f64]) -> f64 {
    let (t1, t2) = g.iter().zip(rho).fold((0.0, 0.0), |(a, b), (&g, &r)| {
        let s = 1.0 - r;
        (a + r * g, b + s * s * g * g)
    });
    t1 * t2
}

/// Maximizes `Θ₁·Θ₂` over the splitting ratios.
pub fn solve_p1(ch: &ChannelRealization, opts: &P1Options) -> Result<RatioSolution> {
    if !(opts.grid_step > 0.0 && opts.grid_step <= 0.5) {
        return Err(domain(format!("grid step must lie in (0, 0.5], got {}", opts.grid_step)));
    }
    let g = ch.power_gains();
    let k = g.len();
    let best_binary_objective = best_binary(&g);

    if g.iter().all(|&v| v == 0.0) {
        return Ok(RatioSolution {
            rho: SplitConfig::uniform(k, 1.0 / 3.0)?,
            objective: 0.0,
            method: if k == 1 { SolveMethod::ClosedFormK1 } else { SolveMethod::Grid },
            degenerate: true,
            best_binary_objective,
        });
    }

    let (rho, method) = if k == 1 {
        (vec![1.0 / 3.0], SolveMethod::ClosedFormK1)
    } else if k <= GRID_MAX_K {
        let mut rho = grid_search(&g, opts.grid_step);
        polish(&g, &mut rho);
        (rho, SolveMethod::Grid)
    } else {
        (multistart(&g, opts.restarts, opts.seed), SolveMethod::MultistartLocal)
    };
    let rho = SplitConfig::new(rho)?;
    let objective = compute_theta(ch, &rho)?.product();
    Ok(RatioSolution {
        rho,
        objective,
        method,
        degenerate: false,
        best_binary_objective,
    })
}

fn grid_search(g: &[f64], step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    let levels: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let k = g.len();
    let mut idx = vec![0usize; k];
    let mut best = (f64::NEG_INFINITY, vec![0.0; k]);
    let mut rho = vec![0.0; k];
    loop {
        for (r, &i) in rho.iter_mut().zip(&idx) {
            *r = levels[i];
        }
        let v = objective(g, &rho);
        if v > best.0 {
            best = (v, rho.clone());
        }
        // Odometer increment.
        let mut d = 0;
        loop {
            if d == k {
                return best.1;
            }
            idx[d] += 1;
            if idx[d] <= n {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Exact maximizer of the objective along coordinate `k`, others fixed.
///
/// With `s = 1 − ρₖ`, `a = gₖ`, `b = gₖ²`, `A = Σ_{j≠k} ρⱼgⱼ`, `C = Σ_{j≠k} (1−ρⱼ)²gⱼ²`,
/// the objective is `(A + a − a·s)(C + b·s²)`, whose stationary points solve
/// `3ab·s² − 2b(A + a)·s + aC = 0`.
fn best_coordinate(g: &[f64], rho: &[f64], k: usize) -> f64 {
    let a = g[k];
    if a == 0.0 {
        return rho[k];
    }
    let b = a * a;
    let (big_a, big_c) = g
        .iter()
        .zip(rho)
        .enumerate()
        .filter(|&(j, _)| j != k)
        .fold((0.0, 0.0), |(x, y), (_, (&g, &r))| (x + r * g, y + (1.0 - r).powi(2) * g * g));
    let f = |s: f64| (big_a + a - a * s) * (big_c + b * s * s);

    let mut candidates = vec![0.0, 1.0, 1.0 - rho[k]];
    let qa = 3.0 * a * b;
    let qb = -2.0 * b * (big_a + a);
    let qc = a * big_c;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // Numerically stable quadratic roots.
        let q = -0.5 * (qb + qb.signum() * sq);
        if q != 0.0 {
            candidates.push(q / qa);
            candidates.push(qc / q);
        } else {
            candidates.push(-qb / (2.0 * qa));
        }
    }
    let mut best_s = 1.0 - rho[k];
    let mut best_v = f(best_s);
    for s in candidates.into_iter().filter(|s| (0.0..=1.0).contains(s)) {
        let v = f(s);
        if v > best_v {
            best_v = v;
            best_s = s;
        }
    }
    1.0 - best_s
}

/// Cyclic exact coordinate ascent until the objective stops improving.
fn polish(g: &[f64], rho: &mut [f64]) {
    let mut current = objective(g, rho);
    for _ in 0..POLISH_MAX_SWEEPS {
        for k in 0..rho.len() {
            rho[k] = best_coordinate(g, rho, k);
        }
        let next = objective(g, rho);
        if next - current <= POLISH_TOL * next.abs() {
            break;
        }
        current = next;
    }
}

fn multistart(g: &[f64], restarts: usize, seed_value: u64) -> Vec<f64> {
    let k = g.len();
    let starts: Vec<Vec<f64>> = std::iter::once(vec![1.0 / 3.0; k])
        .chain((0..restarts).map(|r| {
            let mut rng = seed::stream_rng(seed_value, r as u64);
            (0..k).map(|_| rng.random_range(0.01..0.99)).collect()
        }))
        .collect();
    starts
        .into_par_iter()
        .map(|mut rho| {
            polish(g, &mut rho);
            (objective(g, &rho), rho)
        })
        .collect::<Vec<_>>()
        .into_iter()
        // First maximum in start order, so the result does not depend on scheduling.
        .fold((f64::NEG_INFINITY, Vec::new()), |best, cur| if cur.0 > best.0 { cur } else { best })
        .1
}

/// Best binary objective over partitions that send the `k1` strongest
/// antennas to CD, for every `k1`, and the reverse.
fn best_binary(g: &[f64]) -> f64 {
    if g.len() < 2 {
        return 0.0;
    }
    let mut sorted = g.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let asc: Vec<f64> = sorted.iter().rev().copied().collect();
    partition_scan(&sorted).1.max(partition_scan(&asc).1)
}

/// Ordering of antennas before the first `K₁` are wired to CD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntennaOrdering {
    /// Antennas in their given order.
    #[default]
    Given,
    /// Strongest antennas first (descending `|h|²`).
    SortedByGain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Number of antennas wired to CD.
    pub k1: usize,
    /// `Σ_{CD}|h|² · Σ_{PD}|h|⁴`.
    pub objective: f64,
    /// Antenna indices in the order used; the first `k1` go to CD.
    pub order: Vec<usize>,
}

impl Partition {
    /// The binary splitting configuration this partition induces.
    pub fn split_config(&self) -> SplitConfig {
        let mut rho = vec![0.0; self.order.len()];
        for &i in &self.order[..self.k1] {
            rho[i] = 1.0;
        }
        SplitConfig::new(rho).expect("binary ratios are valid")
    }
}

/// Returns `(argmax K₁, max)`; ties go to the smaller `K₁`.
fn partition_scan(g: &[f64]) -> (usize, f64) {
    let total4: f64 = g.iter().map(|v| v * v).sum();
    let mut cd = 0.0;
    let mut pd = total4;
    let mut best = (1, f64::NEG_INFINITY);
    for (i, &v) in g[..g.len() - 1].iter().enumerate() {
        cd += v;
        pd -= v * v;
        let obj = cd * pd.max(0.0);
        if obj > best.1 {
            best = (i + 1, obj);
        }
    }
    best
}

/// Exhaustive search over `K₁ = 1..K−1` for the simplified receiver.
pub fn best_simplified_partition(ch: &ChannelRealization, ordering: AntennaOrdering) -> Result<Partition> {
    let k = ch.k();
    if k < 2 {
        return Err(contract(format!("partitioning needs at least 2 antennas, got {k}")));
    }
    let g = ch.power_gains();
    let mut order: Vec<usize> = (0..k).collect();
    if ordering == AntennaOrdering::SortedByGain {
        order.sort_by(|&a, &b| g[b].total_cmp(&g[a]));
    }
    let ordered: Vec<f64> = order.iter().map(|&i| g[i]).collect();
    let (k1, _) = partition_scan(&ordered);
    let part = Partition {
        k1,
        objective: 0.0,
        order,
    };
    // Report the objective through the common Θ computation.
    let objective = compute_theta(ch, &part.split_config())?.product();
    Ok(Partition { objective, ..part })
}

/// Large-`K` mutual information of the simplified receiver with a `K/2` split:
/// `log₂(K·P^{3/2}·√(E|h|²·E|h|⁴)/(√2·σ₁σ₂)) − γ/(2 ln 2)`.
pub fn simplified_mi_large_k(lb: &LinkBudget, k: usize, moments: (f64, f64)) -> Result<f64> {
    let (m2, m4) = moments;
    if k == 0 {
        return Err(contract("antenna count must be positive"));
    }
    if !(m2 > 0.0 && m4 > 0.0) || !(lb.power() > 0.0) {
        return Err(domain("large-K formula needs positive moments and power"));
    }
    Ok(
        (k as f64 * lb.power().powf(1.5) * (m2 * m4).sqrt() / (std::f64::consts::SQRT_2 * lb.sigma1() * lb.sigma2()))
            .log2()
            - EULER_GAMMA / (2.0 * std::f64::consts::LN_2),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn opts() -> P1Options {
        P1Options::default()
    }

    #[test]
    fn single_antenna_closed_form() {
        for mag in [0.1, 1.0, 7.0] {
            let ch = ChannelRealization::from_magnitudes(&[mag]).unwrap();
            let s = solve_p1(&ch, &opts()).unwrap();
            assert_eq!(s.rho.rho(), &[1.0 / 3.0]);
            assert_eq!(s.method, SolveMethod::ClosedFormK1);
            assert!(!s.degenerate);
        }
    }

    #[test]
    fn degenerate_channel() {
        let ch = ChannelRealization::from_magnitudes(&[0.0, 0.0]).unwrap();
        let s = solve_p1(&ch, &opts()).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.objective, 0.0);
        assert_eq!(s.rho.rho()[0], s.rho.rho()[1]);
    }

    #[test]
    fn coordinate_step_is_optimal_along_its_axis() {
        let g = [1.3, 0.4, 2.2];
        let rho = [0.2, 0.7, 0.5];
        for k in 0..3 {
            let best = best_coordinate(&g, &rho, k);
            let mut trial = rho;
            trial[k] = best;
            let v = objective(&g, &trial);
            for i in 0..=1000 {
                trial[k] = i as f64 / 1000.0;
                assert!(objective(&g, &trial) <= v + 1e-12);
            }
        }
    }

    #[test]
    fn multistart_beats_starting_points() {
        let ch = sample_rayleigh(8, 3);
        let s = solve_p1(&ch, &opts()).unwrap();
        assert_eq!(s.method, SolveMethod::MultistartLocal);
        let g = ch.power_gains();
        assert!(s.objective >= objective(&g, &[1.0 / 3.0; 8]));
        assert!(s.objective >= s.best_binary_objective - 1e-12);
    }

    fn sample_rayleigh(k: usize, seed: u64) -> ChannelRealization {
        crate::channel::sample_channel_iid_rayleigh(k, seed).unwrap()
    }

    #[test]
    fn partition_identical_gains() {
        let ch = ChannelRealization::identical(40, 1.0).unwrap();
        let p = best_simplified_partition(&ch, AntennaOrdering::Given).unwrap();
        assert_eq!(p.k1, 20);
        assert_eq!(p.objective, 20.0 * 20.0);
        let ch = ChannelRealization::identical(2, 1.0).unwrap();
        assert_eq!(best_simplified_partition(&ch, AntennaOrdering::Given).unwrap().k1, 1);
        let ch = ChannelRealization::identical(1, 1.0).unwrap();
        assert!(best_simplified_partition(&ch, AntennaOrdering::Given).is_err());
    }

    #[test]
    fn partition_ties_prefer_smaller_k1() {
        // K = 3 identical gains: K₁ = 1 gives 1·2, K₁ = 2 gives 2·1.
        let ch = ChannelRealization::identical(3, 1.0).unwrap();
        assert_eq!(best_simplified_partition(&ch, AntennaOrdering::Given).unwrap().k1, 1);
    }

    #[test]
    fn sorted_partition_wires_strongest_to_cd() {
        let ch = ChannelRealization::from_magnitudes(&[0.5, 2.0, 1.0]).unwrap();
        let p = best_simplified_partition(&ch, AntennaOrdering::SortedByGain).unwrap();
        assert_eq!(p.order, vec![1, 2, 0]);
        assert_eq!(p.split_config().rho()[1], 1.0);
    }

    #[test]
    fn large_k_formula() {
        let lb = LinkBudget::new(100.0, 1.0, 1.0).unwrap();
        let v = simplified_mi_large_k(&lb, 64, (1.0, 2.0)).unwrap();
        assert!((v - 15.549_411_196_023_65).abs() < 1e-9, "{v}");
        let w = simplified_mi_large_k(&lb, 128, (1.0, 2.0)).unwrap();
        assert!((w - v - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn scale_covariance(mags in proptest::collection::vec(0.2f64..3.0, 2..=3), c in 0.3f64..4.0) {
            let ch = ChannelRealization::from_magnitudes(&mags).unwrap();
            let scaled: Vec<f64> = mags.iter().map(|m| m * c.sqrt()).collect();
            let ch2 = ChannelRealization::from_magnitudes(&scaled).unwrap();
            let a = solve_p1(&ch, &opts()).unwrap();
            let b = solve_p1(&ch2, &opts()).unwrap();
            prop_assert!((b.objective / a.objective - c.powi(3)).abs() < 1e-8 * c.powi(3));
            for (x, y) in a.rho.rho().iter().zip(b.rho.rho()) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }

        #[test]
        fn optimum_is_interior(mags in proptest::collection::vec(0.2f64..3.0, 1..=6)) {
            let ch = ChannelRealization::from_magnitudes(&mags).unwrap();
            let s = solve_p1(&ch, &opts()).unwrap();
            prop_assert!(!s.rho.is_coherent() && !s.rho.is_noncoherent());
            prop_assert!(s.objective > 0.0);
        }

        #[test]
        fn partition_matches_theta(mags in proptest::collection::vec(0.1f64..3.0, 2..12)) {
            let ch = ChannelRealization::from_magnitudes(&mags).unwrap();
            for ord in [AntennaOrdering::Given, AntennaOrdering::SortedByGain] {
                let p = best_simplified_partition(&ch, ord).unwrap();
                let t = compute_theta(&ch, &p.split_config()).unwrap();
                prop_assert!((t.product() - p.objective).abs() <= 1e-12 * p.objective.max(1.0));
            }
        }
    }
}

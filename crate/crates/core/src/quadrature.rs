//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_bound: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]` until the summed error estimate is below
/// `max(abs_tol, rel_tol·|value|)`, bisecting the worst segment each step.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<Quadrature> {
    integrate_breakpoints(f, &[a, b], abs_tol, rel_tol, max_segments)
}

/// Like [`integrate`] but starts from the segments delimited by `points` (sorted).
pub fn integrate_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<Quadrature> {
    if points.len() < 2 || points.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Contract(
            "quadrature breakpoints must be strictly increasing".into(),
        ));
    }
    let mut heap: BinaryHeap<Segment> = points.windows(2).map(|w| gk15(&f, w[0], w[1])).collect();
    let mut evaluations = 15 * heap.len();
    loop {
        let value: f64 = heap.iter().map(|s| s.value).sum();
        let error: f64 = heap.iter().map(|s| s.error).sum();
        if !value.is_finite() {
            return Err(Error::Numeric {
                reason: "integrand produced a non-finite value".into(),
                estimate: value,
                error_bound: error,
            });
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Quadrature {
                value,
                error_bound: error,
                evaluations,
            });
        }
        if heap.len() >= max_segments {
            return Err(Error::Numeric {
                reason: format!("no convergence within {max_segments} segments"),
                estimate: value,
                error_bound: error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(worst.a < mid && mid < worst.b) {
            return Err(Error::Numeric {
                reason: "segment cannot be bisected further".into(),
                estimate: value,
                error_bound: error,
            });
        }
        heap.push(gk15(&f, worst.a, mid));
        heap.push(gk15(&f, mid, worst.b));
        evaluations += 30;
    }
}

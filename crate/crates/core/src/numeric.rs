//! Adaptive quadrature and monotone root finding.
//!
//! The analysis layer integrates smooth-but-kinked integrands (piecewise
//! channel distributions, quantile-space energy integrands with an
//! integrable endpoint singularity), so the workhorse is an adaptive
//! Gauss–Kronrod 7–15 rule with a worst-interval-first refinement queue.
//! Interval endpoints are never evaluated, which keeps endpoint
//! singularities of the form u^(-a), a < 1, integrable without special
//! casing.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Kronrod-15 abscissae on [0, 1] (positive half, descending).
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_27,
    0.0,
];

/// Kronrod-15 weights, matching `XK`.
const WK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss-7 weights for the embedded rule (abscissae XK[1], XK[3], XK[5], XK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_67,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
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
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// One Gauss–Kronrod 7–15 application on [a, b]: (integral, error estimate).
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Segment {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (i, (&x, &wk)) in XK.iter().zip(WK.iter()).enumerate() {
        let dx = half * x;
        let fv = if x == 0.0 {
            f(mid)
        } else {
            f(mid - dx) + f(mid + dx)
        };
        kronrod += wk * fv;
        if i % 2 == 1 {
            gauss += WG[i / 2] * fv;
        }
    }
    kronrod *= half;
    gauss *= half;
    // QUADPACK-style damped error estimate; plain |K - G| is too
    // optimistic on smooth pieces and too pessimistic near kinks.
    let diff = (kronrod - gauss).abs();
    let error = if diff > 0.0 {
        (200.0 * diff).powf(1.5).min(diff)
    } else {
        0.0
    };
    Segment {
        a,
        b,
        value: kronrod,
        error: error.max(f64::EPSILON * kronrod.abs()),
    }
}

/// Adaptive integral of `f` over [a, b] to absolute tolerance `abs_tol`,
/// seeding the refinement queue with the supplied interior breakpoints
/// (known kink locations). Returns (value, error estimate).
pub fn integrate_with_breakpoints(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
) -> Result<(f64, f64)> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidInput(format!(
            "bad integration interval [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok((0.0, 0.0));
    }
    let mut edges: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(a);
    for &p in breakpoints {
        if p > a && p < b {
            edges.push(p);
        }
    }
    edges.push(b);
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
    edges.dedup();

    const MAX_SEGMENTS: usize = 40_000;
    let mut heap: BinaryHeap<Segment> = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        let seg = gk15(&mut f, w[0], w[1]);
        total += seg.value;
        total_err += seg.error;
        heap.push(seg);
    }

    let mut segments = heap.len();
    while total_err > abs_tol && segments < MAX_SEGMENTS {
        let worst = heap.pop().expect("heap cannot be empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution; its error estimate
            // is as good as it gets, so account for it and move on.
            total_err -= worst.error;
            total_err += worst.error.min(abs_tol / segments as f64);
            continue;
        }
        let left = gk15(&mut f, worst.a, mid);
        let right = gk15(&mut f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        segments += 1;
    }

    if total_err > abs_tol.max(1e-10 * total.abs()) && segments >= MAX_SEGMENTS {
        return Err(Error::NoConvergence {
            what: "adaptive quadrature",
            estimate: total_err,
            tolerance: abs_tol,
        });
    }
    Ok((total, total_err))
}

/// Adaptive integral of `f` over [a, b] to absolute tolerance `abs_tol`.
pub fn integrate(f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> Result<(f64, f64)> {
    integrate_with_breakpoints(f, a, b, &[], abs_tol)
}

/// Solves f(x) = target for a non-decreasing `f` by bisection on [lo, hi].
/// Requires f(lo) <= target <= f(hi). Terminates when the bracket width
/// falls below `rel_tol` relative to the bracket magnitude.
pub fn bisect_nondecreasing(
    mut f: impl FnMut(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
) -> Result<f64> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::InvalidInput(format!("bad bracket [{lo}, {hi}]")));
    }
    for _ in 0..256 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // floating-point resolution
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Grows `hi` geometrically from `start` until f(hi) >= target.
pub fn expand_upper(
    mut f: impl FnMut(f64) -> f64,
    target: f64,
    lo: f64,
    start: f64,
) -> Result<f64> {
    let mut hi = start.max(lo + 1.0);
    for _ in 0..256 {
        if f(hi) >= target {
            return Ok(hi);
        }
        hi = lo + 2.0 * (hi - lo);
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence {
        what: "upper bracket expansion",
        estimate: f64::INFINITY,
        tolerance: target,
    })
}

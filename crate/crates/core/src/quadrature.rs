//! Adaptive Gauss–Kronrod quadrature and sequence extrapolation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::Dyadic;

/// Values that can be integrated and extrapolated: a vector space with a norm.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn norm(&self) -> f64;
    fn is_finite(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::default()
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl QuadValue for Dyadic {
    fn zero() -> Self {
        Dyadic::zero()
    }
    fn norm(&self) -> f64 {
        self.max_abs()
    }
    fn is_finite(&self) -> bool {
        Dyadic::is_finite(self)
    }
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-11,
            max_intervals: 4000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn gk21<V: QuadValue>(f: &mut impl FnMut(f64) -> Result<V>, a: f64, b: f64) -> Result<(V, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kron = fc * WGK[10];
    let mut gauss = V::zero();
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        if !(f1.is_finite() && f2.is_finite()) {
            return Err(Error::QuadratureFail(format!(
                "non-finite integrand near x = {:e}",
                center + dx
            )));
        }
        let s = f1 + f2;
        kron = kron + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    if !fc.is_finite() {
        return Err(Error::QuadratureFail(format!(
            "non-finite integrand at x = {center:e}"
        )));
    }
    let value = kron * half;
    let err = ((kron - gauss) * half).norm();
    Ok((value, err))
}

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod (10-point Gauss, 21-point Kronrod) integration of
/// `f` over `[a, b]`, optionally pre-split at `breakpoints`.
///
/// Returns a result with `converged = false` instead of failing when the
/// interval budget runs out; only non-finite samples are errors.
pub fn integrate<V: QuadValue>(
    mut f: impl FnMut(f64) -> Result<V>,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult<V>> {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&x| x > a.min(b) && x < a.max(b)))
        .chain(std::iter::once(b))
        .collect();
    if a > b {
        pts[1..].sort_by(|x, y| y.total_cmp(x));
    } else {
        pts.sort_by(|x, y| x.total_cmp(y));
    }
    pts.dedup();

    let mut heap = BinaryHeap::new();
    let mut total = V::zero();
    let mut total_err = 0.0;
    let mut evals = 0;
    for w in pts.windows(2) {
        let (v, e) = gk21(&mut f, w[0], w[1])?;
        evals += 21;
        total = total + v;
        total_err += e;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }

    let tol = |t: &V| opts.abs_tol.max(opts.rel_tol * t.norm());
    while total_err > tol(&total) && heap.len() < opts.max_intervals {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid == worst.a || mid == worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk21(&mut f, worst.a, mid)?;
        let (v2, e2) = gk21(&mut f, mid, worst.b)?;
        evals += 42;
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }

    // Re-sum in position order so the result does not depend on heap layout.
    let mut segs = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segs.iter().fold(V::zero(), |acc, s| acc + s.value);
    let error: f64 = segs.iter().map(|s| s.error).sum();
    Ok(QuadResult {
        value,
        error,
        evaluations: evals,
        converged: error <= tol(&value),
    })
}

/// Polynomial extrapolation to `x = 0` through the samples `(x_i, y_i)`
/// (Neville's scheme). Returns the estimate and the magnitude of the last
/// correction as an error indicator.
pub fn extrapolate_to_zero<V: QuadValue>(xs: &[f64], ys: &[V]) -> (V, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let n = xs.len();
    let mut p: Vec<V> = ys.to_vec();
    let mut last_correction = f64::INFINITY;
    for k in 1..n {
        for i in 0..n - k {
            let (xi, xk) = (xs[i], xs[i + k]);
            // P_{i..i+k}(0) = (x_{i+k} P_{i..i+k-1} - x_i P_{i+1..i+k}) / (x_{i+k} - x_i)
            let updated = (p[i] * xk - p[i + 1] * xi) * (1.0 / (xk - xi));
            if i == 0 {
                last_correction = (updated - p[0]).norm();
            }
            p[i] = updated;
        }
    }
    (p[0], last_correction)
}

/// Richardson table for a sequence computed at steps `h, h/2, h/4, ...`
/// whose error expands in powers of `h^power_step` (2 for central differences).
///
/// Returns the most extrapolated value and the difference between the two
/// highest-order estimates.
pub fn richardson<V: QuadValue>(values: &[V], power_step: i32) -> (V, f64) {
    assert!(!values.is_empty());
    let mut table: Vec<V> = values.to_vec();
    let mut err = f64::INFINITY;
    for k in 1..values.len() {
        let factor = 2f64.powi(power_step * k as i32);
        let mut next = Vec::with_capacity(table.len() - 1);
        for i in 0..table.len() - 1 {
            next.push((table[i + 1] * factor - table[i]) * (1.0 / (factor - 1.0)));
        }
        err = (next[next.len() - 1] - table[table.len() - 1]).norm();
        table = next;
    }
    (table[0], err)
}

/// Wynn's epsilon algorithm applied to a scalar sequence; returns the
/// highest-order even-column estimate.
pub fn wynn_epsilon(seq: &[f64]) -> f64 {
    let n = seq.len();
    if n < 3 {
        return *seq.last().unwrap_or(&0.0);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = seq.to_vec();
    let mut best = seq[n - 1];
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            if diff == 0.0 || !diff.is_finite() {
                return best;
            }
            next.push(prev[i + 1] + 1.0 / diff);
        }
        col += 1;
        prev = cur;
        cur = next;
        if col % 2 == 0 {
            if let Some(&v) = cur.last() {
                if v.is_finite() {
                    best = v;
                }
            }
        }
    }
    best
}

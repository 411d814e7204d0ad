//! Adaptive Gauss–Kronrod (10/21) quadrature for complex-valued integrands.
//!
//! Panels are refined globally: the panel with the largest error estimate is
//! bisected until the summed estimate meets `max(abs_tol, rel_tol·|I|)`, or
//! the roundoff floor `50 ε ∫|f|`, whichever is larger.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("error estimate {estimate:e} above tolerance {tolerance:e} after {subdivisions} subdivisions")]
    Failure { estimate: f64, tolerance: f64, subdivisions: usize },
    #[error("integrand returned a non-finite value at t = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Roundoff floor as a multiple of `∫|f|`.
    pub roundoff: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-10, max_subdivisions: 1 << 16, roundoff: ROUNDOFF }
    }
}

impl QuadratureOptions {
    /// Tight tolerances for reference values.
    pub fn reference() -> Self {
        Self { abs_tol: 0.0, rel_tol: 1e-13, max_subdivisions: 1 << 18, roundoff: f64::EPSILON }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: C64,
    pub est_error: f64,
    /// `∫|f|`, the scale of the roundoff in `value`.
    pub abs_integral: f64,
    pub subdivisions: usize,
    pub evaluations: usize,
}

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

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

struct Panel {
    a: f64,
    b: f64,
    value: C64,
    error: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// QUADPACK's roundoff floor, `50 ε`.
pub const ROUNDOFF: f64 = 50.0 * f64::EPSILON;

/// Evaluates the 21-point rule on `[a, b]`. Nodes are passed to `f` as
/// `(anchor, offset)` with `anchor ∈ {a, b}` exact, so integrands with large
/// phases can be evaluated without the `ε·t` node-placement error.
fn gk21<F: Fn(f64, f64) -> C64>(f: &F, a: f64, b: f64) -> Result<(C64, f64, f64), QuadratureError> {
    let h = 0.5 * (b - a);
    let fc = f(a, h);
    if !(fc.re.is_finite() && fc.im.is_finite()) {
        return Err(QuadratureError::NonFinite(a + h));
    }
    let mut fv = [C64::new(0.0, 0.0); 21];
    fv[20] = fc;
    let mut kronrod = fc * WGK[10];
    let mut abs = fc.norm() * WGK[10];
    let mut gauss = C64::new(0.0, 0.0);
    for j in 0..10 {
        let off = h * (1.0 - XGK[j]);
        let (f1, f2) = (f(a, off), f(b, -off));
        if !(f1.re.is_finite() && f1.im.is_finite() && f2.re.is_finite() && f2.im.is_finite()) {
            return Err(QuadratureError::NonFinite(a + off));
        }
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        let s = f1 + f2;
        kronrod += s * WGK[j];
        abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut asc = (fc - mean).norm() * WGK[10];
    for j in 0..10 {
        asc += ((fv[2 * j] - mean).norm() + (fv[2 * j + 1] - mean).norm()) * WGK[j];
    }
    let (h_abs, asc) = (h.abs(), asc * h.abs());
    let mut err = ((kronrod - gauss) * h).norm();
    if asc > 0.0 && err > 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    Ok((kronrod * h, err, abs * h_abs))
}

/// Integrates `f` over consecutive panels separated by `breakpoints`
/// (sorted, including both endpoints).
pub fn integrate_panels<F>(
    f: F,
    breakpoints: &[f64],
    opts: QuadratureOptions,
) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> C64,
{
    integrate_panels_anchored(|a, o| f(a + o), breakpoints, opts)
}

/// As [`integrate_panels`], with `f(anchor, offset)` evaluated at
/// `t = anchor + offset` (see [`cis`]).
pub fn integrate_panels_anchored<F>(
    f: F,
    breakpoints: &[f64],
    opts: QuadratureOptions,
) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64, f64) -> C64,
{
    let mut heap = BinaryHeap::new();
    let mut total = C64::new(0.0, 0.0);
    let mut total_err = 0.0;
    let mut total_abs = 0.0;
    let mut evaluations = 0;
    for w in breakpoints.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, error, abs) = gk21(&f, w[0], w[1])?;
        evaluations += 21;
        total += value;
        total_err += error;
        total_abs += abs;
        heap.push(Panel { a: w[0], b: w[1], value, error, abs });
    }
    let mut subdivisions = 0;
    loop {
        let tolerance = opts.abs_tol.max(opts.rel_tol * total.norm()).max(opts.roundoff * total_abs);
        if total_err <= tolerance {
            break;
        }
        if subdivisions >= opts.max_subdivisions {
            return Err(QuadratureError::Failure { estimate: total_err, tolerance, subdivisions });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(QuadratureError::Failure { estimate: total_err, tolerance, subdivisions });
        }
        let (v1, e1, a1) = gk21(&f, worst.a, mid)?;
        let (v2, e2, a2) = gk21(&f, mid, worst.b)?;
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        total_abs += a1 + a2 - worst.abs;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1, abs: a1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2, abs: a2 });
        subdivisions += 1;
    }
    // Re-sum to drop the drift of the running updates.
    let value = compensated_sum(heap.iter().map(|p| p.value));
    let abs_integral: f64 = heap.iter().map(|p| p.abs).sum();
    let est_error = heap.iter().map(|p| p.error).sum::<f64>().max(opts.roundoff * abs_integral);
    Ok(QuadratureResult { value, est_error, abs_integral, subdivisions, evaluations })
}

/// Neumaier summation of complex terms.
pub fn compensated_sum(terms: impl Iterator<Item = C64>) -> C64 {
    let (mut s, mut c) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for x in terms {
        let t = s + x;
        c.re += if s.re.abs() >= x.re.abs() { (s.re - t.re) + x.re } else { (x.re - t.re) + s.re };
        c.im += if s.im.abs() >= x.im.abs() { (s.im - t.im) + x.im } else { (x.im - t.im) + s.im };
        s = t;
    }
    s + c
}

/// `e^{iw(a + o)}` with `w·a` formed as an exact two-term product.
pub fn cis(w: f64, a: f64, o: f64) -> C64 {
    let hi = w * a;
    let lo = w.mul_add(a, -hi) + w * o;
    C64::from_polar(1.0, hi) * C64::from_polar(1.0, lo)
}

/// `sin(w(a + o))` with the same compensation as [`cis`].
pub fn sin_anchored(w: f64, a: f64, o: f64) -> f64 {
    let hi = w * a;
    let lo = w.mul_add(a, -hi) + w * o;
    hi.sin() * lo.cos() + hi.cos() * lo.sin()
}

/// Integrates `f` over `[a, b]` split into `panels` equal pieces.
pub fn integrate<F>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    opts: QuadratureOptions,
) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> C64,
{
    let n = panels.max(1);
    let points: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
    integrate_panels(f, &points, opts)
}

//! Trajectory kernels for an atom crossing the cavity at constant speed.
//!
//! With `w = ω_κ ± Ω`, `b = k_κ v` and flight time `T = L / v`:
//!
//! * `I±,κ = ∫₀^T e^{iwt} sin(bt) dt`
//! * `C±,κ = ∫₀^T dt ∫₀^t dt′ e^{iw(t−t′)} sin(bt) sin(bt′)`
//!
//! Both have closed forms in terms of `p = w + b`, `q = w − b` and
//! `E = e^{iwT}(−1)^κ`, which equals `e^{iqT}` and `e^{ipT}` because
//! `bT = κπ`. Vacuum sums carry the mode normalisation `1/(k_γ L) = 1/(γπ)`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{cis, integrate_panels_anchored, sin_anchored, QuadratureError, QuadratureOptions};
use crate::units;

/// Relative distance to the removable singularity `w² = b²` below which the
/// resonance-limit path is reported.
pub const RESONANCE_DELTA: f64 = 1e-8;

/// Largest number of initial quadrature panels laid over a flight.
pub const MAX_PANELS: usize = 1 << 20;

/// Hard limit on the number of terms in a vacuum mode sum.
pub const MAX_MODE_TERMS: usize = 1_000_000;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegralError {
    #[error("invalid cavity setup: {0}")]
    Setup(String),
    #[error("switching slope ε = {epsilon:e} violates εT < 1 (εT = {product:e})")]
    Switching { epsilon: f64, product: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("mode sum not converged after {terms} terms (tail {tail:e}, partial sum {value:e})")]
    NonConvergence { terms: usize, tail: f64, value: f64 },
}

/// Cavity geometry, probed mode, atomic gap, speed and coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySetup {
    /// Cavity length `L`.
    pub l: f64,
    /// Probed mode index `β`.
    pub beta: usize,
    /// Atomic gap `Ω`; ignored when `resonant`.
    pub omega: f64,
    /// Speed as a fraction of `c`.
    pub v: f64,
    /// Coupling `λ`.
    pub lambda: f64,
    /// Tie `Ω` to `ω_β`.
    pub resonant: bool,
}

impl CavitySetup {
    pub fn new(l: f64, beta: usize, omega: f64, v: f64, lambda: f64, resonant: bool) -> Result<Self, IntegralError> {
        let setup = Self { l, beta, omega, v, lambda, resonant };
        setup.validate()?;
        Ok(setup)
    }

    /// Resonant setup: `Ω = ω_β`.
    pub fn resonant(l: f64, beta: usize, v: f64, lambda: f64) -> Result<Self, IntegralError> {
        Self::new(l, beta, beta as f64 * PI / l, v, lambda, true)
    }

    /// `L = 0.25`, `β = 2` resonant, `v = 1000 m/s`, `λ = 1e-4`.
    pub fn default_cavity() -> Self {
        let v = units::convert_units(1000.0).expect("1000 m/s is subluminal");
        Self::resonant(0.25, 2, v, 1e-4).expect("default setup is valid")
    }

    pub fn validate(&self) -> Result<(), IntegralError> {
        if !(self.l.is_finite() && self.l > 0.0) {
            return Err(IntegralError::Setup(format!("L must be positive, got {}", self.l)));
        }
        if self.beta < 1 {
            return Err(IntegralError::Setup("beta must be at least 1".into()));
        }
        if !(self.v > 0.0 && self.v < 1.0) {
            return Err(IntegralError::Setup(format!("v must lie in (0, 1), got {}", self.v)));
        }
        if !self.lambda.is_finite() {
            return Err(IntegralError::Setup(format!("lambda must be finite, got {}", self.lambda)));
        }
        if !self.resonant && !self.omega.is_finite() {
            return Err(IntegralError::Setup(format!("Omega must be finite, got {}", self.omega)));
        }
        if self.v > 0.01 {
            log::debug!("v = {} is not small compared with c", self.v);
        }
        Ok(())
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// `T = L / v`.
    pub fn flight_time(&self) -> f64 {
        self.l / self.v
    }

    /// `k_κ = κπ / L`, also `ω_κ`.
    pub fn wavenumber(&self, kappa: usize) -> f64 {
        kappa as f64 * PI / self.l
    }

    /// Effective atomic gap.
    pub fn gap(&self) -> f64 {
        if self.resonant {
            self.wavenumber(self.beta)
        } else {
            self.omega
        }
    }

    /// `w = ω_κ ± Ω`.
    pub fn detuning(&self, sign: Sign, kappa: usize) -> f64 {
        self.wavenumber(kappa) + sign.factor() * self.gap()
    }

    /// `b = k_κ v`.
    pub fn spatial_rate(&self, kappa: usize) -> f64 {
        kappa as f64 * PI * self.v / self.l
    }
}

/// `+` for the counter-rotating kernel `I₊`, `−` for the rotating-wave `I₋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMethod {
    ClosedForm,
    ResonantLimit,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: C64,
    pub method: KernelMethod,
    pub est_error: f64,
}

/// Linear switching `χ(t) = 1 − εt`, with `ε` in natural units (1/length).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SwitchingProfile {
    pub epsilon: f64,
}

impl SwitchingProfile {
    pub fn none() -> Self {
        Self { epsilon: 0.0 }
    }

    pub fn new(epsilon: f64) -> Self {
        Self { epsilon }
    }

    /// From a rate in 1/s.
    pub fn per_second(rate: f64) -> Result<Self, units::UnitsError> {
        Ok(Self { epsilon: units::rate_per_second_to_natural(rate)? })
    }

    pub fn chi(&self, t: f64) -> f64 {
        1.0 - self.epsilon * t
    }

    pub fn check(&self, setup: &CavitySetup) -> Result<(), IntegralError> {
        let product = self.epsilon * setup.flight_time();
        if !(self.epsilon >= 0.0 && product < 1.0) {
            return Err(IntegralError::Switching { epsilon: self.epsilon, product });
        }
        Ok(())
    }
}

/// Converged (or restricted) sum over vacuum modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSum {
    /// Real for `|I₊|²` sums, complex for `C₊*` sums.
    pub value: C64,
    pub terms_used: usize,
    pub tail_estimate: f64,
}

impl ModeSum {
    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }
}

/// Which vacuum sum to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumKind {
    /// `Σ_γ |I₊,γ|² / (k_γ L)`.
    AbsIPlusSq,
    /// `Σ_γ C₊,γ* / (k_γ L)`.
    CPlusConj,
}

/// Kinematic quantities of one kernel.
#[derive(Debug, Clone, Copy)]
struct Kin {
    w: f64,
    b: f64,
    t: f64,
    kappa: usize,
}

impl Kin {
    fn new(setup: &CavitySetup, sign: Sign, kappa: usize) -> Self {
        Self { w: setup.detuning(sign, kappa), b: setup.spatial_rate(kappa), t: setup.flight_time(), kappa }
    }

    fn near_singular(&self) -> bool {
        ((self.w - self.b) * (self.w + self.b)).abs() < RESONANCE_DELTA * self.b * self.b
    }

    /// `E − 1` and `E`.
    fn e_minus_one(&self) -> (C64, C64) {
        let (p, q) = (self.w + self.b, self.w - self.b);
        let d = if q.abs() <= p.abs() { q } else { p };
        let em1 = if (d * self.t).abs() < PI {
            expm1_prod(d, self.t)
        } else if self.kappa.is_multiple_of(2) {
            expm1_prod(self.w, self.t)
        } else {
            -expm1_prod(self.w, self.t) - 2.0
        };
        (em1, em1 + 1.0)
    }

    /// `I = b (E − 1) / (pq)`, dividing the small factor first.
    fn i_closed(&self) -> C64 {
        let (p, q) = (self.w + self.b, self.w - self.b);
        let (d, other) = if q.abs() <= p.abs() { (q, p) } else { (p, q) };
        if (d * self.t).abs() < PI {
            self.b * phi1(d, self.t) / other
        } else {
            let (em1, _) = self.e_minus_one();
            self.b * em1 / (p * q)
        }
    }

    /// `∫₀^T t e^{iwt} sin(bt) dt = bTE/(pq) + 2iwb(E − 1)/(pq)²`.
    fn j_closed(&self) -> C64 {
        let pq = (self.w - self.b) * (self.w + self.b);
        let (em1, e) = self.e_minus_one();
        self.b * self.t * e / pq + I * (2.0 * self.w * self.b) * em1 / (pq * pq)
    }

    /// `C = (iwT/2 − bI) / (w² − b²)`.
    fn c_closed(&self) -> C64 {
        let pq = (self.w - self.b) * (self.w + self.b);
        (I * (0.5 * self.w * self.t) - self.b * self.i_closed()) / pq
    }

    /// Breakpoints at the nodes of `sin(bt)`, refined so that each panel
    /// spans at most 0.6 periods of the fastest phase `rate`. Whole periods
    /// would line up the per-panel rule errors.
    fn panels(&self, rate: f64) -> Vec<f64> {
        let node = self.t / self.kappa as f64;
        let per_node = ((rate * node / (1.2 * PI)).ceil() as usize).max(1);
        let per_node = per_node.min((MAX_PANELS / self.kappa).max(1));
        let n = self.kappa * per_node;
        (0..=n).map(|j| self.t * j as f64 / n as f64).collect()
    }
}

/// `e^{ix} − 1` without cancellation.
fn expm1_i(x: f64) -> C64 {
    let s = (0.5 * x).sin();
    C64::new(-2.0 * s * s, x.sin())
}

/// `(e^{ixT} − 1) / x`, equal to `iT` at `x = 0`.
fn phi1(x: f64, t: f64) -> C64 {
    let z = x * t;
    if z.abs() < 1e-4 {
        I * t * (1.0 + I * z / 2.0 - z * z / 6.0 - I * z * z * z / 24.0)
    } else {
        expm1_prod(x, t) / x
    }
}

/// `(e^{ixt} − 1) / (ix)` at `t = a + o`, equal to `t` at `x = 0`.
fn e1_anchored(x: f64, a: f64, o: f64) -> C64 {
    let t = a + o;
    if (x * t).abs() < 1e-4 {
        -I * phi1(x, t)
    } else {
        (cis(x, a, o) - 1.0) / (I * x)
    }
}

/// `e^{ix} − 1` for `x = hi + lo`, keeping `lo` exact.
fn expm1_i2(hi: f64, lo: f64) -> C64 {
    expm1_i(hi) + C64::from_polar(1.0, hi) * expm1_i(lo)
}

/// `e^{ixT} − 1` with `x·T` formed as an exact two-term product.
fn expm1_prod(x: f64, t: f64) -> C64 {
    let hi = x * t;
    expm1_i2(hi, x.mul_add(t, -hi))
}

fn closed_error(kin: &Kin, value: C64) -> f64 {
    f64::EPSILON * value.norm() * (4.0 + (kin.w * kin.t).abs())
}

/// `I±,κ` by closed form, or its analytic limit next to `w² = b²`.
pub fn kernel_i(setup: &CavitySetup, sign: Sign, kappa: usize) -> KernelValue {
    let kin = Kin::new(setup, sign, kappa);
    let value = kin.i_closed();
    let method = if kin.near_singular() { KernelMethod::ResonantLimit } else { KernelMethod::ClosedForm };
    KernelValue { value, method, est_error: closed_error(&kin, value) }
}

/// `I±,κ` by adaptive quadrature of the defining integral.
pub fn kernel_i_quadrature(
    setup: &CavitySetup,
    sign: Sign,
    kappa: usize,
    opts: QuadratureOptions,
) -> Result<KernelValue, IntegralError> {
    switched_quadrature(setup, sign, kappa, SwitchingProfile::none(), opts)
}

/// `∫₀^T (1 − εt) e^{iwt} sin(bt) dt` by adaptive quadrature.
pub fn kernel_i_switched(
    setup: &CavitySetup,
    sign: Sign,
    kappa: usize,
    profile: SwitchingProfile,
) -> Result<KernelValue, IntegralError> {
    profile.check(setup)?;
    switched_quadrature(setup, sign, kappa, profile, QuadratureOptions::default())
}

fn switched_quadrature(
    setup: &CavitySetup,
    sign: Sign,
    kappa: usize,
    profile: SwitchingProfile,
    opts: QuadratureOptions,
) -> Result<KernelValue, IntegralError> {
    let kin = Kin::new(setup, sign, kappa);
    let breaks = kin.panels(kin.w.abs());
    let eps = profile.epsilon;
    let r = integrate_panels_anchored(
        |a, o| cis(kin.w, a, o) * ((1.0 - eps * (a + o)) * sin_anchored(kin.b, a, o)),
        &breaks,
        opts,
    )?;
    Ok(KernelValue { value: r.value, method: KernelMethod::Quadrature, est_error: r.est_error })
}

/// Switched kernel `I − εJ` from the closed forms of `I` and
/// `J = ∫ t e^{iwt} sin(bt) dt`, with quadrature next to `w² = b²`.
pub fn kernel_i_switched_closed(
    setup: &CavitySetup,
    sign: Sign,
    kappa: usize,
    profile: SwitchingProfile,
) -> Result<KernelValue, IntegralError> {
    profile.check(setup)?;
    let kin = Kin::new(setup, sign, kappa);
    let pq = (kin.w - kin.b) * (kin.w + kin.b);
    if profile.epsilon != 0.0 && pq.abs() < 1e-4 * kin.b * kin.b {
        return switched_quadrature(setup, sign, kappa, profile, QuadratureOptions::default());
    }
    let i = kin.i_closed();
    if profile.epsilon == 0.0 {
        return Ok(kernel_i(setup, sign, kappa));
    }
    let j = kin.j_closed();
    let value = i - profile.epsilon * j;
    let scale = i.norm() + profile.epsilon * j.norm();
    Ok(KernelValue {
        value,
        method: KernelMethod::ClosedForm,
        est_error: f64::EPSILON * scale * (4.0 + (kin.w * kin.t).abs()),
    })
}

/// `C±,κ` with the inner integral in closed form and the outer one by
/// adaptive quadrature.
pub fn kernel_c(setup: &CavitySetup, sign: Sign, kappa: usize) -> Result<KernelValue, IntegralError> {
    kernel_c_with(setup, sign, kappa, QuadratureOptions::default())
}

pub fn kernel_c_with(
    setup: &CavitySetup,
    sign: Sign,
    kappa: usize,
    opts: QuadratureOptions,
) -> Result<KernelValue, IntegralError> {
    let kin = Kin::new(setup, sign, kappa);
    let (p, q) = (kin.w + kin.b, kin.w - kin.b);
    let inner = |a: f64, o: f64| (e1_anchored(-q, a, o) - e1_anchored(-p, a, o)) / (2.0 * I);
    let breaks = kin.panels(kin.w.abs() + 2.0 * kin.b);
    let r =
        integrate_panels_anchored(|a, o| cis(kin.w, a, o) * sin_anchored(kin.b, a, o) * inner(a, o), &breaks, opts)?;
    Ok(KernelValue { value: r.value, method: KernelMethod::Quadrature, est_error: r.est_error })
}

/// `C±,κ` in closed form; falls back to [`kernel_c`] next to `w² = b²`.
pub fn kernel_c_closed(setup: &CavitySetup, sign: Sign, kappa: usize) -> Result<KernelValue, IntegralError> {
    let kin = Kin::new(setup, sign, kappa);
    let pq = (kin.w - kin.b) * (kin.w + kin.b);
    if pq.abs() < 1e-4 * kin.b * kin.b {
        return kernel_c(setup, sign, kappa);
    }
    let value = kin.c_closed();
    Ok(KernelValue { value, method: KernelMethod::ClosedForm, est_error: closed_error(&kin, value) })
}

/// Summand of a vacuum sum, before the `1/(γπ)` normalisation.
fn sum_term(setup: &CavitySetup, kind: SumKind, gamma: usize, profile: SwitchingProfile) -> Result<C64, IntegralError> {
    match kind {
        SumKind::AbsIPlusSq => {
            let i = if profile.epsilon == 0.0 {
                kernel_i(setup, Sign::Plus, gamma).value
            } else {
                kernel_i_switched_closed(setup, Sign::Plus, gamma, profile)?.value
            };
            Ok(C64::new(i.norm_sqr(), 0.0))
        }
        SumKind::CPlusConj => Ok(kernel_c_closed(setup, Sign::Plus, gamma)?.value.conj()),
    }
}

/// Large-γ limit of `C₊,γ*/(γπ)` is `K/γ²` with
/// `K = −iTL / (2π²(1 − v²))`; `K/(γ(γ+1))` telescopes to `K`.
fn c_asymptote(setup: &CavitySetup) -> C64 {
    -I * setup.flight_time() * setup.l / (2.0 * PI * PI * (1.0 - setup.v * setup.v))
}

/// Vacuum sum over all modes `γ ≥ 1`.
pub fn vacuum_mode_sum(setup: &CavitySetup, kind: SumKind, rel_tol: f64) -> Result<ModeSum, IntegralError> {
    vacuum_mode_sum_switched(setup, kind, rel_tol, SwitchingProfile::none())
}

/// Vacuum sum with switched `I₊` kernels (`C` sums ignore the profile).
pub fn vacuum_mode_sum_switched(
    setup: &CavitySetup,
    kind: SumKind,
    rel_tol: f64,
    profile: SwitchingProfile,
) -> Result<ModeSum, IntegralError> {
    if rel_tol.is_nan() || rel_tol <= 0.0 {
        return Err(IntegralError::Setup(format!("rel_tol must be positive, got {rel_tol}")));
    }
    profile.check(setup)?;
    let (offset, k) = match kind {
        SumKind::AbsIPlusSq => (C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
        SumKind::CPlusConj => {
            let k = c_asymptote(setup);
            (k, k)
        }
    };
    let mut sum = offset;
    let mut mags: Vec<f64> = Vec::with_capacity(4096);
    let mut next_check = 640usize;
    let mut gamma = 0usize;
    let mut last_tail = f64::INFINITY;
    while gamma < MAX_MODE_TERMS {
        gamma += 1;
        let g = gamma as f64;
        let term = sum_term(setup, kind, gamma, profile)? / (g * PI) - k / (g * (g + 1.0));
        sum += term;
        mags.push(term.norm());
        if gamma == next_check {
            if let Some(tail) = tail_estimate(&mags) {
                last_tail = tail;
                if tail <= rel_tol * sum.norm() {
                    return Ok(ModeSum { value: sum, terms_used: gamma, tail_estimate: tail });
                }
            }
            next_check = (next_check as f64 * 1.25) as usize;
        }
    }
    Err(IntegralError::NonConvergence { terms: gamma, tail: last_tail, value: sum.norm() })
}

/// Power-law tail `Σ_{γ>N} A γ^{−p} ≈ A N^{1−p}/(p − 1)` from a least-squares
/// fit of `log` block means over 32 geometric blocks spanning the last decade.
/// `None` when the fitted exponent does not exceed 1.
pub fn tail_estimate(mags: &[f64]) -> Option<f64> {
    let n = mags.len();
    if n < 320 {
        return None;
    }
    let lo = n as f64 / 10.0;
    let mut xs = Vec::with_capacity(32);
    let mut ys = Vec::with_capacity(32);
    let mut bounds = Vec::with_capacity(32);
    for j in 0..32 {
        let a = (lo * 10f64.powf(j as f64 / 32.0)).round() as usize;
        let b = (lo * 10f64.powf((j + 1) as f64 / 32.0)).round() as usize;
        let b = b.min(n);
        if b <= a {
            continue;
        }
        // Indices are 0-based, mode numbers 1-based.
        let mean = mags[a..b].iter().sum::<f64>() / (b - a) as f64;
        if mean > 0.0 {
            xs.push((0.5 * (a + b) as f64 + 0.5).ln());
            ys.push(mean.ln());
            bounds.push((a, b));
        }
    }
    if xs.len() < 8 {
        return if mags[n - n / 10..].iter().all(|&m| m == 0.0) { Some(0.0) } else { None };
    }
    let (mut slope, mut intercept) = linear_fit(&xs, &ys);
    if -slope > 1.0 {
        // Place each block at the abscissa where γ^{−p} equals its block mean.
        for (x, &(a, b)) in xs.iter_mut().zip(&bounds) {
            let p = -slope;
            let mean = (a + 1..=b).map(|g| (g as f64).powf(-p)).sum::<f64>() / (b - a) as f64;
            *x = -mean.ln() / p;
        }
        (slope, intercept) = linear_fit(&xs, &ys);
    }
    let p = -slope;
    if p <= 1.0 {
        return None;
    }
    let a = intercept.exp();
    Some(a * (n as f64 + 0.5).powf(1.0 - p) / (p - 1.0))
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Vacuum sum restricted to an explicit mode set.
pub fn mode_sum_over(setup: &CavitySetup, kind: SumKind, modes: &[usize]) -> Result<C64, IntegralError> {
    mode_sum_over_switched(setup, kind, modes, SwitchingProfile::none())
}

pub fn mode_sum_over_switched(
    setup: &CavitySetup,
    kind: SumKind,
    modes: &[usize],
    profile: SwitchingProfile,
) -> Result<C64, IntegralError> {
    let mut sum = C64::new(0.0, 0.0);
    for &gamma in modes {
        sum += sum_term(setup, kind, gamma, profile)? / (gamma as f64 * PI);
    }
    Ok(sum)
}

/// Which modes the vacuum sums run over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeSet {
    /// All `γ ≥ 1`, truncated by the tail criterion.
    All,
    /// Exactly these modes (oracle comparisons).
    Restricted(Vec<usize>),
}

/// Kernels of a single mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeKernels {
    pub kappa: usize,
    pub i_plus: KernelValue,
    pub i_minus: KernelValue,
    pub c_plus: KernelValue,
    pub c_minus: KernelValue,
}

impl ModeKernels {
    pub fn compute(setup: &CavitySetup, kappa: usize) -> Result<Self, IntegralError> {
        Ok(Self {
            kappa,
            i_plus: kernel_i(setup, Sign::Plus, kappa),
            i_minus: kernel_i(setup, Sign::Minus, kappa),
            c_plus: kernel_c_closed(setup, Sign::Plus, kappa)?,
            c_minus: kernel_c_closed(setup, Sign::Minus, kappa)?,
        })
    }

    pub fn compute_switched(
        setup: &CavitySetup,
        kappa: usize,
        profile: SwitchingProfile,
    ) -> Result<Self, IntegralError> {
        let mut k = Self::compute(setup, kappa)?;
        k.i_plus = kernel_i_switched_closed(setup, Sign::Plus, kappa, profile)?;
        k.i_minus = kernel_i_switched_closed(setup, Sign::Minus, kappa, profile)?;
        Ok(k)
    }
}

/// Kernels of the probed mode plus both vacuum sums, built once per setup
/// and shared read-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionKernels {
    pub setup: CavitySetup,
    pub profile: SwitchingProfile,
    pub modes: ModeSet,
    pub probed: ModeKernels,
    /// `Σ_γ |I₊,γ|² / (γπ)`.
    pub vacuum_i: ModeSum,
    /// `Σ_γ C₊,γ* / (γπ)`.
    pub vacuum_c: ModeSum,
}

impl TransitionKernels {
    pub fn build(setup: &CavitySetup, rel_tol: f64) -> Result<Self, IntegralError> {
        Self::build_switched(setup, rel_tol, SwitchingProfile::none())
    }

    pub fn build_switched(setup: &CavitySetup, rel_tol: f64, profile: SwitchingProfile) -> Result<Self, IntegralError> {
        setup.validate()?;
        let (vi, vc) = rayon::join(
            || vacuum_mode_sum_switched(setup, SumKind::AbsIPlusSq, rel_tol, profile),
            || vacuum_mode_sum(setup, SumKind::CPlusConj, rel_tol),
        );
        Ok(Self {
            setup: *setup,
            profile,
            modes: ModeSet::All,
            probed: ModeKernels::compute_switched(setup, setup.beta, profile)?,
            vacuum_i: vi?,
            vacuum_c: vc?,
        })
    }

    /// Vacuum sums over `modes` only; `modes` must contain `β`.
    pub fn restricted(setup: &CavitySetup, modes: &[usize]) -> Result<Self, IntegralError> {
        setup.validate()?;
        if !modes.contains(&setup.beta) {
            return Err(IntegralError::Setup(format!("mode set {modes:?} must contain beta = {}", setup.beta)));
        }
        let exact = |value| ModeSum { value, terms_used: modes.len(), tail_estimate: 0.0 };
        Ok(Self {
            setup: *setup,
            profile: SwitchingProfile::none(),
            modes: ModeSet::Restricted(modes.to_vec()),
            probed: ModeKernels::compute(setup, setup.beta)?,
            vacuum_i: exact(mode_sum_over(setup, SumKind::AbsIPlusSq, modes)?),
            vacuum_c: exact(mode_sum_over(setup, SumKind::CPlusConj, modes)?),
        })
    }

    /// Same kernels with a different coupling (kernels are λ-independent).
    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut k = self.clone();
        k.setup.lambda = lambda;
        k
    }

    /// `k_β L = βπ`.
    pub fn probed_norm(&self) -> f64 {
        self.setup.beta as f64 * PI
    }
}

/// Kernels of every mode in `window`, evaluated in parallel.
pub fn kernel_window(
    setup: &CavitySetup,
    window: std::ops::RangeInclusive<usize>,
) -> Result<Vec<ModeKernels>, IntegralError> {
    window.into_par_iter().map(|k| ModeKernels::compute(setup, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(l: f64, beta: usize, v: f64) -> CavitySetup {
        CavitySetup::resonant(l, beta, v, 1e-4).unwrap()
    }

    #[test]
    fn invalid_setups_rejected() {
        assert!(CavitySetup::new(-1.0, 2, 1.0, 0.1, 1e-3, false).is_err());
        assert!(CavitySetup::new(1.0, 0, 1.0, 0.1, 1e-3, false).is_err());
        assert!(CavitySetup::new(1.0, 2, 1.0, 1.0, 1e-3, false).is_err());
        assert!(CavitySetup::new(1.0, 2, f64::NAN, 0.5, 1e-3, false).is_err());
    }

    #[test]
    fn even_resonant_minus_is_exact_zero() {
        for beta in [2, 4, 6] {
            let k = kernel_i(&setup(1.0, beta, 3.3e-6), Sign::Minus, beta);
            assert_eq!(k.value, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn odd_resonant_minus() {
        for beta in [1, 3, 5] {
            let s = setup(1.0, beta, 1e-3);
            let k = kernel_i(&s, Sign::Minus, beta);
            let exact = 2.0 * s.l / (beta as f64 * PI * s.v);
            assert!((k.value - exact).norm() <= 1e-14 * exact);
        }
    }

    #[test]
    fn resonance_limit_is_continuous() {
        let s = CavitySetup::new(1.0, 3, 0.0, 0.01, 1e-4, false).unwrap();
        let b = s.spatial_rate(3);
        let w3 = s.wavenumber(3);
        let at = CavitySetup { omega: w3 - b, ..s };
        let k0 = kernel_i(&at, Sign::Minus, 3);
        assert_eq!(k0.method, KernelMethod::ResonantLimit);
        assert!((k0.value - I * (0.5 * s.flight_time())).norm() < 1e-10 * s.flight_time());
        for d in [1e-6, 1e-9, 1e-12] {
            let near = CavitySetup { omega: w3 - b + d * b, ..s };
            let k = kernel_i(&near, Sign::Minus, 3);
            let q = kernel_i_quadrature(&near, Sign::Minus, 3, QuadratureOptions::default()).unwrap();
            assert!((k.value - q.value).norm() < 1e-9 * q.value.norm(), "d={d}");
        }
    }

    #[test]
    fn closed_form_matches_quadrature_generic() {
        // v = 1e-3 puts wT = 6000π on a multiple of 2π, so I₊ vanishes.
        let s = CavitySetup::new(1.0, 2, 2.0 * PI, 1e-3, 1e-4, false).unwrap();
        let k = kernel_i(&s, Sign::Plus, 4);
        let q = kernel_i_quadrature(&s, Sign::Plus, 4, QuadratureOptions::default()).unwrap();
        assert!(k.value.norm() < 1e-15);
        assert!(q.value.norm() < 1e-16 * s.flight_time());
        for v in [1.234e-3, 0.9e-3, 2.71e-3] {
            let s = CavitySetup { v, ..s };
            let k = kernel_i(&s, Sign::Plus, 4);
            let q = kernel_i_quadrature(&s, Sign::Plus, 4, QuadratureOptions::reference()).unwrap();
            assert!((k.value - q.value).norm() <= 1e-10 * k.value.norm(), "v={v}: {} vs {}", k.value, q.value);
        }
    }

    #[test]
    fn switched_at_zero_epsilon_reproduces_kernel() {
        let s = setup(1.0, 2, 0.05);
        for kappa in [1, 2, 3, 7] {
            for sign in [Sign::Plus, Sign::Minus] {
                let q = kernel_i_switched(&s, sign, kappa, SwitchingProfile::none()).unwrap();
                let k = kernel_i(&s, sign, kappa);
                assert!((q.value - k.value).norm() <= 1e-12 * k.value.norm().max(1.0));
            }
        }
    }

    #[test]
    fn switched_closed_matches_quadrature() {
        let s = setup(1.0, 2, 0.02);
        let prof = SwitchingProfile::new(0.3 / s.flight_time());
        for kappa in [1, 2, 3, 5] {
            for sign in [Sign::Plus, Sign::Minus] {
                let q = kernel_i_switched(&s, sign, kappa, prof).unwrap();
                let c = kernel_i_switched_closed(&s, sign, kappa, prof).unwrap();
                assert!((q.value - c.value).norm() <= 1e-9 * q.value.norm().max(1e-300), "κ={kappa} {sign:?}");
            }
        }
        let even = kernel_i_switched_closed(&s, Sign::Minus, 2, prof).unwrap();
        let b = s.spatial_rate(2);
        assert!((even.value - prof.epsilon * s.flight_time() / b).norm() < 1e-12 * even.value.norm());
    }

    #[test]
    fn switching_bound_enforced() {
        let s = setup(1.0, 2, 0.1);
        let prof = SwitchingProfile::new(1.0 / s.flight_time());
        assert!(matches!(kernel_i_switched(&s, Sign::Minus, 2, prof), Err(IntegralError::Switching { .. })));
    }

    #[test]
    fn c_closed_matches_nested() {
        let s = CavitySetup::new(1.3, 2, 5.0, 0.05, 1e-4, false).unwrap();
        for kappa in [1, 2, 3, 6] {
            for sign in [Sign::Plus, Sign::Minus] {
                let n = kernel_c(&s, sign, kappa).unwrap();
                let c = kernel_c_closed(&s, sign, kappa).unwrap();
                assert!((n.value - c.value).norm() <= 1e-9 * n.value.norm(), "κ={kappa} {sign:?}");
                let i = kernel_i(&s, sign, kappa).value;
                assert!((c.value.re - 0.5 * i.norm_sqr()).abs() <= 1e-10 * c.value.norm());
            }
        }
    }

    #[test]
    fn c_resonant_values() {
        let even = setup(1.0, 2, 0.05);
        assert_eq!(kernel_c_closed(&even, Sign::Minus, 2).unwrap().value.norm(), 0.0);
        let odd = setup(1.0, 3, 0.05);
        let b = odd.spatial_rate(3);
        let c = kernel_c_closed(&odd, Sign::Minus, 3).unwrap().value;
        assert!((c - 2.0 / (b * b)).norm() < 1e-12 * c.norm());
    }

    #[test]
    fn c_sign_symmetry_at_zero_gap() {
        let s = CavitySetup::new(1.0, 2, 0.0, 0.05, 1e-4, false).unwrap();
        for kappa in [1, 2, 5] {
            let p = kernel_c(&s, Sign::Plus, kappa).unwrap().value;
            let m = kernel_c(&s, Sign::Minus, kappa).unwrap().value;
            assert_eq!(p, m);
        }
    }

    #[test]
    fn c_near_degenerate_speed_is_finite() {
        let v = 0.05;
        // κ = 3, Ω such that ω_3 − Ω = k_3 v.
        let l = 1.0;
        let omega = 3.0 * PI / l * (1.0 - v) * (1.0 + 1e-11);
        let s = CavitySetup::new(l, 2, omega, v, 1e-4, false).unwrap();
        let c = kernel_c_closed(&s, Sign::Minus, 3).unwrap();
        assert!(c.value.re.is_finite() && c.value.im.is_finite());
        let off = CavitySetup { omega: omega * (1.0 + 1e-6), ..s };
        let q = kernel_c(&off, Sign::Minus, 3).unwrap().value;
        assert!((c.value - q).norm() < 1e-4 * q.norm());
    }

    #[test]
    fn tail_fit_recovers_power_law() {
        let mags: Vec<f64> = (1..=2000).map(|g| 3.0 * (g as f64).powi(-3)).collect();
        let tail = tail_estimate(&mags).unwrap();
        let exact: f64 = (2001..2_000_000).map(|g| 3.0 * (g as f64).powi(-3)).sum();
        assert!((tail - exact).abs() < 2e-3 * exact, "{tail:e} vs {exact:e}");
        let flat: Vec<f64> = (1..=2000).map(|g| 1.0 / g as f64).collect();
        assert_eq!(tail_estimate(&flat), None);
    }
}

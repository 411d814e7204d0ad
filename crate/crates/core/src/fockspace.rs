//! Truncated single-mode Fock space: ladder operators, Gaussian states built
//! from explicit operator exponentials, and the closed-form photon-number
//! identity for squeezed coherent states.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tolerance on the norm lost when a state is cut to `n_max`.
pub const DEFAULT_NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("cutoff n_max must be at least 1 (got {0})")]
    Cutoff(usize),
    #[error("non-finite amplitude ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("squeeze magnitude must be finite and non-negative (got {0})")]
    Squeeze(f64),
    #[error("Fock level {n} exceeds cutoff {n_max}")]
    FockAboveCutoff { n: usize, n_max: usize },
    #[error("truncation at n_max = {n_max} loses {defect:e} of the norm (tolerance {tolerance:e})")]
    Truncation { n_max: usize, defect: f64, tolerance: f64 },
}

/// Highest Fock level kept in a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCutoff(usize);

impl ModeCutoff {
    pub fn new(n_max: usize) -> Result<Self, FockError> {
        if n_max < 1 {
            return Err(FockError::Cutoff(n_max));
        }
        Ok(Self(n_max))
    }

    pub fn n_max(self) -> usize {
        self.0
    }

    pub fn dim(self) -> usize {
        self.0 + 1
    }

    /// `max(30, ceil(10 (|α|² + e^{2r})))`, raised to cover the Gaussian tail
    /// of the anti-squeezed quadrature and the `tanh(r)^n` tail of the
    /// squeezed vacuum.
    pub fn default_for(state: &FieldState) -> Self {
        let (r, alpha) = match *state {
            FieldState::Fock(n) => return Self(n.max(1) + 30),
            FieldState::Coherent(a) => (0.0, a.abs()),
            FieldState::SqueezedVacuum(z) => (z.r, 0.0),
            FieldState::SqueezedCoherent(z, a) => (z.r, a.abs()),
        };
        let mut n = (10.0 * (alpha * alpha + (2.0 * r).exp())).ceil().max(30.0);
        let x_max = r.exp() * (std::f64::consts::SQRT_2 * alpha + 7.5 / std::f64::consts::SQRT_2);
        n = n.max(0.5 * x_max * x_max + 10.0);
        if r > 0.0 {
            let tail = (1e-13f64).ln() / r.tanh().ln();
            n = n.max(1.2 * tail);
        }
        Self(n.ceil() as usize)
    }
}

/// Finite complex number (displacement α).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexAmplitude(C64);

impl ComplexAmplitude {
    pub fn new(re: f64, im: f64) -> Result<Self, FockError> {
        if !(re.is_finite() && im.is_finite()) {
            return Err(FockError::NonFinite(re, im));
        }
        Ok(Self(C64::new(re, im)))
    }

    pub fn from_polar(abs: f64, theta: f64) -> Result<Self, FockError> {
        let z = C64::from_polar(abs, theta);
        Self::new(z.re, z.im)
    }

    pub fn zero() -> Self {
        Self(C64::new(0.0, 0.0))
    }

    pub fn value(self) -> C64 {
        self.0
    }

    pub fn abs(self) -> f64 {
        self.0.norm()
    }

    pub fn arg(self) -> f64 {
        self.0.arg()
    }
}

/// Squeeze parameter ζ = r e^{iφ}, with φ reduced to [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    pub r: f64,
    pub phi: f64,
}

impl SqueezeParams {
    pub fn new(r: f64, phi: f64) -> Result<Self, FockError> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(FockError::Squeeze(r));
        }
        if !phi.is_finite() {
            return Err(FockError::NonFinite(r, phi));
        }
        Ok(Self { r, phi: phi.rem_euclid(TAU) })
    }

    pub fn zeta(self) -> C64 {
        C64::from_polar(self.r, self.phi)
    }
}

/// Single-mode field state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FieldState {
    Fock(usize),
    Coherent(ComplexAmplitude),
    SqueezedVacuum(SqueezeParams),
    /// `S(ζ) D(α) |0⟩`.
    SqueezedCoherent(SqueezeParams, ComplexAmplitude),
}

/// The three numbers the phase and probability formulas depend on for a
/// Gaussian state: squeeze magnitude `r`, `|α|`, and `Ψ = 2θ − φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub r: f64,
    pub alpha_abs: f64,
    pub psi: f64,
}

impl FieldState {
    pub fn vacuum() -> Self {
        FieldState::Fock(0)
    }

    pub fn coherent(abs: f64, theta: f64) -> Result<Self, FockError> {
        Ok(FieldState::Coherent(ComplexAmplitude::from_polar(abs, theta)?))
    }

    pub fn squeezed_vacuum(r: f64, phi: f64) -> Result<Self, FockError> {
        Ok(FieldState::SqueezedVacuum(SqueezeParams::new(r, phi)?))
    }

    pub fn squeezed_coherent(r: f64, phi: f64, abs: f64, theta: f64) -> Result<Self, FockError> {
        Ok(FieldState::SqueezedCoherent(SqueezeParams::new(r, phi)?, ComplexAmplitude::from_polar(abs, theta)?))
    }

    /// Squeezed coherent state with relative phase `Ψ = 2θ − φ` (θ derived).
    pub fn squeezed_coherent_relative(r: f64, phi: f64, abs: f64, psi: f64) -> Result<Self, FockError> {
        Self::squeezed_coherent(r, phi, abs, 0.5 * (psi + phi))
    }

    /// `None` for Fock states.
    pub fn gaussian_params(&self) -> Option<GaussianParams> {
        match *self {
            FieldState::Fock(_) => None,
            FieldState::Coherent(a) => Some(GaussianParams { r: 0.0, alpha_abs: a.abs(), psi: 2.0 * a.arg() }),
            FieldState::SqueezedVacuum(z) => Some(GaussianParams { r: z.r, alpha_abs: 0.0, psi: -z.phi }),
            FieldState::SqueezedCoherent(z, a) => {
                Some(GaussianParams { r: z.r, alpha_abs: a.abs(), psi: 2.0 * a.arg() - z.phi })
            }
        }
    }
}

/// State vector on `0..=n_max`, unit norm after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub amplitudes: Vec<C64>,
    /// `1 − ⟨ψ|ψ⟩` of the truncated vector before renormalisation.
    pub norm_defect: f64,
}

impl FockVector {
    pub fn cutoff(&self) -> ModeCutoff {
        ModeCutoff(self.amplitudes.len() - 1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `⟨ψ|a†a|ψ⟩`.
    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum()
    }

    /// `⟨ψ|a|ψ⟩`.
    pub fn mean_annihilation(&self) -> C64 {
        (1..self.amplitudes.len()).map(|n| self.amplitudes[n - 1].conj() * self.amplitudes[n] * (n as f64).sqrt()).sum()
    }
}

/// Truncated `a` and `a†` on `0..=n_max`.
pub fn ladder_matrices(cutoff: ModeCutoff) -> (DMatrix<C64>, DMatrix<C64>) {
    let d = cutoff.dim();
    let mut a = DMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let a_dag = a.adjoint();
    (a, a_dag)
}

/// Builds `state` on `cutoff` with the default norm tolerance.
pub fn build_state(state: &FieldState, cutoff: ModeCutoff) -> Result<FockVector, FockError> {
    build_state_with_tolerance(state, cutoff, DEFAULT_NORM_TOLERANCE)
}

/// Builds the state in a padded work space, applies `D(α)` then `S(ζ)` to the
/// vacuum, cuts to `n_max`, records the lost norm and renormalises.
pub fn build_state_with_tolerance(
    state: &FieldState,
    cutoff: ModeCutoff,
    tolerance: f64,
) -> Result<FockVector, FockError> {
    let n_max = cutoff.n_max();
    if let FieldState::Fock(n) = *state {
        if n > n_max {
            return Err(FockError::FockAboveCutoff { n, n_max });
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); n_max + 1];
        amplitudes[n] = C64::new(1.0, 0.0);
        return Ok(FockVector { amplitudes, norm_defect: 0.0 });
    }

    let work = n_max + (n_max / 2).max(24) + 1;
    let mut psi = vec![C64::new(0.0, 0.0); work];
    psi[0] = C64::new(1.0, 0.0);
    let (zeta, alpha) = match *state {
        FieldState::Coherent(a) => (None, Some(a.value())),
        FieldState::SqueezedVacuum(z) => (Some(z.zeta()), None),
        FieldState::SqueezedCoherent(z, a) => (Some(z.zeta()), Some(a.value())),
        FieldState::Fock(_) => unreachable!(),
    };
    if let Some(alpha) = alpha.filter(|a| a.norm() > 0.0) {
        psi =
            exp_action(|v, out| displacement_generator(alpha, v, out), 2.0 * alpha.norm() * (work as f64).sqrt(), psi);
    }
    if let Some(zeta) = zeta.filter(|z| z.norm() > 0.0) {
        psi = exp_action(|v, out| squeeze_generator(zeta, v, out), zeta.norm() * work as f64, psi);
    }

    let total: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
    psi.truncate(n_max + 1);
    let kept: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
    let defect = (1.0 - kept / total).max(0.0);
    if defect > tolerance {
        return Err(FockError::Truncation { n_max, defect, tolerance });
    }
    let scale = 1.0 / kept.sqrt();
    psi.iter_mut().for_each(|c| *c *= scale);
    Ok(FockVector { amplitudes: psi, norm_defect: defect })
}

/// `out = (α a† − α* a) v` on a truncated vector.
fn displacement_generator(alpha: C64, v: &[C64], out: &mut [C64]) {
    let d = v.len();
    for n in 0..d {
        let mut acc = C64::new(0.0, 0.0);
        if n > 0 {
            acc += alpha * (n as f64).sqrt() * v[n - 1];
        }
        if n + 1 < d {
            acc -= alpha.conj() * ((n + 1) as f64).sqrt() * v[n + 1];
        }
        out[n] = acc;
    }
}

/// `out = ½(ζ* a a − ζ a† a†) v` on a truncated vector.
fn squeeze_generator(zeta: C64, v: &[C64], out: &mut [C64]) {
    let d = v.len();
    for n in 0..d {
        let mut acc = C64::new(0.0, 0.0);
        if n + 2 < d {
            acc += zeta.conj() * (((n + 1) * (n + 2)) as f64).sqrt() * v[n + 2];
        }
        if n >= 2 {
            acc -= zeta * ((n * (n - 1)) as f64).sqrt() * v[n - 2];
        }
        out[n] = 0.5 * acc;
    }
}

/// `exp(A) v` by scaling into steps of norm ≤ 1/2 and summing Taylor terms.
/// `norm_bound` must bound the induced norm of `A`.
fn exp_action<F>(apply: F, norm_bound: f64, mut v: Vec<C64>) -> Vec<C64>
where
    F: Fn(&[C64], &mut [C64]),
{
    let steps = (norm_bound / 0.5).ceil().max(1.0) as usize;
    let h = 1.0 / steps as f64;
    let d = v.len();
    let mut term = vec![C64::new(0.0, 0.0); d];
    let mut next = vec![C64::new(0.0, 0.0); d];
    for _ in 0..steps {
        term.copy_from_slice(&v);
        let mut acc = v.clone();
        for k in 1..=40 {
            apply(&term, &mut next);
            let f = h / k as f64;
            let mut size = 0.0;
            for (t, n) in term.iter_mut().zip(&next) {
                *t = n * f;
                size += t.norm_sqr();
            }
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t;
            }
            if size < 1e-36 {
                break;
            }
        }
        v = acc;
    }
    v
}

/// Dense matrix exponential: Taylor series with scaling and squaring.
pub fn expm(m: &DMatrix<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    let norm = (0..n).map(|j| m.column(j).iter().map(|c| c.norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = m * C64::new(0.5f64.powi(squarings as i32), 0.0);
    let mut result = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..=30 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        result += &term;
        if term.iter().map(|c| c.norm()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Closed form of `⟨a†a⟩`:
/// `sinh²r + |α|²(cosh²r + sinh²r) − 2 sinh r cosh r |α|² cos Ψ`.
pub fn expected_photon_number(state: &FieldState) -> f64 {
    match state.gaussian_params() {
        None => match *state {
            FieldState::Fock(n) => n as f64,
            _ => unreachable!(),
        },
        Some(g) => photon_weight(g.r, g.alpha_abs, g.psi),
    }
}

/// Photon-number weight shared by the probability and phase formulas.
pub fn photon_weight(r: f64, alpha_abs: f64, psi: f64) -> f64 {
    let (s, c) = (r.sinh(), r.cosh());
    let a2 = alpha_abs * alpha_abs;
    s * s + a2 * (c * c + s * s) - 2.0 * s * c * a2 * psi.cos()
}

/// Max deviation of `S†aS` from `a cosh r − a† e^{iφ} sinh r` over the
/// interior block `j, k ≤ n_max − guard_band`, with `S` the exponential of
/// the truncated squeeze generator.
pub fn bogoliubov_check_with_guard(zeta: SqueezeParams, cutoff: ModeCutoff, guard_band: usize) -> f64 {
    let (a, a_dag) = ladder_matrices(cutoff);
    let z = zeta.zeta();
    let gen = (&a * &a * z.conj() - &a_dag * &a_dag * z) * C64::new(0.5, 0.0);
    let s = expm(&gen);
    let lhs = s.adjoint() * &a * &s;
    let rhs = &a * C64::new(zeta.r.cosh(), 0.0) - &a_dag * (C64::from_polar(1.0, zeta.phi) * zeta.r.sinh());
    let top = cutoff.n_max().saturating_sub(guard_band);
    let mut worst = 0.0f64;
    for j in 0..=top {
        for k in 0..=top {
            worst = worst.max((lhs[(j, k)] - rhs[(j, k)]).norm());
        }
    }
    worst
}

/// [`bogoliubov_check_with_guard`] with the default guard band `n_max / 3`.
pub fn bogoliubov_check(zeta: SqueezeParams, cutoff: ModeCutoff) -> f64 {
    bogoliubov_check_with_guard(zeta, cutoff, cutoff.n_max() / 3)
}

//! Second-order observables assembled from the trajectory kernels.
//!
//! Every state enters through its photon-number weight
//! `W = sinh²r + |α|²(cosh²r + sinh²r) − 2 sinh r cosh r |α|² cos Ψ`
//! (`W = n` for Fock states):
//!
//! * `P_e = λ² [ (|I₋,β|² + |I₊,β|²)/(k_βL) · W + Σ_γ |I₊,γ|²/(k_γL) ]`
//! * `η = −i ln(1 − λ² B)`, `B = (C₊,β* + C₋,β)/(k_βL) · W + Σ_γ C₊,γ*/(k_γL)`

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fockspace::{FieldState, FockError};
use crate::integrals::{linear_fit, CavitySetup, IntegralError, SwitchingProfile, TransitionKernels};

/// `P_e` below which an arm satisfies the weak adiabatic assumption.
pub const WEAK_ADIABATIC_THRESHOLD: f64 = 1e-6;

/// `|λ²B|` above which the logarithm is flagged as non-perturbative.
pub const BRANCH_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerturbationError {
    #[error(transparent)]
    Integral(#[from] IntegralError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("weak adiabatic assumption violated in the {arm} arm: P_e = {p_excite:e}")]
    WeakAdiabaticViolation { arm: &'static str, p_excite: f64 },
    #[error("invalid resolution query: {0}")]
    Query(String),
}

/// Terms of `P_e`; `p_excite` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProbabilityBreakdown {
    /// `R |α|²(cosh²r + sinh²r)`, or `R n` for Fock states, with
    /// `R = λ²(|I₋,β|² + |I₊,β|²)/(k_βL)`.
    pub resonant_mode_term: f64,
    /// `R sinh²r`.
    pub squeeze_term: f64,
    /// `−2R sinh r cosh r |α|² cos Ψ`.
    pub interference_term: f64,
    /// `λ² Σ_γ |I₊,γ|²/(k_γL)`.
    pub vacuum_sum_term: f64,
}

impl ProbabilityBreakdown {
    pub fn total(&self) -> f64 {
        self.resonant_mode_term + self.squeeze_term + self.interference_term + self.vacuum_sum_term
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityResult {
    pub p_excite: f64,
    pub breakdown: ProbabilityBreakdown,
    pub weak_adiabatic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseResult {
    /// `η = −i ln A` on the principal branch.
    pub eta: C64,
    /// `γ = Re η = arg A`.
    pub gamma: f64,
    /// `A = 1 − λ²B`.
    pub survival_amplitude: C64,
    /// `B`, without the `λ²`.
    pub bracket: C64,
    /// `|λ²B| > 0.5`: the log expansion has left its perturbative range.
    pub branch_warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometryConfig {
    pub target: FieldState,
    pub reference: FieldState,
    pub setup: CavitySetup,
}

/// Full outcome of a two-arm comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interferometry {
    /// `Δγ = arg(A_target / A_reference)` in `(−π, π]`, formed as a difference
    /// of the two arguments.
    pub delta_gamma: f64,
    pub p_target: f64,
    pub p_reference: f64,
    pub visibility: f64,
    /// `1 − visibility`, computed without cancellation.
    pub visibility_loss: f64,
}

/// Pairs of states whose phase difference is the resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ResolutionQuery {
    /// `Fock(n)` against `Fock(n + m)`.
    FockGap { n: usize, m: usize },
    /// `Coherent(|α|)` against `Coherent(|α| + δα)`.
    CoherentGap { alpha: f64, delta: f64 },
    /// `SqueezedVacuum(r)` against `SqueezedVacuum(r + δr)`.
    SqueezeGap { r: f64, delta: f64 },
    /// Squeezed coherent states at `Ψ` and `Ψ + δΨ`.
    RelPhaseGap { psi: f64, delta: f64, r: f64, alpha: f64 },
}

impl ResolutionQuery {
    /// The two target states, in the order `value(first) − value(second)`.
    pub fn states(&self) -> Result<(FieldState, FieldState), PerturbationError> {
        let positive = |d: f64| {
            if d > 0.0 && d.is_finite() {
                Ok(())
            } else {
                Err(PerturbationError::Query(format!("gap must be positive, got {d}")))
            }
        };
        Ok(match *self {
            ResolutionQuery::FockGap { n, m } => {
                if m < 1 {
                    return Err(PerturbationError::Query("Fock gap m must be at least 1".into()));
                }
                (FieldState::Fock(n), FieldState::Fock(n + m))
            }
            ResolutionQuery::CoherentGap { alpha, delta } => {
                positive(delta)?;
                (FieldState::coherent(alpha, 0.0)?, FieldState::coherent(alpha + delta, 0.0)?)
            }
            ResolutionQuery::SqueezeGap { r, delta } => {
                positive(delta)?;
                (FieldState::squeezed_vacuum(r, 0.0)?, FieldState::squeezed_vacuum(r + delta, 0.0)?)
            }
            ResolutionQuery::RelPhaseGap { psi, delta, r, alpha } => {
                positive(delta)?;
                (
                    FieldState::squeezed_coherent_relative(r, 0.0, alpha, psi)?,
                    FieldState::squeezed_coherent_relative(r, 0.0, alpha, psi + delta)?,
                )
            }
        })
    }
}

/// `(resonant, squeeze, interference)` parts of `W`.
fn weight_parts(state: &FieldState) -> (f64, f64, f64) {
    match state.gaussian_params() {
        None => match *state {
            FieldState::Fock(n) => (n as f64, 0.0, 0.0),
            _ => unreachable!(),
        },
        Some(g) => {
            let (s, c) = (g.r.sinh(), g.r.cosh());
            let a2 = g.alpha_abs * g.alpha_abs;
            (a2 * (c * c + s * s), s * s, -2.0 * s * c * a2 * g.psi.cos())
        }
    }
}

/// Photon-number weight `W` of `state`.
pub fn state_weight(state: &FieldState) -> f64 {
    let (a, b, c) = weight_parts(state);
    a + b + c
}

pub fn transition_probability_with(state: &FieldState, kernels: &TransitionKernels) -> ProbabilityResult {
    let lam2 = kernels.setup.lambda * kernels.setup.lambda;
    let k = &kernels.probed;
    let r = lam2 * (k.i_minus.value.norm_sqr() + k.i_plus.value.norm_sqr()) / kernels.probed_norm();
    let (wa, ws, wi) = weight_parts(state);
    let breakdown = ProbabilityBreakdown {
        resonant_mode_term: r * wa,
        squeeze_term: r * ws,
        interference_term: r * wi,
        vacuum_sum_term: lam2 * kernels.vacuum_i.value.re,
    };
    let p_excite = breakdown.total();
    ProbabilityResult { p_excite, breakdown, weak_adiabatic: p_excite < WEAK_ADIABATIC_THRESHOLD }
}

/// `P_e` for `state`, building kernels for `setup` with vacuum-sum tolerance `rel_tol`.
pub fn transition_probability(
    state: &FieldState,
    setup: &CavitySetup,
    rel_tol: f64,
) -> Result<ProbabilityResult, PerturbationError> {
    Ok(transition_probability_with(state, &TransitionKernels::build(setup, rel_tol)?))
}

/// `B` for `state`.
pub fn phase_bracket(state: &FieldState, kernels: &TransitionKernels) -> C64 {
    let k = &kernels.probed;
    (k.c_plus.value.conj() + k.c_minus.value) / kernels.probed_norm() * state_weight(state) + kernels.vacuum_c.value
}

pub fn phase_with(state: &FieldState, kernels: &TransitionKernels) -> PhaseResult {
    let lam2 = kernels.setup.lambda * kernels.setup.lambda;
    let bracket = phase_bracket(state, kernels);
    let x = bracket * lam2;
    let a = C64::new(1.0, 0.0) - x;
    let eta = -C64::i() * a.ln();
    PhaseResult { eta, gamma: eta.re, survival_amplitude: a, bracket, branch_warning: x.norm() > BRANCH_THRESHOLD }
}

pub fn phase(state: &FieldState, setup: &CavitySetup, rel_tol: f64) -> Result<PhaseResult, PerturbationError> {
    Ok(phase_with(state, &TransitionKernels::build(setup, rel_tol)?))
}

/// Linearised phase `−Im(λ²B)`.
pub fn small_phase_with(state: &FieldState, kernels: &TransitionKernels) -> f64 {
    let lam2 = kernels.setup.lambda * kernels.setup.lambda;
    let g = -(phase_bracket(state, kernels) * lam2).im;
    if g.abs() >= 0.1 {
        log::warn!("small-phase approximation used at |γ| = {g}");
    }
    g
}

pub fn small_phase(state: &FieldState, setup: &CavitySetup, rel_tol: f64) -> Result<f64, PerturbationError> {
    Ok(small_phase_with(state, &TransitionKernels::build(setup, rel_tol)?))
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Removes `2π` jumps along a sweep.
pub fn unwrap_phases(values: &mut [f64]) {
    for i in 1..values.len() {
        let d = values[i] - values[i - 1];
        values[i] -= 2.0 * PI * (d / (2.0 * PI)).round();
    }
}

fn checked_probability(
    state: &FieldState,
    kernels: &TransitionKernels,
    arm: &'static str,
) -> Result<f64, PerturbationError> {
    let p = transition_probability_with(state, kernels).p_excite;
    if p >= WEAK_ADIABATIC_THRESHOLD {
        return Err(PerturbationError::WeakAdiabaticViolation { arm, p_excite: p });
    }
    Ok(p)
}

/// Both arms of an interferometer sharing `kernels`.
pub fn interferometry_with(
    target: &FieldState,
    reference: &FieldState,
    kernels: &TransitionKernels,
) -> Result<Interferometry, PerturbationError> {
    let p_target = checked_probability(target, kernels, "target")?;
    let p_reference = checked_probability(reference, kernels, "reference")?;
    let at = phase_with(target, kernels).survival_amplitude;
    let ar = phase_with(reference, kernels).survival_amplitude;
    let delta_gamma = wrap_phase(at.arg() - ar.arg());
    let visibility = ((1.0 - p_target) * (1.0 - p_reference)).sqrt();
    let visibility_loss = (p_target + p_reference - p_target * p_reference) / (1.0 + visibility);
    Ok(Interferometry { delta_gamma, p_target, p_reference, visibility, visibility_loss })
}

pub fn interferometric_phase_with(
    target: &FieldState,
    reference: &FieldState,
    kernels: &TransitionKernels,
) -> Result<f64, PerturbationError> {
    Ok(interferometry_with(target, reference, kernels)?.delta_gamma)
}

pub fn interferometric_phase(config: &InterferometryConfig, rel_tol: f64) -> Result<f64, PerturbationError> {
    let kernels = TransitionKernels::build(&config.setup, rel_tol)?;
    interferometric_phase_with(&config.target, &config.reference, &kernels)
}

/// `Δγ(first) − Δγ(second)` against a common reference arm.
pub fn resolution_with(
    query: &ResolutionQuery,
    reference: &FieldState,
    kernels: &TransitionKernels,
) -> Result<f64, PerturbationError> {
    let (a, b) = query.states()?;
    Ok(interferometric_phase_with(&a, reference, kernels)? - interferometric_phase_with(&b, reference, kernels)?)
}

/// Resolution using the reference arm and setup of `config`.
pub fn resolution(
    query: &ResolutionQuery,
    config: &InterferometryConfig,
    rel_tol: f64,
) -> Result<f64, PerturbationError> {
    let kernels = TransitionKernels::build(&config.setup, rel_tol)?;
    resolution_with(query, &config.reference, &kernels)
}

/// `√((1 − P_target)(1 − P_reference))`.
pub fn visibility(config: &InterferometryConfig, rel_tol: f64) -> Result<f64, PerturbationError> {
    let kernels = TransitionKernels::build(&config.setup, rel_tol)?;
    Ok(interferometry_with(&config.target, &config.reference, &kernels)?.visibility)
}

/// `P_e(ε)` under linear switching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCurve {
    /// Natural units.
    pub epsilons: Vec<f64>,
    pub p_excite: Vec<f64>,
    /// `P_e(0)`.
    pub baseline: f64,
    /// Log–log slope of `P_e − P_e(0)` over the positive `ε`.
    pub slope: Option<f64>,
}

pub fn stability_curve(
    setup: &CavitySetup,
    state: &FieldState,
    epsilons: &[f64],
    rel_tol: f64,
) -> Result<StabilityCurve, PerturbationError> {
    for &e in epsilons {
        SwitchingProfile::new(e).check(setup)?;
    }
    let baseline = transition_probability_with(state, &TransitionKernels::build(setup, rel_tol)?).p_excite;
    let p_excite = epsilons
        .par_iter()
        .map(|&e| {
            let k = TransitionKernels::build_switched(setup, rel_tol, SwitchingProfile::new(e))?;
            Ok(transition_probability_with(state, &k).p_excite)
        })
        .collect::<Result<Vec<f64>, PerturbationError>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = epsilons
        .iter()
        .zip(&p_excite)
        .filter(|(&e, &p)| e > 0.0 && p > baseline)
        .map(|(&e, &p)| (e.ln(), (p - baseline).ln()))
        .unzip();
    let slope = (xs.len() >= 2).then(|| linear_fit(&xs, &ys).0);
    Ok(StabilityCurve { epsilons: epsilons.to_vec(), p_excite, baseline, slope })
}

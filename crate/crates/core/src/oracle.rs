//! Exact interaction-picture evolution of atom ⊗ field on a truncated,
//! few-mode Hilbert space.
//!
//! Basis index: `atom · field_dim + Σ_i n_i · stride_i`, atom `0 = g`,
//! `1 = e`, with the first retained mode most significant.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fockspace::{build_state_with_tolerance, FieldState, FockError, FockVector, ModeCutoff};
use crate::integrals::{CavitySetup, IntegralError, SwitchingProfile, TransitionKernels};
use crate::perturbation::{phase_with, transition_probability_with};

pub const DEFAULT_DIM_BUDGET: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("model space dimension {dim} exceeds budget {budget}")]
    Budget { dim: usize, budget: usize },
    #[error("invalid model space: {0}")]
    Space(String),
    #[error("step halving did not converge within {steps} steps (change {change:e})")]
    StepFailure { steps: usize, change: f64 },
    #[error("norm drift {0:e} exceeds tolerance")]
    NormDrift(f64),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Setup(#[from] IntegralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomLevel {
    Ground,
    Excited,
}

/// Retained modes and their cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpace {
    modes: Vec<usize>,
    cutoffs: Vec<ModeCutoff>,
    strides: Vec<usize>,
    field_dim: usize,
}

impl ModelSpace {
    pub fn new(modes: &[usize], cutoffs: &[ModeCutoff], beta: usize) -> Result<Self, OracleError> {
        Self::with_budget(modes, cutoffs, beta, DEFAULT_DIM_BUDGET)
    }

    pub fn with_budget(
        modes: &[usize],
        cutoffs: &[ModeCutoff],
        beta: usize,
        budget: usize,
    ) -> Result<Self, OracleError> {
        if modes.is_empty() || modes.len() != cutoffs.len() {
            return Err(OracleError::Space(format!("{} modes with {} cutoffs", modes.len(), cutoffs.len())));
        }
        if modes.windows(2).any(|w| w[0] >= w[1]) || modes[0] == 0 {
            return Err(OracleError::Space(format!("modes {modes:?} must be strictly increasing and positive")));
        }
        if !modes.contains(&beta) {
            return Err(OracleError::Space(format!("modes {modes:?} must contain beta = {beta}")));
        }
        let mut strides = vec![1; modes.len()];
        let mut field_dim = 1usize;
        for i in (0..modes.len()).rev() {
            strides[i] = field_dim;
            field_dim = field_dim.saturating_mul(cutoffs[i].dim());
        }
        let dim = field_dim.saturating_mul(2);
        if dim > budget {
            return Err(OracleError::Budget { dim, budget });
        }
        Ok(Self { modes: modes.to_vec(), cutoffs: cutoffs.to_vec(), strides, field_dim })
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn cutoffs(&self) -> &[ModeCutoff] {
        &self.cutoffs
    }

    pub fn field_dim(&self) -> usize {
        self.field_dim
    }

    /// `2 · Π (n_max + 1)`.
    pub fn dim(&self) -> usize {
        2 * self.field_dim
    }

    pub fn index(&self, atom: AtomLevel, occupation: &[usize]) -> usize {
        let a = match atom {
            AtomLevel::Ground => 0,
            AtomLevel::Excited => 1,
        };
        a * self.field_dim + occupation.iter().zip(&self.strides).map(|(n, s)| n * s).sum::<usize>()
    }

    /// Same modes with every `n_max` scaled by `factor`.
    pub fn scaled(&self, factor: f64, beta: usize) -> Result<Self, OracleError> {
        let cutoffs = self
            .cutoffs
            .iter()
            .map(|c| ModeCutoff::new((c.n_max() as f64 * factor).ceil() as usize))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(&self.modes, &cutoffs, beta)
    }

    fn occupation(&self, f: usize, i: usize) -> usize {
        (f / self.strides[i]) % self.cutoffs[i].dim()
    }
}

/// Amplitudes over the [`ModelSpace`] basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedState {
    pub amplitudes: Vec<C64>,
}

impl TruncatedState {
    /// `|atom⟩ ⊗ fields[0] ⊗ fields[1] ⊗ …`, one vector per retained mode.
    pub fn product(space: &ModelSpace, atom: AtomLevel, fields: &[FockVector]) -> Result<Self, OracleError> {
        if fields.len() != space.modes.len() {
            return Err(OracleError::Space(format!("{} field states for {} modes", fields.len(), space.modes.len())));
        }
        for (f, c) in fields.iter().zip(&space.cutoffs) {
            if f.amplitudes.len() > c.dim() {
                return Err(OracleError::Space(format!(
                    "field vector with n_max {} exceeds mode cutoff {}",
                    f.amplitudes.len() - 1,
                    c.n_max()
                )));
            }
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); space.dim()];
        let offset = space.index(atom, &vec![0; fields.len()]);
        for f in 0..space.field_dim {
            let mut amp = C64::new(1.0, 0.0);
            for (i, field) in fields.iter().enumerate() {
                let n = space.occupation(f, i);
                amp *= field.amplitudes.get(n).copied().unwrap_or_default();
                if amp == C64::new(0.0, 0.0) {
                    break;
                }
            }
            amplitudes[offset + f] = amp;
        }
        Ok(Self { amplitudes })
    }

    /// Ground atom with `states[i]` built on the cutoff of mode `i`.
    pub fn ground(space: &ModelSpace, states: &[FieldState], tolerance: f64) -> Result<Self, OracleError> {
        let fields = states
            .iter()
            .zip(&space.cutoffs)
            .map(|(s, &c)| build_state_with_tolerance(s, c, tolerance))
            .collect::<Result<Vec<_>, _>>()?;
        Self::product(space, AtomLevel::Ground, &fields)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// Population of the excited atomic level.
    pub fn excited_population(&self) -> f64 {
        let half = self.amplitudes.len() / 2;
        self.amplitudes[half..].iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Coordinate-list matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub dim: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseMatrix {
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries.iter().filter(|e| e.0 == row && e.1 == col).map(|e| e.2).sum()
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `max |H − H†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = self.to_dense();
        (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.to_dense().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// One ladder transition of one mode: field index `from → to` with `√n` factor.
#[derive(Debug, Clone, Copy)]
struct Hop {
    from: usize,
    to: usize,
    factor: f64,
}

/// Precomputed structure of `H_I(t)`; only the scalar coefficients depend on `t`.
struct Propagator {
    field_dim: usize,
    /// Per mode: `(raising hops, lowering hops)`.
    hops: Vec<(Vec<Hop>, Vec<Hop>)>,
    /// Per mode: `(ω_κ, k_κ v, (k_κ L)^{-1/2})`.
    rates: Vec<(f64, f64, f64)>,
    lambda: f64,
    gap: f64,
    profile: SwitchingProfile,
}

impl Propagator {
    fn new(space: &ModelSpace, setup: &CavitySetup, profile: SwitchingProfile) -> Self {
        let hops = (0..space.modes.len())
            .map(|i| {
                let (mut up, mut down) = (Vec::new(), Vec::new());
                let s = space.strides[i];
                for f in 0..space.field_dim {
                    let n = space.occupation(f, i);
                    if n < space.cutoffs[i].n_max() {
                        up.push(Hop { from: f, to: f + s, factor: ((n + 1) as f64).sqrt() });
                    }
                    if n > 0 {
                        down.push(Hop { from: f, to: f - s, factor: (n as f64).sqrt() });
                    }
                }
                (up, down)
            })
            .collect();
        let rates = space
            .modes
            .iter()
            .map(|&k| (setup.wavenumber(k), setup.spatial_rate(k), 1.0 / (k as f64 * std::f64::consts::PI).sqrt()))
            .collect();
        Self { field_dim: space.field_dim, hops, rates, lambda: setup.lambda, gap: setup.gap(), profile }
    }

    /// `(g_raise, g_lower)` per mode: coefficients of `σ⁺a†` and `σ⁺a`.
    fn coefficients(&self, t: f64) -> Vec<(C64, C64)> {
        let scale = self.lambda * self.profile.chi(t);
        self.rates
            .iter()
            .map(|&(w, b, norm)| {
                let s = scale * norm * (b * t).sin();
                (C64::from_polar(s, (self.gap + w) * t), C64::from_polar(s, (self.gap - w) * t))
            })
            .collect()
    }

    /// `y = −i H(t) x`.
    fn derivative(&self, t: f64, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        let (xg, xe) = x.split_at(self.field_dim);
        let (yg, ye) = y.split_at_mut(self.field_dim);
        for ((up, down), (gr, gl)) in self.hops.iter().zip(self.coefficients(t)) {
            let (gr, gl) = (gr * -C64::i(), gl * -C64::i());
            let (gl_c, gr_c) = (-(gl.conj()), -(gr.conj()));
            for h in up {
                ye[h.to] += gr * h.factor * xg[h.from];
                yg[h.to] += gl_c * h.factor * xe[h.from];
            }
            for h in down {
                ye[h.to] += gl * h.factor * xg[h.from];
                yg[h.to] += gr_c * h.factor * xe[h.from];
            }
        }
    }

    fn matrix(&self, t: f64) -> SparseMatrix {
        let mut entries = Vec::new();
        let fd = self.field_dim;
        for ((up, down), (gr, gl)) in self.hops.iter().zip(self.coefficients(t)) {
            for h in up {
                entries.push((fd + h.to, h.from, gr * h.factor));
                entries.push((h.to, fd + h.from, gl.conj() * h.factor));
            }
            for h in down {
                entries.push((fd + h.to, h.from, gl * h.factor));
                entries.push((h.to, fd + h.from, gr.conj() * h.factor));
            }
        }
        SparseMatrix { dim: 2 * fd, entries }
    }

    /// Fastest phase rate in `H_I`.
    fn max_rate(&self) -> f64 {
        self.rates.iter().map(|&(w, b, _)| self.gap + w + b).fold(0.0, f64::max)
    }
}

/// `H_I(t)` on `space`.
pub fn hamiltonian_at(t: f64, space: &ModelSpace, setup: &CavitySetup, profile: SwitchingProfile) -> SparseMatrix {
    Propagator::new(space, setup, profile).matrix(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Starting step count; `None` picks one from the fastest phase.
    pub initial_steps: Option<usize>,
    /// Accepted relative change of `p_excite` under step halving.
    pub rel_tol: f64,
    /// Accepted max-norm change of the final state under step halving.
    pub state_tol: f64,
    pub max_steps: usize,
    pub norm_tolerance: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { initial_steps: None, rel_tol: 1e-3, state_tol: 1e-10, max_steps: 1 << 22, norm_tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionReport {
    /// `⟨ψ(0)|ψ(T)⟩`.
    pub survival_amplitude: C64,
    pub p_excite: f64,
    /// `1 − |⟨ψ(0)|ψ(T)⟩|²`.
    pub p_orthogonal: f64,
    /// `arg⟨ψ(0)|ψ(T)⟩`.
    pub acquired_phase: f64,
    pub norm_drift: f64,
    pub steps: usize,
}

/// Classical RK4 of `y' = f(t, y)` over `[0, T]` in `steps` equal steps.
fn rk4<F>(f: F, y0: &[C64], t_end: f64, steps: usize) -> Vec<C64>
where
    F: Fn(f64, &[C64], &mut [C64]),
{
    let n = y0.len();
    let h = t_end / steps as f64;
    let mut y = y0.to_vec();
    let zero = C64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    for s in 0..steps {
        let t = s as f64 * h;
        f(t, &y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + k1[i] * (0.5 * h);
        }
        f(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + k2[i] * (0.5 * h);
        }
        f(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + k3[i] * h;
        }
        f(t + h, &tmp, &mut k4);
        for i in 0..n {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    y
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn starting_steps(p: &Propagator, t_end: f64, opts: &EvolveOptions) -> usize {
    opts.initial_steps.unwrap_or_else(|| ((p.max_rate() * t_end / 0.5).ceil() as usize).max(64))
}

/// Integrates `i ∂_t |ψ⟩ = H_I(t)|ψ⟩` over `[0, T]` with step halving.
pub fn evolve(
    psi0: &TruncatedState,
    space: &ModelSpace,
    setup: &CavitySetup,
    profile: SwitchingProfile,
    opts: EvolveOptions,
) -> Result<EvolutionReport, OracleError> {
    setup.validate()?;
    if psi0.amplitudes.len() != space.dim() {
        return Err(OracleError::Space(format!(
            "state of length {} on space of dim {}",
            psi0.amplitudes.len(),
            space.dim()
        )));
    }
    let prop = Propagator::new(space, setup, profile);
    let t_end = setup.flight_time();
    let run = |steps| rk4(|t, x, y| prop.derivative(t, x, y), &psi0.amplitudes, t_end, steps);
    let mut steps = starting_steps(&prop, t_end, &opts);
    let mut coarse = run(steps);
    loop {
        if 2 * steps > opts.max_steps {
            let fine = TruncatedState { amplitudes: coarse };
            return Err(OracleError::StepFailure { steps, change: fine.excited_population() });
        }
        steps *= 2;
        let fine = run(steps);
        let (pc, pf) = (excited(&coarse), excited(&fine));
        let p_change = (pf - pc).abs();
        let s_change = max_diff(&coarse, &fine);
        if p_change <= opts.rel_tol * pf && s_change <= opts.state_tol {
            return report(psi0, TruncatedState { amplitudes: fine }, steps, opts.norm_tolerance);
        }
        coarse = fine;
    }
}

fn excited(x: &[C64]) -> f64 {
    x[x.len() / 2..].iter().map(|c| c.norm_sqr()).sum()
}

fn report(
    psi0: &TruncatedState,
    psi: TruncatedState,
    steps: usize,
    norm_tolerance: f64,
) -> Result<EvolutionReport, OracleError> {
    let norm_drift = (psi.norm_sqr() - psi0.norm_sqr()).abs();
    if norm_drift > norm_tolerance {
        return Err(OracleError::NormDrift(norm_drift));
    }
    let a = psi0.inner(&psi);
    Ok(EvolutionReport {
        survival_amplitude: a,
        p_excite: psi.excited_population(),
        p_orthogonal: (1.0 - a.norm_sqr()).max(0.0),
        acquired_phase: a.arg(),
        norm_drift,
        steps,
    })
}

/// `U⁽¹⁾|ψ0⟩` and, for `order = 2`, `U⁽²⁾|ψ0⟩`, from the hierarchy
/// `φ₁' = −iHψ0`, `φ₂' = −iHφ₁` integrated with step halving to `state_tol`.
pub fn dyson_orders(
    psi0: &TruncatedState,
    space: &ModelSpace,
    setup: &CavitySetup,
    order: usize,
    opts: EvolveOptions,
) -> Result<Vec<TruncatedState>, OracleError> {
    setup.validate()?;
    if !(1..=2).contains(&order) {
        return Err(OracleError::Space(format!("Dyson order must be 1 or 2, got {order}")));
    }
    let prop = Propagator::new(space, setup, SwitchingProfile::none());
    let d = space.dim();
    let t_end = setup.flight_time();
    let zero = C64::new(0.0, 0.0);
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        prop.derivative(t, &psi0.amplitudes, &mut dy[..d]);
        if order == 2 {
            let (lo, hi) = dy.split_at_mut(d);
            let _ = lo;
            prop.derivative(t, &y[..d], hi);
        }
    };
    let y0 = vec![zero; order * d];
    let mut steps = starting_steps(&prop, t_end, &opts);
    let mut coarse = rk4(rhs, &y0, t_end, steps);
    loop {
        if 2 * steps > opts.max_steps {
            return Err(OracleError::StepFailure { steps, change: f64::NAN });
        }
        steps *= 2;
        let fine = rk4(rhs, &y0, t_end, steps);
        let scale = fine.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let change = max_diff(&coarse, &fine);
        if change <= opts.state_tol * scale {
            return Ok(fine.chunks(d).map(|c| TruncatedState { amplitudes: c.to_vec() }).collect());
        }
        coarse = fine;
    }
}

/// Oracle-friendly cavity: `L = 3`, `β = 2` resonant, `v = 0.073`.
pub fn validation_setup(lambda: f64) -> CavitySetup {
    CavitySetup::resonant(3.0, 2, 0.073, lambda).expect("validation setup is valid")
}

/// Modes `{2, 3}` with cutoffs 25 and 12.
pub fn validation_space() -> ModelSpace {
    let cutoffs = [ModeCutoff::new(25).expect("cutoff"), ModeCutoff::new(12).expect("cutoff")];
    ModelSpace::new(&[2, 3], &cutoffs, 2).expect("validation space is valid")
}

/// Exact and second-order results for one target state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub exact: EvolutionReport,
    pub p_perturbative: f64,
    pub gamma_perturbative: f64,
}

impl Comparison {
    pub fn p_relative_error(&self) -> f64 {
        (self.p_perturbative - self.exact.p_excite).abs() / self.exact.p_excite
    }

    pub fn phase_error(&self) -> f64 {
        (self.gamma_perturbative - self.exact.acquired_phase).abs()
    }
}

/// Evolves `target` in mode `β` (vacuum in the others) and
/// evaluates the perturbative formulas with sums restricted to the same modes.
pub fn compare(
    target: &FieldState,
    space: &ModelSpace,
    setup: &CavitySetup,
    opts: EvolveOptions,
) -> Result<Comparison, OracleError> {
    let mut states = vec![FieldState::vacuum(); space.modes().len()];
    let probe = space.modes().iter().position(|&m| m == setup.beta).expect("space contains beta");
    states[probe] = *target;
    let psi0 = TruncatedState::ground(space, &states, 1e-9)?;
    let exact = evolve(&psi0, space, setup, SwitchingProfile::none(), opts)?;
    let kernels = TransitionKernels::restricted(setup, space.modes())?;
    Ok(Comparison {
        exact,
        p_perturbative: transition_probability_with(target, &kernels).p_excite,
        gamma_perturbative: phase_with(target, &kernels).gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::{kernel_i, Sign};

    fn setup(lambda: f64) -> CavitySetup {
        CavitySetup::resonant(1.0, 2, 0.073, lambda).unwrap()
    }

    fn space(n: &[usize]) -> ModelSpace {
        let cut: Vec<_> = n.iter().map(|&k| ModeCutoff::new(k).unwrap()).collect();
        ModelSpace::new(&[2, 3], &cut, 2).unwrap()
    }

    #[test]
    fn space_validation() {
        let c = ModeCutoff::new(4).unwrap();
        assert!(ModelSpace::new(&[3], &[c], 2).is_err());
        assert!(ModelSpace::new(&[3, 2], &[c, c], 2).is_err());
        assert!(matches!(
            ModelSpace::with_budget(&[2, 3], &[c, c], 2, 10),
            Err(OracleError::Budget { dim: 50, budget: 10 })
        ));
        assert_eq!(space(&[4, 2]).dim(), 30);
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let s = space(&[4, 3]);
        let h = hamiltonian_at(3.7, &s, &setup(1e-2), SwitchingProfile::new(0.01));
        assert!(h.hermiticity_defect() < 1e-16);
    }

    #[test]
    fn hamiltonian_vanishes_at_mode_node() {
        let st = setup(1e-2);
        let c = ModeCutoff::new(3).unwrap();
        let s = ModelSpace::new(&[2], &[c], 2).unwrap();
        let t = 1.0 / st.spatial_rate(2) * std::f64::consts::PI;
        assert!(hamiltonian_at(t, &s, &st, SwitchingProfile::none()).max_abs() < 1e-16);
    }

    #[test]
    fn single_element_matches_hand_value() {
        let st = setup(1e-2);
        let s = space(&[3, 2]);
        let t = 2.3;
        let h = hamiltonian_at(t, &s, &st, SwitchingProfile::none());
        let row = s.index(AtomLevel::Excited, &[1, 0]);
        let col = s.index(AtomLevel::Ground, &[0, 0]);
        let k = st.wavenumber(2);
        let expect =
            C64::from_polar(st.lambda / (2.0 * std::f64::consts::PI).sqrt() * (k * st.v * t).sin(), (st.gap() + k) * t);
        assert!((h.get(row, col) - expect).norm() < 1e-17);
    }

    #[test]
    fn zero_coupling_is_identity() {
        let s = space(&[3, 2]);
        let psi =
            TruncatedState::ground(&s, &[FieldState::coherent(0.5, 0.0).unwrap(), FieldState::vacuum()], 1e-2).unwrap();
        let r = evolve(&psi, &s, &setup(0.0), SwitchingProfile::none(), EvolveOptions::default()).unwrap();
        assert!((r.survival_amplitude - psi.norm_sqr()).norm() < 1e-15);
        assert_eq!(r.p_excite, 0.0);
    }

    #[test]
    fn product_embedding_places_amplitudes() {
        let s = space(&[2, 1]);
        let fields = [
            FockVector { amplitudes: vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)], norm_defect: 0.0 },
            FockVector { amplitudes: vec![C64::new(1.0, 0.0)], norm_defect: 0.0 },
        ];
        let psi = TruncatedState::product(&s, AtomLevel::Excited, &fields).unwrap();
        assert_eq!(psi.amplitudes[s.index(AtomLevel::Excited, &[1, 0])], C64::new(0.0, 0.8));
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-15);
        assert_eq!(psi.excited_population(), psi.norm_sqr());
    }

    #[test]
    fn first_order_reproduces_kernel() {
        let st = setup(1e-2);
        let s = space(&[2, 2]);
        let psi = TruncatedState::ground(&s, &[FieldState::vacuum(), FieldState::vacuum()], 1e-12).unwrap();
        let opts = EvolveOptions { state_tol: 1e-10, ..Default::default() };
        let u1 = &dyson_orders(&psi, &s, &st, 1, opts).unwrap()[0];
        for (occ, kappa) in [([1, 0], 2usize), ([0, 1], 3)] {
            let got = u1.amplitudes[s.index(AtomLevel::Excited, &occ)];
            let i = kernel_i(&st, Sign::Plus, kappa).value;
            let expect = -C64::i() * st.lambda / (kappa as f64 * std::f64::consts::PI).sqrt() * i;
            assert!((got - expect).norm() <= 1e-8 * expect.norm(), "{kappa}: {got} vs {expect}");
        }
    }
}

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SweepError;
use crate::fockspace::FieldState;
use crate::integrals::{kernel_i, CavitySetup, Sign, SwitchingProfile, TransitionKernels};
use crate::oracle::{
    compare, dyson_orders, hamiltonian_at, validation_setup, validation_space, AtomLevel, Comparison, EvolveOptions,
    TruncatedState,
};
use crate::perturbation::{
    phase_with, resolution_with, small_phase_with, transition_probability_with, ResolutionQuery,
};

pub const PRESETS: &[&str] = &["quick", "reductions", "scaling"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub preset: String,
    pub passed: bool,
    pub elapsed_seconds: f64,
    pub checks: Vec<Check>,
}

fn below(name: &str, value: f64, bound: f64, detail: impl Into<String>) -> Check {
    Check { name: name.into(), passed: value <= bound, value, bound, detail: detail.into() }
}

fn within(name: &str, value: f64, lo: f64, hi: f64) -> Check {
    Check {
        name: name.into(),
        passed: (lo..=hi).contains(&value),
        value,
        bound: hi,
        detail: format!("expected in [{lo}, {hi}]"),
    }
}

fn failed(name: &str, err: impl std::fmt::Display) -> Check {
    Check { name: name.into(), passed: false, value: f64::NAN, bound: f64::NAN, detail: err.to_string() }
}

fn oracle_options() -> EvolveOptions {
    EvolveOptions { state_tol: 1e-11, ..Default::default() }
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

fn quick() -> Vec<Check> {
    let lambda = 1e-2;
    let setup = validation_setup(lambda);
    let space = validation_space();
    let mut checks = Vec::new();

    let h = hamiltonian_at(0.37 * setup.flight_time(), &space, &setup, SwitchingProfile::none());
    checks.push(below("hamiltonian_hermitian", h.hermiticity_defect(), 1e-15, "max |H - H^dagger|"));

    let targets = [("vacuum", FieldState::vacuum()), ("coherent_1", FieldState::coherent(1.0, 0.0).expect("state"))];
    let runs: Vec<_> = targets.par_iter().map(|(_, s)| compare(s, &space, &setup, oracle_options())).collect();
    for ((label, _), run) in targets.iter().zip(runs) {
        match run {
            Ok(c) => {
                checks.push(below(&format!("p_excite_{label}"), c.p_relative_error(), 0.1, "relative, O(lambda^2)"));
                checks.push(below(
                    &format!("phase_{label}"),
                    c.phase_error(),
                    5.0 * lambda * lambda,
                    "absolute, 5 lambda^2",
                ));
                checks.push(below(&format!("norm_drift_{label}"), c.exact.norm_drift, 1e-9, "unitarity"));
            }
            Err(e) => checks.push(failed(&format!("oracle_{label}"), e)),
        }
    }

    let vac = TruncatedState::ground(&space, &[FieldState::vacuum(), FieldState::vacuum()], 1e-12);
    let dyson = vac.and_then(|v| {
        let d = dyson_orders(&v, &space, &setup, 2, EvolveOptions { state_tol: 1e-10, ..Default::default() })?;
        Ok((v, d))
    });
    match (dyson, TransitionKernels::restricted(&setup, space.modes())) {
        (Ok((v, d)), Ok(k)) => {
            let worst = space
                .modes()
                .iter()
                .enumerate()
                .map(|(i, &kappa)| {
                    let mut occ = [0, 0];
                    occ[i] = 1;
                    let got = d[0].amplitudes[space.index(AtomLevel::Excited, &occ)];
                    let i_plus = kernel_i(&setup, Sign::Plus, kappa).value;
                    rel(got, -C64::i() * lambda / (kappa as f64 * PI).sqrt() * i_plus)
                })
                .fold(0.0, f64::max);
            checks.push(below("dyson_first_order", worst, 1e-8, "overlaps with <e,1_gamma|"));
            let u2 = v.inner(&d[1]);
            checks.push(below(
                "dyson_second_order",
                rel(u2, -k.vacuum_c.value * lambda * lambda),
                1e-7,
                "vacuum diagonal",
            ));
        }
        (Err(e), _) => checks.push(failed("dyson", e)),
        (_, Err(e)) => checks.push(failed("dyson", e)),
    }

    let coherent = FieldState::coherent(1.0, 0.0).expect("state");
    let pair = rayon::join(
        || compare(&coherent, &space, &setup, oracle_options()),
        || space.scaled(1.5, setup.beta).and_then(|s| compare(&coherent, &s, &setup, oracle_options())),
    );
    match pair {
        (Ok(a), Ok(b)) => {
            let dp = (a.exact.p_excite - b.exact.p_excite).abs() / b.exact.p_excite;
            let dg = (a.exact.acquired_phase - b.exact.acquired_phase).abs() / b.exact.acquired_phase.abs();
            checks.push(below("cutoff_insensitivity_p", dp, 1e-4, "n_max x 1.5"));
            checks.push(below("cutoff_insensitivity_phase", dg, 1e-4, "n_max x 1.5"));
        }
        (Err(e), _) | (_, Err(e)) => checks.push(failed("cutoff_insensitivity", e)),
    }
    checks
}

fn reductions() -> Vec<Check> {
    let kernels = match TransitionKernels::build(&CavitySetup::default_cavity(), 1e-8) {
        Ok(k) => k,
        Err(e) => return vec![failed("kernels", e)],
    };
    let mut checks = Vec::new();
    let exact = |name: &str, a: &FieldState, b: &FieldState| {
        let same = transition_probability_with(a, &kernels) == transition_probability_with(b, &kernels)
            && phase_with(a, &kernels) == phase_with(b, &kernels);
        Check {
            name: name.into(),
            passed: same,
            value: if same { 0.0 } else { 1.0 },
            bound: 0.0,
            detail: "bitwise equality of P_e and phase".into(),
        }
    };
    let st = |r: Result<FieldState, _>| r.expect("valid state");
    for (alpha, theta) in [(0.5, 0.0), (1.0, 0.7), (3.0, 2.0)] {
        checks.push(exact(
            &format!("r0_equals_coherent_{alpha}"),
            &st(FieldState::squeezed_coherent(0.0, 0.9, alpha, theta)),
            &st(FieldState::coherent(alpha, theta)),
        ));
    }
    for (r, phi) in [(0.3, 0.0), (1.0, 1.1), (2.0, 3.0)] {
        checks.push(exact(
            &format!("alpha0_equals_squeezed_vacuum_{r}"),
            &st(FieldState::squeezed_coherent(r, phi, 0.0, 0.4)),
            &st(FieldState::squeezed_vacuum(r, phi)),
        ));
    }
    checks.push(exact("fock0_equals_vacuum", &FieldState::Fock(0), &FieldState::vacuum()));
    let zero = kernels.with_lambda(0.0);
    let s = st(FieldState::squeezed_coherent(1.0, 0.0, 1.0, 0.5));
    let p0 = transition_probability_with(&s, &zero).p_excite;
    let g0 = phase_with(&s, &zero).gamma;
    checks.push(below("lambda0_trivial", p0.abs().max(g0.abs()), 0.0, "P_e = gamma = 0"));
    let worst = (0..8)
        .map(|j| {
            let psi = 0.4 + j as f64 * 0.7;
            let a = st(FieldState::squeezed_coherent_relative(1.0, 0.0, 1.0, psi));
            let b = st(FieldState::squeezed_coherent_relative(1.0, 0.0, 1.0, psi + 2.0 * PI));
            let (ga, gb) = (phase_with(&a, &kernels).gamma, phase_with(&b, &kernels).gamma);
            (ga - gb).abs() / ga.abs()
        })
        .fold(0.0, f64::max);
    checks.push(below("psi_periodicity", worst, 1e-12, "gamma(Psi) = gamma(Psi + 2 pi)"));
    checks
}

fn scaling() -> Vec<Check> {
    let mut checks = Vec::new();
    match TransitionKernels::build(&CavitySetup::default_cavity(), 1e-8) {
        Ok(k) => {
            let s = FieldState::squeezed_coherent_relative(0.7, 0.0, 1.2, 0.4).expect("state");
            let k2 = k.with_lambda(2.0 * k.setup.lambda);
            let rp = transition_probability_with(&s, &k2).p_excite / transition_probability_with(&s, &k).p_excite;
            let rg = small_phase_with(&s, &k2) / small_phase_with(&s, &k);
            checks.push(below("p_excite_lambda2", (rp - 4.0).abs(), 1e-10, "P(2 lambda)/P(lambda) = 4"));
            checks.push(below("small_phase_lambda2", (rg - 4.0).abs(), 1e-10, "gamma(2 lambda)/gamma(lambda) = 4"));
            let reference = |a| FieldState::coherent(a, 0.0).expect("state");
            let gap = |n, m, a| resolution_with(&ResolutionQuery::FockGap { n, m }, &reference(a), &k);
            match (gap(3, 5, 0.5), gap(3, 5, 1.0), gap(3, 5, 3.0), gap(3, 10, 1.0)) {
                (Ok(a), Ok(b), Ok(c), Ok(d)) => {
                    let spread = (a - b).abs().max((c - b).abs()) / b.abs();
                    checks.push(below("fock_gap_reference_independent", spread, 1e-12, "alpha_R in {0.5, 1, 3}"));
                    checks.push(below("fock_gap_linear_in_m", (d / b - 2.0).abs() / 2.0, 1e-6, "m = 10 vs m = 5"));
                }
                _ => checks.push(failed("fock_gap", "resolution failed")),
            }
        }
        Err(e) => checks.push(failed("kernels", e)),
    }

    let lambdas = [1e-2, 5e-3, 2.5e-3];
    let target = FieldState::coherent(1.0, 0.0).expect("state");
    let space = validation_space();
    let runs: Result<Vec<Comparison>, _> =
        lambdas.par_iter().map(|&l| compare(&target, &space, &validation_setup(l), oracle_options())).collect();
    match runs {
        Ok(runs) => {
            for i in 0..2 {
                let ratio = runs[i].p_relative_error() / runs[i + 1].p_relative_error();
                checks.push(within(&format!("oracle_relative_error_ratio_{i}"), ratio, 3.0, 5.0));
                let abs = |c: &Comparison| (c.p_perturbative - c.exact.p_excite).abs();
                let ratio4 = abs(&runs[i]) / abs(&runs[i + 1]);
                checks.push(within(&format!("oracle_lambda4_ratio_{i}"), ratio4, 12.0, 20.0));
            }
            for (c, l) in runs.iter().zip(lambdas) {
                checks.push(below(&format!("oracle_phase_{l}"), c.phase_error(), 5.0 * l * l, "absolute, 5 lambda^2"));
            }
        }
        Err(e) => checks.push(failed("oracle_sweep", e)),
    }
    checks
}

/// Runs a named check suite; numerical failures become failed checks.
pub fn validate(preset: &str) -> Result<ValidationReport, SweepError> {
    let start = Instant::now();
    let checks = match preset {
        "quick" => quick(),
        "reductions" => reductions(),
        "scaling" => scaling(),
        _ => return Err(SweepError::Config(format!("unknown preset {preset:?}; known: {PRESETS:?}"))),
    };
    Ok(ValidationReport {
        preset: preset.into(),
        passed: checks.iter().all(|c| c.passed),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        checks,
    })
}

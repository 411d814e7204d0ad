//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use modeinv::fockspace::{build_state, expected_photon_number, ladder_matrices, FieldState, ModeCutoff};
use modeinv::integrals::{kernel_i, kernel_i_quadrature, CavitySetup, Sign, TransitionKernels};
use modeinv::oracle::{compare, dyson_orders, validation_setup, validation_space, EvolveOptions, TruncatedState};
use modeinv::perturbation::{
    phase_with, resolution_with, stability_curve, transition_probability_with, ResolutionQuery,
};
use modeinv::quadrature::QuadratureOptions;
use modeinv::sweep::{recipe, run_sweep};
use modeinv::units::rate_per_second_to_natural;
use modeinv::C64;
use nalgebra::DVector;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mode_invisibility() -> Outcome {
    let mut worst = 0.0f64;
    for v in [modeinv::units::convert_units(1000.0).unwrap(), 0.3] {
        for beta in [2usize, 4] {
            let setup = CavitySetup::resonant(0.25, beta, v, 1e-4).unwrap();
            let closed = kernel_i(&setup, Sign::Minus, beta).value;
            if closed != C64::new(0.0, 0.0) {
                return Err(format!("closed-form I- = {closed} at beta = {beta}, v = {v}"));
            }
            let quad = kernel_i_quadrature(&setup, Sign::Minus, beta, QuadratureOptions::default())
                .map_err(|e| e.to_string())?
                .value;
            let plus = kernel_i(&setup, Sign::Plus, beta).value;
            worst = worst.max(quad.norm() / plus.norm());
        }
    }
    ensure(worst <= 1e-12, format!("closed I- = 0 exactly; max |I-_quad|/|I+| = {worst:.3e} (bound 1e-12)"))
}

fn odd_resonant() -> Outcome {
    let v = modeinv::units::convert_units(1000.0).unwrap();
    let l = 0.25;
    let mut worst = 0.0f64;
    for beta in [1usize, 3, 5] {
        let setup = CavitySetup::resonant(l, beta, v, 1e-4).unwrap();
        let quad = kernel_i_quadrature(&setup, Sign::Minus, beta, QuadratureOptions::reference())
            .map_err(|e| e.to_string())?
            .value;
        let norm = (beta as f64 * PI).sqrt();
        let expected = ((-1f64).powi(beta as i32) - 1.0) * l / ((beta as f64 * PI).powf(1.5) * v);
        worst = worst.max((-quad / norm - expected).norm() / expected.abs());
    }
    ensure(worst <= 1e-9, format!("max relative deviation {worst:.3e} over beta in {{1,3,5}} (bound 1e-9)"))
}

fn magnitude() -> Outcome {
    let setup = CavitySetup::default_cavity();
    let k = TransitionKernels::build(&setup, 1e-8).map_err(|e| e.to_string())?;
    let p = transition_probability_with(&FieldState::coherent(1.0, 0.0).unwrap(), &k);
    let per_photon = p.breakdown.resonant_mode_term;
    ensure(
        (1e-24..=1e-20).contains(&p.p_excite),
        format!("P_e(|alpha| = 1) = {:.3e} in [1e-24, 1e-20]; |alpha|^2 coefficient {per_photon:.3e}", p.p_excite),
    )
}

fn stability() -> Outcome {
    let setup = CavitySetup::default_cavity();
    let state = FieldState::coherent(1.0, 0.0).unwrap();
    let mut rates: Vec<f64> = (0..=12).map(|i| 1e-5 * 10f64.powf(i as f64 / 4.0)).collect();
    rates.push(1e-3);
    let eps: Vec<f64> = rates.iter().map(|&r| rate_per_second_to_natural(r).unwrap()).collect();
    let curve = stability_curve(&setup, &state, &eps, 1e-8).map_err(|e| e.to_string())?;
    let p3 = *curve.p_excite.last().unwrap();
    let slope = curve.slope.ok_or("no slope")?;
    ensure(
        (1e-15..=1e-13).contains(&p3) && (slope - 2.0).abs() <= 0.1,
        format!("P_e(1e-3 /s) = {p3:.3e} in [1e-15, 1e-13]; log-log slope {slope:.4} (2 +/- 0.1)"),
    )
}

fn oracle_equivalence() -> Outcome {
    let space = validation_space();
    let target = FieldState::coherent(1.0, 0.0).unwrap();
    let opts = EvolveOptions { state_tol: 1e-11, ..Default::default() };
    let lambdas = [1e-2, 5e-3, 2.5e-3];
    let runs = std::thread::scope(|s| {
        let handles: Vec<_> = lambdas
            .iter()
            .map(|&l| {
                let space = &space;
                s.spawn(move || compare(&target, space, &validation_setup(l), opts))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect::<Result<Vec<_>, _>>()
    })
    .map_err(|e| e.to_string())?;
    let errs: Vec<f64> = runs.iter().map(|c| c.p_relative_error()).collect();
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    let phase_ok = runs.iter().zip(lambdas).all(|(c, l)| c.phase_error() <= 5.0 * l * l);
    let worst_phase = runs.iter().zip(lambdas).map(|(c, l)| c.phase_error() / (l * l)).fold(0.0, f64::max);
    ensure(
        ratios.iter().all(|r| (3.0..=5.0).contains(r)) && phase_ok,
        format!(
            "relative errors {:.3e}, {:.3e}, {:.3e}; ratios {:.3}, {:.3} in [3, 5]; max phase error {:.3e} lambda^2 (bound 5)",
            errs[0], errs[1], errs[2], ratios[0], ratios[1], worst_phase
        ),
    )
}

fn dyson() -> Outcome {
    let lambda = 1e-2;
    let setup = validation_setup(lambda);
    let space = validation_space();
    let psi0 = TruncatedState::ground(&space, &[FieldState::vacuum(), FieldState::vacuum()], 1e-12)
        .map_err(|e| e.to_string())?;
    let orders = dyson_orders(&psi0, &space, &setup, 2, EvolveOptions { state_tol: 1e-10, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let u2 = psi0.inner(&orders[1]);
    let expect: C64 = space
        .modes()
        .iter()
        .map(|&g| {
            let c = modeinv::integrals::kernel_c_closed(&setup, Sign::Plus, g).unwrap().value;
            -lambda * lambda * c.conj() / (g as f64 * PI)
        })
        .sum();
    let rel = (u2 - expect).norm() / expect.norm();
    ensure(rel <= 1e-7, format!("<psi0|U2|psi0> = {u2:.6e}, sum = {expect:.6e}, relative {rel:.3e} (bound 1e-7)"))
}

fn reductions() -> Outcome {
    let k = TransitionKernels::build(&CavitySetup::default_cavity(), 1e-8).map_err(|e| e.to_string())?;
    let mut cases = 0;
    for (alpha, theta) in [(0.0, 0.0), (0.5, 0.3), (1.0, 1.0), (4.0, 2.5)] {
        for phi in [0.0, 1.2] {
            let a = FieldState::squeezed_coherent(0.0, phi, alpha, theta).unwrap();
            let b = FieldState::coherent(alpha, theta).unwrap();
            if transition_probability_with(&a, &k) != transition_probability_with(&b, &k)
                || phase_with(&a, &k) != phase_with(&b, &k)
            {
                return Err(format!("r = 0 differs from coherent at |alpha| = {alpha}"));
            }
            cases += 1;
        }
    }
    for (r, phi) in [(0.0, 0.0), (0.4, 0.2), (1.0, 2.0), (3.0, 5.0)] {
        for theta in [0.0, 0.9] {
            let a = FieldState::squeezed_coherent(r, phi, 0.0, theta).unwrap();
            let b = FieldState::squeezed_vacuum(r, phi).unwrap();
            if transition_probability_with(&a, &k) != transition_probability_with(&b, &k)
                || phase_with(&a, &k) != phase_with(&b, &k)
            {
                return Err(format!("alpha = 0 differs from squeezed vacuum at r = {r}"));
            }
            cases += 1;
        }
    }
    Ok(format!("{cases} cases bitwise identical for P_e and phase"))
}

fn photon_number() -> Outcome {
    let mut worst = 0.0f64;
    for r in [0.0, 0.5, 1.0] {
        for alpha in [0.0, 1.0, 2.0] {
            for psi in [0.0, PI / 2.0, PI] {
                let state = FieldState::squeezed_coherent_relative(r, 0.3, alpha, psi).unwrap();
                let cutoff = ModeCutoff::default_for(&state);
                let v = build_state(&state, cutoff).map_err(|e| e.to_string())?;
                let (a, a_dag) = ladder_matrices(cutoff);
                let psi_vec = DVector::from_vec(v.amplitudes.clone());
                let n = (psi_vec.adjoint() * (&a_dag * &a) * &psi_vec)[(0, 0)].re;
                let s = r.sinh();
                let c = r.cosh();
                let closed = s * s + alpha * alpha * (c * c + s * s) - 2.0 * s * c * alpha * alpha * psi.cos();
                if (expected_photon_number(&state) - closed).abs() > 1e-12 * closed.max(1.0) {
                    return Err(format!("expected_photon_number disagrees with closed form at {r}, {alpha}, {psi}"));
                }
                worst = worst.max((n - closed).abs());
            }
        }
    }
    ensure(worst <= 1e-8, format!("max |<a+a>_matrix - closed form| = {worst:.3e} over 27 points (bound 1e-8)"))
}

fn fock_resolution() -> Outcome {
    let k = TransitionKernels::build(&CavitySetup::default_cavity(), 1e-8).map_err(|e| e.to_string())?;
    let reference = |a: f64| FieldState::coherent(a, 0.0).unwrap();
    let gap =
        |n, m, a| resolution_with(&ResolutionQuery::FockGap { n, m }, &reference(a), &k).map_err(|e| e.to_string());
    let (mut spread, mut linear) = (0.0f64, 0.0f64);
    for n in [0usize, 3, 10, 40] {
        let unit = gap(n, 5, 1.0)? / 5.0;
        for m in [5usize, 10, 15, 20, 25] {
            let base = gap(n, m, 1.0)?;
            for a in [0.5, 3.0] {
                spread = spread.max((gap(n, m, a)? - base).abs());
            }
            linear = linear.max((base / (m as f64 * unit) - 1.0).abs());
        }
    }
    ensure(
        spread <= 1e-12 && linear <= 1e-6,
        format!("max spread over alpha_R {spread:.3e} (bound 1e-12); max deviation from m-linearity {linear:.3e} (bound 1e-6)"),
    )
}

fn shapes() -> Outcome {
    let fig3 = run_sweep(&recipe("fig3").unwrap()).map_err(|e| e.to_string())?;
    let alpha = fig3.column("alpha").unwrap();
    let g = fig3.column("gamma_unwrapped").unwrap();
    let d: Vec<f64> = g.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = d.iter().all(|&x| x > 0.0);
    let tail: Vec<f64> = d.iter().zip(&alpha).filter(|(_, &a)| a >= 10.0).map(|(&x, _)| x).collect();
    let concave = tail.windows(2).all(|w| w[1] <= w[0]);

    let fig2 = run_sweep(&recipe("fig2-mid").unwrap()).map_err(|e| e.to_string())?;
    let r = fig2.column("r").unwrap();
    let g2 = fig2.column("gamma_unwrapped").unwrap();
    let d2: Vec<f64> = g2.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let peak = d2.iter().cloned().fold(0.0, f64::max);
    let late: Vec<f64> = d2.iter().zip(&r).filter(|(_, &x)| x >= 5.0).map(|(&x, _)| x).collect();
    let late_max = late.iter().cloned().fold(0.0, f64::max);
    let fading = late.windows(2).all(|w| w[1] <= w[0]) && late_max <= 0.05 * peak;
    ensure(
        monotone && concave && fading,
        format!(
            "fig3 monotone {monotone}, increments non-increasing for |alpha| >= 10 {concave}; \
             fig2-mid max step for r > 5 is {:.2}% of peak step, decreasing {}",
            100.0 * late_max / peak,
            late.windows(2).all(|w| w[1] <= w[0])
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("mode-invisibility cancellation", mode_invisibility, Duration::from_secs(1)),
        ("resonant odd-mode formula", odd_resonant, Duration::from_secs(1)),
        ("order-of-magnitude reproduction", magnitude, Duration::from_secs(10)),
        ("stability", stability, Duration::from_secs(30)),
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(300)),
        ("Dyson term validation", dyson, Duration::from_secs(120)),
        ("reduction identities", reductions, Duration::from_secs(30)),
        ("photon-number identity", photon_number, Duration::from_secs(30)),
        ("Fock-vs-coherent resolution", fock_resolution, Duration::from_secs(5)),
        ("shape reproduction", shapes, Duration::from_secs(60)),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (tag, detail) = match outcome {
            Ok(d) if elapsed <= *budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; runtime {elapsed:.2?} over budget {budget:?}")),
            Err(d) => ("FAIL", d),
        };
        if tag == "FAIL" {
            failures += 1;
        }
        println!("{tag} [{}] {name}: {detail} ({elapsed:.2?})", i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

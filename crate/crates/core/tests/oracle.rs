use std::f64::consts::{FRAC_PI_2, PI};

use modeinv::fockspace::{FieldState, ModeCutoff};
use modeinv::integrals::{kernel_i, Sign, SwitchingProfile, TransitionKernels};
use modeinv::oracle::{
    compare, dyson_orders, evolve, hamiltonian_at, validation_setup, validation_space, EvolveOptions, ModelSpace,
    OracleError, TruncatedState,
};
use modeinv::perturbation::phase_bracket;
use modeinv::C64;

fn single_mode(n_max: usize) -> ModelSpace {
    ModelSpace::new(&[2], &[ModeCutoff::new(n_max).unwrap()], 2).unwrap()
}

fn opts() -> EvolveOptions {
    EvolveOptions { state_tol: 1e-11, ..Default::default() }
}

#[test]
fn single_mode_vacuum_matches_leading_order() {
    let space = single_mode(4);
    let errors: Vec<f64> = [2e-2, 1e-2]
        .iter()
        .map(|&lambda| {
            let setup = validation_setup(lambda);
            let psi0 = TruncatedState::ground(&space, &[FieldState::vacuum()], 1e-12).unwrap();
            let exact = evolve(&psi0, &space, &setup, SwitchingProfile::none(), opts()).unwrap();
            let predicted = lambda * lambda * kernel_i(&setup, Sign::Plus, 2).value.norm_sqr() / (2.0 * PI);
            (exact.p_excite - predicted).abs() / predicted
        })
        .collect();
    assert!(errors[1] < 2e-3, "{errors:?}");
    let ratio = errors[0] / errors[1];
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn squeezed_coherent_phase_matches_oracle() {
    let target = FieldState::squeezed_coherent_relative(1.0, 0.0, 1.0, FRAC_PI_2).unwrap();
    let space = single_mode(ModeCutoff::default_for(&target).n_max());
    let runs: Vec<_> =
        [2e-3, 1e-3].iter().map(|&l| compare(&target, &space, &validation_setup(l), opts()).unwrap()).collect();
    for c in &runs {
        assert!(c.exact.norm_drift <= 1e-9);
        assert!(c.phase_error() <= 1e-3 * c.exact.acquired_phase.abs(), "{c:?}");
        assert!(c.p_relative_error() <= 0.1, "{c:?}");
    }
    let ratio = runs[0].p_relative_error() / runs[1].p_relative_error();
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
}

fn second_order_overlap(target: FieldState, n_max: usize) -> (C64, C64) {
    let space = single_mode(n_max);
    let lambda = 1e-2;
    let setup = validation_setup(lambda);
    let psi0 = TruncatedState::ground(&space, &[target], 1e-12).unwrap();
    let d = dyson_orders(&psi0, &space, &setup, 2, EvolveOptions { state_tol: 1e-10, ..Default::default() }).unwrap();
    assert!(psi0.inner(&d[0]).norm() <= 1e-12);
    let kernels = TransitionKernels::restricted(&setup, space.modes()).unwrap();
    (psi0.inner(&d[1]), -phase_bracket(&target, &kernels) * lambda * lambda)
}

#[test]
fn second_order_dyson_matches_bracket_for_fock_states() {
    for n in [0, 1, 4] {
        let (got, expected) = second_order_overlap(FieldState::Fock(n), 10);
        assert!((got - expected).norm() <= 1e-7 * expected.norm(), "n={n}: {got} vs {expected}");
    }
}

#[test]
fn second_order_dyson_near_bracket_for_squeezed_coherent() {
    // The photon-weight bracket omits the anomalous <a^2> terms.
    let target = FieldState::squeezed_coherent_relative(1.0, 0.0, 1.0, FRAC_PI_2).unwrap();
    let (got, expected) = second_order_overlap(target, ModeCutoff::default_for(&target).n_max());
    assert!((got - expected).norm() <= 1e-4 * expected.norm(), "{got} vs {expected}");
}

#[test]
fn cutoff_increase_changes_little() {
    let target = FieldState::coherent(1.0, 0.3).unwrap();
    let setup = validation_setup(1e-2);
    let base = validation_space();
    let a = compare(&target, &base, &setup, opts()).unwrap();
    let b = compare(&target, &base.scaled(1.5, 2).unwrap(), &setup, opts()).unwrap();
    assert!((a.exact.p_excite - b.exact.p_excite).abs() <= 1e-4 * b.exact.p_excite);
    assert!((a.exact.acquired_phase - b.exact.acquired_phase).abs() <= 1e-4 * b.exact.acquired_phase.abs());
}

#[test]
fn hamiltonian_is_hermitian_at_many_times() {
    let space = validation_space();
    let setup = validation_setup(1e-2);
    for j in 0..7 {
        let t = setup.flight_time() * j as f64 / 6.0;
        let h = hamiltonian_at(t, &space, &setup, SwitchingProfile::new(0.1 / setup.flight_time()));
        assert!(h.hermiticity_defect() <= 1e-15);
        assert!(h.max_abs() > 0.0 || j == 0 || j == 6);
    }
}

#[test]
fn step_budget_and_dimension_budget_are_reported() {
    let space = single_mode(4);
    let setup = validation_setup(1e-2);
    let psi0 = TruncatedState::ground(&space, &[FieldState::vacuum()], 1e-12).unwrap();
    let tight = EvolveOptions { initial_steps: Some(8), max_steps: 16, ..Default::default() };
    assert!(matches!(
        evolve(&psi0, &space, &setup, SwitchingProfile::none(), tight),
        Err(OracleError::StepFailure { .. })
    ));
    let cut = ModeCutoff::new(999).unwrap();
    assert!(matches!(ModelSpace::new(&[1, 2, 3], &[cut; 3], 2), Err(OracleError::Budget { .. })));
}

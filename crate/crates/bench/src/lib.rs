//! Shared fixtures for the criterion benches.

use modeinv::fockspace::{FieldState, ModeCutoff};
use modeinv::integrals::CavitySetup;
use modeinv::oracle::{validation_space, ModelSpace, TruncatedState};

/// The default cavity at λ = 1e-4.
pub fn default_setup() -> CavitySetup {
    CavitySetup::default_cavity()
}

/// Squeezed coherent probe used across benches.
pub fn probe_state() -> FieldState {
    FieldState::squeezed_coherent_relative(1.0, 0.0, 1.0, 0.5).expect("valid state")
}

/// Single-mode oracle space with a small cutoff.
pub fn small_space() -> ModelSpace {
    ModelSpace::new(&[2], &[ModeCutoff::new(6).expect("cutoff")], 2).expect("space")
}

/// Two-mode validation space with a coherent probe in mode β.
pub fn validation_start() -> (ModelSpace, TruncatedState) {
    let space = validation_space();
    let states = [FieldState::coherent(1.0, 0.0).expect("state"), FieldState::vacuum()];
    let psi0 = TruncatedState::ground(&space, &states, 1e-9).expect("state");
    (space, psi0)
}

//! Numerical toolkit for the mode-invisibility quantum non-demolition scheme.
//!
//! A two-level atom crosses a Dirichlet cavity at constant speed. When the
//! probed mode is even and resonant with the atomic gap, the rotating-wave
//! first-order amplitude cancels, leaving the field nearly untouched while the
//! atom still picks up a measurable second-order phase.
//!
//! * [`fockspace`]: truncated bosonic algebra and state construction.
//! * [`integrals`]: trajectory kernels `I±`, `C±` and vacuum mode sums.
//! * [`perturbation`]: transition probabilities, phases, interferometry.
//! * [`oracle`]: exact time evolution on a truncated atom ⊗ field space.
//! * [`sweep`]: parameter sweeps, figure recipes, CSV/SVG output, validation.
//!
//! Units are natural (`c = ħ = 1`); lengths are in metres, so times are in
//! light-metres. [`units`] converts SI speeds and switching rates.

pub mod fockspace;
pub mod integrals;
pub mod oracle;
pub mod perturbation;
pub mod quadrature;
pub mod sweep;
pub mod units;

pub use fockspace::{ComplexAmplitude, FieldState, FockVector, ModeCutoff, SqueezeParams};
pub use integrals::{CavitySetup, KernelMethod, KernelValue, ModeSum, Sign, SwitchingProfile};
pub use oracle::{EvolutionReport, ModelSpace, TruncatedState};
pub use perturbation::{InterferometryConfig, PhaseResult, ProbabilityResult, ResolutionQuery};
pub use sweep::{SweepResult, SweepSpec};

pub use num_complex::Complex64 as C64;

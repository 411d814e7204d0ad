use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{Observable, SweepSpec, SETUP_PARAMETERS};
use super::SweepError;
use crate::integrals::{linear_fit, TransitionKernels};
use crate::perturbation::{
    interferometry_with, phase_with, resolution_with, small_phase_with, transition_probability_with, unwrap_phases,
    PerturbationError,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Float(f64),
    Bool(bool),
}

impl Cell {
    pub fn as_f64(self) -> Option<f64> {
        match self {
            Cell::Float(x) => Some(x),
            Cell::Bool(_) => None,
        }
    }
}

/// Ordered rows plus derived metadata; `spec` echoes the full configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Derived values such as fitted slopes, as `(key, value)`.
    pub metadata: Vec<(String, String)>,
}

impl SweepResult {
    /// Values of `name` over all rows.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect())
    }

    /// Rows of one series (or all rows when there is no series).
    pub fn series_rows(&self, value: Option<f64>) -> Vec<&Vec<Cell>> {
        match value {
            None => self.rows.iter().collect(),
            Some(s) => self.rows.iter().filter(|r| r[1].as_f64() == Some(s)).collect(),
        }
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Observable columns, after the swept (and series) parameter.
pub fn value_columns(observable: Observable) -> &'static [&'static str] {
    match observable {
        Observable::Probability => &[
            "p_excite",
            "resonant_mode_term",
            "squeeze_term",
            "interference_term",
            "vacuum_sum_term",
            "weak_adiabatic",
        ],
        Observable::Phase => &[
            "gamma",
            "gamma_unwrapped",
            "eta_im",
            "survival_abs",
            "small_phase",
            "p_excite",
            "branch_warning",
            "weak_adiabatic",
        ],
        Observable::InterferometricPhase => &["delta_gamma", "p_target", "p_reference", "visibility", "weak_adiabatic"],
        Observable::Resolution => &["resolution", "p_first", "p_second", "p_reference", "weak_adiabatic"],
        Observable::Visibility => &["visibility", "visibility_loss", "p_target", "p_reference", "weak_adiabatic"],
        Observable::Stability => &["p_excite", "p_minus_baseline", "weak_adiabatic"],
    }
}

fn evaluate(point: &SweepSpec, kernels: &TransitionKernels) -> Result<Vec<Cell>, SweepError> {
    use Cell::{Bool, Float};
    let target = point.target_state()?;
    let pe = |e: PerturbationError| SweepError::Compute(e);
    Ok(match point.observable {
        Observable::Probability | Observable::Stability => {
            let p = transition_probability_with(&target, kernels);
            let b = p.breakdown;
            if point.observable == Observable::Stability {
                vec![Float(p.p_excite), Float(f64::NAN), Bool(p.weak_adiabatic)]
            } else {
                vec![
                    Float(p.p_excite),
                    Float(b.resonant_mode_term),
                    Float(b.squeeze_term),
                    Float(b.interference_term),
                    Float(b.vacuum_sum_term),
                    Bool(p.weak_adiabatic),
                ]
            }
        }
        Observable::Phase => {
            let ph = phase_with(&target, kernels);
            let p = transition_probability_with(&target, kernels);
            vec![
                Float(ph.gamma),
                Float(ph.gamma),
                Float(ph.eta.im),
                Float(ph.survival_amplitude.norm()),
                Float(small_phase_with(&target, kernels)),
                Float(p.p_excite),
                Bool(ph.branch_warning),
                Bool(p.weak_adiabatic),
            ]
        }
        Observable::InterferometricPhase => {
            let out = interferometry_with(&target, &point.reference_state()?, kernels).map_err(pe)?;
            vec![Float(out.delta_gamma), Float(out.p_target), Float(out.p_reference), Float(out.visibility), Bool(true)]
        }
        Observable::Visibility => {
            let out = interferometry_with(&target, &point.reference_state()?, kernels).map_err(pe)?;
            vec![
                Float(out.visibility),
                Float(out.visibility_loss),
                Float(out.p_target),
                Float(out.p_reference),
                Bool(true),
            ]
        }
        Observable::Resolution => {
            let query = point.resolution_query()?;
            let reference = point.reference_state()?;
            let value = resolution_with(&query, &reference, kernels).map_err(pe)?;
            let (a, b) = query.states().map_err(pe)?;
            let p = |s| transition_probability_with(s, kernels).p_excite;
            vec![Float(value), Float(p(&a)), Float(p(&b)), Float(p(&reference)), Bool(true)]
        }
    })
}

fn kernels_for(point: &SweepSpec) -> Result<TransitionKernels, SweepError> {
    let setup = point.setup()?;
    let profile = point.profile()?;
    TransitionKernels::build_switched(&setup, point.rel_tol, profile).map_err(|e| SweepError::Compute(e.into()))
}

/// Evaluates the observable at every grid point in parallel; rows are in
/// series-major, grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let points = spec.points_list();
    let varies_setup = SETUP_PARAMETERS.contains(&spec.parameter.as_str())
        || spec.series_parameter.as_deref().is_some_and(|s| SETUP_PARAMETERS.contains(&s));
    let shared = if varies_setup { None } else { Some(kernels_for(spec)?) };
    let baseline = if spec.observable == Observable::Stability {
        let mut zero = spec.clone();
        zero.epsilon = 0.0;
        Some(kernels_for(&zero)?)
    } else {
        None
    };

    let mut rows = points
        .par_iter()
        .enumerate()
        .map(|(index, &(x, s))| {
            let annotate = |e: SweepError| match e {
                SweepError::Config(_) => e,
                other => SweepError::Point { index, value: x, message: other.to_string() },
            };
            let point = spec.at(x, s).map_err(annotate)?;
            let owned;
            let kernels = match &shared {
                Some(k) => {
                    owned = k.with_lambda(point.lambda);
                    &owned
                }
                None => {
                    owned = kernels_for(&point).map_err(annotate)?;
                    &owned
                }
            };
            let mut row = vec![Cell::Float(x)];
            if let Some(s) = s {
                row.push(Cell::Float(s));
            }
            row.extend(evaluate(&point, kernels).map_err(annotate)?);
            if let Some(b) = &baseline {
                let target = point.target_state().map_err(annotate)?;
                let p0 = transition_probability_with(&target, &b.with_lambda(point.lambda)).p_excite;
                let off = row.len() - 3;
                if let Cell::Float(p) = row[off] {
                    row[off + 1] = Cell::Float(p - p0);
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, SweepError>>()?;

    let mut columns = vec![spec.parameter.clone()];
    if let Some(s) = &spec.series_parameter {
        columns.push(s.clone());
    }
    let lead = columns.len();
    columns.extend(value_columns(spec.observable).iter().map(|c| c.to_string()));

    let groups: Vec<Option<f64>> =
        if spec.series_values.is_empty() { vec![None] } else { spec.series_values.iter().copied().map(Some).collect() };
    let per_group = spec.points;
    let mut metadata = Vec::new();
    for (g, label) in groups.iter().enumerate() {
        let block = &mut rows[g * per_group..(g + 1) * per_group];
        if spec.observable == Observable::Phase {
            let mut values: Vec<f64> = block.iter().map(|r| r[lead + 1].as_f64().unwrap()).collect();
            unwrap_phases(&mut values);
            for (r, v) in block.iter_mut().zip(values) {
                r[lead + 1] = Cell::Float(v);
            }
        }
        if spec.observable == Observable::Stability {
            let (xs, ys): (Vec<f64>, Vec<f64>) = block
                .iter()
                .filter_map(|r| {
                    let (e, d) = (r[0].as_f64()?, r[lead + 1].as_f64()?);
                    (e > 0.0 && d > 0.0).then(|| (e.ln(), d.ln()))
                })
                .unzip();
            let key = match label {
                None => "slope".to_string(),
                Some(s) => format!("slope[{s}]"),
            };
            let value = if xs.len() >= 2 { format!("{:.16e}", linear_fit(&xs, &ys).0) } else { "nan".into() };
            metadata.push((key, value));
        }
    }
    Ok(SweepResult { spec: spec.clone(), columns, rows, metadata })
}

use serde::{Deserialize, Serialize};

use super::SweepError;
use crate::fockspace::FieldState;
use crate::integrals::{CavitySetup, SwitchingProfile};
use crate::perturbation::ResolutionQuery;
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Probability,
    Phase,
    InterferometricPhase,
    Resolution,
    Visibility,
    Stability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridScale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Fock,
    Coherent,
    SqueezedVacuum,
    SqueezedCoherent,
}

/// Parameters that can be swept or varied across series.
pub const PARAMETERS: &[&str] = &[
    "l",
    "v_si",
    "lambda",
    "omega",
    "epsilon",
    "n",
    "alpha",
    "theta",
    "r",
    "phi",
    "psi",
    "ref_n",
    "ref_alpha",
    "ref_theta",
    "ref_r",
    "ref_phi",
    "ref_psi",
    "gap",
];

/// Parameters that change the kernels (not just the state or `λ`).
pub(crate) const SETUP_PARAMETERS: &[&str] = &["l", "v_si", "omega", "epsilon"];

/// A complete sweep description; serialises to a flat key/value file.
///
/// Units: `l` in metres, `v_si` in m/s, `epsilon` in 1/s, `omega` in 1/m.
/// Squeezed coherent states are set by `r`, `phi`, `alpha` and the relative
/// phase `psi = 2θ − φ`; coherent states by `alpha` and `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub observable: Observable,
    pub parameter: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub scale: GridScale,
    pub include_max: bool,
    pub series_parameter: Option<String>,
    pub series_values: Vec<f64>,

    pub l: f64,
    pub beta: usize,
    pub v_si: f64,
    pub lambda: f64,
    pub resonant: bool,
    pub omega: f64,
    pub epsilon: f64,

    pub target: StateKind,
    pub n: usize,
    pub alpha: f64,
    pub theta: f64,
    pub r: f64,
    pub phi: f64,
    pub psi: f64,

    pub reference: StateKind,
    pub ref_n: usize,
    pub ref_alpha: f64,
    pub ref_theta: f64,
    pub ref_r: f64,
    pub ref_phi: f64,
    pub ref_psi: f64,

    /// `m`, `δα`, `δr` or `δΨ` for the resolution observable.
    pub gap: f64,
    pub rel_tol: f64,
    pub title: Option<String>,
    pub notes: Vec<String>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            observable: Observable::Phase,
            parameter: "alpha".into(),
            min: 0.0,
            max: 1.0,
            points: 11,
            scale: GridScale::Linear,
            include_max: true,
            series_parameter: None,
            series_values: Vec::new(),
            l: 0.25,
            beta: 2,
            v_si: 1000.0,
            lambda: 1e-4,
            resonant: true,
            omega: 0.0,
            epsilon: 0.0,
            target: StateKind::Coherent,
            n: 0,
            alpha: 1.0,
            theta: 0.0,
            r: 0.0,
            phi: 0.0,
            psi: 0.0,
            reference: StateKind::Coherent,
            ref_n: 0,
            ref_alpha: 1.0,
            ref_theta: 0.0,
            ref_r: 0.0,
            ref_phi: 0.0,
            ref_psi: 0.0,
            gap: 1.0,
            rel_tol: 1e-8,
            title: None,
            notes: Vec::new(),
        }
    }
}

fn config(msg: impl Into<String>) -> SweepError {
    SweepError::Config(msg.into())
}

fn to_count(name: &str, value: f64) -> Result<usize, SweepError> {
    if value >= 0.0 && value.fract() == 0.0 && value < 1e9 {
        Ok(value as usize)
    } else {
        Err(config(format!("{name} must be a non-negative integer, got {value}")))
    }
}

impl SweepSpec {
    /// Parses a flat TOML document, then applies `key=value` overrides.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, SweepError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| config(format!("spec parse error: {e}")))?;
        for o in overrides {
            let (key, raw) = o.split_once('=').ok_or_else(|| config(format!("override {o:?} is not key=value")))?;
            let (key, raw) = (key.trim(), raw.trim());
            let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_string()));
            table.insert(key.to_string(), value);
        }
        let spec: Self = table.try_into().map_err(|e| config(format!("invalid spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat spec serialises")
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.points < 2 {
            return Err(config(format!("grid needs at least 2 points, got {}", self.points)));
        }
        if !PARAMETERS.contains(&self.parameter.as_str()) {
            return Err(config(format!("unknown swept parameter {:?}", self.parameter)));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.max > self.min) {
            return Err(config(format!("grid bounds must be finite with max > min, got [{}, {}]", self.min, self.max)));
        }
        if self.scale == GridScale::Log && self.min <= 0.0 {
            return Err(config("log grids require positive bounds"));
        }
        if let Some(sp) = &self.series_parameter {
            if !PARAMETERS.contains(&sp.as_str()) {
                return Err(config(format!("unknown series parameter {sp:?}")));
            }
            if *sp == self.parameter {
                return Err(config("series parameter must differ from the swept parameter"));
            }
            if self.series_values.is_empty() {
                return Err(config("series_parameter given without series_values"));
            }
        } else if !self.series_values.is_empty() {
            return Err(config("series_values given without series_parameter"));
        }
        if self.observable == Observable::Stability && self.parameter != "epsilon" {
            return Err(config("the stability observable sweeps epsilon"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(config(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        for (x, s) in self.points_list() {
            let point = self.at(x, s)?;
            point.setup()?;
            point.profile()?;
            point.target_state()?;
            if matches!(
                self.observable,
                Observable::InterferometricPhase | Observable::Resolution | Observable::Visibility
            ) {
                point.reference_state()?;
            }
            if self.observable == Observable::Resolution {
                point.resolution_query()?.states().map_err(|e| config(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Grid values of the swept parameter.
    pub fn grid(&self) -> Vec<f64> {
        let denom = if self.include_max { self.points - 1 } else { self.points } as f64;
        (0..self.points)
            .map(|i| {
                let i = i as f64;
                match self.scale {
                    GridScale::Linear => self.min + (self.max - self.min) * i / denom,
                    GridScale::Log => self.min * (self.max / self.min).powf(i / denom),
                }
            })
            .collect()
    }

    /// `(grid value, series value)` pairs, series-major.
    pub fn points_list(&self) -> Vec<(f64, Option<f64>)> {
        let grid = self.grid();
        let series: Vec<Option<f64>> = if self.series_values.is_empty() {
            vec![None]
        } else {
            self.series_values.iter().copied().map(Some).collect()
        };
        series.into_iter().flat_map(|s| grid.iter().map(move |&x| (x, s))).collect()
    }

    /// This spec with the swept and series parameters set.
    pub fn at(&self, x: f64, series: Option<f64>) -> Result<Self, SweepError> {
        let mut point = self.clone();
        point.set(&self.parameter, x)?;
        if let (Some(name), Some(s)) = (&self.series_parameter, series) {
            point.set(name, s)?;
        }
        Ok(point)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), SweepError> {
        match name {
            "l" => self.l = value,
            "v_si" => self.v_si = value,
            "lambda" => self.lambda = value,
            "omega" => self.omega = value,
            "epsilon" => self.epsilon = value,
            "n" => self.n = to_count(name, value)?,
            "alpha" => self.alpha = value,
            "theta" => self.theta = value,
            "r" => self.r = value,
            "phi" => self.phi = value,
            "psi" => self.psi = value,
            "ref_n" => self.ref_n = to_count(name, value)?,
            "ref_alpha" => self.ref_alpha = value,
            "ref_theta" => self.ref_theta = value,
            "ref_r" => self.ref_r = value,
            "ref_phi" => self.ref_phi = value,
            "ref_psi" => self.ref_psi = value,
            "gap" => self.gap = value,
            _ => return Err(config(format!("unknown parameter {name:?}"))),
        }
        Ok(())
    }

    pub fn setup(&self) -> Result<CavitySetup, SweepError> {
        let v = units::convert_units(self.v_si).map_err(|e| config(e.to_string()))?;
        let omega = if self.resonant { self.beta as f64 * std::f64::consts::PI / self.l } else { self.omega };
        CavitySetup::new(self.l, self.beta, omega, v, self.lambda, self.resonant).map_err(|e| config(e.to_string()))
    }

    pub fn profile(&self) -> Result<SwitchingProfile, SweepError> {
        let p = SwitchingProfile::per_second(self.epsilon).map_err(|e| config(e.to_string()))?;
        p.check(&self.setup()?).map_err(|e| config(e.to_string()))?;
        Ok(p)
    }

    fn state(
        kind: StateKind,
        n: usize,
        alpha: f64,
        theta: f64,
        r: f64,
        phi: f64,
        psi: f64,
    ) -> Result<FieldState, SweepError> {
        let s = match kind {
            StateKind::Fock => Ok(FieldState::Fock(n)),
            StateKind::Coherent => FieldState::coherent(alpha, theta),
            StateKind::SqueezedVacuum => FieldState::squeezed_vacuum(r, phi),
            StateKind::SqueezedCoherent => FieldState::squeezed_coherent_relative(r, phi, alpha, psi),
        };
        s.map_err(|e| config(e.to_string()))
    }

    pub fn target_state(&self) -> Result<FieldState, SweepError> {
        Self::state(self.target, self.n, self.alpha, self.theta, self.r, self.phi, self.psi)
    }

    pub fn reference_state(&self) -> Result<FieldState, SweepError> {
        Self::state(self.reference, self.ref_n, self.ref_alpha, self.ref_theta, self.ref_r, self.ref_phi, self.ref_psi)
    }

    /// Gap query derived from the target kind and `gap`.
    pub fn resolution_query(&self) -> Result<ResolutionQuery, SweepError> {
        Ok(match self.target {
            StateKind::Fock => ResolutionQuery::FockGap { n: self.n, m: to_count("gap", self.gap)? },
            StateKind::Coherent => ResolutionQuery::CoherentGap { alpha: self.alpha, delta: self.gap },
            StateKind::SqueezedVacuum => ResolutionQuery::SqueezeGap { r: self.r, delta: self.gap },
            StateKind::SqueezedCoherent => {
                ResolutionQuery::RelPhaseGap { psi: self.psi, delta: self.gap, r: self.r, alpha: self.alpha }
            }
        })
    }
}

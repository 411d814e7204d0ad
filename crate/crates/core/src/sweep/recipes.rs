use std::f64::consts::PI;

use super::spec::{GridScale, Observable, StateKind, SweepSpec};

pub const RECIPES: &[&str] = &[
    "fig2-left",
    "fig2-mid",
    "fig2-right",
    "fig3",
    "fig4-left",
    "fig4-mid",
    "fig4-right",
    "fig5",
    "fig6",
    "fig7",
    "fig8",
    "fig9",
];

const CAVITY_NOTE: &str = "cavity: L = 0.25 m, beta = 2 resonant, v = 1000 m/s (L not given in the source figures)";
const PLATEAU_NOTE: &str = "lambda = 1e-2 places the phase saturation inside the plotted range";

fn base(observable: Observable, title: &str) -> SweepSpec {
    SweepSpec { observable, title: Some(title.into()), notes: vec![CAVITY_NOTE.into()], ..Default::default() }
}

fn squeezed_coherent(mut s: SweepSpec) -> SweepSpec {
    s.target = StateKind::SqueezedCoherent;
    s.r = 1.0;
    s.alpha = 1.0;
    s.psi = 0.0;
    s.lambda = 1e-2;
    s.notes.push(PLATEAU_NOTE.into());
    s.notes.push("fixed r = 1, |alpha| = 1, Psi = 0, phi = 0 where not swept".into());
    s
}

fn relative_phase(mut s: SweepSpec) -> SweepSpec {
    s.parameter = "psi".into();
    s.min = 0.0;
    s.max = 2.0 * PI;
    s.points = 72;
    s.include_max = false;
    s
}

fn squeeze_amplitude(mut s: SweepSpec) -> SweepSpec {
    s.parameter = "r".into();
    s.min = 0.0;
    s.max = 8.0;
    s.points = 81;
    s
}

fn coherent_amplitude(mut s: SweepSpec, max: f64, points: usize) -> SweepSpec {
    s.parameter = "alpha".into();
    s.min = 0.0;
    s.max = max;
    s.points = points;
    s
}

fn reference(mut s: SweepSpec) -> SweepSpec {
    s.reference = StateKind::Coherent;
    s.ref_alpha = 1.0;
    s.notes.push("reference arm: coherent state with |alpha_R| = 1".into());
    s
}

/// Built-in figure recipe `name`.
pub fn recipe(name: &str) -> Option<SweepSpec> {
    let phase = |t| squeezed_coherent(base(Observable::Phase, t));
    let vis = |t| reference(squeezed_coherent(base(Observable::Visibility, t)));
    let spec = match name {
        "fig2-left" => relative_phase(phase("phase vs relative phase Psi")),
        "fig2-mid" => squeeze_amplitude(phase("phase vs squeeze amplitude r")),
        "fig2-right" => coherent_amplitude(phase("phase vs coherent amplitude |alpha|"), 10.0, 101),
        "fig3" => {
            let mut s = coherent_amplitude(base(Observable::Phase, "phase vs |alpha|, coherent state"), 100.0, 201);
            s.target = StateKind::Coherent;
            s.lambda = 1e-2;
            s.notes.push(PLATEAU_NOTE.into());
            s
        }
        "fig4-left" => relative_phase(vis("visibility vs relative phase Psi")),
        "fig4-mid" => squeeze_amplitude(vis("visibility vs squeeze amplitude r")),
        "fig4-right" => coherent_amplitude(vis("visibility vs coherent amplitude |alpha|"), 10.0, 101),
        "fig5" => {
            let mut s = reference(relative_phase(squeezed_coherent(base(
                Observable::Resolution,
                "resolution between Psi and Psi + dPsi",
            ))));
            s.series_parameter = Some("gap".into());
            s.series_values = (1..=5).map(|k| 0.1 * k as f64 * PI).collect();
            s
        }
        "fig6" => {
            let mut s = reference(coherent_amplitude(
                base(Observable::Resolution, "resolution between |alpha| and |alpha| + d"),
                10.0,
                101,
            ));
            s.target = StateKind::Coherent;
            s.lambda = 1e-2;
            s.series_parameter = Some("gap".into());
            s.series_values = (1..=5).map(f64::from).collect();
            s.notes.push(PLATEAU_NOTE.into());
            s
        }
        "fig7" => {
            let mut s = reference(base(Observable::Resolution, "resolution between r and r + dr"));
            s.target = StateKind::SqueezedVacuum;
            s.parameter = "r".into();
            s.min = 0.0;
            s.max = 3.0;
            s.points = 61;
            s.lambda = 1e-2;
            s.series_parameter = Some("gap".into());
            s.series_values = (1..=5).map(f64::from).collect();
            s.notes.push(PLATEAU_NOTE.into());
            s
        }
        "fig8" => {
            let mut s = reference(base(Observable::Resolution, "resolution between Fock n and n + m"));
            s.target = StateKind::Fock;
            s.parameter = "n".into();
            s.min = 0.0;
            s.max = 50.0;
            s.points = 51;
            s.lambda = 1e-4;
            s.series_parameter = Some("gap".into());
            s.series_values = (1..=5).map(|k| 5.0 * k as f64).collect();
            s
        }
        "fig9" => {
            let mut s = base(Observable::Stability, "excitation probability vs switching rate");
            s.target = StateKind::Coherent;
            s.alpha = 1.0;
            s.lambda = 1e-4;
            s.parameter = "epsilon".into();
            s.min = 1e-5;
            s.max = 1e-2;
            s.points = 31;
            s.scale = GridScale::Log;
            s.notes.push("epsilon in 1/s; chi(t) = 1 - epsilon t".into());
            s
        }
        _ => return None,
    };
    Some(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_recipe_validates() {
        for name in RECIPES {
            recipe(name).unwrap().validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(recipe("fig10").is_none());
    }
}

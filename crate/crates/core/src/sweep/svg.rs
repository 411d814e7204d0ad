use std::fmt::Write as _;

use super::run::SweepResult;
use super::spec::{GridScale, Observable};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 50.0);
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo <= f64::EPSILON * lo.abs().max(1e-300) {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 1e-3 };
            (lo, hi) = (lo - pad, hi + pad);
        }
        Self { lo, hi, log }
    }

    fn frac(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let v = if self.log { v.log10() } else { v };
        Some((v - self.lo) / (self.hi - self.lo))
    }

    fn label(&self, f: f64) -> String {
        let v = self.lo + f * (self.hi - self.lo);
        if self.log {
            format!("1e{v:.1}")
        } else {
            format!("{v:.3e}")
        }
    }
}

/// Line plot of the first observable column against the swept parameter,
/// one polyline per series.
pub fn render_svg(result: &SweepResult) -> String {
    let spec = &result.spec;
    let lead = if spec.series_parameter.is_some() { 2 } else { 1 };
    let groups: Vec<Option<f64>> =
        if spec.series_values.is_empty() { vec![None] } else { spec.series_values.iter().copied().map(Some).collect() };
    let y_name = &result.columns[lead];
    let ys = |rows: &Vec<&Vec<super::run::Cell>>| {
        rows.iter()
            .map(|r| (r[0].as_f64().unwrap_or(f64::NAN), r[lead].as_f64().unwrap_or(f64::NAN)))
            .collect::<Vec<_>>()
    };
    let curves: Vec<Vec<(f64, f64)>> = groups.iter().map(|&g| ys(&result.series_rows(g))).collect();
    let x_axis = Axis::new(curves.iter().flatten().map(|p| p.0), spec.scale == GridScale::Log);
    let y_axis = Axis::new(curves.iter().flatten().map(|p| p.1), spec.observable == Observable::Stability);
    let (ml, mr, mt, mb) = MARGIN;
    let (pw, ph) = (WIDTH - ml - mr, HEIGHT - mt - mb);
    let px = |f: f64| ml + f * pw;
    let py = |f: f64| mt + (1.0 - f) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let title = spec.title.clone().unwrap_or_else(|| format!("{y_name} vs {}", spec.parameter));
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(&title)
    );
    let _ = writeln!(s, r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"#,
            px(f),
            mt + ph,
            mt + ph + 5.0,
            mt + ph + 18.0,
            x_axis.label(f)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" text-anchor="end">{5}</text>"#,
            ml - 5.0,
            py(f),
            ml,
            ml - 8.0,
            py(f) + 4.0,
            y_axis.label(f)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        HEIGHT - 10.0,
        escape(&spec.parameter)
    );
    for (i, (curve, label)) in curves.iter().zip(&groups).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = curve
            .iter()
            .filter_map(|&(x, y)| Some(format!("{:.2},{:.2}", px(x_axis.frac(x)?), py(y_axis.frac(y)?))))
            .collect();
        let _ =
            writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let name = match (label, &spec.series_parameter) {
            (Some(v), Some(p)) => format!("{p} = {v}"),
            _ => y_name.clone(),
        };
        let ly = mt + 14.0 + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="2"/><text x="{3}" y="{4}">{5}</text>"#,
            ml + pw - 110.0,
            ly,
            ml + pw - 90.0,
            ml + pw - 85.0,
            ly + 4.0,
            escape(&name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

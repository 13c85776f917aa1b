//! Self-contained log-log SVG rendering of curve CSVs.

use std::fmt::Write as _;
use std::path::PathBuf;

use clockstab::spectral_jitter::{parse_curve_csv, CurveTable};
use clockstab::{Error, Result};

use crate::args::PlotArgs;
use crate::manifest::RunLog;
use crate::profile_input::stem;

const PANEL_W: f64 = 560.0;
const PANEL_H: f64 = 400.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PanelKind {
    Jitter,
    Adev,
}

impl PanelKind {
    fn of(label: &str) -> Self {
        if label.to_ascii_lowercase().contains("adev") {
            PanelKind::Adev
        } else {
            PanelKind::Jitter
        }
    }

    fn y_label(self) -> &'static str {
        match self {
            PanelKind::Jitter => "jitter (s)",
            PanelKind::Adev => "ADEV",
        }
    }
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

struct Panel {
    kind: PanelKind,
    series: Vec<Series>,
    threshold: Option<f64>,
}

/// Decade-aligned log range covering `values`.
fn log_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v.log10()), hi.max(v.log10()))
    });
    let (lo, hi) = (lo.floor(), hi.ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, lo + 1.0)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn render_panel(svg: &mut String, p: &Panel, x0: f64, color_offset: usize) {
    let (xl, xh) = log_range(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0)));
    let (yl, yh) = log_range(
        p.series
            .iter()
            .flat_map(|s| s.points.iter().map(|q| q.1))
            .chain(p.threshold),
    );
    let (pw, ph) = (PANEL_W - MARGIN_L - MARGIN_R, PANEL_H - MARGIN_T - MARGIN_B);
    let (left, top) = (x0 + MARGIN_L, MARGIN_T);
    let sx = |x: f64| left + (x.log10() - xl) / (xh - xl) * pw;
    let sy = |y: f64| top + (yh - y.log10()) / (yh - yl) * ph;

    let kind = match p.kind {
        PanelKind::Jitter => "jitter",
        PanelKind::Adev => "adev",
    };
    let _ = writeln!(svg, r#"<g class="panel" data-kind="{kind}">"#);
    let _ = writeln!(
        svg,
        r##"<rect class="frame" x="{left:.2}" y="{top:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#000"/>"##
    );
    for k in xl as i32..=xh as i32 {
        let x = sx(10f64.powi(k));
        let _ = writeln!(
            svg,
            r##"<line class="grid" x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##,
            top + ph
        );
        let _ = writeln!(
            svg,
            r#"<text class="tick" x="{x:.2}" y="{:.2}" font-size="12" text-anchor="middle">1e{k}</text>"#,
            top + ph + 18.0
        );
    }
    for k in yl as i32..=yh as i32 {
        let y = sy(10f64.powi(k));
        let _ = writeln!(
            svg,
            r##"<line class="grid" x1="{left:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##,
            left + pw
        );
        let _ = writeln!(
            svg,
            r#"<text class="tick" x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">1e{k}</text>"#,
            left - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">averaging length N (periods)</text>"#,
        left + pw / 2.0,
        top + ph + 42.0
    );
    let _ = writeln!(
        svg,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        x0 + 18.0,
        top + ph / 2.0,
        x0 + 18.0,
        top + ph / 2.0,
        p.kind.y_label()
    );
    for (i, s) in p.series.iter().enumerate() {
        let color = PALETTE[(i + color_offset) % PALETTE.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let label = escape(&s.label);
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-label="{label}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text class="legend" x="{:.2}" y="{ly:.2}" font-size="12" fill="{color}" text-anchor="end">{label}</text>"#,
            left + pw - 8.0
        );
    }
    if let Some(t) = p.threshold {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r##"<line class="threshold" x1="{left:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000" stroke-dasharray="6 4"/>"##,
            left + pw
        );
    }
    svg.push_str("</g>\n");
}

fn render(panels: &[Panel], title: Option<&str>) -> String {
    let width = PANEL_W * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H}" viewBox="0 0 {width} {PANEL_H}" font-family="sans-serif">"#
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n");
    if let Some(t) = title {
        let _ = writeln!(
            svg,
            r#"<text class="title" x="{:.2}" y="24" font-size="16" text-anchor="middle">{}</text>"#,
            width / 2.0,
            escape(t)
        );
    }
    let mut offset = 0;
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut svg, p, PANEL_W * i as f64, offset);
        offset += p.series.len();
    }
    svg.push_str("</svg>\n");
    svg
}

fn load_series(path: &PathBuf) -> Result<Series> {
    let text = std::fs::read_to_string(path)?;
    let CurveTable { n, sigma, .. } = parse_curve_csv(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let points: Vec<(f64, f64)> = n
        .into_iter()
        .zip(sigma)
        .filter(|&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
        .collect();
    if points.is_empty() {
        return Err(Error::Parse(format!("{}: no positive points to plot", path.display())));
    }
    Ok(Series { label: stem(path), points })
}

pub fn run(a: &PlotArgs, threads: usize) -> Result<()> {
    let mut log = RunLog::start("plot", &a.out, threads)?;
    let mut panels: Vec<Panel> = Vec::new();
    for path in &a.curves {
        log.input(path);
        let s = load_series(path)?;
        let kind = PanelKind::of(&s.label);
        match panels.iter_mut().find(|p| p.kind == kind) {
            Some(p) => p.series.push(s),
            None => panels.push(Panel { kind, series: vec![s], threshold: None }),
        }
    }
    panels.sort_by_key(|p| p.kind == PanelKind::Adev);
    let threshold = a.threshold.or(a.ppm.map(|p| p * 1e-6));
    if let Some(t) = threshold {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Argument(format!("threshold {t} must be > 0")));
        }
        let target = panels
            .iter()
            .position(|p| p.kind == PanelKind::Adev)
            .unwrap_or(0);
        panels[target].threshold = Some(t);
    }
    log.write(&a.name, &render(&panels, a.title.as_deref()))?;
    log.finish(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(label: &str) -> Series {
        Series {
            label: label.into(),
            points: vec![(1.0, 1e-6), (10.0, 1e-7), (100.0, 1e-8)],
        }
    }

    #[test]
    fn decade_range() {
        assert_eq!(log_range([3.0, 250.0].into_iter()), (0.0, 3.0));
        assert_eq!(log_range([10.0].into_iter()), (0.0, 2.0));
    }

    #[test]
    fn drawables_counted() {
        let panels = vec![Panel {
            kind: PanelKind::Adev,
            series: vec![series("a"), series("b & c")],
            threshold: Some(6e-5),
        }];
        let svg = render(&panels, Some("t"));
        assert_eq!(svg.matches(r#"class="series""#).count(), 2);
        assert_eq!(svg.matches(r#"class="threshold""#).count(), 1);
        assert_eq!(svg.matches(r#"class="panel""#).count(), 1);
        assert!(svg.contains("b &amp; c"));
    }

    #[test]
    fn panel_kind_from_name() {
        assert_eq!(PanelKind::of("rc_adev"), PanelKind::Adev);
        assert_eq!(PanelKind::of("npaj"), PanelKind::Jitter);
    }
}

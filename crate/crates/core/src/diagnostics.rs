//! Diagnostic view of a decomposition: histogram of `σ(P̂₁P̂₂)` with the
//! bootstrap band `[1 − ε̂₁, 1]`, the random-alignment band `[0, √λ₊]`, the
//! limiting noise density and, for simulated data, the noiseless spectrum and
//! the cluster intervals implied by the true perturbations.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::decompose::{DecompositionResult, PairSummary};
use crate::error::{invalid, Result};
use crate::linalg::principal_spectrum;
use crate::noise_spectrum::noise_law;
use crate::oracle::truth_oracle;
use crate::sim::SimTruth;

pub const DEFAULT_BINS: usize = 40;
pub const DENSITY_POINTS: usize = 200;
pub const MIN_CANVAS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` uniform edges covering `[0, 1]`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Uniform bins on `[0, 1]`; the last bin is closed on the right.
    pub fn unit_interval(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let edges = (0..=bins).map(|i| i as f64 / bins as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let idx = ((v.clamp(0.0, 1.0) * bins as f64).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Self { edges, counts }
    }

    pub fn bin_width(&self) -> f64 {
        match self.edges.as_slice() {
            [first, .., last] => (last - first) / self.counts.len().max(1) as f64,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    /// `σ(P̂₁P̂₂)`, descending.
    pub spectrum: Vec<f64>,
    /// `[1 − ε̂₁, 1]`.
    pub green_band: [f64; 2],
    /// `[0, √λ₊]`.
    pub blue_band: [f64; 2],
    /// `(s, g(s))` samples of the singular-value noise density over
    /// `[√λ₋, √λ₊]`, scaled to the histogram area of the values inside the blue band.
    pub density: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_lines: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem1_intervals: Option<[[f64; 2]; 3]>,
    pub histogram: Histogram,
}

fn governing_pair(result: &DecompositionResult) -> Result<&PairSummary> {
    result
        .pairs
        .iter()
        .find(|p| p.spectrum == result.spectrum)
        .or_else(|| result.pairs.first())
        .ok_or_else(|| invalid("result has no pair summaries"))
}

/// Assemble the report; truth-dependent fields are filled only when `truth` is given.
pub fn build_report(
    result: &DecompositionResult,
    truth: Option<&SimTruth>,
) -> Result<DiagnosticReport> {
    let pair = governing_pair(result)?;
    let [a, b] = pair.views;
    let n = result.ambient_dim as f64;
    let rank = |k: usize| -> Result<f64> {
        result
            .marginal_ranks
            .get(k)
            .map(|&r| r as f64)
            .ok_or_else(|| invalid(format!("pair refers to missing view {k}")))
    };
    let law = noise_law(rank(a)? / n, rank(b)? / n)?;
    let spectrum = result.spectrum.values.clone();
    let green_band = [result.spectrum.bootstrap_threshold, 1.0];
    let blue_band = [0.0, result.spectrum.noise_threshold];
    let histogram = Histogram::unit_interval(&spectrum, DEFAULT_BINS);

    let below = spectrum.iter().filter(|&&v| v <= blue_band[1]).count() as f64;
    let mass = law.continuous_mass();
    let scale = if mass > 0.0 {
        below * histogram.bin_width() / mass
    } else {
        0.0
    };
    let (s_lo, s_hi) = (law.lambda_minus.sqrt(), law.lambda_plus.sqrt());
    let density = (0..DENSITY_POINTS)
        .map(|i| {
            let s = s_lo + (s_hi - s_lo) * i as f64 / (DENSITY_POINTS - 1) as f64;
            [s, scale * law.singular_value_density(s)]
        })
        .collect();

    let (truth_lines, theorem1_intervals) = match truth {
        None => (None, None),
        Some(t) => {
            let lines = principal_spectrum(&t.signal_basis(a)?, &t.signal_basis(b)?)?;
            let intervals = if result.marginal_bases.len() == 2 && t.individuals.len() == 2 {
                let oracle = truth_oracle(t, &result.marginal_bases)?;
                let ci = oracle.cluster_intervals;
                Some([
                    [ci.joint.lo, ci.joint.hi],
                    [ci.nonorthogonal.lo, ci.nonorthogonal.hi],
                    [ci.remaining.lo, ci.remaining.hi],
                ])
            } else {
                None
            };
            (Some(lines), intervals)
        }
    };

    Ok(DiagnosticReport {
        spectrum,
        green_band,
        blue_band,
        density,
        truth_lines,
        theorem1_intervals,
        histogram,
    })
}

pub fn export_json(report: &DiagnosticReport) -> String {
    serde_json::to_string_pretty(report).expect("report contains only finite numbers")
}

pub fn parse_json(text: &str) -> Result<DiagnosticReport> {
    serde_json::from_str(text).map_err(|e| {
        invalid(format!(
            "diagnostic report at line {} column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

struct Canvas {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
    y_max: f64,
}

impl Canvas {
    fn x(&self, v: f64) -> f64 {
        self.left + v.clamp(0.0, 1.0) * (self.right - self.left)
    }

    fn y(&self, v: f64) -> f64 {
        self.bottom - (v / self.y_max).clamp(0.0, 1.0) * (self.bottom - self.top)
    }
}

/// Standalone SVG rendering of the report.
pub fn render_svg(report: &DiagnosticReport, width: usize, height: usize) -> Result<String> {
    if width < MIN_CANVAS || height < MIN_CANVAS {
        return Err(invalid(format!(
            "canvas must be at least {MIN_CANVAS}x{MIN_CANVAS}, got {width}x{height}"
        )));
    }
    let (w, h) = (width as f64, height as f64);
    let max_count = report.histogram.counts.iter().copied().max().unwrap_or(0) as f64;
    let max_density = report.density.iter().map(|p| p[1]).fold(0.0, f64::max);
    let c = Canvas {
        left: 60.0,
        right: w - 20.0,
        top: 20.0,
        bottom: h - 50.0,
        y_max: (max_count.max(max_density) * 1.1).max(1.0),
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
    );

    for (class, band, colour) in [
        ("band blue", report.blue_band, "#1f77b4"),
        ("band green", report.green_band, "#2ca02c"),
    ] {
        let (x0, x1) = (c.x(band[0]), c.x(band[1]));
        let _ = writeln!(
            svg,
            r#"<rect class="{class}" x="{x0:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{colour}" fill-opacity="0.2"/>"#,
            c.top,
            (x1 - x0).max(0.0),
            c.bottom - c.top
        );
    }

    let hist = &report.histogram;
    for (i, &count) in hist.counts.iter().enumerate() {
        if count == 0 || i + 1 >= hist.edges.len() {
            continue;
        }
        let (x0, x1) = (c.x(hist.edges[i]), c.x(hist.edges[i + 1]));
        let y = c.y(count as f64);
        let _ = writeln!(
            svg,
            r##"<rect class="bar" x="{x0:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="#9e9e9e" stroke="#616161" stroke-width="0.5"/>"##,
            x1 - x0,
            c.bottom - y
        );
    }

    if let Some(intervals) = &report.theorem1_intervals {
        for (i, iv) in intervals.iter().enumerate() {
            let y = c.top + 6.0 + 6.0 * i as f64;
            let _ = writeln!(
                svg,
                r##"<line class="interval" x1="{:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="#ff7f0e" stroke-width="3"/>"##,
                c.x(iv[0]),
                c.x(iv[1])
            );
        }
    }

    if let Some(lines) = &report.truth_lines {
        for &v in lines {
            let x = c.x(v);
            let _ = writeln!(
                svg,
                r##"<line class="truth" x1="{x:.3}" y1="{:.3}" x2="{x:.3}" y2="{:.3}" stroke="#d62728" stroke-width="1"/>"##,
                c.top, c.bottom
            );
        }
    }

    let points: Vec<String> = report
        .density
        .iter()
        .map(|p| format!("{:.3},{:.3}", c.x(p[0]), c.y(p[1])))
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline class="density" points="{}" fill="none" stroke="#1f3a93" stroke-width="1.5"/>"##,
        points.join(" ")
    );

    let _ = writeln!(
        svg,
        r#"<line class="axis" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="black"/>"#,
        c.left, c.bottom, c.right, c.bottom
    );
    let _ = writeln!(
        svg,
        r#"<line class="axis" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="black"/>"#,
        c.left, c.top, c.left, c.bottom
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let x = c.x(v);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.3}" y="{:.3}" font-size="11" text-anchor="middle">{v:.1}</text>"#,
            c.bottom + 16.0
        );
        let count = c.y_max * v;
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="{:.3}" font-size="11" text-anchor="end">{count:.1}</text>"#,
            c.left - 6.0,
            c.y(count) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.3}" y="{:.3}" font-size="13" text-anchor="middle">singular value</text>"#,
        0.5 * (c.left + c.right),
        h - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.3}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.3})">count</text>"#,
        0.5 * (c.top + c.bottom),
        0.5 * (c.top + c.bottom)
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hybrid0d::circuit::ModelFlavor;
use hybrid0d::nn::LossKind;

use crate::cohort::write;
use crate::{Modality, PipelineError};

pub const MPE_CSV: &str = "mpe_per_geometry.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const CHART_SVG: &str = "mpe_summary.svg";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryResult {
    pub trial: usize,
    pub geometry: String,
    pub modality: Modality,
    pub mpe: Option<f64>,
    /// `ok`, `diverged` or `failed: <reason>`.
    pub status: String,
}

impl GeometryResult {
    pub fn from_run(trial: usize, geometry: &str, modality: Modality, run: Result<f64, PipelineError>) -> Self {
        let (mpe, status) = match run {
            Ok(v) => (Some(v), "ok".to_string()),
            Err(e) if e.is_divergence() => (None, "diverged".to_string()),
            Err(e) => (None, format!("failed: {e}")),
        };
        Self { trial, geometry: geometry.to_string(), modality, mpe, status }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialInfo {
    pub trial: usize,
    pub held_out: Vec<String>,
    pub training: Vec<String>,
}

/// Mean MPE per trial, their mean over trials and a normal 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalitySummary {
    pub modality: Modality,
    pub trial_means: Vec<Option<f64>>,
    pub mean: Option<f64>,
    pub ci95_low: Option<f64>,
    pub ci95_high: Option<f64>,
    /// Fewer than two trial means: the interval collapses to the mean.
    pub ci_degenerate: bool,
    /// Runs left out of the means (divergence or failure).
    pub excluded: usize,
    pub diverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub cohort: String,
    pub flavor: ModelFlavor,
    pub loss: LossKind,
    pub seed: u64,
    pub trials: Vec<TrialInfo>,
    pub rows: Vec<GeometryResult>,
    pub summary: Vec<ModalitySummary>,
}

impl EvaluationReport {
    pub fn summary_for(&self, m: Modality) -> Option<&ModalitySummary> {
        self.summary.iter().find(|s| s.modality == m)
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub(crate) fn summarize(rows: &[GeometryResult], trials: usize) -> Vec<ModalitySummary> {
    Modality::ALL
        .into_iter()
        .map(|m| {
            let mine: Vec<&GeometryResult> = rows.iter().filter(|r| r.modality == m).collect();
            let trial_means: Vec<Option<f64>> = (0..trials)
                .map(|t| mean(&mine.iter().filter(|r| r.trial == t).filter_map(|r| r.mpe).collect::<Vec<_>>()))
                .collect();
            let present: Vec<f64> = trial_means.iter().flatten().copied().collect();
            let mu = mean(&present);
            let (lo, hi, degenerate) = match (mu, present.len()) {
                (Some(mu), k) if k >= 2 => {
                    let var = present.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (k - 1) as f64;
                    let half = 1.96 * var.sqrt() / (k as f64).sqrt();
                    (Some(mu - half), Some(mu + half), false)
                }
                (mu, _) => (mu, mu, true),
            };
            ModalitySummary {
                modality: m,
                trial_means,
                mean: mu,
                ci95_low: lo,
                ci95_high: hi,
                ci_degenerate: degenerate,
                excluded: mine.iter().filter(|r| r.mpe.is_none()).count(),
                diverged: mine.iter().filter(|r| r.status == "diverged").count(),
            }
        })
        .collect()
}

fn csv_text(report: &EvaluationReport) -> Result<String, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| PipelineError::Invalid(e.to_string());
    w.write_record(["trial", "geometry", "modality", "mpe_percent", "status"]).map_err(err)?;
    for r in &report.rows {
        let mpe = r.mpe.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([r.trial.to_string().as_str(), &r.geometry, r.modality.as_str(), &mpe, &r.status]).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Bar per modality at the mean over trials, whiskers at the 95% interval.
fn svg_text(report: &EvaluationReport) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 70.0);
    let plot_h = h - top - bottom;
    let ymax = report
        .summary
        .iter()
        .filter_map(|s| s.ci95_high.or(s.mean))
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.15;
    let y = |v: f64| top + plot_h * (1.0 - v / ymax);
    let slot = (w - left - right) / report.summary.len().max(1) as f64;
    let colors = ["#8c8c8c", "#6baed6", "#74c476", "#3182bd", "#e6550d"];
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" font-family="sans-serif" font-size="14" text-anchor="middle">{} ({}): max percent error, mean and 95% CI over trials</text>"#,
        w / 2.0,
        xml_escape(&report.cohort),
        report.flavor
    );
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, top + plot_h);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#, top + plot_h, w - right);
    for k in 0..=4 {
        let v = ymax * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{:.2}</text>"#,
            left - 6.0,
            y(v) + 3.0,
            v
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="11" transform="rotate(-90 16 {:.2})" text-anchor="middle">MPE (%)</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    for (i, m) in report.summary.iter().enumerate() {
        let cx = left + slot * (i as f64 + 0.5);
        let bw = slot * 0.6;
        if let Some(mu) = m.mean {
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                cx - bw / 2.0,
                y(mu),
                bw,
                top + plot_h - y(mu),
                colors[i % colors.len()]
            );
            if let (Some(lo), Some(hi)) = (m.ci95_low, m.ci95_high) {
                let (ylo, yhi) = (y(lo.max(0.0)), y(hi));
                let _ = writeln!(s, r#"<line x1="{cx:.2}" y1="{ylo:.2}" x2="{cx:.2}" y2="{yhi:.2}" stroke="black"/>"#);
                for yy in [ylo, yhi] {
                    let _ = writeln!(s, r#"<line x1="{:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="black"/>"#, cx - 6.0, cx + 6.0);
                }
            }
            let _ = writeln!(
                s,
                r#"<text x="{cx:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{mu:.2}</text>"#,
                y(m.ci95_high.unwrap_or(mu)) - 5.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            top + plot_h + 18.0,
            m.modality
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes the per-geometry CSV, the JSON summary and the bar chart; returns
/// their paths.
pub fn emit_report(report: &EvaluationReport, out: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let files = [
        (out.join(MPE_CSV), csv_text(report)?),
        (out.join(SUMMARY_JSON), serde_json::to_string_pretty(report).expect("report serializes") + "\n"),
        (out.join(CHART_SVG), svg_text(report)),
    ];
    let mut paths = Vec::new();
    for (path, text) in files {
        write(&path, &text)?;
        paths.push(path);
    }
    Ok(paths)
}

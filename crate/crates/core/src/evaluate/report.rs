//! Report tables (CSV, JSON) and bar-chart figures (SVG).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub low: f64,
    pub high: f64,
}

impl Estimate {
    /// `0.881 (0.877-0.886)`.
    pub fn format(&self) -> String {
        format!("{:.3} ({:.3}-{:.3})", self.value, self.low, self.high)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub task: String,
    pub time_point: String,
    pub model: String,
    /// Cutoff on the model's own score scale.
    pub threshold: f64,
    /// Cutoff as printed; ESI is shown as an acuity level.
    pub threshold_label: String,
    pub auroc: Estimate,
    pub auprc: Estimate,
    pub sensitivity: Estimate,
    pub specificity: Estimate,
    /// Training (or scoring) wall time; absent when timing is disabled.
    pub runtime_seconds: Option<f64>,
    pub n_variables: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

pub const CSV_HEADER: [&str; 10] = [
    "Task",
    "Time point",
    "Model",
    "Threshold",
    "AUROC",
    "AUPRC",
    "Sensitivity",
    "Specificity",
    "Runtime",
    "Number of variables",
];

/// Integers print bare, everything else with 3 decimals.
pub fn format_threshold(t: f64) -> String {
    if t.fract() == 0.0 && t.abs() < 1e9 {
        format!("{}", t as i64)
    } else {
        format!("{t:.3}")
    }
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.task.clone(),
                r.time_point.clone(),
                r.model.clone(),
                r.threshold_label.clone(),
                r.auroc.format(),
                r.auprc.format(),
                r.sensitivity.format(),
                r.specificity.format(),
                r.runtime_seconds.map(|s| format!("{s:.2}")).unwrap_or_default(),
                r.n_variables.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse { path: "report.json".into(), message: e.to_string() })
    }

    /// Writes report.csv, report.json, figure_auroc.svg and figure_auprc.svg.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        let files = [
            ("report.csv", self.to_csv()),
            ("report.json", self.to_json()),
            ("figure_auroc.svg", render_svg(self, Metric::Auroc)),
            ("figure_auprc.svg", render_svg(self, Metric::Auprc)),
        ];
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Auroc,
    Auprc,
}

const PALETTE: [&str; 10] =
    ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"];

/// Grouped bar chart: one group per (task, time point), one bar per model,
/// whiskers at the interval bounds, y axis fixed to [0, 1].
pub fn render_svg(report: &EvalReport, metric: Metric) -> String {
    let (title, pick): (&str, fn(&ReportRow) -> Estimate) = match metric {
        Metric::Auroc => ("AUROC", |r| r.auroc),
        Metric::Auprc => ("AUPRC", |r| r.auprc),
    };
    let mut groups: Vec<String> = Vec::new();
    let mut models: Vec<String> = Vec::new();
    for r in &report.rows {
        let g = format!("{}@{}", r.task, r.time_point);
        if !groups.contains(&g) {
            groups.push(g);
        }
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
    }
    let (bar, gap, left, top, plot_h) = (14.0, 24.0, 50.0, 60.0, 240.0);
    let group_w = bar * models.len().max(1) as f64 + gap;
    let width = left + group_w * groups.len().max(1) as f64 + 20.0;
    let height = top + plot_h + 110.0;
    let y = |v: f64| top + plot_h * (1.0 - v.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<text x="{left}" y="16" font-size="13">{title} by task and model (95% CI)</text>"#);
    for (i, m) in models.iter().enumerate() {
        let x = left + 80.0 * (i % 8) as f64;
        let ly = 28.0 + 12.0 * (i / 8) as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="{:.1}" width="8" height="8" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            ly - 8.0,
            PALETTE[i % PALETTE.len()],
            x + 11.0,
            ly,
            escape(m)
        );
    }
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{left}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"##,
            width - 20.0,
            y(v),
            y(v),
            left - 4.0,
            y(v) + 3.0
        );
    }
    for (gi, g) in groups.iter().enumerate() {
        let gx = left + gap / 2.0 + group_w * gi as f64;
        for r in report.rows.iter().filter(|r| &format!("{}@{}", r.task, r.time_point) == g) {
            let mi = models.iter().position(|m| m == &r.model).unwrap_or(0);
            let e = pick(r);
            let x = gx + bar * mi as f64;
            let cx = x + bar / 2.0;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}"><title>{} {}: {}</title></rect>"#,
                y(e.value),
                bar - 2.0,
                y(0.0) - y(e.value),
                PALETTE[mi % PALETTE.len()],
                escape(g),
                escape(&r.model),
                e.format()
            );
            let _ = writeln!(
                s,
                r#"<path d="M{cx:.1} {:.1}V{:.1}M{:.1} {:.1}h4M{:.1} {:.1}h4" stroke="black" stroke-width="0.8"/>"#,
                y(e.low),
                y(e.high),
                cx - 3.0,
                y(e.low),
                cx - 3.0,
                y(e.high)
            );
        }
        let lx = gx + group_w / 2.0 - gap / 2.0;
        let ly = top + plot_h + 12.0;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{ly:.1}" text-anchor="end" transform="rotate(-35 {lx:.1} {ly:.1})">{}</text>"#,
            escape(g)
        );
    }
    let _ = writeln!(s, r#"<line x1="{left}" x2="{left}" y1="{top}" y2="{:.1}" stroke="black"/>"#, y(0.0));
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

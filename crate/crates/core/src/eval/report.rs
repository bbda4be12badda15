//! Comparison tables of ROUGE results across runs.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RunSummary;
use crate::model::QuizKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    Markdown,
    Html,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "html" => Ok(ReportFormat::Html),
            _ => Err(format!(
                "unknown report format {s:?} (expected text, json, markdown or html)"
            )),
        }
    }
}

/// One table row; scores are F1 × 100 rounded to two decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub label: String,
    pub format: QuizKind,
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

fn round2(x: f64) -> f64 {
    (x * 100.0 * 100.0).round() / 100.0
}

impl ComparisonTable {
    pub fn new(runs: &[RunSummary]) -> ComparisonTable {
        ComparisonTable {
            rows: runs
                .iter()
                .map(|r| ComparisonRow {
                    model: r.model.clone(),
                    label: r.label.clone(),
                    format: r.format,
                    rouge1: round2(r.mean_f1.rouge1),
                    rouge2: round2(r.mean_f1.rouge2),
                    rouge_l: round2(r.mean_f1.rouge_l),
                })
                .collect(),
        }
    }

    /// Formats in order of first appearance, each with its rows.
    fn sections(&self) -> Vec<(QuizKind, Vec<&ComparisonRow>)> {
        let mut out: Vec<(QuizKind, Vec<&ComparisonRow>)> = Vec::new();
        for row in &self.rows {
            match out.iter_mut().find(|(f, _)| *f == row.format) {
                Some((_, rows)) => rows.push(row),
                None => out.push((row.format, vec![row])),
            }
        }
        out
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Text => self.text(),
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("table serializes");
                s.push('\n');
                s
            }
            ReportFormat::Markdown => self.markdown(),
            ReportFormat::Html => self.html(),
        }
    }

    fn text(&self) -> String {
        let mut out = String::new();
        for (i, (format, rows)) in self.sections().into_iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "{format}: ROUGE-1 / ROUGE-2 / ROUGE-L (F1 x100)");
            for row in rows {
                let _ = writeln!(
                    out,
                    "{} {}: {:.2} / {:.2} / {:.2}",
                    row.model, row.label, row.rouge1, row.rouge2, row.rouge_l
                );
            }
        }
        out
    }

    fn markdown(&self) -> String {
        let mut out = String::new();
        for (i, (format, rows)) in self.sections().into_iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "### {format}\n");
            out.push_str(
                "| Model | Run | ROUGE-1 | ROUGE-2 | ROUGE-L |\n|---|---|---:|---:|---:|\n",
            );
            for row in rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {:.2} | {:.2} | {:.2} |",
                    row.model.replace('|', "\\|"),
                    row.label.replace('|', "\\|"),
                    row.rouge1,
                    row.rouge2,
                    row.rouge_l
                );
            }
        }
        out
    }

    fn html(&self) -> String {
        let mut out = String::from(
            "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>ROUGE comparison</title>\n\
             <style>table{border-collapse:collapse}td,th{border:1px solid #999;padding:4px 8px}td.n{text-align:right}</style>\n\
             </head>\n<body>\n",
        );
        for (format, rows) in self.sections() {
            let _ = writeln!(out, "<h2>{format}</h2>");
            out.push_str("<table>\n<tr><th>Model</th><th>Run</th><th>ROUGE-1</th><th>ROUGE-2</th><th>ROUGE-L</th></tr>\n");
            for row in rows {
                let _ = writeln!(
                    out,
                    "<tr><td>{}</td><td>{}</td><td class=\"n\">{:.2}</td><td class=\"n\">{:.2}</td><td class=\"n\">{:.2}</td></tr>",
                    escape_html(&row.model),
                    escape_html(&row.label),
                    row.rouge1,
                    row.rouge2,
                    row.rouge_l
                );
            }
            out.push_str("</table>\n");
        }
        out.push_str("</body>\n</html>\n");
        out
    }
}

fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Renders the runs as a comparison table in the requested format.
pub fn compare_runs(runs: &[RunSummary], format: ReportFormat) -> String {
    ComparisonTable::new(runs).render(format)
}

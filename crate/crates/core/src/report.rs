//! Run records and their renderings.
//!
//! Every harness result is a [`Record`] that embeds the resolved
//! configuration and seed. Records serialize to one JSON object per line;
//! [`render_table`] lays a list of records out as text tables, one per record kind.
//! Rendering only reads record fields, so a table built from re-read
//! JSON-lines is identical to one built from the original records.

use serde::{Deserialize, Serialize};

use crate::bench::{BenchCell, BenchConfig};
use crate::calibration::{CalibrationConfig, CalibrationSummary, CovDetSummary};
use crate::error::{DepthError, Result};
use crate::functional::{ClassifierSpec, LoocvSummary};
use crate::homogeneity::{DepthBackend, PowerSummary, ScaleScenario, ScaleTestOptions, TestReport};
use crate::rng::Seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovDetConfig {
    pub p: usize,
    pub n: usize,
    pub replications: usize,
    pub seed: Seed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub scenario: ScaleScenario,
    pub backend: DepthBackend,
    pub options: ScaleTestOptions,
    pub replications: usize,
    pub seed: Seed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub group_x: String,
    pub group_y: String,
    pub spec: ClassifierSpec,
    pub replications: usize,
    pub seed: Seed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthConfig {
    pub input: String,
    pub k: usize,
    pub seed: Seed,
    pub mahalanobis: Option<String>,
    pub exact: bool,
    pub query: Option<String>,
}

/// Depths of one row (of the query file if given, else of the input).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub row: usize,
    pub random_tukey: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mahalanobis: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_tukey: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Calibration {
        config: CalibrationConfig,
        summary: CalibrationSummary,
    },
    CovDet {
        config: CovDetConfig,
        summary: CovDetSummary,
        expected: f64,
    },
    Power {
        config: PowerConfig,
        summary: PowerSummary,
    },
    ScaleTest {
        input: Vec<String>,
        report: TestReport,
    },
    Classify {
        config: ClassifyConfig,
        summary: LoocvSummary,
    },
    Depth {
        config: DepthConfig,
        rows: Vec<DepthRow>,
        /// Why a requested depth is missing, e.g. a singular scatter.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        errors: Vec<String>,
    },
    Bench {
        config: BenchConfig,
        cell: BenchCell,
    },
}

impl Record {
    fn kind(&self) -> usize {
        match self {
            Record::Calibration { .. } => 0,
            Record::CovDet { .. } => 1,
            Record::Power { .. } => 2,
            Record::ScaleTest { .. } => 3,
            Record::Classify { .. } => 4,
            Record::Depth { .. } => 5,
            Record::Bench { .. } => 6,
        }
    }
}

pub fn to_jsonl(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<Record>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| DepthError::Parse {
                line: i + 1,
                column: e.column(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Values in order of first appearance.
fn distinct<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for it in items {
        if !out.contains(&it) {
            out.push(it);
        }
    }
    out
}

/// Right-aligned columns; the first column is left-aligned.
fn layout(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width = vec![0; cols];
    for r in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |r: &[String]| {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if j == 0 {
                    format!("{c:<w$}", w = width[j])
                } else {
                    format!("{c:>w$}", w = width[j])
                }
            })
            .collect();
        cells.join("  ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * (cols - 1)));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

fn rate(v: f64) -> String {
    format!("{v:.3}")
}

fn calibration_table(cells: &[(&CalibrationConfig, &CalibrationSummary)]) -> String {
    let ns = distinct(cells.iter().map(|(_, s)| s.n));
    let rows_keys = distinct(cells.iter().map(|(_, s)| (s.p, s.distribution)));
    let mut header = vec!["p".to_string(), "distribution".into(), "".into()];
    header.extend(ns.iter().map(|n| format!("n={n}")));
    let find = |p, d, n| cells.iter().find(|(_, s)| s.p == p && s.distribution == d && s.n == n);
    let mut rows = Vec::new();
    for &(p, d) in &rows_keys {
        let mut mean = vec![format!("p={p}"), d.label().to_string(), "mean".into()];
        let mut pct = vec![String::new(), String::new(), "95% pct".into()];
        for &n in &ns {
            match find(p, d, n) {
                Some((_, s)) => match (s.mean_k0, s.pct95_k0) {
                    (Some(m), Some(q)) if !s.degenerate => {
                        mean.push(format!("{m:.2}"));
                        pct.push(q.to_string());
                    }
                    _ => {
                        mean.push("*".into());
                        pct.push("*".into());
                    }
                },
                None => {
                    mean.push(String::new());
                    pct.push(String::new());
                }
            }
        }
        rows.push(mean);
        rows.push(pct);
    }
    let mut out = String::from("Mean and 95% percentile of k0 (* = degenerate dispersion)\n");
    out.push_str(&layout(&header, &rows));
    let notes: Vec<String> = cells
        .iter()
        .filter(|(_, s)| s.truncated > 0 || s.degenerate_replications > 0)
        .map(|(_, s)| {
            format!(
                "  {} p={} n={}: {} truncated at kmax={}, {} degenerate replications",
                s.distribution, s.p, s.n, s.truncated, s.kmax, s.degenerate_replications
            )
        })
        .collect();
    if !notes.is_empty() {
        out.push_str("notes:\n");
        for n in notes {
            out.push_str(&n);
            out.push('\n');
        }
    }
    out
}

fn cov_det_table(cells: &[(&CovDetSummary, f64)]) -> String {
    let ns = distinct(cells.iter().map(|(s, _)| s.n));
    let ps = distinct(cells.iter().map(|(s, _)| s.p));
    let mut header = vec!["p".to_string()];
    header.extend(ns.iter().map(|n| format!("n={n}")));
    let mut rows = Vec::new();
    for &p in &ps {
        let mut row = vec![format!("p={p}")];
        for &n in &ns {
            row.push(match cells.iter().find(|(s, _)| s.p == p && s.n == n) {
                Some((s, _)) if s.degenerate => "*".into(),
                Some((s, e)) => format!("{:.3} ({:.3})", s.mean_det, e),
                None => String::new(),
            });
        }
        rows.push(row);
    }
    let mut out =
        String::from("Mean determinant of the sample covariance (analytic value in parentheses)\n");
    out.push_str(&layout(&header, &rows));
    out
}

fn scale_label(factors: &[f64]) -> String {
    if factors.len() == 1 {
        format!("r={}", factors[0])
    } else {
        factors
            .iter()
            .enumerate()
            .map(|(i, r)| format!("r{}={r}", i + 1))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn power_table(cells: &[(&PowerConfig, &PowerSummary)]) -> String {
    let key = |c: &PowerConfig| {
        let k = match c.backend {
            DepthBackend::RandomTukey { k } => k.to_string(),
            DepthBackend::DenseReference { .. } => "-".into(),
        };
        (
            c.scenario.n_per_group[0],
            c.scenario.n_per_group.len(),
            scale_label(&c.scenario.scale_factors),
            k,
        )
    };
    let cols = distinct(cells.iter().map(|(c, _)| c.scenario.distribution));
    let rows_keys = distinct(cells.iter().map(|(c, _)| {
        let (n, g, r, _) = key(c);
        (n, g, r)
    }));
    let mut header = vec!["n".to_string(), "groups".into(), "scale".into()];
    header.extend(cols.iter().map(|d| d.label().to_string()));
    let mut rows = Vec::new();
    for (n, g, r) in &rows_keys {
        let mut row = vec![format!("n={n}"), g.to_string(), r.clone()];
        for d in &cols {
            let matching: Vec<_> = cells
                .iter()
                .filter(|(c, _)| {
                    let (cn, cg, cr, _) = key(c);
                    cn == *n && cg == *g && cr == *r && c.scenario.distribution == *d
                })
                .collect();
            let parts: Vec<String> = matching
                .iter()
                .map(|(c, s)| match c.backend {
                    DepthBackend::RandomTukey { k } => format!("{} [k={k}]", rate(s.rate)),
                    DepthBackend::DenseReference { .. } => format!("({})", rate(s.rate)),
                })
                .collect();
            row.push(parts.join(" "));
        }
        rows.push(row);
    }
    let mut out = String::from(
        "Rejection rates of the depth-rank scale test (dense reference backend in parentheses)\n",
    );
    out.push_str(&layout(&header, &rows));
    out
}

fn scale_test_table(cells: &[(&Vec<String>, &TestReport)]) -> String {
    let header: Vec<String> = ["input", "test", "statistic", "p-value", "decision", "alpha", "backend", "seed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|(input, r)| {
            vec![
                input.join(" vs "),
                match r.test {
                    crate::homogeneity::ScaleTestKind::Wilcoxon => "wilcoxon".into(),
                    crate::homogeneity::ScaleTestKind::KruskalWallis => "kruskal-wallis".into(),
                },
                format!("{:.4}", r.statistic),
                format!("{:.4}", r.p_value),
                if r.reject { "reject".into() } else { "accept".into() },
                r.alpha.to_string(),
                r.backend.label(),
                r.seed.0.to_string(),
            ]
        })
        .collect();
    layout(&header, &rows)
}

fn classify_table(cells: &[(&ClassifyConfig, &LoocvSummary)]) -> String {
    let header: Vec<String> = ["method", "k", "error rate", "std error", "sweeps", "curves"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|(c, s)| {
            vec![
                c.spec.method.to_string(),
                c.spec.k.to_string(),
                format!("{:.4}", s.error_rate),
                format!("{:.4}", s.std_error),
                s.replications.to_string(),
                s.folds.to_string(),
            ]
        })
        .collect();
    let mut out = String::from("Leave-one-out misclassification rate\n");
    out.push_str(&layout(&header, &rows));
    out
}

fn depth_table(config: &DepthConfig, rows: &[DepthRow], errors: &[String]) -> String {
    let has_m = rows.iter().any(|r| r.mahalanobis.is_some());
    let has_e = rows.iter().any(|r| r.exact_tukey.is_some());
    let mut header = vec!["row".to_string(), format!("random_tukey(k={})", config.k)];
    if has_m {
        header.push("mahalanobis".into());
    }
    if has_e {
        header.push("exact_tukey".into());
    }
    let fmt = |v: f64| format!("{v:.6}");
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![r.row.to_string(), fmt(r.random_tukey)];
            if has_m {
                row.push(r.mahalanobis.map_or(String::new(), fmt));
            }
            if has_e {
                row.push(r.exact_tukey.map_or(String::new(), fmt));
            }
            row
        })
        .collect();
    let mut out = layout(&header, &body);
    for e in errors {
        out.push_str(&format!("error: {e}\n"));
    }
    out
}

fn bench_table(cells: &[&BenchCell]) -> String {
    let ns = distinct(cells.iter().map(|c| c.n));
    let ps = distinct(cells.iter().map(|c| c.p));
    let mut header = vec!["p".to_string(), "k".into()];
    header.extend(ns.iter().map(|n| format!("n={n}")));
    let mut rows = Vec::new();
    for &p in &ps {
        let ks: Vec<String> = ns
            .iter()
            .filter_map(|&n| cells.iter().find(|c| c.p == p && c.n == n).map(|c| c.k.to_string()))
            .collect();
        let mut row = vec![format!("p={p}"), ks.join(",")];
        for &n in &ns {
            row.push(match cells.iter().find(|c| c.p == p && c.n == n) {
                Some(c) => match c.mahalanobis_mean {
                    Some(m) => format!("{:.3e} ({:.3e})", c.random_tukey_mean, m),
                    None => format!("{:.3e} (*)", c.random_tukey_mean),
                },
                None => String::new(),
            });
        }
        rows.push(row);
    }
    let mut out = String::from(
        "Mean seconds per full-sample depth: random Tukey (Mahalanobis in parentheses)\n",
    );
    out.push_str(&layout(&header, &rows));
    out
}

impl Record {
    /// The record's resolved configuration as one JSON object.
    pub fn config_json(&self) -> String {
        let value = match self {
            Record::Calibration { config, .. } => serde_json::to_string(config),
            Record::CovDet { config, .. } => serde_json::to_string(config),
            Record::Power { config, .. } => serde_json::to_string(config),
            Record::ScaleTest { input, report } => serde_json::to_string(&serde_json::json!({
                "input": input,
                "backend": report.backend,
                "alpha": report.alpha,
                "tie_policy": report.tie_policy,
                "seed": report.seed,
            })),
            Record::Classify { config, .. } => serde_json::to_string(config),
            Record::Depth { config, .. } => serde_json::to_string(config),
            Record::Bench { config, .. } => serde_json::to_string(config),
        };
        value.expect("configs serialize")
    }
}

/// Config preamble (one `#` line per record) followed by the tables.
pub fn render_report(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str("# config ");
        out.push_str(&r.config_json());
        out.push('\n');
    }
    out.push_str(&render_table(records));
    out
}

/// One table per record kind, in order of first appearance.
pub fn render_table(records: &[Record]) -> String {
    let kinds = distinct(records.iter().map(Record::kind));
    let mut parts = Vec::new();
    for kind in kinds {
        let group: Vec<&Record> = records.iter().filter(|r| r.kind() == kind).collect();
        let text = match kind {
            0 => calibration_table(
                &group
                    .iter()
                    .filter_map(|r| match r {
                        Record::Calibration { config, summary } => Some((config, summary)),
                        _ => None,
                    })
                    .collect::<Vec<_>>(),
            ),
            1 => cov_det_table(
                &group
                    .iter()
                    .filter_map(|r| match r {
                        Record::CovDet { summary, expected, .. } => Some((summary, *expected)),
                        _ => None,
                    })
                    .collect::<Vec<_>>(),
            ),
            2 => power_table(
                &group
                    .iter()
                    .filter_map(|r| match r {
                        Record::Power { config, summary } => Some((config, summary)),
                        _ => None,
                    })
                    .collect::<Vec<_>>(),
            ),
            3 => scale_test_table(
                &group
                    .iter()
                    .filter_map(|r| match r {
                        Record::ScaleTest { input, report } => Some((input, report)),
                        _ => None,
                    })
                    .collect::<Vec<_>>(),
            ),
            4 => classify_table(
                &group
                    .iter()
                    .filter_map(|r| match r {
                        Record::Classify { config, summary } => Some((config, summary)),
                        _ => None,
                    })
                    .collect::<Vec<_>>(),
            ),
            5 => group
                .iter()
                .filter_map(|r| match r {
                    Record::Depth { config, rows, errors } => Some(depth_table(config, rows, errors)),
                    _ => None,
                })
                .collect::<Vec<_>>()
                .join("\n"),
            _ => bench_table(
                &group
                    .iter()
                    .filter_map(|r| match r {
                        Record::Bench { cell, .. } => Some(cell),
                        _ => None,
                    })
                    .collect::<Vec<_>>(),
            ),
        };
        parts.push(text);
    }
    parts.join("\n")
}

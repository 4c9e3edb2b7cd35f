use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use kabe::abe::analogy_size_histogram;
use kabe::adjust::AdjustFlag;
use kabe::eval::{boxplot_summary, ComparisonOutcome, FssResult};
use kabe::{EvaluationSummary, FoldResult};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// One method evaluated on one dataset.
pub struct Run {
    pub summary: EvaluationSummary,
    /// Predictor names used.
    pub features: Vec<String>,
    pub fss: Option<FssResult>,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    dataset: &'a str,
    method: &'a str,
    projects: usize,
    mmre: f64,
    mdmre: f64,
    pred25: f64,
    features: String,
}

#[derive(Serialize, Deserialize)]
pub struct FoldRow {
    pub dataset: String,
    pub method: String,
    pub fold: usize,
    pub project_id: String,
    pub actual: f64,
    pub predicted: f64,
    pub residual: f64,
    pub mre: f64,
    pub analogy_size: Option<usize>,
    pub flag: AdjustFlag,
}

impl From<FoldRow> for FoldResult {
    fn from(r: FoldRow) -> Self {
        FoldResult {
            project_id: r.project_id,
            actual: r.actual,
            predicted: r.predicted,
            residual: r.residual,
            mre: r.mre,
            analogy_size: r.analogy_size,
            flag: r.flag,
        }
    }
}

#[derive(Serialize)]
struct HistogramRow<'a> {
    dataset: &'a str,
    method: &'a str,
    size: usize,
    count: usize,
}

#[derive(Serialize)]
struct BoxplotRow<'a> {
    dataset: &'a str,
    method: &'a str,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
    outliers: String,
}

#[derive(Serialize)]
struct FssRow<'a> {
    dataset: &'a str,
    method: &'a str,
    mode: String,
    candidates: usize,
    mmre_full: f64,
    mmre_best: f64,
    features: String,
}

fn csv_file<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn join(values: impl IntoIterator<Item = impl ToString>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_run(out: &Path, runs: &[Run]) -> Result<(), Failure> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    csv_file(
        &out.join("summary.csv"),
        runs.iter().map(|r| SummaryRow {
            dataset: &r.summary.dataset,
            method: &r.summary.method,
            projects: r.summary.folds.len(),
            mmre: r.summary.mmre,
            mdmre: r.summary.mdmre,
            pred25: r.summary.pred25,
            features: join(&r.features),
        }),
    )?;
    csv_file(
        &out.join("folds.csv"),
        runs.iter().flat_map(|r| {
            r.summary.folds.iter().enumerate().map(|(i, f)| FoldRow {
                dataset: r.summary.dataset.clone(),
                method: r.summary.method.clone(),
                fold: i,
                project_id: f.project_id.clone(),
                actual: f.actual,
                predicted: f.predicted,
                residual: f.residual,
                mre: f.mre,
                analogy_size: f.analogy_size,
                flag: f.flag,
            })
        }),
    )?;
    let mut hist = Vec::new();
    for r in runs {
        let sizes = r.summary.analogy_sizes();
        if sizes.is_empty() {
            continue;
        }
        for (size, count) in
            analogy_size_histogram(&sizes).map_err(|e| Failure::run(e.to_string()))?
        {
            hist.push(HistogramRow {
                dataset: &r.summary.dataset,
                method: &r.summary.method,
                size,
                count,
            });
        }
    }
    csv_file(&out.join("histogram.csv"), hist)?;
    let mut boxes = Vec::new();
    for r in runs {
        let b = boxplot_summary(&r.summary.residuals()).map_err(|e| Failure::run(e.to_string()))?;
        boxes.push(BoxplotRow {
            dataset: &r.summary.dataset,
            method: &r.summary.method,
            min: b.min,
            q1: b.q1,
            median: b.median,
            q3: b.q3,
            max: b.max,
            outliers: join(b.outliers),
        });
    }
    csv_file(&out.join("boxplot.csv"), boxes)?;
    if runs.iter().any(|r| r.fss.is_some()) {
        csv_file(
            &out.join("fss.csv"),
            runs.iter().filter_map(|r| {
                r.fss.as_ref().map(|f| FssRow {
                    dataset: &r.summary.dataset,
                    method: &r.summary.method,
                    mode: format!("{:?}", f.mode).to_lowercase(),
                    candidates: f.candidates_evaluated,
                    mmre_full: f.full_mmre,
                    mmre_best: f.best_mmre,
                    features: join(&r.features),
                })
            }),
        )?;
    }
    let summaries: Vec<&EvaluationSummary> = runs.iter().map(|r| &r.summary).collect();
    fs::write(
        out.join("summaries.json"),
        serde_json::to_string_pretty(&summaries).context("serializing summaries")?,
    )?;
    fs::write(out.join("report.md"), report(runs))?;
    Ok(())
}

fn report(runs: &[Run]) -> String {
    let mut s = String::from("# Leave-one-out results\n");
    let mut current = "";
    for r in runs {
        let d = r.summary.dataset.as_str();
        if d != current {
            current = d;
            let _ = write!(
                s,
                "\n## {d} ({} projects)\n\n| method | MMRE | MdMRE | pred(0.25) | features |\n|---|---:|---:|---:|---|\n",
                r.summary.folds.len()
            );
        }
        let _ = writeln!(
            s,
            "| {} | {:.3} | {:.3} | {:.1} | {} |",
            r.summary.method,
            r.summary.mmre,
            r.summary.mdmre,
            r.summary.pred25,
            r.features.join(", ")
        );
    }
    s
}

#[derive(Serialize)]
struct TallyRow<'a> {
    method: &'a str,
    win: usize,
    tie: usize,
    loss: usize,
    win_minus_loss: i64,
}

pub fn write_comparison(out: &Path, outcome: &ComparisonOutcome) -> Result<(), Failure> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    csv_file(
        &out.join("win_tie_loss.csv"),
        outcome.ranked().into_iter().map(|(method, t)| TallyRow {
            method,
            win: t.win,
            tie: t.tie,
            loss: t.loss,
            win_minus_loss: t.net(),
        }),
    )?;
    csv_file(&out.join("pairs.csv"), &outcome.tests)?;
    Ok(())
}

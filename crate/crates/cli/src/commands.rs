use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use kabe::abe::{KabeIndex, TrainingFold};
use kabe::eval::{fss_search, loocv, win_tie_loss, FssResult, Measure, Method, MethodParams};
use kabe::{BkConfig, ClusterNode, Dataset, EvaluationSummary, FoldResult};
use serde::Serialize;

use crate::config::{self, ExperimentConfig};
use crate::output::{self, Run};
use crate::{data, ClusterArgs, CompareArgs, Failure, FssArgs, RunArgs};

fn effective_config(a: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &a.config {
        Some(path) => config::load(path)?,
        None => {
            if a.datasets.is_empty() || a.methods.is_empty() {
                return Err(Failure::config(
                    "either --config or both --dataset and --method are required",
                ));
            }
            ExperimentConfig::from_flags(vec![], vec![])
        }
    };
    if !a.datasets.is_empty() {
        cfg.datasets = a.datasets.clone();
    }
    if !a.methods.is_empty() {
        cfg.methods = a.methods.clone();
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if a.out.is_some() {
        cfg.out = a.out.clone();
    }
    Ok(cfg)
}

pub fn run(a: RunArgs) -> Result<(), Failure> {
    let cfg = effective_config(&a)?;
    let mut datasets: Vec<Dataset> = Vec::new();
    for spec in &cfg.datasets {
        let (d, report) = data::resolve_with_report(spec)?;
        eprintln!(
            "{}",
            serde_json::json!({ "dataset": d.name, "rows_loaded": report.rows_loaded, "rows_dropped": report.rows_dropped })
        );
        datasets.push(d);
    }
    let params = cfg.params();
    params
        .validate()
        .map_err(|e| Failure::config(e.to_string()))?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"));

    let mut runs = Vec::new();
    for d in &datasets {
        for &spec in &cfg.methods {
            let method = Method::with_params(spec, params.clone());
            let diag = |e: kabe::Error| Failure::run(format!("{} on {}: {e}", spec, d.name));
            let (mask, fss) = if cfg.fss {
                let r = fss_search(d, &method, cfg.seed).map_err(diag)?;
                (r.best_mask.clone(), Some(r))
            } else {
                (d.full_mask(), None)
            };
            let summary = loocv(d, &method, &mask, cfg.seed).map_err(diag)?;
            eprintln!(
                "{:>12} {:>8}  MMRE {:.3}  MdMRE {:.3}  pred(0.25) {:.1}",
                d.name,
                spec.to_string(),
                summary.mmre,
                summary.mdmre,
                summary.pred25
            );
            runs.push(Run {
                features: mask
                    .indices()
                    .iter()
                    .map(|&i| d.schema[i].name.clone())
                    .collect(),
                summary,
                fss,
            });
        }
    }
    output::write_run(&out, &runs)?;
    eprintln!("wrote results to {}", out.display());
    Ok(())
}

fn read_summaries(path: &Path) -> Result<Vec<EvaluationSummary>, Failure> {
    let fail = |e: String| Failure::config(format!("{}: {e}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        let mut groups: Vec<((String, String), Vec<FoldResult>)> = Vec::new();
        for row in csv::Reader::from_reader(text.as_bytes()).deserialize::<output::FoldRow>() {
            let row = row.map_err(|e| fail(e.to_string()))?;
            let key = (row.dataset.clone(), row.method.clone());
            match groups.last_mut() {
                Some((k, folds)) if *k == key => folds.push(row.into()),
                _ => groups.push((key, vec![row.into()])),
            }
        }
        groups
            .into_iter()
            .map(|((d, m), folds)| {
                EvaluationSummary::from_folds(m, d, folds).map_err(|e| fail(e.to_string()))
            })
            .collect()
    } else {
        serde_json::from_str(&text).map_err(|e| fail(e.to_string()))
    }
}

pub fn compare(a: CompareArgs) -> Result<(), Failure> {
    let mut all = Vec::new();
    for p in &a.inputs {
        all.extend(read_summaries(p)?);
    }
    let outcome = win_tie_loss(&all, &Measure::ALL).map_err(|e| Failure::config(e.to_string()))?;
    output::write_comparison(&a.out, &outcome)?;
    println!(
        "{:<10} {:>5} {:>5} {:>5} {:>9}",
        "method", "win", "tie", "loss", "win-loss"
    );
    for (m, t) in outcome.ranked() {
        println!(
            "{m:<10} {:>5} {:>5} {:>5} {:>9}",
            t.win,
            t.tie,
            t.loss,
            t.net()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct ClusterOutput<'a> {
    dataset: &'a str,
    seed: u64,
    leaves: usize,
    root: IdNode<'a>,
}

/// A cluster node with project ids in place of positions.
#[derive(Serialize)]
struct IdNode<'a> {
    members: Vec<&'a str>,
    medoid: &'a str,
    variance: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    children: Vec<IdNode<'a>>,
}

impl<'a> IdNode<'a> {
    fn new(node: &ClusterNode, ids: &[&'a str]) -> Self {
        IdNode {
            members: node.members.iter().map(|&i| ids[i]).collect(),
            medoid: ids[node.medoid],
            variance: node.variance,
            children: node.children.iter().map(|c| IdNode::new(c, ids)).collect(),
        }
    }
}

pub fn cluster(a: ClusterArgs) -> Result<(), Failure> {
    let d = data::resolve(&a.dataset)?;
    let mut cfg = BkConfig::with_seed(a.seed);
    if let Some(v) = a.min_leaf_size {
        cfg.min_leaf_size = v;
    }
    if let Some(v) = a.restarts {
        cfg.restarts = v;
    }
    cfg.validate().map_err(|e| Failure::config(e.to_string()))?;
    let fold = TrainingFold::new(d.projects.iter().collect(), &d.schema, &d.full_mask())
        .map_err(|e| Failure::run(e.to_string()))?;
    let index = KabeIndex::build(&fold, &cfg).map_err(|e| Failure::run(e.to_string()))?;
    let tree = index.tree();
    let sizes: Vec<usize> = tree.leaves().iter().map(|l| l.size()).collect();
    eprintln!("{} leaves, sizes {:?}", sizes.len(), sizes);
    let ids: Vec<&str> = d.projects.iter().map(|p| p.id.as_str()).collect();
    let out = ClusterOutput {
        dataset: &d.name,
        seed: a.seed,
        leaves: sizes.len(),
        root: IdNode::new(&tree.root, &ids),
    };
    emit(&serde_json::to_string_pretty(&out).context("serializing tree")?)
}

#[derive(Serialize)]
struct FssOutput<'a> {
    dataset: &'a str,
    method: String,
    best_features: Vec<&'a str>,
    mmre_before: f64,
    mmre_after: f64,
    #[serde(flatten)]
    result: &'a FssResult,
}

pub fn fss(a: FssArgs) -> Result<(), Failure> {
    let d = data::resolve(&a.dataset)?;
    let params = match &a.config {
        Some(p) => config::load(p)?.params(),
        None => MethodParams::default(),
    };
    params
        .validate()
        .map_err(|e| Failure::config(e.to_string()))?;
    let method = Method::with_params(a.method, params);
    let r = fss_search(&d, &method, a.seed)
        .map_err(|e| Failure::run(format!("{} on {}: {e}", a.method, d.name)))?;
    let out = FssOutput {
        dataset: &d.name,
        method: a.method.to_string(),
        best_features: r
            .best_mask
            .indices()
            .iter()
            .map(|&i| d.schema[i].name.as_str())
            .collect(),
        mmre_before: r.full_mmre,
        mmre_after: r.best_mmre,
        result: &r,
    };
    emit(&serde_json::to_string_pretty(&out).context("serializing result")?)
}

/// Prints to standard output, treating a closed pipe as success.
fn emit(text: &str) -> Result<(), Failure> {
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{text}").and_then(|()| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

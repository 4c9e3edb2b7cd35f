//! Leave-one-out evaluation, error metrics, significance testing, the
//! win-tie-loss tournament and feature subset selection.

mod boxplot;
mod fss;
mod method;
mod tournament;
mod wilcoxon;

pub use boxplot::{boxplot_summary, BoxplotSummary};
pub use fss::{fss_search, FssResult, SearchMode};
pub use method::{FittedMethod, Method, MethodParams, MethodSpec};
pub use tournament::{win_tie_loss, ComparisonOutcome, Measure, PairTest, Tally};
pub use wilcoxon::{
    wilcoxon_approx, wilcoxon_exact, wilcoxon_rank_sum, WilcoxonResult, EXACT_LIMIT,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjust::AdjustFlag;
use crate::corpus::{median, Dataset, FeatureMask, FeatureSchema, Project};
use crate::seed::{self, streams};
use crate::{Error, Result};

/// Per-fold inputs shared by every estimator.
#[derive(Debug, Clone, Copy)]
pub struct FoldContext<'a> {
    pub schema: &'a [FeatureSchema],
    pub mask: &'a FeatureMask,
    pub effort_column: &'a str,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub analogy_size: Option<usize>,
    pub flag: AdjustFlag,
}

impl Prediction {
    pub fn plain(value: f64) -> Self {
        Prediction {
            value,
            analogy_size: None,
            flag: AdjustFlag::None,
        }
    }
}

/// Anything that can be trained on a fold and predict its held-out project.
pub trait Estimator: Sync {
    fn name(&self) -> String;
    fn fit_predict(
        &self,
        train: &[&Project],
        x: &Project,
        ctx: &FoldContext<'_>,
    ) -> Result<Prediction>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub project_id: String,
    pub actual: f64,
    pub predicted: f64,
    pub residual: f64,
    pub mre: f64,
    pub analogy_size: Option<usize>,
    pub flag: AdjustFlag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub method: String,
    pub dataset: String,
    pub folds: Vec<FoldResult>,
    pub mmre: f64,
    pub mdmre: f64,
    pub pred25: f64,
}

impl EvaluationSummary {
    pub fn from_folds(
        method: impl Into<String>,
        dataset: impl Into<String>,
        folds: Vec<FoldResult>,
    ) -> Result<Self> {
        let mres: Vec<f64> = folds.iter().map(|f| f.mre).collect();
        Ok(EvaluationSummary {
            method: method.into(),
            dataset: dataset.into(),
            mmre: mmre(&mres)?,
            mdmre: mdmre(&mres)?,
            pred25: pred_at(&mres, 0.25)?,
            folds,
        })
    }

    pub fn mres(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.mre).collect()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.residual).collect()
    }

    pub fn analogy_sizes(&self) -> Vec<usize> {
        self.folds.iter().filter_map(|f| f.analogy_size).collect()
    }
}

/// `|actual - predicted| / actual`.
pub fn mre(actual: f64, predicted: f64) -> Result<f64> {
    if actual.is_nan() || actual <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "actual effort {actual} must be positive"
        )));
    }
    Ok((actual - predicted).abs() / actual)
}

fn non_empty(mres: &[f64]) -> Result<()> {
    if mres.is_empty() {
        Err(Error::InvalidParameter("no MRE values".into()))
    } else {
        Ok(())
    }
}

pub fn mmre(mres: &[f64]) -> Result<f64> {
    non_empty(mres)?;
    Ok(mres.iter().sum::<f64>() / mres.len() as f64)
}

pub fn mdmre(mres: &[f64]) -> Result<f64> {
    non_empty(mres)?;
    Ok(median(mres))
}

/// Percentage of MREs at or below `threshold`.
pub fn pred_at(mres: &[f64], threshold: f64) -> Result<f64> {
    non_empty(mres)?;
    let hits = mres.iter().filter(|&&m| m <= threshold).count();
    Ok(100.0 * hits as f64 / mres.len() as f64)
}

/// Leave-one-out cross validation over every project of `dataset`.
///
/// Folds run in parallel and are reduced in project order. A failing fold
/// aborts the run with the fold's index and project id.
pub fn loocv(
    dataset: &Dataset,
    est: &dyn Estimator,
    mask: &FeatureMask,
    seed: u64,
) -> Result<EvaluationSummary> {
    let n = dataset.len();
    if n < 3 {
        return Err(Error::TooFewProjects { needed: 3, got: n });
    }
    if mask.indices().iter().any(|&f| f >= dataset.feature_count()) {
        return Err(Error::InvalidMask(format!(
            "mask {:?} exceeds {} features",
            mask.indices(),
            dataset.feature_count()
        )));
    }
    let folds: Vec<Result<FoldResult>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = &dataset.projects[i];
            let train: Vec<&Project> = dataset
                .projects
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| p)
                .collect();
            let ctx = FoldContext {
                schema: &dataset.schema,
                mask,
                effort_column: &dataset.effort_column,
                seed: seed::derive(seed, streams::FOLD, i as u64),
            };
            let wrap = |source: Error| Error::Fold {
                fold: i,
                project: x.id.clone(),
                source: Box::new(source),
            };
            let p = est.fit_predict(&train, x, &ctx).map_err(wrap)?;
            Ok(FoldResult {
                project_id: x.id.clone(),
                actual: x.effort,
                predicted: p.value,
                residual: (x.effort - p.value).abs(),
                mre: mre(x.effort, p.value).map_err(wrap)?,
                analogy_size: p.analogy_size,
                flag: p.flag,
            })
        })
        .collect();
    let folds = folds.into_iter().collect::<Result<Vec<_>>>()?;
    EvaluationSummary::from_folds(est.name(), dataset.name.clone(), folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{FeatureKind, FeatureValue};

    struct TrainingMean;

    impl Estimator for TrainingMean {
        fn name(&self) -> String {
            "mean".into()
        }

        fn fit_predict(
            &self,
            train: &[&Project],
            _: &Project,
            _: &FoldContext<'_>,
        ) -> Result<Prediction> {
            Ok(Prediction::plain(
                train.iter().map(|p| p.effort).sum::<f64>() / train.len() as f64,
            ))
        }
    }

    fn dataset(efforts: &[f64]) -> Dataset {
        let schema = vec![FeatureSchema {
            name: "f".into(),
            kind: FeatureKind::Numeric,
            index: 0,
            levels: vec![],
        }];
        let projects = efforts
            .iter()
            .enumerate()
            .map(|(i, &e)| Project {
                id: format!("p{i}"),
                features: vec![FeatureValue::Numeric(i as f64)],
                effort: e,
            })
            .collect();
        Dataset::new("toy", schema, "Effort", "hours", projects).unwrap()
    }

    #[test]
    fn metric_examples() {
        assert!((mre(100.0, 110.0).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(mre(50.0, 50.0).unwrap(), 0.0);
        assert_eq!(mre(10.0, 0.0).unwrap(), 1.0);
        assert!(mre(0.0, 1.0).is_err());

        assert!((mmre(&[0.1, 0.3]).unwrap() - 0.2).abs() < 1e-12);
        assert!((mdmre(&[0.1, 0.3]).unwrap() - 0.2).abs() < 1e-12);
        assert!((mmre(&[0.1, 0.1, 0.7]).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(mdmre(&[0.1, 0.1, 0.7]).unwrap(), 0.1);
        assert_eq!(mmre(&[0.0]).unwrap(), 0.0);
        assert_eq!(mdmre(&[0.0]).unwrap(), 0.0);
        assert!(mmre(&[]).is_err());

        assert_eq!(pred_at(&[0.1, 0.2, 0.3, 0.5], 0.25).unwrap(), 50.0);
        assert_eq!(pred_at(&[0.1, 0.2], 0.25).unwrap(), 100.0);
        assert_eq!(pred_at(&[0.25], 0.25).unwrap(), 100.0);
    }

    #[test]
    fn loocv_training_mean_trace() {
        let s = loocv(
            &dataset(&[10.0, 20.0, 30.0]),
            &TrainingMean,
            &FeatureMask::all(1),
            1,
        )
        .unwrap();
        let preds: Vec<f64> = s.folds.iter().map(|f| f.predicted).collect();
        assert_eq!(preds, vec![25.0, 20.0, 15.0]);
        let ids: Vec<&str> = s.folds.iter().map(|f| f.project_id.as_str()).collect();
        assert_eq!(ids, vec!["p0", "p1", "p2"]);
        assert_eq!(
            s,
            loocv(
                &dataset(&[10.0, 20.0, 30.0]),
                &TrainingMean,
                &FeatureMask::all(1),
                1
            )
            .unwrap()
        );
    }

    #[test]
    fn loocv_rejects_tiny_dataset() {
        assert!(loocv(
            &dataset(&[1.0, 2.0]),
            &TrainingMean,
            &FeatureMask::all(1),
            1
        )
        .is_err());
    }
}

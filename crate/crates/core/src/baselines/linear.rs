use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::Predictor;
use crate::corpus::{skewness, FeatureKind, FeatureMask, FeatureSchema, Project};
use crate::{Error, Result};

/// Whether skewed variables are log-transformed before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformPolicy {
    /// Log the target and strictly positive numeric features with skewness
    /// above 1.
    #[default]
    Auto,
    None,
}

/// One design-matrix column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Regressor {
    Numeric {
        feature: usize,
        name: String,
        log: bool,
        /// Floor applied before taking logs of unseen values.
        floor: f64,
    },
    Dummy {
        feature: usize,
        name: String,
        level: u32,
    },
}

impl Regressor {
    pub fn name(&self) -> &str {
        match self {
            Regressor::Numeric { name, .. } | Regressor::Dummy { name, .. } => name,
        }
    }

    pub fn feature(&self) -> usize {
        match self {
            Regressor::Numeric { feature, .. } | Regressor::Dummy { feature, .. } => *feature,
        }
    }

    fn value(&self, p: &Project) -> f64 {
        match self {
            Regressor::Numeric {
                feature,
                log,
                floor,
                ..
            } => {
                let v = p.features[*feature].as_numeric().unwrap_or(0.0);
                if *log {
                    v.max(*floor).ln()
                } else {
                    v
                }
            }
            Regressor::Dummy { feature, level, .. } => {
                f64::from(u8::from(p.features[*feature].as_level() == Some(*level)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub target: String,
    pub intercept: f64,
    pub regressors: Vec<Regressor>,
    pub coefficients: Vec<f64>,
    pub log_target: bool,
    /// On the fitted (possibly log) scale.
    pub r_squared: f64,
    /// Predictor indices the model uses.
    pub features: Vec<usize>,
    pub min_effort: f64,
}

impl LinearModel {
    /// Coefficient by regressor name.
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.regressors
            .iter()
            .position(|r| r.name() == name)
            .map(|i| self.coefficients[i])
    }

    fn fitted(&self, x: &Project) -> f64 {
        self.intercept
            + self
                .regressors
                .iter()
                .zip(&self.coefficients)
                .map(|(r, b)| b * r.value(x))
                .sum::<f64>()
    }

    /// The model as an equation, e.g. `Ln(Effort) = 1.2 + 0.9 × Ln(KSLOC)`.
    pub fn equation(&self) -> String {
        let wrap = |name: &str, log: bool| {
            if log {
                format!("Ln({name})")
            } else {
                name.to_string()
            }
        };
        let mut s = format!(
            "{} = {}",
            wrap(&self.target, self.log_target),
            fmt_coef(self.intercept)
        );
        for (r, b) in self.regressors.iter().zip(&self.coefficients) {
            let term = match r {
                Regressor::Numeric { name, log, .. } => wrap(name, *log),
                Regressor::Dummy { name, .. } => name.clone(),
            };
            let sign = if *b < 0.0 { '-' } else { '+' };
            s.push_str(&format!(" {sign} {} × {term}", fmt_coef(b.abs())));
        }
        s
    }
}

fn fmt_coef(v: f64) -> String {
    if v != 0.0 && v.abs() < 0.01 {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

impl Predictor for LinearModel {
    fn predict(&self, x: &Project) -> Result<f64> {
        let f = self.fitted(x);
        let e = if self.log_target { f.exp() } else { f };
        Ok(if e.is_nan() || e < self.min_effort {
            self.min_effort
        } else {
            e
        })
    }
}

/// Candidate regressor groups: one per masked feature.
struct Design {
    target: String,
    groups: Vec<(usize, Vec<Regressor>)>,
    y: Vec<f64>,
    log_target: bool,
    min_effort: f64,
}

fn design(
    train: &[&Project],
    schema: &[FeatureSchema],
    mask: &FeatureMask,
    policy: TransformPolicy,
    target: &str,
) -> Result<Design> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let efforts: Vec<f64> = train.iter().map(|p| p.effort).collect();
    let log_target = policy == TransformPolicy::Auto && skewness(&efforts) > 1.0;
    let y = if log_target {
        efforts.iter().map(|e| e.ln()).collect()
    } else {
        efforts.clone()
    };
    let mut groups = Vec::new();
    for &f in mask.indices() {
        let col = schema
            .get(f)
            .ok_or_else(|| Error::InvalidMask(format!("feature {f} out of range")))?;
        let regs = match col.kind {
            FeatureKind::Numeric => {
                let v: Vec<f64> = train
                    .iter()
                    .filter_map(|p| p.features[f].as_numeric())
                    .collect();
                let positive = v.iter().all(|&x| x > 0.0);
                let log = policy == TransformPolicy::Auto && positive && skewness(&v) > 1.0;
                let floor = v.iter().copied().fold(f64::INFINITY, f64::min);
                vec![Regressor::Numeric {
                    feature: f,
                    name: col.name.clone(),
                    log,
                    floor: if floor.is_finite() { floor } else { 1.0 },
                }]
            }
            FeatureKind::Categorical => {
                let mut present: Vec<u32> = train
                    .iter()
                    .filter_map(|p| p.features[f].as_level())
                    .collect();
                present.sort_unstable();
                present.dedup();
                present
                    .into_iter()
                    .skip(1)
                    .map(|level| Regressor::Dummy {
                        feature: f,
                        name: format!(
                            "{}_{}",
                            col.name,
                            col.levels
                                .get(level as usize)
                                .map_or(level.to_string(), Clone::clone)
                        ),
                        level,
                    })
                    .collect()
            }
        };
        groups.push((f, regs));
    }
    Ok(Design {
        target: target.to_string(),
        groups,
        y,
        log_target,
        min_effort: efforts.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

struct Fit {
    intercept: f64,
    coefficients: Vec<f64>,
    sse: f64,
    sst: f64,
}

fn least_squares(train: &[&Project], regs: &[Regressor], y: &[f64]) -> Result<Fit> {
    let n = train.len();
    let p = regs.len() + 1;
    if n <= regs.len() {
        return Err(Error::TooFewProjects {
            needed: regs.len() + 1,
            got: n,
        });
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if sst == 0.0 {
        return Ok(Fit {
            intercept: mean,
            coefficients: vec![0.0; regs.len()],
            sse: 0.0,
            sst,
        });
    }
    let x = DMatrix::from_fn(n, p, |i, j| {
        if j == 0 {
            1.0
        } else {
            regs[j - 1].value(train[i])
        }
    });
    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();
    let diag_max = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    let tol = diag_max * 1e-10 * n as f64;
    let dependent: Vec<String> = (0..p)
        .filter(|&j| r[(j, j)].abs() <= tol)
        .map(|j| {
            if j == 0 {
                "intercept".to_string()
            } else {
                regs[j - 1].name().to_string()
            }
        })
        .collect();
    if !dependent.is_empty() {
        return Err(Error::Singular(dependent));
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular(regs.iter().map(|r| r.name().to_string()).collect()))?;
    let resid = &yv - &x * &beta;
    Ok(Fit {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        sse: resid.norm_squared(),
        sst,
    })
}

fn finish(d: &Design, features: Vec<usize>, regs: Vec<Regressor>, fit: Fit) -> LinearModel {
    let r_squared = if fit.sst == 0.0 {
        0.0
    } else {
        (1.0 - fit.sse / fit.sst).clamp(0.0, 1.0)
    };
    LinearModel {
        target: d.target.clone(),
        intercept: fit.intercept,
        regressors: regs,
        coefficients: fit.coefficients,
        log_target: d.log_target,
        r_squared,
        features,
        min_effort: d.min_effort,
    }
}

/// OLS over every masked feature with the default transform policy.
pub fn fit_ols(
    train: &[&Project],
    schema: &[FeatureSchema],
    mask: &FeatureMask,
) -> Result<LinearModel> {
    fit_ols_with(train, schema, mask, TransformPolicy::Auto, "Effort")
}

pub fn fit_ols_with(
    train: &[&Project],
    schema: &[FeatureSchema],
    mask: &FeatureMask,
    policy: TransformPolicy,
    target: &str,
) -> Result<LinearModel> {
    let d = design(train, schema, mask, policy, target)?;
    let regs: Vec<Regressor> = d
        .groups
        .iter()
        .flat_map(|(_, r)| r.iter().cloned())
        .collect();
    let fit = least_squares(train, &regs, &d.y)?;
    Ok(finish(&d, mask.indices().to_vec(), regs, fit))
}

/// Forward stepwise selection: repeatedly adds the feature with the smallest
/// partial-F p-value below 0.05.
pub fn fit_stepwise(
    train: &[&Project],
    schema: &[FeatureSchema],
    mask: &FeatureMask,
) -> Result<LinearModel> {
    fit_stepwise_with(train, schema, mask, TransformPolicy::Auto, "Effort")
}

pub fn fit_stepwise_with(
    train: &[&Project],
    schema: &[FeatureSchema],
    mask: &FeatureMask,
    policy: TransformPolicy,
    target: &str,
) -> Result<LinearModel> {
    const ALPHA: f64 = 0.05;
    let d = design(train, schema, mask, policy, target)?;
    let n = train.len();
    let mut chosen: Vec<usize> = Vec::new();
    let mut regs: Vec<Regressor> = Vec::new();
    let mut current = least_squares(train, &regs, &d.y)?;
    loop {
        let mut best: Option<(f64, usize, Vec<Regressor>, Fit)> = None;
        for (g, (_, group)) in d.groups.iter().enumerate() {
            if chosen.contains(&g) || group.is_empty() {
                continue;
            }
            let mut trial = regs.clone();
            trial.extend(group.iter().cloned());
            let df2 = n as f64 - (trial.len() + 1) as f64;
            if df2 < 1.0 {
                continue;
            }
            let Ok(fit) = least_squares(train, &trial, &d.y) else {
                continue;
            };
            let q = group.len() as f64;
            let p = if fit.sse <= 0.0 {
                if current.sse > 0.0 {
                    0.0
                } else {
                    1.0
                }
            } else {
                let f = ((current.sse - fit.sse) / q) / (fit.sse / df2);
                let dist = FisherSnedecor::new(q, df2)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                if f > 0.0 {
                    dist.sf(f)
                } else {
                    1.0
                }
            };
            if p < ALPHA && best.as_ref().is_none_or(|(bp, ..)| p < *bp) {
                best = Some((p, g, trial, fit));
            }
        }
        match best {
            Some((_, g, trial, fit)) => {
                chosen.push(g);
                regs = trial;
                current = fit;
            }
            None => break,
        }
    }
    // Keep regressors in mask order so a refit over the same features matches.
    chosen.sort_unstable();
    let regs: Vec<Regressor> = chosen
        .iter()
        .flat_map(|&g| d.groups[g].1.iter().cloned())
        .collect();
    let features: Vec<usize> = chosen.iter().map(|&g| d.groups[g].0).collect();
    let fit = least_squares(train, &regs, &d.y)?;
    Ok(finish(&d, features, regs, fit))
}

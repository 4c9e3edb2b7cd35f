use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Estimator, FoldContext, Prediction};
use crate::abe::{Retriever, Selector, TrainingFold};
use crate::adjust::{train_ga, train_nn, AdjustmentModel, GaConfig, NnConfig};
use crate::baselines::{
    fit_cart_with, fit_ols_with, fit_stepwise_with, CartConfig, LinearModel, Predictor,
    TransformPolicy, TreeModel,
};
use crate::cluster::BkConfig;
use crate::corpus::Project;
use crate::{Error, Result};

/// A named estimation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodSpec {
    Kabe,
    /// Mean of the `k` nearest analogies.
    AbeK(usize),
    KabeSm,
    KabeGa,
    KabeNn,
    Ols,
    Sr,
    Cart,
}

impl MethodSpec {
    pub fn is_analogy(&self) -> bool {
        !matches!(self, MethodSpec::Ols | MethodSpec::Sr | MethodSpec::Cart)
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Kabe => f.write_str("kabe"),
            MethodSpec::AbeK(k) => write!(f, "abe-{k}"),
            MethodSpec::KabeSm => f.write_str("kabe+sm"),
            MethodSpec::KabeGa => f.write_str("kabe+ga"),
            MethodSpec::KabeNn => f.write_str("kabe+nn"),
            MethodSpec::Ols => f.write_str("ols"),
            MethodSpec::Sr => f.write_str("sr"),
            MethodSpec::Cart => f.write_str("cart"),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Ok(match lower.as_str() {
            "kabe" => MethodSpec::Kabe,
            "kabe+sm" => MethodSpec::KabeSm,
            "kabe+ga" => MethodSpec::KabeGa,
            "kabe+nn" => MethodSpec::KabeNn,
            "ols" => MethodSpec::Ols,
            "sr" => MethodSpec::Sr,
            "cart" => MethodSpec::Cart,
            other => {
                let k = other
                    .strip_prefix("abe-")
                    .or_else(|| other.strip_prefix("abe"))
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|k| (1..=5).contains(k))
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))?;
                MethodSpec::AbeK(k)
            }
        })
    }
}

impl Serialize for MethodSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MethodSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Tunables shared by every method.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodParams {
    pub bk: BkConfig,
    pub ga: GaConfig,
    pub nn: NnConfig,
    pub cart: CartConfig,
    pub transform: TransformPolicy,
}

impl MethodParams {
    pub fn validate(&self) -> Result<()> {
        self.bk.validate()?;
        self.ga.validate()?;
        self.nn.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub spec: MethodSpec,
    pub params: MethodParams,
}

impl Method {
    pub fn new(spec: MethodSpec) -> Self {
        Method {
            spec,
            params: MethodParams::default(),
        }
    }

    pub fn with_params(spec: MethodSpec, params: MethodParams) -> Self {
        Method { spec, params }
    }

    /// Trains on `train`; every fitted artifact sees only these projects.
    pub fn fit<'a>(
        &self,
        train: &[&'a Project],
        ctx: &FoldContext<'_>,
    ) -> Result<FittedMethod<'a>> {
        let p = &self.params;
        let train_ids = train.iter().map(|p| p.id.clone()).collect();
        let analogy = |selector: Selector| -> Result<Box<Retriever<'a>>> {
            Retriever::new(
                TrainingFold::new(train.to_vec(), ctx.schema, ctx.mask)?,
                selector,
            )
            .map(Box::new)
        };
        let kabe = || {
            Selector::Kabe(BkConfig {
                seed: ctx.seed,
                ..p.bk
            })
        };
        let kind = match self.spec {
            MethodSpec::Kabe => FittedKind::Analogy(analogy(kabe())?, AdjustmentModel::Null),
            MethodSpec::AbeK(k) => {
                FittedKind::Analogy(analogy(Selector::Fixed(k))?, AdjustmentModel::Null)
            }
            MethodSpec::KabeSm => {
                FittedKind::Analogy(analogy(kabe())?, AdjustmentModel::Similarity)
            }
            MethodSpec::KabeGa => {
                let r = analogy(kabe())?;
                let m = train_ga(
                    &r,
                    &GaConfig {
                        seed: ctx.seed,
                        ..p.ga.clone()
                    },
                )?;
                FittedKind::Analogy(r, AdjustmentModel::Ga(m))
            }
            MethodSpec::KabeNn => {
                let r = analogy(kabe())?;
                let m = train_nn(
                    &r,
                    &NnConfig {
                        seed: ctx.seed,
                        ..p.nn.clone()
                    },
                )?;
                FittedKind::Analogy(r, AdjustmentModel::Nn(m))
            }
            MethodSpec::Ols => FittedKind::Linear(fit_ols_with(
                train,
                ctx.schema,
                ctx.mask,
                p.transform,
                ctx.effort_column,
            )?),
            MethodSpec::Sr => FittedKind::Linear(fit_stepwise_with(
                train,
                ctx.schema,
                ctx.mask,
                p.transform,
                ctx.effort_column,
            )?),
            MethodSpec::Cart => {
                FittedKind::Tree(fit_cart_with(train, ctx.schema, ctx.mask, &p.cart)?)
            }
        };
        Ok(FittedMethod { kind, train_ids })
    }
}

impl Estimator for Method {
    fn name(&self) -> String {
        self.spec.to_string()
    }

    fn fit_predict(
        &self,
        train: &[&Project],
        x: &Project,
        ctx: &FoldContext<'_>,
    ) -> Result<Prediction> {
        self.fit(train, ctx)?.predict(x)
    }
}

#[derive(Debug, Clone)]
enum FittedKind<'a> {
    Analogy(Box<Retriever<'a>>, AdjustmentModel),
    Linear(LinearModel),
    Tree(TreeModel),
}

/// A method trained on one fold.
#[derive(Debug, Clone)]
pub struct FittedMethod<'a> {
    kind: FittedKind<'a>,
    train_ids: Vec<String>,
}

impl FittedMethod<'_> {
    pub fn predict(&self, x: &Project) -> Result<Prediction> {
        match &self.kind {
            FittedKind::Analogy(r, model) => {
                let set = r.retrieve(x)?;
                let adjusted = model.apply(&r.fold.normalize(x), &set, &r.fold)?;
                Ok(Prediction {
                    value: adjusted.value,
                    analogy_size: Some(set.len()),
                    flag: adjusted.flag,
                })
            }
            FittedKind::Linear(m) => Ok(Prediction::plain(m.predict(x)?)),
            FittedKind::Tree(m) => Ok(Prediction::plain(m.predict(x)?)),
        }
    }

    /// Ids of every project that reached a fitted artifact: the normalizer,
    /// the cluster tree, adjustment training pairs or a regression fit.
    pub fn audit_ids(&self) -> Vec<String> {
        let mut ids = self.train_ids.clone();
        if let FittedKind::Analogy(r, _) = &self.kind {
            ids.extend(r.fold.projects.iter().map(|p| p.id.clone()));
            if let Some(index) = r.kabe_index() {
                ids.extend(
                    index
                        .tree()
                        .root
                        .members
                        .iter()
                        .map(|&i| r.fold.projects[i].id.clone()),
                );
            }
        }
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn adjustment(&self) -> Option<&AdjustmentModel> {
        match &self.kind {
            FittedKind::Analogy(_, m) => Some(m),
            _ => None,
        }
    }

    pub fn linear(&self) -> Option<&LinearModel> {
        match &self.kind {
            FittedKind::Linear(m) => Some(m),
            _ => None,
        }
    }

    pub fn tree(&self) -> Option<&TreeModel> {
        match &self.kind {
            FittedKind::Tree(m) => Some(m),
            _ => None,
        }
    }
}

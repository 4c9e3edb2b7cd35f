//! Effort adjustment on top of a selected analogy set: similarity weighting,
//! GA-trained linear feature-difference correction and a neural-network
//! residual model.
//!
//! All corrected estimates are clamped from below at the smallest training
//! effort so they stay positive.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::abe::{estimate_mean, AnalogySet, Retriever, TrainingFold};
use crate::corpus::Coord;
use crate::seed::{self, streams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjustFlag {
    #[default]
    None,
    /// Every similarity was zero; the plain mean was used.
    MeanFallback,
    /// The corrected estimate fell below the smallest training effort.
    Clamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adjusted {
    pub value: f64,
    pub flag: AdjustFlag,
}

impl Adjusted {
    fn clamp(value: f64, floor: f64) -> Self {
        if value < floor || value.is_nan() {
            Adjusted {
                value: floor,
                flag: AdjustFlag::Clamped,
            }
        } else {
            Adjusted {
                value,
                flag: AdjustFlag::None,
            }
        }
    }
}

/// Per-feature differences `query - analog` (0/1 mismatch for categoricals).
pub fn feature_diff(query: &[Coord], analog: &[Coord]) -> Vec<f64> {
    query.iter().zip(analog).map(|(a, b)| a.diff(*b)).collect()
}

/// Similarity-weighted mean of the analogs' efforts.
pub fn adjust_similarity(analogies: &AnalogySet, fold: &TrainingFold<'_>) -> Result<Adjusted> {
    let weight: f64 = analogies.members.iter().map(|n| n.similarity).sum();
    if weight <= 0.0 {
        return Ok(Adjusted {
            value: estimate_mean(analogies, fold)?,
            flag: AdjustFlag::MeanFallback,
        });
    }
    let value = analogies
        .members
        .iter()
        .map(|n| n.similarity * fold.effort(n.index))
        .sum::<f64>()
        / weight;
    let efforts = analogies.indices().map(|i| fold.effort(i));
    let (lo, hi) = efforts.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
        (lo.min(e), hi.max(e))
    });
    Ok(Adjusted {
        value: value.clamp(lo, hi),
        flag: AdjustFlag::None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub seed: u64,
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Per-feature `(low, high)` coefficient bounds. When absent every
    /// coefficient ranges over twice the training effort range either side
    /// of zero.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Upper limit on inner leave-one-out queries used for fitness.
    pub max_fit_queries: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            seed: 0,
            population: 50,
            generations: 100,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            bounds: None,
            max_fit_queries: 40,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidParameter("population must be >= 2".into()));
        }
        for (name, r) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1]"
                )));
            }
        }
        if self.max_fit_queries == 0 {
            return Err(Error::InvalidParameter(
                "max_fit_queries must be >= 1".into(),
            ));
        }
        if let Some(bounds) = &self.bounds {
            if bounds
                .iter()
                .any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi))
            {
                return Err(Error::InvalidParameter(
                    "coefficient bounds must be finite with low <= high".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaModel {
    pub alpha: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    /// Best fitness (inner MMRE) after each generation, starting with the
    /// initial population.
    pub fitness_trace: Vec<f64>,
}

impl GaModel {
    pub fn fitness(&self) -> f64 {
        self.fitness_trace.last().copied().unwrap_or(f64::NAN)
    }
}

/// Linear feature-difference correction: the mean over analogs of
/// `e_i + Σ_j α_j (x_j - y_ij)`.
pub fn adjust_ga(
    query: &[Coord],
    analogies: &AnalogySet,
    fold: &TrainingFold<'_>,
    alpha: &[f64],
) -> Result<Adjusted> {
    if query.len() != alpha.len() {
        return Err(Error::LengthMismatch {
            left: query.len(),
            right: alpha.len(),
        });
    }
    let mean = estimate_mean(analogies, fold)?;
    let k = analogies.len() as f64;
    let correction = analogies
        .indices()
        .map(|i| {
            query
                .iter()
                .zip(&fold.vectors[i])
                .zip(alpha)
                .map(|((a, b), w)| w * a.diff(*b))
                .sum::<f64>()
        })
        .sum::<f64>()
        / k;
    Ok(Adjusted::clamp(mean + correction, fold.min_effort()))
}

/// Inner leave-one-out case: one training project against analogies drawn
/// from the rest of the fold.
struct FitCase {
    actual: f64,
    mean: f64,
    mean_diff: Vec<f64>,
}

fn fit_queries(n: usize, limit: usize, seed: u64) -> Vec<usize> {
    if n <= limit {
        return (0..n).collect();
    }
    let mut rng = seed::rng(seed::derive(seed, streams::FIT_QUERIES, 0));
    let mut picked = sample(&mut rng, n, limit).into_vec();
    picked.sort_unstable();
    picked
}

fn check_trainable(retriever: &Retriever<'_>) -> Result<()> {
    let n = retriever.fold.len();
    if n < 3 {
        return Err(Error::TooFewProjects { needed: 3, got: n });
    }
    Ok(())
}

/// Trains the feature-difference coefficients by a real-valued GA minimizing inner
/// leave-one-out MMRE over the fold, using the retriever's selector.
pub fn train_ga(retriever: &Retriever<'_>, cfg: &GaConfig) -> Result<GaModel> {
    cfg.validate()?;
    check_trainable(retriever)?;
    let fold = &retriever.fold;
    let m = fold.vectors[0].len();
    let bounds = match &cfg.bounds {
        Some(b) if b.len() == m => b.clone(),
        Some(b) => {
            return Err(Error::LengthMismatch {
                left: m,
                right: b.len(),
            })
        }
        None => {
            let r = 2.0 * fold.effort_range().max(f64::MIN_POSITIVE);
            vec![(-r, r); m]
        }
    };

    let mut cases = Vec::new();
    for i in fit_queries(fold.len(), cfg.max_fit_queries, cfg.seed) {
        let set = retriever.retrieve_inner(i)?;
        let mut mean_diff = vec![0.0; m];
        for j in set.indices() {
            for (acc, d) in mean_diff
                .iter_mut()
                .zip(feature_diff(&fold.vectors[i], &fold.vectors[j]))
            {
                *acc += d;
            }
        }
        let k = set.len() as f64;
        mean_diff.iter_mut().for_each(|d| *d /= k);
        cases.push(FitCase {
            actual: fold.effort(i),
            mean: estimate_mean(&set, fold)?,
            mean_diff,
        });
    }
    let floor = fold.min_effort();
    let fitness = |alpha: &[f64]| -> f64 {
        cases
            .iter()
            .map(|c| {
                let corr: f64 = alpha.iter().zip(&c.mean_diff).map(|(a, d)| a * d).sum();
                let est = (c.mean + corr).max(floor);
                (c.actual - est).abs() / c.actual
            })
            .sum::<f64>()
            / cases.len() as f64
    };

    let mut rng = seed::rng(seed::derive(cfg.seed, streams::GA, 0));
    let sigmas: Vec<Normal<f64>> = bounds
        .iter()
        .map(|(lo, hi)| Normal::new(0.0, 0.1 * (hi - lo)).expect("finite sigma"))
        .collect();
    let mut pop: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| {
                    if lo < hi {
                        rng.random_range(lo..=hi)
                    } else {
                        lo
                    }
                })
                .collect()
        })
        .collect();
    let mut scores: Vec<f64> = pop.iter().map(|a| fitness(a)).collect();
    let best_of = |scores: &[f64]| -> usize {
        (0..scores.len())
            .min_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)))
            .expect("non-empty population")
    };
    let mut best = best_of(&scores);
    let mut trace = vec![scores[best]];

    for _ in 0..cfg.generations {
        let mut next = Vec::with_capacity(cfg.population);
        next.push(pop[best].clone());
        while next.len() < cfg.population {
            let tournament = |rng: &mut rand_chacha::ChaCha8Rng| {
                let a = rng.random_range(0..pop.len());
                let b = rng.random_range(0..pop.len());
                if scores[b] < scores[a] {
                    b
                } else {
                    a
                }
            };
            let p1 = tournament(&mut rng);
            let p2 = tournament(&mut rng);
            let mut child = if rng.random::<f64>() < cfg.crossover_rate {
                pop[p1]
                    .iter()
                    .zip(&pop[p2])
                    .map(|(&a, &b)| if rng.random::<bool>() { a } else { b })
                    .collect()
            } else {
                pop[p1].clone()
            };
            for ((gene, &(lo, hi)), sigma) in child.iter_mut().zip(&bounds).zip(&sigmas) {
                if rng.random::<f64>() < cfg.mutation_rate {
                    *gene = (*gene + sigma.sample(&mut rng)).clamp(lo, hi);
                }
            }
            next.push(child);
        }
        pop = next;
        scores = pop.iter().map(|a| fitness(a)).collect();
        best = best_of(&scores);
        trace.push(scores[best]);
    }

    Ok(GaModel {
        alpha: pop.swap_remove(best),
        bounds,
        fitness_trace: trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnConfig {
    pub seed: u64,
    /// Defaults to `max(4, m)`.
    pub hidden_units: Option<usize>,
    pub learning_rate: f64,
    pub mse_threshold: f64,
    pub max_epochs: usize,
    pub max_fit_queries: usize,
}

impl Default for NnConfig {
    fn default() -> Self {
        NnConfig {
            seed: 0,
            hidden_units: None,
            learning_rate: 0.01,
            mse_threshold: 0.01,
            max_epochs: 5000,
            max_fit_queries: 40,
        }
    }
}

impl NnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_units == Some(0) {
            return Err(Error::InvalidParameter("hidden_units must be >= 1".into()));
        }
        if self.mse_threshold.is_nan() || self.mse_threshold <= 0.0 {
            return Err(Error::InvalidParameter("mse_threshold must be > 0".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning_rate must be > 0".into()));
        }
        if self.max_fit_queries == 0 {
            return Err(Error::InvalidParameter(
                "max_fit_queries must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Maps a feature-difference vector to an effort correction.
pub trait ResidualModel {
    fn correction(&self, diff: &[f64]) -> f64;
}

/// Single hidden layer of sigmoid units with a linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnModel {
    pub inputs: usize,
    pub hidden: usize,
    /// Row-major `hidden x inputs`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    /// Effort units per unit of network output.
    pub scale: f64,
    pub epochs: usize,
    pub final_mse: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl NnModel {
    fn hidden_layer(&self, x: &[f64], h: &mut [f64]) {
        for (u, hu) in h.iter_mut().enumerate() {
            let row = &self.w1[u * self.inputs..(u + 1) * self.inputs];
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[u];
            *hu = sigmoid(z);
        }
    }

    /// Raw (scaled) network output.
    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut h = vec![0.0; self.hidden];
        self.hidden_layer(x, &mut h);
        h.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>() + self.b2
    }

    fn mse(&self, pairs: &[(Vec<f64>, f64)]) -> f64 {
        pairs
            .iter()
            .map(|(x, t)| (self.forward(x) - t).powi(2))
            .sum::<f64>()
            / pairs.len() as f64
    }
}

impl ResidualModel for NnModel {
    fn correction(&self, diff: &[f64]) -> f64 {
        self.forward(diff) * self.scale
    }
}

/// Trains the residual network on (feature difference, effort difference)
/// pairs built from inner leave-one-out queries against their own analogies.
pub fn train_nn(retriever: &Retriever<'_>, cfg: &NnConfig) -> Result<NnModel> {
    cfg.validate()?;
    check_trainable(retriever)?;
    let fold = &retriever.fold;
    let inputs = fold.vectors[0].len();
    let hidden = cfg.hidden_units.unwrap_or(inputs.max(4));
    let range = fold.effort_range();
    let scale = if range > 0.0 { range } else { 1.0 };

    let mut pairs = Vec::new();
    for i in fit_queries(fold.len(), cfg.max_fit_queries, cfg.seed) {
        let set = retriever.retrieve_inner(i)?;
        for j in set.indices() {
            pairs.push((
                feature_diff(&fold.vectors[i], &fold.vectors[j]),
                (fold.effort(i) - fold.effort(j)) / scale,
            ));
        }
    }

    let mut rng = seed::rng(seed::derive(cfg.seed, streams::NN, 0));
    let r1 = 1.0 / (inputs as f64).sqrt();
    let r2 = 1.0 / (hidden as f64).sqrt();
    let mut net = NnModel {
        inputs,
        hidden,
        w1: (0..hidden * inputs)
            .map(|_| rng.random_range(-r1..r1))
            .collect(),
        b1: (0..hidden).map(|_| rng.random_range(-r1..r1)).collect(),
        w2: (0..hidden).map(|_| rng.random_range(-r2..r2)).collect(),
        b2: 0.0,
        scale,
        epochs: 0,
        final_mse: f64::NAN,
    };

    let lr = cfg.learning_rate;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut h = vec![0.0; hidden];
    let mut mse = net.mse(&pairs);
    while mse >= cfg.mse_threshold && net.epochs < cfg.max_epochs {
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        for &p in &order {
            let (x, t) = &pairs[p];
            net.hidden_layer(x, &mut h);
            let out = h.iter().zip(&net.w2).map(|(a, w)| a * w).sum::<f64>() + net.b2;
            let err = out - t;
            for (u, &hu) in h.iter().enumerate() {
                let delta = err * net.w2[u] * hu * (1.0 - hu);
                net.w2[u] -= lr * err * hu;
                let row = &mut net.w1[u * inputs..(u + 1) * inputs];
                for (w, v) in row.iter_mut().zip(x) {
                    *w -= lr * delta * v;
                }
                net.b1[u] -= lr * delta;
            }
            net.b2 -= lr * err;
        }
        net.epochs += 1;
        mse = net.mse(&pairs);
    }
    net.final_mse = mse;
    if net
        .w1
        .iter()
        .chain(&net.w2)
        .chain(&net.b1)
        .any(|w| !w.is_finite())
        || !net.b2.is_finite()
    {
        return Err(Error::InvalidParameter("network training diverged".into()));
    }
    Ok(net)
}

/// Residual correction: the mean over analogs of `e_i + f(x - y_i)`.
pub fn adjust_nn(
    query: &[Coord],
    analogies: &AnalogySet,
    fold: &TrainingFold<'_>,
    model: &dyn ResidualModel,
) -> Result<Adjusted> {
    let mean = estimate_mean(analogies, fold)?;
    let correction = analogies
        .indices()
        .map(|i| model.correction(&feature_diff(query, &fold.vectors[i])))
        .sum::<f64>()
        / analogies.len() as f64;
    Ok(Adjusted::clamp(mean + correction, fold.min_effort()))
}

/// A trained (or parameter-free) adjustment, exportable as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum AdjustmentModel {
    Null,
    Similarity,
    Ga(GaModel),
    Nn(NnModel),
}

impl AdjustmentModel {
    pub fn apply(
        &self,
        query: &[Coord],
        analogies: &AnalogySet,
        fold: &TrainingFold<'_>,
    ) -> Result<Adjusted> {
        match self {
            AdjustmentModel::Null => Ok(Adjusted {
                value: estimate_mean(analogies, fold)?,
                flag: AdjustFlag::None,
            }),
            AdjustmentModel::Similarity => adjust_similarity(analogies, fold),
            AdjustmentModel::Ga(m) => adjust_ga(query, analogies, fold, &m.alpha),
            AdjustmentModel::Nn(m) => adjust_nn(query, analogies, fold, m),
        }
    }
}

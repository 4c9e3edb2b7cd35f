//! Neighbor ranking and analogy selection.
//!
//! [`TrainingFold`] holds the normalized training projects of one fold.
//! Analogies are chosen either as the `k` nearest projects or by k-ABE: the
//! intersection of the nearest neighbor's leaf in the feature-space
//! bisecting k-medoids tree with the leaf holding the nearest distance in a
//! bisecting k-medoids tree built over the query's distance values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::{bisect, bisect_scalar, leaf_of, BkConfig, ClusterTree, PointSpace};
use crate::corpus::{
    fit_normalizer, scaled_distance, similarity, squared_norm, FeatureMask, FeatureSchema,
    NormVector, NormalizationModel, Project,
};
use crate::seed::{self, streams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    /// Position in the training fold.
    pub index: usize,
    pub distance: f64,
    /// `1 - distance / max distance` over the query's candidates.
    pub similarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionSource {
    FixedK,
    Kabe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogySet {
    /// Ascending distance.
    pub members: Vec<Neighbor>,
    pub source: SelectionSource,
}

impl AnalogySet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().map(|n| n.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Selector {
    Fixed(usize),
    Kabe(BkConfig),
}

/// Normalized training projects of one fold.
#[derive(Debug, Clone)]
pub struct TrainingFold<'a> {
    pub projects: Vec<&'a Project>,
    pub normalizer: NormalizationModel,
    pub vectors: Vec<NormVector>,
}

impl<'a> TrainingFold<'a> {
    /// Fits the normalizer on `projects` only and normalizes them.
    pub fn new(
        projects: Vec<&'a Project>,
        schema: &[FeatureSchema],
        mask: &FeatureMask,
    ) -> Result<Self> {
        let normalizer = fit_normalizer(projects.iter().copied(), schema, mask)?;
        let vectors = projects.iter().map(|p| normalizer.normalize(p)).collect();
        Ok(TrainingFold {
            projects,
            normalizer,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.projects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projects.is_empty()
    }

    pub fn effort(&self, index: usize) -> f64 {
        self.projects[index].effort
    }

    pub fn normalize(&self, p: &Project) -> NormVector {
        self.normalizer.normalize(p)
    }

    /// Smallest training effort (all efforts are positive).
    pub fn min_effort(&self) -> f64 {
        self.projects
            .iter()
            .map(|p| p.effort)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn effort_range(&self) -> f64 {
        let max = self
            .projects
            .iter()
            .map(|p| p.effort)
            .fold(f64::NEG_INFINITY, f64::max);
        max - self.min_effort()
    }
}

/// Every training project ordered by ascending distance to `x`, ties by
/// lower index.
pub fn rank_neighbors(x: &Project, fold: &TrainingFold<'_>) -> Result<Vec<Neighbor>> {
    rank_vector(&fold.normalize(x), fold, None)
}

/// Ranks the fold against a normalized query, optionally skipping one
/// training position (used for leave-one-out inside the fold).
pub fn rank_vector(
    query: &[crate::corpus::Coord],
    fold: &TrainingFold<'_>,
    exclude: Option<usize>,
) -> Result<Vec<Neighbor>> {
    if fold
        .vectors
        .iter()
        .enumerate()
        .all(|(i, _)| Some(i) == exclude)
    {
        return Err(Error::TooFewProjects { needed: 1, got: 0 });
    }
    let m = query.len();
    if let Some(v) = fold.vectors.first() {
        if v.len() != m {
            return Err(Error::LengthMismatch {
                left: m,
                right: v.len(),
            });
        }
    }
    let mut ranked: Vec<Neighbor> = fold
        .vectors
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(index, v)| Neighbor {
            index,
            distance: scaled_distance(squared_norm(query, v), m),
            similarity: 0.0,
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.index.cmp(&b.index))
    });
    let max = ranked.last().map_or(0.0, |n| n.distance);
    for n in &mut ranked {
        n.similarity = if max > 0.0 {
            similarity(n.distance / max)
        } else {
            1.0
        };
    }
    Ok(ranked)
}

/// The first `k` ranked neighbors.
pub fn fixed_k_select(ranked: &[Neighbor], k: usize) -> Result<AnalogySet> {
    if k == 0 || k > ranked.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside 1..={}",
            ranked.len()
        )));
    }
    Ok(AnalogySet {
        members: ranked[..k].to_vec(),
        source: SelectionSource::FixedK,
    })
}

/// Feature-space bisecting k-medoids tree of a training fold, reusable across
/// queries against that fold.
#[derive(Debug, Clone)]
pub struct KabeIndex {
    tree: ClusterTree,
    cfg: BkConfig,
}

impl KabeIndex {
    pub fn build(fold: &TrainingFold<'_>, cfg: &BkConfig) -> Result<Self> {
        if fold.len() < 2 {
            return Err(Error::TooFewProjects {
                needed: 2,
                got: fold.len(),
            });
        }
        let space = PointSpace::from_vectors(&fold.vectors)?;
        let all: Vec<usize> = (0..fold.len()).collect();
        let tree = bisect(&all, &space, cfg)?;
        Ok(KabeIndex { tree, cfg: *cfg })
    }

    pub fn tree(&self) -> &ClusterTree {
        &self.tree
    }

    /// k-ABE analogy selection for a normalized query. `exclude` removes one
    /// training position from every candidate set.
    pub fn select(
        &self,
        query: &[crate::corpus::Coord],
        fold: &TrainingFold<'_>,
        exclude: Option<usize>,
    ) -> Result<AnalogySet> {
        let ranked = rank_vector(query, fold, exclude)?;
        let nearest = ranked[0].index;
        let feature_leaf = leaf_of(&self.tree, nearest)?;

        let distances: Vec<f64> = ranked.iter().map(|n| n.distance).collect();
        let dist_cfg = BkConfig {
            seed: seed::derive(self.cfg.seed, streams::DISTANCE_TREE, 0),
            ..self.cfg
        };
        let dist_tree = bisect_scalar(&distances, &dist_cfg)?;
        // Position 0 of the ranking is the nearest neighbor.
        let near_leaf = leaf_of(&dist_tree, 0)?;

        let members = near_leaf
            .members
            .iter()
            .map(|&pos| ranked[pos])
            .filter(|n| feature_leaf.contains(n.index))
            .collect::<Vec<_>>();
        debug_assert!(members.first().is_some_and(|n| n.index == nearest));
        Ok(AnalogySet {
            members,
            source: SelectionSource::Kabe,
        })
    }
}

/// One-shot k-ABE selection: clusters the fold, then selects for `x`.
pub fn kabe_select(x: &Project, fold: &TrainingFold<'_>, cfg: &BkConfig) -> Result<AnalogySet> {
    KabeIndex::build(fold, cfg)?.select(&fold.normalize(x), fold, None)
}

/// A training fold bound to an analogy-selection strategy.
#[derive(Debug, Clone)]
pub struct Retriever<'a> {
    pub fold: TrainingFold<'a>,
    selector: Selector,
    index: Option<KabeIndex>,
}

impl<'a> Retriever<'a> {
    pub fn new(fold: TrainingFold<'a>, selector: Selector) -> Result<Self> {
        let index = match &selector {
            Selector::Kabe(cfg) => Some(KabeIndex::build(&fold, cfg)?),
            Selector::Fixed(_) => None,
        };
        Ok(Retriever {
            fold,
            selector,
            index,
        })
    }

    pub fn selector(&self) -> Selector {
        self.selector
    }

    pub fn kabe_index(&self) -> Option<&KabeIndex> {
        self.index.as_ref()
    }

    pub fn retrieve(&self, x: &Project) -> Result<AnalogySet> {
        self.retrieve_vector(&self.fold.normalize(x), None)
    }

    /// Selects analogies for training position `i` from the rest of the fold.
    pub fn retrieve_inner(&self, i: usize) -> Result<AnalogySet> {
        self.retrieve_vector(&self.fold.vectors[i], Some(i))
    }

    fn retrieve_vector(
        &self,
        query: &[crate::corpus::Coord],
        exclude: Option<usize>,
    ) -> Result<AnalogySet> {
        match (&self.selector, &self.index) {
            (Selector::Kabe(_), Some(index)) => index.select(query, &self.fold, exclude),
            (Selector::Fixed(k), _) => {
                let ranked = rank_vector(query, &self.fold, exclude)?;
                fixed_k_select(&ranked, (*k).min(ranked.len()))
            }
            (Selector::Kabe(_), None) => unreachable!("index built in Retriever::new"),
        }
    }
}

/// Arithmetic mean of the analogies' efforts.
pub fn estimate_mean(analogies: &AnalogySet, fold: &TrainingFold<'_>) -> Result<f64> {
    if analogies.is_empty() {
        return Err(Error::InvalidParameter("empty analogy set".into()));
    }
    Ok(analogies.indices().map(|i| fold.effort(i)).sum::<f64>() / analogies.len() as f64)
}

/// Counts how many queries selected each analogy-set size.
pub fn analogy_size_histogram(sizes: &[usize]) -> Result<BTreeMap<usize, usize>> {
    if sizes.is_empty() {
        return Err(Error::InvalidParameter("no analogy sizes recorded".into()));
    }
    let mut hist = BTreeMap::new();
    for &s in sizes {
        *hist.entry(s).or_insert(0) += 1;
    }
    Ok(hist)
}

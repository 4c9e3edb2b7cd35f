use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{loocv, Estimator};
use crate::corpus::{Dataset, FeatureMask};
use crate::{Error, Result};

/// Largest predictor count searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exhaustive,
    Forward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssResult {
    pub best_mask: FeatureMask,
    pub best_mmre: f64,
    /// LOOCV MMRE with every predictor.
    pub full_mmre: f64,
    pub mode: SearchMode,
    pub candidates_evaluated: usize,
}

fn score(
    dataset: &Dataset,
    est: &dyn Estimator,
    masks: &[FeatureMask],
    seed: u64,
) -> Result<Vec<f64>> {
    masks
        .par_iter()
        .map(|m| loocv(dataset, est, m, seed).map(|s| s.mmre))
        .collect()
}

/// Index of the lowest score; earlier candidates win ties.
fn argmin(scores: &[f64]) -> usize {
    (0..scores.len())
        .min_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)))
        .expect("non-empty candidates")
}

/// Feature subset selection by LOOCV MMRE: exhaustive over every non-empty
/// subset for at most [`EXHAUSTIVE_LIMIT`] predictors, greedy forward
/// selection beyond that. Ties go to the smaller, then lexicographically
/// first, subset.
pub fn fss_search(dataset: &Dataset, est: &dyn Estimator, seed: u64) -> Result<FssResult> {
    let m = dataset.feature_count();
    if m == 0 {
        return Err(Error::InvalidMask("dataset has no predictors".into()));
    }
    if m <= EXHAUSTIVE_LIMIT {
        let mut masks: Vec<FeatureMask> = (1u32..(1 << m))
            .map(|bits| {
                let idx = (0..m).filter(|i| bits >> i & 1 == 1).collect();
                FeatureMask::new(idx, m).expect("in range")
            })
            .collect();
        masks.sort_by(|a, b| {
            a.len()
                .cmp(&b.len())
                .then_with(|| a.indices().cmp(b.indices()))
        });
        let scores = score(dataset, est, &masks, seed)?;
        let best = argmin(&scores);
        let full = masks
            .iter()
            .position(|k| k.len() == m)
            .expect("full mask present");
        return Ok(FssResult {
            best_mask: masks[best].clone(),
            best_mmre: scores[best],
            full_mmre: scores[full],
            mode: SearchMode::Exhaustive,
            candidates_evaluated: masks.len(),
        });
    }

    let mut chosen: Vec<usize> = Vec::new();
    let mut best_mmre = f64::INFINITY;
    let mut evaluated = 0;
    loop {
        let masks: Vec<FeatureMask> = (0..m)
            .filter(|f| !chosen.contains(f))
            .map(|f| {
                let mut idx = chosen.clone();
                idx.push(f);
                FeatureMask::new(idx, m).expect("in range")
            })
            .collect();
        if masks.is_empty() {
            break;
        }
        let scores = score(dataset, est, &masks, seed)?;
        evaluated += masks.len();
        let i = argmin(&scores);
        if scores[i] < best_mmre {
            best_mmre = scores[i];
            chosen = masks[i].indices().to_vec();
        } else {
            break;
        }
    }
    let full_mmre = loocv(dataset, est, &FeatureMask::all(m), seed)?.mmre;
    Ok(FssResult {
        best_mask: FeatureMask::new(chosen, m)?,
        best_mmre,
        full_mmre,
        mode: SearchMode::Forward,
        candidates_evaluated: evaluated,
    })
}

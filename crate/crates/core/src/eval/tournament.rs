use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{wilcoxon_rank_sum, EvaluationSummary};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Mmre,
    Mdmre,
    Pred25,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Mmre, Measure::Mdmre, Measure::Pred25];

    pub fn of(self, s: &EvaluationSummary) -> f64 {
        match self {
            Measure::Mmre => s.mmre,
            Measure::Mdmre => s.mdmre,
            Measure::Pred25 => s.pred25,
        }
    }

    /// Whether `a` beats `b` on this measure.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Measure::Mmre | Measure::Mdmre => a < b,
            Measure::Pred25 => a > b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub win: usize,
    pub tie: usize,
    pub loss: usize,
}

impl Tally {
    pub fn total(&self) -> usize {
        self.win + self.tie + self.loss
    }

    pub fn net(&self) -> i64 {
        self.win as i64 - self.loss as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub dataset: String,
    pub a: String,
    pub b: String,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonOutcome {
    pub tallies: BTreeMap<String, Tally>,
    pub tests: Vec<PairTest>,
    pub measures: Vec<Measure>,
    pub datasets: Vec<String>,
}

impl ComparisonOutcome {
    /// Methods ordered by win minus loss, descending, then by name.
    pub fn ranked(&self) -> Vec<(&str, Tally)> {
        let mut rows: Vec<(&str, Tally)> =
            self.tallies.iter().map(|(m, t)| (m.as_str(), *t)).collect();
        rows.sort_by(|a, b| b.1.net().cmp(&a.1.net()).then_with(|| a.0.cmp(b.0)));
        rows
    }
}

/// Pairwise tournament. For each dataset and pair of methods the rank-sum
/// test on the MRE vectors decides once whether the pair differs; if it does
/// not, both tie on every measure, otherwise each measure awards a win and a
/// loss (equal measure values tie).
pub fn win_tie_loss(
    summaries: &[EvaluationSummary],
    measures: &[Measure],
) -> Result<ComparisonOutcome> {
    let mut by_dataset: BTreeMap<&str, BTreeMap<&str, &EvaluationSummary>> = BTreeMap::new();
    for s in summaries {
        if by_dataset
            .entry(&s.dataset)
            .or_default()
            .insert(&s.method, s)
            .is_some()
        {
            return Err(Error::MismatchedDatasets(format!(
                "duplicate summary for {} on {}",
                s.method, s.dataset
            )));
        }
    }
    let methods: BTreeSet<&str> = summaries.iter().map(|s| s.method.as_str()).collect();
    if methods.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two methods to compare".into(),
        ));
    }
    for (d, per) in &by_dataset {
        if per.len() != methods.len() {
            let missing: Vec<&str> = methods
                .iter()
                .filter(|m| !per.contains_key(*m))
                .copied()
                .collect();
            return Err(Error::MismatchedDatasets(format!(
                "{d} lacks {}",
                missing.join(", ")
            )));
        }
    }

    let mut tallies: BTreeMap<String, Tally> = methods
        .iter()
        .map(|m| (m.to_string(), Tally::default()))
        .collect();
    let mut tests = Vec::new();
    let names: Vec<&str> = methods.into_iter().collect();
    for (d, per) in &by_dataset {
        for (i, &a) in names.iter().enumerate() {
            for &b in &names[i + 1..] {
                let (sa, sb) = (per[a], per[b]);
                let w = wilcoxon_rank_sum(&sa.mres(), &sb.mres())?;
                tests.push(PairTest {
                    dataset: d.to_string(),
                    a: a.to_string(),
                    b: b.to_string(),
                    p_value: w.p_value,
                    significant: w.significant,
                });
                for &m in measures {
                    let (va, vb) = (m.of(sa), m.of(sb));
                    let (wa, wb) = if !w.significant || va == vb {
                        (0, 0)
                    } else if m.better(va, vb) {
                        (1, -1)
                    } else {
                        (-1, 1)
                    };
                    for (name, r) in [(a, wa), (b, wb)] {
                        let t = tallies.get_mut(name).expect("known method");
                        match r {
                            1 => t.win += 1,
                            -1 => t.loss += 1,
                            _ => t.tie += 1,
                        }
                    }
                }
            }
        }
    }
    Ok(ComparisonOutcome {
        tallies,
        tests,
        measures: measures.to_vec(),
        datasets: by_dataset.keys().map(|d| d.to_string()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::FoldResult;

    fn summary(method: &str, dataset: &str, mres: &[f64]) -> EvaluationSummary {
        let folds = mres
            .iter()
            .enumerate()
            .map(|(i, &m)| FoldResult {
                project_id: i.to_string(),
                actual: 1.0,
                predicted: 1.0 + m,
                residual: m,
                mre: m,
                analogy_size: None,
                flag: Default::default(),
            })
            .collect();
        EvaluationSummary::from_folds(method, dataset, folds).unwrap()
    }

    #[test]
    fn significant_better_method_wins_all() {
        let good: Vec<f64> = (0..10).map(|i| 0.01 * i as f64).collect();
        let bad: Vec<f64> = (0..10).map(|i| 1.0 + 0.1 * i as f64).collect();
        let out = win_tie_loss(
            &[summary("A", "d", &good), summary("B", "d", &bad)],
            &Measure::ALL,
        )
        .unwrap();
        assert_eq!(
            out.tallies["A"],
            Tally {
                win: 3,
                tie: 0,
                loss: 0
            }
        );
        assert_eq!(
            out.tallies["B"],
            Tally {
                win: 0,
                tie: 0,
                loss: 3
            }
        );
        assert_eq!(out.ranked()[0].0, "A");
    }

    #[test]
    fn indistinguishable_methods_tie() {
        let v = [0.1, 0.4, 0.2, 0.8, 0.3];
        let out = win_tie_loss(
            &[summary("A", "d", &v), summary("B", "d", &v)],
            &Measure::ALL,
        )
        .unwrap();
        assert_eq!(
            out.tallies["A"],
            Tally {
                win: 0,
                tie: 3,
                loss: 0
            }
        );
        assert_eq!(out.tallies["B"].tie, 3);
    }

    #[test]
    fn mismatched_datasets_rejected() {
        let v = [0.1, 0.4, 0.2];
        let r = win_tie_loss(
            &[summary("A", "d1", &v), summary("B", "d2", &v)],
            &Measure::ALL,
        );
        assert!(matches!(r, Err(Error::MismatchedDatasets(_))));
    }
}

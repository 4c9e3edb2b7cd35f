use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureKind, FeatureSchema, FeatureValue, Project};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticModel {
    /// Features uniform on [1, 10]; effort = 10 * sum of features.
    Linear,
    /// Two blobs of radius 1 whose centres are 10 apart; efforts drawn from
    /// disjoint ranges per blob.
    TwoBlob,
    /// Features and effort independent uniform noise.
    Noise,
}

impl std::str::FromStr for SyntheticModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(SyntheticModel::Linear),
            "two-blob" => Ok(SyntheticModel::TwoBlob),
            "noise" => Ok(SyntheticModel::Noise),
            other => Err(Error::InvalidParameter(format!(
                "unknown synthetic model `{other}`"
            ))),
        }
    }
}

pub const LINEAR_COEFFICIENT: f64 = 10.0;
pub const BLOB_RADIUS: f64 = 1.0;

/// Deterministic synthetic dataset with `n` projects and `m` numeric features.
pub fn generate_synthetic(
    seed_value: u64,
    n: usize,
    m: usize,
    model: SyntheticModel,
) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::TooFewProjects { needed: 2, got: n });
    }
    if m < 1 {
        return Err(Error::InvalidParameter("need at least one feature".into()));
    }
    let mut rng = seed::rng(seed_value);
    let per_axis = BLOB_RADIUS / (m as f64).sqrt();
    let offset = 10.0 * BLOB_RADIUS / (m as f64).sqrt();
    let projects = (0..n)
        .map(|i| {
            let (features, effort): (Vec<f64>, f64) = match model {
                SyntheticModel::Linear => {
                    let f: Vec<f64> = (0..m).map(|_| rng.random_range(1.0..=10.0)).collect();
                    let e = LINEAR_COEFFICIENT * f.iter().sum::<f64>();
                    (f, e)
                }
                SyntheticModel::TwoBlob => {
                    let second = i >= n / 2;
                    let centre = if second { offset } else { 0.0 };
                    let f = (0..m)
                        .map(|_| centre + rng.random_range(-per_axis..=per_axis))
                        .collect();
                    let e = if second {
                        rng.random_range(100.0..=200.0)
                    } else {
                        rng.random_range(10.0..=20.0)
                    };
                    (f, e)
                }
                SyntheticModel::Noise => {
                    let f = (0..m).map(|_| rng.random_range(0.0..=1.0)).collect();
                    (f, rng.random_range(1.0..=100.0))
                }
            };
            Project {
                id: (i + 1).to_string(),
                features: features.into_iter().map(FeatureValue::Numeric).collect(),
                effort,
            }
        })
        .collect();
    let schema = (0..m)
        .map(|index| FeatureSchema {
            name: format!("f{}", index + 1),
            kind: FeatureKind::Numeric,
            index,
            levels: vec![],
        })
        .collect();
    let name = match model {
        SyntheticModel::Linear => "synthetic-linear",
        SyntheticModel::TwoBlob => "synthetic-two-blob",
        SyntheticModel::Noise => "synthetic-noise",
    };
    Dataset::new(name, schema, "Effort", "hours", projects)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(7, 10, 2, SyntheticModel::Linear).unwrap();
        let b = generate_synthetic(7, 10, 2, SyntheticModel::Linear).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(8, 10, 2, SyntheticModel::Linear).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn linear_effort_is_exact() {
        let d = generate_synthetic(1, 20, 3, SyntheticModel::Linear).unwrap();
        for p in &d.projects {
            let s: f64 = p.features.iter().filter_map(|f| f.as_numeric()).sum();
            assert!((p.effort - 10.0 * s).abs() < 1e-9);
        }
    }

    #[test]
    fn n_below_two_rejected() {
        assert!(matches!(
            generate_synthetic(1, 1, 2, SyntheticModel::Noise),
            Err(Error::TooFewProjects { .. })
        ));
    }
}

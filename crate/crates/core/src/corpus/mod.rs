//! Dataset model, ingestion, descriptive statistics, normalization and the
//! project distance.

mod load;
mod synthetic;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use load::{bundled, bundled_names, load_dataset, parse_csv, LoadOptions, LoadReport};
pub use synthetic::{generate_synthetic, SyntheticModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

/// One predictor column. Categorical columns carry their level names; the
/// codes stored in [`FeatureValue::Categorical`] index into `levels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub name: String,
    pub kind: FeatureKind,
    pub index: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeatureValue {
    Numeric(f64),
    Categorical(u32),
}

impl FeatureValue {
    pub fn as_numeric(&self) -> Option<f64> {
        match *self {
            FeatureValue::Numeric(v) => Some(v),
            FeatureValue::Categorical(_) => None,
        }
    }

    pub fn as_level(&self) -> Option<u32> {
        match *self {
            FeatureValue::Categorical(c) => Some(c),
            FeatureValue::Numeric(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub features: Vec<FeatureValue>,
    pub effort: f64,
}

/// A named collection of projects. `schema` lists the predictor columns only;
/// the effort column is always numeric and is named by `effort_column`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub schema: Vec<FeatureSchema>,
    pub effort_column: String,
    pub effort_unit: String,
    pub projects: Vec<Project>,
}

impl Dataset {
    /// Builds a dataset, checking that every project conforms to `schema`.
    pub fn new(
        name: impl Into<String>,
        schema: Vec<FeatureSchema>,
        effort_column: impl Into<String>,
        effort_unit: impl Into<String>,
        projects: Vec<Project>,
    ) -> Result<Self> {
        for (i, s) in schema.iter().enumerate() {
            if s.index != i {
                return Err(Error::InvalidParameter(format!(
                    "schema index {} at position {i}",
                    s.index
                )));
            }
            if schema[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate column name `{}`",
                    s.name
                )));
            }
        }
        for (row, p) in projects.iter().enumerate() {
            if p.effort <= 0.0 || !p.effort.is_finite() {
                return Err(Error::NonPositiveEffort {
                    row,
                    value: p.effort,
                });
            }
            if p.features.len() != schema.len() {
                return Err(Error::LengthMismatch {
                    left: p.features.len(),
                    right: schema.len(),
                });
            }
            for (v, s) in p.features.iter().zip(&schema) {
                let ok = match (v, s.kind) {
                    (FeatureValue::Numeric(x), FeatureKind::Numeric) => x.is_finite(),
                    (FeatureValue::Categorical(c), FeatureKind::Categorical) => {
                        (*c as usize) < s.levels.len()
                    }
                    _ => false,
                };
                if !ok {
                    return Err(Error::InvalidParameter(format!(
                        "project {} does not conform to column `{}`",
                        p.id, s.name
                    )));
                }
            }
        }
        Ok(Dataset {
            name: name.into(),
            schema,
            effort_column: effort_column.into(),
            effort_unit: effort_unit.into(),
            projects,
        })
    }

    pub fn len(&self) -> usize {
        self.projects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projects.is_empty()
    }

    /// Number of predictor features (excludes effort).
    pub fn feature_count(&self) -> usize {
        self.schema.len()
    }

    /// Number of columns including effort, as reported in dataset tables.
    pub fn column_count(&self) -> usize {
        self.schema.len() + 1
    }

    pub fn efforts(&self) -> Vec<f64> {
        self.projects.iter().map(|p| p.effort).collect()
    }

    pub fn full_mask(&self) -> FeatureMask {
        FeatureMask::all(self.schema.len())
    }

    pub fn column(&self, name: &str) -> Option<&FeatureSchema> {
        self.schema.iter().find(|s| s.name == name)
    }

    /// A copy restricted to the projects at `indices` (schema unchanged).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            projects: indices.iter().map(|&i| self.projects[i].clone()).collect(),
            ..self.clone()
        }
    }

    pub fn describe(&self) -> Result<DatasetStats> {
        describe(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub size: usize,
    pub feature_count: usize,
    pub effort_min: f64,
    pub effort_max: f64,
    pub effort_mean: f64,
    pub effort_median: f64,
    pub effort_skewness: f64,
}

/// Effort summary statistics. Skewness is the moment coefficient
/// `m3 / m2^1.5`; a sample with zero spread reports 0.
pub fn describe(d: &Dataset) -> Result<DatasetStats> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let e = d.efforts();
    let n = e.len() as f64;
    let mean = e.iter().sum::<f64>() / n;
    let min = e.iter().copied().fold(f64::INFINITY, f64::min);
    let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DatasetStats {
        size: d.len(),
        feature_count: d.column_count(),
        effort_min: min,
        effort_max: max,
        effort_mean: mean,
        effort_median: median(&e),
        effort_skewness: skewness(&e),
    })
}

/// Median with midpoint averaging for even lengths. Panics on empty input.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn skewness(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    if m2 <= f64::EPSILON * mean.abs().max(1.0) {
        return 0.0;
    }
    m3 / m2.powf(1.5)
}

/// Ordered, non-empty subset of predictor indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureMask(Vec<usize>);

impl FeatureMask {
    pub fn new(mut indices: Vec<usize>, feature_count: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidMask("mask is empty".into()));
        }
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i >= feature_count) {
            return Err(Error::InvalidMask(format!(
                "index {bad} out of range for {feature_count} features"
            )));
        }
        Ok(FeatureMask(indices))
    }

    /// All predictors. Panics when `feature_count` is zero.
    pub fn all(feature_count: usize) -> Self {
        assert!(feature_count > 0, "dataset has no predictor features");
        FeatureMask((0..feature_count).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }
}

/// A coordinate in normalized feature space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Coord {
    Num(f64),
    Cat(u32),
}

impl Coord {
    /// Signed difference for numeric coordinates, 0/1 mismatch for
    /// categorical ones.
    #[inline]
    pub fn diff(self, other: Coord) -> f64 {
        match (self, other) {
            (Coord::Num(a), Coord::Num(b)) => a - b,
            (Coord::Cat(a), Coord::Cat(b)) => f64::from(u8::from(a != b)),
            _ => 1.0,
        }
    }
}

pub type NormVector = Vec<Coord>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

/// Per-feature min/max fitted on a training fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationModel {
    mask: FeatureMask,
    /// Aligned with `mask`; `None` for categorical features.
    ranges: Vec<Option<Range>>,
}

pub fn fit_normalizer<'a, I>(
    train: I,
    schema: &[FeatureSchema],
    mask: &FeatureMask,
) -> Result<NormalizationModel>
where
    I: IntoIterator<Item = &'a Project>,
{
    if mask.is_empty() {
        return Err(Error::InvalidMask("mask is empty".into()));
    }
    if let Some(&bad) = mask.indices().iter().find(|&&i| i >= schema.len()) {
        return Err(Error::InvalidMask(format!("index {bad} outside schema")));
    }
    let mut ranges: Vec<Option<Range>> = mask
        .indices()
        .iter()
        .map(|&j| match schema[j].kind {
            FeatureKind::Numeric => Some(Range {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            }),
            FeatureKind::Categorical => None,
        })
        .collect();
    let mut seen = 0usize;
    for p in train {
        seen += 1;
        for (slot, &j) in ranges.iter_mut().zip(mask.indices()) {
            if let (Some(r), Some(v)) = (slot.as_mut(), p.features[j].as_numeric()) {
                r.min = r.min.min(v);
                r.max = r.max.max(v);
            }
        }
    }
    if seen == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(NormalizationModel {
        mask: mask.clone(),
        ranges,
    })
}

impl NormalizationModel {
    pub fn mask(&self) -> &FeatureMask {
        &self.mask
    }

    pub fn ranges(&self) -> &[Option<Range>] {
        &self.ranges
    }

    /// Min-max scales numeric features into [0, 1] (clamping values outside
    /// the fitted range); constant features map to 0. Categorical codes pass
    /// through unchanged.
    pub fn normalize(&self, p: &Project) -> NormVector {
        self.mask
            .indices()
            .iter()
            .zip(&self.ranges)
            .map(|(&j, range)| match (p.features[j], range) {
                (FeatureValue::Numeric(v), Some(r)) => Coord::Num(scale(v, *r)),
                (FeatureValue::Categorical(c), _) => Coord::Cat(c),
                (FeatureValue::Numeric(_), None) => Coord::Num(0.0),
            })
            .collect()
    }
}

fn scale(v: f64, r: Range) -> f64 {
    let width = r.max - r.min;
    if width <= 0.0 {
        return 0.0;
    }
    ((v - r.min) / width).clamp(0.0, 1.0)
}

/// Plain squared Euclidean norm of `a - b` (categorical mismatch adds 1).
#[inline]
pub fn squared_norm(a: &[Coord], b: &[Coord]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x.diff(y).powi(2)).sum()
}

/// Project distance `(1/m) * sqrt(sum of squared differences)`, with the
/// scale factor outside the root.
pub fn distance(a: &[Coord], b: &[Coord]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidParameter(
            "distance over zero features".into(),
        ));
    }
    Ok(scaled_distance(squared_norm(a, b), a.len()))
}

#[inline]
pub(crate) fn scaled_distance(squared: f64, m: usize) -> f64 {
    squared.sqrt() / m as f64
}

/// Similarity degree `1 - d` for a distance already normalized into [0, 1].
pub fn similarity(normalized_distance: f64) -> f64 {
    (1.0 - normalized_distance).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num_schema(m: usize) -> Vec<FeatureSchema> {
        (0..m)
            .map(|i| FeatureSchema {
                name: format!("f{i}"),
                kind: FeatureKind::Numeric,
                index: i,
                levels: vec![],
            })
            .collect()
    }

    fn project(vals: &[f64], effort: f64) -> Project {
        Project {
            id: String::new(),
            features: vals.iter().map(|&v| FeatureValue::Numeric(v)).collect(),
            effort,
        }
    }

    #[test]
    fn describe_single_and_symmetric() {
        let d = Dataset::new(
            "one",
            num_schema(1),
            "Effort",
            "hours",
            vec![project(&[1.0], 10.0)],
        )
        .unwrap();
        let s = d.describe().unwrap();
        assert_eq!(
            (s.effort_min, s.effort_max, s.effort_mean, s.effort_median),
            (10.0, 10.0, 10.0, 10.0)
        );
        assert_eq!(s.effort_skewness, 0.0);

        let d = Dataset::new(
            "three",
            num_schema(1),
            "Effort",
            "hours",
            vec![
                project(&[1.0], 1.0),
                project(&[1.0], 2.0),
                project(&[1.0], 3.0),
            ],
        )
        .unwrap();
        let s = d.describe().unwrap();
        assert_eq!(s.effort_mean, 2.0);
        assert_eq!(s.effort_median, 2.0);
        assert_eq!(s.effort_skewness, 0.0);
    }

    #[test]
    fn describe_empty_is_error() {
        let d = Dataset::new("none", num_schema(1), "Effort", "hours", vec![]).unwrap();
        assert!(matches!(d.describe(), Err(Error::EmptyDataset)));
    }

    #[test]
    fn normalizer_ranges_and_clamping() {
        let schema = num_schema(1);
        let train = [
            project(&[10.0], 1.0),
            project(&[20.0], 1.0),
            project(&[15.0], 1.0),
        ];
        let mask = FeatureMask::all(1);
        let nm = fit_normalizer(&train, &schema, &mask).unwrap();
        assert_eq!(
            nm.ranges()[0],
            Some(Range {
                min: 10.0,
                max: 20.0
            })
        );
        assert_eq!(nm.normalize(&project(&[15.0], 1.0)), vec![Coord::Num(0.5)]);
        assert_eq!(nm.normalize(&project(&[25.0], 1.0)), vec![Coord::Num(1.0)]);
        assert_eq!(nm.normalize(&project(&[-5.0], 1.0)), vec![Coord::Num(0.0)]);
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let schema = num_schema(1);
        let train = [
            project(&[5.0], 1.0),
            project(&[5.0], 1.0),
            project(&[5.0], 1.0),
        ];
        let nm = fit_normalizer(&train, &schema, &FeatureMask::all(1)).unwrap();
        assert_eq!(nm.ranges()[0], Some(Range { min: 5.0, max: 5.0 }));
        assert_eq!(nm.normalize(&project(&[123.0], 1.0)), vec![Coord::Num(0.0)]);
    }

    #[test]
    fn empty_mask_rejected() {
        assert!(matches!(
            FeatureMask::new(vec![], 3),
            Err(Error::InvalidMask(_))
        ));
        assert!(matches!(
            FeatureMask::new(vec![3], 3),
            Err(Error::InvalidMask(_))
        ));
    }

    #[test]
    fn distance_hand_values() {
        let a = vec![Coord::Num(0.0), Coord::Num(0.0)];
        let b = vec![Coord::Num(0.3), Coord::Num(0.4)];
        assert!((distance(&a, &b).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(distance(&a, &a).unwrap(), 0.0);

        let x = vec![
            Coord::Num(0.2),
            Coord::Cat(1),
            Coord::Num(0.7),
            Coord::Cat(0),
        ];
        let mut y = x.clone();
        y[3] = Coord::Cat(2);
        assert!((distance(&x, &y).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn distance_length_mismatch() {
        let a = vec![Coord::Num(0.0)];
        let b = vec![Coord::Num(0.0), Coord::Num(1.0)];
        assert!(matches!(
            distance(&a, &b),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn similarity_linear() {
        assert_eq!(similarity(0.0), 1.0);
        assert_eq!(similarity(1.0), 0.0);
        assert_eq!(similarity(0.25), 0.75);
    }
}

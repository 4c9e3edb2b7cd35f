#![allow(dead_code)]

use kabe::{Dataset, FeatureKind, FeatureSchema, FeatureValue, Project};

pub fn numeric_schema(m: usize) -> Vec<FeatureSchema> {
    (0..m)
        .map(|index| FeatureSchema {
            name: format!("f{index}"),
            kind: FeatureKind::Numeric,
            index,
            levels: vec![],
        })
        .collect()
}

pub fn numeric_dataset(rows: &[(Vec<f64>, f64)]) -> Dataset {
    let m = rows.first().map_or(0, |r| r.0.len());
    let projects = rows
        .iter()
        .enumerate()
        .map(|(i, (f, e))| Project {
            id: format!("p{i}"),
            features: f.iter().map(|&v| FeatureValue::Numeric(v)).collect(),
            effort: *e,
        })
        .collect();
    Dataset::new("generated", numeric_schema(m), "Effort", "hours", projects).unwrap()
}

/// Numeric features plus one categorical column with `levels` levels.
pub fn mixed_dataset(rows: &[(Vec<f64>, u32, f64)], levels: u32) -> Dataset {
    let m = rows.first().map_or(0, |r| r.0.len());
    let mut schema = numeric_schema(m);
    schema.push(FeatureSchema {
        name: "cat".into(),
        kind: FeatureKind::Categorical,
        index: m,
        levels: (0..levels).map(|l| format!("L{l}")).collect(),
    });
    let projects = rows
        .iter()
        .enumerate()
        .map(|(i, (f, c, e))| {
            let mut features: Vec<FeatureValue> =
                f.iter().map(|&v| FeatureValue::Numeric(v)).collect();
            features.push(FeatureValue::Categorical(*c));
            Project {
                id: format!("p{i}"),
                features,
                effort: *e,
            }
        })
        .collect();
    Dataset::new("mixed", schema, "Effort", "hours", projects).unwrap()
}

/// All projects except position `i`.
pub fn fold(d: &Dataset, i: usize) -> Vec<&Project> {
    d.projects
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, p)| p)
        .collect()
}

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureKind, FeatureSchema, FeatureValue, Project};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_loaded: usize,
    pub rows_dropped: usize,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Effort column name, matched case-insensitively.
    pub effort_column: String,
    /// Dataset name; defaults to the file stem.
    pub name: Option<String>,
    pub effort_unit: Option<String>,
    /// Column holding project identifiers. It is excluded from the
    /// predictors; without it projects are named by their 1-based row.
    pub id_column: Option<String>,
    /// Explicit sidecar schema path; `<stem>.schema.json` next to the CSV is
    /// used when present and this is `None`.
    pub schema_path: Option<PathBuf>,
    /// Column kind overrides, applied on top of the sidecar.
    pub kinds: BTreeMap<String, FeatureKind>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            effort_column: "Effort".into(),
            name: None,
            effort_unit: None,
            id_column: None,
            schema_path: None,
            kinds: BTreeMap::new(),
        }
    }
}

impl LoadOptions {
    pub fn with_effort_column(effort_column: impl Into<String>) -> Self {
        LoadOptions {
            effort_column: effort_column.into(),
            ..Default::default()
        }
    }
}

/// Loads a comma-separated file with a header row.
pub fn load_dataset(path: &Path, opts: &LoadOptions) -> Result<(Dataset, LoadReport)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut opts = opts.clone();
    if opts.name.is_none() {
        opts.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    let sidecar = match &opts.schema_path {
        Some(p) => Some(p.clone()),
        None => {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let candidate = path.with_file_name(format!("{stem}.schema.json"));
            candidate.exists().then_some(candidate)
        }
    };
    if let Some(sc) = sidecar {
        let raw = std::fs::read_to_string(&sc).map_err(|source| Error::Io {
            path: sc.clone(),
            source,
        })?;
        let mut kinds = parse_sidecar(&raw)?;
        kinds.extend(opts.kinds);
        opts.kinds = kinds;
    }
    parse_csv(text.as_bytes(), &opts)
}

/// Parses a sidecar schema `{ "column": "numeric" | "categorical" }`.
pub fn parse_sidecar(raw: &str) -> Result<BTreeMap<String, FeatureKind>> {
    serde_json::from_str(raw).map_err(|e| Error::Schema(e.to_string()))
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty()
        || f == "?"
        || ["na", "n/a", "nan", "null"]
            .iter()
            .any(|m| f.eq_ignore_ascii_case(m))
}

/// Parses CSV text into a dataset. Rows with a missing value in any used
/// column are dropped and counted in the report.
pub fn parse_csv<R: Read>(reader: R, opts: &LoadOptions) -> Result<(Dataset, LoadReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let effort_idx = find(&opts.effort_column)
        .ok_or_else(|| Error::MissingEffortColumn(opts.effort_column.clone()))?;
    let id_idx = match &opts.id_column {
        Some(c) => {
            Some(find(c).ok_or_else(|| Error::Schema(format!("id column `{c}` not found")))?)
        }
        None => None,
    };
    for (col, kind) in &opts.kinds {
        let idx = find(col)
            .ok_or_else(|| Error::Schema(format!("schema names unknown column `{col}`")))?;
        if idx == effort_idx && *kind != FeatureKind::Numeric {
            return Err(Error::Schema("effort column must be numeric".into()));
        }
    }
    let predictor_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != effort_idx && Some(c) != id_idx)
        .collect();

    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    let mut dropped = 0usize;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let fields: Vec<String> = rec.iter().map(str::to_string).collect();
        let used_missing = fields.len() < headers.len()
            || predictor_cols
                .iter()
                .chain(std::iter::once(&effort_idx))
                .any(|&c| is_missing(&fields[c]));
        if used_missing {
            dropped += 1;
            continue;
        }
        rows.push((row + 1, fields));
    }
    if rows.is_empty() {
        return Err(Error::NoUsableRows);
    }

    let mut schema = Vec::with_capacity(predictor_cols.len());
    for (index, &c) in predictor_cols.iter().enumerate() {
        let name = headers[c].clone();
        let inferred = if rows
            .iter()
            .all(|(_, f)| f[c].parse::<f64>().is_ok_and(f64::is_finite))
        {
            FeatureKind::Numeric
        } else {
            FeatureKind::Categorical
        };
        let kind = opts
            .kinds
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(&name))
            .map(|(_, v)| *v)
            .unwrap_or(inferred);
        if kind == FeatureKind::Numeric && inferred != FeatureKind::Numeric {
            return Err(Error::Schema(format!(
                "column `{name}` declared numeric but holds non-numeric values"
            )));
        }
        let levels = match kind {
            FeatureKind::Numeric => vec![],
            FeatureKind::Categorical => rows
                .iter()
                .map(|(_, f)| f[c].clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        };
        schema.push(FeatureSchema {
            name,
            kind,
            index,
            levels,
        });
    }

    let mut projects = Vec::with_capacity(rows.len());
    for (row, fields) in &rows {
        let raw = &fields[effort_idx];
        let effort: f64 = raw
            .parse()
            .map_err(|_| Error::Schema(format!("non-numeric effort `{raw}` in row {row}")))?;
        if effort <= 0.0 || !effort.is_finite() {
            return Err(Error::NonPositiveEffort {
                row: *row,
                value: effort,
            });
        }
        let features = predictor_cols
            .iter()
            .zip(&schema)
            .map(|(&c, s)| match s.kind {
                FeatureKind::Numeric => {
                    FeatureValue::Numeric(fields[c].parse().unwrap_or(f64::NAN))
                }
                FeatureKind::Categorical => {
                    let code = s.levels.binary_search(&fields[c]).unwrap_or_default();
                    FeatureValue::Categorical(code as u32)
                }
            })
            .collect();
        let id = id_idx
            .map(|c| fields[c].clone())
            .unwrap_or_else(|| row.to_string());
        projects.push(Project {
            id,
            features,
            effort,
        });
    }

    let dataset = Dataset::new(
        opts.name.clone().unwrap_or_else(|| "dataset".into()),
        schema,
        headers[effort_idx].clone(),
        opts.effort_unit.clone().unwrap_or_else(|| "hours".into()),
        projects,
    )?;
    let report = LoadReport {
        rows_loaded: dataset.len(),
        rows_dropped: dropped,
    };
    Ok((dataset, report))
}

struct Bundled {
    name: &'static str,
    csv: &'static str,
    schema: Option<&'static str>,
    unit: &'static str,
}

const BUNDLED: &[Bundled] = &[
    Bundled {
        name: "albrecht",
        csv: include_str!("../../data/albrecht.csv"),
        schema: None,
        unit: "months",
    },
    Bundled {
        name: "kemerer",
        csv: include_str!("../../data/kemerer.csv"),
        schema: Some(include_str!("../../data/kemerer.schema.json")),
        unit: "months",
    },
    Bundled {
        name: "nasa",
        csv: include_str!("../../data/nasa.csv"),
        schema: None,
        unit: "months",
    },
];

/// Names of the datasets compiled into the library.
pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|b| b.name).collect()
}

/// Loads a bundled dataset by (case-insensitive) name.
pub fn bundled(name: &str) -> Option<Result<(Dataset, LoadReport)>> {
    let b = BUNDLED.iter().find(|b| b.name.eq_ignore_ascii_case(name))?;
    Some((|| {
        let kinds = match b.schema {
            Some(s) => parse_sidecar(s)?,
            None => BTreeMap::new(),
        };
        let opts = LoadOptions {
            name: Some(b.name.to_string()),
            effort_unit: Some(b.unit.to_string()),
            kinds,
            ..Default::default()
        };
        parse_csv(b.csv.as_bytes(), &opts)
    })())
}

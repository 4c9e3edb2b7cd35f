use std::path::{Path, PathBuf};

use kabe::corpus::{
    bundled, generate_synthetic, load_dataset, LoadOptions, LoadReport, SyntheticModel,
};
use kabe::{Dataset, FeatureKind, FeatureSchema, FeatureValue, Project};

use crate::Failure;

/// Path of the ISBSG extract, which cannot be bundled.
pub const ISBSG_ENV: &str = "KABE_ISBSG";
/// Directory searched for `<name>.csv` when a name is not bundled.
pub const DATA_DIR_ENV: &str = "KABE_DATA_DIR";

/// Resolves a dataset reference: a bundled name, `isbsg`, a synthetic spec
/// (`synthetic:<model>:<n>:<m>[:<seed>]`), a file in the data directory or a
/// CSV path.
pub fn resolve(spec: &str) -> Result<Dataset, Failure> {
    resolve_with_report(spec).map(|(d, _)| d)
}

/// As [`resolve`], also returning how many rows were loaded and dropped.
pub fn resolve_with_report(spec: &str) -> Result<(Dataset, LoadReport), Failure> {
    let fail = |e: String| Failure::config(format!("dataset `{spec}`: {e}"));
    if let Some(rest) = spec.strip_prefix("synthetic:") {
        let mut d = synthetic(rest).map_err(fail)?;
        d.name = spec.to_string();
        let report = LoadReport {
            rows_loaded: d.len(),
            rows_dropped: 0,
        };
        return Ok((d, report));
    }
    if let Some(found) = bundled(spec) {
        return found.map_err(|e| fail(e.to_string()));
    }
    let path = locate(spec)?;
    load_dataset(&path, &LoadOptions::default()).map_err(|e| fail(e.to_string()))
}

fn locate(spec: &str) -> Result<PathBuf, Failure> {
    if spec.eq_ignore_ascii_case("isbsg") {
        return match std::env::var_os(ISBSG_ENV) {
            Some(p) => Ok(PathBuf::from(p)),
            None => Err(Failure::config(format!(
                "dataset `isbsg` requires {ISBSG_ENV} to name the data file"
            ))),
        };
    }
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        let candidate = Path::new(&dir).join(format!("{spec}.csv"));
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    let path = PathBuf::from(spec);
    if path.is_file() {
        Ok(path)
    } else {
        Err(Failure::config(format!(
            "dataset `{spec}` is neither bundled nor an existing file"
        )))
    }
}

fn synthetic(rest: &str) -> Result<Dataset, String> {
    let parts: Vec<&str> = rest.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err("expected synthetic:<model>:<n>:<m>[:<seed>]".into());
    }
    let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| format!("bad {what} `{s}`"));
    let n = num(parts[1], "size")?;
    let m = num(parts[2], "feature count")?;
    let seed = parts.get(3).map_or(Ok(0), |s| {
        s.parse::<u64>().map_err(|_| format!("bad seed `{s}`"))
    })?;
    if parts[0] == "identical" {
        return identical(n, m).map_err(|e| e.to_string());
    }
    let model: SyntheticModel = parts[0].parse().map_err(|e: kabe::Error| e.to_string())?;
    generate_synthetic(seed, n, m, model).map_err(|e| e.to_string())
}

/// `n` projects sharing one feature vector.
fn identical(n: usize, m: usize) -> kabe::Result<Dataset> {
    let schema = (0..m)
        .map(|index| FeatureSchema {
            name: format!("f{index}"),
            kind: FeatureKind::Numeric,
            index,
            levels: vec![],
        })
        .collect();
    let projects = (0..n)
        .map(|i| Project {
            id: (i + 1).to_string(),
            features: vec![FeatureValue::Numeric(1.0); m],
            effort: 10.0 + i as f64,
        })
        .collect();
    Dataset::new("identical", schema, "Effort", "hours", projects)
}

//! ISOLET spoken-letter data: comma-delimited text, 617 acoustic features
//! per row with the class label (1..26) as the final field. Features are
//! already normalized at the source and are passed through unchanged.

use std::fs;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hd::Sample;

const CLASSES: usize = 26;

fn load_err(path: &Path, detail: String) -> Error {
    Error::Load {
        path: path.display().to_string(),
        detail,
    }
}

/// Parse one comma-delimited split file. Labels move from 1-based to
/// 0-based; every row must carry the same feature count.
pub fn read_split(path: &Path) -> Result<Vec<Sample>> {
    let text = fs::read_to_string(path).map_err(|e| load_err(path, e.to_string()))?;
    let mut samples = Vec::new();
    let mut feature_dim = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim().trim_end_matches('.');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(load_err(
                path,
                format!("line {}: expected features and a label", lineno + 1),
            ));
        }
        let (label_field, feature_fields) = fields.split_last().unwrap();
        let raw_label: f64 = label_field.parse().map_err(|_| {
            load_err(
                path,
                format!("line {}: unparsable label {label_field:?}", lineno + 1),
            )
        })?;
        let label = raw_label as usize;
        if raw_label.fract() != 0.0 || !(1..=CLASSES).contains(&label) {
            return Err(load_err(
                path,
                format!(
                    "line {}: label {raw_label} outside 1..={CLASSES}",
                    lineno + 1
                ),
            ));
        }
        match feature_dim {
            None => feature_dim = Some(feature_fields.len()),
            Some(d) if d != feature_fields.len() => {
                return Err(load_err(
                    path,
                    format!(
                        "line {}: {} features, previous rows had {d}",
                        lineno + 1,
                        feature_fields.len()
                    ),
                ));
            }
            _ => {}
        }
        let features = feature_fields
            .iter()
            .enumerate()
            .map(|(i, f)| {
                f.parse::<f64>().map_err(|_| {
                    load_err(
                        path,
                        format!("line {}: unparsable feature {i}: {f:?}", lineno + 1),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        samples.push(Sample::new(features, label - 1));
    }
    if samples.is_empty() {
        return Err(load_err(path, "no samples found".into()));
    }
    Ok(samples)
}

/// Load the standard layout from `dir`: training rows in
/// `isolet1+2+3+4.data`, held-out speakers in `isolet5.data`.
pub fn load_isolet(dir: &Path) -> Result<Dataset> {
    let train = read_split(&dir.join("isolet1+2+3+4.data"))?;
    let test = read_split(&dir.join("isolet5.data"))?;
    let feature_dim = train[0].features.len();
    if test[0].features.len() != feature_dim {
        return Err(load_err(
            &dir.join("isolet5.data"),
            format!(
                "test rows have {} features but training rows have {feature_dim}",
                test[0].features.len()
            ),
        ));
    }
    let dataset = Dataset {
        name: format!("isolet ({})", dir.display()),
        train,
        test,
        feature_dim,
        class_count: CLASSES,
    };
    dataset.validate()?;
    Ok(dataset)
}

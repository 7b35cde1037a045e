//! UCI smartphone activity recognition data: whitespace-delimited feature
//! matrices (`X_*.txt`) with one activity label (1..6) per row (`y_*.txt`).
//! Features are z-scored per column with statistics taken from the training
//! split only, and the same statistics are applied to the test split.

use std::fs;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hd::Sample;

const CLASSES: usize = 6;

fn load_err(path: &Path, detail: String) -> Error {
    Error::Load {
        path: path.display().to_string(),
        detail,
    }
}

fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| load_err(path, e.to_string()))?;
    let mut rows = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .enumerate()
            .map(|(i, f)| {
                f.parse::<f64>().map_err(|_| {
                    load_err(
                        path,
                        format!("line {}: unparsable value in column {i}: {f:?}", lineno + 1),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(load_err(
                    path,
                    format!("line {}: {} columns, previous rows had {w}", lineno + 1, row.len()),
                ));
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(load_err(path, "no rows found".into()));
    }
    Ok(rows)
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| load_err(path, e.to_string()))?;
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let raw: usize = line.parse().map_err(|_| {
            load_err(path, format!("line {}: unparsable label {line:?}", lineno + 1))
        })?;
        if !(1..=CLASSES).contains(&raw) {
            return Err(load_err(
                path,
                format!("line {}: label {raw} outside 1..={CLASSES}", lineno + 1),
            ));
        }
        labels.push(raw - 1);
    }
    if labels.is_empty() {
        return Err(load_err(path, "no labels found".into()));
    }
    Ok(labels)
}

/// Per-column mean and standard deviation of the training matrix.
#[derive(Debug, Clone)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureStats {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len() as f64;
        let width = rows[0].len();
        let mut mean = vec![0.0; width];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; width];
        for row in rows {
            for ((v, m), x) in var.iter_mut().zip(&mean).zip(row) {
                let d = x - m;
                *v += d * d;
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        FeatureStats { mean, std }
    }

    /// z = (x - mean) / std; columns with zero spread map to 0.
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| if *s > 0.0 { (x - m) / s } else { 0.0 })
            .collect()
    }
}

fn pair(rows: Vec<Vec<f64>>, labels: Vec<usize>, stats: &FeatureStats, path: &Path) -> Result<Vec<Sample>> {
    if rows.len() != labels.len() {
        return Err(load_err(
            path,
            format!("{} labels but {} feature rows", labels.len(), rows.len()),
        ));
    }
    Ok(rows
        .into_iter()
        .zip(labels)
        .map(|(row, label)| Sample::new(stats.apply(&row), label))
        .collect())
}

/// Load the standard layout from `dir`: `train/X_train.txt`,
/// `train/y_train.txt`, `test/X_test.txt`, `test/y_test.txt`.
pub fn load_har(dir: &Path) -> Result<Dataset> {
    let train_rows = read_matrix(&dir.join("train").join("X_train.txt"))?;
    let train_labels = read_labels(&dir.join("train").join("y_train.txt"))?;
    let test_rows = read_matrix(&dir.join("test").join("X_test.txt"))?;
    let test_labels = read_labels(&dir.join("test").join("y_test.txt"))?;
    let feature_dim = train_rows[0].len();
    if test_rows[0].len() != feature_dim {
        return Err(load_err(
            &dir.join("test").join("X_test.txt"),
            format!(
                "test rows have {} columns but training rows have {feature_dim}",
                test_rows[0].len()
            ),
        ));
    }
    let stats = FeatureStats::from_rows(&train_rows);
    let train = pair(train_rows, train_labels, &stats, &dir.join("train").join("y_train.txt"))?;
    let test = pair(test_rows, test_labels, &stats, &dir.join("test").join("y_test.txt"))?;
    let dataset = Dataset {
        name: format!("har ({})", dir.display()),
        train,
        test,
        feature_dim,
        class_count: CLASSES,
    };
    dataset.validate()?;
    Ok(dataset)
}

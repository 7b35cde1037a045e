//! IDX binary format (MNIST distribution files).
//!
//! Images: u32 magic 0x00000803, count, rows, cols (big-endian), then
//! count*rows*cols unsigned bytes. Labels: magic 0x00000801, count, then
//! count bytes. Pixels are scaled to [0, 1] by dividing by 255.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hd::Sample;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn load_err(path: &Path, detail: String) -> Error {
    Error::Load {
        path: path.display().to_string(),
        detail,
    }
}

fn read_u32_be(r: &mut impl Read, path: &Path, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|e| load_err(path, format!("while reading {what}: {e}")))?;
    Ok(u32::from_be_bytes(buf))
}

/// Read an IDX image file into per-image pixel vectors scaled to [0, 1].
pub fn read_idx_images(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(|e| load_err(path, e.to_string()))?;
    let mut r = BufReader::new(file);
    let magic = read_u32_be(&mut r, path, "magic")?;
    if magic != IMAGE_MAGIC {
        return Err(load_err(
            path,
            format!("bad magic {magic:#010x} at offset 0, expected {IMAGE_MAGIC:#010x}"),
        ));
    }
    let count = read_u32_be(&mut r, path, "image count")? as usize;
    let rows = read_u32_be(&mut r, path, "row count")? as usize;
    let cols = read_u32_be(&mut r, path, "column count")? as usize;
    let pixels = rows * cols;
    let mut images = Vec::with_capacity(count);
    let mut buf = vec![0u8; pixels];
    for i in 0..count {
        r.read_exact(&mut buf).map_err(|_| {
            load_err(
                path,
                format!(
                    "truncated pixel data: image {i} of {count} ends before offset {}",
                    16 + (i + 1) * pixels
                ),
            )
        })?;
        images.push(buf.iter().map(|&p| p as f64 / 255.0).collect());
    }
    Ok(images)
}

/// Read an IDX label file into raw byte labels.
pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| load_err(path, e.to_string()))?;
    let mut r = BufReader::new(file);
    let magic = read_u32_be(&mut r, path, "magic")?;
    if magic != LABEL_MAGIC {
        return Err(load_err(
            path,
            format!("bad magic {magic:#010x} at offset 0, expected {LABEL_MAGIC:#010x}"),
        ));
    }
    let count = read_u32_be(&mut r, path, "label count")? as usize;
    let mut labels = vec![0u8; count];
    r.read_exact(&mut labels)
        .map_err(|_| load_err(path, format!("truncated label data: expected {count} labels")))?;
    Ok(labels)
}

fn split(dir: &Path, images_file: &str, labels_file: &str, class_count: usize) -> Result<Vec<Sample>> {
    let images_path = dir.join(images_file);
    let labels_path = dir.join(labels_file);
    let images = read_idx_images(&images_path)?;
    let labels = read_idx_labels(&labels_path)?;
    if images.len() != labels.len() {
        return Err(load_err(
            &labels_path,
            format!("{} labels but {} images", labels.len(), images.len()),
        ));
    }
    images
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (features, label))| {
            let label = label as usize;
            if label >= class_count {
                return Err(Error::LabelOutOfRange {
                    sample_index: i,
                    label,
                    class_count,
                });
            }
            Ok(Sample::new(features, label))
        })
        .collect()
}

/// Load the four standard MNIST files from `dir`.
pub fn load_mnist(dir: &Path) -> Result<Dataset> {
    let train = split(dir, "train-images-idx3-ubyte", "train-labels-idx1-ubyte", 10)?;
    let test = split(dir, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte", 10)?;
    let feature_dim = train
        .first()
        .or(test.first())
        .map_or(0, |s| s.features.len());
    let dataset = Dataset {
        name: format!("mnist ({})", dir.display()),
        train,
        test,
        feature_dim,
        class_count: 10,
    };
    dataset.validate()?;
    Ok(dataset)
}

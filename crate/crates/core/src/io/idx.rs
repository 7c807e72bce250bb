//! IDX image/label files (the MNIST container format).
//!
//! Images: magic `0x00000803`, then big-endian `u32` count, rows, cols and
//! `count * rows * cols` unsigned bytes. Labels: magic `0x00000801`, count,
//! then `count` bytes.

use std::path::Path;

use nalgebra::DVector;

use super::IoError;
use crate::train::Sample;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    /// One `rows * cols` row-major pixel vector per image.
    pub pixels: Vec<Vec<u8>>,
}

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32, IoError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| IoError::Idx(format!("{what}: truncated header")))
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages, IoError> {
    let magic = be_u32(bytes, 0, "images")?;
    if magic != IMAGE_MAGIC {
        return Err(IoError::Idx(format!("images: bad magic {magic:#010x}")));
    }
    let count = be_u32(bytes, 4, "images")? as usize;
    let rows = be_u32(bytes, 8, "images")? as usize;
    let cols = be_u32(bytes, 12, "images")? as usize;
    let size = rows * cols;
    let body = &bytes[16..];
    if body.len() < count * size {
        return Err(IoError::Idx(format!(
            "images: truncated, {} of {} pixel bytes present",
            body.len(),
            count * size
        )));
    }
    let pixels = (0..count).map(|i| body[i * size..(i + 1) * size].to_vec()).collect();
    Ok(IdxImages { rows, cols, pixels })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>, IoError> {
    let magic = be_u32(bytes, 0, "labels")?;
    if magic != LABEL_MAGIC {
        return Err(IoError::Idx(format!("labels: bad magic {magic:#010x}")));
    }
    let count = be_u32(bytes, 4, "labels")? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(IoError::Idx(format!("labels: truncated, {} of {count} bytes present", body.len())));
    }
    Ok(body[..count].to_vec())
}

/// Converts parsed images and labels into samples: pixels scaled to `[0, 1]`,
/// inputs rescaled into the unit ball, one-hot targets over `classes`, at most
/// `limit` samples per class in file order.
pub fn samples_from_idx(images: &IdxImages, labels: &[u8], classes: &[u8], limit: usize) -> Result<Vec<Sample>, IoError> {
    if images.pixels.len() != labels.len() {
        return Err(IoError::Idx(format!(
            "{} images but {} labels",
            images.pixels.len(),
            labels.len()
        )));
    }
    if let Some(c) = classes.iter().find(|c| !labels.contains(c)) {
        return Err(IoError::Idx(format!("requested class {c} does not occur in the label file")));
    }
    let mut taken = vec![0usize; classes.len()];
    let mut out = Vec::new();
    for (px, &label) in images.pixels.iter().zip(labels) {
        let Some(k) = classes.iter().position(|&c| c == label) else {
            continue;
        };
        if taken[k] >= limit {
            continue;
        }
        taken[k] += 1;
        let mut d = DVector::from_iterator(px.len(), px.iter().map(|&p| p as f64 / 255.0));
        let norm = d.norm();
        if norm > 1.0 {
            d /= norm;
        }
        let mut g = DVector::zeros(classes.len());
        g[k] = 1.0;
        out.push(Sample { d, g });
    }
    Ok(out)
}

pub fn load_idx(images_path: &Path, labels_path: &Path, classes: &[u8], limit: usize) -> Result<Vec<Sample>, IoError> {
    let read = |p: &Path| std::fs::read(p).map_err(|e| IoError::Path { path: p.to_path_buf(), source: e });
    let images = parse_images(&read(images_path)?)?;
    let labels = parse_labels(&read(labels_path)?)?;
    samples_from_idx(&images, &labels, classes, limit)
}

/// Encodes images in IDX form (used for fixtures).
pub fn encode_images(rows: usize, cols: usize, pixels: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::new();
    for v in [IMAGE_MAGIC, pixels.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for p in pixels {
        out.extend_from_slice(p);
    }
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Vec<u8>, Vec<u8>) {
        let pixels = vec![vec![0, 255, 128, 3], vec![10, 20, 30, 40], vec![255, 255, 255, 255]];
        (encode_images(2, 2, &pixels), encode_labels(&[1, 0, 2]))
    }

    #[test]
    fn round_trip_pixels() {
        let (img, _) = fixture();
        let parsed = parse_images(&img).unwrap();
        assert_eq!((parsed.rows, parsed.cols), (2, 2));
        assert_eq!(parsed.pixels[0], vec![0, 255, 128, 3]);
        assert_eq!(parsed.pixels[1], vec![10, 20, 30, 40]);
    }

    #[test]
    fn class_filter_limit_and_normalization() {
        let (img, lab) = fixture();
        let images = parse_images(&img).unwrap();
        let labels = parse_labels(&lab).unwrap();
        let s = samples_from_idx(&images, &labels, &[0, 1], 10).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].g.as_slice(), &[0.0, 1.0]);
        assert_eq!(s[1].g.as_slice(), &[1.0, 0.0]);
        let raw: Vec<f64> = [10.0, 20.0, 30.0, 40.0].iter().map(|p| p / 255.0).collect();
        assert_eq!(s[1].d.as_slice(), raw.as_slice());
        assert!(s.iter().all(|x| x.d.norm() + x.g.norm() <= 2.0 + 1e-12));
        assert!(samples_from_idx(&images, &labels, &[0, 1], 0).unwrap().is_empty());
        assert!(matches!(samples_from_idx(&images, &labels, &[7], 1), Err(IoError::Idx(_))));
    }

    #[test]
    fn bad_magic_and_truncation() {
        let (mut img, lab) = fixture();
        assert!(parse_labels(&img).is_err());
        assert!(parse_images(&lab).is_err());
        img.truncate(img.len() - 1);
        assert!(parse_images(&img).is_err());
        assert!(parse_labels(&lab[..9]).is_err());
    }
}

//! Dataset loading, synthetic 2-D generators, and seeded batching.
//!
//! On disk, image datasets use the IDX byte layout: a big-endian magic word
//! (0x00000803 for images, 0x00000801 for labels), big-endian dimension
//! words, then the raw payload. Pixels are scaled into `[0, 1]` on load and
//! back to bytes with `round(255 * v)` on write, so a load/write/load cycle
//! is the identity.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

/// Mixes an epoch index into a base seed so each epoch shuffles differently.
fn fold_epoch_seed(seed: u64, epoch: u64) -> u64 {
    seed ^ (epoch.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// The affine map `v01 = raw * scale + offset` used to place a synthetic
/// dataset inside the unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToyAffine {
    pub scale: f64,
    pub offset: f64,
}

impl ToyAffine {
    pub fn apply(&self, raw: f64) -> f64 {
        (raw * self.scale + self.offset).clamp(0.0, 1.0)
    }

    pub fn invert(&self, v: f64) -> f64 {
        (v - self.offset) / self.scale
    }
}

/// A set of examples: one image per row, values in `[0, 1]`, with optional
/// integer labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub images: Matrix,
    pub labels: Option<Vec<u8>>,
    /// Image height/width when the data came from an IDX file.
    pub image_shape: Option<(usize, usize)>,
    /// Recorded rescaling for synthetic data.
    pub affine: Option<ToyAffine>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.images.cols()
    }

    /// Keeps only the first `n` examples.
    pub fn take(&self, n: usize) -> Result<Dataset> {
        let n = n.min(self.len());
        if n == 0 {
            return Err(Error::validation("cannot take zero examples"));
        }
        let idx: Vec<usize> = (0..n).collect();
        Ok(Dataset {
            images: self.images.select_rows(&idx)?,
            labels: self.labels.as_ref().map(|l| l[..n].to_vec()),
            image_shape: self.image_shape,
            affine: self.affine,
        })
    }

    /// Splits off the trailing `fraction` of examples (before any shuffling)
    /// as a validation set. Both halves keep at least one example.
    pub fn split_tail(&self, fraction: f64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
            return Err(Error::validation(format!(
                "split fraction {fraction} outside (0, 1)"
            )));
        }
        let n = self.len();
        let tail = ((n as f64 * fraction).round() as usize).clamp(1, n.saturating_sub(1));
        if n < 2 {
            return Err(Error::validation("need at least two examples to split"));
        }
        let head_idx: Vec<usize> = (0..n - tail).collect();
        let tail_idx: Vec<usize> = (n - tail..n).collect();
        let head = Dataset {
            images: self.images.select_rows(&head_idx)?,
            labels: self.labels.as_ref().map(|l| l[..n - tail].to_vec()),
            image_shape: self.image_shape,
            affine: self.affine,
        };
        let tail_ds = Dataset {
            images: self.images.select_rows(&tail_idx)?,
            labels: self.labels.as_ref().map(|l| l[n - tail..].to_vec()),
            image_shape: self.image_shape,
            affine: self.affine,
        };
        Ok((head, tail_ds))
    }
}

/// Parses IDX image and (optionally) label files into a [`Dataset`].
pub fn load_idx(images_path: &Path, labels_path: Option<&Path>) -> Result<Dataset> {
    let bytes = fs::read(images_path)?;
    let mut cur = Cursor::new(&bytes);
    let magic = cur
        .read_u32::<BigEndian>()
        .map_err(|_| Error::format("image file shorter than its header".to_string()))?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::format(format!(
            "image magic {magic:#010x}, expected {IDX_IMAGE_MAGIC:#010x}"
        )));
    }
    let count = cur.read_u32::<BigEndian>().map_err(trunc)? as usize;
    let height = cur.read_u32::<BigEndian>().map_err(trunc)? as usize;
    let width = cur.read_u32::<BigEndian>().map_err(trunc)? as usize;
    let dim = height * width;
    let mut pixels = vec![0u8; count * dim];
    cur.read_exact(&mut pixels).map_err(|_| {
        Error::format(format!(
            "image payload truncated: expected {} bytes",
            count * dim
        ))
    })?;
    let data: Vec<f64> = pixels.iter().map(|&b| b as f64 / 255.0).collect();
    let images = Matrix::from_vec(count, dim, data)?;

    let labels = match labels_path {
        None => None,
        Some(path) => {
            let bytes = fs::read(path)?;
            let mut cur = Cursor::new(&bytes);
            let magic = cur
                .read_u32::<BigEndian>()
                .map_err(|_| Error::format("label file shorter than its header".to_string()))?;
            if magic != IDX_LABEL_MAGIC {
                return Err(Error::format(format!(
                    "label magic {magic:#010x}, expected {IDX_LABEL_MAGIC:#010x}"
                )));
            }
            let label_count = cur.read_u32::<BigEndian>().map_err(trunc)? as usize;
            if label_count != count {
                return Err(Error::format(format!(
                    "{label_count} labels for {count} images"
                )));
            }
            let mut raw = vec![0u8; label_count];
            cur.read_exact(&mut raw)
                .map_err(|_| Error::format("label payload truncated".to_string()))?;
            if let Some(&bad) = raw.iter().find(|&&l| l > 9) {
                return Err(Error::format(format!("label {bad} outside 0..=9")));
            }
            Some(raw)
        }
    };

    Ok(Dataset {
        images,
        labels,
        image_shape: Some((height, width)),
        affine: None,
    })
}

fn trunc(_: std::io::Error) -> Error {
    Error::format("file shorter than its header".to_string())
}

/// Serializes a dataset back to IDX bytes.
pub fn dataset_to_idx_bytes(ds: &Dataset) -> Result<(Vec<u8>, Option<Vec<u8>>)> {
    let (h, w) = ds.image_shape.unwrap_or((1, ds.dim()));
    if h * w != ds.dim() {
        return Err(Error::validation(format!(
            "image shape {h}x{w} does not cover dimension {}",
            ds.dim()
        )));
    }
    let mut img = Vec::with_capacity(16 + ds.len() * ds.dim());
    img.write_u32::<BigEndian>(IDX_IMAGE_MAGIC)?;
    img.write_u32::<BigEndian>(ds.len() as u32)?;
    img.write_u32::<BigEndian>(h as u32)?;
    img.write_u32::<BigEndian>(w as u32)?;
    for &v in ds.images.as_slice() {
        img.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
    }
    let labels = match &ds.labels {
        None => None,
        Some(ls) => {
            let mut buf = Vec::with_capacity(8 + ls.len());
            buf.write_u32::<BigEndian>(IDX_LABEL_MAGIC)?;
            buf.write_u32::<BigEndian>(ls.len() as u32)?;
            buf.extend_from_slice(ls);
            Some(buf)
        }
    };
    Ok((img, labels))
}

/// Writes a dataset to IDX files.
pub fn write_idx(ds: &Dataset, images_path: &Path, labels_path: Option<&Path>) -> Result<()> {
    let (img, labels) = dataset_to_idx_bytes(ds)?;
    fs::write(images_path, img)?;
    if let (Some(path), Some(buf)) = (labels_path, labels) {
        fs::write(path, buf)?;
    }
    Ok(())
}

/// Synthetic 2-D dataset families for desk-scale runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToyKind {
    /// Eight isotropic Gaussians (std 0.1) with means on a circle of
    /// radius 2, equal weights.
    GaussianMixture8,
    /// Two interleaving half circles.
    TwoMoons,
}

impl ToyKind {
    pub fn parse(s: &str) -> Result<ToyKind> {
        match s {
            "gaussian_mixture_8" => Ok(ToyKind::GaussianMixture8),
            "two_moons" => Ok(ToyKind::TwoMoons),
            other => Err(Error::config(format!("unknown toy dataset kind '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ToyKind::GaussianMixture8 => "gaussian_mixture_8",
            ToyKind::TwoMoons => "two_moons",
        }
    }
}

/// Generates a labeled synthetic 2-D dataset, affinely placed in `[0,1]^2`.
pub fn make_toy_2d(kind: ToyKind, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::validation("toy dataset needs at least one example"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    let affine = match kind {
        ToyKind::GaussianMixture8 => ToyAffine {
            scale: 0.2,
            offset: 0.5,
        },
        ToyKind::TwoMoons => ToyAffine {
            scale: 0.25,
            offset: 0.375,
        },
    };
    match kind {
        ToyKind::GaussianMixture8 => {
            let means: Vec<(f64, f64)> = (0..8)
                .map(|k| {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
                    (2.0 * theta.cos(), 2.0 * theta.sin())
                })
                .collect();
            for _ in 0..n {
                let c = rng.random_range(0..8usize);
                let gx: f64 = StandardNormal.sample(&mut rng);
                let gy: f64 = StandardNormal.sample(&mut rng);
                data.push(affine.apply(means[c].0 + 0.1 * gx));
                data.push(affine.apply(means[c].1 + 0.1 * gy));
                labels.push(c as u8);
            }
        }
        ToyKind::TwoMoons => {
            for _ in 0..n {
                let moon = rng.random_range(0..2usize);
                let t = rng.random::<f64>() * std::f64::consts::PI;
                let (mut x, mut y) = if moon == 0 {
                    (t.cos(), t.sin())
                } else {
                    (1.0 - t.cos(), 0.5 - t.sin())
                };
                let gx: f64 = StandardNormal.sample(&mut rng);
                let gy: f64 = StandardNormal.sample(&mut rng);
                x += 0.1 * gx;
                y += 0.1 * gy;
                data.push(affine.apply(x));
                data.push(affine.apply(y));
                labels.push(moon as u8);
            }
        }
    }
    Ok(Dataset {
        images: Matrix::from_vec(n, 2, data)?,
        labels: Some(labels),
        image_shape: None,
        affine: Some(affine),
    })
}

/// Seeded epoch batching with uniform batch sizes; a short trailing batch is
/// dropped so every emitted batch has exactly `batch_size` rows.
pub struct BatchIterator<'a> {
    images: &'a Matrix,
    batch_size: usize,
    seed: u64,
}

impl<'a> BatchIterator<'a> {
    pub fn new(dataset: &'a Dataset, batch_size: usize, seed: u64) -> Result<BatchIterator<'a>> {
        if dataset.is_empty() {
            return Err(Error::validation("empty dataset"));
        }
        if batch_size == 0 || batch_size > dataset.len() {
            return Err(Error::validation(format!(
                "batch size {batch_size} against {} examples",
                dataset.len()
            )));
        }
        Ok(BatchIterator {
            images: &dataset.images,
            batch_size,
            seed,
        })
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.images.rows() / self.batch_size
    }

    /// The seeded permutation used for `epoch`.
    pub fn permutation(&self, epoch: u64) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.images.rows()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(fold_epoch_seed(self.seed, epoch));
        // Fisher-Yates.
        for i in (1..idx.len()).rev() {
            let j = rng.random_range(0..=i);
            idx.swap(i, j);
        }
        idx
    }

    /// Batches for one epoch, in permutation order.
    pub fn epoch(&self, epoch: u64) -> EpochBatches<'_> {
        EpochBatches {
            images: self.images,
            order: self.permutation(epoch),
            batch_size: self.batch_size,
            next: 0,
        }
    }
}

pub struct EpochBatches<'a> {
    images: &'a Matrix,
    order: Vec<usize>,
    batch_size: usize,
    next: usize,
}

impl Iterator for EpochBatches<'_> {
    type Item = Matrix;

    fn next(&mut self) -> Option<Matrix> {
        if self.next + self.batch_size > self.order.len() {
            return None;
        }
        let idx = &self.order[self.next..self.next + self.batch_size];
        self.next += self.batch_size;
        Some(
            self.images
                .select_rows(idx)
                .expect("permutation indices are in range"),
        )
    }
}

//! Versioned binary model checkpoints.
//!
//! The layout (documented in full in `docs/checkpoint_format.md`) is a magic
//! word, a format version, the variant tag, the architecture dims, the
//! encoder and decoder parameter blocks, the MMD bandwidth list, and the
//! optional adversary block. All integers are little-endian; all floats are
//! IEEE-754 binary64 written as their little-endian bit patterns, so a
//! save/load cycle reproduces every parameter bit-for-bit.
//!
//! The adversary's frequency matrix is never written: its descriptor
//! `(seed, count, dim, sigma)` is stored and the matrix is regenerated on
//! load.

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::adversary::{AdversaryConfig, AdversaryState};
use crate::error::{Error, Result};
use crate::features::{FeatureMapDescriptor, RandomFeatureMap};
use crate::kernel::KernelSpec;
use crate::matrix::Matrix;
use crate::nn::{Activation, Layer, MlpParams};
use crate::train::{Autoencoder, Trainer, Variant};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DSAE";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to resume sampling, encoding, or evaluation.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub variant: Variant,
    pub latent_dim: usize,
    pub encoder: MlpParams,
    pub decoder: MlpParams,
    pub mmd_sigmas: Vec<f64>,
    pub adversary: Option<AdversarySnapshot>,
}

/// The adversary's serialized pieces; the feature map travels as its
/// regenerating descriptor.
#[derive(Clone, Debug)]
pub struct AdversarySnapshot {
    pub descriptor: FeatureMapDescriptor,
    pub alpha: Vec<f64>,
    pub frozen_gap: Vec<f64>,
    pub config: AdversaryConfig,
}

impl Checkpoint {
    pub fn from_trainer(trainer: &Trainer) -> Checkpoint {
        let cfg = trainer.config();
        let adversary = trainer.adversary().map(|a| AdversarySnapshot {
            descriptor: a.map().descriptor(),
            alpha: a.alpha().to_vec(),
            frozen_gap: a.frozen_gap().to_vec(),
            config: a.config(),
        });
        Checkpoint {
            variant: cfg.variant,
            latent_dim: cfg.latent_dim,
            encoder: trainer.model().encoder.clone(),
            decoder: trainer.model().decoder.clone(),
            mmd_sigmas: cfg.mmd_sigmas.clone(),
            adversary,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn autoencoder(&self) -> Autoencoder {
        Autoencoder {
            encoder: self.encoder.clone(),
            decoder: self.decoder.clone(),
        }
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        KernelSpec::new(self.mmd_sigmas.clone())
    }

    /// Rebuilds the adversary, regenerating its frequencies.
    pub fn adversary_state(&self) -> Result<Option<AdversaryState>> {
        match &self.adversary {
            None => Ok(None),
            Some(snap) => {
                let map = RandomFeatureMap::regenerate(&snap.descriptor)?;
                Ok(Some(AdversaryState::from_parts(
                    map,
                    snap.config,
                    snap.alpha.clone(),
                    snap.frozen_gap.clone(),
                )?))
            }
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        buf.write_all(CHECKPOINT_MAGIC)?;
        buf.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
        buf.write_u8(match self.variant {
            Variant::MmdAe => 0,
            Variant::DsAae => 1,
        })?;
        buf.write_u32::<LittleEndian>(self.encoder.input_dim() as u32)?;
        buf.write_u32::<LittleEndian>(self.latent_dim as u32)?;
        write_mlp(&mut buf, &self.encoder)?;
        write_mlp(&mut buf, &self.decoder)?;
        buf.write_u32::<LittleEndian>(self.mmd_sigmas.len() as u32)?;
        for &s in &self.mmd_sigmas {
            buf.write_f64::<LittleEndian>(s)?;
        }
        match &self.adversary {
            None => buf.write_u8(0)?,
            Some(snap) => {
                buf.write_u8(1)?;
                buf.write_u64::<LittleEndian>(snap.descriptor.seed)?;
                buf.write_u32::<LittleEndian>(snap.descriptor.num_features as u32)?;
                buf.write_u32::<LittleEndian>(snap.descriptor.input_dim as u32)?;
                buf.write_f64::<LittleEndian>(snap.descriptor.sigma)?;
                buf.write_f64::<LittleEndian>(snap.config.ascent_lr)?;
                buf.write_f64::<LittleEndian>(snap.config.l2_decay)?;
                buf.write_f64::<LittleEndian>(snap.config.alpha_cap)?;
                buf.write_u32::<LittleEndian>(snap.alpha.len() as u32)?;
                for &a in &snap.alpha {
                    buf.write_f64::<LittleEndian>(a)?;
                }
                for &g in &snap.frozen_gap {
                    buf.write_f64::<LittleEndian>(g)?;
                }
            }
        }
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let mut cur = Cursor::new(bytes);
        let mut magic = [0u8; 4];
        cur.read_exact(&mut magic).map_err(short)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::format(format!(
                "bad checkpoint magic {magic:?}, expected {CHECKPOINT_MAGIC:?}"
            )));
        }
        let version = cur.read_u32::<LittleEndian>().map_err(short)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::format(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let variant = match cur.read_u8().map_err(short)? {
            0 => Variant::MmdAe,
            1 => Variant::DsAae,
            t => return Err(Error::format(format!("unknown variant tag {t}"))),
        };
        let input_dim = cur.read_u32::<LittleEndian>().map_err(short)? as usize;
        let latent_dim = cur.read_u32::<LittleEndian>().map_err(short)? as usize;
        let encoder = read_mlp(&mut cur)?;
        let decoder = read_mlp(&mut cur)?;
        if encoder.input_dim() != input_dim || encoder.output_dim() != latent_dim {
            return Err(Error::format(format!(
                "encoder dims {}x{} disagree with header {input_dim}/{latent_dim}",
                encoder.input_dim(),
                encoder.output_dim()
            )));
        }
        if decoder.input_dim() != latent_dim || decoder.output_dim() != input_dim {
            return Err(Error::format("decoder dims disagree with header".to_string()));
        }
        let n_sigmas = cur.read_u32::<LittleEndian>().map_err(short)? as usize;
        let mut mmd_sigmas = Vec::with_capacity(n_sigmas);
        for _ in 0..n_sigmas {
            mmd_sigmas.push(cur.read_f64::<LittleEndian>().map_err(short)?);
        }
        let adversary = match cur.read_u8().map_err(short)? {
            0 => None,
            1 => {
                let seed = cur.read_u64::<LittleEndian>().map_err(short)?;
                let num_features = cur.read_u32::<LittleEndian>().map_err(short)? as usize;
                let map_dim = cur.read_u32::<LittleEndian>().map_err(short)? as usize;
                let sigma = cur.read_f64::<LittleEndian>().map_err(short)?;
                let ascent_lr = cur.read_f64::<LittleEndian>().map_err(short)?;
                let l2_decay = cur.read_f64::<LittleEndian>().map_err(short)?;
                let alpha_cap = cur.read_f64::<LittleEndian>().map_err(short)?;
                let len = cur.read_u32::<LittleEndian>().map_err(short)? as usize;
                if len != 2 * num_features {
                    return Err(Error::format(format!(
                        "adversary length {len} vs 2*{num_features} features"
                    )));
                }
                let mut alpha = Vec::with_capacity(len);
                for _ in 0..len {
                    alpha.push(cur.read_f64::<LittleEndian>().map_err(short)?);
                }
                let mut frozen_gap = Vec::with_capacity(len);
                for _ in 0..len {
                    frozen_gap.push(cur.read_f64::<LittleEndian>().map_err(short)?);
                }
                Some(AdversarySnapshot {
                    descriptor: FeatureMapDescriptor {
                        seed,
                        num_features,
                        input_dim: map_dim,
                        sigma,
                    },
                    alpha,
                    frozen_gap,
                    config: AdversaryConfig {
                        ascent_lr,
                        l2_decay,
                        alpha_cap,
                    },
                })
            }
            t => return Err(Error::format(format!("unknown adversary tag {t}"))),
        };
        if cur.position() != bytes.len() as u64 {
            return Err(Error::format(format!(
                "{} trailing bytes after checkpoint payload",
                bytes.len() as u64 - cur.position()
            )));
        }
        Ok(Checkpoint {
            variant,
            latent_dim,
            encoder,
            decoder,
            mmd_sigmas,
            adversary,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let bytes = fs::read(path)?;
        Checkpoint::from_bytes(&bytes)
    }
}

fn short(_: std::io::Error) -> Error {
    Error::format("checkpoint truncated".to_string())
}

fn write_mlp(buf: &mut Vec<u8>, params: &MlpParams) -> Result<()> {
    buf.write_u32::<LittleEndian>(params.num_layers() as u32)?;
    for layer in params.layers() {
        buf.write_u32::<LittleEndian>(layer.weight.rows() as u32)?;
        buf.write_u32::<LittleEndian>(layer.weight.cols() as u32)?;
        buf.write_u8(layer.activation.tag())?;
        for &w in layer.weight.as_slice() {
            buf.write_f64::<LittleEndian>(w)?;
        }
        for &b in &layer.bias {
            buf.write_f64::<LittleEndian>(b)?;
        }
    }
    Ok(())
}

fn read_mlp(cur: &mut Cursor<&[u8]>) -> Result<MlpParams> {
    let n_layers = cur.read_u32::<LittleEndian>().map_err(short)? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let out = cur.read_u32::<LittleEndian>().map_err(short)? as usize;
        let inp = cur.read_u32::<LittleEndian>().map_err(short)? as usize;
        let activation = Activation::from_tag(cur.read_u8().map_err(short)?)?;
        let mut weight = Vec::with_capacity(out * inp);
        for _ in 0..out * inp {
            weight.push(cur.read_f64::<LittleEndian>().map_err(short)?);
        }
        let mut bias = Vec::with_capacity(out);
        for _ in 0..out {
            bias.push(cur.read_f64::<LittleEndian>().map_err(short)?);
        }
        layers.push(Layer {
            weight: Matrix::from_vec(out, inp, weight)?,
            bias,
            activation,
        });
    }
    MlpParams::new(layers)
}

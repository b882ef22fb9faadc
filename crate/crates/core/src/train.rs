//! End-to-end training for both autoencoder variants.
//!
//! Both variants share the reconstruction path: encode, decode, Bernoulli
//! cross-entropy, one Adam update. They differ in how the latent codes are
//! pulled toward the prior:
//!
//! * `mmd_ae` adds the closed-form biased MMD^2 between a fresh prior batch
//!   and the codes to the loss, with its analytic gradient flowing into the
//!   encoder. A single Adam state updates encoder and decoder together on
//!   the combined objective.
//! * `ds_aae` alternates three phases per step: the reconstruction update,
//!   ascent steps on the random-feature adversary over a fresh prior batch
//!   and the current codes, and a generator update that pushes the encoder
//!   along the frozen adversary's descent direction. The reconstruction and
//!   generator phases keep separate Adam states.
//!
//! Every stream of randomness (weights, shuffling, dropout, prior draws,
//! feature frequencies) is seeded independently, so a full run is a pure
//! function of its configuration.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::adam::{AdamParams, AdamState};
use crate::adversary::{AdversaryConfig, AdversaryState};
use crate::data::{BatchIterator, Dataset};
use crate::error::{Error, Result};
use crate::features::RandomFeatureMap;
use crate::kernel::{mmd2_biased, mmd2_biased_grad_wrt_y, KernelSpec};
use crate::loss::bernoulli_cross_entropy;
use crate::matrix::Matrix;
use crate::nn::{
    mlp_backward, mlp_forward, mlp_forward_cached, mlp_forward_eval, Activation, ForwardCache,
    MlpGrads, MlpParams,
};

/// Domain separator mixed into the data seed for the dropout stream.
const DROPOUT_SEED_TAG: u64 = 0xD80F_0000_0000_0001;

/// Rows decoded per chunk when sampling from a trained model.
const SAMPLE_CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    MmdAe,
    DsAae,
}

impl Variant {
    pub fn parse(s: &str) -> Result<Variant> {
        match s {
            "mmd_ae" => Ok(Variant::MmdAe),
            "ds_aae" => Ok(Variant::DsAae),
            other => Err(Error::config(format!("unknown variant '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::MmdAe => "mmd_ae",
            Variant::DsAae => "ds_aae",
        }
    }
}

/// Independent seed streams for every source of randomness in a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seeds {
    pub weights: u64,
    pub data: u64,
    pub features: u64,
    pub prior: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            weights: 1,
            data: 2,
            features: 3,
            prior: 4,
        }
    }
}

impl Seeds {
    /// Derives the four streams from one master seed.
    pub fn from_master(seed: u64) -> Seeds {
        Seeds {
            weights: seed,
            data: seed.wrapping_add(1),
            features: seed.wrapping_add(2),
            prior: seed.wrapping_add(3),
        }
    }
}

/// All training hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub variant: Variant,
    pub latent_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub batch_size: usize,
    pub epochs: usize,
    pub recon_lr: f64,
    pub adv_lr: f64,
    pub dropout_input: f64,
    /// Weight of the prior-matching term relative to reconstruction.
    pub lambda: f64,
    /// Bandwidth mixture for the closed-form MMD regularizer.
    pub mmd_sigmas: Vec<f64>,
    /// Bandwidth of the adversary's random-feature kernel.
    pub rf_sigma: f64,
    /// Number of random frequencies (feature dimension is twice this).
    pub rf_count: usize,
    /// Adversary ascent steps per generator step.
    pub adversary_steps: usize,
    pub ascent_lr: f64,
    pub l2_decay: f64,
    pub alpha_cap: f64,
    /// Redraw the adversary's frequencies every step instead of fixing them
    /// at initialization.
    pub resample_features: bool,
    pub seeds: Seeds,
    /// Checkpoint every this many epochs (0 = final checkpoint only).
    pub checkpoint_every: usize,
    /// Zero the wall_time_s column of emitted metrics so reruns are
    /// byte-identical.
    pub deterministic_metrics: bool,
}

impl TrainConfig {
    /// Paper-default hyperparameters for a variant: hidden sizes
    /// 1024/512/216, batch 1000, learning rates 0.001, 20% input dropout,
    /// latent dimension 6 (ds_aae) or 4 (mmd_ae), MMD bandwidth mixture
    /// {2, 5, 10, 20, 40, 80}, adversary kernel bandwidth 1.
    pub fn defaults(variant: Variant) -> TrainConfig {
        TrainConfig {
            variant,
            latent_dim: match variant {
                Variant::DsAae => 6,
                Variant::MmdAe => 4,
            },
            hidden_dims: vec![1024, 512, 216],
            batch_size: 1000,
            epochs: 10,
            recon_lr: 0.001,
            adv_lr: 0.001,
            dropout_input: 0.20,
            lambda: 1.0,
            mmd_sigmas: vec![2.0, 5.0, 10.0, 20.0, 40.0, 80.0],
            rf_sigma: 1.0,
            rf_count: 500,
            adversary_steps: 1,
            ascent_lr: 0.001,
            l2_decay: 0.01,
            alpha_cap: 10.0,
            resample_features: false,
            seeds: Seeds::default(),
            checkpoint_every: 0,
            deterministic_metrics: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 {
            return Err(Error::validation("latent_dim must be at least 1"));
        }
        if self.batch_size < 2 {
            return Err(Error::validation("batch_size must be at least 2"));
        }
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be at least 1"));
        }
        for (name, v) in [
            ("recon_lr", self.recon_lr),
            ("adv_lr", self.adv_lr),
            ("ascent_lr", self.ascent_lr),
            ("rf_sigma", self.rf_sigma),
            ("alpha_cap", self.alpha_cap),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout_input) {
            return Err(Error::validation(format!(
                "dropout_input {} outside [0, 1)",
                self.dropout_input
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::validation("lambda must be nonnegative"));
        }
        if !(self.l2_decay.is_finite() && self.l2_decay >= 0.0) {
            return Err(Error::validation("l2_decay must be nonnegative"));
        }
        if self.mmd_sigmas.is_empty() || !self.mmd_sigmas.iter().all(|&s| s.is_finite() && s > 0.0)
        {
            return Err(Error::validation("mmd_sigmas must be a nonempty positive list"));
        }
        if self.rf_count == 0 {
            return Err(Error::validation("rf_count must be at least 1"));
        }
        if self.adversary_steps == 0 {
            return Err(Error::validation("adversary_steps must be at least 1"));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::validation("hidden layer sizes must be positive"));
        }
        Ok(())
    }
}

/// The latent prior: standard normal in `dim` dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PriorSpec {
    pub dim: usize,
}

impl PriorSpec {
    pub fn new(dim: usize) -> Result<PriorSpec> {
        if dim == 0 {
            return Err(Error::validation("prior dimension must be at least 1"));
        }
        Ok(PriorSpec { dim })
    }

    /// Refuses construction against an encoder with a different code width.
    pub fn for_encoder(dim: usize, encoder: &MlpParams) -> Result<PriorSpec> {
        if encoder.output_dim() != dim {
            return Err(Error::validation(format!(
                "prior dimension {dim} vs encoder output {}",
                encoder.output_dim()
            )));
        }
        PriorSpec::new(dim)
    }
}

/// Draws `n` i.i.d. standard-normal rows.
pub fn sample_prior(spec: &PriorSpec, n: usize, rng: &mut impl Rng) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::validation("cannot sample zero prior rows"));
    }
    let mut data = Vec::with_capacity(n * spec.dim);
    for _ in 0..n * spec.dim {
        let z: f64 = StandardNormal.sample(rng);
        data.push(z);
    }
    Matrix::from_vec(n, spec.dim, data)
}

/// One epoch's aggregate metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub epoch: usize,
    pub recon_loss: f64,
    /// MMD^2 for `mmd_ae`, the minimax objective for `ds_aae`.
    pub discrepancy: f64,
    pub wall_time_s: f64,
}

/// One training step's metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMetrics {
    pub recon_loss: f64,
    pub discrepancy: f64,
}

/// Encoder/decoder pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Autoencoder {
    pub encoder: MlpParams,
    pub decoder: MlpParams,
}

/// Builds the mirrored architecture: ReLU hidden layers, identity-activated
/// codes, sigmoid outputs.
pub fn build_autoencoder(
    input_dim: usize,
    hidden_dims: &[usize],
    latent_dim: usize,
    rng: &mut impl Rng,
) -> Result<Autoencoder> {
    if input_dim == 0 {
        return Err(Error::validation("input dimension must be at least 1"));
    }
    let mut enc_dims = vec![input_dim];
    enc_dims.extend_from_slice(hidden_dims);
    enc_dims.push(latent_dim);
    let mut enc_acts = vec![Activation::Relu; hidden_dims.len()];
    enc_acts.push(Activation::Identity);

    let mut dec_dims = vec![latent_dim];
    dec_dims.extend(hidden_dims.iter().rev());
    dec_dims.push(input_dim);
    let mut dec_acts = vec![Activation::Relu; hidden_dims.len()];
    dec_acts.push(Activation::Sigmoid);

    Ok(Autoencoder {
        encoder: MlpParams::glorot(&enc_dims, &enc_acts, rng)?,
        decoder: MlpParams::glorot(&dec_dims, &dec_acts, rng)?,
    })
}

/// Loss value and parameter gradients of one combined objective evaluation.
#[derive(Debug)]
pub struct CombinedGrads {
    /// `recon_loss + lambda * discrepancy`.
    pub loss: f64,
    pub recon_loss: f64,
    pub discrepancy: f64,
    pub encoder: MlpGrads,
    pub decoder: MlpGrads,
}

/// Gradient assembly shared by the `mmd_ae` training step: cross-entropy
/// reconstruction plus `lambda * MMD^2(prior, codes)`, backpropagated
/// through decoder and encoder from an already-computed encoder pass.
fn combined_mmd_grads(
    model: &Autoencoder,
    batch: &Matrix,
    codes: &Matrix,
    cache_e: &ForwardCache,
    prior_batch: Option<&Matrix>,
    kernel: &KernelSpec,
    lambda: f64,
) -> Result<CombinedGrads> {
    let (x_hat, cache_d) = mlp_forward_cached(&model.decoder, codes)?;
    let (recon_loss, g_pred) = bernoulli_cross_entropy(&x_hat, batch)?;
    let (dec_grads, g_z_recon) = mlp_backward(&model.decoder, &cache_d, &g_pred)?;
    let (discrepancy, g_z) = match prior_batch {
        Some(prior) if lambda > 0.0 => {
            let mmd = mmd2_biased(prior, codes, kernel)?;
            let g_mmd = mmd2_biased_grad_wrt_y(prior, codes, kernel)?;
            let mut g = g_z_recon;
            g.axpy(lambda, &g_mmd)?;
            (mmd, g)
        }
        _ => (0.0, g_z_recon),
    };
    let (enc_grads, _) = mlp_backward(&model.encoder, cache_e, &g_z)?;
    Ok(CombinedGrads {
        loss: recon_loss + lambda * discrepancy,
        recon_loss,
        discrepancy,
        encoder: enc_grads,
        decoder: dec_grads,
    })
}

/// The combined objective and gradients as used by one `mmd_ae` step, with
/// a dropout-free encoder pass. Exposed so the gradient assembly can be
/// checked against finite differences.
pub fn mmd_ae_loss_grads(
    model: &Autoencoder,
    batch: &Matrix,
    prior_batch: &Matrix,
    kernel: &KernelSpec,
    lambda: f64,
) -> Result<CombinedGrads> {
    let (codes, cache_e) = mlp_forward_cached(&model.encoder, batch)?;
    combined_mmd_grads(model, batch, &codes, &cache_e, Some(prior_batch), kernel, lambda)
}

/// The generator-phase objective `lambda * (-mean f(encode(x)))` of the
/// `ds_aae` step, with the adversary frozen, and its encoder gradients.
pub fn ds_generator_loss_grads(
    encoder: &MlpParams,
    batch: &Matrix,
    adversary: &AdversaryState,
    lambda: f64,
) -> Result<(f64, MlpGrads)> {
    let (codes, cache) = mlp_forward_cached(encoder, batch)?;
    let values = adversary.value(&codes)?;
    let loss = -lambda * values.iter().sum::<f64>() / values.len() as f64;
    let g_z = adversary.generator_grad(&codes)?.scale(lambda);
    let (grads, _) = mlp_backward(encoder, &cache, &g_z)?;
    Ok((loss, grads))
}

/// Holds the model, optimizer states, adversary, and the seeded randomness
/// streams for one training run.
pub struct Trainer {
    cfg: TrainConfig,
    model: Autoencoder,
    adversary: Option<AdversaryState>,
    kernel: KernelSpec,
    prior: PriorSpec,
    adam_recon: AdamState,
    adam_adv: AdamState,
    rng_dropout: ChaCha8Rng,
    rng_prior: ChaCha8Rng,
    step_index: u64,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, input_dim: usize) -> Result<Trainer> {
        cfg.validate()?;
        let mut weight_rng = ChaCha8Rng::seed_from_u64(cfg.seeds.weights);
        let model = build_autoencoder(input_dim, &cfg.hidden_dims, cfg.latent_dim, &mut weight_rng)?;
        Trainer::with_model(cfg, model)
    }

    /// Builds a trainer around an externally constructed model.
    pub fn with_model(cfg: TrainConfig, model: Autoencoder) -> Result<Trainer> {
        cfg.validate()?;
        if model.encoder.output_dim() != cfg.latent_dim
            || model.decoder.input_dim() != cfg.latent_dim
        {
            return Err(Error::validation(format!(
                "model code width {}/{} vs configured latent_dim {}",
                model.encoder.output_dim(),
                model.decoder.input_dim(),
                cfg.latent_dim
            )));
        }
        if model.encoder.input_dim() != model.decoder.output_dim() {
            return Err(Error::validation(
                "encoder input and decoder output dimensions differ".to_string(),
            ));
        }
        let prior = PriorSpec::for_encoder(cfg.latent_dim, &model.encoder)?;
        let kernel = KernelSpec::new(cfg.mmd_sigmas.clone())?;
        let adversary = match cfg.variant {
            Variant::MmdAe => None,
            Variant::DsAae => {
                let map = RandomFeatureMap::sample(
                    cfg.rf_count,
                    cfg.latent_dim,
                    cfg.rf_sigma,
                    cfg.seeds.features,
                )?;
                Some(AdversaryState::new(
                    map,
                    AdversaryConfig {
                        ascent_lr: cfg.ascent_lr,
                        l2_decay: cfg.l2_decay,
                        alpha_cap: cfg.alpha_cap,
                    },
                )?)
            }
        };
        let adam_recon = AdamState::new(AdamParams::with_lr(cfg.recon_lr));
        let adam_adv = AdamState::new(AdamParams::with_lr(cfg.adv_lr));
        let rng_dropout = ChaCha8Rng::seed_from_u64(cfg.seeds.data ^ DROPOUT_SEED_TAG);
        let rng_prior = ChaCha8Rng::seed_from_u64(cfg.seeds.prior);
        Ok(Trainer {
            cfg,
            model,
            adversary,
            kernel,
            prior,
            adam_recon,
            adam_adv,
            rng_dropout,
            rng_prior,
            step_index: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn model(&self) -> &Autoencoder {
        &self.model
    }

    pub fn adversary(&self) -> Option<&AdversaryState> {
        self.adversary.as_ref()
    }

    pub fn steps_taken(&self) -> u64 {
        self.step_index
    }

    /// One optimization step on a data batch.
    pub fn train_step(&mut self, batch: &Matrix) -> Result<StepMetrics> {
        if batch.cols() != self.model.encoder.input_dim() {
            return Err(Error::shape(format!(
                "batch width {} vs encoder input {}",
                batch.cols(),
                self.model.encoder.input_dim()
            )));
        }
        let metrics = match self.cfg.variant {
            Variant::MmdAe => self.step_mmd_ae(batch),
            Variant::DsAae => self.step_ds_aae(batch),
        }?;
        if !metrics.recon_loss.is_finite() || !metrics.discrepancy.is_finite() {
            return Err(Error::validation(format!(
                "non-finite loss at step {}: recon {}, discrepancy {}",
                self.step_index, metrics.recon_loss, metrics.discrepancy
            )));
        }
        self.step_index += 1;
        Ok(metrics)
    }

    /// Reconstruction + closed-form MMD, one joint Adam update.
    fn step_mmd_ae(&mut self, batch: &Matrix) -> Result<StepMetrics> {
        let (codes, cache_e) = mlp_forward(
            &self.model.encoder,
            batch,
            self.cfg.dropout_input,
            &mut self.rng_dropout,
            true,
        )?;
        let prior_batch = if self.cfg.lambda > 0.0 {
            Some(sample_prior(&self.prior, batch.rows(), &mut self.rng_prior)?)
        } else {
            None
        };
        let lg = combined_mmd_grads(
            &self.model,
            batch,
            &codes,
            &cache_e,
            prior_batch.as_ref(),
            &self.kernel,
            self.cfg.lambda,
        )?;

        let mut params = self.model.encoder.param_slices_mut();
        params.extend(self.model.decoder.param_slices_mut());
        let mut grads = lg.encoder.grad_slices();
        grads.extend(lg.decoder.grad_slices());
        self.adam_recon.step(&mut params, &grads)?;

        Ok(StepMetrics {
            recon_loss: lg.recon_loss,
            discrepancy: lg.discrepancy,
        })
    }

    /// Reconstruction update, adversary ascent, generator update.
    fn step_ds_aae(&mut self, batch: &Matrix) -> Result<StepMetrics> {
        let cfg_lambda = self.cfg.lambda;
        // Phase 1: reconstruction, identical to the plain autoencoder.
        let (z, cache_e) = mlp_forward(
            &self.model.encoder,
            batch,
            self.cfg.dropout_input,
            &mut self.rng_dropout,
            true,
        )?;
        let (x_hat, cache_d) = mlp_forward_cached(&self.model.decoder, &z)?;
        let (recon_loss, g_pred) = bernoulli_cross_entropy(&x_hat, batch)?;
        let (dec_grads, g_z_recon) = mlp_backward(&self.model.decoder, &cache_d, &g_pred)?;
        let (enc_grads, _) = mlp_backward(&self.model.encoder, &cache_e, &g_z_recon)?;
        let mut params = self.model.encoder.param_slices_mut();
        params.extend(self.model.decoder.param_slices_mut());
        let mut grads = enc_grads.grad_slices();
        grads.extend(dec_grads.grad_slices());
        self.adam_recon.step(&mut params, &grads)?;

        // With a zero-weight regularizer the remaining phases would not move
        // the encoder; skipping them keeps this run bit-identical to the
        // plain autoencoder.
        if cfg_lambda == 0.0 {
            return Ok(StepMetrics {
                recon_loss,
                discrepancy: 0.0,
            });
        }

        // Phase 2: adversary ascent on the post-update codes.
        let (z2, cache_e2) = mlp_forward(
            &self.model.encoder,
            batch,
            self.cfg.dropout_input,
            &mut self.rng_dropout,
            true,
        )?;
        let adversary = self
            .adversary
            .as_mut()
            .expect("ds_aae trainer always has an adversary");
        if self.cfg.resample_features {
            let step_seed = self
                .cfg
                .seeds
                .features
                .wrapping_add((self.step_index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            adversary.replace_map(RandomFeatureMap::sample(
                self.cfg.rf_count,
                self.cfg.latent_dim,
                self.cfg.rf_sigma,
                step_seed,
            )?)?;
        }
        let mut last_prior = None;
        for _ in 0..self.cfg.adversary_steps {
            let prior_batch = sample_prior(&self.prior, batch.rows(), &mut self.rng_prior)?;
            adversary.ascend(&prior_batch, &z2)?;
            last_prior = Some(prior_batch);
        }
        let discrepancy =
            adversary.objective(&last_prior.expect("at least one ascent step"), &z2)?;

        // Phase 3: generator update of the encoder against the frozen
        // adversary.
        let g_z = adversary.generator_grad(&z2)?.scale(cfg_lambda);
        let (enc_grads, _) = mlp_backward(&self.model.encoder, &cache_e2, &g_z)?;
        self.adam_adv.step_mlp(&mut self.model.encoder, &enc_grads)?;

        Ok(StepMetrics {
            recon_loss,
            discrepancy,
        })
    }

    /// One pass over the dataset; epochs are 1-based.
    pub fn run_epoch(&mut self, data: &Dataset, epoch: usize) -> Result<MetricsRow> {
        let start = Instant::now();
        let it = BatchIterator::new(data, self.cfg.batch_size, self.cfg.seeds.data)?;
        let mut recon_sum = 0.0;
        let mut disc_sum = 0.0;
        let mut steps = 0usize;
        for batch in it.epoch((epoch - 1) as u64) {
            let m = self.train_step(&batch)?;
            recon_sum += m.recon_loss;
            disc_sum += m.discrepancy;
            steps += 1;
        }
        if steps == 0 {
            return Err(Error::validation("epoch produced no batches"));
        }
        let wall = if self.cfg.deterministic_metrics {
            0.0
        } else {
            start.elapsed().as_secs_f64()
        };
        Ok(MetricsRow {
            epoch,
            recon_loss: recon_sum / steps as f64,
            discrepancy: disc_sum / steps as f64,
            wall_time_s: wall,
        })
    }

    /// Runs the configured number of epochs.
    pub fn fit(&mut self, data: &Dataset) -> Result<Vec<MetricsRow>> {
        let mut rows = Vec::with_capacity(self.cfg.epochs);
        for epoch in 1..=self.cfg.epochs {
            rows.push(self.run_epoch(data, epoch)?);
        }
        Ok(rows)
    }

    /// Eval-mode codes for a batch.
    pub fn encode(&self, batch: &Matrix) -> Result<Matrix> {
        mlp_forward_eval(&self.model.encoder, batch)
    }
}

/// Decodes `n` fresh prior draws; rows are in (0, 1) by the sigmoid output.
pub fn generate_samples(
    decoder: &MlpParams,
    prior: &PriorSpec,
    n: usize,
    seed: u64,
) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::validation("cannot generate zero samples"));
    }
    if decoder.input_dim() != prior.dim {
        return Err(Error::shape(format!(
            "decoder expects codes of dimension {}, prior has {}",
            decoder.input_dim(),
            prior.dim
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Matrix::zeros(n, decoder.output_dim());
    let mut written = 0;
    while written < n {
        let take = SAMPLE_CHUNK.min(n - written);
        let z = sample_prior(prior, take, &mut rng)?;
        let x = mlp_forward_eval(decoder, &z)?;
        for i in 0..take {
            out.row_mut(written + i).copy_from_slice(x.row(i));
        }
        written += take;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_toy_2d, ToyKind};

    fn toy_config(variant: Variant) -> TrainConfig {
        let mut cfg = TrainConfig::defaults(variant);
        cfg.latent_dim = 2;
        cfg.hidden_dims = vec![16, 16];
        cfg.batch_size = 50;
        cfg.epochs = 2;
        cfg.rf_count = 32;
        cfg.mmd_sigmas = vec![1.0];
        cfg
    }

    #[test]
    fn prior_moments_match_standard_normal() {
        let spec = PriorSpec::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = sample_prior(&spec, 100_000, &mut rng).unwrap();
        let means = m.col_means();
        for mu in &means {
            assert!(mu.abs() < 0.02, "mean {mu}");
        }
        for (j, &mu) in means.iter().enumerate() {
            let var: f64 = (0..m.rows())
                .map(|i| (m.get(i, j) - mu) * (m.get(i, j) - mu))
                .sum::<f64>()
                / m.rows() as f64;
            assert!((var - 1.0).abs() < 0.02, "variance {var}");
        }
    }

    #[test]
    fn prior_sampling_is_deterministic() {
        let spec = PriorSpec::new(3).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(
            sample_prior(&spec, 10, &mut a).unwrap(),
            sample_prior(&spec, 10, &mut b).unwrap()
        );
    }

    #[test]
    fn prior_construction_refuses_dim_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let model = build_autoencoder(4, &[8], 2, &mut rng).unwrap();
        assert!(PriorSpec::for_encoder(3, &model.encoder).is_err());
        assert!(PriorSpec::for_encoder(2, &model.encoder).is_ok());
    }

    #[test]
    fn trainer_rejects_model_with_wrong_code_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let model = build_autoencoder(4, &[8], 3, &mut rng).unwrap();
        let cfg = toy_config(Variant::MmdAe);
        assert!(Trainer::with_model(cfg, model).is_err());
    }

    #[test]
    fn zero_weight_decoder_emits_half_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut model = build_autoencoder(3, &[4], 2, &mut rng).unwrap();
        // Zero out the decoder.
        let mut zeroed = Vec::new();
        for layer in model.decoder.layers() {
            zeroed.push(crate::nn::Layer {
                weight: Matrix::zeros(layer.weight.rows(), layer.weight.cols()),
                bias: vec![0.0; layer.bias.len()],
                activation: layer.activation,
            });
        }
        model.decoder = MlpParams::new(zeroed).unwrap();
        let prior = PriorSpec::new(2).unwrap();
        let samples = generate_samples(&model.decoder, &prior, 17, 3).unwrap();
        for &v in samples.as_slice() {
            assert_eq!(v, 0.5);
        }
    }

    #[test]
    fn generated_samples_are_bounded_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let model = build_autoencoder(5, &[8], 2, &mut rng).unwrap();
        let prior = PriorSpec::new(2).unwrap();
        let a = generate_samples(&model.decoder, &prior, 40, 11).unwrap();
        let b = generate_samples(&model.decoder, &prior, 40, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn full_runs_are_reproducible() {
        let data = make_toy_2d(ToyKind::GaussianMixture8, 200, 3).unwrap();
        for variant in [Variant::MmdAe, Variant::DsAae] {
            let cfg = toy_config(variant);
            let rows_a = Trainer::new(cfg.clone(), 2).unwrap().fit(&data).unwrap();
            let rows_b = Trainer::new(cfg, 2).unwrap().fit(&data).unwrap();
            assert_eq!(rows_a, rows_b, "{variant:?} diverged between runs");
        }
    }

    #[test]
    fn lambda_zero_degenerates_both_variants_to_the_same_plain_ae() {
        let data = make_toy_2d(ToyKind::GaussianMixture8, 200, 3).unwrap();
        let mut cfg_mmd = toy_config(Variant::MmdAe);
        cfg_mmd.lambda = 0.0;
        let mut cfg_ds = toy_config(Variant::DsAae);
        cfg_ds.lambda = 0.0;
        let mut t_mmd = Trainer::new(cfg_mmd, 2).unwrap();
        let mut t_ds = Trainer::new(cfg_ds, 2).unwrap();
        t_mmd.fit(&data).unwrap();
        t_ds.fit(&data).unwrap();
        assert_eq!(t_mmd.model().encoder, t_ds.model().encoder);
        assert_eq!(t_mmd.model().decoder, t_ds.model().decoder);
    }
}

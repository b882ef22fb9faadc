//! Probabilistic autoencoders that impose a prior on their latent code.
//!
//! Two training variants are provided. `mmd_ae` regularizes a plain
//! autoencoder with the closed-form (biased) squared maximum mean
//! discrepancy between encoded batches and prior draws. `ds_aae` replaces
//! the closed form with an explicit minimax game: an adversary built from
//! random Fourier features ascends to separate the two sample clouds in
//! kernel feature space, and the encoder descends to defeat it.
//!
//! The crate also carries the supporting pieces: a small dense-matrix MLP
//! stack with analytic gradients and Adam, Gaussian-kernel MMD estimators
//! and their sample gradients, random feature maps, Parzen-window
//! log-likelihood scoring, IDX dataset handling, synthetic 2-D datasets,
//! binary checkpoints, and the flat `key = value` run configuration.
//!
//! Everything is deterministic given the configured seeds: two runs with the
//! same configuration produce bit-identical parameters and metrics.

pub mod adam;
pub mod adversary;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod features;
pub mod kernel;
pub mod loss;
pub mod matrix;
pub mod nn;
pub mod parzen;
pub mod train;

pub use adam::{AdamParams, AdamState};
pub use adversary::{embedding_gap, AdversaryConfig, AdversaryState};
pub use checkpoint::{AdversarySnapshot, Checkpoint};
pub use config::{DataConfig, DataSource, EvalConfig, RunConfig, RunConfigBuilder, SampleConfig};
pub use data::{
    dataset_to_idx_bytes, load_idx, make_toy_2d, write_idx, BatchIterator, Dataset, ToyAffine,
    ToyKind,
};
pub use error::{Error, Result};
pub use features::{FeatureMapDescriptor, RandomFeatureMap};
pub use kernel::{mmd2_biased, mmd2_biased_grad_wrt_y, mmd2_unbiased, rbf_kernel, KernelSpec};
pub use loss::bernoulli_cross_entropy;
pub use matrix::Matrix;
pub use nn::{
    mlp_backward, mlp_forward, mlp_forward_cached, mlp_forward_eval, Activation, ForwardCache,
    Layer, MlpGrads, MlpParams,
};
pub use parzen::{
    default_bandwidth_grid, evaluate_loglik, parzen_log_density, select_bandwidth, ParzenModel,
};
pub use train::{
    build_autoencoder, ds_generator_loss_grads, generate_samples, mmd_ae_loss_grads, sample_prior,
    Autoencoder, CombinedGrads, MetricsRow, PriorSpec, Seeds, StepMetrics, TrainConfig, Trainer,
    Variant,
};

//! Python bindings: the kernel estimators, random feature maps, Parzen
//! scoring, the toy data generators, and in-memory training of both
//! autoencoder variants. Matrices cross the boundary as lists of row lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use dsaae_core::{
    generate_samples, mlp_forward_eval, Checkpoint, KernelSpec, Matrix, ParzenModel, PriorSpec,
    RandomFeatureMap, Seeds, ToyKind, TrainConfig, Trainer, Variant,
};

fn to_py_err(e: dsaae_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix_from_rows(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(to_py_err)
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// `exp(-||x - y||^2 / (2 sigma^2))`.
#[pyfunction]
fn rbf_kernel(x: Vec<f64>, y: Vec<f64>, sigma: f64) -> PyResult<f64> {
    dsaae_core::rbf_kernel(&x, &y, sigma).map_err(to_py_err)
}

/// Biased (V-statistic) squared MMD under a bandwidth mixture.
#[pyfunction]
fn mmd2_biased(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>, sigmas: Vec<f64>) -> PyResult<f64> {
    let spec = KernelSpec::new(sigmas).map_err(to_py_err)?;
    dsaae_core::mmd2_biased(&matrix_from_rows(x)?, &matrix_from_rows(y)?, &spec)
        .map_err(to_py_err)
}

/// Unbiased (U-statistic) squared MMD; needs two rows per set.
#[pyfunction]
fn mmd2_unbiased(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>, sigmas: Vec<f64>) -> PyResult<f64> {
    let spec = KernelSpec::new(sigmas).map_err(to_py_err)?;
    dsaae_core::mmd2_unbiased(&matrix_from_rows(x)?, &matrix_from_rows(y)?, &spec)
        .map_err(to_py_err)
}

/// Synthetic 2-D dataset (`gaussian_mixture_8` or `two_moons`) in `[0,1]^2`;
/// returns `(rows, labels)`.
#[pyfunction]
fn make_toy_2d(kind: &str, n: usize, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<u8>)> {
    let ds = dsaae_core::make_toy_2d(ToyKind::parse(kind).map_err(to_py_err)?, n, seed)
        .map_err(to_py_err)?;
    let labels = ds.labels.clone().unwrap_or_default();
    Ok((matrix_to_rows(&ds.images), labels))
}

/// Grid bandwidth maximizing mean validation log density.
#[pyfunction]
fn select_bandwidth(
    centers: Vec<Vec<f64>>,
    validation: Vec<Vec<f64>>,
    grid: Vec<f64>,
) -> PyResult<f64> {
    dsaae_core::select_bandwidth(
        &matrix_from_rows(centers)?,
        &matrix_from_rows(validation)?,
        &grid,
    )
    .map_err(to_py_err)
}

/// Twenty log-spaced bandwidths in [0.01, 1].
#[pyfunction]
fn default_bandwidth_grid() -> Vec<f64> {
    dsaae_core::default_bandwidth_grid()
}

/// Random Fourier feature map for the Gaussian RBF kernel.
#[pyclass(name = "FeatureMap")]
struct PyFeatureMap {
    inner: RandomFeatureMap,
}

#[pymethods]
impl PyFeatureMap {
    #[new]
    fn new(num_features: usize, input_dim: usize, sigma: f64, seed: u64) -> PyResult<Self> {
        Ok(PyFeatureMap {
            inner: RandomFeatureMap::sample(num_features, input_dim, sigma, seed)
                .map_err(to_py_err)?,
        })
    }

    /// Feature matrix: one row of length `2 * num_features` per input row.
    fn features(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let m = self.inner.features(&matrix_from_rows(rows)?).map_err(to_py_err)?;
        Ok(matrix_to_rows(&m))
    }

    /// Monte-Carlo estimate of the RBF kernel.
    fn approx_kernel(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inner.approx_kernel(&x, &y).map_err(to_py_err)
    }

    #[getter]
    fn feature_dim(&self) -> usize {
        self.inner.feature_dim()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma()
    }

    fn __repr__(&self) -> String {
        let d = self.inner.descriptor();
        format!(
            "FeatureMap(num_features={}, input_dim={}, sigma={}, seed={})",
            d.num_features, d.input_dim, d.sigma, d.seed
        )
    }
}

/// Parzen-window density over a set of centers.
#[pyclass(name = "ParzenModel")]
struct PyParzenModel {
    inner: ParzenModel,
}

#[pymethods]
impl PyParzenModel {
    #[new]
    fn new(centers: Vec<Vec<f64>>, sigma: f64) -> PyResult<Self> {
        Ok(PyParzenModel {
            inner: ParzenModel::new(matrix_from_rows(centers)?, sigma).map_err(to_py_err)?,
        })
    }

    fn log_density(&self, x: Vec<f64>) -> PyResult<f64> {
        dsaae_core::parzen_log_density(&self.inner, &x).map_err(to_py_err)
    }

    /// Mean and standard error of per-example log densities.
    #[pyo3(signature = (test, batch = 256))]
    fn evaluate(&self, test: Vec<Vec<f64>>, batch: usize) -> PyResult<(f64, f64)> {
        dsaae_core::evaluate_loglik(&self.inner, &matrix_from_rows(test)?, batch)
            .map_err(to_py_err)
    }
}

/// Training hyperparameters. Defaults follow the chosen variant; `lambda_`
/// is the prior-matching weight.
#[pyclass(name = "TrainConfig", skip_from_py_object)]
#[derive(Clone)]
struct PyTrainConfig {
    inner: TrainConfig,
}

#[pymethods]
impl PyTrainConfig {
    #[new]
    #[pyo3(signature = (
        variant = "ds_aae",
        *,
        latent_dim = None,
        hidden_dims = None,
        batch_size = None,
        epochs = None,
        recon_lr = None,
        adv_lr = None,
        dropout_input = None,
        lambda_ = None,
        mmd_sigmas = None,
        rf_sigma = None,
        rf_count = None,
        adversary_steps = None,
        ascent_lr = None,
        l2_decay = None,
        seed = None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        variant: &str,
        latent_dim: Option<usize>,
        hidden_dims: Option<Vec<usize>>,
        batch_size: Option<usize>,
        epochs: Option<usize>,
        recon_lr: Option<f64>,
        adv_lr: Option<f64>,
        dropout_input: Option<f64>,
        lambda_: Option<f64>,
        mmd_sigmas: Option<Vec<f64>>,
        rf_sigma: Option<f64>,
        rf_count: Option<usize>,
        adversary_steps: Option<usize>,
        ascent_lr: Option<f64>,
        l2_decay: Option<f64>,
        seed: Option<u64>,
    ) -> PyResult<Self> {
        let mut cfg = TrainConfig::defaults(Variant::parse(variant).map_err(to_py_err)?);
        if let Some(v) = latent_dim {
            cfg.latent_dim = v;
        }
        if let Some(v) = hidden_dims {
            cfg.hidden_dims = v;
        }
        if let Some(v) = batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = epochs {
            cfg.epochs = v;
        }
        if let Some(v) = recon_lr {
            cfg.recon_lr = v;
        }
        if let Some(v) = adv_lr {
            cfg.adv_lr = v;
        }
        if let Some(v) = dropout_input {
            cfg.dropout_input = v;
        }
        if let Some(v) = lambda_ {
            cfg.lambda = v;
        }
        if let Some(v) = mmd_sigmas {
            cfg.mmd_sigmas = v;
        }
        if let Some(v) = rf_sigma {
            cfg.rf_sigma = v;
        }
        if let Some(v) = rf_count {
            cfg.rf_count = v;
        }
        if let Some(v) = adversary_steps {
            cfg.adversary_steps = v;
        }
        if let Some(v) = ascent_lr {
            cfg.ascent_lr = v;
        }
        if let Some(v) = l2_decay {
            cfg.l2_decay = v;
        }
        if let Some(v) = seed {
            cfg.seeds = Seeds::from_master(v);
        }
        cfg.validate().map_err(to_py_err)?;
        Ok(PyTrainConfig { inner: cfg })
    }

    fn __repr__(&self) -> String {
        format!(
            "TrainConfig(variant='{}', latent_dim={}, hidden_dims={:?}, batch_size={}, epochs={})",
            self.inner.variant.name(),
            self.inner.latent_dim,
            self.inner.hidden_dims,
            self.inner.batch_size,
            self.inner.epochs
        )
    }
}

/// A trained encoder/decoder pair.
#[pyclass(name = "Autoencoder")]
struct PyAutoencoder {
    checkpoint: Checkpoint,
}

#[pymethods]
impl PyAutoencoder {
    /// Eval-mode latent codes for a batch of rows.
    fn encode(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let codes = mlp_forward_eval(&self.checkpoint.encoder, &matrix_from_rows(rows)?)
            .map_err(to_py_err)?;
        Ok(matrix_to_rows(&codes))
    }

    /// Decoded reconstructions of latent codes.
    fn decode(&self, codes: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let out = mlp_forward_eval(&self.checkpoint.decoder, &matrix_from_rows(codes)?)
            .map_err(to_py_err)?;
        Ok(matrix_to_rows(&out))
    }

    /// `n` decoded draws from the latent prior.
    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let prior = PriorSpec::new(self.checkpoint.latent_dim).map_err(to_py_err)?;
        let out =
            generate_samples(&self.checkpoint.decoder, &prior, n, seed).map_err(to_py_err)?;
        Ok(matrix_to_rows(&out))
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.checkpoint.save(&path).map_err(to_py_err)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyAutoencoder {
            checkpoint: Checkpoint::load(&path).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.checkpoint.variant.name()
    }

    #[getter]
    fn latent_dim(&self) -> usize {
        self.checkpoint.latent_dim
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.checkpoint.input_dim()
    }

    fn __repr__(&self) -> String {
        format!(
            "Autoencoder(variant='{}', input_dim={}, latent_dim={})",
            self.variant(),
            self.input_dim(),
            self.latent_dim()
        )
    }
}

/// Per-epoch `(epoch, recon_loss, discrepancy)` rows.
type EpochMetrics = Vec<(usize, f64, f64)>;

/// Trains on in-memory rows (values in [0, 1]); returns the model and the
/// per-epoch `(epoch, recon_loss, discrepancy)` metrics.
#[pyfunction]
fn train(
    py: Python<'_>,
    config: &PyTrainConfig,
    data: Vec<Vec<f64>>,
) -> PyResult<(PyAutoencoder, EpochMetrics)> {
    let images = matrix_from_rows(data)?;
    let cfg = config.inner.clone();
    let (checkpoint, rows) = py
        .detach(move || -> dsaae_core::Result<_> {
            let dataset = dsaae_core::Dataset {
                images,
                labels: None,
                image_shape: None,
                affine: None,
            };
            let mut trainer = Trainer::new(cfg, dataset.dim())?;
            let rows = trainer.fit(&dataset)?;
            Ok((Checkpoint::from_trainer(&trainer), rows))
        })
        .map_err(to_py_err)?;
    Ok((
        PyAutoencoder { checkpoint },
        rows.iter()
            .map(|r| (r.epoch, r.recon_loss, r.discrepancy))
            .collect(),
    ))
}

#[pymodule]
fn dsaae_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(rbf_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(mmd2_biased, m)?)?;
    m.add_function(wrap_pyfunction!(mmd2_unbiased, m)?)?;
    m.add_function(wrap_pyfunction!(make_toy_2d, m)?)?;
    m.add_function(wrap_pyfunction!(select_bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(default_bandwidth_grid, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_class::<PyFeatureMap>()?;
    m.add_class::<PyParzenModel>()?;
    m.add_class::<PyTrainConfig>()?;
    m.add_class::<PyAutoencoder>()?;
    Ok(())
}

//! Subcommand implementations. Every command resolves its configuration
//! first and validates before touching the output directory, so a rejected
//! run leaves nothing behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dsaae_core::{
    default_bandwidth_grid, evaluate_loglik, generate_samples, load_idx, make_toy_2d,
    mlp_forward_eval, select_bandwidth, Checkpoint, DataConfig, DataSource, Dataset, Error,
    Matrix, MlpParams, ParzenModel, PriorSpec, Result, RunConfig, Trainer,
};

/// Seed offset separating the synthetic test split from the training draw.
const TOY_TEST_SEED_TAG: u64 = 0x7E57_0000_0000_0000;

/// Encoder batch size for bulk eval-mode passes.
const ENCODE_CHUNK: usize = 1024;

pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let out = require_out(cfg)?;
    let data = load_train_data(&cfg.data)?;
    let (train_data, _validation) = data.split_tail(cfg.data.validation_fraction)?;
    if cfg.train.batch_size > train_data.len() {
        return Err(Error::validation(format!(
            "batch size {} exceeds the {} training examples",
            cfg.train.batch_size,
            train_data.len()
        )));
    }

    fs::create_dir_all(&out)?;
    fs::write(
        out.join("resolved_config.txt"),
        cfg.to_kv_lines().join("\n") + "\n",
    )?;

    let mut trainer = Trainer::new(cfg.train.clone(), train_data.dim())?;
    let metrics_path = out.join("metrics.csv");
    let mut metrics = fs::File::create(&metrics_path)?;
    writeln!(metrics, "epoch,recon_loss,discrepancy,wall_time_s")?;

    let started = Instant::now();
    for epoch in 1..=cfg.train.epochs {
        let row = trainer.run_epoch(&train_data, epoch)?;
        writeln!(
            metrics,
            "{},{},{},{}",
            row.epoch, row.recon_loss, row.discrepancy, row.wall_time_s
        )?;
        metrics.flush()?;
        println!(
            "epoch {}/{}: recon {:.4} discrepancy {:.6} ({:.1}s elapsed)",
            epoch,
            cfg.train.epochs,
            row.recon_loss,
            row.discrepancy,
            started.elapsed().as_secs_f64()
        );
        if cfg.train.checkpoint_every > 0 && epoch.is_multiple_of(cfg.train.checkpoint_every) {
            Checkpoint::from_trainer(&trainer).save(&out.join(format!(
                "checkpoint_epoch{epoch}.dsae"
            )))?;
        }
    }
    Checkpoint::from_trainer(&trainer).save(&out.join("model.dsae"))?;
    println!(
        "trained {} for {} epochs in {:.1}s; model at {}",
        cfg.train.variant.name(),
        cfg.train.epochs,
        started.elapsed().as_secs_f64(),
        out.join("model.dsae").display()
    );
    Ok(())
}

pub fn cmd_sample(cfg: &RunConfig, checkpoint_path: &Path) -> Result<()> {
    cfg.validate()?;
    if cfg.sample.n == 0 {
        return Err(Error::validation("sample.n must be at least 1"));
    }
    let out = require_out(cfg)?;
    let ck = Checkpoint::load(checkpoint_path)?;
    let prior = PriorSpec::new(ck.latent_dim)?;
    let samples = generate_samples(&ck.decoder, &prior, cfg.sample.n, cfg.sample.seed)?;

    fs::create_dir_all(&out)?;
    write_matrix_csv(&out.join("samples.csv"), &samples)?;
    let side = (samples.cols() as f64).sqrt() as usize;
    if side * side == samples.cols() {
        write_pgm_grid(
            &out.join("samples.pgm"),
            &samples,
            side,
            cfg.sample.grid_width,
        )?;
        println!(
            "wrote {} samples to samples.csv and a {}-wide PGM grid",
            cfg.sample.n, cfg.sample.grid_width
        );
    } else {
        println!(
            "wrote {} samples to samples.csv (dimension {} is not square, no PGM grid)",
            cfg.sample.n,
            samples.cols()
        );
    }
    Ok(())
}

pub fn cmd_eval_parzen(cfg: &RunConfig, checkpoint_path: &Path) -> Result<()> {
    cfg.validate()?;
    if cfg.eval.samples == 0 {
        return Err(Error::validation("eval.samples must be at least 1"));
    }
    let out = require_out(cfg)?;
    let ck = Checkpoint::load(checkpoint_path)?;
    let prior = PriorSpec::new(ck.latent_dim)?;

    let train = load_train_data(&cfg.data)?;
    let (_, validation) = train.split_tail(cfg.data.validation_fraction)?;
    let test = load_test_data(&cfg.data)?;
    if test.dim() != ck.input_dim() {
        return Err(Error::shape(format!(
            "test dimension {} vs model input {}",
            test.dim(),
            ck.input_dim()
        )));
    }

    println!(
        "drawing {} samples from the model (seed {})",
        cfg.eval.samples, cfg.eval.sample_seed
    );
    let centers = generate_samples(&ck.decoder, &prior, cfg.eval.samples, cfg.eval.sample_seed)?;
    let grid = cfg
        .eval
        .bandwidth_grid
        .clone()
        .unwrap_or_else(default_bandwidth_grid);
    let sigma = select_bandwidth(&centers, &validation.images, &grid)?;
    let model = ParzenModel::new(centers, sigma)?;
    let (mean, stderr) = evaluate_loglik(&model, &test.images, 256)?;

    fs::create_dir_all(&out)?;
    let report = out.join("parzen.csv");
    let mut f = fs::File::create(&report)?;
    writeln!(f, "variant,n_centers,sigma,mean_loglik,stderr")?;
    writeln!(
        f,
        "{},{},{},{},{}",
        ck.variant.name(),
        cfg.eval.samples,
        sigma,
        mean,
        stderr
    )?;
    println!(
        "variant={} centers={} sigma={} mean_loglik={:.4} stderr={:.4}",
        ck.variant.name(),
        cfg.eval.samples,
        sigma,
        mean,
        stderr
    );
    Ok(())
}

pub fn cmd_dump_latent(cfg: &RunConfig, checkpoint_path: &Path) -> Result<()> {
    cfg.validate()?;
    let out = require_out(cfg)?;
    let ck = Checkpoint::load(checkpoint_path)?;
    let data = load_test_data(&cfg.data)?;
    if data.dim() != ck.input_dim() {
        return Err(Error::shape(format!(
            "data dimension {} vs model input {}",
            data.dim(),
            ck.input_dim()
        )));
    }
    let codes = encode_chunked(&ck.encoder, &data.images)?;

    fs::create_dir_all(&out)?;
    let path = out.join("latent.csv");
    let mut f = fs::File::create(&path)?;
    let header: Vec<String> = (0..codes.cols()).map(|j| format!("z{j}")).collect();
    match &data.labels {
        Some(labels) => {
            writeln!(f, "{},label", header.join(","))?;
            for (i, label) in labels.iter().enumerate() {
                writeln!(f, "{},{}", row_csv(codes.row(i)), label)?;
            }
        }
        None => {
            writeln!(f, "{}", header.join(","))?;
            for i in 0..codes.rows() {
                writeln!(f, "{}", row_csv(codes.row(i)))?;
            }
        }
    }
    println!("wrote {} latent rows to {}", codes.rows(), path.display());
    Ok(())
}

fn require_out(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.out_dir
        .clone()
        .ok_or_else(|| Error::validation("no output directory (set --out or out.dir)"))
}

fn load_train_data(data: &DataConfig) -> Result<Dataset> {
    let ds = match data.source {
        DataSource::Toy2d => make_toy_2d(data.toy_kind, data.toy_n, toy_train_seed(data))?,
        DataSource::Idx => {
            let images = data.train_images.as_ref().ok_or_else(|| {
                Error::config("data.train_images is required for data.source=idx".to_string())
            })?;
            load_idx(images, data.train_labels.as_deref())?
        }
    };
    if data.limit > 0 {
        ds.take(data.limit)
    } else {
        Ok(ds)
    }
}

fn load_test_data(data: &DataConfig) -> Result<Dataset> {
    match data.source {
        DataSource::Toy2d => make_toy_2d(
            data.toy_kind,
            data.toy_n,
            toy_train_seed(data) ^ TOY_TEST_SEED_TAG,
        ),
        DataSource::Idx => {
            let images = data.test_images.as_ref().ok_or_else(|| {
                Error::config("data.test_images is required for data.source=idx".to_string())
            })?;
            load_idx(images, data.test_labels.as_deref())
        }
    }
}

/// Synthetic training data is drawn from a fixed seed so that every command
/// sees the same dataset for the same configuration.
fn toy_train_seed(_data: &DataConfig) -> u64 {
    0x7031_D474
}

fn encode_chunked(encoder: &MlpParams, images: &Matrix) -> Result<Matrix> {
    let mut out = Matrix::zeros(images.rows(), encoder.output_dim());
    let mut start = 0;
    while start < images.rows() {
        let end = (start + ENCODE_CHUNK).min(images.rows());
        let idx: Vec<usize> = (start..end).collect();
        let chunk = images.select_rows(&idx)?;
        let codes = mlp_forward_eval(encoder, &chunk)?;
        for (offset, i) in (start..end).enumerate() {
            out.row_mut(i).copy_from_slice(codes.row(offset));
        }
        start = end;
    }
    Ok(out)
}

fn row_csv(row: &[f64]) -> String {
    row.iter()
        .map(|v| format!("{v:.6}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for i in 0..m.rows() {
        writeln!(f, "{}", row_csv(m.row(i)))?;
    }
    Ok(())
}

/// Binary PGM (P5) grid of square images: `grid_width` images per row,
/// missing cells black, pixels `round(255 * v)`.
fn write_pgm_grid(path: &Path, samples: &Matrix, side: usize, grid_width: usize) -> Result<()> {
    let n = samples.rows();
    let grid_height = n.div_ceil(grid_width);
    let width = grid_width * side;
    let height = grid_height * side;
    let mut payload = vec![0u8; width * height];
    for (idx, _) in (0..n).enumerate() {
        let cell_row = idx / grid_width;
        let cell_col = idx % grid_width;
        let sample = samples.row(idx);
        for py in 0..side {
            for px in 0..side {
                let v = sample[py * side + px];
                let byte = (v * 255.0).round().clamp(0.0, 255.0) as u8;
                payload[(cell_row * side + py) * width + cell_col * side + px] = byte;
            }
        }
    }
    let mut f = fs::File::create(path)?;
    write!(f, "P5\n{width} {height}\n255\n")?;
    f.write_all(&payload)?;
    Ok(())
}

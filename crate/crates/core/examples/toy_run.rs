//! Trains one variant on the 8-Gaussian toy dataset and reports how close
//! the latent codes get to the standard-normal prior, measured by an
//! external single-bandwidth MMD^2 meter.
//!
//! Usage: `cargo run --release -p dsaae-core --example toy_run -- \
//!     variant=ds_aae steps=5000 seed=1 [key=value ...]`

use dsaae_core::{
    make_toy_2d, mlp_forward_eval, mmd2_biased, sample_prior, BatchIterator, KernelSpec,
    PriorSpec, Seeds, ToyKind, TrainConfig, Trainer, Variant,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut variant = Variant::DsAae;
    let mut steps: usize = 5000;
    let mut seed: u64 = 1;
    let mut cfg_overrides: Vec<(String, f64)> = Vec::new();
    for arg in std::env::args().skip(1) {
        let (key, value) = arg.split_once('=').expect("arguments are key=value");
        match key {
            "variant" => variant = Variant::parse(value).unwrap(),
            "steps" => steps = value.parse().unwrap(),
            "seed" => seed = value.parse().unwrap(),
            _ => cfg_overrides.push((key.to_string(), value.parse().unwrap())),
        }
    }

    let mut cfg = TrainConfig::defaults(variant);
    cfg.latent_dim = 2;
    cfg.hidden_dims = vec![64, 64];
    cfg.batch_size = 500;
    cfg.mmd_sigmas = vec![1.0];
    cfg.seeds = Seeds::from_master(seed);
    for (key, value) in &cfg_overrides {
        match key.as_str() {
            "lambda" => cfg.lambda = *value,
            "batch" => cfg.batch_size = *value as usize,
            "ascent_lr" => cfg.ascent_lr = *value,
            "adv_lr" => cfg.adv_lr = *value,
            "recon_lr" => cfg.recon_lr = *value,
            "l2_decay" => cfg.l2_decay = *value,
            "rf_count" => cfg.rf_count = *value as usize,
            "adversary_steps" => cfg.adversary_steps = *value as usize,
            "dropout" => cfg.dropout_input = *value,
            "sigma" => cfg.mmd_sigmas = vec![*value],
            other => panic!("unknown key {other}"),
        }
    }

    let data = make_toy_2d(ToyKind::GaussianMixture8, 8000, cfg.seeds.data).unwrap();
    let mut trainer = Trainer::new(cfg.clone(), 2).unwrap();

    let meter = KernelSpec::single(1.0).unwrap();
    let prior = PriorSpec::new(2).unwrap();
    let mut meter_rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    let meter_batch = data.images.select_rows(&(0..500).collect::<Vec<_>>()).unwrap();
    let mut measure = |trainer: &Trainer, rng: &mut ChaCha8Rng| -> f64 {
        let codes = mlp_forward_eval(&trainer.model().encoder, &meter_batch).unwrap();
        let prior_batch = sample_prior(&prior, 500, rng).unwrap();
        mmd2_biased(&codes, &prior_batch, &meter).unwrap()
    };

    let initial = measure(&trainer, &mut meter_rng);
    println!("step 0: external mmd2 = {initial:.5}");
    let it = BatchIterator::new(&data, cfg.batch_size, cfg.seeds.data).unwrap();
    let mut done = 0usize;
    let mut epoch = 0u64;
    let started = std::time::Instant::now();
    'outer: loop {
        for batch in it.epoch(epoch) {
            let m = trainer.train_step(&batch).unwrap();
            done += 1;
            if done % 500 == 0 {
                let external = measure(&trainer, &mut meter_rng);
                println!(
                    "step {done}: recon {:.4} discrepancy {:.6} external mmd2 {:.5} ({:.1}s)",
                    m.recon_loss,
                    m.discrepancy,
                    external,
                    started.elapsed().as_secs_f64()
                );
            }
            if done >= steps {
                break 'outer;
            }
        }
        epoch += 1;
    }
    let fin = measure(&trainer, &mut meter_rng);
    println!(
        "final: external mmd2 = {fin:.5} (initial {initial:.5}) after {done} steps in {:.1}s",
        started.elapsed().as_secs_f64()
    );
}

//! Desk-scale training dynamics on the synthetic 2-D datasets.

use dsaae_core::{make_toy_2d, Seeds, ToyKind, TrainConfig, Trainer, Variant};

fn small_config(variant: Variant, master_seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig::defaults(variant);
    cfg.latent_dim = 2;
    cfg.hidden_dims = vec![32, 32];
    cfg.batch_size = 100;
    cfg.epochs = 10;
    cfg.mmd_sigmas = vec![0.5, 1.0, 2.0];
    cfg.rf_count = 128;
    cfg.lambda = 1.0;
    cfg.seeds = Seeds::from_master(master_seed);
    cfg
}

#[test]
fn mmd_ae_total_loss_decreases_over_ten_epochs() {
    for seed in [1u64, 2, 3] {
        let data = make_toy_2d(ToyKind::GaussianMixture8, 1000, 100 + seed).unwrap();
        let cfg = small_config(Variant::MmdAe, seed);
        let lambda = cfg.lambda;
        let mut trainer = Trainer::new(cfg, 2).unwrap();
        let rows = trainer.fit(&data).unwrap();
        let total = |r: &dsaae_core::MetricsRow| r.recon_loss + lambda * r.discrepancy;
        assert!(
            total(&rows[9]) < total(&rows[0]),
            "seed {seed}: epoch 10 loss {} vs epoch 1 loss {}",
            total(&rows[9]),
            total(&rows[0])
        );
    }
}

#[test]
fn ds_aae_reconstruction_decreases_over_ten_epochs() {
    for seed in [1u64, 2, 3] {
        let data = make_toy_2d(ToyKind::GaussianMixture8, 1000, 200 + seed).unwrap();
        let cfg = small_config(Variant::DsAae, seed);
        let mut trainer = Trainer::new(cfg, 2).unwrap();
        let rows = trainer.fit(&data).unwrap();
        assert!(
            rows[9].recon_loss < rows[0].recon_loss,
            "seed {seed}: epoch 10 recon {} vs epoch 1 recon {}",
            rows[9].recon_loss,
            rows[0].recon_loss
        );
    }
}

#[test]
fn metrics_are_finite_and_numbered_from_one() {
    let data = make_toy_2d(ToyKind::TwoMoons, 500, 5).unwrap();
    let mut cfg = small_config(Variant::DsAae, 9);
    cfg.epochs = 3;
    let mut trainer = Trainer::new(cfg, 2).unwrap();
    let rows = trainer.fit(&data).unwrap();
    assert_eq!(rows.len(), 3);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.epoch, i + 1);
        assert!(row.recon_loss.is_finite());
        assert!(row.discrepancy.is_finite());
        assert!(row.wall_time_s.is_finite());
    }
}

#[test]
fn deterministic_metrics_flag_zeroes_wall_time() {
    let data = make_toy_2d(ToyKind::GaussianMixture8, 300, 6).unwrap();
    let mut cfg = small_config(Variant::MmdAe, 4);
    cfg.epochs = 2;
    cfg.deterministic_metrics = true;
    let rows = Trainer::new(cfg.clone(), 2).unwrap().fit(&data).unwrap();
    assert!(rows.iter().all(|r| r.wall_time_s == 0.0));
    cfg.deterministic_metrics = false;
    let rows = Trainer::new(cfg, 2).unwrap().fit(&data).unwrap();
    assert!(rows.iter().all(|r| r.wall_time_s > 0.0));
}

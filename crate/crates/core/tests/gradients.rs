//! Every analytic gradient in the crate against central finite differences.
//!
//! Fixtures whose ReLU pre-activations sit within the finite-difference
//! step of a kink are redrawn: the two-sided difference would straddle the
//! nondifferentiable point and measure nothing meaningful. Each family still
//! checks at least twenty independent instances.

mod support;

use dsaae_core::{
    bernoulli_cross_entropy, build_autoencoder, ds_generator_loss_grads, mlp_backward,
    mlp_forward_cached, mmd2_biased, mmd2_biased_grad_wrt_y, mmd_ae_loss_grads, Activation,
    AdversaryConfig, AdversaryState, Autoencoder, KernelSpec, Matrix, RandomFeatureMap,
};
use support::*;

const INSTANCES: usize = 20;
const SEED_BUDGET: u64 = 400;

/// Sum-of-outputs loss through a random 3-layer net: parameter and input
/// gradients both match finite differences.
#[test]
fn mlp_backward_matches_fd_on_random_three_layer_nets() {
    let mut checked = 0;
    let mut attempt = 0;
    while checked < INSTANCES {
        attempt += 1;
        assert!(attempt < SEED_BUDGET, "could not find enough clean fixtures");
        let mut rng = seeded(1000 + attempt);
        let params = random_small_mlp(4, &[6, 5, 3], Activation::Sigmoid, &mut rng);
        let x = randn_matrix(3, 4, &mut rng).scale(0.8);
        if !relu_margin_ok(&params, &x, RELU_MARGIN) {
            continue;
        }
        // Weighted-sum readout makes the scalar loss sensitive to every output.
        let w = randn_matrix(3, 3, &mut rng);
        let loss_of = |p: &dsaae_core::MlpParams, input: &Matrix| -> f64 {
            let (out, _) = mlp_forward_cached(p, input).unwrap();
            out.as_slice()
                .iter()
                .zip(w.as_slice())
                .map(|(o, c)| o * c)
                .sum()
        };
        let (out, cache) = mlp_forward_cached(&params, &x).unwrap();
        let g_out = w.clone();
        assert_eq!(out.shape(), g_out.shape());
        let (grads, input_grad) = mlp_backward(&params, &cache, &g_out).unwrap();

        let mut p = params.clone();
        assert_param_grads_match_fd(
            &mut p,
            &flatten_grads(&grads),
            1e-6,
            |p| loss_of(p, &x),
            &format!("mlp params attempt {attempt}"),
        );
        assert_matrix_grad_matches_fd(
            &x,
            &input_grad,
            1e-6,
            |input| loss_of(&params, input),
            &format!("mlp input attempt {attempt}"),
        );
        checked += 1;
    }
}

/// Cross-entropy chained through a sigmoid-headed MLP.
#[test]
fn cross_entropy_through_mlp_matches_fd() {
    let mut checked = 0;
    let mut attempt = 0;
    while checked < INSTANCES {
        attempt += 1;
        assert!(attempt < SEED_BUDGET, "could not find enough clean fixtures");
        let mut rng = seeded(2000 + attempt);
        let params = random_small_mlp(5, &[7, 4], Activation::Sigmoid, &mut rng);
        let x = uniform_matrix(4, 5, -1.0, 1.0, &mut rng);
        if !relu_margin_ok(&params, &x, RELU_MARGIN) {
            continue;
        }
        let target = uniform_matrix(4, 4, 0.0, 1.0, &mut rng);
        let loss_of = |p: &dsaae_core::MlpParams| -> f64 {
            let (out, _) = mlp_forward_cached(p, &x).unwrap();
            bernoulli_cross_entropy(&out, &target).unwrap().0
        };
        let (out, cache) = mlp_forward_cached(&params, &x).unwrap();
        let (_, g_pred) = bernoulli_cross_entropy(&out, &target).unwrap();
        let (grads, _) = mlp_backward(&params, &cache, &g_pred).unwrap();
        let mut p = params.clone();
        assert_param_grads_match_fd(
            &mut p,
            &flatten_grads(&grads),
            1e-6,
            loss_of,
            &format!("ce-mlp attempt {attempt}"),
        );
        checked += 1;
    }
}

/// Closed-form MMD^2 gradient with respect to the second sample set.
#[test]
fn mmd2_biased_gradient_matches_fd() {
    for seed in 0..INSTANCES as u64 {
        let mut rng = seeded(3000 + seed);
        let x = randn_matrix(5, 3, &mut rng);
        let y = randn_matrix(4, 3, &mut rng);
        let spec = KernelSpec::new(vec![0.7, 1.5]).unwrap();
        let g = mmd2_biased_grad_wrt_y(&x, &y, &spec).unwrap();
        assert_matrix_grad_matches_fd(
            &y,
            &g,
            1e-6,
            |yy| mmd2_biased(&x, yy, &spec).unwrap(),
            &format!("mmd grad seed {seed}"),
        );
    }
}

/// The adversary's generator gradient, checked as the derivative of
/// `-mean f` over the batch.
#[test]
fn generator_gradient_matches_fd() {
    for seed in 0..INSTANCES as u64 {
        let mut rng = seeded(4000 + seed);
        let map = RandomFeatureMap::sample(24, 2, 1.0, 50 + seed).unwrap();
        let dim = map.feature_dim();
        let alpha: Vec<f64> = (0..dim)
            .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
            .collect();
        let prior = randn_matrix(6, 2, &mut rng);
        let gen = randn_matrix(6, 2, &mut rng);
        let gap = dsaae_core::embedding_gap(&prior, &gen, &map).unwrap();
        let state =
            AdversaryState::from_parts(map, AdversaryConfig::default(), alpha, gap).unwrap();
        let z = randn_matrix(5, 2, &mut rng);
        let g = state.generator_grad(&z).unwrap();
        assert_matrix_grad_matches_fd(
            &z,
            &g,
            1e-6,
            |zz| {
                let vals = state.value(zz).unwrap();
                -vals.iter().sum::<f64>() / vals.len() as f64
            },
            &format!("generator grad seed {seed}"),
        );
    }
}

/// Single-frequency hand case: f(z) = 2 cos(z), so -f has derivative
/// 2 sin(z); checked against the oracle at z = pi/2.
#[test]
fn generator_gradient_hand_case() {
    let map = RandomFeatureMap::with_frequencies(
        Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
        1.0,
        0,
    )
    .unwrap();
    let state = AdversaryState::from_parts(
        map,
        AdversaryConfig::default(),
        vec![1.0, 0.0],
        vec![2.0, 0.0],
    )
    .unwrap();
    let z = Matrix::from_vec(1, 1, vec![std::f64::consts::FRAC_PI_2]).unwrap();
    let g = state.generator_grad(&z).unwrap();
    // -mean f over a single row is -f; d(-2 cos z)/dz = 2 sin z = 2 at pi/2.
    assert!((g.get(0, 0) - 2.0).abs() < 1e-12, "grad {}", g.get(0, 0));
    assert_matrix_grad_matches_fd(
        &z,
        &g,
        1e-8,
        |zz| {
            let vals = state.value(zz).unwrap();
            -vals.iter().sum::<f64>() / vals.len() as f64
        },
        "hand case",
    );
}

/// The full combined objective of one `mmd_ae` step (reconstruction plus
/// weighted MMD) against finite differences over every encoder and decoder
/// parameter, on a tiny net.
#[test]
fn combined_mmd_ae_objective_matches_fd() {
    let kernel = KernelSpec::new(vec![1.0, 2.0]).unwrap();
    let lambda = 0.75;
    let mut checked = 0;
    let mut attempt = 0;
    while checked < INSTANCES {
        attempt += 1;
        assert!(attempt < SEED_BUDGET, "could not find enough clean fixtures");
        let mut rng = seeded(5000 + attempt);
        let model = build_autoencoder(4, &[5], 2, &mut rng).unwrap();
        let batch = uniform_matrix(3, 4, 0.05, 0.95, &mut rng);
        let prior = randn_matrix(3, 2, &mut rng);
        let (codes, _) = mlp_forward_cached(&model.encoder, &batch).unwrap();
        if !relu_margin_ok(&model.encoder, &batch, RELU_MARGIN)
            || !relu_margin_ok(&model.decoder, &codes, RELU_MARGIN)
        {
            continue;
        }

        let lg = mmd_ae_loss_grads(&model, &batch, &prior, &kernel, lambda).unwrap();
        let enc_flat = flatten_grads(&lg.encoder);
        let dec_flat = flatten_grads(&lg.decoder);

        let mut enc = model.encoder.clone();
        assert_param_grads_match_fd(
            &mut enc,
            &enc_flat,
            1e-5,
            |e| {
                let m = Autoencoder {
                    encoder: e.clone(),
                    decoder: model.decoder.clone(),
                };
                mmd_ae_loss_grads(&m, &batch, &prior, &kernel, lambda)
                    .unwrap()
                    .loss
            },
            &format!("combined encoder attempt {attempt}"),
        );
        let mut dec = model.decoder.clone();
        assert_param_grads_match_fd(
            &mut dec,
            &dec_flat,
            1e-5,
            |d| {
                let m = Autoencoder {
                    encoder: model.encoder.clone(),
                    decoder: d.clone(),
                };
                mmd_ae_loss_grads(&m, &batch, &prior, &kernel, lambda)
                    .unwrap()
                    .loss
            },
            &format!("combined decoder attempt {attempt}"),
        );
        checked += 1;
    }
}

/// The generator-phase encoder gradient of the `ds_aae` step against finite
/// differences of `lambda * (-mean f(encode(x)))` with the adversary frozen.
#[test]
fn ds_generator_phase_gradient_matches_fd() {
    let lambda = 1.3;
    let mut checked = 0;
    let mut attempt = 0;
    while checked < INSTANCES {
        attempt += 1;
        assert!(attempt < SEED_BUDGET, "could not find enough clean fixtures");
        let mut rng = seeded(6000 + attempt);
        let model = build_autoencoder(4, &[5], 2, &mut rng).unwrap();
        let batch = uniform_matrix(3, 4, 0.05, 0.95, &mut rng);
        if !relu_margin_ok(&model.encoder, &batch, RELU_MARGIN) {
            continue;
        }
        let map = RandomFeatureMap::sample(16, 2, 1.0, 77 + attempt).unwrap();
        let prior = randn_matrix(6, 2, &mut rng);
        let codes = randn_matrix(6, 2, &mut rng);
        let gap = dsaae_core::embedding_gap(&prior, &codes, &map).unwrap();
        let dim = map.feature_dim();
        let alpha: Vec<f64> = (0..dim)
            .map(|_| rand::Rng::random_range(&mut rng, 0.0..1.0))
            .collect();
        let adversary =
            AdversaryState::from_parts(map, AdversaryConfig::default(), alpha, gap).unwrap();

        let (_, grads) =
            ds_generator_loss_grads(&model.encoder, &batch, &adversary, lambda).unwrap();
        let mut enc = model.encoder.clone();
        assert_param_grads_match_fd(
            &mut enc,
            &flatten_grads(&grads),
            1e-5,
            |e| ds_generator_loss_grads(e, &batch, &adversary, lambda).unwrap().0,
            &format!("ds generator attempt {attempt}"),
        );
        checked += 1;
    }
}

/// With lambda = 0 the combined gradients reduce to the plain autoencoder's.
#[test]
fn lambda_zero_removes_the_regularizer_from_gradients() {
    let mut rng = seeded(9100);
    let model = build_autoencoder(4, &[6], 2, &mut rng).unwrap();
    let batch = uniform_matrix(5, 4, 0.1, 0.9, &mut rng);
    let prior = randn_matrix(5, 2, &mut rng);
    let kernel = KernelSpec::single(1.0).unwrap();

    let plain = mmd_ae_loss_grads(&model, &batch, &prior, &kernel, 0.0).unwrap();
    // Recompute the pure reconstruction gradients by hand.
    let (codes, cache_e) = mlp_forward_cached(&model.encoder, &batch).unwrap();
    let (x_hat, cache_d) = mlp_forward_cached(&model.decoder, &codes).unwrap();
    let (_, g_pred) = bernoulli_cross_entropy(&x_hat, &batch).unwrap();
    let (dec_grads, g_z) = mlp_backward(&model.decoder, &cache_d, &g_pred).unwrap();
    let (enc_grads, _) = mlp_backward(&model.encoder, &cache_e, &g_z).unwrap();

    for (a, b) in flatten_grads(&plain.encoder)
        .iter()
        .flatten()
        .zip(flatten_grads(&enc_grads).iter().flatten())
    {
        assert!((a - b).abs() <= 1e-12);
    }
    for (a, b) in flatten_grads(&plain.decoder)
        .iter()
        .flatten()
        .zip(flatten_grads(&dec_grads).iter().flatten())
    {
        assert!((a - b).abs() <= 1e-12);
    }
    assert_eq!(plain.discrepancy, 0.0);
}

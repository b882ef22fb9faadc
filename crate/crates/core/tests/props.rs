//! Property tests over randomly generated inputs.

use proptest::collection::vec as pvec;
use proptest::prelude::*;

use dsaae_core::{
    dataset_to_idx_bytes, load_idx, mmd2_biased, mmd2_unbiased, AdamParams, AdamState,
    BatchIterator, Dataset, KernelSpec, Matrix, ParzenModel, RandomFeatureMap,
};

fn small_matrix(rows: std::ops::RangeInclusive<usize>, cols: usize) -> impl Strategy<Value = Matrix> {
    rows.prop_flat_map(move |r| {
        pvec(-5.0f64..5.0, r * cols)
            .prop_map(move |data| Matrix::from_vec(r, cols, data).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn biased_mmd_is_nonnegative_and_symmetric(
        x in small_matrix(1..=8, 2),
        y in small_matrix(1..=8, 2),
        sigma in 0.2f64..4.0,
    ) {
        let spec = KernelSpec::single(sigma).unwrap();
        let xy = mmd2_biased(&x, &y, &spec).unwrap();
        let yx = mmd2_biased(&y, &x, &spec).unwrap();
        prop_assert!(xy >= -1e-12);
        prop_assert!((xy - yx).abs() < 1e-12);
    }

    #[test]
    fn biased_mmd_vanishes_on_identical_multisets(
        x in small_matrix(1..=8, 3),
        sigma in 0.2f64..4.0,
    ) {
        let spec = KernelSpec::single(sigma).unwrap();
        let v = mmd2_biased(&x, &x.clone(), &spec).unwrap();
        prop_assert!(v.abs() <= 1e-12, "value {v}");
    }

    #[test]
    fn mixture_estimators_add_over_bandwidths(
        x in small_matrix(2..=6, 2),
        y in small_matrix(2..=6, 2),
        s1 in 0.3f64..2.0,
        s2 in 2.0f64..8.0,
    ) {
        let mix = KernelSpec::new(vec![s1, s2]).unwrap();
        let total = mmd2_biased(&x, &y, &mix).unwrap();
        let parts = mmd2_biased(&x, &y, &KernelSpec::single(s1).unwrap()).unwrap()
            + mmd2_biased(&x, &y, &KernelSpec::single(s2).unwrap()).unwrap();
        prop_assert!((total - parts).abs() < 1e-12);
        let total_u = mmd2_unbiased(&x, &y, &mix).unwrap();
        let parts_u = mmd2_unbiased(&x, &y, &KernelSpec::single(s1).unwrap()).unwrap()
            + mmd2_unbiased(&x, &y, &KernelSpec::single(s2).unwrap()).unwrap();
        prop_assert!((total_u - parts_u).abs() < 1e-12);
    }

    #[test]
    fn feature_rows_have_unit_norm_and_bounded_products(
        seed in 0u64..1000,
        m in 1usize..64,
        x in pvec(-10.0f64..10.0, 3),
        y in pvec(-10.0f64..10.0, 3),
    ) {
        let map = RandomFeatureMap::sample(m, 3, 1.0, seed).unwrap();
        let phi = map.features_row(&x).unwrap();
        let norm2: f64 = phi.iter().map(|v| v * v).sum();
        prop_assert!((norm2 - 1.0).abs() < 1e-12);
        let k = map.approx_kernel(&x, &y).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&k));
    }

    #[test]
    fn adam_steps_stay_within_the_momentum_bound(
        grads in pvec(-1e4f64..1e4, 1..30),
        lr in 1e-4f64..0.5,
    ) {
        let hp = AdamParams::with_lr(lr);
        let bound = hp.lr / (1.0 - hp.beta1) * 1.0001;
        let mut adam = AdamState::new(hp);
        let mut p = vec![0.0f64];
        let mut prev = 0.0;
        for g in grads {
            adam.step(&mut [&mut p], &[&[g]]).unwrap();
            prop_assert!((p[0] - prev).abs() <= bound);
            prev = p[0];
        }
    }

    #[test]
    fn parzen_log_density_is_finite_under_extreme_scales(
        offset in 0.0f64..1e3,
        sigma in 1e-3f64..1.0,
    ) {
        // Distance-to-bandwidth ratios up to 1e6 on the squared scale.
        let model = ParzenModel::new(Matrix::from_vec(2, 1, vec![0.0, 0.01]).unwrap(), sigma).unwrap();
        let v = dsaae_core::parzen_log_density(&model, &[offset]).unwrap();
        prop_assert!(v.is_finite());
    }

    #[test]
    fn epoch_batches_cover_a_prefix_multiset_of_the_dataset(
        n in 4usize..40,
        batch in 2usize..8,
        seed in 0u64..500,
    ) {
        prop_assume!(batch <= n);
        let images = Matrix::from_fn(n, 2, |i, j| (i * 2 + j) as f64);
        let ds = Dataset { images, labels: None, image_shape: None, affine: None };
        let it = BatchIterator::new(&ds, batch, seed).unwrap();
        let mut seen: Vec<usize> = Vec::new();
        for b in it.epoch(3) {
            for i in 0..b.rows() {
                seen.push(b.get(i, 0) as usize / 2);
            }
        }
        prop_assert_eq!(seen.len(), (n / batch) * batch);
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), (n / batch) * batch, "a row was emitted twice");
    }

    #[test]
    fn idx_serialization_round_trips(
        pixels in pvec(0u8..=255, 12..60),
        with_labels in any::<bool>(),
    ) {
        let n = pixels.len() / 12;
        let pixels = &pixels[..n * 12];
        let data: Vec<f64> = pixels.iter().map(|&b| b as f64 / 255.0).collect();
        let ds = Dataset {
            images: Matrix::from_vec(n, 12, data).unwrap(),
            labels: with_labels.then(|| (0..n as u8).map(|i| i % 10).collect()),
            image_shape: Some((3, 4)),
            affine: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("i.idx");
        let lbl = dir.path().join("l.idx");
        dsaae_core::write_idx(&ds, &img, ds.labels.as_ref().map(|_| lbl.as_path())).unwrap();
        let back = load_idx(&img, ds.labels.as_ref().map(|_| lbl.as_path())).unwrap();
        prop_assert_eq!(&ds, &back);
        // The byte image is reproducible too.
        let (bytes, _) = dataset_to_idx_bytes(&back).unwrap();
        prop_assert_eq!(bytes, std::fs::read(&img).unwrap());
    }
}

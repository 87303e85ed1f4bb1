use ictc_core::ctc::ctc_loss;
use ictc_core::data::LabelSequence;
use ictc_core::fusion::{
    adaptive_affine, dal_fuse, fused_ctc_loss, pmp_fuse, pmp_transform, source_map, AedStepGrid, FusionConfig,
    FusionMode,
};
use ictc_core::numerics::{argmax, row_softmax, Matrix, RandomStream};
use proptest::prelude::*;

fn gaussian(rows: usize, cols: usize, rng: &mut RandomStream) -> Matrix<f64> {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| 2.0 * rng.gaussian()).collect()).unwrap()
}

#[test]
fn square_map_is_not_identity() {
    assert_eq!(source_map(3, 3).unwrap(), vec![0, 0, 1]);
}

#[test]
fn source_map_covers_every_frame() {
    for p in 1..=50 {
        for l in 1..=p {
            let m = source_map(l, p).unwrap();
            assert_eq!(m.len(), p, "L={l} P={p}");
            assert_eq!(m[0], 0);
            assert!(m.windows(2).all(|w| w[0] <= w[1] && w[1] - w[0] <= 1));
            assert!(m.iter().all(|&s| s < l));
            let r = p / l + 1;
            assert!(m.iter().enumerate().all(|(t, &s)| s == t / r));
        }
    }
}

#[test]
fn dal_zero_lambda_loss_is_plain_ctc() {
    let mut rng = RandomStream::new(41);
    for _ in 0..50 {
        let t = rng.int_in(3, 8);
        let l = rng.int_in(1, 3);
        let logits = gaussian(t, 5, &mut rng);
        let aed = AedStepGrid::new(gaussian(l, 5, &mut rng)).unwrap();
        let labels = LabelSequence::new((0..l).map(|_| rng.int_in(1, 4)).collect());
        let cfg = FusionConfig { mode: FusionMode::Dal, lambda: 0.0, detach_aed: false };
        let Ok(plain) = ctc_loss(&logits, &labels, 0) else {
            continue;
        };
        let fused = fused_ctc_loss(&logits, &aed, &labels, 0, &cfg).unwrap();
        assert!((fused.loss - plain.loss).abs() <= 1e-12);
        assert!(fused.grad_ctc_logits.max_abs_diff(&plain.grad_logits) <= 1e-12);
    }
}

proptest! {
    #[test]
    fn dal_is_linear_in_lambda(
        seed in 0u64..100_000,
        l in 1usize..5,
        extra in 0usize..6,
        lam1 in 0.0f64..2.0,
        lam2 in 0.0f64..2.0,
    ) {
        let mut rng = RandomStream::new(seed);
        let p = l + extra;
        let ctc = gaussian(p, 4, &mut rng);
        let e = adaptive_affine(&AedStepGrid::new(gaussian(l, 4, &mut rng)).unwrap(), p).unwrap();
        let a = dal_fuse(&ctc, &e, lam1).unwrap();
        let b = dal_fuse(&ctc, &e, lam2).unwrap();
        let ab = dal_fuse(&ctc, &e, lam1 + lam2).unwrap();
        for i in 0..p * 4 {
            let lhs = a.as_slice()[i] + b.as_slice()[i] - ctc.as_slice()[i];
            prop_assert!((lhs - ab.as_slice()[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn pmp_transform_is_idempotent_and_keeps_argmax(row in prop::collection::vec(0.0f64..1.0, 1..8)) {
        let once = pmp_transform(&row);
        prop_assert_eq!(pmp_transform(&once), once.clone());
        prop_assert_eq!(argmax(&once), argmax(&row));
        prop_assert_eq!(once.iter().filter(|&&x| x != 0.0).count() <= 1, true);
    }

    #[test]
    fn pmp_fuse_rows_are_distributions(
        seed in 0u64..100_000,
        l in 1usize..5,
        extra in 0usize..6,
        lambda in 0.0f64..3.0,
    ) {
        let mut rng = RandomStream::new(seed);
        let p = l + extra;
        let ctc = gaussian(p, 5, &mut rng);
        let aed = gaussian(l, 5, &mut rng);
        let e = adaptive_affine(&AedStepGrid::new(aed).unwrap(), p).unwrap();
        let fused = pmp_fuse(&ctc, &e, lambda).unwrap();
        let ctc_probs = row_softmax(&ctc);
        let aed_probs = row_softmax(&e.grid);
        for t in 0..p {
            let probs: Vec<f64> = fused.row(t).iter().map(|x| x.exp()).collect();
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            // Only the AED argmax entry gains mass relative to the CTC row.
            let k = argmax(aed_probs.row(t));
            for (i, &q) in probs.iter().enumerate() {
                if i != k {
                    prop_assert!(q <= ctc_probs.row(t)[i] + 1e-12);
                }
            }
            let winner = argmax(&probs);
            prop_assert!(winner == argmax(ctc_probs.row(t)) || winner == k);
        }
    }
}

//! Property tests of the library invariants against direct recomputation.

use abstain::methods::{loss_selnet, sat_update_targets, SatState};
use abstain::metrics::{con_sat, rel_err, risk_coverage_curve, selective_error, CONSAT_TOLERANCES};
use abstain::nn::{softmax, Matrix};
use abstain::stats::{friedman, rank_row};
use proptest::prelude::*;

fn prob_rows(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-4.0f64..4.0, rows * cols).prop_map(move |v| softmax(&Matrix::from_vec(rows, cols, v).unwrap()).unwrap())
}

proptest! {
    #[test]
    fn sat_targets_stay_probabilities(
        labels in proptest::collection::vec(0usize..3, 6),
        probs in prob_rows(6, 4),
        gamma in 0.9f64..0.99,
        epochs in 1usize..6,
    ) {
        let mut state = SatState::new(&labels, 3);
        let rows: Vec<usize> = (0..6).collect();
        for e in 0..epochs {
            sat_update_targets(&mut state, &rows, &probs, gamma, e, 0);
            for r in 0..6 {
                let t = state.targets.row(r);
                prop_assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(t.iter().all(|&x| (0.0..=1.0).contains(&x)));
            }
        }
    }

    #[test]
    fn selnet_penalty_vanishes_at_target_coverage(
        s in prob_rows(5, 3),
        v in prob_rows(5, 3),
        y in proptest::collection::vec(0usize..3, 5),
        k in proptest::collection::vec(0.05f64..1.0, 5),
        c in 0.05f64..1.0,
    ) {
        let mean = k.iter().sum::<f64>() / 5.0;
        prop_assume!(mean >= c);
        let a = loss_selnet(&s, &k, &v, &y, c, 0.5, 1.0).unwrap();
        let b = loss_selnet(&s, &k, &v, &y, c, 0.5, 1000.0).unwrap();
        prop_assert_eq!(a.value, b.value);
        prop_assert_eq!(a.grad_selective, b.grad_selective);
    }

    #[test]
    fn full_coverage_error_is_plain_error(
        pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..60),
    ) {
        let (pred, labels): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let wrong = pred.iter().zip(&labels).filter(|(a, b)| a != b).count();
        let err = selective_error(&pred, &labels, &vec![true; pred.len()]).unwrap().unwrap();
        prop_assert_eq!(err, wrong as f64 / pred.len() as f64);
    }

    #[test]
    fn rel_err_is_scale_free(wrong in 0usize..50, wrong_maj in 1usize..50, accepted in 50usize..200, scale in 1usize..10) {
        let a = rel_err(wrong as f64 / accepted as f64, wrong_maj as f64 / accepted as f64).unwrap();
        let b = rel_err(wrong as f64 / (accepted * scale) as f64, wrong_maj as f64 / (accepted * scale) as f64).unwrap();
        prop_assert!((a - wrong as f64 / wrong_maj as f64).abs() < 1e-12);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn con_sat_monotone_in_tolerance(cov in 0.0f64..1.0, c in 0.0f64..1.0) {
        let flags: Vec<bool> = CONSAT_TOLERANCES.iter().map(|&e| con_sat(cov, c, e)).collect();
        prop_assert!(flags.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn curve_matches_threshold_sweep(
        rows in proptest::collection::vec((0u8..20, any::<bool>()), 1..100),
    ) {
        let conf: Vec<f64> = rows.iter().map(|&(q, _)| q as f64 / 20.0).collect();
        let correct: Vec<bool> = rows.iter().map(|&(_, c)| c).collect();
        let n = conf.len();
        let mut levels = conf.clone();
        levels.sort_by(|a, b| b.total_cmp(a));
        levels.dedup();
        let curve = risk_coverage_curve(&conf, &correct).unwrap();
        prop_assert_eq!(curve.len(), levels.len());
        for (p, &t) in curve.iter().zip(&levels) {
            let acc: Vec<usize> = (0..n).filter(|&i| conf[i] >= t).collect();
            let wrong = acc.iter().filter(|&&i| !correct[i]).count();
            prop_assert_eq!(p.coverage, acc.len() as f64 / n as f64);
            prop_assert_eq!(p.error, wrong as f64 / acc.len() as f64);
        }
        let last = curve.last().unwrap();
        prop_assert_eq!(last.coverage, 1.0);
    }

    #[test]
    fn friedman_ignores_column_order(
        values in proptest::collection::vec(proptest::collection::vec(0u8..4, 4), 2..7),
        shift in 1usize..4,
    ) {
        let ranks: Vec<Vec<f64>> = values
            .iter()
            .map(|r| rank_row(&r.iter().map(|&v| Some(v as f64)).collect::<Vec<_>>()))
            .collect();
        let rotated: Vec<Vec<f64>> = ranks.iter().map(|r| { let mut r = r.clone(); r.rotate_left(shift); r }).collect();
        let a = friedman(&ranks).unwrap();
        let b = friedman(&rotated).unwrap();
        prop_assert!((a.chi2 - b.chi2).abs() < 1e-12);
        for j in 0..4 {
            prop_assert!((a.mean_ranks[(j + shift) % 4] - b.mean_ranks[j]).abs() < 1e-12);
        }
    }
}

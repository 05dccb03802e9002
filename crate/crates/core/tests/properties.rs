use mixsprt::engine::{log_sum_exp, run_discrete, run_sprt};
use mixsprt::mixing::{
    asymptotic_loss, equalizer_defect, max_kl_approx, minimax_lower_bound, optimal_mixing, threshold_for_alpha,
    MixingDistribution,
};
use mixsprt::models::{Alternatives, GaussianMeanModel};
use mixsprt::montecarlo::Summary;
use mixsprt::renewal::{gaussian_delta, gaussian_kappa};
use mixsprt::rng::{replication_rng, StreamRole};
use proptest::prelude::*;

fn kappas_deltas(k: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(0.0f64..6.0, k), prop::collection::vec(0.01f64..1.0, k))
}

fn weights(k: usize) -> impl Strategy<Value = MixingDistribution> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|m| MixingDistribution::from_masses(&m).unwrap())
}

proptest! {
    #[test]
    fn optimal_mixing_is_normalized_and_shift_invariant(
        kappas in prop::collection::vec(-50.0f64..50.0, 1..8),
        shift in -100.0f64..100.0,
    ) {
        let p = optimal_mixing(&kappas).unwrap();
        prop_assert!((p.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let shifted: Vec<f64> = kappas.iter().map(|k| k + shift).collect();
        let q = optimal_mixing(&shifted).unwrap();
        for (a, b) in p.weights().iter().zip(q.weights()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert!(equalizer_defect(&p, &kappas).unwrap() <= 1e-9);
    }

    #[test]
    fn loss_is_nonnegative_and_zero_at_optimum(((kappas, deltas), p) in (1usize..6).prop_flat_map(|k| (kappas_deltas(k), weights(k)))) {
        let loss = asymptotic_loss(&p, &kappas, &deltas).unwrap();
        prop_assert!(loss >= -1e-12);
        let p0 = optimal_mixing(&kappas).unwrap();
        prop_assert!(asymptotic_loss(&p0, &kappas, &deltas).unwrap().abs() <= 1e-12);
        if equalizer_defect(&p, &kappas).unwrap() > 1e-6 {
            prop_assert!(loss > 0.0);
        }
    }

    #[test]
    fn optimal_mixing_attains_the_lower_bound((kappas, deltas) in (1usize..6).prop_flat_map(kappas_deltas), log_alpha in -40.0f64..-0.01) {
        let alpha = log_alpha.exp();
        let p0 = optimal_mixing(&kappas).unwrap();
        let gap = max_kl_approx(&p0, alpha, &kappas, &deltas).unwrap() - minimax_lower_bound(alpha, &kappas, &deltas).unwrap();
        prop_assert!(gap.abs() <= 1e-12 * (1.0 + log_alpha.abs()));
    }

    #[test]
    fn threshold_scales_inversely_with_alpha(
        ((_, deltas), p) in (1usize..6).prop_flat_map(|k| (kappas_deltas(k), weights(k))),
        alpha in 1e-9f64..0.5,
        c in 1.0f64..100.0,
    ) {
        let a = threshold_for_alpha(&p, &deltas, alpha).unwrap();
        let b = threshold_for_alpha(&p, &deltas, alpha / c).unwrap();
        prop_assert!((b / a - c).abs() <= 1e-10 * c);
    }

    #[test]
    fn log_sum_exp_bounds(v in prop::collection::vec(-700.0f64..700.0, 1..20), bump in 0.0f64..10.0, idx in any::<prop::sample::Index>()) {
        let lse = log_sum_exp(v.iter().copied());
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lse >= max - 1e-12);
        prop_assert!(lse <= max + (v.len() as f64).ln() + 1e-12);
        let mut w = v.clone();
        w[idx.index(v.len())] += bump;
        prop_assert!(log_sum_exp(w.iter().copied()) >= lse - 1e-12);
    }

    #[test]
    fn mixture_stops_no_later_than_reweighted_sprt(seed in any::<u64>(), truth in 0usize..3, log_a in 0.5f64..12.0) {
        let model = GaussianMeanModel::new(vec![0.5, 1.5, 3.0]).unwrap();
        let p = MixingDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let mut rng = replication_rng(seed, StreamRole::Generic, 0);
        let xs: Vec<f64> = (0..400).map(|_| model.sample_alt(truth, &mut rng)).collect();
        let mixture = run_discrete(&model, &p, log_a, xs.iter().copied(), 400).unwrap();
        for i in 0..3 {
            let threshold = log_a - p.weight(i).ln();
            let single = run_sprt(&model, i, threshold, xs.iter().copied(), 400).unwrap();
            if let Some(n) = single.n {
                prop_assert!(mixture.n.is_some_and(|m| m <= n), "mixture {:?} single {} at {}", mixture.n, n, i);
            }
        }
    }

    #[test]
    fn gaussian_summaries_satisfy_jensen(mu in 0.2f64..6.0) {
        let kappa = gaussian_kappa(mu, 1e-10).unwrap();
        let delta = gaussian_delta(mu, 1e-10).unwrap();
        prop_assert!(kappa > 0.0 && delta > 0.0 && delta < 1.0);
        prop_assert!(delta >= (-kappa).exp());
    }

    #[test]
    fn summary_merge_matches_sequential(xs in prop::collection::vec(-1e3f64..1e3, 2..200), cut in any::<prop::sample::Index>()) {
        let k = cut.index(xs.len());
        let mut all = Summary::default();
        let mut left = Summary::default();
        let mut right = Summary::default();
        for (j, &x) in xs.iter().enumerate() {
            all.push(x);
            if j < k { left.push(x) } else { right.push(x) }
        }
        let merged = left.merge(&right);
        prop_assert_eq!(merged.count(), all.count());
        prop_assert!((merged.mean() - all.mean()).abs() <= 1e-9 * (1.0 + all.mean().abs()));
        prop_assert!((merged.variance() - all.variance()).abs() <= 1e-7 * (1.0 + all.variance()));
    }
}

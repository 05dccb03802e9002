use mixsprt::engine::{run_continuous, run_sprt};
use mixsprt::mixing::{optimal_density, MixingDistribution};
use mixsprt::models::{ExpFamily, ExponentialFamily, FamilyPoints, GaussianMeanModel};
use mixsprt::montecarlo::{estimate_error_probability, estimate_max_kl, SimConfig};
use mixsprt::renewal::{exponential_kappa, mc_overshoot_summary};
use mixsprt::rng::{replication_rng, StreamRole};

const RUNS: u64 = 1000;

#[test]
fn narrow_continuous_mixture_tracks_the_sprt() {
    let family = ExponentialFamily;
    let theta = 0.5;
    let points = FamilyPoints::new(family, vec![theta]).unwrap();
    let g = optimal_density(family, theta - 1e-7, theta + 1e-7, 8, exponential_kappa).unwrap();
    let mut agree = 0;
    for rep in 0..200 {
        let mut rng = replication_rng(21, StreamRole::Generic, rep);
        let xs: Vec<f64> = (0..500).map(|_| family.sample(theta, &mut rng)).collect();
        let c = run_continuous(&family, &g, 4.0, xs.iter().copied(), 500).unwrap();
        let s = run_sprt(&points, 0, 4.0, xs.iter().copied(), 500).unwrap();
        assert!(c.stopped && s.stopped);
        agree += usize::from(c.n == s.n);
    }
    assert!(agree >= 198, "{agree} of 200 agree");
}

#[test]
fn stopping_steps_are_stable_under_grid_refinement() {
    let family = ExponentialFamily;
    let coarse = optimal_density(family, 0.1, 0.9, 64, exponential_kappa).unwrap();
    let fine = optimal_density(family, 0.1, 0.9, 128, exponential_kappa).unwrap();
    let mut close = 0;
    for rep in 0..RUNS {
        let mut rng = replication_rng(22, StreamRole::Generic, rep);
        let theta = 0.1 + 0.8 * (rep as f64 + 0.5) / RUNS as f64;
        let xs: Vec<f64> = (0..2000).map(|_| family.sample(theta, &mut rng)).collect();
        let a = run_continuous(&family, &coarse, 6.0, xs.iter().copied(), 2000).unwrap();
        let b = run_continuous(&family, &fine, 6.0, xs.iter().copied(), 2000).unwrap();
        if let (Some(x), Some(y)) = (a.n, b.n) {
            close += usize::from(x.abs_diff(y) <= 1);
        }
    }
    assert!(close as f64 >= 0.99 * RUNS as f64, "{close} of {RUNS}");
}

#[test]
fn simulations_do_not_depend_on_worker_count() {
    let model = GaussianMeanModel::new(vec![1.0, 2.0, 3.0]).unwrap();
    let p = MixingDistribution::uniform(3).unwrap();
    let mut cfg = SimConfig::new(5000, 3);
    cfg.workers = Some(1);
    let one = estimate_error_probability(&model, &p, 6.0, &cfg).unwrap();
    let kl_one = estimate_max_kl(&model, &p, 6.0, &cfg).unwrap();
    cfg.workers = Some(4);
    let four = estimate_error_probability(&model, &p, 6.0, &cfg).unwrap();
    let kl_four = estimate_max_kl(&model, &p, 6.0, &cfg).unwrap();
    assert_eq!(one, four);
    assert_eq!(kl_one, kl_four);
}

#[test]
fn error_probability_respects_the_hard_bound() {
    let model = GaussianMeanModel::new(vec![0.5, 1.0]).unwrap();
    let p = MixingDistribution::new(vec![0.4, 0.6]).unwrap();
    for log_a in [1.0, 3.0, 8.0] {
        let est = estimate_error_probability(&model, &p, log_a, &SimConfig::new(4000, 5)).unwrap();
        assert!(est.mean <= (-log_a).exp());
        assert_eq!(est.truncated, 0);
    }
}

#[test]
fn exponential_overshoot_is_exact_at_any_threshold() {
    let model = FamilyPoints::new(ExponentialFamily, vec![0.4]).unwrap();
    for log_a in [0.5, 3.0] {
        let s = mc_overshoot_summary(&model, 0, log_a, 40_000, 9).unwrap();
        assert!((s.kappa - exponential_kappa(0.4)).abs() <= 4.0 * s.stderr_kappa, "{s:?}");
        assert!((s.delta - 0.6).abs() <= 4.0 * s.stderr_delta, "{s:?}");
    }
}

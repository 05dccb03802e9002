//! The optimal continuous mixing density for exponential observations on a
//! parameter interval, and the continuous mixture rule on one stream.
//!
//! cargo run --release --example continuous_mixture

use mixsprt::engine::run_continuous;
use mixsprt::mixing::{continuous_lower_bound, ess_approx_continuous, optimal_density, MixingDensity};
use mixsprt::models::{ExpFamily, ExponentialFamily};
use mixsprt::renewal::{exponential_delta, exponential_kappa};
use mixsprt::rng::{replication_rng, StreamRole};

fn main() -> mixsprt::Result<()> {
    let family = ExponentialFamily;
    let (lo, hi) = (0.2, 0.8);
    let alpha = 1e-3;
    let g0 = optimal_density(family, lo, hi, 128, exponential_kappa)?;
    let uniform = MixingDensity::from_fn(lo, hi, 128, |_| 1.0)?;
    let bound = continuous_lower_bound(&family, lo, hi, 128, alpha, exponential_kappa, exponential_delta)?;
    println!("normalizer {:.6}, lower bound {bound:.4}", g0.normalizer());

    println!("{:>6} {:>10} {:>12} {:>12}", "theta", "g0", "I E[T] g0", "I E[T] unif");
    for k in 0..=6 {
        let theta = lo + (hi - lo) * k as f64 / 6.0;
        let opt = ess_approx_continuous(theta, &g0, alpha, exponential_kappa, exponential_delta, &family)?;
        let uni = ess_approx_continuous(theta, &uniform, alpha, exponential_kappa, exponential_delta, &family)?;
        println!("{theta:>6.2} {:>10.4} {:>12.4} {:>12.4}", g0.density_at(theta), opt.value, uni.value);
    }

    let log_a = (g0.expect(exponential_delta) / alpha).ln();
    let mut rng = replication_rng(3, StreamRole::Generic, 0);
    let stream = std::iter::repeat_with(|| family.sample(0.5, &mut rng));
    let report = run_continuous(&family, &g0, log_a, stream, 10_000)?;
    println!("\none stream at theta = 0.5: stopped at n = {:?}, overshoot {:?}", report.n, report.overshoot);
    Ok(())
}

//! Overshoot summaries three ways: the Gaussian series, the exact exponential
//! law and the simulation estimator.
//!
//! cargo run --release --example overshoot_estimation

use mixsprt::models::{Alternatives, ExponentialFamily, FamilyPoints, GaussianMeanModel};
use mixsprt::renewal::{default_log_threshold, exp_family_exponential_summary, gaussian_summary, mc_overshoot_summary};

fn main() -> mixsprt::Result<()> {
    let gauss = GaussianMeanModel::new(vec![0.5, 1.0, 2.0, 3.0])?;
    let klm = gauss.kl_numbers()?;
    println!("{:>8} {:>10} {:>18} {:>10} {:>18}", "mu", "kappa", "kappa (mc)", "delta", "delta (mc)");
    for (i, &mu) in gauss.means().iter().enumerate() {
        let s = gaussian_summary(mu, 1e-10)?;
        let mc = mc_overshoot_summary(&gauss, i, default_log_threshold(klm.info(i)), 50_000, 6)?;
        println!(
            "{mu:>8} {:>10.4} {:>10.4} ± {:.4} {:>10.4} {:>10.4} ± {:.4}",
            s.kappa, mc.kappa, mc.stderr_kappa, s.delta, mc.delta, mc.stderr_delta
        );
    }

    let thetas = vec![0.3, 0.5, 0.7];
    let expo = FamilyPoints::new(ExponentialFamily, thetas.clone())?;
    println!("\n{:>8} {:>10} {:>18} {:>10} {:>18}", "theta", "kappa", "kappa (mc)", "delta", "delta (mc)");
    for (i, &theta) in thetas.iter().enumerate() {
        let s = exp_family_exponential_summary(theta)?;
        // the overshoot law is exact at any threshold
        let mc = mc_overshoot_summary(&expo, i, 1.0, 50_000, 7)?;
        println!(
            "{theta:>8} {:>10.4} {:>10.4} ± {:.4} {:>10.4} {:>10.4} ± {:.4}",
            s.kappa, mc.kappa, mc.stderr_kappa, s.delta, mc.delta, mc.stderr_delta
        );
    }
    Ok(())
}

//! Calibrates the threshold `A = sum p_i delta_i / alpha` and checks the
//! attained error probability by importance sampling.
//!
//! cargo run --release --example error_probability

use mixsprt::mixing::{named_mixing, threshold_for_alpha, MixingKind};
use mixsprt::models::{Alternatives, GaussianMeanModel};
use mixsprt::montecarlo::{estimate_error_probability, SimConfig};
use mixsprt::renewal::gaussian_summary;

fn main() -> mixsprt::Result<()> {
    let model = GaussianMeanModel::new(vec![1.0, 2.0, 3.0])?;
    let klm = model.kl_numbers()?;
    let summaries = model.means().iter().map(|&m| gaussian_summary(m, 1e-10)).collect::<mixsprt::Result<Vec<_>>>()?;
    let kappas: Vec<f64> = summaries.iter().map(|s| s.kappa).collect();
    let deltas: Vec<f64> = summaries.iter().map(|s| s.delta).collect();
    let cfg = SimConfig::new(100_000, 1);

    println!("{:>16} {:>8} {:>12} {:>10} {:>12}", "mixing", "alpha", "P0(T<inf)", "stderr", "1/A");
    for kind in [MixingKind::Optimal, MixingKind::Uniform] {
        let p = named_mixing(kind, klm.infos(), &deltas, &kappas)?;
        for alpha in [1e-2, 1e-4, 1e-6] {
            let a = threshold_for_alpha(&p, &deltas, alpha)?;
            let est = estimate_error_probability(&model, &p, a.ln(), &cfg)?;
            println!("{:>16} {alpha:>8.0e} {:>12.4e} {:>10.1e} {:>12.4e}", kind.name(), est.mean, est.stderr, 1.0 / a);
        }
    }
    Ok(())
}

//! A mixing that puts zero weight on the true alternative. The rule is then
//! driven by the closest active alternative `i*` at drift `I_i - I_{i i*}`.
//!
//! cargo run --release --example misspecification

use mixsprt::mixing::{ess_approx_discrete, mixed_delta, threshold_for_alpha, MixingDistribution};
use mixsprt::models::{closest_active_index, Alternatives, GaussianMeanModel};
use mixsprt::montecarlo::{estimate_ess, SimConfig};
use mixsprt::renewal::{gaussian_summary, overshoot_cross_summary};

fn main() -> mixsprt::Result<()> {
    let model = GaussianMeanModel::new(vec![1.0, 2.0, 3.0])?;
    let klm = model.kl_numbers()?;
    let summaries = model.means().iter().map(|&m| gaussian_summary(m, 1e-10)).collect::<mixsprt::Result<Vec<_>>>()?;
    let kappas: Vec<f64> = summaries.iter().map(|s| s.kappa).collect();
    let deltas: Vec<f64> = summaries.iter().map(|s| s.delta).collect();

    let p = MixingDistribution::new(vec![0.3, 0.7, 0.0])?;
    let truth = 2;
    let star = closest_active_index(&klm, &p, truth)?;
    let drift = klm.drift(truth, star);
    println!("true alternative mu = 3 has zero weight; i* = mu {}, drift {drift:.3}", model.means()[star]);

    let cross = overshoot_cross_summary(&model, truth, star, 25.0 * drift, 50_000, 4)?;
    println!("cross overshoot kappa_(3|i*) = {:.4} ± {:.4}", cross.kappa, cross.stderr_kappa);
    println!("sum p delta = {:.4}", mixed_delta(&p, &deltas)?);

    for alpha in [1e-3, 1e-6] {
        let a = threshold_for_alpha(&p, &deltas, alpha)?;
        let approx = ess_approx_discrete(truth, &p, alpha, &kappas, &deltas, &klm, Some(cross.kappa))?;
        let mc = estimate_ess(&model, &p, a.ln(), truth, &SimConfig::new(50_000, 5))?;
        println!(
            "alpha {alpha:.0e}: drift * E[T] mc {:.4} ± {:.4}, formula {approx:.4}",
            drift * mc.mean,
            drift * mc.stderr
        );
    }
    Ok(())
}

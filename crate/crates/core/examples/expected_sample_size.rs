//! Simulated worst-case KL information `max_i I_i E_i[T]` against its
//! asymptotic expansion and the minimax lower bound.
//!
//! cargo run --release --example expected_sample_size

use mixsprt::mixing::{named_mixing, threshold_for_alpha, MixingKind, PerformanceReport};
use mixsprt::models::{Alternatives, GaussianMeanModel};
use mixsprt::montecarlo::{compare_to_asymptotics, estimate_max_kl, SimConfig};
use mixsprt::renewal::gaussian_summary;

fn main() -> mixsprt::Result<()> {
    let model = GaussianMeanModel::new(vec![1.0, 2.0, 3.0])?;
    let klm = model.kl_numbers()?;
    let summaries = model.means().iter().map(|&m| gaussian_summary(m, 1e-10)).collect::<mixsprt::Result<Vec<_>>>()?;
    let kappas: Vec<f64> = summaries.iter().map(|s| s.kappa).collect();
    let deltas: Vec<f64> = summaries.iter().map(|s| s.delta).collect();
    let cfg = SimConfig::new(50_000, 2);

    for kind in [MixingKind::Optimal, MixingKind::Uniform] {
        let p = named_mixing(kind, klm.infos(), &deltas, &kappas)?;
        println!("{kind}");
        for alpha in [1e-2, 1e-4, 1e-6, 1e-8] {
            let a = threshold_for_alpha(&p, &deltas, alpha)?;
            let mc = estimate_max_kl(&model, &p, a.ln(), &cfg)?;
            let approx = PerformanceReport::new(&p, alpha, &kappas, &deltas, &klm, None)?;
            for row in compare_to_asymptotics(&mc, &approx, &klm)? {
                if row.quantity != "kl_info" {
                    println!(
                        "  alpha {alpha:.0e} {:<22} mc {:>8.4} ± {:.4}  formula {:>8.4}",
                        row.quantity, row.mc_mean, row.mc_stderr, row.formula
                    );
                }
            }
        }
    }
    Ok(())
}

//! Overshoot summaries, reference mixings and their asymptotic losses for
//! three Gaussian alternatives.
//!
//! cargo run --release --example table1_analytics

use mixsprt::mixing::{asymptotic_loss, max_kl_approx, minimax_lower_bound, named_mixing, MixingKind};
use mixsprt::models::{Alternatives, GaussianMeanModel};
use mixsprt::renewal::gaussian_summary;

fn main() -> mixsprt::Result<()> {
    let means = [1.0, 2.0, 3.0];
    let model = GaussianMeanModel::new(means.to_vec())?;
    let klm = model.kl_numbers()?;

    let mut kappas = Vec::new();
    let mut deltas = Vec::new();
    println!("{:>4} {:>6} {:>8} {:>8}", "mu", "I", "kappa", "delta");
    for (i, &mu) in means.iter().enumerate() {
        let s = gaussian_summary(mu, 1e-10)?;
        println!("{mu:>4} {:>6.2} {:>8.4} {:>8.4}", klm.info(i), s.kappa, s.delta);
        kappas.push(s.kappa);
        deltas.push(s.delta);
    }

    let alpha = 1e-4;
    let bound = minimax_lower_bound(alpha, &kappas, &deltas)?;
    println!("\nminimax lower bound at alpha = {alpha:e}: {bound:.4}");
    println!("{:>16} {:>24} {:>8} {:>10}", "mixing", "weights", "loss", "max I E[T]");
    for kind in MixingKind::ALL {
        let p = named_mixing(kind, klm.infos(), &deltas, &kappas)?;
        let w: Vec<String> = p.weights().iter().map(|w| format!("{w:.3}")).collect();
        println!(
            "{:>16} {:>24} {:>8.4} {:>10.4}",
            kind.name(),
            w.join(" "),
            asymptotic_loss(&p, &kappas, &deltas)?,
            max_kl_approx(&p, alpha, &kappas, &deltas)?
        );
    }
    Ok(())
}

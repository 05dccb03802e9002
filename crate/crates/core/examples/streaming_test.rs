//! Feeding observations one at a time into the discrete mixture statistic,
//! as an online monitor would.
//!
//! cargo run --release --example streaming_test

use mixsprt::engine::DiscreteTestState;
use mixsprt::mixing::{optimal_mixing, threshold_for_alpha};
use mixsprt::models::{Alternatives, GaussianMeanModel};
use mixsprt::renewal::gaussian_summary;
use mixsprt::rng::{replication_rng, StreamRole};

fn main() -> mixsprt::Result<()> {
    let model = GaussianMeanModel::new(vec![0.5, 1.0, 2.0])?;
    let summaries = model.means().iter().map(|&m| gaussian_summary(m, 1e-10)).collect::<mixsprt::Result<Vec<_>>>()?;
    let kappas: Vec<f64> = summaries.iter().map(|s| s.kappa).collect();
    let deltas: Vec<f64> = summaries.iter().map(|s| s.delta).collect();
    let p = optimal_mixing(&kappas)?;
    let log_a = threshold_for_alpha(&p, &deltas, 1e-3)?.ln();
    println!("weights {:?}, log A = {log_a:.3}", p.weights());

    // 40 in-control observations, then a shift to mean 1
    let mut rng = replication_rng(11, StreamRole::Generic, 0);
    let mut state = DiscreteTestState::new(&p);
    for n in 1..=400u64 {
        let truth = if n <= 40 { None } else { Some(1) };
        let x = match truth {
            None => model.sample_null(&mut rng),
            Some(i) => model.sample_alt(i, &mut rng),
        };
        state.step(x, &model)?;
        if n % 10 == 0 {
            println!("n {n:>3}  Z_n {:>8.3}", state.statistic());
        }
        if state.statistic() >= log_a {
            println!("alarm at n = {n}, Z_n = {:.3}", state.statistic());
            let comps: Vec<String> = state.components().iter().map(|z| format!("{z:.2}")).collect();
            println!("per-alternative log LRs: {}", comps.join(" "));
            break;
        }
    }
    Ok(())
}

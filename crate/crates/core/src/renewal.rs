//! Limiting overshoot summaries.
//!
//! For the one-sided SPRT `T_A^i` the overshoot `Z_T - log A` converges in law
//! under `P_i` as `A -> inf`. Its limiting mean is `kappa_i` and the Laplace
//! transform of the limit at 1 is `delta_i`. Three routes are provided: the
//! Gaussian series, the exact law for exponential observations, and a
//! simulation estimator at a large finite threshold for everything else.

use serde::{Deserialize, Serialize};

use crate::engine::{default_step_cap, run_sprt};
use crate::models::{check_index, Alternatives};
use crate::montecarlo::{parallel_blocks, Summary};
use crate::normal;
use crate::rng::{replication_rng, StreamRole};
use crate::{Error, Result};

/// Hard cap on the number of series terms.
pub const SERIES_TERM_CAP: usize = 1_000_000;

/// Multiple of the drift used as the default log threshold of the simulation
/// estimator.
pub const DEFAULT_THRESHOLD_DRIFTS: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummaryMethod {
    Series,
    ClosedForm,
    MonteCarlo,
}

impl SummaryMethod {
    pub fn name(self) -> &'static str {
        match self {
            SummaryMethod::Series => "series",
            SummaryMethod::ClosedForm => "closed-form",
            SummaryMethod::MonteCarlo => "monte-carlo",
        }
    }
}

/// Limiting mean overshoot `kappa` and Laplace transform `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OvershootSummary {
    pub kappa: f64,
    pub delta: f64,
    pub method: SummaryMethod,
    pub stderr_kappa: f64,
    pub stderr_delta: f64,
    /// Increments were lattice-valued; renewal limits may not apply.
    pub lattice: bool,
}

impl OvershootSummary {
    fn analytic(kappa: f64, delta: f64, method: SummaryMethod) -> Self {
        Self { kappa, delta, method, stderr_kappa: 0.0, stderr_delta: 0.0, lattice: false }
    }

    /// Jensen's inequality `delta >= exp(-kappa)`, allowing `slack` for
    /// estimation error.
    pub fn satisfies_jensen(&self, slack: f64) -> bool {
        self.delta + slack >= (-self.kappa).exp()
    }
}

fn check_series_args(mu: f64, tol: f64) -> Result<f64> {
    if !mu.is_finite() || mu == 0.0 {
        return Err(Error::InvalidArgument(format!("mean {mu} must be finite and nonzero")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    Ok(mu.abs())
}

/// Limiting mean overshoot of the Gaussian SPRT with mean `mu`:
///
/// ```text
/// kappa = 1 + mu^2/4 - mu sum_{n>=1} [ phi(mu sqrt(n)/2)/sqrt(n) - (mu/2) Phi(-mu sqrt(n)/2) ]
/// ```
///
/// Terms are nonnegative and dominated by `phi(c sqrt(n))/sqrt(n)` with
/// `c = mu/2`, whose tail beyond `n` integrates to `(2/c) Phi(-c sqrt(n))`. The
/// sum stops once the current term and the tail bound on the result are both
/// below `tol / 2`. Only `|mu|` matters.
pub fn gaussian_kappa(mu: f64, tol: f64) -> Result<f64> {
    let mu = check_series_args(mu, tol)?;
    let c = 0.5 * mu;
    let mut sum = 0.0;
    for n in 1..=SERIES_TERM_CAP {
        let r = (n as f64).sqrt();
        let x = c * r;
        let term = normal::pdf(x) / r - c * normal::cdf(-x);
        sum += term;
        let tail = 4.0 * normal::cdf(-x);
        if mu * term < 0.5 * tol && tail < 0.5 * tol {
            return Ok(1.0 + mu * mu / 4.0 - mu * sum);
        }
    }
    Err(Error::NoConvergence { cap: SERIES_TERM_CAP })
}

/// Laplace transform of the limiting overshoot law of the Gaussian SPRT:
///
/// ```text
/// delta = (2 / mu^2) exp{ -2 sum_{n>=1} Phi(-mu sqrt(n)/2) / n }
/// ```
///
/// The tail of the exponent beyond `n` is bounded by `4 Phi(-c sqrt(n)) / (c^2 n)`.
pub fn gaussian_delta(mu: f64, tol: f64) -> Result<f64> {
    let mu = check_series_args(mu, tol)?;
    let c = 0.5 * mu;
    let info = 0.5 * mu * mu;
    let mut sum = 0.0;
    for n in 1..=SERIES_TERM_CAP {
        let nf = n as f64;
        let q = normal::cdf(-c * nf.sqrt());
        let term = 2.0 * q / nf;
        sum += term;
        // |exp(-s) - exp(-s - e)| <= e exp(-s), and exp(-s)/info is the current estimate
        let value = (-sum).exp() / info;
        let tail = 4.0 * q / (c * c * nf);
        if term * value < 0.5 * tol && tail * value < 0.5 * tol {
            return Ok(value);
        }
    }
    Err(Error::NoConvergence { cap: SERIES_TERM_CAP })
}

/// Both Gaussian summaries from the series.
pub fn gaussian_summary(mu: f64, tol: f64) -> Result<OvershootSummary> {
    Ok(OvershootSummary::analytic(gaussian_kappa(mu, tol)?, gaussian_delta(mu, tol)?, SummaryMethod::Series))
}

/// Exact overshoot summary for exponential observations at `theta ∈ (0, 1)`.
///
/// The SPRT increment is `theta X + log(1 - theta)` with `theta X` exponential
/// of rate `(1 - theta)/theta`, so by memorylessness the overshoot over any
/// threshold `A > 1` is exponential with that rate. Hence
/// `kappa = theta / (1 - theta)` and `delta = r / (r + 1) = 1 - theta`.
pub fn exp_family_exponential_summary(theta: f64) -> Result<OvershootSummary> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::OutsideDomain { theta, lo: 0.0, hi: 1.0 });
    }
    Ok(OvershootSummary::analytic(exponential_kappa(theta), exponential_delta(theta), SummaryMethod::ClosedForm))
}

/// `theta / (1 - theta)`.
pub fn exponential_kappa(theta: f64) -> f64 {
    theta / (1.0 - theta)
}

/// `1 - theta`.
pub fn exponential_delta(theta: f64) -> f64 {
    1.0 - theta
}

/// Default simulation threshold `25 * drift`.
pub fn default_log_threshold(drift: f64) -> f64 {
    DEFAULT_THRESHOLD_DRIFTS * drift
}

/// Simulation estimate of `kappa_i` and `delta_i`: runs `T_A^i` under `P_i`
/// `reps` times and averages the overshoot and `exp(-overshoot)`.
///
/// Any replication hitting the step cap is an error.
pub fn mc_overshoot_summary<M>(
    model: &M,
    i: usize,
    log_threshold: f64,
    reps: u64,
    seed: u64,
) -> Result<OvershootSummary>
where
    M: Alternatives + ?Sized,
{
    overshoot_cross_summary(model, i, i, log_threshold, reps, seed)
}

/// Simulation estimate of the overshoot of the walk `Z^{i_star}` under `P_i`,
/// whose limiting mean is `kappa_{i|i_star}`. Requires the positive drift
/// `I_i - I_{i i_star}`.
pub fn overshoot_cross_summary<M>(
    model: &M,
    i: usize,
    i_star: usize,
    log_threshold: f64,
    reps: u64,
    seed: u64,
) -> Result<OvershootSummary>
where
    M: Alternatives + ?Sized,
{
    check_index(i, model.count())?;
    check_index(i_star, model.count())?;
    if reps < 2 {
        return Err(Error::InvalidArgument("at least two replications are required".into()));
    }
    let klm = model.kl_numbers()?;
    let drift = klm.drift(i, i_star);
    if !(drift > 1e-12 * klm.info(i)) {
        return Err(Error::NonPositiveDrift { index: i, drift });
    }
    let cap = default_step_cap(log_threshold, drift);
    let tag = (i as u64) << 32 | i_star as u64;
    let blocks = parallel_blocks(reps, |range| {
        let mut over = Summary::default();
        let mut laplace = Summary::default();
        for rep in range {
            let mut rng = replication_rng(seed ^ crate::rng::splitmix64(tag), StreamRole::Overshoot, rep);
            let stream = std::iter::repeat_with(|| model.sample_alt(i, &mut rng));
            let report = run_sprt(model, i_star, log_threshold, stream, cap)?;
            let eta = report.overshoot.ok_or(Error::StepCapExceeded { rep, cap })?;
            over.push(eta);
            laplace.push((-eta).exp());
        }
        Ok((over, laplace))
    })?;
    let (over, laplace) =
        blocks.into_iter().fold((Summary::default(), Summary::default()), |(a, b), (c, d)| (a.merge(&c), b.merge(&d)));
    Ok(OvershootSummary {
        kappa: over.mean(),
        delta: laplace.mean(),
        method: SummaryMethod::MonteCarlo,
        stderr_kappa: over.stderr(),
        stderr_delta: laplace.stderr(),
        lattice: model.is_lattice(),
    })
}

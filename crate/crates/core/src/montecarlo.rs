//! Monte Carlo estimation of operating characteristics.
//!
//! The error probability `P_0(T_A < inf)` of a one-sided test is tiny and
//! hard to hit under the null. Changing measure to the mixture
//! `P = sum_i p_i P_i`, under which the rule stops almost surely, gives
//!
//! ```text
//! P_0(T_A < inf) = sum_i p_i E_i[exp(-Z_{T_A})]
//! ```
//!
//! so each replication draws `i ~ p`, runs the rule under `P_i` and
//! contributes `exp(-Z_T) <= 1/A`.
//!
//! Replications are split into fixed blocks of [`BLOCK_SIZE`]. Each block is
//! reduced sequentially and block summaries are merged in index order, so
//! results are bit-identical for any number of worker threads.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{default_step_cap, run_discrete};
use crate::mixing::{MixingDistribution, PerformanceReport};
use crate::models::{check_index, closest_active_index, Alternatives, KlMatrix};
use crate::rng::{replication_rng, SimRng, StreamRole};
use crate::{Error, Result};
use rand::Rng;

/// Replications per reduction block.
pub const BLOCK_SIZE: u64 = 1024;

/// Truncated fraction above which an expected-sample-size estimate is flagged.
pub const TRUNCATION_FLAG_FRACTION: f64 = 1e-3;

/// Streaming mean and sum of squared deviations (Welford), mergeable with
/// Chan's update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Summary {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Summary {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, other: &Summary) -> Summary {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + d * d * self.count as f64 * other.count as f64 / count as f64;
        Summary { count, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Sample variance with the `n - 1` divisor.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Runs `f` over fixed blocks of `0..reps` in parallel on the current rayon
/// pool and returns the block results in index order.
pub(crate) fn parallel_blocks<A, F>(reps: u64, f: F) -> Result<Vec<A>>
where
    A: Send,
    F: Fn(Range<u64>) -> Result<A> + Sync,
{
    let blocks: Vec<Range<u64>> =
        (0..reps.div_ceil(BLOCK_SIZE)).map(|b| b * BLOCK_SIZE..((b + 1) * BLOCK_SIZE).min(reps)).collect();
    blocks.into_par_iter().map(&f).collect()
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send, F: FnOnce() -> T + Send>(workers: Option<usize>, f: F) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidArgument("worker count must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Settings shared by the simulation campaigns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub reps: u64,
    pub seed: u64,
    /// Step cap; the drift-based default is used when absent.
    pub max_n: Option<u64>,
    /// Worker threads; the global rayon pool when absent.
    pub workers: Option<usize>,
}

impl SimConfig {
    pub fn new(reps: u64, seed: u64) -> Self {
        Self { reps, seed, max_n: None, workers: None }
    }

    fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::InvalidArgument("at least two replications are required".into()));
        }
        if self.max_n == Some(0) {
            return Err(Error::InvalidArgument("step cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// A Monte Carlo point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`.
    pub stderr: f64,
    pub reps: u64,
    /// Replications that hit the step cap.
    pub truncated: u64,
}

impl Estimate {
    fn from_summary(s: &Summary, reps: u64, truncated: u64) -> Self {
        Self { mean: s.mean(), stderr: s.stderr(), reps, truncated }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { mean: c * self.mean, stderr: c.abs() * self.stderr, ..*self }
    }

    pub fn truncated_fraction(&self) -> f64 {
        self.truncated as f64 / self.reps as f64
    }

    /// Whether truncation is frequent enough to bias the estimate visibly.
    pub fn flagged(&self) -> bool {
        self.truncated_fraction() > TRUNCATION_FLAG_FRACTION
    }

    /// `(x - mean) / stderr`.
    pub fn z_score(&self, x: f64) -> f64 {
        (x - self.mean) / self.stderr
    }
}

fn check_model<M: Alternatives + ?Sized>(model: &M, p: &MixingDistribution) -> Result<KlMatrix> {
    if p.len() != model.count() {
        return Err(Error::Mismatch(format!(
            "mixing distribution has {} weights but the model has {} alternatives",
            p.len(),
            model.count()
        )));
    }
    model.kl_numbers()
}

fn draw_index(rng: &mut SimRng, cumulative: &[(usize, f64)]) -> usize {
    let u: f64 = rng.random();
    cumulative.iter().find(|(_, c)| u < *c).map_or(cumulative[cumulative.len() - 1].0, |(i, _)| *i)
}

/// Importance-sampling estimate of `P_0(T_A(p) < inf)`.
///
/// Truncated replications contribute `exp(-Z_{max_n})`, which may exceed
/// `1/A`; they are counted in [`Estimate::truncated`].
pub fn estimate_error_probability<M>(
    model: &M,
    p: &MixingDistribution,
    log_threshold: f64,
    cfg: &SimConfig,
) -> Result<Estimate>
where
    M: Alternatives + ?Sized,
{
    cfg.validate()?;
    let klm = check_model(model, p)?;
    let mut acc = 0.0;
    let cumulative: Vec<(usize, f64)> = p
        .support()
        .map(|i| {
            acc += p.weight(i);
            (i, acc)
        })
        .collect();
    let min_drift = p.support().map(|i| klm.info(i)).fold(f64::INFINITY, f64::min);
    let cap = cfg.max_n.unwrap_or_else(|| default_step_cap(log_threshold, min_drift));
    let blocks = with_workers(cfg.workers, || {
        parallel_blocks(cfg.reps, |range| {
            let mut s = Summary::default();
            let mut truncated = 0u64;
            for rep in range {
                let mut rng = replication_rng(cfg.seed, StreamRole::ErrorProbability, rep);
                let i = draw_index(&mut rng, &cumulative);
                let stream = std::iter::repeat_with(|| model.sample_alt(i, &mut rng));
                let report = run_discrete(model, p, log_threshold, stream, cap)?;
                if !report.stopped {
                    truncated += 1;
                }
                s.push((-report.terminal_log_stat).exp());
            }
            Ok((s, truncated))
        })
    })??;
    let (s, truncated) = blocks.into_iter().fold((Summary::default(), 0), |(a, t), (b, u)| (a.merge(&b), t + u));
    Ok(Estimate::from_summary(&s, cfg.reps, truncated))
}

/// Mean stopping time of the mixture rule under `P_i`.
///
/// Truncated runs are excluded from the mean and counted. Alternatives with
/// zero weight need the positive drift `I_i - I_{i i*}`.
pub fn estimate_ess<M>(
    model: &M,
    p: &MixingDistribution,
    log_threshold: f64,
    i: usize,
    cfg: &SimConfig,
) -> Result<Estimate>
where
    M: Alternatives + ?Sized,
{
    cfg.validate()?;
    let klm = check_model(model, p)?;
    check_index(i, model.count())?;
    let star = closest_active_index(&klm, p, i)?;
    let drift = klm.drift(i, star);
    if !(drift > 1e-12 * klm.info(i)) {
        return Err(Error::NonPositiveDrift { index: i, drift });
    }
    let cap = cfg.max_n.unwrap_or_else(|| default_step_cap(log_threshold, drift));
    let seed = cfg.seed ^ crate::rng::splitmix64(i as u64);
    let blocks = with_workers(cfg.workers, || {
        parallel_blocks(cfg.reps, |range| {
            let mut s = Summary::default();
            let mut truncated = 0u64;
            for rep in range {
                let mut rng = replication_rng(seed, StreamRole::SampleSize, rep);
                let stream = std::iter::repeat_with(|| model.sample_alt(i, &mut rng));
                let report = run_discrete(model, p, log_threshold, stream, cap)?;
                match report.n {
                    Some(n) => s.push(n as f64),
                    None => truncated += 1,
                }
            }
            Ok((s, truncated))
        })
    })??;
    let (s, truncated) = blocks.into_iter().fold((Summary::default(), 0), |(a, t), (b, u)| (a.merge(&b), t + u));
    if s.count() == 0 {
        return Err(Error::StepCapExceeded { rep: 0, cap });
    }
    Ok(Estimate::from_summary(&s, cfg.reps, truncated))
}

/// Worst-case expected KL information `max_i I_i E_i[T_A]` with the
/// per-alternative breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxKlEstimate {
    /// `I_i E_i[T_A]` at the worst alternative; the standard error is that of
    /// the attaining index.
    pub max: Estimate,
    pub argmax: usize,
    /// `I_i E_i[T_A]` for every alternative.
    pub per_alternative: Vec<Estimate>,
}

impl MaxKlEstimate {
    /// `max_i - min_i` of the per-alternative means.
    pub fn spread(&self) -> f64 {
        let hi = self.per_alternative.iter().map(|e| e.mean).fold(f64::NEG_INFINITY, f64::max);
        let lo = self.per_alternative.iter().map(|e| e.mean).fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

pub fn estimate_max_kl<M>(
    model: &M,
    p: &MixingDistribution,
    log_threshold: f64,
    cfg: &SimConfig,
) -> Result<MaxKlEstimate>
where
    M: Alternatives + ?Sized,
{
    let klm = check_model(model, p)?;
    let per_alternative = (0..model.count())
        .map(|i| Ok(estimate_ess(model, p, log_threshold, i, cfg)?.scaled(klm.info(i))))
        .collect::<Result<Vec<_>>>()?;
    let argmax = per_alternative
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
        .map(|(i, _)| i)
        .expect("at least one alternative");
    Ok(MaxKlEstimate { max: per_alternative[argmax], argmax, per_alternative })
}

/// One line of a Monte Carlo versus asymptotic comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub quantity: String,
    /// Zero-based alternative, absent for whole-rule quantities.
    pub i: Option<usize>,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub formula: f64,
    pub difference: f64,
    /// `difference / mc_stderr`.
    pub z: f64,
}

impl ComparisonRow {
    fn new(quantity: &str, i: Option<usize>, e: &Estimate, formula: f64) -> Self {
        let difference = e.mean - formula;
        Self {
            quantity: quantity.into(),
            i,
            mc_mean: e.mean,
            mc_stderr: e.stderr,
            formula,
            difference,
            z: difference / e.stderr,
        }
    }
}

/// Lines up simulated KL information with the asymptotic formulas: one row per
/// alternative (`kl_info`), the worst case against `max_kl_approx`, and the
/// worst case against the minimax lower bound.
///
/// For zero-weight alternatives the per-alternative formula approximates
/// `(I_i - I_{i i*}) E_i[T]`; it is rescaled to `I_i E_i[T]` using `klm`.
pub fn compare_to_asymptotics(
    mc: &MaxKlEstimate,
    approx: &PerformanceReport,
    klm: &KlMatrix,
) -> Result<Vec<ComparisonRow>> {
    let k = approx.per_alternative.len();
    if mc.per_alternative.len() != k || klm.len() != k {
        return Err(Error::Mismatch(format!(
            "simulation has {} alternatives, report {k}, KL matrix {}",
            mc.per_alternative.len(),
            klm.len()
        )));
    }
    let p = MixingDistribution::new(approx.weights.clone())?;
    let mut rows = Vec::with_capacity(k + 2);
    for (i, (e, f)) in mc.per_alternative.iter().zip(&approx.per_alternative).enumerate() {
        if let Some(f) = f {
            let star = closest_active_index(klm, &p, i)?;
            let scale = klm.info(i) / klm.drift(i, star);
            rows.push(ComparisonRow::new("kl_info", Some(i), e, f * scale));
        }
    }
    if let Some(m) = approx.max_kl_approx {
        rows.push(ComparisonRow::new("max_kl", None, &mc.max, m));
    }
    rows.push(ComparisonRow::new("max_kl_vs_lower_bound", None, &mc.max, approx.lower_bound));
    Ok(rows)
}

//! Stopping rules on observation streams.
//!
//! All likelihood ratios are carried in log space. The discrete mixture
//! statistic is a max-shifted log-sum-exp over the active components and the
//! continuous one a log-sum-exp over quadrature nodes, so thresholds of
//! `|log alpha|` in the hundreds are handled without overflow.

use crate::mixing::{MixingDensity, MixingDistribution};
use crate::models::{check_index, Alternatives, ExpFamily};
use crate::{Error, Result};

/// `log sum exp(v)` over the given terms; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<I>(terms: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let it = terms.into_iter();
    let max = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    max + it.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Outcome of running a stopping rule.
#[derive(Debug, Clone, PartialEq)]
pub struct StopReport {
    pub stopped: bool,
    /// Stopping step, present iff `stopped`.
    pub n: Option<u64>,
    /// `Z_T - log A`, present iff `stopped`.
    pub overshoot: Option<f64>,
    /// Log statistic at the stopping step, or at the cap when truncated.
    pub terminal_log_stat: f64,
    /// The step cap, present iff the rule did not stop.
    pub truncated_at: Option<u64>,
}

impl StopReport {
    fn stopped(n: u64, stat: f64, log_threshold: f64) -> Self {
        Self {
            stopped: true,
            n: Some(n),
            overshoot: Some(stat - log_threshold),
            terminal_log_stat: stat,
            truncated_at: None,
        }
    }

    fn truncated(cap: u64, stat: f64) -> Self {
        Self { stopped: false, n: None, overshoot: None, terminal_log_stat: stat, truncated_at: Some(cap) }
    }
}

fn check_run_args(log_threshold: f64, max_n: u64) -> Result<()> {
    if !(log_threshold.is_finite() && log_threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("log threshold {log_threshold} must be positive (A > 1)")));
    }
    if max_n == 0 {
        return Err(Error::InvalidArgument("step cap must be at least 1".into()));
    }
    Ok(())
}

/// Default step cap `ceil(20 log A / drift)`, floored at [`MIN_STEP_CAP`].
pub fn default_step_cap(log_threshold: f64, drift: f64) -> u64 {
    let raw = (20.0 * log_threshold / drift).ceil();
    if raw.is_finite() && raw > 0.0 {
        (raw as u64).max(MIN_STEP_CAP)
    } else {
        MIN_STEP_CAP
    }
}

/// Floor on [`default_step_cap`]; small thresholds with weak drift would
/// otherwise truncate a visible fraction of runs.
pub const MIN_STEP_CAP: u64 = 10_000;

/// Running state of the discrete mixture statistic.
///
/// Zero-weight components are tracked so that behaviour under an alternative
/// outside the support can be studied, but they do not enter the statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTestState {
    log_component: Vec<f64>,
    log_weights: Vec<f64>,
    support: Vec<usize>,
    n: u64,
}

impl DiscreteTestState {
    pub fn new(p: &MixingDistribution) -> Self {
        let log_weights = p.weights().iter().map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY }).collect();
        Self { log_component: vec![0.0; p.len()], log_weights, support: p.support().collect(), n: 0 }
    }

    /// Adds one observation to every component.
    pub fn step<M: Alternatives + ?Sized>(&mut self, x: f64, model: &M) -> Result<()> {
        if model.count() != self.log_component.len() {
            return Err(Error::Mismatch(format!(
                "state has {} components but the model has {} alternatives",
                self.log_component.len(),
                model.count()
            )));
        }
        for (i, z) in self.log_component.iter_mut().enumerate() {
            let inc = model.loglr(i, x);
            if !inc.is_finite() {
                return Err(Error::NonFinite(format!(
                    "log-likelihood-ratio increment of alternative {} at x = {x}",
                    i + 1
                )));
            }
            *z += inc;
        }
        self.n += 1;
        Ok(())
    }

    /// `Z_n = log sum_{i: p_i > 0} p_i exp(Z_n^i)`.
    pub fn statistic(&self) -> f64 {
        log_sum_exp(self.support.iter().map(|&i| self.log_weights[i] + self.log_component[i]))
    }

    /// `Z_n^i`.
    pub fn component(&self, i: usize) -> f64 {
        self.log_component[i]
    }

    pub fn components(&self) -> &[f64] {
        &self.log_component
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

/// Runs the discrete mixture rule `inf{n >= 1 : Z_n >= log A}`.
///
/// Stopping by `max_n` is reported through [`StopReport::truncated_at`]; a
/// stream that ends first is an error.
pub fn run_discrete<M, I>(
    model: &M,
    p: &MixingDistribution,
    log_threshold: f64,
    stream: I,
    max_n: u64,
) -> Result<StopReport>
where
    M: Alternatives + ?Sized,
    I: IntoIterator<Item = f64>,
{
    check_run_args(log_threshold, max_n)?;
    if p.len() != model.count() {
        return Err(Error::Mismatch(format!(
            "mixing distribution has {} weights but the model has {} alternatives",
            p.len(),
            model.count()
        )));
    }
    let mut state = DiscreteTestState::new(p);
    let mut stream = stream.into_iter();
    let mut stat = f64::NEG_INFINITY;
    while state.n() < max_n {
        let x = stream.next().ok_or(Error::StreamExhausted { n: state.n() })?;
        state.step(x, model)?;
        stat = state.statistic();
        if stat >= log_threshold {
            return Ok(StopReport::stopped(state.n(), stat, log_threshold));
        }
    }
    Ok(StopReport::truncated(max_n, stat))
}

/// Runs the one-sided SPRT `inf{n >= 1 : Z_n^i >= log A}` for alternative `i`.
pub fn run_sprt<M, I>(model: &M, i: usize, log_threshold: f64, stream: I, max_n: u64) -> Result<StopReport>
where
    M: Alternatives + ?Sized,
    I: IntoIterator<Item = f64>,
{
    check_run_args(log_threshold, max_n)?;
    check_index(i, model.count())?;
    let mut stream = stream.into_iter();
    let mut z = 0.0;
    for n in 1..=max_n {
        let x = stream.next().ok_or(Error::StreamExhausted { n: n - 1 })?;
        let inc = model.loglr(i, x);
        if !inc.is_finite() {
            return Err(Error::NonFinite(format!("log-likelihood-ratio increment at x = {x}")));
        }
        z += inc;
        if z >= log_threshold {
            return Ok(StopReport::stopped(n, z, log_threshold));
        }
    }
    Ok(StopReport::truncated(max_n, z))
}

/// Running state of the continuous mixture statistic
/// `Z_n = log sum_m w_m g(theta_m) exp(theta_m S_n - n psi(theta_m))`.
///
/// The sufficient statistic is `(S_n, n)`; a step costs one pass over the grid
/// regardless of history length.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousTestState {
    running_sum: f64,
    n: u64,
    log_mass: Vec<f64>,
    thetas: Vec<f64>,
    psis: Vec<f64>,
}

impl ContinuousTestState {
    pub fn new<F: ExpFamily + ?Sized>(family: &F, g: &MixingDensity) -> Result<Self> {
        let grid = g.grid();
        let mut log_mass = Vec::with_capacity(grid.len());
        let mut psis = Vec::with_capacity(grid.len());
        for ((&theta, &w), &v) in grid.nodes.iter().zip(&grid.weights).zip(g.values()) {
            family.check_theta(theta)?;
            log_mass.push((w * v).ln());
            psis.push(family.psi(theta));
        }
        Ok(Self { running_sum: 0.0, n: 0, log_mass, thetas: grid.nodes.clone(), psis })
    }

    pub fn step(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("observation {x}")));
        }
        self.running_sum += x;
        self.n += 1;
        Ok(())
    }

    pub fn statistic(&self) -> f64 {
        let n = self.n as f64;
        let s = self.running_sum;
        log_sum_exp(
            self.log_mass.iter().zip(&self.thetas).zip(&self.psis).map(move |((lm, th), psi)| lm + th * s - n * psi),
        )
    }

    pub fn running_sum(&self) -> f64 {
        self.running_sum
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

/// Runs the continuous mixture rule on the fixed quadrature grid of `g`.
pub fn run_continuous<F, I>(
    family: &F,
    g: &MixingDensity,
    log_threshold: f64,
    stream: I,
    max_n: u64,
) -> Result<StopReport>
where
    F: ExpFamily + ?Sized,
    I: IntoIterator<Item = f64>,
{
    check_run_args(log_threshold, max_n)?;
    let mut state = ContinuousTestState::new(family, g)?;
    let mut stream = stream.into_iter();
    let mut stat = f64::NEG_INFINITY;
    while state.n() < max_n {
        let x = stream.next().ok_or(Error::StreamExhausted { n: state.n() })?;
        state.step(x)?;
        stat = state.statistic();
        if stat == f64::NEG_INFINITY {
            return Err(Error::QuadratureUnderflow { n: state.n() });
        }
        if stat.is_nan() {
            return Err(Error::NonFinite(format!("continuous mixture statistic at step {}", state.n())));
        }
        if stat >= log_threshold {
            return Ok(StopReport::stopped(state.n(), stat, log_threshold));
        }
    }
    Ok(StopReport::truncated(max_n, stat))
}

//! Mixing distributions, threshold calibration and asymptotic performance.
//!
//! With `kappa_i` the limiting mean overshoot and `delta_i` the Laplace
//! transform of the limiting overshoot law under `P_i`, a fully supported
//! mixture rule calibrated by `A = sum_i p_i delta_i / alpha` satisfies
//!
//! ```text
//! I_i E_i[T_A] = |log alpha| + log(sum_j p_j delta_j) + kappa_i - log p_i + o(1)
//! ```
//!
//! The maximum over `i` is smallest, and equal to the minimax lower bound
//! `|log alpha| + log(sum_i delta_i exp(kappa_i))`, at `p_i ∝ exp(kappa_i)`.
//! All quantities are in nats.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::models::{check_index, closest_active_index, ExpFamily, KlMatrix};
use crate::quadrature::QuadratureGrid;
use crate::{Error, Result};

/// Tolerance on the total mass of a [`MixingDistribution`].
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Tolerance on the quadrature mass of a [`MixingDensity`].
pub const DENSITY_MASS_TOLERANCE: f64 = 1e-9;

/// Probability weights over the alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixingDistribution {
    weights: Vec<f64>,
}

impl MixingDistribution {
    /// Validates nonnegative weights summing to one within [`WEIGHT_SUM_TOLERANCE`].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("mixing distribution needs at least one weight".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(format!("weights {weights:?} must be finite and nonnegative")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    /// Normalizes nonnegative masses.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        if masses.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(format!("masses {masses:?} must be finite and nonnegative")));
        }
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("masses have zero total".into()));
        }
        Self::new(masses.iter().map(|m| m / total).collect())
    }

    /// Normalizes `exp(log_masses)` after shifting by the maximum.
    pub fn from_log_masses(log_masses: &[f64]) -> Result<Self> {
        if log_masses.is_empty() {
            return Err(Error::InvalidArgument("mixing distribution needs at least one weight".into()));
        }
        if log_masses.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::NonFinite(format!("log masses {log_masses:?}")));
        }
        let max = log_masses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument("all log masses are -inf".into()));
        }
        let shifted: Vec<f64> = log_masses.iter().map(|v| (v - max).exp()).collect();
        Self::from_masses(&shifted)
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("mixing distribution needs at least one weight".into()));
        }
        Ok(Self { weights: vec![1.0 / k as f64; k] })
    }

    /// All mass on alternative `i`.
    pub fn degenerate(k: usize, i: usize) -> Result<Self> {
        check_index(i, k)?;
        let mut weights = vec![0.0; k];
        weights[i] = 1.0;
        Ok(Self { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Indices with positive weight.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(i, _)| i)
    }

    pub fn is_fully_supported(&self) -> bool {
        self.weights.iter().all(|w| *w > 0.0)
    }

    fn require_full_support(&self) -> Result<()> {
        match self.weights.iter().position(|w| *w <= 0.0) {
            Some(i) => Err(Error::InvalidArgument(format!("weight of alternative {} is zero", i + 1))),
            None => Ok(()),
        }
    }
}

impl TryFrom<Vec<f64>> for MixingDistribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MixingDistribution> for Vec<f64> {
    fn from(p: MixingDistribution) -> Self {
        p.weights
    }
}

fn check_lengths(k: usize, named: &[(&str, usize)]) -> Result<()> {
    for (name, len) in named {
        if *len != k {
            return Err(Error::Mismatch(format!("{name} has length {len}, expected {k}")));
        }
    }
    Ok(())
}

fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{name} {v:?}")))
    }
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    check_finite("deltas", deltas)?;
    match deltas.iter().find(|d| **d <= 0.0) {
        Some(d) => Err(Error::InvalidArgument(format!("delta {d} must be positive"))),
        None => Ok(()),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha {alpha} must lie in (0, 1)")))
    }
}

/// The nearly minimax weights `p_i ∝ exp(kappa_i)`.
pub fn optimal_mixing(kappas: &[f64]) -> Result<MixingDistribution> {
    check_finite("kappas", kappas)?;
    MixingDistribution::from_log_masses(kappas)
}

/// Reference mixings compared against the optimal one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingKind {
    /// `p_i ∝ exp(kappa_i)`.
    Optimal,
    Uniform,
    /// `p_i ∝ I_i`.
    Kl,
    /// `p_i ∝ 1 / delta_i`.
    InvDelta,
    /// `p_i ∝ exp(kappa_i) / delta_i`.
    ExpkOverDelta,
}

impl MixingKind {
    pub const ALL: [MixingKind; 5] =
        [MixingKind::ExpkOverDelta, MixingKind::Optimal, MixingKind::Kl, MixingKind::InvDelta, MixingKind::Uniform];

    pub fn name(self) -> &'static str {
        match self {
            MixingKind::Optimal => "optimal",
            MixingKind::Uniform => "uniform",
            MixingKind::Kl => "kl",
            MixingKind::InvDelta => "inv_delta",
            MixingKind::ExpkOverDelta => "expk_over_delta",
        }
    }
}

impl fmt::Display for MixingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Builds one of the named mixings from the KL numbers and overshoot summaries.
pub fn named_mixing(kind: MixingKind, infos: &[f64], deltas: &[f64], kappas: &[f64]) -> Result<MixingDistribution> {
    let k = infos.len();
    check_lengths(k, &[("deltas", deltas.len()), ("kappas", kappas.len())])?;
    check_finite("infos", infos)?;
    check_finite("kappas", kappas)?;
    check_deltas(deltas)?;
    if infos.iter().any(|v| *v <= 0.0) {
        return Err(Error::InvalidArgument(format!("KL numbers {infos:?} must be positive")));
    }
    match kind {
        MixingKind::Optimal => optimal_mixing(kappas),
        MixingKind::Uniform => MixingDistribution::uniform(k),
        MixingKind::Kl => MixingDistribution::from_masses(infos),
        MixingKind::InvDelta => MixingDistribution::from_masses(&deltas.iter().map(|d| 1.0 / d).collect::<Vec<_>>()),
        MixingKind::ExpkOverDelta => {
            MixingDistribution::from_log_masses(&kappas.iter().zip(deltas).map(|(k, d)| k - d.ln()).collect::<Vec<_>>())
        }
    }
}

/// `sum_{i: p_i > 0} p_i delta_i`, the limit of `A P_0(T_A < inf)`.
pub fn mixed_delta(p: &MixingDistribution, deltas: &[f64]) -> Result<f64> {
    check_lengths(p.len(), &[("deltas", deltas.len())])?;
    let mut total = 0.0;
    for i in p.support() {
        let d = deltas[i];
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidArgument(format!("delta {d} of active alternative {} must be positive", i + 1)));
        }
        total += p.weight(i) * d;
    }
    Ok(total)
}

/// Threshold `A = sum_i p_i delta_i / alpha`, for which `P_0(T_A < inf) ≈ alpha`.
pub fn threshold_for_alpha(p: &MixingDistribution, deltas: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(mixed_delta(p, deltas)? / alpha)
}

/// Approximation of `(I_i - I_{i i*}) E_i[T_A]` for a rule calibrated to `alpha`.
///
/// When `p_i > 0` this is `|log alpha| + log(sum_j p_j delta_j) + kappa_i - log p_i`.
/// When `p_i = 0` the closest active alternative `i*` replaces `i` and the
/// cross overshoot mean `kappa_{i|i*}` must be supplied (see
/// [`crate::renewal::overshoot_cross_summary`]).
pub fn ess_approx_discrete(
    i: usize,
    p: &MixingDistribution,
    alpha: f64,
    kappas: &[f64],
    deltas: &[f64],
    klm: &KlMatrix,
    kappa_cross: Option<f64>,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_lengths(p.len(), &[("kappas", kappas.len()), ("deltas", deltas.len()), ("KL matrix", klm.len())])?;
    check_index(i, p.len())?;
    let base = alpha.ln().abs() + mixed_delta(p, deltas)?.ln();
    let star = closest_active_index(klm, p, i)?;
    if star == i {
        return Ok(base + kappas[i] - p.weight(i).ln());
    }
    let drift = klm.drift(i, star);
    if !(drift > 0.0) {
        return Err(Error::NonPositiveDrift { index: i, drift });
    }
    let kc = kappa_cross.ok_or_else(|| {
        Error::InvalidArgument(format!(
            "alternative {} has zero weight; the cross overshoot mean kappa_{{{}|{}}} is required",
            i + 1,
            i + 1,
            star + 1
        ))
    })?;
    Ok(base + kc - p.weight(star).ln())
}

/// `|log alpha| + log[(sum_j p_j delta_j) max_i(exp(kappa_i) / p_i)]`.
pub fn max_kl_approx(p: &MixingDistribution, alpha: f64, kappas: &[f64], deltas: &[f64]) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha.ln().abs() + log_mixture_constant(p, kappas, deltas)?)
}

fn log_mixture_constant(p: &MixingDistribution, kappas: &[f64], deltas: &[f64]) -> Result<f64> {
    check_lengths(p.len(), &[("kappas", kappas.len()), ("deltas", deltas.len())])?;
    p.require_full_support()?;
    check_finite("kappas", kappas)?;
    check_deltas(deltas)?;
    let worst = kappas.iter().zip(p.weights()).map(|(k, w)| k - w.ln()).fold(f64::NEG_INFINITY, f64::max);
    Ok(mixed_delta(p, deltas)?.ln() + worst)
}

fn log_sum_delta_expk(kappas: &[f64], deltas: &[f64]) -> Result<f64> {
    check_lengths(kappas.len(), &[("deltas", deltas.len())])?;
    if kappas.is_empty() {
        return Err(Error::InvalidArgument("no alternatives".into()));
    }
    check_finite("kappas", kappas)?;
    check_deltas(deltas)?;
    Ok(crate::engine::log_sum_exp(kappas.iter().zip(deltas).map(|(k, d)| k + d.ln())))
}

/// Minimax lower bound `|log alpha| + log(sum_i delta_i exp(kappa_i))`.
///
/// `alpha = 1` is accepted and yields the constant term alone.
pub fn minimax_lower_bound(alpha: f64, kappas: &[f64], deltas: &[f64]) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} must lie in (0, 1]")));
    }
    Ok(alpha.ln().abs() + log_sum_delta_expk(kappas, deltas)?)
}

/// Limiting excess of the worst-case KL information over the minimax bound.
pub fn asymptotic_loss(p: &MixingDistribution, kappas: &[f64], deltas: &[f64]) -> Result<f64> {
    Ok(log_mixture_constant(p, kappas, deltas)? - log_sum_delta_expk(kappas, deltas)?)
}

/// Spread `max_i(kappa_i - log p_i) - min_i(kappa_i - log p_i)`; zero exactly
/// for the equalizing weights.
pub fn equalizer_defect(p: &MixingDistribution, kappas: &[f64]) -> Result<f64> {
    check_lengths(p.len(), &[("kappas", kappas.len())])?;
    p.require_full_support()?;
    check_finite("kappas", kappas)?;
    let v: Vec<f64> = kappas.iter().zip(p.weights()).map(|(k, w)| k - w.ln()).collect();
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(hi - lo)
}

/// Asymptotic performance of a discrete mixture rule at one `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceReport {
    pub alpha: f64,
    pub weights: Vec<f64>,
    pub kappas: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Approximations of `(I_i - I_{i i*}) E_i[T_A]`; `None` where a
    /// zero-weight alternative lacks a cross overshoot value.
    pub per_alternative: Vec<Option<f64>>,
    /// `max_kl_approx`, present for fully supported mixings.
    pub max_kl_approx: Option<f64>,
    pub lower_bound: f64,
    /// `asymptotic_loss`, present for fully supported mixings.
    pub loss: Option<f64>,
}

impl PerformanceReport {
    /// `kappa_cross[i]` supplies `kappa_{i|i*}` for zero-weight alternatives.
    pub fn new(
        p: &MixingDistribution,
        alpha: f64,
        kappas: &[f64],
        deltas: &[f64],
        klm: &KlMatrix,
        kappa_cross: Option<&[Option<f64>]>,
    ) -> Result<Self> {
        let k = p.len();
        let per_alternative = (0..k)
            .map(|i| {
                let kc = kappa_cross.and_then(|v| v.get(i).copied().flatten());
                match ess_approx_discrete(i, p, alpha, kappas, deltas, klm, kc) {
                    Ok(v) => Ok(Some(v)),
                    Err(Error::InvalidArgument(_)) if p.weight(i) == 0.0 && kc.is_none() => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let full = p.is_fully_supported();
        Ok(Self {
            alpha,
            weights: p.weights().to_vec(),
            kappas: kappas.to_vec(),
            deltas: deltas.to_vec(),
            per_alternative,
            max_kl_approx: if full { Some(max_kl_approx(p, alpha, kappas, deltas)?) } else { None },
            lower_bound: minimax_lower_bound(alpha, kappas, deltas)?,
            loss: if full { Some(asymptotic_loss(p, kappas, deltas)?) } else { None },
        })
    }

    /// Largest available per-alternative approximation.
    pub fn max_per_alternative(&self) -> Option<f64> {
        self.per_alternative.iter().flatten().copied().reduce(f64::max)
    }
}

type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A mixing density on a closed interval, tabulated on a composite
/// Gauss–Legendre grid and normalized by the same rule.
#[derive(Clone)]
pub struct MixingDensity {
    grid: QuadratureGrid,
    values: Vec<f64>,
    normalizer: f64,
    unnormalized: DensityFn,
}

impl fmt::Debug for MixingDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MixingDensity")
            .field("interval", &(self.grid.lo, self.grid.hi))
            .field("nodes", &self.grid.len())
            .field("normalizer", &self.normalizer)
            .finish()
    }
}

impl MixingDensity {
    /// Tabulates `f / integral(f)` on `grid_size` nodes in `[lo, hi]`.
    pub fn from_fn<F>(lo: f64, hi: f64, grid_size: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let grid = QuadratureGrid::composite(lo, hi, grid_size)?;
        let raw: Vec<f64> = grid.nodes.iter().map(|&t| f(t)).collect();
        if let Some(v) = raw.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::NonFinite(format!("density value {v}")));
        }
        let normalizer: f64 = raw.iter().zip(&grid.weights).map(|(v, w)| v * w).sum();
        if !(normalizer > 0.0 && normalizer.is_finite()) {
            return Err(Error::InvalidArgument(format!("density has total mass {normalizer}")));
        }
        let values: Vec<f64> = raw.iter().map(|v| v / normalizer).collect();
        let mass: f64 = values.iter().zip(&grid.weights).map(|(v, w)| v * w).sum();
        debug_assert!((mass - 1.0).abs() < DENSITY_MASS_TOLERANCE);
        Ok(Self { grid, values, normalizer, unnormalized: Arc::new(f) })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.grid.lo, self.grid.hi)
    }

    /// Normalized density values at the grid nodes.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Integral of the unnormalized density over the interval.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Normalized density at any point of the interval; zero outside it.
    pub fn density_at(&self, theta: f64) -> f64 {
        if theta < self.grid.lo || theta > self.grid.hi {
            0.0
        } else {
            (self.unnormalized)(theta) / self.normalizer
        }
    }

    /// Quadrature-weighted total mass of the tabulated values.
    pub fn mass(&self) -> f64 {
        self.values.iter().zip(&self.grid.weights).map(|(v, w)| v * w).sum()
    }

    /// `integral h(theta) g(theta) dtheta` by the density's quadrature rule.
    pub fn expect<H: Fn(f64) -> f64>(&self, h: H) -> f64 {
        self.grid.nodes.iter().zip(&self.grid.weights).zip(&self.values).map(|((&t, w), v)| w * v * h(t)).sum()
    }
}

fn check_interval<F: ExpFamily + ?Sized>(family: &F, lo: f64, hi: f64) -> Result<()> {
    family.check_theta(lo)?;
    family.check_theta(hi)?;
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("interval [{lo}, {hi}] is empty")));
    }
    if lo <= 0.0 && hi >= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "interval [{lo}, {hi}] contains theta = 0 where the KL number vanishes"
        )));
    }
    Ok(())
}

/// `exp(kappa_theta) sqrt(psi''_theta / I_theta)`, the unnormalized optimal density.
pub fn optimal_density_integrand<F, K>(family: &F, kappa_fn: &K, theta: f64) -> f64
where
    F: ExpFamily + ?Sized,
    K: Fn(f64) -> f64 + ?Sized,
{
    kappa_fn(theta).exp() * (family.psi2(theta) / family.info(theta)).sqrt()
}

/// The nearly minimax continuous mixing density
/// `g0(theta) ∝ exp(kappa_theta) sqrt(psi''_theta / I_theta)` on `[lo, hi]`.
///
/// The interval must exclude `theta = 0`. The normalizer is available through
/// [`MixingDensity::normalizer`].
pub fn optimal_density<F, K>(family: F, lo: f64, hi: f64, grid_size: usize, kappa_fn: K) -> Result<MixingDensity>
where
    F: ExpFamily + Send + 'static,
    K: Fn(f64) -> f64 + Send + Sync + 'static,
{
    check_interval(&family, lo, hi)?;
    MixingDensity::from_fn(lo, hi, grid_size, move |t| optimal_density_integrand(&family, &kappa_fn, t))
}

/// Value of the continuous expected-sample-size approximation at one `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousApprox {
    /// Approximation of `I_theta E_theta[T_A]` in nats.
    pub value: f64,
    /// `theta` sits on an endpoint of the interval.
    pub on_boundary: bool,
}

fn second_order_terms(alpha: f64) -> f64 {
    let l = alpha.ln().abs();
    l + 0.5 * l.ln() - 0.5 * (1.0 + (2.0 * PI).ln())
}

/// Approximation of `I_theta E_theta[T_A]` for the continuous mixture rule with
/// density `g` calibrated to `alpha`:
///
/// ```text
/// |log a| + log sqrt|log a| - (1 + log 2pi)/2
///     + log[ exp(kappa_theta) sqrt(psi''/I) / g(theta) * integral delta g ]
/// ```
pub fn ess_approx_continuous<F, K, D>(
    theta: f64,
    g: &MixingDensity,
    alpha: f64,
    kappa_fn: K,
    delta_fn: D,
    family: &F,
) -> Result<ContinuousApprox>
where
    F: ExpFamily + ?Sized,
    K: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    check_alpha(alpha)?;
    let (lo, hi) = g.interval();
    if !(theta >= lo && theta <= hi) {
        return Err(Error::InvalidArgument(format!("theta {theta} outside [{lo}, {hi}]")));
    }
    family.check_theta(theta)?;
    let gt = g.density_at(theta);
    if !(gt > 0.0) {
        return Err(Error::InvalidArgument(format!("mixing density vanishes at theta {theta}")));
    }
    let mixed = g.expect(&delta_fn);
    let log_term = optimal_density_integrand(family, &kappa_fn, theta).ln() - gt.ln() + mixed.ln();
    let value = second_order_terms(alpha) + log_term;
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("continuous approximation at theta {theta}")));
    }
    Ok(ContinuousApprox { value, on_boundary: theta == lo || theta == hi })
}

/// Minimax lower bound for the continuous problem on `[lo, hi]`:
/// `|log a| + log sqrt|log a| - (1 + log 2pi)/2 + log integral delta exp(kappa) sqrt(psi''/I)`.
pub fn continuous_lower_bound<F, K, D>(
    family: &F,
    lo: f64,
    hi: f64,
    grid_size: usize,
    alpha: f64,
    kappa_fn: K,
    delta_fn: D,
) -> Result<f64>
where
    F: ExpFamily + ?Sized,
    K: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    check_alpha(alpha)?;
    check_interval(family, lo, hi)?;
    let grid = QuadratureGrid::composite(lo, hi, grid_size)?;
    let integral = grid.integrate(|t| delta_fn(t) * optimal_density_integrand(family, &kappa_fn, t));
    Ok(second_order_terms(alpha) + integral.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ExponentialFamily, GaussianFamily};

    // reference quantities for means (1, 2, 3), rounded to three decimals
    const KAPPA: [f64; 3] = [0.718, 1.747, 3.146];
    const DELTA: [f64; 3] = [0.560, 0.320, 0.190];
    const INFO: [f64; 3] = [0.5, 2.0, 4.5];

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn klm() -> KlMatrix {
        let means = [1.0f64, 2.0, 3.0];
        KlMatrix::new(
            INFO.to_vec(),
            means.iter().map(|a| means.iter().map(|b| 0.5 * (a - b) * (a - b)).collect()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn optimal_mixing_examples() {
        let p = optimal_mixing(&KAPPA).unwrap();
        assert!(close(p.weights(), &[0.066, 0.185, 0.749], 5e-4), "{p:?}");
        let p = optimal_mixing(&[2.0, 2.0, 2.0, 2.0]).unwrap();
        assert!(close(p.weights(), &[0.25; 4], 1e-15));
        assert_eq!(optimal_mixing(&[0.3]).unwrap().weights(), &[1.0]);
        // large kappas do not overflow
        let p = optimal_mixing(&[1000.0, 1000.0]).unwrap();
        assert!(close(p.weights(), &[0.5, 0.5], 1e-15));
    }

    #[test]
    fn named_mixing_examples() {
        let kl = named_mixing(MixingKind::Kl, &INFO, &DELTA, &KAPPA).unwrap();
        assert!(close(kl.weights(), &[0.071, 0.286, 0.643], 5e-4));
        let inv = named_mixing(MixingKind::InvDelta, &INFO, &DELTA, &KAPPA).unwrap();
        assert!(close(inv.weights(), &[0.176, 0.307, 0.517], 5e-4));
        let ekd = named_mixing(MixingKind::ExpkOverDelta, &INFO, &DELTA, &KAPPA).unwrap();
        assert!(close(ekd.weights(), &[0.0254, 0.1246, 0.850], 5e-4), "{ekd:?}");
        let u = named_mixing(MixingKind::Uniform, &INFO, &DELTA, &KAPPA).unwrap();
        assert!(close(u.weights(), &[1.0 / 3.0; 3], 1e-15));
        assert!(named_mixing(MixingKind::InvDelta, &INFO, &[0.5, 0.0, 0.1], &KAPPA).is_err());
        assert!(named_mixing(MixingKind::Kl, &INFO, &[0.5, -0.2, 0.1], &KAPPA).is_err());
    }

    #[test]
    fn threshold_examples() {
        let p0 = optimal_mixing(&KAPPA).unwrap();
        let a = threshold_for_alpha(&p0, &DELTA, 1e-2).unwrap();
        assert!((a - 23.85).abs() < 0.01, "{a}");
        let deg = MixingDistribution::degenerate(3, 1).unwrap();
        assert!((threshold_for_alpha(&deg, &DELTA, 0.05).unwrap() - 0.320 / 0.05).abs() < 1e-12);
        let u = MixingDistribution::uniform(3).unwrap();
        let a = threshold_for_alpha(&u, &DELTA, 1e-4).unwrap();
        assert!((a - 1.070 / 3.0 * 1e4).abs() < 1e-8, "{a}");
        assert!(threshold_for_alpha(&u, &DELTA, 1.0).is_err());
        assert!(threshold_for_alpha(&u, &DELTA, 0.0).is_err());
    }

    #[test]
    fn ess_approx_examples() {
        let klm = klm();
        let p0 = optimal_mixing(&KAPPA).unwrap();
        let v: Vec<f64> =
            (0..3).map(|i| ess_approx_discrete(i, &p0, 1e-4, &KAPPA, &DELTA, &klm, None).unwrap()).collect();
        for x in &v {
            assert!((x - 11.21).abs() < 0.01, "{x}");
            assert!((x - v[0]).abs() < 1e-12);
        }
        // K = 1 reduces to the SPRT benchmark
        let one = KlMatrix::new(vec![0.5], vec![vec![0.0]]).unwrap();
        let p1 = MixingDistribution::new(vec![1.0]).unwrap();
        let s = ess_approx_discrete(0, &p1, 1e-4, &[0.718], &[0.560], &one, None).unwrap();
        assert!((s - 9.349).abs() < 1e-3, "{s}");
        let u = MixingDistribution::uniform(3).unwrap();
        let worst = (0..3)
            .map(|i| ess_approx_discrete(i, &u, 1e-4, &KAPPA, &DELTA, &klm, None).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((worst - 12.42).abs() < 0.01, "{worst}");
    }

    #[test]
    fn ess_approx_zero_weight() {
        let klm = klm();
        // P_1 misspecified against {2, 3}: drift I_1 - I_12 = 0
        let p = MixingDistribution::new(vec![0.0, 0.5, 0.5]).unwrap();
        assert!(matches!(
            ess_approx_discrete(0, &p, 1e-4, &KAPPA, &DELTA, &klm, Some(1.0)),
            Err(Error::NonPositiveDrift { index: 0, .. })
        ));
        // P_3 against {1, 2}: i* = 2 with drift 4.5 - 0.5 = 4
        let p = MixingDistribution::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert!(ess_approx_discrete(2, &p, 1e-4, &KAPPA, &DELTA, &klm, None).is_err());
        let v = ess_approx_discrete(2, &p, 1e-4, &KAPPA, &DELTA, &klm, Some(2.0)).unwrap();
        let expected = 1e-4f64.ln().abs() + (0.5 * 0.560 + 0.5 * 0.320f64).ln() + 2.0 - 0.5f64.ln();
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn max_kl_and_bound_examples() {
        let p0 = optimal_mixing(&KAPPA).unwrap();
        let u = MixingDistribution::uniform(3).unwrap();
        assert!((max_kl_approx(&p0, 1e-6, &KAPPA, &DELTA).unwrap() - 15.82).abs() < 0.01);
        assert!((max_kl_approx(&u, 1e-8, &KAPPA, &DELTA).unwrap() - 21.63).abs() < 0.01);
        let one = MixingDistribution::new(vec![1.0]).unwrap();
        let sprt = 1e-3f64.ln().abs() + (0.560f64 * 0.718f64.exp()).ln();
        assert!((max_kl_approx(&one, 1e-3, &[0.718], &[0.560]).unwrap() - sprt).abs() < 1e-12);
        assert!((minimax_lower_bound(1e-3, &[0.718], &[0.560]).unwrap() - sprt).abs() < 1e-12);
        let lb = minimax_lower_bound(1e-4, &KAPPA, &DELTA).unwrap();
        assert!((lb - 11.21).abs() < 0.01);
        let s: f64 = KAPPA.iter().zip(&DELTA).map(|(k, d)| d * k.exp()).sum();
        assert!((s - 7.400).abs() < 1e-3);
        assert!((minimax_lower_bound(1.0, &KAPPA, &DELTA).unwrap() - s.ln()).abs() < 1e-12);
        let partial = MixingDistribution::new(vec![0.0, 0.5, 0.5]).unwrap();
        assert!(max_kl_approx(&partial, 1e-3, &KAPPA, &DELTA).is_err());
    }

    #[test]
    fn loss_examples() {
        let p0 = optimal_mixing(&KAPPA).unwrap();
        assert!(asymptotic_loss(&p0, &KAPPA, &DELTA).unwrap().abs() < 1e-12);
        let u = MixingDistribution::uniform(3).unwrap();
        assert!((asymptotic_loss(&u, &KAPPA, &DELTA).unwrap() - 1.21).abs() < 0.01);
        let kl = named_mixing(MixingKind::Kl, &INFO, &DELTA, &KAPPA).unwrap();
        assert!((asymptotic_loss(&kl, &KAPPA, &DELTA).unwrap() - 0.21).abs() < 0.01);
    }

    #[test]
    fn equalizer_examples() {
        let p0 = optimal_mixing(&KAPPA).unwrap();
        assert!(equalizer_defect(&p0, &KAPPA).unwrap() < 1e-12);
        let u = MixingDistribution::uniform(3).unwrap();
        assert!((equalizer_defect(&u, &KAPPA).unwrap() - (3.146 - 0.718)).abs() < 1e-12);
        let one = MixingDistribution::new(vec![1.0]).unwrap();
        assert_eq!(equalizer_defect(&one, &[4.0]).unwrap(), 0.0);
    }

    #[test]
    fn performance_report_consistency() {
        let klm = klm();
        let u = MixingDistribution::uniform(3).unwrap();
        let r = PerformanceReport::new(&u, 1e-4, &KAPPA, &DELTA, &klm, None).unwrap();
        let max = r.max_per_alternative().unwrap();
        assert!((r.max_kl_approx.unwrap() - max).abs() < 1e-12);
        assert!(r.per_alternative.iter().flatten().all(|v| *v <= max));
        assert!(r.loss.unwrap() >= 0.0);
        let p = MixingDistribution::new(vec![0.5, 0.5, 0.0]).unwrap();
        let r = PerformanceReport::new(&p, 1e-4, &KAPPA, &DELTA, &klm, None).unwrap();
        assert_eq!(r.per_alternative[2], None);
        assert_eq!(r.loss, None);
    }

    #[test]
    fn exponential_optimal_density_integrand() {
        let kappa = |t: f64| t / (1.0 - t);
        let v = optimal_density_integrand(&ExponentialFamily, &kappa, 0.5);
        let direct = 1f64.exp() / (0.5 * (0.5 + 0.5 * 0.5f64.ln())).sqrt();
        assert!((v - direct).abs() < 1e-12);
        assert!((v - 9.8143).abs() < 1e-4, "{v}");
        let g = optimal_density(ExponentialFamily, 0.3, 0.7, 128, kappa).unwrap();
        assert!((g.mass() - 1.0).abs() < DENSITY_MASS_TOLERANCE);
        assert!((g.density_at(0.5) * g.normalizer() - v).abs() < 1e-12);
    }

    #[test]
    fn gaussian_density_with_constant_kappa() {
        let g = optimal_density(GaussianFamily, 0.5, 2.0, 64, |_| 0.7).unwrap();
        // sqrt(psi''/I) = sqrt(2)/theta, integral over [0.5, 2] = sqrt(2) ln 4
        let norm = 2f64.sqrt() * 4f64.ln();
        for (&t, &v) in g.grid().nodes.iter().zip(g.values()) {
            assert!((v - 2f64.sqrt() / t / norm).abs() < 1e-10);
        }
        assert!((g.mass() - 1.0).abs() < DENSITY_MASS_TOLERANCE);
    }

    #[test]
    fn optimal_density_rejects_intervals_touching_zero() {
        assert!(optimal_density(GaussianFamily, -0.5, 1.0, 64, |_| 0.0).is_err());
        assert!(optimal_density(ExponentialFamily, 0.0, 0.5, 64, |_| 0.0).is_err());
        assert!(optimal_density(ExponentialFamily, 0.3, 1.0, 64, |_| 0.0).is_err());
    }

    /// A family with `psi'' = I` everywhere on its grid region, to make the
    /// square-root factor equal to one.
    struct UnitRatio;
    impl ExpFamily for UnitRatio {
        fn psi(&self, t: f64) -> f64 {
            t.exp() - 1.0 - t
        }
        fn psi1(&self, t: f64) -> f64 {
            t.exp() - 1.0
        }
        fn psi2(&self, t: f64) -> f64 {
            self.info(t)
        }
        fn domain(&self) -> (f64, f64) {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
        fn sample<R: rand::Rng + ?Sized>(&self, _t: f64, _rng: &mut R) -> f64 {
            unimplemented!()
        }
    }

    #[test]
    fn continuous_toy_arithmetic() {
        let g = MixingDensity::from_fn(1.0, 2.0, 16, |_| 1.0).unwrap();
        let v = ess_approx_continuous(1.5, &g, 1e-4, |_| 0.0, |_| 1.0, &UnitRatio).unwrap();
        let l = 1e-4f64.ln().abs();
        let expected = l + 0.5 * l.ln() - 0.5 * (1.0 + (2.0 * PI).ln());
        assert!((v.value - expected).abs() < 1e-12);
        assert!((v.value - 8.902).abs() < 1e-3, "{}", v.value);
        assert!(!v.on_boundary);
        assert!(ess_approx_continuous(1.0, &g, 1e-4, |_| 0.0, |_| 1.0, &UnitRatio).unwrap().on_boundary);
        assert!(ess_approx_continuous(2.5, &g, 1e-4, |_| 0.0, |_| 1.0, &UnitRatio).is_err());
    }

    #[test]
    fn optimal_density_equalizes_continuous_approximation() {
        let kappa = |t: f64| t / (1.0 - t);
        let delta = |t: f64| 1.0 - t;
        let g0 = optimal_density(ExponentialFamily, 0.3, 0.7, 128, kappa).unwrap();
        let bound = continuous_lower_bound(&ExponentialFamily, 0.3, 0.7, 128, 1e-4, kappa, delta).unwrap();
        let gu = MixingDensity::from_fn(0.3, 0.7, 128, |_| 1.0).unwrap();
        let mut worst_uniform = f64::NEG_INFINITY;
        for k in 0..200 {
            let t = 0.3 + 0.4 * k as f64 / 199.0;
            let v = ess_approx_continuous(t, &g0, 1e-4, kappa, delta, &ExponentialFamily).unwrap().value;
            assert!((v - bound).abs() < 1e-9, "theta {t}: {v} vs {bound}");
            let w = ess_approx_continuous(t, &gu, 1e-4, kappa, delta, &ExponentialFamily).unwrap().value;
            worst_uniform = worst_uniform.max(w);
        }
        assert!(worst_uniform > bound + 1e-3);
    }

    #[test]
    fn serde_validates_weights() {
        let p: MixingDistribution = serde_json::from_str("[0.25, 0.75]").unwrap();
        assert_eq!(p.weights(), &[0.25, 0.75]);
        assert!(serde_json::from_str::<MixingDistribution>("[0.25, 0.5]").is_err());
    }
}

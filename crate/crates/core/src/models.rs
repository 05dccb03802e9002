//! Statistical settings: a simple null against simple alternatives.
//!
//! Every model exposes the log-likelihood-ratio increment `log dF_i/dF_0 (x)`,
//! samplers under the null and under each alternative, and the
//! Kullback–Leibler numbers
//!
//! ```text
//! I_i  = E_i[log dF_i/dF_0]
//! I_ji = I_j - E_j[log dF_i/dF_0]      (divergence of F_j from F_i)
//! ```
//!
//! Observations are scalar.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::mixing::MixingDistribution;
use crate::{Error, Result};

/// Relative tolerance for declaring two cross divergences equal.
pub const TIE_RELATIVE_TOLERANCE: f64 = 1e-9;

/// A null distribution `F_0` and `K` simple alternatives `F_1..F_K`.
///
/// Samplers take the generator explicitly; implementations hold no mutable
/// state and may be shared across workers.
pub trait Alternatives: Sync {
    /// Number of alternatives `K`.
    fn count(&self) -> usize;

    /// `log dF_i/dF_0 (x)` for zero-based `i`. Callers guarantee `i < count()`.
    fn loglr(&self, i: usize, x: f64) -> f64;

    fn sample_null<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;

    fn sample_alt<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64;

    /// Kullback–Leibler numbers of the model.
    fn kl_numbers(&self) -> Result<KlMatrix>;

    /// Whether the increments are supported on a lattice. Renewal limits
    /// assume non-arithmetic increments; lattice models are still simulated
    /// but their summaries are flagged.
    fn is_lattice(&self) -> bool {
        false
    }
}

/// `log dF_i/dF_0 (x)` with the index checked.
pub fn loglr_increment<M: Alternatives + ?Sized>(model: &M, i: usize, x: f64) -> Result<f64> {
    check_index(i, model.count())?;
    Ok(model.loglr(i, x))
}

pub(crate) fn check_index(index: usize, count: usize) -> Result<()> {
    if index >= count {
        Err(Error::IndexOutOfRange { index, count })
    } else {
        Ok(())
    }
}

/// Kullback–Leibler numbers `I_i` and cross divergences `I_ji`.
#[derive(Debug, Clone, PartialEq)]
pub struct KlMatrix {
    info: Vec<f64>,
    cross: Vec<Vec<f64>>,
}

impl KlMatrix {
    /// Validates `I_i > 0`, `I_ji >= 0` and a zero diagonal.
    pub fn new(info: Vec<f64>, cross: Vec<Vec<f64>>) -> Result<Self> {
        let k = info.len();
        if k == 0 {
            return Err(Error::InvalidArgument("at least one alternative is required".into()));
        }
        if cross.len() != k || cross.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidArgument(format!("cross divergence matrix must be {k}x{k}")));
        }
        for (i, &v) in info.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("I_{} = {v}", i + 1)));
            }
            if v <= 0.0 {
                return Err(Error::InvalidArgument(format!("I_{} = {v} must be positive", i + 1)));
            }
        }
        for (j, row) in cross.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("I_{}{} = {v}", j + 1, i + 1)));
                }
                if v < 0.0 || (i == j && v != 0.0) {
                    return Err(Error::InvalidArgument(format!("I_{}{} = {v} is invalid", j + 1, i + 1)));
                }
            }
        }
        Ok(Self { info, cross })
    }

    pub fn len(&self) -> usize {
        self.info.len()
    }

    pub fn is_empty(&self) -> bool {
        self.info.is_empty()
    }

    /// `I_i`.
    pub fn info(&self, i: usize) -> f64 {
        self.info[i]
    }

    pub fn infos(&self) -> &[f64] {
        &self.info
    }

    /// `I_ji`, the divergence of `F_j` from `F_i`.
    pub fn cross(&self, j: usize, i: usize) -> f64 {
        self.cross[j][i]
    }

    /// Mean increment of the walk `Z^walk` under `P_truth`: `I_truth - I_{truth,walk}`.
    pub fn drift(&self, truth: usize, walk: usize) -> f64 {
        self.info[truth] - self.cross[truth][walk]
    }
}

/// The active alternative closest to `i` in divergence: `argmin_{j: p_j > 0} I_ij`.
///
/// Returns `i` itself when `p_i > 0`. Ties within a relative tolerance of
/// [`TIE_RELATIVE_TOLERANCE`] are an error; the expansion of the expected
/// sample size is only available for a unique minimizer.
pub fn closest_active_index(klm: &KlMatrix, p: &MixingDistribution, i: usize) -> Result<usize> {
    check_index(i, klm.len())?;
    if p.len() != klm.len() {
        return Err(Error::Mismatch(format!(
            "mixing distribution has {} weights but the model has {} alternatives",
            p.len(),
            klm.len()
        )));
    }
    if p.weight(i) > 0.0 {
        return Ok(i);
    }
    let mut ranked: Vec<(usize, f64)> = p.support().map(|j| (j, klm.cross(i, j))).collect();
    if ranked.is_empty() {
        return Err(Error::InvalidArgument("mixing distribution has no positive weight".into()));
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    if let [(first, a), (second, b), ..] = ranked[..] {
        let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        if (b - a) <= TIE_RELATIVE_TOLERANCE * scale {
            return Err(Error::NonUniqueClosest { index: i, first: first.min(second), second: first.max(second) });
        }
    }
    Ok(ranked[0].0)
}

/// Unit-variance Gaussian observations: `N(0, 1)` against `N(mu_i, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeanModel {
    means: Vec<f64>,
}

impl GaussianMeanModel {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidArgument("at least one mean is required".into()));
        }
        for (i, &m) in means.iter().enumerate() {
            if !m.is_finite() || m == 0.0 {
                return Err(Error::InvalidArgument(format!("mean {m} must be finite and nonzero")));
            }
            if means[..i].contains(&m) {
                return Err(Error::InvalidArgument(format!("mean {m} is repeated")));
            }
        }
        Ok(Self { means })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }
}

impl Alternatives for GaussianMeanModel {
    fn count(&self) -> usize {
        self.means.len()
    }

    fn loglr(&self, i: usize, x: f64) -> f64 {
        let m = self.means[i];
        m * x - 0.5 * m * m
    }

    fn sample_null<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        StandardNormal.sample(rng)
    }

    fn sample_alt<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.means[i] + z
    }

    fn kl_numbers(&self) -> Result<KlMatrix> {
        let info = self.means.iter().map(|m| 0.5 * m * m).collect();
        let cross =
            self.means.iter().map(|mj| self.means.iter().map(|mi| 0.5 * (mj - mi) * (mj - mi)).collect()).collect();
        KlMatrix::new(info, cross)
    }
}

/// A one-parameter exponential family `dF_theta = exp(theta x - psi(theta)) dF_0`.
pub trait ExpFamily: Sync {
    /// Log moment generating function of `X` under `F_0`.
    fn psi(&self, theta: f64) -> f64;
    fn psi1(&self, theta: f64) -> f64;
    fn psi2(&self, theta: f64) -> f64;

    /// Open natural parameter interval on which `psi` is finite.
    fn domain(&self) -> (f64, f64);

    /// Draws `X ~ F_theta`; `theta = 0` is the null.
    fn sample<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> f64;

    fn check_theta(&self, theta: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if theta.is_finite() && theta > lo && theta < hi {
            Ok(())
        } else {
            Err(Error::OutsideDomain { theta, lo, hi })
        }
    }

    /// `S_1^theta = theta x - psi(theta)`.
    fn loglr(&self, theta: f64, x: f64) -> f64 {
        theta * x - self.psi(theta)
    }

    /// `I_theta = theta psi'(theta) - psi(theta)`.
    fn info(&self, theta: f64) -> f64 {
        theta * self.psi1(theta) - self.psi(theta)
    }
}

/// Divergence of `F_theta` from `F_theta_star`:
/// `(theta - theta*) psi'(theta) - (psi(theta) - psi(theta*))`.
pub fn cross_kl_exp_family<F: ExpFamily + ?Sized>(family: &F, theta: f64, theta_star: f64) -> Result<f64> {
    family.check_theta(theta)?;
    family.check_theta(theta_star)?;
    if theta == theta_star {
        return Ok(0.0);
    }
    Ok((theta - theta_star) * family.psi1(theta) - (family.psi(theta) - family.psi(theta_star)))
}

/// `N(theta, 1)` written as an exponential family, `psi(theta) = theta^2 / 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GaussianFamily;

impl ExpFamily for GaussianFamily {
    fn psi(&self, theta: f64) -> f64 {
        0.5 * theta * theta
    }
    fn psi1(&self, theta: f64) -> f64 {
        theta
    }
    fn psi2(&self, _theta: f64) -> f64 {
        1.0
    }
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn sample<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        theta + z
    }
}

/// Exponential observations: `F_0 = Exp(1)` and `F_theta = Exp(1 - theta)` for
/// `theta < 1`, with density `(1 - theta) exp(-(1 - theta) x)` and
/// `psi(theta) = -log(1 - theta)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExponentialFamily;

impl ExpFamily for ExponentialFamily {
    fn psi(&self, theta: f64) -> f64 {
        -(-theta).ln_1p()
    }
    fn psi1(&self, theta: f64) -> f64 {
        1.0 / (1.0 - theta)
    }
    fn psi2(&self, theta: f64) -> f64 {
        1.0 / ((1.0 - theta) * (1.0 - theta))
    }
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, 1.0)
    }
    fn sample<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> f64 {
        let e: f64 = Exp1.sample(rng);
        e / (1.0 - theta)
    }
    fn info(&self, theta: f64) -> f64 {
        theta / (1.0 - theta) + (-theta).ln_1p()
    }
}

/// Finitely many points `theta_1..theta_K` of an exponential family, used as
/// discrete alternatives.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyPoints<F> {
    family: F,
    thetas: Vec<f64>,
}

impl<F: ExpFamily> FamilyPoints<F> {
    pub fn new(family: F, thetas: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::InvalidArgument("at least one parameter is required".into()));
        }
        for (i, &t) in thetas.iter().enumerate() {
            family.check_theta(t)?;
            if t == 0.0 {
                return Err(Error::InvalidArgument("theta = 0 is the null".into()));
            }
            if thetas[..i].contains(&t) {
                return Err(Error::InvalidArgument(format!("theta {t} is repeated")));
            }
        }
        Ok(Self { family, thetas })
    }

    pub fn family(&self) -> &F {
        &self.family
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }
}

impl<F: ExpFamily> Alternatives for FamilyPoints<F> {
    fn count(&self) -> usize {
        self.thetas.len()
    }

    fn loglr(&self, i: usize, x: f64) -> f64 {
        self.family.loglr(self.thetas[i], x)
    }

    fn sample_null<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.family.sample(0.0, rng)
    }

    fn sample_alt<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        self.family.sample(self.thetas[i], rng)
    }

    fn kl_numbers(&self) -> Result<KlMatrix> {
        let info = self.thetas.iter().map(|&t| self.family.info(t)).collect();
        let cross = self
            .thetas
            .iter()
            .map(|&tj| {
                self.thetas
                    .iter()
                    .map(|&ti| cross_kl_exp_family(&self.family, tj, ti).map(|v| v.max(0.0)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        KlMatrix::new(info, cross)
    }
}

/// Monte Carlo estimates of the KL numbers with standard errors, for models
/// without closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct KlEstimate {
    pub matrix: KlMatrix,
    pub stderr_info: Vec<f64>,
    pub stderr_cross: Vec<Vec<f64>>,
}

/// Estimates `I_i` and `I_ji` from `reps` draws under each `P_j`.
pub fn mc_kl_numbers<M: Alternatives + ?Sized>(model: &M, reps: u64, seed: u64) -> Result<KlEstimate> {
    use crate::montecarlo::Summary;
    use crate::rng::{replication_rng, StreamRole};

    if reps < 2 {
        return Err(Error::InvalidArgument("at least two replications are required".into()));
    }
    let k = model.count();
    let mut info = vec![0.0; k];
    let mut stderr_info = vec![0.0; k];
    let mut cross = vec![vec![0.0; k]; k];
    let mut stderr_cross = vec![vec![0.0; k]; k];
    for j in 0..k {
        let mut rng = replication_rng(seed, StreamRole::KlEstimate, j as u64);
        let mut own = Summary::default();
        let mut diffs = vec![Summary::default(); k];
        for _ in 0..reps {
            let x = model.sample_alt(j, &mut rng);
            let zj = model.loglr(j, x);
            own.push(zj);
            for (i, d) in diffs.iter_mut().enumerate() {
                d.push(zj - model.loglr(i, x));
            }
        }
        info[j] = own.mean();
        stderr_info[j] = own.stderr();
        for i in 0..k {
            if i != j {
                cross[j][i] = diffs[i].mean().max(0.0);
                stderr_cross[j][i] = diffs[i].stderr();
            }
        }
    }
    Ok(KlEstimate { matrix: KlMatrix::new(info, cross)?, stderr_info, stderr_cross })
}

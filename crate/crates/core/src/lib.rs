//! Nearly minimax one-sided mixture tests.
//!
//! A one-sided (power-one) sequential test watches a stream of observations and
//! stops only when the evidence against a simple null `P_0` becomes large. When
//! the alternative is a finite set `{P_1, ..., P_K}` the natural statistic is a
//! weighted mixture of the per-alternative likelihood ratios,
//!
//! ```text
//! Z_n = log sum_i p_i exp(Z_n^i),   T_A = inf { n >= 1 : Z_n >= log A }
//! ```
//!
//! and the choice of weights `p` decides how the test trades detection speed
//! across alternatives. This crate provides:
//!
//! | module | contents |
//! |--------|----------|
//! | [`models`] | Gaussian mean-shift and exponential-family alternatives, KL numbers |
//! | [`renewal`] | limiting overshoot summaries `kappa` (mean) and `delta` (Laplace transform) |
//! | [`mixing`] | optimal and named mixing weights, threshold calibration, asymptotic formulas |
//! | [`engine`] | log-space SPRT, discrete mixture and continuous (quadrature) mixture rules |
//! | [`montecarlo`] | importance-sampling error probabilities, expected sample sizes |
//! | [`experiment`] | reproducible experiment configs and CSV/JSON tables |
//!
//! The weights `p_i ∝ exp(kappa_i)` equalize the second-order expansion of
//! `I_i E_i[T_A]` across alternatives and attain the minimax lower bound
//! `|log alpha| + log(sum_i delta_i exp(kappa_i))` up to a vanishing term.
//!
//! ```rust
//! use mixsprt::mixing::{optimal_mixing, minimax_lower_bound, max_kl_approx};
//! use mixsprt::renewal::{gaussian_kappa, gaussian_delta};
//!
//! let kappas: Vec<f64> = [1.0, 2.0, 3.0].iter().map(|&m| gaussian_kappa(m, 1e-10).unwrap()).collect();
//! let deltas: Vec<f64> = [1.0, 2.0, 3.0].iter().map(|&m| gaussian_delta(m, 1e-10).unwrap()).collect();
//! let p0 = optimal_mixing(&kappas).unwrap();
//! let alpha = 1e-4;
//! let approx = max_kl_approx(&p0, alpha, &kappas, &deltas).unwrap();
//! let bound = minimax_lower_bound(alpha, &kappas, &deltas).unwrap();
//! assert!((approx - bound).abs() < 1e-12);
//! ```
//!
//! Indices are zero-based throughout the API; tabular output uses one-based
//! `alternative_index` columns.

// `!(x > 0.0)` rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod experiment;
pub mod mixing;
pub mod models;
pub mod montecarlo;
pub mod normal;
pub mod quadrature;
pub mod renewal;
pub mod rng;

pub use error::{Error, Result};

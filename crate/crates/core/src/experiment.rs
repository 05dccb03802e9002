//! Reproducible experiments and their tabular output.
//!
//! An [`ExperimentConfig`] names a model, one or more mixings, a list of
//! target error probabilities and the Monte Carlo settings. Each command turns
//! a config into a [`Report`]: named tables plus free-text notes, rendered as
//! CSV (6 significant digits, `#`-prefixed header lines) or JSON (full
//! precision). Every report carries a fingerprint of the config that produced
//! it.
//!
//! ```json
//! {
//!   "model": { "kind": "gaussian-mean", "means": [1, 2, 3] },
//!   "mixing": [{ "kind": "optimal" }, { "kind": "uniform" }],
//!   "alpha": [0.01, 0.0001],
//!   "reps": 100000,
//!   "seed": 1
//! }
//! ```

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::mixing::{
    asymptotic_loss, continuous_lower_bound, equalizer_defect, ess_approx_continuous, named_mixing, optimal_density,
    threshold_for_alpha, MixingDensity, MixingDistribution, MixingKind, PerformanceReport,
};
use crate::models::{closest_active_index, Alternatives, ExponentialFamily, FamilyPoints, GaussianMeanModel, KlMatrix};
use crate::montecarlo::{compare_to_asymptotics, estimate_error_probability, estimate_max_kl, with_workers, SimConfig};
use crate::renewal::{
    default_log_threshold, exp_family_exponential_summary, exponential_delta, exponential_kappa, gaussian_summary,
    mc_overshoot_summary, overshoot_cross_summary, OvershootSummary,
};
use crate::{Error, Result};

/// Environment variable overriding the default seed.
pub const SEED_ENV: &str = "MIXSPRT_SEED";

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_REPS: u64 = 100_000;
pub const DEFAULT_GRID_SIZE: usize = 128;
pub const DEFAULT_SERIES_TOL: f64 = 1e-10;
pub const DEFAULT_THETA_POINTS: usize = 200;

/// Process exit codes.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Unit-variance Gaussian observations with the listed alternative means.
    GaussianMean { means: Vec<f64> },
    /// Exponential observations; `thetas` lists discrete alternatives in `(0, 1)`.
    ExpExponential {
        #[serde(default)]
        thetas: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingSpecKind {
    Optimal,
    Uniform,
    Kl,
    InvDelta,
    ExpkOverDelta,
    Explicit,
}

/// A mixing entry: either a bare kind name or `{kind, weights}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "MixingSpecRepr")]
pub struct MixingSpec {
    pub kind: MixingSpecKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MixingSpecFull {
    kind: MixingSpecKind,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MixingSpecRepr {
    Name(MixingSpecKind),
    Full(MixingSpecFull),
}

impl From<MixingSpecRepr> for MixingSpec {
    fn from(r: MixingSpecRepr) -> Self {
        match r {
            MixingSpecRepr::Name(kind) => Self { kind, weights: None },
            MixingSpecRepr::Full(f) => Self { kind: f.kind, weights: f.weights },
        }
    }
}

impl MixingSpec {
    pub fn named(kind: MixingKind) -> Self {
        let kind = match kind {
            MixingKind::Optimal => MixingSpecKind::Optimal,
            MixingKind::Uniform => MixingSpecKind::Uniform,
            MixingKind::Kl => MixingSpecKind::Kl,
            MixingKind::InvDelta => MixingSpecKind::InvDelta,
            MixingKind::ExpkOverDelta => MixingSpecKind::ExpkOverDelta,
        };
        Self { kind, weights: None }
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            MixingSpecKind::Optimal => "optimal",
            MixingSpecKind::Uniform => "uniform",
            MixingSpecKind::Kl => "kl",
            MixingSpecKind::InvDelta => "inv_delta",
            MixingSpecKind::ExpkOverDelta => "expk_over_delta",
            MixingSpecKind::Explicit => "explicit",
        }
    }

    fn resolve(&self, infos: &[f64], deltas: &[f64], kappas: &[f64]) -> Result<MixingDistribution> {
        let named = |k| named_mixing(k, infos, deltas, kappas);
        match self.kind {
            MixingSpecKind::Optimal => named(MixingKind::Optimal),
            MixingSpecKind::Uniform => named(MixingKind::Uniform),
            MixingSpecKind::Kl => named(MixingKind::Kl),
            MixingSpecKind::InvDelta => named(MixingKind::InvDelta),
            MixingSpecKind::ExpkOverDelta => named(MixingKind::ExpkOverDelta),
            MixingSpecKind::Explicit => {
                let w = self.weights.clone().ok_or_else(|| Error::Config("explicit mixing needs weights".into()))?;
                if w.len() != infos.len() {
                    return Err(Error::Config(format!(
                        "explicit mixing has {} weights for {} alternatives",
                        w.len(),
                        infos.len()
                    )));
                }
                MixingDistribution::new(w).map_err(|e| Error::Config(e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

fn default_mixings() -> Vec<MixingSpec> {
    vec![MixingSpec::named(MixingKind::Optimal), MixingSpec::named(MixingKind::Uniform)]
}

fn default_alphas() -> Vec<f64> {
    vec![1e-2, 1e-4, 1e-6]
}

fn default_reps() -> u64 {
    DEFAULT_REPS
}

/// `MIXSPRT_SEED` if set and parseable, else [`DEFAULT_SEED`].
pub fn default_seed() -> u64 {
    std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_SEED)
}

fn default_grid_size() -> usize {
    DEFAULT_GRID_SIZE
}

fn default_series_tol() -> f64 {
    DEFAULT_SERIES_TOL
}

fn default_theta_points() -> usize {
    DEFAULT_THETA_POINTS
}

/// Everything needed to reproduce one run of a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default = "default_mixings", deserialize_with = "one_or_many")]
    pub mixing: Vec<MixingSpec>,
    #[serde(default = "default_alphas", deserialize_with = "one_or_many")]
    pub alpha: Vec<f64>,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub max_n: Option<u64>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Parameter interval of the continuous mixture.
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_series_tol")]
    pub series_tol: f64,
    /// Number of evaluation points of the continuous approximation.
    #[serde(default = "default_theta_points")]
    pub theta_points: usize,
    /// Log threshold of the overshoot simulation; `25 I_i` when absent.
    #[serde(default)]
    pub log_threshold: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec) -> Self {
        Self {
            model,
            mixing: default_mixings(),
            alpha: default_alphas(),
            reps: DEFAULT_REPS,
            seed: default_seed(),
            max_n: None,
            format: OutputFormat::Csv,
            interval: None,
            grid_size: DEFAULT_GRID_SIZE,
            workers: None,
            series_tol: DEFAULT_SERIES_TOL,
            theta_points: DEFAULT_THETA_POINTS,
            log_threshold: None,
        }
    }

    /// Parses and validates a JSON config.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Enforces the numeric constraints of every module.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match &self.model {
            ModelSpec::GaussianMean { means } => {
                GaussianMeanModel::new(means.clone()).map_err(|e| Error::Config(e.to_string()))?;
            }
            ModelSpec::ExpExponential { thetas } => {
                if let Some(t) = thetas.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
                    return bad(format!("exponential-family parameter {t} must lie in (0, 1)"));
                }
                if !thetas.is_empty() {
                    FamilyPoints::new(ExponentialFamily, thetas.clone()).map_err(|e| Error::Config(e.to_string()))?;
                }
            }
        }
        if self.mixing.is_empty() {
            return bad("at least one mixing is required".into());
        }
        for m in &self.mixing {
            match (m.kind, &m.weights) {
                (MixingSpecKind::Explicit, None) => return bad("explicit mixing needs weights".into()),
                (MixingSpecKind::Explicit, Some(w)) => {
                    MixingDistribution::new(w.clone()).map_err(|e| Error::Config(e.to_string()))?;
                }
                (_, Some(_)) => {
                    return bad(format!("weights are only allowed for explicit mixings, not {}", m.label()))
                }
                _ => {}
            }
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return bad(format!("alpha {a} must lie in (0, 1)"));
        }
        if self.reps < 2 {
            return bad("reps must be at least 2".into());
        }
        if self.max_n == Some(0) {
            return bad("max_n must be at least 1".into());
        }
        if let Some([lo, hi]) = self.interval {
            if !(lo > 0.0 && lo < hi && hi < 1.0) {
                return bad(format!("interval [{lo}, {hi}] must satisfy 0 < lo < hi < 1"));
            }
        }
        if self.grid_size == 0 || !self.grid_size.is_multiple_of(crate::quadrature::PANEL_ORDER) {
            return bad(format!(
                "grid_size {} must be a positive multiple of {}",
                self.grid_size,
                crate::quadrature::PANEL_ORDER
            ));
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        if !(self.series_tol > 0.0) {
            return bad("series_tol must be positive".into());
        }
        if self.theta_points < 2 {
            return bad("theta_points must be at least 2".into());
        }
        if let Some(l) = self.log_threshold {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("log_threshold {l} must be positive"));
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the compact JSON form, ignoring
    /// the output format and worker count.
    pub fn fingerprint(&self) -> String {
        let canonical = Self { format: OutputFormat::Csv, workers: None, ..self.clone() };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn sim_config(&self) -> SimConfig {
        SimConfig { reps: self.reps, seed: self.seed, max_n: self.max_n, workers: self.workers }
    }
}

/// A model built from a [`ModelSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Gaussian(GaussianMeanModel),
    Exponential(FamilyPoints<ExponentialFamily>),
}

impl Model {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::GaussianMean { means } => Ok(Model::Gaussian(GaussianMeanModel::new(means.clone())?)),
            ModelSpec::ExpExponential { thetas } => {
                if thetas.is_empty() {
                    return Err(Error::Config("exp-exponential model needs a non-empty theta list".into()));
                }
                Ok(Model::Exponential(FamilyPoints::new(ExponentialFamily, thetas.clone())?))
            }
        }
    }

    /// Alternative parameters (means or natural parameters).
    pub fn parameters(&self) -> &[f64] {
        match self {
            Model::Gaussian(m) => m.means(),
            Model::Exponential(m) => m.thetas(),
        }
    }

    /// Analytic overshoot summaries: the Gaussian series or the exponential closed form.
    pub fn overshoot_summaries(&self, tol: f64) -> Result<Vec<OvershootSummary>> {
        match self {
            Model::Gaussian(m) => m.means().iter().map(|&mu| gaussian_summary(mu, tol)).collect(),
            Model::Exponential(m) => m.thetas().iter().map(|&t| exp_family_exponential_summary(t)).collect(),
        }
    }
}

impl Alternatives for Model {
    fn count(&self) -> usize {
        match self {
            Model::Gaussian(m) => m.count(),
            Model::Exponential(m) => m.count(),
        }
    }
    fn loglr(&self, i: usize, x: f64) -> f64 {
        match self {
            Model::Gaussian(m) => m.loglr(i, x),
            Model::Exponential(m) => m.loglr(i, x),
        }
    }
    fn sample_null<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Model::Gaussian(m) => m.sample_null(rng),
            Model::Exponential(m) => m.sample_null(rng),
        }
    }
    fn sample_alt<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        match self {
            Model::Gaussian(m) => m.sample_alt(i, rng),
            Model::Exponential(m) => m.sample_alt(i, rng),
        }
    }
    fn kl_numbers(&self) -> Result<KlMatrix> {
        match self {
            Model::Gaussian(m) => m.kl_numbers(),
            Model::Exponential(m) => m.kl_numbers(),
        }
    }
}

/// One cell of an output table.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format_sig6(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Num(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Rounds to 6 significant digits and prints the shortest representation.
pub fn format_sig6(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("valid float");
    rounded.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Rows whose `key` column equals `value`.
    pub fn rows_where<'a>(&'a self, key: &str, value: &'a Cell) -> impl Iterator<Item = &'a Vec<Cell>> + 'a {
        let k = self.column(key);
        self.rows.iter().filter(move |r| k.is_some_and(|k| &r[k] == value))
    }
}

/// Output of one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub fingerprint: String,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
}

impl Report {
    fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Self { command: command.into(), fingerprint: cfg.fingerprint(), tables: Vec::new(), notes: Vec::new() }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# command: {}\n# fingerprint: {}\n", self.command, self.fingerprint);
        for n in &self.notes {
            let _ = writeln!(out, "# note: {n}");
        }
        for (k, t) in self.tables.iter().enumerate() {
            if k > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "# table: {}", t.name);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&t.columns).expect("in-memory write");
            for r in &t.rows {
                w.write_record(r.iter().map(Cell::csv)).expect("in-memory write");
            }
            out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf8"));
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

struct Quantities {
    model: Model,
    klm: KlMatrix,
    summaries: Vec<OvershootSummary>,
    kappas: Vec<f64>,
    deltas: Vec<f64>,
}

impl Quantities {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let model = Model::from_spec(&cfg.model)?;
        let klm = model.kl_numbers()?;
        let summaries = model.overshoot_summaries(cfg.series_tol)?;
        let kappas = summaries.iter().map(|s| s.kappa).collect();
        let deltas = summaries.iter().map(|s| s.delta).collect();
        Ok(Self { model, klm, summaries, kappas, deltas })
    }

    fn mixing(&self, spec: &MixingSpec) -> Result<MixingDistribution> {
        spec.resolve(self.klm.infos(), &self.deltas, &self.kappas)
    }
}

const EXPK_OVER_DELTA_NOTE: &str = "p_expk_over_delta is exp(kappa)/delta normalized to sum 1";

/// Per-alternative KL numbers, overshoot summaries and all five reference
/// mixings, plus the asymptotic loss of each mixing.
pub fn cmd_analyze(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let q = Quantities::new(cfg)?;
    let mut report = Report::new("analyze", cfg);
    let mixings =
        [MixingKind::Optimal, MixingKind::Kl, MixingKind::InvDelta, MixingKind::ExpkOverDelta, MixingKind::Uniform]
            .map(|k| named_mixing(k, q.klm.infos(), &q.deltas, &q.kappas));
    let mixings = mixings.into_iter().collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "quantities",
        &[
            "alternative_index",
            "parameter",
            "info",
            "kappa",
            "delta",
            "method",
            "stderr_kappa",
            "stderr_delta",
            "p_optimal",
            "p_kl",
            "p_inv_delta",
            "p_expk_over_delta",
            "p_uniform",
        ],
    );
    for (i, s) in q.summaries.iter().enumerate() {
        let mut row: Vec<Cell> = vec![
            (i + 1).into(),
            q.model.parameters()[i].into(),
            q.klm.info(i).into(),
            s.kappa.into(),
            s.delta.into(),
            s.method.name().into(),
            s.stderr_kappa.into(),
            s.stderr_delta.into(),
        ];
        row.extend(mixings.iter().map(|p| Cell::from(p.weight(i))));
        t.push(row);
    }
    report.tables.push(t);

    let mut losses = Table::new("losses", &["mixing", "loss", "equalizer_defect"]);
    for (kind, p) in
        [MixingKind::Optimal, MixingKind::Kl, MixingKind::InvDelta, MixingKind::ExpkOverDelta, MixingKind::Uniform]
            .iter()
            .zip(&mixings)
    {
        losses.push(vec![
            kind.name().into(),
            asymptotic_loss(p, &q.kappas, &q.deltas)?.into(),
            equalizer_defect(p, &q.kappas)?.into(),
        ]);
    }
    report.tables.push(losses);

    report.notes.push(EXPK_OVER_DELTA_NOTE.into());
    if let ModelSpec::GaussianMean { means } = &cfg.model {
        if means == &[1.0, 2.0, 3.0] {
            let p = &mixings[3];
            report.notes.push(format!(
                "for means (1, 2, 3) this gives ({:.4}, {:.4}, {:.4}); the unnormalized reading (0.25, 0.125, 0.85) sums to 1.225 and is not a probability vector",
                p.weight(0),
                p.weight(1),
                p.weight(2)
            ));
        }
    }
    if matches!(cfg.model, ModelSpec::ExpExponential { .. }) {
        report.notes.push(
            "exponential-family overshoot is exactly exponential with rate (1-theta)/theta: kappa = theta/(1-theta), delta = 1-theta".into(),
        );
    }
    Ok(report)
}

/// Importance-sampling estimates of `P_0(T_A < inf)` with `A` calibrated to
/// each target `alpha`.
pub fn cmd_simulate_error(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let q = Quantities::new(cfg)?;
    let sim = cfg.sim_config();
    let mut report = Report::new("simulate-error", cfg);
    let mut t = Table::new(
        "error_probability",
        &[
            "mixing",
            "alpha",
            "quantity",
            "i",
            "mc_mean",
            "mc_stderr",
            "reps",
            "truncated",
            "approx_value",
            "threshold",
            "level_bound",
            "z",
        ],
    );
    let mut any_truncated = false;
    for spec in &cfg.mixing {
        let p = q.mixing(spec)?;
        for &alpha in &cfg.alpha {
            let a = threshold_for_alpha(&p, &q.deltas, alpha)?;
            let e = estimate_error_probability(&q.model, &p, a.ln(), &sim)?;
            any_truncated |= e.truncated > 0;
            t.push(vec![
                spec.label().into(),
                alpha.into(),
                "error_probability".into(),
                Cell::Empty,
                e.mean.into(),
                e.stderr.into(),
                e.reps.into(),
                e.truncated.into(),
                alpha.into(),
                a.into(),
                (1.0 / a).into(),
                ((e.mean - alpha) / e.stderr).into(),
            ]);
        }
    }
    report.tables.push(t);
    if any_truncated {
        report
            .notes
            .push("some replications hit the step cap; their contributions exp(-Z_max_n) can exceed 1/A".into());
    }
    Ok(report)
}

/// Simulated worst-case expected KL information next to the asymptotic
/// formulas, and the full asymptotic performance report.
pub fn cmd_simulate_ess(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let q = Quantities::new(cfg)?;
    let sim = cfg.sim_config();
    let mut report = Report::new("simulate-ess", cfg);
    let mut t = Table::new(
        "kl_information",
        &[
            "mixing",
            "alpha",
            "quantity",
            "i",
            "mc_mean",
            "mc_stderr",
            "reps",
            "truncated",
            "approx_value",
            "difference",
            "lower_bound",
            "loss",
        ],
    );
    let mut perf = Table::new(
        "performance",
        &[
            "mixing",
            "alpha",
            "alternative_index",
            "kappa",
            "delta",
            "weight",
            "ess_approx_nats",
            "max_kl_approx",
            "lower_bound",
            "loss",
        ],
    );
    for spec in &cfg.mixing {
        let p = q.mixing(spec)?;
        let kappa_cross = cross_overshoots(&q, &p, cfg)?;
        for &alpha in &cfg.alpha {
            let a = threshold_for_alpha(&p, &q.deltas, alpha)?;
            let approx = PerformanceReport::new(&p, alpha, &q.kappas, &q.deltas, &q.klm, Some(&kappa_cross))?;
            let mc = estimate_max_kl(&q.model, &p, a.ln(), &sim)?;
            let truncated: u64 = mc.per_alternative.iter().map(|e| e.truncated).sum();
            if mc.per_alternative.iter().any(|e| e.flagged()) {
                report.notes.push(format!(
                    "{} at alpha {alpha}: truncated fraction above {} for some alternative",
                    spec.label(),
                    crate::montecarlo::TRUNCATION_FLAG_FRACTION
                ));
            }
            for row in compare_to_asymptotics(&mc, &approx, &q.klm)? {
                let (quantity, i, reps, trunc) = match row.i {
                    Some(i) => {
                        ("kl_info", Cell::from(i + 1), mc.per_alternative[i].reps, mc.per_alternative[i].truncated)
                    }
                    None => (row.quantity.as_str(), Cell::Empty, mc.max.reps, truncated),
                };
                t.push(vec![
                    spec.label().into(),
                    alpha.into(),
                    quantity.into(),
                    i,
                    row.mc_mean.into(),
                    row.mc_stderr.into(),
                    reps.into(),
                    trunc.into(),
                    row.formula.into(),
                    row.difference.into(),
                    approx.lower_bound.into(),
                    approx.loss.into(),
                ]);
            }
            for i in 0..p.len() {
                perf.push(vec![
                    spec.label().into(),
                    alpha.into(),
                    (i + 1).into(),
                    q.kappas[i].into(),
                    q.deltas[i].into(),
                    p.weight(i).into(),
                    approx.per_alternative[i].into(),
                    approx.max_kl_approx.into(),
                    approx.lower_bound.into(),
                    approx.loss.into(),
                ]);
            }
        }
    }
    report.tables.push(t);
    report.tables.push(perf);
    report.notes.push("kl_info rows compare I_i E_i[T] with its expansion; max_kl rows compare the worst case with max_kl_approx and the minimax lower bound".into());
    Ok(report)
}

/// `kappa_{i|i*}` for zero-weight alternatives with positive drift, by simulation.
fn cross_overshoots(q: &Quantities, p: &MixingDistribution, cfg: &ExperimentConfig) -> Result<Vec<Option<f64>>> {
    (0..p.len())
        .map(|i| {
            if p.weight(i) > 0.0 {
                return Ok(None);
            }
            let star = closest_active_index(&q.klm, p, i)?;
            let drift = q.klm.drift(i, star);
            if !(drift > 0.0) {
                return Ok(None);
            }
            let reps = cfg.reps.min(20_000);
            let s = with_workers(cfg.workers, || {
                overshoot_cross_summary(&q.model, i, star, default_log_threshold(drift), reps, cfg.seed)
            })??;
            Ok(Some(s.kappa))
        })
        .collect()
}

/// The nearly minimax continuous mixing density for exponential observations
/// and the continuous expected-sample-size approximation across the interval.
pub fn cmd_continuous(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    if !matches!(cfg.model, ModelSpec::ExpExponential { .. }) {
        return Err(Error::Config("the continuous command needs an exp-exponential model".into()));
    }
    let [lo, hi] = cfg.interval.ok_or_else(|| Error::Config("the continuous command needs an interval".into()))?;
    let family = ExponentialFamily;
    let g0 = optimal_density(family, lo, hi, cfg.grid_size, exponential_kappa)?;
    let g0_fine = optimal_density(family, lo, hi, 2 * cfg.grid_size, exponential_kappa)?;
    let uniform = MixingDensity::from_fn(lo, hi, cfg.grid_size, |_| 1.0)?;
    let mut report = Report::new("continuous", cfg);

    let rel = (g0_fine.normalizer() - g0.normalizer()).abs() / g0.normalizer();
    let mut d = Table::new(
        "density",
        &[
            "interval_lo",
            "interval_hi",
            "grid_size",
            "normalizer",
            "normalizer_doubled_grid",
            "relative_change",
            "mass",
        ],
    );
    d.push(vec![
        lo.into(),
        hi.into(),
        cfg.grid_size.into(),
        g0.normalizer().into(),
        g0_fine.normalizer().into(),
        rel.into(),
        g0.mass().into(),
    ]);
    report.tables.push(d);

    let mut b = Table::new("bounds", &["alpha", "lower_bound", "optimal_spread", "uniform_sup", "uniform_excess"]);
    let mut t = Table::new(
        "theta_grid",
        &["alpha", "theta", "g_optimal", "ess_optimal", "ess_uniform", "kappa", "delta", "on_boundary"],
    );
    for &alpha in &cfg.alpha {
        let bound =
            continuous_lower_bound(&family, lo, hi, cfg.grid_size, alpha, exponential_kappa, exponential_delta)?;
        let mut opt_lo = f64::INFINITY;
        let mut opt_hi = f64::NEG_INFINITY;
        let mut unif_sup = f64::NEG_INFINITY;
        for k in 0..cfg.theta_points {
            let theta = lo + (hi - lo) * k as f64 / (cfg.theta_points - 1) as f64;
            let o = ess_approx_continuous(theta, &g0, alpha, exponential_kappa, exponential_delta, &family)?;
            let u = ess_approx_continuous(theta, &uniform, alpha, exponential_kappa, exponential_delta, &family)?;
            opt_lo = opt_lo.min(o.value);
            opt_hi = opt_hi.max(o.value);
            unif_sup = unif_sup.max(u.value);
            t.push(vec![
                alpha.into(),
                theta.into(),
                g0.density_at(theta).into(),
                o.value.into(),
                u.value.into(),
                exponential_kappa(theta).into(),
                exponential_delta(theta).into(),
                o.on_boundary.into(),
            ]);
        }
        b.push(vec![alpha.into(), bound.into(), (opt_hi - opt_lo).into(), unif_sup.into(), (unif_sup - bound).into()]);
    }
    report.tables.push(b);
    report.tables.push(t);
    report.notes.push(
        "g_optimal is proportional to exp(kappa) sqrt(psi''/I) with kappa = theta/(1-theta); delta = 1-theta".into(),
    );
    Ok(report)
}

/// Analytic overshoot summaries next to their simulation estimates.
pub fn cmd_overshoot(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let q = Quantities::new(cfg)?;
    let mut report = Report::new("overshoot", cfg);
    let mut t = Table::new(
        "overshoot",
        &[
            "alternative_index",
            "parameter",
            "log_threshold",
            "kappa",
            "delta",
            "method",
            "stderr_kappa",
            "stderr_delta",
            "lattice",
            "jensen_ok",
        ],
    );
    for (i, s) in q.summaries.iter().enumerate() {
        let lt = cfg.log_threshold.unwrap_or_else(|| default_log_threshold(q.klm.info(i)));
        let mc = with_workers(cfg.workers, || mc_overshoot_summary(&q.model, i, lt, cfg.reps, cfg.seed))??;
        for (summary, threshold) in [(s, Cell::Empty), (&mc, Cell::from(lt))] {
            t.push(vec![
                (i + 1).into(),
                q.model.parameters()[i].into(),
                threshold,
                summary.kappa.into(),
                summary.delta.into(),
                summary.method.name().into(),
                summary.stderr_kappa.into(),
                summary.stderr_delta.into(),
                summary.lattice.into(),
                summary.satisfies_jensen(3.0 * summary.stderr_delta).into(),
            ]);
        }
    }
    report.tables.push(t);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// KL numbers, overshoot summaries, reference mixings and losses.
    Analyze,
    /// Importance-sampling error probabilities at calibrated thresholds.
    SimulateError,
    /// Worst-case expected KL information against the asymptotic formulas.
    SimulateEss,
    /// Optimal continuous mixing density for exponential observations.
    Continuous,
    /// Overshoot summaries: analytic versus simulation.
    Overshoot,
}

/// Flags mirroring [`ExperimentConfig`]; `--config` takes precedence.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct ConfigFlags {
    /// JSON config file; overrides every other flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Gaussian alternative means.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub means: Option<Vec<f64>>,
    /// Exponential-family alternatives in (0, 1).
    #[arg(long, global = true, value_delimiter = ',')]
    pub thetas: Option<Vec<f64>>,
    /// Mixings: optimal, uniform, kl, inv_delta, expk_over_delta, explicit.
    #[arg(long, global = true, value_delimiter = ',')]
    pub mixing: Option<Vec<String>>,
    /// Weights of the explicit mixing.
    #[arg(long, global = true, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Target error probabilities.
    #[arg(long, global = true, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub reps: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub max_n: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Continuous-mixture interval `lo,hi`.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1)]
    pub interval: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub grid_size: Option<usize>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub log_threshold: Option<f64>,
    #[arg(long, global = true)]
    pub theta_points: Option<usize>,
}

impl ConfigFlags {
    /// Builds the config: the `--config` file if given, else the flags.
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            return ExperimentConfig::from_json(&text);
        }
        let model = match (&self.means, &self.thetas) {
            (Some(_), Some(_)) => return Err(Error::Config("give either --means or --thetas, not both".into())),
            (Some(m), None) => ModelSpec::GaussianMean { means: m.clone() },
            (None, Some(t)) => ModelSpec::ExpExponential { thetas: t.clone() },
            (None, None) if self.interval.is_some() => ModelSpec::ExpExponential { thetas: Vec::new() },
            (None, None) => return Err(Error::Config("a model is required: --means, --thetas or --config".into())),
        };
        let mut cfg = ExperimentConfig::new(model);
        if let Some(kinds) = &self.mixing {
            cfg.mixing = kinds
                .iter()
                .map(|k| {
                    let kind: MixingSpecKind = serde_json::from_value(serde_json::Value::String(k.clone()))
                        .map_err(|_| Error::Config(format!("unknown mixing kind {k}")))?;
                    let weights = if kind == MixingSpecKind::Explicit { self.weights.clone() } else { None };
                    Ok(MixingSpec { kind, weights })
                })
                .collect::<Result<_>>()?;
        } else if let Some(w) = &self.weights {
            cfg.mixing = vec![MixingSpec { kind: MixingSpecKind::Explicit, weights: Some(w.clone()) }];
        }
        if let Some(a) = &self.alpha {
            cfg.alpha = a.clone();
        }
        if let Some(v) = self.reps {
            cfg.reps = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.max_n = self.max_n.or(cfg.max_n);
        if let Some(v) = self.format {
            cfg.format = v;
        }
        if let Some(v) = &self.interval {
            match v[..] {
                [lo, hi] => cfg.interval = Some([lo, hi]),
                _ => return Err(Error::Config("--interval takes two values lo,hi".into())),
            }
        }
        if let Some(v) = self.grid_size {
            cfg.grid_size = v;
        }
        cfg.workers = self.workers.or(cfg.workers);
        cfg.log_threshold = self.log_threshold.or(cfg.log_threshold);
        if let Some(v) = self.theta_points {
            cfg.theta_points = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Parser)]
#[command(name = "mixsprt", version, about = "Nearly minimax mixture-based one-sided sequential tests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: ConfigFlags,
    /// Write output to a file instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

/// Runs one command on a validated config.
pub fn run_command(command: Command, cfg: &ExperimentConfig) -> Result<Report> {
    match command {
        Command::Analyze => cmd_analyze(cfg),
        Command::SimulateError => cmd_simulate_error(cfg),
        Command::SimulateEss => cmd_simulate_ess(cfg),
        Command::Continuous => cmd_continuous(cfg),
        Command::Overshoot => cmd_overshoot(cfg),
    }
}

/// Exit code for an error: 2 for configuration problems, 3 for numerical failures.
pub fn exit_code_for(e: &Error) -> i32 {
    if e.is_config_error() {
        exit_code::CONFIG
    } else {
        exit_code::NUMERICAL
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit_code::CONFIG } else { exit_code::SUCCESS };
            let _ = if e.use_stderr() { write!(stderr, "{e}") } else { write!(stdout, "{e}") };
            return code;
        }
    };
    let result = cli.flags.to_config().and_then(|cfg| run_command(cli.command, &cfg).map(|r| (cfg, r)));
    match result {
        Ok((cfg, report)) => {
            let text = report.render(cfg.format);
            let written = match &cli.output {
                Some(path) => std::fs::write(path, text).map_err(|e| e.to_string()),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => exit_code::SUCCESS,
                Err(e) => {
                    let _ = writeln!(stderr, "error: cannot write output: {e}");
                    exit_code::CONFIG
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code_for(&e)
        }
    }
}

//! Simulation benchmark: four test functions, noisy samples, scaled errors
//! relative to the constant estimator, and a convergence-rate experiment.
//!
//! Every random quantity is drawn from a stream derived from the master seed
//! by a fixed path (target, noise level, repetition, purpose), so each report
//! cell is reproducible on its own and independent of scheduling.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_baseline, select_by_split, Baseline, BaselineModel, Predictor};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{
    fit_pp, fit_smooth, format_f64, FittedEstimator, PPConfig, SelectionCriterion, SmoothConfig,
};
use crate::features::cube_feature_count;
use crate::rng::{derive_path, derive_seed, SplitMix64};

pub const LOG_FLOOR: f64 = 1e-12;
pub const TAN_CLAMP: f64 = 1e6;
/// Noise levels of the original study.
pub const STANDARD_NOISES: [f64; 2] = [0.05, 0.10];

// stream purposes under a repetition seed
const TRAIN_STREAM: u64 = 0;
const EVAL_STREAM: u64 = 1;
const SPLIT_STREAM: u64 = 2;
const TRIAL_STREAM: u64 = 3;
// top-level branch for the normalizer realizations
const NORMALIZER_BRANCH: u64 = 0x6E6F_726D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetId {
    M1,
    M2,
    M3,
    M4,
}

impl TargetId {
    pub const ALL: [TargetId; 4] = [TargetId::M1, TargetId::M2, TargetId::M3, TargetId::M4];

    pub fn name(self) -> &'static str {
        match self {
            TargetId::M1 => "m1",
            TargetId::M2 => "m2",
            TargetId::M3 => "m3",
            TargetId::M4 => "m4",
        }
    }

    fn index(self) -> u64 {
        self as u64
    }
}

impl std::str::FromStr for TargetId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TargetId::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown target {s:?}")))
    }
}

/// A test function with its dimension, noise scale and the conventions that
/// keep it finite on the whole cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub id: TargetId,
    pub dim: usize,
    pub lambda: f64,
    /// Every logarithm is taken of `max(|u|, log_floor)`.
    pub safe_eval_log_floor: f64,
    /// Every tangent is clamped to `[-tan_clamp, tan_clamp]`.
    pub tan_clamp: f64,
}

impl TargetSpec {
    pub fn new(id: TargetId) -> Self {
        let (dim, lambda) = match id {
            TargetId::M1 => (2, 5.04),
            TargetId::M2 => (4, 5.57),
            TargetId::M3 => (5, 6.8),
            TargetId::M4 => (6, 3.71),
        };
        TargetSpec {
            id,
            dim,
            lambda,
            safe_eval_log_floor: LOG_FLOOR,
            tan_clamp: TAN_CLAMP,
        }
    }

    fn log(&self, u: f64) -> f64 {
        u.abs().max(self.safe_eval_log_floor).ln()
    }

    fn tan(&self, u: f64) -> f64 {
        u.tan().clamp(-self.tan_clamp, self.tan_clamp)
    }
}

/// Evaluates the test function at `x`.
pub fn eval_target(t: &TargetSpec, x: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), t.dim);
    match t.id {
        TargetId::M1 => {
            let (x1, x2) = (x[0], x[1]);
            let z = 0.1 * x1 + 0.3 * x2;
            // tan(π z⁴)/z² → 0 as z → 0
            let last = if z == 0.0 {
                0.0
            } else {
                t.tan(PI * z.powi(4)) / (z * z)
            };
            t.log(0.2 * x1 + 0.9 * x2)
                + (PI / t.log(0.5 * x1 + 0.3 * x2)).cos()
                + ((0.7 * x1 + 0.7 * x2) / 50.0).exp()
                + last
        }
        TargetId::M2 => {
            let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
            let u = 0.5 * x1 + 0.3 * x2 - 0.3 * x3 + 0.25 * x4;
            t.tan((PI * (0.2 * x1 + 0.5 * x2 - 0.6 * x3 + 0.2 * x4)).sin())
                + (0.5 * (x1 + x2 + x3 + x4)).powi(3)
                + 1.0 / (u * u + 4.0)
        }
        TargetId::M3 => {
            let (x1, x2, x3, x4, x5) = (x[0], x[1], x[2], x[3], x[4]);
            let s = x1 + 0.3 * x2 + 0.6 * x3 + x4 - x5;
            t.log(0.5 * s * s)
                + (PI * (0.7 * x1 + x2 - 0.3 * x3 - 0.4 * x4 - 0.8 * x5)).sin()
                + (PI / (1.0 + (0.5 * (x2 + 0.9 * x3 - x5)).sin())).cos()
        }
        TargetId::M4 => {
            let s: f64 = x.iter().sum();
            let u = 0.3 * x[0] - 0.2 * x[1] + 0.8 * x[2] - 0.5 * x[3] + 0.6 * x[4] - 0.2 * x[5];
            (0.2 * s).exp()
                + (PI / 2.0 * (x[0] - x[1] - x[2] + x[3] - x[4] - x[5])).sin()
                + 1.0 / (u * u + 6.0)
                + 0.5 * (x[0] + x[2] - x[4]).powi(3)
        }
    }
}

/// `n` points uniform on `[-1, 1]^d`, drawn row by row.
pub fn uniform_inputs(n: usize, d: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.uniform_range(-1.0, 1.0)).collect())
        .collect()
}

/// `Y = m(X) + noise·λ·ε`: all inputs are drawn first, then all noise
/// variates, so `noise = 0` leaves the inputs unchanged.
pub fn generate(t: &TargetSpec, n: usize, noise: f64, rng: &mut SplitMix64) -> Result<Dataset> {
    let x = uniform_inputs(n, t.dim, rng);
    let y = x
        .iter()
        .map(|xi| {
            let eps = rng.normal();
            eval_target(t, xi) + noise * t.lambda * eps
        })
        .collect();
    Dataset::new(x, y)
}

/// Median and interquartile range with linearly interpolated quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub iqr: f64,
}

/// Quantile `q ∈ [0, 1]` of sorted data, interpolating between order
/// statistics at position `q·(n - 1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Summary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Summary {
        median: quantile_sorted(&v, 0.5),
        iqr: quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25),
    }
}

/// Mean squared distance to the target on a set of points.
pub fn eval_error(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / truth.len() as f64
}

/// Methods a benchmark can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Constant,
    Kernel,
    Neighbor,
    Rbf,
    ProjNeural,
    SmoothNeural,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Constant => "constant",
            Method::Kernel => "kernel",
            Method::Neighbor => "neighbor",
            Method::Rbf => "rbf",
            Method::ProjNeural => "proj-neural",
            Method::SmoothNeural => "smooth-neural",
        }
    }

    fn baseline(self) -> Option<Baseline> {
        match self {
            Method::Constant => Some(Baseline::Constant),
            Method::Kernel => Some(Baseline::Kernel),
            Method::Neighbor => Some(Baseline::Neighbor),
            Method::Rbf => Some(Baseline::Rbf),
            _ => None,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            Method::Constant,
            Method::Kernel,
            Method::Neighbor,
            Method::Rbf,
            Method::ProjNeural,
            Method::SmoothNeural,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::Parameter(format!("unknown method {s:?}")))
    }
}

/// Fixed parameters of the projection-pursuit method in the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjNeuralParams {
    pub max_degree: u32,
    pub box_half_width: f64,
    pub scale: f64,
    pub directions: usize,
    pub resolution_grid: Vec<usize>,
    pub trials: usize,
    pub penalty: f64,
    pub selection: SelectionCriterion,
}

impl Default for ProjNeuralParams {
    fn default() -> Self {
        ProjNeuralParams {
            max_degree: 2,
            box_half_width: 1.0,
            scale: 1e6,
            directions: 4,
            resolution_grid: vec![2, 4, 8, 16],
            trials: 400,
            penalty: 1.0,
            selection: SelectionCriterion::Penalized,
        }
    }
}

/// Parameters of the cube-grid method; grid sizes whose feature count
/// exceeds `max_features` are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothNeuralParams {
    pub max_degree: u32,
    pub half_width: f64,
    pub scale: f64,
    pub resolution_grid: Vec<usize>,
    pub penalty: f64,
    pub max_features: usize,
}

impl Default for SmoothNeuralParams {
    fn default() -> Self {
        SmoothNeuralParams {
            max_degree: 2,
            half_width: 1.0,
            scale: 1e6,
            resolution_grid: vec![1, 2, 4],
            penalty: 1.0,
            max_features: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub targets: Vec<TargetId>,
    pub noises: Vec<f64>,
    pub methods: Vec<Method>,
    pub reps: usize,
    /// Realizations behind the constant-estimator normalizer.
    pub normalizer_reps: usize,
    pub n: usize,
    pub eval_n: usize,
    pub seed: u64,
    pub proj_neural: ProjNeuralParams,
    pub smooth_neural: SmoothNeuralParams,
    /// Accept noise levels other than 5% and 10%.
    #[serde(default)]
    pub allow_any_noise: bool,
}

impl BenchConfig {
    /// The full study: all targets, both noise levels, 50 repetitions.
    pub fn full(seed: u64) -> Self {
        BenchConfig {
            targets: TargetId::ALL.to_vec(),
            noises: STANDARD_NOISES.to_vec(),
            methods: vec![
                Method::Constant,
                Method::Kernel,
                Method::Neighbor,
                Method::Rbf,
                Method::ProjNeural,
            ],
            reps: 50,
            normalizer_reps: 50,
            n: 100,
            eval_n: 10_000,
            seed,
            proj_neural: ProjNeuralParams::default(),
            smooth_neural: SmoothNeuralParams::default(),
            allow_any_noise: false,
        }
    }

    /// Reduced run: `m2` and `m4`, 10 repetitions, 50 direction draws.
    pub fn quick(seed: u64) -> Self {
        let mut c = Self::full(seed);
        c.targets = vec![TargetId::M2, TargetId::M4];
        c.reps = 10;
        c.proj_neural.trials = 50;
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 || self.normalizer_reps == 0 {
            return Err(Error::Parameter(
                "repetition counts must be at least 1".into(),
            ));
        }
        if self.n < 5 || self.eval_n == 0 {
            return Err(Error::Parameter(
                "need at least 5 training and 1 evaluation point".into(),
            ));
        }
        if self.targets.is_empty() || self.noises.is_empty() || self.methods.is_empty() {
            return Err(Error::Parameter(
                "targets, noises and methods must be nonempty".into(),
            ));
        }
        for &s in &self.noises {
            if !(s >= 0.0) {
                return Err(Error::Parameter(format!(
                    "noise must be nonnegative, got {s}"
                )));
            }
            if !self.allow_any_noise && !STANDARD_NOISES.contains(&s) {
                return Err(Error::Parameter(format!(
                    "noise {s} is not one of 0.05, 0.10 (set allow_any_noise to override)"
                )));
            }
        }
        if self.proj_neural.resolution_grid.is_empty() {
            return Err(Error::Parameter(
                "proj-neural resolution grid is empty".into(),
            ));
        }
        Ok(())
    }
}

/// One (target, noise, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub target: TargetId,
    pub noise: f64,
    pub method: Method,
    /// Summary over the successful repetitions; `None` if all failed.
    pub summary: Option<Summary>,
    pub scaled_errors: Vec<f64>,
    pub failures: Vec<String>,
}

/// Constant-estimator reference error of one (target, noise) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub target: TargetId,
    pub noise: f64,
    pub eps_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchConfig,
    pub normalizers: Vec<Normalizer>,
    pub cells: Vec<BenchCell>,
}

impl BenchmarkReport {
    pub fn cell(&self, target: TargetId, noise: f64, method: Method) -> Option<&BenchCell> {
        self.cells
            .iter()
            .find(|c| c.target == target && c.noise == noise && c.method == method)
    }

    pub fn failure_count(&self) -> usize {
        self.cells.iter().map(|c| c.failures.len()).sum()
    }

    fn header(&self) -> String {
        let cfg = serde_json::to_string(&self.config).unwrap_or_default();
        let p = &self.config.proj_neural;
        let mut h = String::new();
        let _ = writeln!(h, "# seed={}", self.config.seed);
        let _ = writeln!(h, "# config={cfg}");
        let _ = writeln!(
            h,
            "# proj-neural: N={} A={} R={:e} r={} M in {:?} I={}",
            p.max_degree, p.box_half_width, p.scale, p.directions, p.resolution_grid, p.trials
        );
        let _ = writeln!(
            h,
            "# safe-eval: log(max(|u|, {LOG_FLOOR:e})), tan clamped to +-{TAN_CLAMP:e}"
        );
        h
    }

    /// One row per cell. Floats are written with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = self.header();
        s.push_str("target,noise,method,reps,successes,median,iqr,eps_bar,status\n");
        for c in &self.cells {
            let eps_bar = self
                .normalizers
                .iter()
                .find(|n| n.target == c.target && n.noise == c.noise)
                .map_or(f64::NAN, |n| n.eps_bar);
            let (median, iqr) = c.summary.map_or(("".to_string(), "".to_string()), |s| {
                (format_f64(s.median), format_f64(s.iqr))
            });
            let status = if c.failures.is_empty() {
                "ok".to_string()
            } else {
                format!("failed:{}", c.failures.len())
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                c.target.name(),
                c.noise,
                c.method.name(),
                self.config.reps,
                c.scaled_errors.len(),
                median,
                iqr,
                format_f64(eps_bar),
                status
            );
        }
        s
    }

    /// Methods as rows, (target, noise) pairs as columns, entries
    /// `median (IQR)`.
    pub fn to_markdown(&self) -> String {
        let mut s = self.header();
        s.push('\n');
        let cols: Vec<(TargetId, f64)> = self
            .config
            .targets
            .iter()
            .flat_map(|&t| self.config.noises.iter().map(move |&n| (t, n)))
            .collect();
        s.push_str("| approach |");
        for (t, n) in &cols {
            let _ = write!(s, " {} σ={}% |", t.name(), n * 100.0);
        }
        s.push_str("\n|---|");
        for _ in &cols {
            s.push_str("---|");
        }
        s.push('\n');
        let _ = write!(s, "| ε̄(avg) |");
        for (t, n) in &cols {
            let v = self
                .normalizers
                .iter()
                .find(|x| x.target == *t && x.noise == *n)
                .map_or(f64::NAN, |x| x.eps_bar);
            let _ = write!(s, " {v:.4} |");
        }
        s.push('\n');
        for name in ["fc-neural-1", "fc-neural-3", "fc-neural-6", "MARS"] {
            let _ = write!(s, "| {name} |");
            for _ in &cols {
                s.push_str(" not implemented |");
            }
            s.push('\n');
        }
        for &m in &self.config.methods {
            let _ = write!(s, "| {} |", m.name());
            for (t, n) in &cols {
                match self.cell(*t, *n, m).and_then(|c| c.summary) {
                    Some(x) => {
                        let _ = write!(s, " {:.4} ({:.4}) |", x.median, x.iqr);
                    }
                    None => s.push_str(" failed |"),
                }
            }
            s.push('\n');
        }
        s
    }
}

fn rep_seed(master: u64, t: TargetId, noise_idx: usize, rep: usize) -> u64 {
    derive_path(master, &[t.index(), noise_idx as u64, rep as u64])
}

/// Median over `reps` realizations of the constant estimator's evaluation
/// error.
pub fn normalizer(
    t: &TargetSpec,
    noise: f64,
    n: usize,
    eval_n: usize,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    let errs: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|k| {
            let s = derive_seed(seed, k as u64);
            let train = generate(t, n, noise, &mut SplitMix64::stream(s, TRAIN_STREAM))?;
            let mean = train.mean_y()?;
            let ex = uniform_inputs(eval_n, t.dim, &mut SplitMix64::stream(s, EVAL_STREAM));
            let err = ex
                .iter()
                .map(|x| {
                    let e = mean - eval_target(t, x);
                    e * e
                })
                .sum::<f64>()
                / eval_n as f64;
            Ok(err)
        })
        .collect::<Result<_>>()?;
    Ok(summarize(&errs).median)
}

/// Proj-neural with `M` chosen by a learn/test split.
pub fn fit_proj_neural(
    data: &Dataset,
    p: &ProjNeuralParams,
    split_seed: u64,
    trial_seed: u64,
) -> Result<(FittedEstimator, usize)> {
    let s = select_by_split(data, &p.resolution_grid, split_seed, |d, &m| {
        let cfg = PPConfig {
            directions: p.directions,
            max_degree: p.max_degree,
            resolution: m,
            scale: p.scale,
            box_half_width: p.box_half_width,
            penalty: p.penalty,
            beta: f64::MAX,
            trials: p.trials,
            seed: trial_seed,
            selection: p.selection,
            theorem_mode: None,
        };
        fit_pp(d, &cfg)
    })?;
    Ok((s.model, s.parameter))
}

/// Cube-grid estimator with `M` chosen by a learn/test split.
pub fn fit_smooth_neural(
    data: &Dataset,
    p: &SmoothNeuralParams,
    split_seed: u64,
) -> Result<(FittedEstimator, usize)> {
    let grid: Vec<usize> = p
        .resolution_grid
        .iter()
        .copied()
        .filter(|&m| {
            cube_feature_count(data.dim(), p.max_degree, m).is_ok_and(|j| j <= p.max_features)
        })
        .collect();
    if grid.is_empty() {
        return Err(Error::Parameter(format!(
            "every grid size exceeds {} features in dimension {}",
            p.max_features,
            data.dim()
        )));
    }
    let s = select_by_split(data, &grid, split_seed, |d, &m| {
        let cfg = SmoothConfig {
            max_degree: p.max_degree,
            resolution: m,
            scale: p.scale,
            half_width: p.half_width,
            penalty: p.penalty,
            beta: f64::MAX,
            theorem_mode: None,
        };
        fit_smooth(d, &cfg)
    })?;
    Ok((s.model, s.parameter))
}

enum AnyModel {
    Baseline(BaselineModel),
    Net(Box<FittedEstimator>),
}

impl AnyModel {
    fn predict_many(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        match self {
            AnyModel::Baseline(m) => m.predict_many(xs),
            AnyModel::Net(m) => m.predict_many(xs),
        }
    }
}

fn fit_method(method: Method, cfg: &BenchConfig, data: &Dataset, seed: u64) -> Result<AnyModel> {
    let split_seed = derive_seed(seed, SPLIT_STREAM);
    if let Some(b) = method.baseline() {
        return Ok(AnyModel::Baseline(fit_baseline(b, data, split_seed)?.0));
    }
    Ok(match method {
        Method::ProjNeural => {
            let trial_seed = derive_seed(seed, TRIAL_STREAM);
            AnyModel::Net(Box::new(
                fit_proj_neural(data, &cfg.proj_neural, split_seed, trial_seed)?.0,
            ))
        }
        Method::SmoothNeural => AnyModel::Net(Box::new(
            fit_smooth_neural(data, &cfg.smooth_neural, split_seed)?.0,
        )),
        _ => unreachable!("baselines handled above"),
    })
}

/// Evaluation errors of all methods on one repetition. The training and
/// evaluation samples are shared by every method.
fn run_rep(cfg: &BenchConfig, t: &TargetSpec, noise: f64, seed: u64) -> Result<Vec<Result<f64>>> {
    let train = generate(t, cfg.n, noise, &mut SplitMix64::stream(seed, TRAIN_STREAM))?;
    let ex = uniform_inputs(
        cfg.eval_n,
        t.dim,
        &mut SplitMix64::stream(seed, EVAL_STREAM),
    );
    let truth: Vec<f64> = ex.iter().map(|x| eval_target(t, x)).collect();
    Ok(cfg
        .methods
        .iter()
        .map(|&m| {
            let model = fit_method(m, cfg, &train, seed)?;
            let pred = model.predict_many(&ex)?;
            Ok(eval_error(&pred, &truth))
        })
        .collect())
}

/// Runs the whole grid. Failures are recorded per cell and repetition and do
/// not stop the run.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let mut normalizers = Vec::new();
    let mut cells = Vec::new();
    for &tid in &cfg.targets {
        let t = TargetSpec::new(tid);
        for (ni, &noise) in cfg.noises.iter().enumerate() {
            let nseed = derive_path(cfg.seed, &[NORMALIZER_BRANCH, tid.index(), ni as u64]);
            let eps_bar = normalizer(&t, noise, cfg.n, cfg.eval_n, cfg.normalizer_reps, nseed)?;
            log::info!("{} noise {noise}: eps_bar = {eps_bar:.6}", tid.name());
            normalizers.push(Normalizer {
                target: tid,
                noise,
                eps_bar,
            });

            let reps: Vec<Result<Vec<Result<f64>>>> = (0..cfg.reps)
                .into_par_iter()
                .map(|r| run_rep(cfg, &t, noise, rep_seed(cfg.seed, tid, ni, r)))
                .collect();

            for (mi, &method) in cfg.methods.iter().enumerate() {
                let mut scaled = Vec::new();
                let mut failures = Vec::new();
                for (r, rep) in reps.iter().enumerate() {
                    let outcome = match rep {
                        Ok(v) => v[mi].as_ref().map(|&e| e).map_err(|e| e.to_string()),
                        Err(e) => Err(e.to_string()),
                    };
                    match outcome {
                        Ok(e) => scaled.push(e / eps_bar),
                        Err(msg) => {
                            log::warn!(
                                "{} noise {noise} {} rep {r}: {msg}",
                                tid.name(),
                                method.name()
                            );
                            failures.push(format!("rep {r}: {msg}"));
                        }
                    }
                }
                let summary = (!scaled.is_empty()).then(|| summarize(&scaled));
                if let Some(s) = summary {
                    log::info!(
                        "{} noise {noise} {}: {:.4} ({:.4})",
                        tid.name(),
                        method.name(),
                        s.median,
                        s.iqr
                    );
                }
                cells.push(BenchCell {
                    target: tid,
                    noise,
                    method,
                    summary,
                    scaled_errors: scaled,
                    failures,
                });
            }
        }
    }
    Ok(BenchmarkReport {
        config: cfg.clone(),
        normalizers,
        cells,
    })
}

/// Method error divided by the normalizer.
pub fn scaled_error(method_error: f64, eps_bar: f64) -> f64 {
    method_error / eps_bar
}

// ---- rate experiment ------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub n_grid: Vec<usize>,
    pub seeds_per_n: usize,
    /// Standard deviation of the additive Gaussian noise.
    pub noise_sd: f64,
    /// Index direction of `sin(π·aᵀx)`.
    pub direction: Vec<f64>,
    pub trials: usize,
    pub max_degree: u32,
    /// `M = ⌈c·n^{1/(2p+1)}⌉`.
    pub resolution_factor: f64,
    pub smoothness: f64,
    pub scale: f64,
    pub box_half_width: f64,
    pub penalty: f64,
    pub eval_n: usize,
    pub seed: u64,
    /// Replace the target by the constant 0 (no noise either).
    #[serde(default)]
    pub constant_target: bool,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            n_grid: vec![50, 100, 200, 400, 800],
            seeds_per_n: 5,
            noise_sd: 0.05,
            direction: vec![0.6, 0.8],
            trials: 100,
            max_degree: 2,
            resolution_factor: 1.0,
            smoothness: 2.0,
            scale: 1e6,
            box_half_width: 1.0,
            penalty: 1.0,
            eval_n: 2000,
            seed: 0,
            constant_target: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub resolution: usize,
    pub mean_error: f64,
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub config: RateConfig,
    pub points: Vec<RatePoint>,
    /// Least-squares slope of `log(error)` against `log(n)`; `None` when the
    /// errors are (numerically) zero.
    pub slope: Option<f64>,
    pub degenerate: bool,
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Errors below this are treated as exact recovery.
pub const DEGENERATE_ERROR: f64 = 1e-12;

/// Fits the projection-pursuit estimator (one direction) to
/// `sin(π·aᵀx) + noise` at each sample size and regresses log test error on
/// log sample size.
pub fn rate_experiment(cfg: &RateConfig) -> Result<RateReport> {
    if cfg.n_grid.len() < 4 || cfg.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter(
            "n grid must be strictly increasing with at least 4 points".into(),
        ));
    }
    if cfg.seeds_per_n == 0 {
        return Err(Error::Parameter(
            "need at least one seed per sample size".into(),
        ));
    }
    let d = cfg.direction.len();
    let target = |x: &[f64]| {
        if cfg.constant_target {
            0.0
        } else {
            (PI * x
                .iter()
                .zip(&cfg.direction)
                .map(|(u, v)| u * v)
                .sum::<f64>())
            .sin()
        }
    };
    let noise = if cfg.constant_target {
        0.0
    } else {
        cfg.noise_sd
    };
    let mut points = Vec::new();
    for (gi, &n) in cfg.n_grid.iter().enumerate() {
        let m = (cfg.resolution_factor * (n as f64).powf(1.0 / (2.0 * cfg.smoothness + 1.0)))
            .ceil()
            .max(1.0) as usize;
        let errors: Vec<f64> = (0..cfg.seeds_per_n)
            .into_par_iter()
            .map(|k| {
                let seed = derive_path(cfg.seed, &[gi as u64, k as u64]);
                let mut rng = SplitMix64::stream(seed, TRAIN_STREAM);
                let x = uniform_inputs(n, d, &mut rng);
                let y = x
                    .iter()
                    .map(|xi| target(xi) + noise * rng.normal())
                    .collect();
                let data = Dataset::new(x, y)?;
                let pp = PPConfig {
                    directions: 1,
                    max_degree: cfg.max_degree,
                    resolution: m,
                    scale: cfg.scale,
                    box_half_width: cfg.box_half_width,
                    penalty: cfg.penalty,
                    beta: f64::MAX,
                    trials: cfg.trials,
                    seed: derive_seed(seed, TRIAL_STREAM),
                    selection: SelectionCriterion::Penalized,
                    theorem_mode: None,
                };
                let est = fit_pp(&data, &pp)?;
                let ex = uniform_inputs(cfg.eval_n, d, &mut SplitMix64::stream(seed, EVAL_STREAM));
                let truth: Vec<f64> = ex.iter().map(|x| target(x)).collect();
                Ok(eval_error(&est.predict_many(&ex)?, &truth))
            })
            .collect::<Result<_>>()?;
        let mean_error = errors.iter().sum::<f64>() / errors.len() as f64;
        log::info!("rate: n = {n}, M = {m}, mean error {mean_error:.3e}");
        points.push(RatePoint {
            n,
            resolution: m,
            mean_error,
            errors,
        });
    }
    let degenerate = points.iter().any(|p| !(p.mean_error > DEGENERATE_ERROR));
    let slope = (!degenerate).then(|| {
        let lx: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
        let ly: Vec<f64> = points.iter().map(|p| p.mean_error.ln()).collect();
        ls_slope(&lx, &ly)
    });
    Ok(RateReport {
        config: cfg.clone(),
        points,
        slope,
        degenerate,
    })
}

//! The two end-to-end estimators: fixed features on a cube grid, and the
//! projection-pursuit variant that searches random directions.
//!
//! Both fit only the output weights by [`ridge_solve`] and truncate
//! predictions to `[-β, β]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batch::FeatureBatch;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::features::{enumerate_features_cube, enumerate_features_pp, FeatureDescriptor};
use crate::linalg::dot;
use crate::netblocks::MAX_SUPPORTED_SCALE;
use crate::ridge::{coefficient_bound_audit, design_values, ridge_solve, DesignMatrix};
use crate::rng::SplitMix64;

/// Current version of the model file layout.
pub const MODEL_SCHEMA: u32 = 1;

/// Default constants for the parameter rules derived from the sample size.
pub const DEFAULT_C3: f64 = 1.0;
pub const DEFAULT_C5: f64 = 1.0;
pub const DEFAULT_C6: f64 = 10.0;
pub const DEFAULT_C9: f64 = 1.0;
pub const DEFAULT_C10: f64 = 1.0;

/// Derive `M`, `R`, `a` and `β` from `n` for a target of smoothness `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothTheoremMode {
    pub p: f64,
    #[serde(default = "default_c5")]
    pub c5: f64,
    #[serde(default = "default_c6")]
    pub c6: f64,
}

fn default_c5() -> f64 {
    DEFAULT_C5
}
fn default_c6() -> f64 {
    DEFAULT_C6
}
fn default_c9() -> f64 {
    DEFAULT_C9
}
fn default_c10() -> f64 {
    DEFAULT_C10
}
fn default_c3() -> f64 {
    DEFAULT_C3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothConfig {
    /// Degree cap `N`.
    pub max_degree: u32,
    /// Grid resolution `M`.
    pub resolution: usize,
    /// Block scale `R`.
    pub scale: f64,
    /// Domain half-width `a`.
    pub half_width: f64,
    /// Ridge penalty `c3`.
    #[serde(default = "default_c3")]
    pub penalty: f64,
    /// Truncation level `β`.
    pub beta: f64,
    #[serde(default)]
    pub theorem_mode: Option<SmoothTheoremMode>,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        SmoothConfig {
            max_degree: 2,
            resolution: 4,
            scale: 1e6,
            half_width: 1.0,
            penalty: DEFAULT_C3,
            beta: 1e3,
            theorem_mode: None,
        }
    }
}

impl SmoothConfig {
    /// Concrete parameters for `n` samples in dimension `d`. Without a
    /// theorem mode this is the configuration itself.
    pub fn resolve(&self, n: usize, d: usize) -> Result<SmoothConfig> {
        let mut c = self.clone();
        if let Some(t) = self.theorem_mode {
            check_sample_size(n)?;
            let nf = n as f64;
            let ln = nf.ln();
            c.resolution = (t.c5 * nf.powf(1.0 / (2.0 * t.p + d as f64))).ceil() as usize;
            c.scale = nf.powi(d as i32 + 4).min(MAX_SUPPORTED_SCALE);
            c.half_width = ln.powf(1.0 / (6.0 * (self.max_degree as f64 + d as f64)));
            c.beta = t.c6 * ln;
            c.theorem_mode = None;
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        positive("M", self.resolution as f64)?;
        positive("R", self.scale)?;
        positive("a", self.half_width)?;
        positive("c3", self.penalty)?;
        positive("beta", self.beta)
    }
}

/// Derive `I`, `M`, `R`, `A` and `β` from `n` for smoothness `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PPTheoremMode {
    pub p: f64,
    #[serde(default = "default_c9")]
    pub c9: f64,
    #[serde(default = "default_c10")]
    pub c10: f64,
    #[serde(default = "default_c6")]
    pub c6: f64,
}

/// Criterion a direction trial is ranked by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionCriterion {
    /// Training MSE plus `(c3/n)·aᵀa`.
    #[default]
    Penalized,
    /// Training MSE alone.
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PPConfig {
    /// Number of directions `r`.
    pub directions: usize,
    pub max_degree: u32,
    pub resolution: usize,
    pub scale: f64,
    /// Box half-width `A`.
    pub box_half_width: f64,
    #[serde(default = "default_c3")]
    pub penalty: f64,
    pub beta: f64,
    /// Number of random direction draws `I`.
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub selection: SelectionCriterion,
    #[serde(default)]
    pub theorem_mode: Option<PPTheoremMode>,
}

impl Default for PPConfig {
    fn default() -> Self {
        PPConfig {
            directions: 1,
            max_degree: 2,
            resolution: 4,
            scale: 1e6,
            box_half_width: 1.0,
            penalty: DEFAULT_C3,
            beta: 1e3,
            trials: 50,
            seed: 0,
            selection: SelectionCriterion::Penalized,
            theorem_mode: None,
        }
    }
}

impl PPConfig {
    pub fn resolve(&self, n: usize, d: usize) -> Result<PPConfig> {
        let mut c = self.clone();
        if let Some(t) = self.theorem_mode {
            check_sample_size(n)?;
            let nf = n as f64;
            let ln = nf.ln();
            let rd = (self.directions * d) as f64;
            let trials = t.c9 * ln * ln * nf.powf(rd / (2.0 * t.p + 1.0));
            c.trials = trials.ceil().min(usize::MAX as f64) as usize;
            c.resolution = (t.c10 * nf.powf(1.0 / (2.0 * t.p + 1.0))).ceil() as usize;
            c.scale = nf.powi(3).min(MAX_SUPPORTED_SCALE);
            c.box_half_width = ln.powf(1.0 / (6.0 * (self.max_degree as f64 + d as f64)));
            c.beta = t.c6 * ln;
            c.theorem_mode = None;
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        positive("r", self.directions as f64)?;
        positive("I", self.trials as f64)?;
        positive("M", self.resolution as f64)?;
        positive("R", self.scale)?;
        positive("A", self.box_half_width)?;
        positive("c3", self.penalty)?;
        positive("beta", self.beta)
    }
}

fn check_sample_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Parameter(
            "parameter rules based on log n need at least 2 samples".into(),
        ));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// Which estimator produced a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Smooth(SmoothConfig),
    Projection(PPConfig),
}

/// A fitted model: features, output weights and truncation level.
#[derive(Debug, Clone)]
pub struct FittedEstimator {
    batch: FeatureBatch<f64>,
    coefficients: Vec<f64>,
    beta: f64,
    config: ModelConfig,
    dim: usize,
    selected_directions: Option<Vec<Vec<f64>>>,
    selection_trace: Vec<Option<f64>>,
    selected_trial: Option<usize>,
    training_objective: f64,
    audit_passed: bool,
}

impl FittedEstimator {
    pub fn features(&self) -> &[FeatureDescriptor<f64>] {
        self.batch.features()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Resolved configuration the model was fitted with.
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn selected_directions(&self) -> Option<&[Vec<f64>]> {
        self.selected_directions.as_deref()
    }

    /// Criterion value of every trial; `None` where the trial failed.
    pub fn selection_trace(&self) -> &[Option<f64>] {
        &self.selection_trace
    }

    pub fn selected_trial(&self) -> Option<usize> {
        self.selected_trial
    }

    /// Penalized training objective at the fitted coefficients.
    pub fn training_objective(&self) -> f64 {
        self.training_objective
    }

    pub fn audit_passed(&self) -> bool {
        self.audit_passed
    }

    /// `∑ aⱼ·featureⱼ(x)` before truncation.
    pub fn raw_predict(&self, x: &[f64]) -> Result<f64> {
        let values = self.batch.eval(x)?;
        Ok(dot(&values, &self.coefficients))
    }

    /// Truncated prediction.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(truncate(self.raw_predict(x)?, self.beta))
    }

    /// Truncated predictions at many points, evaluated in parallel.
    pub fn predict_many(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.par_iter().map(|x| self.predict(x)).collect()
    }
}

/// `max{min{z, β}, -β}`.
pub fn truncate(z: f64, beta: f64) -> f64 {
    z.clamp(-beta, beta)
}

/// `(1/n)·∑(Yᵢ - predict(xᵢ))²`.
pub fn empirical_l2_risk(est: &FittedEstimator, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let pred = est.predict_many(data.x())?;
    Ok(mean_squared_error(&pred, data.y()))
}

pub(crate) fn mean_squared_error(pred: &[f64], y: &[f64]) -> f64 {
    let s: f64 = pred.iter().zip(y).map(|(p, t)| (t - p) * (t - p)).sum();
    s / y.len() as f64
}

fn clamped_training_inputs(data: &Dataset, h: f64) -> Vec<Vec<f64>> {
    let (x, moved) = data.clamped_inputs(h);
    if moved > 0 {
        log::warn!("{moved} training rows lie outside [-{h}, {h}]^d and were clamped");
    }
    x
}

/// Fits the cube-grid estimator.
pub fn fit_smooth(data: &Dataset, config: &SmoothConfig) -> Result<FittedEstimator> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let d = data.dim();
    let c = config.resolve(data.len(), d)?;
    let features = enumerate_features_cube(d, c.max_degree, c.resolution, c.half_width, c.scale)?;
    let batch = FeatureBatch::new(features)?;
    let x = clamped_training_inputs(data, c.half_width);
    let b = DesignMatrix::from_values(design_values(&batch, &x)?, Vec::new())?;
    let sol = ridge_solve(&b, data.y(), c.penalty)?;
    let audit = coefficient_bound_audit(&sol, data.y());
    if !audit {
        return Err(Error::Estimator("coefficient bound audit failed".into()));
    }
    Ok(FittedEstimator {
        batch,
        coefficients: sol.coefficients,
        beta: c.beta,
        config: ModelConfig::Smooth(c),
        dim: d,
        selected_directions: None,
        selection_trace: Vec::new(),
        selected_trial: None,
        training_objective: sol.objective,
        audit_passed: audit,
    })
}

/// `r` directions with entries i.i.d. uniform on `[-1, 1]`.
pub fn sample_directions(r: usize, d: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    (0..r)
        .map(|_| (0..d).map(|_| rng.uniform_range(-1.0, 1.0)).collect())
        .collect()
}

struct Trial {
    criterion: f64,
    objective: f64,
    directions: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
    audit: bool,
}

fn run_trial(index: usize, x: &[Vec<f64>], y: &[f64], c: &PPConfig) -> Result<Trial> {
    let d = x[0].len();
    let mut rng = SplitMix64::stream(c.seed, index as u64);
    let directions = sample_directions(c.directions, d, &mut rng);
    let features = enumerate_features_pp(
        d,
        c.max_degree,
        c.resolution,
        c.box_half_width,
        c.scale,
        &directions,
    )?;
    let batch = FeatureBatch::new(features)?;
    let b = DesignMatrix::from_values(design_values(&batch, x)?, Vec::new())?;
    let sol = ridge_solve(&b, y, c.penalty)?;
    let audit = coefficient_bound_audit(&sol, y);
    if !audit {
        return Err(Error::Estimator(format!(
            "coefficient bound audit failed in trial {index}"
        )));
    }
    let criterion = match c.selection {
        SelectionCriterion::Penalized => sol.objective,
        SelectionCriterion::Empirical => {
            sol.objective - c.penalty * dot(&sol.coefficients, &sol.coefficients) / y.len() as f64
        }
    };
    Ok(Trial {
        criterion,
        objective: sol.objective,
        directions,
        coefficients: sol.coefficients,
        audit,
    })
}

/// Fits the projection-pursuit estimator: `I` independent direction draws,
/// each followed by a ridge solve, keeping the best trial. Trial `k` draws
/// its directions from stream `k` of the master seed, so the result does not
/// depend on how trials are scheduled.
pub fn fit_pp(data: &Dataset, config: &PPConfig) -> Result<FittedEstimator> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let d = data.dim();
    let c = config.resolve(data.len(), d)?;
    let x = clamped_training_inputs(data, c.box_half_width);
    let y = data.y();

    // results come back in trial order; ties go to the lower index
    let results: Vec<(usize, Result<Trial>)> = (0..c.trials)
        .into_par_iter()
        .map(|k| (k, run_trial(k, &x, y, &c)))
        .collect();

    let mut trace = Vec::with_capacity(c.trials);
    let mut best: Option<(usize, Trial)> = None;
    let mut last_error = None;
    for (k, r) in results {
        match r {
            Ok(t) => {
                trace.push(Some(t.criterion));
                let better = best.as_ref().is_none_or(|(_, b)| t.criterion < b.criterion);
                if better {
                    best = Some((k, t));
                }
            }
            Err(e) => {
                log::warn!("trial {k} failed: {e}");
                trace.push(None);
                last_error = Some(e);
            }
        }
    }
    let Some((k, t)) = best else {
        return Err(Error::Estimator(format!(
            "all {} trials failed; last error: {}",
            c.trials,
            last_error.map_or_else(|| "none".into(), |e| e.to_string())
        )));
    };
    let features = enumerate_features_pp(
        d,
        c.max_degree,
        c.resolution,
        c.box_half_width,
        c.scale,
        &t.directions,
    )?;
    Ok(FittedEstimator {
        batch: FeatureBatch::new(features)?,
        coefficients: t.coefficients,
        beta: c.beta,
        config: ModelConfig::Projection(c),
        dim: d,
        selected_directions: Some(t.directions),
        selection_trace: trace,
        selected_trial: Some(k),
        training_objective: t.objective,
        audit_passed: t.audit,
    })
}

// ---- serialization --------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    schema: u32,
    #[serde(flatten)]
    config: ModelConfig,
    dim: usize,
    feature_count: usize,
    selected_directions: Option<Vec<Vec<f64>>>,
    coefficients: Vec<String>,
    training_objective: f64,
    selected_trial: Option<usize>,
    selection_trace: Vec<Option<f64>>,
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl FittedEstimator {
    /// Self-describing JSON document; [`FittedEstimator::from_json`] rebuilds
    /// a model with identical predictions.
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            schema: MODEL_SCHEMA,
            config: self.config.clone(),
            dim: self.dim,
            feature_count: self.coefficients.len(),
            selected_directions: self.selected_directions.clone(),
            coefficients: self.coefficients.iter().map(|&v| format_f64(v)).collect(),
            training_objective: self.training_objective,
            selected_trial: self.selected_trial,
            selection_trace: self.selection_trace.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<FittedEstimator> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if file.schema != MODEL_SCHEMA {
            return Err(Error::Format(format!(
                "unsupported schema {} (expected {MODEL_SCHEMA})",
                file.schema
            )));
        }
        let coefficients = file
            .coefficients
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad coefficient {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let (features, beta) = match &file.config {
            ModelConfig::Smooth(c) => (
                enumerate_features_cube(
                    file.dim,
                    c.max_degree,
                    c.resolution,
                    c.half_width,
                    c.scale,
                )?,
                c.beta,
            ),
            ModelConfig::Projection(c) => {
                let dirs = file
                    .selected_directions
                    .as_ref()
                    .ok_or_else(|| Error::Format("projection model without directions".into()))?;
                (
                    enumerate_features_pp(
                        file.dim,
                        c.max_degree,
                        c.resolution,
                        c.box_half_width,
                        c.scale,
                        dirs,
                    )?,
                    c.beta,
                )
            }
        };
        if features.len() != coefficients.len() || file.feature_count != coefficients.len() {
            return Err(Error::Format(format!(
                "model lists {} coefficients but its configuration yields {} features",
                coefficients.len(),
                features.len()
            )));
        }
        Ok(FittedEstimator {
            batch: FeatureBatch::new(features)?,
            coefficients,
            beta,
            config: file.config,
            dim: file.dim,
            selected_directions: file.selected_directions,
            selection_trace: file.selection_trace,
            selected_trial: file.selected_trial,
            training_objective: file.training_objective,
            audit_passed: true,
        })
    }
}

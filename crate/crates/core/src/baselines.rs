//! Comparison estimators and the learn/test split used to tune every method.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{mean_squared_error, FittedEstimator};
use crate::linalg::{spd_solve, Matrix};
use crate::rng::SplitMix64;

/// Diagonal jitter added to the interpolation matrix.
pub const RBF_JITTER: f64 = 1e-10;
/// Share of the sample used for fitting during parameter selection.
pub const LEARN_FRACTION: f64 = 0.8;

/// Anything that maps a point to a prediction.
pub trait Predictor: Send + Sync {
    fn predict(&self, x: &[f64]) -> Result<f64>;

    fn predict_many(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.par_iter().map(|x| self.predict(x)).collect()
    }
}

impl Predictor for FittedEstimator {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        FittedEstimator::predict(self, x)
    }

    fn predict_many(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        FittedEstimator::predict_many(self, xs)
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::Dimension {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Predicts the training mean everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantAvg {
    pub mean: f64,
}

pub fn constant_avg(data: &Dataset) -> Result<ConstantAvg> {
    Ok(ConstantAvg {
        mean: data.mean_y()?,
    })
}

impl Predictor for ConstantAvg {
    fn predict(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.mean)
    }
}

/// Average response over the closed Euclidean ball of radius `bandwidth`;
/// the global mean when the ball holds no training point.
#[derive(Debug, Clone)]
pub struct NadarayaWatson {
    data: Dataset,
    bandwidth: f64,
    mean: f64,
}

pub fn nadaraya_watson(data: &Dataset, bandwidth: f64) -> Result<NadarayaWatson> {
    if !(bandwidth > 0.0) {
        return Err(Error::Parameter(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    Ok(NadarayaWatson {
        mean: data.mean_y()?,
        data: data.clone(),
        bandwidth,
    })
}

impl Predictor for NadarayaWatson {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.data.dim(), x)?;
        let h2 = self.bandwidth * self.bandwidth;
        let (sum, count) = self
            .data
            .x()
            .iter()
            .zip(self.data.y())
            .filter(|(xi, _)| dist2(x, xi) <= h2)
            .fold((0.0, 0usize), |(s, c), (_, &y)| (s + y, c + 1));
        Ok(if count == 0 {
            self.mean
        } else {
            sum / count as f64
        })
    }
}

/// Mean response of the `k` nearest training points; equal distances are
/// ordered by training index.
#[derive(Debug, Clone)]
pub struct Knn {
    data: Dataset,
    k: usize,
}

pub fn knn(data: &Dataset, k: usize) -> Result<Knn> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if k == 0 || k > data.len() {
        return Err(Error::Parameter(format!(
            "k = {k} outside 1..={}",
            data.len()
        )));
    }
    Ok(Knn {
        data: data.clone(),
        k,
    })
}

impl Predictor for Knn {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.data.dim(), x)?;
        let y = self.data.y();
        if self.k == y.len() {
            // every point is a neighbor; sum in index order like the mean
            return Ok(y.iter().sum::<f64>() / y.len() as f64);
        }
        let mut order: Vec<(f64, usize)> = self
            .data
            .x()
            .iter()
            .enumerate()
            .map(|(i, xi)| (dist2(x, xi), i))
            .collect();
        order.select_nth_unstable_by(self.k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut nearest: Vec<usize> = order[..self.k].iter().map(|&(_, i)| i).collect();
        nearest.sort_unstable();
        Ok(nearest.iter().map(|&i| y[i]).sum::<f64>() / self.k as f64)
    }
}

/// `Φ(r) = (1 - r)₊⁶·(35r² + 18r + 3)`.
pub fn wendland(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let t = 1.0 - r;
    let t2 = t * t;
    t2 * t2 * t2 * (35.0 * r * r + 18.0 * r + 3.0)
}

/// Interpolant `∑ wᵢ·Φ(‖x - xᵢ‖/radius)`.
#[derive(Debug, Clone)]
pub struct RbfInterpolant {
    centers: Vec<Vec<f64>>,
    weights: Vec<f64>,
    radius: f64,
}

pub fn rbf_interpolant(data: &Dataset, radius: f64) -> Result<RbfInterpolant> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Parameter(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let x = data.x();
    let n = x.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = wendland(dist2(&x[i], &x[j]).sqrt() / radius);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += RBF_JITTER;
    }
    let (weights, _) = spd_solve(&k, data.y())?;
    Ok(RbfInterpolant {
        centers: x.to_vec(),
        weights,
        radius,
    })
}

impl Predictor for RbfInterpolant {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.centers[0].len(), x)?;
        Ok(self
            .centers
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * wendland(dist2(x, c).sqrt() / self.radius))
            .sum())
    }
}

/// Largest pairwise distance between training inputs.
pub fn diameter(x: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..x.len() {
        for j in 0..i {
            best = best.max(dist2(&x[i], &x[j]));
        }
    }
    best.sqrt()
}

/// `{2^k : k = -5, ..., 5}`.
pub fn bandwidth_grid() -> Vec<f64> {
    (-5..=5).map(|k| 2f64.powi(k)).collect()
}

/// `{1, 2, 3} ∪ {4, 8, ..., 4·⌊n_t/4⌋}`.
pub fn neighbor_grid(n_test: usize) -> Vec<usize> {
    let mut g = vec![1, 2, 3];
    g.extend((1..=n_test / 4).map(|m| 4 * m));
    g
}

/// `{2^k·D : k = -5, ..., 5}` for the diameter `D` of the inputs.
pub fn radius_grid(x: &[Vec<f64>]) -> Vec<f64> {
    let d = diameter(x);
    let d = if d > 0.0 { d } else { 1.0 };
    (-5..=5).map(|k| 2f64.powi(k) * d).collect()
}

/// Disjoint learn and test index sets covering the sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub learn: Vec<usize>,
    pub test: Vec<usize>,
}

/// Random split with `round(0.8·n)` learning points (at least one on each
/// side when `n ≥ 2`). Both index lists are sorted.
pub fn split_indices(n: usize, seed: u64) -> Split {
    let mut idx: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut idx);
    let mut n_learn = (LEARN_FRACTION * n as f64).round() as usize;
    if n >= 2 {
        n_learn = n_learn.clamp(1, n - 1);
    }
    let mut learn = idx[..n_learn].to_vec();
    let mut test = idx[n_learn..].to_vec();
    learn.sort_unstable();
    test.sort_unstable();
    Split { learn, test }
}

/// Outcome of a split-based parameter search.
#[derive(Debug, Clone)]
pub struct Selection<P, M> {
    pub model: M,
    pub parameter: P,
    pub index: usize,
    /// Test risk of every candidate; `None` where fitting failed.
    pub test_risks: Vec<Option<f64>>,
}

/// Fits every candidate on the learning part, scores it on the test part and
/// keeps the first candidate with the smallest test risk. The winner is not
/// refitted on the full sample.
pub fn select_by_split<P, M, F>(
    data: &Dataset,
    grid: &[P],
    seed: u64,
    fit: F,
) -> Result<Selection<P, M>>
where
    P: Clone + Send + Sync,
    M: Predictor,
    F: Fn(&Dataset, &P) -> Result<M> + Send + Sync,
{
    if grid.is_empty() {
        return Err(Error::Parameter("candidate grid is empty".into()));
    }
    if data.len() < 2 {
        return Err(Error::Parameter(
            "split selection needs at least 2 samples".into(),
        ));
    }
    let split = split_indices(data.len(), seed);
    let learn = data.subset(&split.learn);
    let test = data.subset(&split.test);
    let fitted: Vec<Result<(M, f64)>> = grid
        .par_iter()
        .map(|p| {
            let m = fit(&learn, p)?;
            let pred = m.predict_many(test.x())?;
            Ok((m, mean_squared_error(&pred, test.y())))
        })
        .collect();

    let mut test_risks = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, M, f64)> = None;
    let mut last_error = None;
    for (i, r) in fitted.into_iter().enumerate() {
        match r {
            Ok((m, risk)) => {
                test_risks.push(Some(risk));
                if best.as_ref().is_none_or(|b| risk < b.2) {
                    best = Some((i, m, risk));
                }
            }
            Err(e) => {
                test_risks.push(None);
                last_error = Some(e);
            }
        }
    }
    let (index, model, _) = best.ok_or_else(|| {
        Error::Estimator(format!(
            "every candidate failed; last error: {}",
            last_error.map_or_else(|| "none".into(), |e| e.to_string())
        ))
    })?;
    Ok(Selection {
        model,
        parameter: grid[index].clone(),
        index,
        test_risks,
    })
}

/// The comparison methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Constant,
    Kernel,
    Neighbor,
    Rbf,
}

/// A fitted comparison method.
#[derive(Debug, Clone)]
pub enum BaselineModel {
    Constant(ConstantAvg),
    Kernel(NadarayaWatson),
    Neighbor(Knn),
    Rbf(RbfInterpolant),
}

impl Predictor for BaselineModel {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            BaselineModel::Constant(m) => m.predict(x),
            BaselineModel::Kernel(m) => m.predict(x),
            BaselineModel::Neighbor(m) => m.predict(x),
            BaselineModel::Rbf(m) => m.predict(x),
        }
    }
}

/// Fits `method` with its standard candidate grid, tuned by a seeded split.
/// Returns the model and the chosen parameter (`None` for the constant).
pub fn fit_baseline(
    method: Baseline,
    data: &Dataset,
    seed: u64,
) -> Result<(BaselineModel, Option<f64>)> {
    match method {
        Baseline::Constant => Ok((BaselineModel::Constant(constant_avg(data)?), None)),
        Baseline::Kernel => {
            let s = select_by_split(data, &bandwidth_grid(), seed, |d, &h| nadaraya_watson(d, h))?;
            Ok((BaselineModel::Kernel(s.model), Some(s.parameter)))
        }
        Baseline::Neighbor => {
            let n_test = split_indices(data.len(), seed).test.len();
            let n_learn = data.len() - n_test;
            let grid: Vec<usize> = neighbor_grid(n_test)
                .into_iter()
                .filter(|&k| k <= n_learn)
                .collect();
            let s = select_by_split(data, &grid, seed, |d, &k| knn(d, k))?;
            Ok((BaselineModel::Neighbor(s.model), Some(s.parameter as f64)))
        }
        Baseline::Rbf => {
            let split = split_indices(data.len(), seed);
            let learn_x: Vec<Vec<f64>> = split.learn.iter().map(|&i| data.x()[i].clone()).collect();
            let grid = radius_grid(&learn_x);
            let s = select_by_split(data, &grid, seed, |d, &r| rbf_interpolant(d, r))?;
            Ok((BaselineModel::Rbf(s.model), Some(s.parameter)))
        }
    }
}

//! Design matrices and the ridge solve for the output weights.
//!
//! The coefficients minimize
//! `(1/n)·‖Y - B·a‖² + (c3/n)·‖a‖²`, i.e. they solve
//! `(BᵀB/n + (c3/n)·I)·a = BᵀY/n`. When there are more features than rows the
//! equivalent `a = Bᵀ·(BBᵀ + c3·I)⁻¹·Y` is used, which factors an `n×n`
//! matrix instead of a `J×J` one.

use rayon::prelude::*;

use crate::batch::FeatureBatch;
use crate::error::{Error, Result};
use crate::features::{FeatureDescriptor, FeatureKind};
use crate::linalg::{dot, spd_solve, Matrix};
use crate::scalar::Scalar;

/// Relative residual a double precision solve must reach.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// [`RESIDUAL_TOLERANCE`], loosened for scalar types with less precision.
pub fn residual_tolerance<T: Scalar>() -> T {
    T::lit(RESIDUAL_TOLERANCE).max(T::lit(1e4) * T::epsilon())
}

/// `B_ij = feature_j(X_i)`.
#[derive(Debug, Clone)]
pub struct DesignMatrix<T> {
    values: Matrix<T>,
    feature_order: Vec<FeatureDescriptor<T>>,
}

impl<T: Scalar> DesignMatrix<T> {
    /// Wraps precomputed values. Column `j` is taken to belong to
    /// `feature_order[j]`; pass an empty list for a bare matrix.
    pub fn from_values(
        values: Matrix<T>,
        feature_order: Vec<FeatureDescriptor<T>>,
    ) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::EmptyData);
        }
        if !feature_order.is_empty() && feature_order.len() != values.cols() {
            return Err(Error::Dimension {
                expected: values.cols(),
                got: feature_order.len(),
            });
        }
        if values.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter(
                "design matrix has non-finite entries".into(),
            ));
        }
        Ok(DesignMatrix {
            values,
            feature_order,
        })
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn feature_order(&self) -> &[FeatureDescriptor<T>] {
        &self.feature_order
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }
}

/// Evaluates every feature at every row of `x`.
pub fn build_design_matrix<T: Scalar>(
    features: &[FeatureDescriptor<T>],
    x: &[Vec<T>],
) -> Result<DesignMatrix<T>> {
    let batch = FeatureBatch::new(features.to_vec())?;
    let values = design_values(&batch, x)?;
    DesignMatrix::from_values(values, batch.into_features())
}

/// Same as [`build_design_matrix`] for an already prepared batch; the matrix
/// does not keep a copy of the features.
pub fn design_values<T: Scalar>(batch: &FeatureBatch<T>, x: &[Vec<T>]) -> Result<Matrix<T>> {
    if x.is_empty() {
        return Err(Error::EmptyData);
    }
    let j = batch.len();
    warn_outside_domain(batch.features(), x);
    let mut values = Matrix::zeros(x.len(), j);
    values
        .as_mut_slice()
        .par_chunks_mut(j)
        .zip(x.par_iter())
        .try_for_each(|(out, row)| batch.eval_row(row, out))?;
    Ok(values)
}

fn warn_outside_domain<T: Scalar>(features: &[FeatureDescriptor<T>], x: &[Vec<T>]) {
    let Some(f) = features.first() else { return };
    let half = match f.kind() {
        FeatureKind::Cube => f.params.half_width,
        FeatureKind::Projection => f.params.half_width / T::from_count(f.dim()).sqrt(),
    };
    // small slack so √d·A / √d round trips do not trigger it
    let limit = half * (T::one() + T::lit(1e-12));
    let outside = x
        .iter()
        .filter(|row| row.iter().any(|v| v.abs() > limit))
        .count();
    if outside > 0 {
        log::warn!("{outside} input rows lie outside the feature domain [-{half}, {half}]^d");
    }
}

/// Output weights together with the penalty and the objective they reach.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSolution<T> {
    pub coefficients: Vec<T>,
    pub penalty: T,
    pub objective: T,
    pub gram_condition_estimate: T,
    /// `‖(BᵀB + c3·I)a - BᵀY‖ / ‖BᵀY‖`.
    pub relative_residual: T,
}

/// `(1/n)·∑(Yᵢ - (Ba)ᵢ)² + (c3/n)·aᵀa`.
pub fn objective_value<T: Scalar>(b: &DesignMatrix<T>, y: &[T], a: &[T], c3: T) -> T {
    let n = T::from_count(b.rows());
    let fitted = b.values().mul_vec(a);
    let rss = fitted
        .iter()
        .zip(y)
        .fold(T::zero(), |acc, (&f, &yi)| acc + (yi - f) * (yi - f));
    (rss + c3 * dot(a, a)) / n
}

/// `aᵀa ≤ ∑Yᵢ²/c3`.
pub fn coefficient_bound_audit<T: Scalar>(solution: &RidgeSolution<T>, y: &[T]) -> bool {
    let lhs = dot(&solution.coefficients, &solution.coefficients);
    let rhs = dot(y, y) / solution.penalty;
    lhs <= rhs
}

/// `BᵀB + c3·I` (unscaled). Rows of the Gram matrix are independent and are
/// assembled in parallel.
pub fn normal_matrix<T: Scalar>(b: &Matrix<T>, c3: T) -> Matrix<T> {
    let bt = b.transpose();
    gram_rows(&bt, c3)
}

/// `M·Mᵀ + c·I` for a row-major `M`.
fn gram_rows<T: Scalar>(m: &Matrix<T>, c: T) -> Matrix<T> {
    let k = m.rows();
    let upper: Vec<Vec<T>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let ri = m.row(i);
            (i..k).map(|j| dot(ri, m.row(j))).collect()
        })
        .collect();
    let mut g = Matrix::zeros(k, k);
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + off;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
        g[(i, i)] += c;
    }
    g
}

/// Solves the ridge problem for penalty `c3 > 0`.
pub fn ridge_solve<T: Scalar>(b: &DesignMatrix<T>, y: &[T], c3: T) -> Result<RidgeSolution<T>> {
    if !(c3 > T::zero()) || !c3.is_finite() {
        return Err(Error::Parameter(format!(
            "penalty c3 must be positive, got {c3}"
        )));
    }
    let (n, j) = (b.rows(), b.cols());
    if y.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    let bm = b.values();
    let bty = bm.tr_mul_vec(y);

    // primal system when J ≤ n, row-space system otherwise
    let primal = j <= n;
    let (system, rhs) = if primal {
        (normal_matrix(bm, c3), bty.clone())
    } else {
        (gram_rows(bm, c3), y.to_vec())
    };
    let (mut u, condition) = spd_solve(&system, &rhs)?;
    let lift = |u: &[T]| if primal { u.to_vec() } else { bm.tr_mul_vec(u) };
    let mut a = lift(&u);
    let tol = residual_tolerance::<T>();
    let mut residual = normal_residual(bm, c3, &a, &bty);
    if residual > tol {
        // one step of iterative refinement
        let r: Vec<T> = rhs
            .iter()
            .zip(system.mul_vec(&u))
            .map(|(&t, su)| t - su)
            .collect();
        let (delta, _) = spd_solve(&system, &r)?;
        for (ui, di) in u.iter_mut().zip(delta) {
            *ui += di;
        }
        a = lift(&u);
        residual = normal_residual(bm, c3, &a, &bty);
    }
    if !(residual <= tol) {
        return Err(Error::Solver {
            reason: format!("relative residual {residual} exceeds {tol}"),
            condition: condition.as_f64(),
        });
    }
    let objective = objective_value(b, y, &a, c3);
    Ok(RidgeSolution {
        coefficients: a,
        penalty: c3,
        objective,
        gram_condition_estimate: condition,
        relative_residual: residual,
    })
}

fn normal_residual<T: Scalar>(b: &Matrix<T>, c3: T, a: &[T], bty: &[T]) -> T {
    let ba = b.mul_vec(a);
    let btba = b.tr_mul_vec(&ba);
    let num = btba
        .iter()
        .zip(a)
        .zip(bty)
        .map(|((&g, &ai), &t)| {
            let r = g + c3 * ai - t;
            r * r
        })
        .fold(T::zero(), |acc, v| acc + v)
        .sqrt();
    let den = dot(bty, bty).sqrt();
    if den == T::zero() {
        num
    } else {
        num / den
    }
}

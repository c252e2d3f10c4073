//! Fixed-weight feature networks.
//!
//! A feature is a product tree of [`NetBlocks::mult`] gates over leaves that
//! are either doubled identity blocks (one per power of a coordinate), hat
//! blocks, or the constant 1. Two layouts exist:
//!
//! * cube features approximate `∏ (x_l - y_l)^{j_l} · ∏ (1 - M/(2a)|x_l - y_l|)₊`
//!   for an anchor `y` on the grid `{-a + i·2a/M}^d`;
//! * projection features approximate `∏ x_l^{j_l} · (1 - M/(2√d·A)|bᵀx - u|)₊`
//!   for a direction `b` and an anchor `u` on `{-√d·A + i·2√d·A/M}`.
//!
//! The tree always has `2^s` leaves; unused leaves are the constant 1 and still
//! pass through the product gates, so evaluation follows the layered network
//! exactly, including where its errors accumulate.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::activation::ActivationProfile;
use crate::error::{Error, Result};
use crate::netblocks::{exact_hat, hat_bound, BlockParams, NetBlocks};
use crate::scalar::Scalar;

/// Upper limit on the number of features a single enumeration may produce.
pub const MAX_FEATURES: u128 = 10_000_000;

/// Exponents `(j_1, ..., j_d)` of a monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// All multi-indices of dimension `dim` with total degree at most `max_degree`,
/// in lexicographic order.
pub fn multi_indices(dim: usize, max_degree: u32) -> Vec<MultiIndex> {
    fn rec(dim: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if cur.len() == dim {
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for j in 0..=left {
            cur.push(j);
            rec(dim, left - j, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, max_degree, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// `C(n, k)` in 128-bit arithmetic, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Grid point a feature is anchored at.
#[derive(Debug, Clone, PartialEq)]
pub enum GridAnchor<T> {
    /// `x_i = (-a + i_1·2a/M, ..., -a + i_d·2a/M)`.
    Cube { index: Vec<usize>, point: Vec<T> },
    /// `u_i = -√d·A + i·2√d·A/M`.
    Line { index: usize, position: T },
}

impl<T: Scalar> GridAnchor<T> {
    pub fn cube(index: Vec<usize>, half_width: T, resolution: usize) -> Self {
        let point = index
            .iter()
            .map(|&i| grid_point(i, half_width, resolution))
            .collect();
        GridAnchor::Cube { index, point }
    }

    /// Line anchor for projections in dimension `dim` on the box `[-A, A]^d`.
    pub fn line(index: usize, box_half_width: T, dim: usize, resolution: usize) -> Self {
        let half = T::from_count(dim).sqrt() * box_half_width;
        GridAnchor::Line {
            index,
            position: grid_point(index, half, resolution),
        }
    }
}

/// `-h + i·2h/M`; with `M = 0` the single grid point is `-h`.
pub fn grid_point<T: Scalar>(i: usize, half_width: T, resolution: usize) -> T {
    if resolution == 0 {
        return -half_width;
    }
    -half_width + T::from_count(i) * T::lit(2.0) * half_width / T::from_count(resolution)
}

/// Which layout a feature uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Cube,
    Projection,
}

/// One fixed-weight feature network.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDescriptor<T> {
    pub multi_index: MultiIndex,
    pub anchor: GridAnchor<T>,
    /// Direction `b` and its position in the direction list; projection only.
    pub direction: Option<(usize, Vec<T>)>,
    /// For projection features `half_width` is already `√d·A`.
    pub params: BlockParams<T>,
    /// Tree depth `s`.
    pub depth: u32,
}

impl<T: Scalar> FeatureDescriptor<T> {
    pub fn kind(&self) -> FeatureKind {
        match self.anchor {
            GridAnchor::Cube { .. } => FeatureKind::Cube,
            GridAnchor::Line { .. } => FeatureKind::Projection,
        }
    }

    pub fn dim(&self) -> usize {
        self.multi_index.dim()
    }

    pub fn leaf_count(&self) -> usize {
        1usize << self.depth
    }
}

static THRESHOLD_WARNED: AtomicBool = AtomicBool::new(false);

// Estimators enumerate features once per trial; warn on the first occurrence
// only and keep the rest at debug level.
fn warn_below_threshold<T: Scalar>(scale: T, min: T) {
    let msg = format!(
        "R = {scale} is below the product-tree threshold {min}; the error bound is not guaranteed"
    );
    if THRESHOLD_WARNED.swap(true, Ordering::Relaxed) {
        log::debug!("{msg}");
    } else {
        log::warn!("{msg} (repeats are logged at debug level)");
    }
}

/// `⌈log₂ n⌉` for `n ≥ 1`.
pub fn ceil_log2(n: usize) -> u32 {
    assert!(n >= 1);
    usize::BITS - (n - 1).leading_zeros()
}

fn guard(count: Option<u128>) -> Result<usize> {
    match count {
        Some(c) if c <= MAX_FEATURES => Ok(c as usize),
        Some(c) => Err(Error::TooManyFeatures {
            count: c,
            limit: MAX_FEATURES,
        }),
        None => Err(Error::TooManyFeatures {
            count: u128::MAX,
            limit: MAX_FEATURES,
        }),
    }
}

/// Number of cube features `(M+1)^d · C(N+d, d)`.
pub fn cube_feature_count(dim: usize, max_degree: u32, resolution: usize) -> Result<usize> {
    let anchors = (resolution as u128 + 1).checked_pow(dim as u32);
    let monomials = binomial(max_degree as u64 + dim as u64, dim as u64);
    guard(anchors.zip(monomials).and_then(|(a, m)| a.checked_mul(m)))
}

/// Number of projection features `r · (M+1) · C(N+d, d)`.
pub fn projection_feature_count(
    dim: usize,
    max_degree: u32,
    resolution: usize,
    directions: usize,
) -> Result<usize> {
    let monomials = binomial(max_degree as u64 + dim as u64, dim as u64);
    guard(monomials.and_then(|m| {
        m.checked_mul(resolution as u128 + 1)?
            .checked_mul(directions as u128)
    }))
}

/// Lower bound on `R` under which the product-tree error bound is stated.
/// `dim_factor` is 1 for cube features and `d^{3/2}` for projection features.
pub fn tree_min_scale<T: Scalar>(
    profile: &ActivationProfile<T>,
    half_width: T,
    resolution: usize,
    depth: u32,
    dim_factor: T,
) -> T {
    let m = T::from_count(resolution);
    let one = T::one();
    let d1 = profile.d1_at_id.abs();
    let c1 = profile.sup_d2 * (m + one) / (T::lit(2.0) * d1);
    let c2 = T::lit(9.0) * profile.sup_d2 * half_width / d1;
    let c3 = T::lit(20.0) * profile.sup_d3 / (T::lit(3.0) * profile.d2_at_sq.abs())
        * tree_error_shape(half_width, 0, depth);
    let c4 = T::lit(1792.0) * profile.relu_ratio() * dim_factor * m * m * m;
    c1.max(c2).max(c3).max(c4)
}

/// `3^{3·3^s} · a^{3·2^s} · M³`, the shape of the product-tree error bound
/// (without the `1/R` factor). With `resolution = 0` the `M³` factor is omitted.
pub fn tree_error_shape<T: Scalar>(half_width: T, resolution: usize, depth: u32) -> T {
    let three = T::lit(3.0);
    let e3 = three.powi(3i32.saturating_pow(depth));
    let p3 = e3.powi(3);
    let pa = half_width.powi(3 * (1i32 << depth));
    let m = if resolution == 0 {
        T::one()
    } else {
        T::from_count(resolution).powi(3)
    };
    p3 * pa * m
}

/// All cube features, ordered lexicographically by anchor index tuple and then
/// by multi-index.
pub fn enumerate_features_cube<T: Scalar>(
    dim: usize,
    max_degree: u32,
    resolution: usize,
    half_width: T,
    scale: T,
) -> Result<Vec<FeatureDescriptor<T>>> {
    if dim == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    let count = cube_feature_count(dim, max_degree, resolution)?;
    let params = BlockParams::new(scale, half_width, resolution);
    let blocks = NetBlocks::new(params);
    blocks.check_hat()?;
    let depth = ceil_log2(max_degree as usize + dim);
    let profile = ActivationProfile::logistic();
    let min = tree_min_scale(&profile, half_width, resolution, depth, T::one());
    if params.scale < min {
        warn_below_threshold(params.scale, min);
    }

    let monomials = multi_indices(dim, max_degree);
    let mut out = Vec::with_capacity(count);
    let mut index = vec![0usize; dim];
    loop {
        let anchor = GridAnchor::cube(index.clone(), half_width, resolution);
        for mi in &monomials {
            out.push(FeatureDescriptor {
                multi_index: mi.clone(),
                anchor: anchor.clone(),
                direction: None,
                params,
                depth,
            });
        }
        // odometer, last coordinate fastest
        let mut k = dim;
        loop {
            if k == 0 {
                debug_assert_eq!(out.len(), count);
                return Ok(out);
            }
            k -= 1;
            if index[k] < resolution {
                index[k] += 1;
                break;
            }
            index[k] = 0;
        }
    }
}

/// All projection features, ordered by direction, then anchor, then
/// multi-index.
pub fn enumerate_features_pp<T: Scalar>(
    dim: usize,
    max_degree: u32,
    resolution: usize,
    box_half_width: T,
    scale: T,
    directions: &[Vec<T>],
) -> Result<Vec<FeatureDescriptor<T>>> {
    if directions.is_empty() {
        return Err(Error::Parameter(
            "at least one direction is required".into(),
        ));
    }
    if dim == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    for b in directions {
        if b.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: b.len(),
            });
        }
    }
    let count = projection_feature_count(dim, max_degree, resolution, directions.len())?;
    let params = BlockParams::projection(scale, box_half_width, dim, resolution);
    NetBlocks::new(params).check_hat()?;
    let depth = ceil_log2(max_degree as usize + 1);
    let profile = ActivationProfile::logistic();
    let dim_factor = T::from_count(dim).powf(T::lit(1.5));
    let min = tree_min_scale(&profile, box_half_width, resolution, depth, dim_factor);
    if params.scale < min {
        warn_below_threshold(params.scale, min);
    }

    let monomials = multi_indices(dim, max_degree);
    let mut out = Vec::with_capacity(count);
    for (l, b) in directions.iter().enumerate() {
        for i in 0..=resolution {
            let anchor = GridAnchor::line(i, box_half_width, dim, resolution);
            for mi in &monomials {
                out.push(FeatureDescriptor {
                    multi_index: mi.clone(),
                    anchor: anchor.clone(),
                    direction: Some((l, b.clone())),
                    params,
                    depth,
                });
            }
        }
    }
    Ok(out)
}

fn check_dim<T>(x: &[T], f: &FeatureDescriptor<T>) -> Result<()> {
    if x.len() != f.multi_index.dim() {
        return Err(Error::Dimension {
            expected: f.multi_index.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Multiplies leaves pairwise through the product gate until one value is
/// left. `leaves.len()` must be a power of two.
#[inline]
pub(crate) fn reduce_tree<T: Scalar>(blocks: &NetBlocks<T>, leaves: &mut [T]) -> T {
    let mut len = leaves.len();
    debug_assert!(len.is_power_of_two());
    while len > 1 {
        len /= 2;
        for k in 0..len {
            leaves[k] = blocks.mult(leaves[2 * k], leaves[2 * k + 1]);
        }
    }
    leaves[0]
}

/// Evaluates a cube feature network at `x`.
pub fn eval_f_net<T: Scalar>(x: &[T], f: &FeatureDescriptor<T>) -> Result<T> {
    check_dim(x, f)?;
    let GridAnchor::Cube { point, .. } = &f.anchor else {
        return Err(Error::Parameter("eval_f_net needs a cube feature".into()));
    };
    let blocks = NetBlocks::new(f.params);
    let mut leaves = Vec::with_capacity(f.leaf_count());
    for (l, &j) in f.multi_index.entries().iter().enumerate() {
        let v = blocks.id(blocks.id(x[l] - point[l]));
        leaves.extend(std::iter::repeat_n(v, j as usize));
    }
    for k in 0..x.len() {
        leaves.push(blocks.hat(x[k], point[k]));
    }
    finish_leaves(&blocks, leaves, f.leaf_count())
}

/// Evaluates a projection feature network at `x`.
pub fn eval_f_net_pp<T: Scalar>(x: &[T], f: &FeatureDescriptor<T>) -> Result<T> {
    check_dim(x, f)?;
    let (GridAnchor::Line { position, .. }, Some((_, b))) = (&f.anchor, &f.direction) else {
        return Err(Error::Parameter(
            "eval_f_net_pp needs a projection feature".into(),
        ));
    };
    let blocks = NetBlocks::new(f.params);
    let mut leaves = Vec::with_capacity(f.leaf_count());
    for (l, &j) in f.multi_index.entries().iter().enumerate() {
        let v = blocks.id(blocks.id(x[l]));
        leaves.extend(std::iter::repeat_n(v, j as usize));
    }
    leaves.push(blocks.hat(dot(b, x), *position));
    finish_leaves(&blocks, leaves, f.leaf_count())
}

/// Evaluates either kind of feature.
pub fn eval_feature<T: Scalar>(x: &[T], f: &FeatureDescriptor<T>) -> Result<T> {
    match f.kind() {
        FeatureKind::Cube => eval_f_net(x, f),
        FeatureKind::Projection => eval_f_net_pp(x, f),
    }
}

fn finish_leaves<T: Scalar>(
    blocks: &NetBlocks<T>,
    mut leaves: Vec<T>,
    leaf_count: usize,
) -> Result<T> {
    if leaves.len() > leaf_count {
        return Err(Error::Parameter(format!(
            "feature needs {} leaves but its tree has {leaf_count}",
            leaves.len()
        )));
    }
    leaves.resize(leaf_count, T::one());
    Ok(reduce_tree(blocks, &mut leaves))
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&u, &v)| acc + u * v)
}

/// The function a cube feature approximates, evaluated exactly.
pub fn eval_exact_target_cube<T: Scalar>(x: &[T], f: &FeatureDescriptor<T>) -> Result<T> {
    check_dim(x, f)?;
    let GridAnchor::Cube { point, .. } = &f.anchor else {
        return Err(Error::Parameter("expected a cube feature".into()));
    };
    let slope = hat_slope(&f.params);
    let mut v = T::one();
    for (l, &j) in f.multi_index.entries().iter().enumerate() {
        let diff = x[l] - point[l];
        v = v * diff.powi(j as i32) * exact_hat(x[l], point[l], slope);
    }
    Ok(v)
}

/// The function a projection feature approximates, evaluated exactly.
pub fn eval_exact_target_pp<T: Scalar>(x: &[T], f: &FeatureDescriptor<T>) -> Result<T> {
    check_dim(x, f)?;
    let (GridAnchor::Line { position, .. }, Some((_, b))) = (&f.anchor, &f.direction) else {
        return Err(Error::Parameter("expected a projection feature".into()));
    };
    let slope = hat_slope(&f.params);
    let mut v = exact_hat(dot(b, x), *position, slope);
    for (l, &j) in f.multi_index.entries().iter().enumerate() {
        v *= x[l].powi(j as i32);
    }
    Ok(v)
}

/// Exact target of either kind.
pub fn eval_exact_target<T: Scalar>(x: &[T], f: &FeatureDescriptor<T>) -> Result<T> {
    match f.kind() {
        FeatureKind::Cube => eval_exact_target_cube(x, f),
        FeatureKind::Projection => eval_exact_target_pp(x, f),
    }
}

fn hat_slope<T: Scalar>(p: &BlockParams<T>) -> T {
    T::from_count(p.resolution) / (T::lit(2.0) * p.half_width)
}

/// Bound on a single hat leaf's error at this feature's parameters.
pub fn leaf_hat_bound<T: Scalar>(f: &FeatureDescriptor<T>) -> T {
    hat_bound(
        &ActivationProfile::logistic(),
        f.params.resolution,
        f.params.scale,
    )
}

// ---- Taylor patch ---------------------------------------------------------

/// Piecewise Taylor approximant: the hat-weighted combination of order-`q`
/// Taylor polynomials of the target around every anchor of the cube grid.
///
/// `derivative(point, alpha)` must return the partial derivative of the target
/// with multi-index `alpha` at `point`.
pub fn taylor_patch<T, F>(x: &[T], derivative: F, resolution: usize, half_width: T, q: u32) -> T
where
    T: Scalar,
    F: Fn(&[T], &[u32]) -> T,
{
    let dim = x.len();
    let slope = T::from_count(resolution) / (T::lit(2.0) * half_width);
    let monomials = multi_indices(dim, q);
    let factorials: Vec<T> = monomials
        .iter()
        .map(|mi| {
            mi.entries()
                .iter()
                .map(|&j| (1..=j).fold(T::one(), |acc, k| acc * T::from_count(k as usize)))
                .fold(T::one(), |a, b| a * b)
        })
        .collect();

    // only anchors whose hats are nonzero in every coordinate contribute
    let mut ranges = Vec::with_capacity(dim);
    for &xl in x {
        let mut idx = Vec::new();
        for i in 0..=resolution {
            let y = grid_point(i, half_width, resolution);
            if exact_hat(xl, y, slope) > T::zero() {
                idx.push(i);
            }
        }
        ranges.push(idx);
    }
    if ranges.iter().any(|r| r.is_empty()) {
        return T::zero();
    }

    let mut total = T::zero();
    let mut pos = vec![0usize; dim];
    let mut anchor = vec![T::zero(); dim];
    loop {
        let mut weight = T::one();
        for l in 0..dim {
            anchor[l] = grid_point(ranges[l][pos[l]], half_width, resolution);
            weight *= exact_hat(x[l], anchor[l], slope);
        }
        let mut poly = T::zero();
        for (mi, fact) in monomials.iter().zip(&factorials) {
            let mut term = derivative(&anchor, mi.entries()) / *fact;
            for (l, &j) in mi.entries().iter().enumerate() {
                term *= (x[l] - anchor[l]).powi(j as i32);
            }
            poly += term;
        }
        total += poly * weight;

        let mut k = dim;
        loop {
            if k == 0 {
                return total;
            }
            k -= 1;
            if pos[k] + 1 < ranges[k].len() {
                pos[k] += 1;
                break;
            }
            pos[k] = 0;
        }
    }
}

/// Largest `|∑_k ∏_j hat_k(x_j) - 1|` over `points`, with exact hats on the
/// cube grid of resolution `M` and half-width `a`.
pub fn partition_of_unity_check<T: Scalar>(
    resolution: usize,
    half_width: T,
    dim: usize,
    points: &[Vec<T>],
) -> T {
    let slope = T::from_count(resolution) / (T::lit(2.0) * half_width);
    let anchors: Vec<T> = (0..=resolution)
        .map(|i| grid_point(i, half_width, resolution))
        .collect();
    let mut worst = T::zero();
    for p in points {
        debug_assert_eq!(p.len(), dim);
        // sum over the tensor grid, enumerated explicitly
        let mut sum = T::zero();
        let mut idx = vec![0usize; dim];
        'grid: loop {
            let mut w = T::one();
            for l in 0..dim {
                w *= exact_hat(p[l], anchors[idx[l]], slope);
            }
            sum += w;
            let mut k = dim;
            loop {
                if k == 0 {
                    break 'grid;
                }
                k -= 1;
                if idx[k] < resolution {
                    idx[k] += 1;
                    break;
                }
                idx[k] = 0;
            }
        }
        worst = worst.max((sum - T::one()).abs());
    }
    worst
}

/// Largest `|∑_k hat(v - u_k) - 1|` over projected values `v`, for the line
/// grid of half-width `half` (that is `√d·A`).
pub fn line_partition_of_unity_check<T: Scalar>(resolution: usize, half: T, values: &[T]) -> T {
    let slope = T::from_count(resolution) / (T::lit(2.0) * half);
    values
        .iter()
        .map(|&v| {
            let s: T = (0..=resolution)
                .map(|i| exact_hat(v, grid_point(i, half, resolution), slope))
                .sum();
            (s - T::one()).abs()
        })
        .fold(T::zero(), T::max)
}

// ---- architecture ---------------------------------------------------------

/// Layer layout of a feature network.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureSummary {
    pub hidden_layers: usize,
    pub widths: Vec<usize>,
    /// Width every layer fits in: `24·(N + d)` or `24·(N + 1)`.
    pub width_cap: usize,
    /// Largest absolute weight in the construction. Its size relative to
    /// `max{1, M/a, R²}` is reported only; the factor in front is unknown.
    pub max_weight: f64,
}

impl ArchitectureSummary {
    /// `max_weight / max{1, M/a, R²}`.
    pub fn weight_ratio<T: Scalar>(&self, params: &BlockParams<T>) -> f64 {
        let r = params.scale.as_f64();
        let m_over_a = params.resolution as f64 / params.half_width.as_f64();
        self.max_weight / 1f64.max(m_over_a).max(r * r)
    }

    /// The only asserted property of the weights.
    pub fn weights_finite(&self) -> bool {
        self.max_weight.is_finite()
    }
}

/// Hidden layer widths `6·2^s, 12·2^s, 2·2^s, 2^s, ..., 8, 4` of a feature
/// with tree depth `s`. `max_degree` is the degree cap `N` of the enumeration.
pub fn architecture_summary<T: Scalar>(
    f: &FeatureDescriptor<T>,
    max_degree: u32,
) -> ArchitectureSummary {
    let s = f.depth as usize;
    let leaves = 1usize << s;
    let mut widths = vec![6 * leaves, 12 * leaves];
    for e in (2..=s + 1).rev() {
        widths.push(1usize << e);
    }
    let width_cap = match f.kind() {
        FeatureKind::Cube => 24 * (max_degree as usize + f.dim()),
        FeatureKind::Projection => 24 * (max_degree as usize + 1),
    };
    debug_assert!(widths.iter().all(|&w| w <= width_cap));
    ArchitectureSummary {
        hidden_layers: s + 2,
        widths,
        width_cap,
        max_weight: NetBlocks::new(f.params).max_weight().as_f64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(2, 2).len(), 6);
        assert_eq!(multi_indices(3, 0), vec![MultiIndex::zeros(3)]);
        assert_eq!(multi_indices(4, 2).len(), 15);
        let mi = multi_indices(2, 1);
        assert_eq!(
            mi,
            vec![
                MultiIndex::new(vec![0, 0]),
                MultiIndex::new(vec![0, 1]),
                MultiIndex::new(vec![1, 0])
            ]
        );
        assert_eq!(binomial(8, 6), Some(28));
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
    }

    #[test]
    fn cube_enumeration_counts() {
        assert_eq!(
            enumerate_features_cube(1, 1, 1, 1.0f64, 1e6).unwrap().len(),
            4
        );
        assert_eq!(
            enumerate_features_cube(2, 2, 3, 1.0f64, 1e6).unwrap().len(),
            96
        );
        assert_eq!(
            enumerate_features_cube(3, 0, 0, 1.0f64, 1e6).unwrap().len(),
            1
        );
        let err = enumerate_features_cube(8, 6, 9, 1.0f64, 1e6).unwrap_err();
        assert!(matches!(err, Error::TooManyFeatures { .. }));
    }

    #[test]
    fn cube_enumeration_order() {
        let fs = enumerate_features_cube(2, 1, 1, 1.0f64, 1e6).unwrap();
        let GridAnchor::Cube { index, point } = &fs[0].anchor else {
            panic!()
        };
        assert_eq!(index, &vec![0, 0]);
        assert_eq!(point, &vec![-1.0, -1.0]);
        let GridAnchor::Cube { index, .. } = &fs[3].anchor else {
            panic!()
        };
        assert_eq!(index, &vec![0, 1]);
        assert_eq!(fs[4].multi_index, MultiIndex::new(vec![0, 1]));
        assert_eq!(fs[0].depth, 2);
    }

    #[test]
    fn pp_enumeration() {
        let dirs = vec![vec![0.5, -0.3]];
        assert_eq!(
            enumerate_features_pp(2, 1, 1, 1.0f64, 1e6, &dirs)
                .unwrap()
                .len(),
            6
        );
        let dirs4 = vec![vec![0.1, 0.2]; 4];
        let fs = enumerate_features_pp(2, 2, 4, 1.0f64, 1e6, &dirs4).unwrap();
        assert_eq!(fs.len(), 120);
        assert_eq!(fs[0].depth, 2);
        assert_eq!(fs[119].direction.as_ref().unwrap().0, 3);
        assert!(enumerate_features_pp::<f64>(2, 1, 1, 1.0, 1e6, &[]).is_err());
        let GridAnchor::Line { position, .. } = fs[6].anchor else {
            panic!()
        };
        let half = 2f64.sqrt();
        assert!((position - (-half + 2.0 * half / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn cube_net_peak_and_support() {
        let fs = enumerate_features_cube(2, 2, 2, 1.0f64, 1e8).unwrap();
        // anchor (1,1) = (0,0), zero multi-index
        let f = fs
            .iter()
            .find(|f| {
                f.multi_index.degree() == 0
                    && matches!(&f.anchor, GridAnchor::Cube { index, .. } if index == &vec![1, 1])
            })
            .unwrap();
        let v = eval_f_net(&[0.0, 0.0], f).unwrap();
        assert!((v - 1.0).abs() < 1e-4, "{v}");
        // outside the support of the hat in the first coordinate
        let tol = 1e3 * leaf_hat_bound(f);
        let v = eval_f_net(&[1.0, 0.0], f).unwrap();
        assert!(v.abs() <= tol, "{v}");
        assert!(eval_f_net(&[0.0], f).is_err());
    }

    #[test]
    fn pp_net_peak_and_support() {
        let b = vec![0.6, -0.8];
        let fs = enumerate_features_pp(2, 2, 4, 1.0f64, 1e8, std::slice::from_ref(&b)).unwrap();
        let f = fs
            .iter()
            .find(|f| {
                f.multi_index.degree() == 0 && matches!(f.anchor, GridAnchor::Line { index: 2, .. })
            })
            .unwrap();
        // u_2 = 0 and bᵀx = 0 at x = (0.4, 0.3)
        let v = eval_f_net_pp(&[0.4, 0.3], f).unwrap();
        assert!((v - 1.0).abs() < 1e-4, "{v}");
        let off = 2.0 * 2f64.sqrt() / 4.0;
        // bᵀx = off at x = (0.6·off, -0.8·off)
        let v = eval_f_net_pp(&[0.6 * off, -0.8 * off], f).unwrap();
        assert!(v.abs() <= 1e3 * leaf_hat_bound(f), "{v}");
        assert!(eval_f_net(&[0.4, 0.3], f).is_err());
    }

    #[test]
    fn exact_targets() {
        let fs = enumerate_features_cube(1, 2, 2, 1.0f64, 1e6).unwrap();
        // anchor index 1 → 0.0; multi-index (2)
        let f = fs
            .iter()
            .find(|f| {
                f.multi_index.entries() == [2]
                    && matches!(&f.anchor, GridAnchor::Cube { index, .. } if index == &vec![1])
            })
            .unwrap();
        let v = eval_exact_target_cube(&[0.1], f).unwrap();
        assert!((v - 0.009).abs() < 1e-15);
        let f0 = &fs[0];
        assert_eq!(eval_exact_target_cube(&[-1.0], f0).unwrap(), 1.0);
        assert_eq!(eval_exact_target_cube(&[0.0], f0).unwrap(), 0.0);
    }

    #[test]
    fn exact_target_is_continuous_across_support_edge() {
        let fs = enumerate_features_cube(2, 1, 4, 1.0f64, 1e6).unwrap();
        for f in &fs {
            let GridAnchor::Cube { point, .. } = &f.anchor else {
                panic!()
            };
            let edge = point[0] + 0.5;
            let h = 1e-9;
            let lo = eval_exact_target_cube(&[edge - h, point[1]], f).unwrap();
            let hi = eval_exact_target_cube(&[edge + h, point[1]], f).unwrap();
            assert!((lo - hi).abs() < 1e-8);
            assert_eq!(hi, 0.0);
        }
    }

    #[test]
    fn net_converges_to_exact_target() {
        let fs = enumerate_features_cube(2, 2, 2, 1.0f64, 1e5).unwrap();
        let fs8 = enumerate_features_cube(2, 2, 2, 1.0f64, 1e8).unwrap();
        let x = [0.37, -0.21];
        for (f5, f8) in fs.iter().zip(&fs8) {
            let exact = eval_exact_target_cube(&x, f5).unwrap();
            let e5 = (eval_f_net(&x, f5).unwrap() - exact).abs();
            let e8 = (eval_f_net(&x, f8).unwrap() - exact).abs();
            if e5 > 1e-12 {
                assert!(e5 / e8.max(1e-300) >= 500.0, "{e5} {e8}");
            }
        }
    }

    #[test]
    fn one_dimensional_projection_matches_cube_layout() {
        // d = 1, b = (1): the hat argument is x itself and the anchors coincide
        let cube = enumerate_features_cube(1, 0, 4, 1.0f64, 1e6).unwrap();
        let pp = enumerate_features_pp(1, 0, 4, 1.0f64, 1e6, &[vec![1.0]]).unwrap();
        for (c, p) in cube.iter().zip(&pp) {
            for &x in &[-0.9, -0.3, 0.0, 0.55] {
                let a = eval_f_net(&[x], c).unwrap();
                let b = eval_f_net_pp(&[x], p).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn architecture() {
        let fs = enumerate_features_cube(2, 2, 1, 1.0f64, 1e6).unwrap();
        let a = architecture_summary(&fs[0], 2);
        assert_eq!(a.hidden_layers, 4);
        assert_eq!(a.widths, vec![24, 48, 8, 4]);
        assert!(a.widths.iter().all(|&w| w <= 24 * 4));
        let pp = enumerate_features_pp(3, 1, 2, 1.0f64, 1e6, &[vec![0.1, 0.2, 0.3]]).unwrap();
        let a = architecture_summary(&pp[0], 1);
        assert_eq!(a.hidden_layers, 3);
        assert_eq!(a.widths, vec![12, 24, 4]);
        assert!(a.widths.iter().all(|&w| w <= 48));
        assert!(a.weights_finite());
        let ratio = a.weight_ratio(&pp[0].params);
        assert!(ratio > 0.0 && ratio.is_finite(), "{ratio}");
    }

    #[test]
    fn partition_of_unity() {
        let pts: Vec<Vec<f64>> = (0..=200).map(|i| vec![-1.0 + i as f64 * 0.01]).collect();
        assert!(partition_of_unity_check(5, 1.0, 1, &pts) < 1e-15);
        assert!(partition_of_unity_check(4, 1.0, 1, &[vec![1.0]]) == 0.0);
        let vals: Vec<f64> = (0..=100).map(|i| -1.4 + i as f64 * 0.028).collect();
        assert!(line_partition_of_unity_check(8, 2f64.sqrt(), &vals) < 1e-14);
    }

    #[test]
    fn taylor_patch_reproduces_polynomials() {
        // f(x, y) = 1 + 2x - y + 0.5xy + 3y² (degree 2)
        let deriv = |p: &[f64], a: &[u32]| -> f64 {
            let (x, y) = (p[0], p[1]);
            match (a[0], a[1]) {
                (0, 0) => 1.0 + 2.0 * x - y + 0.5 * x * y + 3.0 * y * y,
                (1, 0) => 2.0 + 0.5 * y,
                (0, 1) => -1.0 + 0.5 * x + 6.0 * y,
                (1, 1) => 0.5,
                (2, 0) => 0.0,
                (0, 2) => 6.0,
                _ => 0.0,
            }
        };
        for i in 0..=20 {
            for j in 0..=20 {
                let x = -1.0 + 0.1 * i as f64;
                let y = -1.0 + 0.1 * j as f64;
                let p = taylor_patch(&[x, y], deriv, 3, 1.0, 2);
                let f = deriv(&[x, y], &[0, 0]);
                assert!((p - f).abs() < 1e-10, "{p} vs {f}");
            }
        }
        let constant = |_: &[f64], a: &[u32]| if a.iter().all(|&j| j == 0) { 2.5 } else { 0.0 };
        assert!((taylor_patch(&[0.123], constant, 4, 1.0, 1) - 2.5).abs() < 1e-15);
    }
}

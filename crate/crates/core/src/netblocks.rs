//! Fixed-weight scalar subnetworks built from the logistic squasher: identity,
//! square, product, ReLU and hat, together with their approximation bounds.
//!
//! The blocks are finite differences of σ scaled by powers of `R`, so a literal
//! evaluation loses roughly `R²·ε` to cancellation. [`NetBlocks`] evaluates the
//! same expressions through algebraically equivalent forms built on `expm1`,
//! which keeps the rounding error independent of `R`.

use crate::activation::{sigma, ActivationProfile};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest scale parameter accepted by [`BlockParams::new`]; larger requests
/// are clamped with a warning.
pub const MAX_SUPPORTED_SCALE: f64 = 1e8;

/// Parameters shared by the blocks: scale `R`, domain half-width `a` and the
/// grid resolution `M` used by the hat blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockParams<T> {
    pub scale: T,
    pub half_width: T,
    pub resolution: usize,
}

impl<T: Scalar> BlockParams<T> {
    /// Builds parameters, clamping `scale` to [`MAX_SUPPORTED_SCALE`].
    pub fn new(scale: T, half_width: T, resolution: usize) -> Self {
        let max = T::lit(MAX_SUPPORTED_SCALE);
        let scale = if scale > max {
            log::warn!(
                "scale parameter {scale} exceeds the supported range; clamped to {MAX_SUPPORTED_SCALE:e}"
            );
            max
        } else {
            scale
        };
        BlockParams {
            scale,
            half_width,
            resolution,
        }
    }

    /// Parameters of the projection hat: the half-width becomes `√d·A`.
    pub fn projection(scale: T, box_half_width: T, dim: usize, resolution: usize) -> Self {
        Self::new(
            scale,
            T::from_count(dim).sqrt() * box_half_width,
            resolution,
        )
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale > T::zero()) || !self.scale.is_finite() {
            return Err(Error::Parameter(format!(
                "scale must be positive and finite, got {}",
                self.scale
            )));
        }
        if !(self.half_width > T::zero()) || !self.half_width.is_finite() {
            return Err(Error::Parameter(format!(
                "half-width must be positive and finite, got {}",
                self.half_width
            )));
        }
        Ok(())
    }
}

/// Precomputed evaluator for all blocks at one parameter set.
#[derive(Debug, Clone)]
pub struct NetBlocks<T> {
    params: BlockParams<T>,
    profile: ActivationProfile<T>,
    // identity block: R/σ'(t_id) · (σ(x/R + t_id) - σ(t_id))
    id_prefactor: T,
    id_one_minus_s: T,
    id_exp_neg_t: T,
    id_s: T,
    // square/product blocks at t = t_sigma
    exp_neg_t: T,
    s0: T,
    one_minus_s0: T,
    one_minus_2s0: T,
    sq_prefactor: T,
    mult_prefactor: T,
    hat_slope: T,
}

impl<T: Scalar> NetBlocks<T> {
    pub fn new(params: BlockParams<T>) -> Self {
        Self::with_profile(params, ActivationProfile::logistic())
    }

    pub fn with_profile(params: BlockParams<T>, profile: ActivationProfile<T>) -> Self {
        let r = params.scale;
        let t_id = profile.t_sigma_id;
        let t = profile.t_sigma;
        let id_s = sigma(t_id);
        let s0 = sigma(t);
        let one = T::one();
        let two = T::lit(2.0);
        NetBlocks {
            params,
            profile,
            id_prefactor: r / profile.d1_at_id,
            id_one_minus_s: one - id_s,
            id_exp_neg_t: (-t_id).exp(),
            id_s,
            exp_neg_t: (-t).exp(),
            s0,
            one_minus_s0: one - s0,
            one_minus_2s0: one - two * s0,
            sq_prefactor: r * r / profile.d2_at_sq,
            mult_prefactor: r * r / (T::lit(4.0) * profile.d2_at_sq),
            hat_slope: T::from_count(params.resolution) / (two * params.half_width),
        }
    }

    pub fn params(&self) -> &BlockParams<T> {
        &self.params
    }

    pub fn profile(&self) -> &ActivationProfile<T> {
        &self.profile
    }

    /// Largest absolute weight or bias used by any block: the output
    /// prefactors, the ReLU gate slope `R`, the hat slope and the shifts.
    pub fn max_weight(&self) -> T {
        [
            T::one(),
            self.id_prefactor,
            self.sq_prefactor,
            self.mult_prefactor,
            self.params.scale,
            self.hat_slope,
            self.profile.t_sigma,
            self.profile.t_sigma_id,
        ]
        .into_iter()
        .map(T::abs)
        .fold(T::zero(), T::max)
    }

    /// `σ(t_id + h) - σ(t_id)`.
    #[inline]
    fn first_diff(&self, h: T) -> T {
        if self.profile.t_sigma_id == T::zero() {
            // σ(h) - 1/2 = tanh(h/2)/2, exactly odd
            let half = T::lit(0.5);
            return half * (half * h).tanh();
        }
        if h.abs() > T::one() {
            return sigma(self.profile.t_sigma_id + h) - self.id_s;
        }
        // σ(u) - σ(v) = σ(u)(1 - σ(v))(1 - e^{-(u-v)})
        let em = (-h).exp_m1();
        let s_h = T::one() / (T::one() + self.id_exp_neg_t * (T::one() + em));
        -(s_h * self.id_one_minus_s * em)
    }

    /// `σ(t + 2h) - 2σ(t + h) + σ(t)` at `t = t_sigma`.
    #[inline]
    fn second_diff(&self, h: T) -> T {
        let one = T::one();
        if h.abs() > one {
            let t = self.profile.t_sigma;
            let two = T::lit(2.0);
            return sigma(t + two * h) - two * sigma(t + h) + self.s0;
        }
        // With E = e^{-t}, q = e^{-h} = 1 + em, s1 = σ(t+h), s2 = σ(t+2h):
        // the second difference equals E·em²·s1·s2·((1 - 2σ(t)) + em·(1 - σ(t))).
        let em = (-h).exp_m1();
        let q = one + em;
        let e = self.exp_neg_t;
        let s1 = one / (one + e * q);
        let s2 = one / (one + e * q * q);
        e * em * em * s1 * s2 * (self.one_minus_2s0 + em * self.one_minus_s0)
    }

    /// Identity block, approximates `x`.
    #[inline]
    pub fn id(&self, x: T) -> T {
        self.id_prefactor * self.first_diff(x / self.params.scale)
    }

    /// Square block, approximates `x²`.
    #[inline]
    pub fn sq(&self, x: T) -> T {
        self.sq_prefactor * self.second_diff(x / self.params.scale)
    }

    /// Product block, approximates `x·y`.
    #[inline]
    pub fn mult(&self, x: T, y: T) -> T {
        let r = self.params.scale;
        let plus = self.second_diff((x + y) / r);
        let minus = self.second_diff((x - y) / r);
        self.mult_prefactor * (plus - minus)
    }

    /// ReLU block `mult(id(x), σ(R·x))`, approximates `max{x, 0}`.
    #[inline]
    pub fn relu(&self, x: T) -> T {
        self.mult(self.id(x), sigma(self.params.scale * x))
    }

    /// Hat block centered at `center`, approximates `(1 - M/(2a)·|x - center|)₊`.
    #[inline]
    pub fn hat(&self, x: T, center: T) -> T {
        let z = self.hat_slope * (x - center);
        let one = T::one();
        self.relu(z + one) - T::lit(2.0) * self.relu(z) + self.relu(z - one)
    }

    pub fn check_relu(&self) -> Result<()> {
        self.params.validate()?;
        let a = self.params.half_width;
        if a < T::one() {
            return Err(Error::Parameter(format!(
                "ReLU block needs half-width a >= 1, got {a}"
            )));
        }
        let min = relu_min_scale(&self.profile, a);
        if self.params.scale < min {
            return Err(Error::Parameter(format!(
                "ReLU block needs R >= {min}, got {}",
                self.params.scale
            )));
        }
        Ok(())
    }

    pub fn check_hat(&self) -> Result<()> {
        self.params.validate()?;
        let min = hat_min_scale(&self.profile, self.params.resolution);
        if self.params.scale < min {
            return Err(Error::Parameter(format!(
                "hat block with M = {} needs R >= {min}, got {}",
                self.params.resolution, self.params.scale
            )));
        }
        Ok(())
    }
}

pub fn f_id<T: Scalar>(x: T, params: &BlockParams<T>) -> T {
    NetBlocks::new(*params).id(x)
}

pub fn f_sq<T: Scalar>(x: T, params: &BlockParams<T>) -> T {
    NetBlocks::new(*params).sq(x)
}

pub fn f_mult<T: Scalar>(x: T, y: T, params: &BlockParams<T>) -> T {
    NetBlocks::new(*params).mult(x, y)
}

pub fn f_relu<T: Scalar>(x: T, params: &BlockParams<T>) -> Result<T> {
    let blocks = NetBlocks::new(*params);
    blocks.check_relu()?;
    Ok(blocks.relu(x))
}

pub fn f_hat<T: Scalar>(x: T, center: T, params: &BlockParams<T>) -> Result<T> {
    let blocks = NetBlocks::new(*params);
    blocks.check_hat()?;
    Ok(blocks.hat(x, center))
}

/// Projection hat: the hat block with half-width `√d·A`, applied to a
/// projected coordinate `u`.
pub fn f_hat_bar<T: Scalar>(
    u: T,
    center: T,
    resolution: usize,
    dim: usize,
    box_half_width: T,
    scale: T,
) -> Result<T> {
    let params = BlockParams::projection(scale, box_half_width, dim, resolution);
    f_hat(u, center, &params)
}

/// The product block exactly as the closed form with explicit constant
/// `R²/4 · (1+e⁻¹)³/(e⁻²-e⁻¹)`, evaluated literally. Reference only: it loses
/// about `R²·ε` to cancellation.
pub fn f_mult_closed_form(x: f64, y: f64, scale: f64) -> f64 {
    let e1 = (-1.0f64).exp();
    let e2 = (-2.0f64).exp();
    let r = scale;
    r * r / 4.0 * (1.0 + e1).powi(3) / (e2 - e1)
        * (sigma(2.0 * (x + y) / r + 1.0)
            - 2.0 * sigma((x + y) / r + 1.0)
            - sigma(2.0 * (x - y) / r + 1.0)
            + 2.0 * sigma((x - y) / r + 1.0))
}

/// The generic product form `R²/(4σ''(t)) · (...)` with `t = t_sigma`,
/// evaluated literally.
pub fn f_mult_generic_literal(x: f64, y: f64, scale: f64) -> f64 {
    let p = ActivationProfile::<f64>::logistic();
    let t = p.t_sigma;
    let r = scale;
    r * r / (4.0 * p.d2_at_sq)
        * (sigma(2.0 * (x + y) / r + t)
            - 2.0 * sigma((x + y) / r + t)
            - sigma(2.0 * (x - y) / r + t)
            + 2.0 * sigma((x - y) / r + t))
}

// ---- bounds ---------------------------------------------------------------

/// Identity bound: `‖σ''‖·a² / (2|σ'(t_id)|·R)`.
pub fn id_bound<T: Scalar>(p: &ActivationProfile<T>, a: T, scale: T) -> T {
    p.sup_d2 * a * a / (T::lit(2.0) * p.d1_at_id.abs() * scale)
}

/// Square bound: `5‖σ'''‖·a³ / (3|σ''(t)|·R)`.
pub fn sq_bound<T: Scalar>(p: &ActivationProfile<T>, a: T, scale: T) -> T {
    T::lit(5.0) * p.sup_d3 * a * a * a / (T::lit(3.0) * p.d2_at_sq.abs() * scale)
}

/// Product bound: `20‖σ'''‖·a³ / (3|σ''(t)|·R)`.
pub fn mult_bound<T: Scalar>(p: &ActivationProfile<T>, a: T, scale: T) -> T {
    T::lit(20.0) * p.sup_d3 * a * a * a / (T::lit(3.0) * p.d2_at_sq.abs() * scale)
}

/// ReLU bound: `56 · ratio · a³ / R`.
pub fn relu_bound<T: Scalar>(p: &ActivationProfile<T>, a: T, scale: T) -> T {
    T::lit(56.0) * p.relu_ratio() * a * a * a / scale
}

/// Hat bound: `1792 · ratio · M³ / R`.
pub fn hat_bound<T: Scalar>(p: &ActivationProfile<T>, resolution: usize, scale: T) -> T {
    let m = T::from_count(resolution);
    T::lit(1792.0) * p.relu_ratio() * m * m * m / scale
}

/// Smallest `R` for which the ReLU bound is stated: `‖σ''‖·a / (2|σ'(t_id)|)`.
pub fn relu_min_scale<T: Scalar>(p: &ActivationProfile<T>, a: T) -> T {
    p.sup_d2 * a / (T::lit(2.0) * p.d1_at_id.abs())
}

/// Smallest `R` for which the hat bound is stated: `‖σ''‖·(M+1) / (2|σ'(t_id)|)`.
pub fn hat_min_scale<T: Scalar>(p: &ActivationProfile<T>, resolution: usize) -> T {
    relu_min_scale(p, T::from_count(resolution + 1))
}

/// The exact hat `(1 - slope·|x - center|)₊`.
#[inline]
pub fn exact_hat<T: Scalar>(x: T, center: T, slope: T) -> T {
    (T::one() - slope * (x - center).abs()).max(T::zero())
}

// ---- bound suite ----------------------------------------------------------

/// One row of the block bound check: the measured maximum grid error of a
/// block against its stated bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub block: &'static str,
    pub scale: f64,
    pub max_error: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.max_error.is_finite() && self.max_error <= self.bound
    }
}

fn grid(a: f64, step: f64) -> Vec<f64> {
    let n = (2.0 * a / step).round() as usize;
    (0..=n)
        .map(|i| -a + i as f64 * (2.0 * a / n as f64))
        .collect()
}

/// Measures every block against its bound on `[-a, a]` (and `[-a, a]²` for
/// two-argument blocks) with the given grid step, for each scale.
pub fn bound_suite(
    half_width: f64,
    resolution: usize,
    scales: &[f64],
    step: f64,
) -> Result<Vec<BoundCheck>> {
    let profile = ActivationProfile::<f64>::logistic();
    let xs = grid(half_width, step);
    let a = half_width;
    let mut rows = Vec::with_capacity(scales.len() * 5);
    for &scale in scales {
        let blocks = NetBlocks::new(BlockParams::new(scale, a, resolution));
        blocks.check_relu()?;
        blocks.check_hat()?;

        let id_err = xs
            .iter()
            .map(|&x| (blocks.id(x) - x).abs())
            .fold(0.0, f64::max);
        rows.push(BoundCheck {
            block: "f_id",
            scale,
            max_error: id_err,
            bound: id_bound(&profile, a, scale),
        });

        let sq_err = xs
            .iter()
            .map(|&x| (blocks.sq(x) - x * x).abs())
            .fold(0.0, f64::max);
        rows.push(BoundCheck {
            block: "f_sq",
            scale,
            max_error: sq_err,
            bound: sq_bound(&profile, a, scale),
        });

        let mut mult_err = 0.0f64;
        for &x in &xs {
            for &y in &xs {
                mult_err = mult_err.max((blocks.mult(x, y) - x * y).abs());
            }
        }
        rows.push(BoundCheck {
            block: "f_mult",
            scale,
            max_error: mult_err,
            bound: mult_bound(&profile, a, scale),
        });

        let relu_err = xs
            .iter()
            .map(|&x| (blocks.relu(x) - x.max(0.0)).abs())
            .fold(0.0, f64::max);
        rows.push(BoundCheck {
            block: "f_relu",
            scale,
            max_error: relu_err,
            bound: relu_bound(&profile, a, scale),
        });

        let slope = resolution as f64 / (2.0 * a);
        let mut hat_err = 0.0f64;
        for &y in &xs {
            for &x in &xs {
                hat_err = hat_err.max((blocks.hat(x, y) - exact_hat(x, y, slope)).abs());
            }
        }
        rows.push(BoundCheck {
            block: "f_hat",
            scale,
            max_error: hat_err,
            bound: hat_bound(&profile, resolution, scale),
        });
    }
    Ok(rows)
}

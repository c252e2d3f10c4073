//! The logistic squasher, its first three derivatives, and the constants that
//! parameterize every approximation bound of the network blocks.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Half-width of the interval scanned for the derivative sup-norms.
pub const SUP_SCAN_HALF_WIDTH: f64 = 50.0;
/// Grid step of the sup-norm scan.
pub const SUP_SCAN_STEP: f64 = 1e-3;

/// `1 / (1 + exp(-x))`, evaluated without overflow for large `|x|`.
#[inline]
pub fn sigma<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Closed-form derivative of [`sigma`] of order 1, 2 or 3.
pub fn sigma_derivative<T: Scalar>(x: T, order: u32) -> Result<T> {
    let s = sigma(x);
    let one = T::one();
    let d1 = s * (one - s);
    match order {
        1 => Ok(d1),
        2 => Ok(d1 * (one - s - s)),
        3 => {
            let six = T::lit(6.0);
            Ok(d1 * (one - six * s + six * s * s))
        }
        _ => Err(Error::Parameter(format!(
            "sigma derivative of order {order} is not supported (1, 2 or 3)"
        ))),
    }
}

/// Anchor points and sup-norm constants of the logistic squasher.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationProfile<T> {
    /// Point where σ' is nonzero; the identity block is centered here.
    pub t_sigma_id: T,
    /// Point where σ'' is nonzero; the square and product blocks use it.
    pub t_sigma: T,
    /// ‖σ''‖∞.
    pub sup_d2: T,
    /// ‖σ'''‖∞.
    pub sup_d3: T,
    /// σ'(t_sigma_id).
    pub d1_at_id: T,
    /// σ''(t_sigma).
    pub d2_at_sq: T,
}

impl<T: Scalar> ActivationProfile<T> {
    /// The logistic profile with `t_sigma_id = 0` and `t_sigma = 1`.
    pub fn logistic() -> Self {
        let p = logistic_f64();
        ActivationProfile {
            t_sigma_id: T::lit(p.t_sigma_id),
            t_sigma: T::lit(p.t_sigma),
            sup_d2: T::lit(p.sup_d2),
            sup_d3: T::lit(p.sup_d3),
            d1_at_id: T::lit(p.d1_at_id),
            d2_at_sq: T::lit(p.d2_at_sq),
        }
    }

    /// `max{‖σ''‖, ‖σ'''‖, 1} / min{2|σ'(t_id)|, |σ''(t)|, 1}`, the factor shared
    /// by the ReLU and hat bounds.
    pub fn relu_ratio(&self) -> T {
        let one = T::one();
        let num = self.sup_d2.max(self.sup_d3).max(one);
        let den = (T::lit(2.0) * self.d1_at_id.abs())
            .min(self.d2_at_sq.abs())
            .min(one);
        num / den
    }
}

/// Computes the profile by scanning σ'' and σ''' on the grid
/// `{-50, -50 + 1e-3, ..., 50}`. Outside that window every derivative is
/// below `e^{-50}`, far under the interior maxima, so the grid maximum is the
/// sup-norm up to the grid resolution.
pub fn admissibility_constants<T: Scalar>() -> ActivationProfile<T> {
    ActivationProfile::logistic()
}

fn logistic_f64() -> &'static ActivationProfile<f64> {
    static PROFILE: OnceLock<ActivationProfile<f64>> = OnceLock::new();
    PROFILE.get_or_init(|| {
        let steps = (2.0 * SUP_SCAN_HALF_WIDTH / SUP_SCAN_STEP).round() as i64;
        let mut sup_d2 = 0.0f64;
        let mut sup_d3 = 0.0f64;
        for i in 0..=steps {
            let x = -SUP_SCAN_HALF_WIDTH + i as f64 * SUP_SCAN_STEP;
            sup_d2 = sup_d2.max(sigma_derivative(x, 2).unwrap().abs());
            sup_d3 = sup_d3.max(sigma_derivative(x, 3).unwrap().abs());
        }
        let t_sigma_id = 0.0;
        let t_sigma = 1.0;
        ActivationProfile {
            t_sigma_id,
            t_sigma,
            sup_d2: round12(sup_d2),
            sup_d3: round12(sup_d3),
            d1_at_id: sigma_derivative(t_sigma_id, 1).unwrap(),
            d2_at_sq: sigma_derivative(t_sigma, 2).unwrap(),
        }
    })
}

// Rounds up in the 12th significant digit so the recorded value stays an
// upper estimate of the grid maximum.
fn round12(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(11 - v.abs().log10().floor() as i32);
    (v * scale).ceil() / scale
}

/// Tail condition of an admissible squasher: `|σ(y) - 1| ≤ 1/y` for `y > 0`
/// and `|σ(y)| ≤ 1/|y|` for `y < 0`. Vacuous at `y = 0`.
pub fn tail_condition_holds<T: Scalar>(y: T) -> bool {
    if y > T::zero() {
        (sigma(y) - T::one()).abs() <= y.recip()
    } else if y < T::zero() {
        sigma(y).abs() <= y.abs().recip()
    } else {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_reference_values() {
        assert_eq!(sigma(0.0f64), 0.5);
        // 1/(1+e^-1) to 16 digits.
        assert!((sigma(1.0f64) - 0.731_058_578_630_004_9).abs() < 1e-15);
        for &x in &[0.3, 2.0, 17.5, 40.0, 700.0, 1e4] {
            assert!((sigma(x) + sigma(-x) - 1.0f64).abs() < 1e-15);
        }
        assert!(sigma(-1e4f64) >= 0.0 && sigma(1e4f64) <= 1.0);
    }

    #[test]
    fn derivative_closed_forms() {
        assert_eq!(sigma_derivative(0.0f64, 1).unwrap(), 0.25);
        assert_eq!(sigma_derivative(0.0f64, 2).unwrap(), 0.0);
        let e1 = (-1.0f64).exp();
        let e2 = (-2.0f64).exp();
        let expected = (e2 - e1) / (1.0 + e1).powi(3);
        let got = sigma_derivative(1.0f64, 2).unwrap();
        assert!(got < 0.0);
        assert!((got - expected).abs() < 1e-16);
        assert!(sigma_derivative(0.0f64, 4).is_err());
        assert!(sigma_derivative(0.0f64, 0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        let mut x = -10.0f64;
        while x <= 10.0 {
            let fd1 = (sigma(x + h) - sigma(x - h)) / (2.0 * h);
            assert!((fd1 - sigma_derivative(x, 1).unwrap()).abs() < 1e-6);
            for k in 2..=3u32 {
                let lo = sigma_derivative(x - h, k - 1).unwrap();
                let hi = sigma_derivative(x + h, k - 1).unwrap();
                let fd = (hi - lo) / (2.0 * h);
                assert!((fd - sigma_derivative(x, k).unwrap()).abs() < 1e-5);
            }
            x += 0.01;
        }
    }

    #[test]
    fn profile_constants() {
        let p: ActivationProfile<f64> = admissibility_constants();
        assert_eq!(p.t_sigma_id, 0.0);
        assert_eq!(p.t_sigma, 1.0);
        assert_eq!(p.d1_at_id, 0.25);
        assert!(p.d1_at_id != 0.0 && p.d2_at_sq != 0.0);
        // max |σ''| = 1/(6√3); max |σ'''| = 1/8 at the origin.
        assert!((p.sup_d2 - 1.0 / (6.0 * 3f64.sqrt())).abs() < 1e-7);
        assert!((p.sup_d3 - 0.125).abs() < 1e-11);
        let mut x = -20.0f64;
        while x <= 20.0 {
            assert!(sigma_derivative(x, 2).unwrap().abs() <= p.sup_d2);
            assert!(sigma_derivative(x, 3).unwrap().abs() <= p.sup_d3);
            x += 0.0007;
        }
    }

    #[test]
    fn tail_condition() {
        assert!((sigma(5.0f64) - 1.0).abs() <= 0.2);
        assert!(tail_condition_holds(5.0f64));
        let mut y = 1.0f64;
        while y <= 60.0 {
            assert!(tail_condition_holds(y));
            assert!(tail_condition_holds(-y));
            y += 0.01;
        }
    }

    #[test]
    fn sigma_is_monotone_on_grid() {
        let mut prev = sigma(-40.0f64);
        let mut x = -40.0f64;
        while x <= 40.0 {
            let v = sigma(x);
            assert!(v >= prev);
            assert!((0.0..=1.0).contains(&v));
            prev = v;
            x += 0.003;
        }
    }

    #[test]
    fn f32_profile_converts() {
        let p: ActivationProfile<f32> = ActivationProfile::logistic();
        assert_eq!(p.d1_at_id, 0.25f32);
        assert!(p.relu_ratio() > 10.0);
    }
}

//! Conservative acceleration boxes from the thrust feasibility interval.
//!
//! The thrust set `f_min ≤ ‖ẍ − g‖ ≤ f_max` is non-convex (the lower bound
//! carves a ball out of the middle). It is replaced by a per-axis box:
//!
//! ```text
//! −h ≤ ẍ1 ≤ h,   −h ≤ ẍ2 ≤ h,   f_min − g ≤ ẍ3 ≤ v − g
//! ```
//!
//! where `v = vertical_fraction · f_max` and `2h² + v² = f_max²`.
//!
//! Upper bound: `‖ẍ − g‖² = ẍ1² + ẍ2² + (ẍ3 + g)² ≤ 2h² + v² = f_max²`, since
//! `0 < f_min ≤ ẍ3 + g ≤ v` on the box.
//!
//! Lower bound: `‖ẍ − g‖ ≥ |ẍ3 + g| ≥ f_min` whenever `ẍ3 ≥ f_min − g`; the
//! horizontal components can only increase the norm, so only the vertical
//! axis needs the `f_min` constraint.

use crate::dynamics::{thrust_magnitude, GravityModel, Vec3};
use crate::{Error, Result};

/// Slack tolerated on `vertical_fraction · f_max` versus `g` before the
/// vehicle is declared unable to hover.
const HOVER_EPS: f64 = 1e-12;

/// Mass-normalized thrust interval `0 < f_min ≤ f ≤ f_max` in m/s².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustLimits {
    f_min: f64,
    f_max: f64,
}

impl ThrustLimits {
    pub fn new(f_min: f64, f_max: f64) -> Result<Self> {
        if !f_min.is_finite() || !f_max.is_finite() {
            return Err(Error::NonFinite("thrust limits"));
        }
        if f_min <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "f_min",
                reason: format!("minimum thrust must be strictly positive, got {f_min}"),
            });
        }
        if f_min > f_max {
            return Err(Error::InvalidParameter {
                name: "f_max",
                reason: format!("f_max = {f_max} is below f_min = {f_min}"),
            });
        }
        Ok(Self { f_min, f_max })
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }
}

/// Per-axis acceleration box (m/s²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityBounds {
    pub acc_min: Vec3,
    pub acc_max: Vec3,
}

impl FeasibilityBounds {
    pub fn contains(&self, acc: &Vec3) -> bool {
        (0..3).all(|i| self.acc_min[i] <= acc[i] && acc[i] <= self.acc_max[i])
    }

    /// Whether the box admits a net downward acceleration (`f_min < g`).
    pub fn allows_descent(&self) -> bool {
        self.acc_min.z < 0.0
    }

    /// Left-hand side of the thrust guarantee `h1² + h2² + (h3 + g)²`;
    /// never exceeds `f_max²` for bounds produced by [`derive_bounds`].
    pub fn guarantee_lhs(&self, gravity: &GravityModel) -> f64 {
        let a = self.acc_max;
        a.x * a.x + a.y * a.y + (a.z + gravity.g()).powi(2)
    }

    /// The thrust condition read without the gravity offset,
    /// `Σ acc_max_i² ≤ f_max²`. Diagnostic only: it is neither necessary nor
    /// sufficient for thrust feasibility.
    pub fn literal_guarantee_holds(&self, limits: &ThrustLimits) -> bool {
        self.acc_max.norm_squared() <= limits.f_max * limits.f_max
    }
}

/// Allocates the thrust envelope to per-axis acceleration boxes.
///
/// The vertical axis receives `acc_max.z + g = vertical_fraction · f_max`;
/// the two horizontal axes split what remains of `f_max²` equally.
pub fn derive_bounds(
    limits: &ThrustLimits,
    gravity: &GravityModel,
    vertical_fraction: f64,
) -> Result<FeasibilityBounds> {
    if !vertical_fraction.is_finite() {
        return Err(Error::NonFinite("vertical_fraction"));
    }
    if vertical_fraction <= 0.0 || vertical_fraction > 1.0 {
        return Err(Error::InvalidParameter {
            name: "vertical_fraction",
            reason: format!("must lie in (0, 1], got {vertical_fraction}"),
        });
    }
    let g = gravity.g();
    let vertical = vertical_fraction * limits.f_max;
    if vertical <= g - HOVER_EPS * g {
        return Err(Error::InsufficientVerticalAuthority {
            available: vertical,
            gravity: g,
        });
    }
    if vertical < limits.f_min {
        return Err(Error::InvalidParameter {
            name: "vertical_fraction",
            reason: format!(
                "vertical thrust share {vertical} is below f_min = {}",
                limits.f_min
            ),
        });
    }
    let f_max2 = limits.f_max * limits.f_max;
    let horizontal = ((f_max2 - vertical * vertical).max(0.0) / 2.0).sqrt();
    Ok(FeasibilityBounds {
        acc_min: Vec3::new(-horizontal, -horizontal, limits.f_min - g),
        acc_max: Vec3::new(horizontal, horizontal, vertical - g),
    })
}

/// Outcome of a thrust feasibility check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustCheck {
    pub feasible: bool,
    pub thrust: f64,
    /// `f − f_min`; negative when the lower limit is violated.
    pub margin_low: f64,
    /// `f_max − f`; negative when the upper limit is violated.
    pub margin_high: f64,
}

pub fn check_thrust_feasible(
    acc: &Vec3,
    limits: &ThrustLimits,
    gravity: &GravityModel,
) -> ThrustCheck {
    let thrust = thrust_magnitude(acc, gravity);
    let margin_low = thrust - limits.f_min;
    let margin_high = limits.f_max - thrust;
    ThrustCheck {
        feasible: margin_low >= 0.0 && margin_high >= 0.0,
        thrust,
        margin_low,
        margin_high,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn limits(f_min: f64, f_max: f64) -> ThrustLimits {
        ThrustLimits::new(f_min, f_max).unwrap()
    }

    #[test]
    fn limits_validation() {
        assert!(ThrustLimits::new(0.0, 10.0).is_err());
        assert!(ThrustLimits::new(5.0, 4.0).is_err());
        assert!(ThrustLimits::new(1.0, f64::INFINITY).is_err());
        assert!(ThrustLimits::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn equal_share_example() {
        let g = GravityModel::new(9.81).unwrap();
        // equal share of f_max² on all three axes: v = f_max/√3
        let fraction = 1.0 / 3f64.sqrt();
        let b = derive_bounds(&limits(1.0, 20.0), &g, fraction).unwrap();
        // acc_max.z + g = 20/√3, horizontal share (400 − 400/3)/2 = 400/3
        let side = 20.0 / 3f64.sqrt();
        assert_relative_eq!(b.acc_max.x, side, epsilon = 1e-12);
        assert_relative_eq!(b.acc_max.y, side, epsilon = 1e-12);
        assert_relative_eq!(b.acc_max.z, side - 9.81, epsilon = 1e-12);
        assert_relative_eq!(b.acc_max.x, 11.547, epsilon = 1e-3);
        assert_relative_eq!(b.acc_max.z, 1.737, epsilon = 1e-3);
        assert_relative_eq!(b.acc_min.x, -b.acc_max.x);
        assert_relative_eq!(b.acc_min.y, -b.acc_max.y);
        assert_relative_eq!(b.acc_min.z, -8.81, epsilon = 1e-12);
        assert_relative_eq!(b.guarantee_lhs(&g), 400.0, max_relative = 1e-9);
    }

    #[test]
    fn all_thrust_spent_hovering() {
        let g = GravityModel::new(9.81).unwrap();
        let b = derive_bounds(&limits(1.0, 9.81), &g, 1.0).unwrap();
        assert_eq!(b.acc_max, Vec3::zeros());
        assert_relative_eq!(b.acc_min.z, -8.81, epsilon = 1e-12);
    }

    #[test]
    fn vertical_lower_bound_is_f_min_minus_g() {
        let g = GravityModel::new(9.81).unwrap();
        for (f_max, frac) in [(20.0, 0.6), (30.0, 0.9), (15.0, 0.7)] {
            let b = derive_bounds(&limits(1.0, f_max), &g, frac).unwrap();
            assert_relative_eq!(b.acc_min.z, -8.81, epsilon = 1e-12);
            assert!(b.allows_descent());
        }
    }

    #[test]
    fn rejects_insufficient_vertical_authority() {
        let g = GravityModel::new(9.81).unwrap();
        let err = derive_bounds(&limits(1.0, 20.0), &g, 0.4).unwrap_err();
        assert!(matches!(err, Error::InsufficientVerticalAuthority { .. }));
        assert!(derive_bounds(&limits(1.0, 20.0), &g, 0.0).is_err());
        assert!(derive_bounds(&limits(1.0, 20.0), &g, 1.5).is_err());
        assert!(derive_bounds(&limits(1.0, 20.0), &g, f64::NAN).is_err());
    }

    #[test]
    fn strong_minimum_thrust_blocks_descent() {
        let g = GravityModel::new(9.81).unwrap();
        let b = derive_bounds(&limits(10.0, 20.0), &g, 0.9).unwrap();
        assert!(!b.allows_descent());
    }

    #[test]
    fn literal_condition_is_weaker_than_gravity_corrected() {
        let g = GravityModel::new(9.81).unwrap();
        let l = limits(1.0, 20.0);
        let b = derive_bounds(&l, &g, 0.9).unwrap();
        // Σ acc_max² drops the +g offset, so the literal test passes while
        // the corrected one is tight.
        assert!(b.literal_guarantee_holds(&l));
        let loose = FeasibilityBounds {
            acc_min: b.acc_min,
            acc_max: Vec3::new(b.acc_max.x, b.acc_max.y, b.acc_max.z + 5.0),
        };
        assert!(loose.literal_guarantee_holds(&l));
        assert!(loose.guarantee_lhs(&g) > 400.0);
    }

    #[test]
    fn check_examples() {
        let g = GravityModel::new(9.81).unwrap();
        let l = limits(1.0, 20.0);
        let hover = check_thrust_feasible(&Vec3::zeros(), &l, &g);
        assert!(hover.feasible);
        assert_eq!(hover.thrust, 9.81);
        assert_relative_eq!(hover.margin_low, 8.81);
        assert_relative_eq!(hover.margin_high, 10.19);
        let fall = check_thrust_feasible(&Vec3::new(0.0, 0.0, -9.81), &l, &g);
        assert!(!fall.feasible);
        assert!(fall.margin_low < 0.0);
    }

    #[test]
    fn box_soundness_random_samples() {
        let g = GravityModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let configs = [(1.0, 20.0, 0.85), (2.0, 25.0, 0.5), (0.5, 12.0, 0.95), (5.0, 40.0, 0.3)];
        for (f_min, f_max, frac) in configs {
            let l = limits(f_min, f_max);
            let b = derive_bounds(&l, &g, frac).unwrap();
            assert_relative_eq!(b.guarantee_lhs(&g), f_max * f_max, max_relative = 1e-9);
            for _ in 0..100_000 {
                let acc = Vec3::from_fn(|i, _| rng.gen_range(b.acc_min[i]..=b.acc_max[i]));
                let check = check_thrust_feasible(&acc, &l, &g);
                assert!(check.feasible, "acc {acc:?} gives f = {}", check.thrust);
            }
            // vertical extremes with zero horizontal acceleration
            for z in [b.acc_min.z, b.acc_max.z] {
                let f = thrust_magnitude(&Vec3::new(0.0, 0.0, z), &g);
                assert!(f >= f_min - 1e-12);
            }
        }
    }
}

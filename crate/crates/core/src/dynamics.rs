//! Translational vehicle model.
//!
//! Each inertial axis is a triple integrator driven by jerk. Attitude is not
//! simulated: the decoupled controller only ever consumes the translational
//! state, and the thrust input is recovered from the commanded acceleration
//! as `f = ‖ẍ − g‖` with `g = (0, 0, −g)`.

use nalgebra::Vector3;

use crate::{Error, Result};

/// Three-vector in SI units (m, m/s, m/s², m/s³ depending on context).
pub type Vec3 = Vector3<f64>;

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Position, velocity and acceleration of one decoupled axis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisState {
    pub pos: f64,
    pub vel: f64,
    pub acc: f64,
}

impl AxisState {
    pub const REST: AxisState = AxisState {
        pos: 0.0,
        vel: 0.0,
        acc: 0.0,
    };

    pub fn new(pos: f64, vel: f64, acc: f64) -> Self {
        Self { pos, vel, acc }
    }

    pub fn at_rest(pos: f64) -> Self {
        Self::new(pos, 0.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.vel.is_finite() && self.acc.is_finite()
    }
}

/// Full translational state: one [`AxisState`] per inertial axis plus time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub axes: [AxisState; 3],
    pub time: f64,
}

impl VehicleState {
    pub fn at_rest(position: Vec3) -> Self {
        Self {
            axes: [
                AxisState::at_rest(position.x),
                AxisState::at_rest(position.y),
                AxisState::at_rest(position.z),
            ],
            time: 0.0,
        }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.axes[0].pos, self.axes[1].pos, self.axes[2].pos)
    }

    pub fn velocity(&self) -> Vec3 {
        Vec3::new(self.axes[0].vel, self.axes[1].vel, self.axes[2].vel)
    }

    pub fn acceleration(&self) -> Vec3 {
        Vec3::new(self.axes[0].acc, self.axes[1].acc, self.axes[2].acc)
    }

    pub fn is_finite(&self) -> bool {
        self.time.is_finite() && self.axes.iter().all(AxisState::is_finite)
    }
}

/// Uniform gravity field pointing along −x3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityModel {
    g: f64,
}

impl GravityModel {
    pub fn new(g: f64) -> Result<Self> {
        if !g.is_finite() || g <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "g",
                reason: format!("gravity must be positive and finite, got {g}"),
            });
        }
        Ok(Self { g })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// The gravity vector `(0, 0, −g)`.
    pub fn vector(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, -self.g)
    }
}

impl Default for GravityModel {
    fn default() -> Self {
        Self {
            g: STANDARD_GRAVITY,
        }
    }
}

/// Mass-normalized thrust needed to realize `acc`: `‖acc − g_vec‖₂`.
pub fn thrust_magnitude(acc: &Vec3, gravity: &GravityModel) -> f64 {
    (acc - gravity.vector()).norm()
}

/// Exact flow of the triple integrator under constant `jerk` over `dt`.
pub fn integrate_axis(state: AxisState, jerk: f64, dt: f64) -> Result<AxisState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidTimeStep(dt));
    }
    if !state.is_finite() || !jerk.is_finite() {
        return Err(Error::NonFinite("integrate_axis input"));
    }
    Ok(flow(state, jerk, dt))
}

pub(crate) fn flow(s: AxisState, jerk: f64, dt: f64) -> AxisState {
    let dt2 = dt * dt;
    let dt3 = dt2 * dt;
    AxisState {
        pos: s.pos + s.vel * dt + s.acc * dt2 / 2.0 + jerk * dt3 / 6.0,
        vel: s.vel + s.acc * dt + jerk * dt2 / 2.0,
        acc: s.acc + jerk * dt,
    }
}

/// Applies `jerk` to every axis for `dt`, plus an optional additive
/// acceleration disturbance held constant over the interval. The disturbance
/// perturbs position and velocity but not the acceleration state, which
/// remains the commanded one.
pub fn integrate_vehicle(
    state: &VehicleState,
    jerk: &Vec3,
    disturbance: &Vec3,
    dt: f64,
) -> Result<VehicleState> {
    let mut next = *state;
    for (i, axis) in next.axes.iter_mut().enumerate() {
        let mut s = integrate_axis(*axis, jerk[i], dt)?;
        s.pos += disturbance[i] * dt * dt / 2.0;
        s.vel += disturbance[i] * dt;
        *axis = s;
    }
    next.time = state.time + dt;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    /// Classic RK4 on the linear system (p, v, a)' = (v, a, j).
    fn rk4_oracle(s: AxisState, jerk: f64, dt: f64, substeps: usize) -> AxisState {
        let h = dt / substeps as f64;
        let f = |y: [f64; 3]| [y[1], y[2], jerk];
        let mut y = [s.pos, s.vel, s.acc];
        for _ in 0..substeps {
            let add = |a: [f64; 3], b: [f64; 3], k: f64| {
                [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]]
            };
            let k1 = f(y);
            let k2 = f(add(y, k1, h / 2.0));
            let k3 = f(add(y, k2, h / 2.0));
            let k4 = f(add(y, k3, h));
            for i in 0..3 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        AxisState::new(y[0], y[1], y[2])
    }

    #[test]
    fn hover_thrust_equals_gravity() {
        let g = GravityModel::new(9.81).unwrap();
        assert_eq!(thrust_magnitude(&Vec3::zeros(), &g), 9.81);
        assert_eq!(thrust_magnitude(&Vec3::new(0.0, 0.0, -9.81), &g), 0.0);
        let f = thrust_magnitude(&Vec3::new(3.0, 4.0, 0.0), &g);
        assert_relative_eq!(f, (9.0f64 + 16.0 + 96.2361).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(f, 11.0108, epsilon = 1e-4);
    }

    #[test]
    fn gravity_must_be_positive() {
        assert!(GravityModel::new(0.0).is_err());
        assert!(GravityModel::new(-9.81).is_err());
        assert!(GravityModel::new(f64::NAN).is_err());
    }

    #[test]
    fn integrate_examples() {
        let rest = integrate_axis(AxisState::REST, 0.0, 0.08).unwrap();
        assert_eq!(rest, AxisState::REST);

        let s = integrate_axis(AxisState::REST, 6.0, 1.0).unwrap();
        assert_eq!(s, AxisState::new(1.0, 3.0, 6.0));

        let start = AxisState::new(1.0, 2.0, 3.0);
        let s = integrate_axis(start, 0.5, 0.08).unwrap();
        let oracle = rk4_oracle(start, 0.5, 0.08, 1000);
        assert_relative_eq!(s.pos, oracle.pos, max_relative = 1e-12);
        assert_relative_eq!(s.vel, oracle.vel, max_relative = 1e-12);
        assert_relative_eq!(s.acc, oracle.acc, max_relative = 1e-12);
        assert_relative_eq!(s.pos, 1.1696427, epsilon = 1e-7);
        assert_relative_eq!(s.vel, 2.2416, epsilon = 1e-12);
        assert_relative_eq!(s.acc, 3.04, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_step() {
        assert_eq!(
            integrate_axis(AxisState::REST, 1.0, 0.0),
            Err(Error::InvalidTimeStep(0.0))
        );
        assert!(integrate_axis(AxisState::REST, 1.0, -0.1).is_err());
        assert!(integrate_axis(AxisState::REST, f64::NAN, 0.1).is_err());
    }

    #[test]
    fn disturbance_shifts_position_and_velocity_only() {
        let s = VehicleState::at_rest(Vec3::new(1.0, 2.0, 3.0));
        let next = integrate_vehicle(&s, &Vec3::zeros(), &Vec3::new(0.0, 0.0, 2.0), 0.5).unwrap();
        assert_relative_eq!(next.axes[2].pos, 3.25);
        assert_relative_eq!(next.axes[2].vel, 1.0);
        assert_eq!(next.axes[2].acc, 0.0);
        assert_eq!(next.time, 0.5);
    }

    proptest! {
        #[test]
        fn thrust_is_rotation_invariant(
            ax in -20.0..20.0f64, ay in -20.0..20.0f64, az in -20.0..20.0f64,
            rx in -3.2..3.2f64, ry in -3.2..3.2f64, rz in -3.2..3.2f64,
        ) {
            let g = GravityModel::default();
            let acc = Vec3::new(ax, ay, az);
            let rot = Rotation3::from_euler_angles(rx, ry, rz);
            // rotate (acc - g_vec) then map back to an acceleration
            let rotated = rot * (acc - g.vector()) + g.vector();
            let f0 = thrust_magnitude(&acc, &g);
            let f1 = thrust_magnitude(&rotated, &g);
            prop_assert!((f0 - f1).abs() <= 1e-12 * f0.max(1.0));
        }

        #[test]
        fn half_steps_compose(
            p in -100.0..100.0f64, v in -10.0..10.0f64, a in -10.0..10.0f64,
            j in -100.0..100.0f64, dt in 0.001..2.0f64,
        ) {
            let s = AxisState::new(p, v, a);
            let once = integrate_axis(s, j, dt).unwrap();
            let half = integrate_axis(s, j, dt / 2.0).unwrap();
            let twice = integrate_axis(half, j, dt / 2.0).unwrap();
            let scale = |x: f64| 1e-12 * (1.0 + x.abs() + p.abs() + v.abs() * dt + a.abs() * dt * dt + j.abs() * dt.powi(3));
            prop_assert!((once.pos - twice.pos).abs() <= scale(once.pos));
            prop_assert!((once.vel - twice.vel).abs() <= scale(once.vel));
            prop_assert!((once.acc - twice.acc).abs() <= scale(once.acc));
        }

        #[test]
        fn rest_is_identity_on_position(p in -1e6..1e6f64, dt in 1e-4..10.0f64) {
            let s = integrate_axis(AxisState::at_rest(p), 0.0, dt).unwrap();
            prop_assert_eq!(s.pos, p);
        }
    }
}

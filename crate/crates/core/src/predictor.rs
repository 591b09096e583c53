//! Condensed prediction over the horizon.
//!
//! With jerk held constant over each interval, the state at step `k`
//! (1-indexed) is affine in the initial state and the jerk sequence. A jerk
//! applied on interval `i ≤ k` has been propagated for `m = k − i` further
//! intervals, contributing
//!
//! ```text
//! pos: dt³ (1/6 + m/2 + m²/2)
//! vel: dt² (1/2 + m)
//! acc: dt
//! ```
//!
//! so every jerk-response matrix is lower-triangular Toeplitz.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::dynamics::AxisState;
use crate::{Error, Result};

pub const DEFAULT_STEPS: usize = 5;
pub const DEFAULT_DT: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonConfig {
    steps: usize,
    dt: f64,
}

impl HorizonConfig {
    pub fn new(steps: usize, dt: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter {
                name: "steps",
                reason: "horizon needs at least one step".into(),
            });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidTimeStep(dt));
        }
        Ok(Self { steps, dt })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

impl Default for HorizonConfig {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            dt: DEFAULT_DT,
        }
    }
}

/// Jerk inputs over the horizon, one per interval (m/s³).
#[derive(Debug, Clone, PartialEq)]
pub struct JerkSequence(pub Vec<f64>);

impl JerkSequence {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0.first().copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Predicted position, velocity and acceleration at steps `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub pos: Vec<f64>,
    pub vel: Vec<f64>,
    pub acc: Vec<f64>,
}

impl Prediction {
    pub fn state(&self, k: usize) -> AxisState {
        AxisState::new(self.pos[k], self.vel[k], self.acc[k])
    }
}

/// Dense prediction matrices for one [`HorizonConfig`].
///
/// Row `k` (0-based here) corresponds to time `(k + 1)·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrices {
    pub config: HorizonConfig,
    pub pos_from_jerk: DMatrix<f64>,
    pub vel_from_jerk: DMatrix<f64>,
    pub acc_from_jerk: DMatrix<f64>,
    /// Columns: initial pos, vel, acc.
    pub pos_from_state: DMatrix<f64>,
    pub vel_from_state: DMatrix<f64>,
    pub acc_from_state: DMatrix<f64>,
}

pub fn build_matrices(cfg: &HorizonConfig) -> PredictionMatrices {
    let n = cfg.steps;
    let dt = cfg.dt;
    let (dt2, dt3) = (dt * dt, dt * dt * dt);

    let toeplitz = |coeff: &dyn Fn(f64) -> f64| {
        DMatrix::from_fn(n, n, |k, i| {
            if k >= i {
                coeff((k - i) as f64)
            } else {
                0.0
            }
        })
    };
    let pos_from_jerk = toeplitz(&|m| dt3 * (1.0 / 6.0 + m / 2.0 + m * m / 2.0));
    let vel_from_jerk = toeplitz(&|m| dt2 * (0.5 + m));
    let acc_from_jerk = toeplitz(&|_| dt);

    let mut pos_from_state = DMatrix::zeros(n, 3);
    let mut vel_from_state = DMatrix::zeros(n, 3);
    let mut acc_from_state = DMatrix::zeros(n, 3);
    for k in 0..n {
        let t = (k + 1) as f64 * dt;
        pos_from_state[(k, 0)] = 1.0;
        pos_from_state[(k, 1)] = t;
        pos_from_state[(k, 2)] = t * t / 2.0;
        vel_from_state[(k, 1)] = 1.0;
        vel_from_state[(k, 2)] = t;
        acc_from_state[(k, 2)] = 1.0;
    }

    PredictionMatrices {
        config: *cfg,
        pos_from_jerk,
        vel_from_jerk,
        acc_from_jerk,
        pos_from_state,
        vel_from_state,
        acc_from_state,
    }
}

impl PredictionMatrices {
    pub fn new(cfg: &HorizonConfig) -> Self {
        build_matrices(cfg)
    }

    pub fn steps(&self) -> usize {
        self.config.steps
    }

    /// State-only (zero jerk) contribution to position, velocity, acceleration.
    pub fn free_response(&self, initial: &AxisState) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let z = DVector::from_column_slice(&[initial.pos, initial.vel, initial.acc]);
        (
            &self.pos_from_state * &z,
            &self.vel_from_state * &z,
            &self.acc_from_state * &z,
        )
    }

    pub fn predict(&self, initial: &AxisState, jerks: &JerkSequence) -> Result<Prediction> {
        let n = self.steps();
        if jerks.len() != n {
            return Err(Error::DimensionMismatch {
                context: "jerk sequence",
                expected: n,
                got: jerks.len(),
            });
        }
        let u = DVector::from_column_slice(jerks.as_slice());
        let (p0, v0, a0) = self.free_response(initial);
        let pos = &self.pos_from_jerk * &u + p0;
        let vel = &self.vel_from_jerk * &u + v0;
        let acc = &self.acc_from_jerk * &u + a0;
        Ok(Prediction {
            pos: pos.as_slice().to_vec(),
            vel: vel.as_slice().to_vec(),
            acc: acc.as_slice().to_vec(),
        })
    }

    /// State-term offset of step `k` as (pos, vel, acc).
    pub fn step_offset(&self, k: usize, initial: &AxisState) -> Vector3<f64> {
        let z = Vector3::new(initial.pos, initial.vel, initial.acc);
        Vector3::new(
            self.pos_from_state.row(k).transpose().dot(&z),
            self.vel_from_state.row(k).transpose().dot(&z),
            self.acc_from_state.row(k).transpose().dot(&z),
        )
    }
}

pub fn predict(cfg: &HorizonConfig, initial: &AxisState, jerks: &JerkSequence) -> Result<Prediction> {
    build_matrices(cfg).predict(initial, jerks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::integrate_axis;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Impulse response of a unit jerk on interval `i`, observed at the end of
    /// interval `k`, by composite Simpson quadrature of the triple-integrator
    /// kernels `(t − τ)²/2`, `(t − τ)`, `1`.
    fn quadrature_response(dt: f64, k: usize, i: usize) -> AxisState {
        if i > k {
            return AxisState::REST;
        }
        let t = (k + 1) as f64 * dt;
        let (lo, hi) = (i as f64 * dt, (i + 1) as f64 * dt);
        let panels = 64;
        let h = (hi - lo) / panels as f64;
        let simpson = |f: &dyn Fn(f64) -> f64| {
            let mut acc = f(lo) + f(hi);
            for p in 1..panels {
                let w = if p % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(lo + p as f64 * h);
            }
            acc * h / 3.0
        };
        AxisState::new(
            simpson(&|tau| (t - tau).powi(2) / 2.0),
            simpson(&|tau| t - tau),
            simpson(&|_| 1.0),
        )
    }

    fn fold(initial: AxisState, jerks: &[f64], dt: f64) -> Vec<AxisState> {
        let mut s = initial;
        jerks
            .iter()
            .map(|&j| {
                s = integrate_axis(s, j, dt).unwrap();
                s
            })
            .collect()
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn entries_match_quadrature_oracle() {
        let cfg = HorizonConfig::new(5, 0.08).unwrap();
        let m = build_matrices(&cfg);
        assert_relative_eq!(m.pos_from_jerk[(0, 0)], 0.08f64.powi(3) / 6.0, max_relative = 1e-12);
        assert_relative_eq!(m.pos_from_jerk[(0, 0)], 8.5333e-5, max_relative = 1e-4);
        assert_relative_eq!(m.pos_from_jerk[(1, 0)], 7.0 * 0.08f64.powi(3) / 6.0, max_relative = 1e-12);
        assert_relative_eq!(m.pos_from_jerk[(1, 0)], 5.9733e-4, max_relative = 1e-4);
        for i in 0..5 {
            for k in 0..5 {
                let want = quadrature_response(0.08, k, i);
                assert_relative_eq!(m.pos_from_jerk[(k, i)], want.pos, max_relative = 1e-9, epsilon = 1e-15);
                assert_relative_eq!(m.vel_from_jerk[(k, i)], want.vel, max_relative = 1e-9, epsilon = 1e-15);
                assert_relative_eq!(m.acc_from_jerk[(k, i)], want.acc, max_relative = 1e-9, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn unit_step_from_rest() {
        let cfg = HorizonConfig::new(1, 1.0).unwrap();
        let p = predict(&cfg, &AxisState::REST, &JerkSequence(vec![1.0])).unwrap();
        assert_relative_eq!(p.pos[0], 1.0 / 6.0);
        assert_relative_eq!(p.vel[0], 0.5);
        assert_relative_eq!(p.acc[0], 1.0);
    }

    #[test]
    fn zero_jerk_from_rest_holds_position() {
        let cfg = HorizonConfig::default();
        let p = predict(&cfg, &AxisState::at_rest(3.5), &JerkSequence::zeros(5)).unwrap();
        assert!(p.pos.iter().all(|&x| x == 3.5));
    }

    #[test]
    fn impulse_at_start_matches_fold() {
        let cfg = HorizonConfig::new(5, 1.0).unwrap();
        let jerks = [6.0, 0.0, 0.0, 0.0, 0.0];
        let p = predict(&cfg, &AxisState::REST, &JerkSequence(jerks.to_vec())).unwrap();
        let f = fold(AxisState::REST, &jerks, 1.0);
        for (k, s) in f.iter().enumerate() {
            assert_relative_eq!(p.pos[k], s.pos, max_relative = 1e-12);
        }
        // 6 · (1/6 + m/2 + m²/2)
        for (got, want) in p.pos.iter().zip([1.0, 7.0, 19.0, 37.0, 61.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-14);
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let cfg = HorizonConfig::default();
        let err = predict(&cfg, &AxisState::REST, &JerkSequence::zeros(4)).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                context: "jerk sequence",
                expected: 5,
                got: 4
            }
        );
    }

    #[test]
    fn config_validation() {
        assert!(HorizonConfig::new(0, 0.08).is_err());
        assert!(HorizonConfig::new(5, 0.0).is_err());
        assert!(HorizonConfig::new(5, f64::NAN).is_err());
        let d = HorizonConfig::default();
        assert_eq!((d.steps(), d.dt()), (5, 0.08));
    }

    #[test]
    fn jerk_responses_are_toeplitz() {
        let m = build_matrices(&HorizonConfig::new(12, 0.3).unwrap());
        for mat in [&m.pos_from_jerk, &m.vel_from_jerk, &m.acc_from_jerk] {
            for k in 1..12 {
                for i in 1..12 {
                    assert_eq!(mat[(k, i)], mat[(k - 1, i - 1)]);
                }
            }
            for k in 0..12 {
                for i in (k + 1)..12 {
                    assert_eq!(mat[(k, i)], 0.0);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn matrices_match_sequential_integration(
            n in 1usize..=20,
            p0 in -50.0..50.0f64, v0 in -10.0..10.0f64, a0 in -10.0..10.0f64,
            seed in proptest::collection::vec(-200.0..200.0f64, 20),
        ) {
            let cfg = HorizonConfig::new(n, 0.08).unwrap();
            let initial = AxisState::new(p0, v0, a0);
            let jerks = &seed[..n];
            let p = predict(&cfg, &initial, &JerkSequence(jerks.to_vec())).unwrap();
            let f = fold(initial, jerks, 0.08);
            for (k, s) in f.iter().enumerate() {
                prop_assert!(rel_close(p.pos[k], s.pos, 1e-12), "pos {} vs {}", p.pos[k], s.pos);
                prop_assert!(rel_close(p.vel[k], s.vel, 1e-12));
                prop_assert!(rel_close(p.acc[k], s.acc, 1e-12));
            }
        }

        #[test]
        fn superposition_from_rest(
            alpha in -3.0..3.0f64, beta in -3.0..3.0f64,
            u in proptest::collection::vec(-50.0..50.0f64, 5),
            v in proptest::collection::vec(-50.0..50.0f64, 5),
        ) {
            let cfg = HorizonConfig::default();
            let m = build_matrices(&cfg);
            let combo: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + beta * b).collect();
            let pu = m.predict(&AxisState::REST, &JerkSequence(u.clone())).unwrap();
            let pv = m.predict(&AxisState::REST, &JerkSequence(v.clone())).unwrap();
            let pc = m.predict(&AxisState::REST, &JerkSequence(combo)).unwrap();
            for k in 0..5 {
                let want = alpha * pu.pos[k] + beta * pv.pos[k];
                prop_assert!((pc.pos[k] - want).abs() <= 1e-12 * (1.0 + want.abs()));
                let want = alpha * pu.acc[k] + beta * pv.acc[k];
                prop_assert!((pc.acc[k] - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }
    }
}

//! Interior-point solver against an exhaustive active-set oracle on random
//! box-constrained, strictly convex QPs.

use nalgebra::{DMatrix, DVector};
use quadmpc::qpsolver::{solve, QpStatus, QuadraticProgram, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct BoxQp {
    h: DMatrix<f64>,
    c: DVector<f64>,
    lo: DVector<f64>,
    hi: DVector<f64>,
}

impl BoxQp {
    fn random(rng: &mut ChaCha8Rng, n: usize) -> Self {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let h = m.transpose() * &m + DMatrix::identity(n, n) * rng.gen_range(0.05..1.0);
        let c = DVector::from_fn(n, |_, _| rng.gen_range(-5.0..5.0));
        let lo = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..0.0));
        let hi = DVector::from_fn(n, |i, _| lo[i] + rng.gen_range(0.1..3.0));
        Self { h, c, lo, hi }
    }

    fn objective(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.h * u)) + self.c.dot(u)
    }

    fn as_qp(&self) -> QuadraticProgram {
        let n = self.c.len();
        let mut a = DMatrix::zeros(2 * n, n);
        let mut b = DVector::zeros(2 * n);
        for i in 0..n {
            a[(2 * i, i)] = 1.0;
            b[2 * i] = self.hi[i];
            a[(2 * i + 1, i)] = -1.0;
            b[2 * i + 1] = -self.lo[i];
        }
        QuadraticProgram::new(self.h.clone(), self.c.clone()).with_inequalities(a, b)
    }
}

/// Enumerates all 3ⁿ faces of the box (each coordinate free, at its lower
/// bound, or at its upper bound), minimises the quadratic on each face's
/// affine hull, and keeps the best candidate that lies inside the box. The
/// global minimiser of a strictly convex function over a box is the
/// minimiser on the hull of the face containing it in its relative interior,
/// so the best feasible candidate is the optimum.
fn exhaustive_minimum(p: &BoxQp) -> (DVector<f64>, f64) {
    let n = p.c.len();
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut pattern = vec![0u8; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| pattern[i] == 0).collect();
        let mut u = DVector::from_fn(n, |i, _| match pattern[i] {
            1 => p.lo[i],
            2 => p.hi[i],
            _ => 0.0,
        });
        let mut ok = true;
        if !free.is_empty() {
            let k = free.len();
            let hff = DMatrix::from_fn(k, k, |r, s| p.h[(free[r], free[s])]);
            let fixed = &p.h * &u;
            let rhs = DVector::from_fn(k, |r, _| -p.c[free[r]] - fixed[free[r]]);
            match hff.cholesky() {
                Some(ch) => {
                    let x = ch.solve(&rhs);
                    for (r, &i) in free.iter().enumerate() {
                        u[i] = x[r];
                    }
                }
                None => ok = false,
            }
        }
        if ok && (0..n).all(|i| u[i] >= p.lo[i] - 1e-12 && u[i] <= p.hi[i] + 1e-12) {
            let f = p.objective(&u);
            if best.as_ref().is_none_or(|b| f < b.1) {
                best = Some((u, f));
            }
        }

        let mut i = 0;
        while i < n && pattern[i] == 2 {
            pattern[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        pattern[i] += 1;
    }
    best.expect("the box is non-empty, so some face is feasible")
}

#[test]
fn matches_exhaustive_active_set_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x51_7e_a5);
    let opts = SolverOptions::default();
    for case in 0..500 {
        let n = rng.gen_range(1..=10);
        let p = BoxQp::random(&mut rng, n);
        let (u_ref, f_ref) = exhaustive_minimum(&p);
        let sol = solve(&p.as_qp(), &opts).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal, "case {case} (n = {n})");
        assert!(sol.kkt.max() <= 1e-8, "case {case}: {:?}", sol.kkt);
        let f = p.objective(&sol.u);
        assert!(
            (f - f_ref).abs() <= 1e-8 * f_ref.abs().max(1.0),
            "case {case}: objective {f} vs oracle {f_ref}"
        );
        assert!(
            (&sol.u - &u_ref).amax() <= 1e-6,
            "case {case}: minimiser off by {}",
            (&sol.u - &u_ref).amax()
        );
    }
}

#[test]
fn barrier_parameter_decreases_almost_monotonically() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = SolverOptions {
        record_trace: true,
        ..SolverOptions::default()
    };
    for _ in 0..100 {
        let n = rng.gen_range(2..=10);
        let p = BoxQp::random(&mut rng, n);
        let sol = solve(&p.as_qp(), &opts).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        let increases = sol.trace.windows(2).filter(|w| w[1].mu > w[0].mu).count();
        let allowed = sol.trace.len().div_ceil(10);
        assert!(
            increases <= allowed,
            "{increases} increases of mu over {} iterations",
            sol.trace.len()
        );
    }
}

#[test]
fn solution_is_invariant_to_problem_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let opts = SolverOptions::default();
    for _ in 0..50 {
        let n = rng.gen_range(1..=8);
        let p = BoxQp::random(&mut rng, n);
        let base = solve(&p.as_qp(), &opts).unwrap();

        // Objective scaled by α and each constraint row by its own factor.
        let alpha = 10f64.powf(rng.gen_range(-3.0..3.0));
        let qp = p.as_qp();
        let rows = DVector::from_fn(qp.num_inequalities(), |_, _| 10f64.powf(rng.gen_range(-3.0..3.0)));
        let a = DMatrix::from_fn(qp.a.nrows(), n, |i, j| qp.a[(i, j)] * rows[i]);
        let b = qp.b.component_mul(&rows);
        let scaled = QuadraticProgram::new(&qp.h * alpha, &qp.c * alpha).with_inequalities(a, b);
        let sol = solve(&scaled, &opts).unwrap();

        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((&sol.u - &base.u).amax() <= 1e-6, "{} vs {}", sol.u, base.u);
    }
}

#[test]
fn contradictory_random_boxes_are_reported_infeasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.gen_range(1..=6);
        let mut p = BoxQp::random(&mut rng, n);
        let i = rng.gen_range(0..n);
        p.hi[i] = p.lo[i] - rng.gen_range(0.01..1.0);
        let sol = solve(&p.as_qp(), &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Infeasible);
    }
}

#[test]
fn objective_scaling_leaves_the_minimiser_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let opts = SolverOptions::default();
    for _ in 0..200 {
        let n = rng.gen_range(1..=10);
        let p = BoxQp::random(&mut rng, n);
        let qp = p.as_qp();
        let base = solve(&qp, &opts).unwrap();
        let alpha = 10f64.powf(rng.gen_range(-3.0..3.0));
        let scaled = QuadraticProgram::new(&qp.h * alpha, &qp.c * alpha).with_inequalities(qp.a.clone(), qp.b.clone());
        let sol = solve(&scaled, &opts).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((&sol.u - &base.u).amax() <= 1e-9, "alpha {alpha}: {}", (&sol.u - &base.u).amax());
    }
}


//! Dense convex QP solver.
//!
//! Solves
//!
//! ```text
//! minimize    ½ uᵀHu + cᵀu
//! subject to  A u ≤ b
//!             G u = h
//! ```
//!
//! with a primal-dual interior-point method (Mehrotra predictor-corrector)
//! on a Ruiz-equilibrated copy of the problem. Each Newton step factors the
//! reduced KKT matrix `[H + AᵀWA, Gᵀ; G, 0]` with `W = diag(z/s)`. After
//! convergence the active set implied by the iterate is polished with an
//! exact equality-constrained solve (corrected a few times if the guessed
//! set turns out wrong), which removes the residual interior bias from the
//! minimizer.
//!
//! Sizes here are tiny (a handful of variables, a few dozen rows), so every
//! matrix is dense.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram {
    pub h: DMatrix<f64>,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
}

impl QuadraticProgram {
    /// Unconstrained problem; add rows with [`Self::with_inequalities`] and
    /// [`Self::with_equalities`].
    pub fn new(h: DMatrix<f64>, c: DVector<f64>) -> Self {
        let n = c.len();
        Self {
            h,
            c,
            a: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
        }
    }

    pub fn with_inequalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a = a;
        self.b = b;
        self
    }

    pub fn with_equalities(mut self, a_eq: DMatrix<f64>, b_eq: DVector<f64>) -> Self {
        self.a_eq = a_eq;
        self.b_eq = b_eq;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_inequalities(&self) -> usize {
        self.b.len()
    }

    pub fn num_equalities(&self) -> usize {
        self.b_eq.len()
    }

    pub fn objective(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.h * u)) + self.c.dot(u)
    }

    /// Checks dimensions, finiteness and positive semidefiniteness of `H`.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let dims = [
            ("hessian rows", n, self.h.nrows()),
            ("hessian cols", n, self.h.ncols()),
            ("inequality cols", n, self.a.ncols()),
            ("inequality rhs", self.a.nrows(), self.b.len()),
            ("equality cols", n, self.a_eq.ncols()),
            ("equality rhs", self.a_eq.nrows(), self.b_eq.len()),
        ];
        for (context, expected, got) in dims {
            if expected != got {
                return Err(Error::DimensionMismatch {
                    context,
                    expected,
                    got,
                });
            }
        }
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        if !(finite(self.h.as_slice())
            && finite(self.c.as_slice())
            && finite(self.a.as_slice())
            && finite(self.b.as_slice())
            && finite(self.a_eq.as_slice())
            && finite(self.b_eq.as_slice()))
        {
            return Err(Error::NonFinite("quadratic program data"));
        }
        if n > 0 {
            let sym = symmetrized(&self.h);
            let scale = sym.amax();
            let min_eig = sym.symmetric_eigenvalues().min();
            if min_eig < -1e-9 * scale {
                return Err(Error::NotPositiveSemidefinite {
                    min_eigenvalue: min_eig,
                });
            }
        }
        Ok(())
    }
}

fn symmetrized(h: &DMatrix<f64>) -> DMatrix<f64> {
    (h + h.transpose()) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QpStatus {
    Optimal,
    /// No point satisfies the constraints.
    Infeasible,
    /// A solution may exist but the iteration cap was reached first.
    IterationLimit,
    /// The KKT system could not be factored, or the iterate went non-finite.
    NumericalFailure,
}

impl QpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            QpStatus::Optimal => "optimal",
            QpStatus::Infeasible => "infeasible",
            QpStatus::IterationLimit => "iteration_limit",
            QpStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::fmt::Display for QpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// KKT residuals in the max-norm on unit-scaled data: the objective is
/// divided by `max(1, |H|max, |c|max)` and each constraint row by its
/// largest coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }

    fn within(&self, feas: f64, gap: f64) -> bool {
        self.stationarity <= feas
            && self.primal <= feas
            && self.dual <= feas
            && self.complementarity <= gap
    }
}

/// Residuals of `(u, z, y)` against the optimality conditions of `qp`.
///
/// `z` are inequality multipliers (`z ≥ 0`), `y` equality multipliers; the
/// Lagrangian is `½uᵀHu + cᵀu + zᵀ(Au − b) + yᵀ(Gu − h)`.
pub fn kkt_residuals(
    qp: &QuadraticProgram,
    u: &DVector<f64>,
    z: &DVector<f64>,
    y: &DVector<f64>,
) -> KktResiduals {
    let obj_scale = 1.0 / qp.h.amax().max(qp.c.amax()).max(1.0);
    let row_scale = |row: nalgebra::DMatrixView<'_, f64>| {
        let m = row.amax();
        if m > 0.0 {
            1.0 / m
        } else {
            1.0
        }
    };

    let grad = &qp.h * u + &qp.c + qp.a.transpose() * z + qp.a_eq.transpose() * y;
    let stationarity = grad.amax() * obj_scale;

    let mut primal = 0.0f64;
    let mut dual = 0.0f64;
    let mut complementarity = 0.0f64;
    let au = &qp.a * u;
    for i in 0..qp.num_inequalities() {
        let r = row_scale(qp.a.rows(i, 1));
        let gap = qp.b[i] - au[i];
        primal = primal.max(-gap * r);
        dual = dual.max(-z[i] * obj_scale / r);
        complementarity = complementarity.max((z[i] * gap).abs() * obj_scale);
    }
    let gu = &qp.a_eq * u;
    for j in 0..qp.num_equalities() {
        let r = row_scale(qp.a_eq.rows(j, 1));
        primal = primal.max((gu[j] - qp.b_eq[j]).abs() * r);
    }
    KktResiduals {
        stationarity,
        primal: primal.max(0.0),
        dual: dual.max(0.0),
        complementarity,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol_feasibility: f64,
    pub tol_gap: f64,
    pub max_iterations: usize,
    /// Keep a per-iteration [`IterationRecord`] in the solution.
    pub record_trace: bool,
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_feasibility: 1e-8,
            tol_gap: 1e-8,
            max_iterations: 100,
            record_trace: false,
            polish: true,
        }
    }
}

/// One interior-point iteration, measured on the equilibrated problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Complementarity measure `sᵀz / m`.
    pub mu: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub sigma: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub u: DVector<f64>,
    pub objective: f64,
    pub status: QpStatus,
    pub iterations: usize,
    pub kkt: KktResiduals,
    /// Inequality multipliers.
    pub z: DVector<f64>,
    /// Equality multipliers.
    pub y: DVector<f64>,
    /// Largest scaled constraint violation at the returned iterate.
    pub max_primal_violation: f64,
    pub polished: bool,
    pub trace: Vec<IterationRecord>,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}

/// Equilibrated copy of the problem plus the scalings needed to map back.
struct Scaled {
    h: DMatrix<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    g: DMatrix<f64>,
    hv: DVector<f64>,
    /// `u = col ∘ ū`
    col: DVector<f64>,
    /// `Ā = diag(row) A diag(col)`
    row: DVector<f64>,
    eq_row: DVector<f64>,
    /// objective multiplier
    cost: f64,
}

const RUIZ_PASSES: usize = 15;
/// Relative primal residual that, if it stops shrinking after 20 iterations,
/// is taken as evidence of infeasibility.
const STALL_PRIMAL: f64 = 1e-6;

fn inv_sqrt_norm(x: f64) -> f64 {
    if x > 1e-12 {
        1.0 / x.sqrt()
    } else {
        1.0
    }
}

fn equilibrate(qp: &QuadraticProgram) -> Scaled {
    let (n, m, p) = (qp.num_vars(), qp.num_inequalities(), qp.num_equalities());
    let mut h = symmetrized(&qp.h);
    let mut a = qp.a.clone();
    let mut g = qp.a_eq.clone();
    let mut col = DVector::from_element(n, 1.0);
    let mut row = DVector::from_element(m, 1.0);
    let mut eq_row = DVector::from_element(p, 1.0);

    for _ in 0..RUIZ_PASSES {
        let d = DVector::from_fn(n, |j, _| {
            let mut norm = h.column(j).amax();
            if m > 0 {
                norm = norm.max(a.column(j).amax());
            }
            if p > 0 {
                norm = norm.max(g.column(j).amax());
            }
            inv_sqrt_norm(norm)
        });
        let e = DVector::from_fn(m, |i, _| inv_sqrt_norm(a.row(i).amax()));
        let f = DVector::from_fn(p, |i, _| inv_sqrt_norm(g.row(i).amax()));

        for j in 0..n {
            for i in 0..n {
                h[(i, j)] *= d[i] * d[j];
            }
            for i in 0..m {
                a[(i, j)] *= e[i] * d[j];
            }
            for i in 0..p {
                g[(i, j)] *= f[i] * d[j];
            }
        }
        col.component_mul_assign(&d);
        row.component_mul_assign(&e);
        eq_row.component_mul_assign(&f);
    }

    let mut c = qp.c.component_mul(&col);
    let mean_h = if n > 0 {
        (0..n).map(|j| h.column(j).amax()).sum::<f64>() / n as f64
    } else {
        0.0
    };
    let cost = {
        let s = mean_h.max(c.amax());
        if s > 1e-12 {
            (1.0 / s).clamp(1e-6, 1e6)
        } else {
            1.0
        }
    };
    h *= cost;
    c *= cost;

    Scaled {
        h,
        c,
        b: qp.b.component_mul(&row),
        hv: qp.b_eq.component_mul(&eq_row),
        a,
        g,
        col,
        row,
        eq_row,
        cost,
    }
}

impl Scaled {
    fn unscale(
        &self,
        u: &DVector<f64>,
        z: &DVector<f64>,
        y: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        (
            u.component_mul(&self.col),
            z.component_mul(&self.row) / self.cost,
            y.component_mul(&self.eq_row) / self.cost,
        )
    }
}

/// Search direction `(Δu, Δs, Δz, Δy)`.
type Step = (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>);

/// Factored reduced KKT matrix for one Newton iteration.
///
/// Near convergence `W = z/s` spans many orders of magnitude, so the matrix
/// is badly conditioned by design; solves are refined against the
/// unregularised matrix to recover accuracy lost to pivoting or to the
/// regularisation that rescues a singular factorisation.
struct NewtonSystem {
    k: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

const REFINEMENT_STEPS: usize = 3;

impl NewtonSystem {
    fn factor(sc: &Scaled, w: &DVector<f64>) -> Option<Self> {
        let n = sc.h.nrows();
        let p = sc.g.nrows();
        let mut m = sc.h.clone();
        if sc.a.nrows() > 0 {
            let wa = DMatrix::from_fn(sc.a.nrows(), n, |i, j| w[i] * sc.a[(i, j)]);
            m += sc.a.transpose() * wa;
        }
        let mut k = DMatrix::zeros(n + p, n + p);
        k.view_mut((0, 0), (n, n)).copy_from(&m);
        k.view_mut((n, 0), (p, n)).copy_from(&sc.g);
        k.view_mut((0, n), (n, p)).copy_from(&sc.g.transpose());

        let usable = |lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>| {
            lu.u().diagonal().iter().all(|d| d.is_finite() && *d != 0.0)
        };
        let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        for reg in [0.0, 1e-14, 1e-12, 1e-10, 1e-8] {
            let mut kr = k.clone();
            for i in 0..n {
                kr[(i, i)] += reg * scale;
            }
            for i in n..n + p {
                kr[(i, i)] -= reg * scale;
            }
            let lu = kr.lu();
            if usable(&lu) {
                return Some(Self { k, lu, n });
            }
        }
        None
    }

    fn solve(&self, rhs_u: &DVector<f64>, rhs_y: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
        let mut rhs = DVector::zeros(self.n + rhs_y.len());
        rhs.rows_mut(0, self.n).copy_from(rhs_u);
        rhs.rows_mut(self.n, rhs_y.len()).copy_from(rhs_y);
        let mut x = self.lu.solve(&rhs)?;
        let mut residual = (&rhs - &self.k * &x).amax();
        for _ in 0..REFINEMENT_STEPS {
            let Some(dx) = self.lu.solve(&(&rhs - &self.k * &x)) else {
                break;
            };
            let candidate = &x + dx;
            let r = (&rhs - &self.k * &candidate).amax();
            if r.is_nan() || r >= residual {
                break;
            }
            x = candidate;
            residual = r;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some((x.rows(0, self.n).into_owned(), x.rows(self.n, rhs_y.len()).into_owned()))
    }
}

/// Largest `α ∈ (0, 1]` keeping `x + α dx ≥ 0`.
fn max_step(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&v, &d)| -v / d)
        .fold(1.0, f64::min)
}

struct Iterate {
    u: DVector<f64>,
    s: DVector<f64>,
    z: DVector<f64>,
    y: DVector<f64>,
}

struct Candidate {
    u: DVector<f64>,
    z: DVector<f64>,
    y: DVector<f64>,
    kkt: KktResiduals,
}

/// Solves `qp` to the tolerances in `opts`.
///
/// Input validation failures are returned as `Err`; solver outcomes
/// (including infeasibility) are reported through [`QpSolution::status`].
pub fn solve(qp: &QuadraticProgram, opts: &SolverOptions) -> Result<QpSolution> {
    qp.validate()?;
    Ok(interior_point(qp, opts, true))
}

fn interior_point(qp: &QuadraticProgram, opts: &SolverOptions, certify: bool) -> QpSolution {
    let sc = equilibrate(qp);
    let (n, m, p) = (qp.num_vars(), qp.num_inequalities(), qp.num_equalities());

    if n == 0 {
        return empty_solution(qp);
    }

    // Slacks start at the bound distance from u = 0 (at least 1) with duals
    // chosen so every complementarity product starts at 1: rows with distant
    // bounds then begin with near-zero multipliers instead of dominating μ.
    let mut it = {
        let s = DVector::from_fn(m, |i, _| sc.b[i].max(1.0));
        Iterate {
            u: DVector::zeros(n),
            z: s.map(|v| 1.0 / v),
            s,
            y: DVector::zeros(p),
        }
    };

    let mut trace = Vec::new();
    let mut best: Option<Candidate> = None;
    let mut primal_history: Vec<f64> = Vec::new();
    let mut status = QpStatus::IterationLimit;
    let mut iterations = 0;
    let mut feasibility_checked = false;

    for k in 0..=opts.max_iterations {
        let (u, z, y) = sc.unscale(&it.u, &it.z, &it.y);
        let kkt = kkt_residuals(qp, &u, &z, &y);
        if !kkt.max().is_finite() {
            status = QpStatus::NumericalFailure;
            break;
        }
        if best.as_ref().is_none_or(|b| kkt.max() < b.kkt.max()) {
            best = Some(Candidate { u, z, y, kkt });
        }
        if kkt.within(opts.tol_feasibility, opts.tol_gap) {
            status = QpStatus::Optimal;
            break;
        }
        if k == opts.max_iterations {
            break;
        }
        iterations = k + 1;

        let r_d = &sc.h * &it.u + &sc.c + sc.a.transpose() * &it.z + sc.g.transpose() * &it.y;
        let r_p = &sc.a * &it.u + &it.s - &sc.b;
        let r_e = &sc.g * &it.u - &sc.hv;
        let mu = if m > 0 { it.s.dot(&it.z) / m as f64 } else { 0.0 };
        let primal_res = r_p.amax().max(r_e.amax());
        // Relative to each row's right-hand side, so rounding noise on rows
        // with very large bounds does not read as a persistent violation.
        let relative_primal = r_p
            .iter()
            .zip(sc.b.iter())
            .chain(r_e.iter().zip(sc.hv.iter()))
            .map(|(r, b)| r.abs() / (1.0 + b.abs()))
            .fold(0.0, f64::max);
        primal_history.push(relative_primal);

        if k >= 5 && m > 0 && farkas_certificate(&sc, &it.z, &it.y) {
            status = QpStatus::Infeasible;
            break;
        }
        let stalled = k >= 20
            && relative_primal > STALL_PRIMAL
            && relative_primal > 0.9 * primal_history[k - 10];
        if stalled && certify && !feasibility_checked {
            feasibility_checked = true;
            if !is_feasible(qp) {
                status = QpStatus::Infeasible;
                break;
            }
        }

        let w = it.z.component_div(&it.s);
        let Some(sys) = NewtonSystem::factor(&sc, &w) else {
            status = QpStatus::NumericalFailure;
            break;
        };
        let direction = |r_sz: &DVector<f64>| -> Option<Step> {
            // Δz = (−r_sz + z∘r_p)/s + W∘(AΔu),  Δs = −r_p − AΔu
            let t = (it.z.component_mul(&r_p) - r_sz).component_div(&it.s);
            let rhs_u = -&r_d - sc.a.transpose() * &t;
            let (du, dy) = sys.solve(&rhs_u, &(-&r_e))?;
            let adu = &sc.a * &du;
            let dz = t + w.component_mul(&adu);
            let ds = -&r_p - adu;
            Some((du, ds, dz, dy))
        };

        let sz = it.s.component_mul(&it.z);
        let Some((_, ds_aff, dz_aff, _)) = direction(&sz) else {
            status = QpStatus::NumericalFailure;
            break;
        };
        let (sigma, r_sz) = if m > 0 {
            let a_aff = max_step(&it.s, &ds_aff).min(max_step(&it.z, &dz_aff));
            let mu_aff = (&it.s + &ds_aff * a_aff).dot(&(&it.z + &dz_aff * a_aff)) / m as f64;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
            let r_sz = sz + ds_aff.component_mul(&dz_aff) - DVector::from_element(m, sigma * mu);
            (sigma, r_sz)
        } else {
            (0.0, sz)
        };
        let Some((du, ds, dz, dy)) = direction(&r_sz) else {
            status = QpStatus::NumericalFailure;
            break;
        };
        let alpha = if m > 0 {
            (0.99 * max_step(&it.s, &ds).min(max_step(&it.z, &dz))).min(1.0)
        } else {
            1.0
        };
        it.u += &du * alpha;
        it.s += &ds * alpha;
        it.z += &dz * alpha;
        it.y += &dy * alpha;

        if opts.record_trace {
            trace.push(IterationRecord {
                iteration: k,
                mu,
                primal_residual: primal_res,
                dual_residual: r_d.amax(),
                sigma,
                step: alpha,
            });
        }
    }

    let mut best = best.unwrap_or_else(|| Candidate {
        u: DVector::zeros(n),
        z: DVector::zeros(m),
        y: DVector::zeros(p),
        kkt: KktResiduals {
            stationarity: f64::INFINITY,
            primal: f64::INFINITY,
            dual: f64::INFINITY,
            complementarity: f64::INFINITY,
        },
    });

    let mut polished = false;
    if opts.polish && matches!(status, QpStatus::Optimal | QpStatus::IterationLimit | QpStatus::NumericalFailure) {
        let active: Vec<usize> = (0..m).filter(|&i| it.z[i] > it.s[i]).collect();
        if let Some(cand) = polish_active_set(qp, active) {
            if cand.kkt.max() <= best.kkt.max() || cand.kkt.within(opts.tol_feasibility, opts.tol_gap) && !best.kkt.within(opts.tol_feasibility, opts.tol_gap) {
                best = cand;
                polished = true;
            }
        }
        if status != QpStatus::Optimal && best.kkt.within(opts.tol_feasibility, opts.tol_gap) {
            status = QpStatus::Optimal;
        }
    }

    if certify
        && !feasibility_checked
        && matches!(status, QpStatus::NumericalFailure | QpStatus::IterationLimit)
        && best.kkt.primal > opts.tol_feasibility
        && !is_feasible(qp)
    {
        status = QpStatus::Infeasible;
    }

    let max_primal_violation = best.kkt.primal;
    QpSolution {
        objective: qp.objective(&best.u),
        u: best.u,
        status,
        iterations,
        kkt: best.kkt,
        z: best.z,
        y: best.y,
        max_primal_violation,
        polished,
        trace,
    }
}

/// Largest row-normalised constraint violation that phase one may leave
/// before the constraint set is declared empty.
const PHASE_ONE_TOL: f64 = 1e-7;

/// Phase one: minimises `t` subject to every row (normalised to unit
/// largest coefficient) being violated by at most `t`, with `t ≥ −1`.
/// The constraint set is non-empty exactly when the optimum is `≤ 0`.
fn is_feasible(qp: &QuadraticProgram) -> bool {
    let (n, m, p) = (qp.num_vars(), qp.num_inequalities(), qp.num_equalities());
    let rows = m + 2 * p + 1;
    let mut a = DMatrix::zeros(rows, n + 1);
    let mut b = DVector::zeros(rows);
    let mut put = |r: usize, coeffs: nalgebra::DMatrixView<'_, f64>, rhs: f64, sign: f64| {
        let norm = coeffs.amax().max(1e-300);
        for j in 0..n {
            a[(r, j)] = sign * coeffs[(0, j)] / norm;
        }
        a[(r, n)] = -1.0;
        b[r] = sign * rhs / norm;
    };
    for i in 0..m {
        put(i, qp.a.rows(i, 1), qp.b[i], 1.0);
    }
    for e in 0..p {
        put(m + 2 * e, qp.a_eq.rows(e, 1), qp.b_eq[e], 1.0);
        put(m + 2 * e + 1, qp.a_eq.rows(e, 1), qp.b_eq[e], -1.0);
    }
    a[(rows - 1, n)] = -1.0;
    b[rows - 1] = 1.0;

    let mut c = DVector::zeros(n + 1);
    c[n] = 1.0;
    let phase_one = QuadraticProgram::new(DMatrix::zeros(n + 1, n + 1), c).with_inequalities(a, b);
    let opts = SolverOptions {
        max_iterations: 200,
        ..SolverOptions::default()
    };
    let sol = interior_point(&phase_one, &opts, false);
    // An unconverged phase one only bounds the optimum from above, which is
    // inconclusive; only a converged positive optimum proves infeasibility.
    !(sol.status == QpStatus::Optimal && sol.u[n] > PHASE_ONE_TOL)
}

/// Trivial solution of a problem without decision variables: feasible iff
/// every constraint holds at the empty point.
fn empty_solution(qp: &QuadraticProgram) -> QpSolution {
    let u = DVector::zeros(0);
    let z = DVector::zeros(qp.num_inequalities());
    let y = DVector::zeros(qp.num_equalities());
    let kkt = kkt_residuals(qp, &u, &z, &y);
    let violation = qp
        .b
        .iter()
        .map(|b| (-b).max(0.0))
        .chain(qp.b_eq.iter().map(|b| b.abs()))
        .fold(0.0, f64::max);
    QpSolution {
        objective: 0.0,
        u,
        status: if violation > 0.0 { QpStatus::Infeasible } else { QpStatus::Optimal },
        iterations: 0,
        kkt,
        z,
        y,
        max_primal_violation: violation,
        polished: false,
        trace: Vec::new(),
    }
}

/// `z ≥ 0, y` with `Aᵀz + Gᵀy ≈ 0` and `bᵀz + hᵀy < 0` proves that no `u`
/// satisfies the constraints.
fn farkas_certificate(sc: &Scaled, z: &DVector<f64>, y: &DVector<f64>) -> bool {
    let scale = z.amax().max(y.amax());
    if scale < 1e3 {
        return false;
    }
    let (zn, yn) = (z / scale, y / scale);
    let combo = sc.a.transpose() * &zn + sc.g.transpose() * &yn;
    let value = sc.b.dot(&zn) + sc.hv.dot(&yn);
    combo.amax() <= 1e-6 && value < -1e-6
}

/// Solves the equality-constrained problem with rows `active` held tight and
/// accepts it only if it is primal and dual feasible.
/// Corrections of the guessed active set tried after the first polishing
/// solve.
const POLISH_ROUNDS: usize = 10;

/// Violation (row-normalised) or negative multiplier small enough to count
/// as exact when correcting the active set.
const POLISH_SLACK: f64 = 1e-13;

/// Polishes from the interior-point active-set guess. When a row is only
/// weakly active (`z ≈ s` at termination) the guess can be wrong; each
/// round then adds the most violated inactive row or, failing that, drops
/// the active row with the most negative multiplier. Returns the candidate
/// with the smallest KKT residuals.
fn polish_active_set(qp: &QuadraticProgram, mut active: Vec<usize>) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    for _ in 0..=POLISH_ROUNDS {
        let Some(cand) = polish(qp, &active) else {
            break;
        };
        let au = &qp.a * &cand.u;
        let violated = (0..qp.num_inequalities())
            .filter(|i| !active.contains(i))
            .filter_map(|i| {
                let scale = qp.a.row(i).amax().max(f64::MIN_POSITIVE);
                let v = (au[i] - qp.b[i]) / scale;
                (v > POLISH_SLACK * (1.0 + qp.b[i].abs() / scale)).then_some((i, v))
            })
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let negative = active
            .iter()
            .map(|&i| (i, cand.z[i]))
            .filter(|&(_, z)| z < -POLISH_SLACK)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if best.as_ref().is_none_or(|b| cand.kkt.max() < b.kkt.max()) {
            best = Some(cand);
        }
        match (violated, negative) {
            (Some((i, _)), _) => active.push(i),
            (None, Some((i, _))) => active.retain(|&j| j != i),
            (None, None) => break,
        }
    }
    best
}

fn polish(qp: &QuadraticProgram, active: &[usize]) -> Option<Candidate> {
    let (n, m, p) = (qp.num_vars(), qp.num_inequalities(), qp.num_equalities());
    let k = active.len();
    let dim = n + k + p;
    let h = symmetrized(&qp.h);
    let mut kkt = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    kkt.view_mut((0, 0), (n, n)).copy_from(&h);
    rhs.rows_mut(0, n).copy_from(&(-&qp.c));
    for (r, &i) in active.iter().enumerate() {
        for j in 0..n {
            kkt[(n + r, j)] = qp.a[(i, j)];
            kkt[(j, n + r)] = qp.a[(i, j)];
        }
        rhs[n + r] = qp.b[i];
    }
    for e in 0..p {
        for j in 0..n {
            kkt[(n + k + e, j)] = qp.a_eq[(e, j)];
            kkt[(j, n + k + e)] = qp.a_eq[(e, j)];
        }
        rhs[n + k + e] = qp.b_eq[e];
    }
    let x = kkt.lu().solve(&rhs)?;
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let u = x.rows(0, n).into_owned();
    let mut z = DVector::zeros(m);
    for (r, &i) in active.iter().enumerate() {
        z[i] = x[n + r];
    }
    let y = x.rows(n + k, p).into_owned();
    let kkt = kkt_residuals(qp, &u, &z, &y);
    Some(Candidate { u, z, y, kkt })
}

//! Nonlinear guidance logic: virtual target point (VTP) selection.
//!
//! A circle of radius `L` (the lookahead) is drawn around the vehicle's
//! planar position. Where it cuts the reference path, the intercept ahead in
//! the direction of travel becomes the VTP. When the circle misses the path
//! entirely the closest path point is used instead and the result is tagged
//! [`VtpMode::ClosestPointFallback`].
//!
//! Paths are planar; the vertical target is the path's constant altitude.
//! For loiter circles pick `L < 2R`, otherwise no intercept exists from the
//! central region.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::Vector2;

use crate::{Error, Result};

pub type Point2 = Vector2<f64>;

/// Convergence threshold on `‖q − p‖ − L` for parametric intercepts.
const INTERCEPT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Ccw,
    Cw,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Ccw => 1.0,
            Sense::Cw => -1.0,
        }
    }
}

/// Infinite straight line traversed along `direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinePath {
    point: Point2,
    direction: Point2,
}

impl LinePath {
    /// `direction` is normalized; it must be finite and non-zero.
    pub fn new(point: Point2, direction: Point2) -> Result<Self> {
        let norm = direction.norm();
        if !norm.is_finite() || norm < 1e-12 || !point.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "direction",
                reason: format!("line direction must be a finite non-zero vector, got {direction:?}"),
            });
        }
        Ok(Self {
            point,
            direction: direction / norm,
        })
    }

    pub fn point(&self) -> Point2 {
        self.point
    }

    pub fn direction(&self) -> Point2 {
        self.direction
    }

    pub fn at(&self, s: f64) -> Point2 {
        self.point + self.direction * s
    }

    /// Arc-length parameter of the perpendicular foot.
    pub fn project(&self, p: &Point2) -> f64 {
        (p - self.point).dot(&self.direction)
    }

    pub fn distance(&self, p: &Point2) -> f64 {
        let w = p - self.point;
        (w - self.direction * w.dot(&self.direction)).norm()
    }
}

/// Loiter circle, parametrized by arc length in the traversal sense
/// starting from the +x1 axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirclePath {
    center: Point2,
    radius: f64,
    sense: Sense,
}

impl CirclePath {
    pub fn new(center: Point2, radius: f64, sense: Sense) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) || !center.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "radius",
                reason: format!("circle radius must be positive and finite, got {radius}"),
            });
        }
        Ok(Self {
            center,
            radius,
            sense,
        })
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn circumference(&self) -> f64 {
        TAU * self.radius
    }

    pub fn at(&self, s: f64) -> Point2 {
        let angle = self.sense.sign() * s / self.radius;
        self.center + Point2::new(angle.cos(), angle.sin()) * self.radius
    }

    /// Arc-length parameter of the point at angle `atan2(rel)`, unwrapped to
    /// the representative nearest `hint`.
    fn param_of(&self, rel: &Point2, hint: f64) -> f64 {
        let s = self.sense.sign() * rel.y.atan2(rel.x) * self.radius;
        let period = self.circumference();
        s + period * ((hint - s) / period).round()
    }

    pub fn distance(&self, p: &Point2) -> f64 {
        ((p - self.center).norm() - self.radius).abs()
    }
}

/// A planar curve `s ↦ curve(s)` over `[s_lo, s_hi]`, sampled with step
/// `step` when searching for intercepts. Closed curves wrap with period
/// `s_hi − s_lo`.
#[derive(Clone)]
pub struct ParametricCurve {
    curve: Arc<dyn Fn(f64) -> Point2 + Send + Sync>,
    s_lo: f64,
    s_hi: f64,
    step: f64,
    closed: bool,
}

impl fmt::Debug for ParametricCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricCurve")
            .field("s_lo", &self.s_lo)
            .field("s_hi", &self.s_hi)
            .field("step", &self.step)
            .field("closed", &self.closed)
            .finish_non_exhaustive()
    }
}

impl ParametricCurve {
    pub fn new<F>(curve: F, s_lo: f64, s_hi: f64, step: f64) -> Result<Self>
    where
        F: Fn(f64) -> Point2 + Send + Sync + 'static,
    {
        if !(s_lo.is_finite() && s_hi.is_finite() && s_lo < s_hi) {
            return Err(Error::InvalidParameter {
                name: "s_range",
                reason: format!("need finite s_lo < s_hi, got [{s_lo}, {s_hi}]"),
            });
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sample_step",
                reason: format!("sampling step must be positive, got {step}"),
            });
        }
        Ok(Self {
            curve: Arc::new(curve),
            s_lo,
            s_hi,
            step,
            closed: false,
        })
    }

    /// Marks the curve as closed: `curve(s_lo) == curve(s_hi)` and parameters
    /// wrap around.
    pub fn closed(mut self) -> Self {
        self.closed = true;
        self
    }

    /// `origin + (s, amplitude · sin(2π s / wavelength))` for `s ∈ [0, length]`.
    pub fn sinusoid(origin: Point2, amplitude: f64, wavelength: f64, length: f64, step: f64) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidParameter {
                name: "wavelength",
                reason: format!("sinusoid needs a positive wavelength and finite amplitude, got {wavelength}, {amplitude}"),
            });
        }
        let k = TAU / wavelength;
        Self::new(
            move |s| origin + Point2::new(s, amplitude * (k * s).sin()),
            0.0,
            length,
            step,
        )
    }

    pub fn s_range(&self) -> (f64, f64) {
        (self.s_lo, self.s_hi)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    fn period(&self) -> f64 {
        self.s_hi - self.s_lo
    }

    pub fn at(&self, s: f64) -> Point2 {
        if self.closed {
            (self.curve)(self.s_lo + (s - self.s_lo).rem_euclid(self.period()))
        } else {
            (self.curve)(s.clamp(self.s_lo, self.s_hi))
        }
    }

    /// Uniform samples of `[lo, hi]` with spacing at most `step`, both ends
    /// included.
    fn grid(&self, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
        let count = (((hi - lo) / self.step).ceil() as usize).max(1);
        let h = (hi - lo) / count as f64;
        (0..=count).map(move |k| if k == count { hi } else { lo + k as f64 * h })
    }

    /// Golden-section minimization of `‖curve(s) − p‖` on `[lo, hi]`.
    fn refine_closest(&self, p: &Point2, mut lo: f64, mut hi: f64) -> f64 {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let dist = |s: f64| (self.at(s) - p).norm_squared();
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (dist(x1), dist(x2));
        for _ in 0..80 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = dist(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = dist(x2);
            }
        }
        if f1 <= f2 {
            x1
        } else {
            x2
        }
    }

    /// Closest point parameter within `[lo, hi]`.
    fn closest_in(&self, p: &Point2, lo: f64, hi: f64) -> f64 {
        let samples: Vec<f64> = self.grid(lo, hi).collect();
        let (best, _) = samples
            .iter()
            .enumerate()
            .map(|(k, &s)| (k, (self.at(s) - p).norm_squared()))
            .fold((0, f64::INFINITY), |acc, (k, d)| if d < acc.1 { (k, d) } else { acc });
        let a = samples[best.saturating_sub(1)];
        let b = samples[(best + 1).min(samples.len() - 1)];
        let s = self.refine_closest(p, a, b);
        // keep the raw sample if refinement drifted to a worse local point
        if (self.at(s) - p).norm_squared() <= (self.at(samples[best]) - p).norm_squared() {
            s
        } else {
            samples[best]
        }
    }

    /// Parameter of the closest point over the whole curve.
    pub fn closest_param(&self, p: &Point2) -> f64 {
        self.closest_in(p, self.s_lo, self.s_hi)
    }

    pub fn distance(&self, p: &Point2) -> f64 {
        (self.at(self.closest_param(p)) - p).norm()
    }
}

#[derive(Debug, Clone)]
pub enum PathShape {
    Line(LinePath),
    Circle(CirclePath),
    Parametric(ParametricCurve),
}

/// Planar reference path flown at constant altitude.
#[derive(Debug, Clone)]
pub struct ReferencePath {
    pub shape: PathShape,
    pub altitude: f64,
}

impl ReferencePath {
    pub fn line(path: LinePath, altitude: f64) -> Self {
        Self {
            shape: PathShape::Line(path),
            altitude,
        }
    }

    pub fn circle(path: CirclePath, altitude: f64) -> Self {
        Self {
            shape: PathShape::Circle(path),
            altitude,
        }
    }

    pub fn parametric(curve: ParametricCurve, altitude: f64) -> Self {
        Self {
            shape: PathShape::Parametric(curve),
            altitude,
        }
    }

    pub fn at(&self, s: f64) -> Point2 {
        match &self.shape {
            PathShape::Line(l) => l.at(s),
            PathShape::Circle(c) => c.at(s),
            PathShape::Parametric(c) => c.at(s),
        }
    }

    pub fn is_closed(&self) -> bool {
        match &self.shape {
            PathShape::Line(_) => false,
            PathShape::Circle(_) => true,
            PathShape::Parametric(c) => c.is_closed(),
        }
    }

    /// Path parameter of the point closest to `p`; seeds the progress hint.
    pub fn closest_param(&self, p: &Point2) -> f64 {
        match &self.shape {
            PathShape::Line(l) => l.project(p),
            PathShape::Circle(c) => c.param_of(&(p - c.center), 0.0),
            PathShape::Parametric(c) => c.closest_param(p),
        }
    }

    /// Shortest planar distance from `p` to the path.
    pub fn distance(&self, p: &Point2) -> f64 {
        match &self.shape {
            PathShape::Line(l) => l.distance(p),
            PathShape::Circle(c) => c.distance(p),
            PathShape::Parametric(c) => c.distance(p),
        }
    }

    pub fn vtp(&self, query: &VtpQuery) -> Result<VtpResult> {
        match &self.shape {
            PathShape::Line(l) => Ok(vtp_line(l, query)),
            PathShape::Circle(c) => vtp_circle(c, query),
            PathShape::Parametric(c) => vtp_parametric(c, query),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VtpQuery {
    pub vehicle_pos: Point2,
    pub lookahead: f64,
    /// Path parameter of the previous VTP.
    pub progress_hint: f64,
}

impl VtpQuery {
    pub fn new(vehicle_pos: Point2, lookahead: f64, progress_hint: f64) -> Result<Self> {
        if !(lookahead.is_finite() && lookahead > 0.0) {
            return Err(Error::InvalidParameter {
                name: "lookahead",
                reason: format!("lookahead must be positive, got {lookahead}"),
            });
        }
        Ok(Self {
            vehicle_pos,
            lookahead,
            progress_hint,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VtpMode {
    Intersection,
    ClosestPointFallback,
}

impl VtpMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            VtpMode::Intersection => "intersection",
            VtpMode::ClosestPointFallback => "fallback",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VtpResult {
    pub point: Point2,
    pub path_param: f64,
    pub mode: VtpMode,
}

/// Forward intercept of the lookahead circle with a straight line.
pub fn vtp_line(path: &LinePath, query: &VtpQuery) -> VtpResult {
    let p = query.vehicle_pos;
    let t0 = path.project(&p);
    let foot = path.at(t0);
    let offset = (p - foot).norm();
    let l = query.lookahead;
    if offset <= l {
        let half_chord = ((l - offset) * (l + offset)).sqrt();
        let s = t0 + half_chord;
        VtpResult {
            point: path.at(s),
            path_param: s,
            mode: VtpMode::Intersection,
        }
    } else {
        VtpResult {
            point: foot,
            path_param: t0,
            mode: VtpMode::ClosestPointFallback,
        }
    }
}

/// Intercept of the lookahead circle with a loiter circle, taking the one
/// ahead of the vehicle in the traversal sense.
pub fn vtp_circle(path: &CirclePath, query: &VtpQuery) -> Result<VtpResult> {
    let rel = query.vehicle_pos - path.center;
    let d = rel.norm();
    if d < 1e-9 {
        return Err(Error::DegenerateCenter);
    }
    let r = path.radius;
    let l = query.lookahead;
    let radial = rel / d;
    if d > r + l || d < (r - l).abs() {
        let point = path.center + radial * r;
        return Ok(VtpResult {
            point,
            path_param: path.param_of(&rel, query.progress_hint),
            mode: VtpMode::ClosestPointFallback,
        });
    }
    // Radical line: distance from the path center along `radial`.
    let a = (d * d + r * r - l * l) / (2.0 * d);
    let h = (r * r - a * a).max(0.0).sqrt();
    let tangent = Point2::new(-radial.y, radial.x) * path.sense.sign();
    let offset = radial * a + tangent * h;
    Ok(VtpResult {
        point: path.center + offset,
        path_param: path.param_of(&offset, query.progress_hint),
        mode: VtpMode::Intersection,
    })
}

/// Intercept search on a sampled curve.
///
/// Within the search window (`[hint, s_hi]` for open curves, one period from
/// the hint for closed ones) `d(s) = ‖curve(s) − p‖ − L` is sampled; the
/// largest-parameter crossing where the curve leaves the lookahead circle
/// (`d` going from negative to non-negative) is refined by bisection.
pub fn vtp_parametric(path: &ParametricCurve, query: &VtpQuery) -> Result<VtpResult> {
    let p = query.vehicle_pos;
    let l = query.lookahead;
    let (lo, hi) = if path.closed {
        (query.progress_hint, query.progress_hint + path.period())
    } else {
        let lo = query.progress_hint.clamp(path.s_lo, path.s_hi);
        (lo, path.s_hi)
    };
    let gap = |s: f64| (path.at(s) - p).norm() - l;

    let limit = l / 4.0;
    let mut samples = Vec::new();
    let mut prev: Option<Point2> = None;
    for s in path.grid(lo, hi) {
        let q = path.at(s);
        if let Some(prev) = prev {
            let chord = (q - prev).norm();
            if chord >= limit {
                return Err(Error::SamplingTooCoarse { chord, limit });
            }
        }
        prev = Some(q);
        samples.push((s, (q - p).norm() - l));
    }

    let crossing = samples
        .windows(2)
        .rev()
        .find(|w| w[0].1 < 0.0 && w[1].1 >= 0.0)
        .map(|w| (w[0].0, w[1].0));

    if let Some((mut a, mut b)) = crossing {
        // invariant: gap(a) < 0 ≤ gap(b)
        let mut s = b;
        for _ in 0..200 {
            let gb = gap(b);
            if gb.abs() <= INTERCEPT_TOL {
                s = b;
                break;
            }
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                s = b;
                break;
            }
            let gm = gap(mid);
            if gm.abs() <= INTERCEPT_TOL {
                s = mid;
                break;
            }
            if gm < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
            s = b;
        }
        return Ok(VtpResult {
            point: path.at(s),
            path_param: s,
            mode: VtpMode::Intersection,
        });
    }

    let s = path.closest_in(&p, lo, hi);
    Ok(VtpResult {
        point: path.at(s),
        path_param: s,
        mode: VtpMode::ClosestPointFallback,
    })
}

//! Closed-loop properties of full scenario runs.

use quadmpc::dynamics::{thrust_magnitude, AxisState, GravityModel, Vec3, VehicleState};
use quadmpc::feasibility::{check_thrust_feasible, derive_bounds, ThrustLimits};
use quadmpc::guidance::{CirclePath, LinePath, ParametricCurve, Point2, ReferencePath, Sense, VtpMode};
use quadmpc::mpc::ControllerConfig;
use quadmpc::predictor::HorizonConfig;
use quadmpc::sim::{run, Disturbance, Scenario, Termination, TrajectoryLog};

const LOOKAHEAD: f64 = 10.0;

fn scenario(path: ReferencePath, start: Vec3, duration: f64) -> Scenario {
    let thrust = ThrustLimits::new(1.0, 20.0).unwrap();
    let gravity = GravityModel::default();
    let bounds = derive_bounds(&thrust, &gravity, 0.85).unwrap();
    Scenario {
        path,
        initial_state: VehicleState::at_rest(start),
        lookahead: LOOKAHEAD,
        controller: ControllerConfig::from_bounds(HorizonConfig::default(), &bounds, 5.0).unwrap(),
        thrust,
        gravity,
        duration,
        stop_tolerance: None,
        disturbance: Disturbance::None,
    }
}

fn offset_line() -> ReferencePath {
    ReferencePath::line(LinePath::new(Point2::new(0.0, 0.0), Point2::new(0.0, 1.0)).unwrap(), 12.0)
}

fn circle() -> ReferencePath {
    ReferencePath::circle(CirclePath::new(Point2::zeros(), 50.0, Sense::Ccw).unwrap(), 10.0)
}

fn sine() -> ReferencePath {
    ReferencePath::parametric(ParametricCurve::sinusoid(Point2::zeros(), 1.0, 400.0, 1000.0, 1.0).unwrap(), 10.0)
}

fn scenarios() -> Vec<(&'static str, Scenario)> {
    vec![
        ("line, offset start", scenario(offset_line(), Vec3::new(6.0, 0.0, 8.0), 30.0)),
        ("circle, interior start", scenario(circle(), Vec3::new(45.0, 0.0, 10.0), 40.0)),
        ("sinusoid", scenario(sine(), Vec3::new(0.0, -1.0, 10.0), 40.0)),
    ]
}

fn completed(name: &str, s: &Scenario) -> TrajectoryLog {
    let log = run(s).unwrap();
    assert_eq!(log.termination, Termination::Completed, "{name}");
    assert_eq!(log.len(), s.tick_count(), "{name}");
    log
}

#[test]
fn runs_are_deterministic_apart_from_wall_clock() {
    let (_, s) = &scenarios()[1];
    let strip = |mut log: TrajectoryLog| {
        for r in &mut log.records {
            r.solve_time = 0.0;
            for p in &mut r.plans {
                p.solve_time = 0.0;
            }
        }
        log
    };
    let a = strip(run(s).unwrap());
    let b = strip(run(s).unwrap());
    assert!(a == b);
}

#[test]
fn logged_states_respect_boxes_and_thrust_limits() {
    for (name, s) in scenarios() {
        let log = completed(name, &s);
        for r in &log.records {
            for i in 0..3 {
                let limits = s.controller.limits[i];
                assert!(limits.contains(&r.state.axes[i], 1e-7), "{name} t = {}: axis {i} {:?}", r.time, r.state.axes[i]);
            }
            let check = check_thrust_feasible(&r.state.acceleration(), &s.thrust, &s.gravity);
            assert!(check.feasible, "{name} t = {}: thrust {}", r.time, check.thrust);
            assert_eq!(r.thrust, thrust_magnitude(&r.state.acceleration(), &s.gravity));
        }
    }
}

#[test]
fn cross_track_never_returns_above_twice_the_lookahead() {
    for (name, s) in scenarios() {
        let log = completed(name, &s);
        let captured = log.records.iter().position(|r| r.cross_track < LOOKAHEAD);
        let Some(first) = captured else {
            panic!("{name}: never came within L of the path");
        };
        for r in &log.records[first..] {
            assert!(r.cross_track <= 2.0 * LOOKAHEAD, "{name} t = {}: {}", r.time, r.cross_track);
        }
    }
}

#[test]
fn vtp_progress_is_monotone_on_open_paths() {
    for (name, s) in [&scenarios()[0], &scenarios()[2]] {
        let log = completed(name, s);
        for w in log.records.windows(2) {
            assert!(w[1].vtp.path_param >= w[0].vtp.path_param, "{name} t = {}", w[1].time);
        }
    }
}

#[test]
fn offset_line_start_is_captured() {
    let (name, s) = &scenarios()[0];
    let log = completed(name, s);
    let late = &log.records[log.len() / 2..];
    let worst = late.iter().map(|r| r.cross_track).fold(0.0, f64::max);
    assert!(worst <= 0.2, "{name}: {worst}");
    assert!(late.iter().all(|r| r.vtp.mode == VtpMode::Intersection));
}

#[test]
fn hovering_at_the_end_of_a_path_commands_no_jerk() {
    let end = Point2::new(20.0, -4.0);
    let curve = ParametricCurve::new(move |s| end + Point2::new(s - 30.0, 0.0), 0.0, 30.0, 0.5).unwrap();
    let s = scenario(ReferencePath::parametric(curve, 7.0), Vec3::new(end.x, end.y, 7.0), 10.0);
    let log = completed("hover", &s);
    assert_eq!(log.len(), 125);
    for r in &log.records {
        assert_eq!(r.jerk, Vec3::zeros(), "t = {}", r.time);
        assert_eq!(r.vtp.point, end);
    }
    assert_eq!(log.final_state.axes[0], AxisState::at_rest(end.x));
}

#[test]
fn constant_headwind_is_rejected_on_a_line() {
    let line = ReferencePath::line(LinePath::new(Point2::zeros(), Point2::new(1.0, 0.0)).unwrap(), 10.0);
    let mut s = scenario(line, Vec3::new(0.0, 0.0, 10.0), 20.0);
    s.disturbance = Disturbance::Constant(Vec3::new(0.0, 0.4, 0.0));
    let log = completed("headwind", &s);
    let late = &log.records[log.len() / 2..];
    assert!(late.iter().all(|r| r.cross_track < 0.5));
}

use std::ffi::{CStr, CString};
use std::ptr;

use mppi_locomotion_ffi::*;

const HOPPER: &str = "env.name = \"planar_hopper\"\ntask = \"standing\"\nplanner.N = 8\nplanner.I = 1\nrun.duration = 0.1\n";

fn last_error() -> String {
    let p = mppi_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn hopper(seed: u64) -> *mut MppiController {
    let cfg = CString::new(HOPPER).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { mppi_controller_new(cfg.as_ptr(), seed, &mut c) }, MppiStatus::Ok);
    assert!(!c.is_null());
    c
}

#[test]
fn controller_lifecycle() {
    let c = hopper(3);
    let (mut nq, mut nv, mut nu) = (0, 0, 0);
    unsafe {
        assert_eq!(mppi_controller_dims(c, &mut nq, &mut nv, &mut nu), MppiStatus::Ok);
        assert_eq!((nq, nv, nu), (5, 5, 2));

        let mut q = [0.0; 2];
        let mut v = [0.0; 2];
        let mut cost = f64::NAN;
        assert_eq!(mppi_controller_plan(c, q.as_mut_ptr(), v.as_mut_ptr(), 2, &mut cost), MppiStatus::Ok);
        assert!(cost.is_finite() && q.iter().all(|x| x.is_finite()));

        for _ in 0..3 {
            assert_eq!(mppi_controller_step(c), MppiStatus::Ok);
        }
        let mut t = 0.0;
        let mut pos = [0.0; 5];
        let mut vel = [0.0; 5];
        assert_eq!(mppi_controller_get_state(c, &mut t, pos.as_mut_ptr(), 5, vel.as_mut_ptr(), 5), MppiStatus::Ok);
        assert!((t - 0.06).abs() < 1e-9);

        pos[1] += 0.01;
        assert_eq!(mppi_controller_set_state(c, 1.0, pos.as_ptr(), 5, vel.as_ptr(), 5), MppiStatus::Ok);
        let mut pos2 = [0.0; 5];
        assert_eq!(mppi_controller_get_state(c, &mut t, pos2.as_mut_ptr(), 5, vel.as_mut_ptr(), 5), MppiStatus::Ok);
        assert_eq!((t, pos2), (1.0, pos));

        assert_eq!(mppi_controller_reset(c), MppiStatus::Ok);
        assert_eq!(mppi_controller_get_state(c, &mut t, pos.as_mut_ptr(), 5, vel.as_mut_ptr(), 5), MppiStatus::Ok);
        assert_eq!(t, 0.0);
        mppi_controller_free(c);
    }
}

#[test]
fn same_seed_same_commands() {
    let plan = |seed| {
        let c = hopper(seed);
        let mut q = [0.0; 2];
        let mut v = [0.0; 2];
        unsafe {
            assert_eq!(mppi_controller_step(c), MppiStatus::Ok);
            assert_eq!(mppi_controller_plan(c, q.as_mut_ptr(), v.as_mut_ptr(), 2, ptr::null_mut()), MppiStatus::Ok);
            mppi_controller_free(c);
        }
        (q, v)
    };
    assert_eq!(plan(7), plan(7));
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut c = ptr::null_mut();
        let bad = CString::new("planner.N = -1").unwrap();
        assert_eq!(mppi_controller_new(bad.as_ptr(), 0, &mut c), MppiStatus::Config);
        assert!(c.is_null());
        assert!(last_error().contains("planner.N"));

        assert_eq!(mppi_controller_new(ptr::null(), 0, ptr::null_mut()), MppiStatus::NullPointer);
        assert_eq!(mppi_controller_step(ptr::null_mut()), MppiStatus::NullPointer);

        let c = hopper(0);
        let mut q = [0.0; 3];
        let mut v = [0.0; 3];
        let status = mppi_controller_plan(c, q.as_mut_ptr(), v.as_mut_ptr(), 3, ptr::null_mut());
        assert_eq!(status, MppiStatus::DimensionMismatch);
        assert_eq!(mppi_controller_reset(c), MppiStatus::Ok);
        assert!(mppi_last_error_message().is_null());
        mppi_controller_free(c);
        mppi_controller_free(ptr::null_mut());
    }
}

#[test]
fn hermite_interpolates_nodes() {
    // Two nodes, one joint: q 0 -> 1, v 0 -> 0 over one second.
    let q = [0.0, 1.0];
    let v = [0.0, 0.0];
    let mut p = [0.0];
    let mut d = [0.0];
    unsafe {
        assert_eq!(
            mppi_spline_evaluate(0, 0.0, 1.0, 2, 1, q.as_ptr(), v.as_ptr(), 0.5, p.as_mut_ptr(), d.as_mut_ptr()),
            MppiStatus::Ok
        );
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((d[0] - 1.5).abs() < 1e-12);
        assert_eq!(
            mppi_spline_evaluate(7, 0.0, 1.0, 2, 1, q.as_ptr(), v.as_ptr(), 0.5, p.as_mut_ptr(), d.as_mut_ptr()),
            MppiStatus::Domain
        );
    }
}

#[test]
fn weights_match_two_cost_example() {
    let costs = [0.0, 1.0];
    let mut w = [0.0; 2];
    unsafe {
        assert_eq!(mppi_compute_weights(costs.as_ptr(), 2, 1.0, w.as_mut_ptr()), MppiStatus::Ok);
    }
    let e = (-1.0f64).exp();
    assert!((w[0] - 1.0 / (1.0 + e)).abs() < 1e-12);
    assert!((w[1] - e / (1.0 + e)).abs() < 1e-12);
    let inf = [f64::INFINITY; 2];
    unsafe {
        assert_eq!(mppi_compute_weights(inf.as_ptr(), 2, 1.0, w.as_mut_ptr()), MppiStatus::PlanningFailure);
    }
}

#[test]
fn experiment_returns_summary_json() {
    let cfg = CString::new(HOPPER).unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(mppi_run_experiment(cfg.as_ptr(), &mut out), MppiStatus::Ok);
        let json = CStr::from_ptr(out).to_str().unwrap().to_owned();
        mppi_string_free(out);
        let v: Vec<serde_json::Value> = serde_json::from_str(&json).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0]["steps"], 5);
        assert_eq!(v[0]["env"], "planar_hopper");
    }
}

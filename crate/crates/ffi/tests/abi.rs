use std::ffi::CStr;
use std::ptr;

use nmmetro::dynamics::Parameter;
use nmmetro_ffi::*;

fn model(rabi: f64) -> *mut NmModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { nm_model_new(0.4, 0.6, rabi, 1.0, 2.0, &mut m) }, NmStatus::Ok);
    assert!(!m.is_null());
    m
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(nm_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn round_trip_matches_core() {
    let m = model(5.0);
    let amps = [3.0, -2.0, 0.5, 7.0];
    let mut t = ptr::null_mut();
    let st = unsafe { nm_propagate(m, 0.2, 0.4, amps.as_ptr(), amps.len(), 100, &mut t) };
    assert_eq!(st, NmStatus::Ok);
    let n = unsafe { nm_trajectory_len(t) };
    assert_eq!(n, 101);

    let mut times = vec![0.0; n];
    let mut qfi = vec![0.0; n];
    let mut conc = vec![0.0; n];
    unsafe {
        assert_eq!(nm_trajectory_times(t, times.as_mut_ptr(), n), NmStatus::Ok);
        assert_eq!(nm_trajectory_qfi(t, NmParameter::Width, qfi.as_mut_ptr(), n), NmStatus::Ok);
        assert_eq!(nm_trajectory_concurrence(t, conc.as_mut_ptr(), n), NmStatus::Ok);
    }
    assert_eq!(times[0], 0.0);
    assert!((times[n - 1] - 2.0).abs() < 1e-12);

    let core_m = nmmetro::ModelParams::new(0.4, 0.6, 5.0, 1.0, 2.0).unwrap();
    let pulse = nmmetro::dynamics::ControlPulse::new(amps.to_vec(), 2.0).unwrap();
    let x0 = nmmetro::InitialStateParam::new(0.2, 0.4).unwrap().amplitudes();
    let tags = [Parameter::Rabi, Parameter::Width, Parameter::Phase];
    let traj = nmmetro::dynamics::propagate(&core_m, &x0, &pulse, 100, &tags).unwrap();
    let expect = nmmetro::metrology::qfi_curve(&traj, Parameter::Width).unwrap();
    assert_eq!(qfi, expect.values);
    let expect_c: Vec<f64> = traj.states.iter().map(nmmetro::entanglement::concurrence_closed).collect();
    assert_eq!(conc, expect_c);

    unsafe {
        nm_trajectory_free(t);
        nm_model_free(m);
    }
}

#[test]
fn errors_are_reported_not_thrown() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { nm_model_new(0.4, 0.6, 5.0, -1.0, 2.0, &mut m) }, NmStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(last_error().contains("lambda"), "{}", last_error());
    assert_eq!(unsafe { nm_model_new(0.4, 0.6, 5.0, 1.0, 2.0, ptr::null_mut()) }, NmStatus::NullPointer);

    let m = model(5.0);
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { nm_propagate(m, 1.5, 0.0, ptr::null(), 0, 10, &mut t) }, NmStatus::InvalidArgument);
    assert_eq!(unsafe { nm_propagate(m, 0.0, 0.0, ptr::null(), 3, 10, &mut t) }, NmStatus::NullPointer);
    assert_eq!(unsafe { nm_propagate(m, 0.0, 0.0, ptr::null(), 0, 10, &mut t) }, NmStatus::Ok);

    let mut small = [0.0; 4];
    assert_eq!(unsafe { nm_trajectory_times(t, small.as_mut_ptr(), small.len()) }, NmStatus::BufferTooSmall);
    assert_eq!(unsafe { nm_trajectory_times(t, ptr::null_mut(), 11) }, NmStatus::NullPointer);
    assert_eq!(unsafe { nm_trajectory_times(ptr::null(), small.as_mut_ptr(), 4) }, NmStatus::NullPointer);
    assert_eq!(unsafe { nm_trajectory_len(ptr::null()) }, 0);

    let needed = unsafe { nm_last_error_message(ptr::null_mut(), 0) };
    assert!(needed > 0);
    let mut tiny = [1 as std::ffi::c_char; 4];
    assert_eq!(unsafe { nm_last_error_message(tiny.as_mut_ptr(), tiny.len()) }, needed);
    assert_eq!(tiny[3], 0);

    unsafe {
        nm_trajectory_free(t);
        nm_model_free(m);
        nm_trajectory_free(ptr::null_mut());
        nm_model_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_abi() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/nmmetro.h")).unwrap();
    for sym in [
        "NMMETRO_H",
        "NM_STATUS_OK",
        "NM_STATUS_PANIC",
        "NM_PARAMETER_WIDTH",
        "typedef struct NmModel NmModel",
        "typedef struct NmTrajectory NmTrajectory",
        "nm_model_new",
        "nm_model_free",
        "nm_propagate",
        "nm_trajectory_len",
        "nm_trajectory_times",
        "nm_trajectory_qfi",
        "nm_trajectory_concurrence",
        "nm_trajectory_free",
        "nm_last_error_message",
        "nm_version",
    ] {
        assert!(header.contains(sym), "missing {sym}");
    }
}

use boussinesq::Error;
use boussinesq_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn last_error() -> String {
    let p = bsq_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn status_codes_match_the_core_errors() {
    let cases = [
        (Error::GridTooSmall { nx: 1, ny: 1 }, BSQ_GRID_TOO_SMALL),
        (
            Error::InvalidParameter(String::new()),
            BSQ_INVALID_PARAMETER,
        ),
        (Error::ShapeMismatch(String::new()), BSQ_SHAPE_MISMATCH),
        (Error::Incompatible { flux: 0.0 }, BSQ_INCOMPATIBLE),
        (Error::NotSolenoidal { norm: 0.0 }, BSQ_NOT_SOLENOIDAL),
        (Error::Singular(String::new()), BSQ_SINGULAR),
        (
            Error::Cfl {
                cfl: 0.0,
                suggested: 0.0,
            },
            BSQ_CFL,
        ),
        (Error::TooLarge(String::new()), BSQ_TOO_LARGE),
        (Error::NotAnalytic(String::new()), BSQ_NOT_ANALYTIC),
        (Error::Method(String::new()), BSQ_METHOD),
        (
            Error::Config {
                line: 1,
                msg: String::new(),
            },
            BSQ_CONFIG,
        ),
        (Error::Checkpoint(String::new()), BSQ_CHECKPOINT),
        (Error::Io(std::io::Error::other("x")), BSQ_IO),
        (Error::Inconsistent(String::new()), BSQ_INCONSISTENT),
    ];
    for (e, code) in cases {
        assert_eq!(e.code(), code, "{e}");
    }
}

#[test]
fn grid_projection_round_trip() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(bsq_grid_new(8, 6, 1.0, 0.75, &mut g), BSQ_OK);
        assert!(bsq_last_error().is_null());
        let (mut nu, mut nv) = (0, 0);
        assert_eq!(bsq_grid_velocity_len(g, &mut nu, &mut nv), BSQ_OK);
        assert_eq!((nu, nv), (9 * 6, 8 * 7));
        let mut u: Vec<f64> = (0..nu).map(|k| ((k * 7919) % 13) as f64 - 6.0).collect();
        let mut v: Vec<f64> = (0..nv).map(|k| ((k * 104729) % 11) as f64 - 5.0).collect();
        let mut div = 0.0;
        assert_eq!(
            bsq_grid_project(g, u.as_mut_ptr(), nu, v.as_mut_ptr(), nv),
            BSQ_OK
        );
        assert_eq!(
            bsq_grid_max_divergence(g, u.as_ptr(), nu, v.as_ptr(), nv, &mut div),
            BSQ_OK
        );
        assert!(div < 1e-10, "{div:e}");
        let once = (u.clone(), v.clone());
        assert_eq!(
            bsq_grid_project(g, u.as_mut_ptr(), nu, v.as_mut_ptr(), nv),
            BSQ_OK
        );
        let drift = u
            .iter()
            .chain(&v)
            .zip(once.0.iter().chain(&once.1))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(drift < 1e-12);

        assert_eq!(
            bsq_grid_project(g, u.as_mut_ptr(), nu - 1, v.as_mut_ptr(), nv),
            BSQ_SHAPE_MISMATCH
        );
        assert!(last_error().contains("entries"));
        assert_eq!(
            bsq_grid_project(g, ptr::null_mut(), nu, v.as_mut_ptr(), nv),
            BSQ_NULL_POINTER
        );
        bsq_grid_free(g);
        bsq_grid_free(ptr::null_mut());

        let mut small = ptr::null_mut();
        assert_eq!(bsq_grid_new(3, 8, 1.0, 1.0, &mut small), BSQ_GRID_TOO_SMALL);
        assert!(small.is_null());
        assert_eq!(
            bsq_grid_new(8, 8, 1.0, 1.0, ptr::null_mut()),
            BSQ_NULL_POINTER
        );
    }
}

#[test]
fn config_errors_carry_the_line() {
    let text = CString::new("[grid]\nnx = 8\n[time]\ndt = -1\nt_end = 1\n").unwrap();
    let mut cfg = ptr::null_mut();
    unsafe {
        assert_eq!(bsq_config_parse(text.as_ptr(), &mut cfg), BSQ_CONFIG);
        assert!(cfg.is_null());
        assert!(last_error().contains("line 4"), "{}", last_error());
        assert_eq!(bsq_config_parse(ptr::null(), &mut cfg), BSQ_NULL_POINTER);
        let bad = [0xffu8, 0];
        assert_eq!(
            bsq_config_parse(bad.as_ptr().cast(), &mut cfg),
            BSQ_INVALID_UTF8
        );
    }
}

#[test]
fn scenario_through_the_c_api() {
    let dir = tempfile::tempdir().unwrap();
    let text = CString::new(
        "[grid]\nnx = 8\n[time]\ndt = 0.01\nt_end = 0.05\n[physics]\nlambda0 = 0\n[initial]\ngenerator = random\n\
         [checks]\nsuites = finite, divergence, energy\n",
    )
    .unwrap();
    let out_dir = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(bsq_config_parse(text.as_ptr(), &mut cfg), BSQ_OK);
        assert_eq!(bsq_config_set_output(cfg, out_dir.as_ptr()), BSQ_OK);
        let mut rep = ptr::null_mut();
        assert_eq!(
            bsq_run(cfg, BsqCommand::Scenario, &mut rep),
            BSQ_OK,
            "{}",
            last_error()
        );
        let mut passed = false;
        assert_eq!(bsq_report_passed(rep, &mut passed), BSQ_OK);
        assert!(passed);
        let mut n = 0;
        assert_eq!(bsq_report_check_count(rep, &mut n), BSQ_OK);
        assert_eq!(n, 3);
        let mut names = Vec::new();
        for k in 0..n {
            let mut c = BsqCheck {
                name: ptr::null(),
                passed: false,
                value: 0.0,
                tolerance: 0.0,
            };
            assert_eq!(bsq_report_check(rep, k, &mut c), BSQ_OK);
            assert!(c.passed && c.value <= c.tolerance);
            names.push(CStr::from_ptr(c.name).to_string_lossy().into_owned());
            bsq_string_free(c.name.cast_mut());
        }
        assert_eq!(names, ["finite", "divergence", "energy-nonincreasing"]);
        let mut c = BsqCheck {
            name: ptr::null(),
            passed: false,
            value: 0.0,
            tolerance: 0.0,
        };
        assert_eq!(bsq_report_check(rep, n, &mut c), BSQ_OUT_OF_RANGE);

        let key = CString::new("final_energy").unwrap();
        let mut e = -1.0;
        assert_eq!(bsq_report_norm(rep, key.as_ptr(), &mut e), BSQ_OK);
        assert!(e > 0.0);
        let missing = CString::new("nope").unwrap();
        assert_eq!(
            bsq_report_norm(rep, missing.as_ptr(), &mut e),
            BSQ_OUT_OF_RANGE
        );

        let mut json = ptr::null_mut();
        assert_eq!(bsq_report_json(rep, &mut json), BSQ_OK);
        let v: serde_json::Value =
            serde_json::from_str(&CStr::from_ptr(json).to_string_lossy()).unwrap();
        assert!(v["checks"].is_array());
        bsq_string_free(json);

        let ck = CString::new(dir.path().join("trajectory.bspl").to_str().unwrap()).unwrap();
        let mut ok = false;
        assert_eq!(bsq_check_checkpoint(ck.as_ptr(), 1e-9, &mut ok), BSQ_OK);
        assert!(ok);
        let gone = CString::new(dir.path().join("none.bspl").to_str().unwrap()).unwrap();
        assert_eq!(bsq_check_checkpoint(gone.as_ptr(), 1e-9, &mut ok), BSQ_IO);

        bsq_report_free(rep);
        bsq_config_free(cfg);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(bsq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

//! Exercises the C ABI the way a foreign binding would: create handles,
//! run estimators, read buffers, and check the error-reporting paths.

use std::ffi::{CStr, CString};
use std::ptr;

use occgrid_ffi::*;

fn checkerboard_bits(nx: usize, ny: usize) -> Vec<u8> {
    (0..nx * ny)
        .map(|i| ((i / nx + i % nx).is_multiple_of(2)) as u8)
        .collect()
}

fn default_params() -> OccgridMethodParams {
    let mut params = std::mem::MaybeUninit::<OccgridMethodParams>::uninit();
    let status = unsafe { occgrid_method_params_default(params.as_mut_ptr()) };
    assert_eq!(status, OccgridStatus::Ok);
    unsafe { params.assume_init() }
}

fn generate_toy_handle(seed: u64) -> *mut OccgridScenario {
    let truth = checkerboard_bits(4, 4);
    let mut scenario: *mut OccgridScenario = ptr::null_mut();
    let status = unsafe {
        occgrid_scenario_generate_toy(
            4,
            4,
            0.5,
            0.0,
            0.0,
            truth.as_ptr(),
            0.8,
            0.08,
            15,
            9,
            seed,
            &mut scenario,
        )
    };
    assert_eq!(status, OccgridStatus::Ok);
    assert!(!scenario.is_null());
    scenario
}

#[test]
fn version_is_a_nul_terminated_string() {
    let version = unsafe { CStr::from_ptr(occgrid_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn toy_round_trip_through_the_abi() {
    let scenario = generate_toy_handle(42);

    let mut cells = 0usize;
    let mut pings = 0usize;
    unsafe {
        assert_eq!(occgrid_scenario_cells(scenario, &mut cells), OccgridStatus::Ok);
        assert_eq!(occgrid_scenario_pings(scenario, &mut pings), OccgridStatus::Ok);
    }
    assert_eq!(cells, 16);
    assert_eq!(pings, 15);

    let mut truth = vec![0u8; cells];
    let status = unsafe { occgrid_scenario_truth(scenario, truth.as_mut_ptr(), cells) };
    assert_eq!(status, OccgridStatus::Ok);
    assert_eq!(truth, checkerboard_bits(4, 4));

    let mut params = default_params();
    params.transition = OccgridTransition::InfluenceDecay;
    params.alpha = 5.0;

    let method = CString::new("gf").unwrap();
    let mut field: *mut OccgridField = ptr::null_mut();
    let status = unsafe { occgrid_run(scenario, method.as_ptr(), &params, &mut field) };
    assert_eq!(status, OccgridStatus::Ok);

    let mut len = 0usize;
    unsafe {
        assert_eq!(occgrid_field_len(field, &mut len), OccgridStatus::Ok);
    }
    assert_eq!(len, cells);
    let mut probs = vec![0.0f64; len];
    let status = unsafe { occgrid_field_values(field, probs.as_mut_ptr(), len) };
    assert_eq!(status, OccgridStatus::Ok);
    for (&p, &t) in probs.iter().zip(truth.iter()) {
        assert!((0.0..=1.0).contains(&p));
        // the checkerboard converges hard, so the field tracks the truth
        assert_eq!(p > 0.5, t == 1, "probability {} for truth {}", p, t);
    }

    let mut rho = 0.0f64;
    let mut distance = 0.0f64;
    let status = unsafe { occgrid_metrics(scenario, field, &mut rho, &mut distance) };
    assert_eq!(status, OccgridStatus::Ok);
    assert!(rho > 0.99, "rho = {}", rho);
    assert!(distance < 0.1, "sjsd = {}", distance);

    unsafe {
        occgrid_field_free(field);
        occgrid_scenario_free(scenario);
    }
}

#[test]
fn scenario_files_round_trip_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("sc.txt").to_str().unwrap()).unwrap();

    let scenario = generate_toy_handle(7);
    unsafe {
        assert_eq!(occgrid_scenario_save(scenario, path.as_ptr()), OccgridStatus::Ok);
    }
    let mut reloaded: *mut OccgridScenario = ptr::null_mut();
    let status = unsafe { occgrid_scenario_load(path.as_ptr(), &mut reloaded) };
    assert_eq!(status, OccgridStatus::Ok);

    let mut cells = 0usize;
    unsafe {
        assert_eq!(occgrid_scenario_cells(reloaded, &mut cells), OccgridStatus::Ok);
    }
    assert_eq!(cells, 16);
    unsafe {
        occgrid_scenario_free(reloaded);
        occgrid_scenario_free(scenario);
    }
}

#[test]
fn field_renders_to_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = generate_toy_handle(3);
    let mut params = default_params();
    params.transition = OccgridTransition::InfluenceDecay;
    let method = CString::new("im").unwrap();
    let mut field: *mut OccgridField = ptr::null_mut();
    unsafe {
        assert_eq!(
            occgrid_run(scenario, method.as_ptr(), &params, &mut field),
            OccgridStatus::Ok
        );
    }
    let pgm = dir.path().join("field.pgm");
    let path = CString::new(pgm.to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(occgrid_field_save_pgm(field, path.as_ptr()), OccgridStatus::Ok);
        occgrid_field_free(field);
        occgrid_scenario_free(scenario);
    }
    let bytes = std::fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5\n4 4\n255\n"));
    assert_eq!(bytes.len(), 11 + 16);
}

#[test]
fn error_paths_report_status_and_message() {
    // null pointers
    let status = unsafe { occgrid_scenario_load(ptr::null(), ptr::null_mut()) };
    assert_eq!(status, OccgridStatus::NullPointer);

    // unknown method
    let scenario = generate_toy_handle(1);
    let params = default_params();
    let method = CString::new("magic").unwrap();
    let mut field: *mut OccgridField = ptr::null_mut();
    let status = unsafe { occgrid_run(scenario, method.as_ptr(), &params, &mut field) };
    assert_eq!(status, OccgridStatus::InvalidArgument);
    let message = unsafe { CStr::from_ptr(occgrid_last_error_message()) };
    assert!(
        message.to_str().unwrap().contains("magic"),
        "message: {:?}",
        message
    );

    // capacity: a joint over more cells than the cap allows
    let big_truth = [0u8; 36];
    let mut big: *mut OccgridScenario = ptr::null_mut();
    let status = unsafe {
        occgrid_scenario_generate_toy(
            6,
            6,
            0.5,
            0.0,
            0.0,
            big_truth.as_ptr(),
            0.8,
            0.08,
            1,
            4,
            5,
            &mut big,
        )
    };
    assert_eq!(status, OccgridStatus::Ok);
    let gf = CString::new("gf").unwrap();
    let status = unsafe { occgrid_run(big, gf.as_ptr(), &params, &mut field) };
    assert_eq!(status, OccgridStatus::Capacity);

    // missing file
    let missing = CString::new("/nonexistent/scenario.txt").unwrap();
    let mut handle: *mut OccgridScenario = ptr::null_mut();
    let status = unsafe { occgrid_scenario_load(missing.as_ptr(), &mut handle) };
    assert_eq!(status, OccgridStatus::Io);

    // wrong buffer size
    let mut tiny = vec![0.0f64; 3];
    let method = CString::new("im").unwrap();
    let mut params = default_params();
    params.transition = OccgridTransition::InfluenceDecay;
    let mut field: *mut OccgridField = ptr::null_mut();
    unsafe {
        assert_eq!(
            occgrid_run(scenario, method.as_ptr(), &params, &mut field),
            OccgridStatus::Ok
        );
        assert_eq!(
            occgrid_field_values(field, tiny.as_mut_ptr(), tiny.len()),
            OccgridStatus::InvalidArgument
        );
        occgrid_field_free(field);
        occgrid_scenario_free(scenario);
        occgrid_scenario_free(big);
    }
}

#[test]
fn generated_header_is_valid_c() {
    let header_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = header_dir.join("occgrid.h");
    assert!(header.exists(), "build script did not emit the header");
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in [
        "occgrid_scenario_load",
        "occgrid_run",
        "occgrid_field_values",
        "occgrid_last_error_message",
        "OCCGRID_STATUS_CAPACITY",
    ] {
        assert!(text.contains(symbol), "header misses {}", symbol);
    }

    // compile a translation unit against the header when a C compiler is
    // around (the build containers have one)
    let dir = tempfile::tempdir().unwrap();
    let main_c = dir.path().join("smoke.c");
    std::fs::write(
        &main_c,
        "#include \"occgrid.h\"\nint main(void) { return (int) occgrid_version()[0] == 0; }\n",
    )
    .unwrap();
    match std::process::Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-I")
        .arg(&header_dir)
        .arg(&main_c)
        .output()
    {
        Ok(output) => assert!(
            output.status.success(),
            "cc rejected the header: {}",
            String::from_utf8_lossy(&output.stderr)
        ),
        Err(_) => eprintln!("no C compiler available; skipped the syntax check"),
    }
}

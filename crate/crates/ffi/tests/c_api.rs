use std::ffi::{c_char, CStr, CString};
use std::ptr;

use fps_sft_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { fps_last_error_message(buf.as_mut_ptr(), buf.len()) };
    if n == 0 {
        return String::new();
    }
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn generate_recover_and_compare() {
    unsafe {
        let dims = [16usize, 12];
        let placement = CString::new("uniform").unwrap();
        let mut truth = ptr::null_mut();
        assert_eq!(
            fps_generate(dims.as_ptr(), 2, 10, placement.as_ptr(), 7, &mut truth),
            FpsStatus::Ok
        );
        assert_eq!(fps_spectrum_len(truth), 10);

        let mut report = ptr::null_mut();
        assert_eq!(fps_recover(truth, FpsAlgorithm::Fps, 3, 0, &mut report), FpsStatus::Ok);
        let iterations = fps_report_iterations(report);
        assert!(iterations >= 1);
        assert_eq!(fps_report_samples_used(report), (iterations * 3 * 48) as u64);
        let mut why = FpsTermination::Stall;
        assert_eq!(fps_report_termination(report, &mut why), FpsStatus::Ok);
        assert_eq!(why, FpsTermination::ResidualClean);

        let mut recovered = ptr::null_mut();
        assert_eq!(fps_report_recovered(report, &mut recovered), FpsStatus::Ok);
        assert_eq!(fps_spectrum_matches(recovered, truth, 1e-8), 1);

        fps_spectrum_free(recovered);
        fps_report_free(report);
        fps_spectrum_free(truth);
    }
}

#[test]
fn build_read_and_text_round_trip() {
    unsafe {
        let dims = [8usize, 8];
        let mut s = ptr::null_mut();
        assert_eq!(fps_spectrum_new(dims.as_ptr(), 2, &mut s), FpsStatus::Ok);
        assert_eq!(
            fps_spectrum_insert(s, [5usize, 1].as_ptr(), 2, 0.5, -1.0),
            FpsStatus::Ok
        );
        assert_eq!(fps_spectrum_insert(s, [2usize, 7].as_ptr(), 2, 1.0, 0.0), FpsStatus::Ok);
        assert_eq!(fps_spectrum_len(s), 2);
        assert_eq!(fps_spectrum_ndim(s), 2);

        let mut freq = [0usize; 2];
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(
            fps_spectrum_get(s, 0, freq.as_mut_ptr(), 2, &mut re, &mut im),
            FpsStatus::Ok
        );
        assert_eq!((freq, re, im), ([2, 7], 1.0, 0.0));
        assert_eq!(
            fps_spectrum_get(s, 2, freq.as_mut_ptr(), 2, &mut re, &mut im),
            FpsStatus::OutOfRange
        );

        let text = fps_spectrum_to_text(s);
        let mut back = ptr::null_mut();
        assert_eq!(fps_spectrum_parse(text, &mut back), FpsStatus::Ok);
        assert_eq!(fps_spectrum_matches(back, s, 0.0), 1);

        fps_string_free(text);
        fps_spectrum_free(back);
        fps_spectrum_free(s);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(
            fps_spectrum_new([4usize, 0].as_ptr(), 2, &mut s),
            FpsStatus::InvalidArgument
        );
        assert!(last_error().contains("shape"), "{}", last_error());

        assert_eq!(fps_spectrum_new(ptr::null(), 2, &mut s), FpsStatus::NullPointer);
        assert_eq!(
            fps_spectrum_new([4usize, 4].as_ptr(), 2, ptr::null_mut()),
            FpsStatus::NullPointer
        );

        assert_eq!(fps_spectrum_new([4usize, 4].as_ptr(), 2, &mut s), FpsStatus::Ok);
        assert_eq!(last_error(), "");
        assert_eq!(
            fps_spectrum_insert(s, [4usize, 0].as_ptr(), 2, 1.0, 0.0),
            FpsStatus::OutOfRange
        );

        let bad = CString::new("not a spectrum").unwrap();
        let mut parsed = ptr::null_mut();
        assert_eq!(fps_spectrum_parse(bad.as_ptr(), &mut parsed), FpsStatus::Parse);
        assert!(parsed.is_null());

        let mut report = ptr::null_mut();
        assert_eq!(fps_recover(s, FpsAlgorithm::Baseline, 0, 0, &mut report), FpsStatus::Ok);
        fps_report_free(report);
        let mut odd = ptr::null_mut();
        fps_spectrum_new([6usize, 6].as_ptr(), 2, &mut odd);
        assert_eq!(
            fps_recover(odd, FpsAlgorithm::Baseline, 0, 0, &mut report),
            FpsStatus::Unsupported
        );

        let clustered = CString::new("clustered4").unwrap();
        assert_eq!(
            fps_generate([16usize, 16].as_ptr(), 2, 9, clustered.as_ptr(), 0, &mut parsed),
            FpsStatus::InvalidArgument
        );

        let mut tiny = [0 as c_char; 4];
        let full = fps_last_error_message(tiny.as_mut_ptr(), tiny.len());
        assert!(full > 3);
        assert_eq!(CStr::from_ptr(tiny.as_ptr()).to_bytes().len(), 3);

        fps_spectrum_free(odd);
        fps_spectrum_free(s);
        fps_spectrum_free(ptr::null_mut());
        fps_report_free(ptr::null_mut());
        assert_eq!(fps_spectrum_len(ptr::null()), 0);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fps_sft.h")).unwrap();
    for name in [
        "fps_last_error_message",
        "fps_spectrum_new",
        "fps_spectrum_free",
        "fps_spectrum_insert",
        "fps_spectrum_len",
        "fps_spectrum_get",
        "fps_spectrum_parse",
        "fps_spectrum_to_text",
        "fps_string_free",
        "fps_generate",
        "fps_recover",
        "fps_report_free",
        "fps_report_iterations",
        "fps_report_samples_used",
        "fps_report_termination",
        "fps_report_recovered",
        "fps_spectrum_matches",
        "typedef struct FpsSpectrum FpsSpectrum",
        "FPS_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let Ok(exe) = std::env::current_exe() else { return };
    let profile_dir = exe.parent().and_then(|deps| deps.parent()).unwrap();
    let lib = profile_dir.join("libfps_sft_ffi.a");
    if !lib.exists() || std::process::Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("recover_c");
    let root = env!("CARGO_MANIFEST_DIR");
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(format!("{root}/include"))
        .arg(format!("{root}/c/recover.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("exact=1"));
}

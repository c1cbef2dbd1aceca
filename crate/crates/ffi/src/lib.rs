//! C ABI over the token-merging engine.
//!
//! Conventions: handles are opaque pointers created and destroyed by this
//! library; every fallible call returns a `StimStatus`; the last error message
//! is kept per thread and read back with `stim_last_error`. Strings returned
//! by the library are freed with `stim_string_free`, never with `free()`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use stim_core::encoder::{build_encoder, Encoder};
use stim_core::error::Error;
use stim_core::experiment::{run_experiment, ExperimentConfig};
use stim_core::video::Video;
use stim_core::{MergeOptions, MergeSchedule, ModelConfig};

/// Result codes for every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum StimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    RuntimeError = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(sanitized).unwrap());
}

fn status_of(err: &Error) -> StimStatus {
    match err {
        Error::InvalidConfig(_)
        | Error::InvalidSchedule(_)
        | Error::InvalidSynthSpec(_)
        | Error::Json(_) => StimStatus::ConfigError,
        _ => StimStatus::RuntimeError,
    }
}

fn fail(err: Error) -> StimStatus {
    let status = status_of(&err);
    set_error(&err.to_string());
    status
}

/// Pointer to the calling thread's last error message; valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn stim_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, StimStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(StimStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        StimStatus::InvalidUtf8
    })
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap().into_raw()
}

/// Free a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn stim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Opaque encoder handle.
pub struct StimEncoder {
    inner: Encoder,
}

/// Build a deterministic encoder from a model-config JSON document.
/// Returns null on error; see `stim_last_error`.
#[no_mangle]
pub unsafe extern "C" fn stim_encoder_new(
    model_json: *const c_char,
    seed: u64,
) -> *mut StimEncoder {
    let text = match read_str(model_json) {
        Ok(t) => t,
        Err(_) => return ptr::null_mut(),
    };
    let config: ModelConfig = match serde_json::from_str(text) {
        Ok(c) => c,
        Err(e) => {
            set_error(&e.to_string());
            return ptr::null_mut();
        }
    };
    match build_encoder(&config, seed) {
        Ok(inner) => Box::into_raw(Box::new(StimEncoder { inner })),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

#[no_mangle]
pub unsafe extern "C" fn stim_encoder_free(handle: *mut StimEncoder) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Tokenize a raw `[T][H][W][3]` f64 clip and run the encoder under a merge
/// schedule. `frame_len` must equal `T*H*W*3` for the handle's model config.
/// On success the merged token counts are written to `out_n_t` / `out_n_s`.
#[no_mangle]
pub unsafe extern "C" fn stim_encoder_forward(
    handle: *const StimEncoder,
    frames: *const f64,
    frame_len: usize,
    schedule_json: *const c_char,
    options_json: *const c_char,
    out_n_t: *mut usize,
    out_n_s: *mut usize,
) -> StimStatus {
    if handle.is_null() || frames.is_null() || out_n_t.is_null() || out_n_s.is_null() {
        set_error("null argument");
        return StimStatus::NullPointer;
    }
    let enc = &(*handle).inner;
    let schedule: MergeSchedule = match read_str(schedule_json)
        .and_then(|t| serde_json::from_str(t).map_err(|e| fail(Error::Json(e))))
    {
        Ok(s) => s,
        Err(status) => return status,
    };
    let options: MergeOptions = if options_json.is_null() {
        MergeOptions::default()
    } else {
        match read_str(options_json)
            .and_then(|t| serde_json::from_str(t).map_err(|e| fail(Error::Json(e))))
        {
            Ok(o) => o,
            Err(status) => return status,
        }
    };
    let cfg = &enc.config;
    let expected = cfg.frames * cfg.height * cfg.width * 3;
    if frame_len != expected {
        set_error(&format!(
            "frame buffer holds {frame_len} values, expected {expected}"
        ));
        return StimStatus::ConfigError;
    }
    let data = std::slice::from_raw_parts(frames, frame_len).to_vec();
    let video = match Video::from_data(cfg.frames, cfg.height, cfg.width, data) {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    let result = enc
        .tokenize(&video)
        .and_then(|grid| enc.forward(&grid, &schedule, &options));
    match result {
        Ok(out) => {
            *out_n_t = out.grid.n_t;
            *out_n_s = out.grid.n_s;
            StimStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Run a full experiment from an `ExperimentConfig` JSON document and return
/// the JSON report. The caller owns the string (`stim_string_free`).
#[no_mangle]
pub unsafe extern "C" fn stim_run_experiment(
    config_json: *const c_char,
    out_report: *mut *mut c_char,
) -> StimStatus {
    if out_report.is_null() {
        set_error("null out_report");
        return StimStatus::NullPointer;
    }
    *out_report = ptr::null_mut();
    let text = match read_str(config_json) {
        Ok(t) => t,
        Err(status) => return status,
    };
    let config: ExperimentConfig = match serde_json::from_str(text) {
        Ok(c) => c,
        Err(e) => return fail(Error::Json(e)),
    };
    match run_experiment(&config) {
        Ok(report) => {
            let bytes = stim_core::report::to_bytes(&report);
            *out_report = to_c_string(String::from_utf8(bytes).expect("report is UTF-8"));
            StimStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Evaluate the analytic cost model for a model + schedule pair (both JSON)
/// and return the cost report as JSON.
#[no_mangle]
pub unsafe extern "C" fn stim_cost_report(
    model_json: *const c_char,
    schedule_json: *const c_char,
    out_report: *mut *mut c_char,
) -> StimStatus {
    if out_report.is_null() {
        set_error("null out_report");
        return StimStatus::NullPointer;
    }
    *out_report = ptr::null_mut();
    let model: ModelConfig = match read_str(model_json)
        .and_then(|t| serde_json::from_str(t).map_err(|e| fail(Error::Json(e))))
    {
        Ok(m) => m,
        Err(status) => return status,
    };
    let schedule: MergeSchedule = match read_str(schedule_json)
        .and_then(|t| serde_json::from_str(t).map_err(|e| fail(Error::Json(e))))
    {
        Ok(s) => s,
        Err(status) => return status,
    };
    match stim_core::cost::schedule_cost(&model, &schedule) {
        Ok(cost) => match serde_json::to_string(&cost) {
            Ok(s) => {
                *out_report = to_c_string(s);
                StimStatus::Ok
            }
            Err(e) => fail(Error::Json(e)),
        },
        Err(e) => fail(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn cstr(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    const MODEL: &str = r#"{"frames":4,"height":32,"width":32,"patch":16,"tubelet":1,
        "channels":16,"layers":2,"heads":2,"cls_enabled":true}"#;

    #[test]
    fn encoder_handle_lifecycle_and_forward() {
        let model = cstr(MODEL);
        let schedule =
            cstr(r#"{"layers":[{"kind":"temporal","r_t":1},{"kind":"spatial","r_s":1}]}"#);
        unsafe {
            let enc = stim_encoder_new(model.as_ptr(), 7);
            assert!(!enc.is_null());
            let frames = vec![0.25f64; 4 * 32 * 32 * 3];
            let (mut n_t, mut n_s) = (0usize, 0usize);
            let status = stim_encoder_forward(
                enc,
                frames.as_ptr(),
                frames.len(),
                schedule.as_ptr(),
                ptr::null(),
                &mut n_t,
                &mut n_s,
            );
            assert!(matches!(status, StimStatus::Ok));
            assert_eq!(n_t, 3);
            assert_eq!(n_s, 3);
            stim_encoder_free(enc);
        }
    }

    #[test]
    fn bad_json_sets_error_and_config_status() {
        let model = cstr("{nope");
        unsafe {
            let enc = stim_encoder_new(model.as_ptr(), 0);
            assert!(enc.is_null());
            let msg = CStr::from_ptr(stim_last_error()).to_str().unwrap();
            assert!(!msg.is_empty());
        }
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            let (mut n_t, mut n_s) = (0usize, 0usize);
            let status = stim_encoder_forward(
                ptr::null(),
                ptr::null(),
                0,
                ptr::null(),
                ptr::null(),
                &mut n_t,
                &mut n_s,
            );
            assert!(matches!(status, StimStatus::NullPointer));
        }
    }

    #[test]
    fn cost_report_roundtrip() {
        let model = cstr(
            r#"{"frames":16,"height":224,"width":224,"patch":16,"tubelet":1,
               "channels":768,"layers":12,"heads":12,"cls_enabled":true}"#,
        );
        let schedule_value: serde_json::Value =
            serde_json::to_value(MergeSchedule::temporal_then_spatial(12, 6, 1, 12, 2)).unwrap();
        let schedule = cstr(&schedule_value.to_string());
        unsafe {
            let mut out: *mut c_char = ptr::null_mut();
            let status = stim_cost_report(model.as_ptr(), schedule.as_ptr(), &mut out);
            assert!(matches!(status, StimStatus::Ok));
            let body = CStr::from_ptr(out).to_str().unwrap();
            let parsed: serde_json::Value = serde_json::from_str(body).unwrap();
            let ratio = parsed["ratio"].as_f64().unwrap();
            assert!((ratio - 0.654).abs() < 0.02, "ratio {ratio}");
            stim_string_free(out);
        }
    }

    #[test]
    fn run_experiment_via_ffi() {
        let cfg = cstr(
            r#"{
              "model": {"frames":4,"height":32,"width":32,"patch":16,"tubelet":1,
                        "channels":16,"layers":2,"heads":2,"cls_enabled":true},
              "schedule": {"layers":[{"kind":"none"},{"kind":"none"}]},
              "seed": 3,
              "input": {"kind":"synthetic","spec":{
                  "frames":4,"height":32,"width":32,"texture_seed":1,
                  "object_size":16,"velocity":[16.0,0.0],"trajectory":"linear",
                  "noise":0.0,"mask_patch":16,"start":[0,0]}}
            }"#,
        );
        unsafe {
            let mut out: *mut c_char = ptr::null_mut();
            let status = stim_run_experiment(cfg.as_ptr(), &mut out);
            assert!(
                matches!(status, StimStatus::Ok),
                "{:?}",
                CStr::from_ptr(stim_last_error())
            );
            let parsed: serde_json::Value =
                serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
            assert_eq!(parsed["schema"], 1);
            stim_string_free(out);
        }
    }
}

use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use rankjoin_ffi::*;

fn running_dir() -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/running");
    CString::new(p.to_str().unwrap()).unwrap()
}

const QUERY: &str = "Q(x,y,z,w,u) :- R1(x,y), R2(y,z), R3(z,w), R4(z,u)";

fn open(rank: &str) -> (RjStatus, *mut RjJob) {
    let q = CString::new(QUERY).unwrap();
    let rank = CString::new(rank).unwrap();
    let w = CString::new("w1").unwrap();
    let mut job = ptr::null_mut();
    let s = unsafe { rj_job_open(q.as_ptr(), running_dir().as_ptr(), rank.as_ptr(), w.as_ptr(), ptr::null(), &mut job) };
    (s, job)
}

fn last_error() -> String {
    let p = rj_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn drain(cursor: *mut RjCursor) -> Vec<String> {
    let mut out = Vec::new();
    let mut buf = [0 as c_char; 64];
    let mut len = 0usize;
    loop {
        match unsafe { rj_cursor_next_record(cursor, buf.as_mut_ptr(), buf.len(), &mut len) } {
            RjStatus::Ok => out.push(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned()),
            RjStatus::Exhausted => return out,
            s => panic!("unexpected status {s:?}"),
        }
    }
}

#[test]
fn enumerates_running_example() {
    let (s, job) = open("tuple_sum");
    assert_eq!(s, RjStatus::Ok);
    let mut cursor = ptr::null_mut();
    assert_eq!(unsafe { rj_cursor_open(job, &mut cursor) }, RjStatus::Ok);
    // the cursor keeps the job alive
    unsafe { rj_job_free(job) };
    let records = drain(cursor);
    let scores: Vec<&str> = records.iter().map(|r| r.split('\t').next().unwrap()).collect();
    assert_eq!(scores, ["4", "5", "7", "8", "8", "9", "11", "12"]);
    assert_eq!(records[0], "4\t1,1,1,1,1");
    assert_eq!(unsafe { rj_cursor_next_record(cursor, ptr::null_mut(), 0, ptr::null_mut()) }, RjStatus::Exhausted);
    unsafe { rj_cursor_free(cursor) };
}

#[test]
fn small_buffer_keeps_record() {
    let (_, job) = open("tuple_sum");
    let mut cursor = ptr::null_mut();
    unsafe { rj_cursor_open(job, &mut cursor) };
    let mut len = 0usize;
    let mut tiny = [0 as c_char; 4];
    let s = unsafe { rj_cursor_next_record(cursor, tiny.as_mut_ptr(), tiny.len(), &mut len) };
    assert_eq!(s, RjStatus::BufferTooSmall);
    assert_eq!(len, "4\t1,1,1,1,1".len() + 1);
    let mut buf = vec![0 as c_char; len];
    assert_eq!(unsafe { rj_cursor_next_record(cursor, buf.as_mut_ptr(), len, &mut len) }, RjStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "4\t1,1,1,1,1");
    unsafe {
        rj_cursor_free(cursor);
        rj_job_free(job);
    }
}

#[test]
fn errors_map_to_status() {
    let (s, job) = open("lex(nope)");
    assert_eq!(s, RjStatus::Invalid);
    assert!(job.is_null());
    assert!(last_error().contains("nope"));

    let q = CString::new(QUERY).unwrap();
    let missing = CString::new("/nonexistent/rankjoin").unwrap();
    let mut job = ptr::null_mut();
    let s = unsafe { rj_job_open(q.as_ptr(), missing.as_ptr(), ptr::null(), ptr::null(), ptr::null(), &mut job) };
    assert_eq!(s, RjStatus::Io);

    let s = unsafe { rj_job_open(ptr::null(), missing.as_ptr(), ptr::null(), ptr::null(), ptr::null(), &mut job) };
    assert_eq!(s, RjStatus::NullArgument);
    assert_eq!(unsafe { rj_cursor_open(ptr::null(), ptr::null_mut()) }, RjStatus::NullArgument);
}

#[test]
fn incompatible_bounded_plan() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("chain.td");
    std::fs::write(&d, "node 0: {x,y}\nnode 1: {y,z}\nnode 2: {z,w}\nnode 3: {z,u}\nroot 0\nedge 0 1\nedge 1 2\nedge 1 3\n").unwrap();
    let q = CString::new(QUERY).unwrap();
    let rank = CString::new("bounded(vertex_sum; w)").unwrap();
    let w = CString::new("w1").unwrap();
    let decomps = CString::new(d.to_str().unwrap()).unwrap();
    let mut job = ptr::null_mut();
    let s = unsafe { rj_job_open(q.as_ptr(), running_dir().as_ptr(), rank.as_ptr(), w.as_ptr(), decomps.as_ptr(), &mut job) };
    assert_eq!(s, RjStatus::Ok, "{}", last_error());
    let mut cursor = ptr::null_mut();
    assert_eq!(unsafe { rj_cursor_open(job, &mut cursor) }, RjStatus::Incompatible);
    assert!(cursor.is_null());
    unsafe { rj_job_free(job) };
}

#[test]
fn plan_report_and_version() {
    let (_, job) = open("tuple_sum");
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { rj_plan_report(job, &mut report) }, RjStatus::Ok);
    let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_owned();
    assert!(text.contains("width: 1"));
    unsafe {
        rj_string_free(report);
        rj_job_free(job);
    }
    let v = unsafe { CStr::from_ptr(rj_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_current() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/rankjoin.h")).unwrap();
    for f in ["rj_job_open", "rj_cursor_next_record", "rj_last_error_message", "RJ_STATUS_BUFFER_TOO_SMALL = 6"] {
        assert!(header.contains(f), "{f} missing from header");
    }
}

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<this test> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let libdir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    assert!(libdir.join("librankjoin_ffi.so").exists() || libdir.join("librankjoin_ffi.dylib").exists(), "cdylib not found in {libdir:?}");
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = std::process::Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&libdir)
        .arg("-lrankjoin_ffi")
        .arg("-o")
        .arg(&bin)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
    let out = std::process::Command::new(&bin)
        .arg(running_dir().to_str().unwrap())
        .env("LD_LIBRARY_PATH", &libdir)
        .env("DYLD_LIBRARY_PATH", &libdir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.starts_with("4\t1,1,1,1,1\n"));
}

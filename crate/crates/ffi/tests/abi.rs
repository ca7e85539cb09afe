use std::ffi::{CStr, CString};
use std::ptr;

use chosen_path_ffi::*;

fn build(points: &[&[u32]], reps: usize) -> *mut CpIndexHandle {
    let mut elements = Vec::new();
    let mut offsets = vec![0usize];
    for p in points {
        elements.extend_from_slice(p);
        offsets.push(elements.len());
    }
    let mut handle = ptr::null_mut();
    let status = unsafe {
        cp_index_build(elements.as_ptr(), offsets.as_ptr(), points.len(), 0.5, 0.25, reps, 7, &mut handle)
    };
    assert_eq!(status, CpStatus::Ok);
    assert!(!handle.is_null());
    handle
}

fn last_error() -> String {
    let p = cp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn build_query_save_load() {
    let points: [&[u32]; 3] = [&[1, 2, 3, 4], &[10, 11, 12, 13], &[20, 21, 22, 23]];
    let index = build(&points, 8);
    let mut len = 0;
    assert_eq!(unsafe { cp_index_len(index, &mut len) }, CpStatus::Ok);
    assert_eq!(len, 3);

    let mut r = CpQueryResult::default();
    let q = [10u32, 11, 12, 13];
    assert_eq!(unsafe { cp_index_query(index, q.as_ptr(), q.len(), &mut r) }, CpStatus::Ok);
    assert_eq!((r.found, r.id, r.similarity), (1, 1, 1.0));

    let q = [100u32, 200];
    assert_eq!(unsafe { cp_index_query(index, q.as_ptr(), q.len(), &mut r) }, CpStatus::Ok);
    assert_eq!(r.found, 0);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("i.cpix").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { cp_index_save(index, path.as_ptr()) }, CpStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { cp_index_load(path.as_ptr(), &mut loaded) }, CpStatus::Ok);
    let q = [1u32, 2, 3, 4];
    assert_eq!(unsafe { cp_index_query(loaded, q.as_ptr(), q.len(), &mut r) }, CpStatus::Ok);
    assert_eq!((r.found, r.id), (1, 0));
    unsafe {
        cp_index_free(index);
        cp_index_free(loaded);
        cp_index_free(ptr::null_mut());
    }
}

#[test]
fn errors_set_status_and_message() {
    let elements = [3u32, 2];
    let offsets = [0usize, 2];
    let mut handle = ptr::null_mut();
    let status = unsafe { cp_index_build(elements.as_ptr(), offsets.as_ptr(), 1, 0.5, 0.25, 0, 0, &mut handle) };
    assert_eq!(status, CpStatus::UnsortedSet);
    assert!(handle.is_null());
    assert!(last_error().contains("increasing"), "{}", last_error());

    let offsets = [0usize, 0];
    let status = unsafe { cp_index_build(elements.as_ptr(), offsets.as_ptr(), 1, 0.5, 0.25, 0, 0, &mut handle) };
    assert_eq!(status, CpStatus::EmptyPoint);

    let status = unsafe { cp_index_build(elements.as_ptr(), offsets.as_ptr(), 1, 0.5, 0.25, 0, 0, ptr::null_mut()) };
    assert_eq!(status, CpStatus::NullPointer);

    let mut len = 0;
    assert_eq!(unsafe { cp_index_len(ptr::null(), &mut len) }, CpStatus::NullPointer);

    let mut out = ptr::null_mut();
    let missing = CString::new("/nonexistent/dir/x.cpix").unwrap();
    assert_eq!(unsafe { cp_index_load(missing.as_ptr(), &mut out) }, CpStatus::Io);

    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk");
    std::fs::write(&junk, b"junk").unwrap();
    let junk = CString::new(junk.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { cp_index_load(junk.as_ptr(), &mut out) }, CpStatus::Snapshot);

    let mut rho = 0.0;
    assert_eq!(unsafe { cp_rho(0.2, 0.4, &mut rho) }, CpStatus::InvalidArgument);
    // a successful call clears the message
    assert_eq!(unsafe { cp_rho(0.4, 0.2, &mut rho) }, CpStatus::Ok);
    assert!(cp_last_error().is_null());
}

#[test]
fn similarity_and_rho() {
    let x = [1u32, 2, 3, 4];
    let y = [3u32, 4, 5, 6];
    let mut s = 0.0;
    let call = |m, out: &mut f64| unsafe { cp_similarity(m, x.as_ptr(), x.len(), y.as_ptr(), y.len(), out) };
    assert_eq!(call(CpMeasure::BraunBlanquet, &mut s), CpStatus::Ok);
    assert_eq!(s, 0.5);
    assert_eq!(call(CpMeasure::Jaccard, &mut s), CpStatus::Ok);
    assert!((s - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(
        unsafe { cp_similarity(CpMeasure::Jaccard, ptr::null(), 0, ptr::null(), 0, &mut s) },
        CpStatus::Undefined
    );

    let mut rho = 0.0;
    assert_eq!(unsafe { cp_rho(1.0 / 3.0, 2.0 / 11.0, &mut rho) }, CpStatus::Ok);
    assert!((rho - 0.6444).abs() < 5e-4);
    let v = unsafe { CStr::from_ptr(cp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

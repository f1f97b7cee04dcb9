use std::ffi::{CStr, CString};
use std::ptr;

use msp_ffi::*;

fn last_error() -> String {
    let p = msp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn tensor_f32(shape: &[usize], data: &[f32]) -> *mut MspTensor {
    let mut t = ptr::null_mut();
    let s = msp_tensor_new_f32(shape.as_ptr(), shape.len(), data.as_ptr(), data.len(), &mut t);
    assert_eq!(s, MspStatus::Ok);
    t
}

unsafe fn read_f32(t: *const MspTensor) -> Vec<f32> {
    let mut v = vec![0.0; msp_tensor_len(t)];
    assert_eq!(msp_tensor_copy_f32(t, v.as_mut_ptr(), v.len()), MspStatus::Ok);
    v
}

unsafe fn partition(h: usize, w: usize, labels: &[u32]) -> *mut MspPartition {
    let mut p = ptr::null_mut();
    assert_eq!(msp_partition_from_labels(h, w, labels.as_ptr(), labels.len(), &mut p), MspStatus::Ok);
    p
}

#[test]
fn ssp_forward_matches_fixture() {
    unsafe {
        let x = tensor_f32(&[1, 2, 2], &[1.0, 3.0, 5.0, 7.0]);
        let p = partition(2, 2, &[0, 0, 0, 0]);
        let mut y = ptr::null_mut();
        assert_eq!(msp_ssp_forward(x, p, 0.1, &mut y), MspStatus::Ok);
        assert_eq!(read_f32(y), vec![1.4, 3.4, 5.4, 7.4]);

        let mut g = ptr::null_mut();
        assert_eq!(msp_ssp_backward(y, p, 0.0, &mut g), MspStatus::Ok);
        assert_eq!(read_f32(g), read_f32(y));

        assert_eq!(msp_partition_num_blocks(p), 1);
        let mut dims = [0usize; 3];
        assert_eq!(msp_tensor_shape(y, dims.as_mut_ptr(), 3), MspStatus::Ok);
        assert_eq!(dims, [1, 2, 2]);
        let mut dt = MspDtype::U32;
        assert_eq!(msp_tensor_dtype(y, &mut dt), MspStatus::Ok);
        assert_eq!(dt, MspDtype::F32);

        for t in [x, y, g] {
            msp_tensor_free(t);
        }
        msp_partition_free(p);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut p = ptr::null_mut();
        // label 2 unused
        let s = msp_partition_from_labels(1, 3, [0u32, 0, 2].as_ptr(), 3, &mut p);
        assert_eq!(s, MspStatus::InvalidArgument);
        assert!(p.is_null());
        assert!(!last_error().is_empty());

        let mut t = ptr::null_mut();
        assert_eq!(msp_tensor_new_f32(ptr::null(), 2, ptr::null(), 0, &mut t), MspStatus::NullPointer);
        assert!(last_error().contains("shape"));

        let missing = CString::new("/nonexistent/dir/x.mspt").unwrap();
        assert_eq!(msp_tensor_read(missing.as_ptr(), &mut t), MspStatus::Io);

        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.mspt");
        std::fs::write(&bad, b"MSPX\x01\x00\x01\x01\x00\x00\x00").unwrap();
        let bad = CString::new(bad.to_str().unwrap()).unwrap();
        assert_eq!(msp_tensor_read(bad.as_ptr(), &mut t), MspStatus::Format);
        assert!(last_error().contains("byte"));

        let x = tensor_f32(&[1, 1, 2], &[1.0, 2.0]);
        let q = partition(1, 2, &[0, 1]);
        let mut y = ptr::null_mut();
        assert_eq!(msp_ssp_forward(x, q, 0.1, &mut y), MspStatus::Ok);
        assert!(msp_last_error().is_null());
        msp_tensor_free(y);
        msp_tensor_free(x);
        msp_partition_free(q);

        // freeing NULL is a no-op
        msp_tensor_free(ptr::null_mut());
        msp_trace_free(ptr::null_mut());
    }
}

#[test]
fn tensor_file_round_trip() {
    unsafe {
        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("t.mspt").to_str().unwrap()).unwrap();
        let shape = [3usize];
        let mut t = ptr::null_mut();
        assert_eq!(msp_tensor_new_u32(shape.as_ptr(), 1, [7u32, 8, 9].as_ptr(), 3, &mut t), MspStatus::Ok);
        assert_eq!(msp_tensor_write(t, path.as_ptr()), MspStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(msp_tensor_read(path.as_ptr(), &mut back), MspStatus::Ok);
        let mut v = [0u32; 3];
        assert_eq!(msp_tensor_copy_u32(back, v.as_mut_ptr(), 3), MspStatus::Ok);
        assert_eq!(v, [7, 8, 9]);
        assert_eq!(msp_tensor_copy_f32(back, ptr::null_mut(), 3), MspStatus::InvalidArgument);
        msp_tensor_free(t);
        msp_tensor_free(back);
    }
}

#[test]
fn slic_cascade_and_refine() {
    unsafe {
        let (h, w) = (32usize, 32usize);
        let rgb: Vec<u8> = (0..h * w)
            .flat_map(|p| if p % w < 16 { [220, 30, 30] } else { [30, 30, 220] })
            .collect();
        let mut img = ptr::null_mut();
        assert_eq!(msp_image_new(h, w, rgb.as_ptr(), rgb.len(), &mut img), MspStatus::Ok);

        let mut sp = ptr::null_mut();
        assert_eq!(msp_slic(img, 16, 10.0, &mut sp), MspStatus::Ok);
        let mut labels = vec![0u32; h * w];
        assert_eq!(msp_partition_copy_labels(sp, labels.as_mut_ptr(), labels.len()), MspStatus::Ok);
        assert_eq!(msp_partition_num_blocks(sp), 16);

        let mut qs = ptr::null_mut();
        assert_eq!(msp_quickshift(img, 5.0, 0.5, 0.5, &mut qs), MspStatus::Ok);
        assert_eq!(msp_partition_num_blocks(qs), h * w);

        let x: Vec<f32> = (0..2 * h * w).map(|i| (i % 7) as f32).collect();
        let xt = tensor_f32(&[2, h, w], &x);
        let scales = [4usize, 8];
        let (mut y, mut trace) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(msp_cascade_forward(xt, img, scales.as_ptr(), 2, 0.1, &mut y, &mut trace), MspStatus::Ok);
        assert_eq!(msp_trace_num_stages(trace), 2);
        let mut g = ptr::null_mut();
        assert_eq!(msp_cascade_backward(y, trace, 0.1, &mut g), MspStatus::Ok);
        assert_eq!(msp_tensor_len(g), 2 * h * w);

        let bad_scales = [8usize, 4];
        let (mut y2, mut trace2) = (ptr::null_mut(), ptr::null_mut());
        let s = msp_cascade_forward(xt, img, bad_scales.as_ptr(), 2, 0.1, &mut y2, &mut trace2);
        assert_eq!(s, MspStatus::InvalidArgument);
        assert!(last_error().contains("λ_i > λ_{i-1}"));

        // probabilities favour the true class everywhere
        let probs: Vec<f32> = (0..2)
            .flat_map(|c| (0..h * w).map(move |p| if (p % w < 16) == (c == 0) { 0.8 } else { 0.2 }))
            .collect();
        let pt = tensor_f32(&[2, h, w], &probs);
        let mut refined = ptr::null_mut();
        assert_eq!(msp_refine(pt, img, scales.as_ptr(), 2, 0.1, &mut refined), MspStatus::Ok);
        let mut got = vec![0u32; h * w];
        assert_eq!(msp_tensor_copy_u32(refined, got.as_mut_ptr(), got.len()), MspStatus::Ok);
        let gt: Vec<u32> = (0..h * w).map(|p| u32::from(p % w >= 16)).collect();
        assert_eq!(got, gt);

        let shape = [h, w];
        let mut gtt = ptr::null_mut();
        assert_eq!(msp_tensor_new_u32(shape.as_ptr(), 2, gt.as_ptr(), gt.len(), &mut gtt), MspStatus::Ok);
        let mut m = MspMetrics::default();
        assert_eq!(msp_metrics(refined, gtt, 2, 255, 2, &mut m), MspStatus::Ok);
        assert_eq!((m.miou, m.pixel_accuracy, m.boundary_fscore), (1.0, 1.0, 1.0));

        for t in [xt, y, g, pt, refined, gtt] {
            msp_tensor_free(t);
        }
        msp_trace_free(trace);
        msp_partition_free(sp);
        msp_partition_free(qs);
        msp_image_free(img);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/msp.h")).unwrap();
    for name in [
        "msp_last_error",
        "msp_tensor_new_f32",
        "msp_tensor_read",
        "msp_image_read",
        "msp_partition_from_labels",
        "msp_slic",
        "msp_quickshift",
        "msp_ssp_forward",
        "msp_ssp_backward",
        "msp_cascade_forward",
        "msp_cascade_backward",
        "msp_refine",
        "msp_metrics",
        "typedef struct MspTensor MspTensor",
        "MSP_STATUS_NULL_POINTER = 5",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

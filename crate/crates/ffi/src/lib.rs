//! C ABI over `msp-core`.
//!
//! Every object crosses the boundary as an opaque handle owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns an [`MspStatus`]; on
//! failure the message is available from [`msp_last_error`] on the same thread.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use msp_core::color::srgb_to_lab;
use msp_core::metrics;
use msp_core::msp::{self, CascadeTrace};
use msp_core::quickshift::{quickshift_segment, QuickShiftParams};
use msp_core::slic::{slic_segment, SlicParams};
use msp_core::tensor::DType;
use msp_core::{Error, Image, LabelMap, MspConfig, SuperpixelAlgorithm, SuperpixelPartition, Tensor};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MspStatus {
    Ok = 0,
    InvalidArgument = 1,
    Io = 2,
    Format = 3,
    Algorithm = 4,
    NullPointer = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MspDtype {
    F32 = 0,
    U32 = 1,
}

/// Segmentation quality summary filled by `msp_metrics`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MspMetrics {
    pub miou: f64,
    pub pixel_accuracy: f64,
    pub boundary_precision: f64,
    pub boundary_recall: f64,
    pub boundary_fscore: f64,
}

pub struct MspTensor(Tensor);
pub struct MspImage(Image);
pub struct MspPartition(SuperpixelPartition);
pub struct MspTrace(CascadeTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Fail {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MspStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MspStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            MspStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            let status = match e {
                Error::InvalidArgument(_) => MspStatus::InvalidArgument,
                Error::Io { .. } => MspStatus::Io,
                Error::Format { .. } => MspStatus::Format,
                Error::Algorithm(_) => MspStatus::Algorithm,
            };
            set_last_error(e.to_string());
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            MspStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(Fail::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidArgument("path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn config(scales: &[usize], alpha: f64, algorithm: SuperpixelAlgorithm) -> Result<MspConfig, Fail> {
    Ok(MspConfig::new(alpha, scales.to_vec(), algorithm)?)
}

/// Message for the last failed call on this thread, or NULL after a successful call.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn msp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn msp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- tensors ----

#[no_mangle]
pub unsafe extern "C" fn msp_tensor_new_f32(
    shape: *const usize,
    ndim: usize,
    data: *const f32,
    len: usize,
    out: *mut *mut MspTensor,
) -> MspStatus {
    guard(|| {
        let shape = input(shape, ndim, "shape")?.to_vec();
        let data = input(data, len, "data")?.to_vec();
        store(out, MspTensor(Tensor::from_f32(shape, data)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn msp_tensor_new_u32(
    shape: *const usize,
    ndim: usize,
    data: *const u32,
    len: usize,
    out: *mut *mut MspTensor,
) -> MspStatus {
    guard(|| {
        let shape = input(shape, ndim, "shape")?.to_vec();
        let data = input(data, len, "data")?.to_vec();
        store(out, MspTensor(Tensor::from_u32(shape, data)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn msp_tensor_free(tensor: *mut MspTensor) {
    release(tensor)
}

/// Number of dimensions, or 0 for a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn msp_tensor_ndim(tensor: *const MspTensor) -> usize {
    tensor.as_ref().map_or(0, |t| t.0.shape().len())
}

/// Number of elements, or 0 for a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn msp_tensor_len(tensor: *const MspTensor) -> usize {
    tensor.as_ref().map_or(0, |t| t.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn msp_tensor_dtype(tensor: *const MspTensor, out: *mut MspDtype) -> MspStatus {
    guard(|| {
        let t = deref(tensor, "tensor")?;
        let out = out.as_mut().ok_or(Fail::Null("out"))?;
        *out = match t.0.dtype() {
            DType::F32 => MspDtype::F32,
            DType::U32 => MspDtype::U32,
        };
        Ok(())
    })
}

/// Copies the shape into `dims`, which must hold exactly `ndim` entries.
#[no_mangle]
pub unsafe extern "C" fn msp_tensor_shape(tensor: *const MspTensor, dims: *mut usize, ndim: usize) -> MspStatus {
    guard(|| {
        let t = deref(tensor, "tensor")?;
        if ndim != t.0.shape().len() {
            return Err(Error::InvalidArgument(format!("tensor has {} dims, buffer holds {ndim}", t.0.shape().len())).into());
        }
        output(dims, ndim, "dims")?.copy_from_slice(t.0.shape());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn msp_tensor_copy_f32(tensor: *const MspTensor, dst: *mut f32, len: usize) -> MspStatus {
    guard(|| {
        let t = deref(tensor, "tensor")?;
        let src = t.0.as_f32().ok_or_else(|| Error::InvalidArgument("tensor is not f32".into()))?;
        copy_out(src, dst, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn msp_tensor_copy_u32(tensor: *const MspTensor, dst: *mut u32, len: usize) -> MspStatus {
    guard(|| {
        let t = deref(tensor, "tensor")?;
        let src = t.0.as_u32().ok_or_else(|| Error::InvalidArgument("tensor is not u32".into()))?;
        copy_out(src, dst, len)
    })
}

unsafe fn copy_out<T: Copy>(src: &[T], dst: *mut T, len: usize) -> Result<(), Fail> {
    if len != src.len() {
        return Err(Error::InvalidArgument(format!("tensor has {} elements, buffer holds {len}", src.len())).into());
    }
    output(dst, len, "dst")?.copy_from_slice(src);
    Ok(())
}

#[no_mangle]
pub unsafe extern "C" fn msp_tensor_read(path: *const c_char, out: *mut *mut MspTensor) -> MspStatus {
    guard(|| {
        let t = msp_core::io::read_mspt(path_arg(path)?)?;
        store(out, MspTensor(t))
    })
}

#[no_mangle]
pub unsafe extern "C" fn msp_tensor_write(tensor: *const MspTensor, path: *const c_char) -> MspStatus {
    guard(|| {
        let t = deref(tensor, "tensor")?;
        msp_core::io::write_mspt(&t.0, path_arg(path)?)?;
        Ok(())
    })
}

// ---- images ----

/// `rgb` holds `height * width * 3` interleaved bytes in row-major order.
#[no_mangle]
pub unsafe extern "C" fn msp_image_new(
    height: usize,
    width: usize,
    rgb: *const u8,
    len: usize,
    out: *mut *mut MspImage,
) -> MspStatus {
    guard(|| {
        let bytes = input(rgb, len, "rgb")?;
        if bytes.len() % 3 != 0 {
            return Err(Error::InvalidArgument(format!("rgb length {len} is not a multiple of 3")).into());
        }
        let pixels = bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        store(out, MspImage(Image::new(height, width, pixels)?))
    })
}

/// Reads a binary PPM (P6) or PGM (P5) file.
#[no_mangle]
pub unsafe extern "C" fn msp_image_read(path: *const c_char, out: *mut *mut MspImage) -> MspStatus {
    guard(|| {
        let image = msp_core::io::read_image(path_arg(path)?)?;
        store(out, MspImage(image))
    })
}

#[no_mangle]
pub unsafe extern "C" fn msp_image_free(image: *mut MspImage) {
    release(image)
}

// ---- partitions ----

#[no_mangle]
pub unsafe extern "C" fn msp_partition_from_labels(
    height: usize,
    width: usize,
    labels: *const u32,
    len: usize,
    out: *mut *mut MspPartition,
) -> MspStatus {
    guard(|| {
        let labels = input(labels, len, "labels")?.to_vec();
        store(out, MspPartition(SuperpixelPartition::from_labels(height, width, labels)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn msp_partition_free(partition: *mut MspPartition) {
    release(partition)
}

/// Number of blocks, or 0 for a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn msp_partition_num_blocks(partition: *const MspPartition) -> usize {
    partition.as_ref().map_or(0, |p| p.0.num_blocks())
}

#[no_mangle]
pub unsafe extern "C" fn msp_partition_copy_labels(partition: *const MspPartition, dst: *mut u32, len: usize) -> MspStatus {
    use msp_core::LabelGrid;
    guard(|| {
        let p = deref(partition, "partition")?;
        copy_out(p.0.labels(), dst, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn msp_slic(
    image: *const MspImage,
    lambda: usize,
    compactness: f64,
    out: *mut *mut MspPartition,
) -> MspStatus {
    guard(|| {
        let image = deref(image, "image")?;
        let params = SlicParams {
            compactness,
            ..SlicParams::new(lambda)
        };
        store(out, MspPartition(slic_segment(&srgb_to_lab(&image.0), &params)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn msp_quickshift(
    image: *const MspImage,
    sigma: f64,
    tau: f64,
    color_ratio: f64,
    out: *mut *mut MspPartition,
) -> MspStatus {
    guard(|| {
        let image = deref(image, "image")?;
        let params = QuickShiftParams { sigma, tau, color_ratio };
        store(out, MspPartition(quickshift_segment(&srgb_to_lab(&image.0), &params)?))
    })
}

// ---- message passing ----

#[no_mangle]
pub unsafe extern "C" fn msp_ssp_forward(
    x: *const MspTensor,
    partition: *const MspPartition,
    alpha: f64,
    out: *mut *mut MspTensor,
) -> MspStatus {
    guard(|| {
        let y = msp::ssp_forward(&deref(x, "x")?.0, &deref(partition, "partition")?.0, alpha)?;
        store(out, MspTensor(y))
    })
}

#[no_mangle]
pub unsafe extern "C" fn msp_ssp_backward(
    grad_out: *const MspTensor,
    partition: *const MspPartition,
    alpha: f64,
    out: *mut *mut MspTensor,
) -> MspStatus {
    guard(|| {
        let g = msp::ssp_backward(&deref(grad_out, "grad_out")?.0, &deref(partition, "partition")?.0, alpha)?;
        store(out, MspTensor(g))
    })
}

/// Runs the SLIC-driven cascade over `x` ([C, H, W] f32). `out_trace` receives the
/// partitions needed by `msp_cascade_backward`.
#[no_mangle]
pub unsafe extern "C" fn msp_cascade_forward(
    x: *const MspTensor,
    image: *const MspImage,
    scales: *const usize,
    num_scales: usize,
    alpha: f64,
    out: *mut *mut MspTensor,
    out_trace: *mut *mut MspTrace,
) -> MspStatus {
    guard(|| {
        let x = deref(x, "x")?;
        let image = deref(image, "image")?;
        if out.is_null() || out_trace.is_null() {
            return Err(Fail::Null("out"));
        }
        let cfg = config(input(scales, num_scales, "scales")?, alpha, SuperpixelAlgorithm::default())?;
        let (y, trace) = msp::msp_cascade_forward(&x.0, &image.0, &cfg)?;
        store(out, MspTensor(y))?;
        store(out_trace, MspTrace(trace))
    })
}

#[no_mangle]
pub unsafe extern "C" fn msp_cascade_backward(
    grad_out: *const MspTensor,
    trace: *const MspTrace,
    alpha: f64,
    out: *mut *mut MspTensor,
) -> MspStatus {
    guard(|| {
        let g = msp::msp_cascade_backward(&deref(grad_out, "grad_out")?.0, &deref(trace, "trace")?.0, alpha)?;
        store(out, MspTensor(g))
    })
}

/// Number of cascade stages, or 0 for a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn msp_trace_num_stages(trace: *const MspTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.stages().len())
}

#[no_mangle]
pub unsafe extern "C" fn msp_trace_free(trace: *mut MspTrace) {
    release(trace)
}

/// Cascade over class probabilities followed by argmax. `out` receives a [H, W] u32 tensor.
#[no_mangle]
pub unsafe extern "C" fn msp_refine(
    probs: *const MspTensor,
    image: *const MspImage,
    scales: *const usize,
    num_scales: usize,
    alpha: f64,
    out: *mut *mut MspTensor,
) -> MspStatus {
    guard(|| {
        let probs = deref(probs, "probs")?;
        let image = deref(image, "image")?;
        let cfg = config(input(scales, num_scales, "scales")?, alpha, SuperpixelAlgorithm::default())?;
        let labels = msp::refine_probs(&probs.0, &image.0, &cfg)?;
        store(out, MspTensor(labels.to_tensor()))
    })
}

/// Compares two [H, W] u32 label tensors.
#[no_mangle]
pub unsafe extern "C" fn msp_metrics(
    pred: *const MspTensor,
    gt: *const MspTensor,
    num_classes: usize,
    ignore_label: u32,
    boundary_tolerance: usize,
    out: *mut MspMetrics,
) -> MspStatus {
    guard(|| {
        let pred = LabelMap::from_tensor(&deref(pred, "pred")?.0)?;
        let gt = LabelMap::from_tensor(&deref(gt, "gt")?.0)?;
        let out = out.as_mut().ok_or(Fail::Null("out"))?;
        let r = metrics::evaluate(&pred, &gt, num_classes, ignore_label, boundary_tolerance)?;
        *out = MspMetrics {
            miou: r.miou,
            pixel_accuracy: r.pixel_accuracy,
            boundary_precision: r.boundary_precision,
            boundary_recall: r.boundary_recall,
            boundary_fscore: r.boundary_fscore,
        };
        Ok(())
    })
}


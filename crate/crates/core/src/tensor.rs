//! Dense row-major arrays, sRGB rasters and class-label maps.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32,
    U32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    U32(Vec<u32>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::U32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense n-dimensional array, row-major with the last dimension varying fastest.
///
/// Feature maps use the `[channels, height, width]` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: TensorData,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: TensorData) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::invalid("tensor shape must have at least one dimension"));
        }
        if let Some(axis) = shape.iter().position(|&d| d == 0) {
            return Err(Error::invalid(format!("tensor dimension {axis} is zero")));
        }
        let expected = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::invalid("tensor shape overflows usize"))?;
        if expected != data.len() {
            return Err(Error::invalid(format!(
                "tensor shape {:?} needs {} elements, got {}",
                shape,
                expected,
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn from_f32(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        Tensor::new(shape, TensorData::F32(data))
    }

    pub fn from_u32(shape: Vec<usize>, data: Vec<u32>) -> Result<Self> {
        Tensor::new(shape, TensorData::U32(data))
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dtype(&self) -> DType {
        match self.data {
            TensorData::F32(_) => DType::F32,
            TensorData::U32(_) => DType::U32,
        }
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.data {
            TensorData::F32(v) => Some(v),
            TensorData::U32(_) => None,
        }
    }

    pub fn as_u32(&self) -> Option<&[u32]> {
        match &self.data {
            TensorData::U32(v) => Some(v),
            TensorData::F32(_) => None,
        }
    }

    /// Interprets the tensor as an f32 `[C, H, W]` feature map.
    pub fn feature_dims(&self) -> Result<(usize, usize, usize)> {
        if self.dtype() != DType::F32 {
            return Err(Error::invalid("feature map must be f32"));
        }
        match self.shape[..] {
            [c, h, w] => Ok((c, h, w)),
            _ => Err(Error::invalid(format!(
                "feature map must be 3-D [C, H, W], got shape {:?}",
                self.shape
            ))),
        }
    }
}

/// 8-bit sRGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    height: usize,
    width: usize,
    pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if pixels.len() != height * width {
            return Err(Error::invalid(format!(
                "image {}x{} needs {} pixels, got {}",
                height,
                width,
                height * width,
                pixels.len()
            )));
        }
        Ok(Image {
            height,
            width,
            pixels,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(y, x));
            }
        }
        Image::new(height, width, pixels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, y: usize, x: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }
}

/// Anything that assigns one `u32` label per pixel of an `H x W` grid.
pub trait LabelGrid {
    fn height(&self) -> usize;
    fn width(&self) -> usize;
    fn labels(&self) -> &[u32];
}

/// Per-pixel class indices (predictions or ground truth).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("label map dimensions must be positive"));
        }
        if labels.len() != height * width {
            return Err(Error::invalid(format!(
                "label map {}x{} needs {} labels, got {}",
                height,
                width,
                height * width,
                labels.len()
            )));
        }
        Ok(LabelMap {
            height,
            width,
            labels,
        })
    }

    /// Accepts a u32 tensor of shape `[H, W]`.
    pub fn from_tensor(tensor: &Tensor) -> Result<Self> {
        let labels = tensor
            .as_u32()
            .ok_or_else(|| Error::invalid("label map tensor must be u32"))?;
        match tensor.shape()[..] {
            [h, w] => LabelMap::new(h, w, labels.to_vec()),
            _ => Err(Error::invalid(format!(
                "label map tensor must be 2-D [H, W], got shape {:?}",
                tensor.shape()
            ))),
        }
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_u32(vec![self.height, self.width], self.labels.clone())
            .expect("label map dimensions are positive and consistent")
    }

    pub fn into_labels(self) -> Vec<u32> {
        self.labels
    }
}

impl LabelGrid for LabelMap {
    fn height(&self) -> usize {
        self.height
    }
    fn width(&self) -> usize {
        self.width
    }
    fn labels(&self) -> &[u32] {
        &self.labels
    }
}

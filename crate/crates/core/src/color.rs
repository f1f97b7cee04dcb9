//! sRGB to CIELAB (D65).

use crate::tensor::Image;

/// D65 reference white in XYZ, Y normalized to 1.
const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    height: usize,
    width: usize,
    pixels: Vec<[f64; 3]>,
}

impl LabImage {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, y: usize, x: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }
}

fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

pub fn rgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = rgb.map(srgb_to_linear);
    let xyz: [f64; 3] = std::array::from_fn(|i| {
        SRGB_TO_XYZ[i][0] * lin[0] + SRGB_TO_XYZ[i][1] * lin[1] + SRGB_TO_XYZ[i][2] * lin[2]
    });
    let fx = lab_f(xyz[0] / WHITE[0]);
    let fy = lab_f(xyz[1] / WHITE[1]);
    let fz = lab_f(xyz[2] / WHITE[2]);
    // Matrix rows sum to the white point only to ~1e-7, which can push white a hair past 100.
    let l = (116.0 * fy - 16.0).clamp(0.0, 100.0);
    [l, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub fn srgb_to_lab(image: &Image) -> LabImage {
    LabImage {
        height: image.height(),
        width: image.width(),
        pixels: image.pixels().iter().map(|&p| rgb_to_lab(p)).collect(),
    }
}

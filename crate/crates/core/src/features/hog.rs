//! Histogram of oriented gradients with L2-Hys block normalisation.

use super::{Extractor, FeatureVector};
use crate::error::{Error, Result};
use crate::imgcore::GrayImage;

const L2HYS_CLAMP: f64 = 0.2;
const NORM_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HogParams {
    /// Cell side in pixels.
    pub cell: usize,
    /// Block side in cells.
    pub block: usize,
    /// Unsigned orientation bins over [0, 180) degrees.
    pub bins: usize,
}

impl Default for HogParams {
    fn default() -> Self {
        Self {
            cell: 8,
            block: 2,
            bins: 9,
        }
    }
}

impl HogParams {
    pub fn validate(&self) -> Result<()> {
        if self.cell == 0 || self.block == 0 || self.bins == 0 {
            return Err(Error::InvalidParams("HOG cell, block and bins must be positive".into()));
        }
        Ok(())
    }

    /// Feature length for a `width × height` input.
    pub fn dim(&self, width: usize, height: usize) -> usize {
        let (bx, by) = self.block_counts(width, height);
        bx * by * self.block * self.block * self.bins
    }

    fn stride(&self) -> usize {
        (self.block / 2).max(1)
    }

    fn block_counts(&self, width: usize, height: usize) -> (usize, usize) {
        let (nx, ny) = (width / self.cell, height / self.cell);
        if nx < self.block || ny < self.block {
            return (0, 0);
        }
        let s = self.stride();
        ((nx - self.block) / s + 1, (ny - self.block) / s + 1)
    }
}

/// Per-cell orientation histograms (magnitude-weighted, linearly
/// interpolated between neighbouring bin centres), grouped into
/// half-overlapping blocks.
pub fn hog_feature(img: &GrayImage, p: HogParams) -> Result<FeatureVector> {
    p.validate()?;
    let (w, h) = (img.width(), img.height());
    let min_side = p.cell * p.block;
    if w < min_side || h < min_side {
        return Err(Error::ImageTooSmall(format!(
            "HOG with {}px cells and {}-cell blocks needs {min_side}x{min_side}, got {w}x{h}",
            p.cell, p.block
        )));
    }
    let (ncx, ncy) = (w / p.cell, h / p.cell);
    let mut cells = vec![0.0; ncx * ncy * p.bins];
    let bin_width = 180.0 / p.bins as f64;

    for y in 0..ncy * p.cell {
        for x in 0..ncx * p.cell {
            let (xi, yi) = (x as isize, y as isize);
            let gx = f64::from(img.get_clamped(xi + 1, yi)) - f64::from(img.get_clamped(xi - 1, yi));
            let gy = f64::from(img.get_clamped(xi, yi + 1)) - f64::from(img.get_clamped(xi, yi - 1));
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let mut angle = gy.atan2(gx).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            if angle >= 180.0 {
                angle -= 180.0;
            }
            let pos = angle / bin_width;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = (lo as usize) % p.bins;
            let hi = (lo + 1) % p.bins;
            let cell = &mut cells[((y / p.cell) * ncx + x / p.cell) * p.bins..][..p.bins];
            cell[lo] += mag * (1.0 - frac);
            cell[hi] += mag * frac;
        }
    }

    let (nbx, nby) = p.block_counts(w, h);
    let stride = p.stride();
    let block_len = p.block * p.block * p.bins;
    let mut values = Vec::with_capacity(nbx * nby * block_len);
    let mut block = vec![0.0; block_len];
    for by in 0..nby {
        for bx in 0..nbx {
            block.clear();
            for cy in by * stride..by * stride + p.block {
                for cx in bx * stride..bx * stride + p.block {
                    block.extend_from_slice(&cells[(cy * ncx + cx) * p.bins..][..p.bins]);
                }
            }
            l2_hys(&mut block);
            values.extend_from_slice(&block);
        }
    }
    FeatureVector::new(Extractor::Hog, values)
}

fn l2_hys(v: &mut [f64]) {
    let scale = |v: &mut [f64]| {
        let norm = (v.iter().map(|x| x * x).sum::<f64>() + NORM_EPS * NORM_EPS).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    };
    scale(v);
    v.iter_mut().for_each(|x| *x = x.min(L2HYS_CLAMP));
    scale(v);
}

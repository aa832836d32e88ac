//! Soft traits computed on the background layer.

use super::{Block, BlockGrid, Extractor, FeatureVector};
use crate::error::{Error, Result};
use crate::imgcore::GrayImage;

/// Population mean and variance over a rectangle (two-pass).
fn mean_var(img: &GrayImage, b: &Block) -> (f64, f64) {
    let n = (b.width * b.height) as f64;
    let mut sum = 0.0;
    for y in b.y..b.y + b.height {
        sum += img.row(y)[b.x..b.x + b.width]
            .iter()
            .map(|&v| f64::from(v))
            .sum::<f64>();
    }
    let mean = sum / n;
    let mut ss = 0.0;
    for y in b.y..b.y + b.height {
        ss += img.row(y)[b.x..b.x + b.width]
            .iter()
            .map(|&v| {
                let d = f64::from(v) - mean;
                d * d
            })
            .sum::<f64>();
    }
    (mean, ss / n)
}

/// Whole-image gray-level mean and population variance, `[M, V]`.
pub fn mv_feature(bg: &GrayImage) -> FeatureVector {
    let whole = Block {
        x: 0,
        y: 0,
        width: bg.width(),
        height: bg.height(),
    };
    let (m, v) = mean_var(bg, &whole);
    FeatureVector::new(Extractor::Mv, vec![m, v]).expect("mean and variance of u8 data are finite")
}

/// Per-block `[m1, v1, m2, v2, ...]` in row-major block order.
pub fn amv_feature(bg: &GrayImage, grid: BlockGrid) -> Result<FeatureVector> {
    let blocks = grid.layout(bg.width(), bg.height())?;
    let mut values = Vec::with_capacity(2 * blocks.len());
    for b in &blocks {
        let (m, v) = mean_var(bg, b);
        values.push(m);
        values.push(v);
    }
    FeatureVector::new(Extractor::Amv, values)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HspParams {
    /// Pyramid grids, coarse to fine.
    pub levels: Vec<BlockGrid>,
    /// Equal-width gray-level bins over [0, 255]; must divide 256.
    pub bins: usize,
}

impl Default for HspParams {
    fn default() -> Self {
        Self {
            levels: vec![BlockGrid::new(3, 5), BlockGrid::new(6, 10)],
            bins: 32,
        }
    }
}

impl HspParams {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidParams("HSP needs at least one pyramid level".into()));
        }
        for g in &self.levels {
            g.validate()?;
        }
        if self.bins == 0 || 256 % self.bins != 0 {
            return Err(Error::InvalidParams(format!(
                "HSP bins must divide 256, got {}",
                self.bins
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.bins * self.levels.iter().map(BlockGrid::blocks).sum::<usize>()
    }
}

/// L1-normalised gray histograms of every block at every pyramid level,
/// concatenated coarse to fine.
pub fn hsp_feature(bg: &GrayImage, p: &HspParams) -> Result<FeatureVector> {
    p.validate()?;
    let shift = (256 / p.bins).trailing_zeros();
    let mut values = Vec::with_capacity(p.dim());
    for grid in &p.levels {
        for b in grid.layout(bg.width(), bg.height())? {
            let start = values.len();
            values.resize(start + p.bins, 0.0);
            let hist = &mut values[start..];
            for y in b.y..b.y + b.height {
                for &v in &bg.row(y)[b.x..b.x + b.width] {
                    hist[(v >> shift) as usize] += 1.0;
                }
            }
            let n = (b.width * b.height) as f64;
            hist.iter_mut().for_each(|c| *c /= n);
        }
    }
    FeatureVector::new(Extractor::Hsp, values)
}

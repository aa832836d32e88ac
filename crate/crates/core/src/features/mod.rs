//! Primary texture descriptors (LBP, WLD, HOG), soft intensity-distribution
//! traits (M&V, AM&V, HSP) and the gradient-overlap alignment used before
//! primary extraction.

mod align;
mod hog;
mod io;
mod lbp;
mod soft;
mod wld;

pub use align::{align_pair, AlignResult};
pub use hog::{hog_feature, HogParams};
pub use io::{read_features, write_features, FeatureRecord};
pub use lbp::{lbp_code, lbp_feature, uniform_bin, LBP_BINS};
pub use soft::{amv_feature, hsp_feature, mv_feature, HspParams};
pub use wld::{wld_feature, WldParams};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Primary,
    Soft,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Primary => "primary",
            FeatureKind::Soft => "soft",
        }
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "primary" => Ok(FeatureKind::Primary),
            "soft" => Ok(FeatureKind::Soft),
            other => Err(format!("unknown feature kind `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Extractor {
    Lbp,
    Wld,
    Hog,
    Mv,
    Amv,
    Hsp,
}

impl Extractor {
    pub fn kind(self) -> FeatureKind {
        match self {
            Extractor::Lbp | Extractor::Wld | Extractor::Hog => FeatureKind::Primary,
            Extractor::Mv | Extractor::Amv | Extractor::Hsp => FeatureKind::Soft,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Extractor::Lbp => "lbp",
            Extractor::Wld => "wld",
            Extractor::Hog => "hog",
            Extractor::Mv => "mv",
            Extractor::Amv => "amv",
            Extractor::Hsp => "hsp",
        }
    }
}

impl fmt::Display for Extractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Extractor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lbp" => Ok(Extractor::Lbp),
            "wld" => Ok(Extractor::Wld),
            "hog" => Ok(Extractor::Hog),
            "mv" => Ok(Extractor::Mv),
            "amv" => Ok(Extractor::Amv),
            "hsp" => Ok(Extractor::Hsp),
            other => Err(format!("unknown extractor `{other}`")),
        }
    }
}

/// Fixed-length feature tagged with the extractor that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    extractor: Extractor,
}

impl FeatureVector {
    pub fn new(extractor: Extractor, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParams("feature vector must be non-empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        if extractor == Extractor::Mv && values.len() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "M&V feature must have 2 values, got {}",
                values.len()
            )));
        }
        if extractor == Extractor::Amv && !values.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch(format!(
                "AM&V feature must have an even length, got {}",
                values.len()
            )));
        }
        Ok(Self { values, extractor })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn extractor(&self) -> Extractor {
        self.extractor
    }

    pub fn kind(&self) -> FeatureKind {
        self.extractor.kind()
    }
}

/// Block partition: `rows` block rows by `cols` block columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BlockGrid {
    pub rows: usize,
    pub cols: usize,
}

impl BlockGrid {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn blocks(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidParams(format!(
                "grid {}x{} must have at least one block per axis",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Pixel rectangles of each block in row-major order after centred
    /// truncation to the largest size divisible by the grid.
    pub fn layout(&self, width: usize, height: usize) -> Result<Vec<Block>> {
        self.validate()?;
        if height < self.rows || width < self.cols {
            return Err(Error::GridTooFine {
                rows: self.rows,
                cols: self.cols,
                width,
                height,
            });
        }
        let bh = height / self.rows;
        let bw = width / self.cols;
        let y0 = (height - bh * self.rows) / 2;
        let x0 = (width - bw * self.cols) / 2;
        let mut out = Vec::with_capacity(self.blocks());
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(Block {
                    x: x0 + c * bw,
                    y: y0 + r * bh,
                    width: bw,
                    height: bh,
                });
            }
        }
        Ok(out)
    }
}

impl fmt::Display for BlockGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl FromStr for BlockGrid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (r, c) = s
            .split_once(['x', 'X', '*'])
            .ok_or_else(|| format!("expected <rows>x<cols>, got `{s}`"))?;
        let rows = r.trim().parse().map_err(|_| format!("bad grid rows in `{s}`"))?;
        let cols = c.trim().parse().map_err(|_| format!("bad grid cols in `{s}`"))?;
        let grid = BlockGrid { rows, cols };
        grid.validate().map_err(|e| e.to_string())?;
        Ok(grid)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Block {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_truncation() {
        let blocks = BlockGrid::new(3, 2).layout(7, 11).unwrap();
        // 11 -> 9 rows (offset 1), 7 -> 6 cols (offset 0)
        assert_eq!(
            blocks[0],
            Block {
                x: 0,
                y: 1,
                width: 3,
                height: 3
            }
        );
        assert_eq!(
            blocks[5],
            Block {
                x: 3,
                y: 7,
                width: 3,
                height: 3
            }
        );
    }

    #[test]
    fn grid_too_fine() {
        assert!(matches!(
            BlockGrid::new(8, 16).layout(10, 7),
            Err(Error::GridTooFine { .. })
        ));
    }

    #[test]
    fn grid_parses() {
        assert_eq!("8x16".parse::<BlockGrid>().unwrap(), BlockGrid::new(8, 16));
        assert_eq!("6*10".parse::<BlockGrid>().unwrap(), BlockGrid::new(6, 10));
        assert!("0x3".parse::<BlockGrid>().is_err());
        assert!("8".parse::<BlockGrid>().is_err());
    }

    #[test]
    fn feature_vector_invariants() {
        assert!(FeatureVector::new(Extractor::Mv, vec![1.0, 2.0, 3.0]).is_err());
        assert!(FeatureVector::new(Extractor::Amv, vec![1.0, 2.0, 3.0]).is_err());
        assert!(FeatureVector::new(Extractor::Lbp, vec![f64::NAN]).is_err());
        let f = FeatureVector::new(Extractor::Hsp, vec![0.5, 0.5]).unwrap();
        assert_eq!(f.dim(), 2);
        assert_eq!(f.kind(), FeatureKind::Soft);
    }
}

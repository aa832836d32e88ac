//! Uniform local binary patterns, radius 1 with 8 neighbours.

use super::{BlockGrid, Extractor, FeatureVector};
use crate::error::{Error, Result};
use crate::imgcore::GrayImage;

/// 58 uniform patterns plus one bin shared by every non-uniform code.
pub const LBP_BINS: usize = 59;

/// Neighbour offsets in circular order starting top-left, clockwise.
const NEIGHBOURS: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)];

const fn circular_transitions(code: u8) -> u32 {
    (code ^ code.rotate_right(1)).count_ones()
}

const UNIFORM_TABLE: [u8; 256] = {
    let mut table = [0u8; 256];
    let mut next = 0u8;
    let mut code = 0usize;
    while code < 256 {
        if circular_transitions(code as u8) <= 2 {
            table[code] = next;
            next += 1;
        } else {
            table[code] = (LBP_BINS - 1) as u8;
        }
        code += 1;
    }
    table
};

/// Histogram bin of an 8-bit code under the uniform mapping.
pub fn uniform_bin(code: u8) -> usize {
    UNIFORM_TABLE[code as usize] as usize
}

/// Code at an interior pixel; bit `i` is set when neighbour `i` is at least
/// as bright as the centre.
pub fn lbp_code(img: &GrayImage, x: usize, y: usize) -> u8 {
    let centre = img.get(x, y);
    let mut code = 0u8;
    for (bit, &(dx, dy)) in NEIGHBOURS.iter().enumerate() {
        let n = img.get((x as isize + dx) as usize, (y as isize + dy) as usize);
        if n >= centre {
            code |= 1 << bit;
        }
    }
    code
}

/// Concatenated per-block 59-bin histograms of uniform codes. Pixels on the
/// one-pixel image border carry no code and are not counted.
pub fn lbp_feature(img: &GrayImage, grid: BlockGrid) -> Result<FeatureVector> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall(format!("LBP needs at least 3x3, got {w}x{h}")));
    }
    let blocks = grid.layout(w, h)?;
    let mut values = vec![0.0; LBP_BINS * blocks.len()];
    for (b, block) in blocks.iter().enumerate() {
        let hist = &mut values[b * LBP_BINS..(b + 1) * LBP_BINS];
        let ys = block.y.max(1)..(block.y + block.height).min(h - 1);
        for y in ys {
            for x in block.x.max(1)..(block.x + block.width).min(w - 1) {
                hist[uniform_bin(lbp_code(img, x, y))] += 1.0;
            }
        }
    }
    FeatureVector::new(Extractor::Lbp, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_58_uniform_codes() {
        let uniform = (0..=255u8).filter(|&c| circular_transitions(c) <= 2).count();
        assert_eq!(uniform, 58);
        assert_eq!(uniform_bin(0), 0);
        assert_eq!(uniform_bin(255), 57);
        assert_eq!(uniform_bin(0b0101_0101), 58);
        let mut bins: Vec<usize> = (0..=255u8).map(uniform_bin).collect();
        bins.sort_unstable();
        bins.dedup();
        assert_eq!(bins.len(), LBP_BINS);
    }

    #[test]
    fn constant_image_is_all_ones() {
        let img = GrayImage::filled(10, 8, 50);
        let f = lbp_feature(&img, BlockGrid::new(2, 2)).unwrap();
        assert_eq!(f.dim(), 4 * LBP_BINS);
        // blocks are 5x4; corner blocks lose one border row and column
        for b in 0..4 {
            let hist = &f.values()[b * LBP_BINS..(b + 1) * LBP_BINS];
            assert_eq!(hist[uniform_bin(255)], 12.0);
            assert_eq!(hist.iter().sum::<f64>(), 12.0);
        }
    }

    #[test]
    fn hand_computed_code() {
        #[rustfmt::skip]
        let img = GrayImage::new(3, 3, vec![
            6, 11, 14,
            9, 10, 10,
            19, 0, 22,
        ]).unwrap();
        // neighbours tl,t,tr,r,br,b,bl,l = 6,11,14,10,22,0,19,9
        assert_eq!(lbp_code(&img, 1, 1), 0b0101_1110);
    }

    #[test]
    fn too_small() {
        let img = GrayImage::filled(2, 5, 0);
        assert!(matches!(
            lbp_feature(&img, BlockGrid::new(1, 1)),
            Err(Error::ImageTooSmall(_))
        ));
    }
}

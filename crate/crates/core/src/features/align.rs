//! Vertical overlap search on gradient maps.
//!
//! The second image's gradient map is slid vertically over the first; at
//! every offset the mean absolute difference of the overlapping rows is
//! measured and the minimum-distance overlap becomes the common region.

use crate::error::{Error, Result};
use crate::imgcore::{gradient_map, Axis, GrayImage, RealImage};

#[derive(Clone, Debug, PartialEq)]
pub struct AlignResult {
    pub region_a: GrayImage,
    pub region_b: GrayImage,
    /// Offset such that row `y` of `a` lines up with row `y + shift` of `b`.
    pub shift: isize,
    /// Mean absolute gradient difference over the overlap.
    pub distance: f64,
    /// First overlapping row in `a` and in `b`.
    pub start_a: usize,
    pub start_b: usize,
    pub rows: usize,
}

impl AlignResult {
    /// Applies the same row window to another pair of same-sized images
    /// (e.g. the foreground layers of the aligned ROIs).
    pub fn crop_like(&self, a: &GrayImage, b: &GrayImage) -> Result<(GrayImage, GrayImage)> {
        Ok((
            a.crop(0, self.start_a, a.width(), self.rows)?,
            b.crop(0, self.start_b, b.width(), self.rows)?,
        ))
    }

    /// Centres a window of `rows` rows inside the overlap, returning the
    /// `(start_a, start_b)` offsets of the window.
    pub fn centred_window(&self, rows: usize) -> Result<(usize, usize)> {
        if rows == 0 || rows > self.rows {
            return Err(Error::ImageTooSmall(format!(
                "window of {rows} rows does not fit a {}-row overlap",
                self.rows
            )));
        }
        let pad = (self.rows - rows) / 2;
        Ok((self.start_a + pad, self.start_b + pad))
    }
}

/// Aligns on vertical-derivative gradient maps.
pub fn align_pair(img_a: &GrayImage, img_b: &GrayImage, max_shift: usize) -> Result<AlignResult> {
    align_pair_on(img_a, img_b, max_shift, Axis::Vertical)
}

pub fn align_pair_on(img_a: &GrayImage, img_b: &GrayImage, max_shift: usize, axis: Axis) -> Result<AlignResult> {
    if img_a.width() != img_b.width() {
        return Err(Error::WidthMismatch(img_a.width(), img_b.width()));
    }
    let ga = gradient_map(img_a, axis)?;
    let gb = gradient_map(img_b, axis)?;
    align_with_maps(img_a, img_b, &ga, &gb, max_shift)
}

/// Same as [`align_pair_on`] with gradient maps computed by the caller.
pub fn align_with_maps(
    img_a: &GrayImage,
    img_b: &GrayImage,
    ga: &RealImage,
    gb: &RealImage,
    max_shift: usize,
) -> Result<AlignResult> {
    let (shift, distance) = best_shift(ga, gb, max_shift)?;
    let (start_a, start_b, rows) =
        overlap(ga.height(), gb.height(), shift).expect("best_shift only returns shifts with an overlap");
    Ok(AlignResult {
        region_a: img_a.crop(0, start_a, img_a.width(), rows)?,
        region_b: img_b.crop(0, start_b, img_b.width(), rows)?,
        shift,
        distance,
        start_a,
        start_b,
        rows,
    })
}

fn overlap(ha: usize, hb: usize, shift: isize) -> Option<(usize, usize, usize)> {
    let lo = (-shift).max(0);
    let hi = (ha as isize).min(hb as isize - shift);
    (hi > lo).then(|| (lo as usize, (lo + shift) as usize, (hi - lo) as usize))
}

/// Candidate offsets in tie-break order: 0, -1, 1, -2, 2, ...
fn shift_order(max_shift: usize) -> impl Iterator<Item = isize> {
    std::iter::once(0).chain((1..=max_shift as isize).flat_map(|s| [-s, s]))
}

pub(crate) fn best_shift(ga: &RealImage, gb: &RealImage, max_shift: usize) -> Result<(isize, f64)> {
    if ga.width() != gb.width() {
        return Err(Error::WidthMismatch(ga.width(), gb.width()));
    }
    let w = ga.width();
    let mut best: Option<(isize, f64)> = None;
    for shift in shift_order(max_shift) {
        let Some((sa, sb, rows)) = overlap(ga.height(), gb.height(), shift) else {
            continue;
        };
        let a = &ga.values()[sa * w..(sa + rows) * w];
        let b = &gb.values()[sb * w..(sb + rows) * w];
        let dist = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / (rows * w) as f64;
        if best.is_none_or(|(_, d)| dist < d) {
            best = Some((shift, dist));
        }
    }
    best.ok_or(Error::NoOverlap(ga.height(), gb.height(), max_shift))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| ((x * 7 + y * y * 13 + (x * y) % 11) % 256) as u8)
    }

    #[test]
    fn identical_images_align_at_zero() {
        let a = textured(30, 40);
        let r = align_pair(&a, &a, 10).unwrap();
        assert_eq!(r.shift, 0);
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.region_a, a);
        assert_eq!(r.region_b, a);
    }

    #[test]
    fn recovers_downward_shift() {
        let a = textured(30, 40);
        // b(y) = a(y - 4), top rows replicated
        let b = GrayImage::from_fn(30, 40, |x, y| a.get(x, y.saturating_sub(4)));
        let r = align_pair(&a, &b, 10).unwrap();
        assert!((r.shift - 4).abs() <= 1, "shift {}", r.shift);
        assert_eq!(r.region_a.height(), r.region_b.height());
    }

    #[test]
    fn width_mismatch() {
        let a = GrayImage::filled(320, 10, 0);
        let b = GrayImage::filled(300, 10, 0);
        assert!(matches!(align_pair(&a, &b, 3), Err(Error::WidthMismatch(320, 300))));
    }

    #[test]
    fn overlap_bounds() {
        assert_eq!(overlap(10, 10, 0), Some((0, 0, 10)));
        assert_eq!(overlap(10, 10, 4), Some((0, 4, 6)));
        assert_eq!(overlap(10, 10, -3), Some((3, 0, 7)));
        assert_eq!(overlap(3, 3, 3), None);
        assert_eq!(overlap(3, 3, -3), None);
    }

    #[test]
    fn ties_prefer_small_then_negative_shift() {
        let order: Vec<isize> = shift_order(2).collect();
        assert_eq!(order, vec![0, -1, 1, -2, 2]);
        let flat = GrayImage::filled(8, 12, 50);
        assert_eq!(align_pair(&flat, &flat, 5).unwrap().shift, 0);
    }

    #[test]
    fn centred_window_fits_overlap() {
        let a = textured(10, 20);
        let r = align_pair(&a, &a, 3).unwrap();
        assert_eq!(r.centred_window(16).unwrap(), (2, 2));
        assert!(r.centred_window(21).is_err());
    }
}

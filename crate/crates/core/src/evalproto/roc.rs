use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::textfmt::sig9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    /// Ascending in threshold.
    pub points: Vec<RocPoint>,
    pub eer: f64,
    pub eer_threshold: f64,
}

/// Sweeps every distinct score as a threshold (accept iff `score ≥ t`),
/// plus one threshold above the maximum at which nothing is accepted.
///
/// The EER is read off where `FAR − FRR` first becomes non-positive,
/// interpolating linearly from the previous sweep point.
pub fn compute_roc(genuine: &[f64], impostor: &[f64]) -> Result<RocCurve> {
    if genuine.is_empty() {
        return Err(Error::EmptyScores("genuine"));
    }
    if impostor.is_empty() {
        return Err(Error::EmptyScores("impostor"));
    }
    if let Some(i) = genuine.iter().chain(impostor).position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteValue(i));
    }
    let mut g = genuine.to_vec();
    let mut im = impostor.to_vec();
    g.sort_by(f64::total_cmp);
    im.sort_by(f64::total_cmp);

    let mut thresholds: Vec<f64> = g.iter().chain(&im).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let top = *thresholds.last().expect("non-empty");
    thresholds.push(top + top.abs().max(1.0));

    let (ng, ni) = (g.len() as f64, im.len() as f64);
    let (mut gi, mut ii) = (0, 0); // counts strictly below the threshold
    let points: Vec<RocPoint> = thresholds
        .iter()
        .map(|&t| {
            while gi < g.len() && g[gi] < t {
                gi += 1;
            }
            while ii < im.len() && im[ii] < t {
                ii += 1;
            }
            RocPoint {
                threshold: t,
                far: (im.len() - ii) as f64 / ni,
                frr: gi as f64 / ng,
            }
        })
        .collect();

    let k = points
        .iter()
        .position(|p| p.far - p.frr <= 0.0)
        .expect("the sentinel point has FAR 0 and FRR 1");
    let (eer, eer_threshold) = if k == 0 || points[k].far == points[k].frr {
        (points[k].far, points[k].threshold)
    } else {
        let (p, q) = (points[k - 1], points[k]);
        let (dp, dq) = (p.far - p.frr, q.far - q.frr);
        let lambda = dp / (dp - dq);
        (
            p.far + lambda * (q.far - p.far),
            p.threshold + lambda * (q.threshold - p.threshold),
        )
    };
    Ok(RocCurve {
        points,
        eer,
        eer_threshold,
    })
}

pub fn roc_csv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold,far,frr\n");
    for p in &curve.points {
        let _ = writeln!(out, "{},{},{}", sig9(p.threshold), sig9(p.far), sig9(p.frr));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_separation() {
        let c = compute_roc(&[0.9, 0.8], &[0.1, 0.2]).unwrap();
        assert_eq!(c.eer, 0.0);
        assert!(c.eer_threshold > 0.2 && c.eer_threshold <= 0.8);
    }

    #[test]
    fn indistinguishable() {
        let c = compute_roc(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(c.eer, 0.5);
    }

    #[test]
    fn fully_inverted_scores() {
        let c = compute_roc(&[0.1, 0.2], &[0.8, 0.9]).unwrap();
        assert_eq!(c.eer, 1.0);
    }

    #[test]
    fn curve_endpoints_and_monotonicity() {
        let c = compute_roc(&[3.0, 1.0, 2.0, 2.0], &[0.0, 2.0, -1.0]).unwrap();
        let first = c.points[0];
        let last = *c.points.last().unwrap();
        assert_eq!((first.far, first.frr), (1.0, 0.0));
        assert_eq!((last.far, last.frr), (0.0, 1.0));
        for w in c.points.windows(2) {
            assert!(w[0].threshold < w[1].threshold);
            assert!(w[1].far <= w[0].far && w[1].frr >= w[0].frr);
        }
    }

    #[test]
    fn empty_sides() {
        assert!(matches!(compute_roc(&[], &[1.0]), Err(Error::EmptyScores("genuine"))));
        assert!(matches!(compute_roc(&[1.0], &[]), Err(Error::EmptyScores("impostor"))));
    }

    #[test]
    fn csv_header() {
        let c = compute_roc(&[1.0], &[0.0]).unwrap();
        assert!(roc_csv(&c).starts_with("threshold,far,frr\n0,1,0\n"));
    }
}

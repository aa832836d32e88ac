//! Hybrid matching: a linear SVM over primary-feature differences, negated
//! Manhattan distance over soft features, min-max normalisation and a
//! weighted-sum fusion of the two.

mod svm;

use std::fmt;
use std::str::FromStr;

pub use svm::{load_model, model_to_string, parse_model, save_model, train_svm, SvmModel, SvmParams, TrainMeta};

use crate::error::{Error, Result};
use crate::evalproto::compute_roc;
use crate::features::FeatureVector;

/// How two primary features are turned into the SVM's input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DiffMode {
    /// Elementwise `|x1 − x2|`; symmetric in its arguments.
    #[default]
    Abs,
    Signed,
}

impl DiffMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiffMode::Abs => "abs",
            DiffMode::Signed => "signed",
        }
    }
}

impl fmt::Display for DiffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiffMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "abs" => Ok(DiffMode::Abs),
            "signed" => Ok(DiffMode::Signed),
            _ => Err(format!("expected abs or signed, got `{s}`")),
        }
    }
}

fn check_compatible(a: &FeatureVector, b: &FeatureVector) -> Result<()> {
    if a.extractor() != b.extractor() {
        return Err(Error::ExtractorMismatch(
            a.extractor().to_string(),
            b.extractor().to_string(),
        ));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} features of dim {} and {}",
            a.extractor(),
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

pub fn diff_vector(x1: &FeatureVector, x2: &FeatureVector) -> Result<Vec<f64>> {
    diff_vector_with(x1, x2, DiffMode::Abs)
}

pub fn diff_vector_with(x1: &FeatureVector, x2: &FeatureVector, mode: DiffMode) -> Result<Vec<f64>> {
    check_compatible(x1, x2)?;
    let it = x1.values().iter().zip(x2.values());
    Ok(match mode {
        DiffMode::Abs => it.map(|(a, b)| (a - b).abs()).collect(),
        DiffMode::Signed => it.map(|(a, b)| a - b).collect(),
    })
}

/// `wᵀ|x1 − x2| + b`; larger means more similar.
pub fn svm_score(model: &SvmModel, x1: &FeatureVector, x2: &FeatureVector) -> Result<f64> {
    svm_score_with(model, x1, x2, DiffMode::Abs)
}

pub fn svm_score_with(model: &SvmModel, x1: &FeatureVector, x2: &FeatureVector, mode: DiffMode) -> Result<f64> {
    model.decision(&diff_vector_with(x1, x2, mode)?)
}

/// Negated L1 distance, so that larger means more similar.
pub fn manhattan_score(f1: &FeatureVector, f2: &FeatureVector) -> Result<f64> {
    check_compatible(f1, f2)?;
    Ok(-f1
        .values()
        .iter()
        .zip(f2.values())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>())
}

/// Per-dimension scaling of SVM inputs fitted on training differences.
///
/// Each dimension is divided by `rms_j · √dim`, so an average training
/// vector has unit norm; a model trained in scaled space is folded back
/// so that it scores raw differences directly.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureScaler {
    factors: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Vec<f64>>,
    {
        let mut sums: Vec<f64> = Vec::new();
        let mut n = 0usize;
        for row in rows {
            if n == 0 {
                sums = vec![0.0; row.len()];
            } else if row.len() != sums.len() {
                return Err(Error::DimensionMismatch(format!(
                    "scaler rows of dim {} and {}",
                    sums.len(),
                    row.len()
                )));
            }
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v * v;
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::EmptyTrainingSet("no rows to fit a scaler on"));
        }
        let root_dim = (sums.len() as f64).sqrt();
        let factors = sums
            .iter()
            .map(|s| {
                let rms = (s / n as f64).sqrt();
                if rms > 0.0 {
                    rms * root_dim
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.factors).map(|(v, f)| v / f).collect()
    }

    /// Re-expresses a model trained on scaled inputs in raw coordinates.
    pub fn fold_into(&self, mut model: SvmModel) -> SvmModel {
        for (w, f) in model.normal.iter_mut().zip(&self.factors) {
            *w /= f;
        }
        model
    }
}

/// Fits a scaler on all training differences, trains in scaled space and
/// returns the model in raw coordinates.
pub fn train_scaled(positives: &[Vec<f64>], negatives: &[Vec<f64>], params: SvmParams) -> Result<SvmModel> {
    let scaler = FeatureScaler::fit(positives.iter().chain(negatives))?;
    let pos: Vec<Vec<f64>> = positives.iter().map(|d| scaler.apply(d)).collect();
    let neg: Vec<Vec<f64>> = negatives.iter().map(|d| scaler.apply(d)).collect();
    Ok(scaler.fold_into(train_svm(&pos, &neg, params)?))
}

pub const C_GRID: [f64; 5] = [0.001, 0.01, 0.1, 1.0, 10.0];

#[derive(Clone, Debug, PartialEq)]
pub struct CChoice {
    pub c: f64,
    /// Mean held-out EER for every grid value, in grid order.
    pub curve: Vec<(f64, f64)>,
}

/// Picks the soft-margin constant by k-fold cross-validation: each fold's
/// model (scaler included) sees only the other folds, and the fold EERs
/// are averaged. Ties go to the smaller, more regularised C. Folds without
/// both genuine and impostor rows on either side are skipped.
pub fn select_c(
    positives: &[Vec<f64>],
    pos_folds: &[usize],
    negatives: &[Vec<f64>],
    neg_folds: &[usize],
    grid: &[f64],
    params: SvmParams,
) -> Result<CChoice> {
    if pos_folds.len() != positives.len() || neg_folds.len() != negatives.len() {
        return Err(Error::DimensionMismatch("one fold label per training row".into()));
    }
    let k = pos_folds.iter().chain(neg_folds).max().map_or(0, |m| m + 1);
    let part = |rows: &[Vec<f64>], folds: &[usize], f: usize| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let (mut fit, mut held) = (Vec::new(), Vec::new());
        for (r, &g) in rows.iter().zip(folds) {
            if g == f {
                held.push(r.clone())
            } else {
                fit.push(r.clone())
            }
        }
        (fit, held)
    };
    let splits: Vec<_> = (0..k)
        .map(|f| (part(positives, pos_folds, f), part(negatives, neg_folds, f)))
        .filter(|((pf, ph), (nf, nh))| [pf, ph, nf, nh].iter().all(|v| !v.is_empty()))
        .collect();
    if splits.is_empty() {
        return Err(Error::EmptyTrainingSet("no usable cross-validation fold"));
    }
    let mut curve = Vec::with_capacity(grid.len());
    for &c in grid {
        let p = SvmParams { c, ..params };
        p.validate()?;
        let mut total = 0.0;
        for ((pos_fit, pos_held), (neg_fit, neg_held)) in &splits {
            let m = train_scaled(pos_fit, neg_fit, p)?;
            let score = |rows: &[Vec<f64>]| rows.iter().map(|d| m.decision(d)).collect::<Result<Vec<_>>>();
            total += compute_roc(&score(pos_held)?, &score(neg_held)?)?.eer;
        }
        curve.push((c, total / splits.len() as f64));
    }
    let mut best: Option<(f64, f64)> = None;
    for &(c, eer) in &curve {
        if best.is_none_or(|(bc, be)| eer < be || (eer == be && c < bc)) {
            best = Some((c, eer));
        }
    }
    let (c, _) = best.ok_or_else(|| Error::InvalidParams("empty C grid".into()))?;
    Ok(CChoice { c, curve })
}

/// Min-max normalisation bounds fitted on training scores.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreStats {
    pub min_g: f64,
    pub max_g: f64,
    pub min_i: f64,
    pub max_i: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ScoreStats {
    /// Rebuilds stats from persisted bounds.
    pub fn from_bounds(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::DegenerateScores(0, lo));
        }
        Ok(Self {
            min_g: lo,
            max_g: hi,
            min_i: lo,
            max_i: hi,
            lo,
            hi,
        })
    }
}

fn extremes(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    })
}

pub fn fit_score_stats(genuine: &[f64], impostor: &[f64]) -> Result<ScoreStats> {
    if genuine.is_empty() {
        return Err(Error::EmptyScores("genuine"));
    }
    if impostor.is_empty() {
        return Err(Error::EmptyScores("impostor"));
    }
    let (min_g, max_g) = extremes(genuine);
    let (min_i, max_i) = extremes(impostor);
    let (lo, hi) = (min_g.min(min_i), max_g.max(max_i));
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(Error::DegenerateScores(genuine.len() + impostor.len(), lo));
    }
    Ok(ScoreStats {
        min_g,
        max_g,
        min_i,
        max_i,
        lo,
        hi,
    })
}

pub fn normalize_score(s: f64, stats: &ScoreStats) -> f64 {
    ((s - stats.lo) / (stats.hi - stats.lo)).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusionParams {
    alpha: f64,
}

impl FusionParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

pub fn fuse_scores(primary_norm: f64, soft_norm: f64, p: FusionParams) -> f64 {
    p.alpha * primary_norm + (1.0 - p.alpha) * soft_norm
}

/// Normalised genuine and impostor scores of one channel.
#[derive(Clone, Copy, Debug)]
pub struct ChannelScores<'a> {
    pub genuine: &'a [f64],
    pub impostor: &'a [f64],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaChoice {
    pub alpha: f64,
    pub eer: f64,
    pub d_prime: f64,
}

pub const ALPHA_GRID: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Grid search for the fusion weight with the lowest EER; ties go to the
/// weight whose fused scores separate best (largest d′), then to the
/// larger weight.
pub fn select_alpha(primary: ChannelScores<'_>, soft: ChannelScores<'_>, grid: &[f64]) -> Result<AlphaChoice> {
    if primary.genuine.len() != soft.genuine.len() || primary.impostor.len() != soft.impostor.len() {
        return Err(Error::DimensionMismatch(
            "primary and soft score lists differ in length".into(),
        ));
    }
    let mut best: Option<AlphaChoice> = None;
    for &alpha in grid {
        let p = FusionParams::new(alpha)?;
        let fuse =
            |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(&x, &y)| fuse_scores(x, y, p)).collect() };
        let g = fuse(primary.genuine, soft.genuine);
        let i = fuse(primary.impostor, soft.impostor);
        let eer = compute_roc(&g, &i)?.eer;
        let cand = AlphaChoice {
            alpha,
            eer,
            d_prime: d_prime(&g, &i),
        };
        let better = match best {
            None => true,
            Some(b) => {
                cand.eer < b.eer
                    || (cand.eer == b.eer
                        && (cand.d_prime > b.d_prime || (cand.d_prime == b.d_prime && cand.alpha > b.alpha)))
            }
        };
        if better {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| Error::InvalidParams("empty alpha grid".into()))
}

/// Decidability index `|μg − μi| / √((σg² + σi²)/2)`; infinite when both
/// distributions are point masses at different values.
pub fn d_prime(genuine: &[f64], impostor: &[f64]) -> f64 {
    let stats = |xs: &[f64]| {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n)
    };
    let (mg, vg) = stats(genuine);
    let (mi, vi) = stats(impostor);
    let spread = ((vg + vi) / 2.0).sqrt();
    let gap = (mg - mi).abs();
    if spread > 0.0 {
        gap / spread
    } else if gap > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

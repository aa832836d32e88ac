//! End-to-end verification experiment.
//!
//! index → pairs → layer separation and soft features (per image) →
//! alignment and primary features (per pair) → SVM, score statistics and
//! fusion weight (train role) → scores (test role) → ROC per channel.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::dataset::{index_dataset_with, DatasetIndex};
use super::pairs::{build_pairs, PairSet, Role, Split};
use super::roc::{compute_roc, roc_csv, RocCurve};
use crate::config::{write_config, AlphaSetting, Matching, PrimarySource, RunConfig};
use crate::error::{Error, Result, StageContext};
use crate::features::{
    align_pair, amv_feature, hog_feature, hsp_feature, lbp_feature, mv_feature, wld_feature, Extractor, FeatureVector,
};
use crate::imgcore::{load_image, GrayImage};
use crate::layers::{separate_gb, separate_ils, LayerMethod, LayerPair};
use crate::matcher::{
    diff_vector_with, fit_score_stats, fuse_scores, manhattan_score, normalize_score, save_model, select_alpha,
    select_c, train_scaled, CChoice, ChannelScores, FusionParams, ScoreStats, SvmModel, SvmParams, ALPHA_GRID, C_GRID,
};
use crate::textfmt::sig9;

pub fn separate(roi: &GrayImage, cfg: &RunConfig) -> Result<LayerPair> {
    match cfg.layer_method {
        LayerMethod::Gb => separate_gb(roi, &cfg.gb),
        LayerMethod::Ils => separate_ils(roi, &cfg.ils),
    }
}

/// The image primary features are computed on.
pub fn primary_source(roi: GrayImage, layers: &LayerPair, cfg: &RunConfig) -> GrayImage {
    match cfg.primary_source {
        PrimarySource::Roi => roi,
        PrimarySource::Foreground => layers.foreground.clone(),
    }
}

pub fn extract_primary(img: &GrayImage, extractor: Extractor, cfg: &RunConfig) -> Result<FeatureVector> {
    match extractor {
        Extractor::Lbp => lbp_feature(img, cfg.lbp_grid),
        Extractor::Wld => wld_feature(img, cfg.wld),
        Extractor::Hog => hog_feature(img, cfg.hog),
        other => Err(Error::InvalidParams(format!("{other} is not a primary extractor"))),
    }
}

pub fn extract_soft(background: &GrayImage, extractor: Extractor, cfg: &RunConfig) -> Result<FeatureVector> {
    match extractor {
        Extractor::Mv => Ok(mv_feature(background)),
        Extractor::Amv => amv_feature(background, cfg.amv_grid),
        Extractor::Hsp => hsp_feature(background, &cfg.hsp),
        other => Err(Error::InvalidParams(format!("{other} is not a soft extractor"))),
    }
}

/// Rows kept from every aligned pair: the shortest image minus the search
/// radius, so that every pair yields primary features of equal length.
pub fn window_rows(min_height: usize, max_shift: usize) -> Result<usize> {
    min_height.checked_sub(max_shift).filter(|&r| r >= 3).ok_or_else(|| {
        Error::ImageTooSmall(format!(
            "height {min_height} leaves no rows after a {max_shift}-row shift search"
        ))
    })
}

/// Aligns two primary-source images and extracts primary features from a
/// centred window of `rows` rows of the overlap.
pub fn pair_primary_features(
    a: &GrayImage,
    b: &GrayImage,
    extractor: Extractor,
    rows: usize,
    cfg: &RunConfig,
) -> Result<(FeatureVector, FeatureVector)> {
    let (ca, cb) = if cfg.max_shift == 0 {
        (a.crop(0, 0, a.width(), rows)?, b.crop(0, 0, b.width(), rows)?)
    } else {
        let al = align_pair(a, b, cfg.max_shift)?;
        let (sa, sb) = al.centred_window(rows)?;
        (a.crop(0, sa, a.width(), rows)?, b.crop(0, sb, b.width(), rows)?)
    };
    Ok((
        extract_primary(&ca, extractor, cfg)?,
        extract_primary(&cb, extractor, cfg)?,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    Genuine,
    Impostor,
}

impl PairKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PairKind::Genuine => "genuine",
            PairKind::Impostor => "impostor",
        }
    }
}

/// Normalised scores for one pair; `None` for channels not configured.
#[derive(Clone, Debug, PartialEq)]
pub struct PairScore {
    pub kind: PairKind,
    pub id_a: String,
    pub id_b: String,
    pub primary: Option<f64>,
    pub soft: Option<f64>,
    pub fused: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Counts {
    pub train_classes: usize,
    pub test_classes: usize,
    pub train_genuine: usize,
    pub train_impostor: usize,
    pub test_genuine: usize,
    pub test_impostor: usize,
    pub images: usize,
    pub window_rows: usize,
}

#[derive(Clone, Debug)]
pub struct EvalReport {
    pub config: RunConfig,
    pub counts: Counts,
    pub train_protocol: String,
    pub test_protocol: String,
    pub primary: Option<RocCurve>,
    pub soft: Option<RocCurve>,
    /// Present only when both channels are configured.
    pub fused: Option<RocCurve>,
    pub alpha: Option<f64>,
    pub primary_stats: Option<ScoreStats>,
    pub soft_stats: Option<ScoreStats>,
    pub model: Option<SvmModel>,
    /// Cross-validation curve when C was chosen automatically.
    pub c_search: Option<CChoice>,
    pub train_scores: Vec<PairScore>,
    pub test_scores: Vec<PairScore>,
    pub timings: Vec<(&'static str, Duration)>,
    pub warnings: Vec<String>,
}

struct Prepared {
    source: GrayImage,
    soft: Option<FeatureVector>,
}

const CV_FOLDS: usize = 3;

/// One dataset role: its index, pairs and per-image preparation.
struct Side {
    index: DatasetIndex,
    pairs: PairSet,
    images: Vec<Option<Prepared>>,
}

impl Side {
    /// Fold label for every pair (genuine first): classes are numbered in
    /// index order and dealt round-robin, so no genuine class is shared
    /// between folds. Impostor pairs follow their first sample.
    fn pair_folds(&self, k: usize) -> Vec<usize> {
        let classes = self.index.by_class();
        let mut fold_of = vec![0; self.index.samples.len()];
        for (rank, members) in classes.values().enumerate() {
            for &m in members {
                fold_of[m] = rank % k;
            }
        }
        self.pairs
            .genuine
            .iter()
            .chain(&self.pairs.impostor)
            .map(|&(a, _)| fold_of[a])
            .collect()
    }
}

struct RawPair {
    primary_diff: Option<Vec<f64>>,
    primary_score: Option<f64>,
    soft_score: Option<f64>,
}

struct Timer {
    laps: Vec<(&'static str, Duration)>,
    last: Instant,
}

impl Timer {
    fn new() -> Self {
        Self {
            laps: Vec::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.laps.push((stage, now - self.last));
        self.last = now;
    }
}

pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start {threads} worker threads: {e}")))
}

fn prepare_side(side: &mut Side, cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<()> {
    let mut needed = vec![false; side.index.samples.len()];
    for &(a, b) in side.pairs.genuine.iter().chain(&side.pairs.impostor) {
        needed[a] = true;
        needed[b] = true;
    }
    let wanted: Vec<usize> = (0..needed.len()).filter(|&i| needed[i]).collect();
    let samples = &side.index.samples;
    let prepared: Vec<Prepared> = pool.install(|| {
        wanted
            .par_iter()
            .map(|&i| {
                let roi = load_image(&samples[i].path)?;
                let layers = separate(&roi, cfg)?;
                let soft = cfg.soft.map(|e| extract_soft(&layers.background, e, cfg)).transpose()?;
                Ok(Prepared {
                    source: primary_source(roi, &layers, cfg),
                    soft,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    side.images = (0..needed.len()).map(|_| None).collect();
    for (i, p) in wanted.into_iter().zip(prepared) {
        side.images[i] = Some(p);
    }
    Ok(())
}

fn min_height(sides: &[&Side]) -> Option<usize> {
    sides
        .iter()
        .flat_map(|s| s.images.iter().flatten())
        .map(|p| p.source.height())
        .min()
}

fn raw_scores(side: &Side, cfg: &RunConfig, rows: usize, pool: &rayon::ThreadPool) -> Result<Vec<RawPair>> {
    let pairs: Vec<(usize, usize)> = side.pairs.genuine.iter().chain(&side.pairs.impostor).copied().collect();
    let img = |i: usize| side.images[i].as_ref().expect("every paired image was prepared");
    pool.install(|| {
        pairs
            .par_iter()
            .map(|&(a, b)| {
                let (pa, pb) = (img(a), img(b));
                let mut raw = RawPair {
                    primary_diff: None,
                    primary_score: None,
                    soft_score: None,
                };
                if let Some(e) = cfg.primary {
                    let (fa, fb) = pair_primary_features(&pa.source, &pb.source, e, rows, cfg)?;
                    match cfg.matching {
                        Matching::Hybrid => raw.primary_diff = Some(diff_vector_with(&fa, &fb, cfg.diff_mode)?),
                        Matching::Single => raw.primary_score = Some(manhattan_score(&fa, &fb)?),
                    }
                }
                if let (Some(sa), Some(sb)) = (&pa.soft, &pb.soft) {
                    raw.soft_score = Some(manhattan_score(sa, sb)?);
                }
                Ok(raw)
            })
            .collect()
    })
}

fn split_by_kind(scores: &[f64], genuine: usize) -> ChannelScores<'_> {
    ChannelScores {
        genuine: &scores[..genuine],
        impostor: &scores[genuine..],
    }
}

fn collect(raw: &[RawPair], pick: impl Fn(&RawPair) -> Option<f64>) -> Option<Vec<f64>> {
    raw.iter().map(pick).collect()
}

/// Runs the experiment without writing anything.
pub fn evaluate(cfg: &RunConfig, threads: usize) -> Result<EvalReport> {
    pipeline(cfg, threads, true)
}

/// Training role only: model, score statistics and fusion weight; the
/// report carries no test scores or curves.
pub fn train_only(cfg: &RunConfig, threads: usize) -> Result<EvalReport> {
    pipeline(cfg, threads, false)
}

fn pipeline(cfg: &RunConfig, threads: usize, with_test: bool) -> Result<EvalReport> {
    cfg.validate()?;
    let pool = thread_pool(threads)?;
    let mut timer = Timer::new();
    let overrides = cfg.layout_overrides.as_deref();

    let train_index = index_dataset_with(&cfg.dataset_root, cfg.layout, overrides).stage("index")?;
    let test_index = match &cfg.test_root {
        Some(root) if with_test => {
            Some(index_dataset_with(root, cfg.test_layout.unwrap_or(cfg.layout), overrides).stage("index")?)
        }
        _ => None,
    };
    let mut warnings = train_index.warnings.clone();
    if let Some(t) = &test_index {
        warnings.extend(t.warnings.iter().cloned());
    }
    timer.lap("index");

    let split = cfg.effective_split();
    let train_pairs = build_pairs(
        &train_index,
        Role::Train,
        split,
        cfg.train_impostors,
        cfg.train_pair_seed,
    )
    .stage("pairs")?;
    let (test_src, test_split) = match &test_index {
        Some(t) => (t, Split::Whole),
        None => (&train_index, split),
    };
    let test_pairs = if with_test {
        build_pairs(test_src, Role::Test, test_split, cfg.test_impostors, cfg.test_pair_seed).stage("pairs")?
    } else {
        PairSet {
            genuine: Vec::new(),
            impostor: Vec::new(),
            protocol: "not run".into(),
            seed: cfg.test_pair_seed,
        }
    };
    let mut train = Side {
        index: train_index.clone(),
        pairs: train_pairs,
        images: Vec::new(),
    };
    let mut test = Side {
        index: test_src.clone(),
        pairs: test_pairs,
        images: Vec::new(),
    };
    timer.lap("pairs");

    prepare_side(&mut train, cfg, &pool).stage("layers")?;
    prepare_side(&mut test, cfg, &pool).stage("layers")?;
    timer.lap("layers");

    let rows = match cfg.primary {
        Some(_) => window_rows(min_height(&[&train, &test]).unwrap_or(0), cfg.max_shift).stage("align")?,
        None => 0,
    };
    let mut train_raw = raw_scores(&train, cfg, rows, &pool).stage("primary")?;
    timer.lap("train-features");

    // primary channel: SVM on the training differences, C cross-validated
    // over class-disjoint folds unless fixed
    let n_train_gen = train.pairs.genuine.len();
    let mut model = None;
    let mut c_search = None;
    let train_primary: Option<Vec<f64>> = match (cfg.primary, cfg.matching) {
        (None, _) => None,
        (Some(_), Matching::Single) => collect(&train_raw, |r| r.primary_score),
        (Some(_), Matching::Hybrid) => {
            let diffs: Vec<Vec<f64>> = train_raw
                .iter_mut()
                .map(|r| r.primary_diff.take().expect("hybrid diff"))
                .collect();
            let (pos, neg) = diffs.split_at(n_train_gen);
            let mut params = cfg.svm;
            if cfg.svm_c_auto {
                let folds = train.pair_folds(CV_FOLDS);
                let (pf, nf) = folds.split_at(n_train_gen);
                let choice = select_c(pos, pf, neg, nf, &C_GRID, params).stage("train")?;
                params = SvmParams { c: choice.c, ..params };
                c_search = Some(choice);
            }
            let m = train_scaled(pos, neg, params).stage("train")?;
            let scores = diffs
                .iter()
                .map(|d| m.decision(d))
                .collect::<Result<Vec<_>>>()
                .stage("train")?;
            model = Some(m);
            Some(scores)
        }
    };
    let train_soft = collect(&train_raw, |r| r.soft_score);
    drop(train_raw);

    let fit = |s: &Option<Vec<f64>>| -> Result<Option<ScoreStats>> {
        s.as_ref()
            .map(|v| {
                let c = split_by_kind(v, n_train_gen);
                fit_score_stats(c.genuine, c.impostor)
            })
            .transpose()
    };
    let primary_stats = fit(&train_primary).stage("train")?;
    let soft_stats = fit(&train_soft).stage("train")?;
    let normalise = |s: &Option<Vec<f64>>, st: &Option<ScoreStats>| -> Option<Vec<f64>> {
        match (s, st) {
            (Some(v), Some(st)) => Some(v.iter().map(|&x| normalize_score(x, st)).collect()),
            _ => None,
        }
    };
    let train_p = normalise(&train_primary, &primary_stats);
    let train_s = normalise(&train_soft, &soft_stats);
    let alpha = match (&train_p, &train_s, cfg.alpha) {
        (Some(_), Some(_), AlphaSetting::Fixed(a)) => Some(a),
        (Some(p), Some(s), AlphaSetting::Auto) => Some(
            select_alpha(
                split_by_kind(p, n_train_gen),
                split_by_kind(s, n_train_gen),
                &ALPHA_GRID,
            )
            .stage("train")?
            .alpha,
        ),
        _ => None,
    };
    let fusion = alpha.map(FusionParams::new).transpose().stage("train")?;
    timer.lap("train");

    let test_raw = raw_scores(&test, cfg, rows, &pool).stage("score")?;
    let test_primary: Option<Vec<f64>> = match (&model, cfg.primary) {
        (Some(m), _) => Some(
            test_raw
                .iter()
                .map(|r| m.decision(r.primary_diff.as_ref().expect("hybrid diff")))
                .collect::<Result<Vec<_>>>()
                .stage("score")?,
        ),
        (None, Some(_)) => collect(&test_raw, |r| r.primary_score),
        (None, None) => None,
    };
    let test_p = normalise(&test_primary, &primary_stats);
    let test_s = normalise(&collect(&test_raw, |r| r.soft_score), &soft_stats);
    drop(test_raw);
    let fused_of = |p: &Option<Vec<f64>>, s: &Option<Vec<f64>>| -> Option<Vec<f64>> {
        match (p, s, fusion) {
            (Some(p), Some(s), Some(f)) => Some(p.iter().zip(s).map(|(&a, &b)| fuse_scores(a, b, f)).collect()),
            _ => None,
        }
    };
    let train_f = fused_of(&train_p, &train_s);
    let test_f = fused_of(&test_p, &test_s);
    timer.lap("score");

    let n_test_gen = test.pairs.genuine.len();
    let roc = |s: &Option<Vec<f64>>| -> Result<Option<RocCurve>> {
        s.as_ref()
            .map(|v| {
                let c = split_by_kind(v, n_test_gen);
                compute_roc(c.genuine, c.impostor)
            })
            .transpose()
    };
    let (primary_roc, soft_roc, fused_roc) = if with_test {
        (
            roc(&test_p).stage("roc")?,
            roc(&test_s).stage("roc")?,
            roc(&test_f).stage("roc")?,
        )
    } else {
        (None, None, None)
    };
    timer.lap("roc");

    let table = |side: &Side, p: &Option<Vec<f64>>, s: &Option<Vec<f64>>, f: &Option<Vec<f64>>| {
        let n_gen = side.pairs.genuine.len();
        side.pairs
            .genuine
            .iter()
            .chain(&side.pairs.impostor)
            .enumerate()
            .map(|(k, &(a, b))| PairScore {
                kind: if k < n_gen {
                    PairKind::Genuine
                } else {
                    PairKind::Impostor
                },
                id_a: side.index.samples[a].rel.clone(),
                id_b: side.index.samples[b].rel.clone(),
                primary: p.as_ref().map(|v| v[k]),
                soft: s.as_ref().map(|v| v[k]),
                fused: f.as_ref().map(|v| v[k]),
            })
            .collect::<Vec<_>>()
    };
    let train_scores = table(&train, &train_p, &train_s, &train_f);
    let test_scores = table(&test, &test_p, &test_s, &test_f);

    let classes_of = |side: &Side| {
        let mut c: Vec<_> = side
            .pairs
            .genuine
            .iter()
            .chain(&side.pairs.impostor)
            .flat_map(|&(a, b)| [side.index.samples[a].class(), side.index.samples[b].class()])
            .collect();
        c.sort();
        c.dedup();
        c.len()
    };
    let counts = Counts {
        train_classes: classes_of(&train),
        test_classes: classes_of(&test),
        train_genuine: train.pairs.genuine.len(),
        train_impostor: train.pairs.impostor.len(),
        test_genuine: test.pairs.genuine.len(),
        test_impostor: test.pairs.impostor.len(),
        images: train.images.iter().flatten().count() + test.images.iter().flatten().count(),
        window_rows: rows,
    };

    Ok(EvalReport {
        config: cfg.clone(),
        counts,
        train_protocol: train.pairs.protocol.clone(),
        test_protocol: test.pairs.protocol.clone(),
        primary: primary_roc,
        soft: soft_roc,
        fused: fused_roc,
        alpha,
        primary_stats,
        soft_stats,
        model,
        c_search,
        train_scores,
        test_scores,
        timings: timer.laps,
        warnings,
    })
}

/// Runs the experiment and writes every artefact into `cfg.output_dir`.
pub fn run_evaluation(cfg: &RunConfig, threads: usize) -> Result<EvalReport> {
    let report = evaluate(cfg, threads)?;
    write_outputs(&report, &cfg.output_dir).stage("report")?;
    Ok(report)
}

fn opt9(v: Option<f64>) -> String {
    v.map(sig9).unwrap_or_default()
}

pub fn scores_csv(scores: &[PairScore]) -> String {
    let mut out = String::from("pair_kind,id_a,id_b,score_primary,score_soft,score_fused\n");
    for s in scores {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.kind.as_str(),
            s.id_a,
            s.id_b,
            opt9(s.primary),
            opt9(s.soft),
            opt9(s.fused)
        );
    }
    out
}

impl EvalReport {
    pub fn eer(&self, channel: Channel) -> Option<f64> {
        match channel {
            Channel::Primary => self.primary.as_ref(),
            Channel::Soft => self.soft.as_ref(),
            Channel::Fused => self.fused.as_ref(),
        }
        .map(|c| c.eer)
    }

    /// Plain-text summary; contains nothing that varies between identical
    /// runs (timings live in a separate file).
    pub fn summary(&self) -> String {
        let cfg = &self.config;
        let c = &self.counts;
        let mut out = String::new();
        let name = |e: Option<Extractor>| e.map_or("none".to_string(), |e| e.to_string());
        let _ = writeln!(out, "veinfuse evaluation");
        let _ = writeln!(out, "layout: {} (split {})", cfg.layout, cfg.effective_split());
        let _ = writeln!(
            out,
            "layers: {}  primary: {}  soft: {}  matching: {}",
            cfg.layer_method.as_str(),
            name(cfg.primary),
            name(cfg.soft),
            match cfg.matching {
                Matching::Hybrid => "hybrid",
                Matching::Single => "single",
            }
        );
        let _ = writeln!(out, "train: {}", self.train_protocol);
        let _ = writeln!(out, "test:  {}", self.test_protocol);
        let _ = writeln!(out, "images: {}  window rows: {}", c.images, c.window_rows);
        if let Some(m) = &self.model {
            let meta = m.train_meta.as_ref();
            let _ = writeln!(
                out,
                "svm: dim {}  C {}  epochs {}  objective {}  converged {}",
                m.dim(),
                sig9(m.c_param),
                meta.map_or(0, |t| t.epochs),
                meta.map_or(String::new(), |t| sig9(t.final_objective)),
                meta.is_some_and(|t| t.converged)
            );
        }
        if let Some(cv) = &self.c_search {
            let curve: Vec<String> = cv
                .curve
                .iter()
                .map(|(c, e)| format!("{}:{}", sig(*c), sig(*e)))
                .collect();
            let _ = writeln!(out, "svm C cross-validation (C:eer): {}", curve.join(" "));
        }
        for (label, st) in [("primary", &self.primary_stats), ("soft", &self.soft_stats)] {
            if let Some(st) = st {
                let _ = writeln!(
                    out,
                    "{label} stats: lo {}  hi {}  genuine [{}, {}]  impostor [{}, {}]",
                    sig9(st.lo),
                    sig9(st.hi),
                    sig9(st.min_g),
                    sig9(st.max_g),
                    sig9(st.min_i),
                    sig9(st.max_i)
                );
            }
        }
        if let Some(a) = self.alpha {
            let how = match cfg.alpha {
                AlphaSetting::Auto => "selected on training pairs",
                AlphaSetting::Fixed(_) => "fixed",
            };
            let _ = writeln!(out, "alpha: {} ({how})", sig9(a));
        }
        for (label, curve) in [("primary", &self.primary), ("soft", &self.soft), ("fused", &self.fused)] {
            if let Some(curve) = curve {
                let _ = writeln!(
                    out,
                    "EER {label}: {}%  (threshold {})",
                    sig(100.0 * curve.eer),
                    sig9(curve.eer_threshold)
                );
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }

    /// Configuration with the trained state pinned, for later single-pair
    /// matching or an exact re-run.
    pub fn trained_config(&self, model_path: Option<&Path>) -> RunConfig {
        let mut cfg = self.config.clone();
        if let Some(a) = self.alpha {
            cfg.alpha = AlphaSetting::Fixed(a);
        }
        if let Some(m) = &self.model {
            cfg.svm.c = m.c_param;
            cfg.svm_c_auto = false;
        }
        cfg.primary_stats = self.primary_stats.map(|s| (s.lo, s.hi));
        cfg.soft_stats = self.soft_stats.map(|s| (s.lo, s.hi));
        cfg.model = model_path.map(Path::to_path_buf);
        cfg
    }
}

fn sig(x: f64) -> String {
    crate::textfmt::sig(x, 6)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Primary,
    Soft,
    Fused,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Primary => "primary",
            Channel::Soft => "soft",
            Channel::Fused => "fused",
        }
    }
}

pub fn write_outputs(report: &EvalReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::write_io(dir, e))?;
    let put = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::write_io(&p, e))
    };
    put("scores_train.csv", scores_csv(&report.train_scores))?;
    put("scores_test.csv", scores_csv(&report.test_scores))?;
    for (ch, curve) in [
        (Channel::Primary, &report.primary),
        (Channel::Soft, &report.soft),
        (Channel::Fused, &report.fused),
    ] {
        if let Some(curve) = curve {
            put(&format!("roc_{}.csv", ch.as_str()), roc_csv(curve))?;
        }
    }
    put("report.txt", report.summary())?;
    let mut timing = String::new();
    for (stage, d) in &report.timings {
        let _ = writeln!(timing, "{stage} {:.3}s", d.as_secs_f64());
    }
    put("timing.txt", timing)?;
    write_config(&report.config, dir.join("resolved.cfg"))?;
    let model_path = match &report.model {
        Some(m) => {
            let p = dir.join("model.txt");
            save_model(m, &p)?;
            Some(p)
        }
        None => None,
    };
    write_config(&report.trained_config(model_path.as_deref()), dir.join("trained.cfg"))
}

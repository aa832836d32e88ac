//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored, unknown keys are rejected and
//! every missing key takes its default. Relative paths are resolved against
//! the directory holding the config file, so the resolved echo written next
//! to a run's outputs parses back to the same configuration.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evalproto::{ImpostorCount, Layout, Split, SynthParams};
use crate::features::{BlockGrid, Extractor, FeatureKind, HogParams, HspParams, WldParams};
use crate::layers::{GbParams, IlsParams, LayerMethod};
use crate::matcher::{DiffMode, ScoreStats, SvmParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimarySource {
    Roi,
    Foreground,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Matching {
    /// SVM on primary differences, Manhattan on soft features.
    Hybrid,
    /// Manhattan on both channels.
    Single,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaSetting {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset_root: PathBuf,
    pub layout: Layout,
    pub layout_overrides: Option<PathBuf>,
    /// Separate test corpus; when set, training uses `dataset_root` whole.
    pub test_root: Option<PathBuf>,
    pub test_layout: Option<Layout>,
    /// `None` picks session splits for multi-session layouts, class splits
    /// otherwise.
    pub split: Option<Split>,
    pub layer_method: LayerMethod,
    pub gb: GbParams,
    pub ils: IlsParams,
    pub primary: Option<Extractor>,
    pub primary_source: PrimarySource,
    pub lbp_grid: BlockGrid,
    pub wld: WldParams,
    pub hog: HogParams,
    pub soft: Option<Extractor>,
    pub amv_grid: BlockGrid,
    pub hsp: HspParams,
    pub matching: Matching,
    pub svm: SvmParams,
    /// `svm_c = auto`: pick C by cross-validation on the training pairs;
    /// `svm.c` is ignored while set.
    pub svm_c_auto: bool,
    pub diff_mode: DiffMode,
    pub alpha: AlphaSetting,
    /// Vertical alignment search radius; 0 disables alignment.
    pub max_shift: usize,
    pub train_pair_seed: u64,
    pub test_pair_seed: u64,
    pub train_impostors: ImpostorCount,
    pub test_impostors: ImpostorCount,
    pub output_dir: PathBuf,
    pub synth: SynthParams,
    /// Trained state consumed by single-pair matching.
    pub model: Option<PathBuf>,
    pub primary_stats: Option<(f64, f64)>,
    pub soft_stats: Option<(f64, f64)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset_root: PathBuf::from("data"),
            layout: Layout::Synth,
            layout_overrides: None,
            test_root: None,
            test_layout: None,
            split: None,
            layer_method: LayerMethod::Gb,
            gb: GbParams::default(),
            ils: IlsParams::default(),
            primary: Some(Extractor::Lbp),
            primary_source: PrimarySource::Foreground,
            lbp_grid: BlockGrid::new(4, 8),
            wld: WldParams::default(),
            hog: HogParams::default(),
            soft: Some(Extractor::Amv),
            amv_grid: BlockGrid::new(8, 16),
            hsp: HspParams::default(),
            matching: Matching::Hybrid,
            svm: SvmParams::default(),
            svm_c_auto: false,
            diff_mode: DiffMode::Abs,
            alpha: AlphaSetting::Auto,
            max_shift: 15,
            train_pair_seed: 1,
            test_pair_seed: 2,
            train_impostors: ImpostorCount::Ratio(1.0),
            test_impostors: ImpostorCount::Ratio(10.0),
            output_dir: PathBuf::from("out"),
            synth: SynthParams::default(),
            model: None,
            primary_stats: None,
            soft_stats: None,
        }
    }
}

impl RunConfig {
    pub fn effective_split(&self) -> Split {
        match (self.split, &self.test_root) {
            (_, Some(_)) => Split::Whole,
            (Some(s), None) => s,
            (None, None) if self.layout.is_multi_session() => Split::Session,
            (None, None) => Split::Classes,
        }
    }

    pub fn primary_stats(&self) -> Option<ScoreStats> {
        self.primary_stats
            .and_then(|(lo, hi)| ScoreStats::from_bounds(lo, hi).ok())
    }

    pub fn soft_stats(&self) -> Option<ScoreStats> {
        self.soft_stats
            .and_then(|(lo, hi)| ScoreStats::from_bounds(lo, hi).ok())
    }

    /// Parses `key = value` text; relative paths resolve against `base`.
    pub fn from_str_in(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.dataset_root = base.join(&cfg.dataset_root);
        cfg.output_dir = base.join(&cfg.output_dir);
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    what: "config",
                    line: line_no + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            cfg.set(key.trim(), value.trim(), base)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = |v: &str| -> PathBuf {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let opt_path = |v: &str| (!v.is_empty()).then(|| path(v));
        match key {
            "dataset_root" => self.dataset_root = path(value),
            "layout" => self.layout = parse(key, value)?,
            "layout_overrides" => self.layout_overrides = opt_path(value),
            "test_root" => self.test_root = opt_path(value),
            "test_layout" => self.test_layout = opt(key, value)?,
            "split" => {
                self.split = match value {
                    "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "layer_method" => {
                self.layer_method = match value {
                    "gb" => LayerMethod::Gb,
                    "ils" => LayerMethod::Ils,
                    _ => return Err(Error::type_error(key, "expected gb or ils")),
                }
            }
            "sigma" => self.gb.sigma = parse(key, value)?,
            "ils_lambda" => self.ils.smooth_weight = parse(key, value)?,
            "ils_iterations" => self.ils.iterations = parse(key, value)?,
            "ils_tolerance" => self.ils.step_tolerance = parse(key, value)?,
            "primary" => self.primary = extractor(key, value, FeatureKind::Primary)?,
            "primary_source" => {
                self.primary_source = match value {
                    "roi" => PrimarySource::Roi,
                    "foreground" => PrimarySource::Foreground,
                    _ => return Err(Error::type_error(key, "expected roi or foreground")),
                }
            }
            "lbp_grid" => self.lbp_grid = parse(key, value)?,
            "wld_excitation_bins" => self.wld.excitation_bins = parse(key, value)?,
            "wld_orientation_bins" => self.wld.orientation_bins = parse(key, value)?,
            "hog_cell" => self.hog.cell = parse(key, value)?,
            "hog_block" => self.hog.block = parse(key, value)?,
            "hog_bins" => self.hog.bins = parse(key, value)?,
            "soft" => self.soft = extractor(key, value, FeatureKind::Soft)?,
            "amv_grid" => self.amv_grid = parse(key, value)?,
            "hsp_levels" => {
                self.hsp.levels = value
                    .split(',')
                    .map(|g| parse(key, g.trim()))
                    .collect::<Result<Vec<_>>>()?
            }
            "hsp_bins" => self.hsp.bins = parse(key, value)?,
            "matching" => {
                self.matching = match value {
                    "hybrid" => Matching::Hybrid,
                    "single" => Matching::Single,
                    _ => return Err(Error::type_error(key, "expected hybrid or single")),
                }
            }
            "svm_c" => {
                self.svm_c_auto = value == "auto";
                if !self.svm_c_auto {
                    self.svm.c = parse(key, value)?;
                }
            }
            "svm_seed" => self.svm.seed = parse(key, value)?,
            "svm_max_epochs" => self.svm.max_epochs = parse(key, value)?,
            "svm_tolerance" => self.svm.tolerance = parse(key, value)?,
            "diff_mode" => self.diff_mode = parse(key, value)?,
            "alpha" => {
                self.alpha = match value {
                    "auto" => AlphaSetting::Auto,
                    v => AlphaSetting::Fixed(parse(key, v)?),
                }
            }
            "max_shift" => self.max_shift = parse(key, value)?,
            "train_pair_seed" => self.train_pair_seed = parse(key, value)?,
            "test_pair_seed" => self.test_pair_seed = parse(key, value)?,
            "train_impostors" => self.train_impostors = parse(key, value)?,
            "test_impostors" => self.test_impostors = parse(key, value)?,
            "output_dir" => self.output_dir = path(value),
            "synth_classes" => self.synth.classes = parse(key, value)?,
            "synth_samples" => self.synth.samples_per_class = parse(key, value)?,
            "synth_width" => self.synth.width = parse(key, value)?,
            "synth_height" => self.synth.height = parse(key, value)?,
            "synth_seed" => self.synth.seed = parse(key, value)?,
            "synth_max_shift" => self.synth.max_shift = parse(key, value)?,
            "synth_x_jitter" => self.synth.max_x_jitter = parse(key, value)?,
            "synth_brightness" => self.synth.brightness_jitter = parse(key, value)?,
            "synth_noise" => self.synth.noise_sigma = parse(key, value)?,
            "synth_depth_jitter" => self.synth.vein_depth_jitter = parse(key, value)?,
            "model" => self.model = opt_path(value),
            "primary_stats" => self.primary_stats = bounds(key, value)?,
            "soft_stats" => self.soft_stats = bounds(key, value)?,
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Checks every value against its owning module's constraints and
    /// reports the first offending key.
    pub fn validate(&self) -> Result<()> {
        let at = |key: &str, r: Result<()>| r.map_err(|e| Error::type_error(key, strip(e)));
        at("sigma", self.gb.validate())?;
        at("ils_lambda", self.ils.validate())?;
        at("lbp_grid", self.lbp_grid.validate())?;
        at("wld_excitation_bins", self.wld.validate())?;
        at("hog_cell", self.hog.validate())?;
        at("amv_grid", self.amv_grid.validate())?;
        let bins_only = HspParams {
            levels: vec![BlockGrid::new(1, 1)],
            bins: self.hsp.bins,
        };
        at("hsp_bins", bins_only.validate())?;
        at("hsp_levels", self.hsp.validate())?;
        at("svm_c", self.svm.validate())?;
        at("synth_classes", self.synth.validate())?;
        if let AlphaSetting::Fixed(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::type_error("alpha", format!("{a} is outside [0, 1]")));
            }
        }
        if self.primary.is_none() && self.soft.is_none() {
            return Err(Error::type_error("primary", "primary and soft cannot both be none"));
        }
        for (key, b) in [("primary_stats", self.primary_stats), ("soft_stats", self.soft_stats)] {
            if let Some((lo, hi)) = b {
                if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
                    return Err(Error::type_error(key, format!("needs lo < hi, got {lo},{hi}")));
                }
            }
        }
        Ok(())
    }

    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let p = |p: &Path| p.display().to_string();
        let op = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let ex = |e: Option<Extractor>| e.map_or("none".to_string(), |e| e.to_string());
        let bd = |b: Option<(f64, f64)>| b.map(|(lo, hi)| format!("{lo},{hi}")).unwrap_or_default();
        kv("dataset_root", &p(&self.dataset_root));
        kv("layout", &self.layout);
        kv("layout_overrides", &op(&self.layout_overrides));
        kv("test_root", &op(&self.test_root));
        kv(
            "test_layout",
            &self.test_layout.map(|l| l.to_string()).unwrap_or_default(),
        );
        kv("split", &self.split.map_or("auto".to_string(), |s| s.to_string()));
        kv("layer_method", &self.layer_method.as_str());
        kv("sigma", &self.gb.sigma);
        kv("ils_lambda", &self.ils.smooth_weight);
        kv("ils_iterations", &self.ils.iterations);
        kv("ils_tolerance", &self.ils.step_tolerance);
        kv("primary", &ex(self.primary));
        kv(
            "primary_source",
            &match self.primary_source {
                PrimarySource::Roi => "roi",
                PrimarySource::Foreground => "foreground",
            },
        );
        kv("lbp_grid", &self.lbp_grid);
        kv("wld_excitation_bins", &self.wld.excitation_bins);
        kv("wld_orientation_bins", &self.wld.orientation_bins);
        kv("hog_cell", &self.hog.cell);
        kv("hog_block", &self.hog.block);
        kv("hog_bins", &self.hog.bins);
        kv("soft", &ex(self.soft));
        kv("amv_grid", &self.amv_grid);
        let levels: Vec<String> = self.hsp.levels.iter().map(|g| g.to_string()).collect();
        kv("hsp_levels", &levels.join(","));
        kv("hsp_bins", &self.hsp.bins);
        kv(
            "matching",
            &match self.matching {
                Matching::Hybrid => "hybrid",
                Matching::Single => "single",
            },
        );
        if self.svm_c_auto {
            kv("svm_c", &"auto");
        } else {
            kv("svm_c", &self.svm.c);
        }
        kv("svm_seed", &self.svm.seed);
        kv("svm_max_epochs", &self.svm.max_epochs);
        kv("svm_tolerance", &self.svm.tolerance);
        kv("diff_mode", &self.diff_mode);
        kv(
            "alpha",
            &match self.alpha {
                AlphaSetting::Auto => "auto".to_string(),
                AlphaSetting::Fixed(a) => a.to_string(),
            },
        );
        kv("max_shift", &self.max_shift);
        kv("train_pair_seed", &self.train_pair_seed);
        kv("test_pair_seed", &self.test_pair_seed);
        kv("train_impostors", &ratio(self.train_impostors));
        kv("test_impostors", &ratio(self.test_impostors));
        kv("output_dir", &p(&self.output_dir));
        kv("synth_classes", &self.synth.classes);
        kv("synth_samples", &self.synth.samples_per_class);
        kv("synth_width", &self.synth.width);
        kv("synth_height", &self.synth.height);
        kv("synth_seed", &self.synth.seed);
        kv("synth_max_shift", &self.synth.max_shift);
        kv("synth_x_jitter", &self.synth.max_x_jitter);
        kv("synth_brightness", &self.synth.brightness_jitter);
        kv("synth_noise", &self.synth.noise_sigma);
        kv("synth_depth_jitter", &self.synth.vein_depth_jitter);
        kv("model", &op(&self.model));
        kv("primary_stats", &bd(self.primary_stats));
        kv("soft_stats", &bd(self.soft_stats));
        out
    }
}

/// Exact text for a ratio, unlike the 9-digit report formatting.
fn ratio(c: ImpostorCount) -> String {
    match c {
        ImpostorCount::All => "all".into(),
        ImpostorCount::Ratio(r) => r.to_string(),
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::InvalidParams(m) => m,
        other => other.to_string(),
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| Error::type_error(key, format!("`{value}`: {e}")))
}

fn opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    if value.is_empty() {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn extractor(key: &str, value: &str, kind: FeatureKind) -> Result<Option<Extractor>> {
    if value == "none" {
        return Ok(None);
    }
    let e: Extractor = parse(key, value)?;
    if e.kind() != kind {
        return Err(Error::type_error(
            key,
            format!("{e} is not a {} extractor", kind.as_str()),
        ));
    }
    Ok(Some(e))
}

fn bounds(key: &str, value: &str) -> Result<Option<(f64, f64)>> {
    if value.is_empty() {
        return Ok(None);
    }
    let (lo, hi) = value
        .split_once(',')
        .ok_or_else(|| Error::type_error(key, "expected `lo,hi`"))?;
    Ok(Some((parse(key, lo.trim())?, parse(key, hi.trim())?)))
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::read_io(path, e),
    })?;
    let base = path
        .parent()
        .map(|p| if p.as_os_str().is_empty() { Path::new(".") } else { p })
        .unwrap_or(Path::new("."));
    let base = fs::canonicalize(base).unwrap_or_else(|_| base.to_path_buf());
    RunConfig::from_str_in(&text, &base)
}

pub fn write_config(cfg: &RunConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, cfg.to_config_string()).map_err(|e| Error::write_io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> &'static Path {
        Path::new("/cfg")
    }

    #[test]
    fn empty_text_is_all_defaults() {
        let cfg = RunConfig::from_str_in("", base()).unwrap();
        assert_eq!(cfg.gb.sigma, 22.0);
        assert_eq!(cfg.amv_grid, BlockGrid::new(8, 16));
        assert_eq!(cfg.alpha, AlphaSetting::Auto);
        assert_eq!(cfg.hsp.levels.last(), Some(&BlockGrid::new(6, 10)));
    }

    #[test]
    fn bad_values_name_their_key() {
        let e = RunConfig::from_str_in("sigma = -3\n", base()).unwrap_err();
        assert!(matches!(&e, Error::TypeError { key, .. } if key == "sigma"), "{e}");
        let e = RunConfig::from_str_in("sigma = wide\n", base()).unwrap_err();
        assert!(matches!(&e, Error::TypeError { key, .. } if key == "sigma"));
        let e = RunConfig::from_str_in("alpha = 1.5\n", base()).unwrap_err();
        assert!(matches!(&e, Error::TypeError { key, .. } if key == "alpha"));
        let e = RunConfig::from_str_in("primary = amv\n", base()).unwrap_err();
        assert!(matches!(&e, Error::TypeError { key, .. } if key == "primary"));
        let e = RunConfig::from_str_in("hsp_bins = 30\n", base()).unwrap_err();
        assert!(matches!(&e, Error::TypeError { key, .. } if key == "hsp_bins"));
    }

    #[test]
    fn unknown_key_and_malformed_line() {
        assert!(matches!(
            RunConfig::from_str_in("simga = 3\n", base()),
            Err(Error::UnknownKey(k)) if k == "simga"
        ));
        assert!(matches!(
            RunConfig::from_str_in("sigma 3\n", base()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn comments_and_relative_paths() {
        let cfg = RunConfig::from_str_in(
            "# corpus\ndataset_root = corpus   # generated\n\nalpha = 0.3\ntest_impostors = all\n",
            base(),
        )
        .unwrap();
        assert_eq!(cfg.dataset_root, PathBuf::from("/cfg/corpus"));
        assert_eq!(cfg.alpha, AlphaSetting::Fixed(0.3));
        assert_eq!(cfg.test_impostors, ImpostorCount::All);
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::from_str_in("soft = hsp\nsplit = samples\nsvm_tolerance = 1e-9\n", base()).unwrap();
        cfg.primary_stats = Some((-3.25, 1.0 / 3.0));
        cfg.model = Some(PathBuf::from("/x/model.txt"));
        cfg.test_root = Some(PathBuf::from("/y"));
        let echo = cfg.to_config_string();
        let back = RunConfig::from_str_in(&echo, Path::new("/elsewhere")).unwrap();
        assert_eq!(back, cfg);

        cfg.set("svm_c", "auto", base()).unwrap();
        assert!(cfg.svm_c_auto);
        let back = RunConfig::from_str_in(&cfg.to_config_string(), base()).unwrap();
        assert_eq!(back, cfg);
        cfg.set("svm_c", "0.5", base()).unwrap();
        assert!(!cfg.svm_c_auto && cfg.svm.c == 0.5);
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            parse_config("/no/such/veinfuse.cfg"),
            Err(Error::MissingFile(_))
        ));
    }
}

//! Directory layouts of the supported finger-vein corpora.
//!
//! | layout | path under the root |
//! |---|---|
//! | `fvusm`  | `<session>/<subject>_<finger>/<nn>.<ext>` |
//! | `mmcbnu` | `<subject>/<finger>/<nn>.<ext>` |
//! | `sdumla` | `<subject>/<hand>/<finger>_<nn>.<ext>` |
//! | `synth`  | `class_<id>/sample_<nn>.pgm` |
//!
//! Only PGM and PNG files are indexed; anything else under the root is
//! skipped with a warning. An optional override file maps individual paths
//! that do not follow the convention.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use walkdir::WalkDir;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layout {
    Fvusm,
    Mmcbnu,
    Sdumla,
    Synth,
}

impl Layout {
    pub fn as_str(self) -> &'static str {
        match self {
            Layout::Fvusm => "fvusm",
            Layout::Mmcbnu => "mmcbnu",
            Layout::Sdumla => "sdumla",
            Layout::Synth => "synth",
        }
    }

    /// Samples per class (per session for FV-USM) in the complete corpus.
    pub fn expected_class_size(self) -> Option<usize> {
        match self {
            Layout::Fvusm | Layout::Sdumla => Some(6),
            Layout::Mmcbnu => Some(10),
            Layout::Synth => None,
        }
    }

    pub fn is_multi_session(self) -> bool {
        self == Layout::Fvusm
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fvusm" | "fv-usm" => Ok(Layout::Fvusm),
            "mmcbnu" => Ok(Layout::Mmcbnu),
            "sdumla" => Ok(Layout::Sdumla),
            "synth" => Ok(Layout::Synth),
            _ => Err(format!("unknown layout `{s}` (fvusm, mmcbnu, sdumla, synth)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hand {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Digit {
    Index,
    Middle,
    Ring,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Finger {
    Named(Hand, Digit),
    /// Corpora that number their fingers rather than naming them.
    Numbered(u32),
}

impl fmt::Display for Finger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finger::Named(h, d) => {
                let h = match h {
                    Hand::Left => "left",
                    Hand::Right => "right",
                };
                let d = match d {
                    Digit::Index => "index",
                    Digit::Middle => "middle",
                    Digit::Ring => "ring",
                };
                write!(f, "{h}-{d}")
            }
            Finger::Numbered(n) => write!(f, "{n}"),
        }
    }
}

fn parse_hand(s: &str) -> Option<Hand> {
    match s.to_ascii_lowercase().as_str() {
        "l" | "left" => Some(Hand::Left),
        "r" | "right" => Some(Hand::Right),
        _ => None,
    }
}

fn parse_digit(s: &str) -> Option<Digit> {
    match s.to_ascii_lowercase().as_str() {
        "index" | "fore" | "i" => Some(Digit::Index),
        "middle" | "m" => Some(Digit::Middle),
        "ring" | "r" => Some(Digit::Ring),
        _ => None,
    }
}

impl FromStr for Finger {
    type Err = String;

    /// Accepts a bare number, `left-index`, `L_Fore` and similar spellings.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if let Ok(n) = s.parse::<u32>() {
            return Ok(Finger::Numbered(n));
        }
        let parts: Vec<&str> = s.split(['-', '_']).collect();
        if let [h, d] = parts.as_slice() {
            if let (Some(h), Some(d)) = (parse_hand(h), parse_digit(d)) {
                return Ok(Finger::Named(h, d));
            }
        }
        Err(format!("unrecognised finger `{s}`"))
    }
}

/// `(subject, finger)` — one identity.
pub type ClassKey = (String, Finger);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleId {
    pub subject: String,
    pub finger: Finger,
    pub session: u32,
    pub sample: u32,
    pub path: PathBuf,
    /// Root-relative path with `/` separators; used as the sample's name
    /// in every output file.
    pub rel: String,
}

impl SampleId {
    pub fn class(&self) -> ClassKey {
        (self.subject.clone(), self.finger)
    }
}

#[derive(Clone, Debug)]
pub struct DatasetIndex {
    pub layout: Layout,
    pub root: PathBuf,
    pub samples: Vec<SampleId>,
    pub classes: usize,
    /// Non-fatal irregularities found while indexing.
    pub warnings: Vec<String>,
}

impl DatasetIndex {
    pub fn new(layout: Layout, root: PathBuf, samples: Vec<SampleId>) -> Self {
        let classes = count_classes(&samples);
        Self {
            layout,
            root,
            samples,
            classes,
            warnings: Vec::new(),
        }
    }

    /// Sample indices grouped by class, classes in sorted order.
    pub fn by_class(&self) -> BTreeMap<ClassKey, Vec<usize>> {
        let mut map: BTreeMap<ClassKey, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            map.entry(s.class()).or_default().push(i);
        }
        map
    }

    pub fn sessions(&self) -> Vec<u32> {
        let mut s: Vec<u32> = self.samples.iter().map(|s| s.session).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

fn count_classes(samples: &[SampleId]) -> usize {
    let mut keys: Vec<ClassKey> = samples.iter().map(SampleId::class).collect();
    keys.sort();
    keys.dedup();
    keys.len()
}

fn leading_number(s: &str) -> Option<u32> {
    let digits: String = s
        .chars()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(char::is_ascii_digit)
        .collect();
    digits.parse().ok()
}

fn trailing_number(s: &str) -> Option<u32> {
    let rev: String = s.chars().rev().take_while(char::is_ascii_digit).collect();
    rev.chars().rev().collect::<String>().parse().ok()
}

#[derive(Clone, Debug, PartialEq)]
struct Parsed {
    subject: String,
    finger: Finger,
    session: u32,
    sample: u32,
}

fn parse_rel(layout: Layout, rel: &str) -> std::result::Result<Parsed, String> {
    let parts: Vec<&str> = rel.split('/').collect();
    let stem = |f: &str| -> String { f.rsplit_once('.').map_or(f, |(s, _)| s).to_string() };
    let want = |n: usize| {
        if parts.len() == n {
            Ok(())
        } else {
            Err(format!("expected {n} path components, found {}", parts.len()))
        }
    };
    match layout {
        Layout::Fvusm => {
            want(3)?;
            let session = leading_number(parts[0]).ok_or("session directory has no number")?;
            let (subject, finger) = parts[1]
                .rsplit_once('_')
                .ok_or("class directory is not <subject>_<finger>")?;
            let sample = leading_number(&stem(parts[2])).ok_or("file name has no sample number")?;
            Ok(Parsed {
                subject: subject.to_string(),
                finger: finger.parse()?,
                session,
                sample,
            })
        }
        Layout::Mmcbnu => {
            want(3)?;
            let sample = leading_number(&stem(parts[2])).ok_or("file name has no sample number")?;
            Ok(Parsed {
                subject: parts[0].to_string(),
                finger: parts[1].parse()?,
                session: 1,
                sample,
            })
        }
        Layout::Sdumla => {
            want(3)?;
            let hand = parse_hand(parts[1]).ok_or_else(|| format!("bad hand directory `{}`", parts[1]))?;
            let file = stem(parts[2]);
            let (digit, nn) = file.rsplit_once('_').ok_or("file name is not <finger>_<nn>")?;
            let digit = parse_digit(digit).ok_or_else(|| format!("bad finger `{digit}`"))?;
            Ok(Parsed {
                subject: parts[0].to_string(),
                finger: Finger::Named(hand, digit),
                session: 1,
                sample: nn.parse().map_err(|_| format!("bad sample number `{nn}`"))?,
            })
        }
        Layout::Synth => {
            want(2)?;
            let id = parts[0]
                .strip_prefix("class_")
                .ok_or("class directory is not class_<id>")?;
            let file = stem(parts[1]);
            let nn = file
                .strip_prefix("sample_")
                .and_then(|_| trailing_number(&file))
                .ok_or("file name is not sample_<nn>")?;
            Ok(Parsed {
                subject: id.to_string(),
                finger: Finger::Numbered(0),
                session: 1,
                sample: nn,
            })
        }
    }
}

/// Override file: one `<rel-path> <subject> <finger> <session> <sample>`
/// per line, or `<rel-path> skip` to drop a file; `#` starts a comment.
fn read_overrides(path: &Path) -> Result<HashMap<String, Option<Parsed>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::read_io(path, e))?;
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            what: "layout override",
            line: i + 1,
            message,
        };
        let f: Vec<&str> = line.split_whitespace().collect();
        let entry = match f.as_slice() {
            [rel, "skip"] => (rel.to_string(), None),
            [rel, subject, finger, session, sample] => {
                let parsed = Parsed {
                    subject: subject.to_string(),
                    finger: finger.parse().map_err(bad)?,
                    session: session.parse().map_err(|_| bad(format!("bad session `{session}`")))?,
                    sample: sample.parse().map_err(|_| bad(format!("bad sample `{sample}`")))?,
                };
                (rel.to_string(), Some(parsed))
            }
            _ => {
                return Err(bad(
                    "expected `<path> skip` or `<path> <subject> <finger> <session> <sample>`".into(),
                ))
            }
        };
        map.insert(entry.0, entry.1);
    }
    Ok(map)
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("png"))
}

pub fn index_dataset(root: impl AsRef<Path>, layout: Layout) -> Result<DatasetIndex> {
    index_dataset_with(root, layout, None)
}

pub fn index_dataset_with(root: impl AsRef<Path>, layout: Layout, overrides: Option<&Path>) -> Result<DatasetIndex> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::FileNotFound(root.to_path_buf()));
    }
    let overrides = overrides.map(read_overrides).transpose()?.unwrap_or_default();
    let mut samples = Vec::new();
    let mut skipped = 0usize;
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::Io { path, source: e.into() }
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let rel = path
            .strip_prefix(root)
            .expect("walkdir stays under its root")
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        let parsed = match overrides.get(&rel) {
            Some(None) => continue,
            Some(Some(p)) => p.clone(),
            None if !is_image(path) => {
                skipped += 1;
                continue;
            }
            None => parse_rel(layout, &rel).map_err(|reason| Error::UnparsablePath {
                path: path.to_path_buf(),
                reason,
            })?,
        };
        samples.push(SampleId {
            subject: parsed.subject,
            finger: parsed.finger,
            session: parsed.session,
            sample: parsed.sample,
            path: path.to_path_buf(),
            rel,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset(root.to_path_buf()));
    }
    let mut index = DatasetIndex::new(layout, root.to_path_buf(), samples);
    if skipped > 0 {
        index.warnings.push(format!("skipped {skipped} non-PGM/PNG files"));
    }
    index.warnings.extend(class_size_warnings(&index));
    Ok(index)
}

fn class_size_warnings(index: &DatasetIndex) -> Vec<String> {
    let Some(expected) = index.layout.expected_class_size() else {
        return Vec::new();
    };
    let mut counts: BTreeMap<(ClassKey, u32), usize> = BTreeMap::new();
    for s in &index.samples {
        *counts.entry((s.class(), s.session)).or_default() += 1;
    }
    counts
        .into_iter()
        .filter(|&(_, n)| n != expected)
        .map(|(((subject, finger), session), n)| {
            format!("class {subject}_{finger} session {session}: {n} samples, expected {expected}")
        })
        .collect()
}

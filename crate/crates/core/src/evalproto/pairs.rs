//! Genuine/impostor pair protocols.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::{ClassKey, DatasetIndex};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Train,
    Test,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Test => "test",
        }
    }
}

/// How one dataset is divided between training and testing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    /// First session trains, second session tests.
    Session,
    /// Alternate classes (in sorted order) train and test.
    Classes,
    /// Within each class the first half of the samples train, the rest test.
    Samples,
    /// Both roles see the whole dataset (cross-dataset runs).
    Whole,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Session => "session",
            Split::Classes => "classes",
            Split::Samples => "samples",
            Split::Whole => "whole",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "session" => Ok(Split::Session),
            "classes" => Ok(Split::Classes),
            "samples" => Ok(Split::Samples),
            "whole" => Ok(Split::Whole),
            _ => Err(format!("expected session, classes, samples or whole, got `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ImpostorCount {
    /// This many impostor pairs per genuine pair, capped at what exists.
    Ratio(f64),
    All,
}

impl fmt::Display for ImpostorCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImpostorCount::Ratio(r) => write!(f, "{}", crate::textfmt::sig9(*r)),
            ImpostorCount::All => f.write_str("all"),
        }
    }
}

impl FromStr for ImpostorCount {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "all" {
            return Ok(ImpostorCount::All);
        }
        match s.parse::<f64>() {
            Ok(r) if r.is_finite() && r >= 0.0 => Ok(ImpostorCount::Ratio(r)),
            _ => Err(format!("expected a non-negative ratio or `all`, got `{s}`")),
        }
    }
}

/// Pairs refer to positions in the owning index's `samples`; each pair is
/// stored with the smaller position first.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSet {
    pub genuine: Vec<(usize, usize)>,
    pub impostor: Vec<(usize, usize)>,
    pub protocol: String,
    pub seed: u64,
}

/// Sample positions taking part in `role`, grouped by class.
fn role_members(index: &DatasetIndex, role: Role, split: Split) -> Result<BTreeMap<ClassKey, Vec<usize>>> {
    let classes = index.by_class();
    Ok(match split {
        Split::Whole => classes,
        Split::Session => {
            let sessions = index.sessions();
            let pick = match role {
                Role::Train => 0,
                Role::Test => 1,
            };
            let Some(&session) = sessions.get(pick) else {
                return Err(Error::InvalidParams(format!(
                    "session split needs two sessions, found {}",
                    sessions.len()
                )));
            };
            classes
                .into_iter()
                .map(|(k, v)| {
                    (
                        k,
                        v.into_iter()
                            .filter(|&i| index.samples[i].session == session)
                            .collect::<Vec<_>>(),
                    )
                })
                .filter(|(_, v)| !v.is_empty())
                .collect()
        }
        Split::Classes => {
            let parity = usize::from(role == Role::Test);
            classes
                .into_iter()
                .enumerate()
                .filter(|(i, _)| i % 2 == parity)
                .map(|(_, kv)| kv)
                .collect()
        }
        Split::Samples => classes
            .into_iter()
            .map(|(k, mut v)| {
                v.sort_by_key(|&i| (index.samples[i].session, index.samples[i].sample, i));
                let half = v.len().div_ceil(2);
                let part = match role {
                    Role::Train => v[..half].to_vec(),
                    Role::Test => v[half..].to_vec(),
                };
                (k, part)
            })
            .filter(|(_, v)| !v.is_empty())
            .collect(),
    })
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

pub fn build_pairs(
    index: &DatasetIndex,
    role: Role,
    split: Split,
    impostors: ImpostorCount,
    seed: u64,
) -> Result<PairSet> {
    if index.samples.is_empty() {
        return Err(Error::EmptyDataset(index.root.clone()));
    }
    let members = role_members(index, role, split)?;
    if members.len() < 2 {
        return Err(Error::InsufficientClasses(members.len()));
    }

    let mut genuine = Vec::new();
    for samples in members.values() {
        for (k, &a) in samples.iter().enumerate() {
            for &b in &samples[k + 1..] {
                genuine.push(ordered(a, b));
            }
        }
    }

    // Impostor pair number k ↦ (flat[p], flat[q]) where p lies in an
    // earlier class than q; offsets[p] counts the pairs owned by flat[..p].
    let flat: Vec<usize> = members.values().flatten().copied().collect();
    let mut later = Vec::with_capacity(flat.len()); // first position past p's class
    let mut end = 0;
    for samples in members.values() {
        end += samples.len();
        later.extend(std::iter::repeat_n(end, samples.len()));
    }
    let mut offsets = Vec::with_capacity(flat.len() + 1);
    offsets.push(0usize);
    for &l in &later {
        offsets.push(offsets.last().unwrap() + (flat.len() - l));
    }
    let total = *offsets.last().unwrap();
    let wanted = match impostors {
        ImpostorCount::All => total,
        ImpostorCount::Ratio(r) => ((r * genuine.len() as f64).round() as usize).min(total),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = if wanted == total {
        (0..total).collect::<Vec<_>>()
    } else {
        index::sample(&mut rng, total, wanted).into_vec()
    };
    picks.sort_unstable();
    let impostor = picks
        .into_iter()
        .map(|k| {
            let p = offsets.partition_point(|&o| o <= k) - 1;
            let q = later[p] + (k - offsets[p]);
            ordered(flat[p], flat[q])
        })
        .collect::<Vec<_>>();

    let protocol = format!(
        "role={} split={} classes={} genuine={} impostor={} of {} (impostors={})",
        role.as_str(),
        split,
        members.len(),
        genuine.len(),
        impostor.len(),
        total,
        impostors
    );
    Ok(PairSet {
        genuine,
        impostor,
        protocol,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalproto::dataset::{Finger, Layout, SampleId};
    use std::collections::HashSet;
    use std::path::PathBuf;

    pub(crate) fn fake_index(classes: usize, per: usize, sessions: u32) -> DatasetIndex {
        let mut samples = Vec::new();
        for s in 1..=sessions {
            for c in 0..classes {
                for n in 1..=per {
                    let rel = format!("{s}/{c:03}_1/{n:02}.png");
                    samples.push(SampleId {
                        subject: format!("{c:03}"),
                        finger: Finger::Numbered(1),
                        session: s,
                        sample: n as u32,
                        path: PathBuf::from(&rel),
                        rel,
                    });
                }
            }
        }
        DatasetIndex::new(Layout::Fvusm, PathBuf::from("mem"), samples)
    }

    #[test]
    fn two_by_two() {
        let idx = fake_index(2, 2, 1);
        let p = build_pairs(&idx, Role::Test, Split::Whole, ImpostorCount::All, 0).unwrap();
        assert_eq!(p.genuine.len(), 2);
        assert_eq!(p.impostor.len(), 4);
        let p = build_pairs(&idx, Role::Test, Split::Whole, ImpostorCount::Ratio(100.0), 0).unwrap();
        assert_eq!(p.impostor.len(), 4);
    }

    #[test]
    fn pair_invariants() {
        let idx = fake_index(7, 5, 1);
        let p = build_pairs(&idx, Role::Train, Split::Whole, ImpostorCount::Ratio(2.0), 4).unwrap();
        assert_eq!(p.genuine.len(), 7 * 10);
        assert_eq!(p.impostor.len(), 140);
        let cls = |i: usize| idx.samples[i].class();
        let mut seen = HashSet::new();
        for &(a, b) in &p.genuine {
            assert!(a < b && cls(a) == cls(b));
            assert!(seen.insert((a, b)));
        }
        for &(a, b) in &p.impostor {
            assert!(a < b && cls(a) != cls(b));
            assert!(seen.insert((a, b)));
        }
    }

    #[test]
    fn seeds_move_only_impostors() {
        let idx = fake_index(6, 4, 1);
        let a = build_pairs(&idx, Role::Train, Split::Whole, ImpostorCount::Ratio(1.0), 1).unwrap();
        let b = build_pairs(&idx, Role::Train, Split::Whole, ImpostorCount::Ratio(1.0), 1).unwrap();
        let c = build_pairs(&idx, Role::Train, Split::Whole, ImpostorCount::Ratio(1.0), 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.genuine, c.genuine);
        assert_ne!(a.impostor, c.impostor);
    }

    #[test]
    fn full_session_genuine_count() {
        // 123 subjects × 4 fingers, six samples in each of two sessions
        let idx = fake_index(492, 6, 2);
        let p = build_pairs(&idx, Role::Test, Split::Session, ImpostorCount::Ratio(0.0), 0).unwrap();
        assert_eq!(p.genuine.len(), 7380);
        assert!(p.genuine.iter().all(|&(a, _)| idx.samples[a].session == 2));
    }

    #[test]
    fn splits_are_disjoint() {
        let idx = fake_index(5, 6, 1);
        for split in [Split::Classes, Split::Samples] {
            let tr = build_pairs(&idx, Role::Train, split, ImpostorCount::All, 0).unwrap();
            let te = build_pairs(&idx, Role::Test, split, ImpostorCount::All, 0).unwrap();
            let used = |p: &PairSet| -> HashSet<usize> {
                p.genuine.iter().chain(&p.impostor).flat_map(|&(a, b)| [a, b]).collect()
            };
            assert!(used(&tr).is_disjoint(&used(&te)), "{split}");
        }
        assert!(matches!(
            build_pairs(&fake_index(3, 2, 1), Role::Test, Split::Session, ImpostorCount::All, 0),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            build_pairs(&fake_index(1, 4, 1), Role::Test, Split::Whole, ImpostorCount::All, 0),
            Err(Error::InsufficientClasses(1))
        ));
    }
}

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CollectionError;
use crate::episode::{Difficulty, Episode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    TestSeen,
    TestUnseenMap,
    TestUnseenObject,
}

impl SplitName {
    pub const ALL: [SplitName; 4] = [SplitName::Train, SplitName::TestSeen, SplitName::TestUnseenMap, SplitName::TestUnseenObject];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::TestSeen => "test_seen",
            SplitName::TestUnseenMap => "test_unseen_map",
            SplitName::TestUnseenObject => "test_unseen_object",
        }
    }
}

impl std::str::FromStr for SplitName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        SplitName::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| format!("unknown split {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetSplits {
    pub train: Vec<Episode>,
    pub test_seen: Vec<Episode>,
    pub test_unseen_map: Vec<Episode>,
    pub test_unseen_object: Vec<Episode>,
}

impl DatasetSplits {
    pub fn get(&self, name: SplitName) -> &[Episode] {
        match name {
            SplitName::Train => &self.train,
            SplitName::TestSeen => &self.test_seen,
            SplitName::TestUnseenMap => &self.test_unseen_map,
            SplitName::TestUnseenObject => &self.test_unseen_object,
        }
    }

    /// `(easy, hard)` halves of a split.
    pub fn by_difficulty(&self, name: SplitName) -> (Vec<&Episode>, Vec<&Episode>) {
        self.get(name).iter().partition(|e| e.difficulty == Difficulty::Easy)
    }

    /// JSONL manifest of episode ids, one per line.
    pub fn manifest(&self, name: SplitName) -> String {
        self.get(name).iter().map(|e| serde_json::to_string(&e.id).expect("id serializes") + "\n").collect()
    }
}

/// Partitions episodes into the four evaluation splits.
///
/// Held-out scenes win over held-out categories; a `seen_fraction` of what
/// remains becomes the seen test split.
pub fn split_dataset(
    episodes: &[Episode],
    holdout_scenes: &BTreeSet<String>,
    holdout_categories: &BTreeSet<String>,
    seen_fraction: f64,
    seed: u64,
) -> Result<DatasetSplits, CollectionError> {
    if let Some(both) = holdout_scenes.intersection(holdout_categories).next() {
        return Err(CollectionError::OverlappingHoldouts(both.clone()));
    }
    let mut out = DatasetSplits::default();
    let mut rest = Vec::new();
    for e in episodes {
        if holdout_scenes.contains(&e.scene_id) {
            out.test_unseen_map.push(e.clone());
        } else if holdout_categories.contains(&e.target.category) {
            out.test_unseen_object.push(e.clone());
        } else {
            rest.push(e.clone());
        }
    }
    rest.sort_by(|a, b| a.id.cmp(&b.id));
    rest.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_seen = ((rest.len() as f64) * seen_fraction.clamp(0.0, 1.0)).round() as usize;
    out.train = rest.split_off(n_seen);
    out.test_seen = rest;
    for split in [&mut out.train, &mut out.test_seen, &mut out.test_unseen_map, &mut out.test_unseen_object] {
        split.sort_by(|a, b| a.id.cmp(&b.id));
    }
    if !holdout_scenes.is_empty() && out.test_unseen_map.is_empty() {
        return Err(CollectionError::EmptySplit(SplitName::TestUnseenMap.as_str().into()));
    }
    if !holdout_categories.is_empty() && out.test_unseen_object.is_empty() {
        return Err(CollectionError::EmptySplit(SplitName::TestUnseenObject.as_str().into()));
    }
    if out.train.is_empty() && !episodes.is_empty() {
        return Err(CollectionError::EmptySplit(SplitName::Train.as_str().into()));
    }
    Ok(out)
}

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, NaiveDate, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{BugReport, ReportKey};

pub const DEFAULT_KFOLD_K: usize = 5;
pub const DEFAULT_TEMPORAL_CUTOFF: NaiveDate = match NaiveDate::from_ymd_opt(2023, 9, 1) {
    Some(d) => d,
    None => unreachable!(),
};
pub const DEFAULT_LEAK_CUTOFF: NaiveDate = match NaiveDate::from_ymd_opt(2024, 7, 1) {
    Some(d) => d,
    None => unreachable!(),
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    /// Knowledge-base or training side.
    Retrieval,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    KFold { k: usize, seed: u64, fold: usize },
    Temporal { cutoff: NaiveDate },
    Leak { cutoff: NaiveDate },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub split_id: String,
    pub kind: SplitKind,
    pub assignment: BTreeMap<ReportKey, Partition>,
}

impl SplitSpec {
    pub fn members(&self, partition: Partition) -> Vec<&ReportKey> {
        self.assignment.iter().filter(|(_, p)| **p == partition).map(|(k, _)| k).collect()
    }
}

/// Sorts the ids, shuffles them with ChaCha8 seeded by `seed`, and cuts the
/// sequence into `k` contiguous folds; the first `n % k` folds get one extra id.
/// Fold `i` is the test side of split `i`.
pub fn kfold_split(ids: &[ReportKey], k: usize, seed: u64) -> Result<Vec<SplitSpec>, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidK(k));
    }
    if ids.len() < k {
        return Err(EvalError::TooFewItems { n: ids.len(), k });
    }
    let mut sorted = ids.to_vec();
    sorted.sort();
    if let Some(pair) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(EvalError::DuplicateId(pair[0].clone()));
    }
    sorted.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (sorted.len() / k, sorted.len() % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        folds.push(start..start + size);
        start += size;
    }
    Ok(folds
        .iter()
        .enumerate()
        .map(|(fold, range)| SplitSpec {
            split_id: format!("fold-{fold}"),
            kind: SplitKind::KFold { k, seed, fold },
            assignment: sorted
                .iter()
                .enumerate()
                .map(|(i, key)| (key.clone(), if range.contains(&i) { Partition::Test } else { Partition::Retrieval }))
                .collect(),
        })
        .collect())
}

/// Reports before and at-or-after a cutoff instant, each side sorted by key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSplit {
    pub cutoff: NaiveDate,
    pub before: Vec<ReportKey>,
    pub after: Vec<ReportKey>,
}

impl TimeSplit {
    /// True when either side is empty.
    pub fn is_degenerate(&self) -> bool {
        self.before.is_empty() || self.after.is_empty()
    }

    pub fn to_spec(&self, split_id: impl Into<String>, kind: SplitKind) -> SplitSpec {
        let before = self.before.iter().map(|k| (k.clone(), Partition::Retrieval));
        let after = self.after.iter().map(|k| (k.clone(), Partition::Test));
        SplitSpec { split_id: split_id.into(), kind, assignment: before.chain(after).collect() }
    }
}

fn cutoff_instant(cutoff: NaiveDate) -> DateTime<Utc> {
    cutoff.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc()
}

fn split_by_open_time<'a>(reports: impl IntoIterator<Item = &'a BugReport>, cutoff: NaiveDate) -> TimeSplit {
    let instant = cutoff_instant(cutoff);
    let (mut before, mut after) = (BTreeSet::new(), BTreeSet::new());
    for report in reports {
        if report.open_time < instant {
            before.insert(report.key());
        } else {
            after.insert(report.key());
        }
    }
    TimeSplit { cutoff, before: before.into_iter().collect(), after: after.into_iter().collect() }
}

/// Opened before midnight UTC of `cutoff` goes to `before`; everything else, including
/// the cutoff instant itself, to `after`.
pub fn temporal_split<'a>(reports: impl IntoIterator<Item = &'a BugReport>, cutoff: NaiveDate) -> TimeSplit {
    split_by_open_time(reports, cutoff)
}

/// Same rule as [`temporal_split`]: `before` is leak-prone, `after` is no-leak.
pub fn leak_split<'a>(reports: impl IntoIterator<Item = &'a BugReport>, cutoff: NaiveDate) -> TimeSplit {
    split_by_open_time(reports, cutoff)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::corpus::fixtures::*;
    use crate::corpus::Source;

    fn ids(n: usize) -> Vec<ReportKey> {
        (0..n).map(|i| ReportKey::new(Source::Bugzilla, format!("{i:04}"))).collect()
    }

    fn check_partition(splits: &[SplitSpec], n: usize) {
        let mut seen = BTreeSet::new();
        for s in splits {
            assert_eq!(s.assignment.len(), n);
            for key in s.members(Partition::Test) {
                assert!(seen.insert(key.clone()), "{key} in two test folds");
            }
        }
        assert_eq!(seen.len(), n);
    }

    #[test]
    fn ten_ids_five_folds() {
        let splits = kfold_split(&ids(10), 5, 7).unwrap();
        assert!(splits.iter().all(|s| s.members(Partition::Test).len() == 2));
        check_partition(&splits, 10);
    }

    #[test]
    fn sizes_for_103() {
        let splits = kfold_split(&ids(103), 5, 1).unwrap();
        let sizes: Vec<_> = splits.iter().map(|s| s.members(Partition::Test).len()).collect();
        assert_eq!(sizes, [21, 21, 21, 20, 20]);
    }

    #[test]
    fn seed_determinism_and_input_order_independence() {
        let mut reversed = ids(30);
        reversed.reverse();
        assert_eq!(kfold_split(&ids(30), 5, 9).unwrap(), kfold_split(&reversed, 5, 9).unwrap());
        assert_ne!(kfold_split(&ids(30), 5, 9).unwrap(), kfold_split(&ids(30), 5, 10).unwrap());
    }

    #[test]
    fn kfold_errors() {
        assert_eq!(kfold_split(&ids(3), 5, 0).unwrap_err(), EvalError::TooFewItems { n: 3, k: 5 });
        assert_eq!(kfold_split(&ids(3), 1, 0).unwrap_err(), EvalError::InvalidK(1));
        let mut dup = ids(6);
        dup.push(dup[0].clone());
        assert!(matches!(kfold_split(&dup, 5, 0), Err(EvalError::DuplicateId(_))));
    }

    #[test]
    fn cutoff_boundaries() {
        let a = bugzilla("a", "CODE_FIX", "2023-08-31T23:59:59Z", vec![]);
        let b = bugzilla("b", "CODE_FIX", "2023-09-01T00:00:00Z", vec![]);
        let s = temporal_split([&a, &b], DEFAULT_TEMPORAL_CUTOFF);
        assert_eq!(s.before, [a.key()]);
        assert_eq!(s.after, [b.key()]);
        let c = bugzilla("c", "CODE_FIX", "2024-07-01T00:00:00Z", vec![]);
        let l = leak_split([&c], DEFAULT_LEAK_CUTOFF);
        assert_eq!(l.after, [c.key()]);
        assert!(l.is_degenerate());
        let empty = leak_split(std::iter::empty::<&BugReport>(), DEFAULT_LEAK_CUTOFF);
        assert!(empty.before.is_empty() && empty.after.is_empty());
    }

    proptest! {
        #[test]
        fn folds_partition_and_balance(n in 5usize..200, k in 2usize..6, seed in any::<u64>()) {
            let splits = kfold_split(&ids(n), k, seed).unwrap();
            check_partition(&splits, n);
            let sizes: Vec<_> = splits.iter().map(|s| s.members(Partition::Test).len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}

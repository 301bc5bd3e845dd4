use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::VertexId;

/// Independent random streams derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum SeedPurpose {
    Folds = 1,
    Negatives = 2,
    Candidates = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(seed ^ splitmix64(purpose)) ^ index)`, where `index` is the fold.
pub fn derive_seed(seed: u64, purpose: SeedPurpose, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(purpose as u64)) ^ index)
}

/// ChaCha8 stream for one purpose and fold.
pub fn rng_for(seed: u64, purpose: SeedPurpose, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, purpose, index))
}

/// One predicted relationship instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Instance {
    pub source: VertexId,
    pub target: VertexId,
    pub label: Option<String>,
}

/// Assignment of instances to folds; `None` marks instances of pruned sources.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub assignment: Vec<Option<usize>>,
    pub prune_threshold: usize,
    pub rng_seed: u64,
}

impl FoldPlan {
    /// Instance indices held out in `fold`.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.indices(|f| f == fold)
    }

    /// Retained instance indices outside `fold`.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.indices(|f| f != fold)
    }

    pub fn pruned_indices(&self) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i].is_none())
            .collect()
    }

    pub fn retained_count(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_some()).count()
    }

    fn indices(&self, keep: impl Fn(usize) -> bool) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i].is_some_and(&keep))
            .collect()
    }
}

/// Stratified assignment: each source's instances are shuffled and dealt round-robin over
/// the folds, starting where the previous source stopped so that fold sizes stay balanced.
/// Sources with fewer than `prune_threshold` instances are left unassigned.
pub fn make_folds(instances: &[Instance], n_folds: usize, prune_threshold: usize, seed: u64) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::Config(format!("n_folds must be at least 2, got {n_folds}")));
    }
    let mut by_source: BTreeMap<&VertexId, Vec<usize>> = BTreeMap::new();
    for (i, inst) in instances.iter().enumerate() {
        by_source.entry(&inst.source).or_default().push(i);
    }
    // the shuffle must not depend on input order
    for idx in by_source.values_mut() {
        idx.sort_by(|&a, &b| instances[a].target.cmp(&instances[b].target));
    }
    let mut rng = rng_for(seed, SeedPurpose::Folds, 0);
    let mut assignment = vec![None; instances.len()];
    let mut offset = 0usize;
    let mut retained = 0usize;
    for idx in by_source.values_mut() {
        if idx.len() < prune_threshold {
            continue;
        }
        idx.shuffle(&mut rng);
        for (j, &i) in idx.iter().enumerate() {
            assignment[i] = Some((offset + j) % n_folds);
        }
        offset = (offset + idx.len()) % n_folds;
        retained += idx.len();
    }
    if retained == 0 {
        return Err(Error::data(
            "folds",
            format!("no source has at least {prune_threshold} instances"),
        ));
    }
    if retained < n_folds {
        return Err(Error::data(
            "folds",
            format!("{retained} instances remain after pruning, fewer than {n_folds} folds"),
        ));
    }
    Ok(FoldPlan {
        n_folds,
        assignment,
        prune_threshold,
        rng_seed: seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn instances(counts: &[(&str, usize)]) -> Vec<Instance> {
        counts
            .iter()
            .flat_map(|&(u, n)| {
                (0..n).map(move |i| Instance {
                    source: VertexId::new("user", u),
                    target: VertexId::new("item", format!("i{i}")),
                    label: None,
                })
            })
            .collect()
    }

    #[test]
    fn every_user_in_train_and_test() {
        let inst = instances(&[("a", 5), ("b", 7), ("c", 12), ("d", 3)]);
        let plan = make_folds(&inst, 5, 5, 1).unwrap();
        for fold in 0..5 {
            let mut test: HashMap<&str, usize> = HashMap::new();
            let mut train: HashMap<&str, usize> = HashMap::new();
            for i in plan.test_indices(fold) {
                *test.entry(&inst[i].source.value).or_default() += 1;
            }
            for i in plan.train_indices(fold) {
                *train.entry(&inst[i].source.value).or_default() += 1;
            }
            for u in ["a", "b", "c"] {
                assert!(test[u] >= 1, "fold {fold} user {u}");
                assert!(train[u] >= 4, "fold {fold} user {u}");
            }
            assert!(!test.contains_key("d") && !train.contains_key("d"));
        }
        assert_eq!(plan.pruned_indices().len(), 3);
    }

    #[test]
    fn ten_folds() {
        let inst = instances(&[("a", 10), ("b", 11), ("c", 25)]);
        let plan = make_folds(&inst, 10, 1, 3).unwrap();
        let mut sizes = vec![0usize; 10];
        for a in plan.assignment.iter().flatten() {
            sizes[*a] += 1;
        }
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        assert!(hi - lo <= 1, "{sizes:?}");
    }

    #[test]
    fn deterministic_and_order_independent() {
        let inst = instances(&[("a", 6), ("b", 9)]);
        let p1 = make_folds(&inst, 3, 1, 42).unwrap();
        let mut rev = inst.clone();
        rev.reverse();
        let p2 = make_folds(&rev, 3, 1, 42).unwrap();
        for (i, inst_i) in inst.iter().enumerate() {
            let j = rev.iter().position(|x| x == inst_i).unwrap();
            assert_eq!(p1.assignment[i], p2.assignment[j]);
        }
        assert_ne!(make_folds(&inst, 3, 1, 43).unwrap().assignment, p1.assignment);
    }

    #[test]
    fn errors() {
        let inst = instances(&[("a", 3)]);
        assert_eq!(make_folds(&inst, 5, 5, 0).unwrap_err().exit_code(), 3);
        assert_eq!(make_folds(&inst, 5, 1, 0).unwrap_err().exit_code(), 3);
        assert_eq!(make_folds(&inst, 1, 1, 0).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn seeds_are_distinct_per_purpose_and_fold() {
        let a = derive_seed(7, SeedPurpose::Negatives, 0);
        assert_ne!(a, derive_seed(7, SeedPurpose::Candidates, 0));
        assert_ne!(a, derive_seed(7, SeedPurpose::Negatives, 1));
        assert_ne!(a, derive_seed(8, SeedPurpose::Negatives, 0));
        assert_eq!(a, derive_seed(7, SeedPurpose::Negatives, 0));
    }
}

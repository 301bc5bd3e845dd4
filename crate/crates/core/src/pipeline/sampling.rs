use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::VertexId;

/// The target entity universe and, per source, every target it is associated with in
/// any split. Sampled negatives and candidate fillers never include associated targets.
#[derive(Debug, Clone)]
pub struct TargetUniverse {
    targets: Vec<VertexId>,
    associated: BTreeMap<VertexId, BTreeSet<VertexId>>,
}

impl TargetUniverse {
    pub fn new<'a>(
        targets: impl IntoIterator<Item = VertexId>,
        associations: impl IntoIterator<Item = (&'a VertexId, &'a VertexId)>,
    ) -> Self {
        let mut targets: Vec<VertexId> = targets.into_iter().collect();
        targets.sort();
        targets.dedup();
        let mut associated: BTreeMap<VertexId, BTreeSet<VertexId>> = BTreeMap::new();
        for (s, t) in associations {
            associated.entry(s.clone()).or_default().insert(t.clone());
        }
        TargetUniverse { targets, associated }
    }

    pub fn targets(&self) -> &[VertexId] {
        &self.targets
    }

    pub fn is_associated(&self, source: &VertexId, target: &VertexId) -> bool {
        self.associated.get(source).is_some_and(|s| s.contains(target))
    }

    /// Targets not associated with `source`, in sorted order.
    pub fn unassociated(&self, source: &VertexId) -> Vec<&VertexId> {
        match self.associated.get(source) {
            Some(assoc) => self.targets.iter().filter(|t| !assoc.contains(*t)).collect(),
            None => self.targets.iter().collect(),
        }
    }

    fn draw<'u>(&'u self, source: &VertexId, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<&'u VertexId>> {
        let pool = self.unassociated(source);
        if k > pool.len() {
            return Err(Error::data(
                "sampling",
                format!(
                    "source {source} needs {k} unassociated targets but only {} exist",
                    pool.len()
                ),
            ));
        }
        Ok(index::sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect())
    }
}

fn group_by_source(pairs: &[(VertexId, VertexId)]) -> BTreeMap<&VertexId, Vec<&VertexId>> {
    let mut out: BTreeMap<&VertexId, Vec<&VertexId>> = BTreeMap::new();
    for (s, t) in pairs {
        out.entry(s).or_default().push(t);
    }
    for v in out.values_mut() {
        v.sort();
        v.dedup();
    }
    out
}

/// `round(ratio * |positives|)` uniformly drawn unassociated targets per source, sorted.
pub fn sample_negatives(
    positives: &[(VertexId, VertexId)],
    universe: &TargetUniverse,
    ratio: f64,
    seed: u64,
) -> Result<Vec<(VertexId, VertexId)>> {
    if !(ratio.is_finite() && ratio >= 0.0) {
        return Err(Error::Config(format!(
            "negative ratio must be non-negative, got {ratio}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (source, pos) in group_by_source(positives) {
        let k = (ratio * pos.len() as f64).round() as usize;
        if k == 0 {
            continue;
        }
        let mut drawn = universe.draw(source, k, &mut rng)?;
        drawn.sort();
        out.extend(drawn.into_iter().map(|t| (source.clone(), t.clone())));
    }
    Ok(out)
}

/// Held-out positives mixed with random unassociated targets for one source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateSet {
    pub source: VertexId,
    pub size: usize,
    pub positives: Vec<VertexId>,
    pub negatives: Vec<VertexId>,
}

/// For each test source with at least `positives_per_set` held-out positives: the same
/// `positives_per_set` positives for every size, plus nested random fillers, so the set of
/// size 50 is contained in the set of size 100. Sources with too few positives are skipped.
pub fn build_candidate_sets(
    test_positives: &[(VertexId, VertexId)],
    sizes: &[usize],
    positives_per_set: usize,
    universe: &TargetUniverse,
    seed: u64,
) -> Result<Vec<CandidateSet>> {
    if positives_per_set == 0 {
        return Err(Error::Config("positives_per_set must be positive".into()));
    }
    if let Some(s) = sizes.iter().find(|&&s| s < positives_per_set) {
        return Err(Error::Config(format!(
            "candidate size {s} is smaller than positives_per_set {positives_per_set}"
        )));
    }
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let Some(&max_size) = sizes.last() else {
        return Ok(Vec::new());
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut skipped = 0usize;
    for (source, pos) in group_by_source(test_positives) {
        if pos.len() < positives_per_set {
            skipped += 1;
            continue;
        }
        let mut chosen: Vec<&VertexId> = index::sample(&mut rng, pos.len(), positives_per_set)
            .into_iter()
            .map(|i| pos[i])
            .collect();
        chosen.sort();
        let fillers = universe.draw(source, max_size - positives_per_set, &mut rng)?;
        for &size in &sizes {
            let mut negatives: Vec<VertexId> = fillers[..size - positives_per_set].iter().map(|&t| t.clone()).collect();
            negatives.sort();
            out.push(CandidateSet {
                source: source.clone(),
                size,
                positives: chosen.iter().map(|&t| t.clone()).collect(),
                negatives,
            });
        }
    }
    if skipped > 0 {
        log::info!(
            "{skipped} test sources have fewer than {positives_per_set} held-out positives and get no candidate set"
        );
    }
    Ok(out)
}

//! Enumeration of sub-graph schemes: every subset of non-predicted edge types removed.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::SubGraph;

/// Default cap on the number of schemes (M = 10).
pub const DEFAULT_MAX_SCHEMES: usize = 1024;

/// Name of the scheme that keeps only the predicted relationship.
pub const BASELINE_SCHEME: &str = "BL";

/// One sub-graph scheme, described by the edge types it removes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SchemeMask {
    removed: BTreeSet<String>,
    kept: BTreeSet<String>,
    scheme_id: String,
}

impl SchemeMask {
    /// `kept` are the non-predicted edge types kept by this scheme.
    fn new(removed: BTreeSet<String>, kept: BTreeSet<String>) -> Self {
        let mut scheme_id = BASELINE_SCHEME.to_string();
        for t in &kept {
            scheme_id.push('+');
            scheme_id.push_str(t);
        }
        SchemeMask {
            removed,
            kept,
            scheme_id,
        }
    }

    pub fn removed_edge_types(&self) -> &BTreeSet<String> {
        &self.removed
    }

    /// Kept non-predicted edge types.
    pub fn kept_edge_types(&self) -> &BTreeSet<String> {
        &self.kept
    }

    /// `BL` followed by `+<type>` for each kept non-predicted type in sorted order.
    pub fn scheme_id(&self) -> &str {
        &self.scheme_id
    }
}

/// All `2^(|edge_types|-1)` removal sets that keep `pred`, ordered by the number of
/// removed types and then lexicographically by the sorted removed-type list.
pub fn generate_edge_combinations<S: AsRef<str>>(edge_types: &[S], pred: &str) -> Result<Vec<SchemeMask>> {
    let all: BTreeSet<String> = edge_types.iter().map(|s| s.as_ref().to_string()).collect();
    if !all.contains(pred) {
        return Err(Error::UnknownEdgeType(pred.to_string()));
    }
    let others: Vec<String> = all.into_iter().filter(|t| t != pred).collect();
    let m = others.len();
    if m >= 63 {
        return Err(Error::InvalidInput(format!(
            "{m} removable edge types is too many to enumerate"
        )));
    }
    let mut subsets: Vec<Vec<usize>> = (0u64..1 << m)
        .map(|bits| (0..m).filter(|i| bits & (1 << i) != 0).collect())
        .collect();
    // `others` is sorted, so comparing index lists compares the type names
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(subsets
        .into_iter()
        .map(|removed| {
            let removed_set: BTreeSet<String> = removed.iter().map(|&i| others[i].clone()).collect();
            let kept = others.iter().filter(|t| !removed_set.contains(*t)).cloned().collect();
            SchemeMask::new(removed_set, kept)
        })
        .collect())
}

/// Like [`generate_edge_combinations`] but refuses to produce more than `max_schemes`.
pub fn generate_capped<S: AsRef<str>>(edge_types: &[S], pred: &str, max_schemes: usize) -> Result<Vec<SchemeMask>> {
    let m = edge_types.len().saturating_sub(1);
    let count = expected_scheme_count(m as u32);
    if count > max_schemes as u128 {
        return Err(Error::Config(format!(
            "{m} non-predicted relationships give {count} schemes, above the limit of {max_schemes} \
             (raise max_schemes to proceed)"
        )));
    }
    generate_edge_combinations(edge_types, pred)
}

/// Restricts a view to the edge types kept by `mask`. Predicted-type edges are never removed.
pub fn remove_edges<'a>(view: &SubGraph<'a>, mask: &SchemeMask) -> Result<SubGraph<'a>> {
    let g = view.graph();
    let mut kept = view.kept_types();
    for name in mask.removed_edge_types() {
        let t = g
            .edge_type_index(name)
            .ok_or_else(|| Error::UnknownEdgeType(name.clone()))?;
        if Some(t) == g.predicted_type() {
            return Err(Error::InvalidInput(format!(
                "scheme removes the predicted edge type `{name}`"
            )));
        }
        kept = kept.without(t);
    }
    Ok(view.with_kept(kept))
}

/// Number of schemes for `m` non-predicted relationships: `sum_x C(m, x) = 2^m`.
pub fn expected_scheme_count(m: u32) -> u128 {
    1u128 << m
}

/// Order of magnitude of extracted features: `(2*F1 + F2 + M) * 2^M`.
pub fn expected_feature_count(m: u32, f1: u64, f2: u64) -> u128 {
    (2 * f1 as u128 + f2 as u128 + m as u128) * expected_scheme_count(m)
}

/// Scheme and generator counts for a schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeCounts {
    pub m: u32,
    pub f1: u64,
    pub f2: u64,
}

impl SchemeCounts {
    pub fn schemes(&self) -> u128 {
        expected_scheme_count(self.m)
    }

    pub fn features(&self) -> u128 {
        expected_feature_count(self.m, self.f1, self.f2)
    }
}

/// Scheme ids for a schema, in enumeration order.
pub fn scheme_ids(schema: &crate::schema::DatasetSchema, max_schemes: usize) -> Result<Vec<String>> {
    let masks = generate_capped(&schema.relationship_names(), &schema.predicted().name, max_schemes)?;
    Ok(masks.into_iter().map(|m| m.scheme_id).collect())
}

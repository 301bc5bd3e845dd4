//! Per-scheme feature extraction and the unified feature table.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{EntityTypeIdx, FoldMaskedGraph, SubGraph, VertexId, VertexIdx};
use crate::metrics::{MetricEngine, MetricValue, PageRankParams};
use crate::scheme::{remove_edges, SchemeMask};

/// Which endpoint(s) a column describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Src,
    Tgt,
    Pair,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Src => "src",
            Role::Tgt => "tgt",
            Role::Pair => "pair",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `<scheme_id>__<role>__<generator>[__<type>]`.
pub fn feature_column_name(scheme_id: &str, role: Role, generator: &str, type_param: Option<&str>) -> String {
    let mut name = format!("{scheme_id}__{role}__{generator}");
    if let Some(t) = type_param {
        name.push_str("__");
        name.push_str(t);
    }
    name
}

/// A metric of one vertex, applied to the source and to the target of every pair.
pub trait VertexGenerator: Send + Sync {
    fn name(&self) -> &str;
    fn compute(&self, engine: &MetricEngine<'_>, v: VertexIdx) -> Result<MetricValue>;
}

/// A metric of a (source, target) pair.
pub trait PairGenerator: Send + Sync {
    fn name(&self) -> &str;
    fn compute(&self, engine: &MetricEngine<'_>, s: VertexIdx, t: VertexIdx) -> Result<MetricValue>;
}

/// A pair metric parameterized by a third entity type, instantiated once for every
/// entity type of the scheme other than the source and target types.
pub trait TypedPairGenerator: Send + Sync {
    fn name(&self) -> &str;
    fn compute(&self, engine: &MetricEngine<'_>, s: VertexIdx, t: VertexIdx, x: EntityTypeIdx) -> Result<MetricValue>;
}

macro_rules! vertex_generator {
    ($ty:ident, $name:literal, |$e:ident, $v:ident| $body:expr) => {
        struct $ty;
        impl VertexGenerator for $ty {
            fn name(&self) -> &str {
                $name
            }
            fn compute(&self, $e: &MetricEngine<'_>, $v: VertexIdx) -> Result<MetricValue> {
                $body
            }
        }
    };
}

vertex_generator!(Degree, "degree_centrality", |e, v| e.degree(v));
vertex_generator!(AvgNeighborDegree, "avg_neighbor_degree", |e, v| e
    .avg_neighbor_degree(v));
vertex_generator!(PageRank, "pagerank", |e, v| e.pagerank_of(v));
vertex_generator!(Clustering, "clustering_coefficient", |e, v| e.clustering_coefficient(v));
vertex_generator!(Redundancy, "node_redundancy", |e, v| {
    if e.is_bipartite() {
        e.node_redundancy(v)
    } else {
        Ok(MetricValue::Missing)
    }
});

struct ShortestPath;
impl PairGenerator for ShortestPath {
    fn name(&self) -> &str {
        "shortest_path_excluding"
    }
    fn compute(&self, engine: &MetricEngine<'_>, s: VertexIdx, t: VertexIdx) -> Result<MetricValue> {
        Ok(engine.shortest_path(s, t)?.into())
    }
}

struct SharedNeighbors;
impl PairGenerator for SharedNeighbors {
    fn name(&self) -> &str {
        "shared_neighbors_ratio"
    }
    fn compute(&self, engine: &MetricEngine<'_>, s: VertexIdx, t: VertexIdx) -> Result<MetricValue> {
        engine.shared_neighbors_ratio(s, t)
    }
}

struct SharedNeighborsOfType;
impl TypedPairGenerator for SharedNeighborsOfType {
    fn name(&self) -> &str {
        "shared_neighbors_of_type"
    }
    fn compute(&self, engine: &MetricEngine<'_>, s: VertexIdx, t: VertexIdx, x: EntityTypeIdx) -> Result<MetricValue> {
        engine.shared_neighbors_of_type(s, t, x)
    }
}

/// Ordered generator families. Names are unique across the registry.
#[derive(Clone)]
pub struct GeneratorRegistry {
    one_vertex: Vec<Arc<dyn VertexGenerator>>,
    two_vertex: Vec<Arc<dyn PairGenerator>>,
    n_vertex: Vec<Arc<dyn TypedPairGenerator>>,
}

impl fmt::Debug for GeneratorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorRegistry")
            .field("one_vertex", &self.one_vertex_names())
            .field("two_vertex", &self.two_vertex_names())
            .field("n_vertex", &self.n_vertex_names())
            .finish()
    }
}

impl Default for GeneratorRegistry {
    fn default() -> Self {
        GeneratorRegistry {
            one_vertex: vec![
                Arc::new(Degree),
                Arc::new(AvgNeighborDegree),
                Arc::new(PageRank),
                Arc::new(Clustering),
                Arc::new(Redundancy),
            ],
            two_vertex: vec![Arc::new(ShortestPath), Arc::new(SharedNeighbors)],
            n_vertex: vec![Arc::new(SharedNeighborsOfType)],
        }
    }
}

impl GeneratorRegistry {
    pub fn empty() -> Self {
        GeneratorRegistry {
            one_vertex: Vec::new(),
            two_vertex: Vec::new(),
            n_vertex: Vec::new(),
        }
    }

    fn check_name(&self, name: &str) -> Result<()> {
        let valid =
            !name.is_empty() && !name.contains("__") && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(Error::InvalidInput(format!("invalid generator name `{name}`")));
        }
        if self.names().any(|n| n == name) {
            return Err(Error::InvalidInput(format!("generator `{name}` is already registered")));
        }
        Ok(())
    }

    pub fn register_vertex(&mut self, gen: Arc<dyn VertexGenerator>) -> Result<()> {
        self.check_name(gen.name())?;
        self.one_vertex.push(gen);
        Ok(())
    }

    pub fn register_pair(&mut self, gen: Arc<dyn PairGenerator>) -> Result<()> {
        self.check_name(gen.name())?;
        self.two_vertex.push(gen);
        Ok(())
    }

    pub fn register_typed(&mut self, gen: Arc<dyn TypedPairGenerator>) -> Result<()> {
        self.check_name(gen.name())?;
        self.n_vertex.push(gen);
        Ok(())
    }

    /// Keeps only generators whose name is in `names`.
    pub fn retain(&mut self, names: &[&str]) {
        self.one_vertex.retain(|g| names.contains(&g.name()));
        self.two_vertex.retain(|g| names.contains(&g.name()));
        self.n_vertex.retain(|g| names.contains(&g.name()));
    }

    pub fn one_vertex_names(&self) -> Vec<&str> {
        self.one_vertex.iter().map(|g| g.name()).collect()
    }

    pub fn two_vertex_names(&self) -> Vec<&str> {
        self.two_vertex.iter().map(|g| g.name()).collect()
    }

    pub fn n_vertex_names(&self) -> Vec<&str> {
        self.n_vertex.iter().map(|g| g.name()).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.one_vertex
            .iter()
            .map(|g| g.name())
            .chain(self.two_vertex.iter().map(|g| g.name()))
            .chain(self.n_vertex.iter().map(|g| g.name()))
    }

    /// Number of columns for a scheme with `extra_types` auxiliary entity types.
    pub fn column_count(&self, extra_types: usize) -> usize {
        2 * self.one_vertex.len() + self.two_vertex.len() + self.n_vertex.len() * extra_types
    }
}

/// One (source, target) instance to extract features for.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairKey {
    pub source: VertexId,
    pub target: VertexId,
}

/// A pair with its optional ground-truth label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub source: VertexId,
    pub target: VertexId,
    pub label: Option<String>,
}

impl LabeledPair {
    pub fn new(source: VertexId, target: VertexId, label: Option<String>) -> Self {
        LabeledPair { source, target, label }
    }

    pub fn key(&self) -> PairKey {
        PairKey {
            source: self.source.clone(),
            target: self.target.clone(),
        }
    }
}

/// Rows keyed by pair, columns in ascending name order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    columns: Vec<String>,
    rows: Vec<LabeledPair>,
    cells: Vec<Vec<MetricValue>>,
}

impl FeatureTable {
    /// Sorts columns by name and rows by key. Rejects duplicate columns or keys.
    pub fn new(columns: Vec<String>, rows: Vec<LabeledPair>, cells: Vec<Vec<MetricValue>>) -> Result<Self> {
        if cells.len() != rows.len() || cells.iter().any(|r| r.len() != columns.len()) {
            return Err(Error::Invariant("feature table shape mismatch".into()));
        }
        let mut col_order: Vec<usize> = (0..columns.len()).collect();
        col_order.sort_by(|&a, &b| columns[a].cmp(&columns[b]));
        if col_order.windows(2).any(|w| columns[w[0]] == columns[w[1]]) {
            return Err(Error::Invariant("duplicate feature column".into()));
        }
        let mut row_order: Vec<usize> = (0..rows.len()).collect();
        row_order.sort_by(|&a, &b| (&rows[a].source, &rows[a].target).cmp(&(&rows[b].source, &rows[b].target)));
        if let Some(w) = row_order
            .windows(2)
            .find(|w| rows[w[0]].source == rows[w[1]].source && rows[w[0]].target == rows[w[1]].target)
        {
            return Err(Error::InvalidInput(format!(
                "duplicate pair ({}, {})",
                rows[w[0]].source, rows[w[0]].target
            )));
        }
        let sorted_cols = col_order.iter().map(|&c| columns[c].clone()).collect();
        let sorted_cells = row_order
            .iter()
            .map(|&r| col_order.iter().map(|&c| cells[r][c]).collect())
            .collect();
        let sorted_rows = row_order.iter().map(|&r| rows[r].clone()).collect();
        Ok(FeatureTable {
            columns: sorted_cols,
            rows: sorted_rows,
            cells: sorted_cells,
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[LabeledPair] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row_values(&self, i: usize) -> &[MetricValue] {
        &self.cells[i]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.binary_search_by(|c| c.as_str().cmp(name)).ok()
    }

    pub fn column(&self, name: &str) -> Option<Vec<MetricValue>> {
        let c = self.column_index(name)?;
        Some(self.cells.iter().map(|r| r[c]).collect())
    }

    pub fn get(&self, source: &VertexId, target: &VertexId, column: &str) -> Option<MetricValue> {
        let c = self.column_index(column)?;
        let r = self
            .rows
            .binary_search_by(|p| (&p.source, &p.target).cmp(&(source, target)))
            .ok()?;
        Some(self.cells[r][c])
    }

    /// Rows for `pairs` in the given labels, re-sorted by key. Every pair must be present.
    pub fn select(&self, pairs: &[LabeledPair]) -> Result<FeatureTable> {
        let cells = pairs
            .iter()
            .map(|p| {
                self.rows
                    .binary_search_by(|r| (&r.source, &r.target).cmp(&(&p.source, &p.target)))
                    .map(|i| self.cells[i].clone())
                    .map_err(|_| Error::Invariant(format!("pair ({}, {}) was not extracted", p.source, p.target)))
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureTable::new(self.columns.clone(), pairs.to_vec(), cells)
    }

    /// Joins tables over the same pairs. Errors if row keys differ or a column repeats.
    pub fn join(parts: Vec<FeatureTable>) -> Result<FeatureTable> {
        let mut parts = parts.into_iter();
        let Some(first) = parts.next() else {
            return Err(Error::Invariant("joining zero feature tables".into()));
        };
        let FeatureTable {
            mut columns,
            rows,
            mut cells,
        } = first;
        for part in parts {
            let same_keys = part.rows.len() == rows.len()
                && part
                    .rows
                    .iter()
                    .zip(&rows)
                    .all(|(a, b)| a.source == b.source && a.target == b.target);
            if !same_keys {
                return Err(Error::Invariant("feature fragments disagree on pair keys".into()));
            }
            columns.extend(part.columns);
            for (row, extra) in cells.iter_mut().zip(part.cells) {
                row.extend(extra);
            }
        }
        FeatureTable::new(columns, rows, cells)
    }

    /// RFC 4180 CSV: `source,target,label`, then feature columns; missing cells are empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Invariant(format!("writing feature csv: {e}"));
        let header = ["source", "target", "label"]
            .into_iter()
            .chain(self.columns.iter().map(|s| s.as_str()));
        w.write_record(header).map_err(csv_err)?;
        let mut record = Vec::with_capacity(self.columns.len() + 3);
        for (pair, values) in self.rows.iter().zip(&self.cells) {
            record.clear();
            record.push(pair.source.value.clone());
            record.push(pair.target.value.clone());
            record.push(pair.label.clone().unwrap_or_default());
            record.extend(values.iter().map(|v| v.to_cell()));
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush()
            .map_err(|e| Error::Invariant(format!("writing feature csv: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Invariant(e.to_string()))
    }
}

/// Auxiliary entity types of a view: present types other than the predicted endpoints.
pub fn auxiliary_entity_types(view: &SubGraph<'_>) -> Vec<EntityTypeIdx> {
    let g = view.graph();
    let endpoints: BTreeSet<EntityTypeIdx> = g
        .predicted_type()
        .map(|p| g.edge_type_entities(p).into_iter().collect())
        .unwrap_or_default();
    view.entity_types_present()
        .into_iter()
        .filter(|t| !endpoints.contains(t))
        .collect()
}

/// Column names a scheme produces, in registry order.
pub fn scheme_columns(scheme_id: &str, view: &SubGraph<'_>, registry: &GeneratorRegistry) -> Vec<String> {
    let g = view.graph();
    let mut cols = Vec::new();
    for role in [Role::Src, Role::Tgt] {
        for gen in &registry.one_vertex {
            cols.push(feature_column_name(scheme_id, role, gen.name(), None));
        }
    }
    for gen in &registry.two_vertex {
        cols.push(feature_column_name(scheme_id, Role::Pair, gen.name(), None));
    }
    let aux = auxiliary_entity_types(view);
    for gen in &registry.n_vertex {
        for &x in &aux {
            cols.push(feature_column_name(
                scheme_id,
                Role::Pair,
                gen.name(),
                Some(&g.entity_types()[x as usize]),
            ));
        }
    }
    cols
}

/// Fragment of the feature table for one scheme view.
pub fn extract_subgraph_features(
    view: &SubGraph<'_>,
    scheme_id: &str,
    pairs: &[LabeledPair],
    registry: &GeneratorRegistry,
    params: &PageRankParams,
) -> Result<FeatureTable> {
    let g = view.graph();
    let columns = scheme_columns(scheme_id, view, registry);
    let resolved: Vec<(VertexIdx, VertexIdx)> = pairs
        .iter()
        .map(|p| {
            let s = g.require_vertex(&p.source)?;
            let t = g.require_vertex(&p.target)?;
            if !view.contains_vertex(s) || !view.contains_vertex(t) {
                return Err(Error::UnknownVertex(format!(
                    "pair ({}, {}) is outside scheme {scheme_id}",
                    p.source, p.target
                )));
            }
            Ok((s, t))
        })
        .collect::<Result<_>>()?;

    let engine = MetricEngine::new(view, *params);
    if !pairs.is_empty() && !registry.one_vertex.is_empty() {
        engine.pagerank()?;
    }

    // single-vertex metrics are shared by every pair touching the vertex
    let mut endpoints: Vec<VertexIdx> = resolved.iter().flat_map(|&(s, t)| [s, t]).collect();
    endpoints.sort_unstable();
    endpoints.dedup();
    let per_vertex: HashMap<VertexIdx, Vec<MetricValue>> = endpoints
        .par_iter()
        .map(|&v| {
            let vals = registry
                .one_vertex
                .iter()
                .map(|gen| gen.compute(&engine, v))
                .collect::<Result<Vec<_>>>()?;
            Ok((v, vals))
        })
        .collect::<Result<_>>()?;

    let aux = auxiliary_entity_types(view);
    let cells: Vec<Vec<MetricValue>> = resolved
        .par_iter()
        .map(|&(s, t)| {
            let mut row = Vec::with_capacity(columns.len());
            row.extend_from_slice(&per_vertex[&s]);
            row.extend_from_slice(&per_vertex[&t]);
            for gen in &registry.two_vertex {
                row.push(gen.compute(&engine, s, t)?);
            }
            for gen in &registry.n_vertex {
                for &x in &aux {
                    row.push(gen.compute(&engine, s, t, x)?);
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    FeatureTable::new(columns, pairs.to_vec(), cells)
}

/// Every scheme of a fold graph, joined on the pair key.
pub fn extract_all_features(
    complete: &FoldMaskedGraph<'_>,
    masks: &[SchemeMask],
    pairs: &[LabeledPair],
    registry: &GeneratorRegistry,
    params: &PageRankParams,
) -> Result<FeatureTable> {
    let base = complete.view();
    let fragments = masks
        .par_iter()
        .map(|mask| {
            let view = remove_edges(&base, mask)?;
            extract_subgraph_features(&view, mask.scheme_id(), pairs, registry, params)
                .map_err(|e| e.context(format!("scheme {}", mask.scheme_id())))
        })
        .collect::<Result<Vec<_>>>()?;
    if fragments.is_empty() {
        return FeatureTable::new(Vec::new(), pairs.to_vec(), vec![Vec::new(); pairs.len()]);
    }
    FeatureTable::join(fragments)
}

/// Per-scheme column counts for a fold graph, keyed by scheme id.
pub fn column_counts(
    complete: &FoldMaskedGraph<'_>,
    masks: &[SchemeMask],
    registry: &GeneratorRegistry,
) -> Result<BTreeMap<String, usize>> {
    let base = complete.view();
    masks
        .iter()
        .map(|m| {
            let view = remove_edges(&base, m)?;
            Ok((
                m.scheme_id().to_string(),
                scheme_columns(m.scheme_id(), &view, registry).len(),
            ))
        })
        .collect()
}

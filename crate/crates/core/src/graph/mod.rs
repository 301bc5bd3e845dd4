//! Typed-vertex, typed-edge undirected graph built from a tabular dataset.

mod bipartite;
mod build;
mod edgelist;
mod view;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

pub use bipartite::{is_bipartite, BipartiteCheck, BipartiteWitness};
pub use build::build_complete_graph;
pub use edgelist::{export_edge_list, parse_edge_list};
pub use view::{mask_predicted_edges, EdgeMask, FoldMaskedGraph, SubGraph, Topology, TypeSet};

pub type VertexIdx = u32;
pub type EdgeIdx = u32;
pub type EdgeTypeIdx = u8;
pub type EntityTypeIdx = u16;

/// A vertex is identified by its entity type and canonical value string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct VertexId {
    pub entity_type: String,
    pub value: String,
}

impl VertexId {
    pub fn new(entity_type: impl Into<String>, value: impl Into<String>) -> Self {
        VertexId {
            entity_type: entity_type.into(),
            value: value.into(),
        }
    }

    /// Parses the `entity=value` form used by edge-list exports and the CLI.
    pub fn parse(text: &str) -> Result<Self> {
        let (e, v) = text
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("vertex `{text}` is not of the form entity=value")))?;
        Ok(VertexId::new(e, v))
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.entity_type, self.value)
    }
}

/// An undirected edge, stored once with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub a: VertexIdx,
    pub b: VertexIdx,
    pub edge_type: EdgeTypeIdx,
    pub label: Option<String>,
}

/// Declaration of an edge type: its name and the entity types it connects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeTypeDecl {
    pub name: String,
    pub source_entity: String,
    pub target_entity: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroGraph {
    vertices: Vec<VertexId>,
    vertex_entity: Vec<EntityTypeIdx>,
    entity_types: Vec<String>,
    edge_types: Vec<EdgeTypeDecl>,
    /// Endpoint entity types per edge type.
    edge_type_entities: Vec<[EntityTypeIdx; 2]>,
    predicted: Option<EdgeTypeIdx>,
    edges: Vec<Edge>,
    adj_offsets: Vec<usize>,
    /// `(neighbor, edge)` pairs, sorted by neighbor then edge type.
    adj: Vec<(VertexIdx, EdgeIdx)>,
}

impl HeteroGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn vertex(&self, v: VertexIdx) -> &VertexId {
        &self.vertices[v as usize]
    }

    pub fn vertex_index(&self, id: &VertexId) -> Option<VertexIdx> {
        self.vertices.binary_search(id).ok().map(|i| i as VertexIdx)
    }

    pub fn require_vertex(&self, id: &VertexId) -> Result<VertexIdx> {
        self.vertex_index(id)
            .ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn entity_types(&self) -> &[String] {
        &self.entity_types
    }

    pub fn entity_type_index(&self, name: &str) -> Option<EntityTypeIdx> {
        self.entity_types
            .binary_search_by(|e| e.as_str().cmp(name))
            .ok()
            .map(|i| i as EntityTypeIdx)
    }

    pub fn vertex_entity(&self, v: VertexIdx) -> EntityTypeIdx {
        self.vertex_entity[v as usize]
    }

    pub fn edge_types(&self) -> &[EdgeTypeDecl] {
        &self.edge_types
    }

    pub fn edge_type_index(&self, name: &str) -> Option<EdgeTypeIdx> {
        self.edge_types
            .iter()
            .position(|t| t.name == name)
            .map(|i| i as EdgeTypeIdx)
    }

    pub fn edge_type_entities(&self, t: EdgeTypeIdx) -> [EntityTypeIdx; 2] {
        self.edge_type_entities[t as usize]
    }

    pub fn predicted_type(&self) -> Option<EdgeTypeIdx> {
        self.predicted
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeIdx) -> &Edge {
        &self.edges[e as usize]
    }

    /// All incident `(neighbor, edge)` pairs of `v`, ignoring any mask.
    pub fn incident(&self, v: VertexIdx) -> &[(VertexIdx, EdgeIdx)] {
        let v = v as usize;
        &self.adj[self.adj_offsets[v]..self.adj_offsets[v + 1]]
    }

    /// Looks up the edge of type `t` between `a` and `b`, in either orientation.
    pub fn find_edge(&self, a: VertexIdx, b: VertexIdx, t: EdgeTypeIdx) -> Option<EdgeIdx> {
        let inc = self.incident(a);
        let start = inc.partition_point(|&(n, _)| n < b);
        inc[start..]
            .iter()
            .take_while(|&&(n, _)| n == b)
            .find(|&&(_, e)| self.edges[e as usize].edge_type == t)
            .map(|&(_, e)| e)
    }

    /// Indices of predicted-type edges, in edge order.
    pub fn predicted_edges(&self) -> Vec<EdgeIdx> {
        match self.predicted {
            Some(p) => self
                .edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.edge_type == p)
                .map(|(i, _)| i as EdgeIdx)
                .collect(),
            None => Vec::new(),
        }
    }

    /// Unmasked view over every edge type.
    pub fn view(&self) -> SubGraph<'_> {
        SubGraph::new(self, None, TypeSet::all(self.edge_types.len()))
    }
}

#[derive(Debug, Clone)]
enum LabelAcc {
    Count(u64),
    Mean { sum: f64, n: u64, rows: u64 },
    Text(String),
}

/// Value attached to one occurrence of an edge while building.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeLabelValue {
    None,
    Number(f64),
    Text(String),
}

impl LabelAcc {
    fn new(value: EdgeLabelValue) -> Self {
        match value {
            EdgeLabelValue::None => LabelAcc::Count(1),
            EdgeLabelValue::Number(v) => LabelAcc::Mean { sum: v, n: 1, rows: 1 },
            EdgeLabelValue::Text(s) => LabelAcc::Text(s),
        }
    }

    fn push(&mut self, value: EdgeLabelValue) {
        match (&mut *self, value) {
            (LabelAcc::Count(c), EdgeLabelValue::None) => *c += 1,
            (LabelAcc::Count(c), EdgeLabelValue::Number(v)) => {
                *self = LabelAcc::Mean {
                    sum: v,
                    n: 1,
                    rows: *c + 1,
                }
            }
            (LabelAcc::Count(_), EdgeLabelValue::Text(s)) => *self = LabelAcc::Text(s),
            (LabelAcc::Mean { sum, n, rows }, EdgeLabelValue::Number(v)) => {
                *sum += v;
                *n += 1;
                *rows += 1;
            }
            (LabelAcc::Mean { rows, .. }, _) => *rows += 1,
            (LabelAcc::Text(_), _) => {}
        }
    }

    fn finish(self) -> String {
        match self {
            LabelAcc::Count(c) => c.to_string(),
            LabelAcc::Mean { sum, n, .. } => crate::dataset::format_number(sum / n as f64),
            LabelAcc::Text(s) => s,
        }
    }
}

/// Accumulates vertices and edges, collapsing duplicates, then freezes into a [`HeteroGraph`].
///
/// Duplicate `(a, b, type)` occurrences collapse into one edge whose label is the
/// occurrence count when no values were given, the mean of numeric values, or the
/// first text value.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    edge_types: Vec<EdgeTypeDecl>,
    predicted: Option<EdgeTypeIdx>,
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<(VertexId, VertexId, EdgeTypeIdx), LabelAcc>,
    self_loops: usize,
}

impl GraphBuilder {
    pub fn new(edge_types: Vec<EdgeTypeDecl>, predicted: Option<&str>) -> Result<Self> {
        if edge_types.len() > crate::schema::MAX_RELATIONSHIPS {
            return Err(Error::InvalidInput("too many edge types".into()));
        }
        let mut seen = BTreeSet::new();
        for t in &edge_types {
            if !seen.insert(t.name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate edge type `{}`", t.name)));
            }
        }
        let predicted = match predicted {
            Some(name) => Some(
                edge_types
                    .iter()
                    .position(|t| t.name == name)
                    .ok_or_else(|| Error::UnknownEdgeType(name.to_string()))? as EdgeTypeIdx,
            ),
            None => None,
        };
        Ok(GraphBuilder {
            edge_types,
            predicted,
            vertices: BTreeSet::new(),
            edges: BTreeMap::new(),
            self_loops: 0,
        })
    }

    pub fn add_vertex(&mut self, v: VertexId) {
        self.vertices.insert(v);
    }

    /// Adds one occurrence of an edge. Self-loops are dropped.
    pub fn add_edge(&mut self, a: VertexId, b: VertexId, edge_type: &str, label: EdgeLabelValue) -> Result<()> {
        let decl_idx = self
            .edge_types
            .iter()
            .position(|t| t.name == edge_type)
            .ok_or_else(|| Error::UnknownEdgeType(edge_type.to_string()))?;
        let decl = &self.edge_types[decl_idx];
        let ok = (a.entity_type == decl.source_entity && b.entity_type == decl.target_entity)
            || (a.entity_type == decl.target_entity && b.entity_type == decl.source_entity);
        if !ok {
            return Err(Error::InvalidInput(format!(
                "edge {a} -- {b} does not match edge type `{edge_type}` ({} -- {})",
                decl.source_entity, decl.target_entity
            )));
        }
        if a == b {
            self.self_loops += 1;
            return Ok(());
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.vertices.insert(a.clone());
        self.vertices.insert(b.clone());
        use std::collections::btree_map::Entry;
        match self.edges.entry((a, b, decl_idx as EdgeTypeIdx)) {
            Entry::Vacant(e) => {
                e.insert(LabelAcc::new(label));
            }
            Entry::Occupied(mut e) => e.get_mut().push(label),
        }
        Ok(())
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops
    }

    pub fn build(self) -> HeteroGraph {
        let mut entity_names: BTreeSet<String> = self.vertices.iter().map(|v| v.entity_type.clone()).collect();
        for t in &self.edge_types {
            entity_names.insert(t.source_entity.clone());
            entity_names.insert(t.target_entity.clone());
        }
        let entity_types: Vec<String> = entity_names.into_iter().collect();
        let entity_idx = |name: &str| entity_types.binary_search_by(|e| e.as_str().cmp(name)).unwrap() as EntityTypeIdx;

        let vertices: Vec<VertexId> = self.vertices.into_iter().collect();
        let vertex_entity: Vec<EntityTypeIdx> = vertices.iter().map(|v| entity_idx(&v.entity_type)).collect();
        let index = |v: &VertexId| vertices.binary_search(v).unwrap() as VertexIdx;

        let edges: Vec<Edge> = self
            .edges
            .into_iter()
            .map(|((a, b, t), acc)| Edge {
                a: index(&a),
                b: index(&b),
                edge_type: t,
                label: Some(acc.finish()),
            })
            .collect();

        let n = vertices.len();
        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.a as usize] += 1;
            degree[e.b as usize] += 1;
        }
        let mut adj_offsets = Vec::with_capacity(n + 1);
        adj_offsets.push(0);
        for d in &degree {
            adj_offsets.push(adj_offsets.last().unwrap() + d);
        }
        let mut adj = vec![(0, 0); adj_offsets[n]];
        let mut fill = adj_offsets.clone();
        for (i, e) in edges.iter().enumerate() {
            adj[fill[e.a as usize]] = (e.b, i as EdgeIdx);
            fill[e.a as usize] += 1;
            adj[fill[e.b as usize]] = (e.a, i as EdgeIdx);
            fill[e.b as usize] += 1;
        }
        for v in 0..n {
            adj[adj_offsets[v]..adj_offsets[v + 1]].sort_by_key(|&(nb, e)| (nb, edges[e as usize].edge_type));
        }

        let edge_type_entities = self
            .edge_types
            .iter()
            .map(|t| [entity_idx(&t.source_entity), entity_idx(&t.target_entity)])
            .collect();

        HeteroGraph {
            vertices,
            vertex_entity,
            entity_types,
            edge_types: self.edge_types,
            edge_type_entities,
            predicted: self.predicted,
            edges,
            adj_offsets,
            adj,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn decl(name: &str, s: &str, t: &str) -> EdgeTypeDecl {
        EdgeTypeDecl {
            name: name.into(),
            source_entity: s.into(),
            target_entity: t.into(),
        }
    }

    #[test]
    fn duplicates_collapse_with_aggregate_labels() {
        let mut b = GraphBuilder::new(vec![decl("rates", "user", "item")], Some("rates")).unwrap();
        let u = VertexId::new("user", "u1");
        let i = VertexId::new("item", "i1");
        b.add_edge(u.clone(), i.clone(), "rates", EdgeLabelValue::Number(4.0))
            .unwrap();
        b.add_edge(i.clone(), u.clone(), "rates", EdgeLabelValue::Number(2.0))
            .unwrap();
        let g = b.build();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges()[0].label.as_deref(), Some("3"));

        let mut b = GraphBuilder::new(vec![decl("plays", "user", "item")], Some("plays")).unwrap();
        for _ in 0..3 {
            b.add_edge(u.clone(), i.clone(), "plays", EdgeLabelValue::None).unwrap();
        }
        assert_eq!(b.build().edges()[0].label.as_deref(), Some("3"));
    }

    #[test]
    fn rejects_mistyped_edges() {
        let mut b = GraphBuilder::new(vec![decl("rates", "user", "item")], Some("rates")).unwrap();
        let err = b
            .add_edge(
                VertexId::new("user", "a"),
                VertexId::new("user", "b"),
                "rates",
                EdgeLabelValue::None,
            )
            .unwrap_err();
        assert!(err.to_string().contains("does not match"));
        assert!(b
            .add_edge(
                VertexId::new("user", "a"),
                VertexId::new("item", "b"),
                "likes",
                EdgeLabelValue::None
            )
            .is_err());
    }

    #[test]
    fn self_loops_dropped_and_adjacency_sorted() {
        let mut b = GraphBuilder::new(vec![decl("friends", "user", "user")], None).unwrap();
        let u = |s: &str| VertexId::new("user", s);
        b.add_edge(u("c"), u("a"), "friends", EdgeLabelValue::None).unwrap();
        b.add_edge(u("a"), u("b"), "friends", EdgeLabelValue::None).unwrap();
        b.add_edge(u("a"), u("a"), "friends", EdgeLabelValue::None).unwrap();
        assert_eq!(b.self_loops_dropped(), 1);
        let g = b.build();
        assert_eq!(g.edge_count(), 2);
        let a = g.vertex_index(&u("a")).unwrap();
        let nbrs: Vec<_> = g.incident(a).iter().map(|&(n, _)| g.vertex(n).value.clone()).collect();
        assert_eq!(nbrs, ["b", "c"]);
        for e in g.edges() {
            assert!(e.a < e.b);
        }
        assert!(g.find_edge(a, g.vertex_index(&u("c")).unwrap(), 0).is_some());
        assert!(g
            .find_edge(g.vertex_index(&u("b")).unwrap(), g.vertex_index(&u("c")).unwrap(), 0)
            .is_none());
    }
}

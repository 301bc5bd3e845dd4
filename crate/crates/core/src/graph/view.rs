use super::{EdgeIdx, EdgeTypeIdx, EntityTypeIdx, HeteroGraph, VertexIdx};
use crate::error::{Error, Result};

/// Set of edge types as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TypeSet(pub u64);

impl TypeSet {
    pub fn all(n: usize) -> Self {
        TypeSet(if n >= 64 { u64::MAX } else { (1u64 << n) - 1 })
    }

    pub fn contains(self, t: EdgeTypeIdx) -> bool {
        self.0 & (1u64 << t) != 0
    }

    pub fn without(self, t: EdgeTypeIdx) -> Self {
        TypeSet(self.0 & !(1u64 << t))
    }

    pub fn iter(self) -> impl Iterator<Item = EdgeTypeIdx> {
        (0..64u8).filter(move |&t| self.contains(t))
    }
}

/// Bitset of excluded edge indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeMask {
    words: Vec<u64>,
    len: usize,
}

impl EdgeMask {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, e: EdgeIdx) {
        let (w, b) = (e as usize / 64, e as usize % 64);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        if self.words[w] & (1 << b) == 0 {
            self.words[w] |= 1 << b;
            self.len += 1;
        }
    }

    pub fn contains(&self, e: EdgeIdx) -> bool {
        let (w, b) = (e as usize / 64, e as usize % 64);
        self.words.get(w).is_some_and(|word| word & (1 << b) != 0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = EdgeIdx> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            (0..64)
                .filter(move |b| word & (1 << b) != 0)
                .map(move |b| (w * 64 + b) as EdgeIdx)
        })
    }
}

/// The complete graph with a set of held-out predicted edges hidden from every query.
///
/// This is a view: the base graph is shared, only the exclusion set is owned.
#[derive(Debug, Clone)]
pub struct FoldMaskedGraph<'g> {
    base: &'g HeteroGraph,
    excluded: EdgeMask,
}

/// Hides `held_out` predicted-type edges. The vertex set is unchanged.
pub fn mask_predicted_edges<'g>(graph: &'g HeteroGraph, held_out: &[EdgeIdx]) -> Result<FoldMaskedGraph<'g>> {
    let predicted = graph
        .predicted_type()
        .ok_or_else(|| Error::InvalidInput("graph has no predicted edge type".into()))?;
    let mut excluded = EdgeMask::new();
    for &e in held_out {
        let edge = graph
            .edges()
            .get(e as usize)
            .ok_or_else(|| Error::InvalidInput(format!("edge index {e} out of range")))?;
        if edge.edge_type != predicted {
            return Err(Error::InvalidInput(format!(
                "cannot mask edge {} -- {} of non-predicted type `{}`",
                graph.vertex(edge.a),
                graph.vertex(edge.b),
                graph.edge_types()[edge.edge_type as usize].name
            )));
        }
        excluded.insert(e);
    }
    Ok(FoldMaskedGraph { base: graph, excluded })
}

impl<'g> FoldMaskedGraph<'g> {
    pub fn unmasked(base: &'g HeteroGraph) -> Self {
        FoldMaskedGraph {
            base,
            excluded: EdgeMask::new(),
        }
    }

    pub fn base(&self) -> &'g HeteroGraph {
        self.base
    }

    pub fn excluded(&self) -> &EdgeMask {
        &self.excluded
    }

    pub fn view(&self) -> SubGraph<'_> {
        SubGraph::new(
            self.base,
            Some(&self.excluded),
            TypeSet::all(self.base.edge_types().len()),
        )
    }
}

/// A read-only view: the base graph restricted to `kept` edge types minus excluded edges.
///
/// The vertex set of a view holds the vertices whose entity type is an endpoint of some
/// kept edge type.
#[derive(Debug, Clone, Copy)]
pub struct SubGraph<'a> {
    graph: &'a HeteroGraph,
    excluded: Option<&'a EdgeMask>,
    kept: TypeSet,
}

impl<'a> SubGraph<'a> {
    pub(crate) fn new(graph: &'a HeteroGraph, excluded: Option<&'a EdgeMask>, kept: TypeSet) -> Self {
        SubGraph { graph, excluded, kept }
    }

    pub fn graph(&self) -> &'a HeteroGraph {
        self.graph
    }

    pub fn kept_types(&self) -> TypeSet {
        self.kept
    }

    pub(crate) fn with_kept(self, kept: TypeSet) -> Self {
        SubGraph { kept, ..self }
    }

    pub fn edge_visible(&self, e: EdgeIdx) -> bool {
        self.kept.contains(self.graph.edge(e).edge_type) && !self.excluded.is_some_and(|m| m.contains(e))
    }

    /// Entity types that are endpoints of a kept edge type, sorted.
    pub fn entity_types_present(&self) -> Vec<EntityTypeIdx> {
        let mut out: Vec<EntityTypeIdx> = self
            .kept
            .iter()
            .take_while(|&t| (t as usize) < self.graph.edge_types().len())
            .flat_map(|t| self.graph.edge_type_entities(t))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn contains_vertex(&self, v: VertexIdx) -> bool {
        let et = self.graph.vertex_entity(v);
        self.kept
            .iter()
            .take_while(|&t| (t as usize) < self.graph.edge_types().len())
            .any(|t| self.graph.edge_type_entities(t).contains(&et))
    }

    /// Visible `(neighbor, edge)` pairs; a neighbor repeats once per connecting edge type.
    pub fn incident(&self, v: VertexIdx) -> impl Iterator<Item = (VertexIdx, EdgeIdx)> + '_ {
        self.graph
            .incident(v)
            .iter()
            .copied()
            .filter(move |&(_, e)| self.edge_visible(e))
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeIdx> + '_ {
        (0..self.graph.edge_count() as EdgeIdx).filter(move |&e| self.edge_visible(e))
    }

    pub fn edge_count_of_type(&self, t: EdgeTypeIdx) -> usize {
        self.edges().filter(|&e| self.graph.edge(e).edge_type == t).count()
    }

    pub fn predicted_edge_count(&self) -> usize {
        self.graph.predicted_type().map_or(0, |p| self.edge_count_of_type(p))
    }

    /// Materializes the distinct-neighbor structure used by the metric kernels.
    pub fn topology(&self) -> Topology<'a> {
        Topology::from_view(self)
    }
}

/// Compressed distinct-neighbor adjacency of a [`SubGraph`].
///
/// For each neighbor it also records whether the connection exists only through
/// predicted-type edges, which lets pair metrics ignore the direct edge of the pair.
#[derive(Debug, Clone)]
pub struct Topology<'a> {
    graph: &'a HeteroGraph,
    present: Vec<bool>,
    present_count: usize,
    offsets: Vec<usize>,
    neighbors: Vec<VertexIdx>,
    predicted_only: Vec<bool>,
}

impl<'a> Topology<'a> {
    fn from_view(view: &SubGraph<'a>) -> Self {
        let g = view.graph;
        let n = g.vertex_count();
        let predicted = g.predicted_type();
        let present: Vec<bool> = (0..n as VertexIdx).map(|v| view.contains_vertex(v)).collect();
        let present_count = present.iter().filter(|&&p| p).count();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        let mut predicted_only = Vec::new();
        for v in 0..n as VertexIdx {
            // incident lists are sorted by neighbor, so equal neighbors are adjacent
            for (u, e) in view.incident(v) {
                let is_pred = Some(g.edge(e).edge_type) == predicted;
                if neighbors.len() > offsets[v as usize] && *neighbors.last().unwrap() == u {
                    let last = predicted_only.last_mut().unwrap();
                    *last = *last && is_pred;
                } else {
                    neighbors.push(u);
                    predicted_only.push(is_pred);
                }
            }
            offsets.push(neighbors.len());
        }
        Topology {
            graph: g,
            present,
            present_count,
            offsets,
            neighbors,
            predicted_only,
        }
    }

    pub fn graph(&self) -> &'a HeteroGraph {
        self.graph
    }

    /// Size of the underlying vertex index space (including absent vertices).
    pub fn capacity(&self) -> usize {
        self.present.len()
    }

    pub fn present_count(&self) -> usize {
        self.present_count
    }

    pub fn contains(&self, v: VertexIdx) -> bool {
        self.present.get(v as usize).copied().unwrap_or(false)
    }

    pub fn present_vertices(&self) -> impl Iterator<Item = VertexIdx> + '_ {
        (0..self.present.len() as VertexIdx).filter(|&v| self.present[v as usize])
    }

    pub fn neighbors(&self, v: VertexIdx) -> &[VertexIdx] {
        let v = v as usize;
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: VertexIdx) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    /// `true` if `u` and `v` are adjacent only through predicted-type edges.
    pub fn predicted_only(&self, v: VertexIdx, u: VertexIdx) -> bool {
        let nb = self.neighbors(v);
        match nb.binary_search(&u) {
            Ok(i) => self.predicted_only[self.offsets[v as usize] + i],
            Err(_) => false,
        }
    }

    pub fn adjacent(&self, v: VertexIdx, u: VertexIdx) -> bool {
        self.neighbors(v).binary_search(&u).is_ok()
    }
}

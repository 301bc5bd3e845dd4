//! Graph metrics over sub-graph views: single-vertex, pair and type-filtered pair kernels.

mod local;
mod pagerank;
mod pair;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::graph::{is_bipartite, EntityTypeIdx, SubGraph, Topology, VertexId, VertexIdx};

pub use local::{avg_neighbor_degree, clustering_coefficient, degree_centrality, node_redundancy};
pub use pagerank::{pagerank, PageRankParams, PageRankResult};
pub use pair::{shared_neighbors_of_type, shared_neighbors_ratio, shortest_path_excluding, PathLength};

/// A finite metric value or an explicit missing marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricValue {
    Value(f64),
    Missing,
}

impl MetricValue {
    /// Non-finite inputs become `Missing`.
    pub fn new(v: f64) -> Self {
        if v.is_finite() {
            MetricValue::Value(v)
        } else {
            MetricValue::Missing
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(v),
            MetricValue::Missing => None,
        }
    }

    pub fn is_missing(self) -> bool {
        matches!(self, MetricValue::Missing)
    }

    /// CSV cell text: shortest round-trip number, empty when missing.
    pub fn to_cell(self) -> String {
        match self {
            MetricValue::Value(v) => crate::dataset::format_number(v),
            MetricValue::Missing => String::new(),
        }
    }
}

pub(crate) fn require(topo: &Topology<'_>, v: VertexIdx) -> Result<()> {
    if topo.contains(v) {
        Ok(())
    } else if (v as usize) < topo.capacity() {
        Err(Error::UnknownVertex(format!(
            "{} (not in this sub-graph)",
            topo.graph().vertex(v)
        )))
    } else {
        Err(Error::UnknownVertex(format!("#{v}")))
    }
}

pub(crate) fn sorted_intersection_count(a: &[VertexIdx], b: &[VertexIdx]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Formats like C's `%.{digits}g`.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let sci = format!("{:.*e}", digits.saturating_sub(1), v);
    // rounding may bump the exponent, re-read it from the scientific form
    let exp = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse::<i32>().ok())
        .unwrap_or(exp);
    if exp < -4 || exp >= digits as i32 {
        let (mantissa, _) = sci.split_once('e').unwrap();
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Metric kernels bound to one view, with bipartiteness and PageRank computed once.
#[derive(Debug)]
pub struct MetricEngine<'a> {
    topo: Topology<'a>,
    bipartite: bool,
    params: PageRankParams,
    pagerank: OnceLock<Option<PageRankResult>>,
}

impl<'a> MetricEngine<'a> {
    pub fn new(view: &SubGraph<'a>, params: PageRankParams) -> Self {
        Self::from_topology(view.topology(), params)
    }

    pub fn from_topology(topo: Topology<'a>, params: PageRankParams) -> Self {
        let bipartite = is_bipartite(&topo).bipartite;
        MetricEngine {
            topo,
            bipartite,
            params,
            pagerank: OnceLock::new(),
        }
    }

    pub fn topology(&self) -> &Topology<'a> {
        &self.topo
    }

    pub fn is_bipartite(&self) -> bool {
        self.bipartite
    }

    /// Cached PageRank of the whole view; errors on an empty view.
    pub fn pagerank(&self) -> Result<&PageRankResult> {
        self.params.validate()?;
        self.pagerank
            .get_or_init(|| pagerank(&self.topo, &self.params).ok())
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("pagerank of an empty graph".into()))
    }

    pub fn pagerank_scores(&self) -> Result<BTreeMap<VertexId, MetricValue>> {
        let pr = self.pagerank()?;
        let g = self.topo.graph();
        Ok(self
            .topo
            .present_vertices()
            .map(|v| (g.vertex(v).clone(), pr.score(v)))
            .collect())
    }

    pub fn pagerank_of(&self, v: VertexIdx) -> Result<MetricValue> {
        require(&self.topo, v)?;
        Ok(self.pagerank()?.score(v))
    }

    pub fn degree(&self, v: VertexIdx) -> Result<MetricValue> {
        degree_centrality(&self.topo, v)
    }

    pub fn avg_neighbor_degree(&self, v: VertexIdx) -> Result<MetricValue> {
        avg_neighbor_degree(&self.topo, v)
    }

    pub fn clustering_coefficient(&self, v: VertexIdx) -> Result<MetricValue> {
        clustering_coefficient(&self.topo, v, self.bipartite)
    }

    pub fn node_redundancy(&self, v: VertexIdx) -> Result<MetricValue> {
        node_redundancy(&self.topo, v, self.bipartite)
    }

    pub fn shortest_path(&self, s: VertexIdx, t: VertexIdx) -> Result<PathLength> {
        shortest_path_excluding(&self.topo, s, t)
    }

    pub fn shared_neighbors_ratio(&self, s: VertexIdx, t: VertexIdx) -> Result<MetricValue> {
        shared_neighbors_ratio(&self.topo, s, t)
    }

    pub fn shared_neighbors_of_type(&self, s: VertexIdx, t: VertexIdx, x: EntityTypeIdx) -> Result<MetricValue> {
        shared_neighbors_of_type(&self.topo, s, t, x)
    }
}

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::graph::{Topology, VertexIdx};

use super::{require, sorted_intersection_count, MetricValue};

pub fn degree_centrality(topo: &Topology<'_>, v: VertexIdx) -> Result<MetricValue> {
    require(topo, v)?;
    Ok(MetricValue::new(topo.degree(v) as f64))
}

/// Mean degree of the neighbors of `v`; missing for isolated vertices.
pub fn avg_neighbor_degree(topo: &Topology<'_>, v: VertexIdx) -> Result<MetricValue> {
    require(topo, v)?;
    let nbrs = topo.neighbors(v);
    if nbrs.is_empty() {
        return Ok(MetricValue::Missing);
    }
    let total: usize = nbrs.iter().map(|&u| topo.degree(u)).sum();
    Ok(MetricValue::new(total as f64 / nbrs.len() as f64))
}

/// Vertices `w != v` at distance two, with `|N(v) ∩ N(w)|` for each, in index order so
/// that floating-point sums over them are reproducible.
fn second_neighbors(topo: &Topology<'_>, v: VertexIdx) -> BTreeMap<VertexIdx, usize> {
    let mut shared = BTreeMap::new();
    for &u in topo.neighbors(v) {
        for &w in topo.neighbors(u) {
            if w != v {
                *shared.entry(w).or_insert(0) += 1;
            }
        }
    }
    shared
}

/// Local clustering coefficient.
///
/// On bipartite views this is the mean Jaccard overlap `|N(v) ∩ N(w)| / |N(v) ∪ N(w)|`
/// over second neighbors `w` (excluding `v`), missing when there are none. Otherwise it
/// is the triangle density among neighbors, missing below degree two.
pub fn clustering_coefficient(topo: &Topology<'_>, v: VertexIdx, bipartite: bool) -> Result<MetricValue> {
    require(topo, v)?;
    let dv = topo.degree(v);
    if bipartite {
        let second = second_neighbors(topo, v);
        if second.is_empty() {
            return Ok(MetricValue::Missing);
        }
        let total: f64 = second
            .iter()
            .map(|(&w, &common)| common as f64 / (dv + topo.degree(w) - common) as f64)
            .sum();
        Ok(MetricValue::new(total / second.len() as f64))
    } else {
        if dv < 2 {
            return Ok(MetricValue::Missing);
        }
        let nbrs = topo.neighbors(v);
        let links: usize = nbrs
            .iter()
            .map(|&u| sorted_intersection_count(topo.neighbors(u), nbrs))
            .sum();
        let triangles = links / 2;
        Ok(MetricValue::new(triangles as f64 / (dv * (dv - 1) / 2) as f64))
    }
}

/// Fraction of neighbor pairs of `v` that are both adjacent to some other vertex.
/// Only defined on bipartite views; missing below degree two.
pub fn node_redundancy(topo: &Topology<'_>, v: VertexIdx, bipartite: bool) -> Result<MetricValue> {
    require(topo, v)?;
    if !bipartite {
        return Err(Error::NotBipartite);
    }
    let nbrs = topo.neighbors(v);
    let d = nbrs.len();
    if d < 2 {
        return Ok(MetricValue::Missing);
    }
    let possible = d * (d - 1) / 2;
    let position: HashMap<VertexIdx, usize> = nbrs.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let mut covered: HashSet<(usize, usize)> = HashSet::new();
    let mut seen = HashSet::new();
    'outer: for &u in nbrs {
        for &w in topo.neighbors(u) {
            if w == v || !seen.insert(w) {
                continue;
            }
            let common: Vec<usize> = topo
                .neighbors(w)
                .iter()
                .filter_map(|x| position.get(x).copied())
                .collect();
            for (i, &a) in common.iter().enumerate() {
                for &b in &common[i + 1..] {
                    covered.insert((a.min(b), a.max(b)));
                }
            }
            if covered.len() == possible {
                break 'outer;
            }
        }
    }
    Ok(MetricValue::new(covered.len() as f64 / possible as f64))
}

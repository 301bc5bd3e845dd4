use crate::error::{Error, Result};
use crate::graph::{Topology, VertexIdx};

use super::MetricValue;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PageRankParams {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.85,
            tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

impl PageRankParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!(
                "pagerank damping must be in (0, 1], got {}",
                self.damping
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Config(format!(
                "pagerank tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("pagerank max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankResult {
    /// Score per vertex index; zero for vertices outside the view.
    pub scores: Vec<f64>,
    present: Vec<bool>,
    pub iterations: usize,
    /// L1 change of the last iteration.
    pub delta: f64,
    pub converged: bool,
}

impl PageRankResult {
    pub fn score(&self, v: VertexIdx) -> MetricValue {
        match self.present.get(v as usize) {
            Some(true) => MetricValue::new(self.scores[v as usize]),
            _ => MetricValue::Missing,
        }
    }

    pub fn sum(&self) -> f64 {
        self.scores.iter().sum()
    }
}

/// Damped PageRank by power iteration on the undirected view.
///
/// Every vertex spreads its score evenly over its neighbors; isolated vertices spread
/// theirs uniformly over the whole view, as does the teleport term. Iterates until the
/// L1 change drops below `tolerance` or `max_iterations` is reached.
pub fn pagerank(topo: &Topology<'_>, params: &PageRankParams) -> Result<PageRankResult> {
    params.validate()?;
    let n = topo.present_count();
    if n == 0 {
        return Err(Error::InvalidInput("pagerank of an empty graph".into()));
    }
    let cap = topo.capacity();
    let present: Vec<bool> = (0..cap as VertexIdx).map(|v| topo.contains(v)).collect();
    let vertices: Vec<VertexIdx> = topo.present_vertices().collect();
    let inv_n = 1.0 / n as f64;
    let d = params.damping;

    let mut rank = vec![0.0; cap];
    for &v in &vertices {
        rank[v as usize] = inv_n;
    }
    let mut share = vec![0.0; cap];
    let mut next = vec![0.0; cap];
    let mut iterations = 0;
    let mut delta = f64::INFINITY;
    while iterations < params.max_iterations {
        iterations += 1;
        let mut dangling = 0.0;
        for &v in &vertices {
            let deg = topo.degree(v);
            if deg == 0 {
                dangling += rank[v as usize];
                share[v as usize] = 0.0;
            } else {
                share[v as usize] = rank[v as usize] / deg as f64;
            }
        }
        let base = (1.0 - d) * inv_n + d * dangling * inv_n;
        delta = 0.0;
        for &v in &vertices {
            let incoming: f64 = topo.neighbors(v).iter().map(|&u| share[u as usize]).sum();
            let value = base + d * incoming;
            delta += (value - rank[v as usize]).abs();
            next[v as usize] = value;
        }
        std::mem::swap(&mut rank, &mut next);
        if delta < params.tolerance {
            break;
        }
    }
    Ok(PageRankResult {
        scores: rank,
        present,
        iterations,
        delta,
        converged: delta < params.tolerance,
    })
}

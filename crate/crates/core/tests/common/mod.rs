//! Random typed graphs and brute-force metric oracles over dense adjacency matrices.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use graphfeat::graph::{EdgeLabelValue, EdgeTypeDecl, GraphBuilder, HeteroGraph, VertexId};
use graphfeat::metrics::MetricValue;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PREDICTED: &str = "rates";

pub fn decl(name: &str, s: &str, t: &str) -> EdgeTypeDecl {
    EdgeTypeDecl {
        name: name.into(),
        source_entity: s.into(),
        target_entity: t.into(),
    }
}

/// Edge types of the random graphs. The first three keep a user/tag vs item bipartition.
pub fn edge_types(bipartite_only: bool) -> Vec<EdgeTypeDecl> {
    let mut t = vec![
        decl(PREDICTED, "user", "item"),
        decl("likes", "user", "item"),
        decl("describes", "tag", "item"),
    ];
    if !bipartite_only {
        t.push(decl("friends", "user", "user"));
        t.push(decl("uses", "user", "tag"));
    }
    t
}

/// A generated graph together with the raw edge list it was built from.
pub struct RandomGraph {
    pub graph: HeteroGraph,
    pub vertices: Vec<VertexId>,
    /// `(a, b, edge type name)` over indices into `vertices`; may repeat pairs across types.
    pub edges: Vec<(usize, usize, String)>,
}

pub fn random_graph(seed: u64, max_vertices: usize, bipartite_only: bool) -> RandomGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types = edge_types(bipartite_only);
    let n = rng.random_range(2..=max_vertices);
    let entity = ["user", "item", "tag"];
    let vertices: Vec<VertexId> = (0..n)
        .map(|i| VertexId::new(entity[rng.random_range(0..3)], format!("v{i}")))
        .collect();
    let density = rng.random_range(0.15..0.6);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for t in &types {
                let fits = (vertices[a].entity_type == t.source_entity && vertices[b].entity_type == t.target_entity)
                    || (vertices[a].entity_type == t.target_entity && vertices[b].entity_type == t.source_entity);
                if fits && rng.random_bool(density) {
                    edges.push((a, b, t.name.clone()));
                }
            }
        }
    }
    let graph = build(&types, &vertices, &edges);
    RandomGraph { graph, vertices, edges }
}

pub fn build(types: &[EdgeTypeDecl], vertices: &[VertexId], edges: &[(usize, usize, String)]) -> HeteroGraph {
    let mut b = GraphBuilder::new(types.to_vec(), Some(PREDICTED)).unwrap();
    for v in vertices {
        b.add_vertex(v.clone());
    }
    for (x, y, t) in edges {
        b.add_edge(vertices[*x].clone(), vertices[*y].clone(), t, EdgeLabelValue::None)
            .unwrap();
    }
    b.build()
}

/// Dense view of a graph: `adj[a][b]` if any edge joins them, `pred_only[a][b]` if every
/// joining edge is predicted.
pub struct Dense {
    pub n: usize,
    pub adj: Vec<Vec<bool>>,
    pub pred_only: Vec<Vec<bool>>,
    pub entity: Vec<String>,
}

impl Dense {
    pub fn new(vertices: &[VertexId], edges: &[(usize, usize, String)]) -> Self {
        let n = vertices.len();
        let mut adj = vec![vec![false; n]; n];
        let mut other = vec![vec![false; n]; n];
        for (a, b, t) in edges {
            adj[*a][*b] = true;
            adj[*b][*a] = true;
            if t != PREDICTED {
                other[*a][*b] = true;
                other[*b][*a] = true;
            }
        }
        let pred_only = (0..n)
            .map(|a| (0..n).map(|b| adj[a][b] && !other[a][b]).collect())
            .collect();
        Dense {
            n,
            adj,
            pred_only,
            entity: vertices.iter().map(|v| v.entity_type.clone()).collect(),
        }
    }

    pub fn nbrs(&self, v: usize) -> BTreeSet<usize> {
        (0..self.n).filter(|&u| self.adj[v][u]).collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].iter().filter(|&&x| x).count()
    }

    pub fn is_bipartite(&self) -> bool {
        let mut color = vec![-1i8; self.n];
        for start in 0..self.n {
            if color[start] >= 0 {
                continue;
            }
            color[start] = 0;
            let mut q = VecDeque::from([start]);
            while let Some(v) = q.pop_front() {
                for u in 0..self.n {
                    if self.adj[v][u] {
                        if color[u] < 0 {
                            color[u] = 1 - color[v];
                            q.push_back(u);
                        } else if color[u] == color[v] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    pub fn avg_neighbor_degree(&self, v: usize) -> MetricValue {
        let nb = self.nbrs(v);
        if nb.is_empty() {
            return MetricValue::Missing;
        }
        let total: usize = nb.iter().map(|&u| self.degree(u)).sum();
        MetricValue::Value(total as f64 / nb.len() as f64)
    }

    pub fn clustering(&self, v: usize, bipartite: bool) -> MetricValue {
        let nv = self.nbrs(v);
        if bipartite {
            let second: BTreeSet<usize> = nv.iter().flat_map(|&u| self.nbrs(u)).filter(|&w| w != v).collect();
            if second.is_empty() {
                return MetricValue::Missing;
            }
            let sum: f64 = second
                .iter()
                .map(|&w| {
                    let nw = self.nbrs(w);
                    nv.intersection(&nw).count() as f64 / nv.union(&nw).count() as f64
                })
                .sum();
            MetricValue::Value(sum / second.len() as f64)
        } else {
            let d = nv.len();
            if d < 2 {
                return MetricValue::Missing;
            }
            let list: Vec<usize> = nv.into_iter().collect();
            let mut tri = 0;
            for i in 0..d {
                for j in i + 1..d {
                    if self.adj[list[i]][list[j]] {
                        tri += 1;
                    }
                }
            }
            MetricValue::Value(tri as f64 / (d * (d - 1) / 2) as f64)
        }
    }

    pub fn redundancy(&self, v: usize) -> MetricValue {
        let list: Vec<usize> = self.nbrs(v).into_iter().collect();
        let d = list.len();
        if d < 2 {
            return MetricValue::Missing;
        }
        let mut hit = 0;
        for i in 0..d {
            for j in i + 1..d {
                if (0..self.n).any(|x| x != v && self.adj[x][list[i]] && self.adj[x][list[j]]) {
                    hit += 1;
                }
            }
        }
        MetricValue::Value(hit as f64 / (d * (d - 1) / 2) as f64)
    }

    /// Dense power iteration, run far past the engine's stopping rule.
    pub fn pagerank(&self, damping: f64) -> Vec<f64> {
        let n = self.n;
        let deg: Vec<usize> = (0..n).map(|v| self.degree(v)).collect();
        let mut x = vec![1.0 / n as f64; n];
        for _ in 0..100_000 {
            let dangling: f64 = (0..n).filter(|&j| deg[j] == 0).map(|j| x[j]).sum();
            let mut y = vec![0.0; n];
            for (i, yi) in y.iter_mut().enumerate() {
                let mut s = 0.0;
                for j in 0..n {
                    if self.adj[j][i] {
                        s += x[j] / deg[j] as f64;
                    }
                }
                *yi = (1.0 - damping) / n as f64 + damping * (s + dangling / n as f64);
            }
            let delta: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
            x = y;
            if delta < 1e-15 {
                break;
            }
        }
        x
    }

    /// BFS on a copy with the `s`-`t` edge deleted when it is predicted-only.
    pub fn shortest_path(&self, s: usize, t: usize) -> MetricValue {
        let mut adj = self.adj.clone();
        if self.pred_only[s][t] {
            adj[s][t] = false;
            adj[t][s] = false;
        }
        let mut dist = vec![usize::MAX; self.n];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for u in 0..self.n {
                if adj[v][u] && dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    q.push_back(u);
                }
            }
        }
        if dist[t] == usize::MAX {
            MetricValue::Missing
        } else {
            MetricValue::Value(dist[t] as f64)
        }
    }

    fn pair_sets(&self, s: usize, t: usize) -> (BTreeSet<usize>, BTreeSet<usize>) {
        let mut ns = self.nbrs(s);
        let mut nt = self.nbrs(t);
        if self.pred_only[s][t] {
            ns.remove(&t);
            nt.remove(&s);
        }
        (ns, nt)
    }

    pub fn shared_ratio(&self, s: usize, t: usize) -> MetricValue {
        let (ns, nt) = self.pair_sets(s, t);
        let union = ns.union(&nt).count();
        if union == 0 {
            return MetricValue::Value(0.0);
        }
        MetricValue::Value(ns.intersection(&nt).count() as f64 / union as f64)
    }

    pub fn shared_of_type(&self, s: usize, t: usize, x: &str) -> MetricValue {
        let (ns, nt) = self.pair_sets(s, t);
        let keep =
            |set: BTreeSet<usize>| -> BTreeSet<usize> { set.into_iter().filter(|&u| self.entity[u] == x).collect() };
        let (ns, nt) = (keep(ns), keep(nt));
        let union = ns.union(&nt).count();
        if union == 0 {
            return MetricValue::Missing;
        }
        MetricValue::Value(ns.intersection(&nt).count() as f64 / union as f64)
    }
}

pub fn close(a: MetricValue, b: MetricValue, tol: f64) -> bool {
    match (a, b) {
        (MetricValue::Missing, MetricValue::Missing) => true,
        (MetricValue::Value(x), MetricValue::Value(y)) => (x - y).abs() < tol,
        _ => false,
    }
}

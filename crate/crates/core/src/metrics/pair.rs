use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{EntityTypeIdx, Topology, VertexIdx};

use super::{require, MetricValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathLength {
    Hops(u32),
    Unreachable,
}

impl From<PathLength> for MetricValue {
    fn from(p: PathLength) -> Self {
        match p {
            PathLength::Hops(h) => MetricValue::new(h as f64),
            PathLength::Unreachable => MetricValue::Missing,
        }
    }
}

/// Breadth-first distance from `s` to `t` that never uses a direct predicted-type
/// `s`-`t` edge. The pair's own edge can therefore never be the answer.
pub fn shortest_path_excluding(topo: &Topology<'_>, s: VertexIdx, t: VertexIdx) -> Result<PathLength> {
    require(topo, s)?;
    require(topo, t)?;
    if s == t {
        return Err(Error::InvalidInput("shortest path needs two distinct vertices".into()));
    }
    let skip_direct = topo.predicted_only(s, t);
    let mut dist = vec![u32::MAX; topo.capacity()];
    dist[s as usize] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        let next = dist[v as usize] + 1;
        for &u in topo.neighbors(v) {
            if v == s && u == t && skip_direct {
                continue;
            }
            if dist[u as usize] == u32::MAX {
                if u == t {
                    return Ok(PathLength::Hops(next));
                }
                dist[u as usize] = next;
                queue.push_back(u);
            }
        }
    }
    Ok(PathLength::Unreachable)
}

/// Neighbors of `a`, minus `b` when `a` and `b` are joined only by predicted-type edges.
fn neighbors_without_direct<'t>(
    topo: &'t Topology<'_>,
    a: VertexIdx,
    b: VertexIdx,
) -> impl Iterator<Item = VertexIdx> + 't {
    let drop = topo.predicted_only(a, b).then_some(b);
    topo.neighbors(a).iter().copied().filter(move |&u| Some(u) != drop)
}

fn jaccard(mut a: impl Iterator<Item = VertexIdx>, mut b: impl Iterator<Item = VertexIdx>) -> (usize, usize) {
    // both inputs are sorted
    let (mut inter, mut union) = (0, 0);
    let (mut x, mut y) = (a.next(), b.next());
    loop {
        match (x, y) {
            (Some(p), Some(q)) if p == q => {
                inter += 1;
                union += 1;
                x = a.next();
                y = b.next();
            }
            (Some(p), Some(q)) if p < q => {
                union += 1;
                x = a.next();
            }
            (Some(_), Some(_)) => {
                union += 1;
                y = b.next();
            }
            (Some(_), None) => {
                union += 1;
                x = a.next();
            }
            (None, Some(_)) => {
                union += 1;
                y = b.next();
            }
            (None, None) => return (inter, union),
        }
    }
}

/// `|N(s) ∩ N(t)| / |N(s) ∪ N(t)|`, ignoring the pair's direct predicted edge; zero when
/// both neighborhoods are empty.
pub fn shared_neighbors_ratio(topo: &Topology<'_>, s: VertexIdx, t: VertexIdx) -> Result<MetricValue> {
    require(topo, s)?;
    require(topo, t)?;
    let (inter, union) = jaccard(
        neighbors_without_direct(topo, s, t),
        neighbors_without_direct(topo, t, s),
    );
    Ok(MetricValue::new(if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }))
}

/// Jaccard ratio over neighbors of entity type `x` only; missing when neither endpoint
/// has a neighbor of that type.
pub fn shared_neighbors_of_type(
    topo: &Topology<'_>,
    s: VertexIdx,
    t: VertexIdx,
    x: EntityTypeIdx,
) -> Result<MetricValue> {
    require(topo, s)?;
    require(topo, t)?;
    let g = topo.graph();
    if x as usize >= g.entity_types().len() {
        return Err(Error::UnknownEntityType(format!("#{x}")));
    }
    let of_type = |u: &VertexIdx| g.vertex_entity(*u) == x;
    let (inter, union) = jaccard(
        neighbors_without_direct(topo, s, t).filter(of_type),
        neighbors_without_direct(topo, t, s).filter(of_type),
    );
    Ok(if union == 0 {
        MetricValue::Missing
    } else {
        MetricValue::new(inter as f64 / union as f64)
    })
}

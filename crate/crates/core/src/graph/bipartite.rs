use std::collections::VecDeque;

use super::{Topology, VertexIdx};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BipartiteWitness {
    /// Side (0 or 1) per vertex index; `None` for vertices absent from the view.
    Coloring(Vec<Option<u8>>),
    /// A closed walk `v0, v1, ..., vk` with an odd number of edges, `vk` adjacent to `v0`.
    OddCycle(Vec<VertexIdx>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteCheck {
    pub bipartite: bool,
    pub witness: BipartiteWitness,
}

/// Two-colors the view by BFS, returning either the coloring or an odd cycle.
pub fn is_bipartite(topo: &Topology<'_>) -> BipartiteCheck {
    let n = topo.capacity();
    let mut color: Vec<Option<u8>> = vec![None; n];
    let mut parent: Vec<VertexIdx> = vec![VertexIdx::MAX; n];
    let mut queue = VecDeque::new();
    for root in topo.present_vertices() {
        if color[root as usize].is_some() {
            continue;
        }
        color[root as usize] = Some(0);
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            let cv = color[v as usize].unwrap();
            for &u in topo.neighbors(v) {
                match color[u as usize] {
                    None => {
                        color[u as usize] = Some(1 - cv);
                        parent[u as usize] = v;
                        queue.push_back(u);
                    }
                    Some(cu) if cu == cv => {
                        return BipartiteCheck {
                            bipartite: false,
                            witness: BipartiteWitness::OddCycle(odd_cycle(&parent, v, u)),
                        };
                    }
                    Some(_) => {}
                }
            }
        }
    }
    BipartiteCheck {
        bipartite: true,
        witness: BipartiteWitness::Coloring(color),
    }
}

/// `v` and `u` share a color and are adjacent; joining their BFS-tree paths at the
/// lowest common ancestor closes an odd cycle.
fn odd_cycle(parent: &[VertexIdx], v: VertexIdx, u: VertexIdx) -> Vec<VertexIdx> {
    let path = |mut x: VertexIdx| {
        let mut p = vec![x];
        while parent[x as usize] != VertexIdx::MAX {
            x = parent[x as usize];
            p.push(x);
        }
        p.reverse();
        p
    };
    let pv = path(v);
    let pu = path(u);
    let common = pv.iter().zip(&pu).take_while(|(a, b)| a == b).count();
    let mut cycle: Vec<VertexIdx> = pv[common - 1..].to_vec();
    cycle.extend(pu[common..].iter().rev());
    cycle
}

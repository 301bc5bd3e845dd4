//! Tab-separated edge-list format: `<type>\t<entityA>=<value>\t<entityB>=<value>\t<label>`,
//! one line per edge, lines sorted lexicographically.

use std::collections::BTreeMap;

use super::{EdgeLabelValue, EdgeTypeDecl, GraphBuilder, HeteroGraph, SubGraph, VertexId};
use crate::error::{Error, Result};

pub fn export_edge_list(view: &SubGraph<'_>) -> String {
    let g = view.graph();
    let mut lines: Vec<String> = view
        .edges()
        .map(|e| {
            let edge = g.edge(e);
            format!(
                "{}\t{}\t{}\t{}",
                g.edge_types()[edge.edge_type as usize].name,
                g.vertex(edge.a),
                g.vertex(edge.b),
                edge.label.as_deref().unwrap_or("")
            )
        })
        .collect();
    lines.sort();
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Reads an edge list back into a graph. Edge types are ordered by name; `predicted`
/// optionally names the predicted edge type.
pub fn parse_edge_list(text: &str, predicted: Option<&str>) -> Result<HeteroGraph> {
    let mut rows = Vec::new();
    let mut decls: BTreeMap<String, (String, String)> = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 4 {
            return Err(Error::Parse {
                what: "edge list".into(),
                message: format!("line {}: expected 4 tab-separated fields, got {}", n + 1, parts.len()),
            });
        }
        let a = VertexId::parse(parts[1])?;
        let b = VertexId::parse(parts[2])?;
        let pair = (a.entity_type.clone(), b.entity_type.clone());
        match decls.get(parts[0]) {
            Some((x, y)) if !((x, y) == (&pair.0, &pair.1) || (x, y) == (&pair.1, &pair.0)) => {
                return Err(Error::Parse {
                    what: "edge list".into(),
                    message: format!(
                        "line {}: edge type `{}` connects different entity types",
                        n + 1,
                        parts[0]
                    ),
                });
            }
            Some(_) => {}
            None => {
                decls.insert(parts[0].to_string(), pair);
            }
        }
        rows.push((parts[0].to_string(), a, b, parts[3].to_string()));
    }
    let decls = decls
        .into_iter()
        .map(|(name, (s, t))| EdgeTypeDecl {
            name,
            source_entity: s,
            target_entity: t,
        })
        .collect();
    let mut builder = GraphBuilder::new(decls, predicted)?;
    for (t, a, b, label) in rows {
        let label = if label.is_empty() {
            EdgeLabelValue::None
        } else {
            EdgeLabelValue::Text(label)
        };
        builder.add_edge(a, b, &t, label)?;
    }
    Ok(builder.build())
}

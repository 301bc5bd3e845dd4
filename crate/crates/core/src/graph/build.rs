use super::{EdgeLabelValue, EdgeTypeDecl, GraphBuilder, HeteroGraph, VertexId};
use crate::dataset::{Cell, TabularDataset};
use crate::error::{Error, Result};
use crate::schema::DatasetSchema;

/// Builds the complete graph: one vertex per distinct `(entity type, value)` over all
/// entity columns, one edge per relationship row. Missing cells produce neither.
///
/// Numeric feature columns must have been discretized first.
pub fn build_complete_graph(dataset: &TabularDataset, schema: &DatasetSchema) -> Result<HeteroGraph> {
    if dataset.tables.len() != schema.tables.len() {
        return Err(Error::Invariant("dataset does not match schema tables".into()));
    }
    let decls = schema
        .relationships
        .iter()
        .map(|r| EdgeTypeDecl {
            name: r.name.clone(),
            source_entity: r.source_entity.clone(),
            target_entity: r.target_entity.clone(),
        })
        .collect();
    let mut builder = GraphBuilder::new(decls, Some(&schema.predicted().name))?;

    for (spec, table) in schema.tables.iter().zip(&dataset.tables) {
        for (ci, col) in spec.columns.iter().enumerate() {
            if !col.role.is_entity() {
                continue;
            }
            if let Some(values) = &table.unique[ci] {
                for value in values {
                    builder.add_vertex(VertexId::new(col.entity_type(), value.clone()));
                }
            }
        }
    }

    for (ri, rel) in schema.relationships.iter().enumerate() {
        let cols = schema.relationship_columns(ri);
        let spec = &schema.tables[cols.table];
        let table = &dataset.tables[cols.table];
        let src_entity = spec.columns[cols.source].entity_type();
        let tgt_entity = spec.columns[cols.target].entity_type();
        let label_cols: Vec<usize> = rel
            .feature_labels
            .iter()
            .map(|name| spec.column(name).map(|(i, _)| i).expect("validated label column"))
            .collect();
        let feedback = spec.feedback_column().map(|(i, _)| i);

        for row in &table.rows {
            let (Some(s), Some(t)) = (row[cols.source].canonical(), row[cols.target].canonical()) else {
                continue;
            };
            for (ci, value) in [(cols.source, &s), (cols.target, &t)] {
                let indexed = table.unique[ci].as_ref().is_some_and(|u| u.contains(value));
                if !indexed {
                    return Err(Error::Invariant(format!(
                        "table `{}` value `{value}` is missing from the column index",
                        spec.name
                    )));
                }
            }
            let label = if !label_cols.is_empty() {
                let parts: Vec<String> = label_cols.iter().map(|&c| row[c].to_string()).collect();
                EdgeLabelValue::Text(parts.join("|"))
            } else {
                match feedback.map(|c| &row[c]) {
                    Some(Cell::Number(v)) => EdgeLabelValue::Number(*v),
                    _ => EdgeLabelValue::None,
                }
            };
            builder.add_edge(
                VertexId::new(src_entity, s),
                VertexId::new(tgt_entity, t),
                &rel.name,
                label,
            )?;
        }
    }
    if builder.self_loops_dropped() > 0 {
        log::debug!("dropped {} self-loop rows", builder.self_loops_dropped());
    }
    Ok(builder.build())
}

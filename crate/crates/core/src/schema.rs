//! Declarative dataset schema: tables, entity columns and relationships.
//!
//! The schema is a JSON document with three top-level keys:
//!
//! ```json
//! {
//!   "tables": [
//!     { "name": "listens", "file": "listens.csv",
//!       "columns": [
//!         { "name": "user",   "role": "source_id", "entity": "user" },
//!         { "name": "artist", "role": "target_id", "entity": "artist" },
//!         { "name": "weight", "role": "feedback" } ] }
//!   ],
//!   "relationships": [
//!     { "name": "listens", "table": "listens",
//!       "source_entity": "user", "target_entity": "artist" }
//!   ],
//!   "predicted": "listens"
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on relationship types; edge-type sets are stored as `u64` bitmasks.
pub const MAX_RELATIONSHIPS: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    SourceId,
    TargetId,
    Feedback,
    Feature,
}

impl ColumnRole {
    pub fn is_entity(self) -> bool {
        !matches!(self, ColumnRole::Feedback)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    #[default]
    Categorical,
    Numeric,
}

/// How a numeric column is turned into categorical bin labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum BinningSpec {
    FixedWidth { width: f64 },
    Quantile { bins: usize },
}

impl Default for BinningSpec {
    fn default() -> Self {
        BinningSpec::Quantile { bins: 4 }
    }
}

impl BinningSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BinningSpec::FixedWidth { width } if !(width.is_finite() && width > 0.0) => Err(Error::InvalidInput(
                format!("fixed_width binning needs width > 0, got {width}"),
            )),
            BinningSpec::Quantile { bins: 0 } => {
                Err(Error::InvalidInput("quantile binning needs at least one bin".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    pub role: ColumnRole,
    /// Entity type of the values in this column. Defaults to the column name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ValueKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binning: Option<BinningSpec>,
}

impl ColumnSpec {
    pub fn entity_type(&self) -> &str {
        self.entity.as_deref().unwrap_or(&self.name)
    }

    pub fn value_kind(&self) -> ValueKind {
        match (self.kind, self.role) {
            (Some(kind), _) => kind,
            (None, ColumnRole::Feedback) => ValueKind::Numeric,
            (None, _) if self.binning.is_some() => ValueKind::Numeric,
            (None, _) => ValueKind::Categorical,
        }
    }

    /// Binning applied to this column, if it is a numeric feature.
    /// Numeric features without an explicit spec get the default quartiles.
    pub fn effective_binning(&self) -> Option<BinningSpec> {
        (self.role == ColumnRole::Feature && self.value_kind() == ValueKind::Numeric)
            .then(|| self.binning.unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub name: String,
    pub file: PathBuf,
    pub columns: Vec<ColumnSpec>,
    /// Single-byte field delimiter; `,` unless stated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<char>,
}

impl TableSpec {
    pub fn column(&self, name: &str) -> Option<(usize, &ColumnSpec)> {
        self.columns.iter().enumerate().find(|(_, c)| c.name == name)
    }

    pub fn feedback_column(&self) -> Option<(usize, &ColumnSpec)> {
        self.columns
            .iter()
            .enumerate()
            .find(|(_, c)| c.role == ColumnRole::Feedback)
    }

    pub fn delimiter_byte(&self) -> u8 {
        self.delimiter.map(|c| c as u8).unwrap_or(b',')
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationshipSpec {
    pub name: String,
    /// Table whose rows instantiate this relationship.
    pub table: String,
    pub source_entity: String,
    pub target_entity: String,
    /// Explicit columns, needed when a table holds two columns of the same entity type.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_column: Option<String>,
    /// Columns whose values become the edge label instead of the table's feedback column.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub feature_labels: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub predicted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    tables: Vec<TableSpec>,
    relationships: Vec<RelationshipSpec>,
    #[serde(default)]
    predicted: Option<String>,
}

/// Column indices a relationship reads from its table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelationshipColumns {
    pub table: usize,
    pub source: usize,
    pub target: usize,
}

/// A validated schema. Construct via [`load_schema`] or [`DatasetSchema::from_json`].
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSchema {
    pub tables: Vec<TableSpec>,
    pub relationships: Vec<RelationshipSpec>,
    predicted: usize,
    resolved: Vec<RelationshipColumns>,
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<DatasetSchema> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read schema {}: {e}", path.display())))?;
    DatasetSchema::from_json(&text)
}

impl DatasetSchema {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawSchema = serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "schema".into(),
            message: e.to_string(),
        })?;
        Self::validate(raw)
    }

    pub fn to_json(&self) -> String {
        let raw = RawSchema {
            tables: self.tables.clone(),
            relationships: self
                .relationships
                .iter()
                .map(|r| RelationshipSpec {
                    predicted: false,
                    ..r.clone()
                })
                .collect(),
            predicted: Some(self.predicted().name.clone()),
        };
        serde_json::to_string_pretty(&raw).expect("schema serializes")
    }

    fn validate(raw: RawSchema) -> Result<Self> {
        let RawSchema {
            tables,
            relationships,
            predicted,
        } = raw;

        if relationships.is_empty() {
            return Err(Error::Schema("at least one relationship is required".into()));
        }
        if relationships.len() > MAX_RELATIONSHIPS {
            return Err(Error::Schema(format!(
                "{} relationships exceed the supported maximum of {MAX_RELATIONSHIPS}",
                relationships.len()
            )));
        }

        let mut table_names = HashSet::new();
        // entity type -> (kind, binning) as first declared
        let mut entities: BTreeMap<&str, (ValueKind, Option<BinningSpec>, &str)> = BTreeMap::new();
        for table in &tables {
            check_identifier("table", &table.name)?;
            if !table_names.insert(table.name.as_str()) {
                return Err(Error::Schema(format!("duplicate table name `{}`", table.name)));
            }
            if let Some(d) = table.delimiter {
                if !d.is_ascii() {
                    return Err(Error::Schema(format!(
                        "table `{}`: delimiter must be a single ASCII character",
                        table.name
                    )));
                }
            }
            let mut column_names = HashSet::new();
            let mut feedback = 0;
            for col in &table.columns {
                if !column_names.insert(col.name.as_str()) {
                    return Err(Error::Schema(format!(
                        "table `{}`: duplicate column `{}`",
                        table.name, col.name
                    )));
                }
                if let Some(b) = &col.binning {
                    b.validate()
                        .map_err(|e| Error::Schema(format!("table `{}` column `{}`: {e}", table.name, col.name)))?;
                }
                match col.role {
                    ColumnRole::Feedback => {
                        feedback += 1;
                        if col.value_kind() != ValueKind::Numeric {
                            return Err(Error::Schema(format!(
                                "table `{}`: feedback column `{}` must be numeric",
                                table.name, col.name
                            )));
                        }
                    }
                    ColumnRole::SourceId | ColumnRole::TargetId => {
                        if col.value_kind() != ValueKind::Categorical || col.binning.is_some() {
                            return Err(Error::Schema(format!(
                                "table `{}`: identifier column `{}` must be categorical",
                                table.name, col.name
                            )));
                        }
                    }
                    ColumnRole::Feature => {}
                }
                if col.role.is_entity() {
                    let et = col.entity_type();
                    check_identifier("entity type", et)?;
                    let decl = (col.value_kind(), col.effective_binning(), table.name.as_str());
                    match entities.get(et) {
                        Some(prev) if (prev.0, prev.1) != (decl.0, decl.1) => {
                            return Err(Error::Schema(format!(
                                "entity type `{et}` is declared differently in tables `{}` and `{}`",
                                prev.2, table.name
                            )));
                        }
                        Some(_) => {}
                        None => {
                            entities.insert(et, decl);
                        }
                    }
                }
            }
            if feedback > 1 {
                return Err(Error::Schema(format!(
                    "table `{}` has {feedback} feedback columns, at most one allowed",
                    table.name
                )));
            }
        }

        let mut rel_names = HashSet::new();
        let mut resolved = Vec::with_capacity(relationships.len());
        for rel in &relationships {
            check_identifier("relationship", &rel.name)?;
            if rel.name == "BL" {
                return Err(Error::Schema("`BL` is reserved for the baseline scheme name".into()));
            }
            if !rel_names.insert(rel.name.as_str()) {
                return Err(Error::Schema(format!("duplicate relationship name `{}`", rel.name)));
            }
            let (ti, table) = tables
                .iter()
                .enumerate()
                .find(|(_, t)| t.name == rel.table)
                .ok_or_else(|| {
                    Error::Schema(format!(
                        "relationship `{}` references unknown table `{}`",
                        rel.name, rel.table
                    ))
                })?;
            let source = resolve_column(rel, table, &rel.source_entity, rel.source_column.as_deref(), None)?;
            let target = resolve_column(
                rel,
                table,
                &rel.target_entity,
                rel.target_column.as_deref(),
                Some(source),
            )?;
            if source == target {
                return Err(Error::Schema(format!(
                    "relationship `{}` uses column `{}` for both endpoints",
                    rel.name, table.columns[source].name
                )));
            }
            for label in &rel.feature_labels {
                if table.column(label).is_none() {
                    return Err(Error::Schema(format!(
                        "relationship `{}`: label column `{label}` not in table `{}`",
                        rel.name, table.name
                    )));
                }
            }
            resolved.push(RelationshipColumns {
                table: ti,
                source,
                target,
            });
        }

        let mut predicted_set = BTreeSet::new();
        if let Some(name) = &predicted {
            let idx = relationships
                .iter()
                .position(|r| &r.name == name)
                .ok_or_else(|| Error::Schema(format!("predicted relationship `{name}` is not declared")))?;
            predicted_set.insert(idx);
        }
        predicted_set.extend(
            relationships
                .iter()
                .enumerate()
                .filter(|(_, r)| r.predicted)
                .map(|(i, _)| i),
        );
        let predicted = match predicted_set.len() {
            1 => *predicted_set.iter().next().unwrap(),
            0 => return Err(Error::Schema("no relationship is marked as predicted".into())),
            n => {
                let names: Vec<_> = predicted_set.iter().map(|&i| relationships[i].name.as_str()).collect();
                return Err(Error::Schema(format!(
                    "exactly one predicted relationship allowed, found {n}: {}",
                    names.join(", ")
                )));
            }
        };

        let cols = resolved[predicted];
        let table = &tables[cols.table];
        if table.columns[cols.source].role != ColumnRole::SourceId
            || table.columns[cols.target].role != ColumnRole::TargetId
        {
            return Err(Error::Schema(format!(
                "predicted relationship `{}` must connect a source_id column to a target_id column",
                relationships[predicted].name
            )));
        }

        Ok(DatasetSchema {
            tables,
            relationships,
            predicted,
            resolved,
        })
    }

    pub fn predicted(&self) -> &RelationshipSpec {
        &self.relationships[self.predicted]
    }

    pub fn predicted_index(&self) -> usize {
        self.predicted
    }

    /// Number of non-predicted relationships.
    pub fn non_predicted_count(&self) -> usize {
        self.relationships.len() - 1
    }

    pub fn relationship_columns(&self, rel: usize) -> RelationshipColumns {
        self.resolved[rel]
    }

    pub fn relationship_index(&self, name: &str) -> Option<usize> {
        self.relationships.iter().position(|r| r.name == name)
    }

    pub fn table_index(&self, name: &str) -> Option<usize> {
        self.tables.iter().position(|t| t.name == name)
    }

    pub fn relationship_names(&self) -> Vec<&str> {
        self.relationships.iter().map(|r| r.name.as_str()).collect()
    }

    pub fn source_entity(&self) -> &str {
        &self.predicted().source_entity
    }

    pub fn target_entity(&self) -> &str {
        &self.predicted().target_entity
    }

    /// Every entity type declared by some column, sorted.
    pub fn entity_types(&self) -> BTreeSet<&str> {
        self.tables
            .iter()
            .flat_map(|t| t.columns.iter())
            .filter(|c| c.role.is_entity())
            .map(|c| c.entity_type())
            .collect()
    }
}

fn resolve_column(
    rel: &RelationshipSpec,
    table: &TableSpec,
    entity: &str,
    explicit: Option<&str>,
    exclude: Option<usize>,
) -> Result<usize> {
    if let Some(name) = explicit {
        let (i, col) = table.column(name).ok_or_else(|| {
            Error::Schema(format!(
                "relationship `{}`: column `{name}` not in table `{}`",
                rel.name, table.name
            ))
        })?;
        if !col.role.is_entity() || col.entity_type() != entity {
            return Err(Error::Schema(format!(
                "relationship `{}`: column `{name}` is not an entity column of type `{entity}`",
                rel.name
            )));
        }
        return Ok(i);
    }
    let candidates: Vec<usize> = table
        .columns
        .iter()
        .enumerate()
        .filter(|(i, c)| c.role.is_entity() && c.entity_type() == entity && Some(*i) != exclude)
        .map(|(i, _)| i)
        .collect();
    // a same-type relationship over exactly two columns takes them in declaration order
    let same_type = rel.source_entity == rel.target_entity;
    match candidates.as_slice() {
        [i] => Ok(*i),
        [a, _] if same_type && exclude.is_none() => Ok(*a),
        [] => Err(Error::Schema(format!(
            "relationship `{}`: table `{}` has no column of entity type `{entity}`",
            rel.name, table.name
        ))),
        _ => Err(Error::Schema(format!(
            "relationship `{}`: table `{}` has several columns of entity type `{entity}`; \
             set source_column/target_column",
            rel.name, table.name
        ))),
    }
}

fn check_identifier(what: &str, name: &str) -> Result<()> {
    let valid = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
        && !name.contains("__")
        && name.chars().next().is_some_and(|c| c.is_ascii_alphanumeric());
    if valid {
        Ok(())
    } else {
        Err(Error::Schema(format!(
            "{what} name `{name}` must be alphanumeric (with `_`, `-`, `.`) and must not contain `__`"
        )))
    }
}

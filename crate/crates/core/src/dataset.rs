//! In-memory tabular dataset loaded from CSV files described by a [`DatasetSchema`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::binning::discretize_column;
use crate::error::{Error, Result};
use crate::schema::{ColumnRole, DatasetSchema, TableSpec, ValueKind};

/// Fraction of distinct values over rows above which an unbinned feature column is dropped.
pub const DEFAULT_SPARSE_FEATURE_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Missing,
    Text(String),
    Number(f64),
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            _ => None,
        }
    }

    /// Canonical string used for vertex values; `None` for missing cells.
    pub fn canonical(&self) -> Option<String> {
        match self {
            Cell::Missing => None,
            Cell::Text(s) => Some(s.clone()),
            Cell::Number(v) => Some(format_number(*v)),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Missing => Ok(()),
            Cell::Text(s) => f.write_str(s),
            Cell::Number(v) => f.write_str(&format_number(*v)),
        }
    }
}

/// Shortest round-trip representation; `-0` is printed as `0`.
pub fn format_number(v: f64) -> String {
    format!("{}", v + 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    /// Current kind per column; numeric features become categorical after discretization.
    pub kinds: Vec<ValueKind>,
    pub rows: Vec<Vec<Cell>>,
    /// Sorted distinct canonical values per entity column, `None` for feedback columns.
    pub unique: Vec<Option<BTreeSet<String>>>,
}

impl Table {
    fn rebuild_index(&mut self, spec: &TableSpec) {
        self.unique = spec
            .columns
            .iter()
            .enumerate()
            .map(|(ci, col)| {
                col.role
                    .is_entity()
                    .then(|| self.rows.iter().filter_map(|row| row[ci].canonical()).collect())
            })
            .collect();
    }

    /// Writes the table back out as CSV with a header row.
    pub fn write_csv<W: Write>(&self, writer: W, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
        let to_err = |e: csv::Error| Error::data(&self.name, e.to_string());
        w.write_record(&self.columns).map_err(to_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::data(&self.name, e.to_string()))
    }
}

/// Rows of every schema table, in schema order. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub tables: Vec<Table>,
    /// Feature columns removed by [`TabularDataset::drop_sparse_features`], as `table.column`.
    pub dropped_features: Vec<String>,
}

/// Loads every table of `schema` from `data_dir`. Tables are read in parallel.
pub fn ingest_tables(schema: &DatasetSchema, data_dir: impl AsRef<Path>) -> Result<TabularDataset> {
    let data_dir = data_dir.as_ref();
    let tables = schema
        .tables
        .par_iter()
        .map(|spec| {
            let path = data_dir.join(&spec.file);
            let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
            read_table(spec, file)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TabularDataset {
        tables,
        dropped_features: Vec::new(),
    })
}

/// Parses one table from CSV. Header columns not named in the spec are ignored.
pub fn read_table<R: std::io::Read>(spec: &TableSpec, reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(spec.delimiter_byte())
        .from_reader(reader);
    let csv_err = |e: csv::Error| Error::data(&spec.name, e.to_string());
    let header = rdr.headers().map_err(csv_err)?.clone();
    let positions = spec
        .columns
        .iter()
        .map(|col| {
            header
                .iter()
                .position(|h| h.trim() == col.name)
                .ok_or_else(|| Error::data(&spec.name, format!("header lacks column `{}`", col.name)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row_no = line + 2;
        let row = spec
            .columns
            .iter()
            .zip(&positions)
            .map(|(col, &pos)| {
                let raw = record.get(pos).unwrap_or("").trim();
                if raw.is_empty() {
                    return match col.role {
                        ColumnRole::SourceId | ColumnRole::TargetId => Err(Error::data(
                            &spec.name,
                            format!("row {row_no}: identifier column `{}` is empty", col.name),
                        )),
                        _ => Ok(Cell::Missing),
                    };
                }
                match col.value_kind() {
                    ValueKind::Categorical => Ok(Cell::Text(raw.to_string())),
                    ValueKind::Numeric => match raw.parse::<f64>() {
                        Ok(v) if v.is_finite() => Ok(Cell::Number(v)),
                        _ => Err(Error::data(
                            &spec.name,
                            format!(
                                "row {row_no}: column `{}` value `{raw}` is not a finite number",
                                col.name
                            ),
                        )),
                    },
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }

    let mut table = Table {
        name: spec.name.clone(),
        columns: spec.columns.iter().map(|c| c.name.clone()).collect(),
        kinds: spec.columns.iter().map(|c| c.value_kind()).collect(),
        rows,
        unique: Vec::new(),
    };
    table.rebuild_index(spec);
    Ok(table)
}

impl TabularDataset {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn row_count(&self) -> usize {
        self.tables.iter().map(|t| t.rows.len()).sum()
    }

    /// Replaces numeric feature values by bin labels.
    ///
    /// Values of one entity type are pooled across all tables before binning so a value
    /// maps to the same label everywhere. Columns that are already categorical are left
    /// untouched, which makes the operation idempotent.
    pub fn discretize(&self, schema: &DatasetSchema) -> Result<TabularDataset> {
        let mut out = self.clone();
        // entity type -> [(table, column)]
        let mut groups: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
        for (ti, spec) in schema.tables.iter().enumerate() {
            for (ci, col) in spec.columns.iter().enumerate() {
                if col.effective_binning().is_some() && self.tables[ti].kinds[ci] == ValueKind::Numeric {
                    groups.entry(col.entity_type()).or_default().push((ti, ci));
                }
            }
        }
        for (entity, members) in groups {
            let (t0, c0) = members[0];
            let spec = schema.tables[t0].columns[c0]
                .effective_binning()
                .expect("grouped columns are binned");
            let values: Vec<f64> = members
                .iter()
                .flat_map(|&(ti, ci)| self.tables[ti].rows.iter().filter_map(move |r| r[ci].as_number()))
                .collect();
            if !values.is_empty() {
                let labels = discretize_column(&values, spec)
                    .map_err(|e| e.context(format!("binning entity type `{entity}`")))?;
                let mut labels = labels.into_iter();
                for &(ti, ci) in &members {
                    for row in &mut out.tables[ti].rows {
                        if !row[ci].is_missing() {
                            row[ci] = Cell::Text(labels.next().expect("one label per value"));
                        }
                    }
                }
            }
            for &(ti, ci) in &members {
                out.tables[ti].kinds[ci] = ValueKind::Categorical;
            }
        }
        for (table, spec) in out.tables.iter_mut().zip(&schema.tables) {
            table.rebuild_index(spec);
        }
        Ok(out)
    }

    /// Blanks out categorical feature columns that are too sparse to form useful vertices:
    /// those whose distinct-value count exceeds `fraction` of the table's row count.
    /// Columns with a binning spec are never dropped.
    pub fn drop_sparse_features(&self, schema: &DatasetSchema, fraction: f64) -> TabularDataset {
        let mut out = self.clone();
        for (ti, spec) in schema.tables.iter().enumerate() {
            let table = &mut out.tables[ti];
            let rows = table.rows.len();
            for (ci, col) in spec.columns.iter().enumerate() {
                if col.role != ColumnRole::Feature || col.binning.is_some() {
                    continue;
                }
                if col.value_kind() == ValueKind::Numeric {
                    continue;
                }
                let distinct = table.unique[ci].as_ref().map_or(0, |u| u.len());
                if rows > 0 && distinct as f64 > fraction * rows as f64 {
                    log::warn!(
                        "dropping sparse feature column {}.{} ({distinct} distinct values over {rows} rows)",
                        spec.name,
                        col.name
                    );
                    for row in &mut table.rows {
                        row[ci] = Cell::Missing;
                    }
                    table.unique[ci] = Some(BTreeSet::new());
                    out.dropped_features.push(format!("{}.{}", spec.name, col.name));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{BinningSpec, ColumnSpec};
    use proptest::prelude::*;

    fn spec() -> TableSpec {
        TableSpec {
            name: "ratings".into(),
            file: "ratings.csv".into(),
            delimiter: None,
            columns: vec![
                ColumnSpec {
                    name: "user".into(),
                    role: ColumnRole::SourceId,
                    entity: None,
                    kind: None,
                    binning: None,
                },
                ColumnSpec {
                    name: "item".into(),
                    role: ColumnRole::TargetId,
                    entity: None,
                    kind: None,
                    binning: None,
                },
                ColumnSpec {
                    name: "rating".into(),
                    role: ColumnRole::Feedback,
                    entity: None,
                    kind: None,
                    binning: None,
                },
            ],
        }
    }

    #[test]
    fn header_only_is_empty_table() {
        let t = read_table(&spec(), "user,item,rating\n".as_bytes()).unwrap();
        assert!(t.rows.is_empty());
        assert_eq!(t.unique[0], Some(BTreeSet::new()));
        assert_eq!(t.unique[2], None);
    }

    #[test]
    fn parses_rows_and_builds_index() {
        let t = read_table(
            &spec(),
            "item,user,rating,extra\ni1, u1 ,4,x\ni2,u1,,y\ni1,u2,3.5,z\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(
            t.rows[0],
            vec![Cell::Text("u1".into()), Cell::Text("i1".into()), Cell::Number(4.0)]
        );
        assert_eq!(t.rows[1][2], Cell::Missing);
        assert_eq!(t.unique[0].as_ref().unwrap().len(), 2);
        assert_eq!(t.unique[1].as_ref().unwrap().len(), 2);
    }

    #[test]
    fn rejects_bad_rows() {
        let arity = read_table(&spec(), "user,item,rating\nu1,i1\n".as_bytes()).unwrap_err();
        assert_eq!(arity.exit_code(), 3);
        let numeric = read_table(&spec(), "user,item,rating\nu1,i1,five\n".as_bytes()).unwrap_err();
        assert!(numeric.to_string().contains("not a finite number"));
        let empty_id = read_table(&spec(), "user,item,rating\n,i1,5\n".as_bytes()).unwrap_err();
        assert!(empty_id.to_string().contains("identifier"));
        let header = read_table(&spec(), "user,rating\nu1,5\n".as_bytes()).unwrap_err();
        assert!(header.to_string().contains("header lacks"));
    }

    #[test]
    fn ingest_reports_missing_file() {
        let schema = DatasetSchema::from_json(
            r#"{"tables": [{"name": "r", "file": "nope.csv", "columns": [
                  {"name": "u", "role": "source_id"}, {"name": "i", "role": "target_id"}]}],
                "relationships": [{"name": "rates", "table": "r", "source_entity": "u", "target_entity": "i"}],
                "predicted": "rates"}"#,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let err = ingest_tables(&schema, dir.path()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    fn movie_schema() -> DatasetSchema {
        DatasetSchema::from_json(
            r#"{"tables": [
                 {"name": "ratings", "file": "r.csv", "columns": [
                    {"name": "user", "role": "source_id"}, {"name": "movie", "role": "target_id"},
                    {"name": "rating", "role": "feedback"}]},
                 {"name": "movies", "file": "m.csv", "columns": [
                    {"name": "movie", "role": "target_id"},
                    {"name": "budget", "role": "feature", "kind": "numeric",
                     "binning": {"strategy": "quantile", "bins": 2}},
                    {"name": "title", "role": "feature"}]}],
               "relationships": [
                 {"name": "rates", "table": "ratings", "source_entity": "user", "target_entity": "movie"},
                 {"name": "costs", "table": "movies", "source_entity": "movie", "target_entity": "budget"},
                 {"name": "titled", "table": "movies", "source_entity": "movie", "target_entity": "title"}],
               "predicted": "rates"}"#,
        )
        .unwrap()
    }

    #[test]
    fn discretize_is_idempotent() {
        let schema = movie_schema();
        let movies = read_table(
            &schema.tables[1],
            "movie,budget,title\nm1,1,a\nm2,2,b\nm3,3,c\nm4,,d\n".as_bytes(),
        )
        .unwrap();
        let ratings = read_table(&schema.tables[0], "user,movie,rating\n".as_bytes()).unwrap();
        let ds = TabularDataset {
            tables: vec![ratings, movies],
            dropped_features: vec![],
        };
        let once = ds.discretize(&schema).unwrap();
        let budgets: Vec<_> = once.tables[1].rows.iter().map(|r| r[1].clone()).collect();
        assert_eq!(
            budgets,
            vec![
                Cell::Text("[1,2]".into()),
                Cell::Text("[1,2]".into()),
                Cell::Text("[3,3]".into()),
                Cell::Missing
            ]
        );
        assert_eq!(once.discretize(&schema).unwrap(), once);
        let _ = BinningSpec::default();
    }

    #[test]
    fn sparse_features_dropped() {
        let schema = movie_schema();
        let movies = read_table(
            &schema.tables[1],
            "movie,budget,title\nm1,1,a\nm2,2,b\nm3,3,c\nm4,4,d\n".as_bytes(),
        )
        .unwrap();
        let ratings = read_table(&schema.tables[0], "user,movie,rating\n".as_bytes()).unwrap();
        let ds = TabularDataset {
            tables: vec![ratings, movies],
            dropped_features: vec![],
        };
        let filtered = ds.drop_sparse_features(&schema, DEFAULT_SPARSE_FEATURE_FRACTION);
        assert_eq!(filtered.dropped_features, vec!["movies.title".to_string()]);
        assert!(filtered.tables[1].rows.iter().all(|r| r[2].is_missing()));
        // budget carries a binning spec and is kept
        assert!(filtered.tables[1].rows.iter().all(|r| !r[1].is_missing()));
    }

    proptest! {
        #[test]
        fn write_then_read_round_trips(
            rows in prop::collection::vec(("[a-z]{1,4}", "[a-z ,\"]{1,6}", prop::option::of(-1000i32..1000)), 0..30)
        ) {
            let text = {
                let mut w = csv::Writer::from_writer(vec![]);
                w.write_record(["user", "item", "rating"]).unwrap();
                for (u, i, r) in &rows {
                    let r = r.map(|v| v.to_string()).unwrap_or_default();
                    w.write_record([u.as_str(), i.as_str(), r.as_str()]).unwrap();
                }
                w.into_inner().unwrap()
            };
            prop_assume!(rows.iter().all(|(_, i, _)| !i.trim().is_empty()));
            let table = read_table(&spec(), text.as_slice()).unwrap();
            let mut out = vec![];
            table.write_csv(&mut out, b',').unwrap();
            let again = read_table(&spec(), out.as_slice()).unwrap();
            let key = |t: &Table| {
                let mut v: Vec<String> = t.rows.iter().map(|r| format!("{:?}", r)).collect();
                v.sort();
                v
            };
            prop_assert_eq!(key(&table), key(&again));
        }
    }
}

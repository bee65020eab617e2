//! Mixed-type tabular data: schemas, tables, and CSV ingestion.
//!
//! A table holds numeric cells as finite `f64` and categorical cells as an
//! index into the column vocabulary. Vocabularies are ordered by first
//! appearance in the file, so encoded column order is deterministic.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical { vocabulary: Vec<String> },
}

impl ColumnKind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, ColumnKind::Numeric)
    }

    pub fn vocabulary(&self) -> Option<&[String]> {
        match self {
            ColumnKind::Numeric => None,
            ColumnKind::Categorical { vocabulary } => Some(vocabulary),
        }
    }

    fn same_kind(&self, other: &ColumnKind) -> bool {
        self.is_numeric() == other.is_numeric()
    }

    fn label(&self) -> &'static str {
        if self.is_numeric() {
            "numeric"
        } else {
            "categorical"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Numeric,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        vocabulary: impl IntoIterator<Item = S>,
    ) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Categorical {
                vocabulary: vocabulary.into_iter().map(Into::into).collect(),
            },
        }
    }
}

/// Ordered column list shared by every table compared under it.
///
/// A schema used as a load hint may carry empty vocabularies; they are
/// filled from the data. Schemas attached to a [`DataTable`] always have
/// non-empty vocabularies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSchema {
    columns: Vec<Column>,
}

impl TableSchema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Schema("no columns".into()));
        }
        let mut seen = HashSet::new();
        for col in &columns {
            if col.name.is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if !seen.insert(col.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", col.name)));
            }
            if let Some(vocab) = col.kind.vocabulary() {
                let mut uniq = HashSet::new();
                if let Some(dup) = vocab.iter().find(|v| !uniq.insert(v.as_str())) {
                    return Err(Error::Schema(format!(
                        "column `{}` repeats category `{dup}`",
                        col.name
                    )));
                }
            }
        }
        Ok(TableSchema { columns })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn numeric_count(&self) -> usize {
        self.columns.iter().filter(|c| c.kind.is_numeric()).count()
    }

    fn check_complete(&self) -> Result<()> {
        for col in &self.columns {
            if let Some(v) = col.kind.vocabulary() {
                if v.is_empty() {
                    return Err(Error::Schema(format!(
                        "column `{}` has an empty vocabulary",
                        col.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks that `other` has the same column names and kinds, in order.
    /// Vocabularies are not compared.
    pub fn check_compatible(&self, other: &TableSchema) -> Result<()> {
        if self.names() != other.names() {
            return Err(Error::SchemaMismatch(format!(
                "columns {:?} vs {:?}",
                self.names(),
                other.names()
            )));
        }
        for (a, b) in self.columns.iter().zip(&other.columns) {
            if !a.kind.same_kind(&b.kind) {
                return Err(Error::SchemaMismatch(format!(
                    "column `{}` is {} vs {}",
                    a.name,
                    a.kind.label(),
                    b.kind.label()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Num(f64),
    /// Index into the column vocabulary.
    Cat(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Real,
    Synthetic,
    Harness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    schema: TableSchema,
    rows: Vec<Vec<Cell>>,
    origin: Origin,
    row_ids: Vec<usize>,
}

impl DataTable {
    pub fn new(schema: TableSchema, rows: Vec<Vec<Cell>>, origin: Origin) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyTable);
        }
        schema.check_complete()?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::Cell {
                    row: r + 1,
                    column: String::new(),
                    message: format!("expected {} cells, found {}", schema.len(), row.len()),
                });
            }
            for (cell, col) in row.iter().zip(schema.columns()) {
                let ok = match (cell, &col.kind) {
                    (Cell::Num(x), ColumnKind::Numeric) => x.is_finite(),
                    (Cell::Cat(i), ColumnKind::Categorical { vocabulary }) => {
                        (*i as usize) < vocabulary.len()
                    }
                    _ => false,
                };
                if !ok {
                    return Err(Error::Cell {
                        row: r + 1,
                        column: col.name.clone(),
                        message: format!("invalid cell {cell:?}"),
                    });
                }
            }
        }
        let row_ids = (0..rows.len()).collect();
        Ok(DataTable {
            schema,
            rows,
            origin,
            row_ids,
        })
    }

    pub fn schema(&self) -> &TableSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Cell] {
        &self.rows[i]
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Category string for a categorical cell, formatted number otherwise.
    pub fn cell_text(&self, row: usize, col: usize) -> String {
        cell_text(&self.schema.columns()[col], self.rows[row][col])
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.columns().iter().map(|c| c.name.as_str()))?;
        for row in &self.rows {
            w.write_record(
                row.iter()
                    .zip(self.schema.columns())
                    .map(|(cell, col)| cell_text(col, *cell)),
            )?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

pub(crate) fn cell_text(col: &Column, cell: Cell) -> String {
    match (cell, &col.kind) {
        (Cell::Num(x), _) => format!("{x}"),
        (Cell::Cat(i), ColumnKind::Categorical { vocabulary }) => vocabulary[i as usize].clone(),
        (Cell::Cat(i), ColumnKind::Numeric) => i.to_string(),
    }
}

/// Parses a numeric cell. Only finite values count as numeric.
fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Levels in order of first appearance, and their ids.
type Vocab = (Vec<String>, HashMap<String, u32>);

/// Loads a CSV file with a mandatory header row.
///
/// With a hint, the header must match the hint's column names and the hint's
/// kinds are used; hinted vocabularies seed the category order and are
/// extended with unseen values. Without a hint, a column is numeric iff every
/// non-empty cell parses as a finite number.
pub fn load_csv(
    path: impl AsRef<Path>,
    hint: Option<&TableSchema>,
    origin: Origin,
) -> Result<DataTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), hint, origin)
}

pub fn read_csv<R: Read>(
    reader: R,
    hint: Option<&TableSchema>,
    origin: Origin,
) -> Result<DataTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut raw: Vec<csv::StringRecord> = Vec::new();
    for rec in rdr.records() {
        raw.push(rec?);
    }
    if raw.is_empty() {
        return Err(Error::EmptyTable);
    }

    let kinds: Vec<ColumnKind> = match hint {
        Some(h) => {
            if h.names() != header {
                return Err(Error::HeaderMismatch {
                    expected: h.names(),
                    found: header,
                });
            }
            h.columns().iter().map(|c| c.kind.clone()).collect()
        }
        None => (0..header.len())
            .map(|j| {
                let mut any = false;
                let numeric = raw.iter().all(|rec| {
                    let s = &rec[j];
                    if s.is_empty() {
                        return true;
                    }
                    any = true;
                    parse_finite(s).is_some()
                });
                if numeric && any {
                    ColumnKind::Numeric
                } else {
                    ColumnKind::Categorical {
                        vocabulary: Vec::new(),
                    }
                }
            })
            .collect(),
    };

    let mut vocabs: Vec<Option<Vocab>> = kinds
        .iter()
        .map(|k| {
            k.vocabulary().map(|v| {
                let index = v
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.clone(), i as u32))
                    .collect();
                (v.to_vec(), index)
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(raw.len());
    for (r, rec) in raw.iter().enumerate() {
        let mut row = Vec::with_capacity(header.len());
        for (j, s) in rec.iter().enumerate() {
            let cell = match &mut vocabs[j] {
                None => {
                    if s.is_empty() {
                        return Err(Error::Cell {
                            row: r + 1,
                            column: header[j].clone(),
                            message: "missing numeric value".into(),
                        });
                    }
                    match parse_finite(s) {
                        Some(x) => Cell::Num(x),
                        None => {
                            return Err(Error::Cell {
                                row: r + 1,
                                column: header[j].clone(),
                                message: format!("`{s}` is not a finite number"),
                            })
                        }
                    }
                }
                Some((vocab, index)) => {
                    let next = vocab.len() as u32;
                    let id = *index.entry(s.to_owned()).or_insert_with(|| {
                        vocab.push(s.to_owned());
                        next
                    });
                    Cell::Cat(id)
                }
            };
            row.push(cell);
        }
        rows.push(row);
    }

    let columns = header
        .into_iter()
        .zip(vocabs)
        .map(|(name, v)| Column {
            name,
            kind: match v {
                None => ColumnKind::Numeric,
                Some((vocabulary, _)) => ColumnKind::Categorical { vocabulary },
            },
        })
        .collect();
    DataTable::new(TableSchema::new(columns)?, rows, origin)
}

/// Shared column space for an audit.
///
/// Vocabularies come from the synthetic table alone; categories that only
/// appear in the real table are not added.
pub fn unify_schema(synthetic: &DataTable, real: Option<&DataTable>) -> Result<TableSchema> {
    if let Some(real) = real {
        synthetic.schema().check_compatible(real.schema())?;
    }
    Ok(synthetic.schema().clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, hint: Option<&TableSchema>) -> Result<DataTable> {
        read_csv(text.as_bytes(), hint, Origin::Real)
    }

    #[test]
    fn infers_numeric_and_categorical() {
        let t = load("age,job\n39,clerk\n50,nurse\n", None).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.schema().columns()[0].kind, ColumnKind::Numeric);
        assert_eq!(
            t.schema().columns()[1].kind.vocabulary().unwrap(),
            ["clerk", "nurse"]
        );
        assert_eq!(t.row(1), &[Cell::Num(50.0), Cell::Cat(1)]);
        assert_eq!(t.row_ids(), &[0, 1]);
    }

    #[test]
    fn hint_overrides_inference() {
        let hint = TableSchema::new(vec![
            Column::categorical("age", Vec::<String>::new()),
            Column::categorical("job", Vec::<String>::new()),
        ])
        .unwrap();
        let t = load("age,job\n39,clerk\n50,nurse\n", Some(&hint)).unwrap();
        assert_eq!(
            t.schema().columns()[0].kind.vocabulary().unwrap(),
            ["39", "50"]
        );
    }

    #[test]
    fn numeric_hint_parse_error_names_row_and_column() {
        let hint = TableSchema::new(vec![Column::numeric("age")]).unwrap();
        let err = load("age\nabc\n", Some(&hint)).unwrap_err();
        match err {
            Error::Cell { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "age");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(matches!(load("a,b\n", None), Err(Error::EmptyTable)));
        let hint = TableSchema::new(vec![Column::numeric("x")]).unwrap();
        assert!(matches!(
            load("y\n1\n", Some(&hint)),
            Err(Error::HeaderMismatch { .. })
        ));
        assert!(load("a,b\n1\n", None).is_err());
    }

    #[test]
    fn missing_numeric_rejected_but_empty_category_allowed() {
        let err = load("x,c\n1,a\n,b\n", None).unwrap_err();
        assert!(matches!(err, Error::Cell { row: 2, .. }));
        let t = load("x,c\n1,\n2,b\n", None).unwrap();
        assert_eq!(
            t.schema().columns()[1].kind.vocabulary().unwrap(),
            ["", "b"]
        );
    }

    #[test]
    fn non_finite_text_is_categorical() {
        let t = load("x\nnan\ninf\n", None).unwrap();
        assert!(!t.schema().columns()[0].kind.is_numeric());
    }

    #[test]
    fn hinted_vocabulary_is_extended() {
        let hint = TableSchema::new(vec![Column::categorical("c", ["b"])]).unwrap();
        let t = load("c\na\nb\n", Some(&hint)).unwrap();
        assert_eq!(
            t.schema().columns()[0].kind.vocabulary().unwrap(),
            ["b", "a"]
        );
        assert_eq!(t.row(0), &[Cell::Cat(1)]);
    }

    #[test]
    fn unify_uses_synthetic_vocab_only() {
        let s = load("x,c\n1,A\n2,B\n", None).unwrap();
        let r = load("x,c\n1,A\n2,C\n3,B\n", None).unwrap();
        let u = unify_schema(&s, Some(&r)).unwrap();
        assert_eq!(u.columns()[1].kind.vocabulary().unwrap(), ["A", "B"]);
        assert_eq!(unify_schema(&s, None).unwrap(), *s.schema());
    }

    #[test]
    fn unify_rejects_mismatch() {
        let s = load("job\nA\n", None).unwrap();
        let r = load("occupation\nA\n", None).unwrap();
        assert!(matches!(
            unify_schema(&s, Some(&r)),
            Err(Error::SchemaMismatch(_))
        ));
        let r = load("job\n3\n", None).unwrap();
        assert!(matches!(
            unify_schema(&s, Some(&r)),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn schema_rejects_duplicates() {
        assert!(TableSchema::new(vec![Column::numeric("a"), Column::numeric("a")]).is_err());
        assert!(TableSchema::new(vec![Column::numeric("")]).is_err());
        assert!(TableSchema::new(vec![Column::categorical("c", ["x", "x"])]).is_err());
    }

    #[test]
    fn quoted_fields() {
        let t = load("name,v\n\"a,b\",1\n\"say \"\"hi\"\"\",2\n", None).unwrap();
        assert_eq!(t.cell_text(0, 0), "a,b");
        assert_eq!(t.cell_text(1, 0), "say \"hi\"");
    }
}

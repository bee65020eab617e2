//! The shared representation: scaled numerics followed by one-hot blocks,
//! fitted on synthetic rows only, plus the distance measures used on it.

use std::collections::HashMap;
use std::fs::File;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{Cell, ColumnKind, DataTable, TableSchema};
use crate::error::{Error, Result};
use crate::pca::PcaModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    #[default]
    Minmax,
    Zscore,
}

impl std::str::FromStr for ScaleMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" => Ok(ScaleMode::Minmax),
            "zscore" => Ok(ScaleMode::Zscore),
            _ => Err(Error::Config(format!("unknown scale mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    Gower,
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "gower" => Ok(Metric::Gower),
            _ => Err(Error::Config(format!("unknown metric `{s}`"))),
        }
    }
}

/// Fitted statistics of one numeric column. Both the minmax and the zscore
/// parameters are kept; Gower uses lo/hi regardless of the scale mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericScaling {
    pub column: usize,
    pub lo: f64,
    pub hi: f64,
    pub mean: f64,
    /// Population standard deviation (divisor N).
    pub std: f64,
}

impl NumericScaling {
    fn fit(column: usize, values: &[f64]) -> Self {
        let n = values.len() as f64;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        NumericScaling {
            column,
            lo,
            hi,
            mean,
            std: var.sqrt(),
        }
    }

    pub fn scale(&self, mode: ScaleMode, x: f64) -> f64 {
        match mode {
            ScaleMode::Minmax => {
                let span = self.hi - self.lo;
                (x - self.lo) / if span > 0.0 { span } else { 1.0 }
            }
            ScaleMode::Zscore => (x - self.mean) / if self.std > 0.0 { self.std } else { 1.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingModel {
    schema: TableSchema,
    mode: ScaleMode,
    numeric: Vec<NumericScaling>,
    /// Encoded dimensionality before any PCA projection.
    raw_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pca: Option<PcaModel>,
}

/// Fits scaling parameters and vocabularies from the synthetic table alone.
pub fn fit_encoding(synthetic: &DataTable, mode: ScaleMode) -> Result<EncodingModel> {
    let schema = crate::dataset::unify_schema(synthetic, None)?;
    let mut numeric = Vec::new();
    let mut raw_dim = 0;
    for (j, col) in schema.columns().iter().enumerate() {
        match &col.kind {
            ColumnKind::Numeric => {
                let values: Vec<f64> = synthetic
                    .rows()
                    .iter()
                    .map(|r| match r[j] {
                        Cell::Num(x) => x,
                        Cell::Cat(_) => unreachable!("validated table"),
                    })
                    .collect();
                numeric.push(NumericScaling::fit(j, &values));
                raw_dim += 1;
            }
            ColumnKind::Categorical { vocabulary } => raw_dim += vocabulary.len(),
        }
    }
    if raw_dim == 0 {
        return Err(Error::Schema("encoded dimensionality is zero".into()));
    }
    Ok(EncodingModel {
        schema,
        mode,
        numeric,
        raw_dim,
        pca: None,
    })
}

impl EncodingModel {
    pub fn schema(&self) -> &TableSchema {
        &self.schema
    }

    pub fn mode(&self) -> ScaleMode {
        self.mode
    }

    pub fn numeric_scaling(&self) -> &[NumericScaling] {
        &self.numeric
    }

    pub fn pca(&self) -> Option<&PcaModel> {
        self.pca.as_ref()
    }

    /// Dimensionality of the one-hot/scaled encoding, before PCA.
    pub fn raw_dim(&self) -> usize {
        self.raw_dim
    }

    /// Dimensionality of vectors produced by [`encode`].
    pub fn dim(&self) -> usize {
        self.pca.as_ref().map_or(self.raw_dim, |p| p.target_dim())
    }

    /// Source column of every raw encoded dimension.
    pub fn dimension_sources(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.numeric.iter().map(|n| n.column).collect();
        for (j, col) in self.schema.columns().iter().enumerate() {
            if let Some(v) = col.kind.vocabulary() {
                out.extend(std::iter::repeat_n(j, v.len()));
            }
        }
        out
    }

    /// Column header for each dimension of [`encode`] output: the numeric
    /// name, `name=level` for one-hot slots, or `pc1..` after PCA.
    pub fn dimension_names(&self) -> Vec<String> {
        if let Some(p) = &self.pca {
            return (1..=p.target_dim()).map(|i| format!("pc{i}")).collect();
        }
        let cols = self.schema.columns();
        let mut out: Vec<String> = self
            .numeric
            .iter()
            .map(|n| cols[n.column].name.clone())
            .collect();
        for col in cols {
            if let Some(v) = col.kind.vocabulary() {
                out.extend(v.iter().map(|level| format!("{}={level}", col.name)));
            }
        }
        out
    }

    /// Observed (lo, hi) per column; categorical columns get (0, 0).
    pub fn numeric_ranges(&self) -> Vec<(f64, f64)> {
        let mut ranges = vec![(0.0, 0.0); self.schema.len()];
        for n in &self.numeric {
            ranges[n.column] = (n.lo, n.hi);
        }
        ranges
    }

    /// Attaches a PCA projection fitted on this model's raw encoding.
    pub fn with_pca(mut self, pca: PcaModel) -> Result<Self> {
        if pca.source_dim() != self.raw_dim {
            return Err(Error::DimensionMismatch {
                left: pca.source_dim(),
                right: self.raw_dim,
            });
        }
        self.pca = Some(pca);
        Ok(self)
    }

    pub fn without_pca(&self) -> EncodingModel {
        EncodingModel {
            pca: None,
            ..self.clone()
        }
    }

    /// Hex SHA-256 of the canonical JSON form; identifies lineage.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("model serializes");
        hex::encode(&Sha256::digest(&json)[..16])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    /// For each column, maps the table's category ids to model category ids.
    fn category_maps(&self, table: &DataTable) -> Result<Vec<Vec<Option<u32>>>> {
        self.schema.check_compatible(table.schema())?;
        Ok(self
            .schema
            .columns()
            .iter()
            .zip(table.schema().columns())
            .map(|(mine, theirs)| match (&mine.kind, &theirs.kind) {
                (
                    ColumnKind::Categorical { vocabulary: ours },
                    ColumnKind::Categorical { vocabulary: other },
                ) => {
                    let index: HashMap<&str, u32> = ours
                        .iter()
                        .enumerate()
                        .map(|(i, s)| (s.as_str(), i as u32))
                        .collect();
                    other
                        .iter()
                        .map(|s| index.get(s.as_str()).copied())
                        .collect()
                }
                _ => Vec::new(),
            })
            .collect())
    }

    fn encode_row_into(&self, row: &[Cell], maps: &[Vec<Option<u32>>], out: &mut [f64]) {
        out.fill(0.0);
        let mut k = 0;
        for n in &self.numeric {
            if let Cell::Num(x) = row[n.column] {
                out[k] = n.scale(self.mode, x);
            }
            k += 1;
        }
        for (j, col) in self.schema.columns().iter().enumerate() {
            if let Some(vocab) = col.kind.vocabulary() {
                if let Cell::Cat(c) = row[j] {
                    if let Some(m) = maps[j][c as usize] {
                        out[k + m as usize] = 1.0;
                    }
                }
                k += vocab.len();
            }
        }
    }
}

/// Distance space a matrix lives in.
#[derive(Debug, Clone, PartialEq)]
pub enum Space {
    /// Encoded vectors under L2.
    Euclidean,
    /// Raw-coded rows (numeric value or category id per column) under Gower.
    Gower(GowerSpace),
}

impl Space {
    #[inline]
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Space::Euclidean => euclidean(a, b),
            Space::Gower(g) => g.distance(a, b),
        }
    }

    pub fn metric(&self) -> Metric {
        match self {
            Space::Euclidean => Metric::Euclidean,
            Space::Gower(_) => Metric::Gower,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GowerSpace {
    categorical: Vec<bool>,
    spans: Vec<f64>,
}

impl GowerSpace {
    fn from_ranges(schema: &TableSchema, ranges: &[(f64, f64)]) -> Self {
        GowerSpace {
            categorical: schema
                .columns()
                .iter()
                .map(|c| !c.kind.is_numeric())
                .collect(),
            spans: ranges.iter().map(|(lo, hi)| hi - lo).collect(),
        }
    }

    /// Out-of-vocabulary categories are coded as NaN and never match.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut sum = 0.0;
        for j in 0..self.categorical.len() {
            sum += if self.categorical[j] {
                category_dissimilarity(a[j] == b[j])
            } else {
                numeric_dissimilarity(a[j], b[j], self.spans[j])
            };
        }
        sum / self.categorical.len() as f64
    }
}

#[inline]
fn numeric_dissimilarity(a: f64, b: f64, span: f64) -> f64 {
    if span > 0.0 {
        ((a - b).abs() / span).min(1.0)
    } else {
        0.0
    }
}

#[inline]
fn category_dissimilarity(equal: bool) -> f64 {
    if equal {
        0.0
    } else {
        1.0
    }
}

/// Row-major matrix of vectors in one distance space, tagged with the
/// fingerprint of the model that produced it.
#[derive(Debug, Clone)]
pub struct EncodedMatrix {
    data: Vec<f64>,
    dim: usize,
    row_ids: Vec<usize>,
    space: Arc<Space>,
    model_id: String,
}

impl EncodedMatrix {
    /// Builds a Euclidean matrix directly from vectors. Mostly for tests and
    /// benchmarks; the pipeline goes through [`encode`].
    pub fn from_rows(rows: &[Vec<f64>], model_id: impl Into<String>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(EncodedMatrix {
            data,
            dim,
            row_ids: (0..rows.len()).collect(),
            space: Arc::new(Space::Euclidean),
            model_id: model_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.row_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim.max(1)).take(self.len())
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.space.distance(self.row(i), self.row(j))
    }

    /// Multiplies every coordinate by `c`. Euclidean matrices only.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(matches!(*self.space, Space::Euclidean));
        EncodedMatrix {
            data: self.data.iter().map(|x| x * c).collect(),
            ..self.clone()
        }
    }

    pub(crate) fn with_parts(
        data: Vec<f64>,
        dim: usize,
        row_ids: Vec<usize>,
        space: Arc<Space>,
        model_id: String,
    ) -> Self {
        EncodedMatrix {
            data,
            dim,
            row_ids,
            space,
            model_id,
        }
    }

    pub(crate) fn space_arc(&self) -> Arc<Space> {
        Arc::clone(&self.space)
    }
}

/// Encodes a table into the model's Euclidean space, applying PCA when the
/// model carries one.
pub fn encode(model: &EncodingModel, table: &DataTable) -> Result<EncodedMatrix> {
    let raw = encode_unreduced(model, table)?;
    match &model.pca {
        None => Ok(raw),
        Some(pca) => Ok(pca.project(&raw)),
    }
}

/// Encodes without the PCA projection (one-hot blocks intact).
pub fn encode_unreduced(model: &EncodingModel, table: &DataTable) -> Result<EncodedMatrix> {
    let maps = model.category_maps(table)?;
    let dim = model.raw_dim;
    let mut data = vec![0.0; table.len() * dim];
    data.par_chunks_mut(dim)
        .zip(table.rows().par_iter())
        .for_each(|(out, row)| model.encode_row_into(row, &maps, out));
    Ok(EncodedMatrix {
        data,
        dim,
        row_ids: table.row_ids().to_vec(),
        space: Arc::new(Space::Euclidean),
        model_id: model.fingerprint(),
    })
}

/// Codes raw rows for Gower distance: numeric value, or the model category id
/// (NaN when out of vocabulary).
pub fn encode_gower(model: &EncodingModel, table: &DataTable) -> Result<EncodedMatrix> {
    let maps = model.category_maps(table)?;
    let dim = model.schema.len();
    let mut data = Vec::with_capacity(table.len() * dim);
    for row in table.rows() {
        for (j, cell) in row.iter().enumerate() {
            data.push(match *cell {
                Cell::Num(x) => x,
                Cell::Cat(c) => maps[j][c as usize].map_or(f64::NAN, f64::from),
            });
        }
    }
    let space = GowerSpace::from_ranges(&model.schema, &model.numeric_ranges());
    Ok(EncodedMatrix {
        data,
        dim,
        row_ids: table.row_ids().to_vec(),
        space: Arc::new(Space::Gower(space)),
        model_id: model.fingerprint(),
    })
}

/// Encodes under the requested metric.
pub fn encode_for(
    model: &EncodingModel,
    table: &DataTable,
    metric: Metric,
) -> Result<EncodedMatrix> {
    match metric {
        Metric::Euclidean => encode(model, table),
        Metric::Gower => encode_gower(model, table),
    }
}

/// Writes `matrix` as CSV with a leading `row_id` column.
pub fn write_encoded_csv<W: std::io::Write>(
    matrix: &EncodedMatrix,
    names: &[String],
    writer: W,
) -> Result<()> {
    if names.len() != matrix.dim() {
        return Err(Error::DimensionMismatch {
            left: names.len(),
            right: matrix.dim(),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(std::iter::once("row_id").chain(names.iter().map(String::as_str)))?;
    for (i, row) in matrix.rows().enumerate() {
        let mut rec = vec![matrix.row_ids()[i].to_string()];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<encoded>", e))?;
    Ok(())
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// L2 distance between two encoded vectors.
pub fn distance(a: &[f64], b: &[f64], metric: Metric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    match metric {
        Metric::Euclidean => Ok(euclidean(a, b)),
        Metric::Gower => Err(Error::Config(
            "gower distance is defined on raw rows, use gower_distance".into(),
        )),
    }
}

/// Gower dissimilarity between two raw rows of the same schema.
///
/// `ranges` holds the fitted (lo, hi) of every column; entries for
/// categorical columns are ignored.
pub fn gower_distance(
    a: &[Cell],
    b: &[Cell],
    schema: &TableSchema,
    ranges: &[(f64, f64)],
) -> Result<f64> {
    let n = schema.len();
    if a.len() != n || b.len() != n || ranges.len() != n {
        return Err(Error::SchemaMismatch(format!(
            "rows of {} and {} cells, {} ranges, schema of {n} columns",
            a.len(),
            b.len(),
            ranges.len()
        )));
    }
    let mut sum = 0.0;
    for j in 0..n {
        sum += match (a[j], b[j], schema.columns()[j].kind.is_numeric()) {
            (Cell::Num(x), Cell::Num(y), true) => {
                numeric_dissimilarity(x, y, ranges[j].1 - ranges[j].0)
            }
            (Cell::Cat(x), Cell::Cat(y), false) => category_dissimilarity(x == y),
            _ => {
                return Err(Error::SchemaMismatch(format!(
                    "column `{}` cell kind",
                    schema.columns()[j].name
                )))
            }
        };
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{read_csv, Column, Origin};
    use proptest::prelude::*;

    fn table(text: &str) -> DataTable {
        read_csv(text.as_bytes(), None, Origin::Synthetic).unwrap()
    }

    #[test]
    fn minmax_midpoint() {
        let t = table("age,job\n0,A\n10,B\n");
        let m = fit_encoding(&t, ScaleMode::Minmax).unwrap();
        let probe = read_csv(
            "age,job\n5,A\n5,C\n".as_bytes(),
            Some(t.schema()),
            Origin::Real,
        )
        .unwrap();
        let e = encode(&m, &probe).unwrap();
        assert_eq!(e.row(0), &[0.5, 1.0, 0.0]);
        assert_eq!(e.row(1), &[0.5, 0.0, 0.0]);
        assert_eq!(m.dim(), 3);
        assert_eq!(m.dimension_sources(), vec![0, 1, 1]);
    }

    #[test]
    fn constant_column_divisor_one() {
        let t = table("x\n7\n7\n7\n");
        let m = fit_encoding(&t, ScaleMode::Minmax).unwrap();
        let e = encode(&m, &t).unwrap();
        assert!(e.rows().all(|r| r == [0.0]));
        let m = fit_encoding(&t, ScaleMode::Zscore).unwrap();
        assert!(encode(&m, &t).unwrap().rows().all(|r| r == [0.0]));
    }

    #[test]
    fn zscore_population_std() {
        let t = table("x\n1\n3\n");
        let m = fit_encoding(&t, ScaleMode::Zscore).unwrap();
        let s = &m.numeric_scaling()[0];
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(encode(&m, &t).unwrap().row(1), &[1.0]);
    }

    #[test]
    fn categorical_only_difference_is_sqrt2() {
        let t = table("age,job\n5,A\n5,B\n");
        let m = fit_encoding(&t, ScaleMode::Minmax).unwrap();
        let e = encode(&m, &t).unwrap();
        assert_eq!(format!("{:.4}", e.distance(0, 1)), "1.4142");
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            distance(&[1.0, 2.0], &[1.0, 2.0], Metric::Euclidean).unwrap(),
            0.0
        );
        assert_eq!(
            distance(&[0.0, 0.0], &[1.0, 1.0], Metric::Euclidean).unwrap(),
            2f64.sqrt()
        );
        let d = distance(&[0.5, 1.0, 0.0], &[0.5, 0.0, 1.0], Metric::Euclidean).unwrap();
        assert_eq!(format!("{d:.4}"), "1.4142");
        assert!(matches!(
            distance(&[0.0], &[0.0, 1.0], Metric::Euclidean),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gower_examples() {
        let schema = TableSchema::new(vec![
            Column::numeric("a"),
            Column::categorical("b", ["x", "y"]),
            Column::categorical("c", ["x", "y"]),
            Column::categorical("d", ["x", "y"]),
        ])
        .unwrap();
        let ranges = [(0.0, 10.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)];
        let r1 = [Cell::Num(3.0), Cell::Cat(0), Cell::Cat(1), Cell::Cat(0)];
        let mut r2 = r1;
        assert_eq!(gower_distance(&r1, &r2, &schema, &ranges).unwrap(), 0.0);
        r2[2] = Cell::Cat(0);
        assert_eq!(gower_distance(&r1, &r2, &schema, &ranges).unwrap(), 0.25);

        let single = TableSchema::new(vec![Column::numeric("a")]).unwrap();
        let d = gower_distance(
            &[Cell::Num(2.0)],
            &[Cell::Num(7.0)],
            &single,
            &[(0.0, 10.0)],
        )
        .unwrap();
        assert_eq!(d, 0.5);
        let d = gower_distance(
            &[Cell::Num(-20.0)],
            &[Cell::Num(7.0)],
            &single,
            &[(0.0, 10.0)],
        )
        .unwrap();
        assert_eq!(d, 1.0);
        let d =
            gower_distance(&[Cell::Num(2.0)], &[Cell::Num(7.0)], &single, &[(4.0, 4.0)]).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn gower_space_matches_cell_form() {
        let t = table("a,b\n0,x\n10,y\n4,x\n");
        let m = fit_encoding(&t, ScaleMode::Minmax).unwrap();
        let g = encode_gower(&m, &t).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want =
                    gower_distance(t.row(i), t.row(j), t.schema(), &m.numeric_ranges()).unwrap();
                assert_eq!(g.distance(i, j), want);
            }
        }
    }

    #[test]
    fn model_json_round_trip() {
        let t = table("age,job\n0,A\n10,B\n3,A\n");
        let m = fit_encoding(&t, ScaleMode::Zscore).unwrap();
        let back = EncodingModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.fingerprint(), m.fingerprint());
    }

    #[test]
    fn schema_mismatch_on_encode() {
        let t = table("age,job\n0,A\n10,B\n");
        let m = fit_encoding(&t, ScaleMode::Minmax).unwrap();
        let other = table("age,role\n0,A\n");
        assert!(matches!(encode(&m, &other), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn extrapolates_outside_fit_range() {
        let t = table("x\n0\n10\n");
        let m = fit_encoding(&t, ScaleMode::Minmax).unwrap();
        let probe = table("x\n20\n");
        assert_eq!(encode(&m, &probe).unwrap().row(0), &[2.0]);
    }

    fn mixed_rows() -> impl Strategy<Value = Vec<(f64, u8, u8)>> {
        prop::collection::vec((-100.0f64..100.0, 0u8..3, 0u8..4), 3..12)
    }

    fn to_table(rows: &[(f64, u8, u8)]) -> DataTable {
        let mut text = String::from("x,c1,c2\n");
        for (x, a, b) in rows {
            text.push_str(&format!("{x},a{a},b{b}\n"));
        }
        table(&text)
    }

    proptest! {
        #[test]
        fn metric_axioms(rows in mixed_rows()) {
            let t = to_table(&rows);
            let m = fit_encoding(&t, ScaleMode::Minmax).unwrap();
            for e in [encode(&m, &t).unwrap(), encode_gower(&m, &t).unwrap()] {
                let n = e.len();
                for i in 0..n {
                    prop_assert_eq!(e.distance(i, i), 0.0);
                    for j in 0..n {
                        let dij = e.distance(i, j);
                        prop_assert!(dij >= 0.0);
                        prop_assert_eq!(dij, e.distance(j, i));
                        for k in 0..n {
                            prop_assert!(dij <= e.distance(i, k) + e.distance(k, j) + 1e-9);
                        }
                    }
                }
            }
        }

        #[test]
        fn one_hot_blocks_and_unit_range(rows in mixed_rows()) {
            let t = to_table(&rows);
            let m = fit_encoding(&t, ScaleMode::Minmax).unwrap();
            let e = encode(&m, &t).unwrap();
            let sources = m.dimension_sources();
            for r in e.rows() {
                prop_assert!((0.0..=1.0).contains(&r[0]));
                for col in 1..3 {
                    let block: Vec<f64> = r.iter().zip(&sources).filter(|(_, s)| **s == col).map(|(v, _)| *v).collect();
                    prop_assert_eq!(block.iter().filter(|v| **v == 1.0).count(), 1);
                    prop_assert!(block.iter().all(|v| *v == 0.0 || *v == 1.0));
                }
            }
        }

        #[test]
        fn encoding_ignores_real_table(rows in mixed_rows(), other in mixed_rows()) {
            let s = to_table(&rows);
            let r = to_table(&other);
            let m1 = fit_encoding(&s, ScaleMode::Minmax).unwrap();
            crate::dataset::unify_schema(&s, Some(&r)).unwrap();
            let m2 = fit_encoding(&s, ScaleMode::Minmax).unwrap();
            prop_assert_eq!(&m1, &m2);
            let a = encode(&m1, &s).unwrap();
            let b = encode(&m2, &s).unwrap();
            prop_assert!(a.rows().zip(b.rows()).all(|(x, y)| x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())));
        }
    }
}

//! DBSCAN over encoded synthetic rows and per-cluster medoid extraction.
//!
//! Labeling is deterministic and independent of scan order for core points:
//! clusters are the connected components of the core graph, numbered by
//! their lowest-index core point. A border point joins the cluster of the
//! lowest-index core point that reaches it.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{cell_text, Cell, DataTable, TableSchema};
use crate::encoder::{EncodedMatrix, Space};
use crate::error::{Error, Result};
use crate::index::ProjectionIndex;
use crate::metrics::percentile;

pub const NOISE: i64 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsMode {
    Fixed,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    pub eps_mode: EpsMode,
    /// Neighborhood radius. Ignored until resolved when `eps_mode` is auto.
    pub eps: f64,
    /// Neighbors (self included) needed for a core point.
    pub min_samples: usize,
    /// Above this many rows, neighborhood queries use the projection index.
    #[serde(default = "default_index_threshold")]
    pub index_threshold: usize,
}

fn default_index_threshold() -> usize {
    50_000
}

impl Default for DbscanParams {
    fn default() -> Self {
        DbscanParams {
            eps_mode: EpsMode::Auto,
            eps: 0.0,
            min_samples: 5,
            index_threshold: default_index_threshold(),
        }
    }
}

impl DbscanParams {
    pub fn fixed(eps: f64, min_samples: usize) -> Self {
        DbscanParams {
            eps_mode: EpsMode::Fixed,
            eps,
            min_samples,
            ..Default::default()
        }
    }

    pub fn auto(min_samples: usize) -> Self {
        DbscanParams {
            min_samples,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_samples < 2 {
            return Err(Error::DbscanParams(format!(
                "min_samples must be at least 2, got {}",
                self.min_samples
            )));
        }
        if self.eps_mode == EpsMode::Fixed && !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::DbscanParams(format!(
                "eps must be positive and finite, got {}",
                self.eps
            )));
        }
        Ok(())
    }

    /// Returns the parameters with a concrete eps for this matrix.
    pub fn resolve(&self, matrix: &EncodedMatrix) -> Result<DbscanParams> {
        self.validate()?;
        let mut out = *self;
        if self.eps_mode == EpsMode::Auto {
            out.eps = auto_eps_with(matrix, self.min_samples, self.index_threshold)?;
        }
        Ok(out)
    }
}

/// Median, over all rows, of the distance to the `min_samples`-th nearest
/// row counting the row itself (the radius at which that row just becomes a
/// core point).
pub fn auto_eps(matrix: &EncodedMatrix, min_samples: usize) -> Result<f64> {
    auto_eps_with(matrix, min_samples, default_index_threshold())
}

fn auto_eps_with(
    matrix: &EncodedMatrix,
    min_samples: usize,
    index_threshold: usize,
) -> Result<f64> {
    let n = matrix.len();
    if min_samples == 0 || n <= min_samples {
        return Err(Error::TooFewRows { n, min_samples });
    }
    let index = if n > index_threshold {
        ProjectionIndex::build(matrix)
    } else {
        None
    };
    let mut kth: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| match &index {
            Some(idx) => idx.kth_distance(matrix.row(i), min_samples),
            None => {
                let mut d: Vec<f64> = (0..n).map(|j| matrix.distance(i, j)).collect();
                let (_, v, _) = d.select_nth_unstable_by(min_samples - 1, f64::total_cmp);
                *v
            }
        })
        .collect();
    kth.sort_by(f64::total_cmp);
    let eps = percentile(&kth, 50.0);
    if eps > 0.0 && eps.is_finite() {
        Ok(eps)
    } else {
        Err(Error::DegenerateGeometry)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabeling {
    /// Per row: [`NOISE`] or a cluster id in `0..k`.
    pub labels: Vec<i64>,
    pub k: usize,
    pub core: Vec<bool>,
    /// Parameters with eps resolved.
    pub params: DbscanParams,
}

impl ClusterLabeling {
    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            if l >= 0 {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }

    /// Row indices per cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            if l >= 0 {
                out[l as usize].push(i);
            }
        }
        out
    }

    /// CSV with header `row_id,label`.
    pub fn write_csv<W: Write>(&self, row_ids: &[usize], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["row_id", "label"])?;
        for (id, label) in row_ids.iter().zip(&self.labels) {
            w.write_record([id.to_string(), label.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

enum Neighborhoods<'a> {
    Brute(&'a EncodedMatrix),
    Index(ProjectionIndex<'a>, &'a EncodedMatrix),
}

impl Neighborhoods<'_> {
    fn count(&self, i: usize, eps: f64) -> usize {
        match self {
            Neighborhoods::Brute(m) => (0..m.len()).filter(|&j| m.distance(i, j) <= eps).count(),
            Neighborhoods::Index(idx, m) => idx.count_within(m.row(i), eps),
        }
    }

    fn list(&self, i: usize, eps: f64) -> Vec<usize> {
        match self {
            Neighborhoods::Brute(m) => (0..m.len()).filter(|&j| m.distance(i, j) <= eps).collect(),
            Neighborhoods::Index(idx, m) => idx.within(m.row(i), eps),
        }
    }
}

/// Density-based clustering. A point is core iff at least `min_samples`
/// points, itself included, lie within distance `eps` (inclusive).
pub fn dbscan(matrix: &EncodedMatrix, params: &DbscanParams) -> Result<ClusterLabeling> {
    let params = if matrix.is_empty() {
        params.validate()?;
        *params
    } else {
        params.resolve(matrix)?
    };
    let n = matrix.len();
    let eps = params.eps;
    let search = match (n > params.index_threshold, ProjectionIndex::build(matrix)) {
        (true, Some(idx)) => Neighborhoods::Index(idx, matrix),
        _ => Neighborhoods::Brute(matrix),
    };

    let core: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|i| search.count(i, eps) >= params.min_samples)
        .collect();

    let mut labels = vec![NOISE; n];
    // lowest-index core point reaching each non-core point
    let mut reached_by = vec![usize::MAX; n];
    let mut k = 0usize;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if !core[seed] || labels[seed] != NOISE {
            continue;
        }
        let id = k as i64;
        k += 1;
        labels[seed] = id;
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            for q in search.list(p, eps) {
                if core[q] {
                    if labels[q] == NOISE {
                        labels[q] = id;
                        queue.push_back(q);
                    }
                } else if p < reached_by[q] {
                    reached_by[q] = p;
                }
            }
        }
    }
    for i in 0..n {
        if !core[i] && reached_by[i] != usize::MAX {
            labels[i] = labels[reached_by[i]];
        }
    }

    Ok(ClusterLabeling {
        labels,
        k,
        core,
        params,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Medoid {
    pub cluster: usize,
    /// Row id in the synthetic table.
    pub row_id: usize,
    pub cluster_size: usize,
    /// Sum of distances to all members of the cluster.
    pub distance_sum: f64,
    pub vector: Vec<f64>,
    pub raw: Vec<Cell>,
}

#[derive(Debug, Clone)]
pub struct MedoidSet {
    medoids: Vec<Medoid>,
    schema: TableSchema,
    space: Arc<Space>,
    model_id: String,
    dim: usize,
}

/// Picks, per cluster, the member minimizing the summed distance to all
/// members; ties go to the lowest row id. Noise rows are ignored.
pub fn extract_medoids(
    matrix: &EncodedMatrix,
    labeling: &ClusterLabeling,
    raw: &DataTable,
) -> Result<MedoidSet> {
    if labeling.labels.len() != matrix.len() || raw.len() != matrix.len() {
        return Err(Error::DimensionMismatch {
            left: matrix.len(),
            right: labeling.labels.len().min(raw.len()),
        });
    }
    let medoids = labeling
        .members()
        .into_iter()
        .enumerate()
        .map(|(cluster, members)| {
            let (best, sum) = members
                .par_iter()
                .map(|&c| {
                    let s: f64 = members.iter().map(|&j| matrix.distance(c, j)).sum();
                    (c, s)
                })
                .reduce(
                    || (usize::MAX, f64::INFINITY),
                    |a, b| {
                        let a_id = matrix.row_ids().get(a.0).copied().unwrap_or(usize::MAX);
                        let b_id = matrix.row_ids().get(b.0).copied().unwrap_or(usize::MAX);
                        if b.1 < a.1 || (b.1 == a.1 && b_id < a_id) {
                            b
                        } else {
                            a
                        }
                    },
                );
            Medoid {
                cluster,
                row_id: matrix.row_ids()[best],
                cluster_size: members.len(),
                distance_sum: sum,
                vector: matrix.row(best).to_vec(),
                raw: raw.row(best).to_vec(),
            }
        })
        .collect();
    Ok(MedoidSet {
        medoids,
        schema: raw.schema().clone(),
        space: matrix.space_arc(),
        model_id: matrix.model_id().to_owned(),
        dim: matrix.dim(),
    })
}

/// JSON companion of `medoids.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedoidSidecar {
    pub k: usize,
    pub params: DbscanParams,
    pub noise: usize,
    pub medoids: Vec<MedoidEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedoidEntry {
    pub cluster_id: usize,
    pub row_id: usize,
    pub cluster_size: usize,
}

impl MedoidSet {
    pub fn medoids(&self) -> &[Medoid] {
        &self.medoids
    }

    pub fn len(&self) -> usize {
        self.medoids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.medoids.is_empty()
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn schema(&self) -> &TableSchema {
        &self.schema
    }

    /// Medoid vectors as a matrix in the same space (row ids = medoid row ids).
    pub fn to_matrix(&self) -> EncodedMatrix {
        let data = self
            .medoids
            .iter()
            .flat_map(|m| m.vector.iter().copied())
            .collect();
        EncodedMatrix::with_parts(
            data,
            self.dim,
            self.medoids.iter().map(|m| m.row_id).collect(),
            Arc::clone(&self.space),
            self.model_id.clone(),
        )
    }

    /// Raw medoid rows under the synthetic schema, in cluster order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.columns().iter().map(|c| c.name.as_str()))?;
        for m in &self.medoids {
            w.write_record(
                m.raw
                    .iter()
                    .zip(self.schema.columns())
                    .map(|(cell, col)| cell_text(col, *cell)),
            )?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn sidecar(&self, labeling: &ClusterLabeling) -> MedoidSidecar {
        MedoidSidecar {
            k: self.medoids.len(),
            params: labeling.params,
            noise: labeling.noise_count(),
            medoids: self
                .medoids
                .iter()
                .map(|m| MedoidEntry {
                    cluster_id: m.cluster,
                    row_id: m.row_id,
                    cluster_size: m.cluster_size,
                })
                .collect(),
        }
    }

    pub fn save(
        &self,
        labeling: &ClusterLabeling,
        csv_path: &Path,
        json_path: &Path,
    ) -> Result<()> {
        let file = std::fs::File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let json = serde_json::to_string_pretty(&self.sidecar(labeling))?;
        std::fs::write(json_path, json).map_err(|e| Error::io(json_path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Column, Origin};

    fn matrix(rows: &[Vec<f64>]) -> EncodedMatrix {
        EncodedMatrix::from_rows(rows, "t").unwrap()
    }

    fn line(xs: &[f64]) -> EncodedMatrix {
        matrix(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>())
    }

    fn raw_for(n: usize) -> DataTable {
        let schema = TableSchema::new(vec![Column::numeric("x")]).unwrap();
        DataTable::new(
            schema,
            (0..n).map(|i| vec![Cell::Num(i as f64)]).collect(),
            Origin::Synthetic,
        )
        .unwrap()
    }

    #[test]
    fn single_point_is_noise() {
        let l = dbscan(&line(&[3.0]), &DbscanParams::fixed(1.0, 2)).unwrap();
        assert_eq!(l.k, 0);
        assert_eq!(l.labels, vec![NOISE]);
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let l = dbscan(&line(&[1.0; 5]), &DbscanParams::fixed(0.01, 5)).unwrap();
        assert_eq!(l.k, 1);
        assert_eq!(l.labels, vec![0; 5]);
    }

    #[test]
    fn border_point_goes_to_lowest_core() {
        // the point at 5 is within eps of core 3 and core 7 but is not core
        let m = line(&[7.0, 8.0, 9.0, 10.0, 0.0, 1.0, 2.0, 3.0, 5.0]);
        let l = dbscan(&m, &DbscanParams::fixed(2.0, 4)).unwrap();
        assert_eq!(l.k, 2);
        assert!(!l.core[8]);
        assert_eq!(l.labels[8], l.labels[0]);

        let m = line(&[0.0, 1.0, 2.0, 3.0, 7.0, 8.0, 9.0, 10.0, 5.0]);
        let l = dbscan(&m, &DbscanParams::fixed(2.0, 4)).unwrap();
        assert_eq!(l.labels[8], l.labels[3]);
    }

    #[test]
    fn rejects_bad_params() {
        let m = line(&[0.0, 1.0]);
        assert!(dbscan(&m, &DbscanParams::fixed(0.0, 2)).is_err());
        assert!(dbscan(&m, &DbscanParams::fixed(1.0, 1)).is_err());
        assert!(dbscan(&m, &DbscanParams::fixed(f64::NAN, 2)).is_err());
    }

    #[test]
    fn auto_eps_collinear() {
        assert_eq!(auto_eps(&line(&[0.0, 1.0, 2.0]), 2).unwrap(), 1.0);
    }

    #[test]
    fn auto_eps_errors() {
        assert!(matches!(
            auto_eps(&line(&[1.0; 6]), 2),
            Err(Error::DegenerateGeometry)
        ));
        assert!(matches!(
            auto_eps(&line(&[0.0, 1.0]), 2),
            Err(Error::TooFewRows { .. })
        ));
    }

    #[test]
    fn auto_eps_is_homogeneous() {
        let m = matrix(&[
            vec![0.0, 0.3],
            vec![1.0, 2.0],
            vec![0.2, 0.1],
            vec![5.0, 1.0],
            vec![2.0, 2.0],
        ]);
        let e = auto_eps(&m, 2).unwrap();
        assert_eq!(auto_eps(&m.scaled(4.0), 2).unwrap(), 4.0 * e);
    }

    #[test]
    fn auto_eps_index_path_agrees() {
        let m = matrix(
            &(0..60)
                .map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64 * 0.5])
                .collect::<Vec<_>>(),
        );
        assert_eq!(
            auto_eps_with(&m, 4, 0).unwrap(),
            auto_eps_with(&m, 4, usize::MAX).unwrap()
        );
    }

    #[test]
    fn medoid_on_line() {
        let m = line(&[0.0, 1.0, 10.0]);
        let labeling = ClusterLabeling {
            labels: vec![0, 0, 0],
            k: 1,
            core: vec![true; 3],
            params: DbscanParams::fixed(20.0, 2),
        };
        let set = extract_medoids(&m, &labeling, &raw_for(3)).unwrap();
        // candidate sums: 0 -> 11, 1 -> 10, 10 -> 19
        assert_eq!(set.medoids()[0].row_id, 1);
        assert_eq!(set.medoids()[0].distance_sum, 10.0);
    }

    #[test]
    fn medoid_ties_and_singletons() {
        let m = line(&[0.0, 2.0, 7.0]);
        let labeling = ClusterLabeling {
            labels: vec![0, 0, 1],
            k: 2,
            core: vec![true; 3],
            params: DbscanParams::fixed(3.0, 2),
        };
        let set = extract_medoids(&m, &labeling, &raw_for(3)).unwrap();
        assert_eq!(set.medoids()[0].row_id, 0);
        assert_eq!(set.medoids()[1].row_id, 2);
        assert_eq!(set.medoids()[1].cluster_size, 1);
    }

    #[test]
    fn noise_excluded_from_medoids() {
        let m = line(&[0.0, 0.1, 0.2, 50.0]);
        let l = dbscan(&m, &DbscanParams::fixed(0.15, 2)).unwrap();
        assert_eq!(l.labels[3], NOISE);
        let set = extract_medoids(&m, &l, &raw_for(4)).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.medoids()[0].row_id, 1);
    }

    #[test]
    fn labels_csv() {
        let l = dbscan(&line(&[0.0, 0.1, 9.0]), &DbscanParams::fixed(0.5, 2)).unwrap();
        let mut buf = Vec::new();
        l.write_csv(&[0, 1, 2], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "row_id,label\n0,0\n1,0\n2,-1\n"
        );
    }
}

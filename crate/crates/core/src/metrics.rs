//! Medoid-to-real proximity: nearest distances, attack success rate and
//! coverage over a threshold grid, and summary statistics.
//!
//! Both rates use a strict comparison, `distance < tau`, so every curve is
//! zero at `tau = 0`.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::MedoidSet;
use crate::encoder::{EncodedMatrix, Space};
use crate::error::{Error, Result};
use crate::index::ProjectionIndex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRecord {
    pub cluster_id: usize,
    pub medoid_row: usize,
    pub d_min: f64,
    pub nearest_real_row: usize,
}

/// How nearest-real queries are evaluated. All modes return identical
/// records; brute force is the reference semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMode {
    Brute,
    Indexed,
    #[default]
    Auto,
}

const AUTO_INDEX_MIN_ROWS: usize = 1024;

/// Tolerance used when looking a threshold up on a grid.
pub const GRID_MATCH_TOL: f64 = 1e-12;

/// Strictly increasing thresholds, with a subset marked for reference readouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    taus: Vec<f64>,
    marks: Vec<f64>,
}

impl Default for ThresholdGrid {
    /// 0.00, 0.01, ..., 2.50 with marks at 0.1 and 0.5.
    fn default() -> Self {
        ThresholdGrid::from_range_spec("0:2.5:0.01", &[0.1, 0.5]).expect("valid default grid")
    }
}

impl ThresholdGrid {
    /// Marks not already on the grid (within [`GRID_MATCH_TOL`]) are inserted.
    pub fn new(mut taus: Vec<f64>, marks: &[f64]) -> Result<Self> {
        for &m in marks {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::Grid(format!(
                    "mark {m} must be finite and non-negative"
                )));
            }
        }
        for w in taus.windows(2) {
            if w[0].partial_cmp(&w[1]) != Some(Ordering::Less) {
                return Err(Error::Grid(format!(
                    "thresholds not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(bad) = taus.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::Grid(format!(
                "threshold {bad} must be finite and non-negative"
            )));
        }
        let mut snapped = Vec::with_capacity(marks.len());
        for &m in marks {
            let t = match taus.iter().find(|t| (*t - m).abs() <= GRID_MATCH_TOL) {
                Some(t) => *t,
                None => {
                    let pos = taus.partition_point(|t| *t < m);
                    taus.insert(pos, m);
                    m
                }
            };
            if !snapped.contains(&t) {
                snapped.push(t);
            }
        }
        snapped.sort_by(f64::total_cmp);
        if taus.is_empty() {
            return Err(Error::Grid("empty grid".into()));
        }
        Ok(ThresholdGrid {
            taus,
            marks: snapped,
        })
    }

    /// Parses `start:stop:step` in decimal notation. Points are computed as
    /// integer multiples of the step divided by a power of ten, so `0.1` on a
    /// `0.01` grid is the same double as the literal `0.1`.
    pub fn from_range_spec(spec: &str, marks: &[f64]) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Grid(format!(
                "expected start:stop:step, got `{spec}`"
            )));
        }
        let decimals = parts
            .iter()
            .map(|p| p.trim().split_once('.').map_or(0, |(_, f)| f.len()))
            .max()
            .unwrap_or(0);
        if decimals > 12 {
            return Err(Error::Grid("at most 12 decimal places".into()));
        }
        let scale = 10f64.powi(decimals as i32);
        let mut units = [0i64; 3];
        for (u, p) in units.iter_mut().zip(&parts) {
            let v: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::Grid(format!("bad number `{p}`")))?;
            if !v.is_finite() {
                return Err(Error::Grid(format!("bad number `{p}`")));
            }
            *u = (v * scale).round() as i64;
        }
        let [start, stop, step] = units;
        if step <= 0 || start < 0 || stop < start {
            return Err(Error::Grid(format!("invalid range `{spec}`")));
        }
        let count = (stop - start) / step + 1;
        if count > 1_000_000 {
            return Err(Error::Grid("grid too large".into()));
        }
        let taus = (0..count)
            .map(|i| (start + i * step) as f64 / scale)
            .collect();
        ThresholdGrid::new(taus, marks)
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// Grid position of `tau`, matching within [`GRID_MATCH_TOL`].
    pub fn position(&self, tau: f64) -> Option<usize> {
        self.taus
            .iter()
            .position(|t| (t - tau).abs() <= GRID_MATCH_TOL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub tau: f64,
    pub asr: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCurves {
    pub points: Vec<CurvePoint>,
    /// Medoid count.
    pub k: usize,
    pub n_real: usize,
}

impl MetricCurves {
    pub fn new(
        grid: &ThresholdGrid,
        asr: &[f64],
        coverage: &[f64],
        k: usize,
        n_real: usize,
    ) -> Result<Self> {
        if asr.len() != grid.len() || coverage.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                left: grid.len(),
                right: asr.len().min(coverage.len()),
            });
        }
        Ok(MetricCurves {
            points: grid
                .taus()
                .iter()
                .zip(asr.iter().zip(coverage))
                .map(|(&tau, (&asr, &coverage))| CurvePoint { tau, asr, coverage })
                .collect(),
            k,
            n_real,
        })
    }

    pub fn at(&self, tau: f64) -> Option<&CurvePoint> {
        self.points
            .iter()
            .find(|p| (p.tau - tau).abs() <= GRID_MATCH_TOL)
    }

    /// Checks bounds and monotonicity of both curves.
    pub fn check_laws(&self) -> Result<()> {
        for p in &self.points {
            if !(0.0..=1.0).contains(&p.asr) || !(0.0..=1.0).contains(&p.coverage) {
                return Err(Error::Report(format!(
                    "curve value out of [0,1] at tau {}",
                    p.tau
                )));
            }
        }
        for w in self.points.windows(2) {
            if w[0].tau.partial_cmp(&w[1].tau) != Some(Ordering::Less) {
                return Err(Error::Report(format!("tau not increasing at {}", w[1].tau)));
            }
            if w[1].asr < w[0].asr || w[1].coverage < w[0].coverage {
                return Err(Error::Report(format!(
                    "curve decreases at tau {}",
                    w[1].tau
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DminSummary {
    #[serde(rename = "M")]
    pub m: usize,
    pub min: f64,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub p10: f64,
    pub p90: f64,
}

impl DminSummary {
    pub fn check_order(&self) -> bool {
        self.min <= self.p10
            && self.p10 <= self.median
            && self.median <= self.p90
            && self.p90 <= self.max
            && self.min <= self.mean
            && self.mean <= self.max
    }
}

fn check_inputs(medoids: &MedoidSet, real: &EncodedMatrix) -> Result<()> {
    if medoids.is_empty() {
        return Err(Error::EmptyInput("medoid set"));
    }
    if real.is_empty() {
        return Err(Error::EmptyInput("real table"));
    }
    if medoids.model_id() != real.model_id() || medoids.space() != real.space() {
        return Err(Error::ModelMismatch(
            medoids.model_id().to_owned(),
            real.model_id().to_owned(),
        ));
    }
    if medoids.dim() != real.dim() {
        return Err(Error::DimensionMismatch {
            left: medoids.dim(),
            right: real.dim(),
        });
    }
    Ok(())
}

fn brute_nearest(query: &[f64], real: &EncodedMatrix) -> (usize, f64) {
    let space = real.space();
    let mut best = (0, f64::INFINITY);
    for (j, row) in real.rows().enumerate() {
        let d = space.distance(query, row);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// For each medoid, the distance to its nearest real row (ties to the lowest
/// real row id).
pub fn nearest_real_distances(
    medoids: &MedoidSet,
    real: &EncodedMatrix,
) -> Result<Vec<DistanceRecord>> {
    nearest_real_distances_with(medoids, real, SearchMode::Auto)
}

pub fn nearest_real_distances_with(
    medoids: &MedoidSet,
    real: &EncodedMatrix,
    mode: SearchMode,
) -> Result<Vec<DistanceRecord>> {
    check_inputs(medoids, real)?;
    let euclid = matches!(real.space(), Space::Euclidean);
    let use_index = match mode {
        SearchMode::Brute => false,
        SearchMode::Indexed => euclid,
        SearchMode::Auto => euclid && real.len() >= AUTO_INDEX_MIN_ROWS,
    };
    let index = if use_index {
        ProjectionIndex::build(real)
    } else {
        None
    };
    Ok(medoids
        .medoids()
        .par_iter()
        .map(|m| {
            let (j, d) = match &index {
                Some(idx) => idx.nearest(&m.vector),
                None => brute_nearest(&m.vector, real),
            };
            DistanceRecord {
                cluster_id: m.cluster,
                medoid_row: m.row_id,
                d_min: d,
                nearest_real_row: real.row_ids()[j],
            }
        })
        .collect())
}

/// Fraction of values strictly below each threshold. `sorted` must be
/// ascending.
fn fraction_below(sorted: &[f64], grid: &ThresholdGrid) -> Vec<f64> {
    let n = sorted.len() as f64;
    grid.taus()
        .iter()
        .map(|&tau| sorted.partition_point(|&d| d < tau) as f64 / n)
        .collect()
}

/// ASR(tau) = share of medoids with `d_min < tau`.
pub fn asr_curve(records: &[DistanceRecord], grid: &ThresholdGrid) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("medoid set"));
    }
    let mut d: Vec<f64> = records.iter().map(|r| r.d_min).collect();
    d.sort_by(f64::total_cmp);
    Ok(fraction_below(&d, grid))
}

/// Distance from each real row to its closest medoid.
pub fn real_min_distances(medoids: &MedoidSet, real: &EncodedMatrix) -> Result<Vec<f64>> {
    check_inputs(medoids, real)?;
    let space = real.space();
    let centers = medoids.medoids();
    Ok((0..real.len())
        .into_par_iter()
        .map(|j| {
            let x = real.row(j);
            centers
                .iter()
                .map(|m| space.distance(x, &m.vector))
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// Cov(tau) = share of real rows whose closest medoid is strictly within tau.
pub fn coverage_curve(
    medoids: &MedoidSet,
    real: &EncodedMatrix,
    grid: &ThresholdGrid,
) -> Result<Vec<f64>> {
    let mut mins = real_min_distances(medoids, real)?;
    mins.sort_by(f64::total_cmp);
    Ok(fraction_below(&mins, grid))
}

/// Linear interpolation between order statistics of an ascending sample:
/// rank `h = (n-1) p / 100`, value `v[floor h] + frac(h) (v[floor h + 1] - v[floor h])`.
pub(crate) fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

pub fn summarize_dmin(records: &[DistanceRecord]) -> Result<DminSummary> {
    if records.is_empty() {
        return Err(Error::EmptyInput("distance records"));
    }
    let mut d: Vec<f64> = records.iter().map(|r| r.d_min).collect();
    d.sort_by(f64::total_cmp);
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    Ok(DminSummary {
        m: d.len(),
        min: d[0],
        mean: mean.clamp(d[0], d[d.len() - 1]),
        median: percentile(&d, 50.0),
        max: d[d.len() - 1],
        p10: percentile(&d, 10.0),
        p90: percentile(&d, 90.0),
    })
}

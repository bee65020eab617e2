//! Toy generators with known leakage behaviour, for end-to-end validation.
//!
//! All randomness comes from SplitMix64 (64-bit state, `rand_xoshiro`)
//! seeded from the recipe; normals use `rand_distr::StandardNormal`. Given
//! the same seed the tables are identical on every platform.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, Column, DataTable, Origin, TableSchema};
use crate::error::{Error, Result};
use crate::pipeline::AuditConfig;

const SUM_TOL: f64 = 1e-9;

/// Isotropic Gaussian mixture over the numeric columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
    /// One mean vector per component.
    pub means: Vec<Vec<f64>>,
    /// Per-dimension standard deviation of every component.
    pub scale: f64,
}

impl MixtureSpec {
    pub fn dims(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Generator(m));
        if self.weights.is_empty() || self.weights.len() != self.means.len() {
            return bad(format!(
                "{} weights for {} components",
                self.weights.len(),
                self.means.len()
            ));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("mixture weights must be non-negative".into());
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return bad(format!("mixture weights sum to {sum}, not 1"));
        }
        let d = self.dims();
        if self
            .means
            .iter()
            .any(|m| m.len() != d || m.iter().any(|x| !x.is_finite()))
        {
            return bad("component means must share one dimension and be finite".into());
        }
        if !(self.scale.is_finite() && self.scale >= 0.0) {
            return bad(format!("scale {} must be non-negative", self.scale));
        }
        Ok(())
    }

    fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut Vec<Cell>) -> usize {
        let c = pick(rng, &self.weights);
        for &mu in &self.means[c] {
            let z: f64 = rng.sample(StandardNormal);
            out.push(Cell::Num(mu + self.scale * z));
        }
        c
    }
}

/// Index drawn from a discrete distribution given by `probs`.
fn pick<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the running sum; take the last positive entry
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

fn check_probs(name: &str, probs: &[f64], levels: usize) -> Result<()> {
    if probs.len() != levels {
        return Err(Error::Generator(format!(
            "column `{name}`: {} probabilities for {levels} levels",
            probs.len()
        )));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Generator(format!(
            "column `{name}`: negative probability"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::Generator(format!(
            "column `{name}`: probabilities sum to {sum}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalSpec {
    pub name: String,
    pub levels: Vec<String>,
    /// Marginal probabilities, used when `by_component` is absent.
    #[serde(default)]
    pub probs: Vec<f64>,
    /// Per mixture component, a probability vector over `levels`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub by_component: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealRecipe {
    pub n_rows: usize,
    pub seed: u64,
    pub mixture: MixtureSpec,
    /// Numeric column names; defaults to `x0`, `x1`, ...
    #[serde(default)]
    pub numeric_names: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<CategoricalSpec>,
}

impl RealRecipe {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(Error::Generator("n_rows must be positive".into()));
        }
        self.mixture.validate()?;
        if !self.numeric_names.is_empty() && self.numeric_names.len() != self.mixture.dims() {
            return Err(Error::Generator(format!(
                "{} numeric names for {} mixture dimensions",
                self.numeric_names.len(),
                self.mixture.dims()
            )));
        }
        for c in &self.categorical {
            if c.levels.is_empty() {
                return Err(Error::Generator(format!(
                    "column `{}` has no levels",
                    c.name
                )));
            }
            match &c.by_component {
                Some(rows) => {
                    if rows.len() != self.mixture.weights.len() {
                        return Err(Error::Generator(format!(
                            "column `{}`: {} component rows for {} components",
                            c.name,
                            rows.len(),
                            self.mixture.weights.len()
                        )));
                    }
                    for r in rows {
                        check_probs(&c.name, r, c.levels.len())?;
                    }
                }
                None => check_probs(&c.name, &c.probs, c.levels.len())?,
            }
        }
        self.schema().map(|_| ())
    }

    pub fn schema(&self) -> Result<TableSchema> {
        let mut cols: Vec<Column> = (0..self.mixture.dims())
            .map(|i| {
                Column::numeric(
                    self.numeric_names
                        .get(i)
                        .cloned()
                        .unwrap_or_else(|| format!("x{i}")),
                )
            })
            .collect();
        cols.extend(
            self.categorical
                .iter()
                .map(|c| Column::categorical(c.name.clone(), c.levels.clone())),
        );
        TableSchema::new(cols).map_err(|e| Error::Generator(e.to_string()))
    }
}

/// Draws the real table of a recipe.
pub fn make_real(recipe: &RealRecipe) -> Result<DataTable> {
    recipe.validate()?;
    let mut rng = SplitMix64::seed_from_u64(recipe.seed);
    let rows = (0..recipe.n_rows)
        .map(|_| {
            let mut row = Vec::new();
            let comp = recipe.mixture.sample_into(&mut rng, &mut row);
            for c in &recipe.categorical {
                let probs = c.by_component.as_ref().map_or(&c.probs, |rows| &rows[comp]);
                row.push(Cell::Cat(pick(&mut rng, probs) as u32));
            }
            row
        })
        .collect();
    DataTable::new(recipe.schema()?, rows, Origin::Harness)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Rows of the real table, uniformly with replacement.
    Memorizer,
    /// Memorized rows with Gaussian noise of `sigma` times each numeric
    /// column's range, and each categorical resampled from its marginal with
    /// probability `min(1, sigma)`.
    Noised { sigma: f64 },
    /// Each column drawn independently from its real marginal.
    Independent,
    /// Numerics from a fixed mixture, categoricals from the real marginals.
    GaussianMixture { mixture: MixtureSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub seed: u64,
    pub n_samples: usize,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, seed: u64, n_samples: usize) -> Self {
        GeneratorSpec {
            kind,
            seed,
            n_samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Generator("n_samples must be positive".into()));
        }
        match &self.kind {
            GeneratorKind::Noised { sigma } if !(sigma.is_finite() && *sigma >= 0.0) => Err(
                Error::Generator(format!("sigma {sigma} must be non-negative")),
            ),
            GeneratorKind::GaussianMixture { mixture } => mixture.validate(),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedGenerator {
    pub label: String,
    #[serde(flatten)]
    pub spec: GeneratorSpec,
}

/// Expected descending ASR order of generators at `tau`. `min_gaps[i]` is
/// the smallest allowed gap between entries `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedOrdering {
    pub tau: f64,
    pub order: Vec<String>,
    #[serde(default)]
    pub min_gaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessScenario {
    pub dataset: String,
    pub real: RealRecipe,
    pub generators: Vec<NamedGenerator>,
    #[serde(default)]
    pub expected_ordering: Option<ExpectedOrdering>,
    #[serde(default)]
    pub audit: AuditConfig,
}

impl HarnessScenario {
    pub fn validate(&self) -> Result<()> {
        self.real.validate()?;
        if self.generators.is_empty() {
            return Err(Error::Scenario("no generators".into()));
        }
        for g in &self.generators {
            g.spec.validate()?;
        }
        if let Some(o) = &self.expected_ordering {
            if o.order.len() < 2 {
                return Err(Error::Scenario(
                    "ordering needs at least two generators".into(),
                ));
            }
            if o.min_gaps.len() >= o.order.len() {
                return Err(Error::Scenario("too many gaps for the ordering".into()));
            }
        }
        Ok(())
    }
}

/// Black-box stand-in: draws `n_samples` synthetic rows from `real`
/// according to `spec`.
pub fn sample_synthetic(real: &DataTable, spec: &GeneratorSpec) -> Result<DataTable> {
    spec.validate()?;
    let mut rng = SplitMix64::seed_from_u64(spec.seed);
    let n = real.len();
    let cols = real.schema().columns();
    let rows: Vec<Vec<Cell>> = match &spec.kind {
        GeneratorKind::Noised { sigma } if *sigma > 0.0 => {
            let spans: Vec<f64> = (0..cols.len())
                .map(|j| {
                    let (lo, hi) = real.rows().iter().fold(
                        (f64::INFINITY, f64::NEG_INFINITY),
                        |(lo, hi), r| match r[j] {
                            Cell::Num(x) => (lo.min(x), hi.max(x)),
                            Cell::Cat(_) => (lo, hi),
                        },
                    );
                    if hi > lo {
                        hi - lo
                    } else {
                        1.0
                    }
                })
                .collect();
            let flip = sigma.min(1.0);
            (0..spec.n_samples)
                .map(|_| {
                    let src = real.row(rng.random_range(0..n));
                    src.iter()
                        .enumerate()
                        .map(|(j, cell)| match *cell {
                            Cell::Num(x) => {
                                let z: f64 = rng.sample(StandardNormal);
                                Cell::Num(x + sigma * spans[j] * z)
                            }
                            Cell::Cat(c) => {
                                let u: f64 = rng.random();
                                if u < flip {
                                    real.row(rng.random_range(0..n))[j]
                                } else {
                                    Cell::Cat(c)
                                }
                            }
                        })
                        .collect()
                })
                .collect()
        }
        GeneratorKind::Memorizer | GeneratorKind::Noised { .. } => (0..spec.n_samples)
            .map(|_| real.row(rng.random_range(0..n)).to_vec())
            .collect(),
        GeneratorKind::Independent => (0..spec.n_samples)
            .map(|_| {
                (0..cols.len())
                    .map(|j| real.row(rng.random_range(0..n))[j])
                    .collect()
            })
            .collect(),
        GeneratorKind::GaussianMixture { mixture } => {
            let numeric = real.schema().numeric_count();
            let leading_numeric = cols.iter().take(numeric).all(|c| c.kind.is_numeric());
            if mixture.dims() != numeric || !leading_numeric {
                return Err(Error::Generator(format!(
                    "mixture has {} dimensions; table needs {numeric} leading numeric columns",
                    mixture.dims()
                )));
            }
            (0..spec.n_samples)
                .map(|_| {
                    let mut row = Vec::with_capacity(cols.len());
                    mixture.sample_into(&mut rng, &mut row);
                    for j in numeric..cols.len() {
                        row.push(real.row(rng.random_range(0..n))[j]);
                    }
                    row
                })
                .collect()
        }
    };
    DataTable::new(real.schema().clone(), rows, Origin::Synthetic)
}

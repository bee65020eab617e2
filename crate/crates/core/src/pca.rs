//! Principal component projection of encoded synthetic rows.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::encoder::EncodedMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    means: Vec<f64>,
    /// `target_dim` unit vectors of length `source_dim`, by decreasing variance.
    components: Vec<Vec<f64>>,
    /// Eigenvalues of the sample covariance for the kept components.
    explained_variance: Vec<f64>,
    explained_variance_ratio: Vec<f64>,
    total_variance: f64,
}

/// Default target dimension when PCA is enabled without an explicit size.
pub fn default_target_dim(source_dim: usize) -> usize {
    source_dim.min(50)
}

/// Fits the top `d_prime` eigenvectors of the sample covariance (divisor N-1).
///
/// Each component is oriented so its largest-magnitude coordinate (first one
/// on ties) is non-negative.
pub fn fit_pca(matrix: &EncodedMatrix, d_prime: usize) -> Result<PcaModel> {
    let n = matrix.len();
    let dim = matrix.dim();
    let max = n.min(dim);
    if n < 2 || d_prime == 0 || d_prime > max {
        return Err(Error::PcaDimension {
            requested: d_prime,
            max: if n < 2 { 0 } else { max },
        });
    }

    let mut means = vec![0.0; dim];
    for row in matrix.rows() {
        for (m, x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }

    let centered = DMatrix::from_fn(n, dim, |i, j| matrix.row(i)[j] - means[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let total_variance = cov.trace();
    let eigen = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut components = Vec::with_capacity(d_prime);
    let mut explained_variance = Vec::with_capacity(d_prime);
    for &k in order.iter().take(d_prime) {
        let mut v: Vec<f64> = eigen.eigenvectors.column(k).iter().copied().collect();
        let mut lead = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[lead].abs() {
                lead = i;
            }
        }
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance.push(eigen.eigenvalues[k].max(0.0));
    }
    let explained_variance_ratio = explained_variance
        .iter()
        .map(|l| {
            if total_variance > 0.0 {
                l / total_variance
            } else {
                0.0
            }
        })
        .collect();

    Ok(PcaModel {
        means,
        components,
        explained_variance,
        explained_variance_ratio,
        total_variance,
    })
}

impl PcaModel {
    pub fn source_dim(&self) -> usize {
        self.means.len()
    }

    pub fn target_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn explained_variance_ratio(&self) -> &[f64] {
        &self.explained_variance_ratio
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    pub fn project_row(&self, row: &[f64], out: &mut [f64]) {
        for (o, comp) in out.iter_mut().zip(&self.components) {
            *o = comp
                .iter()
                .zip(row.iter().zip(&self.means))
                .map(|(c, (x, m))| c * (x - m))
                .sum();
        }
    }

    pub fn reconstruct_row(&self, projected: &[f64]) -> Vec<f64> {
        let mut out = self.means.clone();
        for (c, comp) in projected.iter().zip(&self.components) {
            for (o, v) in out.iter_mut().zip(comp) {
                *o += c * v;
            }
        }
        out
    }

    pub fn project(&self, matrix: &EncodedMatrix) -> EncodedMatrix {
        let d = self.target_dim();
        let mut data = vec![0.0; matrix.len() * d];
        for (i, out) in data.chunks_exact_mut(d).enumerate() {
            self.project_row(matrix.row(i), out);
        }
        EncodedMatrix::with_parts(
            data,
            d,
            matrix.row_ids().to_vec(),
            matrix.space_arc(),
            matrix.model_id().to_owned(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;
    use rand_xoshiro::SplitMix64;

    fn matrix(rows: Vec<Vec<f64>>) -> EncodedMatrix {
        EncodedMatrix::from_rows(&rows, "test").unwrap()
    }

    #[test]
    fn line_y_equals_x() {
        let m = matrix((0..10).map(|i| vec![i as f64, i as f64]).collect());
        let p = fit_pca(&m, 1).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((p.components()[0][0] - h).abs() < 1e-12);
        assert!((p.components()[0][1] - h).abs() < 1e-12);
        assert!((p.explained_variance_ratio()[0] - 1.0).abs() < 1e-12);
    }

    /// Closed-form eigenvalues of a symmetric 2x2 matrix.
    fn eig2(a: f64, b: f64, d: f64) -> (f64, f64) {
        let mid = (a + d) / 2.0;
        let r = (((a - d) / 2.0).powi(2) + b * b).sqrt();
        (mid + r, mid - r)
    }

    #[test]
    fn isotropic_split_matches_closed_form() {
        let mut rng = SplitMix64::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..10_000)
            .map(|_| vec![rng.sample(StandardNormal), rng.sample(StandardNormal)])
            .collect();
        let n = rows.len() as f64;
        let mx = rows.iter().map(|r| r[0]).sum::<f64>() / n;
        let my = rows.iter().map(|r| r[1]).sum::<f64>() / n;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for r in &rows {
            sxx += (r[0] - mx) * (r[0] - mx);
            sxy += (r[0] - mx) * (r[1] - my);
            syy += (r[1] - my) * (r[1] - my);
        }
        let (l1, l2) = eig2(sxx / (n - 1.0), sxy / (n - 1.0), syy / (n - 1.0));

        let p = fit_pca(&matrix(rows), 2).unwrap();
        let ev = p.explained_variance();
        assert!((ev[0] - l1).abs() < 1e-10);
        assert!((ev[1] - l2).abs() < 1e-10);
        let ratio = p.explained_variance_ratio();
        assert!((ratio[0] - 0.5).abs() < 0.03 && (ratio[1] - 0.5).abs() < 0.03);
        assert!((ratio[0] - l1 / (l1 + l2)).abs() < 1e-10);
    }

    #[test]
    fn full_rank_projection_preserves_geometry() {
        let mut rng = SplitMix64::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..5).map(|_| rng.random::<f64>()).collect())
            .collect();
        let m = matrix(rows);
        let p = fit_pca(&m, 5).unwrap();
        let proj = p.project(&m);
        for i in 0..m.len() {
            let back = p.reconstruct_row(proj.row(i));
            for (a, b) in back.iter().zip(m.row(i)) {
                assert!((a - b).abs() < 1e-8);
            }
            for j in 0..m.len() {
                assert!((proj.distance(i, j) - m.distance(i, j)).abs() < 1e-8);
            }
        }
        let sum: f64 = p.explained_variance().iter().sum();
        assert!((sum - p.total_variance()).abs() <= 1e-6 * p.total_variance());
    }

    #[test]
    fn orthonormal_sorted_and_signed() {
        let mut rng = SplitMix64::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| {
                let t: f64 = rng.sample(StandardNormal);
                vec![3.0 * t, t + rng.random::<f64>(), rng.random::<f64>(), -t]
            })
            .collect();
        let p = fit_pca(&matrix(rows), 3).unwrap();
        let c = p.components();
        for a in 0..3 {
            for b in 0..3 {
                let dot: f64 = c[a].iter().zip(&c[b]).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-8);
            }
            let lead = c[a]
                .iter()
                .copied()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(lead >= 0.0);
        }
        assert!(p
            .explained_variance_ratio()
            .windows(2)
            .all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rejects_bad_dimension() {
        let m = matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(fit_pca(&m, 0).is_err());
        assert!(fit_pca(&m, 3).is_err());
        let one = matrix(vec![vec![0.0, 1.0]]);
        assert!(fit_pca(&one, 1).is_err());
    }
}

//! Principal component analysis over feature vectors, fitted through an SVD
//! of the centered sample matrix so wide data (dimension far above the
//! sample count) stays numerically stable.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{argument_err, dimension_err};
use crate::Result;

/// Retained component count used throughout the recognition pipeline unless
/// configured otherwise.
pub const DEFAULT_COMPONENTS: usize = 100;

/// Training-set mean plus an orthonormal component basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// Row-major `k x dim` component matrix; rows are orthonormal.
    components: Vec<f64>,
    dim: usize,
    k: usize,
}

/// Fit result; `model.k()` can be below the requested component count when
/// the data ranks lower.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub model: PcaModel,
    pub requested: usize,
    pub effective_rank: usize,
}

impl PcaFit {
    pub fn truncated(&self) -> bool {
        self.model.k < self.requested
    }
}

impl PcaModel {
    /// Reassemble a model from stored parts (deserialization and tests).
    pub fn from_parts(mean: Vec<f64>, components: Vec<f64>, k: usize) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 {
            return Err(dimension_err!("mean vector must not be empty"));
        }
        if components.len() != k * dim {
            return Err(dimension_err!(
                "component storage {} does not match {k} x {dim}",
                components.len()
            ));
        }
        Ok(PcaModel { mean, components, dim, k })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.dim..(i + 1) * self.dim]
    }

    pub fn components_flat(&self) -> &[f64] {
        &self.components
    }

    /// Project a raw vector onto the component basis: `components * (x - mean)`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(dimension_err!(
                "vector length {} does not match model dimension {}",
                x.len(),
                self.dim
            ));
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        Ok((0..self.k)
            .map(|i| {
                self.component(i)
                    .iter()
                    .zip(&centered)
                    .map(|(c, v)| c * v)
                    .sum()
            })
            .collect())
    }

    /// Map a projection back to the input space: `mean + components^T * y`.
    pub fn reconstruct(&self, projection: &[f64]) -> Result<Vec<f64>> {
        if projection.len() != self.k {
            return Err(dimension_err!(
                "projection length {} does not match component count {}",
                projection.len(),
                self.k
            ));
        }
        let mut out = self.mean.clone();
        for (i, &y) in projection.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(self.component(i)) {
                *o += y * c;
            }
        }
        Ok(out)
    }

    /// Max deviation of `components * components^T` from the identity.
    pub fn orthonormality_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.k {
            for j in i..self.k {
                let dot: f64 = self
                    .component(i)
                    .iter()
                    .zip(self.component(j))
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Fit a PCA model on equally sized samples, keeping at most `k` components.
///
/// Components are the top right-singular directions of the centered sample
/// matrix, ordered by non-increasing singular value, each flipped so its
/// largest-magnitude entry is non-negative. When the data's effective rank
/// falls below `k`, the kept count shrinks to that rank and the fit reports
/// it.
pub fn pca_fit(samples: &[Vec<f64>], k: usize) -> Result<PcaFit> {
    let n = samples.len();
    if n < 2 {
        return Err(argument_err!("PCA needs at least 2 samples, got {n}"));
    }
    let dim = samples[0].len();
    if dim == 0 {
        return Err(dimension_err!("samples must not be empty vectors"));
    }
    if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
        return Err(dimension_err!(
            "sample length {} does not match first sample length {dim}",
            bad.len()
        ));
    }
    if k == 0 || k > dim.min(n) {
        return Err(argument_err!(
            "component count {k} out of range 1..={}",
            dim.min(n)
        ));
    }

    let inv_n = 1.0 / n as f64;
    let mut mean = vec![0.0f64; dim];
    for sample in samples {
        for (m, v) in mean.iter_mut().zip(sample) {
            *m += v * inv_n;
        }
    }

    let centered =
        DMatrix::from_fn(n, dim, |r, c| samples[r][c] - mean[c]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sigma = svd.singular_values.as_slice();

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).expect("finite singular values"));

    let sigma_max = sigma[order[0]];
    let tol = sigma_max * n.max(dim) as f64 * f64::EPSILON;
    let effective_rank = order.iter().filter(|&&i| sigma[i] > tol).count();

    let kept = k.min(effective_rank);
    let mut components = Vec::with_capacity(kept * dim);
    for &idx in order.iter().take(kept) {
        let row = v_t.row(idx);
        let mut best = 0usize;
        for (j, v) in row.iter().enumerate() {
            if v.abs() > row[best].abs() {
                best = j;
            }
        }
        let flip = if row[best] < 0.0 { -1.0 } else { 1.0 };
        components.extend(row.iter().map(|v| v * flip));
    }

    Ok(PcaFit {
        model: PcaModel { mean, components, dim, k: kept },
        requested: k,
        effective_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn collinear_points_give_the_line_direction() {
        let samples = vec![
            vec![1.0, 2.0],
            vec![2.0, 4.0],
            vec![-1.0, -2.0],
            vec![0.0, 0.0],
        ];
        let fit = pca_fit(&samples, 1).unwrap();
        assert_eq!(fit.effective_rank, 1);
        let c = fit.model.component(0);
        let expected = [1.0 / 5.0f64.sqrt(), 2.0 / 5.0f64.sqrt()];
        assert_relative_eq!(c[0], expected[0], epsilon = 1e-12);
        assert_relative_eq!(c[1], expected[1], epsilon = 1e-12);
        assert_eq!(fit.model.mean(), &[0.5, 1.0]);
    }

    #[test]
    fn identical_samples_report_rank_zero() {
        let samples = vec![vec![3.0, -1.0, 2.0]; 4];
        let fit = pca_fit(&samples, 2).unwrap();
        assert_eq!(fit.effective_rank, 0);
        assert_eq!(fit.model.k(), 0);
        assert!(fit.truncated());
        assert_eq!(fit.model.mean(), &[3.0, -1.0, 2.0]);
        assert_eq!(fit.model.project(&[3.0, -1.0, 2.0]).unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(pca_fit(&[vec![1.0]], 1).is_err());
        assert!(pca_fit(&[vec![1.0, 2.0], vec![1.0]], 1).is_err());
        assert!(pca_fit(&[vec![1.0, 2.0], vec![3.0, 4.0]], 0).is_err());
        assert!(pca_fit(&[vec![1.0, 2.0], vec![3.0, 4.0]], 3).is_err());
    }

    #[test]
    fn projecting_the_mean_gives_zero() {
        let samples = vec![vec![1.0, 0.0, 2.0], vec![0.0, 1.0, 4.0], vec![2.0, 2.0, 0.0]];
        let fit = pca_fit(&samples, 2).unwrap();
        let proj = fit.model.project(fit.model.mean()).unwrap();
        for v in proj {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn training_projections_are_centered() {
        let samples: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..4).map(|j| ((i * 7 + j * 3) % 11) as f64).collect())
            .collect();
        let fit = pca_fit(&samples, 3).unwrap();
        let k = fit.model.k();
        let mut sums = vec![0.0f64; k];
        for s in &samples {
            for (acc, v) in sums.iter_mut().zip(fit.model.project(s).unwrap()) {
                *acc += v;
            }
        }
        for v in sums {
            assert!(v.abs() / (samples.len() as f64) < 1e-10);
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let samples: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..8).map(|j| ((i * 13 + j * 5) % 17) as f64 - 8.0).collect())
            .collect();
        let a = pca_fit(&samples, 4).unwrap();
        let b = pca_fit(&samples, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn default_component_count_matches_pipeline_default() {
        assert_eq!(DEFAULT_COMPONENTS, 100);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn projection_is_affine(a in -3.0f64..3.0) {
                let samples = vec![
                    vec![1.0, 0.0, 2.0],
                    vec![0.0, 1.0, 4.0],
                    vec![2.0, 2.0, 0.0],
                    vec![1.0, 3.0, 1.0],
                ];
                let fit = pca_fit(&samples, 2).unwrap();
                let model = &fit.model;
                let x = &samples[1];
                let blended: Vec<f64> = x
                    .iter()
                    .zip(model.mean())
                    .map(|(xi, mi)| a * xi + (1.0 - a) * mi)
                    .collect();
                let px = model.project(x).unwrap();
                let pb = model.project(&blended).unwrap();
                for (b, x) in pb.iter().zip(&px) {
                    prop_assert!((b - a * x).abs() < 1e-9);
                }
            }
        }
    }
}

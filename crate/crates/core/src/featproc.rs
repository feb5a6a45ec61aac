//! Feature post-processing before clustering: per-vector Euclidean
//! normalization followed by PCA projection to a few dimensions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featex::{FeatureMatrix, FeatureVector};
use crate::linalg::{dot, norm, symmetric_eigen};

#[derive(Debug, Error, PartialEq)]
pub enum PcaError {
    #[error("invalid component count k={k} for {n} samples of dimension {dim}")]
    InvalidK { k: usize, n: usize, dim: usize },
    #[error("PCA needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("dimension mismatch: model expects {expected}, matrix has {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Result of [`l2_normalize`]: the scaled matrix and the ids of rows that had
/// zero norm and were left untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub matrix: FeatureMatrix,
    pub warnings: Vec<String>,
}

pub fn l2_normalize(matrix: &FeatureMatrix) -> Normalized {
    let mut warnings = Vec::new();
    let rows = matrix
        .rows()
        .iter()
        .map(|r| {
            let n = norm(&r.values);
            if n > 0.0 {
                FeatureVector {
                    id: r.id.clone(),
                    values: r.values.iter().map(|v| v / n).collect(),
                }
            } else {
                warnings.push(r.id.clone());
                r.clone()
            }
        })
        .collect();
    Normalized {
        matrix: FeatureMatrix::new(rows).expect("row structure unchanged"),
        warnings,
    }
}

/// Fitted projection: `components` rows are orthonormal, eigenvalues are the
/// matching sample-covariance eigenvalues in non-increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub k: usize,
    pub dim: usize,
}

/// Flips `v` so its largest-magnitude entry is positive (first index wins ties).
fn orient(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn pca_fit(matrix: &FeatureMatrix, k: usize) -> Result<PcaModel, PcaError> {
    let n = matrix.len();
    let dim = matrix.dim();
    if n < 2 {
        return Err(PcaError::TooFewSamples(n));
    }
    if k == 0 || k > n || k > dim {
        return Err(PcaError::InvalidK { k, n, dim });
    }

    let mut mean = vec![0.0; dim];
    for row in matrix.values() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = matrix
        .values()
        .map(|row| row.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let denom = (n - 1) as f64;

    let (eigenvalues, mut components) = if dim <= n {
        covariance_route(&centered, dim, denom, k)
    } else {
        gram_route(&centered, dim, denom, k)
    };
    for c in &mut components {
        orient(c);
    }
    let eigenvalues = eigenvalues.into_iter().map(|v| v.max(0.0)).collect();
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        k,
        dim,
    })
}

fn covariance_route(
    centered: &[Vec<f64>],
    dim: usize,
    denom: f64,
    k: usize,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut cov = vec![vec![0.0; dim]; dim];
    for row in centered {
        for i in 0..dim {
            if row[i] == 0.0 {
                continue;
            }
            for j in i..dim {
                cov[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            cov[i][j] /= denom;
            cov[j][i] = cov[i][j];
        }
    }
    let (mut vals, mut vecs) = symmetric_eigen(&cov);
    vals.truncate(k);
    vecs.truncate(k);
    (vals, vecs)
}

/// Wide data (dim > n): eigen-decompose the n x n Gram matrix and map its
/// eigenvectors back to feature space. Directions beyond the data rank are
/// completed deterministically from the standard basis.
fn gram_route(
    centered: &[Vec<f64>],
    dim: usize,
    denom: f64,
    k: usize,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = centered.len();
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| dot(&centered[i], &centered[j]) / denom).collect())
        .collect();
    let (vals, vecs) = symmetric_eigen(&gram);
    let scale = vals.first().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);

    let mut out_vals = Vec::with_capacity(k);
    let mut out_vecs: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (lambda, u) in vals.iter().zip(&vecs) {
        if out_vecs.len() == k || *lambda <= scale * 1e-12 {
            break;
        }
        let mut v = vec![0.0; dim];
        for (ui, row) in u.iter().zip(centered) {
            for (vj, x) in v.iter_mut().zip(row) {
                *vj += ui * x;
            }
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        out_vals.push(*lambda);
        out_vecs.push(v);
    }
    let mut basis = 0;
    while out_vecs.len() < k {
        let mut v = vec![0.0; dim];
        v[basis] = 1.0;
        basis += 1;
        for _ in 0..2 {
            for u in &out_vecs {
                let p = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
            }
        }
        let nv = norm(&v);
        if nv > 1e-6 {
            v.iter_mut().for_each(|x| *x /= nv);
            out_vals.push(0.0);
            out_vecs.push(v);
        }
    }
    (out_vals, out_vecs)
}

pub fn pca_transform(model: &PcaModel, matrix: &FeatureMatrix) -> Result<FeatureMatrix, PcaError> {
    if matrix.dim() != model.dim {
        return Err(PcaError::DimensionMismatch {
            expected: model.dim,
            found: matrix.dim(),
        });
    }
    let rows = matrix
        .rows()
        .iter()
        .map(|r| {
            let centered: Vec<f64> = r.values.iter().zip(&model.mean).map(|(v, m)| v - m).collect();
            FeatureVector {
                id: r.id.clone(),
                values: model.components.iter().map(|c| dot(c, &centered)).collect(),
            }
        })
        .collect();
    Ok(FeatureMatrix::new(rows).expect("projected rows share dimension k"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::new(
            rows.iter()
                .enumerate()
                .map(|(i, r)| FeatureVector {
                    id: format!("r{i}"),
                    values: r.to_vec(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn normalizes_rows() {
        let out = l2_normalize(&matrix(&[&[3.0, 4.0], &[0.0, 0.0], &[0.6, 0.8]]));
        assert_eq!(out.matrix.rows()[0].values, vec![0.6, 0.8]);
        assert_eq!(out.matrix.rows()[1].values, vec![0.0, 0.0]);
        assert_eq!(out.matrix.rows()[2].values, vec![0.6, 0.8]);
        assert_eq!(out.warnings, vec!["r1".to_string()]);
    }

    #[test]
    fn collinear_data() {
        let m = matrix(&[&[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.0]]);
        let model = pca_fit(&m, 2).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((model.components[0][0] - h).abs() < 1e-12);
        assert!((model.components[0][1] - h).abs() < 1e-12);
        assert!((model.eigenvalues[0] - 2.0).abs() < 1e-12);
        assert!(model.eigenvalues[1].abs() < 1e-12);

        let t = pca_transform(&model, &m).unwrap();
        assert!(t.values().all(|r| r[1].abs() < 1e-10));
        let mean_row = matrix(&[&[2.0, 2.0]]);
        let z = pca_transform(&model, &mean_row).unwrap();
        assert!(z.rows()[0].values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn invalid_k_and_dims() {
        let m = matrix(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(pca_fit(&m, 0), Err(PcaError::InvalidK { .. })));
        assert!(matches!(pca_fit(&m, 3), Err(PcaError::InvalidK { .. })));
        assert!(matches!(pca_fit(&matrix(&[&[1.0]]), 1), Err(PcaError::TooFewSamples(1))));
        let model = pca_fit(&m, 1).unwrap();
        assert!(matches!(
            pca_transform(&model, &matrix(&[&[1.0, 2.0, 3.0]])),
            Err(PcaError::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn wide_data_completes_null_space() {
        // 3 samples in 6 dims: rank 2 after centering, k = 3 needs one filler
        let m = matrix(&[
            &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0],
            &[0.0, 1.0, 0.0, 0.0, 3.0, 0.0],
            &[2.0, 2.0, 0.0, 1.0, 0.0, 0.0],
        ]);
        let model = pca_fit(&m, 3).unwrap();
        assert_eq!(model.eigenvalues[2], 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(&model.components[i], &model.components[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn model_json_shape() {
        let model = pca_fit(&matrix(&[&[1.0, 2.0], &[2.0, 1.0], &[0.0, 0.0]]), 2).unwrap();
        let v: serde_json::Value = serde_json::to_value(&model).unwrap();
        for key in ["mean", "components", "eigenvalues", "k", "dim"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let back: PcaModel = serde_json::from_value(v).unwrap();
        assert_eq!(back, model);
    }
}

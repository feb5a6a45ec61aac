//! Per-variation feature vectors.
//!
//! Two sources are supported: the built-in `shape-stats-v1` descriptor
//! computed from a point cloud, and externally computed embeddings loaded
//! from CSV (for instance the output of a pretrained point-cloud network).

use std::collections::HashSet;
use std::io::{Read, Write};

use rand::Rng as _;
use thiserror::Error;

use crate::linalg::symmetric_eigen;
use crate::pcio::PointCloud;
use crate::rng::seeded;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("duplicate id '{0}'")]
    DuplicateId(String),
    #[error("line {line}, column {column}: malformed number '{text}'")]
    MalformedNumber {
        line: usize,
        column: usize,
        text: String,
    },
    #[error("feature CSV header must be `id,f0,...,f{{d-1}}`: {0}")]
    BadHeader(String),
    #[error("feature CSV has no data rows")]
    Empty,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub id: String,
    pub values: Vec<f64>,
}

/// Row-aligned feature vectors sharing one dimension, with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<FeatureVector>,
    dim: usize,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<FeatureVector>) -> Result<Self, FeatureError> {
        let dim = rows.first().map(|r| r.values.len()).ok_or(FeatureError::Empty)?;
        let mut seen = HashSet::new();
        for (i, r) in rows.iter().enumerate() {
            if r.values.len() != dim {
                return Err(FeatureError::DimensionMismatch {
                    line: i + 1,
                    expected: dim,
                    found: r.values.len(),
                });
            }
            if !seen.insert(r.id.as_str()) {
                return Err(FeatureError::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self { rows, dim })
    }

    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.id.clone()).collect()
    }

    pub fn values(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.iter().map(|r| r.values.as_slice())
    }

    /// Keeps the rows whose ids appear in `ids`, in the order of `ids`.
    pub fn select(&self, ids: &[String]) -> Option<FeatureMatrix> {
        let rows = ids
            .iter()
            .map(|id| self.rows.iter().find(|r| &r.id == id).cloned())
            .collect::<Option<Vec<_>>>()?;
        FeatureMatrix::new(rows).ok()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), FeatureError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["id".to_string()];
        header.extend((0..self.dim).map(|i| format!("f{i}")));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.id.clone()];
            rec.extend(r.values.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parameters of the `shape-stats-v1` descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct DescriptorSpec {
    pub pair_samples: usize,
    pub histogram_bins: usize,
    pub axis_bins: usize,
}

impl Default for DescriptorSpec {
    fn default() -> Self {
        Self {
            pair_samples: 2048,
            histogram_bins: 32,
            axis_bins: 8,
        }
    }
}

impl DescriptorSpec {
    pub const NAME: &'static str = "shape-stats-v1";

    pub fn dim(&self) -> usize {
        3 + self.histogram_bins + 3 * self.axis_bins
    }
}

fn bin_of(value: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let t = (value - lo) / (hi - lo);
    ((t * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

/// Computes the `shape-stats-v1` descriptor:
/// normalized moment eigenvalues, a D2 pair-distance histogram and one
/// projection histogram per principal axis.
pub fn extract_descriptor(cloud: &PointCloud, spec: &DescriptorSpec, seed: u64) -> FeatureVector {
    assert!(!cloud.is_empty(), "descriptor of an empty cloud");
    let mut pts = cloud.points.clone();
    pts.sort_by(|a, b| {
        a[0].total_cmp(&b[0])
            .then(a[1].total_cmp(&b[1]))
            .then(a[2].total_cmp(&b[2]))
    });
    let n = pts.len();
    let nf = n as f64;

    let mut mean = [0.0; 3];
    for p in &pts {
        for k in 0..3 {
            mean[k] += p[k];
        }
    }
    for m in &mut mean {
        *m /= nf;
    }
    let centered: Vec<[f64; 3]> = pts
        .iter()
        .map(|p| [p[0] - mean[0], p[1] - mean[1], p[2] - mean[2]])
        .collect();
    let mut moment = vec![vec![0.0; 3]; 3];
    for c in &centered {
        for i in 0..3 {
            for j in 0..3 {
                moment[i][j] += c[i] * c[j];
            }
        }
    }
    for row in &mut moment {
        for v in row.iter_mut() {
            *v /= nf;
        }
    }
    let (eig, axes) = symmetric_eigen(&moment);
    let eig: Vec<f64> = eig.into_iter().map(|v| v.max(0.0)).collect();
    let total: f64 = eig.iter().sum();

    let mut values = Vec::with_capacity(spec.dim());
    if total > 0.0 {
        values.extend(eig.iter().map(|v| v / total));
    } else {
        values.extend([0.0; 3]);
    }

    // D2 shape distribution
    let mut d2 = vec![0.0; spec.histogram_bins];
    if n < 2 || spec.pair_samples == 0 {
        d2[0] = 1.0;
    } else {
        let mut rng = seeded(seed);
        let dists: Vec<f64> = (0..spec.pair_samples)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let (a, b) = (pts[i], pts[j]);
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
            })
            .collect();
        let max = dists.iter().cloned().fold(0.0, f64::max);
        if max > 0.0 {
            for d in &dists {
                d2[bin_of(d / max, 0.0, 1.0, spec.histogram_bins)] += 1.0;
            }
            let total = dists.len() as f64;
            d2.iter_mut().for_each(|c| *c /= total);
        } else {
            d2[0] = 1.0;
        }
    }
    values.extend(d2);

    // projection histograms along principal axes
    for axis in &axes {
        let mut proj: Vec<f64> = centered
            .iter()
            .map(|c| c[0] * axis[0] + c[1] * axis[1] + c[2] * axis[2])
            .collect();
        let skew: f64 = proj.iter().map(|p| p * p * p).sum();
        let spread = proj.iter().map(|p| p.abs()).fold(0.0, f64::max);
        let flip = if skew.abs() > 1e-9 * spread.powi(3) * nf {
            skew < 0.0
        } else {
            let (imax, _) = axis
                .iter()
                .enumerate()
                .fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            axis[imax] < 0.0
        };
        if flip {
            proj.iter_mut().for_each(|p| *p = -*p);
        }
        let lo = proj.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut hist = vec![0.0; spec.axis_bins];
        if hi > lo {
            for p in &proj {
                hist[bin_of(*p, lo, hi, spec.axis_bins)] += 1.0;
            }
            hist.iter_mut().for_each(|c| *c /= nf);
        } else {
            hist[0] = 1.0;
        }
        values.extend(hist);
    }

    FeatureVector {
        id: cloud.id.clone(),
        values,
    }
}

/// Loads embeddings from a CSV with header `id,f0,...,f{d-1}`.
pub fn load_external_features<R: Read>(source: R) -> Result<FeatureMatrix, FeatureError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(FeatureError::BadHeader("missing header".into())),
    };
    if header.get(0).map(str::trim) != Some("id") || header.len() < 2 {
        return Err(FeatureError::BadHeader(format!("{:?}", header.iter().collect::<Vec<_>>())));
    }
    for (i, name) in header.iter().skip(1).enumerate() {
        if name.trim() != format!("f{i}") {
            return Err(FeatureError::BadHeader(format!("column {} is '{name}'", i + 1)));
        }
    }
    let dim = header.len() - 1;

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() == 1 && rec.get(0).is_some_and(|s| s.trim().is_empty()) {
            continue;
        }
        if rec.len() != dim + 1 {
            return Err(FeatureError::DimensionMismatch {
                line,
                expected: dim,
                found: rec.len().saturating_sub(1),
            });
        }
        let id = rec[0].trim().to_string();
        let values = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(c, text)| {
                text.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| FeatureError::MalformedNumber {
                        line,
                        column: c + 2,
                        text: text.to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if !seen.insert(id.clone()) {
            return Err(FeatureError::DuplicateId(id));
        }
        rows.push(FeatureVector { id, values });
    }
    FeatureMatrix::new(rows)
}

//! Point-cloud ingestion: whitespace `xyz` text and ASCII PLY, plus seeded
//! down-sampling without replacement.

use std::io::{BufRead, BufReader, Read, Write};

use rand::seq::index;
use thiserror::Error;

use crate::rng::seeded;

#[derive(Debug, Error)]
pub enum PcioError {
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("point cloud '{0}' contains no points")]
    EmptyCloud(String),
    #[error("unsupported PLY content: {0}")]
    UnsupportedPlyElement(String),
    #[error("cloud '{id}' has {available} points, cannot sample {requested} without replacement")]
    InsufficientPoints {
        id: String,
        requested: usize,
        available: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PcioError>;

/// Input formats understood by [`parse_point_cloud`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Xyz,
    PlyAscii,
}

/// Raw 3D point set for one environment variation.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub id: String,
    pub points: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn new(id: impl Into<String>, points: Vec<[f64; 3]>) -> Self {
        Self {
            id: id.into(),
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes the cloud as `xyz` text. Rust's shortest round-trip float
    /// formatting guarantees re-parsing yields the same `f64` values.
    pub fn write_xyz<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for p in &self.points {
            writeln!(out, "{} {} {}", p[0], p[1], p[2])?;
        }
        Ok(())
    }
}

pub fn parse_point_cloud<R: Read>(source: R, format: CloudFormat, id: &str) -> Result<PointCloud> {
    let reader = BufReader::new(source);
    let points = match format {
        CloudFormat::Xyz => parse_xyz(reader)?,
        CloudFormat::PlyAscii => parse_ply(reader)?,
    };
    if points.is_empty() {
        return Err(PcioError::EmptyCloud(id.to_string()));
    }
    Ok(PointCloud::new(id, points))
}

fn parse_coords<'a>(
    mut fields: impl Iterator<Item = &'a str>,
    line: usize,
) -> Result<[f64; 3]> {
    let mut p = [0.0; 3];
    for slot in p.iter_mut() {
        let tok = fields.next().ok_or_else(|| PcioError::MalformedRecord {
            line,
            reason: "expected three coordinates".into(),
        })?;
        let v: f64 = tok.parse().map_err(|_| PcioError::MalformedRecord {
            line,
            reason: format!("'{tok}' is not a number"),
        })?;
        if !v.is_finite() {
            return Err(PcioError::MalformedRecord {
                line,
                reason: format!("non-finite coordinate '{tok}'"),
            });
        }
        *slot = v;
    }
    Ok(p)
}

fn parse_xyz<R: BufRead>(reader: R) -> Result<Vec<[f64; 3]>> {
    let mut points = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(PcioError::MalformedRecord {
                line: lineno,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        points.push(parse_coords(fields.into_iter(), lineno)?);
    }
    Ok(points)
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
    has_list: bool,
}

fn parse_ply<R: BufRead>(reader: R) -> Result<Vec<[f64; 3]>> {
    let mut lines = reader.lines().enumerate();
    let mut next_line = || -> Result<Option<(usize, String)>> {
        match lines.next() {
            Some((i, l)) => Ok(Some((i + 1, l?))),
            None => Ok(None),
        }
    };

    match next_line()? {
        Some((_, l)) if l.trim() == "ply" => {}
        Some((n, _)) => {
            return Err(PcioError::MalformedRecord {
                line: n,
                reason: "missing 'ply' magic".into(),
            })
        }
        None => return Ok(Vec::new()),
    }

    let mut elements: Vec<PlyElement> = Vec::new();
    let mut saw_format = false;
    loop {
        let (lineno, line) = next_line()?.ok_or_else(|| PcioError::MalformedRecord {
            line: 0,
            reason: "unexpected end of file inside PLY header".into(),
        })?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("format") => {
                let kind = toks.next().unwrap_or("");
                if kind != "ascii" {
                    return Err(PcioError::UnsupportedPlyElement(format!(
                        "format '{kind}' (only ascii 1.0 is supported)"
                    )));
                }
                saw_format = true;
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let name = toks.next().unwrap_or("").to_string();
                let count = toks
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| PcioError::MalformedRecord {
                        line: lineno,
                        reason: "element declaration needs a count".into(),
                    })?;
                elements.push(PlyElement {
                    name,
                    count,
                    properties: Vec::new(),
                    has_list: false,
                });
            }
            Some("property") => {
                let el = elements.last_mut().ok_or_else(|| PcioError::MalformedRecord {
                    line: lineno,
                    reason: "property before any element".into(),
                })?;
                let rest: Vec<&str> = toks.collect();
                if rest.first() == Some(&"list") {
                    el.has_list = true;
                }
                el.properties
                    .push(rest.last().copied().unwrap_or("").to_string());
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(PcioError::MalformedRecord {
                    line: lineno,
                    reason: format!("unknown header keyword '{other}'"),
                })
            }
        }
    }
    if !saw_format {
        return Err(PcioError::UnsupportedPlyElement("missing format line".into()));
    }
    if !elements.iter().any(|e| e.name == "vertex") {
        return Err(PcioError::UnsupportedPlyElement("no vertex element".into()));
    }

    let mut points = Vec::new();
    for el in &elements {
        let is_vertex = el.name == "vertex";
        if is_vertex {
            let xyz = el.properties.iter().take(3).map(String::as_str);
            if el.has_list || !xyz.eq(["x", "y", "z"]) {
                return Err(PcioError::UnsupportedPlyElement(
                    "vertex element must start with scalar x, y, z properties".into(),
                ));
            }
        }
        let mut seen = 0;
        while seen < el.count {
            let (lineno, line) = next_line()?.ok_or_else(|| PcioError::MalformedRecord {
                line: 0,
                reason: format!("file ended before all '{}' records were read", el.name),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            seen += 1;
            if is_vertex {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != el.properties.len() {
                    return Err(PcioError::MalformedRecord {
                        line: lineno,
                        reason: format!(
                            "expected {} vertex properties, found {}",
                            el.properties.len(),
                            fields.len()
                        ),
                    });
                }
                points.push(parse_coords(fields.into_iter(), lineno)?);
            }
        }
    }
    Ok(points)
}

/// Draws `n` points uniformly without replacement. Output order follows the
/// sampler's draw order and is fully determined by `seed`.
pub fn sample_points(cloud: &PointCloud, n: usize, seed: u64) -> Result<PointCloud> {
    if n > cloud.points.len() {
        return Err(PcioError::InsufficientPoints {
            id: cloud.id.clone(),
            requested: n,
            available: cloud.points.len(),
        });
    }
    let mut rng = seeded(seed);
    let picked = index::sample(&mut rng, cloud.points.len(), n);
    Ok(PointCloud::new(
        cloud.id.clone(),
        picked.iter().map(|i| cloud.points[i]).collect(),
    ))
}

//! Success-rate statistics, low-performer selection, comparison tables, the
//! cluster scatter plot and run directories.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cluster::{Partition, PartitionMethod};
use crate::featex::FeatureMatrix;
use crate::featproc::PcaModel;
use crate::gslsim::{RunConfig, RunResult};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("rate for '{id}' is {rate}, outside [0, 1]")]
    RateOutOfRange { id: String, rate: f64 },
    #[error("cannot select {n} of {available} variations")]
    InvalidN { n: usize, available: usize },
    #[error("scatter needs 2-D features, got {0}")]
    DimensionMismatch(usize),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {reason}", path.display())]
    Corrupt { path: PathBuf, reason: String },
    #[error("{}: digest does not match manifest", path.display())]
    DigestMismatch { path: PathBuf },
}

type Result<T, E = EvalError> = std::result::Result<T, E>;

/// Summary of per-variation success rates. Quartiles use linear
/// interpolation at position `1 + (n-1)q` of the sorted rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub per_variation: BTreeMap<String, f64>,
    pub average: f64,
    pub median: f64,
    pub high: f64,
    pub low: f64,
    pub upper_quartile: f64,
    pub lower_quartile: f64,
}

/// Quantile `q` of ascending `sorted` by linear interpolation.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(rates: &BTreeMap<String, f64>) -> Result<EvalStats> {
    if rates.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if let Some((id, &rate)) = rates.iter().find(|(_, r)| !(0.0..=1.0).contains(*r)) {
        return Err(EvalError::RateOutOfRange { id: id.clone(), rate });
    }
    let mut sorted: Vec<f64> = rates.values().copied().collect();
    sorted.sort_by(f64::total_cmp);
    Ok(EvalStats {
        per_variation: rates.clone(),
        average: sorted.iter().sum::<f64>() / sorted.len() as f64,
        median: quantile(&sorted, 0.5),
        high: sorted[sorted.len() - 1],
        low: sorted[0],
        upper_quartile: quantile(&sorted, 0.75),
        lower_quartile: quantile(&sorted, 0.25),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowRule {
    /// Every id with a rate strictly below the median.
    #[default]
    BelowMedian,
    /// The `n` lowest rates, ties broken by id.
    WorstN(usize),
}

/// Low performers sorted by ascending rate, then id.
pub fn select_low_performers(rates: &BTreeMap<String, f64>, rule: LowRule) -> Result<Vec<String>> {
    if rates.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut order: Vec<(&String, f64)> = rates.iter().map(|(id, &r)| (id, r)).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let take = match rule {
        LowRule::BelowMedian => {
            let mut sorted: Vec<f64> = rates.values().copied().collect();
            sorted.sort_by(f64::total_cmp);
            let median = quantile(&sorted, 0.5);
            order.iter().take_while(|(_, r)| *r < median).count()
        }
        LowRule::WorstN(n) if n > rates.len() => {
            return Err(EvalError::InvalidN { n, available: rates.len() })
        }
        LowRule::WorstN(n) => n,
    };
    Ok(order[..take].iter().map(|(id, _)| (*id).clone()).collect())
}

pub fn format_percent(rate: f64) -> String {
    format!("{:.1}%", rate * 100.0)
}

/// One row of a comparison table; `n_specialists` is `None` for generalists.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub n_specialists: Option<usize>,
    pub stats: EvalStats,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonTable {
    pub markdown: String,
    pub csv: String,
}

pub fn comparison_table(rows: &[ComparisonRow]) -> Result<ComparisonTable> {
    if rows.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut markdown = String::from("| Agent | Specialists | Average success |\n|---|---|---|\n");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["agent", "n_specialists", "average"]).expect("in-memory write");
    for row in rows {
        let count = row.n_specialists.map(|n| n.to_string());
        writeln!(
            markdown,
            "| {} | {} | {} |",
            row.label,
            count.as_deref().unwrap_or("-"),
            format_percent(row.stats.average)
        )
        .expect("string write");
        w.write_record([
            row.label.as_str(),
            count.as_deref().unwrap_or(""),
            &row.stats.average.to_string(),
        ])
        .expect("in-memory write");
    }
    let csv = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields");
    Ok(ComparisonTable { markdown, csv })
}

/// Parses the CSV half of a [`ComparisonTable`] back into (agent, count, average).
pub fn read_comparison_csv(text: &str) -> Result<Vec<(String, Option<usize>, f64)>> {
    let corrupt = |reason: String| EvalError::Corrupt {
        path: PathBuf::from("<comparison csv>"),
        reason,
    };
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| corrupt(e.to_string()))?;
        if rec.len() != 3 {
            return Err(corrupt(format!("expected 3 fields, got {}", rec.len())));
        }
        let count = match &rec[1] {
            "" => None,
            s => Some(s.parse().map_err(|_| corrupt(format!("bad count '{s}'")))?),
        };
        let avg = rec[2].parse().map_err(|_| corrupt(format!("bad average '{}'", &rec[2])))?;
        out.push((rec[0].to_string(), count, avg));
    }
    Ok(out)
}

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const UNASSIGNED: &str = "#7f7f7f";
const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Writes a standalone SVG scatter of 2-D features coloured by cluster.
pub fn cluster_scatter_svg<W: Write>(features2d: &FeatureMatrix, partition: &Partition, mut out: W) -> Result<()> {
    if features2d.dim() != 2 {
        return Err(EvalError::DimensionMismatch(features2d.dim()));
    }
    let (mx, my) = (WIDTH * 0.05, HEIGHT * 0.05);
    let bounds = |axis: usize| {
        let vals: Vec<f64> = features2d.values().map(|r| r[axis]).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let ((x0, x1), (y0, y1)) = (bounds(0), bounds(1));
    let map = |v: f64, lo: f64, hi: f64, span: f64| {
        if hi > lo {
            (v - lo) / (hi - lo) * span
        } else {
            span / 2.0
        }
    };
    let cluster_of = partition.cluster_of();

    let mut svg = String::new();
    svg.push_str(concat!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"600\" viewBox=\"0 0 800 600\">\n",
    ));
    for row in features2d.rows() {
        let x = mx + map(row.values[0], x0, x1, WIDTH - 2.0 * mx);
        // SVG y grows downwards
        let y = HEIGHT - my - map(row.values[1], y0, y1, HEIGHT - 2.0 * my);
        let colour = cluster_of
            .get(row.id.as_str())
            .map_or(UNASSIGNED, |&c| PALETTE[c % PALETTE.len()]);
        let id = xml_escape(&row.id);
        writeln!(svg, "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"5\" fill=\"{colour}\"/>").unwrap();
        writeln!(
            svg,
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" font-family=\"sans-serif\">{id}</text>",
            x + 7.0,
            y + 3.0
        )
        .unwrap();
    }
    svg.push_str("  <g font-size=\"12\" font-family=\"sans-serif\">\n");
    for (c, cluster) in partition.clusters.iter().enumerate() {
        let y = my + 16.0 * c as f64;
        let colour = PALETTE[c % PALETTE.len()];
        writeln!(
            svg,
            "    <rect x=\"{:.2}\" y=\"{y:.2}\" width=\"10\" height=\"10\" fill=\"{colour}\"/>",
            WIDTH - mx - 120.0
        )
        .unwrap();
        writeln!(
            svg,
            "    <text x=\"{:.2}\" y=\"{:.2}\">cluster {c} (n={})</text>",
            WIDTH - mx - 105.0,
            y + 9.0,
            cluster.members.len()
        )
        .unwrap();
    }
    svg.push_str("  </g>\n</svg>\n");
    out.write_all(svg.as_bytes()).map_err(|source| EvalError::Io {
        path: PathBuf::from("<svg sink>"),
        source,
    })
}

/// Per-variation rates as `id,rate` CSV.
pub fn write_rates_csv(rates: &BTreeMap<String, f64>) -> String {
    let mut s = String::from("id,rate\n");
    for (id, r) in rates {
        writeln!(s, "{id},{r}").unwrap();
    }
    s
}

fn parse_rows(path: &Path, text: &str, header: &str) -> Result<Vec<Vec<String>>> {
    let corrupt = |reason: String| EvalError::Corrupt {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(corrupt(format!("expected header '{header}'")));
    }
    let width = header.split(',').count();
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<String> = line.split(',').map(str::to_string).collect();
            if fields.len() == width {
                Ok(fields)
            } else {
                Err(corrupt(format!("line {}: expected {width} fields", i + 2)))
            }
        })
        .collect()
}

fn parse_rate(path: &Path, text: &str) -> Result<f64> {
    text.parse().map_err(|_| EvalError::Corrupt {
        path: path.to_path_buf(),
        reason: format!("bad rate '{text}'"),
    })
}

pub fn read_rates_csv(path: &Path, text: &str) -> Result<BTreeMap<String, f64>> {
    parse_rows(path, text, "id,rate")?
        .into_iter()
        .map(|f| Ok((f[0].clone(), parse_rate(path, &f[1])?)))
        .collect()
}

/// Specialist rates as `id,specialist,rate` CSV.
pub fn write_specialist_rates_csv(rates: &BTreeMap<String, (usize, f64)>) -> String {
    let mut s = String::from("id,specialist,rate\n");
    for (id, (c, r)) in rates {
        writeln!(s, "{id},{c},{r}").unwrap();
    }
    s
}

pub fn read_specialist_rates_csv(path: &Path, text: &str) -> Result<BTreeMap<String, (usize, f64)>> {
    parse_rows(path, text, "id,specialist,rate")?
        .into_iter()
        .map(|f| {
            let c = f[1].parse().map_err(|_| EvalError::Corrupt {
                path: path.to_path_buf(),
                reason: format!("bad specialist index '{}'", f[1]),
            })?;
            Ok((f[0].clone(), (c, parse_rate(path, &f[2])?)))
        })
        .collect()
}

/// The parts of a run that reports are built from; obtainable both from an
/// in-memory [`RunResult`] and from a run directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub partition: Partition,
    pub phase1: BTreeMap<String, f64>,
    pub specialist: BTreeMap<String, (usize, f64)>,
    pub final_rates: BTreeMap<String, f64>,
}

impl RunSummary {
    pub fn from_result(result: &RunResult) -> Self {
        let cluster_of = result.partition.cluster_of();
        Self {
            partition: result.partition.clone(),
            phase1: result.phase1_stats.per_variation.clone(),
            specialist: result
                .specialist_rates
                .iter()
                .map(|(id, &r)| (id.clone(), (cluster_of[id.as_str()], r)))
                .collect(),
            final_rates: result.final_stats.per_variation.clone(),
        }
    }

    pub fn method(&self) -> PartitionMethod {
        self.partition.method
    }

    fn selected(&self) -> impl Iterator<Item = &String> {
        self.specialist.keys()
    }

    fn subset(&self, rates: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
        self.selected().map(|id| (id.clone(), rates[id])).collect()
    }

    /// Per-specialist (size, mean success) in cluster order.
    pub fn per_specialist(&self) -> Vec<(usize, f64)> {
        self.partition
            .clusters
            .iter()
            .enumerate()
            .map(|(c, cl)| {
                let rates: Vec<f64> =
                    self.specialist.values().filter(|(k, _)| *k == c).map(|(_, r)| *r).collect();
                let mean = if rates.is_empty() { 0.0 } else { rates.iter().sum::<f64>() / rates.len() as f64 };
                (cl.members.len(), mean)
            })
            .collect()
    }
}

fn stats_of(rates: BTreeMap<String, f64>) -> Result<EvalStats> {
    summarize(&rates)
}

/// Markdown report juxtaposing runs: the method comparison on the selected
/// variations, cluster sizes, and per-specialist success.
pub fn render_report(runs: &[RunSummary]) -> Result<String> {
    let first = runs.first().ok_or(EvalError::EmptyInput)?;
    let mut rows = vec![ComparisonRow {
        label: "Generalist (Phase 1)".into(),
        n_specialists: None,
        stats: stats_of(first.subset(&first.phase1))?,
    }];
    for run in runs {
        let spec: BTreeMap<String, f64> = run.specialist.iter().map(|(id, (_, r))| (id.clone(), *r)).collect();
        rows.push(ComparisonRow {
            label: format!("Specialists ({})", run.method()),
            n_specialists: Some(run.partition.k),
            stats: stats_of(spec)?,
        });
    }
    for run in runs {
        rows.push(ComparisonRow {
            label: format!("Generalist (Phase 3, {})", run.method()),
            n_specialists: Some(run.partition.k),
            stats: stats_of(run.subset(&run.final_rates))?,
        });
    }
    let table = comparison_table(&rows)?;

    let mut md = String::from("# Run report\n\n## Average success on the selected variations\n\n");
    md.push_str(&table.markdown);
    md.push_str("\n## Cluster sizes\n\n| Method | Specialists | Sorted sizes |\n|---|---|---|\n");
    for run in runs {
        let sizes: Vec<String> = run.partition.sorted_sizes().iter().map(usize::to_string).collect();
        writeln!(md, "| {} | {} | ({}) |", run.method(), run.partition.k, sizes.join(", ")).unwrap();
    }
    md.push_str("\n## Per-specialist success\n\n| Method | Specialist | Size | Success |\n|---|---|---|---|\n");
    for run in runs {
        for (c, (size, mean)) in run.per_specialist().into_iter().enumerate() {
            writeln!(md, "| {} | {c} | {size} | {} |", run.method(), format_percent(mean)).unwrap();
        }
    }
    let all = stats_of(first.phase1.clone())?;
    md.push_str("\n## Phase-1 generalist over all variations\n\n");
    md.push_str("| Average | Median | High | Low | Upper quartile | Lower quartile |\n|---|---|---|---|---|---|\n");
    writeln!(
        md,
        "| {} | {} | {} | {} | {} | {} |",
        format_percent(all.average),
        format_percent(all.median),
        format_percent(all.high),
        format_percent(all.low),
        format_percent(all.upper_quartile),
        format_percent(all.lower_quartile)
    )
    .unwrap();
    Ok(md)
}

pub const RUN_FILES: [&str; 9] = [
    "config.json",
    "features.csv",
    "pca_model.json",
    "partition.json",
    "phase1_rates.csv",
    "specialist_rates.csv",
    "final_rates.csv",
    "report.md",
    "scatter.svg",
];
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub method: PartitionMethod,
    pub master_seed: u64,
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(value).expect("plain data serializes");
    s.push(b'\n');
    s
}

/// Writes the ten run artifacts into `dir` (created if needed) and returns
/// the manifest.
pub fn persist_run(result: &RunResult, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let summary = RunSummary::from_result(result);
    let mut features = Vec::new();
    result.features.write_csv(&mut features).map_err(|e| EvalError::Corrupt {
        path: dir.join("features.csv"),
        reason: e.to_string(),
    })?;
    let mut svg = Vec::new();
    cluster_scatter_svg(&result.projected, &result.partition, &mut svg)?;
    let mut report = render_report(std::slice::from_ref(&summary))?;
    write_run_notes(result, &mut report);

    let contents: [Vec<u8>; 9] = [
        to_json(&result.config),
        features,
        to_json(&result.pca),
        to_json(&result.partition),
        write_rates_csv(&summary.phase1).into_bytes(),
        write_specialist_rates_csv(&summary.specialist).into_bytes(),
        write_rates_csv(&summary.final_rates).into_bytes(),
        report.into_bytes(),
        svg,
    ];
    let mut files = Vec::new();
    for (name, bytes) in RUN_FILES.iter().zip(&contents) {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        files.push(ManifestEntry {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
    }
    let manifest = Manifest {
        method: result.method,
        master_seed: result.config.master_seed,
        files,
    };
    let path = dir.join(MANIFEST);
    fs::write(&path, to_json(&manifest)).map_err(io_err(&path))?;
    Ok(manifest)
}

fn write_run_notes(result: &RunResult, md: &mut String) {
    let d = &result.demos;
    write!(
        md,
        "\n## Run details\n\n- method: {}\n- master seed: {}\n- selected variations: {}\n\
         - adjusted Rand index vs archetypes: {:.4}\n\
         - demonstrations: {} of {} requested ({} from specialists, {} from the generalist, {} attempts)\n\
         - demo shortfall: {}\n\
         - episodes: phase 1 {}, specialists {}, fine-tuning {}\n",
        result.method,
        result.config.master_seed,
        result.selected.len(),
        result.ari,
        d.collected,
        d.requested,
        d.from_specialists,
        d.from_generalist,
        d.attempts,
        d.total_shortfall(),
        result.budget.phase1,
        result.budget.specialists,
        result.budget.finetune,
    )
    .unwrap();
    for (id, missing) in &d.shortfall {
        writeln!(md, "  - {id}: {missing} missing").unwrap();
    }
}

/// Reads `manifest.json` and checks every listed file against its digest.
pub fn verify_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read(&path).map_err(io_err(&path))?;
    let manifest: Manifest = serde_json::from_slice(&text).map_err(|e| EvalError::Corrupt {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    for entry in &manifest.files {
        let p = dir.join(&entry.file);
        let bytes = fs::read(&p).map_err(io_err(&p))?;
        if sha256_hex(&bytes) != entry.sha256 {
            return Err(EvalError::DigestMismatch { path: p });
        }
    }
    for name in RUN_FILES {
        if !manifest.files.iter().any(|e| e.file == name) {
            return Err(EvalError::Corrupt {
                path,
                reason: format!("{name} is not listed"),
            });
        }
    }
    Ok(manifest)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| EvalError::Corrupt {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn read_partition(path: &Path) -> Result<Partition> {
    read_json(path)
}

pub fn read_pca_model(path: &Path) -> Result<PcaModel> {
    read_json(path)
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    read_json(path)
}

/// Verifies a run directory and loads what reports need.
pub fn load_run(dir: &Path) -> Result<RunSummary> {
    verify_manifest(dir)?;
    let p = |name: &str| dir.join(name);
    Ok(RunSummary {
        partition: read_partition(&p("partition.json"))?,
        phase1: read_rates_csv(&p("phase1_rates.csv"), &read_text(&p("phase1_rates.csv"))?)?,
        specialist: read_specialist_rates_csv(
            &p("specialist_rates.csv"),
            &read_text(&p("specialist_rates.csv"))?,
        )?,
        final_rates: read_rates_csv(&p("final_rates.csv"), &read_text(&p("final_rates.csv"))?)?,
    })
}

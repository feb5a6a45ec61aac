//! `taskpart` command line: extract, partition, simulate, pipeline, report.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or validation
//! failure.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::cluster::{
    assign_balanced_greedy_with, assign_random, assign_vanilla, kmeans, optimal_balanced_assignment,
    CapacityRule, KMeansParams, Partition, PartitionMethod,
};
use crate::evalrep::{self, EvalError, RunSummary};
use crate::featex::{extract_descriptor, load_external_features, DescriptorSpec, FeatureError, FeatureMatrix};
use crate::featproc::{l2_normalize, pca_fit, pca_transform};
use crate::gslsim::{self, RunConfig, SimError};
use crate::pcio::{parse_point_cloud, sample_points, CloudFormat, PcioError};
use crate::rng::derive_seed;

pub const THREADS_ENV: &str = "TASKPART_THREADS";

#[derive(Debug, Parser)]
#[command(name = "taskpart", version, about = "Point-cloud feature based task partitioning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Xyz,
    Ply,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DescriptorArg {
    #[value(name = "shape-stats-v1")]
    ShapeStatsV1,
    External,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Balanced,
    Vanilla,
    Random,
    /// Exact minimum-cost balanced assignment (at most 64 rows).
    Optimal,
}

impl From<MethodArg> for PartitionMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Balanced => PartitionMethod::BalancedGreedy,
            MethodArg::Vanilla => PartitionMethod::KmeansVanilla,
            MethodArg::Random => PartitionMethod::Random,
            MethodArg::Optimal => PartitionMethod::OptimalBalanced,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CapacityArg {
    FloorExtra,
    Ceil,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute one feature vector per point cloud.
    Extract {
        /// A cloud file or a directory of `.xyz` / `.ply` files.
        #[arg(long)]
        input: PathBuf,
        /// Cloud format; inferred from the file extension when omitted.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long, default_value_t = 10_000)]
        sample: usize,
        #[arg(long, value_enum, default_value = "shape-stats-v1")]
        descriptor: DescriptorArg,
        /// Feature CSV for `--descriptor external`.
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Normalize, project and cluster a feature CSV.
    Partition {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "balanced")]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        pca_k: usize,
        #[arg(long, value_enum, default_value = "floor-extra")]
        capacity: CapacityArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Write the simulator's variations and a dense point cloud per variation.
    Simulate {
        /// Run configuration JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the three-phase loop and persist the run directory.
    Pipeline {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "balanced")]
        method: MethodArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Combine run directories into one Markdown report.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, num_args = 1..)]
        compare: Vec<PathBuf>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn usage(msg: impl Display) -> Failure {
    Failure { code: 2, message: msg.to_string() }
}

fn runtime(msg: impl Display) -> Failure {
    Failure { code: 1, message: msg.to_string() }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    runtime(format!("{}: {e}", path.display()))
}

fn feature_failure(path: &Path, e: FeatureError) -> Failure {
    match e {
        FeatureError::Io(io) => io_failure(path, io),
        other => usage(format!("{}: {other}", path.display())),
    }
}

fn eval_failure(e: EvalError) -> Failure {
    match e {
        EvalError::Io { .. } => runtime(e),
        other => usage(other),
    }
}

/// Worker count from `TASKPART_THREADS`; 0 or unset means automatic.
pub fn threads_from_env() -> Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) if v.trim().is_empty() => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'"))),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(runtime)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_failure(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_failure(path, e))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("taskpart: {}", f.message);
            f.code
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Extract {
            input,
            format,
            sample,
            descriptor,
            features,
            seed,
            out,
        } => cmd_extract(&input, format, sample, descriptor, features.as_deref(), seed, &out),
        Command::Partition {
            features,
            k,
            method,
            seed,
            pca_k,
            capacity,
            out,
            svg,
        } => cmd_partition(&features, k, method.into(), seed, pca_k, capacity, &out, svg.as_deref()),
        Command::Simulate { config, points, out } => cmd_simulate(config.as_deref(), points, &out),
        Command::Pipeline { config, method, out } => cmd_pipeline(config.as_deref(), method.into(), &out),
        Command::Report { run, compare, out } => cmd_report(&run, &compare, out.as_deref()),
    }
}

fn format_of(path: &Path, given: Option<FormatArg>) -> Option<CloudFormat> {
    match given {
        Some(FormatArg::Xyz) => Some(CloudFormat::Xyz),
        Some(FormatArg::Ply) => Some(CloudFormat::PlyAscii),
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("xyz") => Some(CloudFormat::Xyz),
            Some("ply") => Some(CloudFormat::PlyAscii),
            _ => None,
        },
    }
}

fn cloud_files(input: &Path, format: Option<FormatArg>) -> Result<Vec<(PathBuf, CloudFormat)>, Failure> {
    let meta = fs::metadata(input).map_err(|e| io_failure(input, e))?;
    if meta.is_file() {
        let fmt = format_of(input, format)
            .ok_or_else(|| usage(format!("{}: cannot infer format, pass --format", input.display())))?;
        return Ok(vec![(input.to_path_buf(), fmt)]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(input).map_err(|e| io_failure(input, e))? {
        let path = entry.map_err(|e| io_failure(input, e))?.path();
        if !path.is_file() {
            continue;
        }
        let ext = path.extension().and_then(|e| e.to_str());
        let wanted = match format {
            Some(FormatArg::Xyz) => ext == Some("xyz"),
            Some(FormatArg::Ply) => ext == Some("ply"),
            None => matches!(ext, Some("xyz" | "ply")),
        };
        if wanted {
            let fmt = format_of(&path, format).expect("extension checked");
            files.push((path, fmt));
        }
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    if files.is_empty() {
        return Err(usage(format!("{}: no point-cloud files found", input.display())));
    }
    Ok(files)
}

const SAMPLE_STREAM: u64 = 1;
const DESCRIPTOR_STREAM: u64 = 2;

fn cmd_extract(
    input: &Path,
    format: Option<FormatArg>,
    sample: usize,
    descriptor: DescriptorArg,
    features: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<(), Failure> {
    let matrix = if descriptor == DescriptorArg::External {
        let path = features.ok_or_else(|| usage("--descriptor external needs --features"))?;
        let file = fs::File::open(path).map_err(|e| io_failure(path, e))?;
        load_external_features(file).map_err(|e| feature_failure(path, e))?
    } else {
        if sample == 0 {
            return Err(usage("--sample must be positive"));
        }
        let files = cloud_files(input, format)?;
        let spec = DescriptorSpec::default();
        let rows = pool(threads_from_env()?)?.install(|| {
            files
                .par_iter()
                .enumerate()
                .map(|(i, (path, fmt))| {
                    let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("cloud").to_string();
                    let file = fs::File::open(path).map_err(|e| io_failure(path, e))?;
                    let cloud = parse_point_cloud(std::io::BufReader::new(file), *fmt, &id).map_err(|e| match e {
                        PcioError::Io(io) => io_failure(path, io),
                        other => usage(format!("{}: {other}", path.display())),
                    })?;
                    let sampled = sample_points(&cloud, sample, derive_seed(derive_seed(seed, SAMPLE_STREAM), i as u64))
                        .map_err(usage)?;
                    Ok(extract_descriptor(&sampled, &spec, derive_seed(derive_seed(seed, DESCRIPTOR_STREAM), i as u64)))
                })
                .collect::<Result<Vec<_>, Failure>>()
        })?;
        FeatureMatrix::new(rows).map_err(usage)?
    };
    let mut bytes = Vec::new();
    matrix.write_csv(&mut bytes).map_err(|e| feature_failure(out, e))?;
    write_file(out, &bytes)?;
    println!("wrote {} feature vectors of dimension {} to {}", matrix.len(), matrix.dim(), out.display());
    Ok(())
}

/// Normalize, project and cluster `features` with the given method.
pub fn partition_features(
    features: &FeatureMatrix,
    k: usize,
    method: PartitionMethod,
    seed: u64,
    pca_k: usize,
    rule: CapacityRule,
) -> Result<(Partition, Option<FeatureMatrix>), Failure> {
    if k == 0 || k > features.len() {
        return Err(usage(format!("--k must be in 1..={}, got {k}", features.len())));
    }
    let project = || -> Result<FeatureMatrix, Failure> {
        let normalized = l2_normalize(features);
        for id in &normalized.warnings {
            eprintln!("taskpart: warning: feature row '{id}' has zero norm");
        }
        let model = pca_fit(&normalized.matrix, pca_k).map_err(usage)?;
        pca_transform(&model, &normalized.matrix).map_err(usage)
    };
    if method == PartitionMethod::Random {
        let partition = assign_random(&features.ids(), k, seed).map_err(usage)?;
        return Ok((partition, None));
    }
    let projected = project()?;
    let centroids = kmeans(&projected, &KMeansParams::new(k, seed)).map_err(usage)?;
    let partition = match method {
        PartitionMethod::KmeansVanilla => assign_vanilla(&projected, &centroids),
        PartitionMethod::BalancedGreedy => assign_balanced_greedy_with(&projected, &centroids, rule),
        PartitionMethod::OptimalBalanced => optimal_balanced_assignment(&projected, &centroids),
        PartitionMethod::Random => unreachable!(),
    }
    .map_err(usage)?;
    Ok((partition, Some(projected)))
}

#[allow(clippy::too_many_arguments)]
fn cmd_partition(
    features_path: &Path,
    k: usize,
    method: PartitionMethod,
    seed: u64,
    pca_k: usize,
    capacity: CapacityArg,
    out: &Path,
    svg: Option<&Path>,
) -> Result<(), Failure> {
    let file = fs::File::open(features_path).map_err(|e| io_failure(features_path, e))?;
    let features = load_external_features(file).map_err(|e| feature_failure(features_path, e))?;
    let rule = match capacity {
        CapacityArg::FloorExtra => CapacityRule::FloorPlusSingleExtra,
        CapacityArg::Ceil => CapacityRule::Ceil,
    };
    let (partition, projected) = partition_features(&features, k, method, seed, pca_k, rule)?;
    let mut json = serde_json::to_vec_pretty(&partition).expect("partition serializes");
    json.push(b'\n');
    write_file(out, &json)?;
    if let Some(svg_path) = svg {
        let projected = match projected {
            Some(p) => p,
            None => {
                let normalized = l2_normalize(&features).matrix;
                let model = pca_fit(&normalized, 2).map_err(usage)?;
                pca_transform(&model, &normalized).map_err(usage)?
            }
        };
        let mut bytes = Vec::new();
        evalrep::cluster_scatter_svg(&projected, &partition, &mut bytes).map_err(eval_failure)?;
        write_file(svg_path, &bytes)?;
    }
    let sizes: Vec<String> = partition.sorted_sizes().iter().map(usize::to_string).collect();
    println!("{} partition into {} clusters, sorted sizes ({})", partition.method, partition.k, sizes.join(", "));
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_failure(p, e))?;
            RunConfig::from_json(&text).map_err(|e| usage(format!("{}: {e}", p.display())))
        }
    }
}

fn cmd_simulate(config: Option<&Path>, points: usize, out: &Path) -> Result<(), Failure> {
    let config = load_config(config)?;
    let variations = gslsim::generate_variations(&config).map_err(usage)?;
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    let cloud_seed = derive_seed(config.master_seed, 0x636c_6f75);
    for (i, v) in variations.iter().enumerate() {
        let cloud = gslsim::variation_surface_cloud(v, points, config.feature_noise_sigma, derive_seed(cloud_seed, i as u64));
        let path = out.join(format!("{}.xyz", v.id));
        let mut bytes = Vec::new();
        cloud.write_xyz(&mut bytes).map_err(|e| io_failure(&path, e))?;
        write_file(&path, &bytes)?;
    }
    let mut json = serde_json::to_vec_pretty(&variations).expect("variations serialize");
    json.push(b'\n');
    write_file(&out.join("variations.json"), &json)?;
    println!("wrote {} variations to {}", variations.len(), out.display());
    Ok(())
}

fn cmd_pipeline(config: Option<&Path>, method: PartitionMethod, out: &Path) -> Result<(), Failure> {
    let config = load_config(config)?;
    let workers = threads_from_env()?;
    let result = gslsim::run_gsl_pipeline_with_workers(&config, method, workers).map_err(|e| match e {
        SimError::InvalidConfig(_) => usage(e),
        other => runtime(other),
    })?;
    evalrep::persist_run(&result, out).map_err(|e| runtime(format!("persist: {e}")))?;
    let summary = RunSummary::from_result(&result);
    let report = evalrep::render_report(std::slice::from_ref(&summary)).map_err(runtime)?;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(report.as_bytes());
    let _ = writeln!(stdout, "\nrun directory: {}", out.display());
    Ok(())
}

fn cmd_report(run: &Path, compare: &[PathBuf], out: Option<&Path>) -> Result<(), Failure> {
    let mut runs = vec![evalrep::load_run(run).map_err(eval_failure)?];
    for dir in compare {
        runs.push(evalrep::load_run(dir).map_err(eval_failure)?);
    }
    let report = evalrep::render_report(&runs).map_err(eval_failure)?;
    match out {
        Some(path) => write_file(path, report.as_bytes()),
        None => {
            let _ = std::io::stdout().lock().write_all(report.as_bytes());
            Ok(())
        }
    }
}

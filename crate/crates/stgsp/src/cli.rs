//! Command implementations behind the `stgsp` binary.
//!
//! Each command returns a process exit code: 0 success, 2 configuration
//! error, 3 I/O error, 4 extraction failure, 5 size cap exceeded. Output
//! files are written to a temporary file and renamed, so failures never
//! leave partial outputs behind.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{run_experiment, ExperimentParams, ExperimentReport, ForestConfig};
use crate::graph::SpatialGraph;
use crate::pipeline::{extract_features, level2_graph, PipelineConfig};
use crate::signal::{bandpass, load_signal, SignalFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_EXTRACT: i32 = 4;
pub const EXIT_SIZE: i32 = 5;

/// Writes `contents` atomically: temp file in the target directory, then
/// rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::Builder::new()
        .prefix(".stgsp-tmp")
        .tempfile_in(dir.unwrap_or(Path::new(".")))
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(path.display().to_string(), e.error))?;
    Ok(())
}

fn load_config(path: &Option<PathBuf>) -> std::result::Result<PipelineConfig, i32> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => PipelineConfig::from_toml_file(p).map_err(|e| {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } => EXIT_IO,
                _ => EXIT_CONFIG,
            }
        }),
    }
}

#[derive(Debug, Clone)]
pub struct ExtractArgs {
    pub input_dir: PathBuf,
    pub output: PathBuf,
    pub config: Option<PathBuf>,
    pub sample_rate_hz: f64,
    pub format: SignalFormat,
}

/// Extracts features for every sample file in a directory (lexicographic
/// filename order) into one CSV: header = feature names, one row per sample.
pub fn cmd_extract(args: &ExtractArgs) -> i32 {
    let cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(code) => return code,
    };

    let mut files: Vec<PathBuf> = match std::fs::read_dir(&args.input_dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .filter(|p| {
                !p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with('.'))
            })
            .collect(),
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.input_dir.display());
            return EXIT_IO;
        }
    };
    files.sort();
    if files.is_empty() {
        eprintln!("error: no input files in {}", args.input_dir.display());
        return EXIT_IO;
    }

    // Config problems that depend on the signal shape (window divisibility,
    // lag bounds) are configuration errors, not extraction failures; check
    // against the first loadable sample before any work.
    for path in &files {
        if let Ok(sig) = load_signal(path, args.format, args.sample_rate_hz) {
            if let Err(e) = cfg.validate_for(sig.channels(), sig.samples(), sig.sample_rate_hz()) {
                eprintln!("error: {e}");
                return match e {
                    Error::Size(_) => EXIT_SIZE,
                    _ => EXIT_CONFIG,
                };
            }
            break;
        }
    }

    let results: Vec<(String, std::result::Result<crate::pipeline::FeatureVector, String>)> =
        files
            .par_iter()
            .map(|path| {
                let name = path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                let fv = load_signal(path, args.format, args.sample_rate_hz)
                    .and_then(|sig| extract_features(&sig, &cfg))
                    .map_err(|e| e.to_string());
                (name, fv)
            })
            .collect();

    let mut out = String::new();
    let mut failures = Vec::new();
    let mut wrote_header = false;
    for (name, result) in &results {
        match result {
            Ok(fv) => {
                if !wrote_header {
                    out.push_str("sample,");
                    out.push_str(&fv.names().join(","));
                    out.push('\n');
                    wrote_header = true;
                }
                let row: Vec<String> = fv.values().iter().map(|v| format!("{v}")).collect();
                out.push_str(name);
                out.push(',');
                out.push_str(&row.join(","));
                out.push('\n');
            }
            Err(e) => failures.push((name.clone(), e.clone())),
        }
    }

    if !wrote_header {
        eprintln!("error: all {} samples failed", files.len());
        for (name, e) in &failures {
            eprintln!("  {name}: {e}");
        }
        return EXIT_EXTRACT;
    }
    if let Err(e) = write_atomic(&args.output, &out) {
        eprintln!("error: {e}");
        return EXIT_IO;
    }
    if !failures.is_empty() {
        eprintln!("{} of {} samples failed:", failures.len(), files.len());
        for (name, e) in &failures {
            eprintln!("  {name}: {e}");
        }
        return EXIT_EXTRACT;
    }
    EXIT_OK
}

#[derive(Debug, Clone)]
pub struct GraphArgs {
    pub input: PathBuf,
    pub output_prefix: PathBuf,
    pub config: Option<PathBuf>,
    pub sample_rate_hz: f64,
    pub format: SignalFormat,
    /// 1-based filter-bank band selecting which level-2 graph to dump.
    pub band: usize,
}

fn matrix_csv(header: &str, m: &ndarray::Array2<f64>) -> String {
    let mut out = String::from(header);
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn graph_csv(header: &str, g: &SpatialGraph) -> String {
    matrix_csv(header, g.weights())
}

/// Dumps the level-2 graph artifacts of one sample and band: the dense
/// spatiotemporal adjacency, the collapsed autocovariance tensor
/// (`i,j,l,value` coordinate lines), and the thresholded spatial graph.
pub fn cmd_graph(args: &GraphArgs) -> i32 {
    let cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let sig = match load_signal(&args.input, args.format, args.sample_rate_hz) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                Error::Io { .. } => EXIT_IO,
                _ => EXIT_CONFIG,
            };
        }
    };
    if let Err(e) = cfg.validate_for(sig.channels(), sig.samples(), sig.sample_rate_hz()) {
        eprintln!("error: {e}");
        return match e {
            Error::Size(_) => EXIT_SIZE,
            _ => EXIT_CONFIG,
        };
    }
    let bands = match cfg.bands_hz.clamped_to_nyquist(sig.sample_rate_hz()) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if args.band == 0 || args.band > bands.band_count() {
        eprintln!(
            "error: band {} out of range 1..={}",
            args.band,
            bands.band_count()
        );
        return EXIT_CONFIG;
    }
    let (lo, hi) = bands.bands().nth(args.band - 1).expect("range checked");

    let l2 = match bandpass(&sig, lo, hi).and_then(|banded| level2_graph(&banded, &cfg)) {
        Ok(l2) => l2,
        Err(Error::Size(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_SIZE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_EXTRACT;
        }
    };

    let s = l2.tensor.channels();
    let t2 = l2.tensor.samples();
    let lag = l2.tensor.max_lag();
    let prefix = args.output_prefix.display();

    let adjacency = matrix_csv(
        &format!("# dense spatiotemporal adjacency, vertices = {s}*{t2} (channel-major per time block)\n"),
        &l2.adjacency,
    );

    let mut autocov = format!(
        "# collapsed autocovariance: i,j,l,value (0-based), S={s}, lags 0..={lag}\n"
    );
    for l in 0..=lag {
        for i in 0..s {
            for j in 0..s {
                let v = l2.autocovariance[[i, j, l]];
                autocov.push_str(&format!("{i},{j},{l},{v}\n"));
            }
        }
    }

    let wtilde = graph_csv(
        &format!("# thresholded spatial graph, kappa = {}\n", l2.kappa),
        &l2.thresholded,
    );

    for (suffix, contents) in [
        ("adjacency.csv", adjacency),
        ("autocov.csv", autocov),
        ("wtilde.csv", wtilde),
    ] {
        let path = PathBuf::from(format!("{prefix}.{suffix}"));
        if let Err(e) = write_atomic(&path, &contents) {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    }
    EXIT_OK
}

#[derive(Debug, Clone)]
pub struct ExperimentArgs {
    pub output: PathBuf,
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub forest: ForestConfig,
    pub params: ExperimentParams,
}

/// Runs the synthetic end-to-end experiment and writes the report CSV.
pub fn cmd_experiment(args: &ExperimentArgs) -> i32 {
    let cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let report = match run_experiment(&cfg, &args.forest, &args.params, args.seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                Error::Size(_) => EXIT_SIZE,
                Error::Io { .. } => EXIT_IO,
                Error::Value(_) | Error::Format(_) => EXIT_CONFIG,
                _ => EXIT_EXTRACT,
            };
        }
    };
    let contents = format!("{}\n{}\n", ExperimentReport::csv_header(), report.csv_row());
    if let Err(e) = write_atomic(&args.output, &contents) {
        eprintln!("error: {e}");
        return EXIT_IO;
    }
    println!(
        "auc = {:.4} with {} features ({} train / {} test), report at {}",
        report.auc,
        report.n_features,
        report.n_train,
        report.n_test,
        args.output.display()
    );
    EXIT_OK
}

#[derive(Debug, Clone)]
pub struct SynthArgs {
    pub output_dir: PathBuf,
    pub n_per_class: usize,
    pub channels: usize,
    pub samples: usize,
    pub sample_rate_hz: f64,
    pub seed: u64,
}

/// Writes a synthetic labeled dataset: one CSV per sample plus a
/// `labels.csv` mapping filenames to class labels.
pub fn cmd_synth(args: &SynthArgs) -> i32 {
    if let Err(e) = std::fs::create_dir_all(&args.output_dir) {
        eprintln!("error: cannot create {}: {e}", args.output_dir.display());
        return EXIT_IO;
    }
    let data = crate::eval::generate_synthetic(
        args.n_per_class,
        args.channels,
        args.samples,
        args.sample_rate_hz,
        args.seed,
    );
    let width = data.len().saturating_sub(1).to_string().len().max(4);
    let mut labels = String::from("filename,label\n");
    for (idx, (signal, label)) in data.iter().enumerate() {
        let name = format!("sample_{idx:0width$}.csv");
        let path = args.output_dir.join(&name);
        if let Err(e) = write_atomic(&path, &signal.to_csv_string()) {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
        labels.push_str(&format!("{name},{label}\n"));
    }
    if let Err(e) = write_atomic(&args.output_dir.join("labels.csv"), &labels) {
        eprintln!("error: {e}");
        return EXIT_IO;
    }
    EXIT_OK
}

//! Command-line front end: argument parsing, dispatch and run manifests.
//!
//! [`run`] is the whole program minus process I/O, so tests can drive it
//! in-process.

mod commands;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::{Report, RunManifest};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "normcut", version, about = "Normal-surface cutting, guts catalogs and Seifert/JSJ homology arithmetic")]
pub struct Cli {
    /// Worker threads for the parallel stages (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Write the run manifest here instead of standard error.
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a triangulation is closed, orientable and one-vertex.
    Validate {
        #[arg(long)]
        tri: PathBuf,
    },
    /// List admissible normal surfaces with bounded coordinates.
    Surfaces {
        #[arg(long)]
        tri: PathBuf,
        #[arg(long, value_name = "K")]
        max_coord: u64,
        #[command(flatten)]
        guard: Guard,
    },
    /// Cut along a normal surface and list pieces, pairings and frontier marks.
    Cut {
        #[arg(long)]
        tri: PathBuf,
        #[arg(long)]
        surface: PathBuf,
        /// Also write the report to this file.
        #[arg(long, value_name = "REPORT")]
        out: Option<PathBuf>,
    },
    /// Guts and I-bundle decomposition of the cut manifold.
    Guts {
        #[arg(long)]
        tri: PathBuf,
        #[arg(long)]
        surface: PathBuf,
    },
    /// Distinct guts signatures over all admissible surfaces.
    Catalog {
        #[arg(long)]
        tri: PathBuf,
        #[arg(long, value_name = "K")]
        max_coord: u64,
        #[command(flatten)]
        guard: Guard,
    },
    /// Relative homology and complexity of the pieces named in a guts report.
    Norm {
        /// A report written by `guts`.
        #[arg(long, value_name = "REPORT")]
        piece: PathBuf,
        /// none, boundary, boundary-minus-pattern, pattern:I,J or components:I,J
        #[arg(long, value_name = "SELECTOR", default_value = "boundary")]
        rel: String,
        /// Only this piece.
        #[arg(long)]
        index: Option<usize>,
        #[arg(long, value_enum, default_value_t = NormStage::Guts)]
        stage: NormStage,
    },
    /// Seifert-fibred homology spheres with bounded Seifert volume.
    Census {
        #[arg(long, value_name = "NUM/DEN")]
        sv_bound: String,
        #[arg(long, value_enum, default_value_t = Emit::Table)]
        emit: Emit,
    },
    /// Gluing matrix for the slope p/q.
    Glue {
        #[arg(long, allow_hyphen_values = true)]
        p: i64,
        #[arg(long, allow_hyphen_values = true)]
        q: i64,
        #[arg(long, allow_hyphen_values = true)]
        eps: i8,
    },
    /// First homology of a tree of homology solid tori.
    Tree {
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct Guard {
    /// Refuse enumerations with more than 2^BITS candidate vectors.
    #[arg(long, value_name = "BITS", default_value_t = normcut::normal_surface::DEFAULT_GUARD_BITS)]
    pub guard_bits: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Table,
    Lines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormStage {
    /// Guts pieces after absorption.
    Guts,
    /// Pieces after carving the separating surfaces out of the I-bundles.
    Refined,
}

/// What the process should print and return.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Failure of a subcommand. A report may still be produced.
#[derive(Debug)]
pub(crate) struct Failure {
    pub message: String,
    pub report: Option<Report>,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { message: e.to_string(), report: None }
    }
}

pub(crate) struct Done {
    pub report: Report,
    /// Extra file to write the finished report to.
    pub out: Option<PathBuf>,
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let started = Instant::now();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return Outcome { code: 1, stdout: String::new(), stderr: format!("error: {e}\n") },
    };
    let result = pool.install(|| commands::dispatch(&cli.command));
    let (code, done, message) = match result {
        Ok(d) => (0, Some(d), None),
        Err(Failure { message, report: Some(report) }) => {
            (1, Some(Done { report, out: None }), Some(message))
        }
        Err(Failure { message, report: None }) => (1, None, Some(message)),
    };
    let mut stderr = message.map(|m| format!("error: {m}\n")).unwrap_or_default();
    let mut stdout = String::new();
    if let Some(done) = done {
        let manifest = RunManifest {
            command_line: canonical_args(&args),
            inputs: commands::inputs_of(&cli.command),
            version: VERSION.to_string(),
            wall_time_ms: started.elapsed().as_millis(),
            result_digest: report::sha256_hex(done.report.body().as_bytes()),
        };
        stdout = done.report.finish(&manifest.digest());
        if let Some(path) = &done.out {
            if let Err(e) = std::fs::write(path, &stdout) {
                return Outcome { code: 1, stdout, stderr: format!("{stderr}error: {}: {e}\n", path.display()) };
            }
        }
        match &cli.manifest {
            Some(path) => {
                if let Err(e) = std::fs::write(path, manifest.to_string()) {
                    return Outcome { code: 1, stdout, stderr: format!("{stderr}error: {}: {e}\n", path.display()) };
                }
            }
            None => stderr.push_str(&manifest.to_string()),
        }
    }
    Outcome { code, stdout, stderr }
}

/// The command line without the program name and the flags that cannot
/// change a report.
fn canonical_args(args: &[OsString]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = it.next() {
        if a == "--threads" || a == "--manifest" {
            it.next();
        } else if !(a.starts_with("--threads=") || a.starts_with("--manifest=")) {
            out.push(a);
        }
    }
    out
}

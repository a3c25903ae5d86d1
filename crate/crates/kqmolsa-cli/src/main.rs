//! Command-line front end: descriptor generation, pairwise comparison,
//! library screening, and a built-in self-test suite.

mod inputs;
mod selftest;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kqmolsa::descriptor_distance::AlignOptions;
use kqmolsa::optim::Minimizer;
use kqmolsa::pipeline::compare_sphere_sets;
use kqmolsa::quantizer::{save_descriptor, QuantizeOptions};
use kqmolsa::similarity::{screen, score, write_csv, ScreenRow, Weights};
use rayon::prelude::*;

use inputs::{load_library, load_one, sdf_sphere_sets, LoadedInput};

#[derive(Parser)]
#[command(name = "kqmolsa", version, about = "Molecular shape descriptors and similarity scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a shape descriptor for every molecule in an SDF
    Descriptor {
        /// SDF file (V2000, 3D coordinates)
        #[arg(long)]
        input: PathBuf,

        /// Directory for the .kq.json descriptor files
        #[arg(long, default_value = ".")]
        output: PathBuf,

        #[command(flatten)]
        quad: QuadArgs,

        #[command(flatten)]
        radii: RadiiArg,

        #[command(flatten)]
        jobs: JobsArg,
    },

    /// Score one pair of molecules (SDF or .kq.json, freely mixed)
    Compare {
        /// First molecule
        #[arg(long)]
        query: PathBuf,

        /// Second molecule
        #[arg(long)]
        input: PathBuf,

        #[command(flatten)]
        quad: QuadArgs,

        #[command(flatten)]
        radii: RadiiArg,

        #[command(flatten)]
        scoring: ScoringArgs,

        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },

    /// Rank a library of molecules against a query
    Screen {
        /// Query molecule (SDF or .kq.json)
        #[arg(long)]
        query: PathBuf,

        /// Library: an SDF file or a directory of .kq.json descriptors
        #[arg(long)]
        library: PathBuf,

        /// Report file (stdout when omitted)
        #[arg(long)]
        output: Option<PathBuf>,

        /// Keep only the best N rows
        #[arg(long)]
        top: Option<usize>,

        #[command(flatten)]
        quad: QuadArgs,

        #[command(flatten)]
        radii: RadiiArg,

        #[command(flatten)]
        scoring: ScoringArgs,

        #[command(flatten)]
        jobs: JobsArg,

        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },

    /// Run the built-in numerical checks
    Selftest {
        #[command(flatten)]
        quad: QuadArgs,
    },
}

#[derive(Args)]
struct QuadArgs {
    /// Quantization level (descriptor is a (2k+1)×(2k+1) matrix)
    #[arg(long, default_value_t = 1)]
    k: u32,

    /// Radial quadrature nodes per disc
    #[arg(long, default_value_t = 15)]
    nr: usize,

    /// Angular quadrature nodes per disc
    #[arg(long, default_value_t = 10)]
    ntheta: usize,
}

impl QuadArgs {
    fn options(&self) -> QuantizeOptions {
        QuantizeOptions {
            k: self.k,
            n_r: self.nr,
            n_theta: self.ntheta,
            ..QuantizeOptions::default()
        }
    }
}

#[derive(Args)]
struct RadiiArg {
    /// Element-radius override table ("El radius" per line); the
    /// KQ_RADII_TABLE environment variable names a default
    #[arg(long)]
    radii_table: Option<PathBuf>,
}

impl RadiiArg {
    fn resolve(&self) -> Result<std::collections::BTreeMap<String, f64>> {
        let path = self
            .radii_table
            .clone()
            .or_else(|| std::env::var_os("KQ_RADII_TABLE").map(PathBuf::from));
        match path {
            Some(p) => kqmolsa::mol_ingest::load_radii_table(&p.to_string_lossy())
                .with_context(|| format!("radii table {}", p.display())),
            None => Ok(kqmolsa::mol_ingest::default_radii()),
        }
    }
}

#[derive(Args)]
struct ScoringArgs {
    /// Score weights "x,y" for the area and distance terms
    #[arg(long, default_value = "0.3,0.7", value_parser = parse_weights)]
    weights: Weights,

    /// Search algorithm for the alignment: nelder-mead or powell
    #[arg(long, default_value = "nelder-mead")]
    minimizer: Minimizer,
}

impl ScoringArgs {
    fn align(&self) -> AlignOptions {
        AlignOptions {
            minimizer: self.minimizer,
            ..AlignOptions::default()
        }
    }
}

#[derive(Args)]
struct JobsArg {
    /// Worker threads (default: all cores); output order is unaffected
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

fn parse_weights(s: &str) -> Result<Weights, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| "expected two comma-separated numbers".to_string())?;
    let x: f64 = x.trim().parse().map_err(|e| format!("{e}"))?;
    let y: f64 = y.trim().parse().map_err(|e| format!("{e}"))?;
    Weights::new(x, y).map_err(|e| e.to_string())
}

fn configure_jobs(jobs: &JobsArg) {
    if let Some(n) = jobs.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Descriptor { input, output, quad, radii, jobs } => {
            configure_jobs(&jobs);
            cmd_descriptor(&input, &output, &quad.options(), &radii)
        }
        Command::Compare { query, input, quad, radii, scoring, format } => {
            cmd_compare(&query, &input, &quad.options(), &radii, &scoring, format)
        }
        Command::Screen { query, library, output, top, quad, radii, scoring, jobs, format } => {
            configure_jobs(&jobs);
            cmd_screen(&query, &library, output.as_deref(), top, &quad.options(), &radii, &scoring, format)
        }
        Command::Selftest { quad } => Ok(selftest::run(&quad.options())),
    }
}

/// File-name stem for one molecule: keep word characters, dots and dashes.
fn file_stem(name: &str, index: usize) -> String {
    let cleaned: String = name
        .trim()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || ".-_".contains(c) { c } else { '_' })
        .collect();
    if cleaned.is_empty() {
        format!("record-{}", index + 1)
    } else {
        cleaned
    }
}

fn cmd_descriptor(
    input: &std::path::Path,
    output: &std::path::Path,
    opts: &QuantizeOptions,
    radii: &RadiiArg,
) -> Result<u8> {
    let radii = radii.resolve()?;
    let sets = sdf_sphere_sets(input, &radii)?;
    std::fs::create_dir_all(output)
        .with_context(|| format!("creating {}", output.display()))?;

    let results: Vec<_> = sets
        .par_iter()
        .map(|entry| match entry {
            Ok(set) => kqmolsa::pipeline::sphere_set_descriptor(set, opts)
                .map_err(|e| format!("{}: {e}", set.name)),
            Err(reason) => Err(reason.clone()),
        })
        .collect();

    let mut written = 0usize;
    let mut rejected = 0usize;
    let mut used = std::collections::HashSet::new();
    for (i, outcome) in results.iter().enumerate() {
        match outcome {
            Ok(desc) => {
                let mut stem = file_stem(&desc.name, i);
                if !used.insert(stem.clone()) {
                    stem = format!("{stem}-{}", i + 1);
                    used.insert(stem.clone());
                }
                let path = output.join(format!("{stem}.kq.json"));
                save_descriptor(desc, &path.to_string_lossy())?;
                println!("{}", path.display());
                written += 1;
            }
            Err(reason) => {
                eprintln!("rejected: {reason}");
                rejected += 1;
            }
        }
    }

    if written == 0 {
        bail!("no molecule survived ({rejected} rejected)");
    }
    Ok(if rejected > 0 { 2 } else { 0 })
}

fn cmd_compare(
    query: &std::path::Path,
    input: &std::path::Path,
    opts: &QuantizeOptions,
    radii: &RadiiArg,
    scoring: &ScoringArgs,
    format: Format,
) -> Result<u8> {
    let radii = radii.resolve()?;
    let a = load_one(query, &radii)?;
    let b = load_one(input, &radii)?;
    let name = match &b {
        LoadedInput::Spheres(s) => s.name.clone(),
        LoadedInput::Descriptor(d) => d.name.clone(),
    };

    // Two raw molecules go through the staged comparison (it reuses the
    // built geometry for the coarse-level warm start); anything involving
    // a precomputed file is scored directly.
    let result = match (&a, &b) {
        (LoadedInput::Spheres(sa), LoadedInput::Spheres(sb)) => {
            compare_sphere_sets(sa, sb, opts, &scoring.weights, &scoring.align())?
        }
        _ => {
            let da = a.into_descriptor(opts)?;
            let db = b.into_descriptor(opts)?;
            if da.k != db.k {
                bail!("quantization level mismatch: {} vs {}", da.k, db.k);
            }
            score(&da, &db, &scoring.weights, &scoring.align())?
        }
    };
    let mut stdout = std::io::stdout().lock();
    match format {
        Format::Text => {
            writeln!(stdout, "score      {:.6}", result.score)?;
            writeln!(stdout, "distance   {:.6}", result.distance)?;
            writeln!(stdout, "area_ratio {:.6}", result.area_ratio)?;
            writeln!(stdout, "scale_p    {:.6}", result.scale)?;
            writeln!(stdout, "converged  {}", result.converged)?;
        }
        Format::Csv => {
            let row = ScreenRow { name, result };
            write_csv(std::slice::from_ref(&row), &mut stdout)?;
        }
        Format::Json => {
            let json = serde_json::json!({
                "name": name,
                "score": result.score,
                "distance": result.distance,
                "area_ratio": result.area_ratio,
                "scale_p": result.scale,
                "converged": result.converged,
            });
            writeln!(stdout, "{json}")?;
        }
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_screen(
    query: &std::path::Path,
    library: &std::path::Path,
    output: Option<&std::path::Path>,
    top: Option<usize>,
    opts: &QuantizeOptions,
    radii: &RadiiArg,
    scoring: &ScoringArgs,
    format: Format,
) -> Result<u8> {
    let radii = radii.resolve()?;
    let query = load_one(query, &radii)?.into_descriptor(opts)?;
    let (members, build_failures) = load_library(library, &radii, opts)?;
    for reason in &build_failures {
        eprintln!("skipped: {reason}");
    }
    if members.is_empty() {
        bail!("library is empty ({} members failed)", build_failures.len());
    }

    let outcome = screen(&query, &members, &scoring.weights, &scoring.align(), top)?;
    for (name, reason) in &outcome.skipped {
        eprintln!("skipped: {name}: {reason}");
    }

    let mut sink: Box<dyn Write> = match output {
        Some(path) => Box::new(
            std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?,
        ),
        None => Box::new(std::io::stdout().lock()),
    };
    match format {
        Format::Csv => write_csv(&outcome.ranked, &mut sink)?,
        Format::Text => {
            writeln!(sink, "{:<28} {:>8} {:>10} {:>10}", "name", "score", "distance", "area")?;
            for row in &outcome.ranked {
                writeln!(
                    sink,
                    "{:<28} {:>8.4} {:>10.4} {:>10.4}",
                    row.name, row.result.score, row.result.distance, row.result.area_ratio
                )?;
            }
        }
        Format::Json => {
            let rows: Vec<_> = outcome
                .ranked
                .iter()
                .map(|row| {
                    serde_json::json!({
                        "name": row.name,
                        "score": row.result.score,
                        "distance": row.result.distance,
                        "area_ratio": row.result.area_ratio,
                        "scale_p": row.result.scale,
                        "converged": row.result.converged,
                    })
                })
                .collect();
            writeln!(sink, "{}", serde_json::Value::Array(rows))?;
        }
    }
    sink.flush()?;

    let partial = !outcome.skipped.is_empty() || !build_failures.is_empty();
    Ok(if partial { 2 } else { 0 })
}

//! Argument definitions and the four subcommands.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ppd_core::random::derive_seed;
use ppd_core::{
    build_report, decompose_multiview, export_json, generate, noise_law, render_svg, run_benchmark,
    sample_noise_spectrum, BootstrapConfig, BootstrapVariant, CellResult, DecomposeOptions,
    DecompositionResult, DenseMatrix, NoiseSpectrumLaw, RankSpec, SimTruth,
};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::files::{matrix_csv, read_json, read_matrix_csv, write_atomic, write_json};
use crate::sim_config::{parse_sim_config, GridSpec};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "ppd",
    version,
    about = "Joint and individual subspaces of matched-sample data views"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose two or more CSV views into joint and individual subspaces.
    Decompose(DecomposeArgs),
    /// Run a simulation benchmark grid and write mean F-scores.
    Simulate(SimulateArgs),
    /// Write the limiting law of the squared principal-angle cosines.
    NoiseSpectrum(NoiseSpectrumArgs),
    /// Render diagnostics from a saved result or from raw views.
    Diagnose(DiagnoseArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Rotational,
    Naive,
}

impl From<VariantArg> for BootstrapVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Rotational => BootstrapVariant::Rotational,
            VariantArg::Naive => BootstrapVariant::Naive,
        }
    }
}

#[derive(Debug, Args)]
pub struct ViewArgs {
    /// View CSV (rows are samples, columns features); repeat for each view.
    #[arg(long = "view", value_name = "PATH")]
    pub views: Vec<PathBuf>,
    /// Skip one header line in every view file.
    #[arg(long)]
    pub header: bool,
    /// `auto` or one rank per view, e.g. `5,4`.
    #[arg(long, default_value = "auto")]
    pub ranks: String,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 100)]
    pub bootstrap_reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = VariantArg::Rotational)]
    pub variant: VariantArg,
    /// With many views, average symmetrised pairwise products.
    #[arg(long)]
    pub pairwise_average: bool,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub input: ViewArgs,
    /// Result JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Diagnostic SVG.
    #[arg(long)]
    pub diagnostic: Option<PathBuf>,
    /// Diagnostic report JSON.
    #[arg(long)]
    pub diagnostic_json: Option<PathBuf>,
    /// Planted-structure JSON from `simulate --emit-views`, adds truth lines to diagnostics.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Grid configuration (key = value lines, optional [sections]).
    #[arg(long)]
    pub config: PathBuf,
    /// Results table CSV; per-replication seeds go to `<stem>.seeds.csv` beside it.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the first replication of every cell as view CSVs plus truth JSON.
    #[arg(long, value_name = "DIR")]
    pub emit_views: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NoiseSpectrumArgs {
    #[arg(long, requires = "q2", conflicts_with_all = ["n", "r1", "r2"])]
    pub q1: Option<f64>,
    #[arg(long, requires = "q1")]
    pub q2: Option<f64>,
    /// Ambient dimension for the empirical sampler.
    #[arg(long, requires_all = ["r1", "r2"])]
    pub n: Option<usize>,
    #[arg(long, requires = "n")]
    pub r1: Option<usize>,
    #[arg(long, requires = "n")]
    pub r2: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Density samples across the continuous support.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Saved result JSON from `decompose`.
    #[arg(long, conflicts_with = "views")]
    pub result: Option<PathBuf>,
    #[command(flatten)]
    pub input: ViewArgs,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, default_value_t = 800)]
    pub width: usize,
    #[arg(long, default_value_t = 500)]
    pub height: usize,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Decompose(args) => cmd_decompose(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::NoiseSpectrum(args) => cmd_noise_spectrum(&args),
        Command::Diagnose(args) => cmd_diagnose(&args),
    }
}

pub fn parse_ranks(text: &str) -> CliResult<RankSpec> {
    let text = text.trim();
    if text.eq_ignore_ascii_case("auto") {
        return Ok(RankSpec::Auto);
    }
    text.split(',')
        .map(|s| {
            s.trim().parse::<usize>().map_err(|_| {
                CliError::Usage(format!(
                    "--ranks expects 'auto' or a comma list of integers, got '{text}'"
                ))
            })
        })
        .collect::<CliResult<Vec<_>>>()
        .map(RankSpec::Explicit)
}

fn decompose_views(input: &ViewArgs) -> CliResult<DecompositionResult> {
    if input.views.len() < 2 {
        return Err(CliError::Usage(
            "at least two --view files are required".into(),
        ));
    }
    let ranks = parse_ranks(&input.ranks)?;
    if let RankSpec::Explicit(r) = &ranks {
        if r.len() != input.views.len() {
            return Err(CliError::Usage(format!(
                "--ranks lists {} values for {} views",
                r.len(),
                input.views.len()
            )));
        }
    }
    let views: Vec<DenseMatrix> = input
        .views
        .iter()
        .map(|p| read_matrix_csv(p, input.header))
        .collect::<CliResult<_>>()?;
    let options = DecomposeOptions {
        ranks,
        bootstrap: BootstrapConfig {
            replicates: input.bootstrap_reps,
            seed: input.seed,
            variant: input.variant.into(),
            estimate_epsilon2: false,
        },
        pairwise_average: input.pairwise_average,
    };
    Ok(decompose_multiview(&views, &options)?)
}

fn load_truth(path: Option<&Path>) -> CliResult<Option<SimTruth>> {
    path.map(read_json).transpose()
}

fn write_diagnostics(
    result: &DecompositionResult,
    truth: Option<&SimTruth>,
    svg: Option<&Path>,
    json: Option<&Path>,
    size: (usize, usize),
) -> CliResult<()> {
    if svg.is_none() && json.is_none() {
        return Ok(());
    }
    let report = build_report(result, truth)?;
    if let Some(path) = svg {
        write_atomic(path, render_svg(&report, size.0, size.1)?.as_bytes())?;
    }
    if let Some(path) = json {
        let mut text = export_json(&report);
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
    }
    Ok(())
}

pub fn cmd_decompose(args: &DecomposeArgs) -> CliResult<()> {
    let truth = load_truth(args.truth.as_deref())?;
    let result = decompose_views(&args.input)?;
    write_json(&args.out, &result)?;
    write_diagnostics(
        &result,
        truth.as_ref(),
        args.diagnostic.as_deref(),
        args.diagnostic_json.as_deref(),
        (800, 500),
    )
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> CliResult<()> {
    if args.svg.is_none() && args.json.is_none() {
        return Err(CliError::Usage("diagnose needs --svg and/or --json".into()));
    }
    let truth = load_truth(args.truth.as_deref())?;
    let result: DecompositionResult = match &args.result {
        Some(path) => {
            let result: DecompositionResult = read_json(path)?;
            result
                .validate()
                .map_err(|e| CliError::InvalidInput(format!("{}: {e}", path.display())))?;
            result
        }
        None if args.input.views.is_empty() => {
            return Err(CliError::Usage(
                "diagnose needs --result or at least two --view files".into(),
            ))
        }
        None => decompose_views(&args.input)?,
    };
    write_diagnostics(
        &result,
        truth.as_ref(),
        args.svg.as_deref(),
        args.json.as_deref(),
        (args.width, args.height),
    )
}

/// Path of the per-replication seed table written next to `out`.
pub fn seeds_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("results");
    out.with_file_name(format!("{stem}.seeds.csv"))
}

fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.6}")
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let grids = parse_sim_config(&args.config, &text)?;
    let mut table = csv::Writer::from_writer(Vec::new());
    let mut seeds = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::InvalidInput(format!("cannot format table: {e}"));
    table
        .write_record([
            "grid",
            "angle",
            "snr",
            "rank_mode",
            "mean_F_raw",
            "mean_F_x10",
            "stderr",
            "reps",
            "failures",
        ])
        .map_err(csv_err)?;
    seeds
        .write_record(["grid", "cell", "replication", "seed", "f_score", "error"])
        .map_err(csv_err)?;
    for grid in &grids {
        let bootstrap = BootstrapConfig {
            replicates: grid.bootstrap_reps,
            ..BootstrapConfig::default()
        };
        let results = run_benchmark(&grid.cells, grid.reps, grid.seed, &bootstrap)?;
        for (c, cell) in results.iter().enumerate() {
            write_cell_rows(&mut table, &mut seeds, grid, c, cell).map_err(csv_err)?;
        }
        if let Some(dir) = &args.emit_views {
            emit_views(dir, grid)?;
        }
    }
    let table = table
        .into_inner()
        .map_err(|e| CliError::InvalidInput(e.to_string()))?;
    let seeds = seeds
        .into_inner()
        .map_err(|e| CliError::InvalidInput(e.to_string()))?;
    write_atomic(&args.out, &table)?;
    write_atomic(&seeds_path(&args.out), &seeds)
}

fn write_cell_rows(
    table: &mut csv::Writer<Vec<u8>>,
    seeds: &mut csv::Writer<Vec<u8>>,
    grid: &GridSpec,
    c: usize,
    cell: &CellResult,
) -> Result<(), csv::Error> {
    let cfg = &cell.config;
    table.write_record([
        grid.name.clone(),
        cfg.angle_deg.to_string(),
        cfg.snr.to_string(),
        cfg.rank_mode.to_string(),
        fmt_float(cell.mean_f),
        fmt_float(cell.mean_f_x10),
        fmt_float(cell.stderr),
        cell.reps.to_string(),
        cell.failures.to_string(),
    ])?;
    for (r, rep) in cell.replications.iter().enumerate() {
        let (f, err) = match &rep.outcome {
            Ok(f) => (fmt_float(*f), String::new()),
            Err(e) => (String::new(), e.clone()),
        };
        seeds.write_record([
            grid.name.clone(),
            c.to_string(),
            r.to_string(),
            rep.seed.to_string(),
            f,
            err,
        ])?;
    }
    Ok(())
}

fn emit_views(dir: &Path, grid: &GridSpec) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (c, cell) in grid.cells.iter().enumerate() {
        let seed = derive_seed(grid.seed, &[c as u64, 0]);
        let cfg = ppd_core::SimConfig {
            seed,
            ..cell.clone()
        };
        let (views, truth) = generate(&cfg)?;
        let prefix = format!("{}_cell{c}", grid.name);
        for (k, view) in views.iter().enumerate() {
            let path = dir.join(format!("{prefix}_view{}.csv", k + 1));
            write_atomic(&path, matrix_csv(view.as_matrix()).as_bytes())?;
        }
        write_json(&dir.join(format!("{prefix}_truth.json")), &truth)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EmpiricalSample {
    n: usize,
    r1: usize,
    r2: usize,
    seed: u64,
    squared_singular_values: Vec<f64>,
}

#[derive(Serialize)]
struct NoiseSpectrumOutput {
    law: NoiseSpectrumLaw,
    continuous_mass: f64,
    density: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample: Option<EmpiricalSample>,
}

pub fn cmd_noise_spectrum(args: &NoiseSpectrumArgs) -> CliResult<()> {
    if args.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let (law, sample) = match (args.q1, args.q2, args.n, args.r1, args.r2) {
        (Some(q1), Some(q2), None, None, None) => (noise_law(q1, q2)?, None),
        (None, None, Some(n), Some(r1), Some(r2)) => {
            if n == 0 {
                return Err(CliError::Usage("--n must be positive".into()));
            }
            let values = sample_noise_spectrum(n, r1, r2, args.seed)?;
            let law = noise_law(r1 as f64 / n as f64, r2 as f64 / n as f64)?;
            let sample = EmpiricalSample {
                n,
                r1,
                r2,
                seed: args.seed,
                squared_singular_values: values,
            };
            (law, Some(sample))
        }
        _ => {
            return Err(CliError::Usage(
                "give either --q1 and --q2, or --n, --r1 and --r2".into(),
            ))
        }
    };
    let output = NoiseSpectrumOutput {
        law,
        continuous_mass: law.continuous_mass(),
        density: law.density_samples(args.points),
        sample,
    };
    write_json(&args.out, &output)
}

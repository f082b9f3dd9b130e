//! Batch front-end for Josephson comparator gray-zone calculations.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical/regime error.

mod config;
mod output;
mod physics;
mod run;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jjcomp::bvp::{solve_all_mode, Grid};
use jjcomp::Error;

use config::{MethodSpec, OutputFormat, RunConfig};

#[derive(Parser)]
#[command(
    name = "jjcomp",
    about = "Gray-zone width of Josephson-junction balanced comparators",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single gray-zone evaluation.
    GrayZone(CommonArgs),
    /// Parameter sweep (temperature, beta_c, duration or lambda).
    Sweep(CommonArgs),
    /// Switching-probability curve p(Ix/Ic).
    ProbCurve(CommonArgs),
    /// Inspect a drive waveform without running the pipeline.
    WaveformInfo(CommonArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Quadrature,
    Mc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured noise-coefficient method.
    #[arg(long)]
    method: Option<MethodArg>,
    /// Override the Monte Carlo RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format override.
    #[arg(long)]
    format: Option<FormatArg>,
    /// Write the solved basis functions as CSV to this path.
    #[arg(long)]
    dump_bvp: Option<PathBuf>,
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        Error::config(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let mut cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Error::config(format!("invalid config: {e}")))?;
    if let Some(method) = args.method {
        cfg.method = match method {
            MethodArg::Quadrature => MethodSpec::Quadrature,
            MethodArg::Mc => MethodSpec::MonteCarlo,
        };
    }
    if let Some(format) = args.format {
        cfg.output.format = match format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    if let Some(path) = &args.out {
        cfg.output.path = Some(path.clone());
    }
    Ok(cfg)
}

fn with_sink<F>(path: Option<&Path>, f: F) -> Result<(), Error>
where
    F: FnOnce(&mut dyn Write) -> Result<(), Error>,
{
    match path {
        Some(p) => {
            let file = std::fs::File::create(p)
                .map_err(|e| Error::config(format!("cannot create {}: {e}", p.display())))?;
            let mut w = std::io::BufWriter::new(file);
            f(&mut w)?;
            w.flush()
                .map_err(|e| Error::config(format!("write failed: {e}")))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

fn dump_bvp_if_requested(args: &CommonArgs, cfg: &RunConfig) -> Result<(), Error> {
    let Some(path) = &args.dump_bvp else {
        return Ok(());
    };
    let base = run::resolve_base(cfg)?;
    let waveform = run::build_waveform(cfg, &base.params)?;
    let grid = Grid::default_for(&base.params, &waveform)?;
    let sol = solve_all_mode(
        &waveform,
        &grid,
        &base.params,
        jjcomp::bvp::SolveMode::Refined,
    )?;
    let file = std::fs::File::create(path)
        .map_err(|e| Error::config(format!("cannot create {}: {e}", path.display())))?;
    output::write_bvp_csv(std::io::BufWriter::new(file), &sol)
}

fn emit_rows(cfg: &RunConfig, rows: &[run::SweepRow]) -> Result<(), Error> {
    let path = cfg.output.path.as_deref();
    match cfg.output.format {
        OutputFormat::Csv => with_sink(path, |w| output::write_rows_csv(w, rows)),
        OutputFormat::Json => with_sink(path, |w| output::write_rows_json(w, rows)),
    }
}

fn execute(command: &Command) -> Result<(), Error> {
    match command {
        Command::GrayZone(args) => {
            let cfg = load_config(args)?;
            dump_bvp_if_requested(args, &cfg)?;
            let (row, pipeline_run) = run::run_single(&cfg, args.seed)?;
            for warning in &pipeline_run.warnings {
                eprintln!("warning: {warning}");
            }
            emit_rows(&cfg, &[row])
        }
        Command::Sweep(args) => {
            let cfg = load_config(args)?;
            dump_bvp_if_requested(args, &cfg)?;
            let rows = run::run_sweep(&cfg, args.seed)?;
            let ok = rows.iter().filter(|r| r.status == "ok").count();
            for row in rows.iter().filter(|r| r.status != "ok") {
                eprintln!(
                    "warning: row {} = {} failed: {}",
                    row.axis, row.value, row.status
                );
            }
            emit_rows(&cfg, &rows)?;
            if ok == 0 {
                return Err(Error::numerical("every sweep row failed"));
            }
            Ok(())
        }
        Command::ProbCurve(args) => {
            let cfg = load_config(args)?;
            let curve = run::probability_curve(&cfg, args.seed)?;
            let path = cfg.output.path.as_deref();
            match cfg.output.format {
                OutputFormat::Csv => with_sink(path, |w| output::write_curve_csv(w, &curve)),
                OutputFormat::Json => with_sink(path, |w| output::write_curve_json(w, &curve)),
            }
        }
        Command::WaveformInfo(args) => {
            let cfg = load_config(args)?;
            let base = run::resolve_base(&cfg)?;
            let waveform = run::build_waveform(&cfg, &base.params)?;
            let info = serde_json::json!({
                "t_end": waveform.t_end(),
                "mu_initial": waveform.mu_initial(),
                "mu_final": waveform.mu_final(),
                "offset": waveform.offset(),
                "has_instability": waveform.has_instability(),
                "inversion_time": waveform.inversion_time().ok(),
                "plateau_margin": base.params.plateau_margin(),
            });
            let path = cfg.output.path.as_deref();
            with_sink(path, |w| {
                serde_json::to_writer_pretty(w, &info)
                    .map_err(|e| Error::config(format!("write failed: {e}")))
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

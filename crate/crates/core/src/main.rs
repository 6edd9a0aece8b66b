use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use semvr::harness::{self, ExperimentConfig, Report, ReportFormat};
use semvr::protocol::Scheme;
use semvr::Error;

#[derive(Parser)]
#[command(name = "semvr", version, about = "Semantic tiled-VR delivery simulator")]
struct Cli {
    /// Run sequentially instead of on the thread pool.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the given schemes, SNRs and frame proportions on one scene.
    Simulate {
        /// wiservr, deepjscc or conventional; repeatable (default: all).
        #[arg(long, value_delimiter = ',')]
        scheme: Vec<Scheme>,
        /// SNR grid in dB (default: -9,-6,-3,0,3,6).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        snr: Vec<f64>,
        /// Proportions of delivered behavior frames (default: 0.25,0.5,1.0).
        #[arg(long, value_delimiter = ',')]
        dbf: Vec<f64>,
        #[arg(long)]
        frames: Option<usize>,
        /// Square tile edge in pixels.
        #[arg(long)]
        tile_size: Option<usize>,
        /// Tile grid per viewpoint as ROWSxCOLS, e.g. 2x2.
        #[arg(long)]
        grid: Option<String>,
        /// Scene seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Channel realisations per cell.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        bandwidth_hz: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        no_noise: bool,
    },
    /// Run a sweep described by a JSON experiment config.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Recompute the published time-saved table from its bit counts.
    VerifyTable1,
}

fn parse_grid(s: &str) -> Result<(usize, usize), Error> {
    let bad = || Error::InvalidConfig(format!("grid must look like 2x2, got {s:?}"));
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}

fn emit(report: &Report, format: Format, out: Option<PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => report.export(format.into(), &path),
        None => {
            match format {
                Format::Csv => print!("{}", report.to_csv()),
                Format::Json => println!("{}", report.to_json()?),
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let exec = if cli.sequential {
        semvr::parallel::Execution::Sequential
    } else {
        semvr::parallel::Execution::Parallel
    };
    match cli.command {
        Command::Simulate {
            scheme,
            snr,
            dbf,
            frames,
            tile_size,
            grid,
            seed,
            seeds,
            bandwidth_hz,
            out,
            format,
            no_noise,
        } => {
            let mut cfg = ExperimentConfig::default();
            if !scheme.is_empty() {
                cfg.schemes = scheme;
            }
            if !snr.is_empty() {
                cfg.snr_grid = snr;
            }
            if !dbf.is_empty() {
                cfg.dbf_proportions = dbf;
            }
            if let Some(n) = frames {
                cfg.scene.n_frames = n;
            }
            if let Some(t) = tile_size {
                cfg.scene.tile_height = t;
                cfg.scene.tile_width = t;
            }
            if let Some(g) = grid {
                (cfg.scene.grid_rows, cfg.scene.grid_cols) = parse_grid(&g)?;
            }
            if let Some(s) = seed {
                cfg.scene.seed = s;
            }
            if let Some(n) = seeds {
                cfg.n_seeds = n;
            }
            if let Some(b) = bandwidth_hz {
                cfg.bandwidth_hz = b;
            }
            cfg.noiseless = no_noise;
            let report = harness::run_experiment_with(&cfg, exec)?;
            emit(&report, format, out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, out, format } => {
            let text = std::fs::read_to_string(&config).map_err(|e| Error::io(&config, e))?;
            let cfg: ExperimentConfig =
                serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", config.display())))?;
            let report = harness::run_experiment_with(&cfg, exec)?;
            emit(&report, format, out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyTable1 => {
            let checks = harness::verify_table1();
            let mut ok = true;
            for c in &checks {
                println!(
                    "{} {:<14} bits={:.3e} computed={:.3}% expected={:.1}%",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.label,
                    c.bits,
                    c.computed_pct,
                    c.expected_pct
                );
                ok &= c.pass;
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) | Error::InvalidProportion(_) | Error::Json(_) => ExitCode::from(1),
                _ => ExitCode::from(3),
            }
        }
    }
}

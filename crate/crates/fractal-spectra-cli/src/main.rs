use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fractal_spectra::par::Exec;
use fractal_spectra_cli::commands::{self, Bc, DosOptions, RenormOptions};
use fractal_spectra_cli::verify::{self, Suite};
use fractal_spectra_cli::{apply_thread_cap, config, CliError};

/// Spectra and renormalization maps of self-similar lattices.
///
/// `--config` takes a JSON structure file or one of the builtin names
/// sierpinski, gamma_bar, gamma_bar_semi, unit_interval.
#[derive(Parser)]
#[command(name = "fractal-spectra", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues with multiplicities at one level.
    Spectrum {
        #[arg(long)]
        config: String,
        #[arg(long)]
        level: usize,
        #[arg(long, value_enum, default_value = "neumann")]
        bc: Bc,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Report Laplacian eigenvalues (the negated spectrum).
        #[arg(long)]
        laplacian: bool,
    },
    /// Normalised eigenvalue histogram, optionally with the Green proxy.
    Dos {
        #[arg(long)]
        config: String,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 64)]
        bins: usize,
        #[arg(long, value_enum, default_value = "neumann")]
        bc: Bc,
        /// Histogram range `LO:HI`; defaults to the spectral range.
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
        range: Option<(f64, f64)>,
        /// Green proxy grid `LO:HI:POINTS`.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        green: Option<(f64, f64, usize)>,
        #[arg(long, default_value_t = fractal_spectra::spectra::GREEN_EPS)]
        eps: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Where the Green CSV goes; stdout after the histogram by default.
        #[arg(long)]
        green_csv: Option<PathBuf>,
        #[arg(long)]
        laplacian: bool,
    },
    /// Iterates the renormalization map.
    Renorm {
        #[arg(long)]
        config: String,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        /// Starting chart coordinates, e.g. `0,3` or `i,i`; defaults to the config network.
        #[arg(long, allow_hyphen_values = true)]
        coords: Option<String>,
        /// Print homogeneous pairs, which stay finite at infinity.
        #[arg(long)]
        frame: bool,
    },
    /// Runs the identity and degree checks.
    Verify {
        #[arg(long)]
        config: String,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b] => {
            let (lo, hi) = (a.parse::<f64>().map_err(|e| e.to_string())?, b.parse::<f64>().map_err(|e| e.to_string())?);
            if lo < hi { Ok((lo, hi)) } else { Err("need LO < HI".into()) }
        }
        _ => Err("expected LO:HI".into()),
    }
}

fn parse_grid(s: &str) -> Result<(f64, f64, usize), String> {
    let (range, points) = s.rsplit_once(':').ok_or("expected LO:HI:POINTS")?;
    let (lo, hi) = parse_range(range)?;
    Ok((lo, hi, points.parse().map_err(|e: std::num::ParseIntError| e.to_string())?))
}

fn emit(text: &str, path: Option<&PathBuf>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    apply_thread_cap()?;
    match cli.cmd {
        Cmd::Spectrum { config, level, bc, csv, laplacian } => {
            let cfg = config::load(&config)?;
            emit(&commands::spectrum_csv(&cfg, level, bc, laplacian)?, csv.as_ref())?;
        }
        Cmd::Dos { config, level, bins, bc, range, green, eps, csv, green_csv, laplacian } => {
            let cfg = config::load(&config)?;
            let opt = DosOptions { level, bins, bc, range, laplacian };
            emit(&commands::dos_csv(&cfg, &opt)?, csv.as_ref())?;
            if let Some(grid) = green {
                let text = commands::green_csv(&cfg, level, grid, eps, laplacian, Exec::default())?;
                if green_csv.is_none() && csv.is_none() {
                    println!();
                }
                emit(&text, green_csv.as_ref())?;
            }
        }
        Cmd::Renorm { config, steps, coords, frame } => {
            let cfg = config::load(&config)?;
            let coords = coords.as_deref().map(commands::parse_coords).transpose()?;
            emit(&commands::renorm_csv(&cfg, &RenormOptions { steps, coords, frame })?, None)?;
        }
        Cmd::Verify { config, suite, seed } => {
            let cfg = config::load(&config)?;
            let checks = verify::run(&cfg, suite, seed, Exec::default())?;
            for check in &checks {
                println!("{check}");
            }
            let ok = verify::all_passed(&checks);
            println!("{}", if ok { "verify: all checks passed" } else { "verify: FAILED" });
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("fractal-spectra: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

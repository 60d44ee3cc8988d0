//! Command implementations behind the `fractal-spectra` binary.

pub mod commands;
pub mod config;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] fractal_spectra::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

pub const THREADS_VAR: &str = "FRACTAL_SPECTRA_THREADS";

/// Applies `FRACTAL_SPECTRA_THREADS` to the worker pool.
pub fn apply_thread_cap() -> Result<(), CliError> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Config(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
            fractal_spectra::par::init_threads(n);
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

/// Fixed 17-significant-digit format used in every CSV.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

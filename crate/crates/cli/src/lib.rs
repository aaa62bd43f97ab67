//! Front end for the `nterm` binary.

pub mod commands;
pub mod error;
pub mod render;
pub mod spec;

use std::io::Write;

pub use error::{CliError, ErrorKind};
pub use render::Artifact;
pub use spec::{Cli, RunSpec};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "NTERM_THREADS";

/// Runs `spec` and writes its artifact to `--output` or `out`.
///
/// The artifact is written even when certification fails; that case is
/// reported as [`ErrorKind::CertificationFailed`] afterwards.
pub fn execute(spec: &RunSpec, out: &mut dyn Write) -> Result<(), CliError> {
    let artifact = commands::run(spec)?;
    let text = artifact.render(spec.format);
    let io_err = |path: String, e: std::io::Error| CliError::new(ErrorKind::Io, format!("i/o error on {path}: {e}"));
    match &spec.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| io_err(path.display().to_string(), e))?,
        None => out
            .write_all(text.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| io_err("standard output".into(), e))?,
    }
    if artifact.ok {
        Ok(())
    } else {
        Err(CliError::new(ErrorKind::CertificationFailed, "certification failed"))
    }
}

/// Applies the thread-count override, if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::parameter(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::parameter(e.to_string()))
}

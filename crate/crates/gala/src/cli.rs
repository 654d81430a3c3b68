//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a verification or executed-mode oracle
//! check fails, 2 on usage, parse or configuration errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::{conv_bench, mv_bench, noise_table, ConvDims, MvDims, DEFAULT_CONV_DIMS, DEFAULT_MV_DIMS};
use crate::config::{Effective, Overrides, CONFIG_ENV};
use crate::network::load_network;
use crate::profiler::{profile_network, Mode, ProfileError};
use crate::report::{render_all, Format, Table};
use crate::verify::run_verification;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "gala", version, about = "Operation counts, noise and cost of packed-HE linear layers")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed for random tasks and share masks.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Slot count (power of two).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Plaintext modulus (prime).
    #[arg(long, global = true)]
    pub p: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML cost/parameter file; falls back to $GALA_COST_CONFIG.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Matrix-vector counts for every scheme, checked by execution.
    MvBench {
        /// Matrix shape as n_o x n_i, e.g. 16x128 (repeatable).
        #[arg(long = "dims", value_name = "AxB")]
        dims: Vec<MvDims>,
    },
    /// Convolution counts in the decomposed-rotation view.
    ConvBench {
        /// Layer as UWxUH@CI,KWxKH@CO (repeatable).
        #[arg(long = "shape", value_name = "SHAPE")]
        shapes: Vec<ConvDims>,
    },
    /// Predicted and measured output noise.
    Noise {
        #[arg(long = "dims", value_name = "AxB")]
        dims: Vec<MvDims>,
        #[arg(long = "shape", value_name = "SHAPE")]
        shapes: Vec<ConvDims>,
    },
    /// Oracle equivalence and reference counts; exits 1 on any mismatch.
    Verify,
    /// Per-layer profile of a network file.
    Profile {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Analytic)]
        mode: Mode,
    },
    /// Print the effective parameters and cost model.
    Calibrate,
}

enum Failure {
    Usage(String),
    Verify(String),
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Verify(msg)) => {
            let _ = writeln!(stderr, "verification failed: {msg}");
            EXIT_VERIFY
        }
    }
}

fn emit(global: &Global, tables: &[Table], stdout: &mut dyn Write) -> Result<(), Failure> {
    let text = render_all(tables, global.format);
    match &global.out {
        Some(path) => std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(usage),
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let g = &cli.global;
    let eff = Effective::load(g.config.as_deref(), Overrides { n: g.n, p: g.p }).map_err(usage)?;
    match &cli.command {
        Command::MvBench { dims } => {
            let dims = if dims.is_empty() { DEFAULT_MV_DIMS.to_vec() } else { dims.clone() };
            let table = mv_bench(&dims, &eff, g.seed).map_err(usage)?;
            emit(g, std::slice::from_ref(&table), stdout)?;
            let mismatches = table.rows.iter().filter(|r| r[9..].iter().any(|c| *c == false.into())).count();
            if mismatches > 0 {
                return Err(Failure::Verify(format!("{mismatches} benchmark rows disagree with the oracle or closed forms")));
            }
            Ok(())
        }
        Command::ConvBench { shapes } => {
            let shapes = if shapes.is_empty() { DEFAULT_CONV_DIMS.to_vec() } else { shapes.clone() };
            emit(g, &[conv_bench(&shapes, &eff).map_err(usage)?], stdout)
        }
        Command::Noise { dims, shapes } => {
            let dims = if dims.is_empty() { DEFAULT_MV_DIMS.to_vec() } else { dims.clone() };
            let shapes = if shapes.is_empty() { DEFAULT_CONV_DIMS.to_vec() } else { shapes.clone() };
            emit(g, &[noise_table(&dims, &shapes, &eff, g.seed).map_err(usage)?], stdout)
        }
        Command::Verify => {
            let report = run_verification(&eff, g.seed);
            emit(g, &[report.to_table()], stdout)?;
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(Failure::Verify(format!("{failed} of {} checks failed", report.checks.len())));
            }
            Ok(())
        }
        Command::Profile { network, mode } => {
            let specs = load_network(network).map_err(usage)?;
            let report = profile_network(&specs, &eff.params, &eff.cost, *mode, g.seed).map_err(|e| match e {
                ProfileError::Mismatch { .. } => Failure::Verify(e.to_string()),
                ProfileError::Layer { .. } => usage(e),
            })?;
            let name = network.file_name().map_or_else(|| network.display().to_string(), |f| f.to_string_lossy().into_owned());
            emit(g, &[report.to_table(&format!("{name}, n = {}", eff.params.n))], stdout)?;
            let _ = writeln!(
                stderr,
                "{name}: {} layers, perm {} -> {} ({:.2}x fewer), est. {:.3} ms -> {:.3} ms ({:.2}x)",
                specs.len(),
                report.totals().0.counts.perm,
                report.totals().1.counts.perm,
                report.perm_reduction(),
                report.totals().0.ms,
                report.totals().1.ms,
                report.speedup(),
            );
            Ok(())
        }
        Command::Calibrate => {
            let source = match (&g.config, std::env::var_os(CONFIG_ENV)) {
                (Some(p), _) => p.display().to_string(),
                (None, Some(p)) if !p.is_empty() => format!("{} (from {CONFIG_ENV})", PathBuf::from(p).display()),
                _ => "built-in defaults".to_owned(),
            };
            let text = format!("# source: {source}\n{}", eff.to_toml());
            match &g.out {
                Some(path) => std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
                None => stdout.write_all(text.as_bytes()).map_err(usage),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (u8, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("gala").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_args(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["mv-bench", "--dims", "16by128"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["mv-bench", "--bogus"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["profile", "--network", "/nonexistent.net"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["--n", "100", "conv-bench"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_exits_0() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("mv-bench"));
    }

    #[test]
    fn mv_bench_row() {
        let (code, out, _) = run_args(&["mv-bench", "--dims", "1x2048"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("1x2048,gazelle,11,"), "{out}");
        assert!(out.contains("1x2048,gala,0,"), "{out}");
    }

    #[test]
    fn calibrate_echo() {
        let (code, out, _) = run_args(&["calibrate", "--n", "4096"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("n = 4096"));
        assert!(out.contains("t_perm = 0.178"));
    }
}

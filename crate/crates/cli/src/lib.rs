//! Command-line front end for `wpcc-core`: single solves, parameter sweeps
//! written as CSV, and a Monte-Carlo verification report.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use wpcc_core::config::{dbm_to_watts, watts_to_dbm};
use wpcc_core::optimizer::solve;
use wpcc_core::{load_params_file, DesignSolution, Mode, Scenario};

pub mod verify;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_VERIFY_FAILED: u8 = 3;

pub const SWEEP_HEADER: &str = "sweep_var,value,mode,feasible,ps_star_dbm,prob_star,xi_star,r_c";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Config {
        path: PathBuf,
        source: wpcc_core::Error,
    },
    #[error(transparent)]
    Core(#[from] wpcc_core::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Parser)]
#[command(name = "wpcc", version, about = "Covert wireless-powered link design and verification")]
pub struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one design problem and print its row.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        /// Minimum effective covert rate, bits/s/Hz.
        #[arg(long)]
        rm: f64,
    },
    /// Sweep the rate floor or the receiver power and write CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        #[arg(long, value_enum)]
        var: SweepVar,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        points: usize,
        /// Rate floor held fixed during a `pr` sweep.
        #[arg(long, default_value_t = 0.5)]
        rm: f64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Monte-Carlo and grid-oracle checks and write a CSV report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        slots: usize,
        #[arg(long, default_value_t = 1_000_000)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    Rm,
    Pr,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::Rm => "rm",
            SweepVar::Pr => "pr",
        }
    }
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse::<Mode>().map_err(|e| e.to_string())
}

/// `%.10g`-style formatting: ten significant digits, trailing zeros removed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub var: SweepVar,
    pub value: f64,
    pub mode: Mode,
    pub solution: DesignSolution,
}

impl SweepRecord {
    pub fn csv_row(&self) -> String {
        let s = &self.solution;
        let ps_dbm = if s.feasible { watts_to_dbm(s.p_s_star) } else { 0.0 };
        format!(
            "{},{},{},{},{},{},{},{}",
            self.var.as_str(),
            fmt_sig(self.value),
            self.mode,
            u8::from(s.feasible),
            fmt_sig(ps_dbm),
            fmt_sig(s.prob_star),
            fmt_sig(s.xi_star),
            fmt_sig(s.r_c),
        )
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let params = load_params_file(path).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Scenario::new(params)?)
}

/// Uniform grid of `points` values from `from` to `to` inclusive.
pub fn sweep_grid(from: f64, to: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if !from.is_finite() || !to.is_finite() || from >= to {
        return Err(CliError::Usage(format!("sweep needs finite from < to, got {from} and {to}")));
    }
    if points < 2 {
        return Err(CliError::Usage(format!("sweep needs at least 2 points, got {points}")));
    }
    Ok((0..points)
        .map(|i| if i == points - 1 { to } else { from + (to - from) * i as f64 / (points - 1) as f64 })
        .collect())
}

pub fn sweep_records(sc: &Scenario, mode: Mode, var: SweepVar, grid: &[f64], fixed_rm: f64) -> Result<Vec<SweepRecord>, CliError> {
    let scenarios: Vec<(Scenario, f64)> = grid
        .iter()
        .map(|&v| match var {
            SweepVar::Rm => Ok((*sc, v)),
            SweepVar::Pr => Ok((Scenario::new(sc.params.with_p_r(dbm_to_watts(v)))?, fixed_rm)),
        })
        .collect::<Result<_, CliError>>()?;
    Ok(grid
        .par_iter()
        .zip(scenarios.par_iter())
        .map(|(&value, (s, r_m))| SweepRecord {
            var,
            value,
            mode,
            solution: solve(s, mode, *r_m),
        })
        .collect())
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut (dyn Write + Send)) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => stdout.write_all(text.as_bytes()).map_err(|source| CliError::Write {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn check_rate(r_m: f64) -> Result<(), CliError> {
    if r_m >= 0.0 && r_m.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--rm must be finite and >= 0, got {r_m}")))
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> u8 {
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command, stdout, stderr)),
            Err(e) => Err(CliError::Usage(format!("cannot start {n} threads: {e}"))),
        },
        None => dispatch(cli.command, stdout, stderr),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from_args<I, T>(args: I, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, stdout, stderr),
        Err(e) => {
            let informational = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let rendered = e.render().to_string();
            if informational {
                let _ = stdout.write_all(rendered.as_bytes());
                EXIT_OK
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
                EXIT_USAGE
            }
        }
    }
}

fn dispatch(command: Command, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<u8, CliError> {
    match command {
        Command::Solve { config, mode, rm } => {
            check_rate(rm)?;
            let sc = load_scenario(&config)?;
            let record = SweepRecord {
                var: SweepVar::Rm,
                value: rm,
                mode,
                solution: solve(&sc, mode, rm),
            };
            write_output(None, &format!("{SWEEP_HEADER}\n{}\n", record.csv_row()), stdout)?;
            Ok(if record.solution.feasible { EXIT_OK } else { EXIT_INFEASIBLE })
        }
        Command::Sweep {
            config,
            mode,
            var,
            from,
            to,
            points,
            rm,
            out,
        } => {
            check_rate(rm)?;
            let grid = sweep_grid(from, to, points)?;
            if var == SweepVar::Rm && from < 0.0 {
                return Err(CliError::Usage(format!("rate sweep must start at >= 0, got {from}")));
            }
            let sc = load_scenario(&config)?;
            let records = sweep_records(&sc, mode, var, &grid, rm)?;
            write_output(out.as_deref(), &sweep_csv(&records), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            config,
            seed,
            slots,
            trials,
            out,
        } => {
            let sc = load_scenario(&config)?;
            let settings = verify::VerifySettings {
                seed,
                n_slots: slots,
                n_trials: trials,
                ..verify::VerifySettings::default()
            };
            let report = verify::run_checks(&sc, &settings)?;
            for w in &report.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            write_output(out.as_deref(), &report.to_csv(), stdout)?;
            let failed = report.failed();
            if failed.is_empty() {
                Ok(EXIT_OK)
            } else {
                let _ = writeln!(stderr, "failed checks: {}", failed.join(", "));
                Ok(EXIT_VERIFY_FAILED)
            }
        }
    }
}

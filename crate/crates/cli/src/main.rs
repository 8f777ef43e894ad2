//! `mirs` command-line driver.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error, 3 I/O error.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info};
use mirs::channel::{build_cascade, AngleAssignment, CascadeParams, GainMode};
use mirs::metrics::{m_min, snr_gain_add_irs};
use mirs::optimize::{brute_force_candidates, oracle_check, BRUTE_FORCE_LIMIT};
use mirs::sim::{derive_seed, run_sweep, SweepSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_solvers, Config};
use crate::output::Format;

const VERSION: &str = concat!(
    env!("CARGO_PKG_NAME"),
    " ",
    env!("CARGO_PKG_VERSION"),
);

#[derive(Debug, Parser)]
#[command(name = "mirs", version, about = "Cascaded multi-IRS mmWave link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the sweep described in a config file.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Distance sweep comparing the listed solvers.
    Compare {
        config: PathBuf,
        /// Comma-separated solver names, e.g. closed_form,greedy_q2.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        solvers: Vec<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Element-count threshold for adding an IRS without losing SNR.
    Mmin {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = MminFormat::Text)]
        format: MminFormat,
    },
    /// Check the closed form against exhaustive search on random instances.
    OracleCheck {
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        levels: u32,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, env = "MIRS_SEED", default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, clap::Args)]
struct OutArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Base seed; overrides MIRS_SEED and the config file.
    #[arg(long, env = "MIRS_SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MminFormat {
    Text,
    Json,
}

#[derive(Debug)]
enum Failure {
    Verification(String),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

impl From<mirs::Error> for Failure {
    fn from(e: mirs::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<Config, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = config::parse(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        cfg.scenario.seed = seed;
    }
    cfg.log();
    Ok(cfg)
}

fn cmd_sweep(config: &Path, out: &OutArgs) -> Result<(), Failure> {
    let cfg = load(config, out.seed)?;
    let result = run_sweep(&cfg.scenario, &cfg.sweep)?;
    output::write_rows(&result.rows, out.format, out.out.as_deref())
}

fn cmd_compare(config: &Path, solvers: &[String], out: &OutArgs) -> Result<(), Failure> {
    let solvers = parse_solvers(solvers).map_err(Failure::Usage)?;
    let cfg = load(config, out.seed)?;
    let spec = SweepSpec::distance(&cfg.scenario, solvers);
    let result = run_sweep(&cfg.scenario, &spec)?;
    output::write_rows(&result.rows, out.format, out.out.as_deref())
}

fn cmd_mmin(config: &Path, format: MminFormat) -> Result<(), Failure> {
    let cfg = load(config, None)?;
    let sc = &cfg.scenario;
    let analytic = sc.analytic(sc.d_r.start_m, false)?;
    let threshold = m_min(&analytic);
    let ratio = snr_gain_add_irs(&analytic);
    match format {
        MminFormat::Text => {
            println!("m_min = {threshold}");
            println!("add_irs_gain_ratio = {ratio}");
        }
        MminFormat::Json => {
            let doc = serde_json::json!({
                "m_min": threshold,
                "add_irs_gain_ratio": ratio,
                "irs_elements": sc.irs_elements,
                "d_irs_m": sc.d_irs_m,
                "path_loss_exponent": sc.path_loss_exponent,
                "g0": analytic.g0(),
            });
            println!("{doc}");
        }
    }
    Ok(())
}

fn cmd_oracle_check(
    m: usize,
    k: usize,
    n: usize,
    levels: u32,
    trials: usize,
    seed: u64,
) -> Result<(), Failure> {
    if m < 1 || k < 1 || n < 1 || levels < 2 {
        return Err(Failure::Usage("need m, k, n >= 1 and levels >= 2".into()));
    }
    let candidates = brute_force_candidates(m, k, levels);
    if candidates > BRUTE_FORCE_LIMIT {
        return Err(Failure::Usage(format!(
            "search space of {candidates:e} candidates exceeds the {BRUTE_FORCE_LIMIT:e} limit"
        )));
    }
    info!("{VERSION}: oracle-check m={m} k={k} n={n} levels={levels} trials={trials} seed={seed}");
    let params = CascadeParams::unit(n, m, k);
    let mut failures = 0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[trial as u64]));
        let chain = build_cascade(&params, GainMode::Random, &AngleAssignment::UniformRandom, &mut rng)?;
        let v = oracle_check(&chain, 1.0, levels)?;
        if !v.passed() {
            failures += 1;
            println!(
                "FAIL trial {trial}: brute_force={:e} closed_form={:e} lower_bound={:e}",
                v.brute_force, v.closed_form, v.lower_bound
            );
        }
    }
    println!(
        "oracle-check: {}/{trials} passed (m={m} k={k} n={n} levels={levels})",
        trials - failures
    );
    if failures > 0 {
        Err(Failure::Verification(format!("{failures} instance(s) violated the bounds")))
    } else {
        Ok(())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    info!("{VERSION}");
    let result = match &cli.command {
        Command::Sweep { config, out } => cmd_sweep(config, out),
        Command::Compare { config, solvers, out } => cmd_compare(config, solvers, out),
        Command::Mmin { config, format } => cmd_mmin(config, *format),
        Command::OracleCheck { m, k, n, levels, trials, seed } => {
            cmd_oracle_check(*m, *k, *n, *levels, *trials, *seed)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            error!("{}", f.message());
            ExitCode::from(f.code())
        }
    }
}

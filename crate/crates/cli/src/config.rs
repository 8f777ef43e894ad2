//! TOML run configuration.
//!
//! Two tables, both optional. Every physical quantity carries its unit in the
//! key name. Unknown keys are rejected; missing keys take the defaults of
//! [`Scenario::default`] and are logged.
//!
//! ```toml
//! [scenario]
//! freq_ghz = 28.0
//! bs_antennas = 128
//! irs_elements = 1000
//! irs_count = 3
//! p_dbm = 46.0
//! noise_dbm = -94.0
//! d_t_m = 20.0
//! d_irs_m = 20.0
//! d_r_start_m = 1.0
//! d_r_stop_m = 100.0
//! d_r_points = 100
//! path_loss_exponent = 2.0
//! pl_d0_db = 61.4            # omit to use free-space loss at freq_ghz
//! d0_m = 1.0
//! gain_mode = "deterministic_amplitude"   # random | paper_literal
//! antenna_gains = [[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]
//! angles_rad = "uniform_random"           # or [[aoa, aod], ...] per hop
//! paths = 1
//! trials = 10000
//! seed = 0
//! reducer = "linear"                      # or "db"
//!
//! [sweep]
//! variable = "d_r"           # d_r | k | m
//! values = [1, 2, 3, 4]      # required for k and m; d_r uses the range
//! solvers = ["closed_form", "greedy_q2", "random_phase"]
//! at_d_r_m = 10.0            # UE distance for k and m sweeps
//! ```

use std::fmt;

use log::info;
use mirs::channel::{AngleAssignment, AntennaGain, GainMode, HopAngles};
use mirs::optimize::SolverKind;
use mirs::sim::{DistanceRange, Reducer, Scenario, SweepSpec, SweepVariable};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    scenario: RawScenario,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    freq_ghz: Option<f64>,
    bs_antennas: Option<usize>,
    irs_elements: Option<usize>,
    irs_count: Option<usize>,
    p_dbm: Option<f64>,
    noise_dbm: Option<f64>,
    d_t_m: Option<f64>,
    d_irs_m: Option<f64>,
    d_r_start_m: Option<f64>,
    d_r_stop_m: Option<f64>,
    d_r_points: Option<usize>,
    path_loss_exponent: Option<f64>,
    pl_d0_db: Option<f64>,
    d0_m: Option<f64>,
    gain_mode: Option<GainMode>,
    antenna_gains: Option<Vec<[f64; 2]>>,
    angles_rad: Option<RawAngles>,
    paths: Option<usize>,
    trials: Option<usize>,
    seed: Option<u64>,
    reducer: Option<Reducer>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawAngles {
    Policy(String),
    Fixed(Vec<[f64; 2]>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    variable: Option<String>,
    values: Option<Vec<f64>>,
    solvers: Option<Vec<String>>,
    at_d_r_m: Option<f64>,
}

/// A resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub scenario: Scenario,
    pub sweep: SweepSpec,
    /// `key = value` for every key that fell back to its default.
    pub defaults_used: Vec<String>,
}

/// 1-based line on which `key` is assigned, if any.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Resolver<'a> {
    text: &'a str,
    defaults: Vec<String>,
}

impl Resolver<'_> {
    fn take<T: fmt::Debug>(&mut self, key: &str, value: Option<T>, default: T) -> T {
        value.unwrap_or_else(|| {
            self.defaults.push(format!("{key} = {default:?}"));
            default
        })
    }

    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError { line: line_of(self.text, key), message: format!("{key}: {}", message.into()) }
    }

    fn at_least(&self, key: &str, value: usize, min: usize) -> Result<usize, ConfigError> {
        if value < min {
            Err(self.err(key, format!("must be at least {min}, got {value}")))
        } else {
            Ok(value)
        }
    }

    fn positive(&self, key: &str, value: f64) -> Result<f64, ConfigError> {
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(self.err(key, format!("must be positive, got {value}")))
        }
    }
}

/// Parses and resolves a configuration document.
pub fn parse(text: &str) -> Result<Config, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
        line: e.span().map(|s| line_of_offset(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    let d = Scenario::default();
    let mut r = Resolver { text, defaults: Vec::new() };
    let s = raw.scenario;

    let freq_ghz = r.take("freq_ghz", s.freq_ghz, d.freq_hz / 1e9);
    let freq_ghz = r.positive("freq_ghz", freq_ghz)?;
    let bs_antennas = r.take("bs_antennas", s.bs_antennas, d.bs_antennas);
    let bs_antennas = r.at_least("bs_antennas", bs_antennas, 1)?;
    let irs_elements = r.take("irs_elements", s.irs_elements, d.irs_elements);
    let irs_elements = r.at_least("irs_elements", irs_elements, 1)?;
    let irs_count = r.take("irs_count", s.irs_count, d.irs_count);
    let irs_count = r.at_least("irs_count", irs_count, 1)?;
    let p_dbm = r.take("p_dbm", s.p_dbm, d.p_dbm);
    let noise_dbm = r.take("noise_dbm", s.noise_dbm, d.noise_dbm);
    let d_t_m = r.take("d_t_m", s.d_t_m, d.d_t_m);
    let d_t_m = r.positive("d_t_m", d_t_m)?;
    let d_irs_m = r.take("d_irs_m", s.d_irs_m, d.d_irs_m);
    let d_irs_m = r.positive("d_irs_m", d_irs_m)?;
    let start_m = r.take("d_r_start_m", s.d_r_start_m, d.d_r.start_m);
    let start_m = r.positive("d_r_start_m", start_m)?;
    let stop_m = r.take("d_r_stop_m", s.d_r_stop_m, d.d_r.stop_m);
    let points = r.take("d_r_points", s.d_r_points, d.d_r.points);
    let points = r.at_least("d_r_points", points, 1)?;
    if points > 1 && stop_m <= start_m {
        return Err(r.err("d_r_stop_m", "must exceed d_r_start_m"));
    }
    let path_loss_exponent = r.take("path_loss_exponent", s.path_loss_exponent, d.path_loss_exponent);
    if path_loss_exponent.is_nan() || path_loss_exponent < 0.0 {
        return Err(r.err("path_loss_exponent", "must be non-negative"));
    }
    if s.pl_d0_db.is_none() {
        r.defaults.push("pl_d0_db = free-space loss at freq_ghz".into());
    }
    let d0_m = r.take("d0_m", s.d0_m, d.d0_m);
    let d0_m = r.positive("d0_m", d0_m)?;
    if start_m < d0_m {
        return Err(r.err("d_r_start_m", format!("must be at least d0_m = {d0_m}")));
    }
    let gain_mode = r.take("gain_mode", s.gain_mode, d.gain_mode);
    let antenna_gains = r
        .take("antenna_gains", s.antenna_gains, Vec::new())
        .into_iter()
        .map(|[tx, rx]| AntennaGain { tx, rx })
        .collect::<Vec<_>>();
    if !antenna_gains.is_empty() && antenna_gains.len() != irs_count + 1 {
        return Err(r.err("antenna_gains", format!("needs irs_count + 1 = {} entries", irs_count + 1)));
    }
    let angles = match s.angles_rad {
        None => {
            r.defaults.push("angles_rad = \"uniform_random\"".into());
            AngleAssignment::UniformRandom
        }
        Some(RawAngles::Policy(p)) if p == "uniform_random" => AngleAssignment::UniformRandom,
        Some(RawAngles::Policy(p)) => {
            return Err(r.err("angles_rad", format!("unknown policy {p:?}, expected \"uniform_random\" or a list")))
        }
        Some(RawAngles::Fixed(list)) => {
            if list.len() != irs_count + 1 {
                return Err(r.err("angles_rad", format!("needs irs_count + 1 = {} pairs", irs_count + 1)));
            }
            AngleAssignment::Fixed(list.into_iter().map(|[aoa, aod]| HopAngles { aoa, aod }).collect())
        }
    };
    let paths = r.take("paths", s.paths, d.paths);
    let paths = r.at_least("paths", paths, 1)?;
    let trials = r.take("trials", s.trials, d.trials);
    let trials = r.at_least("trials", trials, 1)?;
    let seed = r.take("seed", s.seed, d.seed);
    let reducer = r.take("reducer", s.reducer, d.reducer);

    let scenario = Scenario {
        freq_hz: freq_ghz * 1e9,
        bs_antennas,
        irs_elements,
        irs_count,
        p_dbm,
        noise_dbm,
        d_t_m,
        d_irs_m,
        d_r: DistanceRange { start_m, stop_m, points },
        path_loss_exponent,
        pl_d0_db: s.pl_d0_db,
        d0_m,
        gain_mode,
        antenna_gains,
        angles,
        paths,
        trials,
        seed,
        reducer,
    };
    scenario
        .validate()
        .map_err(|e| ConfigError { line: None, message: format!("scenario: {e}") })?;

    let sw = raw.sweep.unwrap_or_default();
    let variable = r.take("variable", sw.variable, "d_r".to_string());
    let variable: SweepVariable = variable
        .parse()
        .map_err(|e: mirs::Error| r.err("variable", e.to_string()))?;
    let values = match (variable, sw.values) {
        (SweepVariable::DistanceR, None) => scenario.d_r.values(),
        (SweepVariable::DistanceR, Some(_)) => {
            return Err(r.err("values", "d_r sweeps take their values from the d_r range keys"))
        }
        (_, Some(v)) => v,
        (_, None) => return Err(ConfigError { line: None, message: format!("sweep over {variable} needs a values list") }),
    };
    let solver_names = r.take("solvers", sw.solvers, vec!["closed_form".to_string()]);
    let solvers = parse_solvers(&solver_names).map_err(|m| r.err("solvers", m))?;
    let spec = SweepSpec { variable, values, solvers, at_d_r_m: sw.at_d_r_m };
    spec.validate()
        .map_err(|e| ConfigError { line: line_of(text, "values"), message: format!("sweep: {e}") })?;

    Ok(Config { scenario, sweep: spec, defaults_used: r.defaults })
}

/// Parses solver names; an empty list is an error.
pub fn parse_solvers<S: AsRef<str>>(names: &[S]) -> Result<Vec<SolverKind>, String> {
    if names.is_empty() {
        return Err("at least one solver is required".into());
    }
    names
        .iter()
        .map(|n| n.as_ref().parse::<SolverKind>().map_err(|e| e.to_string()))
        .collect()
}

impl Config {
    pub fn log(&self) {
        for d in &self.defaults_used {
            info!("default: {d}");
        }
        info!("scenario: {:?}", self.scenario);
        info!("sweep: {:?}", self.sweep);
        info!("base seed: {}", self.scenario.seed);
    }
}

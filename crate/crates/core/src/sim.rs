//! Scenarios, the Monte-Carlo trial engine and parameter sweeps.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    build_cascade, AngleAssignment, AntennaGain, CascadeChannel, CascadeParams, GainMode,
    PathLossLaw,
};
use crate::error::{invalid, Error, Result};
use crate::metrics::{
    dbm_to_watts, received_power, snr, to_db, AnalyticScenario, LinkBudget, Snr,
};
use crate::optimize::{solve, SolverKind};

/// Linearly spaced UE distances from the last IRS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRange {
    pub start_m: f64,
    pub stop_m: f64,
    pub points: usize,
}

impl DistanceRange {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start_m];
        }
        let step = (self.stop_m - self.start_m) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.stop_m
                } else {
                    self.start_m + step * i as f64
                }
            })
            .collect()
    }
}

/// How per-trial SNRs are averaged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reducer {
    /// Mean of linear SNR, then converted to dB.
    #[default]
    Linear,
    /// Mean of per-trial dB values.
    Db,
}

/// Link geometry, system parameters and Monte-Carlo settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub freq_hz: f64,
    pub bs_antennas: usize,
    pub irs_elements: usize,
    pub irs_count: usize,
    pub p_dbm: f64,
    pub noise_dbm: f64,
    pub d_t_m: f64,
    pub d_irs_m: f64,
    pub d_r: DistanceRange,
    pub path_loss_exponent: f64,
    /// Reference loss; `None` uses the free-space loss at `freq_hz`.
    pub pl_d0_db: Option<f64>,
    pub d0_m: f64,
    pub gain_mode: GainMode,
    pub antenna_gains: Vec<AntennaGain>,
    pub angles: AngleAssignment,
    pub paths: usize,
    pub trials: usize,
    pub seed: u64,
    pub reducer: Reducer,
}

impl Default for Scenario {
    /// 28 GHz, 128 BS antennas, 46 dBm transmit power, −94 dBm noise, three
    /// 1000-element surfaces 20 m apart, BS 20 m from the first one, UE at
    /// 1..100 m from the last one.
    fn default() -> Self {
        Self {
            freq_hz: 28e9,
            bs_antennas: 128,
            irs_elements: 1000,
            irs_count: 3,
            p_dbm: 46.0,
            noise_dbm: -94.0,
            d_t_m: 20.0,
            d_irs_m: 20.0,
            d_r: DistanceRange { start_m: 1.0, stop_m: 100.0, points: 100 },
            path_loss_exponent: 2.0,
            pl_d0_db: None,
            d0_m: 1.0,
            gain_mode: GainMode::DeterministicAmplitude,
            antenna_gains: Vec::new(),
            angles: AngleAssignment::UniformRandom,
            paths: 1,
            trials: 10_000,
            seed: 0,
            reducer: Reducer::Linear,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.freq_hz > 0.0) {
            return Err(invalid("frequency must be positive"));
        }
        if self.bs_antennas < 1 || self.irs_elements < 1 || self.irs_count < 1 {
            return Err(invalid("N, M and K must be at least 1"));
        }
        if self.trials < 1 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.paths < 1 {
            return Err(invalid("paths must be at least 1"));
        }
        if self.d_r.points < 1 {
            return Err(invalid("d_r range needs at least one point"));
        }
        if self.d_r.start_m < self.d0_m {
            return Err(invalid(format!(
                "d_r range starts at {} m, below the reference distance {} m",
                self.d_r.start_m, self.d0_m
            )));
        }
        if self.d_r.points > 1 && !(self.d_r.stop_m > self.d_r.start_m) {
            return Err(invalid("d_r range must be increasing"));
        }
        if !(self.d_t_m > 0.0 && self.d_irs_m > 0.0) {
            return Err(invalid("distances must be positive"));
        }
        if !self.antenna_gains.is_empty() && self.antenna_gains.len() != self.irs_count + 1 {
            return Err(invalid(format!(
                "antenna gains need K + 1 = {} entries",
                self.irs_count + 1
            )));
        }
        self.path_loss()?;
        Ok(())
    }

    pub fn path_loss(&self) -> Result<PathLossLaw> {
        match self.pl_d0_db {
            Some(pl) => PathLossLaw::new(pl, self.path_loss_exponent, self.d0_m),
            None => PathLossLaw::free_space(self.freq_hz, self.path_loss_exponent, self.d0_m),
        }
    }

    pub fn p_tx_w(&self) -> f64 {
        dbm_to_watts(self.p_dbm)
    }

    pub fn noise_w(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn cascade_params(&self, d_r_m: f64) -> Result<CascadeParams> {
        Ok(CascadeParams {
            bs_antennas: self.bs_antennas,
            irs_elements: self.irs_elements,
            irs_count: self.irs_count,
            d_t_m: self.d_t_m,
            d_irs_m: self.d_irs_m,
            d_r_m,
            path_loss: self.path_loss()?,
            antenna_gains: self.antenna_gains.clone(),
            paths: self.paths,
        })
    }

    pub fn budget(&self) -> Result<LinkBudget> {
        LinkBudget::new(
            self.p_tx_w(),
            self.noise_w(),
            self.bs_antennas,
            self.irs_elements,
            self.irs_count,
        )
    }

    /// Closed-form counterpart of this scenario at UE distance `d_r_m`.
    pub fn analytic(&self, d_r_m: f64, literal: bool) -> Result<AnalyticScenario> {
        AnalyticScenario::new(
            self.d_t_m,
            d_r_m,
            self.d_irs_m,
            self.path_loss()?,
            self.budget()?,
            literal,
        )
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable seed for a position in the sweep grid.
///
/// `h ← splitmix64(base)`, then for each index `h ← splitmix64(h ⊕
/// splitmix64(index + position·γ))` with `γ` the 64-bit golden ratio. Every
/// step is a bijection in the index being absorbed, so seeds never collide
/// when only one index varies.
pub fn derive_seed(base: u64, indices: &[u64]) -> u64 {
    indices.iter().enumerate().fold(splitmix64(base), |h, (pos, &idx)| {
        splitmix64(h ^ splitmix64(idx.wrapping_add((pos as u64).wrapping_mul(GOLDEN_GAMMA))))
    })
}

const CHANNEL_STREAM: u64 = 0;
const SOLVER_STREAM: u64 = 1;

/// Channel realization for grid point `point`, trial `trial`.
pub fn trial_channel(
    scenario: &Scenario,
    point: usize,
    d_r_m: f64,
    trial: usize,
) -> Result<CascadeChannel> {
    let seed = derive_seed(scenario.seed, &[point as u64, trial as u64, CHANNEL_STREAM]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    build_cascade(
        &scenario.cascade_params(d_r_m)?,
        scenario.gain_mode,
        &scenario.angles,
        &mut rng,
    )
}

fn solve_trial(
    scenario: &Scenario,
    chain: &CascadeChannel,
    point: usize,
    trial: usize,
    solver: SolverKind,
) -> Result<Snr> {
    let solver = match solver {
        SolverKind::RandomPhase { seed } => solver.reseeded(derive_seed(
            scenario.seed,
            &[point as u64, trial as u64, SOLVER_STREAM, seed],
        )),
        other => other,
    };
    let p_tx = scenario.p_tx_w();
    let solution = solve(solver, chain, p_tx)?;
    Ok(snr(received_power(chain, &solution)?, scenario.noise_w()))
}

/// One realization, one solve, one evaluation. `point` indexes the sweep grid
/// and feeds the seed together with `trial`.
pub fn run_trial(
    scenario: &Scenario,
    point: usize,
    d_r_m: f64,
    solver: SolverKind,
    trial: usize,
) -> Result<Snr> {
    let chain = trial_channel(scenario, point, d_r_m, trial)?;
    solve_trial(scenario, &chain, point, trial, solver)
}

/// Quantity varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "d_r")]
    DistanceR,
    #[serde(rename = "k")]
    IrsCount,
    #[serde(rename = "m")]
    IrsElements,
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVariable::DistanceR => "d_r",
            SweepVariable::IrsCount => "k",
            SweepVariable::IrsElements => "m",
        })
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d_r" => Ok(SweepVariable::DistanceR),
            "k" => Ok(SweepVariable::IrsCount),
            "m" => Ok(SweepVariable::IrsElements),
            other => Err(invalid(format!("unknown sweep variable {other:?}"))),
        }
    }
}

/// What to sweep and which solvers to score.
///
/// `K` and `M` sweeps are evaluated at the single UE distance `at_d_r_m`
/// (defaulting to the start of the scenario's distance range).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub solvers: Vec<SolverKind>,
    pub at_d_r_m: Option<f64>,
}

impl SweepSpec {
    /// Distance sweep over the scenario's `d_r` range.
    pub fn distance(scenario: &Scenario, solvers: Vec<SolverKind>) -> Self {
        Self {
            variable: SweepVariable::DistanceR,
            values: scenario.d_r.values(),
            solvers,
            at_d_r_m: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(invalid("sweep needs at least one value"));
        }
        if self.values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("sweep values must be strictly increasing"));
        }
        if self.solvers.is_empty() {
            return Err(invalid("sweep needs at least one solver"));
        }
        if self.variable != SweepVariable::DistanceR
            && self.values.iter().any(|v| !(*v >= 1.0 && v.fract() == 0.0))
        {
            return Err(invalid(format!(
                "{} sweep values must be positive integers",
                self.variable
            )));
        }
        for s in &self.solvers {
            s.validate()?;
        }
        Ok(())
    }

    /// Scenario and UE distance used at sweep value `value`.
    fn point(&self, base: &Scenario, value: f64) -> (Scenario, f64) {
        let mut sc = base.clone();
        let at = self.at_d_r_m.unwrap_or(base.d_r.start_m);
        match self.variable {
            SweepVariable::DistanceR => return (sc, value),
            SweepVariable::IrsCount => sc.irs_count = value as usize,
            SweepVariable::IrsElements => sc.irs_elements = value as usize,
        }
        (sc, at)
    }
}

/// One output row. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub variable: String,
    pub value: f64,
    pub solver: String,
    pub mean_snr_db: f64,
    pub stderr_db: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Rows of one solver, in sweep order.
    pub fn series(&self, solver: &str) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.solver == solver).collect()
    }
}

/// Mean and standard error of a set of SNR samples, in dB.
pub fn reduce(samples: &[Snr], reducer: Reducer) -> (f64, f64) {
    let n = samples.len() as f64;
    let (mean, se) = match reducer {
        Reducer::Linear => mean_stderr(samples.iter().map(|s| s.linear), n),
        Reducer::Db => mean_stderr(samples.iter().map(|s| s.db), n),
    };
    match reducer {
        Reducer::Db => (mean, se),
        Reducer::Linear => {
            let db = if mean > 0.0 { to_db(mean) } else { f64::NEG_INFINITY };
            // first-order propagation of the linear standard error
            let se_db = if mean > 0.0 { 10.0 / std::f64::consts::LN_10 * se / mean } else { 0.0 };
            (db, se_db)
        }
    }
}

fn mean_stderr(xs: impl Iterator<Item = f64> + Clone, n: f64) -> (f64, f64) {
    let mean = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Runs a sweep with the default (parallel) execution.
pub fn run_sweep(scenario: &Scenario, spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with(scenario, spec, Execution::Parallel)
}

/// Runs every `(value, trial)` pair, scoring all solvers on the same channel
/// realization, then folds the samples in `(value, solver, trial)` order.
/// Output is bit-identical for serial and parallel execution.
pub fn run_sweep_with(
    scenario: &Scenario,
    spec: &SweepSpec,
    execution: Execution,
) -> Result<SweepResult> {
    scenario.validate()?;
    spec.validate()?;
    let points: Vec<(Scenario, f64)> = spec.values.iter().map(|&v| spec.point(scenario, v)).collect();
    for (sc, _) in &points {
        sc.validate()?;
    }

    let trials = scenario.trials;
    let task = |idx: usize| -> Result<Vec<Snr>> {
        let (point, trial) = (idx / trials, idx % trials);
        let (sc, d_r) = &points[point];
        let chain = trial_channel(sc, point, *d_r, trial)?;
        spec.solvers
            .iter()
            .map(|&s| solve_trial(sc, &chain, point, trial, s))
            .collect()
    };
    let total = points.len() * trials;
    let samples: Vec<Vec<Snr>> = match execution {
        Execution::Serial => (0..total).map(task).collect::<Result<_>>()?,
        Execution::Parallel => (0..total).into_par_iter().map(task).collect::<Result<_>>()?,
    };

    let mut rows = Vec::with_capacity(points.len() * spec.solvers.len());
    for (point, &value) in spec.values.iter().enumerate() {
        let block = &samples[point * trials..(point + 1) * trials];
        for (s, solver) in spec.solvers.iter().enumerate() {
            let column: Vec<Snr> = block.iter().map(|t| t[s]).collect();
            let (mean_snr_db, stderr_db) = reduce(&column, scenario.reducer);
            rows.push(SweepRow {
                variable: spec.variable.to_string(),
                value,
                solver: solver.to_string(),
                mean_snr_db,
                stderr_db,
                trials,
            });
        }
    }
    Ok(SweepResult { rows })
}

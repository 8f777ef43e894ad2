//! Received power, SNR, and the closed-form link-budget expressions.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::channel::{rotate, CascadeChannel, PathLossLaw, C64};
use crate::error::{invalid, Result};
use crate::optimize::BeamformingSolution;

/// Converts dBm to watts: `10^((dBm − 30)/10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn check_solution(chain: &CascadeChannel, solution: &BeamformingSolution) -> Result<()> {
    if solution.w.len() != chain.bs_antennas() {
        return Err(invalid(format!(
            "precoder has {} entries, BS has {} antennas",
            solution.w.len(),
            chain.bs_antennas()
        )));
    }
    chain.check_phases(&solution.thetas)
}

/// Received power `|h_rᴴ Θ_K G_{K−1} … Θ_1 t w|²`, propagating `w` through
/// every hop as a matrix-vector product.
///
/// This is the evaluator every solver is scored by; it does not use the
/// rank-1 factorization.
pub fn received_power(chain: &CascadeChannel, solution: &BeamformingSolution) -> Result<f64> {
    check_solution(chain, solution)?;
    let hops = chain.hops();
    let mut v = hops[0].apply(&solution.w);
    for (k, hop) in hops.iter().enumerate().skip(1) {
        rotate(&mut v, &solution.thetas[k - 1]);
        v = hop.apply(&v);
    }
    Ok(v[0].norm_sqr())
}

/// Same quantity as [`received_power`], computed by materializing every
/// channel and phase matrix and multiplying them out.
pub fn received_power_dense(chain: &CascadeChannel, solution: &BeamformingSolution) -> Result<f64> {
    check_solution(chain, solution)?;
    let hops = chain.hops();
    let mut acc: DMatrix<C64> = hops[0].dense();
    for (k, hop) in hops.iter().enumerate().skip(1) {
        let theta = DMatrix::from_diagonal(&DVector::from_iterator(
            solution.thetas[k - 1].len(),
            solution.thetas[k - 1].iter().map(|&t| C64::from_polar(1.0, t)),
        ));
        acc = hop.dense() * theta * acc;
    }
    let w = DVector::from_column_slice(&solution.w);
    let y = acc * w;
    Ok(y[0].norm_sqr())
}

/// Signal-to-noise ratio in linear and dB form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Snr {
    pub linear: f64,
    /// `-inf` when the received power is zero.
    pub db: f64,
}

/// `γ = p_rx / noise_power`.
pub fn snr(p_rx: f64, noise_power: f64) -> Snr {
    assert!(noise_power > 0.0, "noise power must be positive");
    let linear = p_rx / noise_power;
    Snr {
        linear,
        db: if linear > 0.0 { to_db(linear) } else { f64::NEG_INFINITY },
    }
}

/// Transmit power, noise power and array sizes of a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub p_tx_w: f64,
    pub noise_power_w: f64,
    pub bs_antennas: usize,
    pub irs_elements: usize,
    pub irs_count: usize,
}

impl LinkBudget {
    pub fn new(
        p_tx_w: f64,
        noise_power_w: f64,
        bs_antennas: usize,
        irs_elements: usize,
        irs_count: usize,
    ) -> Result<Self> {
        if !(p_tx_w > 0.0 && noise_power_w > 0.0) {
            return Err(invalid("transmit and noise power must be positive"));
        }
        if bs_antennas == 0 || irs_elements == 0 || irs_count == 0 {
            return Err(invalid("N, M and K must be at least 1"));
        }
        Ok(Self { p_tx_w, noise_power_w, bs_antennas, irs_elements, irs_count })
    }
}

/// Deterministic geometry for the closed-form SNR expressions.
///
/// `literal` selects the expression exactly as usually printed, with the
/// noise power squared in the denominator. Otherwise the noise enters to the
/// first power, which is what a power-consistent simulation with
/// `|g|² = 10^(−PL/10)` produces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticScenario {
    pub d_t_m: f64,
    pub d_r_m: f64,
    pub d_irs_m: f64,
    pub path_loss: PathLossLaw,
    pub budget: LinkBudget,
    pub literal: bool,
}

impl AnalyticScenario {
    pub fn new(
        d_t_m: f64,
        d_r_m: f64,
        d_irs_m: f64,
        path_loss: PathLossLaw,
        budget: LinkBudget,
        literal: bool,
    ) -> Result<Self> {
        for (name, d) in [("d_t", d_t_m), ("d_r", d_r_m), ("d_irs", d_irs_m)] {
            if !(d.is_finite() && d >= path_loss.d0_m) {
                return Err(invalid(format!(
                    "{name} = {d} must be at least the reference distance {}",
                    path_loss.d0_m
                )));
            }
        }
        Ok(Self { d_t_m, d_r_m, d_irs_m, path_loss, budget, literal })
    }

    pub fn g0(&self) -> f64 {
        self.path_loss.g0()
    }

    /// `(d/d0)^n`
    fn dist_factor(&self, d: f64) -> f64 {
        (d / self.path_loss.d0_m).powf(self.path_loss.exponent)
    }

    fn noise_term(&self) -> f64 {
        let n0 = self.budget.noise_power_w;
        if self.literal {
            n0 * n0
        } else {
            n0
        }
    }
}

/// Closed-form SNR of the aligned cascade:
/// `M^{2K} · N · P · g0^{K+1} / (d_rⁿ · d_tⁿ · d_IRS^{n(K−1)} · N0^q)` with
/// `q = 2` in literal mode and `q = 1` otherwise. Distances are in units of
/// the reference distance.
pub fn analytic_snr(s: &AnalyticScenario) -> f64 {
    let b = &s.budget;
    let k = b.irs_count as i32;
    let m = b.irs_elements as f64;
    let num = m.powi(2 * k) * b.bs_antennas as f64 * b.p_tx_w * s.g0().powi(k + 1);
    let den = s.dist_factor(s.d_r_m)
        * s.dist_factor(s.d_t_m)
        * s.dist_factor(s.d_irs_m).powi(k - 1)
        * s.noise_term();
    num / den
}

/// SNR ratio `γ_{K+1} / γ_K = M² · g0 / d_IRSⁿ` for an array of `elements`
/// (real-valued so the threshold itself can be probed).
pub fn add_irs_gain_ratio(s: &AnalyticScenario, elements: f64) -> f64 {
    elements * elements * s.g0() / s.dist_factor(s.d_irs_m)
}

/// SNR ratio from appending one more IRS at the configured element count.
pub fn snr_gain_add_irs(s: &AnalyticScenario) -> f64 {
    add_irs_gain_ratio(s, s.budget.irs_elements as f64)
}

/// Element count at which adding an IRS leaves the SNR unchanged:
/// `√(d_IRSⁿ / g0)`.
pub fn m_min(s: &AnalyticScenario) -> f64 {
    (s.dist_factor(s.d_irs_m) / s.g0()).sqrt()
}

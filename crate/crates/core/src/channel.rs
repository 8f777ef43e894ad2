//! Array responses, path loss, complex gains and the cascaded channel chain.
//!
//! A cascade with `K` surfaces is stored as `K + 1` hops:
//!
//! ```text
//! hop 0        BS -> IRS 1       M x N
//! hop k        IRS k -> IRS k+1  M x M   (k = 1..K-1)
//! hop K        IRS K -> UE       1 x M
//! ```
//!
//! Each hop is either a [`Rank1Channel`] (single line-of-sight path) or a
//! general [`MultipathChannel`].

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Deref;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const NORM_TOL: f64 = 1e-12;
const ANGLE_TOL: f64 = 1e-12;

/// Finite complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVec(Vec<C64>);

impl ComplexVec {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("complex vector has non-finite entries"));
        }
        Ok(Self(entries))
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Hermitian inner product `selfᴴ other`.
    pub fn inner(&self, other: &[C64]) -> C64 {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(other).map(|(a, b)| a.conj() * b).sum()
    }

    /// True when every entry has modulus `1/√len` (a normalized array response).
    pub fn is_normalized_response(&self) -> bool {
        if self.0.is_empty() {
            return false;
        }
        let expected = 1.0 / (self.0.len() as f64).sqrt();
        self.0.iter().all(|z| (z.norm() - expected).abs() <= NORM_TOL)
    }
}

impl Deref for ComplexVec {
    type Target = [C64];

    fn deref(&self) -> &[C64] {
        &self.0
    }
}

/// Uniform linear array response with half-wavelength spacing:
/// entry `i` is `exp(j·π·i·sin(angle)) / √size`.
pub fn array_response(size: usize, angle: f64) -> Result<ComplexVec> {
    if size == 0 {
        return Err(invalid("array size must be at least 1"));
    }
    if !angle.is_finite() || angle.abs() > FRAC_PI_2 + ANGLE_TOL {
        return Err(invalid(format!("angle {angle} outside [-pi/2, pi/2]")));
    }
    let amp = 1.0 / (size as f64).sqrt();
    let step = PI * angle.sin();
    Ok(ComplexVec(
        (0..size)
            .map(|i| C64::from_polar(amp, step * i as f64))
            .collect(),
    ))
}

/// Free-space wavelength for a carrier frequency in Hz.
pub fn wavelength(freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / freq_hz
}

/// Log-distance path-loss law, losses stored as positive dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossLaw {
    pub pl_d0_db: f64,
    pub exponent: f64,
    pub d0_m: f64,
}

/// Result of a path-loss evaluation. `clamped` is set when the requested
/// distance was below the reference distance and was raised to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub db: f64,
    pub clamped: bool,
}

impl PathLossLaw {
    pub fn new(pl_d0_db: f64, exponent: f64, d0_m: f64) -> Result<Self> {
        if !pl_d0_db.is_finite() {
            return Err(invalid("reference path loss must be finite"));
        }
        if !(exponent.is_finite() && exponent >= 0.0) {
            return Err(invalid(format!("path-loss exponent {exponent} must be >= 0")));
        }
        if !(d0_m.is_finite() && d0_m > 0.0) {
            return Err(invalid(format!("reference distance {d0_m} must be > 0")));
        }
        Ok(Self { pl_d0_db, exponent, d0_m })
    }

    /// Law whose reference loss is the free-space loss `(4π·d0/λ)²` at `freq_hz`.
    pub fn free_space(freq_hz: f64, exponent: f64, d0_m: f64) -> Result<Self> {
        if !(freq_hz.is_finite() && freq_hz > 0.0) {
            return Err(invalid("carrier frequency must be > 0"));
        }
        let pl = 20.0 * (4.0 * PI * d0_m / wavelength(freq_hz)).log10();
        Self::new(pl, exponent, d0_m)
    }

    pub fn eval(&self, d_m: f64) -> Result<PathLoss> {
        if !(d_m.is_finite() && d_m > 0.0) {
            return Err(invalid(format!("distance {d_m} must be > 0")));
        }
        let clamped = d_m < self.d0_m;
        let d = d_m.max(self.d0_m);
        Ok(PathLoss {
            db: self.pl_d0_db + 10.0 * self.exponent * (d / self.d0_m).log10(),
            clamped,
        })
    }

    /// Path loss in dB at `d_m`; distances below `d0` are clamped to `d0`.
    pub fn path_loss_db(&self, d_m: f64) -> Result<f64> {
        self.eval(d_m).map(|pl| pl.db)
    }

    /// Linear reference gain `g0 = 10^(−PL(d0)/10)`.
    pub fn g0(&self) -> f64 {
        10f64.powf(-self.pl_d0_db / 10.0)
    }
}

/// How complex path gains are produced from a path loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// `g ~ CN(0, 10^(−PL/10))`, drawn from the supplied generator.
    Random,
    /// `g = 10^(−PL/20)`: same mean power as `Random`, no fading.
    #[default]
    DeterministicAmplitude,
    /// `g = 10^(−PL/10)` used directly as the amplitude.
    PaperLiteral,
}

impl GainMode {
    pub fn is_random(self) -> bool {
        matches!(self, GainMode::Random)
    }
}

/// Complex path gain for a loss of `pl_db`. The generator is only consumed
/// in [`GainMode::Random`].
pub fn sample_gain<R: Rng + ?Sized>(mode: GainMode, pl_db: f64, rng: &mut R) -> C64 {
    match mode {
        GainMode::Random => {
            let sigma = 10f64.powf(-pl_db / 20.0);
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            C64::new(x, y) * (sigma / std::f64::consts::SQRT_2)
        }
        GainMode::DeterministicAmplitude => C64::new(10f64.powf(-pl_db / 20.0), 0.0),
        GainMode::PaperLiteral => C64::new(10f64.powf(-pl_db / 10.0), 0.0),
    }
}

/// Rank-1 channel `mu · rx · txᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Channel {
    mu: C64,
    rx: ComplexVec,
    tx: ComplexVec,
}

/// Builds a rank-1 hop; both vectors must be normalized array responses.
pub fn make_rank1(mu: C64, rx: ComplexVec, tx: ComplexVec) -> Result<Rank1Channel> {
    if !mu.re.is_finite() || !mu.im.is_finite() {
        return Err(invalid("rank-1 gain must be finite"));
    }
    if !rx.is_normalized_response() || !tx.is_normalized_response() {
        return Err(invalid(
            "rank-1 channel needs normalized array responses on both sides",
        ));
    }
    Ok(Rank1Channel { mu, rx, tx })
}

impl Rank1Channel {
    pub fn mu(&self) -> C64 {
        self.mu
    }

    pub fn rx(&self) -> &ComplexVec {
        &self.rx
    }

    pub fn tx(&self) -> &ComplexVec {
        &self.tx
    }

    pub fn rows(&self) -> usize {
        self.rx.len()
    }

    pub fn cols(&self) -> usize {
        self.tx.len()
    }

    pub fn dense(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows(), self.cols(), |i, j| {
            self.mu * self.rx[i] * self.tx[j].conj()
        })
    }

    /// Same channel with its gain replaced by `mu`.
    pub fn with_mu(&self, mu: C64) -> Self {
        Self { mu, ..self.clone() }
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let s = self.mu * self.tx.inner(v);
        self.rx.iter().map(|a| a * s).collect()
    }

    fn apply_row(&self, r: &[C64]) -> Vec<C64> {
        let s: C64 = self.mu * r.iter().zip(self.rx.iter()).map(|(a, b)| a * b).sum::<C64>();
        self.tx.iter().map(|b| s * b.conj()).collect()
    }
}

/// One propagation path of a multipath hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub gain: C64,
    pub aoa: f64,
    pub aod: f64,
}

/// Saleh-Valenzuela hop `√(rx·tx/L) · Σ g_l · a_rx(aoa_l) · a_tx(aod_l)ᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathChannel {
    paths: Vec<PathComponent>,
    rx_size: usize,
    tx_size: usize,
    responses: Vec<(ComplexVec, ComplexVec)>,
}

impl MultipathChannel {
    pub fn new(paths: Vec<PathComponent>, rx_size: usize, tx_size: usize) -> Result<Self> {
        if paths.is_empty() {
            return Err(invalid("multipath channel needs at least one path"));
        }
        let responses = paths
            .iter()
            .map(|p| Ok((array_response(rx_size, p.aoa)?, array_response(tx_size, p.aod)?)))
            .collect::<Result<Vec<_>>>()?;
        if paths.iter().any(|p| !p.gain.re.is_finite() || !p.gain.im.is_finite()) {
            return Err(invalid("path gains must be finite"));
        }
        Ok(Self { paths, rx_size, tx_size, responses })
    }

    pub fn paths(&self) -> &[PathComponent] {
        &self.paths
    }

    pub fn rx_size(&self) -> usize {
        self.rx_size
    }

    pub fn tx_size(&self) -> usize {
        self.tx_size
    }

    pub fn scale(&self) -> f64 {
        ((self.rx_size * self.tx_size) as f64 / self.paths.len() as f64).sqrt()
    }

    /// The rank-1 channel carried by a single-path hop.
    pub fn to_rank1(&self) -> Option<Rank1Channel> {
        match (self.paths.as_slice(), self.responses.as_slice()) {
            ([p], [(rx, tx)]) => Some(Rank1Channel {
                mu: p.gain * self.scale(),
                rx: rx.clone(),
                tx: tx.clone(),
            }),
            _ => None,
        }
    }

    pub fn dense(&self) -> DMatrix<C64> {
        let scale = self.scale();
        let mut out = DMatrix::zeros(self.rx_size, self.tx_size);
        for (p, (rx, tx)) in self.paths.iter().zip(&self.responses) {
            for i in 0..self.rx_size {
                for j in 0..self.tx_size {
                    out[(i, j)] += p.gain * scale * rx[i] * tx[j].conj();
                }
            }
        }
        out
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let scale = self.scale();
        let mut out = vec![C64::new(0.0, 0.0); self.rx_size];
        for (p, (rx, tx)) in self.paths.iter().zip(&self.responses) {
            let s = p.gain * scale * tx.inner(v);
            out.iter_mut().zip(rx.iter()).for_each(|(o, a)| *o += a * s);
        }
        out
    }

    fn apply_row(&self, r: &[C64]) -> Vec<C64> {
        let scale = self.scale();
        let mut out = vec![C64::new(0.0, 0.0); self.tx_size];
        for (p, (rx, tx)) in self.paths.iter().zip(&self.responses) {
            let s: C64 = p.gain * scale * r.iter().zip(rx.iter()).map(|(a, b)| a * b).sum::<C64>();
            out.iter_mut().zip(tx.iter()).for_each(|(o, b)| *o += s * b.conj());
        }
        out
    }
}

/// A single hop of the cascade.
#[derive(Debug, Clone, PartialEq)]
pub enum Hop {
    Rank1(Rank1Channel),
    Multipath(MultipathChannel),
}

impl Hop {
    pub fn rows(&self) -> usize {
        match self {
            Hop::Rank1(h) => h.rows(),
            Hop::Multipath(h) => h.rx_size(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Hop::Rank1(h) => h.cols(),
            Hop::Multipath(h) => h.tx_size(),
        }
    }

    pub fn as_rank1(&self) -> Option<&Rank1Channel> {
        match self {
            Hop::Rank1(h) => Some(h),
            Hop::Multipath(_) => None,
        }
    }

    pub fn dense(&self) -> DMatrix<C64> {
        match self {
            Hop::Rank1(h) => h.dense(),
            Hop::Multipath(h) => h.dense(),
        }
    }

    /// Matrix-vector product `H·v`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols(), "hop input dimension");
        match self {
            Hop::Rank1(h) => h.apply(v),
            Hop::Multipath(h) => h.apply(v),
        }
    }

    /// Row-vector product `r·H` (no conjugation of `r`).
    pub fn apply_row(&self, r: &[C64]) -> Vec<C64> {
        assert_eq!(r.len(), self.rows(), "hop row dimension");
        match self {
            Hop::Rank1(h) => h.apply_row(r),
            Hop::Multipath(h) => h.apply_row(r),
        }
    }
}

/// The ordered hop chain BS -> IRS 1 -> ... -> IRS K -> UE for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeChannel {
    hops: Vec<Hop>,
}

impl CascadeChannel {
    pub fn new(hops: Vec<Hop>) -> Result<Self> {
        if hops.len() < 2 {
            return Err(invalid("cascade needs at least one IRS (two hops)"));
        }
        let m = hops[0].rows();
        if m == 0 || hops[0].cols() == 0 {
            return Err(invalid("BS link has an empty dimension"));
        }
        let last = hops.len() - 1;
        for (k, hop) in hops.iter().enumerate().skip(1) {
            let rows = if k == last { 1 } else { m };
            if hop.rows() != rows || hop.cols() != m {
                return Err(invalid(format!(
                    "hop {k} is {}x{}, expected {rows}x{m}",
                    hop.rows(),
                    hop.cols()
                )));
            }
        }
        Ok(Self { hops })
    }

    pub fn hops(&self) -> &[Hop] {
        &self.hops
    }

    pub fn irs_count(&self) -> usize {
        self.hops.len() - 1
    }

    pub fn irs_elements(&self) -> usize {
        self.hops[0].rows()
    }

    pub fn bs_antennas(&self) -> usize {
        self.hops[0].cols()
    }

    pub fn is_rank1(&self) -> bool {
        self.hops.iter().all(|h| h.as_rank1().is_some())
    }

    /// All hops as rank-1 channels, or `UnsupportedChannel` naming the first
    /// multipath hop.
    pub fn rank1_hops(&self) -> Result<Vec<&Rank1Channel>> {
        self.hops
            .iter()
            .enumerate()
            .map(|(k, h)| {
                h.as_rank1().ok_or_else(|| {
                    Error::UnsupportedChannel(format!("hop {k} has more than one path"))
                })
            })
            .collect()
    }

    /// Same chain with every hop gain replaced by `f(k, mu)`. Rank-1 only.
    pub fn map_gains(&self, mut f: impl FnMut(usize, C64) -> C64) -> Result<Self> {
        let hops = self
            .rank1_hops()?
            .into_iter()
            .enumerate()
            .map(|(k, h)| Hop::Rank1(h.with_mu(f(k, h.mu()))))
            .collect();
        Ok(Self { hops })
    }

    /// End-to-end row channel `h_rᴴ Θ_K G_{K−1} … Θ_1 t` (length N) for the
    /// given per-IRS phase vectors.
    pub fn effective_row(&self, phases: &[Vec<f64>]) -> Result<Vec<C64>> {
        self.check_phases(phases)?;
        let k = self.irs_count();
        let mut row = self.hops[k].apply_row(&[C64::new(1.0, 0.0)]);
        for irs in (1..=k).rev() {
            rotate(&mut row, &phases[irs - 1]);
            row = self.hops[irs - 1].apply_row(&row);
        }
        Ok(row)
    }

    pub(crate) fn check_phases(&self, phases: &[Vec<f64>]) -> Result<()> {
        if phases.len() != self.irs_count() {
            return Err(invalid(format!(
                "got {} phase vectors for {} IRSs",
                phases.len(),
                self.irs_count()
            )));
        }
        let m = self.irs_elements();
        if let Some(bad) = phases.iter().position(|p| p.len() != m) {
            return Err(invalid(format!(
                "phase vector {} has length {}, expected {m}",
                bad,
                phases[bad].len()
            )));
        }
        Ok(())
    }
}

/// Multiplies each entry by `e^{jθ_i}`.
pub(crate) fn rotate(v: &mut [C64], phases: &[f64]) {
    v.iter_mut()
        .zip(phases)
        .for_each(|(z, &t)| *z *= C64::from_polar(1.0, t));
}

/// Transmit- and receive-side antenna gains of one hop (amplitude factors).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaGain {
    pub tx: f64,
    pub rx: f64,
}

impl Default for AntennaGain {
    fn default() -> Self {
        Self { tx: 1.0, rx: 1.0 }
    }
}

/// Arrival/departure angles of one hop, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopAngles {
    pub aoa: f64,
    pub aod: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub enum AngleAssignment {
    /// Every angle drawn uniformly on `[−π/2, π/2]` per realization.
    #[default]
    UniformRandom,
    /// One `(aoa, aod)` pair per hop, `K + 1` entries. Single-path hops only.
    Fixed(Vec<HopAngles>),
}

/// Geometry and array sizes of a cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeParams {
    pub bs_antennas: usize,
    pub irs_elements: usize,
    pub irs_count: usize,
    pub d_t_m: f64,
    pub d_irs_m: f64,
    pub d_r_m: f64,
    pub path_loss: PathLossLaw,
    /// Empty means unit gains on every hop; otherwise `K + 1` entries.
    pub antenna_gains: Vec<AntennaGain>,
    /// Paths per hop (`L`); 1 gives rank-1 hops.
    pub paths: usize,
}

impl CascadeParams {
    /// Lossless single-path geometry (`PL = 0 dB` at every distance), handy
    /// for random test instances with unit-power gains.
    pub fn unit(bs_antennas: usize, irs_elements: usize, irs_count: usize) -> Self {
        Self {
            bs_antennas,
            irs_elements,
            irs_count,
            d_t_m: 1.0,
            d_irs_m: 1.0,
            d_r_m: 1.0,
            path_loss: PathLossLaw { pl_d0_db: 0.0, exponent: 0.0, d0_m: 1.0 },
            antenna_gains: Vec::new(),
            paths: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.irs_count < 1 {
            return Err(invalid("IRS count K must be at least 1"));
        }
        if self.bs_antennas < 1 || self.irs_elements < 1 {
            return Err(invalid("array sizes must be at least 1"));
        }
        if self.paths < 1 {
            return Err(invalid("paths per hop must be at least 1"));
        }
        if !self.antenna_gains.is_empty() && self.antenna_gains.len() != self.irs_count + 1 {
            return Err(invalid(format!(
                "expected {} antenna gain entries, got {}",
                self.irs_count + 1,
                self.antenna_gains.len()
            )));
        }
        Ok(())
    }

    fn antenna_gain(&self, hop: usize) -> f64 {
        self.antenna_gains
            .get(hop)
            .map_or(1.0, |g| g.tx * g.rx)
    }

    /// `(rows, cols, distance)` of hop `k`.
    fn hop_shape(&self, k: usize) -> (usize, usize, f64) {
        let m = self.irs_elements;
        if k == 0 {
            (m, self.bs_antennas, self.d_t_m)
        } else if k == self.irs_count {
            (1, m, self.d_r_m)
        } else {
            (m, m, self.d_irs_m)
        }
    }
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-FRAC_PI_2..=FRAC_PI_2)
}

/// Draws one realization of the cascade.
///
/// Hop gains follow `μ = √(rows·cols) · g · Λ_tx · Λ_rx`, i.e. `√(MN)` for the
/// BS link, `M` between surfaces and `√M` towards the UE. Random draws are
/// taken hop by hop, path by path, in the order `aoa, aod, gain`, so the chain
/// is a pure function of the inputs and the generator state.
pub fn build_cascade<R: Rng + ?Sized>(
    params: &CascadeParams,
    mode: GainMode,
    angles: &AngleAssignment,
    rng: &mut R,
) -> Result<CascadeChannel> {
    params.validate()?;
    if let AngleAssignment::Fixed(list) = angles {
        if list.len() != params.irs_count + 1 {
            return Err(invalid(format!(
                "fixed angles need {} entries, got {}",
                params.irs_count + 1,
                list.len()
            )));
        }
        if params.paths != 1 {
            return Err(invalid("fixed angles are only supported with one path per hop"));
        }
    }

    let mut hops = Vec::with_capacity(params.irs_count + 1);
    for k in 0..=params.irs_count {
        let (rows, cols, d) = params.hop_shape(k);
        let pl_db = params.path_loss.path_loss_db(d)?;
        let antenna = params.antenna_gain(k);
        let mut paths = Vec::with_capacity(params.paths);
        for _ in 0..params.paths {
            let (aoa, aod) = match angles {
                AngleAssignment::Fixed(list) => (list[k].aoa, list[k].aod),
                AngleAssignment::UniformRandom => (uniform_angle(rng), uniform_angle(rng)),
            };
            let gain = sample_gain(mode, pl_db, rng) * antenna;
            paths.push(PathComponent { gain, aoa, aod });
        }
        let hop = MultipathChannel::new(paths, rows, cols)?;
        hops.push(match hop.to_rank1() {
            Some(r1) => Hop::Rank1(r1),
            None => Hop::Multipath(hop),
        });
    }
    CascadeChannel::new(hops)
}

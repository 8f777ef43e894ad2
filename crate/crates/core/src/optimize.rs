//! Joint precoder / phase-shift solvers.
//!
//! On a rank-1 cascade the end-to-end scalar channel factors as
//!
//! ```text
//! y = (Π_i μ_i) · Π_k (θ_k · u_k) · (β_0ᴴ w),    u_k = conj(β_k) ∘ α_{k−1}
//! ```
//!
//! where `α_{k−1}` is the receive response of the hop arriving at IRS `k` and
//! `β_k` the transmit response of the hop leaving it. Each factor is
//! maximized independently: phases by `θ_{k,i} = −arg(u_{k,i})`, the precoder
//! by MRT on `β_0`. That is [`solve_closed_form`]. The other solvers are
//! baselines and a brute-force oracle used to check it.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{rotate, CascadeChannel, ComplexVec, C64};
use crate::error::{invalid, Error, Result};
use crate::metrics::received_power;

/// Largest number of phase combinations [`brute_force`] will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e8;

/// BS precoder plus one phase vector (radians) per IRS.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    pub w: ComplexVec,
    pub thetas: Vec<Vec<f64>>,
}

impl BeamformingSolution {
    pub fn precoder_power(&self) -> f64 {
        self.w.norm_sqr()
    }
}

/// Per-IRS alignment vector `u_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentVector(pub ComplexVec);

impl AlignmentVector {
    /// `Σ_i |u_i|`, the best achievable `|θ·u|`.
    pub fn modulus_sum(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).sum()
    }

    /// `θ·u = Σ_i e^{jθ_i} u_i`.
    pub fn response(&self, phases: &[f64]) -> C64 {
        self.0
            .iter()
            .zip(phases)
            .map(|(u, &t)| C64::from_polar(1.0, t) * u)
            .sum()
    }
}

/// Alignment vectors `u_1..u_K` of a rank-1 chain.
pub fn alignment_vectors(chain: &CascadeChannel) -> Result<Vec<AlignmentVector>> {
    let hops = chain.rank1_hops()?;
    Ok(hops
        .windows(2)
        .map(|pair| {
            let (incoming, outgoing) = (pair[0], pair[1]);
            let u = outgoing
                .tx()
                .iter()
                .zip(incoming.rx().iter())
                .map(|(b, a)| b.conj() * a)
                .collect();
            AlignmentVector(ComplexVec::new(u).expect("finite responses"))
        })
        .collect())
}

/// The factored end-to-end amplitude `(Π μ)·Π(θ_k·u_k)·(β_0ᴴ w)` of a rank-1
/// chain. Agrees with the matrix-chain evaluation for arbitrary phases.
pub fn factored_response(chain: &CascadeChannel, solution: &BeamformingSolution) -> Result<C64> {
    let hops = chain.rank1_hops()?;
    chain.check_phases(&solution.thetas)?;
    if solution.w.len() != chain.bs_antennas() {
        return Err(invalid("precoder length does not match BS antennas"));
    }
    let mu: C64 = hops.iter().map(|h| h.mu()).product();
    let irs: C64 = alignment_vectors(chain)?
        .iter()
        .zip(&solution.thetas)
        .map(|(u, t)| u.response(t))
        .product();
    // receive side of the UE hop is the scalar response [1]
    let ue_rx = hops[hops.len() - 1].rx()[0];
    Ok(mu * irs * ue_rx * hops[0].tx().inner(&solution.w))
}

/// `θ_i = −arg(u_i)`; entries with `u_i = 0` get phase 0.
pub fn phase_align(u: &AlignmentVector) -> Vec<f64> {
    u.0.iter()
        .map(|z| if *z == C64::new(0.0, 0.0) { 0.0 } else { -z.arg() })
        .collect()
}

/// MRT precoder `√P · β_0 / ‖β_0‖`, so that `|β_0ᴴ w| = √P·‖β_0‖`.
pub fn mrt_precoder(beta0: &[C64], p_tx: f64) -> Result<ComplexVec> {
    if !(p_tx > 0.0 && p_tx.is_finite()) {
        return Err(invalid(format!("transmit power {p_tx} must be positive")));
    }
    let norm = beta0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(invalid("MRT direction is the zero vector"));
    }
    let s = p_tx.sqrt() / norm;
    ComplexVec::new(beta0.iter().map(|z| z * s).collect())
}

/// MRT against an effective row channel `h` (`y = h·w`): `w ∝ conj(h)`.
/// Falls back to the first antenna when `h` vanishes.
fn mrt_for_row(row: &[C64], p_tx: f64) -> Result<ComplexVec> {
    let conj: Vec<C64> = row.iter().map(|z| z.conj()).collect();
    match mrt_precoder(&conj, p_tx) {
        Ok(w) => Ok(w),
        Err(_) if p_tx > 0.0 => {
            let mut e = vec![C64::new(0.0, 0.0); row.len()];
            e[0] = C64::new(p_tx.sqrt(), 0.0);
            ComplexVec::new(e)
        }
        Err(e) => Err(e),
    }
}

/// Closed-form joint solution for a rank-1 chain.
pub fn solve_closed_form(chain: &CascadeChannel, p_tx: f64) -> Result<BeamformingSolution> {
    let thetas = alignment_vectors(chain)?.iter().map(phase_align).collect();
    let hops = chain.rank1_hops()?;
    let w = mrt_precoder(hops[0].tx(), p_tx)?;
    Ok(BeamformingSolution { w, thetas })
}

/// Per-IRS quantized alignment: each IRS, in order, rounds `−arg(u_{k,i})` to
/// the nearest point of the `2^bits` grid `{2π·q/2^bits}`. The precoder is MRT.
pub fn solve_greedy_quantized(
    chain: &CascadeChannel,
    p_tx: f64,
    bits: u32,
) -> Result<BeamformingSolution> {
    if !(1..=24).contains(&bits) {
        return Err(invalid(format!("quantizer bits {bits} outside 1..=24")));
    }
    let levels = 1u64 << bits;
    let step = TAU / levels as f64;
    let thetas = alignment_vectors(chain)?
        .iter()
        .map(|u| {
            phase_align(u)
                .into_iter()
                .map(|t| {
                    let q = (t.rem_euclid(TAU) / step).round() as u64 % levels;
                    q as f64 * step
                })
                .collect()
        })
        .collect();
    let w = mrt_precoder(chain.rank1_hops()?[0].tx(), p_tx)?;
    Ok(BeamformingSolution { w, thetas })
}

/// Uniform random phases on `[0, 2π)` with MRT on the resulting end-to-end
/// channel. Works on any chain.
pub fn solve_random_phase(
    chain: &CascadeChannel,
    p_tx: f64,
    seed: u64,
) -> Result<BeamformingSolution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = chain.irs_elements();
    let thetas: Vec<Vec<f64>> = (0..chain.irs_count())
        .map(|_| (0..m).map(|_| rng.random_range(0.0..TAU)).collect())
        .collect();
    let w = mrt_for_row(&chain.effective_row(&thetas)?, p_tx)?;
    Ok(BeamformingSolution { w, thetas })
}

/// Outcome of [`solve_alternating`].
#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingReport {
    pub solution: BeamformingSolution,
    /// Received power at the start and after each full sweep.
    pub power_history: Vec<f64>,
    /// Stopped because a sweep improved power by less than `tol` (relative),
    /// i.e. reached a coordinate-wise stationary point. `false` means the
    /// sweep budget ran out first.
    pub converged: bool,
}

impl AlternatingReport {
    pub fn final_power(&self) -> f64 {
        *self.power_history.last().expect("history starts non-empty")
    }

    pub fn sweeps(&self) -> usize {
        self.power_history.len() - 1
    }
}

/// Coordinate ascent for arbitrary (multipath) chains.
///
/// Starting from zero phases and MRT, each sweep re-aligns IRS 1..K in turn
/// against the channel seen through the others, then recomputes MRT on the
/// end-to-end channel. Every step is optimal for its block, so power never
/// decreases.
pub fn solve_alternating(
    chain: &CascadeChannel,
    p_tx: f64,
    max_iters: usize,
    tol: f64,
) -> Result<AlternatingReport> {
    if max_iters < 1 {
        return Err(invalid("alternating optimization needs max_iters >= 1"));
    }
    if !(tol >= 0.0) {
        return Err(invalid("tolerance must be non-negative"));
    }
    let k_count = chain.irs_count();
    let m = chain.irs_elements();
    let hops = chain.hops();
    let mut thetas = vec![vec![0.0; m]; k_count];
    let mut w = mrt_for_row(&chain.effective_row(&thetas)?, p_tx)?;
    let mut history = vec![power_of(chain, &w, &thetas)?];
    let mut converged = false;

    for _ in 0..max_iters {
        for k in 1..=k_count {
            // signal arriving at IRS k
            let mut incoming = hops[0].apply(&w);
            for j in 1..k {
                rotate(&mut incoming, &thetas[j - 1]);
                incoming = hops[j].apply(&incoming);
            }
            // row channel from IRS k's output to the UE
            let mut outgoing = hops[k_count].apply_row(&[C64::new(1.0, 0.0)]);
            for j in (k + 1..=k_count).rev() {
                rotate(&mut outgoing, &thetas[j - 1]);
                outgoing = hops[j - 1].apply_row(&outgoing);
            }
            thetas[k - 1] = incoming
                .iter()
                .zip(&outgoing)
                .map(|(b, a)| {
                    let c = a * b;
                    if c == C64::new(0.0, 0.0) { 0.0 } else { -c.arg() }
                })
                .collect();
        }
        w = mrt_for_row(&chain.effective_row(&thetas)?, p_tx)?;
        let prev = *history.last().unwrap();
        let now = power_of(chain, &w, &thetas)?;
        history.push(now);
        if now - prev <= tol * now.abs() {
            converged = true;
            break;
        }
    }
    Ok(AlternatingReport {
        solution: BeamformingSolution { w, thetas },
        power_history: history,
        converged,
    })
}

fn power_of(chain: &CascadeChannel, w: &ComplexVec, thetas: &[Vec<f64>]) -> Result<f64> {
    received_power(chain, &BeamformingSolution { w: w.clone(), thetas: thetas.to_vec() })
}

/// Best grid point found by [`brute_force`].
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub power: f64,
    pub solution: BeamformingSolution,
    /// Number of phase combinations evaluated.
    pub candidates: u64,
}

/// Number of phase combinations [`brute_force`] enumerates: the first element
/// of every IRS is pinned to phase 0, the rest range over `levels` values.
pub fn brute_force_candidates(elements: usize, irs_count: usize, levels: u32) -> f64 {
    (levels as f64).powi(((elements - 1) * irs_count) as i32)
}

/// Exhaustive search over the uniform `levels`-point phase grid, with MRT on
/// the end-to-end channel for every candidate. Any chain, including
/// multipath.
///
/// Rotating all phases of one IRS by a grid step multiplies the end-to-end
/// channel by a unit scalar, so pinning each IRS's first element to phase 0
/// loses nothing. Ties go to the lexicographically smallest phase index.
pub fn brute_force(chain: &CascadeChannel, p_tx: f64, levels: u32) -> Result<BruteForceResult> {
    if levels < 2 {
        return Err(invalid(format!("need at least 2 phase levels, got {levels}")));
    }
    if !(p_tx > 0.0) {
        return Err(invalid("transmit power must be positive"));
    }
    let m = chain.irs_elements();
    let k_count = chain.irs_count();
    let candidates = brute_force_candidates(m, k_count, levels);
    if candidates > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { candidates, limit: BRUTE_FORCE_LIMIT });
    }
    let total = candidates as u64;
    let free = (m - 1) * k_count;
    let step = TAU / levels as f64;
    let levels = levels as u64;

    let decode = |mut index: u64, thetas: &mut [Vec<f64>]| {
        // last free element is the least significant digit
        for slot in (0..free).rev() {
            let digit = index % levels;
            index /= levels;
            thetas[slot / (m - 1)][slot % (m - 1) + 1] = digit as f64 * step;
        }
    };

    // The last IRS's free digits are the least significant, so the product
    // of every hop before it changes only once per `block` candidates.
    let hops: Vec<DMatrix<C64>> = chain.hops().iter().map(|h| h.dense()).collect();
    let user_row = hops[k_count].row(0).transpose();
    let phasor: Vec<C64> = (0..levels).map(|d| C64::from_polar(1.0, d as f64 * step)).collect();
    let block = levels.pow((m - 1) as u32);
    let prefix = |high: u64, thetas: &mut [Vec<f64>]| -> DMatrix<C64> {
        decode(high * block, thetas);
        let mut acc = hops[0].clone();
        for irs in 1..k_count {
            for (i, &t) in thetas[irs - 1].iter().enumerate() {
                let mut r = acc.row_mut(i);
                r *= C64::from_polar(1.0, t);
            }
            acc = &hops[irs] * acc;
        }
        acc
    };

    const CHUNK: u64 = 1 << 12;
    let chunks = total.div_ceil(CHUNK);
    let (best_gain, best_index) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut thetas = vec![vec![0.0; m]; k_count];
            let mut best = (f64::NEG_INFINITY, u64::MAX);
            let mut cached: Option<(u64, DMatrix<C64>)> = None;
            let mut weights = vec![C64::new(0.0, 0.0); m];
            let mut row = vec![C64::new(0.0, 0.0); chain.bs_antennas()];
            for index in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let (high, mut low) = (index / block, index % block);
                if cached.as_ref().map_or(true, |(h, _)| *h != high) {
                    cached = Some((high, prefix(high, &mut thetas)));
                }
                let b = &cached.as_ref().expect("set above").1;
                for i in (0..m).rev() {
                    let digit = if i == 0 {
                        0
                    } else {
                        let d = low % levels;
                        low /= levels;
                        d
                    };
                    weights[i] = user_row[i] * phasor[digit as usize];
                }
                row.iter_mut().enumerate().for_each(|(j, z)| {
                    *z = weights.iter().enumerate().map(|(i, wi)| wi * b[(i, j)]).sum();
                });
                let g: f64 = row.iter().map(|z| z.norm_sqr()).sum();
                if g > best.0 {
                    best = (g, index);
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |a, b| {
                if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                    a
                } else {
                    b
                }
            },
        );
    debug_assert!(best_gain.is_finite());

    let mut thetas = vec![vec![0.0; m]; k_count];
    decode(best_index, &mut thetas);
    let w = mrt_for_row(&chain.effective_row(&thetas)?, p_tx)?;
    let solution = BeamformingSolution { w, thetas };
    Ok(BruteForceResult {
        power: received_power(chain, &solution)?,
        solution,
        candidates: total,
    })
}

/// Closed form vs brute force on one rank-1 chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleVerdict {
    pub closed_form: f64,
    pub brute_force: f64,
    /// `closed_form · cos^{2K}(π/levels)`
    pub lower_bound: f64,
    pub upper_ok: bool,
    pub lower_ok: bool,
}

impl OracleVerdict {
    pub fn passed(&self) -> bool {
        self.upper_ok && self.lower_ok
    }
}

/// Relative slack used when comparing solver powers.
pub const POWER_SLACK: f64 = 1e-9;

/// Checks `closed_form · cos^{2K}(π/levels) ≤ brute_force ≤ closed_form`.
pub fn oracle_check(chain: &CascadeChannel, p_tx: f64, levels: u32) -> Result<OracleVerdict> {
    let cf = received_power(chain, &solve_closed_form(chain, p_tx)?)?;
    let bf = brute_force(chain, p_tx, levels)?.power;
    let lower = cf * (PI / levels as f64).cos().powi(2 * chain.irs_count() as i32);
    Ok(OracleVerdict {
        closed_form: cf,
        brute_force: bf,
        lower_bound: lower,
        upper_ok: bf <= cf * (1.0 + POWER_SLACK),
        lower_ok: bf >= lower * (1.0 - POWER_SLACK),
    })
}

/// Solver selection, as named on the command line and in CSV output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverKind {
    ClosedForm,
    RandomPhase { seed: u64 },
    GreedyQuantized { bits: u32 },
    AlternatingOpt { max_iters: usize, tol: f64 },
    BruteForce { levels: u32 },
}

pub const DEFAULT_ALTERNATING_ITERS: usize = 100;
pub const DEFAULT_ALTERNATING_TOL: f64 = 1e-12;
pub const DEFAULT_BRUTE_FORCE_LEVELS: u32 = 16;

impl SolverKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SolverKind::GreedyQuantized { bits } if !(1..=24).contains(&bits) => {
                Err(invalid("greedy quantizer needs 1..=24 bits"))
            }
            SolverKind::AlternatingOpt { max_iters, tol } if max_iters < 1 || !(tol >= 0.0) => {
                Err(invalid("alternating optimization needs max_iters >= 1 and tol >= 0"))
            }
            SolverKind::BruteForce { levels } if levels < 2 => {
                Err(invalid("brute force needs at least 2 levels"))
            }
            _ => Ok(()),
        }
    }

    /// Same solver with its random seed replaced; no-op for deterministic ones.
    pub fn reseeded(self, seed: u64) -> Self {
        match self {
            SolverKind::RandomPhase { .. } => SolverKind::RandomPhase { seed },
            other => other,
        }
    }
}

/// Runs the selected solver.
pub fn solve(kind: SolverKind, chain: &CascadeChannel, p_tx: f64) -> Result<BeamformingSolution> {
    kind.validate()?;
    match kind {
        SolverKind::ClosedForm => solve_closed_form(chain, p_tx),
        SolverKind::RandomPhase { seed } => solve_random_phase(chain, p_tx, seed),
        SolverKind::GreedyQuantized { bits } => solve_greedy_quantized(chain, p_tx, bits),
        SolverKind::AlternatingOpt { max_iters, tol } => {
            solve_alternating(chain, p_tx, max_iters, tol).map(|r| r.solution)
        }
        SolverKind::BruteForce { levels } => brute_force(chain, p_tx, levels).map(|r| r.solution),
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SolverKind::ClosedForm => f.write_str("closed_form"),
            SolverKind::RandomPhase { seed: 0 } => f.write_str("random_phase"),
            SolverKind::RandomPhase { seed } => write!(f, "random_phase_s{seed}"),
            SolverKind::GreedyQuantized { bits } => write!(f, "greedy_q{bits}"),
            SolverKind::AlternatingOpt { max_iters, .. } if max_iters == DEFAULT_ALTERNATING_ITERS => {
                f.write_str("alternating")
            }
            SolverKind::AlternatingOpt { max_iters, .. } => write!(f, "alternating_i{max_iters}"),
            SolverKind::BruteForce { levels } if levels == DEFAULT_BRUTE_FORCE_LEVELS => {
                f.write_str("brute_force")
            }
            SolverKind::BruteForce { levels } => write!(f, "brute_force_l{levels}"),
        }
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |rest: &str| -> Result<u64> {
            rest.parse()
                .map_err(|_| invalid(format!("bad numeric suffix in solver name {s:?}")))
        };
        let kind = match s.trim() {
            "closed_form" => SolverKind::ClosedForm,
            "random_phase" => SolverKind::RandomPhase { seed: 0 },
            "alternating" => SolverKind::AlternatingOpt {
                max_iters: DEFAULT_ALTERNATING_ITERS,
                tol: DEFAULT_ALTERNATING_TOL,
            },
            "brute_force" => SolverKind::BruteForce { levels: DEFAULT_BRUTE_FORCE_LEVELS },
            other => {
                if let Some(rest) = other.strip_prefix("random_phase_s") {
                    SolverKind::RandomPhase { seed: num(rest)? }
                } else if let Some(rest) = other.strip_prefix("greedy_q") {
                    SolverKind::GreedyQuantized { bits: num(rest)? as u32 }
                } else if let Some(rest) = other.strip_prefix("alternating_i") {
                    SolverKind::AlternatingOpt {
                        max_iters: num(rest)? as usize,
                        tol: DEFAULT_ALTERNATING_TOL,
                    }
                } else if let Some(rest) = other.strip_prefix("brute_force_l") {
                    SolverKind::BruteForce { levels: num(rest)? as u32 }
                } else {
                    return Err(invalid(format!("unknown solver {other:?}")));
                }
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{
        array_response, build_cascade, make_rank1, AngleAssignment, CascadeParams, GainMode, Hop,
    };
    use crate::metrics::received_power_dense;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn u(entries: &[C64]) -> AlignmentVector {
        AlignmentVector(ComplexVec::new(entries.to_vec()).unwrap())
    }

    fn random_chain(n: usize, m: usize, k: usize, paths: usize, seed: u64) -> CascadeChannel {
        let mut params = CascadeParams::unit(n, m, k);
        params.paths = paths;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        build_cascade(&params, GainMode::Random, &AngleAssignment::UniformRandom, &mut rng).unwrap()
    }

    fn mu_power(chain: &CascadeChannel) -> f64 {
        chain.rank1_hops().unwrap().iter().map(|h| h.mu().norm_sqr()).product()
    }

    #[test]
    fn alignment_scalar_chain() {
        let one = ComplexVec::from_real(&[1.0]).unwrap();
        let hop = Hop::Rank1(make_rank1(c(1.0, 0.0), one.clone(), one).unwrap());
        let chain = CascadeChannel::new(vec![hop.clone(), hop]).unwrap();
        let us = alignment_vectors(&chain).unwrap();
        assert_eq!(us.len(), 1);
        assert_eq!(us[0].0.as_slice(), &[c(1.0, 0.0)]);
    }

    #[test]
    fn alignment_elementwise_product() {
        let s = 1.0 / 2f64.sqrt();
        let alpha = ComplexVec::from_real(&[s, s]).unwrap();
        let beta = ComplexVec::from_real(&[s, -s]).unwrap();
        let bs = ComplexVec::from_real(&[1.0]).unwrap();
        let t = Hop::Rank1(make_rank1(c(1.0, 0.0), alpha, bs).unwrap());
        let ue = Hop::Rank1(
            make_rank1(c(1.0, 0.0), ComplexVec::from_real(&[1.0]).unwrap(), beta).unwrap(),
        );
        let chain = CascadeChannel::new(vec![t, ue]).unwrap();
        let us = alignment_vectors(&chain).unwrap();
        assert!((us[0].0[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((us[0].0[1] - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn alignment_modulus_sums_to_one() {
        for seed in 0..20 {
            let chain = random_chain(3, 1 + seed as usize % 7, 1 + seed as usize % 4, 1, seed);
            for u in alignment_vectors(&chain).unwrap() {
                assert_relative_eq!(u.modulus_sum(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn alignment_rejects_multipath() {
        let chain = random_chain(2, 2, 2, 2, 1);
        assert!(matches!(alignment_vectors(&chain), Err(Error::UnsupportedChannel(_))));
    }

    #[test]
    fn phase_align_examples() {
        let t = phase_align(&u(&[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)]));
        let wrap = |x: f64| x.rem_euclid(TAU);
        assert_relative_eq!(wrap(t[0]), 0.0, epsilon = 1e-15);
        assert_relative_eq!(wrap(t[1]), wrap(-PI / 2.0), epsilon = 1e-15);
        assert_relative_eq!(wrap(t[2]), PI, epsilon = 1e-15);
        let sum = u(&[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)]).response(&t);
        assert!((sum - c(3.0, 0.0)).norm() < 1e-15);

        assert_eq!(phase_align(&u(&[c(0.5, 0.0), c(0.5, 0.0)])), vec![0.0, 0.0]);
        assert_eq!(phase_align(&u(&[c(0.0, 0.0)])), vec![0.0]);
    }

    #[test]
    fn phase_align_random_m64() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v: Vec<C64> = (0..64)
            .map(|_| C64::from_polar(rng.random::<f64>(), rng.random_range(-PI..PI)))
            .collect();
        let v = u(&v);
        let direct: f64 = v.0.iter().map(|z| z.norm()).sum();
        let got = v.response(&phase_align(&v));
        assert!((got - c(direct, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn mrt_examples() {
        let w = mrt_precoder(&[c(1.0, 0.0)], 4.0).unwrap();
        assert_eq!(w.as_slice(), &[c(2.0, 0.0)]);
        let b = array_response(4, 0.0).unwrap();
        let w = mrt_precoder(&b, 1.0).unwrap();
        for z in w.iter() {
            assert_relative_eq!(z.re, 0.5, epsilon = 1e-15);
        }
        let b = array_response(7, 0.4).unwrap();
        let w = mrt_precoder(&b, 3.0).unwrap();
        assert_relative_eq!(b.inner(&w).norm_sqr(), 3.0, max_relative = 1e-12);
        assert_relative_eq!(w.norm_sqr(), 3.0, max_relative = 1e-12);
        assert!(mrt_precoder(&[c(0.0, 0.0); 3], 1.0).is_err());
        assert!(mrt_precoder(&b, 0.0).is_err());
    }

    #[test]
    fn closed_form_scalar_lossless() {
        let one = ComplexVec::from_real(&[1.0]).unwrap();
        let hop = Hop::Rank1(make_rank1(c(1.0, 0.0), one.clone(), one).unwrap());
        let chain = CascadeChannel::new(vec![hop.clone(), hop]).unwrap();
        let sol = solve_closed_form(&chain, 1.0).unwrap();
        assert_relative_eq!(received_power(&chain, &sol).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn closed_form_reaches_mu_product() {
        let params = CascadeParams {
            d_t_m: 3.0,
            d_irs_m: 7.0,
            d_r_m: 2.0,
            path_loss: crate::channel::PathLossLaw::new(30.0, 2.0, 1.0).unwrap(),
            ..CascadeParams::unit(4, 4, 2)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let chain = build_cascade(
            &params,
            GainMode::DeterministicAmplitude,
            &AngleAssignment::UniformRandom,
            &mut rng,
        )
        .unwrap();
        let sol = solve_closed_form(&chain, 2.0).unwrap();
        let dense = received_power_dense(&chain, &sol).unwrap();
        assert_relative_eq!(dense, 2.0 * mu_power(&chain), max_relative = 1e-9);
        assert_relative_eq!(sol.precoder_power(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_power_is_angle_invariant() {
        let params = CascadeParams::unit(4, 6, 3);
        let build = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            build_cascade(
                &params,
                GainMode::DeterministicAmplitude,
                &AngleAssignment::UniformRandom,
                &mut rng,
            )
            .unwrap()
        };
        let (a, b) = (build(1), build(2));
        assert_ne!(a, b);
        let pa = received_power(&a, &solve_closed_form(&a, 1.0).unwrap()).unwrap();
        let pb = received_power(&b, &solve_closed_form(&b, 1.0).unwrap()).unwrap();
        assert_relative_eq!(pa, pb, max_relative = 1e-9);
    }

    #[test]
    fn factored_matches_dense_for_arbitrary_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for seed in 0..50 {
            let chain = random_chain(3, 4, 1 + seed as usize % 4, 1, seed);
            let thetas = (0..chain.irs_count())
                .map(|_| (0..4).map(|_| rng.random_range(0.0..TAU)).collect())
                .collect();
            let w = ComplexVec::new(
                (0..3).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
            )
            .unwrap();
            let sol = BeamformingSolution { w, thetas };
            let dense = received_power_dense(&chain, &sol).unwrap();
            let factored = factored_response(&chain, &sol).unwrap().norm_sqr();
            assert_relative_eq!(dense, factored, max_relative = 1e-9);
        }
    }

    #[test]
    fn greedy_bound_and_examples() {
        for bits in 1..=5u32 {
            for seed in 0..10 {
                let chain = random_chain(2, 5, 3, 1, seed);
                let cf = received_power(&chain, &solve_closed_form(&chain, 1.0).unwrap()).unwrap();
                let g = received_power(&chain, &solve_greedy_quantized(&chain, 1.0, bits).unwrap())
                    .unwrap();
                let bound = (PI / (1u32 << bits) as f64).cos().powi(6);
                assert!(g <= cf * (1.0 + 1e-9));
                assert!(g >= cf * bound * (1.0 - 1e-9), "bits {bits}: {g} < {cf}·{bound}");
            }
        }
    }

    /// Chain with a single IRS whose alignment vector is `u`.
    fn chain_with_u(target: &[C64]) -> CascadeChannel {
        // alpha_0 = responses at angle 0 (all 1/√M), beta_1 chosen so that
        // conj(beta_1) ∘ alpha_0 = u up to the 1/M scaling
        let m = target.len();
        let alpha = array_response(m, 0.0).unwrap();
        let beta = ComplexVec::new(
            target
                .iter()
                .map(|z| C64::from_polar(1.0 / (m as f64).sqrt(), -z.arg()))
                .collect(),
        )
        .unwrap();
        let t = Hop::Rank1(make_rank1(c(1.0, 0.0), alpha, ComplexVec::from_real(&[1.0]).unwrap()).unwrap());
        let ue = Hop::Rank1(make_rank1(c(1.0, 0.0), ComplexVec::from_real(&[1.0]).unwrap(), beta).unwrap());
        CascadeChannel::new(vec![t, ue]).unwrap()
    }

    #[test]
    fn greedy_one_bit_example() {
        let chain = chain_with_u(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let us = alignment_vectors(&chain).unwrap();
        let sol = solve_greedy_quantized(&chain, 1.0, 1).unwrap();
        for t in &sol.thetas[0] {
            assert!(*t == 0.0 || *t == PI);
        }
        // enumerate the 4 grid combinations: every one is at most the greedy value
        let g = us[0].response(&sol.thetas[0]).norm_sqr();
        for a in [0.0, PI] {
            for b in [0.0, PI] {
                assert!(us[0].response(&[a, b]).norm_sqr() <= g + 1e-15);
            }
        }
        let cf = received_power(&chain, &solve_closed_form(&chain, 1.0).unwrap()).unwrap();
        let gp = received_power(&chain, &sol).unwrap();
        assert!(gp < cf * (1.0 - 1e-6), "{gp} vs {cf}");
    }

    #[test]
    fn single_element_solvers_match_closed_form() {
        for seed in 0..5 {
            let chain = random_chain(3, 1, 2, 1, seed);
            let cf = received_power(&chain, &solve_closed_form(&chain, 1.0).unwrap()).unwrap();
            for kind in [
                SolverKind::GreedyQuantized { bits: 1 },
                SolverKind::RandomPhase { seed },
                SolverKind::BruteForce { levels: 2 },
            ] {
                let p = received_power(&chain, &solve(kind, &chain, 1.0).unwrap()).unwrap();
                assert_relative_eq!(p, cf, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn random_phase_is_deterministic_per_seed() {
        let chain = random_chain(4, 8, 2, 1, 3);
        assert_eq!(
            solve_random_phase(&chain, 1.0, 12).unwrap(),
            solve_random_phase(&chain, 1.0, 12).unwrap()
        );
        assert_ne!(
            solve_random_phase(&chain, 1.0, 12).unwrap(),
            solve_random_phase(&chain, 1.0, 13).unwrap()
        );
    }

    #[test]
    fn random_phase_mean_ratio_is_one_over_m() {
        // one IRS, equal-modulus u: E|Σ e^{jφ_i} u_i|² / (Σ|u_i|)² = 1/M
        let m = 8;
        let chain = random_chain(2, m, 1, 1, 99);
        let cf = received_power(&chain, &solve_closed_form(&chain, 1.0).unwrap()).unwrap();
        let trials = 20_000;
        let mean = (0..trials)
            .map(|s| received_power(&chain, &solve_random_phase(&chain, 1.0, s).unwrap()).unwrap())
            .sum::<f64>()
            / trials as f64;
        let ratio = mean / cf;
        assert!((ratio - 1.0 / m as f64).abs() < 0.1 / m as f64, "{ratio}");
    }

    #[test]
    fn alternating_matches_closed_form_on_rank1() {
        for seed in 0..10 {
            let chain = random_chain(4, 6, 3, 1, seed);
            let cf = received_power(&chain, &solve_closed_form(&chain, 1.0).unwrap()).unwrap();
            let rep = solve_alternating(&chain, 1.0, 50, 1e-12).unwrap();
            assert_relative_eq!(rep.power_history[1], cf, max_relative = 1e-9);
            assert!(rep.converged);
            for pair in rep.power_history.windows(2) {
                assert!(pair[1] >= pair[0] * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn alternating_monotone_on_multipath() {
        for seed in 0..10 {
            let chain = random_chain(3, 4, 2, 3, seed);
            let rep = solve_alternating(&chain, 1.0, 200, 0.0).unwrap();
            for pair in rep.power_history.windows(2) {
                assert!(pair[1] >= pair[0] - 1e-12 * pair[0].abs(), "{pair:?}");
            }
            assert!(rep.sweeps() >= 1);
        }
    }

    #[test]
    fn alternating_vs_brute_force_small_multipath() {
        for seed in 0..10 {
            let chain = random_chain(2, 2, 1, 2, seed);
            let bf = brute_force(&chain, 1.0, 64).unwrap();
            let rep = solve_alternating(&chain, 1.0, 100, 1e-12).unwrap();
            let ok = rep.final_power() >= 0.999 * bf.power;
            assert!(ok || rep.converged, "seed {seed}: not converged and below oracle");
        }
    }

    #[test]
    fn brute_force_examples() {
        let chain = random_chain(2, 1, 1, 1, 4);
        let cf = received_power(&chain, &solve_closed_form(&chain, 1.0).unwrap()).unwrap();
        assert_relative_eq!(brute_force(&chain, 1.0, 7).unwrap().power, cf, max_relative = 1e-12);

        // levels = 2, M = 1: both candidate phases give the same power
        let bf = brute_force(&chain, 1.0, 2).unwrap();
        let at = |t: f64| {
            let thetas = vec![vec![t]];
            let w = mrt_for_row(&chain.effective_row(&thetas).unwrap(), 1.0).unwrap();
            received_power(&chain, &BeamformingSolution { w, thetas }).unwrap()
        };
        assert_relative_eq!(bf.power, at(0.0).max(at(PI)), max_relative = 1e-12);

        for seed in 0..10 {
            let chain = random_chain(2, 2, 2, 1, seed);
            let v = oracle_check(&chain, 1.0, 16).unwrap();
            assert!(v.passed(), "{v:?}");
            let cos4 = (PI / 16.0).cos().powi(4);
            assert!(v.brute_force >= v.closed_form * cos4 * (1.0 - 1e-9));
        }
    }

    #[test]
    fn brute_force_guard_and_args() {
        let chain = random_chain(2, 8, 3, 1, 0);
        assert!(matches!(brute_force(&chain, 1.0, 16), Err(Error::TooLarge { .. })));
        assert!(brute_force(&chain, 1.0, 1).is_err());
    }

    #[test]
    fn brute_force_finds_aligned_grid_point() {
        let chain = chain_with_u(&[c(0.5, 0.0), c(0.5, 0.0)]);
        let bf = brute_force(&chain, 1.0, 4).unwrap();
        assert_eq!(bf.solution.thetas, vec![vec![0.0, 0.0]]);
        assert_eq!(bf.candidates, 4);
    }

    #[test]
    fn solver_names_round_trip() {
        for name in [
            "closed_form",
            "random_phase",
            "random_phase_s7",
            "greedy_q2",
            "alternating",
            "alternating_i5",
            "brute_force",
            "brute_force_l8",
        ] {
            let kind: SolverKind = name.parse().unwrap();
            assert_eq!(kind.to_string(), name);
        }
        assert!("simplex".parse::<SolverKind>().is_err());
        assert!("greedy_q0".parse::<SolverKind>().is_err());
        assert!("brute_force_l1".parse::<SolverKind>().is_err());
        assert!("greedy_qx".parse::<SolverKind>().is_err());
    }
}

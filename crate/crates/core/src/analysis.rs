//! Closed-form delay and energy evaluation in the many-user limit.
//!
//! As the user count grows, per-slot aggregates concentrate: the rates of
//! the selected users below gain level x sum to Gamma * F(x) (with F the
//! selection-conditioned product-channel CDF), each individual rate
//! vanishes, and the system energy per information unit converges to
//!
//! ```text
//! (Eb/N0)_sys = int (1/x) exp((Gamma/M) F(x)) dF(x)
//!             = int_0^1 exp((Gamma/M) u) / Q(u) du,
//! ```
//!
//! where Q is the quantile of F and M the band count (each band carries a
//! 1/M share of the selected users). The quantile-space substitution is
//! used because F is available in closed form while its density is not.
//!
//! Raising the threshold never costs energy: the selected-gain law under
//! a higher threshold stochastically dominates the lower one, and moving
//! rate mass toward stronger users along the prefix-dominance chain can
//! only shed power. Quantitatively the energy at threshold kappa is at
//! most E[exp(Gamma Psi(S))/S] / kappa <= exp(Gamma) E[1/S] / kappa,
//! which also drives the energy to zero as the delay budget grows when
//! the fading support is unbounded. For fading capped at B no policy can
//! beat E[exp(Gamma Psi(S))/S] / B, and the threshold policy approaches
//! that floor as kappa -> B.
//!
//! The proportional-fair baseline serves the single best of K users; its
//! spectral efficiency at a given SNR integrates log2(1 + x SNR) against
//! the best-of-K product law, and its Eb/N0 is SNR over that.


use crate::channel::{ConditionalChannelLaw, FadingLaw, PathLossLaw};
use crate::error::{Error, Result};
use crate::numeric;
use crate::seed;

/// Absolute tolerance of the energy quadrature.
const ENERGY_QUAD_TOL: f64 = 1e-8;
/// Absolute tolerance of the PFS spectral-efficiency quadrature.
const PFS_QUAD_TOL: f64 = 1e-8;

/// Inputs of the mean-field energy evaluation. Rates are in nats.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    /// Total system demand Gamma in nats per channel use.
    pub spectral_efficiency: f64,
    pub channel: ConditionalChannelLaw,
}

impl AnalysisConfig {
    pub fn new(spectral_efficiency: f64, channel: ConditionalChannelLaw) -> Result<Self> {
        if !spectral_efficiency.is_finite() || spectral_efficiency <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "spectral efficiency must be > 0, got {spectral_efficiency}"
            )));
        }
        Ok(Self {
            spectral_efficiency,
            channel,
        })
    }

    pub fn bands(&self) -> usize {
        self.channel.bands()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyMethod {
    Quadrature,
    MonteCarlo,
}

/// A system energy figure, linear and in dB.
#[derive(Debug, Clone, Copy)]
pub struct EnergyResult {
    pub value: f64,
    pub value_db: f64,
    pub method: EnergyMethod,
    pub estimated_error: f64,
}

impl EnergyResult {
    fn new(value: f64, method: EnergyMethod, estimated_error: f64) -> Self {
        Self {
            value,
            value_db: 10.0 * value.log10(),
            method,
            estimated_error,
        }
    }
}

/// Mean delay of the threshold policy: a user is served with probability
/// gamma in each slot, independently, so the mean delay is 1/gamma.
pub fn delay_of_threshold(channel: &ConditionalChannelLaw) -> f64 {
    1.0 / channel.gamma()
}

/// True when the energy integral has no finite value: at the
/// delay-limited point of a single-band law with probability mass
/// arbitrarily close to zero gain, E[1/d] itself diverges.
fn energy_diverges(channel: &ConditionalChannelLaw) -> bool {
    channel.kappa() <= 0.0 && channel.bands() == 1 && channel.fading().support_infimum() == 0.0
}

/// Mean-field system energy of the threshold policy by adaptive
/// quadrature in quantile space (absolute tolerance 1e-8).
pub fn energy_efficiency(config: &AnalysisConfig) -> Result<EnergyResult> {
    let law = &config.channel;
    if energy_diverges(law) {
        return Err(Error::NoConvergence {
            what: "energy integral (diverges at the delay-limited point for single-band fading reaching zero gain)",
            estimate: f64::INFINITY,
            tolerance: ENERGY_QUAD_TOL,
        });
    }
    let c = config.spectral_efficiency / law.bands() as f64;
    let mut quantile_failure = None;
    let integrand = |u: f64| match law.quantile(u) {
        Ok(x) => (c * u).exp() / x,
        Err(e) => {
            quantile_failure = Some(e);
            0.0
        }
    };
    // Seeding the refinement near both endpoints helps: the integrand has
    // an integrable singularity at u = 0 when kappa = 0 and a slowly
    // flattening tail at u = 1 for unbounded fading.
    let breakpoints = [1e-8, 1e-5, 1e-3, 0.1, 0.9, 0.999];
    let (value, err) =
        numeric::integrate_with_breakpoints(integrand, 0.0, 1.0, &breakpoints, ENERGY_QUAD_TOL)?;
    if let Some(e) = quantile_failure {
        return Err(e);
    }
    Ok(EnergyResult::new(value, EnergyMethod::Quadrature, err))
}

/// Monte Carlo estimate of the same quantity: the sample mean of
/// exp((Gamma/M) F(d)) / d over draws of the selected-gain law. Kept as
/// an independent route for cross-checking the quadrature.
pub fn energy_efficiency_monte_carlo(
    config: &AnalysisConfig,
    samples: usize,
    seed_value: u64,
) -> Result<EnergyResult> {
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let law = &config.channel;
    let c = config.spectral_efficiency / law.bands() as f64;
    let mut rng = seed::rng(seed_value);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let d = law.sample(&mut rng);
        let v = (c * law.cdf(d)).exp() / d;
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let variance = (sum_sq / n - mean * mean).max(0.0);
    let std_error = (variance / n).sqrt();
    Ok(EnergyResult::new(mean, EnergyMethod::MonteCarlo, std_error))
}

/// The two O(1/kappa) energy caps for kappa > 0:
/// (E[exp(Gamma Psi(S))/S] / kappa, exp(Gamma) E[1/S] / kappa).
/// The first is tighter since Psi <= 1.
pub fn energy_upper_bound(config: &AnalysisConfig) -> Result<(f64, f64)> {
    let kappa = config.channel.kappa();
    if kappa <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "upper bound needs a positive threshold, got {kappa}"
        )));
    }
    let gamma_rate = config.spectral_efficiency;
    let pathloss = config.channel.pathloss();
    let bound1 = pathloss.expect(|s| (gamma_rate * pathloss.cdf(s)).exp() / s)? / kappa;
    let bound2 = gamma_rate.exp() * pathloss.expect(|s| 1.0 / s)? / kappa;
    Ok((bound1, bound2))
}

/// Energy floor for compactly supported fading: no policy can spend less
/// than E[exp(Gamma Psi(S))/S] / B when gains never exceed B * S.
pub fn energy_lower_bound(config: &AnalysisConfig) -> Result<EnergyResult> {
    let b = config
        .channel
        .fading()
        .support_supremum()
        .ok_or(Error::UnboundedSupport("energy lower bound"))?;
    let gamma_rate = config.spectral_efficiency;
    let pathloss = config.channel.pathloss();
    let value = pathloss.expect(|s| (gamma_rate * pathloss.cdf(s)).exp() / s)? / b;
    Ok(EnergyResult::new(value, EnergyMethod::Quadrature, 1e-9))
}

/// Energy of best-user-only scheduling in the slow-selection limit
/// (one served user per slot at fading B): (e^Gamma - 1)/(Gamma B) E[1/S].
/// Exceeding the lower bound by exactly the forgone superposition gain.
pub fn single_user_limit(config: &AnalysisConfig) -> Result<f64> {
    let b = config
        .channel
        .fading()
        .support_supremum()
        .ok_or(Error::UnboundedSupport("single-user limit"))?;
    let gamma_rate = config.spectral_efficiency;
    let inv_s = config.channel.pathloss().expect(|s| 1.0 / s)?;
    Ok(gamma_rate.exp_m1() / (gamma_rate * b) * inv_s)
}

/// CDF of S * max{f_1..f_K} for unit-mean exponential fading and
/// inverse-square path loss, written out as the direct finite series:
///
/// ```text
/// F(x) = 1 - 1/(x (1 - delta^2)) * sum_{i=1..K} [(1-e^-x)^i - (1-e^(-x delta^2))^i] / i
/// ```
///
/// This is the law the proportional-fair baseline schedules on, and it
/// must coincide with the threshold-conditioned product law at gamma = 1,
/// kappa = 0 and M = K; the suites check that identity.
pub fn pfs_gain_cdf(k_users: usize, delta: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let d2 = delta * delta;
    let wa = -(-x).exp_m1();
    let wb = -(-x * d2).exp_m1();
    let mut pa = 1.0;
    let mut pb = 1.0;
    let mut series = 0.0;
    for i in 1..=k_users {
        pa *= wa;
        pb *= wb;
        series += (pa - pb) / i as f64;
    }
    (1.0 - series / (x * (1.0 - d2))).clamp(0.0, 1.0)
}

/// One point of the proportional-fair baseline curve.
#[derive(Debug, Clone, Copy)]
pub struct PfsPoint {
    /// Operating SNR (linear).
    pub snr: f64,
    /// Spectral efficiency C in bits per channel use.
    pub spectral_efficiency_bits: f64,
    /// Energy per bit over N0: SNR / C (linear).
    pub ebn0: f64,
}

/// Proportional-fair baseline: for each SNR, C = int log2(1 + x SNR) dF(x)
/// over the best-of-K product law, and Eb/N0 = SNR / C. Exponential
/// fading with K single-band users.
pub fn pfs_curve(
    snr_grid: &[f64],
    k_users: usize,
    pathloss: PathLossLaw,
) -> Result<Vec<PfsPoint>> {
    if k_users == 0 {
        return Err(Error::InvalidInput("PFS needs at least one user".into()));
    }
    if snr_grid.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(Error::InvalidInput("SNR grid must be positive".into()));
    }
    let law = ConditionalChannelLaw::new(pathloss, FadingLaw::exp_unit_mean(k_users)?, 0.0)?;
    snr_grid
        .iter()
        .map(|&snr| {
            let mut quantile_failure = None;
            let integrand = |u: f64| match law.quantile(u) {
                Ok(x) => (x * snr).ln_1p() / std::f64::consts::LN_2,
                Err(e) => {
                    quantile_failure = Some(e);
                    0.0
                }
            };
            let (c_bits, _) = numeric::integrate_with_breakpoints(
                integrand,
                0.0,
                1.0,
                &[1e-5, 1e-3, 0.1, 0.9, 0.999],
                PFS_QUAD_TOL,
            )?;
            if let Some(e) = quantile_failure {
                return Err(e);
            }
            Ok(PfsPoint {
                snr,
                spectral_efficiency_bits: c_bits,
                ebn0: snr / c_bits,
            })
        })
        .collect()
}

/// Default PFS sweep: 60 logarithmic points from -10 dB to +30 dB.
pub fn default_pfs_snr_grid() -> Vec<f64> {
    let (lo_db, hi_db, n) = (-10.0, 30.0, 60);
    (0..n)
        .map(|i| {
            let db = lo_db + (hi_db - lo_db) * i as f64 / (n - 1) as f64;
            10f64.powf(db / 10.0)
        })
        .collect()
}

/// One row of the delay-energy tradeoff.
#[derive(Debug, Clone, Copy)]
pub struct TradeoffRow {
    pub delay: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub energy: EnergyResult,
}

/// Evaluates the tradeoff at each target delay: pick the largest
/// threshold meeting the delay, then the mean-field energy there. Rows
/// come back sorted by delay; the energy column is non-increasing.
pub fn tradeoff_table(delays: &[f64], config: &AnalysisConfig) -> Result<Vec<TradeoffRow>> {
    let mut sorted = delays.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pathloss = *config.channel.pathloss();
    let fading = *config.channel.fading();
    sorted
        .into_iter()
        .map(|delay| {
            let kappa = fading.threshold_for_delay(delay)?;
            let channel = ConditionalChannelLaw::new(pathloss, fading, kappa)?;
            let energy = energy_efficiency(&AnalysisConfig {
                spectral_efficiency: config.spectral_efficiency,
                channel,
            })?;
            Ok(TradeoffRow {
                delay,
                kappa,
                gamma: channel.gamma(),
                energy,
            })
        })
        .collect()
}

//! Finite-user Monte Carlo engine.
//!
//! One system is a deterministic single-threaded loop over slots: mean-one
//! arrival mass lands in every queue, fading is drawn, the OSPC rule
//! selects/flushes/places/allocates, and the accountants update. Arrivals
//! land before scheduling inside a slot, so mass arriving and departing in
//! the same slot has delay exactly one.
//!
//! Measured quantities per user:
//!
//! * delay, weighted by rate mass — every unit of mass arriving in slot t
//!   and served in slot T contributes (T - t + 1); an unweighted
//!   arrival-slot variant is kept for diagnostics;
//! * busy periods — maximal runs of slots with a nonempty queue, closed
//!   by the service slot (measured mid-slot, after arrivals land);
//! * selection frequency and the demand accumulated between services.
//!
//! System energy is the per-slot sum of transmit energies over N0 * Gamma,
//! time-averaged after a warm-up of ceil(10 / gamma) slots. Ensembles run
//! many systems with seeds derived from a base seed, so results are
//! reproducible regardless of thread count.

use rayon::prelude::*;

use crate::channel::{FadingLaw, PathLossLaw};
use crate::error::{Error, Result};
use crate::scheduler::{schedule_slot, ClassThresholds, SlotChannel, UserState};
use crate::seed;

/// Mean-one per-slot demand multiplier nu.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrivalLaw {
    /// nu = 1 every slot.
    Constant,
    /// nu = 1/p with probability p, else 0.
    BernoulliScaled { p: f64 },
    /// nu uniform on the integers lo..=hi, rescaled to mean one.
    UniformDiscrete { lo: u32, hi: u32 },
}

impl ArrivalLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant => Ok(()),
            Self::BernoulliScaled { p } => {
                if p > 0.0 && p <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "arrival probability must lie in (0, 1], got {p}"
                    )))
                }
            }
            Self::UniformDiscrete { lo, hi } => {
                if lo <= hi && hi > 0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "uniform arrival support [{lo}, {hi}] must be non-empty with positive mean"
                    )))
                }
            }
        }
    }

    /// Draws nu; E[nu] = 1 and the support is bounded for every variant.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Constant => 1.0,
            Self::BernoulliScaled { p } => {
                if rng.random::<f64>() < p {
                    1.0 / p
                } else {
                    0.0
                }
            }
            Self::UniformDiscrete { lo, hi } => {
                let mean = 0.5 * (lo as f64 + hi as f64);
                rng.random_range(lo..=hi) as f64 / mean
            }
        }
    }
}

/// Everything one system run needs.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub users: usize,
    /// Total system demand Gamma in nats per channel use; each user asks
    /// for Gamma/users per slot on average.
    pub spectral_efficiency: f64,
    pub pathloss: PathLossLaw,
    pub fading: FadingLaw,
    pub thresholds: ClassThresholds,
    pub arrival: ArrivalLaw,
    /// Horizon in slots.
    pub horizon: u64,
    pub n0: f64,
    pub seed: u64,
    /// Keep the per-slot energy series (for convergence plots).
    pub record_slot_energy: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::ConfigInvalid("need at least one user".into()));
        }
        if self.horizon == 0 {
            return Err(Error::ConfigInvalid("horizon must be >= 1 slot".into()));
        }
        if !self.spectral_efficiency.is_finite() || self.spectral_efficiency <= 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "spectral efficiency must be > 0, got {}",
                self.spectral_efficiency
            )));
        }
        if !self.n0.is_finite() || self.n0 <= 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "noise density must be > 0, got {}",
                self.n0
            )));
        }
        self.arrival.validate()?;
        Ok(())
    }

    pub fn bands(&self) -> usize {
        self.fading.bands()
    }

    /// Warm-up excluded from averages: ceil(10/gamma) over the least
    /// selective class, capped at half the horizon. A degenerate class
    /// (gamma = 0) disables warm-up so instability is still observable.
    pub fn warmup_slots(&self) -> u64 {
        let mut warmup = 0u64;
        for class in self.thresholds.classes() {
            let gamma = 1.0 - self.fading.best_cdf(class.kappa);
            if gamma <= 0.0 {
                return 0;
            }
            warmup = warmup.max((10.0 / gamma).ceil() as u64);
        }
        warmup.min(self.horizon / 2)
    }
}

/// Per-user measurements over the post-warm-up window.
#[derive(Debug, Clone)]
pub struct UserMetrics {
    pub class_id: usize,
    pub pathloss: f64,
    /// Rate-mass-weighted mean delay in slots (NaN if nothing was served).
    pub mean_delay: f64,
    /// Mean delay counting each arrival slot once, for diagnostics.
    pub mean_delay_unweighted: f64,
    /// Mean completed busy-period length in slots (NaN if none completed).
    pub mean_busy_period: f64,
    pub busy_period_count: u64,
    /// Longest busy run observed, including one still open at the horizon.
    pub longest_busy_period: u64,
    pub selection_frequency: f64,
    pub served_mass: f64,
    /// Mean demand multiplier accumulated between consecutive services;
    /// concentrates on 1/gamma.
    pub mean_accumulated_demand: f64,
}

/// Result of one system run.
#[derive(Debug, Clone)]
pub struct Metrics {
    pub per_user: Vec<UserMetrics>,
    /// Time-averaged sum energy over N0 * Gamma.
    pub time_avg_ebn0: f64,
    pub horizon: u64,
    pub warmup_slots: u64,
    pub measured_slots: u64,
    /// Conservation ledger over the whole horizon (not just measured).
    pub total_arrival_mass: f64,
    pub total_served_mass: f64,
    pub final_queue_mass: f64,
    /// Raw summed transmit energy over the measured window.
    pub raw_energy_total: f64,
    pub slot_energy: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
struct UserAccount {
    // Pending (not yet served) arrival bookkeeping. Arrival slots are
    // stored relative to the last service slot: cycle offsets stay small,
    // so the delay sums below never cancel catastrophically.
    cycle_start: u64,
    pending_mass: f64,
    pending_mass_slots: f64, // sum of mass * relative arrival slot
    pending_count: f64,      // arrival slots with positive mass
    pending_count_slots: f64,
    accumulated_demand: f64, // nu since last service
    busy_run: u64,
    // Measured tallies.
    delay_mass: f64,
    delay_weighted: f64,
    delay_count: f64,
    delay_slots: f64,
    busy_total: u64,
    busy_periods: u64,
    longest_busy: u64,
    selections: u64,
    served_mass: f64,
    demand_sum: f64,
    demand_events: u64,
}

/// Runs one system and returns its metrics.
pub fn run(config: &SimConfig) -> Result<Metrics> {
    config.validate()?;
    let k = config.users;
    let rate_scale = config.spectral_efficiency / k as f64;
    let warmup = config.warmup_slots();
    let mut rng = seed::rng(config.seed);

    let counts = config.thresholds.class_counts(k);
    let mut users: Vec<UserState> = Vec::with_capacity(k);
    for (class_id, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            users.push(UserState::new(config.pathloss.sample(&mut rng), class_id));
        }
    }

    let mut accounts = vec![UserAccount::default(); k];
    let mut total_arrivals = 0.0;
    let mut total_served = 0.0;
    let mut ebn0_acc = 0.0;
    let mut raw_energy = 0.0;
    let mut slot_energy = config
        .record_slot_energy
        .then(|| Vec::with_capacity((config.horizon - warmup) as usize));

    for t in 1..=config.horizon {
        let measured = t > warmup;
        for (user, account) in users.iter_mut().zip(accounts.iter_mut()) {
            let nu = config.arrival.sample(&mut rng);
            account.accumulated_demand += nu;
            if nu > 0.0 {
                let mass = rate_scale * nu;
                let offset = (t - account.cycle_start) as f64;
                user.queue += mass;
                total_arrivals += mass;
                account.pending_mass += mass;
                account.pending_mass_slots += mass * offset;
                account.pending_count += 1.0;
                account.pending_count_slots += offset;
            }
            if user.queue > 0.0 {
                account.busy_run += 1;
            }
        }

        let channel = SlotChannel::draw(&config.fading, k, t, &mut rng);
        let decision = schedule_slot(&channel, &config.thresholds, &mut users, config.n0)?;

        for (&i, &rate) in decision.selected.iter().zip(decision.rates.iter()) {
            let account = &mut accounts[i];
            total_served += rate;
            if measured {
                let service_offset = (t + 1 - account.cycle_start) as f64;
                account.selections += 1;
                account.served_mass += rate;
                account.delay_weighted +=
                    service_offset * account.pending_mass - account.pending_mass_slots;
                account.delay_mass += account.pending_mass;
                account.delay_slots +=
                    service_offset * account.pending_count - account.pending_count_slots;
                account.delay_count += account.pending_count;
                account.demand_sum += account.accumulated_demand;
                account.demand_events += 1;
                if account.busy_run > 0 {
                    account.busy_total += account.busy_run;
                    account.busy_periods += 1;
                    account.longest_busy = account.longest_busy.max(account.busy_run);
                }
            }
            account.cycle_start = t;
            account.pending_mass = 0.0;
            account.pending_mass_slots = 0.0;
            account.pending_count = 0.0;
            account.pending_count_slots = 0.0;
            account.accumulated_demand = 0.0;
            account.busy_run = 0;
        }

        if measured {
            let e = decision.total_energy();
            raw_energy += e;
            ebn0_acc += e / (config.n0 * config.spectral_efficiency);
            if let Some(series) = slot_energy.as_mut() {
                series.push(e);
            }
        }
    }

    let measured_slots = config.horizon - warmup;
    let per_user = users
        .iter()
        .zip(accounts.iter_mut())
        .map(|(user, account)| {
            // A busy run still open at the horizon never completed; it
            // counts for the longest-run statistic (instability flag) only.
            let longest = account.longest_busy.max(account.busy_run);
            UserMetrics {
                class_id: user.class_id,
                pathloss: user.pathloss,
                mean_delay: account.delay_weighted / account.delay_mass,
                mean_delay_unweighted: account.delay_slots / account.delay_count,
                mean_busy_period: account.busy_total as f64 / account.busy_periods as f64,
                busy_period_count: account.busy_periods,
                longest_busy_period: longest,
                selection_frequency: account.selections as f64 / measured_slots as f64,
                served_mass: account.served_mass,
                mean_accumulated_demand: account.demand_sum / account.demand_events as f64,
            }
        })
        .collect();

    Ok(Metrics {
        per_user,
        time_avg_ebn0: ebn0_acc / measured_slots as f64,
        horizon: config.horizon,
        warmup_slots: warmup,
        measured_slots,
        total_arrival_mass: total_arrivals,
        total_served_mass: total_served,
        final_queue_mass: users.iter().map(|u| u.queue).sum(),
        raw_energy_total: raw_energy,
        slot_energy,
    })
}

/// Ensemble of independent systems (fresh path-loss vector each), seeded
/// deterministically from `base_seed`.
#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub systems: usize,
    pub min_ebn0: f64,
    pub max_ebn0: f64,
    pub mean_ebn0: f64,
    pub per_system: Vec<f64>,
}

pub fn run_ensemble(config: &SimConfig, systems: usize, base_seed: u64) -> Result<EnsembleSummary> {
    if systems == 0 {
        return Err(Error::ConfigInvalid("ensemble needs >= 1 system".into()));
    }
    let per_system: Vec<f64> = (0..systems as u64)
        .into_par_iter()
        .map(|j| {
            let mut cfg = config.clone();
            cfg.seed = seed::derive(base_seed, j);
            cfg.record_slot_energy = false;
            run(&cfg).map(|m| m.time_avg_ebn0)
        })
        .collect::<Result<Vec<f64>>>()?;
    let min = per_system.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = per_system.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = per_system.iter().sum::<f64>() / systems as f64;
    Ok(EnsembleSummary {
        systems,
        min_ebn0: min,
        max_ebn0: max,
        mean_ebn0: mean,
        per_system,
    })
}

/// Per-user stability verdict.
#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub user: usize,
    pub mean_busy_period: f64,
    pub longest_busy_period: u64,
    /// Set when the longest busy run exceeds the configured fraction of
    /// the horizon: the queue shows unbounded growth at this run length.
    pub flagged: bool,
}

pub fn stability_report(metrics: &Metrics, horizon_fraction: f64) -> Vec<StabilityVerdict> {
    let limit = (horizon_fraction * metrics.horizon as f64).max(1.0);
    metrics
        .per_user
        .iter()
        .enumerate()
        .map(|(user, m)| StabilityVerdict {
            user,
            mean_busy_period: m.mean_busy_period,
            longest_busy_period: m.longest_busy_period,
            flagged: m.longest_busy_period as f64 > limit,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base_config(kappa: f64, horizon: u64) -> SimConfig {
        let fading = FadingLaw::exp_unit_mean(2).unwrap();
        SimConfig {
            users: 10,
            spectral_efficiency: 1.0,
            pathloss: PathLossLaw::new(2.0, 0.01).unwrap(),
            thresholds: ClassThresholds::single(&fading, kappa).unwrap(),
            fading,
            arrival: ArrivalLaw::Constant,
            horizon,
            n0: 1.0,
            seed: 1234,
            record_slot_energy: false,
        }
    }

    #[test]
    fn delay_limited_point_has_unit_delays() {
        let metrics = run(&base_config(0.0, 500)).unwrap();
        for u in &metrics.per_user {
            assert_eq!(u.mean_delay, 1.0);
            assert_eq!(u.mean_busy_period, 1.0);
            assert_eq!(u.selection_frequency, 1.0);
        }
    }

    #[test]
    fn mass_is_conserved() {
        for kappa in [0.0, 1.5] {
            let mut cfg = base_config(kappa, 2000);
            cfg.arrival = ArrivalLaw::BernoulliScaled { p: 0.5 };
            let metrics = run(&cfg).unwrap();
            let balance = metrics.total_arrival_mass
                - metrics.total_served_mass
                - metrics.final_queue_mass;
            assert!(
                balance.abs() < 1e-9,
                "conservation violated by {balance:e}"
            );
        }
    }

    #[test]
    fn seeded_runs_are_bit_identical() {
        let cfg = base_config(1.0, 300);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.time_avg_ebn0.to_bits(), b.time_avg_ebn0.to_bits());
        assert_eq!(a.raw_energy_total.to_bits(), b.raw_energy_total.to_bits());
    }

    #[test]
    fn ebn0_is_invariant_to_noise_density() {
        let mut cfg = base_config(1.0, 400);
        let a = run(&cfg).unwrap();
        cfg.n0 = 10.0;
        let b = run(&cfg).unwrap();
        // Same seed => same draws; energies scale by exactly 10.
        assert_relative_eq!(b.raw_energy_total, 10.0 * a.raw_energy_total, max_relative = 1e-12);
        assert_relative_eq!(b.time_avg_ebn0, a.time_avg_ebn0, max_relative = 1e-12);
    }

    #[test]
    fn delay_tracks_inverse_gamma() {
        let fading = FadingLaw::exp_unit_mean(2).unwrap();
        let kappa = fading.threshold_for_delay(2.5).unwrap();
        let mut cfg = base_config(kappa, 40_000);
        cfg.users = 20;
        let metrics = run(&cfg).unwrap();
        for u in &metrics.per_user {
            assert_relative_eq!(u.mean_delay, 2.5, max_relative = 0.05);
            assert_relative_eq!(u.mean_busy_period, 2.5, max_relative = 0.05);
            assert_relative_eq!(u.selection_frequency, 0.4, max_relative = 0.05);
            // Accumulated demand between services concentrates on 1/gamma.
            assert_relative_eq!(u.mean_accumulated_demand, 2.5, max_relative = 0.05);
        }
    }

    #[test]
    fn unserved_users_are_flagged_unstable() {
        let fading = FadingLaw::bounded_uniform(1.0, 1).unwrap();
        let cfg = SimConfig {
            users: 4,
            spectral_efficiency: 1.0,
            pathloss: PathLossLaw::new(2.0, 0.01).unwrap(),
            thresholds: ClassThresholds::new(vec![crate::scheduler::DelayClass {
                kappa: 2.0, // above the whole support: gamma = 0
                target_delay: f64::INFINITY,
                fraction: 1.0,
            }])
            .unwrap(),
            fading,
            arrival: ArrivalLaw::Constant,
            horizon: 200,
            n0: 1.0,
            seed: 9,
            record_slot_energy: false,
        };
        let metrics = run(&cfg).unwrap();
        let report = stability_report(&metrics, 0.5);
        for v in &report {
            assert!(v.flagged, "user {} should be flagged", v.user);
            assert!(v.mean_busy_period.is_nan());
        }
        // Nothing was ever served and no energy was spent.
        assert_eq!(metrics.total_served_mass, 0.0);
        assert_eq!(metrics.raw_energy_total, 0.0);
        assert_relative_eq!(
            metrics.final_queue_mass,
            metrics.total_arrival_mass,
            max_relative = 1e-12
        );
    }

    #[test]
    fn stable_runs_pass_the_report() {
        let metrics = run(&base_config(1.0, 5000)).unwrap();
        let report = stability_report(&metrics, 0.5);
        assert!(report.iter().all(|v| !v.flagged));
    }

    #[test]
    fn ensemble_is_deterministic_and_ordered() {
        let cfg = base_config(0.5, 400);
        let a = run_ensemble(&cfg, 8, 77).unwrap();
        let b = run_ensemble(&cfg, 8, 77).unwrap();
        assert_eq!(a.per_system, b.per_system);
        assert!(a.min_ebn0 <= a.mean_ebn0 && a.mean_ebn0 <= a.max_ebn0);
        let single = run_ensemble(&cfg, 1, 3).unwrap();
        assert_eq!(single.min_ebn0, single.max_ebn0);
        assert_eq!(single.min_ebn0, single.mean_ebn0);
    }

    #[test]
    fn arrival_laws_have_unit_mean() {
        let mut rng = crate::seed::rng(5);
        for law in [
            ArrivalLaw::Constant,
            ArrivalLaw::BernoulliScaled { p: 0.25 },
            ArrivalLaw::UniformDiscrete { lo: 0, hi: 4 },
        ] {
            law.validate().unwrap();
            let n = 200_000;
            let mean: f64 = (0..n).map(|_| law.sample(&mut rng)).sum::<f64>() / n as f64;
            assert_relative_eq!(mean, 1.0, max_relative = 0.02);
        }
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut cfg = base_config(0.0, 100);
        cfg.users = 0;
        assert!(matches!(run(&cfg), Err(Error::ConfigInvalid(_))));
        let mut cfg = base_config(0.0, 100);
        cfg.spectral_efficiency = -1.0;
        assert!(cfg.validate().is_err());
        assert!(ArrivalLaw::BernoulliScaled { p: 0.0 }.validate().is_err());
        assert!(ArrivalLaw::UniformDiscrete { lo: 0, hi: 0 }.validate().is_err());
    }
}

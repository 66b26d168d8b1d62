//! Monte Carlo and independent-route oracles for the distribution and
//! analysis machinery: empirical CDFs against closed forms, sampling
//! moments against quadrature, rejection sampling against the
//! conditional-tail formula.

use rand::Rng;

use ospc_core::analysis::{
    energy_efficiency, energy_efficiency_monte_carlo, pfs_curve, AnalysisConfig,
};
use ospc_core::channel::{ConditionalChannelLaw, FadingLaw, PathLossLaw};
use ospc_core::scheduler::ClassThresholds;
use ospc_core::sim::{run, ArrivalLaw, SimConfig};
use ospc_core::validation::ks_statistic;
use ospc_core::{numeric, seed};

fn cell() -> PathLossLaw {
    PathLossLaw::new(2.0, 0.01).unwrap()
}

#[test]
fn pathloss_samples_match_the_cdf() {
    let law = cell();
    let mut rng = seed::rng(101);
    let mut samples: Vec<f64> = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
    let ks = ks_statistic(&mut samples, |x| law.cdf(x));
    assert!(ks < 0.005, "KS statistic {ks} too large");
}

#[test]
fn pathloss_cdf_value_against_direct_placement() {
    // P{S <= 2} by simulating the placement model itself (radius square
    // uniform on [delta^2, 1], S = r^-2).
    let mut rng = seed::rng(7);
    let d2 = 0.0001f64;
    let n = 1_000_000;
    let hits = (0..n)
        .filter(|_| {
            let r2 = d2 + (1.0 - d2) * rng.random::<f64>();
            1.0 / r2 <= 2.0
        })
        .count();
    let empirical = hits as f64 / n as f64;
    assert!((empirical - cell().cdf(2.0)).abs() < 0.002);
}

#[test]
fn best_of_bands_cdf_against_explicit_maximum() {
    let law = FadingLaw::exp_unit_mean(3).unwrap();
    let mut rng = seed::rng(33);
    let n = 1_000_000;
    let hits = (0..n)
        .filter(|_| {
            let m = (0..3)
                .map(|_| law.sample_band(&mut rng))
                .fold(f64::NEG_INFINITY, f64::max);
            m <= 1.0
        })
        .count();
    let empirical = hits as f64 / n as f64;
    assert!((empirical - law.best_cdf(1.0)).abs() < 0.002);
}

#[test]
fn selection_probability_against_sampled_maxima() {
    let law = FadingLaw::exp_unit_mean(10).unwrap();
    let mut rng = seed::rng(55);
    let n = 1_000_000;
    let hits = (0..n)
        .filter(|_| {
            (0..10)
                .map(|_| law.sample_band(&mut rng))
                .fold(f64::NEG_INFINITY, f64::max)
                > 2.0
        })
        .count();
    let empirical = hits as f64 / n as f64;
    let analytic = law.selection_probability(2.0).unwrap();
    assert!((empirical - analytic).abs() < 0.002, "{empirical} vs {analytic}");
}

#[test]
fn conditional_tail_against_rejection_sampling() {
    // P{f* <= 2 | f* > 1} for ten bands by keeping only maxima above 1.
    let law = FadingLaw::exp_unit_mean(10).unwrap();
    let mut rng = seed::rng(77);
    let mut accepted = 0u64;
    let mut below = 0u64;
    while accepted < 1_000_000 {
        let m = (0..10)
            .map(|_| law.sample_band(&mut rng))
            .fold(f64::NEG_INFINITY, f64::max);
        if m > 1.0 {
            accepted += 1;
            if m <= 2.0 {
                below += 1;
            }
        }
    }
    let empirical = below as f64 / accepted as f64;
    let analytic = law.conditional_best_cdf(1.0, 2.0).unwrap();
    assert!((empirical - analytic).abs() < 0.002, "{empirical} vs {analytic}");
}

#[test]
fn conditional_channel_inverse_moment_matches_quadrature() {
    let law =
        ConditionalChannelLaw::new(cell(), FadingLaw::exp_unit_mean(10).unwrap(), 1.0).unwrap();
    // E[1/d] over the selected product law by quantile-space quadrature.
    let (expected, _) = numeric::integrate_with_breakpoints(
        |u| 1.0 / law.quantile(u).unwrap(),
        0.0,
        1.0,
        &[1e-4, 0.99],
        1e-9,
    )
    .unwrap();
    let mut rng = seed::rng(123);
    let n = 1_000_000;
    let mean = (0..n).map(|_| 1.0 / law.sample(&mut rng)).sum::<f64>() / n as f64;
    assert!(
        (mean - expected).abs() / expected < 0.005,
        "sampled {mean} vs quadrature {expected}"
    );
}

#[test]
fn generic_route_sampling_check_for_bounded_uniform() {
    // The bounded-uniform law has no closed form; its numeric CDF must
    // still match its own sampler.
    let law =
        ConditionalChannelLaw::new(cell(), FadingLaw::bounded_uniform(1.0, 2).unwrap(), 0.3)
            .unwrap();
    let mut rng = seed::rng(2024);
    let mut samples: Vec<f64> = (0..200_000).map(|_| law.sample(&mut rng)).collect();
    let ks = ks_statistic(&mut samples, |x| law.cdf(x));
    assert!(ks < 0.01, "KS statistic {ks} too large");
}

#[test]
fn heavy_tail_product_sampling_check() {
    let law =
        ConditionalChannelLaw::new(cell(), FadingLaw::pareto_tail(2.5).unwrap(), 3.0).unwrap();
    let mut rng = seed::rng(2025);
    let mut samples: Vec<f64> = (0..200_000).map(|_| law.sample(&mut rng)).collect();
    let ks = ks_statistic(&mut samples, |x| law.cdf(x));
    assert!(ks < 0.01, "KS statistic {ks} too large");
}

#[test]
fn energy_quadrature_against_million_sample_monte_carlo() {
    let channel =
        ConditionalChannelLaw::new(cell(), FadingLaw::exp_unit_mean(10).unwrap(), 1.0).unwrap();
    let cfg = AnalysisConfig::new(4.0, channel).unwrap();
    let quad = energy_efficiency(&cfg).unwrap();
    let mc = energy_efficiency_monte_carlo(&cfg, 1_000_000, 4242).unwrap();
    let rel = (quad.value - mc.value).abs() / quad.value;
    assert!(rel < 0.01, "relative gap {rel}");
    assert!((quad.value - mc.value).abs() <= 3.0 * mc.estimated_error);
}

#[test]
fn pfs_low_snr_slope_matches_the_mean_gain() {
    // As SNR -> 0, C/SNR -> E[S max f]/ln 2; the mean best-of-K
    // exponential is the K-th harmonic number and E[S] comes from
    // quadrature.
    let k = 50;
    let points = pfs_curve(&[1e-7], k, cell()).unwrap();
    let slope = points[0].spectral_efficiency_bits / points[0].snr;
    let mean_s = cell().expect(|s| s).unwrap();
    let harmonic: f64 = (1..=k).map(|i| 1.0 / i as f64).sum();
    let expected = mean_s * harmonic / std::f64::consts::LN_2;
    assert!(
        (slope / expected - 1.0).abs() < 0.01,
        "slope {slope} vs linearized limit {expected}"
    );
}

#[test]
fn per_band_gain_has_unit_mean() {
    let law = FadingLaw::exp_unit_mean(1).unwrap();
    let mut rng = seed::rng(808);
    let n = 1_000_000;
    let mean = (0..n).map(|_| law.sample_band(&mut rng)).sum::<f64>() / n as f64;
    assert!((mean - 1.0).abs() < 0.005, "per-band mean {mean}");
}

#[test]
fn tradeoff_energy_is_monotone_over_a_dense_delay_grid() {
    let channel =
        ConditionalChannelLaw::new(cell(), FadingLaw::exp_unit_mean(10).unwrap(), 0.0).unwrap();
    let cfg = AnalysisConfig::new(1.0, channel).unwrap();
    let delays: Vec<f64> = (0..50).map(|i| 1.0 + 49.0 * i as f64 / 49.0).collect();
    let rows = ospc_core::analysis::tradeoff_table(&delays, &cfg).unwrap();
    for w in rows.windows(2) {
        assert!(
            w[1].energy.value <= w[0].energy.value + 1e-6,
            "energy rose from delay {} to {}",
            w[0].delay,
            w[1].delay
        );
    }
}

#[test]
fn threshold_policy_beats_pfs_only_at_high_spectral_efficiency() {
    // Delay-limited threshold policy (ten bands) against the single-best
    // user baseline with 100 users, both in energy per bit.
    let ln2 = std::f64::consts::LN_2;
    let channel =
        ConditionalChannelLaw::new(cell(), FadingLaw::exp_unit_mean(10).unwrap(), 0.0).unwrap();
    let ospc_per_bit = |c_bits: f64| {
        let cfg = AnalysisConfig::new(c_bits * ln2, channel).unwrap();
        energy_efficiency(&cfg).unwrap().value * ln2
    };
    // PFS points bracketing low and high spectral efficiency.
    let points = pfs_curve(&[0.03, 300.0], 100, cell()).unwrap();
    let low = &points[0];
    let high = &points[1];
    assert!(low.spectral_efficiency_bits < 2.0);
    assert!(high.spectral_efficiency_bits > 7.0);
    assert!(
        low.ebn0 < ospc_per_bit(low.spectral_efficiency_bits),
        "the baseline should win at low spectral efficiency"
    );
    assert!(
        high.ebn0 > ospc_per_bit(high.spectral_efficiency_bits),
        "the threshold policy should win at high spectral efficiency"
    );
}

#[test]
fn finite_user_bias_grows_with_spectral_efficiency() {
    // Small systems overshoot the mean-field energy, and more so at high
    // demand (the rate-energy curve is convex in the rate).
    let fading = FadingLaw::exp_unit_mean(10).unwrap();
    let relative_bias = |gamma_nats: f64| {
        let cfg = SimConfig {
            users: 8,
            spectral_efficiency: gamma_nats,
            pathloss: cell(),
            thresholds: ClassThresholds::single(&fading, 0.0).unwrap(),
            fading,
            arrival: ArrivalLaw::Constant,
            horizon: 2_000,
            n0: 1.0,
            seed: 0,
            record_slot_energy: false,
        };
        let summary = ospc_core::sim::run_ensemble(&cfg, 30, 616).unwrap();
        let channel = ConditionalChannelLaw::new(cell(), fading, 0.0).unwrap();
        let asymptotic = energy_efficiency(&AnalysisConfig::new(gamma_nats, channel).unwrap())
            .unwrap()
            .value;
        summary.mean_ebn0 / asymptotic - 1.0
    };
    let low = relative_bias(1.0);
    let high = relative_bias(8.0);
    assert!(
        high > low,
        "bias at high demand ({high:.4}) should exceed low demand ({low:.4})"
    );
}

#[test]
fn accumulated_demand_balances_selection_probability() {
    // Between consecutive services a user piles up 1/gamma slots of
    // demand on average: gamma * mean(accumulated demand) = 1.
    let fading = FadingLaw::exp_unit_mean(10).unwrap();
    let kappa = fading.threshold_for_delay(3.0).unwrap();
    let cfg = SimConfig {
        users: 20,
        spectral_efficiency: 1.0,
        pathloss: cell(),
        thresholds: ClassThresholds::single(&fading, kappa).unwrap(),
        fading,
        arrival: ArrivalLaw::BernoulliScaled { p: 0.5 },
        horizon: 100_000,
        n0: 1.0,
        seed: 51,
        record_slot_energy: false,
    };
    let metrics = run(&cfg).unwrap();
    for u in &metrics.per_user {
        let balance = u.mean_accumulated_demand / 3.0;
        assert!(
            (balance - 1.0).abs() < 0.02,
            "gamma * mean demand = {balance}"
        );
    }
}

#[test]
fn delay_is_insensitive_to_the_arrival_law() {
    let fading = FadingLaw::exp_unit_mean(10).unwrap();
    let kappa = fading.threshold_for_delay(3.0).unwrap();
    let mean_delay = |arrival: ArrivalLaw, seed_value: u64| {
        let cfg = SimConfig {
            users: 20,
            spectral_efficiency: 1.0,
            pathloss: cell(),
            thresholds: ClassThresholds::single(&fading, kappa).unwrap(),
            fading,
            arrival,
            horizon: 60_000,
            n0: 1.0,
            seed: seed_value,
            record_slot_energy: false,
        };
        let m = run(&cfg).unwrap();
        m.per_user.iter().map(|u| u.mean_delay).sum::<f64>() / m.per_user.len() as f64
    };
    let constant = mean_delay(ArrivalLaw::Constant, 11);
    let bernoulli = mean_delay(ArrivalLaw::BernoulliScaled { p: 0.5 }, 12);
    assert!(
        (constant - bernoulli).abs() / constant < 0.03,
        "{constant} vs {bernoulli}"
    );
}

#[test]
fn finite_system_energy_approaches_the_mean_field_value() {
    // A single large delay-limited system sits near the asymptotic
    // energy; this ties the simulator's accounting to the analysis route.
    let fading = FadingLaw::exp_unit_mean(10).unwrap();
    let cfg = SimConfig {
        users: 600,
        spectral_efficiency: 1.0,
        pathloss: cell(),
        thresholds: ClassThresholds::single(&fading, 0.0).unwrap(),
        fading,
        arrival: ArrivalLaw::Constant,
        horizon: 3_000,
        n0: 1.0,
        seed: 909,
        record_slot_energy: false,
    };
    let metrics = run(&cfg).unwrap();
    let channel = ConditionalChannelLaw::new(cell(), fading, 0.0).unwrap();
    let asymptotic = energy_efficiency(&AnalysisConfig::new(1.0, channel).unwrap())
        .unwrap()
        .value;
    let rel = (metrics.time_avg_ebn0 - asymptotic).abs() / asymptotic;
    assert!(rel < 0.05, "simulated {} vs asymptotic {asymptotic}", metrics.time_avg_ebn0);
}

//! Property tests for the structural invariants: CDF shape, stochastic
//! dominance, quantile round trips, allocation symmetries and the
//! received-energy identity.

use proptest::prelude::*;

use ospc_core::channel::{ConditionalChannelLaw, FadingLaw, PathLossLaw};
use ospc_core::power::{
    capacity_region_check, dominance_transform_trace, optimal_allocation, sum_rate_identity,
    GainVector, RateVector,
};

fn paper_law(bands: usize, kappa: f64) -> ConditionalChannelLaw {
    ConditionalChannelLaw::new(
        PathLossLaw::new(2.0, 0.01).unwrap(),
        FadingLaw::exp_unit_mean(bands).unwrap(),
        kappa,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pathloss_cdf_is_a_cdf(
        alpha in 1.0..4.0f64,
        delta in 0.005..0.5f64,
        x in 0.0..1e6f64,
        dx in 0.0..1e3f64,
    ) {
        let law = PathLossLaw::new(alpha, delta).unwrap();
        let a = law.cdf(x);
        let b = law.cdf(x + dx);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a);
        prop_assert_eq!(law.cdf(1.0), 0.0);
        prop_assert_eq!(law.cdf(law.support_max() + 1.0), 1.0);
    }

    #[test]
    fn best_cdf_bounds_and_monotonicity(
        bands in 1usize..12,
        x in 0.0..50.0f64,
        dx in 0.0..10.0f64,
    ) {
        for law in [
            FadingLaw::exp_unit_mean(bands).unwrap(),
            FadingLaw::pareto_tail(2.3).unwrap(),
            FadingLaw::bounded_uniform(2.0, bands).unwrap(),
        ] {
            let a = law.best_cdf(x);
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(law.best_cdf(x + dx) >= a);
        }
    }

    #[test]
    fn selection_probability_decreases_in_threshold(
        bands in 1usize..12,
        kappa in 0.0..4.0f64,
        bump in 0.01..2.0f64,
    ) {
        let law = FadingLaw::exp_unit_mean(bands).unwrap();
        let lo = law.selection_probability(kappa).unwrap();
        let hi = law.selection_probability(kappa + bump).unwrap();
        prop_assert!(hi <= lo);
    }

    #[test]
    fn raising_the_threshold_dominates_stochastically(
        kappa_lo in 0.0..2.0f64,
        bump in 0.05..2.0f64,
        x in 0.1..200.0f64,
    ) {
        // The higher-threshold product law has pointwise smaller CDF.
        let low = paper_law(10, kappa_lo);
        let high = paper_law(10, kappa_lo + bump);
        prop_assert!(high.cdf(x) <= low.cdf(x) + 1e-10);
    }

    #[test]
    fn quantile_inverts_the_cdf(
        kappa in 0.0..2.5f64,
        u in 0.0..0.999f64,
    ) {
        let law = paper_law(10, kappa);
        let x = law.quantile(u).unwrap();
        let back = law.cdf(x);
        prop_assert!((back - u).abs() < 1e-9, "u={}, x={}, cdf={}", u, x, back);
    }

    #[test]
    fn allocation_is_permutation_equivariant(
        gains in prop::collection::vec(0.1..50.0f64, 1..7),
        seed in 0u64..1000,
    ) {
        let k = gains.len();
        let rates: Vec<f64> = (0..k).map(|i| ((seed + i as u64) % 13) as f64 / 10.0).collect();
        let base = optimal_allocation(
            &GainVector::new(gains.clone()).unwrap(),
            &RateVector::new(rates.clone()).unwrap(),
            1.0,
        )
        .unwrap();
        // Rotate the users; the energies must rotate with them.
        let rot = |v: &[f64]| -> Vec<f64> {
            let mut w = v.to_vec();
            w.rotate_left(1);
            w
        };
        let rotated = optimal_allocation(
            &GainVector::new(rot(&gains)).unwrap(),
            &RateVector::new(rot(&rates)).unwrap(),
            1.0,
        )
        .unwrap();
        let expected = rot(base.energies());
        for (a, b) in rotated.energies().iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn noise_scaling_is_linear(
        gains in prop::collection::vec(0.1..50.0f64, 1..7),
        scale in 0.1..50.0f64,
    ) {
        let k = gains.len();
        let rates: Vec<f64> = (0..k).map(|i| 0.1 + 0.2 * i as f64).collect();
        let gains = GainVector::new(gains).unwrap();
        let rates = RateVector::new(rates).unwrap();
        let base = optimal_allocation(&gains, &rates, 1.0).unwrap();
        let scaled = optimal_allocation(&gains, &rates, scale).unwrap();
        for (a, b) in base.energies().iter().zip(scaled.energies()) {
            prop_assert!((a * scale - b).abs() <= 1e-12 * (a * scale).abs().max(1e-300));
        }
    }

    #[test]
    fn received_energy_depends_only_on_the_sum_rate(
        gains in prop::collection::vec(0.1..50.0f64, 2..7),
        split in 0.0..1.0f64,
        total in 0.1..3.0f64,
    ) {
        // Two rate vectors with equal totals on the same gains produce the
        // same total received energy.
        let k = gains.len();
        let mut rates_a = vec![0.0; k];
        rates_a[0] = total * split;
        rates_a[k - 1] = total * (1.0 - split);
        let mut rates_b = vec![total / k as f64; k];
        rates_b[0] += 0.0;
        let gains = GainVector::new(gains).unwrap();
        let received = |rates: Vec<f64>| -> f64 {
            let powers =
                optimal_allocation(&gains, &RateVector::new(rates).unwrap(), 1.0).unwrap();
            gains
                .as_slice()
                .iter()
                .zip(powers.energies())
                .map(|(d, e)| d * e)
                .sum()
        };
        let a = received(rates_a);
        let b = received(rates_b.clone());
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        // And the greedy allocation is feasible.
        let powers =
            optimal_allocation(&gains, &RateVector::new(rates_b.clone()).unwrap(), 1.0).unwrap();
        prop_assert!(capacity_region_check(
            &gains,
            &powers,
            &RateVector::new(rates_b).unwrap()
        )
        .unwrap());
    }

    #[test]
    fn log_identity_holds(
        terms in prop::collection::vec(0.0..3.0f64, 0..9),
        z in 0.05..10.0f64,
    ) {
        let (lhs, rhs) = sum_rate_identity(&terms, z);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn rate_transfer_never_raises_power(
        sorted_gains in prop::collection::vec(0.1..20.0f64, 1..8),
        cut in 0.0..1.0f64,
    ) {
        let mut gains = sorted_gains;
        gains.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let k = gains.len();
        let rates: Vec<f64> = (0..k).map(|i| 0.2 + 0.1 * (i % 3) as f64).collect();
        // Dominated vector: shave a prefix-safe amount off each entry.
        let dominated: Vec<f64> = rates.iter().map(|r| r * cut).collect();
        let gains = GainVector::new(gains).unwrap();
        let rates = RateVector::new(rates).unwrap();
        let dominated = RateVector::new(dominated).unwrap();
        let trace = dominance_transform_trace(&rates, &dominated, &gains, 1.0).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].max(1.0));
        }
        let target = optimal_allocation(&gains, &dominated, 1.0).unwrap().total();
        prop_assert!((trace.last().unwrap() - target).abs() <= 1e-12 * target.max(1e-300));
    }
}

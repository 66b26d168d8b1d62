//! Superposition-coding power allocation on the Gaussian multi-access
//! channel.
//!
//! With channel gains d and noise density N0, a rate vector rho is
//! feasible iff every user subset satisfies
//! sum rho_i <= log(1 + sum d_i E_i / N0). All users transmit at once and
//! the receiver decodes in decreasing received-power order, treating the
//! not-yet-decoded signals as noise. The sum-power-minimizing allocation
//! is greedy: sort users by ascending gain and give user pi_i
//!
//! ```text
//! E_{pi_i} = (N0 / d_{pi_i}) * exp(sum_{k<i} rho_{pi_k}) * (exp(rho_{pi_i}) - 1)
//! ```
//!
//! so the decoding order depends only on the gains, never on the rates.
//! The module also carries the two verification tools used throughout the
//! test suites: an exhaustive decode-order oracle and the step-by-step
//! rate-transfer construction showing that prefix-dominated rate vectors
//! never cost more total power.

use itertools::Itertools;

use crate::error::{Error, Result};

/// Per-user linear channel gains for one slot and band.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector(Vec<f64>);

impl GainVector {
    /// All gains must be strictly positive and finite.
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if let Some(bad) = gains.iter().find(|g| !g.is_finite() || **g <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "channel gains must be positive and finite, got {bad}"
            )));
        }
        Ok(Self(gains))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices sorted by ascending gain, ties broken by user index so the
    /// decoding order is deterministic (any order among equal gains costs
    /// the same total power).
    pub fn ascending_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.0.len()).collect();
        idx.sort_by(|&a, &b| self.0[a].partial_cmp(&self.0[b]).unwrap().then(a.cmp(&b)));
        idx
    }
}

/// Per-user rates in nats per channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector(Vec<f64>);

impl RateVector {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if let Some(bad) = rates.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return Err(Error::InvalidInput(format!(
                "rates must be non-negative and finite, got {bad}"
            )));
        }
        Ok(Self(rates))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Per-user transmit energies together with the noise density they were
/// computed against.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerVector {
    energies: Vec<f64>,
    n0: f64,
}

impl PowerVector {
    pub fn new(energies: Vec<f64>, n0: f64) -> Result<Self> {
        if !n0.is_finite() || n0 <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "noise density must be positive, got {n0}"
            )));
        }
        if let Some(bad) = energies.iter().find(|e| !e.is_finite() || **e < 0.0) {
            return Err(Error::InvalidInput(format!(
                "energies must be non-negative and finite, got {bad}"
            )));
        }
        Ok(Self { energies, n0 })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn total(&self) -> f64 {
        self.energies.iter().sum()
    }
}

fn check_lengths(gains: &GainVector, rates: &RateVector) -> Result<()> {
    if gains.len() != rates.len() {
        return Err(Error::InvalidInput(format!(
            "gain/rate length mismatch: {} vs {}",
            gains.len(),
            rates.len()
        )));
    }
    Ok(())
}

/// Sum power of the successive-decoding chain under a given decoding
/// position order (`order[i]` is decoded last among the first i+1).
fn chain_sum(order: &[usize], gains: &[f64], rates: &[f64], n0: f64) -> f64 {
    let mut cum = 0.0f64;
    let mut sum = 0.0;
    for &u in order {
        sum += n0 / gains[u] * cum.exp() * rates[u].exp_m1();
        cum += rates[u];
    }
    sum
}

/// Minimum-sum-power allocation realizing `rates` on gains `gains`:
/// ascending-gain greedy chain. Zero-rate users receive zero power and
/// leave the cumulative exponent untouched.
pub fn optimal_allocation(gains: &GainVector, rates: &RateVector, n0: f64) -> Result<PowerVector> {
    check_lengths(gains, rates)?;
    if !n0.is_finite() || n0 <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "noise density must be positive, got {n0}"
        )));
    }
    let order = gains.ascending_order();
    let mut energies = vec![0.0; gains.len()];
    let mut cum = 0.0f64;
    for &u in &order {
        energies[u] = n0 / gains.as_slice()[u] * cum.exp() * rates.as_slice()[u].exp_m1();
        cum += rates.as_slice()[u];
    }
    PowerVector::new(energies, n0)
}

/// Exhaustively enumerates all decoding orders (factorial in the user
/// count, capped at 10) and returns the minimizing order and its sum
/// power. Ties go to the ascending-gain order.
pub fn decode_order_oracle(
    gains: &GainVector,
    rates: &RateVector,
    n0: f64,
) -> Result<(Vec<usize>, f64)> {
    check_lengths(gains, rates)?;
    const LIMIT: usize = 10;
    let k = gains.len();
    if k > LIMIT {
        return Err(Error::TooLarge {
            what: "decode-order enumeration",
            limit: LIMIT,
            got: k,
        });
    }
    let ascending = gains.ascending_order();
    let ascending_sum = chain_sum(&ascending, gains.as_slice(), rates.as_slice(), n0);
    let mut best_order = ascending.clone();
    let mut best = ascending_sum;
    for perm in (0..k).permutations(k) {
        let s = chain_sum(&perm, gains.as_slice(), rates.as_slice(), n0);
        if s < best {
            best = s;
            best_order = perm;
        }
    }
    // Mathematically tied orders differ by rounding noise; within a 1e-12
    // relative band the ascending order wins the tie.
    if ascending_sum - best <= 1e-12 * best.max(f64::MIN_POSITIVE) {
        best_order = ascending;
    }
    Ok((best_order, best))
}

/// Checks every non-empty subset constraint of the multi-access capacity
/// region (2^K enumeration, capped at 20 users):
/// sum_{i in S} rho_i <= log(1 + sum_{i in S} d_i E_i / N0) + 1e-9.
pub fn capacity_region_check(
    gains: &GainVector,
    powers: &PowerVector,
    rates: &RateVector,
) -> Result<bool> {
    check_lengths(gains, rates)?;
    if powers.energies().len() != gains.len() {
        return Err(Error::InvalidInput(format!(
            "power vector length mismatch: {} vs {}",
            powers.energies().len(),
            gains.len()
        )));
    }
    const LIMIT: usize = 20;
    let k = gains.len();
    if k > LIMIT {
        return Err(Error::TooLarge {
            what: "capacity-region subset enumeration",
            limit: LIMIT,
            got: k,
        });
    }
    const SLACK: f64 = 1e-9;
    let d = gains.as_slice();
    let rho = rates.as_slice();
    let e = powers.energies();
    let n0 = powers.n0();
    for subset in 1u32..(1u32 << k) {
        let mut rate_sum = 0.0;
        let mut received = 0.0;
        for i in 0..k {
            if subset & (1 << i) != 0 {
                rate_sum += rho[i];
                received += d[i] * e[i];
            }
        }
        if rate_sum > (received / n0).ln_1p() + SLACK {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Both sides of the telescoping log identity
/// sum_i log(1 + a_i / (Z + sum_{u<i} a_u)) = log(1 + sum_i a_i / Z),
/// which is why the sum received energy depends only on the sum rate.
pub fn sum_rate_identity(terms: &[f64], z: f64) -> (f64, f64) {
    let mut acc = 0.0;
    let mut lhs = 0.0;
    for &a in terms {
        lhs += (a / (z + acc)).ln_1p();
        acc += a;
    }
    let rhs = (acc / z).ln_1p();
    (lhs, rhs)
}

/// Step-by-step rate transfer from `rates` down to the prefix-dominated
/// `rates_to` over ascending gains: at step u the u-th rate is pinned to
/// its target and the surplus is pushed onto user u+1. Returns the sum
/// power after every step (step 0 = the original vector); the sequence is
/// non-increasing and ends at the dominated vector's sum power.
pub fn dominance_transform_trace(
    rates: &RateVector,
    rates_to: &RateVector,
    gains: &GainVector,
    n0: f64,
) -> Result<Vec<f64>> {
    check_lengths(gains, rates)?;
    check_lengths(gains, rates_to)?;
    let d = gains.as_slice();
    if d.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput(
            "gains must be sorted ascending for the rate transfer".into(),
        ));
    }
    // Prefix dominance: sum_{i<=k} rates >= sum_{i<=k} rates_to for all k.
    let mut surplus = 0.0;
    for (k, (a, b)) in rates
        .as_slice()
        .iter()
        .zip(rates_to.as_slice().iter())
        .enumerate()
    {
        surplus += a - b;
        if surplus < -1e-12 {
            return Err(Error::DominanceViolation { index: k });
        }
    }

    let k = rates.len();
    let mut current = rates.as_slice().to_vec();
    let mut trace = Vec::with_capacity(k + 1);
    trace.push(optimal_allocation(gains, &RateVector::new(current.clone())?, n0)?.total());
    for u in 0..k {
        let surplus = current[u] - rates_to.as_slice()[u];
        current[u] = rates_to.as_slice()[u];
        if u + 1 < k {
            // Rounding can leave a microscopically negative rate when the
            // prefix constraint is tight; clamp it rather than reject.
            current[u + 1] = (current[u + 1] + surplus).max(0.0);
        }
        trace.push(optimal_allocation(gains, &RateVector::new(current.clone())?, n0)?.total());
    }
    Ok(trace)
}

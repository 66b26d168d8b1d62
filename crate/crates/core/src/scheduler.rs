//! The per-slot OSPC decision rule.
//!
//! In every slot the policy selects exactly the users whose best-band
//! fading exceeds their class threshold (f* > kappa_class), flushes each
//! selected user's whole buffer as that slot's rate, places every
//! selected user on its best band, and allocates transmit energy per band
//! with the greedy successive-decoding chain. Selection looks only at
//! fast fading, never at path loss: fading is identically distributed
//! across users, so thresholding it is distance-fair, and it is the only
//! time-varying quantity worth exploiting.

use rand::Rng;

use crate::channel::FadingLaw;
use crate::error::{Error, Result};
use crate::power::{self, GainVector, RateVector};

/// Queue and placement state of one user.
#[derive(Debug, Clone)]
pub struct UserState {
    /// Static path-loss gain s (>= 1 under the cell model).
    pub pathloss: f64,
    /// Buffered rate mass in nats; zero right after a served slot.
    pub queue: f64,
    /// Delay-class index.
    pub class_id: usize,
    /// Slot of the most recent service, if any.
    pub last_service_slot: Option<u64>,
}

impl UserState {
    pub fn new(pathloss: f64, class_id: usize) -> Self {
        Self {
            pathloss,
            queue: 0.0,
            class_id,
            last_service_slot: None,
        }
    }
}

/// Per-user, per-band fading gains for one slot (row-major user x band).
#[derive(Debug, Clone)]
pub struct SlotChannel {
    gains: Vec<f64>,
    users: usize,
    bands: usize,
    pub slot: u64,
}

impl SlotChannel {
    pub fn new(gains: Vec<f64>, users: usize, bands: usize, slot: u64) -> Result<Self> {
        if bands == 0 || gains.len() != users * bands {
            return Err(Error::InvalidInput(format!(
                "fading matrix must be {users} x {bands}, got {} entries",
                gains.len()
            )));
        }
        if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidInput(
                "fading gains must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            gains,
            users,
            bands,
            slot,
        })
    }

    /// Draws one slot of i.i.d. fading for `users` users.
    pub fn draw<R: Rng + ?Sized>(fading: &FadingLaw, users: usize, slot: u64, rng: &mut R) -> Self {
        let bands = fading.bands();
        let gains = (0..users * bands).map(|_| fading.sample_band(rng)).collect();
        Self {
            gains,
            users,
            bands,
            slot,
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn gain(&self, user: usize, band: usize) -> f64 {
        self.gains[user * self.bands + band]
    }

    /// Best band and its gain for one user; ties go to the lowest band.
    pub fn best(&self, user: usize) -> (usize, f64) {
        let row = &self.gains[user * self.bands..(user + 1) * self.bands];
        let mut best_band = 0;
        let mut best_gain = row[0];
        for (m, &g) in row.iter().enumerate().skip(1) {
            if g > best_gain {
                best_band = m;
                best_gain = g;
            }
        }
        (best_band, best_gain)
    }
}

/// One delay class: the opportunism threshold applied to its users, the
/// delay it targets, and the fraction of users it holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayClass {
    pub kappa: f64,
    pub target_delay: f64,
    pub fraction: f64,
}

/// Per-class thresholds; fractions sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassThresholds {
    classes: Vec<DelayClass>,
}

impl ClassThresholds {
    pub fn new(classes: Vec<DelayClass>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidInput("need at least one delay class".into()));
        }
        if classes
            .iter()
            .any(|c| !c.kappa.is_finite() || c.kappa < 0.0 || c.fraction <= 0.0)
        {
            return Err(Error::InvalidInput(
                "class thresholds must be >= 0 and fractions positive".into(),
            ));
        }
        let total: f64 = classes.iter().map(|c| c.fraction).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "class fractions must sum to 1, got {total}"
            )));
        }
        Ok(Self { classes })
    }

    /// Single class containing everyone, with the delay the law implies.
    pub fn single(fading: &FadingLaw, kappa: f64) -> Result<Self> {
        let gamma = fading.selection_probability(kappa)?;
        Self::new(vec![DelayClass {
            kappa,
            target_delay: 1.0 / gamma,
            fraction: 1.0,
        }])
    }

    /// Builds per-class thresholds from target delays: each class gets
    /// the largest threshold that still meets its delay.
    pub fn from_delays(fading: &FadingLaw, delays: &[f64], fractions: &[f64]) -> Result<Self> {
        if delays.len() != fractions.len() {
            return Err(Error::InvalidInput(
                "delay and fraction lists must have equal length".into(),
            ));
        }
        let classes = delays
            .iter()
            .zip(fractions)
            .map(|(&d, &f)| {
                Ok(DelayClass {
                    kappa: fading.threshold_for_delay(d)?,
                    target_delay: d,
                    fraction: f,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(classes)
    }

    pub fn classes(&self) -> &[DelayClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn kappa_of(&self, class_id: usize) -> f64 {
        self.classes[class_id].kappa
    }

    /// Deterministic class sizes for `users` users via largest remainder,
    /// so every run partitions identically.
    pub fn class_counts(&self, users: usize) -> Vec<usize> {
        let mut counts: Vec<usize> = self
            .classes
            .iter()
            .map(|c| (c.fraction * users as f64).floor() as usize)
            .collect();
        let assigned: usize = counts.iter().sum();
        let mut remainders: Vec<(usize, f64)> = self
            .classes
            .iter()
            .enumerate()
            .map(|(l, c)| (l, c.fraction * users as f64 - counts[l] as f64))
            .collect();
        remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for (l, _) in remainders.iter().take(users - assigned) {
            counts[*l] += 1;
        }
        counts
    }
}

/// Outcome of one slot: who transmits, at what rate, on which band, with
/// how much energy. The four vectors are index-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleDecision {
    pub selected: Vec<usize>,
    pub rates: Vec<f64>,
    pub bands: Vec<usize>,
    pub energies: Vec<f64>,
}

impl ScheduleDecision {
    pub fn total_energy(&self) -> f64 {
        self.energies.iter().sum()
    }
}

/// Exactly the users whose best-band fading exceeds their class
/// threshold. An empty result is a legal no-transmission slot.
pub fn select_users(
    channel: &SlotChannel,
    thresholds: &ClassThresholds,
    users: &[UserState],
) -> Vec<usize> {
    users
        .iter()
        .enumerate()
        .filter(|(i, u)| channel.best(*i).1 > thresholds.kappa_of(u.class_id))
        .map(|(i, _)| i)
        .collect()
}

/// Serves everything in each selected buffer: returns the per-selected
/// rates, zeroes those queues and stamps the service slot.
pub fn flush_rates(users: &mut [UserState], selected: &[usize], slot: u64) -> Vec<f64> {
    selected
        .iter()
        .map(|&i| {
            let rate = users[i].queue;
            users[i].queue = 0.0;
            users[i].last_service_slot = Some(slot);
            rate
        })
        .collect()
}

/// Best band per selected user (the whole rate rides the best channel).
pub fn assign_bands(channel: &SlotChannel, selected: &[usize]) -> Vec<usize> {
    selected.iter().map(|&i| channel.best(i).0).collect()
}

/// Greedy successive-decoding power allocation, run independently per
/// band over the users assigned there with gains d_i = s_i * f_i^band.
/// Returns energies aligned with `selected`.
pub fn slot_power(
    channel: &SlotChannel,
    users: &[UserState],
    selected: &[usize],
    rates: &[f64],
    bands: &[usize],
    n0: f64,
) -> Result<Vec<f64>> {
    if rates.len() != selected.len() || bands.len() != selected.len() {
        return Err(Error::InvalidInput(
            "decision vectors must be index-aligned with the selected set".into(),
        ));
    }
    let mut energies = vec![0.0; selected.len()];
    for m in 0..channel.bands() {
        let members: Vec<usize> = (0..selected.len()).filter(|&j| bands[j] == m).collect();
        if members.is_empty() {
            continue;
        }
        let gains = GainVector::new(
            members
                .iter()
                .map(|&j| users[selected[j]].pathloss * channel.gain(selected[j], m))
                .collect(),
        )?;
        let band_rates = RateVector::new(members.iter().map(|&j| rates[j]).collect())?;
        let alloc = power::optimal_allocation(&gains, &band_rates, n0)?;
        for (slot_idx, &j) in members.iter().enumerate() {
            energies[j] = alloc.energies()[slot_idx];
        }
    }
    Ok(energies)
}

/// Full slot decision: select, flush, place, allocate.
pub fn schedule_slot(
    channel: &SlotChannel,
    thresholds: &ClassThresholds,
    users: &mut [UserState],
    n0: f64,
) -> Result<ScheduleDecision> {
    let selected = select_users(channel, thresholds, users);
    let rates = flush_rates(users, &selected, channel.slot);
    let bands = assign_bands(channel, &selected);
    let energies = slot_power(channel, users, &selected, &rates, &bands, n0)?;
    Ok(ScheduleDecision {
        selected,
        rates,
        bands,
        energies,
    })
}

//! Experiment configuration: one JSON document per experiment, unknown
//! keys rejected, physical parameters range-checked on construction.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use ospc_core::analysis::{
    self, delay_of_threshold, energy_efficiency, AnalysisConfig, TradeoffRow,
};
use ospc_core::channel::{ConditionalChannelLaw, FadingLaw, PathLossLaw};
use ospc_core::scheduler::ClassThresholds;
use ospc_core::sim::{self, ArrivalLaw, SimConfig};

use crate::table::{Cell, ResultTable};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pathloss: PathLossSection,
    fading: FadingSection,
    #[serde(default = "default_n0")]
    n0: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    rate_unit: RateUnit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tradeoff: Option<TradeoffSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    compare_pfs: Option<ComparePfsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    convergence: Option<ConvergenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    simulate: Option<SimulateSection>,
}

fn default_n0() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PathLossSection {
    alpha: f64,
    delta: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum FadingSection {
    ExpUnitMean { bands: usize },
    ParetoTail { tail_exponent: f64 },
    BoundedUniform { supremum: f64, bands: usize },
}

/// Reporting unit for spectral efficiency and energy per information
/// unit. Internal computation is always in nats.
#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum RateUnit {
    #[default]
    Nats,
    Bits,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    min: f64,
    max: f64,
    points: usize,
    #[serde(default)]
    log: bool,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
enum GridOrList {
    List(Vec<f64>),
    Spec(GridSpec),
}

impl GridOrList {
    fn values(&self) -> anyhow::Result<Vec<f64>> {
        match self {
            GridOrList::List(v) => {
                if v.is_empty() {
                    bail!("empty grid");
                }
                Ok(v.clone())
            }
            GridOrList::Spec(spec) => {
                if spec.points < 2 || spec.max <= spec.min {
                    bail!("grid needs points >= 2 and max > min");
                }
                if spec.log && spec.min <= 0.0 {
                    bail!("log grid needs min > 0");
                }
                Ok((0..spec.points)
                    .map(|i| {
                        let t = i as f64 / (spec.points - 1) as f64;
                        if spec.log {
                            (spec.min.ln() + t * (spec.max.ln() - spec.min.ln())).exp()
                        } else {
                            spec.min + t * (spec.max - spec.min)
                        }
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ArrivalSection {
    Constant,
    BernoulliScaled { p: f64 },
    UniformDiscrete { lo: u32, hi: u32 },
}

impl ArrivalSection {
    fn build(&self) -> ArrivalLaw {
        match *self {
            ArrivalSection::Constant => ArrivalLaw::Constant,
            ArrivalSection::BernoulliScaled { p } => ArrivalLaw::BernoulliScaled { p },
            ArrivalSection::UniformDiscrete { lo, hi } => ArrivalLaw::UniformDiscrete { lo, hi },
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct TradeoffSection {
    delays: GridOrList,
    /// One table per value; interpreted in `rate_unit`.
    spectral_efficiencies: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ComparePfsSection {
    /// One threshold-policy curve per value.
    kappas: Vec<f64>,
    /// User count of the proportional-fair baseline.
    pfs_users: usize,
    /// PFS sweep in dB; defaults to 60 log-spaced points in [-10, 30].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    snr_db: Option<GridSpec>,
    /// Spectral-efficiency sweep of the threshold-policy curves,
    /// interpreted in `rate_unit`.
    spectral_efficiencies: GridOrList,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ConvergenceSection {
    user_counts: Vec<usize>,
    /// Ensemble size at desk scale; `--paper-scale` forces 1000.
    systems: usize,
    horizon: u64,
    /// Interpreted in `rate_unit`.
    spectral_efficiency: f64,
    kappa: f64,
    arrival: ArrivalSection,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SimulateSection {
    users: usize,
    horizon: u64,
    /// Interpreted in `rate_unit`.
    spectral_efficiency: f64,
    arrival: ArrivalSection,
    classes: Vec<ClassSection>,
    #[serde(default)]
    record_energy_series: bool,
    #[serde(default = "default_stability_fraction")]
    stability_fraction: f64,
}

fn default_stability_fraction() -> f64 {
    0.5
}

/// One delay class: give either the target delay (threshold derived) or
/// the threshold itself.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ClassSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_delay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    fraction: f64,
}

impl ExperimentConfig {
    pub fn parse(raw: &str) -> anyhow::Result<Self> {
        let cfg: Self = serde_json::from_str(raw).context("invalid config")?;
        // Fail fast on out-of-range physical parameters.
        cfg.pathloss_law()?;
        cfg.fading_law()?;
        if !cfg.n0.is_finite() || cfg.n0 <= 0.0 {
            bail!("invalid config: n0 must be > 0, got {}", cfg.n0);
        }
        Ok(cfg)
    }

    fn pathloss_law(&self) -> anyhow::Result<PathLossLaw> {
        Ok(PathLossLaw::new(self.pathloss.alpha, self.pathloss.delta)?)
    }

    fn fading_law(&self) -> anyhow::Result<FadingLaw> {
        Ok(match self.fading {
            FadingSection::ExpUnitMean { bands } => FadingLaw::exp_unit_mean(bands)?,
            FadingSection::ParetoTail { tail_exponent } => FadingLaw::pareto_tail(tail_exponent)?,
            FadingSection::BoundedUniform { supremum, bands } => {
                FadingLaw::bounded_uniform(supremum, bands)?
            }
        })
    }

    fn to_nats(&self, value: f64) -> f64 {
        match self.rate_unit {
            RateUnit::Nats => value,
            RateUnit::Bits => value * LN2,
        }
    }

    /// Converts a per-nat energy figure to the reporting unit (energy per
    /// bit is larger by ln 2 since a bit carries less information).
    fn energy_per_unit(&self, per_nat: f64) -> f64 {
        match self.rate_unit {
            RateUnit::Nats => per_nat,
            RateUnit::Bits => per_nat * LN2,
        }
    }

    fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config echo")
    }

    pub fn run_tradeoff(&self) -> anyhow::Result<ResultTable> {
        let section = self
            .tradeoff
            .as_ref()
            .context("config has no `tradeoff` section")?;
        let delays = section.delays.values()?;
        let pathloss = self.pathloss_law()?;
        let fading = self.fading_law()?;
        let mut table = ResultTable::new(
            "tradeoff",
            vec![
                "spectral_efficiency",
                "delay",
                "kappa",
                "gamma",
                "ebn0",
                "ebn0_db",
            ],
            self.echo(),
            self.seed,
            false,
        );
        for &se in &section.spectral_efficiencies {
            let gamma_nats = self.to_nats(se);
            let channel = ConditionalChannelLaw::new(pathloss, fading, 0.0)?;
            let cfg = AnalysisConfig::new(gamma_nats, channel)?;
            let rows: Vec<TradeoffRow> = analysis::tradeoff_table(&delays, &cfg)?;
            for row in rows {
                let value = self.energy_per_unit(row.energy.value);
                table.push(vec![
                    Cell::Float(se),
                    Cell::Float(row.delay),
                    Cell::Float(row.kappa),
                    Cell::Float(row.gamma),
                    Cell::Float(value),
                    Cell::Float(10.0 * value.log10()),
                ]);
            }
        }
        Ok(table)
    }

    pub fn run_compare_pfs(&self) -> anyhow::Result<ResultTable> {
        let section = self
            .compare_pfs
            .as_ref()
            .context("config has no `compare_pfs` section")?;
        let pathloss = self.pathloss_law()?;
        let fading = self.fading_law()?;
        let mut table = ResultTable::new(
            "compare-pfs",
            vec![
                "curve",
                "kappa",
                "snr_db",
                "spectral_efficiency",
                "ebn0",
                "ebn0_db",
            ],
            self.echo(),
            self.seed,
            false,
        );
        for &kappa in &section.kappas {
            let channel = ConditionalChannelLaw::new(pathloss, fading, kappa)?;
            for &se in &section.spectral_efficiencies.values()? {
                let gamma_nats = self.to_nats(se);
                let energy = energy_efficiency(&AnalysisConfig::new(gamma_nats, channel)?)?;
                let value = self.energy_per_unit(energy.value);
                table.push(vec![
                    Cell::Text(format!("ospc-delay-{:.4}", delay_of_threshold(&channel))),
                    Cell::Float(kappa),
                    Cell::Empty,
                    Cell::Float(se),
                    Cell::Float(value),
                    Cell::Float(10.0 * value.log10()),
                ]);
            }
        }
        let snr_grid = match &section.snr_db {
            Some(spec) => GridOrList::Spec(spec.clone())
                .values()?
                .into_iter()
                .map(|db| 10f64.powf(db / 10.0))
                .collect(),
            None => analysis::default_pfs_snr_grid(),
        };
        for point in analysis::pfs_curve(&snr_grid, section.pfs_users, pathloss)? {
            // The baseline is computed in bits natively; convert both
            // axes to the configured unit.
            let (se, ebn0) = match self.rate_unit {
                RateUnit::Bits => (point.spectral_efficiency_bits, point.ebn0),
                RateUnit::Nats => (
                    point.spectral_efficiency_bits * LN2,
                    point.ebn0 / LN2,
                ),
            };
            table.push(vec![
                Cell::Text("pfs".into()),
                Cell::Empty,
                Cell::Float(10.0 * point.snr.log10()),
                Cell::Float(se),
                Cell::Float(ebn0),
                Cell::Float(10.0 * ebn0.log10()),
            ]);
        }
        Ok(table)
    }

    pub fn run_convergence(&self, paper_scale: bool) -> anyhow::Result<ResultTable> {
        let section = self
            .convergence
            .as_ref()
            .context("config has no `convergence` section")?;
        let systems = if paper_scale { 1000 } else { section.systems };
        let pathloss = self.pathloss_law()?;
        let fading = self.fading_law()?;
        let gamma_nats = self.to_nats(section.spectral_efficiency);
        let channel = ConditionalChannelLaw::new(pathloss, fading, section.kappa)?;
        let asymptotic = energy_efficiency(&AnalysisConfig::new(gamma_nats, channel)?)?;
        let mut table = ResultTable::new(
            "convergence",
            vec![
                "users", "systems", "min_ebn0", "max_ebn0", "mean_ebn0", "spread", "asymptotic",
            ],
            self.echo(),
            self.seed,
            paper_scale,
        );
        let mut counts = section.user_counts.clone();
        counts.sort_unstable();
        for users in counts {
            let cfg = SimConfig {
                users,
                spectral_efficiency: gamma_nats,
                pathloss,
                thresholds: ClassThresholds::single(&fading, section.kappa)?,
                fading,
                arrival: section.arrival.build(),
                horizon: section.horizon,
                n0: self.n0,
                seed: 0,
                record_slot_energy: false,
            };
            let summary = sim::run_ensemble(&cfg, systems, self.seed)?;
            table.push(vec![
                Cell::Int(users as u64),
                Cell::Int(systems as u64),
                Cell::Float(self.energy_per_unit(summary.min_ebn0)),
                Cell::Float(self.energy_per_unit(summary.max_ebn0)),
                Cell::Float(self.energy_per_unit(summary.mean_ebn0)),
                Cell::Float(self.energy_per_unit(summary.max_ebn0 - summary.min_ebn0)),
                Cell::Float(self.energy_per_unit(asymptotic.value)),
            ]);
        }
        Ok(table)
    }

    pub fn run_simulate(&self) -> anyhow::Result<ResultTable> {
        let section = self
            .simulate
            .as_ref()
            .context("config has no `simulate` section")?;
        let pathloss = self.pathloss_law()?;
        let fading = self.fading_law()?;
        let mut classes = Vec::with_capacity(section.classes.len());
        for class in &section.classes {
            let kappa = match (class.target_delay, class.kappa) {
                (Some(d), None) => fading.threshold_for_delay(d)?,
                (None, Some(k)) => k,
                _ => bail!("each class needs exactly one of `target_delay` or `kappa`"),
            };
            let target_delay = match class.target_delay {
                Some(d) => d,
                None => match fading.selection_probability(kappa) {
                    Ok(g) => 1.0 / g,
                    Err(_) => f64::INFINITY,
                },
            };
            classes.push(ospc_core::scheduler::DelayClass {
                kappa,
                target_delay,
                fraction: class.fraction,
            });
        }
        let cfg = SimConfig {
            users: section.users,
            spectral_efficiency: self.to_nats(section.spectral_efficiency),
            pathloss,
            thresholds: ClassThresholds::new(classes)?,
            fading,
            arrival: section.arrival.build(),
            horizon: section.horizon,
            n0: self.n0,
            seed: self.seed,
            record_slot_energy: section.record_energy_series,
        };
        let metrics = sim::run(&cfg)?;
        let report = sim::stability_report(&metrics, section.stability_fraction);

        let mut table = ResultTable::new(
            "simulate",
            vec![
                "user",
                "class",
                "pathloss",
                "mean_delay",
                "mean_delay_unweighted",
                "mean_busy_period",
                "busy_periods",
                "longest_busy_period",
                "selection_frequency",
                "served_mass",
                "mean_accumulated_demand",
                "unstable",
            ],
            self.echo(),
            self.seed,
            false,
        );
        let float_or_empty = |v: f64| {
            if v.is_nan() {
                Cell::Empty
            } else {
                Cell::Float(v)
            }
        };
        for (i, (u, verdict)) in metrics.per_user.iter().zip(&report).enumerate() {
            table.push(vec![
                Cell::Int(i as u64),
                Cell::Int(u.class_id as u64),
                Cell::Float(u.pathloss),
                float_or_empty(u.mean_delay),
                float_or_empty(u.mean_delay_unweighted),
                float_or_empty(u.mean_busy_period),
                Cell::Int(u.busy_period_count),
                Cell::Int(u.longest_busy_period),
                Cell::Float(u.selection_frequency),
                Cell::Float(u.served_mass),
                float_or_empty(u.mean_accumulated_demand),
                Cell::Text(verdict.flagged.to_string()),
            ]);
        }
        let mut system = serde_json::json!({
            "time_avg_ebn0": self.energy_per_unit(metrics.time_avg_ebn0),
            "time_avg_ebn0_db": 10.0 * self.energy_per_unit(metrics.time_avg_ebn0).log10(),
            "raw_energy_total": metrics.raw_energy_total,
            "horizon": metrics.horizon,
            "warmup_slots": metrics.warmup_slots,
            "measured_slots": metrics.measured_slots,
            "total_arrival_mass": metrics.total_arrival_mass,
            "total_served_mass": metrics.total_served_mass,
            "final_queue_mass": metrics.final_queue_mass,
        });
        if let Some(series) = &metrics.slot_energy {
            system["slot_energy"] = serde_json::json!(series);
        }
        table.metadata.config["system_metrics"] = system;
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "pathloss": {"alpha": 2.0, "delta": 0.01},
        "fading": {"exp_unit_mean": {"bands": 10}}
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.n0, 1.0);
        assert_eq!(cfg.rate_unit, RateUnit::Nats);
    }

    #[test]
    fn unknown_top_level_key_is_rejected() {
        let raw = r#"{
            "pathloss": {"alpha": 2.0, "delta": 0.01},
            "fading": {"exp_unit_mean": {"bands": 10}},
            "typo_key": 1
        }"#;
        let err = ExperimentConfig::parse(raw).unwrap_err();
        assert!(format!("{err:#}").contains("typo_key"));
    }

    #[test]
    fn unknown_nested_key_is_rejected() {
        let raw = r#"{
            "pathloss": {"alpha": 2.0, "delta": 0.01, "radius": 5},
            "fading": {"exp_unit_mean": {"bands": 10}}
        }"#;
        assert!(ExperimentConfig::parse(raw).is_err());
    }

    #[test]
    fn out_of_range_parameters_are_rejected() {
        for (alpha, delta) in [(0.5, 0.01), (2.0, 0.0), (2.0, 1.0)] {
            let raw = format!(
                r#"{{"pathloss": {{"alpha": {alpha}, "delta": {delta}}},
                     "fading": {{"exp_unit_mean": {{"bands": 10}}}}}}"#
            );
            assert!(ExperimentConfig::parse(&raw).is_err(), "{alpha}/{delta}");
        }
        let raw = r#"{
            "pathloss": {"alpha": 2.0, "delta": 0.01},
            "fading": {"exp_unit_mean": {"bands": 0}}
        }"#;
        assert!(ExperimentConfig::parse(raw).is_err());
    }

    #[test]
    fn missing_section_is_an_error() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert!(cfg.run_tradeoff().is_err());
        assert!(cfg.run_compare_pfs().is_err());
        assert!(cfg.run_simulate().is_err());
    }

    #[test]
    fn grids_expand() {
        let lin = GridOrList::Spec(GridSpec {
            min: 1.0,
            max: 3.0,
            points: 3,
            log: false,
        });
        assert_eq!(lin.values().unwrap(), vec![1.0, 2.0, 3.0]);
        let log = GridOrList::Spec(GridSpec {
            min: 1.0,
            max: 100.0,
            points: 3,
            log: true,
        });
        let v = log.values().unwrap();
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert!(GridOrList::List(vec![]).values().is_err());
    }
}

//! Channel statistics: path loss, short-term fading, and the
//! threshold-conditioned product law they induce.
//!
//! Users sit uniformly at random in a unit-radius cell with a forbidden
//! disc of radius `delta` around the access point. With path-loss
//! exponent `alpha`, the path loss S = r^(-alpha) of a random user is
//! supported on [1, delta^(-alpha)] and has CDF
//!
//! ```text
//! Psi(x) = 1 - (x^(-2/alpha) - delta^2) / (1 - delta^2)
//! ```
//!
//! on that interval (unit gain at the cell border by normalization).
//!
//! Short-term fading is i.i.d. per user, slot and band. A user's
//! effective fading is the best of its `M` bands, f* = max_m f^m, and a
//! scheduler with opportunism threshold `kappa` only ever serves users
//! with f* > kappa. The law that matters downstream is therefore the
//! product d = S * f* conditioned on f* > kappa, with selection
//! probability gamma = P{f* > kappa}.
//!
//! For unit-mean exponential fading and alpha = 2 the conditioned
//! product CDF has a closed form (a finite series in (1 - e^-x)^i / i,
//! two branches split at x = kappa * delta^-2); any other combination is
//! integrated numerically against the path-loss density. Both routes are
//! exposed so they can be checked against each other.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric;

/// Absolute tolerance for the generic product-law CDF quadrature.
const CDF_QUAD_TOL: f64 = 1e-9;
/// Absolute tolerance for path-loss expectations.
const EXPECT_QUAD_TOL: f64 = 1e-9;
/// Relative tolerance of quantile inversion.
const QUANTILE_REL_TOL: f64 = 1e-12;
/// Required residual of the delay-to-threshold inversion.
const KAPPA_GAMMA_TOL: f64 = 1e-10;

/// Distance-driven slow gain of a user placed uniformly in the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossLaw {
    alpha: f64,
    delta: f64,
}

impl PathLossLaw {
    /// `alpha`: path-loss exponent (>= 1); `delta`: forbidden-region
    /// radius as a fraction of the cell radius, in (0, 1).
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 1.0 {
            return Err(Error::InvalidInput(format!(
                "path-loss exponent must be finite and >= 1, got {alpha}"
            )));
        }
        if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "forbidden-region radius must lie in (0, 1), got {delta}"
            )));
        }
        Ok(Self { alpha, delta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Largest attainable path loss, delta^(-alpha).
    pub fn support_max(&self) -> f64 {
        self.delta.powf(-self.alpha)
    }

    /// P{S <= x}: zero up to the cell-border gain 1, one past the
    /// forbidden-region gain delta^(-alpha).
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 1.0 {
            return 0.0;
        }
        if x >= self.support_max() {
            return 1.0;
        }
        let d2 = self.delta * self.delta;
        (1.0 - (x.powf(-2.0 / self.alpha) - d2) / (1.0 - d2)).clamp(0.0, 1.0)
    }

    /// Draws a path loss by radius inversion: r^2 uniform on
    /// [delta^2, 1], S = r^(-alpha). Exact for uniform placement.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let d2 = self.delta * self.delta;
        let r2 = d2 + (1.0 - d2) * rng.random::<f64>();
        r2.powf(-self.alpha / 2.0)
    }

    /// E[g(S)] by adaptive quadrature over the radius variable, where the
    /// integrand is smooth: E[g(S)] = int_delta^1 g(r^-alpha) 2r/(1-delta^2) dr.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let d2 = self.delta * self.delta;
        let norm = 2.0 / (1.0 - d2);
        let (v, _) = numeric::integrate(
            |r| g(r.powf(-self.alpha)) * norm * r,
            self.delta,
            1.0,
            EXPECT_QUAD_TOL,
        )?;
        Ok(v)
    }
}

/// Per-slot fast fading, reduced to the law of the best band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingLaw {
    /// Unit-mean exponential power gain on each of `bands` independent
    /// bands (Rayleigh envelope).
    ExpUnitMean { bands: usize },
    /// Heavy-tailed single-band gain: P{f <= x} = 1 - x^(1 - tail_exponent)
    /// for x >= 1. The tail exponent must exceed 1.
    ParetoTail { tail_exponent: f64 },
    /// Uniform gain on [0, supremum] on each of `bands` bands; the one
    /// compactly supported law here, used for the energy-optimality bound.
    BoundedUniform { supremum: f64, bands: usize },
}

impl FadingLaw {
    pub fn exp_unit_mean(bands: usize) -> Result<Self> {
        if bands == 0 {
            return Err(Error::InvalidInput("band count must be >= 1".into()));
        }
        Ok(Self::ExpUnitMean { bands })
    }

    pub fn pareto_tail(tail_exponent: f64) -> Result<Self> {
        if !tail_exponent.is_finite() || tail_exponent <= 1.0 {
            return Err(Error::InvalidInput(format!(
                "tail exponent must be > 1, got {tail_exponent}"
            )));
        }
        Ok(Self::ParetoTail { tail_exponent })
    }

    pub fn bounded_uniform(supremum: f64, bands: usize) -> Result<Self> {
        if !supremum.is_finite() || supremum <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "fading supremum must be > 0, got {supremum}"
            )));
        }
        if bands == 0 {
            return Err(Error::InvalidInput("band count must be >= 1".into()));
        }
        Ok(Self::BoundedUniform { supremum, bands })
    }

    /// Number of independently fading bands (the heavy-tail law is
    /// single-band by construction).
    pub fn bands(&self) -> usize {
        match *self {
            Self::ExpUnitMean { bands } => bands,
            Self::ParetoTail { .. } => 1,
            Self::BoundedUniform { bands, .. } => bands,
        }
    }

    /// Infimum of the support of one band's gain.
    pub fn support_infimum(&self) -> f64 {
        match self {
            Self::ParetoTail { .. } => 1.0,
            _ => 0.0,
        }
    }

    /// Supremum of the support, when finite.
    pub fn support_supremum(&self) -> Option<f64> {
        match *self {
            Self::BoundedUniform { supremum, .. } => Some(supremum),
            _ => None,
        }
    }

    /// P{f* <= x} for the best-of-bands gain f* = max_m f^m.
    pub fn best_cdf(&self, x: f64) -> f64 {
        match *self {
            Self::ExpUnitMean { bands } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-(-x).exp_m1()).powi(bands as i32)
                }
            }
            Self::ParetoTail { tail_exponent } => {
                if x < 1.0 {
                    0.0
                } else {
                    1.0 - x.powf(1.0 - tail_exponent)
                }
            }
            Self::BoundedUniform { supremum, bands } => {
                if x <= 0.0 {
                    0.0
                } else if x >= supremum {
                    1.0
                } else {
                    (x / supremum).powi(bands as i32)
                }
            }
        }
    }

    /// Inverse of `best_cdf` (exact per variant).
    fn best_quantile(&self, c: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&c));
        match *self {
            Self::ExpUnitMean { bands } => {
                if c <= 0.0 {
                    0.0
                } else {
                    // x = -ln(1 - c^(1/M)) computed as -ln(-expm1(ln(c)/M))
                    -(-(c.ln() / bands as f64).exp_m1()).ln()
                }
            }
            Self::ParetoTail { tail_exponent } => {
                (1.0 - c).powf(-1.0 / (tail_exponent - 1.0))
            }
            Self::BoundedUniform { supremum, bands } => {
                supremum * c.powf(1.0 / bands as f64)
            }
        }
    }

    /// Selection probability gamma = P{f* > kappa}. Errors when the
    /// threshold sits at or above the support supremum, which would make
    /// the policy degenerate (no user ever served).
    pub fn selection_probability(&self, kappa: f64) -> Result<f64> {
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(Error::InvalidInput(format!(
                "threshold must be finite and >= 0, got {kappa}"
            )));
        }
        let gamma = 1.0 - self.best_cdf(kappa);
        if gamma <= 0.0 {
            return Err(Error::DegeneratePolicy { kappa });
        }
        Ok(gamma)
    }

    /// Largest threshold kappa with P{f* > kappa} = 1 / target_delay,
    /// found by monotone bisection on the best-of-bands CDF. The residual
    /// |gamma(kappa) - 1/target_delay| is held below 1e-10.
    pub fn threshold_for_delay(&self, target_delay: f64) -> Result<f64> {
        if !target_delay.is_finite() || target_delay < 1.0 {
            return Err(Error::UnattainableDelay {
                target: target_delay,
            });
        }
        let lo = self.support_infimum();
        if target_delay == 1.0 {
            // gamma = 1 exactly up to the support infimum.
            return Ok(lo);
        }
        let cdf_target = 1.0 - 1.0 / target_delay;
        let hi = match self.support_supremum() {
            Some(b) => b,
            None => numeric::expand_upper(|x| self.best_cdf(x), cdf_target, lo, lo + 1.0)?,
        };
        let kappa =
            numeric::bisect_nondecreasing(|x| self.best_cdf(x), cdf_target, lo, hi, 1e-15)?;
        let gamma = 1.0 - self.best_cdf(kappa);
        let residual = (gamma - 1.0 / target_delay).abs();
        if residual > KAPPA_GAMMA_TOL {
            return Err(Error::NoConvergence {
                what: "threshold-for-delay inversion",
                estimate: residual,
                tolerance: KAPPA_GAMMA_TOL,
            });
        }
        Ok(kappa)
    }

    /// P{f* <= x | f* > kappa} for x >= kappa.
    pub fn conditional_best_cdf(&self, kappa: f64, x: f64) -> Result<f64> {
        let gamma = self.selection_probability(kappa)?;
        Ok(self.conditional_best_cdf_with_gamma(kappa, gamma, x))
    }

    fn conditional_best_cdf_with_gamma(&self, kappa: f64, gamma: f64, x: f64) -> f64 {
        if x <= kappa {
            return 0.0;
        }
        (((self.best_cdf(x) - self.best_cdf(kappa)) / gamma).clamp(0.0, 1.0)).min(1.0)
    }

    /// Draws one band's gain by inverse CDF.
    pub fn sample_band<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = rng.random::<f64>();
        match *self {
            Self::ExpUnitMean { .. } => -(-u).ln_1p(), // -ln(1 - u)
            Self::ParetoTail { tail_exponent } => (1.0 - u).powf(-1.0 / (tail_exponent - 1.0)),
            Self::BoundedUniform { supremum, .. } => supremum * u,
        }
    }

    /// Draws f* conditioned on f* > kappa by exact inverse-CDF sampling.
    fn sample_conditional_best<R: Rng + ?Sized>(&self, kappa: f64, gamma: f64, rng: &mut R) -> f64 {
        // u in (0, 1): u = 0 would land exactly on the threshold, which the
        // strict selection rule excludes.
        let u = loop {
            let u = rng.random::<f64>();
            if u > 0.0 {
                break u;
            }
        };
        let c = self.best_cdf(kappa) + u * gamma;
        self.best_quantile(c.min(1.0 - f64::EPSILON))
    }
}

/// The product channel d = S * f* conditioned on selection (f* > kappa).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalChannelLaw {
    pathloss: PathLossLaw,
    fading: FadingLaw,
    kappa: f64,
    gamma: f64,
}

impl ConditionalChannelLaw {
    pub fn new(pathloss: PathLossLaw, fading: FadingLaw, kappa: f64) -> Result<Self> {
        let gamma = fading.selection_probability(kappa)?;
        Ok(Self {
            pathloss,
            fading,
            kappa,
            gamma,
        })
    }

    pub fn pathloss(&self) -> &PathLossLaw {
        &self.pathloss
    }

    pub fn fading(&self) -> &FadingLaw {
        &self.fading
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Selection probability gamma = P{f* > kappa}, in (0, 1].
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn bands(&self) -> usize {
        self.fading.bands()
    }

    /// Infimum of the support of d = S * f* given f* > kappa; path loss
    /// is at least 1, so this is the larger of kappa and the fading floor.
    pub fn support_infimum(&self) -> f64 {
        self.kappa.max(self.fading.support_infimum())
    }

    /// Supremum of the support when the fading is compactly supported.
    pub fn support_supremum(&self) -> Option<f64> {
        self.fading
            .support_supremum()
            .map(|b| b * self.pathloss.support_max())
    }

    fn has_closed_form(&self) -> bool {
        matches!(self.fading, FadingLaw::ExpUnitMean { .. }) && self.pathloss.alpha == 2.0
    }

    /// P{S f* <= x | f* > kappa}. Closed form for exponential fading with
    /// inverse-square path loss, numeric integration otherwise.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.has_closed_form() {
            self.cdf_closed_form(x)
        } else {
            self.cdf_numeric(x)
                .expect("product-law CDF quadrature failed on a bounded smooth integrand")
        }
    }

    /// Closed-form branch (exponential fading, alpha = 2 only):
    ///
    /// ```text
    ///           (1 - kappa/x)/(1 - delta^2) - T(x, kappa) / (gamma x (1 - delta^2)),   x <  kappa delta^-2
    /// F(x) =
    ///           1 - T(x, x delta^2) / (gamma x (1 - delta^2)),                          x >= kappa delta^-2
    /// ```
    ///
    /// with T(a, b) = sum_{i=1..M} [(1 - e^-a)^i - (1 - e^-b)^i] / i.
    fn cdf_closed_form(&self, x: f64) -> f64 {
        let m = self.fading.bands();
        let kappa = self.kappa;
        if x <= self.support_infimum() || x <= 0.0 {
            return 0.0;
        }
        let d2 = self.pathloss.delta * self.pathloss.delta;
        let scale = 1.0 / (self.gamma * x * (1.0 - d2));
        let value = if kappa > 0.0 && x < kappa / d2 {
            (1.0 - kappa / x) / (1.0 - d2) - series(m, x, kappa) * scale
        } else {
            1.0 - series(m, x, x * d2) * scale
        };
        value.clamp(0.0, 1.0)
    }

    /// Generic route: integrates the conditional best-band fading CDF
    /// against the path-loss density in radius space,
    /// F(x) = int_delta^1 P{f* <= x r^alpha | f* > kappa} 2r/(1-delta^2) dr,
    /// with explicit breakpoints at the threshold and saturation kinks.
    pub fn cdf_numeric(&self, x: f64) -> Result<f64> {
        if x <= self.support_infimum() || x <= 0.0 {
            return Ok(0.0);
        }
        let alpha = self.pathloss.alpha;
        let delta = self.pathloss.delta;
        let d2 = delta * delta;
        // P{f* <= x r^alpha | .} vanishes for x r^alpha <= kappa.
        let r_lo = if self.kappa > 0.0 {
            (self.kappa / x).powf(1.0 / alpha).max(delta)
        } else {
            delta
        };
        if r_lo >= 1.0 {
            return Ok(0.0);
        }
        let mut breakpoints = Vec::new();
        if let Some(b) = self.fading.support_supremum() {
            if x > b {
                let r_sat = (b / x).powf(1.0 / alpha);
                if r_sat > r_lo && r_sat < 1.0 {
                    breakpoints.push(r_sat);
                }
            }
        }
        let norm = 2.0 / (1.0 - d2);
        let (v, _) = numeric::integrate_with_breakpoints(
            |r| {
                self.fading
                    .conditional_best_cdf_with_gamma(self.kappa, self.gamma, x * r.powf(alpha))
                    * norm
                    * r
            },
            r_lo,
            1.0,
            &breakpoints,
            CDF_QUAD_TOL,
        )?;
        Ok(v.clamp(0.0, 1.0))
    }

    /// Inverse CDF by bisection on the monotone CDF; relative tolerance
    /// 1e-12. `u` must lie in [0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::InvalidInput(format!(
                "quantile argument must lie in [0, 1), got {u}"
            )));
        }
        let lo = self.support_infimum();
        if u == 0.0 {
            return Ok(lo);
        }
        let hi = match self.support_supremum() {
            Some(b) => b,
            None => numeric::expand_upper(|x| self.cdf(x), u, lo, lo + 1.0)?,
        };
        numeric::bisect_nondecreasing(|x| self.cdf(x), u, lo, hi, QUANTILE_REL_TOL)
    }

    /// Draws d = S * f* with f* > kappa (path loss by radius inversion,
    /// conditional fading by inverse CDF).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let s = self.pathloss.sample(rng);
        let f = self
            .fading
            .sample_conditional_best(self.kappa, self.gamma, rng);
        s * f
    }
}

/// T(a, b) = sum_{i=1..M} [(1 - e^-a)^i - (1 - e^-b)^i] / i.
fn series(m: usize, a: f64, b: f64) -> f64 {
    let wa = -(-a).exp_m1();
    let wb = -(-b).exp_m1();
    let mut pa = 1.0;
    let mut pb = 1.0;
    let mut acc = 0.0;
    for i in 1..=m {
        pa *= wa;
        pb *= wb;
        acc += (pa - pb) / i as f64;
    }
    acc
}

//! Seeded synthetic demand, wind and price data with the same shapes and CSV
//! schemas as the real inputs.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, TimeDelta, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::timeseries::{HouseholdDemandSet, TimeSeries, Unit, STEPS_PER_DAY};

const DEMAND_STREAM: u64 = 1;
const WIND_STREAM: u64 = 2;
const PRICE_STREAM: u64 = 3;

/// Spread of per-household consumption levels (log scale).
const HOUSEHOLD_SIGMA: f64 = 0.3;
/// Step-to-step multiplicative noise on demand (log scale).
const DEMAND_NOISE_SIGMA: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    /// First timestamp, UTC midnight.
    pub start: DateTime<Utc>,
    pub households: usize,
    pub days: usize,
    pub demand_mean_kwh_per_halfhour: f64,
    /// Evening peak relative to the night-time base.
    pub demand_peak_factor: f64,
    pub wind_weibull_k: f64,
    pub wind_weibull_scale_ms: f64,
    pub wind_ar1_rho: f64,
    /// Probability that an hourly wind reading is dropped.
    pub wind_gap_prob: f64,
    pub price_mean_eur_mwh: f64,
    pub price_daily_amplitude: f64,
    pub price_noise_sd: f64,
    pub price_negative_prob: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            start: Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap(),
            households: 200,
            days: 365,
            demand_mean_kwh_per_halfhour: 0.24,
            demand_peak_factor: 3.0,
            wind_weibull_k: 2.0,
            wind_weibull_scale_ms: 5.5,
            wind_ar1_rho: 0.9,
            wind_gap_prob: 0.0,
            price_mean_eur_mwh: 95.0,
            price_daily_amplitude: 40.0,
            price_noise_sd: 20.0,
            price_negative_prob: 0.02,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.households >= 1, "households must be at least 1"),
            (self.days >= 1, "days must be at least 1"),
            (self.demand_mean_kwh_per_halfhour > 0.0, "demand_mean_kwh_per_halfhour must be positive"),
            (self.demand_peak_factor >= 1.0, "demand_peak_factor must be at least 1"),
            (self.wind_weibull_k > 0.0, "wind_weibull_k must be positive"),
            (self.wind_weibull_scale_ms > 0.0, "wind_weibull_scale_ms must be positive"),
            ((0.0..1.0).contains(&self.wind_ar1_rho), "wind_ar1_rho must lie in [0, 1)"),
            ((0.0..=1.0).contains(&self.wind_gap_prob), "wind_gap_prob must lie in [0, 1]"),
            (self.price_daily_amplitude >= 0.0, "price_daily_amplitude must be non-negative"),
            (self.price_noise_sd >= 0.0, "price_noise_sd must be non-negative"),
            ((0.0..=1.0).contains(&self.price_negative_prob), "price_negative_prob must lie in [0, 1]"),
            (self.price_mean_eur_mwh.is_finite(), "price_mean_eur_mwh must be finite"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::Config(format!("synth: {msg}")));
            }
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Diurnal shape with a morning and a larger evening peak, mean 1 over a day.
fn diurnal_profile(peak_factor: f64) -> [f64; STEPS_PER_DAY] {
    let bump = |h: f64, centre: f64, width: f64| (-0.5 * ((h - centre) / width).powi(2)).exp();
    let mut p = [0.0; STEPS_PER_DAY];
    for (i, v) in p.iter_mut().enumerate() {
        let h = (i as f64 + 0.5) * 0.5;
        *v = 1.0 + (peak_factor - 1.0) * (0.6 * bump(h, 7.5, 1.5) + bump(h, 19.0, 2.0));
    }
    let mean = p.iter().sum::<f64>() / STEPS_PER_DAY as f64;
    p.map(|v| v / mean)
}

/// Household demand in kWh per half-hour.
pub fn gen_demand(cfg: &SynthConfig) -> Result<HouseholdDemandSet> {
    cfg.validate()?;
    let mut rng = cfg.rng(DEMAND_STREAM);
    let profile = diurnal_profile(cfg.demand_peak_factor);
    let level = LogNormal::new(-0.5 * HOUSEHOLD_SIGMA.powi(2), HOUSEHOLD_SIGMA).expect("valid sigma");
    let noise = LogNormal::new(-0.5 * DEMAND_NOISE_SIGMA.powi(2), DEMAND_NOISE_SIGMA).expect("valid sigma");
    let mut scales: Vec<f64> = (0..cfg.households).map(|_| level.sample(&mut rng)).collect();
    // Normalized so the community mean is exactly the configured level.
    let mean_scale = scales.iter().sum::<f64>() / scales.len() as f64;
    scales.iter_mut().for_each(|s| *s /= mean_scale);

    let n = cfg.days * STEPS_PER_DAY;
    let mut households = BTreeMap::new();
    for (h, scale) in scales.iter().enumerate() {
        let values: Vec<f64> = (0..n)
            .map(|i| cfg.demand_mean_kwh_per_halfhour * profile[i % STEPS_PER_DAY] * scale * noise.sample(&mut rng))
            .collect();
        let series = TimeSeries::new(cfg.start, TimeDelta::minutes(30), values, Unit::Kwh)?;
        households.insert(format!("hh{:04}", h + 1), series);
    }
    HouseholdDemandSet::new(households)
}

/// Hourly wind speed at anemometer height: an AR(1) Gaussian process mapped
/// onto the Weibull marginal. Gaps never fall on the first or last hour.
pub fn gen_wind(cfg: &SynthConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    let mut rng = cfg.rng(WIND_STREAM);
    let n = cfg.days * 24;
    let phi = Normal::standard();
    let rho = cfg.wind_ar1_rho;
    let innov = (1.0 - rho * rho).sqrt();
    let mut z: f64 = rng.sample(StandardNormal);
    let mut values = Vec::with_capacity(n);
    let mut missing = BTreeSet::new();
    for i in 0..n {
        if i > 0 {
            let e: f64 = rng.sample(StandardNormal);
            z = rho * z + innov * e;
        }
        let u = phi.cdf(z).clamp(1e-12, 1.0 - 1e-12);
        values.push(cfg.wind_weibull_scale_ms * (-(1.0 - u).ln()).powf(1.0 / cfg.wind_weibull_k));
        let drop = rng.random::<f64>() < cfg.wind_gap_prob;
        if drop && i > 0 && i + 1 < n {
            missing.insert(i);
        }
    }
    TimeSeries::with_missing(cfg.start, TimeDelta::hours(1), values, Unit::MetersPerSecond, missing)
}

/// Hourly day-ahead prices in €/MWh: a daily sinusoid peaking mid-afternoon
/// plus Gaussian noise, with occasional negative hours.
pub fn gen_prices(cfg: &SynthConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    let mut rng = cfg.rng(PRICE_STREAM);
    let n = cfg.days * 24;
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let h = (i % 24) as f64;
            let base = cfg.price_mean_eur_mwh - cfg.price_daily_amplitude * (std::f64::consts::TAU * (h - 4.0) / 24.0).cos();
            let e: f64 = rng.sample(StandardNormal);
            let p = base + cfg.price_noise_sd * e;
            let negative = rng.random::<f64>() < cfg.price_negative_prob;
            if negative {
                -(1.0 + 0.3 * cfg.price_mean_eur_mwh.abs() * rng.random::<f64>())
            } else {
                p
            }
        })
        .collect();
    TimeSeries::new(cfg.start, TimeDelta::hours(1), values, Unit::EurPerMwh)
}

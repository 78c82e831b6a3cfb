use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and steering parameters of one battery (or one share of it).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatterySpec {
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_initial: f64,
    /// kW, applies to both charge and discharge.
    pub p_max: f64,
    /// kWh per step on import and export; `None` is unbounded.
    pub e_max: Option<f64>,
    pub eta_c: f64,
    pub eta_d: f64,
    /// Round-trip efficiency used by the market model.
    pub eta_cd: f64,
    /// € per kW of charge or discharge power (L1 steering term).
    pub lambda_charging: f64,
    /// € per kWh of capacity left unused at the end of the horizon (L2 steering term).
    pub lambda_capacity: f64,
    /// Full cycles allowed per day.
    pub lambda_max_cycles: f64,
    /// End-of-day SoC floor for the market model, as a fraction of `soc_max`.
    pub soc_eod_min_frac: f64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        BatterySpec::with_capacity(0.0)
    }
}

impl BatterySpec {
    /// Default parameters for a battery of `capacity_kwh`, with power rated at
    /// half the capacity per hour and an empty initial state.
    pub fn with_capacity(capacity_kwh: f64) -> Self {
        BatterySpec {
            soc_min: 0.0,
            soc_max: capacity_kwh,
            soc_initial: 0.0,
            p_max: 0.5 * capacity_kwh,
            e_max: None,
            eta_c: 0.90,
            eta_d: 0.97,
            eta_cd: 0.87,
            lambda_charging: 1e-7,
            lambda_capacity: 0.12,
            lambda_max_cycles: 1.3,
            soc_eod_min_frac: 0.0,
        }
    }

    /// Same efficiencies and steering weights, resized to `capacity_kwh` with
    /// the C-rate preserved and the initial state clipped into range.
    pub fn resized(&self, capacity_kwh: f64) -> Self {
        let rate = if self.soc_max > 0.0 {
            self.p_max / self.soc_max
        } else {
            0.5
        };
        BatterySpec {
            soc_min: 0.0,
            soc_max: capacity_kwh,
            soc_initial: self.soc_initial.clamp(0.0, capacity_kwh.max(0.0)),
            p_max: rate * capacity_kwh,
            ..*self
        }
    }

    /// Usable energy window.
    pub fn width(&self) -> f64 {
        self.soc_max - self.soc_min
    }

    /// Throughput allowed per day, kWh on the SoC side. `None` when the
    /// battery has no usable window.
    pub fn daily_throughput_budget(&self) -> Option<f64> {
        (self.width() > 0.0).then(|| 2.0 * self.lambda_max_cycles * self.width())
    }

    pub fn validate(&self) -> Result<()> {
        let eta_ok = |e: f64| e > 0.0 && e <= 1.0;
        let checks = [
            (self.soc_min >= 0.0, "soc_min must be non-negative"),
            (self.soc_min <= self.soc_initial, "soc_initial below soc_min"),
            (self.soc_initial <= self.soc_max, "soc_initial above soc_max"),
            (self.p_max >= 0.0, "p_max must be non-negative"),
            (self.e_max.is_none_or(|e| e >= 0.0), "e_max must be non-negative"),
            (eta_ok(self.eta_c), "eta_c must lie in (0, 1]"),
            (eta_ok(self.eta_d), "eta_d must lie in (0, 1]"),
            (eta_ok(self.eta_cd), "eta_cd must lie in (0, 1]"),
            (self.lambda_charging >= 0.0, "lambda_charging must be non-negative"),
            (self.lambda_capacity >= 0.0, "lambda_capacity must be non-negative"),
            (self.lambda_max_cycles > 0.0, "lambda_max_cycles must be positive"),
            (
                (0.0..=1.0).contains(&self.soc_eod_min_frac),
                "soc_eod_min_frac must lie in [0, 1]",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::Config(format!("battery: {msg}")));
            }
        }
        let finite = [
            self.soc_min,
            self.soc_max,
            self.soc_initial,
            self.p_max,
            self.lambda_charging,
            self.lambda_capacity,
            self.lambda_max_cycles,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("battery: non-finite parameter".into()));
        }
        Ok(())
    }
}

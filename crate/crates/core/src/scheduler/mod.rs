//! Community battery controllers and the shared schedule type.

mod battery;
mod chain;
mod greedy;
mod lp;
mod oracle;
mod rolling;
mod schedule;
pub(crate) mod solver;

use serde::{Deserialize, Serialize};

pub use battery::BatterySpec;
pub use chain::chain_year;
pub use greedy::greedy_schedule;
pub use lp::{lp_day_schedule, milp_day_schedule};
pub use oracle::{dp_oracle, dp_oracle_with_cycle_cap, MAX_ORACLE_GRID, MAX_ORACLE_STEPS};
pub use rolling::rolling_horizon_schedule;
pub use schedule::{bill, Schedule, SCHEDULE_HEADER, VALIDATION_TOL};

pub(crate) use schedule::raw_bill;

use crate::error::{Error, Result};
use crate::tariffs::TariffSchedule;
use crate::timeseries::{TimeSeries, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Greedy,
    Lp,
    Milp,
    Rolling,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Greedy => "greedy",
            Mode::Lp => "lp",
            Mode::Milp => "milp",
            Mode::Rolling => "rolling",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub use_l1: bool,
    pub use_l2: bool,
    /// SoC floor at every day end as a fraction of `soc_max`; 0 disables it.
    pub eod_min_frac: f64,
    pub mode: Mode,
    pub rolling_period_steps: usize,
    pub horizon_steps: usize,
    /// Wall-clock budget per MILP solve.
    pub milp_time_limit_secs: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            use_l1: true,
            use_l2: true,
            eod_min_frac: 0.0,
            mode: Mode::Lp,
            rolling_period_steps: 2,
            horizon_steps: 48,
            milp_time_limit_secs: 60.0,
        }
    }
}

impl SolveOptions {
    pub fn unregularized(mode: Mode) -> Self {
        SolveOptions {
            use_l1: false,
            use_l2: false,
            mode,
            ..SolveOptions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rolling_period_steps < 1 {
            return Err(Error::Config("rolling_period_steps must be at least 1".into()));
        }
        if self.horizon_steps < self.rolling_period_steps {
            return Err(Error::Config("horizon_steps must be at least rolling_period_steps".into()));
        }
        if !(0.0..=1.0).contains(&self.eod_min_frac) {
            return Err(Error::Config("eod_min_frac must lie in [0, 1]".into()));
        }
        if self.milp_time_limit_secs.is_nan() || self.milp_time_limit_secs <= 0.0 {
            return Err(Error::Config("milp_time_limit_secs must be positive".into()));
        }
        Ok(())
    }
}

/// Shared preconditions: kW inputs on one gap-free grid, an aligned tariff and
/// a consistent battery.
pub(crate) fn check_inputs(
    gen: &TimeSeries,
    demand: &TimeSeries,
    tariff: Option<&TariffSchedule>,
    battery: &BatterySpec,
) -> Result<()> {
    for (s, what) in [(gen, "generation"), (demand, "demand")] {
        if s.unit() != Unit::Kw {
            return Err(Error::Precondition(format!("{what} must be in kW, got {:?}", s.unit())));
        }
        s.ensure_gap_free(what)?;
    }
    gen.ensure_aligned(demand, "generation vs demand")?;
    if let Some(t) = tariff {
        gen.ensure_aligned(&t.buy, "generation vs buy price")?;
        gen.ensure_aligned(&t.sell, "generation vs sell price")?;
    }
    battery.validate()
}

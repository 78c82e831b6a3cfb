//! Raw inputs to aligned half-hourly model series.

use crate::error::{Error, Result};
use crate::synth::{gen_demand, gen_prices, gen_wind, SynthConfig};
use crate::timeseries::{
    aggregate_households, day_ahead_to_halfhourly, fill_and_resample, HouseholdDemandSet, TimeSeries,
};
use crate::wind::{generation_series, TurbineModel};

/// Community demand, turbine output and day-ahead prices on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityInputs {
    /// kW.
    pub demand: TimeSeries,
    /// kW, for the configured turbine.
    pub generation: TimeSeries,
    /// €/kWh.
    pub day_ahead: TimeSeries,
}

impl CommunityInputs {
    pub fn len(&self) -> usize {
        self.demand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<CommunityInputs> {
        Ok(CommunityInputs {
            demand: self.demand.slice(range.clone())?,
            generation: self.generation.slice(range.clone())?,
            day_ahead: self.day_ahead.slice(range)?,
        })
    }
}

/// Aggregates household demand, spline-resamples hourly wind and converts it
/// to turbine output, and spreads hourly prices onto half-hours.
///
/// All three must start together. Resampled series that end one half-hour
/// short of the demand grid hold their last value; longer series are cut to
/// the demand length.
pub fn prepare_inputs(
    households: &HouseholdDemandSet,
    wind_hourly: &TimeSeries,
    prices_hourly: &TimeSeries,
    turbine: &TurbineModel,
) -> Result<CommunityInputs> {
    turbine.validate()?;
    let demand = aggregate_households(households)?.to_power()?;
    let wind = fit(fill_and_resample(wind_hourly)?, &demand, "wind")?;
    let prices = fit(day_ahead_to_halfhourly(prices_hourly)?, &demand, "day-ahead prices")?;
    Ok(CommunityInputs {
        generation: generation_series(&wind, turbine)?,
        day_ahead: prices,
        demand,
    })
}

fn fit(series: TimeSeries, demand: &TimeSeries, what: &str) -> Result<TimeSeries> {
    if series.start() != demand.start() || series.step() != demand.step() {
        return Err(Error::Alignment(format!(
            "{what} starts at {} with step {}, demand at {} with step {}",
            series.start(),
            series.step(),
            demand.start(),
            demand.step()
        )));
    }
    if series.len() + 1 < demand.len() {
        return Err(Error::Alignment(format!(
            "{what} covers {} half-hours, demand {}",
            series.len(),
            demand.len()
        )));
    }
    series.hold_to_len(demand.len())
}

/// Synthetic households, wind and prices run through [`prepare_inputs`].
pub fn synthetic_inputs(cfg: &SynthConfig, turbine: &TurbineModel) -> Result<CommunityInputs> {
    prepare_inputs(&gen_demand(cfg)?, &gen_wind(cfg)?, &gen_prices(cfg)?, turbine)
}

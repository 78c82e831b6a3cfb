//! Wind speed to turbine output, generation coefficient scaling and turbine
//! amortization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{TimeSeries, Unit};

/// Single turbine with a sigmoid power curve and a log-law shear profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurbineModel {
    pub capacity_kw: f64,
    /// Sigmoid slope, s/m.
    pub sigmoid_a: f64,
    /// Sigmoid midpoint, m/s.
    pub sigmoid_b: f64,
    pub hub_height_m: f64,
    pub anemometer_height_m: f64,
    pub roughness_m: f64,
    pub price_per_kw: f64,
    pub amortization_years: f64,
}

impl Default for TurbineModel {
    /// Enercon E-33 fit.
    fn default() -> Self {
        TurbineModel {
            capacity_kw: 330.0,
            sigmoid_a: 0.7526,
            sigmoid_b: 8.424,
            hub_height_m: 50.0,
            anemometer_height_m: 10.0,
            roughness_m: 0.03,
            price_per_kw: 1200.0,
            amortization_years: 20.0,
        }
    }
}

impl TurbineModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.capacity_kw > 0.0
            && self.hub_height_m >= self.anemometer_height_m
            && self.anemometer_height_m > self.roughness_m
            && self.roughness_m > 0.0
            && self.amortization_years > 0.0
            && self.price_per_kw >= 0.0
            && self.sigmoid_a > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid turbine parameters: {self:?}")))
        }
    }

    /// Ratio of hub-height to anemometer-height wind speed.
    pub fn shear_factor(&self) -> f64 {
        (self.hub_height_m / self.roughness_m).ln() / (self.anemometer_height_m / self.roughness_m).ln()
    }

    /// Yearly capital cost of this turbine.
    pub fn annual_cost(&self) -> f64 {
        self.capacity_kw * self.price_per_kw / self.amortization_years
    }
}

pub fn shear_extrapolate(u_anemometer: f64, model: &TurbineModel) -> f64 {
    u_anemometer * model.shear_factor()
}

/// Output power in kW at hub-height wind speed `u_hub`.
pub fn turbine_power(u_hub: f64, model: &TurbineModel) -> f64 {
    model.capacity_kw / (1.0 + (-model.sigmoid_a * (u_hub - model.sigmoid_b)).exp())
}

/// Half-hourly 10 m wind speeds to turbine output in kW.
pub fn generation_series(wind: &TimeSeries, model: &TurbineModel) -> Result<TimeSeries> {
    if wind.unit() != Unit::MetersPerSecond {
        return Err(Error::Precondition(format!("wind series in {:?}", wind.unit())));
    }
    wind.ensure_gap_free("generation_series")?;
    wind.map(|u| turbine_power(shear_extrapolate(u, model), model))?
        .with_unit(Unit::Kw)
}

/// Yearly generation over yearly demand.
pub fn generation_coefficient(gen: &TimeSeries, demand: &TimeSeries) -> Result<f64> {
    gen.ensure_aligned(demand, "generation coefficient")?;
    let g = gen.total_energy_kwh()?;
    let d = demand.total_energy_kwh()?;
    if d <= 0.0 {
        return Err(Error::Scaling("total demand is zero".into()));
    }
    Ok(g / d)
}

/// Generation rescaled to hit a target coefficient.
#[derive(Debug, Clone)]
pub struct ScaledGeneration {
    pub generation: TimeSeries,
    pub capacity_kw: f64,
    pub annual_cost_eur: f64,
}

/// Scales `gen` (produced by `model`) so that its coefficient against `demand`
/// equals `r_target`. The turbine is treated as continuously resizable, so
/// cost scales linearly with the implied capacity.
pub fn scale_to_coefficient(
    gen: &TimeSeries,
    demand: &TimeSeries,
    r_target: f64,
    model: &TurbineModel,
) -> Result<ScaledGeneration> {
    if !r_target.is_finite() || r_target < 0.0 {
        return Err(Error::Scaling(format!("invalid target coefficient {r_target}")));
    }
    let current = generation_coefficient(gen, demand)?;
    if current <= 0.0 {
        return Err(Error::Scaling("total generation is zero".into()));
    }
    let s = r_target / current;
    let capacity_kw = s * model.capacity_kw;
    Ok(ScaledGeneration {
        generation: gen.scaled(s)?,
        capacity_kw,
        annual_cost_eur: capacity_kw * model.price_per_kw / model.amortization_years,
    })
}

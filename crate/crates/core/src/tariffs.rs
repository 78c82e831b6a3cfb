//! Community buy/sell price schedules.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{Axis, TimeSeries, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TariffKind {
    Flat,
    Dynamic,
}

/// Constants of the dynamic retail tariff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicTariffParams {
    /// Added to the day-ahead price, €/kWh.
    pub adder: f64,
    /// Export price as a fraction of the buy price.
    pub sell_fraction: f64,
    /// Upper bound on the export price, €/kWh.
    pub sell_cap: f64,
}

impl Default for DynamicTariffParams {
    fn default() -> Self {
        DynamicTariffParams {
            adder: 0.155,
            sell_fraction: 0.9,
            sell_cap: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TariffSchedule {
    pub buy: TimeSeries,
    pub sell: TimeSeries,
    pub day_ahead: Option<TimeSeries>,
    pub kind: TariffKind,
}

impl TariffSchedule {
    pub fn len(&self) -> usize {
        self.buy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buy.is_empty()
    }

    pub fn axis(&self) -> Axis {
        self.buy.axis()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<TariffSchedule> {
        Ok(TariffSchedule {
            buy: self.buy.slice(range.clone())?,
            sell: self.sell.slice(range.clone())?,
            day_ahead: self.day_ahead.as_ref().map(|d| d.slice(range)).transpose()?,
            kind: self.kind,
        })
    }
}

/// Constant prices. Equal buy and sell prices are accepted with a warning.
pub fn flat_tariff(buy_eur_kwh: f64, sell_eur_kwh: f64, axis: Axis) -> Result<TariffSchedule> {
    if !buy_eur_kwh.is_finite() || !sell_eur_kwh.is_finite() || sell_eur_kwh < 0.0 {
        return Err(Error::Config(format!(
            "flat tariff prices must be finite and non-negative (buy {buy_eur_kwh}, sell {sell_eur_kwh})"
        )));
    }
    if sell_eur_kwh > buy_eur_kwh {
        return Err(Error::Config(format!(
            "flat sell price {sell_eur_kwh} exceeds buy price {buy_eur_kwh}"
        )));
    }
    if sell_eur_kwh == buy_eur_kwh {
        warn!("flat tariff with equal buy and sell price {buy_eur_kwh}: greedy control is no longer strictly optimal");
    }
    Ok(TariffSchedule {
        buy: TimeSeries::constant(axis, buy_eur_kwh, Unit::EurPerKwh)?,
        sell: TimeSeries::constant(axis, sell_eur_kwh, Unit::EurPerKwh)?,
        day_ahead: None,
        kind: TariffKind::Flat,
    })
}

/// Retail prices following the half-hourly day-ahead price (€/kWh).
pub fn dynamic_tariff(
    day_ahead: &TimeSeries,
    export_paid: bool,
    params: &DynamicTariffParams,
) -> Result<TariffSchedule> {
    if day_ahead.unit() != Unit::EurPerKwh {
        return Err(Error::Precondition(format!(
            "day-ahead prices must be in €/kWh, got {:?}",
            day_ahead.unit()
        )));
    }
    day_ahead.ensure_gap_free("dynamic_tariff")?;
    let buy = day_ahead.map(|p| dynamic_buy(p, params))?;
    let sell = if export_paid {
        buy.map(|b| dynamic_sell(b, params))?
    } else {
        buy.map(|_| 0.0)?
    };
    Ok(TariffSchedule {
        buy,
        sell,
        day_ahead: Some(day_ahead.clone()),
        kind: TariffKind::Dynamic,
    })
}

pub fn dynamic_buy(day_ahead: f64, params: &DynamicTariffParams) -> f64 {
    (day_ahead + params.adder).max(0.0)
}

pub fn dynamic_sell(buy: f64, params: &DynamicTariffParams) -> f64 {
    (params.sell_fraction * buy).min(params.sell_cap)
}

//! Two-sided rental pricing: what the community would pay for battery
//! capacity, what the operator must charge, and the capacity that minimizes
//! the community's total cost.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel;
use crate::scheduler::{chain_year, BatterySpec, SolveOptions};
use crate::tariffs::TariffSchedule;
use crate::timeseries::TimeSeries;
use crate::wind::{generation_coefficient, scale_to_coefficient, TurbineModel};

/// Default capacity grid: 0 to 1000 kWh in 20 kWh steps.
pub fn default_capacity_grid() -> Vec<f64> {
    (0..=50).map(|k| 20.0 * k as f64).collect()
}

/// Capacity (kWh) to €/yr, capacities strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceCurve {
    points: Vec<(f64, f64)>,
}

impl PriceCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(c, v)) in points.iter().enumerate() {
            if !c.is_finite() || !v.is_finite() {
                return Err(Error::Domain(format!("non-finite curve point ({c}, {v})")));
            }
            if i > 0 && c <= points[i - 1].0 {
                return Err(Error::Domain("curve capacities must be strictly increasing".into()));
            }
        }
        Ok(PriceCurve { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Value at a grid capacity.
    pub fn at(&self, capacity_kwh: f64) -> Option<f64> {
        self.points.iter().find(|p| p.0 == capacity_kwh).map(|p| p.1)
    }

    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.points.windows(2).all(|w| w[1].1 >= w[0].1 - tol)
    }

    fn ensure_same_grid(&self, other: &PriceCurve) -> Result<()> {
        if self.capacities() != other.capacities() {
            return Err(Error::Alignment("price curves are on different capacity grids".into()));
        }
        Ok(())
    }

    /// `capacity_kwh,eur_per_year`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["capacity_kwh", "eur_per_year"])?;
        for (c, v) in &self.points {
            w.write_record([c.to_string(), v.to_string()])?;
        }
        flush(w, path)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let mut r = csv::Reader::from_path(path)?;
        let mut pts = Vec::new();
        for (i, rec) in r.deserialize::<(f64, f64)>().enumerate() {
            pts.push(rec.map_err(|e| Error::Load {
                path: path.to_path_buf(),
                row: i + 2,
                message: e.to_string(),
            })?);
        }
        PriceCurve::new(pts)
    }
}

/// Everything needed to price one community year.
#[derive(Debug, Clone)]
pub struct CommunityScenario {
    /// kW, the turbine output for this scenario.
    pub generation: TimeSeries,
    /// kW.
    pub demand: TimeSeries,
    pub tariff: TariffSchedule,
    /// Efficiencies, steering weights and C-rate; resized per capacity.
    pub battery: BatterySpec,
    pub opts: SolveOptions,
    pub turbine_annual_cost_eur: f64,
    /// Label used in reports.
    pub tariff_label: String,
}

impl CommunityScenario {
    fn battery_for(&self, capacity_kwh: f64) -> BatterySpec {
        self.battery.resized(capacity_kwh)
    }

    /// Bill of the chained year with a battery of `capacity_kwh`.
    pub fn yearly_bill(&self, capacity_kwh: f64) -> Result<f64> {
        let b = self.battery_for(capacity_kwh);
        Ok(chain_year(&self.generation, &self.demand, &self.tariff, &b, &self.opts)?.objective_value)
    }

    /// Bill plus turbine amortization.
    pub fn yearly_cost(&self, capacity_kwh: f64) -> Result<f64> {
        Ok(self.yearly_bill(capacity_kwh)? + self.turbine_annual_cost_eur)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    /// Bill + turbine amortization + rent at the minimum price, at the optimum.
    pub annual_cost_eur: f64,
    /// Total cost without a battery minus `annual_cost_eur`.
    pub annual_savings_eur: f64,
    pub optimal_capacity_kwh: f64,
    pub tariff: String,
    pub r_gen: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizingRow {
    pub capacity_kwh: f64,
    pub bill_eur: f64,
    pub min_price_eur: f64,
    pub total_cost_eur: f64,
    pub savings_eur: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sizing {
    pub result: ScenarioResult,
    pub rows: Vec<SizingRow>,
}

fn require_zero(capacities: &[f64]) -> Result<()> {
    if !capacities.contains(&0.0) {
        return Err(Error::Precondition("the capacity grid must include 0".into()));
    }
    Ok(())
}

/// Yearly cost with each capacity, in grid order.
pub fn yearly_costs(scn: &CommunityScenario, capacities: &[f64]) -> Result<Vec<f64>> {
    parallel::try_map(capacities, |&c| scn.yearly_cost(c))
}

/// Most the community would pay per year for each capacity:
/// `cost(0) − cost(C)`.
pub fn max_price_curve(scn: &CommunityScenario, capacities: &[f64]) -> Result<PriceCurve> {
    require_zero(capacities)?;
    let costs = yearly_costs(scn, capacities)?;
    let base = costs[capacities.iter().position(|c| *c == 0.0).expect("checked")];
    PriceCurve::new(capacities.iter().zip(&costs).map(|(&c, k)| (c, base - k)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasiblePoint {
    pub capacity_kwh: f64,
    pub price_low: f64,
    pub price_high: f64,
}

/// Capacities where the community's maximum exceeds the operator's minimum.
pub fn feasible_region(max_curve: &PriceCurve, min_curve: &PriceCurve) -> Result<Vec<FeasiblePoint>> {
    max_curve.ensure_same_grid(min_curve)?;
    Ok(max_curve
        .points()
        .iter()
        .zip(min_curve.points())
        .filter(|((_, hi), (_, lo))| hi > lo)
        .map(|(&(c, hi), &(_, lo))| FeasiblePoint {
            capacity_kwh: c,
            price_low: lo,
            price_high: hi,
        })
        .collect())
}

/// Capacity minimizing bill + turbine + rent at the minimum price. Ties go to
/// the smaller capacity.
pub fn optimal_capacity(scn: &CommunityScenario, capacities: &[f64], min_curve: &PriceCurve) -> Result<Sizing> {
    require_zero(capacities)?;
    let bills = parallel::try_map(capacities, |&c| scn.yearly_bill(c))?;
    optimal_from_bills(scn, capacities, &bills, min_curve)
}

fn optimal_from_bills(
    scn: &CommunityScenario,
    capacities: &[f64],
    bills: &[f64],
    min_curve: &PriceCurve,
) -> Result<Sizing> {
    let mut rows = Vec::with_capacity(capacities.len());
    for (&c, &bill) in capacities.iter().zip(bills) {
        let min_price = min_curve
            .at(c)
            .ok_or_else(|| Error::Alignment(format!("minimum price curve has no entry at {c} kWh")))?;
        rows.push(SizingRow {
            capacity_kwh: c,
            bill_eur: bill,
            min_price_eur: min_price,
            total_cost_eur: bill + scn.turbine_annual_cost_eur + min_price,
            savings_eur: 0.0,
        });
    }
    let base = rows
        .iter()
        .find(|r| r.capacity_kwh == 0.0)
        .map(|r| r.total_cost_eur)
        .expect("grid includes 0");
    for r in &mut rows {
        r.savings_eur = base - r.total_cost_eur;
    }
    let best = rows
        .iter()
        .min_by(|a, b| {
            a.total_cost_eur
                .total_cmp(&b.total_cost_eur)
                .then(a.capacity_kwh.total_cmp(&b.capacity_kwh))
        })
        .expect("non-empty grid");
    let r_gen = generation_coefficient(&scn.generation, &scn.demand)?;
    Ok(Sizing {
        result: ScenarioResult {
            annual_cost_eur: best.total_cost_eur,
            annual_savings_eur: base - best.total_cost_eur,
            optimal_capacity_kwh: best.capacity_kwh,
            tariff: scn.tariff_label.clone(),
            r_gen,
        },
        rows,
    })
}

/// Sizing for each generation coefficient in `r_values`. The base scenario's
/// generation is rescaled and the turbine cost follows the installed capacity.
/// Entries come back in the order of `r_values`.
pub fn cosize_generation(
    scn: &CommunityScenario,
    model: &TurbineModel,
    r_values: &[f64],
    capacities: &[f64],
    min_curve: &PriceCurve,
) -> Result<Vec<(f64, ScenarioResult)>> {
    require_zero(capacities)?;
    let mut out = Vec::with_capacity(r_values.len());
    for &r in r_values {
        let scaled = scale_to_coefficient(&scn.generation, &scn.demand, r, model)?;
        let s = CommunityScenario {
            generation: scaled.generation,
            turbine_annual_cost_eur: scaled.annual_cost_eur,
            ..scn.clone()
        };
        let mut sized = optimal_capacity(&s, capacities, min_curve)?.result;
        sized.r_gen = r;
        out.push((r, sized));
    }
    Ok(out)
}

/// The entry with the lowest total cost; ties go to the smaller coefficient.
pub fn best_coefficient(entries: &[(f64, ScenarioResult)]) -> Option<&(f64, ScenarioResult)> {
    entries.iter().min_by(|a, b| {
        a.1.annual_cost_eur
            .total_cmp(&b.1.annual_cost_eur)
            .then(a.0.total_cmp(&b.0))
    })
}

fn flush<W: std::io::Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

//! Day-ahead arbitrage by the battery operator and the profit it forgoes when
//! part of the battery is rented out.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};

use crate::error::{ConstraintFamily, Error, Result};
use crate::parallel;
use crate::pricing::PriceCurve;
use crate::scheduler::solver::{self, Outcome};
use crate::scheduler::{BatterySpec, Schedule};
use crate::timeseries::{TimeSeries, Unit, STEPS_PER_DAY};

#[derive(Debug, Clone, PartialEq)]
pub struct MarketResult {
    pub schedule: Schedule,
    /// € over the simulated period.
    pub profit_eur: f64,
    pub capacity_kwh: f64,
}

/// Profit-maximal trading over the price slice (nominally one day). Energy is
/// bought and sold at the day-ahead price; `objective_value` is the profit.
pub fn market_day_schedule(day_ahead: &TimeSeries, battery: &BatterySpec) -> Result<Schedule> {
    check_prices(day_ahead)?;
    battery.validate()?;
    let b = battery;
    let n = day_ahead.len();
    let dt = day_ahead.step_hours();
    let tau = day_ahead.values();
    let p_cap = match b.e_max {
        Some(e) => b.p_max.min(e / dt),
        None => b.p_max,
    };

    let mut p = Problem::new(OptimizationDirection::Minimize);
    let mut vars = Vec::with_capacity(n);
    for &t in tau {
        vars.push((
            p.add_var(t * dt, (0.0, p_cap)),
            p.add_var(-t * dt, (0.0, p_cap)),
            p.add_var(0.0, (b.soc_min, b.soc_max)),
        ));
    }
    for (i, &(pc, pd, soc)) in vars.iter().enumerate() {
        // soc_{i+1} - soc_i - eta_cd pc dt + pd dt = 0
        let mut rec = LinearExpr::empty();
        rec.add(soc, 1.0);
        rec.add(pc, -b.eta_cd * dt);
        rec.add(pd, dt);
        let rhs = if i == 0 {
            b.soc_initial
        } else {
            rec.add(vars[i - 1].2, -1.0);
            0.0
        };
        p.add_constraint(rec, ComparisonOp::Eq, rhs);
    }
    let budget = b.daily_throughput_budget();
    if let Some(budget) = budget {
        for chunk in vars.chunks(STEPS_PER_DAY) {
            let e: LinearExpr = chunk
                .iter()
                .flat_map(|&(pc, pd, _)| [(pc, b.eta_cd * dt), (pd, dt)])
                .collect();
            p.add_constraint(e, ComparisonOp::Le, budget);
        }
    }
    let floor = b.soc_eod_min_frac * b.soc_max;
    let floor_steps: Vec<usize> = (0..n)
        .filter(|i| floor > 0.0 && ((i + 1) % STEPS_PER_DAY == 0 || i + 1 == n))
        .collect();
    for &i in &floor_steps {
        p.add_constraint([(vars[i].2, 1.0)], ComparisonOp::Ge, floor);
    }

    let values = match solver::solve(&p, None)? {
        Outcome::Solved(v) => v,
        Outcome::Infeasible => {
            let gain = p_cap * b.eta_cd * dt;
            let family = match floor_steps.first() {
                Some(&i) if floor > b.soc_initial + gain * (i + 1) as f64 + 1e-9 => ConstraintFamily::EndOfDaySoc,
                Some(_) if budget.is_some_and(|bud| floor > b.soc_initial + bud * b.eta_cd.min(1.0) + 1e-9) => {
                    ConstraintFamily::CycleCap
                }
                _ => ConstraintFamily::Unknown,
            };
            return Err(Error::Infeasible(family));
        }
    };
    let mut s = Schedule::idle(day_ahead.axis(), b.soc_initial);
    for (i, &(pc, pd, soc)) in vars.iter().enumerate() {
        s.p_charge[i] = values[pc.idx()].clamp(0.0, p_cap);
        s.p_discharge[i] = values[pd.idx()].clamp(0.0, p_cap);
        s.e_buy[i] = s.p_charge[i] * dt;
        s.e_sell[i] = s.p_discharge[i] * dt;
        s.soc[i + 1] = values[soc.idx()].clamp(b.soc_min, b.soc_max);
    }
    s.objective_value = profit(&s, tau);
    Ok(s)
}

/// Year of trading for a battery of `capacity_kwh` with default parameters.
pub fn market_year_profit(day_ahead: &TimeSeries, capacity_kwh: f64) -> Result<MarketResult> {
    market_year_profit_with(day_ahead, &BatterySpec::with_capacity(capacity_kwh))
}

/// Daily trading chained through the SoC, starting from `battery.soc_initial`.
/// A trailing partial day is solved on its own.
pub fn market_year_profit_with(day_ahead: &TimeSeries, battery: &BatterySpec) -> Result<MarketResult> {
    check_prices(day_ahead)?;
    battery.validate()?;
    let n = day_ahead.len();
    let capacity_kwh = battery.soc_max;
    if battery.width() <= 0.0 || battery.p_max <= 0.0 {
        return Ok(MarketResult {
            schedule: Schedule::idle(day_ahead.axis(), battery.soc_initial),
            profit_eur: 0.0,
            capacity_kwh,
        });
    }
    let mut joined: Option<Schedule> = None;
    let mut soc = battery.soc_initial;
    for (day, start) in (0..n).step_by(STEPS_PER_DAY).enumerate() {
        let slice = day_ahead.slice(start..(start + STEPS_PER_DAY).min(n))?;
        let b = BatterySpec {
            soc_initial: soc,
            ..*battery
        };
        let s = market_day_schedule(&slice, &b).map_err(|e| e.on_day(day))?;
        soc = s.final_soc();
        match joined.as_mut() {
            Some(j) => j.append(s)?,
            None => joined = Some(s),
        }
    }
    let schedule = joined.unwrap_or_else(|| Schedule::idle(day_ahead.axis(), battery.soc_initial));
    let profit_eur = profit(&schedule, day_ahead.values());
    Ok(MarketResult {
        schedule: Schedule {
            objective_value: profit_eur,
            ..schedule
        },
        profit_eur,
        capacity_kwh,
    })
}

/// Market profit lost by renting out each capacity in `rented_kwh` from a
/// battery of `full_capacity_kwh` (default parameters).
pub fn opportunity_cost_curve(
    day_ahead: &TimeSeries,
    full_capacity_kwh: f64,
    rented_kwh: &[f64],
) -> Result<PriceCurve> {
    opportunity_cost_curve_with(day_ahead, &BatterySpec::with_capacity(full_capacity_kwh), rented_kwh)
}

/// As [`opportunity_cost_curve`] for the battery `full`. The operator keeps
/// `full − C` at the same C-rate.
pub fn opportunity_cost_curve_with(day_ahead: &TimeSeries, full: &BatterySpec, rented_kwh: &[f64]) -> Result<PriceCurve> {
    let cap = full.soc_max;
    for &c in rented_kwh {
        if !(0.0..=cap).contains(&c) {
            return Err(Error::Domain(format!("rented capacity {c} kWh outside [0, {cap}]")));
        }
    }
    let whole = market_year_profit_with(day_ahead, full)?.profit_eur;
    let kept = parallel::try_map(rented_kwh, |&c| {
        if c == 0.0 {
            return Ok(whole);
        }
        Ok(market_year_profit_with(day_ahead, &full.resized(cap - c))?.profit_eur)
    })?;
    PriceCurve::new(rented_kwh.iter().zip(kept).map(|(&c, k)| (c, whole - k)).collect())
}

fn profit(s: &Schedule, tau: &[f64]) -> f64 {
    s.e_sell
        .iter()
        .zip(&s.e_buy)
        .zip(tau)
        .map(|((es, eb), t)| t * (es - eb))
        .sum()
}

fn check_prices(day_ahead: &TimeSeries) -> Result<()> {
    if day_ahead.unit() != Unit::EurPerKwh {
        return Err(Error::Precondition(format!(
            "day-ahead prices must be in €/kWh, got {:?}",
            day_ahead.unit()
        )));
    }
    day_ahead.ensure_gap_free("day-ahead prices")
}

//! Cost-minimizing community dispatch as an LP, with an optional binary
//! exclusivity layer turning it into a MILP.

use std::ops::Range;
use std::time::Duration;

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};

use super::solver::{self, Outcome};
use super::{check_inputs, raw_bill, BatterySpec, Schedule, SolveOptions};
use crate::error::{ConstraintFamily, Error, Result};
use crate::tariffs::TariffSchedule;
use crate::timeseries::{Axis, TimeSeries, STEPS_PER_DAY};

/// Optimal schedule over the tariff horizon (nominally one day).
///
/// Minimizes the bill plus the enabled steering terms: `λ_charging` per kW of
/// charge and discharge power (L1) and `λ_capacity` per kWh of capacity left
/// empty at the horizon end (L2). `objective_value` is the bill alone.
pub fn lp_day_schedule(
    gen: &TimeSeries,
    demand: &TimeSeries,
    tariff: &TariffSchedule,
    battery: &BatterySpec,
    opts: &SolveOptions,
) -> Result<Schedule> {
    day_schedule(gen, demand, tariff, battery, opts, false)
}

/// As [`lp_day_schedule`], with binaries forbidding simultaneous charge and
/// discharge and simultaneous import and export.
pub fn milp_day_schedule(
    gen: &TimeSeries,
    demand: &TimeSeries,
    tariff: &TariffSchedule,
    battery: &BatterySpec,
    opts: &SolveOptions,
) -> Result<Schedule> {
    day_schedule(gen, demand, tariff, battery, opts, true)
}

fn day_schedule(
    gen: &TimeSeries,
    demand: &TimeSeries,
    tariff: &TariffSchedule,
    battery: &BatterySpec,
    opts: &SolveOptions,
    exclusive: bool,
) -> Result<Schedule> {
    check_inputs(gen, demand, Some(tariff), battery)?;
    opts.validate()?;
    let n = gen.len();
    let budget = battery.daily_throughput_budget();
    let cycle_blocks = match budget {
        Some(b) => day_blocks(0..n, 0).into_iter().map(|r| (r, b)).collect(),
        None => Vec::new(),
    };
    let model = CommunityModel {
        gen: gen.values(),
        demand: demand.values(),
        buy: tariff.buy.values(),
        sell: tariff.sell.values(),
        dt: gen.step_hours(),
        soc0: battery.soc_initial,
        battery,
        use_l1: opts.use_l1,
        use_l2: opts.use_l2,
        exclusive,
        soc_floors: eod_floors(0..n, n, opts.eod_min_frac * battery.soc_max),
        cycle_blocks,
        time_limit: exclusive.then(|| Duration::from_secs_f64(opts.milp_time_limit_secs)),
    };
    model.solve(gen.axis())
}

/// Splits the absolute step range `window` at calendar-day boundaries and
/// returns the pieces relative to `window.start`. `offset` is the absolute
/// index of step 0 of the series.
pub(crate) fn day_blocks(window: Range<usize>, offset: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut i = window.start;
    while i < window.end {
        let day_end = ((i + offset) / STEPS_PER_DAY + 1) * STEPS_PER_DAY - offset;
        let end = day_end.min(window.end);
        out.push(i - window.start..end - window.start);
        i = end;
    }
    out
}

/// `(relative step, floor)` for every step in `window` that closes a day or the
/// series of length `total`. Empty when `floor` is zero.
pub(crate) fn eod_floors(window: Range<usize>, total: usize, floor: f64) -> Vec<(usize, f64)> {
    if floor <= 0.0 {
        return Vec::new();
    }
    window
        .clone()
        .filter(|i| (i + 1) % STEPS_PER_DAY == 0 || i + 1 == total)
        .map(|i| (i - window.start, floor))
        .collect()
}

/// One community dispatch problem over a contiguous horizon.
pub(crate) struct CommunityModel<'a> {
    pub gen: &'a [f64],
    pub demand: &'a [f64],
    pub buy: &'a [f64],
    pub sell: &'a [f64],
    pub dt: f64,
    pub soc0: f64,
    pub battery: &'a BatterySpec,
    pub use_l1: bool,
    pub use_l2: bool,
    pub exclusive: bool,
    /// SoC after step `i` must be at least the floor.
    pub soc_floors: Vec<(usize, f64)>,
    /// SoC-side throughput allowed within each step range.
    pub cycle_blocks: Vec<(Range<usize>, f64)>,
    pub time_limit: Option<Duration>,
}

struct StepVars {
    pc: Variable,
    pd: Variable,
    eb: Variable,
    es: Variable,
    soc: Variable,
}

impl CommunityModel<'_> {
    fn len(&self) -> usize {
        self.gen.len()
    }

    pub(crate) fn solve(&self, axis: Axis) -> Result<Schedule> {
        let b = self.battery;
        let n = self.len();
        let dt = self.dt;
        let e_max = b.e_max.unwrap_or(f64::INFINITY);
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let l1 = if self.use_l1 { b.lambda_charging } else { 0.0 };
        let mut vars = Vec::with_capacity(n);
        for i in 0..n {
            let soc_obj = if self.use_l2 && i + 1 == n { -b.lambda_capacity } else { 0.0 };
            vars.push(StepVars {
                pc: p.add_var(l1, (0.0, b.p_max)),
                pd: p.add_var(l1, (0.0, b.p_max)),
                eb: p.add_var(self.buy[i], (0.0, e_max)),
                es: p.add_var(-self.sell[i], (0.0, e_max)),
                soc: p.add_var(soc_obj, (b.soc_min, b.soc_max)),
            });
        }
        for (i, v) in vars.iter().enumerate() {
            // soc_{i+1} - soc_i - eta_c pc dt + pd dt / eta_d = 0
            let mut rec = LinearExpr::empty();
            rec.add(v.soc, 1.0);
            rec.add(v.pc, -b.eta_c * dt);
            rec.add(v.pd, dt / b.eta_d);
            let rhs = if i == 0 {
                self.soc0
            } else {
                rec.add(vars[i - 1].soc, -1.0);
                0.0
            };
            p.add_constraint(rec, ComparisonOp::Eq, rhs);

            let mut bal = LinearExpr::empty();
            bal.add(v.pc, dt);
            bal.add(v.pd, -dt);
            bal.add(v.eb, -1.0);
            bal.add(v.es, 1.0);
            p.add_constraint(bal, ComparisonOp::Eq, (self.gen[i] - self.demand[i]) * dt);
        }
        for (range, budget) in &self.cycle_blocks {
            let mut e = LinearExpr::empty();
            for v in &vars[range.clone()] {
                e.add(v.pc, b.eta_c * dt);
                e.add(v.pd, dt / b.eta_d);
            }
            p.add_constraint(e, ComparisonOp::Le, budget.max(0.0));
        }
        for &(i, floor) in &self.soc_floors {
            p.add_constraint([(vars[i].soc, 1.0)], ComparisonOp::Ge, floor);
        }
        if self.exclusive {
            let big_m = self.big_m();
            for v in &vars {
                let x = p.add_binary_var(0.0);
                let y = p.add_binary_var(0.0);
                // pc <= p_max (1 - x), pd <= p_max x
                p.add_constraint([(v.pc, 1.0), (x, b.p_max)], ComparisonOp::Le, b.p_max);
                p.add_constraint([(v.pd, 1.0), (x, -b.p_max)], ComparisonOp::Le, 0.0);
                p.add_constraint([(v.eb, 1.0), (y, big_m)], ComparisonOp::Le, big_m);
                p.add_constraint([(v.es, 1.0), (y, -big_m)], ComparisonOp::Le, 0.0);
            }
        }

        let values = match solver::solve(&p, self.time_limit)? {
            Outcome::Solved(values) => values,
            Outcome::Infeasible => return Err(Error::Infeasible(self.diagnose())),
        };
        let mut s = Schedule::idle(axis, self.soc0);
        for (i, v) in vars.iter().enumerate() {
            s.p_charge[i] = values[v.pc.idx()].clamp(0.0, b.p_max);
            s.p_discharge[i] = values[v.pd.idx()].clamp(0.0, b.p_max);
            s.e_buy[i] = values[v.eb.idx()].clamp(0.0, e_max);
            s.e_sell[i] = values[v.es.idx()].clamp(0.0, e_max);
            s.soc[i + 1] = values[v.soc.idx()].clamp(b.soc_min, b.soc_max);
        }
        s.objective_value = raw_bill(&s.e_buy, &s.e_sell, self.buy, self.sell);
        Ok(s)
    }

    /// Bound on per-step import or export energy.
    fn big_m(&self) -> f64 {
        if let Some(e) = self.battery.e_max {
            return e;
        }
        let worst = self
            .gen
            .iter()
            .zip(self.demand)
            .map(|(g, d)| (g - d).abs())
            .fold(0.0, f64::max);
        (self.battery.p_max + worst) * self.dt
    }

    /// Names the constraint family that makes the problem infeasible.
    fn diagnose(&self) -> ConstraintFamily {
        let b = self.battery;
        let step_gain = b.p_max * b.eta_c * self.dt;
        for &(i, floor) in &self.soc_floors {
            if floor > b.soc_max || floor > self.soc0 + step_gain * (i + 1) as f64 + 1e-9 {
                return ConstraintFamily::EndOfDaySoc;
            }
            let capped: f64 = self
                .cycle_blocks
                .iter()
                .filter(|(r, _)| r.start <= i)
                .map(|(r, budget)| {
                    let steps = (r.end.min(i + 1) - r.start) as f64;
                    budget.max(0.0).min(step_gain * steps)
                })
                .sum();
            if floor > self.soc0 + capped + 1e-9 {
                return ConstraintFamily::CycleCap;
            }
        }
        if let Some(e_max) = b.e_max {
            let slack = e_max + b.p_max * self.dt;
            if self
                .gen
                .iter()
                .zip(self.demand)
                .any(|(g, d)| (g - d).abs() * self.dt > slack + 1e-9)
            {
                return ConstraintFamily::PowerBalance;
            }
        }
        ConstraintFamily::Unknown
    }
}

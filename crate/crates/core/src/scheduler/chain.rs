//! Year-long simulation by chaining daily solves through the SoC.

use log::warn;

use super::{
    bill, check_inputs, greedy_schedule, lp_day_schedule, milp_day_schedule, rolling_horizon_schedule,
    BatterySpec, Mode, Schedule, SolveOptions,
};
use crate::error::Result;
use crate::tariffs::TariffSchedule;
use crate::timeseries::{TimeSeries, STEPS_PER_DAY};

/// Runs the controller selected by `opts.mode` over the whole series.
///
/// Daily LP and MILP solves start from the previous day's final SoC, day one
/// from `battery.soc_initial`. A trailing partial day is dropped with a
/// warning; a series shorter than one day is solved as a single horizon.
/// `objective_value` is the bill of the joined schedule.
pub fn chain_year(
    gen: &TimeSeries,
    demand: &TimeSeries,
    tariff: &TariffSchedule,
    battery: &BatterySpec,
    opts: &SolveOptions,
) -> Result<Schedule> {
    check_inputs(gen, demand, Some(tariff), battery)?;
    opts.validate()?;
    let n = gen.len();
    let (gen, demand, tariff) = if n > STEPS_PER_DAY && !n.is_multiple_of(STEPS_PER_DAY) {
        let keep = n - n % STEPS_PER_DAY;
        warn!("dropping {} trailing steps that do not fill a day", n - keep);
        (gen.slice(0..keep)?, demand.slice(0..keep)?, tariff.slice(0..keep)?)
    } else {
        (gen.clone(), demand.clone(), tariff.clone())
    };
    let n = gen.len();

    let mut out = match opts.mode {
        Mode::Greedy => greedy_schedule(&gen, &demand, battery)?,
        Mode::Rolling => rolling_horizon_schedule(&gen, &demand, &tariff, battery, opts)?,
        Mode::Lp | Mode::Milp => {
            let solve = if opts.mode == Mode::Lp {
                lp_day_schedule
            } else {
                milp_day_schedule
            };
            let mut joined: Option<Schedule> = None;
            let mut soc = battery.soc_initial;
            for (day, start) in (0..n).step_by(STEPS_PER_DAY).enumerate() {
                let r = start..(start + STEPS_PER_DAY).min(n);
                let b = BatterySpec {
                    soc_initial: soc,
                    ..*battery
                };
                let s = solve(
                    &gen.slice(r.clone())?,
                    &demand.slice(r.clone())?,
                    &tariff.slice(r)?,
                    &b,
                    opts,
                )
                .map_err(|e| e.on_day(day))?;
                soc = s.final_soc();
                match joined.as_mut() {
                    Some(j) => j.append(s)?,
                    None => joined = Some(s),
                }
            }
            joined.unwrap_or_else(|| Schedule::idle(gen.axis(), battery.soc_initial))
        }
    };
    out.objective_value = bill(&out, &tariff)?;
    Ok(out)
}

//! Receding-horizon control: re-plan every few steps over a day of lookahead
//! and commit only the first steps of each plan.

use super::lp::{day_blocks, eod_floors, CommunityModel};
use super::{check_inputs, raw_bill, BatterySpec, Schedule, SolveOptions};
use crate::error::Result;
use crate::tariffs::TariffSchedule;
use crate::timeseries::{Axis, TimeSeries, STEPS_PER_DAY};

/// Rolling-horizon LP over the whole series.
///
/// Each window spans `horizon_steps` (truncated at the series end) and starts
/// from the committed SoC. The daily cycle cap is charged against calendar
/// days: a window may only use what the committed steps of each day have left.
/// The end-of-day floor applies at every day end inside a window, and L2
/// values the SoC at the window end.
pub fn rolling_horizon_schedule(
    gen: &TimeSeries,
    demand: &TimeSeries,
    tariff: &TariffSchedule,
    battery: &BatterySpec,
    opts: &SolveOptions,
) -> Result<Schedule> {
    check_inputs(gen, demand, Some(tariff), battery)?;
    opts.validate()?;
    let n = gen.len();
    let dt = gen.step_hours();
    let budget = battery.daily_throughput_budget();
    let mut used = vec![0.0; n.div_ceil(STEPS_PER_DAY)];
    let mut out = Schedule::idle(gen.axis(), battery.soc_initial);
    let mut soc = battery.soc_initial;
    let mut start = 0;
    while start < n {
        let end = (start + opts.horizon_steps).min(n);
        let cycle_blocks = match budget {
            Some(b) => day_blocks(start..end, 0)
                .into_iter()
                .map(|r| {
                    let day = (start + r.start) / STEPS_PER_DAY;
                    (r, b - used[day])
                })
                .collect(),
            None => Vec::new(),
        };
        let model = CommunityModel {
            gen: &gen.values()[start..end],
            demand: &demand.values()[start..end],
            buy: &tariff.buy.values()[start..end],
            sell: &tariff.sell.values()[start..end],
            dt,
            soc0: soc,
            battery,
            use_l1: opts.use_l1,
            use_l2: opts.use_l2,
            exclusive: false,
            soc_floors: eod_floors(start..end, n, opts.eod_min_frac * battery.soc_max),
            cycle_blocks,
            time_limit: None,
        };
        let axis = Axis {
            start: gen.timestamp(start),
            step: gen.step(),
            len: end - start,
        };
        let plan = model.solve(axis)?;
        let commit = opts.rolling_period_steps.min(end - start);
        for k in 0..commit {
            let i = start + k;
            out.p_charge[i] = plan.p_charge[k];
            out.p_discharge[i] = plan.p_discharge[k];
            out.e_buy[i] = plan.e_buy[k];
            out.e_sell[i] = plan.e_sell[k];
            out.soc[i + 1] = plan.soc[k + 1];
            used[i / STEPS_PER_DAY] +=
                (battery.eta_c * plan.p_charge[k] + plan.p_discharge[k] / battery.eta_d) * dt;
        }
        soc = plan.soc[commit];
        start += commit;
    }
    out.objective_value = raw_bill(&out.e_buy, &out.e_sell, tariff.buy.values(), tariff.sell.values());
    Ok(out)
}

//! Reactive battery-first control: store surplus before exporting, cover
//! deficits from the battery before importing.

use super::{check_inputs, BatterySpec, Schedule};
use crate::error::Result;
use crate::timeseries::{TimeSeries, STEPS_PER_DAY};

/// Greedy schedule over the whole series. Decisions ignore prices, so
/// `objective_value` is left at zero; price the result with [`super::bill`].
///
/// SoC movement per step is further limited by what is left of the daily
/// throughput budget, so the schedule respects the same cycle cap as the
/// optimizing controllers.
pub fn greedy_schedule(
    gen: &TimeSeries,
    demand: &TimeSeries,
    battery: &BatterySpec,
) -> Result<Schedule> {
    check_inputs(gen, demand, None, battery)?;
    let mut s = Schedule::idle(gen.axis(), battery.soc_initial);
    greedy_flows(gen.values(), demand.values(), gen.step_hours(), battery, &mut s);
    Ok(s)
}

fn greedy_flows(gen: &[f64], demand: &[f64], dt: f64, b: &BatterySpec, out: &mut Schedule) {
    let budget = b.daily_throughput_budget().unwrap_or(0.0);
    let mut used = 0.0;
    let mut soc = b.soc_initial;
    for i in 0..gen.len() {
        if i % STEPS_PER_DAY == 0 {
            used = 0.0;
        }
        let remaining = (budget - used).max(0.0);
        let net = gen[i] - demand[i];
        if net >= 0.0 {
            let p = net.min(b.p_max);
            let change = (p * dt * b.eta_c).min(b.soc_max - soc).min(remaining).max(0.0);
            soc += change;
            used += change;
            out.p_charge[i] = change / (dt * b.eta_c);
            out.e_sell[i] = (net * dt - change / b.eta_c).max(0.0);
        } else {
            let deficit = -net;
            let p = deficit.min(b.p_max);
            let change = (p * dt / b.eta_d).min(soc - b.soc_min).min(remaining).max(0.0);
            soc -= change;
            used += change;
            out.p_discharge[i] = change * b.eta_d / dt;
            out.e_buy[i] = (deficit * dt - change * b.eta_d).max(0.0);
        }
        out.soc[i + 1] = soc;
    }
}

//! Exhaustive dynamic program over a discretized SoC grid. Only meant for tiny
//! instances, as an independent check on the LP.

use super::{check_inputs, BatterySpec};
use crate::error::{Error, Result};
use crate::tariffs::TariffSchedule;
use crate::timeseries::TimeSeries;

pub const MAX_ORACLE_STEPS: usize = 12;
pub const MAX_ORACLE_GRID: usize = 201;

const FEAS_TOL: f64 = 1e-9;

/// Minimal bill over SoC trajectories on a uniform grid of
/// `soc_grid_points` levels between `soc_min` and `soc_max`. No steering
/// terms and no cycle cap. `soc_initial` must lie on the grid.
pub fn dp_oracle(
    gen: &TimeSeries,
    demand: &TimeSeries,
    tariff: &TariffSchedule,
    battery: &BatterySpec,
    soc_grid_points: usize,
) -> Result<f64> {
    oracle(gen, demand, tariff, battery, soc_grid_points, false)
}

/// [`dp_oracle`] with the daily cycle cap tracked as extra state. The budget
/// is rounded down to whole grid steps.
pub fn dp_oracle_with_cycle_cap(
    gen: &TimeSeries,
    demand: &TimeSeries,
    tariff: &TariffSchedule,
    battery: &BatterySpec,
    soc_grid_points: usize,
) -> Result<f64> {
    oracle(gen, demand, tariff, battery, soc_grid_points, true)
}

fn oracle(
    gen: &TimeSeries,
    demand: &TimeSeries,
    tariff: &TariffSchedule,
    b: &BatterySpec,
    points: usize,
    cycle_cap: bool,
) -> Result<f64> {
    check_inputs(gen, demand, Some(tariff), b)?;
    let t = gen.len();
    if t > MAX_ORACLE_STEPS || points > MAX_ORACLE_GRID {
        return Err(Error::TooLarge(format!(
            "oracle handles at most {MAX_ORACLE_STEPS} steps and {MAX_ORACLE_GRID} grid points, got {t} and {points}"
        )));
    }
    if points < 2 {
        return Err(Error::Precondition("the SoC grid needs at least two points".into()));
    }
    let dt = gen.step_hours();
    let width = b.width();
    let (n, h) = if width > 0.0 {
        (points, width / (points - 1) as f64)
    } else {
        (1, 0.0)
    };
    let start = if h > 0.0 {
        let pos = (b.soc_initial - b.soc_min) / h;
        if (pos - pos.round()).abs() > 1e-9 {
            return Err(Error::Precondition("soc_initial is not on the oracle grid".into()));
        }
        pos.round() as usize
    } else {
        0
    };
    // Throughput is counted in grid steps of SoC movement.
    let units = if cycle_cap && h > 0.0 {
        (2.0 * b.lambda_max_cycles * width / h + 1e-9).floor() as usize
    } else {
        0
    };
    let layers = units + 1;
    let e_max = b.e_max.unwrap_or(f64::INFINITY);

    let idx = |j: usize, u: usize| j * layers + u;
    let mut cost = vec![f64::INFINITY; n * layers];
    cost[idx(start, 0)] = 0.0;
    for i in 0..t {
        let (g, d) = (gen.values()[i], demand.values()[i]);
        let (tb, ts) = (tariff.buy.values()[i], tariff.sell.values()[i]);
        let stage = |delta: f64| -> Option<f64> {
            let (pc, pd) = if delta >= 0.0 {
                (delta / (b.eta_c * dt), 0.0)
            } else {
                (0.0, -delta * b.eta_d / dt)
            };
            if pc > b.p_max + FEAS_TOL || pd > b.p_max + FEAS_TOL {
                return None;
            }
            let net = (pc - pd - g + d) * dt;
            if net.abs() > e_max + FEAS_TOL {
                return None;
            }
            Some(if net >= 0.0 { tb * net } else { ts * net })
        };
        let mut next = vec![f64::INFINITY; n * layers];
        for j in 0..n {
            for u in 0..layers {
                let c = cost[idx(j, u)];
                if !c.is_finite() {
                    continue;
                }
                for k in 0..n {
                    let moved = j.abs_diff(k);
                    let u2 = if cycle_cap { u + moved } else { 0 };
                    if u2 >= layers {
                        continue;
                    }
                    if let Some(sc) = stage((k as f64 - j as f64) * h) {
                        let slot = &mut next[idx(k, u2)];
                        *slot = slot.min(c + sc);
                    }
                }
            }
        }
        cost = next;
    }
    cost.into_iter()
        .filter(|c| c.is_finite())
        .reduce(f64::min)
        .ok_or_else(|| Error::Precondition("no feasible trajectory on the oracle grid".into()))
}

use std::fs::File;
use std::path::Path;

use chrono::{DateTime, TimeDelta, Utc};

use super::BatterySpec;
use crate::error::{Error, Result};
use crate::tariffs::TariffSchedule;
use crate::timeseries::{format_timestamp, parse_timestamp, Axis, STEPS_PER_DAY};

/// Absolute tolerance (kWh, kW) for schedule invariant checks.
pub const VALIDATION_TOL: f64 = 1e-6;

/// Output of every controller: SoC at each step boundary plus per-step flows.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub start: DateTime<Utc>,
    pub step: TimeDelta,
    /// kWh, `len() + 1` entries; `soc[i]` is the state before step `i`.
    pub soc: Vec<f64>,
    pub p_charge: Vec<f64>,
    pub p_discharge: Vec<f64>,
    pub e_buy: Vec<f64>,
    pub e_sell: Vec<f64>,
    /// Bill for community schedules, profit for market schedules (€).
    /// Steering terms are never included.
    pub objective_value: f64,
}

impl Schedule {
    /// All-zero flows holding `soc` constant.
    pub fn idle(axis: Axis, soc: f64) -> Self {
        Schedule {
            start: axis.start,
            step: axis.step,
            soc: vec![soc; axis.len + 1],
            p_charge: vec![0.0; axis.len],
            p_discharge: vec![0.0; axis.len],
            e_buy: vec![0.0; axis.len],
            e_sell: vec![0.0; axis.len],
            objective_value: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.p_charge.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_charge.is_empty()
    }

    pub fn step_hours(&self) -> f64 {
        self.step.num_seconds() as f64 / 3600.0
    }

    pub fn axis(&self) -> Axis {
        Axis {
            start: self.start,
            step: self.step,
            len: self.len(),
        }
    }

    pub fn final_soc(&self) -> f64 {
        *self.soc.last().expect("soc has len + 1 entries")
    }

    /// Σ (p_charge + p_discharge), kW summed over steps.
    pub fn power_throughput(&self) -> f64 {
        self.p_charge.iter().zip(&self.p_discharge).map(|(c, d)| c + d).sum()
    }

    /// Appends `next`, which must start where `self` ends. Objectives add up.
    pub fn append(&mut self, next: Schedule) -> Result<()> {
        if next.step != self.step {
            return Err(Error::Alignment("cannot join schedules with different steps".into()));
        }
        if next.start != self.axis().timestamp(self.len()) {
            return Err(Error::Alignment("schedules are not contiguous".into()));
        }
        if (next.soc[0] - self.final_soc()).abs() > VALIDATION_TOL {
            return Err(Error::Alignment(format!(
                "SoC discontinuity at join: {} vs {}",
                self.final_soc(),
                next.soc[0]
            )));
        }
        self.soc.extend_from_slice(&next.soc[1..]);
        self.p_charge.extend(next.p_charge);
        self.p_discharge.extend(next.p_discharge);
        self.e_buy.extend(next.e_buy);
        self.e_sell.extend(next.e_sell);
        self.objective_value += next.objective_value;
        Ok(())
    }

    /// First `n` steps.
    pub fn truncated(&self, n: usize) -> Schedule {
        Schedule {
            start: self.start,
            step: self.step,
            soc: self.soc[..=n].to_vec(),
            p_charge: self.p_charge[..n].to_vec(),
            p_discharge: self.p_discharge[..n].to_vec(),
            e_buy: self.e_buy[..n].to_vec(),
            e_sell: self.e_sell[..n].to_vec(),
            objective_value: self.objective_value,
        }
    }

    /// Checks the community invariants: bounds, SoC recursion with charge and
    /// discharge efficiencies, energy balance and the per-day cycle cap.
    pub fn validate_community(&self, gen_kw: &[f64], demand_kw: &[f64], battery: &BatterySpec) -> Result<()> {
        if gen_kw.len() != self.len() || demand_kw.len() != self.len() {
            return Err(Error::Alignment("schedule and inputs differ in length".into()));
        }
        self.check_shape()?;
        self.check_bounds(battery)?;
        let dt = self.step_hours();
        for i in 0..self.len() {
            let expect = self.soc[i] + battery.eta_c * self.p_charge[i] * dt - self.p_discharge[i] / battery.eta_d * dt;
            check(i, "SoC recursion", self.soc[i + 1], expect)?;
            let lhs = self.p_charge[i] - self.p_discharge[i];
            let rhs = gen_kw[i] - demand_kw[i] + (self.e_buy[i] - self.e_sell[i]) / dt;
            check(i, "power balance", lhs, rhs)?;
        }
        self.check_cycle_cap(battery, |c, d| c * battery.eta_c + d / battery.eta_d)
    }

    /// Market invariants: bounds, round-trip recursion, flows tied to powers,
    /// cycle cap and the optional end-of-day floor.
    pub fn validate_market(&self, battery: &BatterySpec) -> Result<()> {
        self.check_shape()?;
        self.check_bounds(battery)?;
        let dt = self.step_hours();
        for i in 0..self.len() {
            let expect = self.soc[i] + battery.eta_cd * self.p_charge[i] * dt - self.p_discharge[i] * dt;
            check(i, "SoC recursion", self.soc[i + 1], expect)?;
            check(i, "import equals charge", self.e_buy[i], self.p_charge[i] * dt)?;
            check(i, "export equals discharge", self.e_sell[i], self.p_discharge[i] * dt)?;
        }
        self.check_cycle_cap(battery, |c, d| c * battery.eta_cd + d)
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.len();
        if self.soc.len() != n + 1 || self.p_discharge.len() != n || self.e_buy.len() != n || self.e_sell.len() != n {
            return Err(Error::Precondition("schedule vectors have inconsistent lengths".into()));
        }
        Ok(())
    }

    fn check_bounds(&self, battery: &BatterySpec) -> Result<()> {
        let tol = VALIDATION_TOL;
        for (i, s) in self.soc.iter().enumerate() {
            if *s < battery.soc_min - tol || *s > battery.soc_max + tol {
                return Err(violation(i, format!("SoC {s} outside [{}, {}]", battery.soc_min, battery.soc_max)));
            }
        }
        let e_max = battery.e_max.unwrap_or(f64::INFINITY);
        for i in 0..self.len() {
            for (name, v, hi) in [
                ("p_charge", self.p_charge[i], battery.p_max),
                ("p_discharge", self.p_discharge[i], battery.p_max),
                ("e_buy", self.e_buy[i], e_max),
                ("e_sell", self.e_sell[i], e_max),
            ] {
                if v < -tol || v > hi + tol {
                    return Err(violation(i, format!("{name} {v} outside [0, {hi}]")));
                }
            }
        }
        Ok(())
    }

    fn check_cycle_cap(&self, battery: &BatterySpec, weight: impl Fn(f64, f64) -> f64) -> Result<()> {
        let width = battery.width();
        if width <= 0.0 {
            return Ok(());
        }
        let dt = self.step_hours();
        for (day, chunk) in (0..self.len()).collect::<Vec<_>>().chunks(STEPS_PER_DAY).enumerate() {
            let thr: f64 = chunk
                .iter()
                .map(|&i| weight(self.p_charge[i], self.p_discharge[i]) * dt)
                .sum();
            let cycles = thr / (2.0 * width);
            if cycles > battery.lambda_max_cycles + VALIDATION_TOL {
                return Err(Error::Precondition(format!(
                    "day {day}: {cycles} cycles exceed the cap of {}",
                    battery.lambda_max_cycles
                )));
            }
        }
        Ok(())
    }

    /// `step,timestamp,soc_kwh,p_charge_kw,p_discharge_kw,e_buy_kwh,e_sell_kwh`;
    /// `soc_kwh` is the state at the end of the step.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(SCHEDULE_HEADER)?;
        for i in 0..self.len() {
            w.write_record([
                i.to_string(),
                format_timestamp(self.axis().timestamp(i)),
                self.soc[i + 1].to_string(),
                self.p_charge[i].to_string(),
                self.p_discharge[i].to_string(),
                self.e_buy[i].to_string(),
                self.e_sell[i].to_string(),
            ])?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(())
    }

    /// Reads a schedule written by [`Schedule::write_csv`]. The file does not
    /// carry the state before the first step, so it is passed in.
    pub fn read_csv(path: &Path, soc_initial: f64) -> Result<Schedule> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let mut r = csv::Reader::from_path(path)?;
        let mut rows: Vec<(DateTime<Utc>, [f64; 5])> = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let row = k + 2;
            let rec = rec?;
            let err = |message: String| Error::Load {
                path: path.to_path_buf(),
                row,
                message,
            };
            let ts = parse_timestamp(rec.get(1).unwrap_or("")).map_err(err)?;
            let mut vals = [0.0; 5];
            for (j, v) in vals.iter_mut().enumerate() {
                let s = rec.get(j + 2).unwrap_or("");
                *v = s.parse().map_err(|_| Error::Load {
                    path: path.to_path_buf(),
                    row,
                    message: format!("non-numeric value `{s}`"),
                })?;
            }
            rows.push((ts, vals));
        }
        let start = rows.first().map(|r| r.0).ok_or_else(|| Error::Load {
            path: path.to_path_buf(),
            row: 1,
            message: "no data rows".into(),
        })?;
        let step = if rows.len() > 1 { rows[1].0 - rows[0].0 } else { TimeDelta::minutes(30) };
        let mut s = Schedule::idle(Axis { start, step, len: rows.len() }, soc_initial);
        for (i, (_, v)) in rows.into_iter().enumerate() {
            s.soc[i + 1] = v[0];
            s.p_charge[i] = v[1];
            s.p_discharge[i] = v[2];
            s.e_buy[i] = v[3];
            s.e_sell[i] = v[4];
        }
        Ok(s)
    }
}

pub const SCHEDULE_HEADER: [&str; 7] = [
    "step",
    "timestamp",
    "soc_kwh",
    "p_charge_kw",
    "p_discharge_kw",
    "e_buy_kwh",
    "e_sell_kwh",
];

fn check(i: usize, what: &str, got: f64, expect: f64) -> Result<()> {
    if (got - expect).abs() > VALIDATION_TOL {
        Err(violation(i, format!("{what}: {got} vs {expect}")))
    } else {
        Ok(())
    }
}

fn violation(i: usize, message: String) -> Error {
    Error::Precondition(format!("schedule invariant broken at step {i}: {message}"))
}

/// Σ τ_buy·e_buy − τ_sell·e_sell. Steering terms and asset costs excluded.
pub fn bill(schedule: &Schedule, tariff: &TariffSchedule) -> Result<f64> {
    if tariff.len() != schedule.len() {
        return Err(Error::Alignment(format!(
            "tariff has {} steps, schedule {}",
            tariff.len(),
            schedule.len()
        )));
    }
    Ok(raw_bill(&schedule.e_buy, &schedule.e_sell, tariff.buy.values(), tariff.sell.values()))
}

pub(crate) fn raw_bill(e_buy: &[f64], e_sell: &[f64], buy: &[f64], sell: &[f64]) -> f64 {
    e_buy
        .iter()
        .zip(e_sell)
        .zip(buy.iter().zip(sell))
        .map(|((b, s), (tb, ts))| tb * b - ts * s)
        .sum()
}

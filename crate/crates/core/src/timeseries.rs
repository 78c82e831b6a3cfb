//! Uniformly sampled time series, CSV ingestion, gap filling and resampling.
//!
//! Working series are half-hourly. Raw wind and day-ahead inputs arrive hourly
//! and are brought onto the half-hourly grid by [`fill_and_resample`] and
//! [`day_ahead_to_halfhourly`].

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::NaturalSpline;

/// Working resolution, hours per step.
pub const HALF_HOUR: f64 = 0.5;
pub const STEPS_PER_DAY: usize = 48;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Kw,
    /// Energy per step.
    Kwh,
    MetersPerSecond,
    EurPerKwh,
    EurPerMwh,
}

impl Unit {
    fn non_negative(self) -> bool {
        matches!(self, Unit::Kw | Unit::Kwh | Unit::MetersPerSecond)
    }
}

/// Start, spacing and length of a uniform time grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Axis {
    pub start: DateTime<Utc>,
    pub step: TimeDelta,
    pub len: usize,
}

impl Axis {
    pub fn half_hourly(start: DateTime<Utc>, len: usize) -> Self {
        Axis {
            start,
            step: TimeDelta::minutes(30),
            len,
        }
    }

    pub fn step_hours(&self) -> f64 {
        self.step.num_seconds() as f64 / 3600.0
    }

    pub fn timestamp(&self, i: usize) -> DateTime<Utc> {
        self.start + self.step * i as i32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    start: DateTime<Utc>,
    step: TimeDelta,
    values: Vec<f64>,
    unit: Unit,
    /// Indices with no observation. Their entry in `values` is NaN.
    missing: BTreeSet<usize>,
}

impl TimeSeries {
    pub fn new(start: DateTime<Utc>, step: TimeDelta, values: Vec<f64>, unit: Unit) -> Result<Self> {
        Self::with_missing(start, step, values, unit, BTreeSet::new())
    }

    pub fn from_axis(axis: Axis, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if values.len() != axis.len {
            return Err(Error::Alignment(format!(
                "axis has {} steps, got {} values",
                axis.len,
                values.len()
            )));
        }
        Self::new(axis.start, axis.step, values, unit)
    }

    pub fn with_missing(
        start: DateTime<Utc>,
        step: TimeDelta,
        mut values: Vec<f64>,
        unit: Unit,
        missing: BTreeSet<usize>,
    ) -> Result<Self> {
        if step <= TimeDelta::zero() {
            return Err(Error::Precondition(format!("non-positive step {step}")));
        }
        if let Some(&i) = missing.iter().next_back() {
            if i >= values.len() {
                return Err(Error::Precondition(format!("missing index {i} out of range")));
            }
        }
        for (i, v) in values.iter_mut().enumerate() {
            if missing.contains(&i) {
                *v = f64::NAN;
                continue;
            }
            if !v.is_finite() {
                return Err(Error::Precondition(format!("non-finite value at index {i}")));
            }
            if unit.non_negative() && *v < 0.0 {
                return Err(Error::Precondition(format!(
                    "negative value {v} at index {i} in a {unit:?} series"
                )));
            }
        }
        Ok(TimeSeries {
            start,
            step,
            values,
            unit,
            missing,
        })
    }

    pub fn constant(axis: Axis, value: f64, unit: Unit) -> Result<Self> {
        Self::from_axis(axis, vec![value; axis.len], unit)
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn step(&self) -> TimeDelta {
        self.step
    }

    pub fn step_hours(&self) -> f64 {
        self.step.num_seconds() as f64 / 3600.0
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn missing(&self) -> &BTreeSet<usize> {
        &self.missing
    }

    pub fn has_gaps(&self) -> bool {
        !self.missing.is_empty()
    }

    pub fn axis(&self) -> Axis {
        Axis {
            start: self.start,
            step: self.step,
            len: self.values.len(),
        }
    }

    pub fn timestamp(&self, i: usize) -> DateTime<Utc> {
        self.axis().timestamp(i)
    }

    pub fn is_aligned_with(&self, other: &TimeSeries) -> bool {
        self.axis() == other.axis()
    }

    pub fn ensure_aligned(&self, other: &TimeSeries, what: &str) -> Result<()> {
        if self.is_aligned_with(other) {
            Ok(())
        } else {
            Err(Error::Alignment(format!(
                "{what}: series differ in start, step or length ({:?} vs {:?})",
                self.axis(),
                other.axis()
            )))
        }
    }

    pub fn ensure_gap_free(&self, what: &str) -> Result<()> {
        if self.has_gaps() {
            Err(Error::Precondition(format!(
                "{what}: series has {} missing values",
                self.missing.len()
            )))
        } else {
            Ok(())
        }
    }

    /// Same grid and unit, new values.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<TimeSeries> {
        self.ensure_gap_free("map")?;
        TimeSeries::new(self.start, self.step, self.values.iter().map(|&v| f(v)).collect(), self.unit)
    }

    pub fn scaled(&self, factor: f64) -> Result<TimeSeries> {
        self.map(|v| v * factor)
    }

    pub fn with_unit(mut self, unit: Unit) -> Result<TimeSeries> {
        self.unit = unit;
        TimeSeries::with_missing(self.start, self.step, self.values, unit, self.missing)
    }

    /// Sub-series over `range` of step indices.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<TimeSeries> {
        if range.end > self.len() || range.start > range.end {
            return Err(Error::Precondition(format!(
                "slice {range:?} out of bounds for length {}",
                self.len()
            )));
        }
        let missing = self
            .missing
            .range(range.clone())
            .map(|i| i - range.start)
            .collect();
        TimeSeries::with_missing(
            self.timestamp(range.start),
            self.step,
            self.values[range].to_vec(),
            self.unit,
            missing,
        )
    }

    /// Pads to `len` by repeating the final value, or truncates.
    pub fn hold_to_len(&self, len: usize) -> Result<TimeSeries> {
        self.ensure_gap_free("hold_to_len")?;
        let last = *self
            .values
            .last()
            .ok_or_else(|| Error::Precondition("cannot extend an empty series".into()))?;
        let mut values = self.values.clone();
        values.resize(len, last);
        TimeSeries::new(self.start, self.step, values, self.unit)
    }

    /// Energy in kWh summed over the series; kW series are integrated over the step.
    pub fn total_energy_kwh(&self) -> Result<f64> {
        self.ensure_gap_free("total_energy_kwh")?;
        let sum: f64 = self.values.iter().sum();
        match self.unit {
            Unit::Kwh => Ok(sum),
            Unit::Kw => Ok(sum * self.step_hours()),
            u => Err(Error::Precondition(format!("{u:?} series carries no energy"))),
        }
    }

    /// kWh-per-step series converted to average power in kW.
    pub fn to_power(&self) -> Result<TimeSeries> {
        match self.unit {
            Unit::Kw => Ok(self.clone()),
            Unit::Kwh => self.scaled(1.0 / self.step_hours())?.with_unit(Unit::Kw),
            u => Err(Error::Precondition(format!("cannot convert {u:?} to power"))),
        }
    }

    /// Writes `timestamp,<column>` rows. Gap steps are omitted, which is how
    /// the loaders recognize them.
    pub fn write_csv(&self, path: &Path, column: &str) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["timestamp", column])?;
        for (i, v) in self.values.iter().enumerate() {
            if self.missing.contains(&i) {
                continue;
            }
            w.write_record([format_timestamp(self.timestamp(i)), v.to_string()])?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(())
    }
}

/// Per-household demand, kWh per half-hour, all members on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdDemandSet {
    households: BTreeMap<String, TimeSeries>,
}

impl HouseholdDemandSet {
    pub fn new(households: BTreeMap<String, TimeSeries>) -> Result<Self> {
        let mut iter = households.values();
        if let Some(first) = iter.next() {
            for other in iter {
                first.ensure_aligned(other, "household demand set")?;
            }
        }
        Ok(HouseholdDemandSet { households })
    }

    pub fn count(&self) -> usize {
        self.households.len()
    }

    pub fn households(&self) -> &BTreeMap<String, TimeSeries> {
        &self.households
    }

    pub fn get(&self, id: &str) -> Option<&TimeSeries> {
        self.households.get(id)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["timestamp", "household_id", "demand_kwh"])?;
        let Some(first) = self.households.values().next() else {
            return Ok(());
        };
        for i in 0..first.len() {
            let ts = format_timestamp(first.timestamp(i));
            for (id, series) in &self.households {
                series.ensure_gap_free("write demand csv")?;
                w.write_record([ts.as_str(), id.as_str(), &series.values()[i].to_string()])?;
            }
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(())
    }
}

/// Element-wise sum over households.
pub fn aggregate_households(set: &HouseholdDemandSet) -> Result<TimeSeries> {
    let mut iter = set.households.values();
    let first = iter
        .next()
        .ok_or_else(|| Error::Precondition("empty household set".into()))?;
    first.ensure_gap_free("aggregate_households")?;
    let mut total = first.values().to_vec();
    for series in iter {
        first.ensure_aligned(series, "aggregate_households")?;
        series.ensure_gap_free("aggregate_households")?;
        for (t, v) in total.iter_mut().zip(series.values()) {
            *t += v;
        }
    }
    TimeSeries::new(first.start(), first.step(), total, first.unit())
}

/// Two-pass natural cubic spline: fill gaps on the native grid, then move an
/// hourly series onto the half-hourly grid.
///
/// An hourly series of `n` points yields `2n - 1` half-hourly points spanning
/// the same interval. Half-hourly input only has its gaps filled. Known
/// values are reproduced exactly; series with non-negative units are clamped
/// at zero.
pub fn fill_and_resample(ts: &TimeSeries) -> Result<TimeSeries> {
    let filled = fill_gaps(ts)?;
    let half = TimeDelta::minutes(30);
    if filled.step() == half {
        return Ok(filled);
    }
    if filled.step() != TimeDelta::hours(1) {
        return Err(Error::Precondition(format!(
            "resampling expects an hourly or half-hourly series, got step {}",
            filled.step()
        )));
    }
    let n = filled.len();
    let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let spline = NaturalSpline::new(&x, filled.values())?;
    let clamp = filled.unit().non_negative();
    let values = (0..2 * n - 1)
        .map(|j| {
            let v = if j % 2 == 0 {
                filled.values()[j / 2]
            } else {
                spline.eval(j as f64 / 2.0)
            };
            if clamp {
                v.max(0.0)
            } else {
                v
            }
        })
        .collect();
    TimeSeries::new(filled.start(), half, values, filled.unit())
}

fn fill_gaps(ts: &TimeSeries) -> Result<TimeSeries> {
    if !ts.has_gaps() {
        return Ok(ts.clone());
    }
    let (x, y): (Vec<f64>, Vec<f64>) = ts
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| !ts.missing().contains(i))
        .map(|(i, &v)| (i as f64, v))
        .unzip();
    if x.len() < 4 {
        return Err(Error::Interpolation(format!(
            "need at least 4 known points, got {}",
            x.len()
        )));
    }
    let spline = NaturalSpline::new(&x, &y)?;
    let clamp = ts.unit().non_negative();
    let values = ts
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if ts.missing().contains(&i) {
                let s = spline.eval(i as f64);
                if clamp {
                    s.max(0.0)
                } else {
                    s
                }
            } else {
                v
            }
        })
        .collect();
    TimeSeries::new(ts.start(), ts.step(), values, ts.unit())
}

/// Hourly €/MWh day-ahead prices to half-hourly €/kWh, each hourly price on
/// both of its half-hour steps. Gaps are spline-filled on the hourly grid.
pub fn day_ahead_to_halfhourly(prices: &TimeSeries) -> Result<TimeSeries> {
    let filled = fill_gaps(prices)?;
    let scale = match filled.unit() {
        Unit::EurPerMwh => 1e-3,
        Unit::EurPerKwh => 1.0,
        u => return Err(Error::Precondition(format!("{u:?} is not a price unit"))),
    };
    let half = TimeDelta::minutes(30);
    let values: Vec<f64> = if filled.step() == half {
        filled.values().iter().map(|v| v * scale).collect()
    } else if filled.step() == TimeDelta::hours(1) {
        filled
            .values()
            .iter()
            .flat_map(|v| [v * scale, v * scale])
            .collect()
    } else {
        return Err(Error::Precondition(format!(
            "day-ahead series must be hourly or half-hourly, got step {}",
            filled.step()
        )));
    };
    TimeSeries::new(filled.start(), half, values, Unit::EurPerKwh)
}

/// Input CSV layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    /// `timestamp,household_id,demand_kwh`
    DemandLong,
    /// `timestamp,wind_speed_ms`
    Wind,
    /// `timestamp,price_eur_per_mwh`
    DayAhead,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Series(TimeSeries),
    Households(HouseholdDemandSet),
}

pub fn load_csv(path: &Path, schema: Schema) -> Result<Loaded> {
    match schema {
        Schema::DemandLong => load_demand_csv(path).map(Loaded::Households),
        Schema::Wind => {
            load_series_csv(path, "wind_speed_ms", Unit::MetersPerSecond, TimeDelta::hours(1))
                .map(Loaded::Series)
        }
        Schema::DayAhead => {
            load_series_csv(path, "price_eur_per_mwh", Unit::EurPerMwh, TimeDelta::hours(1))
                .map(Loaded::Series)
        }
    }
}

pub fn load_wind_csv(path: &Path) -> Result<TimeSeries> {
    load_series_csv(path, "wind_speed_ms", Unit::MetersPerSecond, TimeDelta::hours(1))
}

pub fn load_day_ahead_csv(path: &Path) -> Result<TimeSeries> {
    load_series_csv(path, "price_eur_per_mwh", Unit::EurPerMwh, TimeDelta::hours(1))
}

/// Reads `timestamp` plus one named value column. Rows may come in any order;
/// absent grid points become gaps.
pub fn load_series_csv(
    path: &Path,
    column: &str,
    unit: Unit,
    default_step: TimeDelta,
) -> Result<TimeSeries> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers()?.clone();
    let ts_col = find_column(path, &headers, "timestamp")?;
    let val_col = find_column(path, &headers, column)?;
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 2;
        let record = record.map_err(|e| load_err(path, row, e.to_string()))?;
        let ts = parse_timestamp(record.get(ts_col).unwrap_or(""))
            .map_err(|m| load_err(path, row, m))?;
        let v = parse_value(record.get(val_col).unwrap_or("")).map_err(|m| load_err(path, row, m))?;
        rows.push((ts, v, row));
    }
    build_series(path, rows, unit, default_step, None)
}

pub fn load_demand_csv(path: &Path) -> Result<HouseholdDemandSet> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers()?.clone();
    let ts_col = find_column(path, &headers, "timestamp")?;
    let id_col = find_column(path, &headers, "household_id")?;
    let val_col = find_column(path, &headers, "demand_kwh")?;
    let mut by_house: BTreeMap<String, Vec<(DateTime<Utc>, f64, usize)>> = BTreeMap::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 2;
        let record = record.map_err(|e| load_err(path, row, e.to_string()))?;
        let ts = parse_timestamp(record.get(ts_col).unwrap_or(""))
            .map_err(|m| load_err(path, row, m))?;
        let id = record.get(id_col).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(load_err(path, row, "empty household_id".into()));
        }
        let v = parse_value(record.get(val_col).unwrap_or("")).map_err(|m| load_err(path, row, m))?;
        by_house.entry(id).or_default().push((ts, v, row));
    }
    if by_house.is_empty() {
        return Err(load_err(path, 1, "no data rows".into()));
    }

    // Common grid across households so members are aligned by construction.
    let all: Vec<(DateTime<Utc>, f64, usize)> = by_house.values().flatten().copied().collect();
    let mut stamps: Vec<(DateTime<Utc>, usize)> = all.iter().map(|r| (r.0, r.2)).collect();
    stamps.sort();
    stamps.dedup_by_key(|s| s.0);
    let grid = infer_grid(path, &stamps, TimeDelta::minutes(30))?;

    let mut households = BTreeMap::new();
    for (id, rows) in by_house {
        let series = build_series(path, rows, Unit::Kwh, grid.step, Some(grid))?;
        households.insert(id, series);
    }
    HouseholdDemandSet::new(households)
}

fn build_series(
    path: &Path,
    mut rows: Vec<(DateTime<Utc>, f64, usize)>,
    unit: Unit,
    default_step: TimeDelta,
    grid: Option<Axis>,
) -> Result<TimeSeries> {
    if rows.is_empty() {
        return Err(load_err(path, 1, "no data rows".into()));
    }
    rows.sort_by_key(|r| (r.0, r.2));
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(load_err(
                path,
                w[1].2,
                format!("duplicate timestamp {} (first seen on row {})", format_timestamp(w[1].0), w[0].2),
            ));
        }
    }
    let grid = match grid {
        Some(g) => g,
        None => {
            let stamps: Vec<(DateTime<Utc>, usize)> = rows.iter().map(|r| (r.0, r.2)).collect();
            infer_grid(path, &stamps, default_step)?
        }
    };
    let mut values = vec![f64::NAN; grid.len];
    let mut seen = vec![false; grid.len];
    for (ts, v, row) in rows {
        let offset = ts - grid.start;
        let idx = offset.num_seconds() / grid.step.num_seconds();
        if offset.num_seconds() % grid.step.num_seconds() != 0 || idx < 0 || idx as usize >= grid.len {
            return Err(load_err(path, row, format!("timestamp {} is off the {} grid", format_timestamp(ts), grid.step)));
        }
        values[idx as usize] = v;
        seen[idx as usize] = true;
    }
    let missing = seen
        .iter()
        .enumerate()
        .filter(|(_, s)| !**s)
        .map(|(i, _)| i)
        .collect();
    TimeSeries::with_missing(grid.start, grid.step, values, unit, missing)
        .map_err(|e| load_err(path, 0, e.to_string()))
}

/// Sorted, de-duplicated timestamps to a uniform grid. The step is the
/// smallest spacing; every other spacing must be a whole multiple of it.
fn infer_grid(path: &Path, stamps: &[(DateTime<Utc>, usize)], default_step: TimeDelta) -> Result<Axis> {
    let start = stamps[0].0;
    let step = stamps
        .windows(2)
        .map(|w| w[1].0 - w[0].0)
        .min()
        .unwrap_or(default_step);
    if step <= TimeDelta::zero() {
        return Err(load_err(path, stamps[0].1, "non-increasing timestamps".into()));
    }
    for w in stamps.windows(2) {
        let d = (w[1].0 - w[0].0).num_seconds();
        if d % step.num_seconds() != 0 {
            return Err(load_err(
                path,
                w[1].1,
                format!("inconsistent step: spacing of {d} s is not a multiple of {} s", step.num_seconds()),
            ));
        }
    }
    let span = (stamps[stamps.len() - 1].0 - start).num_seconds() / step.num_seconds();
    Ok(Axis {
        start,
        step,
        len: span as usize + 1,
    })
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn find_column(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| load_err(path, 1, format!("missing column `{name}`")))
}

fn load_err(path: &Path, row: usize, message: String) -> Error {
    Error::Load {
        path: path.to_path_buf(),
        row,
        message,
    }
}

fn parse_value(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("non-numeric value `{s}`"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite value `{s}`"))
    }
}

/// ISO-8601 timestamp, read as UTC when no offset is given.
pub fn parse_timestamp(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(naive.and_utc());
        }
    }
    Err(format!("malformed timestamp `{s}`"))
}

pub fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap()
    }

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_half_hourly_demand() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("timestamp,household_id,demand_kwh\n");
        for i in 0..48 {
            body.push_str(&format!("{},h1,{}\n", format_timestamp(t0() + TimeDelta::minutes(30 * i)), 0.25));
        }
        let p = write(&dir, "d.csv", &body);
        let set = load_demand_csv(&p).unwrap();
        let s = set.get("h1").unwrap();
        assert_eq!(s.len(), 48);
        assert_eq!(s.step_hours(), 0.5);
        assert!(!s.has_gaps());
    }

    #[test]
    fn hourly_wind_gap_is_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("timestamp,wind_speed_ms\n");
        for i in [0, 1, 2, 4, 5] {
            body.push_str(&format!("{},5.0\n", format_timestamp(t0() + TimeDelta::hours(i))));
        }
        let p = write(&dir, "w.csv", &body);
        let s = load_wind_csv(&p).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.missing().iter().copied().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn duplicate_timestamp_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let body = "timestamp,wind_speed_ms\n2023-01-01T00:00:00Z,1\n2023-01-01T01:00:00Z,2\n2023-01-01T01:00:00Z,3\n";
        let p = write(&dir, "w.csv", body);
        match load_wind_csv(&p).unwrap_err() {
            Error::Load { row, message, .. } => {
                assert_eq!(row, 4);
                assert!(message.contains("duplicate"));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn malformed_rows_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "timestamp,wind_speed_ms\n2023-01-01T00:00:00Z,1\nyesterday,2\n");
        assert!(matches!(load_wind_csv(&p), Err(Error::Load { row: 3, .. })));
        let p = write(&dir, "b.csv", "timestamp,wind_speed_ms\n2023-01-01T00:00:00Z,abc\n");
        assert!(matches!(load_wind_csv(&p), Err(Error::Load { row: 2, .. })));
        let p = write(
            &dir,
            "c.csv",
            "timestamp,wind_speed_ms\n2023-01-01T00:00:00Z,1\n2023-01-01T01:00:00Z,1\n2023-01-01T01:30:00Z,1\n2023-01-01T02:45:00Z,1\n",
        );
        assert!(matches!(load_wind_csv(&p), Err(Error::Load { .. })));
    }

    #[test]
    fn missing_file_is_distinct() {
        assert!(matches!(
            load_wind_csv(Path::new("/nonexistent/wind.csv")),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn constant_with_gap_fills_to_constant() {
        let missing = BTreeSet::from([2]);
        let s = TimeSeries::with_missing(t0(), TimeDelta::hours(1), vec![5.0; 6], Unit::MetersPerSecond, missing)
            .unwrap();
        let out = fill_and_resample(&s).unwrap();
        assert_eq!(out.len(), 11);
        assert!(out.values().iter().all(|v| (v - 5.0).abs() < 1e-12));
        assert!(!out.has_gaps());
    }

    #[test]
    fn ramp_resamples_to_half_steps() {
        let s = TimeSeries::new(t0(), TimeDelta::hours(1), vec![0.0, 1.0, 2.0, 3.0], Unit::MetersPerSecond).unwrap();
        let out = fill_and_resample(&s).unwrap();
        let expect = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
        assert_eq!(out.len(), expect.len());
        for (a, b) in out.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn knots_reproduced_exactly() {
        let v = vec![3.0, 7.5, 2.25, 9.0, 4.0, 6.0];
        let s = TimeSeries::new(t0(), TimeDelta::hours(1), v.clone(), Unit::MetersPerSecond).unwrap();
        let out = fill_and_resample(&s).unwrap();
        for (i, x) in v.iter().enumerate() {
            assert_eq!(out.values()[2 * i], *x);
        }
    }

    #[test]
    fn too_few_points_is_interpolation_error() {
        let missing = BTreeSet::from([0, 1, 2]);
        let s = TimeSeries::with_missing(t0(), TimeDelta::hours(1), vec![1.0; 6], Unit::MetersPerSecond, missing)
            .unwrap();
        assert!(matches!(fill_and_resample(&s), Err(Error::Interpolation(_))));
    }

    #[test]
    fn negative_undershoot_is_clamped() {
        // A sharp spike next to a gap makes the spline dip below zero.
        let missing = BTreeSet::from([3]);
        let s = TimeSeries::with_missing(
            t0(),
            TimeDelta::hours(1),
            vec![0.0, 0.0, 20.0, 0.0, 0.0, 0.0, 0.0],
            Unit::MetersPerSecond,
            missing,
        )
        .unwrap();
        let out = fill_and_resample(&s).unwrap();
        assert!(out.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn half_hourly_gap_free_is_unchanged() {
        let s = TimeSeries::new(t0(), TimeDelta::minutes(30), vec![1.0, 4.0, 2.0, 8.0], Unit::MetersPerSecond)
            .unwrap();
        assert_eq!(fill_and_resample(&s).unwrap(), s);
    }

    #[test]
    fn aggregate_sums_and_checks_alignment() {
        let a = TimeSeries::new(t0(), TimeDelta::minutes(30), vec![1.0; 4], Unit::Kwh).unwrap();
        let set = HouseholdDemandSet::new(BTreeMap::from([("a".into(), a.clone()), ("b".into(), a.clone())])).unwrap();
        let total = aggregate_households(&set).unwrap();
        assert!(total.values().iter().all(|v| *v == 2.0));

        let single = HouseholdDemandSet::new(BTreeMap::from([("a".into(), a.clone())])).unwrap();
        assert_eq!(aggregate_households(&single).unwrap(), a);

        let short = TimeSeries::new(t0(), TimeDelta::minutes(30), vec![1.0; 3], Unit::Kwh).unwrap();
        assert!(matches!(
            HouseholdDemandSet::new(BTreeMap::from([("a".into(), a), ("b".into(), short)])),
            Err(Error::Alignment(_))
        ));
        assert!(aggregate_households(&HouseholdDemandSet::new(BTreeMap::new()).unwrap()).is_err());
    }

    #[test]
    fn day_ahead_is_converted_and_replicated() {
        let s = TimeSeries::new(t0(), TimeDelta::hours(1), vec![50.0, -20.0], Unit::EurPerMwh).unwrap();
        let out = day_ahead_to_halfhourly(&s).unwrap();
        assert_eq!(out.values(), &[0.05, 0.05, -0.02, -0.02]);
        assert_eq!(out.unit(), Unit::EurPerKwh);
    }

    #[test]
    fn year_has_17520_half_hours() {
        let axis = Axis::half_hourly(t0(), 365 * STEPS_PER_DAY);
        let s = TimeSeries::constant(axis, 0.0, Unit::Kw).unwrap();
        assert_eq!(s.len(), 17_520);
        assert_eq!(s.timestamp(17_519), Utc.with_ymd_and_hms(2023, 12, 31, 23, 30, 0).unwrap());
    }

    #[test]
    fn negative_demand_rejected() {
        assert!(TimeSeries::new(t0(), TimeDelta::minutes(30), vec![-1.0], Unit::Kwh).is_err());
    }

    #[test]
    fn series_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = TimeSeries::new(t0(), TimeDelta::hours(1), vec![1.5, 2.25, 0.1], Unit::MetersPerSecond).unwrap();
        let p = dir.path().join("w.csv");
        s.write_csv(&p, "wind_speed_ms").unwrap();
        assert_eq!(load_wind_csv(&p).unwrap(), s);
    }
}

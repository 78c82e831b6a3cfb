//! Rainflow cycle counting on SoC trajectories and the resulting
//! depreciation factor.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{TimeSeries, Unit};

/// Upper SoC at or above this percentage makes a cycle regular.
pub const REGULAR_THRESHOLD_PCT: f64 = 99.5;

const RANGE_TOL_PCT: f64 = 1e-6;
/// Solver noise allowed outside [0, 100] % before a SoC is rejected.
const BOUND_TOL_PCT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleKind {
    Regular,
    Irregular,
}

/// One counted cycle, as the discharge from `soc_start_pct` to `soc_end_pct`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub kind: CycleKind,
    /// 1 for a full cycle, 0.5 for a half cycle.
    pub weight: f64,
    pub soc_start_pct: f64,
    pub soc_end_pct: f64,
    pub dod_pct: f64,
}

impl CycleRecord {
    fn from_range(a: f64, b: f64, weight: f64) -> Self {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if hi >= REGULAR_THRESHOLD_PCT {
            CycleRecord {
                kind: CycleKind::Regular,
                weight,
                soc_start_pct: 100.0,
                soc_end_pct: lo,
                dod_pct: 100.0 - lo,
            }
        } else {
            CycleRecord {
                kind: CycleKind::Irregular,
                weight,
                soc_start_pct: hi,
                soc_end_pct: lo,
                dod_pct: hi - lo,
            }
        }
    }
}

/// Manufacturer cycle life against depth of discharge, interpolated
/// log-linearly. Outside the table the nearest segment is extended.
#[derive(Debug, Clone, PartialEq)]
pub struct LifeCurve {
    dod: Vec<f64>,
    ln_n: Vec<f64>,
}

impl LifeCurve {
    /// Points `(dod_pct, n_cycles_max)`: at least two, DoD strictly increasing
    /// within (0, 100], cycle counts positive and strictly decreasing.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Curve("a life curve needs at least two points".into()));
        }
        for (i, &(d, n)) in points.iter().enumerate() {
            if !(d > 0.0 && d <= 100.0) {
                return Err(Error::Curve(format!("DoD {d} outside (0, 100]")));
            }
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::Curve(format!("cycle count {n} at DoD {d} must be positive")));
            }
            if i > 0 {
                let (pd, pn) = points[i - 1];
                if d <= pd {
                    return Err(Error::Curve("DoD values must be strictly increasing".into()));
                }
                if n >= pn {
                    return Err(Error::Curve("cycle counts must strictly decrease with DoD".into()));
                }
            }
        }
        Ok(LifeCurve {
            dod: points.iter().map(|p| p.0).collect(),
            ln_n: points.iter().map(|p| p.1.ln()).collect(),
        })
    }

    /// Synthetic power law `N = 3000 · (100 / DoD)^1.3` sampled at 5, 10, 20, …,
    /// 100 % DoD. Illustrative values, not manufacturer data.
    pub fn synthetic_default() -> Self {
        let mut dods = vec![5.0];
        dods.extend((1..=10).map(|k| 10.0 * k as f64));
        let pts: Vec<(f64, f64)> = dods.iter().map(|&d| (d, 3000.0 * (100.0 / d).powf(1.3))).collect();
        LifeCurve::new(&pts).expect("synthetic curve is well formed")
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.dod.iter().zip(&self.ln_n).map(|(d, l)| (*d, l.exp())).collect()
    }

    /// Cycle life at `dod_pct`.
    pub fn cycles_at(&self, dod_pct: f64) -> Result<f64> {
        if !(0.0..=100.0).contains(&dod_pct) {
            return Err(Error::Domain(format!("DoD {dod_pct} outside [0, 100]")));
        }
        let k = self.dod.partition_point(|d| *d < dod_pct).clamp(1, self.dod.len() - 1);
        let (d0, d1) = (self.dod[k - 1], self.dod[k]);
        let (l0, l1) = (self.ln_n[k - 1], self.ln_n[k]);
        let n = (l0 + (l1 - l0) * (dod_pct - d0) / (d1 - d0)).exp();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Curve(format!("cycle life {n} at DoD {dod_pct} is unusable")));
        }
        Ok(n)
    }

    /// Reads `dod_pct,n_cycles_max`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let mut r = csv::Reader::from_path(path)?;
        let mut pts = Vec::new();
        for (i, rec) in r.deserialize::<(f64, f64)>().enumerate() {
            let row = rec.map_err(|e| Error::Load {
                path: path.to_path_buf(),
                row: i + 2,
                message: e.to_string(),
            })?;
            pts.push(row);
        }
        LifeCurve::new(&pts)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["dod_pct", "n_cycles_max"])?;
        for (d, n) in self.points() {
            w.write_record([d.to_string(), n.to_string()])?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Equivalent DoD of a cycle edge at `soc_pct`: `100 − soc_pct`.
pub fn dod_equivalent(soc_pct: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&soc_pct) {
        return Err(Error::Domain(format!("SoC {soc_pct}% outside [0, 100]")));
    }
    Ok(100.0 - soc_pct)
}

/// Rainflow cycles of an SoC series in kWh.
pub fn rainflow_extract(soc: &TimeSeries, soc_max: f64) -> Result<Vec<CycleRecord>> {
    if soc.unit() != Unit::Kwh {
        return Err(Error::Precondition(format!("SoC must be in kWh, got {:?}", soc.unit())));
    }
    soc.ensure_gap_free("rainflow_extract")?;
    rainflow_values(soc.values(), soc_max)
}

/// Rainflow cycles of raw SoC values (kWh).
///
/// Four-point closure over the turning points extracts full cycles. A residue
/// that returns to its starting level is a closed loop: it is counted by
/// running the closure once more over the residue traversed twice. Any other
/// residue contributes a half cycle per remaining excursion.
pub fn rainflow_values(soc: &[f64], soc_max: f64) -> Result<Vec<CycleRecord>> {
    if soc.is_empty() {
        return Err(Error::Precondition("rainflow needs a non-empty SoC series".into()));
    }
    if soc_max <= 0.0 {
        return Ok(Vec::new());
    }
    let mut pct = Vec::with_capacity(soc.len());
    for (i, s) in soc.iter().enumerate() {
        let p = 100.0 * s / soc_max;
        if !(-BOUND_TOL_PCT..=100.0 + BOUND_TOL_PCT).contains(&p) {
            return Err(Error::Domain(format!("SoC {s} at index {i} outside [0, {soc_max}]")));
        }
        pct.push(p.clamp(0.0, 100.0));
    }
    let mut out = Vec::new();
    let residue = four_point(&turning_points(&pct), &mut out);
    if residue.len() < 2 {
        return Ok(out);
    }
    let closed = (residue[0] - residue[residue.len() - 1]).abs() <= RANGE_TOL_PCT;
    if closed && residue.len() > 2 {
        let mut doubled = residue.clone();
        doubled.extend_from_slice(&residue[1..]);
        four_point(&turning_points(&doubled), &mut out);
    } else {
        for w in residue.windows(2) {
            if (w[0] - w[1]).abs() > RANGE_TOL_PCT {
                out.push(CycleRecord::from_range(w[0], w[1], 0.5));
            }
        }
    }
    Ok(out)
}

/// Endpoints plus strict local extrema, with plateaus collapsed.
fn turning_points(x: &[f64]) -> Vec<f64> {
    let mut dedup: Vec<f64> = Vec::with_capacity(x.len());
    for &v in x {
        if dedup.last().is_none_or(|l| (l - v).abs() > RANGE_TOL_PCT) {
            dedup.push(v);
        }
    }
    if dedup.len() <= 2 {
        return dedup;
    }
    let mut tp = vec![dedup[0]];
    for w in dedup.windows(3) {
        if (w[1] - w[0]) * (w[2] - w[1]) < 0.0 {
            tp.push(w[1]);
        }
    }
    tp.push(dedup[dedup.len() - 1]);
    tp
}

/// Runs the closure rule, pushing extracted full cycles; returns the residue.
fn four_point(tp: &[f64], out: &mut Vec<CycleRecord>) -> Vec<f64> {
    let mut stack: Vec<f64> = Vec::with_capacity(tp.len());
    for &p in tp {
        stack.push(p);
        while stack.len() >= 4 {
            let k = stack.len();
            let (a, b, c, d) = (stack[k - 4], stack[k - 3], stack[k - 2], stack[k - 1]);
            let inner = (b - c).abs();
            if inner <= (a - b).abs() && inner <= (c - d).abs() {
                out.push(CycleRecord::from_range(b, c, 1.0));
                stack.drain(k - 3..k - 1);
            } else {
                break;
            }
        }
    }
    stack
}

/// Fraction of battery life consumed by `cycles`.
pub fn depreciation_factor(cycles: &[CycleRecord], life: &LifeCurve) -> Result<f64> {
    let mut df = 0.0;
    for c in cycles {
        df += match c.kind {
            CycleKind::Regular => c.weight / life.cycles_at(c.dod_pct)?,
            CycleKind::Irregular => {
                let start = life.cycles_at(dod_equivalent(c.soc_start_pct)?)?;
                let end = life.cycles_at(dod_equivalent(c.soc_end_pct)?)?;
                c.weight * (1.0 / start - 1.0 / end).abs()
            }
        };
    }
    Ok(df)
}

/// Depreciation factor of each prefix of `soc` ending at a day boundary, so
/// entry `k` covers days `0..=k`.
pub fn cumulative_degradation(
    soc: &[f64],
    soc_max: f64,
    steps_per_day: usize,
    life: &LifeCurve,
) -> Result<Vec<f64>> {
    if steps_per_day == 0 {
        return Err(Error::Precondition("steps_per_day must be positive".into()));
    }
    let steps = soc.len().saturating_sub(1);
    (1..=steps.div_ceil(steps_per_day))
        .map(|day| {
            let end = (day * steps_per_day).min(steps);
            depreciation_factor(&rainflow_values(&soc[..=end], soc_max)?, life)
        })
        .collect()
}

/// Depreciation factor with cycle counts by class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegradationReport {
    pub depreciation_factor: f64,
    pub regular_full: usize,
    pub regular_half: usize,
    pub irregular_full: usize,
    pub irregular_half: usize,
}

pub fn degradation_report(soc: &[f64], soc_max: f64, life: &LifeCurve) -> Result<DegradationReport> {
    let cycles = rainflow_values(soc, soc_max)?;
    let count = |kind: CycleKind, w: f64| cycles.iter().filter(|c| c.kind == kind && c.weight == w).count();
    Ok(DegradationReport {
        depreciation_factor: depreciation_factor(&cycles, life)?,
        regular_full: count(CycleKind::Regular, 1.0),
        regular_half: count(CycleKind::Regular, 0.5),
        irregular_full: count(CycleKind::Irregular, 1.0),
        irregular_half: count(CycleKind::Irregular, 0.5),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn test_curve() -> LifeCurve {
        LifeCurve::new(&[(20.0, 30000.0), (60.0, 7000.0), (100.0, 3000.0)]).unwrap()
    }

    #[test]
    fn monotone_is_one_half_cycle() {
        let c = rainflow_values(&[0.0, 2.0, 5.0, 7.0], 10.0).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].weight, 0.5);
        assert_eq!((c[0].soc_start_pct, c[0].soc_end_pct), (70.0, 0.0));
    }

    #[test]
    fn full_regular_cycle() {
        let c = rainflow_values(&[10.0, 4.0, 10.0], 10.0).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].kind, CycleKind::Regular);
        assert_eq!(c[0].weight, 1.0);
        assert!((c[0].dod_pct - 60.0).abs() < 1e-12);
    }

    #[test]
    fn full_irregular_cycle() {
        let c = rainflow_values(&[8.0, 4.0, 8.0], 10.0).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].kind, CycleKind::Irregular);
        assert_eq!(c[0].weight, 1.0);
        assert!((c[0].soc_start_pct - 80.0).abs() < 1e-12);
        assert!((c[0].soc_end_pct - 40.0).abs() < 1e-12);
    }

    #[test]
    fn four_point_closure_extracts_inner_cycle() {
        // 0 → 80 → 40 → 60 → 20: the 40-60 swing closes inside 80-20.
        let c = rainflow_values(&[0.0, 8.0, 4.0, 6.0, 2.0], 10.0).unwrap();
        let full: Vec<_> = c.iter().filter(|c| c.weight == 1.0).collect();
        assert_eq!(full.len(), 1);
        assert!((full[0].soc_start_pct - 60.0).abs() < 1e-12);
        assert!((full[0].soc_end_pct - 40.0).abs() < 1e-12);
        assert_eq!(c.iter().filter(|c| c.weight == 0.5).count(), 2);
    }

    #[test]
    fn near_full_counts_as_regular() {
        let c = rainflow_values(&[9.96, 5.0, 9.96], 10.0).unwrap();
        assert_eq!(c[0].kind, CycleKind::Regular);
        assert_eq!(c[0].soc_start_pct, 100.0);
        assert!((c[0].dod_pct - 50.0).abs() < 1e-12);
    }

    #[test]
    fn dod_equivalent_values() {
        assert_eq!(dod_equivalent(100.0).unwrap(), 0.0);
        assert_eq!(dod_equivalent(0.0).unwrap(), 100.0);
        assert_eq!(dod_equivalent(80.0).unwrap(), 20.0);
        assert!(dod_equivalent(101.0).is_err());
    }

    #[test]
    fn depreciation_examples() {
        let curve = test_curve();
        assert_eq!(depreciation_factor(&[], &curve).unwrap(), 0.0);
        let reg = CycleRecord::from_range(100.0, 0.0, 1.0);
        assert!((depreciation_factor(&[reg], &curve).unwrap() - 1.0 / 3000.0).abs() < 1e-15);
        let irr = CycleRecord::from_range(80.0, 40.0, 1.0);
        let df = depreciation_factor(&[irr], &curve).unwrap();
        assert!((df - (1.0 / 7000.0 - 1.0 / 30000.0)).abs() < 1e-15);
        assert!((df - 1.0952e-4).abs() < 1e-8);
    }

    #[test]
    fn life_curve_interpolates_log_linearly() {
        let c = test_curve();
        assert!((c.cycles_at(60.0).unwrap() - 7000.0).abs() < 1e-9);
        let mid = c.cycles_at(80.0).unwrap();
        assert!((mid - (7000.0f64 * 3000.0).sqrt()).abs() < 1e-6);
        assert!(c.cycles_at(0.0).unwrap() > 30000.0);
        assert!(LifeCurve::new(&[(10.0, 100.0), (20.0, 200.0)]).is_err());
        assert!(LifeCurve::new(&[(20.0, 100.0), (10.0, 50.0)]).is_err());
    }

    #[test]
    fn life_curve_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("life.csv");
        let c = LifeCurve::synthetic_default();
        c.write_csv(&p).unwrap();
        let back = LifeCurve::from_csv(&p).unwrap();
        for ((d0, n0), (d1, n1)) in c.points().iter().zip(back.points()) {
            assert_eq!(*d0, d1);
            assert!((n0 - n1).abs() < 1e-9 * n0);
        }
    }

    #[test]
    fn cumulative_is_per_day_prefix() {
        let soc: Vec<f64> = (0..=96).map(|i| if (i / 8) % 2 == 0 { 2.0 } else { 8.0 }).collect();
        let curve = LifeCurve::synthetic_default();
        let cum = cumulative_degradation(&soc, 10.0, 48, &curve).unwrap();
        assert_eq!(cum.len(), 2);
        let whole = depreciation_factor(&rainflow_values(&soc, 10.0).unwrap(), &curve).unwrap();
        assert!((cum[1] - whole).abs() < 1e-15);
        assert!(cum[0] <= cum[1]);
    }

    proptest! {
        #[test]
        fn scaling_leaves_cycles_unchanged(
            v in proptest::collection::vec(0.0f64..1.0, 2..60),
            scale in 0.5f64..50.0,
        ) {
            let a = rainflow_values(&v, 1.0).unwrap();
            let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
            let b = rainflow_values(&scaled, scale).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(x.kind, y.kind);
                prop_assert_eq!(x.weight, y.weight);
                prop_assert!((x.dod_pct - y.dod_pct).abs() < 1e-9);
            }
        }

        #[test]
        fn df_is_additive(v in proptest::collection::vec(0.0f64..1.0, 2..60), cut in 0usize..60) {
            let curve = LifeCurve::synthetic_default();
            let cycles = rainflow_values(&v, 1.0).unwrap();
            let k = cut.min(cycles.len());
            let whole = depreciation_factor(&cycles, &curve).unwrap();
            let parts = depreciation_factor(&cycles[..k], &curve).unwrap()
                + depreciation_factor(&cycles[k..], &curve).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-12 * (1.0 + whole));
            prop_assert!(whole >= 0.0);
        }

        #[test]
        fn records_are_well_formed(v in proptest::collection::vec(0.0f64..1.0, 1..80)) {
            for c in rainflow_values(&v, 1.0).unwrap() {
                prop_assert!(0.0 <= c.soc_end_pct && c.soc_end_pct <= c.soc_start_pct && c.soc_start_pct <= 100.0);
                if c.kind == CycleKind::Regular {
                    prop_assert_eq!(c.soc_start_pct, 100.0);
                    prop_assert!((c.dod_pct - (100.0 - c.soc_end_pct)).abs() < 1e-12);
                }
            }
        }
    }
}

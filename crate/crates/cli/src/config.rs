//! Scenario configuration, read from TOML.
//!
//! Every section is optional and falls back to the defaults used in the
//! experiments. Relative paths resolve against the directory holding the
//! config file. The dialect is versioned by the top-level `config_version`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stackrent::pricing::default_capacity_grid;
use stackrent::scheduler::{BatterySpec, Mode, SolveOptions};
use stackrent::synth::SynthConfig;
use stackrent::tariffs::{DynamicTariffParams, TariffKind};
use stackrent::wind::TurbineModel;
use stackrent::Error;

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub config_version: u32,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub synth: SynthConfig,
    #[serde(default)]
    pub battery: BatteryConfig,
    #[serde(default)]
    pub tariff: TariffConfig,
    #[serde(default)]
    pub turbine: TurbineConfig,
    #[serde(default = "default_controllers")]
    pub controllers: Vec<ControllerConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub market: MarketConfig,
    #[serde(default)]
    pub life_curve: LifeCurveConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            config_version: CONFIG_VERSION,
            data: DataConfig::default(),
            synth: SynthConfig::default(),
            battery: BatteryConfig::default(),
            tariff: TariffConfig::default(),
            turbine: TurbineConfig::default(),
            controllers: default_controllers(),
            sweep: SweepConfig::default(),
            market: MarketConfig::default(),
            life_curve: LifeCurveConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Where one input stream comes from: `"synth"` or `{ path = "..." }`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    #[default]
    Synth,
    Path(PathBuf),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Long-format household demand, kWh per half-hour.
    pub demand: Source,
    /// Hourly 10 m wind speed, m/s.
    pub wind: Source,
    /// Hourly day-ahead prices, €/MWh.
    pub day_ahead: Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryConfig {
    pub capacity_kwh: f64,
    /// Rated power per kWh of capacity.
    pub c_rate: f64,
    pub soc_initial_frac: f64,
    /// Per-step grid exchange limit, kWh.
    pub e_max_kwh: Option<f64>,
    pub eta_c: f64,
    pub eta_d: f64,
    pub eta_cd: f64,
    pub lambda_charging: f64,
    pub lambda_capacity: f64,
    pub lambda_max_cycles: f64,
    pub soc_eod_min_frac: f64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        let b = BatterySpec::with_capacity(1000.0);
        BatteryConfig {
            capacity_kwh: b.soc_max,
            c_rate: b.p_max / b.soc_max,
            soc_initial_frac: 0.0,
            e_max_kwh: b.e_max,
            eta_c: b.eta_c,
            eta_d: b.eta_d,
            eta_cd: b.eta_cd,
            lambda_charging: b.lambda_charging,
            lambda_capacity: b.lambda_capacity,
            lambda_max_cycles: b.lambda_max_cycles,
            soc_eod_min_frac: b.soc_eod_min_frac,
        }
    }
}

impl BatteryConfig {
    /// The configured battery resized to `capacity_kwh`.
    pub fn spec(&self, capacity_kwh: f64) -> BatterySpec {
        BatterySpec {
            soc_min: 0.0,
            soc_max: capacity_kwh,
            soc_initial: self.soc_initial_frac * capacity_kwh,
            p_max: self.c_rate * capacity_kwh,
            e_max: self.e_max_kwh,
            eta_c: self.eta_c,
            eta_d: self.eta_d,
            eta_cd: self.eta_cd,
            lambda_charging: self.lambda_charging,
            lambda_capacity: self.lambda_capacity,
            lambda_max_cycles: self.lambda_max_cycles,
            soc_eod_min_frac: self.soc_eod_min_frac,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TariffConfig {
    pub kind: TariffKind,
    /// Flat tariff only.
    pub buy_eur_kwh: f64,
    /// Flat tariff only.
    pub sell_eur_kwh: f64,
    /// Dynamic tariff only; false pays nothing for export.
    pub export_paid: bool,
    pub dynamic: DynamicTariffParams,
}

impl Default for TariffConfig {
    fn default() -> Self {
        TariffConfig {
            kind: TariffKind::Flat,
            buy_eur_kwh: 0.4,
            sell_eur_kwh: 0.1,
            export_paid: true,
            dynamic: DynamicTariffParams::default(),
        }
    }
}

impl TariffConfig {
    pub fn label(&self) -> &'static str {
        match self.kind {
            TariffKind::Flat => "flat",
            TariffKind::Dynamic => "dynamic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurbineConfig {
    pub capacity_kw: f64,
    pub sigmoid_a: f64,
    pub sigmoid_b: f64,
    pub hub_height_m: f64,
    pub anemometer_height_m: f64,
    pub roughness_m: f64,
    pub price_per_kw: f64,
    pub amortization_years: f64,
    /// Rescale generation to `r_gen_target`; false keeps the turbine as is.
    pub scale_generation: bool,
    /// Yearly generation over yearly demand.
    pub r_gen_target: f64,
}

impl Default for TurbineConfig {
    fn default() -> Self {
        let m = TurbineModel::default();
        TurbineConfig {
            capacity_kw: m.capacity_kw,
            sigmoid_a: m.sigmoid_a,
            sigmoid_b: m.sigmoid_b,
            hub_height_m: m.hub_height_m,
            anemometer_height_m: m.anemometer_height_m,
            roughness_m: m.roughness_m,
            price_per_kw: m.price_per_kw,
            amortization_years: m.amortization_years,
            scale_generation: true,
            r_gen_target: 1.2,
        }
    }
}

impl TurbineConfig {
    pub fn model(&self) -> TurbineModel {
        TurbineModel {
            capacity_kw: self.capacity_kw,
            sigmoid_a: self.sigmoid_a,
            sigmoid_b: self.sigmoid_b,
            hub_height_m: self.hub_height_m,
            anemometer_height_m: self.anemometer_height_m,
            roughness_m: self.roughness_m,
            price_per_kw: self.price_per_kw,
            amortization_years: self.amortization_years,
        }
    }
}

/// One community controller run. `name` is also its output subdirectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub name: String,
    #[serde(default)]
    pub options: SolveOptions,
}

fn default_controllers() -> Vec<ControllerConfig> {
    vec![
        ControllerConfig {
            name: "greedy".into(),
            options: SolveOptions {
                mode: Mode::Greedy,
                ..SolveOptions::default()
            },
        },
        ControllerConfig {
            name: "lp".into(),
            options: SolveOptions::default(),
        },
        ControllerConfig {
            name: "lp_unregularized".into(),
            options: SolveOptions::unregularized(Mode::Lp),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Rented capacities, kWh; must include 0.
    pub capacities_kwh: Vec<f64>,
    pub r_values: Vec<f64>,
    /// Name of the controller that prices the community side.
    pub controller: String,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            capacities_kwh: default_capacity_grid(),
            r_values: vec![0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8],
            controller: "lp".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketConfig {
    /// The operator's whole battery; rented capacity is carved out of it.
    pub capacity_kwh: f64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig { capacity_kwh: 1000.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifeCurveConfig {
    /// `dod_pct,cycles` CSV; the synthetic default curve when absent.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

impl ScenarioConfig {
    /// Parses `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()).into());
        }
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: ScenarioConfig = toml::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for src in [&mut self.data.demand, &mut self.data.wind, &mut self.data.day_ahead] {
            if let Source::Path(p) = src {
                fix(p);
            }
        }
        if let Some(p) = self.life_curve.path.as_mut() {
            fix(p);
        }
        fix(&mut self.output.dir);
    }

    /// Version, value ranges and the existence of every referenced file.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.config_version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config_version {} is not supported (expected {CONFIG_VERSION})",
                self.config_version
            ))
            .into());
        }
        self.synth.validate()?;
        self.battery.spec(self.battery.capacity_kwh).validate()?;
        self.turbine.model().validate()?;
        if self.controllers.is_empty() {
            return Err(Error::Config("at least one controller is required".into()).into());
        }
        for (i, c) in self.controllers.iter().enumerate() {
            c.options.validate()?;
            if c.name.is_empty() || c.name.contains(['/', '\\']) || c.name.starts_with('.') {
                return Err(Error::Config(format!("controller name `{}` is not a plain directory name", c.name)).into());
            }
            if self.controllers[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Config(format!("duplicate controller name `{}`", c.name)).into());
            }
        }
        if self.market.capacity_kwh.is_nan() || self.market.capacity_kwh < 0.0 {
            return Err(Error::Config("market capacity must be non-negative".into()).into());
        }
        let files = [&self.data.demand, &self.data.wind, &self.data.day_ahead]
            .into_iter()
            .filter_map(|s| match s {
                Source::Path(p) => Some(p),
                Source::Synth => None,
            })
            .chain(self.life_curve.path.as_ref());
        for p in files {
            if !p.exists() {
                return Err(Error::MissingFile(p.clone()).into());
            }
        }
        Ok(())
    }

    pub fn controller(&self, name: &str) -> Result<&ControllerConfig, CliError> {
        self.controllers
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Config(format!("sweep controller `{name}` is not configured")).into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_means_defaults() {
        let cfg: ScenarioConfig = toml::from_str("config_version = 1").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn sources_parse_both_ways() {
        let cfg: ScenarioConfig = toml::from_str(
            r#"
            config_version = 1
            [data]
            wind = "synth"
            day_ahead = { path = "prices.csv" }
            "#,
        )
        .unwrap();
        assert_eq!(cfg.data.wind, Source::Synth);
        assert_eq!(cfg.data.day_ahead, Source::Path("prices.csv".into()));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ScenarioConfig>("config_version = 1\n[battery]\ncapacity = 3").is_err());
    }

    #[test]
    fn missing_referenced_file_is_reported() {
        let mut cfg = ScenarioConfig::default();
        cfg.data.demand = Source::Path("/nonexistent/demand.csv".into());
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn shipped_config_is_valid() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/scenario.toml");
        let cfg = ScenarioConfig::load(&path).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.controllers.len(), 5);
        cfg.controller(&cfg.sweep.controller).unwrap();
    }

    #[test]
    fn default_battery_matches_core_defaults() {
        assert_eq!(BatteryConfig::default().spec(1000.0), BatterySpec::with_capacity(1000.0));
    }
}

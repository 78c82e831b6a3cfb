//! The five pipeline stages. Each computes first, possibly in parallel, and
//! then writes its artifacts in a fixed order.

use std::fs::File;
use std::path::Path;

use serde::Serialize;
use stackrent::degradation::{cumulative_degradation, degradation_report, DegradationReport, LifeCurve};
use stackrent::inputs::{prepare_inputs, CommunityInputs};
use stackrent::market::{market_year_profit_with, opportunity_cost_curve_with};
use stackrent::parallel;
use stackrent::pricing::{
    best_coefficient, cosize_generation, feasible_region, max_price_curve, optimal_capacity, CommunityScenario,
    FeasiblePoint, PriceCurve, ScenarioResult,
};
use stackrent::scheduler::{chain_year, Schedule};
use stackrent::synth::{gen_demand, gen_prices, gen_wind};
use stackrent::tariffs::{dynamic_tariff, flat_tariff, TariffKind, TariffSchedule};
use stackrent::timeseries::{
    day_ahead_to_halfhourly, load_day_ahead_csv, load_demand_csv, load_wind_csv, HouseholdDemandSet, TimeSeries,
    STEPS_PER_DAY,
};
use stackrent::wind::{generation_coefficient, scale_to_coefficient};
use stackrent::Error;

use crate::config::{ScenarioConfig, Source};
use crate::{CliError, Command};

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(command: Command, cfg: &ScenarioConfig) -> Result<()> {
    let out = &cfg.output.dir;
    std::fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.clone(),
        source,
    })?;
    match command {
        Command::SimulateCommunity => simulate_community(cfg, out),
        Command::SimulateMarket => simulate_market(cfg, out),
        Command::PriceRange => price_range(cfg, out),
        Command::Size => size(cfg, out),
        Command::GenData => gen_data(cfg, out),
    }
}

fn households(cfg: &ScenarioConfig) -> Result<HouseholdDemandSet> {
    Ok(match &cfg.data.demand {
        Source::Synth => gen_demand(&cfg.synth)?,
        Source::Path(p) => load_demand_csv(p)?,
    })
}

fn wind(cfg: &ScenarioConfig) -> Result<TimeSeries> {
    Ok(match &cfg.data.wind {
        Source::Synth => gen_wind(&cfg.synth)?,
        Source::Path(p) => load_wind_csv(p)?,
    })
}

fn prices(cfg: &ScenarioConfig) -> Result<TimeSeries> {
    Ok(match &cfg.data.day_ahead {
        Source::Synth => gen_prices(&cfg.synth)?,
        Source::Path(p) => load_day_ahead_csv(p)?,
    })
}

fn life_curve(cfg: &ScenarioConfig) -> Result<LifeCurve> {
    Ok(match &cfg.life_curve.path {
        Some(p) => LifeCurve::from_csv(p)?,
        None => LifeCurve::synthetic_default(),
    })
}

/// Aligned inputs plus the generation actually used and its yearly cost.
struct Community {
    inputs: CommunityInputs,
    generation: TimeSeries,
    turbine_cost_eur: f64,
    tariff: TariffSchedule,
}

fn community(cfg: &ScenarioConfig) -> Result<Community> {
    let model = cfg.turbine.model();
    let inputs = prepare_inputs(&households(cfg)?, &wind(cfg)?, &prices(cfg)?, &model)?;
    let (generation, turbine_cost_eur) = if cfg.turbine.scale_generation {
        let s = scale_to_coefficient(&inputs.generation, &inputs.demand, cfg.turbine.r_gen_target, &model)?;
        (s.generation, s.annual_cost_eur)
    } else {
        (inputs.generation.clone(), model.annual_cost())
    };
    let tariff = match cfg.tariff.kind {
        TariffKind::Flat => flat_tariff(cfg.tariff.buy_eur_kwh, cfg.tariff.sell_eur_kwh, inputs.demand.axis())?,
        TariffKind::Dynamic => dynamic_tariff(&inputs.day_ahead, cfg.tariff.export_paid, &cfg.tariff.dynamic)?,
    };
    Ok(Community {
        inputs,
        generation,
        turbine_cost_eur,
        tariff,
    })
}

fn scenario(cfg: &ScenarioConfig, c: &Community, generation: TimeSeries, turbine_cost_eur: f64) -> Result<CommunityScenario> {
    Ok(CommunityScenario {
        generation,
        demand: c.inputs.demand.clone(),
        tariff: c.tariff.clone(),
        battery: cfg.battery.spec(cfg.battery.capacity_kwh),
        opts: cfg.controller(&cfg.sweep.controller)?.options,
        turbine_annual_cost_eur: turbine_cost_eur,
        tariff_label: cfg.tariff.label().into(),
    })
}

fn min_curve(cfg: &ScenarioConfig, day_ahead: &TimeSeries) -> Result<PriceCurve> {
    let full = cfg.battery.spec(cfg.market.capacity_kwh);
    Ok(opportunity_cost_curve_with(day_ahead, &full, &cfg.sweep.capacities_kwh)?)
}

#[derive(Serialize)]
struct CommunitySummary<'a> {
    controller: &'a str,
    mode: &'static str,
    tariff: &'static str,
    capacity_kwh: f64,
    r_gen: f64,
    yearly_bill_eur: f64,
    turbine_cost_eur: f64,
    total_cost_eur: f64,
    /// kWh through the battery terminals, charge plus discharge.
    throughput_kwh: f64,
    degradation: DegradationReport,
}

fn simulate_community(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    let c = community(cfg)?;
    let life = life_curve(cfg)?;
    let battery = cfg.battery.spec(cfg.battery.capacity_kwh);
    let r_gen = generation_coefficient(&c.generation, &c.inputs.demand)?;
    let schedules = parallel::map(&cfg.controllers, |ctl| {
        chain_year(&c.generation, &c.inputs.demand, &c.tariff, &battery, &ctl.options)
            .map_err(|source| CliError::Controller {
                name: ctl.name.clone(),
                source,
            })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    for (ctl, s) in cfg.controllers.iter().zip(&schedules) {
        let dir = out.join(&ctl.name);
        std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        s.write_csv(&dir.join("schedule.csv"))?;
        let daily = cumulative_degradation(&s.soc, battery.soc_max, STEPS_PER_DAY, &life)?;
        write_rows(
            &dir.join("degradation.csv"),
            daily.iter().enumerate().map(|(day, df)| DailyDegradation {
                day,
                cumulative_depreciation_factor: *df,
            }),
        )?;
        let summary = CommunitySummary {
            controller: &ctl.name,
            mode: ctl.options.mode.name(),
            tariff: cfg.tariff.label(),
            capacity_kwh: battery.soc_max,
            r_gen,
            yearly_bill_eur: s.objective_value,
            turbine_cost_eur: c.turbine_cost_eur,
            total_cost_eur: s.objective_value + c.turbine_cost_eur,
            throughput_kwh: s.power_throughput() * s.step_hours(),
            degradation: degradation_report(&s.soc, battery.soc_max, &life)?,
        };
        write_json(&dir.join("summary.json"), &summary)?;
        println!(
            "{:<20} bill €{:.2}  total €{:.2}  throughput {:.2} kWh  DF {:.6}",
            ctl.name, summary.yearly_bill_eur, summary.total_cost_eur, summary.throughput_kwh,
            summary.degradation.depreciation_factor
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct DailyDegradation {
    day: usize,
    cumulative_depreciation_factor: f64,
}

#[derive(Serialize)]
struct MarketSummary {
    capacity_kwh: f64,
    profit_eur: f64,
    throughput_kwh: f64,
    degradation: DegradationReport,
}

fn simulate_market(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    let day_ahead = day_ahead_to_halfhourly(&prices(cfg)?)?;
    let battery = cfg.battery.spec(cfg.market.capacity_kwh);
    let life = life_curve(cfg)?;
    let r = market_year_profit_with(&day_ahead, &battery)?;
    let s: &Schedule = &r.schedule;
    s.write_csv(&out.join("market_schedule.csv"))?;
    let summary = MarketSummary {
        capacity_kwh: r.capacity_kwh,
        profit_eur: r.profit_eur,
        throughput_kwh: s.power_throughput() * s.step_hours(),
        degradation: degradation_report(&s.soc, battery.soc_max, &life)?,
    };
    write_json(&out.join("market_summary.json"), &summary)?;
    println!(
        "market {:.2} kWh: profit €{:.2}  throughput {:.2} kWh",
        summary.capacity_kwh, summary.profit_eur, summary.throughput_kwh
    );
    Ok(())
}

#[derive(Serialize)]
struct PriceRangeRow {
    capacity_kwh: f64,
    min_price_eur: f64,
    max_price_eur: f64,
}

#[derive(Serialize)]
struct Region<'a> {
    tariff: &'static str,
    operator_capacity_kwh: f64,
    non_empty: bool,
    points: &'a [FeasiblePoint],
}

fn price_range(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    let c = community(cfg)?;
    let lo = min_curve(cfg, &c.inputs.day_ahead)?;
    let scn = scenario(cfg, &c, c.generation.clone(), c.turbine_cost_eur)?;
    let hi = max_price_curve(&scn, &cfg.sweep.capacities_kwh)?;
    let region = feasible_region(&hi, &lo)?;
    write_rows(
        &out.join("price_range.csv"),
        lo.points().iter().zip(hi.points()).map(|(&(c, min), &(_, max))| PriceRangeRow {
            capacity_kwh: c,
            min_price_eur: min,
            max_price_eur: max,
        }),
    )?;
    write_json(
        &out.join("feasible_region.json"),
        &Region {
            tariff: cfg.tariff.label(),
            operator_capacity_kwh: cfg.market.capacity_kwh,
            non_empty: !region.is_empty(),
            points: &region,
        },
    )?;
    match (region.first(), region.last()) {
        (Some(a), Some(b)) => println!(
            "feasible for {} of {} capacities, {:.2} to {:.2} kWh",
            region.len(),
            hi.len(),
            a.capacity_kwh,
            b.capacity_kwh
        ),
        _ => println!("no capacity has a feasible rental price"),
    }
    Ok(())
}

#[derive(Serialize)]
struct CosizingRow {
    r_gen: f64,
    optimal_capacity_kwh: f64,
    annual_cost_eur: f64,
    annual_savings_eur: f64,
}

#[derive(Serialize)]
struct SizeReport<'a> {
    base: &'a ScenarioResult,
    best_cosized: Option<&'a ScenarioResult>,
}

fn size(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    let c = community(cfg)?;
    let lo = min_curve(cfg, &c.inputs.day_ahead)?;
    let caps = &cfg.sweep.capacities_kwh;
    let base = optimal_capacity(&scenario(cfg, &c, c.generation.clone(), c.turbine_cost_eur)?, caps, &lo)?;
    let raw = scenario(cfg, &c, c.inputs.generation.clone(), c.turbine_cost_eur)?;
    let cosized = cosize_generation(&raw, &cfg.turbine.model(), &cfg.sweep.r_values, caps, &lo)?;
    write_rows(&out.join("sizing.csv"), base.rows.iter().copied())?;
    write_rows(
        &out.join("cosizing.csv"),
        cosized.iter().map(|(r, s)| CosizingRow {
            r_gen: *r,
            optimal_capacity_kwh: s.optimal_capacity_kwh,
            annual_cost_eur: s.annual_cost_eur,
            annual_savings_eur: s.annual_savings_eur,
        }),
    )?;
    let best = best_coefficient(&cosized).map(|(_, s)| s);
    write_json(
        &out.join("scenario_result.json"),
        &SizeReport {
            base: &base.result,
            best_cosized: best,
        },
    )?;
    println!(
        "optimal capacity {:.2} kWh: cost €{:.2}/yr, savings €{:.2}/yr",
        base.result.optimal_capacity_kwh, base.result.annual_cost_eur, base.result.annual_savings_eur
    );
    if let Some(b) = best {
        println!(
            "co-sized: r_gen {:.2}, {:.2} kWh, cost €{:.2}/yr",
            b.r_gen, b.optimal_capacity_kwh, b.annual_cost_eur
        );
    }
    Ok(())
}

fn gen_data(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    let demand = gen_demand(&cfg.synth)?;
    demand.write_csv(&out.join("demand.csv"))?;
    gen_wind(&cfg.synth)?.write_csv(&out.join("wind.csv"), "wind_speed_ms")?;
    gen_prices(&cfg.synth)?.write_csv(&out.join("day_ahead.csv"), "price_eur_per_mwh")?;
    println!(
        "wrote {} households over {} days (seed {})",
        demand.count(),
        cfg.synth.days,
        cfg.synth.seed
    );
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path).map_err(io_err(path))?);
    for row in rows {
        w.serialize(row).map_err(Error::from)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("summaries serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))?;
    Ok(())
}

//! `price`, `tune`, `fft` and `mc`.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use soa_core::fft::{fft_price_ladder, StrikeLadder};
use soa_core::mc::{mc_price, McConfig};
use soa_core::quad::{price_single, QuadratureConfig};
use soa_core::tuner::{reference_cases, tune as run_tuner, TunerGrid};
use soa_core::{ModelKind, ModelSpec, OffsetKind, OptionKind, OptionSpec};

use crate::config::{layered, required};
use crate::{fmt17, write_text, CliError, Outcome, Result};

fn parse<T: std::str::FromStr<Err = soa_core::PricingError>>(s: &str) -> Result<T> {
    s.parse::<T>().map_err(CliError::from)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// gbm, heston or evgp.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub v0: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
}

impl ModelArgs {
    pub fn spec(&self) -> Result<ModelSpec> {
        let kind: ModelKind = parse(&required(&self.model, "model")?)?;
        let spec = match kind {
            ModelKind::Gbm => ModelSpec::Gbm { sigma: required(&self.sigma, "sigma")? },
            ModelKind::Heston => ModelSpec::Heston {
                kappa: required(&self.kappa, "kappa")?,
                theta: required(&self.theta, "theta")?,
                sigma: required(&self.sigma, "sigma")?,
                rho: required(&self.rho, "rho")?,
                v0: required(&self.v0, "v0")?,
            },
            ModelKind::Evgp => ModelSpec::Evgp {
                theta: required(&self.theta, "theta")?,
                sigma: required(&self.sigma, "sigma")?,
                nu: required(&self.nu, "nu")?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    fn gbm_default() -> Self {
        ModelArgs { model: Some("gbm".into()), ..ModelArgs::default() }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct MarketArgs {
    /// european or digital.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub s0: Option<f64>,
    /// Maturity in years.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
}

impl MarketArgs {
    fn reference() -> Self {
        MarketArgs { kind: Some("european".into()), s0: Some(150.0), t: Some(0.25), r: Some(0.02) }
    }

    fn kind(&self) -> Result<OptionKind> {
        parse(&required(&self.kind, "kind")?)
    }

    fn option(&self, strike: f64) -> Result<OptionSpec> {
        let o = OptionSpec::new(
            self.kind()?,
            required(&self.s0, "s0")?,
            strike,
            required(&self.t, "t")?,
            required(&self.r, "r")?,
        );
        o.validate()?;
        Ok(o)
    }
}

fn grid(offset: OffsetKind, b: Option<f64>, n: Option<usize>) -> QuadratureConfig {
    let tuned = match offset {
        OffsetKind::Smooth => QuadratureConfig::soa_tuned(),
        OffsetKind::CarrMadan => QuadratureConfig::cma_tuned(),
    };
    QuadratureConfig::new(offset, b.unwrap_or(tuned.b), n.unwrap_or(tuned.n))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct PriceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub market: MarketArgs,
    /// Strike.
    #[arg(long)]
    pub k: Option<f64>,
    /// smooth or cm.
    #[arg(long)]
    pub offset: Option<String>,
    /// Truncation point; defaults to the tuned value for the offset.
    #[arg(long = "B")]
    pub grid_b: Option<f64>,
    /// Even node count; defaults to the tuned value for the offset.
    #[arg(long = "N")]
    pub grid_n: Option<usize>,
    /// Also write the result row to this CSV file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn price(flags: &PriceArgs, section: Option<&toml::Value>) -> Result<Outcome> {
    let defaults = PriceArgs {
        model: ModelArgs::gbm_default(),
        market: MarketArgs::reference(),
        k: Some(100.0),
        offset: Some("smooth".into()),
        ..PriceArgs::default()
    };
    let a = layered(&defaults, section, flags)?;
    let model = a.model.spec()?;
    let option = a.market.option(required(&a.k, "k")?)?;
    let offset: OffsetKind = parse(&required(&a.offset, "offset")?)?;
    let cfg = grid(offset, a.grid_b, a.grid_n);
    let r = price_single(&option, &model, &cfg)?;
    let text = format!(
        "model,kind,offset,b,n,s0,k,t,r,price,normalized_price,clamped\n{},{},{},{},{},{},{},{},{},{},{},{}\n",
        model.kind().as_str(),
        option.kind.as_str(),
        offset.as_str(),
        fmt17(cfg.b),
        cfg.n,
        fmt17(option.market.s0),
        fmt17(option.strike),
        fmt17(option.market.t),
        fmt17(option.market.r),
        fmt17(r.price),
        fmt17(r.normalized_price),
        r.clamped
    );
    print!("{text}");
    let mut outcome = Outcome::new(&PriceArgs { grid_b: Some(cfg.b), grid_n: Some(cfg.n), ..a.clone() })?;
    if let Some(out) = &a.out {
        write_text(out, &text)?;
        outcome.outputs.push(out.clone());
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct TuneArgs {
    #[arg(long)]
    pub offset: Option<String>,
    #[arg(long)]
    pub b_min: Option<f64>,
    #[arg(long)]
    pub b_max: Option<f64>,
    #[arg(long)]
    pub db: Option<f64>,
    #[arg(long)]
    pub iota_min: Option<f64>,
    #[arg(long)]
    pub iota_max: Option<f64>,
    #[arg(long)]
    pub diota: Option<f64>,
    /// Mean relative-error threshold in basis points.
    #[arg(long)]
    pub e_th_bps: Option<f64>,
    /// Monte Carlo paths for the non-GBM benchmarks.
    #[arg(long)]
    pub mc_paths: Option<usize>,
    #[arg(long)]
    pub mc_seed: Option<u64>,
    #[arg(long)]
    pub steps_per_year: Option<usize>,
    /// CSV of every evaluated configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn tune(flags: &TuneArgs, section: Option<&toml::Value>) -> Result<Outcome> {
    let g = TunerGrid::default();
    let mc = McConfig::default();
    let defaults = TuneArgs {
        offset: Some("smooth".into()),
        b_min: Some(g.b_min),
        b_max: Some(g.b_max),
        db: Some(g.db),
        iota_min: Some(g.iota_min),
        iota_max: Some(g.iota_max),
        diota: Some(g.diota),
        e_th_bps: Some(g.e_th_bps),
        mc_paths: Some(mc.paths),
        mc_seed: Some(mc.seed),
        steps_per_year: Some(mc.steps_per_year),
        out: None,
    };
    let a = layered(&defaults, section, flags)?;
    let offset: OffsetKind = parse(&required(&a.offset, "offset")?)?;
    let grid = TunerGrid {
        b_min: required(&a.b_min, "b-min")?,
        b_max: required(&a.b_max, "b-max")?,
        db: required(&a.db, "db")?,
        iota_min: required(&a.iota_min, "iota-min")?,
        iota_max: required(&a.iota_max, "iota-max")?,
        diota: required(&a.diota, "diota")?,
        e_th_bps: required(&a.e_th_bps, "e-th-bps")?,
    };
    let mc = McConfig {
        paths: required(&a.mc_paths, "mc-paths")?,
        seed: required(&a.mc_seed, "mc-seed")?,
        steps_per_year: required(&a.steps_per_year, "steps-per-year")?,
    };
    let cases = reference_cases(&mc)?;
    let report = run_tuner(offset, &grid, &cases)?;
    println!(
        "B*={} N*={} iota*={} mean_error_bps={}",
        report.b,
        report.n,
        fmt17(report.iota),
        fmt17(report.mean_error_bps)
    );
    println!("case,benchmark,source,error_bps");
    for ((label, err), (_, bench, source)) in report.case_errors_bps.iter().zip(&report.benchmarks) {
        let source = match source {
            soa_core::tuner::BenchmarkSource::ClosedForm => "closed_form",
            soa_core::tuner::BenchmarkSource::MonteCarlo { .. } => "monte_carlo",
        };
        println!("{label},{},{source},{}", fmt17(*bench), fmt17(*err));
    }
    let mut outcome = Outcome::new(&a)?;
    outcome.seeds.push(mc.seed);
    if let Some(out) = &a.out {
        write_text(out, &report.trace_csv())?;
        outcome.outputs.push(out.clone());
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct FftArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub market: MarketArgs,
    /// CSV with one strike per row (an optional `strike` header is skipped);
    /// defaults to 50, 51, ..., 150.
    #[arg(long)]
    pub strikes: Option<PathBuf>,
    #[arg(long)]
    pub offset: Option<String>,
    #[arg(long = "B")]
    pub grid_b: Option<f64>,
    #[arg(long = "N")]
    pub grid_n: Option<usize>,
    /// Output CSV with columns strike, price, flag_otm_unstable.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_strikes(path: &std::path::Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut strikes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let cell = line.split(',').next().unwrap_or("").trim();
        if cell.is_empty() || (i == 0 && cell.eq_ignore_ascii_case("strike")) {
            continue;
        }
        strikes.push(
            cell.parse::<f64>().map_err(|e| CliError::Validation(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(strikes)
}

pub fn fft(flags: &FftArgs, section: Option<&toml::Value>) -> Result<Outcome> {
    let defaults = FftArgs {
        model: ModelArgs::gbm_default(),
        market: MarketArgs::reference(),
        offset: Some("smooth".into()),
        ..FftArgs::default()
    };
    let a = layered(&defaults, section, flags)?;
    let model = a.model.spec()?;
    let offset: OffsetKind = parse(&required(&a.offset, "offset")?)?;
    let cfg = grid(offset, a.grid_b, a.grid_n);
    let strikes = match &a.strikes {
        Some(p) => read_strikes(p)?,
        None => (50..=150).map(f64::from).collect(),
    };
    let ladder = StrikeLadder::new(
        a.market.kind()?,
        required(&a.market.s0, "s0")?,
        required(&a.market.r, "r")?,
        required(&a.market.t, "t")?,
        strikes,
    );
    let res = fft_price_ladder(&ladder, &model, offset, cfg.b, cfg.n)?;
    let mut text = String::from("strike,price,flag_otm_unstable\n");
    for ((k, p), f) in ladder.strikes.iter().zip(&res.prices).zip(&res.flag_otm_unstable) {
        text.push_str(&format!("{},{},{}\n", fmt17(*k), fmt17(*p), f));
    }
    let mut outcome = Outcome::new(&FftArgs { grid_b: Some(cfg.b), grid_n: Some(cfg.n), ..a.clone() })?;
    match &a.out {
        Some(out) => {
            write_text(out, &text)?;
            outcome.outputs.push(out.clone());
        }
        None => print!("{text}"),
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct McArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub market: MarketArgs,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub steps_per_year: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn mc(flags: &McArgs, section: Option<&toml::Value>) -> Result<Outcome> {
    let d = McConfig::default();
    let defaults = McArgs {
        model: ModelArgs::gbm_default(),
        market: MarketArgs::reference(),
        k: Some(100.0),
        paths: Some(d.paths),
        seed: Some(d.seed),
        steps_per_year: Some(d.steps_per_year),
        out: None,
    };
    let a = layered(&defaults, section, flags)?;
    let model = a.model.spec()?;
    let option = a.market.option(required(&a.k, "k")?)?;
    let cfg = McConfig {
        paths: required(&a.paths, "paths")?,
        seed: required(&a.seed, "seed")?,
        steps_per_year: required(&a.steps_per_year, "steps-per-year")?,
    };
    let r = mc_price(&option, &model, &cfg)?;
    let text = format!("price,std_error,paths,seed\n{},{},{},{}\n", fmt17(r.price), fmt17(r.std_error), r.paths, r.seed);
    print!("{text}");
    let mut outcome = Outcome::new(&a)?;
    outcome.seeds.push(cfg.seed);
    if let Some(out) = &a.out {
        write_text(out, &text)?;
        outcome.outputs.push(out.clone());
    }
    Ok(outcome)
}

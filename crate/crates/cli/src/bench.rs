//! `bench` and `report`, plus the timed workloads they share with the
//! acceptance suite.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use soa_core::bench::{abs_rel_errors, ols_origin, seconds, time_workload, timing_csv, ErrorMetrics, OriginRegressionResult, TimingSample};
use soa_core::dataset::{read_dataset, DatasetRecord, FeatureVector};
use soa_core::quad::{price_single, QuadratureConfig};
use soa_core::tuner::{node_count, reference_models, reference_option};
use soa_core::{ModelSpec, OffsetKind, OptionKind, OptionSpec};
use soa_surrogates::SurrogateModel;

use crate::config::{layered, required};
use crate::{fmt17, with_suffix, write_text, CliError, Outcome, Result};

/// Contracts, encoded features and labels of a test set.
#[derive(Debug, Clone)]
pub struct Workload {
    pub contracts: Vec<(OptionSpec, ModelSpec)>,
    pub features: Vec<FeatureVector>,
    pub labels: Vec<f64>,
}

impl Workload {
    pub fn from_records(records: &[DatasetRecord]) -> Result<Self> {
        Ok(Workload {
            contracts: records.iter().map(|r| r.contract()).collect::<soa_core::Result<_>>()?,
            features: records.iter().map(|r| r.features).collect(),
            labels: records.iter().map(|r| r.y).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Normalized one-by-one quadrature prices; failed contracts give NaN.
pub fn obo_prices(contracts: &[(OptionSpec, ModelSpec)], cfg: &QuadratureConfig) -> Vec<f64> {
    contracts
        .iter()
        .map(|(o, m)| price_single(o, m, cfg).map(|r| r.normalized_price).unwrap_or(f64::NAN))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Regressand, timed per repetition.
    pub y: String,
    /// Regressor.
    pub x: String,
    pub result: OriginRegressionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub n_options: usize,
    pub repetitions: usize,
    pub mean_seconds: Vec<(String, f64)>,
    pub regressions: Vec<Comparison>,
    /// Errors over the contracts each method priced.
    pub errors: Vec<(String, ErrorMetrics)>,
    /// Contracts each method failed to price.
    pub failures: Vec<(String, usize)>,
    pub timings: Vec<TimingSample>,
}

pub const SOA_LABEL: &str = "soa-obo";
pub const CMA_LABEL: &str = "cma-obo";

/// Error metrics over the finite predictions, plus the count of the others.
pub fn errors_where_priced(predicted: &[f64], actual: &[f64]) -> Result<(ErrorMetrics, usize)> {
    let (p, a): (Vec<f64>, Vec<f64>) = predicted.iter().zip(actual).filter(|(p, _)| p.is_finite()).unzip();
    if p.is_empty() {
        return Err(CliError::Numeric("no contract of the workload could be priced".into()));
    }
    Ok((abs_rel_errors(&p, &a)?, predicted.len() - p.len()))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Time tuned SOA and CMA quadrature and each surrogate on the workload, then
/// regress CMA→SOA and SOA→surrogate times through the origin.
pub fn run_bench(work: &Workload, models: &[(String, SurrogateModel)], repetitions: usize) -> Result<BenchSummary> {
    if work.is_empty() {
        return Err(CliError::Validation("benchmark workload is empty".into()));
    }
    let soa = QuadratureConfig::soa_tuned();
    let cma = QuadratureConfig::cma_tuned();
    let mut timings = Vec::new();
    let mut errors = Vec::new();
    let mut failures = Vec::new();
    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    for (label, cfg) in [(SOA_LABEL, soa), (CMA_LABEL, cma)] {
        let t = time_workload(label, || obo_prices(&work.contracts, &cfg), repetitions)?;
        let (e, failed) = errors_where_priced(&obo_prices(&work.contracts, &cfg), &work.labels)?;
        errors.push((label.to_string(), e));
        failures.push((label.to_string(), failed));
        series.push((label.to_string(), seconds(&t)));
        timings.extend(t);
    }
    for (label, model) in models {
        let t = time_workload(label, || model.predict_batch(&work.features), repetitions)?;
        let (e, failed) = errors_where_priced(&model.predict_batch(&work.features)?, &work.labels)?;
        errors.push((label.clone(), e));
        failures.push((label.clone(), failed));
        series.push((label.clone(), seconds(&t)));
        timings.extend(t);
    }
    let find = |l: &str| &series.iter().find(|s| s.0 == l).unwrap().1;
    let mut regressions = Vec::new();
    if repetitions >= 2 {
        regressions.push(Comparison {
            y: SOA_LABEL.into(),
            x: CMA_LABEL.into(),
            result: ols_origin(find(CMA_LABEL), find(SOA_LABEL))?,
        });
        for (label, _) in models {
            regressions.push(Comparison { y: label.clone(), x: SOA_LABEL.into(), result: ols_origin(find(SOA_LABEL), find(label))? });
        }
    }
    Ok(BenchSummary {
        n_options: work.len(),
        repetitions,
        mean_seconds: series.iter().map(|(l, s)| (l.clone(), mean(s))).collect(),
        regressions,
        errors,
        failures,
        timings,
    })
}

fn parse_list(s: &Option<String>) -> Vec<PathBuf> {
    s.as_deref()
        .map(|s| s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(PathBuf::from).collect())
        .unwrap_or_default()
}

fn load_models(paths: &[PathBuf]) -> Result<Vec<(String, SurrogateModel)>> {
    paths
        .iter()
        .map(|p| {
            let m = SurrogateModel::load(p)?;
            Ok((m.algorithm().as_str().to_string(), m))
        })
        .collect()
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    /// Test dataset file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated model files.
    #[arg(long)]
    pub models: Option<String>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Use only the first records of the dataset.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Timing CSV; the summary goes to the same path with `.json` appended.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn bench(flags: &BenchArgs, section: Option<&toml::Value>) -> Result<Outcome> {
    let defaults = BenchArgs { repetitions: Some(10), limit: Some(10_000), out: Some("bench.csv".into()), ..BenchArgs::default() };
    let a = layered(&defaults, section, flags)?;
    let (_, mut records) = read_dataset(&required(&a.data, "data")?)?;
    records.truncate(required(&a.limit, "limit")?);
    let work = Workload::from_records(&records)?;
    let models = load_models(&parse_list(&a.models))?;
    let reps = required(&a.repetitions, "repetitions")?;
    // timings are single-threaded regardless of --workers
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| CliError::Validation(e.to_string()))?;
    let summary = pool.install(|| run_bench(&work, &models, reps))?;
    let out = required(&a.out, "out")?;
    write_text(&out, &timing_csv(&summary.timings))?;
    let json = with_suffix(&out, ".json");
    write_text(&json, &serde_json::to_string_pretty(&summary)?)?;
    println!("label,mean_seconds,per_option_seconds");
    for (l, s) in &summary.mean_seconds {
        println!("{l},{},{}", fmt17(*s), fmt17(s / summary.n_options as f64));
    }
    let mut outcome = Outcome::new(&a)?;
    outcome.outputs = vec![out, json];
    Ok(outcome)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Summary JSON written by bench.
    #[arg(long)]
    pub bench: Option<PathBuf>,
    /// Comma-separated model files whose loss traces to export.
    #[arg(long)]
    pub models: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Largest truncation point in the price-versus-B data.
    #[arg(long)]
    pub b_max: Option<f64>,
    #[arg(long)]
    pub db: Option<f64>,
}

fn regression_table(rows: &[&Comparison]) -> String {
    let mut t = String::from("y,x,beta,std_error,t_stat,p_value,ci_low,ci_high,n\n");
    for c in rows {
        let r = &c.result;
        t.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            c.y,
            c.x,
            fmt17(r.beta),
            fmt17(r.std_error),
            fmt17(r.t_stat),
            fmt17(r.p_value),
            fmt17(r.ci_low),
            fmt17(r.ci_high),
            r.n
        ));
    }
    t
}

/// Prices of the six reference cases against the truncation point, `N = ⌊1.6B⌋`.
pub fn price_versus_b(b_max: f64, db: f64) -> Result<String> {
    if !(db > 0.0) || !(b_max >= db) {
        return Err(CliError::Validation(format!("bad B range: db = {db}, b_max = {b_max}")));
    }
    let mut t = String::from("model,kind,offset,b,n,price\n");
    let steps = (b_max / db + 1e-9).floor() as usize;
    for (name, model) in reference_models() {
        for kind in [OptionKind::European, OptionKind::Digital] {
            let o = reference_option(kind);
            for offset in [OffsetKind::Smooth, OffsetKind::CarrMadan] {
                for i in 1..=steps {
                    let b = i as f64 * db;
                    let n = node_count(b, 1.6);
                    let p = price_single(&o, &model, &QuadratureConfig::new(offset, b, n)).map(|r| r.price).unwrap_or(f64::NAN);
                    t.push_str(&format!("{name},{},{},{},{n},{}\n", kind.as_str(), offset.as_str(), fmt17(b), fmt17(p)));
                }
            }
        }
    }
    Ok(t)
}

pub fn report(flags: &ReportArgs, section: Option<&toml::Value>) -> Result<Outcome> {
    let defaults = ReportArgs { out_dir: Some("report".into()), b_max: Some(400.0), db: Some(10.0), ..ReportArgs::default() };
    let a = layered(&defaults, section, flags)?;
    let dir = required(&a.out_dir, "out-dir")?;
    let mut outputs = Vec::new();
    let mut emit = |name: &str, text: String| -> Result<()> {
        let p = dir.join(name);
        write_text(&p, &text)?;
        outputs.push(p);
        Ok(())
    };
    if let Some(path) = &a.bench {
        let summary: BenchSummary = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let (t3, t5): (Vec<&Comparison>, Vec<&Comparison>) = summary.regressions.iter().partition(|c| c.x == CMA_LABEL);
        emit("table3.csv", regression_table(&t3))?;
        emit("table5.csv", regression_table(&t5))?;
        let mut t7 = String::from("label,absolute,relative_bps,n,n_relative,failed\n");
        for ((l, m), (_, failed)) in summary.errors.iter().zip(&summary.failures) {
            t7.push_str(&format!(
                "{l},{},{},{},{},{failed}\n",
                fmt17(m.absolute),
                fmt17(m.relative_bps()),
                m.n,
                m.n_relative
            ));
        }
        emit("table7.csv", t7)?;
    }
    let models = load_models(&parse_list(&a.models))?;
    if !models.is_empty() {
        let mut f = String::from("model,step,loss\n");
        for (l, m) in &models {
            for (i, v) in m.metadata.loss_trace.iter().enumerate() {
                f.push_str(&format!("{l},{i},{}\n", fmt17(*v)));
            }
        }
        emit("figure11.csv", f)?;
    }
    emit("figure4.csv", price_versus_b(required(&a.b_max, "b-max")?, required(&a.db, "db")?)?)?;
    for p in &outputs {
        println!("{}", p.display());
    }
    let mut outcome = Outcome::new(&a)?;
    outcome.outputs = outputs;
    Ok(outcome)
}

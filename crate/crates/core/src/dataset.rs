//! Random contracts, feature encoding and smooth-offset labels for surrogate
//! training.
//!
//! Feature layout: `[OpType, K', T, r, σ, κ, θ, ρ, V0, ν]` with `-1` in the
//! slots a model does not use. Labels are normalized prices (`s0 = 1`).

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::models::{ModelKind, ModelSpec};
use crate::offsets::{offset_value, Eta, OffsetKind, OptionKind, OptionSpec};
use crate::quad::{clamp_normalized, modified_price, QuadratureConfig, NEGATIVE_TOLERANCE};
use crate::tuner::node_count;

pub const FEATURES: usize = 10;
pub const SENTINEL: f64 = -1.0;
pub const FEATURE_NAMES: [&str; FEATURES] = ["op_type", "k_prime", "t", "r", "sigma", "kappa", "theta", "rho", "v0", "nu"];
pub const GENERATOR_VERSION: &str = concat!("soa-core ", env!("CARGO_PKG_VERSION"));

const SHARD: usize = 1024;
const MAX_RESAMPLES: usize = 100;
const VOL_FLOOR: f64 = 1e-3;
const T_FLOOR: f64 = 1.0 / 365.0;

pub type FeatureVector = [f64; FEATURES];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.lo + (self.hi - self.lo) * u
    }

    /// Uniform draw lifted to `floor` where the interval allows it.
    fn sample_floored<R: Rng>(&self, rng: &mut R, floor: f64) -> f64 {
        self.sample(rng).max(floor).min(self.hi)
    }
}

/// Uniform sampling bounds per attribute; `k_ratio` is `K / s0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingBounds {
    pub s0: Interval,
    pub k_ratio: Interval,
    pub t: Interval,
    pub r: Interval,
    pub sigma: Interval,
    pub kappa: Interval,
    pub theta: Interval,
    pub rho: Interval,
    pub v0: Interval,
    pub nu: Interval,
}

impl Default for SamplingBounds {
    fn default() -> Self {
        let p = Interval::new(0.0, 0.2);
        SamplingBounds {
            s0: Interval::new(140.0, 160.0),
            k_ratio: Interval::new(0.95, 1.05),
            t: Interval::new(0.0, 1.0),
            r: Interval::new(0.0, 0.05),
            sigma: p,
            kappa: p,
            theta: p,
            rho: p,
            v0: p,
            nu: p,
        }
    }
}

impl SamplingBounds {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("s0", self.s0),
            ("k_ratio", self.k_ratio),
            ("t", self.t),
            ("r", self.r),
            ("sigma", self.sigma),
            ("kappa", self.kappa),
            ("theta", self.theta),
            ("rho", self.rho),
            ("v0", self.v0),
            ("nu", self.nu),
        ];
        for (name, iv) in all {
            if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo <= iv.hi) {
                return Err(PricingError::InvalidArgument(format!("bad bounds for {name}: {iv:?}")));
            }
        }
        if self.s0.lo <= 0.0 || self.k_ratio.lo <= 0.0 || self.t.lo < 0.0 {
            return Err(PricingError::InvalidArgument("s0, K/s0 and T bounds must be positive".into()));
        }
        if self.rho.lo < -1.0 || self.rho.hi > 1.0 {
            return Err(PricingError::InvalidArgument("correlation bounds must lie in [-1, 1]".into()));
        }
        Ok(())
    }

    /// Per-slot interval for the feature vector (OpType excluded).
    fn slot(&self, i: usize) -> Interval {
        match i {
            1 => self.k_ratio,
            2 => self.t,
            3 => self.r,
            4 => self.sigma,
            5 => self.kappa,
            6 => self.theta,
            7 => self.rho,
            8 => self.v0,
            9 => self.nu,
            _ => Interval::new(0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelMix {
    Uniform,
    Gbm,
    Heston,
    Evgp,
}

impl ModelMix {
    fn pick<R: Rng>(self, rng: &mut R) -> ModelKind {
        match self {
            ModelMix::Uniform => [ModelKind::Gbm, ModelKind::Heston, ModelKind::Evgp][rng.random_range(0..3)],
            ModelMix::Gbm => ModelKind::Gbm,
            ModelMix::Heston => ModelKind::Heston,
            ModelMix::Evgp => ModelKind::Evgp,
        }
    }
}

impl std::str::FromStr for ModelMix {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" | "all" => Ok(ModelMix::Uniform),
            "gbm" => Ok(ModelMix::Gbm),
            "heston" => Ok(ModelMix::Heston),
            "evgp" => Ok(ModelMix::Evgp),
            other => Err(PricingError::Parse(format!("unknown model mix '{other}'"))),
        }
    }
}

/// Draw one contract. `OpType ~ Bernoulli(1/2)`, the model from `mix`, the
/// rest uniformly, with volatility-like parameters floored at `1e-3` and `T`
/// at one day.
pub fn sample_contract<R: Rng>(bounds: &SamplingBounds, mix: ModelMix, rng: &mut R) -> Result<(OptionSpec, ModelSpec)> {
    let kind = if rng.random::<f64>() < 0.5 { OptionKind::Digital } else { OptionKind::European };
    let model_kind = mix.pick(rng);
    let s0 = bounds.s0.sample(rng);
    let strike = bounds.k_ratio.sample(rng) * s0;
    let t = bounds.t.sample_floored(rng, T_FLOOR);
    let r = bounds.r.sample(rng);
    let option = OptionSpec::new(kind, s0, strike, t, r);
    for _ in 0..MAX_RESAMPLES {
        let model = match model_kind {
            ModelKind::Gbm => ModelSpec::Gbm { sigma: bounds.sigma.sample_floored(rng, VOL_FLOOR) },
            ModelKind::Heston => ModelSpec::Heston {
                kappa: bounds.kappa.sample(rng),
                theta: bounds.theta.sample_floored(rng, VOL_FLOOR),
                sigma: bounds.sigma.sample_floored(rng, VOL_FLOOR),
                rho: bounds.rho.sample(rng),
                v0: bounds.v0.sample_floored(rng, VOL_FLOOR),
            },
            ModelKind::Evgp => ModelSpec::Evgp {
                theta: bounds.theta.sample(rng),
                sigma: bounds.sigma.sample_floored(rng, VOL_FLOOR),
                nu: bounds.nu.sample_floored(rng, VOL_FLOOR),
            },
        };
        if model.validate().is_ok() {
            return Ok((option, model));
        }
    }
    Err(PricingError::Domain(format!("no admissible {} draw after {MAX_RESAMPLES} attempts", model_kind.as_str())))
}

pub fn encode(opt: &OptionSpec, model: &ModelSpec) -> FeatureVector {
    let op = match opt.kind {
        OptionKind::European => 1.0,
        OptionKind::Digital => 0.0,
    };
    let mut x = [SENTINEL; FEATURES];
    x[0] = op;
    x[1] = opt.strike / opt.market.s0;
    x[2] = opt.market.t;
    x[3] = opt.market.r;
    match *model {
        ModelSpec::Gbm { sigma } => x[4] = sigma,
        ModelSpec::Heston { kappa, theta, sigma, rho, v0 } => {
            x[4] = sigma;
            x[5] = kappa;
            x[6] = theta;
            x[7] = rho;
            x[8] = v0;
        }
        ModelSpec::Evgp { theta, sigma, nu } => {
            x[4] = sigma;
            x[6] = theta;
            x[9] = nu;
        }
    }
    x
}

/// Inverse of [`encode`] for a given spot.
pub fn decode(x: &FeatureVector, s0: f64) -> Result<(OptionSpec, ModelSpec)> {
    let kind = match x[0] {
        v if v == 1.0 => OptionKind::European,
        v if v == 0.0 => OptionKind::Digital,
        v => return Err(PricingError::InvalidArgument(format!("OpType must be 0 or 1, got {v}"))),
    };
    let used: Vec<bool> = x[5..].iter().map(|&v| v != SENTINEL).collect();
    let model = match used.as_slice() {
        [false, false, false, false, false] => ModelSpec::Gbm { sigma: x[4] },
        [true, true, true, true, false] => ModelSpec::Heston { kappa: x[5], theta: x[6], sigma: x[4], rho: x[7], v0: x[8] },
        [false, true, false, false, true] => ModelSpec::Evgp { theta: x[6], sigma: x[4], nu: x[9] },
        _ => return Err(PricingError::InvalidArgument(format!("sentinel pattern matches no model: {x:?}"))),
    };
    let opt = OptionSpec { kind, strike: x[1] * s0, market: crate::models::MarketSpec::new(s0, x[3], x[2]) };
    if s0 == 1.0 {
        // keep the strike bit-exact for normalized contracts
        return Ok((OptionSpec { strike: x[1], ..opt }, model));
    }
    Ok((opt, model))
}

pub fn model_kind_of(x: &FeatureVector) -> Option<ModelKind> {
    decode(x, 1.0).ok().map(|(_, m)| m.kind())
}

/// `((s0 - 1) OpType + 1) y`.
pub fn rescale_price(y: f64, s0: f64, op_type: f64) -> f64 {
    ((s0 - 1.0) * op_type + 1.0) * y
}

/// Smooth-offset pricer that doubles the truncation point until the tail
/// `(1/π)∫_B^{2B} |η|` falls below `tail_tol`, keeping `N ≈ ιB`, then halves
/// the step until successive Simpson sums agree to `step_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Labeler {
    pub b0: f64,
    pub iota: f64,
    pub max_doublings: u32,
    pub tail_tol: f64,
    pub max_refinements: u32,
    pub step_tol: f64,
}

impl Default for Labeler {
    fn default() -> Self {
        Labeler { b0: 40.0, iota: 1.6, max_doublings: 12, tail_tol: 2e-8, max_refinements: 4, step_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub y: f64,
    pub b: f64,
    pub n: usize,
    pub converged: bool,
}

impl Labeler {
    /// A labeler that never refines: plain pricing at `(b, n)`.
    pub fn fixed(b: f64, n: usize) -> Self {
        Labeler {
            b0: b,
            iota: n as f64 / b,
            max_doublings: 0,
            // finite so the header stays valid JSON
            tail_tol: f64::MAX,
            max_refinements: 0,
            step_tol: f64::MAX,
        }
    }

    fn tail_mass(eta: &Eta, b: f64) -> Result<f64> {
        const M: usize = 32;
        let h = b / M as f64;
        let mut acc = 0.0;
        for j in 0..=M {
            let w = if j == 0 || j == M {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * eta.at(b + j as f64 * h)?.norm();
        }
        Ok(acc * h / 3.0 / PI)
    }

    /// Normalized smooth-offset price of `opt` under `model`.
    pub fn label(&self, opt: &OptionSpec, model: &ModelSpec) -> Result<Label> {
        opt.validate()?;
        let norm = OptionSpec::new(opt.kind, 1.0, opt.strike / opt.market.s0, opt.market.t, opt.market.r);
        let eta = Eta::new(OffsetKind::Smooth, norm.kind, model, &norm.market)?;
        let k = norm.log_strike();
        let mut b = self.b0;
        let mut converged = false;
        for d in 0..=self.max_doublings {
            if Self::tail_mass(&eta, b)? <= self.tail_tol {
                converged = true;
                break;
            }
            if d < self.max_doublings {
                b *= 2.0;
            }
        }
        let mut cfg = QuadratureConfig::new(OffsetKind::Smooth, b, node_count(b, self.iota).max(2));
        let mut v = modified_price(&eta, k, &cfg)?;
        // refining the step cannot repair an unconverged truncation
        let refinements = if converged { self.max_refinements } else { 0 };
        for r in 0..refinements {
            let finer = QuadratureConfig { n: 2 * cfg.n, ..cfg };
            let w = modified_price(&eta, k, &finer)?;
            let settled = (w - v).abs() <= self.step_tol;
            (cfg, v) = (finer, w);
            if settled {
                break;
            }
            if r + 1 == refinements {
                converged = false;
            }
        }
        let raw = v + offset_value(OffsetKind::Smooth, norm.kind, k, norm.market.r, norm.market.t)?;
        let (y, _) = clamp_normalized(raw, &cfg)?;
        let cap = match norm.kind {
            OptionKind::European => 1.0,
            OptionKind::Digital => (-norm.market.r * norm.market.t).exp(),
        };
        if y > cap + NEGATIVE_TOLERANCE {
            return Err(PricingError::QuadratureDiagnostic { price: y, b: cfg.b, n: cfg.n });
        }
        Ok(Label { y: y.min(cap), b, n: cfg.n, converged })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub features: FeatureVector,
    pub y: f64,
    pub model: ModelKind,
    pub s0_raw: f64,
    pub k_raw: f64,
}

impl DatasetRecord {
    pub fn op_type(&self) -> f64 {
        self.features[0]
    }

    pub fn actual_price(&self) -> f64 {
        rescale_price(self.y, self.s0_raw, self.op_type())
    }

    pub fn contract(&self) -> Result<(OptionSpec, ModelSpec)> {
        let (opt, model) = decode(&self.features, self.s0_raw)?;
        Ok((OptionSpec { strike: self.k_raw, ..opt }, model))
    }

    pub fn to_json_line(&self) -> String {
        let mut s = String::with_capacity(360);
        s.push('{');
        for (name, v) in FEATURE_NAMES.iter().zip(self.features) {
            if *name == "op_type" {
                s.push_str(&format!("\"op_type\":{},", v as i64));
            } else {
                s.push_str(&format!("\"{name}\":{v:.16e},"));
            }
        }
        s.push_str(&format!(
            "\"y\":{:.16e},\"model\":\"{}\",\"s0_raw\":{:.16e},\"k_raw\":{:.16e}}}",
            self.y,
            self.model.as_str(),
            self.s0_raw,
            self.k_raw
        ));
        s
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Flat {
            op_type: f64,
            k_prime: f64,
            t: f64,
            r: f64,
            sigma: f64,
            kappa: f64,
            theta: f64,
            rho: f64,
            v0: f64,
            nu: f64,
            y: f64,
            model: ModelKind,
            s0_raw: f64,
            k_raw: f64,
        }
        let f: Flat = serde_json::from_str(line)?;
        Ok(DatasetRecord {
            features: [f.op_type, f.k_prime, f.t, f.r, f.sigma, f.kappa, f.theta, f.rho, f.v0, f.nu],
            y: f.y,
            model: f.model,
            s0_raw: f.s0_raw,
            k_raw: f.k_raw,
        })
    }
}

/// Check feature ranges, sentinel pattern and label bounds of one record.
pub fn validate_record(rec: &DatasetRecord, bounds: &SamplingBounds) -> Result<()> {
    let x = &rec.features;
    if x[0] != 0.0 && x[0] != 1.0 {
        return Err(PricingError::InvalidArgument(format!("OpType {} is not binary", x[0])));
    }
    for (i, &v) in x.iter().enumerate().skip(1) {
        if v != SENTINEL && !bounds.slot(i).contains(v) {
            return Err(PricingError::Domain(format!("{} = {v} outside {:?}", FEATURE_NAMES[i], bounds.slot(i))));
        }
    }
    for i in 1..5 {
        if x[i] == SENTINEL {
            return Err(PricingError::Domain(format!("{} cannot be a sentinel", FEATURE_NAMES[i])));
        }
    }
    match model_kind_of(x) {
        Some(k) if k == rec.model => {}
        _ => return Err(PricingError::Domain(format!("sentinel pattern disagrees with model tag {}", rec.model.as_str()))),
    }
    let cap = if x[0] == 1.0 { 1.0 } else { (-x[3] * x[2]).exp() };
    if !(rec.y >= 0.0 && rec.y <= cap + 1e-6) {
        return Err(PricingError::Domain(format!("label {} outside [0, {cap}]", rec.y)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n: usize,
    pub seed: u64,
    pub bounds: SamplingBounds,
    pub mix: ModelMix,
    pub labeler: Labeler,
}

impl GeneratorConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        GeneratorConfig { n, seed, bounds: SamplingBounds::default(), mix: ModelMix::Uniform, labeler: Labeler::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub generator_version: String,
    pub seed: u64,
    pub n_requested: usize,
    pub bounds: SamplingBounds,
    pub model_mix: ModelMix,
    pub labeler: Labeler,
    pub feature_order: Vec<String>,
}

impl DatasetHeader {
    pub fn new(cfg: &GeneratorConfig) -> Self {
        DatasetHeader {
            generator_version: GENERATOR_VERSION.into(),
            seed: cfg.seed,
            n_requested: cfg.n,
            bounds: cfg.bounds,
            model_mix: cfg.mix,
            labeler: cfg.labeler,
            feature_order: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub written: usize,
    pub skipped: usize,
    pub unconverged: usize,
}

struct ShardOutput {
    records: Vec<DatasetRecord>,
    skipped: usize,
    unconverged: usize,
}

fn generate_shard(cfg: &GeneratorConfig, shard: usize) -> Result<ShardOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(shard as u64);
    let count = SHARD.min(cfg.n - shard * SHARD);
    let mut out = ShardOutput { records: Vec::with_capacity(count), skipped: 0, unconverged: 0 };
    for _ in 0..count {
        let (opt, model) = sample_contract(&cfg.bounds, cfg.mix, &mut rng)?;
        match cfg.labeler.label(&opt, &model) {
            Ok(label) => {
                out.unconverged += usize::from(!label.converged);
                out.records.push(DatasetRecord {
                    features: encode(&opt, &model),
                    y: label.y,
                    model: model.kind(),
                    s0_raw: opt.market.s0,
                    k_raw: opt.strike,
                });
            }
            Err(e) if e.is_numeric() => out.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Generate shards in parallel and hand them to `sink` in shard order.
fn generate_with<F>(cfg: &GeneratorConfig, mut sink: F) -> Result<GenerationSummary>
where
    F: FnMut(&[DatasetRecord]) -> Result<()>,
{
    cfg.bounds.validate()?;
    let shards = cfg.n.div_ceil(SHARD);
    let wave = 4 * rayon::current_num_threads();
    let mut summary = GenerationSummary::default();
    let mut start = 0;
    while start < shards {
        let end = (start + wave).min(shards);
        let outs: Vec<ShardOutput> = (start..end).into_par_iter().map(|s| generate_shard(cfg, s)).collect::<Result<_>>()?;
        for o in outs {
            sink(&o.records)?;
            summary.written += o.records.len();
            summary.skipped += o.skipped;
            summary.unconverged += o.unconverged;
        }
        start = end;
    }
    Ok(summary)
}

pub fn generate(cfg: &GeneratorConfig) -> Result<(Vec<DatasetRecord>, GenerationSummary)> {
    let mut records = Vec::with_capacity(cfg.n);
    let summary = generate_with(cfg, |chunk| {
        records.extend_from_slice(chunk);
        Ok(())
    })?;
    Ok((records, summary))
}

/// Stream a generated dataset to a JSON-lines file with a header line.
pub fn generate_to_file(cfg: &GeneratorConfig, path: &Path) -> Result<GenerationSummary> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", serde_json::to_string(&serde_json::json!({ "header": DatasetHeader::new(cfg) }))?)?;
    let summary = generate_with(cfg, |chunk| {
        for r in chunk {
            writeln!(w, "{}", r.to_json_line())?;
        }
        Ok(())
    })?;
    w.flush()?;
    Ok(summary)
}

pub fn write_dataset(path: &Path, header: &DatasetHeader, records: &[DatasetRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", serde_json::to_string(&serde_json::json!({ "header": header }))?)?;
    for r in records {
        writeln!(w, "{}", r.to_json_line())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a JSON-lines dataset; the header line is optional.
pub fn read_dataset(path: &Path) -> Result<(Option<DatasetHeader>, Vec<DatasetRecord>)> {
    #[derive(Deserialize)]
    struct HeaderLine {
        header: DatasetHeader,
    }
    let reader = BufReader::new(File::open(path)?);
    let mut header = None;
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 && line.trim_start().starts_with("{\"header\"") {
            let h: HeaderLine = serde_json::from_str(&line)
                .map_err(|e| PricingError::Parse(format!("{}:1: bad header: {e}", path.display())))?;
            header = Some(h.header);
            continue;
        }
        records.push(
            DatasetRecord::from_json_line(&line)
                .map_err(|e| PricingError::Parse(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok((header, records))
}

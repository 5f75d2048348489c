//! Monte Carlo benchmarks for models without closed-form prices.
//!
//! Paths are simulated in fixed-size batches. Batch `i` draws from the ChaCha
//! stream `(seed, i)`, and batch sums are combined pairwise in batch order, so
//! the estimate does not depend on how rayon schedules the work.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::models::{MarketSpec, ModelSpec};
use crate::offsets::{OptionKind, OptionSpec};

const BATCH: usize = 8192;
pub const MIN_PATHS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: usize,
    /// Euler steps per year of maturity; only used by Heston.
    pub steps_per_year: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { paths: 1_000_000, steps_per_year: 512, seed: 20_240_601 }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths < MIN_PATHS {
            return Err(PricingError::InvalidArgument(format!(
                "at least {MIN_PATHS} paths are required, got {}",
                self.paths
            )));
        }
        if self.steps_per_year == 0 {
            return Err(PricingError::InvalidArgument("steps_per_year must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub price: f64,
    pub std_error: f64,
    pub paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfProbe {
    pub value: Complex64,
    pub se_re: f64,
    pub se_im: f64,
    pub paths: usize,
}

/// Draws of the compensated driver `X†_T = ln(S_T / s0) - rT`.
enum Sampler {
    Gbm { drift: f64, vol: f64 },
    Evgp { zeta_t: f64, theta: f64, sigma: f64, clock: Gamma<f64> },
    Heston { kappa: f64, theta: f64, sigma: f64, rho_c: f64, rho: f64, v0: f64, dt: f64, steps: usize },
}

impl Sampler {
    fn new(model: &ModelSpec, t: f64, steps_per_year: usize) -> Result<Self> {
        model.validate()?;
        if t == 0.0 {
            return Ok(Sampler::Gbm { drift: 0.0, vol: 0.0 });
        }
        Ok(match *model {
            ModelSpec::Gbm { sigma } => Sampler::Gbm { drift: -0.5 * sigma * sigma * t, vol: sigma * t.sqrt() },
            ModelSpec::Evgp { theta, sigma, nu } => {
                let zeta = model.compensator()?.unwrap_or(0.0);
                // shape T/ν, scale ν
                let clock = Gamma::new(t / nu, nu).map_err(|e| PricingError::Domain(format!("gamma clock: {e}")))?;
                Sampler::Evgp { zeta_t: zeta * t, theta, sigma, clock }
            }
            ModelSpec::Heston { kappa, theta, sigma, rho, v0 } => {
                let steps = ((steps_per_year as f64 * t).ceil() as usize).max(1);
                Sampler::Heston {
                    kappa,
                    theta,
                    sigma,
                    rho,
                    rho_c: (1.0 - rho * rho).max(0.0).sqrt(),
                    v0,
                    dt: t / steps as f64,
                    steps,
                }
            }
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Sampler::Gbm { drift, vol } => {
                let z: f64 = rng.sample(StandardNormal);
                drift + vol * z
            }
            Sampler::Evgp { zeta_t, theta, sigma, ref clock } => {
                let g = clock.sample(rng);
                let z: f64 = rng.sample(StandardNormal);
                zeta_t + theta * g + sigma * g.sqrt() * z
            }
            Sampler::Heston { kappa, theta, sigma, rho, rho_c, v0, dt, steps } => {
                let sdt = dt.sqrt();
                let (mut x, mut v) = (0.0, v0);
                for _ in 0..steps {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    let vp = v.max(0.0);
                    let sv = vp.sqrt();
                    x += -0.5 * vp * dt + sv * sdt * z1;
                    v += kappa * (theta - vp) * dt + sigma * sv * sdt * (rho * z1 + rho_c * z2);
                }
                x
            }
        }
    }
}

#[derive(Clone, Copy)]
struct Moments<const D: usize> {
    n: usize,
    sum: [f64; D],
    sumsq: [f64; D],
}

impl<const D: usize> Moments<D> {
    fn merge(a: Self, b: Self) -> Self {
        let mut out = a;
        out.n += b.n;
        for d in 0..D {
            out.sum[d] += b.sum[d];
            out.sumsq[d] += b.sumsq[d];
        }
        out
    }
}

fn pairwise<const D: usize>(parts: &[Moments<D>]) -> Moments<D> {
    match parts.len() {
        0 => Moments { n: 0, sum: [0.0; D], sumsq: [0.0; D] },
        1 => parts[0],
        len => {
            let (l, r) = parts.split_at(len / 2);
            Moments::merge(pairwise(l), pairwise(r))
        }
    }
}

/// Sample means and standard errors of `f(X†_T)` over `cfg.paths` draws.
fn simulate<const D: usize, F>(model: &ModelSpec, t: f64, cfg: &McConfig, f: F) -> Result<[(f64, f64); D]>
where
    F: Fn(f64) -> [f64; D] + Sync,
{
    cfg.validate()?;
    let sampler = Sampler::new(model, t, cfg.steps_per_year)?;
    let batches = cfg.paths.div_ceil(BATCH);
    let parts: Vec<Moments<D>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let n = BATCH.min(cfg.paths - b * BATCH);
            let mut m = Moments { n, sum: [0.0; D], sumsq: [0.0; D] };
            for _ in 0..n {
                let vals = f(sampler.draw(&mut rng));
                for d in 0..D {
                    m.sum[d] += vals[d];
                    m.sumsq[d] += vals[d] * vals[d];
                }
            }
            m
        })
        .collect();
    let total = pairwise(&parts);
    let n = total.n as f64;
    let mut out = [(0.0, 0.0); D];
    for d in 0..D {
        let mean = total.sum[d] / n;
        let var = ((total.sumsq[d] / n - mean * mean) * n / (n - 1.0)).max(0.0);
        out[d] = (mean, (var / n).sqrt());
    }
    Ok(out)
}

/// Discounted Monte Carlo price with its standard error, in currency units.
pub fn mc_price(opt: &OptionSpec, model: &ModelSpec, cfg: &McConfig) -> Result<McResult> {
    opt.validate()?;
    let MarketSpec { r, t, s0 } = opt.market;
    let df = (-r * t).exp();
    let fwd = s0 * (r * t).exp();
    let strike = opt.strike;
    let [(mean, se)] = match opt.kind {
        OptionKind::European => simulate(model, t, cfg, |x| [(fwd * x.exp() - strike).max(0.0)])?,
        OptionKind::Digital => simulate(model, t, cfg, |x| [if fwd * x.exp() >= strike { 1.0 } else { 0.0 }])?,
    };
    Ok(McResult { price: df * mean, std_error: df * se, paths: cfg.paths, seed: cfg.seed })
}

/// Discounted sample mean of `S_T`, used for martingale checks.
pub fn mc_discounted_terminal(model: &ModelSpec, market: &MarketSpec, cfg: &McConfig) -> Result<McResult> {
    market.validate()?;
    let [(mean, se)] = simulate(model, market.t, cfg, |x| [x.exp()])?;
    Ok(McResult { price: market.s0 * mean, std_error: market.s0 * se, paths: cfg.paths, seed: cfg.seed })
}

/// Sample estimate of `E[e^{iz X†_T}]` with component-wise standard errors.
pub fn mc_cf_probe(model: &ModelSpec, market: &MarketSpec, z: f64, cfg: &McConfig) -> Result<CfProbe> {
    market.validate()?;
    if z == 0.0 {
        cfg.validate()?;
        model.validate()?;
        return Ok(CfProbe { value: Complex64::new(1.0, 0.0), se_re: 0.0, se_im: 0.0, paths: cfg.paths });
    }
    let [(re, se_re), (im, se_im)] = simulate(model, market.t, cfg, |x| {
        let (s, c) = (z * x).sin_cos();
        [c, s]
    })?;
    Ok(CfProbe { value: Complex64::new(re, im), se_re, se_im, paths: cfg.paths })
}

//! Checks on the Fourier pricers, the tuner and the FFT ladder.

use soa_core::bench::ols_origin;
use soa_core::fft::{build_grid, dft, dft_direct, fft_inputs, fft_price_ladder, StrikeLadder};
use soa_core::mc::McConfig;
use soa_core::tuner::{reference_cases, reference_models, reference_option, tune, TunerGrid};
use soa_core::{closed_form_bs, price_single, Eta, ModelSpec, OffsetKind, OptionKind, OptionSpec, QuadratureConfig};

use crate::{err, mean, timed};

type Check = Result<(bool, String), String>;

const KINDS: [OptionKind; 2] = [OptionKind::European, OptionKind::Digital];

fn six_cases() -> Vec<(OptionSpec, ModelSpec)> {
    reference_models().into_iter().flat_map(|(_, m)| KINDS.map(|k| (reference_option(k), m))).collect()
}

fn ladder(kind: OptionKind) -> StrikeLadder {
    StrikeLadder::new(kind, 150.0, 0.02, 0.25, (50..=150).map(f64::from).collect())
}

/// GBM reference contract against Black-Scholes, 2 bps and 5 ms per option.
pub fn gbm_agreement() -> Check {
    let model = ModelSpec::Gbm { sigma: 0.25 };
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, cfg) in [("soa", QuadratureConfig::soa_tuned()), ("cma", QuadratureConfig::cma_tuned())] {
        for kind in KINDS {
            let o = reference_option(kind);
            let p = price_single(&o, &model, &cfg).map_err(err)?.price;
            let bps = 1e4 * (p / closed_form_bs(&o, 0.25) - 1.0);
            pass &= bps.abs() <= 2.0;
            parts.push(format!("{name}-{} {bps:+.4} bps", kind.as_str()));
        }
        let t = timed(name, || KINDS.map(|k| price_single(&reference_option(k), &model, &cfg)), 50)?;
        let per_option = mean(&t) / 2.0;
        pass &= per_option < 5e-3;
        parts.push(format!("{name} {:.1} us/option", 1e6 * per_option));
    }
    Ok((pass, format!("{}; limits 2 bps, 5 ms", parts.join(", "))))
}

/// Full tuner scan with 10^6-path benchmarks; expects (40, 1.6) and (360, 1.6)
/// up to one B step, within 30 minutes.
pub fn tuner_reproduction() -> Check {
    let start = std::time::Instant::now();
    let cases = reference_cases(&McConfig::default()).map_err(err)?;
    let grid = TunerGrid::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (offset, want_b) in [(OffsetKind::Smooth, 40.0), (OffsetKind::CarrMadan, 360.0)] {
        match tune(offset, &grid, &cases) {
            Ok(r) => {
                let ok = (r.b - want_b).abs() <= grid.db + 1e-9 && (r.iota - 1.6).abs() < 1e-9;
                pass &= ok;
                parts.push(format!(
                    "{}: B*={} iota*={:.1} N*={} mean {:.3} bps (want B*={want_b}, iota*=1.6)",
                    offset.as_str(),
                    r.b,
                    r.iota,
                    r.n,
                    r.mean_error_bps
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{}: {e}", offset.as_str()));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed <= 1800.0;
    Ok((pass, format!("{}; scan {elapsed:.0} s of 1800", parts.join("; "))))
}

/// `|η_Smooth(z)| ≤ |η_CM(z)|` on the six reference configurations.
pub fn tail_dominance() -> Check {
    let mut violations = Vec::new();
    let mut checked = 0;
    for (o, m) in six_cases() {
        let smooth = Eta::new(OffsetKind::Smooth, o.kind, &m, &o.market).map_err(err)?;
        let cm = Eta::new(OffsetKind::CarrMadan, o.kind, &m, &o.market).map_err(err)?;
        for z in [50.0, 100.0, 200.0, 500.0] {
            let (s, c) = (smooth.at(z).map_err(err)?.norm(), cm.at(z).map_err(err)?.norm());
            checked += 1;
            if s > c {
                violations.push(format!("{} {} z={z}: {s:e} > {c:e}", m.kind().as_str(), o.kind.as_str()));
            }
        }
    }
    Ok((violations.is_empty(), format!("{checked} points, {} violations {violations:?}", violations.len())))
}

/// Tuned SOA against tuned CMA on 100 repetitions of the six-case workload.
pub fn speed_ratio() -> Check {
    let cases = six_cases();
    let cases = &cases;
    let run = |cfg: QuadratureConfig| move || cases.iter().map(|(o, m)| price_single(o, m, &cfg)).collect::<Vec<_>>();
    let soa = timed("soa", run(QuadratureConfig::soa_tuned()), 100)?;
    let cma = timed("cma", run(QuadratureConfig::cma_tuned()), 100)?;
    let ratio = mean(&soa) / mean(&cma);
    let reg = ols_origin(&cma, &soa).map_err(err)?;
    let pass = ratio <= 0.7 && reg.beta < 0.7 && reg.p_value < 0.01;
    Ok((
        pass,
        format!(
            "mean ratio {ratio:.4}, beta {:.4} (95% CI {:.4}..{:.4}) p {:.2e}; limits 0.7, p < 0.01",
            reg.beta, reg.ci_low, reg.ci_high, reg.p_value
        ),
    ))
}

/// FFT against the direct DFT at all nodes, and SOA-FFT against SOA-OBO on
/// the 101-strike ladder for strikes with normalized OBO price at least 0.05.
pub fn fft_correctness() -> Check {
    let mut worst_dft: f64 = 0.0;
    for (o, m) in six_cases() {
        let l = ladder(o.kind);
        for cfg in [QuadratureConfig::soa_tuned(), QuadratureConfig::cma_tuned()] {
            let g = build_grid(&l, cfg.b, cfg.n).map_err(err)?;
            let x = fft_inputs(&g, &Eta::new(cfg.offset, o.kind, &m, &l.market).map_err(err)?).map_err(err)?;
            for (a, b) in dft(&x).iter().zip(dft_direct(&x)) {
                worst_dft = worst_dft.max((a - b).norm());
            }
        }
    }
    let soa = QuadratureConfig::soa_tuned();
    let mut worst_gap: f64 = 0.0;
    let mut worst_at = String::new();
    let (mut asserted, mut flagged) = (0, 0);
    for (o, m) in six_cases() {
        let l = ladder(o.kind);
        let res = fft_price_ladder(&l, &m, OffsetKind::Smooth, soa.b, soa.n).map_err(err)?;
        for (k, p) in l.strikes.iter().zip(&res.prices) {
            let obo = price_single(&OptionSpec::new(o.kind, 150.0, *k, 0.25, 0.02), &m, &soa).map_err(err)?;
            if obo.normalized_price < 0.05 {
                flagged += 1;
                continue;
            }
            asserted += 1;
            let gap = 1e4 * (p / obo.price - 1.0).abs();
            if gap > worst_gap {
                worst_gap = gap;
                worst_at = format!("{} {} K={k}", m.kind().as_str(), o.kind.as_str());
            }
        }
    }
    let pass = worst_dft <= 1e-9 && worst_gap <= 5.0;
    Ok((
        pass,
        format!(
            "fft vs direct dft {worst_dft:.2e} (limit 1e-9); worst fft/obo gap {worst_gap:.2} bps at {worst_at} \
             over {asserted} strikes, {flagged} flagged (limit 5 bps)"
        ),
    ))
}

/// 101-strike SOA-FFT against 101 sequential SOA-OBO calls, and SOA-FFT
/// against CMA-FFT, over the six reference cases.
pub fn fft_speed() -> Check {
    let cases = six_cases();
    let ladders: Vec<StrikeLadder> = cases.iter().map(|(o, _)| ladder(o.kind)).collect();
    let soa = QuadratureConfig::soa_tuned();
    let cma = QuadratureConfig::cma_tuned();
    let fft = |cfg: QuadratureConfig| {
        let (cases, ladders) = (&cases, &ladders);
        move || {
            cases.iter().zip(ladders).map(|((_, m), l)| fft_price_ladder(l, m, cfg.offset, cfg.b, cfg.n)).collect::<Vec<_>>()
        }
    };
    let obo = || {
        cases
            .iter()
            .zip(&ladders)
            .flat_map(|((o, m), l)| {
                l.strikes.iter().map(move |&k| price_single(&OptionSpec::new(o.kind, 150.0, k, 0.25, 0.02), m, &soa))
            })
            .collect::<Vec<_>>()
    };
    let t_soa_fft = mean(&timed("soa-fft", fft(soa), 30)?);
    let t_cma_fft = mean(&timed("cma-fft", fft(cma), 30)?);
    let t_obo = mean(&timed("soa-obo", obo, 30)?);
    let speedup = t_obo / t_soa_fft;
    let pass = speedup >= 10.0 && t_soa_fft < t_cma_fft;
    Ok((
        pass,
        format!(
            "obo/fft speedup {speedup:.1}x (limit 10x); soa-fft {:.1} us vs cma-fft {:.1} us per ladder",
            1e6 * t_soa_fft / 6.0,
            1e6 * t_cma_fft / 6.0
        ),
    ))
}

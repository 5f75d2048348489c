use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use soa_core::dataset::*;
use soa_core::ModelSpec;
use soa_core::quad::closed_form_bs;

#[test]
fn op_type_and_model_balance() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let b = SamplingBounds::default();
    let (mut ops, mut counts) = (0.0, [0usize; 3]);
    let n = 100_000;
    for _ in 0..n {
        let (o, m) = sample_contract(&b, ModelMix::Uniform, &mut rng).unwrap();
        ops += encode(&o, &m)[0];
        counts[match m {
            ModelSpec::Gbm { .. } => 0,
            ModelSpec::Heston { .. } => 1,
            ModelSpec::Evgp { .. } => 2,
        }] += 1;
        if let ModelSpec::Evgp { theta, sigma, nu } = m {
            assert!(1.0 - theta * nu - 0.5 * sigma * sigma * nu > 0.0);
        }
    }
    assert!((ops / n as f64 - 0.5).abs() <= 0.01);
    for c in counts {
        assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() <= 0.02);
    }
}

#[test]
fn empty_dataset_has_only_a_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.jsonl");
    let s = generate_to_file(&GeneratorConfig::new(0, 1), &path).unwrap();
    assert_eq!(s.written, 0);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1);
    let (header, records) = read_dataset(&path).unwrap();
    assert_eq!(header.unwrap().seed, 1);
    assert!(records.is_empty());
}

#[test]
fn fixed_seed_files_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    let cfg = GeneratorConfig::new(1000, 2024);
    generate_to_file(&cfg, &a).unwrap();
    generate_to_file(&cfg, &b).unwrap();
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let (_, recs) = read_dataset(&a).unwrap();
    let (mem, _) = generate(&cfg).unwrap();
    assert_eq!(recs, mem);
}

#[test]
fn generated_records_are_valid() {
    let (recs, summary) = generate(&GeneratorConfig::new(3000, 5)).unwrap();
    assert_eq!(summary.written + summary.skipped, 3000);
    let b = SamplingBounds::default();
    for r in &recs {
        validate_record(r, &b).unwrap();
    }
}

#[test]
fn gbm_labels_match_closed_form() {
    let mut cfg = GeneratorConfig::new(2000, 77);
    cfg.mix = ModelMix::Gbm;
    let (recs, _) = generate(&cfg).unwrap();
    for r in &recs {
        let (o, m) = r.contract().unwrap();
        let ModelSpec::Gbm { sigma } = m else { unreachable!() };
        let bs = closed_form_bs(&o, sigma);
        if bs / o.scale() >= 1e-4 {
            assert!((r.actual_price() / bs - 1.0).abs() < 2e-4, "{r:?}");
        }
    }
}

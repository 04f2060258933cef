use calmness::empirical::{estimate_clm, replay_sequence, EstimateConfig, Mode, SequenceEntry};
use calmness::fixtures;
use calmness::moduli::{c1_directional_exact, c1_sampling, SamplingConfig};
use calmness::Problem;

fn sandwich(p: &Problem, exact: f64) {
    let e = estimate_clm(p, &EstimateConfig::default()).unwrap();
    for s in e.samples.iter().filter(|s| s.radius == 1e-4) {
        if let Some(r) = s.ratio {
            assert!(r <= exact * 1.02, "{}: {r} > {exact}", s.kind);
        }
    }
    let structured = e.per_radius.iter().filter_map(|r| r.structured_max).fold(0.0, f64::max);
    assert!(structured >= exact * 0.98, "structured max {structured} vs {exact}");
}

#[test]
fn examples_are_sandwiched() {
    sandwich(&fixtures::example1(), 17f64.sqrt());
    sandwich(&fixtures::example2(), 5f64.sqrt());
}

#[test]
fn random_problems_are_sandwiched() {
    for seed in 0..20 {
        let p = fixtures::random_strongly_unique(seed, 2, 6);
        let x = p.nominal_x().unwrap().to_vec();
        let exact = c1_directional_exact(&p, &x).unwrap().value;
        let sampled = c1_sampling(&p, &x, &SamplingConfig::default()).unwrap().value;
        assert!((sampled - exact).abs() <= 0.05 * exact, "seed {seed}: sampling {sampled} vs {exact}");
        sandwich(&p, exact);
    }
}

#[test]
fn b_only_does_not_exceed_full() {
    for p in [fixtures::example1(), fixtures::example2()] {
        let full = estimate_clm(&p, &EstimateConfig::default()).unwrap().estimate;
        let b_only = estimate_clm(&p, &EstimateConfig { mode: Mode::BOnly, ..Default::default() }).unwrap().estimate;
        assert!(b_only <= full + 0.02 * full, "{b_only} vs {full}");
    }
}

#[test]
fn ratios_invariant_under_translation() {
    let p = fixtures::example2();
    let v = [0.3, -0.7];
    let rows: Vec<Vec<f64>> = p.rows().iter().map(|r| r.a.clone()).collect();
    let b: Vec<f64> = p.rows().iter().map(|r| r.b + r.a[0] * v[0] + r.a[1] * v[1]).collect();
    let q = Problem::from_dense(p.cost().to_vec(), rows, b, p.norm()).unwrap();
    let cfg = EstimateConfig { samples: 64, ..Default::default() };
    let a = estimate_clm(&p, &cfg).unwrap();
    let t = estimate_clm(&q, &cfg).unwrap();
    for (x, y) in a.samples.iter().zip(&t.samples) {
        assert_eq!(x.kind, y.kind);
        match (x.ratio, y.ratio) {
            (Some(r), Some(s)) => assert!((r - s).abs() <= 1e-6 * r.max(1.0), "{}: {r} vs {s}", x.kind),
            (r, s) => assert_eq!(r.is_some(), s.is_some()),
        }
    }
}

#[test]
fn example_three_estimate_and_replay() {
    let p = fixtures::example3(4096);
    let e = estimate_clm(&p, &EstimateConfig::default()).unwrap();
    let s5 = 5f64.sqrt();
    assert!((e.estimate - s5).abs() <= 0.05 * s5, "{}", e.estimate);
    let seq: Vec<SequenceEntry> = fixtures::example3_sequence(&p, &[1000.0])
        .into_iter()
        .map(|(b, x)| SequenceEntry { c: None, b, x: Some(x) })
        .collect();
    let rows = replay_sequence(&p, &seq).unwrap();
    let r = rows[0].ratio.unwrap_or_else(|| panic!("{:?}", rows[0]));
    assert!((r - s5).abs() <= 0.03 * s5, "{r}");
}

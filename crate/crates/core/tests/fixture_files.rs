use calmness::certify::{distinct_directions, nominal_active_set, nominal_point};
use calmness::empirical::SequenceFile;
use calmness::fixtures;
use calmness::moduli::c3_upper_bound;
use calmness::semiinf::refine_and_track;
use calmness::{InputFile, NormSpec, Problem};
use std::path::PathBuf;

fn read(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn finite(name: &str) -> Problem {
    match InputFile::from_json(&read(name)).unwrap() {
        InputFile::Finite(p) => p,
        InputFile::SemiInfinite(_) => panic!("{name} should be a finite problem"),
    }
}

fn same_data(a: &Problem, b: &Problem) {
    assert_eq!(a.cost(), b.cost());
    assert_eq!(a.norm(), b.norm());
    assert_eq!(a.rows(), b.rows());
}

#[test]
fn finite_fixtures_match_constructors() {
    let e1 = finite("example1.json");
    same_data(&e1, &fixtures::example1());
    assert_eq!(e1.nominal_x(), Some(&[0.0, 0.0][..]));
    same_data(&finite("example2.json"), &fixtures::example2());
    let ray = finite("degenerate_ray.json");
    same_data(&ray, &fixtures::degenerate_ray());
    assert_eq!(ray.nominal_x(), fixtures::degenerate_ray().nominal_x());
}

#[test]
fn semi_infinite_fixture_matches_constructor() {
    let input = InputFile::from_json(&read("example3.json")).unwrap();
    assert_eq!(input.source(), Some(&fixtures::example3_source()));
    same_data(&input.problem(None).unwrap(), &fixtures::example3(4096));
}

fn sequence(name: &str) -> SequenceFile {
    serde_json::from_str(&read(name)).unwrap()
}

fn assert_close(a: &[f64], b: &[f64]) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= 1e-15 * y.abs().max(1.0), "{x} vs {y}");
    }
}

#[test]
fn sequence_fixtures_match_constructors() {
    let cases = [
        ("example1_sequence.json", fixtures::example1_sequence(&[10.0, 100.0, 1000.0])),
        ("example2_sequence.json", fixtures::example2_sequence(&[0.1, 0.01, 0.001])),
        ("example3_sequence.json", fixtures::example3_sequence(&fixtures::example3(4096), &[10.0, 100.0, 1000.0])),
    ];
    for (name, expected) in cases {
        let file = sequence(name);
        assert_eq!(file.entries.len(), expected.len(), "{name}");
        for (entry, (b, x)) in file.entries.iter().zip(&expected) {
            assert!(entry.c.is_none());
            assert_close(&entry.b, b);
            assert_close(entry.x.as_ref().unwrap(), x);
        }
    }
}

#[test]
fn example_three_has_three_active_directions_at_every_level() {
    for grid in [16, 64, 256, 1024, 4096] {
        let p = fixtures::example3(grid);
        let active = nominal_active_set(&p, &[-1.0, 0.0]).unwrap();
        let mut dirs: Vec<Vec<f64>> =
            distinct_directions(&p, &active.indices).unwrap().into_iter().map(|g| g.direction).collect();
        dirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let h = 0.5f64.sqrt();
        let expected = [vec![-1.0, 0.0], vec![-h, -h], vec![-h, h]];
        let mut expected = expected.to_vec();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(dirs.len(), 3, "grid {grid}");
        for (d, e) in dirs.iter().zip(&expected) {
            assert!(NormSpec::Euclidean.distance(d, e) < 1e-9, "grid {grid}: {d:?} vs {e:?}");
        }
    }
}

#[test]
fn example_three_c3_stabilizes_under_refinement() {
    let table = refine_and_track(&fixtures::example3_source(), &[64, 256, 1024, 4096], "C3", |p| {
        Ok(c3_upper_bound(p, &nominal_point(p)?)?.value)
    });
    assert!(table.stabilizing);
    for level in &table.levels {
        let v = level.value.unwrap();
        assert!((v - 5f64.sqrt()).abs() < 1e-3, "grid {}: {v}", level.grid);
    }
}

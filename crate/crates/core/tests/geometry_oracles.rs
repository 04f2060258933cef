mod common;

use calmness::geometry::inverse_norm_routes;
use common::{grid_min, random_matrix, NORMS};
use calmness::{min_dual_norm_point, Matrix, Polytope};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn min_dual_norm_point_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..50 {
        let k = rng.gen_range(1..=4);
        let shift = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let v: Vec<[f64; 2]> =
            (0..k).map(|_| [shift[0] + rng.gen_range(-1.0..1.0), shift[1] + rng.gen_range(-1.0..1.0)]).collect();
        let grid = grid_min(&v, 1e-3);
        let poly = Polytope::new(v.iter().map(|p| p.to_vec()).collect()).unwrap();
        for (norm, expected) in NORMS.into_iter().zip(grid) {
            let got = min_dual_norm_point(&poly, norm).unwrap().distance;
            assert!(
                (got - expected).abs() <= 2e-3 && got <= expected + 1e-12,
                "case {case}, {norm:?}: {got} vs grid {expected}"
            );
        }
    }
}

#[test]
fn inverse_norm_routes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let p = 2 + case % 3;
        let m = random_matrix(&mut rng, p);
        for norm in NORMS {
            let r = inverse_norm_routes(&m, norm).unwrap();
            assert!(
                (r.sign_vectors - r.dual_facets).abs() <= 1e-9,
                "case {case}, p = {p}, {norm:?}: {} vs {}",
                r.sign_vectors,
                r.dual_facets
            );
        }
    }
}

#[test]
fn inverse_norm_of_diagonal() {
    // A = diag(2, 4): ‖A⁻¹y‖ over sign vectors gives (½, ¼)
    let m = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
    let expected = [0.5f64.hypot(0.25), 0.75, 0.5];
    for (norm, e) in NORMS.into_iter().zip(expected) {
        let r = inverse_norm_routes(&m, norm).unwrap();
        assert!((r.sign_vectors - e).abs() < 1e-12 && (r.dual_facets - e).abs() < 1e-12, "{norm:?}: {r:?}");
    }
}

use arccover::simulate::uncovered_at;
use arccover::torus::{arcs_to_union, circular_distance, Arc, IntervalUnion};
use proptest::prelude::*;

fn arcs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..1.0f64, 1e-4..0.5f64), 1..40)
}

fn union_of(pairs: &[(f64, f64)]) -> IntervalUnion {
    let arcs: Vec<Arc> = pairs.iter().map(|&(c, r)| Arc::new(c, r).unwrap()).collect();
    arcs_to_union(&arcs)
}

fn near_endpoint(u: &IntervalUnion, x: f64) -> bool {
    u.pieces()
        .iter()
        .any(|p| circular_distance(p.lo, x) < 1e-9 || circular_distance(p.hi, x) < 1e-9)
}

proptest! {
    #[test]
    fn complement_round_trip(a in arcs()) {
        let u = union_of(&a);
        prop_assert_eq!(u.complement().complement(), u.clone());
        prop_assert!((u.measure() + u.complement().measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn membership_matches_distances(a in arcs()) {
        let u = union_of(&a);
        for i in 0..2000 {
            let x = (i as f64 + 0.5) / 2000.0;
            if near_endpoint(&u, x) {
                continue;
            }
            let direct = a.iter().any(|&(c, r)| circular_distance(c, x) <= r);
            prop_assert_eq!(u.contains_point(x), direct, "x = {}", x);
        }
    }

    #[test]
    fn covers_iff_residual_is_null(a in arcs(), b in arcs()) {
        let u = union_of(&a);
        let t = union_of(&b);
        let residual = t.intersect(&u.complement());
        let null = residual.measure() == 0.0 && residual.pieces().iter().all(|p| p.is_degenerate());
        prop_assert_eq!(u.covers(&t), null);
    }

    #[test]
    fn union_and_intersection_measures(a in arcs(), b in arcs()) {
        let u = union_of(&a);
        let v = union_of(&b);
        let lhs = u.union(&v).measure() + u.intersect(&v).measure();
        prop_assert!((lhs - u.measure() - v.measure()).abs() < 1e-12);
    }

    #[test]
    fn sorted_gaps_equal_arc_complement(
        mut centers in prop::collection::vec(0.0..1.0f64, 1..120),
        ell in 1e-4..0.99f64,
    ) {
        centers.sort_by(f64::total_cmp);
        let arcs: Vec<Arc> = centers.iter().map(|&c| Arc::new(c, ell / 2.0).unwrap()).collect();
        prop_assert_eq!(uncovered_at(&centers, ell).unwrap(), arcs_to_union(&arcs).complement());
    }

    #[test]
    fn more_centers_never_uncover_more(
        centers in prop::collection::vec(0.0..1.0f64, 2..80),
        ell in 1e-3..0.5f64,
    ) {
        let mut prefix = centers[..centers.len() / 2].to_vec();
        let mut all = centers.clone();
        prefix.sort_by(f64::total_cmp);
        all.sort_by(f64::total_cmp);
        let m_prefix = uncovered_at(&prefix, ell).unwrap().measure();
        let m_all = uncovered_at(&all, ell).unwrap().measure();
        prop_assert!(m_all <= m_prefix + 1e-15);
    }
}

#[test]
fn grid_membership_on_ten_thousand_points() {
    let mut rng = arccover::simulate::CenterStream::new(99);
    for _ in 0..50 {
        let k = 1 + (rng.next().unwrap() * 200.0) as usize;
        let pairs: Vec<(f64, f64)> = (0..k)
            .map(|_| (rng.next().unwrap(), 1e-4 + 0.05 * rng.next().unwrap()))
            .collect();
        let u = union_of(&pairs);
        for i in 0..10_000 {
            let x = i as f64 / 10_000.0;
            if near_endpoint(&u, x) {
                continue;
            }
            let direct = pairs.iter().any(|&(c, r)| circular_distance(c, x) <= r);
            assert_eq!(u.contains_point(x), direct);
        }
    }
}

#[test]
fn seam_pieces_count_once() {
    let u = union_of(&[(0.0, 0.1)]);
    assert_eq!(u.len(), 2);
    assert_eq!(u.circular_piece_count(), 1);
    assert_eq!(u.complement().circular_piece_count(), 1);
}

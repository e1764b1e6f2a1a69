use brtomo::field::{segment_integral, travel_time, ScalarField, TestFunction};
use brtomo::geometry::*;
use brtomo::harness::reconstruction_error;
use brtomo::linsys::{cell_traversal, Grid};
use brtomo::rays::*;
use proptest::prelude::*;

fn p(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

fn domain_point() -> impl Strategy<Value = Point2> {
    (0.0..512.0f64, 0.0..512.0f64).prop_map(|(x, y)| p(x, y))
}

fn obstacle() -> Obstacle {
    Obstacle::new(p(256.0, 256.0), 234.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn blocking_ignores_orientation(a in domain_point(), b in domain_point()) {
        prop_assume!(a != b);
        let obs = obstacle();
        let s = Segment::new(a, b).unwrap();
        prop_assert_eq!(
            segment_blocked_by_obstacle(&s, &obs, obs.tol()).unwrap(),
            segment_blocked_by_obstacle(&s.reversed(), &obs, obs.tol()).unwrap()
        );
    }

    #[test]
    fn proper_intersection_is_symmetric(a in domain_point(), b in domain_point(), c in domain_point(), d in domain_point()) {
        prop_assume!(a != b && c != d);
        let (s1, s2) = (Segment::new(a, b).unwrap(), Segment::new(c, d).unwrap());
        prop_assert_eq!(segments_properly_intersect(&s1, &s2), segments_properly_intersect(&s2, &s1));
        prop_assert_eq!(segments_properly_intersect(&s1, &s2), segments_properly_intersect(&s1.reversed(), &s2));
    }

    #[test]
    fn mirror_test_is_reciprocal(t in domain_point(), r in domain_point(), edge in 0usize..4, off in 1.0..233.0f64) {
        let obs = obstacle();
        let sq = obs.square();
        let h = match edge {
            0 => p(sq.min_x() + off, sq.min_y()),
            1 => p(sq.max_x(), sq.min_y() + off),
            2 => p(sq.max_x() - off, sq.max_y()),
            _ => p(sq.min_x(), sq.max_y() - off),
        };
        prop_assume!(t != h && r != h);
        let (inc, out) = (Segment::new(t, h).unwrap(), Segment::new(h, r).unwrap());
        let fwd = mirror_reflection_check(&inc, &out, h, &obs, 0.05).unwrap();
        let back = mirror_reflection_check(&out.reversed(), &inc.reversed(), h, &obs, 0.05).unwrap();
        prop_assert_eq!(fwd, back);
    }

    #[test]
    fn boundary_points_lie_on_the_obstacle(side in 20.0..400.0f64, frac in 0.01..0.5f64, exclude in any::<bool>()) {
        let obs = Obstacle::new(p(256.0, 256.0), side).unwrap();
        let spacing = side * frac;
        let pts = obstacle_boundary_points(&obs, spacing, exclude).unwrap();
        prop_assert!(!pts.is_empty());
        prop_assert!(pts.len() <= (4.0 * side / spacing).floor() as usize);
        for q in &pts {
            prop_assert!(obs.square().boundary_distance(*q) <= obs.tol());
            prop_assert!(!exclude || !obs.is_corner(*q, obs.tol()));
        }
        for w in pts.windows(2) {
            prop_assert!(w[0].distance(w[1]) <= spacing + 1e-9);
        }
    }

    #[test]
    fn traversal_lengths_add_up(a in domain_point(), b in domain_point(), n in 1usize..40) {
        prop_assume!(a != b);
        let grid = Grid::new(n, 512.0 / n as f64, p(0.0, 0.0)).unwrap();
        let s = Segment::new(a, b).unwrap();
        let cells = cell_traversal(&s, &grid).unwrap();
        let total: f64 = cells.iter().map(|c| c.1).sum();
        prop_assert!((total - s.length()).abs() <= 1e-9 * s.length());
        prop_assert!(cells.iter().all(|c| c.1 <= grid.cell_size * std::f64::consts::SQRT_2 + 1e-9));
    }

    #[test]
    fn travel_time_is_additive_and_reversible(t in domain_point(), h in domain_point(), r in domain_point(), id in 0u8..13) {
        prop_assume!(t != h && h != r);
        let f = ScalarField::Test(TestFunction::new(id, 0.001, p(256.0, 256.0), 512.0).unwrap());
        let ray = Ray::broken(t, h, r).unwrap();
        let legs = ray.legs();
        let sum = segment_integral(&legs[0], &f, 4.0) + segment_integral(&legs[1], &f, 4.0);
        let tt = travel_time(&ray, &f, 4.0).unwrap();
        prop_assert_eq!(tt.to_bits(), sum.to_bits());
        prop_assert_eq!(travel_time(&ray.reversed(), &f, 4.0).unwrap().to_bits(), tt.to_bits());
        prop_assert!(tt >= 0.0);
    }

    #[test]
    fn error_metric_behaves(a in prop::collection::vec(-1.0..1.0f64, 16), b in prop::collection::vec(-1.0..1.0f64, 16), mask in prop::collection::vec(any::<bool>(), 16)) {
        prop_assume!(mask.iter().any(|&m| m));
        let e = reconstruction_error(&a, &b, &mask).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert_eq!(e, reconstruction_error(&b, &a, &mask).unwrap());
        let agree = a.iter().zip(&b).zip(&mask).all(|((x, y), &m)| !m || x == y);
        prop_assert_eq!(e == 0.0, agree);
        prop_assert_eq!(reconstruction_error(&a, &a, &mask).unwrap(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ray_sets_depend_only_on_seed(seed in any::<u64>(), n_b in 0usize..60, n_u in 0usize..60) {
        let dom = DomainSpec::new(p(0.0, 0.0), 512.0).unwrap();
        let obs = obstacle();
        let layout = TransceiverLayout::boundary_transceivers(&dom, 16, 1, &obs, 8.0, false).unwrap();
        let a = build_ray_set(&layout, &obs, n_b, n_u, ReflectionModel::Lambertian, 0.01, seed);
        let b = build_ray_set(&layout, &obs, n_b, n_u, ReflectionModel::Lambertian, 0.01, seed);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!((a.broken_count(), a.unbroken_count()), (n_b, n_u));
    }

    #[test]
    fn free_partitions_are_sound(seed in any::<u64>()) {
        let dom = DomainSpec::new(p(0.0, 0.0), 512.0).unwrap();
        let obs = obstacle();
        let layout = TransceiverLayout::boundary_transceivers(&dom, 16, 1, &obs, 8.0, false).unwrap();
        let set = build_ray_set(&layout, &obs, 40, 40, ReflectionModel::Lambertian, 0.01, seed);
        let parts = partition_abstract_rays(&set, &dom, &PartitionOptions::new(PartitionMode::Free));
        let mut seen = vec![0; set.len()];
        for ar in &parts.abstract_rays {
            let segs: Vec<Segment> = ar.elements.iter().flat_map(|&e| set.rays[e].legs().to_vec()).collect();
            for i in 0..segs.len() {
                for j in i + 1..segs.len() {
                    prop_assert!(!segments_properly_intersect(&segs[i], &segs[j]));
                }
            }
            for &e in &ar.elements {
                seen[e] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert!(coverage_bitmap_check(&parts, &set, &set).complete);
        prop_assert_eq!(partition_abstract_rays(&set, &dom, &PartitionOptions::new(PartitionMode::Free)), parts);
    }
}

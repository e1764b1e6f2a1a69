use brtomo::geometry::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

fn orient(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> i64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_closed(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> bool {
    orient(a, b, c) == 0 && a.0.min(b.0) <= c.0 && c.0 <= a.0.max(b.0) && a.1.min(b.1) <= c.1 && c.1 <= a.1.max(b.1)
}

/// Exact integer decision: do the closed segments share a point that is not
/// an endpoint of both?
fn oracle(a: (i64, i64), b: (i64, i64), c: (i64, i64), d: (i64, i64)) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 == 0 && o2 == 0 {
        // collinear: overlap along the dominant axis
        let key = |q: (i64, i64)| if a.0 != b.0 { q.0 } else { q.1 };
        let (lo1, hi1) = (key(a).min(key(b)), key(a).max(key(b)));
        let (lo2, hi2) = (key(c).min(key(d)), key(c).max(key(d)));
        let (lo, hi) = (lo1.max(lo2), hi1.min(hi2));
        return lo < hi;
    }
    let crossing = (o1.signum() * o2.signum() < 0 && o3.signum() * o4.signum() < 0)
        || on_closed(a, b, c)
        || on_closed(a, b, d)
        || on_closed(c, d, a)
        || on_closed(c, d, b);
    if !crossing {
        return false;
    }
    let shared = [a, b].iter().any(|e| *e == c || *e == d);
    !shared
}

#[test]
fn proper_intersection_matches_integer_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pt = || (rng.gen_range(-4..=4i64), rng.gen_range(-4..=4i64));
    let mut checked = 0;
    let mut positives = 0;
    while checked < 1000 {
        let (a, b, c, d) = (pt(), pt(), pt(), pt());
        if a == b || c == d {
            continue;
        }
        let f = |q: (i64, i64)| p(q.0 as f64, q.1 as f64);
        let s1 = Segment::new(f(a), f(b)).unwrap();
        let s2 = Segment::new(f(c), f(d)).unwrap();
        let want = oracle(a, b, c, d);
        assert_eq!(segments_properly_intersect(&s1, &s2), want, "{a:?}-{b:?} vs {c:?}-{d:?}");
        assert_eq!(segments_properly_intersect(&s2, &s1), want);
        positives += want as usize;
        checked += 1;
    }
    assert!(positives > 100 && positives < 900);
}

#[test]
fn intersection_examples() {
    let s = |a: (f64, f64), b: (f64, f64)| Segment::new(p(a.0, a.1), p(b.0, b.1)).unwrap();
    assert!(segments_properly_intersect(&s((0.0, 0.0), (2.0, 2.0)), &s((0.0, 2.0), (2.0, 0.0))));
    assert!(!segments_properly_intersect(&s((0.0, 0.0), (1.0, 1.0)), &s((1.0, 1.0), (2.0, 0.0))));
    assert!(segments_properly_intersect(&s((0.0, 0.0), (2.0, 0.0)), &s((1.0, 0.0), (3.0, 0.0))));
    assert!(!segments_properly_intersect(&s((0.0, 0.0), (1.0, 0.0)), &s((0.0, 1.0), (1.0, 1.0))));
}

/// Event-point oracle for blocking: split the segment at every parameter where
/// it crosses an obstacle edge line and test the pieces' midpoints and the
/// interior event points for membership in the closed square.
fn blocked_oracle(a: Point2, b: Point2, lo: f64, hi: f64) -> bool {
    let mut ts = vec![0.0, 1.0];
    for (pa, pb) in [(a.x, b.x), (a.y, b.y)] {
        if pa != pb {
            for line in [lo, hi] {
                let t = (line - pa) / (pb - pa);
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    let inside = |t: f64| {
        let q = (a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
        let e = 1e-12;
        q.0 >= lo - e && q.0 <= hi + e && q.1 >= lo - e && q.1 <= hi + e
    };
    let interior_events = ts.iter().filter(|&&t| t > 0.0 && t < 1.0).any(|&t| inside(t));
    let mids = ts.windows(2).any(|w| w[1] > w[0] && inside(0.5 * (w[0] + w[1])));
    interior_events || mids
}

#[test]
fn blocking_matches_event_oracle() {
    // obstacle [2, 4] x [2, 4]
    let obs = Obstacle::new(p(3.0, 3.0), 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut blocked = 0;
    for _ in 0..2000 {
        let a = p(rng.gen_range(0..=6) as f64, rng.gen_range(0..=6) as f64);
        let b = p(rng.gen_range(0..=6) as f64, rng.gen_range(0..=6) as f64);
        if a == b {
            continue;
        }
        let seg = Segment::new(a, b).unwrap();
        let want = blocked_oracle(a, b, 2.0, 4.0);
        assert_eq!(segment_blocked_by_obstacle(&seg, &obs, obs.tol()).unwrap(), want, "{a} -> {b}");
        blocked += want as usize;
    }
    assert!(blocked > 200);
}

#[test]
fn blocking_examples() {
    let dom = DomainSpec::new(p(0.0, 0.0), 512.0).unwrap();
    let obs = Obstacle::inside(&dom, p(256.0, 256.0), 234.0).unwrap();
    let seg = |a: Point2, b: Point2| Segment::new(a, b).unwrap();
    let tol = obs.tol();
    // straight through the middle
    assert!(segment_blocked_by_obstacle(&seg(p(0.0, 256.0), p(512.0, 256.0)), &obs, tol).unwrap());
    // below the obstacle
    assert!(!segment_blocked_by_obstacle(&seg(p(0.0, 50.0), p(512.0, 50.0)), &obs, tol).unwrap());
    // ends on the bottom edge: a reflection leg
    assert!(!segment_blocked_by_obstacle(&seg(p(100.0, 0.0), p(256.0, 139.0)), &obs, tol).unwrap());
    // grazes the bottom edge
    assert!(segment_blocked_by_obstacle(&seg(p(0.0, 139.0), p(512.0, 139.0)), &obs, tol).unwrap());
    // passes through the lower-left corner only
    assert!(segment_blocked_by_obstacle(&seg(p(0.0, 0.0), p(278.0, 278.0)), &obs, tol).unwrap());
}

#[test]
fn boundary_points_are_evenly_spaced_on_the_obstacle() {
    let obs = Obstacle::new(p(256.0, 256.0), 234.0).unwrap();
    let sq = obs.square();
    for (spacing, exclude) in [(2.0, false), (2.0, true), (13.0, false), (117.0, true), (58.5, true)] {
        let pts = obstacle_boundary_points(&obs, spacing, exclude).unwrap();
        for q in &pts {
            assert!(sq.boundary_distance(*q) <= obs.tol());
            if exclude {
                assert!(!obs.is_corner(*q, obs.tol()));
            }
        }
        // arc-length position of each point, walking from the lower-left corner
        let arc = |q: Point2| {
            let s = obs.side;
            if (q.y - sq.min_y()).abs() < 1e-9 && q.x < sq.max_x() - 1e-9 {
                q.x - sq.min_x()
            } else if (q.x - sq.max_x()).abs() < 1e-9 && q.y < sq.max_y() - 1e-9 {
                s + q.y - sq.min_y()
            } else if (q.y - sq.max_y()).abs() < 1e-9 && q.x > sq.min_x() + 1e-9 {
                2.0 * s + sq.max_x() - q.x
            } else {
                3.0 * s + sq.max_y() - q.y
            }
        };
        let start = if exclude { 0.5 * spacing } else { 0.0 };
        for (k, q) in pts.iter().enumerate() {
            assert!((arc(*q) - (start + k as f64 * spacing)).abs() < 1e-9, "spacing {spacing} point {k}");
        }
    }
    // spacing divides the side, so all four corners are hit
    let with = obstacle_boundary_points(&obs, 58.5, false).unwrap();
    assert_eq!(with.len(), 16);
    assert_eq!(obs.corners().iter().filter(|c| with.contains(c)).count(), 4);
    assert!(obstacle_boundary_points(&obs, 0.0, false).is_err());
}

#[test]
fn mirror_examples() {
    let obs = Obstacle::new(p(256.0, 256.0), 234.0).unwrap();
    let h = p(256.0, 139.0);
    let seg = |a: Point2, b: Point2| Segment::new(a, b).unwrap();
    let inc = seg(p(156.0, 0.0), h);
    assert!(mirror_reflection_check(&inc, &seg(h, p(356.0, 0.0)), h, &obs, 1e-9).unwrap());
    assert!(!mirror_reflection_check(&inc, &seg(h, p(400.0, 0.0)), h, &obs, 0.01).unwrap());
    // straight back along the incoming direction is not a mirror reflection
    assert!(!mirror_reflection_check(&inc, &seg(h, p(156.0, 0.0)), h, &obs, 0.01).unwrap());
    let corner = obs.corners()[0];
    let err = mirror_reflection_check(&seg(p(0.0, 0.0), corner), &seg(corner, p(0.0, 200.0)), corner, &obs, 0.01);
    assert!(matches!(err, Err(brtomo::Error::UndefinedTangent { .. })));
}

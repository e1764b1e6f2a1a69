//! Obstacle blocking, mirror reflection and reflection-point placement.

use brtomo::geometry::*;

fn main() -> brtomo::Result<()> {
    let dom = DomainSpec::new(Point2::new(0.0, 0.0), 512.0)?;
    let obs = Obstacle::inside(&dom, dom.center(), 234.0)?;
    let sq = obs.square();
    println!("obstacle [{}, {}] x [{}, {}]", sq.min_x(), sq.max_x(), sq.min_y(), sq.max_y());

    let through = Segment::new(Point2::new(0.0, 256.0), Point2::new(512.0, 256.0))?;
    let above = Segment::new(Point2::new(0.0, 500.0), Point2::new(512.0, 500.0))?;
    let grazing = Segment::new(Point2::new(0.0, sq.max_y()), Point2::new(512.0, sq.max_y()))?;
    for (name, s) in [("through", through), ("above", above), ("along top edge", grazing)] {
        println!("{name:>15}: blocked = {}", segment_blocked_by_obstacle(&s, &obs, obs.tol())?);
    }

    // reflect off the bottom edge at its midpoint
    let h = Point2::new(256.0, sq.min_y());
    let t = Point2::new(100.0, 0.0);
    for r in [Point2::new(412.0, 0.0), Point2::new(300.0, 0.0)] {
        let ok = mirror_reflection_check(&Segment::new(t, h)?, &Segment::new(h, r)?, h, &obs, 1e-3)?;
        println!("{t} -> {h} -> {r}: mirror-like = {ok}");
    }
    let corner = sq.corners()[0];
    let err = mirror_reflection_check(&Segment::new(t, corner)?, &Segment::new(corner, dom.center())?, corner, &obs, 1e-3);
    println!("reflection at a corner: {}", err.unwrap_err());

    for exclude in [false, true] {
        let pts = obstacle_boundary_points(&obs, 2.0, exclude)?;
        println!(
            "spacing 2, exclude corners = {exclude}: {} points, first {}",
            pts.len(),
            pts[0]
        );
    }
    Ok(())
}

//! Test functions and travel times along broken rays.

use brtomo::field::*;
use brtomo::geometry::{DomainSpec, Point2, Segment};
use brtomo::rays::Ray;

fn main() -> brtomo::Result<()> {
    let dom = DomainSpec::new(Point2::new(0.0, 0.0), 512.0)?;
    let c = dom.center();
    let ray = Ray::broken(Point2::new(0.0, 40.0), Point2::new(256.0, 139.0), Point2::new(512.0, 60.0))?;
    println!("ray length {:.3}", ray.length());
    for id in 0..TEST_FUNCTION_COUNT {
        let f = ScalarField::Test(TestFunction::for_domain(id, &dom)?);
        println!(
            "f{id:<2} value at centre {:.4e}, travel time {:.6e}",
            eval_field(&f, c),
            travel_time(&ray, &f, DEFAULT_QUADRATURE)?
        );
    }

    // the cone integrates to K R^2 / 2 along a radius
    let f0 = ScalarField::Test(TestFunction::for_domain(0, &dom)?);
    let radius = Segment::new(c, Point2::new(c.x + 200.0, c.y))?;
    println!(
        "radial leg: {:.12e} vs {:.12e}",
        segment_integral(&radius, &f0, DEFAULT_QUADRATURE),
        DEFAULT_K * 200.0 * 200.0 / 2.0
    );
    Ok(())
}

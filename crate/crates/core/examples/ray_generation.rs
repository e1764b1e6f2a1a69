//! Transceiver layout, ray universes and seeded ray sets.
//!
//!     cargo run --release --example ray_generation -- [seed]

use brtomo::geometry::{DomainSpec, Obstacle, Point2};
use brtomo::rays::*;

fn main() -> brtomo::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let dom = DomainSpec::new(Point2::new(0.0, 0.0), 512.0)?;
    let obs = Obstacle::inside(&dom, dom.center(), 234.0)?;
    let layout = TransceiverLayout::boundary_transceivers(&dom, 64, 1, &obs, 16.0, false)?;
    println!(
        "{} transceivers, {} reflection points",
        layout.transmitters.len(),
        layout.obstacle_points.len()
    );
    let max = count_max_rays(&layout, &obs);
    println!("universe: {} unbroken, {} broken (lambertian)", max.unbroken, max.broken);

    for model in [ReflectionModel::Lambertian, ReflectionModel::Specular] {
        let set = build_ray_set(&layout, &obs, 5_000, 5_000, model, 0.01, seed);
        println!(
            "{model:?}: {} broken, {} unbroken, shortfall {:?}",
            set.broken_count(),
            set.unbroken_count(),
            set.shortfall
        );
        if let Some(Ray::Broken { t, h, r }) = set.rays.iter().find(|r| r.is_broken()) {
            println!("  e.g. {t} -> {h} -> {r}");
        }
    }

    // asking for more than exists saturates
    let set = build_ray_set(&layout, &obs, 0, 100_000, ReflectionModel::Lambertian, 0.01, seed);
    println!("100000 unbroken requested: got {}, short {}", set.unbroken_count(), set.shortfall.unbroken);
    Ok(())
}

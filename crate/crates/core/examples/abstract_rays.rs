//! Grouping rays into abstract rays and checking coverage.

use brtomo::harness::{ExperimentConfig, Scene};
use brtomo::linsys::assemble_abstract;
use brtomo::rays::*;

fn main() -> brtomo::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.grid_n = 32;
    cfg.rays = 4_000;
    let scene = Scene::new(&cfg)?;
    let rays = scene.rays(&cfg);
    let times = brtomo::field::travel_times(&rays.rays, &scene.field, cfg.quadrature)?;

    for (mode, shared) in [(PartitionMode::Free, Some(0)), (PartitionMode::Free, None), (PartitionMode::Chained, Some(1))] {
        let mut opts = PartitionOptions::new(mode);
        opts.shared_cells = shared.map(|max_shared| SharedCellLimit { grid: scene.grid, max_shared });
        let parts = partition_abstract_rays(&rays, &scene.domain, &opts);
        let reduced = abstract_travel_times(&parts, &times)?;
        let w = assemble_abstract(&parts, &rays, &reduced, &scene.grid, &scene.obstacle)?;
        let longest = parts.abstract_rays.iter().map(|a| a.elements.len()).max().unwrap_or(0);
        println!(
            "{mode:?}, shared cells {shared:?}: {} -> {} rows (longest {longest}), {} nonzeros, coverage complete = {}",
            rays.len(),
            parts.len(),
            w.nnz(),
            coverage_bitmap_check(&parts, &rays, &rays).complete
        );
    }

    // coverage against a reference set that the partition never saw
    let mut other = cfg.clone();
    other.seed += 1;
    let reference = scene.rays(&other);
    let parts = partition_abstract_rays(&rays, &scene.domain, &PartitionOptions::new(PartitionMode::Free));
    let cov = coverage_bitmap_check(&parts, &rays, &reference);
    println!("against another seed: complete = {}, {} rays uncovered", cov.complete, cov.missing.len());
    Ok(())
}

//! Assembling W f = P and solving it with Kaczmarz iterations.

use brtomo::field::travel_times;
use brtomo::harness::{reconstruction_error, ExperimentConfig, Scene};
use brtomo::linsys::*;

fn main() -> brtomo::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.grid_n = 32;
    cfg.rays = 30_000;
    let scene = Scene::new(&cfg)?;
    let rays = scene.rays(&cfg);
    let times = travel_times(&rays.rays, &scene.field, cfg.quadrature)?;
    let w = assemble(&rays, &times, &scene.grid, &scene.obstacle)?;
    println!("{} rows, {} cells, {} nonzeros", w.n_rows(), w.n_cells(), w.nnz());

    let truth = scene.true_field();
    let mask = scene.error_mask();
    let order = row_order(w.n_rows(), Some(7));
    for updates in [w.n_rows(), 5 * w.n_rows(), 20 * w.n_rows()] {
        let (f, report) = kaczmarz_solve(&w, &GridVector::zeros(&scene.grid), &order, 1e-12, updates)?;
        println!(
            "{updates:>7} updates: error {:.4e}, residual {:.4e}",
            reconstruction_error(&f, &truth, &mask)?,
            report.residual_norm
        );
    }
    println!("residual of the true field: {:.4e}", residual_norm(&w, &truth));
    Ok(())
}

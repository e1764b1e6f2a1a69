//! Broken-ray reconstruction against unbroken-only reconstruction.
//!
//!     cargo run --release --example brtl_vs_art -- [key=value ...]
//!
//! Defaults to the full 64x64 setup; e.g. `grid_n=32 rays=30000` is faster.

use brtomo::harness::*;

fn main() -> brtomo::Result<()> {
    let mut cfg = ExperimentConfig::default();
    for arg in std::env::args().skip(1) {
        cfg.apply_text(&arg)?;
    }
    for model in [Method::Lambertian, Method::Specular, Method::Art] {
        cfg.model = model;
        let r = run_experiment(&cfg)?;
        println!(
            "{:<10} error {:.4e}  rows {:>6} ({} broken, {} unbroken)  {:.1}s",
            model.name(),
            r.error,
            r.reduced_rows,
            r.n_broken,
            r.n_unbroken,
            r.wall_time
        );
    }
    Ok(())
}

//! Writing and reading every file the toolkit produces.

use brtomo::harness::*;
use brtomo::io::*;
use brtomo::rays::{partition_abstract_rays, PartitionMode, PartitionOptions};

fn main() -> brtomo::Result<()> {
    let dir = std::env::temp_dir().join("brtomo-file-formats");
    std::fs::create_dir_all(&dir).map_err(|e| brtomo::Error::io(&dir, e))?;
    let mut cfg = ExperimentConfig::default();
    cfg.grid_n = 16;
    cfg.rays = 500;
    cfg.max_updates = 10_000;

    let run = run_experiment_detailed(&cfg)?;
    let rays_path = dir.join("rays.txt");
    write_ray_set(&rays_path, &run.rays)?;
    let text = std::fs::read_to_string(&rays_path).map_err(|e| brtomo::Error::io(&rays_path, e))?;
    println!("{}: {} rays, first lines:", rays_path.display(), run.rays.len());
    for line in text.lines().take(3) {
        println!("  {line}");
    }
    assert_eq!(read_ray_set(&rays_path)?.rays, run.rays.rays);

    let times_path = dir.join("times.txt");
    write_times(&times_path, &run.times)?;
    assert_eq!(read_times(&times_path)?, run.times);

    let parts = partition_abstract_rays(&run.rays, &run.scene.domain, &PartitionOptions::new(PartitionMode::Free));
    let abstract_path = dir.join("abstract.txt");
    write_abstract_rays(&abstract_path, &parts)?;
    assert_eq!(read_abstract_rays(&abstract_path)?, parts);

    let (n, d) = (run.scene.grid.n, run.scene.grid.cell_size);
    let w_path = dir.join("w.brt");
    write_matrix(&w_path, &run.matrix, n, d)?;
    assert_eq!(read_matrix(&w_path)?.0, run.matrix);
    let f_path = dir.join("f.brt");
    write_grid_vector(&f_path, &run.reconstruction, n, d)?;
    println!("{}: {} bytes", w_path.display(), encode_matrix(&run.matrix, n, d).len());

    let table = run_table(&cfg, &Sweep::Repeat(3))?;
    for name in ["results.txt", "results.csv"] {
        let path = dir.join(name);
        emit_results(&table, &path, ResultFormat::for_path(&path))?;
        println!("{}:", path.display());
        print!("{}", format_results(&table, ResultFormat::for_path(&path)));
    }
    Ok(())
}

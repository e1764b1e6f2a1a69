use std::path::PathBuf;

use brtomo::harness::*;
use brtomo::io::*;
use brtomo::linsys::assemble;
use brtomo::rays::{partition_abstract_rays, PartitionMode, PartitionOptions};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("brtomo-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.grid_n = 16;
    cfg.rays = 600;
    cfg.max_updates = 5_000;
    cfg
}

#[test]
fn ray_set_times_and_abstract_rays_round_trip() {
    let cfg = small();
    let scene = Scene::new(&cfg).unwrap();
    let rays = scene.rays(&cfg);
    let path = scratch("rays.txt");
    write_ray_set(&path, &rays).unwrap();
    let back = read_ray_set(&path).unwrap();
    assert_eq!(back.rays, rays.rays);
    assert_eq!(back.seed, rays.seed);

    let times = brtomo::field::travel_times(&rays.rays, &scene.field, cfg.quadrature).unwrap();
    let tpath = scratch("times.txt");
    write_times(&tpath, &times).unwrap();
    assert_eq!(read_times(&tpath).unwrap(), times);

    let parts = partition_abstract_rays(&rays, &scene.domain, &PartitionOptions::new(PartitionMode::Chained));
    let apath = scratch("abstract.txt");
    write_abstract_rays(&apath, &parts).unwrap();
    assert_eq!(read_abstract_rays(&apath).unwrap(), parts);
}

#[test]
fn binary_containers_round_trip() {
    let cfg = small();
    let scene = Scene::new(&cfg).unwrap();
    let rays = scene.rays(&cfg);
    let times = brtomo::field::travel_times(&rays.rays, &scene.field, cfg.quadrature).unwrap();
    let w = assemble(&rays, &times, &scene.grid, &scene.obstacle).unwrap();
    let path = scratch("w.brt");
    write_matrix(&path, &w, scene.grid.n, scene.grid.cell_size).unwrap();
    let (back, n, d) = read_matrix(&path).unwrap();
    assert_eq!((n, d), (16, 32.0));
    assert_eq!(back, w);

    let bytes = encode_matrix(&w, n, d);
    assert_eq!(&bytes[..4], MAGIC);
    assert_eq!(u64::from_le_bytes(bytes[4..12].try_into().unwrap()), 16);
    assert_eq!(f64::from_le_bytes(bytes[12..20].try_into().unwrap()), 32.0);
    assert_eq!(u64::from_le_bytes(bytes[20..28].try_into().unwrap()), w.n_rows() as u64);
    assert_eq!(bytes.len(), 28 + 4 * w.n_rows() + 4 * w.nnz() + 8 * w.nnz() + 8 * w.n_rows());
    assert!(decode_matrix(&bytes[..bytes.len() - 1], &path).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(decode_matrix(&bad, &path).is_err());

    let v = scene.true_field();
    let vpath = scratch("f.brt");
    write_grid_vector(&vpath, &v, 16, 32.0).unwrap();
    assert_eq!(read_grid_vector(&vpath).unwrap(), (v.clone(), 16, 32.0));
    let tpath = scratch("f.txt");
    write_grid_vector_text(&tpath, &v).unwrap();
    assert_eq!(read_grid_vector_text(&tpath).unwrap(), v);
    assert_eq!(std::fs::read_to_string(&tpath).unwrap().lines().count(), 256);
}

#[test]
fn malformed_files_are_rejected() {
    let p = scratch("bad.txt");
    for text in ["U 1 2 3\n", "B 0 0 1 1 2\n", "X 0 0 1 1\n", "U 0 0 0 nan\n", "U 0 0 1 1\nU 0 0 1 1\n"] {
        std::fs::write(&p, text).unwrap();
        let err = read_ray_set(&p).unwrap_err();
        assert_eq!(err.exit_code(), 1, "{text:?}: {err}");
    }
    std::fs::write(&p, "0.5\n-1\n").unwrap();
    assert!(read_times(&p).is_err());
    let missing = scratch("does-not-exist.txt");
    assert_eq!(read_ray_set(&missing).unwrap_err().exit_code(), 2);
}

#[test]
fn results_files_round_trip() {
    let cfg = small();
    let table = run_table(&cfg, &Sweep::Repeat(3)).unwrap();
    assert_eq!(table.rows.len(), 3);
    for format in [ResultFormat::TextTable, ResultFormat::Csv] {
        let text = format_results(&table, format);
        assert_eq!(text.lines().count(), 5);
        let rows = parse_results(&text, format).unwrap();
        assert_eq!(rows.len(), 4);
        for (row, (key, rep)) in rows.iter().zip(&table.rows) {
            assert_eq!(&row.key, key);
            assert_eq!(row.error, rep.error);
            assert_eq!(row.iterations, rep.iterations as f64);
            assert_eq!(row.reduced_rows, rep.reduced_rows as f64);
        }
        assert_eq!(rows[3], table.average());
        assert_eq!(rows[3].key, "Average");
    }
    let csv = scratch("t.csv");
    emit_results(&table, &csv, ResultFormat::for_path(&csv)).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "experiment,error,iterations,reduced_rows,wall_time");

    let single = run_table(&cfg, &Sweep::Repeat(1)).unwrap();
    assert_eq!(format_results(&single, ResultFormat::Csv).lines().count(), 2);
    let (mut a, mut b) = (single.rows[0].1.clone(), run_experiment(&cfg).unwrap());
    a.wall_time = 0.0;
    b.wall_time = 0.0;
    assert_eq!(a, b);
    let unwritable = scratch("no-such-dir").join("x").join("t.csv");
    assert_eq!(emit_results(&table, &unwritable, ResultFormat::Csv).unwrap_err().exit_code(), 2);
}

#[test]
fn config_text_round_trips() {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_text("# comment\nseed=9\nmodel=specular\nfunction=f4\nabstract_mode=free\nmax_shared_cells=none\nn_b=7\n")
        .unwrap();
    assert_eq!((cfg.seed, cfg.function, cfg.n_b, cfg.max_shared_cells), (9, 4, Some(7), None));
    let mut back = ExperimentConfig::default();
    back.apply_text(&cfg.to_text()).unwrap();
    assert_eq!(back, cfg);
    assert!(ExperimentConfig::default().apply_text("sede=3\n").is_err());
    assert!(ExperimentConfig::default().apply_text("seed\n").is_err());
    let path = scratch("cfg.txt");
    std::fs::write(&path, "grid_n=32\n").unwrap();
    assert_eq!(ExperimentConfig::from_file(&path).unwrap().grid_n, 32);
}

use brtomo::harness::*;
use brtomo::rays::coverage_bitmap_check;

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.grid_n = 16;
    cfg.rays = 2_000;
    cfg.max_updates = 20_000;
    cfg
}

#[test]
fn zero_field_reconstructs_exactly() {
    let mut cfg = small();
    cfg.model = Method::Art;
    cfg.k = 0.0;
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.error, 0.0);
    assert_eq!(r.n_broken, 0);
}

#[test]
fn runs_are_deterministic() {
    let cfg = small();
    let a = run_experiment_detailed(&cfg).unwrap();
    let b = run_experiment_detailed(&cfg).unwrap();
    assert_eq!(a.rays, b.rays);
    assert_eq!(a.matrix, b.matrix);
    assert_eq!(a.reconstruction, b.reconstruction);
    assert_eq!(a.report.error.to_bits(), b.report.error.to_bits());
    assert_eq!(a.report.iterations, b.report.iterations);
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(run_experiment(&other).unwrap().error, a.report.error);
}

#[test]
fn split_and_saturation_are_reported() {
    let mut cfg = small();
    cfg.rays = 1_000;
    cfg.unbroken_fraction = 0.3;
    let r = run_experiment(&cfg).unwrap();
    assert_eq!((r.n_broken, r.n_unbroken), (700, 300));
    assert_eq!(r.reduced_rows, 1_000);

    cfg.model = Method::Art;
    cfg.rays = 100_000;
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.n_broken, 0);
    assert!(r.shortfall.unbroken > 0);
    assert_eq!(r.n_unbroken + r.shortfall.unbroken, 100_000);
}

#[test]
fn reduction_accounting() {
    for mode in [AbstractMode::Free, AbstractMode::Chained] {
        let mut cfg = small();
        cfg.abstract_mode = mode;
        if mode == AbstractMode::Chained {
            cfg.max_shared_cells = Some(1);
        }
        let run = run_experiment_detailed(&cfg).unwrap();
        let parts = run.abstract_rays.as_ref().unwrap();
        assert!(run.report.reduced_rows < run.rays.len(), "{mode:?}");
        assert_eq!(run.report.reduced_rows, parts.len());
        assert!(coverage_bitmap_check(parts, &run.rays, &run.rays).complete);
        assert!(run.report.error.is_finite());
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = small();
    cfg.obstacle_side = 600.0;
    assert_eq!(run_experiment(&cfg).unwrap_err().exit_code(), 1);
    let mut cfg = small();
    cfg.rays = 0;
    assert!(run_experiment(&cfg).is_err());
    let mut cfg = small();
    cfg.unbroken_fraction = 1.5;
    assert!(run_experiment(&cfg).is_err());
    let mut cfg = small();
    cfg.function = 13;
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn sweeps_have_the_listed_points() {
    let cfg = small();
    let keys = |s: Sweep| s.points(&cfg).into_iter().map(|p| p.0).collect::<Vec<_>>();
    assert_eq!(keys(Sweep::table1()).len(), 10);
    assert_eq!(
        keys(Sweep::table2()),
        ["130", "156", "182", "208", "234", "260", "286", "312", "338", "364"]
    );
    assert_eq!(keys(Sweep::table3())[0], "0.50");
    assert_eq!(keys(Sweep::table3())[9], "0.95");
    assert_eq!(keys(Sweep::table4()).len(), 13);
    assert!(run_table(&cfg, &Sweep::Function(vec![])).is_err());
    let t = run_table(&cfg, &Sweep::ObstacleSide(vec![100.0, 200.0])).unwrap();
    assert_eq!(t.rows[1].1.config.obstacle_side, 200.0);
    assert_eq!(t.key_label, "side_length");
}

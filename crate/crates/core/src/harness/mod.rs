//! Experiment orchestration: scene construction, the full
//! generate/integrate/assemble/solve pipeline, parameter sweeps and results
//! files.

mod config;
mod results;

use std::time::Instant;

pub use config::{AbstractMode, ExperimentConfig, Method};
pub use results::{emit_results, format_results, parse_results, ResultFormat, ResultRow};

use crate::error::{Error, Result};
use crate::field::{travel_times, ScalarField, TestFunction};
use crate::geometry::{DomainSpec, Obstacle, Point2};
use crate::linsys::{
    assemble, assemble_abstract, kaczmarz_solve, row_order, Grid, GridVector, SolveReport, WeightMatrix,
};
use crate::rays::{
    abstract_travel_times, build_ray_set, partition_abstract_rays, AbstractRaySet, PartitionMode,
    PartitionOptions, RaySet, SharedCellLimit, Shortfall, TransceiverLayout,
};

/// Mean absolute per-cell difference over the cells where `mask` holds.
pub fn reconstruction_error(reconstructed: &[f64], truth: &[f64], mask: &[bool]) -> Result<f64> {
    if reconstructed.len() != truth.len() || mask.len() != truth.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} reconstructed, {} true, {} mask",
            reconstructed.len(),
            truth.len(),
            mask.len()
        )));
    }
    let (sum, count) = reconstructed
        .iter()
        .zip(truth)
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, c), ((a, b), _)| (s + (a - b).abs(), c + 1));
    if count == 0 {
        return Err(Error::invalid("error mask selects no cells"));
    }
    Ok(sum / count as f64)
}

/// Geometry, grid, transceivers and true field derived from a configuration.
#[derive(Debug, Clone)]
pub struct Scene {
    pub domain: DomainSpec,
    pub obstacle: Obstacle,
    pub grid: Grid,
    pub layout: TransceiverLayout,
    pub field: ScalarField,
}

impl Scene {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let domain = DomainSpec::new(Point2::new(0.0, 0.0), cfg.domain_side)?;
        let obstacle = Obstacle::inside(&domain, domain.center(), cfg.obstacle_side)?;
        let grid = Grid::covering(&domain, cfg.grid_n)?;
        let layout = TransceiverLayout::boundary_transceivers(
            &domain,
            cfg.grid_n,
            cfg.transceivers_per_side,
            &obstacle,
            cfg.obstacle_spacing,
            cfg.exclude_vertices,
        )?;
        let field = ScalarField::Test(TestFunction::new(cfg.function, cfg.k, domain.center(), domain.side)?);
        Ok(Scene {
            domain,
            obstacle,
            grid,
            layout,
            field,
        })
    }

    /// Cells where the error is measured: those sharing no interior point
    /// with the obstacle.
    pub fn error_mask(&self) -> Vec<bool> {
        self.grid.cells_clear_of(&self.obstacle)
    }

    pub fn true_field(&self) -> GridVector {
        self.field.sample(&self.grid)
    }

    pub fn rays(&self, cfg: &ExperimentConfig) -> RaySet {
        let (n_b, n_u) = cfg.ray_split();
        build_ray_set(
            &self.layout,
            &self.obstacle,
            n_b,
            n_u,
            cfg.model.reflection(),
            cfg.angle_tol,
            cfg.seed,
        )
    }
}

pub fn partition_options(cfg: &ExperimentConfig, grid: &Grid) -> Option<PartitionOptions> {
    let mode = match cfg.abstract_mode {
        AbstractMode::Off => return None,
        AbstractMode::Chained => PartitionMode::Chained,
        AbstractMode::Free => PartitionMode::Free,
    };
    Some(PartitionOptions {
        mode,
        specular_chaining: cfg.specular_chaining,
        angle_tol: cfg.angle_tol,
        max_elements: cfg.max_elements,
        candidate_window: cfg.candidate_window,
        shared_cells: cfg.max_shared_cells.map(|max_shared| SharedCellLimit { grid: *grid, max_shared }),
    })
}

/// System assembled from a ray set and its solution.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub abstract_rays: Option<AbstractRaySet>,
    pub matrix: WeightMatrix,
    pub values: GridVector,
    pub solve: SolveReport,
}

/// Partitions (when configured), assembles and solves for `rays` with
/// measured `times`, starting from zero.
pub fn reconstruct(scene: &Scene, cfg: &ExperimentConfig, rays: &RaySet, times: &[f64]) -> Result<Reconstruction> {
    let (abstract_rays, matrix) = match partition_options(cfg, &scene.grid) {
        None => (None, assemble(rays, times, &scene.grid, &scene.obstacle)?),
        Some(opts) => {
            let parts = partition_abstract_rays(rays, &scene.domain, &opts);
            let reduced = abstract_travel_times(&parts, times)?;
            let m = assemble_abstract(&parts, rays, &reduced, &scene.grid, &scene.obstacle)?;
            (Some(parts), m)
        }
    };
    let order = row_order(matrix.n_rows(), Some(solve_seed(cfg.seed)));
    let x0 = GridVector::zeros(&scene.grid);
    let (values, solve) = kaczmarz_solve(&matrix, &x0, &order, cfg.tol, cfg.max_updates)?;
    Ok(Reconstruction {
        abstract_rays,
        matrix,
        values,
        solve,
    })
}

/// Every intermediate product of a run.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub scene: Scene,
    pub rays: RaySet,
    pub times: Vec<f64>,
    pub abstract_rays: Option<AbstractRaySet>,
    pub matrix: WeightMatrix,
    pub reconstruction: GridVector,
    pub solve: SolveReport,
    pub report: ExperimentReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub error: f64,
    pub iterations: usize,
    pub n_broken: usize,
    pub n_unbroken: usize,
    pub shortfall: Shortfall,
    /// Rows of the solved system (abstract rays when reduction is on).
    pub reduced_rows: usize,
    pub wall_time: f64,
    pub config: ExperimentConfig,
}

fn solve_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Runs the pipeline and keeps the intermediate products.
pub fn run_experiment_detailed(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    let start = Instant::now();
    let scene = Scene::new(cfg)?;
    let rays = scene.rays(cfg);
    let times = travel_times(&rays.rays, &scene.field, cfg.quadrature)?;
    let rec = reconstruct(&scene, cfg, &rays, &times)?;
    let error = reconstruction_error(&rec.values, &scene.true_field(), &scene.error_mask())?;

    let report = ExperimentReport {
        error,
        iterations: rec.solve.iterations,
        n_broken: rays.broken_count(),
        n_unbroken: rays.unbroken_count(),
        shortfall: rays.shortfall,
        reduced_rows: rec.matrix.n_rows(),
        wall_time: start.elapsed().as_secs_f64(),
        config: cfg.clone(),
    };
    Ok(ExperimentRun {
        scene,
        rays,
        times,
        abstract_rays: rec.abstract_rays,
        matrix: rec.matrix,
        reconstruction: rec.values,
        solve: rec.solve,
        report,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_detailed(cfg).map(|run| run.report)
}

/// A one-parameter sweep over a template configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// `n` runs with seeds `seed, seed + 1, ...`.
    Repeat(usize),
    ObstacleSide(Vec<f64>),
    UnbrokenFraction(Vec<f64>),
    Function(Vec<u8>),
}

impl Sweep {
    pub fn label(&self) -> &'static str {
        match self {
            Sweep::Repeat(_) => "experiment",
            Sweep::ObstacleSide(_) => "side_length",
            Sweep::UnbrokenFraction(_) => "unbroken_fraction",
            Sweep::Function(_) => "function",
        }
    }

    /// (row key, configuration) for each sweep point.
    pub fn points(&self, template: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
        let with = |key: String, f: &dyn Fn(&mut ExperimentConfig)| {
            let mut cfg = template.clone();
            f(&mut cfg);
            (key, cfg)
        };
        match self {
            Sweep::Repeat(n) => (0..*n)
                .map(|i| with((i + 1).to_string(), &|c| c.seed = template.seed + i as u64))
                .collect(),
            Sweep::ObstacleSide(sides) => sides
                .iter()
                .map(|&s| with(s.to_string(), &|c| c.obstacle_side = s))
                .collect(),
            Sweep::UnbrokenFraction(fr) => fr
                .iter()
                .map(|&f| with(format!("{f:.2}"), &|c| c.unbroken_fraction = f))
                .collect(),
            Sweep::Function(ids) => ids
                .iter()
                .map(|&id| with(format!("f{id}"), &|c| c.function = id))
                .collect(),
        }
    }

    pub fn table1() -> Self {
        Sweep::Repeat(10)
    }

    /// Obstacle sides 130, 156, ..., 364.
    pub fn table2() -> Self {
        Sweep::ObstacleSide((0..10).map(|i| 130.0 + 26.0 * i as f64).collect())
    }

    /// Unbroken fractions 0.50, 0.55, ..., 0.95.
    pub fn table3() -> Self {
        Sweep::UnbrokenFraction((0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect())
    }

    pub fn table4() -> Self {
        Sweep::Function((0..crate::field::TEST_FUNCTION_COUNT).collect())
    }
}

/// Per-point reports of a sweep, in sweep order.
#[derive(Debug, Clone, PartialEq)]
pub struct TableResult {
    pub key_label: String,
    pub rows: Vec<(String, ExperimentReport)>,
}

impl TableResult {
    /// Mean error, iterations, reduced rows and wall time.
    pub fn average(&self) -> ResultRow {
        let n = self.rows.len().max(1) as f64;
        let mean = |f: &dyn Fn(&ExperimentReport) -> f64| self.rows.iter().map(|(_, r)| f(r)).sum::<f64>() / n;
        ResultRow {
            key: "Average".to_string(),
            error: mean(&|r| r.error),
            iterations: mean(&|r| r.iterations as f64),
            reduced_rows: mean(&|r| r.reduced_rows as f64),
            wall_time: mean(&|r| results::reported_wall_time(r)),
        }
    }
}

pub fn run_table(template: &ExperimentConfig, sweep: &Sweep) -> Result<TableResult> {
    let points = sweep.points(template);
    if points.is_empty() {
        return Err(Error::invalid("sweep has no points"));
    }
    let rows = points
        .into_iter()
        .map(|(key, cfg)| {
            run_experiment(&cfg)
                .map(|r| (key.clone(), r))
                .map_err(|e| Error::invalid(format!("{} = {key}: {e}", sweep.label())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TableResult {
        key_label: sweep.label().to_string(),
        rows,
    })
}

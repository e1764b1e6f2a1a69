use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use brtomo::field::travel_times;
use brtomo::harness::*;
use brtomo::io;
use brtomo::rays::{partition_abstract_rays, RaySet};
use brtomo::{Error, Result};

/// Broken-ray travel-time tomography around a reflecting square obstacle.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ray set.
    GenRays(Common),
    /// Travel times of a ray set through the configured test function.
    TravelTimes(WithInput),
    /// Partition a ray set into abstract rays.
    Reduce(WithInput),
    /// Solve for the field; `.txt` output is text, anything else binary.
    Reconstruct(WithInput),
    /// One full run; writes a results file.
    Experiment(Common),
    /// Ten repeated runs, BRTL and ART.
    Table1(Common),
    /// Obstacle side sweep, BRTL and ART.
    Table2(Common),
    /// Unbroken-fraction sweep (corner reflection points excluded).
    Table3(Common),
    /// All registered test functions, BRTL and ART.
    Table4(Common),
}

#[derive(Args)]
struct Common {
    /// key=value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds ray sampling and the row order.
    #[arg(long)]
    seed: Option<String>,
    /// Cells per grid side.
    #[arg(long)]
    grid_n: Option<String>,
    /// Side of the centred square obstacle.
    #[arg(long)]
    obstacle_side: Option<String>,
    /// Requested ray count before saturation.
    #[arg(long)]
    rays: Option<String>,
    /// Share of unbroken rays in `--rays`.
    #[arg(long)]
    unbroken_fraction: Option<String>,
    /// lambertian, specular or art.
    #[arg(long)]
    model: Option<String>,
    /// Test function, `f0`..`f12` or its number.
    #[arg(long)]
    function: Option<String>,
    /// off, chained or free.
    #[arg(long)]
    abstract_mode: Option<String>,
    /// Kaczmarz update-norm tolerance.
    #[arg(long)]
    tol: Option<String>,
    /// Cap on Kaczmarz row updates.
    #[arg(long)]
    max_updates: Option<String>,
    /// Any other configuration key, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    extra: Vec<String>,
    /// Output file; each subcommand has a default name.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WithInput {
    #[command(flatten)]
    common: Common,
    /// Ray-set file to use instead of generating one from the configuration.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Travel-times file (reconstruct only); computed when absent.
    #[arg(long)]
    times: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("seed", &self.seed),
            ("grid_n", &self.grid_n),
            ("obstacle_side", &self.obstacle_side),
            ("rays", &self.rays),
            ("unbroken_fraction", &self.unbroken_fraction),
            ("model", &self.model),
            ("function", &self.function),
            ("abstract_mode", &self.abstract_mode),
            ("tol", &self.tol),
            ("max_updates", &self.max_updates),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).map_err(|e| Error::invalid(format!("--{}: {e}", key.replace('_', "-"))))?;
            }
        }
        for kv in &self.extra {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("--set {kv}: expected KEY=VALUE")))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

fn load_rays(args: &WithInput, scene: &Scene, cfg: &ExperimentConfig) -> Result<RaySet> {
    match &args.input {
        Some(path) => io::read_ray_set(path),
        None => Ok(scene.rays(cfg)),
    }
}

/// `dir/name.ext` -> `dir/name.art.ext`
fn art_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.art.{}", ext.to_string_lossy()),
        None => format!("{stem}.art"),
    };
    out.with_file_name(name)
}

fn print_table(table: &TableResult, path: &Path) {
    let avg = table.average();
    println!(
        "{}: {} rows, mean error {:.6e}, mean iterations {:.0}",
        path.display(),
        table.rows.len(),
        avg.error,
        avg.iterations
    );
}

fn table(args: &Common, sweep: Sweep, name: &str, paired: bool) -> Result<()> {
    let mut cfg = args.config()?;
    if matches!(sweep, Sweep::UnbrokenFraction(_)) {
        cfg.exclude_vertices = true;
    }
    let out = args.out(&format!("{name}.txt"));
    let format = ResultFormat::for_path(&out);
    if cfg.model == Method::Art {
        cfg.model = Method::Lambertian;
    }
    let brtl = run_table(&cfg, &sweep)?;
    emit_results(&brtl, &out, format)?;
    print_table(&brtl, &out);
    if paired {
        cfg.model = Method::Art;
        let art = run_table(&cfg, &sweep)?;
        let path = art_path(&out);
        emit_results(&art, &path, format)?;
        print_table(&art, &path);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenRays(args) => {
            let cfg = args.config()?;
            let scene = Scene::new(&cfg)?;
            let rays = scene.rays(&cfg);
            let out = args.out("rays.txt");
            io::write_ray_set(&out, &rays)?;
            println!(
                "{}: {} broken, {} unbroken (shortfall {} broken, {} unbroken)",
                out.display(),
                rays.broken_count(),
                rays.unbroken_count(),
                rays.shortfall.broken,
                rays.shortfall.unbroken
            );
        }
        Command::TravelTimes(args) => {
            let cfg = args.common.config()?;
            let scene = Scene::new(&cfg)?;
            let rays = load_rays(&args, &scene, &cfg)?;
            let times = travel_times(&rays.rays, &scene.field, cfg.quadrature)?;
            let out = args.common.out("times.txt");
            io::write_times(&out, &times)?;
            println!("{}: {} travel times", out.display(), times.len());
        }
        Command::Reduce(args) => {
            let mut cfg = args.common.config()?;
            if cfg.abstract_mode == AbstractMode::Off {
                cfg.abstract_mode = AbstractMode::Free;
            }
            let scene = Scene::new(&cfg)?;
            let rays = load_rays(&args, &scene, &cfg)?;
            let opts = partition_options(&cfg, &scene.grid).expect("abstract mode is on");
            let parts = partition_abstract_rays(&rays, &scene.domain, &opts);
            let out = args.common.out("abstract.txt");
            io::write_abstract_rays(&out, &parts)?;
            println!("{}: {} abstract rays from {} rays", out.display(), parts.len(), rays.len());
        }
        Command::Reconstruct(args) => {
            let cfg = args.common.config()?;
            let scene = Scene::new(&cfg)?;
            let rays = load_rays(&args, &scene, &cfg)?;
            let times = match &args.times {
                Some(path) => io::read_times(path)?,
                None => travel_times(&rays.rays, &scene.field, cfg.quadrature)?,
            };
            let rec = reconstruct(&scene, &cfg, &rays, &times)?;
            let out = args.common.out("reconstruction.brt");
            if out.extension().is_some_and(|e| e == "txt") {
                io::write_grid_vector_text(&out, &rec.values)?;
            } else {
                io::write_grid_vector(&out, &rec.values, scene.grid.n, scene.grid.cell_size)?;
            }
            let error = reconstruction_error(&rec.values, &scene.true_field(), &scene.error_mask())?;
            println!(
                "{}: {} rows, {} updates, error vs configured field {error:.6e}",
                out.display(),
                rec.matrix.n_rows(),
                rec.solve.iterations
            );
        }
        Command::Experiment(args) => {
            let cfg = args.config()?;
            let table = run_table(&cfg, &Sweep::Repeat(1))?;
            let out = args.out("results.txt");
            emit_results(&table, &out, ResultFormat::for_path(&out))?;
            print_table(&table, &out);
        }
        Command::Table1(args) => table(&args, Sweep::table1(), "table1", true)?,
        Command::Table2(args) => table(&args, Sweep::table2(), "table2", true)?,
        Command::Table3(args) => table(&args, Sweep::table3(), "table3", false)?,
        Command::Table4(args) => table(&args, Sweep::table4(), "table4", true)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

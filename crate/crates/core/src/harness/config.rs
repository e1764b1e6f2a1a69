use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rays::ReflectionModel;

/// Which data a run reconstructs from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Broken rays with Lambertian reflection plus unbroken rays.
    Lambertian,
    /// Broken rays with mirror reflection plus unbroken rays.
    Specular,
    /// Unbroken rays only (classical algebraic reconstruction).
    Art,
}

impl Method {
    pub fn reflection(self) -> ReflectionModel {
        match self {
            Method::Specular => ReflectionModel::Specular,
            Method::Lambertian | Method::Art => ReflectionModel::Lambertian,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Lambertian => "lambertian",
            Method::Specular => "specular",
            Method::Art => "art",
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambertian" | "brtl" => Ok(Method::Lambertian),
            "specular" => Ok(Method::Specular),
            "art" => Ok(Method::Art),
            _ => Err(Error::invalid(format!("unknown model `{s}` (lambertian, specular, art)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbstractMode {
    Off,
    Chained,
    Free,
}

impl AbstractMode {
    pub fn name(self) -> &'static str {
        match self {
            AbstractMode::Off => "off",
            AbstractMode::Chained => "chained",
            AbstractMode::Free => "free",
        }
    }
}

impl FromStr for AbstractMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(AbstractMode::Off),
            "chained" => Ok(AbstractMode::Chained),
            "free" => Ok(AbstractMode::Free),
            _ => Err(Error::invalid(format!("unknown abstract mode `{s}` (off, chained, free)"))),
        }
    }
}

/// Everything that determines an experiment. A run is a pure function of it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid_n: usize,
    pub domain_side: f64,
    pub obstacle_side: f64,
    /// Transceivers per boundary cell side.
    pub transceivers_per_side: usize,
    /// Arc-length spacing of the candidate reflection points.
    pub obstacle_spacing: f64,
    pub exclude_vertices: bool,
    /// Total ray count; split by `unbroken_fraction` unless `n_b`/`n_u` are set.
    pub rays: usize,
    pub unbroken_fraction: f64,
    pub n_b: Option<usize>,
    pub n_u: Option<usize>,
    pub model: Method,
    pub function: u8,
    /// Slope of the cone test function.
    pub k: f64,
    pub seed: u64,
    pub abstract_mode: AbstractMode,
    /// Cap on rays per abstract ray (0 = no cap).
    pub max_elements: usize,
    /// Candidates examined per partitioner extension step (0 = all).
    pub candidate_window: usize,
    /// Cells per abstract ray that several element rays may share (`none` =
    /// no limit).
    pub max_shared_cells: Option<usize>,
    pub specular_chaining: bool,
    pub tol: f64,
    pub max_updates: usize,
    /// Quadrature nodes per length unit.
    pub quadrature: f64,
    /// Mirror-reflection tolerance, radians.
    pub angle_tol: f64,
    /// Write measured wall time into results files. Off keeps files
    /// byte-reproducible.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid_n: 64,
            domain_side: 512.0,
            obstacle_side: 234.0,
            transceivers_per_side: 1,
            obstacle_spacing: 2.0,
            exclude_vertices: false,
            rays: 126_050,
            unbroken_fraction: 0.5,
            n_b: None,
            n_u: None,
            model: Method::Lambertian,
            function: 0,
            k: crate::field::DEFAULT_K,
            seed: 1,
            abstract_mode: AbstractMode::Off,
            max_elements: 0,
            candidate_window: 256,
            max_shared_cells: Some(0),
            specular_chaining: false,
            tol: 1e-10,
            max_updates: 500_000,
            quadrature: crate::field::DEFAULT_QUADRATURE,
            angle_tol: 0.01,
            record_wall_time: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::invalid(format!("bad boolean `{value}` for `{key}`"))),
    }
}

fn parse_opt(key: &str, value: &str, unset: &str) -> Result<Option<usize>> {
    if value == unset {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl ExperimentConfig {
    /// Sets one `key=value` setting. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "grid_n" => self.grid_n = parse(key, value)?,
            "domain_side" => self.domain_side = parse(key, value)?,
            "obstacle_side" => self.obstacle_side = parse(key, value)?,
            "transceivers_per_side" => self.transceivers_per_side = parse(key, value)?,
            "obstacle_spacing" => self.obstacle_spacing = parse(key, value)?,
            "exclude_vertices" => self.exclude_vertices = parse_bool(key, value)?,
            "rays" => self.rays = parse(key, value)?,
            "unbroken_fraction" => self.unbroken_fraction = parse(key, value)?,
            "n_b" => self.n_b = parse_opt(key, value, "auto")?,
            "n_u" => self.n_u = parse_opt(key, value, "auto")?,
            "model" => self.model = value.parse()?,
            "function" => self.function = parse(key, value.trim_start_matches('f'))?,
            "k" => self.k = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "abstract_mode" => self.abstract_mode = value.parse()?,
            "max_elements" => self.max_elements = parse(key, value)?,
            "candidate_window" => self.candidate_window = parse(key, value)?,
            "max_shared_cells" => self.max_shared_cells = parse_opt(key, value, "none")?,
            "specular_chaining" => self.specular_chaining = parse_bool(key, value)?,
            "tol" => self.tol = parse(key, value)?,
            "max_updates" => self.max_updates = parse(key, value)?,
            "quadrature" => self.quadrature = parse(key, value)?,
            "angle_tol" => self.angle_tol = parse(key, value)?,
            "record_wall_time" => self.record_wall_time = parse_bool(key, value)?,
            other => return Err(Error::invalid(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` text file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("line {}: expected key=value", i + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::invalid(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// The configuration as a `key=value` file that [`apply_text`](Self::apply_text) reads back.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<usize>| v.map_or("auto".to_string(), |v| v.to_string());
        let mut s = String::new();
        let _ = writeln!(s, "grid_n={}", self.grid_n);
        let _ = writeln!(s, "domain_side={}", self.domain_side);
        let _ = writeln!(s, "obstacle_side={}", self.obstacle_side);
        let _ = writeln!(s, "transceivers_per_side={}", self.transceivers_per_side);
        let _ = writeln!(s, "obstacle_spacing={}", self.obstacle_spacing);
        let _ = writeln!(s, "exclude_vertices={}", self.exclude_vertices);
        let _ = writeln!(s, "rays={}", self.rays);
        let _ = writeln!(s, "unbroken_fraction={}", self.unbroken_fraction);
        let _ = writeln!(s, "n_b={}", opt(self.n_b));
        let _ = writeln!(s, "n_u={}", opt(self.n_u));
        let _ = writeln!(s, "model={}", self.model.name());
        let _ = writeln!(s, "function={}", self.function);
        let _ = writeln!(s, "k={}", self.k);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "abstract_mode={}", self.abstract_mode.name());
        let _ = writeln!(s, "max_elements={}", self.max_elements);
        let _ = writeln!(s, "candidate_window={}", self.candidate_window);
        let _ = writeln!(s, "max_shared_cells={}", self.max_shared_cells.map_or("none".to_string(), |v| v.to_string()));
        let _ = writeln!(s, "specular_chaining={}", self.specular_chaining);
        let _ = writeln!(s, "tol={}", self.tol);
        let _ = writeln!(s, "max_updates={}", self.max_updates);
        let _ = writeln!(s, "quadrature={}", self.quadrature);
        let _ = writeln!(s, "angle_tol={}", self.angle_tol);
        let _ = writeln!(s, "record_wall_time={}", self.record_wall_time);
        s
    }

    /// Requested (broken, unbroken) counts before saturation.
    pub fn ray_split(&self) -> (usize, usize) {
        if self.model == Method::Art {
            return (0, self.n_u.unwrap_or(self.rays));
        }
        match (self.n_b, self.n_u) {
            (Some(b), Some(u)) => (b, u),
            (Some(b), None) => (b, self.rays.saturating_sub(b)),
            (None, Some(u)) => (self.rays.saturating_sub(u), u),
            (None, None) => {
                let u = (self.rays as f64 * self.unbroken_fraction).round() as usize;
                (self.rays - u.min(self.rays), u.min(self.rays))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (b, u) = self.ray_split();
        if b + u == 0 {
            return Err(Error::invalid("at least one ray must be requested"));
        }
        if !(self.obstacle_side > 0.0 && self.obstacle_side < self.domain_side) {
            return Err(Error::invalid(format!(
                "obstacle side {} must be positive and below the domain side {}",
                self.obstacle_side, self.domain_side
            )));
        }
        if !(0.0..=1.0).contains(&self.unbroken_fraction) {
            return Err(Error::invalid("unbroken_fraction must lie in [0, 1]"));
        }
        if self.grid_n == 0 || self.transceivers_per_side == 0 {
            return Err(Error::invalid("grid_n and transceivers_per_side must be positive"));
        }
        if self.function >= crate::field::TEST_FUNCTION_COUNT {
            return Err(Error::invalid(format!("unknown test function f{}", self.function)));
        }
        if !(self.tol >= 0.0) || !(self.quadrature > 0.0) || !(self.angle_tol >= 0.0) {
            return Err(Error::invalid("tol, quadrature and angle_tol must be nonnegative (quadrature positive)"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("model", "art").unwrap();
        cfg.set("n_b", "12").unwrap();
        cfg.set("function", "f7").unwrap();
        let mut back = ExperimentConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.apply_text("grid_n=32\ngird_n=4\n").is_err());
        assert!(cfg.set("model", "mirror").is_err());
    }

    #[test]
    fn split_by_fraction() {
        let mut cfg = ExperimentConfig::default();
        assert_eq!(cfg.ray_split(), (63_025, 63_025));
        cfg.unbroken_fraction = 0.95;
        let (b, u) = cfg.ray_split();
        assert_eq!(b + u, 126_050);
        assert_eq!(u, 119_748);
        cfg.model = Method::Art;
        assert_eq!(cfg.ray_split(), (0, 126_050));
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.obstacle_side = 600.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.rays = 0;
        assert!(cfg.validate().is_err());
    }
}

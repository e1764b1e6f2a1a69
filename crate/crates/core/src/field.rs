//! Slowness fields `f = 1 / c`, the near-constant speed model and travel-time
//! integration along rays.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Point2, Segment};
use crate::linsys::{Grid, GridVector};
use crate::rays::Ray;

/// Number of registered analytic test functions (`f0` .. `f12`).
pub const TEST_FUNCTION_COUNT: u8 = 13;

/// Default slope `K` of the cone test function, field units per length unit.
pub const DEFAULT_K: f64 = 0.001;

/// Default composite-trapezoid density, nodes per length unit.
pub const DEFAULT_QUADRATURE: f64 = 4.0;

/// One of the registered analytic test functions.
///
/// All are built from the slope `k`, a reference `center` and a length
/// `scale` (the domain side). With `a = k * scale / 2` and `r = |p - center|`:
///
/// | id | closed form |
/// |----|-------------|
/// | 0  | `k r` |
/// | 1  | `k |p - (center + (-s/8, s/8))|` |
/// | 2  | `k |p - (center + (s/6, -s/5))|` |
/// | 3  | `a (0.5 + 0.5 g(p; center + (-s/4, -s/4), s/8))` |
/// | 4  | `a (0.3 + g(p; center + (s/4, s/5), s/10))` |
/// | 5  | `k ((x - cx) + (y - cy)) + 1.25 k s` |
/// | 6  | `k (cx - x) + k s` |
/// | 7  | `a (1 + 0.5 sin(2 pi (x - cx) / s))` |
/// | 8  | `a (1 + 0.5 sin(4 pi (x - cx) / s) cos(4 pi (y - cy) / s))` |
/// | 9  | `a (0.2 + g(p; center + (-s/3, s/3), s/12) + 0.7 g(p; center + (s/3, -s/4), s/12))` |
/// | 10 | `k r + 0.25 a (1 + sin(8 pi r / s))` |
/// | 11 | `k r^2 / s + 0.1 a` |
/// | 12 | `a (1 + 0.4 cos(4 pi r / s))` |
///
/// where `g(p; q, sigma) = exp(-|p - q|^2 / (2 sigma^2))`. Every function is
/// nonnegative on the domain, all but `f0`..`f2` are bounded away from zero
/// for `k > 0`, and `k = 0` gives the zero field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub id: u8,
    pub k: f64,
    pub center: Point2,
    pub scale: f64,
}

impl TestFunction {
    pub fn new(id: u8, k: f64, center: Point2, scale: f64) -> Result<Self> {
        if id >= TEST_FUNCTION_COUNT {
            return Err(Error::invalid(format!(
                "unknown test function f{id} (valid ids are 0..{})",
                TEST_FUNCTION_COUNT - 1
            )));
        }
        if !(k.is_finite() && k >= 0.0 && scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid("test function slope must be nonnegative and scale positive"));
        }
        Ok(TestFunction { id, k, center, scale })
    }

    /// Test function `id` centred on `dom` with the default slope.
    pub fn for_domain(id: u8, dom: &DomainSpec) -> Result<Self> {
        TestFunction::new(id, DEFAULT_K, dom.center(), dom.side)
    }

    pub fn eval(&self, p: Point2) -> f64 {
        let (k, s) = (self.k, self.scale);
        let a = 0.5 * k * s;
        let (cx, cy) = (self.center.x, self.center.y);
        let dx = p.x - cx;
        let dy = p.y - cy;
        let r = dx.hypot(dy);
        let at = |ox: f64, oy: f64| (dx - ox).hypot(dy - oy);
        let gauss = |ox: f64, oy: f64, sigma: f64| {
            let d = at(ox, oy);
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        };
        match self.id {
            0 => k * r,
            1 => k * at(-s / 8.0, s / 8.0),
            2 => k * at(s / 6.0, -s / 5.0),
            3 => a * (0.5 + 0.5 * gauss(-s / 4.0, -s / 4.0, s / 8.0)),
            4 => a * (0.3 + gauss(s / 4.0, s / 5.0, s / 10.0)),
            5 => k * (dx + dy) + 1.25 * k * s,
            6 => -k * dx + k * s,
            7 => a * (1.0 + 0.5 * (2.0 * PI * dx / s).sin()),
            8 => a * (1.0 + 0.5 * (4.0 * PI * dx / s).sin() * (4.0 * PI * dy / s).cos()),
            9 => {
                a * (0.2
                    + gauss(-s / 3.0, s / 3.0, s / 12.0)
                    + 0.7 * gauss(s / 3.0, -s / 4.0, s / 12.0))
            }
            10 => k * r + 0.25 * a * (1.0 + (8.0 * PI * r / s).sin()),
            11 => k * r * r / s + 0.1 * a,
            12 => a * (1.0 + 0.4 * (4.0 * PI * r / s).cos()),
            _ => unreachable!("id validated at construction"),
        }
    }
}

/// Piecewise-constant field backed by one value per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: GridVector,
}

impl GridField {
    pub fn new(grid: Grid, values: GridVector) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::invalid(format!(
                "grid field needs {} values, got {}",
                grid.cells(),
                values.len()
            )));
        }
        Ok(GridField { grid, values })
    }

    pub fn eval(&self, p: Point2) -> f64 {
        self.values[self.grid.cell_at(p)]
    }
}

/// A slowness field over the bounding square.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField {
    Constant(f64),
    Test(TestFunction),
    Grid(GridField),
}

impl ScalarField {
    pub fn eval(&self, p: Point2) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Test(tf) => tf.eval(p),
            ScalarField::Grid(g) => g.eval(p),
        }
    }

    /// Cell-centre samples over `grid`, row-major.
    pub fn sample(&self, grid: &Grid) -> GridVector {
        GridVector::from(
            (0..grid.cells())
                .map(|i| self.eval(grid.cell_center(i)))
                .collect::<Vec<_>>(),
        )
    }
}

/// Value of `field` at `p`.
pub fn eval_field(field: &ScalarField, p: Point2) -> f64 {
    field.eval(p)
}

/// Speed `c(x) = c0 + eps(x)`; the reconstructed unknown is `1 / c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedModel {
    pub c0: f64,
    pub epsilon: ScalarField,
}

impl SpeedModel {
    /// Validates `c0 + eps > 0` on a `samples` x `samples` lattice over `dom`.
    pub fn new(c0: f64, epsilon: ScalarField, dom: &DomainSpec, samples: usize) -> Result<Self> {
        let samples = samples.max(2);
        let step = dom.side / (samples - 1) as f64;
        for i in 0..samples {
            for j in 0..samples {
                let p = Point2::new(dom.origin.x + i as f64 * step, dom.origin.y + j as f64 * step);
                let c = c0 + epsilon.eval(p);
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::invalid(format!("speed {c} at {p} is not positive")));
                }
            }
        }
        Ok(SpeedModel { c0, epsilon })
    }

    pub fn speed(&self, p: Point2) -> f64 {
        self.c0 + self.epsilon.eval(p)
    }

    pub fn slowness(&self, p: Point2) -> f64 {
        1.0 / self.speed(p)
    }
}

/// Composite trapezoid integral of `field` along `seg` with at least
/// `nodes_per_unit` nodes per length unit.
///
/// The segment is integrated in a canonical direction so that the result does
/// not depend on its orientation.
pub fn segment_integral(seg: &Segment, field: &ScalarField, nodes_per_unit: f64) -> f64 {
    let (a, b) = if (seg.a.x, seg.a.y) <= (seg.b.x, seg.b.y) {
        (seg.a, seg.b)
    } else {
        (seg.b, seg.a)
    };
    let len = a.distance(b);
    let intervals = ((len * nodes_per_unit).ceil() as usize).max(1);
    let h = 1.0 / intervals as f64;
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let at = |k: usize| {
        let t = k as f64 * h;
        field.eval(Point2::new(a.x + t * dx, a.y + t * dy))
    };
    let inner: f64 = (1..intervals).map(at).sum();
    len * h * (0.5 * (at(0) + at(intervals)) + inner)
}

/// Travel time along `ray`: the sum of the leg integrals.
pub fn travel_time(ray: &Ray, field: &ScalarField, nodes_per_unit: f64) -> Result<f64> {
    if !(nodes_per_unit > 0.0 && nodes_per_unit.is_finite()) {
        return Err(Error::invalid(format!("quadrature density {nodes_per_unit} must be positive")));
    }
    let mut total = 0.0;
    for leg in ray.legs().iter() {
        if leg.a == leg.b {
            return Err(Error::invalid("ray has a zero-length leg"));
        }
        total += segment_integral(leg, field, nodes_per_unit);
    }
    if !total.is_finite() {
        return Err(Error::invalid("travel time is not finite"));
    }
    Ok(total)
}

/// Travel times for every ray, in ray order.
pub fn travel_times(rays: &[Ray], field: &ScalarField, nodes_per_unit: f64) -> Result<Vec<f64>> {
    rays.par_iter()
        .enumerate()
        .map(|(index, ray)| {
            travel_time(ray, field, nodes_per_unit).map_err(|e| Error::Ray {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

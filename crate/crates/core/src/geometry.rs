//! Planar primitives for the square observation domain and the square
//! reflecting obstacle.
//!
//! Everything here is `f64` with explicit tolerances. Points that are meant to
//! lie on an edge of a square are built from the same `min_x()`/`max_y()`/...
//! expressions used by the predicates, so on-edge tests are exact in practice.

use std::fmt;

use crate::error::{Error, Result};

/// Default positional tolerance, in length units.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn sub(self, other: Point2) -> Vec2 {
        Vec2::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, v: Vec2) -> Point2 {
        Point2::new(self.x + v.x, self.y + v.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        self.sub(other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Bit pattern of the coordinates; used as an exact hashing key.
    pub fn bits(self) -> [u64; 2] {
        [self.x.to_bits(), self.y.to_bits()]
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// A straight segment of nonzero length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub fn new(a: Point2, b: Point2) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid(format!("non-finite segment {a} -> {b}")));
        }
        if a == b {
            return Err(Error::invalid(format!("degenerate segment at {a}")));
        }
        Ok(Segment { a, b })
    }

    pub fn direction(&self) -> Vec2 {
        self.b.sub(self.a)
    }

    pub fn length(&self) -> f64 {
        self.direction().norm()
    }

    pub fn reversed(&self) -> Segment {
        Segment {
            a: self.b,
            b: self.a,
        }
    }

    pub fn point_at(&self, t: f64) -> Point2 {
        self.a.add(self.direction().scale(t))
    }

    fn check(&self) -> Result<()> {
        if self.a == self.b {
            return Err(Error::invalid(format!("degenerate segment at {}", self.a)));
        }
        Ok(())
    }
}

/// Closed axis-aligned square `[min_x, max_x] x [min_y, max_y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    pub center: Point2,
    pub side: f64,
}

/// Which edge of a square a boundary point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

impl Edge {
    fn is_horizontal(self) -> bool {
        matches!(self, Edge::Bottom | Edge::Top)
    }
}

impl Square {
    pub fn half(&self) -> f64 {
        0.5 * self.side
    }
    pub fn min_x(&self) -> f64 {
        self.center.x - self.half()
    }
    pub fn max_x(&self) -> f64 {
        self.center.x + self.half()
    }
    pub fn min_y(&self) -> f64 {
        self.center.y - self.half()
    }
    pub fn max_y(&self) -> f64 {
        self.center.y + self.half()
    }

    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.min_x(), self.min_y()),
            Point2::new(self.max_x(), self.min_y()),
            Point2::new(self.max_x(), self.max_y()),
            Point2::new(self.min_x(), self.max_y()),
        ]
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        p.x >= self.min_x() - tol
            && p.x <= self.max_x() + tol
            && p.y >= self.min_y() - tol
            && p.y <= self.max_y() + tol
    }

    /// Euclidean distance from `p` to the boundary curve of the square.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        let dx_out = (self.min_x() - p.x).max(p.x - self.max_x());
        let dy_out = (self.min_y() - p.y).max(p.y - self.max_y());
        if dx_out <= 0.0 && dy_out <= 0.0 {
            // inside: nearest edge
            (-dx_out).min(-dy_out)
        } else {
            dx_out.max(0.0).hypot(dy_out.max(0.0))
        }
    }

    /// Edges that `p` lies on, within `tol`. Two edges means a corner.
    pub fn edges_at(&self, p: Point2, tol: f64) -> Vec<Edge> {
        let mut edges = Vec::with_capacity(2);
        let in_x = p.x >= self.min_x() - tol && p.x <= self.max_x() + tol;
        let in_y = p.y >= self.min_y() - tol && p.y <= self.max_y() + tol;
        if in_x && (p.y - self.min_y()).abs() <= tol {
            edges.push(Edge::Bottom);
        }
        if in_y && (p.x - self.max_x()).abs() <= tol {
            edges.push(Edge::Right);
        }
        if in_x && (p.y - self.max_y()).abs() <= tol {
            edges.push(Edge::Top);
        }
        if in_y && (p.x - self.min_x()).abs() <= tol {
            edges.push(Edge::Left);
        }
        edges
    }

    /// Parameter interval `[t0, t1]` of `seg` inside the closed square, if any
    /// (Liang-Barsky clipping).
    pub fn clip(&self, seg: &Segment) -> Option<(f64, f64)> {
        let d = seg.direction();
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        let checks = [
            (-d.x, seg.a.x - self.min_x()),
            (d.x, self.max_x() - seg.a.x),
            (-d.y, seg.a.y - self.min_y()),
            (d.y, self.max_y() - seg.a.y),
        ];
        for (p, q) in checks {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
        (t0 <= t1).then_some((t0, t1))
    }
}

/// The square observation region. Its boundary carries the transceivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub origin: Point2,
    pub side: f64,
}

impl DomainSpec {
    pub fn new(origin: Point2, side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) || !origin.is_finite() {
            return Err(Error::invalid(format!("domain side must be positive, got {side}")));
        }
        Ok(DomainSpec { origin, side })
    }

    pub fn square(&self) -> Square {
        Square {
            center: Point2::new(
                self.origin.x + 0.5 * self.side,
                self.origin.y + 0.5 * self.side,
            ),
            side: self.side,
        }
    }

    pub fn center(&self) -> Point2 {
        self.square().center
    }
}

/// The axis-aligned square obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: Point2,
    pub side: f64,
}

impl Obstacle {
    pub fn new(center: Point2, side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) || !center.is_finite() {
            return Err(Error::invalid(format!("obstacle side must be positive, got {side}")));
        }
        Ok(Obstacle { center, side })
    }

    /// An obstacle whose closure lies strictly inside `dom`.
    pub fn inside(dom: &DomainSpec, center: Point2, side: f64) -> Result<Self> {
        let obs = Obstacle::new(center, side)?;
        let outer = dom.square();
        let inner = obs.square();
        let clear = inner.min_x() > outer.min_x()
            && inner.max_x() < outer.max_x()
            && inner.min_y() > outer.min_y()
            && inner.max_y() < outer.max_y();
        if !clear {
            return Err(Error::invalid(format!(
                "obstacle (center {center}, side {side}) is not strictly inside the domain"
            )));
        }
        Ok(obs)
    }

    pub fn square(&self) -> Square {
        Square {
            center: self.center,
            side: self.side,
        }
    }

    pub fn corners(&self) -> [Point2; 4] {
        self.square().corners()
    }

    pub fn is_corner(&self, p: Point2, tol: f64) -> bool {
        self.corners().iter().any(|c| c.distance(p) <= tol)
    }

    /// Positional tolerance scaled to the obstacle size.
    pub fn tol(&self) -> f64 {
        DEFAULT_TOL * self.side.max(1.0)
    }
}

/// True iff `seg` touches the closed obstacle anywhere other than at one of
/// its own endpoints.
///
/// Entering the interior, grazing along an edge, and passing through a
/// corner all count as blocked. A segment that ends on the obstacle boundary
/// (a reflection leg) is not blocked. Orientation does not matter.
pub fn segment_blocked_by_obstacle(seg: &Segment, obs: &Obstacle, tol: f64) -> Result<bool> {
    seg.check()?;
    let len = seg.length();
    let Some((t0, t1)) = obs.square().clip(seg) else {
        return Ok(false);
    };
    let contact = (t1 - t0) * len;
    let at_start = t1 * len <= tol;
    let at_end = (1.0 - t0) * len <= tol;
    Ok(!(contact <= tol && (at_start || at_end)))
}

pub fn on_observation_boundary(p: Point2, dom: &DomainSpec, tol: f64) -> bool {
    dom.square().boundary_distance(p) <= tol
}

/// Points along the obstacle boundary at uniform arc-length `spacing`,
/// walking counter-clockwise from the lower-left corner.
///
/// Without vertex exclusion the walk starts on the corner; with it the walk
/// starts half a step in and any point that still lands on a corner is
/// dropped.
pub fn obstacle_boundary_points(
    obs: &Obstacle,
    spacing: f64,
    exclude_vertices: bool,
) -> Result<Vec<Point2>> {
    if !(spacing > 0.0 && spacing < obs.side) {
        return Err(Error::invalid(format!(
            "boundary spacing {spacing} must lie in (0, {})",
            obs.side
        )));
    }
    let sq = obs.square();
    let perimeter = 4.0 * obs.side;
    let count = (perimeter / spacing + 1e-9).floor() as usize;
    let start = if exclude_vertices { 0.5 * spacing } else { 0.0 };
    let tol = obs.tol();
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let s = start + k as f64 * spacing;
        let edge = ((s / obs.side).floor() as usize).min(3);
        let off = s - edge as f64 * obs.side;
        let p = match edge {
            0 => Point2::new(sq.min_x() + off, sq.min_y()),
            1 => Point2::new(sq.max_x(), sq.min_y() + off),
            2 => Point2::new(sq.max_x() - off, sq.max_y()),
            _ => Point2::new(sq.min_x(), sq.max_y() - off),
        };
        // snap to the exact corner coordinates when within tolerance
        let p = sq
            .corners()
            .into_iter()
            .find(|c| c.distance(p) <= tol)
            .unwrap_or(p);
        if exclude_vertices && obs.is_corner(p, tol) {
            continue;
        }
        out.push(p);
    }
    Ok(out)
}

/// Mirror test at a point `p` on the boundary of an axis-aligned square.
///
/// The incoming direction, reflected across the edge containing `p`, must be
/// parallel to the outgoing direction within `angle_tol` radians.
pub fn mirror_reflection_at(
    incoming: &Segment,
    outgoing: &Segment,
    p: Point2,
    square: &Square,
    pos_tol: f64,
    angle_tol: f64,
) -> Result<bool> {
    incoming.check()?;
    outgoing.check()?;
    let edges = square.edges_at(p, pos_tol);
    let edge = match edges.as_slice() {
        [] => {
            return Err(Error::invalid(format!(
                "reflection point {p} is not on the square boundary"
            )))
        }
        [e] => *e,
        _ => return Err(Error::UndefinedTangent { x: p.x, y: p.y }),
    };
    if incoming.b.distance(p) > pos_tol || outgoing.a.distance(p) > pos_tol {
        return Err(Error::invalid(format!(
            "segments must meet at the reflection point {p}"
        )));
    }
    let u = incoming.direction();
    let v = outgoing.direction();
    let reflected = if edge.is_horizontal() {
        Vec2::new(u.x, -u.y)
    } else {
        Vec2::new(-u.x, u.y)
    };
    let angle = reflected.cross(v).atan2(reflected.dot(v)).abs();
    Ok(angle <= angle_tol)
}

/// Angle of incidence equals angle of reflection at `p` on the obstacle boundary.
pub fn mirror_reflection_check(
    incoming: &Segment,
    outgoing: &Segment,
    p: Point2,
    obs: &Obstacle,
    angle_tol: f64,
) -> Result<bool> {
    mirror_reflection_at(incoming, outgoing, p, &obs.square(), obs.tol(), angle_tol)
}

/// True iff the segments share a point other than a common endpoint.
/// Collinear overlap counts as intersecting.
pub fn segments_properly_intersect(s1: &Segment, s2: &Segment) -> bool {
    const EPS: f64 = 1e-12;
    let p = s1.a;
    let r = s1.direction();
    let q = s2.a;
    let s = s2.direction();
    let qp = q.sub(p);
    let denom = r.cross(s);
    let scale = r.norm() * s.norm();

    if denom.abs() > EPS * scale {
        let t = qp.cross(s) / denom;
        let u = qp.cross(r) / denom;
        if t < -EPS || t > 1.0 + EPS || u < -EPS || u > 1.0 + EPS {
            return false;
        }
        let t_end = t.abs() <= EPS || (t - 1.0).abs() <= EPS;
        let u_end = u.abs() <= EPS || (u - 1.0).abs() <= EPS;
        return !(t_end && u_end);
    }

    // parallel: only collinear segments can meet
    if qp.cross(r).abs() > EPS * r.norm() * qp.norm().max(r.norm()) {
        return false;
    }
    let rr = r.dot(r);
    let t0 = qp.dot(r) / rr;
    let t1 = q.add(s).sub(p).dot(r) / rr;
    let lo = t0.min(t1).max(0.0);
    let hi = t0.max(t1).min(1.0);
    if lo > hi + EPS {
        return false;
    }
    // a single touching point is necessarily an endpoint of both
    hi - lo > EPS
}

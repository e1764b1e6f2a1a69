//! Broken and unbroken rays, random ray-set generation under Lambertian or
//! specular reflection, and grouping of rays into abstract rays.

use std::collections::{HashMap, HashSet};
use std::ops::Deref;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{
    mirror_reflection_at, mirror_reflection_check, on_observation_boundary,
    obstacle_boundary_points, segment_blocked_by_obstacle, segments_properly_intersect, DomainSpec,
    Obstacle, Point2, Segment, DEFAULT_TOL,
};
use crate::linsys::{cell_traversal, Grid};

/// A transmitter-to-receiver path, straight or reflected once at the obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ray {
    Unbroken { t: Point2, r: Point2 },
    Broken { t: Point2, h: Point2, r: Point2 },
}

/// Exact identity of a ray: the bit patterns of its vertex coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RayKey {
    Unbroken([u64; 4]),
    Broken([u64; 6]),
}

/// The one or two straight legs of a ray.
#[derive(Debug, Clone, Copy)]
pub struct Legs {
    buf: [Segment; 2],
    len: usize,
}

impl Deref for Legs {
    type Target = [Segment];
    fn deref(&self) -> &[Segment] {
        &self.buf[..self.len]
    }
}

impl Ray {
    pub fn unbroken(t: Point2, r: Point2) -> Result<Ray> {
        Segment::new(t, r)?;
        Ok(Ray::Unbroken { t, r })
    }

    pub fn broken(t: Point2, h: Point2, r: Point2) -> Result<Ray> {
        let a = Segment::new(t, h)?;
        let b = Segment::new(h, r)?;
        if legs_overlap(&a, &b) {
            return Err(Error::invalid(format!(
                "broken ray legs {t} -> {h} -> {r} overlap"
            )));
        }
        Ok(Ray::Broken { t, h, r })
    }

    pub fn transmitter(&self) -> Point2 {
        match *self {
            Ray::Unbroken { t, .. } | Ray::Broken { t, .. } => t,
        }
    }

    pub fn receiver(&self) -> Point2 {
        match *self {
            Ray::Unbroken { r, .. } | Ray::Broken { r, .. } => r,
        }
    }

    pub fn reflection_point(&self) -> Option<Point2> {
        match *self {
            Ray::Broken { h, .. } => Some(h),
            Ray::Unbroken { .. } => None,
        }
    }

    pub fn is_broken(&self) -> bool {
        matches!(self, Ray::Broken { .. })
    }

    pub fn legs(&self) -> Legs {
        match *self {
            Ray::Unbroken { t, r } => {
                let s = Segment { a: t, b: r };
                Legs { buf: [s, s], len: 1 }
            }
            Ray::Broken { t, h, r } => Legs {
                buf: [Segment { a: t, b: h }, Segment { a: h, b: r }],
                len: 2,
            },
        }
    }

    pub fn length(&self) -> f64 {
        self.legs().iter().map(Segment::length).sum()
    }

    pub fn reversed(&self) -> Ray {
        match *self {
            Ray::Unbroken { t, r } => Ray::Unbroken { t: r, r: t },
            Ray::Broken { t, h, r } => Ray::Broken { t: r, h, r: t },
        }
    }

    pub fn key(&self) -> RayKey {
        match *self {
            Ray::Unbroken { t, r } => {
                let [a, b] = t.bits();
                let [c, d] = r.bits();
                RayKey::Unbroken([a, b, c, d])
            }
            Ray::Broken { t, h, r } => {
                let [a, b] = t.bits();
                let [c, d] = h.bits();
                let [e, f] = r.bits();
                RayKey::Broken([a, b, c, d, e, f])
            }
        }
    }
}

fn legs_overlap(a: &Segment, b: &Segment) -> bool {
    // a ends where b starts; they overlap iff b doubles back along a
    let u = a.a.sub(a.b);
    let v = b.b.sub(b.a);
    let scale = u.norm() * v.norm();
    u.cross(v).abs() <= 1e-12 * scale && u.dot(v) > 0.0
}

/// Reflection law applied at the obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReflectionModel {
    /// Any outgoing direction is allowed.
    Lambertian,
    /// Angle of incidence must equal angle of reflection.
    Specular,
}

/// Why a candidate ray was discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    /// A leg touches the obstacle away from its endpoints.
    Blocked,
    /// The reflection at the obstacle is not mirror-like (specular mode).
    NotSpecular,
    /// Zero-length leg, or legs that double back on each other.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Draw {
    Accepted(Ray),
    Rejected(Rejection),
}

/// Transmitter and receiver points on the observation boundary plus candidate
/// reflection points on the obstacle boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TransceiverLayout {
    pub receivers: Vec<Point2>,
    pub transmitters: Vec<Point2>,
    pub obstacle_points: Vec<Point2>,
}

impl TransceiverLayout {
    pub fn new(
        dom: &DomainSpec,
        obs: &Obstacle,
        receivers: Vec<Point2>,
        transmitters: Vec<Point2>,
        obstacle_points: Vec<Point2>,
    ) -> Result<Self> {
        let tol = DEFAULT_TOL * dom.side.max(1.0);
        for p in receivers.iter().chain(&transmitters) {
            if !on_observation_boundary(*p, dom, tol) {
                return Err(Error::invalid(format!("{p} is not on the observation boundary")));
            }
        }
        for p in &obstacle_points {
            if obs.square().boundary_distance(*p) > obs.tol() {
                return Err(Error::invalid(format!("{p} is not on the obstacle boundary")));
            }
        }
        Ok(TransceiverLayout {
            receivers,
            transmitters,
            obstacle_points,
        })
    }

    /// `per_side` transceivers evenly spaced on each boundary cell side of an
    /// `grid_n` x `grid_n` grid (one per side gives the cell-side midpoints,
    /// `4 * grid_n` in total), every one acting as transmitter and receiver.
    pub fn boundary_transceivers(
        dom: &DomainSpec,
        grid_n: usize,
        per_side: usize,
        obs: &Obstacle,
        spacing: f64,
        exclude_vertices: bool,
    ) -> Result<Self> {
        if grid_n == 0 || per_side == 0 {
            return Err(Error::invalid("grid size and transceivers per cell side must be positive"));
        }
        let sq = dom.square();
        let d = dom.side / grid_n as f64;
        let offsets: Vec<f64> = (0..grid_n)
            .flat_map(|i| (0..per_side).map(move |k| (i as f64 + (k as f64 + 0.5) / per_side as f64) * d))
            .collect();
        let mut pts = Vec::with_capacity(4 * offsets.len());
        pts.extend(offsets.iter().map(|o| Point2::new(sq.min_x() + o, sq.min_y())));
        pts.extend(offsets.iter().map(|o| Point2::new(sq.max_x(), sq.min_y() + o)));
        pts.extend(offsets.iter().map(|o| Point2::new(sq.max_x() - o, sq.max_y())));
        pts.extend(offsets.iter().map(|o| Point2::new(sq.min_x(), sq.max_y() - o)));
        let h = obstacle_boundary_points(obs, spacing, exclude_vertices)?;
        TransceiverLayout::new(dom, obs, pts.clone(), pts, h)
    }
}

/// Classifies the broken candidate `t -> h -> r`.
pub fn classify_broken(
    t: Point2,
    h: Point2,
    r: Point2,
    obs: &Obstacle,
    model: ReflectionModel,
    angle_tol: f64,
) -> Draw {
    if t == h || h == r {
        return Draw::Rejected(Rejection::Degenerate);
    }
    let leg1 = Segment { a: t, b: h };
    let leg2 = Segment { a: h, b: r };
    if legs_overlap(&leg1, &leg2) {
        return Draw::Rejected(Rejection::Degenerate);
    }
    let tol = obs.tol();
    let blocked = |s: &Segment| segment_blocked_by_obstacle(s, obs, tol).unwrap_or(true);
    if blocked(&leg1) || blocked(&leg2) {
        return Draw::Rejected(Rejection::Blocked);
    }
    if model == ReflectionModel::Specular {
        match mirror_reflection_check(&leg1, &leg2, h, obs, angle_tol) {
            Ok(true) => {}
            // corners have no tangent and so never reflect specularly
            Ok(false) | Err(_) => return Draw::Rejected(Rejection::NotSpecular),
        }
    }
    Draw::Accepted(Ray::Broken { t, h, r })
}

pub fn classify_unbroken(t: Point2, r: Point2, obs: &Obstacle) -> Draw {
    if t == r {
        return Draw::Rejected(Rejection::Degenerate);
    }
    let seg = Segment { a: t, b: r };
    match segment_blocked_by_obstacle(&seg, obs, obs.tol()) {
        Ok(false) => Draw::Accepted(Ray::Unbroken { t, r }),
        _ => Draw::Rejected(Rejection::Blocked),
    }
}

/// Draws `(r, t, h)` uniformly and keeps the triple if both legs are clear
/// (and, for specular reflection, the reflection is mirror-like).
pub fn generate_broken_ray<R: Rng + ?Sized>(
    rng: &mut R,
    layout: &TransceiverLayout,
    obs: &Obstacle,
    model: ReflectionModel,
    angle_tol: f64,
) -> Result<Draw> {
    if layout.receivers.is_empty() || layout.transmitters.is_empty() || layout.obstacle_points.is_empty() {
        return Err(Error::ExhaustedCandidates { kind: "broken" });
    }
    let r = layout.receivers[rng.gen_range(0..layout.receivers.len())];
    let t = layout.transmitters[rng.gen_range(0..layout.transmitters.len())];
    let h = layout.obstacle_points[rng.gen_range(0..layout.obstacle_points.len())];
    Ok(classify_broken(t, h, r, obs, model, angle_tol))
}

pub fn generate_unbroken_ray<R: Rng + ?Sized>(
    rng: &mut R,
    layout: &TransceiverLayout,
    obs: &Obstacle,
) -> Result<Draw> {
    if layout.receivers.is_empty() || layout.transmitters.is_empty() {
        return Err(Error::ExhaustedCandidates { kind: "unbroken" });
    }
    let r = layout.receivers[rng.gen_range(0..layout.receivers.len())];
    let t = layout.transmitters[rng.gen_range(0..layout.transmitters.len())];
    Ok(classify_unbroken(t, r, obs))
}

/// Every valid broken ray of the layout, in transmitter/obstacle/receiver
/// index order.
pub fn enumerate_broken(
    layout: &TransceiverLayout,
    obs: &Obstacle,
    model: ReflectionModel,
    angle_tol: f64,
) -> Vec<Ray> {
    let tol = obs.tol();
    let clear = |p: Point2, h: Point2| {
        p != h && !segment_blocked_by_obstacle(&Segment { a: p, b: h }, obs, tol).unwrap_or(true)
    };
    let rx_vis: Vec<Vec<bool>> = layout
        .obstacle_points
        .iter()
        .map(|&h| layout.receivers.iter().map(|&r| clear(r, h)).collect())
        .collect();
    let mut out = Vec::new();
    for &t in &layout.transmitters {
        for (hi, &h) in layout.obstacle_points.iter().enumerate() {
            if !clear(t, h) {
                continue;
            }
            for (ri, &r) in layout.receivers.iter().enumerate() {
                if !rx_vis[hi][ri] {
                    continue;
                }
                if let Draw::Accepted(ray) = classify_broken(t, h, r, obs, model, angle_tol) {
                    out.push(ray);
                }
            }
        }
    }
    out
}

pub fn enumerate_unbroken(layout: &TransceiverLayout, obs: &Obstacle) -> Vec<Ray> {
    let mut out = Vec::new();
    for &t in &layout.transmitters {
        for &r in &layout.receivers {
            if let Draw::Accepted(ray) = classify_unbroken(t, r, obs) {
                out.push(ray);
            }
        }
    }
    out
}

/// Sizes of the complete (Lambertian) ray universe of a layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxRays {
    pub unbroken: usize,
    pub broken: usize,
}

pub fn count_max_rays(layout: &TransceiverLayout, obs: &Obstacle) -> MaxRays {
    MaxRays {
        unbroken: enumerate_unbroken(layout, obs).len(),
        broken: enumerate_broken(layout, obs, ReflectionModel::Lambertian, 0.0).len(),
    }
}

/// How many requested rays could not be produced because the layout ran out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Shortfall {
    pub broken: usize,
    pub unbroken: usize,
}

/// Ordered collection of distinct rays.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySet {
    pub rays: Vec<Ray>,
    pub seed: u64,
    pub shortfall: Shortfall,
}

impl RaySet {
    pub fn from_rays(rays: Vec<Ray>, seed: u64) -> Result<Self> {
        let mut seen = HashSet::with_capacity(rays.len());
        for (i, ray) in rays.iter().enumerate() {
            if !seen.insert(ray.key()) {
                return Err(Error::invalid(format!("ray {i} duplicates an earlier ray")));
            }
        }
        Ok(RaySet {
            rays,
            seed,
            shortfall: Shortfall::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }

    pub fn broken_count(&self) -> usize {
        self.rays.iter().filter(|r| r.is_broken()).count()
    }

    pub fn unbroken_count(&self) -> usize {
        self.len() - self.broken_count()
    }
}

/// Rejection-sampling attempts allowed per requested ray before falling back
/// to exhaustive enumeration.
pub const ATTEMPTS_PER_RAY: usize = 50;

fn sample_unique<R, D, E>(rng: &mut R, wanted: usize, mut draw: D, enumerate: E) -> (Vec<Ray>, usize)
where
    R: Rng,
    D: FnMut(&mut R) -> Option<Ray>,
    E: FnOnce() -> Vec<Ray>,
{
    let mut seen = HashSet::with_capacity(wanted);
    let mut out = Vec::with_capacity(wanted);
    if wanted == 0 {
        return (out, 0);
    }
    let cap = ATTEMPTS_PER_RAY * wanted;
    let mut attempts = 0;
    while out.len() < wanted && attempts < cap {
        attempts += 1;
        if let Some(ray) = draw(rng) {
            if seen.insert(ray.key()) {
                out.push(ray);
            }
        }
    }
    if out.len() < wanted {
        let mut all = enumerate();
        all.shuffle(rng);
        for ray in all {
            if out.len() == wanted {
                break;
            }
            if seen.insert(ray.key()) {
                out.push(ray);
            }
        }
    }
    let short = wanted - out.len();
    (out, short)
}

/// `n_b` distinct broken and `n_u` distinct unbroken rays in a seed-determined
/// order. Saturates at the size of the ray universe; the shortfall is recorded.
pub fn build_ray_set(
    layout: &TransceiverLayout,
    obs: &Obstacle,
    n_b: usize,
    n_u: usize,
    model: ReflectionModel,
    angle_tol: f64,
    seed: u64,
) -> RaySet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let can_break = !layout.obstacle_points.is_empty()
        && !layout.receivers.is_empty()
        && !layout.transmitters.is_empty();
    let (broken, short_b) = if can_break {
        sample_unique(
            &mut rng,
            n_b,
            |rng| match generate_broken_ray(rng, layout, obs, model, angle_tol) {
                Ok(Draw::Accepted(ray)) => Some(ray),
                _ => None,
            },
            || enumerate_broken(layout, obs, model, angle_tol),
        )
    } else {
        (Vec::new(), n_b)
    };
    let can_pair = !layout.receivers.is_empty() && !layout.transmitters.is_empty();
    let (unbroken, short_u) = if can_pair {
        sample_unique(
            &mut rng,
            n_u,
            |rng| match generate_unbroken_ray(rng, layout, obs) {
                Ok(Draw::Accepted(ray)) => Some(ray),
                _ => None,
            },
            || enumerate_unbroken(layout, obs),
        )
    } else {
        (Vec::new(), n_u)
    };
    let mut rays = broken;
    rays.extend(unbroken);
    rays.shuffle(&mut rng);
    RaySet {
        rays,
        seed,
        shortfall: Shortfall {
            broken: short_b,
            unbroken: short_u,
        },
    }
}

/// How abstract rays are assembled from the source rays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMode {
    /// Consecutive elements share a vertex on the observation boundary.
    Chained,
    /// Any pairwise non-intersecting rays may be grouped; gaps allowed.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionOptions {
    pub mode: PartitionMode,
    /// Require mirror-like reflection at shared boundary vertices (chained mode).
    pub specular_chaining: bool,
    pub angle_tol: f64,
    /// Upper bound on rays per abstract ray; 0 means unbounded.
    pub max_elements: usize,
    /// Unused candidates examined per extension attempt; 0 means unbounded.
    pub candidate_window: usize,
    /// Limit on the grid cells of one abstract ray crossed by two or more of
    /// its element rays.
    pub shared_cells: Option<SharedCellLimit>,
}

/// Cells crossed by more than one element ray get an averaged weight, which
/// only approximates the summed travel time; this caps how many there are.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharedCellLimit {
    pub grid: Grid,
    pub max_shared: usize,
}

impl PartitionOptions {
    pub fn new(mode: PartitionMode) -> Self {
        PartitionOptions {
            mode,
            specular_chaining: false,
            angle_tol: 1e-2,
            max_elements: 0,
            candidate_window: 256,
            shared_cells: None,
        }
    }
}

/// Rays grouped into one equation. `elements` index the source [`RaySet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractRay {
    pub elements: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbstractRaySet {
    pub abstract_rays: Vec<AbstractRay>,
    pub mode: PartitionMode,
}

impl AbstractRaySet {
    pub fn len(&self) -> usize {
        self.abstract_rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abstract_rays.is_empty()
    }

    /// Every abstract ray as a singleton: the unreduced system.
    pub fn singletons(n: usize) -> Self {
        AbstractRaySet {
            abstract_rays: (0..n).map(|i| AbstractRay { elements: vec![i] }).collect(),
            mode: PartitionMode::Free,
        }
    }
}

struct Group {
    elements: std::collections::VecDeque<usize>,
    legs: Vec<Segment>,
}

impl Group {
    fn new(first: usize, rays: &[Ray]) -> Self {
        Group {
            elements: std::collections::VecDeque::from([first]),
            legs: rays[first].legs().to_vec(),
        }
    }

    fn compatible(&self, ray: &Ray) -> bool {
        ray.legs()
            .iter()
            .all(|leg| self.legs.iter().all(|g| !segments_properly_intersect(leg, g)))
    }

    fn push_back(&mut self, idx: usize, rays: &[Ray]) {
        self.elements.push_back(idx);
        self.legs.extend(rays[idx].legs().iter());
    }

    fn push_front(&mut self, idx: usize, rays: &[Ray]) {
        self.elements.push_front(idx);
        self.legs.extend(rays[idx].legs().iter());
    }
}

/// Per-group cell occupancy for [`SharedCellLimit`].
struct CellBudget {
    ray_cells: Vec<Vec<u32>>,
    hits: Vec<u32>,
    touched: Vec<u32>,
    shared: usize,
    max_shared: usize,
}

impl CellBudget {
    fn new(rays: &[Ray], limit: &SharedCellLimit) -> Self {
        use rayon::prelude::*;
        let grid = limit.grid;
        let ray_cells = rays
            .par_iter()
            .map(|ray| {
                let mut cells: Vec<u32> = ray
                    .legs()
                    .iter()
                    .flat_map(|leg| cell_traversal(leg, &grid).unwrap_or_default())
                    .map(|(c, _)| c as u32)
                    .collect();
                cells.sort_unstable();
                cells.dedup();
                cells
            })
            .collect();
        CellBudget {
            ray_cells,
            hits: vec![0; grid.cells()],
            touched: Vec::new(),
            shared: 0,
            max_shared: limit.max_shared,
        }
    }

    fn admits(&self, idx: usize) -> bool {
        let mut extra = 0;
        for &c in &self.ray_cells[idx] {
            if self.hits[c as usize] == 1 {
                extra += 1;
                if self.shared + extra > self.max_shared {
                    return false;
                }
            }
        }
        true
    }

    fn add(&mut self, idx: usize) {
        for &c in &self.ray_cells[idx] {
            let h = &mut self.hits[c as usize];
            if *h == 0 {
                self.touched.push(c);
            } else if *h == 1 {
                self.shared += 1;
            }
            *h += 1;
        }
    }

    fn reset(&mut self) {
        for &c in &self.touched {
            self.hits[c as usize] = 0;
        }
        self.touched.clear();
        self.shared = 0;
    }
}

/// Greedily partitions `rays` into abstract rays, visiting rays in set order.
///
/// Within each abstract ray no two constituent segments cross or overlap;
/// touching at endpoints is allowed.
pub fn partition_abstract_rays(
    rays: &RaySet,
    dom: &DomainSpec,
    opts: &PartitionOptions,
) -> AbstractRaySet {
    let groups = match opts.mode {
        PartitionMode::Free => partition_free(&rays.rays, opts),
        PartitionMode::Chained => partition_chained(&rays.rays, dom, opts),
    };
    AbstractRaySet {
        abstract_rays: groups.into_iter().map(|elements| AbstractRay { elements }).collect(),
        mode: opts.mode,
    }
}

fn full(group_len: usize, opts: &PartitionOptions) -> bool {
    opts.max_elements != 0 && group_len >= opts.max_elements
}

fn partition_free(rays: &[Ray], opts: &PartitionOptions) -> Vec<Vec<usize>> {
    let n = rays.len();
    let mut used = vec![false; n];
    // next[i]: smallest unused index >= i (path-compressed skip list)
    let mut next: Vec<usize> = (0..=n).collect();
    fn find(next: &mut [usize], mut i: usize) -> usize {
        let mut root = i;
        while next[root] != root {
            root = next[root];
        }
        while next[i] != root {
            let up = next[i];
            next[i] = root;
            i = up;
        }
        root
    }
    let mut budget = opts.shared_cells.as_ref().map(|l| CellBudget::new(rays, l));
    let mut groups = Vec::new();
    let mut i = find(&mut next, 0);
    while i < n {
        used[i] = true;
        next[i] = i + 1;
        let mut group = Group::new(i, rays);
        if let Some(b) = budget.as_mut() {
            b.reset();
            b.add(i);
        }
        let mut examined = 0;
        let mut j = find(&mut next, i + 1);
        while j < n && !full(group.elements.len(), opts) {
            if opts.candidate_window != 0 && examined >= opts.candidate_window {
                break;
            }
            examined += 1;
            if budget.as_ref().map_or(true, |b| b.admits(j)) && group.compatible(&rays[j]) {
                used[j] = true;
                next[j] = j + 1;
                group.push_back(j, rays);
                if let Some(b) = budget.as_mut() {
                    b.add(j);
                }
            }
            j = find(&mut next, j + 1);
        }
        groups.push(group.elements.into_iter().collect());
        i = find(&mut next, 0);
    }
    debug_assert!(used.iter().all(|&u| u));
    groups
}

fn partition_chained(rays: &[Ray], dom: &DomainSpec, opts: &PartitionOptions) -> Vec<Vec<usize>> {
    let n = rays.len();
    let mut by_tx: HashMap<[u64; 2], Vec<usize>> = HashMap::new();
    let mut by_rx: HashMap<[u64; 2], Vec<usize>> = HashMap::new();
    for (i, ray) in rays.iter().enumerate() {
        by_tx.entry(ray.transmitter().bits()).or_default().push(i);
        by_rx.entry(ray.receiver().bits()).or_default().push(i);
    }
    let square = dom.square();
    let pos_tol = DEFAULT_TOL * dom.side.max(1.0);
    let mut used = vec![false; n];
    let mut groups = Vec::new();
    let mut budget = opts.shared_cells.as_ref().map(|l| CellBudget::new(rays, l));

    // first unused candidate in `list` compatible with the group
    let pick = |list: &mut Vec<usize>,
                used: &[bool],
                group: &Group,
                budget: &Option<CellBudget>,
                joint: &dyn Fn(usize) -> bool|
     -> Option<usize> {
        list.retain(|&k| !used[k]);
        let mut examined = 0;
        for &k in list.iter() {
            if opts.candidate_window != 0 && examined >= opts.candidate_window {
                break;
            }
            examined += 1;
            if joint(k) && budget.as_ref().map_or(true, |b| b.admits(k)) && group.compatible(&rays[k]) {
                return Some(k);
            }
        }
        None
    };

    for first in 0..n {
        if used[first] {
            continue;
        }
        used[first] = true;
        let mut group = Group::new(first, rays);
        if let Some(b) = budget.as_mut() {
            b.reset();
            b.add(first);
        }
        loop {
            if full(group.elements.len(), opts) {
                break;
            }
            // extend at the end: next ray transmits from the last receiver
            let last = rays[*group.elements.back().unwrap()];
            let p = last.receiver();
            let incoming = *last.legs().last().unwrap();
            let joint_end = |k: usize| {
                !opts.specular_chaining
                    || mirror_reflection_at(&incoming, &rays[k].legs()[0], p, &square, pos_tol, opts.angle_tol)
                        .unwrap_or(false)
            };
            if let Some(k) = by_tx
                .get_mut(&p.bits())
                .and_then(|list| pick(list, &used, &group, &budget, &joint_end))
            {
                used[k] = true;
                group.push_back(k, rays);
                if let Some(b) = budget.as_mut() {
                    b.add(k);
                }
                continue;
            }
            // extend at the beginning: previous ray receives at the first transmitter
            let head = rays[*group.elements.front().unwrap()];
            let q = head.transmitter();
            let outgoing = head.legs()[0];
            let joint_front = |k: usize| {
                !opts.specular_chaining
                    || mirror_reflection_at(
                        rays[k].legs().last().unwrap(),
                        &outgoing,
                        q,
                        &square,
                        pos_tol,
                        opts.angle_tol,
                    )
                    .unwrap_or(false)
            };
            if let Some(k) = by_rx
                .get_mut(&q.bits())
                .and_then(|list| pick(list, &used, &group, &budget, &joint_front))
            {
                used[k] = true;
                group.push_front(k, rays);
                if let Some(b) = budget.as_mut() {
                    b.add(k);
                }
                continue;
            }
            break;
        }
        groups.push(group.elements.into_iter().collect());
    }
    groups
}

/// Travel time of each abstract ray: the sum over its elements.
pub fn abstract_travel_times(abstract_rays: &AbstractRaySet, times: &[f64]) -> Result<Vec<f64>> {
    abstract_rays
        .abstract_rays
        .iter()
        .enumerate()
        .map(|(j, ar)| {
            ar.elements.iter().try_fold(0.0, |acc, &i| {
                times.get(i).map(|t| acc + t).ok_or_else(|| {
                    Error::invalid(format!(
                        "abstract ray {j} references ray {i}, but only {} travel times exist",
                        times.len()
                    ))
                })
            })
        })
        .collect()
}

/// Result of the bitmap coverage check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coverage {
    pub complete: bool,
    pub missing: Vec<usize>,
}

/// Marks each ray of `reference` that occurs as an element of some abstract
/// ray (elements resolved through `source`). Lookups are hash-keyed on the
/// exact vertex coordinates.
pub fn coverage_bitmap_check(
    abstract_rays: &AbstractRaySet,
    source: &RaySet,
    reference: &RaySet,
) -> Coverage {
    let index: HashMap<RayKey, usize> = reference
        .rays
        .iter()
        .enumerate()
        .map(|(i, r)| (r.key(), i))
        .collect();
    let mut bits = vec![false; reference.len()];
    for ar in &abstract_rays.abstract_rays {
        for &e in &ar.elements {
            if let Some(&i) = source.rays.get(e).and_then(|r| index.get(&r.key())) {
                bits[i] = true;
            }
        }
    }
    let missing: Vec<usize> = bits
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| (!b).then_some(i))
        .collect();
    Coverage {
        complete: missing.is_empty(),
        missing,
    }
}

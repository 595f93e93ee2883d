//! Discretized foliated charts and discrete exterior calculus on leaves.
//!
//! A chart is a structured grid `nx × ny × nz`: the first two axes span a
//! leaf, the third is the transverse coordinate `z`, always periodic with
//! period `nz·hz`. Each leaf face (`x_low`, `x_high`, `y_low`, `y_high`) is
//! split into segments carrying a boundary rule. Gluings are orientation
//! preserving translations onto the opposite face, possibly branching on `z`
//! and rescaling it affinely; the log of that scale is the holonomy
//! contribution of a crossing.
//!
//! Orientation is fixed once: `dx∧dy∧dz` is positive, the co-orientation is
//! `+z`, and leaves are oriented by `dx∧dy`. The optional orientation flags
//! flip these signs uniformly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expression;

const COORD_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    XLow,
    XHigh,
    YLow,
    YHigh,
}

impl Face {
    pub const ALL: [Face; 4] = [Face::XLow, Face::XHigh, Face::YLow, Face::YHigh];

    pub fn axis(self) -> usize {
        match self {
            Face::XLow | Face::XHigh => 0,
            Face::YLow | Face::YHigh => 1,
        }
    }

    pub fn is_high(self) -> bool {
        matches!(self, Face::XHigh | Face::YHigh)
    }

    fn of(axis: usize, high: bool) -> Face {
        match (axis, high) {
            (0, false) => Face::XLow,
            (0, true) => Face::XHigh,
            (_, false) => Face::YLow,
            (_, true) => Face::YHigh,
        }
    }

    fn opposite(self) -> Face {
        Face::of(self.axis(), !self.is_high())
    }
}

/// One branch of a gluing: points with transverse coordinate in
/// `[z_from, z_to)` cross to `target_face`, landing at tangential coordinate
/// `target_start + (t − segment.start)` with `z ↦ z_scale·z + z_offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlueBranch {
    pub z_from: f64,
    pub z_to: f64,
    pub target_face: Face,
    pub target_start: f64,
    pub z_scale: f64,
    #[serde(default)]
    pub z_offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaceRule {
    /// Symmetric doubling: paths reflect, stencils use mirror ghosts, and
    /// nodes on the face count as interior.
    Mirror,
    /// Reflecting truncation: paths reflect, stencils extrapolate.
    Reflect,
    /// Paths are absorbed and marked truncated.
    Absorb,
    /// No boundary condition declared.
    Open,
    Glue { branches: Vec<GlueBranch> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceSegment {
    pub start: f64,
    pub end: f64,
    pub rule: FaceRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceMap {
    pub x_low: Vec<FaceSegment>,
    pub x_high: Vec<FaceSegment>,
    pub y_low: Vec<FaceSegment>,
    pub y_high: Vec<FaceSegment>,
}

impl FaceMap {
    pub fn get(&self, face: Face) -> &[FaceSegment] {
        match face {
            Face::XLow => &self.x_low,
            Face::XHigh => &self.x_high,
            Face::YLow => &self.y_low,
            Face::YHigh => &self.y_high,
        }
    }
}

/// Leafwise metric `g11 dx² + 2 g12 dx dy + g22 dy²` as expressions in `(x, y, z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub g11: String,
    pub g12: String,
    pub g22: String,
}

impl MetricSpec {
    pub fn flat() -> Self {
        Self { g11: "1".into(), g12: "0".into(), g22: "1".into() }
    }
}

fn one() -> i8 {
    1
}

/// Serialized chart description (the chart JSON schema).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartDescription {
    /// `[nx, ny, nz]`.
    pub dims: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    /// Whether the leaf axes `x`, `y` are periodic (nodes on `[lo, hi)`)
    /// rather than bounded (nodes on `[lo, hi]`).
    pub periodic: [bool; 2],
    pub metric: MetricSpec,
    pub faces: FaceMap,
    #[serde(default = "one")]
    pub leaf_orientation: i8,
    #[serde(default = "one")]
    pub transverse_orientation: i8,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl LeafPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    fn coord(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.x
        } else {
            self.y
        }
    }

    fn set_coord(&mut self, axis: usize, v: f64) {
        if axis == 0 {
            self.x = v
        } else {
            self.y = v
        }
    }
}

/// Position on the grid: node column `(i, j)` at transverse coordinate `z`
/// (not necessarily a slice), with the accumulated log transverse scale of
/// the gluings crossed to get there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cursor {
    pub i: usize,
    pub j: usize,
    pub z: f64,
    pub log_shift: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Step {
    To(Cursor),
    Reflect,
    Absorb,
    Open,
}

/// Result of moving a point along a leaf.
#[derive(Clone, Copy, Debug)]
pub struct Advance {
    pub point: LeafPoint,
    /// Sum of `ln(z_scale)` over the gluings crossed.
    pub log_scale: f64,
    pub crossings: u32,
    pub absorbed: bool,
    /// Displacement actually travelled in chart directions, with reflections
    /// applied but gluing translations ignored: the lift to the cover.
    pub moved: [f64; 2],
}

/// Discretized foliated chart. Immutable after construction.
#[derive(Clone, Debug)]
pub struct FoliatedChartModel {
    desc: ChartDescription,
    metric: Vec<[f64; 3]>,
    /// `√det g · (g^{11}, g^{12}, g^{22})` per node, one array per component.
    flux: [Vec<f64>; 3],
    sqrt_det: Vec<f64>,
    /// Itô drift `-½ g^{ij} Γ^k_{ij}` per node.
    drift: Vec<[f64; 2]>,
    diagonal: bool,
    flat: bool,
    wrap: [bool; 2],
}

fn wrap_period(v: f64, lo: f64, period: f64) -> f64 {
    let mut r = (v - lo).rem_euclid(period) + lo;
    if r >= lo + period {
        r = lo;
    }
    r
}

impl FoliatedChartModel {
    pub fn from_description(desc: ChartDescription) -> Result<Self> {
        let [nx, ny, nz] = desc.dims;
        if nx < 3 || ny < 3 || nz < 1 {
            return Err(Error::InvalidChart(format!("dims {:?} too small (need nx, ny >= 3, nz >= 1)", desc.dims)));
        }
        if desc.spacing.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(Error::InvalidChart(format!("spacings must be positive, got {:?}", desc.spacing)));
        }
        if desc.leaf_orientation.abs() != 1 || desc.transverse_orientation.abs() != 1 {
            return Err(Error::InvalidChart("orientation flags must be +1 or -1".into()));
        }
        let g11 = Expression::parse(&desc.metric.g11)?;
        let g12 = Expression::parse(&desc.metric.g12)?;
        let g22 = Expression::parse(&desc.metric.g22)?;

        let mut chart = Self {
            desc,
            metric: Vec::new(),
            flux: [Vec::new(), Vec::new(), Vec::new()],
            sqrt_det: Vec::new(),
            drift: Vec::new(),
            diagonal: true,
            flat: true,
            wrap: [false, false],
        };
        chart.validate_faces()?;
        chart.validate_gluings()?;
        chart.wrap = [chart.axis_wraps(0), chart.axis_wraps(1)];

        let n = chart.node_count();
        chart.metric.reserve(n);
        for idx in 0..n {
            let p = chart.node_point(idx);
            let g = [g11.eval(p.x, p.y, p.z), g12.eval(p.x, p.y, p.z), g22.eval(p.x, p.y, p.z)];
            let det = g[0] * g[2] - g[1] * g[1];
            if !(det > 0.0) || !(g[0] + g[2] > 0.0) || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::DegenerateMetric { node: idx, det });
            }
            if g[1] != 0.0 {
                chart.diagonal = false;
            }
            if g != [1.0, 0.0, 1.0] {
                chart.flat = false;
            }
            chart.metric.push(g);
        }
        chart.sqrt_det = chart.metric.iter().map(|g| (g[0] * g[2] - g[1] * g[1]).sqrt()).collect();
        for (g, s) in chart.metric.iter().zip(&chart.sqrt_det) {
            let inv = inverse(*g);
            for m in 0..3 {
                chart.flux[m].push(s * inv[m]);
            }
        }
        chart.drift = chart.christoffel_drift()?;
        Ok(chart)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Self::from_description(serde_json::from_str(json)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.desc)?)
    }

    pub fn description(&self) -> &ChartDescription {
        &self.desc
    }

    pub fn dims(&self) -> [usize; 3] {
        self.desc.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.desc.spacing
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    pub fn leaf_sign(&self) -> f64 {
        self.desc.leaf_orientation as f64
    }

    pub fn volume_sign(&self) -> f64 {
        (self.desc.leaf_orientation * self.desc.transverse_orientation) as f64
    }

    pub fn node_count(&self) -> usize {
        let [nx, ny, nz] = self.desc.dims;
        nx * ny * nz
    }

    pub fn slice_len(&self) -> usize {
        self.desc.dims[0] * self.desc.dims[1]
    }

    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.desc.dims;
        (k * ny + j) * nx + i
    }

    pub fn node_ijk(&self, idx: usize) -> (usize, usize, usize) {
        let [nx, ny, _] = self.desc.dims;
        (idx % nx, (idx / nx) % ny, idx / (nx * ny))
    }

    pub fn node_point(&self, idx: usize) -> LeafPoint {
        let (i, j, k) = self.node_ijk(idx);
        let [x0, y0, z0] = self.desc.origin;
        let [hx, hy, hz] = self.desc.spacing;
        LeafPoint::new(x0 + i as f64 * hx, y0 + j as f64 * hy, z0 + k as f64 * hz)
    }

    pub fn z_period(&self) -> f64 {
        self.desc.dims[2] as f64 * self.desc.spacing[2]
    }

    pub fn wrap_z(&self, z: f64) -> f64 {
        wrap_period(z, self.desc.origin[2], self.z_period())
    }

    /// Leaf extent `[lo, hi]` along an axis.
    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        let n = self.desc.dims[axis];
        let lo = self.desc.origin[axis];
        let h = self.desc.spacing[axis];
        let cells = if self.desc.periodic[axis] { n } else { n - 1 };
        (lo, lo + cells as f64 * h)
    }

    /// Longest straight sub-segment used when moving points.
    pub fn max_segment(&self) -> f64 {
        self.desc.spacing[0].min(self.desc.spacing[1])
    }

    pub fn metric_at_node(&self, idx: usize) -> [f64; 3] {
        self.metric[idx]
    }

    pub fn drift_at_node(&self, idx: usize) -> [f64; 2] {
        self.drift[idx]
    }

    /// Whether cochains wrap around `axis`: periodic with an untwisted
    /// gluing that maps every slice to itself.
    pub fn wraps(&self, axis: usize) -> bool {
        self.wrap[axis]
    }

    fn axis_wraps(&self, axis: usize) -> bool {
        if !self.desc.periodic[axis] {
            return false;
        }
        let segs = self.desc.faces.get(Face::of(axis, true));
        matches!(segs, [FaceSegment { rule: FaceRule::Glue { branches }, .. }]
            if branches.len() == 1 && branches[0].z_scale == 1.0 && branches[0].z_offset == 0.0)
    }

    fn face_coord(&self, face: Face) -> f64 {
        let (lo, hi) = self.bounds(face.axis());
        if face.is_high() {
            hi
        } else {
            lo
        }
    }

    fn validate_faces(&self) -> Result<()> {
        for face in Face::ALL {
            let tangential = 1 - face.axis();
            let (lo, hi) = self.bounds(tangential);
            let segs = self.desc.faces.get(face);
            if segs.is_empty() {
                return Err(Error::InvalidChart(format!("face {face:?} has no segments")));
            }
            let mut cursor = lo;
            for s in segs {
                if (s.start - cursor).abs() > COORD_EPS || !(s.end > s.start) {
                    return Err(Error::InvalidChart(format!("face {face:?} segments must tile [{lo}, {hi}] in order")));
                }
                cursor = s.end;
                if let FaceRule::Glue { branches } = &s.rule {
                    if branches.is_empty() {
                        return Err(Error::InvalidChart(format!("face {face:?} glue without branches")));
                    }
                    for b in branches {
                        if b.target_face != face.opposite() {
                            return Err(Error::InvalidChart(format!(
                                "face {face:?} glued to {:?}; only translations onto the opposite face are supported",
                                b.target_face
                            )));
                        }
                        if !(b.z_scale > 0.0) {
                            return Err(Error::InvalidChart("transverse scale must be positive".into()));
                        }
                    }
                }
            }
            if (cursor - hi).abs() > COORD_EPS {
                return Err(Error::InvalidChart(format!("face {face:?} segments end at {cursor}, expected {hi}")));
            }
            if self.desc.periodic[face.axis()]
                && !matches!(segs, [FaceSegment { rule: FaceRule::Glue { .. }, .. }])
            {
                return Err(Error::InvalidChart(format!("periodic axis face {face:?} must be a single gluing")));
            }
        }
        Ok(())
    }

    fn segment_at(&self, face: Face, t: f64) -> &FaceSegment {
        let segs = self.desc.faces.get(face);
        segs.iter()
            .find(|s| t >= s.start && t < s.end)
            .unwrap_or_else(|| if t < segs[0].start { &segs[0] } else { segs.last().unwrap() })
    }

    fn branch_for<'a>(&self, branches: &'a [GlueBranch], z: f64) -> &'a GlueBranch {
        let z = self.wrap_z(z);
        branches
            .iter()
            .find(|b| z >= b.z_from && z < b.z_to)
            .unwrap_or_else(|| branches.last().unwrap())
    }

    /// Maps a crossing of `face` at tangential `t` and transverse `z`.
    /// Returns the target face, tangential coordinate, new `z` and `ln(scale)`.
    fn glue_map(&self, _face: Face, seg: &FaceSegment, t: f64, z: f64) -> Option<(Face, f64, f64, f64)> {
        let FaceRule::Glue { branches } = &seg.rule else { return None };
        let b = self.branch_for(branches, z);
        let t2 = b.target_start + (t - seg.start);
        let z2 = self.wrap_z(b.z_scale * self.wrap_z(z) + b.z_offset);
        Some((b.target_face, t2, z2, b.z_scale.ln()))
    }

    /// Every gluing must be undone by the gluing at its landing point, with
    /// transverse scales multiplying to one around the round trip.
    fn validate_gluings(&self) -> Result<()> {
        let period = self.z_period();
        let z0 = self.desc.origin[2];
        for face in Face::ALL {
            for seg in self.desc.faces.get(face) {
                let FaceRule::Glue { branches } = &seg.rule else { continue };
                for b in branches {
                    for a in [0.125, 0.5, 0.875] {
                        let t = seg.start + a * (seg.end - seg.start);
                        let zl = b.z_from.max(z0);
                        let zh = b.z_to.min(z0 + period);
                        let z = zl + a * (zh - zl);
                        let (tf, t2, z2, ls) = self.glue_map(face, seg, t, z).unwrap();
                        let back_seg = self.segment_at(tf, t2);
                        let Some((bf, t3, z3, ls2)) = self.glue_map(tf, back_seg, t2, z2) else {
                            return Err(Error::InvalidChart(format!(
                                "gluing {face:?} -> {tf:?} lands on a non-glued segment at t = {t2}"
                            )));
                        };
                        let dz = (z3 - z).abs().min(period - (z3 - z).abs());
                        // An expanding branch on a truncated periodic band may be many-to-one;
                        // only contracting branches must return to the same leaf.
                        let z_ok = b.z_scale > 1.0 || dz <= 1e-8;
                        if bf != face || (t3 - t).abs() > 1e-8 || !z_ok || (ls + ls2).abs() > 1e-12 {
                            return Err(Error::InvalidChart(format!(
                                "gluing {face:?} -> {tf:?} is not inverted by its partner (t {t} -> {t3}, z {z} -> {z3}, log scale {})",
                                ls + ls2
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// One grid step from `c` along `axis` in direction `dir = ±1`.
    pub fn step(&self, c: Cursor, axis: usize, dir: i32) -> Step {
        let n = self.desc.dims[axis] as i64;
        let idx = if axis == 0 { c.i } else { c.j } as i64;
        let next = idx + dir as i64;
        let inside = next >= 0 && next < n;
        let set = |c: Cursor, v: usize| {
            let mut c = c;
            if axis == 0 {
                c.i = v
            } else {
                c.j = v
            }
            c
        };
        if inside {
            return Step::To(set(c, next as usize));
        }
        let face = Face::of(axis, dir > 0);
        let h = self.desc.spacing[axis];
        let lo = self.desc.origin[axis];
        let tangential = 1 - axis;
        let t_idx = if tangential == 0 { c.i } else { c.j };
        let t = self.desc.origin[tangential] + t_idx as f64 * self.desc.spacing[tangential];
        let seg = self.segment_at(face, t);
        match &seg.rule {
            FaceRule::Mirror => {
                let m = idx - dir as i64;
                if m < 0 || m >= n {
                    Step::Reflect
                } else {
                    Step::To(set(c, m as usize))
                }
            }
            FaceRule::Reflect => Step::Reflect,
            FaceRule::Absorb => Step::Absorb,
            FaceRule::Open => Step::Open,
            FaceRule::Glue { .. } => {
                let pos = lo + next as f64 * h;
                let overshoot = (pos - self.face_coord(face)).abs();
                let (tf, t2, z2, ls) = self.glue_map(face, seg, t, c.z).unwrap();
                let inward = if tf.is_high() { -1.0 } else { 1.0 };
                let along = self.face_coord(tf) + inward * overshoot;
                let ai = ((along - lo) / h).round();
                let ti = ((t2 - self.desc.origin[tangential]) / self.desc.spacing[tangential]).round();
                let mut out = c;
                if axis == 0 {
                    out.i = ai.clamp(0.0, (n - 1) as f64) as usize;
                    out.j = ti.max(0.0) as usize;
                } else {
                    out.j = ai.clamp(0.0, (n - 1) as f64) as usize;
                    out.i = ti.max(0.0) as usize;
                }
                out.z = z2;
                out.log_shift += ls;
                Step::To(out)
            }
        }
    }

    pub fn cursor(&self, idx: usize) -> Cursor {
        let (i, j, _) = self.node_ijk(idx);
        Cursor { i, j, z: self.node_point(idx).z, log_shift: 0.0 }
    }

    /// Value of a node field at a cursor, linear in `z` between slices.
    pub fn value_at(&self, values: &[f64], c: Cursor, twisted: bool) -> f64 {
        let nz = self.desc.dims[2];
        let hz = self.desc.spacing[2];
        let s = (self.wrap_z(c.z) - self.desc.origin[2]) / hz;
        let k0 = (s.floor() as usize).min(nz - 1);
        let frac = s - k0 as f64;
        let v0 = values[self.node_index(c.i, c.j, k0)];
        let v = if frac < 1e-12 || nz == 1 {
            v0
        } else {
            let v1 = values[self.node_index(c.i, c.j, (k0 + 1) % nz)];
            v0 + frac * (v1 - v0)
        };
        if twisted {
            v + c.log_shift
        } else {
            v
        }
    }

    /// Field value at grid offset `(di, dj)` from `c`, with ghosts at
    /// non-glued faces: mirror images at mirror faces, quadratic
    /// extrapolation at reflecting or absorbing faces.
    pub fn value_offset(&self, values: &[f64], c: Cursor, di: i32, dj: i32, twisted: bool, node: usize) -> Result<f64> {
        let (axis, d, rest) = if di != 0 {
            (0, di.signum(), (di - di.signum(), dj))
        } else if dj != 0 {
            (1, dj.signum(), (di, dj - dj.signum()))
        } else {
            return Ok(self.value_at(values, c, twisted));
        };
        match self.step(c, axis, d) {
            Step::To(next) => self.value_offset(values, next, rest.0, rest.1, twisted, node),
            Step::Reflect | Step::Absorb => {
                let back = |k: i32| {
                    let (bi, bj) = if axis == 0 { (rest.0 - k * d, rest.1) } else { (rest.0, rest.1 - k * d) };
                    self.value_offset(values, c, bi, bj, twisted, node)
                };
                Ok(3.0 * back(0)? - 3.0 * back(1)? + back(2)?)
            }
            Step::Open => Err(Error::OpenBoundary { node }),
        }
    }

    /// Whether all four stencil neighbors are genuine (grid, mirror or glued)
    /// and the node is not a cone point.
    pub fn is_interior(&self, idx: usize) -> bool {
        let c = self.cursor(idx);
        (0..2).all(|axis| [-1, 1].iter().all(|&d| matches!(self.step(c, axis, d), Step::To(_)))) && !self.is_cone_point(idx)
    }

    /// Nodes at an endpoint of a glued segment that covers only part of its
    /// face. The identification leaves an excess angle there, so no grid
    /// stencil approximates the Laplacian.
    pub fn is_cone_point(&self, idx: usize) -> bool {
        let (i, j, _) = self.node_ijk(idx);
        let [nx, ny, _] = self.desc.dims;
        Face::ALL.iter().any(|&face| {
            let on_face = match face {
                Face::XLow => i == 0,
                Face::XHigh => i + 1 == nx && !self.desc.periodic[0],
                Face::YLow => j == 0,
                Face::YHigh => j + 1 == ny && !self.desc.periodic[1],
            };
            if !on_face {
                return false;
            }
            let tangential = 1 - face.axis();
            let t = self.desc.origin[tangential] + (if tangential == 0 { i } else { j }) as f64 * self.desc.spacing[tangential];
            let segs = self.desc.faces.get(face);
            let (lo, hi) = (segs[0].start, segs[segs.len() - 1].end);
            segs.iter().any(|sg| {
                let partial = sg.start > lo + COORD_EPS || sg.end < hi - COORD_EPS;
                partial
                    && matches!(sg.rule, FaceRule::Glue { .. })
                    && ((sg.start - t).abs() < COORD_EPS || (sg.end - t).abs() < COORD_EPS)
            })
        })
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.is_interior(i)).collect()
    }

    /// Central-difference gradient `(∂x f, ∂y f)` at every node.
    pub fn gradient(&self, values: &[f64], twisted: bool) -> Result<Vec<[f64; 2]>> {
        let [hx, hy, _] = self.desc.spacing;
        (0..self.node_count())
            .map(|n| {
                let c = self.cursor(n);
                let fx = (self.value_offset(values, c, 1, 0, twisted, n)? - self.value_offset(values, c, -1, 0, twisted, n)?)
                    / (2.0 * hx);
                let fy = (self.value_offset(values, c, 0, 1, twisted, n)? - self.value_offset(values, c, 0, -1, twisted, n)?)
                    / (2.0 * hy);
                Ok([fx, fy])
            })
            .collect()
    }

    /// Central-difference `∂z` at every node (periodic in `z`).
    pub fn z_derivative(&self, values: &[f64]) -> Vec<f64> {
        let [_, _, nz] = self.desc.dims;
        let hz = self.desc.spacing[2];
        (0..self.node_count())
            .map(|n| {
                if nz < 3 {
                    return 0.0;
                }
                let (i, j, k) = self.node_ijk(n);
                let up = values[self.node_index(i, j, (k + 1) % nz)];
                let dn = values[self.node_index(i, j, (k + nz - 1) % nz)];
                (up - dn) / (2.0 * hz)
            })
            .collect()
    }

    fn christoffel_drift(&self) -> Result<Vec<[f64; 2]>> {
        let n = self.node_count();
        if self.flat {
            return Ok(vec![[0.0; 2]; n]);
        }
        let comp: Vec<Vec<f64>> = (0..3).map(|c| self.metric.iter().map(|g| g[c]).collect()).collect();
        let grads: Vec<Vec<[f64; 2]>> = comp.iter().map(|v| self.gradient(v, false)).collect::<Result<_>>()?;
        Ok((0..n)
            .map(|idx| {
                let g = self.metric[idx];
                let inv = inverse(g);
                let ginv = [[inv[0], inv[1]], [inv[1], inv[2]]];
                // dg[l][a][b] = ∂_l g_ab
                let mut dg = [[[0.0; 2]; 2]; 2];
                for l in 0..2 {
                    let d = [grads[0][idx][l], grads[1][idx][l], grads[2][idx][l]];
                    dg[l] = [[d[0], d[1]], [d[1], d[2]]];
                }
                let mut b = [0.0; 2];
                for k in 0..2 {
                    let mut acc = 0.0;
                    for i in 0..2 {
                        for j in 0..2 {
                            let mut gamma = 0.0;
                            for l in 0..2 {
                                gamma += 0.5 * ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                            }
                            acc += ginv[i][j] * gamma;
                        }
                    }
                    b[k] = -0.5 * acc;
                }
                b
            })
            .collect())
    }

    /// Bilinear interpolation of a per-node quantity at a leaf point, using
    /// the node column nearest below `p` and the glue-aware stencil.
    pub fn interpolate(&self, values: &[f64], p: LeafPoint, twisted: bool) -> f64 {
        let (c, tx, ty) = self.locate(p);
        let get = |di: i32, dj: i32| self.value_offset(values, c, di, dj, twisted, 0).unwrap_or(f64::NAN);
        let v00 = get(0, 0);
        let v10 = if tx > 0.0 { get(1, 0) } else { v00 };
        let v01 = if ty > 0.0 { get(0, 1) } else { v00 };
        let v11 = if tx > 0.0 && ty > 0.0 { get(1, 1) } else { v00 };
        let a = v00 + tx * (v10 - v00);
        let b = v01 + tx * (v11 - v01);
        a + ty * (b - a)
    }

    fn locate(&self, p: LeafPoint) -> (Cursor, f64, f64) {
        let mut idx = [0usize; 2];
        let mut frac = [0.0; 2];
        for axis in 0..2 {
            let n = self.desc.dims[axis];
            let s = (p.coord(axis) - self.desc.origin[axis]) / self.desc.spacing[axis];
            let max_base = if self.desc.periodic[axis] { n - 1 } else { n - 2 };
            let base = (s.floor().max(0.0) as usize).min(max_base);
            idx[axis] = base;
            frac[axis] = (s - base as f64).clamp(0.0, 1.0);
            if frac[axis] < 1e-14 {
                frac[axis] = 0.0;
            }
        }
        (Cursor { i: idx[0], j: idx[1], z: p.z, log_shift: 0.0 }, frac[0], frac[1])
    }

    /// Metric `(g11, g12, g22)` at a leaf point (bilinear in the node metric).
    pub fn metric_at(&self, p: LeafPoint) -> [f64; 3] {
        if self.flat {
            return [1.0, 0.0, 1.0];
        }
        self.interp_vec3(p, |n| self.metric[n])
    }

    pub fn drift_at(&self, p: LeafPoint) -> [f64; 2] {
        if self.flat {
            return [0.0, 0.0];
        }
        let v = self.interp_vec3(p, |n| [self.drift[n][0], self.drift[n][1], 0.0]);
        [v[0], v[1]]
    }

    fn interp_vec3(&self, p: LeafPoint, f: impl Fn(usize) -> [f64; 3]) -> [f64; 3] {
        let (c, tx, ty) = self.locate(p);
        let nz = self.desc.dims[2];
        let k = (((self.wrap_z(p.z) - self.desc.origin[2]) / self.desc.spacing[2]).round() as usize) % nz;
        let nxm = self.desc.dims[0];
        let nym = self.desc.dims[1];
        let i1 = if c.i + 1 < nxm { c.i + 1 } else { c.i };
        let j1 = if c.j + 1 < nym { c.j + 1 } else { c.j };
        let v = |i: usize, j: usize| f(self.node_index(i, j, k));
        let (a, b, cc, d) = (v(c.i, c.j), v(i1, c.j), v(c.i, j1), v(i1, j1));
        let mut out = [0.0; 3];
        for m in 0..3 {
            let lo = a[m] + tx * (b[m] - a[m]);
            let hi = cc[m] + tx * (d[m] - cc[m]);
            out[m] = lo + ty * (hi - lo);
        }
        out
    }

    /// Moves `p` by the leaf displacement `disp`, in straight sub-segments no
    /// longer than [`Self::max_segment`], resolving face crossings.
    pub fn advance(&self, p: LeafPoint, disp: [f64; 2]) -> Result<Advance> {
        let len = (disp[0] * disp[0] + disp[1] * disp[1]).sqrt();
        let pieces = ((len / self.max_segment()).ceil() as usize).max(1);
        let sub = [disp[0] / pieces as f64, disp[1] / pieces as f64];
        let mut out = Advance { point: p, log_scale: 0.0, crossings: 0, absorbed: false, moved: [0.0; 2] };
        let mut flip = [1.0, 1.0];
        for _ in 0..pieces {
            out.point.x += flip[0] * sub[0];
            out.point.y += flip[1] * sub[1];
            out.moved[0] += flip[0] * sub[0];
            out.moved[1] += flip[1] * sub[1];
            if self.resolve(&mut out, &mut flip)? {
                return Ok(out);
            }
        }
        Ok(out)
    }

    /// Brings a point back into the chart. Returns `true` if absorbed.
    fn resolve(&self, st: &mut Advance, flip: &mut [f64; 2]) -> Result<bool> {
        for _ in 0..16 {
            let mut moved = false;
            for axis in 0..2 {
                let (lo, hi) = self.bounds(axis);
                let c = st.point.coord(axis);
                let periodic = self.desc.periodic[axis];
                let out_high = if periodic { c >= hi } else { c > hi };
                let out_low = c < lo;
                if !out_high && !out_low {
                    continue;
                }
                moved = true;
                let face = Face::of(axis, out_high);
                let fc = if out_high { hi } else { lo };
                let overshoot = (c - fc).abs();
                let tangential = 1 - axis;
                let (tlo, thi) = self.bounds(tangential);
                let t = st.point.coord(tangential).clamp(tlo, thi);
                let seg = self.segment_at(face, t);
                match &seg.rule {
                    FaceRule::Mirror | FaceRule::Reflect => {
                        st.point.set_coord(axis, 2.0 * fc - c);
                        st.moved[axis] -= 2.0 * (c - fc);
                        flip[axis] = -flip[axis];
                    }
                    FaceRule::Absorb => {
                        st.point.set_coord(axis, fc);
                        st.absorbed = true;
                        return Ok(true);
                    }
                    FaceRule::Open => return Err(Error::PathExit { x: st.point.x, y: st.point.y }),
                    FaceRule::Glue { .. } => {
                        let (tf, t2, z2, ls) = self.glue_map(face, seg, t, st.point.z).unwrap();
                        let inward = if tf.is_high() { -1.0 } else { 1.0 };
                        let mut along = self.face_coord(tf) + inward * overshoot;
                        if periodic && tf.is_high() && along >= hi {
                            along = lo;
                        }
                        st.point.set_coord(axis, along);
                        st.point.set_coord(tangential, t2 + (st.point.coord(tangential) - t));
                        st.point.z = z2;
                        st.log_scale += ls;
                        st.crossings += 1;
                    }
                }
            }
            if !moved {
                return Ok(false);
            }
        }
        Err(Error::InvalidParams("displacement too large to resolve against chart faces".into()))
    }

    /// Cholesky factor `L` with `L Lᵀ = g⁻¹` at a point: `[l11, l21, l22]`.
    pub fn inverse_metric_factor(&self, p: LeafPoint) -> [f64; 3] {
        if self.flat {
            return [1.0, 0.0, 1.0];
        }
        let inv = inverse(self.metric_at(p));
        let l11 = inv[0].sqrt();
        let l21 = inv[1] / l11;
        let l22 = (inv[2] - l21 * l21).max(0.0).sqrt();
        [l11, l21, l22]
    }

    /// Metric length of the leaf vector `v` measured with the metric at `p`.
    pub fn metric_norm(&self, p: LeafPoint, v: [f64; 2]) -> f64 {
        let g = self.metric_at(p);
        (g[0] * v[0] * v[0] + 2.0 * g[1] * v[0] * v[1] + g[2] * v[1] * v[1]).max(0.0).sqrt()
    }

    pub(crate) fn flux_component(&self, m: usize) -> &[f64] {
        &self.flux[m]
    }

    pub(crate) fn sqrt_det(&self, idx: usize) -> f64 {
        self.sqrt_det[idx]
    }

    pub(crate) fn is_diagonal(&self) -> bool {
        self.diagonal
    }
}

/// Inverse of a symmetric 2×2 matrix stored as `(a, b, c)`.
pub fn inverse(g: [f64; 3]) -> [f64; 3] {
    let det = g[0] * g[2] - g[1] * g[1];
    [g[2] / det, -g[1] / det, g[0] / det]
}

/// Pointwise leaf Hodge star of a 1-form `(ω_x, ω_y)`:
/// `(⋆ω)_j = s √det g · ε_{ij} g^{ik} ω_k`, so `⋆dx = dy`, `⋆dy = −dx` on a
/// flat, positively oriented leaf.
pub fn hodge_star_components(g: [f64; 3], w: [f64; 2], leaf_sign: f64) -> [f64; 2] {
    let s = (g[0] * g[2] - g[1] * g[1]).sqrt();
    let inv = inverse(g);
    let raised = [inv[0] * w[0] + inv[1] * w[1], inv[1] * w[0] + inv[2] * w[1]];
    [-leaf_sign * s * raised[1], leaf_sign * s * raised[0]]
}

// ---------------------------------------------------------------------------
// Cochains

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormShape {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub wrap: [bool; 2],
}

impl FormShape {
    pub fn of(chart: &FoliatedChartModel) -> Self {
        let [nx, ny, nz] = chart.dims();
        Self { nx, ny, nz, wrap: [chart.wraps(0), chart.wraps(1)] }
    }

    pub fn edges_x(&self) -> (usize, usize) {
        (if self.wrap[0] { self.nx } else { self.nx - 1 }, self.ny)
    }

    pub fn edges_y(&self) -> (usize, usize) {
        (self.nx, if self.wrap[1] { self.ny } else { self.ny - 1 })
    }

    pub fn faces(&self) -> (usize, usize) {
        (self.edges_x().0, self.edges_y().1)
    }

    pub fn per_slice(&self, degree: u8) -> usize {
        match degree {
            0 => self.nx * self.ny,
            1 => {
                let (a, b) = self.edges_x();
                let (c, d) = self.edges_y();
                a * b + c * d
            }
            _ => {
                let (a, b) = self.faces();
                a * b
            }
        }
    }

    pub fn len(&self, degree: u8) -> usize {
        self.per_slice(degree) * self.nz
    }

    pub fn x_edge(&self, i: usize, j: usize, k: usize) -> usize {
        let (ex, _) = self.edges_x();
        k * self.per_slice(1) + j * ex + i
    }

    pub fn y_edge(&self, i: usize, j: usize, k: usize) -> usize {
        let (ex, ey) = self.edges_x();
        k * self.per_slice(1) + ex * ey + j * self.nx + i
    }

    pub fn face(&self, i: usize, j: usize, k: usize) -> usize {
        let (fx, _) = self.faces();
        k * self.per_slice(2) + j * fx + i
    }

    fn node(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.ny + j) * self.nx + i
    }
}

/// A 0-, 1- or 2-cochain on the leaf grid of every slice. 1-forms are
/// integrated along oriented edges (`+x`, `+y`), 2-forms over faces.
/// Twisted 0-forms are log-densities: across a gluing they shift by the log
/// transverse scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteForm {
    pub degree: u8,
    pub shape: FormShape,
    pub values: Vec<f64>,
    #[serde(default)]
    pub twisted: bool,
}

impl DiscreteForm {
    pub fn new(degree: u8, shape: FormShape, values: Vec<f64>) -> Result<Self> {
        if degree > 2 {
            return Err(Error::BadDegree(degree));
        }
        let expected = shape.len(degree);
        if values.len() != expected {
            return Err(Error::FormLength { expected, got: values.len() });
        }
        Ok(Self { degree, shape, values, twisted: false })
    }

    pub fn zeros(degree: u8, shape: FormShape) -> Self {
        Self { degree, shape, values: vec![0.0; shape.len(degree)], twisted: false }
    }

    /// 0-form sampled from a closure over node points.
    pub fn from_fn(chart: &FoliatedChartModel, f: impl Fn(LeafPoint) -> f64) -> Self {
        let values = (0..chart.node_count()).map(|n| f(chart.node_point(n))).collect();
        Self { degree: 0, shape: FormShape::of(chart), values, twisted: false }
    }

    pub fn twisted(mut self) -> Self {
        self.twisted = true;
        self
    }

    /// Constant-coefficient 1-form `a dx + b dy` integrated along edges.
    pub fn constant_one_form(chart: &FoliatedChartModel, a: f64, b: f64) -> Self {
        let shape = FormShape::of(chart);
        let [hx, hy, _] = chart.spacing();
        let mut f = Self::zeros(1, shape);
        let (ex, ey) = shape.edges_x();
        let (fx, fy) = shape.edges_y();
        for k in 0..shape.nz {
            for j in 0..ey {
                for i in 0..ex {
                    f.values[shape.x_edge(i, j, k)] = a * hx;
                }
            }
            for j in 0..fy {
                for i in 0..fx {
                    f.values[shape.y_edge(i, j, k)] = b * hy;
                }
            }
        }
        f
    }

    fn check(&self, chart: &FoliatedChartModel) -> Result<()> {
        let shape = FormShape::of(chart);
        if shape != self.shape {
            return Err(Error::InvalidParams("form shape does not match chart".into()));
        }
        let expected = shape.len(self.degree);
        if self.values.len() != expected {
            return Err(Error::FormLength { expected, got: self.values.len() });
        }
        Ok(())
    }

    /// Averages edge values into node components `(ω_x, ω_y)` (central
    /// differences when the form is exact).
    pub fn one_form_node_components(&self, chart: &FoliatedChartModel) -> Result<Vec<[f64; 2]>> {
        if self.degree != 1 {
            return Err(Error::BadDegree(self.degree));
        }
        self.check(chart)?;
        let s = self.shape;
        let [hx, hy, _] = chart.spacing();
        let mut out = vec![[0.0; 2]; chart.node_count()];
        for k in 0..s.nz {
            for j in 0..s.ny {
                for i in 0..s.nx {
                    let xs = adjacent_edges(i, s.nx, s.wrap[0]);
                    let ys = adjacent_edges(j, s.ny, s.wrap[1]);
                    let wx: f64 = xs.iter().map(|&e| self.values[s.x_edge(e, j, k)]).sum::<f64>() / xs.len() as f64;
                    let wy: f64 = ys.iter().map(|&e| self.values[s.y_edge(i, e, k)]).sum::<f64>() / ys.len() as f64;
                    out[s.node(i, j, k)] = [wx / hx, wy / hy];
                }
            }
        }
        Ok(out)
    }
}

/// Edges along an axis touching node `i`.
fn adjacent_edges(i: usize, n: usize, wrap: bool) -> Vec<usize> {
    let mut v = Vec::with_capacity(2);
    if i > 0 {
        v.push(i - 1);
    } else if wrap {
        v.push(n - 1);
    }
    if i + 1 < n || wrap {
        v.push(i);
    }
    v
}

/// Coboundary of a 0- or 1-cochain. `dd = 0` as a cochain identity.
pub fn exterior_d(form: &DiscreteForm, chart: &FoliatedChartModel) -> Result<DiscreteForm> {
    form.check(chart)?;
    let s = form.shape;
    match form.degree {
        0 => {
            let mut out = DiscreteForm::zeros(1, s);
            let (ex, ey) = s.edges_x();
            let (fx, fy) = s.edges_y();
            for k in 0..s.nz {
                for j in 0..ey {
                    for i in 0..ex {
                        let a = form.values[s.node(i, j, k)];
                        let b = form.values[s.node((i + 1) % s.nx, j, k)];
                        out.values[s.x_edge(i, j, k)] = b - a;
                    }
                }
                for j in 0..fy {
                    for i in 0..fx {
                        let a = form.values[s.node(i, j, k)];
                        let b = form.values[s.node(i, (j + 1) % s.ny, k)];
                        out.values[s.y_edge(i, j, k)] = b - a;
                    }
                }
            }
            Ok(out)
        }
        1 => {
            let mut out = DiscreteForm::zeros(2, s);
            let (fx, fy) = s.faces();
            for k in 0..s.nz {
                for j in 0..fy {
                    for i in 0..fx {
                        let bottom = form.values[s.x_edge(i, j, k)];
                        let top = form.values[s.x_edge(i, (j + 1) % s.ny, k)];
                        let left = form.values[s.y_edge(i, j, k)];
                        let right = form.values[s.y_edge((i + 1) % s.nx, j, k)];
                        out.values[s.face(i, j, k)] = (bottom + right) - (top + left);
                    }
                }
            }
            Ok(out)
        }
        d => Err(Error::BadDegree(d)),
    }
}

/// Leaf Hodge star on 1-cochains. Each edge recovers both components at its
/// midpoint (its own value and the average of the four crossing-direction
/// edges around it), rotates them with the midpoint metric, and keeps the
/// component along itself.
pub fn hodge_star2(form: &DiscreteForm, chart: &FoliatedChartModel) -> Result<DiscreteForm> {
    if form.degree != 1 {
        return Err(Error::BadDegree(form.degree));
    }
    form.check(chart)?;
    let s = form.shape;
    let [hx, hy, _] = chart.spacing();
    let sign = chart.leaf_sign();
    let mut out = DiscreteForm::zeros(1, s);
    let mid_metric = |a: usize, b: usize| {
        let (ga, gb) = (chart.metric_at_node(a), chart.metric_at_node(b));
        [(ga[0] + gb[0]) / 2.0, (ga[1] + gb[1]) / 2.0, (ga[2] + gb[2]) / 2.0]
    };
    let (ex, ey) = s.edges_x();
    let (fx, fy) = s.edges_y();
    for k in 0..s.nz {
        for j in 0..ey {
            for i in 0..ex {
                let i1 = (i + 1) % s.nx;
                let mut ys = Vec::with_capacity(4);
                for ii in [i, i1] {
                    for jj in adjacent_edges(j, s.ny, s.wrap[1]) {
                        ys.push(form.values[s.y_edge(ii, jj, k)]);
                    }
                }
                let wy = ys.iter().sum::<f64>() / ys.len() as f64 / hy;
                let wx = form.values[s.x_edge(i, j, k)] / hx;
                let g = mid_metric(s.node(i, j, k), s.node(i1, j, k));
                out.values[s.x_edge(i, j, k)] = hx * hodge_star_components(g, [wx, wy], sign)[0];
            }
        }
        for j in 0..fy {
            for i in 0..fx {
                let j1 = (j + 1) % s.ny;
                let mut xs = Vec::with_capacity(4);
                for jj in [j, j1] {
                    for ii in adjacent_edges(i, s.nx, s.wrap[0]) {
                        xs.push(form.values[s.x_edge(ii, jj, k)]);
                    }
                }
                let wx = xs.iter().sum::<f64>() / xs.len() as f64 / hx;
                let wy = form.values[s.y_edge(i, j, k)] / hy;
                let g = mid_metric(s.node(i, j, k), s.node(i, j1, k));
                out.values[s.y_edge(i, j, k)] = hy * hodge_star_components(g, [wx, wy], sign)[1];
            }
        }
    }
    Ok(out)
}

/// Laplace–Beltrami `Δf = (1/√g) ∂_i(√g g^{ij} ∂_j f)` at every node, in
/// conservative form: 5-point on diagonal metrics, 9-point otherwise.
pub fn laplace_beltrami(field: &DiscreteForm, chart: &FoliatedChartModel) -> Result<DiscreteForm> {
    if field.degree != 0 {
        return Err(Error::BadDegree(field.degree));
    }
    field.check(chart)?;
    let values: Vec<f64> = (0..chart.node_count())
        .map(|n| laplace_at(chart, &field.values, field.twisted, n))
        .collect::<Result<_>>()?;
    Ok(DiscreteForm { degree: 0, shape: field.shape, values, twisted: false })
}

fn laplace_at(chart: &FoliatedChartModel, f: &[f64], twisted: bool, n: usize) -> Result<f64> {
    let [hx, hy, _] = chart.spacing();
    let c = chart.cursor(n);
    let fv = |di, dj| chart.value_offset(f, c, di, dj, twisted, n);
    let fp = fv(0, 0)?;
    let (fe, fw, fnn, fs) = (fv(1, 0)?, fv(-1, 0)?, fv(0, 1)?, fv(0, -1)?);
    if chart.is_flat() {
        return Ok((fe - 2.0 * fp + fw) / (hx * hx) + (fnn - 2.0 * fp + fs) / (hy * hy));
    }
    let av = |di, dj| chart.value_offset(chart.flux_component(0), c, di, dj, false, n);
    let cv = |di, dj| chart.value_offset(chart.flux_component(2), c, di, dj, false, n);
    let ap = av(0, 0)?;
    let cp = cv(0, 0)?;
    let a_e = 0.5 * (ap + av(1, 0)?);
    let a_w = 0.5 * (ap + av(-1, 0)?);
    let c_n = 0.5 * (cp + cv(0, 1)?);
    let c_s = 0.5 * (cp + cv(0, -1)?);
    let mut div = (a_e * (fe - fp) - a_w * (fp - fw)) / (hx * hx) + (c_n * (fnn - fp) - c_s * (fp - fs)) / (hy * hy);
    if !chart.is_diagonal() {
        let bv = |di, dj| chart.value_offset(chart.flux_component(1), c, di, dj, false, n);
        let mixed_x = (bv(1, 0)? * (fv(1, 1)? - fv(1, -1)?) - bv(-1, 0)? * (fv(-1, 1)? - fv(-1, -1)?)) / (4.0 * hx * hy);
        let mixed_y = (bv(0, 1)? * (fv(1, 1)? - fv(-1, 1)?) - bv(0, -1)? * (fv(1, -1)? - fv(-1, -1)?)) / (4.0 * hx * hy);
        div += mixed_x + mixed_y;
    }
    Ok(div / chart.sqrt_det(n))
}

/// Laplacian at a single node of a raw node array.
pub fn laplace_node(chart: &FoliatedChartModel, values: &[f64], twisted: bool, node: usize) -> Result<f64> {
    laplace_at(chart, values, twisted, node)
}

/// Flat rectangular chart builder used by the built-in instances and tests.
pub fn rectangle_description(
    dims: [usize; 3],
    origin: [f64; 3],
    spacing: [f64; 3],
    periodic: [bool; 2],
    metric: MetricSpec,
    bounded_rule: FaceRule,
) -> ChartDescription {
    let mut tmp = ChartDescription {
        dims,
        origin,
        spacing,
        periodic,
        metric,
        faces: FaceMap { x_low: vec![], x_high: vec![], y_low: vec![], y_high: vec![] },
        leaf_orientation: 1,
        transverse_orientation: 1,
    };
    let bounds = |axis: usize| {
        let cells = if periodic[axis] { dims[axis] } else { dims[axis] - 1 };
        (origin[axis], origin[axis] + cells as f64 * spacing[axis])
    };
    let z_period = dims[2] as f64 * spacing[2];
    let mut faces = Vec::new();
    for face in Face::ALL {
        let (tlo, thi) = bounds(1 - face.axis());
        let rule = if periodic[face.axis()] {
            FaceRule::Glue {
                branches: vec![GlueBranch {
                    z_from: origin[2],
                    z_to: origin[2] + z_period,
                    target_face: face.opposite(),
                    target_start: tlo,
                    z_scale: 1.0,
                    z_offset: 0.0,
                }],
            }
        } else {
            bounded_rule.clone()
        };
        faces.push(vec![FaceSegment { start: tlo, end: thi, rule }]);
    }
    let mut it = faces.into_iter();
    tmp.faces = FaceMap {
        x_low: it.next().unwrap(),
        x_high: it.next().unwrap(),
        y_low: it.next().unwrap(),
        y_high: it.next().unwrap(),
    };
    tmp
}

//! Level-set complexes of `f` on one leaf slice, by marching triangles.
//!
//! Every grid cell is split along its diagonal. Level crossings subdivide
//! the triangle sides, each triangle is cut into convex bands between
//! consecutive levels, and the chords separating bands become marked edges.
//! Cells wrap only across axes where the chart's cochains wrap; all other
//! chart faces are left as boundary.

use std::collections::HashMap;

use num::traits::Signed;

use super::complex::{ComplexFace, LeafComplex, MarkedEdge};
use super::rational::dyadic;
use crate::error::{Error, Result};
use crate::geometry::FoliatedChartModel;
use crate::measures::TransverseMeasureField;

const AREA_BITS: u32 = 30;

#[derive(Clone, Copy, Hash, PartialEq, Eq)]
enum Seg {
    H(usize, usize),
    V(usize, usize),
    D(usize, usize),
}

#[derive(Clone, Copy, Hash, PartialEq, Eq)]
enum EdgeKey {
    Piece(Seg, usize),
    Chord(usize, usize),
}

#[derive(Clone, Copy)]
struct Pt {
    vid: usize,
    value: f64,
    level: Option<usize>,
    pos: [f64; 2],
}

struct Builder<'a> {
    nx: usize,
    values: &'a [f64],
    levels: &'a [f64],
    coords: Vec<[f64; 2]>,
    crossings: HashMap<(Seg, usize), usize>,
    edge_ids: HashMap<EdgeKey, usize>,
    edges: Vec<[usize; 2]>,
    faces: Vec<ComplexFace>,
    marked: Vec<MarkedEdge>,
}

impl Builder<'_> {
    /// Edge id and whether it was created by this call.
    fn edge(&mut self, key: EdgeKey, tail: usize, head: usize) -> (usize, bool) {
        if let Some(&e) = self.edge_ids.get(&key) {
            return (e, false);
        }
        let e = self.edges.len();
        self.edges.push([tail, head]);
        self.edge_ids.insert(key, e);
        (e, true)
    }

    /// Canonical endpoints of a segment as `(i, j)` node pairs.
    fn ends(&self, s: Seg, ny: usize) -> ([usize; 2], [usize; 2]) {
        let nx = self.nx;
        match s {
            Seg::H(i, j) => ([i, j], [(i + 1) % nx, j]),
            Seg::V(i, j) => ([i, j], [i, (j + 1) % ny]),
            Seg::D(i, j) => ([i, j], [(i + 1) % nx, (j + 1) % ny]),
        }
    }

    /// Points of segment `s` from its canonical start to end, given the
    /// start and end positions in the current cell frame.
    fn segment_points(&mut self, s: Seg, ny: usize, pa: [f64; 2], pb: [f64; 2]) -> Vec<Pt> {
        let (a, b) = self.ends(s, ny);
        let (ia, ib) = (a[1] * self.nx + a[0], b[1] * self.nx + b[0]);
        let (va, vb) = (self.values[ia], self.values[ib]);
        let mut pts = vec![Pt { vid: ia, value: va, level: None, pos: pa }];
        let mut between: Vec<usize> =
            (0..self.levels.len()).filter(|&l| (self.levels[l] - va) * (self.levels[l] - vb) < 0.0).collect();
        if vb < va {
            between.reverse();
        }
        for l in between {
            let c = self.levels[l];
            let t = (c - va) / (vb - va);
            let pos = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
            let next = self.coords.len();
            let vid = *self.crossings.entry((s, l)).or_insert(next);
            if vid == next {
                self.coords.push(pos);
            }
            pts.push(Pt { vid, value: c, level: Some(l), pos });
        }
        pts.push(Pt { vid: ib, value: vb, level: None, pos: pb });
        pts
    }

    /// Cuts one counter-clockwise triangle into level bands.
    fn triangle(&mut self, tri: usize, ny: usize, sides: [(Seg, bool, [f64; 2], [f64; 2]); 3]) -> Result<()> {
        let mut cycle: Vec<Pt> = Vec::new();
        let mut cycle_edges: Vec<(usize, i32)> = Vec::new();
        let mut corners: Vec<Pt> = Vec::new();
        for (s, forward, p_from, p_to) in sides {
            let (pa, pb) = if forward { (p_from, p_to) } else { (p_to, p_from) };
            let pts = self.segment_points(s, ny, pa, pb);
            let mut walk: Vec<(Pt, Option<(usize, i32)>)> = Vec::new();
            for k in 0..pts.len() - 1 {
                let (e, _) = self.edge(EdgeKey::Piece(s, k), pts[k].vid, pts[k + 1].vid);
                walk.push((pts[k], Some((e, 1))));
            }
            if !forward {
                let mut rev: Vec<(Pt, Option<(usize, i32)>)> = Vec::new();
                for k in (1..pts.len()).rev() {
                    let (e, _) = walk[k - 1].1.unwrap();
                    rev.push((pts[k], Some((e, -1))));
                }
                walk = rev;
            }
            corners.push(walk[0].0);
            for (p, e) in walk {
                cycle.push(p);
                cycle_edges.push(e.unwrap());
            }
        }
        let grad = linear_gradient(&corners);
        let n = cycle.len();
        let in_band = |p: &Pt, r: usize| match p.level {
            Some(l) => l == r || l + 1 == r,
            None => self.levels.iter().filter(|&&c| c < p.value).count() == r,
        };
        for r in 0..=self.levels.len() {
            let members: Vec<usize> = (0..n).filter(|&k| in_band(&cycle[k], r)).collect();
            if members.len() < 3 {
                continue;
            }
            let mut boundary = Vec::with_capacity(members.len());
            let mut twice_area = 0.0;
            for (m, &k) in members.iter().enumerate() {
                let k2 = members[(m + 1) % members.len()];
                let (p, q) = (cycle[k], cycle[k2]);
                twice_area += p.pos[0] * q.pos[1] - q.pos[0] * p.pos[1];
                if k2 == (k + 1) % n {
                    boundary.push(cycle_edges[k]);
                    continue;
                }
                let l = match (p.level, q.level) {
                    (Some(a), Some(b)) if a == b => a,
                    _ => return Err(Error::DegenerateLevel { level: p.value, msg: "band is not convex".into() }),
                };
                let (tail, head) = if p.vid < q.vid { (p, q) } else { (q, p) };
                let (e, created) = self.edge(EdgeKey::Chord(tri, l), tail.vid, head.vid);
                let t = [grad[1], -grad[0]];
                let d = [head.pos[0] - tail.pos[0], head.pos[1] - tail.pos[1]];
                let sign = if d[0] * t[0] + d[1] * t[1] >= 0.0 { 1 } else { -1 };
                if created {
                    self.marked.push(MarkedEdge { edge: e, sign });
                }
                boundary.push((e, if p.vid == tail.vid { 1 } else { -1 }));
            }
            let mut area = dyadic(0.5 * twice_area, AREA_BITS);
            if !area.is_positive() {
                area = dyadic(2f64.powi(-(AREA_BITS as i32)), AREA_BITS);
            }
            self.faces.push(ComplexFace { boundary, area });
        }
        Ok(())
    }
}

fn linear_gradient(c: &[Pt]) -> [f64; 2] {
    let (a, b) = ([c[1].pos[0] - c[0].pos[0], c[1].pos[1] - c[0].pos[1]], [c[2].pos[0] - c[0].pos[0], c[2].pos[1] - c[0].pos[1]]);
    let (da, db) = (c[1].value - c[0].value, c[2].value - c[0].value);
    let det = a[0] * b[1] - a[1] * b[0];
    [(da * b[1] - db * a[1]) / det, (a[0] * db - b[0] * da) / det]
}

/// Evenly spaced interior levels, each moved off any node value it hits.
fn choose_levels(values: &[f64], n_levels: usize) -> Result<Vec<f64>> {
    if n_levels == 0 {
        return Ok(Vec::new());
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if is_flat_range(lo, hi) {
        return Err(Error::DegenerateLevel { level: lo, msg: "f is constant on the slice".into() });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let tol = 1e-12 * range.max(hi.abs());
    (0..n_levels)
        .map(|l| {
            let c = lo + range * (l + 1) as f64 / (n_levels + 1) as f64;
            match sorted.iter().position(|&v| (v - c).abs() <= tol) {
                None => Ok(c),
                Some(p) if p + 1 < sorted.len() => Ok(0.5 * (sorted[p] + sorted[p + 1])),
                Some(_) => Err(Error::DegenerateLevel { level: c, msg: "level coincides with the maximum".into() }),
            }
        })
        .collect()
}

fn is_flat_range(lo: f64, hi: f64) -> bool {
    !(hi - lo > 1e-12 * hi.abs().max(1.0))
}

/// Whether `f` has no level curves on slice `k` (the only admissible level
/// count is then zero).
pub fn constant_on_slice(chart: &FoliatedChartModel, tau: &TransverseMeasureField, slice: usize) -> bool {
    let [nx, ny, _] = chart.dims();
    let log_f = tau.log_values();
    let (lo, hi) = (0..nx * ny)
        .map(|s| log_f[chart.node_index(s % nx, s / nx, slice)].exp())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    is_flat_range(lo, hi)
}

/// Complex of slice `k` cut along `n_levels` level curves of `f`.
pub fn extract_complex(chart: &FoliatedChartModel, tau: &TransverseMeasureField, slice: usize, n_levels: usize) -> Result<LeafComplex> {
    let [nx, ny, nz] = chart.dims();
    if slice >= nz {
        return Err(Error::InvalidParams(format!("slice {slice} out of range 0..{nz}")));
    }
    let log_f = tau.log_values();
    let values: Vec<f64> = (0..nx * ny).map(|s| log_f[chart.node_index(s % nx, s / nx, slice)].exp()).collect();
    let levels = choose_levels(&values, n_levels)?;
    let desc = chart.description();
    let [x0, y0, _] = desc.origin;
    let [hx, hy, _] = desc.spacing;
    let cx = if chart.wraps(0) { nx } else { nx - 1 };
    let cy = if chart.wraps(1) { ny } else { ny - 1 };
    let coords = (0..nx * ny).map(|s| [x0 + (s % nx) as f64 * hx, y0 + (s / nx) as f64 * hy]).collect();
    let mut b = Builder {
        nx,
        values: &values,
        levels: &levels,
        coords,
        crossings: HashMap::new(),
        edge_ids: HashMap::new(),
        edges: Vec::new(),
        faces: Vec::new(),
        marked: Vec::new(),
    };
    for j in 0..cy {
        for i in 0..cx {
            let (i1, j1) = ((i + 1) % nx, (j + 1) % ny);
            let p00 = [x0 + i as f64 * hx, y0 + j as f64 * hy];
            let p10 = [p00[0] + hx, p00[1]];
            let p11 = [p00[0] + hx, p00[1] + hy];
            let p01 = [p00[0], p00[1] + hy];
            let tri = 2 * (j * cx + i);
            b.triangle(tri, ny, [(Seg::H(i, j), true, p00, p10), (Seg::V(i1, j), true, p10, p11), (Seg::D(i, j), false, p11, p00)])?;
            b.triangle(tri + 1, ny, [(Seg::D(i, j), true, p00, p11), (Seg::H(i, j1), false, p11, p01), (Seg::V(i, j), false, p01, p00)])?;
        }
    }
    let c = LeafComplex { n_vertices: b.coords.len(), coords: b.coords, edges: b.edges, faces: b.faces, marked: b.marked };
    c.validate()?;
    Ok(c)
}

/// Marked edges grouped into chains by shared endpoints, for inspection.
pub fn marked_components(c: &LeafComplex) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..c.n_vertices).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let n = p[y];
            p[y] = r;
            y = n;
        }
        r
    }
    for m in &c.marked {
        let [a, b] = c.edges[m.edge];
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for m in &c.marked {
        let r = find(&mut parent, c.edges[m.edge][0]);
        groups.entry(r).or_default().push(m.edge);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

//! Hand-built leaf complexes and a seeded random corpus.

use num::traits::{One, Signed};
use num::BigInt;
use rand::Rng;

use super::complex::{ComplexFace, LeafComplex, MarkedEdge};
use super::rational::Q;
use crate::rng::{stream, Purpose};

/// Square grid of `m × n` cells, optionally wrapped, with some cells
/// removed and the rest optionally split along their diagonals.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub m: usize,
    pub n: usize,
    pub wrap: [bool; 2],
    pub holes: Vec<(usize, usize)>,
    pub split: bool,
}

impl GridSpec {
    pub fn new(m: usize, n: usize) -> Self {
        Self { m, n, wrap: [false; 2], holes: Vec::new(), split: false }
    }
}

/// Builds the grid complex, assigning `area(i, j, part)` to each face.
pub fn grid_complex(spec: &GridSpec, mut area: impl FnMut(usize, usize, usize) -> Q) -> LeafComplex {
    let (m, n) = (spec.m, spec.n);
    let vx = if spec.wrap[0] { m } else { m + 1 };
    let vy = if spec.wrap[1] { n } else { n + 1 };
    let vid = |i: usize, j: usize| (j % vy) * vx + i % vx;
    let mut edges = Vec::new();
    let mut h = vec![vec![0; vy]; m];
    for (i, col) in h.iter_mut().enumerate() {
        for (j, e) in col.iter_mut().enumerate() {
            *e = edges.len();
            edges.push([vid(i, j), vid(i + 1, j)]);
        }
    }
    let mut v = vec![vec![0; n]; vx];
    for (i, col) in v.iter_mut().enumerate() {
        for (j, e) in col.iter_mut().enumerate() {
            *e = edges.len();
            edges.push([vid(i, j), vid(i, j + 1)]);
        }
    }
    let mut faces = Vec::new();
    let mut coords = Vec::with_capacity(vx * vy);
    for j in 0..vy {
        for i in 0..vx {
            coords.push([i as f64, j as f64]);
        }
    }
    for j in 0..n {
        for i in 0..m {
            if spec.holes.contains(&(i, j)) {
                continue;
            }
            let (bottom, right, top, left) = (h[i][j], v[(i + 1) % vx][j], h[i][(j + 1) % vy], v[i][j]);
            if spec.split {
                let d = edges.len();
                edges.push([vid(i, j), vid(i + 1, j + 1)]);
                faces.push(ComplexFace { boundary: vec![(bottom, 1), (right, 1), (d, -1)], area: area(i, j, 0) });
                faces.push(ComplexFace { boundary: vec![(d, 1), (top, -1), (left, -1)], area: area(i, j, 1) });
            } else {
                faces.push(ComplexFace { boundary: vec![(bottom, 1), (right, 1), (top, -1), (left, -1)], area: area(i, j, 0) });
            }
        }
    }
    LeafComplex { n_vertices: vx * vy, coords, edges, faces, marked: Vec::new() }
}

fn unit(_: usize, _: usize, _: usize) -> Q {
    Q::one()
}

/// Edges carrying a nonzero coefficient in the boundary of all faces, with
/// that coefficient.
pub fn boundary_edges(c: &LeafComplex) -> Vec<(usize, i32)> {
    let ones = vec![Q::one(); c.faces.len()];
    c.boundary_of(&ones)
        .iter()
        .enumerate()
        .filter(|(_, b)| !num::Zero::is_zero(*b))
        .map(|(e, b)| (e, if b.is_positive() { 1 } else { -1 }))
        .collect()
}

/// Closed `m × n` torus with unit areas and no marked edges.
pub fn torus_complex(m: usize, n: usize) -> LeafComplex {
    grid_complex(&GridSpec { wrap: [true, true], ..GridSpec::new(m, n) }, unit)
}

/// Square disk around a local minimum. Its boundary is oriented as the
/// boundary of the disk, which is the reverse of the superlevel orientation,
/// so every boundary edge is marked with sign `−1` relative to it.
pub fn disk_complex(m: usize) -> LeafComplex {
    let mut c = grid_complex(&GridSpec::new(m, m), unit);
    c.marked = boundary_edges(&c).into_iter().map(|(edge, b)| MarkedEdge { edge, sign: -b }).collect();
    c
}

/// Planar pair of pants: the outer square is cuff `a` (where `f = 2`) and
/// two removed cells are cuffs `b` and `c` (where `f = 1`). All three cuffs
/// are oriented as the boundary of the surface, which is the superlevel
/// orientation at both the minimum and the maximum of `f`.
pub fn pants_complex() -> LeafComplex {
    let spec = GridSpec { holes: vec![(1, 1), (5, 1)], split: true, ..GridSpec::new(7, 3) };
    let mut c = grid_complex(&spec, |_, _, _| Q::new(BigInt::from(1), BigInt::from(2)));
    c.marked = boundary_edges(&c).into_iter().map(|(edge, b)| MarkedEdge { edge, sign: b }).collect();
    c
}

/// A random complex from the corpus, and whether it is a closed unmarked
/// cycle (which Stokes forces to be infeasible).
pub fn random_complex(seed: u64, index: u64, max_faces: usize) -> (LeafComplex, bool) {
    let mut rng = stream(seed, Purpose::Corpus, index);
    let stokes = index.is_multiple_of(10);
    let split = rng.gen_bool(0.5);
    let per_cell = if split { 2 } else { 1 };
    let budget = (max_faces / per_cell).max(4);
    let m = rng.gen_range(2..=budget.min(24));
    let n = rng.gen_range(2..=(budget / m).clamp(2, 24));
    let wrap = if stokes { [true, true] } else { [rng.gen_bool(0.3), rng.gen_bool(0.3)] };
    let mut holes = Vec::new();
    if !stokes {
        for j in 0..n {
            for i in 0..m {
                if rng.gen_bool(0.05) {
                    holes.push((i, j));
                }
            }
        }
    }
    let spec = GridSpec { m, n, wrap, holes, split };
    let mut c = grid_complex(&spec, |_, _, _| Q::new(BigInt::from(rng.gen_range(1..=9)), BigInt::from(rng.gen_range(1..=4))));
    if !stokes {
        let p = [0.0, 0.05, 0.2, 0.5][rng.gen_range(0..4)];
        for e in 0..c.edges.len() {
            if rng.gen_bool(p) {
                c.marked.push(MarkedEdge { edge: e, sign: if rng.gen_bool(0.5) { 1 } else { -1 } });
            }
        }
    }
    (c, stokes)
}

//! Leaf 2-complexes and the exact alternative between a section `β` with
//! `dβ > 0` that is non-negative on level sets, and an obstruction 2-chain.

use std::collections::BTreeMap;

use num::traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::rational::{q_string, Q};
use super::simplex::{phase_one, EqualitySystem};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexFace {
    /// `(edge, ±1)`: the face boundary as a signed chain of edges.
    pub boundary: Vec<(usize, i32)>,
    #[serde(with = "q_string")]
    pub area: Q,
}

/// A marked edge lies in a level set; `sign` is `+1` when the edge's
/// orientation agrees with the boundary orientation of the superlevel set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedEdge {
    pub edge: usize,
    pub sign: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafComplex {
    pub n_vertices: usize,
    /// Optional planar positions, for plotting only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coords: Vec<[f64; 2]>,
    /// `[tail, head]`.
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<ComplexFace>,
    #[serde(default)]
    pub marked: Vec<MarkedEdge>,
}

impl LeafComplex {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks indices, positive areas, unit marks, and `∂∂ = 0`.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidComplex(m));
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            if a >= self.n_vertices || b >= self.n_vertices {
                return bad(format!("edge {e} has an endpoint out of range"));
            }
        }
        if !self.coords.is_empty() && self.coords.len() != self.n_vertices {
            return bad(format!("{} coordinates for {} vertices", self.coords.len(), self.n_vertices));
        }
        for (f, face) in self.faces.iter().enumerate() {
            if !face.area.is_positive() {
                return bad(format!("face {f} has non-positive area {}", face.area));
            }
            let mut dd: BTreeMap<usize, i64> = BTreeMap::new();
            for &(e, s) in &face.boundary {
                if e >= self.edges.len() || s.abs() != 1 {
                    return bad(format!("face {f} has bad boundary entry ({e}, {s})"));
                }
                let [a, b] = self.edges[e];
                *dd.entry(b).or_default() += s as i64;
                *dd.entry(a).or_default() -= s as i64;
            }
            if dd.values().any(|&v| v != 0) {
                return bad(format!("boundary of face {f} is not a cycle"));
            }
        }
        let mut seen = vec![false; self.edges.len()];
        for m in &self.marked {
            if m.edge >= self.edges.len() || m.sign.abs() != 1 {
                return bad(format!("bad marked edge ({}, {})", m.edge, m.sign));
            }
            if std::mem::replace(&mut seen[m.edge], true) {
                return bad(format!("edge {} marked twice", m.edge));
            }
        }
        Ok(())
    }

    /// `[∂f : e]` as sparse rows.
    pub fn incidence(&self) -> Vec<BTreeMap<usize, i64>> {
        self.faces
            .iter()
            .map(|f| {
                let mut row = BTreeMap::new();
                for &(e, s) in &f.boundary {
                    *row.entry(e).or_insert(0) += s as i64;
                }
                row.retain(|_, v| *v != 0);
                row
            })
            .collect()
    }

    /// `(dβ)_f = Σ_e [∂f:e] β_e`.
    pub fn coboundary(&self, beta: &[Q]) -> Vec<Q> {
        self.incidence().iter().map(|row| row.iter().map(|(&e, &s)| &beta[e] * Q::from_integer(s.into())).sum()).collect()
    }

    /// `Σ_f w_f [∂f:e]` for every edge.
    pub fn boundary_of(&self, w: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.edges.len()];
        for (row, wf) in self.incidence().iter().zip(w) {
            for (&e, &s) in row {
                out[e] += wf * Q::from_integer(s.into());
            }
        }
        out
    }

    pub fn total_area(&self) -> Q {
        self.faces.iter().map(|f| f.area.clone()).sum()
    }
}

/// Exactly one alternative of the discrete Farkas lemma.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LPOutcome {
    /// `(dβ)_f ≥ δ·area_f` on every face and `sign·β_e ≥ 0` on marked edges.
    FeasibleBeta {
        #[serde(with = "q_string::vec")]
        beta: Vec<Q>,
        #[serde(with = "q_string")]
        delta: Q,
    },
    /// `w ≥ 0` with `∂w` vanishing off marked edges, `sign·(∂w)_e ≤ 0` on
    /// them, and `Σ w_f area_f > 0`.
    Obstruction {
        #[serde(with = "q_string::vec")]
        weights: Vec<Q>,
    },
}

impl LPOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LPOutcome::FeasibleBeta { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LPOutcome::FeasibleBeta { .. } => "feasible_beta",
            LPOutcome::Obstruction { .. } => "obstruction",
        }
    }
}

/// Decides the alternative by phase one on the certificate system
/// `Σ_f w_f[∂f:e] + sign_e μ_e = 0`, `Σ_f w_f area_f = 1`, `w, μ ≥ 0`.
/// A zero optimum yields the obstruction; otherwise the optimal duals
/// `y` give `β = −y_E / y_area` with `dβ ≥ area`.
pub fn solve_beta_lp(c: &LeafComplex) -> Result<LPOutcome> {
    c.validate()?;
    let n_edges = c.edges.len();
    let one = Q::from_integer(1.into());
    let mut columns: Vec<Vec<(usize, Q)>> = c
        .incidence()
        .iter()
        .zip(&c.faces)
        .map(|(row, f)| {
            let mut col: Vec<(usize, Q)> = row.iter().map(|(&e, &s)| (e, Q::from_integer(s.into()))).collect();
            col.push((n_edges, f.area.clone()));
            col
        })
        .collect();
    for m in &c.marked {
        columns.push(vec![(m.edge, Q::from_integer(m.sign.into()))]);
    }
    let mut rhs = vec![Q::zero(); n_edges + 1];
    rhs[n_edges] = one;
    let sol = phase_one(&EqualitySystem { n_rows: n_edges + 1, columns, rhs });
    if sol.optimum.is_zero() {
        return Ok(LPOutcome::Obstruction { weights: sol.x[..c.faces.len()].to_vec() });
    }
    let scale = &sol.y[n_edges];
    let beta: Vec<Q> = sol.y[..n_edges].iter().map(|y| -(y / scale)).collect();
    let delta = c
        .coboundary(&beta)
        .iter()
        .zip(&c.faces)
        .map(|(d, f)| d / &f.area)
        .min()
        .unwrap_or_else(|| Q::from_integer(1.into()));
    Ok(LPOutcome::FeasibleBeta { beta, delta })
}

/// Re-checks an outcome's defining inequalities exactly.
pub fn verify_certificate(o: &LPOutcome, c: &LeafComplex) -> Result<bool> {
    c.validate()?;
    match o {
        LPOutcome::FeasibleBeta { beta, delta } => {
            if beta.len() != c.edges.len() {
                return Err(Error::ComplexMismatch(format!("{} edge values for {} edges", beta.len(), c.edges.len())));
            }
            let faces_ok =
                c.coboundary(beta).iter().zip(&c.faces).all(|(d, f)| *d >= delta * &f.area);
            let marks_ok = c.marked.iter().all(|m| !(&beta[m.edge] * Q::from_integer(m.sign.into())).is_negative());
            Ok(delta.is_positive() && faces_ok && marks_ok)
        }
        LPOutcome::Obstruction { weights } => {
            if weights.len() != c.faces.len() {
                return Err(Error::ComplexMismatch(format!("{} weights for {} faces", weights.len(), c.faces.len())));
            }
            if weights.iter().any(|w| w.is_negative()) {
                return Ok(false);
            }
            let bd = c.boundary_of(weights);
            let mut sign = vec![0; c.edges.len()];
            for m in &c.marked {
                sign[m.edge] = m.sign;
            }
            let edges_ok = bd.iter().zip(&sign).all(|(b, &s)| match s {
                0 => b.is_zero(),
                s => !(b * Q::from_integer(s.into())).is_positive(),
            });
            let mass: Q = weights.iter().zip(&c.faces).map(|(w, f)| w * &f.area).sum();
            Ok(edges_ok && mass.is_positive())
        }
    }
}

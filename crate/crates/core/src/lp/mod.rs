//! Exact Farkas alternative on leaf complexes: either a section `β` with
//! `dβ > 0` that is non-negative along marked level edges, or a positive
//! 2-chain whose boundary lies on level sets with the wrong orientation.

pub mod complex;
pub mod extract;
pub mod fixtures;
pub mod rational;
pub mod simplex;

use serde::{Deserialize, Serialize};

pub use complex::{solve_beta_lp, verify_certificate, ComplexFace, LPOutcome, LeafComplex, MarkedEdge};
pub use extract::{constant_on_slice, extract_complex};

use crate::diffusion::{check_superharmonic_exact, Verdict};
use crate::error::Result;
use crate::geometry::FoliatedChartModel;
use crate::measures::TransverseMeasureField;

/// One measure to sweep. `certified` carries an externally established
/// superharmonicity verdict (for diffused measures); when absent, the exact
/// stencil check with `κ₀ = 0` decides admission.
pub struct SweepEntry<'a> {
    pub label: String,
    pub chart: &'a FoliatedChartModel,
    pub measure: &'a TransverseMeasureField,
    pub slice: usize,
    pub n_levels: usize,
    pub certified: Option<Verdict>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    pub admitted: bool,
    pub n_faces: usize,
    pub n_edges: usize,
    pub n_marked: usize,
    pub outcome: Option<String>,
    pub verified: bool,
    /// Attached when the solver finds an obstruction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<LPOutcome>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub n_admitted: usize,
    pub n_feasible: usize,
    pub n_obstruction: usize,
}

impl SweepReport {
    pub fn all_feasible(&self) -> bool {
        self.n_obstruction == 0 && self.n_feasible == self.n_admitted && self.rows.iter().all(|r| !r.admitted || r.verified)
    }
}

/// Solves the LP on the level complex of every admitted measure.
pub fn superharmonic_feasibility_sweep(entries: &[SweepEntry<'_>]) -> Result<SweepReport> {
    let mut rows = Vec::with_capacity(entries.len());
    for e in entries {
        let verdict = match e.certified {
            Some(v) => v,
            None => check_superharmonic_exact(e.chart, e.measure, 0.0)?.verdict,
        };
        if verdict != Verdict::Pass {
            rows.push(SweepRow {
                label: e.label.clone(),
                admitted: false,
                n_faces: 0,
                n_edges: 0,
                n_marked: 0,
                outcome: None,
                verified: false,
                certificate: None,
            });
            continue;
        }
        let c = extract_complex(e.chart, e.measure, e.slice, e.n_levels)?;
        let o = solve_beta_lp(&c)?;
        let verified = verify_certificate(&o, &c)?;
        rows.push(SweepRow {
            label: e.label.clone(),
            admitted: true,
            n_faces: c.faces.len(),
            n_edges: c.edges.len(),
            n_marked: c.marked.len(),
            outcome: Some(o.kind().to_string()),
            verified,
            certificate: (!o.is_feasible()).then_some(o),
        });
    }
    let n_admitted = rows.iter().filter(|r| r.admitted).count();
    let n_feasible = rows.iter().filter(|r| r.outcome.as_deref() == Some("feasible_beta")).count();
    let n_obstruction = rows.iter().filter(|r| r.outcome.as_deref() == Some("obstruction")).count();
    Ok(SweepReport { rows, n_admitted, n_feasible, n_obstruction })
}

//! End-to-end run in proof order: diffuse, certify superharmonicity, build
//! the contact form, check Reeb transversality, and solve the leaf LP.

use serde::{Deserialize, Serialize};

use crate::contact::{auto_epsilon, build_alpha, build_beta, check_reeb_transverse, contact_volume, leaf_dalpha, TransverseReport};
use crate::diffusion::{check_superharmonic, log_diffuse, DiffusionParams, LaplacianEstimator, SuperharmonicReport, Verdict};
use crate::error::Result;
use crate::instances::InstanceDescriptor;
use crate::lp::{constant_on_slice, extract_complex, solve_beta_lp, verify_certificate, LPOutcome};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub diffusion: DiffusionParams,
    /// Margin in the superharmonicity test `Δ log f' + 3 SE < −κ₀`.
    #[serde(default)]
    pub kappa0: f64,
    /// Fixed ε, or the largest `2⁻ᵏ ≤ 1` that works when absent.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    #[serde(default)]
    pub lp_slice: usize,
    /// Level curves cut into the leaf complex; ignored where `f` is constant.
    #[serde(default = "default_levels")]
    pub lp_levels: usize,
}

fn default_k_max() -> u32 {
    20
}

fn default_levels() -> usize {
    3
}

impl PipelineConfig {
    pub fn new(diffusion: DiffusionParams) -> Self {
        Self { diffusion, kappa0: 0.0, eps: None, k_max: default_k_max(), lp_slice: 0, lp_levels: default_levels() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSummary {
    pub estimator: LaplacianEstimator,
    pub max_exponent_se: f64,
    pub certified: bool,
    pub truncated: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactSummary {
    pub verdict: Verdict,
    pub eps: Option<f64>,
    /// `(ε, min α∧dα, min dα(σ))` per tried ε.
    pub trials: Vec<(f64, f64, f64)>,
    pub min_volume: Option<f64>,
    pub expansion_consistent: Option<bool>,
    /// `min dα(σ)` with stencil derivatives only, for comparison.
    pub stencil_min_leaf_dalpha: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSummary {
    pub verdict: Verdict,
    pub n_faces: usize,
    pub n_edges: usize,
    pub n_marked: usize,
    pub verified: bool,
    pub outcome: LPOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictChain {
    pub superharmonic: Verdict,
    pub contact: Verdict,
    pub transverse: Verdict,
    pub lp: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub schema: u32,
    pub instance: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub diffusion: DiffusionSummary,
    pub superharmonic: SuperharmonicReport,
    pub contact: ContactSummary,
    pub transverse: Option<TransverseReport>,
    pub lp: LpSummary,
    pub chain: VerdictChain,
    pub verdict: Verdict,
}

impl PipelineReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn run_pipeline(inst: &InstanceDescriptor, cfg: &PipelineConfig) -> Result<PipelineReport> {
    let chart = &inst.chart;
    let diff = log_diffuse(chart, &inst.measure, &cfg.diffusion)?;
    let superharmonic = check_superharmonic(chart, &diff, cfg.kappa0);
    let tau = &diff.measure;

    let (eps, trials) = match cfg.eps {
        Some(e) => (Some(e), Vec::new()),
        None => {
            let s = auto_epsilon(chart, tau, Some(&diff.laplacian), cfg.k_max)?;
            (s.eps, s.trials)
        }
    };
    let beta = build_beta(chart, tau)?;
    let mut contact = ContactSummary {
        verdict: Verdict::Fail,
        eps,
        trials,
        min_volume: None,
        expansion_consistent: None,
        stencil_min_leaf_dalpha: None,
    };
    let mut transverse = None;
    if let Some(e) = eps {
        let plain = build_alpha(tau, &beta, e)?;
        contact.stencil_min_leaf_dalpha =
            Some(leaf_dalpha(chart, &plain)?.into_iter().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min));
        let alpha = plain.with_leaf_laplacian(diff.laplacian.clone())?;
        let vol = contact_volume(chart, &alpha)?;
        let min_volume = vol.direct.min().map(|m| m.1);
        contact.min_volume = min_volume;
        contact.expansion_consistent = Some(vol.consistent);
        if min_volume.is_some_and(|v| v > crate::contact::ZERO_TOLERANCE) {
            contact.verdict = Verdict::Pass;
            transverse = Some(check_reeb_transverse(chart, &alpha)?);
        }
    }
    let transverse_verdict = transverse.as_ref().map_or(Verdict::Fail, |t| t.verdict);

    let levels = if constant_on_slice(chart, tau, cfg.lp_slice) { 0 } else { cfg.lp_levels };
    let complex = extract_complex(chart, tau, cfg.lp_slice, levels)?;
    let outcome = solve_beta_lp(&complex)?;
    let verified = verify_certificate(&outcome, &complex)?;
    let lp_verdict = if outcome.is_feasible() && verified { Verdict::Pass } else { Verdict::Fail };
    let lp = LpSummary {
        verdict: lp_verdict,
        n_faces: complex.faces.len(),
        n_edges: complex.edges.len(),
        n_marked: complex.marked.len(),
        verified,
        outcome,
    };
    let chain = VerdictChain {
        superharmonic: superharmonic.verdict,
        contact: contact.verdict,
        transverse: transverse_verdict,
        lp: lp.outcome.kind().to_string(),
    };
    let verdict = superharmonic.verdict.and(contact.verdict).and(transverse_verdict).and(lp_verdict);
    Ok(PipelineReport {
        schema: REPORT_SCHEMA,
        instance: inst.name.clone(),
        seed: cfg.diffusion.seed,
        config: cfg.clone(),
        diffusion: DiffusionSummary {
            estimator: diff.estimator,
            max_exponent_se: diff.max_exponent_se,
            certified: diff.certified,
            truncated: diff.truncated,
        },
        superharmonic,
        contact,
        transverse,
        lp,
        chain,
        verdict,
    })
}

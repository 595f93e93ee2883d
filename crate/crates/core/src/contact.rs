//! The 1-forms `β = −⋆ d log f` and `α = τ + εβ`, their contact volume, the
//! Reeb field, and Reeb transversality.
//!
//! With `⋆dx = dy` on a positively oriented flat leaf, `β = −⋆ d log f` gives
//! `α∧dα = ε f (|∇ log f|² − Δ log f) + O(ε²)`, positive wherever `log f` is
//! superharmonic, and `dα|_leaf = ε dβ = −ε Δ log f`. The transverse field is
//! `v = ∂_z / f`, so `β(v) = 0` forces `β_z = 0`.
//!
//! All quantities are evaluated at the chart's interior nodes; other entries
//! of node-indexed fields are NaN.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::Verdict;
use crate::error::{Error, Result};
use crate::geometry::{exterior_d, hodge_star2, hodge_star_components, DiscreteForm, FoliatedChartModel};
use crate::measures::TransverseMeasureField;

/// Node-indexed coefficient of `dx∧dy∧dz`, multiplied by the chart's volume
/// sign so that positive means positively oriented.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeFormField {
    pub values: Vec<f64>,
}

impl ThreeFormField {
    /// Minimum over finite entries, with its node.
    pub fn min(&self) -> Option<(usize, f64)> {
        finite_extreme(&self.values, |a, b| a < b)
    }

    pub fn max(&self) -> Option<(usize, f64)> {
        finite_extreme(&self.values, |a, b| a > b)
    }
}

fn finite_extreme(values: &[f64], better: impl Fn(f64, f64) -> bool) -> Option<(usize, f64)> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .fold(None, |acc, (i, &v)| match acc {
            Some((_, w)) if !better(v, w) => acc,
            _ => Some((i, v)),
        })
}

/// Node-indexed vectors in chart coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorField3 {
    pub values: Vec<[f64; 3]>,
}

/// A 1-form on the chart by node components `(dx, dy, dz)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeOneForm {
    pub components: Vec<[f64; 3]>,
}

/// `α = τ + εβ` with `τ = f dz`. `f` is kept as twisted `log f` so that
/// differences across gluings pick up the transverse rescaling.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaForm {
    pub eps: f64,
    pub log_f: Vec<f64>,
    pub beta: NodeOneForm,
    /// Estimated `Δ log f` replacing the stencil value of `dβ` where finite.
    pub leaf_laplacian: Option<Vec<f64>>,
}

impl AlphaForm {
    /// Uses `laplacian` (for example the diffusion estimator's `Δ log f'`)
    /// for the leaf component of `dα` instead of differencing `β`.
    pub fn with_leaf_laplacian(mut self, laplacian: Vec<f64>) -> Result<Self> {
        if laplacian.len() != self.log_f.len() {
            return Err(Error::FormLength { expected: self.log_f.len(), got: laplacian.len() });
        }
        self.leaf_laplacian = Some(laplacian);
        Ok(self)
    }

    pub fn components(&self, node: usize) -> [f64; 3] {
        let b = self.beta.components[node];
        [self.eps * b[0], self.eps * b[1], self.log_f[node].exp() + self.eps * b[2]]
    }
}

/// `β = −⋆ d log f` at every node, with `β_z = 0`.
pub fn build_beta(chart: &FoliatedChartModel, tau: &TransverseMeasureField) -> Result<NodeOneForm> {
    let grad = chart.gradient(tau.log_values(), true)?;
    let sign = chart.leaf_sign();
    let components = grad
        .iter()
        .enumerate()
        .map(|(n, &w)| {
            let s = hodge_star_components(chart.metric_at_node(n), w, sign);
            [-s[0], -s[1], 0.0]
        })
        .collect();
    Ok(NodeOneForm { components })
}

/// `β` as a leaf 1-cochain: `−⋆₂ d(log f)` with the edge-midpoint metric.
pub fn beta_cochain(chart: &FoliatedChartModel, tau: &TransverseMeasureField) -> Result<DiscreteForm> {
    let mut out = hodge_star2(&exterior_d(&tau.log_form(chart), chart)?, chart)?;
    out.values.iter_mut().for_each(|v| *v = -*v);
    Ok(out)
}

pub fn build_alpha(tau: &TransverseMeasureField, beta: &NodeOneForm, eps: f64) -> Result<AlphaForm> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParams(format!("epsilon must be finite and >= 0, got {eps}")));
    }
    if beta.components.len() != tau.log_values().len() {
        return Err(Error::FormLength { expected: tau.log_values().len(), got: beta.components.len() });
    }
    Ok(AlphaForm { eps, log_f: tau.log_values().to_vec(), beta: beta.clone(), leaf_laplacian: None })
}

/// Coordinate partials of the components of `α` at one node.
struct Jet {
    alpha: [f64; 3],
    /// `d[i][j] = ∂_j α_i`.
    d: [[f64; 3]; 3],
    /// `∂_x f`, `∂_y f` via `f · ∂ log f`, for the ε-expansion.
    f_grad_log: [f64; 2],
    beta: [f64; 3],
    beta_curl: f64,
}

impl Jet {
    /// `curl α`, the kernel direction of `dα`.
    fn curl(&self) -> [f64; 3] {
        let d = &self.d;
        [d[2][1] - d[1][2], d[0][2] - d[2][0], d[1][0] - d[0][1]]
    }

    fn volume(&self) -> f64 {
        dot(self.alpha, self.curl())
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Per-form arrays shared by every node's jet.
struct Prepared {
    beta: [Vec<f64>; 3],
    beta_dz: [Vec<f64>; 3],
    log_f_dz: Vec<f64>,
}

impl Prepared {
    fn new(chart: &FoliatedChartModel, alpha: &AlphaForm) -> Self {
        let beta = [0, 1, 2].map(|i| alpha.beta.components.iter().map(|b| b[i]).collect::<Vec<f64>>());
        let beta_dz = [0, 1, 2].map(|i| chart.z_derivative(&beta[i]));
        Self { beta, beta_dz, log_f_dz: chart.z_derivative(&alpha.log_f) }
    }
}

fn jet(chart: &FoliatedChartModel, alpha: &AlphaForm, pre: &Prepared, n: usize) -> Result<Jet> {
    let [hx, hy, _] = chart.spacing();
    let c = chart.cursor(n);
    let central = |vals: &[f64], twisted: bool| -> Result<[f64; 2]> {
        let e = chart.value_offset(vals, c, 1, 0, twisted, n)?;
        let w = chart.value_offset(vals, c, -1, 0, twisted, n)?;
        let nn = chart.value_offset(vals, c, 0, 1, twisted, n)?;
        let s = chart.value_offset(vals, c, 0, -1, twisted, n)?;
        Ok([(e - w) / (2.0 * hx), (nn - s) / (2.0 * hy)])
    };
    let f = alpha.log_f[n].exp();
    let f_at = |di, dj| chart.value_offset(&alpha.log_f, c, di, dj, true, n).map(f64::exp);
    let fx = (f_at(1, 0)? - f_at(-1, 0)?) / (2.0 * hx);
    let fy = (f_at(0, 1)? - f_at(0, -1)?) / (2.0 * hy);
    let grad_log = central(&alpha.log_f, true)?;
    let mut d = [[0.0; 3]; 3];
    let mut beta_d = [[0.0; 3]; 3];
    for i in 0..3 {
        let g = central(&pre.beta[i], false)?;
        beta_d[i] = [g[0], g[1], pre.beta_dz[i][n]];
    }
    let eps = alpha.eps;
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = eps * beta_d[i][j];
        }
    }
    let mut beta_curl = beta_d[1][0] - beta_d[0][1];
    if let Some(lap) = alpha.leaf_laplacian.as_ref().filter(|l| l[n].is_finite()) {
        // dβ = −Δ log f vol on the leaf.
        let g = chart.metric_at_node(n);
        let target = -chart.leaf_sign() * (g[0] * g[2] - g[1] * g[1]).sqrt() * lap[n];
        d[1][0] += eps * (target - beta_curl);
        beta_curl = target;
    }
    let f_dz = pre.log_f_dz[n] * f;
    d[2][0] += fx;
    d[2][1] += fy;
    d[2][2] += f_dz;
    Ok(Jet {
        alpha: alpha.components(n),
        d,
        f_grad_log: [f * grad_log[0], f * grad_log[1]],
        beta: alpha.beta.components[n],
        beta_curl,
    })
}

fn jets(chart: &FoliatedChartModel, alpha: &AlphaForm) -> Result<Vec<(usize, Jet)>> {
    if alpha.log_f.len() != chart.node_count() || alpha.beta.components.len() != chart.node_count() {
        return Err(Error::FormLength { expected: chart.node_count(), got: alpha.log_f.len() });
    }
    let pre = Prepared::new(chart, alpha);
    chart.interior_nodes().into_par_iter().map(|n| Ok((n, jet(chart, alpha, &pre, n)?))).collect()
}

/// Direct `α∧dα` and its first-order ε-expansion, with their discrepancy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactVolume {
    pub direct: ThreeFormField,
    /// `ε f (dβ(σ) + (β ∧ d log f)(σ))` on the coordinate frame.
    pub expansion: ThreeFormField,
    pub max_discrepancy: f64,
    /// `C (ε² + h²)` times the scale of `α∧dα / ε`.
    pub tolerance: f64,
    pub consistent: bool,
}

/// Constant `C` in the agreement bound between the two evaluations.
pub const EXPANSION_CONSTANT: f64 = 10.0;

pub fn contact_volume(chart: &FoliatedChartModel, alpha: &AlphaForm) -> Result<ContactVolume> {
    let sign = chart.volume_sign();
    let mut direct = vec![f64::NAN; chart.node_count()];
    let mut expansion = vec![f64::NAN; chart.node_count()];
    let mut max_discrepancy: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (n, j) in jets(chart, alpha)? {
        direct[n] = sign * j.volume();
        let b = j.beta;
        let f = j.alpha[2] - alpha.eps * b[2];
        expansion[n] = sign * alpha.eps * (f * j.beta_curl + b[0] * j.f_grad_log[1] - b[1] * j.f_grad_log[0]);
        max_discrepancy = max_discrepancy.max((direct[n] - expansion[n]).abs());
        scale = scale.max(expansion[n].abs());
    }
    let [hx, hy, _] = chart.spacing();
    let h2 = hx.max(hy).powi(2);
    let unit = if alpha.eps > 0.0 { scale / alpha.eps } else { 0.0 };
    let tolerance = EXPANSION_CONSTANT * (alpha.eps.powi(2) + h2) * unit.max(1.0) * alpha.eps.max(f64::MIN_POSITIVE);
    Ok(ContactVolume {
        direct: ThreeFormField { values: direct },
        expansion: ThreeFormField { values: expansion },
        max_discrepancy,
        tolerance,
        consistent: max_discrepancy <= tolerance,
    })
}

/// `dα(σ)` for the unit positively oriented leaf 2-vector `σ`.
pub fn leaf_dalpha(chart: &FoliatedChartModel, alpha: &AlphaForm) -> Result<Vec<f64>> {
    let mut out = vec![f64::NAN; chart.node_count()];
    for (n, j) in jets(chart, alpha)? {
        let g = chart.metric_at_node(n);
        out[n] = chart.leaf_sign() * j.curl()[2] / (g[0] * g[2] - g[1] * g[1]).sqrt();
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReebField {
    pub field: VectorField3,
    /// `max |dα(R,·)|` relative to `|dα|`, and `max |α(R) − 1|`.
    pub kernel_residual: f64,
    pub normalization_residual: f64,
}

/// Relative size of `α·curl α` below which the Reeb system is singular.
const SINGULAR: f64 = 1e-12;

/// Solves `dα(R,·) = 0`, `α(R) = 1` per node: the two largest rows of the
/// antisymmetric matrix of `dα` together with `α`, by Cramer's rule.
pub fn reeb_field(chart: &FoliatedChartModel, alpha: &AlphaForm) -> Result<ReebField> {
    let mut values = vec![[f64::NAN; 3]; chart.node_count()];
    let mut kernel_residual: f64 = 0.0;
    let mut normalization_residual: f64 = 0.0;
    for (n, j) in jets(chart, alpha)? {
        let w = j.curl();
        let a = j.alpha;
        let vol = dot(a, w);
        let size = norm(a) * norm(w);
        if !(vol.abs() > SINGULAR * size) || size == 0.0 {
            return Err(Error::ReebDegenerate { node: n, volume: vol });
        }
        // Rows of dα: (dα)_{ik} = ∂_i α_k − ∂_k α_i.
        let m: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|k| j.d[k][i] - j.d[i][k]));
        let mut order = [0, 1, 2];
        order.sort_by(|&p, &q| norm(m[q]).total_cmp(&norm(m[p])));
        let r = cramer([m[order[0]], m[order[1]], a], [0.0, 0.0, 1.0])
            .ok_or(Error::ReebDegenerate { node: n, volume: vol })?;
        let scale = m.iter().map(|row| norm(*row)).fold(0.0, f64::max) * norm(r);
        for row in &m {
            kernel_residual = kernel_residual.max(dot(*row, r).abs() / scale.max(f64::MIN_POSITIVE));
        }
        normalization_residual = normalization_residual.max((dot(a, r) - 1.0).abs());
        values[n] = r;
    }
    Ok(ReebField { field: VectorField3 { values }, kernel_residual, normalization_residual })
}

fn norm(v: [f64; 3]) -> f64 {
    dot(v, v).sqrt()
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn cramer(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let d = det3(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some(std::array::from_fn(|col| {
        let mut mc = m;
        for (row, r) in mc.iter_mut().zip(rhs) {
            row[col] = r;
        }
        det3(mc) / d
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransverseReport {
    pub verdict: Verdict,
    pub eps: f64,
    pub zero_tolerance: f64,
    /// Smallest `dα(σ)` and `τ(R)` with their nodes.
    pub min_leaf_dalpha: f64,
    pub min_leaf_dalpha_node: usize,
    pub min_tau_reeb: f64,
    pub min_tau_reeb_node: usize,
    pub min_contact_volume: f64,
    pub n_nodes: usize,
}

/// Values at or below this count as zero in transversality checks.
pub const ZERO_TOLERANCE: f64 = 1e-8;

/// PASS iff `dα(σ) > 0` and `τ(R) > 0` at every node. The two criteria are
/// equivalent where `α` is contact; a node where they disagree is reported
/// as an error.
pub fn check_reeb_transverse(chart: &FoliatedChartModel, alpha: &AlphaForm) -> Result<TransverseReport> {
    let dsig = leaf_dalpha(chart, alpha)?;
    let reeb = reeb_field(chart, alpha)?;
    let vol = contact_volume(chart, alpha)?;
    let t_sign = chart.volume_sign() * chart.leaf_sign();
    let nodes = chart.interior_nodes();
    let mut rep = TransverseReport {
        verdict: Verdict::Pass,
        eps: alpha.eps,
        zero_tolerance: ZERO_TOLERANCE,
        min_leaf_dalpha: f64::INFINITY,
        min_leaf_dalpha_node: 0,
        min_tau_reeb: f64::INFINITY,
        min_tau_reeb_node: 0,
        min_contact_volume: vol.direct.min().map_or(f64::NAN, |m| m.1),
        n_nodes: nodes.len(),
    };
    for &n in &nodes {
        let tau_r = t_sign * alpha.log_f[n].exp() * reeb.field.values[n][2];
        if dsig[n] < rep.min_leaf_dalpha {
            rep.min_leaf_dalpha = dsig[n];
            rep.min_leaf_dalpha_node = n;
        }
        if tau_r < rep.min_tau_reeb {
            rep.min_tau_reeb = tau_r;
            rep.min_tau_reeb_node = n;
        }
        let (a, b) = (dsig[n] > ZERO_TOLERANCE, tau_r > ZERO_TOLERANCE);
        if a != b {
            return Err(Error::InvalidParams(format!(
                "transversality criteria disagree at node {n}: dα(σ) = {:e}, τ(R) = {tau_r:e}",
                dsig[n]
            )));
        }
        if !a {
            rep.verdict = Verdict::Fail;
        }
    }
    Ok(rep)
}

/// Result of the dyadic ε search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSearch {
    pub eps: Option<f64>,
    /// `(ε, min α∧dα, min dα(σ))` for each tried value.
    pub trials: Vec<(f64, f64, f64)>,
}

/// Largest `ε = 2⁻ᵏ`, `0 ≤ k ≤ k_max`, with `α∧dα > 0` and `dα(σ) > 0`
/// at every node, optionally with an estimated leaf Laplacian.
pub fn auto_epsilon(
    chart: &FoliatedChartModel,
    tau: &TransverseMeasureField,
    laplacian: Option<&[f64]>,
    k_max: u32,
) -> Result<EpsilonSearch> {
    let beta = build_beta(chart, tau)?;
    let mut trials = Vec::new();
    for k in 0..=k_max {
        let eps = 0.5f64.powi(k as i32);
        let mut alpha = build_alpha(tau, &beta, eps)?;
        if let Some(lap) = laplacian {
            alpha = alpha.with_leaf_laplacian(lap.to_vec())?;
        }
        let vol = contact_volume(chart, &alpha)?.direct.min().map_or(f64::NAN, |m| m.1);
        let dsig = leaf_dalpha(chart, &alpha)?.iter().cloned().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
        trials.push((eps, vol, dsig));
        if vol > ZERO_TOLERANCE && dsig > ZERO_TOLERANCE {
            return Ok(EpsilonSearch { eps: Some(eps), trials });
        }
    }
    Ok(EpsilonSearch { eps: None, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{make_instance, make_instance_with};

    fn alpha_for(name: &str, h: Option<f64>, eps: f64) -> (FoliatedChartModel, AlphaForm) {
        let inst = make_instance_with(name, h).unwrap();
        let beta = build_beta(&inst.chart, &inst.measure).unwrap();
        let alpha = build_alpha(&inst.measure, &beta, eps).unwrap();
        (inst.chart, alpha)
    }

    #[test]
    fn constant_f_has_zero_beta() {
        let inst = make_instance("product-torus").unwrap();
        let beta = build_beta(&inst.chart, &inst.measure).unwrap();
        assert!(beta.components.iter().all(|b| b.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn halfplane_beta_is_dx_over_y() {
        let (chart, alpha) = alpha_for("example2-halfplane", None, 1.0);
        for n in chart.interior_nodes() {
            let y = chart.node_point(n).y;
            let b = alpha.beta.components[n];
            // Central differences of log y are exact to O(h²/y³).
            assert!((b[0] - 1.0 / y).abs() < 0.01 / y.powi(3), "{b:?} at y = {y}");
            assert_eq!(b[1], 0.0);
            assert_eq!(b[2], 0.0);
        }
    }

    #[test]
    fn zero_eps_is_integrable_and_degenerate() {
        let (chart, alpha) = alpha_for("example3-pants", None, 0.0);
        let vol = contact_volume(&chart, &alpha).unwrap();
        assert!(vol.direct.values.iter().filter(|v| v.is_finite()).all(|v| v.abs() < 1e-12));
        assert!(matches!(reeb_field(&chart, &alpha), Err(Error::ReebDegenerate { .. })));
    }

    #[test]
    fn example1_reeb_points_along_y() {
        let (chart, alpha) = alpha_for("example1-quotient", None, 0.1);
        let reeb = reeb_field(&chart, &alpha).unwrap();
        for n in chart.interior_nodes() {
            let r = reeb.field.values[n];
            assert!(r[0].abs() < 1e-10 && r[2].abs() < 1e-10 && r[1] > 0.0, "{r:?}");
        }
        assert!(reeb.kernel_residual < 1e-8 && reeb.normalization_residual < 1e-8);
    }

    #[test]
    fn cramer_matches_curl_direction() {
        let (chart, alpha) = alpha_for("example2-halfplane", None, 0.05);
        let reeb = reeb_field(&chart, &alpha).unwrap();
        let pre = Prepared::new(&chart, &alpha);
        for n in chart.interior_nodes().into_iter().step_by(7) {
            let j = jet(&chart, &alpha, &pre, n).unwrap();
            let w = j.curl();
            let expect = w.map(|c| c / j.volume());
            for (a, b) in reeb.field.values[n].iter().zip(expect) {
                assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn halfplane_is_transverse_and_example1_is_not() {
        let (chart, alpha) = alpha_for("example2-halfplane", None, 0.01);
        assert_eq!(check_reeb_transverse(&chart, &alpha).unwrap().verdict, Verdict::Pass);
        let (chart, alpha) = alpha_for("example1-quotient", None, 0.01);
        let rep = check_reeb_transverse(&chart, &alpha).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(rep.min_contact_volume > 0.0);
    }

    #[test]
    fn eps_search_on_halfplane_and_example1() {
        let half = make_instance("example2-halfplane").unwrap();
        let s = auto_epsilon(&half.chart, &half.measure, None, 20).unwrap();
        assert_eq!(s.eps, Some(1.0));
        let ex1 = make_instance("example1-quotient").unwrap();
        let s = auto_epsilon(&ex1.chart, &ex1.measure, None, 6).unwrap();
        assert_eq!(s.eps, None);
        assert_eq!(s.trials.len(), 7);
    }

    #[test]
    fn example1_volume_matches_symbolic_oracle() {
        // d(2^{-x}) = -ln2 · 2^{-x} dx, so (2^{-x}dz + ε dy) ∧ d(...) = ε ln2 2^{-x}.
        let inst = make_instance("example1-quotient").unwrap();
        let chart = &inst.chart;
        let eps = 0.01;
        let dy = NodeOneForm { components: vec![[0.0, 1.0, 0.0]; chart.node_count()] };
        let vol = contact_volume(chart, &build_alpha(&inst.measure, &dy, eps).unwrap()).unwrap();
        let ln2 = std::f64::consts::LN_2;
        let h = chart.spacing()[0];
        for n in chart.interior_nodes() {
            let x = chart.node_point(n).x;
            let exact = eps * ln2 * 2f64.powf(-x);
            // Central difference of 2^{-x}: relative error (ln2·h)²/6.
            assert!((vol.direct.values[n] - exact).abs() < exact * (ln2 * h).powi(2) / 5.0, "x = {x}");
        }
        // The built β = -⋆ d ln f is ln2 · dy.
        let own = contact_volume(chart, &build_alpha(&inst.measure, &build_beta(chart, &inst.measure).unwrap(), eps).unwrap()).unwrap();
        for n in chart.interior_nodes() {
            let x = chart.node_point(n).x;
            let exact = eps * ln2 * ln2 * 2f64.powf(-x);
            assert!((own.direct.values[n] - exact).abs() < exact * 0.01);
        }
    }

    #[test]
    fn volume_is_linear_in_eps() {
        let inst = make_instance("example3-pants").unwrap();
        let beta = build_beta(&inst.chart, &inst.measure).unwrap();
        let eps = [1e-4, 1e-3, 1e-2];
        let max_vol: Vec<f64> = eps
            .iter()
            .map(|&e| contact_volume(&inst.chart, &build_alpha(&inst.measure, &beta, e).unwrap()).unwrap().direct.max().unwrap().1)
            .collect();
        let slope = crate::stats::ls_slope(&eps.map(f64::ln), &max_vol.iter().map(|v| v.ln()).collect::<Vec<_>>());
        assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn direct_and_expansion_agree() {
        for name in ["example2-halfplane", "example3-pants", "example1-quotient"] {
            for eps in [1e-3, 1e-2, 0.1] {
                let (chart, alpha) = alpha_for(name, None, eps);
                let vol = contact_volume(&chart, &alpha).unwrap();
                assert!(vol.consistent, "{name} ε = {eps}: {} > {}", vol.max_discrepancy, vol.tolerance);
            }
        }
    }

    #[test]
    fn cochain_beta_matches_node_beta() {
        let inst = make_instance("example2-halfplane").unwrap();
        let node = build_beta(&inst.chart, &inst.measure).unwrap();
        let from_cochain = beta_cochain(&inst.chart, &inst.measure).unwrap().one_form_node_components(&inst.chart).unwrap();
        for n in inst.chart.interior_nodes() {
            let y = inst.chart.node_point(n).y;
            assert!((node.components[n][0] - from_cochain[n][0]).abs() < 0.02 / y.powi(3));
            assert!((node.components[n][1] - from_cochain[n][1]).abs() < 1e-12);
        }
    }

    #[test]
    fn estimated_laplacian_drives_the_leaf_component() {
        let (chart, alpha) = alpha_for("example2-halfplane", None, 0.01);
        let exact: Vec<f64> = (0..chart.node_count()).map(|n| -1.0 / chart.node_point(n).y.powi(2)).collect();
        let stencil = leaf_dalpha(&chart, &alpha).unwrap();
        let overridden = alpha.clone().with_leaf_laplacian(exact.clone()).unwrap();
        let est = leaf_dalpha(&chart, &overridden).unwrap();
        for n in chart.interior_nodes() {
            assert!((est[n] + 0.01 * exact[n]).abs() < 1e-15);
            assert!((est[n] - stencil[n]).abs() < 0.1 * est[n]);
        }
        let rep = check_reeb_transverse(&chart, &overridden).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        // A positive Laplacian at one node flips dα(σ) there.
        let mut bad = exact;
        let n0 = chart.interior_nodes()[5];
        bad[n0] = 1.0;
        let flipped = alpha.with_leaf_laplacian(bad).unwrap();
        assert!(leaf_dalpha(&chart, &flipped).unwrap()[n0] < 0.0);
        assert_eq!(check_reeb_transverse(&chart, &flipped).unwrap().verdict, Verdict::Fail);
    }
}

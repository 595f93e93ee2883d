//! Logarithmic diffusion `D_{T,R,S}` of transverse measures and
//! confidence-qualified superharmonicity checks.
//!
//! At a node `x`, `log f'(x) = log f(x) + Ê[ log|h'_{γ|[0,T]}|_τ · φ(d_max) ]`
//! where `d_max` is the largest leafwise distance from `x` reached by the
//! path, i.e. the distance at the time minimizing the radial cutoff `φ`.
//! Path `k` uses the same seed at every node (common random numbers).
//!
//! `Δ log f'` is estimated in one of two ways. The stencil estimator applies
//! the discrete Laplacian to each path's exponents across nodes. The
//! transported estimator uses that on a flat chart the coupled paths from
//! nearby starts differ by an isometry, so `Δ` passes through the
//! expectation and lands on the endpoint:
//! `Δ log f'(x) = Ê[ φ · Δ log f(γ_T) + (1 − φ) · Δ log f(x) ]`.
//! Once paths separate at a cone point or a segment end the stencil
//! estimator's variance grows like `h⁻⁴`; the transported one does not.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brownian::{path_rng, WalkState};
use crate::error::{Error, Result};
use crate::expr::smoothstep5;
use crate::geometry::{laplace_node, Face, FaceRule, FoliatedChartModel};
use crate::measures::TransverseMeasureField;
use crate::rng::path_seed;
use crate::stats::mean_se;

/// Radial cutoff `φ(d) = 1 − smoothstep((d − R) / ((S − 1)R))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub r: f64,
    pub s: f64,
}

/// `max |smoothstep'| = 15/8`, reached at the midpoint.
const QUINTIC_MAX_SLOPE: f64 = 15.0 / 8.0;

impl CutoffSpec {
    pub fn new(r: f64, s: f64) -> Result<Self> {
        let c = Self { r, s };
        c.validate()?;
        Ok(c)
    }

    /// Requires `S ≥ 2`, `R ≥ S/(10(S−1))`, and that the profile's slope
    /// `15/(8(S−1)R)` stays within `10/S`.
    pub fn validate(&self) -> Result<()> {
        let (r, s) = (self.r, self.s);
        if !(s >= 2.0) || !(r > 0.0) || !r.is_finite() || !s.is_finite() {
            return Err(Error::InvalidParams(format!("cutoff needs S >= 2 and R > 0, got R = {r}, S = {s}")));
        }
        if r < s / (10.0 * (s - 1.0)) {
            return Err(Error::InvalidParams(format!("cutoff width: need R >= S/(10(S-1)) = {}, got {r}", s / (10.0 * (s - 1.0)))));
        }
        if self.max_slope() > 10.0 / s {
            return Err(Error::InvalidParams(format!(
                "cutoff slope {} exceeds 10/S = {}; widen (S-1)R",
                self.max_slope(),
                10.0 / s
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        (self.s - 1.0) * self.r
    }

    pub fn max_slope(&self) -> f64 {
        QUINTIC_MAX_SLOPE / self.width()
    }

    pub fn eval(&self, dist: f64) -> f64 {
        1.0 - smoothstep5((dist - self.r) / self.width())
    }
}

pub fn cutoff_eval(spec: &CutoffSpec, dist: f64) -> f64 {
    spec.eval(dist)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    pub t_end: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub r: f64,
    pub s: f64,
    pub seed: u64,
    /// Ignore `R`, `S` and use `φ ≡ 1`.
    #[serde(default)]
    pub no_cutoff: bool,
    /// Largest per-node standard error of the exponent that still certifies.
    #[serde(default = "default_tolerance")]
    pub se_tolerance: f64,
    #[serde(default)]
    pub estimator: LaplacianEstimator,
}

/// How `Δ log f'` and its standard error are estimated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianEstimator {
    /// Transported on flat charts where `log f` meets the Neumann condition on
    /// every reflecting face, stencil otherwise.
    #[default]
    Auto,
    Stencil,
    Transported,
}

fn default_tolerance() -> f64 {
    0.05
}

impl DiffusionParams {
    pub fn new(t_end: f64, dt: f64, n_paths: usize, r: f64, s: f64, seed: u64) -> Self {
        Self {
            t_end,
            dt,
            n_paths,
            r,
            s,
            seed,
            no_cutoff: false,
            se_tolerance: default_tolerance(),
            estimator: LaplacianEstimator::Auto,
        }
    }

    pub fn with_estimator(mut self, estimator: LaplacianEstimator) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn without_cutoff(mut self) -> Self {
        self.no_cutoff = true;
        self
    }

    pub fn cutoff(&self) -> Result<Option<CutoffSpec>> {
        if self.no_cutoff {
            Ok(None)
        } else {
            CutoffSpec::new(self.r, self.s).map(Some)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || self.n_paths < 2 {
            return Err(Error::InvalidParams(format!(
                "diffusion needs dt > 0, T >= 0, n_paths >= 2 (got {}, {}, {})",
                self.dt, self.t_end, self.n_paths
            )));
        }
        self.cutoff()?;
        Ok(())
    }

    fn resolved_estimator(&self, chart: &FoliatedChartModel, tau: &TransverseMeasureField) -> Result<LaplacianEstimator> {
        match self.estimator {
            LaplacianEstimator::Auto if chart.is_flat() && neumann_defect(chart, tau) <= NEUMANN_TOLERANCE => {
                Ok(LaplacianEstimator::Transported)
            }
            LaplacianEstimator::Auto => Ok(LaplacianEstimator::Stencil),
            LaplacianEstimator::Transported if !chart.is_flat() => {
                Err(Error::InvalidParams("the transported Laplacian needs a flat leaf metric".into()))
            }
            e => Ok(e),
        }
    }
}

/// Diffused measure with its uncertainty channel.
#[derive(Clone, Debug)]
pub struct DiffusionResult {
    pub measure: TransverseMeasureField,
    /// Per-node exponent `log f' − log f`.
    pub exponent: Vec<f64>,
    pub exponent_se: Vec<f64>,
    /// Discrete `Δ log f'` (NaN at non-interior nodes).
    pub laplacian: Vec<f64>,
    pub laplacian_se: Vec<f64>,
    /// Estimator behind `laplacian` (never `Auto`).
    pub estimator: LaplacianEstimator,
    pub max_exponent_se: f64,
    /// Whether every exponent SE is within the declared tolerance.
    pub certified: bool,
    pub truncated: usize,
}

#[derive(Clone, Copy)]
struct Sample {
    log_holonomy: f64,
    max_distance: f64,
    /// `Δ log f` at the endpoint.
    end_laplacian: f64,
    truncated: bool,
}

/// Per-path samples from every node.
fn node_samples(
    chart: &FoliatedChartModel,
    tau: &TransverseMeasureField,
    base_laplacian: &[f64],
    p: &DiffusionParams,
) -> Result<Vec<Vec<Sample>>> {
    let steps = (p.t_end / p.dt).round() as usize;
    (0..chart.node_count())
        .into_par_iter()
        .map(|n| {
            let x = chart.node_point(n);
            let l0 = tau.log_f_at(chart, x);
            (0..p.n_paths)
                .map(|k| {
                    let mut rng = path_rng(path_seed(p.seed, k as u64));
                    let mut w = WalkState::new(chart, x);
                    for _ in 0..steps {
                        w.step(chart, p.dt, &mut rng)?;
                    }
                    if w.truncated {
                        return Ok(Sample { log_holonomy: 0.0, max_distance: w.max_distance, end_laplacian: 0.0, truncated: true });
                    }
                    Ok(Sample {
                        log_holonomy: tau.log_f_at(chart, w.point) - l0 + w.log_scale,
                        max_distance: w.max_distance,
                        end_laplacian: chart.interpolate(base_laplacian, w.point, false),
                        truncated: false,
                    })
                })
                .collect()
        })
        .collect()
}

const NEUMANN_TOLERANCE: f64 = 1e-4;

/// Largest `|∂_n log f|` over nodes on non-glued faces (cone points
/// skipped). Passing `Δ` through the expectation needs this to vanish, since
/// reflected paths otherwise pick up a boundary term.
pub fn neumann_defect(chart: &FoliatedChartModel, tau: &TransverseMeasureField) -> f64 {
    let desc = chart.description();
    let [nx, ny, nz] = desc.dims;
    let mut worst: f64 = 0.0;
    for face in Face::ALL {
        let axis = face.axis();
        if desc.periodic[axis] {
            continue;
        }
        let h = desc.spacing[axis];
        let (n_normal, n_tangent) = if axis == 0 { (nx, ny) } else { (ny, nx) };
        let segs = desc.faces.get(face);
        for k in 0..nz {
            for t_idx in 0..n_tangent {
                let t = desc.origin[1 - axis] + t_idx as f64 * desc.spacing[1 - axis];
                let glued = segs.iter().any(|sg| {
                    matches!(sg.rule, FaceRule::Glue { .. }) && t >= sg.start - 1e-9 && t <= sg.end + 1e-9
                });
                if glued {
                    continue;
                }
                // Index `m` steps inward from the face.
                let node = |m: usize| {
                    let a = if face.is_high() { n_normal - 1 - m } else { m };
                    if axis == 0 { chart.node_index(a, t_idx, k) } else { chart.node_index(t_idx, a, k) }
                };
                if chart.is_cone_point(node(0)) || n_normal < 3 {
                    continue;
                }
                let inward = if face.is_high() { -1.0 } else { 1.0 };
                let d = match tau.expression() {
                    Some(e) => {
                        let p = chart.node_point(node(0));
                        let delta = 1e-6;
                        let at = |s: f64| {
                            let mut q = [p.x, p.y];
                            q[axis] += s;
                            e.eval(q[0], q[1], p.z).ln()
                        };
                        inward * (at(delta) - at(-delta)) / (2.0 * delta)
                    }
                    None => {
                        let v = tau.log_values();
                        (-3.0 * v[node(0)] + 4.0 * v[node(1)] - v[node(2)]) / (2.0 * h)
                    }
                };
                worst = worst.max(d.abs());
            }
        }
    }
    worst
}

/// Nodal `Δ log f` of the input, defined at every node the stencil reaches.
fn base_laplacian(chart: &FoliatedChartModel, tau: &TransverseMeasureField) -> Vec<f64> {
    (0..chart.node_count()).map(|n| laplace_node(chart, tau.log_values(), true, n).unwrap_or(f64::NAN)).collect()
}

/// `D_{T,R,S}(τ)`. Truncated paths contribute zero to the exponent and are
/// counted.
pub fn log_diffuse(chart: &FoliatedChartModel, tau: &TransverseMeasureField, p: &DiffusionParams) -> Result<DiffusionResult> {
    p.validate()?;
    let estimator = p.resolved_estimator(chart, tau)?;
    let cutoff = p.cutoff()?;
    let base = base_laplacian(chart, tau);
    let samples = node_samples(chart, tau, &base, p)?;
    let weight = |d: f64| cutoff.map_or(1.0, |c| c.eval(d));
    let per_path: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| s.iter().map(|x| if x.truncated { 0.0 } else { x.log_holonomy * weight(x.max_distance) }).collect())
        .collect();
    let truncated = samples.iter().flatten().filter(|s| s.truncated).count();
    let mut out = finish(chart, tau, &per_path, p.se_tolerance, truncated)?;
    let interior = chart.interior_nodes();
    let (laplacian, laplacian_se) = match estimator {
        LaplacianEstimator::Transported => transported_laplacian(chart, &base, &samples, &interior, &weight),
        _ => stencil_laplacian(chart, tau, &per_path, &interior)?,
    };
    out.laplacian = laplacian;
    out.laplacian_se = laplacian_se;
    out.estimator = estimator;
    Ok(out)
}

fn transported_laplacian(
    chart: &FoliatedChartModel,
    base: &[f64],
    samples: &[Vec<Sample>],
    interior: &[usize],
    weight: &dyn Fn(f64) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut laplacian = vec![f64::NAN; chart.node_count()];
    let mut laplacian_se = vec![f64::NAN; chart.node_count()];
    for &n in interior {
        let vals: Vec<f64> = samples[n]
            .iter()
            .map(|x| {
                let w = if x.truncated { 0.0 } else { weight(x.max_distance) };
                let end = if w > 0.0 { x.end_laplacian } else { 0.0 };
                w * end + (1.0 - w) * base[n]
            })
            .collect();
        let (m, se) = mean_se(&vals);
        laplacian[n] = m;
        laplacian_se[n] = se;
    }
    (laplacian, laplacian_se)
}

fn stencil_laplacian(
    chart: &FoliatedChartModel,
    tau: &TransverseMeasureField,
    per_path: &[Vec<f64>],
    interior: &[usize],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n_nodes = chart.node_count();
    let n_paths = per_path.first().map_or(0, |v| v.len());
    let mut laplacian = vec![f64::NAN; n_nodes];
    let mut laplacian_se = vec![f64::NAN; n_nodes];
    // Δ is linear, so the mean of per-path Laplacians is the Laplacian of the mean.
    let per_path_lap: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let field: Vec<f64> = per_path.iter().map(|v| v[k]).collect();
            interior.iter().map(|&n| laplace_node(chart, &field, false, n)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    for (i, &n) in interior.iter().enumerate() {
        let vals: Vec<f64> = per_path_lap.iter().map(|v| v[i]).collect();
        let (m, se) = if n_paths > 0 { mean_se(&vals) } else { (0.0, 0.0) };
        laplacian[n] = laplace_node(chart, tau.log_values(), true, n)? + m;
        laplacian_se[n] = se;
    }
    Ok((laplacian, laplacian_se))
}

fn finish(
    chart: &FoliatedChartModel,
    tau: &TransverseMeasureField,
    per_path: &[Vec<f64>],
    tolerance: f64,
    truncated: usize,
) -> Result<DiffusionResult> {
    let n_nodes = chart.node_count();
    let (exponent, exponent_se): (Vec<f64>, Vec<f64>) = per_path.iter().map(|v| mean_se(v)).unzip();
    let log_f: Vec<f64> = tau.log_values().iter().zip(&exponent).map(|(a, b)| a + b).collect();
    let laplacian = vec![f64::NAN; n_nodes];
    let laplacian_se = vec![f64::NAN; n_nodes];
    let max_exponent_se = exponent_se.iter().cloned().fold(0.0, f64::max);
    let measure = TransverseMeasureField::from_log_values(chart, log_f, tau.anchor(), "C^inf,1 (diffused)")?;
    Ok(DiffusionResult {
        measure,
        exponent,
        exponent_se,
        laplacian,
        laplacian_se,
        estimator: LaplacianEstimator::Stencil,
        max_exponent_se,
        certified: max_exponent_se <= tolerance,
        truncated,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }

    /// Worst of two verdicts (`Fail` over `Inconclusive` over `Pass`).
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperharmonicReport {
    pub verdict: Verdict,
    pub kappa0: f64,
    pub worst_node: usize,
    /// `Δ log f'` and its SE at the worst node (largest `Δ + 3 SE`).
    pub worst_laplacian: f64,
    pub worst_se: f64,
    pub n_interior: usize,
    pub n_pass: usize,
    pub n_fail: usize,
    pub n_inconclusive: usize,
}

/// Superharmonicity verdict from Laplacian values and their SEs:
/// PASS iff `Δ + 3 SE < −κ₀` at every interior node, FAIL if some node has
/// `Δ − 3 SE ≥ −κ₀`, INCONCLUSIVE otherwise.
pub fn check_superharmonic_values(chart: &FoliatedChartModel, laplacian: &[f64], se: &[f64], kappa0: f64) -> SuperharmonicReport {
    let interior = chart.interior_nodes();
    let mut rep = SuperharmonicReport {
        verdict: Verdict::Pass,
        kappa0,
        worst_node: interior.first().copied().unwrap_or(0),
        worst_laplacian: f64::NAN,
        worst_se: f64::NAN,
        n_interior: interior.len(),
        n_pass: 0,
        n_fail: 0,
        n_inconclusive: 0,
    };
    let mut worst = f64::NEG_INFINITY;
    for &n in &interior {
        let (l, e) = (laplacian[n], se[n]);
        let upper = l + 3.0 * e;
        if upper > worst || upper.is_nan() {
            worst = if upper.is_nan() { f64::INFINITY } else { upper };
            rep.worst_node = n;
            rep.worst_laplacian = l;
            rep.worst_se = e;
        }
        if upper < -kappa0 {
            rep.n_pass += 1;
        } else if l - 3.0 * e >= -kappa0 {
            rep.n_fail += 1;
        } else {
            rep.n_inconclusive += 1;
        }
    }
    rep.verdict = if rep.n_fail > 0 {
        Verdict::Fail
    } else if rep.n_inconclusive > 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    rep
}

/// Verdict for a diffused measure with its uncertainty channel.
pub fn check_superharmonic(chart: &FoliatedChartModel, result: &DiffusionResult, kappa0: f64) -> SuperharmonicReport {
    check_superharmonic_values(chart, &result.laplacian, &result.laplacian_se, kappa0)
}

/// Verdict for a deterministic measure (zero uncertainty).
pub fn check_superharmonic_exact(chart: &FoliatedChartModel, tau: &TransverseMeasureField, kappa0: f64) -> Result<SuperharmonicReport> {
    let lap: Vec<f64> = (0..chart.node_count())
        .map(|n| if chart.is_interior(n) { laplace_node(chart, tau.log_values(), true, n) } else { Ok(f64::NAN) })
        .collect::<Result<_>>()?;
    let se = vec![0.0; lap.len()];
    Ok(check_superharmonic_values(chart, &lap, &se, kappa0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub r: f64,
    pub exponent: f64,
    pub exponent_se: f64,
    /// Mean of `exponent(R) − exponent(R_max)` over common paths.
    pub discrepancy: f64,
    pub discrepancy_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub node: usize,
    pub s: f64,
    pub rows: Vec<TailRow>,
    /// Whether `|discrepancy|` is non-increasing in `R` up to 3-SE envelopes.
    pub monotone: bool,
}

/// Stability of the diffusion exponent at `node` as `R` grows, on common
/// paths for every radius.
pub fn tail_decay_check(
    chart: &FoliatedChartModel,
    tau: &TransverseMeasureField,
    node: usize,
    t_end: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
    radii: &[f64],
    s: f64,
) -> Result<TailReport> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("radii must be non-empty and increasing".into()));
    }
    let specs: Vec<CutoffSpec> = radii.iter().map(|&r| CutoffSpec::new(r, s)).collect::<Result<_>>()?;
    let steps = (t_end / dt).round() as usize;
    let x = chart.node_point(node);
    let l0 = tau.log_f_at(chart, x);
    let samples: Vec<(f64, f64)> = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = path_rng(path_seed(seed, k as u64));
            let mut w = WalkState::new(chart, x);
            for _ in 0..steps {
                w.step(chart, dt, &mut rng)?;
            }
            let l = if w.truncated { 0.0 } else { tau.log_f_at(chart, w.point) - l0 + w.log_scale };
            Ok((l, w.max_distance))
        })
        .collect::<Result<_>>()?;
    let last = specs[specs.len() - 1];
    let rows: Vec<TailRow> = specs
        .iter()
        .map(|c| {
            let e: Vec<f64> = samples.iter().map(|&(l, d)| l * c.eval(d)).collect();
            let diff: Vec<f64> = samples.iter().map(|&(l, d)| l * (c.eval(d) - last.eval(d))).collect();
            let (exponent, exponent_se) = mean_se(&e);
            let (discrepancy, discrepancy_se) = mean_se(&diff);
            TailRow { r: c.r, exponent, exponent_se, discrepancy, discrepancy_se }
        })
        .collect();
    let monotone = rows
        .windows(2)
        .all(|w| w[1].discrepancy.abs() <= w[0].discrepancy.abs() + 3.0 * (w[0].discrepancy_se + w[1].discrepancy_se));
    Ok(TailReport { node, s, rows, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::make_instance;

    #[test]
    fn cutoff_endpoints_and_slope() {
        let c = CutoffSpec::new(1.0, 4.0).unwrap();
        assert_eq!(c.eval(0.0), 1.0);
        assert_eq!(c.eval(0.999), 1.0);
        assert_eq!(c.eval(8.0), 0.0);
        assert_eq!(c.eval(4.0001), 0.0);
        // Derivative sweep oracle.
        let h = 1e-5;
        let mut max_d: f64 = 0.0;
        let mut prev = c.eval(0.0);
        for i in 1..=800_000 {
            let v = c.eval(i as f64 * h);
            assert!(v <= prev);
            max_d = max_d.max((prev - v) / h);
            prev = v;
        }
        assert!(max_d <= 10.0 / 4.0);
        assert!((max_d - 15.0 / 24.0).abs() < 1e-3);
    }

    #[test]
    fn narrow_cutoff_rejected() {
        assert!(CutoffSpec::new(0.05, 4.0).is_err());
        assert!(CutoffSpec::new(1.0, 1.5).is_err());
    }

    #[test]
    fn invariant_measure_is_fixed() {
        let inst = make_instance("product-torus").unwrap();
        let p = DiffusionParams::new(0.5, 1e-2, 16, 1.0, 2.0, 9);
        let r = log_diffuse(&inst.chart, &inst.measure, &p).unwrap();
        assert_eq!(r.measure.log_values(), inst.measure.log_values());
        assert!(r.certified);
    }

    #[test]
    fn zero_time_is_identity() {
        let inst = make_instance("example2-halfplane").unwrap();
        let p = DiffusionParams::new(0.0, 1e-2, 4, 1.0, 2.0, 9);
        let r = log_diffuse(&inst.chart, &inst.measure, &p).unwrap();
        assert_eq!(r.measure.log_values(), inst.measure.log_values());
    }

    #[test]
    fn constant_scaling_commutes() {
        let inst = make_instance("example2-halfplane").unwrap();
        let p = DiffusionParams::new(0.05, 1e-2, 8, 1.0, 2.0, 4);
        let a = log_diffuse(&inst.chart, &inst.measure.scaled(0.0), &p).unwrap();
        let scaled = inst.measure.scaled(1.5);
        let b = log_diffuse(&inst.chart, &scaled, &p).unwrap();
        for (x, y) in a.measure.log_values().iter().zip(b.measure.log_values()) {
            assert!((y - x - 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn halfplane_is_superharmonic_and_constant_is_not() {
        let inst = make_instance("example2-halfplane").unwrap();
        let rep = check_superharmonic_exact(&inst.chart, &inst.measure, 1.0 / (2.0 * 2.5f64.powi(2))).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        let torus = make_instance("product-torus").unwrap();
        let rep = check_superharmonic_exact(&torus.chart, &torus.measure, 1e-3).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
    }

    #[test]
    fn estimator_choice_follows_neumann_defect() {
        let pants = make_instance("example3-pants").unwrap();
        assert!(neumann_defect(&pants.chart, &pants.measure) < NEUMANN_TOLERANCE);
        let half = make_instance("example2-halfplane").unwrap();
        assert!((neumann_defect(&half.chart, &half.measure) - 2.0).abs() < 1e-6);
        let p = DiffusionParams::new(0.01, 1e-2, 4, 1.0, 2.0, 1);
        assert_eq!(log_diffuse(&half.chart, &half.measure, &p).unwrap().estimator, LaplacianEstimator::Stencil);
        assert_eq!(log_diffuse(&pants.chart, &pants.measure, &p).unwrap().estimator, LaplacianEstimator::Transported);
    }

    #[test]
    fn both_estimators_match_the_heat_kernel() {
        // log f = a cos(2πx) on the torus diffuses to a e^{-2π²T} cos(2πx).
        let torus = make_instance("product-torus").unwrap();
        let tau = TransverseMeasureField::from_expression(&torus.chart, "exp(0.3*cos(2*pi*x))", 0, "C^inf").unwrap();
        let t = 0.05;
        let base = DiffusionParams::new(t, 1e-3, 400, 1.0, 2.0, 3).without_cutoff();
        let st = log_diffuse(&torus.chart, &tau, &base.with_estimator(LaplacianEstimator::Stencil)).unwrap();
        let tr = log_diffuse(&torus.chart, &tau, &base.with_estimator(LaplacianEstimator::Transported)).unwrap();
        let k = 2.0 * std::f64::consts::PI;
        for n in torus.chart.interior_nodes() {
            let x = torus.chart.node_point(n).x;
            let exact = -k * k * 0.3 * (-0.5 * k * k * t).exp() * (k * x).cos();
            // The h = 1/8 stencil sees (2 - 2cos kh)/h² instead of k².
            let tol = 0.06 * 0.3 * k * k;
            assert!((st.laplacian[n] - exact).abs() < tol + 3.0 * st.laplacian_se[n], "stencil {n}");
            assert!((tr.laplacian[n] - exact).abs() < tol + 3.0 * tr.laplacian_se[n], "transported {n}");
        }
    }

    #[test]
    fn straddling_nodes_are_inconclusive() {
        let inst = make_instance("product-torus").unwrap();
        let n = inst.chart.node_count();
        let lap = vec![-1.0; n];
        let mut se = vec![0.01; n];
        se[5] = 0.5;
        let rep = check_superharmonic_values(&inst.chart, &lap, &se, 0.5);
        assert_eq!(rep.verdict, Verdict::Inconclusive);
        assert_eq!(rep.worst_node, 5);
    }
}

//! Leafwise Brownian motion and Monte Carlo estimators.
//!
//! The generator is `½Δ` (standard Brownian motion). Euler–Maruyama steps
//! in chart coordinates have covariance `dt·g⁻¹` and drift
//! `-(dt/2)·g^{ij}Γ^k_{ij}`; each step is split into straight pieces no
//! longer than the grid spacing so that every face crossing is seen.
//!
//! Path `k` of an estimator with master seed `s` is exactly
//! `sample_path(.., path_seed(s, k))`, and all reductions run in path order,
//! so results do not depend on the number of worker threads.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DiscreteForm, FoliatedChartModel, LeafPoint};
use crate::measures::TransverseMeasureField;
use crate::rng::{path_seed, stream, Purpose};
use crate::stats::{ls_slope, mean_se, pairwise_sum};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub t_end: f64,
    pub dt: f64,
}

impl PathConfig {
    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        let c = Self { t_end, dt };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParams(format!("need dt > 0 and T >= 0, got dt = {}, T = {}", self.dt, self.t_end)));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// A sampled leafwise trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    pub times: Vec<f64>,
    pub points: Vec<LeafPoint>,
    /// Cumulative `Σ ln(z_scale)` over gluings crossed up to each time.
    pub log_scale: Vec<f64>,
    /// Running maximum of the leafwise distance from the start.
    pub max_distance: Vec<f64>,
    pub crossings: u32,
    pub truncated: bool,
    pub seed: u64,
}

impl BrownianPath {
    /// Deterministic path through `n` equal straight steps of `disp / n`.
    pub fn straight(chart: &FoliatedChartModel, x0: LeafPoint, disp: [f64; 2], n: usize) -> Result<Self> {
        let n = n.max(1);
        let mut w = WalkState::new(chart, x0);
        let mut path = Self::start(x0, 0);
        for s in 1..=n {
            w.apply(chart, [disp[0] / n as f64, disp[1] / n as f64])?;
            path.push(s as f64 / n as f64, &w);
        }
        path.crossings = w.crossings;
        path.truncated = w.truncated;
        Ok(path)
    }

    fn start(x0: LeafPoint, seed: u64) -> Self {
        Self {
            times: vec![0.0],
            points: vec![x0],
            log_scale: vec![0.0],
            max_distance: vec![0.0],
            crossings: 0,
            truncated: false,
            seed,
        }
    }

    fn push(&mut self, t: f64, w: &WalkState) {
        self.times.push(t);
        self.points.push(w.point);
        self.log_scale.push(w.log_scale);
        self.max_distance.push(w.max_distance);
    }

    /// `self` followed by `other`, where `other` starts at `self`'s end.
    pub fn concat(&self, other: &BrownianPath) -> BrownianPath {
        let mut out = self.clone();
        let t0 = *self.times.last().unwrap();
        let l0 = *self.log_scale.last().unwrap();
        let d0 = *self.max_distance.last().unwrap();
        for k in 1..other.times.len() {
            out.times.push(t0 + other.times[k]);
            out.points.push(other.points[k]);
            out.log_scale.push(l0 + other.log_scale[k]);
            out.max_distance.push(d0.max(other.max_distance[k]));
        }
        out.crossings += other.crossings;
        out.truncated |= other.truncated;
        out
    }
}

/// Mutable state of a walk.
#[derive(Clone, Copy, Debug)]
pub struct WalkState {
    pub point: LeafPoint,
    pub log_scale: f64,
    pub crossings: u32,
    pub truncated: bool,
    pub lift: [f64; 2],
    pub max_distance: f64,
    start_metric: [f64; 3],
}

impl WalkState {
    pub fn new(chart: &FoliatedChartModel, x0: LeafPoint) -> Self {
        Self {
            point: x0,
            log_scale: 0.0,
            crossings: 0,
            truncated: false,
            lift: [0.0; 2],
            max_distance: 0.0,
            start_metric: chart.metric_at(x0),
        }
    }

    fn apply(&mut self, chart: &FoliatedChartModel, disp: [f64; 2]) -> Result<()> {
        let adv = chart.advance(self.point, disp)?;
        self.point = adv.point;
        self.log_scale += adv.log_scale;
        self.crossings += adv.crossings;
        self.lift[0] += adv.moved[0];
        self.lift[1] += adv.moved[1];
        let g = self.start_metric;
        let (a, b) = (self.lift[0], self.lift[1]);
        let d = (g[0] * a * a + 2.0 * g[1] * a * b + g[2] * b * b).max(0.0).sqrt();
        self.max_distance = self.max_distance.max(d);
        if adv.absorbed {
            self.truncated = true;
        }
        Ok(())
    }

    /// One Euler–Maruyama step.
    pub fn step(&mut self, chart: &FoliatedChartModel, dt: f64, rng: &mut ChaCha8Rng) -> Result<()> {
        let xi1: f64 = rng.sample(StandardNormal);
        let xi2: f64 = rng.sample(StandardNormal);
        if self.truncated {
            return Ok(());
        }
        let sq = dt.sqrt();
        let disp = if chart.is_flat() {
            [sq * xi1, sq * xi2]
        } else {
            let l = chart.inverse_metric_factor(self.point);
            let b = chart.drift_at(self.point);
            [b[0] * dt + sq * l[0] * xi1, b[1] * dt + sq * (l[1] * xi1 + l[2] * xi2)]
        };
        self.apply(chart, disp)
    }
}

/// Generator for the path with the given per-path seed.
pub fn path_rng(seed: u64) -> ChaCha8Rng {
    stream(seed, Purpose::Path, 0)
}

/// One leafwise Brownian path from `x0`. Identical inputs give identical
/// paths.
pub fn sample_path(chart: &FoliatedChartModel, x0: LeafPoint, cfg: PathConfig, seed: u64) -> Result<BrownianPath> {
    cfg.validate()?;
    let mut rng = path_rng(seed);
    let mut w = WalkState::new(chart, x0);
    let mut path = BrownianPath::start(x0, seed);
    let n = cfg.steps();
    path.times.reserve(n);
    for s in 1..=n {
        w.step(chart, cfg.dt, &mut rng)?;
        path.push(s as f64 * cfg.dt, &w);
    }
    path.crossings = w.crossings;
    path.truncated = w.truncated;
    Ok(path)
}

/// Per-time statistics of a Monte Carlo estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeBucket {
    pub t: f64,
    pub mean: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub estimate: f64,
    pub standard_error: f64,
    /// Paths that contributed (truncated paths excluded).
    pub n_paths: usize,
    pub seed: u64,
    pub buckets: Vec<TimeBucket>,
    pub truncated: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl EstimatorReport {
    fn from_samples(samples: &[f64], seed: u64, truncated: usize, buckets: Vec<TimeBucket>) -> Self {
        let (estimate, standard_error) = mean_se(samples);
        let total = samples.len() + truncated;
        let warning = (truncated * 100 > total)
            .then(|| format!("{truncated} of {total} paths truncated (more than 1%)"));
        Self { estimate, standard_error, n_paths: samples.len(), seed, buckets, truncated, warning }
    }

    pub fn within(&self, target: f64, n_se: f64) -> bool {
        (self.estimate - target).abs() <= n_se * self.standard_error
    }
}

/// Monte Carlo parameters shared by the estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub t_end: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Number of recording times in `(0, T]` for per-time statistics.
    #[serde(default = "default_buckets")]
    pub buckets: usize,
}

fn default_buckets() -> usize {
    20
}

impl SimParams {
    pub fn new(t_end: f64, dt: f64, n_paths: usize, seed: u64) -> Self {
        Self { t_end, dt, n_paths, seed, buckets: default_buckets() }
    }

    fn path_config(&self) -> Result<PathConfig> {
        if self.n_paths == 0 {
            return Err(Error::InvalidParams("n_paths must be positive".into()));
        }
        PathConfig::new(self.t_end, self.dt)
    }

    /// Step indices at which buckets are recorded.
    fn bucket_steps(&self, steps: usize) -> Vec<usize> {
        let b = self.buckets.clamp(1, steps.max(1));
        (1..=b).map(|i| (i * steps).div_ceil(b)).collect()
    }
}

/// Runs `f` on every path index in parallel and returns results in index order.
fn par_paths<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(f).collect()
}

/// Uniform random start point over the chart (leaf and transverse).
pub fn random_start(chart: &FoliatedChartModel, rng: &mut ChaCha8Rng) -> LeafPoint {
    let (x0, x1) = chart.bounds(0);
    let (y0, y1) = chart.bounds(1);
    let z0 = chart.description().origin[2];
    let x = x0 + (x1 - x0) * rng.gen::<f64>();
    let y = y0 + (y1 - y0) * rng.gen::<f64>();
    let z = z0 + chart.z_period() * rng.gen::<f64>();
    LeafPoint::new(x, y, z)
}

/// `D^t(g)(x) = E[g(γ(t))]` over Brownian paths from `x`.
pub fn diffuse(
    chart: &FoliatedChartModel,
    g: &(dyn Fn(LeafPoint) -> f64 + Sync),
    t: f64,
    x: LeafPoint,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<EstimatorReport> {
    let cfg = PathConfig::new(t, dt)?;
    let results = par_paths(n_paths, |k| {
        let mut rng = path_rng(path_seed(seed, k as u64));
        let mut w = WalkState::new(chart, x);
        for _ in 0..cfg.steps() {
            w.step(chart, dt, &mut rng)?;
        }
        Ok((!w.truncated).then(|| g(w.point)))
    })?;
    let truncated = results.iter().filter(|r| r.is_none()).count();
    let samples: Vec<f64> = results.into_iter().flatten().collect();
    Ok(EstimatorReport::from_samples(&samples, seed, truncated, vec![]))
}

/// Per-path log-holonomy `log|h'_{γ|[0,t]}|_τ` at the bucket times.
fn holonomy_series(
    chart: &FoliatedChartModel,
    tau: &TransverseMeasureField,
    cfg: PathConfig,
    bucket_steps: &[usize],
    seed: u64,
    mut on_step: impl FnMut(&WalkState),
) -> Result<Option<Vec<f64>>> {
    let mut rng = path_rng(seed);
    let x0 = random_start(chart, &mut rng);
    let l0 = tau.log_f_at(chart, x0);
    let mut w = WalkState::new(chart, x0);
    let mut out = Vec::with_capacity(bucket_steps.len());
    let mut next = 0;
    for s in 1..=cfg.steps() {
        w.step(chart, cfg.dt, &mut rng)?;
        if w.truncated {
            return Ok(None);
        }
        on_step(&w);
        if next < bucket_steps.len() && bucket_steps[next] == s {
            out.push(tau.log_f_at(chart, w.point) - l0 + w.log_scale);
            next += 1;
        }
    }
    Ok(Some(out))
}

fn buckets_from(series: &[Vec<f64>], times: &[f64]) -> Vec<TimeBucket> {
    (0..times.len())
        .map(|b| {
            let col: Vec<f64> = series.iter().map(|s| s[b]).collect();
            let (mean, se) = mean_se(&col);
            TimeBucket { t: times[b], mean, se }
        })
        .collect()
}

/// Contraction exponent `κ̂`: least-squares slope of `t ↦ log|h'_{γ|[0,t]}|_τ`,
/// averaged over paths started uniformly on the chart. Buckets hold the
/// per-time means.
pub fn estimate_contraction_rate(chart: &FoliatedChartModel, tau: &TransverseMeasureField, p: &SimParams) -> Result<EstimatorReport> {
    let cfg = p.path_config()?;
    let steps = p.bucket_steps(cfg.steps());
    let times: Vec<f64> = steps.iter().map(|&s| s as f64 * cfg.dt).collect();
    let series = par_paths(p.n_paths, |k| holonomy_series(chart, tau, cfg, &steps, path_seed(p.seed, k as u64), |_| {}))?;
    let truncated = series.iter().filter(|s| s.is_none()).count();
    let series: Vec<Vec<f64>> = series.into_iter().flatten().collect();
    let slopes: Vec<f64> = series.iter().map(|s| fit_through_origin(&times, s)).collect();
    Ok(EstimatorReport::from_samples(&slopes, p.seed, truncated, buckets_from(&series, &times)))
}

/// Slope of the least-squares line through `(0, 0)` and the samples.
fn fit_through_origin(ts: &[f64], ys: &[f64]) -> f64 {
    let mut t = Vec::with_capacity(ts.len() + 1);
    let mut y = Vec::with_capacity(ts.len() + 1);
    t.push(0.0);
    y.push(0.0);
    t.extend_from_slice(ts);
    y.extend_from_slice(ys);
    ls_slope(&t, &y)
}

/// Drift-integral estimate of `∫ Δ log f dμ`, with the Itô prediction of the
/// contraction slope alongside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// Time average of `Δ log f` along paths: the integral against the
    /// occupation measure.
    pub integral: EstimatorReport,
    /// Least-squares slope of `t ↦ ½∫₀ᵗ Δ log f(γ_s) ds` on the same paths
    /// and bucket times as [`estimate_contraction_rate`]; by Itô's formula
    /// its mean equals the mean contraction slope.
    pub ito_slope: EstimatorReport,
    /// `∫ Δ log f dμ` recomputed from the node occupation histogram.
    pub histogram_integral: f64,
}

/// Time average of `Δ log f_τ` along long paths. The Laplacian comes from
/// the grid stencil and is interpolated along the path.
pub fn estimate_drift_integral(chart: &FoliatedChartModel, tau: &TransverseMeasureField, p: &SimParams) -> Result<DriftReport> {
    let cfg = p.path_config()?;
    let lap = crate::geometry::laplace_beltrami(&tau.log_form(chart), chart)?;
    let lap = lap.values;
    let steps = p.bucket_steps(cfg.steps());
    let times: Vec<f64> = steps.iter().map(|&s| s as f64 * cfg.dt).collect();
    let n_nodes = chart.node_count();
    let per_path = par_paths(p.n_paths, |k| {
        let mut acc = 0.0;
        let mut count = 0usize;
        let mut cum = Vec::with_capacity(steps.len());
        let mut hist = vec![0u32; n_nodes];
        let mut next = 0;
        let res = holonomy_series(chart, tau, cfg, &steps, path_seed(p.seed, k as u64), |w| {
            let v = chart.interpolate(&lap, w.point, false);
            acc += v;
            count += 1;
            hist[nearest_node(chart, w.point)] += 1;
            if next < steps.len() && steps[next] == count {
                cum.push(0.5 * acc * cfg.dt);
                next += 1;
            }
        })?;
        Ok(res.map(|_| (acc / count.max(1) as f64, cum, hist)))
    })?;
    let truncated = per_path.iter().filter(|r| r.is_none()).count();
    let ok: Vec<_> = per_path.into_iter().flatten().collect();
    let averages: Vec<f64> = ok.iter().map(|r| r.0).collect();
    let slopes: Vec<f64> = ok.iter().map(|r| fit_through_origin(&times, &r.1)).collect();
    let series: Vec<Vec<f64>> = ok.iter().map(|r| r.1.clone()).collect();
    let mut total = vec![0u64; n_nodes];
    for r in &ok {
        for (t, h) in total.iter_mut().zip(&r.2) {
            *t += *h as u64;
        }
    }
    let mass: u64 = total.iter().sum();
    let weighted: Vec<f64> = total.iter().zip(&lap).map(|(&c, l)| c as f64 * l).collect();
    let histogram_integral = if mass > 0 { pairwise_sum(&weighted) / mass as f64 } else { f64::NAN };
    Ok(DriftReport {
        integral: EstimatorReport::from_samples(&averages, p.seed, truncated, vec![]),
        ito_slope: EstimatorReport::from_samples(&slopes, p.seed, truncated, buckets_from(&series, &times)),
        histogram_integral,
    })
}

pub fn nearest_node(chart: &FoliatedChartModel, p: LeafPoint) -> usize {
    let [nx, ny, nz] = chart.dims();
    let [x0, y0, z0] = chart.description().origin;
    let [hx, hy, hz] = chart.spacing();
    let idx = |v: f64, o: f64, h: f64, n: usize, periodic: bool| {
        let r = ((v - o) / h).round() as i64;
        if periodic {
            r.rem_euclid(n as i64) as usize
        } else {
            r.clamp(0, n as i64 - 1) as usize
        }
    };
    let periodic = chart.description().periodic;
    let i = idx(p.x, x0, hx, nx, periodic[0]);
    let j = idx(p.y, y0, hy, ny, periodic[1]);
    let k = idx(chart.wrap_z(p.z), z0, hz, nz, true);
    chart.node_index(i, j, k)
}

/// Empirical occupation measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    /// `[leaf x bins, leaf y bins, transverse bins]`.
    pub bins: [usize; 3],
    /// Occupation fractions over leaf bins (row-major, `x` fastest).
    pub leaf: Vec<f64>,
    pub leaf_se: Vec<f64>,
    pub transverse: Vec<f64>,
    pub transverse_se: Vec<f64>,
    /// Counts of path endpoints per leaf bin (one independent sample per path).
    pub endpoint_counts: Vec<u64>,
    pub n_paths: usize,
    pub truncated: usize,
    pub seed: u64,
}

fn bin_of(v: f64, lo: f64, hi: f64, n: usize) -> usize {
    (((v - lo) / (hi - lo) * n as f64).floor().max(0.0) as usize).min(n - 1)
}

/// Occupation histograms of paths run for `T` after a burn-in of `burn_in`.
pub fn estimate_stationary(chart: &FoliatedChartModel, p: &SimParams, burn_in: f64, bins: [usize; 3]) -> Result<StationaryReport> {
    let cfg = p.path_config()?;
    if bins.contains(&0) {
        return Err(Error::InvalidParams("bin counts must be positive".into()));
    }
    let burn = (burn_in / cfg.dt).round() as usize;
    let (x0, x1) = chart.bounds(0);
    let (y0, y1) = chart.bounds(1);
    let z0 = chart.description().origin[2];
    let z1 = z0 + chart.z_period();
    let nleaf = bins[0] * bins[1];
    let per_path = par_paths(p.n_paths, |k| {
        let mut rng = path_rng(path_seed(p.seed, k as u64));
        let start = random_start(chart, &mut rng);
        let mut w = WalkState::new(chart, start);
        let mut leaf = vec![0u32; nleaf];
        let mut trans = vec![0u32; bins[2]];
        let mut count = 0u32;
        for s in 1..=burn + cfg.steps() {
            w.step(chart, cfg.dt, &mut rng)?;
            if w.truncated {
                return Ok(None);
            }
            if s > burn {
                let q = w.point;
                leaf[bin_of(q.y, y0, y1, bins[1]) * bins[0] + bin_of(q.x, x0, x1, bins[0])] += 1;
                trans[bin_of(chart.wrap_z(q.z), z0, z1, bins[2])] += 1;
                count += 1;
            }
        }
        let q = w.point;
        let end = bin_of(q.y, y0, y1, bins[1]) * bins[0] + bin_of(q.x, x0, x1, bins[0]);
        let norm = |v: Vec<u32>| v.into_iter().map(|c| c as f64 / count.max(1) as f64).collect::<Vec<f64>>();
        Ok(Some((norm(leaf), norm(trans), end)))
    })?;
    let truncated = per_path.iter().filter(|r| r.is_none()).count();
    let ok: Vec<_> = per_path.into_iter().flatten().collect();
    let column = |sel: &dyn Fn(&(Vec<f64>, Vec<f64>, usize)) -> &Vec<f64>, len: usize| {
        let mut m = Vec::with_capacity(len);
        let mut s = Vec::with_capacity(len);
        for b in 0..len {
            let col: Vec<f64> = ok.iter().map(|r| sel(r)[b]).collect();
            let (a, e) = mean_se(&col);
            m.push(a);
            s.push(e);
        }
        (m, s)
    };
    let (leaf, leaf_se) = column(&|r| &r.0, nleaf);
    let (transverse, transverse_se) = column(&|r| &r.1, bins[2]);
    let mut endpoint_counts = vec![0u64; nleaf];
    for r in &ok {
        endpoint_counts[r.2] += 1;
    }
    Ok(StationaryReport {
        bins,
        leaf,
        leaf_se,
        transverse,
        transverse_se,
        endpoint_counts,
        n_paths: ok.len(),
        truncated,
        seed: p.seed,
    })
}

/// Laplacian of a node field, for estimator cross-checks.
pub fn node_laplacian(chart: &FoliatedChartModel, field: &DiscreteForm) -> Result<Vec<f64>> {
    Ok(crate::geometry::laplace_beltrami(field, chart)?.values)
}

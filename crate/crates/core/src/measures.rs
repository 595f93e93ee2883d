//! Transverse measures `τ = f dz`, holonomy stretch factors and the
//! distortion of interval maps.

use serde::{Deserialize, Serialize};

use crate::brownian::BrownianPath;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::geometry::{DiscreteForm, FoliatedChartModel, FormShape, LeafPoint};

/// Positive transverse density, stored as `log f` per node.
///
/// `f` is a density against the chart coordinate `z`, so across a gluing
/// with transverse scale `s` it satisfies `f_source = s · f_target`; the
/// grid stencils apply this as a shift of `ln s` to `log f`.
#[derive(Clone, Debug)]
pub struct TransverseMeasureField {
    log_f: Vec<f64>,
    expr: Option<Expression>,
    anchor: usize,
    smoothness: String,
}

/// Measure file schema: either an expression for `f` over `(x, y, z)` or a
/// node array of `log f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_f: Option<Vec<f64>>,
    #[serde(default)]
    pub anchor: usize,
    #[serde(default = "default_smoothness")]
    pub smoothness: String,
}

fn default_smoothness() -> String {
    "C^inf".into()
}

impl TransverseMeasureField {
    pub fn from_expression(chart: &FoliatedChartModel, f: &str, anchor: usize, smoothness: &str) -> Result<Self> {
        let expr = Expression::parse(f)?;
        let mut log_f = Vec::with_capacity(chart.node_count());
        for n in 0..chart.node_count() {
            let p = chart.node_point(n);
            let v = expr.try_eval(p.x, p.y, p.z)?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidMeasure(format!("f = {v} at node {n} ({}, {}, {})", p.x, p.y, p.z)));
            }
            log_f.push(v.ln());
        }
        let mut m = Self::from_log_values(chart, log_f, anchor, smoothness)?;
        m.expr = Some(expr);
        Ok(m)
    }

    pub fn from_log_values(chart: &FoliatedChartModel, log_f: Vec<f64>, anchor: usize, smoothness: &str) -> Result<Self> {
        if log_f.len() != chart.node_count() {
            return Err(Error::InvalidMeasure(format!("{} values for {} nodes", log_f.len(), chart.node_count())));
        }
        if let Some(n) = log_f.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure(format!("log f not finite at node {n}")));
        }
        if anchor >= log_f.len() {
            return Err(Error::InvalidMeasure(format!("anchor {anchor} out of range")));
        }
        Ok(Self { log_f, expr: None, anchor, smoothness: smoothness.into() })
    }

    pub fn from_file(chart: &FoliatedChartModel, file: &MeasureFile) -> Result<Self> {
        match (&file.f, &file.log_f) {
            (_, Some(v)) => {
                let mut m = Self::from_log_values(chart, v.clone(), file.anchor, &file.smoothness)?;
                if let Some(src) = &file.f {
                    m.expr = Some(Expression::parse(src)?);
                }
                Ok(m)
            }
            (Some(src), None) => Self::from_expression(chart, src, file.anchor, &file.smoothness),
            (None, None) => Err(Error::InvalidMeasure("measure file needs `f` or `log_f`".into())),
        }
    }

    pub fn to_file(&self) -> MeasureFile {
        MeasureFile {
            f: self.expr.as_ref().map(|e| e.source().to_string()),
            log_f: Some(self.log_f.clone()),
            anchor: self.anchor,
            smoothness: self.smoothness.clone(),
        }
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_f
    }

    pub fn expression(&self) -> Option<&Expression> {
        self.expr.as_ref()
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn smoothness(&self) -> &str {
        &self.smoothness
    }

    /// `log f` at the anchor node; the basepoint of the per-leaf normalization.
    pub fn anchor_log_value(&self) -> f64 {
        self.log_f[self.anchor]
    }

    /// Same measure rescaled so that `f(anchor) = 1`.
    pub fn anchored(&self) -> Self {
        self.scaled(-self.anchor_log_value())
    }

    /// `τ ↦ e^{c} τ`.
    pub fn scaled(&self, log_c: f64) -> Self {
        Self {
            log_f: self.log_f.iter().map(|v| v + log_c).collect(),
            expr: None,
            anchor: self.anchor,
            smoothness: self.smoothness.clone(),
        }
    }

    /// `log f` as a twisted 0-form.
    pub fn log_form(&self, chart: &FoliatedChartModel) -> DiscreteForm {
        DiscreteForm { degree: 0, shape: FormShape::of(chart), values: self.log_f.clone(), twisted: true }
    }

    /// `log f` at an arbitrary leaf point: exact when an expression is
    /// attached, bilinear from the nodes otherwise.
    pub fn log_f_at(&self, chart: &FoliatedChartModel, p: LeafPoint) -> f64 {
        match &self.expr {
            Some(e) => e.eval(p.x, p.y, p.z).ln(),
            None => chart.interpolate(&self.log_f, p, true),
        }
    }

    pub fn f_at(&self, chart: &FoliatedChartModel, p: LeafPoint) -> f64 {
        self.log_f_at(chart, p).exp()
    }

    /// `f` at every node.
    pub fn density(&self) -> Vec<f64> {
        self.log_f.iter().map(|v| v.exp()).collect()
    }
}

/// `log |h'_γ|_τ`: the log of the factor by which holonomy along `γ`
/// stretches `τ`-lengths, `log f(γ(T)) − log f(γ(0))` plus the log scale of
/// every gluing crossed.
pub fn holonomy_log_derivative(path: &BrownianPath, tau: &TransverseMeasureField, chart: &FoliatedChartModel) -> Result<f64> {
    if path.truncated {
        let p = path.points.last().copied().unwrap_or(LeafPoint::new(f64::NAN, f64::NAN, f64::NAN));
        return Err(Error::PathExit { x: p.x, y: p.y });
    }
    let (Some(a), Some(b)) = (path.points.first(), path.points.last()) else {
        return Ok(0.0);
    };
    let shift = path.log_scale.last().copied().unwrap_or(0.0);
    Ok(tau.log_f_at(chart, *b) - tau.log_f_at(chart, *a) + shift)
}

/// Samples of an orientation-preserving interval map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalMapSample {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl IntervalMapSample {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 3 {
            return Err(Error::IntervalMap(format!("need >= 3 paired samples, got {} and {}", xs.len(), ys.len())));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::IntervalMap("sample points must be strictly increasing".into()));
        }
        if ys.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::IntervalMap("images are not strictly increasing".into()));
        }
        Ok(Self { xs, ys })
    }

    /// `n` equally spaced samples of `g` on `[a, b]`.
    pub fn from_fn(a: f64, b: f64, n: usize, g: impl Fn(f64) -> f64) -> Result<Self> {
        let xs: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1).max(1) as f64).collect();
        let ys = xs.iter().map(|&x| g(x)).collect();
        Self::new(xs, ys)
    }

    pub fn points(&self) -> &[f64] {
        &self.xs
    }

    pub fn images(&self) -> &[f64] {
        &self.ys
    }

    pub fn length(&self) -> f64 {
        self.xs[self.xs.len() - 1] - self.xs[0]
    }

    /// First difference quotients, one per sample interval.
    pub fn first_quotients(&self) -> Vec<f64> {
        self.xs.windows(2).zip(self.ys.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])).collect()
    }

    /// Second difference quotients `(q_{i+1} − q_i) / ((x_{i+2} − x_i)/2)`.
    pub fn second_quotients(&self) -> Vec<f64> {
        let q = self.first_quotients();
        q.windows(2)
            .enumerate()
            .map(|(i, w)| (w[1] - w[0]) / ((self.xs[i + 2] - self.xs[i]) / 2.0))
            .collect()
    }
}

/// `sup g' / inf g'` over the sampled difference quotients; `≥ 1`, and `1`
/// exactly on affine samples.
pub fn distortion(m: &IntervalMapSample) -> f64 {
    let q = m.first_quotients();
    let hi = q.iter().cloned().fold(f64::MIN, f64::max);
    let lo = q.iter().cloned().fold(f64::MAX, f64::min);
    hi / lo
}

/// Whether `distortion ≤ 1 + |I|·sup|g''| / inf g'` with finite-difference
/// derivatives. On samples this holds by telescoping the quotients, so only
/// rounding slack is allowed.
pub fn distortion_bound_check(m: &IntervalMapSample) -> bool {
    let q = m.first_quotients();
    let inf_q = q.iter().cloned().fold(f64::MAX, f64::min);
    let sup_s = m.second_quotients().iter().map(|s| s.abs()).fold(0.0, f64::max);
    let rhs = 1.0 + m.length() * sup_s / inf_q;
    distortion(m) <= rhs * (1.0 + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn affine_has_unit_distortion() {
        let m = IntervalMapSample::from_fn(-1.0, 3.0, 50, |x| 2.0 * x + 1.0).unwrap();
        assert!((distortion(&m) - 1.0).abs() < 1e-12);
        assert!(distortion_bound_check(&m));
    }

    #[test]
    fn square_map_distortion_approaches_derivative_ratio() {
        // Oracle: sup g'/inf g' = 4/2 on [1, 2].
        let m = IntervalMapSample::from_fn(1.0, 2.0, 4001, |x| x * x).unwrap();
        assert!((distortion(&m) - 2.0).abs() < 1e-3);
        assert!(distortion_bound_check(&m));
    }

    #[test]
    fn non_monotone_rejected() {
        assert!(IntervalMapSample::from_fn(-1.0, 1.0, 20, |x| x * x).is_err());
        assert!(IntervalMapSample::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
    }

    fn poly(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, a| acc * x + a)
    }

    proptest! {
        #[test]
        fn distortion_at_least_one(c1 in 0.1f64..3.0, c2 in 0.0f64..1.0, c3 in 0.0f64..1.0) {
            let m = IntervalMapSample::from_fn(0.0, 1.0, 64, |x| poly(&[0.0, c1, c2, c3], x)).unwrap();
            prop_assert!(distortion(&m) >= 1.0);
        }

        #[test]
        fn distortion_is_submultiplicative(a in 0.2f64..2.0, b in 0.0f64..1.0, c in 0.2f64..2.0, d in 0.0f64..1.0) {
            let h = |x: f64| a * x + b * x * x;
            let g = |y: f64| c * y + d * y * y * y;
            let n = 257;
            let mh = IntervalMapSample::from_fn(0.0, 1.0, n, h).unwrap();
            let hi = h(1.0);
            // g sampled on the image points of h, so quotients line up with g∘h.
            let mg = IntervalMapSample::new(mh.images().to_vec(), mh.images().iter().map(|&y| g(y)).collect()).unwrap();
            let mgh = IntervalMapSample::from_fn(0.0, 1.0, n, |x| g(h(x))).unwrap();
            prop_assert!(hi > 0.0);
            prop_assert!(distortion(&mgh) <= distortion(&mg) * distortion(&mh) * (1.0 + 1e-9));
        }

        #[test]
        fn bound_holds_on_random_monotone_polynomials(c in proptest::collection::vec(0.0f64..2.0, 4), lead in 0.05f64..2.0) {
            let coeffs = [0.0, lead, c[0] - 1.0, c[1], c[2] * 0.5, c[3] * 0.25];
            let g = |x: f64| poly(&coeffs, x);
            if let Ok(m) = IntervalMapSample::from_fn(0.0, 1.0, 200, g) {
                prop_assert!(distortion_bound_check(&m));
            }
        }
    }
}

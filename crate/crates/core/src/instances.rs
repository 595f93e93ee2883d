//! Built-in foliated instances.
//!
//! * `product-torus`: flat torus leaves, `f = 1`, trivial gluings. Control
//!   with an invariant transverse measure.
//! * `example1-quotient`: `f = 2^{-x}` on the quotient by
//!   `(x, y, z) ↦ (x + 1, y, 2z)`, with `y` periodic and `z` truncated to a
//!   periodic band. The leaf `z = 0` closes up into a torus.
//! * `example2-halfplane`: `f = y` on a strip of the upper half plane,
//!   `x` periodic, reflecting in `y`.
//! * `example3-pants`: a flat pair of pants, realized as the rectangle
//!   `[0,3]×[0,1]` doubled along its seams (mirror faces). Cuffs `b = [0,1]`
//!   and `c = [2,3]` on the bottom, `a = [1,2]` on top; crossing `b` or `c`
//!   lands on `a` with `θ ↦ θ/2` resp. `θ/2 + 1/2`, so `a` is twice as long
//!   transversally. `f` is `1` on `b, c`, `2` on `a`, with a single saddle.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diffusion::DiffusionParams;
use crate::error::{Error, Result};
use crate::geometry::{
    rectangle_description, ChartDescription, FaceMap, FaceRule, FaceSegment, FoliatedChartModel, GlueBranch, MetricSpec,
};
use crate::measures::{MeasureFile, TransverseMeasureField};

pub const INSTANCE_NAMES: [&str; 4] = ["product-torus", "example1-quotient", "example2-halfplane", "example3-pants"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedLp {
    FeasibleBeta,
    Obstruction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedProperties {
    pub has_invariant_measure: bool,
    /// Whether the Reeb field of `τ + εβ` should cross the leaves.
    pub reeb_transverse: bool,
    pub lp: ExpectedLp,
    /// Transverse slice used for the leaf complex.
    pub lp_slice: usize,
    /// Analytic or frozen reference values.
    #[serde(default)]
    pub reference: BTreeMap<String, f64>,
}

impl ExpectedProperties {
    /// An invariant transverse measure forces an obstruction.
    pub fn is_consistent(&self) -> bool {
        !self.has_invariant_measure || (self.lp == ExpectedLp::Obstruction && !self.reeb_transverse)
    }
}

#[derive(Clone, Debug)]
pub struct InstanceDescriptor {
    pub name: String,
    pub chart: FoliatedChartModel,
    pub measure: TransverseMeasureField,
    pub expected: ExpectedProperties,
    pub notes: Vec<String>,
}

/// Serialized instance: chart and measure in their file schemas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub name: String,
    pub chart: ChartDescription,
    pub measure: MeasureFile,
    pub expected: ExpectedProperties,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl InstanceDescriptor {
    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            name: self.name.clone(),
            chart: self.chart.description().clone(),
            measure: self.measure.to_file(),
            expected: self.expected.clone(),
            notes: self.notes.clone(),
        }
    }

    pub fn from_file(file: &InstanceFile) -> Result<Self> {
        let chart = FoliatedChartModel::from_description(file.chart.clone())?;
        let measure = TransverseMeasureField::from_file(&chart, &file.measure)?;
        if !file.expected.is_consistent() {
            return Err(Error::InvalidParams(format!("instance {}: expected properties are inconsistent", file.name)));
        }
        Ok(Self { name: file.name.clone(), chart, measure, expected: file.expected.clone(), notes: file.notes.clone() })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(s)?)
    }

    /// Same instance with a replaced measure.
    pub fn with_measure(&self, measure: TransverseMeasureField) -> Self {
        Self { measure, ..self.clone() }
    }
}

/// Built-in instance at its default resolution.
pub fn make_instance(name: &str) -> Result<InstanceDescriptor> {
    make_instance_with(name, None)
}

/// Built-in instance with leaf spacing `h` (or the default).
pub fn make_instance_with(name: &str, h: Option<f64>) -> Result<InstanceDescriptor> {
    match name {
        "product-torus" => product_torus(h.unwrap_or(0.125)),
        "example1-quotient" => example1(h.unwrap_or(0.125)),
        "example2-halfplane" => example2(h.unwrap_or(0.125)),
        "example3-pants" => example3(h.unwrap_or(0.25)),
        _ => Err(Error::UnknownInstance(name.to_string())),
    }
}

fn cells(len: f64, h: f64) -> Result<usize> {
    let n = (len / h).round();
    if !(h > 0.0) || (n * h - len).abs() > 1e-9 * len || n < 2.0 {
        return Err(Error::InvalidParams(format!("spacing {h} does not divide length {len}")));
    }
    Ok(n as usize)
}

fn product_torus(h: f64) -> Result<InstanceDescriptor> {
    let n = cells(1.0, h)?;
    let chart = FoliatedChartModel::from_description(rectangle_description(
        [n, n, 2],
        [0.0; 3],
        [h, h, 0.5],
        [true, true],
        MetricSpec::flat(),
        FaceRule::Reflect,
    ))?;
    let measure = TransverseMeasureField::from_expression(&chart, "1", 0, "C^inf")?;
    let mut reference = BTreeMap::new();
    reference.insert("contraction_rate".into(), 0.0);
    Ok(InstanceDescriptor {
        name: "product-torus".into(),
        chart,
        measure,
        expected: ExpectedProperties {
            has_invariant_measure: true,
            reeb_transverse: false,
            lp: ExpectedLp::Obstruction,
            lp_slice: 0,
            reference,
        },
        notes: vec!["flat torus leaves with the invariant measure dz".into()],
    })
}

fn example1(h: f64) -> Result<InstanceDescriptor> {
    let n = cells(1.0, h)?;
    let mut desc = rectangle_description([n, n, 4], [0.0; 3], [h, h, 0.25], [true, true], MetricSpec::flat(), FaceRule::Reflect);
    // Moving in +x crosses (x, y, z) ~ (x + 1, y, 2z): (1, y, z) ↦ (0, y, z/2).
    desc.faces.x_high = vec![FaceSegment {
        start: 0.0,
        end: 1.0,
        rule: FaceRule::Glue {
            branches: vec![GlueBranch {
                z_from: 0.0,
                z_to: 1.0,
                target_face: crate::geometry::Face::XLow,
                target_start: 0.0,
                z_scale: 0.5,
                z_offset: 0.0,
            }],
        },
    }];
    desc.faces.x_low = vec![FaceSegment {
        start: 0.0,
        end: 1.0,
        rule: FaceRule::Glue {
            branches: vec![
                GlueBranch {
                    z_from: 0.0,
                    z_to: 0.5,
                    target_face: crate::geometry::Face::XHigh,
                    target_start: 0.0,
                    z_scale: 2.0,
                    z_offset: 0.0,
                },
                GlueBranch {
                    z_from: 0.5,
                    z_to: 1.0,
                    target_face: crate::geometry::Face::XHigh,
                    target_start: 0.0,
                    z_scale: 2.0,
                    z_offset: -1.0,
                },
            ],
        },
    }];
    let chart = FoliatedChartModel::from_description(desc)?;
    let measure = TransverseMeasureField::from_expression(&chart, "2^(-x)", 0, "C^inf")?;
    let mut reference = BTreeMap::new();
    reference.insert("holonomy_per_crossing".into(), -std::f64::consts::LN_2);
    Ok(InstanceDescriptor {
        name: "example1-quotient".into(),
        chart,
        measure,
        expected: ExpectedProperties {
            has_invariant_measure: true,
            reeb_transverse: false,
            lp: ExpectedLp::Obstruction,
            lp_slice: 0,
            reference,
        },
        notes: vec![
            "tau = 2^{-x} dz; the band z in [0, 1) is periodic, so the -x gluing is the doubling map".into(),
            "the leaf z = 0 is a compact torus and carries an invariant transverse measure".into(),
        ],
    })
}

fn example2(h: f64) -> Result<InstanceDescriptor> {
    let nx = cells(2.0, h)?;
    let ny = cells(2.0, h)? + 1;
    let chart = FoliatedChartModel::from_description(rectangle_description(
        [nx, ny, 2],
        [0.0, 0.5, 0.0],
        [h, h, 0.5],
        [true, false],
        MetricSpec::flat(),
        FaceRule::Reflect,
    ))?;
    let measure = TransverseMeasureField::from_expression(&chart, "y", 0, "C^inf")?;
    Ok(InstanceDescriptor {
        name: "example2-halfplane".into(),
        chart,
        measure,
        expected: ExpectedProperties {
            has_invariant_measure: false,
            reeb_transverse: true,
            lp: ExpectedLp::FeasibleBeta,
            lp_slice: 0,
            reference: BTreeMap::new(),
        },
        notes: vec!["strip [0,2) x [0.5, 2.5] of the upper half plane, periodic in x, reflecting in y".into()],
    })
}

/// Closed-form `f` on the pants rectangle.
pub const PANTS_F: &str = "2^smoothstep(clamp(((1 - cos(2*pi*x/3))/4 + (1 - cos(pi*y))/4 - 0.375)/0.5, 0, 1))";

fn example3(h: f64) -> Result<InstanceDescriptor> {
    use crate::geometry::Face;
    let nx = cells(3.0, h)? + 1;
    let ny = cells(1.0, h)? + 1;
    let glue = |branches: Vec<GlueBranch>| FaceRule::Glue { branches };
    let br = |z_from, z_to, target_face, target_start, z_scale, z_offset| GlueBranch {
        z_from,
        z_to,
        target_face,
        target_start,
        z_scale,
        z_offset,
    };
    let seg = |start, end, rule| FaceSegment { start, end, rule };
    let desc = ChartDescription {
        dims: [nx, ny, 2],
        origin: [0.0; 3],
        spacing: [h, h, 0.5],
        periodic: [false, false],
        metric: MetricSpec::flat(),
        faces: FaceMap {
            x_low: vec![seg(0.0, 1.0, FaceRule::Mirror)],
            x_high: vec![seg(0.0, 1.0, FaceRule::Mirror)],
            y_low: vec![
                seg(0.0, 1.0, glue(vec![br(0.0, 1.0, Face::YHigh, 1.0, 0.5, 0.0)])),
                seg(1.0, 2.0, FaceRule::Mirror),
                seg(2.0, 3.0, glue(vec![br(0.0, 1.0, Face::YHigh, 1.0, 0.5, 0.5)])),
            ],
            y_high: vec![
                seg(0.0, 1.0, FaceRule::Mirror),
                seg(
                    1.0,
                    2.0,
                    glue(vec![br(0.0, 0.5, Face::YLow, 0.0, 2.0, 0.0), br(0.5, 1.0, Face::YLow, 2.0, 2.0, -1.0)]),
                ),
                seg(2.0, 3.0, FaceRule::Mirror),
            ],
        },
        leaf_orientation: 1,
        transverse_orientation: 1,
    };
    let chart = FoliatedChartModel::from_description(desc)?;
    let measure = TransverseMeasureField::from_expression(&chart, PANTS_F, 0, "C^2")?;
    let mut reference = BTreeMap::new();
    for (k, v) in PANTS_EXIT_REFERENCE {
        reference.insert(k.to_string(), v);
    }
    Ok(InstanceDescriptor {
        name: "example3-pants".into(),
        chart,
        measure,
        expected: ExpectedProperties {
            has_invariant_measure: false,
            reeb_transverse: true,
            lp: ExpectedLp::FeasibleBeta,
            lp_slice: 0,
            reference,
        },
        notes: vec![
            "flat pants: rectangle [0,3] x [0,1] doubled along mirror seams".into(),
            "cuffs b = bottom [0,1], c = bottom [2,3], a = top [1,2]; a is twice as long transversally".into(),
            "f = 2^s(t) with s the quintic smoothstep, t = ((1-cos(2 pi x/3)) + (1-cos(pi y)))/4 rescaled from [0.375, 0.875]; f = 1 on b, c and 2 on a, flat normal derivative at every face".into(),
        ],
    })
}

/// Frozen first-exit probabilities `(p_a, p_b, p_c)` and mean exit time for
/// paths started uniformly on the pants (see [`exit_probabilities`]).
/// Frozen at `dt = 1e-4`, 20000 paths, seed 1.
pub const PANTS_EXIT_REFERENCE: [(&str, f64); 4] =
    [("exit_p_a", 0.37015), ("exit_p_b", 0.31405), ("exit_p_c", 0.3158), ("exit_mean_time", 0.467668575)];

/// Recorded `(T, R, S)` and sampling at which the diffused pants measure
/// passes `check_superharmonic` with `κ₀ = |κ̂|/2`.
pub fn pants_diffusion_fixture() -> DiffusionParams {
    DiffusionParams::new(3.0, 0.01, 16_000, 4.0, 2.0, 7)
}

/// Which cuff a path leaves through first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitReport {
    /// `(p_a, p_b, p_c)`.
    pub probabilities: [f64; 3],
    pub standard_errors: [f64; 3],
    pub mean_time: f64,
    pub mean_time_se: f64,
    pub n_paths: usize,
    pub unexited: usize,
}

/// First-exit Monte Carlo on the pants instance: reflected Brownian motion in
/// the rectangle, stopped at the first cuff crossing. Independent of the
/// holonomy bookkeeping, so it can serve as an oracle for it.
pub fn exit_probabilities(dt: f64, n_paths: usize, seed: u64, t_max: f64) -> Result<ExitReport> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    use rayon::prelude::*;
    let steps = (t_max / dt).round() as usize;
    let outcomes: Vec<Option<(usize, f64)>> = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = crate::rng::stream(seed, crate::rng::Purpose::ExitOracle, k as u64);
            let mut x = 3.0 * rng.gen::<f64>();
            let mut y = rng.gen::<f64>();
            let sq = dt.sqrt();
            for s in 1..=steps {
                let dx: f64 = rng.sample(StandardNormal);
                let dy: f64 = rng.sample(StandardNormal);
                x += sq * dx;
                y += sq * dy;
                if x < 0.0 {
                    x = -x;
                }
                if x > 3.0 {
                    x = 6.0 - x;
                }
                if y < 0.0 {
                    if x < 1.0 {
                        return Some((1, s as f64 * dt));
                    }
                    if x > 2.0 {
                        return Some((2, s as f64 * dt));
                    }
                    y = -y;
                }
                if y > 1.0 {
                    if (1.0..=2.0).contains(&x) {
                        return Some((0, s as f64 * dt));
                    }
                    y = 2.0 - y;
                }
            }
            None
        })
        .collect();
    let unexited = outcomes.iter().filter(|o| o.is_none()).count();
    let done: Vec<(usize, f64)> = outcomes.into_iter().flatten().collect();
    let mut probabilities = [0.0; 3];
    let mut standard_errors = [0.0; 3];
    for c in 0..3 {
        let ind: Vec<f64> = done.iter().map(|(w, _)| if *w == c { 1.0 } else { 0.0 }).collect();
        let (m, se) = crate::stats::mean_se(&ind);
        probabilities[c] = m;
        standard_errors[c] = se;
    }
    let times: Vec<f64> = done.iter().map(|d| d.1).collect();
    let (mean_time, mean_time_se) = crate::stats::mean_se(&times);
    Ok(ExitReport { probabilities, standard_errors, mean_time, mean_time_se, n_paths: done.len(), unexited })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_construct_and_round_trip() {
        for name in INSTANCE_NAMES {
            let inst = make_instance(name).unwrap();
            assert!(inst.expected.is_consistent());
            let json = inst.to_json().unwrap();
            let back = InstanceDescriptor::from_json(&json).unwrap();
            assert_eq!(back.to_json().unwrap(), json, "{name}");
            assert_eq!(back.measure.log_values(), inst.measure.log_values());
        }
    }

    #[test]
    fn unknown_name_rejected() {
        assert!(matches!(make_instance("klein-bottle"), Err(Error::UnknownInstance(_))));
    }

    #[test]
    fn pants_measure_hits_cuff_values() {
        let inst = make_instance("example3-pants").unwrap();
        let e = inst.measure.expression().unwrap();
        for x in [0.0, 0.3, 0.9, 2.1, 2.7, 3.0] {
            assert!((e.eval(x, 0.0, 0.0) - 1.0).abs() < 1e-12, "b/c at x = {x}");
        }
        for x in [1.0, 1.4, 2.0] {
            assert!((e.eval(x, 1.0, 0.0) - 2.0).abs() < 1e-12, "a at x = {x}");
        }
    }

    #[test]
    fn halfplane_defaults() {
        let inst = make_instance("example2-halfplane").unwrap();
        assert!(inst.chart.is_flat());
        assert!(inst.expected.reeb_transverse);
        let p = inst.chart.node_point(inst.chart.node_index(3, 4, 0));
        assert!((inst.measure.log_f_at(&inst.chart, p) - p.y.ln()).abs() < 1e-15);
    }
}

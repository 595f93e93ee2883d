use leafwise::geometry::{rectangle_description, FaceRule, MetricSpec};
use leafwise::lp::fixtures::{random_complex, torus_complex};
use leafwise::lp::rational::Q;
use leafwise::lp::{extract_complex, solve_beta_lp, verify_certificate, LPOutcome};
use leafwise::{FoliatedChartModel, TransverseMeasureField};
use num::{BigInt, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

fn rect(n: usize, h: f64) -> FoliatedChartModel {
    let d = rectangle_description([n, n, 1], [0.0, 0.5, 0.0], [h, h, 1.0], [false, false], MetricSpec::flat(), FaceRule::Reflect);
    FoliatedChartModel::from_description(d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_outcome_carries_a_valid_certificate(seed in 0u64..1000, index in 0u64..500) {
        let (c, stokes) = random_complex(seed, index, 60);
        let o = solve_beta_lp(&c).unwrap();
        prop_assert!(verify_certificate(&o, &c).unwrap());
        if stokes {
            prop_assert!(!o.is_feasible());
        }
        // Independent check of the defining inequalities.
        match &o {
            LPOutcome::FeasibleBeta { beta, .. } => {
                prop_assert!(c.coboundary(beta).iter().all(|d| d.is_positive()));
                for m in &c.marked {
                    prop_assert!(!(beta[m.edge].clone() * Q::from_integer(BigInt::from(m.sign))).is_negative());
                }
            }
            LPOutcome::Obstruction { weights } => {
                prop_assert!(weights.iter().all(|w| !w.is_negative()) && weights.iter().any(|w| w.is_positive()));
                let b = c.boundary_of(weights);
                let marked: std::collections::HashMap<usize, i32> = c.marked.iter().map(|m| (m.edge, m.sign)).collect();
                for (e, v) in b.iter().enumerate() {
                    match marked.get(&e) {
                        Some(&s) => prop_assert!(!(v.clone() * Q::from_integer(BigInt::from(s))).is_positive()),
                        None => prop_assert!(v.is_zero()),
                    }
                }
            }
        }
    }

    #[test]
    fn area_scaling_preserves_the_verdict(seed in 0u64..1000, index in 0u64..500, p in 1i64..20, q in 1i64..20) {
        let (c, _) = random_complex(seed, index, 40);
        let mut scaled = c.clone();
        for f in &mut scaled.faces {
            f.area *= Q::new(BigInt::from(p), BigInt::from(q));
        }
        prop_assert_eq!(solve_beta_lp(&c).unwrap().kind(), solve_beta_lp(&scaled).unwrap().kind());
    }

    #[test]
    fn closed_surfaces_are_always_obstructed(m in 1usize..6, n in 1usize..6) {
        let c = torus_complex(m, n);
        let o = solve_beta_lp(&c).unwrap();
        prop_assert!(!o.is_feasible());
        prop_assert!(verify_certificate(&o, &c).unwrap());
    }

    // Level lines of an affine function cross the whole rectangle, so no
    // non-negative chain has its boundary on them alone: β always exists.
    #[test]
    fn affine_measures_on_a_rectangle_are_feasible(angle in 0.0f64..std::f64::consts::TAU, levels in 1usize..4) {
        let chart = rect(7, 0.25);
        let (a, b) = (angle.cos(), angle.sin());
        let expr = format!("exp({a}*x + {b}*y)");
        let tau = TransverseMeasureField::from_expression(&chart, &expr, 0, "smooth").unwrap();
        let c = extract_complex(&chart, &tau, 0, levels).unwrap();
        c.validate().unwrap();
        let total = c.total_area().to_f64().unwrap();
        prop_assert!((total - 2.25).abs() < 1e-6, "area {}", total);
        prop_assert!(!c.marked.is_empty());
        let o = solve_beta_lp(&c).unwrap();
        prop_assert!(o.is_feasible());
        prop_assert!(verify_certificate(&o, &c).unwrap());
    }
}

use leafwise::pipeline::{run_pipeline, PipelineConfig, PipelineReport};
use leafwise::{make_instance, DiffusionParams, LPOutcome, Verdict};

fn cheap() -> PipelineConfig {
    PipelineConfig::new(DiffusionParams::new(0.5, 0.05, 200, 4.0, 2.0, 3))
}

#[test]
fn product_torus_fails_at_every_stage() {
    let inst = make_instance("product-torus").unwrap();
    let rep = run_pipeline(&inst, &cheap()).unwrap();
    // Trivial holonomy: diffusion leaves f = 1, so Δ log f' = 0 and nothing is strictly superharmonic.
    assert_eq!(rep.chain.superharmonic, Verdict::Fail);
    assert_eq!(rep.superharmonic.n_pass, 0);
    assert_eq!(rep.lp.n_marked, 0);
    assert!(matches!(rep.lp.outcome, LPOutcome::Obstruction { .. }));
    assert!(rep.lp.verified);
    assert_eq!(rep.verdict, Verdict::Fail);
}

#[test]
fn reports_are_reproducible_and_round_trip() {
    let inst = make_instance("example2-halfplane").unwrap();
    let a = run_pipeline(&inst, &cheap()).unwrap();
    let b = run_pipeline(&inst, &cheap()).unwrap();
    let (ja, jb) = (a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(ja, jb);
    let back: PipelineReport = serde_json::from_str(&ja).unwrap();
    assert_eq!(back.to_json().unwrap(), ja);
    assert_eq!(back.seed, 3);
    assert_eq!(back.verdict, back.chain.superharmonic.and(back.chain.contact).and(back.chain.transverse).and(back.lp.verdict));
}

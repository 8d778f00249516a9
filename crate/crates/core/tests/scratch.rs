// Temporary development probe; replaced by the acceptance suite.

use flowcert::model::parse_system;
use flowcert::pipeline::{certify_with_invariants, CertOutcome, PipelineOptions};

#[test]
fn ex2_paper_invariant_certifies() {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/ex2_interval_2d.sys"
    ))
    .unwrap();
    let sys = parse_system(&text).unwrap();
    let inv = flowcert::model::parse_polynomial(
        "151/99 + 152/99*x1 + 62/33*x2 + 106/99*x1*x2 + 4/9*x1^2",
        &sys.vars,
    )
    .unwrap();
    let t0 = std::time::Instant::now();
    let out = certify_with_invariants(&sys, &[inv], &PipelineOptions::default()).unwrap();
    eprintln!("elapsed: {:?}", t0.elapsed());
    match out {
        CertOutcome::Certified(cert) => {
            for c in &cert.conditions {
                eprintln!("condition {} OK", c.label);
            }
        }
        CertOutcome::Inconclusive(reasons) => {
            for (l, r) in &reasons {
                eprintln!("FAILED {l}: {r}");
            }
            panic!("inconclusive");
        }
    }
}

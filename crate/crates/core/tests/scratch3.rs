// Continuous-condition residual diagnosis.

use flowcert::model::{parse_polynomial, parse_system};
use flowcert::pipeline::{generate_conditions, prepare, PipelineOptions};
use flowcert::psd::certify_psd_auto;
use flowcert::rational::{rat, rat_to_f64};
use flowcert::sdp::sos::{solve_implication_numeric, sos_decompose_numeric, MultiplierNumeric};

#[test]
fn probe_ex2_continuous() {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/ex2_interval_2d.sys"
    ))
    .unwrap();
    let sys = parse_system(&text).unwrap();
    let inv = parse_polynomial(
        "151/99 + 152/99*x1 + 62/33*x2 + 106/99*x1*x2 + 4/9*x1^2",
        &sys.vars,
    )
    .unwrap();
    let opts = PipelineOptions::default();
    let (subbed, params) = prepare(&sys, &opts.epsilon).unwrap();
    let obs = generate_conditions(&subbed, &params, &[inv], &opts).unwrap();
    let cont = obs
        .iter()
        .find(|o| o.label.starts_with("continuous"))
        .unwrap();
    eprintln!("target degree {}, hyps {}", cont.target.degree(), cont.hyps.len());
    let numeric = solve_implication_numeric(&cont.target, &cont.hyps).unwrap();
    eprintln!(
        "numeric margin {:.4e}, residual {:.3e}",
        numeric.sigma0_margin, numeric.residual
    );
    for (i, m) in numeric.multipliers.iter().enumerate() {
        match m {
            MultiplierNumeric::Free { coeffs, .. } => {
                eprintln!("mult {i} free: {coeffs:?}");
            }
            MultiplierNumeric::Sos { gram, .. } => {
                eprintln!("mult {i} sos order {}", gram.nrows());
            }
        }
    }
    // rationalize lambda at denominator 100 and certify the residual
    if let MultiplierNumeric::Free { coeffs, basis } = &numeric.multipliers[0] {
        for bound in [10u64, 100, 10_000, 1_000_000] {
            let mut lam = flowcert::poly::IPoly::zero(cont.target.vars().to_vec());
            for (j, mono) in basis.0.iter().enumerate() {
                lam.add_term(
                    mono.clone(),
                    flowcert::interval::Interval::point(flowcert::rational::rationalize(
                        coeffs[j], bound,
                    )),
                );
            }
            let hyp0 = &cont.hyps[0].0;
            let residual = cont.target.sub(&lam.mul(hyp0));
            let mid = residual.midpoint();
            match sos_decompose_numeric(&mid) {
                Ok(d) => eprintln!("bound {bound}: residual-mid margin {:.4e}", d.margin),
                Err(e) => eprintln!("bound {bound}: residual-mid FAIL {e}"),
            }
            match certify_psd_auto(&residual, &rat(1, 1_000_000)) {
                Ok(flowcert::psd::CertifyOutcome::Certified(c)) => {
                    eprintln!("bound {bound}: CERTIFIED {:?}", kind_of(&c))
                }
                Ok(flowcert::psd::CertifyOutcome::Inconclusive(r)) => {
                    eprintln!("bound {bound}: inconclusive: {r}")
                }
                Err(e) => eprintln!("bound {bound}: error {e}"),
            }
        }
    }
    let _ = rat_to_f64;
}

fn kind_of(c: &flowcert::psd::PsdCertificate) -> &'static str {
    match c {
        flowcert::psd::PsdCertificate::FullRankRohn { .. } => "fullrank",
        flowcert::psd::PsdCertificate::SingularSquareKrawczyk { .. } => "square",
        flowcert::psd::PsdCertificate::SingularUnderdetermined { .. } => "under",
    }
}

//! End-to-end orchestration: verification conditions for inductive
//! invariants of interval hybrid systems, numeric synthesis of template
//! coefficients, exact certification, and certificate replay.

pub mod certfmt;

use crate::error::{Error, Result};
use crate::model::{
    classify_and_substitute, enclose_nonpolynomial, midpoint_system, FieldRhs, HybridSystemDesc,
    UncertainParam,
};
use crate::poly::{lie_derivative, monomial_basis, IPoly, MonomialVector};
use crate::psd::{certify_implication, default_rank_tol, ImplicationCertificate};
use crate::ratcert::recover_vector;
use crate::rational::{rat, Rat};
use crate::sdp::bmi::{
    solve_bmi_alternating, AffineCoef, BmiOptions, BmiProgram, CPoly, SynthesisObligation,
};
use crate::sdp::sos::MultiplierKind;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConditionKind {
    Initial,
    Discrete { transition: usize },
    Continuous { location: usize },
    Unsafe { location: usize },
}

/// One normalized verification condition: hypothesis polynomials (each
/// with its multiplier semantics) entailing a nonnegative target.
#[derive(Clone, Debug)]
pub struct Obligation {
    pub kind: ConditionKind,
    pub label: String,
    pub target: IPoly,
    pub hyps: Vec<(IPoly, MultiplierKind)>,
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    /// Invariant template degree.
    pub degree: u32,
    /// Radius threshold for uncertainty substitution.
    pub epsilon: Rat,
    /// Cap on multiplier degrees (minimal balancing by default).
    pub mult_degree: Option<u32>,
    /// Strictness margin for the strict conditions (0 mirrors the SOS
    /// relaxation of the strict inequalities).
    pub delta: Rat,
    /// Relative rank tolerance of the full-rank certification path.
    pub rank_tol: Rat,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            degree: 2,
            epsilon: rat(1, 10),
            mult_degree: None,
            delta: Rat::zero(),
            rank_tol: default_rank_tol(),
        }
    }
}

/// A fully replayable safety certificate: one exact invariant per
/// location plus one implication witness per verification condition.
#[derive(Clone, Debug)]
pub struct SafetyCertificate {
    pub epsilon: Rat,
    pub delta: Rat,
    pub params: Vec<UncertainParam>,
    /// Per-location invariants, exact rational coefficients.
    pub invariants: Vec<IPoly>,
    pub conditions: Vec<ConditionWitness>,
}

#[derive(Clone, Debug)]
pub struct ConditionWitness {
    pub kind: ConditionKind,
    pub label: String,
    pub cert: ImplicationCertificate,
}

#[derive(Clone, Debug)]
pub enum CertOutcome {
    Certified(Box<SafetyCertificate>),
    /// Per-condition failure diagnostics; never a claim of unsafety.
    Inconclusive(Vec<(String, String)>),
}

#[derive(Clone, Debug)]
pub enum CheckOutcome {
    Accept,
    Reject { condition: String, reason: String },
}

fn full_vars(sys: &HybridSystemDesc, params: &[UncertainParam]) -> Vec<String> {
    let mut vars = sys.vars.clone();
    for p in params {
        vars.push(p.name.clone());
    }
    vars
}

fn field_polys(sys: &HybridSystemDesc, loc: usize) -> Result<Vec<IPoly>> {
    sys.locations[loc]
        .field
        .iter()
        .map(|f| match f {
            FieldRhs::Poly(p) => Ok(p.clone()),
            FieldRhs::Expr(_) => Err(Error::Semantic(
                "conditions require polynomial fields; enclose the system first".into(),
            )),
        })
        .collect()
}

fn mult_for(h: &IPoly, target: &IPoly, cap: Option<u32>) -> MultiplierKind {
    crate::psd::default_multiplier(h, target, cap)
}

fn free_degree(target: &IPoly, phi: &IPoly, cap: Option<u32>) -> u32 {
    let d = target.degree().saturating_sub(phi.degree());
    match cap {
        Some(c) => d.min(c),
        None => d,
    }
}

/// Builds the Theorem-2 verification conditions for fixed per-location
/// invariants over the (already substituted) system: initial membership,
/// discrete consecution per transition, continuous consecution per
/// location along the interval field, and unsafe-set separation.
pub fn generate_conditions(
    sys: &HybridSystemDesc,
    params: &[UncertainParam],
    invariants: &[IPoly],
    opts: &PipelineOptions,
) -> Result<Vec<Obligation>> {
    if invariants.len() != sys.locations.len() {
        return Err(Error::Semantic(
            "one invariant per location is required".into(),
        ));
    }
    let vars = full_vars(sys, params);
    let delta_poly = |target_vars: &[String]| {
        IPoly::constant(target_vars.to_vec(), opts.delta.clone())
    };
    let mut out = Vec::new();

    // (i) initial: Theta entails phi at the initial location
    {
        let phi0 = &invariants[sys.initial_location];
        let target = phi0.clone();
        let hyps = sys
            .init
            .iter()
            .map(|g| (g.clone(), mult_for(g, &target, opts.mult_degree)))
            .collect();
        out.push(Obligation {
            kind: ConditionKind::Initial,
            label: format!("initial at {}", sys.locations[sys.initial_location].name),
            target,
            hyps,
        });
    }

    // (ii) discrete consecution per transition
    for (ti, tr) in sys.transitions.iter().enumerate() {
        let phi_to = &invariants[tr.to];
        let target = phi_to.substitute(&tr.reset);
        let mut hyps = vec![(
            invariants[tr.from].clone(),
            mult_for(&invariants[tr.from], &target, opts.mult_degree),
        )];
        for g in &tr.guard {
            hyps.push((g.clone(), mult_for(g, &target, opts.mult_degree)));
        }
        out.push(Obligation {
            kind: ConditionKind::Discrete { transition: ti },
            label: format!(
                "transition {} -> {}",
                sys.locations[tr.from].name, sys.locations[tr.to].name
            ),
            target,
            hyps,
        });
    }

    // (iii') continuous consecution per location along the interval field
    for (li, loc) in sys.locations.iter().enumerate() {
        let field = field_polys(sys, li)?;
        let phi = &invariants[li];
        let phidot = lie_derivative(phi, &field);
        let target = phidot.sub(&delta_poly(phidot.vars())).embed(&vars);
        let mut hyps = vec![(
            phi.embed(&vars),
            MultiplierKind::Free {
                degree: free_degree(&target, phi, opts.mult_degree),
            },
        )];
        for g in &loc.invariant {
            let g = g.embed(&vars);
            let k = mult_for(&g, &target, opts.mult_degree);
            hyps.push((g, k));
        }
        for p in params {
            let theta = p.constraint(&vars);
            let k = mult_for(&theta, &target, opts.mult_degree);
            hyps.push((theta, k));
        }
        out.push(Obligation {
            kind: ConditionKind::Continuous { location: li },
            label: format!("continuous at {}", loc.name),
            target,
            hyps,
        });
    }

    // (iv) unsafe separation per location with an unsafe region
    for (li, unsafe_polys) in &sys.unsafe_sets {
        let phi = &invariants[*li];
        let target = phi.neg().sub(&delta_poly(phi.vars()));
        let hyps = unsafe_polys
            .iter()
            .map(|g| (g.clone(), mult_for(g, &target, opts.mult_degree)))
            .collect();
        out.push(Obligation {
            kind: ConditionKind::Unsafe { location: *li },
            label: format!("unsafe at {}", sys.locations[*li].name),
            target,
            hyps,
        });
    }
    Ok(out)
}

/// Prepares a raw system for certification: non-polynomial dynamics are
/// enclosed, wide interval coefficients become uncertainties.
pub fn prepare(
    sys: &HybridSystemDesc,
    epsilon: &Rat,
) -> Result<(HybridSystemDesc, Vec<UncertainParam>)> {
    let (enclosed, _terms) = enclose_nonpolynomial(sys)?;
    let (subbed, params) = classify_and_substitute(&enclosed, epsilon);
    Ok((subbed, params))
}

/// Certifies the given per-location invariants on a raw system: every
/// condition gets its multipliers synthesized numerically and is then
/// checked exactly. Returns a full certificate or per-condition reasons.
pub fn certify_with_invariants(
    sys: &HybridSystemDesc,
    invariants: &[IPoly],
    opts: &PipelineOptions,
) -> Result<CertOutcome> {
    let (subbed, params) = prepare(sys, &opts.epsilon)?;
    let obligations = generate_conditions(&subbed, &params, invariants, opts)?;
    let mut witnesses = Vec::new();
    let mut failures = Vec::new();
    for ob in &obligations {
        match certify_implication(&ob.hyps, &ob.target, &opts.rank_tol)? {
            Ok(cert) => witnesses.push(ConditionWitness {
                kind: ob.kind.clone(),
                label: ob.label.clone(),
                cert,
            }),
            Err(reason) => failures.push((ob.label.clone(), reason)),
        }
    }
    if failures.is_empty() {
        Ok(CertOutcome::Certified(Box::new(SafetyCertificate {
            epsilon: opts.epsilon.clone(),
            delta: opts.delta.clone(),
            params,
            invariants: invariants.to_vec(),
            conditions: witnesses,
        })))
    } else {
        Ok(CertOutcome::Inconclusive(failures))
    }
}

/// Independent exact replay of a stored certificate; no numeric solving.
pub fn check_certificate(sys: &HybridSystemDesc, cert: &SafetyCertificate) -> Result<CheckOutcome> {
    let (enclosed, _) = enclose_nonpolynomial(sys)?;
    let (subbed, params) = classify_and_substitute(&enclosed, &cert.epsilon);
    // the substitution must agree with the recorded parameters
    if params.len() != cert.params.len()
        || params
            .iter()
            .zip(&cert.params)
            .any(|(a, b)| a.name != b.name || a.lo != b.lo || a.hi != b.hi)
    {
        return Ok(CheckOutcome::Reject {
            condition: "preparation".into(),
            reason: "recorded uncertainty substitution does not match the system".into(),
        });
    }
    let opts = PipelineOptions {
        delta: cert.delta.clone(),
        epsilon: cert.epsilon.clone(),
        ..Default::default()
    };
    let obligations = generate_conditions(&subbed, &params, &cert.invariants, &opts)?;
    if obligations.len() != cert.conditions.len() {
        return Ok(CheckOutcome::Reject {
            condition: "structure".into(),
            reason: format!(
                "certificate has {} condition witnesses, system needs {}",
                cert.conditions.len(),
                obligations.len()
            ),
        });
    }
    for (ob, cw) in obligations.iter().zip(&cert.conditions) {
        if ob.kind != cw.kind {
            return Ok(CheckOutcome::Reject {
                condition: ob.label.clone(),
                reason: "condition order mismatch".into(),
            });
        }
        let hyp_polys: Vec<IPoly> = ob.hyps.iter().map(|(h, _)| h.clone()).collect();
        if !cw.cert.replay(&ob.target, &hyp_polys)? {
            return Ok(CheckOutcome::Reject {
                condition: ob.label.clone(),
                reason: "witness replay failed".into(),
            });
        }
    }
    Ok(CheckOutcome::Accept)
}

/// Per-location template basis (over the state variables only).
pub fn template_basis(sys: &HybridSystemDesc, degree: u32) -> MonomialVector {
    monomial_basis(sys.vars.len(), degree)
}

/// Builds the bilinear synthesis program over the midpoint of the
/// substituted system: the template coefficients of each location are the
/// unknowns c; multipliers attached to c-dependent hypotheses make the
/// discrete and continuous rows bilinear.
fn build_synthesis_program(
    subbed: &HybridSystemDesc,
    params: &[UncertainParam],
    opts: &PipelineOptions,
) -> Result<(BmiProgram, Vec<usize>)> {
    let mid = midpoint_system(subbed)?;
    let vars = full_vars(&mid, params);
    let basis = template_basis(&mid, opts.degree);
    let nu = basis.len();
    let offsets: Vec<usize> = (0..mid.locations.len()).map(|l| l * nu).collect();
    let templates: Vec<CPoly> = offsets
        .iter()
        .map(|&off| CPoly::template(mid.vars.clone(), &basis, off))
        .collect();
    let mut obligations = Vec::new();

    // target degrees mirror generate_conditions
    let d_template = opts.degree;

    // (i) initial
    {
        let target = templates[mid.initial_location].clone();
        let hyps = mid
            .init
            .iter()
            .map(|g| {
                let d = d_template.saturating_sub(g.degree());
                (CPoly::from_ipoly(g), MultiplierKind::Sos { degree: d - d % 2 })
            })
            .collect();
        obligations.push(SynthesisObligation {
            label: "initial".into(),
            target,
            hyps,
        });
    }
    // (ii) discrete
    for tr in &mid.transitions {
        let target = templates[tr.to].substitute(&tr.reset);
        let t_deg = target.degree();
        let mut hyps = vec![(
            templates[tr.from].clone(),
            MultiplierKind::Sos {
                degree: {
                    let d = t_deg.saturating_sub(d_template);
                    d - d % 2
                },
            },
        )];
        for g in &tr.guard {
            let d = t_deg.saturating_sub(g.degree());
            hyps.push((CPoly::from_ipoly(g), MultiplierKind::Sos { degree: d - d % 2 }));
        }
        obligations.push(SynthesisObligation {
            label: "discrete".into(),
            target,
            hyps,
        });
    }
    // (iii') continuous on the midpoint field
    for (li, loc) in mid.locations.iter().enumerate() {
        let field = field_polys(&mid, li)?;
        let field: Vec<IPoly> = field.iter().map(|p| p.embed(&vars)).collect();
        // template extended with the uncertainty variables (zero exponents)
        let tmpl_full = CPoly {
            vars: vars.clone(),
            terms: templates[li]
                .terms
                .iter()
                .map(|(m, c)| {
                    let mut exps = m.0.clone();
                    exps.resize(vars.len(), 0);
                    (crate::poly::Monomial(exps), c.clone())
                })
                .collect(),
        };
        let phidot = tmpl_full.lie_derivative(&field);
        let t_deg = phidot.degree();
        let mut hyps = vec![(
            tmpl_full.clone(),
            MultiplierKind::Free {
                degree: t_deg.saturating_sub(d_template),
            },
        )];
        for g in &loc.invariant {
            let d = t_deg.saturating_sub(g.degree());
            hyps.push((
                CPoly::from_ipoly(&g.embed(&vars)),
                MultiplierKind::Sos { degree: d - d % 2 },
            ));
        }
        for p in params {
            let theta = p.constraint(&vars);
            let d = t_deg.saturating_sub(theta.degree());
            hyps.push((
                CPoly::from_ipoly(&theta),
                MultiplierKind::Sos { degree: d - d % 2 },
            ));
        }
        obligations.push(SynthesisObligation {
            label: format!("continuous {}", loc.name),
            target: phidot,
            hyps,
        });
    }
    // (iv) unsafe: -phi over each unsafe region
    for (li, unsafe_polys) in &mid.unsafe_sets {
        let target = templates[*li].neg();
        let hyps = unsafe_polys
            .iter()
            .map(|g| {
                let d = d_template.saturating_sub(g.degree());
                (CPoly::from_ipoly(g), MultiplierKind::Sos { degree: d - d % 2 })
            })
            .collect();
        obligations.push(SynthesisObligation {
            label: "unsafe".into(),
            target,
            hyps,
        });
    }

    Ok((
        BmiProgram {
            vars,
            num_c: nu * mid.locations.len(),
            obligations,
        },
        offsets,
    ))
}

/// Full pipeline: numeric synthesis of template coefficients, rational
/// recovery along the denominator schedule, exact certification.
pub fn synthesize_and_certify(
    sys: &HybridSystemDesc,
    opts: &PipelineOptions,
) -> Result<CertOutcome> {
    let (subbed, params) = prepare(sys, &opts.epsilon)?;
    let (prog, offsets) = build_synthesis_program(&subbed, &params, opts)?;
    let sol = solve_bmi_alternating(&prog, &BmiOptions::default())?;
    let basis = template_basis(&subbed, opts.degree);
    let nu = basis.len();

    let mut reasons = Vec::new();
    for bound in crate::ratcert::denominator_schedule() {
        let c_rat = recover_vector(&sol.c, bound);
        // assemble per-location invariants
        let invariants: Vec<IPoly> = offsets
            .iter()
            .map(|&off| {
                let mut p = IPoly::zero(subbed.vars.clone());
                for (j, m) in basis.0.iter().enumerate() {
                    let v = c_rat[off + j].clone();
                    if !v.is_zero() {
                        p.add_term(m.clone(), crate::interval::Interval::point(v));
                    }
                }
                p
            })
            .collect();
        if invariants.iter().all(|p| p.is_zero()) {
            reasons.push(("synthesis".into(), format!("zero template at denominator {bound}")));
            continue;
        }
        match certify_with_invariants(sys, &invariants, opts)? {
            CertOutcome::Certified(cert) => return Ok(CertOutcome::Certified(cert)),
            CertOutcome::Inconclusive(fails) => {
                for (label, reason) in fails {
                    reasons.push((format!("denominator {bound}: {label}"), reason));
                }
            }
        }
    }
    Ok(CertOutcome::Inconclusive(reasons))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_system;

    const SINGLE: &str = "vars x1 x2\n\nlocation m\n  field\n  x1' = x2\n  x2' = -x1\n\ninit at m\n  1 - x1^2 - x2^2 >= 0\n\nunsafe at m\n  x1 - 2 >= 0\n";

    #[test]
    fn condition_count_single_location() {
        let sys = parse_system(SINGLE).unwrap();
        let opts = PipelineOptions::default();
        let (subbed, params) = prepare(&sys, &opts.epsilon).unwrap();
        let inv = vec![IPoly::constant(sys.vars.clone(), Rat::one())];
        let obs = generate_conditions(&subbed, &params, &inv, &opts).unwrap();
        // init, continuous, unsafe
        assert_eq!(obs.len(), 3);
        assert!(matches!(obs[0].kind, ConditionKind::Initial));
        assert!(matches!(obs[1].kind, ConditionKind::Continuous { .. }));
        assert!(matches!(obs[2].kind, ConditionKind::Unsafe { .. }));
    }

    #[test]
    fn two_location_conditions_include_discrete() {
        let text = "vars x\n\nlocation a\n  field\n  x' = 1\n\nlocation b\n  field\n  x' = -1\n\ntransition a -> b\n  guard\n  x - 1 >= 0\n\ntransition b -> a\n  guard\n  -x >= 0\n\ninit at a\n  1 - x^2 >= 0\n";
        let sys = parse_system(text).unwrap();
        let opts = PipelineOptions::default();
        let (subbed, params) = prepare(&sys, &opts.epsilon).unwrap();
        let inv = vec![
            IPoly::constant(sys.vars.clone(), Rat::one()),
            IPoly::constant(sys.vars.clone(), Rat::one()),
        ];
        let obs = generate_conditions(&subbed, &params, &inv, &opts).unwrap();
        let discrete = obs
            .iter()
            .filter(|o| matches!(o.kind, ConditionKind::Discrete { .. }))
            .count();
        assert_eq!(discrete, 2);
    }

    #[test]
    fn trivially_safe_system_certifies() {
        // invariant phi = 1 - x1 separates init (x1 <= ~-1 ball) from the
        // unsafe half plane x1 >= 2; flow keeps x1' = 0
        let text = "vars x1\n\nlocation m\n  field\n  x1' = 0\n\ninit at m\n  -x1 >= 0\n  x1 + 1 >= 0\n\nunsafe at m\n  x1 - 2 >= 0\n";
        let sys = parse_system(text).unwrap();
        let opts = PipelineOptions {
            degree: 1,
            ..Default::default()
        };
        let inv = vec![crate::model::parse_polynomial("1 - x1", &sys.vars).unwrap()];
        match certify_with_invariants(&sys, &inv, &opts).unwrap() {
            CertOutcome::Certified(cert) => {
                assert_eq!(cert.conditions.len(), 3);
                // replay accepts
                match check_certificate(&sys, &cert).unwrap() {
                    CheckOutcome::Accept => {}
                    CheckOutcome::Reject { condition, reason } => {
                        panic!("replay rejected {condition}: {reason}")
                    }
                }
                // a perturbed invariant must be rejected at replay
                let mut bad = cert.clone();
                bad.invariants[0] = bad.invariants[0]
                    .add(&IPoly::constant(sys.vars.clone(), rat(1, 1_000_000)));
                match check_certificate(&sys, &bad).unwrap() {
                    CheckOutcome::Reject { .. } => {}
                    CheckOutcome::Accept => panic!("perturbed certificate accepted"),
                }
            }
            CertOutcome::Inconclusive(why) => panic!("inconclusive: {why:?}"),
        }
    }

    #[test]
    fn conflicting_init_and_unsafe_is_inconclusive() {
        // the unsafe set intersects the initial set: no invariant exists
        let text = "vars x1\n\nlocation m\n  field\n  x1' = 0\n\ninit at m\n  1 - x1^2 >= 0\n\nunsafe at m\n  1 - x1^2 >= 0\n";
        let sys = parse_system(text).unwrap();
        let opts = PipelineOptions::default();
        match synthesize_and_certify(&sys, &opts).unwrap() {
            CertOutcome::Inconclusive(_) => {}
            CertOutcome::Certified(_) => panic!("cannot certify an unsafe system"),
        }
    }
}

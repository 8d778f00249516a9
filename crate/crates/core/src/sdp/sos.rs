//! SOS decomposition programs: coefficient matching between a target
//! polynomial and `m0^T W0 m0 + sum_i mult_i * h_i`, where each multiplier
//! is either an SOS Gram block or a free polynomial.

use super::{solve_lmi, solve_lmi_max_margin, LinearEq, LmiOutcome, LmiProgram, NumericWitness};
use crate::error::{Error, Result};
use crate::poly::{monomial_basis, IPoly, Monomial, MonomialVector};
use crate::rational::rat_to_f64;
use nalgebra::DMatrix;

/// How the multiplier attached to a hypothesis is modelled.
///
/// `Sos` keeps the implication sound pointwise on the hypothesis set.
/// `Free` is reserved for the flow (consecution) hypothesis `phi >= 0`,
/// where the comparison-lemma argument along trajectories does not need a
/// sign on the multiplier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MultiplierKind {
    Sos { degree: u32 },
    Free { degree: u32 },
}

#[derive(Clone, Debug)]
pub enum HypMultSlot {
    Sos { block: usize, basis: MonomialVector },
    Free { scalars: Vec<usize>, basis: MonomialVector },
}

#[derive(Clone, Debug)]
pub struct ImplicationLayout {
    pub sigma0_block: usize,
    pub sigma0_basis: MonomialVector,
    pub hyp_slots: Vec<HypMultSlot>,
    pub span: Vec<Monomial>,
}

fn point_coeff_f64(p: &IPoly, m: &Monomial) -> f64 {
    rat_to_f64(&p.coefficient(m).midpoint())
}

/// Gram-expansion contributions of block `block` on basis `m` into the
/// rows of `span`, scaled by a fixed polynomial factor `h`.
fn add_gram_terms(
    eqs: &mut [LinearEq],
    span: &[Monomial],
    block: usize,
    basis: &MonomialVector,
    h: &IPoly,
) {
    for a in 0..basis.len() {
        for b in a..basis.len() {
            let weight = if a == b { 1.0 } else { 2.0 };
            let prod = basis.0[a].mul(&basis.0[b]);
            for (hm, hc) in h.terms() {
                let row_mono = prod.mul(hm);
                let row = span.binary_search(&row_mono).expect("span covers products");
                eqs[row]
                    .block_terms
                    .push((block, a, b, weight * rat_to_f64(&hc.midpoint())));
            }
        }
    }
}

/// Builds the LMI whose solutions satisfy, coefficientwise,
/// `target = m0^T W0 m0 + sum_i mult_i * h_i`.
///
/// Interval coefficients are collapsed to midpoints: the numeric phase
/// always works on the midpoint identity, the exact phase re-derives the
/// interval residual afterwards.
pub fn build_implication_program(
    target: &IPoly,
    hyps: &[(IPoly, MultiplierKind)],
) -> (LmiProgram, ImplicationLayout) {
    let nvars = target.nvars();
    let target_deg = target.degree();
    let hyp_deg_max = hyps
        .iter()
        .map(|(h, k)| {
            h.degree()
                + match k {
                    MultiplierKind::Sos { degree } | MultiplierKind::Free { degree } => *degree,
                }
        })
        .max()
        .unwrap_or(0);
    let sos_deg = target_deg.max(hyp_deg_max).div_ceil(2);
    let sigma0_basis = monomial_basis(nvars, sos_deg);

    // matched monomial span: sigma0 products, multiplier-hypothesis
    // products, and the target support
    let mut span: Vec<Monomial> = Vec::new();
    let mut push = |m: Monomial| {
        if let Err(pos) = span.binary_search(&m) {
            span.insert(pos, m);
        }
    };
    for a in 0..sigma0_basis.len() {
        for b in a..sigma0_basis.len() {
            push(sigma0_basis.0[a].mul(&sigma0_basis.0[b]));
        }
    }
    let mut hyp_bases = Vec::new();
    for (h, kind) in hyps {
        let h = h.embed(target.vars());
        let basis = match kind {
            MultiplierKind::Sos { degree } => monomial_basis(nvars, degree / 2),
            MultiplierKind::Free { degree } => monomial_basis(nvars, *degree),
        };
        match kind {
            MultiplierKind::Sos { .. } => {
                for a in 0..basis.len() {
                    for b in a..basis.len() {
                        let prod = basis.0[a].mul(&basis.0[b]);
                        for (hm, _) in h.terms() {
                            push(prod.mul(hm));
                        }
                    }
                }
            }
            MultiplierKind::Free { .. } => {
                for mono in &basis.0 {
                    for (hm, _) in h.terms() {
                        push(mono.mul(hm));
                    }
                }
            }
        }
        hyp_bases.push((h, basis));
    }
    for (m, _) in target.terms() {
        push(m.clone());
    }

    let mut prog = LmiProgram::default();
    let mut eqs: Vec<LinearEq> = span
        .iter()
        .map(|m| LinearEq {
            label: format!("{:?}", m.0),
            rhs: point_coeff_f64(target, m),
            ..Default::default()
        })
        .collect();

    let sigma0_block = prog.add_block("sigma0", sigma0_basis.len());
    add_gram_terms(
        &mut eqs,
        &span,
        sigma0_block,
        &sigma0_basis,
        &IPoly::constant(target.vars().to_vec(), num_traits::One::one()),
    );

    let mut hyp_slots = Vec::new();
    for (idx, ((h, basis), (_, kind))) in hyp_bases.iter().zip(hyps).enumerate() {
        match kind {
            MultiplierKind::Sos { .. } => {
                let block = prog.add_block(format!("sigma{}", idx + 1), basis.len());
                add_gram_terms(&mut eqs, &span, block, basis, h);
                hyp_slots.push(HypMultSlot::Sos {
                    block,
                    basis: basis.clone(),
                });
            }
            MultiplierKind::Free { .. } => {
                let mut scalars = Vec::new();
                for (j, mono) in basis.0.iter().enumerate() {
                    let sc = prog.add_scalar(format!("lambda{}_{}", idx + 1, j));
                    scalars.push(sc);
                    for (hm, hc) in h.terms() {
                        let row_mono = mono.mul(hm);
                        let row = span.binary_search(&row_mono).unwrap();
                        eqs[row]
                            .scalar_terms
                            .push((sc, rat_to_f64(&hc.midpoint())));
                    }
                }
                hyp_slots.push(HypMultSlot::Free {
                    scalars,
                    basis: basis.clone(),
                });
            }
        }
    }

    prog.eqs = eqs;
    (
        prog,
        ImplicationLayout {
            sigma0_block,
            sigma0_basis,
            hyp_slots,
            span,
        },
    )
}

/// Numeric witness of an implication program, unpacked per multiplier.
#[derive(Clone, Debug)]
pub struct ImplicationNumeric {
    pub sigma0: DMatrix<f64>,
    pub sigma0_basis: MonomialVector,
    pub sigma0_margin: f64,
    pub multipliers: Vec<MultiplierNumeric>,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub enum MultiplierNumeric {
    Sos {
        gram: DMatrix<f64>,
        basis: MonomialVector,
    },
    Free {
        coeffs: Vec<f64>,
        basis: MonomialVector,
    },
}

pub fn unpack_witness(
    w: &NumericWitness,
    layout: &ImplicationLayout,
    margin: f64,
) -> ImplicationNumeric {
    let multipliers = layout
        .hyp_slots
        .iter()
        .map(|slot| match slot {
            HypMultSlot::Sos { block, basis } => MultiplierNumeric::Sos {
                gram: w.blocks[*block].clone(),
                basis: basis.clone(),
            },
            HypMultSlot::Free { scalars, basis } => MultiplierNumeric::Free {
                coeffs: scalars.iter().map(|&s| w.scalars[s]).collect(),
                basis: basis.clone(),
            },
        })
        .collect();
    ImplicationNumeric {
        sigma0: w.blocks[layout.sigma0_block].clone(),
        sigma0_basis: layout.sigma0_basis.clone(),
        sigma0_margin: margin,
        multipliers,
        residual: w.residual,
    }
}

/// Solves the implication program maximizing the eigenvalue margin of the
/// sigma0 block. A negative margin means the midpoint identity has no SOS
/// solution of these degrees.
pub fn solve_implication_numeric(
    target: &IPoly,
    hyps: &[(IPoly, MultiplierKind)],
) -> Result<ImplicationNumeric> {
    let (prog, layout) = build_implication_program(target, hyps);
    let (w, margin) = solve_lmi_max_margin(&prog, &[layout.sigma0_block])?;
    Ok(unpack_witness(&w, &layout, margin))
}

/// Result of a plain numeric SOS decomposition.
#[derive(Clone, Debug)]
pub struct SosDecomposition {
    pub basis: MonomialVector,
    pub gram: DMatrix<f64>,
    /// Lower bound on the Gram eigenvalues achieved by the solver.
    pub margin: f64,
    pub residual: f64,
}

/// Approximate SOS decomposition of the midpoint of `psi`:
/// `mid psi = m^T W m` with W as positive definite as possible.
/// Errors with `SdpNumerical` if no PSD Gram matrix exists numerically.
pub fn sos_decompose_numeric(psi: &IPoly) -> Result<SosDecomposition> {
    let mid = psi.midpoint();
    let (prog, layout) = build_implication_program(&mid, &[]);
    let (w, margin) = solve_lmi_max_margin(&prog, &[layout.sigma0_block])?;
    if margin < -1e-9 {
        return Err(Error::SdpNumerical(format!(
            "polynomial is not a sum of squares (best Gram eigenvalue {margin:.3e})"
        )));
    }
    Ok(SosDecomposition {
        basis: layout.sigma0_basis,
        gram: w.blocks[layout.sigma0_block].clone(),
        margin,
        residual: w.residual,
    })
}

/// Feasibility check used by tests: plain solve without margin shaping.
pub fn solve_feasibility(prog: &LmiProgram) -> Result<LmiOutcome> {
    solve_lmi(prog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::IPoly;
    use crate::rational::{parse_decimal, rat, rat_int, Rat};
    use num_traits::One;

    fn x_var() -> Vec<String> {
        vec!["x".into()]
    }

    fn xy_vars() -> Vec<String> {
        vec!["x1".into(), "x2".into()]
    }

    #[test]
    fn perfect_square_gram() {
        // x^2 + 2x + 1 = (1, x) [[1,1],[1,1]] (1, x)^T, the unique Gram
        let x = IPoly::var(x_var(), 0);
        let psi = x.mul(&x).add(&x.scale_rat(&rat_int(2))).add(&IPoly::constant(
            x_var(),
            Rat::one(),
        ));
        let d = sos_decompose_numeric(&psi).unwrap();
        assert!(d.residual <= 1e-8);
        assert!((d.gram[(0, 0)] - 1.0).abs() < 1e-6);
        assert!((d.gram[(0, 1)] - 1.0).abs() < 1e-6);
        assert!((d.gram[(1, 1)] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn negative_square_is_infeasible() {
        let x = IPoly::var(x_var(), 0);
        let psi = x.mul(&x).neg();
        assert!(sos_decompose_numeric(&psi).is_err());
    }

    #[test]
    fn example1_midpoint_gram() {
        // mid psi = 0.9574 - 1.9362 x1 - 0.3404 x2 + 1.22225 x1^2
        //           - 0.44065 x1 x2 + 1.16665 x2^2
        // displayed Gram: [[0.9574, -0.9681, -0.1702],
        //                  [-0.9681, 1.2222, -0.2203],
        //                  [-0.1702, -0.2203, 1.1667]]
        let mut psi = IPoly::zero(xy_vars());
        let add = |p: &mut IPoly, e: [u32; 2], v: &str| {
            p.add_term(
                crate::poly::Monomial(e.to_vec()),
                crate::interval::Interval::point(parse_decimal(v).unwrap()),
            );
        };
        add(&mut psi, [0, 0], "0.9574");
        add(&mut psi, [1, 0], "-1.9362");
        add(&mut psi, [0, 1], "-0.3404");
        add(&mut psi, [2, 0], "1.22225");
        add(&mut psi, [1, 1], "-0.44065");
        add(&mut psi, [0, 2], "1.16665");
        let d = sos_decompose_numeric(&psi).unwrap();
        assert_eq!(d.basis.len(), 3);
        let expect = [
            (0, 0, 0.9574),
            (0, 1, -0.9681),
            (0, 2, -0.1702),
            (1, 1, 1.2222),
            (1, 2, -0.2203),
            (2, 2, 1.1667),
        ];
        for (i, j, v) in expect {
            assert!(
                (d.gram[(i, j)] - v).abs() < 5e-4,
                "gram[{i}][{j}] = {} want {v}",
                d.gram[(i, j)]
            );
        }
        // paper reports lambda_min(W) = 0.0461
        assert!((d.margin - 0.0461).abs() < 5e-3, "margin {}", d.margin);
    }

    #[test]
    fn simple_multiplier_certificate() {
        // x >= 0 implies x + 1 >= 0: x + 1 = sigma0 + sigma1 * x with
        // sigma1 degree 0; the optimum is sigma0 = 1, sigma1 = 1.
        let x = IPoly::var(x_var(), 0);
        let target = x.add(&IPoly::constant(x_var(), Rat::one()));
        let out = solve_implication_numeric(
            &target,
            &[(x.clone(), MultiplierKind::Sos { degree: 0 })],
        )
        .unwrap();
        assert!(out.residual <= 1e-8);
        match &out.multipliers[0] {
            MultiplierNumeric::Sos { gram, .. } => {
                assert!((gram[(0, 0)] - 1.0).abs() < 1e-5);
            }
            _ => panic!("expected SOS multiplier"),
        }
    }

    #[test]
    fn free_multiplier_allows_sign_change() {
        // -x = sigma0 + lambda * x has no SOS solution with lambda SOS,
        // but lambda = -1 (free) and sigma0 = 0 works.
        let x = IPoly::var(x_var(), 0);
        let target = x.neg();
        let out = solve_implication_numeric(
            &target,
            &[(x.clone(), MultiplierKind::Free { degree: 0 })],
        )
        .unwrap();
        match &out.multipliers[0] {
            MultiplierNumeric::Free { coeffs, .. } => {
                assert!((coeffs[0] + 1.0).abs() < 1e-6, "lambda {}", coeffs[0]);
            }
            _ => panic!("expected free multiplier"),
        }
    }

    #[test]
    fn ball_implication() {
        // 1 - x^2 >= 0 implies 2 - x^2 >= 0 with sigma = 1, residual 1
        let x = IPoly::var(x_var(), 0);
        let two = IPoly::constant(x_var(), rat_int(2));
        let one = IPoly::constant(x_var(), Rat::one());
        let hyp = one.sub(&x.mul(&x));
        let target = two.sub(&x.mul(&x));
        let out = solve_implication_numeric(
            &target,
            &[(hyp, MultiplierKind::Sos { degree: 0 })],
        )
        .unwrap();
        assert!(out.residual <= 1e-8);
        assert!(out.sigma0_margin > 0.0);
    }

    #[test]
    fn scale_invariance_margin() {
        // a polynomial with strictly positive definite Gram: 1 + x^2
        let x = IPoly::var(x_var(), 0);
        let psi = x.mul(&x).add(&IPoly::constant(x_var(), Rat::one()));
        let d = sos_decompose_numeric(&psi).unwrap();
        assert!(d.margin > 0.9, "margin {}", d.margin);
    }

    #[test]
    fn degenerate_interval_target_uses_midpoint() {
        // [0.9, 1.1] x^2 decomposes through its midpoint x^2
        let mut psi = IPoly::zero(x_var());
        psi.add_term(
            crate::poly::Monomial(vec![2]),
            crate::interval::Interval::new(rat(9, 10), rat(11, 10)),
        );
        let d = sos_decompose_numeric(&psi).unwrap();
        assert!((d.gram[(1, 1)] - 1.0).abs() < 1e-6);
    }
}

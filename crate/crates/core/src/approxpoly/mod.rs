//! Rigorous polynomial enclosure of non-polynomial terms: oversampled
//! least-squares fits on a mesh and a verified interpolation error bound,
//! turning non-polynomial vector fields into interval polynomial fields.

pub mod expr;
pub mod mesh;

pub use expr::Expr;
pub use mesh::{build_mesh, Mesh};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalVector};
use crate::poly::{monomial_basis, IPoly, Monomial};
use crate::rational::{rat, rat_int, rat_to_f64, rationalize, Rat};
use num_traits::{One, Signed, Zero};

/// A fitted polynomial with its verified uniform error bound on a box:
/// |phi(x) - g(x)| <= mu for all x in the domain.
#[derive(Clone, Debug)]
pub struct EnclosedTerm {
    pub g: IPoly,
    pub mu: Rat,
    pub domain: IntervalVector,
}

/// Unweighted least-squares fit of the expression over the mesh points
/// (the oversampling precondition requires more points than coefficients).
/// Coefficients are rationalized; the fit itself is numeric, rigor enters
/// through [`error_bound`].
pub fn fit_polynomial(e: &Expr, mesh: &Mesh, degree: u32, vars: &[String]) -> Result<IPoly> {
    let n = mesh.boxv.len();
    let basis = monomial_basis(n, degree);
    let nu = basis.len();
    let m = mesh.points.len();
    if m <= nu {
        return Err(Error::UnderdeterminedFit {
            points: m,
            unknowns: nu,
        });
    }
    let mut a = nalgebra::DMatrix::zeros(m, nu);
    let mut y = nalgebra::DVector::zeros(m);
    for (r, p) in mesh.points.iter().enumerate() {
        let pf: Vec<f64> = p.iter().map(rat_to_f64).collect();
        for (c, mono) in basis.0.iter().enumerate() {
            let mut v = 1.0;
            for (i, &exp) in mono.0.iter().enumerate() {
                v *= pf[i].powi(exp as i32);
            }
            a[(r, c)] = v;
        }
        y[r] = e.eval_f64(&pf);
        if !y[r].is_finite() {
            return Err(Error::DomainViolation {
                node: "fit".into(),
                detail: "expression not finite at a mesh point".into(),
            });
        }
    }
    let svd = nalgebra::SVD::new(a, true, true);
    let coef = svd
        .solve(&y, 1e-12)
        .map_err(|e| Error::SdpNumerical(format!("least squares failed: {e}")))?;
    let mut g = IPoly::zero(vars.to_vec());
    for (c, mono) in basis.0.iter().enumerate() {
        let v = rationalize(coef[c], 100_000);
        if !v.is_zero() {
            g.add_term(mono.clone(), Interval::point(v));
        }
    }
    Ok(g)
}

/// Subdivision factor per axis when bounding the gradient: refining below
/// the mesh cells tightens beta' without touching the bound formula.
const GRAD_REFINE: usize = 4;

/// Verified uniform error bound over the mesh box:
/// mu = n/(n+1) * beta' * d + mu0, where mu0 is a certified upper bound on
/// max |e - g| over the mesh points, beta' bounds sup ||grad(e - g)||_2
/// over the whole box, and d is the mesh cell diameter.
pub fn error_bound(e: &Expr, g: &IPoly, mesh: &Mesh) -> Result<Rat> {
    let (mu, _, _) = error_bound_parts(e, g, mesh)?;
    Ok(mu)
}

pub fn error_bound_parts(e: &Expr, g: &IPoly, mesh: &Mesh) -> Result<(Rat, Rat, Rat)> {
    let n = mesh.boxv.len();
    let mut mu0 = Rat::zero();
    for p in &mesh.points {
        let ev = e.eval_point(p)?;
        let gv = g.eval_point(p);
        let dev = (ev - gv).mag();
        if dev > mu0 {
            mu0 = dev;
        }
    }
    let g_expr = Expr::from_poly(g);
    let grads: Vec<Expr> = (0..n)
        .map(|i| Expr::Sub(Box::new(e.derivative(i)), Box::new(g_expr.derivative(i))))
        .collect();
    let mut beta_sq = Rat::zero();
    for cell in &mesh.cells {
        for sub in subdivide(cell, GRAD_REFINE) {
            let mut acc = Rat::zero();
            for d in &grads {
                let m = d.eval_interval(&sub)?.mag();
                acc += &m * &m;
            }
            if acc > beta_sq {
                beta_sq = acc;
            }
        }
    }
    let beta = crate::rational::sqrt_upper(&beta_sq);
    let d = mesh.cell_diameter();
    let factor = rat(n as i64, n as i64 + 1);
    let mu = factor * &beta * d + &mu0;
    Ok((mu, mu0, beta))
}

fn subdivide(cell: &IntervalVector, parts: usize) -> Vec<IntervalVector> {
    let mut out = vec![Vec::new()];
    for iv in &cell.0 {
        let lo = iv.lo().clone();
        let width = iv.hi() - iv.lo();
        let segs: Vec<Interval> = if width.is_zero() {
            vec![iv.clone()]
        } else {
            (0..parts)
                .map(|k| {
                    let a = &lo + &width * rat(k as i64, parts as i64);
                    let b = &lo + &width * rat(k as i64 + 1, parts as i64);
                    Interval::new(a, b)
                })
                .collect()
        };
        let mut next = Vec::with_capacity(out.len() * segs.len());
        for p in &out {
            for s in &segs {
                let mut q: Vec<Interval> = p.clone();
                q.push(s.clone());
                next.push(q);
            }
        }
        out = next;
    }
    out.into_iter().map(IntervalVector).collect()
}

/// Encloses a single non-polynomial term over the sub-box of the
/// variables it mentions, then re-embeds the fit into the full space.
pub fn enclose_term(
    phi: &Expr,
    domain: &IntervalVector,
    vars: &[String],
    degree: u32,
    fit_spacing: &Rat,
    bound_spacing: &Rat,
) -> Result<EnclosedTerm> {
    let mut used = Vec::new();
    phi.vars_used(&mut used);
    used.sort_unstable();
    if used.is_empty() {
        used.push(0);
    }
    let mut map = vec![None; vars.len()];
    for (new, &old) in used.iter().enumerate() {
        map[old] = Some(new);
    }
    let sub_expr = phi.remap_vars(&map);
    let sub_box = IntervalVector(used.iter().map(|&i| domain.0[i].clone()).collect());
    let sub_vars: Vec<String> = used.iter().map(|&i| vars[i].clone()).collect();

    let fit_mesh = build_mesh(&sub_box, fit_spacing)?;
    let g_sub = fit_polynomial(&sub_expr, &fit_mesh, degree, &sub_vars)?;
    let bound_mesh = build_mesh(&sub_box, bound_spacing)?;
    let mu = error_bound(&sub_expr, &g_sub, &bound_mesh)?;
    Ok(EnclosedTerm {
        g: g_sub.embed(vars),
        mu,
        domain: domain.clone(),
    })
}

/// One component of a vector field in the separated form
/// f_i(x) = poly(x) + sum_j cofactor_j(x) * phi_j(x).
#[derive(Clone, Debug)]
pub struct FieldComponent {
    pub poly: IPoly,
    pub products: Vec<(IPoly, Expr)>,
}

/// Encloses the field componentwise: each non-polynomial factor is
/// replaced by its fit plus a symmetric error interval, multiplied
/// through the polynomial cofactor exactly.
pub fn enclose_field(
    components: &[FieldComponent],
    domain: &IntervalVector,
    vars: &[String],
    degree: u32,
    fit_spacing: &Rat,
    bound_spacing: &Rat,
) -> Result<(Vec<IPoly>, Vec<EnclosedTerm>)> {
    // identical expressions share one fit
    let mut cache: Vec<(Expr, EnclosedTerm)> = Vec::new();
    let mut terms = Vec::new();
    let mut out = Vec::new();
    for comp in components {
        let mut acc = comp.poly.clone();
        for (cof, phi) in &comp.products {
            let enclosed = match cache.iter().find(|(e, _)| e == phi) {
                Some((_, t)) => t.clone(),
                None => {
                    let t = enclose_term(phi, domain, vars, degree, fit_spacing, bound_spacing)?;
                    cache.push((phi.clone(), t.clone()));
                    terms.push(t.clone());
                    t
                }
            };
            let mut bandwidth = enclosed.g.clone();
            bandwidth.add_term(
                Monomial::constant(vars.len()),
                Interval::symmetric(enclosed.mu.clone()),
            );
            acc = acc.add(&cof.mul(&bandwidth));
        }
        out.push(acc);
    }
    Ok((out, terms))
}

/// Splits an expression into the separated field form. Errors when two
/// non-polynomial factors multiply each other.
pub fn decompose_field_expr(e: &Expr, vars: &[String]) -> Result<FieldComponent> {
    if let Some(p) = e.to_polynomial(vars) {
        return Ok(FieldComponent {
            poly: p,
            products: vec![],
        });
    }
    match e {
        Expr::Add(a, b) => {
            let fa = decompose_field_expr(a, vars)?;
            let fb = decompose_field_expr(b, vars)?;
            let mut products = fa.products;
            products.extend(fb.products);
            Ok(FieldComponent {
                poly: fa.poly.add(&fb.poly),
                products,
            })
        }
        Expr::Sub(a, b) => {
            let fa = decompose_field_expr(a, vars)?;
            let fb = decompose_field_expr(b, vars)?;
            let mut products = fa.products;
            for (c, phi) in fb.products {
                products.push((c.neg(), phi));
            }
            Ok(FieldComponent {
                poly: fa.poly.sub(&fb.poly),
                products,
            })
        }
        Expr::Neg(a) => {
            let fa = decompose_field_expr(a, vars)?;
            Ok(FieldComponent {
                poly: fa.poly.neg(),
                products: fa
                    .products
                    .into_iter()
                    .map(|(c, p)| (c.neg(), p))
                    .collect(),
            })
        }
        Expr::Mul(a, b) => {
            let (poly_side, other) = if a.to_polynomial(vars).is_some() {
                (a, b)
            } else if b.to_polynomial(vars).is_some() {
                (b, a)
            } else {
                return Err(Error::Semantic(
                    "product of two non-polynomial factors is not supported".into(),
                ));
            };
            let p = poly_side.to_polynomial(vars).unwrap();
            let fo = decompose_field_expr(other, vars)?;
            Ok(FieldComponent {
                poly: fo.poly.mul(&p),
                products: fo
                    .products
                    .into_iter()
                    .map(|(c, phi)| (c.mul(&p), phi))
                    .collect(),
            })
        }
        Expr::Div(a, b) => {
            let den = b
                .to_polynomial(vars)
                .filter(|p| p.degree() == 0 && !p.is_zero())
                .ok_or_else(|| Error::Semantic("division only by nonzero constants".into()))?;
            let inv = Rat::one()
                / den
                    .coefficient(&Monomial::constant(vars.len()))
                    .midpoint();
            let fa = decompose_field_expr(a, vars)?;
            Ok(FieldComponent {
                poly: fa.poly.scale_rat(&inv),
                products: fa
                    .products
                    .into_iter()
                    .map(|(c, p)| (c.scale_rat(&inv), p))
                    .collect(),
            })
        }
        // a bare transcendental term: cofactor 1
        _ => Ok(FieldComponent {
            poly: IPoly::zero(vars.to_vec()),
            products: vec![(
                IPoly::constant(vars.to_vec(), Rat::one()),
                e.clone(),
            )],
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_decimal;

    fn x_vars() -> Vec<String> {
        vec!["x".into()]
    }

    #[test]
    fn identity_fit_is_exact() {
        // e = x fits exactly with degree 1 over any proper mesh
        let e = Expr::Var(0);
        let dom = IntervalVector(vec![Interval::new(rat_int(-1), rat_int(1))]);
        let mesh = build_mesh(&dom, &rat(1, 4)).unwrap();
        let g = fit_polynomial(&e, &mesh, 1, &x_vars()).unwrap();
        assert_eq!(g, IPoly::var(x_vars(), 0));
        // constant 7 fits as itself
        let c = Expr::num(rat_int(7));
        let g = fit_polynomial(&c, &mesh, 0, &x_vars()).unwrap();
        assert_eq!(g, IPoly::constant(x_vars(), rat_int(7)));
    }

    #[test]
    fn underdetermined_fit_is_rejected() {
        let e = Expr::Var(0);
        let dom = IntervalVector(vec![Interval::new(rat_int(0), rat_int(1))]);
        let mesh = build_mesh(&dom, &rat_int(1)).unwrap(); // 2 points
        assert!(fit_polynomial(&e, &mesh, 3, &x_vars()).is_err());
    }

    #[test]
    fn example5_exp_fit_and_bound() {
        // exp on [-2,2], spacing 1/4, degree 3:
        // g = 0.9173 + 0.9562 x + 0.6797 x^2 + 0.2117 x^3, mu <= 0.35
        let e = Expr::Exp(Box::new(Expr::Var(0)));
        let dom = IntervalVector(vec![Interval::new(rat_int(-2), rat_int(2))]);
        let mesh = build_mesh(&dom, &rat(1, 4)).unwrap();
        let g = fit_polynomial(&e, &mesh, 3, &x_vars()).unwrap();
        let paper = [0.9173, 0.9562, 0.6797, 0.2117];
        for (k, want) in paper.iter().enumerate() {
            let got = rat_to_f64(&g.coefficient(&Monomial(vec![k as u32])).midpoint());
            assert!((got - want).abs() < 0.02, "c{k}: {got} vs {want}");
        }
        let mu = error_bound(&e, &g, &mesh).unwrap();
        let mu_f = rat_to_f64(&mu);
        assert!(mu_f <= 0.35, "mu = {mu_f}");
        // enclosure property at sampled points
        for k in 0..=1000 {
            let x = -2.0 + 4.0 * (k as f64) / 1000.0;
            let gx = g.eval_point(&[rationalize(x, 1 << 30)]);
            assert!((x.exp() - rat_to_f64(&gx.midpoint())).abs() <= mu_f + 1e-9);
        }
    }

    #[test]
    fn zero_error_fit_has_tiny_mu() {
        // e = g: only the gradient term remains and it bounds zero
        let e = Expr::Var(0);
        let dom = IntervalVector(vec![Interval::new(rat_int(0), rat_int(1))]);
        let mesh = build_mesh(&dom, &rat(1, 8)).unwrap();
        let g = fit_polynomial(&e, &mesh, 1, &x_vars()).unwrap();
        let mu = error_bound(&e, &g, &mesh).unwrap();
        assert!(mu < rat(1, 1_000_000), "mu = {mu}");
    }

    #[test]
    fn bound_formula_hand_check() {
        // e = x^2, g = 0 on [0,1], spacing 1: mu0 = 1, beta' >= 2,
        // n = 1 gives mu >= 1 + 1/2 * 2 * 1 = 2
        let e = Expr::Pow(Box::new(Expr::Var(0)), 2);
        let dom = IntervalVector(vec![Interval::new(rat_int(0), rat_int(1))]);
        let mesh = build_mesh(&dom, &rat_int(1)).unwrap();
        let g = IPoly::zero(x_vars());
        let (mu, mu0, beta) = error_bound_parts(&e, &g, &mesh).unwrap();
        assert_eq!(mu0, rat_int(1));
        assert!(beta >= rat_int(2));
        assert!(mu >= rat_int(2));
        // exact identity mu = n/(n+1) beta d + mu0
        assert_eq!(mu, rat(1, 2) * &beta * mesh.cell_diameter() + &mu0);
    }

    #[test]
    fn taylor_comparison_for_exp() {
        // the degree-3 enclosure beats the Lagrange remainder e^2 2^4/4!
        let e = Expr::Exp(Box::new(Expr::Var(0)));
        let dom = IntervalVector(vec![Interval::new(rat_int(-2), rat_int(2))]);
        let mesh = build_mesh(&dom, &rat(1, 4)).unwrap();
        let g = fit_polynomial(&e, &mesh, 3, &x_vars()).unwrap();
        let mu = error_bound(&e, &g, &mesh).unwrap();
        let taylor = parse_decimal("4.93").unwrap();
        assert!(mu < taylor);
    }

    #[test]
    fn purely_polynomial_field_is_unchanged() {
        let vars = vec!["x1".to_string(), "x2".to_string()];
        let x1 = IPoly::var(vars.clone(), 0);
        let x2 = IPoly::var(vars.clone(), 1);
        let f = x2.sub(&x1.mul(&x1));
        let comp = FieldComponent {
            poly: f.clone(),
            products: vec![],
        };
        let dom = IntervalVector(vec![
            Interval::new(rat_int(-1), rat_int(1)),
            Interval::new(rat_int(-1), rat_int(1)),
        ]);
        let (out, terms) =
            enclose_field(&[comp], &dom, &vars, 2, &rat(1, 4), &rat(1, 4)).unwrap();
        assert_eq!(out[0], f);
        assert!(terms.is_empty());
    }

    #[test]
    fn decompose_mixed_expression() {
        // 0.5*(exp(x) - 1) = -1/2 + (1/2) exp(x)
        let vars = x_vars();
        let e = Expr::Mul(
            Box::new(Expr::num(rat(1, 2))),
            Box::new(Expr::Sub(
                Box::new(Expr::Exp(Box::new(Expr::Var(0)))),
                Box::new(Expr::num(Rat::one())),
            )),
        );
        let fc = decompose_field_expr(&e, &vars).unwrap();
        assert_eq!(fc.poly, IPoly::constant(vars.clone(), rat(-1, 2)));
        assert_eq!(fc.products.len(), 1);
        assert_eq!(fc.products[0].0, IPoly::constant(vars.clone(), rat(1, 2)));
        // sqrt(x)*sqrt(x) is rejected
        let bad = Expr::Mul(
            Box::new(Expr::Sqrt(Box::new(Expr::Var(0)))),
            Box::new(Expr::Sqrt(Box::new(Expr::Var(0)))),
        );
        assert!(decompose_field_expr(&bad, &vars).is_err());
    }

    #[test]
    fn term_enclosure_soundness_sampling() {
        // sqrt over [1/4, 4]: the enclosure property holds at many samples
        let e = Expr::Sqrt(Box::new(Expr::Var(0)));
        let dom = IntervalVector(vec![Interval::new(rat(1, 4), rat_int(4))]);
        let t = enclose_term(&e, &dom, &x_vars(), 2, &rat(1, 8), &rat(1, 16)).unwrap();
        let mu = rat_to_f64(&t.mu);
        for k in 0..=2000 {
            let x = 0.25 + 3.75 * (k as f64) / 2000.0;
            let g = rat_to_f64(&t.g.eval_point(&[rationalize(x, 1 << 30)]).midpoint());
            assert!((x.sqrt() - g).abs() <= mu + 1e-9, "at {x}");
        }
    }
}

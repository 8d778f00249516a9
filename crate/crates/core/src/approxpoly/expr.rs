//! Expression trees for non-polynomial right-hand sides, with certified
//! interval evaluation and symbolic differentiation.

use crate::error::{Error, Result};
use crate::interval::functions::{
    cos_interval, exp_interval, ln_interval, sin_interval, sqrt_interval,
};
use crate::interval::{Interval, IntervalVector};
use crate::poly::{IPoly, Monomial};
use crate::rational::{rat_to_f64, Rat};
use num_traits::{One, Zero};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Interval),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Sqrt(Box<Expr>),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Ln(Box<Expr>),
}

impl Expr {
    pub fn num(v: Rat) -> Expr {
        Expr::Const(Interval::point(v))
    }

    /// True when no interval-valued constant appears in the tree.
    pub fn is_exact(&self) -> bool {
        match self {
            Expr::Const(c) => c.is_point(),
            Expr::Var(_) => true,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.is_exact() && b.is_exact()
            }
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Sqrt(a)
            | Expr::Exp(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Ln(a) => a.is_exact(),
        }
    }

    /// Enclosure of the range over a box (inclusion property holds by
    /// construction of the interval operations).
    pub fn eval_interval(&self, x: &IntervalVector) -> Result<Interval> {
        Ok(match self {
            Expr::Const(v) => v.clone(),
            Expr::Var(i) => x.0[*i].clone(),
            Expr::Add(a, b) => a.eval_interval(x)? + b.eval_interval(x)?,
            Expr::Sub(a, b) => a.eval_interval(x)? - b.eval_interval(x)?,
            Expr::Neg(a) => -a.eval_interval(x)?,
            Expr::Mul(a, b) => a.eval_interval(x)? * b.eval_interval(x)?,
            Expr::Div(a, b) => {
                let den = b.eval_interval(x)?;
                a.eval_interval(x)?
                    .checked_div(&den)
                    .map_err(|_| Error::DomainViolation {
                        node: "div".into(),
                        detail: "denominator range contains zero".into(),
                    })?
            }
            Expr::Pow(a, k) => a.eval_interval(x)?.pow(*k),
            Expr::Sqrt(a) => sqrt_interval(&a.eval_interval(x)?)?,
            Expr::Exp(a) => exp_interval(&a.eval_interval(x)?),
            Expr::Sin(a) => sin_interval(&a.eval_interval(x)?),
            Expr::Cos(a) => cos_interval(&a.eval_interval(x)?),
            Expr::Ln(a) => ln_interval(&a.eval_interval(x)?)?,
        })
    }

    /// Certified enclosure at a rational point.
    pub fn eval_point(&self, x: &[Rat]) -> Result<Interval> {
        self.eval_interval(&IntervalVector::from_points(x))
    }

    /// Plain float evaluation (used only to seed fits).
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(v) => rat_to_f64(&v.midpoint()),
            Expr::Var(i) => x[*i],
            Expr::Add(a, b) => a.eval_f64(x) + b.eval_f64(x),
            Expr::Sub(a, b) => a.eval_f64(x) - b.eval_f64(x),
            Expr::Neg(a) => -a.eval_f64(x),
            Expr::Mul(a, b) => a.eval_f64(x) * b.eval_f64(x),
            Expr::Div(a, b) => a.eval_f64(x) / b.eval_f64(x),
            Expr::Pow(a, k) => a.eval_f64(x).powi(*k as i32),
            Expr::Sqrt(a) => a.eval_f64(x).sqrt(),
            Expr::Exp(a) => a.eval_f64(x).exp(),
            Expr::Sin(a) => a.eval_f64(x).sin(),
            Expr::Cos(a) => a.eval_f64(x).cos(),
            Expr::Ln(a) => a.eval_f64(x).ln(),
        }
    }

    /// Symbolic partial derivative (every node type has one).
    pub fn derivative(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::num(Rat::zero()),
            Expr::Var(i) => Expr::num(if *i == var { Rat::one() } else { Rat::zero() }),
            Expr::Add(a, b) => Expr::Add(
                Box::new(a.derivative(var)),
                Box::new(b.derivative(var)),
            ),
            Expr::Sub(a, b) => Expr::Sub(
                Box::new(a.derivative(var)),
                Box::new(b.derivative(var)),
            ),
            Expr::Neg(a) => Expr::Neg(Box::new(a.derivative(var))),
            Expr::Mul(a, b) => Expr::Add(
                Box::new(Expr::Mul(Box::new(a.derivative(var)), b.clone())),
                Box::new(Expr::Mul(a.clone(), Box::new(b.derivative(var)))),
            ),
            Expr::Div(a, b) => Expr::Div(
                Box::new(Expr::Sub(
                    Box::new(Expr::Mul(Box::new(a.derivative(var)), b.clone())),
                    Box::new(Expr::Mul(a.clone(), Box::new(b.derivative(var)))),
                )),
                Box::new(Expr::Pow(b.clone(), 2)),
            ),
            Expr::Pow(a, k) => {
                if *k == 0 {
                    Expr::num(Rat::zero())
                } else {
                    Expr::Mul(
                        Box::new(Expr::Mul(
                            Box::new(Expr::num(Rat::from_integer((*k).into()))),
                            Box::new(Expr::Pow(a.clone(), k - 1)),
                        )),
                        Box::new(a.derivative(var)),
                    )
                }
            }
            Expr::Sqrt(a) => Expr::Div(
                Box::new(a.derivative(var)),
                Box::new(Expr::Mul(
                    Box::new(Expr::num(Rat::from_integer(2.into()))),
                    Box::new(Expr::Sqrt(a.clone())),
                )),
            ),
            Expr::Exp(a) => Expr::Mul(Box::new(a.derivative(var)), Box::new(self.clone())),
            Expr::Sin(a) => Expr::Mul(Box::new(a.derivative(var)), Box::new(Expr::Cos(a.clone()))),
            Expr::Cos(a) => Expr::Neg(Box::new(Expr::Mul(
                Box::new(a.derivative(var)),
                Box::new(Expr::Sin(a.clone())),
            ))),
            Expr::Ln(a) => Expr::Div(Box::new(a.derivative(var)), a.clone()),
        }
    }

    /// Indices of the variables this expression mentions.
    pub fn vars_used(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(i) => {
                if !out.contains(i) {
                    out.push(*i);
                }
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.vars_used(out);
                b.vars_used(out);
            }
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Sqrt(a)
            | Expr::Exp(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Ln(a) => a.vars_used(out),
        }
    }

    /// Renames variable indices (`map[old] = Some(new)`); panics on a
    /// mention of an unmapped variable.
    pub fn remap_vars(&self, map: &[Option<usize>]) -> Expr {
        match self {
            Expr::Const(v) => Expr::Const(v.clone()),
            Expr::Var(i) => Expr::Var(map[*i].expect("variable must be mapped")),
            Expr::Add(a, b) => Expr::Add(
                Box::new(a.remap_vars(map)),
                Box::new(b.remap_vars(map)),
            ),
            Expr::Sub(a, b) => Expr::Sub(
                Box::new(a.remap_vars(map)),
                Box::new(b.remap_vars(map)),
            ),
            Expr::Neg(a) => Expr::Neg(Box::new(a.remap_vars(map))),
            Expr::Mul(a, b) => Expr::Mul(
                Box::new(a.remap_vars(map)),
                Box::new(b.remap_vars(map)),
            ),
            Expr::Div(a, b) => Expr::Div(
                Box::new(a.remap_vars(map)),
                Box::new(b.remap_vars(map)),
            ),
            Expr::Pow(a, k) => Expr::Pow(Box::new(a.remap_vars(map)), *k),
            Expr::Sqrt(a) => Expr::Sqrt(Box::new(a.remap_vars(map))),
            Expr::Exp(a) => Expr::Exp(Box::new(a.remap_vars(map))),
            Expr::Sin(a) => Expr::Sin(Box::new(a.remap_vars(map))),
            Expr::Cos(a) => Expr::Cos(Box::new(a.remap_vars(map))),
            Expr::Ln(a) => Expr::Ln(Box::new(a.remap_vars(map))),
        }
    }

    /// Folds to an exact polynomial when the tree is polynomial
    /// (divisions only by nonzero constants).
    pub fn to_polynomial(&self, vars: &[String]) -> Option<IPoly> {
        match self {
            Expr::Const(v) => {
                let mut p = IPoly::zero(vars.to_vec());
                p.add_term(Monomial::constant(vars.len()), v.clone());
                Some(p)
            }
            Expr::Var(i) => Some(IPoly::var(vars.to_vec(), *i)),
            Expr::Add(a, b) => Some(a.to_polynomial(vars)?.add(&b.to_polynomial(vars)?)),
            Expr::Sub(a, b) => Some(a.to_polynomial(vars)?.sub(&b.to_polynomial(vars)?)),
            Expr::Neg(a) => Some(a.to_polynomial(vars)?.neg()),
            Expr::Mul(a, b) => Some(a.to_polynomial(vars)?.mul(&b.to_polynomial(vars)?)),
            Expr::Div(a, b) => {
                let den = b.to_polynomial(vars)?;
                if den.degree() == 0 && !den.is_zero() {
                    let c = den.coefficient(&Monomial::constant(vars.len()));
                    if c.contains_value(&Rat::zero()) {
                        return None;
                    }
                    let inv = Interval::point(Rat::one()).checked_div(&c).ok()?;
                    Some(a.to_polynomial(vars)?.scale(&inv))
                } else {
                    None
                }
            }
            Expr::Pow(a, k) => {
                let base = a.to_polynomial(vars)?;
                let mut acc = IPoly::constant(vars.to_vec(), Rat::one());
                for _ in 0..*k {
                    acc = acc.mul(&base);
                }
                Some(acc)
            }
            _ => None,
        }
    }

    /// Conversion from an exact polynomial (midpoints are taken, so this
    /// is meant for exact inputs like fitted approximants).
    pub fn from_poly(p: &IPoly) -> Expr {
        let mut acc: Option<Expr> = None;
        for (m, c) in p.terms() {
            let mut term = Expr::Const(c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    term = Expr::Mul(Box::new(term), Box::new(Expr::Pow(Box::new(Expr::Var(i)), e)));
                }
            }
            acc = Some(match acc {
                None => term,
                Some(a) => Expr::Add(Box::new(a), Box::new(term)),
            });
        }
        acc.unwrap_or_else(|| Expr::num(Rat::zero()))
    }

    /// Infix rendering with the given variable names.
    pub fn render(&self, vars: &[String]) -> String {
        fn prec(e: &Expr) -> u8 {
            match e {
                Expr::Add(..) | Expr::Sub(..) => 1,
                Expr::Mul(..) | Expr::Div(..) => 2,
                Expr::Neg(..) => 3,
                Expr::Pow(..) => 4,
                _ => 5,
            }
        }
        fn wrap(e: &Expr, vars: &[String], min_prec: u8) -> String {
            let s = e.render(vars);
            if prec(e) < min_prec {
                format!("({s})")
            } else {
                s
            }
        }
        match self {
            Expr::Const(v) => {
                if v.is_point() {
                    let p = v.lo();
                    if p.denom().is_one() {
                        format!("{}", p.numer())
                    } else {
                        crate::rational::rat_to_cert_string(p)
                    }
                } else {
                    format!("{v}")
                }
            }
            Expr::Var(i) => vars[*i].clone(),
            Expr::Add(a, b) => format!("{} + {}", wrap(a, vars, 1), wrap(b, vars, 1)),
            Expr::Sub(a, b) => format!("{} - {}", wrap(a, vars, 1), wrap(b, vars, 2)),
            Expr::Neg(a) => format!("-{}", wrap(a, vars, 4)),
            Expr::Mul(a, b) => format!("{}*{}", wrap(a, vars, 2), wrap(b, vars, 3)),
            Expr::Div(a, b) => format!("{}/{}", wrap(a, vars, 2), wrap(b, vars, 5)),
            Expr::Pow(a, k) => format!("{}^{}", wrap(a, vars, 5), k),
            Expr::Sqrt(a) => format!("sqrt({})", a.render(vars)),
            Expr::Exp(a) => format!("exp({})", a.render(vars)),
            Expr::Sin(a) => format!("sin({})", a.render(vars)),
            Expr::Cos(a) => format!("cos({})", a.render(vars)),
            Expr::Ln(a) => format!("ln({})", a.render(vars)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn boxv(lo: i64, hi: i64) -> IntervalVector {
        IntervalVector(vec![Interval::new(rat_int(lo), rat_int(hi))])
    }

    #[test]
    fn interval_evaluation_examples() {
        // exp over [0,1] contains [1, 2.71828]
        let e = Expr::Exp(Box::new(Expr::Var(0)));
        let r = e.eval_interval(&boxv(0, 1)).unwrap();
        assert!(rat_to_f64(r.lo()) <= 1.0 && rat_to_f64(r.hi()) >= 2.71828);
        // sqrt over [4, 9] is [2, 3]
        let s = Expr::Sqrt(Box::new(Expr::Var(0)));
        let r = s.eval_interval(&boxv(4, 9)).unwrap();
        assert_eq!(r, Interval::new(rat_int(2), rat_int(3)));
        // cos over [0, pi-ish] reaches both -1 and 1
        let c = Expr::Cos(Box::new(Expr::Var(0)));
        let dom = IntervalVector(vec![Interval::new(Rat::zero(), rat(31416, 10000))]);
        let r = c.eval_interval(&dom).unwrap();
        assert_eq!(rat_to_f64(r.lo()), -1.0);
        assert_eq!(rat_to_f64(r.hi()), 1.0);
    }

    #[test]
    fn domain_violations_name_the_node() {
        let s = Expr::Sqrt(Box::new(Expr::Var(0)));
        let err = s.eval_interval(&boxv(-1, 1)).unwrap_err();
        assert!(err.to_string().contains("sqrt"));
        let l = Expr::Ln(Box::new(Expr::Var(0)));
        assert!(l.eval_interval(&boxv(0, 1)).is_err());
    }

    #[test]
    fn derivative_chain_rule() {
        // d/dx exp(x^2) = 2x exp(x^2), check numerically at x = 0.7
        let e = Expr::Exp(Box::new(Expr::Pow(Box::new(Expr::Var(0)), 2)));
        let d = e.derivative(0);
        let x = 0.7f64;
        let expected = 2.0 * x * (x * x).exp();
        assert!((d.eval_f64(&[x]) - expected).abs() < 1e-12);
    }

    #[test]
    fn polynomial_folding_roundtrip() {
        let vars = vec!["x".to_string(), "y".to_string()];
        // (x + 2)*y - y^2/2
        let e = Expr::Sub(
            Box::new(Expr::Mul(
                Box::new(Expr::Add(
                    Box::new(Expr::Var(0)),
                    Box::new(Expr::num(rat_int(2))),
                )),
                Box::new(Expr::Var(1)),
            )),
            Box::new(Expr::Div(
                Box::new(Expr::Pow(Box::new(Expr::Var(1)), 2)),
                Box::new(Expr::num(rat_int(2))),
            )),
        );
        let p = e.to_polynomial(&vars).unwrap();
        assert_eq!(p.degree(), 2);
        let back = Expr::from_poly(&p);
        for (a, b) in [(0.3, -1.2), (2.0, 0.5)] {
            assert!((back.eval_f64(&[a, b]) - e.eval_f64(&[a, b])).abs() < 1e-12);
        }
        // sqrt is not polynomial
        assert!(Expr::Sqrt(Box::new(Expr::Var(0))).to_polynomial(&vars).is_none());
    }
}

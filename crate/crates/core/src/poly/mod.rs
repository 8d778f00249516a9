//! Sparse multivariate polynomials with interval (or exact rational)
//! coefficients, monomial bases, Lie derivatives, and the Gram-form
//! linearization used by the SOS machinery.

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalMatrix, IntervalVector};
use crate::linalg::{RatMatrix, SymRationalMatrix};
use crate::rational::{rat_to_cert_string, Rat};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Exponent vector, one entry per variable. Ordered graded-lex:
/// lower total degree first, then earlier variables carry more weight,
/// so for two variables the order reads 1, x1, x2, x1^2, x1*x2, x2^2.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn constant(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        assert_eq!(self.0.len(), other.0.len());
        Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn render(&self, vars: &[String]) -> String {
        let mut parts = Vec::new();
        for (i, &e) in self.0.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(vars[i].clone()),
                _ => parts.push(format!("{}^{}", vars[i], e)),
            }
        }
        parts.join("*")
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Ordered list of distinct monomials (graded-lex).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialVector(pub Vec<Monomial>);

impl MonomialVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// All monomials in `nvars` variables of total degree at most `d`,
/// in graded-lex order; C(nvars + d, nvars) entries.
pub fn monomial_basis(nvars: usize, d: u32) -> MonomialVector {
    fn rec(nvars: usize, d: u32, idx: usize, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if idx == nvars {
            out.push(Monomial(cur.clone()));
            return;
        }
        let used: u32 = cur.iter().sum();
        for e in 0..=(d - used) {
            cur.push(e);
            rec(nvars, d, idx + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(nvars, d, 0, &mut Vec::new(), &mut out);
    out.sort();
    MonomialVector(out)
}

/// Sparse multivariate polynomial with interval coefficients over a named,
/// ordered variable list. Zero coefficients are never stored; a polynomial
/// whose coefficients are all degenerate intervals is "exact".
#[derive(Clone, PartialEq)]
pub struct IPoly {
    vars: Vec<String>,
    terms: BTreeMap<Monomial, Interval>,
}

impl fmt::Debug for IPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl IPoly {
    pub fn zero(vars: Vec<String>) -> Self {
        IPoly {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: Vec<String>, c: Rat) -> Self {
        let mut p = IPoly::zero(vars);
        p.add_term(
            Monomial::constant(p.vars.len()),
            Interval::point(c),
        );
        p
    }

    pub fn var(vars: Vec<String>, i: usize) -> Self {
        let mut p = IPoly::zero(vars);
        let m = Monomial::var(p.vars.len(), i);
        p.add_term(m, Interval::point(Rat::one()));
        p
    }

    pub fn from_terms(vars: Vec<String>, terms: Vec<(Monomial, Interval)>) -> Self {
        let mut p = IPoly::zero(vars);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Interval)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every coefficient is a point interval.
    pub fn is_exact(&self) -> bool {
        self.terms.values().all(|c| c.is_point())
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.total_degree())
            .max()
            .unwrap_or(0)
    }

    pub fn coefficient(&self, m: &Monomial) -> Interval {
        self.terms.get(m).cloned().unwrap_or_else(Interval::zero)
    }

    /// Accumulates a term, dropping the entry if it becomes [0, 0].
    pub fn add_term(&mut self, m: Monomial, c: Interval) {
        assert_eq!(m.0.len(), self.vars.len());
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&m) {
            None => {
                self.terms.insert(m, c);
            }
            Some(old) => {
                let sum = old + c;
                if !sum.is_zero() {
                    self.terms.insert(m, sum);
                }
            }
        }
    }

    /// Embeds this polynomial into a superset variable list.
    pub fn embed(&self, vars: &[String]) -> IPoly {
        if self.vars == vars {
            return self.clone();
        }
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|v| {
                vars.iter()
                    .position(|w| w == v)
                    .expect("embed target must contain all variables")
            })
            .collect();
        let mut out = IPoly::zero(vars.to_vec());
        for (m, c) in &self.terms {
            let mut e = vec![0u32; vars.len()];
            for (i, &exp) in m.0.iter().enumerate() {
                e[map[i]] = exp;
            }
            out.add_term(Monomial(e), c.clone());
        }
        out
    }

    /// Common variable list (stable union), embedding both operands.
    pub fn unify(a: &IPoly, b: &IPoly) -> (IPoly, IPoly) {
        if a.vars == b.vars {
            return (a.clone(), b.clone());
        }
        let mut vars = a.vars.clone();
        for v in &b.vars {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
        (a.embed(&vars), b.embed(&vars))
    }

    pub fn add(&self, other: &IPoly) -> IPoly {
        let (mut a, b) = IPoly::unify(self, other);
        for (m, c) in b.terms {
            a.add_term(m, c);
        }
        a
    }

    pub fn sub(&self, other: &IPoly) -> IPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> IPoly {
        IPoly {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &IPoly) -> IPoly {
        let (a, b) = IPoly::unify(self, other);
        let mut out = IPoly::zero(a.vars.clone());
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                out.add_term(ma.mul(mb), ca.mul(cb));
            }
        }
        out
    }

    pub fn scale(&self, c: &Interval) -> IPoly {
        if c.is_zero() {
            return IPoly::zero(self.vars.clone());
        }
        let mut out = IPoly::zero(self.vars.clone());
        for (m, coeff) in &self.terms {
            out.add_term(m.clone(), coeff.mul(c));
        }
        out
    }

    pub fn scale_rat(&self, c: &Rat) -> IPoly {
        self.scale(&Interval::point(c.clone()))
    }

    pub fn partial_derivative(&self, var: usize) -> IPoly {
        let mut out = IPoly::zero(self.vars.clone());
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[var] = e - 1;
            out.add_term(
                Monomial(exps),
                c.mul_rat(&Rat::from_integer(e.into())),
            );
        }
        out
    }

    /// Midpoint polynomial: every coefficient collapsed to its midpoint.
    pub fn midpoint(&self) -> IPoly {
        let mut out = IPoly::zero(self.vars.clone());
        for (m, c) in &self.terms {
            out.add_term(m.clone(), Interval::point(c.midpoint()));
        }
        out
    }

    /// Evaluation at a rational point (interval result because the
    /// coefficients may be intervals).
    pub fn eval_point(&self, x: &[Rat]) -> Interval {
        assert_eq!(x.len(), self.vars.len());
        let mut acc = Interval::zero();
        for (m, c) in &self.terms {
            let mut mono = Rat::one();
            for (i, &e) in m.0.iter().enumerate() {
                for _ in 0..e {
                    mono *= &x[i];
                }
            }
            acc = acc + c.mul_rat(&mono);
        }
        acc
    }

    /// Interval-arithmetic enclosure of the range over a box.
    pub fn eval_box(&self, x: &IntervalVector) -> Interval {
        assert_eq!(x.len(), self.vars.len());
        let mut acc = Interval::zero();
        for (m, c) in &self.terms {
            let mut mono = Interval::point(Rat::one());
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    mono = mono * x.0[i].pow(e);
                }
            }
            acc = acc + c.mul(&mono);
        }
        acc
    }

    /// Substitutes `subs[i]` for variable i (all substitutions must share a
    /// variable list). Used for transition reset maps.
    pub fn substitute(&self, subs: &[IPoly]) -> IPoly {
        assert_eq!(subs.len(), self.vars.len());
        let out_vars = if subs.is_empty() {
            self.vars.clone()
        } else {
            subs[0].vars.clone()
        };
        let mut out = IPoly::zero(out_vars.clone());
        for (m, c) in &self.terms {
            let mut term = IPoly::constant(out_vars.clone(), Rat::one());
            for (i, &e) in m.0.iter().enumerate() {
                for _ in 0..e {
                    term = term.mul(&subs[i]);
                }
            }
            out = out.add(&term.scale(c));
        }
        out
    }

    /// Evaluates a subset of variables at rational values, producing a
    /// polynomial over the remaining ones.
    pub fn eval_vars(&self, assignments: &[(usize, Rat)]) -> IPoly {
        let mut keep: Vec<usize> = (0..self.vars.len()).collect();
        for (i, _) in assignments {
            keep.retain(|k| k != i);
        }
        let new_vars: Vec<String> = keep.iter().map(|&k| self.vars[k].clone()).collect();
        let mut out = IPoly::zero(new_vars);
        for (m, c) in &self.terms {
            let mut factor = Rat::one();
            for (i, v) in assignments {
                for _ in 0..m.0[*i] {
                    factor *= v;
                }
            }
            let exps: Vec<u32> = keep.iter().map(|&k| m.0[k]).collect();
            out.add_term(Monomial(exps), c.mul_rat(&factor));
        }
        out
    }

    /// Outward-rounds every coefficient to bounded denominators; the result
    /// contains this polynomial, so downstream certification stays sound.
    /// Exact (point) coefficients are left untouched.
    pub fn outward_round(&self, max_den: &num_bigint::BigInt) -> IPoly {
        let mut out = IPoly::zero(self.vars.clone());
        for (m, c) in &self.terms {
            let rounded = if c.is_point() {
                c.clone()
            } else {
                c.outward_round(max_den)
            };
            out.add_term(m.clone(), rounded);
        }
        out
    }
}

/// Lie derivative of `phi` along the vector field: sum of
/// d(phi)/dx_i * field_i. The field components may mention extra
/// variables (uncertain parameters); variable lists are unified.
pub fn lie_derivative(phi: &IPoly, field: &[IPoly]) -> IPoly {
    assert_eq!(
        field.len(),
        phi.nvars(),
        "field length must equal the variable count of phi"
    );
    let mut acc: Option<IPoly> = None;
    for (i, f) in field.iter().enumerate() {
        let term = phi.partial_derivative(i).mul(f);
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term),
        });
    }
    acc.unwrap_or_else(|| IPoly::zero(phi.vars().to_vec()))
}

/// Expands the quadratic form m(x)^T W m(x) with a rational Gram matrix.
pub fn gram_to_poly(m: &MonomialVector, w: &SymRationalMatrix, vars: &[String]) -> IPoly {
    assert_eq!(m.len(), w.order(), "Gram order must match basis length");
    let mut out = IPoly::zero(vars.to_vec());
    for i in 0..m.len() {
        for j in i..m.len() {
            let coef = if i == j {
                w.at(i, j).clone()
            } else {
                w.at(i, j) * Rat::from_integer(2.into())
            };
            if coef.is_zero() {
                continue;
            }
            out.add_term(m.0[i].mul(&m.0[j]), Interval::point(coef));
        }
    }
    out
}

/// Expands the quadratic form with an interval Gram matrix; each matched
/// coefficient is the exact hull over symmetric members W in [W].
pub fn gram_to_poly_interval(m: &MonomialVector, w: &IntervalMatrix, vars: &[String]) -> IPoly {
    assert_eq!(m.len(), w.rows);
    let mut out = IPoly::zero(vars.to_vec());
    let two = Rat::from_integer(2.into());
    for i in 0..m.len() {
        for j in i..m.len() {
            let coef = if i == j {
                w.at(i, j).clone()
            } else {
                w.at(i, j).mul_rat(&two)
            };
            if coef.is_zero() {
                continue;
            }
            out.add_term(m.0[i].mul(&m.0[j]), coef);
        }
    }
    out
}

/// Upper-triangular unknown ordering for a symmetric k x k matrix:
/// (0,0), (0,1), ..., (0,k-1), (1,1), ..., (k-1,k-1).
pub fn upper_triangle_indices(k: usize) -> Vec<(usize, usize)> {
    let mut idx = Vec::with_capacity(k * (k + 1) / 2);
    for i in 0..k {
        for j in i..k {
            idx.push((i, j));
        }
    }
    idx
}

/// Result of coefficient matching: the linear system `A w = [v]` over the
/// upper-triangular unknowns of a symmetric correction matrix, with the
/// matched monomials recorded in row order.
pub struct CoefficientMatch {
    pub a: RatMatrix,
    pub v: IntervalVector,
    pub row_monomials: Vec<Monomial>,
}

/// Builds the linear system tying a symmetric correction Delta W to the
/// coefficient gap `target - m^T W0 m`. Row order is the graded-lex order
/// of the product span; an off-diagonal unknown w_ij feeds 2 w_ij into its
/// matched coefficient.
pub fn coefficient_match(
    target: &IPoly,
    m: &MonomialVector,
    w0: &SymRationalMatrix,
) -> Result<CoefficientMatch> {
    let k = m.len();
    if w0.order() != k {
        return Err(Error::DimensionMismatch(
            "Gram order must match basis length".into(),
        ));
    }
    // product span of the basis
    let mut span: Vec<Monomial> = Vec::new();
    for i in 0..k {
        for j in i..k {
            let prod = m.0[i].mul(&m.0[j]);
            if !span.contains(&prod) {
                span.push(prod);
            }
        }
    }
    span.sort();
    for (mono, _) in target.terms() {
        if !span.contains(mono) {
            return Err(Error::MonomialOutsideSpan(format!("{:?}", mono.0)));
        }
    }
    let residual = target.sub(&gram_to_poly(m, w0, target.vars()));
    let unknowns = upper_triangle_indices(k);
    let mut a = RatMatrix::zeros(span.len(), unknowns.len());
    let two = Rat::from_integer(2.into());
    for (col, (i, j)) in unknowns.iter().enumerate() {
        let prod = m.0[*i].mul(&m.0[*j]);
        let row = span.binary_search(&prod).unwrap();
        let coef = if i == j { Rat::one() } else { two.clone() };
        let v = a.at(row, col) + coef;
        a.set(row, col, v);
    }
    let v = IntervalVector(span.iter().map(|mono| residual.coefficient(mono)).collect());
    Ok(CoefficientMatch {
        a,
        v,
        row_monomials: span,
    })
}

impl fmt::Display for IPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let mono = m.render(&self.vars);
            let piece = if c.is_point() {
                let v = c.lo();
                let (sign, mag) = if v.is_negative() {
                    ("-", -v.clone())
                } else {
                    ("+", v.clone())
                };
                let coef_str = if mag.is_one() && !mono.is_empty() {
                    String::new()
                } else if mag.denom().is_one() {
                    mag.numer().to_string()
                } else {
                    rat_to_cert_string(&mag)
                };
                let body = match (coef_str.is_empty(), mono.is_empty()) {
                    (true, false) => mono.clone(),
                    (false, true) => coef_str,
                    (false, false) => format!("{coef_str}*{mono}"),
                    (true, true) => "1".to_string(),
                };
                (sign, body)
            } else {
                let body = if mono.is_empty() {
                    format!("{c}")
                } else {
                    format!("{c}*{mono}")
                };
                ("+", body)
            };
            if first {
                if piece.0 == "-" {
                    write!(f, "-{}", piece.1)?;
                } else {
                    write!(f, "{}", piece.1)?;
                }
                first = false;
            } else {
                write!(f, " {} {}", piece.0, piece.1)?;
            }
        }
        Ok(())
    }
}

//! Hybrid-system descriptions: data model, text format, radius
//! classification with uncertainty substitution, and the midpoint system.

pub mod parse;

pub use parse::{parse_expression, parse_polynomial, parse_system};

use crate::approxpoly::{decompose_field_expr, enclose_field, Expr, FieldComponent};
use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalVector};
use crate::poly::{IPoly, Monomial};
use crate::rational::{rat, rat_to_cert_string, Rat};
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Per-location approximation parameters for non-polynomial fields.
#[derive(Clone, Debug)]
pub struct ApproxHints {
    pub degree: u32,
    pub fit_spacing: Rat,
    pub bound_spacing: Rat,
}

#[derive(Clone, Debug)]
pub enum FieldRhs {
    Poly(IPoly),
    Expr(Expr),
}

#[derive(Clone, Debug)]
pub struct Location {
    pub name: String,
    /// Conjunction of polynomial inequalities p >= 0.
    pub invariant: Vec<IPoly>,
    /// One right-hand side per system variable.
    pub field: Vec<FieldRhs>,
    pub approx_hints: Option<ApproxHints>,
}

#[derive(Clone, Debug)]
pub struct ResolvedTransition {
    pub from: usize,
    pub to: usize,
    pub guard: Vec<IPoly>,
    /// Polynomial update per variable (identity when omitted in the file).
    pub reset: Vec<IPoly>,
}

#[derive(Clone, Debug)]
pub struct HybridSystemDesc {
    pub vars: Vec<String>,
    pub locations: Vec<Location>,
    pub initial_location: usize,
    pub init: Vec<IPoly>,
    pub transitions: Vec<ResolvedTransition>,
    pub unsafe_sets: Vec<(usize, Vec<IPoly>)>,
}

/// An uncertainty replacing a wide interval coefficient, with the range
/// constraint theta(u) = (u - lo)(hi - u) >= 0.
#[derive(Clone, Debug)]
pub struct UncertainParam {
    pub name: String,
    pub lo: Rat,
    pub hi: Rat,
}

impl UncertainParam {
    /// (u - lo)(hi - u) as a polynomial over the given variable list.
    pub fn constraint(&self, vars: &[String]) -> IPoly {
        let idx = vars
            .iter()
            .position(|v| v == &self.name)
            .expect("uncertainty variable must be declared");
        let u = IPoly::var(vars.to_vec(), idx);
        let lo = IPoly::constant(vars.to_vec(), self.lo.clone());
        let hi = IPoly::constant(vars.to_vec(), self.hi.clone());
        u.sub(&lo).mul(&hi.sub(&u))
    }
}

impl HybridSystemDesc {
    pub fn location(&self, idx: usize) -> &Location {
        &self.locations[idx]
    }

    pub fn is_polynomial(&self) -> bool {
        self.locations
            .iter()
            .all(|l| l.field.iter().all(|f| matches!(f, FieldRhs::Poly(_))))
    }

    /// Extracts an axis-aligned box from a location invariant consisting of
    /// per-variable linear bounds. Used for meshing.
    pub fn invariant_box(&self, loc: usize) -> Result<IntervalVector> {
        let inv = &self.locations[loc].invariant;
        let n = self.vars.len();
        let mut lo: Vec<Option<Rat>> = vec![None; n];
        let mut hi: Vec<Option<Rat>> = vec![None; n];
        for p in inv {
            let mut var_idx = None;
            let mut linear = true;
            for (m, _) in p.terms() {
                if m.is_constant() {
                    continue;
                }
                if m.total_degree() == 1 {
                    let i = m.0.iter().position(|&e| e == 1).unwrap();
                    if var_idx.is_some() && var_idx != Some(i) {
                        linear = false;
                    }
                    var_idx = Some(i);
                } else {
                    linear = false;
                }
            }
            let (Some(i), true) = (var_idx, linear) else {
                return Err(Error::Semantic(format!(
                    "location `{}` invariant is not an axis-aligned box",
                    self.locations[loc].name
                )));
            };
            let c1 = p.coefficient(&Monomial::var(n, i)).midpoint();
            let c0 = p.coefficient(&Monomial::constant(n)).midpoint();
            // c0 + c1 x >= 0
            let bound = -c0 / &c1;
            if c1.is_positive() {
                lo[i] = Some(match &lo[i] {
                    None => bound,
                    Some(b) => b.clone().max(bound),
                });
            } else {
                hi[i] = Some(match &hi[i] {
                    None => bound,
                    Some(b) => b.clone().min(bound),
                });
            }
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            match (&lo[i], &hi[i]) {
                (Some(a), Some(b)) if a <= b => out.push(Interval::new(a.clone(), b.clone())),
                _ => {
                    return Err(Error::Semantic(format!(
                        "location `{}` invariant does not bound `{}` on both sides",
                        self.locations[loc].name, self.vars[i]
                    )))
                }
            }
        }
        Ok(IntervalVector(out))
    }
}

/// Replaces every interval coefficient with radius above `epsilon` by a
/// fresh uncertainty; smaller intervals stay as they are. Returns the
/// rewritten system (fields now mention the new parameter names) and the
/// introduced parameters.
pub fn classify_and_substitute(
    sys: &HybridSystemDesc,
    epsilon: &Rat,
) -> (HybridSystemDesc, Vec<UncertainParam>) {
    let mut out = sys.clone();
    let mut params: Vec<UncertainParam> = Vec::new();
    for loc in out.locations.iter_mut() {
        for f in loc.field.iter_mut() {
            let FieldRhs::Poly(p) = f else { continue };
            let mut changed = IPoly::zero(p.vars().to_vec());
            let mut rebuilt = false;
            for (m, c) in p.terms() {
                if c.radius() > *epsilon {
                    let name = format!("u{}", params.len() + 1);
                    params.push(UncertainParam {
                        name: name.clone(),
                        lo: c.lo().clone(),
                        hi: c.hi().clone(),
                    });
                    let mut vars = p.vars().to_vec();
                    vars.push(name);
                    let u = IPoly::var(vars.clone(), vars.len() - 1);
                    let mono = IPoly::from_terms(
                        p.vars().to_vec(),
                        vec![(m.clone(), Interval::point(Rat::one()))],
                    );
                    changed = changed.add(&u.mul(&mono));
                    rebuilt = true;
                } else {
                    changed = changed.add(&IPoly::from_terms(
                        p.vars().to_vec(),
                        vec![(m.clone(), c.clone())],
                    ));
                }
            }
            if rebuilt {
                *f = FieldRhs::Poly(changed);
            }
        }
    }
    (out, params)
}

/// Replaces every interval coefficient by its midpoint. Fields must be
/// polynomial (enclose non-polynomial systems first).
pub fn midpoint_system(sys: &HybridSystemDesc) -> Result<HybridSystemDesc> {
    let mut out = sys.clone();
    for loc in out.locations.iter_mut() {
        for f in loc.field.iter_mut() {
            match f {
                FieldRhs::Poly(p) => *f = FieldRhs::Poly(p.midpoint()),
                FieldRhs::Expr(_) => {
                    return Err(Error::Semantic(
                        "midpoint system requires polynomial fields".into(),
                    ))
                }
            }
        }
    }
    Ok(out)
}

/// Default approximation parameters when a location with non-polynomial
/// dynamics carries no `approx` annotation.
fn default_hints() -> ApproxHints {
    ApproxHints {
        degree: 3,
        fit_spacing: rat(1, 4),
        bound_spacing: rat(1, 16),
    }
}

/// Encloses every non-polynomial field by an interval polynomial field
/// over the location's invariant box. Polynomial locations pass through.
pub fn enclose_nonpolynomial(
    sys: &HybridSystemDesc,
) -> Result<(HybridSystemDesc, Vec<crate::approxpoly::EnclosedTerm>)> {
    let mut out = sys.clone();
    let mut all_terms = Vec::new();
    for li in 0..out.locations.len() {
        if out.locations[li]
            .field
            .iter()
            .all(|f| matches!(f, FieldRhs::Poly(_)))
        {
            continue;
        }
        let domain = sys.invariant_box(li)?;
        let hints = out.locations[li]
            .approx_hints
            .clone()
            .unwrap_or_else(default_hints);
        let comps: Vec<FieldComponent> = out.locations[li]
            .field
            .iter()
            .map(|f| match f {
                FieldRhs::Poly(p) => Ok(FieldComponent {
                    poly: p.clone(),
                    products: vec![],
                }),
                FieldRhs::Expr(e) => decompose_field_expr(e, &sys.vars),
            })
            .collect::<Result<Vec<_>>>()?;
        let (polys, terms) = enclose_field(
            &comps,
            &domain,
            &sys.vars,
            hints.degree,
            &hints.fit_spacing,
            &hints.bound_spacing,
        )?;
        all_terms.extend(terms);
        out.locations[li].field = polys.into_iter().map(FieldRhs::Poly).collect();
    }
    Ok((out, all_terms))
}

fn fmt_ineqs(f: &mut fmt::Formatter<'_>, polys: &[IPoly]) -> fmt::Result {
    for p in polys {
        writeln!(f, "  {p} >= 0")?;
    }
    Ok(())
}

impl fmt::Display for HybridSystemDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars {}", self.vars.join(" "))?;
        for loc in &self.locations {
            writeln!(f, "\nlocation {}", loc.name)?;
            if !loc.invariant.is_empty() {
                writeln!(f, "  invariant")?;
                for p in &loc.invariant {
                    writeln!(f, "  {p} >= 0")?;
                }
            }
            if let Some(h) = &loc.approx_hints {
                writeln!(
                    f,
                    "  approx degree={} spacing={} bound_spacing={}",
                    h.degree,
                    rat_to_cert_string(&h.fit_spacing),
                    rat_to_cert_string(&h.bound_spacing)
                )?;
            }
            writeln!(f, "  field")?;
            for (i, rhs) in loc.field.iter().enumerate() {
                match rhs {
                    FieldRhs::Poly(p) => writeln!(f, "  {}' = {p}", self.vars[i])?,
                    FieldRhs::Expr(e) => {
                        writeln!(f, "  {}' = {}", self.vars[i], e.render(&self.vars))?
                    }
                }
            }
        }
        for t in &self.transitions {
            writeln!(
                f,
                "\ntransition {} -> {}",
                self.locations[t.from].name, self.locations[t.to].name
            )?;
            if !t.guard.is_empty() {
                writeln!(f, "  guard")?;
                fmt_ineqs(f, &t.guard)?;
            }
            writeln!(f, "  reset")?;
            for (i, p) in t.reset.iter().enumerate() {
                writeln!(f, "  {}' = {p}", self.vars[i])?;
            }
        }
        writeln!(
            f,
            "\ninit at {}",
            self.locations[self.initial_location].name
        )?;
        fmt_ineqs(f, &self.init)?;
        for (loc, polys) in &self.unsafe_sets {
            writeln!(f, "\nunsafe at {}", self.locations[*loc].name)?;
            fmt_ineqs(f, polys)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{parse_decimal, rat_int, rat_to_f64};

    const EX2: &str = r#"
# classical two-dimensional system with interval coefficients
vars x1 x2

location main
  field
  x1' = [0.99,1.01]*x2
  x2' = -[0.96,1.04]*x1 + [0.32,0.347]*x1^3 - [0.98,1.02]*x2

init at main
  0.25 - (x1 - 1.5)^2 - x2^2 >= 0

unsafe at main
  0.16 - (x1 + 1)^2 - (x2 + 1)^2 >= 0
"#;

    #[test]
    fn parses_interval_system() {
        let sys = parse_system(EX2).unwrap();
        assert_eq!(sys.vars, vec!["x1", "x2"]);
        assert_eq!(sys.locations.len(), 1);
        assert!(sys.transitions.is_empty());
        let FieldRhs::Poly(f1) = &sys.locations[0].field[0] else {
            panic!("expected polynomial field")
        };
        let c = f1.coefficient(&Monomial(vec![0, 1]));
        assert_eq!(c.lo(), &parse_decimal("0.99").unwrap());
        assert_eq!(c.hi(), &parse_decimal("1.01").unwrap());
        assert_eq!(sys.init.len(), 1);
        assert_eq!(sys.unsafe_sets.len(), 1);
    }

    #[test]
    fn undeclared_variable_is_a_parse_error() {
        let bad = "vars x1\n\nlocation a\n  field\n  x1' = y + 1\n\ninit at a\n  x1 >= 0\n";
        assert!(parse_system(bad).is_err());
    }

    #[test]
    fn print_parse_roundtrip() {
        let sys = parse_system(EX2).unwrap();
        let printed = format!("{sys}");
        let again = parse_system(&printed).unwrap();
        assert_eq!(format!("{again}"), printed);
        assert_eq!(again.vars, sys.vars);
        assert_eq!(again.init.len(), sys.init.len());
    }

    #[test]
    fn classification_substitutes_wide_intervals() {
        // [-1.1, -0.9] has radius 0.1 > 0.09, so it becomes u1
        let text = "vars x1 x2\n\nlocation m\n  field\n  x1' = [-1.1,-0.9]*x2 - 1.5*x1^2\n  x2' = [2.98,3.02]*x1 - x2\n\ninit at m\n  1 - x1^2 >= 0\n";
        let sys = parse_system(text).unwrap();
        let (subbed, params) = classify_and_substitute(&sys, &parse_decimal("0.09").unwrap());
        assert_eq!(params.len(), 1);
        assert_eq!(params[0].lo, parse_decimal("-1.1").unwrap());
        let FieldRhs::Poly(f1) = &subbed.locations[0].field[0] else {
            panic!()
        };
        assert_eq!(f1.nvars(), 3);
        // [2.98, 3.02] (radius 0.02) stays an interval
        let FieldRhs::Poly(f2) = &subbed.locations[0].field[1] else {
            panic!()
        };
        assert!(!f2.is_exact());

        // re-instantiating u anywhere in its range lands inside the
        // original interval coefficients
        for t in 0..=4 {
            let u = parse_decimal("-1.1").unwrap()
                + rat(t, 20) * (parse_decimal("-0.9").unwrap() - parse_decimal("-1.1").unwrap());
            let inst = f1.eval_vars(&[(2, u)]);
            let orig = match &sys.locations[0].field[0] {
                FieldRhs::Poly(p) => p.clone(),
                _ => unreachable!(),
            };
            for (m, c) in inst.terms() {
                assert!(orig.coefficient(m).contains(c));
            }
        }

        // all radii below the threshold: identity transform
        let (same, none) = classify_and_substitute(&sys, &rat_int(1));
        assert!(none.is_empty());
        let FieldRhs::Poly(s1) = &same.locations[0].field[0] else {
            panic!()
        };
        assert_eq!(s1.nvars(), 2);
    }

    #[test]
    fn midpoint_collapses_intervals() {
        let sys = parse_system(EX2).unwrap();
        let mid = midpoint_system(&sys).unwrap();
        let FieldRhs::Poly(f2) = &mid.locations[0].field[1] else {
            panic!()
        };
        assert!(f2.is_exact());
        // mid [0.32, 0.347] = 0.3335
        let c = f2.coefficient(&Monomial(vec![3, 0]));
        assert_eq!(c.midpoint(), parse_decimal("0.3335").unwrap());
        // idempotent on exact systems
        let again = midpoint_system(&mid).unwrap();
        let FieldRhs::Poly(g2) = &again.locations[0].field[1] else {
            panic!()
        };
        assert_eq!(g2, f2);
    }

    #[test]
    fn box_extraction() {
        let text = "vars x1 x2\n\nlocation m\n  invariant\n  x1 - 3 >= 0\n  8 - x1 >= 0\n  x2 >= 0\n  1 - x2 >= 0\n  field\n  x1' = x2\n  x2' = x1\n\ninit at m\n  x1 >= 0\n";
        let sys = parse_system(text).unwrap();
        let b = sys.invariant_box(0).unwrap();
        assert_eq!(rat_to_f64(b.0[0].lo()), 3.0);
        assert_eq!(rat_to_f64(b.0[0].hi()), 8.0);
        assert_eq!(rat_to_f64(b.0[1].hi()), 1.0);
        // a disc invariant is not a box
        let text2 = "vars x1\n\nlocation m\n  invariant\n  1 - x1^2 >= 0\n  field\n  x1' = x1\n\ninit at m\n  x1 >= 0\n";
        let sys2 = parse_system(text2).unwrap();
        assert!(sys2.invariant_box(0).is_err());
    }

    #[test]
    fn nonpolynomial_enclosure_two_tank_shape() {
        let text = "vars x1 x2\n\nlocation l1\n  invariant\n  x1 - 3 >= 0\n  8 - x1 >= 0\n  x2 - 1/1024 >= 0\n  1 - x2 >= 0\n  approx degree=2 spacing=1/8 bound_spacing=1/64\n  field\n  x1' = 1 - sqrt(x1)\n  x2' = sqrt(x1) - sqrt(x2)\n\ninit at l1\n  x1 >= 0\n";
        let sys = parse_system(text).unwrap();
        assert!(!sys.is_polynomial());
        let (enclosed, terms) = enclose_nonpolynomial(&sys).unwrap();
        assert!(enclosed.is_polynomial());
        assert_eq!(terms.len(), 2); // sqrt(x1) shared between both rows
        let FieldRhs::Poly(f1) = &enclosed.locations[0].field[0] else {
            panic!()
        };
        // constant coefficient of row 1 is an interval around 1 - 0.839
        let c = f1.coefficient(&Monomial(vec![0, 0]));
        let mid = rat_to_f64(&c.midpoint());
        assert!((mid - 0.161).abs() < 0.05, "mid {mid}");
        assert!(!c.is_point());
    }
}

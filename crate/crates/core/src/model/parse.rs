//! Tokenizer and recursive-descent parser for the system file format and
//! for standalone polynomial/expression input.

use super::{ApproxHints, FieldRhs, HybridSystemDesc, Location};
use crate::approxpoly::Expr;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::poly::IPoly;
use crate::rational::{parse_decimal, Rat};
use num_traits::{One, Signed};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Sym(&'static str),
    Newline,
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

fn lex(text: &str) -> Result<Lexer> {
    let mut toks = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let bytes: Vec<char> = line.chars().collect();
        let mut i = 0;
        let mut pushed = false;
        while i < bytes.len() {
            let c = bytes[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                Tok::Ident(bytes[start..i].iter().collect())
            } else if c.is_ascii_digit() || (c == '.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit()) {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit() || bytes[i] == '.' || bytes[i] == 'e' || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                Tok::Number(bytes[start..i].iter().collect())
            } else {
                let two: String = bytes[i..bytes.len().min(i + 2)].iter().collect();
                let sym = match two.as_str() {
                    ">=" => Some(">="),
                    "<=" => Some("<="),
                    "->" => Some("->"),
                    _ => None,
                };
                if let Some(s) = sym {
                    i += 2;
                    Tok::Sym(s)
                } else {
                    i += 1;
                    match c {
                        '+' => Tok::Sym("+"),
                        '-' => Tok::Sym("-"),
                        '*' => Tok::Sym("*"),
                        '/' => Tok::Sym("/"),
                        '^' => Tok::Sym("^"),
                        '(' => Tok::Sym("("),
                        ')' => Tok::Sym(")"),
                        '[' => Tok::Sym("["),
                        ']' => Tok::Sym("]"),
                        ',' => Tok::Sym(","),
                        '=' => Tok::Sym("="),
                        '\'' => Tok::Sym("'"),
                        other => {
                            return Err(Error::Parse {
                                line: lineno + 1,
                                col,
                                msg: format!("unexpected character `{other}`"),
                            })
                        }
                    }
                }
            };
            toks.push((tok, lineno + 1, col));
            pushed = true;
        }
        if pushed {
            toks.push((Tok::Newline, lineno + 1, line.len() + 1));
        }
    }
    Ok(Lexer { toks, pos: 0 })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn loc(&self) -> (usize, usize) {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or((0, 0))
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let (line, col) = self.loc();
        Error::Parse {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        match self.next() {
            Some(Tok::Sym(t)) if t == s => Ok(()),
            other => Err(self.err(format!("expected `{s}`, found {other:?}"))),
        }
    }

    fn expect_ident(&mut self) -> Result<String> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            other => Err(self.err(format!("expected identifier, found {other:?}"))),
        }
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Some(Tok::Newline)) {
            self.pos += 1;
        }
    }

    fn eat_newline(&mut self) -> Result<()> {
        match self.next() {
            Some(Tok::Newline) | None => Ok(()),
            other => Err(self.err(format!("expected end of line, found {other:?}"))),
        }
    }
}

/// Signed rational literal: `p/q`, decimal, or integer.
fn parse_rat_tok(lx: &mut Lexer) -> Result<Rat> {
    let neg = if matches!(lx.peek(), Some(Tok::Sym("-"))) {
        lx.pos += 1;
        true
    } else {
        false
    };
    let num = match lx.next() {
        Some(Tok::Number(s)) => parse_decimal(&s).map_err(|m| lx.err(m))?,
        other => return Err(lx.err(format!("expected number, found {other:?}"))),
    };
    let v = if matches!(lx.peek(), Some(Tok::Sym("/"))) {
        lx.pos += 1;
        let den = match lx.next() {
            Some(Tok::Number(s)) => parse_decimal(&s).map_err(|m| lx.err(m))?,
            other => return Err(lx.err(format!("expected denominator, found {other:?}"))),
        };
        num / den
    } else {
        num
    };
    Ok(if neg { -v } else { v })
}

fn parse_expr(lx: &mut Lexer, vars: &[String]) -> Result<Expr> {
    let mut acc = parse_term(lx, vars)?;
    loop {
        match lx.peek() {
            Some(Tok::Sym("+")) => {
                lx.pos += 1;
                acc = Expr::Add(Box::new(acc), Box::new(parse_term(lx, vars)?));
            }
            Some(Tok::Sym("-")) => {
                lx.pos += 1;
                acc = Expr::Sub(Box::new(acc), Box::new(parse_term(lx, vars)?));
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_term(lx: &mut Lexer, vars: &[String]) -> Result<Expr> {
    let mut acc = parse_factor(lx, vars)?;
    loop {
        match lx.peek() {
            Some(Tok::Sym("*")) => {
                lx.pos += 1;
                acc = Expr::Mul(Box::new(acc), Box::new(parse_factor(lx, vars)?));
            }
            Some(Tok::Sym("/")) => {
                lx.pos += 1;
                acc = Expr::Div(Box::new(acc), Box::new(parse_factor(lx, vars)?));
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_factor(lx: &mut Lexer, vars: &[String]) -> Result<Expr> {
    if matches!(lx.peek(), Some(Tok::Sym("-"))) {
        lx.pos += 1;
        return Ok(Expr::Neg(Box::new(parse_factor(lx, vars)?)));
    }
    let mut base = parse_atom(lx, vars)?;
    while matches!(lx.peek(), Some(Tok::Sym("^"))) {
        lx.pos += 1;
        let k = match lx.next() {
            Some(Tok::Number(s)) => s
                .parse::<u32>()
                .map_err(|_| lx.err("exponent must be a nonnegative integer"))?,
            other => return Err(lx.err(format!("expected exponent, found {other:?}"))),
        };
        base = Expr::Pow(Box::new(base), k);
    }
    Ok(base)
}

fn parse_atom(lx: &mut Lexer, vars: &[String]) -> Result<Expr> {
    match lx.next() {
        Some(Tok::Number(s)) => Ok(Expr::num(parse_decimal(&s).map_err(|m| lx.err(m))?)),
        Some(Tok::Sym("[")) => {
            let lo = parse_rat_tok(lx)?;
            lx.expect_sym(",")?;
            let hi = parse_rat_tok(lx)?;
            lx.expect_sym("]")?;
            if lo > hi {
                return Err(lx.err("interval endpoints out of order"));
            }
            Ok(Expr::Const(Interval::new(lo, hi)))
        }
        Some(Tok::Sym("(")) => {
            let e = parse_expr(lx, vars)?;
            lx.expect_sym(")")?;
            Ok(e)
        }
        Some(Tok::Ident(name)) => {
            if matches!(lx.peek(), Some(Tok::Sym("("))) {
                lx.pos += 1;
                let arg = parse_expr(lx, vars)?;
                lx.expect_sym(")")?;
                let f = match name.as_str() {
                    "sqrt" => Expr::Sqrt(Box::new(arg)),
                    "exp" => Expr::Exp(Box::new(arg)),
                    "sin" => Expr::Sin(Box::new(arg)),
                    "cos" => Expr::Cos(Box::new(arg)),
                    "ln" => Expr::Ln(Box::new(arg)),
                    other => return Err(lx.err(format!("unknown function `{other}`"))),
                };
                Ok(f)
            } else {
                match vars.iter().position(|v| v == &name) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => Err(lx.err(format!("undeclared variable `{name}`"))),
                }
            }
        }
        other => Err(lx.err(format!("expected expression, found {other:?}"))),
    }
}

/// Parses a standalone expression over the given variables.
pub fn parse_expression(text: &str, vars: &[String]) -> Result<Expr> {
    let mut lx = lex(text)?;
    lx.skip_newlines();
    let e = parse_expr(&mut lx, vars)?;
    lx.skip_newlines();
    if lx.peek().is_some() {
        return Err(lx.err("trailing input after expression"));
    }
    Ok(e)
}

/// Parses a polynomial (interval coefficients allowed).
pub fn parse_polynomial(text: &str, vars: &[String]) -> Result<IPoly> {
    let e = parse_expression(text, vars)?;
    e.to_polynomial(vars)
        .ok_or_else(|| Error::Semantic("expected a polynomial expression".into()))
}

/// One inequality line `lhs >= rhs` or `lhs <= rhs`, normalized to
/// `p >= 0`; the polynomial must be exact.
fn parse_inequality(lx: &mut Lexer, vars: &[String]) -> Result<IPoly> {
    let lhs = parse_expr(lx, vars)?;
    let op = match lx.next() {
        Some(Tok::Sym(">=")) => ">=",
        Some(Tok::Sym("<=")) => "<=",
        other => return Err(lx.err(format!("expected `>=` or `<=`, found {other:?}"))),
    };
    let rhs = parse_expr(lx, vars)?;
    lx.eat_newline()?;
    let diff = if op == ">=" {
        Expr::Sub(Box::new(lhs), Box::new(rhs))
    } else {
        Expr::Sub(Box::new(rhs), Box::new(lhs))
    };
    let p = diff
        .to_polynomial(vars)
        .ok_or_else(|| Error::Semantic("assertions must be polynomial".into()))?;
    if !p.is_exact() {
        return Err(Error::Semantic(
            "assertions must have exact coefficients".into(),
        ));
    }
    Ok(p)
}

fn parse_ineq_block(lx: &mut Lexer, vars: &[String]) -> Result<Vec<IPoly>> {
    let mut out = Vec::new();
    loop {
        lx.skip_newlines();
        match lx.peek() {
            Some(Tok::Ident(kw))
                if matches!(
                    kw.as_str(),
                    "location" | "transition" | "init" | "unsafe" | "field" | "invariant"
                        | "guard" | "reset" | "approx" | "vars"
                ) =>
            {
                return Ok(out)
            }
            None => return Ok(out),
            _ => out.push(parse_inequality(lx, vars)?),
        }
    }
}

/// `x1' = expr` lines, one per variable, in any order.
fn parse_update_block(lx: &mut Lexer, vars: &[String]) -> Result<Vec<Option<Expr>>> {
    let mut out: Vec<Option<Expr>> = vec![None; vars.len()];
    loop {
        lx.skip_newlines();
        let (is_update, name) = match lx.peek() {
            Some(Tok::Ident(name)) => {
                let next = lx.toks.get(lx.pos + 1).map(|(t, _, _)| t.clone());
                (matches!(next, Some(Tok::Sym("'"))), name.clone())
            }
            _ => (false, String::new()),
        };
        if !is_update {
            return Ok(out);
        }
        lx.pos += 2; // ident and prime
        lx.expect_sym("=")?;
        let e = parse_expr(lx, vars)?;
        lx.eat_newline()?;
        let idx = vars
            .iter()
            .position(|v| v == &name)
            .ok_or_else(|| Error::Semantic(format!("undeclared variable `{name}`")))?;
        out[idx] = Some(e);
    }
}

/// Parses a hybrid system description. All numeric literals become exact
/// rationals.
pub fn parse_system(text: &str) -> Result<HybridSystemDesc> {
    let mut lx = lex(text)?;
    lx.skip_newlines();
    // vars line first
    match lx.next() {
        Some(Tok::Ident(kw)) if kw == "vars" => {}
        other => return Err(lx.err(format!("expected `vars`, found {other:?}"))),
    }
    let mut vars = Vec::new();
    while let Some(Tok::Ident(_)) = lx.peek() {
        vars.push(lx.expect_ident()?);
    }
    if vars.is_empty() {
        return Err(lx.err("at least one variable required"));
    }
    lx.eat_newline()?;

    let mut locations: Vec<Location> = Vec::new();
    let mut transitions: Vec<ParsedTransition> = Vec::new();
    let mut init: Option<(String, Vec<IPoly>)> = None;
    let mut unsafe_sets: Vec<(String, Vec<IPoly>)> = Vec::new();

    loop {
        lx.skip_newlines();
        let Some(tok) = lx.peek().cloned() else { break };
        match tok {
            Tok::Ident(kw) if kw == "location" => {
                lx.pos += 1;
                let name = lx.expect_ident()?;
                lx.eat_newline()?;
                let mut invariant = Vec::new();
                let mut field: Option<Vec<Option<Expr>>> = None;
                let mut hints: Option<ApproxHints> = None;
                loop {
                    lx.skip_newlines();
                    match lx.peek() {
                        Some(Tok::Ident(k)) if k == "invariant" => {
                            lx.pos += 1;
                            lx.eat_newline()?;
                            invariant = parse_ineq_block(&mut lx, &vars)?;
                        }
                        Some(Tok::Ident(k)) if k == "field" => {
                            lx.pos += 1;
                            lx.eat_newline()?;
                            field = Some(parse_update_block(&mut lx, &vars)?);
                        }
                        Some(Tok::Ident(k)) if k == "approx" => {
                            lx.pos += 1;
                            let mut degree = 2u32;
                            let mut fit_spacing = None;
                            let mut bound_spacing = None;
                            while let Some(Tok::Ident(key)) = lx.peek().cloned() {
                                lx.pos += 1;
                                lx.expect_sym("=")?;
                                match key.as_str() {
                                    "degree" => {
                                        degree = match lx.next() {
                                            Some(Tok::Number(s)) => s.parse().map_err(|_| {
                                                lx.err("degree must be an integer")
                                            })?,
                                            other => {
                                                return Err(lx.err(format!(
                                                    "expected degree, found {other:?}"
                                                )))
                                            }
                                        }
                                    }
                                    "spacing" => fit_spacing = Some(parse_rat_tok(&mut lx)?),
                                    "bound_spacing" => {
                                        bound_spacing = Some(parse_rat_tok(&mut lx)?)
                                    }
                                    other => {
                                        return Err(lx.err(format!(
                                            "unknown approx key `{other}`"
                                        )))
                                    }
                                }
                            }
                            lx.eat_newline()?;
                            let fit = fit_spacing
                                .ok_or_else(|| Error::Semantic("approx needs spacing=".into()))?;
                            let bound = bound_spacing.unwrap_or_else(|| fit.clone());
                            if !fit.is_positive() || !bound.is_positive() {
                                return Err(Error::Semantic(
                                    "approx spacings must be positive".into(),
                                ));
                            }
                            hints = Some(ApproxHints {
                                degree,
                                fit_spacing: fit,
                                bound_spacing: bound,
                            });
                        }
                        _ => break,
                    }
                }
                let field = field
                    .ok_or_else(|| Error::Semantic(format!("location `{name}` has no field")))?;
                let mut rhs = Vec::with_capacity(vars.len());
                for (i, f) in field.into_iter().enumerate() {
                    let e = f.ok_or_else(|| {
                        Error::Semantic(format!(
                            "location `{name}` missing equation for `{}`",
                            vars[i]
                        ))
                    })?;
                    rhs.push(match e.to_polynomial(&vars) {
                        Some(p) => FieldRhs::Poly(p),
                        None => FieldRhs::Expr(e),
                    });
                }
                locations.push(Location {
                    name,
                    invariant,
                    field: rhs,
                    approx_hints: hints,
                });
            }
            Tok::Ident(kw) if kw == "transition" => {
                lx.pos += 1;
                let from = lx.expect_ident()?;
                lx.expect_sym("->")?;
                let to = lx.expect_ident()?;
                lx.eat_newline()?;
                let mut guard = Vec::new();
                let mut reset: Option<Vec<Option<Expr>>> = None;
                loop {
                    lx.skip_newlines();
                    match lx.peek() {
                        Some(Tok::Ident(k)) if k == "guard" => {
                            lx.pos += 1;
                            lx.eat_newline()?;
                            guard = parse_ineq_block(&mut lx, &vars)?;
                        }
                        Some(Tok::Ident(k)) if k == "reset" => {
                            lx.pos += 1;
                            lx.eat_newline()?;
                            reset = Some(parse_update_block(&mut lx, &vars)?);
                        }
                        _ => break,
                    }
                }
                // identity reset when omitted
                let reset_polys: Vec<IPoly> = match reset {
                    None => (0..vars.len()).map(|i| IPoly::var(vars.clone(), i)).collect(),
                    Some(updates) => {
                        let mut out = Vec::with_capacity(vars.len());
                        for (i, u) in updates.into_iter().enumerate() {
                            let p = match u {
                                None => IPoly::var(vars.clone(), i),
                                Some(e) => e.to_polynomial(&vars).ok_or_else(|| {
                                    Error::Semantic("resets must be polynomial".into())
                                })?,
                            };
                            if !p.is_exact() {
                                return Err(Error::Semantic(
                                    "resets must have exact coefficients".into(),
                                ));
                            }
                            out.push(p);
                        }
                        out
                    }
                };
                transitions.push(ParsedTransition {
                    from,
                    to,
                    guard,
                    reset: reset_polys,
                });
            }
            Tok::Ident(kw) if kw == "init" => {
                lx.pos += 1;
                let at = lx.expect_ident()?;
                if at != "at" {
                    return Err(lx.err("expected `at <location>`"));
                }
                let loc = lx.expect_ident()?;
                lx.eat_newline()?;
                let polys = parse_ineq_block(&mut lx, &vars)?;
                if init.is_some() {
                    return Err(Error::Semantic("duplicate init block".into()));
                }
                init = Some((loc, polys));
            }
            Tok::Ident(kw) if kw == "unsafe" => {
                lx.pos += 1;
                let at = lx.expect_ident()?;
                if at != "at" {
                    return Err(lx.err("expected `at <location>`"));
                }
                let loc = lx.expect_ident()?;
                lx.eat_newline()?;
                let polys = parse_ineq_block(&mut lx, &vars)?;
                unsafe_sets.push((loc, polys));
            }
            other => return Err(lx.err(format!("unexpected token {other:?}"))),
        }
    }

    let (init_loc, init_polys) =
        init.ok_or_else(|| Error::Semantic("missing init block".into()))?;
    let find_loc = |name: &str, locations: &[Location]| -> Result<usize> {
        locations
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| Error::Semantic(format!("unknown location `{name}`")))
    };
    let initial_location = find_loc(&init_loc, &locations)?;
    let transitions = transitions
        .into_iter()
        .map(|t| {
            Ok(super::ResolvedTransition {
                from: find_loc(&t.from, &locations)?,
                to: find_loc(&t.to, &locations)?,
                guard: t.guard,
                reset: t.reset,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let unsafe_sets = unsafe_sets
        .into_iter()
        .map(|(name, polys)| Ok((find_loc(&name, &locations)?, polys)))
        .collect::<Result<Vec<_>>>()?;

    Ok(HybridSystemDesc {
        vars,
        locations,
        initial_location,
        init: init_polys,
        transitions,
        unsafe_sets,
    })
}

/// Pre-resolution transition (location names instead of indices).
struct ParsedTransition {
    from: String,
    to: String,
    guard: Vec<IPoly>,
    reset: Vec<IPoly>,
}

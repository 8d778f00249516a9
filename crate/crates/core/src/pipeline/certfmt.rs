//! Text serialization of safety certificates: line-oriented key-value
//! records with nested counted lists, rationals as `p/q`, intervals as
//! `[p/q, p/q]`, polynomials in the canonical graded-lex rendering.

use super::{ConditionKind, ConditionWitness, SafetyCertificate};
use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalMatrix, IntervalVector};
use crate::linalg::{RatMatrix, SymRationalMatrix};
use crate::model::{parse_polynomial, UncertainParam};
use crate::poly::{IPoly, Monomial, MonomialVector};
use crate::psd::{ImplicationCertificate, PsdCertificate, RationalMultiplier};
use crate::rational::{parse_rat, rat_to_cert_string, Rat};
use num_traits::Zero;
use std::fmt::Write as _;

fn interval_str(i: &Interval) -> String {
    format!(
        "[{}, {}]",
        rat_to_cert_string(i.lo()),
        rat_to_cert_string(i.hi())
    )
}

fn write_monos(out: &mut String, basis: &MonomialVector) {
    writeln!(out, "    basis {}", basis.len()).unwrap();
    for m in &basis.0 {
        let exps: Vec<String> = m.0.iter().map(|e| e.to_string()).collect();
        writeln!(out, "      mono {}", exps.join(" ")).unwrap();
    }
}

fn write_rat_matrix(out: &mut String, label: &str, m: &RatMatrix) {
    writeln!(out, "    {label} {} {}", m.rows, m.cols).unwrap();
    for i in 0..m.rows {
        let row: Vec<String> = (0..m.cols).map(|j| rat_to_cert_string(m.at(i, j))).collect();
        writeln!(out, "      row {}", row.join(" ")).unwrap();
    }
}

fn write_sym_matrix(out: &mut String, label: &str, m: &SymRationalMatrix) {
    writeln!(out, "    {label} {}", m.order()).unwrap();
    for i in 0..m.order() {
        let row: Vec<String> = (0..m.order())
            .map(|j| rat_to_cert_string(m.at(i, j)))
            .collect();
        writeln!(out, "      row {}", row.join(" ")).unwrap();
    }
}

fn write_interval_matrix(out: &mut String, label: &str, m: &IntervalMatrix) {
    writeln!(out, "    {label} {} {}", m.rows, m.cols).unwrap();
    for i in 0..m.rows {
        let row: Vec<String> = (0..m.cols).map(|j| interval_str(m.at(i, j))).collect();
        writeln!(out, "      row {}", row.join(" ")).unwrap();
    }
}

fn write_psd_cert(out: &mut String, cert: &PsdCertificate) {
    match cert {
        PsdCertificate::FullRankRohn {
            basis,
            w_center,
            delta,
            rho_bound,
            lambda_lower,
            definite,
        } => {
            writeln!(out, "  residual fullrank-rohn").unwrap();
            write_monos(out, basis);
            write_sym_matrix(out, "center", w_center);
            write_interval_matrix(out, "delta", delta);
            writeln!(out, "    rho {}", rat_to_cert_string(rho_bound)).unwrap();
            writeln!(out, "    lambda {}", rat_to_cert_string(lambda_lower)).unwrap();
            writeln!(out, "    definite {definite}").unwrap();
        }
        PsdCertificate::SingularSquareKrawczyk {
            basis,
            rank,
            q_hat,
            b_set,
            boxv,
            c_matrix,
        } => {
            writeln!(out, "  residual square-krawczyk").unwrap();
            write_monos(out, basis);
            writeln!(out, "    rank {rank}").unwrap();
            let q: Vec<String> = q_hat.iter().map(rat_to_cert_string).collect();
            writeln!(out, "    qhat {}", q.join(" ")).unwrap();
            let b: Vec<String> = b_set.iter().map(|i| i.to_string()).collect();
            writeln!(out, "    bset {}", b.join(" ")).unwrap();
            let bx: Vec<String> = boxv.0.iter().map(interval_str).collect();
            writeln!(out, "    box {}", bx.join(" ")).unwrap();
            write_rat_matrix(out, "cmatrix", c_matrix);
        }
        PsdCertificate::SingularUnderdetermined {
            basis,
            rank,
            q_hat,
            b_set,
            r1,
            r2,
            k_lipschitz,
            krawczyk_verdict,
        } => {
            writeln!(out, "  residual underdetermined").unwrap();
            write_monos(out, basis);
            writeln!(out, "    rank {rank}").unwrap();
            let q: Vec<String> = q_hat.iter().map(rat_to_cert_string).collect();
            writeln!(out, "    qhat {}", q.join(" ")).unwrap();
            let b: Vec<String> = b_set.iter().map(|i| i.to_string()).collect();
            writeln!(out, "    bset {}", b.join(" ")).unwrap();
            writeln!(out, "    r1 {}", rat_to_cert_string(r1)).unwrap();
            writeln!(out, "    r2 {}", rat_to_cert_string(r2)).unwrap();
            writeln!(out, "    lipschitz {}", rat_to_cert_string(k_lipschitz)).unwrap();
            if let Some(v) = krawczyk_verdict {
                writeln!(out, "    krawczyk-agrees {v}").unwrap();
            }
        }
    }
}

/// Renders a certificate as self-contained text.
pub fn write_certificate(cert: &SafetyCertificate, vars: &[String], loc_names: &[String]) -> String {
    let mut out = String::new();
    writeln!(out, "flowcert-certificate v1").unwrap();
    writeln!(out, "vars {}", vars.join(" ")).unwrap();
    writeln!(out, "epsilon {}", rat_to_cert_string(&cert.epsilon)).unwrap();
    writeln!(out, "delta {}", rat_to_cert_string(&cert.delta)).unwrap();
    for p in &cert.params {
        writeln!(
            out,
            "param {} {} {}",
            p.name,
            rat_to_cert_string(&p.lo),
            rat_to_cert_string(&p.hi)
        )
        .unwrap();
    }
    for (li, inv) in cert.invariants.iter().enumerate() {
        writeln!(out, "invariant {} : {}", loc_names[li], inv).unwrap();
    }
    for cw in &cert.conditions {
        let kind = match &cw.kind {
            ConditionKind::Initial => "initial".to_string(),
            ConditionKind::Discrete { transition } => format!("discrete {transition}"),
            ConditionKind::Continuous { location } => format!("continuous {location}"),
            ConditionKind::Unsafe { location } => format!("unsafe {location}"),
        };
        writeln!(out, "condition {kind} : {}", cw.label).unwrap();
        for m in &cw.cert.multipliers {
            match m {
                RationalMultiplier::Sos { basis, matrix } => {
                    writeln!(out, "  multiplier sos").unwrap();
                    write_monos(&mut out, basis);
                    write_sym_matrix(&mut out, "matrix", matrix);
                }
                RationalMultiplier::Free { poly } => {
                    writeln!(out, "  multiplier free : {poly}").unwrap();
                }
            }
        }
        write_psd_cert(&mut out, &cw.cert.residual_cert);
    }
    out
}

/// Either a full certificate or an invariant-only candidate (the latter
/// asks the checker to synthesize multipliers before deciding).
pub enum CertificateFile {
    Full(Box<SafetyCertificate>),
    Candidate {
        epsilon: Option<Rat>,
        delta: Option<Rat>,
        mult_degree: Option<u32>,
        invariants: Vec<(String, IPoly)>,
    },
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }
    fn next(&mut self) -> Option<&'a str> {
        let l = self.lines.get(self.pos).copied();
        if l.is_some() {
            self.pos += 1;
        }
        l
    }
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Certificate(format!("line {}: {}", self.pos, msg.into()))
    }
}

fn parse_interval_tokens(s: &str) -> Result<Vec<Interval>> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        if !rest.starts_with('[') {
            return Err(Error::Certificate(format!("expected interval in `{s}`")));
        }
        let end = rest
            .find(']')
            .ok_or_else(|| Error::Certificate(format!("unclosed interval in `{s}`")))?;
        let inner = &rest[1..end];
        let (lo, hi) = inner
            .split_once(',')
            .ok_or_else(|| Error::Certificate(format!("bad interval `{inner}`")))?;
        out.push(Interval::new(
            parse_rat(lo).map_err(Error::Certificate)?,
            parse_rat(hi).map_err(Error::Certificate)?,
        ));
        rest = rest[end + 1..].trim();
    }
    Ok(out)
}

fn parse_basis(lines: &mut Lines, first: &str) -> Result<MonomialVector> {
    let n: usize = first
        .trim()
        .strip_prefix("basis ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| lines.err("bad basis header"))?;
    let mut monos = Vec::with_capacity(n);
    for _ in 0..n {
        let l = lines.next().ok_or_else(|| lines.err("missing mono line"))?;
        let body = l
            .trim()
            .strip_prefix("mono ")
            .ok_or_else(|| lines.err("expected mono line"))?;
        let exps: Vec<u32> = body
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| lines.err("bad exponent")))
            .collect::<Result<_>>()?;
        monos.push(Monomial(exps));
    }
    Ok(MonomialVector(monos))
}

fn parse_rows(lines: &mut Lines, rows: usize, cols: usize) -> Result<Vec<Vec<Rat>>> {
    let mut out = Vec::with_capacity(rows);
    for _ in 0..rows {
        let l = lines.next().ok_or_else(|| lines.err("missing row"))?;
        let body = l
            .trim()
            .strip_prefix("row ")
            .ok_or_else(|| lines.err("expected row"))?;
        let vals: Vec<Rat> = body
            .split_whitespace()
            .map(|t| parse_rat(t).map_err(Error::Certificate))
            .collect::<Result<_>>()?;
        if vals.len() != cols {
            return Err(lines.err("row width mismatch"));
        }
        out.push(vals);
    }
    Ok(out)
}

fn kv<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.trim().strip_prefix(key).map(str::trim)
}

/// Parses a certificate or candidate file. Polynomials are parsed over
/// the `vars` line of the file.
pub fn parse_certificate(text: &str) -> Result<CertificateFile> {
    let mut lines = Lines {
        lines: text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .collect(),
        pos: 0,
    };
    let header = lines.next().ok_or_else(|| lines.err("empty file"))?;
    let full = if header.trim() == "flowcert-certificate v1" {
        true
    } else if header.trim() == "flowcert-candidate v1" {
        false
    } else {
        return Err(lines.err("unknown certificate header"));
    };

    let mut vars: Vec<String> = Vec::new();
    let mut epsilon = None;
    let mut delta = None;
    let mut mult_degree = None;
    let mut params: Vec<UncertainParam> = Vec::new();
    let mut invariants: Vec<(String, IPoly)> = Vec::new();
    let mut conditions: Vec<ConditionWitness> = Vec::new();

    while let Some(line) = lines.next() {
        let t = line.trim();
        if let Some(rest) = kv(t, "vars ") {
            vars = rest.split_whitespace().map(|s| s.to_string()).collect();
        } else if let Some(rest) = kv(t, "epsilon ") {
            epsilon = Some(parse_rat(rest).map_err(Error::Certificate)?);
        } else if let Some(rest) = kv(t, "delta ") {
            delta = Some(parse_rat(rest).map_err(Error::Certificate)?);
        } else if let Some(rest) = kv(t, "mult-degree ") {
            mult_degree = Some(
                rest.parse()
                    .map_err(|_| lines.err("bad mult-degree"))?,
            );
        } else if let Some(rest) = kv(t, "param ") {
            let mut it = rest.split_whitespace();
            let name = it.next().ok_or_else(|| lines.err("param name"))?.to_string();
            let lo = parse_rat(it.next().ok_or_else(|| lines.err("param lo"))?)
                .map_err(Error::Certificate)?;
            let hi = parse_rat(it.next().ok_or_else(|| lines.err("param hi"))?)
                .map_err(Error::Certificate)?;
            params.push(UncertainParam { name, lo, hi });
        } else if let Some(rest) = kv(t, "invariant ") {
            let (loc, poly) = rest
                .split_once(':')
                .ok_or_else(|| lines.err("invariant needs `loc : poly`"))?;
            if vars.is_empty() {
                return Err(lines.err("vars line must precede invariants"));
            }
            let p = parse_polynomial(poly.trim(), &vars)?;
            invariants.push((loc.trim().to_string(), p));
        } else if let Some(rest) = kv(t, "condition ") {
            let (kind_str, label) = rest
                .split_once(':')
                .ok_or_else(|| lines.err("condition needs `kind : label`"))?;
            let kind_toks: Vec<&str> = kind_str.trim().split_whitespace().collect();
            let kind = match kind_toks.as_slice() {
                ["initial"] => ConditionKind::Initial,
                ["discrete", k] => ConditionKind::Discrete {
                    transition: k.parse().map_err(|_| lines.err("bad index"))?,
                },
                ["continuous", k] => ConditionKind::Continuous {
                    location: k.parse().map_err(|_| lines.err("bad index"))?,
                },
                ["unsafe", k] => ConditionKind::Unsafe {
                    location: k.parse().map_err(|_| lines.err("bad index"))?,
                },
                other => return Err(lines.err(format!("unknown condition kind {other:?}"))),
            };
            let mut multipliers = Vec::new();
            let mut residual: Option<PsdCertificate> = None;
            while let Some(peeked) = lines.peek() {
                let pt = peeked.trim();
                if pt.starts_with("multiplier sos") {
                    lines.next();
                    let bline = lines.next().ok_or_else(|| lines.err("missing basis"))?;
                    let basis = parse_basis(&mut lines, bline)?;
                    let hline = lines.next().ok_or_else(|| lines.err("missing matrix"))?;
                    let order: usize = hline
                        .trim()
                        .strip_prefix("matrix ")
                        .and_then(|s| s.trim().parse().ok())
                        .ok_or_else(|| lines.err("bad matrix header"))?;
                    let rows = parse_rows(&mut lines, order, order)?;
                    let matrix = SymRationalMatrix::from_rows(rows)?;
                    multipliers.push(RationalMultiplier::Sos { basis, matrix });
                } else if pt.starts_with("multiplier free") {
                    lines.next();
                    let poly = pt
                        .split_once(':')
                        .map(|(_, p)| p.trim())
                        .ok_or_else(|| lines.err("free multiplier needs a polynomial"))?;
                    let p = parse_polynomial(poly, &vars)?;
                    multipliers.push(RationalMultiplier::Free { poly: p });
                } else if pt.starts_with("residual ") {
                    lines.next();
                    residual = Some(parse_residual(&mut lines, pt)?);
                    break;
                } else {
                    break;
                }
            }
            let residual =
                residual.ok_or_else(|| lines.err("condition missing residual certificate"))?;
            conditions.push(ConditionWitness {
                kind,
                label: label.trim().to_string(),
                cert: ImplicationCertificate {
                    multipliers,
                    residual_cert: residual,
                },
            });
        } else {
            return Err(lines.err(format!("unexpected line `{t}`")));
        }
    }

    if full {
        Ok(CertificateFile::Full(Box::new(SafetyCertificate {
            epsilon: epsilon.unwrap_or_else(|| rat_default_epsilon()),
            delta: delta.unwrap_or_else(Rat::zero),
            params,
            invariants: invariants.into_iter().map(|(_, p)| p).collect(),
            conditions,
        })))
    } else {
        Ok(CertificateFile::Candidate {
            epsilon,
            delta,
            mult_degree,
            invariants,
        })
    }
}

fn rat_default_epsilon() -> Rat {
    crate::rational::rat(1, 10)
}

fn parse_residual(lines: &mut Lines, header: &str) -> Result<PsdCertificate> {
    let kind = header.trim().strip_prefix("residual ").unwrap_or("").trim();
    let bline = lines.next().ok_or_else(|| lines.err("missing basis"))?;
    let basis = parse_basis(lines, bline)?;
    match kind {
        "fullrank-rohn" => {
            let hline = lines.next().ok_or_else(|| lines.err("missing center"))?;
            let order: usize = hline
                .trim()
                .strip_prefix("center ")
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| lines.err("bad center header"))?;
            let w_center = SymRationalMatrix::from_rows(parse_rows(lines, order, order)?)?;
            let dline = lines.next().ok_or_else(|| lines.err("missing delta"))?;
            let dims: Vec<usize> = dline
                .trim()
                .strip_prefix("delta ")
                .map(|s| {
                    s.split_whitespace()
                        .filter_map(|t| t.parse().ok())
                        .collect()
                })
                .unwrap_or_default();
            if dims.len() != 2 {
                return Err(lines.err("bad delta header"));
            }
            let mut data = Vec::new();
            for _ in 0..dims[0] {
                let l = lines.next().ok_or_else(|| lines.err("missing delta row"))?;
                let body = l
                    .trim()
                    .strip_prefix("row ")
                    .ok_or_else(|| lines.err("expected delta row"))?;
                let ivs = parse_interval_tokens(body)?;
                if ivs.len() != dims[1] {
                    return Err(lines.err("delta row width mismatch"));
                }
                data.extend(ivs);
            }
            let delta = IntervalMatrix::new(dims[0], dims[1], data);
            let rho = lines
                .next()
                .and_then(|l| kv(l, "rho "))
                .map(|s| parse_rat(s).map_err(Error::Certificate))
                .transpose()?
                .ok_or_else(|| lines.err("missing rho"))?;
            let lambda = lines
                .next()
                .and_then(|l| kv(l, "lambda "))
                .map(|s| parse_rat(s).map_err(Error::Certificate))
                .transpose()?
                .ok_or_else(|| lines.err("missing lambda"))?;
            let definite = lines
                .next()
                .and_then(|l| kv(l, "definite "))
                .map(|s| s == "true")
                .ok_or_else(|| lines.err("missing definite flag"))?;
            Ok(PsdCertificate::FullRankRohn {
                basis,
                w_center,
                delta,
                rho_bound: rho,
                lambda_lower: lambda,
                definite,
            })
        }
        "square-krawczyk" => {
            let rank: usize = lines
                .next()
                .and_then(|l| kv(l, "rank "))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| lines.err("missing rank"))?;
            let q_hat: Vec<Rat> = lines
                .next()
                .and_then(|l| kv(l, "qhat "))
                .map(|s| {
                    s.split_whitespace()
                        .map(|t| parse_rat(t).map_err(Error::Certificate))
                        .collect::<Result<Vec<_>>>()
                })
                .transpose()?
                .ok_or_else(|| lines.err("missing qhat"))?;
            let b_set: Vec<usize> = lines
                .next()
                .and_then(|l| kv(l, "bset "))
                .map(|s| s.split_whitespace().filter_map(|t| t.parse().ok()).collect())
                .ok_or_else(|| lines.err("missing bset"))?;
            let boxv = lines
                .next()
                .and_then(|l| kv(l, "box "))
                .map(parse_interval_tokens)
                .transpose()?
                .ok_or_else(|| lines.err("missing box"))?;
            let cline = lines.next().ok_or_else(|| lines.err("missing cmatrix"))?;
            let dims: Vec<usize> = cline
                .trim()
                .strip_prefix("cmatrix ")
                .map(|s| {
                    s.split_whitespace()
                        .filter_map(|t| t.parse().ok())
                        .collect()
                })
                .unwrap_or_default();
            if dims.len() != 2 {
                return Err(lines.err("bad cmatrix header"));
            }
            let rows = parse_rows(lines, dims[0], dims[1])?;
            let c_matrix = RatMatrix::from_rows(rows);
            Ok(PsdCertificate::SingularSquareKrawczyk {
                basis,
                rank,
                q_hat,
                b_set,
                boxv: IntervalVector(boxv),
                c_matrix,
            })
        }
        "underdetermined" => {
            let rank: usize = lines
                .next()
                .and_then(|l| kv(l, "rank "))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| lines.err("missing rank"))?;
            let q_hat: Vec<Rat> = lines
                .next()
                .and_then(|l| kv(l, "qhat "))
                .map(|s| {
                    s.split_whitespace()
                        .map(|t| parse_rat(t).map_err(Error::Certificate))
                        .collect::<Result<Vec<_>>>()
                })
                .transpose()?
                .ok_or_else(|| lines.err("missing qhat"))?;
            let b_set: Vec<usize> = lines
                .next()
                .and_then(|l| kv(l, "bset "))
                .map(|s| s.split_whitespace().filter_map(|t| t.parse().ok()).collect())
                .ok_or_else(|| lines.err("missing bset"))?;
            let r1 = lines
                .next()
                .and_then(|l| kv(l, "r1 "))
                .map(|s| parse_rat(s).map_err(Error::Certificate))
                .transpose()?
                .ok_or_else(|| lines.err("missing r1"))?;
            let r2 = lines
                .next()
                .and_then(|l| kv(l, "r2 "))
                .map(|s| parse_rat(s).map_err(Error::Certificate))
                .transpose()?
                .ok_or_else(|| lines.err("missing r2"))?;
            let k_lipschitz = lines
                .next()
                .and_then(|l| kv(l, "lipschitz "))
                .map(|s| parse_rat(s).map_err(Error::Certificate))
                .transpose()?
                .ok_or_else(|| lines.err("missing lipschitz"))?;
            let krawczyk_verdict = match lines.peek().map(str::trim) {
                Some(l) if l.starts_with("krawczyk-agrees ") => {
                    let v = l.ends_with("true");
                    lines.next();
                    Some(v)
                }
                _ => None,
            };
            Ok(PsdCertificate::SingularUnderdetermined {
                basis,
                rank,
                q_hat,
                b_set,
                r1,
                r2,
                k_lipschitz,
                krawczyk_verdict,
            })
        }
        other => Err(lines.err(format!("unknown residual kind `{other}`"))),
    }
}

/// Renders an invariant-only candidate file.
pub fn write_candidate(
    invariants: &[(String, IPoly)],
    vars: &[String],
    epsilon: Option<&Rat>,
    mult_degree: Option<u32>,
) -> String {
    let mut out = String::new();
    writeln!(out, "flowcert-candidate v1").unwrap();
    writeln!(out, "vars {}", vars.join(" ")).unwrap();
    if let Some(e) = epsilon {
        writeln!(out, "epsilon {}", rat_to_cert_string(e)).unwrap();
    }
    if let Some(d) = mult_degree {
        writeln!(out, "mult-degree {d}").unwrap();
    }
    for (loc, p) in invariants {
        writeln!(out, "invariant {loc} : {p}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_system;
    use crate::pipeline::{certify_with_invariants, CertOutcome, PipelineOptions};

    #[test]
    fn certificate_roundtrip_through_text() {
        let text = "vars x1\n\nlocation m\n  field\n  x1' = 0\n\ninit at m\n  -x1 >= 0\n  x1 + 1 >= 0\n\nunsafe at m\n  x1 - 2 >= 0\n";
        let sys = parse_system(text).unwrap();
        let opts = PipelineOptions {
            degree: 1,
            ..Default::default()
        };
        let inv = vec![crate::model::parse_polynomial("1 - x1", &sys.vars).unwrap()];
        let CertOutcome::Certified(cert) = certify_with_invariants(&sys, &inv, &opts).unwrap()
        else {
            panic!("expected a certificate")
        };
        let loc_names: Vec<String> = sys.locations.iter().map(|l| l.name.clone()).collect();
        let rendered = write_certificate(&cert, &sys.vars, &loc_names);
        let parsed = parse_certificate(&rendered).unwrap();
        let CertificateFile::Full(back) = parsed else {
            panic!("expected full certificate")
        };
        assert_eq!(back.invariants, cert.invariants);
        assert_eq!(back.conditions.len(), cert.conditions.len());
        // and the reparsed certificate still replays
        match crate::pipeline::check_certificate(&sys, &back).unwrap() {
            crate::pipeline::CheckOutcome::Accept => {}
            other => panic!("reparsed certificate rejected: {other:?}"),
        }
    }

    #[test]
    fn candidate_files_parse() {
        let text = "flowcert-candidate v1\nvars x1 x2\nepsilon 9/100\ninvariant l1 : 1 + 1/2*x1 - x2^2\n";
        let CertificateFile::Candidate {
            epsilon,
            invariants,
            ..
        } = parse_certificate(text).unwrap()
        else {
            panic!("expected candidate")
        };
        assert_eq!(epsilon, Some(crate::rational::rat(9, 100)));
        assert_eq!(invariants.len(), 1);
        assert_eq!(invariants[0].0, "l1");
    }
}

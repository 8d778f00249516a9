//! Exact certification that an interval polynomial is nonnegative, via the
//! full-rank Rohn path (interval Gram enclosure) or the singular path
//! (existence of real roots of the squared-linear-forms system for every
//! member polynomial), plus multiplier-based implication certificates.

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalMatrix, IntervalVector};
use crate::krawczyk::{krawczyk_verify, KrawczykOutcome, KrawczykSystem, PolySystem};
use crate::linalg::{
    interval_linear_enclosure, minimal_norm_pseudoinverse, rohn_psd_check, PsdVerdict, RatMatrix,
    SymRationalMatrix,
};
use crate::poly::{
    coefficient_match, gram_to_poly, upper_triangle_indices, IPoly, Monomial, MonomialVector,
};
use crate::ratcert::truncated_pldlt;
use crate::rational::{rat, rat_int, rat_to_f64, rationalize, sqrt_upper, Rat};
use crate::sdp::sos::{
    solve_implication_numeric, sos_decompose_numeric, MultiplierKind, MultiplierNumeric,
};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Default rank tolerance, relative to the Gram matrix scale.
pub fn default_rank_tol() -> Rat {
    rat(1, 1_000_000)
}

/// A replayable nonnegativity certificate for an interval polynomial.
#[derive(Clone, Debug)]
pub enum PsdCertificate {
    /// m^T [W] m covers the polynomial coefficientwise and [W] passes the
    /// Rohn criterion.
    FullRankRohn {
        basis: MonomialVector,
        w_center: SymRationalMatrix,
        delta: IntervalMatrix,
        rho_bound: Rat,
        lambda_lower: Rat,
        definite: bool,
    },
    /// Krawczyk containment for the square system obtained by freezing the
    /// non-pivot coordinates of the squared-linear-forms map.
    SingularSquareKrawczyk {
        basis: MonomialVector,
        rank: usize,
        q_hat: Vec<Rat>,
        b_set: Vec<usize>,
        boxv: IntervalVector,
        c_matrix: RatMatrix,
    },
    /// Norm inequality of the underdetermined existence test.
    SingularUnderdetermined {
        basis: MonomialVector,
        rank: usize,
        q_hat: Vec<Rat>,
        b_set: Vec<usize>,
        r1: Rat,
        r2: Rat,
        k_lipschitz: Rat,
        /// When r2 = 0 and the system is square, the Krawczyk check is
        /// also attempted on the same data; its verdict is recorded here.
        krawczyk_verdict: Option<bool>,
    },
}

#[derive(Clone, Debug)]
pub enum CertifyOutcome {
    Certified(PsdCertificate),
    Inconclusive(String),
}

impl CertifyOutcome {
    pub fn certificate(self) -> Option<PsdCertificate> {
        match self {
            CertifyOutcome::Certified(c) => Some(c),
            CertifyOutcome::Inconclusive(_) => None,
        }
    }
}

fn delta_from_enclosure(k: usize, w: &IntervalVector) -> IntervalMatrix {
    let idx = upper_triangle_indices(k);
    let mut delta = IntervalMatrix::zeros(k, k);
    for (col, (i, j)) in idx.iter().enumerate() {
        delta.set(*i, *j, w.0[col].clone());
        delta.set(*j, *i, w.0[col].clone());
    }
    delta
}

fn add_center(w0: &SymRationalMatrix, delta: &IntervalMatrix) -> IntervalMatrix {
    let k = w0.order();
    let mut out = IntervalMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let c = Interval::point(w0.at(i, j).clone());
            out.set(i, j, c + delta.at(i, j));
        }
    }
    out
}

/// Full-rank path: numeric SOS of the midpoint, exact interval enclosure
/// of the Gram correction, Rohn check on the resulting interval matrix.
///
/// `tau` is the relative full-rank threshold on the numeric Gram matrix;
/// below it the caller should switch to the singular path.
pub fn certify_psd_fullrank(psi: &IPoly, tau: &Rat) -> Result<CertifyOutcome> {
    let decomp = match sos_decompose_numeric(psi) {
        Ok(d) => d,
        Err(e) => {
            return Ok(CertifyOutcome::Inconclusive(format!(
                "midpoint not SOS: {e}"
            )))
        }
    };
    let scale = decomp.gram.norm().max(1.0);
    if decomp.margin <= rat_to_f64(tau) * scale {
        return Ok(CertifyOutcome::Inconclusive(format!(
            "numeric Gram matrix is rank deficient (margin {:.3e})",
            decomp.margin
        )));
    }
    let k = decomp.basis.len();
    let mut w0 = SymRationalMatrix::zeros(k);
    for i in 0..k {
        for j in i..k {
            w0.set_sym(
                i,
                j,
                rationalize(0.5 * (decomp.gram[(i, j)] + decomp.gram[(j, i)]), 1_000_000_000),
            );
        }
    }
    let cm = coefficient_match(psi, &decomp.basis, &w0)?;
    let enclosure = interval_linear_enclosure(&cm.a, &cm.v)?;
    let delta = delta_from_enclosure(k, &enclosure);
    let w_interval = add_center(&w0, &delta);
    let outcome = rohn_psd_check(&w_interval, &bisect_tol(&w0))?;
    match outcome.verdict {
        PsdVerdict::Inconclusive => Ok(CertifyOutcome::Inconclusive(format!(
            "Rohn criterion failed: rho bound {} vs lambda lower {}",
            rat_to_f64(&outcome.radius_bound),
            rat_to_f64(&outcome.lambda_lower)
        ))),
        v => Ok(CertifyOutcome::Certified(PsdCertificate::FullRankRohn {
            basis: decomp.basis,
            w_center: w0,
            delta,
            rho_bound: outcome.radius_bound,
            lambda_lower: outcome.lambda_lower,
            definite: v == PsdVerdict::PositiveDefinite,
        })),
    }
}

fn bisect_tol(w: &SymRationalMatrix) -> Rat {
    let scale = w.inf_norm().max(Rat::one());
    scale * rat(1, 10_000_000)
}

/// The squared-linear-forms witness system `F(q) - [v] = 0`:
/// psi = sum_i (sum_a q_{i,a} m_a)^2 with q the flattened (form, basis)
/// unknowns; F maps the q-space onto the matched-monomial coefficient
/// space and F(0) = 0.
#[derive(Clone, Debug)]
pub struct WitnessSystem {
    /// Pruned monomial basis of the forms.
    pub basis: MonomialVector,
    /// Number of squared forms (numeric rank of the Gram matrix).
    pub rank: usize,
    /// Matched monomials, in graded-lex order.
    pub span: Vec<Monomial>,
    /// Component polynomials of F over variables q0..q_{lk-1}.
    pub components: Vec<IPoly>,
    /// Interval right-hand side: the coefficient vector of psi.
    pub rhs: IntervalVector,
    /// Approximate root from the rank-revealing factorization.
    pub q_hat: Vec<Rat>,
}

impl WitnessSystem {
    pub fn num_unknowns(&self) -> usize {
        self.rank * self.basis.len()
    }
}

/// Float pivoted Cholesky with rank truncation; returns the factor
/// columns (over original indices) so W ~ sum_k l_k l_k^T.
fn pivoted_cholesky(w: &nalgebra::DMatrix<f64>, tol_abs: f64) -> Vec<Vec<f64>> {
    let n = w.nrows();
    let mut a = w.clone();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut cols = Vec::new();
    loop {
        let Some((p, pivot)) = remaining
            .iter()
            .map(|&i| (i, a[(i, i)]))
            .max_by(|(_, x), (_, y)| x.partial_cmp(y).unwrap())
        else {
            break;
        };
        if pivot <= tol_abs {
            break;
        }
        let sq = pivot.sqrt();
        let mut col = vec![0.0; n];
        col[p] = sq;
        for &i in &remaining {
            if i != p {
                col[i] = a[(i, p)] / sq;
            }
        }
        remaining.retain(|&i| i != p);
        for &i in &remaining {
            for &j in &remaining {
                a[(i, j)] -= col[i] * col[j];
            }
        }
        cols.push(col);
    }
    cols
}

fn build_f_components(
    basis: &MonomialVector,
    rank: usize,
    span: &[Monomial],
) -> Vec<IPoly> {
    let k = basis.len();
    let qvars: Vec<String> = (0..rank * k).map(|i| format!("q{i}")).collect();
    let mut components = Vec::with_capacity(span.len());
    for mono in span {
        let mut f = IPoly::zero(qvars.clone());
        for i in 0..rank {
            for a in 0..k {
                for b in a..k {
                    if basis.0[a].mul(&basis.0[b]) == *mono {
                        let mut exps = vec![0u32; rank * k];
                        exps[i * k + a] += 1;
                        exps[i * k + b] += 1;
                        let coef = if a == b { rat_int(1) } else { rat_int(2) };
                        f.add_term(Monomial(exps), Interval::point(coef));
                    }
                }
            }
        }
        components.push(f);
    }
    components
}

fn product_span(basis: &MonomialVector) -> Vec<Monomial> {
    let k = basis.len();
    let mut span: Vec<Monomial> = Vec::new();
    for a in 0..k {
        for b in a..k {
            let m = basis.0[a].mul(&basis.0[b]);
            if let Err(pos) = span.binary_search(&m) {
                span.insert(pos, m);
            }
        }
    }
    span
}

/// Builds the witness system from the numeric Gram matrix of the
/// midpoint: the forms come from a rank-revealing pivoted Cholesky and
/// the basis is pruned to the monomials the forms actually touch.
/// Errors when the polynomial has support outside the pruned span.
pub fn build_witness_system(
    psi: &IPoly,
    w_hat: &nalgebra::DMatrix<f64>,
    full_basis: &MonomialVector,
    tau: &Rat,
) -> Result<WitnessSystem> {
    let scale = w_hat.norm().max(1.0);
    let tol_abs = rat_to_f64(tau) * scale;
    let cols = pivoted_cholesky(w_hat, tol_abs);
    let rank = cols.len();
    if rank == 0 {
        return Err(Error::SdpNumerical(
            "numeric Gram matrix is zero; nothing to factor".into(),
        ));
    }
    // prune basis monomials no form touches
    let keep: Vec<usize> = (0..full_basis.len())
        .filter(|&j| cols.iter().any(|c| c[j].abs() > 1e-9 * scale.sqrt()))
        .collect();
    let basis = MonomialVector(keep.iter().map(|&j| full_basis.0[j].clone()).collect());
    let span = product_span(&basis);
    for (m, c) in psi.terms() {
        if span.binary_search(m).is_err() && !c.is_zero() {
            return Err(Error::MonomialOutsideSpan(format!("{:?}", m.0)));
        }
    }
    let components = build_f_components(&basis, rank, &span);
    let rhs = IntervalVector(span.iter().map(|m| psi.coefficient(m)).collect());
    let q_hat: Vec<Rat> = (0..rank)
        .flat_map(|i| keep.iter().map(move |&j| (i, j)))
        .map(|(i, j)| rationalize(cols[i][j], 1 << 30))
        .collect();

    Ok(WitnessSystem {
        basis,
        rank,
        span,
        components,
        rhs,
        q_hat,
    })
}

/// Column-pivoted QR (greedy max residual norm, ties to the lowest index)
/// returning the ordered pivot set of size `rank`.
fn column_pivot_order(jac: &nalgebra::DMatrix<f64>, rank: usize) -> Result<Vec<usize>> {
    let m = jac.nrows();
    let n = jac.ncols();
    let mut cols: Vec<nalgebra::DVector<f64>> =
        (0..n).map(|j| jac.column(j).into_owned()).collect();
    let mut chosen = Vec::with_capacity(rank);
    let scale = jac.norm().max(1.0);
    for _ in 0..rank.min(m) {
        let mut best_j = usize::MAX;
        let mut best_norm = -1.0;
        for (j, c) in cols.iter().enumerate() {
            if chosen.contains(&j) {
                continue;
            }
            let norm = c.norm();
            if norm > best_norm + 1e-14 * scale {
                best_norm = norm;
                best_j = j;
            }
        }
        if best_norm <= 1e-10 * scale {
            return Err(Error::RankDeficient);
        }
        chosen.push(best_j);
        let q = &cols[best_j] / best_norm;
        for j in 0..n {
            if !chosen.contains(&j) {
                let proj = q.dot(&cols[j]);
                cols[j] -= &q * proj;
            }
        }
    }
    Ok(chosen)
}

/// The square system obtained by freezing the non-pivot q coordinates at
/// their approximate values.
#[derive(Clone, Debug)]
pub struct SquareSystem {
    pub components: Vec<IPoly>,
    pub rhs: IntervalVector,
    pub q_hat_b: Vec<Rat>,
    pub b_set: Vec<usize>,
}

/// Chooses the pivot index set B by column-pivoted QR of the Jacobian at
/// q_hat and freezes the remaining coordinates at their q_hat values.
pub fn reduce_to_square(ws: &WitnessSystem) -> Result<SquareSystem> {
    let r = ws.num_unknowns();
    let s = ws.span.len();
    if r < s {
        return Err(Error::RankDeficient);
    }
    let mut jac = nalgebra::DMatrix::zeros(s, r);
    for (row, f) in ws.components.iter().enumerate() {
        for col in 0..r {
            let v = f.partial_derivative(col).eval_point(&ws.q_hat);
            jac[(row, col)] = rat_to_f64(&v.midpoint());
        }
    }
    let b_set = column_pivot_order(&jac, s)?;
    Ok(freeze_to_square(ws, &b_set))
}

fn freeze_to_square(ws: &WitnessSystem, b_set: &[usize]) -> SquareSystem {
    let frozen: Vec<(usize, Rat)> = (0..ws.num_unknowns())
        .filter(|j| !b_set.contains(j))
        .map(|j| (j, ws.q_hat[j].clone()))
        .collect();
    let components: Vec<IPoly> = ws
        .components
        .iter()
        .map(|f| reorder_vars(&f.eval_vars(&frozen), b_set))
        .collect();
    let q_hat_b: Vec<Rat> = b_set.iter().map(|&j| ws.q_hat[j].clone()).collect();
    SquareSystem {
        components,
        rhs: ws.rhs.clone(),
        q_hat_b,
        b_set: b_set.to_vec(),
    }
}

/// Reorders the variables of a polynomial over the surviving q-variables
/// into pivot order.
fn reorder_vars(p: &IPoly, b_set: &[usize]) -> IPoly {
    let target: Vec<String> = b_set.iter().map(|j| format!("q{j}")).collect();
    let mut out = IPoly::zero(target.clone());
    for (m, c) in p.terms() {
        let mut exps = vec![0u32; target.len()];
        for (old_idx, &e) in m.0.iter().enumerate() {
            if e > 0 {
                let name = &p.vars()[old_idx];
                let new_idx = target
                    .iter()
                    .position(|t| t == name)
                    .expect("pivot set covers surviving variables");
                exps[new_idx] = e;
            }
        }
        out.add_term(Monomial(exps), c.clone());
    }
    out
}

/// Krawczyk root existence for the square system with the interval
/// right-hand side folded into the residual term; the box is widened and
/// retried a few times on failure.
pub fn certify_root_square(sq: &SquareSystem, ws: &WitnessSystem) -> Result<CertifyOutcome> {
    let s = sq.components.len();
    let mut jac = nalgebra::DMatrix::zeros(s, s);
    for (row, f) in sq.components.iter().enumerate() {
        for col in 0..s {
            let v = f.partial_derivative(col).eval_point(&sq.q_hat_b);
            jac[(row, col)] = rat_to_f64(&v.midpoint());
        }
    }
    let jinv = match jac.try_inverse() {
        Some(m) => m,
        None => {
            return Ok(CertifyOutcome::Inconclusive(
                "singular midpoint Jacobian".into(),
            ))
        }
    };
    let mut c = RatMatrix::zeros(s, s);
    for i in 0..s {
        for j in 0..s {
            c.set(i, j, rationalize(jinv[(i, j)], 1 << 40));
        }
    }
    // initial half-width: max(1e-3, 10 * max deviation of G(q_hat) from
    // the midpoint right-hand side)
    let sys = PolySystem::new(sq.components.clone());
    let fq = sys.eval_point(&sq.q_hat_b);
    let dev = fq
        .0
        .iter()
        .zip(&sq.rhs.0)
        .map(|(a, b)| (a.midpoint() - b.midpoint()).abs())
        .max()
        .unwrap_or_else(Rat::zero);
    let mut half = rat(1, 1000).max(rat_int(10) * dev);
    for _attempt in 0..4 {
        let boxv = IntervalVector(
            sq.q_hat_b
                .iter()
                .map(|q| Interval::new(q - &half, q + &half))
                .collect(),
        );
        match krawczyk_verify(&sys, &sq.q_hat_b, &boxv, &c, Some(&sq.rhs))? {
            KrawczykOutcome::VerifiedUniqueRoot => {
                return Ok(CertifyOutcome::Certified(
                    PsdCertificate::SingularSquareKrawczyk {
                        basis: ws.basis.clone(),
                        rank: ws.rank,
                        q_hat: ws.q_hat.clone(),
                        b_set: sq.b_set.clone(),
                        boxv,
                        c_matrix: c.clone(),
                    },
                ));
            }
            KrawczykOutcome::Inconclusive => {
                half = half * rat_int(4);
            }
        }
    }
    Ok(CertifyOutcome::Inconclusive(
        "Krawczyk containment failed after box widening".into(),
    ))
}

/// Frobenius-type Lipschitz constant of the pivot-block Jacobian. F is
/// quadratic, so the second derivative is constant and the bound follows
/// from the squared partial-derivative coefficients, evaluated exactly.
fn lipschitz_bound(ws: &WitnessSystem, b_set: &[usize]) -> Rat {
    let mut total = Rat::zero();
    for f in &ws.components {
        for &j in b_set {
            let d = f.partial_derivative(j);
            for (_, c) in d.terms() {
                let v = c.midpoint();
                total += &v * &v;
            }
        }
    }
    sqrt_upper(&total)
}

/// Existence condition for the underdetermined system over the region
/// `||q_B - q_hat_B|| <= r1, ||q_N - q_hat_N|| <= r2`, checked in exact
/// rational arithmetic with certified norm upper bounds.
pub fn certify_root_underdetermined(
    ws: &WitnessSystem,
    r1: &Rat,
    r2: &Rat,
) -> Result<CertifyOutcome> {
    let r = ws.num_unknowns();
    let s = ws.span.len();
    if r < s {
        return Err(Error::RankDeficient);
    }
    let mut jac_f = nalgebra::DMatrix::zeros(s, r);
    let mut jac_rat = RatMatrix::zeros(s, r);
    for (row, f) in ws.components.iter().enumerate() {
        for col in 0..r {
            let v = f.partial_derivative(col).eval_point(&ws.q_hat).midpoint();
            jac_f[(row, col)] = rat_to_f64(&v);
            jac_rat.set(row, col, v);
        }
    }
    let b_set = column_pivot_order(&jac_f, s)?;
    let mut jb = RatMatrix::zeros(s, s);
    for (bi, &j) in b_set.iter().enumerate() {
        for i in 0..s {
            jb.set(i, bi, jac_rat.at(i, j).clone());
        }
    }
    let jb_inv = jb.inverse().map_err(|_| Error::RankDeficient)?;

    // max over [v] of || Jb^-1 (F(q_hat) - v) ||_2
    let sys = PolySystem::new(ws.components.clone());
    let fq = sys.eval_point(&ws.q_hat);
    let gap: Vec<Interval> = fq
        .0
        .iter()
        .zip(&ws.rhs.0)
        .map(|(a, b)| a.clone() - b)
        .collect();
    let mut term1_sq = Rat::zero();
    for i in 0..s {
        let mut acc = Interval::zero();
        for j in 0..s {
            acc = acc + gap[j].mul_rat(jb_inv.at(i, j));
        }
        let m = acc.mag();
        term1_sq += &m * &m;
    }
    let term1 = sqrt_upper(&term1_sq);

    // || Jb^-1 ||_2 bounded by its Frobenius norm
    let mut fro_sq = Rat::zero();
    for i in 0..s {
        for j in 0..s {
            let v = jb_inv.at(i, j);
            fro_sq += v * v;
        }
    }
    let jb_inv_norm = sqrt_upper(&fro_sq);

    let k_lip = lipschitz_bound(ws, &b_set);

    // max over the region of || F'_N(q) ||; zero when N is empty
    let n_set: Vec<usize> = (0..r).filter(|j| !b_set.contains(j)).collect();
    let fn_norm = if n_set.is_empty() {
        Rat::zero()
    } else {
        let boxv = IntervalVector(
            (0..r)
                .map(|j| {
                    let w = if b_set.contains(&j) { r1 } else { r2 };
                    Interval::new(&ws.q_hat[j] - w, &ws.q_hat[j] + w)
                })
                .collect(),
        );
        let mut acc = Rat::zero();
        for f in &ws.components {
            for &j in &n_set {
                let m = f.partial_derivative(j).eval_box(&boxv).mag();
                acc += &m * &m;
            }
        }
        sqrt_upper(&acc)
    };

    let lhs =
        &term1 + &jb_inv_norm * (rat(1, 2) * &k_lip * (r1 + r2) * r1 + &fn_norm * r2);
    if lhs <= *r1 {
        // with r2 = 0 on a square system the Krawczyk test applies to the
        // same data; record its verdict for cross-checking
        let krawczyk_verdict = if r2.is_zero() && n_set.is_empty() {
            let sq = freeze_to_square(ws, &b_set);
            certify_root_square(&sq, ws)
                .ok()
                .map(|o| matches!(o, CertifyOutcome::Certified(_)))
        } else {
            None
        };
        Ok(CertifyOutcome::Certified(
            PsdCertificate::SingularUnderdetermined {
                basis: ws.basis.clone(),
                rank: ws.rank,
                q_hat: ws.q_hat.clone(),
                b_set,
                r1: r1.clone(),
                r2: r2.clone(),
                k_lipschitz: k_lip,
                krawczyk_verdict,
            },
        ))
    } else {
        Ok(CertifyOutcome::Inconclusive(format!(
            "existence bound {} exceeds r1 {}",
            rat_to_f64(&lhs),
            rat_to_f64(r1)
        )))
    }
}

/// The zero polynomial is nonnegative by a vacuous Gram identity.
fn trivial_zero_certificate() -> PsdCertificate {
    PsdCertificate::FullRankRohn {
        basis: MonomialVector(vec![]),
        w_center: SymRationalMatrix::zeros(0),
        delta: IntervalMatrix::zeros(0, 0),
        rho_bound: Rat::zero(),
        lambda_lower: Rat::zero(),
        definite: false,
    }
}

/// Full certification routine: full-rank Rohn path first, then the square
/// Krawczyk path, then the underdetermined grid.
pub fn certify_psd_auto(psi: &IPoly, tau: &Rat) -> Result<CertifyOutcome> {
    if psi.is_zero() {
        return Ok(CertifyOutcome::Certified(trivial_zero_certificate()));
    }
    let mut reasons = Vec::new();
    match certify_psd_fullrank(psi, tau)? {
        CertifyOutcome::Certified(c) => return Ok(CertifyOutcome::Certified(c)),
        CertifyOutcome::Inconclusive(r) => reasons.push(format!("full-rank path: {r}")),
    }
    let decomp = match sos_decompose_numeric(psi) {
        Ok(d) => d,
        Err(e) => {
            reasons.push(format!("singular path: midpoint not SOS: {e}"));
            return Ok(CertifyOutcome::Inconclusive(reasons.join("; ")));
        }
    };
    let ws = match build_witness_system(psi, &decomp.gram, &decomp.basis, tau) {
        Ok(ws) => ws,
        Err(e) => {
            reasons.push(format!("singular path: {e}"));
            return Ok(CertifyOutcome::Inconclusive(reasons.join("; ")));
        }
    };
    match reduce_to_square(&ws) {
        Ok(sq) => match certify_root_square(&sq, &ws)? {
            CertifyOutcome::Certified(c) => return Ok(CertifyOutcome::Certified(c)),
            CertifyOutcome::Inconclusive(r) => reasons.push(format!("square path: {r}")),
        },
        Err(e) => reasons.push(format!("square path: {e}")),
    }
    for r1_den in [1000i64, 100, 10, 1] {
        let r1 = rat(1, r1_den);
        for r2 in [Rat::zero(), &r1 / rat_int(10), &r1 / rat_int(2)] {
            if let Ok(CertifyOutcome::Certified(c)) = certify_root_underdetermined(&ws, &r1, &r2)
            {
                return Ok(CertifyOutcome::Certified(c));
            }
        }
    }
    reasons.push("underdetermined grid exhausted".into());
    Ok(CertifyOutcome::Inconclusive(reasons.join("; ")))
}

/// Replays a certificate against the interval polynomial it claims to
/// certify. Pure recomputation, no numeric solving.
pub fn replay_certificate(cert: &PsdCertificate, psi: &IPoly) -> Result<bool> {
    match cert {
        PsdCertificate::FullRankRohn {
            basis,
            w_center,
            delta,
            ..
        } => {
            let cm = match coefficient_match(psi, basis, w_center) {
                Ok(cm) => cm,
                Err(_) => return Ok(false),
            };
            let pseudo = minimal_norm_pseudoinverse(&cm.a)?;
            // A P = I exactly: P really is a right inverse
            let ap = cm.a.mul(&pseudo);
            let s = cm.a.rows;
            for i in 0..s {
                for j in 0..s {
                    let expected = if i == j { Rat::one() } else { Rat::zero() };
                    if *ap.at(i, j) != expected {
                        return Ok(false);
                    }
                }
            }
            // P [v] must land inside the stored correction
            let idx = upper_triangle_indices(basis.len());
            for (col, (i, j)) in idx.iter().enumerate() {
                let mut acc = Interval::zero();
                for row in 0..s {
                    acc = acc + cm.v.0[row].mul_rat(pseudo.at(col, row));
                }
                if !delta.at(*i, *j).contains(&acc) {
                    return Ok(false);
                }
            }
            let w_interval = add_center(w_center, delta);
            let outcome = rohn_psd_check(&w_interval, &bisect_tol(w_center))?;
            Ok(outcome.verdict != PsdVerdict::Inconclusive)
        }
        PsdCertificate::SingularSquareKrawczyk {
            basis,
            rank,
            q_hat,
            b_set,
            boxv,
            c_matrix,
        } => {
            let ws = match rebuild_witness(psi, basis, *rank, q_hat) {
                Some(ws) => ws,
                None => return Ok(false),
            };
            let sq = freeze_to_square(&ws, b_set);
            let sys = PolySystem::new(sq.components);
            match krawczyk_verify(&sys, &sq.q_hat_b, boxv, c_matrix, Some(&ws.rhs)) {
                Ok(KrawczykOutcome::VerifiedUniqueRoot) => Ok(true),
                _ => Ok(false),
            }
        }
        PsdCertificate::SingularUnderdetermined {
            basis,
            rank,
            q_hat,
            r1,
            r2,
            ..
        } => {
            let ws = match rebuild_witness(psi, basis, *rank, q_hat) {
                Some(ws) => ws,
                None => return Ok(false),
            };
            match certify_root_underdetermined(&ws, r1, r2) {
                Ok(CertifyOutcome::Certified(_)) => Ok(true),
                _ => Ok(false),
            }
        }
    }
}

fn rebuild_witness(
    psi: &IPoly,
    basis: &MonomialVector,
    rank: usize,
    q_hat: &[Rat],
) -> Option<WitnessSystem> {
    let k = basis.len();
    if q_hat.len() != rank * k {
        return None;
    }
    let span = product_span(basis);
    for (m, c) in psi.terms() {
        if span.binary_search(m).is_err() && !c.is_zero() {
            return None;
        }
    }
    let components = build_f_components(basis, rank, &span);
    let rhs = IntervalVector(span.iter().map(|m| psi.coefficient(m)).collect());
    Some(WitnessSystem {
        basis: basis.clone(),
        rank,
        span,
        components,
        rhs,
        q_hat: q_hat.to_vec(),
    })
}

/// A rational multiplier attached to a hypothesis polynomial.
#[derive(Clone, Debug)]
pub enum RationalMultiplier {
    /// Exact rational PSD Gram matrix over a monomial basis; sound for
    /// one-sided hypotheses h >= 0.
    Sos {
        basis: MonomialVector,
        matrix: SymRationalMatrix,
    },
    /// Free polynomial; sound only for the flow hypothesis.
    Free { poly: IPoly },
}

impl RationalMultiplier {
    pub fn to_poly(&self, vars: &[String]) -> IPoly {
        match self {
            RationalMultiplier::Sos { basis, matrix } => gram_to_poly(basis, matrix, vars),
            RationalMultiplier::Free { poly } => poly.embed(vars),
        }
    }

    /// Exact PSD validation for SOS multipliers (free ones are always
    /// admissible).
    pub fn validate(&self) -> bool {
        match self {
            RationalMultiplier::Sos { matrix, .. } => matrix.is_psd_exact(),
            RationalMultiplier::Free { .. } => true,
        }
    }
}

/// A replayable certificate for `hyps nonneg implies target nonneg`.
#[derive(Clone, Debug)]
pub struct ImplicationCertificate {
    pub multipliers: Vec<RationalMultiplier>,
    pub residual_cert: PsdCertificate,
}

impl ImplicationCertificate {
    /// Exact interval residual target - sum mult_i * h_i.
    pub fn residual(&self, target: &IPoly, hyps: &[IPoly]) -> IPoly {
        let mut res = target.clone();
        for (m, h) in self.multipliers.iter().zip(hyps) {
            let mp = m.to_poly(target.vars());
            res = res.sub(&mp.mul(h));
        }
        res
    }

    pub fn replay(&self, target: &IPoly, hyps: &[IPoly]) -> Result<bool> {
        if self.multipliers.len() != hyps.len() {
            return Ok(false);
        }
        if !self.multipliers.iter().all(|m| m.validate()) {
            return Ok(false);
        }
        let res = self
            .residual(target, hyps)
            .outward_round(&outward_denominator());
        replay_certificate(&self.residual_cert, &res)
    }
}

pub fn outward_denominator() -> BigInt {
    BigInt::one() << 64
}

/// Certifies `h_1 >= 0, ..., h_k >= 0 implies target >= 0` with the given
/// per-hypothesis multiplier semantics: numeric multipliers are found for
/// the midpoint identity, recovered as exact rationals along a
/// denominator-bound schedule (small denominators first, so clean values
/// snap exactly), and the exact interval residual is certified
/// nonnegative at the first bound that works.
pub fn certify_implication(
    hyps: &[(IPoly, MultiplierKind)],
    target: &IPoly,
    tau: &Rat,
) -> Result<std::result::Result<ImplicationCertificate, String>> {
    let (prog, layout) = crate::sdp::sos::build_implication_program(target, hyps);
    let (witness, margin) =
        match crate::sdp::solve_lmi_max_margin(&prog, &[layout.sigma0_block]) {
            Ok(v) => v,
            Err(e) => return Ok(Err(format!("numeric multiplier synthesis failed: {e}"))),
        };
    // polish the equality residuals before recovery
    let refined = crate::ratcert::gauss_newton_refine(&witness, &prog).witness;
    let numeric = crate::sdp::sos::unpack_witness(&refined, &layout, margin);

    let hyp_polys: Vec<IPoly> = hyps.iter().map(|(h, _)| h.clone()).collect();
    let mut last_reason = String::new();
    for bound in [10u64, 100, 10_000, 1_000_000, 1_000_000_000, 1_000_000_000_000] {
        let mut multipliers = Vec::new();
        for m in &numeric.multipliers {
            multipliers.push(match m {
                MultiplierNumeric::Sos { gram, basis } => {
                    let k = gram.nrows();
                    let mut rat_entries = crate::linalg::RatMatrix::zeros(k, k);
                    for i in 0..k {
                        for j in i..k {
                            let v = rationalize(0.5 * (gram[(i, j)] + gram[(j, i)]), bound);
                            rat_entries.set(i, j, v.clone());
                            rat_entries.set(j, i, v);
                        }
                    }
                    RationalMultiplier::Sos {
                        basis: basis.clone(),
                        matrix: crate::ratcert::truncated_pldlt_rational(&rat_entries),
                    }
                }
                MultiplierNumeric::Free { coeffs, basis } => {
                    let mut poly = IPoly::zero(target.vars().to_vec());
                    for (j, mono) in basis.0.iter().enumerate() {
                        poly.add_term(
                            mono.clone(),
                            Interval::point(rationalize(coeffs[j], bound)),
                        );
                    }
                    RationalMultiplier::Free { poly }
                }
            });
        }
        let probe = ImplicationCertificate {
            multipliers,
            residual_cert: trivial_zero_certificate(),
        };
        let residual = probe
            .residual(target, &hyp_polys)
            .outward_round(&outward_denominator());
        match certify_psd_auto(&residual, tau)? {
            CertifyOutcome::Certified(res_cert) => {
                return Ok(Ok(ImplicationCertificate {
                    multipliers: probe.multipliers,
                    residual_cert: res_cert,
                }))
            }
            CertifyOutcome::Inconclusive(reason) => {
                last_reason = format!("denominator {bound}: {reason}");
            }
        }
    }
    Ok(Err(format!("residual certification failed: {last_reason}")))
}

/// Convenience wrapper: exact hypotheses with SOS multipliers at the
/// balancing degree.
pub fn certify_implication_default(
    hyps: &[IPoly],
    target: &IPoly,
    mult_degree: Option<u32>,
) -> Result<std::result::Result<ImplicationCertificate, String>> {
    let spec = hyps
        .iter()
        .map(|h| (h.clone(), default_multiplier(h, target, mult_degree)))
        .collect::<Vec<_>>();
    certify_implication(&spec, target, &default_rank_tol())
}

/// Minimal balancing: the multiplier degree tops the product up to the
/// target's even-closure degree.
pub fn default_multiplier(h: &IPoly, target: &IPoly, cap: Option<u32>) -> MultiplierKind {
    let d_target = target.degree().div_ceil(2) * 2;
    let mut d = d_target.saturating_sub(h.degree());
    d -= d % 2;
    if let Some(c) = cap {
        d = d.min(c - c % 2);
    }
    MultiplierKind::Sos { degree: d }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_decimal;

    fn x_var() -> Vec<String> {
        vec!["x".into()]
    }

    fn xy_vars() -> Vec<String> {
        vec!["x1".into(), "x2".into()]
    }

    fn dec(s: &str) -> Rat {
        parse_decimal(s).unwrap()
    }

    /// The Rohn-path running example: a quadratic with interval
    /// coefficients wiggling around a positive definite form.
    fn example1_psi() -> IPoly {
        let mut p = IPoly::zero(xy_vars());
        let mut add = |e: [u32; 2], lo: &str, hi: &str| {
            p.add_term(Monomial(e.to_vec()), Interval::new(dec(lo), dec(hi)));
        };
        add([0, 0], "0.9574", "0.9574");
        add([1, 0], "-1.9362", "-1.9362");
        add([0, 1], "-0.3404", "-0.3404");
        add([2, 0], "1.1852", "1.2593");
        add([1, 1], "-0.4576", "-0.4237");
        add([0, 2], "1.1388", "1.1945");
        p
    }

    #[test]
    fn fullrank_certifies_example1() {
        let out = certify_psd_fullrank(&example1_psi(), &default_rank_tol()).unwrap();
        match out {
            CertifyOutcome::Certified(PsdCertificate::FullRankRohn {
                rho_bound,
                lambda_lower,
                definite,
                ..
            }) => {
                assert!(definite);
                // paper values: rho = 0.0422, lambda_min = 0.0461
                let rho = rat_to_f64(&rho_bound);
                let lam = rat_to_f64(&lambda_lower);
                assert!((0.037..=0.047).contains(&rho), "rho {rho}");
                assert!((0.041..=0.051).contains(&lam), "lambda {lam}");
            }
            other => panic!("expected full-rank certificate, got {other:?}"),
        }
    }

    #[test]
    fn fullrank_certificate_replays() {
        let psi = example1_psi();
        let cert = certify_psd_fullrank(&psi, &default_rank_tol())
            .unwrap()
            .certificate()
            .unwrap();
        assert!(replay_certificate(&cert, &psi).unwrap());
        // a perturbed target must fail the replay
        let mut other = psi.clone();
        other.add_term(Monomial(vec![2, 0]), Interval::point(rat(1, 2)));
        assert!(!replay_certificate(&cert, &other).unwrap());
    }

    #[test]
    fn trivial_square_certifies() {
        // x^2 as a point polynomial: the Gram matrix is singular and the
        // square Krawczyk path takes over
        let x = IPoly::var(x_var(), 0);
        let psi = x.mul(&x);
        let out = certify_psd_auto(&psi, &default_rank_tol()).unwrap();
        match out {
            CertifyOutcome::Certified(PsdCertificate::SingularSquareKrawczyk {
                rank, ..
            }) => assert_eq!(rank, 1),
            other => panic!("expected square certificate, got {other:?}"),
        }
    }

    #[test]
    fn wide_interval_square_is_inconclusive() {
        // [-1,1] x^2 contains -x^2
        let mut psi = IPoly::zero(x_var());
        psi.add_term(Monomial(vec![2]), Interval::new(rat_int(-1), rat_int(1)));
        let out = certify_psd_auto(&psi, &default_rank_tol()).unwrap();
        assert!(matches!(out, CertifyOutcome::Inconclusive(_)));
    }

    #[test]
    fn witness_system_shapes() {
        // psi = x^2 with Gram [[0,0],[0,1]] on (1, x): one form q*x,
        // pruned to basis (x), F(q) = q^2, rhs [1,1], q_hat 1
        let x = IPoly::var(x_var(), 0);
        let psi = x.mul(&x);
        let basis = crate::poly::monomial_basis(1, 1);
        let gram = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let ws = build_witness_system(&psi, &gram, &basis, &default_rank_tol()).unwrap();
        assert_eq!(ws.rank, 1);
        assert_eq!(ws.basis.len(), 1);
        assert_eq!(ws.span.len(), 1);
        assert_eq!(ws.q_hat, vec![Rat::one()]);
        let v = ws.components[0].eval_point(&[rat_int(2)]);
        assert_eq!(v, Interval::point(rat_int(4)));
    }

    #[test]
    fn witness_system_two_vars() {
        // psi = (x + y)^2: one form over 2 unknowns, F(q_hat) = (1, 2, 1)
        let x = IPoly::var(xy_vars(), 0);
        let y = IPoly::var(xy_vars(), 1);
        let p = x.add(&y);
        let psi = p.mul(&p);
        let basis = crate::poly::monomial_basis(2, 1);
        let gram = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0],
        );
        let ws = build_witness_system(&psi, &gram, &basis, &default_rank_tol()).unwrap();
        assert_eq!(ws.rank, 1);
        assert_eq!(ws.basis.len(), 2);
        assert_eq!(ws.span.len(), 3);
        let sys = PolySystem::new(ws.components.clone());
        let at_hat = sys.eval_point(&ws.q_hat);
        let vals: Vec<f64> = at_hat.0.iter().map(|i| rat_to_f64(&i.midpoint())).collect();
        assert!((vals[0] - 1.0).abs() < 1e-6);
        assert!((vals[1] - 2.0).abs() < 1e-6);
        assert!((vals[2] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pivot_order_prefers_heavy_columns() {
        // F'(q_hat) = [[1,0,2],[0,1,0]]: the norm-2 column pivots first,
        // then the unit column; B = (2, 1) zero-indexed
        let jac = nalgebra::DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 1.0, 0.0]);
        let b = column_pivot_order(&jac, 2).unwrap();
        assert_eq!(b, vec![2, 1]);
        // square system: all columns chosen
        let jac = nalgebra::DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 2.0]);
        assert_eq!(column_pivot_order(&jac, 2).unwrap(), vec![0, 1]);
        // rank-deficient rejection
        let jac = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(column_pivot_order(&jac, 2).is_err());
    }

    #[test]
    fn square_krawczyk_on_interval_rhs() {
        // q^2 = [0.99, 1.01]: verified roots near 1 for every member
        let mut psi = IPoly::zero(x_var());
        psi.add_term(
            Monomial(vec![2]),
            Interval::new(rat(99, 100), rat(101, 100)),
        );
        let out = certify_psd_auto(&psi, &default_rank_tol()).unwrap();
        assert!(matches!(out, CertifyOutcome::Certified(_)));
    }

    #[test]
    fn underdetermined_linear_example() {
        // F(q) = q1 + q2, [v] = [-0.1, 0.1], q_hat = 0, B = {0}:
        // 0.1 + 1 * (0 + 1 * r2) <= r1 holds for r1 = 0.2, r2 = 0.05
        let qvars = vec!["q0".to_string(), "q1".to_string()];
        let f = IPoly::var(qvars.clone(), 0).add(&IPoly::var(qvars.clone(), 1));
        let ws = WitnessSystem {
            basis: MonomialVector(vec![Monomial(vec![1])]),
            rank: 2,
            span: vec![Monomial(vec![1])],
            components: vec![f],
            rhs: IntervalVector(vec![Interval::new(rat(-1, 10), rat(1, 10))]),
            q_hat: vec![Rat::zero(), Rat::zero()],
        };
        let out = certify_root_underdetermined(&ws, &rat(2, 10), &rat(5, 100)).unwrap();
        assert!(matches!(out, CertifyOutcome::Certified(_)), "{out:?}");
    }

    #[test]
    fn underdetermined_negative_rhs_fails() {
        // q^2 = [-1, -0.5] has no real roots: every grid point fails
        let qvars = vec!["q0".to_string()];
        let q = IPoly::var(qvars.clone(), 0);
        let ws = WitnessSystem {
            basis: MonomialVector(vec![Monomial(vec![1])]),
            rank: 1,
            span: vec![Monomial(vec![2])],
            components: vec![q.mul(&q)],
            rhs: IntervalVector(vec![Interval::new(rat_int(-1), rat(-1, 2))]),
            q_hat: vec![Rat::one()],
        };
        for r1_den in [1000i64, 100, 10, 1] {
            let r1 = rat(1, r1_den);
            for r2 in [Rat::zero(), &r1 / rat_int(10), &r1 / rat_int(2)] {
                let out = certify_root_underdetermined(&ws, &r1, &r2).unwrap();
                assert!(matches!(out, CertifyOutcome::Inconclusive(_)));
            }
        }
    }

    #[test]
    fn implication_with_sos_multiplier() {
        // 1 - x^2 >= 0 implies 2 - x^2 >= 0
        let x = IPoly::var(x_var(), 0);
        let one = IPoly::constant(x_var(), Rat::one());
        let two = IPoly::constant(x_var(), rat_int(2));
        let hyp = one.sub(&x.mul(&x));
        let target = two.sub(&x.mul(&x));
        let cert = certify_implication_default(&[hyp.clone()], &target, None)
            .unwrap()
            .expect("certificate");
        assert!(cert.replay(&target, &[hyp]).unwrap());
    }

    #[test]
    fn implication_shift_example() {
        // x >= 0 implies x + 1 >= 0 with degree-0 multiplier
        let x = IPoly::var(x_var(), 0);
        let target = x.add(&IPoly::constant(x_var(), Rat::one()));
        let cert = certify_implication(
            &[(x.clone(), MultiplierKind::Sos { degree: 0 })],
            &target,
            &default_rank_tol(),
        )
        .unwrap()
        .expect("certificate");
        assert!(cert.replay(&target, &[x]).unwrap());
    }
}

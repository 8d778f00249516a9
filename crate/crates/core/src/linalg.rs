//! Exact rational dense linear algebra: symmetric matrices, LDL^T-based
//! positive-semidefiniteness decisions, certified eigenvalue and spectral
//! radius bounds, and verified enclosures for interval linear systems.

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalMatrix, IntervalVector};
use crate::rational::{rat, rat_int, rat_to_f64, rationalize, Rat};
use num_traits::{One, Signed, Zero};

/// Dense rational matrix, row major.
#[derive(Clone, Debug, PartialEq)]
pub struct RatMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rat::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend(row);
        }
        RatMatrix { rows: r, cols: c, data }
    }

    pub fn at(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> RatMatrix {
        let mut t = RatMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.at(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = RatMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.at(i, j) + a * other.at(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Rat::zero();
                for j in 0..self.cols {
                    acc += self.at(i, j) * &v[j];
                }
                acc
            })
            .collect()
    }

    /// Exact inverse via Gauss-Jordan with partial pivoting.
    pub fn inverse(&self) -> Result<RatMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = RatMatrix::identity(n);
        for col in 0..n {
            let pivot_row = (col..n)
                .filter(|&r| !a.at(r, col).is_zero())
                .max_by(|&r1, &r2| {
                    a.at(r1, col).abs().cmp(&a.at(r2, col).abs())
                })
                .ok_or(Error::RankDeficient)?;
            if pivot_row != col {
                for j in 0..n {
                    let tmp = a.at(col, j).clone();
                    a.set(col, j, a.at(pivot_row, j).clone());
                    a.set(pivot_row, j, tmp);
                    let tmp = inv.at(col, j).clone();
                    inv.set(col, j, inv.at(pivot_row, j).clone());
                    inv.set(pivot_row, j, tmp);
                }
            }
            let p = a.at(col, col).clone();
            for j in 0..n {
                a.set(col, j, a.at(col, j) / &p);
                inv.set(col, j, inv.at(col, j) / &p);
            }
            for r in 0..n {
                if r == col || a.at(r, col).is_zero() {
                    continue;
                }
                let f = a.at(r, col).clone();
                for j in 0..n {
                    let v = a.at(r, j) - &f * a.at(col, j);
                    a.set(r, j, v);
                    let v = inv.at(r, j) - &f * inv.at(col, j);
                    inv.set(r, j, v);
                }
            }
        }
        Ok(inv)
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| rat_to_f64(self.at(i, j)))
    }
}

/// Symmetric rational matrix guarded by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SymRationalMatrix {
    n: usize,
    m: RatMatrix,
}

impl SymRationalMatrix {
    pub fn zeros(n: usize) -> Self {
        SymRationalMatrix {
            n,
            m: RatMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        SymRationalMatrix {
            n,
            m: RatMatrix::identity(n),
        }
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self> {
        let m = RatMatrix::from_rows(rows);
        if m.rows != m.cols {
            return Err(Error::DimensionMismatch("matrix not square".into()));
        }
        for i in 0..m.rows {
            for j in (i + 1)..m.cols {
                if m.at(i, j) != m.at(j, i) {
                    return Err(Error::DimensionMismatch(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SymRationalMatrix { n: m.rows, m })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn at(&self, i: usize, j: usize) -> &Rat {
        self.m.at(i, j)
    }

    /// Sets W[i][j] and W[j][i].
    pub fn set_sym(&mut self, i: usize, j: usize, v: Rat) {
        self.m.set(i, j, v.clone());
        self.m.set(j, i, v);
    }

    pub fn as_mat(&self) -> &RatMatrix {
        &self.m
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        self.m.to_f64()
    }

    pub fn inf_norm(&self) -> Rat {
        (0..self.n)
            .map(|i| {
                let mut s = Rat::zero();
                for j in 0..self.n {
                    s += self.at(i, j).abs();
                }
                s
            })
            .max()
            .unwrap_or_else(Rat::zero)
    }

    pub fn trace(&self) -> Rat {
        (0..self.n).map(|i| self.at(i, i).clone()).sum()
    }

    /// Exact PSD decision by LDL^T with symmetric (max-diagonal) pivoting.
    ///
    /// PSD iff elimination completes with nonnegative pivots, where a zero
    /// pivot forces its whole active row/column to vanish.
    pub fn is_psd_exact(&self) -> bool {
        let n = self.n;
        let mut a = self.m.clone();
        let mut active: Vec<usize> = (0..n).collect();
        while !active.is_empty() {
            let (p, max_diag) = active
                .iter()
                .map(|&i| (i, a.at(i, i).clone()))
                .max_by(|(_, x), (_, y)| x.cmp(y))
                .unwrap();
            if max_diag.is_negative() {
                return false;
            }
            if max_diag.is_zero() {
                // remaining block must be the zero matrix
                for &i in &active {
                    for &j in &active {
                        if !a.at(i, j).is_zero() {
                            return false;
                        }
                    }
                }
                return true;
            }
            active.retain(|&i| i != p);
            for idx in 0..active.len() {
                let i = active[idx];
                let f = a.at(i, p) / &max_diag;
                if f.is_zero() {
                    continue;
                }
                for jdx in idx..active.len() {
                    let j = active[jdx];
                    let v = a.at(i, j) - &f * a.at(p, j);
                    a.set(i, j, v.clone());
                    a.set(j, i, v);
                }
            }
        }
        true
    }

    /// Shifted copy W - lambda * I.
    pub fn shift(&self, lambda: &Rat) -> SymRationalMatrix {
        let mut s = self.clone();
        for i in 0..self.n {
            let v = s.at(i, i) - lambda;
            s.set_sym(i, i, v);
        }
        s
    }
}

/// Certified lower bound on the minimum eigenvalue.
///
/// Returns `lambda <= lambda_min(W)` with `lambda_min - lambda <= tol`,
/// each probe certified by an exact LDL^T run on `W - lambda I`. The value
/// is negative whenever W is not PSD.
pub fn psd_lower_bound(w: &SymRationalMatrix, tol: &Rat) -> Rat {
    assert!(tol.is_positive());
    if w.order() == 0 {
        return Rat::zero();
    }
    // lambda_min <= min diagonal entry; if PSD still holds there the bound
    // is attained exactly.
    let min_diag = (0..w.order())
        .map(|i| w.at(i, i).clone())
        .min()
        .unwrap();
    if w.shift(&min_diag).is_psd_exact() {
        return min_diag;
    }
    // W + ||W||_inf I is diagonally dominant, hence PSD.
    let mut lo = -w.inf_norm();
    let mut hi = min_diag;
    while &hi - &lo > *tol {
        let mid = (&lo + &hi) / rat_int(2);
        if w.shift(&mid).is_psd_exact() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Certified upper bound on the spectral radius of a symmetric entrywise
/// nonnegative matrix: the smaller of the infinity-norm bound and a
/// Collatz-Wielandt bound R x <= r x certified in exact arithmetic with a
/// float-guided positive vector x.
pub fn radius_spectral_bound(r: &SymRationalMatrix) -> Result<Rat> {
    let n = r.order();
    for i in 0..n {
        for j in 0..n {
            if r.at(i, j).is_negative() {
                return Err(Error::NegativeRadiusEntry(i, j));
            }
        }
    }
    if n == 0 {
        return Ok(Rat::zero());
    }
    let norm_bound = r.inf_norm();
    if norm_bound.is_zero() {
        return Ok(Rat::zero());
    }

    // float power iteration to find a good Perron vector
    let rf = r.to_f64();
    let mut x = nalgebra::DVector::from_element(n, 1.0f64);
    for _ in 0..50 {
        let y = &rf * &x;
        let m = y.amax();
        if m <= 0.0 || !m.is_finite() {
            break;
        }
        x = y / m;
        // keep the certifying vector strictly positive
        for v in x.iter_mut() {
            if *v < 1e-12 {
                *v = 1e-12;
            }
        }
    }
    let x_rat: Vec<Rat> = x
        .iter()
        .map(|&v| {
            let r = rationalize(v.max(1e-7), 1 << 30);
            if r.is_positive() {
                r
            } else {
                rat(1, 10_000_000)
            }
        })
        .collect();
    let rx = r.as_mat().mul_vec(&x_rat);
    let perron_bound = rx
        .iter()
        .zip(&x_rat)
        .map(|(num, den)| num / den)
        .max()
        .unwrap();
    Ok(norm_bound.min(perron_bound))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsdVerdict {
    PositiveDefinite,
    PositiveSemidefinite,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct RohnOutcome {
    pub verdict: PsdVerdict,
    /// Certified upper bound on rho(Delta W).
    pub radius_bound: Rat,
    /// Certified lower bound on lambda_min of the midpoint.
    pub lambda_lower: Rat,
}

/// Rohn criterion for PSD-ness of a symmetric interval matrix:
/// `rho(Delta W) <= lambda_min(mid W)` implies every member is PSD
/// (strict inequality gives positive definiteness). Sound, incomplete.
pub fn rohn_psd_check(w: &IntervalMatrix, tol: &Rat) -> Result<RohnOutcome> {
    if !w.is_symmetric() {
        return Err(Error::DimensionMismatch(
            "interval matrix not symmetric".into(),
        ));
    }
    let mid = SymRationalMatrix::from_rows(w.midpoint())?;
    let rad = SymRationalMatrix::from_rows(w.radius())?;
    let lambda_lower = psd_lower_bound(&mid, tol);
    let radius_bound = radius_spectral_bound(&rad)?;
    let verdict = if radius_bound < lambda_lower {
        PsdVerdict::PositiveDefinite
    } else if radius_bound <= lambda_lower {
        PsdVerdict::PositiveSemidefinite
    } else {
        PsdVerdict::Inconclusive
    };
    Ok(RohnOutcome {
        verdict,
        radius_bound,
        lambda_lower,
    })
}

/// Verified enclosure of the minimal-norm solutions of `A w = v` over all
/// `v` in the interval vector: `w = A^T (A A^T)^{-1} v` with the
/// pseudoinverse computed exactly, so each component enclosure is the
/// exact hull of the solution set component.
pub fn interval_linear_enclosure(a: &RatMatrix, v: &IntervalVector) -> Result<IntervalVector> {
    let s = a.rows;
    let r = a.cols;
    if v.len() != s {
        return Err(Error::DimensionMismatch(format!(
            "rhs has {} entries for {} rows",
            v.len(),
            s
        )));
    }
    if s > r {
        return Err(Error::RankDeficient);
    }
    let at = a.transpose();
    let gram = a.mul(&at);
    let ginv = gram.inverse().map_err(|_| Error::RankDeficient)?;
    let pseudo = at.mul(&ginv); // r x s
    let mut out = Vec::with_capacity(r);
    for k in 0..r {
        let mut acc = Interval::zero();
        for j in 0..s {
            acc = acc + v.0[j].mul_rat(pseudo.at(k, j));
        }
        out.push(acc);
    }
    Ok(IntervalVector(out))
}

/// The exact pseudoinverse map used by [`interval_linear_enclosure`];
/// exposed so certificates can replay the containment check.
pub fn minimal_norm_pseudoinverse(a: &RatMatrix) -> Result<RatMatrix> {
    let at = a.transpose();
    let gram = a.mul(&at);
    let ginv = gram.inverse().map_err(|_| Error::RankDeficient)?;
    Ok(at.mul(&ginv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn sym(rows: &[&[i64]]) -> SymRationalMatrix {
        SymRationalMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| rat_int(v)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn ldlt_psd_decisions() {
        assert!(sym(&[&[2, 1], &[1, 2]]).is_psd_exact());
        assert!(!sym(&[&[1, 2], &[2, 1]]).is_psd_exact());
        // singular PSD: rank-1
        assert!(sym(&[&[1, 1], &[1, 1]]).is_psd_exact());
        // zero pivot with nonzero off-diagonal is indefinite
        assert!(!sym(&[&[0, 1], &[1, 0]]).is_psd_exact());
        assert!(sym(&[&[0, 0], &[0, 0]]).is_psd_exact());
    }

    #[test]
    fn lambda_min_bisection() {
        let tol = rat(1, 1_000_000);
        // identity: min diagonal shortcut gives exactly 1
        let id3 = SymRationalMatrix::identity(3);
        let l = psd_lower_bound(&id3, &tol);
        assert!(l >= Rat::one() - &tol);
        // diag(2, 5): exact 2
        let d = sym(&[&[2, 0], &[0, 5]]);
        assert_eq!(psd_lower_bound(&d, &tol), rat_int(2));
        // indefinite matrix gives a negative bound
        let ind = sym(&[&[1, 2], &[2, 1]]);
        assert!(psd_lower_bound(&ind, &tol).is_negative());
    }

    #[test]
    fn spectral_radius_bounds() {
        let z = SymRationalMatrix::zeros(3);
        assert_eq!(radius_spectral_bound(&z).unwrap(), Rat::zero());
        // [[0,2],[2,0]]: rho = 2 and the infinity norm is tight;
        // oracle: power iteration on this matrix converges to 2.
        let m = sym(&[&[0, 2], &[2, 0]]);
        let b = radius_spectral_bound(&m).unwrap();
        assert!(b >= rat_int(2) && b <= rat(201, 100));
        let neg = SymRationalMatrix::from_rows(vec![
            vec![rat_int(0), rat_int(-1)],
            vec![rat_int(-1), rat_int(0)],
        ])
        .unwrap();
        assert!(radius_spectral_bound(&neg).is_err());
    }

    #[test]
    fn rohn_on_point_identity() {
        let mut w = IntervalMatrix::zeros(2, 2);
        w.set(0, 0, Interval::point(Rat::one()));
        w.set(1, 1, Interval::point(Rat::one()));
        let out = rohn_psd_check(&w, &rat(1, 1_000_000)).unwrap();
        assert_eq!(out.verdict, PsdVerdict::PositiveDefinite);
    }

    #[test]
    fn rohn_inconclusive_on_wide_offdiagonal() {
        // [[1, [-2,2]], [[-2,2], 1]] contains [[1,2],[2,1]] with eigenvalue -1
        let mut w = IntervalMatrix::zeros(2, 2);
        w.set(0, 0, Interval::point(Rat::one()));
        w.set(1, 1, Interval::point(Rat::one()));
        w.set(0, 1, Interval::new(rat_int(-2), rat_int(2)));
        w.set(1, 0, Interval::new(rat_int(-2), rat_int(2)));
        let out = rohn_psd_check(&w, &rat(1, 1_000_000)).unwrap();
        assert_eq!(out.verdict, PsdVerdict::Inconclusive);
    }

    #[test]
    fn enclosure_identity_and_pseudoinverse() {
        // identity map passes the box through
        let a = RatMatrix::identity(2);
        let v = IntervalVector(vec![
            Interval::new(rat_int(1), rat_int(2)),
            Interval::new(rat_int(3), rat_int(4)),
        ]);
        let w = interval_linear_enclosure(&a, &v).unwrap();
        assert_eq!(w, v);

        // A = [1 1]: minimal-norm solution of x + y = 2 is (1, 1)
        let a = RatMatrix::from_rows(vec![vec![Rat::one(), Rat::one()]]);
        let v = IntervalVector(vec![Interval::point(rat_int(2))]);
        let w = interval_linear_enclosure(&a, &v).unwrap();
        assert!(w.0[0].contains_value(&Rat::one()) && w.0[0].is_point());
        assert!(w.0[1].contains_value(&Rat::one()));

        // rank-deficient rejection
        let bad = RatMatrix::from_rows(vec![
            vec![Rat::one(), Rat::zero()],
            vec![Rat::one(), Rat::zero()],
        ]);
        assert!(interval_linear_enclosure(
            &bad,
            &IntervalVector(vec![Interval::zero(), Interval::zero()])
        )
        .is_err());
    }

    #[test]
    fn enclosure_contains_exact_member_solutions() {
        // random-ish fixed matrix; exact solutions for sampled v must land
        // inside the enclosure
        let a = RatMatrix::from_rows(vec![
            vec![rat_int(1), rat_int(2), rat_int(0)],
            vec![rat_int(0), rat_int(1), rat_int(3)],
        ]);
        let v = IntervalVector(vec![
            Interval::new(rat_int(-1), rat_int(1)),
            Interval::new(rat_int(2), rat_int(3)),
        ]);
        let w = interval_linear_enclosure(&a, &v).unwrap();
        let pseudo = minimal_norm_pseudoinverse(&a).unwrap();
        for i in 0..=4 {
            for j in 0..=4 {
                let vi = vec![
                    rat(-1, 1) + rat(i, 2),
                    rat_int(2) + rat(j, 4),
                ];
                let sol = pseudo.mul_vec(&vi);
                for (k, s) in sol.iter().enumerate() {
                    assert!(w.0[k].contains_value(s));
                }
            }
        }
    }
}

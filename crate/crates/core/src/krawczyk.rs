//! Krawczyk existence-and-uniqueness test for roots of square nonlinear
//! systems, evaluated entirely in exact rational interval arithmetic.

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalMatrix, IntervalVector};
use crate::linalg::RatMatrix;
use crate::rational::Rat;
use num_traits::{One, Zero};

/// A square differentiable map with interval extensions of itself and its
/// Jacobian. Implementations must satisfy the inclusion property.
pub trait KrawczykSystem {
    fn dim(&self) -> usize;
    /// Interval extension evaluated on a box.
    fn eval(&self, x: &IntervalVector) -> IntervalVector;
    /// Interval extension of the Jacobian on a box.
    fn jacobian(&self, x: &IntervalVector) -> IntervalMatrix;

    fn eval_point(&self, x: &[Rat]) -> IntervalVector {
        self.eval(&IntervalVector::from_points(x))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KrawczykOutcome {
    /// There is a unique root in the box.
    VerifiedUniqueRoot,
    Inconclusive,
}

/// Computes K = x_hat - C f(x_hat) + (I - C [f'](box)) (box - x_hat) and
/// reports a verified unique root when K lies in the interior of the box.
///
/// `rhs` is an optional interval right-hand side folded into the f(x_hat)
/// term: the test then certifies a root of f(x) - v = 0 for every member
/// v of `rhs`.
pub fn krawczyk_verify(
    f: &dyn KrawczykSystem,
    x_hat: &[Rat],
    boxv: &IntervalVector,
    c: &RatMatrix,
    rhs: Option<&IntervalVector>,
) -> Result<KrawczykOutcome> {
    let n = f.dim();
    if x_hat.len() != n || boxv.len() != n || c.rows != n || c.cols != n {
        return Err(Error::DimensionMismatch(
            "krawczyk operands must share the system dimension".into(),
        ));
    }
    if !boxv.contains_point(x_hat) {
        return Err(Error::PointOutsideBox);
    }
    let mut fx = f.eval_point(x_hat);
    if let Some(v) = rhs {
        if v.len() != n {
            return Err(Error::DimensionMismatch("rhs length mismatch".into()));
        }
        for i in 0..n {
            fx.0[i] = fx.0[i].clone() - &v.0[i];
        }
    }
    let jac = f.jacobian(boxv);

    // K_i = x_hat_i - (C f(x_hat))_i + sum_j (I - C J)_ij (box_j - x_hat_j)
    let mut k = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = Interval::point(x_hat[i].clone());
        for j in 0..n {
            acc = acc - fx.0[j].mul_rat(c.at(i, j));
        }
        for j in 0..n {
            // (I - C J)_ij as an interval
            let mut entry = Interval::zero();
            for l in 0..n {
                entry = entry + jac.at(l, j).mul_rat(c.at(i, l));
            }
            let mut ident = -entry;
            if i == j {
                ident = ident + &Interval::point(Rat::one());
            }
            let dev = boxv.0[j].clone() - &Interval::point(x_hat[j].clone());
            acc = acc + ident * dev;
        }
        k.push(acc);
    }
    let k = IntervalVector(k);
    if boxv.contains_in_interior(&k) {
        Ok(KrawczykOutcome::VerifiedUniqueRoot)
    } else {
        Ok(KrawczykOutcome::Inconclusive)
    }
}

/// A polynomial square system given componentwise, with Jacobian obtained
/// by exact partial differentiation.
pub struct PolySystem {
    pub components: Vec<crate::poly::IPoly>,
}

impl PolySystem {
    pub fn new(components: Vec<crate::poly::IPoly>) -> Self {
        PolySystem { components }
    }
}

impl KrawczykSystem for PolySystem {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, x: &IntervalVector) -> IntervalVector {
        IntervalVector(self.components.iter().map(|p| p.eval_box(x)).collect())
    }

    fn jacobian(&self, x: &IntervalVector) -> IntervalMatrix {
        let n = self.dim();
        let mut jac = IntervalMatrix::zeros(n, n);
        for (i, p) in self.components.iter().enumerate() {
            for j in 0..n {
                jac.set(i, j, p.partial_derivative(j).eval_box(x));
            }
        }
        jac
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::IPoly;
    use crate::rational::{parse_decimal, rat, rat_int};

    fn x_var() -> Vec<String> {
        vec!["x".into()]
    }

    fn one_by_one(c: Rat) -> RatMatrix {
        RatMatrix::from_rows(vec![vec![c]])
    }

    #[test]
    fn linear_root_is_verified() {
        // f(x) = x - 3 on [2.9, 3.1] with x_hat = 3, C = 1: K = {3}
        let f = PolySystem::new(vec![IPoly::var(x_var(), 0)
            .sub(&IPoly::constant(x_var(), rat_int(3)))]);
        let boxv = IntervalVector(vec![Interval::new(rat(29, 10), rat(31, 10))]);
        let out = krawczyk_verify(&f, &[rat_int(3)], &boxv, &one_by_one(Rat::one()), None).unwrap();
        assert_eq!(out, KrawczykOutcome::VerifiedUniqueRoot);
    }

    #[test]
    fn no_real_root_is_inconclusive() {
        // f(x) = x^2 + 1 has no real root
        let x = IPoly::var(x_var(), 0);
        let f = PolySystem::new(vec![x.mul(&x).add(&IPoly::constant(x_var(), Rat::one()))]);
        let boxv = IntervalVector(vec![Interval::new(rat_int(-1), rat_int(1))]);
        let out = krawczyk_verify(&f, &[Rat::zero()], &boxv, &one_by_one(Rat::one()), None).unwrap();
        assert_eq!(out, KrawczykOutcome::Inconclusive);
    }

    #[test]
    fn sqrt2_is_verified() {
        // f(x) = x^2 - 2, box [1.40, 1.43], x_hat = 1.414, C = 1/2.828.
        // Oracle: float Newton from 1.414 converges to 1.41421356... inside.
        let x = IPoly::var(x_var(), 0);
        let f = PolySystem::new(vec![x.mul(&x).sub(&IPoly::constant(x_var(), rat_int(2)))]);
        let boxv = IntervalVector(vec![Interval::new(
            parse_decimal("1.40").unwrap(),
            parse_decimal("1.43").unwrap(),
        )]);
        let x_hat = parse_decimal("1.414").unwrap();
        let c = one_by_one(Rat::one() / parse_decimal("2.828").unwrap());
        let out = krawczyk_verify(&f, &[x_hat], &boxv, &c, None).unwrap();
        assert_eq!(out, KrawczykOutcome::VerifiedUniqueRoot);

        let mut t = 1.414f64;
        for _ in 0..10 {
            t -= (t * t - 2.0) / (2.0 * t);
        }
        assert!((t - 2f64.sqrt()).abs() < 1e-15);
        assert!(1.40 < t && t < 1.43);
    }

    #[test]
    fn x_hat_outside_box_is_an_error() {
        let f = PolySystem::new(vec![IPoly::var(x_var(), 0)]);
        let boxv = IntervalVector(vec![Interval::new(rat_int(1), rat_int(2))]);
        let err = krawczyk_verify(&f, &[Rat::zero()], &boxv, &one_by_one(Rat::one()), None);
        assert!(err.is_err());
    }

    #[test]
    fn interval_rhs_square_root_family() {
        // f(q) = q^2 with rhs [0.99, 1.01] on box [0.9, 1.1]: every member
        // v has a unique root sqrt(v) in the box.
        let x = IPoly::var(x_var(), 0);
        let f = PolySystem::new(vec![x.mul(&x)]);
        let boxv = IntervalVector(vec![Interval::new(rat(9, 10), rat(11, 10))]);
        let rhs = IntervalVector(vec![Interval::new(rat(99, 100), rat(101, 100))]);
        let out = krawczyk_verify(
            &f,
            &[Rat::one()],
            &boxv,
            &one_by_one(rat(1, 2)),
            Some(&rhs),
        )
        .unwrap();
        assert_eq!(out, KrawczykOutcome::VerifiedUniqueRoot);

        // widen the rhs across zero: members with v < 0 have no real root
        let rhs = IntervalVector(vec![Interval::new(rat(-1, 100), rat(1, 100))]);
        let out = krawczyk_verify(
            &f,
            &[Rat::zero()],
            &boxv.clone(),
            &one_by_one(rat(1, 2)),
            Some(&rhs),
        );
        // x_hat = 0 is outside [0.9, 1.1]; use a compatible box instead
        assert!(out.is_err());
        let boxv = IntervalVector(vec![Interval::new(rat(-1, 10), rat(1, 10))]);
        let out = krawczyk_verify(
            &f,
            &[Rat::zero()],
            &boxv,
            &one_by_one(rat(1, 2)),
            Some(&rhs),
        )
        .unwrap();
        assert_eq!(out, KrawczykOutcome::Inconclusive);
    }
}

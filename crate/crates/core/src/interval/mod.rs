//! Closed real intervals with exact rational endpoints, plus dense interval
//! vectors and matrices.
//!
//! Because the endpoints are exact rationals, the arithmetic operations
//! return the exact set image of the operands; no outward rounding is
//! involved anywhere in the certification layer. Enclosures of
//! transcendental functions live in [`crate::interval::functions`].

pub mod functions;

use crate::error::Error;
use crate::rational::{rat_to_cert_string, round_down, round_up, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, PartialEq, Eq)]
pub struct Interval {
    lo: Rat,
    hi: Rat,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            rat_to_cert_string(&self.lo),
            rat_to_cert_string(&self.hi)
        )
    }
}

impl Interval {
    pub fn new(lo: Rat, hi: Rat) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    /// Degenerate (point) interval.
    pub fn point(v: Rat) -> Self {
        Interval {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn zero() -> Self {
        Interval::point(Rat::zero())
    }

    pub fn lo(&self) -> &Rat {
        &self.lo
    }

    pub fn hi(&self) -> &Rat {
        &self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_zero(&self) -> bool {
        self.lo.is_zero() && self.hi.is_zero()
    }

    pub fn midpoint(&self) -> Rat {
        (&self.lo + &self.hi) / crate::rational::rat_int(2)
    }

    pub fn radius(&self) -> Rat {
        (&self.hi - &self.lo) / crate::rational::rat_int(2)
    }

    /// Largest absolute value attained on the interval.
    pub fn mag(&self) -> Rat {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value attained on the interval.
    pub fn mig(&self) -> Rat {
        if self.contains_value(&Rat::zero()) {
            Rat::zero()
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn contains_value(&self, v: &Rat) -> bool {
        self.lo <= *v && *v <= self.hi
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Strict containment in the topological interior.
    pub fn contains_in_interior(&self, other: &Interval) -> bool {
        self.lo < other.lo && other.hi < self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    pub fn widen_by(&self, r: &Rat) -> Interval {
        assert!(!r.is_negative());
        Interval {
            lo: &self.lo - r,
            hi: &self.hi + r,
        }
    }

    /// Centered interval `[-r, r]`.
    pub fn symmetric(r: Rat) -> Interval {
        assert!(!r.is_negative());
        Interval {
            lo: -r.clone(),
            hi: r,
        }
    }

    pub fn checked_div(&self, rhs: &Interval) -> Result<Interval, Error> {
        if rhs.contains_value(&Rat::zero()) {
            return Err(Error::IntervalDivByZero);
        }
        let one = Rat::one();
        let inv = Interval::new(&one / &rhs.hi, one.clone() / &rhs.lo);
        Ok(self.clone() * inv)
    }

    /// Exact integer power (sharp for even exponents).
    pub fn pow(&self, k: u32) -> Interval {
        if k == 0 {
            return Interval::point(Rat::one());
        }
        if k % 2 == 1 {
            let lo = pow_rat(&self.lo, k);
            let hi = pow_rat(&self.hi, k);
            return Interval::new(lo, hi);
        }
        let a = pow_rat(&self.lo, k);
        let b = pow_rat(&self.hi, k);
        if self.contains_value(&Rat::zero()) {
            Interval::new(Rat::zero(), a.max(b))
        } else {
            Interval::new(a.clone().min(b.clone()), a.max(b))
        }
    }

    /// Rounds outward so both endpoint denominators fit `max_den`.
    /// Always yields a superset, so certification stays sound.
    pub fn outward_round(&self, max_den: &BigInt) -> Interval {
        Interval {
            lo: round_down(&self.lo, max_den),
            hi: round_up(&self.hi, max_den),
        }
    }

    /// Interval times interval (exact set image).
    pub fn mul(&self, other: &Interval) -> Interval {
        std::ops::Mul::mul(self, other)
    }

    /// Interval scaled by an exact rational.
    pub fn mul_rat(&self, rhs: &Rat) -> Interval {
        if rhs.is_negative() {
            Interval {
                lo: &self.hi * rhs,
                hi: &self.lo * rhs,
            }
        } else {
            Interval {
                lo: &self.lo * rhs,
                hi: &self.hi * rhs,
            }
        }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (
            crate::rational::rat_to_f64(&self.lo),
            crate::rational::rat_to_f64(&self.hi),
        )
    }
}

fn pow_rat(x: &Rat, k: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..k {
        acc *= x;
    }
    acc
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

impl<'a> Add<&'a Interval> for Interval {
    type Output = Interval;
    fn add(self, rhs: &'a Interval) -> Interval {
        Interval {
            lo: self.lo + &rhs.lo,
            hi: self.hi + &rhs.hi,
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo - rhs.hi,
            hi: self.hi - rhs.lo,
        }
    }
}

impl<'a> Sub<&'a Interval> for Interval {
    type Output = Interval;
    fn sub(self, rhs: &'a Interval) -> Interval {
        Interval {
            lo: self.lo - &rhs.hi,
            hi: self.hi - &rhs.lo,
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        (&self).mul(&rhs)
    }
}

impl<'a, 'b> Mul<&'b Interval> for &'a Interval {
    type Output = Interval;
    fn mul(self, rhs: &'b Interval) -> Interval {
        let c1 = &self.lo * &rhs.lo;
        let c2 = &self.lo * &rhs.hi;
        let c3 = &self.hi * &rhs.lo;
        let c4 = &self.hi * &rhs.hi;
        let lo = c1.clone().min(c2.clone()).min(c3.clone()).min(c4.clone());
        let hi = c1.max(c2).max(c3).max(c4);
        Interval { lo, hi }
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, rhs: Interval) -> Interval {
        self.checked_div(&rhs)
            .expect("interval division by zero-containing interval")
    }
}

/// Dense interval vector.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalVector(pub Vec<Interval>);

impl IntervalVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn from_points(v: &[Rat]) -> Self {
        IntervalVector(v.iter().cloned().map(Interval::point).collect())
    }

    pub fn midpoint(&self) -> Vec<Rat> {
        self.0.iter().map(|i| i.midpoint()).collect()
    }

    pub fn radius(&self) -> Vec<Rat> {
        self.0.iter().map(|i| i.radius()).collect()
    }

    pub fn contains_point(&self, p: &[Rat]) -> bool {
        self.len() == p.len() && self.0.iter().zip(p).all(|(i, v)| i.contains_value(v))
    }

    pub fn contains(&self, other: &IntervalVector) -> bool {
        self.len() == other.len()
            && self.0.iter().zip(&other.0).all(|(a, b)| a.contains(b))
    }

    pub fn contains_in_interior(&self, other: &IntervalVector) -> bool {
        self.len() == other.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.contains_in_interior(b))
    }
}

/// Dense interval matrix (row major).
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Interval>,
}

impl IntervalMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Interval>) -> Self {
        assert_eq!(rows * cols, data.len());
        IntervalMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntervalMatrix {
            rows,
            cols,
            data: vec![Interval::zero(); rows * cols],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> &Interval {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Interval) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if self.at(i, j) != self.at(j, i) {
                    return false;
                }
            }
        }
        true
    }

    /// Componentwise midpoint matrix.
    pub fn midpoint(&self) -> Vec<Vec<Rat>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j).midpoint()).collect())
            .collect()
    }

    /// Componentwise radius matrix (entrywise nonnegative).
    pub fn radius(&self) -> Vec<Vec<Rat>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j).radius()).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn iv(a: i64, b: i64, c: i64, d: i64) -> Interval {
        Interval::new(rat(a, b), rat(c, d))
    }

    #[test]
    fn endpoint_arithmetic() {
        // [1,2]+[3,4] = [4,6]
        assert_eq!(
            iv(1, 1, 2, 1) + iv(3, 1, 4, 1),
            iv(4, 1, 6, 1)
        );
        // [-1,2]*[3,4] = [-4,8]
        assert_eq!(iv(-1, 1, 2, 1) * iv(3, 1, 4, 1), iv(-4, 1, 8, 1));
    }

    #[test]
    fn midpoint_radius_example() {
        // mid/rad of [0.96, 1.04] -> 1, 0.04
        let i = Interval::new(rat(96, 100), rat(104, 100));
        assert_eq!(i.midpoint(), rat_int(1));
        assert_eq!(i.radius(), rat(4, 100));
        // reconstruction is exact: [mid-rad, mid+rad] = i
        let rebuilt = Interval::new(i.midpoint() - i.radius(), i.midpoint() + i.radius());
        assert_eq!(rebuilt, i);
    }

    #[test]
    fn division_rejects_zero() {
        let err = iv(1, 1, 2, 1).checked_div(&iv(-1, 1, 1, 1));
        assert!(err.is_err());
        let ok = iv(1, 1, 2, 1).checked_div(&iv(1, 1, 2, 1)).unwrap();
        assert_eq!(ok, iv(1, 2, 2, 1));
    }

    #[test]
    fn even_powers_are_sharp() {
        assert_eq!(iv(-2, 1, 1, 1).pow(2), iv(0, 1, 4, 1));
        assert_eq!(iv(-2, 1, 1, 1).pow(3), iv(-8, 1, 1, 1));
        assert_eq!(iv(1, 2, 3, 1).pow(2), iv(1, 4, 9, 1));
    }

    #[test]
    fn outward_round_is_superset() {
        let i = Interval::new(rat(1, 3), rat(2, 3));
        let r = i.outward_round(&num_bigint::BigInt::from(10));
        assert!(r.contains(&i));
    }
}

//! Certified rational enclosures of the elementary transcendental functions.
//!
//! All bounds are produced in exact rational arithmetic from truncated
//! series with explicit remainder terms, then rounded outward to endpoint
//! denominators of at most 2^53. No floating-point rounding mode tricks
//! are involved; floats only seed argument reduction.

use super::Interval;
use crate::error::{Error, Result};
use crate::rational::{rat, rat_int, rat_to_f64, sqrt_lower, sqrt_upper, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::sync::OnceLock;

fn out_den() -> &'static BigInt {
    static D: OnceLock<BigInt> = OnceLock::new();
    D.get_or_init(|| BigInt::one() << 53)
}

/// Absolute truncation target for the internal series (well below the
/// outward-rounding granularity).
fn series_eps() -> &'static Rat {
    static E: OnceLock<Rat> = OnceLock::new();
    E.get_or_init(|| Rat::new(BigInt::one(), BigInt::one() << 72))
}

fn round_out(i: Interval) -> Interval {
    i.outward_round(out_den())
}

/// atan(1/m) for integer m >= 2 by the alternating Gregory series;
/// consecutive partial sums bracket the value.
fn atan_inv(m: i64) -> Interval {
    let z = rat(1, m);
    let z2 = &z * &z;
    let mut power = z;
    let mut sum = Rat::zero();
    let mut k: i64 = 0;
    loop {
        let term = &power / rat_int(2 * k + 1);
        if k % 2 == 0 {
            sum += &term;
        } else {
            sum -= &term;
        }
        power = &power * &z2;
        let next = &power / rat_int(2 * k + 3);
        // alternating series with decreasing terms: the limit lies within
        // one next-term of the partial sum
        if k >= 1 && next < *series_eps() {
            return if k % 2 == 0 {
                Interval::new(&sum - &next, sum.clone())
            } else {
                Interval::new(sum.clone(), &sum + &next)
            };
        }
        k += 1;
    }
}

/// Machin: pi = 16 atan(1/5) - 4 atan(1/239).
pub fn pi_enclosure() -> &'static Interval {
    static PI: OnceLock<Interval> = OnceLock::new();
    PI.get_or_init(|| {
        let a = atan_inv(5);
        let b = atan_inv(239);
        let sixteen = Interval::point(rat_int(16));
        let four = Interval::point(rat_int(4));
        sixteen * a - four * b
    })
}

/// atanh(z) for rational 0 <= z < 1/2, with a geometric remainder bound.
fn atanh_series(z: &Rat) -> Interval {
    assert!(!z.is_negative() && *z < rat(1, 2));
    if z.is_zero() {
        return Interval::zero();
    }
    let z2 = z * z;
    let mut term = z.clone();
    let mut sum = Rat::zero();
    let mut k: i64 = 0;
    loop {
        sum += &term / rat_int(2 * k + 1);
        term = &term * &z2;
        let tail = (&term / rat_int(2 * k + 3)) / (Rat::one() - &z2);
        if tail < *series_eps() {
            return Interval::new(sum.clone(), sum + tail);
        }
        k += 1;
    }
}

pub fn ln2_enclosure() -> &'static Interval {
    static LN2: OnceLock<Interval> = OnceLock::new();
    // ln 2 = 2 atanh(1/3)
    LN2.get_or_init(|| Interval::point(rat_int(2)) * atanh_series(&rat(1, 3)))
}

pub fn e_enclosure() -> &'static Interval {
    static E: OnceLock<Interval> = OnceLock::new();
    E.get_or_init(|| exp_reduced(&Rat::one()))
}

/// exp on |f| <= 1 by Taylor series with remainder |f|^{N+1}/(N+1)! * 2.
fn exp_reduced(f: &Rat) -> Interval {
    assert!(f.abs() <= Rat::one());
    let mut term = Rat::one();
    let mut sum = Rat::one();
    let mut k: i64 = 1;
    loop {
        term = &term * f / rat_int(k);
        sum += &term;
        let tail = term.abs() * f.abs() / rat_int(k + 1) * rat_int(2);
        if tail < *series_eps() {
            return Interval::new(&sum - &tail, sum + tail);
        }
        k += 1;
    }
}

fn int_pow_interval(base: &Interval, n: u32) -> Interval {
    // base > 0 here (powers of e)
    let mut acc = Interval::point(Rat::one());
    for _ in 0..n {
        acc = acc * base.clone();
    }
    acc
}

/// Enclosure of e^r for a rational point r.
pub fn exp_point(r: &Rat) -> Interval {
    let n = rat_to_f64(r).round();
    assert!(
        n.abs() < 1e6,
        "exp argument too large for certified evaluation"
    );
    let n = n as i64;
    let f = r - rat_int(n);
    // |f| <= 1/2 + float rounding slack; exp_reduced takes |f| <= 1
    let base = exp_reduced(&f);
    let e = e_enclosure();
    let scaled = if n >= 0 {
        base * int_pow_interval(e, n as u32)
    } else {
        let p = int_pow_interval(e, (-n) as u32);
        base.checked_div(&p).expect("e^n is positive")
    };
    round_out(scaled)
}

/// Enclosure of ln r for a rational point r > 0.
pub fn ln_point(r: &Rat) -> Result<Interval> {
    if !r.is_positive() {
        return Err(Error::DomainViolation {
            node: "ln".into(),
            detail: format!("argument {r} not positive"),
        });
    }
    // normalize r = m * 2^k with m in [1, 2)
    let mut k: i64 = 0;
    let mut m = r.clone();
    let two = rat_int(2);
    let one = Rat::one();
    while m >= two {
        m = m / &two;
        k += 1;
    }
    while m < one {
        m = m * &two;
        k -= 1;
    }
    // ln m = 2 atanh((m-1)/(m+1)), argument in [0, 1/3)
    let z = (&m - &one) / (&m + &one);
    let ln_m = Interval::point(rat_int(2)) * atanh_series(&z);
    let ln2 = ln2_enclosure().clone();
    Ok(round_out(ln_m + ln2 * Interval::point(rat_int(k))))
}

/// cos on a small interval |t| <= 2 by Taylor series in interval arithmetic.
fn cos_reduced(t: &Interval) -> Interval {
    let mag = t.mag();
    assert!(mag <= rat_int(2));
    let t2 = t * t;
    let mut term = Interval::point(Rat::one());
    let mut sum = Interval::point(Rat::one());
    let mut j: i64 = 1;
    let mut mag_term = Rat::one();
    loop {
        term = term * t2.clone() * Interval::point(-Rat::one() / rat_int((2 * j - 1) * 2 * j));
        sum = sum + term.clone();
        mag_term = mag_term * &mag * &mag / rat_int((2 * j - 1) * 2 * j);
        let tail = &mag_term * &mag * &mag / rat_int((2 * j + 1) * (2 * j + 2));
        if tail < *series_eps() {
            return sum + Interval::new(-tail.clone(), tail);
        }
        j += 1;
    }
}

/// Enclosure of cos r for a rational point r.
pub fn cos_point(r: &Rat) -> Interval {
    let pi = pi_enclosure();
    let k = (rat_to_f64(r) / std::f64::consts::PI).round();
    assert!(k.abs() < 1e15, "cos argument too large");
    let k = k as i64;
    let t = Interval::point(r.clone()) - pi.clone() * Interval::point(rat_int(k));
    let c = cos_reduced(&t);
    let c = if k % 2 == 0 { c } else { -c };
    round_out(clamp_unit(c))
}

pub fn sin_point(r: &Rat) -> Interval {
    // sin r = cos(r - pi/2)
    let pi = pi_enclosure();
    let half_pi = pi.clone() * Interval::point(rat(1, 2));
    let shifted = Interval::point(r.clone()) - half_pi;
    let k = (rat_to_f64(r) / std::f64::consts::PI - 0.5).round();
    assert!(k.abs() < 1e15, "sin argument too large");
    let k = k as i64;
    let t = shifted - pi.clone() * Interval::point(rat_int(k));
    let c = cos_reduced(&t);
    let c = if k % 2 == 0 { c } else { -c };
    round_out(clamp_unit(c))
}

fn clamp_unit(i: Interval) -> Interval {
    let one = Rat::one();
    let lo = i.lo().clone().max(-one.clone()).min(one.clone());
    let hi = i.hi().clone().max(-one.clone()).min(one);
    Interval::new(lo, hi)
}

/// Range of cos over an interval: endpoint values plus critical points
/// (multiples of pi) that may fall inside.
pub fn cos_interval(x: &Interval) -> Interval {
    let width = x.hi() - x.lo();
    if width >= rat_int(7) {
        return Interval::new(-Rat::one(), Rat::one());
    }
    let mut range = cos_point(x.lo()).hull(&cos_point(x.hi()));
    let pi = pi_enclosure();
    let k_lo = (rat_to_f64(x.lo()) / std::f64::consts::PI).floor() as i64 - 1;
    let k_hi = (rat_to_f64(x.hi()) / std::f64::consts::PI).ceil() as i64 + 1;
    for k in k_lo..=k_hi {
        let kpi = pi.clone() * Interval::point(rat_int(k));
        let intersects = kpi.lo() <= x.hi() && x.lo() <= kpi.hi();
        if intersects {
            if k % 2 == 0 {
                range = range.hull(&Interval::point(Rat::one()));
            } else {
                range = range.hull(&Interval::point(-Rat::one()));
            }
        }
    }
    clamp_unit(range)
}

pub fn sin_interval(x: &Interval) -> Interval {
    let half_pi = pi_enclosure().clone() * Interval::point(rat(1, 2));
    cos_interval(&(x.clone() - half_pi))
}

/// Monotone range of exp.
pub fn exp_interval(x: &Interval) -> Interval {
    let lo = exp_point(x.lo());
    let hi = exp_point(x.hi());
    Interval::new(lo.lo().clone(), hi.hi().clone())
}

/// Monotone range of ln (domain: x > 0).
pub fn ln_interval(x: &Interval) -> Result<Interval> {
    let lo = ln_point(x.lo())?;
    let hi = ln_point(x.hi())?;
    Ok(Interval::new(lo.lo().clone(), hi.hi().clone()))
}

/// Monotone range of sqrt (domain: x >= 0). Exact on perfect squares.
pub fn sqrt_interval(x: &Interval) -> Result<Interval> {
    if x.lo().is_negative() {
        return Err(Error::DomainViolation {
            node: "sqrt".into(),
            detail: format!("argument lower bound {} is negative", x.lo()),
        });
    }
    Ok(Interval::new(sqrt_point_lower(x.lo()), sqrt_point_upper(x.hi())))
}

fn exact_sqrt(x: &Rat) -> Option<Rat> {
    let sn = x.numer().sqrt();
    let sd = x.denom().sqrt();
    if &(&sn * &sn) == x.numer() && &(&sd * &sd) == x.denom() {
        Some(Rat::new(sn, sd))
    } else {
        None
    }
}

pub fn sqrt_point_lower(x: &Rat) -> Rat {
    exact_sqrt(x).unwrap_or_else(|| sqrt_lower(x))
}

pub fn sqrt_point_upper(x: &Rat) -> Rat {
    exact_sqrt(x).unwrap_or_else(|| sqrt_upper(x))
}

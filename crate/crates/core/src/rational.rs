//! Exact rational scalar utilities: parsing, formatting, bounded-denominator
//! approximation and certified square-root brackets.
//!
//! Every number that takes part in a certificate is a [`Rat`]
//! (arbitrary-precision rational, always gcd-reduced by construction).

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

/// Shorthand for small rational constants.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Exact conversion of an f64 (error on NaN/inf).
pub fn rat_from_f64(x: f64) -> Result<Rat, String> {
    Rat::from_float(x).ok_or_else(|| format!("cannot represent {x} as a rational"))
}

pub fn rat_to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses a decimal literal exactly: `-1.25` -> -5/4. An optional
/// `e`/`E` exponent is accepted (`2.5e-3` -> 1/400).
pub fn parse_decimal(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty numeric literal".into());
    }
    let (mantissa, exp10) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..]
                .parse()
                .map_err(|_| format!("bad exponent in `{s}`"))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(i) => (&digits[..i], &digits[i + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("bad numeric literal `{s}`"));
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(format!("bad numeric literal `{s}`"));
    }
    let mut numer: BigInt = if int_part.is_empty() {
        BigInt::zero()
    } else {
        int_part.parse().unwrap()
    };
    let ten = BigInt::from(10);
    for c in frac_part.chars() {
        numer = &numer * &ten + BigInt::from(c.to_digit(10).unwrap());
    }
    let mut denom = ten.pow(frac_part.len() as u32);
    // fold in the power-of-ten exponent
    if exp10 >= 0 {
        numer *= ten.pow(exp10 as u32);
    } else {
        denom *= ten.pow((-exp10) as u32);
    }
    Ok(Rat::new(BigInt::from(sign) * numer, denom))
}

/// Parses `p/q`, a bare integer, or a decimal literal.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if let Some(i) = s.find('/') {
        let n: BigInt = s[..i]
            .trim()
            .parse()
            .map_err(|_| format!("bad rational `{s}`"))?;
        let d: BigInt = s[i + 1..]
            .trim()
            .parse()
            .map_err(|_| format!("bad rational `{s}`"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in `{s}`"));
        }
        Ok(Rat::new(n, d))
    } else {
        parse_decimal(s)
    }
}

/// Canonical `p/q` rendering used in certificate files.
pub fn rat_to_cert_string(x: &Rat) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Best rational approximations of `x` with denominator at most `max_den`,
/// from below and from above. Exact when `x` itself fits the bound.
pub fn bounded_approximations(x: &Rat, max_den: &BigInt) -> (Rat, Rat) {
    assert!(*max_den >= BigInt::one());
    if x.denom() <= max_den {
        return (x.clone(), x.clone());
    }
    // Continued-fraction walk; stop at the first convergent whose
    // denominator would exceed the bound, then take the best semiconvergent.
    // h/k is the previous convergent, h_prev/k_prev the one before it.
    let (mut num, mut den) = (x.numer().clone(), x.denom().clone());
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    loop {
        let (a, rem) = num.div_mod_floor(&den);
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        if k_next > *max_den {
            let t = (max_den - &k_prev).div_floor(&k);
            let semi = Rat::new(&h_prev + &t * &h, &k_prev + &t * &k);
            let conv = Rat::new(h.clone(), k.clone());
            return if conv <= *x {
                (conv, semi)
            } else {
                (semi, conv)
            };
        }
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
        if rem.is_zero() {
            // exact representation reached below the bound
            let v = Rat::new(h, k);
            return (v.clone(), v);
        }
        num = den;
        den = rem;
    }
}

/// Best continued-fraction convergent of a float with denominator at most
/// `denom_bound`. Convergents carry the classic approximation guarantee
/// |x - p/q| <= 1/(q * bound).
pub fn rationalize(x: f64, denom_bound: u64) -> Rat {
    assert!(denom_bound >= 1);
    let exact = match Rat::from_float(x) {
        Some(r) => r,
        None => return Rat::zero(),
    };
    rationalize_rat(&exact, &BigInt::from(denom_bound))
}

/// Rational-input variant of [`rationalize`].
pub fn rationalize_rat(x: &Rat, max_den: &BigInt) -> Rat {
    if x.denom() <= max_den {
        return x.clone();
    }
    let (mut num, mut den) = (x.numer().clone(), x.denom().clone());
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    loop {
        let (a, rem) = num.div_mod_floor(&den);
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        if k_next > *max_den {
            return Rat::new(h, k);
        }
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
        if rem.is_zero() {
            return Rat::new(h, k);
        }
        num = den;
        den = rem;
    }
}

/// Largest rational <= x with denominator <= max_den.
pub fn round_down(x: &Rat, max_den: &BigInt) -> Rat {
    bounded_approximations(x, max_den).0
}

/// Smallest rational >= x with denominator <= max_den.
pub fn round_up(x: &Rat, max_den: &BigInt) -> Rat {
    bounded_approximations(x, max_den).1
}

/// A rational `u >= sqrt(x)` (tight to ~1e-14 relative).
pub fn sqrt_upper(x: &Rat) -> Rat {
    assert!(!x.is_negative(), "sqrt of negative rational");
    if x.is_zero() {
        return Rat::zero();
    }
    let mut u = initial_sqrt(x, true);
    let bump = rat(1_000_000_000_001, 1_000_000_000_000);
    while &u * &u < *x {
        u *= &bump;
    }
    u
}

/// A rational `l` with `0 <= l <= sqrt(x)`.
pub fn sqrt_lower(x: &Rat) -> Rat {
    assert!(!x.is_negative(), "sqrt of negative rational");
    if x.is_zero() {
        return Rat::zero();
    }
    let mut l = initial_sqrt(x, false);
    if l.is_negative() {
        return Rat::zero();
    }
    let shrink = rat(999_999_999_999, 1_000_000_000_000);
    while &l * &l > *x {
        l *= &shrink;
    }
    l
}

fn initial_sqrt(x: &Rat, up: bool) -> Rat {
    let f = rat_to_f64(x);
    let guess = if f.is_finite() && f > 0.0 {
        f.sqrt()
    } else {
        // fall back to a crude bit-length estimate for huge operands
        let bits = x.numer().bits() as i64 - x.denom().bits() as i64;
        (2f64).powi((bits / 2) as i32)
    };
    let adj = if up { 1.0 + 1e-12 } else { 1.0 - 1e-12 };
    rationalize(guess * adj, 1u64 << 60)
}

/// One Newton sharpening of an upper sqrt bound: (u + x/u)/2 is still an
/// upper bound of sqrt(x) and quadratically closer.
pub fn sqrt_upper_refined(x: &Rat) -> Rat {
    if x.is_zero() {
        return Rat::zero();
    }
    let u = sqrt_upper(x);
    (&u + x / &u) / rat_int(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_decimal("0.96").unwrap(), rat(96, 100));
        assert_eq!(parse_decimal("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_decimal("2.5e-3").unwrap(), rat(1, 400));
        assert_eq!(parse_decimal("7").unwrap(), rat_int(7));
        assert!(parse_decimal("1.2.3").is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rat("151/99").unwrap(), rat(151, 99));
        assert_eq!(parse_rat("-3/6").unwrap(), rat(-1, 2));
        assert!(parse_rat("1/0").is_err());
    }

    #[test]
    fn rationalize_small_cases() {
        assert_eq!(rationalize(0.5, 10), rat(1, 2));
        assert_eq!(rationalize(0.333333, 10), rat(1, 3));
        // Example 2 constant term: 151/99 = 1.52525...
        assert_eq!(rationalize(1.525253, 100), rat(151, 99));
    }

    #[test]
    fn rationalize_error_bound() {
        // |x - p/q| <= 1/(q*b) for the returned best approximation
        let xs = [
            3.14159265358979,
            0.718281828,
            -2.6457513,
            0.0001234567,
            5.0,
        ];
        for &x in &xs {
            for &b in &[10u64, 100, 1000, 1_000_000] {
                let r = rationalize(x, b);
                let err = (rat_from_f64(x).unwrap() - &r).abs();
                let q = r.denom().clone();
                assert!(q <= BigInt::from(b));
                let bound = Rat::new(BigInt::one(), q * BigInt::from(b));
                assert!(err <= bound, "x={x} b={b} r={r} err={err}");
            }
        }
    }

    #[test]
    fn outward_rounding_brackets() {
        let x = rat(123_456_789, 987_654_321);
        let b = BigInt::from(1000);
        let lo = round_down(&x, &b);
        let hi = round_up(&x, &b);
        assert!(lo <= x && x <= hi);
        assert!(lo.denom() <= &b && hi.denom() <= &b);
        // exact passthrough
        assert_eq!(round_down(&rat(1, 3), &b), rat(1, 3));
    }

    #[test]
    fn sqrt_brackets() {
        for v in [rat_int(2), rat(1, 3), rat_int(10_000), rat(17, 5)] {
            let u = sqrt_upper(&v);
            let l = sqrt_lower(&v);
            assert!(&u * &u >= v);
            assert!(&l * &l <= v);
            assert!(&u - &l < rat(1, 1_000_000));
        }
        assert_eq!(sqrt_upper(&Rat::zero()), Rat::zero());
        let r = sqrt_upper_refined(&rat_int(2));
        assert!(&r * &r >= rat_int(2));
        assert!(&r * &r - rat_int(2) < rat(1, 1_000_000_000));
    }
}

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::number::{floor_quadratic, surd_sign, RealNumber};
use crate::error::{Error, Result};

/// Partial quotients `a_0, a_1, ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expansion {
    pub quotients: Vec<BigInt>,
    /// The expansion ended because the number is rational.
    pub terminated: bool,
}

/// `p_k / q_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    pub k: usize,
    pub p: BigInt,
    pub q: BigInt,
}

/// Partial quotients `a_0..=a_depth`.
pub fn cf_expand(x: &RealNumber, depth: usize) -> Result<Expansion> {
    let mut quotients = Vec::with_capacity(depth + 1);
    match x {
        RealNumber::Quadratic { p, d, q } => {
            // Normalise so that q divides d - p^2.
            let (mut p, mut d, mut q) = (p.clone(), d.clone(), q.clone());
            if !(&d - &p * &p).is_multiple_of(&q) {
                let a = q.abs();
                p *= &a;
                d *= &a * &a;
                q *= &a;
            }
            for _ in 0..=depth {
                let a = floor_quadratic(&p, &d, Sign::Plus, &q);
                p = &a * &q - &p;
                q = (&d - &p * &p) / &q;
                quotients.push(a);
            }
            Ok(Expansion { quotients, terminated: false })
        }
        RealNumber::Interval { lo, hi } => {
            let (mut lo, mut hi) = (lo.clone(), hi.clone());
            for k in 0..=depth {
                let (a, b) = (lo.floor(), hi.floor());
                if a != b || lo == a {
                    return Err(Error::Precision(format!(
                        "continued fraction depth limited: only {k} partial quotients are certified by the literal"
                    )));
                }
                quotients.push(a.to_integer());
                let (l, h) = (&lo - &a, &hi - &a);
                lo = h.recip();
                hi = l.recip();
            }
            Ok(Expansion { quotients, terminated: false })
        }
        RealNumber::Rational(r) => {
            let mut r = r.clone();
            for _ in 0..=depth {
                let a = r.floor();
                quotients.push(a.to_integer());
                let f = &r - &a;
                if f.is_zero() {
                    return Ok(Expansion { quotients, terminated: true });
                }
                r = f.recip();
            }
            Ok(Expansion { quotients, terminated: false })
        }
    }
}

/// Convergents from the recurrence `p_k = a_k p_{k-1} + p_{k-2}`.
pub fn convergents(quotients: &[BigInt]) -> Vec<Convergent> {
    let (mut p2, mut p1) = (BigInt::zero(), BigInt::one());
    let (mut q2, mut q1) = (BigInt::one(), BigInt::zero());
    quotients
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let p = a * &p1 + &p2;
            let q = a * &q1 + &q2;
            p2 = std::mem::replace(&mut p1, p.clone());
            q2 = std::mem::replace(&mut q1, q.clone());
            Convergent { k, p, q }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergentCheck {
    /// `p_k q_{k-1} - p_{k-1} q_k = (-1)^{k-1}` for every `k >= 1`.
    pub determinant: bool,
    /// `gcd(p_k, q_k) = 1` and `q_k` strictly increasing from `k = 1`.
    pub reduced: bool,
    /// `|q_k x - p_k| < 1 / q_{k+1}` for each `k` with a successor.
    pub inequality: Vec<bool>,
    /// `|q_k x - p_k|` strictly decreasing.
    pub monotone: bool,
}

/// `q x - p` as a certified sign-comparable quantity.
enum Gap {
    /// `(u + v sqrt(d)) / |den|`.
    Surd { u: BigInt, v: BigInt, d: BigInt, den: BigInt },
    Interval { lo: BigRational, hi: BigRational },
    Exact(BigRational),
}

fn gap(x: &RealNumber, c: &Convergent) -> Gap {
    match x {
        RealNumber::Quadratic { p, d, q } => {
            // q_k (p + sqrt d)/q - p_k = (q_k p - p_k q + q_k sqrt d) / q.
            let (mut u, mut v) = (&c.q * p - &c.p * q, c.q.clone());
            if q.is_negative() {
                u = -u;
                v = -v;
            }
            Gap::Surd { u, v, d: d.clone(), den: q.abs() }
        }
        RealNumber::Interval { lo, hi } => {
            let qk = BigRational::from_integer(c.q.clone());
            let pk = BigRational::from_integer(c.p.clone());
            Gap::Interval { lo: &qk * lo - &pk, hi: &qk * hi - &pk }
        }
        RealNumber::Rational(r) => Gap::Exact(r * &c.q - BigRational::from_integer(c.p.clone())),
    }
}

/// Is `|g| < bound` (rational bound)? `None` when undecidable at the given precision.
fn abs_less(g: &Gap, bound: &BigRational) -> Option<bool> {
    match g {
        Gap::Surd { u, v, d, den } => {
            // |u + v sqrt d| < bound * den  <=>  (u + v sqrt d)^2 < (bound den)^2.
            let b = bound * BigRational::from_integer(den.clone());
            let (bn, bd) = (b.numer().clone(), b.denom().clone());
            // Compare bd^2 (u^2 + v^2 d + 2 u v sqrt d) with bn^2.
            let uu = &bd * &bd * (u * u + v * v * d) - &bn * &bn;
            let vv = &bd * &bd * BigInt::from(2) * u * v;
            Some(surd_sign(&uu, &vv, d) == Sign::Minus)
        }
        Gap::Interval { lo, hi } => {
            let m = if lo.abs() > hi.abs() { lo.abs() } else { hi.abs() };
            let straddles = lo.is_negative() != hi.is_negative();
            let low = if straddles { BigRational::zero() } else if lo.abs() < hi.abs() { lo.abs() } else { hi.abs() };
            if &m < bound {
                Some(true)
            } else if &low >= bound {
                Some(false)
            } else {
                None
            }
        }
        Gap::Exact(r) => Some(&r.abs() < bound),
    }
}

/// `|a| < |b|` for two gaps of the same number.
fn gap_less(a: &Gap, b: &Gap) -> Option<bool> {
    match (a, b) {
        (Gap::Surd { u: u1, v: v1, d, .. }, Gap::Surd { u: u2, v: v2, .. }) => {
            // a^2 - b^2 = (u1^2 + v1^2 d - u2^2 - v2^2 d) + 2 (u1 v1 - u2 v2) sqrt d.
            let uu = u1 * u1 + v1 * v1 * d - u2 * u2 - v2 * v2 * d;
            let vv = BigInt::from(2) * (u1 * v1 - u2 * v2);
            Some(surd_sign(&uu, &vv, d) == Sign::Minus)
        }
        (Gap::Interval { lo: l1, hi: h1 }, Gap::Interval { lo: l2, hi: h2 }) => {
            let max1 = if l1.abs() > h1.abs() { l1.abs() } else { h1.abs() };
            let straddle = l2.is_negative() != h2.is_negative();
            let min2 = if straddle { BigRational::zero() } else if l2.abs() < h2.abs() { l2.abs() } else { h2.abs() };
            if max1 < min2 {
                Some(true)
            } else {
                None
            }
        }
        (Gap::Exact(x), Gap::Exact(y)) => Some(x.abs() < y.abs()),
        _ => None,
    }
}

/// Exact checks of the classical convergent identities and inequalities.
pub fn verify_convergents(x: &RealNumber, convs: &[Convergent]) -> Result<ConvergentCheck> {
    let determinant = convs.windows(2).all(|w| {
        let (a, b) = (&w[0], &w[1]);
        let det = &b.p * &a.q - &a.p * &b.q;
        let expect = if b.k % 2 == 1 { BigInt::one() } else { -BigInt::one() };
        det == expect
    });
    let reduced = convs.iter().all(|c| c.p.gcd(&c.q).is_one())
        && convs.windows(2).skip(1).all(|w| w[1].q > w[0].q);
    let gaps: Vec<Gap> = convs.iter().map(|c| gap(x, c)).collect();
    let mut inequality = Vec::with_capacity(convs.len().saturating_sub(1));
    for (k, w) in convs.windows(2).enumerate() {
        let bound = BigRational::new(BigInt::one(), w[1].q.clone());
        let ok = abs_less(&gaps[k], &bound)
            .ok_or_else(|| Error::Precision(format!("cannot certify the convergent inequality at k = {k}")))?;
        inequality.push(ok);
    }
    let mut monotone = true;
    for k in 1..gaps.len() {
        if let Gap::Exact(r) = &gaps[k] {
            if r.is_zero() {
                break;
            }
        }
        match gap_less(&gaps[k], &gaps[k - 1]) {
            Some(b) => monotone &= b,
            None => return Err(Error::Precision(format!("cannot certify monotonicity at k = {k}"))),
        }
    }
    Ok(ConvergentCheck { determinant, reduced, inequality, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::IrrationalSpec;

    fn num(spec: IrrationalSpec) -> RealNumber {
        RealNumber::new(&spec).unwrap()
    }

    #[test]
    fn golden_is_all_ones() {
        let e = cf_expand(&num(IrrationalSpec::golden()), 40).unwrap();
        assert_eq!(e.quotients[0], BigInt::zero());
        assert!(e.quotients[1..].iter().all(|a| a.is_one()));
    }

    #[test]
    fn sqrt2_is_all_twos() {
        let e = cf_expand(&num(IrrationalSpec::sqrt2_minus_1()), 30).unwrap();
        assert_eq!(e.quotients[0], BigInt::zero());
        assert!(e.quotients[1..].iter().all(|a| *a == BigInt::from(2)));
        let q: Vec<i64> = convergents(&e.quotients)[1..6].iter().map(|c| c.q.clone().try_into().unwrap()).collect();
        assert_eq!(q, vec![2, 5, 12, 29, 70]);
    }

    #[test]
    fn quadratic_with_awkward_denominator() {
        // (1 + sqrt 7) / 3 = 1.215... = [1; 4, 1, 1, ...] checked against floats.
        let x = num(IrrationalSpec::Quadratic { p: 1, d: 7, q: 3 });
        let e = cf_expand(&x, 8).unwrap();
        let mut v = (1.0 + 7f64.sqrt()) / 3.0;
        for a in &e.quotients {
            assert_eq!(*a, BigInt::from(v.floor() as i64));
            v = 1.0 / (v - v.floor());
        }
    }

    #[test]
    fn rational_terminates() {
        let e = cf_expand(&num(IrrationalSpec::Rational { num: 1, den: 3 }), 10).unwrap();
        assert!(e.terminated);
        assert_eq!(e.quotients, vec![BigInt::zero(), BigInt::from(3)]);
    }

    #[test]
    fn literal_depth_is_limited() {
        let x = num(IrrationalSpec::Literal { digits: "0.6180339887".into(), radius: "1e-10".into() });
        assert!(cf_expand(&x, 5).is_ok());
        match cf_expand(&x, 60) {
            Err(Error::Precision(msg)) => assert!(msg.contains("depth limited")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn golden_convergents_verify() {
        let x = num(IrrationalSpec::golden());
        let c = convergents(&cf_expand(&x, 30).unwrap().quotients);
        let check = verify_convergents(&x, &c).unwrap();
        assert!(check.determinant && check.reduced && check.monotone);
        assert!(check.inequality.iter().all(|&b| b));
    }
}

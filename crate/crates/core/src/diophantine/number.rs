use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a real number in `(0, 1)` is specified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IrrationalSpec {
    /// `(p + sqrt(d)) / q` with `d` not a perfect square.
    Quadratic { p: i64, d: u64, q: i64 },
    /// A decimal literal known to within `radius` (both decimal strings).
    Literal { digits: String, radius: String },
    /// A rational number; only for tests and negative controls.
    Rational { num: i64, den: i64 },
}

impl IrrationalSpec {
    pub fn golden() -> Self {
        IrrationalSpec::Quadratic { p: -1, d: 5, q: 2 }
    }

    pub fn sqrt2_minus_1() -> Self {
        IrrationalSpec::Quadratic { p: -1, d: 2, q: 1 }
    }

    /// `sum_{j=1}^{terms} 10^{-j!}`, with the remaining tail as radius.
    pub fn liouville(terms: usize) -> Self {
        let fact = |j: usize| (1..=j).product::<usize>();
        let len = fact(terms);
        let mut digits = vec![b'0'; len];
        for j in 1..=terms {
            digits[fact(j) - 1] = b'1';
        }
        IrrationalSpec::Literal {
            digits: format!("0.{}", String::from_utf8(digits).unwrap()),
            radius: format!("2e-{}", fact(terms + 1)),
        }
    }
}

/// Sign of `u + v sqrt(d)` for non-square `d > 0`, exactly.
pub(crate) fn surd_sign(u: &BigInt, v: &BigInt, d: &BigInt) -> Sign {
    let (su, sv) = (u.sign(), v.sign());
    if sv == Sign::NoSign {
        return su;
    }
    if su == Sign::NoSign || su == sv {
        return sv;
    }
    // Opposite signs: compare u^2 with v^2 d.
    let lhs = u * u;
    let rhs = v * v * d;
    match lhs.cmp(&rhs) {
        std::cmp::Ordering::Greater => su,
        std::cmp::Ordering::Less => sv,
        std::cmp::Ordering::Equal => Sign::NoSign,
    }
}

/// A resolved number: exact quadratic surd, validated interval, or rational.
#[derive(Debug, Clone, PartialEq)]
pub enum RealNumber {
    /// `(p + sqrt(d)) / q`.
    Quadratic { p: BigInt, d: BigInt, q: BigInt },
    Interval { lo: BigRational, hi: BigRational },
    Rational(BigRational),
}

pub(crate) fn parse_decimal(s: &str) -> Result<BigRational> {
    let bad = || Error::param("digits", format!("`{s}` is not a decimal literal"));
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("{int}{frac}0").parse::<BigInt>().map_err(|_| bad())? / 10;
    let scale = exp - frac.len() as i64;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        BigRational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

impl RealNumber {
    pub fn new(spec: &IrrationalSpec) -> Result<Self> {
        match spec {
            IrrationalSpec::Quadratic { p, d, q } => {
                if *q == 0 {
                    return Err(Error::param("q", "denominator must be nonzero"));
                }
                let dd = BigInt::from(*d);
                let r = dd.sqrt();
                if &r * &r == dd {
                    return Err(Error::param("d", format!("{d} is a perfect square, so the number is rational")));
                }
                Ok(RealNumber::Quadratic { p: BigInt::from(*p), d: dd, q: BigInt::from(*q) })
            }
            IrrationalSpec::Literal { digits, radius } => {
                let c = parse_decimal(digits)?;
                let r = parse_decimal(radius)?;
                if !r.is_positive() {
                    return Err(Error::param("radius", "must be positive"));
                }
                Ok(RealNumber::Interval { lo: &c - &r, hi: c + r })
            }
            IrrationalSpec::Rational { num, den } => {
                if *den == 0 {
                    return Err(Error::param("den", "must be nonzero"));
                }
                Ok(RealNumber::Rational(BigRational::new(BigInt::from(*num), BigInt::from(*den))))
            }
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, RealNumber::Rational(_))
    }

    /// Nearest double.
    pub fn to_f64(&self) -> f64 {
        match self {
            RealNumber::Quadratic { p, d, q } => {
                let (p, d, q) = (p.to_f64().unwrap(), d.to_f64().unwrap(), q.to_f64().unwrap());
                // Avoid cancellation when p ~ -sqrt(d): (p + s) = (p^2 - d) / (p - s).
                let s = d.sqrt();
                if p < 0.0 {
                    (p * p - d) / (p - s) / q
                } else {
                    (p + s) / q
                }
            }
            RealNumber::Interval { lo, hi } => ((lo + hi) / BigInt::from(2)).to_f64().unwrap(),
            RealNumber::Rational(r) => r.to_f64().unwrap(),
        }
    }

    /// Uncertainty radius (zero for exact kinds).
    pub fn radius(&self) -> f64 {
        match self {
            RealNumber::Interval { lo, hi } => ((hi - lo) / BigInt::from(2)).to_f64().unwrap(),
            _ => 0.0,
        }
    }

    /// `m x` for a positive integer `m`.
    pub fn scaled(&self, m: u64) -> Self {
        let mb = BigInt::from(m);
        match self {
            RealNumber::Quadratic { p, d, q } => {
                RealNumber::Quadratic { p: p * &mb, d: d * &mb * &mb, q: q.clone() }
            }
            RealNumber::Interval { lo, hi } => {
                RealNumber::Interval { lo: lo * &mb, hi: hi * &mb }
            }
            RealNumber::Rational(r) => RealNumber::Rational(r * &mb),
        }
    }

    /// `floor(k x)` where it can be certified.
    pub(crate) fn floor_multiple(&self, k: &BigInt) -> Result<BigInt> {
        match self {
            RealNumber::Quadratic { p, d, q } => Ok(floor_quadratic(&(k * p), &(k * k * d), k.sign(), q)),
            RealNumber::Interval { lo, hi } => {
                let (a, b) = if k.is_negative() { (hi * k, lo * k) } else { (lo * k, hi * k) };
                let (fa, fb) = (a.floor().to_integer(), b.floor().to_integer());
                if fa != fb {
                    return Err(Error::Precision(format!("the literal is too coarse to locate {k} a between integers")));
                }
                Ok(fa)
            }
            RealNumber::Rational(r) => Ok((r * k).floor().to_integer()),
        }
    }
}

/// `floor((p + s sqrt(d)) / q)` for `s = +-1`, non-square `d`.
pub(crate) fn floor_quadratic(p: &BigInt, d: &BigInt, s: Sign, q: &BigInt) -> BigInt {
    let r = d.sqrt();
    // s sqrt(d) lies strictly between the integers below.
    let (num, qq) = if q.is_positive() { (p.clone(), q.clone()) } else { (-p, -q) };
    let sign_pos = (s != Sign::Minus) == q.is_positive();
    let inner = if sign_pos { &num + &r } else { &num - &r - BigInt::one() };
    if d.is_zero() {
        return num.div_floor(&qq);
    }
    inner.div_floor(&qq)
}

//! Exact scalars in the two supported non-Archimedean fields, and the
//! rational log-scale `Val` used for every absolute value in the crate.
//!
//! `PAdic(p)` stores exact rationals measured by the p-adic valuation.
//! `SeriesT` stores Puiseux polynomials in `t` with rational coefficients,
//! truncated at a fixed exponent cutoff; it models a field whose residue
//! characteristic is zero. Magnitudes are never converted to floats: the
//! absolute value of `x` is `base^(-valuation(x))` and only the exponent is kept.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Rational `n/d` from machine integers.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as a rational.
pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parse `"a/b"`, `"a"` or `"-a/b"` into a rational.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let t = s.trim();
    t.parse::<Rat>()
        .map_err(|_| Error::InvalidInput(format!("not a rational literal: {s:?}")))
}

/// Smallest integer `>= q`.
pub fn ceil_int(q: &Rat) -> BigInt {
    q.ceil().to_integer()
}

/// Largest integer `<= q`.
pub fn floor_int(q: &Rat) -> BigInt {
    q.floor().to_integer()
}

/// Additive valuation: a finite rational exponent or `Infinity` (the value of zero).
///
/// The derived order puts every finite value below `Infinity`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Val {
    Finite(Rat),
    Infinity,
}

impl Val {
    pub fn zero() -> Val {
        Val::Finite(Rat::zero())
    }

    pub fn from_int(n: i64) -> Val {
        Val::Finite(int(n))
    }

    pub fn from_rat(q: Rat) -> Val {
        Val::Finite(q)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Val::Finite(_))
    }

    pub fn finite(&self) -> Option<&Rat> {
        match self {
            Val::Finite(q) => Some(q),
            Val::Infinity => None,
        }
    }

    /// The finite exponent; panics on `Infinity`. Use only where the caller
    /// has already excluded zero.
    pub fn expect_finite(&self) -> &Rat {
        self.finite().expect("valuation of a nonzero quantity expected")
    }

    pub fn add_rat(&self, q: &Rat) -> Val {
        match self {
            Val::Finite(a) => Val::Finite(a + q),
            Val::Infinity => Val::Infinity,
        }
    }

    pub fn sub_rat(&self, q: &Rat) -> Val {
        match self {
            Val::Finite(a) => Val::Finite(a - q),
            Val::Infinity => Val::Infinity,
        }
    }

    /// Multiply by a strictly positive rational.
    pub fn scale(&self, k: &Rat) -> Val {
        assert!(k.is_positive(), "Val::scale needs a positive factor");
        match self {
            Val::Finite(a) => Val::Finite(a * k),
            Val::Infinity => Val::Infinity,
        }
    }

    pub fn parse(s: &str) -> Result<Val> {
        match s.trim() {
            "inf" | "Infinity" | "infinity" | "oo" => Ok(Val::Infinity),
            other => Ok(Val::Finite(parse_rat(other)?)),
        }
    }
}

impl Add for &Val {
    type Output = Val;
    fn add(self, rhs: &Val) -> Val {
        match (self, rhs) {
            (Val::Finite(a), Val::Finite(b)) => Val::Finite(a + b),
            _ => Val::Infinity,
        }
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Finite(q) => write!(f, "{q}"),
            Val::Infinity => write!(f, "inf"),
        }
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut k = 2u64;
    while k * k <= p {
        if p % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

/// Which valued field scalars live in.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Backend {
    /// Rationals with the p-adic valuation; `|p| = 1/p`.
    PAdic { p: u64 },
    /// Truncated Puiseux series in `t`; exponents are multiples of
    /// `1/ramification` and every term of exponent `>= precision` is dropped.
    SeriesT { precision: Rat, ramification: u64 },
}

impl Backend {
    pub fn padic(p: u64) -> Result<Backend> {
        if !is_prime(p) {
            return Err(Error::InvalidBackend(format!("{p} is not prime")));
        }
        Ok(Backend::PAdic { p })
    }

    pub fn series(precision: Rat, ramification: u64) -> Result<Backend> {
        if !precision.is_positive() {
            return Err(Error::InvalidBackend("series precision must be positive".into()));
        }
        if ramification == 0 {
            return Err(Error::InvalidBackend("ramification denominator must be positive".into()));
        }
        Ok(Backend::SeriesT { precision, ramification })
    }

    /// `p` for the p-adic backend, `0` for series.
    pub fn residue_characteristic(&self) -> u64 {
        match self {
            Backend::PAdic { p } => *p,
            Backend::SeriesT { .. } => 0,
        }
    }

    /// Whether `q` is a valuation actually attained by a nonzero scalar.
    pub fn in_value_group(&self, q: &Rat) -> bool {
        match self {
            Backend::PAdic { .. } => q.is_integer(),
            Backend::SeriesT { ramification, .. } => {
                (q * int(*ramification as i64)).is_integer()
            }
        }
    }

    pub fn zero(&self) -> Scalar {
        self.rational(Rat::zero())
    }

    pub fn one(&self) -> Scalar {
        self.rational(Rat::one())
    }

    pub fn int(&self, n: i64) -> Scalar {
        self.rational(int(n))
    }

    /// Embed a rational number (for series: the constant term).
    pub fn rational(&self, q: Rat) -> Scalar {
        match self {
            Backend::PAdic { .. } => Scalar { backend: self.clone(), data: Data::Rat(q) },
            Backend::SeriesT { .. } => {
                let mut terms = BTreeMap::new();
                if !q.is_zero() {
                    terms.insert(Rat::zero(), q);
                }
                Scalar { backend: self.clone(), data: Data::Series(terms) }
            }
        }
    }

    /// The uniformizer: `p` or `t`.
    pub fn uniformizer(&self) -> Scalar {
        match self {
            Backend::PAdic { p } => self.int(*p as i64),
            Backend::SeriesT { .. } => self.monomial(Rat::one(), Rat::one()),
        }
    }

    /// `coeff * t^exp` (series) or `coeff * p^exp` (p-adic, `exp` integral).
    pub fn monomial(&self, coeff: Rat, exp: Rat) -> Scalar {
        match self {
            Backend::PAdic { p } => {
                let e = exp.to_integer().to_i64().expect("small exponent");
                let pp = int(*p as i64);
                let pow = if e >= 0 {
                    num_traits::pow(pp, e as usize)
                } else {
                    num_traits::pow(pp, (-e) as usize).recip()
                };
                self.rational(coeff * pow)
            }
            Backend::SeriesT { precision, .. } => {
                let mut terms = BTreeMap::new();
                if !coeff.is_zero() && &exp < precision {
                    terms.insert(exp, coeff);
                }
                Scalar { backend: self.clone(), data: Data::Series(terms) }
            }
        }
    }

    /// Build a series from `(exponent, coefficient)` pairs, checking that every
    /// exponent lies in the value group. Terms beyond the cutoff are dropped.
    pub fn series_from_terms(&self, pairs: &[(Rat, Rat)]) -> Result<Scalar> {
        let Backend::SeriesT { precision, ramification } = self else {
            return Err(Error::InvalidInput("series literal given to a p-adic backend".into()));
        };
        let mut terms: BTreeMap<Rat, Rat> = BTreeMap::new();
        for (e, c) in pairs {
            if !(e * int(*ramification as i64)).is_integer() {
                return Err(Error::InvalidInput(format!(
                    "exponent {e} not a multiple of 1/{ramification}"
                )));
            }
            if e < precision {
                *terms.entry(e.clone()).or_insert_with(Rat::zero) += c;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(Scalar { backend: self.clone(), data: Data::Series(terms) })
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::PAdic { p } => write!(f, "PAdic({p})"),
            Backend::SeriesT { precision, ramification } => {
                write!(f, "SeriesT(precision {precision}, ramification {ramification})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Data {
    Rat(Rat),
    /// Nonzero coefficients keyed by exponent, all exponents below the cutoff.
    Series(BTreeMap<Rat, Rat>),
}

/// An exact element of one of the backends.
///
/// Equality and ordering are structural; the order exists only to give
/// deterministic output and carries no arithmetic meaning.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scalar {
    backend: Backend,
    data: Data,
}

/// p-adic valuation of a nonzero integer, and the cofactor.
fn split_p(n: &BigInt, p: &BigInt) -> (i64, BigInt) {
    let mut k = 0i64;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(p);
        if !r.is_zero() {
            return (k, m);
        }
        m = q;
        k += 1;
    }
}

fn padic_val(q: &Rat, p: u64) -> Val {
    if q.is_zero() {
        return Val::Infinity;
    }
    let pb = BigInt::from(p);
    let (a, _) = split_p(q.numer(), &pb);
    let (b, _) = split_p(q.denom(), &pb);
    Val::Finite(int(a - b))
}

/// Residue of a p-integral rational modulo `m` (a power of p), in `[0, m)`.
fn residue_mod(q: &Rat, m: &BigInt) -> BigInt {
    let inv = q
        .denom()
        .modinv(m)
        .expect("denominator must be prime to the modulus");
    (q.numer() * inv).mod_floor(m)
}

fn series_mul(a: &BTreeMap<Rat, Rat>, b: &BTreeMap<Rat, Rat>, cutoff: &Rat) -> BTreeMap<Rat, Rat> {
    let mut out: BTreeMap<Rat, Rat> = BTreeMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e = ea + eb;
            if &e >= cutoff {
                // Exponents of `b` are increasing, so later terms are dropped too.
                break;
            }
            *out.entry(e).or_insert_with(Rat::zero) += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

impl Scalar {
    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn is_zero(&self) -> bool {
        match &self.data {
            Data::Rat(q) => q.is_zero(),
            Data::Series(t) => t.is_empty(),
        }
    }

    pub fn is_one(&self) -> bool {
        *self == self.backend.one()
    }

    /// The underlying rational for the p-adic backend (or a constant series).
    pub fn as_rational(&self) -> Option<Rat> {
        match &self.data {
            Data::Rat(q) => Some(q.clone()),
            Data::Series(t) => match t.len() {
                0 => Some(Rat::zero()),
                1 => t.get(&Rat::zero()).cloned(),
                _ => None,
            },
        }
    }

    /// Storage size in bits of the numerators and denominators involved.
    pub fn height_bits(&self) -> u64 {
        match &self.data {
            Data::Rat(q) => q.numer().bits() + q.denom().bits(),
            Data::Series(t) => t.values().map(|c| c.numer().bits() + c.denom().bits()).sum(),
        }
    }

    /// Series terms in increasing exponent order; empty for p-adic scalars.
    pub fn series_terms(&self) -> Vec<(Rat, Rat)> {
        match &self.data {
            Data::Rat(_) => Vec::new(),
            Data::Series(t) => t.iter().map(|(e, c)| (e.clone(), c.clone())).collect(),
        }
    }

    pub fn valuation(&self) -> Val {
        match (&self.backend, &self.data) {
            (Backend::PAdic { p }, Data::Rat(q)) => padic_val(q, *p),
            (_, Data::Series(t)) => match t.keys().next() {
                Some(e) => Val::Finite(e.clone()),
                None => Val::Infinity,
            },
            _ => unreachable!("backend and data always agree"),
        }
    }

    /// Leading unit part: `x / uniformizer^v(x)` reduced to the residue field,
    /// returned as a rational (`0..p-1` for p-adic, the lowest coefficient for series).
    pub fn residue_of_unit_part(&self) -> Option<Rat> {
        match (&self.backend, &self.data) {
            (Backend::PAdic { p }, Data::Rat(q)) => {
                if q.is_zero() {
                    return None;
                }
                let pb = BigInt::from(*p);
                let (_, a) = split_p(q.numer(), &pb);
                let (_, b) = split_p(q.denom(), &pb);
                Some(Rat::from_integer(residue_mod(&Rat::new(a, b), &pb)))
            }
            (_, Data::Series(t)) => t.values().next().cloned(),
            _ => unreachable!(),
        }
    }

    fn check_same(&self, other: &Scalar) {
        assert_eq!(
            self.backend, other.backend,
            "arithmetic between scalars of different backends"
        );
    }

    fn combine(&self, other: &Scalar, sign: i64) -> Scalar {
        self.check_same(other);
        let data = match (&self.data, &other.data) {
            (Data::Rat(a), Data::Rat(b)) => {
                Data::Rat(if sign > 0 { a + b } else { a - b })
            }
            (Data::Series(a), Data::Series(b)) => {
                let mut out = a.clone();
                for (e, c) in b {
                    let entry = out.entry(e.clone()).or_insert_with(Rat::zero);
                    if sign > 0 {
                        *entry += c;
                    } else {
                        *entry -= c;
                    }
                }
                out.retain(|_, c| !c.is_zero());
                Data::Series(out)
            }
            _ => unreachable!(),
        };
        Scalar { backend: self.backend.clone(), data }
    }

    fn product(&self, other: &Scalar) -> Scalar {
        self.check_same(other);
        let data = match (&self.data, &other.data) {
            (Data::Rat(a), Data::Rat(b)) => Data::Rat(a * b),
            (Data::Series(a), Data::Series(b)) => {
                let Backend::SeriesT { precision, .. } = &self.backend else { unreachable!() };
                Data::Series(series_mul(a, b, precision))
            }
            _ => unreachable!(),
        };
        Scalar { backend: self.backend.clone(), data }
    }

    /// Product that refuses to silently lose a nonzero result below the cutoff.
    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar> {
        let out = self.product(other);
        if out.is_zero() && !self.is_zero() && !other.is_zero() {
            return Err(Error::PrecisionExhausted(
                "product has no term below the series cutoff".into(),
            ));
        }
        Ok(out)
    }

    /// Multiplicative inverse.
    pub fn inv(&self) -> Result<Scalar> {
        match &self.data {
            Data::Rat(q) => {
                if q.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                Ok(Scalar { backend: self.backend.clone(), data: Data::Rat(q.recip()) })
            }
            Data::Series(t) => {
                let Backend::SeriesT { precision, .. } = &self.backend else { unreachable!() };
                let Some((v, c)) = t.iter().next() else {
                    return Err(Error::DivisionByZero);
                };
                // x = c t^v (1 + e) with v(e) > 0; 1/x = c^-1 t^-v sum (-e)^k.
                // Terms of the geometric sum are needed below precision + v.
                let cutoff = precision + v;
                if !cutoff.is_positive() {
                    return Err(Error::PrecisionExhausted(
                        "inverse has no term below the series cutoff".into(),
                    ));
                }
                let cinv = c.recip();
                let mut minus_e: BTreeMap<Rat, Rat> = BTreeMap::new();
                for (e2, c2) in t.iter().skip(1) {
                    minus_e.insert(e2 - v, -(c2 * &cinv));
                }
                let mut sum: BTreeMap<Rat, Rat> = BTreeMap::new();
                sum.insert(Rat::zero(), Rat::one());
                let mut power = sum.clone();
                if !minus_e.is_empty() {
                    loop {
                        power = series_mul(&power, &minus_e, &cutoff);
                        if power.is_empty() {
                            break;
                        }
                        for (e2, c2) in &power {
                            *sum.entry(e2.clone()).or_insert_with(Rat::zero) += c2;
                        }
                    }
                }
                let mut out = BTreeMap::new();
                for (e2, c2) in sum {
                    let e = e2 - v;
                    if !c2.is_zero() && &e < precision {
                        out.insert(e, c2 * &cinv);
                    }
                }
                Ok(Scalar { backend: self.backend.clone(), data: Data::Series(out) })
            }
        }
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Scalar> {
        self.check_same(other);
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        self.checked_mul(&other.inv()?)
    }

    /// Nonnegative integer power by repeated squaring.
    pub fn pow(&self, mut n: u64) -> Scalar {
        let mut base = self.clone();
        let mut acc = self.backend.one();
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Integer power; negative exponents invert first.
    pub fn powi(&self, n: i64) -> Result<Scalar> {
        if n >= 0 {
            Ok(self.pow(n as u64))
        } else {
            Ok(self.inv()?.pow(n.unsigned_abs()))
        }
    }

    /// A canonical representative of the class of `self` modulo the closed
    /// ball `{y : v(y) >= bound}` (or the open ball `v(y) > bound` when
    /// `strict`). Two scalars have the same representative exactly when their
    /// difference lies in that ball, so this gives canonical disk centers.
    pub fn class_representative(&self, bound: &Rat, strict: bool) -> Scalar {
        match (&self.backend, &self.data) {
            (Backend::PAdic { p }, Data::Rat(q)) => {
                // Rational valuations are integers, so both balls are p^n Z_(p).
                let n = if strict { floor_int(bound) + 1 } else { ceil_int(bound) };
                let n = n.to_i64().expect("exponent fits in i64");
                let v = match padic_val(q, *p) {
                    Val::Infinity => return self.backend.zero(),
                    Val::Finite(v) => v.to_integer().to_i64().expect("valuation fits"),
                };
                if v >= n {
                    return self.backend.zero();
                }
                let pb = BigInt::from(*p);
                let shift = self.backend.monomial(Rat::one(), int(-v));
                let unit = (self * &shift).as_rational().expect("p-adic scalar");
                let modulus = num_traits::pow(pb, (n - v) as usize);
                let r = residue_mod(&unit, &modulus);
                let back = self.backend.monomial(Rat::from_integer(r), int(v));
                back
            }
            (_, Data::Series(t)) => {
                let kept: BTreeMap<Rat, Rat> = t
                    .iter()
                    .filter(|(e, _)| if strict { *e <= bound } else { *e < bound })
                    .map(|(e, c)| (e.clone(), c.clone()))
                    .collect();
                Scalar { backend: self.backend.clone(), data: Data::Series(kept) }
            }
            _ => unreachable!(),
        }
    }

    /// Keep only the information of `self` modulo valuation `precision`:
    /// the result `y` satisfies `v(y - self) >= precision`. Used to stop exact
    /// p-adic rationals from growing once a computation has a fixed precision.
    pub fn reduce_to_precision(&self, precision: &Rat) -> Scalar {
        self.class_representative(precision, false)
    }

    /// The unique `w` with `w^n = self` and `v(w - 1) > 0`.
    ///
    /// Requires `v(self - 1) > 0`. In the p-adic backend the root is computed
    /// by Newton iteration in `Z/p^N` with `N = ceil(precision)` and satisfies
    /// `v(w^n - self) >= precision`; the series backend sums the binomial series
    /// up to the smaller of the cutoff and `precision` (an infinite precision
    /// means the cutoff).
    pub fn nth_root_unit(&self, n: u64, precision: &Val) -> Result<Scalar> {
        if n == 0 {
            return Err(Error::PreconditionViolated("root index must be at least 1".into()));
        }
        let one = self.backend.one();
        let gap = (self - &one).valuation();
        if gap <= Val::zero() {
            return Err(Error::PreconditionViolated(
                "root extraction needs v(u - 1) > 0".into(),
            ));
        }
        if n == 1 || self.is_one() {
            return Ok(self.clone());
        }
        match (&self.backend, &self.data) {
            (Backend::PAdic { p }, Data::Rat(q)) => {
                if n % p == 0 {
                    return Err(Error::RootUnavailable(n));
                }
                let Val::Finite(prec) = precision else {
                    return Err(Error::PreconditionViolated(
                        "p-adic roots need a finite precision".into(),
                    ));
                };
                let big_n = ceil_int(prec).max(BigInt::one());
                let digits = big_n.to_usize().expect("precision fits");
                let modulus = num_traits::pow(BigInt::from(*p), digits);
                let u = residue_mod(q, &modulus);
                let nb = BigInt::from(n);
                let mut w = BigInt::one();
                for _ in 0..128 {
                    let wn1 = w.modpow(&BigInt::from(n - 1), &modulus);
                    let residual = (&wn1 * &w - &u).mod_floor(&modulus);
                    if residual.is_zero() {
                        return Ok(self.backend.rational(Rat::from_integer(w)));
                    }
                    let deriv = (&nb * &wn1).mod_floor(&modulus);
                    let dinv = deriv.modinv(&modulus).expect("derivative is a unit");
                    w = (&w - residual * dinv).mod_floor(&modulus);
                }
                Err(Error::PrecisionExhausted("Newton root iteration did not settle".into()))
            }
            (Backend::SeriesT { precision: cutoff, .. }, Data::Series(_)) => {
                // w = sum_k binom(1/n, k) e^k with e = u - 1 and v(e) > 0,
                // summed until the terms pass the requested precision.
                let bound = match precision {
                    Val::Finite(q) if q < cutoff => q.clone(),
                    _ => cutoff.clone(),
                };
                let e = self - &one;
                let ve = gap.expect_finite().clone();
                let alpha = Rat::new(BigInt::one(), BigInt::from(n));
                let mut coeff = Rat::one();
                let mut power = one.clone();
                let mut sum = one.clone();
                let mut k: i64 = 0;
                loop {
                    k += 1;
                    if (&ve * int(k)) >= bound {
                        break;
                    }
                    coeff = coeff * (&alpha - int(k - 1)) / int(k);
                    power = (&power * &e).reduce_to_precision(&bound);
                    sum = &sum + &(&power * &self.backend.rational(coeff.clone()));
                }
                Ok(sum)
            }
            _ => unreachable!(),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.data {
            Data::Rat(q) => write!(f, "{q}"),
            Data::Series(t) => {
                if t.is_empty() {
                    return write!(f, "0");
                }
                let parts: Vec<String> = t.iter().map(|(e, c)| format!("{c}*t^({e})")).collect();
                write!(f, "{}", parts.join(" + "))
            }
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                let f: fn(&Scalar, &Scalar) -> Scalar = $body;
                f(self, rhs)
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
        impl $tr<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| a.combine(b, 1));
forward_binop!(Sub, sub, |a, b| a.combine(b, -1));
forward_binop!(Mul, mul, |a, b| a.product(b));

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.backend.zero().combine(self, -1)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

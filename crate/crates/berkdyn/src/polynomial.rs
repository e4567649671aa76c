//! Polynomials, their critically marked normal form, and their action on
//! Berkovich points.
//!
//! The action of `f` on a disk `x_{a,q}` is read off the Taylor expansion
//! `f(a + h) = Σ f_k(a) h^k`: the image is `x_{f(a), s}` with
//! `s = min_k (v(f_k(a)) + k q)`, and the local degree is the largest `k`
//! attaining that minimum. As a function of `q` this is a concave
//! piecewise-linear map with integer slopes, represented by [`ExponentMap`].

use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use num_traits::Zero;

use crate::berkovich::BerkPoint;
use crate::error::{Error, Result};
use crate::valued_field::{int, Backend, Rat, Scalar, Val};

/// Dense univariate polynomial, coefficients from low to high degree with no
/// trailing zeros (the zero polynomial has no coefficients).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly {
    backend: Backend,
    coeffs: Vec<Scalar>,
}

impl Poly {
    pub fn new(backend: &Backend, mut coeffs: Vec<Scalar>) -> Poly {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { backend: backend.clone(), coeffs }
    }

    pub fn from_rats(backend: &Backend, coeffs: &[Rat]) -> Poly {
        Poly::new(backend, coeffs.iter().map(|c| backend.rational(c.clone())).collect())
    }

    pub fn constant(c: Scalar) -> Poly {
        let b = c.backend().clone();
        Poly::new(&b, vec![c])
    }

    /// The monic linear factor `z - a`.
    pub fn linear_root(a: &Scalar) -> Poly {
        let b = a.backend().clone();
        Poly::new(&b, vec![-a, b.one()])
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Scalar {
        self.coeffs.get(i).cloned().unwrap_or_else(|| self.backend.zero())
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, z: &Scalar) -> Scalar {
        let mut acc = self.backend.zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * z) + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * &self.backend.int(i as i64))
            .collect();
        Poly::new(&self.backend, coeffs)
    }

    /// Antiderivative with the given constant term.
    pub fn antiderivative(&self, constant: Scalar) -> Poly {
        let mut coeffs = vec![constant];
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.backend.rational(Rat::from_integer((i as i64 + 1).into()).recip());
            coeffs.push(c * &k);
        }
        Poly::new(&self.backend, coeffs)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| &self.coeff(i) + &other.coeff(i)).collect();
        Poly::new(&self.backend, coeffs)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| &self.coeff(i) - &other.coeff(i)).collect();
        Poly::new(&self.backend, coeffs)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::new(&self.backend, vec![]);
        }
        let mut coeffs = vec![self.backend.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = &coeffs[i + j] + &(a * b);
            }
        }
        Poly::new(&self.backend, coeffs)
    }

    pub fn scale(&self, c: &Scalar) -> Poly {
        Poly::new(&self.backend, self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::constant(self.backend.one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Coefficients of `f(a + h)` in powers of `h`, by repeated synthetic division.
    pub fn taylor_at(&self, a: &Scalar) -> Vec<Scalar> {
        let mut work = self.coeffs.clone();
        let mut out = Vec::with_capacity(work.len());
        while !work.is_empty() {
            // Divide `work` by (z - a): the remainder is the next Taylor coefficient.
            let n = work.len();
            let mut quotient = vec![self.backend.zero(); n - 1];
            let mut carry = self.backend.zero();
            for i in (0..n).rev() {
                let cur = &work[i] + &(&carry * a);
                if i == 0 {
                    out.push(cur);
                } else {
                    quotient[i - 1] = cur.clone();
                    carry = cur;
                }
            }
            work = quotient;
        }
        out
    }

    /// Multiplicity of `a` as a root (0 when `p(a) ≠ 0`).
    pub fn root_multiplicity(&self, a: &Scalar) -> usize {
        self.taylor_at(a).iter().take_while(|c| c.is_zero()).count()
    }

    /// Minimum coefficient valuation: the exponent of the sup norm on the unit disk.
    pub fn gauss_valuation(&self) -> Val {
        self.coeffs.iter().map(|c| c.valuation()).min().unwrap_or(Val::Infinity)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("({c})z^{i}"))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// One linear piece `q ↦ slope·q + intercept` of an [`ExponentMap`], valid for
/// `lo <= q <= hi` (`None` bounds are infinite).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub slope: u32,
    pub intercept: Rat,
    pub lo: Option<Rat>,
    pub hi: Option<Rat>,
}

/// A concave increasing piecewise-linear map `q ↦ min_k (k q + b_k)` with
/// positive integer slopes, extended by `∞ ↦ ∞`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentMap {
    pieces: Vec<Piece>,
}

impl ExponentMap {
    /// Lower envelope of the given lines `(slope, intercept)`.
    pub fn from_lines(lines: &[(u32, Rat)]) -> ExponentMap {
        assert!(!lines.is_empty(), "an exponent map needs at least one line");
        let mut best: std::collections::BTreeMap<u32, Rat> = std::collections::BTreeMap::new();
        for (k, b) in lines {
            assert!(*k >= 1, "slopes must be positive");
            best.entry(*k)
                .and_modify(|cur| {
                    if b < cur {
                        *cur = b.clone()
                    }
                })
                .or_insert_with(|| b.clone());
        }
        // Walk from q = -∞ (steepest line lowest) toward +∞.
        let mut cur_k = *best.keys().next_back().unwrap();
        let mut cur_b = best[&cur_k].clone();
        let mut lo: Option<Rat> = None;
        let mut pieces = Vec::new();
        loop {
            let mut next: Option<(Rat, u32, Rat)> = None;
            for (k, b) in best.range(..cur_k) {
                let x = (b - &cur_b) / int((cur_k - k) as i64);
                if lo.as_ref().is_some_and(|l| &x < l) {
                    continue;
                }
                let better = match &next {
                    None => true,
                    Some((nx, nk, _)) => x < *nx || (x == *nx && k < nk),
                };
                if better {
                    next = Some((x, *k, b.clone()));
                }
            }
            match next {
                None => {
                    pieces.push(Piece { slope: cur_k, intercept: cur_b, lo, hi: None });
                    break;
                }
                Some((x, k, b)) => {
                    pieces.push(Piece {
                        slope: cur_k,
                        intercept: cur_b.clone(),
                        lo: lo.clone(),
                        hi: Some(x.clone()),
                    });
                    lo = Some(x);
                    cur_k = k;
                    cur_b = b;
                }
            }
        }
        // Drop degenerate pieces of zero length created by concurrent lines.
        let pieces = pieces
            .into_iter()
            .filter(|p| !(p.lo.is_some() && p.lo == p.hi))
            .collect();
        ExponentMap { pieces }
    }

    /// Pieces ordered by increasing `q`.
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Breakpoints in increasing order.
    pub fn breakpoints(&self) -> Vec<Rat> {
        self.pieces.iter().filter_map(|p| p.hi.clone()).collect()
    }

    pub fn eval(&self, q: &Val) -> Val {
        match q {
            Val::Infinity => Val::Infinity,
            Val::Finite(q) => Val::Finite(
                self.pieces
                    .iter()
                    .map(|p| int(p.slope as i64) * q + &p.intercept)
                    .min()
                    .expect("nonempty"),
            ),
        }
    }

    /// Largest slope attaining the minimum (the local degree); at `q = ∞`
    /// the smallest slope present.
    pub fn degree_at(&self, q: &Val) -> u32 {
        match q {
            Val::Infinity => self.pieces.last().unwrap().slope,
            Val::Finite(x) => {
                let value = self.eval(q);
                let value = value.expect_finite();
                self.pieces
                    .iter()
                    .filter(|p| &(int(p.slope as i64) * x + &p.intercept) == value)
                    .map(|p| p.slope)
                    .max()
                    .unwrap()
            }
        }
    }

    /// The unique `q` with `eval(q) = s`.
    pub fn inverse(&self, s: &Val) -> Val {
        let Val::Finite(s) = s else { return Val::Infinity };
        for p in &self.pieces {
            let q = (s - &p.intercept) / int(p.slope as i64);
            let above = p.lo.as_ref().is_none_or(|lo| &q >= lo);
            let below = p.hi.as_ref().is_none_or(|hi| &q <= hi);
            if above && below {
                return Val::Finite(q);
            }
        }
        unreachable!("a continuous increasing bijection has a preimage")
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &ExponentMap) -> ExponentMap {
        let mut lines = Vec::new();
        for o in &self.pieces {
            for i in &inner.pieces {
                lines.push((o.slope * i.slope, &o.intercept + int(o.slope as i64) * &i.intercept));
            }
        }
        ExponentMap::from_lines(&lines)
    }

    /// Smallest `q >= start` with `eval(q) = q`, or `None` if `eval(q) < q`
    /// for every such `q`. Since slopes are at least one, `eval(q) - q` is
    /// nondecreasing and the fixed points form an interval.
    pub fn least_fixed_point_from(&self, start: &Rat) -> Option<Rat> {
        let g = |q: &Rat| self.eval(&Val::Finite(q.clone())).expect_finite() - q;
        if g(start) >= Rat::zero() {
            return if g(start).is_zero() { Some(start.clone()) } else { None };
        }
        for p in &self.pieces {
            if p.hi.as_ref().is_some_and(|hi| hi <= start) {
                continue;
            }
            let lo = match &p.lo {
                Some(lo) if lo > start => lo.clone(),
                _ => start.clone(),
            };
            if g(&lo).is_zero() {
                return Some(lo);
            }
            if p.slope > 1 {
                // (k - 1) q + b = 0.
                let q = -p.intercept.clone() / int(p.slope as i64 - 1);
                let inside = q >= lo && p.hi.as_ref().is_none_or(|hi| &q <= hi);
                if inside {
                    return Some(q);
                }
            } else if p.intercept.is_zero() {
                return Some(lo);
            }
        }
        None
    }
}

/// The image of the ray `]c, ∞[` under `f`: `x_{c,q} ↦ x_{f(c), map(q)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseMonomial {
    pub source_center: Scalar,
    pub image_center: Scalar,
    pub map: ExponentMap,
}

impl PiecewiseMonomial {
    pub fn image(&self, q: &Val) -> BerkPoint {
        BerkPoint::new(self.image_center.clone(), self.map.eval(q))
    }

    /// The point on `]c, ∞[` mapping to exponent `s` on the image ray.
    pub fn preimage_exp(&self, s: &Val) -> Val {
        self.map.inverse(s)
    }
}

/// A marked critical point and its local degree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CriticalMark {
    pub point: Scalar,
    pub multiplicity: u32,
}

impl CriticalMark {
    pub fn new(point: Scalar, multiplicity: u32) -> CriticalMark {
        CriticalMark { point, multiplicity }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tameness {
    Tame,
    Wild { degree: u32, witness: BerkPoint },
}

/// A monic centered polynomial together with all of its critical points.
#[derive(Debug)]
pub struct MarkedPolynomial {
    degree: u32,
    poly: Poly,
    marks: Vec<CriticalMark>,
    base_radius_exp: Rat,
    tameness: Tameness,
    taylor_cache: RwLock<HashMap<Scalar, Vec<Scalar>>>,
}

impl Clone for MarkedPolynomial {
    fn clone(&self) -> Self {
        MarkedPolynomial {
            degree: self.degree,
            poly: self.poly.clone(),
            marks: self.marks.clone(),
            base_radius_exp: self.base_radius_exp.clone(),
            tameness: self.tameness.clone(),
            taylor_cache: RwLock::new(HashMap::new()),
        }
    }
}

impl PartialEq for MarkedPolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.poly == other.poly && self.marks == other.marks
    }
}

fn validate_marks(marks: &[CriticalMark]) -> Result<(Backend, u32)> {
    let first = marks
        .first()
        .ok_or_else(|| Error::InvalidMarks("at least one critical mark is required".into()))?;
    let backend = first.point.backend().clone();
    let mut sum = 0u32;
    for (i, m) in marks.iter().enumerate() {
        if m.point.backend() != &backend {
            return Err(Error::BackendMismatch);
        }
        if m.multiplicity < 2 {
            return Err(Error::InvalidMarks(format!(
                "mark {i} has multiplicity {} < 2",
                m.multiplicity
            )));
        }
        for other in &marks[..i] {
            if other.point == m.point {
                return Err(Error::InvalidMarks(format!("mark {i} repeats the point {}", m.point)));
            }
        }
        sum += m.multiplicity - 1;
    }
    Ok((backend, sum + 1))
}

/// `d · Π (z - c_i)^(d_i - 1)`.
fn derivative_from_marks(backend: &Backend, degree: u32, marks: &[CriticalMark]) -> Poly {
    let mut prod = Poly::constant(backend.int(degree as i64));
    for m in marks {
        prod = prod.mul(&Poly::linear_root(&m.point).pow(m.multiplicity - 1));
    }
    prod
}

impl MarkedPolynomial {
    /// The unique monic centered `f` with `f' = d Π (z - c_i)^(d_i - 1)` and
    /// `f(0) = b`. The coefficient of `z^(d-1)` is `-(d/(d-1)) Σ (d_i - 1) c_i`,
    /// so centering is the condition `Σ (d_i - 1) c_i = 0`.
    pub fn from_critical_data(marks: Vec<CriticalMark>, b: Scalar) -> Result<MarkedPolynomial> {
        let (backend, degree) = validate_marks(&marks)?;
        if b.backend() != &backend {
            return Err(Error::BackendMismatch);
        }
        if degree < 2 {
            return Err(Error::InvalidMarks("degree must be at least 2".into()));
        }
        let mut weighted = backend.zero();
        for m in &marks {
            weighted = &weighted + &(&m.point * &backend.int(m.multiplicity as i64 - 1));
        }
        if !weighted.is_zero() {
            return Err(Error::InvalidMarks(format!(
                "centering violated: Σ (d_i - 1) c_i = {weighted}"
            )));
        }
        let poly = derivative_from_marks(&backend, degree, &marks).antiderivative(b);
        Ok(Self::assemble(degree, poly, marks))
    }

    /// Build from explicit coefficients (low to high) and caller-supplied
    /// critical marks, verifying monicity, centering and
    /// `f' = d Π (z - c_i)^(d_i - 1)` coefficient by coefficient.
    pub fn from_coeffs(coeffs: Vec<Scalar>, marks: Vec<CriticalMark>) -> Result<MarkedPolynomial> {
        let (backend, degree) = validate_marks(&marks)?;
        if coeffs.iter().any(|c| c.backend() != &backend) {
            return Err(Error::BackendMismatch);
        }
        let poly = Poly::new(&backend, coeffs);
        if poly.degree() != Some(degree as usize) {
            return Err(Error::InvalidMarks(format!(
                "multiplicities give degree {degree} but the polynomial has degree {:?}",
                poly.degree()
            )));
        }
        if !poly.coeff(degree as usize).is_one() {
            return Err(Error::InvalidMarks("polynomial is not monic".into()));
        }
        if !poly.coeff(degree as usize - 1).is_zero() {
            return Err(Error::InvalidMarks("polynomial is not centered".into()));
        }
        if poly.derivative() != derivative_from_marks(&backend, degree, &marks) {
            return Err(Error::InvalidMarks(
                "marks do not match the critical points of the polynomial".into(),
            ));
        }
        Ok(Self::assemble(degree, poly, marks))
    }

    fn assemble(degree: u32, poly: Poly, marks: Vec<CriticalMark>) -> MarkedPolynomial {
        let mut base = Rat::zero();
        for i in 0..(degree as usize - 1) {
            if let Val::Finite(v) = poly.coeff(i).valuation() {
                let cand = v / int(degree as i64 - i as i64);
                if cand < base {
                    base = cand;
                }
            }
        }
        let tameness = compute_tameness(&poly, &marks);
        MarkedPolynomial {
            degree,
            poly,
            marks,
            base_radius_exp: base,
            tameness,
            taylor_cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn backend(&self) -> &Backend {
        self.poly.backend()
    }

    pub fn marks(&self) -> &[CriticalMark] {
        &self.marks
    }

    /// `f(0)`.
    pub fn constant_term(&self) -> Scalar {
        self.poly.coeff(0)
    }

    /// Exponent of `R_f`; always `<= 0`.
    pub fn base_radius_exp(&self) -> &Rat {
        &self.base_radius_exp
    }

    pub fn base_point(&self) -> BerkPoint {
        BerkPoint::disk(self.backend().zero(), self.base_radius_exp.clone())
    }

    pub fn eval(&self, z: &Scalar) -> Scalar {
        self.poly.eval(z)
    }

    /// `f^n(z)`.
    pub fn iterate(&self, z: &Scalar, n: usize) -> Scalar {
        let mut w = z.clone();
        for _ in 0..n {
            w = self.eval(&w);
        }
        w
    }

    /// Taylor coefficients `f_k(a)`, memoised per center.
    pub fn taylor(&self, a: &Scalar) -> Vec<Scalar> {
        if let Some(t) = self.taylor_cache.read().expect("cache lock").get(a) {
            return t.clone();
        }
        let t = self.poly.taylor_at(a);
        let mut cache = self.taylor_cache.write().expect("cache lock");
        if cache.len() > 4096 {
            cache.clear();
        }
        cache.insert(a.clone(), t.clone());
        t
    }

    pub fn tameness_check(&self) -> Tameness {
        self.tameness.clone()
    }

    pub fn is_tame(&self) -> bool {
        self.tameness == Tameness::Tame
    }

    pub fn require_tame(&self) -> Result<()> {
        match &self.tameness {
            Tameness::Tame => Ok(()),
            Tameness::Wild { degree, witness } => {
                Err(Error::NotTame { degree: *degree, witness: witness.to_string() })
            }
        }
    }

    /// Image of a point and the local degree there, from Taylor data.
    pub fn image_point(&self, x: &BerkPoint) -> (BerkPoint, u32) {
        let seg = self.segment_map_unchecked(x.center());
        let q = x.radius_exp();
        (seg.image(q), seg.map.degree_at(q))
    }

    /// Local degree by counting critical points in the closed disk
    /// (valid for tame `f`).
    pub fn local_degree_rh(&self, x: &BerkPoint) -> Result<u32> {
        self.require_tame()?;
        Ok(1 + self
            .marks
            .iter()
            .filter(|m| x.contains(&m.point))
            .map(|m| m.multiplicity - 1)
            .sum::<u32>())
    }

    /// The exact exponent dynamics of `f` along `]c, ∞[`.
    pub fn segment_dynamics(&self, c: &Scalar) -> Result<PiecewiseMonomial> {
        self.require_tame()?;
        Ok(self.segment_map_unchecked(c))
    }

    pub(crate) fn segment_map_unchecked(&self, c: &Scalar) -> PiecewiseMonomial {
        let t = self.taylor(c);
        let lines: Vec<(u32, Rat)> = t
            .iter()
            .enumerate()
            .skip(1)
            .filter_map(|(k, fk)| fk.valuation().finite().map(|v| (k as u32, v.clone())))
            .collect();
        PiecewiseMonomial {
            source_center: c.clone(),
            image_center: t[0].clone(),
            map: ExponentMap::from_lines(&lines),
        }
    }
}

/// `f` is tame when no local degree is divisible by `p`. The local degree at
/// `x[c; q]` is the slope of the exponent map read off the Taylor data at
/// `c`, so scanning the pieces along every critical ray `]c, ∞[` covers the
/// convex hull of the critical points and `∞`. Off the hull nothing more can
/// go wrong: at a hull point whose degree is prime to `p` the reduction has a
/// nonzero derivative, whose roots are exactly the critical directions, so
/// every other direction has degree one.
fn compute_tameness(poly: &Poly, marks: &[CriticalMark]) -> Tameness {
    let p = poly.backend().residue_characteristic();
    if p == 0 {
        return Tameness::Tame;
    }
    let p = p as u32;
    for m in marks {
        let lines: Vec<(u32, Rat)> = poly
            .taylor_at(&m.point)
            .iter()
            .enumerate()
            .skip(1)
            .filter_map(|(k, fk)| fk.valuation().finite().map(|v| (k as u32, v.clone())))
            .collect();
        for piece in ExponentMap::from_lines(&lines).pieces() {
            if piece.slope % p == 0 {
                // The lowest piece reaches the critical point itself.
                let q = match (&piece.lo, &piece.hi) {
                    (_, None) => Val::Infinity,
                    (Some(lo), Some(hi)) => Val::Finite((lo + hi) / int(2)),
                    (None, Some(hi)) => Val::Finite(hi - int(1)),
                };
                return Tameness::Wild { degree: piece.slope, witness: BerkPoint::new(m.point.clone(), q) };
            }
        }
    }
    Tameness::Tame
}

/// Convenience for tests and examples: marks from `(rational point, multiplicity)`.
pub fn marks_from(backend: &Backend, data: &[(Rat, u32)]) -> Vec<CriticalMark> {
    data.iter()
        .map(|(c, m)| CriticalMark::new(backend.rational(c.clone()), *m))
        .collect()
}

/// Whether `q` is strictly above (larger disk than) the base exponent.
pub fn is_above_base(f: &MarkedPolynomial, x: &BerkPoint) -> bool {
    match x.abs_exp() {
        Val::Finite(e) => &e < f.base_radius_exp(),
        Val::Infinity => false,
    }
}

//! The Böttcher coordinate near infinity and the ρ-closeness comparator.
//!
//! For `|z| > R_f` write `w_n = f^n(z)` and `u_n = f(w_n) / w_n^d`. Then
//! `φ_f(z) = z · Π_n u_n^(1/d^(n+1))` with every root taken on the branch
//! congruent to 1. Because `f` is monic and centered,
//! `u_n - 1 = Σ_{i <= d-2} a_i w_n^(i-d)` and each term has valuation at least
//! `(d - i)(r0 - v(w_n)) >= 2 g_n` where `g_n = r0 - v(w_n) > 0` and `r0` is the
//! base exponent. Since `g_{n+1} = d g_n - (d - 1) r0 >= d g_n`, truncating the
//! product once `2 g_N >= precision - v(z)` leaves a tail that does not affect
//! `φ` below the requested precision.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::escape::{classify_marks, trace_orbit, EscapeOptions, EscapeRecord, OrbitEnd};
use crate::error::{Error, Result};
use crate::polynomial::MarkedPolynomial;
use crate::valued_field::{int, Backend, Rat, Scalar, Val};

/// Cached evaluator of `φ_f` at a fixed precision.
#[derive(Debug)]
pub struct BoettcherSeries {
    f: MarkedPolynomial,
    precision: Val,
    cache: RwLock<HashMap<Scalar, Scalar>>,
}

impl BoettcherSeries {
    pub fn new(f: &MarkedPolynomial, precision: Val) -> BoettcherSeries {
        BoettcherSeries { f: f.clone(), precision, cache: RwLock::new(HashMap::new()) }
    }

    pub fn precision(&self) -> &Val {
        &self.precision
    }

    pub fn eval(&self, z: &Scalar) -> Result<Scalar> {
        if let Some(hit) = self.cache.read().expect("cache lock").get(z) {
            return Ok(hit.clone());
        }
        let value = phi_eval(&self.f, z, &self.precision)?;
        self.cache.write().expect("cache lock").insert(z.clone(), value.clone());
        Ok(value)
    }
}

/// `φ_f(z)` with `v(result - φ_f(z)) >= precision`.
pub fn phi_eval(f: &MarkedPolynomial, z: &Scalar, precision: &Val) -> Result<Scalar> {
    let backend = f.backend().clone();
    if z.backend() != &backend {
        return Err(Error::BackendMismatch);
    }
    let Val::Finite(prec) = precision else {
        return Err(Error::PreconditionViolated("Böttcher evaluation needs a finite precision".into()));
    };
    let r0 = f.base_radius_exp().clone();
    let vz = match z.valuation() {
        Val::Finite(v) if v < r0 => v,
        _ => return Err(Error::NotOutsideBaseDisk),
    };
    let d = f.degree() as u64;
    let p = backend.residue_characteristic();
    if p != 0 && d % p == 0 {
        return Err(Error::RootUnavailable(d));
    }
    // Relative precision needed in the unit factor.
    let unit_prec = prec - &vz;
    if let Backend::SeriesT { precision: cutoff, .. } = &backend {
        let coeff_floor = (0..f.degree() as usize - 1)
            .filter_map(|i| f.poly().coeff(i).valuation().finite().cloned())
            .fold(Rat::from_integer(0.into()), |a, b| if b < a { b } else { a });
        let reachable = cutoff + &coeff_floor + &vz;
        if prec > &reachable {
            return Err(Error::PrecisionExhausted(format!(
                "series cutoff {cutoff} only determines φ(z) to valuation {reachable}"
            )));
        }
    }
    // Every quantity below is only needed to relative precision `work_prec`;
    // reducing keeps p-adic heights and series term counts bounded.
    let work_prec = &unit_prec + int(1);
    let mut gap = &r0 - &vz;
    let mut w = z.clone();
    let mut product = backend.one();
    let mut root_index: u64 = d;
    let two = int(2);
    while &two * &gap < unit_prec {
        let u = unit_factor(f, &w)?.reduce_to_precision(&work_prec);
        let root = u.nth_root_unit(root_index, &Val::Finite(work_prec.clone()))?;
        product = (&product * &root.reduce_to_precision(&work_prec)).reduce_to_precision(&work_prec);
        let vw = w.valuation().expect_finite().clone();
        w = f.eval(&w).reduce_to_precision(&(int(d as i64) * &vw + &work_prec));
        gap = int(d as i64) * &gap - int(d as i64 - 1) * &r0;
        root_index = root_index.checked_mul(d).ok_or_else(|| {
            Error::PrecisionExhausted("root index overflow in the Böttcher product".into())
        })?;
    }
    let phi = z.checked_mul(&product)?;
    Ok(phi.reduce_to_precision(prec))
}

/// `u = f(w) / w^d = 1 + Σ_{i <= d-2} a_i w^(i-d)`.
fn unit_factor(f: &MarkedPolynomial, w: &Scalar) -> Result<Scalar> {
    let backend = f.backend();
    let d = f.degree() as usize;
    let inv = w.inv()?;
    let mut sum = backend.one();
    let mut power = backend.one();
    for k in 1..=d {
        power = &power * &inv;
        let a = f.poly().coeff(d - k);
        if k >= 2 && !a.is_zero() {
            sum = &sum + &(&a * &power);
        }
    }
    Ok(sum)
}

/// ρ in backend log units; `Infinity` when the coordinates agree at the
/// working precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhoBound {
    pub rho_exp: Val,
    /// Per-mark ρ values (`None` for marks that do not escape).
    pub per_mark: Vec<Option<Val>>,
}

/// First-exit iterate `f^m(c)` for every mark, aligned with the marks.
pub(crate) fn exit_points(f: &MarkedPolynomial, records: &[EscapeRecord], budget: usize) -> Vec<Option<(usize, Scalar, Val)>> {
    f.marks()
        .iter()
        .zip(records)
        .map(|(mark, rec)| {
            let m = rec.first_exit()?;
            let orbit = trace_orbit(f, &mark.point, budget);
            match orbit.end {
                OrbitEnd::Exit(n) if n == m => {
                    let pt = &orbit.points[m];
                    Some((m, pt.value.clone(), pt.accuracy.clone()))
                }
                _ => None,
            }
        })
        .collect()
}

pub fn rho_closeness(f: &MarkedPolynomial, g: &MarkedPolynomial, precision: &Val) -> Result<RhoBound> {
    rho_closeness_with(f, g, precision, EscapeOptions::default())
}

pub fn rho_closeness_with(
    f: &MarkedPolynomial,
    g: &MarkedPolynomial,
    precision: &Val,
    opts: EscapeOptions,
) -> Result<RhoBound> {
    if f.backend() != g.backend() {
        return Err(Error::NotComparable("different backends".into()));
    }
    if f.degree() != g.degree() {
        return Err(Error::NotComparable("different degrees".into()));
    }
    if f.base_radius_exp() != g.base_radius_exp() {
        return Err(Error::NotComparable(format!(
            "base exponents differ: {} vs {}",
            f.base_radius_exp(),
            g.base_radius_exp()
        )));
    }
    if f.marks().len() != g.marks().len() {
        return Err(Error::NotComparable("different numbers of critical marks".into()));
    }
    let rf = classify_marks(f, opts)?;
    let rg = classify_marks(g, opts)?;
    for (i, (a, b)) in rf.iter().zip(&rg).enumerate() {
        let undecided = |r: &EscapeRecord| !r.is_escaping() && !r.is_bounded();
        if undecided(a) || undecided(b) {
            return Err(Error::NotComparable(format!("escape of mark {i} is undetermined")));
        }
        if a.first_exit() != b.first_exit() {
            return Err(Error::NotComparable(format!(
                "mark {i}: escape patterns differ ({} vs {})",
                a.kind_name(),
                b.kind_name()
            )));
        }
    }
    let ef = exit_points(f, &rf, opts.budget);
    let eg = exit_points(g, &rg, opts.budget);
    if !precision.is_finite() {
        return Err(Error::PreconditionViolated("ρ comparison needs a finite precision".into()));
    }
    let mut per_mark = Vec::new();
    let mut overall = Val::Infinity;
    for (a, b) in ef.iter().zip(&eg) {
        let (Some((_, alpha, acc_a)), Some((_, beta, acc_b))) = (a, b) else {
            per_mark.push(None);
            continue;
        };
        if acc_a < precision || acc_b < precision {
            return Err(Error::PrecisionExhausted("exit point known only approximately".into()));
        }
        let phi_f = phi_eval(f, alpha, precision)?;
        let phi_g = phi_eval(g, beta, precision)?;
        let diff = (&phi_f - &phi_g).valuation();
        let rho = if diff >= *precision {
            Val::Infinity
        } else {
            Val::Finite(diff.expect_finite() - alpha.valuation().expect_finite())
        };
        if rho < overall {
            overall = rho.clone();
        }
        per_mark.push(Some(rho));
    }
    Ok(RhoBound { rho_exp: overall, per_mark })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::marks_from;
    use crate::valued_field::rat;

    fn quad(c: Rat) -> MarkedPolynomial {
        let be = Backend::padic(3).unwrap();
        MarkedPolynomial::from_critical_data(marks_from(&be, &[(int(0), 2)]), be.rational(c))
            .unwrap()
    }

    #[test]
    fn monomial_is_its_own_coordinate() {
        let f = quad(int(0));
        let z = f.backend().rational(rat(1, 9));
        assert_eq!(phi_eval(&f, &z, &Val::from_int(20)).unwrap(), z);
        let t = Backend::series(int(12), 1).unwrap();
        let g = MarkedPolynomial::from_critical_data(marks_from(&t, &[(int(0), 2)]), t.zero())
            .unwrap();
        let z = t.monomial(int(1), int(-1));
        assert_eq!(phi_eval(&g, &z, &Val::from_int(5)).unwrap(), z);
    }

    #[test]
    fn functional_equation_residual() {
        let f = quad(rat(-1, 3));
        let z = f.backend().rational(rat(1, 3));
        let target = int(10);
        // φ(z)^2 is determined to valuation `target` once φ(z) is known to
        // valuation `target - v(z)`.
        let phi_z = phi_eval(&f, &z, &Val::Finite(&target + int(1))).unwrap();
        let phi_fz = phi_eval(&f, &f.eval(&z), &Val::Finite(target.clone())).unwrap();
        let residual = (&phi_fz - &phi_z.pow(2)).valuation();
        assert!(residual >= Val::Finite(target));
        assert!((&phi_z - &z).valuation() > z.valuation());
        assert_eq!(phi_z.valuation(), z.valuation());
    }

    #[test]
    fn domain_and_root_errors() {
        let f = quad(rat(-1, 3));
        assert_eq!(
            phi_eval(&f, &f.backend().zero(), &Val::from_int(5)),
            Err(Error::NotOutsideBaseDisk)
        );
        let b2 = Backend::padic(2).unwrap();
        let wild = MarkedPolynomial::from_critical_data(marks_from(&b2, &[(int(0), 2)]), b2.zero())
            .unwrap();
        assert_eq!(
            phi_eval(&wild, &b2.rational(rat(1, 2)), &Val::from_int(5)),
            Err(Error::RootUnavailable(2))
        );
    }

    #[test]
    fn rho_examples() {
        let f = quad(rat(-1, 3));
        let same = rho_closeness(&f, &f, &Val::from_int(20)).unwrap();
        assert_eq!(same.rho_exp, Val::Infinity);
        let g = quad(rat(-1, 3) + int(243));
        let r = rho_closeness(&f, &g, &Val::from_int(20)).unwrap();
        let rho = r.rho_exp.expect_finite().clone();
        assert!(rho > int(0));
        // Oracle: φ_f(-1/3) - φ_g(-1/3 + 3^5) is dominated by the shift 3^5
        // of the exit point, so ρ = 5 - (-1) = 6.
        assert_eq!(rho, int(6));
        let bounded = quad(int(0));
        assert!(matches!(
            rho_closeness(&f, &bounded, &Val::from_int(20)),
            Err(Error::NotComparable(_))
        ));
    }
}

//! Newton lifting of `f(h(x)) = g(x)` near the Gauss point.
//!
//! Starting from `z_0 = x`, each step subtracts `w_n = (f(z_n) - g(x)) / f'(z_n)`.
//! With `f` integral, `f'` a unit along the iteration and `f ≡ g` modulo the
//! maximal ideal, the residuals `f(z_n) - g(x)` shrink at least quadratically.
//! All inequalities are stated in valuation form: `|a| < μ|b|` becomes
//! `v(a) > mu + v(b)`.

use crate::error::{Error, Result};
use crate::polynomial::Poly;
use crate::valued_field::{int, Backend, Scalar, Val};

pub const DEFAULT_MAX_ITER: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftParams {
    /// Lower bound for the valuation of `f - g` on the closed unit disk.
    pub s: Val,
    /// Per-step contraction exponent.
    pub mu: Val,
    /// Region exponents, both negative, with `rho < r`: the lift is defined on
    /// `{v(x) >= rho}`.
    pub r: Val,
    pub rho: Val,
    pub max_iter: usize,
}

impl LiftParams {
    /// `s` = Gauss valuation of `f - g`, `mu = s/2`, and region exponents
    /// chosen strictly inside the admissible range.
    pub fn automatic(f: &Poly, g: &Poly) -> Result<LiftParams> {
        let s = f.sub(g).gauss_valuation();
        let d = f.degree().unwrap_or(1).max(1) as i64;
        let s_fin = match &s {
            // f = g: any admissible s works.
            Val::Infinity => int(2),
            Val::Finite(q) if *q > int(0) => q.clone(),
            Val::Finite(q) => {
                return Err(Error::HypothesisViolated(format!(
                    "f and g have different reductions (Gauss valuation of f - g is {q})"
                )))
            }
        };
        let mu = &s_fin / int(2);
        let r = -(&s_fin / int(4 * d));
        let rho = &r * int(2);
        Ok(LiftParams {
            s: Val::Finite(s_fin),
            mu: Val::Finite(mu),
            r: Val::Finite(r),
            rho: Val::Finite(rho),
            max_iter: DEFAULT_MAX_ITER,
        })
    }

    /// `μ r^d < 1` and `s r^d < μ` in valuation form.
    fn check(&self, degree: usize) -> Result<()> {
        let d = int(degree as i64);
        let (Val::Finite(s), Val::Finite(mu), Val::Finite(r), Val::Finite(rho)) =
            (&self.s, &self.mu, &self.r, &self.rho)
        else {
            return Err(Error::HypothesisViolated("lift parameters must be finite".into()));
        };
        if !(*mu > int(0) && mu < s) {
            return Err(Error::HypothesisViolated(format!("need 0 < mu < s, got mu = {mu}, s = {s}")));
        }
        if !(*r < int(0) && rho < r) {
            return Err(Error::HypothesisViolated(format!("need rho < r < 0, got r = {r}, rho = {rho}")));
        }
        if mu + &d * r <= int(0) {
            return Err(Error::HypothesisViolated(format!("μ r^d < 1 fails: mu + d r = {}", mu + &d * r)));
        }
        if s + &d * r <= *mu {
            return Err(Error::HypothesisViolated(format!("s r^d < μ fails: s + d r = {}", s + &d * r)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftStep {
    pub z: Scalar,
    /// `v(f(z_n) - g(x))`.
    pub residual_val: Val,
    /// `v(w_n)`.
    pub correction_val: Val,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftResult {
    pub value: Scalar,
    pub steps: Vec<LiftStep>,
    pub certified_valuation: Val,
    pub params: LiftParams,
}

impl LiftResult {
    pub fn iterations(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    /// Both contraction inequalities, step by step.
    pub fn contraction_holds(&self) -> bool {
        self.steps.windows(2).all(|w| {
            w[1].residual_val > w[0].residual_val.add_rat(self.params.mu.expect_finite())
                && w[1].correction_val > w[0].correction_val.add_rat(self.params.mu.expect_finite())
        })
    }
}

/// Reject coefficients with fractional `t`-exponents, on which the reduction
/// comparison is not defined.
fn integral_exponents(p: &Poly) -> bool {
    match p.backend() {
        Backend::PAdic { .. } => true,
        Backend::SeriesT { .. } => p
            .coeffs()
            .iter()
            .all(|c| c.series_terms().iter().all(|(e, _)| e.is_integer())),
    }
}

pub fn lift(f: &Poly, g: &Poly, x: &Scalar, target: &Val, params: Option<LiftParams>) -> Result<LiftResult> {
    if f.backend() != g.backend() || x.backend() != f.backend() {
        return Err(Error::BackendMismatch);
    }
    if !integral_exponents(f) || !integral_exponents(g) {
        return Err(Error::HypothesisViolated("coefficients must have integral t-exponents".into()));
    }
    if f.gauss_valuation() < Val::zero() {
        return Err(Error::HypothesisViolated("f must fix the Gauss point (integral coefficients)".into()));
    }
    let diff = f.sub(g).gauss_valuation();
    if diff <= Val::zero() {
        return Err(Error::HypothesisViolated("f and g must have the same reduction".into()));
    }
    let params = match params {
        Some(p) => p,
        None => LiftParams::automatic(f, g)?,
    };
    params.check(f.degree().unwrap_or(1))?;
    if diff < params.s {
        return Err(Error::HypothesisViolated(format!(
            "v(f - g) = {diff} is below the declared s = {}",
            params.s
        )));
    }
    if x.valuation() < params.rho {
        return Err(Error::HypothesisViolated(format!("x = {x} lies outside the lifting region")));
    }
    let fprime = f.derivative();
    let gx = g.eval(x);
    let mu = params.mu.expect_finite().clone();
    let mut z = x.clone();
    let mut steps = Vec::new();
    loop {
        let residual = &f.eval(&z) - &gx;
        let residual_val = residual.valuation();
        let derivative = fprime.eval(&z);
        if derivative.valuation() != Val::zero() {
            return Err(Error::HypothesisViolated(format!("f'({z}) is not a unit")));
        }
        let w = residual.checked_div(&derivative)?;
        let step = LiftStep { z: z.clone(), residual_val: residual_val.clone(), correction_val: w.valuation() };
        if let Some(prev) = steps.last() {
            let prev: &LiftStep = prev;
            if !(step.residual_val > prev.residual_val.add_rat(&mu)) || !(step.correction_val > prev.correction_val.add_rat(&mu)) {
                return Err(Error::ContractionFailed {
                    step: steps.len(),
                    detail: format!(
                        "residual valuation {} -> {}, correction valuation {} -> {}",
                        prev.residual_val, step.residual_val, prev.correction_val, step.correction_val
                    ),
                });
            }
        }
        steps.push(step);
        if residual_val >= *target {
            return Ok(LiftResult { value: z, steps, certified_valuation: residual_val, params });
        }
        if steps.len() > params.max_iter {
            return Err(Error::MaxIterExceeded(params.max_iter));
        }
        z = &z - &w;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q3() -> Backend {
        Backend::padic(3).unwrap()
    }

    #[test]
    fn equal_maps_need_no_steps() {
        let f = Poly::from_rats(&q3(), &[int(0), int(1), int(1)]);
        let r = lift(&f, &f, &q3().zero(), &Val::from_int(20), None).unwrap();
        assert_eq!(r.iterations(), 0);
        assert_eq!(r.value, q3().zero());
        assert_eq!(r.certified_valuation, Val::Infinity);
    }

    #[test]
    fn quadratic_plus_small_constant() {
        let f = Poly::from_rats(&q3(), &[int(0), int(1), int(1)]);
        let g = f.add(&Poly::constant(q3().int(27)));
        let r = lift(&f, &g, &q3().zero(), &Val::from_int(20), None).unwrap();
        assert!(r.certified_valuation >= Val::from_int(20));
        assert!(r.value.valuation() >= Val::from_int(3));
        assert!(r.contraction_holds());
        // First correction is -(f(0) - g(0))/f'(0) = 27.
        assert_eq!(r.steps[0].correction_val, Val::from_int(3));
    }

    #[test]
    fn hypotheses_are_checked() {
        let f = Poly::from_rats(&q3(), &[int(0), int(1), int(1)]);
        let g = f.add(&Poly::constant(q3().int(1)));
        assert!(matches!(
            lift(&f, &g, &q3().zero(), &Val::from_int(20), None),
            Err(Error::HypothesisViolated(_))
        ));
        // f'(1) = 3 is not a unit.
        let g = f.add(&Poly::constant(q3().int(9)));
        assert!(matches!(
            lift(&f, &g, &q3().one(), &Val::from_int(20), None),
            Err(Error::HypothesisViolated(_))
        ));
    }
}

//! Families `f_λ` whose coefficients and critical marks are polynomials in a
//! parameter `λ` ranging over a closed disk.
//!
//! Everything here is sample-based: verdicts record what was certified at the
//! given parameters and never claim more. The family ρ bound is the exception
//! that works on the whole subdisk: the first-exit Böttcher value is expanded
//! as a power series in `μ = λ - center` and its sup over the subdisk is read
//! from the Gauss norm, with the unexpanded tail controlled by a Cauchy
//! estimate on the (larger) family disk.

use serde_json::{json, Value};

use crate::boettcher::RhoBound;
use crate::codec::{parse_backend, backend_to_string, scalar_from_json, scalar_to_json, val_from_json, val_to_json};
use crate::error::{Error, Result};
use crate::escape::{classify_critical, EscapeRecord};
use crate::polynomial::{CriticalMark, MarkedPolynomial, Poly};
use crate::valued_field::{ceil_int, int, Backend, Rat, Scalar, Val};

/// How the polynomial depends on `λ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilyShape {
    /// Coefficients `a_0(λ), ..., a_{d-2}(λ)` of the monic centered polynomial.
    Coefficients(Vec<Poly>),
    /// The constant term `f_λ(0)`; the rest follows from the marks.
    ConstantTerm(Poly),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    pub backend: Backend,
    pub disk_center: Scalar,
    pub disk_radius_exp: Rat,
    pub shape: FamilyShape,
    /// Mark position as a polynomial in `λ`, with its multiplicity.
    pub marks: Vec<(Poly, u32)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PassivityVerdict {
    PassiveInBasin,
    PassiveBounded,
    Active { escaping_at: Scalar, bounded_at: Scalar },
    Unknown,
}

impl PassivityVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            PassivityVerdict::PassiveInBasin => "PassiveInBasin",
            PassivityVerdict::PassiveBounded => "PassiveBounded",
            PassivityVerdict::Active { .. } => "Active",
            PassivityVerdict::Unknown => "Unknown",
        }
    }
}

/// Passive verdicts mean "no activity witnessed at these samples".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PassivityReport {
    pub verdicts: Vec<PassivityVerdict>,
    /// Per sample, per mark.
    pub records: Vec<Vec<EscapeRecord>>,
    /// Samples at which the family does not specialize to a valid polynomial.
    pub defects: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BasePointVerdict {
    Constant(Rat),
    Varies { first: (Scalar, Rat), second: (Scalar, Rat) },
}

#[derive(Clone, Debug, PartialEq)]
pub enum PerturbOutcome {
    Found { lambda: Scalar, polynomial: MarkedPolynomial, records: Vec<EscapeRecord>, tried: usize },
    NotFound { tried: usize },
}

impl Family {
    pub fn degree(&self) -> u32 {
        1 + self.marks.iter().map(|(_, m)| m - 1).sum::<u32>()
    }

    pub fn contains(&self, lambda: &Scalar) -> bool {
        (lambda - &self.disk_center).valuation() >= Val::Finite(self.disk_radius_exp.clone())
    }

    fn marks_at(&self, lambda: &Scalar) -> Vec<CriticalMark> {
        self.marks.iter().map(|(p, m)| CriticalMark::new(p.eval(lambda), *m)).collect()
    }

    pub fn specialize(&self, lambda: &Scalar) -> Result<MarkedPolynomial> {
        let marks = self.marks_at(lambda);
        match &self.shape {
            FamilyShape::Coefficients(polys) => {
                let mut coeffs: Vec<Scalar> = polys.iter().map(|p| p.eval(lambda)).collect();
                coeffs.push(self.backend.zero());
                coeffs.push(self.backend.one());
                MarkedPolynomial::from_coeffs(coeffs, marks)
            }
            FamilyShape::ConstantTerm(b) => MarkedPolynomial::from_critical_data(marks, b.eval(lambda)),
        }
    }

    /// Coefficients of `f_λ` (low to high, up to `z^{d-2}`) at a parameter,
    /// without validating the marks.
    fn raw_coefficients(&self, lambda: &Scalar) -> Vec<Scalar> {
        let d = self.degree() as usize;
        match &self.shape {
            FamilyShape::Coefficients(polys) => polys.iter().map(|p| p.eval(lambda)).collect(),
            FamilyShape::ConstantTerm(b) => {
                let be = &self.backend;
                let mut deriv = Poly::constant(be.int(d as i64));
                for (p, m) in &self.marks {
                    let factor = Poly::linear_root(&p.eval(lambda));
                    deriv = deriv.mul(&factor.pow(m - 1));
                }
                let f = deriv.antiderivative(b.eval(lambda));
                (0..d.saturating_sub(1)).map(|i| f.coeff(i)).collect()
            }
        }
    }

    /// Coefficients of `f_λ` as polynomials in `λ`, by exact interpolation.
    fn coefficient_polys(&self) -> Vec<Poly> {
        if let FamilyShape::Coefficients(polys) = &self.shape {
            return polys.clone();
        }
        let FamilyShape::ConstantTerm(b) = &self.shape else { unreachable!() };
        let d = self.degree() as usize;
        let mark_deg = self.marks.iter().map(|(p, _)| p.degree().unwrap_or(0)).max().unwrap_or(0);
        let bound = (d * mark_deg).max(b.degree().unwrap_or(0));
        let nodes: Vec<Scalar> = (0..=bound as i64).map(|k| self.backend.int(k)).collect();
        let values: Vec<Vec<Scalar>> = nodes.iter().map(|x| self.raw_coefficients(x)).collect();
        (0..d - 1)
            .map(|i| interpolate(&nodes, &values.iter().map(|v| v[i].clone()).collect::<Vec<_>>()))
            .collect()
    }

    fn is_constant(&self) -> bool {
        let constant = |p: &Poly| p.degree().unwrap_or(0) == 0;
        self.marks.iter().all(|(p, _)| constant(p))
            && match &self.shape {
                FamilyShape::Coefficients(polys) => polys.iter().all(constant),
                FamilyShape::ConstantTerm(b) => constant(b),
            }
    }

    pub fn to_json(&self) -> Value {
        let poly = |p: &Poly| Value::Array(p.coeffs().iter().map(scalar_to_json).collect());
        let mut v = json!({
            "backend": backend_to_string(&self.backend),
            "disk": {"center": scalar_to_json(&self.disk_center), "radius_exp": self.disk_radius_exp.to_string()},
            "mark_polys": self.marks.iter().map(|(p, m)| json!({"poly": poly(p), "multiplicity": m})).collect::<Vec<_>>(),
        });
        match &self.shape {
            FamilyShape::Coefficients(polys) => v["coeff_polys"] = polys.iter().map(poly).collect(),
            FamilyShape::ConstantTerm(b) => v["b_poly"] = poly(b),
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Family> {
        let bad = |m: &str| Error::InvalidInput(format!("family JSON: {m}"));
        let backend = parse_backend(v.get("backend").and_then(Value::as_str).ok_or_else(|| bad("backend"))?)?;
        let poly = |p: &Value| -> Result<Poly> {
            let arr = p.as_array().ok_or_else(|| bad("polynomials are coefficient arrays"))?;
            let coeffs = arr.iter().map(|c| scalar_from_json(&backend, c)).collect::<Result<Vec<_>>>()?;
            Ok(Poly::new(&backend, coeffs))
        };
        let disk = v.get("disk").ok_or_else(|| bad("disk"))?;
        let disk_center = scalar_from_json(&backend, disk.get("center").ok_or_else(|| bad("disk center"))?)?;
        let disk_radius_exp = match val_from_json(disk.get("radius_exp").ok_or_else(|| bad("disk radius"))?)? {
            Val::Finite(q) => q,
            Val::Infinity => return Err(bad("the parameter disk must have a finite radius")),
        };
        let marks = v
            .get("mark_polys")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("mark_polys"))?
            .iter()
            .map(|m| {
                let p = poly(m.get("poly").ok_or_else(|| bad("mark poly"))?)?;
                let mult = m.get("multiplicity").and_then(Value::as_u64).ok_or_else(|| bad("multiplicity"))?;
                Ok((p, mult as u32))
            })
            .collect::<Result<Vec<_>>>()?;
        let shape = if let Some(c) = v.get("coeff_polys") {
            let arr = c.as_array().ok_or_else(|| bad("coeff_polys"))?;
            FamilyShape::Coefficients(arr.iter().map(poly).collect::<Result<Vec<_>>>()?)
        } else {
            FamilyShape::ConstantTerm(poly(v.get("b_poly").ok_or_else(|| bad("coeff_polys or b_poly"))?)?)
        };
        Ok(Family { backend, disk_center, disk_radius_exp, shape, marks })
    }
}

/// Newton-form interpolation through `(nodes[k], values[k])`.
fn interpolate(nodes: &[Scalar], values: &[Scalar]) -> Poly {
    let n = nodes.len();
    let mut dd = values.to_vec();
    for level in 1..n {
        for k in (level..n).rev() {
            let num = &dd[k] - &dd[k - 1];
            let den = &nodes[k] - &nodes[k - level];
            dd[k] = num.checked_div(&den).expect("interpolation nodes are distinct");
        }
    }
    let mut out = Poly::constant(dd[n - 1].clone());
    for k in (0..n - 1).rev() {
        out = out.mul(&Poly::linear_root(&nodes[k])).add(&Poly::constant(dd[k].clone()));
    }
    out
}

pub fn passivity_report(family: &Family, samples: &[Scalar], budget: usize) -> Result<PassivityReport> {
    if let Some(s) = samples.iter().find(|s| !family.contains(s)) {
        return Err(Error::InvalidInput(format!("sample {s} lies outside the parameter disk")));
    }
    let k = family.marks.len();
    let mut records = Vec::new();
    let mut defects = Vec::new();
    let mut escaping: Vec<Option<Scalar>> = vec![None; k];
    let mut bounded: Vec<Option<Scalar>> = vec![None; k];
    let mut incomplete = vec![false; k];
    for lambda in samples {
        let f = match family.specialize(lambda) {
            Ok(f) => f,
            Err(e) => {
                defects.push(format!("λ = {lambda}: {e}"));
                incomplete.iter_mut().for_each(|x| *x = true);
                records.push(vec![]);
                continue;
            }
        };
        let mut row = Vec::new();
        for (i, mark) in f.marks().iter().enumerate() {
            let rec = classify_critical(&f, mark, budget)?;
            match &rec {
                EscapeRecord::Escaping { .. } => {
                    escaping[i].get_or_insert_with(|| lambda.clone());
                }
                EscapeRecord::Bounded(_) => {
                    bounded[i].get_or_insert_with(|| lambda.clone());
                }
                EscapeRecord::Unknown { .. } => incomplete[i] = true,
            }
            row.push(rec);
        }
        records.push(row);
    }
    let verdicts = (0..k)
        .map(|i| match (&escaping[i], &bounded[i], incomplete[i]) {
            (Some(e), Some(b), _) => PassivityVerdict::Active { escaping_at: e.clone(), bounded_at: b.clone() },
            (_, _, true) | (None, None, _) => PassivityVerdict::Unknown,
            (Some(_), None, false) => PassivityVerdict::PassiveInBasin,
            (None, Some(_), false) => PassivityVerdict::PassiveBounded,
        })
        .collect();
    Ok(PassivityReport { verdicts, records, defects })
}

pub fn base_point_constancy(family: &Family, samples: &[Scalar]) -> Result<BasePointVerdict> {
    let mut first: Option<(Scalar, Rat)> = None;
    for lambda in samples {
        let f = family.specialize(lambda)?;
        let r = f.base_radius_exp().clone();
        match &first {
            None => first = Some((lambda.clone(), r)),
            Some((l0, r0)) if *r0 != r => {
                return Ok(BasePointVerdict::Varies { first: (l0.clone(), r0.clone()), second: (lambda.clone(), r) });
            }
            Some(_) => {}
        }
    }
    match first {
        Some((_, r)) => Ok(BasePointVerdict::Constant(r)),
        None => Err(Error::InvalidInput("no samples given".into())),
    }
}

/// Smallest element of the value group that is `>= q`.
fn value_group_ceil(backend: &Backend, q: &Rat) -> Rat {
    let ram = match backend {
        Backend::PAdic { .. } => 1,
        Backend::SeriesT { ramification, .. } => *ramification as i64,
    };
    Rat::new(ceil_int(&(q * int(ram))), ram.into())
}

/// The subdisk center and two points on its boundary sphere.
pub fn check_set(backend: &Backend, center: &Scalar, radius_exp: &Rat) -> Vec<Scalar> {
    let e = value_group_ceil(backend, radius_exp);
    let step = backend.monomial(int(1), e);
    vec![center.clone(), center + &step, center + &(&step * &backend.int(2))]
}

/// Truncated power series in `μ`, coefficients `0..=order`.
#[derive(Clone, Debug)]
struct MuSeries(Vec<Scalar>);

impl MuSeries {
    fn constant(backend: &Backend, c: Scalar, order: usize) -> MuSeries {
        let mut v = vec![backend.zero(); order + 1];
        v[0] = c;
        MuSeries(v)
    }

    /// `p(center + μ)`.
    fn shifted(p: &Poly, center: &Scalar, order: usize) -> MuSeries {
        let mut t = p.taylor_at(center);
        t.resize(order + 1, p.backend().zero());
        t.truncate(order + 1);
        MuSeries(t)
    }

    fn add(&self, o: &MuSeries) -> MuSeries {
        MuSeries(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    fn mul(&self, o: &MuSeries) -> MuSeries {
        let n = self.0.len();
        let mut out = vec![self.0[0].backend().zero(); n];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.0.iter().enumerate().take(n - i) {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        MuSeries(out)
    }

    fn div(&self, o: &MuSeries) -> Result<MuSeries> {
        let n = self.0.len();
        let b0 = &o.0[0];
        let mut out: Vec<Scalar> = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = self.0[k].clone();
            for j in 1..=k {
                acc = &acc - &(&o.0[j] * &out[k - j]);
            }
            out.push(acc.checked_div(b0)?);
        }
        Ok(MuSeries(out))
    }

    fn pow(&self, e: u32) -> MuSeries {
        let mut out = MuSeries::constant(self.0[0].backend(), self.0[0].backend().one(), self.0.len() - 1);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// `(1 + x)^(1/n)` for `x` with zero constant term, by the binomial series.
    fn root_one_plus(x: &MuSeries, n: &Rat) -> MuSeries {
        let be = x.0[0].backend().clone();
        let order = x.0.len() - 1;
        let a = Rat::from_integer(1.into()) / n;
        let mut out = MuSeries::constant(&be, be.one(), order);
        let mut power = MuSeries::constant(&be, be.one(), order);
        let mut binom = Rat::from_integer(1.into());
        for k in 1..=order {
            power = power.mul(x);
            binom = binom * (&a - int(k as i64 - 1)) / int(k as i64);
            let term = MuSeries(power.0.iter().map(|c| c * &be.rational(binom.clone())).collect());
            out = out.add(&term);
        }
        out
    }

    /// `min_{k >= 1} v(c_k) + k q`: the sup of the non-constant part on `{v(μ) >= q}`.
    fn gauss_tail(&self, q: &Rat) -> Val {
        self.0
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.valuation().add_rat(&(q * int(k as i64))))
            .min()
            .unwrap_or(Val::Infinity)
    }
}

/// Evaluate `f_λ` on a series argument, given the coefficient series.
fn apply(coeffs: &[MuSeries], degree: usize, z: &MuSeries) -> MuSeries {
    let be = z.0[0].backend().clone();
    let order = z.0.len() - 1;
    // Horner with the monic, centered top: z^d + 0 z^{d-1} + a_{d-2} z^{d-2} + ...
    let mut acc = MuSeries::constant(&be, be.one(), order);
    acc = acc.mul(z);
    for i in (0..degree - 1).rev() {
        acc = acc.mul(z).add(&coeffs[i]);
    }
    acc
}

/// ρ for all pairs of parameters in the subdisk `{v(λ - center) >= radius_exp}`.
pub fn family_rho_bound(
    family: &Family,
    center: &Scalar,
    radius_exp: &Rat,
    order: usize,
    precision: &Val,
    budget: usize,
) -> Result<RhoBound> {
    let Val::Finite(prec) = precision else {
        return Err(Error::PreconditionViolated("a finite precision is required".into()));
    };
    if !family.contains(center) || *radius_exp < family.disk_radius_exp {
        return Err(Error::PreconditionViolated("the subdisk must lie in the parameter disk".into()));
    }
    let samples = check_set(&family.backend, center, radius_exp);
    let report = passivity_report(family, &samples, budget)?;
    if let Some(i) = report.verdicts.iter().position(|v| *v != PassivityVerdict::PassiveInBasin) {
        return Err(Error::PreconditionViolated(format!(
            "mark {i} is {} on the subdisk check set",
            report.verdicts[i].name()
        )));
    }
    if let BasePointVerdict::Varies { .. } = base_point_constancy(family, &samples)? {
        return Err(Error::PreconditionViolated("the base point varies on the subdisk".into()));
    }
    let exits: Vec<usize> = report.records[0].iter().map(|r| r.first_exit().unwrap()).collect();
    if report.records.iter().any(|row| row.iter().map(|r| r.first_exit().unwrap()).ne(exits.iter().copied())) {
        return Err(Error::PreconditionViolated("first-exit times vary on the subdisk".into()));
    }
    if family.is_constant() {
        return Ok(RhoBound { rho_exp: Val::Infinity, per_mark: vec![Some(Val::Infinity); exits.len()] });
    }
    let d = family.degree() as usize;
    let coeffs: Vec<MuSeries> =
        family.coefficient_polys().iter().map(|p| MuSeries::shifted(p, center, order)).collect();
    let tail = (radius_exp - &family.disk_radius_exp) * int(order as i64 + 1);
    let mut per_mark = Vec::new();
    for ((mark_poly, _), &m) in family.marks.iter().zip(&exits) {
        let mut z = MuSeries::shifted(mark_poly, center, order);
        for _ in 0..m {
            z = apply(&coeffs, d, &z);
        }
        let v_alpha = z.0[0].valuation().expect_finite().clone();
        let cap = prec - &v_alpha;
        // Φ = (unit constant) · z · Π (1 + x_n)^(1/d^(n+1)); the unit constant
        // does not change valuations of the non-constant coefficients.
        let mut product = MuSeries::constant(&family.backend, family.backend.one(), order);
        let mut w = z.clone();
        let mut root = int(d as i64);
        for _ in 0..30 {
            let next = apply(&coeffs, d, &w);
            let ratio = next.div(&w.pow(d as u32))?;
            let u0 = MuSeries::constant(&family.backend, ratio.0[0].clone(), order);
            let mut x = ratio.div(&u0)?;
            x.0[0] = family.backend.zero();
            let contribution = x.gauss_tail(radius_exp);
            product = product.mul(&MuSeries::root_one_plus(&x, &root));
            w = next;
            root = root * int(d as i64);
            if contribution >= Val::Finite(cap.clone()) {
                break;
            }
        }
        let phi = z.mul(&product);
        let main = phi.gauss_tail(radius_exp).sub_rat(&v_alpha);
        let main = if main >= Val::Finite(cap.clone()) { Val::Infinity } else { main };
        if let Val::Finite(mv) = &main {
            if tail < *mv {
                return Err(Error::OrderInsufficient(format!(
                    "truncation tail bound {tail} is below the computed term {mv}; raise the order"
                )));
            }
        }
        let rho = match main {
            Val::Infinity if tail < cap => Val::Finite(tail.clone()),
            other => other,
        };
        per_mark.push(Some(rho));
    }
    let rho_exp = per_mark.iter().flatten().min().cloned().unwrap_or(Val::Infinity);
    Ok(RhoBound { rho_exp, per_mark })
}

/// Probe spheres around `λ0` inside the parameter disk for a parameter at which
/// every mark that is not persistently bounded escapes.
///
/// Each sphere `{v(λ - λ0) = e}` is sampled at `λ0 + u ϖ^e` for a few residue
/// representatives `u`; a `NotFound` answer is therefore inconclusive.
pub fn perturb_to_escape(family: &Family, lambda0: &Scalar, budget: usize, trials: usize) -> Result<PerturbOutcome> {
    let be = &family.backend;
    let mut candidates = vec![lambda0.clone()];
    let units: Vec<i64> = match be {
        Backend::PAdic { p } => (1..(*p as i64).min(8)).collect(),
        Backend::SeriesT { .. } => vec![1, -1, 2, -2],
    };
    let step = match be {
        Backend::PAdic { .. } => int(1),
        Backend::SeriesT { ramification, .. } => Rat::new(1.into(), (*ramification as i64).into()),
    };
    let mut e = value_group_ceil(be, &family.disk_radius_exp);
    'outer: loop {
        let sphere = be.monomial(int(1), e.clone());
        for u in &units {
            if candidates.len() > trials {
                break 'outer;
            }
            let lambda = lambda0 + &(&sphere * &be.int(*u));
            if family.contains(&lambda) {
                candidates.push(lambda);
            }
        }
        e = e + &step;
    }
    let mut evaluated = Vec::new();
    for lambda in &candidates {
        let row = match family.specialize(lambda) {
            Ok(f) => {
                let recs = f
                    .marks()
                    .iter()
                    .map(|c| classify_critical(&f, c, budget))
                    .collect::<Result<Vec<_>>>()?;
                Some((f, recs))
            }
            Err(_) => None,
        };
        evaluated.push(row);
    }
    let k = family.marks.len();
    // Marks bounded at λ0 and at every probe are treated as passive.
    let persistently_bounded: Vec<bool> = (0..k)
        .map(|i| evaluated.iter().all(|row| matches!(row, Some((_, r)) if r[i].is_bounded())))
        .collect();
    for (lambda, row) in candidates.iter().zip(&evaluated) {
        let Some((f, recs)) = row else { continue };
        let hit = recs.iter().any(EscapeRecord::is_escaping)
            && recs
                .iter()
                .enumerate()
                .all(|(i, r)| if persistently_bounded[i] { r.is_bounded() } else { r.is_escaping() });
        if hit {
            return Ok(PerturbOutcome::Found {
                lambda: lambda.clone(),
                polynomial: f.clone(),
                records: recs.clone(),
                tried: candidates.len(),
            });
        }
    }
    Ok(PerturbOutcome::NotFound { tried: candidates.len() })
}

pub fn family_to_json_summary(report: &PassivityReport) -> Value {
    json!({
        "verdicts": report.verdicts.iter().map(|v| match v {
            PassivityVerdict::Active { escaping_at, bounded_at } => json!({
                "verdict": "Active",
                "escaping_at": scalar_to_json(escaping_at),
                "bounded_at": scalar_to_json(bounded_at),
            }),
            other => json!({"verdict": other.name()}),
        }).collect::<Vec<_>>(),
        "samples": report.records.iter().map(|row| row.iter().map(|r| r.kind_name()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "defects": report.defects,
        "note": "passive verdicts mean no activity was witnessed at these samples",
    })
}

pub fn rho_bound_to_json(b: &RhoBound) -> Value {
    json!({
        "rho_exp": val_to_json(&b.rho_exp),
        "per_mark": b.per_mark.iter().map(|r| r.as_ref().map(val_to_json)).collect::<Vec<_>>(),
    })
}

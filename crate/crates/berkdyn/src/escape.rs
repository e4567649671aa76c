//! Escape analysis of critical orbits.
//!
//! Escape is detected by exact iteration against the base radius. Boundedness
//! is only ever certified structurally: either the orbit hits an exact cycle,
//! in which case the component of the filled Julia set is computed from the
//! least fixed point of the cycle's exponent map, or the descent of preimages
//! of the base point along the orbit settles into a recognisable pattern.

use std::collections::{HashMap, HashSet};

use crate::berkovich::BerkPoint;
use crate::error::{Error, Result};
use crate::polynomial::{CriticalMark, ExponentMap, MarkedPolynomial};
use crate::valued_field::{int, Backend, Rat, Scalar, Val};

pub const DEFAULT_BUDGET: usize = 64;
pub const DEFAULT_DEPTH: usize = 32;

/// Exact p-adic orbit values whose size passes this many bits are replaced by
/// residues modulo a fixed power of `p`, with the accuracy tracked exactly.
/// Series values have no such reduction (their coefficients are rationals of
/// unbounded height), so a series orbit that passes the cap stops as if its
/// budget had run out.
const HEIGHT_CAP_BITS: u64 = 4096;
const TRUNCATED_ACCURACY: i64 = 128;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundedKind {
    /// The component is the closed disk around the point with this radius exponent.
    DiskComponent { diam_exp: Val },
    PointComponent,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EscapeRecord {
    Escaping { first_exit: usize },
    Bounded(BoundedKind),
    Unknown { budget_spent: usize },
}

impl EscapeRecord {
    pub fn is_escaping(&self) -> bool {
        matches!(self, EscapeRecord::Escaping { .. })
    }

    pub fn first_exit(&self) -> Option<usize> {
        match self {
            EscapeRecord::Escaping { first_exit } => Some(*first_exit),
            _ => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, EscapeRecord::Bounded(_))
    }

    /// Short name used in reports.
    pub fn kind_name(&self) -> &'static str {
        match self {
            EscapeRecord::Escaping { .. } => "Escaping",
            EscapeRecord::Bounded(BoundedKind::DiskComponent { .. }) => "DiskComponent",
            EscapeRecord::Bounded(BoundedKind::PointComponent) => "PointComponent",
            EscapeRecord::Bounded(BoundedKind::Undetermined) => "BoundedUndetermined",
            EscapeRecord::Unknown { .. } => "Unknown",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    Simple,
    TameShiftLocus,
    JuliaInAffine,
    HasBoundedFatou,
    Unknown,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Simple => "Simple",
            Classification::TameShiftLocus => "TameShiftLocus",
            Classification::JuliaInAffine => "JuliaInAffine",
            Classification::HasBoundedFatou => "HasBoundedFatou",
            Classification::Unknown => "Unknown",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EscapeOptions {
    pub budget: usize,
    pub depth: usize,
}

impl Default for EscapeOptions {
    fn default() -> Self {
        EscapeOptions { budget: DEFAULT_BUDGET, depth: DEFAULT_DEPTH }
    }
}

/// An orbit value known modulo `{v >= accuracy}` (exact when `accuracy` is infinite).
#[derive(Clone, Debug)]
pub(crate) struct OrbitPoint {
    pub value: Scalar,
    pub accuracy: Val,
}

#[derive(Clone, Debug)]
pub(crate) enum OrbitEnd {
    Exit(usize),
    /// `z_{start + period} = z_start` exactly.
    Cycle { start: usize, period: usize },
    /// The budget ran out with every point certified inside the base disk.
    Budget,
    /// Accumulated truncation no longer decides the escape test.
    AccuracyLost,
}

#[derive(Clone, Debug)]
pub(crate) struct Orbit {
    pub points: Vec<OrbitPoint>,
    pub end: OrbitEnd,
}

/// Iterate `z` under `f` for at most `budget` steps, stopping at the first
/// iterate outside the closed base disk or at an exact repetition.
pub(crate) fn trace_orbit(f: &MarkedPolynomial, z: &Scalar, budget: usize) -> Orbit {
    let base = Val::Finite(f.base_radius_exp().clone());
    let padic = matches!(f.backend(), Backend::PAdic { .. });
    let mut seen: HashMap<Scalar, usize> = HashMap::new();
    let mut points = vec![OrbitPoint { value: z.clone(), accuracy: Val::Infinity }];
    loop {
        let n = points.len() - 1;
        let cur = &points[n];
        let v = cur.value.valuation();
        if v >= cur.accuracy {
            // Only a lower bound on the valuation is known.
            if cur.accuracy <= base {
                return Orbit { points, end: OrbitEnd::AccuracyLost };
            }
        } else if v < base {
            return Orbit { points, end: OrbitEnd::Exit(n) };
        }
        if !cur.accuracy.is_finite() {
            if let Some(&start) = seen.get(&cur.value) {
                return Orbit { points, end: OrbitEnd::Cycle { start, period: n - start } };
            }
            seen.insert(cur.value.clone(), n);
        }
        if n >= budget || (!padic && cur.value.height_bits() > HEIGHT_CAP_BITS) {
            return Orbit { points, end: OrbitEnd::Budget };
        }
        let mut value = f.eval(&cur.value);
        let mut accuracy = match &cur.accuracy {
            Val::Infinity => Val::Infinity,
            acc => f.segment_map_unchecked(&cur.value).map.eval(acc),
        };
        if padic && !accuracy.is_finite() && value.height_bits() > HEIGHT_CAP_BITS {
            accuracy = Val::from_int(TRUNCATED_ACCURACY);
        }
        if let Val::Finite(acc) = &accuracy {
            value = value.reduce_to_precision(acc);
        }
        points.push(OrbitPoint { value, accuracy });
    }
}

/// Pull the exponent `top` at `z_n` back to `z_0` through the chain of maps.
fn pull_back(maps: &[ExponentMap], top: &Val) -> Val {
    maps.iter().rev().fold(top.clone(), |s, m| m.inverse(&s))
}

/// Classify the orbit of an arbitrary classical point.
pub fn classify_point(f: &MarkedPolynomial, z: &Scalar, opts: EscapeOptions) -> Result<EscapeRecord> {
    f.require_tame()?;
    let orbit = trace_orbit(f, z, opts.budget);
    let spent = orbit.points.len() - 1;
    let base = Val::Finite(f.base_radius_exp().clone());
    let maps = |range: std::ops::Range<usize>| -> Vec<ExponentMap> {
        orbit.points[range]
            .iter()
            .map(|pt| f.segment_map_unchecked(&pt.value).map)
            .collect()
    };
    match orbit.end {
        OrbitEnd::Exit(m) => Ok(EscapeRecord::Escaping { first_exit: m }),
        OrbitEnd::AccuracyLost => Ok(EscapeRecord::Unknown { budget_spent: spent }),
        OrbitEnd::Cycle { start, period } => {
            let cycle_maps = maps(start..start + period);
            let composite = cycle_maps
                .iter()
                .skip(1)
                .fold(cycle_maps[0].clone(), |acc, m| m.compose(&acc));
            match composite.least_fixed_point_from(f.base_radius_exp()) {
                None => Ok(EscapeRecord::Bounded(BoundedKind::PointComponent)),
                Some(q) => {
                    let diam = pull_back(&maps(0..start), &Val::Finite(q));
                    Ok(EscapeRecord::Bounded(BoundedKind::DiskComponent { diam_exp: diam }))
                }
            }
        }
        OrbitEnd::Budget => {
            let depth = opts.depth.min(spent);
            if depth < 4 {
                return Ok(EscapeRecord::Unknown { budget_spent: spent });
            }
            let chain = maps(0..depth);
            Ok(match descent_verdict(&chain, &base) {
                Some(kind) => EscapeRecord::Bounded(kind),
                None => EscapeRecord::Unknown { budget_spent: spent },
            })
        }
    }
}

/// Preimages of the base point along the orbit: `q_n` is the exponent at
/// `z_0` of the point mapped onto the base point by `f^n`. A tail of constant
/// positive steps taken through degree-one maps diverges; a tail that no
/// longer moves is read as convergence to a disk.
fn descent_verdict(chain: &[ExponentMap], base: &Val) -> Option<BoundedKind> {
    let depth = chain.len();
    let mut exps: Vec<Rat> = Vec::with_capacity(depth + 1);
    let mut unramified: Vec<bool> = Vec::with_capacity(depth + 1);
    for n in 0..=depth {
        let mut s = base.clone();
        let mut deg_one = true;
        for j in (0..n).rev() {
            s = chain[j].inverse(&s);
            if j >= 1 && chain[j].degree_at(&s) != 1 {
                deg_one = false;
            }
        }
        exps.push(s.expect_finite().clone());
        unramified.push(deg_one);
    }
    let tail = depth / 2;
    let steps: Vec<Rat> = (tail..depth).map(|n| &exps[n + 1] - &exps[n]).collect();
    let zero = int(0);
    if steps.iter().all(|s| s == &zero) {
        return Some(BoundedKind::DiskComponent { diam_exp: Val::Finite(exps[depth].clone()) });
    }
    let constant = steps.iter().all(|s| s == &steps[0]) && steps[0] > zero;
    if constant && unramified[tail..].iter().all(|&b| b) {
        return Some(BoundedKind::PointComponent);
    }
    None
}

pub fn classify_critical(f: &MarkedPolynomial, c: &CriticalMark, budget: usize) -> Result<EscapeRecord> {
    classify_point(f, &c.point, EscapeOptions { budget, ..EscapeOptions::default() })
}

/// Records for every mark, in mark order.
pub fn classify_marks(f: &MarkedPolynomial, opts: EscapeOptions) -> Result<Vec<EscapeRecord>> {
    f.marks().iter().map(|m| classify_point(f, &m.point, opts)).collect()
}

pub fn classification_from_records(records: &[EscapeRecord]) -> Classification {
    if records.iter().all(|r| r.is_escaping()) {
        Classification::TameShiftLocus
    } else if records.iter().all(|r| r.is_bounded()) {
        Classification::Simple
    } else if records.iter().any(|r| {
        matches!(r, EscapeRecord::Unknown { .. } | EscapeRecord::Bounded(BoundedKind::Undetermined))
    }) {
        Classification::Unknown
    } else if records
        .iter()
        .any(|r| matches!(r, EscapeRecord::Bounded(BoundedKind::DiskComponent { .. })))
    {
        Classification::HasBoundedFatou
    } else {
        Classification::JuliaInAffine
    }
}

pub fn julia_in_affine(f: &MarkedPolynomial, budget: usize) -> Result<Classification> {
    julia_in_affine_with(f, EscapeOptions { budget, ..EscapeOptions::default() })
}

pub fn julia_in_affine_with(f: &MarkedPolynomial, opts: EscapeOptions) -> Result<Classification> {
    f.require_tame()?;
    Ok(classification_from_records(&classify_marks(f, opts)?))
}

/// Exponent of `|φ_f|(z)` for a point of the basin: `e_n / d^n` where `e_n`
/// is the exponent of `|f^n(z)|` at the first iterate outside the base disk.
pub fn boettcher_modulus(f: &MarkedPolynomial, z: &BerkPoint, budget: usize) -> Result<Val> {
    let d = int(f.degree() as i64);
    let base = Val::Finite(f.base_radius_exp().clone());
    if !z.radius_exp().is_finite() {
        let orbit = trace_orbit(f, z.center(), budget);
        return match orbit.end {
            OrbitEnd::Exit(n) => {
                let e = orbit.points[n].value.valuation();
                Ok(Val::Finite(e.expect_finite() / num_traits::pow(d, n)))
            }
            OrbitEnd::Cycle { .. } => Err(Error::NotInBasin),
            _ => Err(Error::BudgetExhausted(budget)),
        };
    }
    let mut seen = HashSet::new();
    let mut x = z.clone();
    for n in 0..=budget {
        let e = x.abs_exp();
        if e < base {
            return Ok(Val::Finite(e.expect_finite() / num_traits::pow(d.clone(), n)));
        }
        if !seen.insert(x.clone()) {
            return Err(Error::NotInBasin);
        }
        x = f.image_point(&x).0;
    }
    Err(Error::BudgetExhausted(budget))
}

//! Points of type I, II and III on the Berkovich affine line.
//!
//! A point is a closed disk `D(a, r)` stored as a center and a radius
//! exponent `q` with `r = base^(-q)`; `q = Infinity` is the classical point `a`.
//! Centers are canonicalised on construction so that two descriptions of the
//! same disk compare equal structurally, which keeps hashing and ordering
//! consistent with the geometric equality `q = q'` and `v(a - b) >= q`.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::valued_field::{Backend, Rat, Scalar, Val};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BerkPoint {
    center: Scalar,
    radius_exp: Val,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointType {
    I,
    II,
    III,
}

/// Result of comparing two points in the partial order `x ≺ y`
/// (the disk of `x` sits inside the disk of `y`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Less,
    Greater,
    Equal,
    Incomparable,
}

/// Where a tangent direction points: up toward infinity, or down into the
/// residue class containing a given scalar.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Witness {
    TowardInfinity,
    TowardPoint(Scalar),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction {
    pub at: BerkPoint,
    pub witness: Witness,
}

/// Target used to select a direction.
#[derive(Clone, Debug)]
pub enum Target {
    Infinity,
    Point(Scalar),
}

impl BerkPoint {
    pub fn new(center: Scalar, radius_exp: Val) -> BerkPoint {
        let center = match &radius_exp {
            Val::Finite(q) => center.class_representative(q, false),
            Val::Infinity => center,
        };
        BerkPoint { center, radius_exp }
    }

    /// The disk point `x_{a, q}` for a finite exponent.
    pub fn disk(center: Scalar, q: Rat) -> BerkPoint {
        BerkPoint::new(center, Val::Finite(q))
    }

    pub fn classical(a: Scalar) -> BerkPoint {
        BerkPoint { center: a, radius_exp: Val::Infinity }
    }

    /// The point of the closed unit disk.
    pub fn gauss(backend: &Backend) -> BerkPoint {
        BerkPoint::new(backend.zero(), Val::zero())
    }

    pub fn center(&self) -> &Scalar {
        &self.center
    }

    pub fn radius_exp(&self) -> &Val {
        &self.radius_exp
    }

    pub fn backend(&self) -> &Backend {
        self.center.backend()
    }

    /// Finite radius exponent; `TypeIPoint` for classical points.
    pub fn finite_radius(&self) -> Result<&Rat> {
        self.radius_exp.finite().ok_or(Error::TypeIPoint)
    }

    pub fn point_type(&self) -> PointType {
        match &self.radius_exp {
            Val::Infinity => PointType::I,
            Val::Finite(q) => {
                if self.backend().in_value_group(q) {
                    PointType::II
                } else {
                    PointType::III
                }
            }
        }
    }

    /// Whether the classical point `a` lies in the closed disk of `self`.
    pub fn contains(&self, a: &Scalar) -> bool {
        (a - &self.center).valuation() >= self.radius_exp
    }

    /// Exponent of `|x| = max(|center|, radius)`, i.e. `min(v(center), q)`.
    pub fn abs_exp(&self) -> Val {
        self.center.valuation().min(self.radius_exp.clone())
    }

    /// Hyperbolic distance to the ray `]x_{0,q}, ∞[` through 0, in the region
    /// where that ray is the axis: `q - min(v(center), q)`.
    pub fn gap_to_zero_ray(&self) -> Result<Rat> {
        let q = self.finite_radius()?;
        let m = self.abs_exp();
        Ok(q - m.expect_finite())
    }

    /// `self ⪯ other`.
    pub fn precedes_or_eq(&self, other: &BerkPoint) -> bool {
        self.radius_exp >= other.radius_exp && other.contains(&self.center)
    }

    pub fn compare(&self, other: &BerkPoint) -> Relation {
        let le = self.precedes_or_eq(other);
        let ge = other.precedes_or_eq(self);
        match (le, ge) {
            (true, true) => Relation::Equal,
            (true, false) => Relation::Less,
            (false, true) => Relation::Greater,
            (false, false) => Relation::Incomparable,
        }
    }

    /// Least upper bound: the smallest disk containing both.
    pub fn join(&self, other: &BerkPoint) -> BerkPoint {
        let split = (&self.center - &other.center).valuation();
        let q = self.radius_exp.clone().min(other.radius_exp.clone()).min(split);
        BerkPoint::new(self.center.clone(), q)
    }

    /// Hyperbolic distance in backend log units, through the join.
    pub fn hyp_dist(&self, other: &BerkPoint) -> Result<Rat> {
        let qx = self.finite_radius()?;
        let qy = other.finite_radius()?;
        let j = self.join(other);
        let qj = j.finite_radius()?;
        Ok((qx - qj) + (qy - qj))
    }

    /// The direction at `self` containing `target`.
    pub fn direction_of(&self, target: &Target) -> Result<Direction> {
        let q = self.finite_radius()?.clone();
        let witness = match target {
            Target::Infinity => Witness::TowardInfinity,
            Target::Point(b) => {
                if self.contains(b) {
                    Witness::TowardPoint(b.class_representative(&q, true))
                } else {
                    Witness::TowardInfinity
                }
            }
        };
        Ok(Direction { at: self.clone(), witness })
    }

    /// The direction at `self` containing the Berkovich point `y` (`y ≠ self`).
    pub fn direction_toward(&self, y: &BerkPoint) -> Result<Direction> {
        if y.precedes_or_eq(self) && y != self {
            self.direction_of(&Target::Point(y.center.clone()))
        } else {
            self.direction_of(&Target::Infinity)
        }
    }

    /// Radius order along a common ray: larger disks first.
    pub fn cmp_height(&self, other: &BerkPoint) -> Ordering {
        other.radius_exp.cmp(&self.radius_exp)
    }
}

impl fmt::Display for BerkPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x[{}; {}]", self.center, self.radius_exp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valued_field::{int, rat};

    fn b3() -> Backend {
        Backend::padic(3).unwrap()
    }

    fn pt(c: Rat, q: i64) -> BerkPoint {
        BerkPoint::disk(b3().rational(c), int(q))
    }

    #[test]
    fn compare_examples() {
        assert_eq!(pt(int(0), 1).compare(&pt(int(0), 0)), Relation::Less);
        assert_eq!(pt(int(5), 2).compare(&pt(int(5), 2)), Relation::Equal);
        assert_eq!(pt(int(0), 1).compare(&pt(int(1), 1)), Relation::Incomparable);
        assert_eq!(pt(int(0), 0).compare(&pt(int(0), 1)), Relation::Greater);
    }

    #[test]
    fn canonical_centers_make_equal_disks_identical() {
        assert_eq!(pt(int(0), 1), pt(int(3), 1));
        assert_eq!(pt(rat(-1, 3), -1), pt(int(0), -1));
        assert_ne!(pt(int(0), 2), pt(int(3), 2));
    }

    #[test]
    fn join_examples() {
        let b = b3();
        let zero = BerkPoint::classical(b.zero());
        let one = BerkPoint::classical(b.one());
        let three = BerkPoint::classical(b.int(3));
        assert_eq!(zero.join(&one), BerkPoint::gauss(&b));
        assert_eq!(zero.join(&three), pt(int(0), 1));
        assert_eq!(one.join(&zero), zero.join(&one));
        assert_eq!(pt(int(2), 4).join(&pt(int(2), 4)), pt(int(2), 4));
    }

    #[test]
    fn hyp_dist_examples() {
        assert_eq!(pt(int(0), 0).hyp_dist(&pt(int(0), -1)).unwrap(), int(1));
        assert_eq!(pt(int(7), 3).hyp_dist(&pt(int(7), 3)).unwrap(), int(0));
        assert_eq!(pt(int(0), 1).hyp_dist(&pt(int(1), 1)).unwrap(), int(2));
        let classical = BerkPoint::classical(b3().zero());
        assert_eq!(classical.hyp_dist(&pt(int(0), 0)), Err(Error::TypeIPoint));
    }

    #[test]
    fn direction_examples() {
        let b = b3();
        let g = BerkPoint::gauss(&b);
        let d3 = g.direction_of(&Target::Point(b.int(3))).unwrap();
        let d0 = g.direction_of(&Target::Point(b.zero())).unwrap();
        assert_eq!(d3, d0);
        assert_eq!(g.direction_of(&Target::Infinity).unwrap().witness, Witness::TowardInfinity);
        let up = g.direction_of(&Target::Point(b.rational(rat(1, 3)))).unwrap();
        assert_eq!(up.witness, Witness::TowardInfinity);
        let d1 = g.direction_of(&Target::Point(b.one())).unwrap();
        assert_ne!(d1, d0);
    }

    #[test]
    fn point_types() {
        let b = b3();
        assert_eq!(BerkPoint::classical(b.one()).point_type(), PointType::I);
        assert_eq!(BerkPoint::gauss(&b).point_type(), PointType::II);
        assert_eq!(BerkPoint::disk(b.zero(), rat(-1, 2)).point_type(), PointType::III);
    }
}

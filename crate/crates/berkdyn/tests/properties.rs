//! Property tests for the invariants each module promises.

mod common;

use berkdyn::berkovich::{BerkPoint, Relation, Target};
use berkdyn::boettcher::phi_eval;
use berkdyn::codec::{polynomial_from_json, polynomial_to_json};
use berkdyn::core_tree::{build_core, CoreTree};
use berkdyn::escape::{classify_point, EscapeOptions, EscapeRecord};
use berkdyn::hensel::lift;
use berkdyn::polynomial::{MarkedPolynomial, Poly};
use berkdyn::valued_field::{int, rat};
use berkdyn::{Backend, Scalar, Val};
use proptest::prelude::*;

use common::{disk_strategy, padic, scalar_strategy, tame_strategy};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn any_backend() -> impl Strategy<Value = Backend> {
    prop::sample::select(common::generator_backends())
}

fn three_points() -> impl Strategy<Value = (BerkPoint, BerkPoint, BerkPoint)> {
    any_backend().prop_flat_map(|be| (disk_strategy(be.clone()), disk_strategy(be.clone()), disk_strategy(be)))
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn ultrametric_inequality(
        (x, y) in any_backend().prop_flat_map(|be| (scalar_strategy(be.clone()), scalar_strategy(be)))
    ) {
        let (vx, vy, vs) = (x.valuation(), y.valuation(), (&x + &y).valuation());
        prop_assert!(vs >= vx.clone().min(vy.clone()));
        if vx != vy {
            prop_assert_eq!(vs, vx.min(vy));
        }
    }

    #[test]
    fn padic_roots_reach_precision(k in 1i64..50, e in 1i64..4, n in prop::sample::select(vec![2u64, 4, 5, 7])) {
        let be = padic(3);
        let u = &be.one() + &be.monomial(rat(k, 1), int(e));
        let prec = Val::from_int(30);
        let w = u.nth_root_unit(n, &prec).unwrap();
        prop_assert!((&w.pow(n) - &u).valuation() >= prec);
        prop_assert!((&w - &be.one()).valuation() > Val::zero());
    }

    #[test]
    fn order_matches_join((x, y, _) in three_points()) {
        let j = x.join(&y);
        let rel = x.compare(&y);
        prop_assert_eq!(rel == Relation::Less, j == y && x != y);
        prop_assert!(x.precedes_or_eq(&j) && y.precedes_or_eq(&j));
    }

    #[test]
    fn join_is_a_semilattice((x, y, z) in three_points()) {
        prop_assert_eq!(x.join(&y), y.join(&x));
        prop_assert_eq!(x.join(&x), x.clone());
        prop_assert_eq!(x.join(&y).join(&z), x.join(&y.join(&z)));
    }

    #[test]
    fn hyperbolic_triangle_inequality((x, y, z) in three_points()) {
        let dxy = x.hyp_dist(&y).unwrap();
        let dyz = y.hyp_dist(&z).unwrap();
        let dxz = x.hyp_dist(&z).unwrap();
        prop_assert!(dxz <= &dxy + &dyz);
        // The join lies on the geodesic between the two points.
        let j = x.join(&z);
        prop_assert_eq!(&x.hyp_dist(&j).unwrap() + &j.hyp_dist(&z).unwrap(), dxz);
    }

    #[test]
    fn directions_agree_on_residue_classes(
        (x, a, b) in any_backend().prop_flat_map(|be| (disk_strategy(be.clone()), scalar_strategy(be.clone()), scalar_strategy(be)))
    ) {
        // Move both targets into the disk so that both directions point down.
        let a = x.center() + &a.reduce_to_precision(&int(64));
        let a = if x.contains(&a) { a } else { x.center().clone() };
        let b = if x.contains(&b) { b } else { a.clone() };
        let same = x.direction_of(&Target::Point(a.clone())).unwrap() == x.direction_of(&Target::Point(b.clone())).unwrap();
        prop_assert_eq!(same, (&a - &b).valuation() > *x.radius_exp());
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn image_degree_matches_critical_count(
        (f, x) in tame_strategy().prop_flat_map(|f| { let be = f.backend().clone(); (Just(f), disk_strategy(be)) })
    ) {
        prop_assert_eq!(f.image_point(&x).1, f.local_degree_rh(&x).unwrap());
    }

    #[test]
    fn segments_expand_by_their_slope(f in tame_strategy(), pick in 0usize..8, t in 1i64..4) {
        let c = f.marks()[pick % f.marks().len()].point.clone();
        let seg = f.segment_dynamics(&c).unwrap();
        for piece in seg.map.pieces() {
            let (q1, q2) = match (&piece.lo, &piece.hi) {
                (Some(lo), Some(hi)) => (lo.clone(), lo + (hi - lo) * rat(1, t + 1)),
                (Some(lo), None) => (lo.clone(), lo + int(t)),
                (None, Some(hi)) => (hi - int(t), hi.clone()),
                (None, None) => (int(0), int(t)),
            };
            let x1 = BerkPoint::new(c.clone(), Val::from_rat(q1.clone()));
            let x2 = BerkPoint::new(c.clone(), Val::from_rat(q2.clone()));
            let image_dist = f.image_point(&x1).0.hyp_dist(&f.image_point(&x2).0).unwrap();
            prop_assert_eq!(image_dist, x1.hyp_dist(&x2).unwrap() * int(piece.slope as i64));
        }
    }

    #[test]
    fn growth_above_the_base_point(f in tame_strategy(), lift_by in 1i64..5) {
        let q = f.base_radius_exp() - int(lift_by);
        let x = BerkPoint::new(f.backend().zero(), Val::from_rat(q.clone()));
        let (image, degree) = f.image_point(&x);
        prop_assert_eq!(degree, f.degree());
        prop_assert_eq!(image.radius_exp(), &Val::from_rat(q * int(f.degree() as i64)));
    }

    #[test]
    fn critical_data_round_trips(f in tame_strategy()) {
        let again = MarkedPolynomial::from_coeffs(f.poly().coeffs().to_vec(), f.marks().to_vec()).unwrap();
        prop_assert_eq!(&again, &f);
        let json = polynomial_to_json(&f);
        prop_assert_eq!(polynomial_from_json(&json).unwrap(), f);
    }

    #[test]
    fn escape_records_are_honest(f in tame_strategy()) {
        let base = Val::from_rat(f.base_radius_exp().clone());
        for m in f.marks() {
            let short = classify_point(&f, &m.point, EscapeOptions { budget: 8, ..EscapeOptions::default() }).unwrap();
            if let EscapeRecord::Escaping { first_exit } = short {
                for j in 0..first_exit {
                    prop_assert!(f.iterate(&m.point, j).valuation() >= base);
                }
                prop_assert!(f.iterate(&m.point, first_exit).valuation() < base);
                // More budget never changes an escape verdict.
                let long = classify_point(&f, &m.point, EscapeOptions { budget: 24, ..EscapeOptions::default() }).unwrap();
                prop_assert_eq!(long, short);
            }
        }
    }
}

fn outside_point(f: &MarkedPolynomial, unit: i64, extra: i64) -> Scalar {
    let top: i64 = berkdyn::valued_field::floor_int(f.base_radius_exp()).try_into().unwrap();
    f.backend().monomial(rat(unit, 1), int(top - 1 - extra))
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn boettcher_preserves_modulus(f in tame_strategy(), unit in prop::sample::select(vec![1i64, 2, -1]), extra in 0i64..2) {
        let z = outside_point(&f, unit, extra);
        let phi = phi_eval(&f, &z, &Val::from_int(12)).unwrap();
        prop_assert_eq!(phi.valuation(), z.valuation());
        let ratio = phi.checked_div(&z).unwrap();
        prop_assert!((&ratio - &f.backend().one()).valuation() > Val::zero());
    }

    #[test]
    fn lifts_contract_and_stay_close(a2 in -4i64..5, a3 in -4i64..5, k in 3i64..6, e0 in 1i64..9, x in -3i64..4) {
        let be = padic(3);
        let f = Poly::from_rats(&be, &[int(0), int(1), int(a2), int(a3)]);
        let eps = Poly::constant(be.monomial(rat(e0, 1), int(k)));
        let g = f.add(&eps);
        let x = be.int(3 * x);
        let r = lift(&f, &g, &x, &Val::from_int(30), None).unwrap();
        prop_assert!(r.contraction_holds());
        prop_assert!((&f.eval(&r.value) - &g.eval(&x)).valuation() >= r.certified_valuation);
        prop_assert!((&r.value - &x).valuation() > Val::zero());
        prop_assert_eq!(lift(&f, &g, &x, &Val::from_int(30), None).unwrap(), r);
    }
}

fn trees_for(c: i64, den: i64) -> Vec<CoreTree> {
    let f = common::quadratic(padic(3).rational(rat(c, den)));
    [Val::Infinity, Val::from_int(1)].iter().map(|rho| build_core(&f, rho, 3, 64).unwrap()).collect()
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn core_json_round_trips(c in prop::sample::select(vec![-1i64, 1, 2, -4, 5]), den in prop::sample::select(vec![3i64, 9, 27])) {
        for t in trees_for(c, den) {
            prop_assert_eq!(CoreTree::from_json(&t.to_json()).unwrap(), t.clone());
            prop_assert!(t.consistency_violations().is_empty());
            // Finite tree: every node has finitely many neighbours and the base point is present.
            prop_assert!(t.node_of(&t.f.base_point()).is_some());
            prop_assert!(t.edges.len() < t.nodes.len());
        }
    }
}

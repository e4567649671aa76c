//! Shared generators and corpus for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use berkdyn::berkovich::BerkPoint;
use berkdyn::polynomial::{CriticalMark, MarkedPolynomial};
use berkdyn::valued_field::{int, rat};
use berkdyn::{Backend, Scalar, Val};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub fn padic(p: u64) -> Backend {
    Backend::padic(p).unwrap()
}

pub fn series() -> Backend {
    Backend::series(int(64), 1).unwrap()
}

pub fn generator_backends() -> Vec<Backend> {
    vec![padic(3), padic(5), series()]
}

pub fn inputs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../inputs")
}

/// `z^2 + c` over `PAdic(3)` with its mark at 0.
pub fn quadratic(c: Scalar) -> MarkedPolynomial {
    let be = c.backend().clone();
    MarkedPolynomial::from_critical_data(vec![CriticalMark::new(be.zero(), 2)], c).unwrap()
}

/// Small scalars of mixed valuation, including zero.
pub fn scalar_strategy(be: Backend) -> BoxedStrategy<Scalar> {
    match be {
        Backend::PAdic { .. } => (-12i64..=12, 1i64..=4, -2i64..=3)
            .prop_map(move |(num, den, e)| &be.monomial(int(1), int(e)) * &be.rational(rat(num, den)))
            .boxed(),
        Backend::SeriesT { .. } => prop::collection::vec((-3i64..=4, -3i64..=3), 1..=2)
            .prop_map(move |terms| {
                let pairs: Vec<_> = terms.into_iter().map(|(e, c)| (int(e), int(c))).collect();
                be.series_from_terms(&pairs).unwrap()
            })
            .boxed(),
    }
}

/// Split `n` into positive parts according to cut flags.
fn parts_from_cuts(n: u32, cuts: &[bool]) -> Vec<u32> {
    let mut parts = vec![1u32];
    for &cut in cuts.iter().take(n as usize - 1) {
        if cut {
            parts.push(1);
        } else {
            *parts.last_mut().unwrap() += 1;
        }
    }
    parts
}

/// Marks with the given excess multiplicities: all but the last point are
/// free, the last one is forced by the centering condition.
pub fn centered_marks(be: &Backend, excess: &[u32], free: &[Scalar]) -> Option<Vec<CriticalMark>> {
    let k = excess.len();
    let mut points: Vec<Scalar> = free.iter().take(k - 1).cloned().collect();
    let mut weighted = be.zero();
    for (c, e) in points.iter().zip(excess) {
        weighted = &weighted + &(c * &be.int(*e as i64));
    }
    let last = (-weighted).checked_div(&be.int(excess[k - 1] as i64)).ok()?;
    points.push(last);
    for i in 0..k {
        if points[..i].contains(&points[i]) {
            return None;
        }
    }
    Some(points.into_iter().zip(excess).map(|(c, e)| CriticalMark::new(c, e + 1)).collect())
}

/// Marked polynomials of degree 2 to 6 over the generator backends. Tameness
/// is not enforced here.
pub fn marked_strategy() -> BoxedStrategy<MarkedPolynomial> {
    (0usize..3, 2u32..=6)
        .prop_flat_map(|(bi, d)| {
            let be = generator_backends()[bi].clone();
            (
                Just(be.clone()),
                Just(d),
                prop::collection::vec(any::<bool>(), 5),
                prop::collection::vec(scalar_strategy(be.clone()), 5),
                scalar_strategy(be),
            )
        })
        .prop_filter_map("marks collide", |(be, d, cuts, free, b)| {
            let excess = parts_from_cuts(d - 1, &cuts);
            let marks = centered_marks(&be, &excess, &free)?;
            MarkedPolynomial::from_critical_data(marks, b).ok()
        })
        .boxed()
}

pub fn tame_strategy() -> BoxedStrategy<MarkedPolynomial> {
    marked_strategy().prop_filter("wild", |f| f.is_tame()).boxed()
}

/// Type II/III points: a center and a finite radius exponent with small denominator.
pub fn disk_strategy(be: Backend) -> BoxedStrategy<BerkPoint> {
    (scalar_strategy(be), -8i64..=8, 1i64..=3)
        .prop_map(|(c, n, d)| BerkPoint::new(c, Val::from_rat(rat(n, d))))
        .boxed()
}

/// Deterministic draws from a strategy.
pub fn sample<S: Strategy>(strategy: &S, n: usize, seed: u8) -> Vec<S::Value> {
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    (0..n).map(|_| strategy.new_tree(&mut runner).unwrap().current()).collect()
}

/// Hand-picked polynomials whose critical orbits all resolve: the pieces of
/// the test corpus on which cores and Böttcher checks are run.
pub fn escaping_corpus() -> Vec<MarkedPolynomial> {
    let q3 = padic(3);
    let q5 = padic(5);
    let s = Backend::series(int(48), 1).unwrap();
    let mut out = vec![
        quadratic(q3.rational(rat(-1, 3))),
        quadratic(q3.rational(rat(728, 3))),
        quadratic(q3.rational(rat(-1, 9))),
        quadratic(q3.rational(rat(2, 27))),
        quadratic(q5.rational(rat(1, 5))),
        quadratic(q5.rational(rat(-3, 25))),
        quadratic(s.monomial(int(1), int(-1))),
        quadratic(s.monomial(int(-2), int(-3))),
    ];
    // Cubics with two simple critical points ±a and constant term b.
    let cubic = |a: Scalar, b: Scalar| {
        let marks = vec![CriticalMark::new(a.clone(), 2), CriticalMark::new(-a, 2)];
        MarkedPolynomial::from_critical_data(marks, b).unwrap()
    };
    out.push(cubic(q5.rational(rat(1, 5)), q5.rational(rat(1, 25))));
    out.push(cubic(q5.int(1), q5.rational(rat(1, 5))));
    out.push(cubic(s.monomial(int(1), int(-1)), s.monomial(int(1), int(-3))));
    // A quartic over PAdic(5) with a double critical point and a simple one.
    let marks = vec![CriticalMark::new(q5.int(1), 3), CriticalMark::new(q5.int(-2), 2)];
    out.push(MarkedPolynomial::from_critical_data(marks, q5.rational(rat(1, 5))).unwrap());
    out
}

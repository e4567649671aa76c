//! Candidate conjugacies between the trimmed cores of two polynomials, and an
//! axiomatic verifier for them.
//!
//! The map is read off the orbit witnesses: a source node described as
//! `x_{f^n(c_i), q}` goes to `x_{g^n(c_i(g)), q}`. Two witnesses naming the same
//! source node must name the same target node; a pair that does not is
//! reported as a [`FailureWitness`] rather than an error.

use std::collections::{BTreeSet, HashMap};

use crate::berkovich::BerkPoint;
use crate::boettcher::{phi_eval, rho_closeness_with, RhoBound};
use crate::core_tree::{build_core_with, witness_point, CoreOptions, CoreTree, CoreWitness, NodeImage, NodeKind};
use crate::error::{Error, Result};
use crate::escape::EscapeOptions;
use crate::polynomial::MarkedPolynomial;
use crate::valued_field::{Scalar, Val};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail(String),
    Skipped(String),
}

impl CheckStatus {
    pub fn is_pass(&self) -> bool {
        matches!(self, CheckStatus::Pass)
    }

    pub fn label(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "Pass",
            CheckStatus::Fail(_) => "Fail",
            CheckStatus::Skipped(_) => "Skipped",
        }
    }

    pub fn detail(&self) -> Option<&str> {
        match self {
            CheckStatus::Pass => None,
            CheckStatus::Fail(s) | CheckStatus::Skipped(s) => Some(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub isometry: CheckStatus,
    pub equivariance: CheckStatus,
    pub local_translation: CheckStatus,
    pub boettcher_at_infinity: CheckStatus,
    pub verified_depth: usize,
}

impl VerificationReport {
    pub fn overall_pass(&self) -> bool {
        self.isometry.is_pass()
            && self.equivariance.is_pass()
            && self.local_translation.is_pass()
            && self.boettcher_at_infinity.is_pass()
    }
}

/// Two source witnesses for one node whose target counterparts disagree, or a
/// source node with no counterpart at all (`second` is then `None`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FailureWitness {
    pub first: CoreWitness,
    pub second: Option<CoreWitness>,
    pub level: Option<usize>,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct ConjugacyMap {
    pub source: CoreTree,
    pub target: CoreTree,
    /// Source node index to target node index.
    pub vertex_map: Vec<usize>,
    /// `b_x = center(h(x)) - center(x)` with centers taken from the first witness.
    pub translations: Vec<Option<Scalar>>,
    pub rho_bound: RhoBound,
}

#[derive(Clone, Debug)]
pub enum ConjugacyOutcome {
    Built(Box<ConjugacyMap>),
    WellDefinednessFailure(FailureWitness),
}

#[derive(Clone, Debug)]
pub struct ConjugacyOptions {
    pub rho: Val,
    pub depth: usize,
    pub budget: usize,
    pub precision: Val,
}

/// Orbit center a witness refers to, for either polynomial.
fn witness_center(f: &MarkedPolynomial, w: &CoreWitness) -> Scalar {
    match w {
        CoreWitness::Axis { .. } => f.backend().zero(),
        CoreWitness::Orbit { mark, iterate, .. } => f.iterate(&f.marks()[*mark].point, *iterate),
    }
}

pub fn build_conjugacy(f: &MarkedPolynomial, g: &MarkedPolynomial, opts: &ConjugacyOptions) -> Result<ConjugacyOutcome> {
    f.require_tame()?;
    g.require_tame()?;
    if opts.rho <= Val::zero() {
        return Err(Error::PreconditionViolated("ρ must be positive".into()));
    }
    let escape_opts = EscapeOptions { budget: opts.budget, ..EscapeOptions::default() };
    let rho_bound = rho_closeness_with(f, g, &opts.precision, escape_opts)?;
    if rho_bound.rho_exp <= Val::zero() || rho_bound.rho_exp < opts.rho {
        return Err(Error::NotComparable(format!(
            "Böttcher coordinates are only {}-close, below the requested {}",
            rho_bound.rho_exp, opts.rho
        )));
    }
    let core_opts = CoreOptions {
        rho: opts.rho.clone(),
        depth: opts.depth,
        budget: opts.budget,
        ..CoreOptions::default()
    };
    let source = build_core_with(f, &core_opts)?;
    let target = build_core_with(g, &core_opts)?;

    let target_index: HashMap<(NodeKind, BerkPoint), usize> = target
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(k, n)| n.point.clone().map(|p| ((n.kind, p), k)))
        .collect();
    let mut vertex_map = Vec::with_capacity(source.nodes.len());
    let mut translations = Vec::with_capacity(source.nodes.len());
    for node in &source.nodes {
        if node.kind == NodeKind::Infinity {
            vertex_map.push(target.infinity());
            translations.push(None);
            continue;
        }
        let mut image: Option<(&CoreWitness, BerkPoint)> = None;
        for w in &node.witnesses {
            let p = witness_point(g, w).ok_or_else(|| Error::NotComparable("mark index out of range".into()))?;
            match &image {
                None => image = Some((w, p)),
                Some((w0, p0)) if *p0 != p => {
                    return Ok(ConjugacyOutcome::WellDefinednessFailure(FailureWitness {
                        first: (*w0).clone(),
                        second: Some(w.clone()),
                        level: node.level,
                        detail: format!("source witnesses agree but their targets are {p0} and {p}"),
                    }));
                }
                Some(_) => {}
            }
        }
        let (w0, p) = image.expect("every node carries a witness");
        let Some(&k) = target_index.get(&(node.kind, p.clone())) else {
            return Ok(ConjugacyOutcome::WellDefinednessFailure(FailureWitness {
                first: w0.clone(),
                second: None,
                level: node.level,
                detail: format!("{} {p} is not a node of the target core", node.kind.name()),
            }));
        };
        vertex_map.push(k);
        translations.push(Some(&witness_center(g, w0) - &witness_center(f, w0)));
    }
    let distinct: BTreeSet<usize> = vertex_map.iter().copied().collect();
    if distinct.len() != vertex_map.len() || vertex_map.len() != target.nodes.len() {
        let first = source.nodes.iter().flat_map(|n| n.witnesses.iter()).next().cloned();
        return Ok(ConjugacyOutcome::WellDefinednessFailure(FailureWitness {
            first: first.unwrap_or(CoreWitness::Axis { radius_exp: Val::Infinity }),
            second: None,
            level: None,
            detail: format!(
                "node correspondence is not a bijection ({} source nodes, {} target nodes, {} images)",
                source.nodes.len(),
                target.nodes.len(),
                distinct.len()
            ),
        }));
    }
    Ok(ConjugacyOutcome::Built(Box::new(ConjugacyMap { source, target, vertex_map, translations, rho_bound })))
}

fn describe(tree: &CoreTree, k: usize) -> String {
    match &tree.nodes[k].point {
        Some(p) => format!("{} {p}", tree.nodes[k].kind.name()),
        None => "infinity".into(),
    }
}

impl ConjugacyMap {
    fn check_isometry(&self) -> CheckStatus {
        let target_edges: HashMap<(usize, usize), _> =
            self.target.edges.iter().map(|e| ((e.lower, e.upper), e)).collect();
        for e in &self.source.edges {
            let key = (self.vertex_map[e.lower], self.vertex_map[e.upper]);
            let Some(te) = target_edges.get(&key) else {
                return CheckStatus::Fail(format!(
                    "edge ]{}, {}[ has no image edge",
                    describe(&self.source, e.lower),
                    describe(&self.source, e.upper)
                ));
            };
            if te.length != e.length || te.degree != e.degree {
                return CheckStatus::Fail(format!(
                    "edge ]{}, {}[ has length {} and degree {}, its image has length {} and degree {}",
                    describe(&self.source, e.lower),
                    describe(&self.source, e.upper),
                    e.length,
                    e.degree,
                    te.length,
                    te.degree
                ));
            }
        }
        if self.source.edges.len() != self.target.edges.len() {
            return CheckStatus::Fail("edge counts differ".into());
        }
        CheckStatus::Pass
    }

    fn check_equivariance(&self) -> CheckStatus {
        for (k, img) in self.source.images.iter().enumerate() {
            let mapped = self.vertex_map[k];
            if self.source.nodes[k].level != self.target.nodes[mapped].level {
                return CheckStatus::Fail(format!("{} changes level", describe(&self.source, k)));
            }
            let expected = &self.target.images[mapped];
            let ok = match (img, expected) {
                (NodeImage::Node(a), NodeImage::Node(b)) => self.vertex_map[*a] == *b,
                (NodeImage::Infinity, NodeImage::Infinity) => true,
                (NodeImage::OutsideWindow(a), NodeImage::OutsideWindow(b)) => a.radius_exp() == b.radius_exp(),
                _ => false,
            };
            if !ok {
                return CheckStatus::Fail(format!(
                    "h(f({})) differs from g(h({}))",
                    describe(&self.source, k),
                    describe(&self.source, k)
                ));
            }
        }
        CheckStatus::Pass
    }

    /// At each vertex, the translation by `b_x` must carry every direction
    /// toward a lower neighbour onto the direction toward that neighbour's image.
    fn check_local_translation(&self) -> CheckStatus {
        let f = &self.source.f;
        let g = &self.target.f;
        for e in &self.source.edges {
            let upper = e.upper;
            let Some(x) = &self.source.nodes[upper].point else { continue };
            let Some(b) = &self.translations[upper] else { continue };
            let q = x.radius_exp();
            for w in &self.source.nodes[e.lower].witnesses {
                let beta_f = witness_center(f, w);
                let beta_g = witness_center(g, w);
                let moved = &beta_f + b;
                if (&beta_g - &moved).valuation() <= *q {
                    return CheckStatus::Fail(format!(
                        "at {}: translation sends the direction of {} away from {}",
                        describe(&self.source, upper),
                        beta_f,
                        beta_g
                    ));
                }
            }
        }
        CheckStatus::Pass
    }

    /// Compare the Böttcher coordinates of corresponding escaped orbit points
    /// hanging off the two highest axis vertices.
    fn check_boettcher(&self, precision: &Val) -> CheckStatus {
        let f = &self.source.f;
        let g = &self.target.f;
        let r0 = Val::Finite(f.base_radius_exp().clone());
        let mut heights: Vec<Val> = self
            .source
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Vertex)
            .filter(|n| n.witnesses.iter().any(|w| matches!(w, CoreWitness::Axis { .. })))
            .filter_map(|n| n.point.as_ref().map(|p| p.radius_exp().clone()))
            .filter(|q| *q < r0)
            .collect();
        heights.sort();
        heights.dedup();
        heights.truncate(2);
        if heights.is_empty() {
            return CheckStatus::Skipped("no axis vertex above the base point".into());
        }
        let labels: BTreeSet<(usize, usize)> = self
            .source
            .nodes
            .iter()
            .flat_map(|n| n.witnesses.iter())
            .filter_map(|w| match w {
                CoreWitness::Orbit { mark, iterate, .. } => Some((*mark, *iterate)),
                CoreWitness::Axis { .. } => None,
            })
            .collect();
        let mut compared = 0usize;
        for h in &heights {
            for &(mark, iterate) in &labels {
                let alpha_f = f.iterate(&f.marks()[mark].point, iterate);
                if alpha_f.valuation() != *h {
                    continue;
                }
                let alpha_g = g.iterate(&g.marks()[mark].point, iterate);
                let (phi_f, phi_g) = match (phi_eval(f, &alpha_f, precision), phi_eval(g, &alpha_g, precision)) {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(e), _) | (_, Err(e)) => {
                        return CheckStatus::Skipped(format!("Böttcher evaluation unavailable: {e}"));
                    }
                };
                let diff = (&phi_f - &phi_g).valuation();
                let diff = if diff >= *precision { Val::Infinity } else { diff };
                let closeness = match (&diff, h) {
                    (Val::Finite(a), Val::Finite(b)) => Val::Finite(a - b),
                    _ => Val::Infinity,
                };
                let needed = &self.source.options.rho;
                let ok = if needed.is_finite() { closeness >= *needed } else { closeness == Val::Infinity };
                if !ok {
                    return CheckStatus::Fail(format!(
                        "Böttcher images of orbit point (mark {mark}, iterate {iterate}) are only {closeness}-close"
                    ));
                }
                compared += 1;
            }
        }
        if compared == 0 {
            return CheckStatus::Skipped("no escaped orbit point at the checked axis heights".into());
        }
        CheckStatus::Pass
    }

    /// Exchange the images of two sibling nodes (same parent). Used as a
    /// negative control for the verifier.
    pub fn corrupted(&self) -> Option<ConjugacyMap> {
        let mut children: HashMap<usize, Vec<usize>> = HashMap::new();
        for e in &self.source.edges {
            children.entry(e.upper).or_default().push(e.lower);
        }
        let mut parents: Vec<_> = children.into_iter().filter(|(_, c)| c.len() >= 2).collect();
        parents.sort();
        let (_, kids) = parents.into_iter().next()?;
        let (a, b) = (kids[0], kids[1]);
        let mut out = self.clone();
        out.vertex_map.swap(a, b);
        out.translations.swap(a, b);
        Some(out)
    }
}

pub fn verify_extendable(h: &ConjugacyMap, precision: &Val) -> VerificationReport {
    VerificationReport {
        isometry: h.check_isometry(),
        equivariance: h.check_equivariance(),
        local_translation: h.check_local_translation(),
        boettcher_at_infinity: h.check_boettcher(precision),
        verified_depth: h.source.options.depth,
    }
}

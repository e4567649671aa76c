//! Finite truncations of the ρ-trimmed dynamical core.
//!
//! The construction works in a window `{x : |x| <= |f^H(x_f)|}` whose top is
//! the axis point `x_{0, d^H r0}`, joined to infinity by a single edge.
//!
//! Above the base point the core consists of the axis `]x_f, ∞[` and the rays
//! toward escaped orbit points `α = f^n(c_i)`. Such a ray leaves the axis at
//! `x_{0, v(α)}`, and a point `x_{α, v(α) + g}` on it is a vertex exactly when
//! some forward image `f^k(α)` is separated from another escaped orbit point of
//! the same absolute value at gap `g` (distances to the axis are invariant up
//! there, and tangent maps are monomials, so two directions merge within a
//! bounded number of steps or never).
//!
//! Below the base point every core ray belongs to an orbit point still inside
//! the base disk. `f` maps `]α, x_f]` homeomorphically along the exponent map of
//! `α` onto part of the ray of `f(α)`, and vertices pull back to vertices, so
//! the vertex lists are built from the exit iterate downwards. Levels count the
//! vertices on `]x, x_f]`, and anything past the requested depth is replaced by
//! a `DepthTruncated` marker.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::berkovich::{BerkPoint, Relation};
use crate::codec::{polynomial_from_json, polynomial_to_json, scalar_from_json, scalar_to_json, val_from_json, val_to_json};
use crate::error::{Error, Result};
use crate::escape::{classify_marks, EscapeOptions, EscapeRecord, DEFAULT_BUDGET, DEFAULT_DEPTH};
use crate::polynomial::MarkedPolynomial;
use crate::valued_field::{int, Backend, Rat, Scalar, Val};

pub const DEFAULT_CORE_DEPTH: usize = 3;
pub const DEFAULT_HORIZON: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreOptions {
    pub rho: Val,
    pub depth: usize,
    pub budget: usize,
    /// Number of forward images of the base point kept below the window top.
    pub horizon: usize,
}

impl Default for CoreOptions {
    fn default() -> Self {
        CoreOptions {
            rho: Val::Infinity,
            depth: DEFAULT_CORE_DEPTH,
            budget: DEFAULT_BUDGET,
            horizon: DEFAULT_HORIZON,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Vertex,
    /// Lower end of a trimmed ray: the first point at distance ρ from the axis
    /// after escaping (not itself in the tree).
    TrimBoundary,
    /// A ray running all the way down to its classical orbit point.
    ClassicalEnd,
    /// A vertex one level past the requested depth; nothing below it is built.
    DepthTruncated,
    /// The base point of a simple polynomial, whose core is `]x_f, ∞[`.
    Base,
    Infinity,
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Vertex => "Vertex",
            NodeKind::TrimBoundary => "TrimBoundary",
            NodeKind::ClassicalEnd => "ClassicalEnd",
            NodeKind::DepthTruncated => "DepthTruncated",
            NodeKind::Base => "Base",
            NodeKind::Infinity => "Infinity",
        }
    }

    fn parse(s: &str) -> Result<NodeKind> {
        Ok(match s {
            "Vertex" => NodeKind::Vertex,
            "TrimBoundary" => NodeKind::TrimBoundary,
            "ClassicalEnd" => NodeKind::ClassicalEnd,
            "DepthTruncated" => NodeKind::DepthTruncated,
            "Base" => NodeKind::Base,
            "Infinity" => NodeKind::Infinity,
            other => return Err(Error::InvalidInput(format!("unknown node kind {other:?}"))),
        })
    }
}

/// How a node is described in terms of orbit data: the point
/// `x_{f^iterate(c_mark), radius_exp}`, or the axis point `x_{0, radius_exp}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoreWitness {
    Orbit { mark: usize, iterate: usize, radius_exp: Val },
    Axis { radius_exp: Val },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreNode {
    pub kind: NodeKind,
    /// `None` only for the infinity marker.
    pub point: Option<BerkPoint>,
    /// Filtration level for vertices and depth markers.
    pub level: Option<usize>,
    pub witnesses: BTreeSet<CoreWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeImage {
    Node(usize),
    /// Above the window top; the tree is not built there.
    OutsideWindow(BerkPoint),
    /// Inside the window but not a node: a construction inconsistency.
    Missing(BerkPoint),
    Infinity,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreEdge {
    pub lower: usize,
    pub upper: usize,
    pub degree: u32,
    pub length: Val,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoreTree {
    pub f: MarkedPolynomial,
    pub options: CoreOptions,
    pub top_exp: Rat,
    pub nodes: Vec<CoreNode>,
    pub edges: Vec<CoreEdge>,
    pub images: Vec<NodeImage>,
    pub warnings: Vec<String>,
}

/// Number of steps after which two escaped directions at the same height
/// either have merged or never will: ratios of residues are roots of unity in
/// the residue field, whose orders divide `p - 1` (only `±1` over `Q`).
fn merge_horizon(backend: &Backend) -> u32 {
    match backend {
        Backend::PAdic { p } => (63 - p.leading_zeros()) + 2,
        Backend::SeriesT { .. } => 2,
    }
}

struct RayInfo {
    mark: usize,
    iterate: usize,
    center: Scalar,
    /// Exclusive lower limit of the trimmed ray (`Infinity` reaches the center).
    q_star: Val,
    /// All vertex exponents on the ray inside the window, ascending.
    exps: Vec<Rat>,
    /// Vertex exponents at or below the base point, ascending; the entry at
    /// index `depth` (if any) is the depth marker.
    below: Vec<Rat>,
    outer: bool,
}

pub fn build_core(f: &MarkedPolynomial, rho: &Val, depth: usize, budget: usize) -> Result<CoreTree> {
    build_core_with(
        f,
        &CoreOptions { rho: rho.clone(), depth, budget, horizon: DEFAULT_HORIZON },
    )
}

pub fn build_core_with(f: &MarkedPolynomial, opts: &CoreOptions) -> Result<CoreTree> {
    f.require_tame()?;
    if opts.rho <= Val::zero() {
        return Err(Error::PreconditionViolated("ρ must be positive".into()));
    }
    let records = classify_marks(f, EscapeOptions { budget: opts.budget, depth: DEFAULT_DEPTH })?;
    let mut warnings = Vec::new();
    let mut exits: Vec<(usize, usize)> = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        match rec {
            EscapeRecord::Escaping { first_exit } => exits.push((i, *first_exit)),
            EscapeRecord::Unknown { budget_spent } => warnings.push(format!(
                "mark {i} excluded: escape undetermined after {budget_spent} iterations"
            )),
            EscapeRecord::Bounded(_) => {}
        }
    }
    if exits.is_empty() {
        return Ok(simple_tree(f, opts, warnings));
    }
    let r0 = f.base_radius_exp().clone();
    let d = f.degree() as i64;
    let dr = int(d);
    let max_exit = exits.iter().map(|e| e.1).max().unwrap();
    let horizon = opts.horizon.max(max_exit).max(1);
    let pow_d = |k: usize| num_traits::pow(dr.clone(), k);
    // Exit heights are at least d·r0, so the window contains every exit point.
    let top_exp = &r0 * pow_d(horizon);

    // Exact orbits of escaping marks up to the height needed for gaps.
    let min_exit_height = exits
        .iter()
        .map(|&(i, m)| f.iterate(&f.marks()[i].point, m).valuation().expect_finite().clone())
        .min()
        .unwrap();
    let gap_stop = &min_exit_height * pow_d(merge_horizon(f.backend()) as usize);
    let lowest = if gap_stop < top_exp { gap_stop.clone() } else { top_exp.clone() };
    let mut orbits: BTreeMap<usize, (usize, Vec<Scalar>)> = BTreeMap::new();
    for &(i, m) in &exits {
        let mut pts = vec![f.marks()[i].point.clone()];
        loop {
            let next = f.eval(pts.last().unwrap());
            if pts.len() > m && next.valuation() < Val::Finite(lowest.clone()) {
                break;
            }
            pts.push(next);
        }
        orbits.insert(i, (m, pts));
    }

    // Orbit point of mark `l` with exact valuation `h` (escaped part only).
    let at_height = |l: usize, h: &Rat| -> Option<&Scalar> {
        let (m, pts) = &orbits[&l];
        pts.iter().skip(*m).find(|z| z.valuation() == Val::Finite(h.clone()))
    };
    let gaps_of = |i: usize, n: usize| -> BTreeSet<Rat> {
        let (_, pts) = &orbits[&i];
        let mut out = BTreeSet::new();
        let mut k = 0usize;
        while let Some(beta) = pts.get(n + k) {
            let h = beta.valuation().expect_finite().clone();
            if h < gap_stop {
                break;
            }
            for &l in orbits.keys() {
                if let Some(gamma) = at_height(l, &h) {
                    if let Val::Finite(v) = (beta - gamma).valuation() {
                        let g = v - &h;
                        if g > int(0) {
                            out.insert(g);
                        }
                    }
                }
            }
            k += 1;
        }
        out
    };

    let mut axis: BTreeSet<Rat> = (0..=horizon).map(|k| &r0 * pow_d(k)).collect();
    for (&_i, (m, pts)) in &orbits {
        for z in pts.iter().skip(*m) {
            let v = z.valuation().expect_finite().clone();
            if v >= top_exp {
                axis.insert(v);
            }
        }
    }

    let top = Val::Finite(top_exp.clone());
    let mut rays: Vec<RayInfo> = Vec::new();
    let mut by_label: HashMap<(usize, usize), usize> = HashMap::new();
    for (&i, (m, pts)) in &orbits {
        // Outer rays inside the window.
        for (n, alpha) in pts.iter().enumerate().skip(*m) {
            let va = alpha.valuation();
            if va < top {
                continue;
            }
            let va = va.expect_finite().clone();
            let q_star = opts.rho.add_rat(&va);
            let mut exps: Vec<Rat> = axis.iter().filter(|s| **s <= va).cloned().collect();
            for g in gaps_of(i, n) {
                if Val::Finite(g.clone()) < opts.rho {
                    exps.push(&va + g);
                }
            }
            exps.sort();
            by_label.insert((i, n), rays.len());
            rays.push(RayInfo { mark: i, iterate: n, center: alpha.clone(), q_star, exps, below: vec![], outer: true });
        }
        // Inner rays, pulled back from the exit downwards.
        for n in (0..*m).rev() {
            let alpha = pts[n].clone();
            let image = &rays[by_label[&(i, n + 1)]];
            let seg = f.segment_map_unchecked(&alpha).map;
            let q_star = seg.inverse(&image.q_star);
            let floor = &dr * &r0;
            let mut below: Vec<Rat> = image
                .exps
                .iter()
                .filter(|s| **s >= floor)
                .map(|s| seg.inverse(&Val::Finite(s.clone())).expect_finite().clone())
                .filter(|q| Val::Finite(q.clone()) < q_star)
                .collect();
            below.sort();
            below.dedup();
            below.truncate(opts.depth + 1);
            let mut exps: Vec<Rat> = axis.iter().filter(|s| **s < r0).cloned().collect();
            exps.extend(below.iter().cloned());
            by_label.insert((i, n), rays.len());
            rays.push(RayInfo { mark: i, iterate: n, center: alpha, q_star, exps, below, outer: false });
        }
    }

    // Assemble nodes keyed by point.
    let mut nodes: BTreeMap<(NodeKind, BerkPoint), (Option<usize>, BTreeSet<CoreWitness>)> = BTreeMap::new();
    let mut add = |kind: NodeKind, point: BerkPoint, level: Option<usize>, w: CoreWitness| {
        let entry = nodes.entry((kind, point)).or_insert_with(|| (level, BTreeSet::new()));
        debug_assert_eq!(entry.0, level, "levels must agree across witnesses");
        entry.1.insert(w);
    };
    let zero = f.backend().zero();
    for s in &axis {
        let level = if *s < r0 { 0 } else { 1 };
        if level <= opts.depth {
            add(
                NodeKind::Vertex,
                BerkPoint::disk(zero.clone(), s.clone()),
                Some(level),
                CoreWitness::Axis { radius_exp: Val::Finite(s.clone()) },
            );
        } else {
            add(
                NodeKind::DepthTruncated,
                BerkPoint::disk(zero.clone(), s.clone()),
                Some(level),
                CoreWitness::Axis { radius_exp: Val::Finite(s.clone()) },
            );
        }
    }
    let mut truncated_rays = 0usize;
    for ray in &rays {
        let witness = |q: Val| CoreWitness::Orbit { mark: ray.mark, iterate: ray.iterate, radius_exp: q };
        let mut depth_cut = false;
        for q in &ray.exps {
            let point = BerkPoint::disk(ray.center.clone(), q.clone());
            let level = if point.abs_exp() < Val::Finite(r0.clone()) {
                0
            } else {
                1 + ray.below.iter().position(|b| b == q).expect("below-base exponent is listed")
            };
            if level > opts.depth {
                add(NodeKind::DepthTruncated, point, Some(level), witness(Val::Finite(q.clone())));
                depth_cut = true;
                break;
            }
            add(NodeKind::Vertex, point, Some(level), witness(Val::Finite(q.clone())));
        }
        if depth_cut {
            truncated_rays += 1;
            continue;
        }
        // Inner rays whose trimmed part stops above the base point add nothing below it.
        if !ray.outer && ray.q_star <= Val::Finite(r0.clone()) {
            continue;
        }
        match &ray.q_star {
            Val::Infinity => add(
                NodeKind::ClassicalEnd,
                BerkPoint::classical(ray.center.clone()),
                None,
                witness(Val::Infinity),
            ),
            q => add(
                NodeKind::TrimBoundary,
                BerkPoint::new(ray.center.clone(), q.clone()),
                None,
                witness(q.clone()),
            ),
        }
    }
    if truncated_rays > 0 {
        warnings.push(format!("{truncated_rays} ray(s) truncated at depth {}", opts.depth));
    }
    let node_list: Vec<CoreNode> = nodes
        .into_iter()
        .map(|((kind, point), (level, witnesses))| CoreNode { kind, point: Some(point), level, witnesses })
        .collect();
    Ok(assemble(f, opts, top_exp, node_list, warnings))
}

fn simple_tree(f: &MarkedPolynomial, opts: &CoreOptions, warnings: Vec<String>) -> CoreTree {
    let base = f.base_point();
    let r0 = f.base_radius_exp().clone();
    let node = CoreNode {
        kind: NodeKind::Base,
        point: Some(base),
        level: None,
        witnesses: [CoreWitness::Axis { radius_exp: Val::Finite(r0.clone()) }].into_iter().collect(),
    };
    assemble(f, opts, r0, vec![node], warnings)
}

/// Sort nodes, append the infinity marker, and derive edges and images.
fn assemble(
    f: &MarkedPolynomial,
    opts: &CoreOptions,
    top_exp: Rat,
    mut nodes: Vec<CoreNode>,
    warnings: Vec<String>,
) -> CoreTree {
    nodes.sort_by(|a, b| {
        let ka = (a.point.as_ref().map(|p| p.radius_exp().clone()), a.point.clone(), a.kind);
        let kb = (b.point.as_ref().map(|p| p.radius_exp().clone()), b.point.clone(), b.kind);
        ka.cmp(&kb)
    });
    nodes.push(CoreNode { kind: NodeKind::Infinity, point: None, level: None, witnesses: BTreeSet::new() });
    let infinity = nodes.len() - 1;
    let edges = derive_edges(f, &nodes, infinity);
    let index: HashMap<BerkPoint, usize> = nodes
        .iter()
        .enumerate()
        .filter_map(|(k, n)| n.point.clone().map(|p| (p, k)))
        .collect();
    let top = Val::Finite(top_exp.clone());
    let images = nodes
        .iter()
        .map(|n| match &n.point {
            None => NodeImage::Infinity,
            Some(p) => {
                let img = f.image_point(p).0;
                match index.get(&img) {
                    Some(&k) => NodeImage::Node(k),
                    None if img.abs_exp() < top => NodeImage::OutsideWindow(img),
                    None => NodeImage::Missing(img),
                }
            }
        })
        .collect();
    CoreTree { f: f.clone(), options: opts.clone(), top_exp, nodes, edges, images, warnings }
}

fn derive_edges(f: &MarkedPolynomial, nodes: &[CoreNode], infinity: usize) -> Vec<CoreEdge> {
    let mut edges = Vec::new();
    for (k, node) in nodes.iter().enumerate() {
        let Some(x) = &node.point else { continue };
        let mut parent: Option<(usize, &BerkPoint)> = None;
        for (j, cand) in nodes.iter().enumerate() {
            if cand.kind != NodeKind::Vertex {
                continue;
            }
            let y = cand.point.as_ref().unwrap();
            if x.compare(y) == Relation::Less {
                let better = parent.is_none_or(|(_, cur)| y.radius_exp() > cur.radius_exp());
                if better {
                    parent = Some((j, y));
                }
            }
        }
        let (upper, sample, length) = match parent {
            Some((j, y)) => {
                let qy = y.radius_exp().expect_finite();
                match x.radius_exp() {
                    Val::Finite(qx) => (
                        j,
                        BerkPoint::disk(x.center().clone(), (qx + qy) / int(2)),
                        Val::Finite(qx - qy),
                    ),
                    Val::Infinity => {
                        (j, BerkPoint::disk(x.center().clone(), qy + int(1)), Val::Infinity)
                    }
                }
            }
            None => {
                let q = x.radius_exp().finite().cloned().unwrap_or_else(|| int(0));
                (infinity, BerkPoint::disk(x.center().clone(), q - int(1)), Val::Infinity)
            }
        };
        let degree = f
            .local_degree_rh(&sample)
            .expect("the tree is only built for tame polynomials");
        edges.push(CoreEdge { lower: k, upper, degree, length });
    }
    edges
}

impl CoreTree {
    pub fn infinity(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&k| self.nodes[k].kind == NodeKind::Vertex)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_ids().count()
    }

    pub fn node_of(&self, x: &BerkPoint) -> Option<usize> {
        self.nodes.iter().position(|n| n.point.as_ref() == Some(x))
    }

    /// Level of any point of `{|x| > |x_f|}` is 0; otherwise the recorded level.
    pub fn level_of_image(&self, img: &NodeImage) -> Option<usize> {
        match img {
            NodeImage::Node(k) => self.nodes[*k].level,
            NodeImage::OutsideWindow(_) | NodeImage::Infinity => Some(0),
            NodeImage::Missing(_) => None,
        }
    }

    pub fn edge_points(&self, e: &CoreEdge) -> (Option<&BerkPoint>, Option<&BerkPoint>) {
        (self.nodes[e.lower].point.as_ref(), self.nodes[e.upper].point.as_ref())
    }

    /// Every inconsistency found by re-checking the construction.
    pub fn consistency_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (k, img) in self.images.iter().enumerate() {
            if let NodeImage::Missing(p) = img {
                out.push(format!("image {p} of node {k} is not on the tree"));
            }
        }
        for (k, node) in self.nodes.iter().enumerate() {
            if let Some(p) = &node.point {
                for w in &node.witnesses {
                    if let Some(q) = self.witness_point(w) {
                        if &q != p {
                            out.push(format!("witness {w:?} of node {k} denotes {q}"));
                        }
                    }
                }
            }
        }
        out
    }

    /// The point a witness denotes for this tree's polynomial.
    pub fn witness_point(&self, w: &CoreWitness) -> Option<BerkPoint> {
        witness_point(&self.f, w)
    }

    /// Image of a point lying on a node or inside an edge.
    pub fn core_dynamics(&self, x: &BerkPoint) -> Result<BerkPoint> {
        let on_node = self.node_of(x).is_some();
        let on_edge = self.edges.iter().any(|e| {
            let lower = self.nodes[e.lower].point.as_ref().unwrap();
            let below_upper = match &self.nodes[e.upper].point {
                Some(up) => x.compare(up) == Relation::Less,
                // The top edge runs along the axis.
                None => {
                    x.contains(&self.f.backend().zero())
                        && x.radius_exp() < lower.radius_exp()
                }
            };
            lower.compare(x) == Relation::Less && below_upper
        });
        if !on_node && !on_edge {
            return Err(Error::NotOnTree(x.to_string()));
        }
        Ok(self.f.image_point(x).0)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph core {\n  rankdir=BT;\n");
        for (k, n) in self.nodes.iter().enumerate() {
            let label = match &n.point {
                None => "inf".to_string(),
                Some(p) => {
                    let level = n.level.map(|l| l.to_string()).unwrap_or_else(|| "-".into());
                    format!("{}\\n{}\\nlevel {}", n.kind.name(), p, level)
                }
            };
            let shape = if n.kind == NodeKind::Vertex { "ellipse" } else { "box" };
            let _ = writeln!(s, "  n{k} [label=\"{label}\", shape={shape}];");
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "  n{} -> n{} [label=\"deg {}, len {}\"];",
                e.lower, e.upper, e.degree, e.length
            );
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(k, n)| {
                json!({
                    "id": k,
                    "kind": n.kind.name(),
                    "center": n.point.as_ref().map(|p| scalar_to_json(p.center())),
                    "radius_exp": n.point.as_ref().map(|p| val_to_json(p.radius_exp())),
                    "level": n.level,
                    "witnesses": n.witnesses.iter().map(witness_to_json).collect::<Vec<_>>(),
                    "image": image_to_json(&self.images[k]),
                })
            })
            .collect();
        let edges: Vec<Value> = self
            .edges
            .iter()
            .map(|e| {
                json!({"lower": e.lower, "upper": e.upper, "degree": e.degree, "length": val_to_json(&e.length)})
            })
            .collect();
        json!({
            "polynomial": polynomial_to_json(&self.f),
            "rho": val_to_json(&self.options.rho),
            "depth": self.options.depth,
            "budget": self.options.budget,
            "horizon": self.options.horizon,
            "base_radius_exp": self.f.base_radius_exp().to_string(),
            "top_exp": self.top_exp.to_string(),
            "nodes": nodes,
            "edges": edges,
            "warnings": self.warnings,
        })
    }

    pub fn from_json(v: &Value) -> Result<CoreTree> {
        let bad = |m: &str| Error::InvalidInput(format!("core JSON: {m}"));
        let f = polynomial_from_json(v.get("polynomial").ok_or_else(|| bad("missing polynomial"))?)?;
        let backend = f.backend().clone();
        let usize_of = |key: &str| -> Result<usize> {
            v.get(key).and_then(Value::as_u64).map(|x| x as usize).ok_or_else(|| bad(key))
        };
        let options = CoreOptions {
            rho: val_from_json(v.get("rho").ok_or_else(|| bad("rho"))?)?,
            depth: usize_of("depth")?,
            budget: usize_of("budget")?,
            horizon: usize_of("horizon")?,
        };
        let top_exp = crate::valued_field::parse_rat(
            v.get("top_exp").and_then(Value::as_str).ok_or_else(|| bad("top_exp"))?,
        )?;
        let mut nodes = Vec::new();
        let mut images = Vec::new();
        for n in v.get("nodes").and_then(Value::as_array).ok_or_else(|| bad("nodes"))? {
            let kind = NodeKind::parse(n.get("kind").and_then(Value::as_str).ok_or_else(|| bad("kind"))?)?;
            let point = match (n.get("center"), n.get("radius_exp")) {
                (Some(c), Some(r)) if !c.is_null() => Some(BerkPoint::new(
                    scalar_from_json(&backend, c)?,
                    val_from_json(r)?,
                )),
                _ => None,
            };
            let level = n.get("level").and_then(Value::as_u64).map(|l| l as usize);
            let witnesses = n
                .get("witnesses")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("witnesses"))?
                .iter()
                .map(witness_from_json)
                .collect::<Result<BTreeSet<_>>>()?;
            nodes.push(CoreNode { kind, point, level, witnesses });
            images.push(image_from_json(&backend, n.get("image").ok_or_else(|| bad("image"))?)?);
        }
        let mut edges = Vec::new();
        for e in v.get("edges").and_then(Value::as_array).ok_or_else(|| bad("edges"))? {
            let get = |k: &str| e.get(k).and_then(Value::as_u64).ok_or_else(|| bad(k));
            edges.push(CoreEdge {
                lower: get("lower")? as usize,
                upper: get("upper")? as usize,
                degree: get("degree")? as u32,
                length: val_from_json(e.get("length").ok_or_else(|| bad("length"))?)?,
            });
        }
        let warnings = v
            .get("warnings")
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(|w| w.as_str().map(String::from)).collect())
            .unwrap_or_default();
        Ok(CoreTree { f, options, top_exp, nodes, edges, images, warnings })
    }
}

/// The point a witness denotes for a given polynomial.
pub fn witness_point(f: &MarkedPolynomial, w: &CoreWitness) -> Option<BerkPoint> {
    match w {
        CoreWitness::Axis { radius_exp } => Some(BerkPoint::new(f.backend().zero(), radius_exp.clone())),
        CoreWitness::Orbit { mark, iterate, radius_exp } => {
            let c = &f.marks().get(*mark)?.point;
            Some(BerkPoint::new(f.iterate(c, *iterate), radius_exp.clone()))
        }
    }
}

fn witness_to_json(w: &CoreWitness) -> Value {
    match w {
        CoreWitness::Orbit { mark, iterate, radius_exp } => {
            json!({"mark": mark, "iterate": iterate, "radius_exp": val_to_json(radius_exp)})
        }
        CoreWitness::Axis { radius_exp } => json!({"axis": true, "radius_exp": val_to_json(radius_exp)}),
    }
}

fn witness_from_json(v: &Value) -> Result<CoreWitness> {
    let radius_exp = val_from_json(
        v.get("radius_exp").ok_or_else(|| Error::InvalidInput("witness radius".into()))?,
    )?;
    if v.get("axis").is_some() {
        return Ok(CoreWitness::Axis { radius_exp });
    }
    let get = |k: &str| {
        v.get(k)
            .and_then(Value::as_u64)
            .map(|x| x as usize)
            .ok_or_else(|| Error::InvalidInput(format!("witness field {k}")))
    };
    Ok(CoreWitness::Orbit { mark: get("mark")?, iterate: get("iterate")?, radius_exp })
}

fn point_json(p: &BerkPoint) -> Value {
    json!({"center": scalar_to_json(p.center()), "radius_exp": val_to_json(p.radius_exp())})
}

fn image_to_json(img: &NodeImage) -> Value {
    match img {
        NodeImage::Node(k) => json!(k),
        NodeImage::Infinity => json!("infinity"),
        NodeImage::OutsideWindow(p) => json!({"outside": point_json(p)}),
        NodeImage::Missing(p) => json!({"missing": point_json(p)}),
    }
}

fn image_from_json(backend: &Backend, v: &Value) -> Result<NodeImage> {
    let point = |p: &Value| -> Result<BerkPoint> {
        Ok(BerkPoint::new(
            scalar_from_json(backend, p.get("center").unwrap_or(&Value::Null))?,
            val_from_json(p.get("radius_exp").unwrap_or(&Value::Null))?,
        ))
    };
    if let Some(k) = v.as_u64() {
        return Ok(NodeImage::Node(k as usize));
    }
    if v.as_str() == Some("infinity") {
        return Ok(NodeImage::Infinity);
    }
    if let Some(p) = v.get("outside") {
        return Ok(NodeImage::OutsideWindow(point(p)?));
    }
    if let Some(p) = v.get("missing") {
        return Ok(NodeImage::Missing(point(p)?));
    }
    Err(Error::InvalidInput(format!("unrecognised node image {v}")))
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

    fn vertex_points(t: &CoreTree) -> Vec<(BerkPoint, usize)> {
        t.vertex_ids()
            .map(|k| (t.nodes[k].point.clone().unwrap(), t.nodes[k].level.unwrap()))
            .collect()
    }

    #[test]
    fn quadratic_shift_core() {
        let f = quad(rat(-1, 3));
        let t = build_core(&f, &Val::Infinity, 3, 64).unwrap();
        let be = f.backend().clone();
        let mut got = vertex_points(&t);
        got.sort();
        let mut want = vec![
            (BerkPoint::disk(be.zero(), int(-2)), 0),
            (BerkPoint::disk(be.zero(), int(-1)), 0),
            (BerkPoint::disk(be.zero(), rat(-1, 2)), 1),
        ];
        want.sort();
        assert_eq!(got, want);
        assert_eq!(t.nodes.len(), 7);
        assert_eq!(t.edges.len(), 6);
        assert!(t.consistency_violations().is_empty(), "{:?}", t.consistency_violations());
        // Base point maps to f(x_f) = x_{0,-1}.
        let xf = t.node_of(&f.base_point()).unwrap();
        let img = t.core_dynamics(&f.base_point()).unwrap();
        assert_eq!(img, BerkPoint::disk(be.zero(), int(-1)));
        assert_eq!(t.images[xf], NodeImage::Node(t.node_of(&img).unwrap()));
        // Degrees: 2 along the axis, 1 on the rays to escaped orbit points.
        for e in &t.edges {
            let lower = t.nodes[e.lower].point.as_ref().unwrap();
            let expect = if lower.contains(&be.zero()) { 2 } else { 1 };
            assert_eq!(e.degree, expect, "edge {e:?}");
        }
    }

    #[test]
    fn simple_core_is_one_ray() {
        let f = quad(int(0));
        let t = build_core(&f, &Val::Infinity, 3, 64).unwrap();
        assert_eq!(t.nodes.len(), 2);
        assert_eq!(t.edges.len(), 1);
        assert_eq!(t.edges[0].length, Val::Infinity);
        let dot = t.to_dot();
        assert_eq!(dot.matches("label=\"deg").count(), 1);
    }

    #[test]
    fn small_rho_trims_branches() {
        let f = quad(rat(-1, 3));
        let t = build_core(&f, &Val::Finite(rat(1, 2)), 3, 64).unwrap();
        assert!(t.nodes.iter().all(|n| n.kind != NodeKind::ClassicalEnd));
        let trims = t.nodes.iter().filter(|n| n.kind == NodeKind::TrimBoundary).count();
        assert_eq!(trims, 3);
        assert!(t.consistency_violations().is_empty());
    }

    #[test]
    fn json_round_trip() {
        let f = quad(rat(-1, 3));
        let t = build_core(&f, &Val::Infinity, 3, 64).unwrap();
        let back = CoreTree::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn off_tree_points_are_rejected() {
        let f = quad(rat(-1, 3));
        let t = build_core(&f, &Val::Infinity, 3, 64).unwrap();
        let off = BerkPoint::disk(f.backend().one(), int(3));
        assert!(matches!(t.core_dynamics(&off), Err(Error::NotOnTree(_))));
    }
}

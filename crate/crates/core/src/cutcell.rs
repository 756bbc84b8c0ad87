//! Per-element cut detection, interface reconstruction and decomposition into
//! curved sub-elements that conform to the zero set.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use thiserror::Error;

use crate::elements::{
    lagrange_1d, lattice_point, map_with, tabulate, PhysicalElement, ReferenceElement, Shape,
};
use crate::geometry::{sign_of, LevelSet, Point, RegionSignature, SignPattern, Vec2};

/// Roots are polished to this accuracy in reference coordinates.
pub const ROOT_TOL: f64 = 1e-12;
pub const MAX_NEWTON: usize = 50;
/// Nodes may leave the closed reference domain by at most this much.
pub const CONTAINMENT_TOL: f64 = 1e-9;
/// Minimum local area fraction of a sub-element relative to its parent.
pub const JACOBIAN_FLOOR: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CutError {
    #[error("sign pattern has no decomposition")]
    UnsupportedTopology,
    #[error("zero set crosses the element more than once")]
    Complex,
    #[error("interface node left the element by {0:e}")]
    RootOutsideElement(f64),
    #[error("interface node search did not converge")]
    NoConvergence,
    #[error("sub-element Jacobian too small (scaled {scaled:e}, physical {physical:e})")]
    InvalidJacobian { scaled: f64, physical: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutStatus {
    Inside,
    Outside,
    Cut,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutCase {
    QuadOppositeEdges,
    QuadAdjacentEdges,
    TriTwoEdges,
}

/// How one zero set crosses an element. The interface runs from the root on
/// `edges[0]` to the root on `edges[1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutTopology {
    pub case: CutCase,
    pub edges: [usize; 2],
    /// Lone corner for the adjacent and triangle cases, first cut edge for the opposite case.
    pub pivot: usize,
    pub corner_signs: Vec<i8>,
    pub negative_corners: Vec<usize>,
}

/// Classify corner signs against the three-case catalog.
pub fn classify_signs(shape: Shape, signs: &[i8]) -> Result<CutTopology, CutError> {
    let n = signs.len();
    let neg: Vec<usize> = (0..n).filter(|&k| signs[k] < 0).collect();
    if neg.is_empty() || neg.len() == n {
        return Err(CutError::UnsupportedTopology);
    }
    let lone = |k: usize| (0..n).filter(|&j| signs[j] == signs[k]).count() == 1;
    let mk = |case, edges, pivot| CutTopology {
        case,
        edges,
        pivot,
        corner_signs: signs.to_vec(),
        negative_corners: neg.clone(),
    };
    match shape {
        Shape::Tri => {
            let c = (0..3).find(|&k| lone(k)).expect("three signs with a minority");
            Ok(mk(CutCase::TriTwoEdges, [c, (c + 2) % 3], c))
        }
        Shape::Quad => {
            if let Some(c) = (0..4).find(|&k| lone(k)) {
                return Ok(mk(CutCase::QuadAdjacentEdges, [c, (c + 3) % 4], c));
            }
            // two and two: adjacent pairs only
            let e = (0..4).find(|&k| signs[k] != signs[(k + 1) % 4] && signs[(k + 1) % 4] == signs[(k + 2) % 4]);
            match e {
                Some(e) => {
                    let e = e % 2;
                    Ok(mk(CutCase::QuadOppositeEdges, [e, e + 2], e))
                }
                None => Err(CutError::UnsupportedTopology),
            }
        }
    }
}

struct SampleGrid {
    points: Vec<Point>,
    /// shape values per sample point, row-major
    values: Vec<f64>,
    n_nodes: usize,
    lines: Vec<Vec<usize>>,
}

fn sample_grid(shape: Shape, order: u8) -> Arc<SampleGrid> {
    static C: OnceLock<RwLock<HashMap<(Shape, u8), Arc<SampleGrid>>>> = OnceLock::new();
    let cache = C.get_or_init(Default::default);
    if let Some(g) = cache.read().unwrap().get(&(shape, order)) {
        return g.clone();
    }
    let m = order as usize + 3;
    let s = (m - 1) as f64;
    let mut index = HashMap::new();
    let mut points = Vec::new();
    for j in 0..m {
        for i in 0..m {
            if shape == Shape::Tri && i + j > m - 1 {
                continue;
            }
            index.insert((i, j), points.len());
            points.push(match shape {
                Shape::Quad => Point::new(-1.0 + 2.0 * i as f64 / s, -1.0 + 2.0 * j as f64 / s),
                Shape::Tri => Point::new(i as f64 / s, j as f64 / s),
            });
        }
    }
    let mut lines = Vec::new();
    for a in 0..m {
        let row: Vec<usize> = (0..m).filter_map(|i| index.get(&(i, a)).copied()).collect();
        let col: Vec<usize> = (0..m).filter_map(|j| index.get(&(a, j)).copied()).collect();
        lines.push(row);
        lines.push(col);
        if shape == Shape::Tri {
            lines.push((0..=a).filter_map(|i| index.get(&(i, a - i)).copied()).collect());
        }
    }
    let re = ReferenceElement::get(shape, order);
    let n_nodes = re.n_nodes();
    let mut values = Vec::with_capacity(points.len() * n_nodes);
    for p in &points {
        values.extend(re.values(p));
    }
    let g = Arc::new(SampleGrid { points, values, n_nodes, lines });
    cache.write().unwrap().entry((shape, order)).or_insert(g).clone()
}

fn sign_changes(signs: &[i8], line: &[usize]) -> usize {
    line.windows(2).filter(|w| signs[w[0]] != signs[w[1]]).count()
}

/// Physical positions of the element's sample grid.
pub fn sample_points(el: &PhysicalElement) -> Vec<Point> {
    let g = sample_grid(el.shape, el.order);
    (0..g.points.len())
        .map(|k| {
            let v = &g.values[k * g.n_nodes..(k + 1) * g.n_nodes];
            let mut x = Vec2::zeros();
            for (p, &w) in el.nodes.iter().zip(v) {
                x += p.coords * w;
            }
            Point::from(x)
        })
        .collect()
}

/// Exact level-set values on the sample grid.
pub fn sample_values(el: &PhysicalElement, ls: &LevelSet) -> Vec<f64> {
    sample_points(el).iter().map(|x| ls.eval(x)).collect()
}

pub fn detect_cut(el: &PhysicalElement, ls: &LevelSet) -> CutStatus {
    detect_from_samples(el, &sample_values(el, ls))
}

fn detect_from_samples(el: &PhysicalElement, samples: &[f64]) -> CutStatus {
    let signs: Vec<i8> = samples.iter().map(|&v| sign_of(v)).collect();
    if signs.iter().all(|&s| s < 0) {
        return CutStatus::Inside;
    }
    if signs.iter().all(|&s| s > 0) {
        return CutStatus::Outside;
    }
    let g = sample_grid(el.shape, el.order);
    if g.lines.iter().any(|l| sign_changes(&signs, l) > 1) {
        return CutStatus::Complex;
    }
    match classify_signs(el.shape, &corner_signs(el, ls_corner_values(el, samples))) {
        Ok(_) => CutStatus::Cut,
        Err(_) => CutStatus::Complex,
    }
}

// Corners sit on the sample grid: (0,0), (m-1,0), (m-1,m-1)/(0,m-1).
fn ls_corner_values(el: &PhysicalElement, samples: &[f64]) -> Vec<f64> {
    let m = el.order as usize + 3;
    match el.shape {
        Shape::Quad => vec![samples[0], samples[m - 1], samples[m * m - 1], samples[m * (m - 1)]],
        Shape::Tri => vec![samples[0], samples[m - 1], samples[samples.len() - 1]],
    }
}

fn corner_signs(_el: &PhysicalElement, v: Vec<f64>) -> Vec<i8> {
    v.into_iter().map(sign_of).collect()
}

pub fn classify_cut(el: &PhysicalElement, ls: &LevelSet) -> Result<CutTopology, CutError> {
    let signs: Vec<i8> = el.corners().iter().map(|x| sign_of(ls.eval(x))).collect();
    classify_signs(el.shape, &signs)
}

/// Interface element in the reference space of its host, ordered from the
/// root on `edges[0]` to the root on `edges[1]`.
#[derive(Debug, Clone)]
pub struct InterfaceElement {
    pub order: u8,
    pub nodes: Vec<Point>,
    pub physical: Vec<Point>,
    pub max_residual: f64,
}

struct LineFn<'a> {
    el: &'a PhysicalElement,
    ls: &'a LevelSet,
    origin: Point,
    dir: Vec2,
}

impl LineFn<'_> {
    fn point(&self, t: f64) -> Point {
        self.origin + self.dir * t
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        let m = self.el.map(&self.point(t));
        let (v, g) = self.ls.eval_gradient(&m.x);
        (v, g.dot(&(m.jac * self.dir)))
    }
}

/// Safeguarded Newton in a sign-change bracket `[a, b]`, seeded at `t0`.
fn bracketed_newton(f: &LineFn, mut a: f64, mut b: f64, t0: f64) -> Result<f64, CutError> {
    let (fa, _) = f.eval(a);
    let (fb, _) = f.eval(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if sign_of(fa) == sign_of(fb) {
        return Err(CutError::NoConvergence);
    }
    let neg_at_a = fa < 0.0;
    let scale = f.dir.norm();
    let mut t = t0.clamp(a.min(b), a.max(b));
    for _ in 0..MAX_NEWTON {
        let (v, d) = f.eval(t);
        if v == 0.0 {
            return Ok(t);
        }
        if (v < 0.0) == neg_at_a {
            a = t;
        } else {
            b = t;
        }
        let newton = if d != 0.0 { t - v / d } else { f64::NAN };
        let lo = a.min(b);
        let hi = a.max(b);
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - t).abs() * scale < ROOT_TOL || (hi - lo) * scale < ROOT_TOL {
            return Ok(next);
        }
        t = next;
    }
    Err(CutError::NoConvergence)
}

fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// Parameter interval of `origin + t dir` inside the closed reference domain.
fn clip_to_domain(shape: Shape, origin: Point, dir: Vec2) -> Option<(f64, f64)> {
    // half-planes  n . xi <= c
    let planes: &[(f64, f64, f64)] = match shape {
        Shape::Quad => &[(1.0, 0.0, 1.0), (-1.0, 0.0, 1.0), (0.0, 1.0, 1.0), (0.0, -1.0, 1.0)],
        Shape::Tri => &[(-1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (1.0, 1.0, 1.0)],
    };
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for &(nx, ny, c) in planes {
        let nd = nx * dir.x + ny * dir.y;
        let r = c - (nx * origin.x + ny * origin.y);
        if nd.abs() < 1e-300 {
            if r < -1e-14 {
                return None;
            }
        } else if nd > 0.0 {
            hi = hi.min(r / nd);
        } else {
            lo = lo.max(r / nd);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

fn edge_root(el: &PhysicalElement, ls: &LevelSet, e: usize) -> Result<Point, CutError> {
    let nc = el.shape.n_corners();
    let a = el.shape.corner(e);
    let b = el.shape.corner((e + 1) % nc);
    let f = LineFn { el, ls, origin: a, dir: b - a };
    let fa = ls.eval(&el.nodes[e]);
    let fb = ls.eval(&el.nodes[(e + 1) % nc]);
    let t0 = if fa != fb { fa / (fa - fb) } else { 0.5 };
    let t = bracketed_newton(&f, 0.0, 1.0, t0)?;
    Ok(f.point(t))
}

pub fn reconstruct_interface(
    el: &PhysicalElement,
    ls: &LevelSet,
    topo: &CutTopology,
) -> Result<InterfaceElement, CutError> {
    let p = el.order as usize;
    let ra = edge_root(el, ls, topo.edges[0])?;
    let rb = edge_root(el, ls, topo.edges[1])?;
    let chord = rb - ra;
    if chord.norm() < ROOT_TOL {
        return Err(CutError::NoConvergence);
    }
    let normal = perp(chord).normalize();
    let mut nodes = vec![ra];
    for k in 1..p {
        let s = ra + chord * (k as f64 / p as f64);
        let f = LineFn { el, ls, origin: s, dir: normal };
        let (lo, hi) = clip_to_domain(el.shape, s, normal).ok_or(CutError::NoConvergence)?;
        let n = 8 * (p + 3);
        let mut ts: Vec<f64> = (0..=n).map(|j| lo + (hi - lo) * j as f64 / n as f64).collect();
        ts.push(0.0_f64.clamp(lo, hi));
        ts.sort_by(|a, b| a.total_cmp(b));
        let vals: Vec<f64> = ts.iter().map(|&t| f.eval(t).0).collect();
        // sign change closest to the chord
        let mut best: Option<(f64, f64, f64)> = None;
        for j in 0..ts.len() - 1 {
            if sign_of(vals[j]) != sign_of(vals[j + 1]) {
                let dist = ts[j].abs().min(ts[j + 1].abs());
                if best.is_none_or(|b| dist < b.2) {
                    best = Some((ts[j], ts[j + 1], dist));
                }
            }
        }
        let (a, b, _) = best.ok_or(CutError::NoConvergence)?;
        let t = bracketed_newton(&f, a, b, 0.0)?;
        nodes.push(f.point(t));
    }
    nodes.push(rb);
    let worst = nodes.iter().map(|xi| el.shape.outside_distance(xi)).fold(0.0, f64::max);
    if worst > CONTAINMENT_TOL {
        return Err(CutError::RootOutsideElement(worst));
    }
    let physical: Vec<Point> = nodes.iter().map(|xi| el.map(xi).x).collect();
    let max_residual = physical.iter().map(|x| ls.eval(x).abs()).fold(0.0, f64::max);
    Ok(InterfaceElement { order: el.order, nodes, physical, max_residual })
}

/// Where a sub-element edge comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeOrigin {
    Parent(usize),
    Interface,
    Internal,
}

#[derive(Debug, Clone)]
pub struct SubElement {
    pub shape: Shape,
    pub order: u8,
    /// Node positions in the parent's reference space.
    pub ref_nodes: Vec<Point>,
    pub element: PhysicalElement,
    pub side: i8,
    pub edge_origin: Vec<EdgeOrigin>,
}

#[derive(Clone)]
enum Curve {
    Line(Point, Point),
    Nodes(Vec<Point>),
}

impl Curve {
    fn eval(&self, t: f64) -> Point {
        match self {
            Curve::Line(a, b) => a + (b - a) * t,
            Curve::Nodes(n) => {
                let p = n.len() - 1;
                let (mut v, mut d) = ([0.0; 7], [0.0; 7]);
                lagrange_1d(p, t, &mut v, &mut d);
                let mut x = Vec2::zeros();
                for k in 0..=p {
                    x += n[k].coords * v[k];
                }
                Point::from(x)
            }
        }
    }

    fn start(&self) -> Point {
        self.eval(0.0)
    }
}

/// Boundary-blended map from the sub-element's reference domain.
fn blend(shape: Shape, edges: &[Curve], z: &Point) -> Point {
    match shape {
        Shape::Quad => {
            let (u, v) = (0.5 * (z.x + 1.0), 0.5 * (z.y + 1.0));
            let c: Vec<Point> = edges.iter().map(|e| e.start()).collect();
            let x = edges[0].eval(u).coords * (1.0 - v)
                + edges[2].eval(1.0 - u).coords * v
                + edges[3].eval(1.0 - v).coords * (1.0 - u)
                + edges[1].eval(v).coords * u
                - (c[0].coords * ((1.0 - u) * (1.0 - v))
                    + c[1].coords * (u * (1.0 - v))
                    + c[2].coords * (u * v)
                    + c[3].coords * ((1.0 - u) * v));
            Point::from(x)
        }
        Shape::Tri => {
            let l = [1.0 - z.x - z.y, z.x, z.y];
            let c: Vec<Point> = edges.iter().map(|e| e.start()).collect();
            let mut x = c[0].coords * l[0] + c[1].coords * l[1] + c[2].coords * l[2];
            for k in 0..3 {
                if let Curve::Nodes(_) = edges[k] {
                    let (a, b) = (l[k], l[(k + 1) % 3]);
                    let s = a + b;
                    if s > 1e-300 {
                        let t = b / s;
                        let lin = c[k].coords * (1.0 - t) + c[(k + 1) % 3].coords * t;
                        x += (edges[k].eval(t).coords - lin) * s;
                    }
                }
            }
            Point::from(x)
        }
    }
}

/// Straight edges shorter than this (reference units) are treated as points.
pub const COLLAPSE_TOL: f64 = 1e-10;

fn make_sub(
    parent: &PhysicalElement,
    shape: Shape,
    mut edges: Vec<Curve>,
    mut edge_origin: Vec<EdgeOrigin>,
    side: i8,
) -> SubElement {
    // a root on a corner leaves a quad with a zero-length edge; it is a triangle
    let mut shape = shape;
    if shape == Shape::Quad {
        let short = edges.iter().position(|e| matches!(e, Curve::Line(p, q) if (q - p).norm() < COLLAPSE_TOL));
        if let Some(k) = short {
            edges = (1..4).map(|j| edges[(k + j) % 4].clone()).collect();
            edge_origin = (1..4).map(|j| edge_origin[(k + j) % 4]).collect();
            shape = Shape::Tri;
        }
    }
    let re = ReferenceElement::get(shape, parent.order);
    let ref_nodes: Vec<Point> = re
        .lattice
        .iter()
        .map(|&ij| blend(shape, &edges, &lattice_point(shape, parent.order, ij)))
        .collect();
    let nodes = ref_nodes.iter().map(|xi| parent.map(xi).x).collect();
    SubElement {
        shape,
        order: parent.order,
        ref_nodes,
        element: PhysicalElement::new(shape, parent.order, nodes),
        side,
        edge_origin,
    }
}

pub fn decompose(
    el: &PhysicalElement,
    topo: &CutTopology,
    iface: &InterfaceElement,
) -> Result<Vec<SubElement>, CutError> {
    use EdgeOrigin::{Interface, Internal, Parent};
    let nc = el.shape.n_corners();
    let v = |k: usize| el.shape.corner(k % nc);
    let a = iface.nodes[0];
    let b = *iface.nodes.last().unwrap();
    let fwd = Curve::Nodes(iface.nodes.clone());
    let rev = Curve::Nodes(iface.nodes.iter().rev().copied().collect());
    let line = |p: Point, q: Point| Curve::Line(p, q);
    let s = |k: usize| topo.corner_signs[k % nc];
    let subs = match topo.case {
        CutCase::QuadOppositeEdges => {
            let e = topo.pivot;
            vec![
                make_sub(
                    el,
                    Shape::Quad,
                    vec![line(a, v(e + 1)), line(v(e + 1), v(e + 2)), line(v(e + 2), b), rev.clone()],
                    vec![Parent(e), Parent((e + 1) % 4), Parent((e + 2) % 4), Interface],
                    s(e + 1),
                ),
                make_sub(
                    el,
                    Shape::Quad,
                    vec![line(b, v(e + 3)), line(v(e + 3), v(e)), line(v(e), a), fwd.clone()],
                    vec![Parent((e + 2) % 4), Parent((e + 3) % 4), Parent(e), Interface],
                    s(e),
                ),
            ]
        }
        CutCase::QuadAdjacentEdges => {
            let c = topo.pivot;
            let corner = make_sub(
                el,
                Shape::Tri,
                vec![line(v(c), a), fwd.clone(), line(b, v(c))],
                vec![Parent(c), Interface, Parent((c + 3) % 4)],
                s(c),
            );
            let far = s(c + 1);
            // split the far pentagon along a diagonal, keeping the larger triangle
            if (a - v(c + 1)).norm() >= (v(c + 3) - b).norm() {
                vec![
                    corner,
                    make_sub(
                        el,
                        Shape::Tri,
                        vec![line(a, v(c + 1)), line(v(c + 1), v(c + 2)), line(v(c + 2), a)],
                        vec![Parent(c), Parent((c + 1) % 4), Internal],
                        far,
                    ),
                    make_sub(
                        el,
                        Shape::Quad,
                        vec![line(a, v(c + 2)), line(v(c + 2), v(c + 3)), line(v(c + 3), b), rev.clone()],
                        vec![Internal, Parent((c + 2) % 4), Parent((c + 3) % 4), Interface],
                        far,
                    ),
                ]
            } else {
                vec![
                    corner,
                    make_sub(
                        el,
                        Shape::Quad,
                        vec![line(a, v(c + 1)), line(v(c + 1), v(c + 2)), line(v(c + 2), b), rev.clone()],
                        vec![Parent(c), Parent((c + 1) % 4), Internal, Interface],
                        far,
                    ),
                    make_sub(
                        el,
                        Shape::Tri,
                        vec![line(v(c + 2), v(c + 3)), line(v(c + 3), b), line(b, v(c + 2))],
                        vec![Parent((c + 2) % 4), Parent((c + 3) % 4), Internal],
                        far,
                    ),
                ]
            }
        }
        CutCase::TriTwoEdges => {
            let c = topo.pivot;
            vec![
                make_sub(
                    el,
                    Shape::Tri,
                    vec![line(v(c), a), fwd.clone(), line(b, v(c))],
                    vec![Parent(c), Interface, Parent((c + 2) % 3)],
                    s(c),
                ),
                make_sub(
                    el,
                    Shape::Quad,
                    vec![line(a, v(c + 1)), line(v(c + 1), v(c + 2)), line(v(c + 2), b), rev.clone()],
                    vec![Parent(c), Parent((c + 1) % 3), Parent((c + 2) % 3), Interface],
                    s(c + 1),
                ),
            ]
        }
    };
    for sub in &subs {
        let diag = validate_subelement(sub, el.shape);
        if !diag.pass {
            return Err(CutError::InvalidJacobian { scaled: diag.min_scaled_det, physical: diag.min_physical_det });
        }
    }
    Ok(subs)
}

#[derive(Debug, Clone, Copy)]
pub struct Validation {
    pub min_scaled_det: f64,
    pub min_physical_det: f64,
    pub max_outside: f64,
    pub pass: bool,
}

pub fn validate_subelement(sub: &SubElement, parent_shape: Shape) -> Validation {
    let p = sub.order as u32;
    let tab = tabulate(sub.shape, sub.order, 2 * p + 2);
    let scale = sub.shape.ref_area() / parent_shape.ref_area();
    let (mut sd, mut pd) = (f64::INFINITY, f64::INFINITY);
    let mut check = |v: &[f64], g: &[Vec2]| {
        sd = sd.min(map_with(&sub.ref_nodes, v, g).det * scale);
        pd = pd.min(map_with(&sub.element.nodes, v, g).det);
    };
    for q in 0..tab.rule.len() {
        check(tab.values_at(q), tab.grads_at(q));
    }
    let re = ReferenceElement::get(sub.shape, sub.order);
    for xi in &re.nodes {
        let (v, g) = re.shape_values(xi);
        check(&v, &g);
    }
    let max_outside = sub.ref_nodes.iter().map(|x| parent_shape.outside_distance(x)).fold(0.0, f64::max);
    Validation {
        min_scaled_det: sd,
        min_physical_det: pd,
        max_outside,
        pass: sd > JACOBIAN_FLOOR && pd > 0.0 && max_outside <= CONTAINMENT_TOL,
    }
}

/// Tag on an element edge that lies on the box or on an interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeTag {
    Box(u8),
    Interface(usize),
}

/// A piece of a background element after all level sets have been applied.
#[derive(Debug, Clone)]
pub struct Piece {
    pub element: PhysicalElement,
    pub signature: RegionSignature,
    pub tags: Vec<Option<EdgeTag>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PieceFailure {
    pub levelset: usize,
    pub error: CutError,
}

/// Outcome of cutting one element by one level set.
pub enum CutOutcome {
    Uncut(i8),
    Split(CutTopology, InterfaceElement, Vec<SubElement>),
}

/// Samples below this fraction of the largest sample count as touching the zero set.
pub const TOUCH_TOL: f64 = 1e-10;

pub fn cut_element(el: &PhysicalElement, ls: &LevelSet) -> Result<CutOutcome, CutError> {
    let samples = sample_values(el, ls);
    let tiny = TOUCH_TOL * samples.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let mut firm = samples.iter().filter(|v| v.abs() > tiny).map(|&v| sign_of(v));
    if let Some(s) = firm.next() {
        // zero set only grazes a vertex or an edge
        if firm.all(|t| t == s) {
            return Ok(CutOutcome::Uncut(s));
        }
    }
    match detect_from_samples(el, &samples) {
        CutStatus::Inside => Ok(CutOutcome::Uncut(-1)),
        CutStatus::Outside => Ok(CutOutcome::Uncut(1)),
        CutStatus::Complex => Err(CutError::Complex),
        CutStatus::Cut => {
            let topo = classify_signs(el.shape, &corner_signs(el, ls_corner_values(el, &samples)))?;
            let iface = reconstruct_interface(el, ls, &topo)?;
            let subs = decompose(el, &topo, &iface)?;
            Ok(CutOutcome::Split(topo, iface, subs))
        }
    }
}

/// Apply every level set in order, recursing into sub-elements. Pieces that
/// match a void pattern for every completion of their signature are dropped early.
pub fn decompose_all(
    el: &PhysicalElement,
    tags: Vec<Option<EdgeTag>>,
    levelsets: &[LevelSet],
    prune: &[SignPattern],
) -> Result<Vec<Piece>, PieceFailure> {
    let mut pieces = vec![Piece { element: el.clone(), signature: RegionSignature::default(), tags }];
    for (i, ls) in levelsets.iter().enumerate() {
        let mut next = Vec::with_capacity(pieces.len() + 2);
        for piece in pieces {
            match cut_element(&piece.element, ls).map_err(|error| PieceFailure { levelset: i, error })? {
                CutOutcome::Uncut(s) => {
                    let mut p = piece;
                    p.signature.push(s);
                    next.push(p);
                }
                CutOutcome::Split(_, _, subs) => {
                    for sub in subs {
                        let mut sig = piece.signature.clone();
                        sig.push(sub.side);
                        let tags = sub
                            .edge_origin
                            .iter()
                            .map(|o| match o {
                                EdgeOrigin::Parent(e) => piece.tags[*e],
                                EdgeOrigin::Interface => Some(EdgeTag::Interface(i)),
                                EdgeOrigin::Internal => None,
                            })
                            .collect();
                        next.push(Piece { element: sub.element, signature: sig, tags });
                    }
                }
            }
        }
        next.retain(|p| !prune.iter().any(|pat| pat.matches_all_completions(&p.signature)));
        pieces = next;
    }
    Ok(pieces)
}

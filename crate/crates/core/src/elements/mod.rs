//! Lagrange triangles and quadrilaterals of order 1..=6.
//!
//! Node order: corners counterclockwise, then the interior nodes of each edge
//! running from corner `e` to corner `e+1`, then interior nodes row by row.

pub mod quadrature;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{LevelSet, Mat2, Point, Vec2};
pub use quadrature::{gauss_legendre, quadrature, tabulate, QuadratureRule, Tabulation};

pub const MAX_ORDER: u8 = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElementError {
    #[error("non-positive Jacobian determinant {det:e} at reference point ({xi}, {eta})")]
    InvalidElement { det: f64, xi: f64, eta: f64 },
    #[error("inverse map did not converge")]
    NoConvergence,
    #[error("point lies outside the element (distance {0:e} in reference space)")]
    OutsideElement(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Tri,
    Quad,
}

impl Shape {
    pub fn n_corners(self) -> usize {
        match self {
            Shape::Tri => 3,
            Shape::Quad => 4,
        }
    }

    pub fn ref_area(self) -> f64 {
        match self {
            Shape::Tri => 0.5,
            Shape::Quad => 4.0,
        }
    }

    pub fn n_nodes(self, order: u8) -> usize {
        let p = order as usize;
        match self {
            Shape::Tri => (p + 1) * (p + 2) / 2,
            Shape::Quad => (p + 1) * (p + 1),
        }
    }

    pub fn corner(self, k: usize) -> Point {
        match self {
            Shape::Tri => [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)][k],
            Shape::Quad => [
                Point::new(-1.0, -1.0),
                Point::new(1.0, -1.0),
                Point::new(1.0, 1.0),
                Point::new(-1.0, 1.0),
            ][k],
        }
    }

    pub fn centroid(self) -> Point {
        match self {
            Shape::Tri => Point::new(1.0 / 3.0, 1.0 / 3.0),
            Shape::Quad => Point::origin(),
        }
    }

    /// How far `xi` lies outside the closed reference domain (0 when inside).
    pub fn outside_distance(self, xi: &Point) -> f64 {
        match self {
            Shape::Quad => (xi.x.abs() - 1.0).max(xi.y.abs() - 1.0).max(0.0),
            Shape::Tri => (-xi.x).max(-xi.y).max(xi.x + xi.y - 1.0).max(0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Tri => "tri",
            Shape::Quad => "quad",
        }
    }

    pub fn parse(s: &str) -> Option<Shape> {
        match s {
            "tri" => Some(Shape::Tri),
            "quad" => Some(Shape::Quad),
            _ => None,
        }
    }
}

/// Lattice `(i, j)` of every node in local order.
pub fn lattice(shape: Shape, order: u8) -> Vec<(usize, usize)> {
    let p = order as usize;
    let mut out = Vec::with_capacity(shape.n_nodes(order));
    match shape {
        Shape::Quad => {
            out.extend([(0, 0), (p, 0), (p, p), (0, p)]);
            for k in 1..p {
                out.push((k, 0));
            }
            for k in 1..p {
                out.push((p, k));
            }
            for k in 1..p {
                out.push((p - k, p));
            }
            for k in 1..p {
                out.push((0, p - k));
            }
            for j in 1..p {
                for i in 1..p {
                    out.push((i, j));
                }
            }
        }
        Shape::Tri => {
            out.extend([(0, 0), (p, 0), (0, p)]);
            for k in 1..p {
                out.push((k, 0));
            }
            for k in 1..p {
                out.push((p - k, k));
            }
            for k in 1..p {
                out.push((0, p - k));
            }
            for j in 1..p {
                for i in 1..p - j {
                    out.push((i, j));
                }
            }
        }
    }
    out
}

pub fn lattice_point(shape: Shape, order: u8, (i, j): (usize, usize)) -> Point {
    let p = order as f64;
    match shape {
        Shape::Quad => Point::new(-1.0 + 2.0 * i as f64 / p, -1.0 + 2.0 * j as f64 / p),
        Shape::Tri => Point::new(i as f64 / p, j as f64 / p),
    }
}

/// Values and derivatives of the equispaced Lagrange basis on [0, 1].
pub fn lagrange_1d(order: usize, t: f64, vals: &mut [f64], ders: &mut [f64]) {
    let p = order as f64;
    for k in 0..=order {
        let tk = k as f64 / p;
        let mut v = 1.0;
        let mut d = 0.0;
        for m in 0..=order {
            if m == k {
                continue;
            }
            let den = tk - m as f64 / p;
            let f = (t - m as f64 / p) / den;
            d = d * f + v / den;
            v *= f;
        }
        vals[k] = v;
        ders[k] = d;
    }
}

/// `prod_{k<n} (p l - k) / (k + 1)` and its derivative for n = 0..=p.
fn simplex_factors(order: usize, l: f64, vals: &mut [f64; 7], ders: &mut [f64; 7]) {
    let p = order as f64;
    vals[0] = 1.0;
    ders[0] = 0.0;
    for n in 1..=order {
        let f = (p * l - (n - 1) as f64) / n as f64;
        ders[n] = ders[n - 1] * f + vals[n - 1] * p / n as f64;
        vals[n] = vals[n - 1] * f;
    }
}

/// Reference element with its node coordinates.
#[derive(Debug)]
pub struct ReferenceElement {
    pub shape: Shape,
    pub order: u8,
    pub nodes: Vec<Point>,
    pub lattice: Vec<(usize, usize)>,
    edges: Vec<Vec<usize>>,
}

impl ReferenceElement {
    fn build(shape: Shape, order: u8) -> Self {
        let lat = lattice(shape, order);
        let nodes = lat.iter().map(|&ij| lattice_point(shape, order, ij)).collect();
        let p = order as usize;
        let nc = shape.n_corners();
        let edges = (0..nc)
            .map(|e| {
                let mut v = vec![e];
                v.extend((0..p - 1).map(|k| nc + e * (p - 1) + k));
                v.push((e + 1) % nc);
                v
            })
            .collect();
        ReferenceElement { shape, order, nodes, lattice: lat, edges }
    }

    /// Shared instance for `shape` and `order` (1..=6).
    pub fn get(shape: Shape, order: u8) -> &'static ReferenceElement {
        static CACHE: OnceLock<Vec<ReferenceElement>> = OnceLock::new();
        assert!((1..=MAX_ORDER).contains(&order), "element order {order} out of range");
        let all = CACHE.get_or_init(|| {
            [Shape::Tri, Shape::Quad]
                .into_iter()
                .flat_map(|s| (1..=MAX_ORDER).map(move |p| ReferenceElement::build(s, p)))
                .collect()
        });
        let base = if shape == Shape::Tri { 0 } else { MAX_ORDER as usize };
        &all[base + order as usize - 1]
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Local node indices along edge `e`, from corner `e` to corner `e+1`.
    pub fn edge_nodes(&self, e: usize) -> &[usize] {
        &self.edges[e]
    }

    pub fn eval_into(&self, xi: &Point, vals: &mut [f64], grads: &mut [Vec2]) {
        let p = self.order as usize;
        match self.shape {
            Shape::Quad => {
                let (mut lu, mut du, mut lv, mut dv) = ([0.0; 7], [0.0; 7], [0.0; 7], [0.0; 7]);
                lagrange_1d(p, 0.5 * (xi.x + 1.0), &mut lu, &mut du);
                lagrange_1d(p, 0.5 * (xi.y + 1.0), &mut lv, &mut dv);
                for (n, &(i, j)) in self.lattice.iter().enumerate() {
                    vals[n] = lu[i] * lv[j];
                    grads[n] = Vec2::new(0.5 * du[i] * lv[j], 0.5 * lu[i] * dv[j]);
                }
            }
            Shape::Tri => {
                let (mut a, mut da, mut b, mut db, mut c, mut dc) =
                    ([0.0; 7], [0.0; 7], [0.0; 7], [0.0; 7], [0.0; 7], [0.0; 7]);
                simplex_factors(p, xi.x, &mut a, &mut da);
                simplex_factors(p, xi.y, &mut b, &mut db);
                simplex_factors(p, 1.0 - xi.x - xi.y, &mut c, &mut dc);
                for (n, &(i, j)) in self.lattice.iter().enumerate() {
                    let k = p - i - j;
                    vals[n] = a[i] * b[j] * c[k];
                    grads[n] = Vec2::new(
                        da[i] * b[j] * c[k] - a[i] * b[j] * dc[k],
                        a[i] * db[j] * c[k] - a[i] * b[j] * dc[k],
                    );
                }
            }
        }
    }

    pub fn shape_values(&self, xi: &Point) -> (Vec<f64>, Vec<Vec2>) {
        let mut v = vec![0.0; self.n_nodes()];
        let mut g = vec![Vec2::zeros(); self.n_nodes()];
        self.eval_into(xi, &mut v, &mut g);
        (v, g)
    }

    pub fn values(&self, xi: &Point) -> Vec<f64> {
        self.shape_values(xi).0
    }
}

/// Position, Jacobian `dx/dxi` and its determinant at one reference point.
#[derive(Debug, Clone, Copy)]
pub struct MapPoint {
    pub x: Point,
    pub jac: Mat2,
    pub det: f64,
}

/// Isoparametric element placed in physical space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalElement {
    pub shape: Shape,
    pub order: u8,
    pub nodes: Vec<Point>,
}

pub fn map_with(nodes: &[Point], vals: &[f64], grads: &[Vec2]) -> MapPoint {
    let mut x = Vec2::zeros();
    let mut jac = Mat2::zeros();
    for ((p, &v), g) in nodes.iter().zip(vals).zip(grads) {
        x += p.coords * v;
        jac += p.coords * g.transpose();
    }
    MapPoint { x: Point::from(x), jac, det: jac.determinant() }
}

impl PhysicalElement {
    pub fn new(shape: Shape, order: u8, nodes: Vec<Point>) -> Self {
        debug_assert_eq!(nodes.len(), shape.n_nodes(order));
        PhysicalElement { shape, order, nodes }
    }

    /// Straight-sided element: lattice placed by the affine or bilinear corner map.
    pub fn from_corners(shape: Shape, order: u8, corners: &[Point]) -> Self {
        let re = ReferenceElement::get(shape, order);
        let nodes = re.nodes.iter().map(|xi| corner_map(shape, corners, xi)).collect();
        PhysicalElement { shape, order, nodes }
    }

    pub fn reference(&self) -> &'static ReferenceElement {
        ReferenceElement::get(self.shape, self.order)
    }

    pub fn corners(&self) -> &[Point] {
        &self.nodes[..self.shape.n_corners()]
    }

    /// Largest pairwise corner distance.
    pub fn size(&self) -> f64 {
        corner_size(self.corners())
    }

    pub fn map(&self, xi: &Point) -> MapPoint {
        let (v, g) = self.reference().shape_values(xi);
        map_with(&self.nodes, &v, &g)
    }

    pub fn map_checked(&self, xi: &Point) -> Result<MapPoint, ElementError> {
        let m = self.map(xi);
        if m.det <= 0.0 {
            return Err(ElementError::InvalidElement { det: m.det, xi: xi.x, eta: xi.y });
        }
        Ok(m)
    }

    pub fn bbox(&self) -> (Point, Point) {
        bbox(&self.nodes)
    }

    pub fn inverse_map(&self, x: &Point) -> Result<Point, ElementError> {
        let (lo, hi) = self.bbox();
        let pad = 0.1 * (hi - lo).norm().max(f64::MIN_POSITIVE);
        if x.x < lo.x - pad || x.x > hi.x + pad || x.y < lo.y - pad || x.y > hi.y + pad {
            return Err(ElementError::OutsideElement(f64::INFINITY));
        }
        let tol = 1e-12 * self.size().max(1.0);
        let mut xi = self.shape.centroid();
        for _ in 0..30 {
            let m = self.map(&xi);
            let r = m.x - x;
            if r.norm() < tol {
                let d = self.shape.outside_distance(&xi);
                if d > 1e-9 {
                    return Err(ElementError::OutsideElement(d));
                }
                return Ok(xi);
            }
            let Some(inv) = m.jac.try_inverse() else {
                return Err(ElementError::NoConvergence);
            };
            let step = inv * r;
            xi -= step;
            // keep iterates in a generous neighbourhood of the domain
            xi.x = xi.x.clamp(-3.0, 3.0);
            xi.y = xi.y.clamp(-3.0, 3.0);
        }
        Err(ElementError::NoConvergence)
    }

    /// Area by quadrature of the Jacobian determinant.
    pub fn area(&self) -> f64 {
        let tab = tabulate(self.shape, self.order, 2 * self.order as u32 + 2);
        (0..tab.rule.len())
            .map(|q| tab.rule.weights[q] * map_with(&self.nodes, tab.values_at(q), tab.grads_at(q)).det)
            .sum()
    }

    /// Minimum determinant over the quadrature points of `degree` and the nodes.
    pub fn min_det(&self, degree: u32) -> f64 {
        let tab = tabulate(self.shape, self.order, degree);
        let mut m = f64::INFINITY;
        for q in 0..tab.rule.len() {
            m = m.min(map_with(&self.nodes, tab.values_at(q), tab.grads_at(q)).det);
        }
        for xi in &self.reference().nodes {
            m = m.min(self.map(xi).det);
        }
        m
    }

    pub fn validate(&self) -> Result<(), ElementError> {
        let tab = tabulate(self.shape, self.order, 2 * self.order as u32);
        for q in 0..tab.rule.len() {
            let m = map_with(&self.nodes, tab.values_at(q), tab.grads_at(q));
            if m.det <= 0.0 {
                let xi = tab.rule.points[q];
                return Err(ElementError::InvalidElement { det: m.det, xi: xi.x, eta: xi.y });
            }
        }
        Ok(())
    }

    /// Exact level-set values at the nodes; `sum N_i phi_i` is the interpolant.
    pub fn interpolate_levelset(&self, ls: &LevelSet) -> Vec<f64> {
        self.nodes.iter().map(|x| ls.eval(x)).collect()
    }

    /// True when all nodes coincide with the corner map (within `tol * size`).
    pub fn is_straight(&self) -> bool {
        let corners = self.corners();
        let tol = 1e-12 * self.size();
        self.reference()
            .nodes
            .iter()
            .zip(&self.nodes)
            .all(|(xi, x)| (corner_map(self.shape, corners, xi) - x).norm() <= tol)
    }

    /// Default stiffness quadrature degree.
    pub fn default_degree(&self) -> u32 {
        let p = self.order as u32;
        if self.is_straight() {
            2 * p
        } else {
            2 * p + 2
        }
    }
}

pub fn corner_map(shape: Shape, c: &[Point], xi: &Point) -> Point {
    match shape {
        Shape::Tri => Point::from(c[0].coords * (1.0 - xi.x - xi.y) + c[1].coords * xi.x + c[2].coords * xi.y),
        Shape::Quad => {
            let (u, v) = (0.5 * (1.0 + xi.x), 0.5 * (1.0 + xi.y));
            Point::from(
                c[0].coords * ((1.0 - u) * (1.0 - v))
                    + c[1].coords * (u * (1.0 - v))
                    + c[2].coords * (u * v)
                    + c[3].coords * ((1.0 - u) * v),
            )
        }
    }
}

pub fn corner_size(c: &[Point]) -> f64 {
    let mut h: f64 = 0.0;
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            h = h.max((c[i] - c[j]).norm());
        }
    }
    h
}

pub fn bbox(pts: &[Point]) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

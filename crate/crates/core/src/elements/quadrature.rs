use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use super::{ReferenceElement, Shape};
use crate::geometry::{Point, Vec2};

/// Reference-space quadrature rule exact to `degree`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub const MAX_DEGREE: u32 = 40;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

fn build(shape: Shape, degree: u32) -> QuadratureRule {
    match shape {
        Shape::Quad => {
            let n = (degree as usize + 2) / 2;
            let (x, w) = gauss_legendre(n.max(1));
            let mut points = Vec::with_capacity(n * n);
            let mut weights = Vec::with_capacity(n * n);
            for j in 0..x.len() {
                for i in 0..x.len() {
                    points.push(Point::new(x[i], x[j]));
                    weights.push(w[i] * w[j]);
                }
            }
            QuadratureRule { points, weights, degree }
        }
        Shape::Tri => {
            if degree <= 1 {
                return QuadratureRule {
                    points: vec![Point::new(1.0 / 3.0, 1.0 / 3.0)],
                    weights: vec![0.5],
                    degree,
                };
            }
            // Collapsed tensor rule: (u, v) in [0,1]^2 -> (u, (1-u) v).
            let n = (degree as usize + 3) / 2;
            let (x, w) = gauss_legendre(n);
            let mut points = Vec::with_capacity(n * n);
            let mut weights = Vec::with_capacity(n * n);
            for i in 0..n {
                let u = 0.5 * (x[i] + 1.0);
                for j in 0..n {
                    let v = 0.5 * (x[j] + 1.0);
                    points.push(Point::new(u, (1.0 - u) * v));
                    weights.push(0.25 * w[i] * w[j] * (1.0 - u));
                }
            }
            QuadratureRule { points, weights, degree }
        }
    }
}

type RuleKey = (Shape, u32);
type TabKey = (Shape, u8, u32);

fn rule_cache() -> &'static RwLock<HashMap<RuleKey, Arc<QuadratureRule>>> {
    static C: OnceLock<RwLock<HashMap<RuleKey, Arc<QuadratureRule>>>> = OnceLock::new();
    C.get_or_init(Default::default)
}

/// Memoized rule for `shape` exact to `degree` (clamped to the supported maximum).
pub fn quadrature(shape: Shape, degree: u32) -> Arc<QuadratureRule> {
    let degree = degree.min(MAX_DEGREE);
    if let Some(r) = rule_cache().read().unwrap().get(&(shape, degree)) {
        return r.clone();
    }
    let rule = Arc::new(build(shape, degree));
    rule_cache()
        .write()
        .unwrap()
        .entry((shape, degree))
        .or_insert(rule)
        .clone()
}

/// Shape values and reference gradients of one element type at the points of a rule.
#[derive(Debug)]
pub struct Tabulation {
    pub rule: Arc<QuadratureRule>,
    pub n_nodes: usize,
    /// `values[q * n_nodes + i]`
    pub values: Vec<f64>,
    pub grads: Vec<Vec2>,
}

impl Tabulation {
    pub fn values_at(&self, q: usize) -> &[f64] {
        &self.values[q * self.n_nodes..(q + 1) * self.n_nodes]
    }

    pub fn grads_at(&self, q: usize) -> &[Vec2] {
        &self.grads[q * self.n_nodes..(q + 1) * self.n_nodes]
    }
}

fn tab_cache() -> &'static RwLock<HashMap<TabKey, Arc<Tabulation>>> {
    static C: OnceLock<RwLock<HashMap<TabKey, Arc<Tabulation>>>> = OnceLock::new();
    C.get_or_init(Default::default)
}

pub fn tabulate(shape: Shape, order: u8, degree: u32) -> Arc<Tabulation> {
    let degree = degree.min(MAX_DEGREE);
    let key = (shape, order, degree);
    if let Some(t) = tab_cache().read().unwrap().get(&key) {
        return t.clone();
    }
    let rule = quadrature(shape, degree);
    let re = ReferenceElement::get(shape, order);
    let n = re.n_nodes();
    let mut values = vec![0.0; rule.len() * n];
    let mut grads = vec![Vec2::zeros(); rule.len() * n];
    for (q, xi) in rule.points.iter().enumerate() {
        re.eval_into(xi, &mut values[q * n..(q + 1) * n], &mut grads[q * n..(q + 1) * n]);
    }
    let tab = Arc::new(Tabulation { rule, n_nodes: n, values, grads });
    tab_cache().write().unwrap().entry(key).or_insert(tab).clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_quad(a: u32, b: u32) -> f64 {
        let m = |k: u32| if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
        m(a) * m(b)
    }

    // int_T x^a y^b = a! b! / (a+b+2)!
    fn monomial_tri(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn small_rules() {
        let q = quadrature(Shape::Quad, 1);
        assert_eq!(q.len(), 1);
        assert_eq!(q.weights[0], 4.0);
        let q = quadrature(Shape::Quad, 3);
        assert_eq!(q.len(), 4);
        for (p, w) in q.points.iter().zip(&q.weights) {
            assert!((p.x.abs() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
            assert!((w - 1.0).abs() < 1e-14);
        }
        let t = quadrature(Shape::Tri, 1);
        assert_eq!(t.len(), 1);
        assert_eq!(t.weights[0], 0.5);
        assert_eq!(t.points[0], Point::new(1.0 / 3.0, 1.0 / 3.0));
    }

    #[test]
    fn monomials_integrated_exactly() {
        for d in 0..=MAX_DEGREE {
            let q = quadrature(Shape::Quad, d);
            let t = quadrature(Shape::Tri, d);
            assert!(t.weights.iter().all(|&w| w > 0.0));
            for a in 0..=d {
                let b = d - a;
                let iq: f64 = q.points.iter().zip(&q.weights).map(|(p, w)| w * p.x.powi(a as i32) * p.y.powi(b as i32)).sum();
                assert!((iq - monomial_quad(a, b)).abs() < 1e-12, "quad d={d} a={a}");
                let it: f64 = t.points.iter().zip(&t.weights).map(|(p, w)| w * p.x.powi(a as i32) * p.y.powi(b as i32)).sum();
                let ex = monomial_tri(a, b);
                assert!((it - ex).abs() < 1e-12, "tri d={d} a={a}: {it} vs {ex}");
            }
        }
    }

    #[test]
    fn legendre_nodes_are_sorted_and_sum_to_two() {
        for n in 1..=21 {
            let (x, w) = gauss_legendre(n);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
    }
}

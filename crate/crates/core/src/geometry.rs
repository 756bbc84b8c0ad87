//! Level-set primitives, curvature and sign regions.

use nalgebra::{Matrix2, Matrix3, Point2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = Point2<f64>;
pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Gradient norm below which a level set is treated as singular.
pub const GRADIENT_CUTOFF: f64 = 1e-14;
/// Values closer to zero than this count as lying on the interface.
pub const ON_INTERFACE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("gradient vanishes at ({0}, {1})")]
    SingularPoint(f64, f64),
    #[error("point ({x}, {y}) lies on the zero set of level set {index}")]
    OnInterface { index: usize, x: f64, y: f64 },
    #[error("invalid level set parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid sign pattern {0:?}")]
    InvalidPattern(String),
}

/// An implicit primitive. Negative values are "inside".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LevelSet {
    /// `|x - c| - r`
    Circle { cx: f64, cy: f64, r: f64 },
    /// `a (x - x0)^2 + b (y - y0)^2 - r`
    Ellipse {
        a: f64,
        b: f64,
        x0: f64,
        #[serde(default)]
        y0: f64,
        r: f64,
    },
    /// `n . (x - p)`
    Halfplane { px: f64, py: f64, nx: f64, ny: f64 },
    /// `s g(x) - y` with `g` given by ascending coefficients.
    Graph { coeffs: Vec<f64>, sign: f64 },
}

impl LevelSet {
    pub fn circle(cx: f64, cy: f64, r: f64) -> Self {
        LevelSet::Circle { cx, cy, r }
    }

    pub fn ellipse(a: f64, b: f64, x0: f64, r: f64) -> Self {
        LevelSet::Ellipse { a, b, x0, y0: 0.0, r }
    }

    pub fn halfplane(px: f64, py: f64, nx: f64, ny: f64) -> Self {
        LevelSet::Halfplane { px, py, nx, ny }
    }

    pub fn graph(coeffs: Vec<f64>, sign: f64) -> Self {
        LevelSet::Graph { coeffs, sign }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: &str| Err(GeometryError::InvalidParameters(m.to_string()));
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            LevelSet::Circle { cx, cy, r } => {
                if !finite(&[*cx, *cy, *r]) || *r <= 0.0 {
                    return bad("circle needs finite center and r > 0");
                }
            }
            LevelSet::Ellipse { a, b, x0, y0, r } => {
                if !finite(&[*a, *b, *x0, *y0, *r]) || *r <= 0.0 || *a <= 0.0 || *b <= 0.0 {
                    return bad("ellipse needs a, b, r > 0");
                }
            }
            LevelSet::Halfplane { px, py, nx, ny } => {
                if !finite(&[*px, *py, *nx, *ny]) {
                    return bad("halfplane parameters must be finite");
                }
                if ((nx * nx + ny * ny).sqrt() - 1.0).abs() > 1e-12 {
                    return bad("halfplane normal must have unit length");
                }
            }
            LevelSet::Graph { coeffs, sign } => {
                if coeffs.is_empty() || !finite(coeffs) {
                    return bad("graph needs finite coefficients");
                }
                if *sign != 1.0 && *sign != -1.0 {
                    return bad("graph sign must be +1 or -1");
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            LevelSet::Circle { cx, cy, r } => ((x.x - cx).powi(2) + (x.y - cy).powi(2)).sqrt() - r,
            LevelSet::Ellipse { a, b, x0, y0, r } => {
                a * (x.x - x0).powi(2) + b * (x.y - y0).powi(2) - r
            }
            LevelSet::Halfplane { px, py, nx, ny } => nx * (x.x - px) + ny * (x.y - py),
            LevelSet::Graph { coeffs, sign } => sign * poly(coeffs, x.x).0 - x.y,
        }
    }

    /// Value and gradient without the singularity check.
    pub fn eval_gradient(&self, x: &Point) -> (f64, Vec2) {
        match self {
            LevelSet::Circle { cx, cy, r } => {
                let d = Vec2::new(x.x - cx, x.y - cy);
                let n = d.norm();
                let g = if n > 0.0 { d / n } else { Vec2::zeros() };
                (n - r, g)
            }
            LevelSet::Ellipse { a, b, x0, y0, r } => {
                let (dx, dy) = (x.x - x0, x.y - y0);
                (a * dx * dx + b * dy * dy - r, Vec2::new(2.0 * a * dx, 2.0 * b * dy))
            }
            LevelSet::Halfplane { px, py, nx, ny } => {
                (nx * (x.x - px) + ny * (x.y - py), Vec2::new(*nx, *ny))
            }
            LevelSet::Graph { coeffs, sign } => {
                let (g, dg, _) = poly(coeffs, x.x);
                (sign * g - x.y, Vec2::new(sign * dg, -1.0))
            }
        }
    }

    pub fn gradient_hessian(&self, x: &Point) -> Result<(Vec2, Mat2), GeometryError> {
        let (grad, hess) = match self {
            LevelSet::Circle { cx, cy, .. } => {
                let d = Vec2::new(x.x - cx, x.y - cy);
                let n = d.norm();
                if n < GRADIENT_CUTOFF {
                    return Err(GeometryError::SingularPoint(x.x, x.y));
                }
                let g = d / n;
                (g, (Mat2::identity() - g * g.transpose()) / n)
            }
            LevelSet::Ellipse { a, b, x0, y0, .. } => (
                Vec2::new(2.0 * a * (x.x - x0), 2.0 * b * (x.y - y0)),
                Mat2::new(2.0 * a, 0.0, 0.0, 2.0 * b),
            ),
            LevelSet::Halfplane { nx, ny, .. } => (Vec2::new(*nx, *ny), Mat2::zeros()),
            LevelSet::Graph { coeffs, sign } => {
                let (_, dg, ddg) = poly(coeffs, x.x);
                (Vec2::new(sign * dg, -1.0), Mat2::new(sign * ddg, 0.0, 0.0, 0.0))
            }
        };
        if grad.norm() < GRADIENT_CUTOFF {
            return Err(GeometryError::SingularPoint(x.x, x.y));
        }
        Ok((grad, hess))
    }

    pub fn mean_curvature(&self, x: &Point) -> Result<f64, GeometryError> {
        let (g, h) = self.gradient_hessian(x)?;
        Ok(mean_curvature_2d(&g, &h))
    }
}

/// Horner evaluation of a polynomial and its first two derivatives.
fn poly(coeffs: &[f64], x: f64) -> (f64, f64, f64) {
    let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
    for &c in coeffs.iter().rev() {
        ddp = ddp * x + 2.0 * dp;
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp, ddp)
}

pub fn mean_curvature_2d(g: &Vec2, h: &Mat2) -> f64 {
    let (px, py) = (g.x, g.y);
    let num = h[(0, 0)] * py * py - 2.0 * px * py * h[(0, 1)] + h[(1, 1)] * px * px;
    num / g.norm().powi(3)
}

pub fn mean_curvature_3d(g: &Vector3<f64>, h: &Matrix3<f64>) -> f64 {
    let (px, py, pz) = (g.x, g.y, g.z);
    let num = (h[(1, 1)] + h[(2, 2)]) * px * px
        + (h[(0, 0)] + h[(2, 2)]) * py * py
        + (h[(0, 0)] + h[(1, 1)]) * pz * pz
        - 2.0 * px * py * h[(0, 1)]
        - 2.0 * px * pz * h[(0, 2)]
        - 2.0 * py * pz * h[(1, 2)];
    0.5 * num / g.norm().powi(3)
}

/// `|x - c| - r` in three dimensions; only used to exercise the 3D curvature formula.
#[derive(Debug, Clone, Copy)]
pub struct Sphere {
    pub center: Vector3<f64>,
    pub r: f64,
}

impl Sphere {
    pub fn eval(&self, x: &Vector3<f64>) -> f64 {
        (x - self.center).norm() - self.r
    }

    pub fn gradient_hessian(&self, x: &Vector3<f64>) -> Result<(Vector3<f64>, Matrix3<f64>), GeometryError> {
        let d = x - self.center;
        let n = d.norm();
        if n < GRADIENT_CUTOFF {
            return Err(GeometryError::SingularPoint(x.x, x.y));
        }
        let g = d / n;
        Ok((g, (Matrix3::identity() - g * g.transpose()) / n))
    }

    pub fn mean_curvature(&self, x: &Vector3<f64>) -> Result<f64, GeometryError> {
        let (g, h) = self.gradient_hessian(x)?;
        Ok(mean_curvature_3d(&g, &h))
    }
}

/// Sign used for nodal data: zero counts as positive.
#[inline]
pub fn sign_of(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// Per-level-set signs identifying a sub-region.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RegionSignature(pub Vec<i8>);

impl RegionSignature {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, s: i8) {
        self.0.push(s);
    }

    /// Textual form, e.g. `+-+`; the empty signature is written `~`.
    pub fn to_text(&self) -> String {
        if self.0.is_empty() {
            return "~".to_string();
        }
        self.0.iter().map(|&s| if s < 0 { '-' } else { '+' }).collect()
    }

    pub fn from_text(s: &str) -> Result<Self, GeometryError> {
        if s == "~" {
            return Ok(RegionSignature(Vec::new()));
        }
        s.chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                _ => Err(GeometryError::InvalidPattern(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(RegionSignature)
    }
}

pub fn region_signature(levelsets: &[LevelSet], x: &Point) -> Result<RegionSignature, GeometryError> {
    let mut sig = RegionSignature::default();
    for (index, ls) in levelsets.iter().enumerate() {
        let v = ls.eval(x);
        if v.abs() < ON_INTERFACE_TOL {
            return Err(GeometryError::OnInterface { index, x: x.x, y: x.y });
        }
        sig.push(sign_of(v));
    }
    Ok(sig)
}

/// Sign pattern with `?` wildcards, e.g. `"?-+"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignPattern(pub Vec<Option<i8>>);

impl SignPattern {
    pub fn parse(s: &str) -> Result<Self, GeometryError> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(Some(1)),
                '-' => Ok(Some(-1)),
                '?' => Ok(None),
                _ => Err(GeometryError::InvalidPattern(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(SignPattern)
    }

    pub fn to_text(&self) -> String {
        self.0
            .iter()
            .map(|s| match s {
                Some(-1) => '-',
                Some(_) => '+',
                None => '?',
            })
            .collect()
    }

    /// Missing trailing entries act as wildcards.
    pub fn matches(&self, sig: &RegionSignature) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(i, p)| p.is_none_or(|p| sig.0.get(i).is_some_and(|&s| s == p)))
    }

    /// True when every completion of a partial signature matches.
    pub fn matches_all_completions(&self, partial: &RegionSignature) -> bool {
        self.0.iter().enumerate().all(|(i, p)| match p {
            None => true,
            Some(p) => partial.0.get(i).is_some_and(|s| s == p),
        })
    }
}

impl Serialize for SignPattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

impl<'de> Deserialize<'de> for SignPattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        SignPattern::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn beam_graph() -> LevelSet {
        LevelSet::graph(vec![2.0 / 5.0, -2.0 / 25.0, 1.0 / 125.0], 1.0)
    }

    #[test]
    fn circle_values() {
        let c = LevelSet::circle(0.0, 0.0, 0.7123);
        assert_relative_eq!(c.eval(&Point::new(0.0, 0.0)), -0.7123);
        assert_eq!(c.eval(&Point::new(0.7123, 0.0)), 0.0);
        let (g, h) = c.gradient_hessian(&Point::new(0.7123, 0.0)).unwrap();
        assert_relative_eq!(g, Vec2::new(1.0, 0.0));
        assert_relative_eq!(h[(1, 1)], 1.0 / 0.7123, epsilon = 1e-12);
        assert_eq!(h[(0, 0)], 0.0);
        assert_eq!(h[(0, 1)], 0.0);
        assert!(matches!(
            c.gradient_hessian(&Point::origin()),
            Err(GeometryError::SingularPoint(..))
        ));
    }

    #[test]
    fn halfplane_is_linear() {
        let l = LevelSet::halfplane(0.0, 30.0, 0.0, 1.0);
        assert_eq!(l.eval(&Point::new(5.0, 30.0)), 0.0);
        let (_, h) = l.gradient_hessian(&Point::new(-3.0, 1.0)).unwrap();
        assert_eq!(h, Mat2::zeros());
        assert_eq!(l.mean_curvature(&Point::new(2.0, 7.0)).unwrap(), 0.0);
    }

    #[test]
    fn graph_derivatives() {
        let (g, _) = beam_graph().gradient_hessian(&Point::new(0.0, 0.3)).unwrap();
        assert_relative_eq!(g.x, -2.0 / 25.0, epsilon = 1e-15);
        assert_eq!(g.y, -1.0);
        assert_relative_eq!(beam_graph().eval(&Point::new(5.0, 0.0)), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn curvature_values() {
        let c = LevelSet::circle(0.0, 0.0, 0.7123);
        assert_relative_eq!(c.mean_curvature(&Point::new(0.7123, 0.0)).unwrap(), 1.0 / 0.7123, epsilon = 1e-12);
        for k in 0..50 {
            let r = 0.1 + k as f64 * (9.9 / 49.0);
            let t = 0.37 * k as f64;
            let x = Point::new(r * t.cos() + 0.0, r * t.sin());
            assert!((c.mean_curvature(&x).unwrap() - 1.0 / r).abs() < 1e-10);
        }
        let s = Sphere { center: Vector3::zeros(), r: 1.0 };
        for r in [0.3, 1.0, 4.5] {
            assert_relative_eq!(s.mean_curvature(&Vector3::new(r, 0.0, 0.0)).unwrap(), 1.0 / r, epsilon = 1e-12);
            let x = Vector3::new(r, -r, 0.5 * r);
            assert_relative_eq!(s.mean_curvature(&x).unwrap(), 1.0 / x.norm(), epsilon = 1e-12);
        }
    }

    #[test]
    fn ellipse_curvature_matches_parametric_formula() {
        // Ellipse x^2/A^2 + y^2/B^2 = 1 at (A, 0) has curvature A / B^2.
        let (a, b, r) = (0.25, 0.75, 0.022);
        let e = LevelSet::ellipse(a, b, 0.5, r);
        let (sa, sb) = ((r / a).sqrt(), (r / b).sqrt());
        let k = e.mean_curvature(&Point::new(0.5 + sa, 0.0)).unwrap();
        assert_relative_eq!(k, sa / (sb * sb), epsilon = 1e-10);
    }

    #[test]
    fn signatures() {
        let c = LevelSet::circle(0.0, 0.0, 0.7123);
        assert_eq!(region_signature(&[c.clone()], &Point::origin()).unwrap().0, vec![-1]);
        assert_eq!(region_signature(&[c.clone()], &Point::new(1.0, 1.0)).unwrap().0, vec![1]);
        let l = LevelSet::halfplane(0.0, 0.0, 1.0, 0.0);
        let sig = region_signature(&[l, c.clone()], &Point::new(0.1, 0.1)).unwrap();
        assert_eq!(sig.0, vec![1, -1]);
        assert!(matches!(
            region_signature(&[c], &Point::new(0.7123, 0.0)),
            Err(GeometryError::OnInterface { index: 0, .. })
        ));
    }

    #[test]
    fn patterns() {
        let p = SignPattern::parse("?-").unwrap();
        assert!(p.matches(&RegionSignature(vec![1, -1])));
        assert!(!p.matches(&RegionSignature(vec![1, 1])));
        assert!(SignPattern::parse("?").unwrap().matches(&RegionSignature(vec![-1, 1])));
        assert!(SignPattern::parse("x").is_err());
        assert!(p.matches_all_completions(&RegionSignature(vec![1, -1])));
        assert!(!p.matches_all_completions(&RegionSignature(vec![1])));
        assert!(SignPattern::parse("-??").unwrap().matches_all_completions(&RegionSignature(vec![-1])));
        let s = RegionSignature(vec![1, -1, -1]);
        assert_eq!(RegionSignature::from_text(&s.to_text()).unwrap(), s);
        assert_eq!(RegionSignature::from_text("~").unwrap(), RegionSignature::default());
    }

    #[test]
    fn validation() {
        assert!(LevelSet::circle(0.0, 0.0, -1.0).validate().is_err());
        assert!(LevelSet::halfplane(0.0, 0.0, 1.0, 1.0).validate().is_err());
        assert!(LevelSet::halfplane(0.0, 0.0, -0.258819, 0.965926).validate().is_err());
        assert!(LevelSet::graph(vec![1.0], 2.0).validate().is_err());
        assert!(beam_graph().validate().is_ok());
    }

    #[test]
    fn json_roundtrip() {
        let ls = vec![beam_graph(), LevelSet::ellipse(0.25, 0.75, 0.5, 0.022)];
        let s = serde_json::to_string(&ls).unwrap();
        let back: Vec<LevelSet> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ls);
        let bad = r#"{"kind":"circle","cx":0,"cy":0,"r":1,"extra":2}"#;
        assert!(serde_json::from_str::<LevelSet>(bad).is_err());
    }
}

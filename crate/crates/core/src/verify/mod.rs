//! Analytic oracles, error norms and convergence studies.

mod cases;
mod study;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::OracleSpec;
use crate::elasticity::{displacement_at, lame_constants, Material};
use crate::elements::{map_with, tabulate};
use crate::geometry::{Point, Vec2};
use crate::meshbuild::ConformingMesh;

pub use cases::{
    builtin_case, builtin_cases, spanner_corners, BEAM_ENERGY, BUILTIN_NAMES, HOLE_RADIUS, SPANNER_ENERGY, SPANNER_MODEL_ENERGY,
};
pub use study::{rates, run_convergence_study, StudyReport, StudyRow, CSV_HEADER};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("point at r = {0} lies inside the hole")]
    InsideHole(f64),
    #[error("point at r = {0} lies outside the traction radius")]
    OutsideTractionRadius(f64),
}

/// Kolosov constant for plane strain.
pub fn kolosov_plane_strain(nu: f64) -> f64 {
    3.0 - 4.0 * nu
}

/// Infinite plate with a traction-free circular hole under uniaxial tension in x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoleOracle {
    pub sigma0: f64,
    pub radius: f64,
    pub mu: f64,
    pub kappa: f64,
}

impl HoleOracle {
    pub fn new(sigma0: f64, radius: f64, material: &Material) -> Self {
        let (_, mu) = material.lame();
        HoleOracle { sigma0, radius, mu, kappa: kolosov_plane_strain(material.nu) }
    }

    pub fn displacement(&self, x: &Point) -> Result<Vec2, VerifyError> {
        let r = x.coords.norm();
        if r < self.radius * (1.0 - 1e-12) {
            return Err(VerifyError::InsideHole(r));
        }
        Ok(self.displacement_unchecked(x))
    }

    /// Same formula without the domain check; smooth for any `r > 0`.
    pub fn displacement_unchecked(&self, x: &Point) -> Vec2 {
        let r = x.coords.norm();
        let t = x.y.atan2(x.x);
        let (rr, k) = (self.radius, self.kappa);
        let c = self.sigma0 * rr / (8.0 * self.mu);
        let q = rr / r;
        let ux = r / rr * (k + 1.0) * t.cos() + 2.0 * q * ((1.0 + k) * t.cos() + (3.0 * t).cos())
            - 2.0 * q.powi(3) * (3.0 * t).cos();
        let uy = r / rr * (k - 3.0) * t.sin() + 2.0 * q * ((1.0 - k) * t.sin() + (3.0 * t).sin())
            - 2.0 * q.powi(3) * (3.0 * t).sin();
        Vec2::new(c * ux, c * uy)
    }
}

/// Circular inclusion of radius `a` in a disk of radius `b`, purely radial field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InclusionOracle {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
}

/// `alpha` for inclusion material 1 and matrix material 2.
pub fn inclusion_alpha(a: f64, b: f64, inner: &Material, outer: &Material) -> f64 {
    let (l1, m1) = lame_constants(inner.e, inner.nu).expect("valid material");
    let (l2, m2) = lame_constants(outer.e, outer.nu).expect("valid material");
    (l1 + m1 + m2) * b * b / ((l2 + m2) * a * a + (l1 + m1) * (b * b - a * a) + m2 * b * b)
}

impl InclusionOracle {
    pub fn new(a: f64, b: f64, inner: &Material, outer: &Material) -> Self {
        InclusionOracle { a, b, alpha: inclusion_alpha(a, b, inner, outer) }
    }

    pub fn radial(&self, r: f64, inner: bool) -> f64 {
        let (a, b, al) = (self.a, self.b, self.alpha);
        if inner {
            ((1.0 - b * b / (a * a)) * al + b * b / (a * a)) * r
        } else {
            ((1.0 - b * b / (r * r)) * al + b * b / (r * r)) * r
        }
    }

    pub fn displacement(&self, x: &Point) -> Result<Vec2, VerifyError> {
        let r = x.coords.norm();
        if r > self.b {
            return Err(VerifyError::OutsideTractionRadius(r));
        }
        Ok(self.displacement_branch(x, r <= self.a))
    }

    /// Either branch evaluated anywhere, for quadrature points of curved
    /// elements that stray across the exact interface.
    pub fn displacement_branch(&self, x: &Point, inner: bool) -> Vec2 {
        let r = x.coords.norm();
        if r == 0.0 {
            return Vec2::zeros();
        }
        // u_theta = 0, so u = u_r e_r
        x.coords * (self.radial(r, inner) / r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    Hole(HoleOracle),
    Inclusion(InclusionOracle),
}

impl Oracle {
    pub fn from_spec(spec: &OracleSpec) -> Self {
        match spec {
            OracleSpec::Hole { sigma0, radius, material } => Oracle::Hole(HoleOracle::new(*sigma0, *radius, material)),
            OracleSpec::Inclusion { a, b, inner, outer } => Oracle::Inclusion(InclusionOracle::new(*a, *b, inner, outer)),
        }
    }

    /// Exact field; `side` picks the inclusion branch by the sign of the first
    /// level set, otherwise the radius decides.
    pub fn displacement_unchecked(&self, x: &Point, side: Option<i8>) -> Vec2 {
        match self {
            Oracle::Hole(h) => h.displacement_unchecked(x),
            Oracle::Inclusion(i) => {
                let inner = side.map_or(x.coords.norm() <= i.a, |s| s < 0);
                i.displacement_branch(x, inner)
            }
        }
    }

    /// Exact area of each region sign of the first level set inside a box of area `box_area`.
    pub fn region_areas(&self, box_area: f64) -> Vec<(i8, f64)> {
        match self {
            Oracle::Hole(h) => vec![(1, box_area - std::f64::consts::PI * h.radius * h.radius)],
            Oracle::Inclusion(i) => {
                let disk = std::f64::consts::PI * i.a * i.a;
                vec![(-1, disk), (1, box_area - disk)]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Error {
    pub abs: f64,
    /// Divided by the L2 norm of the exact field.
    pub rel: f64,
}

fn side_of(mesh: &ConformingMesh, e: usize) -> Option<i8> {
    mesh.elements[e].region.0.first().copied()
}

/// `|| u_h - u ||_L2` where `u_h` is given by nodal values.
pub fn l2_error_of(mesh: &ConformingMesh, u: &[f64], exact: impl Fn(&Point, Option<i8>) -> Vec2 + Sync) -> L2Error {
    let parts: Vec<(f64, f64)> = (0..mesh.elements.len())
        .into_par_iter()
        .map(|e| {
            let el = mesh.element(e);
            let ids = &mesh.elements[e].nodes;
            let tab = tabulate(el.shape, el.order, el.default_degree() + 2);
            let side = side_of(mesh, e);
            let (mut err, mut norm) = (0.0, 0.0);
            for q in 0..tab.rule.len() {
                let vals = tab.values_at(q);
                let mp = map_with(&el.nodes, vals, tab.grads_at(q));
                let mut uh = Vec2::zeros();
                for (i, &n) in ids.iter().enumerate() {
                    uh += Vec2::new(u[2 * n], u[2 * n + 1]) * vals[i];
                }
                let ue = exact(&mp.x, side);
                let w = mp.det * tab.rule.weights[q];
                err += (uh - ue).norm_squared() * w;
                norm += ue.norm_squared() * w;
            }
            (err, norm)
        })
        .collect();
    let err: f64 = parts.iter().map(|p| p.0).sum();
    let norm: f64 = parts.iter().map(|p| p.1).sum();
    L2Error { abs: err.sqrt(), rel: if norm > 0.0 { (err / norm).sqrt() } else { 0.0 } }
}

pub fn l2_error(mesh: &ConformingMesh, u: &[f64], oracle: &Oracle) -> L2Error {
    l2_error_of(mesh, u, |x, s| oracle.displacement_unchecked(x, s))
}

/// Nodal values of the exact field. Nodes on the inclusion interface take
/// the branch of the first element that references them; both agree there.
pub fn interpolate_exact(mesh: &ConformingMesh, oracle: &Oracle) -> Vec<f64> {
    let mut side = vec![None; mesh.nodes.len()];
    for (e, el) in mesh.elements.iter().enumerate() {
        for &n in &el.nodes {
            if side[n].is_none() {
                side[n] = Some(side_of(mesh, e));
            }
        }
    }
    let mut u = vec![0.0; 2 * mesh.nodes.len()];
    for (n, p) in mesh.nodes.iter().enumerate() {
        let v = oracle.displacement_unchecked(p, side[n].flatten());
        u[2 * n] = v.x;
        u[2 * n + 1] = v.y;
    }
    u
}

/// L2 distance between the exact field and its nodal interpolant.
pub fn interpolation_error(mesh: &ConformingMesh, oracle: &Oracle) -> L2Error {
    l2_error(mesh, &interpolate_exact(mesh, oracle), oracle)
}

/// Sum over region signs of the first level set of `|area_h - area|`.
pub fn integration_error(mesh: &ConformingMesh, oracle: &Oracle, box_area: f64) -> f64 {
    let areas = mesh.region_areas();
    oracle
        .region_areas(box_area)
        .iter()
        .map(|(s, exact)| {
            let h: f64 = areas.iter().filter(|(sig, _)| sig.0.first() == Some(s)).map(|(_, a)| a).sum();
            (h - exact).abs()
        })
        .sum()
}

/// Stress of the solution at reference point `xi` of element `e`.
pub fn stress_at(mesh: &ConformingMesh, u: &[f64], material: &Material, e: usize, xi: &Point) -> [f64; 3] {
    let (_, du) = displacement_at(mesh, u, e, xi);
    material.stress(&du)
}

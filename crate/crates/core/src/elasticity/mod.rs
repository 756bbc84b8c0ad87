//! Plane-strain linear elasticity on a conforming mesh.

mod condest;

use std::collections::HashMap;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elements::{gauss_legendre, lagrange_1d, map_with, tabulate, PhysicalElement, ReferenceElement};
use crate::geometry::{Point, SignPattern, Vec2};
use crate::meshbuild::{tag_name, ConformingMesh};

pub use condest::{hager_higham, one_norm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElasticityError {
    #[error("Poisson ratio {0} outside [0, 0.5)")]
    InvalidPoisson(f64),
    #[error("Young's modulus must be positive, got {0}")]
    InvalidModulus(f64),
    #[error("no material for region {0}")]
    MissingMaterial(String),
    #[error("unknown boundary group `{0}`")]
    UnknownGroup(String),
    #[error("system is singular or not positive definite")]
    SingularSystem,
    #[error("factorization failed: {0}")]
    FactorizationFailure(String),
    #[error("solve residual {0:e} above tolerance")]
    Residual(f64),
    #[error("point ({0}, {1}) is outside the mesh")]
    OutsideMesh(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    #[serde(rename = "E")]
    pub e: f64,
    pub nu: f64,
}

pub fn lame_constants(e: f64, nu: f64) -> Result<(f64, f64), ElasticityError> {
    if !(e > 0.0) {
        return Err(ElasticityError::InvalidModulus(e));
    }
    if !(0.0..0.5).contains(&nu) {
        return Err(ElasticityError::InvalidPoisson(nu));
    }
    Ok((e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu))))
}

impl Material {
    pub fn new(e: f64, nu: f64) -> Result<Self, ElasticityError> {
        lame_constants(e, nu)?;
        Ok(Material { e, nu })
    }

    /// `(lambda, mu)`
    pub fn lame(&self) -> (f64, f64) {
        lame_constants(self.e, self.nu).expect("validated material")
    }

    /// Stress `[sxx, syy, sxy]` from the displacement gradient `du[a][b] = d u_a / d x_b`.
    pub fn stress(&self, du: &[[f64; 2]; 2]) -> [f64; 3] {
        let (l, m) = self.lame();
        let tr = du[0][0] + du[1][1];
        [l * tr + 2.0 * m * du[0][0], l * tr + 2.0 * m * du[1][1], m * (du[0][1] + du[1][0])]
    }
}

/// Material assigned to every element whose signature matches `region`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionMaterial {
    pub region: SignPattern,
    pub material: Material,
}

pub type VectorField = Arc<dyn Fn(&Point) -> Vec2 + Send + Sync>;
/// Traction from position and outward unit normal.
pub type TractionField = Arc<dyn Fn(&Point, &Vec2) -> Vec2 + Send + Sync>;

#[derive(Clone)]
pub enum Prescribed {
    /// Per-component values; `None` leaves the component free.
    Components([Option<f64>; 2]),
    Field(VectorField),
}

#[derive(Clone)]
pub struct DirichletBc {
    /// Node group name, e.g. `box_left` or `interface_1`.
    pub group: String,
    pub value: Prescribed,
}

/// Traction components as polynomials (ascending coefficients) in the edge
/// coordinate `s = (x - origin) . axis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TractionProfile {
    pub axis: [f64; 2],
    #[serde(default)]
    pub origin: [f64; 2],
    #[serde(default)]
    pub tx: Vec<f64>,
    #[serde(default)]
    pub ty: Vec<f64>,
}

impl TractionProfile {
    pub fn eval(&self, x: &Point) -> Vec2 {
        let s = (x.x - self.origin[0]) * self.axis[0] + (x.y - self.origin[1]) * self.axis[1];
        let poly = |c: &[f64]| c.iter().rev().fold(0.0, |acc, &a| acc * s + a);
        Vec2::new(poly(&self.tx), poly(&self.ty))
    }

    fn degree(&self) -> usize {
        self.tx.len().max(self.ty.len()).saturating_sub(1)
    }
}

#[derive(Clone)]
pub enum TractionLoad {
    Profile(TractionProfile),
    Field(TractionField),
}

#[derive(Clone)]
pub struct NeumannBc {
    /// Edge tag name, e.g. `box_right`.
    pub group: String,
    pub load: TractionLoad,
}

#[derive(Clone, Default)]
pub struct BoundaryConditions {
    pub dirichlet: Vec<DirichletBc>,
    pub neumann: Vec<NeumannBc>,
    pub body_force: Vec2,
}

/// Assembled stiffness with constraints eliminated symmetrically.
pub struct LinearSystem {
    pub n_dofs: usize,
    pub k: SparseColMat<usize, f64>,
    /// Applied loads (body force and tractions).
    pub f: Vec<f64>,
    pub prescribed: Vec<Option<f64>>,
    /// Reduced index of each free dof.
    pub free: Vec<Option<usize>>,
    pub k_free: SparseColMat<usize, f64>,
    pub f_free: Vec<f64>,
    pub element_materials: Vec<Material>,
}

#[derive(Debug, Clone)]
pub struct ElasticitySolution {
    /// Interleaved `[ux0, uy0, ux1, ...]`.
    pub u: Vec<f64>,
    /// `K u - f`, nonzero only at constrained dofs.
    pub reactions: Vec<f64>,
    /// Normwise backward error `|K x - f| / (|K| |x| + |f|)` in the max norm.
    pub residual: f64,
    pub energy: f64,
    pub condition: Option<f64>,
}

pub fn element_materials(mesh: &ConformingMesh, materials: &[RegionMaterial]) -> Result<Vec<Material>, ElasticityError> {
    mesh.elements
        .iter()
        .map(|el| {
            materials
                .iter()
                .find(|m| m.region.matches(&el.region))
                .map(|m| m.material)
                .ok_or_else(|| ElasticityError::MissingMaterial(el.region.to_text()))
        })
        .collect()
}

fn physical_grads(jac: &crate::geometry::Mat2, grads: &[Vec2]) -> Vec<Vec2> {
    let inv_t = jac.try_inverse().expect("invertible element map").transpose();
    grads.iter().map(|g| inv_t * g).collect()
}

fn element_system(el: &PhysicalElement, mat: &Material, f: &Vec2) -> (Vec<f64>, Vec<f64>) {
    let (l, m) = mat.lame();
    let n = el.nodes.len();
    let tab = tabulate(el.shape, el.order, el.default_degree());
    let mut ke = vec![0.0; 4 * n * n];
    let mut fe = vec![0.0; 2 * n];
    for q in 0..tab.rule.len() {
        let mp = map_with(&el.nodes, tab.values_at(q), tab.grads_at(q));
        let w = mp.det * tab.rule.weights[q];
        let g = physical_grads(&mp.jac, tab.grads_at(q));
        let vals = tab.values_at(q);
        for i in 0..n {
            fe[2 * i] += vals[i] * f.x * w;
            fe[2 * i + 1] += vals[i] * f.y * w;
            for j in 0..n {
                let dot = g[i].dot(&g[j]);
                for a in 0..2 {
                    for b in 0..2 {
                        let mut v = l * g[i][a] * g[j][b] + m * g[i][b] * g[j][a];
                        if a == b {
                            v += m * dot;
                        }
                        ke[(2 * i + a) * 2 * n + 2 * j + b] += v * w;
                    }
                }
            }
        }
    }
    (ke, fe)
}

/// Consistent nodal loads of a traction on edge `k` of element `e`.
fn edge_load(mesh: &ConformingMesh, e: usize, k: usize, load: &TractionLoad, f: &mut [f64]) {
    let el = &mesh.elements[e];
    let p = el.order as usize;
    let ids = mesh.edge_nodes(e, k);
    let pts: Vec<Point> = ids.iter().map(|&i| mesh.nodes[i]).collect();
    let extra = match load {
        TractionLoad::Profile(t) => t.degree(),
        TractionLoad::Field(_) => 2 * p,
    };
    // the metric |dx/dt| is not polynomial on curved edges; a few extra points cover it
    let (gx, gw) = gauss_legendre((2 * p + extra + 2) / 2 + 2);
    let mut vals = vec![0.0; p + 1];
    let mut ders = vec![0.0; p + 1];
    for (t, w) in gx.iter().zip(&gw) {
        let t01 = 0.5 * (t + 1.0);
        lagrange_1d(p, t01, &mut vals, &mut ders);
        let mut x = Vec2::zeros();
        let mut dx = Vec2::zeros();
        for (a, pt) in pts.iter().enumerate() {
            x += pt.coords * vals[a];
            dx += pt.coords * ders[a];
        }
        let ds = dx.norm();
        let normal = Vec2::new(dx.y, -dx.x) / ds;
        let x = Point::from(x);
        let tr = match load {
            TractionLoad::Profile(t) => t.eval(&x),
            TractionLoad::Field(g) => g(&x, &normal),
        };
        let jw = 0.5 * w * ds;
        for (a, &id) in ids.iter().enumerate() {
            f[2 * id] += vals[a] * tr.x * jw;
            f[2 * id + 1] += vals[a] * tr.y * jw;
        }
    }
}

fn build_csc(n: usize, trip: &[Triplet<usize, usize, f64>]) -> SparseColMat<usize, f64> {
    SparseColMat::try_new_from_triplets(n, n, trip).expect("valid triplets")
}

pub fn assemble(
    mesh: &ConformingMesh,
    materials: &[RegionMaterial],
    bcs: &BoundaryConditions,
) -> Result<LinearSystem, ElasticityError> {
    let mats = element_materials(mesh, materials)?;
    let n_dofs = 2 * mesh.nodes.len();
    let locals: Vec<(Vec<f64>, Vec<f64>)> = (0..mesh.elements.len())
        .into_par_iter()
        .map(|e| element_system(&mesh.element(e), &mats[e], &bcs.body_force))
        .collect();
    let mut f = vec![0.0; n_dofs];
    let mut trip = Vec::new();
    for (e, (ke, fe)) in locals.iter().enumerate() {
        let nodes = &mesh.elements[e].nodes;
        let nl = 2 * nodes.len();
        let dof = |r: usize| 2 * nodes[r / 2] + r % 2;
        for r in 0..nl {
            f[dof(r)] += fe[r];
            for c in 0..nl {
                trip.push(Triplet::new(dof(r), dof(c), ke[r * nl + c]));
            }
        }
    }
    let tags: HashMap<String, Vec<(usize, usize)>> = {
        let mut m: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        for (e, k, t) in mesh.tagged_boundary_edges() {
            m.entry(tag_name(&t)).or_default().push((e, k));
        }
        m
    };
    for bc in &bcs.neumann {
        let edges = tags.get(&bc.group).ok_or_else(|| ElasticityError::UnknownGroup(bc.group.clone()))?;
        for &(e, k) in edges {
            edge_load(mesh, e, k, &bc.load, &mut f);
        }
    }
    let groups = mesh.groups();
    let mut prescribed = vec![None; n_dofs];
    for bc in &bcs.dirichlet {
        let nodes = groups.get(&bc.group).ok_or_else(|| ElasticityError::UnknownGroup(bc.group.clone()))?;
        for &n in nodes {
            match &bc.value {
                Prescribed::Components(c) => {
                    for a in 0..2 {
                        if let Some(v) = c[a] {
                            prescribed[2 * n + a] = Some(v);
                        }
                    }
                }
                Prescribed::Field(g) => {
                    let v = g(&mesh.nodes[n]);
                    prescribed[2 * n] = Some(v.x);
                    prescribed[2 * n + 1] = Some(v.y);
                }
            }
        }
    }
    let mut free = vec![None; n_dofs];
    let mut n_free = 0;
    for d in 0..n_dofs {
        if prescribed[d].is_none() {
            free[d] = Some(n_free);
            n_free += 1;
        }
    }
    let mut f_free: Vec<f64> = (0..n_dofs).filter(|&d| free[d].is_some()).map(|d| f[d]).collect();
    let mut reduced = Vec::with_capacity(trip.len());
    for t in &trip {
        match (free[t.row], free[t.col], prescribed[t.col]) {
            (Some(r), Some(c), _) => reduced.push(Triplet::new(r, c, t.val)),
            (Some(r), None, Some(v)) => f_free[r] -= t.val * v,
            _ => {}
        }
    }
    Ok(LinearSystem {
        n_dofs,
        k: build_csc(n_dofs, &trip),
        f,
        prescribed,
        free,
        k_free: build_csc(n_free, &reduced),
        f_free,
        element_materials: mats,
    })
}

fn matvec(a: &SparseColMat<usize, f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    let s = a.symbolic();
    let vals = a.val();
    for j in 0..a.ncols() {
        for idx in s.col_range(j) {
            y[s.row_idx()[idx]] += vals[idx] * x[j];
        }
    }
    y
}

/// `a x - b` accumulated in double-double (error-free sums and products),
/// so iterative refinement is not limited by the residual's own rounding.
fn residual_dd(a: &SparseColMat<usize, f64>, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut hi: Vec<f64> = b.iter().map(|v| -v).collect();
    let mut lo = vec![0.0; hi.len()];
    let s = a.symbolic();
    let vals = a.val();
    for j in 0..a.ncols() {
        for idx in s.col_range(j) {
            let i = s.row_idx()[idx];
            let p = vals[idx] * x[j];
            let pe = vals[idx].mul_add(x[j], -p);
            let t = hi[i] + p;
            let z = t - hi[i];
            let se = (hi[i] - (t - z)) + (p - z);
            hi[i] = t;
            lo[i] += se + pe;
        }
    }
    hi.iter().zip(&lo).map(|(h, l)| h + l).collect()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sparse Cholesky factor of the reduced stiffness.
pub struct Factorization {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl Factorization {
    pub fn new(k: &SparseColMat<usize, f64>) -> Result<Self, ElasticityError> {
        let llt = k.sp_cholesky(Side::Lower).map_err(|e| match e {
            faer::sparse::linalg::LltError::Numeric(_) => ElasticityError::SingularSystem,
            other => ElasticityError::FactorizationFailure(format!("{other:?}")),
        })?;
        Ok(Factorization { llt })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        let x = self.llt.solve(&rhs);
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }
}

pub const RESIDUAL_TOL: f64 = 1e-9;
const REFINEMENT_SWEEPS: usize = 3;

/// Direct solve of the reduced system; optionally estimates the 1-norm condition number.
pub fn solve(mesh: &ConformingMesh, sys: &LinearSystem, with_condition: bool) -> Result<ElasticitySolution, ElasticityError> {
    let n_free = sys.f_free.len();
    let mut u: Vec<f64> = sys.prescribed.iter().map(|p| p.unwrap_or(0.0)).collect();
    let mut residual = 0.0;
    let mut condition = None;
    if n_free > 0 {
        let fac = Factorization::new(&sys.k_free)?;
        let mut x = fac.solve(&sys.f_free);
        // symmetric, so the 1-norm is the max norm
        let k_norm = one_norm(&sys.k_free);
        // iterative refinement for badly conditioned systems (tiny cut pieces)
        for sweep in 0..=REFINEMENT_SWEEPS {
            let r = residual_dd(&sys.k_free, &x, &sys.f_free);
            let scale = k_norm * norm_inf(&x) + norm_inf(&sys.f_free);
            residual = if scale > 0.0 { norm_inf(&r) / scale } else { 0.0 };
            if residual < 1e-3 * RESIDUAL_TOL || sweep == REFINEMENT_SWEEPS {
                break;
            }
            for (xi, d) in x.iter_mut().zip(fac.solve(&r)) {
                *xi -= d;
            }
        }
        if !(residual < RESIDUAL_TOL) {
            return Err(ElasticityError::Residual(residual));
        }
        for d in 0..sys.n_dofs {
            if let Some(i) = sys.free[d] {
                u[d] = x[i];
            }
        }
        if with_condition {
            let inv = hager_higham(n_free, |b| fac.solve(b));
            condition = Some(one_norm(&sys.k_free) * inv);
        }
    }
    let ku = matvec(&sys.k, &u);
    let reactions: Vec<f64> = (0..sys.n_dofs)
        .map(|d| if sys.free[d].is_none() { ku[d] - sys.f[d] } else { 0.0 })
        .collect();
    let energy = stored_energy(mesh, &u, &sys.element_materials);
    Ok(ElasticitySolution { u, reactions, residual, energy, condition })
}

/// Displacement and its physical gradient at reference point `xi` of element `e`.
pub fn displacement_at(mesh: &ConformingMesh, u: &[f64], e: usize, xi: &Point) -> (Vec2, [[f64; 2]; 2]) {
    let ids = &mesh.elements[e].nodes;
    let el = mesh.element(e);
    let (vals, grads) = ReferenceElement::get(el.shape, el.order).shape_values(xi);
    let mp = map_with(&el.nodes, &vals, &grads);
    let g = physical_grads(&mp.jac, &grads);
    let mut v = Vec2::zeros();
    let mut du = [[0.0; 2]; 2];
    for (i, &n) in ids.iter().enumerate() {
        let ui = Vec2::new(u[2 * n], u[2 * n + 1]);
        v += ui * vals[i];
        for a in 0..2 {
            for b in 0..2 {
                du[a][b] += ui[a] * g[i][b];
            }
        }
    }
    (v, du)
}

/// `1/2 int sigma(u) : eps(u)` by element quadrature.
pub fn stored_energy(mesh: &ConformingMesh, u: &[f64], materials: &[Material]) -> f64 {
    let parts: Vec<f64> = (0..mesh.elements.len())
        .into_par_iter()
        .map(|e| {
            let el = mesh.element(e);
            let ids = &mesh.elements[e].nodes;
            let tab = tabulate(el.shape, el.order, el.default_degree());
            let mut acc = 0.0;
            for q in 0..tab.rule.len() {
                let mp = map_with(&el.nodes, tab.values_at(q), tab.grads_at(q));
                let g = physical_grads(&mp.jac, tab.grads_at(q));
                let mut du = [[0.0; 2]; 2];
                for (i, &n) in ids.iter().enumerate() {
                    for a in 0..2 {
                        for b in 0..2 {
                            du[a][b] += u[2 * n + a] * g[i][b];
                        }
                    }
                }
                let s = materials[e].stress(&du);
                let work = s[0] * du[0][0] + s[1] * du[1][1] + s[2] * (du[0][1] + du[1][0]);
                acc += 0.5 * work * mp.det * tab.rule.weights[q];
            }
            acc
        })
        .collect();
    parts.iter().sum()
}

/// Plane-strain von Mises stress with `szz = nu (sxx + syy)`.
pub fn von_mises_from(s: &[f64; 3], nu: f64) -> f64 {
    let szz = nu * (s[0] + s[1]);
    (0.5 * ((s[0] - s[1]).powi(2) + (s[1] - szz).powi(2) + (szz - s[0]).powi(2)) + 3.0 * s[2] * s[2]).sqrt()
}

/// Element and reference point containing `x`.
pub fn locate(mesh: &ConformingMesh, x: &Point) -> Option<(usize, Point)> {
    (0..mesh.elements.len()).find_map(|e| {
        let el = mesh.element(e);
        let (lo, hi) = el.bbox();
        let pad = 1e-9 * el.size();
        if x.x < lo.x - pad || x.x > hi.x + pad || x.y < lo.y - pad || x.y > hi.y + pad {
            return None;
        }
        let xi = el.inverse_map(x).ok()?;
        (el.shape.outside_distance(&xi) <= 1e-10).then_some((e, xi))
    })
}

pub fn von_mises(mesh: &ConformingMesh, u: &[f64], materials: &[Material], x: &Point) -> Result<f64, ElasticityError> {
    let (e, xi) = locate(mesh, x).ok_or(ElasticityError::OutsideMesh(x.x, x.y))?;
    let (_, du) = displacement_at(mesh, u, e, &xi);
    Ok(von_mises_from(&materials[e].stress(&du), materials[e].nu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::Shape;
    use crate::meshbuild::build_conforming_mesh;
    use crate::refine::{Domain, RefinementTree};
    use approx::assert_relative_eq;

    fn steel() -> Vec<RegionMaterial> {
        vec![RegionMaterial { region: SignPattern::parse("").unwrap(), material: Material::new(1000.0, 0.3).unwrap() }]
    }

    fn unit_mesh(n: usize, shape: Shape, p: u8) -> ConformingMesh {
        let t = RefinementTree::structured(Domain::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0)), n, n, shape, p);
        build_conforming_mesh(&t.background(), &[], &[]).unwrap()
    }

    #[test]
    fn lame_examples() {
        let (l, m) = lame_constants(1000.0, 0.3).unwrap();
        assert_relative_eq!(m, 384.6153846153846, epsilon = 1e-9);
        assert_relative_eq!(l, 576.9230769230769, epsilon = 1e-9);
        let (l, m) = lame_constants(7.0, 0.0).unwrap();
        assert_eq!((l, m), (0.0, 3.5));
        let (l, m) = lame_constants(10.0, 0.3).unwrap();
        assert_relative_eq!(m, 3.846153846, epsilon = 1e-8);
        assert_relative_eq!(l, 5.769230769, epsilon = 1e-8);
        assert_eq!(lame_constants(1.0, 0.5), Err(ElasticityError::InvalidPoisson(0.5)));
        assert!(Material::new(-1.0, 0.2).is_err());
    }

    #[test]
    fn single_element_equilibrium() {
        let m = unit_mesh(1, Shape::Quad, 1);
        let bcs = BoundaryConditions {
            dirichlet: vec![DirichletBc { group: "box_left".into(), value: Prescribed::Components([Some(0.0), Some(0.0)]) }],
            neumann: vec![NeumannBc {
                group: "box_right".into(),
                load: TractionLoad::Profile(TractionProfile { axis: [0.0, 1.0], origin: [0.0; 2], tx: vec![1.0], ty: vec![] }),
            }],
            body_force: Vec2::zeros(),
        };
        let sys = assemble(&m, &steel(), &bcs).unwrap();
        let sol = solve(&m, &sys, false).unwrap();
        let rx: f64 = sol.reactions.iter().step_by(2).sum();
        assert!((rx + 1.0).abs() < 1e-10);
        assert!(sol.u[2] > 0.0);
    }

    #[test]
    fn stiffness_symmetric_and_rigid_modes_free() {
        let m = unit_mesh(2, Shape::Tri, 3);
        let sys = assemble(&m, &steel(), &BoundaryConditions::default()).unwrap();
        let dense = sys.k.to_dense();
        let scale = dense.norm_max();
        for i in 0..sys.n_dofs {
            for j in 0..sys.n_dofs {
                assert!((dense[(i, j)] - dense[(j, i)]).abs() <= 1e-10 * scale);
            }
        }
        // translation and rotation produce no force
        for mode in 0..3 {
            let u: Vec<f64> = (0..sys.n_dofs)
                .map(|d| {
                    let p = m.nodes[d / 2];
                    match (mode, d % 2) {
                        (0, 0) | (1, 1) => 1.0,
                        (2, 0) => -p.y,
                        (2, 1) => p.x,
                        _ => 0.0,
                    }
                })
                .collect();
            assert!(norm(&matvec(&sys.k, &u)) < 1e-10 * scale);
            assert!(stored_energy(&m, &u, &sys.element_materials).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let m = unit_mesh(2, Shape::Quad, 2);
        let bcs = BoundaryConditions {
            dirichlet: vec![DirichletBc { group: "boundary".into(), value: Prescribed::Components([Some(0.0), Some(0.0)]) }],
            ..Default::default()
        };
        let sys = assemble(&m, &steel(), &bcs).unwrap();
        let sol = solve(&m, &sys, false).unwrap();
        assert!(sol.u.iter().all(|&v| v == 0.0));
        assert_eq!(sol.energy, 0.0);
    }

    #[test]
    fn missing_material_and_group() {
        let m = unit_mesh(1, Shape::Quad, 1);
        let bad = BoundaryConditions {
            dirichlet: vec![DirichletBc { group: "box_nowhere".into(), value: Prescribed::Components([Some(0.0), None]) }],
            ..Default::default()
        };
        assert!(matches!(assemble(&m, &steel(), &bad), Err(ElasticityError::UnknownGroup(_))));
        let only_minus = vec![RegionMaterial { region: SignPattern::parse("-").unwrap(), material: Material::new(1.0, 0.2).unwrap() }];
        let mut m2 = m.clone();
        m2.elements[0].region = crate::geometry::RegionSignature(vec![1]);
        assert!(matches!(assemble(&m2, &only_minus, &bad), Err(ElasticityError::MissingMaterial(_))));
        let free = assemble(&m, &steel(), &BoundaryConditions::default()).unwrap();
        assert!(solve(&m, &free, false).is_err());
    }

    #[test]
    fn von_mises_hand_values() {
        // uniaxial plane-strain state sxx = s: szz = nu s
        let s: f64 = 50.0;
        let nu: f64 = 0.3;
        let hand = ((s * s + (nu * s).powi(2) + (nu * s - s).powi(2)) / 2.0).sqrt();
        assert_relative_eq!(von_mises_from(&[s, 0.0, 0.0], nu), hand, epsilon = 1e-12);
        assert_eq!(von_mises_from(&[0.0; 3], nu), 0.0);
        assert_relative_eq!(von_mises_from(&[0.0, 0.0, 2.0], nu), 2.0 * 3f64.sqrt());
        let m = unit_mesh(2, Shape::Quad, 1);
        let mats = element_materials(&m, &steel()).unwrap();
        let u = vec![0.0; 2 * m.nodes.len()];
        assert_eq!(von_mises(&m, &u, &mats, &Point::new(0.3, 0.7)).unwrap(), 0.0);
        assert!(von_mises(&m, &u, &mats, &Point::new(3.0, 0.7)).is_err());
    }
}

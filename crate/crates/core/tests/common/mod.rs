//! Checks shared by the property suite and the acceptance report. Each returns
//! a measured quantity; callers compare against their own pinned tolerance.
#![allow(dead_code)]

use std::sync::Arc;

use cdfem::config::RunConfig;
use cdfem::elasticity::{assemble, solve, BoundaryConditions, DirichletBc, Material, Prescribed, RegionMaterial};
use cdfem::elements::{quadrature, Shape};
use cdfem::geometry::{region_signature, LevelSet, Point, SignPattern, Vec2};
use cdfem::meshbuild::{assemble_pieces, conformity_audit, drop_regions, ConformingMesh, ConformityAudit};
use cdfem::pipeline::{boundary_conditions, generate_mesh};
use cdfem::refine::{
    adaptive_mesh_loop, hanging_node_audit, relax_nodes, AdaptiveMesh, AdaptivityConfig, BackgroundMesh, Domain,
    RefineError, RefinementTree,
};
use cdfem::verify::{HoleOracle, InclusionOracle};

pub struct Cut {
    pub adaptive: AdaptiveMesh,
    /// All regions, nothing dropped.
    pub mesh: ConformingMesh,
    pub box_area: f64,
}

pub fn cut_box(
    lo: [f64; 2],
    hi: [f64; 2],
    n: [usize; 2],
    shape: Shape,
    p: u8,
    levelsets: &[LevelSet],
    adaptivity: &AdaptivityConfig,
) -> Result<Cut, RefineError> {
    let domain = Domain::new(Point::new(lo[0], lo[1]), Point::new(hi[0], hi[1]));
    let mut tree = RefinementTree::structured(domain, n[0], n[1], shape, p);
    let adaptive = adaptive_mesh_loop(&mut tree, levelsets, adaptivity, &[])?;
    let mesh = assemble_pieces(&adaptive.background, &adaptive.pieces, levelsets.len());
    Ok(Cut { adaptive, mesh, box_area: (hi[0] - lo[0]) * (hi[1] - lo[1]) })
}

/// Builtin case geometry at the given resolution, unpruned.
pub fn cut_case(cfg: &RunConfig) -> Result<Cut, RefineError> {
    let (nx, ny) = cfg.nx_ny();
    let d = &cfg.domain;
    cut_box(d.lo, d.hi, [nx, ny], cfg.background.shape, cfg.background.p, &cfg.levelsets, &cfg.adaptivity)
}

pub fn unit_circle_domain(shape: Shape, nd: usize, p: u8, ls: &LevelSet) -> Result<Cut, RefineError> {
    cut_box([-1.0, -1.0], [1.0, 1.0], [nd, nd], shape, p, std::slice::from_ref(ls), &AdaptivityConfig::default())
}

pub fn hanging_nodes(cut: &Cut) -> usize {
    hanging_node_audit(&cut.adaptive.background)
}

pub fn audit(mesh: &ConformingMesh) -> ConformityAudit {
    conformity_audit(mesh)
}

/// Largest `|sum of piece areas - parent area| / parent area` over background elements.
pub fn area_defect(cut: &Cut) -> f64 {
    let bg = &cut.adaptive.background;
    cut.adaptive
        .pieces
        .iter()
        .enumerate()
        .map(|(e, list)| {
            let parent = bg.element(e).area();
            let sum: f64 = list.iter().map(|pc| pc.element.area()).sum();
            (sum - parent).abs() / parent
        })
        .fold(0.0, f64::max)
}

/// `(points checked, mismatches)`: element regions against the exact signature
/// at interior points away from every zero set. The band scales with the
/// parent element, since a later level set is cut against an already
/// approximated sub-element (a chord at p = 1).
pub fn signature_mismatches(mesh: &ConformingMesh, levelsets: &[LevelSet]) -> (usize, usize) {
    let (mut checked, mut bad) = (0, 0);
    for e in 0..mesh.n_elements() {
        let el = mesh.element(e);
        let region = &mesh.elements[e].region;
        if region.len() != levelsets.len() {
            bad += 1;
            continue;
        }
        let parent = mesh.elements[e].parent.map_or(el.size(), |p| 2.0 * mesh.parent_areas[p].sqrt());
        let band = if el.order == 1 { 0.4 } else { 0.1 } * parent;
        let rule = quadrature(el.shape, 2);
        for xi in &rule.points {
            let x = el.map(xi).x;
            let near = levelsets.iter().any(|ls| {
                let (v, g) = ls.eval_gradient(&x);
                v.abs() < band * g.norm()
            });
            if near {
                continue;
            }
            checked += 1;
            if region_signature(levelsets, &x).ok().as_ref() != Some(region) {
                bad += 1;
            }
        }
    }
    (checked, bad)
}

/// Largest `|phi| / |grad phi|` over the nodes of interface edges of level set `i`.
pub fn interface_node_distance(mesh: &ConformingMesh, levelsets: &[LevelSet]) -> f64 {
    let mut worst: f64 = 0.0;
    for (e, el) in mesh.elements.iter().enumerate() {
        for (k, tag) in el.tags.iter().enumerate() {
            if let Some(cdfem::cutcell::EdgeTag::Interface(i)) = tag {
                for n in mesh.edge_nodes(e, k) {
                    let (v, g) = levelsets[*i].eval_gradient(&mesh.nodes[n]);
                    worst = worst.max(v.abs() / g.norm());
                }
            }
        }
    }
    worst
}

/// Relative difference of the summed region areas from the box area.
pub fn total_area_defect(cut: &Cut) -> f64 {
    (cut.mesh.area() - cut.box_area).abs() / cut.box_area
}

/// Second relaxation pass on an already relaxed background: largest vertex
/// move divided by the smallest element size.
pub fn relax_second_pass(cut: &Cut, levelsets: &[LevelSet], adaptivity: &AdaptivityConfig) -> f64 {
    let mut bg: BackgroundMesh = cut.adaptive.background.clone();
    let before = bg.vertices.clone();
    relax_nodes(&mut bg, levelsets, &adaptivity.relaxation);
    let h = (0..bg.elements.len()).map(|e| bg.original_size(e)).fold(f64::INFINITY, f64::min);
    before.iter().zip(&bg.vertices).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / h
}

/// Linear field `u = a + B x` imposed on every boundary and interface group
/// of `mesh` (with `void` regions removed); returns the largest nodal error
/// relative to the largest nodal value.
pub fn patch_test_error(mesh: &ConformingMesh, void: &[SignPattern], a: [f64; 2], b: [[f64; 2]; 2]) -> f64 {
    let mesh = drop_regions(mesh, void).expect("non-empty mesh");
    let exact = move |x: &Point| Vec2::new(a[0] + b[0][0] * x.x + b[0][1] * x.y, a[1] + b[1][0] * x.x + b[1][1] * x.y);
    let field: Arc<dyn Fn(&Point) -> Vec2 + Send + Sync> = Arc::new(exact);
    let dirichlet =
        mesh.groups().into_keys().map(|group| DirichletBc { group, value: Prescribed::Field(field.clone()) }).collect();
    let bcs = BoundaryConditions { dirichlet, neumann: vec![], body_force: Vec2::zeros() };
    let materials = [RegionMaterial {
        region: SignPattern::parse("").unwrap(),
        material: Material::new(1000.0, 0.3).unwrap(),
    }];
    let sys = assemble(&mesh, &materials, &bcs).expect("assembly");
    let sol = solve(&mesh, &sys, false).expect("solve");
    let (mut err, mut scale): (f64, f64) = (0.0, 0.0);
    for (i, x) in mesh.nodes.iter().enumerate() {
        let u = exact(x);
        err = err.max((sol.u[2 * i] - u.x).abs()).max((sol.u[2 * i + 1] - u.y).abs());
        scale = scale.max(u.norm());
    }
    err / scale
}

/// Net force defect `|sum reactions + sum applied| / (sum |reactions| + sum |applied|)`,
/// worst component, plus the solver's backward error.
pub fn equilibrium_defect(cfg: &RunConfig) -> (f64, f64) {
    let out = generate_mesh(cfg).expect("mesh");
    let sys = assemble(&out.mesh, &cfg.materials, &boundary_conditions(cfg)).expect("assembly");
    let sol = solve(&out.mesh, &sys, false).expect("solve");
    let mut worst: f64 = 0.0;
    for c in 0..2 {
        let r: f64 = sol.reactions.iter().skip(c).step_by(2).sum();
        let f: f64 = sys.f.iter().skip(c).step_by(2).sum();
        let scale: f64 = sol.reactions.iter().skip(c).step_by(2).chain(sys.f.iter().skip(c).step_by(2)).map(|v| v.abs()).sum();
        if scale > 0.0 {
            worst = worst.max((r + f).abs() / scale);
        }
    }
    (worst, sol.residual)
}

/// `int x^i y^j` over the reference element.
pub fn monomial_exact(shape: Shape, i: u32, j: u32) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    match shape {
        Shape::Tri => fact(i) * fact(j) / fact(i + j + 2),
        Shape::Quad => {
            let one = |k: u32| if k % 2 == 1 { 0.0 } else { 2.0 / (k + 1) as f64 };
            one(i) * one(j)
        }
    }
}

pub fn monomial_rule(shape: Shape, degree: u32, i: u32, j: u32) -> f64 {
    let rule = quadrature(shape, degree);
    rule.points.iter().zip(&rule.weights).map(|(x, w)| w * x.x.powi(i as i32) * x.y.powi(j as i32)).sum()
}

/// Plane-strain stress of a displacement field by central differences.
pub fn fd_stress(u: &dyn Fn(&Point) -> Vec2, m: &Material, x: &Point, h: f64) -> [f64; 3] {
    let dx = (u(&Point::new(x.x + h, x.y)) - u(&Point::new(x.x - h, x.y))) / (2.0 * h);
    let dy = (u(&Point::new(x.x, x.y + h)) - u(&Point::new(x.x, x.y - h))) / (2.0 * h);
    m.stress(&[[dx.x, dy.x], [dx.y, dy.y]])
}

/// `div sigma` by nested central differences.
pub fn fd_divergence(u: &dyn Fn(&Point) -> Vec2, m: &Material, x: &Point, h: f64) -> Vec2 {
    let s = |p: Point| fd_stress(u, m, &p, h);
    let (sxp, sxm) = (s(Point::new(x.x + h, x.y)), s(Point::new(x.x - h, x.y)));
    let (syp, sym) = (s(Point::new(x.x, x.y + h)), s(Point::new(x.x, x.y - h)));
    // [sxx, syy, sxy]
    Vec2::new((sxp[0] - sxm[0] + syp[2] - sym[2]) / (2.0 * h), (sxp[2] - sxm[2] + syp[1] - sym[1]) / (2.0 * h))
}

pub fn traction(s: &[f64; 3], n: &Vec2) -> Vec2 {
    Vec2::new(s[0] * n.x + s[2] * n.y, s[2] * n.x + s[1] * n.y)
}

pub const FD_STEP: f64 = 1e-5;

/// Hole oracle: worst relative equilibrium residual `|div sigma| R / sigma0`
/// over a polar grid in `R < r < 2`, and worst `|t| / sigma0` at 100 points on the hole.
pub fn hole_strong_form(o: &HoleOracle, m: &Material) -> (f64, f64) {
    let u = |x: &Point| o.displacement_unchecked(x);
    let mut div: f64 = 0.0;
    for i in 0..12 {
        for j in 0..16 {
            let r = o.radius * (1.05 + 0.1 * i as f64);
            let t = 2.0 * std::f64::consts::PI * (j as f64 + 0.3) / 16.0;
            let x = Point::new(r * t.cos(), r * t.sin());
            div = div.max(fd_divergence(&u, m, &x, FD_STEP).norm() * o.radius / o.sigma0);
        }
    }
    let mut trac: f64 = 0.0;
    for j in 0..100 {
        let t = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / 100.0;
        let n = Vec2::new(t.cos(), t.sin());
        let x = Point::from(n * o.radius);
        trac = trac.max(traction(&fd_stress(&u, m, &x, FD_STEP), &n).norm() / o.sigma0);
    }
    (div, trac)
}

/// Inclusion oracle: `(equilibrium residual, displacement jump, traction jump)` on
/// 100 interface points, each relative to the interface traction scale.
pub fn inclusion_strong_form(o: &InclusionOracle, inner: &Material, outer: &Material) -> (f64, f64, f64) {
    let ui = |x: &Point| o.displacement_branch(x, true);
    let uo = |x: &Point| o.displacement_branch(x, false);
    let n0 = Vec2::new(1.0, 0.0);
    let scale = traction(&fd_stress(&ui, inner, &Point::new(o.a, 0.0), FD_STEP), &n0).norm();
    let (mut div, mut jump_u, mut jump_t): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for j in 0..100 {
        let t = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / 100.0;
        let n = Vec2::new(t.cos(), t.sin());
        let x = Point::from(n * o.a);
        jump_u = jump_u.max((ui(&x) - uo(&x)).norm() / o.a);
        let ti = traction(&fd_stress(&ui, inner, &x, FD_STEP), &n);
        let to = traction(&fd_stress(&uo, outer, &x, FD_STEP), &n);
        jump_t = jump_t.max((ti - to).norm() / scale);
        let xi = Point::from(n * 0.5 * o.a);
        let xo = Point::from(n * 0.5 * (o.a + o.b));
        div = div.max(fd_divergence(&ui, inner, &xi, FD_STEP).norm() * o.a / scale);
        div = div.max(fd_divergence(&uo, outer, &xo, FD_STEP).norm() * o.a / scale);
    }
    (div, jump_u, jump_t)
}

/// `(first-attempt failures, cut elements)` summed over a hole-circle sweep.
pub fn failure_counts(shapes: &[Shape], orders: &[u8], nds: &[usize], radius: f64) -> (usize, usize) {
    let ls = LevelSet::circle(0.0, 0.0, radius);
    let (mut fail, mut cut) = (0, 0);
    for &shape in shapes {
        for &p in orders {
            for &nd in nds {
                let c = unit_circle_domain(shape, nd, p, &ls).expect("circle decomposes");
                fail += c.adaptive.report.first_attempt_failures;
                cut += c.adaptive.report.cut_elements;
            }
        }
    }
    (fail, cut)
}

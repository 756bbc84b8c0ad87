//! Configuration to mesh to solution.

use std::sync::Arc;

use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::elasticity::{
    assemble, solve, BoundaryConditions, DirichletBc, ElasticityError, ElasticitySolution, NeumannBc, Prescribed,
    TractionLoad,
};
use crate::geometry::{Point, Vec2};
use crate::meshbuild::{
    assemble_pieces, conformity_audit, drop_regions, quality_report, ConformingMesh, ConformityAudit, MeshError,
    QualityReport,
};
use crate::refine::{adaptive_mesh_loop, Domain, LoopReport, RefineError, RefinementTree};
use crate::verify::Oracle;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solve(#[from] ElasticityError),
}

#[derive(Debug, Clone)]
pub struct MeshOutcome {
    pub mesh: ConformingMesh,
    pub report: LoopReport,
    pub quality: QualityReport,
    pub audit: ConformityAudit,
    pub max_level: u32,
}

pub fn generate_mesh(cfg: &RunConfig) -> Result<MeshOutcome, PipelineError> {
    cfg.validate()?;
    let (nx, ny) = cfg.nx_ny();
    let d = &cfg.domain;
    let domain = Domain::new(Point::new(d.lo[0], d.lo[1]), Point::new(d.hi[0], d.hi[1]));
    let mut tree = RefinementTree::structured(domain, nx, ny, cfg.background.shape, cfg.background.p);
    let out = adaptive_mesh_loop(&mut tree, &cfg.levelsets, &cfg.adaptivity, &cfg.void)?;
    let full = assemble_pieces(&out.background, &out.pieces, cfg.levelsets.len());
    let mesh = drop_regions(&full, &cfg.void)?;
    let mut quality = quality_report(&mesh);
    quality.relaxed_nodes = out.report.relax.moved;
    quality.decomposition_failures = out.report.first_attempt_failures;
    let audit = conformity_audit(&mesh);
    Ok(MeshOutcome { mesh, report: out.report, quality, audit, max_level: tree.max_level() })
}

pub fn boundary_conditions(cfg: &RunConfig) -> BoundaryConditions {
    let oracle = cfg.oracle.as_ref().map(|o| Arc::new(Oracle::from_spec(o)));
    let dirichlet = cfg
        .dirichlet
        .iter()
        .map(|d| {
            let value = match (&oracle, d.exact) {
                (Some(o), true) => {
                    let o = Arc::clone(o);
                    Prescribed::Field(Arc::new(move |x: &Point| o.displacement_unchecked(x, None)))
                }
                _ => Prescribed::Components([d.ux, d.uy]),
            };
            DirichletBc { group: d.group.clone(), value }
        })
        .collect();
    let neumann = cfg
        .neumann
        .iter()
        .map(|n| NeumannBc { group: n.group.clone(), load: TractionLoad::Profile(n.profile.clone()) })
        .collect();
    BoundaryConditions { dirichlet, neumann, body_force: Vec2::new(cfg.body_force[0], cfg.body_force[1]) }
}

pub fn solve_mesh(cfg: &RunConfig, mesh: &ConformingMesh, with_condition: bool) -> Result<ElasticitySolution, PipelineError> {
    let sys = assemble(mesh, &cfg.materials, &boundary_conditions(cfg))?;
    Ok(solve(mesh, &sys, with_condition)?)
}

/// Mesh statistics, quality extremes and audit counts as JSON.
pub fn mesh_summary(out: &MeshOutcome) -> serde_json::Value {
    let (q, a, r) = (&out.quality, &out.audit, &out.report);
    let regions: serde_json::Map<String, serde_json::Value> =
        out.mesh.region_areas().into_iter().map(|(s, v)| (s.to_text(), v.into())).collect();
    let mut quads = 0;
    for e in &out.mesh.elements {
        quads += (e.shape == crate::elements::Shape::Quad) as usize;
    }
    serde_json::json!({
        "nodes": out.mesh.nodes.len(),
        "elements": out.mesh.elements.len(),
        "quads": quads,
        "tris": out.mesh.elements.len() - quads,
        "max_level": out.max_level,
        "area": q.total_area,
        "region_areas": regions,
        "quality": {
            "min_det_ratio": q.min_det_ratio,
            "min_scaled_det": q.min_scaled_det,
            "min_area": q.min_area,
        },
        "adaptivity": {
            "rounds": r.rounds,
            "corner_refinements": r.corner_refinements,
            "curvature_refinements": r.curvature_refinements,
            "failure_refinements": r.failure_refinements,
            "cut_elements": r.cut_elements,
            "first_attempt_failures": r.first_attempt_failures,
            "relaxed_nodes": r.relax.moved,
            "relax_rollbacks": r.relax.rolled_back.len(),
            "max_relax_move": r.relax.max_move,
            "relax_sweeps": r.relax.sweeps,
            "relax_settled": r.relax.settled,
        },
        "audit": {
            "interior_edges": a.interior_edges,
            "boundary_edges": a.boundary_edges,
            "mismatched": a.mismatched,
            "hanging": a.hanging,
            "duplicate_nodes": a.duplicate_nodes,
            "passes": a.passes(),
        },
    })
}

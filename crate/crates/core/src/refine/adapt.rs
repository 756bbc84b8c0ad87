use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::relax::{estimate_distance, relax_nodes, RelaxReport, RelaxationConfig};
use super::{BackgroundMesh, RefinementTree};
use crate::cutcell::{decompose_all, detect_cut, sample_points, CutError, CutStatus, Piece};
use crate::elements::{PhysicalElement, Shape};
use crate::geometry::{LevelSet, Point, SignPattern};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornerMark {
    pub x: f64,
    pub y: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptivityConfig {
    /// Curvature criterion factor, `1/|k| <= q h` flags an element.
    pub q: f64,
    pub curvature: bool,
    pub corner_marks: Vec<CornerMark>,
    pub relaxation: RelaxationConfig,
    pub max_curvature_rounds: usize,
    pub max_rounds: usize,
}

impl Default for AdaptivityConfig {
    fn default() -> Self {
        AdaptivityConfig {
            q: 0.6,
            curvature: true,
            corner_marks: Vec::new(),
            relaxation: RelaxationConfig::default(),
            max_curvature_rounds: 10,
            max_rounds: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailedElement {
    pub element: usize,
    pub leaf: usize,
    pub levelset: usize,
    pub error: CutError,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("{} element(s) still fail to decompose after {rounds} rounds", failing.len())]
    BudgetExceeded { rounds: usize, failing: Vec<FailedElement> },
    #[error("q = {0} outside (0, 2)")]
    InvalidQ(f64),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoopReport {
    pub rounds: usize,
    pub corner_refinements: usize,
    pub curvature_refinements: usize,
    pub failure_refinements: usize,
    /// Elements cut by some level set at the first decomposition attempt.
    pub cut_elements: usize,
    pub first_attempt_failures: usize,
    pub relax: RelaxReport,
}

#[derive(Debug, Clone)]
pub struct AdaptiveMesh {
    pub background: BackgroundMesh,
    /// Decomposition of every background element, in element order.
    pub pieces: Vec<Vec<Piece>>,
    pub report: LoopReport,
}

/// Curvature criterion on a cut element: curvature taken at the projection of
/// the sample point with the smallest `|phi|`.
pub fn curvature_flag(el: &PhysicalElement, ls: &LevelSet, q: f64) -> bool {
    let pts = sample_points(el);
    let Some(best) = pts
        .iter()
        .min_by(|a, b| ls.eval(a).abs().total_cmp(&ls.eval(b).abs()))
        .copied()
    else {
        return false;
    };
    let at = match estimate_distance(ls, &best, 1e-12) {
        Ok((d, dir)) => best + dir * d,
        Err(_) => best,
    };
    match ls.mean_curvature(&at) {
        Ok(k) if k != 0.0 && k.is_finite() => 1.0 / k.abs() <= q * el.size(),
        _ => false,
    }
}

fn contains(shape: Shape, c: &[Point], p: &Point, tol: f64) -> bool {
    let n = shape.n_corners();
    (0..n).all(|k| {
        let a = c[k];
        let b = c[(k + 1) % n];
        let e = b - a;
        let w = p - a;
        (e.x * w.y - e.y * w.x) / e.norm() >= -tol
    })
}

/// Tree leaves whose closure contains one of the points.
pub fn corner_flags(bg: &BackgroundMesh, points: &[Point]) -> Vec<usize> {
    let mut out = Vec::new();
    for (e, el) in bg.elements.iter().enumerate() {
        let c: Vec<Point> = el.corners.iter().map(|&v| bg.original[v]).collect();
        let tol = 1e-9 * bg.original_size(e);
        if points.iter().any(|p| contains(el.shape, &c, p, tol)) {
            out.push(el.leaf);
        }
    }
    out
}

fn curvature_round(tree: &RefinementTree, levelsets: &[LevelSet], q: f64) -> Vec<usize> {
    let bg = tree.background();
    let mut flags: Vec<usize> = (0..bg.elements.len())
        .into_par_iter()
        .filter_map(|e| {
            let el = bg.original_element(e);
            levelsets
                .iter()
                .any(|ls| matches!(detect_cut(&el, ls), CutStatus::Cut | CutStatus::Complex) && curvature_flag(&el, ls, q))
                .then_some(bg.elements[e].leaf)
        })
        .collect();
    flags.dedup();
    flags
}

/// Corner refinement, curvature rounds, relaxation and decomposition, repeated
/// with failure-driven refinement until every element decomposes.
pub fn adaptive_mesh_loop(
    tree: &mut RefinementTree,
    levelsets: &[LevelSet],
    cfg: &AdaptivityConfig,
    prune: &[SignPattern],
) -> Result<AdaptiveMesh, RefineError> {
    if !(cfg.q > 0.0 && cfg.q < 2.0) {
        return Err(RefineError::InvalidQ(cfg.q));
    }
    let mut report = LoopReport::default();
    let steps = cfg.corner_marks.iter().map(|m| m.steps).max().unwrap_or(0);
    for s in 0..steps {
        let pts: Vec<Point> =
            cfg.corner_marks.iter().filter(|m| m.steps > s).map(|m| Point::new(m.x, m.y)).collect();
        let flags = corner_flags(&tree.background(), &pts);
        report.corner_refinements += flags.len();
        tree.refine_with_closure(&flags);
    }
    let mut first = true;
    loop {
        report.rounds += 1;
        if cfg.curvature {
            for _ in 0..cfg.max_curvature_rounds {
                let flags = curvature_round(tree, levelsets, cfg.q);
                if flags.is_empty() {
                    break;
                }
                report.curvature_refinements += flags.len();
                tree.refine_with_closure(&flags);
            }
        }
        let mut bg = tree.background();
        report.relax = relax_nodes(&mut bg, levelsets, &cfg.relaxation);
        let results: Vec<(Result<Vec<Piece>, crate::cutcell::PieceFailure>, bool)> = (0..bg.elements.len())
            .into_par_iter()
            .map(|e| {
                let el = bg.element(e);
                let cut = first
                    && levelsets
                        .iter()
                        .any(|ls| !matches!(detect_cut(&el, ls), CutStatus::Inside | CutStatus::Outside));
                (decompose_all(&el, bg.edge_tags(e), levelsets, prune), cut)
            })
            .collect();
        let failing: Vec<FailedElement> = results
            .iter()
            .enumerate()
            .filter_map(|(e, (r, _))| {
                r.as_ref().err().map(|f| FailedElement {
                    element: e,
                    leaf: bg.elements[e].leaf,
                    levelset: f.levelset,
                    error: f.error.clone(),
                })
            })
            .collect();
        if first {
            report.cut_elements = results.iter().filter(|(_, c)| *c).count();
            report.first_attempt_failures = failing.len();
            first = false;
        }
        if failing.is_empty() {
            let pieces = results.into_iter().map(|(r, _)| r.unwrap()).collect();
            return Ok(AdaptiveMesh { background: bg, pieces, report });
        }
        if report.rounds >= cfg.max_rounds {
            return Err(RefineError::BudgetExceeded { rounds: report.rounds, failing });
        }
        let mut leaves: Vec<usize> = failing.iter().map(|f| f.leaf).collect();
        leaves.dedup();
        report.failure_refinements += leaves.len();
        tree.refine_with_closure(&leaves);
    }
}

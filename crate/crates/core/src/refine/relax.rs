use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BackgroundMesh;
use crate::geometry::{sign_of, GeometryError, LevelSet, Point, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxationConfig {
    /// Band half-width as a fraction of the local element size.
    pub c: f64,
    /// Upper bound; sweeps stop once no vertex moves by more than [`SETTLED`] of its `h`.
    pub sweeps: usize,
    pub tol: f64,
}

/// A sweep moving no vertex by more than this fraction of its `h` ends relaxation.
pub const SETTLED: f64 = 1e-11;

impl Default for RelaxationConfig {
    fn default() -> Self {
        RelaxationConfig { c: 0.1, sweeps: 100, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelaxReport {
    /// Distinct vertices that moved.
    pub moved: usize,
    /// Vertices whose move was undone because an incident element would fold.
    pub rolled_back: Vec<usize>,
    pub max_move: f64,
    pub sweeps: usize,
    /// The last sweep moved nothing beyond [`SETTLED`]; false when the sweep cap
    /// cut off a slow alternation between overlapping bands.
    pub settled: bool,
}

/// Newton projection onto the zero set; returns the distance and unit direction
/// toward the foot point (zero vector when already on the zero set).
pub fn estimate_distance(ls: &LevelSet, x: &Point, tol: f64) -> Result<(f64, Vec2), GeometryError> {
    let mut y = *x;
    for _ in 0..50 {
        let (v, g) = ls.eval_gradient(&y);
        if v.abs() < tol {
            let d = (y - x).norm();
            let dir = if d > 0.0 { (y - x) / d } else { Vec2::zeros() };
            return Ok((d, dir));
        }
        let g2 = g.norm_squared();
        if g2.sqrt() < crate::geometry::GRADIENT_CUTOFF {
            return Err(GeometryError::SingularPoint(y.x, y.y));
        }
        y -= g * (v / g2);
    }
    Err(GeometryError::InvalidParameters("distance estimate did not converge".into()))
}

fn corner_dets(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut m = f64::INFINITY;
    for k in 0..n {
        let a = pts[(k + n - 1) % n];
        let b = pts[k];
        let c = pts[(k + 1) % n];
        let u = c - b;
        let v = a - b;
        m = m.min(u.x * v.y - u.y * v.x);
    }
    m
}

/// Push corner vertices out of a band of width `c h` around every zero set.
/// `h` is the smallest incident element size at tree positions.
pub fn relax_nodes(mesh: &mut BackgroundMesh, levelsets: &[LevelSet], cfg: &RelaxationConfig) -> RelaxReport {
    let inc = mesh.incident();
    let sizes: Vec<f64> = (0..mesh.elements.len()).map(|e| mesh.original_size(e)).collect();
    let h: Vec<f64> = inc
        .iter()
        .map(|es| es.iter().map(|&e| sizes[e]).fold(f64::INFINITY, f64::min))
        .collect();
    let sides: Vec<u8> = mesh.original.iter().map(|p| mesh.domain.sides(p)).collect();
    let mut moved = vec![false; mesh.vertices.len()];
    let mut report = RelaxReport::default();
    let mut rolled = std::collections::BTreeSet::new();
    let valid = |m: &BackgroundMesh, v: usize| {
        inc[v].iter().all(|&e| {
            let pts: Vec<Point> = m.elements[e].corners.iter().map(|&k| m.vertices[k]).collect();
            corner_dets(&pts) > 0.0
        })
    };
    for _ in 0..cfg.sweeps {
        // overlapping bands alternate; stop at the fixed point
        report.sweeps += 1;
        let mut largest: f64 = 0.0;
        for ls in levelsets {
            let targets: Vec<(usize, Point)> = (0..mesh.vertices.len())
                .into_par_iter()
                .filter_map(|v| {
                    if inc[v].is_empty() || sides[v].count_ones() >= 2 {
                        return None;
                    }
                    let band = cfg.c * h[v];
                    let x = mesh.vertices[v];
                    let (phi, g) = ls.eval_gradient(&x);
                    let gn = g.norm();
                    // first-order distance estimate as a cheap filter
                    if gn == 0.0 || phi.abs() > 2.0 * band * gn {
                        return None;
                    }
                    let (d, dir) = estimate_distance(ls, &x, cfg.tol).ok()?;
                    if d >= band {
                        return None;
                    }
                    let away = if d > 0.0 { -dir } else { g / gn * sign_of(phi) as f64 };
                    let gap = band - d;
                    // box sides: slide only, far enough to clear the band when the slide is steep
                    let slide = |a: f64| if a.abs() >= 0.5 { gap / a } else { gap * a };
                    let step = if sides[v] & (1 | 4) != 0 {
                        Vec2::new(slide(away.x), 0.0)
                    } else if sides[v] & (2 | 8) != 0 {
                        Vec2::new(0.0, slide(away.y))
                    } else {
                        away * gap
                    };
                    let mut y = x + step;
                    y.x = y.x.clamp(mesh.domain.lo.x, mesh.domain.hi.x);
                    y.y = y.y.clamp(mesh.domain.lo.y, mesh.domain.hi.y);
                    (y != x).then_some((v, y))
                })
                .collect();
            for (v, y) in targets {
                let old = mesh.vertices[v];
                mesh.vertices[v] = y;
                if valid(mesh, v) {
                    largest = largest.max((y - old).norm() / h[v]);
                    moved[v] = true;
                    report.max_move = report.max_move.max((y - mesh.original[v]).norm());
                } else {
                    mesh.vertices[v] = old;
                    rolled.insert(v);
                }
            }
        }
        if largest <= SETTLED {
            report.settled = true;
            break;
        }
    }
    report.moved = moved.iter().filter(|&&m| m).count();
    report.rolled_back = rolled.into_iter().collect();
    report
}

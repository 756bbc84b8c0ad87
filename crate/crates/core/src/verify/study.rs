use std::fmt::Write as _;

use super::{integration_error, interpolation_error, l2_error, Oracle};
use crate::config::{ConfigError, RunConfig};
use crate::elements::Shape;
use crate::pipeline::{generate_mesh, solve_mesh, PipelineError};

pub const CSV_HEADER: &str = "case,shape,p,n_d,h,dofs,err_int,err_interp,err_L2,err_energy,rate_L2,cond_norm";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyRow {
    pub case: String,
    pub shape: Option<Shape>,
    pub p: u8,
    pub nd: usize,
    pub corner_steps: usize,
    pub h: f64,
    pub dofs: usize,
    pub err_int: Option<f64>,
    pub err_interp: Option<f64>,
    pub err_l2: Option<f64>,
    pub err_l2_rel: Option<f64>,
    pub energy: Option<f64>,
    /// `|e - e_ref| / e_ref`
    pub err_energy: Option<f64>,
    pub rate_l2: Option<f64>,
    pub cond: Option<f64>,
    pub cond_norm: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub case: String,
    pub rows: Vec<StudyRow>,
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

impl StudyReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.12e},{},{},{},{},{},{},{}",
                r.case,
                r.shape.map(|s| s.name()).unwrap_or(""),
                r.p,
                r.nd,
                r.h,
                r.dofs,
                num(r.err_int),
                num(r.err_interp),
                num(r.err_l2),
                num(r.err_energy),
                num(r.rate_l2),
                num(r.cond_norm),
            );
        }
        s
    }

    /// Rows of one `(shape, p, corner steps)` series in sweep order.
    pub fn series(&self, shape: Shape, p: u8) -> Vec<&StudyRow> {
        self.rows.iter().filter(|r| r.shape == Some(shape) && r.p == p).collect()
    }
}

/// `log(e_i / e_{i-1}) / log(h_i / h_{i-1})`; `None` for the first entry or degenerate pairs.
pub fn rates(h: &[f64], e: &[f64]) -> Vec<Option<f64>> {
    (0..e.len())
        .map(|i| {
            if i == 0 {
                return None;
            }
            let r = (e[i] / e[i - 1]).ln() / (h[i] / h[i - 1]).ln();
            (r.is_finite() && e[i] > 0.0 && e[i - 1] > 0.0).then_some(r)
        })
        .collect()
}

fn run_row(cfg: &RunConfig) -> Result<StudyRow, PipelineError> {
    let out = generate_mesh(cfg)?;
    let sol = solve_mesh(cfg, &out.mesh, true)?;
    let mut row = StudyRow {
        h: cfg.h(),
        dofs: 2 * out.mesh.nodes.len(),
        energy: Some(sol.energy),
        cond: sol.condition,
        ..Default::default()
    };
    if let Some(spec) = &cfg.oracle {
        let oracle = Oracle::from_spec(spec);
        let d = &cfg.domain;
        let box_area = (d.hi[0] - d.lo[0]) * (d.hi[1] - d.lo[1]);
        row.err_int = Some(integration_error(&out.mesh, &oracle, box_area));
        row.err_interp = Some(interpolation_error(&out.mesh, &oracle).abs);
        let e = l2_error(&out.mesh, &sol.u, &oracle);
        row.err_l2 = Some(e.abs);
        row.err_l2_rel = Some(e.rel);
    }
    if let Some(e_ref) = cfg.reference_energy {
        row.err_energy = Some((sol.energy - e_ref).abs() / e_ref);
    }
    Ok(row)
}

/// Sweep shapes, orders and resolutions (or corner refinement steps) of a
/// configuration. Failed rows are kept with their error message.
pub fn run_convergence_study(cfg: &RunConfig) -> Result<StudyReport, ConfigError> {
    cfg.validate()?;
    let study = cfg.study.as_ref().ok_or_else(|| ConfigError::Invalid("configuration has no study sweep".into()))?;
    let shapes = if study.shapes.is_empty() { vec![cfg.background.shape] } else { study.shapes.clone() };
    let mut rows = Vec::new();
    for &shape in &shapes {
        for &p in &study.p {
            let mut series = Vec::new();
            let runs: Vec<(usize, Option<usize>)> = if study.corner_steps.is_empty() {
                study.nd.iter().map(|&nd| (nd, None)).collect()
            } else {
                study.corner_steps.iter().map(|&s| (study.nd[0], Some(s))).collect()
            };
            for (nd, steps) in runs {
                let mut c = cfg.with_mesh(nd, p, shape);
                let mut case = cfg.name.clone();
                if let Some(s) = steps {
                    for m in &mut c.adaptivity.corner_marks {
                        m.steps = s;
                    }
                    case = format!("{case}_steps{s}");
                }
                let mut row = run_row(&c).unwrap_or_else(|e| StudyRow {
                    h: c.h(),
                    failure: Some(e.to_string()),
                    ..Default::default()
                });
                row.case = case;
                row.shape = Some(shape);
                row.p = p;
                row.nd = nd;
                row.corner_steps = steps.unwrap_or_else(|| c.adaptivity.corner_marks.iter().map(|m| m.steps).max().unwrap_or(0));
                series.push(row);
            }
            let h: Vec<f64> = series.iter().map(|r| r.h).collect();
            let e: Vec<f64> = series.iter().map(|r| r.err_l2.unwrap_or(f64::NAN)).collect();
            let cmin = series.iter().filter_map(|r| r.cond).fold(f64::INFINITY, f64::min);
            for (r, rate) in series.iter_mut().zip(rates(&h, &e)) {
                r.rate_l2 = rate;
                r.cond_norm = r.cond.map(|c| c / cmin);
            }
            rows.extend(series);
        }
    }
    Ok(StudyReport { case: cfg.name.clone(), rows })
}

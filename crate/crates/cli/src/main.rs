//! `cdfem mesh|solve|study <case-or-config.json>`
//!
//! Exit codes: 0 success, 2 configuration error, 3 meshing failure
//! (including an exhausted refinement budget), 4 solver failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cdfem::config::{ConfigError, RunConfig};
use cdfem::elements::Shape;
use cdfem::meshbuild::{export_native, export_vtk};
use cdfem::pipeline::{generate_mesh, mesh_summary, solve_mesh, MeshOutcome, PipelineError};
use cdfem::verify::{builtin_case, l2_error, rates, run_convergence_study, Oracle, StudyReport, BUILTIN_NAMES};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cdfem", version, about = "Conforming higher-order meshes from level sets, elasticity solves and convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the conforming mesh and write it with a quality report.
    Mesh(RunArgs),
    /// Mesh, assemble and solve; write the displacement field.
    Solve(RunArgs),
    /// Run the configured convergence sweep and write a CSV report.
    Study(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Builtin case (hole, inclusion, beam, beam1, beam2, spanner) or a JSON configuration file.
    target: String,
    /// Elements per dimension; a comma list sets the study sweep.
    #[arg(long, value_delimiter = ',')]
    nd: Vec<usize>,
    /// Element order; a comma list sets the study sweep.
    #[arg(long, value_delimiter = ',')]
    p: Vec<u8>,
    /// Background element shape, `quad` or `tri`.
    #[arg(long, value_parser = parse_shape, value_delimiter = ',')]
    shape: Vec<Shape>,
    /// Curvature criterion factor.
    #[arg(long)]
    q: Option<f64>,
    /// Beam support case.
    #[arg(long = "case", value_parser = clap::value_parser!(u8).range(1..=2))]
    support: Option<u8>,
    /// Corner refinement steps: `3`, `0,1,3` or `0..3`.
    #[arg(long)]
    corner_steps: Option<String>,
    /// Output directory.
    #[arg(long, env = "CDFEM_OUT")]
    out: Option<PathBuf>,
    /// Skip the condition number estimate.
    #[arg(long)]
    no_condition: bool,
}

fn parse_shape(s: &str) -> Result<Shape, String> {
    Shape::parse(s).ok_or_else(|| format!("unknown shape `{s}` (expected quad or tri)"))
}

fn parse_steps(s: &str) -> Result<Vec<usize>, ConfigError> {
    let bad = || ConfigError::Invalid(format!("cannot read corner steps `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

enum Failure {
    Config(String),
    Mesh(String),
    Solve(String),
    Output(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Output(_) => 1,
            Failure::Config(_) => 2,
            Failure::Mesh(_) => 3,
            Failure::Solve(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Mesh(m) | Failure::Solve(m) | Failure::Output(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(c) => c.into(),
            PipelineError::Solve(s) => Failure::Solve(s.to_string()),
            other => Failure::Mesh(other.to_string()),
        }
    }
}

fn load_target(args: &RunArgs) -> Result<RunConfig, Failure> {
    let name = match (args.target.as_str(), args.support) {
        ("beam", s) => format!("beam{}", s.unwrap_or(1)),
        (t, Some(_)) if !t.starts_with("beam") => {
            return Err(Failure::Config("--case only applies to the beam".into()));
        }
        (t, _) => t.to_string(),
    };
    if let Some(c) = builtin_case(&name) {
        return Ok(c);
    }
    let path = Path::new(&args.target);
    if !path.exists() {
        return Err(Failure::Config(format!(
            "`{}` is neither a builtin case ({}, beam) nor a readable file",
            args.target,
            BUILTIN_NAMES.join(", ")
        )));
    }
    Ok(RunConfig::load(path)?)
}

fn single<T: Copy>(v: &[T], flag: &str) -> Result<Option<T>, Failure> {
    match v {
        [] => Ok(None),
        [x] => Ok(Some(*x)),
        _ => Err(Failure::Config(format!("--{flag} takes a single value here"))),
    }
}

fn configure(args: &RunArgs, study: bool) -> Result<RunConfig, Failure> {
    let mut c = load_target(args)?;
    if let Some(q) = args.q {
        c.adaptivity.q = q;
    }
    if let Some(out) = &args.out {
        c.output.dir = out.clone();
    }
    let steps = args.corner_steps.as_deref().map(parse_steps).transpose()?;
    if study {
        let s = c.study.get_or_insert_with(|| cdfem::config::StudySpec {
            nd: vec![c.background.nd],
            p: vec![c.background.p],
            shapes: vec![],
            corner_steps: vec![],
        });
        if !args.nd.is_empty() {
            s.nd = args.nd.clone();
        }
        if !args.p.is_empty() {
            s.p = args.p.clone();
        }
        if !args.shape.is_empty() {
            s.shapes = args.shape.clone();
        }
        if let Some(st) = steps {
            s.corner_steps = st;
        }
    } else {
        if let Some(nd) = single(&args.nd, "nd")? {
            c.background.nd = nd;
        }
        if let Some(p) = single(&args.p, "p")? {
            c.background.p = p;
        }
        if let Some(s) = single(&args.shape, "shape")? {
            c.background.shape = s;
        }
        if let Some(st) = steps {
            let s = single(&st, "corner-steps")?.unwrap_or(0);
            for m in &mut c.adaptivity.corner_marks {
                m.steps = s;
            }
        }
    }
    c.validate()?;
    Ok(c)
}

fn write(dir: &Path, file: &str, text: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Output(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(file);
    fs::write(&path, text).map_err(|e| Failure::Output(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn write_mesh_outputs(c: &RunConfig, out: &MeshOutcome, u: Option<&[f64]>) -> Result<(), Failure> {
    let dir = &c.output.dir;
    write(dir, &format!("{}_config.json", c.name), &(c.effective_json() + "\n"))?;
    let mesh = write(dir, &format!("{}.mesh", c.name), &export_native(&out.mesh, u))?;
    let summary = serde_json::to_string_pretty(&mesh_summary(out)).expect("summary serializes");
    write(dir, &format!("{}_quality.json", c.name), &(summary + "\n"))?;
    println!("mesh      {}", mesh.display());
    if c.output.vtk {
        let vtk = write(dir, &format!("{}.vtk", c.name), &export_vtk(&out.mesh, u))?;
        println!("vtk       {}", vtk.display());
    }
    Ok(())
}

fn print_mesh(out: &MeshOutcome) {
    let q = &out.quality;
    println!(
        "elements  {} ({} nodes, max level {}), area {:.10}",
        out.mesh.elements.len(),
        out.mesh.nodes.len(),
        out.max_level,
        q.total_area
    );
    println!("quality   min det ratio {:.3e}, min scaled det {:.3e}", q.min_det_ratio, q.min_scaled_det);
    println!(
        "audit     {} (mismatched {}, hanging {}, duplicates {})",
        if out.audit.passes() { "ok" } else { "FAILED" },
        out.audit.mismatched,
        out.audit.hanging,
        out.audit.duplicate_nodes
    );
}

fn cmd_mesh(args: &RunArgs) -> Result<(), Failure> {
    let c = configure(args, false)?;
    let out = generate_mesh(&c)?;
    print_mesh(&out);
    write_mesh_outputs(&c, &out, None)
}

fn cmd_solve(args: &RunArgs) -> Result<(), Failure> {
    let c = configure(args, false)?;
    let out = generate_mesh(&c)?;
    print_mesh(&out);
    let sol = solve_mesh(&c, &out.mesh, !args.no_condition)?;
    println!("energy    {:.12e}", sol.energy);
    println!("residual  {:.3e}", sol.residual);
    if let Some(k) = sol.condition {
        println!("condition {k:.6e}");
    }
    let mut summary = serde_json::json!({
        "case": c.name,
        "dofs": 2 * out.mesh.nodes.len(),
        "energy": sol.energy,
        "residual": sol.residual,
        "condition": sol.condition,
    });
    if let Some(e_ref) = c.reference_energy {
        let err = (sol.energy - e_ref).abs() / e_ref;
        println!("energy error {err:.6e} (reference {e_ref})");
        summary["reference_energy"] = e_ref.into();
        summary["energy_error"] = err.into();
    }
    if let Some(spec) = &c.oracle {
        let e = l2_error(&out.mesh, &sol.u, &Oracle::from_spec(spec));
        println!("L2 error  {:.6e} (relative {:.6e})", e.abs, e.rel);
        summary["err_L2"] = e.abs.into();
        summary["err_L2_rel"] = e.rel.into();
    }
    write_mesh_outputs(&c, &out, Some(&sol.u))?;
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write(&c.output.dir, &format!("{}_solution.json", c.name), &text)?;
    Ok(())
}

fn print_rates(report: &StudyReport) {
    let mut keys: Vec<(Option<Shape>, u8)> = Vec::new();
    for r in &report.rows {
        if !keys.contains(&(r.shape, r.p)) {
            keys.push((r.shape, r.p));
        }
    }
    for (shape, p) in keys {
        let rows: Vec<_> = report.rows.iter().filter(|r| r.shape == shape && r.p == p).collect();
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let last = |f: &dyn Fn(&cdfem::verify::StudyRow) -> Option<f64>| {
            let e: Vec<f64> = rows.iter().map(|r| f(r).unwrap_or(f64::NAN)).collect();
            rates(&h, &e).last().copied().flatten()
        };
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:6.3}")).unwrap_or_else(|| "     -".into());
        println!(
            "{:>4} p={p}  rate L2 {}  interp {}  int {}  energy {}",
            shape.map(|s| s.name()).unwrap_or(""),
            fmt(last(&|r| r.err_l2)),
            fmt(last(&|r| r.err_interp)),
            fmt(last(&|r| r.err_int)),
            fmt(last(&|r| r.err_energy)),
        );
    }
}

fn cmd_study(args: &RunArgs) -> Result<(), Failure> {
    let c = configure(args, true)?;
    let report = run_convergence_study(&c)?;
    write(&c.output.dir, &format!("{}_config.json", c.name), &(c.effective_json() + "\n"))?;
    let csv = write(&c.output.dir, &format!("{}_study.csv", c.name), &report.to_csv())?;
    print_rates(&report);
    println!("csv       {}", csv.display());
    let failed: Vec<_> = report.rows.iter().filter_map(|r| r.failure.as_ref().map(|f| (r, f))).collect();
    for (r, f) in &failed {
        eprintln!("row {} {} p={} nd={} failed: {f}", r.case, r.shape.map(|s| s.name()).unwrap_or(""), r.p, r.nd);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Mesh(format!("{} of {} study rows failed", failed.len(), report.rows.len())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Mesh(a) => cmd_mesh(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Study(a) => cmd_study(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

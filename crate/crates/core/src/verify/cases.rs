use crate::config::{BackgroundSpec, DirichletSpec, DomainSpec, NeumannSpec, OracleSpec, OutputSpec, RunConfig, StudySpec};
use crate::elasticity::{Material, RegionMaterial, TractionProfile};
use crate::elements::Shape;
use crate::geometry::{LevelSet, Point, SignPattern};
use crate::refine::{AdaptivityConfig, CornerMark};

pub const BUILTIN_NAMES: [&str; 5] = ["hole", "inclusion", "beam1", "beam2", "spanner"];

pub const HOLE_RADIUS: f64 = 0.7123;

fn pat(s: &str) -> SignPattern {
    SignPattern::parse(s).expect("valid pattern")
}

fn mat(e: f64, nu: f64) -> Material {
    Material::new(e, nu).expect("valid material")
}

fn box_sides_exact() -> Vec<DirichletSpec> {
    ["box_bottom", "box_right", "box_top", "box_left"]
        .iter()
        .map(|g| DirichletSpec { group: g.to_string(), ux: None, uy: None, exact: true })
        .collect()
}

fn fixed(group: &str) -> DirichletSpec {
    DirichletSpec { group: group.into(), ux: Some(0.0), uy: Some(0.0), exact: false }
}

fn base(name: &str, lo: [f64; 2], hi: [f64; 2], background: BackgroundSpec) -> RunConfig {
    RunConfig {
        name: name.into(),
        domain: DomainSpec { lo, hi },
        background,
        levelsets: Vec::new(),
        void: Vec::new(),
        materials: Vec::new(),
        dirichlet: Vec::new(),
        neumann: Vec::new(),
        body_force: [0.0; 2],
        adaptivity: AdaptivityConfig::default(),
        oracle: None,
        reference_energy: None,
        study: None,
        output: OutputSpec::default(),
    }
}

fn hole() -> RunConfig {
    let m = mat(1000.0, 0.3);
    let mut c = base("hole", [-1.0, -1.0], [1.0, 1.0], BackgroundSpec { nd: 10, grid: [1, 1], shape: Shape::Quad, p: 2 });
    c.levelsets = vec![LevelSet::circle(0.0, 0.0, HOLE_RADIUS)];
    c.void = vec![pat("-")];
    c.materials = vec![RegionMaterial { region: pat(""), material: m }];
    c.dirichlet = box_sides_exact();
    c.oracle = Some(OracleSpec::Hole { sigma0: 100.0, radius: HOLE_RADIUS, material: m });
    c.study = Some(StudySpec { nd: vec![6, 10, 20, 30], p: vec![1, 2, 3], shapes: vec![Shape::Quad, Shape::Tri], corner_steps: vec![] });
    c
}

/// Inclusion material inside the circle, matrix outside; see the notes on the
/// material assignment in the README.
fn inclusion() -> RunConfig {
    let inner = mat(10.0, 0.3);
    let outer = mat(1.0, 0.25);
    let mut c = base("inclusion", [-1.0, -1.0], [1.0, 1.0], BackgroundSpec { nd: 10, grid: [1, 1], shape: Shape::Quad, p: 2 });
    c.levelsets = vec![LevelSet::circle(0.0, 0.0, HOLE_RADIUS)];
    c.materials = vec![
        RegionMaterial { region: pat("-"), material: inner },
        RegionMaterial { region: pat("+"), material: outer },
    ];
    c.dirichlet = box_sides_exact();
    c.oracle = Some(OracleSpec::Inclusion { a: HOLE_RADIUS, b: 2.0, inner, outer });
    c.study = Some(StudySpec { nd: vec![6, 10, 20, 30], p: vec![1, 2, 3], shapes: vec![Shape::Quad, Shape::Tri], corner_steps: vec![] });
    c
}

pub const BEAM_ENERGY: [f64; 2] = [0.03246547385, 0.02361112384];

fn beam(case: usize) -> RunConfig {
    let mut c = base(
        &format!("beam{case}"),
        [0.0, -0.5],
        [5.0, 0.5],
        BackgroundSpec { nd: 8, grid: [5, 1], shape: Shape::Quad, p: 3 },
    );
    let radii = [22e-3, 12e-3, 8e-3, 6e-3, 6e-3];
    for (i, r) in radii.iter().enumerate() {
        c.levelsets.push(LevelSet::ellipse(0.25, 0.75, (2 * i + 1) as f64 / 2.0, *r));
    }
    let g = vec![2.0 / 5.0, -2.0 / 25.0, 1.0 / 125.0];
    c.levelsets.push(LevelSet::graph(g.clone(), 1.0));
    c.levelsets.push(LevelSet::graph(g, -1.0));
    c.void = vec![pat("-"), pat("?-"), pat("??-"), pat("???-"), pat("????-"), pat("?????-"), pat("??????+")];
    c.materials = vec![RegionMaterial { region: pat(""), material: mat(2.1e8, 0.3) }];
    c.body_force = [0.0, -78.5];
    // zero at y = +-0.2, -100 in the middle
    c.neumann = vec![NeumannSpec {
        group: "box_right".into(),
        profile: TractionProfile { axis: [0.0, 1.0], origin: [5.0, 0.0], tx: vec![], ty: vec![-100.0, 0.0, 2500.0] },
    }];
    c.dirichlet = vec![fixed(if case == 1 { "box_left" } else { "interface_0" })];
    if case == 1 {
        c.adaptivity.corner_marks = vec![CornerMark { x: 0.0, y: 0.4, steps: 0 }, CornerMark { x: 0.0, y: -0.4, steps: 0 }];
    }
    c.reference_energy = Some(BEAM_ENERGY[case - 1]);
    c.study = Some(StudySpec { nd: vec![8, 16, 24, 32], p: vec![1, 2, 3], shapes: vec![], corner_steps: vec![] });
    c
}

pub const SPANNER_ENERGY: f64 = 61.49248;
/// Overkill energy of the outline built here (n_d 96, p 3, 8 corner steps).
pub const SPANNER_MODEL_ENERGY: f64 = 61.3887;

fn spanner_levelsets() -> Vec<LevelSet> {
    let (s, c) = 15f64.to_radians().sin_cos();
    vec![
        LevelSet::halfplane(0.0, 30.0, 0.0, 1.0),
        LevelSet::halfplane(0.0, -30.0, 0.0, 1.0),
        LevelSet::halfplane(0.0, 36.100494, -s, c),
        LevelSet::halfplane(0.0, -13.592762, -s, c),
        LevelSet::halfplane(0.0, -929.486795, c, s),
        LevelSet::circle(0.0, 0.0, 42.0),
        LevelSet::circle(0.0, 0.0, 80.0),
        LevelSet::circle(-125.361456, 66.697117, 65.1),
        LevelSet::circle(-90.856482, -81.419283, 44.1),
        LevelSet::circle(-37.0, -21.0, 80.0),
        LevelSet::circle(-37.0, 21.0, 80.0),
    ]
}

/// Common root of two level sets by Newton from a guess.
fn intersect(a: &LevelSet, b: &LevelSet, guess: Point) -> Point {
    let mut x = guess;
    for _ in 0..50 {
        let (fa, ga) = a.eval_gradient(&x);
        let (fb, gb) = b.eval_gradient(&x);
        let j = nalgebra::Matrix2::new(ga.x, ga.y, gb.x, gb.y);
        let dx = j.try_inverse().expect("transversal zero sets") * nalgebra::Vector2::new(fa, fb);
        x -= dx;
        if dx.norm() < 1e-13 {
            break;
        }
    }
    x
}

/// Corners of the spanner outline where the stress is singular or the boundary kinks.
pub fn spanner_corners() -> Vec<Point> {
    let ls = spanner_levelsets();
    let (mt, mb, hup, hbot, c1, c2, c3, c4, c5) = (0, 1, 2, 3, 5, 6, 7, 8, 9);
    [
        (mt, c1, (-29.4, 30.0)),
        (mb, c1, (-29.4, -30.0)),
        (c3, c5, (-61.3, 55.2)),
        (c3, hup, (-90.1, 11.9)),
        (c2, c4, (-51.8, -61.0)),
        (c4, hbot, (-88.7, -37.4)),
        (c2, c5, (-56.6, 56.6)),
    ]
    .iter()
    .map(|&(i, j, (x, y))| intersect(&ls[i], &ls[j], Point::new(x, y)))
    .collect()
}

fn spanner() -> RunConfig {
    let mut c = base(
        "spanner",
        [-250.0, -85.0],
        [74.0, 85.0],
        BackgroundSpec { nd: 10, grid: [2, 1], shape: Shape::Tri, p: 3 },
    );
    c.levelsets = spanner_levelsets();
    // signs: mtop mbot hup hbot hend c1 c2 c3 c4 c5 c6
    // material = ((head disk c2 or neck lens c5 & c6) minus fillets c3, c4) or handle strip,
    // minus the mouth; written out as a sum of void products
    let void = [
        "+?????+??+",
        "+?????+???+",
        "+??????-",
        "+???????-",
        "-+???--",
        "-+????-??+",
        "-+????-???+",
        "??+???+??+",
        "??+???+???+",
        "??+????-",
        "??+?????-",
        "???-??+??+",
        "???-??+???+",
        "???-???-",
        "???-????-",
        "????-?+??+",
        "????-?+???+",
        "????-??-",
        "????-???-",
    ];
    c.void = void.iter().map(|s| pat(s)).collect();
    c.materials = vec![RegionMaterial { region: pat(""), material: mat(2.1e5, 0.3) }];
    c.body_force = [0.0, -78.5e-6];
    c.dirichlet = vec![fixed("interface_0"), fixed("interface_1")];
    c.neumann = vec![spanner_traction()];
    c.adaptivity.corner_marks = spanner_corners().iter().map(|p| CornerMark { x: p.x, y: p.y, steps: 0 }).collect();
    c.reference_energy = Some(SPANNER_ENERGY);
    c.study = Some(StudySpec { nd: vec![6, 10, 16, 24], p: vec![1, 2, 3], shapes: vec![], corner_steps: vec![] });
    c
}

/// Linear normal traction on the handle end face: -100 at the bottom edge,
/// +100 at the top edge, applied along the outward normal.
pub fn spanner_traction() -> NeumannSpec {
    let (s, c) = 15f64.to_radians().sin_cos();
    // handle across-direction (normal of the side lines) and axis direction (normal of the end line)
    let across = [-s, c];
    let axis = [c, s];
    let mid = 0.5 * (36.100494 + -13.592762) * c;
    let end = -929.486795 * s;
    let origin = [mid * across[0] + end * axis[0], mid * across[1] + end * axis[1]];
    let slope = 100.0 / 24.0;
    NeumannSpec {
        group: "interface_4".into(),
        profile: TractionProfile { axis: across, origin, tx: vec![0.0, -slope * axis[0]], ty: vec![0.0, -slope * axis[1]] },
    }
}

pub fn builtin_case(name: &str) -> Option<RunConfig> {
    match name {
        "hole" => Some(hole()),
        "inclusion" => Some(inclusion()),
        "beam1" => Some(beam(1)),
        "beam2" => Some(beam(2)),
        "spanner" => Some(spanner()),
        _ => None,
    }
}

pub fn builtin_cases() -> Vec<RunConfig> {
    BUILTIN_NAMES.iter().filter_map(|n| builtin_case(n)).collect()
}

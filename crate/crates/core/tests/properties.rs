mod common;

use std::collections::HashMap;

use cdfem::config::OracleSpec;
use cdfem::elasticity::{assemble, BoundaryConditions, Material, RegionMaterial};
use cdfem::elements::Shape;
use cdfem::geometry::{LevelSet, SignPattern};
use cdfem::pipeline::{generate_mesh, solve_mesh};
use cdfem::refine::AdaptivityConfig;
use cdfem::verify::{builtin_case, inclusion_alpha, HoleOracle, InclusionOracle, BUILTIN_NAMES};
use common::*;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, rng_seed: RngSeed::Fixed(0x5eed), ..ProptestConfig::default() }
}

fn shape() -> impl Strategy<Value = Shape> {
    prop_oneof![Just(Shape::Quad), Just(Shape::Tri)]
}

/// Circle well inside `[-1, 1]^2`.
fn circle() -> impl Strategy<Value = LevelSet> {
    (-0.3..0.3f64, -0.3..0.3f64, 0.15..0.6f64).prop_map(|(cx, cy, r)| LevelSet::circle(cx, cy, r))
}

fn check_cut(cut: &Cut, levelsets: &[LevelSet]) -> Result<(), TestCaseError> {
    prop_assert_eq!(hanging_nodes(cut), 0);
    let a = audit(&cut.mesh);
    prop_assert!(a.passes(), "{:?}", a);
    prop_assert!(area_defect(cut) < 1e-10, "piece areas {}", area_defect(cut));
    prop_assert!(total_area_defect(cut) < 1e-10);
    let (checked, bad) = signature_mismatches(&cut.mesh, levelsets);
    prop_assert!(checked > 0);
    prop_assert_eq!(bad, 0);
    if cut.adaptive.report.relax.settled {
        let moved = relax_second_pass(cut, levelsets, &AdaptivityConfig::default());
        prop_assert!(moved <= 1e-9, "second relaxation pass moved {} h", moved);
    }
    Ok(())
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn single_circle_meshes_are_consistent(ls in circle(), shape in shape(), p in 1u8..=3, nd in 3usize..9) {
        let cut = unit_circle_domain(shape, nd, p, &ls).unwrap();
        check_cut(&cut, std::slice::from_ref(&ls))?;
        prop_assert!(cut.adaptive.report.relax.settled);
        // with later level sets, split nodes sit on the approximated edge instead
        prop_assert!(interface_node_distance(&cut.mesh, std::slice::from_ref(&ls)) < 1e-10);
    }

    #[test]
    fn circle_and_line_meshes_are_consistent(
        ls in circle(),
        angle in 0.0..std::f64::consts::TAU,
        offset in -0.5..0.5f64,
        shape in shape(),
        p in 1u8..=3,
        nd in 3usize..8,
    ) {
        let line = LevelSet::halfplane(offset * angle.cos(), offset * angle.sin(), angle.cos(), angle.sin());
        let levelsets = [ls, line];
        let cut = cut_box([-1.0, -1.0], [1.0, 1.0], [nd, nd], shape, p, &levelsets, &AdaptivityConfig::default()).unwrap();
        check_cut(&cut, &levelsets)?;
    }

    #[test]
    fn patch_test_reproduces_linear_fields(
        ls in circle(),
        shape in shape(),
        p in 1u8..=3,
        nd in 3usize..7,
        hole in any::<bool>(),
        a in prop::array::uniform2(-1.0..1.0f64),
        b in prop::array::uniform2(prop::array::uniform2(-1e-2..1e-2f64)),
    ) {
        let cut = unit_circle_domain(shape, nd, p, &ls).unwrap();
        let void = if hole { vec![SignPattern::parse("-").unwrap()] } else { vec![] };
        let err = patch_test_error(&cut.mesh, &void, a, b);
        prop_assert!(err < 1e-8, "patch test error {}", err);
    }

    #[test]
    fn quadrature_integrates_monomials(shape in shape(), degree in 0u32..=20, split in 0.0..1.0f64, frac in 0.0..1.0f64) {
        let total = (frac * (degree as f64 + 1.0)).floor().min(degree as f64) as u32;
        let i = (split * (total as f64 + 1.0)).floor().min(total as f64) as u32;
        let j = total - i;
        let got = monomial_rule(shape, degree, i, j);
        let exact = monomial_exact(shape, i, j);
        prop_assert!((got - exact).abs() < 1e-13, "{:?} x^{} y^{}: {} vs {}", shape, i, j, got, exact);
    }
}

fn coarse(name: &str) -> cdfem::config::RunConfig {
    let c = builtin_case(name).unwrap();
    let nd = if name == "spanner" { 6 } else { c.background.nd.min(8) };
    c.with_mesh(nd, 2, c.background.shape)
}

#[test]
fn builtin_geometries_pass_audits() {
    for name in BUILTIN_NAMES {
        let cfg = coarse(name);
        let cut = cut_case(&cfg).unwrap();
        assert_eq!(hanging_nodes(&cut), 0, "{name}");
        assert!(audit(&cut.mesh).passes(), "{name}: {:?}", audit(&cut.mesh));
        assert!(area_defect(&cut) < 1e-10, "{name}: {}", area_defect(&cut));
        assert!(total_area_defect(&cut) < 1e-10, "{name}");
        assert_eq!(signature_mismatches(&cut.mesh, &cfg.levelsets).1, 0, "{name}");
        let out = generate_mesh(&cfg).unwrap();
        assert!(out.audit.passes(), "{name} after dropping voids: {:?}", out.audit);
    }
}

#[test]
fn builtin_cases_are_in_equilibrium() {
    for name in BUILTIN_NAMES {
        let (defect, residual) = equilibrium_defect(&coarse(name));
        assert!(defect < 1e-9, "{name}: net force defect {defect:e}");
        assert!(residual < 1e-9, "{name}: residual {residual:e}");
    }
}

#[test]
fn stiffness_is_symmetric() {
    let cfg = coarse("inclusion");
    let out = generate_mesh(&cfg).unwrap();
    let sys = assemble(&out.mesh, &cfg.materials, &BoundaryConditions::default()).unwrap();
    let s = sys.k.symbolic();
    let mut entries = HashMap::new();
    let mut max: f64 = 0.0;
    for j in 0..sys.k.ncols() {
        for idx in s.col_range(j) {
            let v = sys.k.val()[idx];
            entries.insert((s.row_idx()[idx], j), v);
            max = max.max(v.abs());
        }
    }
    for (&(i, j), v) in &entries {
        let t = entries.get(&(j, i)).copied().unwrap_or(0.0);
        assert!((v - t).abs() <= 1e-10 * max, "K[{i},{j}] = {v} vs {t}");
    }
}

#[test]
fn oracles_satisfy_the_strong_form() {
    let hole = builtin_case("hole").unwrap();
    let m = hole.materials[0].material;
    let o = HoleOracle::new(100.0, cdfem::verify::HOLE_RADIUS, &m);
    let (div, trac) = hole_strong_form(&o, &m);
    assert!(div < 1e-4, "hole div sigma {div:e}");
    assert!(trac < 1e-4, "hole traction {trac:e}");

    let inc = builtin_case("inclusion").unwrap();
    let find = |p: &str| inc.materials.iter().find(|r: &&RegionMaterial| r.region.to_text() == p).unwrap().material;
    let (inner, outer) = (find("-"), find("+"));
    let (a, b) = (cdfem::verify::HOLE_RADIUS, 2.0);
    assert!((inclusion_alpha(a, b, &inner, &outer) - 1.12566).abs() < 5e-5);
    let o = InclusionOracle::new(a, b, &inner, &outer);
    let (div, ju, jt) = inclusion_strong_form(&o, &inner, &outer);
    assert!(div < 1e-4, "inclusion div sigma {div:e}");
    assert!(ju < 1e-12, "displacement jump {ju:e}");
    assert!(jt < 1e-4, "traction jump {jt:e}");
}

#[test]
fn few_decompositions_fail_after_curvature_refinement() {
    let (fail, cut) =
        failure_counts(&[Shape::Quad, Shape::Tri], &[1, 2, 3], &[6, 10, 20, 30], cdfem::verify::HOLE_RADIUS);
    assert!(cut > 0);
    assert!(fail as f64 <= 0.01 * cut as f64, "{fail} of {cut} cut elements failed");
}

/// Prescribed displacements only: the discrete energy approaches the exact one from above.
#[test]
fn hole_energy_does_not_increase_under_refinement() {
    let cfg = builtin_case("hole").unwrap();
    for shape in [Shape::Quad, Shape::Tri] {
        for p in 1..=3 {
            let mut last = f64::INFINITY;
            for nd in [6, 10, 20, 30] {
                let c = cfg.with_mesh(nd, p, shape);
                let out = generate_mesh(&c).unwrap();
                let e = solve_mesh(&c, &out.mesh, false).unwrap().energy;
                assert!(e <= last * (1.0 + 1e-12), "{shape:?} p={p} nd={nd}: {e} after {last}");
                last = e;
            }
        }
    }
}

#[test]
fn zero_material_contrast_matches_the_plain_mesh() {
    // same material on both sides of an interface changes nothing but the mesh
    let cfg = builtin_case("inclusion").unwrap().with_mesh(8, 2, Shape::Quad);
    let mut same = cfg.clone();
    let m = Material::new(1.0, 0.25).unwrap();
    for r in &mut same.materials {
        r.material = m;
    }
    same.oracle = Some(OracleSpec::Inclusion { a: cdfem::verify::HOLE_RADIUS, b: 2.0, inner: m, outer: m });
    let out = generate_mesh(&same).unwrap();
    let e = solve_mesh(&same, &out.mesh, false).unwrap().energy;
    // equal phases give alpha = 1, so u = x: energy density 2 (lambda + mu)
    let (l, mu) = m.lame();
    let exact = (l + mu) * 2.0 * 4.0;
    assert!(((e - exact) / exact).abs() < 1e-10, "{e} vs {exact}");
}

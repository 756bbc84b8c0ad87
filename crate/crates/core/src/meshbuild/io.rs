use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{tag_name, ConformingMesh, MeshElement, MeshError};
use crate::cutcell::EdgeTag;
use crate::elements::{lattice, Shape};
use crate::geometry::{Point, RegionSignature};
use crate::refine::SIDE_NAMES;

const HEADER: &str = "CDFEM-MESH v1";

/// Plain-text mesh with optional displacement field. Coordinates are written
/// with 17 significant digits so a re-import is bit-identical.
pub fn export_native(mesh: &ConformingMesh, displacement: Option<&[f64]>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "nodes {}", mesh.nodes.len());
    for (i, p) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(s, "{i} {:.16e} {:.16e}", p.x, p.y);
    }
    let _ = writeln!(s, "elements {}", mesh.elements.len());
    for (i, el) in mesh.elements.iter().enumerate() {
        let _ = write!(s, "{i} {} {} {}", el.shape.name(), el.order, el.region.to_text());
        for n in &el.nodes {
            let _ = write!(s, " {n}");
        }
        s.push('\n');
    }
    for (name, ids) in &mesh.groups() {
        let _ = write!(s, "group {name}");
        for n in ids {
            let _ = write!(s, " {n}");
        }
        s.push('\n');
    }
    if let Some(u) = displacement {
        let _ = writeln!(s, "field u 2");
        for i in 0..mesh.nodes.len() {
            let _ = writeln!(s, "{i} {:.16e} {:.16e}", u[2 * i], u[2 * i + 1]);
        }
    }
    s
}

pub fn write_native(path: &Path, mesh: &ConformingMesh, displacement: Option<&[f64]>) -> Result<(), MeshError> {
    Ok(std::fs::write(path, export_native(mesh, displacement))?)
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<Vec<&'a str>, MeshError> {
        loop {
            let (i, l) = self.it.next().ok_or(MeshError::Parse { line: self.line + 1, msg: "unexpected end".into() })?;
            self.line = i + 1;
            if !l.trim().is_empty() {
                return Ok(l.split_whitespace().collect());
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> MeshError {
        MeshError::Parse { line: self.line, msg: msg.into() }
    }

    fn keyed(&mut self, key: &str) -> Result<usize, MeshError> {
        let t = self.next()?;
        match t.as_slice() {
            [k, n] if *k == key => n.parse().map_err(|_| self.err(format!("bad count for {key}"))),
            _ => Err(self.err(format!("expected `{key} <count>`"))),
        }
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T, MeshError> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }
}

/// Parse the native format. Tags of boundary edges are rebuilt from the node
/// groups: an edge is tagged when all its nodes belong to one group.
pub fn import_native(text: &str) -> Result<(ConformingMesh, Option<Vec<f64>>), MeshError> {
    let mut r = Lines { it: text.lines().enumerate(), line: 0 };
    if r.next()?.join(" ") != HEADER {
        return Err(r.err("missing header"));
    }
    let n = r.keyed("nodes")?;
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let t = r.next()?;
        if t.len() != 3 || r.num::<usize>(t[0])? != i {
            return Err(r.err("bad node line"));
        }
        nodes.push(Point::new(r.num(t[1])?, r.num(t[2])?));
    }
    let m = r.keyed("elements")?;
    let mut elements = Vec::with_capacity(m);
    for i in 0..m {
        let t = r.next()?;
        if t.len() < 4 || r.num::<usize>(t[0])? != i {
            return Err(r.err("bad element line"));
        }
        let shape = Shape::parse(t[1]).ok_or_else(|| r.err("unknown shape"))?;
        let order: u8 = r.num(t[2])?;
        if !(1..=crate::elements::MAX_ORDER).contains(&order) {
            return Err(r.err("order out of range"));
        }
        let region = RegionSignature::from_text(t[3]).map_err(|e| r.err(e.to_string()))?;
        let ids = t[4..].iter().map(|s| r.num::<usize>(s)).collect::<Result<Vec<_>, _>>()?;
        if ids.len() != shape.n_nodes(order) || ids.iter().any(|&k| k >= n) {
            return Err(r.err("bad connectivity"));
        }
        elements.push(MeshElement {
            shape,
            order,
            nodes: ids,
            region,
            parent: None,
            tags: vec![None; shape.n_corners()],
        });
    }
    let n_levelsets = elements.first().map_or(0, |e| e.region.len());
    if elements.iter().any(|e| e.region.len() != n_levelsets) {
        return Err(r.err("inconsistent signature lengths"));
    }
    let mut groups = BTreeMap::new();
    let mut field = None;
    while let Ok(t) = r.next() {
        match t.as_slice() {
            ["group", name, ids @ ..] => {
                let ids = ids.iter().map(|s| r.num::<usize>(s)).collect::<Result<Vec<_>, _>>()?;
                if ids.iter().any(|&k| k >= n) {
                    return Err(r.err("group node out of range"));
                }
                groups.insert(name.to_string(), ids);
            }
            ["field", "u", "2"] => {
                let mut u = Vec::with_capacity(2 * n);
                for i in 0..n {
                    let t = r.next()?;
                    if t.len() != 3 || r.num::<usize>(t[0])? != i {
                        return Err(r.err("bad field line"));
                    }
                    u.push(r.num(t[1])?);
                    u.push(r.num(t[2])?);
                }
                field = Some(u);
            }
            _ => return Err(r.err("expected `group` or `field u 2`")),
        }
    }
    let mut mesh = ConformingMesh { nodes, elements, n_levelsets, parent_areas: Vec::new() };
    let mut tags: Vec<(EdgeTag, Vec<bool>)> = (0..SIDE_NAMES.len())
        .map(|s| EdgeTag::Box(s as u8))
        .chain((0..n_levelsets).map(EdgeTag::Interface))
        .map(|t| (t, vec![false; n]))
        .collect();
    for (t, mask) in &mut tags {
        for &k in groups.get(&tag_name(t)).into_iter().flatten() {
            mask[k] = true;
        }
    }
    for (e, k) in mesh.boundary_edges() {
        let ids = mesh.edge_nodes(e, k);
        mesh.elements[e].tags[k] = tags.iter().find(|(_, m)| ids.iter().all(|&i| m[i])).map(|(t, _)| *t);
    }
    Ok((mesh, field))
}

/// Triangle lattice coordinates in VTK order: corners, edges, then the
/// interior as a smaller triangle, recursively.
fn vtk_tri_lattice(n: usize, o: usize, out: &mut Vec<(usize, usize)>) {
    if n == 0 {
        out.push((o, o));
        return;
    }
    out.extend([(o, o), (o + n, o), (o, o + n)]);
    out.extend((1..n).map(|k| (o + k, o)));
    out.extend((1..n).map(|k| (o + n - k, o + k)));
    out.extend((1..n).map(|k| (o, o + n - k)));
    if n >= 3 {
        vtk_tri_lattice(n - 3, o + 1, out);
    }
}

/// Permutation from VTK Lagrange cell order to local node order.
pub(crate) fn vtk_permutation(shape: Shape, order: u8) -> Vec<usize> {
    let p = order as usize;
    let ours = lattice(shape, order);
    let index = |c: (usize, usize)| ours.iter().position(|&l| l == c).expect("lattice node");
    match shape {
        Shape::Tri => {
            let mut v = Vec::new();
            vtk_tri_lattice(p, 0, &mut v);
            v.into_iter().map(index).collect()
        }
        Shape::Quad => {
            let mut v = vec![(0, 0), (p, 0), (p, p), (0, p)];
            v.extend((1..p).map(|k| (k, 0)));
            v.extend((1..p).map(|k| (p, k)));
            v.extend((1..p).map(|k| (k, p)));
            v.extend((1..p).map(|k| (0, k)));
            for j in 1..p {
                for i in 1..p {
                    v.push((i, j));
                }
            }
            v.into_iter().map(index).collect()
        }
    }
}

fn region_code(sig: &RegionSignature) -> u64 {
    sig.0.iter().enumerate().filter(|(_, &s)| s < 0).map(|(i, _)| 1u64 << i).sum()
}

/// Legacy VTK unstructured grid with Lagrange cells (types 69 and 70).
pub fn export_vtk(mesh: &ConformingMesh, displacement: Option<&[f64]>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\ncdfem mesh\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", p.x, p.y);
    }
    let size: usize = mesh.elements.iter().map(|e| e.nodes.len() + 1).sum();
    let _ = writeln!(s, "CELLS {} {size}", mesh.elements.len());
    let mut perms: BTreeMap<(u8, u8), Vec<usize>> = BTreeMap::new();
    for el in &mesh.elements {
        let key = (matches!(el.shape, Shape::Quad) as u8, el.order);
        let perm = perms.entry(key).or_insert_with(|| vtk_permutation(el.shape, el.order));
        let _ = write!(s, "{}", el.nodes.len());
        for &l in perm.iter() {
            let _ = write!(s, " {}", el.nodes[l]);
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.elements.len());
    for el in &mesh.elements {
        let _ = writeln!(s, "{}", if el.shape == Shape::Tri { 69 } else { 70 });
    }
    let _ = writeln!(s, "CELL_DATA {}\nSCALARS region int 1\nLOOKUP_TABLE default", mesh.elements.len());
    for el in &mesh.elements {
        let _ = writeln!(s, "{}", region_code(&el.region));
    }
    if let Some(u) = displacement {
        let _ = writeln!(s, "POINT_DATA {}\nVECTORS u double", mesh.nodes.len());
        for i in 0..mesh.nodes.len() {
            let _ = writeln!(s, "{:.16e} {:.16e} 0", u[2 * i], u[2 * i + 1]);
        }
    }
    s
}

pub fn write_vtk(path: &Path, mesh: &ConformingMesh, displacement: Option<&[f64]>) -> Result<(), MeshError> {
    Ok(std::fs::write(path, export_vtk(mesh, displacement))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LevelSet;
    use crate::meshbuild::{assemble_pieces, build_conforming_mesh};
    use crate::refine::{adaptive_mesh_loop, AdaptivityConfig, Domain, RefinementTree};

    fn sample(shape: Shape, p: u8) -> ConformingMesh {
        let mut t = RefinementTree::structured(Domain::new(Point::new(-1.0, -1.0), Point::new(1.0, 1.0)), 4, 4, shape, p);
        let ls = [LevelSet::circle(0.1, 0.0, 0.63)];
        let out = adaptive_mesh_loop(&mut t, &ls, &AdaptivityConfig::default(), &[]).unwrap();
        assemble_pieces(&out.background, &out.pieces, 1)
    }

    #[test]
    fn native_round_trip_is_exact() {
        for shape in [Shape::Tri, Shape::Quad] {
            let m = sample(shape, 3);
            let u: Vec<f64> = (0..2 * m.nodes.len()).map(|i| (i as f64).sin() / 3.0).collect();
            let text = export_native(&m, Some(&u));
            let (back, field) = import_native(&text).unwrap();
            assert_eq!(back.nodes, m.nodes);
            assert_eq!(field.unwrap(), u);
            assert_eq!(back.groups(), m.groups());
            for (a, b) in back.elements.iter().zip(&m.elements) {
                assert_eq!((a.shape, a.order, &a.nodes, &a.region), (b.shape, b.order, &b.nodes, &b.region));
            }
            let tagged = |m: &ConformingMesh| m.tagged_boundary_edges();
            assert_eq!(tagged(&back), tagged(&m));
            assert_eq!(export_native(&back, Some(&u)), text);
        }
    }

    #[test]
    fn single_linear_quad() {
        let t = RefinementTree::structured(Domain::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0)), 1, 1, Shape::Quad, 1);
        let m = build_conforming_mesh(&t.background(), &[], &[]).unwrap();
        let text = export_native(&m, None);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "nodes 4");
        assert_eq!(lines[2], "0 0.0000000000000000e0 0.0000000000000000e0");
        assert_eq!(lines[6], "elements 1");
        assert_eq!(lines[7], "0 quad 1 ~ 0 1 2 3");
        assert_eq!(lines.iter().filter(|l| l.starts_with("0 quad")).count(), 1);
    }

    #[test]
    fn malformed_input_reports_line() {
        let m = sample(Shape::Quad, 1);
        let text = export_native(&m, None).replacen("quad", "hex", 1);
        match import_native(&text) {
            Err(MeshError::Parse { line, .. }) => assert!(line > 3),
            other => panic!("{other:?}"),
        }
        assert!(import_native("nope").is_err());
    }

    #[test]
    fn vtk_orders() {
        // quad: edges 2 and 3 run reversed relative to local order
        let q = vtk_permutation(Shape::Quad, 2);
        assert_eq!(q.len(), 9);
        assert_eq!(&q[..4], &[0, 1, 2, 3]);
        let t5 = vtk_permutation(Shape::Tri, 5);
        let mut sorted = t5.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..21).collect::<Vec<_>>());
        let lat = lattice(Shape::Tri, 5);
        assert_eq!(lat[t5[15]], (1, 1));
        assert_eq!(lat[t5[16]], (3, 1));
        assert_eq!(lat[t5[17]], (1, 3));
        assert_eq!(lat[t5[18]], (2, 1));
        let m = sample(Shape::Tri, 2);
        let v = export_vtk(&m, None);
        assert!(v.contains(&format!("CELL_TYPES {}", m.elements.len())));
        assert!(v.lines().any(|l| l == "69"));
    }
}

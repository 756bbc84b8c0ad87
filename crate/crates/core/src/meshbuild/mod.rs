//! Global conforming mesh: shared nodes, mixed connectivity, region signatures,
//! boundary groups, quality audit and export.

mod io;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use thiserror::Error;

use crate::cutcell::{decompose_all, EdgeTag, Piece, PieceFailure};
use crate::elements::{tabulate, PhysicalElement, ReferenceElement, Shape};
use crate::geometry::{LevelSet, Point, RegionSignature, SignPattern};
use crate::refine::{BackgroundMesh, SIDE_NAMES};

pub use io::{export_native, export_vtk, import_native, write_native, write_vtk};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("element {element} failed to decompose against level set {}: {}", failure.levelset, failure.error)]
    Decomposition { element: usize, failure: PieceFailure },
    #[error("no elements remain after dropping void regions")]
    EmptyMesh,
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed mesh file, line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshElement {
    pub shape: Shape,
    pub order: u8,
    pub nodes: Vec<usize>,
    pub region: RegionSignature,
    /// Background element this piece came from (unknown after import).
    pub parent: Option<usize>,
    pub tags: Vec<Option<EdgeTag>>,
}

#[derive(Debug, Clone, Default)]
pub struct ConformingMesh {
    pub nodes: Vec<Point>,
    pub elements: Vec<MeshElement>,
    pub n_levelsets: usize,
    /// Areas of the background elements, for scaled-Jacobian audits.
    pub parent_areas: Vec<f64>,
}

impl ConformingMesh {
    pub fn element(&self, e: usize) -> PhysicalElement {
        let el = &self.elements[e];
        PhysicalElement::new(el.shape, el.order, el.nodes.iter().map(|&n| self.nodes[n]).collect())
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Global node ids of edge `k` of element `e`, from corner `k` to corner `k+1`.
    pub fn edge_nodes(&self, e: usize, k: usize) -> Vec<usize> {
        let el = &self.elements[e];
        ReferenceElement::get(el.shape, el.order).edge_nodes(k).iter().map(|&l| el.nodes[l]).collect()
    }

    /// Boundary edges `(element, local edge)` with their tag.
    pub fn tagged_boundary_edges(&self) -> Vec<(usize, usize, EdgeTag)> {
        self.boundary_edges()
            .into_iter()
            .filter_map(|(e, k)| self.elements[e].tags[k].map(|t| (e, k, t)))
            .collect()
    }

    /// Named node sets over boundary edges: `box_<side>`, `interface_<i>` and
    /// `boundary`. Interface edges inside the material are not part of any group.
    pub fn groups(&self) -> BTreeMap<String, Vec<usize>> {
        let mut g: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut boundary = Vec::new();
        for (e, k) in self.boundary_edges() {
            let nodes = self.edge_nodes(e, k);
            if let Some(t) = &self.elements[e].tags[k] {
                g.entry(tag_name(t)).or_default().extend(&nodes);
            }
            boundary.extend(nodes);
        }
        g.insert("boundary".to_string(), boundary);
        for v in g.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        g
    }

    /// Edges referenced by exactly one element.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut list = Vec::new();
        for (e, el) in self.elements.iter().enumerate() {
            for k in 0..el.shape.n_corners() {
                let key = edge_key(self.edge_nodes(e, k));
                *count.entry(key.clone()).or_default() += 1;
                list.push((e, k, key));
            }
        }
        list.into_iter().filter(|(_, _, key)| count[key] == 1).map(|(e, k, _)| (e, k)).collect()
    }

    pub fn area(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.element(e).area()).sum()
    }

    /// Area per region signature.
    pub fn region_areas(&self) -> BTreeMap<RegionSignature, f64> {
        let mut out = BTreeMap::new();
        for e in 0..self.elements.len() {
            *out.entry(self.elements[e].region.clone()).or_insert(0.0) += self.element(e).area();
        }
        out
    }

    /// Shortest element edge chord, for tolerances.
    pub fn h_min(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.element(e).size()).fold(f64::INFINITY, f64::min)
    }
}

pub fn tag_name(t: &EdgeTag) -> String {
    match t {
        EdgeTag::Box(s) => format!("box_{}", SIDE_NAMES[*s as usize]),
        EdgeTag::Interface(i) => format!("interface_{i}"),
    }
}

fn edge_key(mut v: Vec<usize>) -> Vec<usize> {
    if v[0] > v[v.len() - 1] {
        v.reverse();
    }
    v
}

/// Spatial-hash node table; first occurrence wins, so ids follow element order.
struct NodeTable {
    cell: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
    nodes: Vec<Point>,
}

impl NodeTable {
    fn new(tol: f64) -> Self {
        NodeTable { cell: tol, map: HashMap::new(), nodes: Vec::new() }
    }

    fn insert(&mut self, p: Point) -> usize {
        let (ix, iy) = ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.map.get(&(ix + dx, iy + dy)) {
                    for &id in ids {
                        if (self.nodes[id] - p).norm() <= self.cell {
                            return id;
                        }
                    }
                }
            }
        }
        let id = self.nodes.len();
        self.nodes.push(p);
        self.map.entry((ix, iy)).or_default().push(id);
        id
    }
}

/// Merge decomposed pieces into one mesh with shared nodes.
pub fn assemble_pieces(bg: &BackgroundMesh, pieces: &[Vec<Piece>], n_levelsets: usize) -> ConformingMesh {
    let h_min = (0..bg.elements.len()).map(|e| bg.original_size(e)).fold(f64::INFINITY, f64::min);
    let mut table = NodeTable::new(1e-9 * h_min);
    let mut elements = Vec::new();
    for (parent, list) in pieces.iter().enumerate() {
        for pc in list {
            let nodes = pc.element.nodes.iter().map(|&p| table.insert(p)).collect();
            elements.push(MeshElement {
                shape: pc.element.shape,
                order: pc.element.order,
                nodes,
                region: pc.signature.clone(),
                parent: Some(parent),
                tags: pc.tags.clone(),
            });
        }
    }
    let parent_areas = (0..bg.elements.len()).map(|e| bg.element(e).area()).collect();
    ConformingMesh { nodes: table.nodes, elements, n_levelsets, parent_areas }
}

/// Decompose every background element against all level sets in order.
pub fn build_conforming_mesh(
    bg: &BackgroundMesh,
    levelsets: &[LevelSet],
    prune: &[SignPattern],
) -> Result<ConformingMesh, MeshError> {
    let pieces: Vec<Result<Vec<Piece>, PieceFailure>> = (0..bg.elements.len())
        .into_par_iter()
        .map(|e| decompose_all(&bg.element(e), bg.edge_tags(e), levelsets, prune))
        .collect();
    let mut ok = Vec::with_capacity(pieces.len());
    for (element, r) in pieces.into_iter().enumerate() {
        ok.push(r.map_err(|failure| MeshError::Decomposition { element, failure })?);
    }
    Ok(assemble_pieces(bg, &ok, levelsets.len()))
}

/// Remove elements matching any void pattern and compact node ids.
pub fn drop_regions(mesh: &ConformingMesh, void: &[SignPattern]) -> Result<ConformingMesh, MeshError> {
    let keep: Vec<&MeshElement> =
        mesh.elements.iter().filter(|el| !void.iter().any(|p| p.matches(&el.region))).collect();
    if keep.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    let mut remap = vec![usize::MAX; mesh.nodes.len()];
    let mut nodes = Vec::new();
    let mut elements = Vec::with_capacity(keep.len());
    for el in keep {
        let ids = el
            .nodes
            .iter()
            .map(|&n| {
                if remap[n] == usize::MAX {
                    remap[n] = nodes.len();
                    nodes.push(mesh.nodes[n]);
                }
                remap[n]
            })
            .collect();
        elements.push(MeshElement { nodes: ids, ..el.clone() });
    }
    Ok(ConformingMesh { nodes, elements, n_levelsets: mesh.n_levelsets, parent_areas: mesh.parent_areas.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementQuality {
    pub min_det: f64,
    pub max_det: f64,
    pub area: f64,
    /// `min det * ref area / parent area`, when the parent is known.
    pub scaled_det: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QualityReport {
    pub elements: Vec<ElementQuality>,
    pub min_det_ratio: f64,
    pub min_scaled_det: f64,
    pub min_area: f64,
    pub total_area: f64,
    pub relaxed_nodes: usize,
    pub decomposition_failures: usize,
}

pub fn quality_report(mesh: &ConformingMesh) -> QualityReport {
    let elements: Vec<ElementQuality> = (0..mesh.elements.len())
        .into_par_iter()
        .map(|e| {
            let el = mesh.element(e);
            let tab = tabulate(el.shape, el.order, 2 * el.order as u32 + 2);
            let (mut lo, mut hi, mut area) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
            for q in 0..tab.rule.len() {
                let d = crate::elements::map_with(&el.nodes, tab.values_at(q), tab.grads_at(q)).det;
                lo = lo.min(d);
                hi = hi.max(d);
                area += d * tab.rule.weights[q];
            }
            let scaled = mesh.elements[e]
                .parent
                .and_then(|p| mesh.parent_areas.get(p))
                .map(|pa| lo * el.shape.ref_area() / pa);
            ElementQuality { min_det: lo, max_det: hi, area, scaled_det: scaled }
        })
        .collect();
    let min_det_ratio = elements.iter().map(|q| q.min_det / q.max_det).fold(f64::INFINITY, f64::min);
    let min_scaled_det = elements.iter().filter_map(|q| q.scaled_det).fold(f64::INFINITY, f64::min);
    let min_area = elements.iter().map(|q| q.area).fold(f64::INFINITY, f64::min);
    let total_area = elements.iter().map(|q| q.area).sum();
    QualityReport { elements, min_det_ratio, min_scaled_det, min_area, total_area, ..Default::default() }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConformityAudit {
    pub interior_edges: usize,
    pub boundary_edges: usize,
    /// Edges shared by more than two elements or not in reversed order.
    pub mismatched: usize,
    /// Boundary edges lying neither on the box nor on an interface.
    pub hanging: usize,
    /// Distinct nodes closer than the dedup tolerance.
    pub duplicate_nodes: usize,
}

impl ConformityAudit {
    pub fn passes(&self) -> bool {
        self.mismatched == 0 && self.hanging == 0 && self.duplicate_nodes == 0
    }
}

pub fn conformity_audit(mesh: &ConformingMesh) -> ConformityAudit {
    let mut seen: HashMap<Vec<usize>, Vec<(usize, usize, bool)>> = HashMap::new();
    for (e, el) in mesh.elements.iter().enumerate() {
        for k in 0..el.shape.n_corners() {
            let nodes = mesh.edge_nodes(e, k);
            let forward = nodes[0] <= nodes[nodes.len() - 1];
            seen.entry(edge_key(nodes)).or_default().push((e, k, forward));
        }
    }
    let mut a = ConformityAudit::default();
    for uses in seen.values() {
        match uses.as_slice() {
            [(e, k, _)] => {
                a.boundary_edges += 1;
                if mesh.elements[*e].tags[*k].is_none() {
                    a.hanging += 1;
                }
            }
            [(_, _, f1), (_, _, f2)] => {
                a.interior_edges += 1;
                if f1 == f2 {
                    a.mismatched += 1;
                }
            }
            _ => a.mismatched += 1,
        }
    }
    // node-level check: a T-junction shows up as a node lying on another element's edge
    let tol = 1e-9 * mesh.h_min();
    let mut table = NodeTable::new(tol);
    for p in &mesh.nodes {
        let before = table.nodes.len();
        table.insert(*p);
        if table.nodes.len() == before {
            a.duplicate_nodes += 1;
        }
    }
    a
}

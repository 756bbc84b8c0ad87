//! Refinement tree over a structured box mesh with red refinement and
//! templated closure, so that the emitted background mesh has no hanging nodes.

mod adapt;
mod relax;

use std::collections::HashMap;

use crate::cutcell::EdgeTag;
use crate::elements::{corner_size, PhysicalElement, Shape};
use crate::geometry::Point;

pub use adapt::{
    adaptive_mesh_loop, corner_flags, curvature_flag, AdaptiveMesh, AdaptivityConfig, CornerMark, FailedElement,
    LoopReport, RefineError,
};
pub use relax::{estimate_distance, relax_nodes, RelaxReport, RelaxationConfig};

#[derive(Debug, Clone)]
struct Cell {
    shape: Shape,
    corners: [u32; 4],
    level: u32,
    children: Option<[u32; 4]>,
}

impl Cell {
    fn corners(&self) -> &[u32] {
        &self.corners[..self.shape.n_corners()]
    }
}

/// Axis-aligned box with sides numbered bottom, right, top, left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: Point,
    pub hi: Point,
}

impl Domain {
    pub fn new(lo: Point, hi: Point) -> Self {
        Domain { lo, hi }
    }

    /// Bit set of box sides the point lies on.
    pub fn sides(&self, p: &Point) -> u8 {
        let mut s = 0;
        if p.y == self.lo.y {
            s |= 1;
        }
        if p.x == self.hi.x {
            s |= 2;
        }
        if p.y == self.hi.y {
            s |= 4;
        }
        if p.x == self.lo.x {
            s |= 8;
        }
        s
    }

    pub fn width(&self) -> f64 {
        self.hi.x - self.lo.x
    }

    pub fn height(&self) -> f64 {
        self.hi.y - self.lo.y
    }
}

pub const SIDE_NAMES: [&str; 4] = ["bottom", "right", "top", "left"];

/// Hierarchical background mesh. New vertices are created at edge midpoints
/// and quad centers of the original (unrelaxed) geometry.
#[derive(Debug, Clone)]
pub struct RefinementTree {
    pub order: u8,
    pub domain: Domain,
    vertices: Vec<Point>,
    cells: Vec<Cell>,
    midpoints: HashMap<(u32, u32), u32>,
}

fn key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

/// One element of the emitted background mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BgElement {
    pub shape: Shape,
    pub corners: Vec<usize>,
    /// Tree leaf this element was emitted from.
    pub leaf: usize,
}

/// Conforming straight-sided background mesh emitted from the tree.
#[derive(Debug, Clone)]
pub struct BackgroundMesh {
    pub order: u8,
    pub domain: Domain,
    /// Current vertex positions (after relaxation).
    pub vertices: Vec<Point>,
    /// Tree positions, never moved.
    pub original: Vec<Point>,
    pub elements: Vec<BgElement>,
}

impl BackgroundMesh {
    pub fn element(&self, e: usize) -> PhysicalElement {
        let c: Vec<Point> = self.elements[e].corners.iter().map(|&v| self.vertices[v]).collect();
        PhysicalElement::from_corners(self.elements[e].shape, self.order, &c)
    }

    pub fn original_element(&self, e: usize) -> PhysicalElement {
        let c: Vec<Point> = self.elements[e].corners.iter().map(|&v| self.original[v]).collect();
        PhysicalElement::from_corners(self.elements[e].shape, self.order, &c)
    }

    /// Largest corner distance at tree positions.
    pub fn original_size(&self, e: usize) -> f64 {
        let c: Vec<Point> = self.elements[e].corners.iter().map(|&v| self.original[v]).collect();
        corner_size(&c)
    }

    pub fn edge_tags(&self, e: usize) -> Vec<Option<EdgeTag>> {
        let c = &self.elements[e].corners;
        let n = c.len();
        (0..n)
            .map(|k| {
                let s = self.domain.sides(&self.original[c[k]]) & self.domain.sides(&self.original[c[(k + 1) % n]]);
                (s != 0).then(|| EdgeTag::Box(s.trailing_zeros() as u8))
            })
            .collect()
    }

    pub fn incident(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.vertices.len()];
        for (e, el) in self.elements.iter().enumerate() {
            for &v in &el.corners {
                inc[v].push(e);
            }
        }
        inc
    }

    pub fn total_area(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.element(e).area()).sum()
    }
}

impl RefinementTree {
    /// `nx` by `ny` rectangles over `domain`; triangles split each along its rising diagonal.
    pub fn structured(domain: Domain, nx: usize, ny: usize, shape: Shape, order: u8) -> Self {
        assert!(nx > 0 && ny > 0);
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                let x = if i == nx { domain.hi.x } else { domain.lo.x + domain.width() * i as f64 / nx as f64 };
                let y = if j == ny { domain.hi.y } else { domain.lo.y + domain.height() * j as f64 / ny as f64 };
                vertices.push(Point::new(x, y));
            }
        }
        let id = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
        let mut cells = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                match shape {
                    Shape::Quad => cells.push(Cell { shape, corners: [a, b, c, d], level: 0, children: None }),
                    Shape::Tri => {
                        cells.push(Cell { shape, corners: [a, b, c, 0], level: 0, children: None });
                        cells.push(Cell { shape, corners: [a, c, d, 0], level: 0, children: None });
                    }
                }
            }
        }
        RefinementTree { order, domain, vertices, cells, midpoints: HashMap::new() }
    }

    pub fn n_leaves(&self) -> usize {
        self.cells.iter().filter(|c| c.children.is_none()).count()
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.cells.len()).filter(|&c| self.cells[c].children.is_none())
    }

    pub fn level(&self, cell: usize) -> u32 {
        self.cells[cell].level
    }

    pub fn max_level(&self) -> u32 {
        self.leaves().map(|c| self.cells[c].level).max().unwrap_or(0)
    }

    pub fn cell_corners(&self, cell: usize) -> Vec<Point> {
        self.cells[cell].corners().iter().map(|&v| self.vertices[v as usize]).collect()
    }

    fn midpoint(&mut self, a: u32, b: u32) -> u32 {
        if let Some(&m) = self.midpoints.get(&key(a, b)) {
            return m;
        }
        let p = Point::from((self.vertices[a as usize].coords + self.vertices[b as usize].coords) * 0.5);
        let m = self.vertices.len() as u32;
        self.vertices.push(p);
        self.midpoints.insert(key(a, b), m);
        m
    }

    fn split(&mut self, cell: usize) {
        if self.cells[cell].children.is_some() {
            return;
        }
        let Cell { shape, corners: c, level, .. } = self.cells[cell].clone();
        let kids: Vec<[u32; 4]> = match shape {
            Shape::Quad => {
                let (m01, m12, m23, m30) =
                    (self.midpoint(c[0], c[1]), self.midpoint(c[1], c[2]), self.midpoint(c[2], c[3]), self.midpoint(c[3], c[0]));
                let center = self.vertices.len() as u32;
                let s: nalgebra::Vector2<f64> = c.iter().map(|&v| self.vertices[v as usize].coords).sum();
                self.vertices.push(Point::from(s * 0.25));
                vec![[c[0], m01, center, m30], [m01, c[1], m12, center], [center, m12, c[2], m23], [m30, center, m23, c[3]]]
            }
            Shape::Tri => {
                let (m01, m12, m20) = (self.midpoint(c[0], c[1]), self.midpoint(c[1], c[2]), self.midpoint(c[2], c[0]));
                vec![[c[0], m01, m20, 0], [m01, c[1], m12, 0], [m20, m12, c[2], 0], [m12, m20, m01, 0]]
            }
        };
        let first = self.cells.len() as u32;
        for k in kids {
            self.cells.push(Cell { shape, corners: k, level: level + 1, children: None });
        }
        self.cells[cell].children = Some([first, first + 1, first + 2, first + 3]);
    }

    /// Hanging-edge mask of a leaf and whether any neighbor is two levels finer.
    fn hanging(&self, cell: usize) -> (u8, bool) {
        let c = self.cells[cell].corners();
        let n = c.len();
        let mut mask = 0u8;
        let mut deep = false;
        for k in 0..n {
            let (a, b) = (c[k], c[(k + 1) % n]);
            if let Some(&m) = self.midpoints.get(&key(a, b)) {
                mask |= 1 << k;
                if self.midpoints.contains_key(&key(a, m)) || self.midpoints.contains_key(&key(m, b)) {
                    deep = true;
                }
            }
        }
        (mask, deep)
    }

    /// Split flagged leaves, then refine until every leaf has at most one hanging
    /// edge and neighbors differ by at most one level.
    pub fn refine_with_closure(&mut self, flagged: &[usize]) {
        let mut flagged: Vec<usize> = flagged.iter().copied().filter(|&c| self.cells[c].children.is_none()).collect();
        flagged.sort_unstable();
        flagged.dedup();
        for c in flagged {
            self.split(c);
        }
        loop {
            let todo: Vec<usize> = self
                .leaves()
                .filter(|&c| {
                    let (mask, deep) = self.hanging(c);
                    deep || mask.count_ones() >= 2
                })
                .collect();
            if todo.is_empty() {
                break;
            }
            for c in todo {
                self.split(c);
            }
        }
    }

    /// Emit the conforming mesh: plain leaves plus transition templates.
    pub fn background(&self) -> BackgroundMesh {
        let mut elements = Vec::with_capacity(self.n_leaves() + 16);
        for leaf in self.leaves() {
            let cell = &self.cells[leaf];
            let c: Vec<usize> = cell.corners().iter().map(|&v| v as usize).collect();
            let (mask, _) = self.hanging(leaf);
            if mask == 0 {
                elements.push(BgElement { shape: cell.shape, corners: c, leaf });
                continue;
            }
            let k = mask.trailing_zeros() as usize;
            let n = c.len();
            let m = self.midpoints[&key(c[k] as u32, c[(k + 1) % n] as u32)] as usize;
            let at = |i: usize| c[(k + i) % n];
            let tris: Vec<Vec<usize>> = match cell.shape {
                Shape::Quad => vec![vec![at(0), m, at(3)], vec![m, at(1), at(2)], vec![m, at(2), at(3)]],
                Shape::Tri => vec![vec![at(0), m, at(2)], vec![m, at(1), at(2)]],
            };
            for t in tris {
                elements.push(BgElement { shape: Shape::Tri, corners: t, leaf });
            }
        }
        BackgroundMesh {
            order: self.order,
            domain: self.domain,
            vertices: self.vertices.clone(),
            original: self.vertices.clone(),
            elements,
        }
    }
}

/// Edges incident to exactly one element or exactly two with opposite
/// orientation; returns the number of violations.
pub fn hanging_node_audit(mesh: &BackgroundMesh) -> usize {
    let mut count: HashMap<(usize, usize), (usize, i32)> = HashMap::new();
    for el in &mesh.elements {
        let n = el.corners.len();
        for k in 0..n {
            let (a, b) = (el.corners[k], el.corners[(k + 1) % n]);
            let e = count.entry((a.min(b), a.max(b))).or_insert((0, 0));
            e.0 += 1;
            e.1 += if a < b { 1 } else { -1 };
        }
    }
    let on_box = |v: usize| mesh.domain.sides(&mesh.original[v]);
    count
        .iter()
        .filter(|(&(a, b), &(n, orient))| match n {
            1 => on_box(a) & on_box(b) == 0,
            2 => orient != 0,
            _ => true,
        })
        .count()
}

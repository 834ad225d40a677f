//! The atomistic triangulation of the periodic lattice.
//!
//! Every lattice cell `[i, i+1] × [j, j+1]` (integer coordinates) is split
//! along the anti-diagonal into a lower and an upper right triangle:
//!
//! ```text
//!  (i,j+1) ______ (i+1,j+1)
//!         |\    |
//!         | \ U |
//!         |L \  |
//!         |___\_|
//!  (i,j)        (i+1,j)
//! ```
//!
//! Edges are indexed per cell: `0` the horizontal edge from `(i,j)`, `1` the
//! vertical edge from `(i,j)`, `2` the diagonal from `(i+1,j)` to `(i,j+1)`.

use super::clip::{clip_segment, Point, Rational, SegmentClip};
use crate::lattice::{Deformation, LatticeDomain, Matrix, NodalField, Site, Stencil, Vector};

pub type ElementId = usize;
pub type EdgeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    Lower,
    Upper,
}

impl ElementKind {
    pub const ALL: [ElementKind; 2] = [ElementKind::Lower, ElementKind::Upper];

    fn offset(self) -> usize {
        match self {
            ElementKind::Lower => 0,
            ElementKind::Upper => 1,
        }
    }

    /// Vertices relative to the cell corner, counter-clockwise, right angle first.
    pub fn local_vertices(self) -> [Point; 3] {
        match self {
            ElementKind::Lower => [[0, 0], [1, 0], [0, 1]],
            ElementKind::Upper => [[1, 1], [0, 1], [1, 0]],
        }
    }

    /// `ε ∇λ_k` for the barycentric coordinate of local vertex `k`.
    pub fn scaled_hat_gradient(self, k: usize) -> Vector<2> {
        match (self, k) {
            (ElementKind::Lower, 0) => Vector::<2>::new(-1.0, -1.0),
            (ElementKind::Lower, 1) => Vector::<2>::new(1.0, 0.0),
            (ElementKind::Lower, 2) => Vector::<2>::new(0.0, 1.0),
            (ElementKind::Upper, 0) => Vector::<2>::new(1.0, 1.0),
            (ElementKind::Upper, 1) => Vector::<2>::new(-1.0, 0.0),
            (ElementKind::Upper, 2) => Vector::<2>::new(0.0, -1.0),
            _ => panic!("triangles have three vertices"),
        }
    }

    /// `ε ∇ζ_k` for the Crouzeix–Raviart function of local edge `(v_k, v_{k+1})`.
    pub fn scaled_cr_gradient(self, k: usize) -> Vector<2> {
        self.scaled_hat_gradient((k + 2) % 3) * -2.0
    }
}

/// A mesh element: a cell corner (periodic representative) and a kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Element {
    pub cell: Site<2>,
    pub kind: ElementKind,
}

impl Element {
    /// Vertices in unwrapped lattice coordinates.
    pub fn vertices(&self) -> [Point; 3] {
        self.kind
            .local_vertices()
            .map(|v| [self.cell[0] + v[0], self.cell[1] + v[1]])
    }
}

/// Share of one bond carried by a mesh element.
#[derive(Clone, Copy, Debug)]
pub struct FootprintEntry {
    /// Cell offset relative to the bond origin.
    pub cell: Site<2>,
    pub kind: ElementKind,
    pub clip: SegmentClip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AtomisticMesh {
    domain: LatticeDomain<2>,
}

impl AtomisticMesh {
    pub fn new(domain: LatticeDomain<2>) -> Self {
        Self { domain }
    }

    pub fn domain(&self) -> &LatticeDomain<2> {
        &self.domain
    }

    pub fn eps(&self) -> f64 {
        self.domain.eps()
    }

    pub fn num_elements(&self) -> usize {
        2 * self.domain.num_sites()
    }

    pub fn num_edges(&self) -> usize {
        3 * self.domain.num_sites()
    }

    pub fn element_area(&self) -> f64 {
        0.5 * self.eps() * self.eps()
    }

    pub fn element_id(&self, cell: Site<2>, kind: ElementKind) -> ElementId {
        2 * self.domain.index(cell) + kind.offset()
    }

    pub fn element(&self, id: ElementId) -> Element {
        let kind = if id.is_multiple_of(2) {
            ElementKind::Lower
        } else {
            ElementKind::Upper
        };
        Element {
            cell: self.domain.site(id / 2),
            kind,
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = (ElementId, Element)> + '_ {
        (0..self.num_elements()).map(move |id| (id, self.element(id)))
    }

    /// Element centroid in physical coordinates.
    pub fn centroid(&self, id: ElementId) -> Vector<2> {
        let v = self.element(id).vertices();
        let s = |k: usize| (v[0][k] + v[1][k] + v[2][k]) as f64 / 3.0;
        Vector::<2>::new(s(0), s(1)) * self.eps()
    }

    /// Global edges of an element, local edge `k` joining `v_k` and `v_{k+1}`.
    pub fn element_edges(&self, id: ElementId) -> [EdgeId; 3] {
        let e = self.element(id);
        let [i, j] = e.cell;
        let edge = |cell: Site<2>, k: usize| 3 * self.domain.index(cell) + k;
        match e.kind {
            ElementKind::Lower => [edge([i, j], 0), edge([i, j], 2), edge([i, j], 1)],
            ElementKind::Upper => [edge([i, j + 1], 0), edge([i, j], 2), edge([i + 1, j], 1)],
        }
    }

    /// Global vertex sites (periodic representatives) of an element, in local order.
    pub fn element_vertices(&self, id: ElementId) -> [Site<2>; 3] {
        self.element(id).vertices().map(|v| self.domain.wrap(v))
    }

    /// The two elements sharing an edge.
    pub fn edge_elements(&self, edge: EdgeId) -> [ElementId; 2] {
        let cell = self.domain.site(edge / 3);
        let [i, j] = cell;
        let lower = self.element_id(cell, ElementKind::Lower);
        let upper = match edge % 3 {
            0 => self.element_id([i, j - 1], ElementKind::Upper),
            1 => self.element_id([i - 1, j], ElementKind::Upper),
            _ => self.element_id(cell, ElementKind::Upper),
        };
        [lower, upper]
    }

    /// Endpoints of an edge, unwrapped relative to its cell.
    pub fn edge_endpoints(&self, edge: EdgeId) -> [Point; 2] {
        let [i, j] = self.domain.site(edge / 3);
        match edge % 3 {
            0 => [[i, j], [i + 1, j]],
            1 => [[i, j], [i, j + 1]],
            _ => [[i + 1, j], [i, j + 1]],
        }
    }

    /// Twice the edge midpoint in lattice coordinates.
    pub fn edge_midpoint_doubled(&self, edge: EdgeId) -> Point {
        let [a, b] = self.edge_endpoints(edge);
        [a[0] + b[0], a[1] + b[1]]
    }

    pub fn edge_length(&self, edge: EdgeId) -> f64 {
        if edge % 3 == 2 {
            std::f64::consts::SQRT_2 * self.eps()
        } else {
            self.eps()
        }
    }

    /// Doubled midpoint of local edge `k` of the element, in the element's
    /// unwrapped frame.
    pub fn local_edge_midpoint_doubled(&self, id: ElementId, k: usize) -> Point {
        let v = self.element(id).vertices();
        let a = v[k];
        let b = v[(k + 1) % 3];
        [a[0] + b[0], a[1] + b[1]]
    }

    /// Gradient of the piecewise affine interpolant of `y` on an element.
    pub fn gradient(&self, y: &Deformation<2>, id: ElementId) -> Matrix<2> {
        let e = self.element(id);
        let [i, j] = e.cell;
        let (c0, c1) = match e.kind {
            ElementKind::Lower => (y.difference([i, j], [1, 0]), y.difference([i, j], [0, 1])),
            ElementKind::Upper => (
                y.difference([i, j + 1], [1, 0]),
                y.difference([i + 1, j], [0, 1]),
            ),
        };
        Matrix::<2>::from_columns(&[c0, c1])
    }

    /// Gradient of the interpolant of a periodic nodal field on an element.
    pub fn field_gradient(&self, u: &NodalField<2>, id: ElementId) -> Matrix<2> {
        let e = self.element(id);
        let [i, j] = e.cell;
        let (c0, c1) = match e.kind {
            ElementKind::Lower => (
                u.finite_difference([i, j], [1, 0]),
                u.finite_difference([i, j], [0, 1]),
            ),
            ElementKind::Upper => (
                u.finite_difference([i, j + 1], [1, 0]),
                u.finite_difference([i + 1, j], [0, 1]),
            ),
        };
        Matrix::<2>::from_columns(&[c0, c1])
    }

    pub fn gradients(&self, y: &Deformation<2>) -> Vec<Matrix<2>> {
        (0..self.num_elements())
            .map(|id| self.gradient(y, id))
            .collect()
    }

    /// Elements met by the closed bond `[0, r]`, with their clipped intervals.
    /// Entries of zero length (touching) are included.
    pub fn bond_footprint(&self, r: Site<2>) -> Vec<FootprintEntry> {
        let mut out = Vec::new();
        let (x0, x1) = (r[0].min(0) - 1, r[0].max(0));
        let (y0, y1) = (r[1].min(0) - 1, r[1].max(0));
        for ci in x0..=x1 {
            for cj in y0..=y1 {
                for kind in ElementKind::ALL {
                    let e = Element {
                        cell: [ci, cj],
                        kind,
                    };
                    if let Some(clip) = clip_segment(&e.vertices(), [0, 0], r) {
                        out.push(FootprintEntry {
                            cell: [ci, cj],
                            kind,
                            clip,
                        });
                    }
                }
            }
        }
        out
    }

    /// Footprints for every stencil offset, in stencil order.
    pub fn stencil_footprints(&self, stencil: &Stencil<2>) -> Vec<Vec<FootprintEntry>> {
        stencil
            .offsets()
            .iter()
            .map(|&r| self.bond_footprint(r))
            .collect()
    }
}

/// `ε² Σ_x ⨍_x^{x+εr} χ_T db` for an arbitrary lattice triangle, exact.
/// The sum runs over all lattice sites (not wrapped), so it equals the
/// triangle area in lattice units when the bond-density identity holds.
pub fn bond_density_sum(tri: &[Point; 3], r: Point) -> Rational {
    let xs = tri.iter().map(|v| v[0]);
    let ys = tri.iter().map(|v| v[1]);
    let (xmin, xmax) = (xs.clone().min().unwrap(), xs.max().unwrap());
    let (ymin, ymax) = (ys.clone().min().unwrap(), ys.max().unwrap());
    let mut total = Rational::from_integer(0);
    for x in (xmin - r[0].max(0))..=(xmax - r[0].min(0)) {
        for y in (ymin - r[1].max(0))..=(ymax - r[1].min(0)) {
            let moved = tri.map(|v| [v[0] - x, v[1] - y]);
            if let Some(c) = clip_segment(&moved, [0, 0], r) {
                total += c.chi_weight();
            }
        }
    }
    total
}

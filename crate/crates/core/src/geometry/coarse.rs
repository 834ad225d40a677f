//! Coarse triangulations with lattice vertices, nodal interpolation between
//! the coarse and atomistic meshes, and mesh-overlap integration.

use std::collections::HashSet;

use super::mesh::{AtomisticMesh, ElementId, ElementKind};
use super::region::{Region, RegionDecomposition};
use crate::error::{Error, Result};
use crate::lattice::{Deformation, LatticeDomain, Matrix, NodalField, Vector};

/// Pointwise matrix norm used inside an `L^p` norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointwiseNorm {
    /// `(Σ_ij |a_ij|^p)^{1/p}`, the norm matching the `p` of the outer integral.
    Entrywise,
    Frobenius,
}

impl PointwiseNorm {
    pub fn eval(self, m: &Matrix<2>, p: f64) -> f64 {
        match self {
            PointwiseNorm::Frobenius => m.norm(),
            PointwiseNorm::Entrywise if p.is_infinite() => m.amax(),
            PointwiseNorm::Entrywise => {
                m.iter().map(|a| a.abs().powf(p)).sum::<f64>().powf(1.0 / p)
            }
        }
    }
}

/// `(Σ |T| |g_T|^p)^{1/p}`, or `max |g_T|` for `p = ∞`; cells of zero area
/// are ignored.
pub fn piecewise_lp_norm<'a>(
    cells: impl IntoIterator<Item = (f64, &'a Matrix<2>)>,
    p: f64,
    norm: PointwiseNorm,
) -> f64 {
    if p.is_infinite() {
        cells
            .into_iter()
            .filter(|(a, _)| *a > 0.0)
            .map(|(_, g)| norm.eval(g, p))
            .fold(0.0, f64::max)
    } else {
        cells
            .into_iter()
            .map(|(a, g)| a * norm.eval(g, p).powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// `∥∇y∥_{L^p}` of the piecewise affine interpolant on the atomistic mesh.
pub fn lattice_gradient_norm(
    mesh: &AtomisticMesh,
    y: &Deformation<2>,
    p: f64,
    norm: PointwiseNorm,
) -> f64 {
    let area = mesh.element_area();
    let grads = mesh.gradients(y);
    piecewise_lp_norm(grads.iter().map(|g| (area, g)), p, norm)
}

type Point = [i64; 2];

/// A periodic triangulation of `[-N, N]²` (lattice units) whose vertices
/// are lattice sites.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseMesh {
    domain: LatticeDomain<2>,
    /// Wrapped site of each node, in domain order.
    nodes: Vec<Point>,
    /// Counter-clockwise vertices in unwrapped coordinates.
    triangles: Vec<[Point; 3]>,
    connectivity: Vec<[usize; 3]>,
    /// Per site: containing element nodes and barycentric weights.
    site_weights: Vec<([usize; 3], [f64; 3])>,
}

fn graded_breaks(n: i64, fine: i64) -> Vec<i64> {
    let mut positive = vec![0];
    let mut x = 0;
    while x < fine.min(n) {
        x += 1;
        positive.push(x);
    }
    let mut step = 2;
    while x < n {
        x = (x + step).min(n);
        positive.push(x);
        step *= 2;
    }
    let mut out: Vec<i64> = positive.iter().rev().map(|v| -v).collect();
    out.extend_from_slice(&positive[1..]);
    out
}

fn cross(a: Point, b: Point) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

/// Split of `[x, x+w] × [y, y+h]` along its anti-diagonal.
fn split_rectangle(x: i64, y: i64, w: i64, h: i64) -> [[Point; 3]; 2] {
    [
        [[x, y], [x + w, y], [x, y + h]],
        [[x + w, y + h], [x, y + h], [x + w, y]],
    ]
}

/// Leaves of a 2:1-balanced quadtree on `[-N, N)²`, keyed by lower-left
/// corner and side length.
struct Quadtree {
    n: i64,
    leaves: HashSet<(Point, i64)>,
    top: i64,
}

impl Quadtree {
    fn new(n: i64) -> Self {
        let top = 1 << (2 * n).trailing_zeros();
        let mut leaves = HashSet::new();
        for i in 0..(2 * n / top) {
            for j in 0..(2 * n / top) {
                leaves.insert(([-n + i * top, -n + j * top], top));
            }
        }
        Self { n, leaves, top }
    }

    fn wrap(&self, c: i64) -> i64 {
        (c + self.n).rem_euclid(2 * self.n) - self.n
    }

    /// Leaf containing the cell with the given lower-left corner.
    fn leaf_at(&self, cell: Point) -> (Point, i64) {
        let c = cell.map(|v| self.wrap(v));
        let mut s = self.top;
        loop {
            let corner = c.map(|v| -self.n + (v + self.n).div_euclid(s) * s);
            if self.leaves.contains(&(corner, s)) {
                return (corner, s);
            }
            s /= 2;
        }
    }

    fn split(&mut self, leaf: (Point, i64)) {
        self.leaves.remove(&leaf);
        let ([x, y], s) = leaf;
        let h = s / 2;
        for (dx, dy) in [(0, 0), (h, 0), (0, h), (h, h)] {
            self.leaves.insert(([x + dx, y + dy], h));
        }
    }

    fn sorted_leaves(&self) -> Vec<(Point, i64)> {
        let mut v: Vec<_> = self.leaves.iter().copied().collect();
        v.sort();
        v
    }

    /// Cells just outside each edge (bottom, right, top, left).
    fn edge_neighbours(leaf: (Point, i64)) -> [Vec<Point>; 4] {
        let ([x, y], s) = leaf;
        [
            (0..s).map(|k| [x + k, y - 1]).collect(),
            (0..s).map(|k| [x + s, y + k]).collect(),
            (0..s).map(|k| [x + k, y + s]).collect(),
            (0..s).map(|k| [x - 1, y + k]).collect(),
        ]
    }

    fn refine(&mut self, resolve: &dyn Fn(Point) -> bool) {
        loop {
            let mut changed = false;
            for leaf in self.sorted_leaves() {
                let ([x, y], s) = leaf;
                if s > 1 && (x..x + s).any(|i| (y..y + s).any(|j| resolve([i, j]))) {
                    self.split(leaf);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn balance(&mut self) {
        loop {
            let mut changed = false;
            for leaf in self.sorted_leaves() {
                if !self.leaves.contains(&leaf) || leaf.1 < 4 {
                    continue;
                }
                let too_fine = Self::edge_neighbours(leaf)
                    .iter()
                    .flatten()
                    .any(|&c| self.leaf_at(c).1 < leaf.1 / 2);
                if too_fine {
                    self.split(leaf);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Anti-diagonal split for leaves without hanging nodes, otherwise a fan
    /// from the centre through corners and hanging edge midpoints.
    fn triangulate(&self) -> Vec<[Point; 3]> {
        let mut out = Vec::new();
        for leaf in self.sorted_leaves() {
            let ([x, y], s) = leaf;
            let hanging = Self::edge_neighbours(leaf).map(|cells| self.leaf_at(cells[0]).1 < s);
            if !hanging.iter().any(|&h| h) {
                out.extend(split_rectangle(x, y, s, s));
                continue;
            }
            let h = s / 2;
            let corners = [[x, y], [x + s, y], [x + s, y + s], [x, y + s]];
            let mids = [[x + h, y], [x + s, y + h], [x + h, y + s], [x, y + h]];
            let mut ring = Vec::new();
            for k in 0..4 {
                ring.push(corners[k]);
                if hanging[k] {
                    ring.push(mids[k]);
                }
            }
            let centre = [x + h, y + h];
            for k in 0..ring.len() {
                out.push([centre, ring[k], ring[(k + 1) % ring.len()]]);
            }
        }
        out
    }
}

impl CoarseMesh {
    fn from_triangles(domain: LatticeDomain<2>, triangles: Vec<[Point; 3]>) -> Result<Self> {
        let n = domain.n() as i64;
        let mut used = vec![false; domain.num_sites()];
        for t in &triangles {
            if cross(sub(t[1], t[0]), sub(t[2], t[0])) <= 0 {
                return Err(Error::InvalidArgument(format!(
                    "triangle {t:?} is degenerate or clockwise"
                )));
            }
            for v in t {
                used[domain.index(*v)] = true;
            }
        }
        let mut node_of_site = vec![0; domain.num_sites()];
        let mut nodes = Vec::new();
        for (i, _) in used.iter().enumerate().filter(|(_, u)| **u) {
            node_of_site[i] = nodes.len();
            nodes.push(domain.site(i));
        }
        let connectivity: Vec<[usize; 3]> = triangles
            .iter()
            .map(|t| t.map(|v| node_of_site[domain.index(v)]))
            .collect();

        let mut site_weights = vec![None; domain.num_sites()];
        for (t, tri) in triangles.iter().enumerate() {
            let [p0, p1, p2] = *tri;
            let det = cross(sub(p1, p0), sub(p2, p0));
            let lo = [0, 1].map(|k| tri.iter().map(|v| v[k]).min().unwrap_or(0));
            let hi = [0, 1].map(|k| tri.iter().map(|v| v[k]).max().unwrap_or(0));
            for i in lo[0].max(1 - n)..=hi[0] {
                for j in lo[1].max(1 - n)..=hi[1] {
                    let slot = &mut site_weights[domain.index([i, j])];
                    if slot.is_some() {
                        continue;
                    }
                    let d = sub([i, j], p0);
                    let a1 = cross(d, sub(p2, p0));
                    let a2 = cross(sub(p1, p0), d);
                    if a1 >= 0 && a2 >= 0 && a1 + a2 <= det {
                        let det = det as f64;
                        let w = [
                            (det - (a1 + a2) as f64) / det,
                            a1 as f64 / det,
                            a2 as f64 / det,
                        ];
                        *slot = Some((t, w));
                    }
                }
            }
        }
        let site_weights = site_weights
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                w.map(|(t, w)| (connectivity[t], w)).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "site {:?} is not covered by the triangulation",
                        domain.site(i)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let area: i64 = triangles
            .iter()
            .map(|t| cross(sub(t[1], t[0]), sub(t[2], t[0])))
            .sum();
        if area != 8 * n * n {
            return Err(Error::InvalidArgument(format!(
                "triangles cover area {} of the {} lattice cells",
                area as f64 / 2.0,
                4 * n * n
            )));
        }
        Ok(Self {
            domain,
            nodes,
            triangles,
            connectivity,
            site_weights,
        })
    }

    /// Tensor product of two break-point sequences, each rectangle split
    /// along its anti-diagonal.
    pub fn from_breaks(domain: LatticeDomain<2>, breaks: [Vec<i64>; 2]) -> Result<Self> {
        let n = domain.n() as i64;
        for b in &breaks {
            if b.first() != Some(&-n) || b.last() != Some(&n) || b.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(Error::InvalidArgument(format!(
                    "break points must increase strictly from {} to {n}",
                    -n
                )));
            }
        }
        let mut triangles = Vec::new();
        for wy in breaks[1].windows(2) {
            for wx in breaks[0].windows(2) {
                triangles.extend(split_rectangle(wx[0], wy[0], wx[1] - wx[0], wy[1] - wy[0]));
            }
        }
        Self::from_triangles(domain, triangles)
    }

    /// Tensor-product mesh with spacing one inside `[-fine, fine]²` and
    /// doubling outwards. Its elements become arbitrarily thin as `N` grows.
    pub fn graded(domain: LatticeDomain<2>, fine: i64) -> Result<Self> {
        if fine < 0 {
            return Err(Error::InvalidArgument(format!(
                "fine half-width {fine} is negative"
            )));
        }
        let b = graded_breaks(domain.n() as i64, fine);
        Self::from_breaks(domain, [b.clone(), b])
    }

    /// The atomistic mesh itself.
    pub fn uniform(domain: LatticeDomain<2>) -> Self {
        let n = domain.n() as i64;
        let b: Vec<i64> = (-n..=n).collect();
        Self::from_breaks(domain, [b.clone(), b]).expect("unit breaks are valid")
    }

    /// 2:1-balanced quadtree mesh with unit cells wherever `resolve` holds
    /// (cells given by their lower-left corner in `[-N, N)²`). Every element
    /// is a right isosceles triangle.
    pub fn quadtree(domain: LatticeDomain<2>, resolve: impl Fn([i64; 2]) -> bool) -> Result<Self> {
        let mut tree = Quadtree::new(domain.n() as i64);
        tree.refine(&resolve);
        tree.balance();
        Self::from_triangles(domain, tree.triangulate())
    }

    /// Quadtree mesh resolving every cell that carries a non-continuum element.
    pub fn for_decomposition(decomposition: &RegionDecomposition) -> Result<Self> {
        let mesh = decomposition.mesh();
        let resolve = |cell: [i64; 2]| {
            ElementKind::ALL
                .iter()
                .any(|&k| decomposition.label(mesh.element_id(cell, k)) != Region::Continuum)
        };
        Self::quadtree(*mesh.domain(), resolve)
    }

    /// Quadtree mesh resolving the atomistic block and interface ring
    /// `[-a-w, a+w)²`.
    pub fn for_block(
        domain: LatticeDomain<2>,
        half_width: i64,
        interface_width: i64,
    ) -> Result<Self> {
        let r = half_width + interface_width;
        if r < 0 {
            return Err(Error::InvalidArgument(format!(
                "block extent {r} is negative"
            )));
        }
        Self::quadtree(domain, |c| c.iter().all(|&v| (-r..r).contains(&v)))
    }

    pub fn domain(&self) -> &LatticeDomain<2> {
        &self.domain
    }

    pub fn eps(&self) -> f64 {
        self.domain.eps()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    /// Lattice site of a node.
    pub fn node_site(&self, node: usize) -> [i64; 2] {
        self.nodes[node]
    }

    /// Vertices in unwrapped lattice coordinates, counter-clockwise.
    pub fn vertices(&self, id: ElementId) -> [[i64; 2]; 3] {
        self.triangles[id]
    }

    pub fn vertex_nodes(&self, id: ElementId) -> [usize; 3] {
        self.connectivity[id]
    }

    /// Side lengths in physical units.
    fn sides(&self, id: ElementId) -> [f64; 3] {
        let t = self.triangles[id];
        [0, 1, 2].map(|k| {
            let d = sub(t[(k + 1) % 3], t[k]);
            (d[0] as f64).hypot(d[1] as f64) * self.eps()
        })
    }

    pub fn area(&self, id: ElementId) -> f64 {
        let t = self.triangles[id];
        0.5 * cross(sub(t[1], t[0]), sub(t[2], t[0])) as f64 * self.eps() * self.eps()
    }

    /// `h_T = diam(T)`.
    pub fn diameter(&self, id: ElementId) -> f64 {
        self.sides(id).into_iter().fold(0.0, f64::max)
    }

    /// Largest circumradius-to-inradius ratio.
    pub fn shape_regularity(&self) -> f64 {
        (0..self.num_elements())
            .map(|id| {
                let [a, b, c] = self.sides(id);
                let area = self.area(id);
                a * b * c * 0.5 * (a + b + c) / (4.0 * area * area)
            })
            .fold(0.0, f64::max)
    }

    /// The atomistic element coinciding with a coarse element, if any.
    pub fn as_lattice_element(&self, mesh: &AtomisticMesh, id: ElementId) -> Option<ElementId> {
        let t = self.triangles[id];
        let lo = [0, 1].map(|k| t.iter().map(|v| v[k]).min().unwrap_or(0));
        let mut sorted = t;
        sorted.sort();
        ElementKind::ALL.into_iter().find_map(|kind| {
            let mut local = kind.local_vertices().map(|v| [lo[0] + v[0], lo[1] + v[1]]);
            local.sort();
            (local == sorted).then(|| mesh.element_id(lo, kind))
        })
    }

    /// Checks that every atomistic and interface element of the
    /// decomposition is also an element of this mesh.
    pub fn check_resolves(&self, decomposition: &RegionDecomposition) -> Result<()> {
        let mesh = decomposition.mesh();
        let mut present = vec![false; mesh.num_elements()];
        for id in 0..self.num_elements() {
            if let Some(t) = self.as_lattice_element(mesh, id) {
                present[t] = true;
            }
        }
        for (id, e) in mesh.elements() {
            if decomposition.label(id) != Region::Continuum && !present[id] {
                return Err(Error::InvalidDecomposition(format!(
                    "{:?} element of cell {:?} is not resolved by the coarse mesh",
                    decomposition.label(id),
                    e.cell
                )));
            }
        }
        Ok(())
    }

    /// Areas of the positive-measure intersections of each coarse element
    /// with atomistic elements.
    pub fn overlaps(&self, mesh: &AtomisticMesh) -> Vec<Vec<(ElementId, f64)>> {
        let eps2 = self.eps() * self.eps();
        (0..self.num_elements())
            .map(|id| {
                if let Some(t) = self.as_lattice_element(mesh, id) {
                    return vec![(t, mesh.element_area())];
                }
                let tri = self.triangles[id];
                let lo = [0, 1].map(|k| tri.iter().map(|v| v[k]).min().unwrap_or(0));
                let hi = [0, 1].map(|k| tri.iter().map(|v| v[k]).max().unwrap_or(0));
                let clip: Vec<[f64; 2]> = tri.iter().map(|v| [v[0] as f64, v[1] as f64]).collect();
                let mut out = Vec::new();
                for i in lo[0]..hi[0] {
                    for j in lo[1]..hi[1] {
                        for kind in ElementKind::ALL {
                            let fine: Vec<[f64; 2]> = kind
                                .local_vertices()
                                .iter()
                                .map(|v| [(i + v[0]) as f64, (j + v[1]) as f64])
                                .collect();
                            let a = polygon_area(&clip_convex(&fine, &clip));
                            if a > 1e-12 {
                                out.push((mesh.element_id([i, j], kind), a * eps2));
                            }
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// Nodes of an element containing a lattice site, with barycentric weights.
    fn locate(&self, site: [i64; 2]) -> ([usize; 3], [f64; 3]) {
        self.site_weights[self.domain.index(site)]
    }
}

/// Sutherland–Hodgman clipping of a polygon by a counter-clockwise convex
/// polygon.
fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out = subject.to_vec();
    for k in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let a = clip[k];
        let b = clip[(k + 1) % clip.len()];
        let side = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let input = std::mem::take(&mut out);
        for m in 0..input.len() {
            let p = input[m];
            let q = input[(m + 1) % input.len()];
            let (sp, sq) = (side(p), side(q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
    }
    out
}

fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|k| {
            let (p, q) = (poly[k], poly[(k + 1) % n]);
            p[0] * q[1] - p[1] * q[0]
        })
        .sum::<f64>()
        .abs()
}

/// `y_h(x) = F x + u_h(x)` with `u_h` periodic and piecewise affine on a
/// coarse mesh.
#[derive(Clone, Debug)]
pub struct CoarseField {
    pub strain: Matrix<2>,
    pub values: Vec<Vector<2>>,
}

impl CoarseField {
    pub fn new(mesh: &CoarseMesh, strain: Matrix<2>, values: Vec<Vector<2>>) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "{} nodal values for {} coarse nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        Ok(Self { strain, values })
    }

    /// Nodal interpolant `I_h y`.
    pub fn interpolate(mesh: &CoarseMesh, y: &Deformation<2>) -> Self {
        let values = (0..mesh.num_nodes())
            .map(|k| y.displacement().at(mesh.node_site(k)))
            .collect();
        Self {
            strain: *y.strain(),
            values,
        }
    }

    /// Lattice interpolant `I_ε y_h`.
    pub fn to_lattice(&self, mesh: &CoarseMesh) -> Deformation<2> {
        let u = NodalField::from_fn(*mesh.domain(), |x| {
            let (nodes, w) = mesh.locate(x);
            (0..3).map(|k| self.values[nodes[k]] * w[k]).sum()
        });
        Deformation::new(self.strain, u)
    }

    pub fn gradient(&self, mesh: &CoarseMesh, id: ElementId) -> Matrix<2> {
        let t = mesh.vertices(id);
        let v = mesh.vertex_nodes(id).map(|k| self.values[k]);
        let eps = mesh.eps();
        let edge = |k: usize| {
            Vector::<2>::new(
                (t[k][0] - t[0][0]) as f64 * eps,
                (t[k][1] - t[0][1]) as f64 * eps,
            )
        };
        let edges = Matrix::<2>::from_columns(&[edge(1), edge(2)]);
        let diffs = Matrix::<2>::from_columns(&[v[1] - v[0], v[2] - v[0]]);
        let inverse = edges
            .try_inverse()
            .expect("coarse elements are non-degenerate");
        self.strain + diffs * inverse
    }

    pub fn gradient_norm(&self, mesh: &CoarseMesh, p: f64, norm: PointwiseNorm) -> f64 {
        let grads: Vec<Matrix<2>> = (0..mesh.num_elements())
            .map(|t| self.gradient(mesh, t))
            .collect();
        piecewise_lp_norm(
            (0..mesh.num_elements()).map(|t| (mesh.area(t), &grads[t])),
            p,
            norm,
        )
    }
}

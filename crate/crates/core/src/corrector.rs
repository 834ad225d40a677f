//! Crouzeix–Raviart potentials of discrete divergence-free stresses and the
//! corrected a/c stress.
//!
//! A P0 field `σ` satisfies `∫ σ : ∇u = 0` for all periodic P1 `u` exactly
//! when `σ = σ0 + ∇w J` for a constant `σ0` and a periodic CR field `w`,
//! with `J` the rotation by a quarter turn.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use crate::energy::AcEnergy;
use crate::error::{Error, Result};
use crate::geometry::{
    oscillation, AtomisticMesh, EdgeId, ElementId, ElementKind, Neighbourhoods, P0TensorField,
    Region,
};
use crate::lattice::{Deformation, Matrix, Vector};
use crate::potential::cauchy_born_stress;
use crate::stress::{sigma_ac, sigma_atomistic};

/// `J = [[0, -1], [1, 0]]`.
pub fn rotation() -> Matrix<2> {
    Matrix::<2>::new(0.0, -1.0, 1.0, 0.0)
}

/// `ε Σ_k |∇ζ_k(T)|` over the three edges of a mesh element.
pub fn cr_gradient_sum(kind: ElementKind) -> f64 {
    (0..3).map(|k| kind.scaled_cr_gradient(k).norm()).sum()
}

/// Vector-valued periodic Crouzeix–Raviart function, one value per edge midpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct CrField {
    mesh: AtomisticMesh,
    values: Vec<Vector<2>>,
}

impl CrField {
    pub fn new(mesh: AtomisticMesh, values: Vec<Vector<2>>) -> Result<Self> {
        if values.len() != mesh.num_edges() {
            return Err(Error::InvalidArgument(format!(
                "expected {} edge values, got {}",
                mesh.num_edges(),
                values.len()
            )));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: AtomisticMesh) -> Self {
        Self {
            mesh,
            values: vec![Vector::<2>::zeros(); mesh.num_edges()],
        }
    }

    pub fn from_fn(mesh: AtomisticMesh, f: impl FnMut(EdgeId) -> Vector<2>) -> Self {
        Self {
            mesh,
            values: (0..mesh.num_edges()).map(f).collect(),
        }
    }

    pub fn mesh(&self) -> &AtomisticMesh {
        &self.mesh
    }

    pub fn values(&self) -> &[Vector<2>] {
        &self.values
    }

    pub fn value(&self, edge: EdgeId) -> Vector<2> {
        self.values[edge]
    }

    /// `∇w(T) = Σ_k w(q_k) ⊗ ∇ζ_k(T)`.
    pub fn gradient(&self, id: ElementId) -> Matrix<2> {
        let kind = self.mesh.element(id).kind;
        let eps = self.mesh.eps();
        self.mesh
            .element_edges(id)
            .iter()
            .enumerate()
            .map(|(k, &e)| self.values[e] * (kind.scaled_cr_gradient(k) / eps).transpose())
            .sum()
    }

    pub fn gradient_field(&self) -> P0TensorField {
        P0TensorField::from_fn(self.mesh, |t| self.gradient(t))
    }

    /// Midpoint of an edge in physical coordinates (periodic representative).
    pub fn midpoint(&self, edge: EdgeId) -> Vector<2> {
        let q = self.mesh.edge_midpoint_doubled(edge);
        Vector::<2>::new(q[0] as f64, q[1] as f64) * (0.5 * self.mesh.eps())
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest difference once both fields are shifted to agree on edge 0.
    pub fn distance_up_to_constant(&self, other: &Self) -> f64 {
        let shift = self.values[0] - other.values[0];
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b - shift).norm())
            .fold(0.0, f64::max)
    }

    /// `(edge, x, y, w1, w2)` rows for export.
    pub fn rows(&self) -> impl Iterator<Item = (EdgeId, Vector<2>, Vector<2>)> + '_ {
        (0..self.values.len()).map(|e| (e, self.midpoint(e), self.values[e]))
    }
}

/// `q_b - q_a` for two local edges of one element, in physical units.
fn midpoint_step(mesh: &AtomisticMesh, id: ElementId, a: usize, b: usize) -> Vector<2> {
    let qa = mesh.local_edge_midpoint_doubled(id, a);
    let qb = mesh.local_edge_midpoint_doubled(id, b);
    Vector::<2>::new((qb[0] - qa[0]) as f64, (qb[1] - qa[1]) as f64) * (0.5 * mesh.eps())
}

fn local_index(mesh: &AtomisticMesh, id: ElementId, edge: EdgeId) -> Option<usize> {
    mesh.element_edges(id).iter().position(|&e| e == edge)
}

/// `∫_γ σ · dx` along a path through edge midpoints; consecutive edges must
/// belong to a common element, whose value is used on that segment.
pub fn path_integral(field: &P0TensorField, path: &[EdgeId]) -> Result<Vector<2>> {
    let mesh = field.mesh();
    let mut total = Vector::<2>::zeros();
    for (i, w) in path.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if a >= mesh.num_edges() || b >= mesh.num_edges() {
            return Err(Error::InvalidArgument(format!(
                "segment {i}: edge index out of range"
            )));
        }
        if a == b {
            continue;
        }
        let step = mesh
            .edge_elements(a)
            .into_iter()
            .find_map(|t| Some((t, local_index(mesh, t, a)?, local_index(mesh, t, b)?)))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "segment {i}: edges {a} and {b} do not share an element"
                ))
            })?;
        let (t, ka, kb) = step;
        total += field.at(t) * midpoint_step(mesh, t, ka, kb);
    }
    Ok(total)
}

/// Largest `|∫ σ : ∇φ_x|` over vector-valued P1 hat functions `φ_x`.
pub fn divergence_residual(sigma: &P0TensorField) -> f64 {
    let mesh = sigma.mesh();
    let dom = mesh.domain();
    let mut nodal = vec![Vector::<2>::zeros(); dom.num_sites()];
    let scale = mesh.element_area() / mesh.eps();
    for id in 0..mesh.num_elements() {
        let kind = mesh.element(id).kind;
        for (k, site) in mesh.element_vertices(id).into_iter().enumerate() {
            nodal[dom.index(site)] += sigma.at(id) * kind.scaled_hat_gradient(k) * scale;
        }
    }
    nodal.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Result of integrating a P0 field along the edge-midpoint graph.
struct Integration {
    field: CrField,
    /// Largest mismatch on an element not used by the spanning tree.
    loop_residual: f64,
}

/// Breadth-first spanning tree from the seed edges; each new midpoint gets
/// `w(q_b) = w(q_a) + α(T)(q_b - q_a)`. Edges are visited in index order.
fn integrate(alpha: &P0TensorField, seeds: &[EdgeId]) -> Integration {
    let mesh = *alpha.mesh();
    let mut values = vec![Vector::<2>::zeros(); mesh.num_edges()];
    let mut seen = vec![false; mesh.num_edges()];
    let mut queue = VecDeque::new();
    for &s in seeds {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(e) = queue.pop_front() {
        for t in mesh.edge_elements(e) {
            let edges = mesh.element_edges(t);
            let ka = edges
                .iter()
                .position(|&x| x == e)
                .expect("edge belongs to its elements");
            for (kb, &f) in edges.iter().enumerate() {
                if !seen[f] {
                    seen[f] = true;
                    values[f] = values[e] + alpha.at(t) * midpoint_step(&mesh, t, ka, kb);
                    queue.push_back(f);
                }
            }
        }
    }
    let field = CrField { mesh, values };
    let loop_residual = (0..mesh.num_elements())
        .map(|t| {
            let edges = mesh.element_edges(t);
            (1..3)
                .map(|k| {
                    let jump = field.values[edges[k]] - field.values[edges[0]];
                    (jump - alpha.at(t) * midpoint_step(&mesh, t, 0, k)).norm()
                })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    Integration {
        field,
        loop_residual,
    }
}

/// `σ = σ0 + ∇w J` recovered from a divergence-free P0 field.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub sigma0: Matrix<2>,
    /// Normalised to vanish at edge 0.
    pub potential: CrField,
    /// `max_T |σ0 + ∇w(T) J - σ(T)|`.
    pub residual: f64,
    /// Mismatch accumulated over fundamental cycles of the spanning tree.
    pub loop_residual: f64,
    pub divergence: f64,
}

/// Default relative tolerance of the divergence check.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-10;

pub fn reconstruct_potential(sigma: &P0TensorField, tolerance: f64) -> Result<Reconstruction> {
    let mesh = *sigma.mesh();
    let divergence = divergence_residual(sigma);
    let scale = mesh.eps() * sigma.max_norm().max(f64::MIN_POSITIVE);
    if divergence > tolerance * scale {
        return Err(Error::NotDivergenceFree {
            residual: divergence,
            tolerance: tolerance * scale,
        });
    }
    // Periodic increments of w: the mean of ∇w_1 vanishes, so σ0 = ⨍σ.
    let sigma0 = sigma.mean();
    let jt = rotation().transpose();
    let alpha = P0TensorField::from_fn(mesh, |t| (sigma.at(t) - sigma0) * jt);
    let Integration {
        field,
        loop_residual,
    } = integrate(&alpha, &[0]);
    let j = rotation();
    let residual = (0..mesh.num_elements())
        .map(|t| (sigma0 + field.gradient(t) * j - sigma.at(t)).norm())
        .fold(0.0, f64::max);
    Ok(Reconstruction {
        sigma0,
        potential: field,
        residual,
        loop_residual,
        divergence,
    })
}

/// Relative tolerance on the corrector's cycle residual; larger mismatches
/// mean the coupling fails the patch test or energy consistency.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;

/// Correctors `ψ(F)` and `ψ̂(y)` of a patch-test and energy consistent
/// coupling, with a memo table of `ψ(F)` keyed by the exact bits of `F`.
pub struct Corrector<'a> {
    energy: &'a AcEnergy,
    seeds: Vec<EdgeId>,
    memo: Mutex<HashMap<[u64; 4], Arc<CrField>>>,
}

impl<'a> Corrector<'a> {
    pub fn new(energy: &'a AcEnergy) -> Result<Self> {
        let decomp = energy.geometry().decomposition();
        if decomp.count(Region::Atomistic) == 0 {
            return Err(Error::InvalidDecomposition(
                "corrector normalisation needs an atomistic region".into(),
            ));
        }
        if !decomp.atomistic_connected() {
            return Err(Error::InvalidDecomposition(
                "atomistic region is not connected; the corrector normalisation is undefined"
                    .into(),
            ));
        }
        let mesh = decomp.mesh();
        let seeds = (0..mesh.num_edges())
            .filter(|&e| decomp.edge_in(e, Region::Atomistic))
            .collect();
        Ok(Self {
            energy,
            seeds,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn energy(&self) -> &AcEnergy {
        self.energy
    }

    fn mesh(&self) -> AtomisticMesh {
        *self.energy.geometry().mesh()
    }

    /// `ψ(F)` with `Σ_ac(y_F) = ∂W(F) + ∇ψ(F) J` and `ψ(F) = 0` on `Ω_a`.
    pub fn psi(&self, f: &Matrix<2>) -> Result<Arc<CrField>> {
        let key = [
            f[(0, 0)].to_bits(),
            f[(0, 1)].to_bits(),
            f[(1, 0)].to_bits(),
            f[(1, 1)].to_bits(),
        ];
        if let Some(hit) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(hit.clone());
        }
        let computed = Arc::new(self.compute_psi(f)?);
        self.memo
            .lock()
            .expect("memo lock")
            .insert(key, computed.clone());
        Ok(computed)
    }

    fn compute_psi(&self, f: &Matrix<2>) -> Result<CrField> {
        let mesh = self.mesh();
        let y = Deformation::homogeneous(*mesh.domain(), *f);
        let sigma = sigma_ac(self.energy, &y);
        let dw = cauchy_born_stress(self.energy.potential().as_ref(), f);
        let jt = rotation().transpose();
        let alpha = P0TensorField::from_fn(mesh, |t| (sigma.at(t) - dw) * jt);
        let Integration {
            field,
            loop_residual,
        } = integrate(&alpha, &self.seeds);
        let tolerance = CONSISTENCY_TOLERANCE * mesh.eps() * (1.0 + sigma.max_norm());
        if loop_residual > tolerance {
            return Err(Error::Inconsistent(format!(
                "stress of the homogeneous state has no corrector vanishing on the atomistic region \
                 (cycle residual {loop_residual:.3e}, tolerance {tolerance:.3e})"
            )));
        }
        Ok(field)
    }

    /// Average of `∇y` over the non-atomistic elements adjacent to each edge,
    /// `None` when the edge lies in the closure of `Ω_a`.
    pub fn edge_strains(&self, y: &Deformation<2>) -> Vec<Option<Matrix<2>>> {
        let mesh = self.mesh();
        let decomp = self.energy.geometry().decomposition();
        (0..mesh.num_edges())
            .map(|e| {
                if decomp.edge_in(e, Region::Atomistic) {
                    return None;
                }
                let grads: Vec<Matrix<2>> = mesh
                    .edge_elements(e)
                    .iter()
                    .map(|&t| mesh.gradient(y, t))
                    .collect();
                Some(grads.iter().sum::<Matrix<2>>() / grads.len() as f64)
            })
            .collect()
    }

    /// `ψ̂(y) = Σ_f ψ(F_f(y); q_f) ζ_f`.
    pub fn psi_hat(&self, y: &Deformation<2>) -> Result<CrField> {
        let mesh = self.mesh();
        let mut values = vec![Vector::<2>::zeros(); mesh.num_edges()];
        for (e, strain) in self.edge_strains(y).into_iter().enumerate() {
            if let Some(f) = strain {
                values[e] = self.psi(&f)?.value(e);
            }
        }
        CrField::new(mesh, values)
    }

    /// `Σ̂_ac(y) = Σ_ac(y) - ∇ψ̂(y) J`.
    pub fn modified_stress(&self, y: &Deformation<2>) -> Result<P0TensorField> {
        let sigma = sigma_ac(self.energy, y);
        let psi_hat = self.psi_hat(y)?;
        let j = rotation();
        Ok(P0TensorField::from_fn(self.mesh(), |t| {
            sigma.at(t) - psi_hat.gradient(t) * j
        }))
    }

    /// `M^a` of the site potential and `M^i` of the interface model.
    pub fn lipschitz_constants(&self) -> Result<(f64, f64)> {
        let pot = self.energy.potential();
        let ma = pot.lipschitz_aggregate();
        let mi = self
            .energy
            .interface()
            .scaling_constants()
            .ok_or_else(|| {
                Error::InvalidArgument("interface model provides no scaling constants".into())
            })?
            .aggregate(pot.stencil());
        Ok((ma, mi))
    }

    /// `R(y) = Σ̂_ac(y) - Σ_a(y)` with the element-wise bound `ε M_T osc(∇y; ω_T)`.
    pub fn stress_error(
        &self,
        neighbourhoods: &Neighbourhoods,
        y: &Deformation<2>,
    ) -> Result<(P0TensorField, StressErrorField)> {
        let mesh = self.mesh();
        let decomp = self.energy.geometry().decomposition();
        let modified = self.modified_stress(y)?;
        let atomistic = sigma_atomistic(self.energy.potential().as_ref(), mesh, y);
        let error = &modified - &atomistic;
        let (ma, mi) = self.lipschitz_constants()?;
        let width = interface_width(decomp.mesh(), decomp.labels())?;
        let prefactors = prefactors(decomp.labels(), ma, mi, width);
        let grads = P0TensorField::gradient_of(mesh, y);
        let oscillations = (0..mesh.num_elements())
            .map(|t| {
                let patch = neighbourhoods.coupled(t, decomp);
                if patch.is_empty() {
                    Ok(0.0)
                } else {
                    oscillation(&grads, &patch)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((
            modified,
            StressErrorField {
                eps: mesh.eps(),
                labels: decomp.labels().to_vec(),
                error,
                prefactors,
                oscillations,
                width,
                lipschitz: (ma, mi),
            },
        ))
    }
}

/// `R(y;T)` together with the terms of its element-wise bound.
#[derive(Clone, Debug)]
pub struct StressErrorField {
    pub eps: f64,
    pub labels: Vec<Region>,
    pub error: P0TensorField,
    pub prefactors: Vec<f64>,
    pub oscillations: Vec<f64>,
    pub width: f64,
    /// `(M^a, M^i)`.
    pub lipschitz: (f64, f64),
}

impl StressErrorField {
    pub fn bound(&self, t: ElementId) -> f64 {
        self.eps * self.prefactors[t] * self.oscillations[t]
    }

    pub fn violations(&self) -> Vec<ElementId> {
        (0..self.prefactors.len())
            .filter(|&t| self.error.at(t).norm() > self.bound(t) * (1.0 + 1e-10) + 1e-12)
            .collect()
    }

    pub fn holds(&self) -> bool {
        self.violations().is_empty()
    }

    /// Largest `|R(y;T)|` over atomistic elements.
    pub fn atomistic_max(&self) -> f64 {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == Region::Atomistic)
            .map(|(t, _)| self.error.at(t).norm())
            .fold(0.0, f64::max)
    }

    pub fn worst_ratio(&self) -> f64 {
        (0..self.prefactors.len())
            .filter(|&t| self.bound(t) > 0.0)
            .map(|t| self.error.at(t).norm() / self.bound(t))
            .fold(0.0, f64::max)
    }
}

/// `M_T` for every element.
pub fn prefactors(labels: &[Region], ma: f64, mi: f64, width: f64) -> Vec<f64> {
    labels
        .iter()
        .map(|l| match l {
            Region::Atomistic => 0.0,
            Region::Interface => (mi + ma) * (1.0 + 7.0 * width),
            Region::Continuum => ma + 7.0 * (mi + ma) * width,
        })
        .collect()
}

#[derive(PartialEq)]
struct Candidate(f64, EdgeId);

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Largest distance, in lattice units, from an edge of the interface to the
/// nearest edge of the atomistic region, along paths through edge midpoints.
pub fn interface_width(mesh: &AtomisticMesh, labels: &[Region]) -> Result<f64> {
    let touches = |e: EdgeId, r: Region| mesh.edge_elements(e).iter().any(|&t| labels[t] == r);
    let mut dist = vec![f64::INFINITY; mesh.num_edges()];
    let mut heap = BinaryHeap::new();
    for e in 0..mesh.num_edges() {
        if touches(e, Region::Atomistic) {
            dist[e] = 0.0;
            heap.push(Candidate(0.0, e));
        }
    }
    if heap.is_empty() {
        return if labels.contains(&Region::Interface) {
            Err(Error::InvalidDecomposition(
                "interface width needs an atomistic region".into(),
            ))
        } else {
            Ok(0.0)
        };
    }
    while let Some(Candidate(d, e)) = heap.pop() {
        if d > dist[e] {
            continue;
        }
        for t in mesh.edge_elements(e) {
            let edges = mesh.element_edges(t);
            let ka = edges
                .iter()
                .position(|&x| x == e)
                .expect("edge belongs to its elements");
            for (kb, &f) in edges.iter().enumerate() {
                let nd = d + midpoint_step(mesh, t, ka, kb).norm();
                if nd < dist[f] {
                    dist[f] = nd;
                    heap.push(Candidate(nd, f));
                }
            }
        }
    }
    Ok((0..mesh.num_edges())
        .filter(|&e| touches(e, Region::Interface))
        .map(|e| dist[e])
        .fold(0.0, f64::max)
        / mesh.eps())
}

/// `|ψ(F; q_f) - ψ(G; q_f)|` against `ε (M^a + M^i) width |F - G|` over all
/// non-atomistic edges; returns the largest ratio.
pub fn psi_lipschitz_ratio(corrector: &Corrector, f: &Matrix<2>, g: &Matrix<2>) -> Result<f64> {
    let decomp = corrector.energy().geometry().decomposition();
    let mesh = decomp.mesh();
    let (ma, mi) = corrector.lipschitz_constants()?;
    let width = interface_width(mesh, decomp.labels())?;
    let bound = mesh.eps() * (ma + mi) * width * (f - g).norm();
    let (pf, pg) = (corrector.psi(f)?, corrector.psi(g)?);
    let worst = (0..mesh.num_edges())
        .filter(|&e| !decomp.edge_in(e, Region::Atomistic))
        .map(|e| (pf.value(e) - pg.value(e)).norm())
        .fold(0.0, f64::max);
    Ok(if bound > 0.0 {
        worst / bound
    } else if worst == 0.0 {
        0.0
    } else {
        f64::INFINITY
    })
}

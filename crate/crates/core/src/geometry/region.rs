//! Atomistic / interface / continuum labelling of the mesh and the derived
//! site and bond sets used by coupled energies.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::clip::Rational;
use super::mesh::{AtomisticMesh, Element, ElementId, ElementKind, FootprintEntry};
use crate::error::{Error, Result};
use crate::lattice::{add_sites, Site, Stencil};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Atomistic,
    Interface,
    Continuum,
}

impl Region {
    pub fn code(self) -> char {
        match self {
            Region::Atomistic => 'a',
            Region::Interface => 'i',
            Region::Continuum => 'c',
        }
    }
}

/// Region label for every element of the atomistic mesh.
#[derive(Clone, Debug)]
pub struct RegionDecomposition {
    mesh: AtomisticMesh,
    labels: Vec<Region>,
}

impl RegionDecomposition {
    pub fn new(mesh: AtomisticMesh, labels: Vec<Region>) -> Result<Self> {
        if labels.len() != mesh.num_elements() {
            return Err(Error::InvalidDecomposition(format!(
                "{} labels for {} elements",
                labels.len(),
                mesh.num_elements()
            )));
        }
        Ok(Self { mesh, labels })
    }

    pub fn from_fn(mesh: AtomisticMesh, f: impl Fn(&Element) -> Region) -> Self {
        let labels = mesh.elements().map(|(_, e)| f(&e)).collect();
        Self { mesh, labels }
    }

    pub fn uniform(mesh: AtomisticMesh, region: Region) -> Self {
        Self {
            labels: vec![region; mesh.num_elements()],
            mesh,
        }
    }

    /// Square atomistic block of cells `[-a, a)²` surrounded by an interface
    /// ring `w` cells wide; everything else is continuum.
    pub fn block(mesh: AtomisticMesh, half_width: i64, interface_width: i64) -> Result<Self> {
        let n = mesh.domain().n() as i64;
        if half_width < 1 || interface_width < 0 || half_width + interface_width >= n {
            return Err(Error::InvalidDecomposition(format!(
                "block half-width {half_width} with interface width {interface_width} does not fit N = {n}"
            )));
        }
        Ok(Self::from_fn(mesh, |e| {
            let d = e
                .cell
                .iter()
                .map(|&c| {
                    if c >= 0 {
                        c - half_width + 1
                    } else {
                        -c - half_width
                    }
                })
                .max()
                .unwrap();
            if d <= 0 {
                Region::Atomistic
            } else if d <= interface_width {
                Region::Interface
            } else {
                Region::Continuum
            }
        }))
    }

    pub fn mesh(&self) -> &AtomisticMesh {
        &self.mesh
    }

    pub fn label(&self, id: ElementId) -> Region {
        self.labels[id]
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    pub fn elements_in(&self, region: Region) -> impl Iterator<Item = ElementId> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == region)
            .map(|(id, _)| id)
    }

    pub fn count(&self, region: Region) -> usize {
        self.labels.iter().filter(|&&l| l == region).count()
    }

    /// Whether the edge is contained in the closure of the region.
    pub fn edge_in(&self, edge: usize, region: Region) -> bool {
        self.mesh
            .edge_elements(edge)
            .iter()
            .any(|&t| self.labels[t] == region)
    }

    /// Local edges of an element lying on the boundary of its own region.
    pub fn region_boundary_edges(&self, id: ElementId) -> [bool; 3] {
        let own = self.labels[id];
        self.mesh.element_edges(id).map(|edge| {
            self.mesh
                .edge_elements(edge)
                .iter()
                .any(|&t| t != id && self.labels[t] != own)
        })
    }

    /// Whether the atomistic elements form a single edge-connected component.
    pub fn atomistic_connected(&self) -> bool {
        let atomistic: Vec<ElementId> = self.elements_in(Region::Atomistic).collect();
        let Some(&start) = atomistic.first() else {
            return true;
        };
        let mut seen = vec![false; self.labels.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut reached = 1;
        while let Some(t) = queue.pop_front() {
            for edge in self.mesh.element_edges(t) {
                for nb in self.mesh.edge_elements(edge) {
                    if !seen[nb] && self.labels[nb] == Region::Atomistic {
                        seen[nb] = true;
                        reached += 1;
                        queue.push_back(nb);
                    }
                }
            }
        }
        reached == atomistic.len()
    }
}

/// A bond `(x, x + ε r)` identified by its origin and stencil index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bond {
    pub site: Site<2>,
    pub offset: usize,
}

/// Derived sets for a coupled energy: the atomistic sites `L_a`, the
/// interface bonds `B_i` and the bond/element weights.
#[derive(Clone, Debug)]
pub struct CouplingGeometry {
    decomposition: RegionDecomposition,
    stencil: Stencil<2>,
    footprints: Vec<Vec<FootprintEntry>>,
    atomistic_sites: Vec<bool>,
    interface_bonds: Vec<Bond>,
    interface_bond_lookup: HashMap<(usize, usize), usize>,
    interface_bond_weights: Vec<Vec<(ElementId, f64)>>,
    interface_bond_on_boundary: Vec<bool>,
}

impl CouplingGeometry {
    /// Builds the sets and checks that no bond from an atomistic site meets
    /// the continuum region in a set of positive length.
    pub fn new(decomposition: RegionDecomposition, stencil: Stencil<2>) -> Result<Self> {
        let mesh = *decomposition.mesh();
        let domain = *mesh.domain();
        let footprints = mesh.stencil_footprints(&stencil);
        let element_at =
            |x: Site<2>, e: &FootprintEntry| mesh.element_id(add_sites(x, e.cell), e.kind);

        let mut atomistic_sites = vec![false; domain.num_sites()];
        for (idx, x) in domain.sites().enumerate() {
            atomistic_sites[idx] = footprints
                .iter()
                .flatten()
                .any(|e| decomposition.label(element_at(x, e)) == Region::Atomistic);
        }

        for (idx, x) in domain.sites().enumerate() {
            if !atomistic_sites[idx] {
                continue;
            }
            for (k, fp) in footprints.iter().enumerate() {
                let into_continuum: Rational = fp
                    .iter()
                    .filter(|e| decomposition.label(element_at(x, e)) == Region::Continuum)
                    .map(|e| e.clip.chi_weight())
                    .sum();
                if into_continuum != Rational::from_integer(0) {
                    return Err(Error::InvalidDecomposition(format!(
                        "bond from atomistic site {x:?} along {:?} enters the continuum region",
                        stencil.offsets()[k]
                    )));
                }
            }
        }

        let boundary: Vec<[bool; 3]> = (0..mesh.num_elements())
            .map(|id| decomposition.region_boundary_edges(id))
            .collect();
        let mut interface_bonds = Vec::new();
        let mut interface_bond_weights = Vec::new();
        let mut interface_bond_on_boundary = Vec::new();
        for x in domain.sites() {
            for (k, fp) in footprints.iter().enumerate() {
                let mut total = Rational::from_integer(0);
                let mut weights = Vec::new();
                let mut on_boundary = false;
                for e in fp {
                    let t = element_at(x, e);
                    if decomposition.label(t) != Region::Interface {
                        continue;
                    }
                    let w = e.clip.chi_weight_with(boundary[t]);
                    if let Some(edge) = e.clip.on_edge {
                        if boundary[t][edge] && e.clip.length() > Rational::from_integer(0) {
                            on_boundary = true;
                        }
                    }
                    total += w;
                    if w > Rational::from_integer(0) {
                        weights.push((t, *w.numer() as f64 / *w.denom() as f64));
                    }
                }
                if total == Rational::from_integer(1) {
                    interface_bonds.push(Bond { site: x, offset: k });
                    interface_bond_weights.push(weights);
                    interface_bond_on_boundary.push(on_boundary);
                }
            }
        }
        let interface_bond_lookup = interface_bonds
            .iter()
            .enumerate()
            .map(|(i, b)| ((domain.index(b.site), b.offset), i))
            .collect();

        Ok(Self {
            decomposition,
            stencil,
            footprints,
            atomistic_sites,
            interface_bonds,
            interface_bond_lookup,
            interface_bond_weights,
            interface_bond_on_boundary,
        })
    }

    pub fn decomposition(&self) -> &RegionDecomposition {
        &self.decomposition
    }

    pub fn mesh(&self) -> &AtomisticMesh {
        self.decomposition.mesh()
    }

    pub fn stencil(&self) -> &Stencil<2> {
        &self.stencil
    }

    pub fn footprints(&self) -> &[Vec<FootprintEntry>] {
        &self.footprints
    }

    /// Element carrying a footprint entry of a bond from `x`.
    pub fn footprint_element(&self, x: Site<2>, entry: &FootprintEntry) -> ElementId {
        self.mesh().element_id(add_sites(x, entry.cell), entry.kind)
    }

    pub fn is_atomistic_site(&self, x: Site<2>) -> bool {
        self.atomistic_sites[self.mesh().domain().index(x)]
    }

    pub fn atomistic_sites(&self) -> impl Iterator<Item = Site<2>> + '_ {
        self.mesh()
            .domain()
            .sites()
            .filter(move |&x| self.is_atomistic_site(x))
    }

    pub fn interface_bonds(&self) -> &[Bond] {
        &self.interface_bonds
    }

    pub fn interface_bond_index(&self, bond: &Bond) -> Option<usize> {
        let idx = self.mesh().domain().index(bond.site);
        self.interface_bond_lookup.get(&(idx, bond.offset)).copied()
    }

    /// `⨍ χ^i_T` for every interface element `T` met by the bond.
    pub fn interface_bond_weights(&self, index: usize) -> &[(ElementId, f64)] {
        &self.interface_bond_weights[index]
    }

    /// Whether the bond runs along the boundary of the interface region.
    pub fn interface_bond_on_boundary(&self, index: usize) -> bool {
        self.interface_bond_on_boundary[index]
    }

    /// `ε² Σ_x ⨍_x^{x+εr} χ_T db` restricted to origins `x` selected by `include`,
    /// for every element `T` and offset `r` (indexed `[T][r]`).
    pub fn partial_bond_density(&self, include: impl Fn(Site<2>) -> bool) -> Vec<Vec<f64>> {
        let mesh = self.mesh();
        let eps2 = mesh.eps() * mesh.eps();
        let mut out = vec![vec![0.0; self.stencil.len()]; mesh.num_elements()];
        for x in mesh.domain().sites() {
            if !include(x) {
                continue;
            }
            for (k, fp) in self.footprints.iter().enumerate() {
                for e in fp {
                    let w = e.clip.chi_weight();
                    if w > Rational::from_integer(0) {
                        let t = self.footprint_element(x, e);
                        out[t][k] += eps2 * (*w.numer() as f64 / *w.denom() as f64);
                    }
                }
            }
        }
        out
    }

    /// Corner site of an element at its right angle; the element's legs are
    /// the bonds `±e1`, `±e2` from there.
    pub fn element_corner(&self, id: ElementId) -> (Site<2>, f64) {
        let e = self.mesh().element(id);
        match e.kind {
            ElementKind::Lower => (e.cell, 1.0),
            ElementKind::Upper => (
                self.mesh().domain().wrap([e.cell[0] + 1, e.cell[1] + 1]),
                -1.0,
            ),
        }
    }
}

pub fn rational_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeDomain;

    fn stencil8() -> Stencil<2> {
        Stencil::new(vec![
            [1, 0],
            [-1, 0],
            [0, 1],
            [0, -1],
            [1, 1],
            [-1, -1],
            [1, -1],
            [-1, 1],
        ])
        .unwrap()
    }

    #[test]
    fn block_decomposition_counts() {
        let mesh = AtomisticMesh::new(LatticeDomain::new(6).unwrap());
        let d = RegionDecomposition::block(mesh, 2, 2).unwrap();
        assert_eq!(d.count(Region::Atomistic), 2 * 16);
        assert_eq!(d.count(Region::Interface), 2 * (64 - 16));
        assert!(d.atomistic_connected());
    }

    #[test]
    fn thin_interface_is_rejected() {
        let mesh = AtomisticMesh::new(LatticeDomain::new(6).unwrap());
        let d = RegionDecomposition::block(mesh, 2, 1).unwrap();
        assert!(CouplingGeometry::new(d, stencil8()).is_err());
    }

    #[test]
    fn atomistic_sites_and_interface_bonds() {
        let mesh = AtomisticMesh::new(LatticeDomain::new(6).unwrap());
        let d = RegionDecomposition::block(mesh, 2, 2).unwrap();
        let g = CouplingGeometry::new(d, stencil8()).unwrap();
        // Sites within one lattice step of the closed block [-2, 2]².
        assert_eq!(g.atomistic_sites().count(), 49);
        assert!(g.is_atomistic_site([3, -3]));
        assert!(!g.is_atomistic_site([4, 0]));
        for (i, b) in g.interface_bonds().iter().enumerate() {
            let total: f64 = g.interface_bond_weights(i).iter().map(|w| w.1).sum();
            assert!((total - 1.0).abs() < 1e-15, "{b:?}");
        }
    }

    #[test]
    fn partial_density_over_all_sites_is_element_area() {
        let mesh = AtomisticMesh::new(LatticeDomain::new(3).unwrap());
        let d = RegionDecomposition::uniform(mesh, Region::Continuum);
        let g = CouplingGeometry::new(d, stencil8()).unwrap();
        let dens = g.partial_bond_density(|_| true);
        for row in dens {
            for v in row {
                assert!((v - mesh.element_area()).abs() < 1e-15);
            }
        }
    }
}

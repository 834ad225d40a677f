//! Element neighbourhoods and the oscillation of piecewise constant fields.

use super::clip::{convex_hull, convex_overlap_has_area, convex_polygons_touch, Point};
use super::field::P0TensorField;
use super::mesh::{AtomisticMesh, Element, ElementId, ElementKind};
use super::region::{Region, RegionDecomposition};
use crate::error::{Error, Result};
use crate::lattice::{Site, Stencil};

type Pattern = Vec<(Site<2>, ElementKind)>;

/// Translation-invariant neighbourhood patterns of the two element kinds.
#[derive(Clone, Debug)]
pub struct Neighbourhoods {
    mesh: AtomisticMesh,
    interaction: [Pattern; 2],
    touching: [Pattern; 2],
}

fn kind_index(kind: ElementKind) -> usize {
    match kind {
        ElementKind::Lower => 0,
        ElementKind::Upper => 1,
    }
}

impl Neighbourhoods {
    pub fn new(mesh: AtomisticMesh, stencil: &Stencil<2>) -> Result<Self> {
        let reach = stencil
            .offsets()
            .iter()
            .map(|r| r[0].abs().max(r[1].abs()))
            .max()
            .unwrap_or(0);
        if 2 * (2 * reach + 1) > mesh.domain().period() {
            return Err(Error::InvalidDomain(
                "the interaction neighbourhoods wrap around the period".into(),
            ));
        }
        let build = |member: &dyn Fn(&[Point]) -> bool, window: i64| {
            let mut out = Vec::new();
            for i in -window..=window {
                for j in -window..=window {
                    for k in ElementKind::ALL {
                        let verts = Element {
                            cell: [i, j],
                            kind: k,
                        }
                        .vertices();
                        if member(&convex_hull(&verts)) {
                            out.push(([i, j], k));
                        }
                    }
                }
            }
            out
        };
        let hulls = |kind: ElementKind| -> Vec<Vec<Point>> {
            let tri = kind.local_vertices();
            let offs = stencil.offsets();
            let mut hulls = Vec::new();
            for r1 in offs {
                for r2 in offs {
                    let mut pts = Vec::with_capacity(12);
                    for v in tri {
                        for shift in [[0, 0], *r1, *r2, [r1[0] + r2[0], r1[1] + r2[1]]] {
                            pts.push([v[0] + shift[0], v[1] + shift[1]]);
                        }
                    }
                    hulls.push(convex_hull(&pts));
                }
            }
            if hulls.is_empty() {
                hulls.push(convex_hull(&tri));
            }
            hulls
        };
        let window = 2 * reach + 2;
        let interaction = ElementKind::ALL.map(|kind| {
            let hs = hulls(kind);
            build(
                &|poly| hs.iter().any(|h| convex_overlap_has_area(h, poly)),
                window,
            )
        });
        let touching = ElementKind::ALL.map(|kind| {
            let tri = kind.local_vertices();
            build(&|poly| convex_polygons_touch(&tri, poly), 2)
        });
        Ok(Self {
            mesh,
            interaction,
            touching,
        })
    }

    pub fn mesh(&self) -> &AtomisticMesh {
        &self.mesh
    }

    fn apply(&self, id: ElementId, pattern: &[Pattern; 2]) -> Vec<ElementId> {
        let e = self.mesh.element(id);
        pattern[kind_index(e.kind)]
            .iter()
            .map(|(c, k)| {
                self.mesh
                    .element_id([e.cell[0] + c[0], e.cell[1] + c[1]], *k)
            })
            .collect()
    }

    /// Elements meeting the interaction neighbourhood `ω_T^a` in positive area.
    pub fn interaction(&self, id: ElementId) -> Vec<ElementId> {
        self.apply(id, &self.interaction)
    }

    /// Elements sharing at least a point with `T` (including `T`).
    pub fn touching(&self, id: ElementId) -> Vec<ElementId> {
        self.apply(id, &self.touching)
    }

    /// `ω_T`: interaction neighbourhood and touching elements, without the
    /// atomistic region.
    pub fn coupled(&self, id: ElementId, decomposition: &RegionDecomposition) -> Vec<ElementId> {
        let mut out: Vec<ElementId> = self
            .interaction(id)
            .into_iter()
            .chain(self.touching(id))
            .filter(|&t| decomposition.label(t) != Region::Atomistic)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `ω_T^c`: continuum elements touching `T`.
    pub fn continuum(&self, id: ElementId, decomposition: &RegionDecomposition) -> Vec<ElementId> {
        self.touching(id)
            .into_iter()
            .filter(|&t| decomposition.label(t) == Region::Continuum)
            .collect()
    }
}

/// `max |g(T) - g(T')| / ε` over pairs of the given elements (Frobenius norm).
pub fn oscillation(field: &P0TensorField, elements: &[ElementId]) -> Result<f64> {
    if elements.is_empty() {
        return Err(Error::InvalidArgument(
            "oscillation over an empty set".into(),
        ));
    }
    let mut best: f64 = 0.0;
    for (k, &a) in elements.iter().enumerate() {
        for &b in &elements[k + 1..] {
            best = best.max((field.at(a) - field.at(b)).norm());
        }
    }
    Ok(best / field.mesh().eps())
}

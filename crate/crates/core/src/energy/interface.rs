use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{Bond, CouplingGeometry, Region};
use crate::lattice::{Deformation, LatticeDomain, Site, Stencil, Vector};
use crate::potential::{LipschitzTable, PairPotential, SitePotential};

/// The interface part `E_i(y) = ε² E_i((D_r y(x))_{(x, x+εr) ∈ B_i})` of a
/// coupled energy.
pub trait InterfaceModel: Send + Sync {
    fn name(&self) -> &str;

    /// Bonds the functional depends on; each must lie in the interface region.
    fn bonds(&self) -> &[Bond];

    /// `E_i(y)`, including the `ε²` prefactor.
    fn energy(&self, y: &Deformation<2>) -> f64;

    /// `∂_b E_i` for every bond of [`Self::bonds`], normalised so that
    /// `⟨δE_i(y), z⟩ = ε² Σ_b ∂_b E_i · D_r z(x)`.
    fn bond_gradient(&self, y: &Deformation<2>) -> Vec<Vector<2>>;

    /// Constants `M^i_{r,s}` (stencil indices) of the interface scaling
    /// condition, when the model provides them.
    fn scaling_constants(&self) -> Option<LipschitzTable> {
        None
    }

    /// Whether second derivatives between bonds of different origins vanish.
    fn is_local(&self) -> bool {
        true
    }
}

/// Site with generalised-coordination coefficients: its energy is `V(C g)`
/// where `(C g)_r = Σ_s C_{r,s} g_s`.
#[derive(Clone, Debug)]
pub struct GccSite {
    pub site: Site<2>,
    pub coefficients: DMatrix<f64>,
}

#[derive(Clone, Debug)]
struct ElementTerm {
    /// Bond indices of the two legs at the right-angle corner.
    legs: [usize; 2],
    sign: f64,
    /// `c_{T,r} / ε²` per stencil entry.
    weights: Vec<f64>,
}

/// Pair-potential coupling in which every bond from a non-atomistic site is
/// replaced by the bond integral of the Cauchy–Born bond energy on the
/// piecewise affine interpolant. Optionally, selected interface sites keep a
/// site energy with generalised-coordination coefficients.
#[derive(Clone, Debug)]
pub struct BondSplitInterface {
    potential: PairPotential<2>,
    domain: LatticeDomain<2>,
    elements: Vec<ElementTerm>,
    gcc: Vec<(GccSite, Vec<Option<usize>>)>,
    bonds: Vec<Bond>,
    scaling: LipschitzTable,
}

impl BondSplitInterface {
    pub fn new(potential: PairPotential<2>, geometry: &CouplingGeometry) -> Result<Self> {
        Self::with_gcc_sites(potential, geometry, Vec::new())
    }

    pub fn with_gcc_sites(
        potential: PairPotential<2>,
        geometry: &CouplingGeometry,
        gcc: Vec<GccSite>,
    ) -> Result<Self> {
        let stencil = potential.stencil().clone();
        if &stencil != geometry.stencil() {
            return Err(Error::InvalidArgument(
                "potential and geometry use different stencils".into(),
            ));
        }
        let axis = axis_offsets(&stencil)?;
        let mesh = geometry.mesh();
        let domain = *mesh.domain();
        let eps2 = mesh.eps() * mesh.eps();

        let mut bonds: Vec<Bond> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut intern = |b: Bond, bonds: &mut Vec<Bond>| -> Result<usize> {
            if geometry.interface_bond_index(&b).is_none() {
                return Err(Error::InvalidDecomposition(format!(
                    "interface term depends on bond {b:?} outside the interface region"
                )));
            }
            let key = (domain.index(b.site), b.offset);
            Ok(*lookup.entry(key).or_insert_with(|| {
                bonds.push(b);
                bonds.len() - 1
            }))
        };

        let mut is_gcc = vec![false; domain.num_sites()];
        let mut gcc_terms = Vec::new();
        for g in gcc {
            let x = domain.wrap(g.site);
            if geometry.is_atomistic_site(x) {
                return Err(Error::InvalidArgument(format!("site {x:?} is atomistic")));
            }
            check_coefficients(&stencil, &g.coefficients)?;
            is_gcc[domain.index(x)] = true;
            let mut cols = Vec::with_capacity(stencil.len());
            for s in 0..stencil.len() {
                if g.coefficients.column(s).iter().any(|&c| c != 0.0) {
                    cols.push(Some(intern(Bond { site: x, offset: s }, &mut bonds)?));
                } else {
                    cols.push(None);
                }
            }
            gcc_terms.push((
                GccSite {
                    site: x,
                    coefficients: g.coefficients,
                },
                cols,
            ));
        }

        let density = geometry
            .partial_bond_density(|x| !geometry.is_atomistic_site(x) && !is_gcc[domain.index(x)]);
        let mut elements = Vec::new();
        for id in geometry.decomposition().elements_in(Region::Interface) {
            if density[id].iter().all(|&c| c == 0.0) {
                continue;
            }
            let (corner, sign) = geometry.element_corner(id);
            let (a, b) = if sign > 0.0 {
                (axis[0], axis[1])
            } else {
                (axis[2], axis[3])
            };
            let legs = [
                intern(
                    Bond {
                        site: corner,
                        offset: a,
                    },
                    &mut bonds,
                )?,
                intern(
                    Bond {
                        site: corner,
                        offset: b,
                    },
                    &mut bonds,
                )?,
            ];
            let weights = density[id].iter().map(|c| c / eps2).collect();
            elements.push(ElementTerm {
                legs,
                sign,
                weights,
            });
        }

        let scaling = scaling_table(&potential, geometry, &bonds, &elements, &gcc_terms);
        Ok(Self {
            potential,
            domain,
            elements,
            gcc: gcc_terms,
            bonds,
            scaling,
        })
    }

    pub fn potential(&self) -> &PairPotential<2> {
        &self.potential
    }

    pub fn gcc_sites(&self) -> impl Iterator<Item = &GccSite> {
        self.gcc.iter().map(|(g, _)| g)
    }

    fn leg_matrix(&self, term: &ElementTerm, g: &[Vector<2>]) -> nalgebra::Matrix2<f64> {
        nalgebra::Matrix2::from_columns(&[g[term.legs[0]], g[term.legs[1]]]) * term.sign
    }

    fn bond_values(&self, y: &Deformation<2>) -> Vec<Vector<2>> {
        let st = self.potential.stencil();
        self.bonds
            .iter()
            .map(|b| y.difference(b.site, st.offsets()[b.offset]))
            .collect()
    }
}

fn axis_offsets(stencil: &Stencil<2>) -> Result<[usize; 4]> {
    let find = |r: Site<2>| {
        stencil.position(r).ok_or_else(|| {
            Error::InvalidStencil(format!(
                "bond splitting needs the axis offset {r:?} in the stencil"
            ))
        })
    };
    Ok([find([1, 0])?, find([0, 1])?, find([-1, 0])?, find([0, -1])?])
}

/// Checks `Σ_s C_{r,s} s = r`, which makes `V(C F R) = V(F R)` for every `F`.
fn check_coefficients(stencil: &Stencil<2>, c: &DMatrix<f64>) -> Result<()> {
    let n = stencil.len();
    if c.nrows() != n || c.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "coefficient matrix must be {n}×{n}"
        )));
    }
    for r in 0..n {
        let mut sum = Vector::<2>::zeros();
        for s in 0..n {
            sum += stencil.vector(s) * c[(r, s)];
        }
        if (sum - stencil.vector(r)).norm() > 1e-12 {
            return Err(Error::Inconsistent(format!(
                "coefficients of row {r} do not reproduce the offset {:?}",
                stencil.offsets()[r]
            )));
        }
    }
    Ok(())
}

fn scaling_table(
    potential: &PairPotential<2>,
    geometry: &CouplingGeometry,
    bonds: &[Bond],
    elements: &[ElementTerm],
    gcc: &[(GccSite, Vec<Option<usize>>)],
) -> LipschitzTable {
    let st = potential.stencil();
    let n = st.len();
    let lip = potential.lipschitz();
    // Second-derivative bounds between bonds of the same origin.
    let mut per_pair: HashMap<(usize, usize), f64> = HashMap::new();
    for term in elements {
        for a in 0..2 {
            for b in 0..2 {
                let bound: f64 = (0..n)
                    .map(|r| {
                        let v = st.vector(r);
                        term.weights[r] * v[a].abs() * v[b].abs() * lip.get(r, r)
                    })
                    .sum();
                *per_pair.entry((term.legs[a], term.legs[b])).or_default() += bound;
            }
        }
    }
    for (site, cols) in gcc {
        for p in 0..n {
            for q in 0..n {
                let (Some(bp), Some(bq)) = (cols[p], cols[q]) else {
                    continue;
                };
                let bound: f64 = (0..n)
                    .map(|r| {
                        site.coefficients[(r, p)].abs()
                            * site.coefficients[(r, q)].abs()
                            * lip.get(r, r)
                    })
                    .sum();
                *per_pair.entry((bp, bq)).or_default() += bound;
            }
        }
    }
    let mut table = LipschitzTable::zeros(n);
    for ((bp, bq), bound) in per_pair {
        let gi = geometry
            .interface_bond_index(&bonds[bp])
            .expect("bond lies in the interface");
        let factor = if geometry.interface_bond_on_boundary(gi) {
            2.0
        } else {
            1.0
        };
        let (p, q) = (bonds[bp].offset, bonds[bq].offset);
        table.set(p, q, table.get(p, q).max(factor * bound));
    }
    table
}

impl InterfaceModel for BondSplitInterface {
    fn name(&self) -> &str {
        if self.gcc.is_empty() {
            "bond-split"
        } else {
            "bond-split-gcc"
        }
    }

    fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    fn energy(&self, y: &Deformation<2>) -> f64 {
        let g = self.bond_values(y);
        let st = self.potential.stencil();
        let mut total = 0.0;
        for term in &self.elements {
            let grad = self.leg_matrix(term, &g);
            for (r, w) in term.weights.iter().enumerate() {
                if *w != 0.0 {
                    total += w * self.potential.bond_energy(r, &(grad * st.vector(r)));
                }
            }
        }
        let mut full = Vec::new();
        for (site, _) in &self.gcc {
            y.stencil_differences(site.site, st, &mut full);
            total += self
                .potential
                .energy(&apply_coefficients(&site.coefficients, &full));
        }
        let eps = self.domain.eps();
        eps * eps * total
    }

    fn bond_gradient(&self, y: &Deformation<2>) -> Vec<Vector<2>> {
        let g = self.bond_values(y);
        let st = self.potential.stencil();
        let mut out = vec![Vector::<2>::zeros(); self.bonds.len()];
        for term in &self.elements {
            let grad = self.leg_matrix(term, &g);
            for (r, w) in term.weights.iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                let v = st.vector(r);
                let t = self.potential.bond_force(r, &(grad * v)) * (w * term.sign);
                out[term.legs[0]] += t * v[0];
                out[term.legs[1]] += t * v[1];
            }
        }
        let mut full = Vec::new();
        let mut dv = vec![Vector::<2>::zeros(); st.len()];
        for (site, cols) in &self.gcc {
            y.stencil_differences(site.site, st, &mut full);
            self.potential
                .gradient(&apply_coefficients(&site.coefficients, &full), &mut dv);
            for (s, col) in cols.iter().enumerate() {
                if let Some(b) = col {
                    for (r, d) in dv.iter().enumerate() {
                        out[*b] += d * site.coefficients[(r, s)];
                    }
                }
            }
        }
        out
    }

    fn scaling_constants(&self) -> Option<LipschitzTable> {
        Some(self.scaling.clone())
    }
}

pub(crate) fn apply_coefficients(c: &DMatrix<f64>, g: &[Vector<2>]) -> Vec<Vector<2>> {
    (0..g.len())
        .map(|r| (0..g.len()).map(|s| g[s] * c[(r, s)]).sum())
        .collect()
}

//! Effect of coarsening the continuum region: interpolation error, the norm
//! inequality for lattice interpolants and the measured constant of the
//! coarsening reduction.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{check_exponent, conjugate_exponent, dual_norm_2d, DualNorm};
use crate::energy::{AcEnergy, AtomisticEnergy, EnergyFunctional};
use crate::error::Result;
use crate::geometry::{
    lattice_gradient_norm, oscillation, piecewise_lp_norm, CoarseField, CoarseMesh, Neighbourhoods,
    P0TensorField, PointwiseNorm, Region, RegionDecomposition,
};
use crate::lattice::{Deformation, Matrix, Vector};
use crate::potential::cauchy_born_stress;
use crate::stress::stress_functional;

/// `(∥∇I_ε y_h∥_{L^p}, ∥∇y_h∥_{L^p})` with entrywise pointwise norms.
pub fn norm_inequality(mesh: &CoarseMesh, field: &CoarseField, p: f64) -> (f64, f64) {
    let fine = field.to_lattice(mesh);
    let lattice = crate::geometry::AtomisticMesh::new(*mesh.domain());
    (
        lattice_gradient_norm(&lattice, &fine, p, PointwiseNorm::Entrywise),
        field.gradient_norm(mesh, p, PointwiseNorm::Entrywise),
    )
}

/// `∥∇(y - I_h y)∥_{L^p}` against `(Σ_{T ∈ T_ε^c} |T| [h_T osc(∇y; ω_T^c)]^p)^{1/p}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolationReport {
    pub error: f64,
    pub smoothness: f64,
}

impl InterpolationReport {
    pub fn ratio(&self) -> f64 {
        if self.smoothness > 0.0 {
            self.error / self.smoothness
        } else {
            0.0
        }
    }
}

fn sum_or_max(terms: &[(f64, f64)], p: f64) -> f64 {
    if p.is_infinite() {
        terms.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max)
    } else {
        terms
            .iter()
            .map(|(a, v)| a * v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

pub fn interpolation_error(
    mesh: &CoarseMesh,
    decomposition: &RegionDecomposition,
    neighbourhoods: &Neighbourhoods,
    y: &Deformation<2>,
    p: f64,
) -> Result<InterpolationReport> {
    check_exponent(p)?;
    let fine = decomposition.mesh();
    let interpolant = CoarseField::interpolate(mesh, y);
    let overlaps = mesh.overlaps(fine);
    let grads = P0TensorField::gradient_of(*fine, y);
    let mut cells = Vec::new();
    let mut h = vec![0.0f64; fine.num_elements()];
    for (t, parts) in overlaps.iter().enumerate() {
        let g = interpolant.gradient(mesh, t);
        for &(f, area) in parts {
            cells.push((area, grads.at(f) - g));
            h[f] = h[f].max(mesh.diameter(t));
        }
    }
    let error = piecewise_lp_norm(
        cells.iter().map(|(a, g)| (*a, g)),
        p,
        PointwiseNorm::Frobenius,
    );
    let area = fine.element_area();
    let mut terms = Vec::new();
    for t in decomposition.elements_in(Region::Continuum) {
        let patch = neighbourhoods.continuum(t, decomposition);
        let osc = if patch.is_empty() {
            0.0
        } else {
            oscillation(&grads, &patch)?
        };
        terms.push((area, h[t] * osc));
    }
    Ok(InterpolationReport {
        error,
        smoothness: sum_or_max(&terms, p),
    })
}

/// Measured quantities of the coarsening reduction for one deformation.
#[derive(Clone, Debug)]
pub struct CoarseningReport {
    pub p: f64,
    /// Best `|⟨δE_ac,h(y) - δE_a(y), u_h⟩| / ∥∇u_h∥_{L^{p'}}` over the coarse test family.
    pub coarse_estimate: f64,
    /// `∥δE_ac(y) - δE_a(y)∥_{W^{-1,p}_ε}`.
    pub fine_norm: DualNorm,
    /// `ε (Σ_{T ∈ T_ε^c} |T| osc(∂W(∇y); ω_T^c)^p)^{1/p}`.
    pub oscillation_term: f64,
    /// Largest coarsening defect `|∫_{Ω_c} σ : ∇u_h - ∫_{Ω_c} σ : ∇I_ε u_h|`
    /// over the family, normalised by `∥∇u_h∥_{L^{p'}(Ω_c)}`.
    pub coarsening_defect: f64,
    /// `coarsening_defect / oscillation_term`, the measured `C_M`.
    pub constant: f64,
    pub family_size: usize,
}

/// Hats at every coarse node and low trigonometric modes, for both components.
fn test_family(mesh: &CoarseMesh) -> Vec<CoarseField> {
    let nodes = mesh.num_nodes();
    let eps = mesh.eps();
    let mut out = Vec::new();
    for c in 0..2 {
        for k in 0..nodes {
            let mut values = vec![Vector::<2>::zeros(); nodes];
            values[k][c] = 1.0;
            out.push(CoarseField {
                strain: Matrix::<2>::zeros(),
                values,
            });
        }
        for wave in [[1, 0], [0, 1], [1, 1], [1, -1], [2, 1], [1, 2]] {
            for phase in [0.0, 0.5 * PI] {
                let values = (0..nodes)
                    .map(|k| {
                        let s = mesh.node_site(k);
                        let arg = PI * eps * (wave[0] * s[0] + wave[1] * s[1]) as f64 + phase;
                        let mut v = Vector::<2>::zeros();
                        v[c] = arg.sin();
                        v
                    })
                    .collect();
                out.push(CoarseField {
                    strain: Matrix::<2>::zeros(),
                    values,
                });
            }
        }
    }
    out
}

/// Splits the coarse modelling error into the fine-mesh modelling error and
/// the coarsening defect of the continuum stress `σ = ∂W(∇y)`, and measures
/// the constant relating the defect to `osc(σ; ω_T^c)`.
pub fn coarsening_check(
    energy: &AcEnergy,
    mesh: &CoarseMesh,
    y: &Deformation<2>,
    p: f64,
) -> Result<CoarseningReport> {
    check_exponent(p)?;
    let decomposition = energy.geometry().decomposition();
    mesh.check_resolves(decomposition)?;
    let fine = *decomposition.mesh();
    let potential = energy.potential();
    let neighbourhoods = Neighbourhoods::new(fine, potential.stencil())?;
    let q = conjugate_exponent(p);

    let sigma = P0TensorField::from_fn(fine, |t| {
        if decomposition.label(t) == Region::Continuum {
            cauchy_born_stress(potential.as_ref(), &fine.gradient(y, t))
        } else {
            Matrix::<2>::zeros()
        }
    });
    let atomistic = AtomisticEnergy::new(*fine.domain(), Arc::clone(potential));
    let residual = energy
        .first_variation(y)
        .difference(&atomistic.first_variation(y));
    let fine_norm = dual_norm_2d(&residual, p, &[])?;
    // Everything except the continuum stress, which is integrated on the coarse mesh.
    let non_continuum = residual.difference(&stress_functional(&sigma));

    let area = fine.element_area();
    let mut terms = Vec::new();
    for t in decomposition.elements_in(Region::Continuum) {
        let patch = neighbourhoods.continuum(t, decomposition);
        let osc = if patch.is_empty() {
            0.0
        } else {
            oscillation(&sigma, &patch)?
        };
        terms.push((area, osc));
    }
    let oscillation_term = fine.eps() * sum_or_max(&terms, p);

    let overlaps = mesh.overlaps(&fine);
    let family = test_family(mesh);
    let mut coarse_estimate: f64 = 0.0;
    let mut coarsening_defect: f64 = 0.0;
    for uh in &family {
        let lattice = uh.to_lattice(mesh);
        let mut coarse_integral = 0.0;
        let mut continuum_cells = Vec::new();
        let mut all_cells = Vec::new();
        for (t, parts) in overlaps.iter().enumerate() {
            let g = uh.gradient(mesh, t);
            for &(f, a) in parts {
                all_cells.push((a, g));
                if decomposition.label(f) == Region::Continuum {
                    coarse_integral += a * sigma.at(f).dot(&g);
                    continuum_cells.push((a, g));
                }
            }
        }
        let fine_integral = sigma.pair_with(&lattice);
        let total = non_continuum.apply(&lattice) + coarse_integral;
        let norm = piecewise_lp_norm(
            all_cells.iter().map(|(a, g)| (*a, g)),
            q,
            PointwiseNorm::Frobenius,
        );
        let continuum_norm = piecewise_lp_norm(
            continuum_cells.iter().map(|(a, g)| (*a, g)),
            q,
            PointwiseNorm::Frobenius,
        );
        if norm > 0.0 {
            coarse_estimate = coarse_estimate.max(total.abs() / norm);
        }
        if continuum_norm > 0.0 {
            coarsening_defect =
                coarsening_defect.max((coarse_integral - fine_integral).abs() / continuum_norm);
        }
    }
    let constant = if oscillation_term > 0.0 {
        coarsening_defect / oscillation_term
    } else {
        0.0
    };
    Ok(CoarseningReport {
        p,
        coarse_estimate,
        fine_norm,
        oscillation_term,
        coarsening_defect,
        constant,
        family_size: family.len(),
    })
}

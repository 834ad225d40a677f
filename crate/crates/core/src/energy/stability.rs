use nalgebra::{DMatrix, SymmetricEigen};

use super::EnergyFunctional;
use crate::error::{Error, Result};
use crate::lattice::{Deformation, NodalField};

#[derive(Clone, Copy, Debug)]
pub struct StabilityOptions {
    /// Step of the central difference applied to the forces.
    pub step: f64,
    /// Largest number of degrees of freedom accepted by the dense solve.
    pub max_dofs: usize,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            max_dofs: 2048,
        }
    }
}

/// `inf_u ⟨δ²E(y) u, u⟩ / ‖∇u‖²_{L²}` over periodic mean-zero displacements.
///
/// The Hessian is assembled column by column from central differences of the
/// forces and the generalised eigenproblem is solved densely.
pub fn stability_constant<const D: usize>(
    energy: &dyn EnergyFunctional<D>,
    y: &Deformation<D>,
    options: StabilityOptions,
) -> Result<f64> {
    let dom = *energy.domain();
    let n = D * dom.num_sites();
    if n > options.max_dofs {
        return Err(Error::Solver(format!(
            "{n} degrees of freedom exceed the dense limit {}",
            options.max_dofs
        )));
    }
    let mut hess = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut dir = NodalField::<D>::zeros(dom);
        dir.values_mut()[j / D][j % D] = 1.0;
        let z = Deformation::new(crate::lattice::Matrix::<D>::zeros(), dir);
        let fp = energy
            .first_variation(&y.add_scaled(&z, options.step))
            .nodal_vector();
        let fm = energy
            .first_variation(&y.add_scaled(&z, -options.step))
            .nodal_vector();
        for i in 0..n {
            hess[(i, j)] = (fp[i] - fm[i]) / (2.0 * options.step);
        }
    }
    let hess = (&hess + hess.transpose()) * 0.5;

    let gram = gradient_gram::<D>(&dom);
    let eig = SymmetricEigen::new(gram);
    let scale = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n)
        .filter(|&k| eig.eigenvalues[k] > 1e-10 * scale)
        .collect();
    if keep.len() != n - D {
        return Err(Error::Solver(
            "gradient Gram matrix has an unexpected kernel".into(),
        ));
    }
    let mut basis = DMatrix::<f64>::zeros(n, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        basis.set_column(c, &(eig.eigenvectors.column(k) / eig.eigenvalues[k].sqrt()));
    }
    let reduced = basis.transpose() * hess * &basis;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let vals = SymmetricEigen::new(reduced).eigenvalues;
    Ok(vals.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Matrix of `u ↦ ‖∇u‖²_{L²} = ε^d Σ_x Σ_j |D_{e_j} u(x)|²` on flattened fields.
pub fn gradient_gram<const D: usize>(dom: &crate::lattice::LatticeDomain<D>) -> DMatrix<f64> {
    let n = D * dom.num_sites();
    let mut g = DMatrix::<f64>::zeros(n, n);
    let w = dom.site_volume() / (dom.eps() * dom.eps());
    for (i, x) in dom.sites().enumerate() {
        for j in 0..D {
            let mut nb = x;
            nb[j] += 1;
            let k = dom.index(nb);
            for c in 0..D {
                let (a, b) = (D * i + c, D * k + c);
                g[(a, a)] += w;
                g[(b, b)] += w;
                g[(a, b)] -= w;
                g[(b, a)] -= w;
            }
        }
    }
    g
}

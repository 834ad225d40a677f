//! Negative-norm evaluation of force residuals and the consistency checks
//! built on it.

mod chain;
mod coarsening;
mod counterexample;

pub use chain::{
    dual_norm_1d, interval_coefficients, lp_eps, pairing_ratio_1d, qce_sharpness_1d,
    qnl_consistency_1d, QceSharpness, QnlConsistency,
};
pub use coarsening::{
    coarsening_check, interpolation_error, norm_inequality, CoarseningReport, InterpolationReport,
};
pub use counterexample::{Counterexample, CounterexampleKind, TestFunctionBound};

use std::sync::Arc;

use crate::corrector::Corrector;
use crate::energy::{AcEnergy, AtomisticEnergy, EnergyFunctional, ForceFunctional};
use crate::error::{Error, Result};
use crate::geometry::{
    lattice_gradient_norm, piecewise_lp_norm, AtomisticMesh, ElementId, Neighbourhoods,
    P0TensorField, PointwiseNorm,
};
use crate::lattice::{Deformation, LatticeDomain, Matrix, NodalField, Vector};
use crate::stress::sigma_atomistic;

/// `p' = p / (p - 1)`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "exponent p = {p} must lie in [1, ∞]"
        )))
    }
}

/// `∥Φ∥_{W^{-1,p}_ε}`, exact or bracketed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DualNorm {
    Exact(f64),
    Bounds { lower: f64, upper: f64 },
}

impl DualNorm {
    pub fn lower(&self) -> f64 {
        match *self {
            DualNorm::Exact(v) => v,
            DualNorm::Bounds { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            DualNorm::Exact(v) => v,
            DualNorm::Bounds { upper, .. } => upper,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, DualNorm::Exact(_))
    }
}

/// Rejects functionals whose nodal forces do not sum to zero; their dual
/// norm over periodic displacements is infinite.
pub fn check_balanced<const D: usize>(phi: &ForceFunctional<D>) -> Result<()> {
    let sum: Vector<D> = phi.nodal.values().iter().sum();
    let scale: f64 = phi.nodal.values().iter().map(|v| v.norm()).sum();
    if sum.norm() > 1e-9 * scale + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "nodal forces sum to {:.3e} (total magnitude {scale:.3e}); the dual norm is infinite",
            sum.norm()
        )));
    }
    Ok(())
}

fn neighbour_sum(dom: &LatticeDomain<2>, u: &[Vector<2>], out: &mut [Vector<2>]) {
    for (i, x) in dom.sites().enumerate() {
        let mut acc = u[i] * 4.0;
        for r in [[1, 0], [-1, 0], [0, 1], [0, -1]] {
            acc -= u[dom.index([x[0] + r[0], x[1] + r[1]])];
        }
        out[i] = acc;
    }
}

fn project_mean_zero(v: &mut [Vector<2>]) {
    let mean: Vector<2> = v.iter().sum::<Vector<2>>() / v.len() as f64;
    for a in v.iter_mut() {
        *a -= mean;
    }
}

fn dot(a: &[Vector<2>], b: &[Vector<2>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

/// Solution of `∫ ∇u : ∇v = ⟨Φ, v⟩` for all periodic `v`, with `u` of mean zero.
#[derive(Clone, Debug)]
pub struct GradientSolve {
    pub potential: NodalField<2>,
    pub iterations: usize,
    /// `max_v |∫ ∇u : ∇v - ⟨Φ, v⟩|` over nodal hats, relative to `max |Φ|`.
    pub residual: f64,
}

pub const SOLVER_TOLERANCE: f64 = 1e-12;

/// Conjugate gradients on the periodic P1 stiffness system.
pub fn solve_gradient_system(phi: &ForceFunctional<2>) -> Result<GradientSolve> {
    check_balanced(phi)?;
    let dom = *phi.domain();
    let n = dom.num_sites();
    let mut b: Vec<Vector<2>> = phi.nodal.values().to_vec();
    project_mean_zero(&mut b);
    let bnorm = dot(&b, &b).sqrt();
    let mut x = vec![Vector::<2>::zeros(); n];
    if bnorm == 0.0 {
        return Ok(GradientSolve {
            potential: NodalField::zeros(dom),
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![Vector::<2>::zeros(); n];
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    let max_iterations = 20 * n + 100;
    while rr.sqrt() > SOLVER_TOLERANCE * bnorm {
        if iterations == max_iterations {
            return Err(Error::Solver(format!(
                "conjugate gradients stalled at relative residual {:.3e}",
                rr.sqrt() / bnorm
            )));
        }
        neighbour_sum(&dom, &p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for k in 0..n {
            x[k] += p[k] * alpha;
            r[k] -= ap[k] * alpha;
        }
        project_mean_zero(&mut r);
        let next = dot(&r, &r);
        for k in 0..n {
            p[k] = r[k] + p[k] * (next / rr);
        }
        rr = next;
        iterations += 1;
    }
    project_mean_zero(&mut x);
    neighbour_sum(&dom, &x, &mut ap);
    let scale = phi.max_nodal();
    let residual = ap
        .iter()
        .zip(phi.nodal.values())
        .map(|(a, f)| (a - f).norm())
        .fold(0.0, f64::max)
        / scale;
    Ok(GradientSolve {
        potential: NodalField::from_values(dom, x)?,
        iterations,
        residual,
    })
}

fn displacement(u: NodalField<2>) -> Deformation<2> {
    Deformation::new(Matrix::<2>::zeros(), u)
}

/// `∥Φ∥_{W^{-1,p}_ε}` in two dimensions with Frobenius pointwise norms.
///
/// For `p = 2` the value is exact. Otherwise the result brackets the norm:
/// the upper bound is the smallest `∥σ∥_{L^p}` over stress representations of
/// `Φ` (the gradient of the `p = 2` solution, the supplied `representations`,
/// each also with its mean removed), and the lower bound is the best ratio
/// `⟨Φ, v⟩ / ∥∇v∥_{L^{p'}}` over the `p = 2` maximiser, nodal hats and edge
/// dipoles.
pub fn dual_norm_2d(
    phi: &ForceFunctional<2>,
    p: f64,
    representations: &[P0TensorField],
) -> Result<DualNorm> {
    check_exponent(p)?;
    let solve = solve_gradient_system(phi)?;
    let dom = *phi.domain();
    let mesh = AtomisticMesh::new(dom);
    let u = displacement(solve.potential);
    let pairing = phi.nodal.dot(u.displacement());
    if p == 2.0 {
        return Ok(DualNorm::Exact(pairing.max(0.0).sqrt()));
    }
    if phi.max_nodal() == 0.0 {
        return Ok(DualNorm::Exact(0.0));
    }
    let q = conjugate_exponent(p);
    let area = mesh.element_area();

    let gradient = P0TensorField::gradient_of(mesh, &u);
    let mut upper = f64::INFINITY;
    for sigma in std::iter::once(&gradient).chain(representations) {
        let mean = sigma.mean();
        let centred = sigma.map(|m| m - mean);
        for s in [sigma, &centred] {
            upper = upper.min(piecewise_lp_norm(
                s.values().iter().map(|m| (area, m)),
                p,
                PointwiseNorm::Frobenius,
            ));
        }
    }

    let mut lower = pairing / lattice_gradient_norm(&mesh, &u, q, PointwiseNorm::Frobenius);
    let shape_norm = |sites: &[([i64; 2], f64)]| {
        let mut v = NodalField::zeros(dom);
        for (s, w) in sites {
            v.values_mut()[dom.index(*s)][0] += w;
        }
        lattice_gradient_norm(&mesh, &displacement(v), q, PointwiseNorm::Frobenius)
    };
    let f = phi.nodal.values();
    let hat = shape_norm(&[([0, 0], 1.0)]);
    lower = lower.max(f.iter().map(|v| v.amax()).fold(0.0, f64::max) / hat);
    for r in [[1, 0], [0, 1], [1, 1], [1, -1]] {
        let dipole = shape_norm(&[(r, 1.0), ([0, 0], -1.0)]);
        let best = dom
            .sites()
            .map(|x| (f[dom.index([x[0] + r[0], x[1] + r[1]])] - f[dom.index(x)]).amax())
            .fold(0.0, f64::max);
        lower = lower.max(best / dipole);
    }
    Ok(DualNorm::Bounds {
        lower: lower.min(upper),
        upper,
    })
}

/// Dual norm of `δE(y) - δE_ref(y)`.
pub fn model_error(
    energy: &dyn EnergyFunctional<2>,
    reference: &dyn EnergyFunctional<2>,
    y: &Deformation<2>,
    p: f64,
    representations: &[P0TensorField],
) -> Result<DualNorm> {
    let phi = energy
        .first_variation(y)
        .difference(&reference.first_variation(y));
    dual_norm_2d(&phi, p, representations)
}

/// Outcome of certifying a model error against an element-wise estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated,
    /// The bracket straddles the bound.
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct ConsistencyReport {
    pub p: f64,
    pub lhs: DualNorm,
    /// `ε {Σ_T |T| [M_T osc(∇y; ω_T)]^p}^{1/p}`.
    pub rhs: f64,
    /// Elements where `|R(y;T)|` exceeds `ε M_T osc(∇y; ω_T)`.
    pub violations: Vec<ElementId>,
    /// Largest `|R(y;T)| / (ε M_T osc(∇y; ω_T))` over elements with a positive bound.
    pub worst_ratio: f64,
}

impl ConsistencyReport {
    pub fn verdict(&self) -> Verdict {
        let slack = |v: f64| v <= self.rhs * (1.0 + 1e-10) + 1e-12;
        if !self.violations.is_empty() || !slack(self.lhs.lower()) {
            Verdict::Violated
        } else if slack(self.lhs.upper()) {
            Verdict::Holds
        } else {
            Verdict::Inconclusive
        }
    }
}

/// The first-order estimate for a coupled energy whose interface admits a
/// corrector: the modelling error against the atomistic energy, the global
/// bound and the element-wise check.
pub fn certify_first_order(
    energy: &AcEnergy,
    y: &Deformation<2>,
    p: f64,
) -> Result<ConsistencyReport> {
    check_exponent(p)?;
    let corrector = Corrector::new(energy)?;
    let mesh = *energy.geometry().mesh();
    let neighbourhoods = Neighbourhoods::new(mesh, energy.potential().stencil())?;
    let (_, field) = corrector.stress_error(&neighbourhoods, y)?;
    let atomistic = AtomisticEnergy::new(*mesh.domain(), Arc::clone(energy.potential()));
    let raw = &crate::stress::sigma_ac(energy, y)
        - &sigma_atomistic(energy.potential().as_ref(), mesh, y);
    let lhs = model_error(energy, &atomistic, y, p, &[field.error.clone(), raw])?;
    let area = mesh.element_area();
    let bounds = (0..mesh.num_elements()).map(|t| field.bound(t));
    let rhs = if p.is_infinite() {
        bounds.fold(0.0, f64::max)
    } else {
        bounds.map(|b| area * b.powf(p)).sum::<f64>().powf(1.0 / p)
    };
    Ok(ConsistencyReport {
        p,
        lhs,
        rhs,
        violations: field.violations(),
        worst_ratio: field.worst_ratio(),
    })
}

//! Dual norms and consistency estimates for the one-dimensional chain.

use super::{check_balanced, check_exponent, conjugate_exponent};
use crate::energy::{
    backward_differences, ChainAtomistic, ChainQce, ChainQnl, EnergyFunctional, ForceFunctional,
};
use crate::error::{Error, Result};
use crate::lattice::{Deformation, LatticeDomain, Matrix, NodalField, Vector};
use crate::patch_test::ghost_force;
use crate::potential::ChainModel;

/// `(ε Σ |v_n|^p)^{1/p}`, or `max |v_n|` for `p = ∞`.
pub fn lp_eps(values: impl IntoIterator<Item = f64>, eps: f64, p: f64) -> f64 {
    if p.is_infinite() {
        values.into_iter().map(f64::abs).fold(0.0, f64::max)
    } else {
        (eps * values.into_iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
    }
}

/// Coefficients `c_n` with `⟨Φ, v⟩ = ε Σ_n c_n v'_n` for periodic `v`, in
/// domain order and normalised by `c_{-N+1} = 0`.
pub fn interval_coefficients(phi: &ForceFunctional<1>) -> Result<Vec<f64>> {
    check_balanced(phi)?;
    let dom = *phi.domain();
    let n = dom.n() as i64;
    let mut c = vec![0.0; dom.num_sites()];
    for s in (1 - n)..n {
        c[dom.index([s + 1])] = c[dom.index([s])] - phi.nodal.at([s])[0];
    }
    Ok(c)
}

fn distance_to_constants(c: &[f64], eps: f64, p: f64) -> f64 {
    let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let at = |k: f64| lp_eps(c.iter().map(|v| v - k), eps, p);
    if p.is_infinite() {
        return 0.5 * (hi - lo);
    }
    if p == 2.0 {
        return at(c.iter().sum::<f64>() / c.len() as f64);
    }
    if p == 1.0 {
        let mut sorted = c.to_vec();
        sorted.sort_by(f64::total_cmp);
        return at(sorted[sorted.len() / 2]);
    }
    // Golden-section search on the convex map k ↦ ∥c - k∥.
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    while b - a > 1e-14 * (1.0 + hi.abs().max(lo.abs())) {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if at(x1) <= at(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    at(0.5 * (a + b))
}

/// Exact `∥Φ∥_{W^{-1,p}_ε}` for a chain functional:
/// `min_k ∥c - k∥_{ℓ^p_ε}` with `c` from [`interval_coefficients`].
pub fn dual_norm_1d(phi: &ForceFunctional<1>, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let c = interval_coefficients(phi)?;
    Ok(distance_to_constants(&c, phi.domain().eps(), p))
}

/// `⟨Φ, v⟩ / ∥v'∥_{ℓ^{p'}_ε}` for the periodic `v` with the given backward
/// differences (in domain order; they must sum to zero).
pub fn pairing_ratio_1d(phi: &ForceFunctional<1>, derivative: &[f64], p: f64) -> Result<f64> {
    let dom = *phi.domain();
    let eps = dom.eps();
    let total: f64 = derivative.iter().sum();
    let scale: f64 = derivative.iter().map(|v| v.abs()).sum();
    if derivative.len() != dom.num_sites() || total.abs() > 1e-12 * scale.max(1.0) {
        return Err(Error::InvalidArgument(
            "test derivative is not that of a periodic displacement".into(),
        ));
    }
    let n = dom.n() as i64;
    let mut v = NodalField::<1>::zeros(dom);
    for s in (2 - n)..=n {
        let prev = v.at([s - 1])[0];
        v.values_mut()[dom.index([s])] = Vector::<1>::new(prev + eps * derivative[dom.index([s])]);
    }
    let pairing = phi.nodal.dot(&v);
    Ok(pairing / lp_eps(derivative.iter().copied(), eps, conjugate_exponent(p)))
}

/// Terms of the quasi-nonlocal consistency estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QnlConsistency {
    pub p: f64,
    /// `∥δE_qnl(y) - δE_a(y)∥_{W^{-1,p}_ε}`.
    pub lhs: f64,
    /// `ε m₂' ∥y''∥` on the interface rows `{-K, K}`.
    pub interface_term: f64,
    /// `ε² m₂' ∥y'''∥` over the continuum rows.
    pub third_derivative_term: f64,
    /// `ε² m₂'' ∥y''∥²_{ℓ^{2p}_ε}` over the continuum rows.
    pub curvature_term: f64,
}

impl QnlConsistency {
    pub fn rhs(&self) -> f64 {
        self.interface_term + self.third_derivative_term + self.curvature_term
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs() * (1.0 + 1e-10) + 1e-13
    }
}

/// Compares the quasi-nonlocal modelling error with its three-term bound.
pub fn qnl_consistency_1d(
    chain: &ChainModel,
    y: &Deformation<1>,
    k: usize,
    p: f64,
) -> Result<QnlConsistency> {
    check_exponent(p)?;
    let dom = *y.domain();
    let qnl = ChainQnl::new(chain.clone(), dom, k)?;
    let atomistic = ChainAtomistic::new(chain.clone(), dom);
    let phi = qnl
        .first_variation(y)
        .difference(&atomistic.first_variation(y));
    let lhs = dual_norm_1d(&phi, p)?;

    let eps = dom.eps();
    let d = backward_differences(y);
    let at = |n: i64| d[dom.index([n])];
    let second = |n: i64| (at(n + 1) - at(n)) / eps;
    let third = |n: i64| (at(n + 1) - 2.0 * at(n) + at(n - 1)) / (eps * eps);
    let n = dom.n() as i64;
    let k = k as i64;
    let m1 = chain.first_lipschitz(2);
    let m2 = chain.second_lipschitz(2);
    let outer: Vec<i64> = ((1 - n)..=(-k - 1)).chain((k + 2)..=n).collect();
    let continuum: Vec<i64> = ((1 - n)..=n).filter(|s| s.abs() > k).collect();
    let interface_term = eps * m1 * lp_eps([second(-k), second(k)], eps, p);
    let third_derivative_term = eps * eps * m1 * lp_eps(outer.iter().map(|&s| third(s)), eps, p);
    let curvature_term =
        eps * eps * m2 * lp_eps(continuum.iter().map(|&s| second(s)), eps, 2.0 * p).powi(2);
    Ok(QnlConsistency {
        p,
        lhs,
        interface_term,
        third_derivative_term,
        curvature_term,
    })
}

/// Ghost-force norm of the energy-based chain coupling at `y_A` and its
/// explicit lower bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QceSharpness {
    pub p: f64,
    /// `∥δE_qce(y_A)∥_{W^{-1,p}_ε}`.
    pub ghost_norm: f64,
    /// `2 · 4^{-1/p'} ε^{1/p} |φ₂'(2A)|`.
    pub lower_bound: f64,
    /// `⟨δE_qce(y_A), u⟩ / ∥u'∥_{ℓ^{p'}_ε}` for the interface test function.
    pub test_value: f64,
}

/// The interface test function: `u'_n = ±s (4ε)^{-1/p'}` at
/// `n = -K-1, K+2` (plus) and `n = -K+1, K` (minus), with `s` the sign of
/// `φ₂'(2A)`.
pub fn qce_test_derivative(
    chain: &ChainModel,
    domain: LatticeDomain<1>,
    a: f64,
    k: usize,
    p: f64,
) -> Vec<f64> {
    let eps = domain.eps();
    let s = chain.dphi(2, 2.0 * a).signum();
    let amp = (4.0 * eps).powf(-1.0 / conjugate_exponent(p));
    let k = k as i64;
    let mut out = vec![0.0; domain.num_sites()];
    for (n, sign) in [(-k - 1, 1.0), (-k + 1, -1.0), (k, -1.0), (k + 2, 1.0)] {
        out[domain.index([n])] += sign * s * amp;
    }
    out
}

pub fn qce_sharpness_1d(
    chain: &ChainModel,
    a: f64,
    k: usize,
    n: usize,
    p: f64,
) -> Result<QceSharpness> {
    check_exponent(p)?;
    let dom = LatticeDomain::<1>::new(n)?;
    let qce = ChainQce::new(chain.clone(), dom, k)?;
    let phi = ghost_force(&qce, &Matrix::<1>::new(a));
    let ghost_norm = dual_norm_1d(&phi, p)?;
    let eps = dom.eps();
    let lower_bound = 2.0
        * 4f64.powf(-1.0 / conjugate_exponent(p))
        * eps.powf(1.0 / p)
        * chain.dphi(2, 2.0 * a).abs();
    let test_value = pairing_ratio_1d(&phi, &qce_test_derivative(chain, dom, a, k, p), p)?;
    Ok(QceSharpness {
        p,
        ghost_norm,
        lower_bound,
        test_value,
    })
}

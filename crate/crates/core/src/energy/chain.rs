//! One-dimensional chain energies written in terms of the backward
//! differences `y'_n = (y_n - y_{n-1}) / ε`.

use super::{EnergyFunctional, ForceFunctional};
use crate::error::{Error, Result};
use crate::lattice::{Deformation, LatticeDomain, Matrix, Vector};
use crate::potential::ChainModel;

/// `y'_n` for every site index `n` (in domain order).
pub fn backward_differences(y: &Deformation<1>) -> Vec<f64> {
    y.domain()
        .sites()
        .map(|s| y.difference([s[0] - 1], [1])[0])
        .collect()
}

/// Builds `δE` from `c_n = ε⁻¹ ∂E/∂y'_n`, so that `⟨δE, z⟩ = ε Σ_n c_n z'_n`.
pub fn force_from_interval_stress(domain: LatticeDomain<1>, c: &[f64]) -> ForceFunctional<1> {
    let mut phi = ForceFunctional::zeros(domain);
    let mut total = 0.0;
    for (i, s) in domain.sites().enumerate() {
        phi.nodal.values_mut()[i] += Vector::<1>::new(c[i]);
        phi.nodal.values_mut()[domain.index([s[0] - 1])] -= Vector::<1>::new(c[i]);
        total += c[i];
    }
    phi.macro_stress = Matrix::<1>::new(domain.eps() * total / domain.volume());
    phi
}

struct Periodic<'a> {
    domain: LatticeDomain<1>,
    values: &'a [f64],
}

impl Periodic<'_> {
    fn at(&self, n: i64) -> f64 {
        self.values[self.domain.index([n])]
    }
}

/// The quasi-nonlocal coupling with atomistic region `{-K, ..., K}`.
#[derive(Clone, Debug)]
pub struct ChainQnl {
    chain: ChainModel,
    domain: LatticeDomain<1>,
    k: i64,
}

impl ChainQnl {
    pub fn new(chain: ChainModel, domain: LatticeDomain<1>, k: usize) -> Result<Self> {
        if k + 3 > domain.n() {
            return Err(Error::InvalidArgument(format!(
                "K = {k} is too large for N = {}",
                domain.n()
            )));
        }
        Ok(Self {
            chain,
            domain,
            k: k as i64,
        })
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn chain(&self) -> &ChainModel {
        &self.chain
    }

    pub fn is_atomistic(&self, n: i64) -> bool {
        let n = self.domain.wrap([n])[0];
        (-self.k..=self.k).contains(&n)
    }

    /// `c_n = ε⁻¹ ∂E/∂y'_n`.
    pub fn interval_stress(&self, y: &Deformation<1>) -> Vec<f64> {
        let d = backward_differences(y);
        let p = Periodic {
            domain: self.domain,
            values: &d,
        };
        let ch = &self.chain;
        self.domain
            .sites()
            .map(|s| {
                let n = s[0];
                let mut c = ch.dphi(1, p.at(n));
                // Second-neighbour bond centred at n (uses y'_n, y'_{n+1}) and at n-1.
                for centre in [n, n - 1] {
                    if self.is_atomistic(centre) {
                        c += ch.dphi(2, p.at(centre) + p.at(centre + 1));
                    } else {
                        c += 0.5 * 2.0 * ch.dphi(2, 2.0 * p.at(n));
                    }
                }
                c
            })
            .collect()
    }
}

impl EnergyFunctional<1> for ChainQnl {
    fn domain(&self) -> &LatticeDomain<1> {
        &self.domain
    }

    fn energy(&self, y: &Deformation<1>) -> f64 {
        let d = backward_differences(y);
        let p = Periodic {
            domain: self.domain,
            values: &d,
        };
        let ch = &self.chain;
        let total: f64 = self
            .domain
            .sites()
            .map(|s| {
                let n = s[0];
                let bond = if self.is_atomistic(n) {
                    ch.phi(2, p.at(n) + p.at(n + 1))
                } else {
                    0.5 * (ch.phi(2, 2.0 * p.at(n)) + ch.phi(2, 2.0 * p.at(n + 1)))
                };
                ch.phi(1, p.at(n)) + bond
            })
            .sum();
        self.domain.eps() * total
    }

    fn first_variation(&self, y: &Deformation<1>) -> ForceFunctional<1> {
        force_from_interval_stress(self.domain, &self.interval_stress(y))
    }
}

/// Site energies with generalised-coordination coefficients: site `n` uses
/// `g̃_{±2} = θ_± g_{±2} + (2 - 2θ_±) g_{±1}`. `θ = 1` is atomistic and
/// `θ = 0` the local (Cauchy–Born) site energy.
#[derive(Clone, Debug)]
pub struct ChainGcc {
    chain: ChainModel,
    domain: LatticeDomain<1>,
    forward: Vec<f64>,
    backward: Vec<f64>,
}

impl ChainGcc {
    pub fn new(
        chain: ChainModel,
        domain: LatticeDomain<1>,
        forward: Vec<f64>,
        backward: Vec<f64>,
    ) -> Result<Self> {
        if forward.len() != domain.num_sites() || backward.len() != domain.num_sites() {
            return Err(Error::InvalidArgument(
                "one coefficient pair per site is required".into(),
            ));
        }
        Ok(Self {
            chain,
            domain,
            forward,
            backward,
        })
    }

    pub fn coefficients(&self) -> (&[f64], &[f64]) {
        (&self.forward, &self.backward)
    }

    fn site_terms(&self, d: &Periodic, n: i64) -> (f64, f64, f64, f64) {
        let i = self.domain.index([n]);
        let (tp, tm) = (self.forward[i], self.backward[i]);
        let hp = tp * (d.at(n + 1) + d.at(n + 2)) + (2.0 - 2.0 * tp) * d.at(n + 1);
        let hm = -(tm * (d.at(n) + d.at(n - 1)) + (2.0 - 2.0 * tm) * d.at(n));
        (tp, tm, hp, hm)
    }
}

impl EnergyFunctional<1> for ChainGcc {
    fn domain(&self) -> &LatticeDomain<1> {
        &self.domain
    }

    fn energy(&self, y: &Deformation<1>) -> f64 {
        let d = backward_differences(y);
        let p = Periodic {
            domain: self.domain,
            values: &d,
        };
        let ch = &self.chain;
        let total: f64 = self
            .domain
            .sites()
            .map(|s| {
                let n = s[0];
                let (_, _, hp, hm) = self.site_terms(&p, n);
                0.5 * (ch.phi(1, p.at(n + 1)) + ch.phi(1, -p.at(n)) + ch.phi(2, hp) + ch.phi(2, hm))
            })
            .sum();
        self.domain.eps() * total
    }

    fn first_variation(&self, y: &Deformation<1>) -> ForceFunctional<1> {
        let d = backward_differences(y);
        let p = Periodic {
            domain: self.domain,
            values: &d,
        };
        let ch = &self.chain;
        let mut c = vec![0.0; self.domain.num_sites()];
        let dom = self.domain;
        let mut add = |n: i64, v: f64| c[dom.index([n])] += v;
        for s in self.domain.sites() {
            let n = s[0];
            let (tp, tm, hp, hm) = self.site_terms(&p, n);
            let fp = 0.5 * ch.dphi(2, hp);
            let fm = 0.5 * ch.dphi(2, hm);
            add(n + 1, 0.5 * ch.dphi(1, p.at(n + 1)) + fp * (2.0 - tp));
            add(n + 2, fp * tp);
            add(n, -0.5 * ch.dphi(1, -p.at(n)) - fm * (2.0 - tm));
            add(n - 1, -fm * tm);
        }
        force_from_interval_stress(self.domain, &c)
    }
}

/// The energy-based coupling: atomistic site energies on `{-K, ..., K}`,
/// local site energies elsewhere.
#[derive(Clone, Debug)]
pub struct ChainQce {
    inner: ChainGcc,
    k: i64,
}

impl ChainQce {
    pub fn new(chain: ChainModel, domain: LatticeDomain<1>, k: usize) -> Result<Self> {
        if k + 3 > domain.n() {
            return Err(Error::InvalidArgument(format!(
                "K = {k} is too large for N = {}",
                domain.n()
            )));
        }
        let theta: Vec<f64> = domain
            .sites()
            .map(|s| if s[0].abs() <= k as i64 { 1.0 } else { 0.0 })
            .collect();
        let inner = ChainGcc::new(chain, domain, theta.clone(), theta)?;
        Ok(Self { inner, k: k as i64 })
    }

    pub fn k(&self) -> i64 {
        self.k
    }
}

impl EnergyFunctional<1> for ChainQce {
    fn domain(&self) -> &LatticeDomain<1> {
        self.inner.domain()
    }

    fn energy(&self, y: &Deformation<1>) -> f64 {
        self.inner.energy(y)
    }

    fn first_variation(&self, y: &Deformation<1>) -> ForceFunctional<1> {
        self.inner.first_variation(y)
    }
}

/// The atomistic chain energy written out bond by bond; used to cross-check
/// the generic site-energy implementation.
#[derive(Clone, Debug)]
pub struct ChainAtomistic {
    chain: ChainModel,
    domain: LatticeDomain<1>,
}

impl ChainAtomistic {
    pub fn new(chain: ChainModel, domain: LatticeDomain<1>) -> Self {
        Self { chain, domain }
    }

    pub fn interval_stress(&self, y: &Deformation<1>) -> Vec<f64> {
        let d = backward_differences(y);
        let p = Periodic {
            domain: self.domain,
            values: &d,
        };
        let ch = &self.chain;
        self.domain
            .sites()
            .map(|s| {
                let n = s[0];
                ch.dphi(1, p.at(n))
                    + ch.dphi(2, p.at(n) + p.at(n + 1))
                    + ch.dphi(2, p.at(n - 1) + p.at(n))
            })
            .collect()
    }
}

impl EnergyFunctional<1> for ChainAtomistic {
    fn domain(&self) -> &LatticeDomain<1> {
        &self.domain
    }

    fn energy(&self, y: &Deformation<1>) -> f64 {
        let d = backward_differences(y);
        let p = Periodic {
            domain: self.domain,
            values: &d,
        };
        let total: f64 = self
            .domain
            .sites()
            .map(|s| {
                let n = s[0];
                self.chain.phi(1, p.at(n)) + self.chain.phi(2, p.at(n) + p.at(n + 1))
            })
            .sum();
        self.domain.eps() * total
    }

    fn first_variation(&self, y: &Deformation<1>) -> ForceFunctional<1> {
        force_from_interval_stress(self.domain, &self.interval_stress(y))
    }
}

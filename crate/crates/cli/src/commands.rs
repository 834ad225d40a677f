//! The experiment behind each subcommand.

use std::sync::Arc;

use aclab::consistency::{
    certify_first_order, coarsening_check, dual_norm_2d, model_error, qce_sharpness_1d, qnl_consistency_1d,
    Counterexample, CounterexampleKind, DualNorm, Verdict as Certified,
};
use aclab::energy::{AcEnergy, AtomisticEnergy, BondSplitInterface, EnergyFunctional, QceEnergy};
use aclab::geometry::mesh::bond_density_sum;
use aclab::geometry::region::rational_to_f64;
use aclab::geometry::{AtomisticMesh, CoarseMesh, CouplingGeometry, ElementKind, Neighbourhoods, RegionDecomposition};
use aclab::lattice::{Deformation, LatticeDomain, Matrix};
use aclab::patch_test::{fit_gcc_parameters, ghost_force, patch_test_verdict, SquareGccTemplate};
use aclab::potential::{PairPotential, SitePotential};
use aclab::sampling::{self, SmoothField};
use aclab::stress::{atomistic_lipschitz_check, representation_residual, sigma_ac, sigma_atomistic};
use clap::ValueEnum;
use log::info;
use rand::Rng;

use crate::config::{Coupling, ExperimentConfig};
use crate::error::CliError;
use crate::report::{Report, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    PatchTest,
    Stress,
    #[value(name = "consistency-2d")]
    Consistency2d,
    #[value(name = "consistency-1d")]
    Consistency1d,
    Counterexample,
    BondDensity,
    Coarsen,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::PatchTest => "patch-test",
            Command::Stress => "stress",
            Command::Consistency2d => "consistency-2d",
            Command::Consistency1d => "consistency-1d",
            Command::Counterexample => "counterexample",
            Command::BondDensity => "bond-density",
            Command::Coarsen => "coarsen",
        }
    }

    pub fn dimension(self) -> u8 {
        match self {
            Command::Consistency1d => 1,
            _ => 2,
        }
    }
}

/// Validates the configuration and builds everything the experiment needs
/// before running it, so configuration problems never produce outputs.
pub fn run(command: Command, config: &ExperimentConfig) -> Result<Report, CliError> {
    config.validate(command.dimension())?;
    let mut report = Report::new(command.name(), config.hash(), config.seed);
    match command {
        Command::PatchTest => patch_test(config, &mut report)?,
        Command::Stress => stress(config, &mut report)?,
        Command::Consistency2d => consistency_2d(config, &mut report)?,
        Command::Consistency1d => consistency_1d(config, &mut report)?,
        Command::Counterexample => counterexample(config, &mut report)?,
        Command::BondDensity => bond_density(config, &mut report)?,
        Command::Coarsen => coarsen(config, &mut report)?,
    }
    Ok(report)
}

fn fmt(v: f64) -> String {
    v.to_string()
}

struct Setup {
    domain: LatticeDomain<2>,
    potential: PairPotential<2>,
    geometry: Arc<CouplingGeometry>,
}

impl Setup {
    fn new(config: &ExperimentConfig) -> Result<Self, CliError> {
        let domain = LatticeDomain::<2>::new(config.n).map_err(CliError::setup)?;
        let potential = config.potential.build()?;
        let mesh = AtomisticMesh::new(domain);
        let decomposition = RegionDecomposition::block(mesh, config.region.half_width, config.region.interface_width)
            .map_err(CliError::setup)?;
        let geometry =
            Arc::new(CouplingGeometry::new(decomposition, potential.stencil().clone()).map_err(CliError::setup)?);
        Ok(Self { domain, potential, geometry })
    }

    fn shared_potential(&self) -> Arc<dyn SitePotential<2>> {
        Arc::new(self.potential.clone())
    }

    /// The coupled energy for interface couplings.
    fn ac_energy(&self, config: &ExperimentConfig) -> Result<AcEnergy, CliError> {
        let interface = match config.coupling {
            Coupling::BondSplit => BondSplitInterface::new(self.potential.clone(), &self.geometry),
            Coupling::Gcc => {
                let template = SquareGccTemplate::ring(self.potential.clone(), self.geometry.clone())
                    .map_err(CliError::setup)?;
                let fit = fit_gcc_parameters(&template, &config.strain_matrices())?;
                info!("fitted {} blending coefficients, ghost-force residual {:.3e}", fit.parameters.len(), fit.residual);
                BondSplitInterface::with_gcc_sites(self.potential.clone(), &self.geometry, template.gcc_sites(&fit.parameters))
            }
            other => {
                return Err(CliError::Config(format!(
                    "coupling {other:?} has no interface functional; use bond-split or gcc"
                )))
            }
        }
        .map_err(CliError::setup)?;
        AcEnergy::new(self.shared_potential(), self.geometry.clone(), Arc::new(interface)).map_err(CliError::setup)
    }

    fn energy(&self, config: &ExperimentConfig) -> Result<Box<dyn EnergyFunctional<2>>, CliError> {
        Ok(match config.coupling {
            Coupling::Atomistic => Box::new(AtomisticEnergy::new(self.domain, self.shared_potential())),
            Coupling::Qce => Box::new(QceEnergy::block(
                self.shared_potential(),
                AtomisticMesh::new(self.domain),
                config.region.half_width,
            )),
            _ => Box::new(self.ac_energy(config)?),
        })
    }

    fn smooth_states(&self, config: &ExperimentConfig) -> Vec<Deformation<2>> {
        let mut rng = sampling::rng(config.seed);
        (0..config.trials)
            .map(|_| SmoothField::<2>::random(&mut rng, 0.05, config.sweep.amplitude, 3).sample(self.domain))
            .collect()
    }
}

fn strain_label(f: &Matrix<2>) -> String {
    format!("F=[{},{};{},{}]", f[(0, 0)], f[(0, 1)], f[(1, 0)], f[(1, 1)])
}

fn patch_test(config: &ExperimentConfig, report: &mut Report) -> Result<(), CliError> {
    let setup = Setup::new(config)?;
    let energy = setup.energy(config)?;
    let strains = config.strain_matrices();
    let result = patch_test_verdict(energy.as_ref(), setup.shared_potential(), &strains)?;
    for (f, check) in strains.iter().zip(&result.checks) {
        let worst = check.ghost_force.max(check.energy_residual).max(check.stress_residual);
        report.row(strain_label(f), config.n, worst, check.tolerance, Verdict::from_bool(check.passed));
        report.table("patch_test", &["strain", "ghost_force", "energy_residual", "stress_residual", "tolerance"]).push(
            vec![
                strain_label(f),
                fmt(check.ghost_force),
                fmt(check.energy_residual),
                fmt(check.stress_residual),
                fmt(check.tolerance),
            ],
        );
    }
    report.measure("max_ghost_force", result.max_ghost_force());
    report.measure("patch_test_consistent", result.patch_test_consistent());
    report.measure("energy_consistent", result.energy_consistent());
    Ok(())
}

fn stress(config: &ExperimentConfig, report: &mut Report) -> Result<(), CliError> {
    let setup = Setup::new(config)?;
    let energy = setup.ac_energy(config)?;
    let atomistic = AtomisticEnergy::new(setup.domain, setup.shared_potential());
    let mesh = AtomisticMesh::new(setup.domain);
    let neighbourhoods = Neighbourhoods::new(mesh, setup.potential.stencil()).map_err(CliError::setup)?;
    let decomposition = setup.geometry.decomposition();
    for (trial, y) in setup.smooth_states(config).iter().enumerate() {
        let sa = sigma_atomistic(&setup.potential, mesh, y);
        let sac = sigma_ac(&energy, y);
        let phi_a = atomistic.first_variation(y);
        let phi_ac = energy.first_variation(y);
        for (case, phi, sigma) in [("sigma_a", &phi_a, &sa), ("sigma_ac", &phi_ac, &sac)] {
            let scale = 1e-10 * (1.0 + phi.max_nodal());
            let residual = representation_residual(phi, sigma);
            report.row(case, config.n, residual, scale, Verdict::from_bool(residual <= scale)).trial = Some(trial);
        }
        let lipschitz = atomistic_lipschitz_check(&setup.potential, &neighbourhoods, y)?;
        let worst = lipschitz.worst_ratio();
        report.row("sigma_a-lipschitz", config.n, worst, 1.0, Verdict::from_bool(lipschitz.holds())).trial = Some(trial);
        if trial == 0 {
            let table = report.table(
                "stress_trial0",
                &["element", "cell_x", "cell_y", "kind", "region", "sigma_a", "sigma_ac"],
            );
            for (id, e) in mesh.elements() {
                let entries = |m: Matrix<2>| m.transpose().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
                table.push(vec![
                    id.to_string(),
                    e.cell[0].to_string(),
                    e.cell[1].to_string(),
                    format!("{:?}", e.kind).to_lowercase(),
                    decomposition.label(id).code().to_string(),
                    entries(sa.at(id)),
                    entries(sac.at(id)),
                ]);
            }
        }
    }
    Ok(())
}

fn dual_norm_columns(d: &DualNorm) -> (f64, f64) {
    (d.lower(), d.upper())
}

fn consistency_2d(config: &ExperimentConfig, report: &mut Report) -> Result<(), CliError> {
    let setup = Setup::new(config)?;
    let states = setup.smooth_states(config);
    let exponents = config.exponents();
    if config.coupling == Coupling::Qce || config.coupling == Coupling::Atomistic {
        // No first-order bound applies; report the modelling error itself.
        let energy = setup.energy(config)?;
        let reference = AtomisticEnergy::new(setup.domain, setup.shared_potential());
        for (trial, y) in states.iter().enumerate() {
            for &p in &exponents {
                let err = model_error(energy.as_ref(), &reference, y, p, &[])?;
                let row = report.row("model-error", config.n, err.upper(), 0.0, Verdict::Measured);
                row.trial = Some(trial);
                row.p = Some(p);
            }
        }
        return Ok(());
    }
    let energy = setup.ac_energy(config)?;
    let mut worst: f64 = 0.0;
    for (trial, y) in states.iter().enumerate() {
        for &p in &exponents {
            let c = certify_first_order(&energy, y, p)?;
            worst = worst.max(c.worst_ratio);
            let verdict = match c.verdict() {
                Certified::Holds => Verdict::Pass,
                Certified::Violated => Verdict::Fail,
                Certified::Inconclusive => Verdict::Inconclusive,
            };
            let (lo, hi) = dual_norm_columns(&c.lhs);
            let row = report.row("first-order", config.n, lo, c.rhs, verdict);
            row.trial = Some(trial);
            row.p = Some(p);
            report
                .table("certification", &["trial", "p", "lhs_lower", "lhs_upper", "rhs", "violations", "worst_ratio"])
                .push(vec![
                    trial.to_string(),
                    fmt(p),
                    fmt(lo),
                    fmt(hi),
                    fmt(c.rhs),
                    c.violations.len().to_string(),
                    fmt(c.worst_ratio),
                ]);
        }
    }
    report.measure("worst_element_ratio", worst);
    Ok(())
}

fn consistency_1d(config: &ExperimentConfig, report: &mut Report) -> Result<(), CliError> {
    let chain = config.chain.build();
    let sizes = if config.sweep.sizes.is_empty() { vec![32, 64, 128, 256] } else { config.sweep.sizes.clone() };
    let field = SmoothField::<1>::random(&mut sampling::rng(config.seed), 0.05, config.sweep.amplitude, 3);
    let exponents = config.exponents();
    for &n in &sizes {
        let domain = LatticeDomain::<1>::new(n).map_err(CliError::setup)?;
        let k = n / 4;
        let y = field.sample(domain);
        for &p in &exponents {
            let q = qnl_consistency_1d(&chain, &y, k, p)?;
            let row = report.row("qnl", n, q.lhs, q.rhs(), Verdict::from_bool(q.holds()));
            row.k = Some(k as i64);
            row.p = Some(p);
            report
                .table("qnl_terms", &["n", "k", "p", "lhs", "interface", "third_derivative", "curvature"])
                .push(vec![
                    n.to_string(),
                    k.to_string(),
                    fmt(p),
                    fmt(q.lhs),
                    fmt(q.interface_term),
                    fmt(q.third_derivative_term),
                    fmt(q.curvature_term),
                ]);
        }
        for &a in &config.sweep.stretches {
            for &p in &exponents {
                let s = qce_sharpness_1d(&chain, a, k, n, p)?;
                let r = if s.lower_bound > 0.0 { s.ghost_norm / s.lower_bound } else { 0.0 };
                // The bound is a lower bound for every p; for p = 2 it is
                // also sharp up to a factor 2.
                let ok = s.ghost_norm >= s.lower_bound * (1.0 - 1e-10) && (p != 2.0 || r <= 2.0);
                let row = report.row(format!("qce A={a}"), n, s.ghost_norm, s.lower_bound, Verdict::from_bool(ok));
                row.k = Some(k as i64);
                row.p = Some(p);
                report
                    .table("qce_sharpness", &["n", "k", "a", "p", "ghost_norm", "lower_bound", "test_value"])
                    .push(vec![
                        n.to_string(),
                        k.to_string(),
                        fmt(a),
                        fmt(p),
                        fmt(s.ghost_norm),
                        fmt(s.lower_bound),
                        fmt(s.test_value),
                    ]);
            }
        }
    }
    Ok(())
}

fn counterexample(config: &ExperimentConfig, report: &mut Report) -> Result<(), CliError> {
    let potential = config.potential.build()?;
    let sizes = if config.sweep.sizes.is_empty() { vec![8, 16, 32] } else { config.sweep.sizes.clone() };
    let strains = config.strain_matrices();
    for &n in &sizes {
        let domain = LatticeDomain::<2>::new(n).map_err(CliError::setup)?;
        let eps = domain.eps();
        let betas = if config.sweep.betas.is_empty() { vec![1.0 / eps] } else { config.sweep.betas.clone() };
        let mut kinds = vec![CounterexampleKind::Locality];
        kinds.extend(betas.iter().map(|&beta| CounterexampleKind::Scaling { beta }));
        let y = interface_test_state(domain, config.sweep.amplitude);
        for kind in kinds {
            let j = Counterexample::new(kind, domain, potential.stencil()).map_err(CliError::setup)?;
            let ghost = strains.iter().map(|f| ghost_force(&j, f).max_nodal()).fold(0.0, f64::max);
            let bound = j.lower_bound(&y)?;
            let exact = dual_norm_2d(&j.first_variation(&y), 2.0, &[])?.lower();
            let case = match kind {
                CounterexampleKind::Locality => "locality".to_string(),
                CounterexampleKind::Scaling { beta } => format!("scaling beta={beta}"),
            };
            let ok = ghost <= 1e-12 && bound.ratio >= 0.01;
            report.row(case.clone(), n, bound.ratio, 0.01, Verdict::from_bool(ok)).p = Some(2.0);
            report
                .table("counterexample", &["n", "case", "ghost_force", "ratio", "closed_form", "exact_norm"])
                .push(vec![n.to_string(), case, fmt(ghost), fmt(bound.ratio), fmt(bound.closed_form), fmt(exact)]);
        }
    }
    Ok(())
}

/// `y = A x + a cos(π x₁)(1 + sin(π x₂)) e₁`: homogeneous on `x₂ = -1/2`.
fn interface_test_state(domain: LatticeDomain<2>, amplitude: f64) -> Deformation<2> {
    use std::f64::consts::PI;
    Deformation::from_displacement_fn(domain, Matrix::<2>::new(1.01, 0.02, -0.01, 0.98), |x| {
        aclab::lattice::Vector::<2>::new(amplitude * (PI * x[0]).cos() * (1.0 + (PI * x[1]).sin()), 0.0)
    })
}

fn bond_density(config: &ExperimentConfig, report: &mut Report) -> Result<(), CliError> {
    let domain = LatticeDomain::<2>::new(config.n).map_err(CliError::setup)?;
    let eps = domain.eps();
    let n = config.n as i64;
    let m = config.sweep.max_offset;
    let mut rng = sampling::rng(config.seed);
    for trial in 0..config.trials {
        let kind = ElementKind::ALL[rng.gen_range(0..2)];
        let cell = [rng.gen_range(-n..n), rng.gen_range(-n..n)];
        let mut r = [0, 0];
        while r == [0, 0] {
            r = [rng.gen_range(-m..=m), rng.gen_range(-m..=m)];
        }
        let tri = kind.local_vertices().map(|v| [cell[0] + v[0], cell[1] + v[1]]);
        let area = 0.5 * eps * eps;
        let sum = eps * eps * rational_to_f64(bond_density_sum(&tri, r));
        let residual = (sum - area).abs();
        let tolerance = 1e-12 * area;
        report.row(format!("{kind:?} {cell:?} r={r:?}"), config.n, residual, tolerance, Verdict::from_bool(residual <= tolerance))
            .trial = Some(trial);
    }
    Ok(())
}

fn coarsen(config: &ExperimentConfig, report: &mut Report) -> Result<(), CliError> {
    let setup = Setup::new(config)?;
    let energy = setup.ac_energy(config)?;
    let mesh = CoarseMesh::for_decomposition(setup.geometry.decomposition()).map_err(CliError::setup)?;
    report.measure("coarse_elements", mesh.num_elements());
    report.measure("shape_regularity", mesh.shape_regularity());
    let mut constants = Vec::new();
    for (trial, y) in setup.smooth_states(config).iter().enumerate() {
        for p in config.exponents() {
            let r = coarsening_check(&energy, &mesh, y, p)?;
            constants.push(r.constant);
            let row = report.row("coarsening-defect", config.n, r.coarsening_defect, r.oscillation_term, Verdict::Measured);
            row.trial = Some(trial);
            row.p = Some(p);
            // The coarse estimate splits into the fine modelling error and the defect.
            let fine = r.fine_norm.upper();
            let verdict = if r.fine_norm.is_exact() {
                Verdict::from_bool(r.coarse_estimate <= (fine + r.coarsening_defect) * (1.0 + 1e-10) + 1e-14)
            } else {
                Verdict::Measured
            };
            let row = report.row("coarse-modelling-error", config.n, r.coarse_estimate, fine + r.coarsening_defect, verdict);
            row.trial = Some(trial);
            row.p = Some(p);
            report
                .table("coarsening", &["trial", "p", "coarse_estimate", "fine_lower", "fine_upper", "defect", "oscillation", "constant"])
                .push(vec![
                    trial.to_string(),
                    fmt(p),
                    fmt(r.coarse_estimate),
                    fmt(r.fine_norm.lower()),
                    fmt(fine),
                    fmt(r.coarsening_defect),
                    fmt(r.oscillation_term),
                    fmt(r.constant),
                ]);
        }
    }
    report.measure("max_constant", constants.iter().copied().fold(0.0, f64::max));
    Ok(())
}

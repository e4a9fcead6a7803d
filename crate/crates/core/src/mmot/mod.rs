//! Indirect energies `E(ρ) = inf_P C(P) - D(ρ, ρ)` of discretized densities.

mod coupling;
mod entropic;
pub(crate) mod lp;
pub(crate) mod multiset;
pub(crate) mod problem;
mod report;

pub use coupling::Coupling;
pub use report::{EnergyReport, Method, SolverOptions};

use self::lp::{certified_bound, revised_simplex, Columns};
use self::multiset::{check_budget, configuration_count};
use self::problem::SymmetricProblem;
use crate::error::{Error, Result};
use crate::riesz::{direct_term, GridDensity, KernelMatrix, RieszKernel};

/// Rejects densities whose mass is not the particle number.
pub(crate) fn check_mass(rho: &GridDensity, n: usize) -> Result<()> {
    let mass = rho.total_mass();
    if n == 0 || (mass - n as f64).abs() > 1e-6 {
        return Err(Error::NonIntegerMass { mass, n });
    }
    Ok(())
}

/// Computes bounds on the indirect energy of `rho` with `n` particles.
pub fn indirect_energy(
    rho: &GridDensity,
    n: usize,
    kernel: &KernelMatrix,
    method: Method,
    opts: &SolverOptions,
) -> Result<EnergyReport> {
    check_mass(rho, n)?;
    if !rho.on_sites(kernel.sites()) {
        return Err(Error::Geometry("density and kernel matrix use different site sets".into()));
    }
    let direct = direct_term(rho, rho, kernel)?;
    let mut report = EnergyReport {
        s: kernel.exponent(),
        d: kernel.sites().d(),
        n: n as f64,
        m: rho.support().len(),
        method,
        primal_upper: 0.0,
        dual_lower: 0.0,
        gap: 0.0,
        iterations: 0,
        epsilon_schedule: Vec::new(),
        lo_ratio: None,
        direct,
        interaction: 0.0,
        extrapolated: None,
        converged: true,
        warnings: Vec::new(),
        coupling: None,
    };
    match method {
        Method::ExactLp => exact(rho, n, kernel, opts, &mut report)?,
        Method::Entropic => entropic(rho, n, kernel, opts, &mut report)?,
        Method::TrialOnly => {
            let c = product_interaction(rho, n, kernel);
            report.interaction = c;
            report.primal_upper = c - direct;
            // C(P) ≥ 0 for every P.
            report.dual_lower = -direct;
            if configuration_count(report.m, n) <= opts.budget {
                report.coupling = Some(tensor_trial_coupling(rho, n)?);
            }
        }
        Method::GrandCanonicalLp => {
            return Err(Error::arg("the grand-canonical LP is provided by gc::gc_indirect_energy"))
        }
    }
    finish(&mut report);
    Ok(report)
}

pub(crate) fn finish(report: &mut EnergyReport) {
    let scale = report.primal_upper.abs().max(report.direct).max(1.0);
    if report.dual_lower > report.primal_upper {
        if report.dual_lower - report.primal_upper > 1e-12 * scale {
            report.warnings.push(format!(
                "dual bound exceeded primal by {:.3e}; clamped",
                report.dual_lower - report.primal_upper
            ));
        }
        report.dual_lower = report.primal_upper;
    }
    report.gap = report.primal_upper - report.dual_lower;
}

fn exact(rho: &GridDensity, n: usize, kernel: &KernelMatrix, opts: &SolverOptions, r: &mut EnergyReport) -> Result<()> {
    let problem = SymmetricProblem::new(rho, n, kernel, opts.budget)?;
    let cols = problem.columns();
    let out = revised_simplex(&cols, &problem.rho, problem.diagonal_columns(), opts.lp_max_iterations)?;
    let t = vec![1.0 / n as f64; problem.support.len()];
    let lower = certified_bound(&cols, &problem.rho, &out.duals, &t);
    r.iterations = out.iterations;
    r.converged = out.optimal;
    if !out.optimal {
        r.warnings.push(format!("simplex stopped after {} iterations before optimality", out.iterations));
    }
    let mut configs = Vec::new();
    let mut probs = Vec::new();
    for (&j, &x) in out.basis.iter().zip(&out.x_basic) {
        if x > 1e-15 {
            configs.extend(problem.global(j));
            probs.push(x);
        }
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let coupling = Coupling::from_parts(kernel.sites().clone(), n, configs, probs)?;
    r.interaction = coupling.interaction_energy(kernel);
    r.primal_upper = r.interaction - r.direct;
    r.dual_lower = lower - r.direct;
    r.coupling = Some(coupling);
    Ok(())
}

fn entropic(rho: &GridDensity, n: usize, kernel: &KernelMatrix, opts: &SolverOptions, r: &mut EnergyReport) -> Result<()> {
    let problem = SymmetricProblem::new(rho, n, kernel, opts.budget)?;
    let eps0 = match opts.epsilon0 {
        Some(e) if e > 0.0 => e,
        Some(e) => return Err(Error::arg(format!("initial temperature must be positive, got {e}"))),
        None => {
            let (lo, hi) = problem.costs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &c| (a.min(c), b.max(c)));
            ((hi - lo) / 2.0).max(1e-3 * hi.abs()).max(1e-12)
        }
    };
    let out = entropic::solve(&problem, eps0, opts.levels, opts.marginal_tolerance, opts.sinkhorn_max_iterations);
    let cols = problem.columns();
    let t = vec![1.0 / n as f64; problem.support.len()];
    let lower = certified_bound(&cols, &problem.rho, &out.potentials, &t);
    r.iterations = out.iterations;
    r.epsilon_schedule = out.schedule;
    r.converged = out.converged;
    if !out.converged {
        r.warnings.push(format!(
            "marginal violation {:.3e} above tolerance {:.1e} at some temperature",
            out.final_violation, opts.marginal_tolerance
        ));
    }
    let k = out.level_costs.len();
    if k >= 3 {
        let (e1, e2, e3) = (out.level_costs[k - 3], out.level_costs[k - 2], out.level_costs[k - 1]);
        r.extrapolated = Some((8.0 * e3 - 6.0 * e2 + e1) / 3.0 - r.direct);
    }
    let mut configs = Vec::new();
    let mut probs = Vec::new();
    for (j, &p) in out.probs.iter().enumerate() {
        if p > 0.0 {
            configs.extend(problem.global(j));
            probs.push(p);
        }
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let coupling = Coupling::from_parts(kernel.sites().clone(), n, configs, probs)?;
    r.interaction = out.cost;
    r.primal_upper = out.cost - r.direct;
    r.dual_lower = lower - r.direct;
    r.coupling = Some(coupling);
    Ok(())
}

/// `C((ρ/N)^{⊗N}) = N(N-1)/2 Σ_ij μ_i μ_j K_ij` with `μ = ρ/N`.
fn product_interaction(rho: &GridDensity, n: usize, kernel: &KernelMatrix) -> f64 {
    let nf = n as f64;
    let mu: Vec<f64> = rho.masses().iter().map(|m| m / nf).collect();
    nf * (nf - 1.0) * kernel.half_form(&mu, &mu)
}

/// The product trial state `(ρ/N)^{⊗N}`.
pub fn tensor_trial_coupling(rho: &GridDensity, n: usize) -> Result<Coupling> {
    check_mass(rho, n)?;
    Coupling::product(rho, n, u128::MAX)
}

/// `-E / ∫ρ^{1+s/d}` for the primal energy of a report.
pub fn lo_ratio(rho: &GridDensity, report: &EnergyReport, kernel: &RieszKernel) -> Result<f64> {
    let lda = rho.integral_power(kernel.lda_exponent());
    if lda <= 0.0 {
        return Err(Error::InvalidDensity("zero density has no Lieb-Oxford ratio".into()));
    }
    Ok(-report.primal_upper / lda)
}

/// The indirect energy over all (not necessarily symmetric) probabilities on
/// ordered tuples, constrained only through `ρ_P = ρ`. Exists to check that
/// restricting to symmetric states loses nothing.
pub fn indirect_energy_unrestricted(rho: &GridDensity, n: usize, kernel: &KernelMatrix, budget: u128) -> Result<f64> {
    check_mass(rho, n)?;
    let support = rho.support();
    let m = support.len();
    check_budget(m, n, budget)?;
    let mut cols = Columns::new(m);
    let mut diag = vec![0; m];
    let total = configuration_count(m, n) as usize;
    let mut tuple = vec![0usize; n];
    for j in 0..total {
        let mut rest = j;
        for slot in tuple.iter_mut().rev() {
            *slot = rest % m;
            rest /= m;
        }
        let sites: Vec<usize> = tuple.iter().map(|&k| support[k]).collect();
        let mut counts = vec![0.0; m];
        tuple.iter().for_each(|&k| counts[k] += 1.0);
        if tuple.iter().all(|&k| k == tuple[0]) {
            diag[tuple[0]] = j;
        }
        cols.push(counts.into_iter().enumerate().filter(|(_, c)| *c > 0.0), kernel.pair_sum(&sites));
    }
    let b: Vec<f64> = support.iter().map(|&i| rho.mass(i)).collect();
    let out = revised_simplex(&cols, &b, diag, 10_000_000)?;
    if !out.optimal {
        return Err(Error::Lp("unrestricted LP did not reach optimality".into()));
    }
    Ok(out.objective - direct_term(rho, rho, kernel)?)
}

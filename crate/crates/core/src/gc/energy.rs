//! The grand-canonical indirect energy as one LP over unnormalized measures
//! `μ_n = λ_n P_n`.

use crate::error::{Error, Result};
use crate::mmot::lp::{certified_bound, revised_simplex, Columns};
use crate::mmot::multiset::{configuration_count, counts, multisets};
use crate::mmot::{finish, Coupling, EnergyReport, Method, SolverOptions};
use crate::riesz::{direct_term, GridDensity, KernelMatrix};

use super::GrandCanonicalState;

/// Default truncation of the particle number: `⌈mass⌉ + 3`.
pub fn default_max_n(rho: &GridDensity) -> usize {
    rho.total_mass().ceil() as usize + 3
}

/// Minimizes `Σ λ_n C(P_n)` over states with `Σ λ_n ρ_{P_n} = ρ` and
/// `n ≤ max_n`, returning bounds on `E_GC(ρ)` and the optimal state.
pub fn gc_indirect_energy(
    rho: &GridDensity,
    max_n: usize,
    kernel: &KernelMatrix,
    opts: &SolverOptions,
) -> Result<(EnergyReport, GrandCanonicalState)> {
    if !rho.on_sites(kernel.sites()) {
        return Err(Error::Geometry("density and kernel matrix use different site sets".into()));
    }
    let mass = rho.total_mass();
    if (max_n as f64) < mass - 1e-12 {
        return Err(Error::arg(format!("max_n = {max_n} is below the mass {mass}")));
    }
    let support = rho.support();
    let m = support.len();
    let needed = (0..=max_n).fold(0u128, |acc, n| acc.saturating_add(configuration_count(m, n)));
    if needed > opts.budget {
        return Err(Error::BudgetExceeded { needed, budget: opts.budget });
    }

    // Rows: one per support site, then the normalization Σ_n μ_n(total) = 1.
    let mut cols = Columns::new(m + 1);
    let mut tuples: Vec<(usize, Vec<u32>)> = Vec::new();
    let mut diagonal = vec![usize::MAX; m];
    let vacuum = 0;
    cols.push([(m, 1.0)], 0.0);
    tuples.push((0, Vec::new()));
    for n in 1..=max_n {
        for t in multisets(m, n).chunks(n) {
            let global: Vec<usize> = t.iter().map(|&k| support[k as usize]).collect();
            if n == max_n && t.iter().all(|&x| x == t[0]) {
                diagonal[t[0] as usize] = cols.len();
            }
            cols.push(counts(t).chain([(m, 1.0)]), kernel.pair_sum(&global));
            tuples.push((n, global.iter().map(|&i| i as u32).collect()));
        }
    }
    let mut b: Vec<f64> = support.iter().map(|&i| rho.mass(i)).collect();
    b.push(1.0);
    let mut basis = diagonal;
    basis.push(vacuum);
    if m == 0 {
        basis = vec![vacuum];
    }
    let out = revised_simplex(&cols, &b, basis, opts.lp_max_iterations)?;
    let mut t = vec![0.0; m + 1];
    t[m] = 1.0;
    let lower = certified_bound(&cols, &b, &out.duals, &t);

    let mut by_n: Vec<(Vec<u32>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); max_n + 1];
    for (&j, &x) in out.basis.iter().zip(&out.x_basic) {
        if x > 1e-15 {
            let (n, tuple) = &tuples[j];
            by_n[*n].0.extend_from_slice(tuple);
            by_n[*n].1.push(x);
        }
    }
    let total: f64 = by_n.iter().flat_map(|(_, p)| p).sum();
    let mut components = Vec::new();
    for (n, (configs, mut probs)) in by_n.into_iter().enumerate() {
        let lambda: f64 = probs.iter().sum();
        if lambda <= 0.0 {
            continue;
        }
        probs.iter_mut().for_each(|p| *p /= lambda);
        components.push((lambda / total, Coupling::from_parts(kernel.sites().clone(), n, configs, probs)?));
    }
    let state = GrandCanonicalState::new(kernel.sites().clone(), components)?;

    let direct = direct_term(rho, rho, kernel)?;
    let interaction = state.interaction_energy(kernel);
    let mut report = EnergyReport {
        s: kernel.exponent(),
        d: kernel.sites().d(),
        n: mass,
        m,
        method: Method::GrandCanonicalLp,
        primal_upper: interaction - direct,
        dual_lower: lower - direct,
        gap: 0.0,
        iterations: out.iterations,
        epsilon_schedule: Vec::new(),
        lo_ratio: None,
        direct,
        interaction,
        extrapolated: None,
        converged: out.optimal,
        warnings: Vec::new(),
        coupling: None,
    };
    if !out.optimal {
        report.warnings.push(format!("simplex stopped after {} iterations before optimality", out.iterations));
    }
    finish(&mut report);
    Ok((report, state))
}

/// Mixture of the product states `(ρ/m)^{⊗⌊m⌋}` and `(ρ/m)^{⊗⌈m⌉}` with
/// weights chosen so that the density is `ρ`; `m` is the mass.
pub fn gc_product_trial(rho: &GridDensity, budget: u128) -> Result<GrandCanonicalState> {
    let mass = rho.total_mass();
    if mass <= 0.0 {
        return Err(Error::InvalidDensity("trial state needs positive mass".into()));
    }
    let lo = mass.floor();
    let x = mass - lo;
    let shape = rho.scaled(1.0 / mass)?;
    // λ_lo·lo + λ_hi·(lo + 1) = mass.
    let mut parts = Vec::new();
    for (n, lambda) in [(lo as usize, 1.0 - x), (lo as usize + 1, x)] {
        if lambda <= 0.0 {
            continue;
        }
        let c = if n == 0 { Coupling::vacuum(rho.sites().clone()) } else { Coupling::product(&shape, n, budget)? };
        parts.push((lambda, c));
    }
    // The products carry density (n/m)ρ; reweight so the mixture has density ρ.
    let mean: f64 = parts.iter().map(|(l, c)| l * c.n() as f64).sum();
    debug_assert!((mean - mass).abs() < 1e-9 * mass.max(1.0));
    GrandCanonicalState::new(rho.sites().clone(), parts)
}

//! Entropic multi-marginal solver with one shared potential for all particles.
//!
//! The state at temperature `ε` is
//! `P(S) ∝ |orbit(S)| Π_{i∈S} μ_i exp((Σ_{i∈S} u_i - c_S) / ε)` on sorted tuples
//! `S`, with `μ = ρ/N`. The potential is driven towards the marginal constraint
//! by damped log-ratio updates; temperatures are halved with warm starts.

use super::problem::SymmetricProblem;
use super::multiset::{counts, orbit_size};

pub(crate) struct EntropicOutcome {
    pub potentials: Vec<f64>,
    /// Exactly feasible probabilities per tuple, after rounding.
    pub probs: Vec<f64>,
    pub cost: f64,
    /// `c · P_ε` at the end of each temperature level.
    pub level_costs: Vec<f64>,
    pub schedule: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_violation: f64,
}

struct Tables {
    base: Vec<f64>,
    /// `(site, ln multiplicity, multiplicity)` per tuple.
    entries: Vec<Vec<(usize, f64, f64)>>,
}

pub(crate) fn solve(
    problem: &SymmetricProblem,
    epsilon0: f64,
    levels: usize,
    tolerance: f64,
    max_iterations: usize,
) -> EntropicOutcome {
    let n = problem.n as f64;
    let m = problem.support.len();
    let mu: Vec<f64> = problem.rho.iter().map(|r| r / n).collect();
    let log_mu: Vec<f64> = mu.iter().map(|x| x.ln()).collect();
    let entries: Vec<Vec<(usize, f64, f64)>> = (0..problem.len())
        .map(|k| counts(problem.tuple(k)).map(|(i, c)| (i, c.ln(), c)).collect())
        .collect();
    let base: Vec<f64> = (0..problem.len())
        .map(|k| orbit_size(problem.tuple(k)).ln() + entries[k].iter().map(|&(i, _, c)| c * log_mu[i]).sum::<f64>())
        .collect();
    let tables = Tables { base, entries };

    let mut u = vec![0.0; m];
    let mut schedule = Vec::new();
    let mut level_costs = Vec::new();
    let mut iterations = 0;
    let mut converged = true;
    let mut violation = f64::INFINITY;
    let mut logp = vec![0.0; problem.len()];

    for level in 0..levels.max(1) {
        let eps = epsilon0 * 0.5f64.powi(level as i32);
        schedule.push(eps);
        let mut theta: f64 = if problem.n == 1 { 1.0 } else { 0.5 };
        let mut last_tv = f64::INFINITY;
        let mut level_ok = false;
        for _ in 0..max_iterations {
            iterations += 1;
            let log_nu = state(problem, &tables, &u, eps, &mut logp);
            let tv = 0.5 * (0..m).map(|i| (log_nu[i].exp() - mu[i]).abs()).sum::<f64>();
            if tv < tolerance {
                violation = tv;
                level_ok = true;
                break;
            }
            if tv > last_tv {
                theta = (theta * 0.5).max(0.02);
            }
            last_tv = tv;
            violation = tv;
            for i in 0..m {
                u[i] += theta * eps * (log_mu[i] - log_nu[i]);
            }
        }
        converged &= level_ok;
        state(problem, &tables, &u, eps, &mut logp);
        level_costs.push(logp.iter().zip(&problem.costs).map(|(l, c)| l.exp() * c).sum());
    }

    // Round to an exactly feasible state: mix with a product of the residual.
    let p: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
    let mut nu = vec![0.0; m];
    for (k, pk) in p.iter().enumerate() {
        for &(i, _, c) in &tables.entries[k] {
            nu[i] += pk * c / n;
        }
    }
    let alpha = (0..m).map(|i| (mu[i] / nu[i]).min(1.0)).fold(1.0f64, f64::min);
    let residual: Vec<f64> = (0..m).map(|i| (mu[i] - alpha * nu[i]).max(0.0)).collect();
    let rmass: f64 = residual.iter().sum();
    let probs: Vec<f64> = (0..problem.len())
        .map(|k| {
            let mut v = alpha * p[k];
            if rmass > 0.0 {
                let prod: f64 = tables.entries[k].iter().map(|&(i, _, c)| (residual[i] / rmass).powf(c)).product();
                v += rmass * orbit_size(problem.tuple(k)) * prod;
            }
            v
        })
        .collect();
    let cost = probs.iter().zip(&problem.costs).map(|(p, c)| p * c).sum();
    EntropicOutcome {
        potentials: u,
        probs,
        cost,
        level_costs,
        schedule,
        iterations,
        converged,
        final_violation: violation,
    }
}

/// Fills `logp` with the normalized log-probabilities and returns the log of
/// the per-particle marginal.
fn state(problem: &SymmetricProblem, t: &Tables, u: &[f64], eps: f64, logp: &mut [f64]) -> Vec<f64> {
    let m = problem.support.len();
    let mut top = f64::NEG_INFINITY;
    for k in 0..problem.len() {
        let pot: f64 = t.entries[k].iter().map(|&(i, _, c)| c * u[i]).sum();
        logp[k] = t.base[k] + (pot - problem.costs[k]) / eps;
        top = top.max(logp[k]);
    }
    let z: f64 = logp.iter().map(|l| (l - top).exp()).sum();
    let log_z = top + z.ln();
    logp.iter_mut().for_each(|l| *l -= log_z);

    let mut site_max = vec![f64::NEG_INFINITY; m];
    for k in 0..problem.len() {
        for &(i, lc, _) in &t.entries[k] {
            site_max[i] = site_max[i].max(logp[k] + lc);
        }
    }
    let mut acc = vec![0.0; m];
    for k in 0..problem.len() {
        for &(i, lc, _) in &t.entries[k] {
            acc[i] += (logp[k] + lc - site_max[i]).exp();
        }
    }
    let ln_n = (problem.n as f64).ln();
    (0..m).map(|i| site_max[i] + acc[i].ln() - ln_n).collect()
}

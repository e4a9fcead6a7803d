use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmot::Coupling;
use crate::riesz::{GridDensity, KernelMatrix, SiteSet};

/// A mixture `⊕_n λ_n P_n` over particle numbers; at most one component per `n`.
#[derive(Debug, Clone)]
pub struct GrandCanonicalState {
    sites: Arc<SiteSet>,
    components: Vec<(f64, Coupling)>,
}

impl GrandCanonicalState {
    /// Builds a state from weighted couplings; components with equal particle
    /// number are merged into their mixture.
    pub fn new(sites: Arc<SiteSet>, components: Vec<(f64, Coupling)>) -> Result<Self> {
        let total: f64 = components.iter().map(|(l, _)| l).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidCoupling(format!("component weights sum to {total}")));
        }
        let mut by_n: BTreeMap<usize, Vec<(f64, Coupling)>> = BTreeMap::new();
        for (lambda, c) in components {
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(Error::InvalidCoupling(format!("component weight {lambda} is negative")));
            }
            if !(Arc::ptr_eq(c.sites(), &sites) || **c.sites() == *sites) {
                return Err(Error::Geometry("component lives on a different site set".into()));
            }
            if lambda > 0.0 {
                by_n.entry(c.n()).or_default().push((lambda, c));
            }
        }
        let mut merged = Vec::with_capacity(by_n.len());
        for (_, group) in by_n {
            if group.len() == 1 {
                merged.extend(group);
            } else {
                let weight: f64 = group.iter().map(|(l, _)| l).sum();
                let parts: Vec<(f64, &Coupling)> = group.iter().map(|(l, c)| (*l, c)).collect();
                merged.push((weight, Coupling::mixture(&parts)?));
            }
        }
        Ok(Self { sites, components: merged })
    }

    pub fn from_coupling(p: Coupling) -> Self {
        Self { sites: p.sites().clone(), components: vec![(1.0, p)] }
    }

    pub fn vacuum(sites: Arc<SiteSet>) -> Self {
        Self { sites: sites.clone(), components: vec![(1.0, Coupling::vacuum(sites))] }
    }

    pub fn sites(&self) -> &Arc<SiteSet> {
        &self.sites
    }

    pub fn components(&self) -> &[(f64, Coupling)] {
        &self.components
    }

    /// `(n, λ_n)` in increasing `n`.
    pub fn number_law(&self) -> Vec<(usize, f64)> {
        self.components.iter().map(|(l, c)| (c.n(), *l)).collect()
    }

    pub fn weight(&self, n: usize) -> f64 {
        self.components.iter().find(|(_, c)| c.n() == n).map_or(0.0, |(l, _)| *l)
    }

    pub fn component(&self, n: usize) -> Option<&Coupling> {
        self.components.iter().find(|(_, c)| c.n() == n).map(|(_, c)| c)
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|(l, _)| l).sum()
    }

    /// `ρ = Σ λ_n ρ_{P_n}`.
    pub fn density(&self) -> GridDensity {
        let mut masses = vec![0.0; self.sites.len()];
        for (l, c) in &self.components {
            for (t, p) in c.iter() {
                for &i in t {
                    masses[i as usize] += l * p;
                }
            }
        }
        GridDensity::new(self.sites.clone(), masses).expect("nonnegative masses")
    }

    pub fn mean_particle_number(&self) -> f64 {
        self.components.iter().map(|(l, c)| l * c.n() as f64).sum()
    }

    /// `C(P) = Σ λ_n C(P_n)`.
    pub fn interaction_energy(&self, kernel: &KernelMatrix) -> f64 {
        self.components.iter().map(|(l, c)| l * c.interaction_energy(kernel)).sum()
    }

    pub fn summary(&self) -> GcStateSummary {
        let density = self.density();
        GcStateSummary {
            components: self
                .components
                .iter()
                .enumerate()
                .map(|(k, (l, c))| GcComponentSummary { lambda: *l, n: c.n(), coupling_ref: format!("component_{k}") })
                .collect(),
            density_checksum: density.masses().iter().enumerate().map(|(i, m)| (i + 1) as f64 * m).sum(),
        }
    }
}

/// Serializable description of a grand-canonical state; couplings are written
/// separately and referenced by name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GcStateSummary {
    pub components: Vec<GcComponentSummary>,
    /// `Σ_i (i + 1) ρ_i`, a cheap fingerprint of the density.
    pub density_checksum: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GcComponentSummary {
    pub lambda: f64,
    pub n: usize,
    pub coupling_ref: String,
}

/// The grand-canonical tensor product: component `n` is
/// `Σ_k λ_k λ'_{n-k} P_k ⊗ P'_{n-k}`.
pub fn gc_tensor(a: &GrandCanonicalState, b: &GrandCanonicalState) -> Result<GrandCanonicalState> {
    if !(Arc::ptr_eq(&a.sites, &b.sites) || *a.sites == *b.sites) {
        return Err(Error::Geometry("states live on different site sets".into()));
    }
    let mut parts = Vec::new();
    for (l, p) in &a.components {
        for (m, q) in &b.components {
            parts.push((l * m, p.tensor(q)?));
        }
    }
    GrandCanonicalState::new(a.sites.clone(), parts)
}

/// Restriction of an `N`-particle state to the cells with `mask[i]`: the
/// component `n` collects the configurations with exactly `n` particles inside,
/// keeping only those particles.
pub fn localize(p: &Coupling, mask: &[bool]) -> Result<GrandCanonicalState> {
    if mask.len() != p.sites().len() {
        return Err(Error::Geometry("mask length differs from the number of sites".into()));
    }
    let mut by_n: BTreeMap<usize, BTreeMap<Vec<u32>, f64>> = BTreeMap::new();
    for (t, prob) in p.iter() {
        let mut inside: Vec<u32> = t.iter().copied().filter(|&i| mask[i as usize]).collect();
        inside.sort_unstable();
        *by_n.entry(inside.len()).or_default().entry(inside).or_insert(0.0) += prob;
    }
    let mut components = Vec::with_capacity(by_n.len());
    for (n, support) in by_n {
        let lambda: f64 = support.values().sum();
        if lambda <= 0.0 {
            continue;
        }
        let list = support.into_iter().map(|(t, q)| (t.into_iter().map(|i| i as usize).collect(), q / lambda)).collect();
        components.push((lambda, Coupling::new(p.sites().clone(), n, list)?));
    }
    let total: f64 = components.iter().map(|(l, _)| l).sum();
    components.iter_mut().for_each(|(l, _)| *l /= total);
    GrandCanonicalState::new(p.sites().clone(), components)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sites(m: usize) -> Arc<SiteSet> {
        Arc::new(SiteSet::interval(0.0, m as f64, m).unwrap())
    }

    fn half_half(sites: &Arc<SiteSet>) -> GrandCanonicalState {
        GrandCanonicalState::new(
            sites.clone(),
            vec![(0.5, Coupling::vacuum(sites.clone())), (0.5, Coupling::new(sites.clone(), 1, vec![(vec![0], 1.0)]).unwrap())],
        )
        .unwrap()
    }

    #[test]
    fn number_laws_convolve() {
        let s = sites(2);
        let t = gc_tensor(&half_half(&s), &half_half(&s)).unwrap();
        assert_eq!(t.number_law(), vec![(0, 0.25), (1, 0.5), (2, 0.25)]);
    }

    #[test]
    fn vacuum_is_neutral() {
        let s = sites(2);
        let a = half_half(&s);
        let t = gc_tensor(&GrandCanonicalState::vacuum(s.clone()), &a).unwrap();
        assert_eq!(t.number_law(), a.number_law());
    }

    #[test]
    fn localizing_a_product_of_two_site_measures() {
        let s = sites(2);
        let mu = Coupling::new(s.clone(), 1, vec![(vec![0], 0.5), (vec![1], 0.5)]).unwrap();
        let p = mu.tensor(&mu).unwrap();
        let g = localize(&p, &[true, false]).unwrap();
        assert_eq!(g.number_law(), vec![(0, 0.25), (1, 0.5), (2, 0.25)]);
        for n in [1, 2] {
            assert!(g.component(n).unwrap().iter().all(|(t, _)| t.iter().all(|&i| i == 0)));
        }
        let all = localize(&p, &[true, true]).unwrap();
        assert_eq!(all.number_law(), vec![(2, 1.0)]);
        let none = localize(&p, &[false, false]).unwrap();
        assert_eq!(none.number_law(), vec![(0, 1.0)]);
    }

    #[test]
    fn weights_must_sum_to_one() {
        let s = sites(1);
        assert!(GrandCanonicalState::new(s.clone(), vec![(0.4, Coupling::vacuum(s))]).is_err());
    }
}

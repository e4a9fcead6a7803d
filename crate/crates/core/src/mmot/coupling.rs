use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use super::multiset::{check_budget, multisets, orbit_size};
use crate::error::{Error, Result};
use crate::riesz::{GridDensity, KernelMatrix, SiteSet};

/// A probability on `N`-tuples of sites, stored as its support.
///
/// Tuples need not be sorted: symmetric functionals (the one-body density and
/// the pair interaction) only depend on the symmetrization.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    n: usize,
    sites: Arc<SiteSet>,
    configs: Vec<u32>,
    probs: Vec<f64>,
}

impl Coupling {
    pub fn new(sites: Arc<SiteSet>, n: usize, support: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        let mut configs = Vec::with_capacity(support.len() * n);
        let mut probs = Vec::with_capacity(support.len());
        for (tuple, p) in support {
            if tuple.len() != n {
                return Err(Error::InvalidCoupling(format!("tuple {tuple:?} does not have {n} entries")));
            }
            if let Some(i) = tuple.iter().find(|&&i| i >= sites.len()) {
                return Err(Error::InvalidCoupling(format!("site index {i} out of range")));
            }
            configs.extend(tuple.iter().map(|&i| i as u32));
            probs.push(p);
        }
        Self::from_parts(sites, n, configs, probs)
    }

    pub(crate) fn from_parts(sites: Arc<SiteSet>, n: usize, configs: Vec<u32>, probs: Vec<f64>) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidCoupling(format!("probability {p} is negative")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidCoupling(format!("probabilities sum to {total}")));
        }
        debug_assert_eq!(configs.len(), n * probs.len());
        Ok(Self { n, sites, configs, probs })
    }

    /// The zero-particle state.
    pub fn vacuum(sites: Arc<SiteSet>) -> Self {
        Self { n: 0, sites, configs: Vec::new(), probs: vec![1.0] }
    }

    /// The product state `(ρ/N)^{⊗N}`, stored on sorted tuples with orbit weights.
    pub fn product(rho: &GridDensity, n: usize, budget: u128) -> Result<Self> {
        let total = rho.total_mass();
        if n == 0 || total <= 0.0 {
            return Err(Error::InvalidDensity("product state needs positive mass and N ≥ 1".into()));
        }
        let support = rho.support();
        check_budget(support.len(), n, budget)?;
        let mu: Vec<f64> = support.iter().map(|&i| rho.mass(i) / total).collect();
        let mut configs = Vec::new();
        let mut probs = Vec::new();
        for s in multisets(support.len(), n).chunks(n) {
            probs.push(orbit_size(s) * s.iter().map(|&k| mu[k as usize]).product::<f64>());
            configs.extend(s.iter().map(|&k| support[k as usize] as u32));
        }
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);
        Self::from_parts(rho.sites().clone(), n, configs, probs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> &Arc<SiteSet> {
        &self.sites
    }

    /// Number of support configurations.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], f64)> + '_ {
        (0..self.probs.len()).map(move |k| (&self.configs[k * self.n..(k + 1) * self.n], self.probs[k]))
    }

    /// The one-body density `ρ_P`, the sum of the `N` one-particle marginals.
    pub fn marginal(&self) -> GridDensity {
        let mut masses = vec![0.0; self.sites.len()];
        for (c, p) in self.iter() {
            for &i in c {
                masses[i as usize] += p;
            }
        }
        GridDensity::new(self.sites.clone(), masses).expect("marginal masses are nonnegative")
    }

    /// `C(P) = Σ_config p(config) Σ_{j<k} K(x_j, x_k)`.
    pub fn interaction_energy(&self, kernel: &KernelMatrix) -> f64 {
        self.iter()
            .map(|(c, p)| {
                let tuple: Vec<usize> = c.iter().map(|&i| i as usize).collect();
                p * kernel.pair_sum(&tuple)
            })
            .sum()
    }

    /// Permutation average: every distinct reordering of a configuration gets
    /// an equal share of its probability.
    pub fn symmetrized(&self) -> Self {
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (c, p) in self.iter() {
            let mut perm = c.to_vec();
            perm.sort_unstable();
            let share = p / orbit_size(&perm);
            loop {
                *acc.entry(perm.clone()).or_insert(0.0) += share;
                if !next_permutation(&mut perm) {
                    break;
                }
            }
        }
        self.collect(acc)
    }

    /// Merges configurations that agree up to ordering onto sorted tuples.
    pub fn canonical(&self) -> Self {
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (c, p) in self.iter() {
            let mut key = c.to_vec();
            key.sort_unstable();
            *acc.entry(key).or_insert(0.0) += p;
        }
        self.collect(acc)
    }

    fn collect(&self, acc: BTreeMap<Vec<u32>, f64>) -> Self {
        let mut configs = Vec::with_capacity(acc.len() * self.n);
        let mut probs = Vec::with_capacity(acc.len());
        for (k, p) in acc {
            configs.extend(k);
            probs.push(p);
        }
        Self { n: self.n, sites: self.sites.clone(), configs, probs }
    }

    /// Convex combination `Σ w_k P_k` of couplings with equal particle number;
    /// identical tuples are merged.
    pub fn mixture(parts: &[(f64, &Coupling)]) -> Result<Self> {
        let (_, first) = parts.first().ok_or_else(|| Error::InvalidCoupling("empty mixture".into()))?;
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        for (w, c) in parts {
            if c.n != first.n || !(Arc::ptr_eq(&c.sites, &first.sites) || *c.sites == *first.sites) {
                return Err(Error::InvalidCoupling("mixture of incompatible couplings".into()));
            }
            for (t, p) in c.iter() {
                *acc.entry(t.to_vec()).or_insert(0.0) += w / total * p;
            }
        }
        Ok(first.collect(acc))
    }

    /// The tensor product `P ⊗ Q` on the same site set.
    pub fn tensor(&self, other: &Coupling) -> Result<Self> {
        if !(Arc::ptr_eq(&self.sites, &other.sites) || *self.sites == *other.sites) {
            return Err(Error::Geometry("couplings live on different site sets".into()));
        }
        let n = self.n + other.n;
        let mut configs = Vec::with_capacity(self.len() * other.len() * n);
        let mut probs = Vec::with_capacity(self.len() * other.len());
        for (a, p) in self.iter() {
            for (b, q) in other.iter() {
                configs.extend_from_slice(a);
                configs.extend_from_slice(b);
                probs.push(p * q);
            }
        }
        Ok(Self { n, sites: self.sites.clone(), configs, probs })
    }

    /// Relabels sites through `map` into a larger site set.
    pub fn embedded(&self, sites: Arc<SiteSet>, map: &[usize]) -> Result<Self> {
        if map.len() != self.sites.len() || map.iter().any(|&i| i >= sites.len()) {
            return Err(Error::Geometry("site map does not fit the target site set".into()));
        }
        Ok(Self {
            n: self.n,
            sites,
            configs: self.configs.iter().map(|&i| map[i as usize] as u32).collect(),
            probs: self.probs.clone(),
        })
    }

    /// CSV with columns `i1..iN,probability`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.n).map(|k| format!("i{k}")).chain(["probability".into()]).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for (c, p) in self.iter() {
            for i in c {
                let _ = write!(out, "{i},");
            }
            let _ = writeln!(out, "{p:.17e}");
        }
        out
    }
}

fn next_permutation(v: &mut [u32]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("pivot has a successor");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riesz::{DiagonalRule, RieszKernel};

    fn line(m: usize) -> Arc<SiteSet> {
        Arc::new(SiteSet::interval(0.0, m as f64, m).unwrap())
    }

    #[test]
    fn two_site_antidiagonal_marginal() {
        let c = Coupling::new(line(2), 2, vec![(vec![0, 1], 0.5), (vec![1, 0], 0.5)]).unwrap();
        assert_eq!(c.marginal().masses(), &[1.0, 1.0]);
    }

    #[test]
    fn three_particle_pair_energy() {
        let sites = Arc::new(SiteSet::new(1, 0.1, vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap());
        let k = KernelMatrix::new(&sites, &RieszKernel::new(0.5, 1).unwrap(), DiagonalRule::PointCenters).unwrap();
        let c = Coupling::new(sites, 3, vec![(vec![0, 1, 2], 1.0)]).unwrap();
        assert!((c.interaction_energy(&k) - (2.0 + 0.5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn single_particle_has_no_interaction() {
        let sites = line(3);
        let k = KernelMatrix::new(&sites, &RieszKernel::new(0.5, 1).unwrap(), DiagonalRule::CellAverage).unwrap();
        let c = Coupling::new(sites, 1, vec![(vec![0], 0.3), (vec![2], 0.7)]).unwrap();
        assert_eq!(c.interaction_energy(&k), 0.0);
    }

    #[test]
    fn symmetrization_preserves_marginal_and_energy() {
        let sites = line(4);
        let k = KernelMatrix::new(&sites, &RieszKernel::new(0.5, 1).unwrap(), DiagonalRule::CellAverage).unwrap();
        let c = Coupling::new(
            sites,
            3,
            vec![(vec![0, 1, 1], 0.25), (vec![3, 0, 2], 0.5), (vec![2, 2, 2], 0.25)],
        )
        .unwrap();
        let s = c.symmetrized();
        assert_eq!(s.len(), 3 + 6 + 1);
        let (a, b) = (c.marginal(), s.marginal());
        for i in 0..4 {
            assert!((a.mass(i) - b.mass(i)).abs() < 1e-15);
        }
        assert!((c.interaction_energy(&k) - s.interaction_energy(&k)).abs() < 1e-14);
        let (x, y) = (s.canonical(), c.canonical());
        assert_eq!(x.len(), y.len());
        for ((a, p), (b, q)) in x.iter().zip(y.iter()) {
            assert_eq!(a, b);
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(Coupling::new(line(2), 1, vec![(vec![0], 0.4)]).is_err());
        assert!(Coupling::new(line(2), 1, vec![(vec![0], 1.2), (vec![1], -0.2)]).is_err());
        assert!(Coupling::new(line(2), 2, vec![(vec![0], 1.0)]).is_err());
    }

    #[test]
    fn product_state_marginal() {
        let rho = GridDensity::new(line(3), vec![0.5, 1.0, 1.5]).unwrap();
        let p = Coupling::product(&rho, 3, 1_000).unwrap();
        let m = p.marginal();
        for i in 0..3 {
            assert!((m.mass(i) - rho.mass(i)).abs() < 1e-14);
        }
    }
}

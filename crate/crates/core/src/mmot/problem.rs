//! The symmetric LP data shared by the exact and entropic solvers.

use super::lp::Columns;
use super::multiset::{check_budget, counts, multisets};
use crate::error::{Error, Result};
use crate::riesz::{GridDensity, KernelMatrix};

pub(crate) struct SymmetricProblem {
    pub n: usize,
    /// Site indices carrying mass.
    pub support: Vec<usize>,
    /// Masses on `support`.
    pub rho: Vec<f64>,
    /// Sorted tuples of positions in `support`, `n` entries each.
    pub tuples: Vec<u32>,
    pub costs: Vec<f64>,
}

impl SymmetricProblem {
    pub fn new(rho: &GridDensity, n: usize, kernel: &KernelMatrix, budget: u128) -> Result<Self> {
        if !rho.on_sites(kernel.sites()) {
            return Err(Error::Geometry("density and kernel matrix use different site sets".into()));
        }
        let support = rho.support();
        check_budget(support.len(), n, budget)?;
        let tuples = multisets(support.len(), n);
        let costs = tuples
            .chunks(n.max(1))
            .map(|t| {
                let sites: Vec<usize> = t.iter().map(|&k| support[k as usize]).collect();
                kernel.pair_sum(&sites)
            })
            .collect();
        let masses = support.iter().map(|&i| rho.mass(i)).collect();
        Ok(Self { n, support, rho: masses, tuples, costs })
    }

    pub fn tuple(&self, k: usize) -> &[u32] {
        &self.tuples[k * self.n..(k + 1) * self.n]
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn columns(&self) -> Columns {
        let mut cols = Columns::new(self.support.len());
        for k in 0..self.len() {
            cols.push(counts(self.tuple(k)), self.costs[k]);
        }
        cols
    }

    /// Column index of the tuple `(i, i, ..., i)` for every support position.
    pub fn diagonal_columns(&self) -> Vec<usize> {
        let mut diag = vec![usize::MAX; self.support.len()];
        for k in 0..self.len() {
            let t = self.tuple(k);
            if t.iter().all(|&x| x == t[0]) {
                diag[t[0] as usize] = k;
            }
        }
        diag
    }

    /// Maps a tuple of support positions to global site indices.
    pub fn global(&self, k: usize) -> impl Iterator<Item = u32> + '_ {
        self.tuple(k).iter().map(|&x| self.support[x as usize] as u32)
    }
}

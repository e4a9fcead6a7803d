use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cells::cell_pair_average;
use super::{GridDensity, RieszKernel, SiteSet};
use crate::error::{Error, Result};

/// How kernel entries between cells are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalRule {
    /// Every entry, including the diagonal, is the exact pair average of the
    /// kernel over the two cells. Requires sites on a common lattice.
    CellAverage,
    /// Off-diagonal entries use the point value at the centers; the diagonal
    /// uses the cell self-average.
    PointCenters,
}

/// Dense symmetric matrix `K_ij` of cell-pair kernel values `|x-y|^{-p}`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    sites: Arc<SiteSet>,
    exponent: f64,
    rule: DiagonalRule,
    values: Vec<f64>,
}

impl KernelMatrix {
    pub fn new(sites: &Arc<SiteSet>, kernel: &RieszKernel, rule: DiagonalRule) -> Result<Self> {
        if kernel.d() != sites.d() {
            return Err(Error::Geometry(format!(
                "kernel dimension {} but sites in dimension {}",
                kernel.d(),
                sites.d()
            )));
        }
        Self::with_exponent(sites, kernel.s(), rule)
    }

    /// Matrix for `|x-y|^{-p}` with any `p < d`; negative `p` gives growing
    /// kernels `|x-y|^{|p|}`.
    pub fn with_exponent(sites: &Arc<SiteSet>, p: f64, rule: DiagonalRule) -> Result<Self> {
        let d = sites.d();
        if !(p < d as f64) || !p.is_finite() {
            return Err(Error::KernelDomain { s: p, d });
        }
        let m = sites.len();
        let h = sites.h();
        let offsets = |i: usize, j: usize| -> Result<[i64; 3]> {
            let (a, b) = (sites.point(i), sites.point(j));
            let mut key = [0i64; 3];
            for k in 0..d {
                let x = (b[k] - a[k]) / h;
                let r = x.round();
                if (x - r).abs() > 1e-6 {
                    return Err(Error::Geometry(
                        "sites are not on a common lattice; use the point-center rule".into(),
                    ));
                }
                key[k] = (r as i64).abs();
            }
            key[..d].sort_unstable();
            Ok(key)
        };
        let mut values = vec![0.0; m * m];
        let diag = cell_pair_average(&vec![0; d], h, p);
        match rule {
            DiagonalRule::PointCenters => {
                values.par_chunks_mut(m.max(1)).enumerate().for_each(|(i, row)| {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = if i == j { diag } else { sites.distance(i, j).powf(-p) };
                    }
                });
            }
            DiagonalRule::CellAverage => {
                let mut keys: BTreeMap<[i64; 3], f64> = BTreeMap::new();
                let mut index = vec![[0i64; 3]; m * m];
                for i in 0..m {
                    for j in i..m {
                        let key = offsets(i, j)?;
                        keys.insert(key, 0.0);
                        index[i * m + j] = key;
                        index[j * m + i] = key;
                    }
                }
                let computed: Vec<([i64; 3], f64)> = keys
                    .keys()
                    .copied()
                    .collect::<Vec<_>>()
                    .into_par_iter()
                    .map(|key| (key, cell_pair_average(&key[..d], h, p)))
                    .collect();
                let table: HashMap<[i64; 3], f64> = computed.into_iter().collect();
                values.par_iter_mut().zip(index.par_iter()).for_each(|(v, key)| *v = table[key]);
            }
        }
        Ok(Self { sites: sites.clone(), exponent: p, rule, values })
    }

    pub fn sites(&self) -> &Arc<SiteSet> {
        &self.sites
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn rule(&self) -> DiagonalRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.sites.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.sites.len();
        &self.values[i * m..(i + 1) * m]
    }

    /// `Σ_{j<k} K(x_j, x_k)` for one configuration of site indices.
    pub fn pair_sum(&self, config: &[usize]) -> f64 {
        let mut total = 0.0;
        for (a, &i) in config.iter().enumerate() {
            let row = self.row(i);
            for &j in &config[a + 1..] {
                total += row[j];
            }
        }
        total
    }

    /// `½ Σ_ij f_i g_j K_ij` with a thread-count independent summation order.
    pub fn half_form(&self, f: &[f64], g: &[f64]) -> f64 {
        let rows: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                if f[i] == 0.0 {
                    0.0
                } else {
                    f[i] * self.row(i).iter().zip(g).map(|(k, gj)| k * gj).sum::<f64>()
                }
            })
            .collect();
        0.5 * rows.iter().sum::<f64>()
    }

    /// Potential `(K g)_i` generated by masses `g`.
    pub fn potential(&self, g: &[f64]) -> Vec<f64> {
        (0..self.len())
            .into_par_iter()
            .map(|i| self.row(i).iter().zip(g).map(|(k, gj)| k * gj).sum::<f64>())
            .collect()
    }
}

/// The direct term `D(f, g) = ½ Σ_ij f_i g_j K_ij`.
pub fn direct_term(f: &GridDensity, g: &GridDensity, kernel: &KernelMatrix) -> Result<f64> {
    for x in [f, g] {
        if !x.on_sites(kernel.sites()) {
            return Err(Error::Geometry("density and kernel matrix use different site sets".into()));
        }
    }
    Ok(kernel.half_form(f.masses(), g.masses()))
}

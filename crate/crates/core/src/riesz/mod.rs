//! Riesz kernels, grid densities, the direct term and domain geometry.

mod cells;
mod density;
mod domain;
mod kernel_matrix;

pub use cells::{cell_pair_average, cell_pair_average_with, unit_cell_pair_average};
pub use density::{DensityDescriptor, GridDensity, ScaledDensity, ScaledFamily, SiteSet};
pub use domain::{fisher_constant, fisher_eta, Domain, FisherEstimate, Shape};
pub use kernel_matrix::{direct_term, DiagonalRule, KernelMatrix};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The Riesz interaction `|x - y|^{-s}` in dimension `d`, with `0 < s < d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszKernel {
    s: f64,
    d: usize,
}

impl RieszKernel {
    pub fn new(s: f64, d: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Dimension(d));
        }
        if !(s > 0.0 && s < d as f64) {
            return Err(Error::KernelDomain { s, d });
        }
        Ok(Self { s, d })
    }

    /// Coulomb interaction in three dimensions.
    pub fn coulomb() -> Self {
        Self { s: 1.0, d: 3 }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn value(&self, r: f64) -> f64 {
        r.powf(-self.s)
    }

    /// Exponent `1 + s/d` of the local density approximation integral.
    pub fn lda_exponent(&self) -> f64 {
        1.0 + self.s / self.d as f64
    }

    /// Average of the kernel over a cell of side `h` paired with itself.
    pub fn diagonal(&self, h: f64) -> f64 {
        cell_pair_average(&vec![0; self.d], h, self.s)
    }

    /// Average of the kernel over two cells of side `h` whose centers differ by
    /// `offset * h`.
    pub fn cell_pair(&self, offset: &[i64], h: f64) -> f64 {
        assert_eq!(offset.len(), self.d, "offset dimension mismatch");
        cell_pair_average(offset, h, self.s)
    }
}

/// The constant `c_{d,s}` of the Fourier representation of `|x|^{-s}`.
pub fn kernel_constant(s: f64, d: usize) -> Result<f64> {
    let k = RieszKernel::new(s, d)?;
    let d = k.d as f64;
    Ok(2f64.powf(d - 1.0 - s) * std::f64::consts::PI.powf(d / 2.0) * libm::tgamma((d - s) / 2.0)
        / libm::tgamma(s / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coulomb_constant_is_two_pi() {
        let c = kernel_constant(1.0, 3).unwrap();
        assert!((c - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn half_power_in_one_dimension() {
        // Gamma(1/4) cancels, leaving sqrt(pi/2).
        let c = kernel_constant(0.5, 1).unwrap();
        assert!((c - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn rejects_boundary_exponents() {
        assert!(kernel_constant(3.0, 3).is_err());
        assert!(kernel_constant(0.0, 2).is_err());
        assert!(RieszKernel::new(0.5, 4).is_err());
    }

    #[test]
    fn diagonal_dominates_neighbours() {
        for (s, d) in [(0.5, 1), (1.0, 2), (1.0, 3), (2.5, 3)] {
            let k = RieszKernel::new(s, d).unwrap();
            let diag = k.diagonal(0.3);
            let mut off = vec![0; d];
            off[0] = 1;
            let near = k.cell_pair(&off, 0.3);
            assert!(diag.is_finite() && diag > near, "s={s} d={d}: {diag} {near}");
        }
    }
}

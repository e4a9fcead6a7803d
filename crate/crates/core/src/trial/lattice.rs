//! Smeared cubic lattices: the point-minus-smeared pair potential and the
//! energy of the translation-averaged crystal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::riesz::cell_pair_average;

/// `F(z) = 1/|z| - (1/|x| * 1_C * 1_C)(z)` for the unit cube `C` and a nonzero
/// lattice vector `z`.
pub fn lattice_potential_f(z: [i64; 3]) -> Result<f64> {
    if z == [0, 0, 0] {
        return Err(Error::arg("F is only defined for nonzero lattice vectors"));
    }
    Ok(f_unchecked(z))
}

fn f_unchecked(z: [i64; 3]) -> f64 {
    let r = norm(z);
    1.0 / r - cell_pair_average(&z, 1.0, 1.0)
}

fn norm(z: [i64; 3]) -> f64 {
    ((z[0] * z[0] + z[1] * z[1] + z[2] * z[2]) as f64).sqrt()
}

/// `D(1_C, 1_C)` for the unit cube.
pub fn cube_self_energy() -> f64 {
    0.5 * cell_pair_average(&[0, 0, 0], 1.0, 1.0)
}

/// Lattice vectors `0 < |z| ≤ cutoff` up to the cubic symmetry group, as
/// `(representative with 0 ≤ z0 ≤ z1 ≤ z2, multiplicity)`.
fn orbits(cutoff: f64) -> Vec<([i64; 3], usize)> {
    let r = cutoff.floor() as i64;
    let r2 = cutoff * cutoff + 1e-9;
    let mut out = Vec::new();
    for a in 0..=r {
        for b in a..=r {
            for c in b..=r {
                let n2 = (a * a + b * b + c * c) as f64;
                if n2 == 0.0 || n2 > r2 {
                    continue;
                }
                out.push(([a, b, c], orbit_multiplicity([a, b, c])));
            }
        }
    }
    out
}

fn orbit_multiplicity(z: [i64; 3]) -> usize {
    let signs = z.iter().filter(|&&x| x != 0).count();
    let perms = if z[0] == z[1] && z[1] == z[2] {
        1
    } else if z[0] == z[1] || z[1] == z[2] {
        3
    } else {
        6
    };
    perms << signs
}

/// Inputs of the lattice sum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSumSpec {
    /// Cutoff radius in lattice units.
    pub cutoff: f64,
    /// `D(1_C, 1_C)`.
    pub cell_self_energy: f64,
}

impl LatticeSumSpec {
    pub fn new(cutoff: f64) -> Result<Self> {
        if !(cutoff >= 1.0) {
            return Err(Error::arg(format!("cutoff {cutoff} must be at least one lattice spacing")));
        }
        Ok(Self { cutoff, cell_self_energy: cube_self_energy() })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloatingCrystalReport {
    pub cutoff: f64,
    pub rho0: f64,
    /// Number of lattice vectors `0 < |z| ≤ cutoff`.
    pub lattice_points: usize,
    /// `½ Σ_{0<|z|≤R} F(z)` at unit density.
    pub partial_sum: f64,
    pub cell_self_energy: f64,
    /// Per-volume energy at density `rho0`, tail not included.
    pub e_fc: f64,
    /// Estimate of `|½ Σ_{|z|>R} F(z)|` from the fitted `|F| ≤ K5 |z|^{-5}`.
    pub tail_bound: f64,
    pub k5: f64,
    /// The same tail from a fitted `|F| ≤ K4 |z|^{-4}` envelope.
    pub tail_bound_quartic: f64,
    pub k4: f64,
    /// Smallest and largest `F` over the summed vectors.
    pub f_min: f64,
    pub f_max: f64,
}

/// Per-volume energy of the smeared cubic crystal averaged over translations,
/// at density `rho0`; scales as `rho0^{4/3}`.
pub fn floating_crystal_upper_bound(rho0: f64, cutoff: f64, max_tail: Option<f64>) -> Result<FloatingCrystalReport> {
    if !(rho0 > 0.0) {
        return Err(Error::arg(format!("density {rho0} must be positive")));
    }
    let spec = LatticeSumSpec::new(cutoff)?;
    let orbits = orbits(cutoff);
    let values: Vec<f64> = orbits.par_iter().map(|(z, _)| f_unchecked(*z)).collect();
    let mut sum = 0.0;
    let mut count = 0;
    let (mut k4, mut k5) = (0.0f64, 0.0f64);
    let (mut f_min, mut f_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for ((z, mult), f) in orbits.iter().zip(&values) {
        sum += *mult as f64 * f;
        count += mult;
        f_min = f_min.min(*f);
        f_max = f_max.max(*f);
        let r = norm(*z);
        // Envelope constants from the outer half of the summed region.
        if r > 0.5 * cutoff || cutoff < 2.0 {
            k4 = k4.max(f.abs() * r.powi(4));
            k5 = k5.max(f.abs() * r.powi(5));
        }
    }
    // Σ_{|z|>R} |z|^{-k} ≤ ∫_{|x|>R-√3/2} |x|^{-k} dx.
    let r0 = (cutoff - 0.75f64.sqrt()).max(0.5);
    let four_pi = 4.0 * std::f64::consts::PI;
    let tail5 = 0.5 * k5 * four_pi / (2.0 * r0 * r0);
    let tail4 = 0.5 * k4 * four_pi / r0;
    let partial = 0.5 * sum;
    let scale = rho0.powf(4.0 / 3.0);
    let report = FloatingCrystalReport {
        cutoff,
        rho0,
        lattice_points: count,
        partial_sum: partial,
        cell_self_energy: spec.cell_self_energy,
        e_fc: scale * (partial - spec.cell_self_energy),
        tail_bound: scale * tail5,
        k5,
        tail_bound_quartic: scale * tail4,
        k4,
        f_min,
        f_max,
    };
    if let Some(max) = max_tail {
        if report.tail_bound > max {
            return Err(Error::arg(format!(
                "cutoff {cutoff} gives tail estimate {:.3e} above the requested {max:.3e}",
                report.tail_bound
            )));
        }
    }
    Ok(report)
}

/// Same energy computed with lattice spacing `a = rho0^{-1/3}` and cells of
/// side `a`, without the scaling shortcut.
pub fn floating_crystal_direct(rho0: f64, cutoff: f64) -> Result<f64> {
    if !(rho0 > 0.0) {
        return Err(Error::arg(format!("density {rho0} must be positive")));
    }
    let a = rho0.powf(-1.0 / 3.0);
    let orbits = orbits(cutoff);
    let sum: f64 = orbits
        .par_iter()
        .map(|(z, mult)| *mult as f64 * (1.0 / (a * norm(*z)) - cell_pair_average(z, a, 1.0)))
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let self_energy = 0.5 * cell_pair_average(&[0, 0, 0], a, 1.0);
    Ok(rho0 * (0.5 * sum - self_energy))
}

/// `E(Q)` for the translation-averaged crystal on a `k × k × k` block of unit
/// cells, counting each offset `z` with its `Π (k - |z_i|)` pairs.
pub fn cubic_block_energy(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::arg("block side must be positive"));
    }
    let k = k as i64;
    let mut reps = Vec::new();
    for a in 0..k {
        for b in a..k {
            for c in b..k {
                if (a, b, c) != (0, 0, 0) {
                    reps.push([a, b, c]);
                }
            }
        }
    }
    let terms: Vec<f64> = reps
        .par_iter()
        .map(|z| {
            let pairs: i64 = z.iter().map(|&x| k - x).product();
            orbit_multiplicity(*z) as f64 * pairs as f64 * f_unchecked(*z)
        })
        .collect();
    let p = (k * k * k) as f64;
    Ok(0.5 * terms.iter().sum::<f64>() - p * cube_self_energy())
}

/// Placement of unit cells used by [`finite_crystal_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrystalLayout {
    /// An `n × n × n` block of unit cells.
    Block { n: usize },
    /// The unit-cell layer separating `k^3` blocks of side `n` inside a cube
    /// of side `nk + k + 1`.
    Corridor { n: usize, k: usize },
}

impl CrystalLayout {
    pub fn centers(&self) -> Vec<[i64; 3]> {
        let (side, keep): (i64, Box<dyn Fn(i64) -> bool>) = match *self {
            CrystalLayout::Block { n } => (n as i64, Box::new(|_| true)),
            CrystalLayout::Corridor { n, k } => {
                let period = n as i64 + 1;
                ((n * k + k + 1) as i64, Box::new(move |c| c % period == 0))
            }
        };
        let mut out = Vec::new();
        for x in 0..side {
            for y in 0..side {
                for z in 0..side {
                    if matches!(self, CrystalLayout::Block { .. }) || keep(x) || keep(y) || keep(z) {
                        out.push([x, y, z]);
                    }
                }
            }
        }
        out
    }
}

/// Direct evaluation of `C(Q) - D(ρ_Q, ρ_Q)` for the translation-averaged
/// state on finitely many unit cells, next to the two candidate closed forms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiniteCrystalCheck {
    pub p: usize,
    /// `C(Q) = Σ_{j<k} 1/|r_j - r_k|` (the common translation drops out).
    pub interaction: f64,
    /// `D(ρ_Q, ρ_Q)` from pair averages over all cell pairs, diagonal included.
    pub direct: f64,
    pub energy: f64,
    /// `Σ_{j<k} F(r_j - r_k) - p D(1_C, 1_C)`.
    pub formula_p: f64,
    /// `Σ_{j<k} F(r_j - r_k) - (p/2) D(1_C, 1_C)`.
    pub formula_half_p: f64,
    /// Coefficient in front of `D(1_C, 1_C)` that reproduces `energy`.
    pub coefficient: f64,
}

pub fn finite_crystal_check(centers: &[[i64; 3]]) -> Result<FiniteCrystalCheck> {
    let p = centers.len();
    if p == 0 {
        return Err(Error::arg("no cells"));
    }
    let self_energy = cube_self_energy();
    let mut interaction = 0.0;
    let mut smeared = 0.0;
    for j in 0..p {
        for k in j + 1..p {
            let z = std::array::from_fn(|i| centers[k][i] - centers[j][i]);
            if z == [0, 0, 0] {
                return Err(Error::Geometry("two cells share a center".into()));
            }
            interaction += 1.0 / norm(z);
            smeared += cell_pair_average(&z, 1.0, 1.0);
        }
    }
    let direct = smeared + p as f64 * self_energy;
    let energy = interaction - direct;
    let sum_f = interaction - smeared;
    Ok(FiniteCrystalCheck {
        p,
        interaction,
        direct,
        energy,
        formula_p: sum_f - p as f64 * self_energy,
        formula_half_p: sum_f - 0.5 * p as f64 * self_energy,
        coefficient: (sum_f - energy) / self_energy,
    })
}

//! Energies of dilated densities `ρ(·/λ)` against the local density
//! approximation `e ∫ρ^{1+s/d}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monge1d::{indirect_energy_1d, SegmentDensity};
use crate::trial::cube_self_energy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LdaMode {
    #[serde(rename = "exact_1d")]
    Exact1d,
    #[serde(rename = "bounds_3d")]
    Bounds3d,
}

impl std::str::FromStr for LdaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_1d" => Ok(LdaMode::Exact1d),
            "bounds_3d" => Ok(LdaMode::Bounds3d),
            other => Err(Error::arg(format!("unknown LDA mode '{other}'"))),
        }
    }
}

/// A three-dimensional step density made of disjoint cubes, `value` on a cube
/// of side `side`. Positions do not enter the subadditive trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub value: f64,
    pub side: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaRow {
    #[serde(rename = "N")]
    pub n: usize,
    /// `E/N` (exact) or an upper bound on it.
    pub value: f64,
    pub target: f64,
    pub deviation: f64,
    pub relative_deviation: f64,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaTable {
    pub mode: LdaMode,
    pub s: f64,
    /// Per-volume energy at unit density used in the target.
    pub e_uniform: f64,
    /// `∫ρ^{1+s/d}` of the base density.
    pub lda_integral: f64,
    pub rows: Vec<LdaRow>,
}

impl LdaTable {
    pub fn deviations_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].deviation.abs() < w[0].deviation.abs())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,value,target,deviation,error_estimate\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.6e},{:.3e}\n",
                r.n, r.value, r.target, r.deviation, r.error_estimate
            ));
        }
        out
    }
}

fn row(n: usize, value: f64, target: f64, err: f64) -> LdaRow {
    LdaRow {
        n,
        value,
        target,
        deviation: value - target,
        relative_deviation: (value - target) / target.abs(),
        error_estimate: err,
    }
}

/// Exact `E(ρ(·/N))/N` on the line for a base density of unit mass.
pub fn lda_exact_1d(base: &SegmentDensity, n_list: &[usize], s: f64, e_uniform: f64) -> Result<LdaTable> {
    if (base.mass() - 1.0).abs() > 1e-10 {
        return Err(Error::NonIntegerMass { mass: base.mass(), n: 1 });
    }
    let lda_integral = base.integral_power(1.0 + s);
    let target = e_uniform * lda_integral;
    let rows = n_list
        .iter()
        .map(|&n| {
            let sol = indirect_energy_1d(&base.dilated(n as f64)?, n, s)?;
            Ok(row(n, sol.energy / n as f64, target, sol.quadrature_error_estimate / n as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LdaTable { mode: LdaMode::Exact1d, s, e_uniform, lda_integral, rows })
}

/// Upper bounds on `E(ρ(·/N^{1/3}))/N` for Coulomb in three dimensions.
///
/// Each dilated plateau of value `c` is filled with as many cubes of unit
/// mass (side `c^{-1/3}`) as fit along each axis, each carrying one particle
/// with energy `-c^{1/3} D(1_C, 1_C)`. The leftover shells have integer total
/// mass and contribute at most `0`, since the product state gives
/// `E ≤ -D/N`. Subadditivity sums the pieces.
pub fn lda_bounds_3d(base: &[Plateau], n_list: &[usize], e_uniform: f64) -> Result<LdaTable> {
    if base.iter().any(|p| !(p.value > 0.0 && p.side > 0.0)) {
        return Err(Error::InvalidDensity("plateaus need positive value and side".into()));
    }
    let mass: f64 = base.iter().map(|p| p.value * p.side.powi(3)).sum();
    if (mass - 1.0).abs() > 1e-10 {
        return Err(Error::NonIntegerMass { mass, n: 1 });
    }
    let lda_integral: f64 = base.iter().map(|p| p.value.powf(4.0 / 3.0) * p.side.powi(3)).sum();
    let target = e_uniform * lda_integral;
    let d1 = cube_self_energy();
    let rows = n_list
        .iter()
        .map(|&n| {
            let energy: f64 = base
                .iter()
                .map(|p| {
                    let per_axis = (p.side * (n as f64 * p.value).cbrt() + 1e-9).floor();
                    -d1 * per_axis.powi(3) * p.value.cbrt()
                })
                .sum();
            row(n, energy / n as f64, target, 1e-9)
        })
        .collect();
    Ok(LdaTable { mode: LdaMode::Bounds3d, s: 1.0, e_uniform, lda_integral, rows })
}

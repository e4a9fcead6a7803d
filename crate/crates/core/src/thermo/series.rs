//! Per-volume energies of growing cubes and brackets for the uniform gas.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmot::{indirect_energy, Method, SolverOptions};
use crate::monge1d::{indirect_energy_1d, SegmentDensity};
use crate::riesz::{direct_term, DiagonalRule, Domain, KernelMatrix, RieszKernel, Shape};
use crate::trial::{cube_self_energy, cubic_block_energy, floating_crystal_upper_bound};

/// Lower bound on the Coulomb uniform-gas energy per volume at unit density,
/// inherited from Jellium.
pub const JELLIUM_LOWER_BOUND: f64 = -1.4508;

/// Literature value of `E(B)/|B|` for a ball of volume 60; reference only.
pub const BALL_60_REFERENCE: f64 = -1.3427;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Exact,
    UpperTrial,
    LowerDual,
}

impl BoundKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundKind::Exact => "exact",
            BoundKind::UpperTrial => "upper_trial",
            BoundKind::LowerDual => "lower_dual",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermoRecord {
    pub volume: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub per_volume_energy: f64,
    pub bound_kind: BoundKind,
    pub error_estimate: f64,
    /// How the value was obtained.
    pub source: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Extrapolation {
    pub model: String,
    pub value: f64,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermoSeries {
    pub s: f64,
    pub d: usize,
    pub records: Vec<ThermoRecord>,
    pub extrapolated_value: Option<f64>,
    pub extrapolation_error_estimate: Option<f64>,
    /// Fit `e(L) = e_∞ + a L^{-1/d} + b L^{-(1+s)/d}` through the last three
    /// exact records, in the side length `L`.
    pub richardson: Option<Extrapolation>,
    /// Fit `e_k = e_∞ + A r^k` through the last three exact records.
    pub geometric: Option<Extrapolation>,
    pub truncated: bool,
    pub warnings: Vec<String>,
}

impl ThermoSeries {
    fn new(s: f64, d: usize) -> Self {
        Self {
            s,
            d,
            records: Vec::new(),
            extrapolated_value: None,
            extrapolation_error_estimate: None,
            richardson: None,
            geometric: None,
            truncated: false,
            warnings: Vec::new(),
        }
    }

    /// Records of one kind in order of volume.
    pub fn of_kind(&self, kind: BoundKind) -> impl Iterator<Item = &ThermoRecord> {
        self.records.iter().filter(move |r| r.bound_kind == kind)
    }

    /// Whether records of `kind` are non-increasing in volume up to `tol`.
    pub fn is_non_increasing(&self, kind: BoundKind, tol: f64) -> bool {
        let v: Vec<f64> = self.of_kind(kind).map(|r| r.per_volume_energy).collect();
        v.windows(2).all(|w| w[1] <= w[0] + tol)
    }

    /// CSV with columns `volume,N,value,bound_kind,error_estimate`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("volume,N,value,bound_kind,error_estimate\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{:.12e},{},{:.3e}",
                r.volume,
                r.n,
                r.per_volume_energy,
                r.bound_kind.as_str(),
                r.error_estimate
            );
        }
        out
    }

    fn extrapolate(&mut self) {
        let exact: Vec<(f64, f64)> =
            self.of_kind(BoundKind::Exact).map(|r| (r.volume.powf(1.0 / self.d as f64), r.per_volume_energy)).collect();
        if exact.len() < 3 {
            return;
        }
        let exps = [1.0 / self.d as f64, (1.0 + self.s) / self.d as f64];
        let tail = &exact[exact.len() - 3..];
        let fit = |pts: &[(f64, f64)]| power_fit(pts, &exps);
        let rich = fit(tail);
        let rich_err = if exact.len() >= 4 {
            (rich - fit(&exact[exact.len() - 4..exact.len() - 1])).abs()
        } else {
            (rich - tail[2].1).abs()
        };
        let geo = geometric_fit([tail[0].1, tail[1].1, tail[2].1]);
        if let Some(g) = geo {
            let geo_err = (g - tail[2].1).abs();
            self.geometric = Some(Extrapolation { model: "geometric".into(), value: g, error_estimate: geo_err });
            if (g - rich).abs() > 2.0 * rich_err.max(1e-15) {
                self.warnings.push(format!(
                    "geometric fit {g:.6} and power-law fit {rich:.6} differ by more than twice the error estimate"
                ));
            }
        }
        self.richardson = Some(Extrapolation { model: "richardson".into(), value: rich, error_estimate: rich_err });
        self.extrapolated_value = Some(rich);
        self.extrapolation_error_estimate = Some(rich_err);
    }
}

/// Solves `e + Σ_k c_k L^{-p_k} = value` through `exps.len() + 1` points.
fn power_fit(points: &[(f64, f64)], exps: &[f64]) -> f64 {
    let n = exps.len() + 1;
    let mut a: Vec<Vec<f64>> = points[..n]
        .iter()
        .map(|(l, e)| std::iter::once(1.0).chain(exps.iter().map(|p| l.powf(-p))).chain([*e]).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    a[0][n] / a[0][0]
}

/// `e_∞` of `e_k = e_∞ + A r^k` through three consecutive terms.
fn geometric_fit(e: [f64; 3]) -> Option<f64> {
    let (d1, d2) = (e[1] - e[0], e[2] - e[1]);
    let denom = d2 - d1;
    (denom.abs() > 1e-300 && d1 != 0.0 && (d2 / d1) < 1.0 && d2 / d1 > 0.0).then(|| e[2] - d2 * d2 / denom)
}

/// Per-volume energies of `[0, 2^k]`, `k = 1..=max_level`, at unit density
/// on the line, from the exact one-dimensional solution.
pub fn cube_series_1d(s: f64, max_level: u32, max_particles: usize) -> Result<ThermoSeries> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::KernelDomain { s, d: 1 });
    }
    let mut series = ThermoSeries::new(s, 1);
    for k in 1..=max_level {
        let l = 1usize << k;
        if l > max_particles {
            series.truncated = true;
            series.warnings.push(format!("stopped before length {l}: more than {max_particles} particles"));
            break;
        }
        let rho = SegmentDensity::uniform(0.0, l as f64, 1.0)?;
        let sol = indirect_energy_1d(&rho, l, s)?;
        series.records.push(ThermoRecord {
            volume: l as f64,
            n: l,
            per_volume_energy: sol.energy / l as f64,
            bound_kind: BoundKind::Exact,
            error_estimate: sol.quadrature_error_estimate / l as f64,
            source: "monge1d".into(),
        });
    }
    series.extrapolate();
    Ok(series)
}

/// Coulomb cubes of side `2^k`, `k = 0..=max_level`, at unit density. Level 0
/// is exact (`-D(1_C,1_C)`); larger cubes carry the best of the smeared-block
/// crystal and the subadditive bound from the previous level.
pub fn cube_series_3d(max_level: u32) -> Result<ThermoSeries> {
    let mut series = ThermoSeries::new(1.0, 3);
    let e0 = -cube_self_energy();
    series.records.push(ThermoRecord {
        volume: 1.0,
        n: 1,
        per_volume_energy: e0,
        bound_kind: BoundKind::Exact,
        error_estimate: 1e-9,
        source: "single_particle".into(),
    });
    let mut best = e0;
    for k in 1..=max_level {
        let side = 1usize << k;
        let p = side.pow(3);
        let block = cubic_block_energy(side)? / p as f64;
        let source = if block < best { "smeared_block" } else { "subadditive_tensor" };
        best = best.min(block);
        series.records.push(ThermoRecord {
            volume: p as f64,
            n: p,
            per_volume_energy: best,
            bound_kind: BoundKind::UpperTrial,
            error_estimate: 1e-9,
            source: source.into(),
        });
    }
    Ok(series)
}

/// The floating crystal as a (constant) series of upper bounds.
pub fn floating_crystal_series(max_level: u32, cutoff: f64) -> Result<ThermoSeries> {
    let fc = floating_crystal_upper_bound(1.0, cutoff, None)?;
    let mut series = ThermoSeries::new(1.0, 3);
    for k in 0..=max_level {
        let v = 8f64.powi(k as i32);
        series.records.push(ThermoRecord {
            volume: v,
            n: v as usize,
            per_volume_energy: fc.e_fc,
            bound_kind: BoundKind::UpperTrial,
            error_estimate: fc.tail_bound,
            source: "floating_crystal".into(),
        });
    }
    Ok(series)
}

/// Bracket `[lower, upper]` for the unit-density Coulomb uniform gas.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UegBracket {
    pub lower: f64,
    pub lower_source: String,
    pub upper: f64,
    pub upper_source: String,
    pub candidates: Vec<(String, f64)>,
}

impl UegBracket {
    /// Starts from the Jellium lower bound and the floating crystal.
    pub fn coulomb(e_fc: f64) -> Self {
        Self {
            lower: JELLIUM_LOWER_BOUND,
            lower_source: "jellium_lower_bound".into(),
            upper: e_fc,
            upper_source: "floating_crystal".into(),
            candidates: vec![("floating_crystal".into(), e_fc)],
        }
    }

    /// Records an upper-bound candidate and tightens the bracket if it helps.
    pub fn offer_upper(&mut self, label: &str, value: f64) {
        self.candidates.push((label.into(), value));
        if value < self.upper {
            self.upper = value;
            self.upper_source = label.into();
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.lower <= self.upper
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TileBoundReport {
    pub domain: String,
    pub volume: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub per_volume_energy: f64,
    pub lower_bracket: f64,
    pub consistent: bool,
    /// Present when the value bounds the uniform-gas energy from above: the
    /// domain tiles space and the discrete density is exactly its indicator.
    pub upper_candidate: Option<f64>,
    pub method: String,
}

/// Evaluates `E(1_Ω)/|Ω|` at unit density and compares it with `lower_bracket`.
///
/// On the line the exact solution is used; in three dimensions the domain is
/// discretized with cells of side `h` and solved by the exact LP.
pub fn tile_bound_check(
    domain: &Domain,
    s: f64,
    h: f64,
    lower_bracket: f64,
    tol: f64,
    opts: &SolverOptions,
) -> Result<TileBoundReport> {
    let volume = domain.volume();
    let n = volume.round() as usize;
    if (volume - n as f64).abs() > 1e-9 || n == 0 {
        return Err(Error::NonIntegerMass { mass: volume, n });
    }
    let kind = match domain.shape() {
        Shape::Cube { .. } => "cube",
        Shape::Parallelepiped { .. } => "parallelepiped",
        Shape::Tetrahedron { .. } => "tetrahedron",
        Shape::Ball { .. } => "ball",
        Shape::Union(_) => "union",
    };
    let (value, exact_density, method) = if domain.d() == 1 {
        let (lo, hi) = domain.bounding_box();
        let rho = SegmentDensity::uniform(lo[0], hi[0], 1.0)?;
        (indirect_energy_1d(&rho, n, s)?.energy, true, "monge1d")
    } else {
        let rho = domain.discretize(h, 1.0)?;
        let full = rho.masses().iter().all(|m| (m / rho.cell_volume() - 1.0).abs() < 1e-9);
        let kernel = RieszKernel::new(s, domain.d())?;
        let km = KernelMatrix::new(rho.sites(), &kernel, DiagonalRule::CellAverage)?;
        let value = if n == 1 {
            -direct_term(&rho, &rho, &km)?
        } else {
            indirect_energy(&rho, n, &km, Method::ExactLp, opts)?.primal_upper
        };
        (value, full, "exact_lp")
    };
    let per_volume = value / volume;
    Ok(TileBoundReport {
        domain: kind.into(),
        volume,
        n,
        per_volume_energy: per_volume,
        lower_bracket,
        consistent: per_volume >= lower_bracket - tol,
        upper_candidate: (domain.tiles_space() && exact_density).then_some(per_volume),
        method: method.into(),
    })
}

//! Exact indirect energies on the line for `0 < s < 1` through the increasing
//! transport map, and the one-dimensional inequality for `-1 ≤ s < 0`.

mod segments;

pub use segments::{Segment, SegmentDensity};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmot::Coupling;
use crate::quadrature::integrate_adaptive;
use crate::riesz::{direct_term, DiagonalRule, KernelMatrix};

/// The optimal symmetric state on the line: with `F` the cumulative mass,
/// the particles sit at `F⁻¹(u), F⁻¹(u + 1), …, F⁻¹(u + N - 1)` for `u`
/// uniform on `[0, 1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Monge1DSolution {
    pub s: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Interior breakpoints `a_1 < … < a_{N-1}`.
    pub breakpoints: Vec<f64>,
    pub energy: f64,
    pub interaction: f64,
    pub direct: f64,
    pub quadrature_error_estimate: f64,
    #[serde(skip)]
    density: Option<SegmentDensity>,
}

impl Monge1DSolution {
    /// The increasing map sending each unit-mass cell onto the next one,
    /// wrapping the last cell onto the first.
    pub fn transport_map(&self, y: f64) -> f64 {
        let rho = self.density.as_ref().expect("solution carries its density");
        let u = rho.cdf(y) + 1.0;
        rho.inverse_cdf(if u >= self.n as f64 { u - self.n as f64 } else { u })
    }
}

fn check_mass(rho: &SegmentDensity, n: usize) -> Result<()> {
    let mass = rho.mass();
    if n == 0 || (mass - n as f64).abs() > 1e-8 * n as f64 {
        return Err(Error::NonIntegerMass { mass, n });
    }
    Ok(())
}

/// Positions `a_k = F⁻¹(k)`, `k = 1..N-1`, cutting `ρ` into unit masses.
pub fn breakpoints(rho: &SegmentDensity, n: usize) -> Result<Vec<f64>> {
    check_mass(rho, n)?;
    Ok((1..n).map(|k| rho.inverse_cdf(k as f64)).collect())
}

/// Exact indirect energy of a density on the line, `0 < s < 1`.
pub fn indirect_energy_1d(rho: &SegmentDensity, n: usize, s: f64) -> Result<Monge1DSolution> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::KernelDomain { s, d: 1 });
    }
    check_mass(rho, n)?;
    let cuts = breakpoints(rho, n)?;
    let (direct, direct_err) = rho.direct(s);

    // Split [0, 1] wherever one of the particles crosses a knot of ρ.
    let mut breaks = vec![0.0, 1.0];
    for knot in rho.knots() {
        let f = rho.cdf(knot);
        for k in 0..n {
            let u = f - k as f64;
            if u > 0.0 && u < 1.0 {
                breaks.push(u);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let mut collision = false;
    let mut xs = vec![0.0; n];
    let pair = integrate_adaptive(
        |u| {
            for (k, x) in xs.iter_mut().enumerate() {
                *x = rho.inverse_cdf(u + k as f64);
            }
            let mut total = 0.0;
            for j in 0..n {
                for k in j + 1..n {
                    let gap = xs[k] - xs[j];
                    if gap <= 0.0 {
                        collision = true;
                        continue;
                    }
                    total += gap.powf(-s);
                }
            }
            total
        },
        &breaks,
        1e-12,
        1e-12,
    );
    if collision {
        return Err(Error::InvalidDensity("particles collide under the transport map".into()));
    }
    Ok(Monge1DSolution {
        s,
        n,
        breakpoints: cuts,
        energy: pair.value - direct,
        interaction: pair.value,
        direct,
        quadrature_error_estimate: pair.error + direct_err,
        density: Some(rho.clone()),
    })
}

fn check_negative(s: f64) -> Result<()> {
    if !(-1.0..0.0).contains(&s) {
        return Err(Error::KernelDomain { s, d: 1 });
    }
    Ok(())
}

/// `-Σ_{j<k} |x_j - x_k|^{|s|} + Σ_j ∫ρ(y)|x_j - y|^{|s|} dy - ½∫∫ρρ|x-y|^{|s|}`
/// for one configuration; nonnegative whenever `∫ρ = N`.
pub fn lo_defect_configuration(points: &[f64], rho: &SegmentDensity, s: f64) -> Result<f64> {
    check_negative(s)?;
    check_mass(rho, points.len())?;
    let a = -s;
    let mut pairs = 0.0;
    for (j, x) in points.iter().enumerate() {
        for y in &points[j + 1..] {
            pairs += (x - y).abs().powf(a);
        }
    }
    let potential: f64 = points.iter().map(|&x| rho.potential(x, s)).sum();
    Ok(-pairs + potential - rho.direct(s).0)
}

/// `-C(P) + D(ρ_P, ρ_P)` for the growing kernel `|x-y|^{|s|}` with cell averaged
/// entries; nonnegative for every coupling.
pub fn lo_defect_coupling(coupling: &Coupling, s: f64) -> Result<f64> {
    check_negative(s)?;
    if coupling.sites().d() != 1 {
        return Err(Error::Dimension(coupling.sites().d()));
    }
    let kernel = KernelMatrix::with_exponent(coupling.sites(), s, DiagonalRule::CellAverage)?;
    let rho = coupling.marginal();
    Ok(-coupling.interaction_energy(&kernel) + direct_term(&rho, &rho, &kernel)?)
}

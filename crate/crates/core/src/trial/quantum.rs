//! Closed-form quantum bounds from quasi-free trial states.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gc::{default_max_n, gc_indirect_energy};
use crate::mmot::SolverOptions;
use crate::quadrature::{integrate_adaptive, GaussLegendre};
use crate::riesz::{cell_pair_average_with, direct_term, DiagonalRule, GridDensity, KernelMatrix, RieszKernel};

/// Best known Lieb–Oxford constant for the Coulomb case.
pub const LIEB_OXFORD_COULOMB: f64 = 1.64;

/// `(c_TF, c_D)` for `q` spin states.
pub fn tf_dirac_constants(q: u32) -> Result<(f64, f64)> {
    if q < 1 {
        return Err(Error::arg("the number of spin states must be at least 1"));
    }
    let q = q as f64;
    let c_tf = 0.6 * (6.0 * PI * PI / q).powf(2.0 / 3.0);
    let c_d = 0.75 * (6.0 / (q * PI)).cbrt();
    Ok((c_tf, c_d))
}

/// Fermi momentum of the unit-density gas: `k_F^3 = 6π²/q`.
pub fn fermi_momentum(q: u32) -> f64 {
    (6.0 * PI * PI / q as f64).cbrt()
}

/// `3 j_1(u) / u`, equal to 1 at `u = 0`.
fn bessel_ratio(u: f64) -> f64 {
    if u < 1e-2 {
        let u2 = u * u;
        1.0 - u2 / 10.0 + u2 * u2 / 280.0
    } else {
        3.0 * (u.sin() - u * u.cos()) / (u * u * u)
    }
}

/// Exchange pair function: the quasi-free exchange energy is
/// `∫∫ ρ(x) ρ(y) g(|x - y|) dx dy`.
pub fn exchange_pair_function(r: f64, q: u32) -> f64 {
    let u = fermi_momentum(q) * r;
    bessel_ratio(u).powi(2) / (2.0 * q as f64 * r)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantumBoundReport {
    pub hbar2: f64,
    pub q: u32,
    /// `ħ² ∫|∇√ρ|² + ħ² c_TF ∫ρ`.
    pub upper: f64,
    /// `upper` minus the quasi-free exchange term.
    pub refined_upper: f64,
    /// `ħ² ∫|∇√ρ|²` plus a lower bound on the classical indirect energy.
    pub lower: f64,
    pub gradient_term: f64,
    pub tf_term: f64,
    pub exchange: f64,
    pub exchange_error: f64,
    /// `exact_lp`, `gc_lp`, `minus_direct` or `lieb_oxford`.
    pub lower_source: String,
    pub classical_lower: f64,
    pub mass: f64,
}

fn check_hbar(hbar2: f64) -> Result<()> {
    if !(hbar2 >= 0.0 && hbar2.is_finite()) {
        return Err(Error::arg(format!("ħ² = {hbar2} must be nonnegative")));
    }
    Ok(())
}

/// Quasi-free bounds for a density on a cubic grid in three dimensions.
pub fn quasi_free_bound(rho: &GridDensity, hbar2: f64, q: u32, opts: &SolverOptions) -> Result<QuantumBoundReport> {
    check_hbar(hbar2)?;
    let (c_tf, _) = tf_dirac_constants(q)?;
    if rho.d() != 3 {
        return Err(Error::Dimension(rho.d()));
    }
    if rho.max_value() > 1.0 + 1e-12 {
        return Err(Error::InvalidDensity(format!("density reaches {} > 1", rho.max_value())));
    }
    let sites = rho.sites();
    let h = sites.h();
    let vol = sites.cell_volume();
    let origin = sites.point(0);
    let mut keys = Vec::with_capacity(sites.len());
    for p in sites.points() {
        let x: [f64; 3] = std::array::from_fn(|i| (p[i] - origin[i]) / h);
        let k = x.map(|v| v.round() as i64);
        if (0..3).any(|i| (x[i] - k[i] as f64).abs() > 1e-6) {
            return Err(Error::Geometry("quasi-free bounds need sites on a cubic lattice".into()));
        }
        keys.push(k);
    }
    let index: BTreeMap<[i64; 3], usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();

    // Forward differences of √ρ on the infinite lattice, ρ = 0 off the grid.
    let root: Vec<f64> = (0..rho.len()).map(|i| rho.value(i).max(0.0).sqrt()).collect();
    let mut gradient = 0.0;
    for (i, k) in keys.iter().enumerate() {
        for axis in 0..3 {
            for step in [-1i64, 1] {
                let mut nb = *k;
                nb[axis] += step;
                match index.get(&nb) {
                    Some(&j) if step == 1 => gradient += (root[i] - root[j]).powi(2),
                    Some(_) => {}
                    None => gradient += root[i] * root[i],
                }
            }
        }
    }
    gradient *= vol / (h * h);

    // Exchange: cell-pair averages of g, cached by canonical offset.
    let support = rho.support();
    let mut offsets: BTreeMap<[i64; 3], f64> = BTreeMap::new();
    for &i in &support {
        for &j in &support {
            offsets.insert(canonical(keys[i], keys[j]), 0.0);
        }
    }
    let g = |r: f64| exchange_pair_function(r, q);
    let values: Vec<f64> = offsets.keys().collect::<Vec<_>>().par_iter().map(|m| cell_pair_average_with(&m[..], h, &g)).collect();
    offsets.values_mut().zip(values).for_each(|(v, x)| *v = x);
    let mut exchange = 0.0;
    for &i in &support {
        let row: f64 = support.iter().map(|&j| rho.mass(j) * offsets[&canonical(keys[i], keys[j])]).sum();
        exchange += rho.mass(i) * row;
    }

    let mass = rho.total_mass();
    let km = KernelMatrix::new(sites, &RieszKernel::coulomb(), DiagonalRule::CellAverage)?;
    let (classical_lower, source) = match gc_indirect_energy(rho, default_max_n(rho), &km, opts) {
        Ok((report, _)) => (report.dual_lower, "gc_lp"),
        Err(Error::BudgetExceeded { .. }) => (-direct_term(rho, rho, &km)?, "minus_direct"),
        Err(e) => return Err(e),
    };
    let tf_term = hbar2 * c_tf * mass;
    let upper = hbar2 * gradient + tf_term;
    Ok(QuantumBoundReport {
        hbar2,
        q,
        upper,
        refined_upper: upper - exchange,
        lower: hbar2 * gradient + classical_lower,
        gradient_term: hbar2 * gradient,
        tf_term,
        exchange,
        exchange_error: 0.0,
        lower_source: source.into(),
        classical_lower,
        mass,
    })
}

fn canonical(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    let mut m = [(a[0] - b[0]).abs(), (a[1] - b[1]).abs(), (a[2] - b[2]).abs()];
    m.sort_unstable();
    m
}

/// The profile `1_{[0,L]} * φ` with `φ(x) = (15/(8w)) (1 - (2x/w)²)²` on `|x| ≤ w/2`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SmoothedBox {
    pub side: f64,
    pub width: f64,
}

impl SmoothedBox {
    pub fn new(side: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && side >= width) {
            return Err(Error::arg(format!("need 0 < width ≤ side, got side {side}, width {width}")));
        }
        Ok(Self { side, width })
    }

    fn mollifier(&self, x: f64) -> f64 {
        let t = 2.0 * x / self.width;
        if t.abs() >= 1.0 {
            0.0
        } else {
            15.0 / (8.0 * self.width) * (1.0 - t * t).powi(2)
        }
    }

    fn mollifier_cdf(&self, x: f64) -> f64 {
        let t = (2.0 * x / self.width).clamp(-1.0, 1.0);
        15.0 / 16.0 * (t - 2.0 * t.powi(3) / 3.0 + t.powi(5) / 5.0 + 8.0 / 15.0)
    }

    /// One-dimensional factor of the density.
    pub fn profile(&self, x: f64) -> f64 {
        self.mollifier_cdf(x) - self.mollifier_cdf(x - self.side)
    }

    fn profile_derivative(&self, x: f64) -> f64 {
        self.mollifier(x) - self.mollifier(x - self.side)
    }

    fn knots(&self) -> [f64; 4] {
        let hw = 0.5 * self.width;
        [-hw, hw, self.side - hw, self.side + hw]
    }

    /// `∫ρ = L³`.
    pub fn mass(&self) -> f64 {
        self.side.powi(3)
    }

    /// `∫|∇√ρ|² = 3 L² ∫ (ρ₁')² / (4ρ₁)`.
    pub fn gradient_integral(&self) -> f64 {
        let k = self.knots();
        let f = |x: f64| {
            let p = self.profile(x);
            if p <= 0.0 {
                0.0
            } else {
                self.profile_derivative(x).powi(2) / (4.0 * p)
            }
        };
        let one_d = integrate_adaptive(&f, &[k[0], k[1]], 1e-13, 1e-11).value
            + integrate_adaptive(&f, &[k[2], k[3]], 1e-13, 1e-11).value;
        3.0 * self.side * self.side * one_d
    }

    /// `∫ρ^{4/3} = (∫ρ₁^{4/3})³`.
    pub fn lda_integral(&self) -> f64 {
        let k = self.knots();
        let f = |x: f64| self.profile(x).max(0.0).powf(4.0 / 3.0);
        integrate_adaptive(&f, &k, 1e-13, 1e-11).value.powi(3)
    }

    /// `a(t) = ∫ρ₁(x)ρ₁(x+t)dx`, exact for this piecewise polynomial profile.
    pub fn autocorrelation(&self, t: f64) -> f64 {
        let t = t.abs();
        let k = self.knots();
        let mut breaks: Vec<f64> = k.iter().copied().chain(k.iter().map(|x| x - t)).filter(|x| *x >= k[0] - t).collect();
        breaks.retain(|x| *x >= k[0] && *x <= k[3] - t);
        breaks.push(k[0]);
        breaks.push(k[3] - t);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let rule = gauss8();
        breaks
            .windows(2)
            .map(|w| rule.integrate(w[0], w[1], |x| self.profile(x) * self.profile(x + t)))
            .sum()
    }
}

fn gauss8() -> &'static GaussLegendre {
    static RULE: std::sync::OnceLock<GaussLegendre> = std::sync::OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

/// Tabulated autocorrelation with linear interpolation.
struct AutoTable {
    step: f64,
    values: Vec<f64>,
}

impl AutoTable {
    fn new(profile: &SmoothedBox, step: f64) -> Self {
        let end = profile.side + profile.width;
        let n = (end / step).ceil() as usize + 1;
        let values = (0..=n).into_par_iter().map(|k| profile.autocorrelation(k as f64 * step)).collect();
        Self { step, values }
    }

    fn get(&self, t: f64) -> f64 {
        let x = t.abs() / self.step;
        let k = x.floor() as usize;
        if k + 1 >= self.values.len() {
            return 0.0;
        }
        let f = x - k as f64;
        self.values[k] * (1.0 - f) + self.values[k + 1] * f
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExchangeEstimate {
    pub side: f64,
    pub width: f64,
    pub q: u32,
    pub volume: f64,
    pub exchange: f64,
    pub per_volume: f64,
    pub c_d: f64,
    pub relative_to_dirac: f64,
    /// Difference to the same integral on a twice coarser quadrature.
    pub quadrature_error: f64,
}

fn box_exchange_with(table: &AutoTable, reach: f64, q: u32, angular: usize, panel: f64) -> f64 {
    let ang = GaussLegendre::unit(angular);
    let rad = gauss8();
    let half_pi = 0.5 * PI;
    let dirs: Vec<([f64; 3], f64)> = ang
        .nodes
        .iter()
        .zip(&ang.weights)
        .flat_map(|(&mu, &wm)| {
            ang.nodes.iter().zip(&ang.weights).map(move |(&t, &wp)| {
                let phi = half_pi * t;
                let s = (1.0 - mu * mu).sqrt();
                ([s * phi.cos(), s * phi.sin(), mu], wm * wp * half_pi)
            })
        })
        .collect();
    let panels = (reach / panel).ceil() as usize;
    let per_panel: Vec<f64> = (0..panels)
        .into_par_iter()
        .map(|k| {
            let (a, b) = (k as f64 * panel, ((k + 1) as f64 * panel).min(reach));
            rad.integrate(a, b, |r| {
                let sphere: f64 = dirs
                    .iter()
                    .map(|(w, c)| c * table.get(r * w[0]) * table.get(r * w[1]) * table.get(r * w[2]))
                    .sum();
                8.0 * r * r * exchange_pair_function(r, q) * sphere
            })
        })
        .collect();
    per_panel.iter().sum()
}

/// Quasi-free exchange energy of the smoothed box, `∫∫ρρ g = ∫ g(|z|) Π a(z_i) dz`.
pub fn smoothed_box_exchange(profile: &SmoothedBox, q: u32, angular: usize) -> Result<ExchangeEstimate> {
    let (_, c_d) = tf_dirac_constants(q)?;
    if angular < 2 {
        return Err(Error::arg("need at least 2 angular nodes"));
    }
    let table = AutoTable::new(profile, 1e-3);
    let reach = 3f64.sqrt() * (profile.side + profile.width);
    let panel = 0.25 * PI / fermi_momentum(q);
    let fine = box_exchange_with(&table, reach, q, angular, panel);
    let coarse = box_exchange_with(&table, reach, q, angular.div_ceil(2), 2.0 * panel);
    let volume = profile.mass();
    Ok(ExchangeEstimate {
        side: profile.side,
        width: profile.width,
        q,
        volume,
        exchange: fine,
        per_volume: fine / volume,
        c_d,
        relative_to_dirac: fine / volume / c_d,
        quadrature_error: (fine - coarse).abs(),
    })
}

/// Quasi-free bounds for the smoothed box; the lower side uses the
/// Lieb–Oxford inequality.
pub fn smoothed_box_bound(profile: &SmoothedBox, hbar2: f64, q: u32) -> Result<QuantumBoundReport> {
    check_hbar(hbar2)?;
    let (c_tf, _) = tf_dirac_constants(q)?;
    let x = smoothed_box_exchange(profile, q, 24)?;
    let gradient = hbar2 * profile.gradient_integral();
    let tf_term = hbar2 * c_tf * profile.mass();
    let classical_lower = -LIEB_OXFORD_COULOMB * profile.lda_integral();
    Ok(QuantumBoundReport {
        hbar2,
        q,
        upper: gradient + tf_term,
        refined_upper: gradient + tf_term - x.exchange,
        lower: gradient + classical_lower,
        gradient_term: gradient,
        tf_term,
        exchange: x.exchange,
        exchange_error: x.quadrature_error,
        lower_source: "lieb_oxford".into(),
        classical_lower,
        mass: profile.mass(),
    })
}

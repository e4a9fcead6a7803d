use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Centers of equal cubic cells of side `h` in dimension `d`. Unused
/// coordinates of the `[f64; 3]` points are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSet {
    d: usize,
    h: f64,
    points: Vec<[f64; 3]>,
}

impl SiteSet {
    pub fn new(d: usize, h: f64, points: Vec<[f64; 3]>) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Dimension(d));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Geometry(format!("cell side must be positive, got {h}")));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            if p.iter().any(|x| !x.is_finite()) || p[d..].iter().any(|&x| x != 0.0) {
                return Err(Error::Geometry(format!("bad site coordinates {p:?} for d = {d}")));
            }
            let key: [i64; 3] = std::array::from_fn(|k| (p[k] / h * 1e6).round() as i64);
            if !seen.insert(key) {
                return Err(Error::Geometry(format!("duplicate site {p:?}")));
            }
        }
        Ok(Self { d, h, points })
    }

    /// Cell centers of a regular grid with lower corner `origin` and `counts[k]`
    /// cells along axis `k` (only the first `d` counts are used).
    pub fn grid(d: usize, h: f64, origin: [f64; 3], counts: [usize; 3]) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Dimension(d));
        }
        let n: [usize; 3] = std::array::from_fn(|k| if k < d { counts[k] } else { 1 });
        let mut points = Vec::with_capacity(n[0] * n[1] * n[2]);
        for i in 0..n[0] {
            for j in 0..n[1] {
                for l in 0..n[2] {
                    let idx = [i, j, l];
                    points.push(std::array::from_fn(|k| {
                        if k < d {
                            origin[k] + (idx[k] as f64 + 0.5) * h
                        } else {
                            0.0
                        }
                    }));
                }
            }
        }
        Self::new(d, h, points)
    }

    /// `cells` equal cells covering `[a, b]`.
    pub fn interval(a: f64, b: f64, cells: usize) -> Result<Self> {
        if !(b > a) || cells == 0 {
            return Err(Error::Geometry(format!("empty interval [{a}, {b}] with {cells} cells")));
        }
        Self::grid(1, (b - a) / cells as f64, [a, 0.0, 0.0], [cells, 1, 1])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn point(&self, i: usize) -> [f64; 3] {
        self.points[i]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.points[i], self.points[j]);
        (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
    }

    /// All coordinates and the cell side multiplied by `factor`.
    pub fn dilated(&self, factor: f64) -> Self {
        Self {
            d: self.d,
            h: self.h * factor,
            points: self.points.iter().map(|p| p.map(|x| x * factor)).collect(),
        }
    }

    pub fn translated(&self, shift: [f64; 3]) -> Self {
        let mut shift = shift;
        shift[self.d..].iter_mut().for_each(|x| *x = 0.0);
        Self {
            d: self.d,
            h: self.h,
            points: self.points.iter().map(|p| std::array::from_fn(|k| p[k] + shift[k])).collect(),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self { d: self.d, h: self.h, points: indices.iter().map(|&i| self.points[i]).collect() }
    }

    /// Concatenation of two site sets with equal `d` and `h`.
    pub fn union(&self, other: &SiteSet) -> Result<Self> {
        if self.d != other.d || (self.h - other.h).abs() > 1e-12 * self.h {
            return Err(Error::Geometry("site sets with different dimension or cell size".into()));
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        Self::new(self.d, self.h, points)
    }
}

/// JSON summary of a grid density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityDescriptor {
    pub s: Option<f64>,
    pub d: usize,
    pub cell_volume: f64,
    pub total_mass: f64,
    pub sites: usize,
}

/// Nonnegative masses attached to the cells of a [`SiteSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    sites: Arc<SiteSet>,
    masses: Vec<f64>,
    total: f64,
}

impl GridDensity {
    pub fn new(sites: Arc<SiteSet>, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != sites.len() {
            return Err(Error::InvalidDensity(format!(
                "{} masses for {} sites",
                masses.len(),
                sites.len()
            )));
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::InvalidDensity(format!("mass {m} is not a nonnegative number")));
        }
        let total = masses.iter().sum();
        Ok(Self { sites, masses, total })
    }

    pub fn zeros(sites: Arc<SiteSet>) -> Self {
        let n = sites.len();
        Self { sites, masses: vec![0.0; n], total: 0.0 }
    }

    /// Masses `f(center) * cell_volume` from a pointwise density.
    pub fn from_fn(sites: Arc<SiteSet>, f: impl Fn(&[f64; 3]) -> f64) -> Result<Self> {
        let vol = sites.cell_volume();
        let masses = sites.points().iter().map(|p| f(p) * vol).collect();
        Self::new(sites, masses)
    }

    /// One row per site with columns `x[,y,z],mass`.
    pub fn to_csv(&self) -> String {
        let d = self.d();
        let mut out = ["x", "y", "z"][..d].join(",") + ",mass\n";
        for (p, m) in self.sites.points().iter().zip(&self.masses) {
            for c in &p[..d] {
                out.push_str(&format!("{c:?},"));
            }
            out.push_str(&format!("{m:?}\n"));
        }
        out
    }

    /// Reads the output of [`GridDensity::to_csv`] for cells of side `h`.
    pub fn from_csv(text: &str, h: f64) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::InvalidDensity("empty CSV".into()))?;
        let d = header.split(',').count().saturating_sub(1);
        if header.split(',').next_back().map(str::trim) != Some("mass") {
            return Err(Error::InvalidDensity(format!("last CSV column must be mass, got '{header}'")));
        }
        let mut points = Vec::new();
        let mut masses = Vec::new();
        for line in lines {
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidDensity(format!("bad CSV row '{line}': {e}")))?;
            if fields.len() != d + 1 {
                return Err(Error::InvalidDensity(format!("row '{line}' has {} fields", fields.len())));
            }
            let mut p = [0.0; 3];
            p[..d].copy_from_slice(&fields[..d]);
            points.push(p);
            masses.push(fields[d]);
        }
        Self::new(Arc::new(SiteSet::new(d, h, points)?), masses)
    }

    pub fn descriptor(&self, s: Option<f64>) -> DensityDescriptor {
        DensityDescriptor { s, d: self.d(), cell_volume: self.cell_volume(), total_mass: self.total, sites: self.len() }
    }

    /// Constant density `rho0` on `[a, b]` discretized with `cells` cells.
    pub fn uniform_interval(a: f64, b: f64, cells: usize, rho0: f64) -> Result<Self> {
        let sites = Arc::new(SiteSet::interval(a, b, cells)?);
        Self::from_fn(sites, |_| rho0)
    }

    pub fn sites(&self) -> &Arc<SiteSet> {
        &self.sites
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn d(&self) -> usize {
        self.sites.d()
    }

    pub fn cell_volume(&self) -> f64 {
        self.sites.cell_volume()
    }

    /// Density value (mass per volume) in cell `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.masses[i] / self.cell_volume()
    }

    pub fn max_value(&self) -> f64 {
        self.masses.iter().fold(0.0f64, |a, &m| a.max(m)) / self.cell_volume()
    }

    /// `∫ ρ^p` for the piecewise constant density.
    pub fn integral_power(&self, p: f64) -> f64 {
        let vol = self.cell_volume();
        self.masses.iter().filter(|&&m| m > 0.0).map(|m| vol * (m / vol).powf(p)).sum()
    }

    /// Indices of cells with positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.masses[i] > 0.0).collect()
    }

    pub fn same_geometry(&self, other: &GridDensity) -> bool {
        Arc::ptr_eq(&self.sites, &other.sites) || *self.sites == *other.sites
    }

    pub fn on_sites(&self, sites: &Arc<SiteSet>) -> bool {
        Arc::ptr_eq(&self.sites, sites) || *self.sites == **sites
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.sites.clone(), self.masses.iter().map(|m| m * factor).collect())
    }

    pub fn plus(&self, other: &GridDensity) -> Result<Self> {
        if !self.same_geometry(other) {
            return Err(Error::Geometry("densities live on different site sets".into()));
        }
        Self::new(
            self.sites.clone(),
            self.masses.iter().zip(&other.masses).map(|(a, b)| a + b).collect(),
        )
    }

    /// The density multiplied by the indicator of the cells with `mask[i]`.
    pub fn restricted(&self, mask: &[bool]) -> Self {
        let masses: Vec<f64> =
            self.masses.iter().zip(mask).map(|(&m, &keep)| if keep { m } else { 0.0 }).collect();
        let total = masses.iter().sum();
        Self { sites: self.sites.clone(), masses, total }
    }

    /// Same masses on a different but equally sized site set.
    pub fn with_sites(&self, sites: Arc<SiteSet>) -> Result<Self> {
        Self::new(sites, self.masses.clone())
    }

    /// Returns `true` when the total mass is within `tol` of an integer.
    pub fn integer_mass(&self, tol: f64) -> Option<usize> {
        let n = self.total.round();
        ((self.total - n).abs() <= tol * n.max(1.0) && n >= 0.0).then_some(n as usize)
    }
}

/// The family `N ↦ ρ(·/N^{1/d})` generated by a base density.
#[derive(Debug, Clone)]
pub struct ScaledFamily {
    base: GridDensity,
}

/// A member of a [`ScaledFamily`]; `integer_mass` is false when the dilated
/// density can only feed grand-canonical consumers.
#[derive(Debug, Clone)]
pub struct ScaledDensity {
    pub density: GridDensity,
    pub integer_mass: bool,
}

impl ScaledFamily {
    pub fn new(base: GridDensity) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &GridDensity {
        &self.base
    }

    pub fn member(&self, n: f64) -> Result<ScaledDensity> {
        if !(n >= 1.0 && n.is_finite()) {
            return Err(Error::arg(format!("scale index must be at least 1, got {n}")));
        }
        let factor = n.powf(1.0 / self.base.d() as f64);
        let sites = Arc::new(self.base.sites().dilated(factor));
        let density = GridDensity::new(sites, self.base.masses().iter().map(|m| m * n).collect())?;
        let integer_mass = density.integer_mass(1e-9).is_some();
        Ok(ScaledDensity { density, integer_mass })
    }
}

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, GaussLegendre};
use crate::riesz::{GridDensity, SiteSet};

/// A linear piece of a one-dimensional density on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub va: f64,
    pub vb: f64,
}

impl Segment {
    fn slope(&self) -> f64 {
        (self.vb - self.va) / (self.b - self.a)
    }

    fn value(&self, x: f64) -> f64 {
        self.va + self.slope() * (x - self.a)
    }

    /// Mass on `[a, x]`.
    fn mass_to(&self, x: f64) -> f64 {
        let t = x - self.a;
        t * (self.va + 0.5 * self.slope() * t)
    }

    fn mass(&self) -> f64 {
        0.5 * (self.va + self.vb) * (self.b - self.a)
    }

    /// `∫_a^b ρ(y) |x - y|^{-p} dy` in closed form.
    fn potential(&self, x: f64, p: f64) -> f64 {
        let beta = self.slope();
        let alpha = self.va - beta * self.a;
        let a0 = |t: f64| t.signum() * t.abs().powf(1.0 - p) / (1.0 - p);
        let a1 = |t: f64| t.abs().powf(2.0 - p) / (2.0 - p);
        let (t0, t1) = (self.a - x, self.b - x);
        (alpha + beta * x) * (a0(t1) - a0(t0)) + beta * (a1(t1) - a1(t0))
    }
}

/// A compactly supported, piecewise linear density on the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDensity {
    segments: Vec<Segment>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl SegmentDensity {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidDensity("no segments".into()));
        }
        for (k, s) in segments.iter().enumerate() {
            if !(s.b > s.a) || !(s.va >= 0.0 && s.vb >= 0.0) || !s.va.is_finite() || !s.vb.is_finite() {
                return Err(Error::InvalidDensity(format!("bad segment {s:?}")));
            }
            if k > 0 && s.a < segments[k - 1].b {
                return Err(Error::InvalidDensity("segments overlap or are unsorted".into()));
            }
        }
        let mut cumulative = Vec::with_capacity(segments.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for s in &segments {
            acc += s.mass();
            cumulative.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::InvalidDensity("zero total mass".into()));
        }
        Ok(Self { segments, cumulative })
    }

    /// Constant density `rho0` on `[a, b]`.
    pub fn uniform(a: f64, b: f64, rho0: f64) -> Result<Self> {
        Self::new(vec![Segment { a, b, va: rho0, vb: rho0 }])
    }

    /// Piecewise constant density with `values[k]` on `[edges[k], edges[k+1]]`.
    pub fn step(edges: &[f64], values: &[f64]) -> Result<Self> {
        if edges.len() != values.len() + 1 {
            return Err(Error::InvalidDensity("need one more edge than values".into()));
        }
        Self::new(
            values
                .iter()
                .enumerate()
                .map(|(k, &v)| Segment { a: edges[k], b: edges[k + 1], va: v, vb: v })
                .collect(),
        )
    }

    /// Linear density from `va` at `a` to `vb` at `b`.
    pub fn linear(a: f64, b: f64, va: f64, vb: f64) -> Result<Self> {
        Self::new(vec![Segment { a, b, va, vb }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn mass(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }

    pub fn support(&self) -> (f64, f64) {
        (self.segments[0].a, self.segments[self.segments.len() - 1].b)
    }

    /// Segment end points, sorted and deduplicated.
    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.segments.iter().flat_map(|s| [s.a, s.b]).collect();
        k.dedup();
        k
    }

    pub fn value(&self, x: f64) -> f64 {
        self.segments.iter().find(|s| x >= s.a && x <= s.b).map_or(0.0, |s| s.value(x))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.segments.partition_point(|s| s.b <= x);
        if k == self.segments.len() {
            return self.mass();
        }
        let s = &self.segments[k];
        self.cumulative[k] + if x > s.a { s.mass_to(x) } else { 0.0 }
    }

    /// Smallest `x` with `F(x) = u`, by bisection to `1e-12`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, self.mass());
        let k = self.cumulative[1..].partition_point(|&c| c < u).min(self.segments.len() - 1);
        let s = &self.segments[k];
        let target = u - self.cumulative[k];
        let (mut lo, mut hi) = (s.a, s.b);
        while hi - lo > 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
            let mid = 0.5 * (lo + hi);
            if s.mass_to(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The density `x ↦ ρ(x / λ)`.
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.segments
                .iter()
                .map(|s| Segment { a: s.a * lambda, b: s.b * lambda, ..*s })
                .collect(),
        )
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.segments
                .iter()
                .map(|s| Segment { va: s.va * factor, vb: s.vb * factor, ..*s })
                .collect(),
        )
    }

    /// `∫ ρ^p`.
    pub fn integral_power(&self, p: f64) -> f64 {
        let g = GaussLegendre::new(20);
        self.segments.iter().map(|s| g.integrate(s.a, s.b, |x| s.value(x).max(0.0).powf(p))).sum()
    }

    /// `∫ ρ(y) |x - y|^{-p} dy` for any `p < 1`.
    pub fn potential(&self, x: f64, p: f64) -> f64 {
        self.segments.iter().map(|s| s.potential(x, p)).sum()
    }

    /// `D = ½ ∫∫ ρ(x) ρ(y) |x - y|^{-p}` with the inner integral in closed form.
    pub fn direct(&self, p: f64) -> (f64, f64) {
        let knots = self.knots();
        let r = integrate_adaptive(|x| self.value(x) * self.potential(x, p), &knots, 1e-13, 1e-12);
        (0.5 * r.value, 0.5 * r.error)
    }

    /// Cell masses on `cells` equal cells covering the support.
    pub fn discretize(&self, cells: usize) -> Result<GridDensity> {
        let (a, b) = self.support();
        let sites = Arc::new(SiteSet::interval(a, b, cells)?);
        let h = sites.h();
        let masses = (0..cells)
            .map(|k| (self.cdf(a + (k + 1) as f64 * h) - self.cdf(a + k as f64 * h)).max(0.0))
            .collect();
        GridDensity::new(sites, masses)
    }
}

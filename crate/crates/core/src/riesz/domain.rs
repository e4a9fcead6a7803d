use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GridDensity, SiteSet};
use crate::error::{Error, Result};
use crate::quadrature::halton;

type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
fn scale(a: V3, t: f64) -> V3 {
    [a[0] * t, a[1] * t, a[2] * t]
}
fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}
fn det3(a: V3, b: V3, c: V3) -> f64 {
    dot(a, cross(b, c))
}

/// Geometric shapes in up to three dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Cube { origin: V3, side: f64 },
    Ball { center: V3, radius: f64 },
    Tetrahedron { vertices: [V3; 4] },
    Parallelepiped { origin: V3, edges: [V3; 3] },
    /// Parts with pairwise disjoint interiors.
    Union(Vec<Domain>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    d: usize,
    shape: Shape,
}

impl Domain {
    pub fn cube(d: usize, origin: V3, side: f64) -> Result<Self> {
        check_dim(d)?;
        if !(side > 0.0) {
            return Err(Error::Geometry(format!("cube side must be positive, got {side}")));
        }
        Ok(Self { d, shape: Shape::Cube { origin: truncate(origin, d), side } })
    }

    pub fn ball(d: usize, center: V3, radius: f64) -> Result<Self> {
        check_dim(d)?;
        if !(radius > 0.0) {
            return Err(Error::Geometry(format!("radius must be positive, got {radius}")));
        }
        Ok(Self { d, shape: Shape::Ball { center: truncate(center, d), radius } })
    }

    pub fn tetrahedron(vertices: [V3; 4]) -> Result<Self> {
        let v = det3(sub(vertices[1], vertices[0]), sub(vertices[2], vertices[0]), sub(vertices[3], vertices[0]));
        if v.abs() < 1e-14 {
            return Err(Error::Geometry("degenerate tetrahedron".into()));
        }
        Ok(Self { d: 3, shape: Shape::Tetrahedron { vertices } })
    }

    /// Regular tetrahedron of the given volume centered at the origin.
    pub fn regular_tetrahedron(volume: f64) -> Result<Self> {
        // The alternate corners of [-1,1]^3 span a regular tetrahedron of volume 8/3.
        let a = (volume * 3.0 / 8.0).cbrt();
        Self::tetrahedron([[a, a, a], [a, -a, -a], [-a, a, -a], [-a, -a, a]])
    }

    /// The simplex `0 ≤ x ≤ y ≤ z ≤ side`; six congruent copies fill a cube, so
    /// it tiles space.
    pub fn path_tetrahedron(side: f64) -> Result<Self> {
        Self::tetrahedron([[0.0; 3], [0.0, 0.0, side], [0.0, side, side], [side, side, side]])
    }

    pub fn parallelepiped(origin: V3, edges: [V3; 3]) -> Result<Self> {
        if det3(edges[0], edges[1], edges[2]).abs() < 1e-14 {
            return Err(Error::Geometry("degenerate parallelepiped".into()));
        }
        Ok(Self { d: 3, shape: Shape::Parallelepiped { origin, edges } })
    }

    pub fn union(parts: Vec<Domain>) -> Result<Self> {
        let d = parts.first().ok_or_else(|| Error::Geometry("empty union".into()))?.d;
        if parts.iter().any(|p| p.d != d) {
            return Err(Error::Geometry("union of domains in different dimensions".into()));
        }
        Ok(Self { d, shape: Shape::Union(parts) })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn volume(&self) -> f64 {
        match &self.shape {
            Shape::Cube { side, .. } => side.powi(self.d as i32),
            Shape::Ball { radius, .. } => {
                let unit = match self.d {
                    1 => 2.0,
                    2 => std::f64::consts::PI,
                    _ => 4.0 / 3.0 * std::f64::consts::PI,
                };
                unit * radius.powi(self.d as i32)
            }
            Shape::Tetrahedron { vertices: v } => {
                det3(sub(v[1], v[0]), sub(v[2], v[0]), sub(v[3], v[0])).abs() / 6.0
            }
            Shape::Parallelepiped { edges, .. } => det3(edges[0], edges[1], edges[2]).abs(),
            Shape::Union(parts) => parts.iter().map(Domain::volume).sum(),
        }
    }

    /// Whether translated copies of this shape are known to tile space.
    pub fn tiles_space(&self) -> bool {
        match &self.shape {
            Shape::Cube { .. } | Shape::Parallelepiped { .. } => true,
            // A one-dimensional ball is an interval.
            Shape::Ball { .. } => self.d == 1,
            Shape::Union(_) => false,
            // Only the path simplex anchored at the origin is recognised.
            Shape::Tetrahedron { vertices } => {
                Domain::path_tetrahedron(vertices[3][0]).is_ok_and(|t| t.shape == self.shape)
            }
        }
    }

    pub fn contains(&self, x: &V3) -> bool {
        match &self.shape {
            Shape::Cube { origin, side } => (0..self.d).all(|k| x[k] >= origin[k] && x[k] <= origin[k] + side),
            Shape::Ball { center, radius } => {
                (0..self.d).map(|k| (x[k] - center[k]).powi(2)).sum::<f64>() <= radius * radius
            }
            Shape::Tetrahedron { vertices } => barycentric(vertices, *x).iter().all(|&b| b >= 0.0),
            Shape::Parallelepiped { origin, edges } => {
                let c = solve3(edges, sub(*x, *origin));
                c.iter().all(|&t| (0.0..=1.0).contains(&t))
            }
            Shape::Union(parts) => parts.iter().any(|p| p.contains(x)),
        }
    }

    pub fn bounding_box(&self) -> (V3, V3) {
        let d = self.d;
        let (lo, hi) = match &self.shape {
            Shape::Cube { origin, side } => (*origin, origin.map(|o| o + side)),
            Shape::Ball { center, radius } => (center.map(|c| c - radius), center.map(|c| c + radius)),
            Shape::Tetrahedron { vertices } => extent(vertices),
            Shape::Parallelepiped { origin, edges } => {
                let mut corners = Vec::with_capacity(8);
                for mask in 0..8 {
                    let mut p = *origin;
                    for (k, e) in edges.iter().enumerate() {
                        if mask >> k & 1 == 1 {
                            p = add(p, *e);
                        }
                    }
                    corners.push(p);
                }
                extent(&corners)
            }
            Shape::Union(parts) => {
                let mut lo = [f64::INFINITY; 3];
                let mut hi = [f64::NEG_INFINITY; 3];
                for p in parts {
                    let (a, b) = p.bounding_box();
                    for k in 0..3 {
                        lo[k] = lo[k].min(a[k]);
                        hi[k] = hi[k].max(b[k]);
                    }
                }
                (lo, hi)
            }
        };
        (truncate(lo, d), truncate(hi, d))
    }

    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius, .. } => 2.0 * radius,
            Shape::Tetrahedron { vertices } => {
                let mut best = 0.0f64;
                for i in 0..4 {
                    for j in i + 1..4 {
                        best = best.max(norm(sub(vertices[i], vertices[j])));
                    }
                }
                best
            }
            _ => {
                let (lo, hi) = self.bounding_box();
                norm(sub(hi, lo))
            }
        }
    }

    /// Distance from `x` to the boundary of the domain, on either side.
    pub fn boundary_distance(&self, x: &V3) -> f64 {
        let d = self.d;
        match &self.shape {
            Shape::Cube { origin, side } => {
                if self.contains(x) {
                    (0..d).map(|k| (x[k] - origin[k]).min(origin[k] + side - x[k])).fold(f64::INFINITY, f64::min)
                } else {
                    (0..d)
                        .map(|k| (origin[k] - x[k]).max(x[k] - origin[k] - side).max(0.0).powi(2))
                        .sum::<f64>()
                        .sqrt()
                }
            }
            Shape::Ball { center, radius } => {
                let r = (0..d).map(|k| (x[k] - center[k]).powi(2)).sum::<f64>().sqrt();
                (r - radius).abs()
            }
            Shape::Tetrahedron { vertices: v } => {
                const FACES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
                FACES
                    .iter()
                    .map(|f| point_triangle_distance(*x, v[f[0]], v[f[1]], v[f[2]]))
                    .fold(f64::INFINITY, f64::min)
            }
            Shape::Parallelepiped { origin, edges } => {
                let mut best = f64::INFINITY;
                for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
                    for base in [*origin, add(*origin, edges[c])] {
                        let p1 = add(base, edges[a]);
                        let p2 = add(p1, edges[b]);
                        let p3 = add(base, edges[b]);
                        best = best.min(point_triangle_distance(*x, base, p1, p2));
                        best = best.min(point_triangle_distance(*x, base, p2, p3));
                    }
                }
                best
            }
            Shape::Union(parts) => {
                if !self.contains(x) {
                    return parts.iter().map(|p| p.boundary_distance(x)).fold(f64::INFINITY, f64::min);
                }
                self.exit_distance(x)
            }
        }
    }

    /// Smallest distance along a fixed fan of directions at which a ray from an
    /// interior point `x` leaves the domain.
    fn exit_distance(&self, x: &V3) -> f64 {
        let reach = self.diameter();
        let dirs = direction_fan(self.d);
        let mut best = reach;
        for u in dirs {
            if !self.contains(&add(*x, scale(u, reach))) {
                let (mut lo, mut hi) = (0.0, reach);
                for _ in 0..50 {
                    let mid = 0.5 * (lo + hi);
                    if self.contains(&add(*x, scale(u, mid))) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                best = best.min(0.5 * (lo + hi));
            }
        }
        best
    }

    /// Constant density `rho0` on the domain sampled on a grid of side `h`
    /// anchored at the lower corner of the bounding box. Partially covered
    /// cells receive the fraction of `5^d` sub-cell midpoints inside, and masses
    /// are normalised to `rho0 * volume`.
    pub fn discretize(&self, h: f64, rho0: f64) -> Result<GridDensity> {
        if !(h > 0.0) || !(rho0 > 0.0) {
            return Err(Error::arg("discretization needs positive h and rho0"));
        }
        let d = self.d;
        let (lo, hi) = self.bounding_box();
        let counts: [usize; 3] =
            std::array::from_fn(|k| if k < d { ((hi[k] - lo[k]) / h - 1e-9).ceil().max(1.0) as usize } else { 1 });
        let grid = SiteSet::grid(d, h, lo, counts)?;
        const SUB: usize = 5;
        let sub_total = SUB.pow(d as u32);
        let mut keep = Vec::new();
        let mut frac = Vec::new();
        for (i, c) in grid.points().iter().enumerate() {
            let mut inside = 0;
            for s in 0..sub_total {
                let mut p = *c;
                let mut rest = s;
                for k in 0..d {
                    let j = rest % SUB;
                    rest /= SUB;
                    p[k] += ((j as f64 + 0.5) / SUB as f64 - 0.5) * h;
                }
                if self.contains(&p) {
                    inside += 1;
                }
            }
            if inside > 0 {
                keep.push(i);
                frac.push(inside as f64 / sub_total as f64);
            }
        }
        let sites = Arc::new(grid.subset(&keep));
        let raw: f64 = frac.iter().sum::<f64>() * sites.cell_volume();
        let target = rho0 * self.volume();
        GridDensity::new(sites.clone(), frac.iter().map(|f| f * sites.cell_volume() * target / raw).collect())
    }
}

fn check_dim(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::Dimension(d))
    }
}

fn truncate(mut x: V3, d: usize) -> V3 {
    x[d..].iter_mut().for_each(|v| *v = 0.0);
    x
}

fn extent(points: &[V3]) -> (V3, V3) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

fn solve3(cols: &[V3; 3], rhs: V3) -> V3 {
    let det = det3(cols[0], cols[1], cols[2]);
    [
        det3(rhs, cols[1], cols[2]) / det,
        det3(cols[0], rhs, cols[2]) / det,
        det3(cols[0], cols[1], rhs) / det,
    ]
}

fn barycentric(v: &[V3; 4], x: V3) -> [f64; 4] {
    let c = solve3(&[sub(v[1], v[0]), sub(v[2], v[0]), sub(v[3], v[0])], sub(x, v[0]));
    [1.0 - c[0] - c[1] - c[2], c[0], c[1], c[2]]
}

fn direction_fan(d: usize) -> Vec<V3> {
    match d {
        1 => vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        2 => (0..64)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
                [a.cos(), a.sin(), 0.0]
            })
            .collect(),
        _ => {
            // Fibonacci sphere.
            let n = 256;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    [r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
    }
}

/// Euclidean distance from `p` to the triangle `abc`.
pub(crate) fn point_triangle_distance(p: V3, a: V3, b: V3, c: V3) -> f64 {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(ab, ap);
    let d2 = dot(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return norm(ap);
    }
    let bp = sub(p, b);
    let d3 = dot(ab, bp);
    let d4 = dot(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return norm(bp);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return norm(sub(p, add(a, scale(ab, v))));
    }
    let cp = sub(p, c);
    let d5 = dot(ab, cp);
    let d6 = dot(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return norm(cp);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return norm(sub(p, add(a, scale(ac, w))));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return norm(sub(p, add(b, scale(sub(c, b), w))));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    norm(sub(p, add(a, add(scale(ab, v), scale(ac, w)))))
}

/// Empirical boundary-shell modulus of a domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FisherEstimate {
    pub t: f64,
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    /// The shell is measured on both sides of the boundary.
    pub shell: String,
}

/// Relative volume of `{x : dist(x, ∂Ω) ≤ |Ω|^{1/d} t}` estimated with a
/// randomly shifted Halton sequence over the enlarged bounding box.
pub fn fisher_eta(domain: &Domain, t: f64, samples: u64, seed: u64) -> Result<FisherEstimate> {
    if !(t >= 0.0) {
        return Err(Error::arg(format!("shell parameter must be nonnegative, got {t}")));
    }
    let vol = domain.volume();
    let d = domain.d();
    let shell = "two_sided".to_string();
    if t == 0.0 || samples == 0 {
        return Ok(FisherEstimate { t, value: 0.0, std_error: 0.0, samples, shell });
    }
    let r = vol.powf(1.0 / d as f64) * t;
    let (lo, hi) = domain.bounding_box();
    let lo: V3 = std::array::from_fn(|k| if k < d { lo[k] - r } else { 0.0 });
    let hi: V3 = std::array::from_fn(|k| if k < d { hi[k] + r } else { 0.0 });
    let box_vol: f64 = (0..d).map(|k| hi[k] - lo[k]).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: V3 = std::array::from_fn(|_| rng.gen::<f64>());
    let mut hits = 0u64;
    for i in 0..samples {
        let u = halton(i, d);
        let mut x = [0.0; 3];
        for k in 0..d {
            x[k] = lo[k] + (u[k] + shift[k]).fract() * (hi[k] - lo[k]);
        }
        if domain.boundary_distance(&x) <= r {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let ratio = box_vol / vol;
    Ok(FisherEstimate {
        t,
        value: p * ratio,
        std_error: (p * (1.0 - p) / samples as f64).sqrt() * ratio,
        samples,
        shell,
    })
}

/// Smallest `C` with `η(t) ≤ C t` over the given shell parameters.
pub fn fisher_constant(domain: &Domain, ts: &[f64], samples: u64, seed: u64) -> Result<f64> {
    let mut c = 0.0f64;
    for &t in ts.iter().filter(|&&t| t > 0.0) {
        c = c.max(fisher_eta(domain, t, samples, seed)?.value / t);
    }
    Ok(c)
}

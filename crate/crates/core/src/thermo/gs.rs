//! The Graf–Schenker tetrahedral localization kernel and a sampled version of
//! the localized lower bound.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gc::{gc_indirect_energy, localize};
use crate::mmot::{Coupling, SolverOptions};
use crate::riesz::{direct_term, Domain, GridDensity, KernelMatrix, Shape};

type V3 = [f64; 3];

const BLOCK: u64 = 4096;

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Runs `f` on `samples` draws split into blocks of 4096, each block with its
/// own ChaCha stream, and returns the draws in order.
fn sample_blocks<T: Send>(samples: u64, seed: u64, f: impl Fn(&mut ChaCha8Rng) -> T + Sync) -> Vec<T> {
    let blocks = samples.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let len = BLOCK.min(samples - b * BLOCK);
            (0..len).map(|_| f(&mut rng)).collect::<Vec<T>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// The regular tetrahedron of unit volume as vertices and outward face planes
/// `n·x ≤ c`.
#[derive(Debug, Clone)]
struct Tetra {
    vertices: [V3; 4],
    faces: [(V3, f64); 4],
}

impl Tetra {
    fn unit() -> Self {
        let Shape::Tetrahedron { vertices } = Domain::regular_tetrahedron(1.0).expect("valid").shape().clone() else {
            unreachable!("regular_tetrahedron builds a tetrahedron")
        };
        let faces = std::array::from_fn(|k| {
            let [a, b, c]: [V3; 3] = {
                let mut others = (0..4).filter(|&j| j != k).map(|j| vertices[j]);
                std::array::from_fn(|_| others.next().expect("three"))
            };
            let mut n = cross(sub(b, a), sub(c, a));
            let len = dot(n, n).sqrt();
            n = n.map(|x| x / len);
            if dot(n, sub(vertices[k], a)) > 0.0 {
                n = n.map(|x| -x);
            }
            (n, dot(n, a))
        });
        Self { vertices, faces }
    }

    fn uniform_point(&self, rng: &mut impl Rng) -> V3 {
        let w: [f64; 4] = std::array::from_fn(|_| -(1.0 - rng.gen::<f64>()).ln());
        let total: f64 = w.iter().sum();
        let mut x = [0.0; 3];
        for (wk, v) in w.iter().zip(&self.vertices) {
            for i in 0..3 {
                x[i] += wk / total * v[i];
            }
        }
        x
    }

    fn exit_distance(&self, x: V3, u: V3) -> f64 {
        self.faces
            .iter()
            .filter(|(n, _)| dot(*n, u) > 0.0)
            .map(|(n, c)| (c - dot(*n, x)) / dot(*n, u))
            .fold(f64::INFINITY, f64::min)
    }

    fn contains(&self, x: V3) -> bool {
        self.faces.iter().all(|(n, c)| dot(*n, x) <= c + 1e-12)
    }

    fn surface_area(&self) -> f64 {
        let edge = {
            let d = sub(self.vertices[0], self.vertices[1]);
            dot(d, d).sqrt()
        };
        3f64.sqrt() * edge * edge
    }

    fn diameter(&self) -> f64 {
        let d = sub(self.vertices[0], self.vertices[1]);
        dot(d, d).sqrt()
    }
}

fn unit_vector(rng: &mut impl Rng) -> V3 {
    let z = 2.0 * rng.gen::<f64>() - 1.0;
    let phi = std::f64::consts::TAU * rng.gen::<f64>();
    let r = (1.0 - z * z).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Uniform rotation from a uniform unit quaternion (Shoemake).
fn rotation(rng: &mut impl Rng) -> [V3; 3] {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let tau = std::f64::consts::TAU;
    let (w, x, y, z) = (a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin(), b * (tau * u3).cos());
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn apply(r: &[V3; 3], v: V3) -> V3 {
    [dot(r[0], v), dot(r[1], v), dot(r[2], v)]
}

fn apply_transpose(r: &[V3; 3], v: V3) -> V3 {
    std::array::from_fn(|i| r[0][i] * v[0] + r[1][i] * v[1] + r[2][i] * v[2])
}

/// Sampled rotation-averaged autocorrelation `h_ℓ` of `ℓΔ`, normalized so
/// that `h_ℓ(0) = 1`.
///
/// For a convex body, `h_ℓ(r)` is the probability that a uniform point of
/// `ℓΔ` moved a distance `r` in a uniform direction stays inside, that is
/// `P(T > r)` for the exit distance `T`. The transform of
/// `w_ℓ = (1 - h_ℓ)/|x|` is then `(4π/k²) E[cos kT]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GsKernel {
    pub ell: f64,
    pub mc_samples: u64,
    pub seed: u64,
    pub radii: Vec<f64>,
    pub h_table: Vec<f64>,
    pub h_std_error: Vec<f64>,
    pub diameter: f64,
    /// Exact slope `|h_ℓ'(0)| = S/(4|Δ|ℓ)`.
    pub slope_at_zero: f64,
    /// Sampled `E[T³]`; equals `3ℓ³/(4π)` because `∫h_ℓ = |ℓΔ|`.
    pub third_moment: f64,
    pub third_moment_std_error: f64,
    pub frequencies: Vec<f64>,
    pub transform: Vec<f64>,
    pub transform_std_error: Vec<f64>,
    pub transform_min: f64,
    /// `min_k ŵ(k)/σ(k)`; the positivity contract is that this is ≥ -3.
    pub min_in_sigma: f64,
    pub positive_within_3_sigma: bool,
}

impl GsKernel {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,h,h_std_error\n");
        for ((r, h), e) in self.radii.iter().zip(&self.h_table).zip(&self.h_std_error) {
            out.push_str(&format!("{r:.6},{h:.8},{e:.3e}\n"));
        }
        out
    }

    pub fn transform_csv(&self) -> String {
        let mut out = String::from("k,w_hat,std_error\n");
        for ((k, w), e) in self.frequencies.iter().zip(&self.transform).zip(&self.transform_std_error) {
            out.push_str(&format!("{k:.6},{w:.8e},{e:.3e}\n"));
        }
        out
    }

    /// Linear interpolation of the table; zero past the diameter.
    pub fn h(&self, r: f64) -> f64 {
        if r >= self.diameter {
            return 0.0;
        }
        let k = self.radii.partition_point(|&x| x <= r).clamp(1, self.radii.len() - 1);
        let (r0, r1) = (self.radii[k - 1], self.radii[k]);
        let t = ((r - r0) / (r1 - r0)).clamp(0.0, 1.0);
        self.h_table[k - 1] * (1.0 - t) + self.h_table[k] * t
    }
}

/// The default frequency grid: 200 points evenly spaced on `[0.1, 20]`.
pub fn default_frequencies() -> Vec<f64> {
    (0..200).map(|i| 0.1 + (20.0 - 0.1) * i as f64 / 199.0).collect()
}

pub const MIN_GS_SAMPLES: u64 = 10_000;

pub fn graf_schenker_kernel(ell: f64, mc_samples: u64, radial_points: usize, seed: u64) -> Result<GsKernel> {
    graf_schenker_kernel_with(ell, mc_samples, radial_points, &default_frequencies(), seed)
}

pub fn graf_schenker_kernel_with(
    ell: f64,
    mc_samples: u64,
    radial_points: usize,
    frequencies: &[f64],
    seed: u64,
) -> Result<GsKernel> {
    if !(ell > 0.0) {
        return Err(Error::arg(format!("scale must be positive, got {ell}")));
    }
    if mc_samples < MIN_GS_SAMPLES {
        return Err(Error::arg(format!("need at least {MIN_GS_SAMPLES} samples, got {mc_samples}")));
    }
    if radial_points < 2 {
        return Err(Error::arg("need at least two radial points"));
    }
    let tetra = Tetra::unit();
    let exits: Vec<f64> =
        sample_blocks(mc_samples, seed, |rng| ell * tetra.exit_distance(tetra.uniform_point(rng), unit_vector(rng)));
    let n = exits.len() as f64;
    let diameter = ell * tetra.diameter();

    let radii: Vec<f64> = (0..radial_points).map(|i| diameter * i as f64 / (radial_points - 1) as f64).collect();
    let mut sorted = exits.clone();
    sorted.sort_by(f64::total_cmp);
    let (h_table, h_std_error): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .map(|&r| {
            let p = (sorted.len() - sorted.partition_point(|&t| t <= r)) as f64 / n;
            (p, (p * (1.0 - p) / n).sqrt())
        })
        .unzip();

    let (m3, m3_err) = mean_and_error(exits.iter().map(|t| t.powi(3)), n);
    let (transform, transform_std_error): (Vec<f64>, Vec<f64>) = frequencies
        .par_iter()
        .map(|&k| {
            let (m, e) = mean_and_error(exits.iter().map(|t| (k * t).cos()), n);
            let c = 4.0 * std::f64::consts::PI / (k * k);
            (c * m, c * e)
        })
        .unzip();
    let transform_min = transform.iter().copied().fold(f64::INFINITY, f64::min);
    let min_in_sigma = transform
        .iter()
        .zip(&transform_std_error)
        .map(|(w, e)| if *w >= 0.0 { f64::INFINITY } else { w / e.max(1e-300) })
        .fold(f64::INFINITY, f64::min);
    Ok(GsKernel {
        ell,
        mc_samples,
        seed,
        radii,
        h_table,
        h_std_error,
        diameter,
        slope_at_zero: tetra.surface_area() / (4.0 * ell),
        third_moment: m3,
        third_moment_std_error: m3_err,
        frequencies: frequencies.to_vec(),
        transform,
        transform_std_error,
        transform_min,
        min_in_sigma,
        positive_within_3_sigma: min_in_sigma >= -3.0,
    })
}

fn mean_and_error(values: impl Iterator<Item = f64> + Clone, n: f64) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// How the localized energies are obtained.
#[derive(Debug, Clone, Copy)]
pub enum GsSource<'a> {
    /// Localize a given canonical state: `C(P|_A) - D(ρ1_A)`.
    Coupling(&'a Coupling),
    /// Certified lower bound on `E_GC(ρ1_A)` from the grand-canonical LP.
    GcBound { max_extra: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GsLowerBound {
    pub ell: f64,
    pub samples: u64,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: f64,
    /// Average of localized energies over translated and rotated tiles.
    pub localized_mean: f64,
    pub localized_std_error: f64,
    /// `C(P) - D(ρ)` when a coupling was given.
    pub lhs: Option<f64>,
    /// The slack constant used in `rhs`.
    pub c_hat: f64,
    /// `|h_1'(0)|/2`, the constant produced by the positivity argument.
    pub c_theory: f64,
    /// Smallest constant making `lhs ≥ localized_mean - c N/ℓ`.
    pub c_hat_min: Option<f64>,
    pub rhs: f64,
    pub distinct_tiles: usize,
    pub label: String,
}

/// Averages the localized energies of `ρ` over tiles `z + RℓΔ` and subtracts
/// `ĉ N/ℓ`.
///
/// The average `|ℓΔ|^{-1} ∫dz ∫dR f(z, R)` is estimated by importance
/// sampling: a support site `x_i` is drawn uniformly, a point `u` uniformly
/// in `RℓΔ`, and `z = x_i - u`; the weight is `M / #{sites in the tile}`.
/// Sites are localized by their centers, so the result is a heuristic
/// estimate on grids.
pub fn gs_lower_bound(
    rho: &GridDensity,
    source: GsSource<'_>,
    ell: f64,
    kernel: &KernelMatrix,
    c_hat: Option<f64>,
    samples: u64,
    seed: u64,
    opts: &SolverOptions,
) -> Result<GsLowerBound> {
    if rho.d() != 3 || (kernel.exponent() - 1.0).abs() > 1e-12 {
        return Err(Error::arg("the Graf–Schenker bound needs s = 1 and d = 3"));
    }
    if !(ell > 0.0) || samples == 0 {
        return Err(Error::arg("need a positive scale and at least one sample"));
    }
    if let GsSource::Coupling(p) = source {
        let marginal = p.marginal();
        if !marginal.same_geometry(rho)
            || marginal.masses().iter().zip(rho.masses()).any(|(a, b)| (a - b).abs() > 1e-9)
        {
            return Err(Error::InvalidCoupling("coupling marginal differs from the density".into()));
        }
    }
    let support = rho.support();
    if support.is_empty() {
        return Err(Error::InvalidDensity("zero density".into()));
    }
    let sites = rho.sites();
    let tetra = Tetra::unit();
    let m = support.len();

    let masks: Vec<Vec<bool>> = sample_blocks(samples, seed, |rng| {
        let i = support[rng.gen_range(0..m)];
        let r = rotation(rng);
        let u = apply(&r, tetra.uniform_point(rng)).map(|x| x * ell);
        let xi = sites.point(i);
        let z = sub(xi, u);
        (0..sites.len())
            .map(|j| rho.mass(j) > 0.0 && tetra.contains(apply_transpose(&r, sub(sites.point(j), z)).map(|x| x / ell)))
            .collect()
    });

    let mut distinct: Vec<&Vec<bool>> = masks.iter().collect();
    distinct.sort();
    distinct.dedup();
    let energies: Vec<f64> = distinct
        .par_iter()
        .map(|mask| localized_energy(rho, mask, source, kernel, opts))
        .collect::<Result<Vec<_>>>()?;
    let table: HashMap<&Vec<bool>, f64> = distinct.iter().copied().zip(energies).collect();

    let weighted = masks.iter().map(|mask| {
        let count = support.iter().filter(|&&i| mask[i]).count();
        table[mask] * m as f64 / count as f64
    });
    let (mean, err) = mean_and_error(weighted, masks.len() as f64);

    let n = rho.total_mass();
    let c_theory = tetra.surface_area() / 8.0;
    let c = c_hat.unwrap_or(c_theory);
    let lhs = match source {
        GsSource::Coupling(p) => Some(p.interaction_energy(kernel) - direct_term(rho, rho, kernel)?),
        GsSource::GcBound { .. } => None,
    };
    Ok(GsLowerBound {
        ell,
        samples,
        seed,
        n,
        localized_mean: mean,
        localized_std_error: err,
        lhs,
        c_hat: c,
        c_theory,
        c_hat_min: lhs.map(|l| ((mean - l) * ell / n).max(0.0)),
        rhs: mean - c * n / ell,
        distinct_tiles: distinct.len(),
        label: "heuristic".into(),
    })
}

fn localized_energy(
    rho: &GridDensity,
    mask: &[bool],
    source: GsSource<'_>,
    kernel: &KernelMatrix,
    opts: &SolverOptions,
) -> Result<f64> {
    let local = rho.restricted(mask);
    let direct = direct_term(&local, &local, kernel)?;
    match source {
        GsSource::Coupling(p) => Ok(localize(p, mask)?.interaction_energy(kernel) - direct),
        GsSource::GcBound { max_extra } => {
            let max_n = local.total_mass().ceil() as usize + max_extra;
            let (report, _) = gc_indirect_energy(&local, max_n, kernel, opts)?;
            Ok(report.dual_lower)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_tetra_faces_contain_vertices() {
        let t = Tetra::unit();
        for v in &t.vertices {
            assert!(t.contains(*v));
        }
        assert!(t.contains([0.0; 3]));
        assert!(!t.contains([2.0, 0.0, 0.0]));
    }

    #[test]
    fn rotations_are_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let r = rotation(&mut rng);
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(r[i], r[j]) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn block_sampling_ignores_thread_count() {
        let a = sample_blocks(10_000, 9, |rng| rng.gen::<u64>());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sample_blocks(10_000, 9, |rng| rng.gen::<u64>()));
        assert_eq!(a, b);
    }
}

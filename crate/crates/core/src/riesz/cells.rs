//! Averages of radial kernels over pairs of equal axis-aligned cubic cells.
//!
//! For cells of side `h` with centers `h*m` apart, the pair average of `K(|x-y|)`
//! equals `∫_{[-1,1]^d} Π_k (1 - |v_k|) K(h |m + v|) dv`. The integral is split into
//! the `2^d` orthants of `v`. Orthants touching the singularity at `m + v = 0`
//! are mapped onto a corner and integrated with a Duffy (pyramid) transform,
//! the rest with tensor Gauss–Legendre rules graded by their distance from 0.

use std::sync::OnceLock;

use crate::quadrature::GaussLegendre;

enum Radial<'a> {
    Power(f64),
    Func(&'a dyn Fn(f64) -> f64),
}

impl Radial<'_> {
    fn eval(&self, r: f64) -> f64 {
        match self {
            Radial::Power(p) => r.powf(-p),
            Radial::Func(f) => f(r),
        }
    }
}

#[derive(Clone, Copy)]
enum Weight {
    /// `1 - t`
    Falling,
    /// `t`
    Rising,
}

fn rule(n: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=24).map(|n| GaussLegendre::unit(n.max(1))).collect());
    &rules[n]
}

const OUTER_POINTS: usize = 16;
const RADIAL_POINTS: usize = 24;

/// Pair average of `|x-y|^{-p}` for unit cells with integer center offset `m`.
pub fn unit_cell_pair_average(m: &[i64], p: f64) -> f64 {
    average(m, 1.0, &Radial::Power(p))
}

/// Pair average of `|x-y|^{-p}` for cells of side `h` with center offset `h*m`.
///
/// Any `p < d` is accepted, including negative exponents.
pub fn cell_pair_average(m: &[i64], h: f64, p: f64) -> f64 {
    h.powf(-p) * average(m, 1.0, &Radial::Power(p))
}

/// Pair average of a general radial kernel `k(r)`; `r^{d-1} k(r)` must be smooth
/// near the origin for the singular orthants to converge.
pub fn cell_pair_average_with(m: &[i64], h: f64, k: &dyn Fn(f64) -> f64) -> f64 {
    average(m, h, &Radial::Func(k))
}

fn average(m: &[i64], h: f64, kernel: &Radial) -> f64 {
    let d = m.len();
    assert!((1..=3).contains(&d), "cell averages support d in 1..=3");
    let mut total = 0.0;
    for mask in 0..(1usize << d) {
        let sigma: Vec<i64> = (0..d).map(|k| if mask >> k & 1 == 1 { -1 } else { 1 }).collect();
        let singular = (0..d).all(|k| m[k] == 0 || m[k] == -sigma[k]);
        total += if singular {
            let weights: Vec<Weight> = (0..d)
                .map(|k| if m[k] == 0 { Weight::Falling } else { Weight::Rising })
                .collect();
            duffy(&weights, h, kernel)
        } else {
            tensor_gauss(m, &sigma, h, kernel)
        };
    }
    total
}

fn tensor_gauss(m: &[i64], sigma: &[i64], h: f64, kernel: &Radial) -> f64 {
    let d = m.len();
    // Distance of the orthant box from the singularity, at least 1 here.
    let dist2: f64 = (0..d)
        .map(|k| {
            let a = m[k] as f64;
            let b = (m[k] + sigma[k]) as f64;
            if a * b <= 0.0 {
                0.0
            } else {
                a.abs().min(b.abs()).powi(2)
            }
        })
        .sum();
    let dist = dist2.sqrt();
    let n = if dist < 2.0 {
        12
    } else if dist < 4.0 {
        8
    } else if dist < 8.0 {
        6
    } else {
        4
    };
    let g = rule(n);
    let mut total = 0.0;
    let mut idx = [0usize; 3];
    loop {
        let mut w = 1.0;
        let mut r2 = 0.0;
        for k in 0..d {
            let t = g.nodes[idx[k]];
            w *= g.weights[idx[k]] * (1.0 - t);
            let u = m[k] as f64 + sigma[k] as f64 * t;
            r2 += u * u;
        }
        total += w * kernel.eval(h * r2.sqrt());
        if !advance(&mut idx[..d], n) {
            break;
        }
    }
    total
}

/// `∫_{[0,1]^d} Π_k a_k(t_k) K(h|t|) dt` with the singularity at the origin.
fn duffy(weights: &[Weight], h: f64, kernel: &Radial) -> f64 {
    let d = weights.len();
    let outer = rule(OUTER_POINTS);
    let mut total = 0.0;
    for q in 0..d {
        let mut idx = [0usize; 2];
        loop {
            // Point on the face t_q = 1 of the unit cube.
            let mut xi = [1.0f64; 3];
            let mut w = 1.0;
            let mut j = 0;
            for k in 0..d {
                if k != q {
                    xi[k] = outer.nodes[idx[j]];
                    w *= outer.weights[idx[j]];
                    j += 1;
                }
            }
            let norm = xi[..d].iter().map(|x| x * x).sum::<f64>().sqrt();
            // Polynomial in the radial variable: Π (α_k + β_k r).
            let mut poly = [0.0f64; 4];
            poly[0] = 1.0;
            for k in 0..d {
                let (alpha, beta) = match weights[k] {
                    Weight::Falling => (1.0, -xi[k]),
                    Weight::Rising => (0.0, xi[k]),
                };
                for deg in (0..=k + 1).rev() {
                    let lower = if deg > 0 { poly[deg - 1] } else { 0.0 };
                    poly[deg] = alpha * poly[deg] + beta * lower;
                }
            }
            let radial = match kernel {
                Radial::Power(p) => {
                    let mut acc = 0.0;
                    for (deg, c) in poly.iter().enumerate().take(d + 1) {
                        acc += c / (d as f64 - p + deg as f64);
                    }
                    acc * norm.powf(-p) * h.powf(-p)
                }
                Radial::Func(_) => {
                    let g = rule(RADIAL_POINTS);
                    g.nodes
                        .iter()
                        .zip(&g.weights)
                        .map(|(&r, &wr)| {
                            let pr: f64 = poly[..=d].iter().rev().fold(0.0, |acc, c| acc * r + c);
                            wr * r.powi(d as i32 - 1) * pr * kernel.eval(h * r * norm)
                        })
                        .sum()
                }
            };
            total += w * radial;
            if !advance(&mut idx[..d - 1], OUTER_POINTS) {
                break;
            }
        }
    }
    total
}

/// Odometer increment; returns false after the last index tuple.
fn advance(idx: &mut [usize], n: usize) -> bool {
    for i in idx.iter_mut() {
        *i += 1;
        if *i < n {
            return true;
        }
        *i = 0;
    }
    false
}

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ueglab_core::mmot::SolverOptions;
use ueglab_core::quadrature::integrate_adaptive;
use ueglab_core::trial::*;
use ueglab_core::{GridDensity, SiteSet};

/// Cube-pair average of `1/|x-y|` for unit cubes `z` apart, integrated over the
/// difference `v` with tent weight; the last coordinate is done in closed form.
fn cube_pair_oracle(z: [f64; 3]) -> f64 {
    let inner = |v1: f64, v2: f64| {
        let a2 = (z[0] + v1).powi(2) + (z[1] + v2).powi(2);
        let a = a2.sqrt();
        // ∫ (α + βt)/√(a²+t²) dt on the two halves of v3.
        let piece = |t1: f64, t2: f64, alpha: f64, beta: f64| {
            let lg = |t: f64| if a > 0.0 { (t / a).asinh() } else { t.signum() * t.abs().ln() };
            alpha * (lg(t2) - lg(t1)) + beta * ((a2 + t2 * t2).sqrt() - (a2 + t1 * t1).sqrt())
        };
        // v3 in [-1, 0]: weight 1 + v3 = 1 - z3 + t; v3 in [0, 1]: 1 + z3 - t.
        piece(z[2] - 1.0, z[2], 1.0 - z[2], 1.0) + piece(z[2], z[2] + 1.0, 1.0 + z[2], -1.0)
    };
    let mid = |v1: f64| {
        let w1 = 1.0 - v1.abs();
        let mut breaks = vec![-1.0, 0.0, 1.0];
        if (-z[1]).abs() < 1.0 {
            breaks.push(-z[1]);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        w1 * integrate_adaptive(&|v2: f64| (1.0 - v2.abs()) * inner(v1, v2), &breaks, 1e-13, 1e-12).value
    };
    let mut breaks = vec![-1.0, 0.0, 1.0];
    if (-z[0]).abs() < 1.0 {
        breaks.push(-z[0]);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    integrate_adaptive(&mid, &breaks, 1e-12, 1e-11).value
}

/// Madelung energy per particle of the simple cubic lattice in a uniform
/// background, unit density, by Ewald summation.
fn ewald_sc_madelung() -> f64 {
    let alpha: f64 = 2.0;
    let pi = std::f64::consts::PI;
    let mut real = 0.0;
    let mut recip = 0.0;
    for a in -8i64..=8 {
        for b in -8i64..=8 {
            for c in -8i64..=8 {
                if (a, b, c) == (0, 0, 0) {
                    continue;
                }
                let r = ((a * a + b * b + c * c) as f64).sqrt();
                real += libm::erfc(alpha * r) / r;
                let k2 = 4.0 * pi * pi * r * r;
                recip += 4.0 * pi * (-k2 / (4.0 * alpha * alpha)).exp() / k2;
            }
        }
    }
    0.5 * (real + recip - 2.0 * alpha / pi.sqrt() - pi / (alpha * alpha))
}

#[test]
fn f_nearest_neighbour_matches_quadrature_oracle() {
    let f = lattice_potential_f([1, 0, 0]).unwrap();
    let oracle = 1.0 - cube_pair_oracle([1.0, 0.0, 0.0]);
    assert!((f - oracle).abs() < 1e-4, "{f} vs {oracle}");
    assert!((f - oracle).abs() < 1e-8, "nested oracle disagrees beyond 1e-8: {f} vs {oracle}");
    assert!(f.abs() < 0.05);
    for z in [[1, 1, 0], [2, 1, 0], [1, 1, 1]] {
        let zf = z.map(|x| x as f64);
        let oracle = 1.0 / (zf[0] * zf[0] + zf[1] * zf[1] + zf[2] * zf[2]).sqrt() - cube_pair_oracle(zf);
        assert!((lattice_potential_f(z).unwrap() - oracle).abs() < 1e-8, "{z:?}");
    }
}

#[test]
fn f_nearest_neighbour_matches_monte_carlo() {
    // Differences of uniform points have exactly the tent density.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 2_000_000;
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..n {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen::<f64>() - rng.gen::<f64>());
        let f = 1.0 / ((1.0 + v[0]).powi(2) + v[1] * v[1] + v[2] * v[2]).sqrt();
        sum += f;
        sum2 += f * f;
    }
    let mean = sum / n as f64;
    let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
    let f = lattice_potential_f([1, 0, 0]).unwrap();
    assert!((1.0 - mean - f).abs() < 4.0 * se, "MC {} ± {se}", 1.0 - mean);
}

#[test]
fn f_decays_like_the_fifth_power() {
    let near = lattice_potential_f([1, 0, 0]).unwrap().abs();
    for z in [[10, 0, 0], [6, 8, 0], [0, 6, 8]] {
        let f = lattice_potential_f(z).unwrap();
        assert!(f.abs() < 1e-3 * near);
        assert!(f.abs() * 1e5 < 0.03);
        assert!((f - lattice_potential_f(z.map(|x| -x)).unwrap()).abs() < 1e-15);
    }
}

#[test]
fn floating_crystal_matches_ewald_plus_form_factor() {
    // The unit-cube form factor vanishes on the reciprocal lattice and
    // contributes -k²/12 at k → 0, shifting the point-lattice energy by π/6.
    let oracle = ewald_sc_madelung() + std::f64::consts::PI / 6.0;
    assert!((ewald_sc_madelung() + 1.418649).abs() < 1e-6);
    let r = floating_crystal_upper_bound(1.0, 32.0, None).unwrap();
    assert!((r.e_fc - oracle).abs() < r.tail_bound, "{} vs {oracle}", r.e_fc);
    assert!((r.e_fc - oracle).abs() < 2e-6);
}

#[test]
fn floating_crystal_cutoff_study() {
    let r8 = floating_crystal_upper_bound(1.0, 8.0, None).unwrap();
    let r16 = floating_crystal_upper_bound(1.0, 16.0, None).unwrap();
    assert!((r8.e_fc - r16.e_fc).abs() < 1e-4);
    assert!((r8.e_fc - r16.e_fc).abs() < r8.tail_bound);
    let r1 = floating_crystal_upper_bound(1.0, 1.0, None).unwrap();
    assert_eq!(r1.lattice_points, 6);
    assert!((r1.e_fc - r16.e_fc).abs() < r1.tail_bound);
    assert!(floating_crystal_upper_bound(1.0, 4.0, Some(1e-6)).is_err());
    assert!(r16.e_fc < 0.0 && r16.e_fc > -1.4508);
}

#[test]
fn floating_crystal_scales_with_density() {
    for rho0 in [0.125, 8.0] {
        let direct = floating_crystal_direct(rho0, 6.0).unwrap();
        let scaled = floating_crystal_upper_bound(rho0, 6.0, None).unwrap().e_fc;
        assert!((direct - scaled).abs() < 1e-12 * scaled.abs().max(1.0), "{direct} vs {scaled}");
    }
}

#[test]
fn finite_crystal_coefficient_is_p() {
    // D(1_{nC}, 1_{nC}) = n^5 D(1_C, 1_C) by homogeneity of 1/|x|.
    for n in [2usize, 3] {
        let check = finite_crystal_check(&CrystalLayout::Block { n }.centers()).unwrap();
        let oracle = (n as f64).powi(5) * cube_self_energy();
        assert!((check.direct - oracle).abs() < 1e-9 * oracle);
        assert!((check.energy - check.formula_p).abs() < 1e-9 * check.energy.abs());
        assert!((check.energy - check.formula_half_p).abs() > 1.0);
        assert!((check.coefficient - check.p as f64).abs() < 1e-8);
    }
    let corridor = finite_crystal_check(&CrystalLayout::Corridor { n: 1, k: 1 }.centers()).unwrap();
    assert_eq!(corridor.p, 26);
    assert!((corridor.coefficient - 26.0).abs() < 1e-8);
}

#[test]
fn tf_dirac_closed_forms() {
    // 50-digit references.
    let refs = [
        (1, 9.1155997446911942745763275191986107170309627638001, 0.930525736349100025002010218071667251026179300279),
        (2, 5.7424680003763836318849933189074393444632447700118, 0.73855876638202240588423003268083626778232012068901),
    ];
    for (q, tf, d) in refs {
        let (a, b) = tf_dirac_constants(q).unwrap();
        assert!(((a - tf) / tf).abs() < 1e-10 && ((b - d) / d).abs() < 1e-10);
    }
    let (tf2, d2) = tf_dirac_constants(2).unwrap();
    assert!((tf2 - 5.742468).abs() < 1e-6 && (d2 - 0.738559).abs() < 1e-6);
    let (tf1, d1) = tf_dirac_constants(1).unwrap();
    assert!((tf1 - 9.11560).abs() < 1e-5 && (d1 - 0.93053).abs() < 1e-5);
    for q in 1..5 {
        assert!((tf_dirac_constants(q).unwrap().0 / tf_dirac_constants(8 * q).unwrap().0 - 4.0).abs() < 1e-12);
    }
    assert!(tf_dirac_constants(0).is_err());
}

#[test]
fn uniform_exchange_density_is_dirac() {
    // ∫ g(|z|) dz over R^3 equals c_D.
    for q in [1, 2] {
        let (_, c_d) = tf_dirac_constants(q).unwrap();
        let g = |r: f64| 4.0 * std::f64::consts::PI * r * r * exchange_pair_function(r, q);
        let breaks: Vec<f64> = (0..=4000).map(|k| k as f64 * 0.25).collect();
        let body = integrate_adaptive(&g, &breaks, 1e-13, 1e-12).value;
        // Beyond R the averaged integrand is 9/(2q k_F^4 r^3)·sin² ≈ half of that.
        let kf = fermi_momentum(q);
        let tail = 9.0 * 4.0 * std::f64::consts::PI / (2.0 * q as f64 * kf.powi(4)) * 0.5 / (2.0 * 1000.0f64.powi(2));
        assert!((body + tail - c_d).abs() < 1e-6, "q = {q}: {} vs {c_d}", body + tail);
    }
}

#[test]
fn smoothed_box_exchange_approaches_dirac() {
    let sides = [4.0, 8.0, 12.0, 16.0, 32.0];
    let ratios: Vec<f64> = sides
        .iter()
        .map(|&l| smoothed_box_exchange(&SmoothedBox::new(l, 1.0).unwrap(), 2, 24).unwrap().relative_to_dirac)
        .collect();
    assert!(ratios.windows(2).all(|w| w[0] < w[1] && w[1] < 1.0), "{ratios:?}");
    assert!((ratios[4] - 1.0).abs() < 0.05);
    // Surface term ∝ 1/L: Richardson from L = 8, 16, 32.
    let (a, b, c) = (ratios[1], ratios[3], ratios[4]);
    let two = (8.0 * c - 6.0 * b + a) / 3.0;
    assert!((two - 1.0).abs() < 0.01, "extrapolated {two}");
}

#[test]
fn quasi_free_on_the_grid() {
    let sites = Arc::new(SiteSet::grid(3, 1.0, [0.0; 3], [2, 2, 1]).unwrap());
    let opts = SolverOptions::default();
    let zero = GridDensity::zeros(sites.clone());
    let r = quasi_free_bound(&zero, 1.0, 2, &opts).unwrap();
    assert_eq!((r.upper, r.lower, r.exchange, r.gradient_term), (0.0, 0.0, 0.0, 0.0));
    let rho = GridDensity::new(sites.clone(), vec![0.5, 0.25, 0.25, 1.0]).unwrap();
    let a = quasi_free_bound(&rho, 0.5, 2, &opts).unwrap();
    let b = quasi_free_bound(&rho, 1.0, 2, &opts).unwrap();
    assert!(b.upper > a.upper);
    assert!((2.0 * a.upper - b.upper).abs() < 1e-12);
    assert!(a.lower <= a.upper && a.refined_upper <= a.upper);
    let too_big = GridDensity::new(sites, vec![1.5, 0.0, 0.0, 0.0]).unwrap();
    assert!(quasi_free_bound(&too_big, 1.0, 2, &opts).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn quasi_free_sandwich(m in prop::collection::vec(0.0..1.0f64, 4), hbar2 in 0.0..4.0f64) {
        let sites = Arc::new(SiteSet::grid(3, 1.0, [0.0; 3], [2, 2, 1]).unwrap());
        let rho = GridDensity::new(sites, m).unwrap();
        let r = quasi_free_bound(&rho, hbar2, 2, &SolverOptions::default()).unwrap();
        prop_assert!(r.lower <= r.upper + 1e-12);
    }
}

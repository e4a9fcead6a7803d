use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ueglab_core::riesz::{fisher_constant, fisher_eta, ScaledFamily};
use ueglab_core::{direct_term, kernel_constant, DiagonalRule, Domain, GridDensity, KernelMatrix, RieszKernel, SiteSet};

/// `Γ(x)` from the Stirling series after shifting `x` past 15.
fn gamma_stirling(mut x: f64) -> f64 {
    let mut factor = 1.0;
    while x < 15.0 {
        factor /= x;
        x += 1.0;
    }
    let series = 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3)) + 1.0 / (1260.0 * x.powi(5)) - 1.0 / (1680.0 * x.powi(7));
    factor * ((x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series).exp()
}

fn grid_kernel(sites: &Arc<SiteSet>, s: f64) -> KernelMatrix {
    KernelMatrix::new(sites, &RieszKernel::new(s, sites.d()).unwrap(), DiagonalRule::CellAverage).unwrap()
}

#[test]
#[allow(clippy::approx_constant)]
fn kernel_constant_examples() {
    assert!((kernel_constant(1.0, 3).unwrap() - 6.28319).abs() < 1e-5);
    assert!(kernel_constant(3.0, 3).is_err());
    assert!(kernel_constant(1.0, 1).is_err());
    for (s, d) in [(0.5, 1usize), (0.7, 2), (1.3, 3), (2.5, 3)] {
        let df = d as f64;
        let want = 2f64.powf(df - 1.0 - s) * std::f64::consts::PI.powf(df / 2.0) * gamma_stirling((df - s) / 2.0)
            / gamma_stirling(s / 2.0);
        let got = kernel_constant(s, d).unwrap();
        assert!((got - want).abs() < 1e-10 * want, "s={s} d={d}: {got} vs {want}");
    }
}

#[test]
fn kernel_is_positive_decreasing_and_diagonal_dominates() {
    for (s, d) in [(0.5, 1usize), (1.0, 2), (1.0, 3), (2.0, 3)] {
        let k = RieszKernel::new(s, d).unwrap();
        let rs = [0.1, 0.5, 1.0, 2.0, 7.0];
        assert!(rs.iter().all(|&r| k.value(r) > 0.0));
        assert!(rs.windows(2).all(|w| k.value(w[1]) < k.value(w[0])));
        let diag = k.diagonal(1.0);
        assert!(diag.is_finite());
        let mut off = vec![0i64; d];
        off[0] = 1;
        assert!(diag >= k.cell_pair(&off, 1.0));
    }
}

#[test]
fn direct_term_on_an_interval() {
    let rho = GridDensity::uniform_interval(0.0, 2.0, 40, 1.0).unwrap();
    let km = grid_kernel(rho.sites(), 0.5);
    let d = direct_term(&rho, &rho, &km).unwrap();
    assert!((d - 3.77124).abs() < 1e-5, "{d}");
    let zero = GridDensity::zeros(rho.sites().clone());
    assert_eq!(direct_term(&zero, &rho, &km).unwrap(), 0.0);
}

#[test]
fn unit_cube_direct_term_against_monte_carlo() {
    let sites = Arc::new(SiteSet::grid(3, 1.0, [0.0; 3], [1, 1, 1]).unwrap());
    let rho = GridDensity::new(sites.clone(), vec![1.0]).unwrap();
    let d = direct_term(&rho, &rho, &grid_kernel(&sites, 1.0)).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 2_000_000;
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..n {
        let r2: f64 = (0..3).map(|_| (rng.gen::<f64>() - rng.gen::<f64>()).powi(2)).sum();
        let v = 0.5 / r2.sqrt();
        sum += v;
        sum2 += v * v;
    }
    let mean = sum / n as f64;
    let err = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((d - mean).abs() < 4.0 * err + 1e-4, "{d} vs {mean} ± {err}");
    assert!((d - 0.9412).abs() < 1e-3);
}

#[test]
fn mismatched_geometries_are_rejected() {
    let a = GridDensity::uniform_interval(0.0, 1.0, 4, 1.0).unwrap();
    let b = GridDensity::uniform_interval(0.0, 1.0, 5, 1.0).unwrap();
    let km = grid_kernel(a.sites(), 0.5);
    assert!(direct_term(&a, &b, &km).is_err());
}

#[test]
fn scaling_covariance_of_the_direct_term() {
    // D(ρ0 1_{λΩ}) = ρ0² λ^{2d-s} D(1_Ω), on grids refined with the domain.
    for (dom, h, s) in [
        (Domain::ball(3, [0.0; 3], 1.0).unwrap(), 0.25, 1.0),
        (Domain::regular_tetrahedron(1.0).unwrap(), 0.2, 1.0),
        (Domain::cube(2, [0.0; 3], 1.0).unwrap(), 0.125, 0.7),
    ] {
        let d = dom.d() as f64;
        let base = dom.discretize(h, 1.0).unwrap();
        let d0 = direct_term(&base, &base, &grid_kernel(base.sites(), s)).unwrap();
        for (rho0, lambda) in [(2.0, 1.5), (0.5, 2.0)] {
            let sites = Arc::new(base.sites().dilated(lambda));
            let masses = base.masses().iter().map(|m| m * rho0 * lambda.powf(d)).collect();
            let scaled = GridDensity::new(sites.clone(), masses).unwrap();
            let got = direct_term(&scaled, &scaled, &grid_kernel(&sites, s)).unwrap();
            let want = rho0 * rho0 * lambda.powf(2.0 * d - s) * d0;
            assert!((got - want).abs() < 1e-2 * want, "{got} vs {want}");
        }
    }
}

#[test]
fn ball_direct_term_converges_to_closed_form() {
    // ½∫∫_{B_R}|x-y|^{-1} = (16π²/15) R⁵.
    let want = 16.0 * std::f64::consts::PI.powi(2) / 15.0;
    let errs: Vec<f64> = [0.5, 0.25, 0.125]
        .iter()
        .map(|&h| {
            let rho = Domain::ball(3, [0.0; 3], 1.0).unwrap().discretize(h, 1.0).unwrap();
            let d = direct_term(&rho, &rho, &grid_kernel(rho.sites(), 1.0)).unwrap();
            (d - want).abs() / want
        })
        .collect();
    assert!(errs[2] < 1e-2, "{errs:?}");
}

#[test]
fn discretized_domains_keep_their_mass() {
    for dom in [
        Domain::ball(3, [0.0; 3], 1.0).unwrap(),
        Domain::regular_tetrahedron(2.0).unwrap(),
        Domain::cube(2, [0.0; 3], 1.5).unwrap(),
        Domain::parallelepiped([0.0; 3], [[1.0, 0.0, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap(),
    ] {
        let (lo, hi) = dom.bounding_box();
        let side = (0..dom.d()).map(|k| hi[k] - lo[k]).fold(f64::INFINITY, f64::min);
        let rho = dom.discretize(side / 8.0, 1.5).unwrap();
        let want = 1.5 * dom.volume();
        assert!((rho.total_mass() - want).abs() < 1e-2 * want);
    }
}

#[test]
fn fisher_eta_examples() {
    let cube = Domain::cube(3, [0.0; 3], 1.0).unwrap();
    assert_eq!(fisher_eta(&cube, 0.0, 10_000, 1).unwrap().value, 0.0);
    let e = fisher_eta(&cube, 0.05, 200_000, 1).unwrap();
    assert!((e.value - 0.6).abs() < 0.05, "{}", e.value);

    let b1 = Domain::ball(3, [0.0; 3], 1.0).unwrap();
    let b2 = Domain::ball(3, [0.0; 3], 2.0).unwrap();
    let (x, y) = (fisher_eta(&b1, 0.05, 200_000, 3).unwrap(), fisher_eta(&b2, 0.05, 200_000, 4).unwrap());
    assert!((x.value - y.value).abs() < 4.0 * (x.std_error.hypot(y.std_error)));

    let ts = [0.2, 0.1, 0.05, 0.025, 0.0125];
    for dom in [cube.clone(), b1.clone(), Domain::regular_tetrahedron(1.0).unwrap()] {
        let v: Vec<f64> = ts.iter().map(|&t| fisher_eta(&dom, t, 50_000, 9).unwrap().value).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
        let c = fisher_constant(&dom, &ts, 50_000, 9).unwrap();
        assert!(v.iter().zip(&ts).all(|(e, t)| *e <= c * t + 1e-12));
    }
}

#[test]
fn scaled_family_examples() {
    let sites = Arc::new(SiteSet::grid(3, 0.25, [0.0; 3], [4, 4, 4]).unwrap());
    let base = GridDensity::from_fn(sites, |p| 1.0 + p[0]).unwrap();
    let base = base.scaled(1.0 / base.total_mass()).unwrap();
    let fam = ScaledFamily::new(base.clone());
    let v = base.integral_power(4.0 / 3.0);
    let m = fam.member(8.0).unwrap();
    assert!((m.density.total_mass() - 8.0).abs() < 1e-12);
    assert!((m.density.sites().h() - 0.5).abs() < 1e-15);
    assert!((m.density.integral_power(4.0 / 3.0) - 8.0 * v).abs() < 1e-10 * v);
    assert_eq!(fam.member(1.0).unwrap().density.masses(), base.masses());
}

#[test]
fn density_csv_round_trip_and_descriptor() {
    let sites = Arc::new(SiteSet::grid(2, 0.5, [0.0; 3], [3, 2, 1]).unwrap());
    let rho = GridDensity::from_fn(sites, |p| 0.3 + p[0] * p[1]).unwrap();
    let csv = rho.to_csv();
    assert!(csv.starts_with("x,y,mass\n"));
    let back = GridDensity::from_csv(&csv, 0.5).unwrap();
    assert_eq!(back, rho);
    let desc = serde_json::to_value(rho.descriptor(Some(1.0))).unwrap();
    assert_eq!(desc["d"], 2);
    assert_eq!(desc["cell_volume"], 0.25);
    assert!(GridDensity::from_csv("x,weight\n1,2\n", 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn direct_term_is_positive_symmetric_bilinear(
        f in prop::collection::vec(0.0..2.0f64, 8),
        g in prop::collection::vec(0.0..2.0f64, 8),
        alpha in 0.1..5.0f64,
        s in 0.2..0.9f64,
    ) {
        let sites = Arc::new(SiteSet::grid(3, 0.5, [0.0; 3], [2, 2, 2]).unwrap());
        let km = grid_kernel(&sites, s * 3.0);
        let f = GridDensity::new(sites.clone(), f).unwrap();
        let g = GridDensity::new(sites.clone(), g).unwrap();
        let dff = direct_term(&f, &f, &km).unwrap();
        prop_assert!(dff >= 0.0);
        let (a, b) = (direct_term(&f, &g, &km).unwrap(), direct_term(&g, &f, &km).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        let af = f.scaled(alpha).unwrap();
        let c = direct_term(&af, &g, &km).unwrap();
        prop_assert!((c - alpha * a).abs() <= 1e-12 * c.abs().max(1e-300));
    }

    #[test]
    fn difference_of_densities_has_nonnegative_energy(
        f in prop::collection::vec(0.0..1.0f64, 6),
        g in prop::collection::vec(0.0..1.0f64, 6),
    ) {
        // D(f-g, f-g) = D(f,f) - 2D(f,g) + D(g,g) ≥ 0 tests positive definiteness on signed data.
        let sites = Arc::new(SiteSet::interval(0.0, 3.0, 6).unwrap());
        let km = grid_kernel(&sites, 0.5);
        let f = GridDensity::new(sites.clone(), f).unwrap();
        let g = GridDensity::new(sites.clone(), g).unwrap();
        let q = direct_term(&f, &f, &km).unwrap() - 2.0 * direct_term(&f, &g, &km).unwrap()
            + direct_term(&g, &g, &km).unwrap();
        prop_assert!(q >= -1e-12);
    }
}

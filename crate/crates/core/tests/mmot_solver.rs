use std::collections::HashMap;
use std::sync::Arc;

use proptest::prelude::*;
use ueglab_core::mmot::{
    indirect_energy, indirect_energy_unrestricted, lo_ratio, tensor_trial_coupling, Coupling, Method, SolverOptions,
};
use ueglab_core::monge1d::{indirect_energy_1d, SegmentDensity};
use ueglab_core::{direct_term, DiagonalRule, GridDensity, KernelMatrix, RieszKernel, SiteSet};

fn line_kernel(sites: &Arc<SiteSet>, s: f64) -> KernelMatrix {
    KernelMatrix::new(sites, &RieszKernel::new(s, sites.d()).unwrap(), DiagonalRule::CellAverage).unwrap()
}

/// Normalized positive masses summing to `n`.
fn masses(raw: &[f64], n: usize) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total * n as f64).collect()
}

#[test]
fn marginal_examples() {
    let sites = Arc::new(SiteSet::interval(0.0, 2.0, 2).unwrap());
    let p = Coupling::new(sites.clone(), 2, vec![(vec![0, 1], 0.5), (vec![1, 0], 0.5)]).unwrap();
    assert_eq!(p.marginal().masses(), &[1.0, 1.0]);

    let rho = GridDensity::new(Arc::new(SiteSet::interval(0.0, 3.0, 3).unwrap()), vec![0.5, 1.0, 1.5]).unwrap();
    let prod = Coupling::product(&rho, 3, 1 << 20).unwrap();
    for (a, b) in prod.marginal().masses().iter().zip(rho.masses()) {
        assert!((a - b).abs() < 1e-12);
    }

    // Sparse random coupling against an explicit index sum.
    let sites = Arc::new(SiteSet::interval(0.0, 5.0, 5).unwrap());
    let support = vec![(vec![0, 3, 3], 0.2), (vec![4, 1, 0], 0.3), (vec![2, 2, 2], 0.1), (vec![1, 4, 3], 0.4)];
    let p = Coupling::new(sites, 3, support.clone()).unwrap();
    let mut want = [0.0; 5];
    for (t, w) in &support {
        for &i in t {
            want[i] += w;
        }
    }
    for (a, b) in p.marginal().masses().iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!((p.marginal().total_mass() - 3.0).abs() < 1e-12);
}

#[test]
fn interaction_energy_examples() {
    let sites = Arc::new(SiteSet::new(1, 0.1, vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap());
    let km = KernelMatrix::with_exponent(&sites, 0.5, DiagonalRule::PointCenters).unwrap();
    let one = Coupling::new(sites.clone(), 1, vec![(vec![1], 1.0)]).unwrap();
    assert_eq!(one.interaction_energy(&km), 0.0);
    let two = Coupling::new(sites.clone(), 2, vec![(vec![0, 2], 1.0)]).unwrap();
    assert!((two.interaction_energy(&km) - 2f64.powf(-0.5)).abs() < 1e-14);
    let three = Coupling::new(sites, 3, vec![(vec![0, 1, 2], 1.0)]).unwrap();
    assert!((three.interaction_energy(&km) - 2.70711).abs() < 1e-5);
}

#[test]
fn two_site_lp_vertex() {
    // Off-diagonal 1, diagonal 2: the point-center rule at unit distance with a
    // cell size whose self average is 2 for s = 1/2, i.e. h^{-1/2}·8/3 = 2.
    let sites = Arc::new(SiteSet::new(1, 16.0 / 9.0, vec![[0.0; 3], [1.0, 0.0, 0.0]]).unwrap());
    let km = KernelMatrix::with_exponent(&sites, 0.5, DiagonalRule::PointCenters).unwrap();
    assert!((km.get(0, 0) - 2.0).abs() < 1e-9 && (km.get(0, 1) - 1.0).abs() < 1e-14);
    let rho = GridDensity::new(sites, vec![1.0, 1.0]).unwrap();
    let opts = SolverOptions::default();
    let r = indirect_energy(&rho, 2, &km, Method::ExactLp, &opts).unwrap();
    assert!((r.primal_upper + 2.0).abs() < 1e-9);
    let p = r.coupling.unwrap().canonical();
    assert_eq!(p.len(), 1);
    assert_eq!(p.iter().next().unwrap().0, &[0, 1]);
    let t = indirect_energy(&rho, 2, &km, Method::TrialOnly, &opts).unwrap();
    assert!((t.primal_upper + 1.5).abs() < 1e-9);
    let prod = tensor_trial_coupling(&rho, 2).unwrap();
    assert!((prod.interaction_energy(&km) - direct_term(&rho, &rho, &km).unwrap() + 1.5).abs() < 1e-9);
}

#[test]
fn tensor_trial_is_minus_direct_over_n() {
    let rho = GridDensity::uniform_interval(0.0, 3.0, 9, 1.0).unwrap();
    let km = line_kernel(rho.sites(), 0.5);
    let d = direct_term(&rho, &rho, &km).unwrap();
    let p = tensor_trial_coupling(&rho, 3).unwrap();
    assert!((p.interaction_energy(&km) - d - (-d / 3.0)).abs() < 1e-10);

    let one = GridDensity::uniform_interval(0.0, 1.0, 5, 1.0).unwrap();
    let km1 = line_kernel(one.sites(), 0.5);
    let r = indirect_energy(&one, 1, &km1, Method::TrialOnly, &SolverOptions::default()).unwrap();
    assert!((r.primal_upper + direct_term(&one, &one, &km1).unwrap()).abs() < 1e-12);
}

#[test]
fn exact_lp_report_contract() {
    let rho = GridDensity::new(Arc::new(SiteSet::interval(0.0, 5.0, 5).unwrap()), masses(&[0.3, 1.0, 0.4, 0.8, 0.5], 3))
        .unwrap();
    let km = line_kernel(rho.sites(), 0.5);
    let r = indirect_energy(&rho, 3, &km, Method::ExactLp, &SolverOptions::default()).unwrap();
    assert!(r.dual_lower <= r.primal_upper);
    assert!(r.gap <= 1e-9 * r.primal_upper.abs());
    let p = r.coupling.as_ref().unwrap();
    for (a, b) in p.marginal().masses().iter().zip(rho.masses()) {
        assert!((a - b).abs() < 1e-9);
    }
    let json = serde_json::to_value(&r).unwrap();
    for key in ["s", "d", "N", "M", "method", "primal_upper", "dual_lower", "gap", "iterations", "epsilon_schedule", "lo_ratio"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["method"], "exact_lp");
    let csv = p.to_csv();
    assert_eq!(csv.lines().count(), p.len() + 1);
}

#[test]
fn errors_are_reported() {
    let rho = GridDensity::uniform_interval(0.0, 2.5, 5, 1.0).unwrap();
    let km = line_kernel(rho.sites(), 0.5);
    let opts = SolverOptions::default();
    assert!(indirect_energy(&rho, 2, &km, Method::ExactLp, &opts).is_err());
    let rho = GridDensity::uniform_interval(0.0, 4.0, 40, 1.0).unwrap();
    let km = line_kernel(rho.sites(), 0.5);
    let small = SolverOptions { budget: 1000, ..SolverOptions::default() };
    assert!(matches!(
        indirect_energy(&rho, 4, &km, Method::ExactLp, &small),
        Err(ueglab_core::Error::BudgetExceeded { .. })
    ));
}

#[test]
fn symmetric_restriction_is_free() {
    for (raw, n) in [(vec![1.0, 0.5, 0.5], 2usize), (vec![0.7, 1.1, 0.4, 0.8], 3), (vec![1.0, 1.0, 1.0], 3)] {
        let m = raw.len();
        let rho = GridDensity::new(Arc::new(SiteSet::interval(0.0, m as f64, m).unwrap()), masses(&raw, n)).unwrap();
        let km = line_kernel(rho.sites(), 0.5);
        let sym = indirect_energy(&rho, n, &km, Method::ExactLp, &SolverOptions::default()).unwrap();
        let all = indirect_energy_unrestricted(&rho, n, &km, 1 << 20).unwrap();
        assert!((sym.primal_upper - all).abs() < 1e-9, "{} vs {all}", sym.primal_upper);
    }
}

#[test]
fn scaling_out_the_density() {
    // E(ρ0 1_Ω) = ρ0^{s/d} E(1_{ρ0^{1/d} Ω}) with the continuum value from the Monge solution.
    let s = 0.5;
    let reference = indirect_energy_1d(&SegmentDensity::uniform(0.0, 2.0, 1.0).unwrap(), 2, s).unwrap().energy;
    for rho0 in [0.125, 8.0] {
        let len = 2.0 / rho0;
        let rho = GridDensity::uniform_interval(0.0, len, 24, rho0).unwrap();
        let km = line_kernel(rho.sites(), s);
        let e = indirect_energy(&rho, 2, &km, Method::ExactLp, &SolverOptions::default()).unwrap().primal_upper;
        let want = rho0.powf(s) * reference;
        assert!((e - want).abs() < 1e-2 * want.abs(), "ρ0={rho0}: {e} vs {want}");
    }
}

#[test]
fn coulomb_instances_respect_the_lieb_oxford_envelope() {
    let coulomb = RieszKernel::coulomb();
    let cases: Vec<(Vec<f64>, usize, [usize; 3], f64)> = vec![
        (vec![1.0], 1, [1, 1, 1], 1.0),
        (vec![1.0, 1.0], 2, [2, 1, 1], 1.0),
        (vec![0.5; 4], 2, [2, 2, 1], 0.5),
        (vec![0.25; 8], 2, [2, 2, 2], 0.5),
        (vec![0.375; 8], 3, [2, 2, 2], 0.7),
    ];
    let mut best = 0.0f64;
    for (m, n, counts, h) in cases {
        let sites = Arc::new(SiteSet::grid(3, h, [0.0; 3], counts).unwrap());
        let rho = GridDensity::new(sites.clone(), m).unwrap();
        let km = KernelMatrix::new(&sites, &coulomb, DiagonalRule::CellAverage).unwrap();
        let r = indirect_energy(&rho, n, &km, Method::ExactLp, &SolverOptions::default()).unwrap();
        let ratio = lo_ratio(&rho, &r, &coulomb).unwrap();
        assert!(ratio > 0.0 && ratio <= 1.64, "{ratio}");
        best = best.max(ratio);
    }
    assert!(best > 0.9, "{best}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weak_duality_and_trial_ordering(raw in prop::collection::vec(0.05..1.0f64, 5), n in 1usize..4, s in 0.2..0.9f64) {
        let rho = GridDensity::new(Arc::new(SiteSet::interval(0.0, 5.0, 5).unwrap()), masses(&raw, n)).unwrap();
        let km = line_kernel(rho.sites(), s);
        let opts = SolverOptions::default();
        let exact = indirect_energy(&rho, n, &km, Method::ExactLp, &opts).unwrap();
        prop_assert!(exact.dual_lower <= exact.primal_upper);
        prop_assert!(exact.gap <= 1e-9 * exact.primal_upper.abs().max(1.0));
        let trial = indirect_energy(&rho, n, &km, Method::TrialOnly, &opts).unwrap();
        prop_assert!(exact.primal_upper <= trial.primal_upper + 1e-10);
        prop_assert!(exact.primal_upper >= -exact.direct - 1e-10);
    }

    #[test]
    fn symmetrization_invariance(
        picks in prop::collection::vec((0usize..4, 0usize..4, 0usize..4), 1..6),
        weights in prop::collection::vec(0.1..1.0f64, 6),
    ) {
        let sites = Arc::new(SiteSet::interval(0.0, 4.0, 4).unwrap());
        let km = line_kernel(&sites, 0.5);
        let total: f64 = weights[..picks.len()].iter().sum();
        let mut merged: HashMap<Vec<usize>, f64> = HashMap::new();
        for ((a, b, c), w) in picks.iter().zip(&weights) {
            *merged.entry(vec![*a, *b, *c]).or_default() += w / total;
        }
        let mut support: Vec<(Vec<usize>, f64)> = merged.into_iter().collect();
        support.sort_by(|x, y| x.0.cmp(&y.0));
        let p = Coupling::new(sites, 3, support).unwrap();
        let q = p.symmetrized();
        prop_assert!((p.interaction_energy(&km) - q.interaction_energy(&km)).abs() < 1e-12);
        for (a, b) in p.marginal().masses().iter().zip(q.marginal().masses()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

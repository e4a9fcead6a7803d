//! Canonical states built from a grand-canonical one by spreading its
//! components over disjoint copies of a region.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mmot::Coupling;
use crate::riesz::SiteSet;

use super::GrandCanonicalState;

const MAX_DENOMINATOR: u64 = 10_000;

/// Smallest `q ≤ max_q` with every weight an integer multiple of `1/q`
/// (within `1e-9`), together with the numerators.
pub fn rationalize_weights(weights: &[f64], max_q: u64) -> Result<(Vec<u64>, u64)> {
    let max_q = max_q.min(MAX_DENOMINATOR);
    for q in 1..=max_q {
        let p: Vec<u64> = weights.iter().map(|w| (w * q as f64).round() as u64).collect();
        let exact = weights.iter().zip(&p).all(|(w, &k)| (w * q as f64 - k as f64).abs() <= 1e-9);
        if exact && p.iter().sum::<u64>() == q {
            return Ok((p, q));
        }
    }
    Err(Error::arg(format!("weights {weights:?} have no denominator up to {max_q}")))
}

/// Numerators `p_n` with `Σ p_n = q` closest to `λ_n q` (largest remainders).
pub fn approximate_weights(weights: &[f64], q: u64) -> Vec<u64> {
    let total: f64 = weights.iter().sum();
    let scaled: Vec<f64> = weights.iter().map(|w| w / total * q as f64).collect();
    let mut p: Vec<u64> = scaled.iter().map(|x| x.floor() as u64).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (scaled[b] - scaled[b].floor()).total_cmp(&(scaled[a] - scaled[a].floor())));
    let missing = q - p.iter().sum::<u64>();
    for &k in order.iter().take(missing as usize) {
        p[k] += 1;
    }
    p
}

/// Output of [`replicate_to_canonical`].
#[derive(Debug, Clone)]
pub struct Replication {
    /// The `q` copies of the region, concatenated.
    pub sites: Arc<SiteSet>,
    /// `copies[k][r]` is the union index of the `r`-th region site in copy `k`.
    pub copies: Vec<Vec<usize>>,
    pub q: u64,
    pub coupling: Coupling,
}

/// Places the components of `state` (weights `p_n / q`, component `n` used
/// `p_n` times) on `q` translated copies of `region`, averaging over all
/// placements. Copies are shifted along the first axis.
pub fn replicate_to_canonical(
    state: &GrandCanonicalState,
    region: &[usize],
    q: u64,
    budget: u128,
) -> Result<Replication> {
    let sites = state.sites();
    let lo = region.iter().map(|&i| sites.point(i)[0]).fold(f64::INFINITY, f64::min);
    let hi = region.iter().map(|&i| sites.point(i)[0]).fold(f64::NEG_INFINITY, f64::max);
    let shift = hi - lo + sites.h();
    let translations: Vec<[f64; 3]> = (0..q).map(|k| [k as f64 * shift, 0.0, 0.0]).collect();
    replicate_with(state, region, q, &translations, budget)
}

/// As [`replicate_to_canonical`] with explicit translations of the copies.
pub fn replicate_with(
    state: &GrandCanonicalState,
    region: &[usize],
    q: u64,
    translations: &[[f64; 3]],
    budget: u128,
) -> Result<Replication> {
    if q == 0 || translations.len() as u64 != q {
        return Err(Error::arg("need one translation per copy and q ≥ 1"));
    }
    let sites = state.sites();
    let mut local = vec![usize::MAX; sites.len()];
    for (r, &i) in region.iter().enumerate() {
        if i >= sites.len() {
            return Err(Error::Geometry(format!("region site {i} out of range")));
        }
        local[i] = r;
    }
    let weights: Vec<f64> = state.components().iter().map(|(l, _)| *l).collect();
    let p: Vec<u64> = weights
        .iter()
        .map(|w| {
            let x = w * q as f64;
            if (x - x.round()).abs() > 1e-9 {
                Err(Error::arg(format!("weight {w} is not a multiple of 1/{q}")))
            } else {
                Ok(x.round() as u64)
            }
        })
        .collect::<Result<_>>()?;
    if p.iter().sum::<u64>() != q {
        return Err(Error::arg(format!("weights do not add up to {q}/{q}")));
    }

    let base = Arc::new(sites.subset(region));
    let mut union = base.translated(translations[0]);
    for t in &translations[1..] {
        union = union.union(&base.translated(*t))?;
    }
    let union = Arc::new(union);
    let m = region.len();
    let copies: Vec<Vec<usize>> = (0..q as usize).map(|k| (k * m..(k + 1) * m).collect()).collect();

    // Each component, relabelled into every copy.
    let mut placed: Vec<Vec<Coupling>> = Vec::with_capacity(weights.len());
    for (_, c) in state.components() {
        let mut per_copy = Vec::with_capacity(q as usize);
        for copy in &copies {
            let map: Vec<usize> = local.iter().map(|&r| if r == usize::MAX { usize::MAX } else { copy[r] }).collect();
            let support: Vec<(Vec<usize>, f64)> = c
                .iter()
                .map(|(t, pr)| {
                    t.iter()
                        .map(|&i| match map[i as usize] {
                            usize::MAX => Err(Error::Geometry(format!("component charges site {i} outside the region"))),
                            j => Ok(j),
                        })
                        .collect::<Result<Vec<_>>>()
                        .map(|t| (t, pr))
                })
                .collect::<Result<_>>()?;
            per_copy.push(Coupling::new(union.clone(), c.n(), support)?);
        }
        placed.push(per_copy);
    }

    let mut labels: Vec<u32> = p.iter().enumerate().flat_map(|(j, &k)| std::iter::repeat_n(j as u32, k as usize)).collect();
    let mut arrangements = Vec::new();
    loop {
        arrangements.push(labels.clone());
        if !next_permutation(&mut labels) {
            break;
        }
    }
    let size: u128 = arrangements
        .iter()
        .map(|a| a.iter().map(|&j| placed[j as usize][0].len() as u128).product::<u128>())
        .sum();
    if size > budget {
        return Err(Error::BudgetExceeded { needed: size, budget });
    }
    let weight = 1.0 / arrangements.len() as f64;
    let mut parts = Vec::with_capacity(arrangements.len());
    for a in &arrangements {
        let mut acc = Coupling::vacuum(union.clone());
        for (k, &j) in a.iter().enumerate() {
            acc = acc.tensor(&placed[j as usize][k])?;
        }
        parts.push(acc);
    }
    let refs: Vec<(f64, &Coupling)> = parts.iter().map(|c| (weight, c)).collect();
    let coupling = Coupling::mixture(&refs)?;
    Ok(Replication { sites: union, copies, q, coupling })
}

fn next_permutation(v: &mut [u32]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("successor exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_weights() {
        assert_eq!(rationalize_weights(&[0.25, 0.5, 0.25], 100).unwrap(), (vec![1, 2, 1], 4));
        assert_eq!(rationalize_weights(&[1.0 / 3.0, 2.0 / 3.0], 100).unwrap(), (vec![1, 2], 3));
        assert!(rationalize_weights(&[1.0 / 3.0, 2.0 / 3.0], 2).is_err());
        assert_eq!(approximate_weights(&[0.3, 0.7], 4), vec![1, 3]);
    }

    #[test]
    fn half_vacuum_half_particle_over_two_copies() {
        let sites = Arc::new(SiteSet::interval(0.0, 1.0, 1).unwrap());
        let state = GrandCanonicalState::new(
            sites.clone(),
            vec![(0.5, Coupling::vacuum(sites.clone())), (0.5, Coupling::new(sites, 1, vec![(vec![0], 1.0)]).unwrap())],
        )
        .unwrap();
        let r = replicate_to_canonical(&state, &[0], 2, 1000).unwrap();
        assert_eq!(r.coupling.n(), 1);
        assert_eq!(r.sites.len(), 2);
        let m = r.coupling.marginal();
        assert!((m.mass(0) - 0.5).abs() < 1e-15 && (m.mass(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_copy_is_the_component() {
        let sites = Arc::new(SiteSet::interval(0.0, 2.0, 2).unwrap());
        let c = Coupling::new(sites.clone(), 2, vec![(vec![0, 1], 1.0)]).unwrap();
        let r = replicate_to_canonical(&GrandCanonicalState::from_coupling(c), &[0, 1], 1, 1000).unwrap();
        assert_eq!(r.coupling.iter().collect::<Vec<_>>(), vec![(&[0u32, 1][..], 1.0)]);
    }
}

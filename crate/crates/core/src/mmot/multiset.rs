//! Enumeration of sorted site tuples (multisets) and their orbit sizes.

use crate::error::{Error, Result};

/// Number of multisets of size `n` drawn from `m` sites.
pub(crate) fn multiset_count(m: usize, n: usize) -> u128 {
    if n == 0 {
        return 1;
    }
    if m == 0 {
        return 0;
    }
    // C(m + n - 1, n)
    let mut c: u128 = 1;
    for k in 1..=n as u128 {
        c = c * (m as u128 - 1 + k) / k;
    }
    c
}

/// `m^n`, saturating.
pub(crate) fn configuration_count(m: usize, n: usize) -> u128 {
    (0..n).fold(1u128, |acc, _| acc.saturating_mul(m as u128))
}

pub(crate) fn check_budget(m: usize, n: usize, budget: u128) -> Result<()> {
    let needed = configuration_count(m, n);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// All non-decreasing tuples of length `n` over `0..m`, lexicographically
/// ordered and stored back to back.
pub(crate) fn multisets(m: usize, n: usize) -> Vec<u32> {
    let count = multiset_count(m, n) as usize;
    let mut out = Vec::with_capacity(count * n);
    if n == 0 {
        return out;
    }
    if m == 0 {
        return out;
    }
    let mut cur = vec![0u32; n];
    loop {
        out.extend_from_slice(&cur);
        // Rightmost position that can still grow.
        let Some(k) = (0..n).rev().find(|&k| (cur[k] as usize) < m - 1) else {
            break;
        };
        let v = cur[k] + 1;
        cur[k..].iter_mut().for_each(|x| *x = v);
    }
    out
}

/// `n! / Π mult!` for a sorted tuple.
pub(crate) fn orbit_size(sorted: &[u32]) -> f64 {
    let mut size = 1.0;
    let mut run = 0;
    for (k, v) in sorted.iter().enumerate() {
        run = if k > 0 && sorted[k - 1] == *v { run + 1 } else { 1 };
        size *= (k + 1) as f64 / run as f64;
    }
    size
}

/// Run-length encoding `(site, multiplicity)` of a sorted tuple.
pub(crate) fn counts(sorted: &[u32]) -> impl Iterator<Item = (usize, f64)> + '_ {
    let mut k = 0;
    std::iter::from_fn(move || {
        if k >= sorted.len() {
            return None;
        }
        let v = sorted[k];
        let start = k;
        while k < sorted.len() && sorted[k] == v {
            k += 1;
        }
        Some((v as usize, (k - start) as f64))
    })
}

//! Exhaustive search over all size-`k` seed sets.

use statrs::function::gamma::ln_gamma;

use super::Objective;
use crate::error::{Error, Result};

pub const DEFAULT_SUBSET_CAP: u64 = 1_000_000;

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `C(n, k)` as a float (may be huge).
pub fn binomial(n: usize, k: usize) -> f64 {
    ln_binomial(n, k).exp().round()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub seeds: Vec<usize>,
    pub value: f64,
    pub subsets: u64,
}

/// Maximizes `obj` over all size-`k` subsets in lexicographic order. Only a strictly
/// larger value replaces the incumbent, so ties go to the lexicographically smallest set.
pub fn brute_force<O: Objective + ?Sized>(obj: &O, k: usize, cap: u64) -> Result<BruteForceResult> {
    let n = obj.node_count();
    if k > n {
        return Err(Error::InvalidArgument(format!("budget k = {k} exceeds n = {n}")));
    }
    let count = binomial(n, k);
    if count > cap as f64 {
        return Err(Error::TooManySubsets { count, cap });
    }
    let mut comb: Vec<usize> = (0..k).collect();
    let mut best = (comb.clone(), obj.value(&comb));
    let mut subsets = 1u64;
    while next_combination(&mut comb, n) {
        subsets += 1;
        let f = obj.value(&comb);
        if f > best.1 {
            best = (comb.clone(), f);
        }
    }
    Ok(BruteForceResult {
        seeds: best.0,
        value: best.1,
        subsets,
    })
}

/// Advances `comb` to the next k-combination of `0..n` in lexicographic order.
pub fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Every subset of `0..n` as a bit mask, with the members listed. `n <= 20`.
pub fn all_subsets(n: usize) -> impl Iterator<Item = (u32, Vec<usize>)> {
    assert!(n <= 20);
    (0u32..(1 << n)).map(move |mask| (mask, (0..n).filter(|&v| mask >> v & 1 == 1).collect()))
}

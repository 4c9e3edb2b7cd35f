use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::{Error, Result};

/// Combined sample size up to which the exact distribution is used.
pub const EXACT_LIMIT: usize = 12;

const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Rank sum of the first sample (midranks for ties).
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
    pub exact: bool,
}

/// Midranks of the pooled sample, doubled so they are integers.
fn doubled_ranks(a: &[f64], b: &[f64]) -> Vec<u64> {
    let mut pooled: Vec<(f64, usize)> = a.iter().chain(b).copied().zip(0..).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut ranks = vec![0u64; pooled.len()];
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        // Positions i..=j share rank (i+1 + j+1)/2; doubled: i + j + 2.
        for item in &pooled[i..=j] {
            ranks[item.1] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() < 3 || b.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "rank-sum test needs at least 3 values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("NaN in rank-sum sample".into()));
    }
    Ok(())
}

/// Two-sided rank-sum test from the exact permutation distribution of the
/// midrank sum.
pub fn wilcoxon_exact(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    check(a, b)?;
    let ranks = doubled_ranks(a, b);
    let n1 = a.len();
    let n = ranks.len();
    let observed: u64 = ranks[..n1].iter().sum();
    let max_sum: usize = ranks.iter().sum::<u64>() as usize;
    // ways[j][s]: subsets of size j with doubled rank sum s.
    let mut ways = vec![vec![0f64; max_sum + 1]; n1 + 1];
    ways[0][0] = 1.0;
    for &r in &ranks {
        let r = r as usize;
        for j in (1..=n1).rev() {
            let (lo, hi) = ways.split_at_mut(j);
            for s in (r..=max_sum).rev() {
                hi[0][s] += lo[j - 1][s - r];
            }
        }
    }
    // Doubled null mean: n1 (N + 1).
    let mean2 = (n1 * (n + 1)) as i64;
    let dev = (observed as i64 - mean2).abs();
    let total: f64 = ways[n1].iter().sum();
    let tail: f64 = ways[n1]
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 - mean2).abs() >= dev)
        .map(|(_, w)| w)
        .sum();
    let p = (tail / total).min(1.0);
    Ok(WilcoxonResult {
        statistic: observed as f64 / 2.0,
        p_value: p,
        significant: p < ALPHA,
        exact: true,
    })
}

/// Two-sided rank-sum test by normal approximation with tie and continuity
/// corrections.
pub fn wilcoxon_approx(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    check(a, b)?;
    let ranks = doubled_ranks(a, b);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let w = ranks[..a.len()].iter().sum::<u64>() as f64 / 2.0;
    let mean = n1 * (n + 1.0) / 2.0;

    let mut sorted = ranks.clone();
    sorted.sort_unstable();
    let mut ties = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
        let t = j as f64;
        ties += t * t * t - t;
        i += j;
    }
    let var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    let dev = ((w - mean).abs() - 0.5).max(0.0);
    let p = if var <= 0.0 || dev == 0.0 {
        1.0
    } else {
        erfc(dev / var.sqrt() / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(WilcoxonResult {
        statistic: w,
        p_value: p,
        significant: p < ALPHA,
        exact: false,
    })
}

/// Mann-Whitney / Wilcoxon rank-sum test at the 95% level: exact when the
/// combined size is at most [`EXACT_LIMIT`], approximate otherwise.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() + b.len() <= EXACT_LIMIT {
        wilcoxon_exact(a, b)
    } else {
        wilcoxon_approx(a, b)
    }
}

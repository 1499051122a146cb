use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::metrics::midranks;
use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankBasis {
    /// `W-` is the smaller rank sum: the first sample tends to be larger.
    Negative,
    /// `W+` is the smaller (or equal) rank sum.
    Positive,
}

impl RankBasis {
    /// Table marker: `b` for negative ranks, `c` for positive ranks.
    pub fn marker(self) -> &'static str {
        match self {
            RankBasis::Negative => "b",
            RankBasis::Positive => "c",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonOptions {
    /// Shift the smaller rank sum half a unit towards its mean before the
    /// normal approximation.
    pub continuity_correction: bool,
    /// Largest sample size for which the exact null distribution is used.
    pub exact_max_n: usize,
}

impl Default for WilcoxonOptions {
    fn default() -> Self {
        WilcoxonOptions {
            continuity_correction: true,
            exact_max_n: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub n_effective: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    pub z: f64,
    pub p_two_sided: f64,
    pub rank_basis: RankBasis,
    /// Whether `p_two_sided` comes from exact enumeration.
    pub exact: bool,
}

/// Signed-rank test of `a - b` with default options.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    wilcoxon_signed_rank_with(a, b, &WilcoxonOptions::default())
}

pub fn wilcoxon_signed_rank_with(a: &[f64], b: &[f64], opts: &WilcoxonOptions) -> Result<WilcoxonResult> {
    ensure!(a.len() == b.len(), InvalidArgument, "samples of length {} and {}", a.len(), b.len());
    ensure!(!a.is_empty(), InvalidArgument, "samples are empty");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|&v| v != 0.0).collect();
    ensure!(
        d.iter().all(|v| v.is_finite()),
        InvalidArgument,
        "differences must be finite"
    );
    ensure!(!d.is_empty(), InvalidArgument, "all differences are zero");
    let n = d.len();
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus = ranks.iter().zip(&d).filter(|(_, v)| **v > 0.0).fold(0.0, |acc, (r, _)| acc + r);
    let w_minus = ranks.iter().zip(&d).filter(|(_, v)| **v < 0.0).fold(0.0, |acc, (r, _)| acc + r);
    let w_min = w_plus.min(w_minus);

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes(&abs).map(|t| t * t * t - t).sum::<f64>() / 48.0;
    let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term).sqrt();
    let shift = if opts.continuity_correction { 0.5 } else { 0.0 };
    let z = ((w_min - mean + shift).min(0.0)) / sd;

    let exact = n <= opts.exact_max_n;
    let p = if exact {
        2.0 * exact_lower_tail(&ranks, w_min)
    } else {
        2.0 * Normal::standard().cdf(z)
    };
    Ok(WilcoxonResult {
        n_effective: n,
        w_plus,
        w_minus,
        z,
        p_two_sided: p.min(1.0),
        rank_basis: if w_minus < w_plus {
            RankBasis::Negative
        } else {
            RankBasis::Positive
        },
        exact,
    })
}

/// Sizes of the groups of equal values.
fn tie_sizes(values: &[f64]) -> impl Iterator<Item = f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        sizes.push((j - i) as f64);
        i = j;
    }
    sizes.into_iter()
}

/// `P(W+ <= w)` over all `2^n` equally likely sign assignments of `ranks`.
fn exact_lower_tail(ranks: &[f64], w: f64) -> f64 {
    let n = ranks.len();
    // Midranks are multiples of 1/2, so doubled ranks are integers.
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let limit = (2.0 * w).round() as usize;
    let hits: u64 = counts[..=limit.min(max)].iter().sum();
    hits as f64 / (1u64 << n) as f64
}

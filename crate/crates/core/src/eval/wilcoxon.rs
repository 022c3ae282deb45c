use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const MIN_PAIRS: usize = 5;
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    /// `r <= 0.1` negligible, `<= 0.3` small, `<= 0.5` medium, else large.
    pub fn from_r(r: f64) -> Self {
        if r <= 0.1 {
            Magnitude::Negligible
        } else if r <= 0.3 {
            Magnitude::Small
        } else if r <= 0.5 {
            Magnitude::Medium
        } else {
            Magnitude::Large
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Pairs with a nonzero difference.
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(W+, W-)`.
    pub w: f64,
    /// Positive when `a` tends to exceed `b`.
    pub z: f64,
    pub p_value: f64,
    /// `|Z| / sqrt(n)`.
    pub r: f64,
    pub magnitude: Magnitude,
    pub significant: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum WilcoxonOutcome {
    Tested(WilcoxonResult),
    /// Every pair is tied.
    NoDifference,
    TooFewPairs { n: usize },
}

impl WilcoxonOutcome {
    pub fn result(&self) -> Option<&WilcoxonResult> {
        match self {
            WilcoxonOutcome::Tested(r) => Some(r),
            _ => None,
        }
    }
}

/// Average ranks (1-based) of `values`, ties sharing their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired scores.
///
/// Zero differences are dropped. Uses the normal approximation with
/// tie-corrected variance and a 0.5 continuity correction.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonOutcome> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch { expected: a.len(), actual: b.len() });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite score in Wilcoxon input".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonOutcome::NoDifference);
    }
    if n < MIN_PAIRS {
        return Ok(WilcoxonOutcome::TooFewPairs { n });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let nf = n as f64;
    let w_minus = nf * (nf + 1.0) / 2.0 - w_plus;

    let mut tie_term = 0.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let dev = w_plus - mean;
    let z = if var > 0.0 { dev.signum() * (dev.abs() - 0.5).max(0.0) / var.sqrt() } else { 0.0 };
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p_value = (2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0);
    let r = z.abs() / nf.sqrt();
    Ok(WilcoxonOutcome::Tested(WilcoxonResult {
        n,
        w_plus,
        w_minus,
        w: w_plus.min(w_minus),
        z,
        p_value,
        r,
        magnitude: Magnitude::from_r(r),
        significant: p_value < SIGNIFICANCE_LEVEL,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), [3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn equal_inputs_have_no_difference() {
        let a = [0.1, 0.2, 0.3, 0.4, 0.5];
        assert_eq!(wilcoxon_signed_rank(&a, &a).unwrap(), WilcoxonOutcome::NoDifference);
        assert_eq!(
            wilcoxon_signed_rank(&a, &[0.1, 0.2, 0.3, 0.0, 0.0]).unwrap(),
            WilcoxonOutcome::TooFewPairs { n: 2 }
        );
    }

    #[test]
    fn magnitude_thresholds() {
        assert_eq!(Magnitude::from_r(2.5 / 25f64.sqrt()), Magnitude::Medium);
        assert_eq!(Magnitude::from_r(0.1), Magnitude::Negligible);
        assert_eq!(Magnitude::from_r(0.10001), Magnitude::Small);
        assert_eq!(Magnitude::from_r(0.3), Magnitude::Small);
        assert_eq!(Magnitude::from_r(0.5000001), Magnitude::Large);
    }

    #[test]
    fn swap_flips_z() {
        let a = [0.9, 0.8, 0.75, 0.6, 0.55, 0.5, 0.45, 0.2];
        let b = [0.5, 0.7, 0.70, 0.65, 0.3, 0.45, 0.1, 0.1];
        let x = *wilcoxon_signed_rank(&a, &b).unwrap().result().unwrap();
        let y = *wilcoxon_signed_rank(&b, &a).unwrap().result().unwrap();
        assert_eq!(x.z, -y.z);
        assert_eq!(x.p_value, y.p_value);
        assert_eq!(x.w, y.w);
        assert!(x.z > 0.0);
    }
}

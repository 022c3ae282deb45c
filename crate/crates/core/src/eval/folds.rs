use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};

pub const N_FOLDS: usize = 5;
pub const N_ROUNDS: usize = 3;

/// Contiguous partition of a time-sorted corpus into five folds. Sizes differ
/// by at most one; earlier folds take the remainder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimeFolds {
    folds: [Range<usize>; N_FOLDS],
}

/// Round `i` trains on folds `1..=i`, validates on `i+1` and tests on `i+2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundSpec {
    pub round: usize,
    pub train: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

pub fn split_time_folds(n: usize) -> Result<TimeFolds> {
    if n < N_FOLDS {
        return Err(Error::Input(format!("need at least {N_FOLDS} records for time folds, got {n}")));
    }
    let (base, rem) = (n / N_FOLDS, n % N_FOLDS);
    let mut start = 0;
    let folds = std::array::from_fn(|i| {
        let len = base + usize::from(i < rem);
        let r = start..start + len;
        start += len;
        r
    });
    Ok(TimeFolds { folds })
}

impl TimeFolds {
    pub fn folds(&self) -> &[Range<usize>; N_FOLDS] {
        &self.folds
    }

    pub fn sizes(&self) -> [usize; N_FOLDS] {
        self.folds.each_ref().map(|r| r.len())
    }

    /// Rounds 1 to 3.
    pub fn rounds(&self) -> Vec<RoundSpec> {
        (1..=N_ROUNDS)
            .map(|i| RoundSpec {
                round: i,
                train: 0..self.folds[i - 1].end,
                validation: self.folds[i].clone(),
                test: self.folds[i + 1].clone(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_sizes() {
        assert_eq!(split_time_folds(10).unwrap().sizes(), [2, 2, 2, 2, 2]);
        assert_eq!(split_time_folds(12).unwrap().sizes(), [3, 3, 2, 2, 2]);
        assert!(split_time_folds(4).is_err());
    }

    #[test]
    fn round_one_on_ten() {
        let r = &split_time_folds(10).unwrap().rounds()[0];
        assert_eq!((r.train.clone(), r.validation.clone(), r.test.clone()), (0..2, 2..4, 4..6));
        let last = &split_time_folds(10).unwrap().rounds()[2];
        assert_eq!((last.train.clone(), last.test.clone()), (0..6, 8..10));
    }
}

//! Random regroupings of a test's samples and the decoy scores they produce.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::GroupedSamples;
use crate::error::{Result, TdError};
use crate::scores::{ScoreKernel, ScoreKind};

/// Default cap on the total number of scores per test (1 target + 49 decoys).
pub const DEFAULT_TAU: u64 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PermutationMode {
    WithReplacement,
    Exhaustive,
}

/// How many scores each test gets and how the decoys are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationBudget {
    /// Total scores per test: one target plus `t - 1` decoys.
    pub t: u64,
    pub tau: u64,
    pub mode: PermutationMode,
}

impl PermutationBudget {
    pub fn decoys(&self) -> usize {
        (self.t - 1) as usize
    }
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc * (n - k + i) / i stays integral at every step
        acc = acc * u128::from(n - k + i) / u128::from(i);
        if acc > u128::from(u64::MAX) {
            return u64::MAX;
        }
    }
    acc as u64
}

/// `t = min(C(n, n0), tau)`; exhaustive enumeration when every regrouping fits.
pub fn resolve_budget(n: usize, n0: usize, tau: u64) -> Result<PermutationBudget> {
    if tau < 2 {
        return Err(TdError::InvalidParameter(format!(
            "permutation cap must allow at least one decoy (tau >= 2), got {tau}"
        )));
    }
    if n0 == 0 || n0 >= n {
        return Err(TdError::InvalidGroups(format!(
            "both groups must be nonempty (n = {n}, n0 = {n0})"
        )));
    }
    let total = binomial(n as u64, n0 as u64);
    Ok(if total <= tau {
        PermutationBudget {
            t: total,
            tau,
            mode: PermutationMode::Exhaustive,
        }
    } else {
        PermutationBudget {
            t: tau,
            tau,
            mode: PermutationMode::WithReplacement,
        }
    })
}

/// An ordering of sample indices; the first `n1` positions are the cases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Regrouping {
    pub assignment: Vec<usize>,
    pub n1: usize,
}

impl Regrouping {
    /// Case indices in ascending order.
    pub fn case_subset(&self) -> Vec<usize> {
        let mut cases = self.assignment[..self.n1].to_vec();
        cases.sort_unstable();
        cases
    }
}

/// Uniformly random ordering of `0..n` (the identity included).
pub fn sample_regrouping<R: Rng + ?Sized>(n: usize, n1: usize, rng: &mut R) -> Regrouping {
    assert!(n1 <= n, "n1 = {n1} exceeds n = {n}");
    let mut assignment: Vec<usize> = (0..n).collect();
    assignment.shuffle(rng);
    Regrouping { assignment, n1 }
}

/// The `t - 1` decoy scores for one test.
pub fn decoy_scores<R: Rng + ?Sized>(
    s: &GroupedSamples,
    kind: ScoreKind,
    budget: &PermutationBudget,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let kernel = ScoreKernel::new(kind, s.values());
    kernel_decoys(&kernel, s.n1(), budget, rng)
}

pub(crate) fn kernel_decoys<R: Rng + ?Sized>(
    kernel: &ScoreKernel,
    n1: usize,
    budget: &PermutationBudget,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = kernel.n();
    let mut mask = vec![false; n];
    let mut out = Vec::with_capacity(budget.decoys());
    match budget.mode {
        PermutationMode::WithReplacement => {
            let mut indices: Vec<usize> = (0..n).collect();
            for _ in 0..budget.decoys() {
                // A partial shuffle draws the case subset with the same law as the
                // first n1 entries of a full uniform ordering.
                let (chosen, _) = indices.partial_shuffle(rng, n1);
                out.push(kernel.score_with_mask(chosen.iter().copied(), &mut mask)?);
            }
        }
        PermutationMode::Exhaustive => {
            for subset in (0..n).combinations(n1) {
                if subset.iter().enumerate().all(|(k, &i)| k == i) {
                    // original grouping: cases are the prefix 0..n1
                    continue;
                }
                out.push(kernel.score_with_mask(subset.into_iter(), &mut mask)?);
            }
            debug_assert_eq!(out.len(), budget.decoys());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scores::score;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(20, 10), 184_756);
        assert_eq!(binomial(10, 5), 252);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(200, 100), u64::MAX);
        assert_eq!(binomial(67, 33), 14_226_520_737_620_288_370);
    }

    #[test]
    fn budget_examples() {
        let b = resolve_budget(6, 3, 50).unwrap();
        assert_eq!((b.t, b.mode), (20, PermutationMode::Exhaustive));
        let b = resolve_budget(20, 10, 50).unwrap();
        assert_eq!((b.t, b.mode), (50, PermutationMode::WithReplacement));
        let b = resolve_budget(4, 2, 2).unwrap();
        assert_eq!((b.t, b.mode), (2, PermutationMode::WithReplacement));
        assert!(resolve_budget(4, 0, 50).is_err());
        assert!(resolve_budget(4, 4, 50).is_err());
        assert!(resolve_budget(4, 2, 1).is_err());
    }

    #[test]
    fn regrouping_is_a_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = sample_regrouping(7, 3, &mut rng);
        let mut sorted = g.assignment.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..7).collect::<Vec<_>>());
        assert_eq!(g.case_subset().len(), 3);

        let full = sample_regrouping(3, 3, &mut rng);
        assert_eq!(full.case_subset(), vec![0, 1, 2]);
    }

    #[test]
    fn regrouping_is_deterministic_per_seed() {
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..20).map(|_| sample_regrouping(10, 4, &mut rng)).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..20).map(|_| sample_regrouping(10, 4, &mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn two_sample_regrouping_is_fair() {
        // chi-square with 1 df against 1/2, 1/2; critical value at 1e-3 is 10.83
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let first = (0..draws)
            .filter(|_| sample_regrouping(2, 1, &mut rng).case_subset() == vec![0])
            .count() as f64;
        let e = draws as f64 / 2.0;
        let chi2 = (first - e).powi(2) / e + (draws as f64 - first - e).powi(2) / e;
        assert!(chi2 < 10.83, "chi2 = {chi2}");
    }

    #[test]
    fn exhaustive_decoys_enumerate_all_other_subsets() {
        let s = GroupedSamples::from_groups(&[10.0, 10.0], &[0.0, 0.0]).unwrap();
        let budget = resolve_budget(4, 2, 50).unwrap();
        assert_eq!(budget.t, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let decoys = decoy_scores(&s, ScoreKind::RankSumCentered, &budget, &mut rng).unwrap();
        // subsets by hand: {0,1} is the target (|7 - 5| = 2), {2,3} mirrors it,
        // the four mixed subsets have W = 3.5 + 1.5 = 5
        let mut d = decoys.clone();
        d.sort_by(f64::total_cmp);
        assert_eq!(d, vec![0.0, 0.0, 0.0, 0.0, 2.0]);

        // same structure with the t score on non-degenerate data
        let s = GroupedSamples::from_groups(&[10.0, 11.0], &[0.0, 1.0]).unwrap();
        let target = score(ScoreKind::AbsT, &s).unwrap();
        let decoys = decoy_scores(&s, ScoreKind::AbsT, &budget, &mut rng).unwrap();
        assert_eq!(decoys.len(), 5);
        assert_eq!(decoys.iter().filter(|&&d| d == target).count(), 1);
        assert!(decoys.iter().filter(|&&d| d != target).all(|&d| d < 1.0));
    }

    #[test]
    fn exhaustive_never_repeats_the_original() {
        let values = [1.0, 2.5, 3.0, 4.0, 5.0, 6.5];
        let s = GroupedSamples::from_groups(&values[..3], &values[3..]).unwrap();
        let budget = resolve_budget(6, 3, 50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut decoys = decoy_scores(&s, ScoreKind::SignedT, &budget, &mut rng).unwrap();
        assert_eq!(decoys.len(), 19);

        // brute force: score every 3-subset by rebuilding the samples
        let mut expected = Vec::new();
        for a in 0..6 {
            for b in a + 1..6 {
                for c in b + 1..6 {
                    if (a, b, c) == (0, 1, 2) {
                        continue;
                    }
                    let cases: Vec<f64> = [a, b, c].iter().map(|&i| values[i]).collect();
                    let controls: Vec<f64> =
                        (0..6).filter(|i| ![a, b, c].contains(i)).map(|i| values[i]).collect();
                    let g = GroupedSamples::from_groups(&cases, &controls).unwrap();
                    expected.push(score(ScoreKind::SignedT, &g).unwrap());
                }
            }
        }
        decoys.sort_by(f64::total_cmp);
        expected.sort_by(f64::total_cmp);
        assert_eq!(decoys, expected);
    }

    #[test]
    fn single_decoy_budget() {
        let s = GroupedSamples::from_groups(&[1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 5.0, 8.0]).unwrap();
        let budget = resolve_budget(8, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(decoy_scores(&s, ScoreKind::AbsT, &budget, &mut rng).unwrap().len(), 1);
    }

    #[test]
    fn constant_samples_tie_every_decoy() {
        let s = GroupedSamples::from_groups(&[3.0; 5], &[3.0; 5]).unwrap();
        let budget = resolve_budget(10, 5, 50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let target = score(ScoreKind::RankSumCentered, &s).unwrap();
        let decoys = decoy_scores(&s, ScoreKind::RankSumCentered, &budget, &mut rng).unwrap();
        assert!(decoys.iter().all(|&d| d == target));
        // t is undefined on constant data and the error propagates
        assert!(decoy_scores(&s, ScoreKind::AbsT, &budget, &mut rng).is_err());
    }
}

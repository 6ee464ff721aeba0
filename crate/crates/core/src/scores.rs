//! Group-difference scores.
//!
//! Every score is evaluated over the test's values in ascending order, so the
//! result depends only on the multiset of case values and the multiset of
//! control values. This makes scores bit-identical under any reordering inside
//! either group, which the decoy construction relies on.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::GroupedSamples;
use crate::error::{Result, TdError};

/// Score functions. Larger values are more significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreKind {
    /// |pooled-variance t|.
    AbsT,
    /// Pooled-variance t, case mean minus control mean.
    SignedT,
    /// |W − n1(n+1)/2| with W the case rank sum (midranks for ties).
    RankSumCentered,
    /// W − n1(n+1)/2, large when cases rank high.
    RankSumSigned,
}

impl ScoreKind {
    pub const ALL: [ScoreKind; 4] = [
        ScoreKind::AbsT,
        ScoreKind::SignedT,
        ScoreKind::RankSumCentered,
        ScoreKind::RankSumSigned,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScoreKind::AbsT => "t",
            ScoreKind::SignedT => "tsigned",
            ScoreKind::RankSumCentered => "ranksum",
            ScoreKind::RankSumSigned => "ranksumsigned",
        }
    }

    /// Whether the score only rewards cases exceeding controls.
    pub fn is_signed(self) -> bool {
        matches!(self, ScoreKind::SignedT | ScoreKind::RankSumSigned)
    }
}

impl std::str::FromStr for ScoreKind {
    type Err = TdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" | "abs-t" | "t-value" => Ok(ScoreKind::AbsT),
            "tsigned" | "signed-t" | "t-signed" => Ok(ScoreKind::SignedT),
            "ranksum" | "rank-sum" | "wilcoxon" => Ok(ScoreKind::RankSumCentered),
            "ranksumsigned" | "signed-rank-sum" | "rank-sum-signed" => Ok(ScoreKind::RankSumSigned),
            other => Err(TdError::InvalidParameter(format!("unknown score kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Two-sample pooled-variance t statistic.
pub fn t_statistic(s: &GroupedSamples, absolute: bool) -> Result<f64> {
    let kind = if absolute { ScoreKind::AbsT } else { ScoreKind::SignedT };
    score(kind, s)
}

/// Centered Wilcoxon rank-sum statistic `|W − n1(n+1)/2|`.
pub fn rank_sum_statistic(s: &GroupedSamples) -> f64 {
    score(ScoreKind::RankSumCentered, s).expect("rank-sum score is total")
}

pub fn score(kind: ScoreKind, s: &GroupedSamples) -> Result<f64> {
    let kernel = ScoreKernel::new(kind, s.values());
    kernel.score_subset(0..s.n1())
}

/// Checks that `kind` returns bit-identical values under `trials` random
/// within-group permutations of `s`.
pub fn check_group_symmetry<R: Rng + ?Sized>(
    kind: ScoreKind,
    s: &GroupedSamples,
    trials: usize,
    rng: &mut R,
) -> bool {
    check_symmetry_with(|x| score(kind, x), s, trials, rng)
}

/// Same as [`check_group_symmetry`] for an arbitrary score function.
pub fn check_symmetry_with<F, R>(score_fn: F, s: &GroupedSamples, trials: usize, rng: &mut R) -> bool
where
    F: Fn(&GroupedSamples) -> Result<f64>,
    R: Rng + ?Sized,
{
    let reference = score_fn(s).map(f64::to_bits);
    let mut cases = s.cases().to_vec();
    let mut controls = s.controls().to_vec();
    for _ in 0..trials {
        cases.shuffle(rng);
        controls.shuffle(rng);
        let permuted = GroupedSamples::from_groups(&cases, &controls)
            .expect("permutation preserves group sizes");
        let value = score_fn(&permuted).map(f64::to_bits);
        match (&reference, &value) {
            (Ok(a), Ok(b)) if a == b => {}
            (Err(_), Err(_)) => {}
            _ => return false,
        }
    }
    true
}

/// A test's values prepared for repeated scoring under different case subsets.
///
/// Values are held in ascending order; a grouping is described by a mask over
/// that order, and every accumulation walks the sorted values front to back.
#[derive(Debug, Clone)]
pub(crate) struct ScoreKernel {
    kind: ScoreKind,
    sorted: Vec<f64>,
    /// `position[i]` is where original sample `i` sits in `sorted`.
    position: Vec<usize>,
    /// Midranks aligned with `sorted`; empty for t scores.
    ranks: Vec<f64>,
}

impl ScoreKernel {
    pub(crate) fn new(kind: ScoreKind, values: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        let mut position = vec![0; values.len()];
        for (k, &i) in order.iter().enumerate() {
            position[i] = k;
        }
        let ranks = match kind {
            ScoreKind::RankSumCentered | ScoreKind::RankSumSigned => midranks(&sorted),
            _ => Vec::new(),
        };
        Self {
            kind,
            sorted,
            position,
            ranks,
        }
    }

    pub(crate) fn n(&self) -> usize {
        self.sorted.len()
    }

    /// Score with the given original sample indices as cases.
    pub(crate) fn score_subset(&self, cases: impl IntoIterator<Item = usize>) -> Result<f64> {
        let mut mask = vec![false; self.n()];
        self.score_with_mask(cases, &mut mask)
    }

    /// Like [`score_subset`](Self::score_subset), reusing `mask` as scratch.
    pub(crate) fn score_with_mask(
        &self,
        cases: impl IntoIterator<Item = usize>,
        mask: &mut [bool],
    ) -> Result<f64> {
        mask.fill(false);
        let mut n1 = 0;
        for i in cases {
            mask[self.position[i]] = true;
            n1 += 1;
        }
        match self.kind {
            ScoreKind::AbsT => self.t_from_mask(mask, n1).map(f64::abs),
            ScoreKind::SignedT => self.t_from_mask(mask, n1),
            ScoreKind::RankSumCentered => Ok(self.rank_sum_from_mask(mask, n1).abs()),
            ScoreKind::RankSumSigned => Ok(self.rank_sum_from_mask(mask, n1)),
        }
    }

    fn t_from_mask(&self, mask: &[bool], n1: usize) -> Result<f64> {
        let n = self.n();
        let n0 = n - n1;
        let (mut sum1, mut sum0) = (0.0, 0.0);
        let (mut lo1, mut hi1, mut lo0, mut hi0) = (f64::NAN, f64::NAN, f64::NAN, f64::NAN);
        for (&x, &is_case) in self.sorted.iter().zip(mask) {
            if is_case {
                sum1 += x;
                if lo1.is_nan() {
                    lo1 = x;
                }
                hi1 = x;
            } else {
                sum0 += x;
                if lo0.is_nan() {
                    lo0 = x;
                }
                hi0 = x;
            }
        }
        if lo1 == hi1 && lo0 == hi0 {
            return Err(TdError::DegenerateVariance);
        }
        let mean1 = sum1 / n1 as f64;
        let mean0 = sum0 / n0 as f64;
        let (mut ss1, mut ss0) = (0.0, 0.0);
        for (&x, &is_case) in self.sorted.iter().zip(mask) {
            if is_case {
                ss1 += (x - mean1) * (x - mean1);
            } else {
                ss0 += (x - mean0) * (x - mean0);
            }
        }
        let pooled = (ss1 + ss0) / (n - 2) as f64;
        if pooled <= 0.0 {
            return Err(TdError::DegenerateVariance);
        }
        let se = (pooled * (1.0 / n1 as f64 + 1.0 / n0 as f64)).sqrt();
        Ok((mean1 - mean0) / se)
    }

    fn rank_sum_from_mask(&self, mask: &[bool], n1: usize) -> f64 {
        let w: f64 = self
            .ranks
            .iter()
            .zip(mask)
            .filter(|(_, &c)| c)
            .map(|(r, _)| r)
            .sum();
        let expected = n1 as f64 * (self.n() as f64 + 1.0) / 2.0;
        w - expected
    }
}

/// 1-based midranks of an ascending slice.
pub(crate) fn midranks(sorted: &[f64]) -> Vec<f64> {
    let mut ranks = vec![0.0; sorted.len()];
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end].total_cmp(&sorted[start]) == Ordering::Equal {
            end += 1;
        }
        // positions start..end share ranks start+1..=end
        let mid = (start + 1 + end) as f64 / 2.0;
        ranks[start..end].fill(mid);
        start = end;
    }
    ranks
}

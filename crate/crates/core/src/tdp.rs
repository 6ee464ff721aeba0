//! Target-decoy procedures: per-test labelling, global ranking, threshold
//! selection, and the adaptive choice of `r`.
//!
//! A run is split into three stages so that callers evaluating many FDR
//! levels can reuse the expensive parts:
//!
//! 1. [`score_dataset`]: target score, decoy scores and target rank per test.
//! 2. [`label_dataset`]: T/D/U labels, final scores and the global ranking.
//! 3. [`LabeledSet::decide`]: the threshold `K` and the rejected set for one α.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::GroupedDataset;
use crate::error::{Result, TdError};
use crate::permute::{binomial, kernel_decoys, resolve_budget, PermutationMode, DEFAULT_TAU};
use crate::rng::{derive_seed, domain, stream};
use crate::scores::{ScoreKernel, ScoreKind};

/// The grid of `r` values tried by the adaptive procedure by default.
pub const DEFAULT_R_GRID: [f64; 7] = [1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 25.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Standard,
    Simplified,
    Adaptive,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Simplified => "simplified",
            Variant::Adaptive => "adaptive",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = TdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Variant::Standard),
            "simplified" => Ok(Variant::Simplified),
            "adaptive" => Ok(Variant::Adaptive),
            other => Err(TdError::InvalidParameter(format!("unknown variant {other:?}"))),
        }
    }
}

/// How the adaptive procedure picks the part-one group size `n2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum N2Policy {
    /// Largest `n2 <= min(n0/2, n1/2)` whose exhaustive count `C(2 n2, n2)`
    /// fits within the part-one cap.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdConfig {
    pub variant: Variant,
    pub r: f64,
    pub alpha: f64,
    /// Cap on the total number of scores per test.
    pub tau: u64,
    pub seed: u64,
    pub adaptive_r_grid: Vec<f64>,
    pub adaptive_n2: N2Policy,
    pub adaptive_tau_part1: u64,
    pub adaptive_min_n2: usize,
}

impl Default for TdConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Simplified,
            r: 1.0,
            alpha: 0.05,
            tau: DEFAULT_TAU,
            seed: 0,
            adaptive_r_grid: DEFAULT_R_GRID.to_vec(),
            adaptive_n2: N2Policy::Auto,
            adaptive_tau_part1: 252,
            adaptive_min_n2: 5,
        }
    }
}

impl TdConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        check_r(self.r)?;
        if self.variant == Variant::Simplified && self.r != 1.0 {
            return Err(TdError::InvalidParameter(format!(
                "the simplified variant fixes r = 1, got r = {}",
                self.r
            )));
        }
        if self.tau < 2 {
            return Err(TdError::InvalidParameter(format!("tau must be >= 2, got {}", self.tau)));
        }
        if self.variant == Variant::Adaptive {
            if self.adaptive_r_grid.is_empty() {
                return Err(TdError::InvalidParameter("adaptive r grid is empty".into()));
            }
            for &r in &self.adaptive_r_grid {
                check_r(r)?;
            }
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(TdError::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

fn check_r(r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 1.0) {
        return Err(TdError::InvalidParameter(format!("r must be a finite value >= 1, got {r}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    T,
    D,
    U,
}

impl Label {
    pub fn as_char(self) -> char {
        match self {
            Label::T => 'T',
            Label::D => 'D',
            Label::U => 'U',
        }
    }
}

/// A final score, or the sentinel carried by unused tests which orders below
/// every real score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalScore {
    Score(f64),
    Bottom,
}

impl FinalScore {
    pub fn value(self) -> Option<f64> {
        match self {
            FinalScore::Score(v) => Some(v),
            FinalScore::Bottom => None,
        }
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (FinalScore::Score(a), FinalScore::Score(b)) => a.total_cmp(b),
            (FinalScore::Score(_), FinalScore::Bottom) => Ordering::Greater,
            (FinalScore::Bottom, FinalScore::Score(_)) => Ordering::Less,
            (FinalScore::Bottom, FinalScore::Bottom) => Ordering::Equal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelOutcome {
    pub label: Label,
    pub final_score: FinalScore,
    /// `rank - P`, drawn by the standard variant only.
    pub lambda: Option<f64>,
}

/// Sorts the target with its decoys in descending order and returns the
/// target's 1-based rank, with ties ordered uniformly at random.
pub fn rank_target<R: Rng + ?Sized>(target: f64, decoys: &[f64], rng: &mut R) -> (usize, Vec<f64>) {
    let mut greater = 0;
    let mut ties = 0;
    for d in decoys {
        match d.total_cmp(&target) {
            Ordering::Greater => greater += 1,
            Ordering::Equal => ties += 1,
            Ordering::Less => {}
        }
    }
    let offset = if ties == 0 { 0 } else { rng.random_range(0..=ties) };
    let mut sorted = Vec::with_capacity(decoys.len() + 1);
    sorted.push(target);
    sorted.extend_from_slice(decoys);
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    (greater + offset + 1, sorted)
}

/// Standard labelling rule for one test.
pub fn label_standard<R: Rng + ?Sized>(
    sorted: &[f64],
    rank: usize,
    t: usize,
    r: f64,
    rng: &mut R,
) -> LabelOutcome {
    let p: f64 = rng.random();
    let half = t as f64 / 2.0;
    let lambda = rank as f64 - p;
    // Λ' is only drawn on the decoy branch
    let lambda_prime = if lambda > half {
        let u: f64 = rng.random();
        (t as f64 / (2.0 * r)) * (1.0 - u)
    } else {
        f64::NAN
    };
    label_standard_with(sorted, rank, t, r, p, lambda_prime)
}

/// [`label_standard`] with its random inputs supplied: `p` in `[0, 1)` and
/// `lambda_prime` in `(0, t / (2r)]`.
pub fn label_standard_with(
    sorted: &[f64],
    rank: usize,
    t: usize,
    r: f64,
    p: f64,
    lambda_prime: f64,
) -> LabelOutcome {
    debug_assert!((1..=t).contains(&rank) && sorted.len() == t);
    let lambda = rank as f64 - p;
    let (label, final_score) = if lambda <= t as f64 / (2.0 * r) {
        (Label::T, FinalScore::Score(sorted[rank - 1]))
    } else if lambda > t as f64 / 2.0 {
        let idx = (lambda_prime.ceil() as usize).clamp(1, t);
        (Label::D, FinalScore::Score(sorted[idx - 1]))
    } else {
        (Label::U, FinalScore::Bottom)
    };
    LabelOutcome {
        label,
        final_score,
        lambda: Some(lambda),
    }
}

/// Simplified labelling rule (r = 1): every test becomes T or D.
pub fn label_simplified<R: Rng + ?Sized>(sorted: &[f64], rank: usize, t: usize, rng: &mut R) -> LabelOutcome {
    debug_assert!((1..=t).contains(&rank) && sorted.len() == t);
    let target = FinalScore::Score(sorted[rank - 1]);
    let (label, final_score) = match (2 * rank).cmp(&(t + 1)) {
        Ordering::Less => (Label::T, target),
        Ordering::Greater => (Label::D, FinalScore::Score(sorted[rank - t.div_ceil(2) - 1])),
        Ordering::Equal => {
            let label = if rng.random::<bool>() { Label::T } else { Label::D };
            (label, target)
        }
    };
    LabelOutcome {
        label,
        final_score,
        lambda: None,
    }
}

/// Deepest `k` with `(#D + 1) / (max(#T, 1) · r) <= alpha` over the first `k`
/// labels, or 0. Unused labels count toward neither tally.
pub fn select_threshold(labels_in_rank_order: &[Label], r: f64, alpha: f64) -> usize {
    let mut targets = 0usize;
    let mut decoys = 0usize;
    let mut k_max = 0;
    for (k, label) in labels_in_rank_order.iter().enumerate() {
        match label {
            Label::T => targets += 1,
            Label::D => decoys += 1,
            Label::U => {}
        }
        if estimated_fdr(decoys, targets, r) <= alpha {
            k_max = k + 1;
        }
    }
    k_max
}

/// The decoy-based FDR estimate `(1/r) · (#D + 1) / max(#T, 1)`.
pub fn estimated_fdr(decoys: usize, targets: usize, r: f64) -> f64 {
    (decoys + 1) as f64 / (targets.max(1) as f64 * r)
}

/// Target rank and sorted scores for one test.
#[derive(Debug, Clone)]
pub struct ScoredTest {
    pub id: usize,
    /// `None` when the score is undefined for this test (degenerate variance).
    pub target: Option<f64>,
    pub rank: usize,
    pub sorted: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScoredSet {
    pub t: usize,
    pub mode: PermutationMode,
    /// `C(n, n0)` for the scored design.
    pub groupings: u64,
    pub tests: Vec<ScoredTest>,
}

/// Scores every test of `dataset` with `t = min(C(n, n0), tau)` scores each.
///
/// Test `j` draws from its own stream, so the result is the same for any
/// thread count.
pub fn score_dataset(dataset: &GroupedDataset, kind: ScoreKind, tau: u64, seed: u64) -> Result<ScoredSet> {
    let budget = resolve_budget(dataset.n(), dataset.n0(), tau)?;
    let n1 = dataset.n1();
    let tests = (0..dataset.m())
        .into_par_iter()
        .map(|j| {
            let mut rng = stream(seed, domain::SCORE, j as u64);
            let sample = dataset.test(j);
            let kernel = ScoreKernel::new(kind, sample.values());
            let scored = kernel
                .score_subset(0..n1)
                .and_then(|target| Ok((target, kernel_decoys(&kernel, n1, &budget, &mut rng)?)));
            match scored {
                Ok((target, decoys)) => {
                    let (rank, sorted) = rank_target(target, &decoys, &mut rng);
                    ScoredTest {
                        id: j,
                        target: Some(target),
                        rank,
                        sorted,
                    }
                }
                Err(_) => ScoredTest {
                    id: j,
                    target: None,
                    rank: 0,
                    sorted: Vec::new(),
                },
            }
        })
        .collect();
    Ok(ScoredSet {
        t: budget.t as usize,
        mode: budget.mode,
        groupings: binomial(dataset.n() as u64, dataset.n0() as u64),
        tests,
    })
}

/// Per-test outcome of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledTest {
    pub id: usize,
    pub target_score: Option<f64>,
    /// Rank of the target among its `t` scores; 0 for degenerate tests.
    pub rank: usize,
    pub lambda: Option<f64>,
    pub label: Label,
    pub final_score: FinalScore,
    /// 1-based position in the global ranking by final score.
    pub global_rank: usize,
}

/// Labels plus the global ranking, ready for threshold selection at any α.
#[derive(Debug, Clone)]
pub struct LabeledSet {
    pub r: f64,
    pub t: usize,
    pub mode: PermutationMode,
    /// Indexed by test id.
    pub tests: Vec<LabeledTest>,
    /// Test ids in global rank order.
    pub order: Vec<usize>,
}

/// Labels every scored test and ranks the tests by final score.
///
/// `variant` must be [`Variant::Standard`] or [`Variant::Simplified`]; the
/// simplified rule ignores `r`.
pub fn label_dataset(scored: &ScoredSet, variant: Variant, r: f64, seed: u64) -> Result<LabeledSet> {
    let r = match variant {
        Variant::Standard => {
            check_r(r)?;
            if r > scored.groupings as f64 {
                return Err(TdError::InvalidParameter(format!(
                    "r = {r} exceeds the number of distinct groupings {}",
                    scored.groupings
                )));
            }
            r
        }
        Variant::Simplified => 1.0,
        Variant::Adaptive => {
            return Err(TdError::InvalidParameter(
                "the adaptive variant labels through adaptive_run".into(),
            ))
        }
    };
    let t = scored.t;
    let mut tests: Vec<LabeledTest> = scored
        .tests
        .par_iter()
        .map(|s| {
            let mut rng = stream(seed, domain::LABEL, s.id as u64);
            let outcome = match s.target {
                None => LabelOutcome {
                    label: Label::U,
                    final_score: FinalScore::Bottom,
                    lambda: None,
                },
                Some(_) if variant == Variant::Standard => label_standard(&s.sorted, s.rank, t, r, &mut rng),
                Some(_) => label_simplified(&s.sorted, s.rank, t, &mut rng),
            };
            LabeledTest {
                id: s.id,
                target_score: s.target,
                rank: s.rank,
                lambda: outcome.lambda,
                label: outcome.label,
                final_score: outcome.final_score,
                global_rank: 0,
            }
        })
        .collect();

    let mut tie_rng = stream(seed, domain::GLOBAL_TIES, 0);
    let keys: Vec<u64> = (0..tests.len()).map(|_| tie_rng.random()).collect();
    let mut order: Vec<usize> = (0..tests.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        tests[b]
            .final_score
            .total_cmp(&tests[a].final_score)
            .then(keys[a].cmp(&keys[b]))
            .then(a.cmp(&b))
    });
    for (pos, &id) in order.iter().enumerate() {
        tests[id].global_rank = pos + 1;
    }
    Ok(LabeledSet {
        r,
        t,
        mode: scored.mode,
        tests,
        order,
    })
}

/// Summary of the adaptive choice of `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveInfo {
    pub n2: usize,
    pub part1_t: usize,
    pub r_grid: Vec<f64>,
    /// Part-one rejection count for each grid value.
    pub grid_rejections: Vec<usize>,
    pub r_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSet {
    pub alpha: f64,
    pub r: f64,
    pub t: usize,
    pub mode: PermutationMode,
    pub k: usize,
    /// Rejected test ids in global rank order.
    pub rejected_ids: Vec<usize>,
    /// The decoy-based estimate at `K`; 0 when nothing is rejected.
    pub estimated_fdr: f64,
    pub no_discoveries: bool,
    /// Tests whose score was undefined; they are labelled U.
    pub degenerate_ids: Vec<usize>,
    pub per_test: Vec<LabeledTest>,
    pub adaptive: Option<AdaptiveInfo>,
}

impl LabeledSet {
    pub fn labels_in_rank_order(&self) -> Vec<Label> {
        self.order.iter().map(|&id| self.tests[id].label).collect()
    }

    /// Number of rejections at `alpha` without materializing a [`DecisionSet`].
    pub fn rejection_count(&self, alpha: f64) -> usize {
        let labels = self.labels_in_rank_order();
        let k = select_threshold(&labels, self.r, alpha);
        labels[..k].iter().filter(|&&l| l == Label::T).count()
    }

    pub fn decide(&self, alpha: f64) -> DecisionSet {
        let labels = self.labels_in_rank_order();
        let k = select_threshold(&labels, self.r, alpha);
        let rejected_ids: Vec<usize> = self.order[..k]
            .iter()
            .copied()
            .filter(|&id| self.tests[id].label == Label::T)
            .collect();
        let decoys = labels[..k].iter().filter(|&&l| l == Label::D).count();
        let no_discoveries = rejected_ids.is_empty();
        let estimated_fdr = if no_discoveries {
            0.0
        } else {
            estimated_fdr(decoys, rejected_ids.len(), self.r)
        };
        DecisionSet {
            alpha,
            r: self.r,
            t: self.t,
            mode: self.mode,
            k,
            rejected_ids,
            estimated_fdr,
            no_discoveries,
            degenerate_ids: self
                .tests
                .iter()
                .filter(|t| t.target_score.is_none())
                .map(|t| t.id)
                .collect(),
            per_test: self.tests.clone(),
            adaptive: None,
        }
    }
}

/// Runs the configured variant on `dataset` at `config.alpha`.
pub fn run_procedure(dataset: &GroupedDataset, kind: ScoreKind, config: &TdConfig) -> Result<DecisionSet> {
    config.validate()?;
    match config.variant {
        Variant::Adaptive => adaptive_run(dataset, kind, config),
        variant => {
            let scored = score_dataset(dataset, kind, config.tau, config.seed)?;
            let labeled = label_dataset(&scored, variant, config.r, config.seed)?;
            Ok(labeled.decide(config.alpha))
        }
    }
}

/// Adaptive procedure at `config.alpha`.
pub fn adaptive_run(dataset: &GroupedDataset, kind: ScoreKind, config: &TdConfig) -> Result<DecisionSet> {
    let mut out = adaptive_run_multi(dataset, kind, config, &[config.alpha])?;
    Ok(out.pop().expect("one decision per alpha"))
}

/// Picks `n2` for the adaptive split.
pub fn resolve_n2(n1: usize, n0: usize, policy: N2Policy, tau_part1: u64, min_n2: usize) -> Result<usize> {
    let upper = (n0 / 2).min(n1 / 2);
    let err = TdError::InvalidSplit { n1, n0, min_n2 };
    let n2 = match policy {
        N2Policy::Auto => (min_n2.max(2)..=upper)
            .rev()
            .find(|&k| binomial(2 * k as u64, k as u64) <= tau_part1)
            .ok_or(err)?,
        N2Policy::Fixed(k) => {
            if k < min_n2.max(2) || k > upper {
                return Err(err);
            }
            k
        }
    };
    Ok(n2)
}

/// Splits every test into a part with `n2` cases and `n2` controls and a part
/// with the remaining samples.
pub fn split_dataset(dataset: &GroupedDataset, n2: usize, seed: u64) -> Result<(GroupedDataset, GroupedDataset)> {
    let (n1, n0) = (dataset.n1(), dataset.n0());
    let mut part1 = Vec::with_capacity(dataset.m());
    let mut part2 = Vec::with_capacity(dataset.m());
    for j in 0..dataset.m() {
        let mut rng = stream(seed, domain::SPLIT, j as u64);
        let sample = dataset.test(j);
        let mut case_idx: Vec<usize> = (0..n1).collect();
        let mut control_idx: Vec<usize> = (0..n0).collect();
        case_idx.partial_shuffle(&mut rng, n2);
        control_idx.partial_shuffle(&mut rng, n2);
        // partial_shuffle leaves the chosen elements at the tail
        let (rest_cases, chosen_cases) = case_idx.split_at_mut(n1 - n2);
        let (rest_controls, chosen_controls) = control_idx.split_at_mut(n0 - n2);
        for v in [&mut *rest_cases, &mut *chosen_cases, &mut *rest_controls, &mut *chosen_controls] {
            v.sort_unstable();
        }
        let pick = |idx: &[usize], group: &[f64]| idx.iter().map(|&i| group[i]).collect::<Vec<_>>();
        let mut first = pick(chosen_cases, sample.cases());
        first.extend(pick(chosen_controls, sample.controls()));
        let mut second = pick(rest_cases, sample.cases());
        second.extend(pick(rest_controls, sample.controls()));
        part1.push(first);
        part2.push(second);
    }
    let rebuild = |rows: Vec<Vec<f64>>, cases: usize| -> Result<GroupedDataset> {
        let generic = GroupedDataset::from_rows(rows, cases)?;
        GroupedDataset::new(
            dataset.ids().to_vec(),
            generic.column_names().to_vec(),
            (0..generic.m()).flat_map(|j| generic.row(j).to_vec()).collect(),
            generic.case_columns().to_vec(),
            generic.control_columns().to_vec(),
        )
    };
    Ok((rebuild(part1, n2)?, rebuild(part2, n1 - n2)?))
}

/// Adaptive procedure evaluated at several FDR levels on one split.
pub fn adaptive_run_multi(
    dataset: &GroupedDataset,
    kind: ScoreKind,
    config: &TdConfig,
    alphas: &[f64],
) -> Result<Vec<DecisionSet>> {
    for &a in alphas {
        check_alpha(a)?;
    }
    if config.adaptive_r_grid.is_empty() {
        return Err(TdError::InvalidParameter("adaptive r grid is empty".into()));
    }
    for &r in &config.adaptive_r_grid {
        check_r(r)?;
    }
    let n2 = resolve_n2(
        dataset.n1(),
        dataset.n0(),
        config.adaptive_n2,
        config.adaptive_tau_part1,
        config.adaptive_min_n2,
    )?;
    let (part1, part2) = split_dataset(dataset, n2, config.seed)?;

    let seed1 = derive_seed(&[config.seed, 1]);
    let seed2 = derive_seed(&[config.seed, 2]);
    let exhaustive = binomial(2 * n2 as u64, n2 as u64);
    let scored1 = score_dataset(&part1, kind, exhaustive, seed1)?;
    let scored2 = score_dataset(&part2, kind, config.tau, seed2)?;

    let grid = &config.adaptive_r_grid;
    let labeled1 = grid
        .iter()
        .enumerate()
        .map(|(g, &r)| label_dataset(&scored1, Variant::Standard, r, derive_seed(&[seed1, g as u64])))
        .collect::<Result<Vec<_>>>()?;

    let mut part2_cache: Vec<(f64, LabeledSet)> = Vec::new();
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let counts: Vec<usize> = labeled1.iter().map(|l| l.rejection_count(alpha)).collect();
        let mut best = 0;
        for g in 1..grid.len() {
            let better = counts[g] > counts[best];
            let tie_smaller = counts[g] == counts[best] && grid[g] < grid[best];
            if better || tie_smaller {
                best = g;
            }
        }
        let r_max = grid[best];
        if !part2_cache.iter().any(|(r, _)| *r == r_max) {
            let labeled = label_dataset(&scored2, Variant::Standard, r_max, seed2)?;
            part2_cache.push((r_max, labeled));
        }
        let labeled2 = &part2_cache.iter().find(|(r, _)| *r == r_max).expect("cached").1;
        let mut decision = labeled2.decide(alpha);
        decision.adaptive = Some(AdaptiveInfo {
            n2,
            part1_t: scored1.t,
            r_grid: grid.clone(),
            grid_rejections: counts,
            r_max,
        });
        out.push(decision);
    }
    Ok(out)
}

//! p-value based comparison methods: t-test, rank-sum and pooled-permutation
//! p-values, Benjamini–Hochberg and Storey q-values.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::data::{GroupedDataset, GroupedSamples};
use crate::error::{Result, TdError};
use crate::rng::{domain, stream};
use crate::scores::{midranks, t_statistic, ScoreKernel, ScoreKind};

/// Largest total sample size for which rank-sum p-values are enumerated exactly.
pub const EXACT_RANK_SUM_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PValueSource {
    TTest,
    RankSum,
    PooledPermutation,
}

impl PValueSource {
    pub fn name(self) -> &'static str {
        match self {
            PValueSource::TTest => "t-test",
            PValueSource::RankSum => "rank-sum",
            PValueSource::PooledPermutation => "permutation",
        }
    }
}

impl std::str::FromStr for PValueSource {
    type Err = TdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" | "t-test" | "ttest" => Ok(PValueSource::TTest),
            "ranksum" | "rank-sum" | "wilcoxon" => Ok(PValueSource::RankSum),
            "perm" | "permutation" | "pooled" => Ok(PValueSource::PooledPermutation),
            other => Err(TdError::InvalidParameter(format!("unknown p-value source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueVector {
    pub p: Vec<f64>,
    pub method: PValueSource,
    /// Tests whose statistic was undefined and were assigned p = 1.
    pub degenerate: Vec<usize>,
}

/// p-value of a Student t statistic; one-sided tests the upper tail.
pub fn t_pvalue(t: f64, df: f64, two_sided: bool) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    let p = if two_sided {
        2.0 * dist.cdf(-t.abs())
    } else {
        dist.sf(t)
    };
    p.clamp(0.0, 1.0)
}

/// Student t p-values with `n - 2` degrees of freedom.
pub fn t_pvalues(dataset: &GroupedDataset, two_sided: bool) -> PValueVector {
    let df = (dataset.n() - 2) as f64;
    let results: Vec<Option<f64>> = (0..dataset.m())
        .into_par_iter()
        .map(|j| {
            t_statistic(&dataset.test(j), false)
                .ok()
                .map(|t| t_pvalue(t, df, two_sided))
        })
        .collect();
    collect_with_degenerate(results, PValueSource::TTest)
}

fn collect_with_degenerate(results: Vec<Option<f64>>, method: PValueSource) -> PValueVector {
    let degenerate = results
        .iter()
        .positions(Option::is_none)
        .collect();
    PValueVector {
        p: results.into_iter().map(|p| p.unwrap_or(1.0)).collect(),
        method,
        degenerate,
    }
}

/// Pooled-permutation p-values: every test contributes `per_test_draws`
/// regrouping scores to one shared null, and
/// `p_j = (1 + #{pool >= target_j}) / (1 + pool size)`.
pub fn pooled_permutation_pvalues(
    dataset: &GroupedDataset,
    kind: ScoreKind,
    per_test_draws: usize,
    seed: u64,
) -> Result<PValueVector> {
    if per_test_draws == 0 {
        return Err(TdError::InvalidParameter("per-test draws must be >= 1".into()));
    }
    let n1 = dataset.n1();
    let per_test: Vec<(Option<f64>, Vec<f64>)> = (0..dataset.m())
        .into_par_iter()
        .map(|j| {
            let mut rng = stream(seed, domain::POOLED, j as u64);
            let sample = dataset.test(j);
            let kernel = ScoreKernel::new(kind, sample.values());
            let target = kernel.score_subset(0..n1).ok();
            let mut indices: Vec<usize> = (0..sample.n()).collect();
            let mut mask = vec![false; sample.n()];
            let mut draws = Vec::with_capacity(per_test_draws);
            for _ in 0..per_test_draws {
                let (chosen, _) = indices.partial_shuffle(&mut rng, n1);
                // regroupings with an undefined score do not enter the pool
                if let Ok(s) = kernel.score_with_mask(chosen.iter().copied(), &mut mask) {
                    draws.push(s);
                }
            }
            (target, draws)
        })
        .collect();
    let mut pool: Vec<f64> = per_test.iter().flat_map(|(_, d)| d.iter().copied()).collect();
    pool.sort_unstable_by(f64::total_cmp);
    let results = per_test
        .iter()
        .map(|(target, _)| {
            target.map(|t| pooled_pvalue(t, &pool))
        })
        .collect();
    Ok(collect_with_degenerate(results, PValueSource::PooledPermutation))
}

/// p-value of one target against an ascending pool, with the +1 correction.
pub fn pooled_pvalue(target: f64, sorted_pool: &[f64]) -> f64 {
    let below = sorted_pool.partition_point(|&x| x < target);
    (1.0 + (sorted_pool.len() - below) as f64) / (1.0 + sorted_pool.len() as f64)
}

/// Wilcoxon rank-sum p-value: exact enumeration up to
/// [`EXACT_RANK_SUM_MAX_N`] samples, normal approximation beyond. The
/// one-sided version tests for cases ranking above controls.
pub fn rank_sum_pvalue(s: &GroupedSamples, two_sided: bool) -> f64 {
    if s.n() <= EXACT_RANK_SUM_MAX_N {
        rank_sum_pvalue_exact(s, two_sided)
    } else {
        rank_sum_pvalue_normal(s, two_sided)
    }
}

struct RankSumParts {
    ranks: Vec<f64>,
    sorted: Vec<f64>,
    expected: f64,
    /// `w - E[W]`
    centered: f64,
}

fn rank_sum_parts(s: &GroupedSamples) -> RankSumParts {
    let mut sorted = s.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let ranks = midranks(&sorted);
    let expected = s.n1() as f64 * (s.n() as f64 + 1.0) / 2.0;
    let w: f64 = s
        .cases()
        .iter()
        .map(|&x| ranks[sorted.partition_point(|y| y.total_cmp(&x).is_lt())])
        .sum();
    RankSumParts {
        ranks,
        sorted,
        expected,
        centered: w - expected,
    }
}

/// Exact permutation p-value over all case subsets: `P(|W - E| >= |w - E|)`,
/// or `P(W - E >= w - E)` one-sided.
pub fn rank_sum_pvalue_exact(s: &GroupedSamples, two_sided: bool) -> f64 {
    let parts = rank_sum_parts(s);
    // Midranks are multiples of 1/2, so these sums compare exactly.
    let mut extreme = 0u64;
    let mut total = 0u64;
    for subset in (0..s.n()).combinations(s.n1()) {
        let w: f64 = subset.iter().map(|&i| parts.ranks[i]).sum();
        let d = w - parts.expected;
        let hit = if two_sided {
            d.abs() >= parts.centered.abs()
        } else {
            d >= parts.centered
        };
        if hit {
            extreme += 1;
        }
        total += 1;
    }
    extreme as f64 / total as f64
}

/// Normal approximation with tie and continuity corrections.
pub fn rank_sum_pvalue_normal(s: &GroupedSamples, two_sided: bool) -> f64 {
    let parts = rank_sum_parts(s);
    let n1 = s.n1() as f64;
    let n0 = s.n0() as f64;
    let n = s.n() as f64;
    let tie_term: f64 = parts
        .sorted
        .iter()
        .chunk_by(|&&x| x.to_bits())
        .into_iter()
        .map(|(_, g)| {
            let c = g.count() as f64;
            c * c * c - c
        })
        .sum();
    let var = n1 * n0 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let std_normal = Normal::standard();
    if two_sided {
        let observed = parts.centered.abs();
        if observed < 0.5 {
            return 1.0;
        }
        (2.0 * std_normal.sf((observed - 0.5) / var.sqrt())).clamp(0.0, 1.0)
    } else {
        std_normal.sf((parts.centered - 0.5) / var.sqrt()).clamp(0.0, 1.0)
    }
}

pub fn rank_sum_pvalues(dataset: &GroupedDataset, two_sided: bool) -> PValueVector {
    let p = (0..dataset.m())
        .into_par_iter()
        .map(|j| rank_sum_pvalue(&dataset.test(j), two_sided))
        .collect();
    PValueVector {
        p,
        method: PValueSource::RankSum,
        degenerate: Vec::new(),
    }
}

/// Ascending order of p-values, ties by index.
fn ascending(p: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    order
}

/// Benjamini–Hochberg step-up: reject the `k` smallest p-values for the
/// largest `k` with `m · p_(k) / k <= alpha`. Returns indices in ascending
/// p-value order.
pub fn bh_reject(p: &[f64], alpha: f64) -> Vec<usize> {
    let m = p.len() as f64;
    let order = ascending(p);
    let k = order
        .iter()
        .enumerate()
        .filter(|(k, &i)| m * p[i] / (k + 1) as f64 <= alpha)
        .map(|(k, _)| k + 1)
        .last()
        .unwrap_or(0);
    order[..k].to_vec()
}

/// Storey's null-proportion estimate at a fixed `lambda`.
pub fn storey_pi0(p: &[f64], lambda: f64) -> f64 {
    let above = p.iter().filter(|&&x| x > lambda).count() as f64;
    (above / ((1.0 - lambda) * p.len() as f64)).min(1.0)
}

/// q-values from the step-up running minimum of `pi0 · m · p_(j) / j`,
/// capped at 1.
pub fn qvalues_with_pi0(p: &[f64], pi0: f64) -> Vec<f64> {
    let m = p.len();
    let order = ascending(p);
    let mut q = vec![0.0; m];
    let mut running = f64::INFINITY;
    for (k, &i) in order.iter().enumerate().rev() {
        running = running.min(pi0 * m as f64 * p[i] / (k + 1) as f64);
        q[i] = running.min(1.0);
    }
    q
}

pub fn storey_qvalues(p: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(TdError::InvalidParameter(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    Ok(qvalues_with_pi0(p, storey_pi0(p, lambda)))
}

/// Indices with `q <= alpha`, in ascending index order.
pub fn qvalue_reject(q: &[f64], alpha: f64) -> Vec<usize> {
    q.iter().positions(|&x| x <= alpha).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Student t density integrated with composite Simpson's rule.
    fn t_two_sided_by_quadrature(t: f64, df: f64) -> f64 {
        let ln_c = statrs::function::gamma::ln_gamma((df + 1.0) / 2.0)
            - statrs::function::gamma::ln_gamma(df / 2.0)
            - 0.5 * (df * std::f64::consts::PI).ln();
        let density = |x: f64| (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
        let steps = 20_000;
        let h = t.abs() / steps as f64;
        let mut acc = density(0.0) + density(t.abs());
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * density(i as f64 * h);
        }
        1.0 - 2.0 * acc * h / 3.0
    }

    fn ks_statistic(mut p: Vec<f64>) -> f64 {
        p.sort_by(f64::total_cmp);
        let n = p.len() as f64;
        p.iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
            .fold(0.0, f64::max)
    }

    /// Critical KS distance at significance 1e-3 (asymptotic).
    fn ks_critical(n: usize) -> f64 {
        ((2.0f64 / 1e-3).ln() / (2.0 * n as f64)).sqrt()
    }

    fn null_dataset(m: usize, n1: usize, n0: usize, seed: u64) -> GroupedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..m)
            .map(|_| (0..n1 + n0).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        GroupedDataset::from_rows(rows, n1).unwrap()
    }

    #[test]
    fn t_pvalue_examples() {
        assert_eq!(t_pvalue(0.0, 7.0, true), 1.0);
        let p = t_pvalue(2.086, 20.0, true);
        assert!((p - 0.05).abs() < 1e-3, "{p}");
        let oracle = t_two_sided_by_quadrature(2.086, 20.0);
        assert!((p - oracle).abs() < 1e-10, "{p} vs {oracle}");
        for (t, df) in [(0.3, 3.0), (1.7, 8.0), (4.2, 18.0), (-2.5, 5.0)] {
            let oracle = t_two_sided_by_quadrature(t, df);
            assert!((t_pvalue(t, df, true) - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn null_t_pvalues_are_uniform() {
        let ds = null_dataset(5000, 10, 10, 1);
        let p = t_pvalues(&ds, true);
        assert!(p.p.iter().all(|x| (0.0..=1.0).contains(x)));
        assert!(ks_statistic(p.p) < ks_critical(5000));
    }

    #[test]
    fn degenerate_t_gets_unit_pvalue() {
        let ds = GroupedDataset::from_rows(vec![vec![1.0; 4], vec![1.0, 2.0, 3.0, 5.0]], 2).unwrap();
        let p = t_pvalues(&ds, true);
        assert_eq!(p.p[0], 1.0);
        assert_eq!(p.degenerate, vec![0]);
    }

    #[test]
    fn pooled_pvalue_boundaries() {
        let pool: Vec<f64> = (0..100).map(f64::from).collect();
        assert_eq!(pooled_pvalue(1000.0, &pool), 1.0 / 101.0);
        assert_eq!(pooled_pvalue(-1.0, &pool), 1.0);
        assert_eq!(pooled_pvalue(99.0, &pool), 2.0 / 101.0);
    }

    #[test]
    fn pooled_pvalues_are_uniform_under_exchangeable_null() {
        let ds = null_dataset(4000, 10, 10, 2);
        let p = pooled_permutation_pvalues(&ds, ScoreKind::AbsT, 10, 3).unwrap();
        assert!(p.p.iter().all(|&x| x > 0.0 && x <= 1.0));
        assert!(ks_statistic(p.p) < ks_critical(4000));
    }

    #[test]
    fn rank_sum_exact_small_example() {
        let s = GroupedSamples::from_groups(&[5.0, 6.0], &[1.0, 2.0]).unwrap();
        assert!((rank_sum_pvalue(&s, true) - 1.0 / 3.0).abs() < 1e-15);
        // only the observed subset reaches W = 7 of the six
        assert!((rank_sum_pvalue(&s, false) - 1.0 / 6.0).abs() < 1e-15);
        let s = GroupedSamples::from_groups(&[1.0, 2.0], &[5.0, 6.0]).unwrap();
        assert_eq!(rank_sum_pvalue(&s, false), 1.0);
        let s = GroupedSamples::from_groups(&[1.0, 4.0], &[2.0, 3.0]).unwrap();
        assert_eq!(rank_sum_pvalue(&s, true), 1.0);
    }

    /// Exact p by building every regrouped sample and recomputing W from scratch.
    fn brute_force_rank_sum(values: &[f64], n1: usize, two_sided: bool) -> f64 {
        let n = values.len();
        let w_of = |cases: &[usize]| {
            let mut total = 0.0;
            for &c in cases {
                let less = values.iter().filter(|&&v| v < values[c]).count() as f64;
                let equal = values.iter().filter(|&&v| v == values[c]).count() as f64;
                total += less + (equal + 1.0) / 2.0;
            }
            total
        };
        let e = n1 as f64 * (n as f64 + 1.0) / 2.0;
        let stat = |w: f64| if two_sided { (w - e).abs() } else { w - e };
        let observed = stat(w_of(&(0..n1).collect::<Vec<_>>()));
        let all: Vec<Vec<usize>> = (0..n).combinations(n1).collect();
        all.iter().filter(|c| stat(w_of(c)) >= observed).count() as f64 / all.len() as f64
    }

    #[test]
    fn rank_sum_exact_matches_brute_force_with_ties() {
        let values = [1.0, 3.0, 3.0, 7.0, 2.0, 3.0, 9.0, 0.5, 7.0];
        let s = GroupedSamples::new(values.to_vec(), 4).unwrap();
        for two_sided in [true, false] {
            let expected = brute_force_rank_sum(&values, 4, two_sided);
            assert!((rank_sum_pvalue(&s, two_sided) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn normal_approximation_tracks_enumeration_at_n12() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for shift in [0.0, 0.5, 1.0, 1.5] {
            for _ in 0..5 {
                let values: Vec<f64> = (0..12)
                    .map(|i| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        if i < 6 { z + shift } else { z }
                    })
                    .collect();
                let s = GroupedSamples::new(values.clone(), 6).unwrap();
                for two_sided in [true, false] {
                    let exact = brute_force_rank_sum(&values, 6, two_sided);
                    assert!((rank_sum_pvalue(&s, two_sided) - exact).abs() < 1e-15);
                    let approx = rank_sum_pvalue_normal(&s, two_sided);
                    assert!((exact - approx).abs() < 2e-2, "exact {exact} approx {approx}");
                }
            }
        }
    }

    #[test]
    fn large_n_uses_normal_approximation() {
        let values: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let s = GroupedSamples::new(values, 10).unwrap();
        let p = rank_sum_pvalue(&s, true);
        // W = 55, E = 105, sd = sqrt(175)
        let z = (50.0 - 0.5) / 175f64.sqrt();
        assert!((p - 2.0 * Normal::standard().sf(z)).abs() < 1e-15);
        let upper = rank_sum_pvalue(&s, false);
        assert!((upper - Normal::standard().sf((-50.0 - 0.5) / 175f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn bh_examples() {
        assert_eq!(bh_reject(&[0.01, 0.02, 0.04, 0.9], 0.05), vec![0, 1]);
        assert!(bh_reject(&[1.0; 5], 0.05).is_empty());
        assert_eq!(bh_reject(&[0.0; 5], 0.05).len(), 5);
        assert!(bh_reject(&[], 0.05).is_empty());
    }

    /// Direct scan of the BH condition, recounting ranks each time.
    fn bh_oracle(p: &[f64], alpha: f64) -> Vec<usize> {
        let m = p.len();
        let mut best_k = 0;
        for k in 1..=m {
            let mut sorted = p.to_vec();
            sorted.sort_by(f64::total_cmp);
            if m as f64 * sorted[k - 1] / k as f64 <= alpha {
                best_k = k;
            }
        }
        if best_k == 0 {
            return Vec::new();
        }
        let mut sorted = p.to_vec();
        sorted.sort_by(f64::total_cmp);
        let cut = sorted[best_k - 1];
        (0..m).filter(|&i| p[i] <= cut).collect()
    }

    #[test]
    fn bh_matches_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let m = rng.random_range(1..60);
            let p: Vec<f64> = (0..m).map(|_| rng.random::<f64>().powi(3)).collect();
            let mut got = bh_reject(&p, 0.1);
            got.sort_unstable();
            assert_eq!(got, bh_oracle(&p, 0.1));
        }
    }

    #[test]
    fn storey_examples() {
        let p = [0.01, 0.2, 0.6, 0.8];
        assert_eq!(storey_pi0(&p, 0.5), 1.0);
        let q = storey_qvalues(&p, 0.5).unwrap();
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
        assert!(order.windows(2).all(|w| q[w[0]] <= q[w[1]]));
        assert!(storey_qvalues(&p, 1.0).is_err());
        // π0 below one when many p-values are small
        let p = [0.001, 0.002, 0.003, 0.6];
        assert_eq!(storey_pi0(&p, 0.5), 0.5);
    }

    #[test]
    fn unit_pi0_qvalues_reproduce_bh() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let m = rng.random_range(1..300);
            let p: Vec<f64> = (0..m).map(|_| rng.random::<f64>().powi(2)).collect();
            let q = qvalues_with_pi0(&p, 1.0);
            for alpha in [0.01, 0.05, 0.1, 0.2] {
                let mut bh = bh_reject(&p, alpha);
                bh.sort_unstable();
                assert_eq!(qvalue_reject(&q, alpha), bh);
            }
        }
    }
}

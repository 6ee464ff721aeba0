//! Monte-Carlo experiments: every method is evaluated on the same simulated
//! replicate, and per-replicate false discovery proportions are aggregated
//! into mean FDP, its standard error and mean rejection counts.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    bh_reject, pooled_permutation_pvalues, qvalue_reject, rank_sum_pvalues, storey_qvalues, t_pvalues,
    PValueSource, PValueVector,
};
use crate::data::GroupedDataset;
use crate::error::{Result, TdError};
use crate::rng::{derive_seed, domain};
use crate::scores::ScoreKind;
use crate::simgen::{generate, SimSpec};
use crate::tdp::{adaptive_run_multi, label_dataset, score_dataset, DecisionSet, TdConfig, Variant};

/// Regroupings per test drawn for the pooled-permutation null.
pub const POOLED_DRAWS: usize = 10;

pub const DEFAULT_STOREY_LAMBDA: f64 = 0.5;

/// A method compared in an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    TargetDecoy {
        kind: ScoreKind,
        variant: Variant,
        /// Decoys per test (`t - 1`).
        decoys: u64,
        r: f64,
    },
    Bh {
        source: PValueSource,
        /// Upper-tail p-values (cases above controls).
        one_sided: bool,
    },
    Storey {
        source: PValueSource,
        lambda: f64,
        one_sided: bool,
    },
}

impl Method {
    pub fn target_decoy(kind: ScoreKind, decoys: u64) -> Self {
        Method::TargetDecoy {
            kind,
            variant: Variant::Simplified,
            decoys,
            r: 1.0,
        }
    }

    /// Machine-readable name, the inverse of [`str::parse`].
    pub fn name(&self) -> String {
        match self {
            Method::TargetDecoy {
                kind,
                variant,
                decoys,
                r,
            } => {
                let mut s = format!("td-{}-{decoys}", kind.name());
                match variant {
                    Variant::Simplified => {}
                    Variant::Adaptive => s.push_str("-adaptive"),
                    Variant::Standard => {
                        let _ = write!(s, "-standard-r{r}");
                    }
                }
                s
            }
            Method::Bh { source, one_sided } => {
                format!("bh-{}{}", short_source(*source), if *one_sided { "-upper" } else { "" })
            }
            Method::Storey {
                source,
                lambda,
                one_sided,
            } => {
                let mut s = format!("storey-{}", short_source(*source));
                if *one_sided {
                    s.push_str("-upper");
                }
                if *lambda != DEFAULT_STOREY_LAMBDA {
                    let _ = write!(s, "-l{lambda}");
                }
                s
            }
        }
    }

    /// Row label in the style of the published tables.
    pub fn display(&self) -> String {
        match self {
            Method::TargetDecoy {
                kind,
                variant,
                decoys,
                r,
            } => {
                let score = match kind {
                    ScoreKind::AbsT => "abs t-value",
                    ScoreKind::SignedT => "t-value",
                    ScoreKind::RankSumCentered => "abs rank-sum",
                    ScoreKind::RankSumSigned => "rank-sum",
                };
                match variant {
                    Variant::Simplified => format!("TD {score},{decoys}"),
                    Variant::Adaptive => format!("TD adaptive {score},{decoys}"),
                    Variant::Standard => format!("TD {score},{decoys} r={r}"),
                }
            }
            Method::Bh { source, one_sided } => format!("BH {}{}", source.name(), sided_tag(*one_sided)),
            Method::Storey {
                source,
                lambda,
                one_sided,
            } => format!("Storey {}{} (lambda={lambda})", source.name(), sided_tag(*one_sided)),
        }
    }

    pub fn is_target_decoy(&self) -> bool {
        matches!(self, Method::TargetDecoy { .. })
    }
}

fn sided_tag(one_sided: bool) -> &'static str {
    if one_sided {
        ", one-sided"
    } else {
        ""
    }
}

fn short_source(source: PValueSource) -> &'static str {
    match source {
        PValueSource::TTest => "t",
        PValueSource::RankSum => "ranksum",
        PValueSource::PooledPermutation => "perm",
    }
}

impl std::str::FromStr for Method {
    type Err = TdError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || TdError::InvalidParameter(format!("cannot parse method {s:?}"));
        let parts: Vec<&str> = s.split('-').collect();
        match parts.as_slice() {
            ["td", kind, decoys, rest @ ..] => {
                let kind: ScoreKind = kind.parse()?;
                let decoys: u64 = decoys.parse().map_err(|_| bad())?;
                if decoys == 0 {
                    return Err(bad());
                }
                let (variant, r) = match rest {
                    [] | ["simplified"] => (Variant::Simplified, 1.0),
                    ["adaptive"] => (Variant::Adaptive, 1.0),
                    ["standard"] => (Variant::Standard, 1.0),
                    ["standard", r] => {
                        let r = r.strip_prefix('r').ok_or_else(bad)?;
                        (Variant::Standard, r.parse().map_err(|_| bad())?)
                    }
                    _ => return Err(bad()),
                };
                Ok(Method::TargetDecoy {
                    kind,
                    variant,
                    decoys,
                    r,
                })
            }
            ["bh", source] => Ok(Method::Bh {
                source: source.parse()?,
                one_sided: false,
            }),
            ["bh", source, "upper"] => Ok(Method::Bh {
                source: source.parse()?,
                one_sided: true,
            }),
            ["storey", source, rest @ ..] => {
                let (one_sided, rest) = match rest {
                    ["upper", tail @ ..] => (true, tail),
                    tail => (false, tail),
                };
                let lambda = match rest {
                    [] => DEFAULT_STOREY_LAMBDA,
                    [l] => l.strip_prefix('l').ok_or_else(bad)?.parse().map_err(|_| bad())?,
                    _ => return Err(bad()),
                };
                Ok(Method::Storey {
                    source: source.parse()?,
                    lambda,
                    one_sided,
                })
            }
            _ => Err(bad()),
        }
    }
}

/// Everything needed to run one simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub spec: SimSpec,
    pub methods: Vec<Method>,
    pub alphas: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    /// A method with this many failed replicates is reported as aborted.
    pub max_failures: usize,
}

impl ExperimentPlan {
    pub fn new(spec: SimSpec, methods: Vec<Method>, alphas: Vec<f64>, reps: usize, seed: u64) -> Self {
        Self {
            spec,
            methods,
            alphas,
            reps,
            seed,
            max_failures: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.reps < 2 {
            return Err(TdError::InvalidParameter(format!("need at least 2 replicates, got {}", self.reps)));
        }
        if self.methods.is_empty() {
            return Err(TdError::InvalidParameter("no methods to evaluate".into()));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(TdError::InvalidParameter(format!("invalid alpha list {:?}", self.alphas)));
        }
        Ok(())
    }
}

/// Outcome of one method on one replicate at one α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepResult {
    pub replicate: usize,
    pub alpha: f64,
    pub rejections: usize,
    pub true_rejections: usize,
    pub fdp: f64,
}

/// Fraction of rejected tests that are true nulls, `0` with no rejections.
pub fn fdp(rejected: &[usize], false_null: &[bool]) -> f64 {
    let false_rejections = rejected.iter().filter(|&&j| !false_null[j]).count();
    false_rejections as f64 / rejected.len().max(1) as f64
}

/// FDP of a target-decoy decision set.
pub fn decision_fdp(decisions: &DecisionSet, false_null: &[bool]) -> f64 {
    fdp(&decisions.rejected_ids, false_null)
}

fn rep_result(replicate: usize, alpha: f64, rejected: &[usize], false_null: &[bool]) -> RepResult {
    RepResult {
        replicate,
        alpha,
        rejections: rejected.len(),
        true_rejections: rejected.iter().filter(|&&j| false_null[j]).count(),
        fdp: fdp(rejected, false_null),
    }
}

fn pvalues(data: &GroupedDataset, source: PValueSource, one_sided: bool, seed: u64) -> Result<PValueVector> {
    match source {
        PValueSource::TTest => Ok(t_pvalues(data, !one_sided)),
        PValueSource::RankSum => Ok(rank_sum_pvalues(data, !one_sided)),
        PValueSource::PooledPermutation => {
            let kind = if one_sided { ScoreKind::SignedT } else { ScoreKind::AbsT };
            pooled_permutation_pvalues(data, kind, POOLED_DRAWS, seed)
        }
    }
}

/// Rejected test sets of `method` at every α in `alphas`.
pub fn evaluate_method(method: &Method, data: &GroupedDataset, alphas: &[f64], seed: u64) -> Result<Vec<Vec<usize>>> {
    match method {
        Method::TargetDecoy {
            kind,
            variant,
            decoys,
            r,
        } => {
            let tau = decoys + 1;
            match variant {
                Variant::Adaptive => {
                    let config = TdConfig {
                        variant: Variant::Adaptive,
                        tau,
                        seed,
                        ..TdConfig::default()
                    };
                    let decisions = adaptive_run_multi(data, *kind, &config, alphas)?;
                    Ok(decisions.into_iter().map(|d| d.rejected_ids).collect())
                }
                v => {
                    let scored = score_dataset(data, *kind, tau, seed)?;
                    let labeled = label_dataset(&scored, *v, *r, seed)?;
                    Ok(alphas.iter().map(|&a| labeled.decide(a).rejected_ids).collect())
                }
            }
        }
        Method::Bh { source, one_sided } => {
            let p = pvalues(data, *source, *one_sided, seed)?;
            Ok(alphas.iter().map(|&a| bh_reject(&p.p, a)).collect())
        }
        Method::Storey {
            source,
            lambda,
            one_sided,
        } => {
            let p = pvalues(data, *source, *one_sided, seed)?;
            let q = storey_qvalues(&p.p, *lambda)?;
            Ok(alphas.iter().map(|&a| qvalue_reject(&q, a)).collect())
        }
    }
}

/// Aggregates for one (method, α) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub alpha: f64,
    pub mean_fdp: f64,
    /// Sample sd of FDP over √reps.
    pub fdp_se: f64,
    pub mean_rejections: f64,
    pub mean_true_rejections: f64,
    /// Mean FDP exceeds α.
    pub starred: bool,
    pub fdp: Vec<f64>,
    pub rejections: Vec<usize>,
    pub true_rejections: Vec<usize>,
}

impl CellSummary {
    fn from_results(alpha: f64, results: &[RepResult]) -> Self {
        let n = results.len() as f64;
        let fdp: Vec<f64> = results.iter().map(|r| r.fdp).collect();
        let mean_fdp = fdp.iter().sum::<f64>() / n;
        let var = if results.len() > 1 {
            fdp.iter().map(|x| (x - mean_fdp).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let rejections: Vec<usize> = results.iter().map(|r| r.rejections).collect();
        let true_rejections: Vec<usize> = results.iter().map(|r| r.true_rejections).collect();
        Self {
            alpha,
            mean_fdp,
            fdp_se: var.sqrt() / n.sqrt(),
            mean_rejections: rejections.iter().sum::<usize>() as f64 / n,
            mean_true_rejections: true_rejections.iter().sum::<usize>() as f64 / n,
            starred: mean_fdp > alpha,
            fdp,
            rejections,
            true_rejections,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub replicate: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub name: String,
    pub display: String,
    pub method: Method,
    /// One per α; empty when the method was aborted.
    pub cells: Vec<CellSummary>,
    pub failures: Vec<Failure>,
    pub aborted: bool,
}

impl MethodSummary {
    pub fn cell(&self, alpha: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.alpha == alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub label: String,
    pub spec: SimSpec,
    pub reps: usize,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub methods: Vec<MethodSummary>,
}

impl ExperimentSummary {
    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.name == name)
    }
}

/// Runs every replicate of `plan`. Replicates run in parallel on the current
/// rayon pool; aggregation is ordered by replicate index.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentSummary> {
    plan.validate()?;
    let per_rep: Vec<Vec<std::result::Result<Vec<RepResult>, String>>> = (0..plan.reps)
        .into_par_iter()
        .map(|rep| {
            let data = match generate(&plan.spec, plan.seed, rep as u64) {
                Ok(d) => d,
                Err(e) => return vec![Err(e.to_string()); plan.methods.len()],
            };
            plan.methods
                .iter()
                .enumerate()
                .map(|(i, method)| {
                    let seed = derive_seed(&[plan.seed, domain::METHOD, i as u64, rep as u64]);
                    evaluate_method(method, &data.data, &plan.alphas, seed)
                        .map(|sets| {
                            plan.alphas
                                .iter()
                                .zip(&sets)
                                .map(|(&a, rejected)| rep_result(rep, a, rejected, &data.false_null))
                                .collect()
                        })
                        .map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect();

    let methods = plan
        .methods
        .iter()
        .enumerate()
        .map(|(i, method)| {
            let mut failures = Vec::new();
            let mut ok: Vec<&Vec<RepResult>> = Vec::new();
            for (rep, results) in per_rep.iter().enumerate() {
                match &results[i] {
                    Ok(r) => ok.push(r),
                    Err(message) => failures.push(Failure {
                        replicate: rep,
                        message: message.clone(),
                    }),
                }
            }
            let aborted = failures.len() >= plan.max_failures.max(1) || ok.is_empty();
            let cells = if aborted {
                Vec::new()
            } else {
                (0..plan.alphas.len())
                    .map(|a| {
                        let results: Vec<RepResult> = ok.iter().map(|r| r[a]).collect();
                        CellSummary::from_results(plan.alphas[a], &results)
                    })
                    .collect()
            };
            MethodSummary {
                name: method.name(),
                display: method.display(),
                method: method.clone(),
                cells,
                failures,
                aborted,
            }
        })
        .collect();

    Ok(ExperimentSummary {
        label: plan.spec.label(),
        spec: plan.spec.clone(),
        reps: plan.reps,
        seed: plan.seed,
        alphas: plan.alphas.clone(),
        methods,
    })
}

/// A set of experiments reported together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    pub experiments: Vec<ExperimentSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Json,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Tsv => "tsv",
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "md",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = TdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(ReportFormat::Tsv),
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(TdError::InvalidParameter(format!("unknown report format {other:?}"))),
        }
    }
}

pub fn render(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Tsv => render_tsv(&summary_rows(report)),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => render_markdown(report),
    }
}

/// Writes `report.<ext>` for each format into `dir` and returns the paths.
pub fn emit_report(report: &Report, formats: &[ReportFormat], dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| TdError::io(dir, e))?;
    formats
        .iter()
        .map(|&f| {
            let path = dir.join(format!("report.{}", f.extension()));
            std::fs::write(&path, render(report, f)).map_err(|e| TdError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

pub fn read_report_json(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| TdError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| TdError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn fmt_alpha(a: f64) -> String {
    format!("{a:.2}")
}

fn render_markdown(report: &Report) -> String {
    let mut out = format!("# {}\n", report.title);
    for exp in &report.experiments {
        let _ = writeln!(out, "\n## {}\n", exp.label);
        let _ = writeln!(
            out,
            "m = {}, n1 = {}, n0 = {}, replicates = {}, seed = {}\n",
            exp.spec.m, exp.spec.n1, exp.spec.n0, exp.reps, exp.seed
        );
        let header: String = exp.alphas.iter().map(|&a| format!(" α={} |", fmt_alpha(a))).collect();
        let rule: String = exp.alphas.iter().map(|_| "---:|").collect();

        let _ = writeln!(out, "FDR (mean FDP; * marks mean FDP above α)\n");
        let _ = writeln!(out, "| method |{header}");
        let _ = writeln!(out, "|---|{rule}");
        for m in &exp.methods {
            let cells: String = exp
                .alphas
                .iter()
                .map(|&a| match m.cell(a) {
                    Some(c) => format!(" {:.3}{} |", c.mean_fdp, if c.starred { "*" } else { "" }),
                    None => " aborted |".to_string(),
                })
                .collect();
            let _ = writeln!(out, "| {} |{cells}", m.display);
        }
        let max_se = exp
            .methods
            .iter()
            .flat_map(|m| m.cells.iter().map(|c| c.fdp_se))
            .fold(0.0, f64::max);
        let _ = writeln!(out, "\nLargest standard error of a mean FDP: {max_se:.4}\n");

        let _ = writeln!(out, "Power (mean number of rejections)\n");
        let _ = writeln!(out, "| method |{header}");
        let _ = writeln!(out, "|---|{rule}");
        for m in &exp.methods {
            let cells: String = exp
                .alphas
                .iter()
                .map(|&a| match m.cell(a) {
                    Some(c) => format!(" {:.1}{} |", c.mean_rejections, if c.starred { "*" } else { "" }),
                    None => " aborted |".to_string(),
                })
                .collect();
            let _ = writeln!(out, "| {} |{cells}", m.display);
        }
        for m in exp.methods.iter().filter(|m| !m.failures.is_empty()) {
            let _ = writeln!(out, "\n{}: {} failed replicate(s)", m.display, m.failures.len());
        }
    }
    out
}

pub const TSV_HEADER: &str =
    "scenario\tmethod\talpha\treps\tmean_fdp\tfdp_se\tmean_rejections\tmean_true_rejections\tstarred";

/// One line of the tabular report.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: String,
    pub alpha: f64,
    pub reps: usize,
    pub mean_fdp: f64,
    pub fdp_se: f64,
    pub mean_rejections: f64,
    pub mean_true_rejections: f64,
    pub starred: bool,
}

pub fn summary_rows(report: &Report) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for exp in &report.experiments {
        for m in &exp.methods {
            for c in &m.cells {
                rows.push(SummaryRow {
                    scenario: exp.label.clone(),
                    method: m.name.clone(),
                    alpha: c.alpha,
                    reps: c.fdp.len(),
                    mean_fdp: c.mean_fdp,
                    fdp_se: c.fdp_se,
                    mean_rejections: c.mean_rejections,
                    mean_true_rejections: c.mean_true_rejections,
                    starred: c.starred,
                });
            }
        }
    }
    rows
}

pub fn render_tsv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.scenario,
            r.method,
            r.alpha,
            r.reps,
            r.mean_fdp,
            r.fdp_se,
            r.mean_rejections,
            r.mean_true_rejections,
            r.starred
        );
    }
    out
}

pub fn parse_tsv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TSV_HEADER => {}
        _ => {
            return Err(TdError::Parse {
                line: 1,
                message: "missing report header".into(),
            })
        }
    }
    lines
        .map(|(i, line)| {
            let line_no = i + 1;
            let err = |message: String| TdError::Parse { line: line_no, message };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 9 {
                return Err(err(format!("expected 9 fields, found {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
            Ok(SummaryRow {
                scenario: f[0].to_string(),
                method: f[1].to_string(),
                alpha: num(f[2])?,
                reps: f[3].parse().map_err(|e| err(format!("{:?}: {e}", f[3])))?,
                mean_fdp: num(f[4])?,
                fdp_se: num(f[5])?,
                mean_rejections: num(f[6])?,
                mean_true_rejections: num(f[7])?,
                starred: f[8].parse().map_err(|e| err(format!("{:?}: {e}", f[8])))?,
            })
        })
        .collect()
}

/// Methods of the simulation tables: one-sided scores and p-values, larger
/// when cases exceed controls.
pub fn comparison_methods() -> Vec<Method> {
    let storey = |source| Method::Storey {
        source,
        lambda: DEFAULT_STOREY_LAMBDA,
        one_sided: true,
    };
    vec![
        Method::target_decoy(ScoreKind::SignedT, 49),
        Method::target_decoy(ScoreKind::SignedT, 1),
        Method::target_decoy(ScoreKind::RankSumSigned, 49),
        Method::target_decoy(ScoreKind::RankSumSigned, 1),
        storey(PValueSource::TTest),
        storey(PValueSource::PooledPermutation),
        storey(PValueSource::RankSum),
        Method::Bh {
            source: PValueSource::TTest,
            one_sided: true,
        },
    ]
}

/// Plans behind a named preset.
pub fn preset_plans(name: &str, reps: usize, seed: u64) -> Result<(String, Vec<ExperimentPlan>)> {
    let alphas = vec![0.05, 0.10];
    let (title, specs, methods, alphas): (&str, Vec<SimSpec>, Vec<Method>, Vec<f64>) = match name {
        "table1" | "table2" | "independent" => (
            "Independent tests",
            vec![
                SimSpec::normal(0.0, 0.01),
                SimSpec::normal(0.0, 0.10),
                SimSpec::gamma(false, 0.01),
                SimSpec::gamma(false, 0.10),
            ],
            comparison_methods(),
            alphas,
        ),
        "table3" | "table4" | "dependent" => (
            "Dependent tests",
            vec![
                SimSpec::normal(0.4, 0.01),
                SimSpec::normal(0.4, 0.10),
                SimSpec::normal(0.8, 0.01),
                SimSpec::normal(0.8, 0.10),
                SimSpec::gamma(true, 0.01),
                SimSpec::gamma(true, 0.10),
            ],
            comparison_methods(),
            alphas,
        ),
        "table5" | "adaptive" => (
            "Adaptive versus simplified procedure",
            vec![SimSpec::adaptive_small()],
            vec![
                Method::target_decoy(ScoreKind::SignedT, 49),
                Method::TargetDecoy {
                    kind: ScoreKind::SignedT,
                    variant: Variant::Adaptive,
                    decoys: 49,
                    r: 1.0,
                },
            ],
            (1..=10).map(|k| k as f64 / 100.0).collect(),
        ),
        other => return Err(TdError::InvalidParameter(format!("unknown preset {other:?}"))),
    };
    let plans = specs
        .into_iter()
        .map(|spec| ExperimentPlan::new(spec, methods.clone(), alphas.clone(), reps, seed))
        .collect();
    Ok((format!("{title} ({reps} replicates)"), plans))
}

/// Runs a named preset mirroring one of the published simulation tables.
pub fn preset(name: &str, reps: usize, seed: u64) -> Result<Report> {
    let (title, plans) = preset_plans(name, reps, seed)?;
    let experiments = plans.iter().map(run_experiment).collect::<Result<Vec<_>>>()?;
    Ok(Report { title, experiments })
}

pub const PRESETS: [&str; 5] = ["table1", "table2", "table3", "table4", "table5"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fdp_examples() {
        let truth = vec![false, true, true, true, true, true, true, true, true, true, true];
        assert_eq!(fdp(&[], &truth), 0.0);
        assert_eq!(fdp(&(0..10).collect::<Vec<_>>(), &truth), 0.1);
        assert_eq!(fdp(&[0], &truth), 1.0);
    }

    #[test]
    fn method_names_round_trip() {
        for name in [
            "td-t-49",
            "td-ranksum-1",
            "td-t-49-adaptive",
            "td-t-19-standard-r2",
            "td-tsigned-9-standard-r2.5",
            "bh-t",
            "bh-perm",
            "storey-ranksum",
            "storey-t-l0.3",
            "storey-perm-upper",
            "storey-t-upper-l0.3",
            "bh-ranksum-upper",
            "td-ranksumsigned-49",
        ] {
            let m: Method = name.parse().unwrap();
            assert_eq!(m.name(), name);
        }
        assert!("td-t-0".parse::<Method>().is_err());
        assert!("foo".parse::<Method>().is_err());
        assert!("td-t-49-standard-x2".parse::<Method>().is_err());
    }

    fn tiny_plan(reps: usize) -> ExperimentPlan {
        let spec = SimSpec {
            m: 300,
            ..SimSpec::normal(0.0, 0.1)
        };
        ExperimentPlan::new(
            spec,
            vec!["td-t-19".parse().unwrap(), "storey-t".parse().unwrap(), "bh-perm".parse().unwrap()],
            vec![0.0, 0.05, 0.1],
            reps,
            11,
        )
    }

    #[test]
    fn zero_alpha_rejects_nothing() {
        let s = run_experiment(&tiny_plan(3)).unwrap();
        for m in &s.methods {
            let c = m.cell(0.0).unwrap();
            assert_eq!(c.mean_rejections, 0.0, "{}", m.name);
        }
    }

    #[test]
    fn equal_seeds_equal_summaries() {
        let a = run_experiment(&tiny_plan(3)).unwrap();
        let b = run_experiment(&tiny_plan(3)).unwrap();
        assert_eq!(a, b);
        let report = Report {
            title: "t".into(),
            experiments: vec![a],
        };
        assert_eq!(render(&report, ReportFormat::Json), render(&report, ReportFormat::Json));
    }

    #[test]
    fn se_is_sd_over_root_reps() {
        let results: Vec<RepResult> = [0.0, 0.1, 0.2, 0.1]
            .iter()
            .enumerate()
            .map(|(i, &f)| RepResult {
                replicate: i,
                alpha: 0.1,
                rejections: 10,
                true_rejections: 9,
                fdp: f,
            })
            .collect();
        let c = CellSummary::from_results(0.1, &results);
        assert!((c.mean_fdp - 0.1).abs() < 1e-15);
        let sd = (0.02f64 / 3.0).sqrt();
        assert!((c.fdp_se - sd / 2.0).abs() < 1e-15);
        assert!(!c.starred);
    }

    #[test]
    fn report_formats() {
        let s = run_experiment(&tiny_plan(2)).unwrap();
        let report = Report {
            title: "tiny".into(),
            experiments: vec![s],
        };
        let md = render(&report, ReportFormat::Markdown);
        // FDR and power tables: one row per method, one column per α
        let rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| TD") || l.starts_with("| BH") || l.starts_with("| Storey")).collect();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.matches('|').count() == 5));

        let tsv = render(&report, ReportFormat::Tsv);
        let parsed = parse_tsv(&tsv).unwrap();
        assert_eq!(parsed.len(), 9);
        assert_eq!(render_tsv(&parsed), tsv);

        let json = render(&report, ReportFormat::Json);
        let back: Report = serde_json::from_str(&json).unwrap();
        let cell = &back.experiments[0].methods[0].cells[1];
        assert_eq!(cell.fdp.len(), 2);
        assert_eq!(back, report);
    }

    #[test]
    fn failing_method_is_aborted() {
        // the adaptive split needs at least 5 + 5 per group
        let spec = SimSpec {
            m: 50,
            n1: 4,
            n0: 4,
            ..SimSpec::normal(0.0, 0.1)
        };
        let plan = ExperimentPlan::new(
            spec,
            vec!["td-t-19-adaptive".parse().unwrap(), "td-t-19".parse().unwrap()],
            vec![0.1],
            4,
            1,
        );
        let s = run_experiment(&plan).unwrap();
        assert!(s.methods[0].aborted);
        assert_eq!(s.methods[0].failures.len(), 4);
        assert!(s.methods[0].cells.is_empty());
        assert!(!s.methods[1].aborted);
    }

    #[test]
    fn plan_validation() {
        assert!(run_experiment(&tiny_plan(1)).is_err());
        let mut p = tiny_plan(2);
        p.alphas = vec![1.5];
        assert!(run_experiment(&p).is_err());
    }
}

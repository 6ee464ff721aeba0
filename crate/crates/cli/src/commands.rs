use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;

use target_decoy::baselines::{
    bh_reject, pooled_permutation_pvalues, qvalue_reject, qvalues_with_pi0, rank_sum_pvalues, storey_pi0,
    storey_qvalues, t_pvalues, PValueSource,
};
use target_decoy::config::load_config;
use target_decoy::harness::{emit_report, preset_plans, read_report_json, render, run_experiment, Report, ReportFormat};
use target_decoy::io::{ingest_matrix, write_json, write_results, ColumnSpec, Ingested, MatrixFormat, RunSummary};
use target_decoy::{run_procedure, ScoreKind, TdConfig, TdError, Variant};

use crate::manifest::{digest_file, Recorder};
use crate::{BaselineArgs, MatrixArgs, ReportArgs, RunArgs, SimulateArgs};

#[derive(Debug)]
pub struct CliError(TdError);

impl CliError {
    pub const EXIT_RANGE: u8 = 3;
    pub const EXIT_IO: u8 = 4;
    pub const EXIT_DATA: u8 = 5;

    pub fn exit_code(&self) -> u8 {
        match self.0 {
            TdError::InvalidParameter(_) | TdError::InvalidSplit { .. } | TdError::InvalidGroups(_) => {
                Self::EXIT_RANGE
            }
            TdError::Io { .. } | TdError::Format { .. } => Self::EXIT_IO,
            TdError::Parse { .. } | TdError::EmptyDataset | TdError::DegenerateVariance => Self::EXIT_DATA,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl From<TdError> for CliError {
    fn from(e: TdError) -> Self {
        CliError(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError(TdError::InvalidParameter(msg.into()))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid(format!("--alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

fn ingest(args: &MatrixArgs) -> Result<Ingested> {
    let format = MatrixFormat {
        delimiter: args.delimiter.parse()?,
        header: !args.no_header,
        id_column: !args.no_ids,
        cases: ColumnSpec::new(args.cases.clone()),
        controls: ColumnSpec::new(args.controls.clone()),
    };
    let ingested = ingest_matrix(&args.input, &format)?;
    if !ingested.dropped.is_empty() {
        eprintln!(
            "dropped {} row(s) with missing or non-numeric values",
            ingested.dropped.len()
        );
    }
    Ok(ingested)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError(TdError::io(dir, e)))
}

pub fn run(args: &RunArgs, argv: &[String]) -> Result<()> {
    let recorder = Recorder::start();
    let variant: Variant = args.variant.parse()?;
    let kind: ScoreKind = args.score.parse()?;
    check_alpha(args.alpha)?;
    if args.permutations == 0 {
        return Err(invalid("--permutations must be at least 1"));
    }
    let config = TdConfig {
        variant,
        r: args.r,
        alpha: args.alpha,
        tau: args.permutations + 1,
        seed: args.seed,
        ..TdConfig::default()
    };
    config.validate()?;

    let input = digest_file(&args.matrix.input)?;
    let ingested = ingest(&args.matrix)?;
    let data = &ingested.dataset;
    let decisions = run_procedure(data, kind, &config)?;

    create_dir(&args.output)?;
    let results_path = args.output.join("results.tsv");
    let summary_path = args.output.join("summary.json");
    let manifest_path = args.output.join("manifest.json");
    write_results(&results_path, data, &decisions)?;

    let summary = RunSummary::new(data, &decisions, variant.name(), kind.name(), ingested.dropped.len());
    let manifest = recorder.finish(
        "run",
        argv,
        args,
        args.seed,
        vec![input],
        vec![results_path.clone(), summary_path.clone(), manifest_path.clone()],
    );
    write_json(
        &summary_path,
        &json!({ "summary": summary, "seed": args.seed, "manifest": manifest }),
    )?;
    write_json(&manifest_path, &manifest)?;

    println!(
        "{} of {} tests rejected at alpha = {} (K = {}, t = {}, estimated FDR = {:.4})",
        summary.rejections, summary.tests, args.alpha, summary.k, summary.t, summary.estimated_fdr
    );
    Ok(())
}

fn parse_formats(spec: &str) -> Result<Vec<ReportFormat>> {
    let formats = spec
        .split(',')
        .map(|f| f.trim().parse::<ReportFormat>())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if formats.is_empty() {
        return Err(invalid("no report format given"));
    }
    Ok(formats)
}

pub fn simulate(args: &SimulateArgs, argv: &[String]) -> Result<()> {
    let recorder = Recorder::start();
    let formats = parse_formats(&args.format)?;
    let mut inputs = Vec::new();
    let (title, plans) = match (&args.preset, &args.config) {
        (Some(name), None) => {
            if args.reps < 2 {
                return Err(invalid(format!("--reps must be at least 2, got {}", args.reps)));
            }
            preset_plans(name, args.reps, args.seed)?
        }
        (None, Some(path)) => {
            inputs.push(digest_file(path)?);
            let config = load_config(path)?;
            (config.title, config.plans)
        }
        _ => return Err(invalid("give exactly one of --preset and --config")),
    };
    let seed = plans.first().map_or(args.seed, |p| p.seed);
    let experiments = plans
        .iter()
        .map(|plan| {
            eprintln!("running {} ({} replicates)", plan.spec.label(), plan.reps);
            run_experiment(plan)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let report = Report { title, experiments };

    create_dir(&args.output)?;
    let mut outputs: Vec<PathBuf> = emit_report(&report, &formats, &args.output)?;
    let manifest_path = args.output.join("manifest.json");
    outputs.push(manifest_path.clone());
    let manifest = recorder.finish("simulate", argv, args, seed, inputs, outputs.clone());
    write_json(&manifest_path, &manifest)?;
    for p in &outputs {
        println!("{}", p.display());
    }
    Ok(())
}

pub fn baseline(args: &BaselineArgs, argv: &[String]) -> Result<()> {
    let recorder = Recorder::start();
    check_alpha(args.alpha)?;
    let source: PValueSource = args.pvalues.parse()?;
    let storey = match args.method.as_str() {
        "bh" => false,
        "storey" | "qvalue" => true,
        other => return Err(invalid(format!("unknown baseline method {other:?}"))),
    };
    if storey && !(0.0..1.0).contains(&args.lambda) {
        return Err(invalid(format!("--lambda must lie in [0, 1), got {}", args.lambda)));
    }

    let input = digest_file(&args.matrix.input)?;
    let ingested = ingest(&args.matrix)?;
    let data = &ingested.dataset;
    let p = match source {
        PValueSource::TTest => t_pvalues(data, !args.one_sided),
        PValueSource::RankSum => rank_sum_pvalues(data, !args.one_sided),
        PValueSource::PooledPermutation => {
            let kind = if args.one_sided { ScoreKind::SignedT } else { ScoreKind::AbsT };
            pooled_permutation_pvalues(data, kind, args.draws, args.seed)?
        }
    };
    let (q, pi0) = if storey {
        (storey_qvalues(&p.p, args.lambda)?, storey_pi0(&p.p, args.lambda))
    } else {
        (qvalues_with_pi0(&p.p, 1.0), 1.0)
    };
    let rejected_ids = if storey {
        qvalue_reject(&q, args.alpha)
    } else {
        let mut r = bh_reject(&p.p, args.alpha);
        r.sort_unstable();
        r
    };
    let mut rejected = vec![false; data.m()];
    for &j in &rejected_ids {
        rejected[j] = true;
    }

    create_dir(&args.output)?;
    let table_path = args.output.join("baseline.tsv");
    let summary_path = args.output.join("summary.json");
    let manifest_path = args.output.join("manifest.json");
    let mut table = String::from("id\tp\tq\trejected\n");
    for j in 0..data.m() {
        let _ = writeln!(table, "{}\t{}\t{}\t{}", data.ids()[j], p.p[j], q[j], u8::from(rejected[j]));
    }
    std::fs::write(&table_path, table).map_err(|e| CliError(TdError::io(&table_path, e)))?;

    let manifest = recorder.finish(
        "baseline",
        argv,
        args,
        args.seed,
        vec![input],
        vec![table_path, summary_path.clone(), manifest_path.clone()],
    );
    let degenerate: Vec<&String> = p.degenerate.iter().map(|&j| &data.ids()[j]).collect();
    write_json(
        &summary_path,
        &json!({
            "method": args.method,
            "pvalues": source.name(),
            "one_sided": args.one_sided,
            "alpha": args.alpha,
            "pi0": pi0,
            "tests": data.m(),
            "rejections": rejected_ids.len(),
            "degenerate_tests": degenerate,
            "dropped_rows": ingested.dropped.len(),
            "seed": args.seed,
            "manifest": manifest,
        }),
    )?;
    write_json(&manifest_path, &manifest)?;
    println!("{} of {} tests rejected at alpha = {}", rejected_ids.len(), data.m(), args.alpha);
    Ok(())
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let format: ReportFormat = args.format.parse()?;
    let report = read_report_json(&args.input)?;
    let text = render(&report, format);
    match &args.output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError(TdError::io(path, e)))?,
        None => print!("{text}"),
    }
    Ok(())
}

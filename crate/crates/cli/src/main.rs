use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cotmarkov::bounds::{compute_profile, BoundReport, BoundsError, CoverageConstants};
use cotmarkov::chain::{
    check_local_global_consistency, row_margins, spectral_report, ChainError, Instance, InstanceFile, Kernel,
    DEFAULT_M_MAX,
};
use cotmarkov::harness::{
    export_sweep, noise_ablation, render_prompts, run_sweep, verify_scaling, write_noise_tables,
    write_prompts_jsonl, write_scaling_tables, ExportFormat, HarnessError, NoiseConfig, PromptConfig, ScalingConfig,
    SweepConfig, load_toml,
};
use cotmarkov::sampling::{sample_dataset, SamplingError};

/// Finite-state Markov model of chain-of-thought inference.
#[derive(Parser)]
#[command(name = "cotmarkov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed; overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Output format; the default depends on the subcommand.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Human-readable summary on stdout.
    Text,
    /// JSON document.
    Json,
    /// Comma-separated tables.
    Csv,
    /// SVG figures.
    Svg,
    /// Tables and figures.
    All,
    /// Line-delimited JSON records.
    Jsonl,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance file: kernels, consistency and structural assumptions.
    Validate {
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Margins, spectral diagnostics, structural profile and rate bounds.
    Analyze {
        instance: PathBuf,
        /// Failure probability for the rate bounds.
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Absolute constant of the rate bounds.
        #[arg(long, default_value_t = 1.0)]
        constant: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Replicate sweep over the context budget.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Log-log fit of n*(tau) against the horizon T.
    Scaling {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sweeps of an aligned task across noise levels.
    Noise {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Render sampled demonstrations as prompt records.
    ExportPrompts {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

/// Failure classes mapped to exit codes.
enum Failure {
    /// Exit 1: unreadable, unwritable or malformed input.
    Io(anyhow::Error),
    /// Exit 2: the instance breaks an assumption.
    Violation(anyhow::Error),
}

type CliResult = Result<bool, Failure>;

fn classify(err: HarnessError) -> Failure {
    let domain = matches!(
        err,
        HarnessError::IncompatibleEstimator { .. }
            | HarnessError::InsufficientDefinedPoints { .. }
            | HarnessError::TemplateMismatch(_)
            | HarnessError::Bounds(_)
            | HarnessError::Bench(_)
            | HarnessError::Sampling(SamplingError::DigestMismatch { .. })
    ) || matches!(&err, HarnessError::Chain(e) if !matches!(e, ChainError::Format(_)));
    if domain && !err.is_io() {
        Failure::Violation(err.into())
    } else {
        Failure::Io(err.into())
    }
}

fn chain_failure(err: ChainError) -> Failure {
    match err {
        ChainError::Format(_) => Failure::Io(err.into()),
        other => Failure::Violation(other.into()),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(anyhow!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::Io(anyhow!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| Failure::Io(e.into()))
}

fn load_instance(path: &Path) -> Result<Instance<f64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(anyhow!("{}: {e}", path.display())))?;
    let file = InstanceFile::from_toml(&text).map_err(chain_failure)?;
    file.to_instance().map_err(chain_failure)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into())
}

fn formats(format: Option<Format>) -> Vec<ExportFormat> {
    match format.unwrap_or(Format::All) {
        Format::Csv => vec![ExportFormat::Table],
        Format::Svg => vec![ExportFormat::Figure],
        _ => vec![ExportFormat::Table, ExportFormat::Figure],
    }
}

fn margins_json(kernel: &Kernel<f64>) -> serde_json::Value {
    let m = row_margins(kernel);
    json!({
        "per_row_margin": m.per_row_margin,
        "global_margin": m.global_margin,
        "argmax_per_row": m.argmax_per_row,
        "tie_rows": m.tie_rows,
    })
}

fn validate(path: &Path, common: &Common) -> CliResult {
    let instance = load_instance(path)?;
    let consistency = check_local_global_consistency(&instance);
    let outcome = compute_profile(&instance, DEFAULT_M_MAX).map_err(|e| Failure::Violation(e.into()))?;
    let violations: Vec<String> = outcome.violations.iter().map(|v| v.to_string()).collect();
    if common.format == Some(Format::Json) {
        let doc = json!({
            "file": path.display().to_string(),
            "digest": instance.digest(),
            "k": instance.k(),
            "T": instance.horizon(),
            "homogeneous": instance.is_homogeneous(),
            "consistent": consistency.consistent,
            "consistency_failure": consistency.failure.map(|f| format!("{f:?}")),
            "violations": outcome.violations,
        });
        print!("{}", to_json(&doc)?);
    } else {
        println!("{}: k = {}, T = {}, homogeneous = {}", path.display(), instance.k(), instance.horizon(), instance.is_homogeneous());
        println!("digest {}", instance.digest());
        match &consistency.failure {
            None => println!("local-global consistency: ok"),
            Some(f) => println!("local-global consistency: FAILED ({f:?})"),
        }
        if violations.is_empty() {
            println!("assumptions: all hold");
        } else {
            println!("assumption violations: {}", violations.join("; "));
        }
    }
    Ok(outcome.violations.is_empty())
}

fn analyze(path: &Path, delta: f64, constant: f64, common: &Common) -> CliResult {
    let instance = load_instance(path)?;
    let outcome = compute_profile(&instance, DEFAULT_M_MAX).map_err(|e| Failure::Violation(e.into()))?;
    let bounds = BoundReport::compute(&outcome.profile, delta, constant, None, CoverageConstants::default())
        .map_err(|e| match e {
            BoundsError::InvalidArgument(_) => Failure::Io(e.into()),
            other => Failure::Violation(other.into()),
        })?;
    let spectral = if instance.is_homogeneous() {
        spectral_report(&instance.kernels()[0], instance.mu(), DEFAULT_M_MAX).ok().map(|s| {
            json!({
                "stationary": s.stationary.weights(),
                "pseudo_gap": s.pseudo_gap,
                "achieving_m": s.achieving_m,
                "chi0": s.chi0,
                "per_m_gaps": s.per_m_gaps,
                "warnings": s.warnings,
            })
        })
    } else {
        None
    };
    let consistency = check_local_global_consistency(&instance);
    let doc = json!({
        "file": path.display().to_string(),
        "digest": instance.digest(),
        "kernels": instance.kernels().iter().map(margins_json).collect::<Vec<_>>(),
        "end_to_end": margins_json(&instance.end_to_end()),
        "consistent": consistency.consistent,
        "consistency_failure": consistency.failure.map(|f| format!("{f:?}")),
        "spectral": spectral,
        "profile": outcome.profile,
        "violations": outcome.violations,
        "bounds": bounds,
    });
    let text = to_json(&doc)?;
    write_file(&common.out_dir.join(format!("analyze_{}.json", stem(path))), &text)?;
    if common.format == Some(Format::Json) {
        print!("{text}");
    } else {
        let p = &outcome.profile;
        println!("k = {}, T = {}, homogeneous = {}", p.k, p.horizon, p.homogeneous);
        println!("mu_min = {}, Delta_Q = {}, Delta = {}, q_min = {}", p.mu_min, p.delta_q, p.delta, p.q_min);
        if let (Some(dp), Some(pi), Some(g), Some(c)) = (p.delta_p, p.pi_min, p.gamma_ps, p.chi0) {
            println!("Delta_P = {dp}, pi_min = {pi}, gamma_ps = {g}, chi0 = {c}, r = {:?}", p.r);
        }
        let show = |v: Option<f64>| v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into());
        println!(
            "bounds at delta = {delta}, C = {constant}: direct {}, homogeneous CoT {}, heterogeneous CoT {}",
            show(bounds.n_direct),
            show(bounds.n_homogeneous),
            show(bounds.n_heterogeneous)
        );
        for v in &outcome.violations {
            println!("violation: {v}");
        }
    }
    Ok(outcome.violations.is_empty())
}

fn sweep(path: &Path, common: &Common) -> CliResult {
    let mut config = SweepConfig::load(path).map_err(classify)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let result = run_sweep(&config).map_err(classify)?;
    if common.format == Some(Format::Json) {
        let name = format!("{}_{}_{}.json", result.experiment, result.condition, result.metric.name());
        write_file(&common.out_dir.join(name), &to_json(&result)?)?;
    } else {
        for p in export_sweep(&result, &common.out_dir, &formats(common.format)).map_err(classify)? {
            println!("wrote {}", p.display());
        }
    }
    for s in &result.n_star {
        println!("n*({}) {} = {}", s.tau, s.estimator, s.n_star.map(|n| n.to_string()).unwrap_or_else(|| "undefined".into()));
    }
    for d in &result.delta_n {
        println!("Delta n({}) {} = {}", d.tau, d.estimator, d.delta_n.map(|n| n.to_string()).unwrap_or_else(|| "undefined".into()));
    }
    for f in &result.monotonicity_flags {
        println!("note: {} drops by {:.4} from n = {} to n = {} (more than 2 SE)", f.estimator, f.drop, f.n_from, f.n_to);
    }
    for v in &result.violations {
        println!("violation: {v}");
    }
    Ok(result.violations.is_empty())
}

fn scaling(path: &Path, common: &Common) -> CliResult {
    let mut config: ScalingConfig = load_toml(path).map_err(classify)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let report = verify_scaling(&config).map_err(classify)?;
    if common.format == Some(Format::Json) {
        let name = format!("{}_{}_{}.json", report.experiment, report.family, report.metric.name());
        write_file(&common.out_dir.join(name), &to_json(&report)?)?;
    } else {
        for p in write_scaling_tables(&report, &common.out_dir, &formats(common.format)).map_err(classify)? {
            println!("wrote {}", p.display());
        }
    }
    for f in &report.fits {
        println!(
            "{}: n* = [{}], slope = {}, verdict = {}",
            f.estimator,
            f.n_star.iter().map(|n| n.map(|n| n.to_string()).unwrap_or_else(|| "-".into())).collect::<Vec<_>>().join(", "),
            f.slope.map(|s| format!("{s:.4}")).unwrap_or_else(|| "undefined".into()),
            f.verdict.map(|v| if v { "within band" } else { "outside band" }).unwrap_or("n/a")
        );
    }
    Ok(true)
}

fn noise(path: &Path, common: &Common) -> CliResult {
    let mut config: NoiseConfig = load_toml(path).map_err(classify)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let report = noise_ablation(&config).map_err(classify)?;
    if common.format == Some(Format::Json) {
        write_file(&common.out_dir.join(format!("{}_levels.json", report.experiment)), &to_json(&report)?)?;
    } else {
        for p in write_noise_tables(&report, &common.out_dir, &formats(common.format)).map_err(classify)? {
            println!("wrote {}", p.display());
        }
    }
    for r in &report.rows {
        println!(
            "p = {}, tau = {}: Delta_Q/Delta_P = {:.6}, Delta n = {}",
            r.p,
            r.tau,
            r.ratio,
            r.delta_n.map(|n| n.to_string()).unwrap_or_else(|| "undefined".into())
        );
    }
    Ok(report.sweeps.iter().all(|s| s.violations.is_empty()))
}

fn export_prompts(path: &Path, common: &Common) -> CliResult {
    let mut config = PromptConfig::load(path).map_err(classify)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let instance = config.instance.build(&config.base_dir).map_err(classify)?;
    let data = sample_dataset(&instance, config.n, config.mode, config.seed)
        .map_err(|e| classify(HarnessError::Sampling(e)))?;
    let queries = config.queries.clone().unwrap_or_else(|| (0..instance.k()).collect());
    let records = render_prompts(&data, &instance, &queries, config.template).map_err(classify)?;
    let base = format!("{}_{}_{}", config.experiment, config.instance.condition(), config.mode);
    if common.format == Some(Format::Text) {
        let mut text = String::new();
        for r in &records {
            text.push_str(&format!("{}\n{}\n# gold: {}\n\n", r.context_text, r.query_text, r.gold_answer));
        }
        write_file(&common.out_dir.join(format!("{base}.txt")), &text)?;
    } else {
        let mut buf = Vec::new();
        write_prompts_jsonl(&records, &mut buf).map_err(|e| Failure::Io(e.into()))?;
        let text = String::from_utf8(buf).map_err(|e| Failure::Io(e.into()))?;
        write_file(&common.out_dir.join(format!("{base}.jsonl")), &text)?;
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate { instance, common } => validate(instance, common),
        Command::Analyze { instance, delta, constant, common } => analyze(instance, *delta, *constant, common),
        Command::Sweep { config, common } => sweep(config, common),
        Command::Scaling { config, common } => scaling(config, common),
        Command::Noise { config, common } => noise(config, common),
        Command::ExportPrompts { config, common } => export_prompts(config, common),
    };
    let _ = std::io::stdout().flush();
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Violation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

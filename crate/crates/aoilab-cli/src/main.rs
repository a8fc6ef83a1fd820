//! `aoilab` command line: generate instances, run policies or the
//! offline oracle, compare, sweep corpora, run property checks, and
//! search for high-ratio instances.
//!
//! Exit codes: 0 success, 1 a check or ceiling was violated, 2 usage
//! or parse error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use aoilab::aoi::{average_aoi, per_update_metrics, AoiReport};
use aoilab::engine::simulate;
use aoilab::generators::{adversarial_search, generate, GeneratorSpec};
use aoilab::harness;
use aoilab::io;
use aoilab::model::Instance;
use aoilab::oracle;
use aoilab::policies::{policy_for, PolicyId};
use aoilab::ratio::{rat, Ratio};

#[derive(Parser)]
#[command(name = "aoilab", version, about = "Exact AoI scheduling laboratory")]
struct Cli {
    /// Output directory for artifacts and the run log.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Chain-enumeration cap for the offline oracle.
    #[arg(long, global = true, default_value_t = oracle::DEFAULT_CAP)]
    cap: usize,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GenArgs {
    /// example1 | example2 | example3 | random-uniform | poisson-like
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    g_max: Option<String>,
    #[arg(long)]
    s_max: Option<String>,
    #[arg(long)]
    rate: Option<String>,
    #[arg(long)]
    mean_size: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance file to stdout.
    Gen(GenArgs),
    /// Simulate one policy (or solve offline) and write artifacts.
    Run {
        #[arg(long)]
        instance: PathBuf,
        /// Policy name, or "oracle" for the offline optimum.
        #[arg(long)]
        policy: String,
    },
    /// Tabulate several policies (and optionally the oracle) on one instance.
    Compare {
        #[arg(long)]
        instance: PathBuf,
        /// Comma-separated policy names; "oracle" allowed.
        #[arg(long)]
        policies: String,
    },
    /// Generate a corpus, run one policy against the oracle, report ratios.
    Sweep {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long)]
        policy: String,
    },
    /// Run structural property checks on an instance or a corpus dir.
    Check {
        #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
        instance: Option<PathBuf>,
        /// Directory of *.inst files, all checked.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Only run checks whose id starts with this prefix
        /// (system-time, decomposition, srpt-plus-vs-optimal,
        /// srpt-l-envelope, oracle-dominance).
        #[arg(long)]
        suite: Option<String>,
    },
    /// Hill-climb for instances with a high policy/oracle ratio.
    Search {
        #[arg(long)]
        policy: String,
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct RunRecord {
    instance_id: String,
    policy: String,
    report: AoiReport,
    trace_path: String,
    timestamp: u64,
    tool_version: &'static str,
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn load_instance(path: &Path) -> Result<Instance, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    io::parse_instance(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn build_spec(args: &GenArgs) -> Result<GeneratorSpec, String> {
    let num = |field: &Option<String>, name: &str, default: &str| -> Result<Ratio, String> {
        match field {
            Some(s) => Ratio::from_str(s).map_err(|e| format!("--{name} {s:?}: {e}")),
            None => Ok(rat(default)),
        }
    };
    match args.family.as_str() {
        "example1" => Ok(GeneratorSpec::Example1),
        "example3" => Ok(GeneratorSpec::Example3),
        "example2" => {
            let m = args.m.ok_or("--m is required for example2")?;
            Ok(GeneratorSpec::Example2 {
                m,
                epsilon: num(&args.epsilon, "epsilon", "1/100")?,
                horizon: num(&args.horizon, "horizon", &(2 * m).to_string())?,
            })
        }
        "random-uniform" => Ok(GeneratorSpec::RandomUniform {
            n: args.n.ok_or("--n is required for random-uniform")?,
            g_max: num(&args.g_max, "g-max", "4")?,
            s_max: num(&args.s_max, "s-max", "2")?,
            seed: args.seed,
        }),
        "poisson-like" => Ok(GeneratorSpec::RandomPoissonLike {
            n: args.n.ok_or("--n is required for poisson-like")?,
            rate: num(&args.rate, "rate", "1")?,
            mean_size: num(&args.mean_size, "mean-size", "1")?,
            seed: args.seed,
        }),
        other => Err(format!("unknown family {other:?}")),
    }
}

/// "p/q ~ decimal" rendering used in all human-facing tables.
fn show(r: &Ratio) -> String {
    format!("{} ~ {}", r, r.to_decimal_string(12))
}

fn evaluate(
    instance: &Instance,
    policy: &str,
    cap: usize,
) -> Result<(AoiReport, aoilab::model::Trace), String> {
    if policy == "oracle" {
        let opt = oracle::optimal(instance, cap).map_err(|e| e.to_string())?;
        Ok((opt.best_report, opt.best_trace))
    } else {
        let id = PolicyId::from_str(policy).map_err(|e| e.to_string())?;
        let trace = simulate(instance, policy_for(id).as_ref()).map_err(|e| e.to_string())?;
        let report = average_aoi(&trace, instance).map_err(|e| e.to_string())?;
        Ok((report, trace))
    }
}

fn cmd_run(out: &Path, cap: usize, instance_path: &Path, policy: &str) -> Result<(), String> {
    let instance = load_instance(instance_path)?;
    let (report, trace) = evaluate(&instance, policy, cap)?;
    std::fs::create_dir_all(out).map_err(|e| e.to_string())?;
    let id = io::instance_id(&instance);
    let stem = format!("{}-{policy}", &id[..12]);
    let trace_path = out.join(format!("{stem}.trace"));
    std::fs::write(&trace_path, io::serialize_trace(&trace)).map_err(|e| e.to_string())?;
    std::fs::write(out.join(format!("{stem}.report.txt")), io::report_text(&report))
        .map_err(|e| e.to_string())?;
    let metrics = per_update_metrics(&trace, &instance).map_err(|e| e.to_string())?;
    std::fs::write(out.join(format!("{stem}.metrics.csv")), io::metrics_csv(&metrics))
        .map_err(|e| e.to_string())?;
    let record = RunRecord {
        instance_id: id,
        policy: policy.to_string(),
        report: report.clone(),
        trace_path: trace_path.display().to_string(),
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        tool_version: env!("CARGO_PKG_VERSION"),
    };
    let line = serde_json::to_string(&record).map_err(|e| e.to_string())?;
    let log_path = out.join("runs.jsonl");
    use std::io::Write as _;
    let mut log = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .map_err(|e| e.to_string())?;
    writeln!(log, "{line}").map_err(|e| e.to_string())?;
    println!("policy {policy}");
    println!("integral {}", show(&report.integral));
    println!("average {}", show(&report.average));
    println!("trace {}", trace_path.display());
    Ok(())
}

fn cmd_compare(cap: usize, instance_path: &Path, policies: &str) -> Result<(), String> {
    let instance = load_instance(instance_path)?;
    let names: Vec<&str> = policies.split(',').map(str::trim).collect();
    let oracle_integral = if names.contains(&"oracle") || names.len() > 1 {
        oracle::optimal(&instance, cap)
            .ok()
            .map(|o| o.best_report.integral)
    } else {
        None
    };
    println!("policy\tintegral\taverage\tratio\tcompletions");
    for name in names {
        let (report, trace) = evaluate(&instance, name, cap)?;
        let ratio = match &oracle_integral {
            Some(opt) if opt.is_positive() => format!("{}", &report.integral / opt),
            _ => "-".into(),
        };
        println!(
            "{name}\t{}\t{}\t{ratio}\t{}",
            show(&report.integral),
            show(&report.average),
            trace.completions.len()
        );
    }
    Ok(())
}

fn cmd_sweep(
    cap: usize,
    gen: &GenArgs,
    count: u64,
    policy: &str,
) -> Result<bool, String> {
    use rayon::prelude::*;
    let id = PolicyId::from_str(policy).map_err(|e| e.to_string())?;
    let ceiling = match id {
        PolicyId::SrptPlus => Some(rat("4")),
        PolicyId::SrptL => Some(rat("29")),
        _ => None,
    };
    let instances: Vec<Instance> = (0..count)
        .map(|k| {
            let mut args_spec = build_spec(gen)?;
            match &mut args_spec {
                GeneratorSpec::RandomUniform { seed, .. }
                | GeneratorSpec::RandomPoissonLike { seed, .. } => *seed = gen.seed + k,
                _ => {}
            }
            generate(&args_spec).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let ratios: Vec<Option<Ratio>> = instances
        .par_iter()
        .map(|inst| harness::competitive_ratio(inst, id, cap).ok())
        .collect();
    let mut max: Option<(usize, Ratio)> = None;
    for (k, ratio) in ratios.iter().enumerate() {
        let Some(ratio) = ratio else { continue };
        println!("{k}\t{}", show(ratio));
        if max.as_ref().map_or(true, |(_, m)| ratio > m) {
            max = Some((k, ratio.clone()));
        }
    }
    match (&max, &ceiling) {
        (Some((k, m)), Some(c)) => {
            println!("max\t{} (instance {k}, ceiling {c})", show(m));
            Ok(m <= c)
        }
        (Some((k, m)), None) => {
            println!("max\t{} (instance {k})", show(m));
            Ok(true)
        }
        (None, _) => {
            println!("max\t- (no ratio defined)");
            Ok(true)
        }
    }
}

fn cmd_check(
    out: &Path,
    cap: usize,
    instance_path: Option<&Path>,
    corpus: Option<&Path>,
    suite: Option<&str>,
) -> Result<bool, String> {
    let mut paths: Vec<PathBuf> = Vec::new();
    if let Some(path) = instance_path {
        paths.push(path.to_path_buf());
    }
    if let Some(dir) = corpus {
        let mut found: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| format!("{}: {e}", dir.display()))?
            .filter_map(|entry| entry.ok())
            .map(|entry| entry.path())
            .filter(|p| p.extension().is_some_and(|ext| ext == "inst"))
            .collect();
        found.sort();
        if found.is_empty() {
            return Err(format!("no *.inst files in {}", dir.display()));
        }
        paths.extend(found);
    }
    let mut all_reports = Vec::new();
    let mut all_passed = true;
    for path in &paths {
        let instance = load_instance(path)?;
        let reports = harness::run_all_checks(&instance, cap).map_err(|e| e.to_string())?;
        for report in reports {
            if suite.is_some_and(|s| !report.check_id.starts_with(s)) {
                continue;
            }
            let status = if report.skipped {
                "SKIP"
            } else if report.passed {
                "PASS"
            } else {
                all_passed = false;
                "FAIL"
            };
            println!("{status}\t{}\t{}", report.check_id, path.display());
            for witness in &report.witnesses {
                println!("\t{witness}");
            }
            all_reports.push(report);
        }
    }
    if suite.is_some() && all_reports.is_empty() {
        return Err(format!("suite {:?} matched no checks", suite.unwrap()));
    }
    std::fs::create_dir_all(out).map_err(|e| e.to_string())?;
    let json = serde_json::to_string_pretty(&all_reports).map_err(|e| e.to_string())?;
    std::fs::write(out.join("checks.json"), json).map_err(|e| e.to_string())?;
    Ok(all_passed)
}

fn cmd_search(cap: usize, policy: &str, n: usize, budget: u64, seed: u64) -> Result<(), String> {
    let id = PolicyId::from_str(policy).map_err(|e| e.to_string())?;
    let result = adversarial_search(id, n, budget, seed, cap).map_err(|e| e.to_string())?;
    println!("evaluations {}", result.evaluations);
    println!("best_ratio {}", show(&result.best_ratio));
    let mut text = String::new();
    write!(text, "{}", io::serialize_instance(&result.best_instance)).unwrap();
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let outcome = match &cli.command {
        Command::Gen(args) => build_spec(args)
            .and_then(|spec| generate(&spec).map_err(|e| e.to_string()))
            .map(|inst| {
                print!("{}", io::serialize_instance(&inst));
                true
            }),
        Command::Run { instance, policy } => {
            cmd_run(&cli.out, cli.cap, instance, policy).map(|()| true)
        }
        Command::Compare { instance, policies } => {
            cmd_compare(cli.cap, instance, policies).map(|()| true)
        }
        Command::Sweep { gen, count, policy } => cmd_sweep(cli.cap, gen, *count, policy),
        Command::Check {
            instance,
            corpus,
            suite,
        } => cmd_check(
            &cli.out,
            cli.cap,
            instance.as_deref(),
            corpus.as_deref(),
            suite.as_deref(),
        ),
        Command::Search {
            policy,
            n,
            budget,
            seed,
        } => cmd_search(cli.cap, policy, *n, *budget, *seed).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(message) => fail(2, message),
    }
}

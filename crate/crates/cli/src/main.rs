//! `fran`: command-line front end for realizations, sweeps, oracle
//! cross-checks and the invariant suite.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fran_core::algorithm::{AlgorithmOptions, BackhaulMode, RunStatus};
use fran_core::experiments::{
    outcome_plot_series, outcomes_to_csv, power_sweep, run_cell, run_invariant_suite, run_realization,
    sweep_plot_series, sweep_to_csv, CellKey, SweepResult,
};
use fran_core::oracle::{cross_check, small_instance, CrossCheck};
use fran_core::scenario::ScenarioConfig;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "fran", version, about = "Multicast beamforming with RU clustering under per-link backhaul limits")]
struct Cli {
    /// TOML scenario file; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed (base seed for sweeps); defaults to the config's rng_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Backhaul model. Sweeps run all three when absent.
    #[arg(long, global = true, value_enum)]
    baseline: Option<Baseline>,
    /// Worker threads for sweeps; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Also write x/y plot series (JSON) to this file.
    #[arg(long, global = true)]
    plot: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Baseline {
    Individual,
    Aggregate,
    Benchmark,
}

impl From<Baseline> for BackhaulMode {
    fn from(b: Baseline) -> Self {
        match b {
            Baseline::Individual => BackhaulMode::Individual,
            Baseline::Aggregate => BackhaulMode::Aggregate,
            Baseline::Benchmark => BackhaulMode::Benchmark,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One seeded realization.
    Realize {
        /// Keep per-iteration power traces.
        #[arg(long)]
        trace: bool,
        /// Condition requests on this many distinct cached files.
        #[arg(long)]
        cached: Option<usize>,
    },
    /// Mean power over a capacity x cached-files grid.
    Sweep(GridArgs),
    /// Outage fraction over a capacity x cached-files grid.
    Outage(GridArgs),
    /// Main algorithm against exhaustive cluster enumeration on small instances.
    Oracle {
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 3)]
        max_rus: usize,
    },
    /// Run the invariant suite.
    Validate,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [70.0, 104.0])]
    capacities_mbps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3])]
    cached: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    realizations: usize,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn record(&self) -> String {
        let (kind, message) = match self {
            Failure::Usage(m) => ("usage", m),
            Failure::Config(m) => ("config", m),
            Failure::Runtime(m) => ("runtime", m),
        };
        serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(runtime)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, Failure> {
    let cfg = match path {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(ScenarioConfig::default()),
    };
    cfg.map_err(|e| Failure::Config(e.to_string()))
}

fn modes(baseline: Option<Baseline>) -> Vec<BackhaulMode> {
    match baseline {
        Some(b) => vec![b.into()],
        None => vec![BackhaulMode::Individual, BackhaulMode::Aggregate, BackhaulMode::Benchmark],
    }
}

fn write_sweep(cli: &Cli, result: &SweepResult) -> Result<(), Failure> {
    let text = match cli.format {
        Format::Json => to_json(result)?,
        Format::Csv => sweep_to_csv(result).map_err(runtime)?,
    };
    if let Some(p) = &cli.plot {
        emit(Some(p), &to_json(&sweep_plot_series(result))?)?;
    }
    emit(cli.out.as_deref(), &text)
}

fn oracle_csv(rows: &[(u64, CrossCheck)]) -> String {
    let mut s = String::from("seed,num_rus,num_groups,oracle_best_w,oracle_size,algorithm_status,algorithm_relaxed_w,relative_gap\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
    for (seed, c) in rows {
        let status = serde_json::to_value(c.algorithm_status).ok().and_then(|v| v.as_str().map(String::from));
        s.push_str(&format!(
            "{seed},{},{},{},{},{},{},{}\n",
            c.num_rus,
            c.num_groups,
            opt(c.oracle_best_w),
            c.oracle_size,
            status.unwrap_or_default(),
            opt(c.algorithm_relaxed_w),
            opt(c.relative_gap)
        ));
    }
    s
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let config = load_config(cli.config.as_deref())?;
    let seed = cli.seed.unwrap_or(config.rng_seed);
    match &cli.command {
        Command::Realize { trace, cached } => {
            let mode = cli.baseline.map_or(BackhaulMode::Individual, BackhaulMode::from);
            let outcome = run_realization(&config, seed, mode, *cached, *trace);
            if let Some(p) = &cli.plot {
                emit(Some(p), &to_json(&outcome_plot_series(&outcome))?)?;
            }
            let text = match cli.format {
                Format::Json => to_json(&outcome)?,
                Format::Csv => outcomes_to_csv(std::slice::from_ref(&outcome)).map_err(runtime)?,
            };
            emit(cli.out.as_deref(), &text)
        }
        Command::Sweep(grid) => {
            let caps: Vec<f64> = grid.capacities_mbps.iter().map(|c| c * 1e6).collect();
            let result = power_sweep(&config, &caps, &grid.cached, &modes(cli.baseline), grid.realizations, seed)
                .map_err(|e| Failure::Config(e.to_string()))?;
            write_sweep(cli, &result)
        }
        Command::Outage(grid) => {
            if grid.realizations == 0 || grid.capacities_mbps.is_empty() || grid.cached.is_empty() {
                return Err(Failure::Config("outage grid needs realizations and nonempty lists".into()));
            }
            let mode = cli.baseline.map_or(BackhaulMode::Individual, BackhaulMode::from);
            let mut cells = Vec::new();
            for &c in &grid.capacities_mbps {
                if !(c >= 0.0) {
                    return Err(Failure::Config(format!("invalid capacity {c}")));
                }
                for &k in &grid.cached {
                    let key = CellKey { capacity_bps: Some(c * 1e6), cached_requested: Some(k), mode };
                    cells.push(run_cell(&config, key, grid.realizations, seed));
                }
            }
            write_sweep(cli, &SweepResult { base_seed: seed, realizations_per_cell: grid.realizations, cells })
        }
        Command::Oracle { instances, max_rus } => {
            let options = AlgorithmOptions::from_config(&config, BackhaulMode::Individual, seed);
            let mut rows = Vec::with_capacity(*instances);
            for i in 0..*instances as u64 {
                let s = seed.wrapping_add(i);
                let inst = small_instance(s, *max_rus).map_err(|e| Failure::Config(e.to_string()))?;
                rows.push((s, cross_check(&inst, &options).map_err(runtime)?));
            }
            let text = match cli.format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Row<'a> {
                        seed: u64,
                        #[serde(flatten)]
                        check: &'a CrossCheck,
                    }
                    let reached = rows
                        .iter()
                        .filter(|(_, c)| c.relative_gap.is_some_and(|g| g <= 1e-3))
                        .count();
                    let oracle_feasible = rows.iter().filter(|(_, c)| c.oracle_best_w.is_some()).count();
                    let lower_bound_violations = rows
                        .iter()
                        .filter(|(_, c)| c.algorithm_status == RunStatus::Feasible && c.relative_gap.is_some_and(|g| g < -1e-6))
                        .count();
                    to_json(&serde_json::json!({
                        "instances": rows.iter().map(|(s, c)| Row { seed: *s, check: c }).collect::<Vec<_>>(),
                        "oracle_feasible": oracle_feasible,
                        "reached_within_1e-3": reached,
                        "lower_bound_violations": lower_bound_violations,
                    }))?
                }
                Format::Csv => oracle_csv(&rows),
            };
            emit(cli.out.as_deref(), &text)
        }
        Command::Validate => {
            let report = run_invariant_suite(&config);
            let text = match cli.format {
                Format::Json => to_json(&report)?,
                Format::Csv => {
                    let mut s = String::from("name,passed,detail\n");
                    for c in &report.checks {
                        s.push_str(&format!("{},{},\"{}\"\n", c.name, c.passed, c.detail.replace('"', "'")));
                    }
                    s
                }
            };
            emit(cli.out.as_deref(), &text)?;
            if report.all_passed() {
                Ok(())
            } else {
                let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                Err(Failure::Runtime(format!("invariant checks failed: {}", failed.join(", "))))
            }
        }
    }
}

fn cli_main(argv: Vec<OsString>) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            eprintln!("{}", Failure::Usage(e.to_string().trim_end().to_string()).record());
            return EXIT_CONFIG;
        }
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build();
    let result = match pool {
        Ok(pool) => pool.install(|| execute(&cli)),
        Err(e) => Err(runtime(e)),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.record());
            f.code()
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(cli_main(std::env::args_os().collect()))
}

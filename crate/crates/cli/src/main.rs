//! Command-line driver: simulate, explore, replay, check, attack, and
//! export-dag over scenario and trace files.
//!
//! Exit codes are a stable contract: 0 for success (including violations
//! that the model permits in non-fault-tolerant runs), 1 for unexpected
//! violations or replay divergence, 2 for usage and I/O errors.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dagbft_core::dag::to_dot;
use dagbft_core::harness::{
    explore, minimize, replay, run_with, AdversaryStrategy, Scenario, Trace,
};
use dagbft_core::invariant::{check_all, InvariantId, Severity};
use dagbft_core::transition::run_events;
use dagbft_core::types::Address;

#[derive(Parser)]
#[command(name = "dagbft", version, about = "DAG-based BFT consensus model harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (seeded random, or scripted when the config carries a
    /// fixed event list), checking invariants as it goes.
    Simulate(SimulateArgs),
    /// Enumerate all states reachable within a depth bound, checking every
    /// invariant on each visited state.
    Explore(ExploreArgs),
    /// Re-run a recorded trace and verify every digest and the final state.
    Replay(TraceArg),
    /// Re-check all invariants on a recorded trace's final state.
    Check(TraceArg),
    /// Run a scenario under a Byzantine adversary strategy.
    Attack(AttackArgs),
    /// Write one validator's DAG from a trace's final state as Graphviz DOT.
    ExportDag(ExportDagArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the maximum number of events.
    #[arg(long)]
    events: Option<usize>,
    /// Write the trace (JSON lines) here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check invariants every N events (the final state is always checked).
    #[arg(long, default_value_t = 10)]
    check_every: usize,
    /// Run N seeds (seed, seed+1, ...) as independent executions.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct ExploreArgs {
    #[arg(long)]
    config: PathBuf,
    /// Exploration depth (events from the initial state).
    #[arg(long)]
    depth: usize,
    /// Visited-state budget; hitting it truncates the report.
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,
}

#[derive(Args)]
struct TraceArg {
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    config: PathBuf,
    /// Adversary strategy: none, equivocate, under-quorum.
    #[arg(long, default_value = "equivocate")]
    strategy: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    events: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportDagArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Address of the validator whose DAG to export.
    #[arg(long)]
    validator: String,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Simulate(args) => simulate(args, None),
        Command::Explore(args) => cmd_explore(args),
        Command::Replay(args) => cmd_replay(args),
        Command::Check(args) => cmd_check(args),
        Command::Attack(args) => {
            let strategy = match AdversaryStrategy::parse(&args.strategy) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            simulate(
                SimulateArgs {
                    config: args.config,
                    seed: args.seed,
                    events: args.events,
                    out: args.out,
                    check_every: 10,
                    jobs: 1,
                },
                Some(strategy),
            )
        }
        Command::ExportDag(args) => cmd_export_dag(args),
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(2)
    })?;
    let scenario = Scenario::from_json(&text).map_err(|e| {
        // serde_json reports line and column in the message.
        eprintln!("error: malformed config {}: {e}", path.display());
        ExitCode::from(2)
    })?;
    scenario.validate().map_err(|e| {
        eprintln!("error: invalid config {}: {e}", path.display());
        ExitCode::from(2)
    })?;
    Ok(scenario)
}

fn load_trace(path: &Path) -> Result<Trace, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(2)
    })?;
    Trace::from_jsonl(&text).map_err(|e| {
        eprintln!("error: malformed trace {}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExitCode> {
    fs::write(path, contents).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        ExitCode::from(2)
    })
}

/// Outcome of one checked run.
struct RunOutcome {
    trace: Trace,
    /// First invariant that failed where it must hold, with the step index.
    failure: Option<(usize, InvariantId)>,
    /// Conditional invariants seen violated on a non-fault-tolerant run.
    permitted: BTreeSet<InvariantId>,
}

fn checked_run(scenario: &Scenario, check_every: usize) -> RunOutcome {
    let params = scenario.params();
    let mut failure: Option<(usize, InvariantId)> = None;
    let mut permitted: BTreeSet<InvariantId> = BTreeSet::new();
    let mut ft_so_far = true;
    let cadence = check_every.max(1);
    let trace = run_with(scenario, |step, _event, state, ft| {
        ft_so_far &= ft;
        if step % cadence != 0 || failure.is_some() {
            return;
        }
        let report = check_all(state, &params, ft_so_far);
        for st in &report.statuses {
            match st.severity {
                Severity::Failure if failure.is_none() => {
                    failure = Some((step, st.invariant));
                }
                Severity::Expected => {
                    permitted.insert(st.invariant);
                }
                _ => {}
            }
        }
    });
    if failure.is_none() {
        let report = check_all(&trace.final_state, &params, trace.ft_throughout);
        for st in &report.statuses {
            match st.severity {
                Severity::Failure if failure.is_none() => {
                    failure = Some((trace.steps.len(), st.invariant));
                }
                Severity::Expected => {
                    permitted.insert(st.invariant);
                }
                _ => {}
            }
        }
    }
    RunOutcome {
        trace,
        failure,
        permitted,
    }
}

/// Checked runs over independent scenarios, parallel when built with the
/// `parallel` feature.
fn checked_batch(scenarios: &[Scenario], check_every: usize) -> Vec<RunOutcome> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        scenarios
            .par_iter()
            .map(|sc| checked_run(sc, check_every))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        scenarios
            .iter()
            .map(|sc| checked_run(sc, check_every))
            .collect()
    }
}

fn simulate(args: SimulateArgs, strategy: Option<AdversaryStrategy>) -> ExitCode {
    let mut scenario = match load_scenario(&args.config) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(events) = args.events {
        scenario.max_events = events;
    }
    if let Some(strategy) = strategy {
        scenario.adversary = strategy;
    }
    if let Some(script) = &scenario.script {
        // Validate scripted event lists up front so a broken script is a
        // config error, not a crash mid-run.
        if let Err(f) = run_events(&scenario.initial_state(), script, &scenario.params()) {
            eprintln!("error: invalid script in {}: {f}", args.config.display());
            return ExitCode::from(2);
        }
    }

    let scenarios: Vec<Scenario> = (0..args.jobs.max(1) as u64)
        .map(|i| {
            let mut sc = scenario.clone();
            sc.seed = scenario.seed.wrapping_add(i);
            sc
        })
        .collect();
    // Runs are independent; the batch is parallel when the feature is on.
    let outcomes = checked_batch(&scenarios, args.check_every);

    let mut worst = ExitCode::SUCCESS;
    for (sc, outcome) in scenarios.iter().zip(outcomes) {
        let label = format!("seed {}", sc.seed);
        println!(
            "{label}: {} events, {} states fault-tolerant throughout: {}",
            outcome.trace.steps.len(),
            outcome.trace.steps.len() + 1,
            outcome.trace.ft_throughout
        );
        let report = check_all(
            &outcome.trace.final_state,
            &sc.params(),
            outcome.trace.ft_throughout,
        );
        print!("{}", report.render());
        for inv in &outcome.permitted {
            println!("notice: non-fault-tolerant execution; {inv} violated as permitted");
        }
        if let Some(out) = &args.out {
            let path = if scenarios.len() == 1 {
                out.clone()
            } else {
                out.with_extension(format!("{}.jsonl", sc.seed))
            };
            if let Err(code) = write_file(&path, &outcome.trace.to_jsonl()) {
                return code;
            }
            println!("trace written to {}", path.display());
        }
        if let Some((step, invariant)) = outcome.failure {
            println!("FAILURE: {invariant} violated at step {step}");
            let minimized = minimize(&outcome.trace, invariant);
            if minimized.reproduced {
                println!("minimized witness ({} events):", minimized.trace.steps.len());
                for step in &minimized.trace.steps {
                    println!("  {}", step.event);
                }
            }
            worst = ExitCode::from(1);
        }
    }
    worst
}

fn cmd_explore(args: ExploreArgs) -> ExitCode {
    let scenario = match load_scenario(&args.config) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let report = explore(&scenario, args.depth, args.budget);
    println!(
        "{} states visited (depth {}, frontier {})",
        report.visited, report.depth_reached, report.frontier
    );
    if report.truncated {
        println!("truncated: visited-state budget {} exhausted", args.budget);
    }
    for pv in report.permitted.iter().take(5) {
        println!(
            "permitted violation of {} after {} events (non-fault-tolerant path)",
            pv.violation.invariant,
            pv.path.len()
        );
    }
    if report.failures.is_empty() {
        println!("no invariant failures");
        ExitCode::SUCCESS
    } else {
        for pv in report.failures.iter().take(10) {
            println!("FAILURE: {} via path:", pv.violation);
            for e in &pv.path {
                println!("  {e}");
            }
        }
        ExitCode::from(1)
    }
}

fn cmd_replay(args: TraceArg) -> ExitCode {
    let trace = match load_trace(&args.trace) {
        Ok(t) => t,
        Err(code) => return code,
    };
    match replay(&trace) {
        Ok(()) => {
            println!(
                "replay ok: {} steps reproduced bit-exactly",
                trace.steps.len()
            );
            ExitCode::SUCCESS
        }
        Err(mismatch) => {
            println!("replay diverged at {mismatch}");
            ExitCode::from(1)
        }
    }
}

fn cmd_check(args: TraceArg) -> ExitCode {
    let trace = match load_trace(&args.trace) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let params = trace.scenario.params();
    let report = check_all(&trace.final_state, &params, trace.ft_throughout);
    print!("{}", report.render());
    for st in report.expected() {
        println!(
            "notice: non-fault-tolerant execution; {} violated as permitted",
            st.invariant
        );
    }
    if report.is_clean() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_export_dag(args: ExportDagArgs) -> ExitCode {
    let trace = match load_trace(&args.trace) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let addr = Address::new(args.validator.clone());
    let Some(v) = trace.final_state.validator(&addr) else {
        eprintln!("error: {} is not a correct validator of this trace", addr);
        return ExitCode::from(2);
    };
    let dot = to_dot(&v.dag);
    if let Err(code) = write_file(&args.out, &dot) {
        return code;
    }
    println!(
        "dag of {} written to {} ({} certificates)",
        addr,
        args.out.display(),
        v.dag.len()
    );
    ExitCode::SUCCESS
}

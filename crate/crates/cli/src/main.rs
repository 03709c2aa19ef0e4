//! `aeff`: check, run, explore and serve λæ programs.
//!
//! Exit codes: 0 success, 1 type error, 2 parse error or unreadable input,
//! 3 safety violation, 4 builtin failure during a run (for example `nth`
//! out of range), 5 bad flags or inject script.

use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use aeff::ast::Proc;
use aeff::explore::{
    chooser, load_source, ExploreOptions, Injection, LoadError, RunOptions, State, StopReason, Strategy, System,
};
use aeff::step::Redex;
use aeff::surface::{parse_value, print_comp, print_proc};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

const EXIT_TYPE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_SAFETY: u8 = 3;
const EXIT_BUILTIN: u8 = 4;
const EXIT_USAGE: u8 = 5;

#[derive(Parser)]
#[command(name = "aeff", version, about = "Asynchronous algebraic effects: checker, stepper and explorer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Typecheck every run clause of a program.
    Check {
        file: PathBuf,
        #[arg(long)]
        no_effects: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run one execution trace.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = StrategyArg::Deterministic)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Write one JSON record per step to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// JSON list of `{"afterStep": n, "op": "...", "payload": "..."}`.
        #[arg(long)]
        inject: Option<PathBuf>,
        #[arg(long)]
        check_safety: bool,
        #[arg(long)]
        no_effects: bool,
        #[arg(long)]
        json: bool,
    },
    /// Explore all interleavings up to the given bounds.
    Explore {
        file: PathBuf,
        #[arg(long, default_value_t = 5000)]
        max_states: usize,
        #[arg(long, default_value_t = 60)]
        max_depth: usize,
        #[arg(long)]
        check_safety: bool,
        #[arg(long)]
        no_effects: bool,
        /// Expand each level on one thread.
        #[arg(long)]
        sequential: bool,
        /// Accepted for symmetry; the report is always JSON.
        #[arg(long)]
        json: bool,
    },
    /// Serve the stepping API over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Deterministic,
    Random,
    Interactive,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ScriptEntry {
    after_step: Option<usize>,
    op: String,
    payload: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(match cli.command {
        Command::Check { file, no_effects, json } => check(&file, !no_effects, json),
        Command::Run { file, strategy, seed, max_steps, trace, inject, check_safety, no_effects, json } => {
            let opts = RunArgs { strategy, seed, max_steps, trace, inject, check_safety, json };
            run(&file, !no_effects, opts)
        }
        Command::Explore { file, max_states, max_depth, check_safety, no_effects, sequential, json: _ } => {
            let opts = ExploreOptions { max_states, max_depth, check_safety, parallel: !sequential, ..Default::default() };
            explore(&file, !no_effects, &opts)
        }
        Command::Serve { port } => serve(port),
    })
}

/// Reads and loads a file, reporting failures in the requested format.
fn load(file: &PathBuf, effects: bool, json: bool) -> Result<(System, State), u8> {
    let src = match std::fs::read_to_string(file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("cannot read {}: {e}", file.display());
            return Err(EXIT_PARSE);
        }
    };
    load_source(&src, effects).map_err(|e| {
        if json {
            println!("{}", json!({ "ok": false, "diagnostic": e }));
        } else {
            eprintln!("{}: {e}", file.display());
        }
        match e {
            LoadError::Parse(_) => EXIT_PARSE,
            LoadError::Type(_) => EXIT_TYPE,
        }
    })
}

fn check(file: &PathBuf, effects: bool, json: bool) -> u8 {
    match load(file, effects, json) {
        Ok((_, s)) => {
            let ty = s.ty.map(|t| t.to_string()).unwrap_or_default();
            if json {
                println!("{}", json!({ "ok": true, "type": ty }));
            } else {
                println!("ok: {ty}");
            }
            0
        }
        Err(code) => code,
    }
}

struct RunArgs {
    strategy: StrategyArg,
    seed: u64,
    max_steps: usize,
    trace: Option<PathBuf>,
    inject: Option<PathBuf>,
    check_safety: bool,
    json: bool,
}

fn read_script(path: &PathBuf) -> Result<Vec<Injection>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let entries: Vec<ScriptEntry> = serde_json::from_str(&text).map_err(|e| format!("bad inject script: {e}"))?;
    entries
        .into_iter()
        .map(|e| {
            let payload = parse_value(&e.payload).map_err(|err| format!("bad payload `{}`: {err}", e.payload))?;
            Ok(Injection { after: e.after_step, op: e.op, payload })
        })
        .collect()
}

/// Prompts on stderr and reads a redex index from stdin.
fn interactive(_: &State, redexes: &[Redex]) -> Option<usize> {
    let stdin = std::io::stdin();
    let mut err = std::io::stderr();
    for (k, r) in redexes.iter().enumerate() {
        let _ = writeln!(err, "  [{k}] {} ({})", r.description, r.rule);
    }
    loop {
        let _ = write!(err, "redex> ");
        let _ = err.flush();
        let mut line = String::new();
        if stdin.lock().read_line(&mut line).ok()? == 0 {
            return None;
        }
        match line.trim().parse::<usize>() {
            Ok(k) if k < redexes.len() => return Some(k),
            _ => {
                let _ = writeln!(err, "enter a number below {}", redexes.len());
            }
        }
    }
}

fn show(p: &Proc) -> String {
    match p {
        Proc::Run(m) => print_comp(m),
        _ => print_proc(p),
    }
}

fn run(file: &PathBuf, effects: bool, a: RunArgs) -> u8 {
    let (sys, s) = match load(file, effects, a.json) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let script = match a.inject.as_ref().map(read_script).transpose() {
        Ok(s) => s.unwrap_or_default(),
        Err(e) => {
            eprintln!("{e}");
            return EXIT_USAGE;
        }
    };
    let opts = RunOptions { max_steps: a.max_steps, check_safety: a.check_safety, script };
    let report = match a.strategy {
        StrategyArg::Deterministic => sys.run(s, &opts, &mut chooser(Strategy::Deterministic)),
        StrategyArg::Random => sys.run(s, &opts, &mut chooser(Strategy::Random(a.seed))),
        StrategyArg::Interactive => {
            let mut pick = |st: &State, rs: &[Redex]| {
                eprintln!("{}", print_proc(&st.config.proc));
                interactive(st, rs)
            };
            sys.run(s, &opts, &mut pick)
        }
    };
    if let Some(path) = &a.trace {
        let mut out = String::new();
        for r in &report.records {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        if let Err(e) = std::fs::write(path, out) {
            eprintln!("cannot write {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    let steps = report.records.iter().filter(|r| r.rule != "inject").count();
    let term = show(&report.final_state.config.proc);
    if a.json {
        let out = json!({
            "stop": report.stop,
            "steps": steps,
            "final": term,
            "isResult": report.final_state.config.is_result(),
            "emitted": report.emitted(),
            "violations": report.violations,
            "builtinError": report.builtin_error,
        });
        println!("{out}");
    } else {
        match &report.stop {
            StopReason::Quiescent => println!("result: {term}"),
            StopReason::MaxSteps => println!("budget of {} steps exhausted at: {term}", a.max_steps),
            StopReason::Aborted => println!("stopped after {steps} steps at: {term}"),
            StopReason::BuiltinError => println!(
                "builtin failure after {steps} steps: {}\nat: {term}",
                report.builtin_error.as_deref().unwrap_or("")
            ),
            StopReason::InjectRejected(e) => println!("inject rejected after {steps} steps: {e}\nat: {term}"),
        }
        for v in &report.violations {
            eprintln!("safety violation ({:?}): {}\n  in {}", v.kind, v.detail, v.state);
        }
    }
    if !report.violations.is_empty() {
        EXIT_SAFETY
    } else if report.stop == StopReason::BuiltinError {
        EXIT_BUILTIN
    } else if matches!(report.stop, StopReason::InjectRejected(_)) {
        EXIT_USAGE
    } else {
        0
    }
}

fn explore(file: &PathBuf, effects: bool, opts: &ExploreOptions) -> u8 {
    let (sys, s) = match load(file, effects, true) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let report = sys.explore(s, opts);
    println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
    if report.safety_violations.is_empty() {
        0
    } else {
        EXIT_SAFETY
    }
}

fn serve(port: u16) -> u8 {
    let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
    match rt.block_on(aeff_server::serve(port)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("server error: {e}");
            EXIT_USAGE
        }
    }
}

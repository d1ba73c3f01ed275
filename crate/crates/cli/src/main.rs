use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use lbemc_core::cfa::{to_dot, RuleApplication};
use lbemc_core::frontend::compile;
use lbemc_core::oracle::{explicit_reachable, DomainBound, Reachability};
use lbemc_core::workloads::gen_test_locks;
use lbemc_core::{AbstractionMode, Config, Encoding, SolverBackend, VerificationResult};

const EXIT_SAFE: u8 = 0;
const EXIT_UNSAFE: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_USAGE: u8 = 3;
const EXIT_CROSSCHECK: u8 = 4;

const DEFAULT_EXTERNAL: &str = "z3 -in -smt2";

/// Predicate-abstraction model checker with single- and large-block encoding.
#[derive(Parser, Debug)]
#[command(name = "lbemc", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Program file, or `-` for stdin.
    input: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = EncodingArg::Lbe)]
    encoding: EncodingArg,

    #[arg(long, value_enum, default_value_t = AbstractionArg::Boolean)]
    abstraction: AbstractionArg,

    #[arg(long, default_value_t = 100)]
    max_refinements: usize,

    /// `external` runs $LBEMC_SOLVER (default `z3 -in -smt2`).
    #[arg(long, value_enum, default_value_t = SolverArg::Internal)]
    solver: SolverArg,

    /// Write run statistics as JSON.
    #[arg(long, value_name = "FILE")]
    stats: Option<PathBuf>,

    /// Write the analysed CFA as GraphViz.
    #[arg(long, value_name = "FILE")]
    dot: Option<PathBuf>,

    /// Write the final abstract reachability tree as GraphViz.
    #[arg(long, value_name = "FILE")]
    art_dot: Option<PathBuf>,

    /// Write summarization steps as JSON lines.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,

    /// Also search concrete states with every variable in [0, B] and fail
    /// if the verdicts disagree.
    #[arg(long, value_name = "B")]
    crosscheck: Option<i64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the test_locks program with N locks.
    GenTestLocks {
        n: usize,
        /// Make the last assertion fail.
        #[arg(long)]
        bug: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EncodingArg {
    Sbe,
    Lbe,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AbstractionArg {
    Cartesian,
    Boolean,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Internal,
    External,
}

const CROSSCHECK_BUDGET: usize = 2_000_000;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_SAFE };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("lbemc: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<u8, String> {
    if let Some(Command::GenTestLocks { n, bug }) = cli.command {
        let src = gen_test_locks(n, bug).map_err(|e| e.to_string())?;
        print!("{src}");
        return Ok(EXIT_SAFE);
    }
    let input = cli.input.as_ref().ok_or("no input file given")?;
    let src = read_input(input)?;
    let program = compile(&src).map_err(|e| format!("{}:{e}", input.display()))?;

    let backend = match cli.solver {
        SolverArg::Internal => SolverBackend::Internal,
        SolverArg::External => {
            SolverBackend::External(std::env::var("LBEMC_SOLVER").unwrap_or_else(|_| DEFAULT_EXTERNAL.into()))
        }
    };
    let config = Config {
        encoding: match cli.encoding {
            EncodingArg::Sbe => Encoding::Sbe,
            EncodingArg::Lbe => Encoding::Lbe,
        },
        mode: match cli.abstraction {
            AbstractionArg::Cartesian => AbstractionMode::Cartesian,
            AbstractionArg::Boolean => AbstractionMode::Boolean,
        },
        max_refinements: cli.max_refinements,
        backend,
        art_dot: cli.art_dot.is_some(),
    };
    let out = lbemc_core::run(&program, &config);

    if let Some(path) = &cli.dot {
        write_file(path, &to_dot(&out.program))?;
    }
    if let (Some(path), Some(dot)) = (&cli.art_dot, &out.art_dot) {
        write_file(path, dot)?;
    }
    if let Some(path) = &cli.trace {
        let mut s = String::new();
        for app in &out.trace.applications {
            s.push_str(&trace_line(app).to_string());
            s.push('\n');
        }
        write_file(path, &s)?;
    }
    if let Some(path) = &cli.stats {
        let mut s = serde_json::to_string_pretty(&stats_json(&out.result)).expect("serializable");
        s.push('\n');
        write_file(path, &s)?;
    }

    let stdout = io::stdout();
    let mut w = stdout.lock();
    let code = report(&mut w, &out.result).map_err(|e| e.to_string())?;

    if let Some(b) = cli.crosscheck {
        if b < 0 {
            return Err("crosscheck bound must be non-negative".into());
        }
        let reach = explicit_reachable(&program, &DomainBound::uniform(0, b, CROSSCHECK_BUDGET));
        let _ = writeln!(w, "crosscheck [0,{b}]: {reach:?}");
        let disagree = matches!(
            (&out.result, reach),
            (VerificationResult::Safe(_), Reachability::Reachable)
                | (VerificationResult::Unsafe { .. }, Reachability::NotReachable)
        );
        if disagree {
            eprintln!("lbemc: verdict disagrees with explicit-state search");
            return Ok(EXIT_CROSSCHECK);
        }
    }
    Ok(code)
}

fn read_input(path: &PathBuf) -> Result<String, String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| format!("stdin: {e}"))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn write_file(path: &PathBuf, content: &str) -> Result<(), String> {
    fs::write(path, content).map_err(|e| format!("{}: {e}", path.display()))
}

fn trace_line(app: &RuleApplication) -> serde_json::Value {
    match app {
        RuleApplication::Rule0 { removed_edges } => json!({"rule": 0, "removed_edges": removed_edges}),
        RuleApplication::Rule1 { removed_loc, from, to } => {
            json!({"rule": 1, "removed_loc": removed_loc, "from": from, "to": to})
        }
        RuleApplication::Rule2 { source, target } => json!({"rule": 2, "source": source, "target": target}),
    }
}

fn stats_json(r: &VerificationResult) -> serde_json::Value {
    let s = r.stats();
    json!({
        "verdict": r.verdict(),
        "art_size": s.art_size,
        "refinement_steps": s.refinement_steps,
        "predicates": {
            "total": s.predicates_total,
            "avg": s.predicates_avg,
            "max": s.predicates_max,
        },
        "solver_queries": s.solver_queries,
        "rule_applications": s.rule_applications,
        "wall_time_ms": s.wall_time.as_secs_f64() * 1000.0,
    })
}

fn report(w: &mut impl Write, r: &VerificationResult) -> io::Result<u8> {
    match r {
        VerificationResult::Safe(_) => {
            writeln!(w, "SAFE")?;
            Ok(EXIT_SAFE)
        }
        VerificationResult::Unknown { reason, .. } => {
            writeln!(w, "UNKNOWN: {reason}")?;
            Ok(EXIT_UNKNOWN)
        }
        VerificationResult::Unsafe {
            path,
            model,
            integral,
            replayed,
            ..
        } => {
            writeln!(w, "UNSAFE")?;
            writeln!(w, "counterexample:")?;
            for (e, _) in &path.steps {
                writeln!(w, "  {} -> {}: {}", e.source, e.target, e.op)?;
            }
            writeln!(w, "model:")?;
            for (v, q) in &model.values {
                writeln!(w, "  {v} = {q}")?;
            }
            match replayed {
                Some(true) => writeln!(w, "replay: reaches the error location")?,
                Some(false) => writeln!(w, "replay: FAILED")?,
                None if !integral => writeln!(w, "replay: skipped (non-integral model)")?,
                None => {}
            }
            Ok(EXIT_UNSAFE)
        }
    }
}

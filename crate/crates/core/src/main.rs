use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, NaiveDateTime};
use clap::{Args, Parser, Subcommand};

use dataflow_dialogue::calendar::StubDb;
use dataflow_dialogue::dataset::{
    execution_equivalence, length_quantiles, load_jsonl, simplify_dataset, to_jsonl, DatasetTurn, Style, Verdict,
};
use dataflow_dialogue::engine::{Engine, Mode};
use dataflow_dialogue::graph::{default_clock, emit_dot, DialogueContext, DotOptions};
use dataflow_dialogue::repl::{self, render_turn, Session, Status};
use dataflow_dialogue::rewrite::load_rules;
use dataflow_dialogue::syntax::parse_any;

const EXIT_USAGE: u8 = 1;
const EXIT_PARTIAL: u8 = 2;
const EXIT_RAISED: u8 = 3;

#[derive(Parser)]
#[command(name = "dfd", version, about = "Simplify, expand and execute dataflow dialogue annotations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite original annotations into the simplified form.
    Simplify {
        #[arg(long = "in")]
        input: PathBuf,
        /// Simplification rules; the bundled pack by default.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Output JSONL; standard output by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one expression, or a file with one turn per line.
    Exec {
        #[arg(long, conflicts_with = "file", required_unless_present = "file")]
        expr: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
        /// Dialogue snapshot to continue from and save back to.
        #[arg(long)]
        context: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Interactive multi-turn session.
    Repl {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Token-length quantiles of both annotation styles.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75")]
        quantiles: Vec<f64>,
    },
    /// Execute original and simplified annotations and compare outcomes.
    Check {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Per-turn verdicts as JSONL; standard output by default.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        world: WorldArgs,
    },
    /// Execute an expression and print its graph as DOT.
    Viz {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        hide_results: bool,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct WorldArgs {
    /// Database fixture (JSON); the bundled one by default.
    #[arg(long, env = "DFD_FIXTURE")]
    fixture: Option<PathBuf>,
    /// Current time, RFC 3339 or naive `YYYY-MM-DDTHH:MM:SS`.
    #[arg(long, value_parser = parse_clock)]
    clock: Option<NaiveDateTime>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    world: WorldArgs,
    /// Build expressions as written, without expansion.
    #[arg(long)]
    legacy: bool,
    /// Let refer fall back to the database when the dialogue has no match.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    fallback_db: bool,
}

fn parse_clock(s: &str) -> Result<NaiveDateTime, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.naive_local())
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S"))
        .map_err(|e| format!("{s:?} is not an RFC 3339 time: {e}"))
}

impl WorldArgs {
    fn db(&self) -> Result<StubDb> {
        match &self.fixture {
            Some(path) => StubDb::load(path).with_context(|| format!("loading fixture {}", path.display())),
            None => Ok(StubDb::fixture()),
        }
    }

    fn clock(&self) -> NaiveDateTime {
        self.clock.unwrap_or_else(default_clock)
    }

    fn context(&self, engine: &Engine) -> Result<DialogueContext> {
        Ok(DialogueContext::with_clock(engine.registry().clone(), self.db()?, self.clock()))
    }
}

impl RunArgs {
    fn mode(&self) -> Mode {
        if self.legacy {
            Mode::Legacy
        } else {
            Mode::Expand
        }
    }

    fn session(&self, engine: Engine, snapshot: Option<&Path>) -> Result<Session> {
        let mut ctx = match snapshot.filter(|p| p.exists()) {
            Some(path) => {
                let doc = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                DialogueContext::from_snapshot(&doc, engine.registry().clone())
                    .with_context(|| format!("loading snapshot {}", path.display()))?
            }
            None => self.world.context(&engine)?,
        };
        if let Some(clock) = self.world.clock {
            ctx.clock = clock;
        }
        ctx.refer.fallback_db = self.fallback_db;
        Ok(Session::new(engine, ctx, self.mode()))
    }
}

fn engine_with(rules: Option<&Path>) -> Result<Engine> {
    let standard = Engine::standard();
    match rules {
        None => Ok(standard),
        Some(path) => {
            let simplify = load_rules(path).with_context(|| format!("loading rules {}", path.display()))?;
            Ok(Engine::new(standard.registry().clone(), simplify, standard.expand_rules().clone()))
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing to standard output"),
    }
}

/// Fills in missing simplified annotations with the engine's rules.
fn ensure_simplified(turns: Vec<DatasetTurn>, engine: &Engine) -> Vec<DatasetTurn> {
    if turns.iter().all(|t| t.simplified.is_some()) {
        return turns;
    }
    simplify_dataset(&turns, engine.simplify_rules(), engine.registry().as_ref()).turns
}

fn stats_table(turns: &[DatasetTurn], qs: &[f64]) -> Result<String> {
    let mut out = String::new();
    for style in [Style::Original, Style::Simplified] {
        let sample: Vec<_> = turns
            .iter()
            .filter(|t| style == Style::Original || t.simplified.is_some())
            .cloned()
            .collect();
        out.push_str(&length_quantiles(&sample, style, qs)?.to_string());
        out.push('\n');
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Simplify { input, rules, out } => {
            let engine = engine_with(rules.as_deref())?;
            let turns = load_jsonl(&input)?;
            let report = simplify_dataset(&turns, engine.simplify_rules(), engine.registry().as_ref());
            write_output(out.as_deref(), &to_jsonl(&report.turns))?;
            for f in &report.failures {
                eprintln!("{}: {}", f.turn_id, f.message);
            }
            if !report.turns.is_empty() {
                let table = stats_table(&report.turns, &[0.25, 0.5, 0.75]).unwrap_or_else(|e| format!("{e}\n"));
                if out.is_some() {
                    print!("{table}");
                } else {
                    eprint!("{table}");
                }
            }
            Ok(if report.failures.is_empty() { 0 } else { EXIT_PARTIAL })
        }
        Command::Exec { expr, file, context, run } => {
            let mut session = run.session(Engine::standard(), context.as_deref())?;
            let script = match (expr, file) {
                (Some(e), _) => e,
                (None, Some(path)) => fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?,
                (None, None) => bail!("one of --expr or --file is required"),
            };
            for (i, line) in script.lines().enumerate() {
                if line.trim().is_empty() || line.trim_start().starts_with('#') {
                    continue;
                }
                let step = session.handle(line);
                match step.status {
                    Status::Failed => bail!("line {}: {}", i + 1, step.output),
                    Status::Quit => break,
                    Status::Ok | Status::Raised if step.output.is_empty() => {}
                    Status::Ok | Status::Raised => println!("{}", step.output),
                }
            }
            if let Some(path) = &context {
                let doc = serde_json::to_string_pretty(&session.ctx.to_snapshot())?;
                fs::write(path, doc).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(if session.ctx.exceptions.is_empty() { 0 } else { EXIT_RAISED })
        }
        Command::Repl { run } => {
            let mut session = run.session(Engine::standard(), None)?;
            let stdin = io::stdin();
            repl::run(&mut session, stdin.lock(), &mut io::stdout())?;
            Ok(0)
        }
        Command::Stats { input, quantiles } => {
            let turns = ensure_simplified(load_jsonl(&input)?, &Engine::standard());
            print!("{}", stats_table(&turns, &quantiles)?);
            Ok(0)
        }
        Command::Check { input, rules, report, world } => {
            let engine = engine_with(rules.as_deref())?;
            let turns = ensure_simplified(load_jsonl(&input)?, &engine);
            let result = execution_equivalence(&turns, &engine, &world.db()?, world.clock());
            write_output(report.as_deref(), &result.to_jsonl())?;
            println!("{:<10} {:>5}", "verdict", "turns");
            for (name, n) in [
                ("equal", result.count(|v| *v == Verdict::Equal)),
                ("differ", result.count(|v| *v == Verdict::Differ)),
                ("error", result.count(|v| matches!(v, Verdict::Error(_)))),
                ("skipped", result.count(|v| *v == Verdict::Skipped)),
            ] {
                println!("{name:<10} {n:>5}");
            }
            println!("match rate {:.3} over {} executable turns", result.match_rate(), result.executable());
            Ok(if result.match_rate() == 1.0 { 0 } else { EXIT_PARTIAL })
        }
        Command::Viz { expr, out, hide_results, run } => {
            let engine = Engine::standard();
            let mut ctx = run.world.context(&engine)?;
            ctx.refer.fallback_db = run.fallback_db;
            let e = parse_any(&expr).context("parsing --expr")?;
            let turn = engine.run_turn(&mut ctx, &e, run.mode())?;
            if let Err(exc) = &turn.outcome {
                eprintln!("{}", render_turn(&ctx, 0, &Err(exc.clone())));
            }
            let dot = emit_dot(turn.root, &ctx, DotOptions { hide_results })?;
            write_output(out.as_deref(), &dot)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // clap exits 2 on usage errors; 2 means a partial result here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

//! Line-oriented multi-turn session over a persistent dialogue context.
//!
//! Each input line is one turn. While a `MissingValue` exception is pending,
//! a bare literal (or `resume(expr)`) answers it instead of starting a turn.

use std::io::{self, BufRead, Write};

use crate::engine::{Engine, EngineError, Mode};
use crate::exec::{EngineException, ExceptionKind, ReviseMode, TurnResult};
use crate::graph::{emit_dot, DialogueContext, DotOptions};
use crate::syntax::{parse_any, ExprKind, ExprNode};
use crate::value::Value;

pub const HELP: &str = "\
commands:
  <expr>                         run a turn (call style, or S-expression in legacy mode)
  <literal> | resume(<expr>)     answer the pending question
  :revise MODE OLD => NEW        MODE is replace or extend_and; OLD evaluates to a constraint
  :viz N                         print turn N (1-based) as DOT
  :help
  :quit";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// The turn raised an exception; its prompt is in the output.
    Raised,
    /// The input could not be run at all.
    Failed,
    Quit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub status: Status,
    pub output: String,
}

impl Step {
    fn new(status: Status, output: impl Into<String>) -> Step {
        Step { status, output: output.into() }
    }
}

pub struct Session {
    engine: Engine,
    pub ctx: DialogueContext,
    mode: Mode,
}

impl Session {
    pub fn new(engine: Engine, ctx: DialogueContext, mode: Mode) -> Session {
        Session { engine, ctx, mode }
    }

    pub fn handle(&mut self, line: &str) -> Step {
        let line = line.trim();
        match line.split_once(char::is_whitespace).map_or((line, ""), |(a, b)| (a, b.trim())) {
            ("", _) => Step::new(Status::Ok, ""),
            (":quit", _) => Step::new(Status::Quit, ""),
            (":help", _) => Step::new(Status::Ok, HELP),
            (":viz", arg) => self.viz(arg),
            (":revise", arg) => self.revise(arg),
            (cmd, _) if cmd.starts_with(':') => Step::new(Status::Failed, format!("unknown command {cmd}; try :help")),
            _ => self.turn(line),
        }
    }

    fn turn(&mut self, text: &str) -> Step {
        let e = match parse_any(text) {
            Ok(e) => e,
            Err(err) => return Step::new(Status::Failed, format!("syntax error: {err}")),
        };
        let before = self.ctx.messages.len();
        let result = match resume_argument(&e, self.pending_missing()) {
            Some(value) => self.engine.resume(&mut self.ctx, value, self.mode),
            None => self.engine.run_turn(&mut self.ctx, &e, self.mode),
        };
        self.finish(before, result)
    }

    fn revise(&mut self, arg: &str) -> Step {
        let usage = "usage: :revise replace|extend_and OLD => NEW";
        let Some((mode, rest)) = arg.split_once(char::is_whitespace) else {
            return Step::new(Status::Failed, usage);
        };
        let (Some(mode), Some((old, new))) = (ReviseMode::parse(mode), rest.split_once("=>")) else {
            return Step::new(Status::Failed, usage);
        };
        let (old, new) = match (parse_any(old), parse_any(new)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return Step::new(Status::Failed, format!("syntax error: {e}")),
        };
        let before = self.ctx.messages.len();
        let result = self.engine.revise(&mut self.ctx, &old, &new, mode);
        self.finish(before, result)
    }

    fn viz(&self, arg: &str) -> Step {
        let root = arg
            .parse::<usize>()
            .ok()
            .and_then(|n| n.checked_sub(1))
            .and_then(|i| self.ctx.turns.get(i).copied());
        match root {
            Some(root) => match emit_dot(root, &self.ctx, DotOptions::default()) {
                Ok(dot) => Step::new(Status::Ok, dot.trim_end()),
                Err(e) => Step::new(Status::Failed, e.to_string()),
            },
            None => Step::new(Status::Failed, format!("no turn {arg:?}; there are {}", self.ctx.turns.len())),
        }
    }

    fn pending_missing(&self) -> bool {
        self.ctx.exceptions.last().is_some_and(|e| e.kind == ExceptionKind::MissingValue)
    }

    fn finish(&self, before: usize, result: Result<TurnResult, EngineError>) -> Step {
        match result {
            Ok(r) => {
                let status = if r.outcome.is_ok() { Status::Ok } else { Status::Raised };
                Step::new(status, render_turn(&self.ctx, before, &r.outcome))
            }
            Err(e) => Step::new(Status::Failed, format!("error: {e}")),
        }
    }
}

/// What a turn printed since message `before`, then its value or exception.
pub fn render_turn(ctx: &DialogueContext, before: usize, outcome: &Result<Value, EngineException>) -> String {
    let mut lines: Vec<String> = ctx.messages[before.min(ctx.messages.len())..].to_vec();
    match outcome {
        Ok(Value::Unit) => {}
        Ok(v) => lines.push(format!("= {}", v.render(&ctx.db))),
        Err(e) => {
            if !lines.contains(&e.prompt) {
                lines.push(e.prompt.clone());
            }
            lines.push(format!("! {}", e.kind));
        }
    }
    lines.join("\n")
}

fn resume_argument(e: &ExprNode, pending: bool) -> Option<&ExprNode> {
    match &e.kind {
        ExprKind::Call { head, positional, named } if head == "resume" && positional.len() == 1 && named.is_empty() => {
            Some(&positional[0])
        }
        ExprKind::Call { .. } | ExprKind::Let { .. } | ExprKind::VarRef(_) => None,
        _ if pending => Some(e),
        _ => None,
    }
}

/// Reads lines until EOF or `:quit`, writing a `> ` prompt before each.
pub fn run<R: BufRead, W: Write>(session: &mut Session, input: R, out: &mut W) -> io::Result<()> {
    let mut lines = input.lines();
    loop {
        write!(out, "> ")?;
        out.flush()?;
        let Some(line) = lines.next().transpose()? else {
            writeln!(out)?;
            return Ok(());
        };
        let step = session.handle(&line);
        if step.status == Status::Quit {
            return Ok(());
        }
        if !step.output.is_empty() {
            writeln!(out, "{}", step.output)?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::StubDb;

    fn session() -> Session {
        let engine = Engine::standard();
        let ctx = engine.context(StubDb::fixture());
        Session::new(engine, ctx, Mode::Expand)
    }

    #[test]
    fn quit_first() {
        let mut out = Vec::new();
        run(&mut session(), ":quit\nToday()\n".as_bytes(), &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "> ");
    }

    #[test]
    fn create_then_resume() {
        let mut s = session();
        let step = s.handle("CreateEvent(starts_at_time(at(Tomorrow(), 2, pm=true)))");
        assert_eq!(step.status, Status::Raised);
        assert!(step.output.contains("What should the event be called?"), "{}", step.output);
        let step = s.handle("\"Design review\"");
        assert_eq!(step.status, Status::Ok, "{}", step.output);
        assert!(step.output.contains("Design review"));
        assert_eq!(s.ctx.db.event(6).unwrap().subject, "Design review");
    }

    #[test]
    fn explicit_resume_and_no_pending() {
        let mut s = session();
        assert_eq!(s.handle("resume(\"x\")").status, Status::Failed);
        s.handle("CreateEvent(with_subject(\"Sync\"))");
        let step = s.handle("resume(at(Tomorrow(), 5, pm=true))");
        assert_eq!(step.status, Status::Ok, "{}", step.output);
    }

    #[test]
    fn refer_across_turns() {
        let mut s = session();
        s.handle("singleton(FindEvents(with_subject(\"Lunch\")))");
        let step = s.handle("Event.subject(refer(Event))");
        assert_eq!(step.output, "= \"Lunch\"");
    }

    #[test]
    fn revise_and_viz() {
        let mut s = session();
        s.handle("FindEvents(starts_at(Tomorrow()))");
        let step = s.handle(":revise replace type_constraint(Date) => add_days(Today(), 4)");
        assert_eq!(step.status, Status::Ok, "{}", step.output);
        assert!(step.output.contains("Planning"), "{}", step.output);
        let dot = s.handle(":viz 2").output;
        assert!(dot.starts_with("digraph G {") && dot.contains("lightblue"));
        assert_eq!(s.handle(":viz 9").status, Status::Failed);
    }

    #[test]
    fn bad_input_keeps_going() {
        let mut s = session();
        assert_eq!(s.handle("Frobnicate(").status, Status::Failed);
        assert_eq!(s.handle(":nope").status, Status::Failed);
        assert_eq!(s.handle("Today()").output, "= 2022-01-01");
    }
}

use std::fmt;

use chrono::NaiveDateTime;
use serde::{Serialize, Serializer};

use crate::calendar::StubDb;
use crate::engine::{Engine, EngineError, Mode};
use crate::graph::DialogueContext;
use crate::syntax::{parse_pexp, parse_sexp, ExprNode};

use super::DatasetTurn;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Equal,
    Differ,
    /// Either pipeline failed before evaluation; holds the failure kind.
    Error(String),
    /// Uses functions the registry does not implement. Not counted.
    Skipped,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Equal => f.write_str("equal"),
            Verdict::Differ => f.write_str("differ"),
            Verdict::Error(kind) => write!(f, "error({kind})"),
            Verdict::Skipped => f.write_str("skipped"),
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TurnVerdict {
    pub turn_id: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EquivalenceReport {
    pub verdicts: Vec<TurnVerdict>,
}

impl EquivalenceReport {
    pub fn count(&self, pred: impl Fn(&Verdict) -> bool) -> usize {
        self.verdicts.iter().filter(|v| pred(&v.verdict)).count()
    }

    /// Turns that were actually run.
    pub fn executable(&self) -> usize {
        self.count(|v| *v != Verdict::Skipped)
    }

    /// Equal turns over executable turns; 1.0 when nothing was executable.
    pub fn match_rate(&self) -> f64 {
        let n = self.executable();
        if n == 0 {
            return 1.0;
        }
        self.count(|v| *v == Verdict::Equal) as f64 / n as f64
    }

    /// One JSON object per turn.
    pub fn to_jsonl(&self) -> String {
        self.verdicts
            .iter()
            .map(|v| serde_json::to_string(v).expect("strings serialize") + "\n")
            .collect()
    }
}

/// Runs each dialogue twice on fresh copies of `fixture`: original
/// annotations in legacy mode, simplified ones in expand mode. A turn is
/// `equal` when both leave the same database and produce equivalent root
/// values (or raise the same exception kind). Turns of one dialogue share
/// a context, so later turns can refer to earlier ones.
pub fn execution_equivalence(
    turns: &[DatasetTurn],
    engine: &Engine,
    fixture: &StubDb,
    clock: NaiveDateTime,
) -> EquivalenceReport {
    let mut verdicts = Vec::with_capacity(turns.len());
    for dialogue in turns.chunk_by(|a, b| a.dialogue_id == b.dialogue_id) {
        let fresh = || DialogueContext::with_clock(engine.registry().clone(), fixture.clone(), clock);
        let (mut legacy, mut expanded) = (fresh(), fresh());
        for t in dialogue {
            let (verdict, detail) = judge(t, engine, &mut legacy, &mut expanded);
            verdicts.push(TurnVerdict { turn_id: t.turn_id(), verdict, detail });
        }
    }
    EquivalenceReport { verdicts }
}

fn judge(
    t: &DatasetTurn,
    engine: &Engine,
    legacy: &mut DialogueContext,
    expanded: &mut DialogueContext,
) -> (Verdict, String) {
    let original = match parse_sexp(&t.original) {
        Ok(e) => e,
        Err(e) => return (Verdict::Error("Parse".into()), format!("original: {e}")),
    };
    let simplified = match &t.simplified {
        Some(text) => match parse_pexp(text) {
            Ok(e) => e,
            Err(e) => return (Verdict::Error("Parse".into()), format!("simplified: {e}")),
        },
        None => match engine.simplify(&original) {
            Ok(e) => e,
            Err(e) => return (Verdict::Error("Rewrite".into()), e.to_string()),
        },
    };
    if let Some(head) = unregistered(&original, engine).or_else(|| unregistered(&simplified, engine)) {
        return (Verdict::Skipped, format!("{head} is not implemented"));
    }

    let a = engine.run_turn(legacy, &original, Mode::Legacy);
    let b = engine.run_turn(expanded, &simplified, Mode::Expand);
    let (a, b) = match (a, b) {
        (Ok(a), Ok(b)) => (a.outcome, b.outcome),
        (Err(e), _) => return (Verdict::Error(kind(&e).into()), format!("legacy: {e}")),
        (_, Err(e)) => return (Verdict::Error(kind(&e).into()), format!("expand: {e}")),
    };
    if legacy.db != expanded.db {
        return (Verdict::Differ, "database states differ".into());
    }
    match (a, b) {
        (Ok(x), Ok(y)) if x.equivalent(&y, &legacy.db) => (Verdict::Equal, x.render(&legacy.db)),
        (Ok(x), Ok(y)) => {
            (Verdict::Differ, format!("root values differ: {} vs {}", x.render(&legacy.db), y.render(&expanded.db)))
        }
        (Err(x), Err(y)) if x.kind == y.kind => (Verdict::Equal, format!("both raised {}", x.kind)),
        (x, y) => (Verdict::Differ, format!("outcomes differ: {} vs {}", describe(&x, legacy), describe(&y, expanded))),
    }
}

fn describe(r: &Result<crate::value::Value, crate::exec::EngineException>, ctx: &DialogueContext) -> String {
    match r {
        Ok(v) => v.render(&ctx.db),
        Err(e) => format!("raised {}", e.kind),
    }
}

fn unregistered<'e>(e: &'e ExprNode, engine: &Engine) -> Option<&'e str> {
    e.call_heads().into_iter().find(|h| engine.registry().get(h).is_none())
}

fn kind(e: &EngineError) -> &'static str {
    match e {
        EngineError::Rules(_) => "Rules",
        EngineError::Rewrite(_) => "Rewrite",
        EngineError::Coerce(_) => "Coerce",
        EngineError::Build(_) => "Build",
        EngineError::Exec(_) => "Exec",
        EngineError::NotAConstraint(_) | EngineError::Raised(_) => "Constraint",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::default_clock;

    fn turn(dialogue: &str, i: usize, original: &str, simplified: &str) -> DatasetTurn {
        DatasetTurn {
            dialogue_id: dialogue.into(),
            turn_index: i,
            utterance: String::new(),
            original: original.into(),
            simplified: Some(simplified.into()),
        }
    }

    fn check(turns: &[DatasetTurn]) -> EquivalenceReport {
        execution_equivalence(turns, &Engine::standard(), &StubDb::fixture(), default_clock())
    }

    const LUNCH: &str =
        r#"(Yield (QueryEventResponse.results (FindEventWrapperWithDefaults (Event.subject_ (EqualTo "Lunch")))))"#;

    #[test]
    fn equal_pair() {
        let r = check(&[turn("d", 0, LUNCH, "FindEvents(with_subject(\"Lunch\"))")]);
        assert_eq!(r.verdicts[0].verdict, Verdict::Equal, "{:?}", r.verdicts[0]);
        assert_eq!(r.match_rate(), 1.0);
    }

    #[test]
    fn dropped_constraint_differs() {
        let r = check(&[turn("d", 0, LUNCH, "FindEvents(starts_at(Today()))")]);
        assert_eq!(r.verdicts[0].verdict, Verdict::Differ);
        assert_eq!(r.match_rate(), 0.0);
    }

    #[test]
    fn unknown_functions_are_skipped() {
        let r = check(&[turn("d", 0, "(Weather (Today))", "Weather(Today())")]);
        assert_eq!(r.verdicts[0].verdict, Verdict::Skipped);
        assert_eq!(r.executable(), 0);
        assert_eq!(r.match_rate(), 1.0);
    }

    #[test]
    fn errors_do_not_stop_the_batch() {
        let r = check(&[
            turn("d", 0, "(Yield", "x"),
            turn("d", 1, "(DeleteEvent \"x\")", "DeleteEvent(\"x\")"),
            turn("e", 0, LUNCH, "FindEvents(with_subject(\"Lunch\"))"),
        ]);
        assert_eq!(r.verdicts[0].verdict, Verdict::Error("Parse".into()));
        assert!(matches!(r.verdicts[1].verdict, Verdict::Error(_)));
        assert_eq!(r.verdicts[2].verdict, Verdict::Equal);
        let line = r.to_jsonl().lines().next().unwrap().to_string();
        assert!(line.starts_with(r#"{"turn_id":"d/0","verdict":"error(Parse)""#), "{line}");
    }

    #[test]
    fn deterministic() {
        let turns = [turn("d", 0, LUNCH, "FindEvents(with_subject(\"Lunch\"))")];
        assert_eq!(check(&turns), check(&turns));
    }
}

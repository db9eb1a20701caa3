//! refer against a brute-force newest-first oracle, revise locality and
//! duplicate/diff identity over randomly built dialogues.

use chrono::NaiveDate;
use proptest::prelude::*;

use dataflow_dialogue::calendar::StubDb;
use dataflow_dialogue::engine::{Engine, Mode};
use dataflow_dialogue::exec::{refer_in_graph, ExceptionKind, ReviseMode};
use dataflow_dialogue::graph::{duplicate_subgraph, graph_diff, DialogueContext, NodeId};
use dataflow_dialogue::syntax::parse_pexp;
use dataflow_dialogue::value::Value;

const SUBJECTS: [&str; 5] = ["Standup", "Budget review", "Project sync", "Lunch", "Planning"];
const NAMES: [&str; 6] = ["Carol", "Dana", "John", "Emily", "Bob", "Frank"];

fn date_expr(k: usize) -> String {
    match k {
        0 => "Today()".into(),
        1 => "Tomorrow()".into(),
        k => format!("add_days(Today(), {k})"),
    }
}

fn date_of(k: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2022, 1, 1).unwrap() + chrono::Days::new(k as u64)
}

/// One turn of a random dialogue.
fn turn_strategy() -> impl Strategy<Value = String> {
    prop_oneof![
        (0..SUBJECTS.len()).prop_map(|i| format!("singleton(FindEvents(with_subject(\"{}\")))", SUBJECTS[i])),
        (0..6usize).prop_map(|k| format!("FindEvents(starts_at({}))", date_expr(k))),
        (0..NAMES.len()).prop_map(|i| format!("FindEvents(with_attendee({}))", NAMES[i])),
        (0..NAMES.len()).prop_map(|i| format!("FindPerson({})", NAMES[i])),
        (0..NAMES.len()).prop_map(|i| format!("FindManager({})", NAMES[i])),
        (0..6usize).prop_map(date_expr),
        (0..SUBJECTS.len()).prop_map(|i| format!("Event.subject(singleton(FindEvents(with_subject(\"{}\"))))", SUBJECTS[i])),
    ]
}

/// A constraint to refer with, kept symbolic so the oracle can judge
/// values straight from the database.
#[derive(Debug, Clone)]
enum Spec {
    AnyEvent,
    AnyPerson,
    AnyDate,
    Subject(usize),
    Attendee(usize),
    StartsOn(usize),
}

impl Spec {
    fn expr(&self) -> String {
        match self {
            Spec::AnyEvent => "type_constraint(Event)".into(),
            Spec::AnyPerson => "type_constraint(Person)".into(),
            Spec::AnyDate => "type_constraint(Date)".into(),
            Spec::Subject(i) => format!("with_subject(\"{}\")", SUBJECTS[*i].to_lowercase()),
            Spec::Attendee(i) => format!("with_attendee({})", NAMES[*i]),
            Spec::StartsOn(k) => format!("starts_at({})", date_expr(*k)),
        }
    }

    fn accepts(&self, v: &Value, db: &StubDb) -> bool {
        let event = |id: &u64| db.event(*id);
        match (self, v) {
            (Spec::AnyEvent, Value::Event(_)) | (Spec::AnyPerson, Value::Person(_)) | (Spec::AnyDate, Value::Date(_)) => {
                true
            }
            (Spec::Subject(i), Value::Event(id)) => event(id).is_some_and(|e| e.subject == SUBJECTS[*i]),
            (Spec::Attendee(i), Value::Event(id)) => event(id).is_some_and(|e| {
                e.attendees.iter().any(|p| db.person(*p).is_some_and(|p| p.name == NAMES[*i]))
            }),
            (Spec::StartsOn(k), Value::Event(id)) => event(id).is_some_and(|e| e.start.date() == date_of(*k)),
            _ => false,
        }
    }

    fn db_candidates(&self, db: &StubDb) -> Vec<Value> {
        let events = db.events().map(|e| Value::Event(e.id));
        let persons = db.persons().map(|p| Value::Person(p.id));
        events.chain(persons).filter(|v| self.accepts(v, db)).collect()
    }
}

fn spec_strategy() -> impl Strategy<Value = Spec> {
    prop_oneof![
        Just(Spec::AnyEvent),
        Just(Spec::AnyPerson),
        Just(Spec::AnyDate),
        (0..SUBJECTS.len()).prop_map(Spec::Subject),
        (0..NAMES.len()).prop_map(Spec::Attendee),
        (0..6usize).prop_map(Spec::StartsOn),
    ]
}

fn dialogue(engine: &Engine, turns: &[String]) -> DialogueContext {
    let mut ctx = engine.context(StubDb::fixture());
    for t in turns {
        engine.run_turn(&mut ctx, &parse_pexp(t).unwrap(), Mode::Expand).unwrap();
    }
    ctx
}

/// Newest turn first, then newest node first; first evaluated match wins.
fn oracle(spec: &Spec, ctx: &DialogueContext) -> Option<NodeId> {
    let last = ctx.nodes.values().map(|n| n.turn_index).max()?;
    for turn in (0..=last).rev() {
        let mut ids: Vec<NodeId> = ctx.nodes.values().filter(|n| n.turn_index == turn).map(|n| n.id).collect();
        ids.sort_by_key(|id| std::cmp::Reverse(id.0));
        for id in ids {
            if ctx.nodes[&id].result.as_ref().is_some_and(|v| spec.accepts(v, &ctx.db)) {
                return Some(id);
            }
        }
    }
    None
}

/// Input-name path from `root` to `target`, as graph_diff spells it.
fn path_to(root: NodeId, target: NodeId, ctx: &DialogueContext) -> Option<String> {
    if root == target {
        return Some("root".into());
    }
    ctx.nodes[&root]
        .inputs
        .iter()
        .find_map(|(name, child)| path_to(*child, target, ctx).map(|p| p.replacen("root", &format!("root/{name}"), 1)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn refer_matches_the_oracle(turns in prop::collection::vec(turn_strategy(), 0..5), spec in spec_strategy()) {
        let engine = Engine::standard();
        let ctx = dialogue(&engine, &turns);
        let c = engine.eval_constraint(&ctx, &parse_pexp(&spec.expr()).unwrap()).unwrap();
        let expected = oracle(&spec, &ctx);
        prop_assert_eq!(refer_in_graph(&c, &ctx), expected);

        // Full refer, with the database behind the dialogue.
        let mut after = ctx.clone();
        let e = parse_pexp(&format!("refer({})", spec.expr())).unwrap();
        let outcome = engine.run_turn(&mut after, &e, Mode::Expand).unwrap().outcome;
        match expected {
            Some(id) => prop_assert_eq!(outcome.ok(), ctx.nodes[&id].result.clone()),
            None => {
                let found = spec.db_candidates(&ctx.db);
                match found.len() {
                    0 => prop_assert_eq!(outcome.unwrap_err().kind, ExceptionKind::NoMatch),
                    1 => prop_assert_eq!(outcome.ok(), Some(found[0].clone())),
                    _ => prop_assert_eq!(outcome.unwrap_err().kind, ExceptionKind::MultipleMatches),
                }
            }
        }
    }

    #[test]
    fn duplicate_then_diff_is_empty(turns in prop::collection::vec(turn_strategy(), 1..5)) {
        let engine = Engine::standard();
        let mut ctx = dialogue(&engine, &turns);
        for root in ctx.turns.clone() {
            let copy = duplicate_subgraph(root, &mut ctx).unwrap();
            prop_assert!(graph_diff(root, copy, &ctx).unwrap().is_empty());
        }
    }

    #[test]
    fn revise_only_touches_the_replaced_subtree(
        prefix in prop::collection::vec(turn_strategy(), 0..4),
        day in 0..6usize,
        subject in prop::option::of(0..SUBJECTS.len()),
        new_day in 0..6usize,
    ) {
        let engine = Engine::standard();
        let query = match subject {
            Some(i) => format!("FindEvents(AND(with_subject(\"{}\"), starts_at({})))", SUBJECTS[i], date_expr(day)),
            None => format!("FindEvents(starts_at({}))", date_expr(day)),
        };
        let mut turns = prefix.clone();
        turns.push(query);
        let mut ctx = dialogue(&engine, &turns);

        let matched = oracle(&Spec::AnyDate, &ctx).expect("the query has a date");
        let source = ctx.turns[ctx.nodes[&matched].turn_index];
        let prefix_path = path_to(source, matched, &ctx).expect("matched node is in its turn");

        let new = format!("add_days(Today(), {new_day})");
        let old = parse_pexp("type_constraint(Date)").unwrap();
        let r = engine.revise(&mut ctx, &old, &parse_pexp(&new).unwrap(), ReviseMode::Replace).unwrap();
        prop_assert_eq!(ctx.turns.len(), turns.len() + 1);

        let diffs = graph_diff(source, r.root, &ctx).unwrap();
        prop_assert_eq!(diffs.is_empty(), date_expr(day) == new);
        for (path, _) in &diffs {
            prop_assert!(path.starts_with(&prefix_path), "{} outside {}", path, prefix_path);
        }

        // The revised query returns exactly the events on the new day.
        let Ok(Value::Set { items, .. }) = r.outcome else { panic!("query failed: {:?}", r.outcome) };
        let want: Vec<Value> = ctx
            .db
            .events()
            .filter(|e| e.start.date() == date_of(new_day) && subject.is_none_or(|i| e.subject == SUBJECTS[i]))
            .map(|e| Value::Event(e.id))
            .collect();
        prop_assert_eq!(items, want);
    }
}

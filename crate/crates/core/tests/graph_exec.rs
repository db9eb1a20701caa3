use std::collections::BTreeSet;

use proptest::prelude::*;

use dataflow_dialogue::engine::{Engine, Mode};
use dataflow_dialogue::exec::ExceptionKind;
use dataflow_dialogue::graph::{emit_dot, DialogueContext, DotOptions, NodeId, Origin};
use dataflow_dialogue::syntax::{parse_pexp, parse_sexp};
use dataflow_dialogue::value::{TypeTag, Value};

const EX1: &str = "DeleteEvent(AND(starts_at(Tomorrow()), with_attendee(FindManager(John))))";

/// Minimal DOT checker for the subset the emitter uses: graph attributes,
/// a default node statement, node statements with attribute lists and
/// edges between declared nodes. Returns the node ids and edge lines.
fn check_dot(text: &str) -> Result<(BTreeSet<String>, Vec<String>), String> {
    let body = text
        .strip_prefix("digraph G {\n")
        .and_then(|s| s.strip_suffix("}\n"))
        .ok_or("not a `digraph G { ... }` block")?;
    let mut nodes = BTreeSet::new();
    let mut edges = Vec::new();
    for line in body.lines() {
        let stmt = line.trim().strip_suffix(';').ok_or_else(|| format!("missing ';': {line}"))?;
        let (head, attrs) = match stmt.find(" [") {
            Some(i) => (&stmt[..i], Some(&stmt[i + 2..])),
            None => (stmt, None),
        };
        if let Some(attrs) = attrs {
            check_attrs(attrs.strip_suffix(']').ok_or_else(|| format!("unclosed attributes: {line}"))?)?;
        }
        if let Some((a, b)) = head.split_once(" -> ") {
            for end in [a, b] {
                if !nodes.contains(end) {
                    return Err(format!("edge to undeclared node {end}"));
                }
            }
            edges.push(line.trim().to_string());
        } else if head == "node" {
            attrs.ok_or("bare `node`")?;
        } else if let Some((k, v)) = head.split_once('=') {
            if attrs.is_some() || !is_id(k) || !is_id(v) {
                return Err(format!("bad graph attribute: {line}"));
            }
        } else if is_id(head) && attrs.is_some() {
            nodes.insert(head.to_string());
        } else {
            return Err(format!("unrecognized statement: {line}"));
        }
    }
    Ok((nodes, edges))
}

fn is_id(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// `k=v, k="quoted"` with escapes checked character by character.
fn check_attrs(s: &str) -> Result<(), String> {
    let mut chars = s.chars().peekable();
    loop {
        let key: String = std::iter::from_fn(|| chars.next_if(|c| *c != '=')).collect();
        if !is_id(key.trim()) || chars.next() != Some('=') {
            return Err(format!("bad attribute key in [{s}]"));
        }
        if chars.peek() == Some(&'"') {
            chars.next();
            loop {
                match chars.next() {
                    Some('\\') => match chars.next() {
                        Some('"' | '\\' | 'n') => {}
                        other => return Err(format!("bad escape {other:?} in [{s}]")),
                    },
                    Some('"') => break,
                    Some('\n') | None => return Err(format!("unterminated string in [{s}]")),
                    Some(_) => {}
                }
            }
        } else {
            let v: String = std::iter::from_fn(|| chars.next_if(|c| *c != ',')).collect();
            if !is_id(v.trim()) {
                return Err(format!("bad bare value {v:?} in [{s}]"));
            }
        }
        match chars.next() {
            None => return Ok(()),
            Some(',') => {
                chars.next_if_eq(&' ');
            }
            Some(c) => return Err(format!("unexpected {c:?} in [{s}]")),
        }
    }
}

fn run(ctx: &mut DialogueContext, e: &str) -> (NodeId, Result<Value, dataflow_dialogue::exec::EngineException>) {
    let r = Engine::standard().run_turn(ctx, &parse_pexp(e).unwrap(), Mode::Expand).unwrap();
    (r.root, r.outcome)
}

#[test]
fn example_one_dot_is_well_formed_and_coloured() {
    let mut ctx = DialogueContext::fixture();
    let (root, outcome) = run(&mut ctx, EX1);
    outcome.unwrap();
    let dot = emit_dot(root, &ctx, DotOptions::default()).unwrap();
    let (nodes, edges) = check_dot(&dot).unwrap();
    for colour in ["gray", "yellow", "green"] {
        assert!(dot.contains(&format!("fillcolor=\"{colour}\"")), "{colour}");
    }
    let result_edges: Vec<_> = edges.iter().filter(|e| e.ends_with("[color=blue, style=dashed];")).collect();
    assert_eq!(result_edges.len(), 3);
    assert_eq!(nodes.len(), ctx.post_order(root).unwrap().len() + 3);

    let hidden = emit_dot(root, &ctx, DotOptions { hide_results: true }).unwrap();
    let (_, edges) = check_dot(&hidden).unwrap();
    assert!(edges.iter().all(|e| !e.contains("dashed")));
    assert!(!hidden.contains("green"));
}

#[test]
fn the_checker_rejects_broken_dot() {
    assert!(check_dot("digraph G {\n  n1 [label=\"a\"];\n  n1 -> n2;\n}\n").is_err());
    assert!(check_dot("digraph G {\n  n1 [label=\"a];\n}\n").is_err());
    assert!(check_dot("digraph G {\n  n1 [label=\"a\"]\n}\n").is_err());
    assert!(check_dot("digraph G {\n  n1 [label=\"a\\q\"];\n}\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // Labels carry arbitrary text, so escaping is what is under test.
    #[test]
    fn dot_is_well_formed_for_any_subject(subject in "[ -~éü\\n\\t]{0,20}") {
        let mut ctx = DialogueContext::fixture();
        let e = format!("with_subject({})", serde_json::to_string(&subject).unwrap());
        let (root, _) = run(&mut ctx, &e);
        let dot = emit_dot(root, &ctx, DotOptions::default()).unwrap();
        prop_assert!(check_dot(&dot).is_ok(), "{:?}\n{}", check_dot(&dot), dot);
    }
}

/// Function names of expansion nodes in the turn under `root`.
fn inserted(ctx: &DialogueContext, root: NodeId) -> Vec<String> {
    let mut v: Vec<String> = ctx
        .post_order(root)
        .unwrap()
        .into_iter()
        .filter(|id| ctx.nodes[id].origin == Origin::Expansion)
        .map(|id| ctx.nodes[&id].func.clone())
        .collect();
    v.sort();
    v
}

#[test]
fn delete_event_expansion_inserts_only_what_the_type_needs() {
    let cases = [
        ("DeleteEvent(FindEvents(with_subject(\"Lunch\")))", vec!["Event.id", "singleton"]),
        ("DeleteEvent(singleton(FindEvents(with_subject(\"Lunch\"))))", vec!["Event.id"]),
        ("DeleteEvent(4)", vec![]),
    ];
    for (e, want) in cases {
        let mut ctx = DialogueContext::fixture();
        let (root, outcome) = run(&mut ctx, e);
        outcome.unwrap();
        assert_eq!(inserted(&ctx, root), want, "{e}");
        assert!(ctx.db.event(4).is_none());
    }
}

#[test]
fn legacy_mode_inserts_nothing() {
    let mut ctx = DialogueContext::fixture();
    let e = parse_sexp("(DeleteEvent 4)").unwrap();
    let r = Engine::standard().run_turn(&mut ctx, &e, Mode::Legacy).unwrap();
    assert!(inserted(&ctx, r.root).is_empty());
}

#[test]
fn snapshot_round_trip_and_continue() {
    let mut ctx = DialogueContext::fixture();
    run(&mut ctx, "singleton(FindEvents(with_subject(\"Lunch\")))").1.unwrap();
    run(&mut ctx, "CreateEvent(starts_at_time(at(Tomorrow(), 4, pm=true)))").1.unwrap_err();
    let doc = ctx.to_snapshot().to_string();
    let mut restored = DialogueContext::from_snapshot(&doc, Engine::standard().registry().clone()).unwrap();
    assert_eq!(restored.to_snapshot().to_string(), doc);
    assert_eq!(restored.exceptions, ctx.exceptions);

    let engine = Engine::standard();
    let answer = parse_pexp("\"Retro\"").unwrap();
    let a = engine.resume(&mut ctx, &answer, Mode::Expand).unwrap();
    let b = engine.resume(&mut restored, &answer, Mode::Expand).unwrap();
    assert_eq!(a.outcome, b.outcome);
    assert_eq!(ctx.db, restored.db);
    let (_, x) = run(&mut ctx, "Event.subject(refer(Event))");
    let (_, y) = run(&mut restored, "Event.subject(refer(Event))");
    assert_eq!(x, y);
    assert_eq!(x.unwrap(), Value::Text("Retro".into()));
}

#[test]
fn exceptions_leave_the_database_untouched() {
    let mut ctx = DialogueContext::fixture();
    run(&mut ctx, "DeleteEvent(with_subject(\"Standup\"))").1.unwrap();
    let before = ctx.db.to_json().to_string();
    let messages = ctx.messages.clone();

    // The delete runs before CreateEvent raises, and must be undone.
    let (root, outcome) = run(&mut ctx, "do(DeleteEvent(with_subject(\"Lunch\")), CreateEvent(with_subject(\"x\")))");
    let exc = outcome.unwrap_err();
    assert_eq!(exc.kind, ExceptionKind::MissingValue);
    assert!(!exc.prompt.is_empty());
    assert_eq!(ctx.db.to_json().to_string(), before);
    assert_eq!(ctx.messages[..messages.len()], messages[..]);
    assert_eq!(ctx.messages.last(), Some(&exc.prompt));
    assert!(ctx.post_order(root).unwrap().iter().all(|id| ctx.nodes[id].result.is_none()));
}

/// Constraint expressions over events, depth-limited.
fn constraint() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["Standup", "Lunch", "Planning", "Offsite"])
            .prop_map(|s| format!("with_subject(\"{s}\")")),
        prop::sample::select(vec!["Carol", "Dana", "John", "Emily", "Bob", "Frank"])
            .prop_map(|p| format!("with_attendee({p})")),
        (0..6u32).prop_map(|k| format!("starts_at(add_days(Today(), {k}))")),
        Just("type_constraint(Event)".to_string()),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("AND({a}, {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("OR({a}, {b})")),
            inner.prop_map(|a| format!("NOT({a})")),
        ]
    })
}

fn extension(engine: &Engine, ctx: &DialogueContext, e: &str) -> BTreeSet<u64> {
    let c = engine.eval_constraint(ctx, &parse_pexp(e).unwrap()).unwrap();
    assert_eq!(c.target, TypeTag::Event);
    ctx.db.events().filter(|ev| c.holds(&Value::Event(ev.id), &ctx.db)).map(|ev| ev.id).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn de_morgan_by_extension(a in constraint(), b in constraint()) {
        let engine = Engine::standard();
        let ctx = DialogueContext::fixture();
        let all: BTreeSet<u64> = ctx.db.events().map(|e| e.id).collect();
        let (ea, eb) = (extension(&engine, &ctx, &a), extension(&engine, &ctx, &b));

        let lhs = extension(&engine, &ctx, &format!("NOT(AND({a}, {b}))"));
        let rhs = extension(&engine, &ctx, &format!("OR(NOT({a}), NOT({b}))"));
        let set_oracle: BTreeSet<u64> = all.difference(&ea.intersection(&eb).copied().collect()).copied().collect();
        prop_assert_eq!(&lhs, &rhs);
        prop_assert_eq!(&lhs, &set_oracle);

        let lhs = extension(&engine, &ctx, &format!("NOT(OR({a}, {b}))"));
        let rhs = extension(&engine, &ctx, &format!("AND(NOT({a}), NOT({b}))"));
        prop_assert_eq!(lhs, rhs);
    }
}

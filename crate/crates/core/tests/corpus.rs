use dataflow_dialogue::calendar::StubDb;
use dataflow_dialogue::dataset::{
    execution_equivalence, length_quantiles, load_jsonl, simplify_dataset, token_length, Style, Verdict,
};
use dataflow_dialogue::engine::Engine;
use dataflow_dialogue::graph::default_clock;
use dataflow_dialogue::syntax::{parse_pexp, print_pexp};

const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/corpus/mini_corpus.jsonl");
const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/corpus/mini_corpus.golden.jsonl");
const NEGATIVE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/corpus/negative_control.jsonl");

#[test]
fn corpus_has_25_turns() {
    assert_eq!(load_jsonl(CORPUS).unwrap().len(), 25);
}

#[test]
fn simplification_matches_golden() {
    let engine = Engine::standard();
    let report = simplify_dataset(&load_jsonl(CORPUS).unwrap(), engine.simplify_rules(), engine.registry().as_ref());
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    let golden = load_jsonl(GOLDEN).unwrap();
    let mismatches: Vec<_> = report
        .turns
        .iter()
        .zip(&golden)
        .filter(|(a, b)| a.simplified != b.simplified)
        .map(|(a, b)| format!("{}\n  got  {:?}\n  want {:?}", a.turn_id(), a.simplified, b.simplified))
        .collect();
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}

#[test]
fn simplified_forms_are_fixpoints() {
    let engine = Engine::standard();
    for t in load_jsonl(GOLDEN).unwrap() {
        let text = t.simplified.unwrap();
        let again = engine.simplify(&parse_pexp(&text).unwrap()).unwrap();
        assert_eq!(print_pexp(&again), text);
    }
}

#[test]
fn no_turn_gets_longer() {
    for t in load_jsonl(GOLDEN).unwrap() {
        assert!(token_length(&t, Style::Simplified).unwrap() <= token_length(&t, Style::Original).unwrap());
    }
}

#[test]
fn quantiles_shrink() {
    let turns = load_jsonl(GOLDEN).unwrap();
    let qs = [0.25, 0.5, 0.75];
    let a = length_quantiles(&turns, Style::Original, &qs).unwrap();
    let b = length_quantiles(&turns, Style::Simplified, &qs).unwrap();
    for q in qs {
        assert!(b.get(q).unwrap() < a.get(q).unwrap());
    }
}

#[test]
fn pipelines_agree_on_the_corpus() {
    let turns = load_jsonl(GOLDEN).unwrap();
    let report = execution_equivalence(&turns, &Engine::standard(), &StubDb::fixture(), default_clock());
    let bad: Vec<_> = report
        .verdicts
        .iter()
        .filter(|v| !matches!(v.verdict, Verdict::Equal | Verdict::Skipped))
        .map(|v| format!("{} {} {}", v.turn_id, v.verdict, v.detail))
        .collect();
    assert!(bad.is_empty(), "{}", bad.join("\n"));
    assert_eq!(report.match_rate(), 1.0);
    assert_eq!(report.count(|v| *v == Verdict::Skipped), 1);
}

#[test]
fn negative_control_differs() {
    let turns = load_jsonl(NEGATIVE).unwrap();
    let report = execution_equivalence(&turns, &Engine::standard(), &StubDb::fixture(), default_clock());
    assert_eq!(report.verdicts[0].verdict, Verdict::Differ);
}

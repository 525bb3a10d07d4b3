use marl_shaping::automaton::Ldba;
use marl_shaping::fixtures::AUTOMATA;
use marl_shaping::hoa::{parse_hoa, serialize_hoa, Guard, HoaDocument, LabelSet};
use proptest::prelude::*;

#[test]
fn fixtures_are_in_canonical_form() {
    for (name, text) in AUTOMATA {
        let doc = parse_hoa(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(serialize_hoa(&doc), text, "{name} is not byte-identical after a round trip");
    }
}

#[test]
fn reparse_is_identity() {
    for (name, text) in AUTOMATA {
        let doc = parse_hoa(text).unwrap();
        let again = parse_hoa(&serialize_hoa(&doc)).unwrap();
        assert_eq!(doc, again, "{name}");
    }
}

#[test]
fn fixture_counts() {
    let count = |text: &str| {
        let l = Ldba::load(&parse_hoa(text).unwrap()).unwrap();
        (l.state_count(), l.accepting_transition_count())
    };
    let by_name = |n: &str| AUTOMATA.iter().find(|(f, _)| *f == n).unwrap().1;
    assert_eq!(count(by_name("rendezvous.hoa")), (7, 5));
    assert_eq!(count(by_name("flags.hoa")), (7, 6));
    assert_eq!(count(by_name("motivating_phi3.hoa")).1, 1);
    assert!(count(by_name("motivating_phi3prime.hoa")).1 > 1);
}

/// Reference semantics, written against the AST without using `Guard::eval`.
fn truth(g: &Guard, v: &[bool]) -> bool {
    match g {
        Guard::True => true,
        Guard::False => false,
        Guard::Ap(i) => v[*i],
        Guard::Not(x) => !truth(x, v),
        Guard::And(xs) => xs.iter().all(|x| truth(x, v)),
        Guard::Or(xs) => xs.iter().any(|x| truth(x, v)),
    }
}

fn guard(aps: usize) -> impl Strategy<Value = Guard> {
    let leaf = prop_oneof![
        Just(Guard::True),
        Just(Guard::False),
        (0..aps).prop_map(Guard::Ap),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|g| Guard::Not(Box::new(g))),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Guard::And),
            prop::collection::vec(inner, 2..4).prop_map(Guard::Or),
        ]
    })
}

fn wrap(g: &Guard, aps: usize) -> String {
    let names: Vec<String> = (0..aps).map(|i| format!("\"p{i}\"")).collect();
    format!(
        "HOA: v1\nStates: 1\nStart: 0\nAP: {aps} {}\nAcceptance: 1 Inf(0)\n--BODY--\nState: 0\n[{g}] 0\n--END--\n",
        names.join(" ")
    )
}

fn reparsed(g: &Guard, aps: usize) -> Guard {
    let doc: HoaDocument = parse_hoa(&wrap(g, aps)).unwrap();
    doc.states[0].edges[0].guard.clone()
}

proptest! {
    #[test]
    fn guard_eval_matches_truth_table((aps, g) in (1usize..=4).prop_flat_map(|n| (Just(n), guard(n)))) {
        let text_form = reparsed(&g, aps);
        for bits in 0u64..(1 << aps) {
            let v: Vec<bool> = (0..aps).map(|i| bits & (1 << i) != 0).collect();
            let expect = truth(&g, &v);
            prop_assert_eq!(g.eval(LabelSet(bits)), expect, "guard {} at {:04b}", g, bits);
            prop_assert_eq!(text_form.eval(LabelSet(bits)), expect, "printed guard {} at {:04b}", g, bits);
        }
    }

    #[test]
    fn printed_guards_are_stable(g in guard(4)) {
        let once = reparsed(&g, 4);
        let twice = reparsed(&once, 4);
        prop_assert_eq!(once.to_string(), twice.to_string());
    }
}

#[test]
fn fixtures_have_no_accepting_epsilon_moves() {
    for (name, text) in AUTOMATA {
        let l = Ldba::load(&parse_hoa(text).unwrap()).unwrap();
        assert!(l.states().iter().all(|s| s.epsilons.iter().all(|e| !e.accepting)), "{name}");
    }
}

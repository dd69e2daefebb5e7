use ggp_core::compiler::{
    build_reasoning_trees, build_trees_from, compile_plan, discover_overloads, dump_plan, Label,
    OverloadSignature,
};
use ggp_core::mgdl::{check_conformance, normalize, Verdict};
use ggp_core::{games, parse_kif, Error};

fn sig(rel: &str, labels: &str) -> OverloadSignature {
    OverloadSignature {
        relation: rel.to_string(),
        labels: labels
            .chars()
            .map(|c| if c == 'v' { Label::Var } else { Label::Const })
            .collect(),
    }
}

#[test]
fn tictactoe_trees() {
    let n = normalize(&parse_kif(games::TICTACTOE).unwrap()).unwrap();
    let f = build_reasoning_trees(&n).unwrap();
    let roots: Vec<&str> = f.roots.iter().map(|&r| f.nodes[r].rel.as_str()).collect();
    assert!(roots.iter().any(|r| r.starts_with("legal")));
    assert!(roots.iter().any(|r| r.starts_with("next")));
    assert!(roots.iter().any(|r| r.starts_with("goal")));
    assert!(roots.contains(&"terminal"));
    let term = f.node("terminal", 0).unwrap();
    let reach = f.reachable(term);
    for rel in ["line_ARG", "diagonal_ARG", "open", "row_ARG_ARG", "cell_ARG_ARG_ARG"] {
        assert!(reach.contains(rel), "{rel} not under terminal: {reach:?}");
    }
}

#[test]
fn undefined_relation() {
    let n = normalize(&parse_kif("(role r) (<= terminal (not open))").unwrap()).unwrap();
    match build_reasoning_trees(&n) {
        Err(Error::Undefined(m)) => assert!(m.contains("open")),
        other => panic!("expected undefined relation, got {other:?}"),
    }
}

#[test]
fn single_fact_depth_one() {
    let n = normalize(&parse_kif("(role r) (p a)").unwrap()).unwrap();
    let f = build_trees_from(&n, &[("p_ARG".to_string(), 0)]).unwrap();
    assert_eq!(f.depth(f.roots[0]), 1);
}

#[test]
fn tictactoe_cell_overloads() {
    let n = normalize(&parse_kif(games::TICTACTOE).unwrap()).unwrap();
    let sigs = discover_overloads(&build_reasoning_trees(&n).unwrap());
    for l in ["vvv", "vcc", "cvc", "ccc"] {
        assert!(sigs.contains(&sig("cell_ARG_ARG_ARG", l)), "missing {l}");
    }
}

#[test]
fn unbound_caller_gets_var_label() {
    let text = "(role r) (goal r 50) (<= (half ?p) (goal ?p 50))";
    let n = normalize(&parse_kif(text).unwrap()).unwrap();
    let f = build_trees_from(&n, &[("half_ARG".to_string(), 0)]).unwrap();
    let sigs = discover_overloads(&f);
    assert!(sigs.contains(&sig("goal_ARG_ARG", "vc")));
}

#[test]
fn constant_only_calls_give_one_signature() {
    let text = "(role r) (p a b) (<= (q ?x) (p a b) (p a b) (r ?x)) (r c)";
    let n = normalize(&parse_kif(text).unwrap()).unwrap();
    let f = build_trees_from(&n, &[("q_ARG".to_string(), 0)]).unwrap();
    let p: Vec<_> = discover_overloads(&f)
        .into_iter()
        .filter(|s| s.relation == "p_ARG_ARG")
        .collect();
    assert_eq!(p, vec![sig("p_ARG_ARG", "cc")]);
}

#[test]
fn plans_are_closed_and_deterministic() {
    for (name, text) in games::ALL {
        let n = normalize(&parse_kif(text).unwrap()).unwrap();
        let a = compile_plan(&n).unwrap();
        assert!(a.plan.check_closure(), "{name}");
        let b = compile_plan(&n).unwrap();
        assert_eq!(dump_plan(&a), dump_plan(&b), "{name}");
    }
}

#[test]
fn facts_only_sheet_has_no_rule_procs() {
    let n = normalize(&parse_kif("(role r) (p a) (p b)").unwrap()).unwrap();
    let c = compile_plan(&n).unwrap();
    assert!(c.forest.nodes.iter().all(|t| !matches!(
        t.kind,
        ggp_core::compiler::NodeKind::Rules(_)
    )));
}

#[test]
fn bundled_conformance() {
    for (name, text) in games::ALL {
        let r = check_conformance(&parse_kif(text).unwrap());
        assert_eq!(r.verdict, Verdict::Conforming, "{name}");
        assert!(r.witnesses.is_empty());
    }
    let w = check_conformance(&parse_kif("(<= (foo (bar a))) (<= (baz ?x) (foo ?x))").unwrap());
    assert_eq!(w.verdict, Verdict::Inconclusive);
    assert_eq!(w.witnesses.len(), 1);
}

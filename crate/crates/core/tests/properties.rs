use std::collections::BTreeSet;

use ggp_core::board::extract_board_pieces;
use ggp_core::engine::Engine;
use ggp_core::mgdl::{check_conformance, mangle, unmangle, Verdict};
use ggp_core::store::FactStore;
use ggp_core::{games, parse_kif, Backend, CompiledGame, Term};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ground_term() -> impl Strategy<Value = Term> {
    let leaf = prop::sample::select(vec!["a", "b", "c", "1", "2"]).prop_map(Term::constant);
    leaf.prop_recursive(3, 12, 3, |inner| {
        (prop::sample::select(vec!["f", "g"]), prop::collection::vec(inner, 1..3))
            .prop_map(|(f, a)| Term::compound(f, a))
    })
}

fn sentence() -> impl Strategy<Value = Term> {
    (prop::sample::select(vec!["p", "q"]), prop::collection::vec(ground_term(), 1..4))
        .prop_map(|(f, a)| Term::compound(f, a))
}

fn shape(t: &Term) -> String {
    match t {
        Term::Compound(f, a) => {
            format!("{f}({})", a.iter().map(shape).collect::<Vec<_>>().join(","))
        }
        _ => "_".to_string(),
    }
}

fn atom(vars: bool) -> impl Strategy<Value = String> {
    let arg = if vars {
        prop::sample::select(vec!["?x", "?y", "a", "b", "(f ?x)", "(f a)"]).boxed()
    } else {
        prop::sample::select(vec!["a", "b", "(f a)", "(g b c)"]).boxed()
    };
    (prop::sample::select(vec!["p", "q", "r"]), prop::collection::vec(arg, 0..3)).prop_map(|(f, a)| {
        if a.is_empty() {
            f.to_string()
        } else {
            format!("({f}{}{})", a.len(), a.iter().map(|x| format!(" {x}")).collect::<String>())
        }
    })
}

fn rule() -> impl Strategy<Value = String> {
    (atom(true), prop::collection::vec((any::<bool>(), atom(true)), 1..4)).prop_map(|(h, body)| {
        let lits: Vec<String> = body
            .into_iter()
            .enumerate()
            .map(|(i, (neg, a))| if neg && i > 0 { format!("(not {a})") } else { a })
            .collect();
        format!("(<= {h} {})", lits.join(" "))
    })
}

fn sheet_text() -> impl Strategy<Value = String> {
    (prop::collection::vec(atom(false), 0..4), prop::collection::vec(rule(), 0..4))
        .prop_map(|(f, r)| format!("(role w) {} {}", f.join(" "), r.join(" ")))
}

proptest! {
    #[test]
    fn mangle_shape_injective(a in sentence(), b in sentence()) {
        let (na, _) = mangle(&a);
        let (nb, _) = mangle(&b);
        prop_assert_eq!(na.name == nb.name, shape(&a) == shape(&b));
    }

    #[test]
    fn unmangle_inverts_mangle(t in sentence()) {
        let (n, args) = mangle(&t);
        prop_assert_eq!(args.len(), n.flat_arity);
        prop_assert_eq!(unmangle(&n.name, &args), Some(t));
    }

    #[test]
    fn parse_print_round_trip(text in sheet_text()) {
        if let Ok(s) = parse_kif(&text) {
            let again = parse_kif(&s.to_string()).unwrap();
            prop_assert_eq!(again, s);
        }
    }

    #[test]
    fn conformance_monotone_under_facts(text in sheet_text(), extra in prop::collection::vec(atom(false), 1..4)) {
        let Ok(s) = parse_kif(&text) else { return Ok(()) };
        prop_assume!(check_conformance(&s).verdict == Verdict::Conforming);
        if let Ok(bigger) = parse_kif(&format!("{text} {}", extra.join(" "))) {
            prop_assert_eq!(check_conformance(&bigger).verdict, Verdict::Conforming);
        }
    }

    #[test]
    fn extraction_total(seed in any::<u64>()) {
        let g = CompiledGame::from_kif(games::CONNECTFOUR_EXT, Backend::QueryDriven).unwrap();
        let spec = g.board().unwrap().clone();
        let mut e = Engine::new(std::sync::Arc::new(g));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = e.initial_state();
        for _ in 0..rng.gen_range(0..30) {
            if e.is_terminal(&s) { break; }
            let jm: Vec<_> = (0..2).map(|r| { let m = e.legal_moves(&s, r); m[rng.gen_range(0..m.len())].clone() }).collect();
            s = e.next_state(&s, &jm).unwrap();
        }
        let facts = e.game().state_terms(&s);
        let on_board = facts.iter().filter(|t| t.functor() == Some("cell")).count();
        prop_assert!(extract_board_pieces(&spec, &facts).unwrap().len() <= on_board);
    }
}

#[test]
fn fact_store_matches_sorted_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for arity in [0usize, 1, 3] {
        let mut store = FactStore::with_capacity(arity, 2);
        let mut oracle: BTreeSet<Vec<u32>> = BTreeSet::new();
        for step in 0..10_000 {
            let t: Vec<u32> = (0..arity).map(|_| rng.gen_range(0..12)).collect();
            match rng.gen_range(0..10) {
                0 if step % 7 == 0 => {
                    store.clear();
                    oracle.clear();
                }
                1..=5 => assert_eq!(store.insert(&t), oracle.insert(t)),
                _ => assert_eq!(store.contains(&t), oracle.contains(&t)),
            }
            assert_eq!(store.len(), oracle.len());
        }
        let mut got: Vec<Vec<u32>> = store.iter().map(|t| t.to_vec()).collect();
        got.sort();
        assert_eq!(got, oracle.into_iter().collect::<Vec<_>>());
    }
}

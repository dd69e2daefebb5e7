use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

use ggp_core::engine::{bench_n_playouts, Engine};
use ggp_core::mgdl::normalize;
use ggp_core::reference::{flat_sheet, Reference};
use ggp_core::term::parse_term;
use ggp_core::{games, parse_kif, Backend, CompiledGame, GameState, Term};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn game(text: &str, b: Backend) -> Arc<CompiledGame> {
    Arc::new(CompiledGame::from_kif(text, b).unwrap())
}

fn term_set(g: &CompiledGame, s: &GameState) -> BTreeSet<Term> {
    g.state_terms(s).into_iter().collect()
}

/// Steps the compiled engine and the reference interpreter side by side.
fn check_against_reference(text: &str, playouts: usize, seed: u64) {
    let sheet = parse_kif(text).unwrap();
    let r = Reference::new(&sheet);
    let g = game(text, Backend::QueryDriven);
    let mut e = Engine::new(g.clone());
    let roles = sheet.roles.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..playouts {
        let mut s = e.initial_state();
        let mut rs = r.init.clone();
        assert_eq!(term_set(&g, &s), rs);
        loop {
            let term = e.is_terminal(&s);
            assert_eq!(term, r.terminal(&rs));
            for (i, role) in roles.iter().enumerate() {
                assert_eq!(e.goal(&s, i).unwrap(), r.goal(&rs, role), "goal {role}");
            }
            if term {
                break;
            }
            let mut jm = Vec::new();
            let mut moves = Vec::new();
            for (i, role) in roles.iter().enumerate() {
                let ms = e.legal_moves(&s, i);
                let got: BTreeSet<Term> = ms.iter().map(|m| g.move_term(i, m)).collect();
                assert_eq!(got, r.legal(&rs, role), "legal {role}");
                let m = ms[rng.gen_range(0..ms.len())].clone();
                moves.push((role.clone(), g.move_term(i, &m)));
                jm.push(m);
            }
            s = e.next_state(&s, &jm).unwrap();
            rs = r.next(&rs, &moves);
            assert_eq!(term_set(&g, &s), rs);
        }
    }
}

#[test]
fn tictactoe_matches_reference() {
    check_against_reference(games::TICTACTOE, 30, 1);
    check_against_reference(games::TICTACTOE_EXT, 30, 2);
}

#[test]
fn nim_matches_reference() {
    check_against_reference(games::NIM, 30, 3);
}

#[test]
fn connectfour_matches_reference() {
    check_against_reference(games::CONNECTFOUR, 2, 4);
    check_against_reference(games::CONNECTFOUR_EXT, 2, 5);
}

/// Normalized rules run through the reference must give the same
/// trajectories as the written rules.
fn check_normalization(text: &str, playouts: usize, seed: u64) {
    let sheet = parse_kif(text).unwrap();
    let n = normalize(&sheet).unwrap();
    let orig = Reference::new(&sheet);
    let flat = Reference::new(&flat_sheet(&n));
    let unflatten = |s: &BTreeSet<Term>| -> BTreeSet<Term> {
        s.iter()
            .map(|t| ggp_core::mgdl::unmangle(t.functor().unwrap(), t.args()).unwrap())
            .collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..playouts {
        let mut a = orig.init.clone();
        let mut b = flat.init.clone();
        loop {
            assert_eq!(unflatten(&b), a);
            let ta = orig.terminal(&a);
            assert_eq!(ta, flat.holds(&b, &[], &Term::constant("terminal")));
            if ta {
                break;
            }
            let mut moves = Vec::new();
            let mut flat_does = Vec::new();
            for role in sheet.roles.iter() {
                let ls: Vec<Term> = orig.legal(&a, role).into_iter().collect();
                let m = ls[rng.gen_range(0..ls.len())].clone();
                let mut flat_legal = BTreeSet::new();
                for rel in n.legal_relations() {
                    let arity = n.arities[rel];
                    let mut args = vec![Term::constant(role)];
                    args.extend((1..arity).map(|k| Term::Var(format!("a{k}"))));
                    for t in flat.ask(&b, &[], &Term::compound(rel, args)) {
                        flat_legal.insert(ggp_core::mgdl::unmangle(rel, t.args()).unwrap().args()[1].clone());
                    }
                }
                assert_eq!(flat_legal, orig.legal(&a, role));
                let does = Term::compound("does", vec![Term::constant(role), m.clone()]);
                let (dn, dargs) = ggp_core::mgdl::mangle(&does);
                flat_does.push(Term::compound("does", vec![Term::compound(&dn.name, dargs)]));
                moves.push((role.clone(), m));
            }
            let na = orig.next(&a, &moves);
            let nb: BTreeSet<Term> = flat
                .ask(&b, &flat_does, &Term::compound("next", vec![Term::var("x")]))
                .into_iter()
                .map(|t| t.args()[0].clone())
                .collect();
            a = na;
            b = nb;
        }
    }
}

#[test]
fn normalization_preserves_semantics() {
    check_normalization(games::TICTACTOE, 20, 7);
    check_normalization(games::NIM, 20, 8);
    check_normalization(games::CONNECTFOUR, 1, 9);
}

fn trajectories_agree(text: &str, playouts: usize, seed: u64) {
    let mut q = Engine::new(game(text, Backend::QueryDriven));
    let mut t = Engine::new(game(text, Backend::TableDriven));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = q.n_roles();
    for _ in 0..playouts {
        let mut s = q.initial_state();
        assert_eq!(s, t.initial_state());
        loop {
            let term = q.is_terminal(&s);
            assert_eq!(term, t.is_terminal(&s));
            assert_eq!(q.goals(&s), t.goals(&s));
            if term {
                break;
            }
            let mut jm = Vec::new();
            for r in 0..n {
                let ms = q.legal_moves(&s, r);
                assert_eq!(ms, t.legal_moves(&s, r));
                jm.push(ms[rng.gen_range(0..ms.len())].clone());
            }
            let a = q.next_state(&s, &jm).unwrap();
            assert_eq!(a, t.next_state(&s, &jm).unwrap());
            s = a;
        }
    }
}

#[test]
fn backends_agree() {
    trajectories_agree(games::TICTACTOE, 200, 11);
    trajectories_agree(games::NIM, 200, 12);
    trajectories_agree(games::CONNECTFOUR, 30, 13);
    trajectories_agree(games::CONNECTFOUR_EXT, 30, 14);
    trajectories_agree(games::TICTACTOE_EXT, 100, 15);
}

#[test]
fn tictactoe_opening() {
    for b in [Backend::QueryDriven, Backend::TableDriven] {
        let g = game(games::TICTACTOE, b);
        let mut e = Engine::new(g.clone());
        let s = e.initial_state();
        let x = e.legal_moves(&s, 0);
        assert_eq!(x.len(), 9);
        assert!(x.iter().all(|m| g.move_term(0, m).functor() == Some("mark")));
        let o = e.legal_moves(&s, 1);
        assert_eq!(o.len(), 1);
        assert_eq!(g.move_term(1, &o[0]), Term::constant("noop"));
        let jm = [
            g.parse_move(0, &parse_term("(mark 1 1)").unwrap()).unwrap(),
            g.parse_move(1, &Term::constant("noop")).unwrap(),
        ];
        let s2 = e.next_state(&s, &jm).unwrap();
        let facts = term_set(&g, &s2);
        assert!(facts.contains(&parse_term("(cell 1 1 x)").unwrap()));
        assert!(facts.contains(&parse_term("(control oplayer)").unwrap()));
        assert!(!e.is_terminal(&s2));
    }
}

#[test]
fn tictactoe_ext_opening() {
    let g = game(games::TICTACTOE_EXT, Backend::QueryDriven);
    let mut e = Engine::new(g.clone());
    let s = e.initial_state();
    let jm = [
        g.parse_move(0, &parse_term("(mark 1 1 x)").unwrap()).unwrap(),
        g.parse_move(1, &Term::constant("noop")).unwrap(),
    ];
    let s2 = e.next_state(&s, &jm).unwrap();
    let facts = term_set(&g, &s2);
    assert!(facts.contains(&parse_term("(cell 1 1 x)").unwrap()));
    assert!(facts.contains(&parse_term("(control oplayer)").unwrap()));
    assert!(!e.is_terminal(&s2));
}

#[test]
fn illegal_move_rejected() {
    let g = game(games::TICTACTOE, Backend::QueryDriven);
    let mut e = Engine::new(g.clone());
    let s = e.initial_state();
    let noop = g.parse_move(0, &Term::constant("noop")).unwrap();
    assert!(e.next_state(&s, &[noop.clone(), noop]).is_err());
    assert!(e.goal(&s, 5).is_err());
}

#[test]
fn nim_reaches_empty_heaps() {
    let g = game(games::NIM, Backend::QueryDriven);
    let mut e = Engine::new(g.clone());
    let s12 = e.initial_state();
    let heaps = |s: &GameState| -> Vec<String> {
        g.state_terms(s)
            .iter()
            .filter(|t| t.functor() == Some("heap"))
            .map(|t| t.to_string())
            .collect()
    };
    assert_eq!(heaps(&s12), vec!["(heap h1 1)", "(heap h2 2)"]);
    // breadth-first over joint moves
    let mut seen = HashSet::new();
    let mut frontier = vec![s12];
    let mut found = false;
    while let Some(s) = frontier.pop() {
        if !seen.insert(s.clone()) {
            continue;
        }
        if heaps(&s) == vec!["(heap h1 0)", "(heap h2 0)"] {
            assert!(e.is_terminal(&s));
            found = true;
            continue;
        }
        let a = e.legal_moves(&s, 0);
        let b = e.legal_moves(&s, 1);
        for x in &a {
            for y in &b {
                frontier.push(e.next_state(&s, &[x.clone(), y.clone()]).unwrap());
            }
        }
    }
    assert!(found);
}

const SIBLING: &str = "(role r) (child a p) (child b q) (married p q) \
    (<= (sibling ?x ?y) (child ?x ?px) (child ?y ?py) (married ?px ?py)) \
    (<= (legal r (ask ?x ?y)) (sibling ?x ?y)) (<= terminal (sibling a a))";

#[test]
fn sibling_query() {
    for b in [Backend::QueryDriven, Backend::TableDriven] {
        let g = game(SIBLING, b);
        let mut e = Engine::new(g.clone());
        let s = e.initial_state();
        let a = g.consts.id("a").unwrap();
        let bb = g.consts.id("b").unwrap();
        // rows of pi_{x,y}((child x child) join married)
        assert_eq!(e.query(&s, "sibling_ARG_ARG", 0, &[]).unwrap(), vec![vec![a, bb]]);
        assert_eq!(e.query(&s, "sibling_ARG_ARG", 0b11, &[bb, a]).unwrap(), Vec::<Vec<u32>>::new());
        assert_eq!(e.legal_moves(&s, 0).len(), 1);
    }
}

#[test]
fn all_constant_hit_is_one_empty_row() {
    for b in [Backend::QueryDriven, Backend::TableDriven] {
        let g = game(SIBLING, b);
        let mut e = Engine::new(g.clone());
        let s = e.initial_state();
        let (a, bb) = (g.consts.id("a").unwrap(), g.consts.id("b").unwrap());
        assert_eq!(e.query(&s, "sibling_ARG_ARG", 0b11, &[a, bb]).unwrap(), vec![Vec::<u32>::new()]);
    }
}

#[test]
fn empty_dynamic_store() {
    let text = "(role r) (<= (legal r (go ?x)) (true (cell ?x))) (<= (next (cell 1)) (does r noop)) (<= terminal (true (cell 1)))";
    for b in [Backend::QueryDriven, Backend::TableDriven] {
        let g = game(text, b);
        let mut e = Engine::new(g);
        let s = e.initial_state();
        assert!(e.legal_moves(&s, 0).is_empty());
        assert!(!e.is_terminal(&s));
    }
}

#[test]
fn fixed_seed_mean_length_replays() {
    let g = game(games::TICTACTOE, Backend::QueryDriven);
    let r = bench_n_playouts(g.clone(), Backend::QueryDriven, 200, 42);
    // replay with the same generator
    let mut e = Engine::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let init = e.initial_state();
    let total: usize = (0..200).map(|_| e.random_playout(&init, &mut rng).1).sum();
    assert_eq!(r.mean_length, total as f64 / 200.0);
}

#[test]
fn state_hash_sound() {
    let g = game(games::TICTACTOE, Backend::QueryDriven);
    let mut e = Engine::new(g.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // equal fact sets from different move orders hash equally
    let mut by_facts: HashMap<BTreeSet<Term>, u64> = HashMap::new();
    for _ in 0..300 {
        let mut s = e.initial_state();
        while !e.is_terminal(&s) {
            let jm: Vec<_> = (0..2)
                .map(|r| {
                    let ms = e.legal_moves(&s, r);
                    ms[rng.gen_range(0..ms.len())].clone()
                })
                .collect();
            s = e.next_state(&s, &jm).unwrap();
            let h = *by_facts.entry(term_set(&g, &s)).or_insert(s.hash64());
            assert_eq!(h, s.hash64());
        }
    }
}

fn second_hash(s: &GameState) -> u64 {
    let mut h = DefaultHasher::new();
    s.raw().hash(&mut h);
    h.finish()
}

#[test]
fn state_hash_collisions() {
    // 10^6 distinct states from tictactoe and connectfour playouts
    struct Seen {
        map: HashMap<u64, u64>,
        distinct: usize,
        collisions: usize,
    }
    impl Seen {
        fn record(&mut self, s: &GameState) {
            match self.map.get(&s.hash64()) {
                Some(&other) => {
                    if other != second_hash(s) {
                        self.collisions += 1;
                    }
                }
                None => {
                    self.map.insert(s.hash64(), second_hash(s));
                    self.distinct += 1;
                }
            }
        }
    }
    let mut seen = Seen { map: HashMap::new(), distinct: 0, collisions: 0 };
    for text in [games::TICTACTOE, games::CONNECTFOUR] {
        let mut e = Engine::new(game(text, Backend::QueryDriven));
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = e.n_roles();
        let target = if text == games::TICTACTOE { 5478 } else { 1_000_000 };
        let mut guard = 0;
        while seen.distinct < target && guard < 200_000 {
            guard += 1;
            let mut s = e.initial_state();
            seen.record(&s);
            while !e.is_terminal(&s) {
                let jm: Vec<_> = (0..n)
                    .map(|r| {
                        let ms = e.legal_moves(&s, r);
                        ms[rng.gen_range(0..ms.len())].clone()
                    })
                    .collect();
                s = e.next_state_unchecked(&s, &jm);
                seen.record(&s);
            }
        }
    }
    assert!(seen.distinct >= 1_000_000, "only {} states", seen.distinct);
    assert_eq!(seen.collisions, 0);
}

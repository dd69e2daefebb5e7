use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use ggp_core::engine::Engine;
use ggp_core::term::parse_term;
use ggp_core::{games, Backend, CompiledGame, GameState};
use ggp_knowledge::params::widening_limit;
use ggp_player::uct::ucb_select_with;
use ggp_player::{
    choose_edge, play_match, run_uct, ucb_select, Agent, Budget, Eviction, LinkedTT, RandomAgent, SearchConfig,
    Uct, UctAgent,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn game(text: &str) -> Arc<CompiledGame> {
    Arc::new(CompiledGame::from_kif(text, Backend::QueryDriven).unwrap())
}

#[test]
fn ucb_examples() {
    assert_eq!(ucb_select(&[0.3, 0.7], &[5, 5], 10, 0.0), Some(1));
    assert_eq!(ucb_select(&[0.5, 0.5], &[100, 1], 101, 1.0), Some(1));
    // bonuses from the formula
    let b0 = (101f64.ln() / 100.0).sqrt();
    let b1 = (101f64.ln() / 1.0).sqrt();
    assert!((b0 - 0.215).abs() < 1e-3 && (b1 - 2.148).abs() < 1e-3);
    assert_eq!(ucb_select(&[0.9, 0.0], &[1, 0], 1, 1.0), Some(1));
    assert_eq!(ucb_select(&[0.0, 0.0, 0.0], &[0, 0, 0], 0, 1.0), Some(0));
    assert_eq!(ucb_select(&[], &[], 0, 1.0), None);
}

#[test]
fn choose_edge_examples() {
    assert_eq!(choose_edge(&[50, 10], &[0.2, 0.9]), Some(0));
    assert_eq!(choose_edge(&[10, 10], &[0.2, 0.9]), Some(1));
    assert_eq!(choose_edge(&[10, 10], &[0.5, 0.5]), Some(0));
}

#[test]
fn widening_examples() {
    assert_eq!(widening_limit(0, 1.0, 0.5, 20), 1);
    assert_eq!(widening_limit(100, 1.0, 0.5, 20), 10);
    assert_eq!(widening_limit(10_000, 1.0, 0.5, 20), 20);
}

#[test]
fn widening_restricts_choice() {
    let v = [0.9, 0.1, 0.5];
    let n = [0, 0, 0];
    assert_eq!(ucb_select_with(&v, &n, 0, 1.0, None, Some(&[2])), Some(2));
}

proptest! {
    #[test]
    fn argmax_scale_invariant(
        stats in prop::collection::vec((0.0f64..1.0, 1u32..50), 1..8),
        c in 0.0f64..2.0,
        k in 0.1f64..100.0,
    ) {
        let v: Vec<f64> = stats.iter().map(|s| s.0).collect();
        let n: Vec<u32> = stats.iter().map(|s| s.1).collect();
        let n_p: u64 = n.iter().map(|&x| x as u64).sum();
        let scaled: Vec<f64> = v.iter().map(|x| x * k).collect();
        let a = ucb_select(&v, &n, n_p, c).unwrap();
        let b = ucb_select(&scaled, &n, n_p, c * k).unwrap();
        // equal up to floating point near-ties
        let u = |v: &[f64], c: f64, i: usize| v[i] + c * ((n_p as f64).ln() / n[i] as f64).sqrt();
        prop_assert!(a == b || (u(&v, c, a) - u(&v, c, b)).abs() < 1e-9);
    }
}

#[test]
fn lru_example() {
    let mut tt: LinkedTT<&str> = LinkedTT::new(Some(2), Eviction::Lru, 0);
    tt.get_or_insert_with(1, || "a");
    tt.get_or_insert_with(2, || "b");
    tt.touch(1);
    tt.get_or_insert_with(3, || "c");
    assert!(!tt.contains(2));
    assert!(tt.contains(1) && tt.contains(3));
    let (v, fresh) = tt.get_or_insert_with(1, || "other");
    assert_eq!((*v, fresh), ("a", false));
}

/// Replays a random operation log against a plain recency list.
fn replay(ops: &[(u8, u64)], cap: usize) {
    let mut tt: LinkedTT<u64> = LinkedTT::new(Some(cap), Eviction::Lru, 0);
    let mut oracle: VecDeque<u64> = VecDeque::new();
    for &(op, key) in ops {
        match op % 3 {
            0 | 1 => {
                tt.get_or_insert_with(key, || key);
                if let Some(p) = oracle.iter().position(|&k| k == key) {
                    oracle.remove(p);
                }
                oracle.push_front(key);
                if oracle.len() > cap {
                    oracle.pop_back();
                }
            }
            _ => {
                let hit = tt.touch(key);
                let p = oracle.iter().position(|&k| k == key);
                assert_eq!(hit, p.is_some());
                if let Some(p) = p {
                    oracle.remove(p);
                    oracle.push_front(key);
                }
            }
        }
        assert!(tt.len() <= cap);
    }
    assert_eq!(tt.keys_by_recency(), oracle.into_iter().collect::<Vec<_>>());
}

proptest! {
    #[test]
    fn lru_matches_event_log(ops in prop::collection::vec((any::<u8>(), 0u64..40), 0..400), cap in 1usize..30) {
        replay(&ops, cap);
    }
}

#[test]
fn lru_long_log() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ops: Vec<(u8, u64)> = (0..100_000).map(|_| (rng.gen(), rng.gen_range(0..500))).collect();
    replay(&ops, 200);
}

#[test]
fn random_eviction_keeps_bound() {
    let mut tt: LinkedTT<u64> = LinkedTT::new(Some(10), Eviction::Random, 3);
    tt.pin(Some(0));
    tt.get_or_insert_with(0, || 0);
    for k in 1..1000 {
        tt.get_or_insert_with(k, || k);
        assert!(tt.len() <= 10);
        assert!(tt.contains(0) && tt.contains(k));
    }
}

fn tictactoe_state(g: &CompiledGame, cells: &str, control: &str) -> GameState {
    let mut terms = Vec::new();
    for (i, c) in cells.chars().enumerate() {
        let mark = match c {
            'x' => "x",
            'o' => "o",
            _ => "b",
        };
        terms.push(parse_term(&format!("(cell {} {} {mark})", i / 3 + 1, i % 3 + 1)).unwrap());
    }
    terms.push(parse_term(&format!("(control {control})")).unwrap());
    g.state_from_terms(&terms).unwrap()
}

#[test]
fn finds_immediate_win() {
    let g = game(games::TICTACTOE);
    // x to play (1 3)
    let s = tictactoe_state(&g, "xx.oo....", "xplayer");
    let win = parse_term("(mark 1 3)").unwrap();
    let mut hits = 0;
    for seed in 0..20 {
        let cfg = SearchConfig { budget: Budget::Playouts(2000), seed, ..Default::default() };
        let m = ggp_player::choose_move(g.clone(), &s, 0, cfg).unwrap();
        hits += (g.move_term(0, &m) == win) as usize;
    }
    assert!(hits >= 19, "{hits}/20");
}

#[test]
fn single_continuation() {
    let g = game(games::TICTACTOE);
    let s = tictactoe_state(&g, "xoxoxoox.", "xplayer");
    let cfg = SearchConfig { budget: Budget::Playouts(1), ..Default::default() };
    let m = ggp_player::choose_move(g.clone(), &s, 0, cfg).unwrap();
    assert_eq!(g.move_term(0, &m).to_string(), "(mark 3 3)");
}

#[test]
fn zero_budget_warns() {
    let g = game(games::TICTACTOE);
    let s = g.initial_state();
    let st = run_uct(g.clone(), &s, SearchConfig { budget: Budget::Playouts(0), ..Default::default() });
    assert!(st.warning);
    assert_eq!(st.playouts, 0);
    assert_eq!(st.roles[0].moves.len(), 9);
    assert!(st.roles[0].n.iter().all(|&n| n == 0));
}

#[test]
fn backprop_conservation() {
    for text in [games::TICTACTOE, games::CONNECTFOUR, games::NIM] {
        let g = game(text);
        let mut u = Uct::new(g.clone(), SearchConfig::default());
        let root = g.initial_state();
        for i in 1..=300u64 {
            let before: u64 = u.tt.values().map(|(_, n)| n.n_p).sum();
            u.playout(&root, &[]);
            let after: u64 = u.tt.values().map(|(_, n)| n.n_p).sum();
            // each node on the selection path gains exactly one visit
            assert!(after > before);
            assert_eq!(u.tt.peek(root.hash64()).unwrap().n_p, i);
            for (_, n) in u.tt.values() {
                for e in &n.roles {
                    assert_eq!(e.n.iter().map(|&x| x as u64).sum::<u64>(), n.n_p);
                    for j in 0..e.n.len() {
                        assert!((0.0..=1.0).contains(&e.mean(j)));
                    }
                }
            }
        }
    }
}

#[test]
fn unbounded_tt_counts_distinct_states() {
    let g = game(games::TICTACTOE);
    let mut u = Uct::new(g.clone(), SearchConfig { budget: Budget::Playouts(500), ..Default::default() });
    let mut e = Engine::new(g.clone());
    let mut s = g.initial_state();
    while !e.is_terminal(&s) {
        let m: Vec<_> = (0..2).map(|r| u.choose(&s, &[], r).unwrap().0).collect();
        s = e.next_state(&s, &m).unwrap();
    }
    let distinct: HashSet<GameState> = u.tt.values().map(|(_, n)| n.state.clone()).collect();
    assert_eq!(u.tt.len(), distinct.len());
    assert_eq!(u.tt.len() as u64, u.expansions);
}

#[test]
fn uct_beats_random_tictactoe() {
    let g = game(games::TICTACTOE);
    let mut good = 0.0;
    let n = 20;
    for i in 0..n {
        let uct_role = i % 2;
        let cfg = SearchConfig { budget: Budget::Playouts(1000), seed: i as u64, ..Default::default() };
        let mut agents: Vec<Box<dyn Agent>> = Vec::new();
        for r in 0..2 {
            if r == uct_role {
                agents.push(Box::new(UctAgent::new(g.clone(), r, cfg.clone())));
            } else {
                agents.push(Box::new(RandomAgent::new(g.clone(), r, 100 + i as u64)));
            }
        }
        let res = play_match(g.clone(), &mut agents, None).unwrap();
        if res.goals[uct_role] >= res.goals[1 - uct_role] {
            good += 1.0;
        }
    }
    assert!(good / n as f64 >= 0.9, "{good}/{n}");
}

#[test]
fn small_tt_matches_stay_legal() {
    let g = game(games::CONNECTFOUR);
    for eviction in [Eviction::Lru, Eviction::Random] {
        let cfg = SearchConfig {
            budget: Budget::Playouts(300),
            tt_capacity: Some(20),
            eviction,
            ..Default::default()
        };
        let mut agents: Vec<Box<dyn Agent>> = (0..2)
            .map(|r| Box::new(UctAgent::new(g.clone(), r, SearchConfig { seed: r as u64, ..cfg.clone() })) as Box<dyn Agent>)
            .collect();
        let res = play_match(g.clone(), &mut agents, Some(Budget::Playouts(100))).unwrap();
        assert!(!res.is_empty());
        assert_eq!(res.states.len(), res.len() + 1);
    }
}

#[test]
fn timed_agents_terminate() {
    let g = game(games::TICTACTOE);
    let cfg = SearchConfig { budget: Budget::Time(std::time::Duration::from_millis(20)), ..Default::default() };
    let mut agents: Vec<Box<dyn Agent>> =
        (0..2).map(|r| Box::new(UctAgent::new(g.clone(), r, cfg.clone())) as Box<dyn Agent>).collect();
    let res = play_match(g.clone(), &mut agents, None).unwrap();
    assert!(res.len() >= 5);
}

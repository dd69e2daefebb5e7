//! Agents and the match harness.

use std::sync::Arc;

use ggp_core::engine::Engine;
use ggp_core::{CompiledGame, Error, GameState, Move};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::uct::{Budget, SearchConfig, Uct};

pub trait Agent: Send {
    fn name(&self) -> String;

    /// Called once before the first turn with the start clock budget.
    fn start(&mut self, _state: &GameState, _budget: Option<Budget>) {}

    /// Picks a move for `role`; `last` is the previous joint move.
    fn select(&mut self, state: &GameState, last: Option<&[Move]>) -> Move;
}

pub struct RandomAgent {
    engine: Engine,
    role: usize,
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(game: Arc<CompiledGame>, role: usize, seed: u64) -> RandomAgent {
        RandomAgent { engine: Engine::new(game), role, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Agent for RandomAgent {
    fn name(&self) -> String {
        "random".into()
    }

    fn select(&mut self, state: &GameState, _last: Option<&[Move]>) -> Move {
        let ms = self.engine.legal_moves(state, self.role);
        ms[self.rng.gen_range(0..ms.len())].clone()
    }
}

pub struct UctAgent {
    pub uct: Uct,
    role: usize,
    label: String,
    /// Playouts of the last decision.
    pub last_playouts: u64,
}

impl UctAgent {
    pub fn new(game: Arc<CompiledGame>, role: usize, config: SearchConfig) -> UctAgent {
        let label = if config.knowledge.is_some() { "uct+knowledge" } else { "uct" }.to_string();
        UctAgent { uct: Uct::new(game, config), role, label, last_playouts: 0 }
    }
}

impl Agent for UctAgent {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn start(&mut self, state: &GameState, budget: Option<Budget>) {
        if let Some(b) = budget {
            self.uct.run_with(state, &[], b);
        }
    }

    fn select(&mut self, state: &GameState, last: Option<&[Move]>) -> Move {
        let own = self.uct.engine.legal_moves(state, self.role);
        if own.len() == 1 {
            self.last_playouts = 0;
            return own[0].clone();
        }
        let pts = last.map(|jm| self.uct.joint_points(jm)).unwrap_or_default();
        let (m, stats) = self.uct.choose(state, &pts, self.role).expect("no legal move");
        self.last_playouts = stats.playouts;
        m
    }
}

#[derive(Clone, Debug)]
pub struct MatchResult {
    /// Visited states, initial to terminal.
    pub states: Vec<GameState>,
    /// Joint move made in each non-terminal state.
    pub moves: Vec<Vec<Move>>,
    pub goals: Vec<u32>,
}

impl MatchResult {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }
}

/// Plays one match; agents are indexed by role.
pub fn play_match(
    game: Arc<CompiledGame>,
    agents: &mut [Box<dyn Agent>],
    start_budget: Option<Budget>,
) -> Result<MatchResult, Error> {
    let mut engine = Engine::new(game);
    if agents.len() != engine.n_roles() {
        return Err(Error::UnknownRole(format!("{} agents for {} roles", agents.len(), engine.n_roles())));
    }
    let mut s = engine.initial_state();
    for a in agents.iter_mut() {
        a.start(&s, start_budget);
    }
    let mut states = vec![s.clone()];
    let mut moves: Vec<Vec<Move>> = Vec::new();
    while !engine.is_terminal(&s) {
        let last = moves.last().cloned();
        let jm: Vec<Move> = agents.iter_mut().map(|a| a.select(&s, last.as_deref())).collect();
        s = engine.next_state(&s, &jm)?;
        moves.push(jm);
        states.push(s.clone());
    }
    let goals = engine.goals(&s);
    Ok(MatchResult { states, moves, goals })
}

/// 1 for a strict win over every other role, 0.5 for a tie at the top,
/// 0 otherwise. Single-role games score goal/100.
pub fn match_points(goals: &[u32], role: usize) -> f64 {
    let me = goals[role];
    if goals.len() == 1 {
        return me as f64 / 100.0;
    }
    let others = goals.iter().enumerate().filter(|&(i, _)| i != role).map(|(_, &g)| g);
    let best_other = others.max().unwrap_or(0);
    if me > best_other {
        1.0
    } else if me == best_other {
        0.5
    } else {
        0.0
    }
}

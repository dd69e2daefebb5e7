//! Game automaton over a compiled game.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::compiler::Backend;
use crate::error::{Error, Result};
use crate::eval::Ctx;
use crate::game::{CompiledGame, GameState, Move, Tuple};
use crate::mgdl::FlatClass;
use crate::store::FactStore;

/// Growth factor for dynamic store sizing.
const DYN_GROWTH: usize = 4;

pub struct Engine {
    game: Arc<CompiledGame>,
    backend: Backend,
    dyns: Vec<Option<FactStore>>,
    loaded: Option<GameState>,
}

impl Clone for Engine {
    fn clone(&self) -> Self {
        Engine::with_backend(self.game.clone(), self.backend)
    }
}

impl Engine {
    pub fn new(game: Arc<CompiledGame>) -> Engine {
        let b = game.backend;
        Engine::with_backend(game, b)
    }

    pub fn with_backend(game: Arc<CompiledGame>, backend: Backend) -> Engine {
        let mut counts = vec![0usize; game.rels.len()];
        let init = game.initial_state();
        for (r, _) in game.state_facts(&init) {
            counts[r] += 1;
        }
        let dyns = game
            .rels
            .iter()
            .enumerate()
            .map(|(i, r)| {
                matches!(r.class, FlatClass::Dynamic | FlatClass::Does)
                    .then(|| FactStore::with_capacity(r.arity, (counts[i] * DYN_GROWTH).max(8)))
            })
            .collect();
        Engine {
            game,
            backend,
            dyns,
            loaded: None,
        }
    }

    pub fn game(&self) -> &Arc<CompiledGame> {
        &self.game
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn n_roles(&self) -> usize {
        self.game.roles.len()
    }

    pub fn initial_state(&self) -> GameState {
        self.game.initial_state()
    }

    fn load(&mut self, s: &GameState) {
        if self.loaded.as_ref() == Some(s) {
            return;
        }
        for (i, d) in self.dyns.iter_mut().enumerate() {
            if let Some(d) = d {
                if self.game.rels[i].class == FlatClass::Dynamic {
                    d.clear();
                }
            }
        }
        for (r, t) in self.game.state_facts(s) {
            self.dyns[r].as_mut().expect("dynamic").insert(t);
        }
        self.loaded = Some(s.clone());
    }

    fn set_does(&mut self, jm: &[Move]) {
        for (role, m) in jm.iter().enumerate() {
            let shape = &self.game.shapes[m.shape as usize];
            if let Some(d) = shape.does_rel {
                let mut t: Tuple = SmallVec::new();
                t.push(self.game.roles[role]);
                t.extend_from_slice(&m.args);
                self.dyns[d].as_mut().expect("does store").insert(&t);
            }
        }
    }

    fn clear_does(&mut self) {
        for (i, d) in self.dyns.iter_mut().enumerate() {
            if let Some(d) = d {
                if self.game.rels[i].class == FlatClass::Does {
                    d.clear();
                }
            }
        }
    }

    fn ctx(&self) -> Ctx<'_> {
        Ctx::new(&self.game.plan, &self.game.statics, &self.dyns)
    }

    /// Sorted by (shape, argument ids).
    pub fn legal_moves(&mut self, s: &GameState, role: usize) -> Vec<Move> {
        self.load(s);
        let ctx = self.ctx();
        let mut moves = Vec::new();
        let r = [self.game.roles[role]];
        for (i, shape) in self.game.shapes.iter().enumerate() {
            ctx.solve(self.backend, shape.proc, &r, &mut |outs| {
                moves.push(Move {
                    shape: i as u16,
                    args: outs.iter().copied().collect(),
                });
                true
            });
        }
        moves.sort_unstable();
        moves.dedup();
        moves
    }

    pub fn is_legal(&mut self, s: &GameState, role: usize, m: &Move) -> bool {
        self.load(s);
        let shape = &self.game.shapes[m.shape as usize];
        let mut input: Tuple = SmallVec::new();
        input.push(self.game.roles[role]);
        input.extend_from_slice(&m.args);
        // the legal root only has the (CONST, VAR..) overload
        let mut found = false;
        self.ctx().solve(self.backend, shape.proc, &input[..1], &mut |outs| {
            found = outs == &input[1..];
            !found
        });
        found
    }

    pub fn next_state(&mut self, s: &GameState, jm: &[Move]) -> Result<GameState> {
        if jm.len() != self.n_roles() {
            return Err(Error::IllegalMove {
                role: String::new(),
                mv: format!("joint move of {} parts for {} roles", jm.len(), self.n_roles()),
            });
        }
        for (role, m) in jm.iter().enumerate() {
            if (m.shape as usize) >= self.game.shapes.len() || !self.is_legal(s, role, m) {
                return Err(Error::IllegalMove {
                    role: self.game.consts.name(self.game.roles[role]).to_string(),
                    mv: if (m.shape as usize) < self.game.shapes.len() {
                        self.game.move_term(role, m).to_string()
                    } else {
                        format!("{m:?}")
                    },
                });
            }
        }
        Ok(self.next_state_unchecked(s, jm))
    }

    pub fn next_state_unchecked(&mut self, s: &GameState, jm: &[Move]) -> GameState {
        self.load(s);
        self.set_does(jm);
        let mut facts: Vec<(usize, Tuple)> = Vec::new();
        {
            let ctx = self.ctx();
            for &(p, target) in &self.game.next_roots {
                ctx.solve(self.backend, p, &[], &mut |outs| {
                    facts.push((target, outs.iter().copied().collect()));
                    true
                });
            }
        }
        self.clear_does();
        self.game.make_state(facts)
    }

    pub fn is_terminal(&mut self, s: &GameState) -> bool {
        self.load(s);
        match self.game.terminal_proc {
            Some(p) => self.ctx().exists(self.backend, p, &[]),
            None => false,
        }
    }

    /// Highest goal value derivable for the role, 0 if none.
    pub fn goal(&mut self, s: &GameState, role: usize) -> Result<u32> {
        let r = *self
            .game
            .roles
            .get(role)
            .ok_or_else(|| Error::UnknownRole(format!("#{role}")))?;
        self.load(s);
        let ctx = self.ctx();
        let mut best: Option<f64> = None;
        for &p in &self.game.goal_procs {
            ctx.solve(self.backend, p, &[r], &mut |outs| {
                if let Some(v) = self.game.consts.number(outs[0]) {
                    best = Some(best.map_or(v, |b| b.max(v)));
                }
                true
            });
        }
        Ok(best.unwrap_or(0.0).clamp(0.0, 100.0) as u32)
    }

    pub fn goals(&mut self, s: &GameState) -> Vec<u32> {
        (0..self.n_roles()).map(|r| self.goal(s, r).expect("role index")).collect()
    }

    /// Answers of an arbitrary relation under a bound-position mask.
    pub fn query(&mut self, s: &GameState, rel: &str, mask: u64, input: &[u32]) -> Option<Vec<Vec<u32>>> {
        let r = *self.game.rel_ids.get(rel)?;
        let p = self.game.plan.proc_for(r, mask)?;
        self.load(s);
        let mut rows = Vec::new();
        self.ctx().solve(self.backend, p, input, &mut |o| {
            rows.push(o.to_vec());
            true
        });
        rows.sort();
        rows.dedup();
        Some(rows)
    }

    /// Plays uniformly random joint moves to the end. Returns the terminal
    /// state and the number of joint moves made.
    pub fn random_playout<R: Rng>(&mut self, s: &GameState, rng: &mut R) -> (GameState, usize) {
        let mut s = s.clone();
        let mut len = 0;
        let n = self.n_roles();
        let mut jm = Vec::with_capacity(n);
        while !self.is_terminal(&s) {
            jm.clear();
            for r in 0..n {
                let ms = self.legal_moves(&s, r);
                assert!(!ms.is_empty(), "role without legal moves in a nonterminal state");
                jm.push(ms[rng.gen_range(0..ms.len())].clone());
            }
            s = self.next_state_unchecked(&s, &jm);
            len += 1;
        }
        (s, len)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchResult {
    pub games: usize,
    pub games_per_second: f64,
    pub mean_length: f64,
}

pub fn bench_random_playouts(game: Arc<CompiledGame>, backend: Backend, seconds: f64, seed: u64) -> BenchResult {
    assert!(seconds > 0.0, "seconds must be positive");
    let mut e = Engine::with_backend(game, backend);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = e.initial_state();
    let budget = Duration::from_secs_f64(seconds);
    let start = Instant::now();
    let (mut games, mut total) = (0usize, 0usize);
    while start.elapsed() < budget {
        let (_, len) = e.random_playout(&init, &mut rng);
        games += 1;
        total += len;
    }
    let secs = start.elapsed().as_secs_f64();
    BenchResult {
        games,
        games_per_second: games as f64 / secs,
        mean_length: if games == 0 { 0.0 } else { total as f64 / games as f64 },
    }
}

/// Fixed-count variant; deterministic under the seed.
pub fn bench_n_playouts(game: Arc<CompiledGame>, backend: Backend, n: usize, seed: u64) -> BenchResult {
    let mut e = Engine::with_backend(game, backend);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = e.initial_state();
    let start = Instant::now();
    let mut total = 0usize;
    for _ in 0..n {
        total += e.random_playout(&init, &mut rng).1;
    }
    BenchResult {
        games: n,
        games_per_second: n as f64 / start.elapsed().as_secs_f64().max(1e-9),
        mean_length: if n == 0 { 0.0 } else { total as f64 / n as f64 },
    }
}

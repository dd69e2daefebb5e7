//! Decoupled UCT over a linked transposition table.

use std::sync::Arc;
use std::time::{Duration, Instant};

use ggp_core::engine::Engine;
use ggp_core::{CompiledGame, GameState, Move};
use ggp_knowledge::params::widening_limit;
use ggp_knowledge::score::{sample_move, BoardCodec, MovePoint, Phase, Scorer};
use ggp_knowledge::KnowledgeFile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::tt::{Eviction, LinkedTT};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Playouts(u64),
    Time(Duration),
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Exploration constant on the 0..100 goal scale.
    pub c: f64,
    pub tt_capacity: Option<usize>,
    pub eviction: Eviction,
    pub budget: Budget,
    pub knowledge: Option<Arc<KnowledgeFile>>,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            c: 40.0,
            tt_capacity: None,
            eviction: Eviction::Lru,
            budget: Budget::Playouts(1000),
            knowledge: None,
            seed: 0,
        }
    }
}

/// Per-role edge statistics at a node.
#[derive(Clone, Debug, Default)]
pub struct RoleEdges {
    pub moves: Vec<Move>,
    pub n: Vec<u32>,
    /// Sum of this role's payouts in [0, 1].
    pub sum: Vec<f64>,
    /// Knowledge value per edge, 0 without knowledge.
    pub prior: Vec<f64>,
    /// Edge indices by descending prior, for widening.
    pub rank: Vec<usize>,
}

impl RoleEdges {
    pub fn mean(&self, i: usize) -> f64 {
        if self.n[i] == 0 {
            0.0
        } else {
            self.sum[i] / self.n[i] as f64
        }
    }
}

type Joint = SmallVec<[u16; 4]>;

#[derive(Clone, Debug)]
pub struct Node {
    pub state: GameState,
    pub terminal: bool,
    pub goals: Vec<f64>,
    pub n_p: u64,
    pub roles: Vec<RoleEdges>,
    /// Joint edge choice to child hash; stale links are dropped on use.
    pub children: Vec<(Joint, u64)>,
}

/// UCB choice among `eligible` edges (all when None). Unvisited edges come
/// first by lowest ordinal; ties keep the lowest ordinal.
pub fn ucb_select_with(
    v: &[f64],
    n: &[u32],
    n_p: u64,
    c: f64,
    bias: Option<(&[f64], f64)>,
    eligible: Option<&[usize]>,
) -> Option<usize> {
    let all: Vec<usize>;
    let idx = match eligible {
        Some(e) => e,
        None => {
            all = (0..v.len()).collect();
            &all
        }
    };
    let mut unvisited: Option<usize> = None;
    for &i in idx {
        if n[i] == 0 && unvisited.is_none_or(|u| i < u) {
            unvisited = Some(i);
        }
    }
    if unvisited.is_some() {
        return unvisited;
    }
    let ln = (n_p.max(1) as f64).ln();
    let mut best: Option<(f64, usize)> = None;
    for &i in idx {
        let ni = n[i] as f64;
        let mut u = v[i] + c * (ln / ni).sqrt();
        if let Some((b, w)) = bias {
            u += w * b[i] / (ni + 1.0);
        }
        match best {
            Some((bu, bi)) if u < bu || (u == bu && i > bi) => {}
            _ => best = Some((u, i)),
        }
    }
    best.map(|b| b.1)
}

pub fn ucb_select(v: &[f64], n: &[u32], n_p: u64, c: f64) -> Option<usize> {
    ucb_select_with(v, n, n_p, c, None, None)
}

/// Most visited edge; ties by higher mean, then lower ordinal.
pub fn choose_edge(n: &[u32], v: &[f64]) -> Option<usize> {
    (0..n.len()).reduce(|b, i| {
        if n[i] > n[b] || (n[i] == n[b] && v[i] > v[b]) {
            i
        } else {
            b
        }
    })
}

#[derive(Clone, Debug)]
pub struct SearchStats {
    pub playouts: u64,
    /// Root edges per role.
    pub roles: Vec<RoleEdges>,
    /// Budget ran out before any playout.
    pub warning: bool,
}

/// Knowledge of every role lowered onto the game.
struct Know {
    codec: BoardCodec,
    scorers: Vec<Scorer>,
}

pub struct Uct {
    pub engine: Engine,
    pub config: SearchConfig,
    pub tt: LinkedTT<Node>,
    rng: ChaCha8Rng,
    know: Option<Know>,
    n_roles: usize,
    /// Distinct states ever inserted, for diagnostics.
    pub expansions: u64,
}

impl Uct {
    pub fn new(game: Arc<CompiledGame>, config: SearchConfig) -> Uct {
        let know = config.knowledge.as_ref().and_then(|k| {
            let codec = BoardCodec::new(&game)?;
            let scorers = game.role_names().iter().map(|r| Scorer::new(k, r, &codec)).collect();
            Some(Know { codec, scorers })
        });
        let engine = Engine::new(game);
        Uct {
            n_roles: engine.n_roles(),
            engine,
            tt: LinkedTT::new(config.tt_capacity, config.eviction, config.seed ^ 0x5eed),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            know,
            config,
            expansions: 0,
        }
    }

    fn make_node(&mut self, s: &GameState, last: &[Option<MovePoint>]) -> Node {
        let terminal = self.engine.is_terminal(s);
        if terminal {
            let goals = self.engine.goals(s).iter().map(|&g| g as f64 / 100.0).collect();
            return Node { state: s.clone(), terminal, goals, n_p: 0, roles: Vec::new(), children: Vec::new() };
        }
        let mut roles = Vec::with_capacity(self.n_roles);
        let mut view = None;
        for r in 0..self.n_roles {
            let moves = self.engine.legal_moves(s, r);
            let k = moves.len();
            let mut prior = vec![0.0; k];
            if let Some(kn) = self.know.as_mut() {
                let sc = &kn.scorers[r];
                if !sc.is_empty() && sc.params.features_in_selection {
                    let g = self.engine.game().clone();
                    let v = view.get_or_insert_with(|| kn.codec.view(&g, s, last));
                    let pts: Vec<_> = moves.iter().map(|m| kn.codec.move_point(&g, r, m)).collect();
                    prior = kn.scorers[r].values(v, &pts, Phase::Selection);
                }
            }
            let mut rank: Vec<usize> = (0..k).collect();
            rank.sort_by(|&a, &b| prior[b].total_cmp(&prior[a]).then(a.cmp(&b)));
            roles.push(RoleEdges { moves, n: vec![0; k], sum: vec![0.0; k], prior, rank });
        }
        Node { state: s.clone(), terminal, goals: Vec::new(), n_p: 0, roles, children: Vec::new() }
    }

    fn select_edges(&self, node: &Node) -> Joint {
        let c = self.config.c / 100.0;
        node.roles
            .iter()
            .enumerate()
            .map(|(r, e)| {
                let v: SmallVec<[f64; 16]> = (0..e.n.len()).map(|i| e.mean(i)).collect();
                let mut bias = None;
                let mut eligible = None;
                if let Some(kn) = &self.know {
                    let p = &kn.scorers[r].params;
                    if !kn.scorers[r].is_empty() && p.features_in_selection {
                        bias = Some((e.prior.as_slice(), p.selection_impact));
                        if p.progressive_widening {
                            let k = widening_limit(node.n_p, p.widening_c, p.widening_alpha, e.n.len());
                            eligible = Some(&e.rank[..k]);
                        }
                    }
                }
                ucb_select_with(&v, &e.n, node.n_p, c, bias, eligible).unwrap_or(0) as u16
            })
            .collect()
    }

    fn simulate(&mut self, mut s: GameState, mut last: Vec<Option<MovePoint>>) -> Vec<f64> {
        let uses_knowledge = self.know.as_ref().is_some_and(|k| k.scorers.iter().any(|s| !s.is_empty()));
        if !uses_knowledge {
            let (end, _) = self.engine.random_playout(&s, &mut self.rng);
            return self.engine.goals(&end).iter().map(|&g| g as f64 / 100.0).collect();
        }
        let g = self.engine.game().clone();
        while !self.engine.is_terminal(&s) {
            let kn = self.know.as_mut().unwrap();
            let view = kn.codec.view(&g, &s, &last);
            let mut jm = Vec::with_capacity(self.n_roles);
            let mut pts = Vec::with_capacity(self.n_roles);
            for r in 0..self.n_roles {
                let moves = self.engine.legal_moves(&s, r);
                let cand: Vec<_> = moves.iter().map(|m| kn.codec.move_point(&g, r, m)).collect();
                let i = if moves.len() == 1 || kn.scorers[r].is_empty() {
                    self.rng.gen_range(0..moves.len())
                } else {
                    let sc = &kn.scorers[r];
                    let scores: Vec<f64> =
                        sc.values(&view, &cand, Phase::Simulation).into_iter().map(|v| sc.score(v)).collect();
                    sample_move(&scores, &mut self.rng).unwrap_or(0)
                };
                pts.push(cand[i].clone());
                jm.push(moves[i].clone());
            }
            s = self.engine.next_state_unchecked(&s, &jm);
            last = pts;
        }
        self.engine.goals(&s).iter().map(|&g| g as f64 / 100.0).collect()
    }

    /// One selection, expansion, simulation and backpropagation pass.
    pub fn playout(&mut self, root: &GameState, root_last: &[Option<MovePoint>]) {
        let mut path: Vec<(u64, Joint)> = Vec::new();
        let mut s = root.clone();
        let mut last: Vec<Option<MovePoint>> = root_last.to_vec();
        let mut expanded = false;
        let goals = loop {
            let h = s.hash64();
            let known = self.tt.peek(h).is_some_and(|n| n.state == s);
            if !known {
                if expanded {
                    break self.simulate(s, last);
                }
                let node = self.make_node(&s, &last);
                if self.tt.contains(h) {
                    self.tt.remove(h);
                }
                self.tt.get_or_insert_with(h, || node);
                self.expansions += 1;
                expanded = true;
                if path.is_empty() {
                    // a fresh root is selected from right away
                } else {
                    let n = self.tt.peek(h).unwrap();
                    if n.terminal {
                        break n.goals.clone();
                    }
                    break self.simulate(s, last);
                }
            }
            self.tt.touch(h);
            let node = self.tt.peek(h).unwrap();
            if node.terminal {
                break node.goals.clone();
            }
            let edges = self.select_edges(node);
            let jm: Vec<Move> =
                node.roles.iter().zip(&edges).map(|(e, &i)| e.moves[i as usize].clone()).collect();
            let child = node.children.iter().find(|(j, _)| *j == edges).map(|c| c.1);
            let linked = child.and_then(|c| self.tt.peek(c)).map(|n| n.state.clone());
            let next = match linked {
                Some(st) => st,
                None => {
                    let st = self.engine.next_state_unchecked(&s, &jm);
                    let ch = st.hash64();
                    let node = self.tt.get_mut(h).unwrap();
                    node.children.retain(|(j, _)| *j != edges);
                    node.children.push((edges.clone(), ch));
                    st
                }
            };
            let next_last = self.joint_points(&jm);
            path.push((h, edges));
            s = next;
            last = next_last;
        };
        for (h, edges) in &path {
            if let Some(node) = self.tt.get_mut(*h) {
                node.n_p += 1;
                for (r, &i) in edges.iter().enumerate() {
                    let e = &mut node.roles[r];
                    e.n[i as usize] += 1;
                    e.sum[i as usize] += goals[r];
                }
            }
        }
    }

    /// Searches from `root` within the configured budget.
    pub fn run(&mut self, root: &GameState, root_last: &[Option<MovePoint>]) -> SearchStats {
        self.run_with(root, root_last, self.config.budget)
    }

    pub fn run_with(&mut self, root: &GameState, root_last: &[Option<MovePoint>], budget: Budget) -> SearchStats {
        let h = root.hash64();
        self.tt.pin(Some(h));
        let start = Instant::now();
        let mut playouts = 0u64;
        if !self.engine.is_terminal(root) {
            loop {
                let done = match budget {
                    Budget::Playouts(n) => playouts >= n,
                    Budget::Time(d) => start.elapsed() >= d,
                };
                if done {
                    break;
                }
                self.playout(root, root_last);
                playouts += 1;
            }
        }
        let roles = match self.tt.peek(h) {
            Some(n) if n.state == *root && !n.terminal && playouts > 0 => n.roles.clone(),
            _ => {
                let node = self.make_node(root, root_last);
                node.roles
            }
        };
        SearchStats { playouts, roles, warning: playouts == 0 }
    }

    /// Most visited root move for `role`.
    pub fn choose(&mut self, root: &GameState, root_last: &[Option<MovePoint>], role: usize) -> Option<(Move, SearchStats)> {
        let stats = self.run(root, root_last);
        let e = stats.roles.get(role)?;
        let v: Vec<f64> = (0..e.n.len()).map(|i| e.mean(i)).collect();
        let i = choose_edge(&e.n, &v)?;
        Some((e.moves[i].clone(), stats))
    }

    /// Board coordinates of a joint move, when knowledge is loaded.
    pub fn joint_points(&mut self, jm: &[Move]) -> Vec<Option<MovePoint>> {
        let g = self.engine.game().clone();
        match self.know.as_mut() {
            Some(kn) => jm.iter().enumerate().map(|(r, m)| kn.codec.move_point(&g, r, m)).collect(),
            None => Vec::new(),
        }
    }
}

/// Searches the root once and reports per-edge statistics.
pub fn run_uct(game: Arc<CompiledGame>, root: &GameState, config: SearchConfig) -> SearchStats {
    let mut u = Uct::new(game, config);
    u.run(root, &[])
}

pub fn choose_move(game: Arc<CompiledGame>, root: &GameState, role: usize, config: SearchConfig) -> Option<Move> {
    let mut u = Uct::new(game, config);
    u.choose(root, &[], role).map(|x| x.0)
}

//! Move scoring against a compiled game.

use ggp_core::board::{extract_move_coords, BoardSpec};
use ggp_core::compiler::RelId;
use ggp_core::mgdl::mangle;
use ggp_core::{CompiledGame, GameState, Move, Term};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rustc_hash::FxHashMap;

use crate::error::{KnowledgeError, Result};
use crate::feature::{Feature, FeatureClass, MetaFact};
use crate::file::KnowledgeFile;
use crate::matching::{kind_matches, lower_kind, lower_meta, meta_holds, BoardPiece, Cand, Geo, MKind, MMeta, Point, StateView};
use crate::params::Parameters;

/// Lower bound on a move score.
pub const SCORE_EPS: f64 = 1e-6;

/// Interned symbols; ids follow lexicographic order of the names.
#[derive(Clone, Debug, Default)]
pub struct Symbols {
    names: Vec<String>,
    ids: FxHashMap<String, u32>,
}

impl Symbols {
    pub fn new<'a>(names: impl IntoIterator<Item = &'a str>) -> Symbols {
        let mut v: Vec<String> = names.into_iter().map(str::to_string).collect();
        v.sort();
        v.dedup();
        let ids = v.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
        Symbols { names: v, ids }
    }

    pub fn id(&self, s: &str) -> Option<u32> {
        self.ids.get(s).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }
}

/// Reads board pieces and move coordinates straight from engine states.
#[derive(Clone, Debug)]
pub struct BoardCodec {
    pub spec: BoardSpec,
    pub geo: Geo,
    pub symbols: Symbols,
    const_sym: Vec<u32>,
    const_num: Vec<Option<f64>>,
    board_rel: Option<RelId>,
    moves: FxHashMap<(usize, Move), Option<(u32, Point)>>,
}

pub type MovePoint = (u32, Point);

impl BoardCodec {
    pub fn new(g: &CompiledGame) -> Option<BoardCodec> {
        let spec = g.board()?.clone();
        let names = g.consts.names();
        let symbols = Symbols::new(names.iter().map(String::as_str));
        let const_sym = names.iter().map(|n| symbols.id(n).unwrap()).collect();
        let const_num = (0..names.len() as u32).map(|i| g.consts.number(i)).collect();
        let probe = Term::compound(
            &spec.board_functor,
            (0..spec.board_pattern.len()).map(|_| Term::constant("c")).collect(),
        );
        let board_rel = g.rel_ids.get(&mangle(&probe).0.name).copied();
        Some(BoardCodec {
            geo: Geo::new(&spec),
            spec,
            symbols,
            const_sym,
            const_num,
            board_rel,
            moves: FxHashMap::default(),
        })
    }

    pub fn pieces(&self, g: &CompiledGame, s: &GameState) -> Vec<BoardPiece<u32>> {
        use ggp_core::board::PatternToken::*;
        let Some(rel) = self.board_rel else { return Vec::new() };
        let mut out = Vec::new();
        for (r, t) in g.state_facts(s) {
            if r != rel {
                continue;
            }
            let mut sym = 0;
            let mut at = Point::new();
            let mut ok = true;
            for (tok, &c) in self.spec.board_pattern.iter().zip(t) {
                match tok {
                    Piece => sym = self.const_sym[c as usize],
                    Dim => match self.const_num[c as usize] {
                        Some(x) => at.push(x),
                        None => ok = false,
                    },
                    Skip => {}
                }
            }
            if ok {
                out.push(BoardPiece { sym, at });
            }
        }
        out
    }

    /// Piece and coordinates of a move, None for non-board moves.
    pub fn move_point(&mut self, g: &CompiledGame, role: usize, m: &Move) -> Option<MovePoint> {
        if let Some(p) = self.moves.get(&(role, m.clone())) {
            return p.clone();
        }
        let t = g.move_term(role, m);
        let p = match extract_move_coords(&self.spec, &t) {
            Ok(Some((piece, at))) if at.len() == self.geo.n_dims => {
                self.symbols.id(&piece).map(|s| (s, at.into_iter().collect()))
            }
            _ => None,
        };
        self.moves.insert((role, m.clone()), p.clone());
        p
    }

    pub fn view(&self, g: &CompiledGame, s: &GameState, last: &[Option<MovePoint>]) -> StateView<u32> {
        StateView {
            pieces: self.pieces(g, s),
            last: last.iter().flatten().map(|(_, at)| at.clone()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Selection,
    Simulation,
}

#[derive(Clone, Debug)]
struct CFeature {
    class: usize,
    weight: f64,
    kind: MKind<u32>,
    itemsets: Vec<Vec<usize>>,
}

/// Knowledge of one role lowered onto a game's symbols.
#[derive(Clone, Debug)]
pub struct Scorer {
    pub params: Parameters,
    geo: Geo,
    winning: Vec<CFeature>,
    losing: Vec<CFeature>,
    metas: Vec<MMeta<u32>>,
}

impl Scorer {
    pub fn new(k: &KnowledgeFile, role: &str, codec: &BoardCodec) -> Scorer {
        let mut metas: Vec<MMeta<u32>> = Vec::new();
        let mut meta_ids: FxHashMap<MetaFact, usize> = FxHashMap::default();
        let sym = |s: &str| codec.symbols.id(s);
        let mut lower = |list: &[Feature]| -> Vec<CFeature> {
            let mut out: Vec<CFeature> = list
                .iter()
                .map(|f| CFeature {
                    class: f.kind.class().index(),
                    weight: f.weight,
                    kind: lower_kind(&f.kind, codec.geo.n_dims, &sym),
                    itemsets: f
                        .itemsets
                        .iter()
                        .map(|set| {
                            set.iter()
                                .map(|m| {
                                    *meta_ids.entry(m.clone()).or_insert_with(|| {
                                        metas.push(lower_meta(m, &sym));
                                        metas.len() - 1
                                    })
                                })
                                .collect()
                        })
                        .collect(),
                })
                .collect();
            // heaviest first for first-feature scoring
            out.sort_by(|a, b| b.weight.total_cmp(&a.weight));
            out
        };
        let (winning, losing) = match k.player(role) {
            Some(p) => (lower(&p.winning), lower(&p.losing)),
            None => (Vec::new(), Vec::new()),
        };
        Scorer { params: k.parameters.clone(), geo: codec.geo, winning, losing, metas }
    }

    pub fn is_empty(&self) -> bool {
        self.winning.is_empty() && self.losing.is_empty()
    }

    /// Weighted winning minus losing feature sums, one per candidate.
    pub fn values(&self, view: &StateView<u32>, cands: &[Option<MovePoint>], phase: Phase) -> Vec<f64> {
        let p = &self.params;
        let use_sets = match phase {
            Phase::Selection => p.itemsets_in_selection,
            Phase::Simulation => p.itemsets_in_simulation,
        };
        // 0 unknown, 1 false, 2 true
        let mut meta_state = vec![0u8; self.metas.len()];
        let mut set_ok = |set: &[usize]| {
            set.iter().all(|&i| {
                if meta_state[i] == 0 {
                    meta_state[i] = 1 + meta_holds(&self.metas[i], &self.geo, &view.pieces) as u8;
                }
                meta_state[i] == 2
            })
        };
        let mut out = Vec::with_capacity(cands.len());
        for c in cands {
            let cand = c.as_ref().map(|(s, at)| Cand::new(s, at.as_slice(), self.geo.n_dims));
            let mut sum = |list: &[CFeature]| -> f64 {
                let mut total = 0.0;
                for f in list {
                    if !p.class_enabled[f.class] {
                        continue;
                    }
                    let sets_on = use_sets && p.class_itemsets[f.class];
                    if f.class == FeatureClass::ItemsetsOnly.index() && !sets_on {
                        continue;
                    }
                    let gated = sets_on && !f.itemsets.is_empty();
                    if !kind_matches(&f.kind, &self.geo, view, cand.as_ref()) {
                        continue;
                    }
                    if gated && !f.itemsets.iter().any(|s| set_ok(s)) {
                        continue;
                    }
                    let v = f.weight * p.class_weights[f.class];
                    if p.first_feature {
                        return v;
                    }
                    total += v;
                }
                total
            };
            let w = sum(&self.winning);
            let l = sum(&self.losing);
            out.push(p.winning_weight * w - p.losing_weight * l);
        }
        out
    }

    /// Simulation score: base + impact * value, floored at SCORE_EPS.
    pub fn score(&self, value: f64) -> f64 {
        (self.params.base_value + self.params.simulation_impact * value).max(SCORE_EPS)
    }
}

/// score = base + winning - losing, floored at SCORE_EPS.
pub fn combine_score(base: f64, winning: f64, losing: f64) -> f64 {
    (base + winning - losing).max(SCORE_EPS)
}

pub fn move_distribution(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(KnowledgeError::NoMoves);
    }
    let s: Vec<f64> = scores.iter().map(|&x| x.max(SCORE_EPS)).collect();
    let total: f64 = s.iter().sum();
    Ok(s.iter().map(|x| x / total).collect())
}

pub fn sample_move<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> Result<usize> {
    if scores.is_empty() {
        return Err(KnowledgeError::NoMoves);
    }
    let w = WeightedIndex::new(scores.iter().map(|&x| x.max(SCORE_EPS)))
        .map_err(|e| KnowledgeError::Invalid(e.to_string()))?;
    Ok(w.sample(rng))
}

//! Compiled games, states and moves.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use smallvec::SmallVec;

use crate::board::BoardSpec;
use crate::compiler::{
    compile_plan, Backend, ConstantTable, Forest, ProcId, QueryPlan, RelId, RelInfo,
};
use crate::error::{Error, Result};
use crate::mgdl::{check_conformance, mangle, normalize, unmangle, ConformanceResult, FArg, FlatClass, NormalSheet, Verdict};
use crate::rulesheet::RuleSheet;
use crate::store::{hash_tuple, mix64, StaticStore};
use crate::term::Term;

pub type Tuple = SmallVec<[u32; 6]>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move {
    pub shape: u16,
    pub args: SmallVec<[u32; 4]>,
}

/// Dynamic facts encoded as sorted `[rel, args..]` runs.
#[derive(Clone, Debug, Eq)]
pub struct GameState {
    facts: Vec<u32>,
    hash: u64,
}

impl PartialEq for GameState {
    fn eq(&self, o: &Self) -> bool {
        self.hash == o.hash && self.facts == o.facts
    }
}

impl Hash for GameState {
    fn hash<H: Hasher>(&self, h: &mut H) {
        h.write_u64(self.hash);
    }
}

impl GameState {
    pub fn hash64(&self) -> u64 {
        self.hash
    }

    pub fn raw(&self) -> &[u32] {
        &self.facts
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MoveShape {
    pub legal_rel: String,
    pub proc: ProcId,
    pub does_rel: Option<RelId>,
    pub n_args: usize,
}

pub struct CompiledGame {
    pub sheet: RuleSheet,
    pub normal: NormalSheet,
    pub conformance: ConformanceResult,
    pub backend: Backend,
    pub consts: ConstantTable,
    pub rels: Vec<RelInfo>,
    pub rel_ids: BTreeMap<String, RelId>,
    pub plan: QueryPlan,
    pub forest: Forest,
    pub statics: Vec<Option<StaticStore>>,
    pub roles: Vec<u32>,
    pub shapes: Vec<MoveShape>,
    pub next_roots: Vec<(ProcId, RelId)>,
    pub goal_procs: Vec<ProcId>,
    pub terminal_proc: Option<ProcId>,
    rel_seeds: Vec<u64>,
    init: GameState,
}

impl fmt::Debug for CompiledGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompiledGame")
            .field("roles", &self.role_names())
            .field("relations", &self.rels.len())
            .field("procs", &self.plan.procs.len())
            .finish()
    }
}

fn fnv(s: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn compile(sheet: &RuleSheet, backend: Backend) -> Result<CompiledGame> {
    let conformance = check_conformance(sheet);
    let normal = normalize(sheet)?;
    let c = compile_plan(&normal)?;
    let roles = sheet
        .roles
        .iter()
        .map(|r| c.consts.id(r).expect("roles interned"))
        .collect();
    let mut shapes = Vec::new();
    for l in normal.legal_relations() {
        let rel = c.rel_ids[l];
        let proc = c.plan.proc_for(rel, 1).expect("legal root compiled");
        let does = format!("does{}", &l["legal".len()..]);
        shapes.push(MoveShape {
            legal_rel: l.to_string(),
            proc,
            does_rel: c.rel_ids.get(&does).copied(),
            n_args: c.rels[rel].arity - 1,
        });
    }
    let next_roots = normal
        .next_targets
        .iter()
        .map(|(n, t)| (c.plan.proc_for(c.rel_ids[n], 0).expect("next root"), c.rel_ids[t]))
        .collect();
    let goal_procs = normal
        .goal_relations()
        .iter()
        .filter(|g| c.rels[c.rel_ids[**g]].arity == 2)
        .map(|g| c.plan.proc_for(c.rel_ids[*g], 1).expect("goal root"))
        .collect();
    let terminal_proc = c.rel_ids.get("terminal").and_then(|&r| c.plan.proc_for(r, 0));
    let rel_seeds = c.rels.iter().map(|r| mix64(fnv(&r.name))).collect();
    let mut g = CompiledGame {
        sheet: sheet.clone(),
        conformance,
        backend,
        consts: c.consts,
        rels: c.rels,
        rel_ids: c.rel_ids,
        plan: c.plan,
        forest: c.forest,
        statics: c.statics,
        roles,
        shapes,
        next_roots,
        goal_procs,
        terminal_proc,
        rel_seeds,
        init: GameState {
            facts: Vec::new(),
            hash: 0,
        },
        normal,
    };
    let mut init = Vec::new();
    for a in &g.normal.init_facts {
        let t: Tuple = a
            .args
            .iter()
            .map(|x| match x {
                FArg::Const(c) => g.consts.id(c).expect("interned"),
                FArg::Var(_) => unreachable!(),
            })
            .collect();
        init.push((g.rel_ids[&a.rel], t));
    }
    g.init = g.make_state(init);
    Ok(g)
}

impl CompiledGame {
    pub fn from_kif(text: &str, backend: Backend) -> Result<CompiledGame> {
        compile(&crate::rulesheet::parse_kif(text)?, backend)
    }

    pub fn initial_state(&self) -> GameState {
        self.init.clone()
    }

    pub fn board(&self) -> Option<&BoardSpec> {
        self.sheet.board.as_ref()
    }

    pub fn inconclusive(&self) -> bool {
        self.conformance.verdict == Verdict::Inconclusive
    }

    pub fn role_names(&self) -> Vec<&str> {
        self.roles.iter().map(|&r| self.consts.name(r)).collect()
    }

    pub fn role_index(&self, name: &str) -> Result<usize> {
        self.role_names()
            .iter()
            .position(|r| *r == name)
            .ok_or_else(|| Error::UnknownRole(name.to_string()))
    }

    #[inline]
    pub fn tuple_digest(&self, rel: RelId, t: &[u32]) -> u64 {
        mix64(self.rel_seeds[rel] ^ hash_tuple(t).rotate_left(17))
    }

    /// Sorts, deduplicates and hashes a fact list.
    pub fn make_state(&self, mut facts: Vec<(RelId, Tuple)>) -> GameState {
        facts.sort_unstable();
        facts.dedup();
        let mut out = Vec::with_capacity(facts.len() * 4);
        let mut hash = 0u64;
        for (r, t) in &facts {
            out.push(*r as u32);
            out.extend_from_slice(t);
            hash ^= self.tuple_digest(*r, t);
        }
        GameState { facts: out, hash }
    }

    pub fn state_facts<'a>(&'a self, s: &'a GameState) -> impl Iterator<Item = (RelId, &'a [u32])> + 'a {
        let mut i = 0;
        std::iter::from_fn(move || {
            if i >= s.facts.len() {
                return None;
            }
            let r = s.facts[i] as usize;
            let n = self.rels[r].arity;
            let t = &s.facts[i + 1..i + 1 + n];
            i += 1 + n;
            Some((r, t))
        })
    }

    pub fn fact_term(&self, rel: RelId, t: &[u32]) -> Term {
        let args: Vec<Term> = t.iter().map(|&c| Term::Const(self.consts.name(c).to_string())).collect();
        unmangle(&self.rels[rel].name, &args).expect("relation names unmangle")
    }

    pub fn state_terms(&self, s: &GameState) -> Vec<Term> {
        self.state_facts(s).map(|(r, t)| self.fact_term(r, t)).collect()
    }

    /// Builds a state from ground sentences; unknown relations are errors.
    pub fn state_from_terms(&self, ts: &[Term]) -> Result<GameState> {
        let mut facts = Vec::new();
        for t in ts {
            let (m, args) = mangle(t);
            let rel = *self
                .rel_ids
                .get(&m.name)
                .filter(|&&r| self.rels[r].class == FlatClass::Dynamic)
                .ok_or_else(|| Error::Undefined(m.name.clone()))?;
            facts.push((rel, self.const_ids(&args)?));
        }
        Ok(self.make_state(facts))
    }

    fn const_ids(&self, args: &[Term]) -> Result<Tuple> {
        args.iter()
            .map(|a| match a {
                Term::Const(c) => self.consts.id(c).ok_or_else(|| Error::Undefined(c.clone())),
                _ => Err(Error::Unsupported(format!("non-constant argument {a}"))),
            })
            .collect()
    }

    pub fn move_term(&self, role: usize, m: &Move) -> Term {
        let shape = &self.shapes[m.shape as usize];
        let mut args = vec![Term::Const(self.consts.name(self.roles[role]).to_string())];
        args.extend(m.args.iter().map(|&c| Term::Const(self.consts.name(c).to_string())));
        let t = unmangle(&shape.legal_rel, &args).expect("legal relation unmangles");
        t.args()[1].clone()
    }

    pub fn parse_move(&self, role: usize, t: &Term) -> Result<Move> {
        let legal = Term::Compound(
            "legal".into(),
            vec![Term::Const(self.consts.name(self.roles[role]).to_string()), t.clone()],
        );
        let (m, args) = mangle(&legal);
        let shape = self
            .shapes
            .iter()
            .position(|s| s.legal_rel == m.name)
            .ok_or_else(|| Error::Undefined(format!("move shape of {t}")))?;
        Ok(Move {
            shape: shape as u16,
            args: self.const_ids(&args[1..])?.into_iter().collect(),
        })
    }
}

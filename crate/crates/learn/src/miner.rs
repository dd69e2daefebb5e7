//! Feature mining from game records: phi scoring and two-pool itemsets.

use std::collections::{BTreeMap, BTreeSet};

use ggp_core::board::{extract_board_pieces, extract_move_coords, BoardSpec};
use ggp_core::term::{parse_term, Term};
use ggp_knowledge::feature::{instantiate_features, state_metafacts};
use ggp_knowledge::{Feature, FeatureKind, KnowledgeFile, MetaFact, Parameters, PlayerKnowledge};
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::error::{LearnError, Result};
use crate::record::GameRecord;

/// Rows: feature present (0) / absent (1). Columns: winning (0) / losing (1).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContingencyTable {
    pub n00: u64,
    pub n01: u64,
    pub n10: u64,
    pub n11: u64,
}

impl ContingencyTable {
    pub fn new(n00: u64, n01: u64, n10: u64, n11: u64) -> ContingencyTable {
        ContingencyTable { n00, n01, n10, n11 }
    }

    /// (phi, degenerate). A zero marginal gives (0, true).
    pub fn phi_checked(&self) -> (f64, bool) {
        let (a, b, c, d) = (self.n00 as f64, self.n01 as f64, self.n10 as f64, self.n11 as f64);
        // grouped so that swapping columns gives the same value bit for bit
        let den = ((a + b) * (c + d)) * ((a + c) * (b + d));
        if den == 0.0 {
            return (0.0, true);
        }
        ((a * d - b * c) / den.sqrt(), false)
    }

    pub fn phi(&self) -> f64 {
        self.phi_checked().0
    }

    /// Winning and losing columns exchanged.
    pub fn swap_columns(&self) -> ContingencyTable {
        ContingencyTable { n00: self.n01, n01: self.n00, n10: self.n11, n11: self.n10 }
    }
}

pub fn phi(t: &ContingencyTable) -> f64 {
    t.phi()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Win,
    Loss,
    Neither,
}

/// Win iff the role's score strictly exceeds every other role's; loss iff
/// strictly below every other.
pub fn outcome(r: &GameRecord, role: &str) -> Outcome {
    let Some(me) = r.score(role) else { return Outcome::Neither };
    let others: Vec<u32> = r.players.iter().filter(|p| p.0 != role).map(|p| p.1).collect();
    if others.is_empty() {
        return Outcome::Neither;
    }
    if others.iter().all(|&o| me > o) {
        Outcome::Win
    } else if others.iter().all(|&o| me < o) {
        Outcome::Loss
    } else {
        Outcome::Neither
    }
}

/// One spatial move of the role in a decided record.
#[derive(Clone, Debug)]
pub struct Sample {
    pub win: bool,
    pub features: BTreeSet<FeatureKind>,
    pub basket: BTreeSet<MetaFact>,
}

fn parse_all(texts: &[String], id: &str) -> Result<Vec<Term>> {
    texts
        .iter()
        .map(|t| parse_term(t).map_err(|e| LearnError::Record(format!("match {id}: {t}: {e}"))))
        .collect()
}

fn move_coords(spec: &BoardSpec, text: &str, id: &str) -> Result<Option<(String, Vec<f64>)>> {
    let t = parse_term(text).map_err(|e| LearnError::Record(format!("match {id}: {text}: {e}")))?;
    // moves that do not fit the play pattern are not spatial
    Ok(extract_move_coords(spec, &t).ok().flatten())
}

fn record_samples(r: &GameRecord, role: &str, spec: &BoardSpec) -> Result<Vec<Sample>> {
    let win = match outcome(r, role) {
        Outcome::Win => true,
        Outcome::Loss => false,
        Outcome::Neither => return Ok(Vec::new()),
    };
    let mut out = Vec::new();
    let mut last: Vec<Vec<f64>> = Vec::new();
    for st in &r.states {
        let mine = st.moves.iter().find(|m| m.0 == role);
        if let Some((_, mv)) = mine {
            if let Some(cand) = move_coords(spec, mv, &r.id)? {
                let facts = parse_all(&st.facts, &r.id)?;
                let pieces = extract_board_pieces(spec, &facts)
                    .map_err(|e| LearnError::Record(format!("match {}: {e}", r.id)))?;
                out.push(Sample {
                    win,
                    features: instantiate_features(spec, &pieces, &last, &cand).into_iter().collect(),
                    basket: state_metafacts(spec, &pieces),
                });
            }
        }
        last.clear();
        for (_, mv) in &st.moves {
            if let Some((_, at)) = move_coords(spec, mv, &r.id)? {
                last.push(at);
            }
        }
    }
    Ok(out)
}

/// Samples of every decided record, in record order.
pub fn extract_samples(records: &[GameRecord], role: &str, spec: &BoardSpec) -> Result<Vec<Sample>> {
    let per: Vec<Vec<Sample>> = records
        .par_iter()
        .map(|r| record_samples(r, role, spec))
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Candidate feature occurrence counts split by outcome.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeaturePool {
    pub n_win: u64,
    pub n_lose: u64,
    pub winning: BTreeMap<FeatureKind, u64>,
    pub losing: BTreeMap<FeatureKind, u64>,
}

impl FeaturePool {
    pub fn from_samples(samples: &[Sample]) -> FeaturePool {
        let mut p = FeaturePool::default();
        for s in samples {
            let (n, m) = if s.win { (&mut p.n_win, &mut p.winning) } else { (&mut p.n_lose, &mut p.losing) };
            *n += 1;
            for f in &s.features {
                *m.entry(f.clone()).or_default() += 1;
            }
        }
        p
    }

    pub fn table(&self, f: &FeatureKind) -> ContingencyTable {
        let w = self.winning.get(f).copied().unwrap_or(0);
        let l = self.losing.get(f).copied().unwrap_or(0);
        ContingencyTable::new(w, l, self.n_win - w, self.n_lose - l)
    }

    pub fn kinds(&self) -> BTreeSet<&FeatureKind> {
        self.winning.keys().chain(self.losing.keys()).collect()
    }
}

pub fn extract_candidates(records: &[GameRecord], role: &str, spec: &BoardSpec) -> Result<FeaturePool> {
    Ok(FeaturePool::from_samples(&extract_samples(records, role, spec)?))
}

fn by_weight(v: &mut [Feature]) {
    v.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.kind.cmp(&b.kind)));
}

/// (winning, losing) lists with |phi| > r, each sorted by weight descending.
/// ItemsetsOnly is handled by `itemsets_only_feature`.
pub fn mine_features(pool: &FeaturePool, r: f64) -> (Vec<Feature>, Vec<Feature>) {
    let (mut win, mut lose) = (Vec::new(), Vec::new());
    for k in pool.kinds() {
        if *k == FeatureKind::ItemsetsOnly {
            continue;
        }
        let p = pool.table(k).phi();
        if p.abs() > r {
            let f = Feature::new(k.clone(), p.abs());
            if p > 0.0 { win.push(f) } else { lose.push(f) }
        }
    }
    by_weight(&mut win);
    by_weight(&mut lose);
    (win, lose)
}

type Ids = SmallVec<[u32; 8]>;

fn contains(basket: &[u32], set: &[u32]) -> bool {
    let mut i = 0;
    for &x in set {
        while i < basket.len() && basket[i] < x {
            i += 1;
        }
        if i == basket.len() || basket[i] != x {
            return false;
        }
        i += 1;
    }
    true
}

fn subsets(b: &[u32], k: usize, start: usize, cur: &mut Ids, f: &mut impl FnMut(&Ids)) {
    if cur.len() == k {
        f(cur);
        return;
    }
    let need = k - cur.len();
    for i in start..b.len() {
        if b.len() - i < need {
            break;
        }
        cur.push(b[i]);
        subsets(b, k, i + 1, cur, f);
        cur.pop();
    }
}

/// Two-pool itemset mining over basket references. Itemsets come back
/// sorted internally and ordered by (size, items).
pub fn mine_dual_itemsets_ref<T: Ord + Clone>(
    d: &[&BTreeSet<T>],
    u: &[&BTreeSet<T>],
    eps_d: usize,
    eps_u: usize,
    n_naive: usize,
    n_max: usize,
) -> Vec<Vec<T>> {
    let eps_d = eps_d.max(1);
    if d.len() < eps_d || n_max == 0 {
        return Vec::new();
    }
    // an itemset with an item below eps_d in D cannot reach eps_d itself
    let mut item_d: BTreeMap<&T, usize> = BTreeMap::new();
    for b in d {
        for x in b.iter() {
            *item_d.entry(x).or_default() += 1;
        }
    }
    let items: Vec<&T> = item_d.into_iter().filter(|&(_, c)| c >= eps_d).map(|(x, _)| x).collect();
    let id = |x: &T| items.binary_search(&x).ok().map(|i| i as u32);
    let encode = |b: &&BTreeSet<T>| -> Vec<u32> { b.iter().filter_map(id).collect() };
    let dd: Vec<Vec<u32>> = d.iter().map(encode).collect();
    let uu: Vec<Vec<u32>> = u.iter().map(encode).collect();
    let count = |pool: &[Vec<u32>], s: &[u32]| pool.iter().filter(|b| contains(b, s)).count();

    let mut out: Vec<Ids> = Vec::new();
    let mut prev: Vec<Ids> = Vec::new();
    for k in 1..=n_naive.min(n_max) {
        let mut counts: FxHashMap<Ids, usize> = FxHashMap::default();
        for b in &dd {
            subsets(b, k, 0, &mut SmallVec::new(), &mut |s| *counts.entry(s.clone()).or_default() += 1);
        }
        let mut level: Vec<Ids> = counts
            .into_iter()
            .filter(|(s, c)| *c >= eps_d && count(&uu, s) <= eps_u)
            .map(|(s, _)| s)
            .collect();
        level.sort();
        out.extend(level.iter().cloned());
        prev = level;
    }
    for _ in n_naive + 1..=n_max {
        if prev.is_empty() {
            break;
        }
        let singles: BTreeSet<u32> = prev.iter().flatten().copied().collect();
        let mut cands: BTreeSet<Ids> = BTreeSet::new();
        for a in &prev {
            for &b in &singles {
                if !a.contains(&b) {
                    let mut c = a.clone();
                    let at = c.partition_point(|&x| x < b);
                    c.insert(at, b);
                    cands.insert(c);
                }
            }
        }
        prev = cands
            .into_iter()
            .filter(|c| count(&dd, c) >= eps_d && count(&uu, c) <= eps_u)
            .collect();
        out.extend(prev.iter().cloned());
    }
    out.into_iter()
        .map(|s| s.iter().map(|&i| items[i as usize].clone()).collect())
        .collect()
}

pub fn mine_dual_itemsets<T: Ord + Clone>(
    d: &[BTreeSet<T>],
    u: &[BTreeSet<T>],
    eps_d: usize,
    eps_u: usize,
    n_naive: usize,
    n_max: usize,
) -> Vec<Vec<T>> {
    let d: Vec<&BTreeSet<T>> = d.iter().collect();
    let u: Vec<&BTreeSet<T>> = u.iter().collect();
    mine_dual_itemsets_ref(&d, &u, eps_d, eps_u, n_naive, n_max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinerConfig {
    /// Confidence threshold on |phi|.
    pub r: f64,
    /// Fraction of D an itemset must reach.
    pub eps_d: f64,
    /// Fraction of U an itemset may not exceed.
    pub eps_u: f64,
    pub n_naive: usize,
    pub n_max: usize,
    /// Itemsets kept per feature.
    pub max_itemsets: usize,
    /// Features per list that get itemsets; the rest are dropped.
    pub max_features: usize,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig { r: 0.05, eps_d: 0.25, eps_u: 0.1, n_naive: 3, n_max: 5, max_itemsets: 4, max_features: 64 }
    }
}

impl MinerConfig {
    pub fn eps_d_count(&self, d: usize) -> usize {
        ((self.eps_d * d as f64).ceil() as usize).max(1)
    }

    pub fn eps_u_count(&self, u: usize) -> usize {
        (self.eps_u * u as f64).floor() as usize
    }

    /// Mined itemsets ranked by count_d − count_u, then by size, capped.
    pub fn itemsets(&self, d: &[&BTreeSet<MetaFact>], u: &[&BTreeSet<MetaFact>]) -> Vec<Vec<MetaFact>> {
        let found = mine_dual_itemsets_ref(
            d,
            u,
            self.eps_d_count(d.len()),
            self.eps_u_count(u.len()),
            self.n_naive,
            self.n_max,
        );
        let support = |pool: &[&BTreeSet<MetaFact>], s: &[MetaFact]| {
            pool.iter().filter(|b| s.iter().all(|x| b.contains(x))).count() as i64
        };
        let mut ranked: Vec<(i64, Vec<MetaFact>)> =
            found.into_iter().map(|s| (support(d, &s) - support(u, &s), s)).collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.len().cmp(&b.1.len())).then_with(|| a.1.cmp(&b.1)));
        ranked.into_iter().take(self.max_itemsets).map(|(_, s)| s).collect()
    }
}

/// Backs each feature with itemsets: D = baskets where it occurred on the
/// list's side, U = where it occurred on the other side.
pub fn attach_itemsets(features: &mut [Feature], samples: &[Sample], winning: bool, cfg: &MinerConfig) {
    features.par_iter_mut().for_each(|f| {
        let (mut d, mut u) = (Vec::new(), Vec::new());
        for s in samples.iter().filter(|s| s.features.contains(&f.kind)) {
            if s.win == winning { d.push(&s.basket) } else { u.push(&s.basket) }
        }
        f.itemsets = cfg.itemsets(&d, &u);
    });
}

/// ItemsetsOnly for one side: itemsets from all side baskets against the
/// other side, weighted by |phi| of the gated presence.
pub fn itemsets_only_feature(samples: &[Sample], winning: bool, cfg: &MinerConfig) -> Option<Feature> {
    let (d, u): (Vec<&Sample>, Vec<&Sample>) = samples.iter().partition(|s| s.win == winning);
    let sets = cfg.itemsets(
        &d.iter().map(|s| &s.basket).collect::<Vec<_>>(),
        &u.iter().map(|s| &s.basket).collect::<Vec<_>>(),
    );
    if sets.is_empty() {
        return None;
    }
    let hit = |s: &Sample| sets.iter().any(|set| set.iter().all(|m| s.basket.contains(m)));
    let mut t = ContingencyTable::default();
    for s in samples {
        match (hit(s), s.win) {
            (true, true) => t.n00 += 1,
            (true, false) => t.n01 += 1,
            (false, true) => t.n10 += 1,
            (false, false) => t.n11 += 1,
        }
    }
    let p = t.phi();
    let side = if winning { p } else { -p };
    (side > cfg.r).then(|| Feature { kind: FeatureKind::ItemsetsOnly, weight: side, itemsets: sets })
}

/// Full pipeline for one role: (winning, losing) lists.
pub fn mine_role(samples: &[Sample], cfg: &MinerConfig) -> (Vec<Feature>, Vec<Feature>) {
    let pool = FeaturePool::from_samples(samples);
    let (mut win, mut lose) = mine_features(&pool, cfg.r);
    win.truncate(cfg.max_features);
    lose.truncate(cfg.max_features);
    attach_itemsets(&mut win, samples, true, cfg);
    attach_itemsets(&mut lose, samples, false, cfg);
    for (list, side) in [(&mut win, true), (&mut lose, false)] {
        if let Some(f) = itemsets_only_feature(samples, side, cfg) {
            list.push(f);
            by_weight(list);
        }
    }
    (win, lose)
}

/// Mines every role into a knowledge file with the given parameters.
pub fn mine_knowledge(
    records: &[GameRecord],
    roles: &[&str],
    spec: &BoardSpec,
    cfg: &MinerConfig,
    parameters: Parameters,
) -> Result<KnowledgeFile> {
    let mut k = KnowledgeFile { parameters, players: Vec::new() };
    for role in roles {
        let samples = extract_samples(records, role, spec)?;
        let (winning, losing) = mine_role(&samples, cfg);
        k.players.push(PlayerKnowledge { role: role.to_string(), winning, losing });
    }
    Ok(k)
}

/// Classes a feature list draws from, for reporting.
pub fn class_counts(list: &[Feature]) -> [usize; 7] {
    let mut c = [0; 7];
    for f in list {
        c[f.kind.class().index()] += 1;
    }
    c
}

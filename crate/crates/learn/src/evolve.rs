//! Knowledge evolution: a simple genetic algorithm over knowledge files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ggp_core::CompiledGame;
use ggp_knowledge::{Feature, KnowledgeFile, Parameters, PlayerKnowledge};
use ggp_player::{match_points, play_match, Agent, Budget, Eviction, MatchResult, SearchConfig, UctAgent};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;

use crate::error::{LearnError, Result};
use crate::miner::{extract_samples, mine_role, MinerConfig};
use crate::record::{load_dir, GameRecord};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeneKind {
    Real { lo: f64, hi: f64 },
    Natural { lo: u32, hi: u32 },
    Boolean,
}

impl GeneKind {
    fn clamp(self, v: f64) -> f64 {
        match self {
            GeneKind::Real { lo, hi } => v.clamp(lo, hi),
            GeneKind::Natural { lo, hi } => v.round().clamp(lo as f64, hi as f64),
            GeneKind::Boolean => (v != 0.0) as u8 as f64,
        }
    }

    fn random<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            GeneKind::Real { lo, hi } => rng.gen_range(lo..=hi),
            GeneKind::Natural { lo, hi } => rng.gen_range(lo..=hi) as f64,
            GeneKind::Boolean => rng.gen_bool(0.5) as u8 as f64,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Gene {
    pub name: &'static str,
    pub kind: GeneKind,
}

const CLASS_NAMES: [&str; 7] =
    ["Proximity", "BorderDist", "AbsMove", "AbsMoveInArea", "KNearest", "KNearest1D", "ItemsetsOnly"];

const fn real(name: &'static str, lo: f64, hi: f64) -> Gene {
    Gene { name, kind: GeneKind::Real { lo, hi } }
}

const fn boolean(name: &'static str) -> Gene {
    Gene { name, kind: GeneKind::Boolean }
}

/// Gene order: size, base, 7 class weights, learning factor, winning and
/// losing weight, impacts, widening, 7 class switches, 7 itemset switches,
/// then the five global switches.
pub fn gene_table() -> Vec<Gene> {
    let mut g = vec![
        Gene { name: "MaxKnowledgeSize", kind: GeneKind::Natural { lo: 4, hi: 64 } },
        real("BaseValue", 0.1, 2.0),
    ];
    g.extend(CLASS_NAMES.iter().map(|&n| real(n, 0.0, 2.0)));
    g.extend([
        real("LearningFactor", 0.0, 1.0),
        real("WinningWeight", 0.0, 2.0),
        real("LoosingWeight", 0.0, 2.0),
        real("SelectionImpact", 0.0, 2.0),
        real("SimulationImpact", 0.0, 4.0),
        real("WideningC", 0.5, 4.0),
        real("WideningAlpha", 0.1, 0.9),
    ]);
    g.extend(CLASS_NAMES.iter().map(|&n| boolean(n)));
    g.extend(CLASS_NAMES.iter().map(|&n| boolean(n)));
    g.extend(
        [
            "ItemsetsInSelection",
            "ItemsetsInSimulation",
            "ProgressiveWidening",
            "FirstFeatureScoring",
            "FeaturesInSelection",
        ]
        .map(boolean),
    );
    g
}

pub const N_GENES: usize = 35;

#[derive(Clone, Debug, PartialEq)]
pub struct Chromosome {
    /// Values in `gene_table` order; booleans as 0/1.
    pub genes: Vec<f64>,
    pub players: Vec<PlayerKnowledge>,
}

fn bools(v: &[f64]) -> [bool; 7] {
    std::array::from_fn(|i| v[i] != 0.0)
}

fn by_weight(v: &mut [Feature]) {
    v.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.kind.cmp(&b.kind)));
}

impl Chromosome {
    pub fn from_parameters(p: &Parameters, players: Vec<PlayerKnowledge>) -> Chromosome {
        let b = |x: bool| x as u8 as f64;
        let mut g = vec![p.max_knowledge_size as f64, p.base_value];
        g.extend(p.class_weights);
        g.extend([
            p.learning_factor,
            p.winning_weight,
            p.losing_weight,
            p.selection_impact,
            p.simulation_impact,
            p.widening_c,
            p.widening_alpha,
        ]);
        g.extend(p.class_enabled.map(b));
        g.extend(p.class_itemsets.map(b));
        g.extend(
            [
                p.itemsets_in_selection,
                p.itemsets_in_simulation,
                p.progressive_widening,
                p.first_feature,
                p.features_in_selection,
            ]
            .map(b),
        );
        Chromosome { genes: g, players }
    }

    pub fn parameters(&self) -> Parameters {
        let g = &self.genes;
        Parameters {
            max_knowledge_size: g[0] as u32,
            base_value: g[1],
            class_weights: std::array::from_fn(|i| g[2 + i]),
            learning_factor: g[9],
            winning_weight: g[10],
            losing_weight: g[11],
            selection_impact: g[12],
            simulation_impact: g[13],
            widening_c: g[14],
            widening_alpha: g[15],
            class_enabled: bools(&g[16..23]),
            class_itemsets: bools(&g[23..30]),
            itemsets_in_selection: g[30] != 0.0,
            itemsets_in_simulation: g[31] != 0.0,
            progressive_widening: g[32] != 0.0,
            first_feature: g[33] != 0.0,
            features_in_selection: g[34] != 0.0,
        }
    }

    pub fn n_max(&self) -> usize {
        self.genes[0] as usize
    }

    pub fn random<R: Rng>(roles: &[&str], rng: &mut R) -> Chromosome {
        Chromosome {
            genes: gene_table().iter().map(|g| g.kind.random(rng)).collect(),
            players: roles
                .iter()
                .map(|r| PlayerKnowledge { role: r.to_string(), ..Default::default() })
                .collect(),
        }
    }

    pub fn to_knowledge(&self) -> KnowledgeFile {
        KnowledgeFile { parameters: self.parameters(), players: self.players.clone() }
    }

    pub fn from_knowledge(k: &KnowledgeFile) -> Chromosome {
        let mut c = Chromosome::from_parameters(&k.parameters, k.players.clone());
        let table = gene_table();
        for (v, g) in c.genes.iter_mut().zip(&table) {
            *v = g.kind.clamp(*v);
        }
        c.truncate();
        c
    }

    /// Sorts every list by weight and cuts it to the size gene.
    pub fn truncate(&mut self) {
        let n = self.n_max();
        for p in &mut self.players {
            for l in [&mut p.winning, &mut p.losing] {
                by_weight(l);
                l.truncate(n);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub fitness: Option<f64>,
    pub elo: f64,
}

pub const ELO_START: f64 = 1500.0;

impl Individual {
    pub fn new(chromosome: Chromosome) -> Individual {
        Individual { chromosome, fitness: None, elo: ELO_START }
    }
}

pub fn init_population(n: usize, roles: &[&str], seed: u64) -> Vec<Individual> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Individual::new(Chromosome::random(roles, &mut rng))).collect()
}

/// Unique by `same_as` keeping the heavier copy, heaviest first.
fn merge_lists(a: &[Feature], b: &[Feature], n: usize) -> Vec<Feature> {
    let mut all: Vec<Feature> = a.iter().chain(b).cloned().collect();
    by_weight(&mut all);
    let mut out: Vec<Feature> = Vec::new();
    for f in all {
        if out.len() == n {
            break;
        }
        if !out.iter().any(|o| o.same_as(&f)) {
            out.push(f);
        }
    }
    out
}

pub fn uniform_crossover<R: Rng>(a: &Chromosome, b: &Chromosome, rate: f64, rng: &mut R) -> (Chromosome, Chromosome) {
    let (mut x, mut y) = (a.clone(), b.clone());
    if !rng.gen_bool(rate.clamp(0.0, 1.0)) {
        return (x, y);
    }
    for i in 0..x.genes.len() {
        if rng.gen_bool(0.5) {
            std::mem::swap(&mut x.genes[i], &mut y.genes[i]);
        }
    }
    for child in [&mut x, &mut y] {
        let n = child.n_max();
        for (i, p) in child.players.iter_mut().enumerate() {
            let (pa, pb) = (&a.players[i], &b.players[i]);
            p.winning = merge_lists(&pa.winning, &pb.winning, n);
            p.losing = merge_lists(&pa.losing, &pb.losing, n);
        }
    }
    (x, y)
}

pub fn mutate<R: Rng>(c: &Chromosome, rate: f64, rng: &mut R) -> Chromosome {
    let mut out = c.clone();
    let rate = rate.clamp(0.0, 1.0);
    for (v, g) in out.genes.iter_mut().zip(gene_table()) {
        if !rng.gen_bool(rate) {
            continue;
        }
        *v = match g.kind {
            GeneKind::Boolean => 1.0 - *v,
            GeneKind::Natural { .. } => *v + if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
            GeneKind::Real { lo, hi } => {
                let n = Normal::new(0.0, 0.1 * (hi - lo)).expect("positive sigma");
                *v + n.sample(rng)
            }
        };
        *v = g.kind.clamp(*v);
    }
    out.truncate();
    out
}

/// Linear rank selection; `fitness` indexed by individual.
pub fn rank_weights(fitness: &[f64], pressure: f64) -> Vec<f64> {
    let n = fitness.len();
    if n == 1 {
        return vec![1.0];
    }
    let mut order: Vec<usize> = (0..n).collect();
    // worst first; ties keep the lower index as the better one
    order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(b.cmp(&a)));
    let mut w = vec![0.0; n];
    for (rank, &i) in order.iter().enumerate() {
        w[i] = (2.0 - pressure + 2.0 * (pressure - 1.0) * rank as f64 / (n - 1) as f64) / n as f64;
    }
    w
}

/// Indices ordered best first, lower index first on ties.
pub fn ranking(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    order
}

pub fn elo_update(ra: f64, rb: f64, result: f64, k: f64) -> (f64, f64) {
    let ea = 1.0 / (1.0 + 10f64.powf((rb - ra) / 400.0));
    let d = k * (result - ea);
    (ra + d, rb - d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TournamentResult {
    pub fitness: Vec<f64>,
    /// Points per individual in match order, for Elo.
    pub results: Vec<Vec<f64>>,
    pub matches: usize,
}

/// Round-halving scoring. `run(ind, j)` plays match `j` of an
/// individual and returns its points, or None on failure.
pub fn tournament_score<F>(n: usize, m: usize, run: F) -> TournamentResult
where
    F: Fn(usize, usize) -> Option<f64> + Sync,
{
    let mut results: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut alive: Vec<usize> = (0..n).collect();
    let mut matches = 0;
    let fit = |r: &Vec<f64>| if r.is_empty() { 0.0 } else { r.iter().sum::<f64>() / r.len() as f64 };
    while !alive.is_empty() {
        let jobs: Vec<(usize, usize)> = alive
            .iter()
            .flat_map(|&i| {
                let base = results[i].len();
                (base..base + m).map(move |j| (i, j))
            })
            .collect();
        let out: Vec<(usize, f64, usize)> = jobs
            .par_iter()
            .map(|&(i, j)| match run(i, j) {
                Some(p) => (i, p, 1),
                None => (i, run(i, j).unwrap_or(0.0), 2),
            })
            .collect();
        for (i, p, tries) in out {
            results[i].push(p);
            matches += tries;
        }
        if alive.len() == 1 {
            break;
        }
        let f: Vec<f64> = alive.iter().map(|&i| fit(&results[i])).collect();
        let keep = alive.len().div_ceil(2);
        alive = ranking(&f).into_iter().take(keep).map(|k| alive[k]).collect();
        alive.sort();
        if alive.len() == 1 {
            break;
        }
    }
    TournamentResult { fitness: results.iter().map(fit).collect(), results, matches }
}

/// Scheduled matches of a halving tournament (no failures).
pub fn tournament_matches(n: usize, m: usize) -> usize {
    let (mut alive, mut total) = (n, 0);
    while alive > 0 {
        total += alive * m;
        if alive == 1 {
            break;
        }
        alive = alive.div_ceil(2);
        if alive == 1 {
            break;
        }
    }
    total
}

pub fn half_budget(b: Budget) -> Budget {
    match b {
        Budget::Playouts(n) => Budget::Playouts((n / 2).max(1)),
        Budget::Time(t) => Budget::Time(t / 2),
    }
}

/// Match-local seed from its coordinates.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
    }
    h
}

#[derive(Clone, Debug)]
pub struct MatchSetup {
    pub budget: Budget,
    pub start_budget: Option<Budget>,
    pub tt_capacity: Option<usize>,
}

/// One match of a (possibly knowledge-backed) agent as `role` against
/// bare UCT opponents on half the budget.
pub fn play_vs_baseline(
    game: &Arc<CompiledGame>,
    knowledge: Option<Arc<KnowledgeFile>>,
    role: usize,
    setup: &MatchSetup,
    seed: u64,
) -> Result<MatchResult> {
    let n = game.roles.len();
    let mut agents: Vec<Box<dyn Agent>> = (0..n)
        .map(|r| {
            let mine = r == role;
            let cfg = SearchConfig {
                budget: if mine { setup.budget } else { half_budget(setup.budget) },
                knowledge: if mine { knowledge.clone() } else { None },
                tt_capacity: setup.tt_capacity,
                eviction: Eviction::Lru,
                seed: mix_seed(&[seed, r as u64]),
                ..SearchConfig::default()
            };
            Box::new(UctAgent::new(game.clone(), r, cfg)) as Box<dyn Agent>
        })
        .collect();
    Ok(play_match(game.clone(), &mut agents, setup.start_budget)?)
}

#[derive(Clone, Debug)]
pub struct EvolveConfig {
    pub population: usize,
    pub generations: usize,
    pub matches_per_round: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elitism: f64,
    pub fresh: f64,
    pub rank_pressure: f64,
    /// No-knowledge matches recorded before the first generation.
    pub seed_matches: usize,
    pub setup: MatchSetup,
    pub miner: MinerConfig,
    pub elo_k: f64,
    pub seed: u64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            population: 24,
            generations: 10,
            matches_per_round: 10,
            crossover_rate: 0.75,
            mutation_rate: 0.015,
            elitism: 0.15,
            fresh: 0.10,
            rank_pressure: 1.7,
            seed_matches: 48,
            setup: MatchSetup { budget: Budget::Playouts(1000), start_budget: None, tt_capacity: None },
            miner: MinerConfig::default(),
            elo_k: 32.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Clone, Debug)]
pub struct EvolveOutcome {
    pub population: Vec<Individual>,
    pub best: KnowledgeFile,
    pub best_fitness: f64,
    pub log: Vec<GenStats>,
}

pub const REQUIRED_RELATIONS: &str = "boardboundaries, boardfunctor, boardpattern, playfunctor, playpattern";

/// Adopts each mined feature with probability equal to the learning
/// factor, replacing an equal feature's weight, then truncates.
pub fn update_using_policy<R: Rng>(c: &mut Chromosome, mined: &[PlayerKnowledge], rng: &mut R) {
    let lf = c.parameters().learning_factor.clamp(0.0, 1.0);
    for p in &mut c.players {
        let Some(m) = mined.iter().find(|m| m.role == p.role) else { continue };
        for (own, new) in [(&mut p.winning, &m.winning), (&mut p.losing, &m.losing)] {
            for f in new {
                if !rng.gen_bool(lf) {
                    continue;
                }
                match own.iter_mut().find(|o| o.same_as(f)) {
                    Some(o) => o.weight = f.weight,
                    None => own.push(f.clone()),
                }
            }
        }
    }
    c.truncate();
}

struct RunDir {
    root: PathBuf,
}

impl RunDir {
    fn records(&self, g: usize) -> PathBuf {
        self.root.join("records").join(format!("gen-{g}"))
    }

    fn knowledge(&self, g: usize) -> PathBuf {
        self.root.join("knowledge").join(format!("gen-{g}"))
    }

    /// Last generation whose scores were written.
    fn last_complete(&self) -> Option<usize> {
        let mut g = None;
        while self.knowledge(g.map_or(0, |x| x + 1)).join("scores.tsv").exists() {
            g = Some(g.map_or(0, |x| x + 1));
        }
        g
    }

    fn save_generation(&self, g: usize, pop: &[Individual]) -> Result<()> {
        let dir = self.knowledge(g);
        std::fs::create_dir_all(&dir)?;
        let mut scores = String::new();
        for (i, ind) in pop.iter().enumerate() {
            ind.chromosome.to_knowledge().save(&dir.join(format!("ind-{i}.xml")))?;
            let _ = writeln!(scores, "{i}\t{}\t{}", ind.fitness.unwrap_or(0.0), ind.elo);
        }
        std::fs::write(dir.join("scores.tsv"), scores)?;
        Ok(())
    }

    fn load_generation(&self, g: usize) -> Result<Vec<Individual>> {
        let dir = self.knowledge(g);
        let scores = std::fs::read_to_string(dir.join("scores.tsv"))?;
        let mut pop = Vec::new();
        for line in scores.lines().filter(|l| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = || LearnError::Config(format!("bad scores line {line:?} in generation {g}"));
            let [i, f, e] = cols[..] else { return Err(bad()) };
            let i: usize = i.parse().map_err(|_| bad())?;
            let k = KnowledgeFile::load(&dir.join(format!("ind-{i}.xml")))?;
            pop.push(Individual {
                chromosome: Chromosome::from_knowledge(&k),
                fitness: Some(f.parse().map_err(|_| bad())?),
                elo: e.parse().map_err(|_| bad())?,
            });
        }
        Ok(pop)
    }

    fn append_log(&self, s: &GenStats) -> Result<()> {
        let path = self.root.join("log.tsv");
        let mut text = if path.exists() {
            std::fs::read_to_string(&path)?
        } else {
            "generation\tbest\tmean\n".to_string()
        };
        let _ = writeln!(text, "{}\t{}\t{}", s.generation, s.best, s.mean);
        std::fs::write(path, text)?;
        Ok(())
    }

    fn read_log(&self) -> Result<Vec<GenStats>> {
        let path = self.root.join("log.tsv");
        if !path.exists() {
            return Ok(Vec::new());
        }
        let text = std::fs::read_to_string(path)?;
        Ok(text
            .lines()
            .skip(1)
            .filter_map(|l| {
                let c: Vec<&str> = l.split('\t').collect();
                Some(GenStats { generation: c.first()?.parse().ok()?, best: c.get(1)?.parse().ok()?, mean: c.get(2)?.parse().ok()? })
            })
            .collect())
    }
}

struct Evolver<'a> {
    game: Arc<CompiledGame>,
    cfg: &'a EvolveConfig,
    dir: Option<RunDir>,
    roles: Vec<String>,
}

impl Evolver<'_> {
    fn rng(&self, g: usize, stream: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix_seed(&[self.cfg.seed, g as u64, stream]))
    }

    fn save_records(&self, g: usize, recs: &[GameRecord]) -> Result<()> {
        if let Some(d) = &self.dir {
            let dir = d.records(g);
            std::fs::create_dir_all(&dir)?;
            for r in recs {
                r.save(&dir.join(format!("match-{}.xml", r.id)))?;
            }
        }
        Ok(())
    }

    fn seed_records(&self) -> Result<Vec<GameRecord>> {
        let n = self.cfg.seed_matches;
        let out: Vec<Option<GameRecord>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let seed = mix_seed(&[self.cfg.seed, u64::MAX, j as u64]);
                play_vs_baseline(&self.game, None, j % self.roles.len(), &self.cfg.setup, seed)
                    .ok()
                    .map(|m| GameRecord::from_match(&self.game, &format!("seed-{j}"), &m))
            })
            .collect();
        let recs: Vec<GameRecord> = out.into_iter().flatten().collect();
        self.save_records(0, &recs)?;
        Ok(recs)
    }

    fn mine(&self, recs: &[GameRecord]) -> Result<Vec<PlayerKnowledge>> {
        let spec = self.game.board().expect("checked board");
        self.roles
            .iter()
            .map(|r| {
                let samples = extract_samples(recs, r, spec)?;
                let (winning, losing) = mine_role(&samples, &self.cfg.miner);
                Ok(PlayerKnowledge { role: r.clone(), winning, losing })
            })
            .collect()
    }

    /// Scores a population and returns the generation's records.
    fn score(&self, g: usize, pop: &mut [Individual]) -> Result<Vec<GameRecord>> {
        let knows: Vec<Arc<KnowledgeFile>> = pop.iter().map(|i| Arc::new(i.chromosome.to_knowledge())).collect();
        let n_roles = self.roles.len();
        let recs = std::sync::Mutex::new(Vec::new());
        let t = tournament_score(pop.len(), self.cfg.matches_per_round.max(1), |i, j| {
            let seed = mix_seed(&[self.cfg.seed, g as u64, i as u64, j as u64]);
            let role = j % n_roles;
            let m = play_vs_baseline(&self.game, Some(knows[i].clone()), role, &self.cfg.setup, seed).ok()?;
            let rec = GameRecord::from_match(&self.game, &format!("i{i}-m{j}"), &m);
            recs.lock().expect("records lock").push(rec);
            Some(match_points(&m.goals, role))
        });
        for (ind, (f, res)) in pop.iter_mut().zip(t.fitness.iter().zip(&t.results)) {
            ind.fitness = Some(*f);
            for &p in res {
                ind.elo = elo_update(ind.elo, ELO_START, p, self.cfg.elo_k).0;
            }
        }
        let mut recs = recs.into_inner().expect("records lock");
        recs.sort_by(|a, b| a.id.cmp(&b.id));
        if recs.is_empty() {
            return Err(LearnError::NoRecords(g));
        }
        self.save_records(g, &recs)?;
        Ok(recs)
    }

    fn breed(&self, g: usize, pop: &[Individual]) -> Vec<Individual> {
        let n = pop.len();
        let mut rng = self.rng(g, 1);
        let fit: Vec<f64> = pop.iter().map(|i| i.fitness.unwrap_or(0.0)).collect();
        let n_elite = ((self.cfg.elitism * n as f64).ceil() as usize).min(n);
        let n_fresh = ((self.cfg.fresh * n as f64).floor() as usize).min(n - n_elite);
        let mut next: Vec<Individual> = ranking(&fit).into_iter().take(n_elite).map(|i| pop[i].clone()).collect();
        let w = WeightedIndex::new(rank_weights(&fit, self.cfg.rank_pressure)).expect("positive rank weights");
        let roles: Vec<&str> = self.roles.iter().map(String::as_str).collect();
        let mut children = Vec::new();
        while children.len() < n - n_elite - n_fresh {
            let (a, b) = (w.sample(&mut rng), w.sample(&mut rng));
            let (x, y) = uniform_crossover(&pop[a].chromosome, &pop[b].chromosome, self.cfg.crossover_rate, &mut rng);
            for c in [x, y] {
                children.push(Individual::new(mutate(&c, self.cfg.mutation_rate, &mut rng)));
            }
        }
        children.truncate(n - n_elite - n_fresh);
        next.extend(children);
        next.extend((0..n_fresh).map(|_| Individual::new(Chromosome::random(&roles, &mut rng))));
        next
    }

    fn finish(&self, pop: &mut [Individual], g: usize, log: &mut Vec<GenStats>) -> Result<()> {
        let f: Vec<f64> = pop.iter().map(|i| i.fitness.unwrap_or(0.0)).collect();
        let s = GenStats {
            generation: g,
            best: f.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: f.iter().sum::<f64>() / f.len() as f64,
        };
        if let Some(d) = &self.dir {
            d.save_generation(g, pop)?;
            d.append_log(&s)?;
        }
        log.push(s);
        Ok(())
    }
}

/// Runs (or resumes, when `run_dir` holds finished generations) the loop
/// and returns the best individual of the last generation.
pub fn evolve(game: Arc<CompiledGame>, cfg: &EvolveConfig, run_dir: Option<&Path>) -> Result<EvolveOutcome> {
    if game.board().is_none() {
        return Err(LearnError::Config(format!(
            "evolve needs the board extension; required relations: {REQUIRED_RELATIONS}"
        )));
    }
    if cfg.population == 0 {
        return Err(LearnError::Config("population must be at least 1".into()));
    }
    let ev = Evolver {
        roles: game.role_names().iter().map(|r| r.to_string()).collect(),
        game: game.clone(),
        cfg,
        dir: run_dir.map(|p| RunDir { root: p.to_path_buf() }),
    };
    let roles: Vec<&str> = ev.roles.iter().map(String::as_str).collect();
    let resumed = ev.dir.as_ref().and_then(|d| d.last_complete());
    let (mut pop, mut g, mut log, mut recs) = match (resumed, &ev.dir) {
        (Some(g), Some(d)) => {
            let pop = d.load_generation(g)?;
            if pop.len() != cfg.population {
                return Err(LearnError::Config(format!(
                    "run directory holds {} individuals, population is {}",
                    pop.len(),
                    cfg.population
                )));
            }
            (pop, g, d.read_log()?, load_dir(&d.records(g))?)
        }
        _ => {
            let mut pop = init_population(cfg.population, &roles, mix_seed(&[cfg.seed, 0]));
            let seeds = ev.seed_records()?;
            if !seeds.is_empty() {
                let mined = ev.mine(&seeds)?;
                let mut rng = ev.rng(0, 2);
                for ind in &mut pop {
                    update_using_policy(&mut ind.chromosome, &mined, &mut rng);
                }
            }
            let mut log = Vec::new();
            let mut recs = seeds;
            recs.extend(ev.score(0, &mut pop)?);
            ev.finish(&mut pop, 0, &mut log)?;
            (pop, 0, log, recs)
        }
    };
    while g < cfg.generations {
        let mined = ev.mine(&recs)?;
        let n_elite = ((cfg.elitism * pop.len() as f64).ceil() as usize).min(pop.len());
        let mut next = ev.breed(g + 1, &pop);
        let mut rng = ev.rng(g + 1, 2);
        for ind in next.iter_mut().skip(n_elite) {
            update_using_policy(&mut ind.chromosome, &mined, &mut rng);
        }
        g += 1;
        recs = ev.score(g, &mut next)?;
        ev.finish(&mut next, g, &mut log)?;
        pop = next;
    }
    let fit: Vec<f64> = pop.iter().map(|i| i.fitness.unwrap_or(0.0)).collect();
    let best = ranking(&fit)[0];
    Ok(EvolveOutcome {
        best: pop[best].chromosome.to_knowledge(),
        best_fitness: fit[best],
        population: pop,
        log,
    })
}

//! The `ggp` command line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ggp_core::compiler::{compile_plan, dump_plan};
use ggp_core::engine::bench_random_playouts;
use ggp_core::mgdl::{check_conformance, normalize, Verdict};
use ggp_core::{compile, parse_kif, Backend, CompiledGame, RuleSheet};
use ggp_knowledge::KnowledgeFile;
use ggp_learn::evolve::{evolve, play_vs_baseline, EvolveConfig, MatchSetup};
use ggp_learn::record::load_dir;
use ggp_learn::{mine_knowledge, GameRecord, LearnError, MinerConfig};
use ggp_player::{match_points, play_match, Agent, Budget, RandomAgent, SearchConfig, UctAgent};
use rayon::prelude::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_DEGRADED: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::NoRecords(_) | LearnError::Game(ggp_core::Error::IllegalMove { .. }) => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult = Result<i32, CliError>;

#[derive(Parser, Debug)]
#[command(name = "ggp", version, about = "General game playing toolchain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BackendArg {
    Table,
    Query,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Table => Backend::TableDriven,
            BackendArg::Query => Backend::QueryDriven,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct Sheet {
    #[arg(long)]
    pub rulesheet: PathBuf,
    #[arg(long, value_enum, default_value = "query")]
    pub backend: BackendArg,
}

#[derive(Args, Debug, Clone)]
pub struct Search {
    /// Playouts per move; replaces the clocks when given.
    #[arg(long)]
    pub playouts: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    pub startclock_ms: u64,
    #[arg(long, default_value_t = 1_000)]
    pub playclock_ms: u64,
    /// Scales both clocks.
    #[arg(long, default_value_t = 1.0)]
    pub clock_multiplier: f64,
    /// Transposition table capacity in nodes; unbounded when absent.
    #[arg(long)]
    pub tt_capacity: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl Search {
    fn setup(&self) -> Result<MatchSetup, CliError> {
        if let Some(n) = self.playouts {
            if n == 0 {
                return Err(CliError::Input("--playouts must be positive".into()));
            }
            return Ok(MatchSetup { budget: Budget::Playouts(n), start_budget: None, tt_capacity: self.tt_capacity });
        }
        if self.startclock_ms == 0 || self.playclock_ms == 0 || !(self.clock_multiplier > 0.0) {
            return Err(CliError::Input("clocks and multiplier must be positive".into()));
        }
        let ms = |x: u64| Duration::from_secs_f64(x as f64 * self.clock_multiplier / 1000.0);
        // keep a margin for move transmission
        let play = ms(self.playclock_ms).mul_f64(0.9);
        Ok(MatchSetup {
            budget: Budget::Time(play),
            start_budget: Some(Budget::Time(ms(self.startclock_ms).mul_f64(0.9))),
            tt_capacity: self.tt_capacity,
        })
    }
}

#[derive(Args, Debug, Clone)]
pub struct Mining {
    #[arg(long, default_value_t = MinerConfig::default().r)]
    pub phi_threshold: f64,
    /// Fraction of the desirable baskets an itemset must appear in.
    #[arg(long, default_value_t = MinerConfig::default().eps_d)]
    pub eps_d: f64,
    /// Fraction of the undesirable baskets an itemset may appear in.
    #[arg(long, default_value_t = MinerConfig::default().eps_u)]
    pub eps_u: f64,
}

impl Mining {
    fn config(&self) -> Result<MinerConfig, CliError> {
        let frac = |x: f64| (0.0..=1.0).contains(&x);
        if !(0.0..1.0).contains(&self.phi_threshold) || !frac(self.eps_d) || !frac(self.eps_u) {
            return Err(CliError::Input("--phi-threshold must lie in [0,1), --eps-d and --eps-u in [0,1]".into()));
        }
        Ok(MinerConfig { r: self.phi_threshold, eps_d: self.eps_d, eps_u: self.eps_u, ..Default::default() })
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Conformance check of a rule sheet.
    Check {
        #[arg(long)]
        rulesheet: PathBuf,
    },
    /// Compiles a rule sheet and prints its query plan.
    Compile {
        #[command(flatten)]
        sheet: Sheet,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random playout throughput.
    Bench {
        #[arg(long)]
        rulesheet: PathBuf,
        /// Both backends when absent.
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        #[arg(long, default_value_t = 1.0)]
        seconds: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Plays local matches.
    Play {
        #[command(flatten)]
        sheet: Sheet,
        #[command(flatten)]
        search: Search,
        /// One agent per role, comma separated: random, uct, uct+knowledge(PATH).
        #[arg(long, default_value = "uct,random")]
        agents: String,
        /// Knowledge for agents given as plain uct+knowledge.
        #[arg(long)]
        knowledge: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        matches: usize,
        /// Directory for match records.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mines knowledge from a directory of match records.
    Mine {
        #[command(flatten)]
        sheet: Sheet,
        #[arg(long)]
        records: PathBuf,
        #[command(flatten)]
        mining: Mining,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolves knowledge; resumes when the run directory holds generations.
    Evolve {
        #[command(flatten)]
        sheet: Sheet,
        #[command(flatten)]
        search: Search,
        #[command(flatten)]
        mining: Mining,
        #[arg(long, default_value_t = 24)]
        population: usize,
        #[arg(long, default_value_t = 10)]
        generations: usize,
        #[arg(long, default_value_t = 10)]
        matches_per_round: usize,
        /// No-knowledge matches recorded before generation 0.
        #[arg(long)]
        seed_matches: Option<usize>,
        /// Run directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Plays knowledge against a bare UCT agent on half the budget.
    Score {
        #[command(flatten)]
        sheet: Sheet,
        #[command(flatten)]
        search: Search,
        #[arg(long)]
        knowledge: PathBuf,
        #[arg(long, default_value_t = 10)]
        matches: usize,
    },
}

fn read_sheet(path: &Path) -> Result<RuleSheet, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_kif(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_game(s: &Sheet) -> Result<Arc<CompiledGame>, CliError> {
    let sheet = read_sheet(&s.rulesheet)?;
    compile(&sheet, s.backend.into()).map(Arc::new).map_err(|e| CliError::Input(e.to_string()))
}

fn load_knowledge(p: &Path) -> Result<Arc<KnowledgeFile>, CliError> {
    KnowledgeFile::load(p).map(Arc::new).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
}

fn game_name(p: &Path) -> String {
    let n = p.file_name().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
    n.strip_suffix(".kif").unwrap_or(&n).to_string()
}

fn write_out(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::Internal(e.to_string())),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AgentSpec {
    Random,
    Uct,
    UctKnowledge(Option<PathBuf>),
}

pub fn parse_agents(s: &str) -> Result<Vec<AgentSpec>, CliError> {
    s.split(',')
        .map(|a| {
            let a = a.trim();
            match a {
                "random" => Ok(AgentSpec::Random),
                "uct" => Ok(AgentSpec::Uct),
                "uct+knowledge" => Ok(AgentSpec::UctKnowledge(None)),
                _ => a
                    .strip_prefix("uct+knowledge(")
                    .and_then(|r| r.strip_suffix(')'))
                    .filter(|p| !p.is_empty())
                    .map(|p| AgentSpec::UctKnowledge(Some(PathBuf::from(p))))
                    .ok_or_else(|| CliError::Input(format!("unknown agent {a:?}"))),
            }
        })
        .collect()
}

macro_rules! say {
    ($out:expr, $($t:tt)*) => {
        writeln!($out, $($t)*).map_err(|e| CliError::Internal(e.to_string()))?
    };
}

fn cmd_check(out: &mut dyn Write, path: &Path) -> CliResult {
    let sheet = read_sheet(path)?;
    let r = check_conformance(&sheet);
    match r.verdict {
        Verdict::Conforming => {
            say!(out, "conforming");
            Ok(EXIT_OK)
        }
        Verdict::Inconclusive => {
            say!(out, "inconclusive: {} witness(es)", r.witnesses.len());
            for w in &r.witnesses {
                say!(out, "  rule {}: {} unifies with {}", w.rule, w.literal, w.head);
            }
            Ok(EXIT_DEGRADED)
        }
    }
}

fn cmd_compile(out: &mut dyn Write, s: &Sheet, path: Option<&Path>) -> CliResult {
    let sheet = read_sheet(&s.rulesheet)?;
    let normal = normalize(&sheet).map_err(|e| CliError::Input(e.to_string()))?;
    let plan = compile_plan(&normal).map_err(|e| CliError::Input(e.to_string()))?;
    // the full game must compile too
    compile(&sheet, s.backend.into()).map_err(|e| CliError::Input(e.to_string()))?;
    write_out(out, path, &dump_plan(&plan))?;
    Ok(EXIT_OK)
}

fn cmd_bench(out: &mut dyn Write, path: &Path, backend: Option<BackendArg>, seconds: f64, seed: u64) -> CliResult {
    if !(seconds > 0.0) || !seconds.is_finite() {
        return Err(CliError::Input("--seconds must be positive".into()));
    }
    let sheet = read_sheet(path)?;
    let name = game_name(path);
    let backends: Vec<Backend> = match backend {
        Some(b) => vec![b.into()],
        None => vec![Backend::TableDriven, Backend::QueryDriven],
    };
    for b in backends {
        let g = compile(&sheet, b).map_err(|e| CliError::Input(e.to_string()))?;
        let r = bench_random_playouts(Arc::new(g), b, seconds, seed);
        say!(out, "{name}\t{}\t{:.1}\t{:.2}", b.name(), r.games_per_second, r.mean_length);
    }
    Ok(EXIT_OK)
}

fn make_agent(
    game: &Arc<CompiledGame>,
    role: usize,
    spec: &AgentSpec,
    knowledge: &Option<Arc<KnowledgeFile>>,
    setup: &MatchSetup,
    seed: u64,
) -> Result<Box<dyn Agent>, CliError> {
    let cfg = |k: Option<Arc<KnowledgeFile>>| SearchConfig {
        budget: setup.budget,
        tt_capacity: setup.tt_capacity,
        knowledge: k,
        seed,
        ..SearchConfig::default()
    };
    Ok(match spec {
        AgentSpec::Random => Box::new(RandomAgent::new(game.clone(), role, seed)),
        AgentSpec::Uct => Box::new(UctAgent::new(game.clone(), role, cfg(None))),
        AgentSpec::UctKnowledge(p) => {
            let k = match p {
                Some(p) => load_knowledge(p)?,
                None => knowledge
                    .clone()
                    .ok_or_else(|| CliError::Input("uct+knowledge needs a path or --knowledge".into()))?,
            };
            Box::new(UctAgent::new(game.clone(), role, cfg(Some(k))))
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_play(
    out: &mut dyn Write,
    s: &Sheet,
    search: &Search,
    agents: &str,
    knowledge: Option<&Path>,
    matches: usize,
    dir: Option<&Path>,
) -> CliResult {
    let game = load_game(s)?;
    let specs = parse_agents(agents)?;
    let roles: Vec<String> = game.role_names().iter().map(|r| r.to_string()).collect();
    if specs.len() != roles.len() {
        return Err(CliError::Input(format!("{} agents for {} roles", specs.len(), roles.len())));
    }
    let setup = search.setup()?;
    let know = knowledge.map(load_knowledge).transpose()?;
    // knowledge files are checked before any match starts
    for (r, sp) in specs.iter().enumerate() {
        make_agent(&game, r, sp, &know, &setup, 0)?;
    }
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
    }
    let results: Vec<Result<GameRecord, CliError>> = (0..matches)
        .into_par_iter()
        .map(|i| {
            let mut agents = specs
                .iter()
                .enumerate()
                .map(|(r, sp)| make_agent(&game, r, sp, &know, &setup, search.seed ^ ((i as u64) << 8 | r as u64)))
                .collect::<Result<Vec<_>, _>>()?;
            let m = play_match(game.clone(), &mut agents, setup.start_budget)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            Ok(GameRecord::from_match(&game, &format!("{i}"), &m))
        })
        .collect();
    let mut points = vec![0.0; roles.len()];
    for r in results {
        let r = r?;
        let goals: Vec<u32> = r.players.iter().map(|p| p.1).collect();
        for (k, p) in points.iter_mut().enumerate() {
            *p += match_points(&goals, k);
        }
        let line: Vec<String> = r.players.iter().map(|(role, g)| format!("{role}={g}")).collect();
        say!(out, "match {}\t{}\t{} moves", r.id, line.join("\t"), r.states.len() - 1);
        if let Some(d) = dir {
            r.save(&d.join(format!("match-{}.xml", r.id)))?;
        }
    }
    let line: Vec<String> = roles
        .iter()
        .zip(&specs)
        .zip(&points)
        .map(|((role, sp), p)| format!("{role}({})={:.3}", agent_label(sp), p / matches.max(1) as f64))
        .collect();
    say!(out, "points\t{}", line.join("\t"));
    Ok(EXIT_OK)
}

fn agent_label(a: &AgentSpec) -> &'static str {
    match a {
        AgentSpec::Random => "random",
        AgentSpec::Uct => "uct",
        AgentSpec::UctKnowledge(_) => "uct+knowledge",
    }
}

fn cmd_mine(out: &mut dyn Write, s: &Sheet, records: &Path, mining: &Mining, path: Option<&Path>) -> CliResult {
    let game = load_game(s)?;
    let spec = game.board().ok_or_else(|| {
        CliError::Input(format!(
            "mining needs the board extension; required relations: {}",
            ggp_learn::evolve::REQUIRED_RELATIONS
        ))
    })?;
    let cfg = mining.config()?;
    let recs = load_dir(records).map_err(|e| CliError::Input(format!("{}: {e}", records.display())))?;
    if recs.is_empty() {
        return Err(CliError::Input(format!("no match records in {}", records.display())));
    }
    let roles = game.role_names();
    let k = mine_knowledge(&recs, &roles, spec, &cfg, Default::default())?;
    write_out(out, path, &k.to_xml())?;
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_evolve(
    out: &mut dyn Write,
    s: &Sheet,
    search: &Search,
    mining: &Mining,
    population: usize,
    generations: usize,
    matches_per_round: usize,
    seed_matches: Option<usize>,
    dir: &Path,
) -> CliResult {
    let game = load_game(s)?;
    if population == 0 || matches_per_round == 0 {
        return Err(CliError::Input("--population and --matches-per-round must be positive".into()));
    }
    let cfg = EvolveConfig {
        population,
        generations,
        matches_per_round,
        seed_matches: seed_matches.unwrap_or(2 * population),
        setup: search.setup()?,
        miner: mining.config()?,
        seed: search.seed,
        ..Default::default()
    };
    std::fs::create_dir_all(dir)?;
    let r = evolve(game, &cfg, Some(dir))?;
    let best = dir.join("best.xml");
    r.best.save(&best).map_err(|e| CliError::Input(e.to_string()))?;
    for g in &r.log {
        say!(out, "generation {}\tbest {:.3}\tmean {:.3}", g.generation, g.best, g.mean);
    }
    say!(out, "best fitness {:.3} written to {}", r.best_fitness, best.display());
    Ok(EXIT_OK)
}

fn cmd_score(out: &mut dyn Write, s: &Sheet, search: &Search, knowledge: &Path, matches: usize) -> CliResult {
    let game = load_game(s)?;
    let k = load_knowledge(knowledge)?;
    let setup = search.setup()?;
    let n_roles = game.roles.len();
    let pts: Vec<Result<f64, CliError>> = (0..matches)
        .into_par_iter()
        .map(|j| {
            let role = j % n_roles;
            let m = play_vs_baseline(&game, Some(k.clone()), role, &setup, search.seed ^ j as u64)
                .map_err(CliError::from)?;
            Ok(match_points(&m.goals, role))
        })
        .collect();
    let total: f64 = pts.into_iter().collect::<Result<Vec<_>, _>>()?.iter().sum();
    say!(out, "matches\t{matches}\tpoints\t{total}\twin_rate\t{:.3}", total / matches.max(1) as f64);
    Ok(EXIT_OK)
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Check { rulesheet } => cmd_check(out, &rulesheet),
        Command::Compile { sheet, out: path } => cmd_compile(out, &sheet, path.as_deref()),
        Command::Bench { rulesheet, backend, seconds, seed } => cmd_bench(out, &rulesheet, backend, seconds, seed),
        Command::Play { sheet, search, agents, knowledge, matches, out: dir } => {
            cmd_play(out, &sheet, &search, &agents, knowledge.as_deref(), matches, dir.as_deref())
        }
        Command::Mine { sheet, records, mining, out: path } => cmd_mine(out, &sheet, &records, &mining, path.as_deref()),
        Command::Evolve { sheet, search, mining, population, generations, matches_per_round, seed_matches, out: dir } => {
            cmd_evolve(out, &sheet, &search, &mining, population, generations, matches_per_round, seed_matches, &dir)
        }
        Command::Score { sheet, search, knowledge, matches } => cmd_score(out, &sheet, &search, &knowledge, matches),
    }
}

/// Parses arguments (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(CliError::Input(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_INPUT
        }
        Err(CliError::Internal(m)) => {
            let _ = writeln!(err, "internal error: {m}");
            EXIT_INTERNAL
        }
    }
}

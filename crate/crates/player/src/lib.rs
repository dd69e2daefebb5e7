//! UCT players.

pub mod agent;
pub mod tt;
pub mod uct;

pub use agent::{match_points, play_match, Agent, MatchResult, RandomAgent, UctAgent};
pub use tt::{Eviction, LinkedTT};
pub use uct::{choose_edge, choose_move, run_uct, ucb_select, Budget, SearchConfig, SearchStats, Uct};

pub mod board;
pub mod compiler;
pub mod engine;
pub mod error;
pub mod eval;
pub mod game;
pub mod games;
pub mod mgdl;
pub mod reference;
pub mod rulesheet;
pub mod store;
pub mod term;

pub use compiler::Backend;
pub use engine::Engine;
pub use error::{Error, Result};
pub use game::{compile, CompiledGame, GameState, Move};
pub use rulesheet::{parse_kif, RuleSheet};
pub use term::Term;

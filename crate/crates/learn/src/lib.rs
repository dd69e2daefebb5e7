//! Record handling, feature mining and knowledge evolution.

pub mod error;
pub mod evolve;
pub mod miner;
pub mod record;

pub use error::{LearnError, Result};
pub use miner::{mine_knowledge, ContingencyTable, FeaturePool, MinerConfig};
pub use record::GameRecord;

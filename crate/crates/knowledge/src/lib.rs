//! Spatial board knowledge: areas, features, meta facts, scoring and the
//! knowledge file format.

pub mod area;
pub mod error;
pub mod feature;
pub mod file;
pub mod matching;
pub mod params;
pub mod score;
pub mod xml;

pub use area::{area_index, area_size};
pub use error::{KnowledgeError, Result};
pub use feature::{Coord, Feature, FeatureClass, FeatureKind, Itemset, MetaFact};
pub use file::{KnowledgeFile, PlayerKnowledge};
pub use matching::match_feature;
pub use params::Parameters;
pub use score::{move_distribution, BoardCodec, Phase, Scorer};

//! Mixed-granularity skill retrieval and adaptation over a four-layer skill
//! graph, with dual-registry evolution and simulation oracles.

pub mod adaptation;
pub mod evolution;
pub mod graph;
pub mod io;
pub mod provider;
pub mod retrieval;
pub mod sim;
pub mod text;

pub use adaptation::{adapt, Adaptation, AdaptationConfig, AdaptationTrace, Providers, Query, RoutingAction, SkillContext};
pub use evolution::{evolve, RegistryPair, Task, VerifierRegistry};
pub use graph::{validate_graph, Layer, SkillGraph, SkillUnit};
pub use retrieval::{degree_corrected_rwr, HashEmbedder, RwrConfig, ScoreVector};

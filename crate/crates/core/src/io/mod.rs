//! Persistence and configuration: registry files, run configs and input files.

mod config;
mod files;
mod registry;

pub use config::{ConfigError, EvolutionSettings, ProviderConfig, ProviderKind, RunConfig, DEFAULT_API_KEY_ENV};
pub use files::{parse_skills, parse_split, read_skills, read_split, InputError, LayerSpec, SkillRecord, TaskRecord};
pub use registry::{
    canonical_json, checksum, decode_registry, encode_registry, load_registry, save_registry, write_atomic,
    RegistryError, FORMAT_VERSION,
};

//! Role-by-role provider selection: in-process mocks or HTTP backings.

use skilltree_core::adaptation::{RuleVerifier, SubstitutionWriter};
use skilltree_core::evolution::{ConcatAgent, EvolutionProviders, MechanicalEditWriter, TokenRecallMetric};
use skilltree_core::io::{ProviderConfig, ProviderKind};
use skilltree_core::provider::{AgentProvider, EmbeddingProvider, ProviderError, Verifier, Writer, ZeroConfidence};
use skilltree_core::{HashEmbedder, Providers};

use crate::http::{HttpAgent, HttpClient, HttpEmbedder, HttpVerifier, HttpWriter};

/// Owns the HTTP client; providers borrow it.
pub struct ProviderHost {
    client: Option<HttpClient>,
    cfg: ProviderConfig,
}

pub struct ProviderSet<'a> {
    embedder: Box<dyn EmbeddingProvider + 'a>,
    verifier: Box<dyn Verifier + 'a>,
    writer: Box<dyn Writer + 'a>,
    agent: Box<dyn AgentProvider + 'a>,
}

impl ProviderHost {
    pub fn new(cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        let client = if cfg.any_http() {
            Some(HttpClient::from_config(cfg)?)
        } else {
            None
        };
        Ok(Self {
            client,
            cfg: cfg.clone(),
        })
    }

    pub fn providers(&self) -> ProviderSet<'_> {
        let cfg = &self.cfg;
        let client = || self.client.as_ref().expect("client exists when a role is http");
        let model = || cfg.model.clone().unwrap_or_default();
        ProviderSet {
            embedder: match cfg.embedder {
                ProviderKind::Mock => Box::new(HashEmbedder::new(cfg.embedding_dim)),
                ProviderKind::Http => Box::new(HttpEmbedder {
                    client: client(),
                    model: cfg.embedding_model.clone().unwrap_or_default(),
                    dim: cfg.embedding_dim,
                }),
            },
            verifier: match cfg.verifier {
                ProviderKind::Mock => Box::new(RuleVerifier),
                ProviderKind::Http => Box::new(HttpVerifier {
                    client: client(),
                    model: model(),
                }),
            },
            writer: match cfg.writer {
                ProviderKind::Mock => Box::new(SubstitutionWriter),
                ProviderKind::Http => Box::new(HttpWriter {
                    client: client(),
                    model: model(),
                }),
            },
            agent: match cfg.agent {
                ProviderKind::Mock => Box::new(ConcatAgent),
                ProviderKind::Http => Box::new(HttpAgent {
                    client: client(),
                    model: model(),
                }),
            },
        }
    }
}

impl ProviderSet<'_> {
    pub fn embedder(&self) -> &dyn EmbeddingProvider {
        self.embedder.as_ref()
    }

    pub fn adapt(&self) -> Providers<'_> {
        Providers {
            embedder: self.embedder.as_ref(),
            confidence: &ZeroConfidence,
            verifier: self.verifier.as_ref(),
            writer: self.writer.as_ref(),
        }
    }

    /// The metric and edit writer are always the in-process ones.
    pub fn evolution(&self) -> EvolutionProviders<'_> {
        EvolutionProviders {
            adapt: self.adapt(),
            agent: self.agent.as_ref(),
            metric: &TokenRecallMetric,
            editor: &MechanicalEditWriter,
        }
    }
}

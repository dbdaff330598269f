//! Semantic networks from short narratives.
//!
//! The crate turns stories into lemma streams ([`textpipe`]), builds
//! co-occurrence and dependency-radius networks from them ([`netbuild`]),
//! and extracts three families of per-story features: topology
//! ([`graphmetrics`]), prompt-seeded spreading activation ([`activation`])
//! and lexicon-based emotion z-scores ([`affect`]). [`stats`] holds the
//! nonparametric tests used to compare builders and models.

pub mod activation;
pub mod affect;
pub mod graph;
pub mod graphmetrics;
pub mod netbuild;
pub mod stats;
pub mod textpipe;

pub use activation::{ActivationState, ActivationTrace, SpreadingParams};
pub use affect::{Emotion, EmotionLexicon, EmotionProfile};
pub use graph::IndexedGraph;
pub use graphmetrics::StructuralFeatures;
pub use netbuild::{BuilderTag, LexicalNetwork, RelationFile, Valence};
pub use stats::{Alternative, TestResult};
pub use textpipe::{Preprocessor, PromptMatch, Story, Token};

//! Run configuration: TOML file values overlaid with command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use storynet_core::netbuild::{BuilderTag, CANONICAL_BUILDERS, DEFAULT_RADIUS};
use storynet_ml::{FeatureConfig, ModelKind};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub stories: Option<PathBuf>,
    pub conllu: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub pronouns: Option<PathBuf>,
    pub negation_cues: Option<PathBuf>,
    pub relations: Option<PathBuf>,
    pub builders: Vec<BuilderTag>,
    /// Co-occurrence windows to keep from `builders`.
    pub windows: Vec<usize>,
    pub radius: usize,
    /// The first value feeds the models; the rest are exported for comparison.
    pub retention: Vec<f64>,
    pub configs: Vec<FeatureConfig>,
    pub models: Vec<ModelKind>,
    /// `mean`, rater ids, or `raters` for every rater column.
    pub targets: Vec<String>,
    pub folds: usize,
    pub n_perm: usize,
    pub shapley_samples: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            stories: None,
            conllu: None,
            lexicon: None,
            lemmas: None,
            stoplist: None,
            pronouns: None,
            negation_cues: None,
            relations: None,
            builders: CANONICAL_BUILDERS.to_vec(),
            windows: vec![2, 3, 4],
            radius: DEFAULT_RADIUS,
            retention: vec![0.5],
            configs: FeatureConfig::ALL.to_vec(),
            models: ModelKind::ALL.to_vec(),
            targets: vec!["mean".into()],
            folds: 4,
            n_perm: 10_000,
            shapley_samples: 2000,
            seed: 42,
            out: PathBuf::from("out"),
        }
    }
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML file supplying any of the options below
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Stories CSV: id, prompt1, prompt2, prompt3, text, then one column per rater
    #[arg(long)]
    pub stories: Option<PathBuf>,
    /// CoNLL-U parses with `# story_id = ...` comments
    #[arg(long)]
    pub conllu: Option<PathBuf>,
    /// Emotion lexicon TSV (word, label, 0/1)
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Lemma table TSV (surface, lemma)
    #[arg(long)]
    pub lemmas: Option<PathBuf>,
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
    #[arg(long)]
    pub pronouns: Option<PathBuf>,
    #[arg(long)]
    pub negation_cues: Option<PathBuf>,
    /// Synonym/hypernym edges TSV (lemma, lemma, kind)
    #[arg(long)]
    pub relations: Option<PathBuf>,
    /// Comma-separated builder tags, e.g. coocc_WS3,TFMN
    #[arg(long, value_delimiter = ',')]
    pub builders: Option<Vec<BuilderTag>>,
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<usize>>,
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub retention: Option<Vec<f64>>,
    /// Feature configurations, e.g. NetStr,All
    #[arg(long, value_delimiter = ',')]
    pub configs: Option<Vec<FeatureConfig>>,
    /// Model kinds: linear, knn, decision_tree, random_forest, gradient_boosting
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<ModelKind>>,
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub n_perm: Option<usize>,
    #[arg(long)]
    pub shapley_samples: Option<usize>,
    /// Master seed for every random choice in the run
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($cfg:ident, $o:ident, opt: [$($opt:ident),*], val: [$($val:ident),*]) => {
        $( if $o.$opt.is_some() { $cfg.$opt = $o.$opt.clone(); } )*
        $( if let Some(v) = &$o.$val { $cfg.$val = v.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::bad(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::bad(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// File values (if `--config` is given) overlaid with the flags.
    pub fn resolve(o: &Overrides) -> Result<Self> {
        let mut cfg = match &o.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        overlay!(cfg, o,
            opt: [stories, conllu, lexicon, lemmas, stoplist, pronouns, negation_cues, relations],
            val: [builders, windows, radius, retention, configs, models, targets, folds, n_perm, shapley_samples, seed, out]);
        Ok(cfg)
    }

    /// Builders actually run: `builders` minus co-occurrence windows not in `windows`.
    pub fn active_builders(&self) -> Vec<BuilderTag> {
        self.builders
            .iter()
            .copied()
            .filter(|b| match b {
                BuilderTag::Cooccurrence { window, .. } => self.windows.contains(window),
                BuilderTag::Tfmn => true,
            })
            .collect()
    }

    pub fn primary_retention(&self) -> f64 {
        self.retention[0]
    }

    pub fn validate(&self) -> Result<()> {
        let paths = [
            &self.stories,
            &self.conllu,
            &self.lexicon,
            &self.lemmas,
            &self.stoplist,
            &self.pronouns,
            &self.negation_cues,
            &self.relations,
        ];
        for p in paths.into_iter().flatten() {
            if !p.exists() {
                return Err(CliError::bad(format!("input file {} does not exist", p.display())));
            }
        }
        if let Some(b) = self.builders.iter().find(|b| !b.is_canonical()) {
            return Err(CliError::bad(format!("builder {b} is not one of the seven supported tags")));
        }
        if let Some(w) = self.windows.iter().find(|w| !(2..=4).contains(*w)) {
            return Err(CliError::bad(format!("window size {w} is not in 2..=4")));
        }
        if self.folds < 2 {
            return Err(CliError::bad("folds must be at least 2"));
        }
        if self.retention.is_empty() || self.retention.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return Err(CliError::bad("retention values must lie in (0, 1)"));
        }
        if self.n_perm == 0 {
            return Err(CliError::bad("n_perm must be positive"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

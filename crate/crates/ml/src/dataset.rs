//! Feature configurations and the dense design matrix consumed by models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use storynet_core::affect::Emotion;
use storynet_core::graphmetrics::StructuralFeatures;
use storynet_core::BuilderTag;

use crate::MlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FeatureConfig {
    NetStr,
    Spread,
    Emotions,
    NetStrSpread,
    NetStrEmo,
    EmoSpread,
    All,
}

impl FeatureConfig {
    pub const ALL: [FeatureConfig; 7] = [
        FeatureConfig::NetStr,
        FeatureConfig::Spread,
        FeatureConfig::Emotions,
        FeatureConfig::NetStrSpread,
        FeatureConfig::NetStrEmo,
        FeatureConfig::EmoSpread,
        FeatureConfig::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureConfig::NetStr => "NetStr",
            FeatureConfig::Spread => "Spread",
            FeatureConfig::Emotions => "Emotions",
            FeatureConfig::NetStrSpread => "NetStr+Spread",
            FeatureConfig::NetStrEmo => "NetStr+Emo",
            FeatureConfig::EmoSpread => "Emo+Spread",
            FeatureConfig::All => "All",
        }
    }

    /// `(structural, spread, emotions)` blocks included, in that order.
    fn blocks(self) -> (bool, bool, bool) {
        match self {
            FeatureConfig::NetStr => (true, false, false),
            FeatureConfig::Spread => (false, true, false),
            FeatureConfig::Emotions => (false, false, true),
            FeatureConfig::NetStrSpread => (true, true, false),
            FeatureConfig::NetStrEmo => (true, false, true),
            FeatureConfig::EmoSpread => (false, true, true),
            FeatureConfig::All => (true, true, true),
        }
    }

    pub fn feature_names(self) -> Vec<String> {
        let (s, a, e) = self.blocks();
        let mut names = Vec::new();
        if s {
            names.extend(StructuralFeatures::NAMES.iter().map(|n| n.to_string()));
        }
        if a {
            names.extend((1..=3).map(|i| format!("alpha{i}")));
        }
        if e {
            names.extend(Emotion::ALL.iter().map(|e| format!("z_{e}")));
        }
        names
    }
}

impl fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureConfig {
    type Err = MlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureConfig::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| MlError::UnknownConfig(s.to_string()))
    }
}

impl From<FeatureConfig> for String {
    fn from(c: FeatureConfig) -> Self {
        c.name().to_string()
    }
}

impl TryFrom<String> for FeatureConfig {
    type Error = MlError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Upstream features of one story under one builder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryFeatures {
    pub story_id: String,
    pub builder: BuilderTag,
    pub structural: StructuralFeatures,
    pub alphas: [f64; 3],
    pub emotions: [f64; 8],
}

impl StoryFeatures {
    pub fn assemble(&self, config: FeatureConfig) -> Vec<f64> {
        let (s, a, e) = config.blocks();
        let mut out = Vec::with_capacity(18);
        if s {
            out.extend(self.structural.values());
        }
        if a {
            out.extend(self.alphas);
        }
        if e {
            out.extend(self.emotions);
        }
        out
    }
}

/// Dense rows with one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(ids: Vec<String>, feature_names: Vec<String>, x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self, MlError> {
        if x.len() != y.len() || ids.len() != y.len() {
            return Err(MlError::Shape {
                row: x.len().min(y.len()).min(ids.len()),
                got: x.len(),
                expected: y.len(),
            });
        }
        for (row, r) in x.iter().enumerate() {
            if r.len() != feature_names.len() {
                return Err(MlError::Shape {
                    row,
                    got: r.len(),
                    expected: feature_names.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(MlError::NonFinite("features"));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(MlError::NonFinite("target"));
        }
        Ok(Self {
            ids,
            feature_names,
            x,
            y,
        })
    }

    /// Rows with ids `story-0000`, ... for unlabeled matrices.
    pub fn from_xy(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self, MlError> {
        let p = x.first().map_or(0, Vec::len);
        let ids = (0..y.len()).map(|i| format!("row-{i:04}")).collect();
        let names = (0..p).map(|j| format!("x{j}")).collect();
        Self::new(ids, names, x, y)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn subset(&self, rows: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
        (rows.iter().map(|&i| self.x[i].clone()).collect(), rows.iter().map(|&i| self.y[i]).collect())
    }
}

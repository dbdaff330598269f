//! Plutchik emotion profiles against a binomial null drawn from the lexicon.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textpipe::{parse_word_list, Story, Token};

pub const DEFAULT_NEGATION_CUES: &str = include_str!("../data/negation_cues_en.txt");

/// Two-sided 5% critical value for flagging over/under-representation.
pub const Z_CRITICAL: f64 = 1.96;

#[derive(Debug, Error)]
pub enum AffectError {
    #[error("lexicon line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("lexicon has no flagged entries")]
    EmptyLexicon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Joy,
    Trust,
    Fear,
    Surprise,
    Sadness,
    Disgust,
    Anger,
    Anticipation,
}

impl Emotion {
    pub const ALL: [Emotion; 8] = [
        Emotion::Joy,
        Emotion::Trust,
        Emotion::Fear,
        Emotion::Surprise,
        Emotion::Sadness,
        Emotion::Disgust,
        Emotion::Anger,
        Emotion::Anticipation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Joy => "joy",
            Emotion::Trust => "trust",
            Emotion::Fear => "fear",
            Emotion::Surprise => "surprise",
            Emotion::Sadness => "sadness",
            Emotion::Disgust => "disgust",
            Emotion::Anger => "anger",
            Emotion::Anticipation => "anticipation",
        }
    }

    /// Opposite emotion on Plutchik's wheel.
    pub fn opposite(self) -> Emotion {
        match self {
            Emotion::Joy => Emotion::Sadness,
            Emotion::Sadness => Emotion::Joy,
            Emotion::Trust => Emotion::Disgust,
            Emotion::Disgust => Emotion::Trust,
            Emotion::Fear => Emotion::Anger,
            Emotion::Anger => Emotion::Fear,
            Emotion::Anticipation => Emotion::Surprise,
            Emotion::Surprise => Emotion::Anticipation,
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Emotion::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown emotion `{s}`"))
    }
}

/// Labels attached to one lexicon word.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelSet {
    pub emotions: [bool; 8],
    pub positive: bool,
    pub negative: bool,
}

impl LabelSet {
    pub fn has(&self, e: Emotion) -> bool {
        self.emotions[e.index()]
    }

    pub fn is_empty(&self) -> bool {
        !self.positive && !self.negative && !self.emotions.iter().any(|&b| b)
    }
}

/// Word → emotion/valence associations with per-emotion base rates.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionLexicon {
    entries: BTreeMap<String, LabelSet>,
    priors: [f64; 8],
}

impl EmotionLexicon {
    /// Parse `word<TAB>label<TAB>0|1` rows. Priors are the fraction of
    /// distinct words flagged with each emotion.
    pub fn parse(text: &str) -> Result<Self, AffectError> {
        let mut entries: BTreeMap<String, LabelSet> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| AffectError::Parse { line: i + 1, message };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(err(format!("expected 3 tab-separated columns, found {}", cols.len())));
            }
            let word = cols[0].trim().to_lowercase();
            if word.is_empty() {
                return Err(err("empty word".into()));
            }
            let flag = match cols[2].trim() {
                "0" => false,
                "1" => true,
                other => return Err(err(format!("flag must be 0 or 1, got `{other}`"))),
            };
            let label = cols[1].trim().to_lowercase();
            let set = entries.entry(word).or_default();
            match label.as_str() {
                "positive" => set.positive |= flag,
                "negative" => set.negative |= flag,
                other => {
                    let e: Emotion = other.parse().map_err(err)?;
                    set.emotions[e.index()] |= flag;
                }
            }
        }
        if entries.values().all(LabelSet::is_empty) {
            return Err(AffectError::EmptyLexicon);
        }
        let n = entries.len() as f64;
        let mut priors = [0.0; 8];
        for e in Emotion::ALL {
            priors[e.index()] = entries.values().filter(|s| s.has(e)).count() as f64 / n;
        }
        Ok(Self { entries, priors })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.entries.contains_key(lemma)
    }

    pub fn labels(&self, lemma: &str) -> Option<&LabelSet> {
        self.entries.get(lemma)
    }

    pub fn prior(&self, e: Emotion) -> f64 {
        self.priors[e.index()]
    }

    pub fn priors(&self) -> &[f64; 8] {
        &self.priors
    }

    /// `(positive, negative)` flags; both false for unknown words.
    pub fn polarity(&self, lemma: &str) -> (bool, bool) {
        self.entries.get(lemma).map_or((false, false), |s| (s.positive, s.negative))
    }
}

/// Negation cue words, matched on lowercased surface or lemma.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegationCues(HashSet<String>);

impl Default for NegationCues {
    fn default() -> Self {
        Self(parse_word_list(DEFAULT_NEGATION_CUES))
    }
}

impl NegationCues {
    pub fn new<I, S>(cues: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(cues.into_iter().map(|c| c.as_ref().to_lowercase()).collect())
    }

    pub fn parse(text: &str) -> Self {
        Self(parse_word_list(text))
    }

    /// Whether token `i` is a cue. A bare `t` after a word ending in `n`
    /// counts as `n't` when that cue is configured, since plain-text
    /// lexing splits contractions at the apostrophe.
    pub fn is_cue(&self, sentence: &[Token], i: usize) -> bool {
        let t = &sentence[i];
        let surface = t.surface.to_lowercase();
        if self.0.contains(&surface) || self.0.contains(&t.lemma) {
            return true;
        }
        surface == "t"
            && i > 0
            && self.0.contains("n't")
            && sentence[i - 1].surface.to_lowercase().ends_with('n')
    }
}

/// Indices of tokens whose emotion labels flip because of a negation cue.
///
/// With dependency relations a token is negated when a cue is its direct
/// dependent or shares its head. With heads but no relations, any token
/// within two tree hops of a cue is negated. Without a parse, the two
/// tokens following a cue are negated. Cues themselves are never negated.
pub fn detect_negations(sentence: &[Token], cues: &NegationCues) -> BTreeSet<usize> {
    let cue_idx: Vec<usize> = (0..sentence.len()).filter(|&i| cues.is_cue(sentence, i)).collect();
    let mut out = BTreeSet::new();
    if cue_idx.is_empty() {
        return out;
    }
    let has_heads = sentence.iter().any(|t| t.head_index.is_some());
    let has_deprels = sentence.iter().any(|t| t.deprel.as_deref().is_some_and(|d| d != "_"));
    let is_cue: Vec<bool> = (0..sentence.len()).map(|i| cue_idx.contains(&i)).collect();

    if has_heads && has_deprels {
        for &c in &cue_idx {
            let Some(h) = sentence[c].head_index else { continue };
            out.insert(h);
            for (j, t) in sentence.iter().enumerate() {
                if j != c && t.head_index == Some(h) {
                    out.insert(j);
                }
            }
        }
    } else if has_heads {
        let mut adj = vec![Vec::new(); sentence.len()];
        for (i, t) in sentence.iter().enumerate() {
            if let Some(h) = t.head_index {
                adj[i].push(h);
                adj[h].push(i);
            }
        }
        for &c in &cue_idx {
            for (j, _) in crate::netbuild::bounded_bfs(&adj, c, 2) {
                out.insert(j);
            }
        }
    } else {
        for &c in &cue_idx {
            out.extend((c + 1..sentence.len()).take(2));
        }
    }
    out.retain(|&i| !is_cue[i]);
    out
}

/// Per-emotion counts over lexicon-matched tokens, plus the match count `m`.
///
/// Each input is `(lemma, negated)`. Negated tokens count toward the
/// opposite emotion instead.
pub fn emotion_counts<'a, I>(tokens: I, lexicon: &EmotionLexicon) -> ([u64; 8], u64)
where
    I: IntoIterator<Item = (&'a str, bool)>,
{
    let mut counts = [0u64; 8];
    let mut m = 0;
    for (lemma, negated) in tokens {
        let Some(labels) = lexicon.labels(lemma) else { continue };
        m += 1;
        for e in Emotion::ALL {
            if labels.has(e) {
                let target = if negated { e.opposite() } else { e };
                counts[target.index()] += 1;
            }
        }
    }
    (counts, m)
}

/// Binomial z-score of observing `k` hits in `m` draws at rate `p`.
pub fn binomial_z(k: u64, m: u64, p: f64) -> f64 {
    if m == 0 || p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    let m = m as f64;
    (k as f64 - m * p) / (m * p * (1.0 - p)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionProfile {
    pub z: [f64; 8],
    pub counts: [u64; 8],
    pub m: u64,
}

impl EmotionProfile {
    pub fn z(&self, e: Emotion) -> f64 {
        self.z[e.index()]
    }

    pub fn count(&self, e: Emotion) -> u64 {
        self.counts[e.index()]
    }

    pub fn over_represented(&self, e: Emotion) -> bool {
        self.z(e) > Z_CRITICAL
    }

    pub fn under_represented(&self, e: Emotion) -> bool {
        self.z(e) < -Z_CRITICAL
    }
}

pub fn emotion_zscores(counts: [u64; 8], m: u64, priors: &[f64; 8]) -> EmotionProfile {
    let mut z = [0.0; 8];
    for e in Emotion::ALL {
        z[e.index()] = binomial_z(counts[e.index()], m, priors[e.index()]);
    }
    EmotionProfile { z, counts, m }
}

/// Profile of the whole story text, every alphabetic token included.
pub fn profile_story(story: &Story, lexicon: &EmotionLexicon, cues: &NegationCues) -> EmotionProfile {
    let mut marked: Vec<(&str, bool)> = Vec::new();
    for sentence in &story.sentences {
        let negated = detect_negations(sentence, cues);
        for (i, t) in sentence.iter().enumerate() {
            if t.is_alphabetic() {
                marked.push((t.lemma.as_str(), negated.contains(&i)));
            }
        }
    }
    let (counts, m) = emotion_counts(marked, lexicon);
    emotion_zscores(counts, m, lexicon.priors())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(words: &[&str]) -> Vec<Token> {
        words
            .iter()
            .enumerate()
            .map(|(i, w)| Token {
                surface: w.to_string(),
                lemma: w.to_lowercase(),
                upos: "X".into(),
                sentence_index: 0,
                token_index: i,
                head_index: None,
                deprel: None,
                is_stop: false,
                is_pronoun: false,
            })
            .collect()
    }

    #[test]
    fn lexicon_priors() {
        let mut text = String::new();
        for i in 0..10 {
            text.push_str(&format!("w{i}\tjoy\t{}\n", u8::from(i < 5)));
        }
        text.push_str("w0\tpositive\t1\n");
        let lex = EmotionLexicon::parse(&text).unwrap();
        assert_eq!(lex.prior(Emotion::Joy), 0.5);
        assert_eq!(lex.prior(Emotion::Fear), 0.0);
        let w0 = lex.labels("w0").unwrap();
        assert!(w0.has(Emotion::Joy) && w0.positive);
        assert!(matches!(EmotionLexicon::parse(""), Err(AffectError::EmptyLexicon)));
        assert!(matches!(EmotionLexicon::parse("a\tjoy\n"), Err(AffectError::Parse { line: 1, .. })));
        assert!(matches!(EmotionLexicon::parse("a\tbliss\t1\n"), Err(AffectError::Parse { .. })));
    }

    #[test]
    fn opposites_are_involutions() {
        for e in Emotion::ALL {
            assert_ne!(e.opposite(), e);
            assert_eq!(e.opposite().opposite(), e);
        }
    }

    #[test]
    fn z_examples() {
        assert!((binomial_z(6, 8, 0.25) - 3.266).abs() < 1e-3);
        assert_eq!(binomial_z(2, 8, 0.25), 0.0);
        assert_eq!(binomial_z(0, 0, 0.25), 0.0);
        assert_eq!(binomial_z(3, 8, 1.0), 0.0);
    }

    #[test]
    fn plain_text_negation() {
        let cues = NegationCues::default();
        let s = plain(&["i", "am", "not", "angry", "today", "really"]);
        assert_eq!(detect_negations(&s, &cues), BTreeSet::from([3, 4]));
        let s = plain(&["i", "don", "t", "care"]);
        assert!(detect_negations(&s, &cues).contains(&3));
        assert!(detect_negations(&plain(&["angry"]), &cues).is_empty());
    }

    #[test]
    fn counts_flip_under_negation() {
        let lex = EmotionLexicon::parse("happy\tjoy\t1\ngrim\tsadness\t1\n").unwrap();
        let (c, m) = emotion_counts([("happy", false), ("grim", false)], &lex);
        assert_eq!((c[Emotion::Joy.index()], c[Emotion::Sadness.index()], m), (1, 1, 2));
        let (c, m) = emotion_counts([("happy", true)], &lex);
        assert_eq!((c[Emotion::Joy.index()], c[Emotion::Sadness.index()], m), (0, 1, 1));
        let (c, m) = emotion_counts([("table", false)], &lex);
        assert_eq!((c, m), ([0; 8], 0));
    }
}

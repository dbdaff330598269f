//! Raw text and CoNLL-U ingestion.
//!
//! Plain text goes through a rule-based sentence splitter and a table-driven
//! lemmatiser; dependency parses arrive as CoNLL-U from an external parser.
//! Either way a [`Story`] ends up holding one token list per sentence, every
//! token flagged as stop-word and/or pronoun so that the network builders can
//! apply their own filtering policy.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default English pronoun list (subject, object, possessive and reflexive forms).
pub const DEFAULT_PRONOUNS: &str = include_str!("../data/pronouns_en.txt");

/// Period-terminated words that never end a sentence.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "vs.", "etc.", "e.g.", "i.e.",
    "mt.", "no.", "approx.",
];

/// Universal POS tag used for tokens that did not come from a tagger.
pub const UNTAGGED_UPOS: &str = "X";

#[derive(Debug, Error)]
pub enum TextError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: sentence block has no `# story_id = <id>` comment")]
    MissingStoryId { line: usize },
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error("story {story}: rating {value} from rater {rater} is outside [1, 5]")]
    RatingOutOfRange {
        story: String,
        rater: String,
        value: i64,
    },
    #[error("story {story}: expected exactly 3 prompt words, got {found}")]
    PromptCount { story: String, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub upos: String,
    pub sentence_index: usize,
    pub token_index: usize,
    pub head_index: Option<usize>,
    pub deprel: Option<String>,
    pub is_stop: bool,
    pub is_pronoun: bool,
}

impl Token {
    /// True when the lemma consists only of alphabetic characters.
    pub fn is_alphabetic(&self) -> bool {
        !self.lemma.is_empty() && self.lemma.chars().all(char::is_alphabetic)
    }

    /// Filtering policy shared by tokenisation and the co-occurrence builders.
    pub fn survives_filter(&self, keep_pronouns: bool) -> bool {
        self.is_alphabetic() && (!self.is_stop || (keep_pronouns && self.is_pronoun))
    }
}

/// Lowercases and lemmatises tokens and flags stop-words and pronouns.
#[derive(Debug, Clone, Default)]
pub struct Preprocessor {
    lemma_table: HashMap<String, String>,
    stoplist: HashSet<String>,
    pronouns: HashSet<String>,
    abbreviations: Vec<String>,
}

impl Preprocessor {
    pub fn new(
        lemma_table: HashMap<String, String>,
        stoplist: HashSet<String>,
        pronouns: HashSet<String>,
    ) -> Self {
        let lemma_table = lemma_table
            .into_iter()
            .map(|(k, v)| (k.to_lowercase(), v.to_lowercase()))
            .collect();
        Self {
            lemma_table,
            stoplist: stoplist.into_iter().map(|w| w.to_lowercase()).collect(),
            pronouns: pronouns.into_iter().map(|w| w.to_lowercase()).collect(),
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Build from the plain-text resource formats: `surface\tlemma` lines for
    /// the lemma table, one word per line for the stop and pronoun lists.
    pub fn from_resources(lemma_tsv: &str, stoplist: &str, pronouns: &str) -> Result<Self, TextError> {
        Ok(Self::new(
            parse_lemma_table(lemma_tsv)?,
            parse_word_list(stoplist),
            parse_word_list(pronouns),
        ))
    }

    pub fn with_abbreviations<I, S>(mut self, abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.abbreviations = abbreviations.into_iter().map(Into::into).collect();
        self
    }

    pub fn pronouns(&self) -> &HashSet<String> {
        &self.pronouns
    }

    pub fn stoplist(&self) -> &HashSet<String> {
        &self.stoplist
    }

    pub fn lemmatize(&self, surface: &str) -> String {
        let lower = surface.to_lowercase();
        match self.lemma_table.get(&lower) {
            Some(lemma) if !lemma.is_empty() => lemma.clone(),
            _ => lower,
        }
    }

    pub fn segment(&self, text: &str) -> Vec<String> {
        let abbreviations: Vec<&str> = self.abbreviations.iter().map(String::as_str).collect();
        segment_sentences_with(text, &abbreviations)
    }

    /// Every alphabetic token of `sentence`, lemmatised and flagged, stop-words included.
    pub fn lex(&self, sentence: &str, sentence_index: usize) -> Vec<Token> {
        sentence
            .split(|c: char| !c.is_alphabetic())
            .filter(|w| !w.is_empty())
            .enumerate()
            .map(|(token_index, surface)| {
                let lemma = self.lemmatize(surface);
                Token {
                    surface: surface.to_string(),
                    upos: UNTAGGED_UPOS.to_string(),
                    sentence_index,
                    token_index,
                    head_index: None,
                    deprel: None,
                    is_stop: self.is_stop_word(surface, &lemma),
                    is_pronoun: self.pronouns.contains(&lemma),
                    lemma,
                }
            })
            .collect()
    }

    /// Alphabetic tokens with stop-words removed; pronouns bypass the
    /// stop-list when `keep_pronouns` is set.
    pub fn tokenize_and_lemmatize(&self, sentence: &str, keep_pronouns: bool) -> Vec<Token> {
        self.lex(sentence, 0)
            .into_iter()
            .filter(|t| t.survives_filter(keep_pronouns))
            .collect()
    }

    /// Fill the stop-word and pronoun flags of parsed tokens.
    pub fn annotate(&self, sentences: &mut [Vec<Token>]) {
        for token in sentences.iter_mut().flatten() {
            token.lemma = token.lemma.to_lowercase();
            token.is_stop = self.is_stop_word(&token.surface, &token.lemma);
            token.is_pronoun = self.pronouns.contains(&token.lemma);
        }
    }

    /// Segment and lex a whole text, dropping sentences without alphabetic tokens.
    pub fn lex_text(&self, text: &str) -> Vec<Vec<Token>> {
        let mut out = Vec::new();
        for sentence in self.segment(text) {
            let tokens = self.lex(&sentence, out.len());
            if !tokens.is_empty() {
                out.push(tokens);
            }
        }
        out
    }

    fn is_stop_word(&self, surface: &str, lemma: &str) -> bool {
        self.stoplist.contains(&surface.to_lowercase()) || self.stoplist.contains(lemma)
    }
}

/// One `surface\tlemma` pair per line; blank lines and `#` comments are skipped.
pub fn parse_lemma_table(tsv: &str) -> Result<HashMap<String, String>, TextError> {
    let mut table = HashMap::new();
    for (i, line) in tsv.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(surface), Some(lemma), None) if !surface.is_empty() && !lemma.is_empty() => {
                table.insert(surface.to_lowercase(), lemma.to_lowercase());
            }
            _ => {
                return Err(TextError::Malformed {
                    line: i + 1,
                    message: "expected `surface<TAB>lemma`".into(),
                })
            }
        }
    }
    Ok(table)
}

/// One lowercase word per line.
pub fn parse_word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

/// Split text into sentences with the default abbreviation list.
pub fn segment_sentences(text: &str) -> Vec<String> {
    segment_sentences_with(text, DEFAULT_ABBREVIATIONS)
}

/// Split after runs of `.`, `!` or `?` (plus any closing quotes or brackets).
///
/// `!` and `?` end a sentence when followed by whitespace or the end of the
/// text. A bare period additionally needs the next word to start with an
/// uppercase letter, digit or opening quote, and must not close one of
/// `abbreviations` (compared lowercase, period included).
pub fn segment_sentences_with(text: &str, abbreviations: &[&str]) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    while i < chars.len() {
        let (_, c) = chars[i];
        if !matches!(c, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        let run_start = i;
        let mut strong = false;
        while i < chars.len() && matches!(chars[i].1, '.' | '!' | '?') {
            strong |= chars[i].1 != '.';
            i += 1;
        }
        while i < chars.len() && is_closing(chars[i].1) {
            i += 1;
        }
        let end_byte = chars.get(i).map_or(text.len(), |&(b, _)| b);

        let boundary = if i == chars.len() {
            true
        } else if !chars[i].1.is_whitespace() {
            false
        } else if strong {
            true
        } else {
            let mut j = i;
            while j < chars.len() && chars[j].1.is_whitespace() {
                j += 1;
            }
            let next_starts_sentence = chars
                .get(j)
                .is_some_and(|&(_, n)| n.is_uppercase() || n.is_ascii_digit() || is_opening(n));
            next_starts_sentence
                && !ends_with_abbreviation(&text[start..chars[run_start].0 + 1], abbreviations)
        };

        if boundary {
            let sentence = text[start..end_byte].trim();
            if !sentence.is_empty() {
                sentences.push(sentence.to_string());
            }
            start = end_byte;
        }
    }

    let rest = text[start..].trim();
    if !rest.is_empty() {
        sentences.push(rest.to_string());
    }
    sentences
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '’' | '”' | '»')
}

fn is_opening(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '‘' | '“' | '«')
}

fn ends_with_abbreviation(prefix: &str, abbreviations: &[&str]) -> bool {
    let last_word = prefix
        .rsplit(|c: char| c.is_whitespace() || is_opening(c))
        .next()
        .unwrap_or("")
        .to_lowercase();
    abbreviations.iter().any(|a| a.eq_ignore_ascii_case(&last_word))
}

/// Parse CoNLL-U into `story_id → sentences`.
///
/// Every sentence block needs a `# story_id = <id>` comment. HEAD is
/// converted from 1-based to a 0-based `head_index` (0 becomes `None`);
/// multiword ranges (`3-4`) and empty nodes (`5.1`) are skipped. Stop-word
/// and pronoun flags are left unset; see [`Preprocessor::annotate`].
pub fn read_conllu(bytes: &[u8]) -> Result<BTreeMap<String, Vec<Vec<Token>>>, TextError> {
    let text = std::str::from_utf8(bytes).map_err(|_| TextError::Encoding)?;
    let mut stories: BTreeMap<String, Vec<Vec<Token>>> = BTreeMap::new();
    let mut block = SentenceBlock::default();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            block.finish(&mut stories)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "story_id" {
                    block.story_id = Some(value.trim().to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(TextError::ColumnCount {
                line: line_no,
                found: cols.len(),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0].parse().map_err(|_| TextError::Malformed {
            line: line_no,
            message: format!("bad token id `{}`", cols[0]),
        })?;
        if id != block.tokens.len() + 1 {
            return Err(TextError::Malformed {
                line: line_no,
                message: format!("token id {id} out of sequence"),
            });
        }
        let head = match cols[6] {
            "_" | "0" => None,
            h => Some(h.parse::<usize>().map_err(|_| TextError::Malformed {
                line: line_no,
                message: format!("bad head `{h}`"),
            })? - 1),
        };
        let lemma = match cols[2] {
            "_" | "" => cols[1].to_lowercase(),
            l => l.to_lowercase(),
        };
        block.first_line.get_or_insert(line_no);
        block.lines.push(line_no);
        block.tokens.push(Token {
            surface: cols[1].to_string(),
            lemma,
            upos: if cols[3] == "_" { UNTAGGED_UPOS.to_string() } else { cols[3].to_string() },
            sentence_index: 0,
            token_index: id - 1,
            head_index: head,
            deprel: (cols[7] != "_").then(|| cols[7].to_string()),
            is_stop: false,
            is_pronoun: false,
        });
    }
    block.finish(&mut stories)?;
    Ok(stories)
}

#[derive(Default)]
struct SentenceBlock {
    story_id: Option<String>,
    tokens: Vec<Token>,
    lines: Vec<usize>,
    first_line: Option<usize>,
}

impl SentenceBlock {
    fn finish(&mut self, stories: &mut BTreeMap<String, Vec<Vec<Token>>>) -> Result<(), TextError> {
        let block = std::mem::take(self);
        if block.tokens.is_empty() {
            return Ok(());
        }
        let Some(story_id) = block.story_id else {
            return Err(TextError::MissingStoryId {
                line: block.first_line.unwrap_or(0),
            });
        };
        let n = block.tokens.len();
        for (t, &line) in block.tokens.iter().zip(&block.lines) {
            if let Some(h) = t.head_index {
                if h >= n || h == t.token_index {
                    return Err(TextError::Malformed {
                        line,
                        message: format!("head {} invalid for a {n}-token sentence", h + 1),
                    });
                }
            }
        }
        let sentences = stories.entry(story_id).or_default();
        let sentence_index = sentences.len();
        let mut tokens = block.tokens;
        for t in &mut tokens {
            t.sentence_index = sentence_index;
        }
        sentences.push(tokens);
        Ok(())
    }
}

/// Serialise parsed sentences back to CoNLL-U (the columns [`read_conllu`] reads).
pub fn write_conllu(stories: &BTreeMap<String, Vec<Vec<Token>>>) -> String {
    let mut out = String::new();
    for (story_id, sentences) in stories {
        for sentence in sentences {
            let _ = writeln!(out, "# story_id = {story_id}");
            for t in sentence {
                let head = t.head_index.map_or(0, |h| h + 1);
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
                    t.token_index + 1,
                    t.surface,
                    t.lemma,
                    t.upos,
                    head,
                    t.deprel.as_deref().unwrap_or("_"),
                );
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Story {
    pub id: String,
    pub prompt_lemmas: [String; 3],
    pub text: String,
    /// One token list per sentence. Plain-text stories hold every alphabetic
    /// token; parsed stories hold every token of the parse (punctuation
    /// included) so that tree distances stay intact.
    pub sentences: Vec<Vec<Token>>,
    pub parsed: bool,
    pub ratings: BTreeMap<String, u8>,
    /// Mean of `ratings`; `None` for unrated stories.
    pub mean_rating: Option<f64>,
}

impl Story {
    /// Build a story from raw text, lexing with `pre`, or from a dependency
    /// parse when one is supplied.
    pub fn new(
        id: impl Into<String>,
        prompts: &[String],
        text: impl Into<String>,
        ratings: BTreeMap<String, i64>,
        pre: &Preprocessor,
        parse: Option<Vec<Vec<Token>>>,
    ) -> Result<Self, TextError> {
        let id = id.into();
        let text = text.into();
        if prompts.len() != 3 {
            return Err(TextError::PromptCount {
                story: id,
                found: prompts.len(),
            });
        }
        let prompt_lemmas = [
            pre.lemmatize(prompts[0].trim()),
            pre.lemmatize(prompts[1].trim()),
            pre.lemmatize(prompts[2].trim()),
        ];
        let mut checked = BTreeMap::new();
        for (rater, value) in ratings {
            if !(1..=5).contains(&value) {
                return Err(TextError::RatingOutOfRange {
                    story: id,
                    rater,
                    value,
                });
            }
            checked.insert(rater, value as u8);
        }
        let mean_rating = (!checked.is_empty())
            .then(|| checked.values().map(|&v| f64::from(v)).sum::<f64>() / checked.len() as f64);
        let (sentences, parsed) = match parse {
            Some(mut sentences) => {
                sentences.retain(|s| !s.is_empty());
                pre.annotate(&mut sentences);
                for (i, s) in sentences.iter_mut().enumerate() {
                    s.iter_mut().for_each(|t| t.sentence_index = i);
                }
                (sentences, true)
            }
            None => (pre.lex_text(&text), false),
        };
        Ok(Self {
            id,
            prompt_lemmas,
            text,
            sentences,
            parsed,
            ratings: checked,
            mean_rating,
        })
    }

    /// Token lists after the stop-word filter, empty sentences dropped.
    pub fn filtered(&self, keep_pronouns: bool) -> Vec<Vec<Token>> {
        filter_sentences(&self.sentences, keep_pronouns)
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.iter().all(Vec::is_empty)
    }
}

/// Apply the stop-word filter to every sentence, dropping sentences left empty.
pub fn filter_sentences(sentences: &[Vec<Token>], keep_pronouns: bool) -> Vec<Vec<Token>> {
    sentences
        .iter()
        .map(|s| {
            s.iter()
                .filter(|t| t.survives_filter(keep_pronouns))
                .cloned()
                .collect::<Vec<_>>()
        })
        .filter(|s| !s.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptMatch {
    pub prompt_lemma: String,
    pub matched: bool,
    pub matched_node: Option<String>,
}

impl PromptMatch {
    /// Lemma to seed activation from: the matched node, else the prompt itself.
    pub fn seed(&self) -> &str {
        self.matched_node.as_deref().unwrap_or(&self.prompt_lemma)
    }
}

/// Check each prompt against the story tokens.
///
/// An exact lemma match anywhere wins; otherwise the first token whose lemma
/// or lowercased surface is within Levenshtein distance 1 of the prompt.
pub fn match_prompts(story: &Story) -> [PromptMatch; 3] {
    let tokens: Vec<&Token> = story
        .sentences
        .iter()
        .flatten()
        .filter(|t| t.is_alphabetic())
        .collect();
    story.prompt_lemmas.clone().map(|prompt| {
        let exact = tokens.iter().find(|t| t.lemma == prompt);
        let found = exact.or_else(|| {
            tokens.iter().find(|t| {
                strsim::levenshtein(&t.lemma, &prompt) <= 1
                    || strsim::levenshtein(&t.surface.to_lowercase(), &prompt) <= 1
            })
        });
        PromptMatch {
            matched: found.is_some(),
            matched_node: found.map(|t| t.lemma.clone()),
            prompt_lemma: prompt,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pre(table: &[(&str, &str)], stop: &[&str], pronouns: &[&str]) -> Preprocessor {
        Preprocessor::new(
            table.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            stop.iter().map(|s| s.to_string()).collect(),
            pronouns.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn lemmas(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.lemma.as_str()).collect()
    }

    #[test]
    fn segment_basic_cases() {
        assert!(segment_sentences("").is_empty());
        assert_eq!(segment_sentences("A cat. A dog!"), vec!["A cat.", "A dog!"]);
    }

    #[test]
    fn segment_keeps_abbreviations_and_decimals_together() {
        assert_eq!(
            segment_sentences("Dr. Smith paid 3.5 dollars. Then he left."),
            vec!["Dr. Smith paid 3.5 dollars.", "Then he left."]
        );
        // lowercase continuation after a period is not a boundary
        assert_eq!(segment_sentences("It was late. and dark."), vec!["It was late. and dark."]);
        assert_eq!(segment_sentences("Why? because."), vec!["Why?", "because."]);
        assert_eq!(
            segment_sentences("He said \"stop.\" Then nothing"),
            vec!["He said \"stop.\"", "Then nothing"]
        );
    }

    #[test]
    fn tokenize_lemmatizes_and_drops_stop_words() {
        let p = pre(&[("children", "child"), ("played", "play")], &["the"], &[]);
        assert_eq!(lemmas(&p.tokenize_and_lemmatize("The children played", false)), ["child", "play"]);
    }

    #[test]
    fn tokenize_keeps_pronouns_on_request() {
        let p = pre(&[], &["i", "it"], &["i", "it"]);
        assert_eq!(lemmas(&p.tokenize_and_lemmatize("I like it", true)), ["i", "like", "it"]);
        assert_eq!(lemmas(&p.tokenize_and_lemmatize("I like it", false)), ["like"]);
    }

    #[test]
    fn tokenize_drops_non_alphabetic() {
        let p = pre(&[], &[], &[]);
        assert!(p.tokenize_and_lemmatize("12 %% !!", true).is_empty());
        // contractions split on the apostrophe
        assert_eq!(lemmas(&p.tokenize_and_lemmatize("don't", true)), ["don", "t"]);
    }

    #[test]
    fn conllu_empty_and_simple() {
        assert!(read_conllu(b"").unwrap().is_empty());
        let src = "# story_id = s1\n1\tLucy\tLucy\tPROPN\t_\t_\t2\tnsubj\t_\t_\n2\tloves\tlove\tVERB\t_\t_\t0\troot\t_\t_\n3\thiking\thiking\tNOUN\t_\t_\t2\tobj\t_\t_\n";
        let parsed = read_conllu(src.as_bytes()).unwrap();
        let sent = &parsed["s1"][0];
        assert_eq!(sent.len(), 3);
        assert_eq!(sent[0].lemma, "lucy");
        assert_eq!(sent[0].head_index, Some(1));
        assert_eq!(sent[1].head_index, None);
        assert_eq!(sent[2].deprel.as_deref(), Some("obj"));
    }

    #[test]
    fn conllu_skips_ranges_and_empty_nodes() {
        let src = "# story_id = s\n1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n1\tdo\tdo\tAUX\t_\t_\t3\taux\t_\t_\n2\tn't\tnot\tPART\t_\t_\t3\tneg\t_\t_\n2.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n3\tgo\tgo\tVERB\t_\t_\t0\troot\t_\t_\n";
        let parsed = read_conllu(src.as_bytes()).unwrap();
        assert_eq!(lemmas(&parsed["s"][0]), ["do", "not", "go"]);
    }

    #[test]
    fn conllu_errors_name_the_line() {
        let err = read_conllu(b"# story_id = a\n1\tx\tx\tX\t_\t_\t0\n").unwrap_err();
        assert!(matches!(err, TextError::ColumnCount { line: 2, found: 7 }));
        let err = read_conllu(b"\n1\tx\tx\tX\t_\t_\t0\troot\t_\t_\n").unwrap_err();
        assert!(matches!(err, TextError::MissingStoryId { line: 2 }));
        let err = read_conllu(b"# story_id = a\n1\tx\tx\tX\t_\t_\t1\tdep\t_\t_\n").unwrap_err();
        assert!(matches!(err, TextError::Malformed { line: 2, .. }));
    }

    #[test]
    fn prompt_matching_tolerates_one_edit() {
        let p = pre(&[], &[], &[]);
        let story = |text: &str, prompts: [&str; 3]| {
            let prompts: Vec<String> = prompts.iter().map(|s| s.to_string()).collect();
            Story::new("s", &prompts, text, BTreeMap::new(), &p, None).unwrap()
        };
        let s = story("We saw a sign at the pumps", ["sing", "pump", "sign"]);
        let [sing, pump, sign] = match_prompts(&s);
        // sing/sign is a transposition: two edits
        assert!(!sing.matched && sing.matched_node.is_none());
        assert!(pump.matched);
        assert_eq!(pump.matched_node.as_deref(), Some("pumps"));
        assert_eq!(sign.matched_node.as_deref(), Some("sign"));
        // a single substitution is within tolerance
        let s = story("They hummed a song", ["sing", "hum", "they"]);
        assert_eq!(match_prompts(&s)[0].matched_node.as_deref(), Some("song"));
    }

    #[test]
    fn story_rejects_bad_ratings_and_computes_mean() {
        let p = pre(&[], &[], &[]);
        let prompts = vec!["a".to_string(), "b".into(), "c".into()];
        let ratings: BTreeMap<String, i64> = [("h".to_string(), 2), ("j".to_string(), 5)].into();
        let s = Story::new("s", &prompts, "x", ratings, &p, None).unwrap();
        assert!((s.mean_rating.unwrap() - 3.5).abs() < 1e-12);
        let bad: BTreeMap<String, i64> = [("h".to_string(), 6)].into();
        assert!(Story::new("s", &prompts, "x", bad, &p, None).is_err());
    }
}

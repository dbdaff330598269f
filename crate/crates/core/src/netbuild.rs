//! Network builders: sliding-window co-occurrence and dependency-radius
//! (textual forma mentis) networks, valence annotation and relation-file
//! enrichment.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::affect::{detect_negations, EmotionLexicon, NegationCues};
use crate::graph::IndexedGraph;
use crate::textpipe::{Story, Token};

/// Universal POS tags whose non-stop tokens become dependency-network nodes.
pub const CONTENT_UPOS: &[&str] = &["NOUN", "PROPN", "VERB", "ADJ", "ADV"];

pub const DEFAULT_RADIUS: usize = 3;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sentence {sentence}: cyclic head structure at token {token}")]
    CyclicParse { sentence: usize, token: usize },
    #[error("story {0} has no dependency parse; the TFMN builder needs CoNLL-U input")]
    MissingParse(String),
    #[error("relation file line {line}: {message}")]
    Relation { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum BuilderTag {
    Cooccurrence { window: usize, pronouns: bool },
    Tfmn,
}

/// The seven builders compared throughout, in reporting order.
pub const CANONICAL_BUILDERS: [BuilderTag; 7] = [
    BuilderTag::Cooccurrence { window: 2, pronouns: false },
    BuilderTag::Cooccurrence { window: 3, pronouns: false },
    BuilderTag::Cooccurrence { window: 4, pronouns: false },
    BuilderTag::Cooccurrence { window: 2, pronouns: true },
    BuilderTag::Cooccurrence { window: 3, pronouns: true },
    BuilderTag::Cooccurrence { window: 4, pronouns: true },
    BuilderTag::Tfmn,
];

impl BuilderTag {
    pub fn is_canonical(&self) -> bool {
        CANONICAL_BUILDERS.contains(self)
    }
}

impl fmt::Display for BuilderTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuilderTag::Cooccurrence { window, pronouns: false } => write!(f, "coocc_WS{window}"),
            BuilderTag::Cooccurrence { window, pronouns: true } => write!(f, "coocc_p_WS{window}"),
            BuilderTag::Tfmn => f.write_str("TFMN"),
        }
    }
}

impl FromStr for BuilderTag {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NetError::InvalidParameter(format!("unknown builder tag `{s}`"));
        if s.eq_ignore_ascii_case("tfmn") {
            return Ok(BuilderTag::Tfmn);
        }
        let (pronouns, rest) = if let Some(rest) = s.strip_prefix("coocc_p_WS") {
            (true, rest)
        } else if let Some(rest) = s.strip_prefix("coocc_WS") {
            (false, rest)
        } else {
            return Err(bad());
        };
        let window: usize = rest.parse().map_err(|_| bad())?;
        if window < 2 {
            return Err(bad());
        }
        Ok(BuilderTag::Cooccurrence { window, pronouns })
    }
}

impl From<BuilderTag> for String {
    fn from(tag: BuilderTag) -> Self {
        tag.to_string()
    }
}

impl TryFrom<String> for BuilderTag {
    type Error = NetError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Valence {
    Positive,
    Negative,
    Neutral,
}

impl Valence {
    pub fn as_str(&self) -> &'static str {
        match self {
            Valence::Positive => "positive",
            Valence::Negative => "negative",
            Valence::Neutral => "neutral",
        }
    }
}

/// Simple undirected, unweighted graph over lemma-labelled nodes.
///
/// Edges are stored as ordered pairs `(a, b)` with `a < b`; self-loops are
/// rejected and every endpoint is always a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalNetwork {
    tag: BuilderTag,
    nodes: BTreeMap<String, Option<Valence>>,
    edges: BTreeSet<(String, String)>,
}

impl LexicalNetwork {
    pub fn new(tag: BuilderTag) -> Self {
        Self {
            tag,
            nodes: BTreeMap::new(),
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges<'a>(
        tag: BuilderTag,
        nodes: impl IntoIterator<Item = &'a str>,
        edges: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Self {
        let mut net = Self::new(tag);
        for n in nodes {
            net.add_node(n);
        }
        for (a, b) in edges {
            net.add_edge(a, b);
        }
        net
    }

    pub fn tag(&self) -> BuilderTag {
        self.tag
    }

    pub fn add_node(&mut self, lemma: &str) {
        if !self.nodes.contains_key(lemma) {
            self.nodes.insert(lemma.to_string(), None);
        }
    }

    /// Add an undirected edge, creating missing endpoints. Returns `false`
    /// for self-loops and edges already present.
    pub fn add_edge(&mut self, a: &str, b: &str) -> bool {
        if a == b {
            return false;
        }
        self.add_node(a);
        self.add_node(b);
        let key = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        self.edges.insert(key)
    }

    pub fn contains_node(&self, lemma: &str) -> bool {
        self.nodes.contains_key(lemma)
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        let key = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        self.edges.contains(&key)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn valence(&self, lemma: &str) -> Option<Valence> {
        self.nodes.get(lemma).copied().flatten()
    }

    pub fn to_indexed(&self) -> IndexedGraph {
        let labels: Vec<String> = self.nodes.keys().cloned().collect();
        let pos: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|(a, b)| (pos[a.as_str()], pos[b.as_str()])).collect();
        IndexedGraph::from_edges(labels, edges)
    }

    /// `source,target` CSV with a header row, rows sorted lexicographically.
    pub fn to_edge_csv(&self) -> String {
        let mut out = String::from("source,target\n");
        for (a, b) in &self.edges {
            out.push_str(&csv_field(a));
            out.push(',');
            out.push_str(&csv_field(b));
            out.push('\n');
        }
        out
    }

    /// GraphML document with valence as a node attribute.
    pub fn to_graphml(&self) -> String {
        let mut out = String::from(concat!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
            "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n",
            "  <key id=\"valence\" for=\"node\" attr.name=\"valence\" attr.type=\"string\"/>\n",
        ));
        out.push_str(&format!("  <graph id=\"{}\" edgedefault=\"undirected\">\n", xml_escape(&self.tag.to_string())));
        for (lemma, valence) in &self.nodes {
            let id = xml_escape(lemma);
            match valence {
                Some(v) => out.push_str(&format!(
                    "    <node id=\"{id}\"><data key=\"valence\">{}</data></node>\n",
                    v.as_str()
                )),
                None => out.push_str(&format!("    <node id=\"{id}\"/>\n")),
            }
        }
        for (a, b) in &self.edges {
            out.push_str(&format!(
                "    <edge source=\"{}\" target=\"{}\"/>\n",
                xml_escape(a),
                xml_escape(b)
            ));
        }
        out.push_str("  </graph>\n</graphml>\n");
        out
    }

    /// SHA-256 over the sorted edge list and node list.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_edge_csv().as_bytes());
        for n in self.nodes.keys() {
            hasher.update(n.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// Sliding-window co-occurrence network.
///
/// Within each sentence the token at position `i` is linked to positions
/// `i+1 ..= i+window-1`. Tokens failing the stop-word filter for the given
/// pronoun policy are dropped first; surviving lemmas are nodes even when
/// they end up unlinked.
pub fn build_cooccurrence(
    sentences: &[Vec<Token>],
    window: usize,
    keep_pronouns: bool,
) -> Result<LexicalNetwork, NetError> {
    if window < 2 {
        return Err(NetError::InvalidParameter(format!("window size must be >= 2, got {window}")));
    }
    let mut net = LexicalNetwork::new(BuilderTag::Cooccurrence {
        window,
        pronouns: keep_pronouns,
    });
    for sentence in sentences {
        let lemmas: Vec<&str> = sentence
            .iter()
            .filter(|t| t.survives_filter(keep_pronouns))
            .map(|t| t.lemma.as_str())
            .collect();
        for (i, a) in lemmas.iter().enumerate() {
            net.add_node(a);
            for b in lemmas.iter().take(i + window).skip(i + 1) {
                net.add_edge(a, b);
            }
        }
    }
    Ok(net)
}

/// Whether a parsed token becomes a dependency-network node.
pub fn is_content_token(token: &Token) -> bool {
    token.is_alphabetic()
        && (token.is_pronoun || (!token.is_stop && CONTENT_UPOS.contains(&token.upos.as_str())))
}

/// Dependency-radius network: content tokens within `radius` hops of each
/// other on the (undirected) syntax tree are linked. All tokens count as
/// path steps, but only content tokens become nodes. Sentence networks are
/// merged by lemma.
pub fn build_dependency_network(sentences: &[Vec<Token>], radius: usize) -> Result<LexicalNetwork, NetError> {
    if radius < 1 {
        return Err(NetError::InvalidParameter(format!("radius must be >= 1, got {radius}")));
    }
    let mut net = LexicalNetwork::new(BuilderTag::Tfmn);
    for (s, sentence) in sentences.iter().enumerate() {
        check_acyclic(sentence, s)?;
        let tree = sentence_tree(sentence);
        let content: Vec<bool> = sentence.iter().map(is_content_token).collect();
        for (i, token) in sentence.iter().enumerate() {
            if !content[i] {
                continue;
            }
            net.add_node(&token.lemma);
            for (j, d) in bounded_bfs(&tree, i, radius) {
                if j > i && content[j] && d <= radius {
                    net.add_edge(&token.lemma, &sentence[j].lemma);
                }
            }
        }
    }
    Ok(net)
}

fn check_acyclic(sentence: &[Token], sentence_index: usize) -> Result<(), NetError> {
    let n = sentence.len();
    for start in 0..n {
        let mut cur = start;
        let mut steps = 0;
        while let Some(h) = sentence[cur].head_index {
            if h >= n {
                return Err(NetError::InvalidParameter(format!(
                    "sentence {sentence_index}: head {h} out of range"
                )));
            }
            cur = h;
            steps += 1;
            if steps > n {
                return Err(NetError::CyclicParse {
                    sentence: sentence_index,
                    token: start,
                });
            }
        }
    }
    Ok(())
}

fn sentence_tree(sentence: &[Token]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); sentence.len()];
    for (i, t) in sentence.iter().enumerate() {
        if let Some(h) = t.head_index {
            adj[i].push(h);
            adj[h].push(i);
        }
    }
    adj
}

pub(crate) fn bounded_bfs(adj: &[Vec<usize>], source: usize, limit: usize) -> Vec<(usize, usize)> {
    let mut dist = vec![usize::MAX; adj.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::from([source]);
    dist[source] = 0;
    while let Some(u) = queue.pop_front() {
        if dist[u] >= limit {
            continue;
        }
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                out.push((v, dist[v]));
                queue.push_back(v);
            }
        }
    }
    out
}

/// One occurrence of a lemma in the text, with its negation status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaOccurrence {
    pub lemma: String,
    pub negated: bool,
}

/// Label every node positive, negative or neutral.
///
/// Each occurrence votes with its lexicon valence, flipped when negated;
/// the majority wins and ties are neutral. Nodes without listed occurrences
/// vote once, unnegated.
pub fn annotate_valence(
    net: &LexicalNetwork,
    lexicon: &EmotionLexicon,
    occurrences: &[LemmaOccurrence],
) -> LexicalNetwork {
    let mut votes: BTreeMap<&str, i64> = BTreeMap::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let vote = |lemma: &str, negated: bool| -> i64 {
        let (pos, neg) = lexicon.polarity(lemma);
        let v = i64::from(pos) - i64::from(neg);
        if negated {
            -v
        } else {
            v
        }
    };
    for occ in occurrences {
        if net.contains_node(&occ.lemma) {
            *votes.entry(occ.lemma.as_str()).or_default() += vote(&occ.lemma, occ.negated);
            seen.insert(occ.lemma.as_str());
        }
    }
    let mut out = net.clone();
    for (lemma, valence) in out.nodes.iter_mut() {
        let score = if seen.contains(lemma.as_str()) {
            votes.get(lemma.as_str()).copied().unwrap_or(0)
        } else {
            vote(lemma, false)
        };
        *valence = Some(match score.signum() {
            1 => Valence::Positive,
            -1 => Valence::Negative,
            _ => Valence::Neutral,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Synonym,
    Hypernym,
}

/// Lexical relations (synonym, hypernym) used to enrich networks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelationFile {
    pub relations: Vec<(String, String, RelationKind)>,
}

impl RelationFile {
    /// Parse `lemma<TAB>lemma<TAB>kind` lines.
    pub fn parse(tsv: &str) -> Result<Self, NetError> {
        let mut relations = Vec::new();
        for (i, line) in tsv.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| NetError::Relation {
                line: i + 1,
                message: message.to_string(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(err("expected `lemma<TAB>lemma<TAB>kind`"));
            }
            let (a, b) = (cols[0].trim().to_lowercase(), cols[1].trim().to_lowercase());
            if a.is_empty() || b.is_empty() {
                return Err(err("empty lemma"));
            }
            if a == b {
                return Err(err("self-relation"));
            }
            let kind = match cols[2].trim().to_lowercase().as_str() {
                "synonym" => RelationKind::Synonym,
                "hypernym" | "hyponym" => RelationKind::Hypernym,
                other => return Err(err(&format!("unknown relation kind `{other}`"))),
            };
            relations.push((a, b, kind));
        }
        Ok(Self { relations })
    }
}

/// Add relation edges whose endpoints are both already nodes.
pub fn add_semantic_edges(net: &LexicalNetwork, relations: &RelationFile) -> LexicalNetwork {
    let mut out = net.clone();
    for (a, b, _) in &relations.relations {
        if net.contains_node(a) && net.contains_node(b) {
            out.add_edge(a, b);
        }
    }
    out
}

/// Inputs shared by the seven builders.
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions<'a> {
    pub radius: usize,
    pub relations: Option<&'a RelationFile>,
    pub lexicon: Option<&'a EmotionLexicon>,
    pub negation_cues: &'a NegationCues,
}

impl<'a> BuildOptions<'a> {
    pub fn new(negation_cues: &'a NegationCues) -> Self {
        Self {
            radius: DEFAULT_RADIUS,
            relations: None,
            lexicon: None,
            negation_cues,
        }
    }
}

/// Build one network variant for a story.
pub fn build_variant(story: &Story, tag: BuilderTag, opts: &BuildOptions<'_>) -> Result<LexicalNetwork, NetError> {
    match tag {
        BuilderTag::Cooccurrence { window, pronouns } => {
            build_cooccurrence(&story.filtered(pronouns), window, pronouns)
        }
        BuilderTag::Tfmn => {
            if !story.parsed && !story.is_empty() {
                return Err(NetError::MissingParse(story.id.clone()));
            }
            let mut net = build_dependency_network(&story.sentences, opts.radius)?;
            if let Some(relations) = opts.relations {
                net = add_semantic_edges(&net, relations);
            }
            if let Some(lexicon) = opts.lexicon {
                net = annotate_valence(&net, lexicon, &content_occurrences(story, opts.negation_cues));
            }
            Ok(net)
        }
    }
}

/// The six co-occurrence variants and the TFMN, in [`CANONICAL_BUILDERS`] order.
pub fn build_all_variants(story: &Story, opts: &BuildOptions<'_>) -> Result<Vec<LexicalNetwork>, NetError> {
    CANONICAL_BUILDERS.iter().map(|&tag| build_variant(story, tag, opts)).collect()
}

fn content_occurrences(story: &Story, cues: &NegationCues) -> Vec<LemmaOccurrence> {
    let mut out = Vec::new();
    for sentence in &story.sentences {
        let negated = detect_negations(sentence, cues);
        for (i, t) in sentence.iter().enumerate() {
            if is_content_token(t) {
                out.push(LemmaOccurrence {
                    lemma: t.lemma.clone(),
                    negated: negated.contains(&i),
                });
            }
        }
    }
    out
}

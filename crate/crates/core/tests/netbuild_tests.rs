mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{figure2_story, fixture, preprocessor, strings};
use proptest::prelude::*;
use storynet_core::affect::{EmotionLexicon, NegationCues};
use storynet_core::graphmetrics::components;
use storynet_core::netbuild::{
    annotate_valence, build_all_variants, build_cooccurrence, build_dependency_network, BuildOptions, LemmaOccurrence,
    CANONICAL_BUILDERS,
};
use storynet_core::textpipe::{filter_sentences, read_conllu, Story, Token};
use storynet_core::{BuilderTag, LexicalNetwork, Valence};

fn edges(net: &LexicalNetwork) -> BTreeSet<(String, String)> {
    net.edges().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

fn by_tag(nets: &[LexicalNetwork], tag: &str) -> LexicalNetwork {
    let tag: BuilderTag = tag.parse().unwrap();
    nets.iter().find(|n| n.tag() == tag).unwrap().clone()
}

#[test]
fn pronoun_i_connects_the_gloom_story() {
    let cues = NegationCues::default();
    let nets = build_all_variants(&figure2_story(true), &BuildOptions::new(&cues)).unwrap();
    assert_eq!(nets.len(), 7);
    for ws in 2..=4 {
        let plain = by_tag(&nets, &format!("coocc_WS{ws}"));
        let with_p = by_tag(&nets, &format!("coocc_p_WS{ws}"));
        assert!(!plain.contains_node("i"));
        assert!(with_p.contains_node("i"));
        assert!(with_p.to_indexed().degree(with_p.to_indexed().index_of("i").unwrap()) >= 4);
    }
    let ws2 = components(&by_tag(&nets, "coocc_WS2").to_indexed()).len();
    let ws2p = components(&by_tag(&nets, "coocc_p_WS2").to_indexed()).len();
    assert!(ws2 > ws2p, "coocc_WS2 has {ws2} components, coocc_p_WS2 has {ws2p}");
}

#[test]
fn plain_text_story_builds_cooccurrence_but_not_tfmn() {
    let story = figure2_story(false);
    let cues = NegationCues::default();
    let opts = BuildOptions::new(&cues);
    assert!(build_all_variants(&story, &opts).is_err());
    let net = build_cooccurrence(&story.filtered(true), 3, true).unwrap();
    assert!(net.contains_node("gloom") && net.contains_node("i"));
}

#[test]
fn tfmn_links_lucy_across_the_interruption() {
    let parsed = read_conllu(fixture("lucy.conllu").as_bytes()).unwrap();
    let pre = preprocessor();
    let mut long = parsed["lucy-long"].clone();
    pre.annotate(&mut long);
    let tfmn = build_dependency_network(&long, 3).unwrap();
    assert!(tfmn.has_edge("lucy", "love"));
    assert!(tfmn.has_edge("lucy", "hiking"));
    let coocc = build_cooccurrence(&filter_sentences(&long, false), 2, false).unwrap();
    assert!(!coocc.has_edge("lucy", "love"));

    let mut short = parsed["lucy-short"].clone();
    pre.annotate(&mut short);
    let net = build_dependency_network(&short, 3).unwrap();
    let expected: BTreeSet<(String, String)> =
        [("love", "lucy"), ("hiking", "lucy"), ("hiking", "love")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    assert_eq!(edges(&net), expected);
}

#[test]
fn empty_story_gives_seven_empty_networks() {
    let pre = preprocessor();
    let story = Story::new("e", &strings(&["a", "b", "c"]), "", BTreeMap::new(), &pre, None).unwrap();
    let cues = NegationCues::default();
    let nets = build_all_variants(&story, &BuildOptions::new(&cues)).unwrap();
    assert_eq!(nets.iter().map(LexicalNetwork::tag).collect::<Vec<_>>(), CANONICAL_BUILDERS.to_vec());
    assert!(nets.iter().all(|n| n.node_count() == 0 && n.edge_count() == 0));
}

#[test]
fn child_play_is_linked_by_every_builder() {
    let conllu = "# story_id = cp\n1\tchild\tchild\tNOUN\t_\t_\t2\tnsubj\t_\t_\n2\tplay\tplay\tVERB\t_\t_\t0\troot\t_\t_\n";
    let parse = read_conllu(conllu.as_bytes()).unwrap().remove("cp");
    let pre = preprocessor();
    let story = Story::new("cp", &strings(&["child", "play", "x"]), "child play", BTreeMap::new(), &pre, parse).unwrap();
    let cues = NegationCues::default();
    for net in build_all_variants(&story, &BuildOptions::new(&cues)).unwrap() {
        assert!(net.has_edge("child", "play"), "{}", net.tag());
    }
}

#[test]
fn tfmn_valence_flips_under_negation() {
    let lexicon = EmotionLexicon::parse(&fixture("lexicon_small.tsv")).unwrap();
    let conllu = "# story_id = v\n\
1\tI\tI\tPRON\t_\t_\t4\tnsubj\t_\t_\n\
2\tam\tbe\tAUX\t_\t_\t4\tcop\t_\t_\n\
3\tnot\tnot\tPART\t_\t_\t4\tadvmod\t_\t_\n\
4\tangry\tangry\tADJ\t_\t_\t0\troot\t_\t_\n\
5\tat\tat\tADP\t_\t_\t7\tcase\t_\t_\n\
6\tthe\tthe\tDET\t_\t_\t7\tdet\t_\t_\n\
7\ttable\ttable\tNOUN\t_\t_\t4\tobl\t_\t_\n\
\n# story_id = v\n\
1\thappy\thappy\tADJ\t_\t_\t0\troot\t_\t_\n";
    let parse = read_conllu(conllu.as_bytes()).unwrap().remove("v");
    let pre = preprocessor();
    let story = Story::new("v", &strings(&["angry", "table", "happy"]), "", BTreeMap::new(), &pre, parse).unwrap();
    let cues = NegationCues::default();
    let mut opts = BuildOptions::new(&cues);
    opts.lexicon = Some(&lexicon);
    let tfmn = build_all_variants(&story, &opts).unwrap().pop().unwrap();
    assert_eq!(tfmn.valence("angry"), Some(Valence::Positive));
    assert_eq!(tfmn.valence("happy"), Some(Valence::Positive));
    assert_eq!(tfmn.valence("table"), Some(Valence::Neutral));
    assert!(tfmn.to_graphml().contains("<data key=\"valence\">positive</data>"));
}

#[test]
fn valence_ties_are_neutral() {
    let lexicon = EmotionLexicon::parse(&fixture("lexicon_small.tsv")).unwrap();
    let net = LexicalNetwork::from_edges(BuilderTag::Tfmn, ["grim"], []);
    let occ = |negated| LemmaOccurrence {
        lemma: "grim".into(),
        negated,
    };
    assert_eq!(annotate_valence(&net, &lexicon, &[occ(false), occ(true)]).valence("grim"), Some(Valence::Neutral));
    assert_eq!(annotate_valence(&net, &lexicon, &[occ(false), occ(true), occ(true)]).valence("grim"), Some(Valence::Positive));
    assert_eq!(annotate_valence(&net, &lexicon, &[]).valence("grim"), Some(Valence::Negative));
}

fn token(lemma: &str, i: usize) -> Token {
    Token {
        surface: lemma.to_string(),
        lemma: lemma.to_string(),
        upos: if lemma.len() <= 2 { "ADP".into() } else { "NOUN".into() },
        sentence_index: 0,
        token_index: i,
        head_index: None,
        deprel: None,
        is_stop: lemma.len() <= 2,
        is_pronoun: lemma == "me",
    }
}

fn lemma_pool() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["cat", "dog", "bird", "tree", "fish", "lake", "at", "of", "me", "sky"]).prop_map(str::to_string)
}

fn sentences() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(prop::collection::vec(lemma_pool(), 1..10), 0..6)
}

/// Random parse: each token after the first attaches to an earlier one.
fn parsed_sentences() -> impl Strategy<Value = Vec<Vec<Token>>> {
    prop::collection::vec(
        prop::collection::vec((lemma_pool(), any::<prop::sample::Index>()), 1..10).prop_map(|items| {
            items
                .iter()
                .enumerate()
                .map(|(i, (l, h))| {
                    let mut t = token(l, i);
                    t.head_index = (i > 0).then(|| h.index(i));
                    t
                })
                .collect()
        }),
        0..5,
    )
}

fn to_tokens(s: &[Vec<String>], keep_pronouns: bool) -> Vec<Vec<Token>> {
    s.iter()
        .map(|sent| {
            sent.iter()
                .enumerate()
                .map(|(i, l)| token(l, i))
                .filter(|t| t.survives_filter(keep_pronouns))
                .collect()
        })
        .collect()
}

proptest! {
    #[test]
    fn window_monotonicity(s in sentences(), ws in 2usize..6) {
        let t = to_tokens(&s, false);
        let small = edges(&build_cooccurrence(&t, ws, false).unwrap());
        let large = edges(&build_cooccurrence(&t, ws + 1, false).unwrap());
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn pronoun_nodes_superset(s in sentences(), ws in 2usize..5) {
        let plain = build_cooccurrence(&to_tokens(&s, false), ws, false).unwrap();
        let with_p = build_cooccurrence(&to_tokens(&s, true), ws, true).unwrap();
        prop_assert!(plain.nodes().all(|n| with_p.contains_node(n)));
    }

    #[test]
    fn radius_monotonicity(s in parsed_sentences(), r in 1usize..5) {
        let small = edges(&build_dependency_network(&s, r).unwrap());
        let large = edges(&build_dependency_network(&s, r + 1).unwrap());
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn merge_is_order_invariant(s in parsed_sentences(), ws in 2usize..5) {
        let mut rev = s.clone();
        rev.reverse();
        prop_assert_eq!(build_dependency_network(&s, 3).unwrap().digest(), build_dependency_network(&rev, 3).unwrap().digest());
        let co = build_cooccurrence(&s, ws, true).unwrap();
        let co_rev = build_cooccurrence(&rev, ws, true).unwrap();
        prop_assert_eq!(co.digest(), co_rev.digest());
    }

    #[test]
    fn simple_graph_invariants(s in parsed_sentences()) {
        let net = build_dependency_network(&s, 3).unwrap();
        for (a, b) in net.edges() {
            prop_assert!(a < b);
            prop_assert!(net.contains_node(a) && net.contains_node(b));
        }
        prop_assert_eq!(net.to_indexed().edge_count(), net.edge_count());
        prop_assert_eq!(net.digest(), build_dependency_network(&s.clone(), 3).unwrap().digest());
    }
}

//! The eight pipeline stages. Each reads its inputs from the config and the
//! output directory, writes its artifacts and a manifest, and returns the
//! paths it wrote.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use storynet_core::activation::{seed_alpha, SpreadingParams};
use storynet_core::affect::{profile_story, NegationCues, DEFAULT_NEGATION_CUES};
use storynet_core::graphmetrics::{histogram, structural_features, StructuralFeatures};
use storynet_core::netbuild::{build_variant, BuildOptions, BuilderTag, NetError};
use storynet_core::stats::{pairwise_signflip, wilcoxon_signed_rank};
use storynet_core::textpipe::{match_prompts, read_conllu, DEFAULT_PRONOUNS};
use storynet_core::{Alternative, Emotion, EmotionLexicon, Preprocessor, RelationFile, Story, TestResult};
use storynet_ml::cv::{cv_models, EvalResult};
use storynet_ml::seeds::derive_seed;
use storynet_ml::{cell_dataset, cell_seeds, run_matrix, shapley_attribution, FeatureConfig, MatrixSpec, ModelSpec, StoryFeatures};

use crate::artifacts::*;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::manifest::Manifest;

/// Steps of the activation trajectory exported per seed.
pub const TRAJECTORY_STEPS: usize = 100;
pub const HISTOGRAM_BINS: usize = 10;

const REQUIRED_COLUMNS: [&str; 5] = ["id", "prompt1", "prompt2", "prompt3", "text"];

fn prepare(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))
}

fn optional_text(path: &Option<PathBuf>, manifest: &mut Manifest) -> Result<Option<String>> {
    match path {
        Some(p) => {
            manifest.input(p)?;
            Ok(Some(read_text(p)?))
        }
        None => Ok(None),
    }
}

fn negation_cues(cfg: &RunConfig, manifest: &mut Manifest) -> Result<NegationCues> {
    Ok(match optional_text(&cfg.negation_cues, manifest)? {
        Some(text) => NegationCues::parse(&text),
        None => NegationCues::parse(DEFAULT_NEGATION_CUES),
    })
}

fn lexicon(cfg: &RunConfig, manifest: &mut Manifest) -> Result<Option<EmotionLexicon>> {
    optional_text(&cfg.lexicon, manifest)?
        .map(|t| EmotionLexicon::parse(&t).map_err(|e| CliError::bad(format!("lexicon: {e}"))))
        .transpose()
}

fn finish(mut manifest: Manifest, cfg: &RunConfig, written: Vec<PathBuf>) -> Result<Vec<PathBuf>> {
    for p in &written {
        manifest.output(p);
    }
    let m = manifest.write(&cfg.out)?;
    let mut all = written;
    all.push(m);
    Ok(all)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Exclusion {
    story_id: String,
    unmatched_prompts: String,
}

/// Read the stories CSV, lex or attach parses, and drop stories missing a prompt.
pub fn preprocess(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    prepare(cfg)?;
    let mut manifest = Manifest::new("preprocess", cfg);
    let stories_path = cfg
        .stories
        .clone()
        .ok_or_else(|| CliError::bad("preprocess needs --stories"))?;
    manifest.input(&stories_path)?;
    let lemmas = optional_text(&cfg.lemmas, &mut manifest)?.unwrap_or_default();
    let stoplist = optional_text(&cfg.stoplist, &mut manifest)?.unwrap_or_default();
    let pronouns = optional_text(&cfg.pronouns, &mut manifest)?.unwrap_or_else(|| DEFAULT_PRONOUNS.to_string());
    let pre = Preprocessor::from_resources(&lemmas, &stoplist, &pronouns).map_err(|e| CliError::bad(format!("lemma table: {e}")))?;
    let mut parses = match &cfg.conllu {
        Some(p) => {
            manifest.input(p)?;
            let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
            read_conllu(&bytes).map_err(|e| CliError::bad(format!("{}: {e}", p.display())))?
        }
        None => BTreeMap::new(),
    };

    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(&stories_path)
        .map_err(csv_err(&stories_path))?;
    let headers = rdr.headers().map_err(csv_err(&stories_path))?.clone();
    let mut retained = Vec::new();
    let mut excluded = Vec::new();
    if !headers.is_empty() {
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let mut idx = [0usize; 5];
        for (k, name) in REQUIRED_COLUMNS.iter().enumerate() {
            idx[k] = col(name).ok_or_else(|| CliError::bad(format!("stories CSV has no `{name}` column")))?;
        }
        let raters: Vec<(usize, String)> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| !idx.contains(i))
            .map(|(i, h)| (i, h.trim().to_string()))
            .collect();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_err(&stories_path))?;
            let id = rec[idx[0]].trim().to_string();
            let prompts: Vec<String> = (1..4).map(|k| rec[idx[k]].to_string()).collect();
            let mut ratings = BTreeMap::new();
            for (c, rater) in &raters {
                let v = rec[*c].trim();
                if v.is_empty() {
                    continue;
                }
                let value: i64 = v
                    .parse()
                    .map_err(|_| CliError::bad(format!("story {id} (row {}): rating `{v}` for {rater} is not an integer", line + 2)))?;
                ratings.insert(rater.clone(), value);
            }
            let story = Story::new(id.clone(), &prompts, &rec[idx[4]], ratings, &pre, parses.remove(&id))
                .map_err(CliError::bad)?;
            let unmatched: Vec<String> = match_prompts(&story)
                .into_iter()
                .filter(|m| !m.matched)
                .map(|m| m.prompt_lemma)
                .collect();
            if unmatched.is_empty() {
                retained.push(story);
            } else {
                excluded.push(Exclusion {
                    story_id: id,
                    unmatched_prompts: unmatched.join(";"),
                });
            }
        }
    }
    info!("preprocess: {} retained, {} excluded", retained.len(), excluded.len());

    let corpus = cfg.out.join(CORPUS);
    write_jsonl(&corpus, &retained)?;
    let log_path = cfg.out.join(EXCLUSIONS);
    let mut w = csv_writer(&log_path)?;
    w.write_record(["story_id", "unmatched_prompts"]).map_err(csv_err(&log_path))?;
    for e in &excluded {
        w.serialize(e).map_err(csv_err(&log_path))?;
    }
    w.flush().map_err(|e| CliError::io(&log_path, e))?;
    finish(manifest, cfg, vec![corpus, log_path])
}

/// Build every requested network variant for every story.
pub fn build(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    prepare(cfg)?;
    let mut manifest = Manifest::new("build", cfg);
    let (corpus_path, stories) = read_corpus(&cfg.out)?;
    manifest.input(&corpus_path)?;
    let cues = negation_cues(cfg, &mut manifest)?;
    let lex = lexicon(cfg, &mut manifest)?;
    let relations = optional_text(&cfg.relations, &mut manifest)?
        .map(|t| RelationFile::parse(&t).map_err(|e| CliError::bad(format!("relations: {e}"))))
        .transpose()?;
    let mut opts = BuildOptions::new(&cues);
    opts.radius = cfg.radius;
    opts.lexicon = lex.as_ref();
    opts.relations = relations.as_ref();
    let builders = cfg.active_builders();

    let records: Vec<NetworkRecord> = stories
        .par_iter()
        .map(|story| {
            builders
                .iter()
                .map(|&tag| {
                    let network = build_variant(story, tag, &opts).map_err(|e| match e {
                        NetError::MissingParse(id) => CliError::bad(format!(
                            "story {id} has no dependency parse; supply --conllu or drop TFMN from --builders"
                        )),
                        other => CliError::bad(format!("story {}: {other}", story.id)),
                    })?;
                    Ok(NetworkRecord {
                        story_id: story.id.clone(),
                        network,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut written = Vec::new();
    for b in &builders {
        let dir = cfg.out.join(NETWORK_DIR).join(b.to_string());
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    }
    for r in &records {
        let dir = cfg.out.join(NETWORK_DIR).join(r.network.tag().to_string());
        let stem = file_safe(&r.story_id);
        write_text(&dir.join(format!("{stem}.csv")), &r.network.to_edge_csv())?;
        write_text(&dir.join(format!("{stem}.graphml")), &r.network.to_graphml())?;
    }
    let nets = cfg.out.join(NETWORKS);
    write_jsonl(&nets, &records)?;
    written.push(nets);
    written.push(cfg.out.join(NETWORK_DIR));
    finish(manifest, cfg, written)
}

fn feature_record(story_id: &str, builder: BuilderTag, f: &StructuralFeatures) -> FeatureRecord {
    FeatureRecord {
        story_id: story_id.to_string(),
        builder,
        n_nodes: f.n_nodes,
        n_edges: f.n_edges,
        density: f.density,
        avg_local_clustering: f.avg_local_clustering,
        aspl_lcc: f.aspl_lcc,
        diameter_lcc: f.diameter_lcc,
        pagerank_centralisation: f.pagerank_centralisation,
        n_components: f.n_components,
    }
}

impl FeatureRecord {
    pub fn structural(&self) -> StructuralFeatures {
        StructuralFeatures {
            n_nodes: self.n_nodes,
            n_edges: self.n_edges,
            density: self.density,
            avg_local_clustering: self.avg_local_clustering,
            aspl_lcc: self.aspl_lcc,
            diameter_lcc: self.diameter_lcc,
            pagerank_centralisation: self.pagerank_centralisation,
            n_components: self.n_components,
        }
    }
}

/// Structural metrics per (story, builder) plus per-builder histograms.
pub fn features(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    prepare(cfg)?;
    let mut manifest = Manifest::new("features", cfg);
    let (nets_path, nets) = read_networks(&cfg.out)?;
    manifest.input(&nets_path)?;
    let rows: Vec<FeatureRecord> = nets
        .par_iter()
        .map(|r| {
            structural_features(&r.network)
                .map(|f| feature_record(&r.story_id, r.network.tag(), &f))
                .map_err(|e| CliError::Convergence(format!("story {} / {}: {e}", r.story_id, r.network.tag())))
        })
        .collect::<Result<_>>()?;

    let path = cfg.out.join(FEATURES);
    let mut w = csv_writer(&path)?;
    w.write_record(feature_header()).map_err(csv_err(&path))?;
    for r in &rows {
        w.serialize(r).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let hist_path = cfg.out.join(HISTOGRAMS);
    let mut w = csv_writer(&hist_path)?;
    w.write_record(["builder", "feature", "bin", "lower", "upper", "count"])
        .map_err(csv_err(&hist_path))?;
    let builders: BTreeSet<BuilderTag> = rows.iter().map(|r| r.builder).collect();
    for b in builders {
        let of_builder: Vec<[f64; 7]> = rows.iter().filter(|r| r.builder == b).map(|r| r.structural().values()).collect();
        for (k, name) in StructuralFeatures::NAMES.iter().enumerate() {
            let values: Vec<f64> = of_builder.iter().map(|v| v[k]).collect();
            let h = histogram(&values, HISTOGRAM_BINS);
            for (bin, count) in h.counts.iter().enumerate() {
                w.write_record([
                    b.to_string(),
                    name.to_string(),
                    bin.to_string(),
                    h.edges[bin].to_string(),
                    h.edges[bin + 1].to_string(),
                    count.to_string(),
                ])
                .map_err(csv_err(&hist_path))?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(&hist_path, e))?;
    finish(manifest, cfg, vec![path, hist_path])
}

fn feature_header() -> Vec<&'static str> {
    let mut h = vec!["story_id", "builder"];
    h.extend(StructuralFeatures::NAMES);
    h.push("n_components");
    h
}

/// Stationary prompt activations for each retention, and early trajectories.
pub fn spread(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    prepare(cfg)?;
    let mut manifest = Manifest::new("spread", cfg);
    let (corpus_path, stories) = read_corpus(&cfg.out)?;
    let (nets_path, nets) = read_networks(&cfg.out)?;
    manifest.input(&corpus_path)?;
    manifest.input(&nets_path)?;
    let by_id: BTreeMap<&str, &Story> = stories.iter().map(|s| (s.id.as_str(), s)).collect();

    type Trajectory = (String, BuilderTag, f64, usize, Vec<f64>);
    let per_net: Vec<(Vec<(usize, SpreadRecord)>, Vec<Trajectory>)> = nets
        .par_iter()
        .map(|rec| {
            let story = by_id
                .get(rec.story_id.as_str())
                .ok_or_else(|| CliError::bad(format!("network for unknown story {}", rec.story_id)))?;
            let prompts = match_prompts(story);
            let g = rec.network.to_indexed();
            let tag = rec.network.tag();
            let mut rows = Vec::new();
            let mut traj = Vec::new();
            for (ri, &r) in cfg.retention.iter().enumerate() {
                for (k, m) in prompts.iter().enumerate() {
                    let trace = seed_alpha(&g, m.seed(), SpreadingParams::with_retention(r))
                        .map_err(|e| CliError::bad(format!("story {}: {e}", rec.story_id)))?;
                    if !trace.converged {
                        return Err(CliError::Convergence(format!(
                            "activation for story {} / {tag} / seed {} did not settle after {} steps",
                            rec.story_id,
                            m.seed(),
                            trace.steps_taken
                        )));
                    }
                    rows.push((
                        ri,
                        SpreadRecord {
                            story_id: rec.story_id.clone(),
                            builder: tag,
                            prompt_index: k + 1,
                            prompt: m.prompt_lemma.clone(),
                            seed: m.seed().to_string(),
                            matched: m.matched,
                            alpha: trace.stationary_alpha,
                        },
                    ));
                    let head: Vec<f64> = trace.seed_series.iter().take(TRAJECTORY_STEPS + 1).copied().collect();
                    traj.push((rec.story_id.clone(), tag, r, k + 1, head));
                }
            }
            Ok((rows, traj))
        })
        .collect::<Result<_>>()?;

    let mut written = Vec::new();
    for (ri, &r) in cfg.retention.iter().enumerate() {
        let path = cfg.out.join(spread_file(r));
        let mut w = csv_writer(&path)?;
        w.write_record(["story_id", "builder", "prompt_index", "prompt", "seed", "matched", "alpha"])
            .map_err(csv_err(&path))?;
        for (i, row) in per_net.iter().flat_map(|(rows, _)| rows) {
            if *i == ri {
                w.serialize(row).map_err(csv_err(&path))?;
            }
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    let tpath = cfg.out.join(TRAJECTORIES);
    let mut w = csv_writer(&tpath)?;
    w.write_record(["story_id", "builder", "retention", "prompt_index", "step", "activation"])
        .map_err(csv_err(&tpath))?;
    for (id, tag, r, k, series) in per_net.iter().flat_map(|(_, t)| t) {
        for (step, a) in series.iter().enumerate() {
            w.write_record([id.clone(), tag.to_string(), r.to_string(), k.to_string(), step.to_string(), a.to_string()])
                .map_err(csv_err(&tpath))?;
        }
    }
    w.flush().map_err(|e| CliError::io(&tpath, e))?;
    written.push(tpath);
    finish(manifest, cfg, written)
}

/// Emotion z-scores of every story against the lexicon base rates.
pub fn emotions(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    prepare(cfg)?;
    let mut manifest = Manifest::new("emotions", cfg);
    let lex = lexicon(cfg, &mut manifest)?.ok_or_else(|| CliError::bad("emotions needs --lexicon"))?;
    let (corpus_path, stories) = read_corpus(&cfg.out)?;
    manifest.input(&corpus_path)?;
    let cues = negation_cues(cfg, &mut manifest)?;
    let path = cfg.out.join(EMOTIONS);
    let mut w = csv_writer(&path)?;
    let mut header = vec!["story_id".to_string(), "m".to_string()];
    header.extend(Emotion::ALL.iter().map(|e| format!("z_{}", e.name())));
    header.extend(Emotion::ALL.iter().map(|e| format!("count_{}", e.name())));
    header.extend(["over".to_string(), "under".to_string()]);
    w.write_record(&header).map_err(csv_err(&path))?;
    let profiles: Vec<_> = stories.par_iter().map(|s| profile_story(s, &lex, &cues)).collect();
    for (s, p) in stories.iter().zip(&profiles) {
        let list = |pred: &dyn Fn(Emotion) -> bool| {
            Emotion::ALL.iter().filter(|&&e| pred(e)).map(|e| e.name()).collect::<Vec<_>>().join(";")
        };
        let mut row = vec![s.id.clone(), p.m.to_string()];
        row.extend(p.z.iter().map(|z| z.to_string()));
        row.extend(p.counts.iter().map(|c| c.to_string()));
        row.push(list(&|e| p.over_represented(e)));
        row.push(list(&|e| p.under_represented(e)));
        w.write_record(&row).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    finish(manifest, cfg, vec![path])
}

/// Everything `evaluate` writes to results.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub results: Vec<EvalResult>,
    /// Column-permutation baseline of `results[i]` at index `i`.
    pub baselines: Vec<EvalResult>,
    /// Index into `results` of the best cell per target.
    pub best: BTreeMap<String, usize>,
    /// One-sided Wilcoxon of real against permuted MAE, per target.
    pub permutation_tests: BTreeMap<String, TestResult>,
}

fn targets(cfg: &RunConfig, stories: &[Story]) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
    let raters: BTreeSet<&str> = stories.iter().flat_map(|s| s.ratings.keys().map(String::as_str)).collect();
    let mut names: Vec<String> = Vec::new();
    for t in &cfg.targets {
        if t == "raters" {
            names.extend(raters.iter().map(|r| r.to_string()));
        } else {
            names.push(t.clone());
        }
    }
    let mut out = BTreeMap::new();
    for name in names {
        let values: BTreeMap<String, f64> = if name == "mean" {
            stories.iter().filter_map(|s| s.mean_rating.map(|m| (s.id.clone(), m))).collect()
        } else if raters.contains(name.as_str()) {
            stories
                .iter()
                .filter_map(|s| s.ratings.get(&name).map(|&v| (s.id.clone(), f64::from(v))))
                .collect()
        } else {
            return Err(CliError::bad(format!("target `{name}` is not a rater column of the stories table")));
        };
        out.insert(name, values);
    }
    Ok(out)
}

fn assemble_features(cfg: &RunConfig, manifest: &mut Manifest) -> Result<Vec<StoryFeatures>> {
    let configs: Vec<FeatureConfig> = cfg.configs.clone();
    let needs = |block: fn(&str) -> bool| configs.iter().any(|c| c.feature_names().iter().any(|n| block(n)));
    let needs_alpha = needs(|n| n.starts_with("alpha"));
    let needs_emotion = needs(|n| n.starts_with("z_"));

    let fpath = require(&cfg.out, FEATURES, "features")?;
    manifest.input(&fpath)?;
    let base: Vec<FeatureRecord> = read_csv(&fpath)?;

    let mut alphas: BTreeMap<(String, BuilderTag), [f64; 3]> = BTreeMap::new();
    if needs_alpha {
        let spath = require(&cfg.out, &spread_file(cfg.primary_retention()), "spread")?;
        manifest.input(&spath)?;
        for r in read_csv::<SpreadRecord>(&spath)? {
            if (1..=3).contains(&r.prompt_index) {
                alphas.entry((r.story_id, r.builder)).or_insert([0.0; 3])[r.prompt_index - 1] = r.alpha;
            }
        }
    }
    let mut emotions = BTreeMap::new();
    if needs_emotion {
        let epath = require(&cfg.out, EMOTIONS, "emotions")?;
        manifest.input(&epath)?;
        emotions = read_emotion_z(&epath)?;
    }

    let builders = cfg.active_builders();
    let mut rows = Vec::new();
    for f in base.into_iter().filter(|f| builders.contains(&f.builder)) {
        let key = (f.story_id.clone(), f.builder);
        let a = match alphas.get(&key) {
            Some(a) => *a,
            None if needs_alpha => {
                return Err(CliError::MissingStage {
                    stage: "spread",
                    path: cfg.out.join(spread_file(cfg.primary_retention())),
                })
            }
            None => [0.0; 3],
        };
        let e = match emotions.get(&f.story_id) {
            Some(e) => *e,
            None if needs_emotion => return Err(CliError::MissingStage { stage: "emotions", path: cfg.out.join(EMOTIONS) }),
            None => [0.0; 8],
        };
        rows.push(StoryFeatures {
            structural: f.structural(),
            story_id: f.story_id,
            builder: f.builder,
            alphas: a,
            emotions: e,
        });
    }
    Ok(rows)
}

/// Full model matrix with permutation baselines, plus Shapley attributions
/// of the best cell per target.
pub fn evaluate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    prepare(cfg)?;
    let mut manifest = Manifest::new("evaluate", cfg);
    let (corpus_path, stories) = read_corpus(&cfg.out)?;
    manifest.input(&corpus_path)?;
    let feats = assemble_features(cfg, &mut manifest)?;
    let target_values = targets(cfg, &stories)?;

    let models: Vec<ModelSpec> = cfg.models.iter().map(|&k| ModelSpec::default_for(k)).collect();
    let mut spec = MatrixSpec::new(
        target_values.keys().cloned().collect(),
        cfg.active_builders(),
        cfg.configs.clone(),
        models,
    );
    spec.folds = cfg.folds;
    spec.seed = cfg.seed;
    spec.with_baseline = true;
    let outcome = run_matrix(&feats, &target_values, &spec).map_err(CliError::bad)?;

    let mut permutation_tests = BTreeMap::new();
    for target in target_values.keys() {
        let (real, perm): (Vec<f64>, Vec<f64>) = outcome
            .results
            .iter()
            .zip(&outcome.baselines)
            .filter(|(r, _)| r.target.as_deref() == Some(target.as_str()))
            .map(|(r, p)| (r.mean_mae, p.mean_mae))
            .unzip();
        if let Ok(t) = wilcoxon_signed_rank(&real, &perm, Alternative::Less) {
            permutation_tests.insert(target.clone(), t);
        }
    }

    let mut written = Vec::new();
    for (target, &i) in &outcome.best {
        let best = &outcome.results[i];
        let (builder, config) = (best.builder.expect("matrix labels builder"), best.config.expect("matrix labels config"));
        let data = cell_dataset(&feats, &target_values[target], builder, config).map_err(CliError::bad)?;
        let (fold_seed, model_seed) = cell_seeds(cfg.seed, target, builder, config, best.model);
        let shap_seed = derive_seed(cfg.seed, &format!("shapley/{target}"));
        manifest.seeds.insert(format!("shapley/{target}"), shap_seed);
        let model = ModelSpec::default_for(best.model).with_seed(model_seed);
        let path = cfg.out.join(attribution_file(target));
        let mut w = csv_writer(&path)?;
        let mut header = vec!["story_id".to_string(), "fold".to_string(), "base".to_string(), "prediction".to_string()];
        header.extend(data.feature_names.iter().cloned());
        w.write_record(&header).map_err(csv_err(&path))?;
        for (fold, (test, fitted)) in cv_models(&data, &model, cfg.folds, fold_seed).map_err(CliError::bad)?.iter().enumerate() {
            let train: Vec<usize> = (0..data.len()).filter(|i| !test.contains(i)).collect();
            let background = data.subset(&train).0;
            let rows = data.subset(test).0;
            let a = shapley_attribution(fitted, &background, &rows, cfg.shapley_samples, shap_seed.wrapping_add(fold as u64))
                .map_err(CliError::bad)?;
            for (k, &row) in test.iter().enumerate() {
                let mut rec = vec![data.ids[row].clone(), fold.to_string(), a.base.to_string(), a.predictions[k].to_string()];
                rec.extend(a.phi[k].iter().map(|v| v.to_string()));
                w.write_record(&rec).map_err(csv_err(&path))?;
            }
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }

    for target in target_values.keys() {
        manifest
            .seeds
            .insert(format!("folds/{target}"), derive_seed(cfg.seed, &format!("folds/{target}")));
    }
    let report = EvaluationReport {
        results: outcome.results,
        baselines: outcome.baselines,
        best: outcome.best,
        permutation_tests,
    };
    let path = cfg.out.join(RESULTS);
    write_text(&path, &(serde_json::to_string_pretty(&report).expect("report serialises") + "\n"))?;
    written.insert(0, path);
    finish(manifest, cfg, written)
}

/// Paired sign-flip tests between builders on each structural feature,
/// BH-adjusted within each feature.
pub fn compare_builders(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    prepare(cfg)?;
    let mut manifest = Manifest::new("compare-builders", cfg);
    let fpath = require(&cfg.out, FEATURES, "features")?;
    manifest.input(&fpath)?;
    let rows: Vec<FeatureRecord> = read_csv(&fpath)?;
    let builders = cfg.active_builders();
    let mut by_builder: BTreeMap<BuilderTag, BTreeMap<String, [f64; 7]>> = BTreeMap::new();
    for r in &rows {
        by_builder.entry(r.builder).or_default().insert(r.story_id.clone(), r.structural().values());
    }
    let present: Vec<BuilderTag> = builders.iter().copied().filter(|b| by_builder.contains_key(b)).collect();
    let common: Vec<String> = match present.first() {
        Some(first) => by_builder[first]
            .keys()
            .filter(|id| present.iter().all(|b| by_builder[b].contains_key(*id)))
            .cloned()
            .collect(),
        None => Vec::new(),
    };

    let path = cfg.out.join(COMPARISON);
    let mut w = csv_writer(&path)?;
    w.write_record(["feature", "builder_a", "builder_b", "n", "mean_difference", "p_raw", "p_adjusted"])
        .map_err(csv_err(&path))?;
    if common.len() >= 2 && present.len() >= 2 {
        for (k, name) in StructuralFeatures::NAMES.iter().enumerate() {
            let samples: Vec<(String, Vec<f64>)> = present
                .iter()
                .map(|b| (b.to_string(), common.iter().map(|id| by_builder[b][id][k]).collect()))
                .collect();
            let seed = derive_seed(cfg.seed, &format!("compare/{name}"));
            manifest.seeds.insert(format!("compare/{name}"), seed);
            let pairs = pairwise_signflip(&samples, cfg.n_perm, seed).map_err(CliError::bad)?;
            for c in pairs {
                w.write_record([
                    name.to_string(),
                    c.left,
                    c.right,
                    common.len().to_string(),
                    c.mean_difference.to_string(),
                    c.p_raw.to_string(),
                    c.p_adjusted.to_string(),
                ])
                .map_err(csv_err(&path))?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    finish(manifest, cfg, vec![path])
}

fn label(r: &EvalResult) -> String {
    format!(
        "{} / {} / {}",
        r.builder.map_or("-".into(), |b| b.to_string()),
        r.config.map_or("-", |c| c.name()),
        r.model
    )
}

/// Cells of one target ordered best first: MAE ascending, then Spearman descending.
pub fn ranked<'a>(report: &'a EvaluationReport, target: &str) -> Vec<(usize, &'a EvalResult)> {
    let mut cells: Vec<(usize, &EvalResult)> = report
        .results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.target.as_deref() == Some(target))
        .collect();
    cells.sort_by(|a, b| {
        a.1.mean_mae
            .total_cmp(&b.1.mean_mae)
            .then(b.1.mean_spearman.total_cmp(&a.1.mean_spearman))
            .then(a.0.cmp(&b.0))
    });
    cells
}

/// Plain-text summary of the evaluation and builder comparison.
pub fn report(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    prepare(cfg)?;
    let mut manifest = Manifest::new("report", cfg);
    let rpath = require(&cfg.out, RESULTS, "evaluate")?;
    manifest.input(&rpath)?;
    let report: EvaluationReport =
        serde_json::from_str(&read_text(&rpath)?).map_err(|e| CliError::bad(format!("{}: {e}", rpath.display())))?;

    let mut s = String::new();
    s.push_str("Best cell per target (lowest MAE, ties by Spearman)\n");
    for (target, &i) in &report.best {
        let r = &report.results[i];
        s.push_str(&format!(
            "  {target}: {}  MAE {:.4}  Spearman {:.4}  Pearson {:.4}\n",
            label(r),
            r.mean_mae,
            r.mean_spearman,
            r.mean_pearson
        ));
    }
    for target in report.best.keys() {
        let cells = ranked(&report, target);
        s.push_str(&format!("\nTarget {target}: {} cells\n", cells.len()));
        s.push_str(&format!(
            "  {:>4}  {:<44} {:>8} {:>9} {:>9} {:>10}\n",
            "rank", "builder / config / model", "MAE", "Spearman", "Pearson", "perm MAE"
        ));
        for (rank, (i, r)) in cells.iter().enumerate() {
            let perm = report.baselines.get(*i).map_or(String::from("-"), |p| format!("{:.4}", p.mean_mae));
            s.push_str(&format!(
                "  {:>4}  {:<44} {:>8.4} {:>9.4} {:>9.4} {:>10}\n",
                rank + 1,
                label(r),
                r.mean_mae,
                r.mean_spearman,
                r.mean_pearson,
                perm
            ));
        }
        if let Some(t) = report.permutation_tests.get(target) {
            s.push_str(&format!(
                "  real vs permuted MAE, Wilcoxon signed-rank ({}): W = {}, p = {:.3e}, n = {}\n",
                t.alternative, t.statistic, t.p_value, t.n
            ));
        }
    }

    if let Ok(cpath) = require(&cfg.out, COMPARISON, "compare-builders") {
        manifest.input(&cpath)?;
        let mut rdr = csv::Reader::from_path(&cpath).map_err(csv_err(&cpath))?;
        let mut lines = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err(&cpath))?;
            let adj: f64 = rec[6].parse().unwrap_or(1.0);
            if adj < 0.05 {
                lines.push(format!(
                    "  {:<24} {:>12} vs {:<12} diff {:>10.4}  p_adj {:.3e}\n",
                    &rec[0],
                    &rec[1],
                    &rec[2],
                    rec[4].parse::<f64>().unwrap_or(f64::NAN),
                    adj
                ));
            }
        }
        s.push_str(&format!("\nBuilder differences with BH-adjusted p < 0.05: {}\n", lines.len()));
        lines.iter().for_each(|l| s.push_str(l));
    }

    let path = cfg.out.join(SUMMARY);
    write_text(&path, &s)?;
    finish(manifest, cfg, vec![path])
}

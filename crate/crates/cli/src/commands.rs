use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anchor_absa::abae::{infer, load_model, save_model, top_words, AbaeModel};
use anchor_absa::cat::{parse_priors_jsonl, priors_to_jsonl, CatModel};
use anchor_absa::corpus::{
    filter_single_aspect, index_all, parse_jsonl, parse_semeval_xml, to_jsonl, GoldCategory, LexiconTagger,
    Sentence, Stopwords, Vocabulary,
};
use anchor_absa::embeddings::{load_text, save_text, train_sgns, EmbeddingMatrix};
use anchor_absa::ensembles::{build_anchors, ensemble_to_jsonl, rule_ensemble, RuleConfig};
use anchor_absa::evaluation::{
    apply_mapping, compare_reports, score, score_with_labels, AspectMapping, EvalReport,
};
use anchor_absa::synthetic::generate;
use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use crate::config::{read_existing, PipelineConfig};
use crate::manifest::{write_atomic, RunManifest};
use crate::{
    CatArgs, Cli, Command, EmbedArgs, EnsembleArgs, EvaluateArgs, IngestArgs, InputFormat, Invalid,
    PredictArgs, SynthArgs, TopWordsArgs, TrainArgs,
};

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let mut config = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    match cli.command {
        Command::Ingest(a) => ingest(config, a),
        Command::Embed(a) => embed(config, a),
        Command::TrainAbae(a) => train_abae(config, a),
        Command::PredictAbae(a) => predict_abae(config, a),
        Command::RunCat(a) => run_cat(config, a),
        Command::EnsembleRule(a) => ensemble_rule(config, a),
        Command::Evaluate(a) => evaluate(config, a),
        Command::TopWords(a) => top_words_cmd(config, a),
        Command::Synth(a) => synth(config, a),
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_corpus(path: &Path, manifest: Option<&mut RunManifest>) -> anyhow::Result<Vec<Sentence>> {
    let bytes = read_existing(path, "corpus")?;
    if let Some(m) = manifest {
        m.input(path, &bytes);
    }
    let sentences =
        parse_jsonl(&bytes, &Stopwords::none()).with_context(|| format!("in corpus {}", path.display()))?;
    if sentences.is_empty() {
        bail!(Invalid(format!("corpus {} is empty", path.display())));
    }
    Ok(sentences)
}

fn load_embeddings(path: &Path, manifest: Option<&mut RunManifest>) -> anyhow::Result<EmbeddingMatrix<f64>> {
    let bytes = read_existing(path, "embedding file")?;
    if let Some(m) = manifest {
        m.input(path, &bytes);
    }
    load_text(&bytes).with_context(|| format!("in embedding file {}", path.display()))
}

fn load_abae(path: &Path, manifest: Option<&mut RunManifest>) -> anyhow::Result<AbaeModel<f64>> {
    let bytes = read_existing(path, "model")?;
    if let Some(m) = manifest {
        m.input(path, &bytes);
    }
    load_model(&bytes).with_context(|| format!("in model {}", path.display()))
}

/// Indexes `sentences` against the embedding vocabulary, refusing corpora
/// that mostly miss it.
fn index_against(sentences: &mut [Sentence], emb: &EmbeddingMatrix<f64>) -> anyhow::Result<()> {
    index_all(sentences, emb.vocab());
    let total: usize = sentences.iter().map(|s| s.tokens.len()).sum();
    let known: usize = sentences.iter().map(|s| s.token_ids.len()).sum();
    if total > 0 && 2 * known < total {
        bail!(Invalid(format!("vocabulary mismatch: only {known} of {total} corpus tokens have embeddings")));
    }
    if known < total {
        eprintln!("{} of {total} tokens have no embedding and are ignored", total - known);
    }
    Ok(())
}

/// Categories whose seed words all have embeddings; the rest are left out of
/// automatic mapping with a note.
fn mappable_categories(
    config: &PipelineConfig,
    emb: &EmbeddingMatrix<f64>,
) -> anyhow::Result<Vec<GoldCategory>> {
    let mut out = Vec::new();
    for c in GoldCategory::ALL {
        let known = config
            .cat
            .seeds
            .get(c)
            .is_some_and(|ws| !ws.is_empty() && ws.iter().all(|w| emb.vocab().id(w).is_some()));
        if known {
            out.push(c);
        } else {
            eprintln!("{c} seed words have no embeddings; {c} is left out of the mapping");
        }
    }
    if out.is_empty() {
        bail!(Invalid("no category has embeddable seed words".into()));
    }
    Ok(out)
}

fn check_unique_ids(sentences: &[Sentence]) -> anyhow::Result<()> {
    let mut seen = BTreeSet::new();
    for s in sentences {
        if !seen.insert(s.id.as_str()) {
            bail!(Invalid(format!("duplicate sentence id `{}`", s.id)));
        }
    }
    Ok(())
}

fn ingest(config: PipelineConfig, a: IngestArgs) -> anyhow::Result<()> {
    config.validate()?;
    let stopwords = if a.no_stopwords {
        Stopwords::none()
    } else if let Some(p) = a.stopwords.as_ref().or(config.paths.stopwords.as_ref()) {
        Stopwords::parse(&String::from_utf8_lossy(&read_existing(p, "stopword list")?))
    } else {
        Stopwords::english()
    };
    let tagger = match &a.pos_lexicon {
        Some(p) => Some(
            LexiconTagger::parse(&String::from_utf8_lossy(&read_existing(p, "POS lexicon")?))
                .with_context(|| format!("in POS lexicon {}", p.display()))?,
        ),
        None => None,
    };
    let out = config.output(a.out, "corpus.jsonl");
    let mut manifest = RunManifest::new("ingest", config.to_json());
    manifest.stage("parse");
    let mut sentences = Vec::new();
    for input in &a.inputs {
        let bytes = read_existing(input, "input")?;
        manifest.input(input, &bytes);
        let parsed = match a.format {
            InputFormat::Semeval => parse_semeval_xml(&bytes, &stopwords),
            InputFormat::Jsonl => parse_jsonl(&bytes, &stopwords),
        }
        .with_context(|| format!("in {}", input.display()))?;
        sentences.extend(parsed);
    }
    if sentences.is_empty() {
        bail!(Invalid("empty corpus: the inputs contain no sentences".into()));
    }
    check_unique_ids(&sentences)?;
    let read = sentences.len();
    if a.single_aspect {
        sentences = filter_single_aspect(sentences);
    }
    let dropped = read - sentences.len();
    if let Some(t) = &tagger {
        for s in sentences.iter_mut().filter(|s| !s.has_pos()) {
            s.apply_tagger(t);
        }
    }
    manifest.stage("vocabulary");
    let min_count = a.min_count.unwrap_or(config.min_count);
    let vocab = Vocabulary::build(&sentences, min_count)?;
    manifest.write(&out, to_jsonl(&sentences).as_bytes())?;
    let vocab_path = a.vocab.unwrap_or_else(|| sibling(&out, ".vocab.tsv"));
    manifest.write(&vocab_path, vocab.to_tsv().as_bytes())?;
    manifest.save(&out)?;
    eprintln!(
        "read {read} sentences, kept {}, dropped {dropped} multi-aspect; vocabulary {} words",
        sentences.len(),
        vocab.len()
    );
    Ok(())
}

fn embed(mut config: PipelineConfig, a: EmbedArgs) -> anyhow::Result<()> {
    if let Some(v) = a.min_count {
        config.min_count = v;
    }
    let seed = config.stage_seed("embed");
    let s = &mut config.sgns;
    s.dim = a.dim.unwrap_or(s.dim);
    s.window = a.window.unwrap_or(s.window);
    s.negatives = a.negatives.unwrap_or(s.negatives);
    s.epochs = a.epochs.unwrap_or(s.epochs);
    s.learning_rate = a.learning_rate.unwrap_or(s.learning_rate);
    s.seed = seed;
    config.validate()?;
    let corpus = PipelineConfig::path(a.corpus, &config.paths.corpus, "corpus")?;
    let out = config.output(a.out, "vectors.txt");
    let mut manifest = RunManifest::new("embed", config.to_json());
    manifest.stage("load");
    let mut sentences = load_corpus(&corpus, Some(&mut manifest))?;
    for extra in &a.include {
        sentences.extend(load_corpus(extra, Some(&mut manifest))?);
    }
    let vocab = Vocabulary::build(&sentences, config.min_count)?;
    index_all(&mut sentences, &vocab);
    manifest.stage("train");
    let trained = train_sgns::<f64>(&sentences, &vocab, &config.sgns)?;
    manifest.stage("write");
    manifest.write(&out, save_text(&trained.embeddings).as_bytes())?;
    let mut csv = String::from("epoch,loss\n");
    for (i, l) in trained.epoch_losses.iter().enumerate() {
        let _ = writeln!(csv, "{},{l}", i + 1);
    }
    manifest.write(&sibling(&out, ".losses.csv"), csv.as_bytes())?;
    manifest.save(&out)?;
    eprintln!("embedded {} words in {} dimensions", vocab.len(), config.sgns.dim);
    Ok(())
}

fn train_abae(mut config: PipelineConfig, a: TrainArgs) -> anyhow::Result<()> {
    let seed = config.stage_seed("train-abae");
    let h = &mut config.abae;
    h.k = a.k.unwrap_or(h.k);
    h.lambda = a.lambda.unwrap_or(h.lambda);
    h.negatives = a.negatives.unwrap_or(h.negatives);
    h.epochs = a.epochs.unwrap_or(h.epochs);
    h.batch_size = a.batch_size.unwrap_or(h.batch_size);
    h.learning_rate = a.learning_rate.unwrap_or(h.learning_rate);
    if let Some(c) = a.clip_norm {
        h.clip_norm = (c > 0.0).then_some(c);
    }
    h.seed = seed;
    if let Some(s) = a.sigma {
        config.anchors.sigma = s;
    }
    config.validate()?;
    let corpus = PipelineConfig::path(a.corpus, &config.paths.corpus, "corpus")?;
    let emb_path = PipelineConfig::path(a.embeddings, &config.paths.embeddings, "embedding file")?;
    let anchors_path = a.anchors.or_else(|| config.paths.anchors.clone());
    let out = config.output(a.out, "model.bin");

    let mut manifest = RunManifest::new("train-abae", config.to_json());
    manifest.stage("load");
    let emb = load_embeddings(&emb_path, Some(&mut manifest))?;
    let mut sentences = load_corpus(&corpus, Some(&mut manifest))?;
    check_unique_ids(&sentences)?;
    index_against(&mut sentences, &emb)?;
    let anchors = match &anchors_path {
        Some(p) => {
            let bytes = read_existing(p, "anchor file")?;
            manifest.input(p, &bytes);
            let priors = parse_priors_jsonl(&String::from_utf8_lossy(&bytes))
                .with_context(|| format!("in anchor file {}", p.display()))?;
            let labels = config.cat.seeds.embeddings(&GoldCategory::PRIOR, &emb)?;
            Some(build_anchors(&sentences, &priors, &labels, config.anchors.sigma)?)
        }
        None => None,
    };
    manifest.stage("train");
    let trained = anchor_absa::abae::train(&sentences, &emb, &config.abae, anchors.as_ref())?;
    manifest.stage("write");
    let model = AbaeModel { params: trained.params, lambda: config.abae.lambda };
    manifest.write(&out, &save_model(&model))?;
    let mut csv = String::from("epoch,loss\n");
    for (i, l) in trained.epoch_losses.iter().enumerate() {
        let _ = writeln!(csv, "{},{l}", i + 1);
    }
    let loss_csv = a.loss_csv.unwrap_or_else(|| sibling(&out, ".losses.csv"));
    manifest.write(&loss_csv, csv.as_bytes())?;
    manifest.save(&out)?;
    if !trained.skipped.is_empty() {
        eprintln!("skipped {} sentences with no embedded words", trained.skipped.len());
    }
    eprintln!(
        "trained {} aspects for {} epochs; final loss {}",
        config.abae.k,
        config.abae.epochs,
        trained.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

/// One line of `predict-abae` output.
#[derive(Debug, Serialize, Deserialize)]
struct AbaeRecord {
    id: String,
    aspect: Option<usize>,
    category: Option<GoldCategory>,
}

fn predict_abae(config: PipelineConfig, a: PredictArgs) -> anyhow::Result<()> {
    config.validate()?;
    let corpus = PipelineConfig::path(a.corpus, &config.paths.corpus, "corpus")?;
    let emb_path = PipelineConfig::path(a.embeddings, &config.paths.embeddings, "embedding file")?;
    let model_path = PipelineConfig::path(a.model, &config.paths.model, "model")?;
    let mapping_path = a.mapping.or_else(|| config.paths.mapping.clone()).filter(|_| !a.auto_map);
    let out = config.output(a.out, "abae_predictions.jsonl");

    let mut manifest = RunManifest::new("predict-abae", config.to_json());
    let emb = load_embeddings(&emb_path, Some(&mut manifest))?;
    let model = load_abae(&model_path, Some(&mut manifest))?;
    if model.params.dim() != emb.dim() {
        bail!(Invalid(format!(
            "model dimension {} does not match embedding dimension {}",
            model.params.dim(),
            emb.dim()
        )));
    }
    let mut sentences = load_corpus(&corpus, Some(&mut manifest))?;
    index_against(&mut sentences, &emb)?;
    let k = model.params.num_aspects();
    let mapping = match &mapping_path {
        Some(p) => {
            let bytes = read_existing(p, "mapping file")?;
            manifest.input(p, &bytes);
            Some(
                AspectMapping::parse(&String::from_utf8_lossy(&bytes), k)
                    .with_context(|| format!("in mapping file {}", p.display()))?,
            )
        }
        None if a.auto_map => Some(AspectMapping::nearest_seed(
            &model.params.aspects,
            &emb,
            &config.cat.seeds,
            &mappable_categories(&config, &emb)?,
        )?),
        None => None,
    };
    let mut text = String::new();
    for s in &sentences {
        let aspect =
            if s.token_ids.is_empty() { None } else { Some(infer(&s.token_ids, &model.params, &emb)?.0) };
        let category = match (&mapping, aspect) {
            (Some(m), Some(x)) => Some(apply_mapping(&[x], m)?[0]),
            _ => None,
        };
        let rec = AbaeRecord { id: s.id.clone(), aspect, category };
        text.push_str(&serde_json::to_string(&rec)?);
        text.push('\n');
    }
    manifest.write(&out, text.as_bytes())?;
    manifest.save(&out)?;
    Ok(())
}

fn run_cat(mut config: PipelineConfig, a: CatArgs) -> anyhow::Result<()> {
    if let Some(n) = a.top_n {
        config.cat.top_n = n;
    }
    if a.gamma.is_some() {
        config.cat.gamma = a.gamma;
    }
    config.validate()?;
    let corpus = PipelineConfig::path(a.corpus, &config.paths.corpus, "corpus")?;
    let emb_path = PipelineConfig::path(a.embeddings, &config.paths.embeddings, "embedding file")?;
    let out = config.output(a.out, "cat_predictions.jsonl");
    let mut manifest = RunManifest::new("run-cat", config.to_json());
    let emb = load_embeddings(&emb_path, Some(&mut manifest))?;
    let mut sentences = load_corpus(&corpus, Some(&mut manifest))?;
    if !sentences.iter().any(Sentence::has_pos) {
        bail!(Invalid("the prior needs POS tags; ingest with tags or --pos-lexicon".into()));
    }
    index_against(&mut sentences, &emb)?;
    let model = CatModel::build(&sentences, &emb, &config.cat)?;
    let mut preds = Vec::with_capacity(sentences.len());
    for s in &sentences {
        preds.push(model.assign_label(&s.id, &s.token_ids, &emb)?);
    }
    let text = priors_to_jsonl(preds.iter().map(|p| (p.id.as_str(), p.label)));
    manifest.write(&out, text.as_bytes())?;
    manifest.save(&out)?;
    eprintln!("none-label placeholder word: {}", model.none_word());
    Ok(())
}

fn parse_scope(text: &str) -> anyhow::Result<BTreeSet<GoldCategory>> {
    if text.trim().eq_ignore_ascii_case("none") || text.trim().is_empty() {
        return Ok(BTreeSet::new());
    }
    text.split(',').map(|c| c.parse::<GoldCategory>().map_err(|e| Invalid(e.to_string()).into())).collect()
}

fn rule_config(config: &PipelineConfig, a: &EnsembleArgs) -> anyhow::Result<RuleConfig> {
    let mut rule = match &a.preset {
        Some(p) => RuleConfig::preset(p).map_err(|e| Invalid(e.to_string()))?,
        None => config.rule.clone(),
    };
    if let Some(c) = &a.candidates {
        rule.candidate_mode = c.parse().map_err(|e: anchor_absa::Error| Invalid(e.to_string()))?;
    }
    if let Some(s) = &a.scope {
        rule.disambiguation_scope = parse_scope(s)?;
    }
    if let Some(f) = &a.fallback {
        rule.fallback = f.parse().map_err(|e: anchor_absa::Error| Invalid(e.to_string()))?;
    }
    rule.validate().map_err(|e| Invalid(e.to_string()))?;
    Ok(rule)
}

fn ensemble_rule(mut config: PipelineConfig, a: EnsembleArgs) -> anyhow::Result<()> {
    config.rule = rule_config(&config, &a)?;
    config.validate()?;
    let corpus = PipelineConfig::path(a.corpus.clone(), &config.paths.corpus, "corpus")?;
    let emb_path = PipelineConfig::path(a.embeddings.clone(), &config.paths.embeddings, "embedding file")?;
    let out = config.output(a.out.clone(), "ensemble_predictions.jsonl");
    let mut manifest = RunManifest::new("ensemble-rule", config.to_json());
    let emb = load_embeddings(&emb_path, Some(&mut manifest))?;
    let sentences = load_corpus(&corpus, Some(&mut manifest))?;

    let cat_bytes = read_existing(&a.cat, "prior predictions")?;
    manifest.input(&a.cat, &cat_bytes);
    let cat = parse_priors_jsonl(&String::from_utf8_lossy(&cat_bytes))
        .with_context(|| format!("in {}", a.cat.display()))?;
    let abae_bytes = read_existing(&a.abae, "ABAE predictions")?;
    manifest.input(&a.abae, &abae_bytes);
    let mut abae = Vec::new();
    for (i, line) in String::from_utf8_lossy(&abae_bytes).lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: AbaeRecord = serde_json::from_str(line)
            .map_err(|e| Invalid(format!("{}:{}: {e}", a.abae.display(), i + 1)))?;
        if rec.aspect.is_some() && rec.category.is_none() {
            bail!(Invalid(format!(
                "{} has unmapped aspects; run predict-abae with --mapping or --auto-map",
                a.abae.display()
            )));
        }
        abae.push((rec.id, rec.category));
    }
    let labels = config.cat.seeds.embeddings(&GoldCategory::PRIOR, &emb)?;
    let preds = rule_ensemble(&cat, &abae, &sentences, &emb, &labels, &config.rule)?;
    manifest.write(&out, ensemble_to_jsonl(&preds).as_bytes())?;
    manifest.save(&out)?;
    Ok(())
}

#[derive(Deserialize)]
struct PredRecord {
    id: String,
    #[serde(default)]
    category: Option<GoldCategory>,
}

fn evaluate(config: PipelineConfig, a: EvaluateArgs) -> anyhow::Result<()> {
    let gold_path = PipelineConfig::path(a.gold, &config.paths.corpus, "gold corpus")?;
    let sentences = load_corpus(&gold_path, None)?;
    let bytes = read_existing(&a.pred, "predictions")?;
    let mut by_id = HashMap::new();
    for (i, line) in String::from_utf8_lossy(&bytes).lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredRecord = serde_json::from_str(line)
            .map_err(|e| Invalid(format!("{}:{}: {e}", a.pred.display(), i + 1)))?;
        // sentences a model could not label count as Miscellaneous
        by_id.insert(rec.id, rec.category.unwrap_or(GoldCategory::Miscellaneous));
    }
    let mut preds = Vec::new();
    let mut golds = Vec::new();
    for s in &sentences {
        if let Some(g) = s.gold() {
            let p = by_id
                .get(&s.id)
                .ok_or_else(|| Invalid(format!("no prediction for gold sentence `{}`", s.id)))?;
            preds.push(*p);
            golds.push(g);
        }
    }
    if golds.is_empty() {
        bail!(Invalid(format!("{} has no single-label gold sentences", gold_path.display())));
    }
    let report = match a.labels.as_str() {
        "present" => score(&preds, &golds)?,
        "all" => score_with_labels(&preds, &golds, &GoldCategory::ALL)?,
        list => {
            let labels: Vec<GoldCategory> = parse_scope(list)?.into_iter().collect();
            score_with_labels(&preds, &golds, &labels)?
        }
    };
    print!("{}", report.to_table());
    if let Some(base) = &a.baseline {
        let base = EvalReport::from_json(&String::from_utf8_lossy(&read_existing(base, "baseline report")?))?;
        let d = compare_reports(&base, &report)?;
        println!("macro F1 delta {:+.2}, weighted F1 delta {:+.2}", d.macro_f1, d.weighted_f1);
        for c in &d.categories {
            println!("  {:<16}{:+.2}", c.category.name(), c.f1);
        }
    }
    if let Some(out) = &a.out {
        write_atomic(out, (report.to_json() + "\n").as_bytes())?;
    }
    Ok(())
}

fn top_words_cmd(config: PipelineConfig, a: TopWordsArgs) -> anyhow::Result<()> {
    let model_path = PipelineConfig::path(a.model, &config.paths.model, "model")?;
    let emb_path = PipelineConfig::path(a.embeddings, &config.paths.embeddings, "embedding file")?;
    let emb = load_embeddings(&emb_path, None)?;
    let model = load_abae(&model_path, None)?;
    let lists = top_words(&model.params.aspects, &emb, a.n)?;
    for (i, words) in lists.iter().enumerate() {
        let words: Vec<&str> = words.iter().map(|(w, _)| w.as_str()).collect();
        println!("aspect {i}: {}", words.join(" "));
    }
    if let Some(p) = &a.write_mapping {
        let categories = mappable_categories(&config, &emb)?;
        let m = AspectMapping::nearest_seed(&model.params.aspects, &emb, &config.cat.seeds, &categories)?;
        write_atomic(p, m.to_text().as_bytes())?;
    }
    Ok(())
}

fn synth(mut config: PipelineConfig, a: SynthArgs) -> anyhow::Result<()> {
    let seed = config.stage_seed("synth");
    let s = &mut config.synthetic;
    s.sentences = a.sentences.unwrap_or(s.sentences);
    s.words_per_topic = a.words_per_topic.unwrap_or(s.words_per_topic);
    s.seed = seed;
    s.validate().map_err(|e| Invalid(e.to_string()))?;
    let out = config.output(a.out, "synthetic.jsonl");
    let corpus = generate(&config.synthetic)?;
    let mut manifest = RunManifest::new("synth", config.to_json());
    manifest.write(&out, to_jsonl(&corpus.sentences).as_bytes())?;
    manifest.save(&out)?;
    Ok(())
}

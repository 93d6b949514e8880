//! Subcommand implementations. Each stage writes its artifacts into the run
//! directory; subcommands chain stages.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use memesim_core::analytics::{
    chi_square_report, default_stopwords, parse_stopwords, word_frequencies, word_frequencies_by_emotion,
    write_frequencies_csv, ChiSquareReport, TokenCount,
};
use memesim_core::corpus::{attribute_distribution, load_corpus, write_corpus_csv, Attribute, Corpus, DistributionTable};
use memesim_core::embedding::{
    align, encode_embeddings, load_embeddings_auto, Alignment, EmbeddingManifest, EmbeddingMatrix, Modality,
};
use memesim_core::emotion::{
    annotate_with_lexicon, emotion_distribution, group_emotions, load_emotion_sidecar, write_emotion_sidecar,
    EmotionAnnotations, EmotionDistribution, EmotionLabel,
};
use memesim_core::evaluation::{agreement_report, emotion_agreement, load_responses, AgreementReport};
use memesim_core::fixtures::{self, SyntheticSpec};
use memesim_core::grouping::{
    clique_check, group_edges, group_stats, load_groups_json, name_groups, write_groups_csv, write_groups_json,
    MemeGroup,
};
use memesim_core::similarity::{
    aggregate, encode_edges_bin, pair_scores, pairwise_edges, read_edges_csv, reindex_edges, write_edges_csv,
    EdgeReport, KernelOptions, ModalityScores, SimilarityEdge,
};
use memesim_core::{Error, ErrorKind, Result};
use memesim_service::ServiceConfig;

use crate::args::*;
use crate::error::CliResult;
use crate::run::{json_bytes, RunDir};

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub out: PathBuf,
    pub stdout: bool,
    pub threads: usize,
}

impl Context {
    /// Thread count actually used by the kernel.
    pub fn effective_threads(&self) -> usize {
        if self.threads == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            self.threads
        }
    }

    /// Human-readable summary. Goes to stdout unless stdout carries the
    /// artifact, in which case it goes to stderr.
    fn say(&self, line: impl AsRef<str>) {
        if self.stdout {
            eprintln!("{}", line.as_ref());
        } else {
            println!("{}", line.as_ref());
        }
    }

    fn emit(&self, bytes: &[u8]) -> Result<()> {
        if self.stdout {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| Error::io("<stdout>", e))?;
        }
        Ok(())
    }

    fn run_dir<T: Serialize>(&self, command: &str, flags: &T) -> Result<RunDir> {
        let flags = serde_json::to_value(flags).map_err(|e| Error::Format(e.to_string()))?;
        RunDir::create(&self.out, command, flags)
    }

    fn finish(&self, run: RunDir) -> Result<()> {
        let dir = run.finish(self.effective_threads())?;
        log::info!("artifacts written to {}", dir.display());
        Ok(())
    }
}

pub fn dispatch(ctx: &Context, command: Command) -> CliResult<()> {
    match command {
        Command::Ingest(a) => ingest(ctx, &a)?,
        Command::Similarity(a) => similarity(ctx, &a)?,
        Command::Group(a) => group(ctx, &a)?,
        Command::Emotions(a) => emotions(ctx, &a)?,
        Command::Analyze(a) => analyze(ctx, &a)?,
        Command::Evaluate(a) => evaluate(ctx, &a)?,
        Command::Serve(a) => serve(ctx, a)?,
        Command::Pipeline(a) => pipeline(ctx, &a)?,
        Command::Explain(a) => explain(ctx, &a)?,
        Command::Synth(a) => synth(ctx, &a)?,
    }
    Ok(())
}

fn load_corpus_input(run: &mut RunDir, args: &CorpusArgs) -> Result<(Corpus, usize)> {
    run.input("corpus", &args.corpus)?;
    let loaded = load_corpus(&args.corpus, args.schema)?;
    for w in &loaded.warnings {
        log::warn!("{}: {w}", args.corpus.display());
    }
    Ok((loaded.corpus, loaded.warnings.len()))
}

fn read_corpus_input(run: &mut RunDir, args: &CorpusArgs) -> Result<Corpus> {
    load_corpus_input(run, args).map(|(c, _)| c)
}

#[derive(Debug, Serialize)]
struct CorpusReport {
    source: String,
    schema: String,
    memes: usize,
    text_present: usize,
    unmapped_values: usize,
    attributes: BTreeMap<String, DistributionTable>,
}

fn stage_ingest(ctx: &Context, run: &mut RunDir, args: &CorpusArgs) -> Result<(Corpus, Vec<u8>)> {
    let (corpus, unmapped) = load_corpus_input(run, args)?;
    let mut attributes = BTreeMap::new();
    for attr in Attribute::ALL {
        attributes.insert(attr.as_str().to_string(), attribute_distribution(&corpus, attr)?);
    }
    let report = CorpusReport {
        source: corpus.source_label.clone(),
        schema: args.schema.to_string(),
        memes: corpus.len(),
        text_present: corpus.text_present_count(),
        unmapped_values: unmapped,
        attributes,
    };
    let bytes = json_bytes(&report)?;
    run.write("corpus_report.json", &bytes)?;
    ctx.say(format!(
        "corpus: {} memes, {} with text, {} unmapped attribute values",
        report.memes, report.text_present, report.unmapped_values
    ));
    Ok((corpus, bytes))
}

fn read_embedding_input(
    run: &mut RunDir,
    role: &str,
    path: &Path,
    modality: Modality,
) -> Result<(EmbeddingMatrix, EmbeddingManifest)> {
    run.input(role, path)?;
    if !path.extension().is_some_and(|e| e == "jsonl") {
        run.input(&format!("{role}_ids"), &path.with_extension("ids"))?;
    }
    load_embeddings_auto(path, modality)
}

fn load_alignment(run: &mut RunDir, corpus: &Corpus, args: &EmbeddingArgs) -> Result<Alignment> {
    let image = read_embedding_input(run, "image_embeddings", &args.img_emb, Modality::Image)?;
    let text = read_embedding_input(run, "text_embeddings", &args.txt_emb, Modality::Text)?;
    let alignment = align(corpus, (&image.0, &image.1), (&text.0, &text.1), args.align)?;
    if !alignment.excluded.is_empty() {
        log::warn!(
            "{} corpus memes lack an image or text embedding and are left out of similarity",
            alignment.excluded.len()
        );
    }
    Ok(alignment)
}

#[derive(Debug, Serialize)]
struct SimilarityReport {
    aligned: usize,
    dim: usize,
    threshold: f64,
    aggregation: String,
    pairs_considered: u64,
    edges: usize,
    excluded: Vec<String>,
    degenerate: Vec<String>,
}

fn stage_similarity(
    ctx: &Context,
    run: &mut RunDir,
    corpus: &Corpus,
    emb: &EmbeddingArgs,
    scoring: &ScoringArgs,
) -> Result<(Vec<String>, EdgeReport, Vec<u8>)> {
    if scoring.tile == 0 {
        return Err(Error::Config("--tile must be at least 1".into()));
    }
    let alignment = load_alignment(run, corpus, emb)?;
    let store = &alignment.store;
    let started = std::time::Instant::now();
    let report = pairwise_edges(
        store,
        scoring.threshold,
        &scoring.agg,
        KernelOptions { threads: ctx.threads, tile: scoring.tile },
    )?;
    log::info!("similarity kernel over {} memes took {:.2?}", store.len(), started.elapsed());
    let ids = store.ids();
    let csv = run.write_with("edges.csv", |buf| write_edges_csv(&report.edges, &ids, buf))?;
    run.write("edges.bin", &encode_edges_bin(&report.edges)?)?;
    run.write("aligned_ids.txt", ids_text(&ids).as_bytes())?;
    let n = store.len() as u64;
    let summary = SimilarityReport {
        aligned: store.len(),
        dim: store.dim(),
        threshold: scoring.threshold,
        aggregation: scoring.agg.to_string(),
        pairs_considered: n * n.saturating_sub(1) / 2,
        edges: report.edges.len(),
        excluded: alignment.excluded.clone(),
        degenerate: report.degenerate.clone(),
    };
    run.write_json("similarity_report.json", &summary)?;
    ctx.say(format!(
        "similarity: {} aligned memes, {} of {} pairs at or above {} ({} aggregation)",
        summary.aligned, summary.edges, summary.pairs_considered, summary.threshold, summary.aggregation
    ));
    Ok((ids, report, csv))
}

fn ids_text(ids: &[String]) -> String {
    ids.iter().flat_map(|id| [id.as_str(), "\n"]).collect()
}

/// Groups the full corpus; `edges` index corpus rows.
fn stage_group(
    ctx: &Context,
    run: &mut RunDir,
    corpus: &Corpus,
    edges: &[SimilarityEdge],
    clique: bool,
) -> Result<(Vec<MemeGroup>, Vec<u8>)> {
    let components = group_edges(corpus.len(), edges)?;
    let ids: Vec<String> = corpus.ids().map(str::to_string).collect();
    let groups = name_groups(&components, &ids)?;
    let json = run.write_with("groups.json", |buf| write_groups_json(&groups, buf))?;
    run.write_with("groups.csv", |buf| write_groups_csv(&groups, buf))?;
    let stats = group_stats(&groups)?;
    run.write_json("group_report.json", &stats)?;
    ctx.say(format!(
        "groups: {} over {} memes, {} singletons, largest {}",
        stats.count, stats.memes, stats.singletons, stats.largest
    ));
    if clique {
        let checks = clique_check(&components, edges);
        let chained = checks.iter().filter(|c| c.density.is_some_and(|d| d < 1.0)).count();
        run.write_json("clique_check.json", &checks)?;
        ctx.say(format!("clique check: {chained} multi-member groups are not fully linked"));
    }
    Ok((groups, json))
}

fn load_annotations(run: &mut RunDir, corpus: Option<&Corpus>, source: &EmotionSource) -> Result<EmotionAnnotations> {
    match source {
        EmotionSource::Sidecar(path) => {
            run.input("emotion_sidecar", path)?;
            let mut ann = load_emotion_sidecar(path)?;
            if let Some(corpus) = corpus {
                let dropped = ann.restrict_to(corpus);
                if !dropped.is_empty() {
                    log::warn!("{} sidecar rows name memes outside the corpus and were ignored", dropped.len());
                }
            }
            Ok(ann)
        }
        EmotionSource::Lexicon => match corpus {
            Some(corpus) => Ok(annotate_with_lexicon(corpus)),
            None => Err(Error::Config("the lexicon source needs --corpus".into())),
        },
    }
}

fn stage_emotions(
    ctx: &Context,
    run: &mut RunDir,
    corpus: &Corpus,
    source: &EmotionSource,
    groups: Option<&[MemeGroup]>,
) -> Result<(EmotionAnnotations, Vec<u8>)> {
    let ann = load_annotations(run, Some(corpus), source)?;
    let csv = run.write_with("emotions.csv", |buf| write_emotion_sidecar(&ann, buf))?;
    ctx.say(format!("emotions: {} of {} memes annotated ({source})", ann.len(), corpus.len()));
    if let Some(groups) = groups {
        let per_group: Vec<_> = group_emotions(groups, &ann).into_values().collect();
        run.write_json("group_emotions.json", &per_group)?;
    }
    Ok((ann, csv))
}

#[derive(Debug, Serialize)]
struct SkippedTest {
    attribute: Attribute,
    reason: String,
}

#[derive(Debug, Serialize)]
struct FrequencyReport {
    all: Vec<TokenCount>,
    by_emotion: BTreeMap<EmotionLabel, Vec<TokenCount>>,
}

#[derive(Debug, Serialize)]
struct AnalysisReport {
    emotion_distribution: EmotionDistribution,
    yates: bool,
    chi_square: Vec<ChiSquareReport>,
    skipped: Vec<SkippedTest>,
    frequencies: FrequencyReport,
}

fn stage_analyze(
    ctx: &Context,
    run: &mut RunDir,
    corpus: &Corpus,
    ann: &EmotionAnnotations,
    args: &AnalysisArgs,
) -> Result<Vec<u8>> {
    let distribution = emotion_distribution(ann)?;
    run.write_with("emotion_distribution.csv", |buf| distribution.write_csv(buf))?;
    for r in &distribution.rows {
        ctx.say(format!("  {:<9} {:>6}  {:>6.2}%", r.emotion.as_str(), r.count, r.percent));
    }

    let explicit = !args.attributes.is_empty();
    let attributes: Vec<Attribute> = if explicit { args.attributes.clone() } else { Attribute::ALL.to_vec() };
    let mut tests = Vec::new();
    let mut skipped = Vec::new();
    for attr in attributes {
        match chi_square_report(ann, corpus, attr, args.yates) {
            Ok(r) => {
                ctx.say(format!("chi-square emotion × {attr}: statistic {:.4}, df {}, p {:.6e}", r.statistic, r.df, r.p_value));
                tests.push(r);
            }
            Err(e) if !explicit && matches!(e.kind(), ErrorKind::Data | ErrorKind::Empty) => {
                log::warn!("skipping chi-square for `{attr}`: {e}");
                skipped.push(SkippedTest { attribute: attr, reason: e.to_string() });
            }
            Err(e) => return Err(e),
        }
    }

    let owned_stop;
    let stopwords = match &args.stopwords {
        Some(path) => {
            run.input("stopwords", path)?;
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            owned_stop = parse_stopwords(&text);
            &owned_stop
        }
        None => default_stopwords(),
    };
    let texts: Vec<&str> = corpus.records.iter().filter(|r| r.text_present).map(|r| r.text.as_str()).collect();
    let all = word_frequencies(&texts, stopwords, args.top_k)?;
    let by_emotion: BTreeMap<EmotionLabel, Vec<TokenCount>> =
        word_frequencies_by_emotion(ann, corpus, stopwords, args.top_k)?.into_iter().collect();
    run.write_with("frequencies.csv", |buf| write_frequencies_csv(&all, buf))?;
    for (label, freqs) in &by_emotion {
        if !freqs.is_empty() {
            run.write_with(&format!("frequencies_{label}.csv"), |buf| write_frequencies_csv(freqs, buf))?;
        }
    }

    let report = AnalysisReport {
        emotion_distribution: distribution,
        yates: args.yates,
        chi_square: tests,
        skipped,
        frequencies: FrequencyReport { all, by_emotion },
    };
    let bytes = json_bytes(&report)?;
    run.write("analysis.json", &bytes)?;
    Ok(bytes)
}

#[derive(Debug, Serialize)]
struct EvaluationReport {
    agreement: AgreementReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    emotion_agreement: Option<memesim_core::evaluation::EmotionAgreement>,
}

fn stage_evaluate(
    ctx: &Context,
    run: &mut RunDir,
    responses_path: &Path,
    emotion_inputs: Option<(&EmotionAnnotations, &[MemeGroup])>,
) -> Result<Vec<u8>> {
    run.input("responses", responses_path)?;
    let responses = load_responses(responses_path)?;
    let agreement = agreement_report(&responses);
    run.write_with("agreement.csv", |buf| agreement.write_csv(buf))?;
    match (agreement.average, agreement.min, agreement.max) {
        (Some(avg), Some(min), Some(max)) => ctx.say(format!(
            "agreement: average {avg:.2}%, min {min:.2}%, max {max:.2}% over {} groups, {} participants",
            agreement.n_groups, agreement.n_participants
        )),
        _ => ctx.say("agreement: no responses"),
    }
    let emotion = match emotion_inputs {
        Some((ann, groups)) => match emotion_agreement(&responses, ann, groups) {
            Ok(e) => {
                ctx.say(format!("emotion agreement: {:.2}% ({} of {})", e.accuracy, e.matched, e.total));
                Some(e)
            }
            Err(e) if e.kind() == ErrorKind::Empty => {
                log::info!("no emotion agreement: {e}");
                None
            }
            Err(e) => return Err(e),
        },
        None => None,
    };
    let bytes = json_bytes(&EvaluationReport { agreement, emotion_agreement: emotion })?;
    run.write("agreement.json", &bytes)?;
    Ok(bytes)
}

fn ingest(ctx: &Context, args: &IngestArgs) -> Result<()> {
    let mut run = ctx.run_dir("ingest", args)?;
    let (_, report) = stage_ingest(ctx, &mut run, &args.corpus)?;
    ctx.emit(&report)?;
    ctx.finish(run)
}

fn similarity(ctx: &Context, args: &SimilarityArgs) -> Result<()> {
    let mut run = ctx.run_dir("similarity", args)?;
    let corpus = read_corpus_input(&mut run, &args.corpus)?;
    let (_, _, csv) = stage_similarity(ctx, &mut run, &corpus, &args.embeddings, &args.scoring)?;
    ctx.emit(&csv)?;
    ctx.finish(run)
}

fn group(ctx: &Context, args: &GroupArgs) -> Result<()> {
    let mut run = ctx.run_dir("group", args)?;
    let corpus = read_corpus_input(&mut run, &args.corpus)?;
    run.input("edges", &args.edges)?;
    let file = std::fs::File::open(&args.edges).map_err(|e| Error::io(&args.edges, e))?;
    let edges = read_edges_csv(std::io::BufReader::new(file), &corpus.index())?;
    let (_, json) = stage_group(ctx, &mut run, &corpus, &edges, args.clique_check)?;
    ctx.emit(&json)?;
    ctx.finish(run)
}

fn read_groups_input(run: &mut RunDir, path: &Path) -> Result<Vec<MemeGroup>> {
    run.input("groups", path)?;
    load_groups_json(path)
}

fn emotions(ctx: &Context, args: &EmotionsArgs) -> Result<()> {
    let mut run = ctx.run_dir("emotions", args)?;
    let corpus = read_corpus_input(&mut run, &args.corpus)?;
    let groups = args.groups.as_deref().map(|p| read_groups_input(&mut run, p)).transpose()?;
    let (ann, csv) = stage_emotions(ctx, &mut run, &corpus, &args.emotions.emotions, groups.as_deref())?;
    if !ann.is_empty() {
        let d = emotion_distribution(&ann)?;
        run.write_with("emotion_distribution.csv", |buf| d.write_csv(buf))?;
    }
    ctx.emit(&csv)?;
    ctx.finish(run)
}

fn analyze(ctx: &Context, args: &AnalyzeArgs) -> Result<()> {
    let mut run = ctx.run_dir("analyze", args)?;
    let corpus = read_corpus_input(&mut run, &args.corpus)?;
    let ann = load_annotations(&mut run, Some(&corpus), &args.emotions.emotions)?;
    let report = stage_analyze(ctx, &mut run, &corpus, &ann, &args.analysis)?;
    ctx.emit(&report)?;
    ctx.finish(run)
}

fn evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<()> {
    let mut run = ctx.run_dir("evaluate", args)?;
    let corpus = match &args.corpus {
        Some(path) => Some(read_corpus_input(&mut run, &CorpusArgs { corpus: path.clone(), schema: args.schema })?),
        None => None,
    };
    let groups = args.groups.as_deref().map(|p| read_groups_input(&mut run, p)).transpose()?;
    let ann = match (&groups, &corpus, &args.emotions.emotions) {
        (Some(_), Some(_), _) | (Some(_), None, EmotionSource::Sidecar(_)) => {
            Some(load_annotations(&mut run, corpus.as_ref(), &args.emotions.emotions)?)
        }
        _ => None,
    };
    let inputs = ann.as_ref().zip(groups.as_deref());
    let report = stage_evaluate(ctx, &mut run, &args.responses, inputs)?;
    ctx.emit(&report)?;
    ctx.finish(run)
}

fn pipeline(ctx: &Context, args: &PipelineArgs) -> Result<()> {
    let mut run = ctx.run_dir("pipeline", args)?;
    let (corpus, _) = stage_ingest(ctx, &mut run, &args.corpus)?;
    let (aligned_ids, report, _) = stage_similarity(ctx, &mut run, &corpus, &args.embeddings, &args.scoring)?;
    let edges = reindex_edges(&report.edges, &aligned_ids, &corpus.index())?;
    let (groups, groups_json) = stage_group(ctx, &mut run, &corpus, &edges, args.clique_check)?;
    let (ann, _) = stage_emotions(ctx, &mut run, &corpus, &args.emotions.emotions, Some(&groups))?;
    stage_analyze(ctx, &mut run, &corpus, &ann, &args.analysis)?;
    if let Some(responses) = &args.responses {
        stage_evaluate(ctx, &mut run, responses, Some((&ann, &groups)))?;
    }
    ctx.emit(&groups_json)?;
    ctx.finish(run)
}

#[derive(Debug, Serialize)]
struct Explanation {
    id_a: String,
    id_b: String,
    scores: ModalityScores,
    aggregation: String,
    combined: f64,
    threshold: f64,
    similar: bool,
}

fn explain(ctx: &Context, args: &ExplainArgs) -> Result<()> {
    if !(-1.0..=1.0).contains(&args.threshold) {
        return Err(Error::Config(format!("threshold {} outside [-1, 1]", args.threshold)));
    }
    args.agg.validate()?;
    if args.id_a == args.id_b {
        return Err(Error::Config("explain needs two distinct meme ids".into()));
    }
    let mut run = ctx.run_dir("explain", args)?;
    let corpus = read_corpus_input(&mut run, &args.corpus)?;
    let alignment = load_alignment(&mut run, &corpus, &args.embeddings)?;
    let store = &alignment.store;
    let row = |id: &str| store.row_of(id).ok_or_else(|| Error::Lookup(id.to_string()));
    let scores = pair_scores(store, row(&args.id_a)?, row(&args.id_b)?)?;
    let combined = aggregate(&scores, &args.agg)?;
    let e = Explanation {
        id_a: args.id_a.clone(),
        id_b: args.id_b.clone(),
        scores,
        aggregation: args.agg.to_string(),
        combined,
        threshold: args.threshold,
        similar: combined >= args.threshold,
    };
    let bytes = json_bytes(&e)?;
    run.write("explain.json", &bytes)?;
    ctx.say(format!("image(a) · image(b)  {:>9.6}", scores.ii));
    ctx.say(format!("text(a)  · text(b)   {:>9.6}", scores.tt));
    ctx.say(format!("image(a) · text(b)   {:>9.6}", scores.it));
    ctx.say(format!("text(a)  · image(b)  {:>9.6}", scores.ti));
    ctx.say(format!("combined ({})        {:>9.6}", e.aggregation, combined));
    let verdict = if e.similar { "similar" } else { "not similar" };
    let cmp = if e.similar { ">=" } else { "<" };
    ctx.say(format!("verdict: {verdict} ({combined:.6} {cmp} {})", args.threshold));
    ctx.emit(&bytes)?;
    ctx.finish(run)
}

fn synth(ctx: &Context, args: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        memes: args.memes,
        dim: args.dim,
        cluster_size: args.cluster_size,
        clusters: args.clusters,
        noise: args.noise,
        seed: args.seed,
    };
    let mut run = ctx.run_dir("synth", args)?;
    let data = fixtures::synthetic(&spec)?;
    let corpus_csv = run.write_with("corpus.csv", |buf| write_corpus_csv(&data.corpus, buf))?;
    let ids = ids_text(data.manifest.ids());
    run.write("image.bin", &encode_embeddings(&data.image)?)?;
    run.write("image.ids", ids.as_bytes())?;
    run.write("text.bin", &encode_embeddings(&data.text)?)?;
    run.write("text.ids", ids.as_bytes())?;
    let ann = annotate_with_lexicon(&data.corpus);
    run.write_with("emotions.csv", |buf| write_emotion_sidecar(&ann, buf))?;
    let mut clusters = String::from("meme_id,cluster\n");
    for (id, c) in data.manifest.ids().iter().zip(&data.cluster) {
        let c = c.map(|c| c.to_string()).unwrap_or_default();
        clusters.push_str(&format!("{id},{c}\n"));
    }
    run.write("clusters.csv", clusters.as_bytes())?;
    let mut responses = Vec::new();
    for r in fixtures::survey_responses() {
        serde_json::to_writer(&mut responses, &r).map_err(|e| Error::Format(e.to_string()))?;
        responses.push(b'\n');
    }
    run.write("responses.jsonl", &responses)?;
    ctx.say(format!(
        "synthetic corpus: {} memes, dim {}, {} planted clusters of {} (seed {})",
        spec.memes, spec.dim, spec.clusters, spec.cluster_size, spec.seed
    ));
    ctx.emit(&corpus_csv)?;
    ctx.finish(run)
}

fn serve(ctx: &Context, args: ServeArgs) -> CliResult<()> {
    let config = ServiceConfig {
        bind: args.bind,
        corpus: args.corpus.corpus,
        schema: args.corpus.schema,
        groups: args.groups,
        annotations: match args.emotions {
            EmotionSource::Sidecar(p) => Some(p),
            EmotionSource::Lexicon => None,
        },
        responses: args.responses,
        image_dir: args.image_dir,
        static_dir: args.static_dir,
        read_only: args.read_only,
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(ctx.effective_threads())
        .enable_all()
        .build()
        .map_err(|e| Error::io("<runtime>", e))?;
    runtime.block_on(memesim_service::serve(config))?;
    Ok(())
}

//! One function per CLI verb.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use storyline_core::analysis::{
    entity_idf_report, render_svg, temporal_report, vocabulary_gap_report, Bins, Closed, EntityOptions, EntitySource,
    GapVariant,
};
use storyline_core::corpus::{Corpus, IngestOptions, DEFAULT_SECTIONS};
use storyline_core::dataset::{
    build_dataset, chronological_split, dataset_stats, qrels_for, read_queries, write_queries, SplitFractions,
};
use storyline_core::eval::{
    evaluate, read_qrels, read_run, run_experiment, write_qrels, write_run, EvalReport, EvalScope, ExperimentConfig,
    Qrels,
};
use storyline_core::rankers::{
    embed_articles, CosineRanker, ExternalScorer, Pipeline, QueryEncoder, SemanticScorer,
};
use storyline_core::synth::{generate, SynthConfig};
use storyline_core::{Bm25Params, Index, Query};

use crate::cli::*;
use crate::service::snapshot::{load_corpus, load_embeddings, load_word_vectors};
use crate::service::{self, AppState, ServeConfig, Snapshot};

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Filter(a) => filter(a),
        Command::BuildDataset(a) => build(a),
        Command::Split(a) => split(a),
        Command::Index(a) => index(a),
        Command::Stats(a) => stats(a),
        Command::Embed(a) => embed(a),
        Command::Run(a) => experiment(a),
        Command::Eval(a) => eval(a),
        Command::Analyze(a) => analyze(a),
        Command::Synth(a) => synth(a),
        Command::Serve(a) => serve(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    corpus.export(&mut w)?;
    w.flush()?;
    Ok(())
}

fn load_queries(path: &Path) -> Result<Vec<Query>> {
    read_queries(open(path)?).with_context(|| format!("reading queries {}", path.display()))
}

fn load_qrels(path: &Path) -> Result<Qrels> {
    let pairs = read_qrels(open(path)?).with_context(|| format!("reading qrels {}", path.display()))?;
    Ok(Qrels::from_pairs(&pairs)?)
}

fn ingest(a: IngestArgs) -> Result<()> {
    let opts = IngestOptions { strict: a.strict, split_sentences: a.split_sentences };
    let (corpus, report) = Corpus::ingest(open(&a.input)?, opts).with_context(|| format!("ingesting {}", a.input.display()))?;
    write_corpus(&corpus, &a.output)?;
    for e in &report.rejected {
        eprintln!("skipped: {e}");
    }
    if let Some(path) = &a.rejects {
        let mut w = create(path)?;
        writeln!(w, "reason")?;
        for e in &report.rejected {
            writeln!(w, "{e}")?;
        }
        w.flush()?;
    }
    println!("articles\t{}\nrejected\t{}", report.accepted, report.rejected.len());
    Ok(())
}

fn filter(a: FilterArgs) -> Result<()> {
    let corpus = load_corpus(&a.input)?;
    let kept = match &a.sections {
        Some(s) => corpus.filter_by_section(s),
        None => corpus.filter_by_section(DEFAULT_SECTIONS),
    };
    write_corpus(&kept, &a.output)?;
    println!("kept\t{}\ndropped\t{}", kept.len(), corpus.len() - kept.len());
    Ok(())
}

fn build(a: BuildDatasetArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let ds = build_dataset(&corpus);
    let mut w = create(&a.queries_out)?;
    write_queries(&ds.queries, &mut w)?;
    w.flush()?;
    let mut w = create(&a.qrels_out)?;
    write_qrels(&ds.qrels, &mut w)?;
    w.flush()?;
    if let Some(path) = &a.skips_out {
        let mut w = create(path)?;
        ds.skipped.write_tsv(&mut w)?;
        w.flush()?;
    }
    println!("links\t{}\nqueries\t{}\nskipped\t{}", ds.links_seen, ds.queries.len(), ds.skipped.total());
    Ok(())
}

fn split(a: SplitArgs) -> Result<()> {
    let fractions = SplitFractions::parse(&a.fractions)?;
    let queries = load_queries(&a.queries)?;
    let parts = chronological_split(&queries, fractions)?;
    for part in &parts {
        let selected: Vec<Query> = part.select(&queries).into_iter().cloned().collect();
        let name = part.name.as_str();
        let mut w = create(&a.out_dir.join(format!("{name}.jsonl")))?;
        write_queries(&selected, &mut w)?;
        w.flush()?;
        let mut w = create(&a.out_dir.join(format!("{name}.qrels")))?;
        write_qrels(&qrels_for(&selected), &mut w)?;
        w.flush()?;
        let span = part.span.map_or("-".to_string(), |(from, to)| format!("{from}\t{to}"));
        println!("{name}\t{}\t{span}", selected.len());
    }
    Ok(())
}

fn index(a: IndexArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let index = Index::build(&corpus, Bm25Params::new(a.k1, a.b)?)?;
    let mut w = create(&a.output)?;
    index.write_to(&mut w)?;
    w.flush()?;
    print_index_stats(&index);
    Ok(())
}

fn print_index_stats(index: &Index) {
    let s = index.stats();
    println!(
        "documents\t{}\nvocabulary\t{}\navg_doc_len\t{:.4}\nk1\t{}\nb\t{}",
        s.documents, s.vocabulary, s.avg_doc_len, s.params.k1, s.params.b
    );
}

fn stats(a: StatsArgs) -> Result<()> {
    if let Some(path) = &a.index {
        let index = Index::read_from(open(path)?).with_context(|| format!("reading index {}", path.display()))?;
        print_index_stats(&index);
    }
    if let (Some(qpath), Some(cpath)) = (&a.queries, &a.corpus) {
        let queries = load_queries(qpath)?;
        let corpus = load_corpus(cpath)?;
        let parts = chronological_split(&queries, SplitFractions::parse(&a.fractions)?)?;
        let named: Vec<(&str, Vec<&Query>)> = parts.iter().map(|p| (p.name.as_str(), p.select(&queries))).collect();
        print!("{}", dataset_stats(&named, &corpus).to_tsv());
    }
    Ok(())
}

fn embed(a: EmbedArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let words = load_word_vectors(&a.word_vectors)?;
    let store = embed_articles(&corpus, &words);
    let mut w = create(&a.output)?;
    store.write(&mut w)?;
    w.flush()?;
    println!("vectors\t{}\ndim\t{}", store.len(), store.dim());
    Ok(())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_relative() {
        base.join(p)
    } else {
        p.to_path_buf()
    }
}

fn experiment(a: RunArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg = ExperimentConfig::from_toml(&text).with_context(|| format!("parsing {}", a.config.display()))?;
    if let Some(s) = a.system {
        cfg.system = s;
    }
    if let Some(m) = a.mode {
        cfg.mode = m;
    }
    let base = a.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let at = |p: &Path| resolve(&base, p);
    let paths = &cfg.paths;

    let corpus = load_corpus(&at(&paths.corpus))?;
    let queries = load_queries(&at(&paths.queries))?;
    let index = match &paths.index {
        Some(p) => Index::read_from(open(&at(p))?).with_context(|| format!("reading index {}", p.display()))?,
        None => {
            let d = Bm25Params::default();
            Index::build(&corpus, Bm25Params::new(cfg.k1.unwrap_or(d.k1), cfg.b.unwrap_or(d.b))?)?
        }
    };
    let semantic: Option<Box<dyn SemanticScorer>> = match (&cfg.external_scorer, &paths.article_vectors) {
        (Some(endpoint), _) => {
            let mut s = ExternalScorer::new(endpoint.clone());
            if let Some(secs) = cfg.external_timeout_secs {
                s = s.with_timeout(Duration::from_secs(secs));
            }
            Some(Box::new(s))
        }
        (None, Some(vectors)) => {
            let words = paths.word_vectors.as_ref().map(|p| load_word_vectors(&at(p))).transpose()?;
            let encoder = match (&paths.query_vectors, words) {
                (Some(q), fallback) => QueryEncoder::Precomputed { vectors: load_embeddings(&at(q))?, fallback },
                (None, Some(w)) => QueryEncoder::WordMean(w),
                (None, None) => bail!("article_vectors needs query_vectors or word_vectors to embed queries"),
            };
            Some(Box::new(CosineRanker { articles: load_embeddings(&at(vectors))?, queries: encoder }))
        }
        (None, None) => None,
    };

    let mut pipeline = Pipeline::new(&corpus, &index);
    pipeline.semantic = semantic.as_deref();
    pipeline.first_stage_depth = cfg.first_stage_depth;
    pipeline.rrf_k = cfg.rrf_k;

    let selected: Vec<&Query> = match cfg.split {
        None => queries.iter().collect(),
        Some(name) => {
            let parts = chronological_split(&queries, cfg.split_fractions()?)?;
            parts.iter().find(|p| p.name == name).expect("all three splits exist").select(&queries)
        }
    };
    let (run, report) = run_experiment(&pipeline, &selected, cfg.mode, cfg.system, cfg.depth)?;

    if let Some(p) = a.run_out.clone().or_else(|| paths.run_out.as_ref().map(|p| at(p))) {
        let mut w = create(&p)?;
        write_run(&run, &mut w)?;
        w.flush()?;
    }
    if let Some(p) = a.report_out.clone().or_else(|| paths.report_out.as_ref().map(|p| at(p))) {
        let mut w = create(&p)?;
        w.write_all(report.to_tsv().as_bytes())?;
        w.flush()?;
    }
    println!("system\t{}\nmode\t{}", cfg.system, cfg.mode);
    print_summary(&report);
    Ok(())
}

fn print_summary(report: &EvalReport) {
    for line in report.to_tsv().lines().filter(|l| l.contains("\tall\t") || l.starts_with("ttest_")) {
        println!("{line}");
    }
}

fn evaluate_file(run: &Path, qrels: &Qrels, scope: EvalScope) -> Result<EvalReport> {
    let run = read_run(open(run)?).with_context(|| format!("reading run {}", run.display()))?;
    Ok(evaluate(&run, qrels, scope)?)
}

fn eval(a: EvalArgs) -> Result<()> {
    let qrels = load_qrels(&a.qrels)?;
    let scope = match a.scope {
        Scope::All => EvalScope::AllQrels,
        Scope::Run => EvalScope::RunQueries,
    };
    let mut report = evaluate_file(&a.run, &qrels, scope)?;
    if let Some(b) = &a.baseline {
        let baseline = evaluate_file(b, &qrels, scope)?;
        report.compare_to(&baseline)?;
    }
    if let Some(p) = &a.output {
        let mut w = create(p)?;
        w.write_all(report.to_tsv().as_bytes())?;
        w.flush()?;
    }
    print_summary(&report);
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let queries = load_queries(&a.queries)?;
    let corpus = load_corpus(&a.corpus)?;
    let qrels = load_qrels(&a.qrels)?;
    let reports = a
        .runs
        .iter()
        .map(|r| evaluate_file(r, &qrels, EvalScope::RunQueries))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&EvalReport> = reports.iter().collect();
    let custom = |closed| a.bins.clone().map(|edges| Bins::new(edges, closed)).transpose();

    let report = match a.dimension {
        DimensionArg::JaccardQ | DimensionArg::JaccardC => {
            let bins = custom(Closed::Left)?.unwrap_or_else(Bins::jaccard);
            let variant = if a.dimension == DimensionArg::JaccardQ { GapVariant::FullQuery } else { GapVariant::ContextOnly };
            vocabulary_gap_report(&queries, &corpus, &refs, variant, &bins)?
        }
        DimensionArg::Daydiff => {
            let bins = custom(Closed::Right)?.unwrap_or_else(Bins::day_diff);
            temporal_report(&queries, &corpus, &refs, &bins)?
        }
        DimensionArg::EntityIdf => {
            let source = match a.entities {
                EntitySourceArg::Auto => EntitySource::Auto,
                EntitySourceArg::Annotations => EntitySource::Annotations,
                EntitySourceArg::Heuristic => EntitySource::Heuristic,
            };
            let options = EntityOptions { source, include_context: !a.event_only, bins: custom(Closed::Left)? };
            entity_idf_report(&queries, &corpus, &refs, &options)?
        }
    };

    let mut wrote = false;
    for (path, body) in [(&a.tsv, report.to_tsv()), (&a.json, report.to_json()), (&a.svg, render_svg(&report))] {
        if let Some(p) = path {
            let mut w = create(p)?;
            w.write_all(body.as_bytes())?;
            w.flush()?;
            wrote = true;
        }
    }
    if !wrote {
        print!("{}", report.to_tsv());
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        seed: a.seed.unwrap_or(d.seed),
        storylines: a.storylines.unwrap_or(d.storylines),
        articles_per_storyline: a.articles_per_storyline.unwrap_or(d.articles_per_storyline),
        ..d
    };
    let bench = generate(&cfg);
    write_corpus(&bench.corpus, &a.out_dir.join("corpus.jsonl"))?;
    for (name, store) in [("articles.vec", &bench.article_vectors), ("queries.vec", &bench.query_vectors)] {
        let mut w = create(&a.out_dir.join(name))?;
        store.write(&mut w)?;
        w.flush()?;
    }
    let mut w = create(&a.out_dir.join("experiment.toml"))?;
    w.write_all(SYNTH_EXPERIMENT.as_bytes())?;
    w.flush()?;
    println!(
        "articles\t{}\nplanted_links\t{}\nvalid_links\t{}",
        bench.corpus.len(),
        bench.planted_total,
        bench.planted_valid
    );
    Ok(())
}

const SYNTH_EXPERIMENT: &str = r#"# Written by `storyline synth`. Build the queries first:
#   storyline build-dataset --corpus corpus.jsonl --queries-out queries.jsonl --qrels-out queries.qrels
system = "rrf"
mode = "ec"

[paths]
corpus = "corpus.jsonl"
queries = "queries.jsonl"
article_vectors = "articles.vec"
query_vectors = "queries.vec"
run_out = "rrf.run"
report_out = "rrf.report.tsv"
"#;

fn serve(a: ServeArgs) -> Result<()> {
    let cfg = match (&a.config, &a.corpus) {
        (Some(path), _) => ServeConfig::from_file(path)?,
        (None, Some(corpus)) => ServeConfig {
            default_system: storyline_core::rankers::System::Bm25,
            ..ServeConfig::minimal(corpus.clone())
        },
        (None, None) => bail!("serve needs --config or --corpus"),
    };
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(serve_async(cfg, a.host, a.port))
}

async fn serve_async(cfg: ServeConfig, host: std::net::IpAddr, port: u16) -> Result<()> {
    let state = AppState::new();
    let listener = tokio::net::TcpListener::bind((host, port))
        .await
        .with_context(|| format!("binding {host}:{port}"))?;
    tracing::info!(addr = %listener.local_addr()?, "listening; snapshot loading");

    spawn_reload(state.clone(), cfg.clone());
    #[cfg(unix)]
    {
        let (state, cfg) = (state.clone(), cfg.clone());
        tokio::spawn(async move {
            let Ok(mut hup) = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::hangup()) else {
                return;
            };
            while hup.recv().await.is_some() {
                tracing::info!("SIGHUP: reloading snapshot");
                spawn_reload(state.clone(), cfg.clone());
            }
        });
    }

    axum::serve(listener, service::router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// Loads a fresh snapshot in the background and swaps it in. A failed
/// reload keeps the current snapshot.
fn spawn_reload(state: Arc<AppState>, cfg: ServeConfig) {
    tokio::task::spawn_blocking(move || match Snapshot::load(&cfg) {
        Ok(s) => {
            let docs = s.corpus.len();
            let version = state.install(s);
            tracing::info!(version, docs, "snapshot installed");
        }
        Err(e) => tracing::error!("snapshot load failed: {e:#}"),
    });
}

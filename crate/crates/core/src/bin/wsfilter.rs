use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use wsfilter::config::PipelineConfig;
use wsfilter::corpus::ingest_corpus;
use wsfilter::interaction::EmbeddingTable;
use wsfilter::interaction_filter::{
    build_candidate_vectors, select_candidates, write_selected, TemplateSet,
};
use wsfilter::pipeline::{run_pipeline, write_artifact, PipelineOptions};
use wsfilter::ranking_filter::{
    apply_ranking_filter, check_index_matches, load_pairs, write_pairs,
};
use wsfilter::trec::{load_scores, rerank, Metric, Qrels, Run};
use wsfilter::triples::{emit_triples, sample_batches, write_batches, write_triples, Selection};
use wsfilter::{interaction_filter, parallel, synthetic, Bm25Params, Index};

#[derive(Parser)]
#[command(
    name = "wsfilter",
    version,
    about = "Filtered weak-supervision triples for neural ranking models"
)]
struct Cli {
    /// Worker threads (defaults to available parallelism)
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a corpus and apply the headline-length constraint
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        /// Write the admitted documents here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inverted index operations
    Index {
        #[command(subcommand)]
        command: IndexCommand,
    },
    /// Ranking and interaction filters
    Filter {
        #[command(subcommand)]
        command: FilterCommand,
    },
    /// Write training triples for the retained pairs
    Emit {
        #[arg(long)]
        pairs: PathBuf,
        /// Interaction-filter output; all pairs are used when omitted
        #[arg(long)]
        selected: Option<PathBuf>,
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
        /// Also write seeded training batches
        #[arg(long)]
        batches_out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a run against qrels, optionally after re-ranking it
    Eval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        /// err@K or ndcg@K
        #[arg(long, default_value = "err@20")]
        metric: Metric,
        /// `query_id doc_id score` rows used to re-rank the run first
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Re-ranking depth; defaults to `rerank_depth` from --config (100)
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        config: ConfigArg,
        /// Write the re-ranked run here
        #[arg(long, requires = "scores")]
        rerank_out: Option<PathBuf>,
    },
    /// Run every stage from one config file
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        skip_interaction_filter: bool,
    },
    /// Generate a synthetic corpus, templates, vectors and config
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 200)]
        docs: usize,
        #[arg(long, default_value_t = 8)]
        templates: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum IndexCommand {
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum FilterCommand {
    Rank {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    Interaction {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        templates: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// Defaults to the corpus named in the config file
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ConfigArg {
    /// Pipeline config file; defaults apply when omitted
    #[arg(long = "config")]
    path: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<PipelineConfig> {
        match &self.path {
            Some(p) => {
                PipelineConfig::load(p).with_context(|| format!("loading config {}", p.display()))
            }
            None => Ok(PipelineConfig::default()),
        }
    }
}

fn save(path: &Path, f: impl FnOnce(&mut dyn std::io::Write) -> std::io::Result<()>) -> Result<()> {
    write_artifact(path, f)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            bail!("--workers must be at least 1");
        }
        parallel::configure_workers(workers)?;
    }

    match cli.command {
        Command::Ingest {
            corpus,
            config,
            out,
        } => {
            let cfg = config.load()?;
            let ingested = ingest_corpus(&corpus, &cfg.filter).context("ingest")?;
            println!(
                "parsed {} admitted {} rejected {} avg_content_length {:.4}",
                ingested.parsed_count(),
                ingested.corpus.len(),
                ingested.rejected_count,
                ingested.stats.avg_content_length
            );
            if let Some(out) = out {
                save(&out, |w| ingested.corpus.write_tsv(w))?;
            }
        }
        Command::Index {
            command:
                IndexCommand::Build {
                    corpus,
                    config,
                    out,
                },
        } => {
            let cfg = config.load()?;
            let ingested = ingest_corpus(&corpus, &cfg.filter).context("ingest")?;
            let index = Index::build(&ingested.corpus, Bm25Params::from(&cfg.filter));
            index.save(&out).context("index")?;
            println!(
                "indexed {} documents {} terms",
                index.doc_count(),
                index.term_count()
            );
        }
        Command::Filter {
            command:
                FilterCommand::Rank {
                    corpus,
                    index,
                    config,
                    out,
                },
        } => {
            let cfg = config.load()?;
            let ingested = ingest_corpus(&corpus, &cfg.filter).context("ingest")?;
            let index = Index::load(&index).context("loading index")?;
            check_index_matches(&ingested.corpus, &index).context("filter rank")?;
            let pairs = apply_ranking_filter(&ingested.corpus, &index, &cfg.filter);
            save(&out, |w| write_pairs(&pairs, w))?;
            println!(
                "retained {} discarded {}",
                pairs.len(),
                ingested.corpus.len() - pairs.len()
            );
        }
        Command::Filter {
            command:
                FilterCommand::Interaction {
                    pairs,
                    templates,
                    embeddings,
                    corpus,
                    config,
                    out,
                },
        } => {
            let cfg = config.load()?;
            let Some(corpus) = corpus.or(cfg.corpus.clone()) else {
                bail!("filter interaction needs --corpus or a `corpus` entry in --config");
            };
            let ingested = ingest_corpus(&corpus, &cfg.filter).context("ingest")?;
            let pairs = load_pairs(&pairs)?;
            let emb = EmbeddingTable::load(&embeddings)?;
            let templates = TemplateSet::load(&templates)?;
            if templates.is_empty() {
                bail!("template file has no rows");
            }
            let candidates = build_candidate_vectors(&pairs, &ingested.corpus, &emb, &cfg.filter)?;
            let selected = select_candidates(&candidates, &templates, &emb, &cfg.filter)?;
            save(&out, |w| write_selected(&selected, w))?;
            println!(
                "retained {} discarded {}",
                selected.len(),
                pairs.len() - selected.len()
            );
        }
        Command::Emit {
            pairs,
            selected,
            corpus,
            config,
            out,
            batches_out,
            seed,
        } => {
            let cfg = config.load()?;
            let ingested = ingest_corpus(&corpus, &cfg.filter).context("ingest")?;
            let pairs = load_pairs(&pairs)?;
            let selected = selected
                .as_deref()
                .map(interaction_filter::load_selected)
                .transpose()?;
            let selection = selected.as_deref().map_or(Selection::All, Selection::Only);
            let triples = emit_triples(&pairs, selection, &ingested.corpus)?;
            save(&out, |w| write_triples(&triples, w))?;
            println!("{} triples", triples.len());
            if let Some(batches_out) = batches_out {
                let s = &cfg.sampling;
                let batches =
                    sample_batches(&triples, s.batch_size, s.iterations, seed.unwrap_or(s.seed))?;
                save(&batches_out, |w| write_batches(batches, w))?;
                println!("{} batches of {}", s.iterations, s.batch_size);
            }
        }
        Command::Eval {
            run,
            qrels,
            metric,
            scores,
            depth,
            config,
            rerank_out,
        } => {
            let depth = depth.unwrap_or(config.load()?.rerank_depth);
            if depth == 0 {
                bail!("--depth must be at least 1");
            }
            let mut run = Run::load(&run)?;
            let qrels = Qrels::load(&qrels)?;
            if let Some(scores) = scores {
                run = rerank(&run, &load_scores(&scores)?, depth);
                if let Some(path) = rerank_out {
                    save(&path, |w| run.write_to(w))?;
                }
            }
            let report = metric.evaluate(&run, &qrels);
            let stdout = std::io::stdout();
            report.write_tsv(stdout.lock())?;
        }
        Command::Pipeline {
            config,
            seed,
            skip_interaction_filter,
        } => {
            let cfg = PipelineConfig::load(&config).with_context(|| {
                format!("stage `validate` failed: loading {}", config.display())
            })?;
            let opts = PipelineOptions {
                skip_interaction_filter,
                seed,
            };
            let summary = run_pipeline(&cfg, &opts)?;
            println!("{summary}");
        }
        Command::Synth {
            out_dir,
            docs,
            templates,
            seed,
        } => {
            synthetic::write_bundle(&out_dir, docs, templates, seed)?;
            println!("wrote synthetic bundle to {}", out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

//! Runs ingest, index, ranking filter, interaction filter and emission in
//! sequence, writing every stage's artifact to the output directory.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bm25::{Bm25Params, Index};
use crate::config::PipelineConfig;
use crate::corpus::ingest_corpus;
use crate::error::Error;
use crate::interaction::EmbeddingTable;
use crate::interaction_filter::{
    build_candidate_vectors, select_candidates, write_selected, TemplateSet,
};
use crate::ranking_filter::{apply_ranking_filter, write_pairs};
use crate::triples::{emit_triples, sample_batches, write_batches, write_triples, Selection};

pub const ADMITTED_FILE: &str = "admitted.tsv";
pub const INDEX_FILE: &str = "index.json";
pub const PAIRS_FILE: &str = "pairs.tsv";
pub const SELECTED_FILE: &str = "selected.txt";
pub const TRIPLES_FILE: &str = "triples.tsv";
pub const BATCHES_FILE: &str = "batches.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Validate,
    Ingest,
    Index,
    RankingFilter,
    InteractionFilter,
    Emit,
    Sample,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Validate => "validate",
            Stage::Ingest => "ingest",
            Stage::Index => "index",
            Stage::RankingFilter => "filter rank",
            Stage::InteractionFilter => "filter interaction",
            Stage::Emit => "emit",
            Stage::Sample => "sample",
        })
    }
}

#[derive(Debug, Error)]
#[error("stage `{stage}` failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> AtStage<T> for Result<T, Error> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub skip_interaction_filter: bool,
    /// Overrides `sampling.seed` from the config file.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PipelineSummary {
    pub parsed: usize,
    pub admitted: usize,
    pub rejected: usize,
    pub indexed_terms: usize,
    pub retained_pairs: usize,
    pub discarded_queries: usize,
    /// `None` when the interaction filter was skipped.
    pub selected: Option<usize>,
    pub triples: usize,
    pub batches: usize,
}

impl fmt::Display for PipelineSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "ingest              parsed {} admitted {} rejected {}",
            self.parsed, self.admitted, self.rejected
        )?;
        writeln!(
            f,
            "index               {} documents {} terms",
            self.admitted, self.indexed_terms
        )?;
        writeln!(
            f,
            "filter rank         retained {} discarded {}",
            self.retained_pairs, self.discarded_queries
        )?;
        match self.selected {
            Some(n) => writeln!(
                f,
                "filter interaction  retained {} discarded {}",
                n,
                self.retained_pairs - n
            )?,
            None => writeln!(f, "filter interaction  skipped")?,
        }
        writeln!(f, "emit                {} triples", self.triples)?;
        write!(f, "sample              {} batches", self.batches)
    }
}

/// Buffers `f`'s output and writes it to `path` in one go.
pub fn write_artifact(
    path: &Path,
    f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    f(&mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn run_pipeline(
    cfg: &PipelineConfig,
    opts: &PipelineOptions,
) -> Result<PipelineSummary, PipelineError> {
    let with_interaction = !opts.skip_interaction_filter;
    cfg.validate_for_run(with_interaction).at(Stage::Validate)?;
    let filter = &cfg.filter;
    let out_dir: PathBuf = cfg.output_dir.clone().expect("validated");
    fs::create_dir_all(&out_dir)
        .map_err(|e| Error::io(&out_dir, e))
        .at(Stage::Validate)?;
    let mut summary = PipelineSummary::default();

    let ingested =
        ingest_corpus(cfg.corpus.as_deref().expect("validated"), filter).at(Stage::Ingest)?;
    let corpus = &ingested.corpus;
    summary.parsed = ingested.parsed_count();
    summary.admitted = corpus.len();
    summary.rejected = ingested.rejected_count;
    write_artifact(&out_dir.join(ADMITTED_FILE), |w| corpus.write_tsv(w)).at(Stage::Ingest)?;

    let index = Index::build(corpus, Bm25Params::from(filter));
    summary.indexed_terms = index.term_count();
    index.save(&out_dir.join(INDEX_FILE)).at(Stage::Index)?;

    let pairs = apply_ranking_filter(corpus, &index, filter);
    summary.retained_pairs = pairs.len();
    summary.discarded_queries = corpus.len() - pairs.len();
    write_artifact(&out_dir.join(PAIRS_FILE), |w| write_pairs(&pairs, w))
        .at(Stage::RankingFilter)?;

    let selected = if with_interaction {
        let stage = Stage::InteractionFilter;
        let emb = EmbeddingTable::load(cfg.embeddings.as_deref().expect("validated")).at(stage)?;
        let templates =
            TemplateSet::load(cfg.templates.as_deref().expect("validated")).at(stage)?;
        if templates.is_empty() {
            return Err(Error::Invalid("template file has no rows".into())).at(stage);
        }
        let candidates = build_candidate_vectors(&pairs, corpus, &emb, filter).at(stage)?;
        let selected = select_candidates(&candidates, &templates, &emb, filter).at(stage)?;
        write_artifact(&out_dir.join(SELECTED_FILE), |w| {
            write_selected(&selected, w)
        })
        .at(stage)?;
        summary.selected = Some(selected.len());
        Some(selected)
    } else {
        remove_stale(&out_dir.join(SELECTED_FILE)).at(Stage::InteractionFilter)?;
        None
    };

    let selection = selected.as_deref().map_or(Selection::All, Selection::Only);
    let triples = emit_triples(&pairs, selection, corpus).at(Stage::Emit)?;
    summary.triples = triples.len();
    write_artifact(&out_dir.join(TRIPLES_FILE), |w| write_triples(&triples, w)).at(Stage::Emit)?;

    let sampling = &cfg.sampling;
    if !triples.is_empty() && sampling.iterations > 0 {
        let seed = opts.seed.unwrap_or(sampling.seed);
        let batches = sample_batches(&triples, sampling.batch_size, sampling.iterations, seed)
            .at(Stage::Sample)?;
        write_artifact(&out_dir.join(BATCHES_FILE), |w| write_batches(batches, w))
            .at(Stage::Sample)?;
        summary.batches = sampling.iterations;
    } else {
        remove_stale(&out_dir.join(BATCHES_FILE)).at(Stage::Sample)?;
    }
    Ok(summary)
}

// Left over from an earlier run with different options.
fn remove_stale(path: &Path) -> Result<(), Error> {
    if path.exists() {
        fs::remove_file(path).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

//! Keeps pseudo-queries whose own article BM25 ranks within `n_rank` and
//! takes the top `n_neg` other hits as hard negatives.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::bm25::Index;
use crate::config::FilterConfig;
use crate::corpus::{Corpus, TokenizedDocument};
use crate::error::{Error, Result};
use crate::parallel;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedPair {
    pub query_doc_id: String,
    /// 1-based rank of the article's own content for its headline.
    pub positive_rank: usize,
    pub negative_ids: Vec<String>,
}

fn filter_one(doc: &TokenizedDocument, index: &Index, cfg: &FilterConfig) -> Option<RankedPair> {
    let own = doc.doc.doc_id.as_str();
    let hits = index.retrieve(&doc.headline, cfg.retrieval_depth());
    let positive = hits.iter().find(|h| h.doc_id == own)?;
    if positive.rank > cfg.n_rank {
        return None;
    }
    let negative_ids = hits
        .iter()
        .filter(|h| h.doc_id != own)
        .take(cfg.n_neg)
        .map(|h| h.doc_id.clone())
        .collect();
    Some(RankedPair {
        query_doc_id: own.to_string(),
        positive_rank: positive.rank,
        negative_ids,
    })
}

/// Runs the filter for every admitted document. Output is sorted by
/// `query_doc_id` whatever the worker scheduling.
pub fn apply_ranking_filter(corpus: &Corpus, index: &Index, cfg: &FilterConfig) -> Vec<RankedPair> {
    let mut pairs: Vec<RankedPair> =
        parallel::map(corpus.documents(), |doc| filter_one(doc, index, cfg))
            .into_iter()
            .flatten()
            .collect();
    pairs.sort_by(|a, b| a.query_doc_id.cmp(&b.query_doc_id));
    pairs
}

/// Fails unless the index was built over exactly this corpus.
pub fn check_index_matches(corpus: &Corpus, index: &Index) -> Result<()> {
    let mut ids: Vec<&str> = corpus.iter().map(|d| d.doc_id.as_str()).collect();
    ids.sort_unstable();
    let same = ids.len() == index.doc_count()
        && ids
            .iter()
            .zip(index.doc_ids())
            .all(|(a, b)| *a == b.as_str());
    if same {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "index covers {} documents but the admitted corpus has {}; rebuild the index with the same config",
            index.doc_count(),
            ids.len()
        )))
    }
}

/// `query_doc_id \t positive_rank \t neg1,neg2,...`
pub fn write_pairs<W: Write>(pairs: &[RankedPair], mut out: W) -> std::io::Result<()> {
    for p in pairs {
        writeln!(
            out,
            "{}\t{}\t{}",
            p.query_doc_id,
            p.positive_rank,
            p.negative_ids.join(",")
        )?;
    }
    Ok(())
}

pub fn read_pairs<R: BufRead>(reader: R, label: &str) -> Result<Vec<RankedPair>> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::parse(label, line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, rank, negatives] = fields.as_slice() else {
            return Err(Error::parse(
                label,
                line_no,
                "expected 3 tab-separated fields",
            ));
        };
        let positive_rank = rank
            .parse::<usize>()
            .ok()
            .filter(|&r| r >= 1)
            .ok_or_else(|| Error::parse(label, line_no, format!("invalid rank `{rank}`")))?;
        let negative_ids: Vec<String> = if negatives.is_empty() {
            Vec::new()
        } else {
            negatives.split(',').map(str::to_string).collect()
        };
        if id.is_empty() || negative_ids.iter().any(|n| n.is_empty() || n == id) {
            return Err(Error::parse(label, line_no, "empty or self-referencing id"));
        }
        pairs.push(RankedPair {
            query_doc_id: id.to_string(),
            positive_rank,
            negative_ids,
        });
    }
    Ok(pairs)
}

pub fn load_pairs(path: &Path) -> Result<Vec<RankedPair>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_pairs(BufReader::new(file), &path.display().to_string())
}

//! Browser bindings for three small playgrounds: aMSE rotation alignment,
//! mock interaction embeddings, and BM25 search over a pasted corpus.
//!
//! Every operation returns a JSON string. The `*_json` functions are plain
//! Rust so they can be tested natively; the `#[wasm_bindgen]` wrappers only
//! convert errors.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use wsfilter::corpus::{tokenize, Corpus, Document, Field};
use wsfilter::interaction::{
    amse, rotation_mses, shift, similarity_matrix, EmbeddingTable, InteractionVector,
};
use wsfilter::{Bm25Params, Index};

fn parse_vector(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| format!("`{s}` is not a number"))
        })
        .collect()
}

fn to_json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Rotation {
    shift: usize,
    rotated: Vec<f64>,
    mse: f64,
}

#[derive(Serialize)]
struct AlignmentReport {
    a: Vec<f64>,
    b: Vec<f64>,
    rotations: Vec<Rotation>,
    amse: f64,
    best_shift: usize,
}

/// Every rotation of `b` with its MSE against `a`, plus the minimum.
pub fn align_json(a: &str, b: &str) -> Result<String, String> {
    let a = parse_vector(a)?;
    let b = parse_vector(b)?;
    let mses = rotation_mses(&a, &b).map_err(|e| e.to_string())?;
    let rotations: Vec<Rotation> = mses
        .iter()
        .enumerate()
        .map(|(s, &mse)| {
            Ok(Rotation {
                shift: s,
                rotated: shift(&b, s).map_err(|e| e.to_string())?,
                mse,
            })
        })
        .collect::<Result<_, String>>()?;
    let best_shift = mses
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map_or(0, |(s, _)| s);
    to_json(&AlignmentReport {
        amse: amse(&a, &b).map_err(|e| e.to_string())?,
        a,
        b,
        rotations,
        best_shift,
    })
}

#[derive(Serialize)]
struct InteractionReport {
    query_tokens: Vec<String>,
    doc_tokens: Vec<String>,
    out_of_vocabulary: Vec<String>,
    matrix: Vec<Vec<f64>>,
    ivec: Vec<f64>,
    active_length: usize,
}

/// Similarity matrix and padded row-max vector for a query/document pair,
/// using vectors given in the `vocab dim` text format.
pub fn interaction_json(
    query: &str,
    doc: &str,
    embeddings: &str,
    pad: usize,
) -> Result<String, String> {
    if pad == 0 {
        return Err("pad length must be at least 1".into());
    }
    let emb = EmbeddingTable::read_from(embeddings.as_bytes(), "embeddings")
        .map_err(|e| e.to_string())?;
    let q = tokenize(query, Field::Headline);
    let d = tokenize(doc, Field::Content);
    let sim = similarity_matrix(&q, &d, &emb);
    let ivec = InteractionVector::from_matrix(&sim, pad);
    let mut out_of_vocabulary: Vec<String> = q
        .iter()
        .chain(d.iter())
        .filter(|t| emb.get(t).is_none())
        .map(String::from)
        .collect();
    out_of_vocabulary.sort();
    out_of_vocabulary.dedup();
    to_json(&InteractionReport {
        matrix: (0..sim.rows()).map(|r| sim.row(r).to_vec()).collect(),
        ivec: ivec.values().to_vec(),
        active_length: ivec.active_length(),
        query_tokens: q.tokens,
        doc_tokens: d.tokens,
        out_of_vocabulary,
    })
}

#[derive(Serialize)]
struct Hit {
    rank: usize,
    doc_id: String,
    score: f64,
    headline: String,
}

#[derive(Serialize)]
struct SearchReport {
    documents: usize,
    terms: usize,
    avg_doc_len: f64,
    query_tokens: Vec<String>,
    hits: Vec<Hit>,
}

fn parse_corpus(tsv: &str) -> Result<Corpus, String> {
    let docs = tsv
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let mut cols = line.splitn(3, '\t');
            match (cols.next(), cols.next(), cols.next()) {
                (Some(id), Some(h), Some(c)) if !id.trim().is_empty() => Ok(Document {
                    doc_id: id.trim().to_string(),
                    headline: h.trim().to_string(),
                    content: c.trim().to_string(),
                }),
                _ => Err(format!(
                    "line {}: expected `doc_id<TAB>headline<TAB>content`",
                    i + 1
                )),
            }
        })
        .collect::<Result<Vec<_>, String>>()?;
    if docs.is_empty() {
        return Err("the corpus is empty".into());
    }
    Corpus::from_documents(docs).map_err(|e| e.to_string())
}

/// Top-`k` BM25 hits over the content field of a tab-separated corpus.
pub fn search_json(
    corpus_tsv: &str,
    query: &str,
    k: usize,
    k1: f64,
    b: f64,
) -> Result<String, String> {
    if k1.is_nan() || k1 <= 0.0 || !(0.0..=1.0).contains(&b) {
        return Err("k1 must be positive and b must lie in [0, 1]".into());
    }
    let corpus = parse_corpus(corpus_tsv)?;
    let index = Index::build(&corpus, Bm25Params { k1, b });
    let q = tokenize(query, Field::Headline);
    let hits = index
        .retrieve(&q, k)
        .into_iter()
        .map(|h| Hit {
            headline: corpus
                .get(&h.doc_id)
                .map(|d| d.doc.headline.clone())
                .unwrap_or_default(),
            rank: h.rank,
            doc_id: h.doc_id,
            score: h.score,
        })
        .collect();
    to_json(&SearchReport {
        documents: index.doc_count(),
        terms: index.term_count(),
        avg_doc_len: index.avg_doc_len(),
        query_tokens: q.tokens,
        hits,
    })
}

#[wasm_bindgen]
pub fn align(a: &str, b: &str) -> Result<String, JsError> {
    align_json(a, b).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn interaction(
    query: &str,
    doc: &str,
    embeddings: &str,
    pad: usize,
) -> Result<String, JsError> {
    interaction_json(query, doc, embeddings, pad).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn search(corpus_tsv: &str, query: &str, k: usize, k1: f64, b: f64) -> Result<String, JsError> {
    search_json(corpus_tsv, query, k, k1, b).map_err(|e| JsError::new(&e))
}

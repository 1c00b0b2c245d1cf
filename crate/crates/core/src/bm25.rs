//! Inverted index over article contents with BM25 scoring.
//!
//! Documents are numbered by ascending `doc_id`, so posting lists sorted by
//! ordinal are also sorted by id and the `(score desc, doc_id asc)` tie-break
//! reduces to comparing ordinals.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::FilterConfig;
use crate::corpus::{Corpus, TokenizedText};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl From<&FilterConfig> for Bm25Params {
    fn from(cfg: &FilterConfig) -> Self {
        Bm25Params {
            k1: cfg.k1,
            b: cfg.b,
        }
    }
}

/// `ln((N - df + 0.5) / (df + 0.5) + 1)`; always positive for `df <= N`.
pub fn idf(doc_count: usize, df: usize) -> f64 {
    let n = doc_count as f64;
    let df = df as f64;
    ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
}

/// Saturated, length-normalized term frequency times IDF.
pub fn term_weight(idf: f64, tf: u32, doc_len: u32, avg_doc_len: f64, params: Bm25Params) -> f64 {
    let tf = f64::from(tf);
    let norm = 1.0 - params.b + params.b * f64::from(doc_len) / avg_doc_len;
    idf * (tf * (params.k1 + 1.0)) / (tf + params.k1 * norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Posting {
    doc: u32,
    tf: u32,
}

/// Materialized view of one term's postings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostingList {
    pub term: String,
    pub entries: Vec<(String, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredHit {
    pub doc_id: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Index {
    params: Bm25Params,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    total_tokens: u64,
    postings: BTreeMap<String, Vec<Posting>>,
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    score: f64,
    doc: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // Greater means better: higher score, then lower ordinal.
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.doc.cmp(&self.doc))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Index {
    pub fn build(corpus: &Corpus, params: Bm25Params) -> Self {
        let mut docs: Vec<_> = corpus.documents().iter().collect();
        docs.sort_by(|a, b| a.doc.doc_id.cmp(&b.doc.doc_id));

        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(docs.len());
        let mut doc_lengths = Vec::with_capacity(docs.len());
        let mut total_tokens = 0u64;
        for (ordinal, doc) in docs.iter().enumerate() {
            let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
            for token in doc.content.iter() {
                *counts.entry(token).or_default() += 1;
            }
            for (term, tf) in counts {
                postings.entry(term.to_string()).or_default().push(Posting {
                    doc: ordinal as u32,
                    tf,
                });
            }
            doc_ids.push(doc.doc.doc_id.clone());
            doc_lengths.push(doc.content.len() as u32);
            total_tokens += doc.content.len() as u64;
        }
        Index {
            params,
            doc_ids,
            doc_lengths,
            total_tokens,
            postings,
        }
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        if self.doc_ids.is_empty() {
            0.0
        } else {
            self.total_tokens as f64 / self.doc_ids.len() as f64
        }
    }

    /// Document ids in ascending order.
    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn posting_list(&self, term: &str) -> Option<PostingList> {
        self.postings.get(term).map(|entries| PostingList {
            term: term.to_string(),
            entries: entries
                .iter()
                .map(|p| (self.doc_ids[p.doc as usize].clone(), p.tf))
                .collect(),
        })
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    fn ordinal(&self, doc_id: &str) -> Option<u32> {
        self.doc_ids
            .binary_search_by(|id| id.as_str().cmp(doc_id))
            .ok()
            .map(|i| i as u32)
    }

    /// Query terms with postings, deduplicated in first-occurrence order.
    fn query_terms<'a>(
        &'a self,
        query: &'a TokenizedText,
    ) -> impl Iterator<Item = (&'a str, &'a [Posting])> {
        let mut seen = HashSet::new();
        query
            .iter()
            .filter(move |t| seen.insert(*t))
            .filter_map(|t| self.postings.get(t).map(|p| (t, p.as_slice())))
    }

    pub fn bm25_score(&self, query: &TokenizedText, doc_id: &str) -> Result<f64> {
        let doc = self
            .ordinal(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
        let n = self.doc_count();
        let avgdl = self.avg_doc_len();
        let dl = self.doc_lengths[doc as usize];
        let mut score = 0.0;
        for (_, postings) in self.query_terms(query) {
            if let Ok(i) = postings.binary_search_by_key(&doc, |p| p.doc) {
                let w = idf(n, postings.len());
                score += term_weight(w, postings[i].tf, dl, avgdl, self.params);
            }
        }
        Ok(score)
    }

    /// Top `k` matching documents, ordered by score descending then id ascending.
    pub fn retrieve(&self, query: &TokenizedText, k: usize) -> Vec<ScoredHit> {
        if k == 0 || self.doc_ids.is_empty() {
            return Vec::new();
        }
        let n = self.doc_count();
        let avgdl = self.avg_doc_len();
        let mut acc = vec![0.0f64; n];
        let mut touched = Vec::new();
        for (_, postings) in self.query_terms(query) {
            let w = idf(n, postings.len());
            for p in postings {
                let slot = &mut acc[p.doc as usize];
                if *slot == 0.0 {
                    touched.push(p.doc);
                }
                *slot += term_weight(
                    w,
                    p.tf,
                    self.doc_lengths[p.doc as usize],
                    avgdl,
                    self.params,
                );
            }
        }

        let mut heap: BinaryHeap<Reverse<Candidate>> = BinaryHeap::with_capacity(k + 1);
        for doc in touched {
            let cand = Candidate {
                score: acc[doc as usize],
                doc,
            };
            if heap.len() < k {
                heap.push(Reverse(cand));
            } else if let Some(Reverse(worst)) = heap.peek() {
                if cand > *worst {
                    heap.pop();
                    heap.push(Reverse(cand));
                }
            }
        }
        let mut best: Vec<Candidate> = heap.into_iter().map(|Reverse(c)| c).collect();
        best.sort_by(|a, b| b.cmp(a));
        best.into_iter()
            .enumerate()
            .map(|(i, c)| ScoredHit {
                doc_id: self.doc_ids[c.doc as usize].clone(),
                score: c.score,
                rank: i + 1,
            })
            .collect()
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let index: Index = serde_json::from_reader(input)?;
        index.check()?;
        Ok(index)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out)?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Invalid(format!("corrupt index: {msg}")));
        if self.doc_ids.len() != self.doc_lengths.len() {
            return bad("doc table length mismatch".into());
        }
        if self.doc_ids.windows(2).any(|w| w[0] >= w[1]) {
            return bad("doc ids not strictly ascending".into());
        }
        if self.doc_lengths.iter().map(|&l| u64::from(l)).sum::<u64>() != self.total_tokens {
            return bad("token total does not match doc lengths".into());
        }
        let n = self.doc_ids.len() as u32;
        for (term, postings) in &self.postings {
            let sorted = postings.windows(2).all(|w| w[0].doc < w[1].doc);
            if !sorted || postings.iter().any(|p| p.tf == 0 || p.doc >= n) || postings.is_empty() {
                return bad(format!("posting list for `{term}`"));
            }
        }
        Ok(())
    }
}

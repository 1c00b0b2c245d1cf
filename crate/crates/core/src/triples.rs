//! Pairwise training triples and seeded batch sampling.
//!
//! Batches are drawn with replacement from a ChaCha8 stream
//! (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`). Each index is drawn
//! with rand 0.8's `gen_range(0..len as u64)`, so the sequence depends only
//! on the seed and the number of triples, not on the platform word size.

use std::collections::HashSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::ranking_filter::RankedPair;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingTriple {
    pub query_text: String,
    pub positive_id: String,
    pub negative_id: String,
}

/// Which ranking-filter survivors go on to emission.
#[derive(Debug, Clone, Copy)]
pub enum Selection<'a> {
    /// No interaction filter was applied.
    All,
    Only(&'a [String]),
}

/// One triple per negative, ordered by `query_doc_id` then negative order.
pub fn emit_triples(
    pairs: &[RankedPair],
    selected: Selection<'_>,
    corpus: &Corpus,
) -> Result<Vec<TrainingTriple>> {
    let keep: Option<HashSet<&str>> = match selected {
        Selection::All => None,
        Selection::Only(ids) => Some(ids.iter().map(String::as_str).collect()),
    };
    let mut retained: Vec<&RankedPair> = pairs
        .iter()
        .filter(|p| {
            keep.as_ref()
                .is_none_or(|k| k.contains(p.query_doc_id.as_str()))
        })
        .collect();
    retained.sort_by(|a, b| a.query_doc_id.cmp(&b.query_doc_id));

    let mut triples = Vec::new();
    for pair in retained {
        let doc = corpus
            .get(&pair.query_doc_id)
            .ok_or_else(|| Error::UnknownDocument(pair.query_doc_id.clone()))?;
        for negative in &pair.negative_ids {
            if corpus.get(negative).is_none() {
                return Err(Error::UnknownDocument(negative.clone()));
            }
            triples.push(TrainingTriple {
                query_text: doc.doc.headline.clone(),
                positive_id: pair.query_doc_id.clone(),
                negative_id: negative.clone(),
            });
        }
    }
    Ok(triples)
}

/// `query_text \t positive_id \t negative_id`
pub fn write_triples<W: Write>(triples: &[TrainingTriple], mut out: W) -> std::io::Result<()> {
    for t in triples {
        writeln!(
            out,
            "{}\t{}\t{}",
            t.query_text, t.positive_id, t.negative_id
        )?;
    }
    Ok(())
}

/// Lazily yields `iterations` batches of `batch_size` triples.
pub struct BatchSampler<'a> {
    triples: &'a [TrainingTriple],
    batch_size: usize,
    remaining: usize,
    rng: ChaCha8Rng,
}

impl<'a> Iterator for BatchSampler<'a> {
    type Item = Vec<&'a TrainingTriple>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let len = self.triples.len() as u64;
        Some(
            (0..self.batch_size)
                .map(|_| &self.triples[self.rng.gen_range(0..len) as usize])
                .collect(),
        )
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

pub fn sample_batches(
    triples: &[TrainingTriple],
    batch_size: usize,
    iterations: usize,
    seed: u64,
) -> Result<BatchSampler<'_>> {
    if triples.is_empty() {
        return Err(Error::Invalid(
            "cannot sample batches from an empty triple list".into(),
        ));
    }
    if batch_size == 0 {
        return Err(Error::Invalid("batch_size must be at least 1".into()));
    }
    Ok(BatchSampler {
        triples,
        batch_size,
        remaining: iterations,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

/// `batch_index \t query_text \t positive_id \t negative_id`, batches numbered from 0.
pub fn write_batches<'a, W: Write>(
    batches: impl IntoIterator<Item = Vec<&'a TrainingTriple>>,
    mut out: W,
) -> std::io::Result<()> {
    for (i, batch) in batches.into_iter().enumerate() {
        for t in batch {
            writeln!(
                out,
                "{i}\t{}\t{}\t{}",
                t.query_text, t.positive_id, t.negative_id
            )?;
        }
    }
    Ok(())
}

//! Seeded synthetic news corpus, template pairs and word vectors.
//!
//! Articles belong to latent topics. Most headlines are drawn from their own
//! content; some are "topical" (topic words the article may not contain) and
//! some are "poetic" (unrelated words), so the ranking filter has something
//! to discard. Headline lengths straddle the default admission bounds.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Document;
use crate::error::{Error, Result};

const SYLLABLES: &[&str] = &[
    "ba", "ko", "ri", "mu", "te", "sa", "lo", "vi", "ne", "da", "pu", "gra", "th", "el", "on",
    "ar", "is", "um", "qua", "zo", "fe", "ly", "dro", "ex",
];

pub const EMBEDDING_DIM: usize = 16;

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    topics: Vec<Vec<String>>,
    general: Vec<String>,
    seed: u64,
}

impl SyntheticWorld {
    pub fn new(seed: u64) -> Self {
        Self::with_shape(seed, 12, 25, 150)
    }

    pub fn with_shape(
        seed: u64,
        topic_count: usize,
        words_per_topic: usize,
        general_words: usize,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = BTreeSet::new();
        let mut word = |rng: &mut ChaCha8Rng| loop {
            let n = rng.gen_range(2..=3);
            let w: String = (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
            if seen.insert(w.clone()) {
                return w;
            }
        };
        let topics = (0..topic_count)
            .map(|_| (0..words_per_topic).map(|_| word(&mut rng)).collect())
            .collect();
        let general = (0..general_words).map(|_| word(&mut rng)).collect();
        SyntheticWorld {
            topics,
            general,
            seed,
        }
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.topics
            .iter()
            .flatten()
            .chain(&self.general)
            .map(String::as_str)
    }

    fn body(
        &self,
        rng: &mut ChaCha8Rng,
        topic: usize,
        len: usize,
        topical_share: f64,
    ) -> Vec<String> {
        (0..len)
            .map(|_| {
                let pool = if rng.gen_bool(topical_share) {
                    &self.topics[topic]
                } else {
                    &self.general
                };
                pool.choose(rng).unwrap().clone()
            })
            .collect()
    }

    /// `n_docs` articles with ids `nyt00000`, `nyt00001`, ...
    pub fn corpus(&self, n_docs: usize) -> Vec<Document> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(1));
        (0..n_docs)
            .map(|i| {
                let topic = rng.gen_range(0..self.topics.len());
                let content_len = rng.gen_range(40..=120);
                let content = self.body(&mut rng, topic, content_len, 0.55);
                let headline_len = rng.gen_range(4..=19);
                let style = rng.gen_range(0..100);
                let headline: Vec<String> = (0..headline_len)
                    .map(|_| {
                        if style < 75 {
                            content.choose(&mut rng).unwrap().clone()
                        } else if style < 90 {
                            self.topics[topic].choose(&mut rng).unwrap().clone()
                        } else {
                            self.general.choose(&mut rng).unwrap().clone()
                        }
                    })
                    .collect();
                Document {
                    doc_id: format!("nyt{i:05}"),
                    headline: headline_text(&headline, &mut rng),
                    content: content_text(&content, &mut rng),
                }
            })
            .collect()
    }

    /// Short topical queries with topical documents, ids `t01`, `t02`, ...
    pub fn templates(&self, count: usize) -> Vec<Document> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(2));
        (0..count)
            .map(|i| {
                let topic = i % self.topics.len();
                let q_len = rng.gen_range(3..=6);
                let query: Vec<String> = self.topics[topic]
                    .choose_multiple(&mut rng, q_len)
                    .cloned()
                    .collect();
                let doc = self.body(&mut rng, topic, 60, 0.5);
                Document {
                    doc_id: format!("t{:02}", i + 1),
                    headline: query.join(" "),
                    content: content_text(&doc, &mut rng),
                }
            })
            .collect()
    }

    /// Topic words cluster around a per-topic center; general words are noise.
    pub fn embeddings(&self) -> Vec<(String, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(3));
        let noise = |rng: &mut ChaCha8Rng, scale: f64| -> Vec<f64> {
            (0..EMBEDDING_DIM)
                .map(|_| rng.gen_range(-1.0..1.0) * scale)
                .collect()
        };
        let mut rows = Vec::new();
        for words in &self.topics {
            let center = noise(&mut rng, 1.0);
            for w in words {
                let v = noise(&mut rng, 0.45)
                    .into_iter()
                    .zip(&center)
                    .map(|(n, c)| round6(c + n))
                    .collect();
                rows.push((w.clone(), v));
            }
        }
        for w in &self.general {
            let v = noise(&mut rng, 1.0).into_iter().map(round6).collect();
            rows.push((w.clone(), v));
        }
        rows
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn capitalize(w: &str) -> String {
    let mut chars = w.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn headline_text(words: &[String], rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            out.push_str(if rng.gen_bool(0.1) { ": " } else { " " });
        }
        out.push_str(&capitalize(w));
    }
    out
}

fn content_text(words: &[String], rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    let mut sentence_start = true;
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if sentence_start {
            out.push_str(&capitalize(w));
        } else {
            out.push_str(w);
        }
        sentence_start = rng.gen_bool(0.08) || i + 1 == words.len();
        if sentence_start {
            out.push('.');
        } else if rng.gen_bool(0.04) {
            out.push(',');
        }
    }
    out
}

pub fn write_corpus_tsv<W: Write>(docs: &[Document], mut out: W) -> std::io::Result<()> {
    for d in docs {
        writeln!(out, "{}\t{}\t{}", d.doc_id, d.headline, d.content)?;
    }
    Ok(())
}

pub fn write_embeddings<W: Write>(rows: &[(String, Vec<f64>)], mut out: W) -> std::io::Result<()> {
    let dim = rows.first().map_or(0, |(_, v)| v.len());
    writeln!(out, "{} {dim}", rows.len())?;
    for (w, v) in rows {
        write!(out, "{w}")?;
        for x in v {
            write!(out, " {x:.6}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes `corpus.tsv`, `templates.tsv`, `embeddings.txt` and a
/// `pipeline.toml` that points at them into `dir`.
pub fn write_bundle(dir: &Path, n_docs: usize, n_templates: usize, seed: u64) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let world = SyntheticWorld::new(seed);
    let write = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| -> Result<()> {
        let path = dir.join(name);
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| Error::io(&path, e))?;
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))
    };
    write("corpus.tsv", &|w| {
        write_corpus_tsv(&world.corpus(n_docs), w)
    })?;
    write("templates.tsv", &|w| {
        write_corpus_tsv(&world.templates(n_templates), w)
    })?;
    write("embeddings.txt", &|w| {
        write_embeddings(&world.embeddings(), w)
    })?;
    write("pipeline.toml", &|w| {
        writeln!(w, "corpus = \"corpus.tsv\"")?;
        writeln!(w, "embeddings = \"embeddings.txt\"")?;
        writeln!(w, "templates = \"templates.tsv\"")?;
        writeln!(w, "output_dir = \"out\"")?;
        writeln!(w)?;
        writeln!(w, "[filter]")?;
        writeln!(w, "n_sim = 20")?;
        writeln!(w)?;
        writeln!(w, "[sampling]")?;
        writeln!(w, "seed = {seed}")
    })
}

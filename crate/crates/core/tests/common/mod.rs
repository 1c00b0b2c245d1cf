//! Brute-force reference implementations and random fixtures shared by the
//! integration tests. Nothing here calls the code paths it is used to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;

use wsfilter::corpus::{tokenize, Document, Field};

pub const K1: f64 = 1.2;
pub const B: f64 = 0.75;

pub fn doc(
    id: impl Into<String>,
    headline: impl Into<String>,
    content: impl Into<String>,
) -> Document {
    Document {
        doc_id: id.into(),
        headline: headline.into(),
        content: content.into(),
    }
}

pub fn toks(text: &str) -> Vec<String> {
    tokenize(text, Field::Content).tokens
}

/// Random corpus over a vocabulary of `vocab` words `v0..`.
pub fn random_corpus(rng: &mut impl Rng, n_docs: usize, vocab: usize) -> Vec<Document> {
    (0..n_docs)
        .map(|i| {
            let len = rng.gen_range(1..=30);
            let content: Vec<String> = (0..len)
                .map(|_| format!("v{}", rng.gen_range(0..vocab)))
                .collect();
            let hl = rng.gen_range(1..=6);
            let headline: Vec<String> = (0..hl)
                .map(|_| format!("v{}", rng.gen_range(0..vocab)))
                .collect();
            doc(format!("d{i:03}"), headline.join(" "), content.join(" "))
        })
        .collect()
}

pub fn random_query(rng: &mut impl Rng, vocab: usize) -> String {
    let len = rng.gen_range(1..=5);
    (0..len)
        .map(|_| format!("v{}", rng.gen_range(0..vocab + 5)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Exhaustive BM25: scores every document from raw token counts.
pub struct BruteBm25 {
    docs: Vec<(String, Vec<String>)>,
    avgdl: f64,
}

impl BruteBm25 {
    pub fn new(docs: &[Document]) -> Self {
        let docs: Vec<(String, Vec<String>)> = docs
            .iter()
            .map(|d| (d.doc_id.clone(), toks(&d.content)))
            .collect();
        let total: usize = docs.iter().map(|(_, t)| t.len()).sum();
        let avgdl = if docs.is_empty() {
            0.0
        } else {
            total as f64 / docs.len() as f64
        };
        BruteBm25 { docs, avgdl }
    }

    pub fn df(&self, term: &str) -> usize {
        self.docs
            .iter()
            .filter(|(_, t)| t.iter().any(|x| x == term))
            .count()
    }

    pub fn score(&self, query: &str, doc_id: &str) -> f64 {
        let (_, tokens) = self
            .docs
            .iter()
            .find(|(id, _)| id == doc_id)
            .expect("known doc");
        let n = self.docs.len() as f64;
        let dl = tokens.len() as f64;
        let mut distinct: Vec<String> = Vec::new();
        for t in toks(query) {
            if !distinct.contains(&t) {
                distinct.push(t);
            }
        }
        let mut score = 0.0;
        for term in distinct {
            let tf = tokens.iter().filter(|x| **x == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = self.df(&term) as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            score += idf * (tf * (K1 + 1.0)) / (tf + K1 * (1.0 - B + B * dl / self.avgdl));
        }
        score
    }

    /// `(doc_id, score)` for every positive-scoring document, best first.
    pub fn ranking(&self, query: &str) -> Vec<(String, f64)> {
        let mut all: Vec<(String, f64)> = self
            .docs
            .iter()
            .map(|(id, _)| (id.clone(), self.score(query, id)))
            .filter(|(_, s)| *s > 0.0)
            .collect();
        all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        all
    }
}

/// Expected ranking-filter output: `id -> (positive_rank, negatives)`.
pub fn brute_ranking_filter(
    docs: &[Document],
    n_rank: usize,
    n_neg: usize,
) -> BTreeMap<String, (usize, Vec<String>)> {
    let bm25 = BruteBm25::new(docs);
    let mut out = BTreeMap::new();
    for d in docs {
        let ranking = bm25.ranking(&d.headline);
        let Some(pos) = ranking.iter().position(|(id, _)| *id == d.doc_id) else {
            continue;
        };
        if pos + 1 > n_rank {
            continue;
        }
        let negatives: Vec<String> = ranking
            .iter()
            .map(|(id, _)| id.clone())
            .filter(|id| *id != d.doc_id)
            .take(n_neg)
            .collect();
        out.insert(d.doc_id.clone(), (pos + 1, negatives));
    }
    out
}

pub fn brute_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// Row-max interaction vector from raw embedding rows, zero-padded to `pad`.
pub fn brute_ivec(
    q: &[String],
    d: &[String],
    emb: &HashMap<String, Vec<f64>>,
    pad: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; pad];
    for (i, qt) in q.iter().take(pad).enumerate() {
        let mut best = f64::NEG_INFINITY;
        for dt in d {
            let s = if qt == dt {
                1.0
            } else {
                match (emb.get(qt), emb.get(dt)) {
                    (Some(a), Some(b)) => brute_cosine(a, b),
                    _ => 0.0,
                }
            };
            best = best.max(s);
        }
        out[i] = if d.is_empty() { 0.0 } else { best };
    }
    out
}

/// Rotations built by repeatedly moving the last element to the front.
pub fn brute_rotations(v: &[f64]) -> Vec<Vec<f64>> {
    let mut cur = v.to_vec();
    let mut out = Vec::new();
    for _ in 0..v.len() {
        out.push(cur.clone());
        let last = cur.pop().unwrap();
        cur.insert(0, last);
    }
    out
}

pub fn brute_mse(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    for k in 0..a.len() {
        sum += (a[k] - b[k]) * (a[k] - b[k]);
    }
    sum / a.len() as f64
}

pub fn brute_amse(a: &[f64], b: &[f64]) -> f64 {
    brute_rotations(b)
        .iter()
        .map(|r| brute_mse(a, r))
        .fold(f64::INFINITY, f64::min)
}

/// Each template's bottom-`n_sim` candidates by (distance, id), unioned.
pub fn brute_select(
    templates: &[Vec<f64>],
    candidates: &[(String, Vec<f64>)],
    n_sim: usize,
) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for t in templates {
        let mut all: Vec<(f64, &str)> = candidates
            .iter()
            .map(|(id, v)| (brute_amse(t, v), id.as_str()))
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(b.1)));
        out.extend(all.into_iter().take(n_sim).map(|(_, id)| id.to_string()));
    }
    out
}

pub fn ref_gain(g: i32) -> f64 {
    2f64.powi(g.max(0)) - 1.0
}

pub fn ref_ndcg(run_grades: &[i32], all_grades: &[i32], k: usize) -> f64 {
    let mut dcg = 0.0;
    for (r, g) in run_grades.iter().take(k).enumerate() {
        dcg += ref_gain(*g) / (r as f64 + 2.0).log2();
    }
    let mut ideal = all_grades.to_vec();
    ideal.sort_by(|a, b| b.cmp(a));
    let mut idcg = 0.0;
    for (r, g) in ideal.iter().take(k).enumerate() {
        idcg += ref_gain(*g) / (r as f64 + 2.0).log2();
    }
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

pub fn ref_err(run_grades: &[i32], k: usize, g_max: i32) -> f64 {
    let r = |g: i32| ref_gain(g.min(g_max)) / 2f64.powi(g_max);
    let grades: Vec<i32> = run_grades.iter().take(k).copied().collect();
    let mut err = 0.0;
    for i in 0..grades.len() {
        let mut p = 1.0;
        for &g in &grades[..i] {
            p *= 1.0 - r(g);
        }
        err += p * r(grades[i]) / (i + 1) as f64;
    }
    err
}

/// A random run/qrels pair in TREC text form plus the per-query grade lists
/// the reference metrics need.
pub struct RandomEval {
    pub run_text: String,
    pub qrels_text: String,
    /// query -> (grades in run order, all judged grades)
    pub grades: BTreeMap<String, (Vec<i32>, Vec<i32>)>,
}

pub fn random_eval(rng: &mut impl Rng) -> RandomEval {
    let mut run_text = String::new();
    let mut qrels_text = String::new();
    let mut grades = BTreeMap::new();
    let queries = rng.gen_range(1..=6);
    for q in 0..queries {
        let qid = format!("{}", 100 + q);
        let pool = rng.gen_range(1..=40);
        let mut docs: Vec<usize> = (0..pool).collect();
        docs.shuffle(rng);
        let retrieved = rng.gen_range(1..=pool);
        let mut judged: HashMap<usize, i32> = HashMap::new();
        for d in 0..pool {
            if rng.gen_bool(0.6) {
                judged.insert(d, rng.gen_range(-2..=4));
            }
        }
        let mut score = 100.0;
        let mut run_grades = Vec::new();
        for (rank, d) in docs.iter().take(retrieved).enumerate() {
            score -= rng.gen_range(0.0..1.0);
            run_text.push_str(&format!("{qid} Q0 doc{d} {} {score} rnd\n", rank + 1));
            run_grades.push(judged.get(d).copied().unwrap_or(0));
        }
        let mut all = Vec::new();
        for (d, g) in &judged {
            qrels_text.push_str(&format!("{qid} 0 doc{d} {g}\n"));
            all.push(*g);
        }
        if !judged.is_empty() {
            grades.insert(qid, (run_grades, all));
        }
    }
    RandomEval {
        run_text,
        qrels_text,
        grades,
    }
}

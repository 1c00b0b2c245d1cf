//! TREC qrels/run parsing, score-based re-ranking, nDCG@k and ERR@k.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgment {
    pub query_id: String,
    pub doc_id: String,
    pub grade: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub query_id: String,
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

/// Judgments grouped by query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    by_query: BTreeMap<String, HashMap<String, i32>>,
}

impl Qrels {
    pub fn from_judgments(judgments: impl IntoIterator<Item = Judgment>) -> Result<Self> {
        let mut qrels = Qrels::default();
        for j in judgments {
            if qrels.insert(j.clone()).is_some() {
                return Err(Error::Invalid(format!(
                    "duplicate judgment for query `{}` doc `{}`",
                    j.query_id, j.doc_id
                )));
            }
        }
        Ok(qrels)
    }

    fn insert(&mut self, j: Judgment) -> Option<i32> {
        self.by_query
            .entry(j.query_id)
            .or_default()
            .insert(j.doc_id, j.grade)
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<i32> {
        self.by_query.get(query_id)?.get(doc_id).copied()
    }

    pub fn query(&self, query_id: &str) -> Option<&HashMap<String, i32>> {
        self.by_query.get(query_id).filter(|j| !j.is_empty())
    }

    pub fn query_count(&self) -> usize {
        self.by_query.len()
    }

    pub fn judgment_count(&self) -> usize {
        self.by_query.values().map(HashMap::len).sum()
    }

    pub fn read_from<R: BufRead>(reader: R, label: &str) -> Result<Self> {
        let mut qrels = Qrels::default();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::parse(label, line_no, e.to_string()))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [query_id, _iteration, doc_id, grade] = fields.as_slice() else {
                return Err(Error::parse(
                    label,
                    line_no,
                    format!(
                        "expected `query_id 0 doc_id grade`, found {} fields",
                        fields.len()
                    ),
                ));
            };
            let grade = grade
                .parse::<i32>()
                .map_err(|_| Error::parse(label, line_no, format!("invalid grade `{grade}`")))?;
            let j = Judgment {
                query_id: query_id.to_string(),
                doc_id: doc_id.to_string(),
                grade,
            };
            if qrels.insert(j).is_some() {
                return Err(Error::parse(
                    label,
                    line_no,
                    format!("duplicate judgment for `{query_id} {doc_id}`"),
                ));
            }
        }
        Ok(qrels)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file), &path.display().to_string())
    }
}

/// Ranked lists per query, each sorted by rank.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Run {
    by_query: BTreeMap<String, Vec<RunEntry>>,
}

impl Run {
    /// Validates that ranks run 1, 2, ... with non-increasing scores and no
    /// repeated documents.
    pub fn from_entries(entries: impl IntoIterator<Item = RunEntry>) -> Result<Self> {
        let mut by_query: BTreeMap<String, Vec<RunEntry>> = BTreeMap::new();
        for e in entries {
            by_query.entry(e.query_id.clone()).or_default().push(e);
        }
        for list in by_query.values_mut() {
            list.sort_by_key(|e| e.rank);
            check_ranked_list(list).map_err(|(_, message)| Error::Invalid(message))?;
        }
        Ok(Run { by_query })
    }

    pub fn queries(&self) -> impl Iterator<Item = (&str, &[RunEntry])> {
        self.by_query
            .iter()
            .map(|(q, l)| (q.as_str(), l.as_slice()))
    }

    pub fn query(&self, query_id: &str) -> Option<&[RunEntry]> {
        self.by_query.get(query_id).map(Vec::as_slice)
    }

    pub fn entries(&self) -> impl Iterator<Item = &RunEntry> {
        self.by_query.values().flatten()
    }

    pub fn read_from<R: BufRead>(reader: R, label: &str) -> Result<Self> {
        let mut lines_of: HashMap<(String, usize), usize> = HashMap::new();
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::parse(label, line_no, e.to_string()))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [query_id, _q0, doc_id, rank, score, tag] = fields.as_slice() else {
                return Err(Error::parse(
                    label,
                    line_no,
                    format!(
                        "expected `query_id Q0 doc_id rank score tag`, found {} fields",
                        fields.len()
                    ),
                ));
            };
            let rank = rank
                .parse::<usize>()
                .ok()
                .filter(|&r| r >= 1)
                .ok_or_else(|| Error::parse(label, line_no, format!("invalid rank `{rank}`")))?;
            let score = score
                .parse::<f64>()
                .ok()
                .filter(|s| !s.is_nan())
                .ok_or_else(|| Error::parse(label, line_no, format!("invalid score `{score}`")))?;
            if let Some(prev) = lines_of.insert((query_id.to_string(), rank), line_no) {
                return Err(Error::parse(
                    label,
                    line_no,
                    format!("rank {rank} already used on line {prev}"),
                ));
            }
            entries.push(RunEntry {
                query_id: query_id.to_string(),
                doc_id: doc_id.to_string(),
                rank,
                score,
                tag: tag.to_string(),
            });
        }

        let mut by_query: BTreeMap<String, Vec<RunEntry>> = BTreeMap::new();
        for e in entries {
            by_query.entry(e.query_id.clone()).or_default().push(e);
        }
        for list in by_query.values_mut() {
            list.sort_by_key(|e| e.rank);
            if let Err((i, message)) = check_ranked_list(list) {
                let line = lines_of[&(list[i].query_id.clone(), list[i].rank)];
                return Err(Error::parse(label, line, message));
            }
        }
        Ok(Run { by_query })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file), &path.display().to_string())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in self.entries() {
            writeln!(
                out,
                "{} Q0 {} {} {} {}",
                e.query_id, e.doc_id, e.rank, e.score, e.tag
            )?;
        }
        Ok(())
    }
}

/// On failure returns the position of the offending entry and a message.
fn check_ranked_list(list: &[RunEntry]) -> std::result::Result<(), (usize, String)> {
    let query = &list[0].query_id;
    for (i, e) in list.iter().enumerate() {
        if e.rank != i + 1 {
            return Err((
                i,
                format!("query `{query}`: expected rank {}, found {}", i + 1, e.rank),
            ));
        }
    }
    if let Some(i) = (1..list.len()).find(|&i| list[i].score > list[i - 1].score) {
        return Err((
            i,
            format!(
                "query `{query}`: score rises from {} at rank {} to {} at rank {}",
                list[i - 1].score,
                i,
                list[i].score,
                i + 1
            ),
        ));
    }
    let mut docs = std::collections::HashSet::new();
    if let Some(i) = list.iter().position(|e| !docs.insert(e.doc_id.as_str())) {
        return Err((
            i,
            format!(
                "query `{query}`: document `{}` ranked twice",
                list[i].doc_id
            ),
        ));
    }
    Ok(())
}

/// External scores keyed by `(query_id, doc_id)`.
pub type ScoreMap = HashMap<(String, String), f64>;

/// Reads whitespace-separated `query_id doc_id score` rows.
pub fn read_scores<R: BufRead>(reader: R, label: &str) -> Result<ScoreMap> {
    let mut scores = ScoreMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::parse(label, line_no, e.to_string()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [query_id, doc_id, score] = fields.as_slice() else {
            return Err(Error::parse(
                label,
                line_no,
                "expected `query_id doc_id score`",
            ));
        };
        let score = score
            .parse::<f64>()
            .ok()
            .filter(|s| !s.is_nan())
            .ok_or_else(|| Error::parse(label, line_no, format!("invalid score `{score}`")))?;
        if scores
            .insert((query_id.to_string(), doc_id.to_string()), score)
            .is_some()
        {
            return Err(Error::parse(
                label,
                line_no,
                format!("duplicate score for `{query_id} {doc_id}`"),
            ));
        }
    }
    Ok(scores)
}

pub fn load_scores(path: &Path) -> Result<ScoreMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_scores(BufReader::new(file), &path.display().to_string())
}

/// Reorders the top `depth` entries of every query by external score
/// (descending, then original rank). Unscored head entries sink to the bottom
/// of the head; entries below `depth` keep their order.
///
/// Ranks are renumbered from 1 and scores rewritten as `len - rank + 1` so
/// the output is itself a valid run.
pub fn rerank(baseline: &Run, scores: &ScoreMap, depth: usize) -> Run {
    let mut by_query = BTreeMap::new();
    for (query, list) in baseline.queries() {
        let head_len = depth.min(list.len());
        let key = |e: &RunEntry| {
            scores
                .get(&(e.query_id.clone(), e.doc_id.clone()))
                .copied()
                .unwrap_or(f64::NEG_INFINITY)
        };
        let mut head: Vec<(f64, &RunEntry)> =
            list[..head_len].iter().map(|e| (key(e), e)).collect();
        head.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.rank.cmp(&b.1.rank)));
        let n = list.len();
        let reordered = head
            .into_iter()
            .map(|(_, e)| e)
            .chain(&list[head_len..])
            .enumerate()
            .map(|(i, e)| RunEntry {
                rank: i + 1,
                score: (n - i) as f64,
                ..e.clone()
            })
            .collect();
        by_query.insert(query.to_string(), reordered);
    }
    Run { by_query }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub per_query: BTreeMap<String, f64>,
    /// Arithmetic mean over judged queries; 0 when there are none.
    pub mean: f64,
}

impl MetricReport {
    fn from_per_query(per_query: BTreeMap<String, f64>) -> Self {
        let mean = if per_query.is_empty() {
            0.0
        } else {
            per_query.values().sum::<f64>() / per_query.len() as f64
        };
        MetricReport { per_query, mean }
    }

    /// `query_id \t value` rows plus a final `mean` row, four decimals.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (q, v) in &self.per_query {
            writeln!(out, "{q}\t{v:.4}")?;
        }
        writeln!(out, "mean\t{:.4}", self.mean)
    }
}

/// Grades of the top `k` entries; unjudged documents count as 0.
fn run_grades(list: &[RunEntry], judged: &HashMap<String, i32>, k: usize) -> Vec<i32> {
    list.iter()
        .take(k)
        .map(|e| judged.get(&e.doc_id).copied().unwrap_or(0))
        .collect()
}

fn evaluate(
    run: &Run,
    qrels: &Qrels,
    per_query: impl Fn(&[RunEntry], &HashMap<String, i32>) -> f64,
) -> MetricReport {
    MetricReport::from_per_query(
        run.queries()
            .filter_map(|(q, list)| {
                qrels
                    .query(q)
                    .map(|judged| (q.to_string(), per_query(list, judged)))
            })
            .collect(),
    )
}

fn gain(grade: i32) -> f64 {
    2f64.powi(grade.max(0)) - 1.0
}

/// DCG with `2^g - 1` gains and `log2(rank + 1)` discounts.
pub fn dcg(grades: &[i32]) -> f64 {
    grades
        .iter()
        .enumerate()
        .map(|(i, &g)| gain(g) / ((i + 2) as f64).log2())
        .sum()
}

/// nDCG of a graded list against the ideal ordering of `all_grades`.
pub fn ndcg_of(grades: &[i32], all_grades: &[i32], k: usize) -> f64 {
    let mut ideal: Vec<i32> = all_grades.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    ideal.truncate(k);
    let idcg = dcg(&ideal);
    if idcg == 0.0 {
        0.0
    } else {
        dcg(&grades[..grades.len().min(k)]) / idcg
    }
}

/// Cascade ERR with stopping probability `(2^g - 1) / 2^g_max`; grades are
/// clamped to `[0, g_max]`.
pub fn err_of(grades: &[i32], k: usize, g_max: i32) -> f64 {
    let denom = 2f64.powi(g_max);
    let mut not_stopped = 1.0;
    let mut err = 0.0;
    for (i, &g) in grades.iter().take(k).enumerate() {
        let r = gain(g.min(g_max)) / denom;
        err += not_stopped * r / (i + 1) as f64;
        not_stopped *= 1.0 - r;
    }
    err
}

pub fn ndcg_at_k(run: &Run, qrels: &Qrels, k: usize) -> MetricReport {
    evaluate(run, qrels, |list, judged| {
        let all: Vec<i32> = judged.values().copied().collect();
        ndcg_of(&run_grades(list, judged, k), &all, k)
    })
}

pub fn err_at_k(run: &Run, qrels: &Qrels, k: usize, g_max: i32) -> MetricReport {
    evaluate(run, qrels, |list, judged| {
        err_of(&run_grades(list, judged, k), k, g_max)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ndcg { k: usize },
    Err { k: usize },
}

impl Metric {
    pub const ERR_MAX_GRADE: i32 = 4;

    pub fn evaluate(self, run: &Run, qrels: &Qrels) -> MetricReport {
        match self {
            Metric::Ndcg { k } => ndcg_at_k(run, qrels, k),
            Metric::Err { k } => err_at_k(run, qrels, k, Self::ERR_MAX_GRADE),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("unknown metric `{s}`; expected err@K or ndcg@K"));
        let (name, k) = s.split_once('@').ok_or_else(bad)?;
        let k: usize = k.parse().ok().filter(|&k| k >= 1).ok_or_else(bad)?;
        match name.to_ascii_lowercase().as_str() {
            "ndcg" => Ok(Metric::Ndcg { k }),
            "err" => Ok(Metric::Err { k }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Ndcg { k } => write!(f, "ndcg@{k}"),
            Metric::Err { k } => write!(f, "err@{k}"),
        }
    }
}

//! Keeps candidate pairs whose mock interaction vectors are among the
//! `n_sim` nearest (by aMSE) to at least one template pair.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::config::FilterConfig;
use crate::corpus::{read_three_column, tokenize, Corpus, Field, TokenizedText};
use crate::error::{Error, Result};
use crate::interaction::{amse, mock_embedding, EmbeddingTable, InteractionVector};
use crate::parallel;
use crate::ranking_filter::RankedPair;

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub template_id: String,
    pub query: TokenizedText,
    pub doc: TokenizedText,
}

/// Query-document pairs from the target domain. Relevance labels are not needed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemplateSet {
    templates: Vec<Template>,
}

impl TemplateSet {
    pub fn new(templates: Vec<Template>) -> Result<Self> {
        let mut ids = HashSet::new();
        for t in &templates {
            if !ids.insert(t.template_id.as_str()) {
                return Err(Error::DuplicateId(t.template_id.clone()));
            }
            if t.query.is_empty() || t.doc.is_empty() {
                return Err(Error::Invalid(format!(
                    "template `{}` has no tokens in its query or document",
                    t.template_id
                )));
            }
        }
        Ok(TemplateSet { templates })
    }

    /// Tokenizes raw `(id, query, doc)` triples with the corpus tokenizer.
    pub fn from_texts<'a>(
        rows: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    ) -> Result<Self> {
        Self::new(
            rows.into_iter()
                .map(|(id, q, d)| Template {
                    template_id: id.to_string(),
                    query: tokenize(q, Field::Headline),
                    doc: tokenize(d, Field::Content),
                })
                .collect(),
        )
    }

    pub fn read_from<R: BufRead>(reader: R, label: &str) -> Result<Self> {
        let mut templates = Vec::new();
        let mut ids = HashSet::new();
        read_three_column(reader, label, |line_no, row| {
            if !ids.insert(row.doc_id.clone()) {
                return Err(Error::parse(
                    label,
                    line_no,
                    format!("duplicate template_id `{}`", row.doc_id),
                ));
            }
            let t = Template {
                query: tokenize(&row.headline, Field::Headline),
                doc: tokenize(&row.content, Field::Content),
                template_id: row.doc_id,
            };
            if t.query.is_empty() || t.doc.is_empty() {
                return Err(Error::parse(
                    label,
                    line_no,
                    "template query or document has no tokens",
                ));
            }
            templates.push(t);
            Ok(())
        })?;
        Ok(TemplateSet { templates })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file), &path.display().to_string())
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub query_doc_id: String,
    pub ivec: InteractionVector,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn new(candidates: Vec<Candidate>) -> Result<Self> {
        let mut ids = HashSet::new();
        if let Some(dup) = candidates
            .iter()
            .find(|c| !ids.insert(c.query_doc_id.as_str()))
        {
            return Err(Error::DuplicateId(dup.query_doc_id.clone()));
        }
        Ok(CandidateSet { candidates })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Mock interaction vector of each pair's own headline against its own content.
pub fn build_candidate_vectors(
    pairs: &[RankedPair],
    corpus: &Corpus,
    emb: &EmbeddingTable,
    cfg: &FilterConfig,
) -> Result<CandidateSet> {
    let docs = pairs
        .iter()
        .map(|p| {
            corpus
                .get(&p.query_doc_id)
                .ok_or_else(|| Error::UnknownDocument(p.query_doc_id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let candidates = parallel::map(&docs, |doc| Candidate {
        query_doc_id: doc.doc.doc_id.clone(),
        ivec: mock_embedding(&doc.headline, &doc.content, emb, cfg.query_pad_length),
    });
    CandidateSet::new(candidates)
}

#[derive(Debug, Clone, Copy)]
struct Neighbor<'a> {
    distance: f64,
    id: &'a str,
}

impl PartialEq for Neighbor<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Neighbor<'_> {}

impl Ord for Neighbor<'_> {
    // Greater means farther; the heap top is the current worst neighbor.
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then_with(|| self.id.cmp(other.id))
    }
}

impl PartialOrd for Neighbor<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The `n_sim` candidates nearest to `target`, ties broken by ascending id,
/// nearest first.
pub fn nearest_candidates<'a>(
    target: &InteractionVector,
    candidates: &'a CandidateSet,
    n_sim: usize,
) -> Result<Vec<(&'a str, f64)>> {
    let mut heap: BinaryHeap<Neighbor<'a>> = BinaryHeap::with_capacity(n_sim + 1);
    for c in candidates.candidates() {
        let n = Neighbor {
            distance: amse(target.values(), c.ivec.values())?,
            id: &c.query_doc_id,
        };
        if heap.len() < n_sim {
            heap.push(n);
        } else if heap.peek().is_some_and(|worst| n < *worst) {
            heap.pop();
            heap.push(n);
        }
    }
    Ok(heap
        .into_sorted_vec()
        .into_iter()
        .map(|n| (n.id, n.distance))
        .collect())
}

/// Union over templates of each template's `n_sim` nearest candidates,
/// sorted by `query_doc_id`.
pub fn select_candidates(
    candidates: &CandidateSet,
    templates: &TemplateSet,
    emb: &EmbeddingTable,
    cfg: &FilterConfig,
) -> Result<Vec<String>> {
    let per_template = parallel::map(templates.templates(), |t| {
        let target = mock_embedding(&t.query, &t.doc, emb, cfg.query_pad_length);
        nearest_candidates(&target, candidates, cfg.n_sim)
    });
    let mut selected = BTreeSet::new();
    for nearest in per_template {
        selected.extend(nearest?.into_iter().map(|(id, _)| id));
    }
    Ok(selected.into_iter().map(str::to_string).collect())
}

pub fn write_selected<W: Write>(selected: &[String], mut out: W) -> std::io::Result<()> {
    for id in selected {
        writeln!(out, "{id}")?;
    }
    Ok(())
}

pub fn read_selected<R: BufRead>(reader: R, label: &str) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse(label, i + 1, e.to_string()))?;
        let id = line.trim();
        if !id.is_empty() {
            ids.push(id.to_string());
        }
    }
    Ok(ids)
}

pub fn load_selected(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_selected(BufReader::new(file), &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::interaction::SimilarityMatrix;

    fn ivec(active: &[f64], pad: usize) -> InteractionVector {
        let sim = SimilarityMatrix::from_rows(active.iter().map(|&v| vec![v]).collect()).unwrap();
        InteractionVector::from_matrix(&sim, pad)
    }

    fn candidates(rows: &[(&str, &[f64])]) -> CandidateSet {
        CandidateSet::new(
            rows.iter()
                .map(|(id, v)| Candidate {
                    query_doc_id: id.to_string(),
                    ivec: ivec(v, 4),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn verbatim_headline_gives_unit_vector() {
        let corpus = Corpus::from_documents(vec![Document {
            doc_id: "a".into(),
            headline: "storm hits coast".into(),
            content: "a storm hits the coast today".into(),
        }])
        .unwrap();
        let pairs = vec![RankedPair {
            query_doc_id: "a".into(),
            positive_rank: 1,
            negative_ids: vec![],
        }];
        let set = build_candidate_vectors(
            &pairs,
            &corpus,
            &EmbeddingTable::new(3),
            &FilterConfig::default(),
        )
        .unwrap();
        assert_eq!(set.candidates()[0].ivec.active(), [1.0, 1.0, 1.0]);
        assert!(build_candidate_vectors(
            &[],
            &corpus,
            &EmbeddingTable::new(3),
            &FilterConfig::default()
        )
        .unwrap()
        .is_empty());
    }

    #[test]
    fn missing_pair_document_is_an_error() {
        let pairs = vec![RankedPair {
            query_doc_id: "ghost".into(),
            positive_rank: 1,
            negative_ids: vec![],
        }];
        let err = build_candidate_vectors(
            &pairs,
            &Corpus::default(),
            &EmbeddingTable::new(1),
            &FilterConfig::default(),
        );
        assert!(matches!(err, Err(Error::UnknownDocument(_))));
    }

    #[test]
    fn nearest_prefers_exact_match_then_ties_by_id() {
        let set = candidates(&[
            ("c", &[0.5, 0.5]),
            ("b", &[1.0, 0.2]),
            ("a", &[0.5, 0.5]),
            ("z", &[1.0, 0.2, 0.2]),
        ]);
        let target = ivec(&[0.0, 1.0, 0.2], 4);
        let nearest = nearest_candidates(&target, &set, 1).unwrap();
        assert_eq!(nearest, [("b", 0.0)]);
        let nearest = nearest_candidates(&target, &set, 3).unwrap();
        let ids: Vec<_> = nearest.iter().map(|(id, _)| *id).collect();
        assert_eq!(ids, ["b", "z", "a"]);
    }

    #[test]
    fn saturates_when_n_sim_covers_everything() {
        let set = candidates(&[("x", &[0.1]), ("y", &[0.9]), ("w", &[0.4])]);
        let templates = TemplateSet::from_texts([("t1", "red fox", "a red fox")]).unwrap();
        let cfg = FilterConfig {
            n_sim: 3,
            query_pad_length: 4,
            max_headline_tokens: 4,
            ..Default::default()
        };
        let selected = select_candidates(&set, &templates, &EmbeddingTable::new(2), &cfg).unwrap();
        assert_eq!(selected, ["w", "x", "y"]);
    }

    #[test]
    fn template_file_validation() {
        let ok =
            TemplateSet::read_from("t1\tred fox\tthe red fox\nt2\tblue\tsky\n".as_bytes(), "t")
                .unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok.templates()[0].query.tokens, ["red", "fox"]);
        assert!(TemplateSet::read_from("t1\ta\tb\nt1\tc\td\n".as_bytes(), "t").is_err());
        assert!(TemplateSet::read_from("t1\t!!!\tb\n".as_bytes(), "t").is_err());
    }

    #[test]
    fn selected_file_round_trip() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let mut buf = Vec::new();
        write_selected(&ids, &mut buf).unwrap();
        assert_eq!(read_selected(buf.as_slice(), "s").unwrap(), ids);
    }
}

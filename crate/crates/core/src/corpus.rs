//! Corpus loading, tokenization and headline-length admission.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::FilterConfig;
use crate::error::{Error, Result};

/// One article: the headline acts as the pseudo-query, the content as its
/// pseudo-relevant document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub headline: String,
    pub content: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    Headline,
    Content,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedText {
    pub tokens: Vec<String>,
    pub source_field: Field,
}

impl TokenizedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

/// Lowercases and splits on every maximal run of non-alphanumeric characters.
pub fn tokenize(text: &str, source_field: Field) -> TokenizedText {
    let tokens = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|fragment| !fragment.is_empty())
        .map(str::to_lowercase)
        .collect();
    TokenizedText {
        tokens,
        source_field,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub doc_count: usize,
    pub total_content_tokens: usize,
    pub avg_content_length: f64,
    pub doc_lengths: BTreeMap<String, usize>,
}

impl CorpusStats {
    fn from_documents(docs: &[TokenizedDocument]) -> Self {
        let doc_lengths: BTreeMap<String, usize> = docs
            .iter()
            .map(|d| (d.doc.doc_id.clone(), d.content.len()))
            .collect();
        let total_content_tokens: usize = doc_lengths.values().sum();
        let avg_content_length = if docs.is_empty() {
            0.0
        } else {
            total_content_tokens as f64 / docs.len() as f64
        };
        CorpusStats {
            doc_count: docs.len(),
            total_content_tokens,
            avg_content_length,
            doc_lengths,
        }
    }
}

/// A document together with its token streams.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedDocument {
    pub doc: Document,
    pub headline: TokenizedText,
    pub content: TokenizedText,
}

impl TokenizedDocument {
    pub fn new(doc: Document) -> Self {
        let headline = tokenize(&doc.headline, Field::Headline);
        let content = tokenize(&doc.content, Field::Content);
        TokenizedDocument {
            doc,
            headline,
            content,
        }
    }
}

/// Admitted documents in file order, with an id lookup.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<TokenizedDocument>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus from already-admitted documents.
    pub fn from_documents(docs: impl IntoIterator<Item = Document>) -> Result<Self> {
        let mut corpus = Corpus::default();
        for doc in docs {
            corpus.push(TokenizedDocument::new(doc))?;
        }
        Ok(corpus)
    }

    fn push(&mut self, doc: TokenizedDocument) -> Result<()> {
        if self.by_id.contains_key(&doc.doc.doc_id) {
            return Err(Error::DuplicateId(doc.doc.doc_id));
        }
        self.by_id.insert(doc.doc.doc_id.clone(), self.docs.len());
        self.docs.push(doc);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&TokenizedDocument> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn documents(&self) -> &[TokenizedDocument] {
        &self.docs
    }

    pub fn iter(&self) -> impl Iterator<Item = &Document> {
        self.docs.iter().map(|d| &d.doc)
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats::from_documents(&self.docs)
    }

    /// Writes the admitted documents back out in the corpus TSV format.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for doc in self.iter() {
            writeln!(out, "{}\t{}\t{}", doc.doc_id, doc.headline, doc.content)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub corpus: Corpus,
    pub stats: CorpusStats,
    pub rejected_count: usize,
}

impl Ingested {
    pub fn parsed_count(&self) -> usize {
        self.corpus.len() + self.rejected_count
    }
}

/// Parses one `id\tfirst\tsecond` row. Shared by the corpus and template readers.
pub(crate) fn parse_three_column(label: &str, line_no: usize, line: &str) -> Result<Document> {
    let mut fields = line.split('\t');
    let (Some(id), Some(headline), Some(content), None) =
        (fields.next(), fields.next(), fields.next(), fields.next())
    else {
        return Err(Error::parse(
            label,
            line_no,
            format!(
                "expected 3 tab-separated fields, found {}",
                line.split('\t').count()
            ),
        ));
    };
    let id = id.trim();
    if id.is_empty() {
        return Err(Error::parse(label, line_no, "empty id"));
    }
    if id.chars().any(|c| c.is_whitespace() || c == ',') {
        return Err(Error::parse(
            label,
            line_no,
            format!("id `{id}` contains whitespace or a comma"),
        ));
    }
    let headline = headline.trim();
    let content = content.trim();
    if headline.is_empty() {
        return Err(Error::parse(label, line_no, "empty second field"));
    }
    if content.is_empty() {
        return Err(Error::parse(label, line_no, "empty third field"));
    }
    Ok(Document {
        doc_id: id.to_string(),
        headline: headline.to_string(),
        content: content.to_string(),
    })
}

/// Reads a three-column TSV, skipping blank lines.
pub(crate) fn read_three_column<R: BufRead>(
    reader: R,
    label: &str,
    mut each: impl FnMut(usize, Document) -> Result<()>,
) -> Result<()> {
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::parse(label, line_no, e.to_string()))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        each(line_no, parse_three_column(label, line_no, line)?)?;
    }
    Ok(())
}

/// Loads a corpus and keeps documents whose normalized headline length lies
/// within the configured bounds (inclusive).
pub fn ingest_reader<R: BufRead>(reader: R, label: &str, cfg: &FilterConfig) -> Result<Ingested> {
    let mut corpus = Corpus::default();
    let mut seen = HashMap::new();
    let mut rejected_count = 0;
    read_three_column(reader, label, |line_no, doc| {
        if let Some(first) = seen.insert(doc.doc_id.clone(), line_no) {
            return Err(Error::Parse {
                file: label.to_string(),
                line: line_no,
                message: format!(
                    "duplicate doc_id `{}` (first seen on line {first})",
                    doc.doc_id
                ),
            });
        }
        let doc = TokenizedDocument::new(doc);
        let len = doc.headline.len();
        if (cfg.min_headline_tokens..=cfg.max_headline_tokens).contains(&len) {
            corpus.push(doc)?;
        } else {
            rejected_count += 1;
        }
        Ok(())
    })?;
    let stats = corpus.stats();
    Ok(Ingested {
        corpus,
        stats,
        rejected_count,
    })
}

pub fn ingest_corpus(path: &Path, cfg: &FilterConfig) -> Result<Ingested> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(BufReader::new(file), &path.display().to_string(), cfg)
}

pub fn ingest_str(text: &str, cfg: &FilterConfig) -> Result<Ingested> {
    ingest_reader(text.as_bytes(), "<input>", cfg)
}

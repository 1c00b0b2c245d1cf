//! Similarity matrices, mock interaction vectors and the aligned MSE distance.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::TokenizedText;
use crate::error::{Error, Result};

/// Pre-trained word vectors in the usual text interchange format. Tokens
/// are stored verbatim; lookups use the tokenizer's lowercase output.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
    norms: HashMap<String, f64>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            ..Default::default()
        }
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let token = token.into();
        if vector.len() != self.dimension {
            return Err(Error::LengthMismatch {
                left: self.dimension,
                right: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite component for `{token}`"
            )));
        }
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.norms.insert(token.clone(), norm);
        self.vectors.insert(token, vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// Cosine of two stored vectors; `None` if either token is missing.
    /// A zero-norm vector has cosine 0 with everything.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let (va, na) = (self.vectors.get(a)?, self.norms[a]);
        let (vb, nb) = (self.vectors.get(b)?, self.norms[b]);
        if na == 0.0 || nb == 0.0 {
            return Some(0.0);
        }
        let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
        Some((dot / (na * nb)).clamp(-1.0, 1.0))
    }

    pub fn read_from<R: BufRead>(reader: R, label: &str) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header = loop {
            match lines.next() {
                None => {
                    return Err(Error::parse(
                        label,
                        1,
                        "missing `<vocab_size> <dimension>` header",
                    ))
                }
                Some((i, line)) => {
                    let line = line.map_err(|e| Error::parse(label, i + 1, e.to_string()))?;
                    if !line.trim().is_empty() {
                        break (i + 1, line);
                    }
                }
            }
        };
        let (header_line, header) = header;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let [vocab, dim] = parts.as_slice() else {
            return Err(Error::parse(
                label,
                header_line,
                "header must be `<vocab_size> <dimension>`",
            ));
        };
        let parse_count = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(label, header_line, format!("invalid count `{s}`")))
        };
        let vocab_size = parse_count(vocab)?;
        let dimension = parse_count(dim)?;
        if dimension == 0 {
            return Err(Error::parse(
                label,
                header_line,
                "dimension must be at least 1",
            ));
        }

        let mut table = EmbeddingTable::new(dimension);
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::parse(label, line_no, e.to_string()))?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let vector = fields
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| {
                            Error::parse(label, line_no, format!("non-numeric component `{f}`"))
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            if vector.len() != dimension {
                return Err(Error::parse(
                    label,
                    line_no,
                    format!("expected {dimension} components, found {}", vector.len()),
                ));
            }
            if table.vectors.contains_key(token) {
                return Err(Error::parse(
                    label,
                    line_no,
                    format!("duplicate token `{token}`"),
                ));
            }
            table.insert(token, vector)?;
        }
        if table.len() != vocab_size {
            return Err(Error::parse(
                label,
                header_line,
                format!(
                    "header declares {vocab_size} vectors, file has {}",
                    table.len()
                ),
            ));
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file), &path.display().to_string())
    }
}

/// Row-major `|q| x |d|` matrix of cosine similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::LengthMismatch {
                left: cols,
                right: bad.len(),
            });
        }
        if rows.iter().flatten().any(|c| !(-1.0..=1.0).contains(c)) {
            return Err(Error::Invalid(
                "similarity cells must lie in [-1, 1]".into(),
            ));
        }
        Ok(SimilarityMatrix {
            rows: rows.len(),
            cols,
            cells: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.cells[row * self.cols..(row + 1) * self.cols]
    }
}

/// Equal strings score 1.0 whether or not they are in the vocabulary;
/// any other pair involving an unknown token scores 0.0.
pub fn token_similarity(a: &str, b: &str, emb: &EmbeddingTable) -> f64 {
    if a == b {
        1.0
    } else {
        emb.cosine(a, b).unwrap_or(0.0)
    }
}

pub fn similarity_matrix(
    q: &TokenizedText,
    d: &TokenizedText,
    emb: &EmbeddingTable,
) -> SimilarityMatrix {
    let cells = q
        .iter()
        .flat_map(|qt| d.iter().map(move |dt| token_similarity(qt, dt, emb)))
        .collect();
    SimilarityMatrix {
        rows: q.len(),
        cols: d.len(),
        cells,
    }
}

/// Fixed-length vector of per-query-term maximum similarities, zero-padded.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionVector {
    values: Vec<f64>,
    active_length: usize,
}

impl InteractionVector {
    /// Keeps the maximum of each of the first `pad` rows. Rows past `pad`
    /// are dropped; a matrix with no columns yields zeros.
    pub fn from_matrix(sim: &SimilarityMatrix, pad: usize) -> Self {
        let active_length = sim.rows().min(pad);
        let mut values = vec![0.0; pad];
        for (i, slot) in values.iter_mut().take(active_length).enumerate() {
            *slot = sim.row(i).iter().copied().reduce(f64::max).unwrap_or(0.0);
        }
        InteractionVector {
            values,
            active_length,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn active(&self) -> &[f64] {
        &self.values[..self.active_length]
    }

    pub fn active_length(&self) -> usize {
        self.active_length
    }
}

pub fn mock_embedding(
    q: &TokenizedText,
    d: &TokenizedText,
    emb: &EmbeddingTable,
    pad: usize,
) -> InteractionVector {
    let q = TokenizedText {
        tokens: q.tokens.iter().take(pad).cloned().collect(),
        source_field: q.source_field,
    };
    InteractionVector::from_matrix(&similarity_matrix(&q, d, emb), pad)
}

/// Circular rotation by `s` positions: `shift([1, 2, 3], 1) == [3, 1, 2]`.
pub fn shift(vec: &[f64], s: usize) -> Result<Vec<f64>> {
    let len = vec.len();
    if s >= len {
        return Err(Error::ShiftOutOfRange { shift: s, len });
    }
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&vec[len - s..]);
    out.extend_from_slice(&vec[..len - s]);
    Ok(out)
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<usize> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.len())
}

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    let len = check_lengths(a, b)?;
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / len as f64)
}

/// `mse(a, shift(b, s))` for every `s` in `0..len`, without materializing the rotations.
pub fn rotation_mses(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let len = check_lengths(a, b)?;
    Ok((0..len)
        .map(|s| {
            let sum: f64 = (0..len)
                .map(|i| {
                    let d = a[i] - b[(i + len - s) % len];
                    d * d
                })
                .sum();
            sum / len as f64
        })
        .collect())
}

/// Minimum MSE over all circular rotations of `b`.
pub fn amse(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(rotation_mses(a, b)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, Field};

    fn toy_table() -> EmbeddingTable {
        let text = "5 3\n\
            bird 1 0 0\n\
            flies 0.6 0.8 0\n\
            animals 0.8 0.6 0\n\
            refuge 0 0 2\n\
            void 0 0 0\n";
        EmbeddingTable::read_from(text.as_bytes(), "toy").unwrap()
    }

    #[test]
    fn loads_text_vectors() {
        let t = EmbeddingTable::read_from("2 3\na 1 2 3\nb 4 5 6\n".as_bytes(), "t").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dimension(), 3);
        assert_eq!(t.get("b"), Some(&[4.0, 5.0, 6.0][..]));
    }

    #[test]
    fn rejects_bad_rows() {
        let short = EmbeddingTable::read_from("2 3\na 1 2 3\nb 4 5\n".as_bytes(), "t");
        assert!(matches!(short, Err(Error::Parse { line: 3, .. })));
        let nan = EmbeddingTable::read_from("1 2\na 1 x\n".as_bytes(), "t");
        assert!(matches!(nan, Err(Error::Parse { line: 2, .. })));
        let count = EmbeddingTable::read_from("3 2\na 1 1\n".as_bytes(), "t");
        assert!(matches!(count, Err(Error::Parse { line: 1, .. })));
        assert!(EmbeddingTable::read_from("".as_bytes(), "t").is_err());
    }

    #[test]
    fn cosine_matches_hand_values() {
        let t = toy_table();
        // (0.6*0.8 + 0.8*0.6) / (1 * 1)
        assert!((t.cosine("flies", "animals").unwrap() - 0.96).abs() < 1e-12);
        assert!((t.cosine("bird", "animals").unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(t.cosine("bird", "refuge").unwrap(), 0.0);
        assert_eq!(t.cosine("void", "bird").unwrap(), 0.0);
        assert!(t.cosine("bird", "nope").is_none());
    }

    #[test]
    fn identical_and_oov_rules() {
        let t = toy_table();
        let q = tokenize("bird zebra", Field::Headline);
        let d = tokenize("zebra animals", Field::Content);
        let m = similarity_matrix(&q, &d, &t);
        assert_eq!((m.rows(), m.cols()), (2, 2));
        assert_eq!(m.get(0, 0), 0.0); // bird vs oov
        assert!((m.get(0, 1) - 0.8).abs() < 1e-12);
        assert_eq!(m.get(1, 0), 1.0); // same oov string
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn row_max_of_reference_matrix() {
        let sim = SimilarityMatrix::from_rows(vec![
            vec![0.5, 0.6, 0.3, 0.4],
            vec![0.2, 0.4, 0.2, 0.2],
            vec![0.2, 0.4, 0.4, 0.3],
        ])
        .unwrap();
        let ivec = InteractionVector::from_matrix(&sim, 16);
        assert_eq!(ivec.active(), [0.6, 0.4, 0.4]);
        assert_eq!(ivec.values().len(), 16);
        assert!(ivec.values()[3..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mock_embedding_truncates_to_pad() {
        let t = toy_table();
        let q = tokenize("bird flies animals refuge", Field::Headline);
        let d = tokenize("animals", Field::Content);
        let ivec = mock_embedding(&q, &d, &t, 2);
        assert_eq!(ivec.active_length(), 2);
        assert_eq!(ivec.values().len(), 2);
        assert!((ivec.values()[0] - 0.8).abs() < 1e-12);
        assert!((ivec.values()[1] - 0.96).abs() < 1e-12);
    }

    #[test]
    fn shift_examples() {
        assert_eq!(shift(&[1.0, 2.0, 3.0], 0).unwrap(), [1.0, 2.0, 3.0]);
        assert_eq!(shift(&[1.0, 2.0, 3.0], 1).unwrap(), [3.0, 1.0, 2.0]);
        assert_eq!(shift(&[1.0, 2.0, 3.0], 2).unwrap(), [2.0, 3.0, 1.0]);
        assert!(matches!(
            shift(&[1.0], 1),
            Err(Error::ShiftOutOfRange { .. })
        ));
        assert!(shift(&[], 0).is_err());
    }

    #[test]
    fn mse_and_amse_examples() {
        let a = [3.0, 7.0, 4.0];
        let b = [4.0, 4.0, 6.0];
        assert!((mse(&a, &b).unwrap() - 14.0 / 3.0).abs() < 1e-12);
        let rot = rotation_mses(&a, &b).unwrap();
        for (got, want) in rot.iter().zip([14.0 / 3.0, 18.0 / 3.0, 2.0 / 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((amse(&a, &b).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert!(matches!(
            mse(&a, &b[..2]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(amse(&[], &[]).is_err());
    }
}

//! Numeric document representations: an in-process TF-IDF space, or
//! embeddings computed elsewhere and imported through a small JSONL format.
//!
//! The TF-IDF weight of term `t` in document `d` is
//! `count(t, d) * (ln((1 + N) / (1 + df(t))) + 1)`, after which each row is
//! scaled to unit L2 norm. Rows with no in-vocabulary term stay all-zero.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Pool};
use crate::error::{Error, Result};
use crate::tokenize::tokens;

pub const EMBEDDING_FORMAT: &str = "emb-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceTag {
    Tfidf,
    External,
}

/// Sparse vector with strictly increasing indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Entries must be sorted by index without repeats.
    pub fn new(indices: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::invalid("sparse vector index/value length mismatch"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sparse vector indices must strictly increase"));
        }
        Ok(SparseVector { indices, values })
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Rows {
    Dense(Vec<Vec<f64>>),
    Sparse(Vec<SparseVector>),
}

/// Borrowed view of one feature row.
#[derive(Clone, Copy, Debug)]
pub enum RowRef<'a> {
    Dense(&'a [f64]),
    Sparse(&'a SparseVector),
}

impl<'a> RowRef<'a> {
    pub fn dot(&self, dense: &[f64]) -> f64 {
        match self {
            RowRef::Dense(row) => row.iter().zip(dense).map(|(a, b)| a * b).sum(),
            RowRef::Sparse(row) => row
                .indices
                .iter()
                .zip(&row.values)
                .map(|(&i, v)| v * dense[i as usize])
                .sum(),
        }
    }

    pub fn squared_norm(&self) -> f64 {
        match self {
            RowRef::Dense(row) => row.iter().map(|v| v * v).sum(),
            RowRef::Sparse(row) => row.values.iter().map(|v| v * v).sum(),
        }
    }

    /// Calls `f(index, value)` for every stored entry.
    pub fn for_each(&self, mut f: impl FnMut(usize, f64)) {
        match self {
            RowRef::Dense(row) => row.iter().enumerate().for_each(|(i, &v)| f(i, v)),
            RowRef::Sparse(row) => row
                .indices
                .iter()
                .zip(&row.values)
                .for_each(|(&i, &v)| f(i as usize, v)),
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.for_each(|i, v| out[i] = v);
        out
    }

    pub fn squared_distance(&self, other: &RowRef<'_>) -> f64 {
        match (self, other) {
            (RowRef::Dense(a), RowRef::Dense(b)) => {
                a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
            }
            (RowRef::Sparse(a), RowRef::Sparse(b)) => sparse_squared_distance(a, b),
            (RowRef::Dense(a), RowRef::Sparse(b)) | (RowRef::Sparse(b), RowRef::Dense(a)) => {
                let b = RowRef::Sparse(b).to_dense(a.len());
                a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum()
            }
        }
    }
}

fn sparse_squared_distance(a: &SparseVector, b: &SparseVector) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut sum = 0.0;
    while i < a.indices.len() && j < b.indices.len() {
        match a.indices[i].cmp(&b.indices[j]) {
            std::cmp::Ordering::Less => {
                sum += a.values[i] * a.values[i];
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                sum += b.values[j] * b.values[j];
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let d = a.values[i] - b.values[j];
                sum += d * d;
                i += 1;
                j += 1;
            }
        }
    }
    sum += a.values[i..].iter().map(|v| v * v).sum::<f64>();
    sum += b.values[j..].iter().map(|v| v * v).sum::<f64>();
    sum
}

pub fn cosine_similarity(a: RowRef<'_>, b: RowRef<'_>, dim: usize) -> f64 {
    let na = a.squared_norm().sqrt();
    let nb = b.squared_norm().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    b.dot(&a.to_dense(dim)) / (na * nb)
}

/// One vector per document id, all of the same dimension and finite.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    dim: usize,
    rows: Rows,
    space: SpaceTag,
    index: HashMap<String, usize>,
}

impl FeatureMatrix {
    pub fn from_dense(ids: Vec<String>, rows: Vec<Vec<f64>>, space: SpaceTag) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Self::build(ids, dim, Rows::Dense(rows), space)
    }

    pub fn from_sparse(ids: Vec<String>, dim: usize, rows: Vec<SparseVector>, space: SpaceTag) -> Result<Self> {
        if let Some(bad) = rows
            .iter()
            .filter_map(|r| r.indices.last())
            .find(|&&i| i as usize >= dim)
        {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: *bad as usize + 1,
            });
        }
        Self::build(ids, dim, Rows::Sparse(rows), space)
    }

    fn build(ids: Vec<String>, dim: usize, rows: Rows, space: SpaceTag) -> Result<Self> {
        let n_rows = match &rows {
            Rows::Dense(r) => r.len(),
            Rows::Sparse(r) => r.len(),
        };
        if n_rows != ids.len() {
            return Err(Error::invalid(format!("{} ids for {n_rows} rows", ids.len())));
        }
        let finite = match &rows {
            Rows::Dense(r) => r.iter().flatten().all(|v| v.is_finite()),
            Rows::Sparse(r) => r.iter().flat_map(|s| &s.values).all(|v| v.is_finite()),
        };
        if !finite {
            return Err(Error::invalid("feature rows contain NaN or infinite values"));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(FeatureMatrix {
            ids,
            dim,
            rows,
            space,
            index,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn space(&self) -> SpaceTag {
        self.space
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.rows, Rows::Sparse(_))
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row(&self, i: usize) -> RowRef<'_> {
        match &self.rows {
            Rows::Dense(r) => RowRef::Dense(&r[i]),
            Rows::Sparse(r) => RowRef::Sparse(&r[i]),
        }
    }

    pub fn row_by_id(&self, id: &str) -> Option<RowRef<'_>> {
        self.position(id).map(|i| self.row(i))
    }

    /// Ids whose row is entirely zero (no in-vocabulary term, for TF-IDF).
    pub fn zero_rows(&self) -> Vec<&str> {
        (0..self.len())
            .filter(|&i| self.row(i).squared_norm() == 0.0)
            .map(|i| self.ids[i].as_str())
            .collect()
    }

    /// Ids of `wanted` that have no row, in the given order.
    pub fn missing_ids<'a>(&self, wanted: impl IntoIterator<Item = &'a String>) -> Vec<String> {
        wanted
            .into_iter()
            .filter(|id| !self.index.contains_key(id.as_str()))
            .cloned()
            .collect()
    }

    pub fn write_embeddings<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let io = |e| Error::io("<writer>", e);
        serde_json::to_writer(
            &mut w,
            &EmbeddingHeader {
                format: EMBEDDING_FORMAT.to_string(),
                dim: self.dim,
            },
        )?;
        w.write_all(b"\n").map_err(io)?;
        for (i, id) in self.ids.iter().enumerate() {
            let vec = self.row(i).to_dense(self.dim);
            serde_json::to_writer(&mut w, &EmbeddingRow { id: id.clone(), vec })?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn save_embeddings(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_embeddings(file)
    }
}

#[derive(Serialize, Deserialize)]
struct EmbeddingHeader {
    format: String,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingRow {
    id: String,
    vec: Vec<f64>,
}

/// Reads an `emb-v1` file and returns one row per pool document, in pool order.
/// Ids in the file that the pool does not contain are ignored.
pub fn import_embeddings(path: impl AsRef<Path>, pool: &Pool) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::new(file), &path.display().to_string(), pool)
}

pub fn read_embeddings<R: BufRead>(reader: R, origin: &str, pool: &Pool) -> Result<FeatureMatrix> {
    let malformed = |line: usize, message: String| Error::MalformedRow {
        origin: origin.to_string(),
        line,
        message,
    };
    let mut lines = reader.lines().enumerate();
    let header: EmbeddingHeader = loop {
        match lines.next() {
            None => return Err(malformed(1, "missing emb-v1 header".into())),
            Some((i, line)) => {
                let line = line.map_err(|e| malformed(i + 1, e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line).map_err(|e| malformed(i + 1, format!("bad header: {e}")))?;
            }
        }
    };
    if header.format != EMBEDDING_FORMAT {
        return Err(malformed(
            1,
            format!("unsupported format `{}`, expected `{EMBEDDING_FORMAT}`", header.format),
        ));
    }
    let mut vectors: HashMap<String, Vec<f64>> = HashMap::new();
    for (i, line) in lines {
        let line = line.map_err(|e| malformed(i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: EmbeddingRow = serde_json::from_str(&line).map_err(|e| malformed(i + 1, e.to_string()))?;
        if row.vec.len() != header.dim {
            return Err(Error::DimensionMismatch {
                expected: header.dim,
                found: row.vec.len(),
            });
        }
        if row.vec.iter().any(|v| !v.is_finite()) {
            return Err(malformed(i + 1, format!("non-finite value in `{}`", row.id)));
        }
        if vectors.insert(row.id.clone(), row.vec).is_some() {
            return Err(Error::DuplicateId(row.id));
        }
    }
    let missing: Vec<String> = pool
        .documents()
        .iter()
        .filter(|d| !vectors.contains_key(&d.id))
        .map(|d| d.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingIds {
            what: format!("{origin} lacks embeddings"),
            ids: missing,
        });
    }
    let ids: Vec<String> = pool.documents().iter().map(|d| d.id.clone()).collect();
    let rows = ids.iter().map(|id| vectors.remove(id).expect("checked above")).collect();
    let mut matrix = FeatureMatrix::from_dense(ids, rows, SpaceTag::External)?;
    matrix.dim = header.dim;
    Ok(matrix)
}

/// Term index with document frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "VocabularyRepr", try_from = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    document_frequency: Vec<usize>,
    n_documents: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    format: String,
    n_documents: usize,
    terms: Vec<String>,
    document_frequency: Vec<usize>,
}

const VOCABULARY_FORMAT: &str = "vocab-v1";

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            format: VOCABULARY_FORMAT.to_string(),
            n_documents: v.n_documents,
            terms: v.terms,
            document_frequency: v.document_frequency,
        }
    }
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = Error;

    fn try_from(r: VocabularyRepr) -> Result<Self> {
        if r.format != VOCABULARY_FORMAT {
            return Err(Error::invalid(format!("unsupported vocabulary format `{}`", r.format)));
        }
        if r.terms.len() != r.document_frequency.len() {
            return Err(Error::invalid("vocabulary terms and frequencies differ in length"));
        }
        if r.document_frequency.iter().any(|&df| df == 0 || df > r.n_documents) {
            return Err(Error::invalid("document frequencies must lie in 1..=n_documents"));
        }
        let index = r.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect::<HashMap<_, _>>();
        if index.len() != r.terms.len() {
            return Err(Error::invalid("vocabulary repeats a term"));
        }
        Ok(Vocabulary {
            terms: r.terms,
            document_frequency: r.document_frequency,
            n_documents: r.n_documents,
            index,
        })
    }
}

impl Vocabulary {
    /// Keeps the `max_features` terms with the highest document frequency
    /// among those seen in at least `min_df` documents; ties go to the
    /// lexicographically smaller term. Indices follow lexicographic order.
    pub fn fit<'a, I>(texts: I, min_df: usize, max_features: Option<usize>) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if min_df == 0 {
            return Err(Error::invalid("min_df must be at least 1"));
        }
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut n_documents = 0;
        let mut any_tokens = false;
        for text in texts {
            n_documents += 1;
            let unique: HashSet<String> = tokens(text).into_iter().collect();
            any_tokens |= !unique.is_empty();
            for term in unique {
                *df.entry(term).or_default() += 1;
            }
        }
        if n_documents == 0 {
            return Err(Error::invalid("cannot fit a vocabulary on zero documents"));
        }
        if !any_tokens {
            return Err(Error::invalid("every document is empty after tokenization"));
        }
        let mut candidates: Vec<(String, usize)> = df.into_iter().filter(|&(_, c)| c >= min_df).collect();
        candidates.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if let Some(max) = max_features {
            candidates.truncate(max);
        }
        candidates.sort_by(|a, b| a.0.cmp(&b.0));
        let (terms, document_frequency): (Vec<_>, Vec<_>) = candidates.into_iter().unzip();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Vocabulary {
            terms,
            document_frequency,
            n_documents,
            index,
        })
    }

    pub fn fit_documents(docs: &[Document], min_df: usize, max_features: Option<usize>) -> Result<Self> {
        Self::fit(docs.iter().map(|d| d.text.as_str()), min_df, max_features)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn document_frequency(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.document_frequency[i])
    }

    pub fn idf(&self, index: usize) -> f64 {
        let n = self.n_documents as f64;
        let df = self.document_frequency[index] as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    pub fn transform_text(&self, text: &str) -> SparseVector {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for token in tokens(text) {
            if let Some(i) = self.index_of(&token) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(i, tf)| (i, tf * self.idf(i)))
            .collect();
        entries.sort_by_key(|&(i, _)| i);
        let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        let (indices, values) = entries
            .into_iter()
            .map(|(i, v)| (i as u32, if norm > 0.0 { v / norm } else { v }))
            .unzip();
        SparseVector { indices, values }
    }

    /// TF-IDF rows for `docs`, in the given order.
    pub fn transform(&self, docs: &[Document]) -> Result<FeatureMatrix> {
        let rows: Vec<SparseVector> = docs.par_iter().map(|d| self.transform_text(&d.text)).collect();
        let ids = docs.iter().map(|d| d.id.clone()).collect();
        FeatureMatrix::from_sparse(ids, self.len(), rows, SpaceTag::Tfidf)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }
}

/// Fits a vocabulary on every document of the pool and transforms them all.
pub fn tfidf_for_pool(pool: &Pool, min_df: usize, max_features: Option<usize>) -> Result<(Vocabulary, FeatureMatrix)> {
    let vocab = Vocabulary::fit_documents(pool.documents(), min_df, max_features)?;
    let matrix = vocab.transform(pool.documents())?;
    Ok((vocab, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn docs(texts: &[&str]) -> Vec<Document> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(format!("d{i}"), t))
            .collect()
    }

    #[test]
    fn fit_examples() {
        let texts = ["a b", "b c"];
        let v = Vocabulary::fit(texts, 1, None).unwrap();
        assert_eq!(v.terms(), ["a", "b", "c"]);
        assert_eq!(v.document_frequency("b"), Some(2));
        assert_eq!(Vocabulary::fit(texts, 2, None).unwrap().terms(), ["b"]);
        assert_eq!(Vocabulary::fit(texts, 1, Some(1)).unwrap().terms(), ["b"]);
        // Tie on df = 1 between a and c: lexicographic order keeps a.
        assert_eq!(Vocabulary::fit(texts, 1, Some(2)).unwrap().terms(), ["a", "b"]);
    }

    #[test]
    fn fit_errors() {
        assert!(Vocabulary::fit(["", "!!"], 1, None).is_err());
        assert!(Vocabulary::fit(Vec::<&str>::new(), 1, None).is_err());
        assert!(Vocabulary::fit(["a"], 0, None).is_err());
    }

    #[test]
    fn single_term_document_is_one_hot() {
        let corpus = docs(&["flood", "fire flood", "calm"]);
        let v = Vocabulary::fit_documents(&corpus, 1, None).unwrap();
        let m = v.transform(&docs(&["flood"])).unwrap();
        let row = m.row(0).to_dense(m.dim());
        assert_eq!(row, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn hand_computed_table() {
        // N = 3; df: a = 2, b = 2, c = 1.
        let corpus = docs(&["a a b", "b c", "a"]);
        let v = Vocabulary::fit_documents(&corpus, 1, None).unwrap();
        let m = v.transform(&corpus).unwrap();
        let idf_ab = (4.0f64 / 3.0).ln() + 1.0;
        let idf_c = 2.0f64.ln() + 1.0;
        let d0 = [2.0 * idf_ab, idf_ab, 0.0];
        let d1 = [0.0, idf_ab, idf_c];
        let norm = |v: &[f64; 3]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (row, raw) in [(0, d0), (1, d1)] {
            let got = m.row(row).to_dense(3);
            for k in 0..3 {
                assert!((got[k] - raw[k] / norm(&raw)).abs() < 1e-12);
            }
        }
        assert_eq!(m.row(2).to_dense(3), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn out_of_vocabulary_rows_are_zero_and_flagged() {
        let v = Vocabulary::fit(["flood"], 1, None).unwrap();
        let m = v.transform(&docs(&["sunshine", "flood"])).unwrap();
        assert_eq!(m.zero_rows(), ["d0"]);
        assert!((m.row(1).squared_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_examples() {
        let corpus = docs(&["flood river", "pizza night", "flood river"]);
        let v = Vocabulary::fit_documents(&corpus, 1, None).unwrap();
        let m = v.transform(&corpus).unwrap();
        assert!((cosine_similarity(m.row(0), m.row(0), m.dim()) - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(m.row(0), m.row(1), m.dim()), 0.0);
        assert_eq!(m.row(0).to_dense(m.dim()), m.row(2).to_dense(m.dim()));
    }

    fn pool_of(ids: &[&str]) -> Pool {
        Pool::from_documents(ids.iter().map(|id| Document::new(*id, "x")).collect(), false).unwrap()
    }

    #[test]
    fn import_reads_matching_rows() {
        let file = "{\"format\":\"emb-v1\",\"dim\":4}\n\
                    {\"id\":\"a\",\"vec\":[1,2,3,4]}\n\
                    {\"id\":\"b\",\"vec\":[0,0,0,0]}\n\
                    {\"id\":\"c\",\"vec\":[0.5,-1,2,1e-3]}\n\
                    {\"id\":\"extra\",\"vec\":[9,9,9,9]}\n";
        let m = read_embeddings(Cursor::new(file), "e.jsonl", &pool_of(&["a", "b", "c"])).unwrap();
        assert_eq!((m.len(), m.dim()), (3, 4));
        assert_eq!(m.space(), SpaceTag::External);
        assert_eq!(m.row_by_id("c").unwrap().to_dense(4), vec![0.5, -1.0, 2.0, 1e-3]);
    }

    #[test]
    fn import_names_missing_ids() {
        let file = "{\"format\":\"emb-v1\",\"dim\":2}\n{\"id\":\"a\",\"vec\":[1,2]}\n";
        let err = read_embeddings(Cursor::new(file), "e.jsonl", &pool_of(&["a", "ghost"])).unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");
    }

    #[test]
    fn import_rejects_bad_dims_and_formats() {
        let bad_dim = "{\"format\":\"emb-v1\",\"dim\":2}\n{\"id\":\"a\",\"vec\":[1,2,3]}\n";
        assert!(matches!(
            read_embeddings(Cursor::new(bad_dim), "e", &pool_of(&["a"])),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
        let bad_format = "{\"format\":\"emb-v0\",\"dim\":2}\n";
        assert!(read_embeddings(Cursor::new(bad_format), "e", &pool_of(&["a"])).is_err());
    }

    #[test]
    fn vocabulary_json_round_trip() {
        let v = Vocabulary::fit(["a b", "b c"], 1, None).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<Vocabulary>(&json).unwrap(), v);
    }

    proptest! {
        #[test]
        fn nonzero_rows_have_unit_norm(texts in prop::collection::vec("[a-e ]{0,20}", 1..8)) {
            let corpus: Vec<Document> = texts
                .iter()
                .enumerate()
                .map(|(i, t)| Document { id: format!("d{i}"), text: t.clone(), lang: "und".into(), gold_label: None, source: String::new() })
                .collect();
            if let Ok(v) = Vocabulary::fit_documents(&corpus, 1, None) {
                let m = v.transform(&corpus).unwrap();
                let again = v.transform(&corpus).unwrap();
                prop_assert_eq!(&m, &again);
                for i in 0..m.len() {
                    let n = m.row(i).squared_norm();
                    prop_assert!(n == 0.0 || (n.sqrt() - 1.0).abs() < 1e-6);
                }
            }
        }

        #[test]
        fn embeddings_round_trip(values in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..6)) {
            let ids: Vec<String> = (0..values.len()).map(|i| format!("id{i}")).collect();
            let pool = Pool::from_documents(ids.iter().map(|id| Document::new(id.clone(), "t")).collect(), false).unwrap();
            let m = FeatureMatrix::from_dense(ids, values.clone(), SpaceTag::External).unwrap();
            let mut buf = Vec::new();
            m.write_embeddings(&mut buf).unwrap();
            let back = read_embeddings(Cursor::new(buf), "mem", &pool).unwrap();
            for (i, row) in values.iter().enumerate() {
                for (a, b) in back.row(i).to_dense(3).iter().zip(row) {
                    prop_assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
                }
            }
        }
    }
}

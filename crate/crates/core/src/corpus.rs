//! Document collections: ingestion, label mapping, keyword pre-filtering,
//! stratified splitting and persistence.
//!
//! A [`Pool`] is immutable once built. Every operation that changes
//! membership returns a new pool.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::filter::{match_exact, KeywordList};

/// Binary relevance label. The integer codes are fixed: 0 = unrelated, 1 = related.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Unrelated = 0,
    Related = 1,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Unrelated, Label::Related];

    pub fn from_related(related: bool) -> Self {
        if related {
            Label::Related
        } else {
            Label::Unrelated
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn is_related(self) -> bool {
        self == Label::Related
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Unrelated => "unrelated",
            Label::Related => "related",
        }
    }

    pub fn flipped(self) -> Self {
        Label::from_related(!self.is_related())
    }
}

impl From<Label> for u8 {
    fn from(label: Label) -> u8 {
        label.code()
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(code: u8) -> std::result::Result<Self, Self::Error> {
        match code {
            0 => Ok(Label::Unrelated),
            1 => Ok(Label::Related),
            other => Err(format!("label code must be 0 or 1, got {other}")),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "0" | "unrelated" => Ok(Label::Unrelated),
            "1" | "related" => Ok(Label::Related),
            other => Err(Error::invalid(format!("unknown label `{other}`"))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub lang: String,
    #[serde(rename = "label")]
    pub gold_label: Option<Label>,
    pub source: String,
}

impl Document {
    /// Builds a document with the same normalization ingestion applies.
    pub fn new(id: impl Into<String>, text: impl AsRef<str>) -> Self {
        Document {
            id: id.into(),
            text: normalize_text(text.as_ref()),
            lang: "und".to_string(),
            gold_label: None,
            source: String::new(),
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.gold_label = Some(label);
        self
    }

    pub fn with_lang(mut self, lang: impl AsRef<str>) -> Self {
        self.lang = normalize_lang(Some(lang.as_ref()));
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }
}

/// NFC, outer whitespace trimmed, inner casing kept.
pub fn normalize_text(text: &str) -> String {
    text.nfc().collect::<String>().trim().to_string()
}

fn normalize_lang(lang: Option<&str>) -> String {
    match lang.map(str::trim) {
        Some(l) if !l.is_empty() => l.to_lowercase(),
        _ => "und".to_string(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingTarget {
    Related,
    Unrelated,
    Drop,
}

impl MappingTarget {
    pub fn label(self) -> Option<Label> {
        match self {
            MappingTarget::Related => Some(Label::Related),
            MappingTarget::Unrelated => Some(Label::Unrelated),
            MappingTarget::Drop => None,
        }
    }
}

impl FromStr for MappingTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "related" | "1" => Ok(MappingTarget::Related),
            "unrelated" | "0" => Ok(MappingTarget::Unrelated),
            "drop" | "-" => Ok(MappingTarget::Drop),
            other => Err(Error::invalid(format!(
                "mapping target must be related, unrelated or drop, got `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub scheme: String,
    pub source: String,
    pub target: MappingTarget,
}

/// Translates labels of an external annotation scheme into [`Label`]s.
///
/// Lookups ignore case and outer whitespace in both scheme and label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelMapping {
    entries: Vec<MappingEntry>,
    lookup: HashMap<(String, String), MappingTarget>,
}

fn mapping_key(scheme: &str, source: &str) -> (String, String) {
    (scheme.trim().to_lowercase(), source.trim().to_lowercase())
}

impl LabelMapping {
    pub fn new(entries: Vec<MappingEntry>) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(entries.len());
        for entry in &entries {
            let key = mapping_key(&entry.scheme, &entry.source);
            if lookup.insert(key, entry.target).is_some() {
                return Err(Error::invalid(format!(
                    "mapping lists ({}, {}) more than once",
                    entry.scheme, entry.source
                )));
            }
        }
        Ok(LabelMapping { entries, lookup })
    }

    /// The CrisisLexT6 / CrisisLexT26 relabelling used to curate generic training data.
    pub fn crisislex() -> Self {
        let entry = |scheme: &str, source: &str, target| MappingEntry {
            scheme: scheme.to_string(),
            source: source.to_string(),
            target,
        };
        LabelMapping::new(vec![
            entry("CrisisLexT6", "on-topic", MappingTarget::Related),
            entry("CrisisLexT6", "off-topic", MappingTarget::Unrelated),
            entry("CrisisLexT26", "Related and informative", MappingTarget::Related),
            entry("CrisisLexT26", "Related - but not informative", MappingTarget::Related),
            entry("CrisisLexT26", "Not related", MappingTarget::Unrelated),
            entry("CrisisLexT26", "Not applicable", MappingTarget::Drop),
        ])
        .expect("builtin mapping has unique keys")
    }

    /// Reads a `scheme,source,target` CSV.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, &path.display().to_string())
    }

    pub fn from_csv_reader<R: Read>(reader: R, origin: &str) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = csv
            .headers()
            .map_err(|e| malformed(origin, 1, e.to_string()))?
            .iter()
            .map(str::to_lowercase)
            .collect::<Vec<_>>();
        if headers != ["scheme", "source", "target"] {
            return Err(malformed(
                origin,
                1,
                format!("expected header `scheme,source,target`, got `{}`", headers.join(",")),
            ));
        }
        let mut entries = Vec::new();
        for record in csv.records() {
            let record = record.map_err(|e| csv_error(origin, &e))?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let target = record[2]
                .parse::<MappingTarget>()
                .map_err(|e| malformed(origin, line, e.to_string()))?;
            entries.push(MappingEntry {
                scheme: record[0].to_string(),
                source: record[1].to_string(),
                target,
            });
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[MappingEntry] {
        &self.entries
    }

    pub fn get(&self, scheme: &str, source: &str) -> Option<MappingTarget> {
        self.lookup.get(&mapping_key(scheme, source)).copied()
    }

    pub fn schemes(&self) -> BTreeSet<String> {
        self.entries.iter().map(|e| e.scheme.clone()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guesses from the file extension; anything but `.csv` is JSON-lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::invalid(format!("unknown corpus format `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IngestOptions {
    pub format: CorpusFormat,
    pub mapping: Option<LabelMapping>,
    /// Scheme for rows that carry none of their own.
    pub scheme: Option<String>,
    /// Place gold-labeled documents in the test partition instead of the unlabeled one.
    pub as_test: bool,
}

impl IngestOptions {
    pub fn new(format: CorpusFormat) -> Self {
        IngestOptions {
            format,
            mapping: None,
            scheme: None,
            as_test: false,
        }
    }

    pub fn with_mapping(mut self, mapping: LabelMapping) -> Self {
        self.mapping = Some(mapping);
        self
    }

    pub fn with_scheme(mut self, scheme: impl Into<String>) -> Self {
        self.scheme = Some(scheme.into());
        self
    }

    pub fn as_test(mut self, as_test: bool) -> Self {
        self.as_test = as_test;
        self
    }
}

/// One row before label resolution.
struct RawRow {
    line: usize,
    id: String,
    text: String,
    lang: Option<String>,
    label: Option<String>,
    source: Option<String>,
    scheme: Option<String>,
}

#[derive(Deserialize)]
struct JsonRow {
    id: serde_json::Value,
    text: String,
    #[serde(default)]
    lang: Option<String>,
    #[serde(default)]
    label: Option<serde_json::Value>,
    #[serde(default)]
    source: Option<String>,
    #[serde(default)]
    scheme: Option<String>,
}

fn malformed(origin: &str, line: usize, message: impl Into<String>) -> Error {
    Error::MalformedRow {
        origin: origin.to_string(),
        line,
        message: message.into(),
    }
}

fn csv_error(origin: &str, err: &csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line() as usize);
    malformed(origin, line, err.to_string())
}

pub fn ingest(path: impl AsRef<Path>, options: &IngestOptions) -> Result<Pool> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(BufReader::new(file), &path.display().to_string(), options)
}

/// Ingests from any reader; `origin` names the input in diagnostics.
pub fn ingest_reader<R: BufRead>(reader: R, origin: &str, options: &IngestOptions) -> Result<Pool> {
    let rows = match options.format {
        CorpusFormat::Jsonl => read_jsonl_rows(reader, origin)?,
        CorpusFormat::Csv => read_csv_rows(reader, origin)?,
    };
    let documents = admit_rows(rows, origin, options)?;
    Pool::from_documents(documents, options.as_test)
}

fn read_jsonl_rows<R: BufRead>(reader: R, origin: &str) -> Result<Vec<RawRow>> {
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| malformed(origin, line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonRow =
            serde_json::from_str(&line).map_err(|e| malformed(origin, line_no, e.to_string()))?;
        let id = match row.id {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(malformed(origin, line_no, format!("id must be a string, got {other}"))),
        };
        let label = match row.label {
            None | Some(serde_json::Value::Null) => None,
            Some(serde_json::Value::String(s)) => Some(s),
            Some(serde_json::Value::Number(n)) => Some(n.to_string()),
            Some(serde_json::Value::Bool(b)) => Some(u8::from(b).to_string()),
            Some(other) => {
                return Err(malformed(origin, line_no, format!("unsupported label value {other}")))
            }
        };
        rows.push(RawRow {
            line: line_no,
            id,
            text: row.text,
            lang: row.lang,
            label,
            source: row.source,
            scheme: row.scheme,
        });
    }
    Ok(rows)
}

fn read_csv_rows<R: Read>(reader: R, origin: &str) -> Result<Vec<RawRow>> {
    let mut csv = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = match csv.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(csv_error(origin, &e)),
    };
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let column = |names: &[&str]| {
        headers
            .iter()
            .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
    };
    let id_col = column(&["id", "tweet id", "tweet_id"]);
    let text_col = column(&["text", "tweet", "tweet text"]);
    let (Some(id_col), Some(text_col)) = (id_col, text_col) else {
        return Err(malformed(origin, 1, "csv header must name at least `id` and `text`"));
    };
    let lang_col = column(&["lang", "language"]);
    let label_col = column(&["label", "informativeness"]);
    let source_col = column(&["source"]);
    let scheme_col = column(&["scheme"]);

    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| csv_error(origin, &e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |col: Option<usize>| {
            col.and_then(|c| record.get(c))
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(str::to_string)
        };
        rows.push(RawRow {
            line,
            id: record.get(id_col).unwrap_or_default().to_string(),
            text: record.get(text_col).unwrap_or_default().to_string(),
            lang: field(lang_col),
            label: field(label_col),
            source: field(source_col),
            scheme: field(scheme_col),
        });
    }
    Ok(rows)
}

fn admit_rows(rows: Vec<RawRow>, origin: &str, options: &IngestOptions) -> Result<Vec<Document>> {
    let mut seen = HashSet::with_capacity(rows.len());
    let mut unmapped = BTreeSet::new();
    let mut documents = Vec::with_capacity(rows.len());
    let single_scheme = options.mapping.as_ref().and_then(|m| {
        let schemes = m.schemes();
        (schemes.len() == 1).then(|| schemes.into_iter().next().unwrap())
    });

    for row in rows {
        let id = row.id.trim().to_string();
        if id.is_empty() {
            return Err(malformed(origin, row.line, "empty id"));
        }
        let text = normalize_text(&row.text);
        if text.is_empty() {
            return Err(malformed(origin, row.line, format!("document `{id}` has empty text")));
        }
        let gold_label = match (&options.mapping, row.label.as_deref().map(str::trim)) {
            (_, None) | (_, Some("")) => None,
            (None, Some(raw)) => Some(
                raw.parse::<Label>()
                    .map_err(|e| malformed(origin, row.line, e.to_string()))?,
            ),
            (Some(mapping), Some(raw)) => {
                let scheme = row
                    .scheme
                    .clone()
                    .or_else(|| options.scheme.clone())
                    .or_else(|| single_scheme.clone())
                    .ok_or_else(|| {
                        malformed(origin, row.line, "cannot tell which mapping scheme applies")
                    })?;
                match mapping.get(&scheme, raw) {
                    Some(target) => match target.label() {
                        Some(label) => Some(label),
                        None => continue,
                    },
                    None => {
                        unmapped.insert(format!("{scheme}/{raw}"));
                        continue;
                    }
                }
            }
        };
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        documents.push(Document {
            id,
            text,
            lang: normalize_lang(row.lang.as_deref()),
            gold_label,
            source: row.source.unwrap_or_default(),
        });
    }
    if !unmapped.is_empty() {
        return Err(Error::UnmappedLabels(unmapped.into_iter().collect()));
    }
    Ok(documents)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledId {
    pub id: String,
    pub label: Label,
}

impl LabeledId {
    pub fn new(id: impl Into<String>, label: Label) -> Self {
        LabeledId { id: id.into(), label }
    }
}

#[derive(Serialize, Deserialize)]
struct PoolRepr {
    documents: Vec<Document>,
    labeled: Vec<LabeledId>,
    unlabeled: Vec<String>,
    test: Vec<LabeledId>,
}

/// A corpus partitioned into labeled, unlabeled and test ids.
///
/// Documents outside all three partitions are allowed; they are carried
/// along but never queried or evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PoolRepr", try_from = "PoolRepr")]
pub struct Pool {
    documents: Vec<Document>,
    labeled: Vec<LabeledId>,
    unlabeled: Vec<String>,
    test: Vec<LabeledId>,
    index: HashMap<String, usize>,
}

impl From<Pool> for PoolRepr {
    fn from(pool: Pool) -> Self {
        PoolRepr {
            documents: pool.documents,
            labeled: pool.labeled,
            unlabeled: pool.unlabeled,
            test: pool.test,
        }
    }
}

impl TryFrom<PoolRepr> for Pool {
    type Error = Error;

    fn try_from(repr: PoolRepr) -> Result<Self> {
        Pool::new(repr.documents, repr.labeled, repr.unlabeled, repr.test)
    }
}

impl Pool {
    pub fn new(
        documents: Vec<Document>,
        labeled: Vec<LabeledId>,
        unlabeled: Vec<String>,
        test: Vec<LabeledId>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(documents.len());
        for (i, doc) in documents.iter().enumerate() {
            if doc.id.is_empty() {
                return Err(Error::invalid("document with empty id"));
            }
            if doc.text.trim().is_empty() {
                return Err(Error::invalid(format!("document `{}` has empty text", doc.id)));
            }
            if index.insert(doc.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
        }
        let mut seen = HashSet::new();
        let all_ids = labeled
            .iter()
            .map(|l| &l.id)
            .chain(unlabeled.iter())
            .chain(test.iter().map(|l| &l.id));
        let mut missing = Vec::new();
        for id in all_ids {
            if !index.contains_key(id) {
                missing.push(id.clone());
            }
            if !seen.insert(id) {
                return Err(Error::invalid(format!("id `{id}` appears in more than one partition slot")));
            }
        }
        if !missing.is_empty() {
            return Err(Error::MissingIds {
                what: "partition ids without a document".into(),
                ids: missing,
            });
        }
        Ok(Pool {
            documents,
            labeled,
            unlabeled,
            test,
            index,
        })
    }

    pub fn empty() -> Self {
        Pool::from_documents(Vec::new(), false).expect("empty pool is valid")
    }

    /// Every document goes to the unlabeled partition, or with `as_test`,
    /// gold-labeled documents go to the test partition.
    pub fn from_documents(documents: Vec<Document>, as_test: bool) -> Result<Self> {
        let mut unlabeled = Vec::new();
        let mut test = Vec::new();
        for doc in &documents {
            match (as_test, doc.gold_label) {
                (true, Some(label)) => test.push(LabeledId::new(doc.id.clone(), label)),
                _ => unlabeled.push(doc.id.clone()),
            }
        }
        Pool::new(documents, Vec::new(), unlabeled, test)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.index.get(id).map(|&i| &self.documents[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn labeled(&self) -> &[LabeledId] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[String] {
        &self.unlabeled
    }

    pub fn test(&self) -> &[LabeledId] {
        &self.test
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Gold labels of every document that has one.
    pub fn gold_labels(&self) -> BTreeMap<String, Label> {
        self.documents
            .iter()
            .filter_map(|d| d.gold_label.map(|l| (d.id.clone(), l)))
            .collect()
    }

    pub fn test_labels(&self) -> BTreeMap<String, Label> {
        self.test.iter().map(|l| (l.id.clone(), l.label)).collect()
    }

    /// SHA-256 over the canonical JSON-lines form of the documents.
    ///
    /// Partitions are not part of the digest.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for doc in &self.documents {
            let line = serde_json::to_vec(&DocumentLine::from(doc)).expect("document serializes");
            hasher.update(&line);
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    /// Keeps documents whose text contains any keyword, ignoring case.
    pub fn prefilter(&self, keywords: &KeywordList) -> Pool {
        self.retain(|doc| match_exact(&doc.text, keywords))
    }

    /// Keeps the first document for every distinct text.
    pub fn dedup_texts(&self) -> Pool {
        let mut seen = HashSet::new();
        let keep: HashSet<&str> = self
            .documents
            .iter()
            .filter(|d| seen.insert(d.text.as_str()))
            .map(|d| d.id.as_str())
            .collect();
        self.retain(|doc| keep.contains(doc.id.as_str()))
    }

    /// Moves a stratified, seeded sample of gold-labeled unlabeled documents
    /// into the test partition.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<Pool> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "test fraction must lie in (0, 1), got {test_fraction}"
            )));
        }
        let mut by_class: [Vec<&str>; 2] = [Vec::new(), Vec::new()];
        for id in &self.unlabeled {
            if let Some(label) = self.get(id).and_then(|d| d.gold_label) {
                by_class[label.code() as usize].push(id);
            }
        }
        let sizes = [by_class[0].len(), by_class[1].len()];
        let quotas = stratified_quotas(sizes, test_fraction)?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chosen = HashSet::new();
        for (class, ids) in by_class.iter_mut().enumerate() {
            ids.shuffle(&mut rng);
            chosen.extend(ids.iter().take(quotas[class]).map(|s| s.to_string()));
        }

        let mut test = self.test.clone();
        let mut unlabeled = Vec::with_capacity(self.unlabeled.len());
        for id in &self.unlabeled {
            if chosen.contains(id) {
                let label = self.get(id).and_then(|d| d.gold_label).expect("chosen ids are gold-labeled");
                test.push(LabeledId::new(id.clone(), label));
            } else {
                unlabeled.push(id.clone());
            }
        }
        Pool::new(self.documents.clone(), self.labeled.clone(), unlabeled, test)
    }

    /// Randomly drops gold-labeled unlabeled documents of the majority class
    /// until both classes are equally represented.
    pub fn balance(&self, seed: u64) -> Result<Pool> {
        let mut by_class: [Vec<&str>; 2] = [Vec::new(), Vec::new()];
        for id in &self.unlabeled {
            if let Some(label) = self.get(id).and_then(|d| d.gold_label) {
                by_class[label.code() as usize].push(id);
            }
        }
        let target = by_class[0].len().min(by_class[1].len());
        if target == 0 {
            return Err(Error::invalid("balancing needs gold-labeled documents of both classes"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dropped = HashSet::new();
        for ids in by_class.iter_mut() {
            ids.shuffle(&mut rng);
            dropped.extend(ids.iter().skip(target).map(|s| s.to_string()));
        }
        Ok(self.retain(|doc| !dropped.contains(&doc.id)))
    }

    /// Keeps a seeded uniform sample of `limit` unlabeled documents, leaving
    /// the labeled and test partitions untouched.
    pub fn subsample_unlabeled(&self, limit: usize, seed: u64) -> Pool {
        if self.unlabeled.len() <= limit {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kept: HashSet<&String> = self.unlabeled.choose_multiple(&mut rng, limit).collect();
        let dropped: HashSet<String> = self
            .unlabeled
            .iter()
            .filter(|id| !kept.contains(id))
            .cloned()
            .collect();
        self.retain(|doc| !dropped.contains(&doc.id))
    }

    /// Keeps documents satisfying `keep`, preserving partition membership.
    fn retain(&self, keep: impl Fn(&Document) -> bool) -> Pool {
        let documents: Vec<Document> = self.documents.iter().filter(|d| keep(d)).cloned().collect();
        let kept: HashSet<&str> = documents.iter().map(|d| d.id.as_str()).collect();
        let labeled = self.labeled.iter().filter(|l| kept.contains(l.id.as_str())).cloned().collect();
        let unlabeled = self.unlabeled.iter().filter(|id| kept.contains(id.as_str())).cloned().collect();
        let test = self.test.iter().filter(|l| kept.contains(l.id.as_str())).cloned().collect();
        Pool::new(documents, labeled, unlabeled, test).expect("subset of a valid pool is valid")
    }

    /// Appends the gold-labeled documents of `test` as the test partition.
    /// Documents of `test` without a gold label are dropped.
    pub fn with_test_set(&self, test: &Pool) -> Result<Pool> {
        let mut documents = self.documents.clone();
        let mut partition = self.test.clone();
        for doc in &test.documents {
            if let Some(label) = doc.gold_label {
                documents.push(doc.clone());
                partition.push(LabeledId::new(doc.id.clone(), label));
            }
        }
        if partition.is_empty() {
            return Err(Error::invalid("test set has no gold-labeled documents"));
        }
        Pool::new(documents, self.labeled.clone(), self.unlabeled.clone(), partition)
    }

    /// Writes the documents as canonical JSON-lines.
    pub fn write_jsonl<W: Write>(&self, writer: W) -> Result<()> {
        let mut writer = BufWriter::new(writer);
        for doc in &self.documents {
            serde_json::to_writer(&mut writer, &DocumentLine::from(doc))?;
            writer.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
        }
        writer.flush().map_err(|e| Error::io("<writer>", e))
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_jsonl(file)
    }
}

/// Per-class test counts: the total rounds `fraction * n`, is split by
/// largest remainder, and every class with two or more members gets at least one.
fn stratified_quotas(sizes: [usize; 2], fraction: f64) -> Result<[usize; 2]> {
    let n = sizes[0] + sizes[1];
    if n < 2 {
        return Err(Error::invalid(format!(
            "splitting needs at least 2 gold-labeled unlabeled documents, found {n}"
        )));
    }
    let mut total = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let eligible = sizes.iter().filter(|&&s| s >= 2).count();
    total = total.max(eligible.min(n - 1));

    let exact = sizes.map(|s| total as f64 * s as f64 / n as f64);
    let mut quotas = exact.map(|e| e.floor() as usize);
    let mut remaining = total - quotas[0] - quotas[1];
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &class in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        if quotas[class] < sizes[class] {
            quotas[class] += 1;
            remaining -= 1;
        }
    }
    for class in 0..2 {
        let other = 1 - class;
        if sizes[class] >= 2 && quotas[class] == 0 && quotas[other] > 1 {
            quotas[class] += 1;
            quotas[other] -= 1;
        }
    }
    Ok(quotas)
}

/// Canonical exchange form of a document.
#[derive(Serialize)]
struct DocumentLine<'a> {
    id: &'a str,
    text: &'a str,
    lang: &'a str,
    label: Option<Label>,
    source: &'a str,
}

impl<'a> From<&'a Document> for DocumentLine<'a> {
    fn from(doc: &'a Document) -> Self {
        DocumentLine {
            id: &doc.id,
            text: &doc.text,
            lang: &doc.lang,
            label: doc.gold_label,
            source: &doc.source,
        }
    }
}

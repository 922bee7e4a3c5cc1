//! Input resolution and output writing shared by the subcommands.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crisis_al_core::corpus::{ingest, CorpusFormat, IngestOptions};
use crisis_al_core::{KeywordList, LabelMapping, Pool};

/// A required input path does not exist. Reported with exit code 2.
#[derive(Debug)]
pub struct MissingInput(pub PathBuf);

impl fmt::Display for MissingInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "input file not found: {}", self.0.display())
    }
}

impl std::error::Error for MissingInput {}

pub fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(MissingInput(path.to_path_buf()).into());
    }
    Ok(())
}

#[derive(Clone, Debug, Default)]
pub struct CorpusSource {
    pub format: Option<CorpusFormat>,
    pub mapping: Option<LabelMapping>,
    pub scheme: Option<String>,
}

pub fn load_corpus(path: &Path, source: &CorpusSource) -> Result<Pool> {
    require_file(path)?;
    let mut options = IngestOptions::new(source.format.unwrap_or_else(|| CorpusFormat::from_path(path)));
    if let Some(mapping) = &source.mapping {
        options = options.with_mapping(mapping.clone());
    }
    if let Some(scheme) = &source.scheme {
        options = options.with_scheme(scheme.clone());
    }
    ingest(path, &options).with_context(|| format!("reading corpus {}", path.display()))
}

/// Plain corpus with format guessed from the extension and no label mapping.
pub fn load_plain_corpus(path: &Path) -> Result<Pool> {
    load_corpus(path, &CorpusSource::default())
}

pub fn load_keywords(file: Option<&Path>, builtin: Option<&str>) -> Result<KeywordList> {
    match (file, builtin) {
        (Some(path), None) => {
            require_file(path)?;
            KeywordList::from_file(path).with_context(|| format!("reading keywords {}", path.display()))
        }
        (None, Some(name)) => match KeywordList::builtin(name) {
            Some(list) => Ok(list),
            None => bail!("unknown builtin keyword list `{name}` (crisislex, germany-flood, chile-forest-fires, chile-prefilter)"),
        },
        _ => bail!("give exactly one of --keywords or --builtin-keywords"),
    }
}

/// Writes `contents`, creating missing parent directories.
pub fn write_output(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_output(path, bytes)
}

/// `out.jsonl` with suffix `report.json` becomes `out.report.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

//! Session registry and its on-disk layout.
//!
//! ```text
//! <data_dir>/corpora/<name>.jsonl        uploaded or hand-placed corpora
//! <data_dir>/embeddings/<name>.jsonl     embedding files for external features
//! <data_dir>/sessions/<id>/handle.json   SessionHandle
//! <data_dir>/sessions/<id>/pool.json     the partitioned pool the session runs on
//! <data_dir>/sessions/<id>/checkpoint.json
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use chrono::Utc;
use tokio::sync::Mutex;

use crisis_al_core::corpus::{ingest, ingest_reader, CorpusFormat, IngestOptions};
use crisis_al_core::engine::{FeatureSource, Session};
use crisis_al_core::features::{import_embeddings, FeatureMatrix};
use crisis_al_core::Pool;

use crate::api::{CorpusInfo, CreateSession, SessionHandle};
use crate::error::{ApiError, ApiResult, ServiceError};

/// One live session. Reads take the `session` lock briefly; transitions
/// also hold `transition` for their whole duration.
#[derive(Debug)]
pub struct SessionEntry {
    pub handle: RwLock<SessionHandle>,
    pub session: RwLock<Session>,
    pub transition: Mutex<()>,
}

impl SessionEntry {
    fn new(handle: SessionHandle, session: Session) -> Self {
        SessionEntry {
            handle: RwLock::new(handle),
            session: RwLock::new(session),
            transition: Mutex::new(()),
        }
    }

    pub fn handle(&self) -> SessionHandle {
        self.handle.read().expect("handle lock poisoned").clone()
    }

    pub fn snapshot(&self) -> Session {
        self.session.read().expect("session lock poisoned").clone()
    }
}

#[derive(Debug)]
pub struct Store {
    data_dir: PathBuf,
    sessions: RwLock<HashMap<String, Arc<SessionEntry>>>,
}

/// Corpus and embedding names double as file names.
pub fn check_name(name: &str) -> ApiResult<()> {
    let ok = !name.is_empty()
        && name.len() <= 128
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(ApiError::BadRequest(format!(
            "invalid name `{name}`: use letters, digits, `-`, `_` and `.`"
        )))
    }
}

fn internal(context: &str, err: impl std::fmt::Display) -> ApiError {
    ApiError::Internal(format!("{context}: {err}"))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> ApiResult<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| internal(&tmp.display().to_string(), e))?;
    fs::rename(&tmp, path).map_err(|e| internal(&path.display().to_string(), e))
}

impl Store {
    /// Opens `data_dir`, creating its layout, and reloads every persisted session.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let data_dir = data_dir.into();
        for sub in ["corpora", "embeddings", "sessions"] {
            let path = data_dir.join(sub);
            fs::create_dir_all(&path).map_err(|source| ServiceError::Io { path, source })?;
        }
        let store = Store {
            data_dir,
            sessions: RwLock::new(HashMap::new()),
        };
        let mut loaded = HashMap::new();
        let dir = store.data_dir.join("sessions");
        let io = |source| ServiceError::Io { path: dir.clone(), source };
        for entry in fs::read_dir(&dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if !path.is_dir() {
                continue;
            }
            match store.load_session(&path) {
                Ok((handle, session)) => {
                    loaded.insert(handle.session_id.clone(), Arc::new(SessionEntry::new(handle, session)));
                }
                Err(e) => tracing::warn!(path = %path.display(), error = %e, "skipping unreadable session"),
            }
        }
        tracing::info!(sessions = loaded.len(), dir = %store.data_dir.display(), "store opened");
        *store.sessions.write().expect("registry lock poisoned") = loaded;
        Ok(store)
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    fn corpus_path(&self, name: &str) -> PathBuf {
        self.data_dir.join("corpora").join(format!("{name}.jsonl"))
    }

    fn embeddings_path(&self, name: &str) -> PathBuf {
        self.data_dir.join("embeddings").join(format!("{name}.jsonl"))
    }

    fn session_dir(&self, id: &str) -> PathBuf {
        self.data_dir.join("sessions").join(id)
    }

    fn load_session(&self, dir: &Path) -> Result<(SessionHandle, Session), String> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))
        };
        let mut handle: SessionHandle = serde_json::from_slice(&read("handle.json")?).map_err(|e| e.to_string())?;
        let pool: Pool = serde_json::from_slice(&read("pool.json")?).map_err(|e| e.to_string())?;
        let pool = Arc::new(pool);
        let external = self.external_features(&handle.config.feature_source, self.embeddings_ref(dir)?, &pool)
            .map_err(|e| e.to_string())?;
        let session = Session::resume(dir.join("checkpoint.json"), pool, external).map_err(|e| e.to_string())?;
        handle.status = session.phase();
        Ok((handle, session))
    }

    fn embeddings_ref(&self, dir: &Path) -> Result<Option<String>, String> {
        let path = dir.join("embeddings.txt");
        match fs::read_to_string(&path) {
            Ok(name) => Ok(Some(name.trim().to_string())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(format!("{}: {e}", path.display())),
        }
    }

    fn external_features(&self, source: &FeatureSource, embeddings: Option<String>, pool: &Pool) -> ApiResult<Option<FeatureMatrix>> {
        match (source, embeddings) {
            (FeatureSource::Tfidf, None) => Ok(None),
            (FeatureSource::Tfidf, Some(_)) => Err(ApiError::BadRequest(
                "embeddings given but feature_source is tfidf".into(),
            )),
            (FeatureSource::External, None) => Err(ApiError::BadRequest(
                "feature_source external needs `embeddings`".into(),
            )),
            (FeatureSource::External, Some(name)) => {
                check_name(&name)?;
                let path = self.embeddings_path(&name);
                if !path.is_file() {
                    return Err(ApiError::NotFound(format!("unknown embeddings `{name}`")));
                }
                Ok(Some(import_embeddings(&path, pool)?))
            }
        }
    }

    pub fn list_corpora(&self) -> ApiResult<Vec<CorpusInfo>> {
        let dir = self.data_dir.join("corpora");
        let mut names: Vec<String> = fs::read_dir(&dir)
            .map_err(|e| internal(&dir.display().to_string(), e))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().to_string_lossy().into_owned();
                name.strip_suffix(".jsonl").map(str::to_string)
            })
            .collect();
        names.sort();
        names
            .into_iter()
            .map(|name| {
                let pool = self.load_corpus(&name)?;
                Ok(CorpusInfo {
                    documents: pool.len(),
                    gold_labeled: pool.gold_labels().len(),
                    name,
                })
            })
            .collect()
    }

    pub fn load_corpus(&self, name: &str) -> ApiResult<Pool> {
        check_name(name)?;
        let path = self.corpus_path(name);
        if !path.is_file() {
            return Err(ApiError::NotFound(format!("unknown corpus `{name}`")));
        }
        Ok(ingest(&path, &IngestOptions::new(CorpusFormat::Jsonl))?)
    }

    /// Validates a JSONL corpus and stores it in canonical form.
    pub fn put_corpus(&self, name: &str, body: &[u8]) -> ApiResult<CorpusInfo> {
        check_name(name)?;
        let pool = ingest_reader(Cursor::new(body), name, &IngestOptions::new(CorpusFormat::Jsonl))?;
        let mut canonical = Vec::new();
        pool.write_jsonl(&mut canonical)?;
        write_atomic(&self.corpus_path(name), &canonical)?;
        Ok(CorpusInfo {
            name: name.to_string(),
            documents: pool.len(),
            gold_labeled: pool.gold_labels().len(),
        })
    }

    /// Builds the session pool: corpus, test partition, optional embeddings.
    fn session_pool(&self, request: &CreateSession) -> ApiResult<Pool> {
        let corpus = self.load_corpus(&request.corpus)?;
        match (&request.test_corpus, &request.split) {
            (Some(_), Some(_)) => Err(ApiError::BadRequest("give either `test_corpus` or `split`, not both".into())),
            (Some(test_name), None) => Ok(corpus.with_test_set(&self.load_corpus(test_name)?)?),
            (None, split) => {
                let split = split.clone().unwrap_or_default();
                Ok(corpus.split(split.test_fraction, split.seed.unwrap_or(request.config.seed))?)
            }
        }
    }

    /// Creates and persists a session; CPU-bound, call from a blocking task.
    pub fn create_session(&self, request: CreateSession) -> ApiResult<SessionHandle> {
        request
            .config
            .validate_interactive()
            .map_err(|e| ApiError::BadRequest(e.to_string()))?;
        let pool = Arc::new(self.session_pool(&request)?);
        let external = self.external_features(&request.config.feature_source, request.embeddings.clone(), &pool)?;

        let id = uuid::Uuid::new_v4().to_string();
        let dir = self.session_dir(&id);
        fs::create_dir_all(&dir).map_err(|e| internal(&dir.display().to_string(), e))?;
        let result = (|| {
            let session = Session::start(pool.clone(), request.config.clone(), external)?
                .with_checkpoint(dir.join("checkpoint.json"))?;
            let handle = SessionHandle {
                session_id: id.clone(),
                created_at: Utc::now(),
                corpus: request.corpus.clone(),
                config: request.config.clone(),
                dual_annotation: request.dual_annotation,
                status: session.phase(),
            };
            let pool_json = serde_json::to_vec(pool.as_ref()).map_err(|e| internal("pool", e))?;
            write_atomic(&dir.join("pool.json"), &pool_json)?;
            if let Some(name) = &request.embeddings {
                write_atomic(&dir.join("embeddings.txt"), name.as_bytes())?;
            }
            self.write_handle(&handle)?;
            Ok::<_, ApiError>((handle, session))
        })();
        let (handle, session) = match result {
            Ok(ok) => ok,
            Err(e) => {
                let _ = fs::remove_dir_all(&dir);
                return Err(e);
            }
        };
        self.sessions
            .write()
            .expect("registry lock poisoned")
            .insert(id, Arc::new(SessionEntry::new(handle.clone(), session)));
        tracing::info!(session = %handle.session_id, corpus = %handle.corpus, "session created");
        Ok(handle)
    }

    pub fn write_handle(&self, handle: &SessionHandle) -> ApiResult<()> {
        let bytes = serde_json::to_vec_pretty(handle).map_err(|e| internal("handle", e))?;
        write_atomic(&self.session_dir(&handle.session_id).join("handle.json"), &bytes)
    }

    pub fn get(&self, id: &str) -> ApiResult<Arc<SessionEntry>> {
        self.sessions
            .read()
            .expect("registry lock poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("unknown session `{id}`")))
    }

    /// Handles ordered by creation time, then id.
    pub fn handles(&self) -> Vec<SessionHandle> {
        let mut handles: Vec<SessionHandle> = self
            .sessions
            .read()
            .expect("registry lock poisoned")
            .values()
            .map(|e| e.handle())
            .collect();
        handles.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.session_id.cmp(&b.session_id)));
        handles
    }
}

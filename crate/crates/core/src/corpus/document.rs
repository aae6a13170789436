use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{CorpusError, Result};

/// One timestamped news document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    /// Explicit (metadata) timestamp, always UTC.
    #[serde(with = "crate::timefmt")]
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub source: String,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        timestamp: DateTime<Utc>,
        source: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            timestamp,
            source: source.into(),
        }
    }
}

/// Documents keyed by unique id, in ingestion order.
#[derive(Debug, Clone, Default)]
pub struct DocumentStore {
    docs: Vec<Document>,
    index: HashMap<String, usize>,
}

impl DocumentStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_documents(docs: impl IntoIterator<Item = Document>) -> Result<Self> {
        let mut store = Self::new();
        for doc in docs {
            store.insert(doc)?;
        }
        Ok(store)
    }

    pub fn insert(&mut self, doc: Document) -> Result<()> {
        if self.index.contains_key(&doc.id) {
            return Err(CorpusError::DuplicateId(doc.id));
        }
        self.index.insert(doc.id.clone(), self.docs.len());
        self.docs.push(doc);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.index.get(id).map(|&i| &self.docs[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn iter(&self) -> impl Iterator<Item = &Document> {
        self.docs.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.id.as_str())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DocumentFormat {
    #[default]
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IngestMode {
    /// Bad lines are reported and skipped.
    #[default]
    Lenient,
    /// The first bad line aborts ingestion.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

#[derive(Debug)]
pub struct IngestReport {
    pub store: DocumentStore,
    pub rejected: Vec<LineError>,
}

pub fn ingest_documents(path: &Path, format: DocumentFormat, mode: IngestMode) -> Result<IngestReport> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        DocumentFormat::Jsonl => ingest_reader(BufReader::new(file), mode),
    }
}

/// Reads JSONL document records. Blank lines are ignored.
pub fn ingest_reader<R: BufRead>(reader: R, mode: IngestMode) -> Result<IngestReport> {
    let mut store = DocumentStore::new();
    let mut rejected = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: format!("line {line_no}"),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let outcome = serde_json::from_str::<Document>(&line)
            .map_err(|e| e.to_string())
            .and_then(|doc| store.insert(doc).map_err(|e| e.to_string()));
        if let Err(message) = outcome {
            if mode == IngestMode::Strict {
                return Err(CorpusError::Line { line: line_no, message });
            }
            log::warn!("rejected line {line_no}: {message}");
            rejected.push(LineError { line: line_no, message });
        }
    }
    Ok(IngestReport { store, rejected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    const GOOD: &str = r#"{"id":"d1","text":"北京大学","timestamp":"2006-11-03T08:00:00Z","source":"xinhua"}
{"id":"d2","text":"上海","timestamp":"2007-01-01T00:00:00Z","source":"xinhua"}
{"id":"d3","text":"广州","timestamp":"2007-02-11T12:30:00Z","source":"pd"}
"#;

    #[test]
    fn three_valid_lines() {
        let report = ingest_reader(Cursor::new(GOOD), IngestMode::Lenient).unwrap();
        assert_eq!(report.store.len(), 3);
        assert!(report.rejected.is_empty());
        assert_eq!(report.store.get("d2").unwrap().text, "上海");
    }

    #[test]
    fn missing_timestamp_is_rejected_and_ingest_continues() {
        let input = GOOD.replace(r#","timestamp":"2007-01-01T00:00:00Z""#, "");
        let report = ingest_reader(Cursor::new(input), IngestMode::Lenient).unwrap();
        assert_eq!(report.store.len(), 2);
        assert_eq!(report.rejected.len(), 1);
        assert_eq!(report.rejected[0].line, 2);
    }

    #[test]
    fn strict_mode_aborts_with_line_number() {
        let input = GOOD.replace("2007-02-11T12:30:00Z", "yesterday");
        let err = ingest_reader(Cursor::new(input), IngestMode::Strict).unwrap_err();
        assert!(matches!(err, CorpusError::Line { line: 3, .. }));
    }

    #[test]
    fn empty_input_gives_empty_store() {
        let report = ingest_reader(Cursor::new(""), IngestMode::Lenient).unwrap();
        assert!(report.store.is_empty());
        assert!(report.rejected.is_empty());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let input = format!("{GOOD}{}", GOOD.lines().next().unwrap());
        let report = ingest_reader(Cursor::new(input), IngestMode::Lenient).unwrap();
        assert_eq!(report.store.len(), 3);
        assert_eq!(report.rejected[0].line, 4);
    }

    #[test]
    fn timestamp_serializes_in_canonical_form() {
        let report = ingest_reader(Cursor::new(GOOD), IngestMode::Lenient).unwrap();
        let json = serde_json::to_string(report.store.get("d1").unwrap()).unwrap();
        assert!(json.contains(r#""timestamp":"2006-11-03T08:00:00Z""#), "{json}");
    }
}

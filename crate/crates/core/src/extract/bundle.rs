use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::recognizer::{recognize_entities, EntityMention, EntityRecognizer, LengthBounds};
use super::relation::{extract_relations, RelationExtractor, RelationMention};
use super::sentence::{split_sentences, Sentence};
use super::{ExtractError, Result};
use crate::corpus::{Document, DocumentStore};
use crate::eventdetect::DocumentEvent;

/// Recognizer plus optional relation model, applied per sentence.
pub struct Extractor<'a> {
    pub recognizer: &'a dyn EntityRecognizer,
    pub relations: Option<&'a RelationExtractor>,
    pub bounds: LengthBounds,
}

impl<'a> Extractor<'a> {
    pub fn new(recognizer: &'a dyn EntityRecognizer, relations: Option<&'a RelationExtractor>) -> Self {
        Self {
            recognizer,
            relations,
            bounds: LengthBounds::default(),
        }
    }
}

/// Everything extracted from one document. Only sentences holding at least
/// one mention are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentExtraction {
    pub doc_id: String,
    #[serde(with = "crate::timefmt")]
    pub timestamp: DateTime<Utc>,
    pub sentences: Vec<Sentence>,
    pub mentions: Vec<EntityMention>,
    pub relations: Vec<RelationMention>,
}

pub fn extract_document(doc: &Document, extractor: &Extractor<'_>) -> DocumentExtraction {
    let mut out = DocumentExtraction {
        doc_id: doc.id.clone(),
        timestamp: doc.timestamp,
        sentences: Vec::new(),
        mentions: Vec::new(),
        relations: Vec::new(),
    };
    for sentence in split_sentences(doc) {
        let mentions = recognize_entities(&sentence, extractor.recognizer, extractor.bounds);
        if mentions.is_empty() {
            continue;
        }
        if let Some(rel) = extractor.relations {
            out.relations.extend(extract_relations(&sentence, &mentions, rel));
        }
        out.mentions.extend(mentions);
        out.sentences.push(sentence);
    }
    out
}

/// Mentions and relations of one document event, tagged with the event id
/// and each document's explicit timestamp.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionBundle {
    pub event_id: String,
    /// Member documents and their timestamps.
    pub documents: BTreeMap<String, String>,
    pub sentences: Vec<Sentence>,
    pub mentions: Vec<EntityMention>,
    pub relations: Vec<RelationMention>,
}

impl ExtractionBundle {
    pub fn from_documents<'e>(event_id: &str, docs: impl IntoIterator<Item = &'e DocumentExtraction>) -> Self {
        let mut b = ExtractionBundle {
            event_id: event_id.to_string(),
            ..Default::default()
        };
        for d in docs {
            b.documents.insert(d.doc_id.clone(), crate::timefmt::format(&d.timestamp));
            b.sentences.extend(d.sentences.iter().cloned());
            b.mentions.extend(d.mentions.iter().cloned());
            b.relations.extend(d.relations.iter().cloned());
        }
        b
    }

    /// No mentions and no relations.
    pub fn is_empty(&self) -> bool {
        self.mentions.is_empty() && self.relations.is_empty()
    }

    pub fn timestamp(&self, doc_id: &str) -> Option<&str> {
        self.documents.get(doc_id).map(String::as_str)
    }
}

/// Runs recognition and relation extraction over every member document.
pub fn extract_event(
    event: &DocumentEvent,
    store: &DocumentStore,
    extractor: &Extractor<'_>,
) -> Result<ExtractionBundle> {
    let docs: Vec<&Document> = event
        .members
        .iter()
        .map(|id| store.get(id).ok_or_else(|| ExtractError::MissingDocument(id.clone())))
        .collect::<Result<_>>()?;
    let extractions: Vec<DocumentExtraction> = docs.par_iter().map(|d| extract_document(d, extractor)).collect();
    Ok(ExtractionBundle::from_documents(&event.id, &extractions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventdetect::EventLevel;
    use crate::extract::recognizer::{EntityType, GazetteerRecognizer};
    use chrono::TimeZone;

    fn event(members: &[&str]) -> DocumentEvent {
        DocumentEvent {
            id: "t0/e01".into(),
            level: EventLevel::Event,
            topic: 1,
            members: members.iter().map(|s| s.to_string()).collect(),
            top_words: vec![],
            children: vec![],
        }
    }

    fn store() -> DocumentStore {
        let t = |d| Utc.with_ymd_and_hms(2008, 1, d, 0, 0, 0).unwrap();
        DocumentStore::from_documents([
            Document::new("a", "毛泽东到达井冈山。天气很好。", t(1), ""),
            Document::new("b", "天气很好。", t(2), ""),
            Document::new("c", "北约发言人谈阿富汗。毛泽东在北京。", t(3), ""),
        ])
        .unwrap()
    }

    fn gazetteer() -> GazetteerRecognizer {
        GazetteerRecognizer::new([
            ("毛泽东".to_string(), EntityType::Per),
            ("井冈山".to_string(), EntityType::Loc),
            ("北约".to_string(), EntityType::Org),
            ("阿富汗".to_string(), EntityType::Loc),
            ("北京".to_string(), EntityType::Loc),
        ])
    }

    #[test]
    fn hand_enumerated_bundle() {
        let g = gazetteer();
        let b = extract_event(&event(&["a", "b", "c"]), &store(), &Extractor::new(&g, None)).unwrap();
        let got: Vec<(&str, &str, usize)> = b
            .mentions
            .iter()
            .map(|m| (m.doc_id.as_str(), m.surface.as_str(), m.sentence_index))
            .collect();
        assert_eq!(
            got,
            [
                ("a", "毛泽东", 0),
                ("a", "井冈山", 0),
                ("c", "北约", 0),
                ("c", "阿富汗", 0),
                ("c", "毛泽东", 1),
                ("c", "北京", 1),
            ]
        );
        assert_eq!(b.sentences.len(), 3);
        assert_eq!(b.timestamp("c"), Some("2008-01-03T00:00:00Z"));
        assert_eq!(b.event_id, "t0/e01");
    }

    #[test]
    fn event_without_entities_gives_empty_bundle() {
        let g = gazetteer();
        let b = extract_event(&event(&["b"]), &store(), &Extractor::new(&g, None)).unwrap();
        assert!(b.is_empty());
        assert!(b.sentences.is_empty());
    }

    #[test]
    fn missing_document_is_named() {
        let g = gazetteer();
        let err = extract_event(&event(&["a", "zz"]), &store(), &Extractor::new(&g, None)).unwrap_err();
        assert!(err.to_string().contains("zz"));
    }
}

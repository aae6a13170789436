//! Pre-annotation JSONL: one record per document.
//!
//! ```json
//! {"doc_id": "d1",
//!  "mentions": [{"surface": "毛泽东", "etype": "PER", "start": 0, "end": 3}],
//!  "relations": [{"rtype": "PHYS", "arg1_idx": 0, "arg2_idx": 1, "sentence": 0}],
//!  "events": [{"event_type": "Conflict", "sentence": 2}]}
//! ```
//!
//! Mention offsets are document-level character offsets, end exclusive.
//! `arg*_idx` index into `mentions`; `sentence` indexes the document's
//! sentences as produced by [`split_sentences`](super::split_sentences).
//! `events` marks annotated event-mention sentences and may be omitted.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::recognizer::{EntityMention, EntityType, GoldSentence, LengthBounds};
use super::relation::RelationType;
use super::sentence::{split_sentences, Sentence};
use super::{ExtractError, Result};
use crate::corpus::DocumentStore;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedMention {
    pub surface: String,
    pub etype: EntityType,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedRelation {
    pub rtype: RelationType,
    pub arg1_idx: usize,
    pub arg2_idx: usize,
    pub sentence: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedEvent {
    pub event_type: String,
    pub sentence: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocAnnotation {
    pub doc_id: String,
    #[serde(default)]
    pub mentions: Vec<AnnotatedMention>,
    #[serde(default)]
    pub relations: Vec<AnnotatedRelation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<AnnotatedEvent>,
}

pub fn load_annotations(path: &Path) -> Result<Vec<DocAnnotation>> {
    parse_annotations(&super::read_file(path)?)
}

pub fn parse_annotations(text: &str) -> Result<Vec<DocAnnotation>> {
    let mut out = Vec::new();
    for (i, line) in text.as_bytes().lines().enumerate() {
        let line = line.map_err(|e| ExtractError::Format(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let a: DocAnnotation = serde_json::from_str(&line)
            .map_err(|e| ExtractError::Format(format!("annotation line {}: {e}", i + 1)))?;
        for r in &a.relations {
            if r.arg1_idx >= a.mentions.len() || r.arg2_idx >= a.mentions.len() || r.arg1_idx == r.arg2_idx {
                return Err(ExtractError::Format(format!(
                    "annotation line {}: relation arguments {}/{} invalid for {} mentions",
                    i + 1,
                    r.arg1_idx,
                    r.arg2_idx,
                    a.mentions.len()
                )));
            }
        }
        out.push(a);
    }
    Ok(out)
}

pub fn write_annotations(annotations: &[DocAnnotation]) -> String {
    annotations
        .iter()
        .map(|a| serde_json::to_string(a).expect("annotation serializes") + "\n")
        .collect()
}

/// A sentence with its gold mentions (sentence-relative) and gold relations
/// (indices into `mentions`).
#[derive(Debug, Clone)]
pub struct AnnotatedSentence {
    pub sentence: Sentence,
    pub mentions: Vec<EntityMention>,
    pub relations: Vec<(usize, usize, RelationType)>,
}

impl AnnotatedSentence {
    pub fn gold(&self) -> GoldSentence<'_> {
        GoldSentence {
            sentence: &self.sentence,
            mentions: self.mentions.iter().map(|m| (m.char_span.0, m.char_span.1, m.etype)).collect(),
        }
    }
}

/// Aligns document annotations with sentences. Mentions that cross a sentence
/// boundary or fall outside `bounds`, and relations whose arguments are not
/// both in the stated sentence, are dropped with a warning.
pub fn annotated_sentences(
    store: &DocumentStore,
    annotations: &[DocAnnotation],
    bounds: LengthBounds,
) -> Result<Vec<AnnotatedSentence>> {
    let mut out = Vec::new();
    for a in annotations {
        let doc = store
            .get(&a.doc_id)
            .ok_or_else(|| ExtractError::MissingDocument(a.doc_id.clone()))?;
        let mut sentences: Vec<AnnotatedSentence> = split_sentences(doc)
            .into_iter()
            .map(|sentence| AnnotatedSentence {
                sentence,
                mentions: Vec::new(),
                relations: Vec::new(),
            })
            .collect();
        // annotation mention index -> (sentence, index within sentence)
        let mut placed: HashMap<usize, (usize, usize)> = HashMap::new();
        for (mi, m) in a.mentions.iter().enumerate() {
            if !bounds.accepts(m.end.saturating_sub(m.start)) {
                continue;
            }
            let Some(si) = sentences.iter().position(|s| s.sentence.contains_span(m.start, m.end)) else {
                log::warn!("{}: mention {:?} crosses a sentence boundary", a.doc_id, m.surface);
                continue;
            };
            let s = &mut sentences[si];
            let (start, end) = (m.start - s.sentence.start, m.end - s.sentence.start);
            let surface = s.sentence.slice(start, end);
            if surface != m.surface {
                log::warn!("{}: mention {:?} does not match text {:?}", a.doc_id, m.surface, surface);
            }
            placed.insert(mi, (si, s.mentions.len()));
            s.mentions.push(EntityMention {
                surface,
                etype: m.etype,
                weight: 1.0,
                doc_id: a.doc_id.clone(),
                sentence_index: s.sentence.index,
                char_span: (start, end),
            });
        }
        for r in &a.relations {
            match (placed.get(&r.arg1_idx), placed.get(&r.arg2_idx)) {
                (Some(&(s1, i1)), Some(&(s2, i2))) if s1 == s2 && s1 == r.sentence => {
                    sentences[s1].relations.push((i1, i2, r.rtype));
                }
                _ => log::warn!("{}: relation {:?} not within sentence {}", a.doc_id, r.rtype, r.sentence),
            }
        }
        out.extend(sentences);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use chrono::{TimeZone, Utc};

    const LINE: &str = r#"{"doc_id":"d1","mentions":[{"surface":"毛泽东","etype":"PER","start":0,"end":3},{"surface":"井冈山","etype":"LOC","start":5,"end":8},{"surface":"北京","etype":"LOC","start":9,"end":11}],"relations":[{"rtype":"PHYS","arg1_idx":0,"arg2_idx":1,"sentence":0}]}"#;

    fn store() -> DocumentStore {
        let t = Utc.with_ymd_and_hms(1928, 4, 1, 0, 0, 0).unwrap();
        DocumentStore::from_documents([Document::new("d1", "毛泽东到达井冈山。北京", t, "")]).unwrap()
    }

    #[test]
    fn aligns_mentions_and_relations_to_sentences() {
        let ann = parse_annotations(LINE).unwrap();
        let sents = annotated_sentences(&store(), &ann, LengthBounds::default()).unwrap();
        assert_eq!(sents.len(), 2);
        assert_eq!(sents[0].mentions.len(), 2);
        assert_eq!(sents[0].relations, [(0, 1, RelationType::Phys)]);
        assert_eq!(sents[1].mentions[0].char_span, (0, 2));
        assert_eq!(sents[1].mentions[0].sentence_index, 1);
    }

    #[test]
    fn bad_relation_index_rejected() {
        let bad = LINE.replace(r#""arg2_idx":1"#, r#""arg2_idx":7"#);
        assert!(parse_annotations(&bad).is_err());
    }

    #[test]
    fn unknown_document_is_an_error() {
        let ann = parse_annotations(&LINE.replace("\"d1\"", "\"zz\"")).unwrap();
        assert!(matches!(
            annotated_sentences(&store(), &ann, LengthBounds::default()),
            Err(ExtractError::MissingDocument(id)) if id == "zz"
        ));
    }

    #[test]
    fn write_then_parse() {
        let ann = parse_annotations(LINE).unwrap();
        assert_eq!(parse_annotations(&write_annotations(&ann)).unwrap(), ann);
    }
}

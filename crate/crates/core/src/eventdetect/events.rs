use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lda::{fit_lda, LdaParams, TopicModel, WeightedWord};
use super::{DetectError, Result};
use crate::corpus::{TermBag, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventLevel {
    Event,
    SubEvent,
}

/// A cluster of documents labelled by its topic's most likely words.
///
/// Ids are paths: `t3/e07` for event 7 of slice 3, `t3/e07/s12` for one of
/// its sub-events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentEvent {
    pub id: String,
    pub level: EventLevel,
    pub topic: usize,
    pub members: Vec<String>,
    pub top_words: Vec<WeightedWord>,
    #[serde(default)]
    pub children: Vec<DocumentEvent>,
}

impl DocumentEvent {
    /// This event followed by all of its descendants, depth first.
    pub fn walk(&self) -> Vec<&DocumentEvent> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.walk());
        }
        out
    }

    pub fn find<'a>(&'a self, id: &str) -> Option<&'a DocumentEvent> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectParams {
    pub lda: LdaParams,
    /// Events with fewer members are not split into sub-events.
    pub min_docs: usize,
    pub top_words: usize,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            lda: LdaParams::default(),
            min_docs: 10,
            top_words: 100,
        }
    }
}

/// L1-normalized in-vocabulary term frequencies, sparse and sorted by id.
pub fn document_vector(doc: &TermBag, vocab: &Vocabulary) -> Vec<(usize, f64)> {
    let enc = vocab.encode(doc);
    let total: f64 = enc.iter().map(|&(_, c)| f64::from(c)).sum();
    if total == 0.0 {
        return Vec::new();
    }
    enc.into_iter().map(|(w, c)| (w, f64::from(c) / total)).collect()
}

/// Index and Euclidean distance of the closest topic centroid. Ties go to the
/// lowest topic index.
pub fn nearest_centroid(vector: &[(usize, f64)], model: &TopicModel) -> (usize, f64) {
    let x_norm: f64 = vector.iter().map(|&(_, x)| x * x).sum();
    let mut best = (0, f64::INFINITY);
    for (k, row) in model.phi.iter().enumerate() {
        let phi_norm: f64 = row.iter().map(|p| p * p).sum();
        let dot: f64 = vector.iter().map(|&(w, x)| x * row[w]).sum();
        let d2 = (x_norm - 2.0 * dot + phi_norm).max(0.0);
        if d2 < best.1 {
            best = (k, d2);
        }
    }
    (best.0, best.1.sqrt())
}

/// Hard-assigns each document to its nearest topic centroid and returns the
/// non-empty clusters in topic order.
///
/// `prefix` is the parent id (`t3` for top-level events, `t3/e07` for
/// sub-events).
pub fn assign_events(
    ids: &[String],
    docs: &[TermBag],
    model: &TopicModel,
    vocab: &Vocabulary,
    prefix: &str,
    level: EventLevel,
    top_n: usize,
) -> Result<Vec<DocumentEvent>> {
    if ids.len() != docs.len() {
        return Err(DetectError::InvalidParameter(format!(
            "{} ids for {} documents",
            ids.len(),
            docs.len()
        )));
    }
    if model.phi.iter().any(|row| row.len() != vocab.len()) {
        return Err(DetectError::InvalidParameter(
            "model was fitted on a different vocabulary".into(),
        ));
    }
    let mut clusters: Vec<Vec<String>> = vec![Vec::new(); model.topics];
    for (id, doc) in ids.iter().zip(docs) {
        let (k, _) = nearest_centroid(&document_vector(doc, vocab), model);
        clusters[k].push(id.clone());
    }
    let tag = match level {
        EventLevel::Event => 'e',
        EventLevel::SubEvent => 's',
    };
    clusters
        .into_iter()
        .enumerate()
        .filter(|(_, members)| !members.is_empty())
        .map(|(k, members)| {
            Ok(DocumentEvent {
                id: format!("{prefix}/{tag}{k:02}"),
                level,
                topic: k,
                members,
                top_words: model.top_words(k, vocab, top_n)?,
                children: Vec::new(),
            })
        })
        .collect()
}

/// Seed for the sub-event model of `topic`, decorrelated from the parent seed.
fn branch_seed(seed: u64, topic: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (topic as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Two-level event tree for one time slice.
///
/// Every top-level event with at least `min_docs` members is re-clustered with
/// a fresh model over its own documents. A branch whose model cannot be fitted
/// stays childless.
pub fn detect_hierarchical(
    slice_index: usize,
    ids: &[String],
    docs: &[TermBag],
    vocab: &Vocabulary,
    params: &DetectParams,
) -> Result<Vec<DocumentEvent>> {
    if ids.is_empty() {
        return Err(DetectError::EmptySlice(slice_index));
    }
    let model = fit_lda(docs, vocab, &params.lda)?;
    let prefix = format!("t{slice_index}");
    let mut events = assign_events(ids, docs, &model, vocab, &prefix, EventLevel::Event, params.top_words)?;

    let position: std::collections::HashMap<&str, usize> =
        ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();

    events.par_iter_mut().for_each(|event| {
        if event.members.len() < params.min_docs {
            return;
        }
        let member_docs: Vec<TermBag> = event
            .members
            .iter()
            .map(|id| docs[position[id.as_str()]].clone())
            .collect();
        let lda = LdaParams {
            seed: branch_seed(params.lda.seed, event.topic),
            ..params.lda
        };
        let children = fit_lda(&member_docs, vocab, &lda).and_then(|m| {
            assign_events(&event.members, &member_docs, &m, vocab, &event.id, EventLevel::SubEvent, params.top_words)
        });
        match children {
            Ok(children) => event.children = children,
            Err(e) => log::warn!("no sub-events for {}: {e}", event.id),
        }
    });
    Ok(events)
}

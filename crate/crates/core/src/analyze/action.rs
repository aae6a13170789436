use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{AnalyzeError, Result};
use crate::corpus::{tokenize_omni_word, DocumentStore, Lexicon};
use crate::extract::{split_sentences, DocAnnotation, ExtractionBundle, Sentence};
use crate::learn::{decide, Classifier, Instance, Threshold};
use crate::netmodel::{EdgeFrame, EdgeType, EventNetwork, Info, VertexFrame, VertexType};

/// Label of sentences that do not express the monitored action.
pub const NO_ACTION: &str = "NONE";

/// Entity identity inside co-occurrence counting.
pub type Entity = (String, VertexType);

/// Sentence classifier for one monitored action type, with the lexicon its
/// omni-word features come from.
#[derive(Debug, Clone)]
pub struct ActionModel {
    pub classifier: Classifier,
    pub lexicon: Lexicon,
    pub positive: String,
}

impl ActionModel {
    pub fn accepts(&self, text: &str, threshold: Threshold) -> Result<bool> {
        let features = tokenize_omni_word(text, &self.lexicon);
        Ok(decide(&self.classifier, &features, &self.positive, threshold)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionParams {
    pub threshold: Threshold,
    /// Edges seen in fewer accepted sentences are erased.
    pub min_cooccur: u64,
}

impl Default for ActionParams {
    fn default() -> Self {
        Self {
            threshold: Threshold::STRICT,
            min_cooccur: 12,
        }
    }
}

/// A sentence holding at least two distinct entities.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSentence {
    pub key: String,
    pub text: String,
    /// Distinct, sorted.
    pub entities: Vec<Entity>,
}

pub fn candidate_sentences(bundle: &ExtractionBundle) -> Vec<CandidateSentence> {
    let mut by_sentence: HashMap<String, BTreeSet<Entity>> = HashMap::new();
    for m in &bundle.mentions {
        let key = crate::extract::sentence_key(&m.doc_id, m.sentence_index);
        by_sentence
            .entry(key)
            .or_default()
            .insert((m.surface.clone(), VertexType::from(m.etype)));
    }
    bundle
        .sentences
        .iter()
        .filter_map(|s| {
            let entities = by_sentence.remove(&s.key())?;
            (entities.len() >= 2).then(|| CandidateSentence {
                key: s.key(),
                text: s.text.clone(),
                entities: entities.into_iter().collect(),
            })
        })
        .collect()
}

/// Unordered pair counts: each set adds one to every pair of its distinct
/// members, whatever the multiplicity inside the set.
pub fn count_cooccurrences<T: Ord + Clone>(sets: &[Vec<T>]) -> BTreeMap<(T, T), u64> {
    let mut counts = BTreeMap::new();
    for set in sets {
        let distinct: BTreeSet<&T> = set.iter().collect();
        let items: Vec<&T> = distinct.into_iter().collect();
        for (i, a) in items.iter().enumerate() {
            for b in &items[i + 1..] {
                *counts.entry(((*a).clone(), (*b).clone())).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// CO-OCCUR network of the pairs counted at least `min_cooccur` times.
/// Vertices are the endpoints of surviving edges, keyed densely in entity
/// order; `weights` supplies vertex weights (default 1).
pub fn cooccurrence_network(
    event_id: &str,
    counts: &BTreeMap<(Entity, Entity), u64>,
    min_cooccur: u64,
    weights: &HashMap<Entity, f64>,
) -> EventNetwork {
    let mut net = EventNetwork::new(event_id);
    let kept: Vec<(&(Entity, Entity), u64)> = counts
        .iter()
        .filter(|&(_, &c)| c >= min_cooccur)
        .map(|(p, &c)| (p, c))
        .collect();
    let endpoints: BTreeSet<&Entity> = kept.iter().flat_map(|((a, b), _)| [a, b]).collect();
    let mut keys: HashMap<&Entity, u32> = HashMap::new();
    for (i, ent) in endpoints.into_iter().enumerate() {
        keys.insert(ent, i as u32);
        net.vertices.push(VertexFrame {
            key: i as u32,
            name: ent.0.clone(),
            vtype: ent.1,
            weight: weights.get(ent).copied().unwrap_or(1.0),
            info: Info::new(),
        });
    }
    for ((a, b), c) in kept {
        net.edges.push(EdgeFrame {
            etype: EdgeType::CoOccur,
            v1: keys[a],
            v2: keys[b],
            weight: c as f64,
            info: Info::from_iter([("count".to_string(), json!(c))]),
        });
    }
    net
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionReport {
    pub network: EventNetwork,
    pub candidates: usize,
    pub accepted: Vec<String>,
    /// Distinct entities over all accepted sentences.
    pub cooccurring_entities: usize,
}

/// Classifies every candidate sentence of the event and builds the pruned
/// co-occurrence network of the accepted ones.
pub fn action_analysis(bundle: &ExtractionBundle, model: &ActionModel, params: ActionParams) -> Result<ActionReport> {
    let candidates = candidate_sentences(bundle);
    let mut accepted = Vec::new();
    let mut sets = Vec::new();
    for c in &candidates {
        if model.accepts(&c.text, params.threshold)? {
            accepted.push(c.key.clone());
            sets.push(c.entities.clone());
        }
    }
    let counts = count_cooccurrences(&sets);
    let mut weights: HashMap<Entity, f64> = HashMap::new();
    for m in &bundle.mentions {
        let w = weights.entry((m.surface.clone(), m.etype.into())).or_insert(0.0);
        *w = w.max(m.weight.clamp(0.0, 1.0));
    }
    let cooccurring: HashSet<&Entity> = sets.iter().flatten().collect();
    let cooccurring_entities = cooccurring.len();

    let mut network = cooccurrence_network(&bundle.event_id, &counts, params.min_cooccur, &weights);
    network.provenance = bundle.event_id.clone();
    network.params.insert("action".into(), json!(model.positive));
    network.params.insert("threshold".into(), json!(params.threshold.value()));
    network.params.insert("min_cooccur".into(), json!(params.min_cooccur));
    network.params.insert("candidate_sentences".into(), json!(candidates.len()));
    network.params.insert("accepted_sentences".into(), json!(accepted.len()));
    network.params.insert("cooccurring_entities".into(), json!(cooccurring_entities));
    Ok(ActionReport {
        network,
        candidates: candidates.len(),
        accepted,
        cooccurring_entities,
    })
}

/// Hard negatives: sentences that are not annotated event mentions yet
/// contain at least one trigger.
pub fn generate_action_negatives(
    sentences: &[Sentence],
    annotated: &HashSet<String>,
    triggers: &[String],
    lexicon: &Lexicon,
) -> Result<Vec<Instance>> {
    let triggers: Vec<&str> = triggers.iter().map(|t| t.trim()).filter(|t| !t.is_empty()).collect();
    if triggers.is_empty() {
        return Err(AnalyzeError::InvalidParameter("empty trigger lexicon".into()));
    }
    let out: Vec<Instance> = sentences
        .iter()
        .filter(|s| !annotated.contains(&s.key()))
        .filter(|s| triggers.iter().any(|t| s.text.contains(t)))
        .map(|s| Instance::new(tokenize_omni_word(&s.text, lexicon), NO_ACTION))
        .collect();
    log::info!("{} trigger-bearing negative sentences", out.len());
    Ok(out)
}

/// Positives are the sentences annotated with `action`; negatives come from
/// [`generate_action_negatives`] over the annotated documents only, since an
/// unannotated document may hold unmarked positives.
pub fn action_training_set(
    store: &DocumentStore,
    annotations: &[DocAnnotation],
    action: &str,
    triggers: &[String],
    lexicon: &Lexicon,
) -> Result<Vec<Instance>> {
    let annotated_docs: HashSet<&str> = annotations.iter().map(|a| a.doc_id.as_str()).collect();
    let sentences: Vec<Sentence> = store
        .iter()
        .filter(|d| annotated_docs.contains(d.id.as_str()))
        .flat_map(split_sentences)
        .collect();
    let by_key: HashMap<String, &Sentence> = sentences.iter().map(|s| (s.key(), s)).collect();
    let mut annotated = HashSet::new();
    let mut positives = BTreeSet::new();
    for a in annotations {
        for e in &a.events {
            let key = crate::extract::sentence_key(&a.doc_id, e.sentence);
            if e.event_type == action {
                positives.insert(key.clone());
            }
            annotated.insert(key);
        }
    }
    let mut out = Vec::new();
    for key in &positives {
        match by_key.get(key) {
            Some(s) => out.push(Instance::new(tokenize_omni_word(&s.text, lexicon), action)),
            None => log::warn!("annotated event sentence {key} not in corpus"),
        }
    }
    out.extend(generate_action_negatives(&sentences, &annotated, triggers, lexicon)?);
    Ok(out)
}

//! Boundary-assembling entity recognition.
//!
//! A recognizer detects candidate begin and end boundaries in a sentence; the
//! driver assembles every (begin, end) pair into a candidate span and asks the
//! recognizer to assess it. Assessed candidates outside the length bounds are
//! never emitted.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::annotations::DocAnnotation;
use super::sentence::Sentence;
use super::{ExtractError, Result};
use crate::learn::{train_maxent, Classifier, Instance, TrainConfig};
use crate::corpus::TermBag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityType {
    #[serde(rename = "PER")]
    Per,
    #[serde(rename = "LOC")]
    Loc,
    #[serde(rename = "ORG")]
    Org,
}

impl EntityType {
    pub const ALL: [EntityType; 3] = [EntityType::Per, EntityType::Loc, EntityType::Org];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Per => "PER",
            EntityType::Loc => "LOC",
            EntityType::Org => "ORG",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = ExtractError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PER" => Ok(EntityType::Per),
            "LOC" => Ok(EntityType::Loc),
            "ORG" => Ok(EntityType::Org),
            other => Err(ExtractError::UnknownType(other.to_string())),
        }
    }
}

/// A recognized entity mention. `char_span` is relative to its sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    pub etype: EntityType,
    pub weight: f64,
    pub doc_id: String,
    pub sentence_index: usize,
    pub char_span: (usize, usize),
}

/// Inclusive character-length bounds for emitted mentions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthBounds {
    pub min: usize,
    pub max: usize,
}

impl Default for LengthBounds {
    fn default() -> Self {
        Self { min: 2, max: 6 }
    }
}

impl LengthBounds {
    pub fn accepts(&self, len: usize) -> bool {
        (self.min..=self.max).contains(&len)
    }
}

/// Candidate boundaries, as sentence-relative character offsets. An end
/// offset is exclusive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Boundaries {
    pub begins: BTreeSet<usize>,
    pub ends: BTreeSet<usize>,
}

pub trait EntityRecognizer: Send + Sync {
    fn detect_boundaries(&self, sentence: &Sentence) -> Boundaries;

    /// Type and confidence of a candidate span, or `None` to reject it.
    fn assess(&self, sentence: &Sentence, start: usize, end: usize, surface: &str) -> Option<(EntityType, f64)>;
}

/// All (begin, end) pairs with `begin < end` whose length passes `bounds`,
/// ordered by (begin, end).
pub fn assemble(boundaries: &Boundaries, bounds: LengthBounds) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for &b in &boundaries.begins {
        for &e in boundaries.ends.range(b + 1..) {
            if bounds.accepts(e - b) {
                out.push((b, e));
            }
        }
    }
    out
}

/// Detect, assemble, assess.
pub fn recognize_entities(
    sentence: &Sentence,
    recognizer: &dyn EntityRecognizer,
    bounds: LengthBounds,
) -> Vec<EntityMention> {
    let chars: Vec<char> = sentence.text.chars().collect();
    let boundaries = recognizer.detect_boundaries(sentence);
    assemble(&boundaries, bounds)
        .into_iter()
        .filter(|&(_, e)| e <= chars.len())
        .filter_map(|(b, e)| {
            let surface: String = chars[b..e].iter().collect();
            recognizer.assess(sentence, b, e, &surface).map(|(etype, score)| EntityMention {
                surface,
                etype,
                weight: score.clamp(0.0, 1.0),
                doc_id: sentence.doc_id.clone(),
                sentence_index: sentence.index,
                char_span: (b, e),
            })
        })
        .collect()
}

/// Dictionary-backed recognizer: every gazetteer hit is a candidate and
/// assessment is an exact lookup.
#[derive(Debug, Clone, Default)]
pub struct GazetteerRecognizer {
    entries: HashMap<String, (EntityType, f64)>,
    max_len: usize,
}

impl GazetteerRecognizer {
    pub fn new(entries: impl IntoIterator<Item = (String, EntityType)>) -> Self {
        let mut g = Self::default();
        for (surface, etype) in entries {
            g.insert(surface, etype, 1.0);
        }
        g
    }

    pub fn insert(&mut self, surface: String, etype: EntityType, weight: f64) {
        if surface.is_empty() {
            return;
        }
        self.max_len = self.max_len.max(surface.chars().count());
        self.entries.insert(surface, (etype, weight));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tab-separated `surface<TAB>TYPE[<TAB>weight]` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut g = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(surface), Some(etype)) = (cols.next(), cols.next()) else {
                return Err(ExtractError::Format(format!("gazetteer line {}: expected surface<TAB>TYPE", i + 1)));
            };
            let weight = match cols.next() {
                Some(w) => w
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| ExtractError::Format(format!("gazetteer line {}: {e}", i + 1)))?,
                None => 1.0,
            };
            g.insert(surface.trim().to_string(), etype.trim().parse()?, weight);
        }
        Ok(g)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&super::read_file(path)?)
    }

    /// Inverse of [`GazetteerRecognizer::parse`], sorted by surface.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<_> = self.entries.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        rows.into_iter()
            .map(|(s, (t, w))| if *w == 1.0 { format!("{s}\t{t}\n") } else { format!("{s}\t{t}\t{w}\n") })
            .collect()
    }
}

impl EntityRecognizer for GazetteerRecognizer {
    fn detect_boundaries(&self, sentence: &Sentence) -> Boundaries {
        let chars: Vec<char> = sentence.text.chars().collect();
        let mut b = Boundaries::default();
        for start in 0..chars.len() {
            for end in start + 1..=(start + self.max_len).min(chars.len()) {
                let s: String = chars[start..end].iter().collect();
                if self.entries.contains_key(&s) {
                    b.begins.insert(start);
                    b.ends.insert(end);
                }
            }
        }
        b
    }

    fn assess(&self, _: &Sentence, _: usize, _: usize, surface: &str) -> Option<(EntityType, f64)> {
        self.entries.get(surface).copied()
    }
}

/// Passes pre-annotated mentions through unchanged.
#[derive(Debug, Clone, Default)]
pub struct AnnotationRecognizer {
    // doc id -> (start, end, type), document-level offsets
    spans: HashMap<String, Vec<(usize, usize, EntityType)>>,
}

impl AnnotationRecognizer {
    pub fn new(annotations: &[DocAnnotation]) -> Self {
        let mut spans: HashMap<String, Vec<(usize, usize, EntityType)>> = HashMap::new();
        for a in annotations {
            spans
                .entry(a.doc_id.clone())
                .or_default()
                .extend(a.mentions.iter().map(|m| (m.start, m.end, m.etype)));
        }
        Self { spans }
    }

    fn in_sentence<'a>(&'a self, sentence: &'a Sentence) -> impl Iterator<Item = (usize, usize, EntityType)> + 'a {
        self.spans
            .get(&sentence.doc_id)
            .into_iter()
            .flatten()
            .filter(|(s, e, _)| sentence.contains_span(*s, *e))
            .map(|&(s, e, t)| (s - sentence.start, e - sentence.start, t))
    }
}

impl EntityRecognizer for AnnotationRecognizer {
    fn detect_boundaries(&self, sentence: &Sentence) -> Boundaries {
        let mut b = Boundaries::default();
        for (s, e, _) in self.in_sentence(sentence) {
            b.begins.insert(s);
            b.ends.insert(e);
        }
        b
    }

    fn assess(&self, sentence: &Sentence, start: usize, end: usize, _: &str) -> Option<(EntityType, f64)> {
        self.in_sentence(sentence)
            .find(|&(s, e, _)| s == start && e == end)
            .map(|(_, _, t)| (t, 1.0))
    }
}

const NONE_TYPE: &str = "NONE";

/// Recognizer backed by three maximum-entropy models: begin boundaries, end
/// boundaries, and candidate typing.
///
/// Its features (character unigrams and bigrams around a boundary; surface,
/// edge characters and length of a candidate) are a local choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryModelRecognizer {
    pub begin: Classifier,
    pub end: Classifier,
    pub assessor: Classifier,
    /// Minimum boundary posterior for a position to count as a boundary.
    pub boundary_threshold: f64,
}

fn char_at(chars: &[char], i: isize) -> String {
    if i < 0 {
        "^".into()
    } else if i as usize >= chars.len() {
        "$".into()
    } else {
        chars[i as usize].to_string()
    }
}

/// Features of the boundary between `chars[pos - 1]` and `chars[pos]`.
fn boundary_features(chars: &[char], pos: usize) -> TermBag {
    let p = pos as isize;
    let (l2, l1, r1, r2) = (char_at(chars, p - 2), char_at(chars, p - 1), char_at(chars, p), char_at(chars, p + 1));
    [
        format!("L1={l1}"),
        format!("R1={r1}"),
        format!("L2={l2}{l1}"),
        format!("R2={r1}{r2}"),
        format!("LR={l1}{r1}"),
    ]
    .into_iter()
    .collect()
}

fn candidate_features(chars: &[char], start: usize, end: usize) -> TermBag {
    let surface: String = chars[start..end].iter().collect();
    let mut f: TermBag = [
        format!("S={surface}"),
        format!("F={}", chars[start]),
        format!("E={}", chars[end - 1]),
        format!("LEN={}", end - start),
        format!("L={}", char_at(chars, start as isize - 1)),
        format!("R={}", char_at(chars, end as isize)),
    ]
    .into_iter()
    .collect();
    for c in &chars[start..end] {
        f.insert(format!("C={c}"));
    }
    f
}

/// Gold mentions of one sentence, sentence-relative.
pub struct GoldSentence<'a> {
    pub sentence: &'a Sentence,
    pub mentions: Vec<(usize, usize, EntityType)>,
}

impl BoundaryModelRecognizer {
    pub fn train(gold: &[GoldSentence<'_>], bounds: LengthBounds, config: &TrainConfig) -> Result<Self> {
        let mut begin = Vec::new();
        let mut end = Vec::new();
        let mut assess = Vec::new();
        for g in gold {
            let chars: Vec<char> = g.sentence.text.chars().collect();
            let begins: BTreeSet<usize> = g.mentions.iter().map(|m| m.0).collect();
            let ends: BTreeSet<usize> = g.mentions.iter().map(|m| m.1).collect();
            for pos in 0..=chars.len() {
                let f = boundary_features(&chars, pos);
                if pos < chars.len() {
                    let label = if begins.contains(&pos) { "B" } else { "O" };
                    begin.push(Instance::new(f.clone(), label));
                }
                if pos > 0 {
                    let label = if ends.contains(&pos) { "E" } else { "O" };
                    end.push(Instance::new(f, label));
                }
            }
            let boundaries = Boundaries { begins, ends };
            for (s, e) in assemble(&boundaries, bounds) {
                let label = g
                    .mentions
                    .iter()
                    .find(|m| m.0 == s && m.1 == e)
                    .map_or(NONE_TYPE, |m| m.2.as_str());
                assess.push(Instance::new(candidate_features(&chars, s, e), label));
            }
        }
        Ok(Self {
            begin: train_maxent(&begin, config)?,
            end: train_maxent(&end, config)?,
            assessor: train_maxent(&assess, config)?,
            boundary_threshold: 0.5,
        })
    }

    fn boundary_prob(clf: &Classifier, label: &str, f: &TermBag) -> f64 {
        clf.class_index(label).map_or(0.0, |i| clf.predict(f)[i])
    }
}

impl EntityRecognizer for BoundaryModelRecognizer {
    fn detect_boundaries(&self, sentence: &Sentence) -> Boundaries {
        let chars: Vec<char> = sentence.text.chars().collect();
        let mut b = Boundaries::default();
        for pos in 0..=chars.len() {
            let f = boundary_features(&chars, pos);
            if pos < chars.len() && Self::boundary_prob(&self.begin, "B", &f) >= self.boundary_threshold {
                b.begins.insert(pos);
            }
            if pos > 0 && Self::boundary_prob(&self.end, "E", &f) >= self.boundary_threshold {
                b.ends.insert(pos);
            }
        }
        b
    }

    fn assess(&self, sentence: &Sentence, start: usize, end: usize, _: &str) -> Option<(EntityType, f64)> {
        let chars: Vec<char> = sentence.text.chars().collect();
        let (label, p) = self.assessor.predict_label(&candidate_features(&chars, start, end));
        label.parse::<EntityType>().ok().map(|t| (t, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::sentence::split_text;

    fn sentence(text: &str) -> Sentence {
        split_text("d1", text).remove(0)
    }

    #[test]
    fn gazetteer_hit() {
        let g = GazetteerRecognizer::new([("毛泽东".to_string(), EntityType::Per)]);
        let m = recognize_entities(&sentence("毛泽东到达井冈山"), &g, LengthBounds::default());
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].surface, "毛泽东");
        assert_eq!(m[0].etype, EntityType::Per);
        assert_eq!(m[0].weight, 1.0);
        assert_eq!(m[0].char_span, (0, 3));
    }

    #[test]
    fn length_filter_rejects_one_and_seven_chars() {
        let g = GazetteerRecognizer::new([
            ("京".to_string(), EntityType::Loc),
            ("北京".to_string(), EntityType::Loc),
            ("中华人民共和国".to_string(), EntityType::Loc),
            ("人民共和国".to_string(), EntityType::Loc),
        ]);
        let m = recognize_entities(&sentence("北京是中华人民共和国首都"), &g, LengthBounds::default());
        let surfaces: Vec<&str> = m.iter().map(|x| x.surface.as_str()).collect();
        assert_eq!(surfaces, ["北京", "人民共和国"]);
    }

    #[test]
    fn assemble_pairs_respect_order_and_bounds() {
        let b = Boundaries {
            begins: [0, 2].into_iter().collect(),
            ends: [1, 2, 4, 9].into_iter().collect(),
        };
        assert_eq!(assemble(&b, LengthBounds::default()), [(0, 2), (0, 4), (2, 4)]);
    }

    #[test]
    fn gazetteer_file_format() {
        let g = GazetteerRecognizer::parse("# names\n毛泽东\tPER\n北约\tORG\t0.8\n").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(GazetteerRecognizer::parse(&g.to_text()).unwrap().len(), 2);
        assert!(GazetteerRecognizer::parse("x\tFOO\n").is_err());
        assert!(GazetteerRecognizer::parse("x\n").is_err());
    }

    #[test]
    fn trained_boundary_model_recovers_training_mentions() {
        let texts = ["张三访问北京", "李四访问上海", "张三会见李四", "王五前往北京", "李四前往上海"];
        let sentences: Vec<Sentence> = texts.iter().map(|t| sentence(t)).collect();
        let names = [("张三", EntityType::Per), ("李四", EntityType::Per), ("王五", EntityType::Per), ("北京", EntityType::Loc), ("上海", EntityType::Loc)];
        let gold: Vec<GoldSentence> = sentences
            .iter()
            .map(|s| GoldSentence {
                sentence: s,
                mentions: names
                    .iter()
                    .filter_map(|(n, t)| {
                        s.text.find(n).map(|byte| {
                            let start = s.text[..byte].chars().count();
                            (start, start + n.chars().count(), *t)
                        })
                    })
                    .collect(),
            })
            .collect();
        let rec = BoundaryModelRecognizer::train(&gold, LengthBounds::default(), &TrainConfig { l2: 0.1, ..Default::default() }).unwrap();
        let found = recognize_entities(&sentences[0], &rec, LengthBounds::default());
        let got: Vec<(&str, EntityType)> = found.iter().map(|m| (m.surface.as_str(), m.etype)).collect();
        assert_eq!(got, [("张三", EntityType::Per), ("北京", EntityType::Loc)]);
    }
}

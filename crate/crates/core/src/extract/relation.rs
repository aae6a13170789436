use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::annotations::AnnotatedSentence;
use super::recognizer::EntityMention;
use super::sentence::Sentence;
use super::{ExtractError, Result};
use crate::corpus::{omni_word_spans, Lexicon, TermBag};
use crate::learn::{Classifier, Instance};

/// Label of mention pairs that hold no relation.
pub const NO_RELATION: &str = "NONE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationType {
    #[serde(rename = "PER-SOC")]
    PerSoc,
    #[serde(rename = "GEN-AFF")]
    GenAff,
    #[serde(rename = "ORG-AFF")]
    OrgAff,
    #[serde(rename = "PART-WHOLE")]
    PartWhole,
    #[serde(rename = "PHYS")]
    Phys,
}

impl RelationType {
    pub const ALL: [RelationType; 5] = [
        RelationType::PerSoc,
        RelationType::GenAff,
        RelationType::OrgAff,
        RelationType::PartWhole,
        RelationType::Phys,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::PerSoc => "PER-SOC",
            RelationType::GenAff => "GEN-AFF",
            RelationType::OrgAff => "ORG-AFF",
            RelationType::PartWhole => "PART-WHOLE",
            RelationType::Phys => "PHYS",
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationType {
    type Err = ExtractError;
    fn from_str(s: &str) -> Result<Self> {
        RelationType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ExtractError::UnknownType(s.to_string()))
    }
}

/// A typed relation between two mentions of the same sentence. `arg1` is the
/// mention that starts first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationMention {
    pub rtype: RelationType,
    pub arg1: EntityMention,
    pub arg2: EntityMention,
    pub weight: f64,
    pub doc_id: String,
    pub sentence_index: usize,
}

/// Relation classifier plus the lexicon its features were built with.
#[derive(Debug, Clone)]
pub struct RelationExtractor {
    pub classifier: Classifier,
    pub lexicon: Lexicon,
    /// Sentences with more mentions than this yield no relations.
    pub max_entities: usize,
}

impl RelationExtractor {
    pub fn new(classifier: Classifier, lexicon: Lexicon) -> Self {
        Self {
            classifier,
            lexicon,
            max_entities: 10,
        }
    }
}

/// Unordered mention pairs `(i, j)` with `mentions[i]` starting first, or
/// nothing when the sentence holds more than `max_entities` mentions. Pairs of
/// identical mentions (same span and type) are left out.
pub fn candidate_pairs(mentions: &[EntityMention], max_entities: usize) -> Vec<(usize, usize)> {
    if mentions.len() > max_entities {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..mentions.len()).collect();
    order.sort_by_key(|&i| (mentions[i].char_span, mentions[i].etype));
    let mut pairs = Vec::new();
    for (a, &i) in order.iter().enumerate() {
        for &j in &order[a + 1..] {
            let (mi, mj) = (&mentions[i], &mentions[j]);
            if mi.char_span == mj.char_span && mi.etype == mj.etype {
                continue;
            }
            pairs.push((i, j));
        }
    }
    pairs
}

/// Omni-word terms of the text from the first argument's start to the last
/// argument's end, each prefixed by where it sits: `A1:` inside arg1, `A2:`
/// inside arg2, `BT:` strictly between them, `X:` straddling a boundary.
pub fn relation_features(sentence: &Sentence, arg1: (usize, usize), arg2: (usize, usize), lexicon: &Lexicon) -> TermBag {
    let lo = arg1.0.min(arg2.0);
    let hi = arg1.1.max(arg2.1);
    let span = sentence.slice(lo, hi);
    let inside = |s: usize, e: usize, arg: (usize, usize)| arg.0 <= s && e <= arg.1;
    omni_word_spans(&span, lexicon)
        .into_iter()
        .map(|t| {
            let (s, e) = (lo + t.start, lo + t.end);
            let marker = if inside(s, e, arg1) {
                "A1"
            } else if inside(s, e, arg2) {
                "A2"
            } else if s >= arg1.1 && e <= arg2.0 {
                "BT"
            } else {
                "X"
            };
            format!("{marker}:{}", t.term)
        })
        .collect()
}

/// Classifies every candidate pair; pairs predicted as a relation type are
/// returned with the class posterior as weight.
pub fn extract_relations(
    sentence: &Sentence,
    mentions: &[EntityMention],
    extractor: &RelationExtractor,
) -> Vec<RelationMention> {
    candidate_pairs(mentions, extractor.max_entities)
        .into_iter()
        .filter_map(|(i, j)| {
            let (a1, a2) = (&mentions[i], &mentions[j]);
            let features = relation_features(sentence, a1.char_span, a2.char_span, &extractor.lexicon);
            let (label, p) = extractor.classifier.predict_label(&features);
            let rtype = label.parse::<RelationType>().ok()?;
            Some(RelationMention {
                rtype,
                arg1: a1.clone(),
                arg2: a2.clone(),
                weight: p,
                doc_id: sentence.doc_id.clone(),
                sentence_index: sentence.index,
            })
        })
        .collect()
}

/// Training instances for the relation classifier: every candidate pair of
/// every annotated sentence, labelled with its annotated type or
/// [`NO_RELATION`].
pub fn relation_instances(sentences: &[AnnotatedSentence], lexicon: &Lexicon, max_entities: usize) -> Vec<Instance> {
    let mut out = Vec::new();
    for s in sentences {
        for (i, j) in candidate_pairs(&s.mentions, max_entities) {
            let label = s
                .relations
                .iter()
                .find(|&&(a, b, _)| (a == i && b == j) || (a == j && b == i))
                .map_or(NO_RELATION, |r| r.2.as_str());
            let features = relation_features(&s.sentence, s.mentions[i].char_span, s.mentions[j].char_span, lexicon);
            out.push(Instance::new(features, label));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::recognizer::EntityType;
    use crate::extract::sentence::split_text;
    use crate::learn::{train_maxent, TrainConfig};

    fn mention(surface: &str, etype: EntityType, span: (usize, usize)) -> EntityMention {
        EntityMention {
            surface: surface.into(),
            etype,
            weight: 1.0,
            doc_id: "d".into(),
            sentence_index: 0,
            char_span: span,
        }
    }

    fn n_mentions(n: usize) -> Vec<EntityMention> {
        (0..n).map(|i| mention("甲乙", EntityType::Per, (3 * i, 3 * i + 2))).collect()
    }

    fn binom2(n: usize) -> usize {
        // oracle: explicit enumeration
        let mut c = 0;
        for i in 0..n {
            for _ in i + 1..n {
                c += 1;
            }
        }
        c
    }

    #[test]
    fn pair_counts() {
        assert_eq!(candidate_pairs(&n_mentions(2), 10).len(), 1);
        assert_eq!(candidate_pairs(&n_mentions(4), 10).len(), binom2(4));
        assert_eq!(candidate_pairs(&n_mentions(10), 10).len(), binom2(10));
        assert!(candidate_pairs(&n_mentions(11), 10).is_empty());
    }

    #[test]
    fn pairs_put_earlier_mention_first() {
        let ms = vec![mention("乙乙", EntityType::Loc, (5, 7)), mention("甲甲", EntityType::Per, (0, 2))];
        assert_eq!(candidate_pairs(&ms, 10), [(1, 0)]);
    }

    #[test]
    fn features_carry_position_markers() {
        let s = split_text("d", "毛泽东到达井冈山").remove(0);
        let lex = Lexicon::new(["毛泽东", "泽东", "到达", "井冈山", "达井"]).unwrap();
        let f = relation_features(&s, (0, 3), (5, 8), &lex);
        let names: Vec<&str> = f.iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["A1:毛泽东", "A1:泽东", "A2:井冈山", "BT:到达", "X:达井"]);
    }

    #[test]
    fn relation_types_round_trip_through_strings() {
        for t in RelationType::ALL {
            assert_eq!(t.as_str().parse::<RelationType>().unwrap(), t);
        }
        assert!("NONE".parse::<RelationType>().is_err());
    }

    #[test]
    fn classifier_drives_extraction() {
        let lex = Lexicon::new(["到达", "会见", "和和"]).unwrap();
        let mk = |text: &str, label: &str| {
            let s = split_text("d", text).remove(0);
            Instance::new(relation_features(&s, (0, 2), (4, 6), &lex), label)
        };
        let train = vec![
            mk("甲甲到达乙乙", "PHYS"),
            mk("丙丙到达丁丁", "PHYS"),
            mk("甲甲会见乙乙", "PER-SOC"),
            mk("丙丙会见丁丁", "PER-SOC"),
            mk("甲甲和和乙乙", NO_RELATION),
            mk("丙丙和和丁丁", NO_RELATION),
        ];
        let clf = train_maxent(&train, &TrainConfig::default()).unwrap();
        let ex = RelationExtractor::new(clf, lex);
        let s = split_text("d", "张张到达李李").remove(0);
        let ms = vec![mention("张张", EntityType::Per, (0, 2)), mention("李李", EntityType::Loc, (4, 6))];
        let rels = extract_relations(&s, &ms, &ex);
        assert_eq!(rels.len(), 1);
        assert_eq!(rels[0].rtype, RelationType::Phys);
        assert_eq!(rels[0].arg1.surface, "张张");

        let s = split_text("d", "张张和和李李").remove(0);
        assert!(extract_relations(&s, &ms, &ex).is_empty());
    }
}

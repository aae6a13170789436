use serde::{Deserialize, Serialize};

use crate::corpus::Document;

/// Characters that end a sentence.
pub const TERMINATORS: &[char] = &['。', '！', '？', '!', '?', '.', '\n'];

/// A sentence of a document, located by character offsets `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl Sentence {
    pub fn key(&self) -> String {
        sentence_key(&self.doc_id, self.index)
    }

    pub fn char_len(&self) -> usize {
        self.end - self.start
    }

    /// Substring by sentence-relative character offsets.
    pub fn slice(&self, start: usize, end: usize) -> String {
        self.text.chars().skip(start).take(end.saturating_sub(start)).collect()
    }

    /// Whether a document-level span lies inside this sentence.
    pub fn contains_span(&self, start: usize, end: usize) -> bool {
        self.start <= start && end <= self.end
    }
}

/// `doc_id#index`, the sentence reference stored in frame info slots.
pub fn sentence_key(doc_id: &str, index: usize) -> String {
    format!("{doc_id}#{index}")
}

pub fn split_sentences(doc: &Document) -> Vec<Sentence> {
    split_text(&doc.id, &doc.text)
}

/// Splits on [`TERMINATORS`]. Terminators and edge whitespace belong to no
/// sentence; segments that are empty after trimming are dropped.
pub fn split_text(doc_id: &str, text: &str) -> Vec<Sentence> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut seg_start = 0;
    for i in 0..=chars.len() {
        if i < chars.len() && !TERMINATORS.contains(&chars[i]) {
            continue;
        }
        let mut s = seg_start;
        let mut e = i;
        while s < e && chars[s].is_whitespace() {
            s += 1;
        }
        while e > s && chars[e - 1].is_whitespace() {
            e -= 1;
        }
        if s < e {
            out.push(Sentence {
                doc_id: doc_id.to_string(),
                index: out.len(),
                text: chars[s..e].iter().collect(),
                start: s,
                end: e,
            });
        }
        seg_start = i + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_sentences() {
        let s = split_text("d", "A。B！");
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].text.as_str(), s[0].start, s[0].end), ("A", 0, 1));
        assert_eq!((s[1].text.as_str(), s[1].start, s[1].end), ("B", 2, 3));
        assert_eq!(s[1].key(), "d#1");
    }

    #[test]
    fn no_terminator_is_one_sentence() {
        let s = split_text("d", "毛泽东在井冈山");
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].text, "毛泽东在井冈山");
    }

    #[test]
    fn runs_of_terminators_and_blank_lines() {
        let s = split_text("d", "甲。。\n\n  乙 ？");
        assert_eq!(s.iter().map(|x| x.text.as_str()).collect::<Vec<_>>(), ["甲", "乙"]);
        assert_eq!(s[1].index, 1);
    }

    proptest! {
        // Reassembly oracle: sentence texts sit at their offsets and every
        // uncovered character is a terminator or whitespace.
        #[test]
        fn sentences_reassemble_the_text(text in "[ab 甲。！?.\n]{0,40}") {
            let chars: Vec<char> = text.chars().collect();
            let sentences = split_text("d", &text);
            let mut covered = vec![false; chars.len()];
            let mut last_end = 0;
            for (i, s) in sentences.iter().enumerate() {
                prop_assert_eq!(s.index, i);
                prop_assert!(!s.text.is_empty());
                prop_assert!(s.start >= last_end);
                let piece: String = chars[s.start..s.end].iter().collect();
                prop_assert_eq!(&piece, &s.text);
                prop_assert!(!s.text.chars().any(|c| TERMINATORS.contains(&c)));
                covered[s.start..s.end].iter_mut().for_each(|c| *c = true);
                last_end = s.end;
            }
            for (c, cov) in chars.iter().zip(covered) {
                prop_assert!(cov || TERMINATORS.contains(c) || c.is_whitespace());
            }
        }
    }
}

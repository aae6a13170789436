use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Result};

/// A word list used for Omni-word matching.
///
/// Lengths are counted in Unicode scalar values.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: HashSet<String>,
    max_entry_len: usize,
}

impl Lexicon {
    /// Builds a lexicon; blank entries are skipped.
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let entries: HashSet<String> = entries
            .into_iter()
            .map(Into::into)
            .filter(|e| !e.is_empty())
            .collect();
        if entries.is_empty() {
            return Err(CorpusError::EmptyLexicon);
        }
        let max_entry_len = entries.iter().map(|e| e.chars().count()).max().unwrap_or(0);
        Ok(Self { entries, max_entry_len })
    }

    /// One entry per line, UTF-8. Surrounding whitespace is trimmed.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::new(text.lines().map(|l| l.trim().to_string()))
    }

    pub fn contains(&self, term: &str) -> bool {
        self.entries.contains(term)
    }

    pub fn max_entry_len(&self) -> usize {
        self.max_entry_len
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in codepoint order.
    pub fn sorted_entries(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.entries.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    /// Serializes as the on-disk format (sorted, one per line).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in self.sorted_entries() {
            out.push_str(e);
            out.push('\n');
        }
        out
    }
}

/// A lexicon hit inside a text, in character offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermSpan<'a> {
    pub start: usize,
    pub end: usize,
    pub term: &'a str,
}

/// Every lexicon entry occurring as a substring of `text`, overlapping hits
/// included, ordered by (start, end).
pub fn omni_word_spans<'a>(text: &'a str, lexicon: &Lexicon) -> Vec<TermSpan<'a>> {
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let n = bounds.len() - 1;
    let window = lexicon.max_entry_len();
    let mut spans = Vec::new();
    for start in 0..n {
        let last = (start + window).min(n);
        for end in start + 1..=last {
            let term = &text[bounds[start]..bounds[end]];
            if lexicon.contains(term) {
                spans.push(TermSpan { start, end, term });
            }
        }
    }
    spans
}

/// Omni-word term multiset of `text`.
pub fn tokenize_omni_word(text: &str, lexicon: &Lexicon) -> TermBag {
    omni_word_spans(text, lexicon).into_iter().map(|s| s.term).collect()
}

/// A multiset of strings, iterated in codepoint order.
///
/// Used both for document terms and for classifier features.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermBag(BTreeMap<String, u32>);

impl TermBag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, term: impl Into<String>) {
        self.add(term, 1);
    }

    pub fn add(&mut self, term: impl Into<String>, count: u32) {
        if count > 0 {
            *self.0.entry(term.into()).or_insert(0) += count;
        }
    }

    pub fn count(&self, term: &str) -> u32 {
        self.0.get(term).copied().unwrap_or(0)
    }

    /// Number of distinct terms.
    pub fn distinct(&self) -> usize {
        self.0.len()
    }

    /// Total multiplicity.
    pub fn total(&self) -> u64 {
        self.0.values().map(|&c| u64::from(c)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn extend_from(&mut self, other: &TermBag) {
        for (t, c) in other.iter() {
            self.add(t, c);
        }
    }
}

impl<S: Into<String>> FromIterator<S> for TermBag {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut bag = TermBag::new();
        for t in iter {
            bag.insert(t);
        }
        bag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lex(entries: &[&str]) -> Lexicon {
        Lexicon::new(entries.iter().copied()).unwrap()
    }

    // Independent oracle: every (i, j) substring, no window cap.
    fn brute_force(text: &str, lexicon_entries: &[String]) -> TermBag {
        let chars: Vec<char> = text.chars().collect();
        let mut bag = TermBag::new();
        for i in 0..chars.len() {
            for j in i + 1..=chars.len() {
                let s: String = chars[i..j].iter().collect();
                if lexicon_entries.contains(&s) {
                    bag.insert(s);
                }
            }
        }
        bag
    }

    #[test]
    fn overlapping_chinese_matches() {
        let l = lex(&["北京", "大学", "北京大学", "京大", "上海"]);
        let bag = tokenize_omni_word("北京大学", &l);
        let expected: TermBag = ["北京", "京大", "大学", "北京大学"].into_iter().collect();
        assert_eq!(bag, expected);
    }

    #[test]
    fn empty_text() {
        assert!(tokenize_omni_word("", &lex(&["a"])).is_empty());
    }

    #[test]
    fn repeated_term_counts() {
        let bag = tokenize_omni_word("abab", &lex(&["ab"]));
        assert_eq!(bag.count("ab"), 2);
        assert_eq!(bag.total(), 2);
    }

    #[test]
    fn max_entry_len_counts_chars_not_bytes() {
        let l = lex(&["北京大学", "ab"]);
        assert_eq!(l.max_entry_len(), 4);
    }

    #[test]
    fn empty_lexicon_rejected() {
        assert!(matches!(Lexicon::new(["", ""]), Err(CorpusError::EmptyLexicon)));
    }

    #[test]
    fn spans_carry_char_offsets() {
        let l = lex(&["大学"]);
        let spans = omni_word_spans("在北京大学", &l);
        assert_eq!(spans, vec![TermSpan { start: 3, end: 5, term: "大学" }]);
    }

    proptest! {
        #[test]
        fn matches_substring_oracle(
            text in "[abc北京]{0,20}",
            entries in proptest::collection::vec("[abc北京]{1,4}", 1..12),
        ) {
            let l = Lexicon::new(entries.clone()).unwrap();
            prop_assert_eq!(tokenize_omni_word(&text, &l), brute_force(&text, &entries));
        }

        #[test]
        fn tokenize_is_pure(text in "[ab]{0,16}", entries in proptest::collection::vec("[ab]{1,3}", 1..6)) {
            let l = Lexicon::new(entries).unwrap();
            prop_assert_eq!(tokenize_omni_word(&text, &l), tokenize_omni_word(&text, &l));
        }
    }
}

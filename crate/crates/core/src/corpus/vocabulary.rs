use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{tokenize_store, CorpusError, DocumentStore, Lexicon, Result, TermBag};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VocabularyOptions {
    /// Fraction of distinct terms removed at each end of the frequency ranking.
    pub prune_ratio: f64,
    /// Terms with corpus frequency below this are removed.
    pub min_freq: u64,
}

impl Default for VocabularyOptions {
    fn default() -> Self {
        Self {
            prune_ratio: 0.05,
            min_freq: 10,
        }
    }
}

/// Pruned term inventory, ordered by descending corpus frequency with ties in
/// codepoint order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    freq: Vec<u64>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    freq: Vec<u64>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Vocabulary::from_parts(r.terms, r.freq)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            terms: v.terms,
            freq: v.freq,
        }
    }
}

impl Vocabulary {
    /// `freq` is padded with zeros or truncated to match `terms`.
    pub fn from_parts(terms: Vec<String>, mut freq: Vec<u64>) -> Self {
        freq.resize(terms.len(), 0);
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { terms, freq, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    pub fn freq(&self, id: usize) -> u64 {
        self.freq[id]
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// Sparse (term id, count) pairs of the in-vocabulary part of `bag`,
    /// ordered by term id.
    pub fn encode(&self, bag: &TermBag) -> Vec<(usize, u32)> {
        let mut v: Vec<(usize, u32)> = bag
            .iter()
            .filter_map(|(t, c)| self.id(t).map(|id| (id, c)))
            .collect();
        v.sort_unstable();
        v
    }
}

pub fn build_vocabulary(
    store: &DocumentStore,
    lexicon: &Lexicon,
    options: &VocabularyOptions,
) -> Result<Vocabulary> {
    if store.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    build_vocabulary_from_bags(&tokenize_store(store, lexicon), options)
}

/// Frequency-ranked pruning over already tokenized documents.
pub fn build_vocabulary_from_bags(bags: &[TermBag], options: &VocabularyOptions) -> Result<Vocabulary> {
    if bags.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    if !(0.0..0.5).contains(&options.prune_ratio) {
        return Err(CorpusError::InvalidParameter(format!(
            "prune_ratio must lie in [0, 0.5), got {}",
            options.prune_ratio
        )));
    }
    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    for bag in bags {
        for (t, c) in bag.iter() {
            *totals.entry(t).or_insert(0) += u64::from(c);
        }
    }
    // BTreeMap iteration is codepoint order; the stable sort keeps it for ties.
    let mut ranked: Vec<(&str, u64)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1));

    let n = ranked.len();
    let cut = ((n as f64) * options.prune_ratio + 1e-9).floor() as usize;
    let kept = if 2 * cut >= n { &[][..] } else { &ranked[cut..n - cut] };
    let (terms, freq): (Vec<String>, Vec<u64>) = kept
        .iter()
        .filter(|(_, f)| *f >= options.min_freq)
        .map(|(t, f)| (t.to_string(), *f))
        .unzip();
    Ok(Vocabulary::from_parts(terms, freq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bag_with(counts: &[(&str, u32)]) -> TermBag {
        let mut b = TermBag::new();
        for &(t, c) in counts {
            b.add(t, c);
        }
        b
    }

    #[test]
    fn frequency_floor() {
        let bags = vec![bag_with(&[("a", 9), ("b", 10), ("c", 30)])];
        let v = build_vocabulary_from_bags(&bags, &VocabularyOptions { prune_ratio: 0.0, min_freq: 10 }).unwrap();
        assert_eq!(v.terms(), ["c", "b"]);
        assert!(v.id("a").is_none());
    }

    #[test]
    fn five_percent_each_end_of_hundred_terms() {
        // term i has frequency 100 + i, all distinct
        let counts: Vec<(String, u32)> = (0..100).map(|i| (format!("t{i:03}"), 100 + i)).collect();
        let mut bag = TermBag::new();
        for (t, c) in &counts {
            bag.add(t.clone(), *c);
        }
        let v = build_vocabulary_from_bags(&[bag], &VocabularyOptions::default()).unwrap();
        assert_eq!(v.len(), 90);
        for i in 0..5 {
            assert!(v.id(&format!("t{i:03}")).is_none());
            assert!(v.id(&format!("t{:03}", 99 - i)).is_none());
        }
        assert_eq!(v.term(0), "t094");
        assert_eq!(v.term(89), "t005");
    }

    #[test]
    fn no_pruning_keeps_everything() {
        let bags = vec![bag_with(&[("x", 1), ("y", 2)]), bag_with(&[("z", 1)])];
        let v = build_vocabulary_from_bags(&bags, &VocabularyOptions { prune_ratio: 0.0, min_freq: 0 }).unwrap();
        assert_eq!(v.terms(), ["y", "x", "z"]);
        assert_eq!(v.freq(0), 2);
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(
            build_vocabulary_from_bags(&[], &VocabularyOptions::default()),
            Err(CorpusError::EmptyCorpus)
        ));
    }

    #[test]
    fn serde_rebuilds_index() {
        let v = Vocabulary::from_parts(vec!["a".into(), "b".into()], vec![3, 2]);
        let back: Vocabulary = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back.id("b"), Some(1));
        assert_eq!(back, v);
    }

    proptest! {
        #[test]
        fn invariants_hold_on_random_corpora(
            docs in proptest::collection::vec(proptest::collection::vec((0u8..40, 1u32..30), 0..15), 1..8),
            ratio in 0.0f64..0.3,
            min_freq in 0u64..40,
        ) {
            let bags: Vec<TermBag> = docs.iter().map(|d| {
                let mut b = TermBag::new();
                for &(t, c) in d { b.add(format!("w{t}"), c); }
                b
            }).collect();
            let opts = VocabularyOptions { prune_ratio: ratio, min_freq };
            let v = build_vocabulary_from_bags(&bags, &opts).unwrap();

            let mut totals: BTreeMap<String, u64> = BTreeMap::new();
            for b in &bags { for (t, c) in b.iter() { *totals.entry(t.to_string()).or_default() += u64::from(c); } }
            let mut ranked: Vec<(String, u64)> = totals.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            let cut = ((ranked.len() as f64) * ratio + 1e-9).floor() as usize;

            for id in 0..v.len() {
                prop_assert!(v.freq(id) >= min_freq);
            }
            for (t, _) in ranked.iter().take(cut).chain(ranked.iter().rev().take(cut)) {
                prop_assert!(v.id(t).is_none());
            }
            for w in v.terms().windows(2) {
                let (a, b) = (v.id(&w[0]).unwrap(), v.id(&w[1]).unwrap());
                prop_assert!(v.freq(a) > v.freq(b) || (v.freq(a) == v.freq(b) && w[0] < w[1]));
            }
        }
    }
}

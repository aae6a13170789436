//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DetectError, Result};
use crate::corpus::{TermBag, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub topics: usize,
    /// Document-topic prior; `None` means `50 / topics`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for LdaParams {
    fn default() -> Self {
        Self {
            topics: 25,
            alpha: None,
            beta: 0.1,
            iterations: 1000,
            seed: 0,
        }
    }
}

impl LdaParams {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedWord {
    pub word: String,
    pub weight: f64,
}

/// Fitted topic model. `phi[k][w]` is the probability of vocabulary term `w`
/// under topic `k`; `theta[d][k]` the topic mixture of input document `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub topics: usize,
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl TopicModel {
    /// The `n` most probable vocabulary terms of `topic`, descending, ties in
    /// codepoint order. `n` larger than the vocabulary returns all of it.
    pub fn top_words(&self, topic: usize, vocab: &Vocabulary, n: usize) -> Result<Vec<WeightedWord>> {
        if n == 0 {
            return Err(DetectError::InvalidParameter("top-word count must be positive".into()));
        }
        let row = self
            .phi
            .get(topic)
            .ok_or_else(|| DetectError::InvalidParameter(format!("topic {topic} out of range")))?;
        let mut ids: Vec<usize> = (0..row.len()).collect();
        ids.sort_by(|&a, &b| {
            row[b]
                .total_cmp(&row[a])
                .then_with(|| vocab.term(a).cmp(vocab.term(b)))
        });
        Ok(ids
            .into_iter()
            .take(n)
            .map(|w| WeightedWord {
                word: vocab.term(w).to_string(),
                weight: row[w],
            })
            .collect())
    }
}

/// Collapsed Gibbs sampling over the in-vocabulary tokens of `docs`.
///
/// Tokens are laid out per document in term order, so the result depends only
/// on the input and `params.seed`.
pub fn fit_lda(docs: &[TermBag], vocab: &Vocabulary, params: &LdaParams) -> Result<TopicModel> {
    let k = params.topics;
    if k == 0 {
        return Err(DetectError::InvalidParameter("topic count must be positive".into()));
    }
    if !(params.beta > 0.0) || !(params.alpha() > 0.0) {
        return Err(DetectError::InvalidParameter("alpha and beta must be positive".into()));
    }
    let v = vocab.len();
    let tokens: Vec<Vec<u32>> = docs
        .iter()
        .map(|bag| {
            vocab
                .encode(bag)
                .into_iter()
                .flat_map(|(w, c)| std::iter::repeat_n(w as u32, c as usize))
                .collect()
        })
        .collect();
    if tokens.iter().all(Vec::is_empty) {
        return Err(DetectError::EmptyTermMatrix);
    }

    let alpha = params.alpha();
    let beta = params.beta;
    let vbeta = v as f64 * beta;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut word_topic = vec![0u32; v * k];
    let mut doc_topic = vec![0u32; docs.len() * k];
    let mut topic_total = vec![0u32; k];
    let mut assignment: Vec<Vec<u32>> = Vec::with_capacity(tokens.len());

    for (d, doc) in tokens.iter().enumerate() {
        let z: Vec<u32> = doc
            .iter()
            .map(|&w| {
                let t = rng.random_range(0..k);
                word_topic[w as usize * k + t] += 1;
                doc_topic[d * k + t] += 1;
                topic_total[t] += 1;
                t as u32
            })
            .collect();
        assignment.push(z);
    }

    let mut weights = vec![0.0f64; k];
    for _ in 0..params.iterations {
        for (d, doc) in tokens.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let w = w as usize;
                let old = assignment[d][i] as usize;
                word_topic[w * k + old] -= 1;
                doc_topic[d * k + old] -= 1;
                topic_total[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (f64::from(word_topic[w * k + t]) + beta) / (f64::from(topic_total[t]) + vbeta)
                        * (f64::from(doc_topic[d * k + t]) + alpha);
                    total += p;
                    weights[t] = total;
                }
                let u = rng.random::<f64>() * total;
                let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                assignment[d][i] = new as u32;
                word_topic[w * k + new] += 1;
                doc_topic[d * k + new] += 1;
                topic_total[new] += 1;
            }
        }
    }

    let phi = (0..k)
        .map(|t| {
            let denom = f64::from(topic_total[t]) + vbeta;
            normalized((0..v).map(|w| (f64::from(word_topic[w * k + t]) + beta) / denom))
        })
        .collect();
    let theta = tokens
        .iter()
        .enumerate()
        .map(|(d, doc)| {
            let denom = doc.len() as f64 + k as f64 * alpha;
            normalized((0..k).map(|t| (f64::from(doc_topic[d * k + t]) + alpha) / denom))
        })
        .collect();

    Ok(TopicModel {
        topics: k,
        phi,
        theta,
        alpha,
        beta,
        iterations: params.iterations,
        seed: params.seed,
    })
}

// Removes the last-bit drift of the closed-form estimates.
fn normalized(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;

    fn bag(words: &[(&str, u32)]) -> TermBag {
        let mut b = TermBag::new();
        for &(w, c) in words {
            b.add(w, c);
        }
        b
    }

    fn vocab(words: &[&str]) -> Vocabulary {
        Vocabulary::from_parts(words.iter().map(|s| s.to_string()).collect(), vec![])
    }

    #[test]
    fn single_topic_is_smoothed_unigram() {
        let v = vocab(&["a", "b", "c"]);
        let docs = vec![bag(&[("a", 3), ("b", 1)]), bag(&[("a", 2)])];
        let params = LdaParams { topics: 1, iterations: 20, ..Default::default() };
        let m = fit_lda(&docs, &v, &params).unwrap();
        for row in &m.theta {
            assert_eq!(row.len(), 1);
            assert!((row[0] - 1.0).abs() < 1e-12);
        }
        // (count + 0.1) / (6 + 0.3)
        let expected = [5.1 / 6.3, 1.1 / 6.3, 0.1 / 6.3];
        for (p, e) in m.phi[0].iter().zip(expected) {
            assert!((p - e).abs() < 1e-12, "{p} vs {e}");
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let v = vocab(&["a", "b", "c", "d"]);
        let docs = vec![bag(&[("a", 3), ("b", 1)]), bag(&[("c", 2), ("d", 4)]), bag(&[("a", 1), ("d", 1)])];
        let p = LdaParams { topics: 2, iterations: 50, seed: 7, ..Default::default() };
        let a = fit_lda(&docs, &v, &p).unwrap();
        let b = fit_lda(&docs, &v, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn disjoint_groups_separate() {
        let v = vocab(&["a1", "a2", "a3", "b1", "b2", "b3"]);
        let mut docs = Vec::new();
        for i in 0..20u32 {
            docs.push(bag(&[("a1", 3 + i % 3), ("a2", 2), ("a3", 4)]));
            docs.push(bag(&[("b1", 2), ("b2", 3 + i % 2), ("b3", 3)]));
        }
        let p = LdaParams { topics: 2, alpha: Some(0.5), iterations: 200, seed: 3, ..Default::default() };
        let m = fit_lda(&docs, &v, &p).unwrap();
        let tops: Vec<String> = (0..2).map(|t| m.top_words(t, &v, 1).unwrap()[0].word.clone()).collect();
        let groups: Vec<char> = tops.iter().map(|w| w.chars().next().unwrap()).collect();
        assert_ne!(groups[0], groups[1], "{tops:?}");
    }

    #[test]
    fn rows_are_distributions() {
        let v = vocab(&["a", "b", "c"]);
        let docs = vec![bag(&[("a", 2), ("c", 1)]), bag(&[]), bag(&[("b", 5)])];
        let p = LdaParams { topics: 4, iterations: 10, ..Default::default() };
        let m = fit_lda(&docs, &v, &p).unwrap();
        for row in m.phi.iter().chain(m.theta.iter()) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn no_vocabulary_tokens_is_an_error() {
        let v = vocab(&["a"]);
        let err = fit_lda(&[bag(&[("zzz", 3)])], &v, &LdaParams::default()).unwrap_err();
        assert!(matches!(err, DetectError::EmptyTermMatrix));
        assert_eq!(err.to_string(), "empty term matrix");
    }

    #[test]
    fn top_words_clamps_and_rejects_zero() {
        let v = vocab(&["a", "b"]);
        let m = TopicModel {
            topics: 1,
            phi: vec![vec![0.5, 0.5]],
            theta: vec![],
            alpha: 1.0,
            beta: 0.1,
            iterations: 0,
            seed: 0,
        };
        let words = m.top_words(0, &v, 10).unwrap();
        assert_eq!(words.iter().map(|w| w.word.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        assert!(m.top_words(0, &v, 0).is_err());
    }

    #[test]
    fn top_word_of_unigram_model() {
        let v = vocab(&["b", "a"]);
        let docs = vec![bag(&[("a", 5), ("b", 1)])];
        let m = fit_lda(&docs, &v, &LdaParams { topics: 1, iterations: 5, ..Default::default() }).unwrap();
        assert_eq!(m.top_words(0, &v, 1).unwrap()[0].word, "a");
    }
}

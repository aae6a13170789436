use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::optim::{minimize, LbfgsOptions};
use super::{LearnError, Result};
use crate::corpus::TermBag;

/// A labelled bag of string features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub features: TermBag,
    pub label: String,
}

impl Instance {
    pub fn new(features: TermBag, label: impl Into<String>) -> Self {
        Self {
            features,
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Strength of the Gaussian prior on feature weights (biases are free).
    pub l2: f64,
    /// Optimizer iteration cap.
    pub epochs: usize,
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l2: 1.0,
            epochs: 300,
            tolerance: 1e-6,
        }
    }
}

/// Decision threshold on the positive-class posterior, within `[0.5, 1.0]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Threshold(f64);

impl Threshold {
    /// The usual two-class cut.
    pub const DEFAULT: Threshold = Threshold(0.5);
    /// Stands in for "the classifier outputs 1": a softmax posterior never
    /// reaches exactly 1.
    pub const STRICT: Threshold = Threshold(0.995);

    pub fn new(value: f64) -> Result<Self> {
        if (0.5..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(LearnError::InvalidThreshold(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Threshold {
    type Error = LearnError;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Threshold> for f64 {
    fn from(t: Threshold) -> f64 {
        t.0
    }
}

/// Multinomial logistic regression (maximum entropy) over sparse features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub classes: Vec<String>,
    pub bias: Vec<f64>,
    /// Per-class weights, one entry for every feature seen in training.
    pub weights: Vec<BTreeMap<String, f64>>,
    pub l2: f64,
    pub trained_on: usize,
    #[serde(default = "default_threshold")]
    pub threshold: Threshold,
}

fn default_threshold() -> Threshold {
    Threshold::DEFAULT
}

impl Classifier {
    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    /// Class posteriors in `classes` order. Unseen features are ignored.
    pub fn predict(&self, features: &TermBag) -> Vec<f64> {
        let scores: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| {
                b + features
                    .iter()
                    .filter_map(|(f, c)| w.get(f).map(|wf| wf * f64::from(c)))
                    .sum::<f64>()
            })
            .collect();
        softmax(&scores)
    }

    /// Most probable class and its posterior.
    pub fn predict_label(&self, features: &TermBag) -> (&str, f64) {
        let p = self.predict(features);
        let (i, &best) = p
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
        (&self.classes[i], best)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("classifier serializes");
        std::fs::write(path, json + "\n")
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

pub fn predict(clf: &Classifier, features: &TermBag) -> Vec<f64> {
    clf.predict(features)
}

/// True iff the posterior of `positive` reaches `threshold`.
pub fn decide(clf: &Classifier, features: &TermBag, positive: &str, threshold: Threshold) -> Result<bool> {
    let i = clf
        .class_index(positive)
        .ok_or_else(|| LearnError::UnknownClass(positive.to_string()))?;
    Ok(clf.predict(features)[i] >= threshold.value())
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / z).collect()
}

/// Dense training problem: parameters are laid out per class as
/// `[bias, w_0, .., w_{F-1}]`.
pub(crate) struct Problem {
    pub classes: usize,
    pub features: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub labels: Vec<usize>,
    pub l2: f64,
}

impl Problem {
    fn stride(&self) -> usize {
        self.features + 1
    }

    pub fn dim(&self) -> usize {
        self.classes * self.stride()
    }

    /// Negative log-likelihood plus `l2 / 2 * |w|^2`; gradient into `grad`.
    pub fn objective(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let stride = self.stride();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        let mut scores = vec![0.0; self.classes];
        for (row, &y) in self.rows.iter().zip(&self.labels) {
            for (c, s) in scores.iter_mut().enumerate() {
                let base = c * stride;
                *s = params[base] + row.iter().map(|&(j, x)| params[base + 1 + j] * x).sum::<f64>();
            }
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
            let lse = max + z.ln();
            loss += lse - scores[y];
            for (c, s) in scores.iter().enumerate() {
                let g = (s - lse).exp() - if c == y { 1.0 } else { 0.0 };
                let base = c * stride;
                grad[base] += g;
                for &(j, x) in row {
                    grad[base + 1 + j] += g * x;
                }
            }
        }
        for c in 0..self.classes {
            let base = c * stride;
            for j in 0..self.features {
                let w = params[base + 1 + j];
                loss += 0.5 * self.l2 * w * w;
                grad[base + 1 + j] += self.l2 * w;
            }
        }
        loss
    }
}

/// Fits a maximum-entropy classifier. Instances with no features are skipped.
///
/// The optimizer is deterministic, so the result depends only on the
/// instances (and their order) and `config`.
pub fn train_maxent(instances: &[Instance], config: &TrainConfig) -> Result<Classifier> {
    if !(config.l2 >= 0.0) {
        return Err(LearnError::InvalidParameter(format!("l2 must be >= 0, got {}", config.l2)));
    }
    let usable: Vec<&Instance> = instances.iter().filter(|i| !i.features.is_empty()).collect();
    if usable.len() < instances.len() {
        log::warn!("skipping {} instances without features", instances.len() - usable.len());
    }
    let classes: Vec<String> = usable
        .iter()
        .map(|i| i.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() < 2 {
        return Err(LearnError::DegenerateTrainingSet);
    }
    let feature_names: Vec<&str> = usable
        .iter()
        .flat_map(|i| i.features.iter().map(|(f, _)| f))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let feature_index: BTreeMap<&str, usize> =
        feature_names.iter().enumerate().map(|(i, f)| (*f, i)).collect();

    let problem = Problem {
        classes: classes.len(),
        features: feature_names.len(),
        rows: usable
            .iter()
            .map(|i| i.features.iter().map(|(f, c)| (feature_index[f], f64::from(c))).collect())
            .collect(),
        labels: usable
            .iter()
            .map(|i| classes.binary_search(&i.label).expect("label collected above"))
            .collect(),
        l2: config.l2,
    };
    let params = minimize(
        |w, g| problem.objective(w, g),
        vec![0.0; problem.dim()],
        LbfgsOptions {
            memory: 10,
            max_iterations: config.epochs,
            tolerance: config.tolerance,
        },
    );

    let stride = problem.features + 1;
    let bias = (0..classes.len()).map(|c| params[c * stride]).collect();
    let weights = (0..classes.len())
        .map(|c| {
            feature_names
                .iter()
                .enumerate()
                .map(|(j, f)| (f.to_string(), params[c * stride + 1 + j]))
                .collect()
        })
        .collect();
    Ok(Classifier {
        classes,
        bias,
        weights,
        l2: config.l2,
        trained_on: usable.len(),
        threshold: Threshold::DEFAULT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inst(features: &[&str], label: &str) -> Instance {
        Instance::new(features.iter().copied().collect(), label)
    }

    fn separable() -> Vec<Instance> {
        vec![
            inst(&["gun", "attack"], "pos"),
            inst(&["attack", "army"], "pos"),
            inst(&["gun", "army", "fight"], "pos"),
            inst(&["trade", "meeting"], "neg"),
            inst(&["meeting", "visit"], "neg"),
            inst(&["trade", "visit", "talk"], "neg"),
        ]
    }

    #[test]
    fn separable_set_is_fit_exactly() {
        let data = separable();
        let clf = train_maxent(&data, &TrainConfig::default()).unwrap();
        for i in &data {
            assert_eq!(clf.predict_label(&i.features).0, i.label);
        }
        assert_eq!(clf.trained_on, 6);
    }

    #[test]
    fn single_class_is_degenerate() {
        let data = vec![inst(&["a"], "x"), inst(&["b"], "x")];
        let err = train_maxent(&data, &TrainConfig::default()).unwrap_err();
        assert_eq!(err.to_string(), "degenerate training set");
    }

    #[test]
    fn training_is_deterministic() {
        let data = separable();
        let a = train_maxent(&data, &TrainConfig::default()).unwrap();
        let b = train_maxent(&data, &TrainConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicated_data_keeps_decisions() {
        let data = separable();
        let doubled: Vec<Instance> = data.iter().chain(data.iter()).cloned().collect();
        let a = train_maxent(&data, &TrainConfig::default()).unwrap();
        let b = train_maxent(&doubled, &TrainConfig::default()).unwrap();
        let probes = [
            vec!["gun"],
            vec!["trade"],
            vec!["gun", "trade", "attack"],
            vec!["meeting", "fight"],
            vec!["army", "visit", "talk"],
            vec![],
        ];
        for p in probes {
            let bag: TermBag = p.iter().copied().collect();
            assert_eq!(a.predict_label(&bag).0, b.predict_label(&bag).0, "{p:?}");
        }
    }

    #[test]
    fn empty_features_give_bias_softmax() {
        let clf = train_maxent(&separable(), &TrainConfig::default()).unwrap();
        let p = clf.predict(&TermBag::new());
        let expected = softmax(&clf.bias);
        assert_eq!(p, expected);
    }

    #[test]
    fn feature_seen_only_with_a_favours_a() {
        let data = vec![inst(&["f"], "A"), inst(&["g"], "B")];
        let clf = train_maxent(&data, &TrainConfig { l2: 0.0, epochs: 50, tolerance: 1e-8 }).unwrap();
        let p = clf.predict(&["f"].into_iter().collect());
        assert!(p[clf.class_index("A").unwrap()] > p[clf.class_index("B").unwrap()]);
    }

    #[test]
    fn threshold_rule() {
        // a one-feature classifier whose posterior we control exactly
        let make = |p_pos: f64| Classifier {
            classes: vec!["neg".into(), "pos".into()],
            bias: vec![0.0, (p_pos / (1.0 - p_pos)).ln()],
            weights: vec![BTreeMap::new(), BTreeMap::new()],
            l2: 1.0,
            trained_on: 0,
            threshold: Threshold::DEFAULT,
        };
        let empty = TermBag::new();
        assert!(decide(&make(0.996), &empty, "pos", Threshold::STRICT).unwrap());
        assert!(decide(&make(0.6), &empty, "pos", Threshold::DEFAULT).unwrap());
        assert!(!decide(&make(0.6), &empty, "pos", Threshold::STRICT).unwrap());
        assert!(decide(&make(0.6), &empty, "nope", Threshold::DEFAULT).is_err());
        assert!(Threshold::new(0.4).is_err());
        assert!(Threshold::new(1.01).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let clf = train_maxent(&separable(), &TrainConfig::default()).unwrap();
        let back: Classifier = serde_json::from_str(&serde_json::to_string(&clf).unwrap()).unwrap();
        assert_eq!(back, clf);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let problem = Problem {
            classes: 3,
            features: 4,
            rows: vec![
                vec![(0, 1.0), (2, 2.0)],
                vec![(1, 1.0), (3, 1.0)],
                vec![(0, 3.0), (1, 1.0), (3, 2.0)],
                vec![(2, 1.0)],
            ],
            labels: vec![0, 1, 2, 1],
            l2: 0.7,
        };
        let params: Vec<f64> = (0..problem.dim()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let mut grad = vec![0.0; problem.dim()];
        problem.objective(&params, &mut grad);
        let mut scratch = vec![0.0; problem.dim()];
        let h = 1e-6;
        for i in 0..problem.dim() {
            let mut plus = params.clone();
            plus[i] += h;
            let mut minus = params.clone();
            minus[i] -= h;
            let numeric = (problem.objective(&plus, &mut scratch) - problem.objective(&minus, &mut scratch)) / (2.0 * h);
            let rel = (numeric - grad[i]).abs() / grad[i].abs().max(1e-3);
            assert!(rel < 1e-5, "component {i}: analytic {} numeric {numeric}", grad[i]);
        }
    }

    proptest! {
        #[test]
        fn posteriors_are_normalized(
            probe in proptest::collection::vec("[a-z]{1,6}", 0..10),
        ) {
            let clf = train_maxent(&separable(), &TrainConfig::default()).unwrap();
            let bag: TermBag = probe.into_iter().collect();
            let p = clf.predict(&bag);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }
}

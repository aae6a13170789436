use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::maxent::{train_maxent, Instance, Threshold, TrainConfig};
use super::{LearnError, Result};

/// Harmonic mean of precision and recall; zero when both are zero.
pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        Self {
            precision,
            recall,
            f_score: f_score(precision, recall),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
}

impl Confusion {
    pub fn record(&mut self, actual: bool, predicted: bool) {
        match (actual, predicted) {
            (true, true) => self.true_positive += 1,
            (false, true) => self.false_positive += 1,
            (true, false) => self.false_negative += 1,
            (false, false) => self.true_negative += 1,
        }
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.true_positive += other.true_positive;
        self.false_positive += other.false_positive;
        self.false_negative += other.false_negative;
        self.true_negative += other.true_negative;
    }

    /// Precision is 0 when nothing was predicted positive; likewise recall.
    pub fn prf(&self) -> Prf {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        Prf::new(
            ratio(self.true_positive, self.true_positive + self.false_positive),
            ratio(self.true_positive, self.true_positive + self.false_negative),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub folds: usize,
    pub positive: String,
    pub threshold: Threshold,
    pub train: TrainConfig,
    pub seed: u64,
}

impl CvOptions {
    pub fn new(positive: impl Into<String>) -> Self {
        Self {
            folds: 5,
            positive: positive.into(),
            threshold: Threshold::DEFAULT,
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub threshold: Threshold,
    /// Micro-averaged over the evaluated folds.
    pub prf: Prf,
    pub confusion: Confusion,
    pub skipped_folds: Vec<usize>,
}

/// Stratified fold assignment: each label's instances are shuffled with
/// `seed` and dealt round-robin. Returns instance indices per fold.
pub fn stratified_folds(instances: &[Instance], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, inst) in instances.iter().enumerate() {
        by_label.entry(&inst.label).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (_, mut idx) in by_label {
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    folds
}

/// k-fold cross-validated P/R/F of `options.positive`.
pub fn cross_validate(instances: &[Instance], options: &CvOptions) -> Result<CvReport> {
    let mut reports = cross_validate_thresholds(instances, options, &[options.threshold])?;
    Ok(reports.remove(0))
}

/// Like [`cross_validate`], but scores the same per-fold models at several
/// decision thresholds.
pub fn cross_validate_thresholds(
    instances: &[Instance],
    options: &CvOptions,
    thresholds: &[Threshold],
) -> Result<Vec<CvReport>> {
    let k = options.folds;
    if k < 2 {
        return Err(LearnError::InvalidParameter(format!("need at least 2 folds, got {k}")));
    }
    if instances.len() < k {
        return Err(LearnError::InvalidParameter(format!(
            "{} instances cannot fill {k} folds",
            instances.len()
        )));
    }
    let folds = stratified_folds(instances, k, options.seed);

    // per fold: None if skipped, else one confusion per threshold
    let outcomes: Vec<Result<Option<Vec<Confusion>>>> = folds
        .par_iter()
        .enumerate()
        .map(|(f, held_out)| {
            if !held_out.iter().any(|&i| instances[i].label == options.positive) {
                log::warn!("fold {f}: no {:?} instances held out, skipped", options.positive);
                return Ok(None);
            }
            let train: Vec<Instance> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, idx)| idx.iter().map(|&i| instances[i].clone()))
                .collect();
            let clf = match train_maxent(&train, &options.train) {
                Ok(c) => c,
                Err(LearnError::DegenerateTrainingSet) => {
                    log::warn!("fold {f}: training part has a single class, skipped");
                    return Ok(None);
                }
                Err(e) => return Err(e),
            };
            let Some(pos) = clf.class_index(&options.positive) else {
                log::warn!("fold {f}: {:?} absent from training part, skipped", options.positive);
                return Ok(None);
            };
            let mut confusions = vec![Confusion::default(); thresholds.len()];
            for &i in held_out {
                let p = clf.predict(&instances[i].features)[pos];
                let actual = instances[i].label == options.positive;
                for (c, t) in confusions.iter_mut().zip(thresholds) {
                    c.record(actual, p >= t.value());
                }
            }
            Ok(Some(confusions))
        })
        .collect();

    let mut totals = vec![Confusion::default(); thresholds.len()];
    let mut skipped = Vec::new();
    for (f, outcome) in outcomes.into_iter().enumerate() {
        match outcome? {
            Some(cs) => totals.iter_mut().zip(&cs).for_each(|(t, c)| t.merge(c)),
            None => skipped.push(f),
        }
    }
    Ok(thresholds
        .iter()
        .zip(totals)
        .map(|(&threshold, confusion)| CvReport {
            threshold,
            prf: confusion.prf(),
            confusion,
            skipped_folds: skipped.clone(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TermBag;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn known_precision_recall_pairs() {
        assert!((f_score(0.8219, 0.8288) - 0.8253).abs() < 5e-4);
        assert!((f_score(0.9765, 0.4194) - 0.5868).abs() < 5e-4);
        assert_eq!(f_score(0.5, 0.5), 0.5);
        assert_eq!(f_score(0.0, 0.0), 0.0);
    }

    #[test]
    fn all_negative_predictions() {
        let mut c = Confusion::default();
        c.record(true, false);
        c.record(false, false);
        let prf = c.prf();
        assert_eq!(prf.recall, 0.0);
        assert_eq!(prf.f_score, 0.0);
    }

    fn separable(n: usize) -> Vec<Instance> {
        (0..n)
            .map(|i| {
                let label = if i % 2 == 0 { "pos" } else { "neg" };
                let f: TermBag = [format!("{label}_marker"), format!("noise{}", i % 7)].into_iter().collect();
                Instance::new(f, label)
            })
            .collect()
    }

    #[test]
    fn separable_data_scores_perfectly() {
        let r = cross_validate(&separable(40), &CvOptions::new("pos")).unwrap();
        assert_eq!(r.prf, Prf::new(1.0, 1.0));
        assert!(r.skipped_folds.is_empty());
    }

    #[test]
    fn folds_partition_and_stratify() {
        let data = separable(43);
        let folds = stratified_folds(&data, 5, 9);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..43).collect::<Vec<_>>());
        for f in &folds {
            let pos = f.iter().filter(|&&i| data[i].label == "pos").count();
            assert!((4..=5).contains(&pos), "{pos}");
        }
    }

    #[test]
    fn too_few_instances_or_folds() {
        assert!(cross_validate(&separable(3), &CvOptions::new("pos")).is_err());
        let opts = CvOptions { folds: 1, ..CvOptions::new("pos") };
        assert!(cross_validate(&separable(10), &opts).is_err());
    }

    #[test]
    fn fold_without_positive_is_skipped() {
        // 2 positives, 5 folds: three folds hold out no positive
        let mut data: Vec<Instance> = (0..20)
            .map(|i| Instance::new([format!("n{}", i % 4)].into_iter().collect(), "neg"))
            .collect();
        data.push(Instance::new(["p"].into_iter().collect(), "pos"));
        data.push(Instance::new(["p"].into_iter().collect(), "pos"));
        let r = cross_validate(&data, &CvOptions::new("pos")).unwrap();
        assert_eq!(r.skipped_folds.len(), 3);
    }

    #[test]
    fn random_labels_give_chance_f_score() {
        let mut scores = Vec::new();
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let data: Vec<Instance> = (0..200)
                .map(|_| {
                    let f: TermBag = (0..4).map(|_| format!("w{}", rng.random_range(0..30))).collect();
                    Instance::new(f, if rng.random_bool(0.5) { "pos" } else { "neg" })
                })
                .collect();
            let r = cross_validate(&data, &CvOptions { seed, ..CvOptions::new("pos") }).unwrap();
            scores.push(r.prf.f_score);
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        assert!((mean - 0.5).abs() <= 0.1, "{scores:?}");
    }

    proptest! {
        #[test]
        fn f_score_between_p_and_r(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
            prop_assume!(p + r > 0.0);
            let f = f_score(p, r);
            prop_assert!(f >= p.min(r) - 1e-12 && f <= p.max(r) + 1e-12);
        }

        #[test]
        fn raising_threshold_shrinks_acceptance(
            probs in proptest::collection::vec(0.0f64..=1.0, 0..50),
            a in 0.5f64..=1.0,
            b in 0.5f64..=1.0,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for p in probs {
                if p >= hi { prop_assert!(p >= lo); }
            }
        }
    }
}

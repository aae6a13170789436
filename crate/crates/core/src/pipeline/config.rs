use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Value};

use super::{PipelineError, Result};
use crate::analyze::ActionParams;
use crate::corpus::{IngestMode, VocabularyOptions};
use crate::eventdetect::{DetectParams, LdaParams};
use crate::learn::{Threshold, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecognizerChoice {
    Gazetteer,
    Annotations,
    Model,
}

impl RecognizerChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            RecognizerChoice::Gazetteer => "gazetteer",
            RecognizerChoice::Annotations => "annotations",
            RecognizerChoice::Model => "model",
        }
    }
}

impl FromStr for RecognizerChoice {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gazetteer" => Ok(RecognizerChoice::Gazetteer),
            "annotations" => Ok(RecognizerChoice::Annotations),
            "model" => Ok(RecognizerChoice::Model),
            other => Err(PipelineError::Config(format!(
                "recognizer must be gazetteer, annotations or model, got {other:?}"
            ))),
        }
    }
}

/// Flat `key = value` configuration. Relative paths resolve against the
/// directory of the file they were read from.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub lexicon: PathBuf,
    pub gazetteer: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub triggers: Option<PathBuf>,
    pub recognizer: RecognizerChoice,
    pub strict_ingest: bool,
    pub step_months: u32,
    pub topics: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub lda_iterations: usize,
    pub lda_seed: u64,
    pub prune_ratio: f64,
    pub min_freq: u64,
    pub top_words: usize,
    pub min_docs: usize,
    pub max_entities: usize,
    pub l2: f64,
    pub action: String,
    pub action_threshold: f64,
    pub min_cooccur: u64,
    pub output: PathBuf,
}

pub const KEYS: &[&str] = &[
    "corpus",
    "lexicon",
    "gazetteer",
    "annotations",
    "triggers",
    "recognizer",
    "strict_ingest",
    "step_months",
    "topics",
    "alpha",
    "beta",
    "lda_iterations",
    "lda_seed",
    "prune_ratio",
    "min_freq",
    "top_words",
    "min_docs",
    "max_entities",
    "l2",
    "action",
    "action_threshold",
    "min_cooccur",
    "output",
];

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::new(),
            lexicon: PathBuf::new(),
            gazetteer: None,
            annotations: None,
            triggers: None,
            recognizer: RecognizerChoice::Gazetteer,
            strict_ingest: false,
            step_months: 5,
            topics: 25,
            alpha: None,
            beta: 0.1,
            lda_iterations: 1000,
            lda_seed: 0,
            prune_ratio: 0.05,
            min_freq: 10,
            top_words: 100,
            min_docs: 10,
            max_entities: 10,
            l2: 1.0,
            action: "Conflict".into(),
            action_threshold: Threshold::STRICT.value(),
            min_cooccur: 12,
            output: PathBuf::from("out"),
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| PipelineError::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn display_path(p: &Path) -> String {
    p.display().to_string()
}

impl PipelineConfig {
    /// Parses config text; `base` anchors relative paths.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = Self {
            output: base.join(Self::default().output),
            ..Self::default()
        };
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(PipelineError::Config(format!("line {}: expected key = value", i + 1)));
            };
            cfg.set(k.trim(), v.trim(), base)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: display_path(path),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Sets one key; unknown keys are rejected. Call [`validate`](Self::validate)
    /// after a batch of overrides.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = || base.join(value);
        let opt_path = || (!value.is_empty()).then(|| base.join(value));
        match key {
            "corpus" => self.corpus = path(),
            "lexicon" => self.lexicon = path(),
            "gazetteer" => self.gazetteer = opt_path(),
            "annotations" => self.annotations = opt_path(),
            "triggers" => self.triggers = opt_path(),
            "output" => self.output = path(),
            "recognizer" => self.recognizer = value.parse()?,
            "strict_ingest" => self.strict_ingest = num(key, value)?,
            "step_months" => self.step_months = num(key, value)?,
            "topics" => self.topics = num(key, value)?,
            "alpha" => self.alpha = if value.is_empty() { None } else { Some(num(key, value)?) },
            "beta" => self.beta = num(key, value)?,
            "lda_iterations" => self.lda_iterations = num(key, value)?,
            "lda_seed" => self.lda_seed = num(key, value)?,
            "prune_ratio" => self.prune_ratio = num(key, value)?,
            "min_freq" => self.min_freq = num(key, value)?,
            "top_words" => self.top_words = num(key, value)?,
            "min_docs" => self.min_docs = num(key, value)?,
            "max_entities" => self.max_entities = num(key, value)?,
            "l2" => self.l2 = num(key, value)?,
            "action" => self.action = value.to_string(),
            "action_threshold" => self.action_threshold = num(key, value)?,
            "min_cooccur" => self.min_cooccur = num(key, value)?,
            other => return Err(PipelineError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if self.corpus.as_os_str().is_empty() {
            return bad("corpus is required".into());
        }
        if self.lexicon.as_os_str().is_empty() {
            return bad("lexicon is required".into());
        }
        if !(1..=120).contains(&self.step_months) {
            return bad(format!("step_months must be in 1..=120, got {}", self.step_months));
        }
        if !(1..=1000).contains(&self.topics) {
            return bad(format!("topics must be in 1..=1000, got {}", self.topics));
        }
        if self.alpha.is_some_and(|a| !(a > 0.0 && a.is_finite())) {
            return bad("alpha must be positive".into());
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive".into());
        }
        if self.lda_iterations == 0 {
            return bad("lda_iterations must be at least 1".into());
        }
        if !(0.0..0.5).contains(&self.prune_ratio) {
            return bad(format!("prune_ratio must be in [0, 0.5), got {}", self.prune_ratio));
        }
        if self.top_words == 0 || self.min_docs == 0 || self.max_entities == 0 {
            return bad("top_words, min_docs and max_entities must be at least 1".into());
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be non-negative".into());
        }
        if self.action.is_empty() {
            return bad("action must name an event type".into());
        }
        Threshold::new(self.action_threshold).map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.min_cooccur == 0 {
            return bad("min_cooccur must be at least 1".into());
        }
        match self.recognizer {
            RecognizerChoice::Gazetteer if self.gazetteer.is_none() => bad("recognizer gazetteer needs a gazetteer".into()),
            RecognizerChoice::Annotations | RecognizerChoice::Model if self.annotations.is_none() => {
                bad(format!("recognizer {} needs annotations", self.recognizer.as_str()))
            }
            _ => Ok(()),
        }
    }

    /// Every key with its effective value, one per line in key order.
    pub fn to_text(&self) -> String {
        let opt = |p: &Option<PathBuf>| p.as_deref().map(display_path).unwrap_or_default();
        let mut pairs: BTreeMap<&str, String> = BTreeMap::new();
        pairs.insert("corpus", display_path(&self.corpus));
        pairs.insert("lexicon", display_path(&self.lexicon));
        pairs.insert("gazetteer", opt(&self.gazetteer));
        pairs.insert("annotations", opt(&self.annotations));
        pairs.insert("triggers", opt(&self.triggers));
        pairs.insert("output", display_path(&self.output));
        for (k, v) in self.params() {
            let v = match v {
                Value::String(s) => s,
                Value::Null => String::new(),
                other => other.to_string(),
            };
            pairs.insert(k, v);
        }
        let mut out = String::new();
        for (k, v) in pairs {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    /// Non-path parameters, echoed into every network for provenance.
    pub fn params(&self) -> BTreeMap<&'static str, Value> {
        BTreeMap::from([
            ("recognizer", json!(self.recognizer.as_str())),
            ("strict_ingest", json!(self.strict_ingest)),
            ("step_months", json!(self.step_months)),
            ("topics", json!(self.topics)),
            ("alpha", self.alpha.map_or(Value::Null, |a| json!(a))),
            ("beta", json!(self.beta)),
            ("lda_iterations", json!(self.lda_iterations)),
            ("lda_seed", json!(self.lda_seed)),
            ("prune_ratio", json!(self.prune_ratio)),
            ("min_freq", json!(self.min_freq)),
            ("top_words", json!(self.top_words)),
            ("min_docs", json!(self.min_docs)),
            ("max_entities", json!(self.max_entities)),
            ("l2", json!(self.l2)),
            ("action", json!(self.action)),
            ("action_threshold", json!(self.action_threshold)),
            ("min_cooccur", json!(self.min_cooccur)),
        ])
    }

    pub fn ingest_mode(&self) -> IngestMode {
        if self.strict_ingest {
            IngestMode::Strict
        } else {
            IngestMode::Lenient
        }
    }

    pub fn vocabulary_options(&self) -> VocabularyOptions {
        VocabularyOptions {
            prune_ratio: self.prune_ratio,
            min_freq: self.min_freq,
        }
    }

    pub fn detect_params(&self) -> DetectParams {
        DetectParams {
            lda: LdaParams {
                topics: self.topics,
                alpha: self.alpha,
                beta: self.beta,
                iterations: self.lda_iterations,
                seed: self.lda_seed,
            },
            min_docs: self.min_docs,
            top_words: self.top_words,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            l2: self.l2,
            ..TrainConfig::default()
        }
    }

    pub fn action_params(&self) -> ActionParams {
        ActionParams {
            threshold: Threshold::new(self.action_threshold).expect("validated"),
            min_cooccur: self.min_cooccur,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = "corpus = c.jsonl\nlexicon = l.txt\ngazetteer = g.tsv\n";

    #[test]
    fn defaults_and_relative_paths() {
        let c = PipelineConfig::parse(MIN, Path::new("/data")).unwrap();
        assert_eq!(c.corpus, Path::new("/data/c.jsonl"));
        assert_eq!((c.step_months, c.topics, c.top_words, c.min_docs), (5, 25, 100, 10));
        assert_eq!((c.prune_ratio, c.min_freq, c.min_cooccur), (0.05, 10, 12));
    }

    #[test]
    fn echo_reparses_to_same_config() {
        let c = PipelineConfig::parse(&format!("{MIN}topics = 7\nalpha = 0.5\n"), Path::new("/d")).unwrap();
        let again = PipelineConfig::parse(&c.to_text(), Path::new("/elsewhere")).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_bad_input() {
        let base = Path::new("/");
        for extra in [
            "step_months = 0",
            "topics = 0",
            "bogus = 1",
            "prune_ratio = 0.5",
            "action_threshold = 0.3",
            "recognizer = crf",
            "beta = -1",
        ] {
            assert!(PipelineConfig::parse(&format!("{MIN}{extra}\n"), base).is_err(), "{extra}");
        }
        assert!(PipelineConfig::parse("lexicon = l\ngazetteer = g\n", base).is_err());
        assert!(PipelineConfig::parse("corpus = c\nlexicon = l\n", base).is_err());
    }
}

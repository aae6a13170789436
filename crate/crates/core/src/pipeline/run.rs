use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{PipelineConfig, RecognizerChoice};
use super::{PipelineError, Result};
use crate::analyze::{action_training_set, ActionModel};
use crate::corpus::{
    build_vocabulary_from_bags, ingest_documents, tokenize_store, DocumentFormat, DocumentStore, Lexicon, TermBag,
    TimeSlice, Vocabulary,
};
use crate::eventdetect::{detect_hierarchical, DetectError, DocumentEvent};
use crate::extract::{
    annotated_sentences, extract_document, load_annotations, relation_instances, AnnotationRecognizer,
    BoundaryModelRecognizer, DocAnnotation, DocumentExtraction, EntityRecognizer, ExtractionBundle, Extractor,
    GazetteerRecognizer, LengthBounds, RelationExtractor,
};
use crate::learn::{train_maxent, Classifier, Instance};
use crate::netmodel::{build_event_network, to_json, EventNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Slice,
    Detect,
    Train,
    Extract,
    Build,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Slice,
        Stage::Detect,
        Stage::Train,
        Stage::Extract,
        Stage::Build,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Slice => "slice",
            Stage::Detect => "detect",
            Stage::Train => "train",
            Stage::Extract => "extract",
            Stage::Build => "build",
        }
    }
}

/// `t0/e03/s01` -> `t0_e03_s01`.
pub fn id_to_file(id: &str) -> String {
    id.replace('/', "_")
}

/// Layout of an artifact directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    root: PathBuf,
}

impl Artifacts {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.txt")
    }

    pub fn state(&self) -> PathBuf {
        self.root.join("state.json")
    }

    pub fn ingest_report(&self) -> PathBuf {
        self.root.join("ingest.json")
    }

    pub fn slices(&self) -> PathBuf {
        self.root.join("slices").join("index.json")
    }

    pub fn events(&self, slice: usize) -> PathBuf {
        self.root.join("events").join(format!("t{slice}.json"))
    }

    pub fn bundle(&self, event_id: &str) -> PathBuf {
        self.root.join("bundles").join(format!("{}.json", id_to_file(event_id)))
    }

    pub fn network(&self, event_id: &str) -> PathBuf {
        self.root.join("networks").join(format!("{}.json", id_to_file(event_id)))
    }

    pub fn model(&self, file: &str) -> PathBuf {
        self.root.join("models").join(file)
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    write_text(path, &text)
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Artifact(format!("{}: {e}", path.display())))
}

/// Persisted action model: the classifier and the class it detects. Its
/// feature lexicon lives next to it in `lexicon.txt`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionFile {
    pub positive: String,
    pub classifier: Classifier,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct RunState {
    config: String,
    completed: Vec<Stage>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub documents: usize,
    pub rejected_lines: usize,
    pub slices: usize,
    pub events: usize,
    pub sub_events: usize,
    pub networks: usize,
    pub relation_model: bool,
    pub action_model: bool,
    pub executed: Vec<Stage>,
    pub resumed: Vec<Stage>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Relation,
    Action,
}

/// Trained models, present when their training data was configured.
#[derive(Debug, Clone, Default)]
pub struct Models {
    pub relation: Option<Classifier>,
    pub action: Option<ActionFile>,
    pub boundary: Option<BoundaryModelRecognizer>,
}

pub struct Pipeline {
    pub config: PipelineConfig,
    pub artifacts: Artifacts,
    state: RunState,
    config_text: String,
}

fn stage_err<E: std::error::Error + Send + Sync + 'static>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage: stage.name(),
        source: Box::new(e),
    }
}

fn all_nodes(events: &[Vec<DocumentEvent>]) -> Vec<&DocumentEvent> {
    events.iter().flatten().flat_map(|e| e.walk()).collect()
}

impl Pipeline {
    /// Validates the configuration and prepares the output directory.
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let artifacts = Artifacts::new(&config.output);
        let config_text = config.to_text();
        Ok(Self {
            config,
            artifacts,
            state: RunState::default(),
            config_text,
        })
    }

    fn load_state(&mut self, resume: bool) {
        self.state = RunState {
            config: self.config_text.clone(),
            completed: Vec::new(),
        };
        if !resume {
            return;
        }
        match read_json::<RunState>(&self.artifacts.state()) {
            Ok(s) if s.config == self.config_text => self.state = s,
            Ok(_) => log::info!("configuration changed; running every stage"),
            Err(_) => {}
        }
    }

    fn done(&self, stage: Stage) -> bool {
        self.state.completed.contains(&stage)
    }

    /// Records `stage` as complete. Recomputing a stage invalidates every
    /// later one; ingest is a pure function of the configuration and does not.
    fn mark(&mut self, stage: Stage) -> Result<()> {
        if stage != Stage::Ingest {
            self.state.completed.retain(|&s| s <= stage);
        }
        if !self.state.completed.contains(&stage) {
            self.state.completed.push(stage);
        }
        write_json(&self.artifacts.state(), &self.state)
    }

    pub fn run(&mut self, resume: bool) -> Result<RunSummary> {
        self.run_through(Stage::Build, resume)
    }

    /// Runs stages in order up to and including `last`. With `resume`, stages
    /// recorded as complete under the identical configuration are loaded
    /// from disk instead of recomputed.
    pub fn run_through(&mut self, last: Stage, resume: bool) -> Result<RunSummary> {
        self.load_state(resume);
        fs::create_dir_all(self.artifacts.root()).map_err(io_err(self.artifacts.root()))?;
        write_text(&self.artifacts.config(), &self.config_text)?;
        let mut summary = RunSummary::default();
        let track = |summary: &mut RunSummary, stage: Stage, resumed: bool| {
            if resumed {
                summary.resumed.push(stage);
            } else {
                summary.executed.push(stage);
            }
        };

        // ingest always reads the corpus; everything downstream needs it
        let (store, rejected) = self.ingest()?;
        summary.documents = store.len();
        summary.rejected_lines = rejected;
        track(&mut summary, Stage::Ingest, false);
        self.mark(Stage::Ingest)?;
        let lexicon = Lexicon::from_file(&self.config.lexicon).map_err(stage_err(Stage::Ingest))?;
        if last == Stage::Ingest {
            return Ok(summary);
        }

        let slices = if self.done(Stage::Slice) {
            track(&mut summary, Stage::Slice, true);
            read_json::<Vec<TimeSlice>>(&self.artifacts.slices())?
        } else {
            let s = self.slice(&store)?;
            track(&mut summary, Stage::Slice, false);
            self.mark(Stage::Slice)?;
            s
        };
        summary.slices = slices.len();
        if last == Stage::Slice {
            return Ok(summary);
        }

        let events = if self.done(Stage::Detect) {
            track(&mut summary, Stage::Detect, true);
            (0..slices.len())
                .map(|i| read_json(&self.artifacts.events(i)))
                .collect::<Result<Vec<Vec<DocumentEvent>>>>()?
        } else {
            let e = self.detect(&store, &lexicon, &slices)?;
            track(&mut summary, Stage::Detect, false);
            self.mark(Stage::Detect)?;
            e
        };
        summary.events = events.iter().map(Vec::len).sum();
        summary.sub_events = events.iter().flatten().map(|e| e.children.len()).sum();
        if last == Stage::Detect {
            return Ok(summary);
        }

        let models = if self.done(Stage::Train) {
            track(&mut summary, Stage::Train, true);
            self.load_models()?
        } else {
            let m = self.train(&store, &lexicon)?;
            track(&mut summary, Stage::Train, false);
            self.mark(Stage::Train)?;
            m
        };
        summary.relation_model = models.relation.is_some();
        summary.action_model = models.action.is_some();
        if last == Stage::Train {
            return Ok(summary);
        }

        let nodes = all_nodes(&events);
        let bundles = if self.done(Stage::Extract) {
            track(&mut summary, Stage::Extract, true);
            nodes
                .iter()
                .map(|e| read_json(&self.artifacts.bundle(&e.id)))
                .collect::<Result<Vec<ExtractionBundle>>>()?
        } else {
            let b = self.extract(&store, &lexicon, &nodes, &models)?;
            track(&mut summary, Stage::Extract, false);
            self.mark(Stage::Extract)?;
            b
        };
        if last == Stage::Extract {
            return Ok(summary);
        }

        let networks = if self.done(Stage::Build) {
            track(&mut summary, Stage::Build, true);
            nodes.len()
        } else {
            let n = self.build(&nodes, &bundles)?;
            track(&mut summary, Stage::Build, false);
            self.mark(Stage::Build)?;
            n
        };
        summary.networks = networks;
        Ok(summary)
    }

    fn ingest_store(&self) -> Result<(DocumentStore, Vec<crate::corpus::LineError>)> {
        log::info!("ingest: {}", self.config.corpus.display());
        let report = ingest_documents(&self.config.corpus, DocumentFormat::Jsonl, self.config.ingest_mode())
            .map_err(stage_err(Stage::Ingest))?;
        if report.store.is_empty() {
            return Err(PipelineError::Stage {
                stage: Stage::Ingest.name(),
                source: Box::new(crate::corpus::CorpusError::EmptyCorpus),
            });
        }
        Ok((report.store, report.rejected))
    }

    fn ingest(&self) -> Result<(DocumentStore, usize)> {
        let (store, rejected_lines) = self.ingest_store()?;
        let report = crate::corpus::IngestReport {
            store,
            rejected: rejected_lines,
        };
        let rejected: Vec<Value> = report
            .rejected
            .iter()
            .map(|l| serde_json::json!({"line": l.line, "message": l.message}))
            .collect();
        write_json(
            &self.artifacts.ingest_report(),
            &serde_json::json!({"documents": report.store.len(), "rejected": rejected}),
        )?;
        Ok((report.store, report.rejected.len()))
    }

    fn slice(&self, store: &DocumentStore) -> Result<Vec<TimeSlice>> {
        let slices =
            crate::corpus::partition_by_time(store, self.config.step_months).map_err(stage_err(Stage::Slice))?;
        log::info!("slice: {} slices of {} months", slices.len(), self.config.step_months);
        write_json(&self.artifacts.slices(), &slices)?;
        Ok(slices)
    }

    fn detect(&self, store: &DocumentStore, lexicon: &Lexicon, slices: &[TimeSlice]) -> Result<Vec<Vec<DocumentEvent>>> {
        let bags = tokenize_store(store, lexicon);
        let vocab =
            build_vocabulary_from_bags(&bags, &self.config.vocabulary_options()).map_err(stage_err(Stage::Detect))?;
        log::info!("detect: vocabulary of {} terms", vocab.len());
        write_json(&self.artifacts.model("vocabulary.json"), &vocab)?;
        let params = self.config.detect_params();
        let mut out = Vec::with_capacity(slices.len());
        for slice in slices {
            let events = if slice.members.is_empty() {
                Vec::new()
            } else {
                let docs: Vec<TermBag> = slice
                    .members
                    .iter()
                    .map(|id| bags[store.position(id).expect("slice member in store")].clone())
                    .collect();
                match detect_hierarchical(slice.index, &slice.members, &docs, &vocab, &params) {
                    Ok(e) => e,
                    Err(DetectError::EmptyTermMatrix) => {
                        log::warn!("slice {} has no in-vocabulary terms; no events", slice.index);
                        Vec::new()
                    }
                    Err(e) => return Err(stage_err(Stage::Detect)(e)),
                }
            };
            log::info!("detect: slice {} -> {} events", slice.index, events.len());
            write_json(&self.artifacts.events(slice.index), &events)?;
            out.push(events);
        }
        Ok(out)
    }

    /// Training instances for one task, built exactly as the train stage
    /// builds them; used for cross-validation.
    pub fn training_set(&self, task: Task) -> Result<Vec<Instance>> {
        let (store, _) = self.ingest_store()?;
        let lexicon = Lexicon::from_file(&self.config.lexicon).map_err(stage_err(Stage::Train))?;
        let annotations = self
            .annotations(&store)?
            .ok_or_else(|| PipelineError::Config("annotations are required for training".into()))?;
        match task {
            Task::Relation => {
                let sentences = annotated_sentences(&store, &annotations, LengthBounds::default())
                    .map_err(stage_err(Stage::Train))?;
                Ok(relation_instances(&sentences, &lexicon, self.config.max_entities))
            }
            Task::Action => {
                let triggers = self
                    .triggers()?
                    .ok_or_else(|| PipelineError::Config("triggers are required for the action task".into()))?;
                action_training_set(&store, &annotations, &self.config.action, &triggers, &lexicon)
                    .map_err(stage_err(Stage::Train))
            }
        }
    }

    fn annotations(&self, store: &DocumentStore) -> Result<Option<Vec<DocAnnotation>>> {
        let Some(path) = &self.config.annotations else {
            return Ok(None);
        };
        let all = load_annotations(path).map_err(stage_err(Stage::Train))?;
        let (kept, missing): (Vec<_>, Vec<_>) = all.into_iter().partition(|a| store.get(&a.doc_id).is_some());
        if !missing.is_empty() {
            log::warn!("{} annotation records name documents not in the corpus", missing.len());
        }
        Ok(Some(kept))
    }

    fn triggers(&self) -> Result<Option<Vec<String>>> {
        let Some(path) = &self.config.triggers else {
            return Ok(None);
        };
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Ok(Some(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string)
                .collect(),
        ))
    }

    fn train_or_skip(&self, what: &str, instances: &[Instance]) -> Option<Classifier> {
        match train_maxent(instances, &self.config.train_config()) {
            Ok(c) => {
                log::info!("train: {what} model on {} instances, classes {:?}", c.trained_on, c.classes);
                Some(c)
            }
            Err(e) => {
                log::warn!("train: no {what} model: {e}");
                None
            }
        }
    }

    fn train(&self, store: &DocumentStore, lexicon: &Lexicon) -> Result<Models> {
        let mut models = Models::default();
        write_text(&self.artifacts.model("lexicon.txt"), &lexicon.to_text())?;
        for stale in ["relation.json", "action.json", "recognizer.json"] {
            let _ = fs::remove_file(self.artifacts.model(stale));
        }
        let Some(annotations) = self.annotations(store)? else {
            log::info!("train: no annotations configured");
            return Ok(models);
        };
        let bounds = LengthBounds::default();
        let sentences = annotated_sentences(store, &annotations, bounds).map_err(stage_err(Stage::Train))?;

        let instances = relation_instances(&sentences, lexicon, self.config.max_entities);
        models.relation = self.train_or_skip("relation", &instances);
        if let Some(c) = &models.relation {
            write_json(&self.artifacts.model("relation.json"), c)?;
        }

        if self.config.recognizer == RecognizerChoice::Model {
            let gold: Vec<_> = sentences.iter().map(|s| s.gold()).collect();
            let r = BoundaryModelRecognizer::train(&gold, bounds, &self.config.train_config())
                .map_err(stage_err(Stage::Train))?;
            write_json(&self.artifacts.model("recognizer.json"), &r)?;
            models.boundary = Some(r);
        }

        if let Some(triggers) = self.triggers()? {
            let instances = action_training_set(store, &annotations, &self.config.action, &triggers, lexicon)
                .map_err(stage_err(Stage::Train))?;
            if let Some(classifier) = self.train_or_skip("action", &instances) {
                if classifier.class_index(&self.config.action).is_some() {
                    let file = ActionFile {
                        positive: self.config.action.clone(),
                        classifier,
                    };
                    write_json(&self.artifacts.model("action.json"), &file)?;
                    models.action = Some(file);
                } else {
                    log::warn!("train: no {} sentences annotated; no action model", self.config.action);
                }
            }
        }
        Ok(models)
    }

    fn load_models(&self) -> Result<Models> {
        let opt = |file: &str| {
            let p = self.artifacts.model(file);
            p.exists().then_some(p)
        };
        Ok(Models {
            relation: opt("relation.json").map(|p| read_json(&p)).transpose()?,
            action: opt("action.json").map(|p| read_json(&p)).transpose()?,
            boundary: opt("recognizer.json").map(|p| read_json(&p)).transpose()?,
        })
    }

    fn recognizer(&self, store: &DocumentStore, models: &Models) -> Result<Box<dyn EntityRecognizer>> {
        Ok(match self.config.recognizer {
            RecognizerChoice::Gazetteer => {
                let path = self.config.gazetteer.as_ref().expect("validated");
                Box::new(GazetteerRecognizer::from_file(path).map_err(stage_err(Stage::Extract))?)
            }
            RecognizerChoice::Annotations => {
                Box::new(AnnotationRecognizer::new(&self.annotations(store)?.unwrap_or_default()))
            }
            RecognizerChoice::Model => Box::new(models.boundary.clone().ok_or_else(|| PipelineError::Stage {
                stage: Stage::Extract.name(),
                source: "boundary model missing; rerun train".into(),
            })?),
        })
    }

    fn extract(
        &self,
        store: &DocumentStore,
        lexicon: &Lexicon,
        nodes: &[&DocumentEvent],
        models: &Models,
    ) -> Result<Vec<ExtractionBundle>> {
        let recognizer = self.recognizer(store, models)?;
        let relations = models.relation.clone().map(|c| RelationExtractor {
            max_entities: self.config.max_entities,
            ..RelationExtractor::new(c, lexicon.clone())
        });
        let extractor = Extractor::new(recognizer.as_ref(), relations.as_ref());
        let per_doc: HashMap<&str, DocumentExtraction> = store
            .documents()
            .par_iter()
            .map(|d| (d.id.as_str(), extract_document(d, &extractor)))
            .collect();
        let bundles: Vec<ExtractionBundle> = nodes
            .iter()
            .map(|e| ExtractionBundle::from_documents(&e.id, e.members.iter().map(|m| &per_doc[m.as_str()])))
            .collect();
        for b in &bundles {
            write_json(&self.artifacts.bundle(&b.event_id), b)?;
        }
        log::info!("extract: {} bundles", bundles.len());
        Ok(bundles)
    }

    fn build(&self, nodes: &[&DocumentEvent], bundles: &[ExtractionBundle]) -> Result<usize> {
        let params = self.config.params();
        for (event, bundle) in nodes.iter().zip(bundles) {
            let mut net: EventNetwork = build_event_network(bundle);
            net.params = params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
            net.params.insert("members".into(), event.members.len().into());
            net.validate().map_err(stage_err(Stage::Build))?;
            write_text(&self.artifacts.network(&event.id), &to_json(&net))?;
        }
        log::info!("build: {} networks", nodes.len());
        Ok(nodes.len())
    }
}

/// Loads the persisted action model of an artifact directory, if any.
pub fn load_action_model(artifacts: &Artifacts) -> Result<Option<ActionModel>> {
    let path = artifacts.model("action.json");
    if !path.exists() {
        return Ok(None);
    }
    let file: ActionFile = read_json(&path)?;
    let lex_path = artifacts.model("lexicon.txt");
    let lexicon = Lexicon::from_file(&lex_path).map_err(|e| PipelineError::Artifact(format!("{}: {e}", lex_path.display())))?;
    Ok(Some(ActionModel {
        classifier: file.classifier,
        lexicon,
        positive: file.positive,
    }))
}

pub fn load_vocabulary(artifacts: &Artifacts) -> Result<Vocabulary> {
    read_json(&artifacts.model("vocabulary.json"))
}

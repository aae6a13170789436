use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use evnet_core::learn::{cross_validate, CvOptions, Threshold};
use evnet_core::netmodel::{ExportFormat, EventNetwork};
use evnet_core::pipeline::{
    Analysis, Artifacts, Params, Pipeline, PipelineConfig, RunSummary, Stage, Task, Workspace,
};
use evnet_core::synth::synthetic_corpus;
use serde_json::json;

use crate::{analysis_network, server};

pub const PORT_VAR: &str = "EVNET_PORT";
const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Parser)]
#[command(name = "evnet", version, about = "Event networks over a time-stamped corpus")]
pub struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    /// Artifact directory; overrides `output` from the configuration.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Recompute every stage instead of resuming.
    #[arg(long, global = true)]
    pub fresh: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read the corpus, reporting rejected lines.
    Ingest {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Fail on the first malformed line instead of skipping it.
        #[arg(long)]
        strict: bool,
    },
    /// Partition into time slices and detect the event hierarchy.
    Detect {
        /// `all` or a comma-separated list of slice indices to print.
        #[arg(long, default_value = "all")]
        slices: String,
        #[arg(long)]
        topics: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        step_months: Option<u32>,
    },
    /// Cross-validate a classifier on the annotations, then train the models.
    Train {
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Acceptance threshold on the positive posterior.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Extract entities and relations for every event.
    Extract {
        /// Print the bundle of this event.
        #[arg(long)]
        event: Option<String>,
        #[arg(long)]
        recognizer: Option<String>,
    },
    /// Build one network per event.
    Build,
    /// Run every stage.
    Run,
    /// Analyze the networks of a built artifact directory.
    Analyze {
        #[command(subcommand)]
        kind: AnalyzeCommand,
    },
    /// Write one event network in an interchange format.
    Export {
        #[arg(long)]
        event: String,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        /// Destination file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve a built artifact directory over HTTP.
    Serve {
        /// Falls back to EVNET_PORT, then 8080.
        #[arg(long)]
        port: Option<u16>,
    },
    /// Write a synthetic corpus with annotations and a configuration.
    Synth {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 200)]
        docs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TaskArg {
    Relation,
    Action,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Pajek,
    Graphml,
    Dot,
}

impl From<FormatArg> for ExportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ExportFormat::Json,
            FormatArg::Pajek => ExportFormat::Pajek,
            FormatArg::Graphml => ExportFormat::GraphMl,
            FormatArg::Dot => ExportFormat::Dot,
        }
    }
}

#[derive(Debug, Args)]
pub struct Scope {
    /// Event id such as `t0/e03` or `t0e3`.
    #[arg(long)]
    pub event: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    /// Destination file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Induced subgraph of vertices and edges matching the predicates.
    Filter {
        #[command(flatten)]
        scope: Scope,
        /// Comma-separated vertex types.
        #[arg(long)]
        vtype: Option<String>,
        /// Comma-separated edge types.
        #[arg(long)]
        etype: Option<String>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        min_weight: Option<String>,
        #[arg(long)]
        max_weight: Option<String>,
        #[arg(long)]
        edge_min_weight: Option<String>,
        #[arg(long)]
        has_info: Option<String>,
    },
    /// Time and location track of one person; every event when --event is absent.
    Plt {
        #[command(flatten)]
        scope: Scope,
        #[arg(long)]
        person: String,
    },
    /// Co-occurrence network of entities in sentences describing the action.
    Action {
        #[command(flatten)]
        scope: Scope,
        #[arg(long)]
        threshold: Option<String>,
        #[arg(long)]
        min_cooccur: Option<String>,
    },
    /// Shortest path between two named vertices.
    Path {
        #[command(flatten)]
        scope: Scope,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        vtype: Option<String>,
        #[arg(long)]
        etype: Option<String>,
    },
    /// Neighbourhood of a named vertex.
    Ego {
        #[command(flatten)]
        scope: Scope,
        #[arg(long)]
        center: String,
        #[arg(long)]
        radius: Option<String>,
    },
}

fn put(params: &mut Params, key: &str, value: &Option<String>) {
    if let Some(v) = value {
        params.insert(key.to_string(), v.clone());
    }
}

impl AnalyzeCommand {
    /// The analysis kind, its scope, and parameters named as in HTTP queries.
    pub fn request(&self) -> (Analysis, &Scope, Params) {
        let mut p = Params::new();
        match self {
            AnalyzeCommand::Filter {
                scope,
                vtype,
                etype,
                name,
                min_weight,
                max_weight,
                edge_min_weight,
                has_info,
            } => {
                put(&mut p, "vtype", vtype);
                put(&mut p, "etype", etype);
                put(&mut p, "name", name);
                put(&mut p, "min_weight", min_weight);
                put(&mut p, "max_weight", max_weight);
                put(&mut p, "edge_min_weight", edge_min_weight);
                put(&mut p, "has_info", has_info);
                (Analysis::Filter, scope, p)
            }
            AnalyzeCommand::Plt { scope, person } => {
                p.insert("person".into(), person.clone());
                (Analysis::Plt, scope, p)
            }
            AnalyzeCommand::Action {
                scope,
                threshold,
                min_cooccur,
            } => {
                put(&mut p, "threshold", threshold);
                put(&mut p, "min_cooccur", min_cooccur);
                (Analysis::Action, scope, p)
            }
            AnalyzeCommand::Path {
                scope,
                from,
                to,
                vtype,
                etype,
            } => {
                p.insert("from".into(), from.clone());
                p.insert("to".into(), to.clone());
                put(&mut p, "vtype", vtype);
                put(&mut p, "etype", etype);
                (Analysis::Path, scope, p)
            }
            AnalyzeCommand::Ego { scope, center, radius } => {
                p.insert("center".into(), center.clone());
                put(&mut p, "radius", radius);
                (Analysis::Ego, scope, p)
            }
        }
    }
}

fn cwd() -> PathBuf {
    std::env::current_dir().unwrap_or_else(|_| PathBuf::from("."))
}

impl Cli {
    /// Configuration from the file, then `--set` overrides, then `extra`
    /// command flags. Validated once at the end.
    fn pipeline_config(&self, extra: &[(&str, String)]) -> anyhow::Result<PipelineConfig> {
        let here = cwd();
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig {
                output: here.join("out"),
                ..PipelineConfig::default()
            },
        };
        for o in &self.overrides {
            let Some((k, v)) = o.split_once('=') else {
                bail!("--set expects KEY=VALUE, got {o:?}");
            };
            cfg.set(k.trim(), v.trim(), &here)?;
        }
        for (k, v) in extra {
            cfg.set(k, v, &here)?;
        }
        if let Some(out) = &self.output {
            cfg.output = here.join(out);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Artifact directory for read-only commands.
    fn artifact_dir(&self) -> anyhow::Result<PathBuf> {
        if let Some(out) = &self.output {
            return Ok(out.clone());
        }
        match &self.config {
            Some(path) => Ok(PipelineConfig::from_file(path)?.output),
            None => Ok(PathBuf::from("out")),
        }
    }

    fn workspace(&self) -> anyhow::Result<Workspace> {
        let dir = self.artifact_dir()?;
        Workspace::load(&dir).with_context(|| format!("loading artifacts from {}", dir.display()))
    }

    fn run_stages(&self, last: Stage, extra: &[(&str, String)]) -> anyhow::Result<(Pipeline, RunSummary)> {
        let mut pipeline = Pipeline::new(self.pipeline_config(extra)?)?;
        let summary = pipeline.run_through(last, !self.fresh)?;
        Ok((pipeline, summary))
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn emit(net: &EventNetwork, format: FormatArg, to: Option<&Path>) -> anyhow::Result<()> {
    let format = ExportFormat::from(format);
    match to {
        Some(path) => evnet_core::netmodel::export_network(net, format, path)?,
        None => print!("{}", format.render(net)),
    }
    Ok(())
}

fn selected_slices(spec: &str, count: usize) -> anyhow::Result<Vec<usize>> {
    if spec == "all" {
        return Ok((0..count).collect());
    }
    spec.split(',')
        .map(|s| {
            let i: usize = s.trim().parse().with_context(|| format!("bad slice index {s:?}"))?;
            if i >= count {
                bail!("slice {i} out of range; there are {count}");
            }
            Ok(i)
        })
        .collect()
}

fn opt<T: ToString>(key: &'static str, v: &Option<T>) -> Option<(&'static str, String)> {
    v.as_ref().map(|v| (key, v.to_string()))
}

pub fn port_from_env(flag: Option<u16>) -> anyhow::Result<u16> {
    if let Some(p) = flag {
        return Ok(p);
    }
    match std::env::var(PORT_VAR) {
        Ok(v) => v.trim().parse().with_context(|| format!("{PORT_VAR}={v:?} is not a port")),
        Err(_) => Ok(DEFAULT_PORT),
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Ingest { input, lexicon, strict } => {
            let mut extra = Vec::new();
            extra.extend(opt("corpus", &input.as_ref().map(|p| p.display())));
            extra.extend(opt("lexicon", &lexicon.as_ref().map(|p| p.display())));
            if *strict {
                extra.push(("strict_ingest", "true".into()));
            }
            let (pipeline, summary) = cli.run_stages(Stage::Ingest, &extra)?;
            let report: serde_json::Value = serde_json::from_str(
                &std::fs::read_to_string(pipeline.artifacts.ingest_report()).context("reading ingest report")?,
            )?;
            debug_assert_eq!(report["documents"], summary.documents);
            print_json(&report);
        }
        Command::Detect {
            slices,
            topics,
            seed,
            iterations,
            step_months,
        } => {
            let extra: Vec<_> = [
                opt("topics", topics),
                opt("lda_seed", seed),
                opt("lda_iterations", iterations),
                opt("step_months", step_months),
            ]
            .into_iter()
            .flatten()
            .collect();
            let (pipeline, summary) = cli.run_stages(Stage::Detect, &extra)?;
            let mut trees = BTreeMap::new();
            for i in selected_slices(slices, summary.slices)? {
                let text = std::fs::read_to_string(pipeline.artifacts.events(i))?;
                trees.insert(i.to_string(), serde_json::from_str::<serde_json::Value>(&text)?);
            }
            print_json(&trees);
        }
        Command::Train {
            task,
            folds,
            threshold,
            seed,
        } => {
            let extra: Vec<_> = opt("action_threshold", threshold).into_iter().collect();
            let config = cli.pipeline_config(&extra)?;
            let pipeline = Pipeline::new(config.clone())?;
            let (task, positives) = match task {
                TaskArg::Relation => (Task::Relation, None),
                TaskArg::Action => (Task::Action, Some(vec![config.action.clone()])),
            };
            let instances = pipeline.training_set(task)?;
            let positives = positives.unwrap_or_else(|| {
                let labels: std::collections::BTreeSet<&str> = instances
                    .iter()
                    .map(|i| i.label.as_str())
                    .filter(|l| *l != evnet_core::extract::NO_RELATION)
                    .collect();
                labels.into_iter().map(str::to_string).collect()
            });
            let threshold = match (task, threshold) {
                (_, Some(t)) => Threshold::new(*t)?,
                (Task::Action, None) => Threshold::new(config.action_threshold)?,
                (Task::Relation, None) => Threshold::DEFAULT,
            };
            let mut reports = BTreeMap::new();
            for positive in positives {
                let options = CvOptions {
                    folds: *folds,
                    threshold,
                    train: config.train_config(),
                    seed: *seed,
                    ..CvOptions::new(positive.clone())
                };
                let r = cross_validate(&instances, &options)?;
                reports.insert(
                    positive,
                    json!({
                        "precision": r.prf.precision,
                        "recall": r.prf.recall,
                        "f_score": r.prf.f_score,
                        "skipped_folds": r.skipped_folds,
                    }),
                );
            }
            let (_, summary) = cli.run_stages(Stage::Train, &extra)?;
            print_json(&json!({
                "instances": instances.len(),
                "folds": folds,
                "threshold": threshold.value(),
                "cross_validation": reports,
                "relation_model": summary.relation_model,
                "action_model": summary.action_model,
            }));
        }
        Command::Extract { event, recognizer } => {
            let extra: Vec<_> = opt("recognizer", recognizer).into_iter().collect();
            let (pipeline, summary) = cli.run_stages(Stage::Extract, &extra)?;
            match event {
                Some(raw) => {
                    let id = evnet_core::pipeline::normalize_event_id(raw)
                        .with_context(|| format!("not an event id: {raw:?}"))?;
                    let path = pipeline.artifacts.bundle(&id);
                    let text = std::fs::read_to_string(&path).with_context(|| format!("no bundle for {id}"))?;
                    print!("{text}");
                }
                None => print_json(&summary),
            }
        }
        Command::Build => print_json(&cli.run_stages(Stage::Build, &[])?.1),
        Command::Run => print_json(&cli.run_stages(Stage::Build, &[])?.1),
        Command::Analyze { kind } => {
            let ws = cli.workspace()?;
            let (analysis, scope, params) = kind.request();
            let net = analysis_network(&ws, scope.event.as_deref(), analysis, &params)?;
            emit(&net, scope.format, scope.out.as_deref())?;
        }
        Command::Export { event, format, out } => {
            let ws = cli.workspace()?;
            emit(ws.network(event)?, *format, out.as_deref())?;
        }
        Command::Serve { port } => {
            let port = port_from_env(*port)?;
            let ws = Arc::new(cli.workspace()?);
            tokio::runtime::Runtime::new()?.block_on(server::serve(ws, port))?;
        }
        Command::Synth { dir, docs, seed } => {
            let corpus = synthetic_corpus(*docs, *seed);
            corpus.write_to(dir)?;
            print_json(&json!({
                "documents": corpus.documents.len(),
                "config": dir.join("pipeline.conf"),
                "output": Artifacts::new(dir.join("out")).root(),
            }));
        }
    }
    Ok(())
}

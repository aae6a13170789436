//! Read-only queries over an artifact directory, shared by the command line
//! and the HTTP service so both answer identically.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::config::PipelineConfig;
use super::run::{load_action_model, read_json, Artifacts};
use super::{PipelineError, Result};
use crate::analyze::{
    action_analysis, ego_network, filter_network, path_network, plt_analysis, shortest_path, ActionModel,
    ActionParams, AnalyzeError, Clause, Predicate,
};
use crate::corpus::TimeSlice;
use crate::eventdetect::DocumentEvent;
use crate::extract::ExtractionBundle;
use crate::learn::Threshold;
use crate::netmodel::{parse_json, EdgeType, EventNetwork, VertexType};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("{0}")]
    NotFound(String),

    #[error("{0}")]
    BadRequest(String),

    #[error("{0}")]
    Internal(String),
}

impl QueryError {
    pub fn code(&self) -> &'static str {
        match self {
            QueryError::NotFound(_) => "not_found",
            QueryError::BadRequest(_) => "bad_request",
            QueryError::Internal(_) => "internal",
        }
    }
}

impl From<AnalyzeError> for QueryError {
    fn from(e: AnalyzeError) -> Self {
        match e {
            AnalyzeError::VertexNotFound(_) => QueryError::NotFound(e.to_string()),
            AnalyzeError::InvalidParameter(_) => QueryError::BadRequest(e.to_string()),
            AnalyzeError::Learn(_) => QueryError::Internal(e.to_string()),
        }
    }
}

pub type QueryResult<T> = std::result::Result<T, QueryError>;

/// Query parameters exactly as received, e.g. from a URL query string.
pub type Params = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    Filter,
    Plt,
    Action,
    Path,
    Ego,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Filter => "filter",
            Analysis::Plt => "plt",
            Analysis::Action => "action",
            Analysis::Path => "path",
            Analysis::Ego => "ego",
        }
    }

    fn allowed(self) -> &'static [&'static str] {
        match self {
            Analysis::Filter => &["vtype", "etype", "name", "min_weight", "max_weight", "edge_min_weight", "has_info"],
            Analysis::Plt => &["person"],
            Analysis::Action => &["threshold", "min_cooccur"],
            Analysis::Path => &["from", "to", "vtype", "etype"],
            Analysis::Ego => &["center", "radius"],
        }
    }
}

impl FromStr for Analysis {
    type Err = QueryError;
    fn from_str(s: &str) -> QueryResult<Self> {
        match s {
            "filter" => Ok(Analysis::Filter),
            "plt" => Ok(Analysis::Plt),
            "action" => Ok(Analysis::Action),
            "path" => Ok(Analysis::Path),
            "ego" => Ok(Analysis::Ego),
            other => Err(QueryError::NotFound(format!("unknown analysis {other:?}"))),
        }
    }
}

/// Accepts `t0/e03`, `t0_e03`, and the compact `t0e3` (likewise with a
/// trailing sub-event) and returns the canonical `t0/e03[/s01]`.
pub fn normalize_event_id(raw: &str) -> Option<String> {
    let mut parts: Vec<(char, u64)> = Vec::new();
    let mut chars = raw.chars().filter(|c| *c != '/' && *c != '_').peekable();
    while let Some(tag) = chars.next() {
        let mut digits = String::new();
        while let Some(d) = chars.peek().filter(|c| c.is_ascii_digit()) {
            digits.push(*d);
            chars.next();
        }
        parts.push((tag, digits.parse().ok()?));
    }
    let tags: String = parts.iter().map(|p| p.0).collect();
    if tags != "te" && tags != "tes" {
        return None;
    }
    let mut id = format!("t{}", parts[0].1);
    for &(tag, n) in &parts[1..] {
        id.push_str(&format!("/{tag}{n:02}"));
    }
    Some(id)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceSummary {
    pub index: usize,
    #[serde(with = "crate::timefmt")]
    pub start: chrono::DateTime<chrono::Utc>,
    #[serde(with = "crate::timefmt")]
    pub end: chrono::DateTime<chrono::Utc>,
    pub documents: usize,
    pub events: usize,
}

/// An artifact directory loaded into memory. Immutable after loading.
pub struct Workspace {
    pub config: PipelineConfig,
    slices: Vec<TimeSlice>,
    events: Vec<Vec<DocumentEvent>>,
    networks: HashMap<String, EventNetwork>,
    bundles: HashMap<String, ExtractionBundle>,
    action: Option<ActionModel>,
}

impl Workspace {
    pub fn load(root: &Path) -> Result<Self> {
        let artifacts = Artifacts::new(root);
        let config = PipelineConfig::from_file(&artifacts.config())?;
        let slices: Vec<TimeSlice> = read_json(&artifacts.slices())?;
        let events: Vec<Vec<DocumentEvent>> = (0..slices.len())
            .map(|i| read_json(&artifacts.events(i)))
            .collect::<Result<_>>()?;
        let mut networks = HashMap::new();
        let mut bundles = HashMap::new();
        for e in events.iter().flatten().flat_map(|e| e.walk()) {
            let path = artifacts.network(&e.id);
            let text = std::fs::read_to_string(&path).map_err(super::run::io_err(&path))?;
            let net = parse_json(&text).map_err(|err| PipelineError::Artifact(format!("{}: {err}", path.display())))?;
            networks.insert(e.id.clone(), net);
            bundles.insert(e.id.clone(), read_json(&artifacts.bundle(&e.id))?);
        }
        let action = load_action_model(&artifacts)?;
        Ok(Self {
            config,
            slices,
            events,
            networks,
            bundles,
            action,
        })
    }

    pub fn slices(&self) -> Vec<SliceSummary> {
        self.slices
            .iter()
            .zip(&self.events)
            .map(|(s, e)| SliceSummary {
                index: s.index,
                start: s.start,
                end: s.end,
                documents: s.members.len(),
                events: e.len(),
            })
            .collect()
    }

    pub fn slice_events(&self, index: usize) -> QueryResult<&[DocumentEvent]> {
        self.events
            .get(index)
            .map(Vec::as_slice)
            .ok_or_else(|| QueryError::NotFound(format!("no slice {index}")))
    }

    fn resolve(&self, raw: &str) -> QueryResult<String> {
        normalize_event_id(raw)
            .filter(|id| self.networks.contains_key(id))
            .ok_or_else(|| QueryError::NotFound(format!("no event {raw:?}")))
    }

    pub fn event(&self, raw: &str) -> QueryResult<&DocumentEvent> {
        let id = self.resolve(raw)?;
        self.events
            .iter()
            .flatten()
            .find_map(|e| e.find(&id))
            .ok_or_else(|| QueryError::NotFound(format!("no event {raw:?}")))
    }

    pub fn network(&self, raw: &str) -> QueryResult<&EventNetwork> {
        let id = self.resolve(raw)?;
        Ok(&self.networks[&id])
    }

    /// Top-level event networks in slice and event order.
    pub fn top_level_networks(&self) -> Vec<&EventNetwork> {
        self.events.iter().flatten().map(|e| &self.networks[&e.id]).collect()
    }

    /// Runs one analysis. `event` scopes it to one event network; only PLT
    /// accepts no event, meaning every top-level event.
    pub fn analyze(&self, event: Option<&str>, kind: Analysis, params: &Params) -> QueryResult<EventNetwork> {
        if let Some(k) = params.keys().find(|k| !kind.allowed().contains(&k.as_str())) {
            return Err(QueryError::BadRequest(format!(
                "unknown parameter {k:?} for {}; expected one of {:?}",
                kind.name(),
                kind.allowed()
            )));
        }
        let mut echo: BTreeMap<String, Value> = BTreeMap::new();
        let mut out = match (kind, event) {
            (Analysis::Plt, None) => {
                let person = required(params, "person")?;
                echo.insert("person".into(), json!(person));
                let nets: Vec<EventNetwork> = self.top_level_networks().into_iter().cloned().collect();
                plt_analysis(&nets, person)
            }
            (_, None) => return Err(QueryError::BadRequest(format!("{} needs an event", kind.name()))),
            (kind, Some(raw)) => {
                let net = self.network(raw)?;
                match kind {
                    Analysis::Filter => {
                        let (vp, ep) = filter_predicates(params, &mut echo)?;
                        filter_network(net, &vp, &ep)
                    }
                    Analysis::Plt => {
                        let person = required(params, "person")?;
                        echo.insert("person".into(), json!(person));
                        plt_analysis(std::slice::from_ref(net), person)
                    }
                    Analysis::Action => {
                        let model = self
                            .action
                            .as_ref()
                            .ok_or_else(|| QueryError::NotFound("no action model in artifacts".into()))?;
                        let defaults = self.config.action_params();
                        let threshold = match params.get("threshold") {
                            Some(t) => Threshold::new(parse_num(t, "threshold")?)
                                .map_err(|e| QueryError::BadRequest(e.to_string()))?,
                            None => defaults.threshold,
                        };
                        let min_cooccur = match params.get("min_cooccur") {
                            Some(m) => parse_num::<u64>(m, "min_cooccur")?,
                            None => defaults.min_cooccur,
                        };
                        if min_cooccur == 0 {
                            return Err(QueryError::BadRequest("min_cooccur must be at least 1".into()));
                        }
                        let bundle = &self.bundles[&net.event_id];
                        action_analysis(bundle, model, ActionParams { threshold, min_cooccur })?.network
                    }
                    Analysis::Path => {
                        let from = required(params, "from")?;
                        let to = required(params, "to")?;
                        let (vp, ep) = filter_predicates(params, &mut echo)?;
                        let scoped = filter_network(net, &vp, &ep);
                        echo.insert("from".into(), json!(from));
                        echo.insert("to".into(), json!(to));
                        match shortest_path(&scoped, from, to)? {
                            Some(p) => path_network(&scoped, &p),
                            None => {
                                echo.insert("reachable".into(), json!(false));
                                EventNetwork {
                                    vertices: Vec::new(),
                                    edges: Vec::new(),
                                    ..scoped
                                }
                            }
                        }
                    }
                    Analysis::Ego => {
                        let center = required(params, "center")?;
                        let radius = match params.get("radius") {
                            Some(r) => parse_num::<usize>(r, "radius")?,
                            None => 1,
                        };
                        echo.insert("center".into(), json!(center));
                        echo.insert("radius".into(), json!(radius));
                        ego_network(net, center, radius)?
                    }
                }
            }
        };
        out.params.insert("analysis".into(), json!(kind.name()));
        out.params.extend(echo);
        Ok(out)
    }
}

fn required<'a>(params: &'a Params, key: &str) -> QueryResult<&'a str> {
    match params.get(key).map(|s| s.trim()) {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(QueryError::BadRequest(format!("missing parameter {key:?}"))),
    }
}

fn parse_num<T: FromStr>(raw: &str, key: &str) -> QueryResult<T> {
    raw.trim()
        .parse()
        .map_err(|_| QueryError::BadRequest(format!("{key}: not a valid number: {raw:?}")))
}

fn parse_list<T: FromStr>(raw: &str, key: &str) -> QueryResult<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| QueryError::BadRequest(format!("{key}: unknown value {s:?}"))))
        .collect()
}

fn filter_predicates(params: &Params, echo: &mut BTreeMap<String, Value>) -> QueryResult<(Predicate, Predicate)> {
    let mut vp = Predicate::vertices();
    let mut ep = Predicate::edges();
    if let Some(raw) = params.get("vtype") {
        let ts: Vec<VertexType> = parse_list(raw, "vtype")?;
        echo.insert("vtype".into(), json!(ts));
        vp = vp.with(Clause::VtypeIn(ts));
    }
    if let Some(raw) = params.get("etype") {
        let ts: Vec<EdgeType> = parse_list(raw, "etype")?;
        echo.insert("etype".into(), json!(ts));
        ep = ep.with(Clause::EtypeIn(ts));
    }
    if let Some(name) = params.get("name") {
        echo.insert("name".into(), json!(name));
        vp = vp.with(Clause::NameIs(name.clone()));
    }
    if let Some(raw) = params.get("min_weight") {
        let w: f64 = parse_num(raw, "min_weight")?;
        echo.insert("min_weight".into(), json!(w));
        vp = vp.with(Clause::MinWeight(w));
    }
    if let Some(raw) = params.get("max_weight") {
        let w: f64 = parse_num(raw, "max_weight")?;
        echo.insert("max_weight".into(), json!(w));
        vp = vp.with(Clause::MaxWeight(w));
    }
    if let Some(raw) = params.get("edge_min_weight") {
        let w: f64 = parse_num(raw, "edge_min_weight")?;
        echo.insert("edge_min_weight".into(), json!(w));
        ep = ep.with(Clause::MinWeight(w));
    }
    if let Some(key) = params.get("has_info") {
        echo.insert("has_info".into(), json!(key));
        vp = vp.with(Clause::HasInfo(key.clone()));
    }
    Ok((vp, ep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_id_forms() {
        assert_eq!(normalize_event_id("t0e3").as_deref(), Some("t0/e03"));
        assert_eq!(normalize_event_id("t0/e03").as_deref(), Some("t0/e03"));
        assert_eq!(normalize_event_id("t12_e03_s7").as_deref(), Some("t12/e03/s07"));
        assert_eq!(normalize_event_id("t1e3s12").as_deref(), Some("t1/e03/s12"));
        for bad in ["", "t", "e3", "t0x3", "t0e", "t0e3e4", "../etc"] {
            assert_eq!(normalize_event_id(bad), None, "{bad}");
        }
    }

    #[test]
    fn filter_params_parse() {
        let mut echo = BTreeMap::new();
        let params: Params = [("vtype".to_string(), "PER,LOC".to_string()), ("etype".into(), "PER-SOC".into())].into();
        let (vp, ep) = filter_predicates(&params, &mut echo).unwrap();
        assert_eq!(vp.clauses, [Clause::VtypeIn(vec![VertexType::Per, VertexType::Loc])]);
        assert_eq!(ep.clauses, [Clause::EtypeIn(vec![EdgeType::PerSoc])]);
        let bad: Params = [("vtype".to_string(), "XYZ".to_string())].into();
        assert!(matches!(filter_predicates(&bad, &mut echo), Err(QueryError::BadRequest(_))));
    }
}

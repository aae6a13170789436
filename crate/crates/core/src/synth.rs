//! Deterministic synthetic data: a small annotated news corpus, a planted
//! topic corpus, a noisy two-class action dataset, and random networks.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::corpus::{Document, TermBag};
use crate::extract::{
    write_annotations, AnnotatedEvent, AnnotatedMention, AnnotatedRelation, DocAnnotation, EntityType, RelationType,
};
use crate::learn::Instance;
use crate::netmodel::{EdgeFrame, EdgeType, EventNetwork, Info, VertexFrame, VertexType};

pub const THEMES: [(&str, [&str; 15]); 4] = [
    (
        "conflict",
        [
            "冲突", "袭击", "战斗", "部队", "武装", "爆炸", "伤亡", "士兵", "交火", "防御", "炮击", "撤退", "进攻",
            "停火", "军队",
        ],
    ),
    (
        "diplomacy",
        [
            "会谈", "合作", "协议", "外交", "峰会", "磋商", "声明", "谈判", "友好", "条约", "双边", "代表团", "签署",
            "关系", "使节",
        ],
    ),
    (
        "economy",
        [
            "经济", "贸易", "投资", "市场", "增长", "出口", "银行", "企业", "金融", "产业", "价格", "消费", "货币",
            "工厂", "利润",
        ],
    ),
    (
        "disaster",
        [
            "地震", "救援", "灾区", "洪水", "受灾", "物资", "重建", "捐款", "医疗", "帐篷", "余震", "灾民", "志愿者",
            "安置", "疏散",
        ],
    ),
];

pub const PERSONS: [&str; 10] = ["毛泽东", "朱德", "周恩来", "卡尔扎伊", "赖斯", "王明", "李强", "张伟", "刘洋", "陈刚"];
pub const LOCATIONS: [&str; 10] = ["井冈山", "瑞金", "延安", "北京", "喀布尔", "阿富汗", "上海", "成都", "华盛顿", "南京"];
pub const ORGANIZATIONS: [&str; 8] = ["北约", "联合国", "红军", "国务院", "世界银行", "红十字会", "新华社", "外交部"];

/// Template words that carry relation and action evidence.
pub const CUE_WORDS: [&str; 16] = [
    "抵达", "前往", "会见", "加入", "发言人", "位于", "出生于", "表示", "关注", "发动", "指挥", "率领", "呼吁",
    "避免", "纪念", "传闻",
];

pub const TRIGGERS: [&str; 5] = ["冲突", "袭击", "战斗", "交火", "炮击"];

pub const ACTION_TYPE: &str = "Conflict";

/// Gazetteer confidence per entity; a few names are less certain.
fn gazetteer_weight(name: &str) -> f64 {
    match name {
        "王明" | "陈刚" => 0.8,
        "阿富汗" | "新华社" => 0.9,
        _ => 1.0,
    }
}

/// An annotated synthetic corpus with the resources the pipeline needs.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub documents: Vec<Document>,
    pub lexicon: Vec<String>,
    /// `surface<TAB>TYPE<TAB>weight` lines.
    pub gazetteer: String,
    pub annotations: Vec<DocAnnotation>,
    pub triggers: Vec<String>,
    /// Planted theme index per document.
    pub themes: Vec<usize>,
}

struct DocBuilder {
    text: String,
    len: usize,
    sentence: usize,
    ann: DocAnnotation,
}

impl DocBuilder {
    fn new(id: &str) -> Self {
        Self {
            text: String::new(),
            len: 0,
            sentence: 0,
            ann: DocAnnotation {
                doc_id: id.to_string(),
                mentions: Vec::new(),
                relations: Vec::new(),
                events: Vec::new(),
            },
        }
    }

    fn plain(&mut self, s: &str) {
        self.text.push_str(s);
        self.len += s.chars().count();
    }

    fn entity(&mut self, surface: &str, etype: EntityType) -> usize {
        let start = self.len;
        self.plain(surface);
        self.ann.mentions.push(AnnotatedMention {
            surface: surface.to_string(),
            etype,
            start,
            end: self.len,
        });
        self.ann.mentions.len() - 1
    }

    fn relation(&mut self, rtype: RelationType, a: usize, b: usize) {
        self.ann.relations.push(AnnotatedRelation {
            rtype,
            arg1_idx: a,
            arg2_idx: b,
            sentence: self.sentence,
        });
    }

    fn event(&mut self) {
        self.ann.events.push(AnnotatedEvent {
            event_type: ACTION_TYPE.to_string(),
            sentence: self.sentence,
        });
    }

    fn end_sentence(&mut self) {
        self.plain("。");
        self.sentence += 1;
    }
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty pool")
}

fn pick_two<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> (&'a str, &'a str) {
    let a = pick(rng, xs);
    loop {
        let b = pick(rng, xs);
        if b != a {
            return (a, b);
        }
    }
}

fn theme_sentence<R: Rng>(rng: &mut R, b: &mut DocBuilder, words: &[&str]) {
    let n = rng.random_range(3..=5);
    for i in 0..n {
        if i > 0 {
            b.plain("，");
        }
        b.plain(pick(rng, words));
    }
    b.end_sentence();
}

fn relation_sentence<R: Rng>(rng: &mut R, b: &mut DocBuilder) {
    use EntityType::*;
    match rng.random_range(0..7) {
        0 | 1 => {
            let p = b.entity(pick(rng, &PERSONS), Per);
            b.plain(if rng.random_bool(0.5) { "抵达" } else { "前往" });
            let l = b.entity(pick(rng, &LOCATIONS), Loc);
            b.relation(RelationType::Phys, p, l);
        }
        2 => {
            let (x, y) = pick_two(rng, &PERSONS);
            let p = b.entity(x, Per);
            b.plain("会见");
            let q = b.entity(y, Per);
            b.relation(RelationType::PerSoc, p, q);
        }
        3 => {
            let o = b.entity(pick(rng, &ORGANIZATIONS), Org);
            b.plain("发言人");
            let p = b.entity(pick(rng, &PERSONS), Per);
            b.relation(RelationType::OrgAff, o, p);
        }
        4 => {
            let (x, y) = pick_two(rng, &LOCATIONS);
            let l = b.entity(x, Loc);
            b.plain("位于");
            let m = b.entity(y, Loc);
            b.relation(RelationType::PartWhole, l, m);
        }
        5 => {
            let p = b.entity(pick(rng, &PERSONS), Per);
            b.plain("出生于");
            let l = b.entity(pick(rng, &LOCATIONS), Loc);
            b.relation(RelationType::GenAff, p, l);
        }
        _ => {
            b.entity(pick(rng, &PERSONS), Per);
            b.plain("和");
            b.entity(pick(rng, &ORGANIZATIONS), Org);
            b.plain("表示关注");
        }
    }
    b.end_sentence();
}

/// A Conflict event-mention sentence with several entities.
fn action_sentence<R: Rng>(rng: &mut R, b: &mut DocBuilder) {
    use EntityType::*;
    match rng.random_range(0..3) {
        0 => {
            b.entity(pick(rng, &ORGANIZATIONS), Org);
            b.plain("在");
            b.entity(pick(rng, &LOCATIONS), Loc);
            b.plain("发动袭击");
        }
        1 => {
            b.entity(pick(rng, &PERSONS), Per);
            b.plain("率领部队在");
            b.entity(pick(rng, &LOCATIONS), Loc);
            b.plain("战斗");
        }
        _ => {
            let (x, y) = pick_two(rng, &ORGANIZATIONS);
            b.entity(x, Org);
            b.plain("与");
            b.entity(y, Org);
            b.plain("交火");
        }
    }
    b.event();
    b.end_sentence();
}

/// Trigger-bearing sentence that is not a Conflict event mention.
fn decoy_sentence<R: Rng>(rng: &mut R, b: &mut DocBuilder) {
    use EntityType::*;
    match rng.random_range(0..3) {
        0 => {
            b.entity(pick(rng, &PERSONS), Per);
            b.plain("呼吁避免冲突");
        }
        1 => {
            b.entity(pick(rng, &PERSONS), Per);
            b.plain("在");
            b.entity(pick(rng, &LOCATIONS), Loc);
            b.plain("纪念战斗英雄");
        }
        _ => b.plain("报道称袭击传闻不实"),
    }
    b.end_sentence();
}

fn base_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2008, 1, 1, 0, 0, 0).unwrap()
}

/// `n` documents over two years in four planted themes. Every other document
/// carries annotations.
pub fn synthetic_corpus(n: usize, seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut documents = Vec::with_capacity(n);
    let mut annotations = Vec::new();
    let mut themes = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("doc{i:04}");
        let theme = rng.random_range(0..THEMES.len());
        let words: Vec<&str> = THEMES[theme].1.to_vec();
        let mut b = DocBuilder::new(&id);
        let sentences = rng.random_range(5..=8);
        for _ in 0..sentences {
            match (theme, rng.random_range(0..10)) {
                (0, 7 | 8) => action_sentence(&mut rng, &mut b),
                (_, 0..=4) => theme_sentence(&mut rng, &mut b, &words),
                (_, 5..=7) => relation_sentence(&mut rng, &mut b),
                _ => decoy_sentence(&mut rng, &mut b),
            }
        }
        let offset = Duration::minutes(rng.random_range(0..(730 * 24 * 60)));
        documents.push(Document::new(&id, b.text, base_time() + offset, "synthetic"));
        if i % 2 == 0 {
            annotations.push(b.ann);
        }
        themes.push(theme);
    }

    let mut lexicon: Vec<String> = THEMES.iter().flat_map(|(_, ws)| ws.iter()).map(|s| s.to_string()).collect();
    lexicon.extend(PERSONS.iter().chain(&LOCATIONS).chain(&ORGANIZATIONS).map(|s| s.to_string()));
    lexicon.extend(CUE_WORDS.iter().map(|s| s.to_string()));
    lexicon.sort();
    lexicon.dedup();

    let mut gazetteer = String::from("# surface\ttype\tweight\n");
    for (names, t) in [
        (&PERSONS[..], EntityType::Per),
        (&LOCATIONS[..], EntityType::Loc),
        (&ORGANIZATIONS[..], EntityType::Org),
    ] {
        for n in names {
            writeln!(gazetteer, "{n}\t{t}\t{}", gazetteer_weight(n)).unwrap();
        }
    }

    SyntheticCorpus {
        documents,
        lexicon,
        gazetteer,
        annotations,
        triggers: TRIGGERS.iter().map(|s| s.to_string()).collect(),
        themes,
    }
}

impl SyntheticCorpus {
    pub fn corpus_jsonl(&self) -> String {
        self.documents
            .iter()
            .map(|d| serde_json::to_string(d).expect("document serializes") + "\n")
            .collect()
    }

    /// Writes corpus.jsonl, lexicon.txt, gazetteer.tsv, annotations.jsonl,
    /// triggers.txt and a pipeline.conf pointing at them.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("corpus.jsonl"), self.corpus_jsonl())?;
        fs::write(dir.join("lexicon.txt"), self.lexicon.join("\n") + "\n")?;
        fs::write(dir.join("gazetteer.tsv"), &self.gazetteer)?;
        fs::write(dir.join("annotations.jsonl"), write_annotations(&self.annotations))?;
        fs::write(dir.join("triggers.txt"), self.triggers.join("\n") + "\n")?;
        fs::write(dir.join("pipeline.conf"), PIPELINE_CONF)?;
        Ok(())
    }
}

/// Pipeline configuration shipped with the synthetic fixture; paths are
/// relative to the file.
pub const PIPELINE_CONF: &str = "\
# synthetic fixture
corpus = corpus.jsonl
lexicon = lexicon.txt
gazetteer = gazetteer.tsv
annotations = annotations.jsonl
triggers = triggers.txt
recognizer = gazetteer
step_months = 5
topics = 4
lda_seed = 7
l2 = 0.01
output = out
";

/// Corpus with `k` disjoint-dominant vocabularies: each document draws 90% of
/// its words from its own topic's 20 words. Returns documents, their planted
/// topics, and the lexicon.
pub fn planted_topic_corpus(n: usize, k: usize, seed: u64) -> (Vec<Document>, Vec<usize>, Vec<String>) {
    const CHARS: &str = "甲乙丙丁戊己庚辛壬癸子丑寅卯辰巳午未申酉戌亥金木水火土日月星山川风云雷电";
    let chars: Vec<char> = CHARS.chars().collect();
    // distinct two-character words, 20 per topic plus 10 shared
    let mut words: Vec<String> = Vec::new();
    'outer: for a in &chars {
        for b in &chars {
            if a != b {
                words.push(format!("{a}{b}"));
                if words.len() == 20 * k + 10 {
                    break 'outer;
                }
            }
        }
    }
    let shared = &words[20 * k..];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let t = i % k;
        let own = &words[20 * t..20 * (t + 1)];
        let len = rng.random_range(40..=60);
        let tokens: Vec<&str> = (0..len)
            .map(|_| {
                if rng.random_bool(0.9) {
                    own.choose(&mut rng).unwrap().as_str()
                } else {
                    shared.choose(&mut rng).unwrap().as_str()
                }
            })
            .collect();
        let ts = base_time() + Duration::days(rng.random_range(0..120));
        docs.push(Document::new(format!("p{i:04}"), tokens.join("，") + "。", ts, "planted"));
        labels.push(t);
    }
    (docs, labels, words)
}

/// Two-class sentence dataset labelled `positive` / `negative`. Each instance
/// carries 1..=8 cue features of its latent class plus shared noise; labels
/// of instances with few cues are flipped often, those with many rarely.
pub fn action_dataset(n: usize, positive: &str, negative: &str, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let latent = rng.random_bool(0.5);
            let cues = rng.random_range(1..=8u32);
            let mut bag = TermBag::new();
            for _ in 0..cues {
                let w = rng.random_range(0..12);
                bag.insert(if latent { format!("pos{w}") } else { format!("neg{w}") });
            }
            for _ in 0..3 {
                bag.insert(format!("shared{}", rng.random_range(0..20)));
            }
            let flip = rng.random_bool(0.45 / f64::from(cues));
            let label = if latent != flip { positive } else { negative };
            Instance::new(bag, label)
        })
        .collect()
}

/// Shape of [`random_network`] output.
#[derive(Debug, Clone, Copy)]
pub struct RandomNetworkOptions {
    pub max_vertices: usize,
    pub max_edges: usize,
    /// Keys spaced irregularly rather than 0..n.
    pub sparse_keys: bool,
    /// Edge info carries per-mention records with timestamps.
    pub with_mentions: bool,
}

impl Default for RandomNetworkOptions {
    fn default() -> Self {
        Self {
            max_vertices: 12,
            max_edges: 24,
            sparse_keys: false,
            with_mentions: true,
        }
    }
}

const NAME_POOL: [&str; 8] = ["毛泽东", "井冈山", "北约", "A\"B", "x&y<z>", "赖斯", "延安", "1928"];

fn random_info<R: Rng>(rng: &mut R) -> Info {
    let mut info = Info::new();
    if rng.random_bool(0.5) {
        info.insert("docs".into(), json!([format!("d{}", rng.random_range(0..5))]));
    }
    if rng.random_bool(0.3) {
        info.insert("note".into(), Value::Null);
    }
    if rng.random_bool(0.3) {
        info.insert("score".into(), json!(rng.random::<f64>()));
    }
    info
}

/// A valid network with random frames. Names repeat across vertex types;
/// weights and info values exercise float and escaping round trips.
pub fn random_network<R: Rng>(rng: &mut R, opts: RandomNetworkOptions) -> EventNetwork {
    let mut net = EventNetwork::new(format!("t{}/e{:02}", rng.random_range(0..5), rng.random_range(0..25)));
    let mut identities: Vec<(&str, VertexType)> = NAME_POOL
        .iter()
        .flat_map(|n| VertexType::ALL.iter().map(move |t| (*n, *t)))
        .collect();
    let n = rng.random_range(0..=opts.max_vertices.min(identities.len()));
    let mut key = 0u32;
    for _ in 0..n {
        let (name, vtype) = identities.swap_remove(rng.random_range(0..identities.len()));
        net.vertices.push(VertexFrame {
            key,
            name: name.to_string(),
            vtype,
            weight: if rng.random_bool(0.2) { 1.0 } else { rng.random::<f64>() },
            info: random_info(rng),
        });
        key += if opts.sparse_keys { rng.random_range(1..4) } else { 1 };
    }
    if n >= 2 {
        for _ in 0..rng.random_range(0..=opts.max_edges) {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let mut info = random_info(rng);
            if opts.with_mentions {
                let count = rng.random_range(1..=3);
                let mentions: Vec<Value> = (0..count)
                    .map(|_| {
                        let ts = base_time() + Duration::days(rng.random_range(0..20));
                        json!({
                            "doc_id": format!("d{}", rng.random_range(0..5)),
                            "sentence": rng.random_range(0..4),
                            "timestamp": crate::timefmt::format(&ts),
                            "weight": rng.random::<f64>(),
                        })
                    })
                    .collect();
                info.insert("count".into(), json!(count));
                info.insert("mentions".into(), Value::Array(mentions));
            }
            net.edges.push(EdgeFrame {
                etype: *EdgeType::ALL.choose(rng).unwrap(),
                v1: net.vertices[a].key,
                v2: net.vertices[b].key,
                weight: rng.random::<f64>(),
                info,
            });
        }
    }
    net
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::{split_sentences, GazetteerRecognizer};

    #[test]
    fn corpus_is_deterministic_and_annotations_align() {
        let a = synthetic_corpus(40, 1);
        let b = synthetic_corpus(40, 1);
        assert_eq!(a.corpus_jsonl(), b.corpus_jsonl());
        assert_eq!(a.annotations.len(), 20);
        for (ann, doc) in a.annotations.iter().zip(a.documents.iter().step_by(2)) {
            let chars: Vec<char> = doc.text.chars().collect();
            for m in &ann.mentions {
                assert_eq!(chars[m.start..m.end].iter().collect::<String>(), m.surface);
            }
            let n = split_sentences(doc).len();
            assert!(ann.relations.iter().all(|r| r.sentence < n));
            assert!(ann.events.iter().all(|e| e.sentence < n));
        }
        GazetteerRecognizer::parse(&a.gazetteer).unwrap();
    }

    #[test]
    fn random_networks_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for sparse in [false, true] {
            for _ in 0..50 {
                let opts = RandomNetworkOptions {
                    sparse_keys: sparse,
                    ..Default::default()
                };
                random_network(&mut rng, opts).validate().unwrap();
            }
        }
    }

    #[test]
    fn planted_corpus_shape() {
        let (docs, labels, words) = planted_topic_corpus(30, 3, 0);
        assert_eq!(docs.len(), 30);
        assert_eq!(labels[..4], [0, 1, 2, 0]);
        assert_eq!(words.len(), 70);
    }
}

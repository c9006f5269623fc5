//! Argumentative microtext corpus: data model and XML reader.
//!
//! The corpus XML has `edu` elements (text), `adu` and `joint` nodes, and
//! `edge` elements. `seg` edges attach EDUs (possibly via joints) to ADUs;
//! the remaining edge codes are argumentative relations. Each ADU becomes one
//! [`Segment`] whose text is the concatenation of its EDUs.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::RelationType;
use crate::text::{char_len, char_slice};

/// Half-open range of Unicode scalar offsets into a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        CharSpan { start, end }
    }

    pub fn contains(&self, other: &CharSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn intersects(&self, other: &CharSpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub id: String,
    pub text: String,
    pub span: CharSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRef {
    Segment(String),
    Relation(String),
}

impl NodeRef {
    pub fn id(&self) -> &str {
        match self {
            NodeRef::Segment(id) | NodeRef::Relation(id) => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgRelation {
    pub id: String,
    pub source: String,
    /// Linked premises that act together with `source`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub linked_sources: Vec<String>,
    pub target: NodeRef,
    pub rel_type: RelationType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Microtext {
    pub id: String,
    pub topic_question: String,
    /// EDU texts joined by single spaces; segment spans index into it.
    pub text: String,
    pub segments: Vec<Segment>,
    pub relations: Vec<ArgRelation>,
}

impl Microtext {
    pub fn segment(&self, id: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.id == id)
    }

    pub fn relation(&self, id: &str) -> Option<&ArgRelation> {
        self.relations.iter().find(|r| r.id == id)
    }

    pub fn char_len(&self) -> usize {
        char_len(&self.text)
    }

    pub fn slice(&self, span: CharSpan) -> Option<&str> {
        char_slice(&self.text, span.start, span.end)
    }

    /// Segment whose span contains `span` entirely.
    pub fn segment_containing(&self, span: CharSpan) -> Option<&Segment> {
        self.segments.iter().find(|s| s.span.contains(&span))
    }

    /// Segments taking part in a relation. For a relation that targets
    /// another relation, the targeted relation's participants are included.
    pub fn participants(&self, relation_id: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut seen = HashSet::new();
        let mut stack = vec![relation_id];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            let Some(rel) = self.relation(id) else {
                continue;
            };
            out.insert(rel.source.clone());
            out.extend(rel.linked_sources.iter().cloned());
            match &rel.target {
                NodeRef::Segment(s) => {
                    out.insert(s.clone());
                }
                NodeRef::Relation(r) => stack.push(r),
            }
        }
        out
    }

    /// Checks the structural invariants: spans reconstruct the text, no
    /// overlap, endpoints resolve, undercuts target relations, and relation
    /// target chains terminate.
    pub fn check(&self) -> Result<(), CorpusError> {
        let doc = &self.id;
        if self.topic_question.trim().is_empty() {
            return Err(CorpusError::NoTopicQuestion(doc.clone()));
        }
        let mut spans: Vec<&Segment> = self.segments.iter().collect();
        spans.sort_by_key(|s| s.span);
        for pair in spans.windows(2) {
            if pair[0].span.intersects(&pair[1].span) {
                return Err(CorpusError::Invalid {
                    doc: doc.clone(),
                    message: format!("segments {} and {} overlap", pair[0].id, pair[1].id),
                });
            }
        }
        for s in &self.segments {
            if s.span.start >= s.span.end || self.slice(s.span) != Some(s.text.as_str()) {
                return Err(CorpusError::Invalid {
                    doc: doc.clone(),
                    message: format!("segment {} does not match its span", s.id),
                });
            }
        }
        let mut ids = HashSet::new();
        for id in self.segments.iter().map(|s| &s.id).chain(self.relations.iter().map(|r| &r.id)) {
            if !ids.insert(id.as_str()) {
                return Err(CorpusError::DuplicateId {
                    doc: doc.clone(),
                    id: id.clone(),
                });
            }
        }
        for r in &self.relations {
            for src in std::iter::once(&r.source).chain(&r.linked_sources) {
                if self.segment(src).is_none() {
                    return Err(CorpusError::Dangling {
                        doc: doc.clone(),
                        edge: r.id.clone(),
                        node: src.clone(),
                    });
                }
            }
            let resolves = match &r.target {
                NodeRef::Segment(s) => self.segment(s).is_some(),
                NodeRef::Relation(t) => self.relation(t).is_some(),
            };
            if !resolves {
                return Err(CorpusError::Dangling {
                    doc: doc.clone(),
                    edge: r.id.clone(),
                    node: r.target.id().to_string(),
                });
            }
            let targets_relation = matches!(r.target, NodeRef::Relation(_));
            if targets_relation != (r.rel_type == RelationType::Undercut) {
                return Err(CorpusError::TargetKind {
                    doc: doc.clone(),
                    edge: r.id.clone(),
                });
            }
        }
        check_acyclic(doc, &self.relations)
    }
}

fn check_acyclic(doc: &str, relations: &[ArgRelation]) -> Result<(), CorpusError> {
    let next: HashMap<&str, &str> = relations
        .iter()
        .filter_map(|r| match &r.target {
            NodeRef::Relation(t) => Some((r.id.as_str(), t.as_str())),
            NodeRef::Segment(_) => None,
        })
        .collect();
    for start in next.keys() {
        let mut cur = *start;
        let mut steps = 0;
        while let Some(&t) = next.get(cur) {
            steps += 1;
            if t == *start || steps > next.len() {
                return Err(CorpusError::Cycle {
                    doc: doc.to_string(),
                    edge: start.to_string(),
                });
            }
            cur = t;
        }
    }
    Ok(())
}

/// What a corpus edge-type code means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRole {
    /// Attaches an EDU or joint to a larger unit.
    Segmentation,
    Relation(RelationType),
    /// Additional source of an existing relation (linked premise).
    Linked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeTypeMap(pub BTreeMap<String, EdgeRole>);

impl Default for EdgeTypeMap {
    fn default() -> Self {
        let map = [
            ("seg", EdgeRole::Segmentation),
            ("sup", EdgeRole::Relation(RelationType::Support)),
            ("exa", EdgeRole::Relation(RelationType::Support)),
            ("reb", EdgeRole::Relation(RelationType::Rebuttal)),
            ("und", EdgeRole::Relation(RelationType::Undercut)),
            ("add", EdgeRole::Linked),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        EdgeTypeMap(map)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CorpusOptions {
    pub edge_types: EdgeTypeMap,
    /// Maps `topic_id` values to question text; unmapped ids are used as is.
    pub topics: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{doc}: malformed XML: {source}")]
    Xml {
        doc: String,
        #[source]
        source: roxmltree::Error,
    },
    #[error("{doc}: <{element}> lacks attribute `{attr}`")]
    MissingAttribute {
        doc: String,
        element: String,
        attr: &'static str,
    },
    #[error("{doc}: edge {edge} references unknown node {node}")]
    Dangling { doc: String, edge: String, node: String },
    #[error("{doc}: edge {edge} has unknown type code `{code}`")]
    UnknownEdgeType { doc: String, edge: String, code: String },
    #[error("{0}: no topic question")]
    NoTopicQuestion(String),
    #[error("{doc}: unit {unit} covers non-adjacent EDUs")]
    NonContiguous { doc: String, unit: String },
    #[error("{doc}: duplicate id {id}")]
    DuplicateId { doc: String, id: String },
    #[error("{doc}: edge {edge}: undercuts must target relations and other relations must target units")]
    TargetKind { doc: String, edge: String },
    #[error("{doc}: relation {edge} reaches itself through its targets")]
    Cycle { doc: String, edge: String },
    #[error("{doc}: {message}")]
    Invalid { doc: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

struct RawEdge<'a> {
    id: &'a str,
    src: &'a str,
    trg: &'a str,
    role: EdgeRole,
}

pub fn parse_microtext(document: &str, options: &CorpusOptions) -> Result<Microtext, CorpusError> {
    let xml = roxmltree::Document::parse(document).map_err(|source| CorpusError::Xml {
        doc: "<document>".to_string(),
        source,
    })?;
    let root = xml.root_element();
    let doc = root
        .attribute("id")
        .ok_or_else(|| CorpusError::MissingAttribute {
            doc: "<document>".to_string(),
            element: root.tag_name().name().to_string(),
            attr: "id",
        })?
        .to_string();
    fn required<'a>(
        doc: &str,
        node: roxmltree::Node<'a, '_>,
        name: &'static str,
    ) -> Result<&'a str, CorpusError> {
        node.attribute(name).ok_or_else(|| CorpusError::MissingAttribute {
            doc: doc.to_string(),
            element: node.tag_name().name().to_string(),
            attr: name,
        })
    }
    let attr = |node, name| required(&doc, node, name);

    let mut edus: Vec<(&str, String)> = Vec::new();
    let mut units: Vec<&str> = Vec::new();
    let mut joints: HashSet<&str> = HashSet::new();
    let mut raw_edges: Vec<RawEdge<'_>> = Vec::new();
    for node in root.children().filter(|n| n.is_element()) {
        match node.tag_name().name() {
            "edu" => {
                let text: String = node
                    .descendants()
                    .filter(|n| n.is_text())
                    .filter_map(|n| n.text())
                    .collect();
                edus.push((attr(node, "id")?, text.trim().to_string()));
            }
            "adu" => units.push(attr(node, "id")?),
            "joint" => {
                joints.insert(attr(node, "id")?);
            }
            "edge" => {
                let id = attr(node, "id")?;
                let code = attr(node, "type")?;
                let role = *options.edge_types.0.get(code).ok_or_else(|| {
                    CorpusError::UnknownEdgeType {
                        doc: doc.clone(),
                        edge: id.to_string(),
                        code: code.to_string(),
                    }
                })?;
                raw_edges.push(RawEdge {
                    id,
                    src: attr(node, "src")?,
                    trg: attr(node, "trg")?,
                    role,
                });
            }
            _ => {}
        }
    }

    let topic = root
        .attribute("topic_id")
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .ok_or_else(|| CorpusError::NoTopicQuestion(doc.clone()))?;
    let topic_question = options
        .topics
        .get(topic)
        .cloned()
        .unwrap_or_else(|| topic.to_string());

    // Document text and per-EDU spans.
    let mut text = String::new();
    let mut edu_spans: HashMap<&str, (usize, CharSpan)> = HashMap::new();
    let mut offset = 0;
    for (i, (id, t)) in edus.iter().enumerate() {
        if i > 0 {
            text.push(' ');
            offset += 1;
        }
        let len = char_len(t);
        text.push_str(t);
        if edu_spans.insert(id, (i, CharSpan::new(offset, offset + len))).is_some() {
            return Err(CorpusError::DuplicateId {
                doc,
                id: id.to_string(),
            });
        }
        offset += len;
    }

    // Resolve segmentation edges: child (edu or joint) -> parent.
    let unit_set: HashSet<&str> = units.iter().copied().collect();
    let mut parent: HashMap<&str, &str> = HashMap::new();
    for e in raw_edges.iter().filter(|e| e.role == EdgeRole::Segmentation) {
        let child_ok = edu_spans.contains_key(e.src) || joints.contains(e.src);
        let parent_ok = unit_set.contains(e.trg) || joints.contains(e.trg);
        if !child_ok || !parent_ok {
            let node = if child_ok { e.trg } else { e.src };
            return Err(CorpusError::Dangling {
                doc,
                edge: e.id.to_string(),
                node: node.to_string(),
            });
        }
        parent.insert(e.src, e.trg);
    }
    let unit_of = |edu: &str| -> Option<&str> {
        let mut cur = edu;
        for _ in 0..=parent.len() {
            match parent.get(cur) {
                Some(p) if unit_set.contains(p) => return Some(p),
                Some(p) => cur = p,
                None => return None,
            }
        }
        None
    };

    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut segment_ids: Vec<&str> = Vec::new();
    for (id, _) in &edus {
        let (idx, _) = edu_spans[id];
        // EDUs outside any unit stand on their own.
        let owner = unit_of(id).unwrap_or(id);
        members.entry(owner).or_default().push(idx);
    }
    for u in &units {
        if !members.contains_key(u) {
            return Err(CorpusError::Invalid {
                doc,
                message: format!("unit {u} has no text"),
            });
        }
    }
    let mut segments = Vec::with_capacity(members.len());
    for (owner, mut idxs) in members {
        idxs.sort_unstable();
        if idxs.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(CorpusError::NonContiguous {
                doc,
                unit: owner.to_string(),
            });
        }
        let first = edu_spans[edus[idxs[0]].0].1;
        let last = edu_spans[edus[*idxs.last().unwrap()].0].1;
        let span = CharSpan::new(first.start, last.end);
        segments.push(Segment {
            id: owner.to_string(),
            text: char_slice(&text, span.start, span.end)
                .unwrap_or_default()
                .to_string(),
            span,
        });
        segment_ids.push(owner);
    }
    segments.sort_by_key(|s| s.span);
    let segment_set: HashSet<&str> = segment_ids.into_iter().collect();

    let relation_edges: HashSet<&str> = raw_edges
        .iter()
        .filter(|e| matches!(e.role, EdgeRole::Relation(_)))
        .map(|e| e.id)
        .collect();
    let mut relations: Vec<ArgRelation> = Vec::new();
    for e in &raw_edges {
        let EdgeRole::Relation(rel_type) = e.role else {
            continue;
        };
        if !segment_set.contains(e.src) {
            return Err(CorpusError::Dangling {
                doc,
                edge: e.id.to_string(),
                node: e.src.to_string(),
            });
        }
        let target = if segment_set.contains(e.trg) {
            NodeRef::Segment(e.trg.to_string())
        } else if relation_edges.contains(e.trg) {
            NodeRef::Relation(e.trg.to_string())
        } else {
            return Err(CorpusError::Dangling {
                doc,
                edge: e.id.to_string(),
                node: e.trg.to_string(),
            });
        };
        if e.trg == e.id {
            return Err(CorpusError::Cycle {
                doc,
                edge: e.id.to_string(),
            });
        }
        relations.push(ArgRelation {
            id: e.id.to_string(),
            source: e.src.to_string(),
            linked_sources: Vec::new(),
            target,
            rel_type,
        });
    }
    for e in raw_edges.iter().filter(|e| e.role == EdgeRole::Linked) {
        if !segment_set.contains(e.src) {
            return Err(CorpusError::Dangling {
                doc,
                edge: e.id.to_string(),
                node: e.src.to_string(),
            });
        }
        let Some(rel) = relations.iter_mut().find(|r| r.id == e.trg) else {
            return Err(CorpusError::Dangling {
                doc,
                edge: e.id.to_string(),
                node: e.trg.to_string(),
            });
        };
        rel.linked_sources.push(e.src.to_string());
    }

    let mt = Microtext {
        id: doc,
        topic_question,
        text,
        segments,
        relations,
    };
    mt.check()?;
    Ok(mt)
}

/// Texts read from a corpus directory.
#[derive(Debug, Default)]
pub struct CorpusLoad {
    pub texts: Vec<Microtext>,
    /// Ids (or file names) of texts skipped for lacking a topic question.
    pub excluded: Vec<String>,
}

impl CorpusLoad {
    pub fn relation_count(&self) -> usize {
        self.texts.iter().map(|t| t.relations.len()).sum()
    }
}

/// Reads every `*.xml` file directly inside `dir`, in file-name order.
pub fn load_corpus_dir(dir: &Path, options: &CorpusOptions) -> Result<CorpusLoad, CorpusError> {
    let io = |source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "xml"))
        .collect();
    files.sort();
    let mut load = CorpusLoad::default();
    for path in files {
        let source = fs::read_to_string(&path).map_err(|source| CorpusError::Io {
            path: path.clone(),
            source,
        })?;
        match parse_microtext(&source, options) {
            Ok(mt) => load.texts.push(mt),
            Err(CorpusError::NoTopicQuestion(id)) => load.excluded.push(id),
            Err(CorpusError::Xml { source, .. }) => {
                return Err(CorpusError::Xml {
                    doc: path.display().to_string(),
                    source,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(load)
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Segment(id) => write!(f, "segment {id}"),
            NodeRef::Relation(id) => write!(f, "relation {id}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHOPPING: &str = r#"<?xml version='1.0' encoding='UTF-8'?>
<arggraph id="micro_t001" topic_id="open_shops_on_holidays" stance="pro">
  <edu id="e1"><![CDATA[I as an employee find it practical to be able to shop on weekends.]]></edu>
  <edu id="e2"><![CDATA[Sure, other people have to work on the weekend,]]></edu>
  <edu id="e3"><![CDATA[but they can have days off during the week.]]></edu>
  <adu id="a1" type="pro"/>
  <adu id="a2" type="opp"/>
  <adu id="a3" type="pro"/>
  <edge id="c1" src="e1" trg="a1" type="seg"/>
  <edge id="c2" src="e2" trg="a2" type="seg"/>
  <edge id="c3" src="e3" trg="a3" type="seg"/>
  <edge id="c4" src="a2" trg="a1" type="reb"/>
  <edge id="c5" src="a3" trg="c4" type="und"/>
</arggraph>"#;

    fn opts() -> CorpusOptions {
        CorpusOptions::default()
    }

    #[test]
    fn parses_undercut_of_relation() {
        let mt = parse_microtext(SHOPPING, &opts()).unwrap();
        assert_eq!(mt.segments.len(), 3);
        assert_eq!(mt.relations.len(), 2);
        assert_eq!(mt.relations[0].rel_type, RelationType::Rebuttal);
        assert_eq!(mt.relations[1].target, NodeRef::Relation("c4".into()));
        assert_eq!(mt.relations[1].rel_type, RelationType::Undercut);
        assert_eq!(
            mt.participants("c5"),
            ["a1", "a2", "a3"].iter().map(|s| s.to_string()).collect()
        );
        for s in &mt.segments {
            assert_eq!(mt.slice(s.span), Some(s.text.as_str()));
        }
    }

    #[test]
    fn single_segment_without_edges() {
        let xml = r#"<arggraph id="m1" topic_id="t"><edu id="e1">Only one.</edu></arggraph>"#;
        let mt = parse_microtext(xml, &opts()).unwrap();
        assert_eq!(mt.segments.len(), 1);
        assert_eq!(mt.segments[0].id, "e1");
        assert!(mt.relations.is_empty());
    }

    #[test]
    fn unicode_offsets_are_scalar_values() {
        let xml = r#"<arggraph id="m1" topic_id="t"><edu id="e1">Müll trennen.</edu><edu id="e2">Gut.</edu></arggraph>"#;
        let mt = parse_microtext(xml, &opts()).unwrap();
        assert_eq!(mt.segments[1].span, CharSpan::new(14, 18));
        assert_eq!(mt.segments[1].text, "Gut.");
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            parse_microtext("<arggraph id=", &opts()),
            Err(CorpusError::Xml { .. })
        ));
        let no_topic = r#"<arggraph id="m1"><edu id="e1">x</edu></arggraph>"#;
        assert!(matches!(
            parse_microtext(no_topic, &opts()),
            Err(CorpusError::NoTopicQuestion(_))
        ));
        let dangling = SHOPPING.replace(r#"trg="c4" type="und""#, r#"trg="c9" type="und""#);
        assert!(matches!(
            parse_microtext(&dangling, &opts()),
            Err(CorpusError::Dangling { node, .. }) if node == "c9"
        ));
        let unknown = SHOPPING.replace(r#"type="reb""#, r#"type="zzz""#);
        assert!(matches!(
            parse_microtext(&unknown, &opts()),
            Err(CorpusError::UnknownEdgeType { code, .. }) if code == "zzz"
        ));
        let wrong_kind = SHOPPING.replace(r#"trg="c4" type="und""#, r#"trg="a1" type="und""#);
        assert!(matches!(
            parse_microtext(&wrong_kind, &opts()),
            Err(CorpusError::TargetKind { .. })
        ));
    }

    #[test]
    fn linked_premise_folds_into_relation() {
        let xml = r#"<arggraph id="m2" topic_id="t">
  <edu id="e1">Claim.</edu><edu id="e2">Premise one.</edu><edu id="e3">Premise two.</edu>
  <adu id="a1" type="pro"/><adu id="a2" type="pro"/><adu id="a3" type="pro"/>
  <edge id="c1" src="e1" trg="a1" type="seg"/>
  <edge id="c2" src="e2" trg="a2" type="seg"/>
  <edge id="c3" src="e3" trg="a3" type="seg"/>
  <edge id="c4" src="a2" trg="a1" type="sup"/>
  <edge id="c5" src="a3" trg="c4" type="add"/>
</arggraph>"#;
        let mt = parse_microtext(xml, &opts()).unwrap();
        assert_eq!(mt.relations.len(), 1);
        assert_eq!(mt.relations[0].linked_sources, vec!["a3".to_string()]);
    }

    #[test]
    fn joints_group_edus() {
        let xml = r#"<arggraph id="m3" topic_id="t">
  <edu id="e1">First half,</edu><edu id="e2">second half.</edu><edu id="e3">Other.</edu>
  <joint id="j1"/><adu id="a1" type="pro"/><adu id="a2" type="opp"/>
  <edge id="c1" src="e1" trg="j1" type="seg"/>
  <edge id="c2" src="e2" trg="j1" type="seg"/>
  <edge id="c3" src="j1" trg="a1" type="seg"/>
  <edge id="c4" src="e3" trg="a2" type="seg"/>
  <edge id="c5" src="a2" trg="a1" type="reb"/>
</arggraph>"#;
        let mt = parse_microtext(xml, &opts()).unwrap();
        assert_eq!(mt.segment("a1").unwrap().text, "First half, second half.");
    }

    #[test]
    fn cycle_through_relation_targets_rejected() {
        let mut mt = parse_microtext(SHOPPING, &opts()).unwrap();
        mt.relations[0].target = NodeRef::Relation("c5".into());
        mt.relations[0].rel_type = RelationType::Undercut;
        assert!(matches!(mt.check(), Err(CorpusError::Cycle { .. })));
    }
}

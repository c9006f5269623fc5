//! Descriptive statistics: relation-type and pattern distributions and the
//! clue table, exportable as CSV, JSON or plain text.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agreement::{evaluate, AgreementError, ReportOptions};
use crate::annotation::{RelationKey, Span, Stage};
use crate::catalog::{Catalog, PatternFamily, RelationType, OTHER_ID};
use crate::project::{Project, Split, SplitFilter};

/// Kind of linguistic clue an explanation depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClueKind {
    ValueJudgment,
    Causality,
}

impl ClueKind {
    pub const ALL: [ClueKind; 2] = [ClueKind::ValueJudgment, ClueKind::Causality];

    pub fn label(self) -> &'static str {
        match self {
            ClueKind::ValueJudgment => "value judgment",
            ClueKind::Causality => "causality",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClueTag {
    pub text_id: String,
    pub relation_id: String,
    pub clue_kind: ClueKind,
    #[serde(default)]
    pub spans: Vec<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ClueTag {
    pub fn key(&self) -> RelationKey {
        RelationKey::new(&self.text_id, &self.relation_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionRow {
    /// Grouping label, e.g. the relation type of a pattern row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub label: String,
    pub counts: Vec<u64>,
}

/// Integer counts; percentages are computed on output only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<DistributionRow>,
}

impl DistributionTable {
    pub fn column_totals(&self) -> Vec<u64> {
        (0..self.columns.len())
            .map(|c| self.rows.iter().map(|r| r.counts[c]).sum())
            .collect()
    }

    pub fn row(&self, group: Option<&str>, label: &str) -> Option<&DistributionRow> {
        self.rows
            .iter()
            .find(|r| r.group.as_deref() == group && r.label == label)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,label");
        for c in &self.columns {
            out.push(',');
            out.push_str(&csv_field(c));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&csv_field(r.group.as_deref().unwrap_or("")));
            out.push(',');
            out.push_str(&csv_field(&r.label));
            for n in &r.counts {
                let _ = write!(out, ",{n}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    /// Aligned text with per-column percentages.
    pub fn to_text(&self) -> String {
        let totals = self.column_totals();
        let label_w = self
            .rows
            .iter()
            .map(|r| r.group.as_ref().map_or(0, |g| g.len() + 1) + r.label.len())
            .chain([self.title.len().min(24), 5])
            .max()
            .unwrap_or(5);
        let mut out = format!("{}\n", self.title);
        let _ = write!(out, "{:<label_w$}", "");
        for c in &self.columns {
            let _ = write!(out, " {c:>16}");
        }
        out.push('\n');
        let cell = |n: u64, total: u64| {
            if total == 0 {
                format!("{n}")
            } else {
                format!("{n} ({:.1}%)", n as f64 * 100.0 / total as f64)
            }
        };
        for r in &self.rows {
            let label = match &r.group {
                Some(g) => format!("{g}/{}", r.label),
                None => r.label.clone(),
            };
            let _ = write!(out, "{label:<label_w$}");
            for (n, t) in r.counts.iter().zip(&totals) {
                let _ = write!(out, " {:>16}", cell(*n, *t));
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<label_w$}", "total");
        for t in &totals {
            let _ = write!(out, " {t:>16}");
        }
        out.push('\n');
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Relation counts per type, overall and per split.
pub fn relation_distribution(project: &Project) -> DistributionTable {
    let mut counts: BTreeMap<RelationType, [u64; 3]> =
        RelationType::ALL.iter().map(|t| (*t, [0; 3])).collect();
    for text in &project.corpus {
        let col = match project.split_of(&text.id) {
            Split::Dev => 1,
            Split::Test => 2,
        };
        for r in &text.relations {
            let c = counts.get_mut(&r.rel_type).expect("all types present");
            c[0] += 1;
            c[col] += 1;
        }
    }
    DistributionTable {
        title: "relation types".into(),
        columns: vec!["all".into(), "dev".into(), "test".into()],
        rows: RelationType::ALL
            .iter()
            .map(|t| DistributionRow {
                group: None,
                label: t.as_str().into(),
                counts: counts[t].to_vec(),
            })
            .collect(),
    }
}

/// Per-pattern counts grouped by relation type, with an OTHER row in every
/// group. With `per_annotator`, one column per annotator holding their
/// labels after `stage`; otherwise one column of the patterns chosen for
/// relations accepted by `stage`.
pub fn pattern_distribution(
    project: &Project,
    catalog: &Catalog,
    stage: Stage,
    per_annotator: bool,
    split: SplitFilter,
) -> Result<DistributionTable, AgreementError> {
    let options = ReportOptions {
        split,
        ..Default::default()
    };
    let records = evaluate(project, catalog, &options)?;
    let columns: Vec<String> = if per_annotator {
        project.annotators.iter().take(2).cloned().collect()
    } else {
        vec!["resolved".into()]
    };

    let mut rows = Vec::new();
    let mut index: BTreeMap<(RelationType, &str), usize> = BTreeMap::new();
    for t in RelationType::ALL {
        for p in catalog.of_relation(t).chain(catalog.get(OTHER_ID)) {
            index.insert((t, p.id.as_str()), rows.len());
            rows.push(DistributionRow {
                group: Some(t.as_str().to_string()),
                label: p.id.clone(),
                counts: vec![0; columns.len()],
            });
        }
    }
    let mut bump = |t: RelationType, id: &str, col: usize| {
        if let Some(&i) = index.get(&(t, id)) {
            rows[i].counts[col] += 1;
        }
    };
    for r in &records {
        let state = r.stage(stage);
        if per_annotator {
            if let Some(patterns) = &state.patterns {
                for (col, p) in patterns.iter().enumerate() {
                    bump(r.rel_type, p, col);
                }
            }
        } else if state.verdict.is_some_and(|v| v.is_accepted()) {
            if let Some(p) = &state.chosen_pattern {
                bump(r.rel_type, p, 0);
            }
        }
    }
    let title = if per_annotator {
        format!("patterns per annotator after stage {stage}")
    } else {
        format!("patterns of accepted explanations after stage {stage}")
    };
    Ok(DistributionTable {
        title,
        columns,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClueError {
    #[error("sample relation {0} is not in the corpus")]
    MissingRelation(RelationKey),
    #[error("clue tag on {0}, which is not in the corpus")]
    TagOutsideCorpus(RelationKey),
    #[error("clue tag on {key}: span {start}..{end} lies outside the document")]
    SpanOutOfBounds { key: RelationKey, start: usize, end: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClueRow {
    pub family: String,
    pub instances: u64,
    /// Relations of the family carrying at least one tag of each kind.
    pub clues: BTreeMap<ClueKind, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClueTable {
    pub rows: Vec<ClueRow>,
}

impl ClueTable {
    pub fn row(&self, family: &str) -> Option<&ClueRow> {
        self.rows.iter().find(|r| r.family == family)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("family,instances");
        for k in ClueKind::ALL {
            let _ = write!(out, ",{}", k.label());
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{}", csv_field(&r.family), r.instances);
            for k in ClueKind::ALL {
                let _ = write!(out, ",{}", r.clues.get(&k).copied().unwrap_or(0));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<16} {:>9}", "family", "instances");
        for k in ClueKind::ALL {
            let _ = write!(out, " {:>15}", k.label());
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:<16} {:>9}", r.family, r.instances);
            for k in ClueKind::ALL {
                let n = r.clues.get(&k).copied().unwrap_or(0);
                let cell = if n == 0 { "-".to_string() } else { format!("{n}/{}", r.instances) };
                let _ = write!(out, " {cell:>15}");
            }
            out.push('\n');
        }
        out
    }
}

/// Label used for sample relations that have no accepted explanation yet.
pub const UNRESOLVED_FAMILY: &str = "unresolved";

/// Families of the sampled relations (from their finally chosen pattern)
/// with the clue kinds tagged on them. Families without instances are
/// omitted.
pub fn clue_table(
    project: &Project,
    catalog: &Catalog,
    sample: &BTreeSet<RelationKey>,
) -> Result<ClueTable, ClueError> {
    for key in sample {
        if project.relation_type(key).is_none() {
            return Err(ClueError::MissingRelation(key.clone()));
        }
    }
    for tag in &project.clue_tags {
        let key = tag.key();
        let text = project
            .text(&tag.text_id)
            .filter(|t| t.relation(&tag.relation_id).is_some())
            .ok_or_else(|| ClueError::TagOutsideCorpus(key.clone()))?;
        let len = text.char_len();
        if let Some(s) = tag.spans.iter().find(|s| s.start > s.end || s.end > len) {
            return Err(ClueError::SpanOutOfBounds {
                key,
                start: s.start,
                end: s.end,
            });
        }
    }
    if sample.is_empty() {
        return Ok(ClueTable::default());
    }

    let records = evaluate(project, catalog, &ReportOptions::default()).unwrap_or_default();
    let final_pattern: BTreeMap<&RelationKey, &str> = records
        .iter()
        .filter_map(|r| {
            let s = r.stage(Stage::Three);
            s.verdict
                .filter(|v| v.is_accepted())
                .and(s.chosen_pattern.as_deref())
                .map(|p| (&r.key, p))
        })
        .collect();
    let mut kinds: BTreeMap<RelationKey, BTreeSet<ClueKind>> = BTreeMap::new();
    for tag in &project.clue_tags {
        kinds.entry(tag.key()).or_default().insert(tag.clue_kind);
    }

    let mut order: Vec<String> = PatternFamily::ALL.iter().map(|f| f.label().to_string()).collect();
    order.push(UNRESOLVED_FAMILY.to_string());
    let mut rows: BTreeMap<String, ClueRow> = BTreeMap::new();
    for key in sample {
        let family = final_pattern
            .get(key)
            .and_then(|id| catalog.get(id))
            .map_or(UNRESOLVED_FAMILY, |p| p.family.label())
            .to_string();
        let row = rows.entry(family.clone()).or_insert_with(|| ClueRow {
            family,
            instances: 0,
            clues: BTreeMap::new(),
        });
        row.instances += 1;
        for k in kinds.get(key).into_iter().flatten() {
            *row.clues.entry(*k).or_default() += 1;
        }
    }
    Ok(ClueTable {
        rows: order.iter().filter_map(|f| rows.remove(f)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::EarAnnotation;
    use crate::corpus::{ArgRelation, CharSpan, Microtext, NodeRef, Segment};

    fn text(id: &str, types: &[RelationType]) -> Microtext {
        let segments = (0..=types.len())
            .map(|i| Segment {
                id: format!("a{i}"),
                text: "x".into(),
                span: CharSpan::new(2 * i, 2 * i + 1),
            })
            .collect::<Vec<_>>();
        let text = vec!["x"; segments.len()].join(" ");
        let relations = types
            .iter()
            .enumerate()
            .map(|(i, t)| ArgRelation {
                id: format!("c{i}"),
                source: format!("a{}", i + 1),
                linked_sources: Vec::new(),
                target: if *t == RelationType::Undercut {
                    NodeRef::Relation("c0".into())
                } else {
                    NodeRef::Segment("a0".into())
                },
                rel_type: *t,
            })
            .collect();
        Microtext {
            id: id.into(),
            topic_question: "q?".into(),
            text,
            segments,
            relations,
        }
    }

    #[test]
    fn relation_distribution_counts_per_split() {
        use RelationType::*;
        let mut p = Project::new(
            "p",
            vec![text("t1", &[Support, Rebuttal]), text("t2", &[Support, Undercut])],
            vec!["a".into(), "b".into()],
        );
        p.split.insert("t1".into(), Split::Dev);
        let d = relation_distribution(&p);
        assert_eq!(d.row(None, "support").unwrap().counts, [2, 1, 1]);
        assert_eq!(d.row(None, "undercut").unwrap().counts, [1, 0, 1]);
        assert_eq!(d.column_totals(), [4, 2, 2]);
        let empty = relation_distribution(&Project::new("e", vec![], vec![]));
        assert_eq!(empty.column_totals(), [0, 0, 0]);
        assert!(d.to_csv().starts_with("group,label,all,dev,test\n,support,2,1,1\n"));
    }

    fn ann(who: &str, rel: &str, pattern: &str) -> EarAnnotation {
        EarAnnotation {
            text_id: "t1".into(),
            relation_id: rel.into(),
            annotator: who.into(),
            stage: Stage::One,
            pattern_id: pattern.into(),
            fills: Vec::new(),
            note: None,
        }
    }

    #[test]
    fn single_annotation_fills_one_cell() {
        let cat = Catalog::shipped();
        let mut p = Project::new("p", vec![text("t1", &[RelationType::Support])], vec!["a".into(), "b".into()]);
        p.annotations.push(ann("a", "c0", "S01"));
        // b has not annotated yet, so nothing is comparable.
        let d = pattern_distribution(&p, &cat, Stage::One, true, SplitFilter::All).unwrap();
        assert_eq!(d.column_totals(), [0, 0]);
        p.annotations.push(ann("b", "c0", OTHER_ID));
        let d = pattern_distribution(&p, &cat, Stage::One, true, SplitFilter::All).unwrap();
        assert_eq!(d.row(Some("support"), "S01").unwrap().counts, [1, 0]);
        assert_eq!(d.row(Some("support"), OTHER_ID).unwrap().counts, [0, 1]);
        assert_eq!(d.column_totals(), [1, 1]);
        let nonzero = d.rows.iter().flat_map(|r| &r.counts).filter(|n| **n > 0).count();
        assert_eq!(nonzero, 2);
        assert_eq!(d.rows.len(), 12 + 12 + 10 + 3);
    }

    #[test]
    fn clue_table_hand_count() {
        use RelationType::*;
        let cat = Catalog::shipped();
        let mut p = Project::new(
            "p",
            vec![text("t1", &[Support, Support, Rebuttal, Support, Support])],
            vec!["a".into(), "b".into()],
        );
        for (rel, pat) in [("c0", "S01"), ("c1", "S03"), ("c2", "R09"), ("c3", "S12"), ("c4", "S01")] {
            p.annotations.push(ann("a", rel, pat));
            p.annotations.push(ann("b", rel, pat));
        }
        let tag = |rel: &str, kind| ClueTag {
            text_id: "t1".into(),
            relation_id: rel.into(),
            clue_kind: kind,
            spans: Vec::new(),
            note: None,
        };
        p.clue_tags = vec![
            tag("c0", ClueKind::ValueJudgment),
            tag("c0", ClueKind::Causality),
            tag("c0", ClueKind::Causality),
            tag("c1", ClueKind::ValueJudgment),
            tag("c3", ClueKind::ValueJudgment),
        ];
        let sample: BTreeSet<_> = ["c0", "c1", "c2", "c3"].iter().map(|r| RelationKey::new("t1", *r)).collect();
        let t = clue_table(&p, &cat, &sample).unwrap();
        let ac = t.row(PatternFamily::ArgFromConsequences.label()).unwrap();
        assert_eq!(ac.instances, 2);
        assert_eq!(ac.clues[&ClueKind::ValueJudgment], 2);
        assert_eq!(ac.clues[&ClueKind::Causality], 1);
        assert_eq!(t.row(PatternFamily::Analogy.label()).unwrap().instances, 1);
        assert!(t.row(PatternFamily::Analogy.label()).unwrap().clues.is_empty());
        assert_eq!(t.row(PatternFamily::Proposition.label()).unwrap().clues[&ClueKind::ValueJudgment], 1);
        assert_eq!(t.rows.len(), 3);

        assert_eq!(clue_table(&p, &cat, &BTreeSet::new()).unwrap(), ClueTable::default());
        let bad: BTreeSet<_> = [RelationKey::new("t1", "c99")].into_iter().collect();
        assert!(matches!(clue_table(&p, &cat, &bad), Err(ClueError::MissingRelation(_))));
    }
}

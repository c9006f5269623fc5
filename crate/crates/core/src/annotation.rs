//! Explanations of argumentative relations (EARs) and their validation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{render_explanation, Catalog, RenderError, SlotName};
use crate::corpus::{CharSpan, Microtext};
use crate::text::{char_len, normalize_ws};

/// Identifies one relation across the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationKey {
    pub text_id: String,
    pub relation_id: String,
}

impl RelationKey {
    pub fn new(text_id: impl Into<String>, relation_id: impl Into<String>) -> Self {
        RelationKey {
            text_id: text_id.into(),
            relation_id: relation_id.into(),
        }
    }
}

impl fmt::Display for RelationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.text_id, self.relation_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Stage {
    One,
    Two,
    Three,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::One, Stage::Two, Stage::Three];

    pub fn number(self) -> u8 {
        match self {
            Stage::One => 1,
            Stage::Two => 2,
            Stage::Three => 3,
        }
    }

    pub fn index(self) -> usize {
        self.number() as usize - 1
    }
}

impl TryFrom<u8> for Stage {
    type Error = String;

    fn try_from(n: u8) -> Result<Self, Self::Error> {
        match n {
            1 => Ok(Stage::One),
            2 => Ok(Stage::Two),
            3 => Ok(Stage::Three),
            other => Err(format!("stage must be 1, 2 or 3, not {other}")),
        }
    }
}

impl From<Stage> for u8 {
    fn from(s: Stage) -> u8 {
        s.number()
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// A marked phrase: document offsets plus the segment it lies in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub segment: String,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn chars(&self) -> CharSpan {
        CharSpan::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotFill {
    pub slot: SlotName,
    #[serde(default)]
    pub spans: Vec<Span>,
    pub text: String,
    pub implicit: bool,
}

impl SlotFill {
    pub fn implicit(slot: SlotName, text: impl Into<String>) -> Self {
        SlotFill {
            slot,
            spans: Vec::new(),
            text: text.into(),
            implicit: true,
        }
    }

    /// A fill anchored to one span of `mt`. Returns `None` when the span is
    /// out of bounds or crosses a segment boundary.
    pub fn from_span(slot: SlotName, mt: &Microtext, start: usize, end: usize) -> Option<Self> {
        let span = CharSpan::new(start, end);
        let segment = mt.segment_containing(span)?;
        Some(SlotFill {
            slot,
            spans: vec![Span {
                segment: segment.id.clone(),
                start,
                end,
            }],
            text: mt.slice(span)?.to_string(),
            implicit: false,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarAnnotation {
    pub text_id: String,
    pub relation_id: String,
    pub annotator: String,
    pub stage: Stage,
    pub pattern_id: String,
    #[serde(default)]
    pub fills: Vec<SlotFill>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EarAnnotation {
    pub fn key(&self) -> RelationKey {
        RelationKey::new(&self.text_id, &self.relation_id)
    }

    pub fn fill(&self, slot: SlotName) -> Option<&SlotFill> {
        self.fills.iter().find(|f| f.slot == slot)
    }

    pub fn render(&self, catalog: &Catalog) -> Result<String, RenderError> {
        let pattern = catalog
            .get(&self.pattern_id)
            .ok_or_else(|| RenderError::UnknownPattern(self.pattern_id.clone()))?;
        let fills: BTreeMap<SlotName, String> =
            self.fills.iter().map(|f| (f.slot, f.text.clone())).collect();
        render_explanation(pattern, &fills)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticCode {
    UnknownText,
    UnknownRelation,
    UnknownPattern,
    TypeMismatch,
    SlotMismatch,
    ImplicitFlag,
    EmptyImplicit,
    SpanOutOfBounds,
    SpanSegment,
    FillText,
    OutsideParticipants,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub message: String,
}

impl Diagnostic {
    fn error(code: DiagnosticCode, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
        }
    }

    fn warning(code: DiagnosticCode, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            code,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{level}: {}", self.message)
    }
}

/// Checks an annotation against its text and the catalog. Never fails; all
/// findings come back as diagnostics.
pub fn validate_annotation(a: &EarAnnotation, mt: &Microtext, catalog: &Catalog) -> Vec<Diagnostic> {
    use DiagnosticCode::*;
    let mut out = Vec::new();
    let key = a.key();
    if a.text_id != mt.id {
        out.push(Diagnostic::error(
            UnknownText,
            format!("{key}: annotation is for text {}, not {}", a.text_id, mt.id),
        ));
        return out;
    }
    let Some(relation) = mt.relation(&a.relation_id) else {
        out.push(Diagnostic::error(UnknownRelation, format!("{key}: no such relation")));
        return out;
    };
    let Some(pattern) = catalog.get(&a.pattern_id) else {
        out.push(Diagnostic::error(
            UnknownPattern,
            format!("{key}: unknown pattern {}", a.pattern_id),
        ));
        return out;
    };
    if let Some(rt) = pattern.relation {
        if rt != relation.rel_type {
            out.push(Diagnostic::error(
                TypeMismatch,
                format!(
                    "{key}: pattern {} explains {rt} relations, but the relation is a {}",
                    pattern.id, relation.rel_type
                ),
            ));
        }
    }

    let mut filled: Vec<SlotName> = a.fills.iter().map(|f| f.slot).collect();
    filled.sort();
    let mut declared: Vec<SlotName> = pattern.slot_names().collect();
    declared.sort();
    if filled != declared {
        out.push(Diagnostic::error(
            SlotMismatch,
            format!("{key}: pattern {} needs slots {declared:?}, got {filled:?}", pattern.id),
        ));
    }

    let participants = mt.participants(&relation.id);
    let doc_len = char_len(&mt.text);
    for fill in &a.fills {
        let slot = fill.slot;
        if fill.implicit != fill.spans.is_empty() {
            out.push(Diagnostic::error(
                ImplicitFlag,
                format!("{key}: slot {slot}: implicit must be set exactly when there are no spans"),
            ));
        }
        if fill.spans.is_empty() {
            if fill.text.trim().is_empty() {
                out.push(Diagnostic::error(
                    EmptyImplicit,
                    format!("{key}: slot {slot}: implicit fill has no text"),
                ));
            }
            continue;
        }
        let mut pieces = Vec::new();
        for span in &fill.spans {
            if span.start >= span.end || span.end > doc_len {
                out.push(Diagnostic::error(
                    SpanOutOfBounds,
                    format!("{key}: slot {slot}: span {}..{} outside the text", span.start, span.end),
                ));
                continue;
            }
            match mt.segment(&span.segment) {
                Some(seg) if seg.span.contains(&span.chars()) => {}
                _ => {
                    out.push(Diagnostic::error(
                        SpanSegment,
                        format!(
                            "{key}: slot {slot}: span {}..{} is not inside segment {}",
                            span.start, span.end, span.segment
                        ),
                    ));
                    continue;
                }
            }
            if let Some(t) = mt.slice(span.chars()) {
                pieces.push(t);
            }
            if !participants.contains(&span.segment) {
                out.push(Diagnostic::warning(
                    OutsideParticipants,
                    format!(
                        "{key}: slot {slot}: phrase taken from segment {}, which is not part of the relation",
                        span.segment
                    ),
                ));
            }
        }
        if pieces.len() == fill.spans.len() && normalize_ws(&pieces.join(" ")) != normalize_ws(&fill.text) {
            out.push(Diagnostic::warning(
                FillText,
                format!("{key}: slot {slot}: text differs from the marked phrases"),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_microtext, CorpusOptions};

    const FOUR: &str = r#"<arggraph id="m1" topic_id="shops">
  <edu id="e1">I as an employee find it practical to be able to shop on weekends.</edu>
  <edu id="e2">Sure, other people have to work on the weekend,</edu>
  <edu id="e3">but they can have days off during the week.</edu>
  <edu id="e4">Shops are nice.</edu>
  <adu id="a1" type="pro"/><adu id="a2" type="opp"/><adu id="a3" type="pro"/><adu id="a4" type="pro"/>
  <edge id="c1" src="e1" trg="a1" type="seg"/><edge id="c2" src="e2" trg="a2" type="seg"/>
  <edge id="c3" src="e3" trg="a3" type="seg"/><edge id="c4" src="e4" trg="a4" type="seg"/>
  <edge id="c5" src="a2" trg="a1" type="reb"/>
  <edge id="c6" src="a3" trg="c5" type="und"/>
  <edge id="c7" src="a4" trg="a1" type="sup"/>
</arggraph>"#;

    fn fixture() -> (Microtext, Catalog) {
        (
            parse_microtext(FOUR, &CorpusOptions::default()).unwrap(),
            Catalog::shipped(),
        )
    }

    fn find(mt: &Microtext, phrase: &str) -> (usize, usize) {
        let byte = mt.text.find(phrase).unwrap();
        let start = mt.text[..byte].chars().count();
        (start, start + phrase.chars().count())
    }

    fn r03(mt: &Microtext) -> EarAnnotation {
        let (xs, xe) = find(mt, "be able to shop on weekends");
        let (ys, ye) = find(mt, "other people have to work on the weekend");
        EarAnnotation {
            text_id: "m1".into(),
            relation_id: "c5".into(),
            annotator: "ann1".into(),
            stage: Stage::One,
            pattern_id: "R03".into(),
            fills: vec![
                SlotFill::from_span(SlotName::X, mt, xs, xe).unwrap(),
                SlotFill::from_span(SlotName::Y, mt, ys, ye).unwrap(),
            ],
            note: None,
        }
    }

    #[test]
    fn valid_r03_has_no_diagnostics() {
        let (mt, cat) = fixture();
        assert_eq!(validate_annotation(&r03(&mt), &mt, &cat), vec![]);
    }

    #[test]
    fn r03_on_support_is_type_mismatch() {
        let (mt, cat) = fixture();
        let mut a = r03(&mt);
        a.relation_id = "c7".into();
        let diags = validate_annotation(&a, &mt, &cat);
        assert!(diags
            .iter()
            .any(|d| d.code == DiagnosticCode::TypeMismatch && d.is_error()));
    }

    #[test]
    fn phrase_from_adjacent_segment_warns() {
        let (mt, cat) = fixture();
        let (xs, xe) = find(&mt, "be able to shop on weekends");
        let (ys, ye) = find(&mt, "Shops are nice");
        // S01 on the support a4 -> a1, with y taken from a2 instead.
        let (bs, be) = find(&mt, "other people");
        let mut a = EarAnnotation {
            text_id: "m1".into(),
            relation_id: "c7".into(),
            annotator: "ann2".into(),
            stage: Stage::One,
            pattern_id: "S01".into(),
            fills: vec![
                SlotFill::from_span(SlotName::X, &mt, xs, xe).unwrap(),
                SlotFill::from_span(SlotName::Y, &mt, ys, ye).unwrap(),
            ],
            note: None,
        };
        assert!(validate_annotation(&a, &mt, &cat).is_empty());
        a.fills[1] = SlotFill::from_span(SlotName::Y, &mt, bs, be).unwrap();
        let diags = validate_annotation(&a, &mt, &cat);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagnosticCode::OutsideParticipants);
        assert_eq!(diags[0].severity, Severity::Warning);
    }

    #[test]
    fn slot_and_implicit_errors() {
        let (mt, cat) = fixture();
        let mut a = r03(&mt);
        a.fills.pop();
        assert!(validate_annotation(&a, &mt, &cat)
            .iter()
            .any(|d| d.code == DiagnosticCode::SlotMismatch));
        a.fills.push(SlotFill::implicit(SlotName::Y, "  "));
        assert!(validate_annotation(&a, &mt, &cat)
            .iter()
            .any(|d| d.code == DiagnosticCode::EmptyImplicit));
        a.fills[1].text = "workers on weekends".into();
        assert!(validate_annotation(&a, &mt, &cat).is_empty());
    }

    #[test]
    fn undercut_spans_may_come_from_targeted_relation() {
        let (mt, cat) = fixture();
        let (ps, pe) = find(&mt, "other people have to work");
        let a = EarAnnotation {
            text_id: "m1".into(),
            relation_id: "c6".into(),
            annotator: "ann1".into(),
            stage: Stage::One,
            pattern_id: "U10".into(),
            fills: vec![SlotFill::from_span(SlotName::P, &mt, ps, pe).unwrap()],
            note: Some("working on weekends means no days off".into()),
        };
        assert!(validate_annotation(&a, &mt, &cat).is_empty());
    }

    #[test]
    fn span_bounds_checked() {
        let (mt, cat) = fixture();
        let mut a = r03(&mt);
        a.fills[0].spans[0].end = 10_000;
        assert!(validate_annotation(&a, &mt, &cat)
            .iter()
            .any(|d| d.code == DiagnosticCode::SpanOutOfBounds));
    }
}

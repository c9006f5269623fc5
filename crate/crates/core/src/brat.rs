//! Reader for brat standoff annotations of EARs.
//!
//! Conventions on top of the standoff line grammar:
//!
//! ```text
//! T1	x 47 74	be able to shop on weekends
//! T2	y 81 121	other people have to work on the weekend
//! R1	R03 x:T1 y:T2
//! A1	Relation R1 c6
//! #1	AnnotatorNotes R1	free text note
//! #2	Implicit R1	y=some unstated consequence
//! ```
//!
//! A relation (`R`) or event (`E`) line whose type is a pattern id carries the
//! pattern choice; its argument roles name the slots. `OTHER` may appear with
//! no arguments. The `Relation` attribute links it to the corpus relation.
//! Lines of other types are kept verbatim in [`BratDocument::extras`].

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{EarAnnotation, SlotFill, Span, Stage};
use crate::catalog::{SlotName, OTHER_ID};
use crate::corpus::{CharSpan, Microtext};
use crate::text::{char_len, char_slice};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BratError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: offsets {start}..{end} outside the document ({len} characters)")]
    OffsetOutOfRange {
        line: usize,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("line {line}: text {found:?} does not match the document ({expected:?})")]
    SurfaceMismatch {
        line: usize,
        expected: String,
        found: String,
    },
    #[error("line {line}: reference to unknown annotation {id}")]
    Orphan { line: usize, id: String },
    #[error("pattern annotation {0} has no Relation attribute")]
    MissingRelation(String),
    #[error("pattern annotation {ann}: span crosses segment boundaries at {start}..{end}")]
    CrossSegment { ann: String, start: usize, end: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentFill {
    pub slot: SlotName,
    pub spans: Vec<CharSpan>,
    pub text: String,
}

/// One pattern annotation read from a `.ann` file, not yet tied to an
/// annotator, stage, or segment ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarFragment {
    pub ann_id: String,
    pub relation_id: String,
    pub pattern_id: String,
    pub fills: Vec<FragmentFill>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BratDocument {
    pub fragments: Vec<EarFragment>,
    pub extras: Vec<String>,
}

struct TextBound {
    spans: Vec<CharSpan>,
    text: String,
}

struct PatternLine {
    id: String,
    line: usize,
    pattern: String,
    args: Vec<(String, String)>,
}

fn is_pattern_label(label: &str) -> bool {
    if label == OTHER_ID {
        return true;
    }
    let mut chars = label.chars();
    matches!(chars.next(), Some('S' | 'R' | 'U'))
        && label.len() == 3
        && chars.all(|c| c.is_ascii_digit())
}

fn parse_offsets(line: usize, field: &str) -> Result<Vec<CharSpan>, BratError> {
    let syntax = |message: String| BratError::Syntax { line, message };
    field
        .split(';')
        .map(|frag| {
            let mut it = frag.split_whitespace();
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(syntax(format!("bad offsets `{frag}`")));
            };
            let start = a.parse().map_err(|_| syntax(format!("bad offset `{a}`")))?;
            let end = b.parse().map_err(|_| syntax(format!("bad offset `{b}`")))?;
            if start > end {
                return Err(syntax(format!("start {start} after end {end}")));
            }
            Ok(CharSpan::new(start, end))
        })
        .collect()
}

pub fn parse_brat(ann_document: &str, doc_text: &str) -> Result<BratDocument, BratError> {
    let doc_len = char_len(doc_text);
    let mut text_bounds: HashMap<String, TextBound> = HashMap::new();
    let mut patterns: Vec<PatternLine> = Vec::new();
    let mut relation_of: HashMap<String, String> = HashMap::new();
    let mut notes: HashMap<String, Vec<String>> = HashMap::new();
    let mut implicit: HashMap<String, Vec<(SlotName, String)>> = HashMap::new();
    let mut pending_refs: Vec<(usize, String)> = Vec::new();
    let mut extras = Vec::new();

    for (idx, raw) in ann_document.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let syntax = |message: &str| BratError::Syntax {
            line,
            message: message.to_string(),
        };
        let mut fields = raw.splitn(3, '\t');
        let id = fields.next().unwrap_or_default();
        let body = fields.next().ok_or_else(|| syntax("missing tab-separated fields"))?;
        let tail = fields.next();
        match id.chars().next() {
            Some('T') => {
                let (_label, offsets) = body
                    .split_once(' ')
                    .ok_or_else(|| syntax("text-bound line needs a label and offsets"))?;
                let spans = parse_offsets(line, offsets)?;
                let surface = tail.ok_or_else(|| syntax("text-bound line needs its text"))?;
                let mut pieces = Vec::with_capacity(spans.len());
                for s in &spans {
                    let piece = char_slice(doc_text, s.start, s.end).ok_or(
                        BratError::OffsetOutOfRange {
                            line,
                            start: s.start,
                            end: s.end,
                            len: doc_len,
                        },
                    )?;
                    pieces.push(piece);
                }
                let expected = pieces.join(" ");
                if expected != surface {
                    return Err(BratError::SurfaceMismatch {
                        line,
                        expected,
                        found: surface.to_string(),
                    });
                }
                text_bounds.insert(
                    id.to_string(),
                    TextBound {
                        spans,
                        text: surface.to_string(),
                    },
                );
            }
            Some('R') | Some('E') => {
                let mut parts = body.split_whitespace();
                let head = parts.next().ok_or_else(|| syntax("missing type"))?;
                // Events carry their trigger as `Type:T<n>`.
                let label = head.split(':').next().unwrap_or(head);
                if !is_pattern_label(label) {
                    extras.push(raw.to_string());
                    continue;
                }
                let mut args = Vec::new();
                for arg in parts {
                    let (role, target) = arg
                        .split_once(':')
                        .ok_or_else(|| syntax("argument must be role:id"))?;
                    args.push((role.to_string(), target.to_string()));
                }
                patterns.push(PatternLine {
                    id: id.to_string(),
                    line,
                    pattern: label.to_string(),
                    args,
                });
            }
            Some('A') | Some('M') => {
                let mut parts = body.split_whitespace();
                let name = parts.next().ok_or_else(|| syntax("missing attribute name"))?;
                let target = parts.next().ok_or_else(|| syntax("missing attribute target"))?;
                if name != "Relation" {
                    extras.push(raw.to_string());
                    continue;
                }
                let value = parts.next().ok_or_else(|| syntax("Relation needs a value"))?;
                relation_of.insert(target.to_string(), value.to_string());
                pending_refs.push((line, target.to_string()));
            }
            Some('#') => {
                let mut parts = body.split_whitespace();
                let kind = parts.next().ok_or_else(|| syntax("missing note type"))?;
                let target = parts.next().ok_or_else(|| syntax("missing note target"))?;
                let content = tail.unwrap_or_default();
                match kind {
                    "AnnotatorNotes" => {
                        notes.entry(target.to_string()).or_default().push(content.to_string());
                    }
                    "Implicit" => {
                        let (slot, text) = content
                            .split_once('=')
                            .ok_or_else(|| syntax("implicit note must read slot=text"))?;
                        let slot = slot
                            .trim()
                            .parse::<SlotName>()
                            .map_err(|e| syntax(&e))?;
                        implicit
                            .entry(target.to_string())
                            .or_default()
                            .push((slot, text.trim().to_string()));
                    }
                    _ => {
                        extras.push(raw.to_string());
                        continue;
                    }
                }
                pending_refs.push((line, target.to_string()));
            }
            _ => extras.push(raw.to_string()),
        }
    }

    let known: std::collections::HashSet<&str> = patterns
        .iter()
        .map(|p| p.id.as_str())
        .chain(text_bounds.keys().map(String::as_str))
        .collect();
    for (line, target) in &pending_refs {
        if !known.contains(target.as_str()) {
            return Err(BratError::Orphan {
                line: *line,
                id: target.clone(),
            });
        }
    }

    let mut fragments = Vec::with_capacity(patterns.len());
    for p in patterns {
        let mut fills: BTreeMap<SlotName, FragmentFill> = BTreeMap::new();
        for (role, target) in &p.args {
            let slot = role.parse::<SlotName>().map_err(|e| BratError::Syntax {
                line: p.line,
                message: e,
            })?;
            let tb = text_bounds.get(target).ok_or_else(|| BratError::Orphan {
                line: p.line,
                id: target.clone(),
            })?;
            let fill = fills.entry(slot).or_insert_with(|| FragmentFill {
                slot,
                spans: Vec::new(),
                text: String::new(),
            });
            fill.spans.extend(tb.spans.iter().copied());
            if !fill.text.is_empty() {
                fill.text.push(' ');
            }
            fill.text.push_str(&tb.text);
        }
        for (slot, text) in implicit.remove(&p.id).unwrap_or_default() {
            fills.entry(slot).or_insert(FragmentFill {
                slot,
                spans: Vec::new(),
                text,
            });
        }
        let relation_id = relation_of
            .get(&p.id)
            .cloned()
            .ok_or_else(|| BratError::MissingRelation(p.id.clone()))?;
        let note = notes.remove(&p.id).map(|n| n.join("\n"));
        fragments.push(EarFragment {
            ann_id: p.id,
            relation_id,
            pattern_id: p.pattern,
            fills: fills.into_values().collect(),
            note,
        });
    }
    Ok(BratDocument { fragments, extras })
}

impl EarFragment {
    /// Attaches segment ids from `mt` and the annotator/stage context.
    pub fn into_annotation(
        self,
        mt: &Microtext,
        annotator: &str,
        stage: Stage,
    ) -> Result<EarAnnotation, BratError> {
        let mut fills = Vec::with_capacity(self.fills.len());
        for f in self.fills {
            let mut spans = Vec::with_capacity(f.spans.len());
            for s in &f.spans {
                let seg = mt.segment_containing(*s).ok_or(BratError::CrossSegment {
                    ann: self.ann_id.clone(),
                    start: s.start,
                    end: s.end,
                })?;
                spans.push(Span {
                    segment: seg.id.clone(),
                    start: s.start,
                    end: s.end,
                });
            }
            let implicit = spans.is_empty();
            fills.push(SlotFill {
                slot: f.slot,
                spans,
                text: f.text,
                implicit,
            });
        }
        Ok(EarAnnotation {
            text_id: mt.id.clone(),
            relation_id: self.relation_id,
            annotator: annotator.to_string(),
            stage,
            pattern_id: self.pattern_id,
            fills,
            note: self.note,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = "I as an employee find it practical to be able to shop on weekends. \
Sure, other people have to work on the weekend, but they can have days off during the week.";

    fn offsets(phrase: &str) -> (usize, usize) {
        let b = DOC.find(phrase).unwrap();
        let s = DOC[..b].chars().count();
        (s, s + phrase.chars().count())
    }

    fn fig1_ann() -> String {
        let (xs, xe) = offsets("be able to shop on weekends");
        let (ys, ye) = offsets("other people have to work on the weekend");
        format!(
            "T1\tx {xs} {xe}\tbe able to shop on weekends\n\
             T2\ty {ys} {ye}\tother people have to work on the weekend\n\
             R1\tR03 x:T1 y:T2\n\
             A1\tRelation R1 c4\n\
             #1\tAnnotatorNotes R1\tcheck weekend framing\n"
        )
    }

    #[test]
    fn empty_file_gives_nothing() {
        assert_eq!(parse_brat("", DOC).unwrap(), BratDocument::default());
    }

    #[test]
    fn fig1_fixture_gives_one_annotation_with_two_fills() {
        let doc = parse_brat(&fig1_ann(), DOC).unwrap();
        assert_eq!(doc.fragments.len(), 1);
        let f = &doc.fragments[0];
        assert_eq!(f.pattern_id, "R03");
        assert_eq!(f.relation_id, "c4");
        assert_eq!(f.fills.len(), 2);
        assert_eq!(f.fills[0].slot, SlotName::X);
        assert_eq!(f.fills[0].spans, vec![CharSpan::new(38, 65)]);
        assert_eq!(f.fills[1].text, "other people have to work on the weekend");
        assert_eq!(f.note.as_deref(), Some("check weekend framing"));
    }

    #[test]
    fn surface_mismatch_is_an_error() {
        let ann = fig1_ann().replace("\tbe able to shop on weekends", "\tbe able to shop on Sundays");
        assert!(matches!(
            parse_brat(&ann, DOC),
            Err(BratError::SurfaceMismatch { line: 1, .. })
        ));
    }

    #[test]
    fn out_of_range_and_orphans() {
        assert!(matches!(
            parse_brat("T1\tx 5 9999\tzzz\n", DOC),
            Err(BratError::OffsetOutOfRange { .. })
        ));
        let orphan = "R1\tOTHER\nA1\tRelation R7 c4\n";
        assert_eq!(
            parse_brat(orphan, DOC),
            Err(BratError::Orphan {
                line: 2,
                id: "R7".into()
            })
        );
        let missing_arg = "R1\tR03 x:T9\nA1\tRelation R1 c4\n";
        assert!(matches!(parse_brat(missing_arg, DOC), Err(BratError::Orphan { .. })));
        assert_eq!(
            parse_brat("R1\tOTHER\n", DOC),
            Err(BratError::MissingRelation("R1".into()))
        );
    }

    #[test]
    fn implicit_fills_and_extras() {
        let (xs, xe) = offsets("shop on weekends");
        let ann = format!(
            "T1\tx {xs} {xe}\tshop on weekends\n\
             T5\tClaim 0 1\tI\n\
             R1\tS01 x:T1\n\
             A1\tRelation R1 c2\n\
             #1\tImplicit R1\ty=employees get what they need\n\
             R2\tSameAs Arg1:T1 Arg2:T5\n\
             A2\tConfidence R1 high\n"
        );
        let doc = parse_brat(&ann, DOC).unwrap();
        let f = &doc.fragments[0];
        assert_eq!(f.fills.len(), 2);
        assert!(f.fills[1].spans.is_empty());
        assert_eq!(f.fills[1].text, "employees get what they need");
        assert_eq!(doc.extras.len(), 2);
    }

    #[test]
    fn discontinuous_spans_join_with_space() {
        let ann = "T1\tx 0 1;8 16\tI employee\n";
        assert!(parse_brat(ann, DOC).is_ok());
    }
}

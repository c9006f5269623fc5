//! Rhetorical pattern catalog.
//!
//! A pattern explains why one argumentative unit supports or attacks another.
//! Argument-from-consequences patterns carry four sign parameters; their
//! product decides which relation type the pattern can explain. The catalog
//! itself is data (`data/catalog.toml`); the sign algebra only checks it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const SHIPPED_CATALOG: &str = include_str!("../data/catalog.toml");

/// Id of the sentinel pattern for explanations outside the catalog.
pub const OTHER_ID: &str = "OTHER";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValuePolarity {
    Good,
    Bad,
}

impl ValuePolarity {
    pub fn sign(self) -> i8 {
        match self {
            ValuePolarity::Good => 1,
            ValuePolarity::Bad => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ValuePolarity::Good => ValuePolarity::Bad,
            ValuePolarity::Bad => ValuePolarity::Good,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalDirection {
    Promote,
    Suppress,
}

impl CausalDirection {
    pub fn sign(self) -> i8 {
        match self {
            CausalDirection::Promote => 1,
            CausalDirection::Suppress => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntecedentPolarity {
    Happens,
    NotHappens,
}

impl AntecedentPolarity {
    pub fn sign(self) -> i8 {
        match self {
            AntecedentPolarity::Happens => 1,
            AntecedentPolarity::NotHappens => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationType {
    Support,
    Rebuttal,
    Undercut,
}

impl RelationType {
    pub const ALL: [RelationType; 3] = [
        RelationType::Support,
        RelationType::Rebuttal,
        RelationType::Undercut,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::Support => "support",
            RelationType::Rebuttal => "rebuttal",
            RelationType::Undercut => "undercut",
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "support" => Ok(RelationType::Support),
            "rebuttal" => Ok(RelationType::Rebuttal),
            "undercut" => Ok(RelationType::Undercut),
            other => Err(format!("unknown relation type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatternFamily {
    #[serde(rename = "consequences")]
    ArgFromConsequences,
    #[serde(rename = "analogy")]
    Analogy,
    #[serde(rename = "presupposition")]
    Presupposition,
    #[serde(rename = "proposition")]
    Proposition,
    #[serde(rename = "quantifier")]
    Quantifier,
    #[serde(rename = "other")]
    Other,
}

impl PatternFamily {
    pub const ALL: [PatternFamily; 6] = [
        PatternFamily::ArgFromConsequences,
        PatternFamily::Analogy,
        PatternFamily::Presupposition,
        PatternFamily::Proposition,
        PatternFamily::Quantifier,
        PatternFamily::Other,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PatternFamily::ArgFromConsequences => "Argument from Consequences",
            PatternFamily::Analogy => "Argument from Analogy",
            PatternFamily::Presupposition => "Presupposition",
            PatternFamily::Proposition => "Proposition",
            PatternFamily::Quantifier => "Quantifier",
            PatternFamily::Other => "OTHER",
        }
    }

    /// Slot names every pattern of this family must declare.
    pub fn required_slots(self) -> &'static [SlotName] {
        match self {
            PatternFamily::ArgFromConsequences | PatternFamily::Analogy => {
                &[SlotName::X, SlotName::Y]
            }
            PatternFamily::Presupposition | PatternFamily::Proposition => &[SlotName::P],
            PatternFamily::Quantifier => &[SlotName::Q],
            PatternFamily::Other => &[],
        }
    }
}

impl fmt::Display for PatternFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Sign parameters of an argument-from-consequences pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AcParams {
    /// Value of x asserted by the supported or attacked side.
    pub claim: ValuePolarity,
    pub val_y: ValuePolarity,
    pub antecedent: AntecedentPolarity,
    pub causality: CausalDirection,
}

impl AcParams {
    /// Value of x implied by the consequence chain.
    pub fn implied_sign(&self) -> i8 {
        self.val_y.sign() * self.causality.sign() * self.antecedent.sign()
    }

    /// All 16 parameter combinations.
    pub fn all() -> impl Iterator<Item = AcParams> {
        use AntecedentPolarity::*;
        use CausalDirection::*;
        use ValuePolarity::*;
        [Good, Bad].into_iter().flat_map(|claim| {
            [Good, Bad].into_iter().flat_map(move |val_y| {
                [Happens, NotHappens].into_iter().flat_map(move |antecedent| {
                    [Promote, Suppress].into_iter().map(move |causality| AcParams {
                        claim,
                        val_y,
                        antecedent,
                        causality,
                    })
                })
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SlotName {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "p")]
    P,
    #[serde(rename = "q")]
    Q,
}

impl SlotName {
    pub fn as_str(self) -> &'static str {
        match self {
            SlotName::X => "x",
            SlotName::Y => "y",
            SlotName::P => "p",
            SlotName::Q => "q",
        }
    }
}

impl fmt::Display for SlotName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SlotName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" => Ok(SlotName::X),
            "y" => Ok(SlotName::Y),
            "p" => Ok(SlotName::P),
            "q" => Ok(SlotName::Q),
            other => Err(format!("unknown slot `{other}`")),
        }
    }
}

/// Which participant of a relation a slot fill is expected to come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorSide {
    Source,
    Target,
    Either,
    Relation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSpec {
    pub name: SlotName,
    pub role: String,
    pub side: AnchorSide,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhetoricalPattern {
    pub id: String,
    pub family: PatternFamily,
    /// Unset only for the OTHER sentinel.
    pub relation: Option<RelationType>,
    pub slots: Vec<SlotSpec>,
    pub ac: Option<AcParams>,
    pub template: String,
    pub algebra_exception: bool,
}

impl RhetoricalPattern {
    pub fn is_other(&self) -> bool {
        self.family == PatternFamily::Other
    }

    pub fn slot_names(&self) -> impl Iterator<Item = SlotName> + '_ {
        self.slots.iter().map(|s| s.name)
    }

    pub fn slot(&self, name: SlotName) -> Option<&SlotSpec> {
        self.slots.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog document does not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported catalog schema {0}")]
    Schema(u32),
    #[error("duplicate pattern id `{0}`")]
    DuplicateId(String),
    #[error("pattern `{0}` belongs to the consequences family but has no sign parameters")]
    MissingAcParams(String),
    #[error("pattern `{0}` has sign parameters but is not an argument-from-consequences pattern")]
    UnexpectedAcParams(String),
    #[error("pattern `{id}` declares unknown slot `{slot}`")]
    UnknownSlot { id: String, slot: String },
    #[error("pattern `{id}` declares slot `{slot}` twice")]
    DuplicateSlot { id: String, slot: SlotName },
    #[error("pattern `{id}` must declare slots {expected:?}")]
    SlotSet { id: String, expected: Vec<SlotName> },
    #[error("pattern `{0}` needs a relation type")]
    MissingRelation(String),
    #[error("OTHER must not declare a relation type")]
    OtherWithRelation,
    #[error("pattern `{id}` template: {message}")]
    Template { id: String, message: String },
}

#[derive(Deserialize)]
struct RawDocument {
    schema: Option<u32>,
    #[serde(default, rename = "pattern")]
    patterns: Vec<RawPattern>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPattern {
    id: String,
    family: PatternFamily,
    relation: Option<RelationType>,
    #[serde(default)]
    slots: Vec<RawSlot>,
    ac: Option<AcParams>,
    template: String,
    #[serde(default)]
    algebra_exception: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlot {
    name: String,
    #[serde(default)]
    role: String,
    side: AnchorSide,
}

/// A loaded, validated catalog. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Catalog {
    patterns: Vec<RhetoricalPattern>,
    by_id: HashMap<String, usize>,
    class_of: Vec<usize>,
}

impl Catalog {
    /// The catalog shipped with the crate.
    pub fn shipped() -> Catalog {
        Catalog::from_toml_str(SHIPPED_CATALOG).expect("shipped catalog is valid")
    }

    pub fn shipped_source() -> &'static str {
        SHIPPED_CATALOG
    }

    pub fn from_toml_str(source: &str) -> Result<Catalog, CatalogError> {
        let doc: RawDocument = toml::from_str(source)?;
        if let Some(schema) = doc.schema {
            if schema != 1 {
                return Err(CatalogError::Schema(schema));
            }
        }
        let patterns = doc
            .patterns
            .into_iter()
            .map(RhetoricalPattern::try_from)
            .collect::<Result<Vec<_>, _>>()?;
        Catalog::from_patterns(patterns)
    }

    pub fn from_patterns(patterns: Vec<RhetoricalPattern>) -> Result<Catalog, CatalogError> {
        let mut by_id = HashMap::with_capacity(patterns.len());
        for (i, p) in patterns.iter().enumerate() {
            if by_id.insert(p.id.clone(), i).is_some() {
                return Err(CatalogError::DuplicateId(p.id.clone()));
            }
        }
        let mut class_of: Vec<usize> = (0..patterns.len()).collect();
        for i in 0..patterns.len() {
            if let Some(j) = (0..i).find(|&j| semantically_equivalent(&patterns[i], &patterns[j])) {
                class_of[i] = class_of[j];
            }
        }
        Ok(Catalog {
            patterns,
            by_id,
            class_of,
        })
    }

    pub fn patterns(&self) -> &[RhetoricalPattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&RhetoricalPattern> {
        self.by_id.get(id).map(|&i| &self.patterns[i])
    }

    pub fn of_relation(&self, relation: RelationType) -> impl Iterator<Item = &RhetoricalPattern> {
        self.patterns
            .iter()
            .filter(move |p| p.relation == Some(relation))
    }

    /// Id of the first member (in catalog order) of the equivalence class
    /// containing `id`.
    pub fn class_label(&self, id: &str) -> Option<&str> {
        self.by_id
            .get(id)
            .map(|&i| self.patterns[self.class_of[i]].id.as_str())
    }
}

impl TryFrom<RawPattern> for RhetoricalPattern {
    type Error = CatalogError;

    fn try_from(raw: RawPattern) -> Result<Self, Self::Error> {
        let id = raw.id;
        let mut slots: Vec<SlotSpec> = Vec::with_capacity(raw.slots.len());
        for s in raw.slots {
            let name = s.name.parse::<SlotName>().map_err(|_| CatalogError::UnknownSlot {
                id: id.clone(),
                slot: s.name.clone(),
            })?;
            if slots.iter().any(|o| o.name == name) {
                return Err(CatalogError::DuplicateSlot {
                    id: id.clone(),
                    slot: name,
                });
            }
            slots.push(SlotSpec {
                name,
                role: s.role,
                side: s.side,
            });
        }

        match (raw.family, raw.ac.is_some()) {
            (PatternFamily::ArgFromConsequences, false) => {
                return Err(CatalogError::MissingAcParams(id))
            }
            (f, true) if f != PatternFamily::ArgFromConsequences => {
                return Err(CatalogError::UnexpectedAcParams(id))
            }
            _ => {}
        }
        match (raw.family, raw.relation) {
            (PatternFamily::Other, Some(_)) => return Err(CatalogError::OtherWithRelation),
            (PatternFamily::Other, None) => {}
            (_, None) => return Err(CatalogError::MissingRelation(id)),
            _ => {}
        }

        let mut declared: Vec<SlotName> = slots.iter().map(|s| s.name).collect();
        declared.sort();
        let expected = raw.family.required_slots();
        if declared != expected {
            return Err(CatalogError::SlotSet {
                id,
                expected: expected.to_vec(),
            });
        }

        let placeholders = template_placeholders(&raw.template).map_err(|message| {
            CatalogError::Template {
                id: id.clone(),
                message,
            }
        })?;
        for name in &placeholders {
            let known = name
                .parse::<SlotName>()
                .ok()
                .filter(|n| declared.contains(n));
            if known.is_none() {
                return Err(CatalogError::Template {
                    id,
                    message: format!("placeholder `{{{name}}}` is not a declared slot"),
                });
            }
        }
        for slot in &declared {
            if !placeholders.iter().any(|p| p == slot.as_str()) {
                return Err(CatalogError::Template {
                    id,
                    message: format!("slot `{slot}` never appears"),
                });
            }
        }

        Ok(RhetoricalPattern {
            id,
            family: raw.family,
            relation: raw.relation,
            slots,
            ac: raw.ac,
            template: raw.template,
            algebra_exception: raw.algebra_exception,
        })
    }
}

/// Whether an undercut-style pattern attacks a relation or a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Segment,
    Relation,
}

impl TargetKind {
    pub fn of(relation: RelationType) -> TargetKind {
        match relation {
            RelationType::Undercut => TargetKind::Relation,
            _ => TargetKind::Segment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("parameters agree with the relation's claim: not an attack on the link")]
    NotAnAttackOnLink,
}

/// Relation type implied by the sign parameters.
///
/// The consequence chain implies `sign(val_y) * sign(causality) *
/// sign(antecedent)` for x. On a segment target, agreement with the claim
/// is a support and disagreement a rebuttal; a relation target can only be
/// undercut.
pub fn derive_relation_type(
    target: TargetKind,
    ac: &AcParams,
) -> Result<RelationType, AlgebraError> {
    let agrees = ac.implied_sign() == ac.claim.sign();
    match (target, agrees) {
        (TargetKind::Segment, true) => Ok(RelationType::Support),
        (TargetKind::Segment, false) => Ok(RelationType::Rebuttal),
        (TargetKind::Relation, false) => Ok(RelationType::Undercut),
        (TargetKind::Relation, true) => Err(AlgebraError::NotAnAttackOnLink),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    /// Declared type disagrees with the algebra.
    Mismatch,
    /// Disagrees with the algebra, but the entry is flagged as a known exception.
    DocumentedException,
    /// Flagged as an exception although the algebra agrees.
    StaleException,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogDiagnostic {
    pub id: String,
    pub kind: DiagnosticKind,
    pub declared: Option<RelationType>,
    /// `None` when the algebra has no answer (a relation target that agrees).
    pub derived: Option<RelationType>,
}

impl fmt::Display for CatalogDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |r: Option<RelationType>| r.map_or("none".to_string(), |r| r.to_string());
        let what = match self.kind {
            DiagnosticKind::Mismatch => "mismatch",
            DiagnosticKind::DocumentedException => "documented exception",
            DiagnosticKind::StaleException => "stale exception flag",
        };
        write!(
            f,
            "{}: {what} (declared {}, sign algebra gives {})",
            self.id,
            show(self.declared),
            show(self.derived)
        )
    }
}

/// Checks every consequences pattern against the sign algebra.
pub fn validate_catalog(patterns: &[RhetoricalPattern]) -> Vec<CatalogDiagnostic> {
    let mut out = Vec::new();
    for p in patterns {
        let (Some(ac), Some(declared)) = (p.ac, p.relation) else {
            continue;
        };
        let derived = derive_relation_type(TargetKind::of(declared), &ac).ok();
        let consistent = derived == Some(declared);
        let kind = match (consistent, p.algebra_exception) {
            (true, false) => continue,
            (false, false) => DiagnosticKind::Mismatch,
            (false, true) => DiagnosticKind::DocumentedException,
            (true, true) => DiagnosticKind::StaleException,
        };
        out.push(CatalogDiagnostic {
            id: p.id.clone(),
            kind,
            declared: Some(declared),
            derived,
        });
    }
    out
}

/// Two patterns are interchangeable for agreement purposes when they are the
/// same pattern, or consequences patterns of one relation type that assign
/// the same values to x and y.
pub fn semantically_equivalent(a: &RhetoricalPattern, b: &RhetoricalPattern) -> bool {
    if a.id == b.id {
        return true;
    }
    match (&a.ac, &b.ac) {
        (Some(pa), Some(pb)) => {
            a.relation == b.relation && pa.claim == pb.claim && pa.val_y == pb.val_y
        }
        _ => false,
    }
}

/// Partition of the catalog's pattern ids induced by [`semantically_equivalent`].
pub fn equivalence_classes(catalog: &Catalog) -> Vec<Vec<String>> {
    let mut classes: Vec<Vec<String>> = Vec::new();
    let mut slot_of_rep: HashMap<usize, usize> = HashMap::new();
    for (i, p) in catalog.patterns.iter().enumerate() {
        let rep = catalog.class_of[i];
        let slot = *slot_of_rep.entry(rep).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[slot].push(p.id.clone());
    }
    classes
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
    #[error("pattern `{pattern}` needs a fill for slot `{slot}`")]
    MissingFill { pattern: String, slot: SlotName },
}

/// Substitutes slot fills into the pattern's sentence frame.
pub fn render_explanation(
    pattern: &RhetoricalPattern,
    fills: &BTreeMap<SlotName, String>,
) -> Result<String, RenderError> {
    for name in pattern.slot_names() {
        if !fills.contains_key(&name) {
            return Err(RenderError::MissingFill {
                pattern: pattern.id.clone(),
                slot: name,
            });
        }
    }
    let mut out = String::with_capacity(pattern.template.len() + 64);
    let mut rest = pattern.template.as_str();
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        // Templates are checked at load time, so every brace closes on a slot name.
        let close = rest[open..].find('}').map(|c| open + c).unwrap_or(rest.len() - 1);
        let name = &rest[open + 1..close];
        match name.parse::<SlotName>().ok().and_then(|n| fills.get(&n)) {
            Some(text) => out.push_str(text),
            None => out.push_str(&rest[open..=close]),
        }
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn template_placeholders(template: &str) -> Result<Vec<String>, String> {
    let mut names = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| "unclosed placeholder".to_string())?;
        let name = &after[..close];
        if name.contains('{') {
            return Err("nested placeholder".to_string());
        }
        names.push(name.to_string());
        rest = &after[close + 1..];
    }
    if rest.contains('}') {
        return Err("stray closing brace".to_string());
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fills(pairs: &[(SlotName, &str)]) -> BTreeMap<SlotName, String> {
        pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
    }

    #[test]
    fn shipped_catalog_counts() {
        let catalog = Catalog::shipped();
        assert_eq!(catalog.len(), 35);
        let counts: Vec<usize> = RelationType::ALL
            .iter()
            .map(|&r| catalog.of_relation(r).count())
            .collect();
        assert_eq!(counts, vec![12, 12, 10]);
        let other = catalog.get(OTHER_ID).unwrap();
        assert!(other.relation.is_none() && other.slots.is_empty());
    }

    #[test]
    fn empty_document_is_empty_catalog() {
        assert!(Catalog::from_toml_str("").unwrap().is_empty());
    }

    #[test]
    fn duplicate_id_rejected() {
        let one = r#"
[[pattern]]
id = "S01"
family = "proposition"
relation = "support"
slots = [{ name = "p", side = "target" }]
template = "{p}"
"#;
        let doc = format!("{one}{one}");
        assert!(matches!(
            Catalog::from_toml_str(&doc),
            Err(CatalogError::DuplicateId(id)) if id == "S01"
        ));
    }

    #[test]
    fn unknown_slot_and_missing_ac_rejected() {
        let bad_slot = r#"
[[pattern]]
id = "S12"
family = "proposition"
relation = "support"
slots = [{ name = "z", side = "target" }]
template = "{z}"
"#;
        assert!(matches!(
            Catalog::from_toml_str(bad_slot),
            Err(CatalogError::UnknownSlot { slot, .. }) if slot == "z"
        ));
        let no_ac = r#"
[[pattern]]
id = "S01"
family = "consequences"
relation = "support"
slots = [{ name = "x", side = "either" }, { name = "y", side = "source" }]
template = "{x} {y}"
"#;
        assert!(matches!(
            Catalog::from_toml_str(no_ac),
            Err(CatalogError::MissingAcParams(_))
        ));
    }

    #[test]
    fn algebra_examples() {
        use AntecedentPolarity::*;
        use CausalDirection::*;
        use ValuePolarity::*;
        let p = |claim, val_y, antecedent, causality| AcParams {
            claim,
            val_y,
            antecedent,
            causality,
        };
        assert_eq!(
            derive_relation_type(TargetKind::Segment, &p(Good, Good, Happens, Promote)),
            Ok(RelationType::Support)
        );
        assert_eq!(
            derive_relation_type(TargetKind::Segment, &p(Good, Bad, Happens, Promote)),
            Ok(RelationType::Rebuttal)
        );
        assert_eq!(
            derive_relation_type(TargetKind::Relation, &p(Good, Good, Happens, Suppress)),
            Ok(RelationType::Undercut)
        );
        assert_eq!(
            derive_relation_type(TargetKind::Relation, &p(Good, Good, Happens, Promote)),
            Err(AlgebraError::NotAnAttackOnLink)
        );
    }

    #[test]
    fn shipped_catalog_only_reports_flagged_entries() {
        let catalog = Catalog::shipped();
        let diags = validate_catalog(catalog.patterns());
        assert!(!diags.is_empty());
        for d in &diags {
            assert_eq!(d.kind, DiagnosticKind::DocumentedException, "{d}");
            assert!(catalog.get(&d.id).unwrap().algebra_exception);
        }
        let flagged = catalog.patterns().iter().filter(|p| p.algebra_exception).count();
        assert_eq!(flagged, diags.len());
    }

    #[test]
    fn forced_contradiction_is_one_mismatch() {
        let catalog = Catalog::shipped();
        let s01 = catalog.get("S01").unwrap().clone();
        assert!(validate_catalog(std::slice::from_ref(&s01)).is_empty());
        let mut forced = s01;
        forced.relation = Some(RelationType::Rebuttal);
        let diags = validate_catalog(&[forced]);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::Mismatch);
        assert_eq!(diags[0].derived, Some(RelationType::Support));
    }

    #[test]
    fn equivalence_examples() {
        let c = Catalog::shipped();
        let get = |id| c.get(id).unwrap();
        assert!(semantically_equivalent(get("S01"), get("S02")));
        assert!(semantically_equivalent(get("S01"), get("S01")));
        assert!(!semantically_equivalent(get("R01"), get("R03")));
        assert!(!semantically_equivalent(get("S01"), get("R01")));
        assert!(!semantically_equivalent(get("S09"), get("S10")));
        assert_eq!(c.class_label("S02"), Some("S01"));
        assert_eq!(c.class_label(OTHER_ID), Some(OTHER_ID));
    }

    #[test]
    fn classes_of_single_pattern_catalog() {
        let c = Catalog::shipped();
        let single = Catalog::from_patterns(vec![c.get("U09").unwrap().clone()]).unwrap();
        assert_eq!(equivalence_classes(&single), vec![vec!["U09".to_string()]]);
    }

    #[test]
    fn render_r03_with_shopping_example() {
        let c = Catalog::shipped();
        let text = render_explanation(
            c.get("R03").unwrap(),
            &fills(&[
                (SlotName::X, "be able to shop on weekends"),
                (SlotName::Y, "other people have to work on the weekend"),
            ]),
        )
        .unwrap();
        assert_eq!(
            text,
            "S1 states that be able to shop on weekends is good, but S2 states that be able \
             to shop on weekends is bad because other people have to work on the weekend is \
             bad and when be able to shop on weekends happens, other people have to work on \
             the weekend will be promoted."
        );
    }

    #[test]
    fn render_other_and_quantifier() {
        let c = Catalog::shipped();
        let other = render_explanation(c.get(OTHER_ID).unwrap(), &BTreeMap::new()).unwrap();
        assert_eq!(other, "No predefined rhetorical pattern explains this relation.");
        let q = render_explanation(
            c.get("U09").unwrap(),
            &fills(&[(SlotName::Q, "all intelligent services")]),
        )
        .unwrap();
        assert!(q.contains("assumes the quantifier all intelligent services"));
        assert!(q.contains("disagrees"));
    }

    #[test]
    fn render_missing_fill() {
        let c = Catalog::shipped();
        let err = render_explanation(c.get("S01").unwrap(), &fills(&[(SlotName::X, "a")]));
        assert_eq!(
            err,
            Err(RenderError::MissingFill {
                pattern: "S01".into(),
                slot: SlotName::Y
            })
        );
    }

    #[test]
    fn fill_text_with_braces_is_not_reexpanded() {
        let c = Catalog::shipped();
        let out = render_explanation(
            c.get("S12").unwrap(),
            &fills(&[(SlotName::P, "{p} stays literal")]),
        )
        .unwrap();
        assert!(out.contains("{p} stays literal"));
    }
}

//! Toolkit for explaining argumentative relations with rhetorical
//! patterns: the pattern catalog, corpus and annotation parsing, the
//! three-stage agreement protocol and descriptive statistics.

pub mod agreement;
pub mod annotation;
pub mod brat;
pub mod catalog;
pub mod corpus;
pub mod project;
pub mod reporting;
pub mod text;

pub use agreement::{
    agreement_report, cohen_kappa, compare_stage1, coverage, evaluate, AgreementReport,
    AgreementVerdict, Chosen, CrossCheck, Decision, KappaMode, ReportOptions, Resolution, Response,
};
pub use annotation::{validate_annotation, EarAnnotation, RelationKey, SlotFill, Span, Stage};
pub use catalog::{
    derive_relation_type, render_explanation, semantically_equivalent, validate_catalog, Catalog,
    RelationType, RhetoricalPattern, SlotName, OTHER_ID,
};
pub use corpus::{load_corpus_dir, parse_microtext, CorpusOptions, Microtext};
pub use project::{load_project, save_project, Project, Split, SplitFilter};
pub use reporting::{clue_table, pattern_distribution, relation_distribution, ClueKind, ClueTag, DistributionTable};

//! Three-stage agreement protocol.
//!
//! Stage 1 compares the two annotators' independent annotations by rule.
//! Stage 2 asks each annotator whether they accept the other's annotation
//! for every disagreement. Stage 3 records the outcome of a joint
//! discussion for what is left. Kappa is computed over pattern equivalence
//! classes; coverage is the share of accepted explanations that are not
//! OTHER.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{EarAnnotation, RelationKey, SlotFill, Stage};
use crate::catalog::{semantically_equivalent, Catalog, RelationType, OTHER_ID};
use crate::project::{Project, SplitFilter};
use crate::text::tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementVerdict {
    Agreed,
    SemiAgreed,
    Disagreed,
    Unresolved,
}

impl AgreementVerdict {
    pub fn is_accepted(self) -> bool {
        matches!(self, AgreementVerdict::Agreed | AgreementVerdict::SemiAgreed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Yes,
    No,
    Unsure,
}

/// An annotator's Stage-2 answer to "do you accept the other annotation?".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub text_id: String,
    pub relation_id: String,
    pub annotator: String,
    pub response: Response,
}

impl CrossCheck {
    pub fn key(&self) -> RelationKey {
        RelationKey::new(&self.text_id, &self.relation_id)
    }
}

/// Outcome of a Stage-3 discussion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    Accept { annotator: String },
    BothAcceptable,
    Reject,
}

/// Which annotation stands for the relation once it is accepted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Chosen {
    Single { annotator: String },
    /// Both annotations remain acceptable; `picked` was drawn at random.
    Pair { annotators: [String; 2], picked: String },
}

impl Chosen {
    pub fn picked(&self) -> &str {
        match self {
            Chosen::Single { annotator } => annotator,
            Chosen::Pair { picked, .. } => picked,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub text_id: String,
    pub relation_id: String,
    pub stage: Stage,
    pub outcome: AgreementVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen: Option<Chosen>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
}

impl Resolution {
    pub fn key(&self) -> RelationKey {
        RelationKey::new(&self.text_id, &self.relation_id)
    }
}

/// How implicit (span-less) fills are compared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImplicitMatch {
    /// At least one shared lowercased token.
    #[default]
    TokenOverlap,
    /// Equal token sequences.
    ExactTokens,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapConfig {
    pub implicit: ImplicitMatch,
}

pub fn spans_overlap(a: &SlotFill, b: &SlotFill) -> bool {
    spans_overlap_with(a, b, &OverlapConfig::default())
}

/// Two fills overlap when some span of each lies on the same segment and
/// shares a character. When either side is implicit, their texts are
/// compared token-wise instead.
pub fn spans_overlap_with(a: &SlotFill, b: &SlotFill, config: &OverlapConfig) -> bool {
    if !a.spans.is_empty() && !b.spans.is_empty() {
        return a.spans.iter().any(|x| {
            b.spans
                .iter()
                .any(|y| x.segment == y.segment && x.chars().intersects(&y.chars()))
        });
    }
    let ta = tokens(&a.text);
    let tb = tokens(&b.text);
    match config.implicit {
        ImplicitMatch::TokenOverlap => {
            let set: BTreeSet<&String> = ta.iter().collect();
            tb.iter().any(|t| set.contains(t))
        }
        ImplicitMatch::ExactTokens => !ta.is_empty() && ta == tb,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("annotations are for different relations ({0} vs {1})")]
    RelationMismatch(RelationKey, RelationKey),
    #[error("both annotations are by {0}")]
    SameAnnotator(String),
    #[error("unknown pattern {0}")]
    UnknownPattern(String),
}

pub fn compare_stage1(
    a: &EarAnnotation,
    b: &EarAnnotation,
    catalog: &Catalog,
) -> Result<AgreementVerdict, CompareError> {
    compare_stage1_with(a, b, catalog, &OverlapConfig::default())
}

/// Rule-based Stage-1 comparison: equivalent patterns and overlapping fills
/// for every slot both annotations fill.
pub fn compare_stage1_with(
    a: &EarAnnotation,
    b: &EarAnnotation,
    catalog: &Catalog,
    config: &OverlapConfig,
) -> Result<AgreementVerdict, CompareError> {
    if a.key() != b.key() {
        return Err(CompareError::RelationMismatch(a.key(), b.key()));
    }
    if a.annotator == b.annotator {
        return Err(CompareError::SameAnnotator(a.annotator.clone()));
    }
    let lookup = |id: &str| {
        catalog
            .get(id)
            .ok_or_else(|| CompareError::UnknownPattern(id.to_string()))
    };
    let pa = lookup(&a.pattern_id)?;
    let pb = lookup(&b.pattern_id)?;
    if !semantically_equivalent(pa, pb) {
        return Ok(AgreementVerdict::Disagreed);
    }
    let all_overlap = a.fills.iter().all(|fa| match b.fill(fa.slot) {
        Some(fb) => spans_overlap_with(fa, fb, config),
        None => true,
    });
    Ok(if all_overlap {
        AgreementVerdict::Agreed
    } else {
        AgreementVerdict::Disagreed
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("{key}: no Stage-2 response from {annotator}")]
    MissingResponse { key: RelationKey, annotator: String },
    #[error("{key}: {annotator} responded more than once")]
    DuplicateResponse { key: RelationKey, annotator: String },
    #[error("{0}: no discussion outcome recorded")]
    MissingOutcome(RelationKey),
    #[error("{key}: {annotator} is not one of the compared annotators")]
    UnknownAnnotator { key: RelationKey, annotator: String },
    #[error("{0}: Stage-1 verdict must be agreed or disagreed")]
    BadStage1Verdict(RelationKey),
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Per-relation seed derived from the project seed, so each random choice
/// replays on its own.
pub fn relation_seed(base_seed: u64, key: &RelationKey) -> u64 {
    base_seed ^ fnv1a(key.to_string().as_bytes())
}

/// Draws one of the two annotators uniformly at random.
pub fn pick_pair(annotators: &[String; 2], seed: u64) -> Chosen {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = (rng.next_u32() & 1) as usize;
    Chosen::Pair {
        annotators: annotators.clone(),
        picked: annotators[idx].clone(),
    }
}

fn pair_resolution(key: &RelationKey, stage: Stage, outcome: AgreementVerdict, annotators: &[String; 2], base_seed: u64) -> Resolution {
    let seed = relation_seed(base_seed, key);
    Resolution {
        text_id: key.text_id.clone(),
        relation_id: key.relation_id.clone(),
        stage,
        outcome,
        decision: None,
        chosen: Some(pick_pair(annotators, seed)),
        rng_seed: Some(seed),
    }
}

fn plain_resolution(key: &RelationKey, stage: Stage, outcome: AgreementVerdict, chosen: Option<Chosen>) -> Resolution {
    Resolution {
        text_id: key.text_id.clone(),
        relation_id: key.relation_id.clone(),
        stage,
        outcome,
        decision: None,
        chosen,
        rng_seed: None,
    }
}

/// Stage-2 outcome for one relation given both annotators' responses.
pub fn stage2_verdict(first: Response, second: Response) -> AgreementVerdict {
    use Response::*;
    match (first, second) {
        (Yes, _) | (_, Yes) => AgreementVerdict::SemiAgreed,
        (No, No) => AgreementVerdict::Disagreed,
        _ => AgreementVerdict::Unresolved,
    }
}

fn resolve_one_stage2(
    key: &RelationKey,
    first: Response,
    second: Response,
    annotators: &[String; 2],
    base_seed: u64,
) -> Resolution {
    let verdict = stage2_verdict(first, second);
    match (verdict, first, second) {
        (AgreementVerdict::SemiAgreed, Response::Yes, Response::Yes) => {
            pair_resolution(key, Stage::Two, verdict, annotators, base_seed)
        }
        (AgreementVerdict::SemiAgreed, Response::Yes, _) => {
            // The first annotator accepted the second one's annotation.
            let chosen = Chosen::Single {
                annotator: annotators[1].clone(),
            };
            plain_resolution(key, Stage::Two, verdict, Some(chosen))
        }
        (AgreementVerdict::SemiAgreed, _, _) => {
            let chosen = Chosen::Single {
                annotator: annotators[0].clone(),
            };
            plain_resolution(key, Stage::Two, verdict, Some(chosen))
        }
        _ => plain_resolution(key, Stage::Two, verdict, None),
    }
}

fn responses_for<'a>(
    key: &RelationKey,
    responses: &'a [CrossCheck],
    annotator: &str,
) -> Result<Option<Response>, ResolveError> {
    let mut found: Option<&'a CrossCheck> = None;
    for r in responses.iter().filter(|r| r.annotator == annotator && r.key() == *key) {
        if found.is_some() {
            return Err(ResolveError::DuplicateResponse {
                key: key.clone(),
                annotator: annotator.to_string(),
            });
        }
        found = Some(r);
    }
    Ok(found.map(|r| r.response))
}

/// Applies Stage-2 cross-check responses to Stage-1 verdicts.
pub fn resolve_stage2(
    verdicts: &BTreeMap<RelationKey, AgreementVerdict>,
    responses: &[CrossCheck],
    annotators: &[String; 2],
    base_seed: u64,
) -> Result<BTreeMap<RelationKey, Resolution>, ResolveError> {
    let mut out = BTreeMap::new();
    for (key, verdict) in verdicts {
        let res = match verdict {
            AgreementVerdict::Agreed => {
                pair_resolution(key, Stage::Two, AgreementVerdict::Agreed, annotators, base_seed)
            }
            AgreementVerdict::Disagreed => {
                let mut got = [Response::No; 2];
                for (slot, who) in got.iter_mut().zip(annotators) {
                    *slot = responses_for(key, responses, who)?.ok_or_else(|| {
                        ResolveError::MissingResponse {
                            key: key.clone(),
                            annotator: who.clone(),
                        }
                    })?;
                }
                resolve_one_stage2(key, got[0], got[1], annotators, base_seed)
            }
            _ => return Err(ResolveError::BadStage1Verdict(key.clone())),
        };
        out.insert(key.clone(), res);
    }
    Ok(out)
}

/// Turns one discussion outcome into a Stage-3 resolution.
pub fn resolve_discussion(
    key: &RelationKey,
    decision: &Decision,
    annotators: &[String; 2],
    base_seed: u64,
) -> Result<Resolution, ResolveError> {
    let mut res = match decision {
        Decision::Accept { annotator } => {
            if !annotators.contains(annotator) {
                return Err(ResolveError::UnknownAnnotator {
                    key: key.clone(),
                    annotator: annotator.clone(),
                });
            }
            let chosen = Chosen::Single {
                annotator: annotator.clone(),
            };
            plain_resolution(key, Stage::Three, AgreementVerdict::SemiAgreed, Some(chosen))
        }
        Decision::BothAcceptable => pair_resolution(
            key,
            Stage::Three,
            AgreementVerdict::SemiAgreed,
            annotators,
            base_seed,
        ),
        Decision::Reject => plain_resolution(key, Stage::Three, AgreementVerdict::Disagreed, None),
    };
    res.decision = Some(decision.clone());
    Ok(res)
}

/// Resolves every relation carried into Stage 3.
pub fn resolve_stage3(
    carried: &[RelationKey],
    outcomes: &BTreeMap<RelationKey, Decision>,
    annotators: &[String; 2],
    base_seed: u64,
) -> Result<Vec<Resolution>, ResolveError> {
    carried
        .iter()
        .map(|key| {
            let decision = outcomes
                .get(key)
                .ok_or_else(|| ResolveError::MissingOutcome(key.clone()))?;
            resolve_discussion(key, decision, annotators, base_seed)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KappaError {
    #[error("kappa needs at least one label pair")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix<L> {
    pub labels: Vec<L>,
    /// `counts[i][j]`: first annotator said `labels[i]`, second said `labels[j]`.
    pub counts: Vec<Vec<u64>>,
}

impl<L: Ord + Clone> ConfusionMatrix<L> {
    pub fn from_pairs(pairs: &[(L, L)]) -> Self {
        let labels: Vec<L> = pairs
            .iter()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: BTreeMap<&L, usize> = labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
        let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
        for (a, b) in pairs {
            counts[index[a]][index[b]] += 1;
        }
        ConfusionMatrix { labels, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn kappa(&self) -> Result<f64, KappaError> {
        let n = self.total();
        if n == 0 {
            return Err(KappaError::Empty);
        }
        let n = n as f64;
        let k = self.labels.len();
        let observed = (0..k).map(|i| self.counts[i][i]).sum::<u64>() as f64 / n;
        let expected: f64 = (0..k)
            .map(|i| {
                let row: u64 = self.counts[i].iter().sum();
                let col: u64 = self.counts.iter().map(|r| r[i]).sum();
                (row as f64 / n) * (col as f64 / n)
            })
            .sum();
        if (1.0 - expected).abs() < 1e-12 {
            // Both annotators used one and the same label throughout.
            return Ok(if (observed - 1.0).abs() < 1e-12 { 1.0 } else { 0.0 });
        }
        Ok((observed - expected) / (1.0 - expected))
    }
}

pub fn cohen_kappa<L: Ord + Clone>(pairs: &[(L, L)]) -> Result<f64, KappaError> {
    ConfusionMatrix::from_pairs(pairs).kappa()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub numerator: usize,
    pub denominator: usize,
    /// `None` when there is nothing to cover.
    pub ratio: Option<f64>,
}

impl Coverage {
    pub fn new(numerator: usize, denominator: usize) -> Self {
        Coverage {
            numerator,
            denominator,
            ratio: (denominator > 0).then(|| numerator as f64 / denominator as f64),
        }
    }
}

impl fmt::Display for Coverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ratio {
            Some(r) => write!(f, "{:.1}% ({}/{})", r * 100.0, self.numerator, self.denominator),
            None => write!(f, "undefined (0/0)"),
        }
    }
}

/// Share of chosen patterns that are not OTHER.
pub fn coverage<'a>(chosen_patterns: impl IntoIterator<Item = &'a str>) -> Coverage {
    let (mut num, mut den) = (0, 0);
    for p in chosen_patterns {
        den += 1;
        if p != OTHER_ID {
            num += 1;
        }
    }
    Coverage::new(num, den)
}

/// Whether Stage-2/3 kappa uses labels updated by resolutions, or the
/// original Stage-1 labels restricted to accepted relations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaMode {
    #[default]
    Resolved,
    Original,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReportOptions {
    pub split: SplitFilter,
    pub kappa_mode: KappaMode,
    pub overlap: OverlapConfig,
}

/// A relation's state after one stage. `verdict == None` means the stage's
/// inputs are not all in yet.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageState {
    pub verdict: Option<AgreementVerdict>,
    /// Annotator whose annotation stands for the relation, once accepted.
    pub chosen: Option<String>,
    pub chosen_pattern: Option<String>,
    /// Effective pattern ids of both annotators after this stage.
    pub patterns: Option<[String; 2]>,
}

/// The cross-check and adjudication trail of one relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub key: RelationKey,
    pub rel_type: RelationType,
    pub stages: [StageState; 3],
}

impl StageRecord {
    pub fn stage(&self, stage: Stage) -> &StageState {
        &self.stages[stage.index()]
    }
}

#[derive(Debug, Error)]
pub enum AgreementError {
    #[error("agreement needs two annotators, project has {0}")]
    Annotators(usize),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
}

fn annotator_pair(project: &Project) -> Result<[String; 2], AgreementError> {
    match project.annotators.as_slice() {
        [a, b, ..] => Ok([a.clone(), b.clone()]),
        other => Err(AgreementError::Annotators(other.len())),
    }
}

/// Runs the three stages over every relation in the split.
pub fn evaluate(
    project: &Project,
    catalog: &Catalog,
    options: &ReportOptions,
) -> Result<Vec<StageRecord>, AgreementError> {
    let pair = annotator_pair(project)?;
    let mut stage1: HashMap<(&RelationKey, &str), &EarAnnotation> = HashMap::new();
    let keys: Vec<(RelationKey, RelationType)> = project.relations(options.split).collect();
    let wanted: BTreeSet<&RelationKey> = keys.iter().map(|(k, _)| k).collect();
    let owned_keys: Vec<RelationKey> = project.annotations.iter().map(|a| a.key()).collect();
    for (a, key) in project.annotations.iter().zip(&owned_keys) {
        if a.stage == Stage::One && wanted.contains(key) {
            stage1.insert((key, a.annotator.as_str()), a);
        }
    }
    let stored: HashMap<RelationKey, &Resolution> = project
        .resolutions
        .iter()
        .filter(|r| r.stage == Stage::Three)
        .map(|r| (r.key(), r))
        .collect();

    let mut records = Vec::with_capacity(keys.len());
    for (key, rel_type) in &keys {
        let first = stage1.get(&(key, pair[0].as_str()));
        let second = stage1.get(&(key, pair[1].as_str()));
        let mut stages: [StageState; 3] = Default::default();
        let (Some(a), Some(b)) = (first, second) else {
            records.push(StageRecord {
                key: key.clone(),
                rel_type: *rel_type,
                stages,
            });
            continue;
        };
        let pattern_of = |who: &str| -> String {
            if who == pair[0] {
                a.pattern_id.clone()
            } else {
                b.pattern_id.clone()
            }
        };
        let original = [a.pattern_id.clone(), b.pattern_id.clone()];

        // Stage 1
        let v1 = compare_stage1_with(a, b, catalog, &options.overlap)?;
        let s1_chosen = (v1 == AgreementVerdict::Agreed).then(|| {
            pick_pair(&pair, relation_seed(project.rng_seed, key))
                .picked()
                .to_string()
        });
        stages[0] = StageState {
            verdict: Some(v1),
            chosen_pattern: s1_chosen.as_deref().map(pattern_of),
            chosen: s1_chosen,
            patterns: Some(original.clone()),
        };

        // Stage 2
        stages[1] = match v1 {
            AgreementVerdict::Agreed => stages[0].clone(),
            _ => {
                let r0 = responses_for(key, &project.cross_checks, &pair[0])?;
                let r1 = responses_for(key, &project.cross_checks, &pair[1])?;
                match (r0, r1) {
                    (Some(r0), Some(r1)) => {
                        let res = resolve_one_stage2(key, r0, r1, &pair, project.rng_seed);
                        accepted_state(&res, &original, &pattern_of)
                    }
                    _ => StageState {
                        patterns: Some(original.clone()),
                        ..Default::default()
                    },
                }
            }
        };

        // Stage 3
        stages[2] = match stages[1].verdict {
            None => stages[1].clone(),
            Some(v) if v.is_accepted() => stages[1].clone(),
            Some(_) => match stored.get(key) {
                Some(res) => accepted_state(res, &original, &pattern_of),
                None => StageState {
                    patterns: Some(original.clone()),
                    ..Default::default()
                },
            },
        };

        records.push(StageRecord {
            key: key.clone(),
            rel_type: *rel_type,
            stages,
        });
    }
    Ok(records)
}

fn accepted_state(res: &Resolution, original: &[String; 2], pattern_of: &dyn Fn(&str) -> String) -> StageState {
    let chosen = res
        .chosen
        .as_ref()
        .filter(|_| res.outcome.is_accepted())
        .map(|c| c.picked().to_string());
    let chosen_pattern = chosen.as_deref().map(pattern_of);
    let patterns = match &chosen_pattern {
        Some(p) => [p.clone(), p.clone()],
        None => original.clone(),
    };
    StageState {
        verdict: Some(res.outcome),
        chosen,
        chosen_pattern,
        patterns: Some(patterns),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: Stage,
    pub relations: usize,
    pub agreed: usize,
    pub semi_agreed_only: usize,
    pub disagreed: usize,
    pub unresolved: usize,
    pub pending: usize,
    pub kappa: Option<f64>,
    pub coverage: Coverage,
}

impl StageSummary {
    /// Agreed plus semi-agreed.
    pub fn accepted(&self) -> usize {
        self.agreed + self.semi_agreed_only
    }

    pub fn accepted_ratio(&self) -> Option<f64> {
        (self.relations > 0).then(|| self.accepted() as f64 / self.relations as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseTally {
    pub annotator: String,
    pub yes: usize,
    pub no: usize,
    pub unsure: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub annotators: [String; 2],
    pub split: SplitFilter,
    pub kappa_mode: KappaMode,
    pub stages: Vec<StageSummary>,
    pub responses: Vec<ResponseTally>,
}

pub fn agreement_report(
    project: &Project,
    catalog: &Catalog,
    options: &ReportOptions,
) -> Result<AgreementReport, AgreementError> {
    let pair = annotator_pair(project)?;
    let records = evaluate(project, catalog, options)?;
    Ok(summarize(&records, catalog, &pair, project, options))
}

fn class(catalog: &Catalog, id: &str) -> String {
    catalog.class_label(id).unwrap_or(id).to_string()
}

fn summarize(
    records: &[StageRecord],
    catalog: &Catalog,
    pair: &[String; 2],
    project: &Project,
    options: &ReportOptions,
) -> AgreementReport {
    let mut stages = Vec::with_capacity(3);
    for stage in Stage::ALL {
        let mut s = StageSummary {
            stage,
            relations: records.len(),
            agreed: 0,
            semi_agreed_only: 0,
            disagreed: 0,
            unresolved: 0,
            pending: 0,
            kappa: None,
            coverage: Coverage::new(0, 0),
        };
        let mut label_pairs = Vec::new();
        let mut chosen = Vec::new();
        for r in records {
            let state = r.stage(stage);
            match state.verdict {
                Some(AgreementVerdict::Agreed) => s.agreed += 1,
                Some(AgreementVerdict::SemiAgreed) => s.semi_agreed_only += 1,
                Some(AgreementVerdict::Disagreed) => s.disagreed += 1,
                Some(AgreementVerdict::Unresolved) => s.unresolved += 1,
                None => s.pending += 1,
            }
            if state.verdict.is_some_and(AgreementVerdict::is_accepted) {
                if let Some(p) = &state.chosen_pattern {
                    chosen.push(p.as_str());
                }
            }
            let labels = match (options.kappa_mode, stage) {
                (KappaMode::Resolved, _) | (KappaMode::Original, Stage::One) => {
                    state.patterns.as_ref()
                }
                (KappaMode::Original, _) => state
                    .verdict
                    .filter(|v| v.is_accepted())
                    .and(r.stage(Stage::One).patterns.as_ref()),
            };
            if let Some([a, b]) = labels {
                label_pairs.push((class(catalog, a), class(catalog, b)));
            }
        }
        s.kappa = cohen_kappa(&label_pairs).ok();
        s.coverage = coverage(chosen);
        stages.push(s);
    }

    let in_split: BTreeSet<&RelationKey> = records.iter().map(|r| &r.key).collect();
    let responses = pair
        .iter()
        .map(|who| {
            let mut t = ResponseTally {
                annotator: who.clone(),
                ..Default::default()
            };
            for c in project
                .cross_checks
                .iter()
                .filter(|c| &c.annotator == who && in_split.contains(&c.key()))
            {
                match c.response {
                    Response::Yes => t.yes += 1,
                    Response::No => t.no += 1,
                    Response::Unsure => t.unsure += 1,
                }
            }
            t
        })
        .collect();

    AgreementReport {
        annotators: pair.clone(),
        split: options.split,
        kappa_mode: options.kappa_mode,
        stages,
        responses,
    }
}

impl AgreementReport {
    pub fn stage(&self, stage: Stage) -> &StageSummary {
        &self.stages[stage.index()]
    }

    /// One row per stage; kappa and coverage ratio are blank when undefined.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "stage,relations,agreed,semi_agreed_only,accepted,disagreed,unresolved,pending,kappa,coverage_numerator,coverage_denominator\n",
        );
        for s in &self.stages {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                s.stage,
                s.relations,
                s.agreed,
                s.semi_agreed_only,
                s.accepted(),
                s.disagreed,
                s.unresolved,
                s.pending,
                s.kappa.map_or(String::new(), |k| format!("{k:.6}")),
                s.coverage.numerator,
                s.coverage.denominator
            );
        }
        out
    }

    /// Plain-text table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let pct = |r: Option<f64>| r.map_or("-".to_string(), |r| format!("{:.1}%", r * 100.0));
        let _ = writeln!(
            out,
            "annotators: {} / {}   split: {}   kappa mode: {}",
            self.annotators[0],
            self.annotators[1],
            self.split,
            match self.kappa_mode {
                KappaMode::Resolved => "resolved",
                KappaMode::Original => "original",
            }
        );
        let _ = writeln!(
            out,
            "{:<6} {:>9} {:>7} {:>10} {:>9} {:>10} {:>7} {:>9} {:>8} {:>6}  coverage",
            "stage", "relations", "agreed", "semi-only", "accepted", "disagreed", "unres.", "pending", "ratio", "kappa"
        );
        for s in &self.stages {
            let _ = writeln!(
                out,
                "{:<6} {:>9} {:>7} {:>10} {:>9} {:>10} {:>7} {:>9} {:>8} {:>6}  {}",
                s.stage.to_string(),
                s.relations,
                s.agreed,
                s.semi_agreed_only,
                s.accepted(),
                s.disagreed,
                s.unresolved,
                s.pending,
                pct(s.accepted_ratio()),
                s.kappa.map_or("-".to_string(), |k| format!("{k:.2}")),
                s.coverage
            );
        }
        let _ = writeln!(out, "stage-2 responses:");
        for t in &self.responses {
            let _ = writeln!(
                out,
                "  {:<12} yes {:>4}  no {:>4}  unsure {:>4}",
                t.annotator, t.yes, t.no, t.unsure
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::Span;
    use crate::catalog::SlotName;

    fn fill(slot: SlotName, seg: &str, start: usize, end: usize, text: &str) -> SlotFill {
        SlotFill {
            slot,
            spans: vec![Span {
                segment: seg.into(),
                start,
                end,
            }],
            text: text.into(),
            implicit: false,
        }
    }

    fn ann(who: &str, pattern: &str, fills: Vec<SlotFill>) -> EarAnnotation {
        EarAnnotation {
            text_id: "t".into(),
            relation_id: "c1".into(),
            annotator: who.into(),
            stage: Stage::One,
            pattern_id: pattern.into(),
            fills,
            note: None,
        }
    }

    #[test]
    fn overlap_examples() {
        let a = fill(SlotName::X, "e2", 5, 20, "aaaaaaaaaaaaaaa");
        assert!(spans_overlap(&a, &a));
        assert!(spans_overlap(&a, &fill(SlotName::X, "e2", 18, 30, "b")));
        assert!(!spans_overlap(
            &fill(SlotName::X, "e2", 5, 10, "c"),
            &fill(SlotName::X, "e3", 5, 10, "c")
        ));
        assert!(!spans_overlap(&a, &fill(SlotName::X, "e2", 20, 30, "d")));
        let implicit = SlotFill::implicit(SlotName::Y, "death penalty");
        let anchored = fill(SlotName::Y, "e1", 0, 17, "the death penalty");
        assert!(spans_overlap(&implicit, &anchored));
        assert!(spans_overlap(&implicit, &SlotFill::implicit(SlotName::Y, "Death!")));
        assert!(!spans_overlap(&implicit, &SlotFill::implicit(SlotName::Y, "innocents")));
        let exact = OverlapConfig {
            implicit: ImplicitMatch::ExactTokens,
        };
        assert!(!spans_overlap_with(&implicit, &anchored, &exact));
    }

    #[test]
    fn stage1_equivalent_patterns_agree() {
        let cat = Catalog::shipped();
        let a = ann("a", "S01", vec![fill(SlotName::X, "e1", 0, 10, "x"), fill(SlotName::Y, "e2", 20, 40, "y")]);
        let b = ann("b", "S02", vec![fill(SlotName::X, "e1", 0, 10, "x"), fill(SlotName::Y, "e2", 30, 50, "y")]);
        assert_eq!(compare_stage1(&a, &b, &cat), Ok(AgreementVerdict::Agreed));
        let mut twin = a.clone();
        twin.annotator = "b".into();
        assert_eq!(compare_stage1(&a, &twin, &cat), Ok(AgreementVerdict::Agreed));
    }

    #[test]
    fn stage1_value_flip_disagrees() {
        // x = death penalty (bad); y either "innocent people" (good,
        // suppressed) or "innocent people are convicted" (bad, promoted).
        let cat = Catalog::shipped();
        let a = ann("a", "S05", vec![fill(SlotName::X, "e1", 4, 17, "death penalty"), fill(SlotName::Y, "e2", 60, 75, "innocent people")]);
        let b = ann("b", "S07", vec![fill(SlotName::X, "e1", 4, 17, "death penalty"), fill(SlotName::Y, "e2", 60, 89, "innocent people are convicted")]);
        let pa = cat.get("S05").unwrap().ac.unwrap();
        let pb = cat.get("S07").unwrap().ac.unwrap();
        assert_eq!((pa.val_y, pa.causality), (crate::catalog::ValuePolarity::Good, crate::catalog::CausalDirection::Suppress));
        assert_eq!((pb.val_y, pb.causality), (crate::catalog::ValuePolarity::Bad, crate::catalog::CausalDirection::Promote));
        assert_eq!(compare_stage1(&a, &b, &cat), Ok(AgreementVerdict::Disagreed));
    }

    #[test]
    fn stage1_other_rules_and_errors() {
        let cat = Catalog::shipped();
        let o1 = ann("a", OTHER_ID, vec![]);
        let o2 = ann("b", OTHER_ID, vec![]);
        assert_eq!(compare_stage1(&o1, &o2, &cat), Ok(AgreementVerdict::Agreed));
        let s = ann("b", "S11", vec![SlotFill::implicit(SlotName::P, "p")]);
        assert_eq!(compare_stage1(&o1, &s, &cat), Ok(AgreementVerdict::Disagreed));
        let mut other_rel = s.clone();
        other_rel.relation_id = "c2".into();
        assert!(matches!(
            compare_stage1(&o1, &other_rel, &cat),
            Err(CompareError::RelationMismatch(..))
        ));
    }

    fn key(r: &str) -> RelationKey {
        RelationKey::new("t", r)
    }

    fn check(r: &str, who: &str, response: Response) -> CrossCheck {
        CrossCheck {
            text_id: "t".into(),
            relation_id: r.into(),
            annotator: who.into(),
            response,
        }
    }

    #[test]
    fn stage2_rules() {
        let pair = ["a".to_string(), "b".to_string()];
        let verdicts: BTreeMap<_, _> = [
            (key("c1"), AgreementVerdict::Disagreed),
            (key("c2"), AgreementVerdict::Disagreed),
            (key("c3"), AgreementVerdict::Disagreed),
            (key("c4"), AgreementVerdict::Agreed),
        ]
        .into_iter()
        .collect();
        let responses = vec![
            check("c1", "a", Response::No),
            check("c1", "b", Response::No),
            check("c2", "a", Response::Yes),
            check("c2", "b", Response::No),
            check("c3", "a", Response::Unsure),
            check("c3", "b", Response::No),
        ];
        let out = resolve_stage2(&verdicts, &responses, &pair, 7).unwrap();
        assert_eq!(out[&key("c1")].outcome, AgreementVerdict::Disagreed);
        assert_eq!(out[&key("c2")].outcome, AgreementVerdict::SemiAgreed);
        assert_eq!(out[&key("c2")].chosen.as_ref().unwrap().picked(), "b");
        assert_eq!(out[&key("c3")].outcome, AgreementVerdict::Unresolved);
        assert_eq!(out[&key("c4")].outcome, AgreementVerdict::Agreed);

        let err = resolve_stage2(&verdicts, &responses[..5], &pair, 7).unwrap_err();
        assert_eq!(
            err,
            ResolveError::MissingResponse {
                key: key("c3"),
                annotator: "b".into()
            }
        );
    }

    #[test]
    fn stage3_outcomes_and_seeded_choice() {
        let pair = ["a".to_string(), "b".to_string()];
        let outcomes: BTreeMap<_, _> = [
            (key("c1"), Decision::Accept { annotator: "b".into() }),
            (key("c2"), Decision::BothAcceptable),
            (key("c3"), Decision::Reject),
        ]
        .into_iter()
        .collect();
        let carried = vec![key("c1"), key("c2"), key("c3")];
        let first = resolve_stage3(&carried, &outcomes, &pair, 7).unwrap();
        assert_eq!(first[0].outcome, AgreementVerdict::SemiAgreed);
        assert_eq!(first[0].chosen, Some(Chosen::Single { annotator: "b".into() }));
        assert_eq!(first[2].outcome, AgreementVerdict::Disagreed);
        assert!(first[2].chosen.is_none());
        let seed = first[1].rng_seed.unwrap();
        assert_eq!(seed, relation_seed(7, &key("c2")));
        let replay = resolve_stage3(&carried, &outcomes, &pair, 7).unwrap();
        assert_eq!(first, replay);
        assert_eq!(pick_pair(&pair, seed), first[1].chosen.clone().unwrap());

        assert_eq!(
            resolve_stage3(&[key("c9")], &outcomes, &pair, 7),
            Err(ResolveError::MissingOutcome(key("c9")))
        );
    }

    #[test]
    fn seeded_picks_use_both_sides() {
        let pair = ["a".to_string(), "b".to_string()];
        let picks: BTreeSet<String> = (0..64)
            .map(|s| pick_pair(&pair, s).picked().to_string())
            .collect();
        assert_eq!(picks.len(), 2);
    }

    #[test]
    fn kappa_fixtures() {
        let k = cohen_kappa(&[("A", "A"), ("A", "B"), ("B", "A"), ("B", "B")]).unwrap();
        assert!(k.abs() < 1e-9);
        let same: Vec<_> = ["A", "B", "C", "A"].iter().map(|l| (*l, *l)).collect();
        assert!((cohen_kappa(&same).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(cohen_kappa::<&str>(&[]), Err(KappaError::Empty));
        assert_eq!(cohen_kappa(&[("A", "A"), ("A", "A")]), Ok(1.0));
        // p_o = 0.6, p_e = 0.5*0.4 + 0.5*0.6 = 0.5
        let pairs = [("A", "A"), ("A", "A"), ("A", "B"), ("B", "B"), ("B", "A"), ("B", "B"), ("A", "B"), ("B", "B"), ("A", "A"), ("B", "A")];
        let k = cohen_kappa(&pairs).unwrap();
        assert!((k - 0.2).abs() < 1e-9, "{k}");
    }

    #[test]
    fn coverage_examples() {
        let c = coverage(["S01", OTHER_ID, "R03", "U09"]);
        assert_eq!((c.numerator, c.denominator), (3, 4));
        let none = coverage([OTHER_ID, OTHER_ID]);
        assert_eq!((none.numerator, none.denominator), (0, 2));
        assert_eq!(coverage(std::iter::empty()).ratio, None);
        assert_eq!(Coverage::new(85, 125).to_string(), "68.0% (85/125)");
        assert_eq!(Coverage::new(173, 232).to_string(), "74.6% (173/232)");
    }
}

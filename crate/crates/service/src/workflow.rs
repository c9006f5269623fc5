//! Per-stage work items derived from a project's annotation state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use earkit::agreement::{
    evaluate, AgreementError, AgreementVerdict, ReportOptions, Resolution, Response, StageRecord,
};
use earkit::corpus::ArgRelation;
use earkit::{Catalog, EarAnnotation, Project, RelationKey, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkStatus {
    Pending,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkItem {
    pub text_id: String,
    pub relation_id: String,
    pub stage: Stage,
    /// `None` for the joint Stage-3 discussion.
    pub annotator: Option<String>,
    pub status: WorkStatus,
}

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("relation {0} is not in the project")]
    UnknownRelation(RelationKey),
    #[error("{key}: stage {stage} is not complete")]
    PriorStageIncomplete { key: RelationKey, stage: Stage },
    #[error(transparent)]
    Agreement(#[from] AgreementError),
}

fn stage1_annotation<'a>(project: &'a Project, key: &RelationKey, annotator: &str) -> Option<&'a EarAnnotation> {
    project
        .annotations
        .iter()
        .find(|a| a.stage == Stage::One && a.annotator == annotator && a.key() == *key)
}

fn response<'a>(project: &'a Project, key: &RelationKey, annotator: &str) -> Option<Response> {
    project
        .cross_checks
        .iter()
        .find(|c| c.annotator == annotator && c.key() == *key)
        .map(|c| c.response)
}

fn resolution<'a>(project: &'a Project, key: &RelationKey) -> Option<&'a Resolution> {
    project
        .resolutions
        .iter()
        .find(|r| r.stage == Stage::Three && r.key() == *key)
}

fn pair(project: &Project) -> Vec<String> {
    project.annotators.iter().take(2).cloned().collect()
}

fn item(key: &RelationKey, stage: Stage, annotator: Option<&str>, done: bool) -> WorkItem {
    WorkItem {
        text_id: key.text_id.clone(),
        relation_id: key.relation_id.clone(),
        stage,
        annotator: annotator.map(str::to_string),
        status: if done { WorkStatus::Done } else { WorkStatus::Pending },
    }
}

fn stage1_items(project: &Project, key: &RelationKey) -> Vec<WorkItem> {
    pair(project)
        .iter()
        .map(|a| item(key, Stage::One, Some(a), stage1_annotation(project, key, a).is_some()))
        .collect()
}

/// Items a relation spawns once its latest finished stage is known:
/// cross-checks for both annotators after a Stage-1 disagreement, one
/// discussion after an unsettled Stage 2, nothing once accepted.
fn spawned(project: &Project, record: &StageRecord) -> Result<Vec<WorkItem>, WorkflowError> {
    let key = &record.key;
    let s1 = record.stage(Stage::One).verdict;
    let s2 = record.stage(Stage::Two).verdict;
    match (s1, s2) {
        (None, _) => Err(WorkflowError::PriorStageIncomplete {
            key: key.clone(),
            stage: Stage::One,
        }),
        (Some(AgreementVerdict::Agreed), _) | (_, Some(AgreementVerdict::SemiAgreed)) => Ok(Vec::new()),
        (Some(_), None) => Ok(pair(project)
            .iter()
            .map(|a| item(key, Stage::Two, Some(a), response(project, key, a).is_some()))
            .collect()),
        (Some(_), Some(_)) => Ok(vec![item(key, Stage::Three, None, resolution(project, key).is_some())]),
    }
}

fn records(project: &Project, catalog: &Catalog) -> Result<Vec<StageRecord>, WorkflowError> {
    Ok(evaluate(project, catalog, &ReportOptions::default())?)
}

/// Work items produced by the relation's most recently completed stage.
pub fn advance_stage(project: &Project, catalog: &Catalog, key: &RelationKey) -> Result<Vec<WorkItem>, WorkflowError> {
    let record = records(project, catalog)?
        .into_iter()
        .find(|r| r.key == *key)
        .ok_or_else(|| WorkflowError::UnknownRelation(key.clone()))?;
    spawned(project, &record)
}

/// Every work item of the project, in corpus order.
pub fn all_items(project: &Project, catalog: &Catalog) -> Result<Vec<WorkItem>, WorkflowError> {
    let mut out = Vec::new();
    for record in records(project, catalog)? {
        out.extend(stage1_items(project, &record.key));
        match spawned(project, &record) {
            Ok(items) => out.extend(items),
            Err(WorkflowError::PriorStageIncomplete { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// A work item together with what the annotator may see for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueEntry {
    #[serde(flatten)]
    pub item: WorkItem,
    pub relation: ArgRelation,
    /// The requesting annotator's own Stage-1 annotation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub own: Option<EarAnnotation>,
    /// The other annotator's Stage-1 annotation; never sent in Stage 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterpart: Option<EarAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<Response>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
}

/// The annotator's items for one stage.
pub fn queue(project: &Project, catalog: &Catalog, annotator: &str, stage: Stage) -> Result<Vec<QueueEntry>, WorkflowError> {
    let other = pair(project).into_iter().find(|a| a != annotator);
    let mut out = Vec::new();
    for it in all_items(project, catalog)? {
        if it.stage != stage || it.annotator.as_deref().is_some_and(|a| a != annotator) {
            continue;
        }
        let key = RelationKey::new(&it.text_id, &it.relation_id);
        let relation = project
            .text(&key.text_id)
            .and_then(|t| t.relation(&key.relation_id))
            .cloned()
            .ok_or_else(|| WorkflowError::UnknownRelation(key.clone()))?;
        let counterpart = match stage {
            Stage::One => None,
            _ => other
                .as_deref()
                .and_then(|o| stage1_annotation(project, &key, o))
                .cloned(),
        };
        out.push(QueueEntry {
            relation,
            own: stage1_annotation(project, &key, annotator).cloned(),
            counterpart,
            response: (stage == Stage::Two)
                .then(|| response(project, &key, annotator))
                .flatten(),
            resolution: (stage == Stage::Three)
                .then(|| resolution(project, &key).cloned())
                .flatten(),
            item: it,
        });
    }
    Ok(out)
}

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::identity::Person;
use crate::model::{is_valid_issue_key, Issue, IssueKind, Timestamp};
use crate::{Error, Result};

/// One issue as exported by the tracker, before any filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawIssueRecord {
    pub key: String,
    pub raw_type: String,
    #[serde(default)]
    pub status: Option<String>,
    #[serde(default)]
    pub resolution: Option<String>,
    #[serde(default)]
    pub summary: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub created: Option<String>,
    #[serde(default)]
    pub resolved: Option<String>,
    #[serde(default)]
    pub assignee_name: Option<String>,
    #[serde(default)]
    pub assignee_login: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    UnsupportedType,
    UnfinishedStatus,
    UnfinishedResolution,
    MissingLifecycle,
    InvalidTimestamp,
    InvertedLifecycle,
    InvalidKey,
    DuplicateKey,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::UnsupportedType => "unsupported-type",
            DropReason::UnfinishedStatus => "unfinished-status",
            DropReason::UnfinishedResolution => "unfinished-resolution",
            DropReason::MissingLifecycle => "missing-lifecycle",
            DropReason::InvalidTimestamp => "invalid-timestamp",
            DropReason::InvertedLifecycle => "inverted-lifecycle",
            DropReason::InvalidKey => "invalid-key",
            DropReason::DuplicateKey => "duplicate-key",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default)]
pub struct IssueImport {
    /// Imported issues sorted by key, assignees not yet resolved to user ids.
    pub issues: Vec<Issue>,
    /// Assignee of each imported issue, by key.
    pub assignees: BTreeMap<String, Person>,
    pub dropped: BTreeMap<DropReason, usize>,
}

/// Tracker type to issue kind. Anything else is out of scope.
pub fn map_issue_type(raw_type: &str) -> Option<IssueKind> {
    match raw_type.trim().to_ascii_lowercase().as_str() {
        "bug" => Some(IssueKind::Bug),
        "improvement" | "enhancement" => Some(IssueKind::Improvement),
        _ => None,
    }
}

fn is_finished_status(status: &str) -> bool {
    matches!(status.trim().to_ascii_lowercase().as_str(), "resolved" | "closed")
}

fn is_finished_resolution(resolution: &str) -> bool {
    matches!(resolution.trim().to_ascii_lowercase().as_str(), "fixed" | "done")
}

/// Keeps finished bugs and improvements; every other record is counted under
/// the first reason that rejects it.
pub fn import_issues(records: &[RawIssueRecord]) -> IssueImport {
    let mut out = IssueImport::default();
    let mut seen = BTreeSet::new();
    for rec in records {
        match import_one(rec) {
            Ok(issue) => {
                if !seen.insert(issue.key.clone()) {
                    *out.dropped.entry(DropReason::DuplicateKey).or_default() += 1;
                    continue;
                }
                let person = Person::new(
                    rec.assignee_name.clone().unwrap_or_default(),
                    rec.assignee_login.clone().unwrap_or_default(),
                );
                if !person.is_empty() {
                    out.assignees.insert(issue.key.clone(), person);
                }
                out.issues.push(issue);
            }
            Err(reason) => *out.dropped.entry(reason).or_default() += 1,
        }
    }
    out.issues.sort_by(|a, b| a.key.cmp(&b.key));
    out
}

fn import_one(rec: &RawIssueRecord) -> std::result::Result<Issue, DropReason> {
    let kind = map_issue_type(&rec.raw_type).ok_or(DropReason::UnsupportedType)?;
    let status = rec.status.as_deref().unwrap_or_default();
    if !is_finished_status(status) {
        return Err(DropReason::UnfinishedStatus);
    }
    let resolution = rec.resolution.as_deref().unwrap_or_default();
    if !is_finished_resolution(resolution) {
        return Err(DropReason::UnfinishedResolution);
    }
    if !is_valid_issue_key(&rec.key) {
        return Err(DropReason::InvalidKey);
    }
    let (Some(created), Some(resolved)) = (non_blank(&rec.created), non_blank(&rec.resolved)) else {
        return Err(DropReason::MissingLifecycle);
    };
    let created = parse_timestamp(created).map_err(|_| DropReason::InvalidTimestamp)?;
    let resolved = parse_timestamp(resolved).map_err(|_| DropReason::InvalidTimestamp)?;
    if created > resolved {
        return Err(DropReason::InvertedLifecycle);
    }
    Ok(Issue {
        key: rec.key.clone(),
        kind,
        summary: rec.summary.clone().unwrap_or_default(),
        description: rec.description.clone().unwrap_or_default(),
        created,
        resolved,
        assignee: None,
        status: status.to_string(),
        resolution: resolution.to_string(),
    })
}

fn non_blank(s: &Option<String>) -> Option<&str> {
    s.as_deref().map(str::trim).filter(|s| !s.is_empty())
}

/// Accepts RFC 3339, the tracker's `2011-12-30T09:59:00.000+0000` form,
/// a zone-less `YYYY-MM-DD HH:MM:SS` (taken as UTC) or raw epoch seconds.
pub fn parse_timestamp(s: &str) -> Result<Timestamp> {
    let s = s.trim();
    if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
        let secs: i64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("timestamp `{s}` out of range")))?;
        return Timestamp::from_epoch_seconds(secs);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Timestamp::from_epoch_seconds(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f%z", "%Y-%m-%d %H:%M:%S%.f %z", "%Y-%m-%d %H:%M:%S %z"] {
        if let Ok(dt) = DateTime::parse_from_str(s, fmt) {
            return Timestamp::from_epoch_seconds(dt.timestamp());
        }
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Timestamp::from_epoch_seconds(dt.and_utc().timestamp());
        }
    }
    Err(Error::Parse(format!("unrecognised timestamp `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(ty: &str, status: &str, resolution: &str) -> RawIssueRecord {
        RawIssueRecord {
            key: "GROOVY-5223".into(),
            raw_type: ty.into(),
            status: Some(status.into()),
            resolution: Some(resolution.into()),
            summary: Some("Bytecode optimizations".into()),
            description: Some("use LDC".into()),
            created: Some("2011-12-30T09:59:00.000+0000".into()),
            resolved: Some("2012-01-03T02:29:00.000+0000".into()),
            assignee_name: None,
            assignee_login: None,
        }
    }

    #[test]
    fn enhancement_closed_done_becomes_improvement() {
        let out = import_issues(&[record("enhancement", "Closed", "Done")]);
        assert_eq!(out.issues.len(), 1);
        assert_eq!(out.issues[0].kind, IssueKind::Improvement);
        assert_eq!(out.issues[0].created.seconds(), 1325239140);
    }

    #[test]
    fn task_is_dropped() {
        let out = import_issues(&[record("task", "Closed", "Fixed")]);
        assert!(out.issues.is_empty());
        assert_eq!(out.dropped[&DropReason::UnsupportedType], 1);
    }

    #[test]
    fn open_bug_is_dropped() {
        let out = import_issues(&[record("Bug", "Open", "Fixed")]);
        assert!(out.issues.is_empty());
        assert_eq!(out.dropped[&DropReason::UnfinishedStatus], 1);
        let out = import_issues(&[record("Bug", "Resolved", "Won't Fix")]);
        assert_eq!(out.dropped[&DropReason::UnfinishedResolution], 1);
    }

    #[test]
    fn missing_lifecycle_is_reported() {
        let mut r = record("Bug", "Resolved", "Fixed");
        r.resolved = None;
        let out = import_issues(&[r]);
        assert_eq!(out.dropped[&DropReason::MissingLifecycle], 1);
        assert_eq!(DropReason::MissingLifecycle.as_str(), "missing-lifecycle");
    }

    #[test]
    fn inverted_lifecycle_and_duplicates_dropped() {
        let mut r = record("Bug", "Resolved", "Fixed");
        std::mem::swap(&mut r.created, &mut r.resolved);
        let good = record("Bug", "Resolved", "Fixed");
        let out = import_issues(&[r, good.clone(), good]);
        assert_eq!(out.issues.len(), 1);
        assert_eq!(out.dropped[&DropReason::InvertedLifecycle], 1);
        assert_eq!(out.dropped[&DropReason::DuplicateKey], 1);
    }

    #[test]
    fn timestamp_formats() {
        let want = 1325239140;
        for s in [
            "2011-12-30T09:59:00Z",
            "2011-12-30T10:59:00+01:00",
            "2011-12-30T09:59:00.000+0000",
            "2011-12-30 09:59:00",
            "1325239140",
        ] {
            assert_eq!(parse_timestamp(s).unwrap().seconds(), want, "{s}");
        }
        assert!(parse_timestamp("30/Dec/11 09:59").is_err());
    }

    #[test]
    fn parses_json_export() {
        let json = r#"[{"key":"PIG-1","raw_type":"Improvement","status":"Resolved","resolution":"Fixed",
            "summary":"s","description":"d","created":"2012-01-01T00:00:00Z","resolved":"2012-01-02T00:00:00Z",
            "assignee_name":"Ann","assignee_login":"ann"}]"#;
        let recs: Vec<RawIssueRecord> = serde_json::from_str(json).unwrap();
        let out = import_issues(&recs);
        assert_eq!(out.issues.len(), 1);
        assert_eq!(out.assignees["PIG-1"].login, "ann");
    }
}

//! Survey responses and agreement scoring.
//!
//! A group's agreement rate is the percentage of respondents who judged its
//! memes similar; the overall figure is the unweighted mean over groups.
//! Responses live in an append-only JSONL log.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::emotion::{group_emotions, EmotionAnnotations, EmotionLabel};
use crate::error::{Error, Result};
use crate::grouping::MemeGroup;
use crate::util::round2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub participant_id: String,
    pub group_id: usize,
    pub similar: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion: Option<EmotionLabel>,
    /// UTC seconds.
    pub timestamp: i64,
}

/// Participant ids are 1–64 characters from `[A-Za-z0-9_-]`.
pub fn validate_participant_id(id: &str) -> Result<()> {
    let ok = (1..=64).contains(&id.len())
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("invalid participant id `{id}`")))
    }
}

/// Percentage of `true` judgments, two decimals.
pub fn agreement_rate<I>(judgments: I) -> Result<f64>
where
    I: IntoIterator<Item = bool>,
{
    let (mut yes, mut total) = (0u64, 0u64);
    for j in judgments {
        total += 1;
        yes += j as u64;
    }
    if total == 0 {
        return Err(Error::EmptyInput("no responses for group".into()));
    }
    Ok(round2(100.0 * yes as f64 / total as f64))
}

/// Unweighted mean of per-group rates, two decimals. The rates are summed
/// in sorted order so the result does not depend on group order.
pub fn average_agreement(rates: &[f64]) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::EmptyInput("no group agreement rates".into()));
    }
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(round2(sorted.iter().sum::<f64>() / rates.len() as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub per_group: BTreeMap<usize, f64>,
    /// `None` when there are no responses.
    pub average: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub n_groups: usize,
    pub n_participants: usize,
    pub n_responses: usize,
}

impl AgreementReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["group_id", "rate"]).map_err(|e| Error::csv("<agreement>", e))?;
        for (g, r) in &self.per_group {
            w.write_record([g.to_string(), format!("{r:.2}")])
                .map_err(|e| Error::csv("<agreement>", e))?;
        }
        w.flush().map_err(|e| Error::io("<agreement>", e))?;
        Ok(())
    }
}

pub fn agreement_report(responses: &[SurveyResponse]) -> AgreementReport {
    let mut by_group: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
    for r in responses {
        by_group.entry(r.group_id).or_default().push(r.similar);
    }
    let per_group: BTreeMap<usize, f64> = by_group
        .into_iter()
        .map(|(g, js)| (g, agreement_rate(js).expect("group has responses")))
        .collect();
    let rates: Vec<f64> = per_group.values().copied().collect();
    let participants: HashSet<&str> = responses.iter().map(|r| r.participant_id.as_str()).collect();
    AgreementReport {
        average: average_agreement(&rates).ok(),
        min: rates.iter().copied().reduce(f64::min),
        max: rates.iter().copied().reduce(f64::max),
        n_groups: per_group.len(),
        n_participants: participants.len(),
        n_responses: responses.len(),
        per_group,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionAgreement {
    pub accuracy: f64,
    pub matched: u64,
    pub total: u64,
    /// Rows: participant's emotion; columns: group's dominant emotion.
    /// Both in canonical order.
    pub confusion: [[u64; 6]; 6],
    /// Responses for groups with no annotated member.
    pub skipped_unlabeled: u64,
    /// Responses that name a group missing from `groups`.
    pub skipped_unknown_group: u64,
}

/// Compares each participant's emotion choice with the dominant emotion of
/// the group it answers for.
pub fn emotion_agreement(
    responses: &[SurveyResponse],
    ann: &EmotionAnnotations,
    groups: &[MemeGroup],
) -> Result<EmotionAgreement> {
    let dominant = group_emotions(groups, ann);
    let mut confusion = [[0u64; 6]; 6];
    let (mut matched, mut total, mut unlabeled, mut unknown) = (0, 0, 0, 0);
    let mut with_emotion = 0u64;
    for r in responses {
        let Some(human) = r.emotion else { continue };
        with_emotion += 1;
        let Some(g) = dominant.get(&r.group_id) else {
            unknown += 1;
            continue;
        };
        let Some(model) = g.dominant else {
            unlabeled += 1;
            continue;
        };
        confusion[human.index()][model.index()] += 1;
        total += 1;
        matched += (human == model) as u64;
    }
    if with_emotion == 0 {
        return Err(Error::EmptyInput("no response carries an emotion".into()));
    }
    if unlabeled + unknown > 0 {
        log::warn!("{unlabeled} responses for unlabeled groups and {unknown} for unknown groups skipped");
    }
    if total == 0 {
        return Err(Error::EmptyInput("no emotion response refers to a labeled group".into()));
    }
    Ok(EmotionAgreement {
        accuracy: round2(100.0 * matched as f64 / total as f64),
        matched,
        total,
        confusion,
        skipped_unlabeled: unlabeled,
        skipped_unknown_group: unknown,
    })
}

/// Parses a JSONL response log; rejects duplicate (participant, group) pairs.
pub fn load_responses(path: impl AsRef<Path>) -> Result<Vec<SurveyResponse>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: SurveyResponse = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert((r.participant_id.clone(), r.group_id)) {
            return Err(Error::Conflict(format!(
                "line {}: duplicate response from `{}` for group {}",
                i + 1,
                r.participant_id,
                r.group_id
            )));
        }
        out.push(r);
    }
    Ok(out)
}

/// An append-only response log. Each response is written as one line with a
/// single write call and synced before `append` returns.
#[derive(Debug)]
pub struct ResponseLog {
    path: PathBuf,
    responses: Vec<SurveyResponse>,
    keys: HashSet<(String, usize)>,
}

impl ResponseLog {
    /// Opens `path`, loading existing responses; a missing file is an empty log.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let responses = if path.exists() { load_responses(&path)? } else { Vec::new() };
        let keys = responses.iter().map(|r| (r.participant_id.clone(), r.group_id)).collect();
        Ok(ResponseLog { path, responses, keys })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn responses(&self) -> &[SurveyResponse] {
        &self.responses
    }

    pub fn participants(&self) -> BTreeSet<&str> {
        self.responses.iter().map(|r| r.participant_id.as_str()).collect()
    }

    pub fn append(&mut self, response: SurveyResponse) -> Result<()> {
        validate_participant_id(&response.participant_id)?;
        let key = (response.participant_id.clone(), response.group_id);
        if self.keys.contains(&key) {
            return Err(Error::Conflict(format!(
                "`{}` already answered group {}",
                response.participant_id, response.group_id
            )));
        }
        let mut line = serde_json::to_string(&response).map_err(|e| Error::Format(e.to_string()))?;
        line.push('\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        file.write_all(line.as_bytes()).map_err(|e| Error::io(&self.path, e))?;
        file.sync_data().map_err(|e| Error::io(&self.path, e))?;
        self.keys.insert(key);
        self.responses.push(response);
        Ok(())
    }
}

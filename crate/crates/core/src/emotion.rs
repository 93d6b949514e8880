//! Six-way emotion labels for meme captions.
//!
//! Labels come either from a sidecar CSV written by an external classifier
//! or from a small keyword lexicon bundled with the crate. Only memes with
//! text are ever annotated.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::grouping::MemeGroup;
use crate::util::{round2, tokenize};

/// Declaration order is the canonical order used for tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Sadness,
    Joy,
    Love,
    Anger,
    Fear,
    Surprise,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 6] = [
        EmotionLabel::Sadness,
        EmotionLabel::Joy,
        EmotionLabel::Love,
        EmotionLabel::Anger,
        EmotionLabel::Fear,
        EmotionLabel::Surprise,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionLabel::Sadness => "sadness",
            EmotionLabel::Joy => "joy",
            EmotionLabel::Love => "love",
            EmotionLabel::Anger => "anger",
            EmotionLabel::Fear => "fear",
            EmotionLabel::Surprise => "surprise",
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmotionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        EmotionLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::Label(t.to_string()))
    }
}

/// First index holding the maximum; ties resolve to the canonical order.
fn argmax(values: &[f64; 6]) -> EmotionLabel {
    let mut best = 0;
    for i in 1..6 {
        if values[i] > values[best] {
            best = i;
        }
    }
    EmotionLabel::ALL[best]
}

/// A probability distribution over the six emotions, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionScores {
    probs: [f64; 6],
}

pub const SIMPLEX_TOLERANCE: f64 = 1e-4;

impl EmotionScores {
    pub fn new(probs: [f64; 6]) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Data {
                row: 0,
                message: format!("probabilities must be finite and non-negative: {probs:?}"),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Data {
                row: 0,
                message: format!("probabilities sum to {sum}"),
            });
        }
        Ok(EmotionScores { probs })
    }

    pub fn uniform() -> Self {
        EmotionScores { probs: [1.0 / 6.0; 6] }
    }

    pub fn get(&self, label: EmotionLabel) -> f64 {
        self.probs[label.index()]
    }

    pub fn probs(&self) -> &[f64; 6] {
        &self.probs
    }

    pub fn argmax(&self) -> EmotionLabel {
        argmax(&self.probs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationSource {
    Sidecar,
    Lexicon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub label: EmotionLabel,
    pub scores: Option<EmotionScores>,
    pub source: AnnotationSource,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmotionAnnotations {
    pub by_meme: BTreeMap<String, Annotation>,
}

impl EmotionAnnotations {
    pub fn len(&self) -> usize {
        self.by_meme.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_meme.is_empty()
    }

    pub fn label(&self, meme_id: &str) -> Option<EmotionLabel> {
        self.by_meme.get(meme_id).map(|a| a.label)
    }

    /// Keeps only annotations of text-bearing memes in `corpus`; returns the
    /// ids that were dropped.
    pub fn restrict_to(&mut self, corpus: &Corpus) -> Vec<String> {
        let keep: HashSet<&str> = corpus
            .records
            .iter()
            .filter(|r| r.text_present)
            .map(|r| r.meme_id.as_str())
            .collect();
        let dropped: Vec<String> = self
            .by_meme
            .keys()
            .filter(|k| !keep.contains(k.as_str()))
            .cloned()
            .collect();
        for k in &dropped {
            self.by_meme.remove(k);
        }
        dropped
    }
}

const PROB_COLUMNS: [&str; 6] = ["p_sadness", "p_joy", "p_love", "p_anger", "p_fear", "p_surprise"];

pub fn load_emotion_sidecar(path: impl AsRef<Path>) -> Result<EmotionAnnotations> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_emotion_sidecar(file)
}

/// Parses `meme_id,label[,p_sadness,…,p_surprise]`. When probabilities are
/// given the label must be their argmax.
pub fn read_emotion_sidecar<R: Read>(reader: R) -> Result<EmotionAnnotations> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::csv("<sidecar>", e))?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let pos = |name: &str| headers.iter().position(|h| h == name);
    let id_col = pos("meme_id").ok_or_else(|| Error::Schema { column: "meme_id".into() })?;
    let label_col = pos("label").ok_or_else(|| Error::Schema { column: "label".into() })?;
    let prob_cols: Vec<Option<usize>> = PROB_COLUMNS.iter().map(|c| pos(c)).collect();
    let prob_cols: Option<Vec<usize>> = match prob_cols.iter().filter(|c| c.is_some()).count() {
        0 => None,
        6 => Some(prob_cols.into_iter().flatten().collect()),
        _ => {
            let missing = PROB_COLUMNS
                .iter()
                .zip(&prob_cols)
                .find(|(_, c)| c.is_none())
                .map(|(n, _)| *n)
                .unwrap();
            return Err(Error::Schema { column: missing.into() });
        }
    };

    let mut out = EmotionAnnotations::default();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv("<sidecar>", e))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let id = row.get(id_col).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty meme_id".into(),
            });
        }
        let label: EmotionLabel = row.get(label_col).unwrap_or("").parse()?;
        let scores = match &prob_cols {
            Some(cols) if cols.iter().any(|&c| !row.get(c).unwrap_or("").trim().is_empty()) => {
                let mut p = [0.0; 6];
                for (slot, &c) in p.iter_mut().zip(cols) {
                    *slot = row.get(c).unwrap_or("").trim().parse().map_err(|e| Error::Parse {
                        line,
                        message: format!("bad probability: {e}"),
                    })?;
                }
                let scores = EmotionScores::new(p).map_err(|e| match e {
                    Error::Data { message, .. } => Error::Data { row: line, message },
                    other => other,
                })?;
                if scores.argmax() != label {
                    return Err(Error::Consistency(format!(
                        "line {line}: label `{label}` for `{id}` but probabilities peak at `{}`",
                        scores.argmax()
                    )));
                }
                Some(scores)
            }
            _ => None,
        };
        if out.by_meme.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        out.by_meme.insert(
            id,
            Annotation {
                label,
                scores,
                source: AnnotationSource::Sidecar,
            },
        );
    }
    Ok(out)
}

/// Writes annotations in the sidecar layout. Probability cells are left
/// empty for annotations without scores.
pub fn write_emotion_sidecar<W: Write>(ann: &EmotionAnnotations, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["meme_id", "label"];
    header.extend(PROB_COLUMNS);
    w.write_record(&header).map_err(|e| Error::csv("<sidecar>", e))?;
    for (id, a) in &ann.by_meme {
        let mut row = vec![id.clone(), a.label.to_string()];
        match &a.scores {
            Some(s) => row.extend(s.probs.iter().map(|p| p.to_string())),
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        w.write_record(&row).map_err(|e| Error::csv("<sidecar>", e))?;
    }
    w.flush().map_err(|e| Error::io("<sidecar>", e))?;
    Ok(())
}

const LEXICON_FILES: [&str; 6] = [
    include_str!("../data/lexicon/sadness.txt"),
    include_str!("../data/lexicon/joy.txt"),
    include_str!("../data/lexicon/love.txt"),
    include_str!("../data/lexicon/anger.txt"),
    include_str!("../data/lexicon/fear.txt"),
    include_str!("../data/lexicon/surprise.txt"),
];

/// Keyword lists in canonical label order.
pub fn lexicon() -> &'static [HashSet<&'static str>; 6] {
    static LEXICON: OnceLock<[HashSet<&'static str>; 6]> = OnceLock::new();
    LEXICON.get_or_init(|| {
        LEXICON_FILES.map(|f| f.lines().map(str::trim).filter(|w| !w.is_empty()).collect())
    })
}

/// Keyword-count emotion scores with add-one smoothing. Text without a single
/// keyword gets the uniform distribution.
pub fn classify_lexicon(text: &str) -> Result<EmotionScores> {
    if text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    let lists = lexicon();
    let mut hits = [0u64; 6];
    for token in tokenize(text) {
        for (k, list) in lists.iter().enumerate() {
            if list.contains(token.as_str()) {
                hits[k] += 1;
            }
        }
    }
    let total: u64 = hits.iter().sum();
    if total == 0 {
        return Ok(EmotionScores::uniform());
    }
    let denom = (total + 6) as f64;
    Ok(EmotionScores {
        probs: hits.map(|h| (h + 1) as f64 / denom),
    })
}

/// Lexicon annotations for every text-bearing meme in the corpus.
pub fn annotate_with_lexicon(corpus: &Corpus) -> EmotionAnnotations {
    let by_meme = corpus
        .records
        .iter()
        .filter(|r| r.text_present)
        .map(|r| {
            let scores = classify_lexicon(&r.text).expect("text_present implies non-empty text");
            (
                r.meme_id.clone(),
                Annotation {
                    label: scores.argmax(),
                    scores: Some(scores),
                    source: AnnotationSource::Lexicon,
                },
            )
        })
        .collect();
    EmotionAnnotations { by_meme }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionCount {
    pub emotion: EmotionLabel,
    pub count: u64,
    pub percent: f64,
}

/// Emotion counts, most frequent first, with percentages of the total
/// rounded to two decimals. Emotions that never occur are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionDistribution {
    pub total: u64,
    pub rows: Vec<EmotionCount>,
}

impl EmotionDistribution {
    pub fn get(&self, emotion: EmotionLabel) -> Option<&EmotionCount> {
        self.rows.iter().find(|r| r.emotion == emotion)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["emotion", "count", "percent"]).map_err(|e| Error::csv("<emotions>", e))?;
        for r in &self.rows {
            w.write_record([r.emotion.to_string(), r.count.to_string(), format!("{:.2}", r.percent)])
                .map_err(|e| Error::csv("<emotions>", e))?;
        }
        w.flush().map_err(|e| Error::io("<emotions>", e))?;
        Ok(())
    }
}

pub fn distribution_from_counts(counts: &[(EmotionLabel, u64)]) -> Result<EmotionDistribution> {
    let mut totals = [0u64; 6];
    for &(label, c) in counts {
        totals[label.index()] += c;
    }
    let total: u64 = totals.iter().sum();
    if total == 0 {
        return Err(Error::EmptyInput("no emotion annotations".into()));
    }
    let mut rows: Vec<EmotionCount> = EmotionLabel::ALL
        .into_iter()
        .filter(|l| totals[l.index()] > 0)
        .map(|l| {
            let count = totals[l.index()];
            EmotionCount {
                emotion: l,
                count,
                percent: round2(100.0 * count as f64 / total as f64),
            }
        })
        .collect();
    // Stable sort keeps canonical order among equal counts.
    rows.sort_by_key(|r| std::cmp::Reverse(r.count));
    Ok(EmotionDistribution { total, rows })
}

pub fn emotion_distribution(ann: &EmotionAnnotations) -> Result<EmotionDistribution> {
    let mut counts = [0u64; 6];
    for a in ann.by_meme.values() {
        counts[a.label.index()] += 1;
    }
    let pairs: Vec<(EmotionLabel, u64)> = EmotionLabel::ALL.into_iter().zip(counts).collect();
    distribution_from_counts(&pairs)
}

mod dominant_serde {
    use super::EmotionLabel;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<EmotionLabel>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(v.map_or("unlabeled", EmotionLabel::as_str))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<EmotionLabel>, D::Error> {
        let s = String::deserialize(d)?;
        if s == "unlabeled" {
            return Ok(None);
        }
        s.parse().map(Some).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupEmotion {
    pub group_id: usize,
    /// Modal label among annotated members; `None` (serialized as
    /// `"unlabeled"`) when no member is annotated.
    #[serde(with = "dominant_serde")]
    pub dominant: Option<EmotionLabel>,
    pub histogram: BTreeMap<EmotionLabel, u64>,
}

pub fn group_emotions(groups: &[MemeGroup], ann: &EmotionAnnotations) -> BTreeMap<usize, GroupEmotion> {
    groups
        .iter()
        .map(|g| {
            let mut counts = [0u64; 6];
            for m in &g.members {
                if let Some(label) = ann.label(m) {
                    counts[label.index()] += 1;
                }
            }
            let any = counts.iter().any(|&c| c > 0);
            let dominant = any.then(|| argmax(&counts.map(|c| c as f64)));
            let histogram = EmotionLabel::ALL.into_iter().zip(counts).collect();
            (
                g.group_id,
                GroupEmotion {
                    group_id: g.group_id,
                    dominant,
                    histogram,
                },
            )
        })
        .collect()
}

//! Meme corpus ingestion.
//!
//! Two CSV layouts are understood: the Memotion release (`image_name`,
//! `text_corrected` and five attribute columns) and the Reddit memes dump
//! (a title plus an image column, no attribute labels). Records keep file
//! order, which is the canonical row order for every downstream matrix.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::apportioned_percents;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    Memotion,
    Reddit,
}

impl Schema {
    pub fn as_str(self) -> &'static str {
        match self {
            Schema::Memotion => "memotion",
            Schema::Reddit => "reddit",
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "memotion" => Ok(Schema::Memotion),
            "reddit" => Ok(Schema::Reddit),
            other => Err(Error::Config(format!("unknown corpus schema `{other}`"))),
        }
    }
}

/// One of the five labelled content attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Humour,
    Sarcasm,
    Offensive,
    Motivational,
    Sentiment,
}

impl Attribute {
    pub const ALL: [Attribute; 5] = [
        Attribute::Humour,
        Attribute::Sarcasm,
        Attribute::Offensive,
        Attribute::Motivational,
        Attribute::Sentiment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Humour => "humour",
            Attribute::Sarcasm => "sarcasm",
            Attribute::Offensive => "offensive",
            Attribute::Motivational => "motivational",
            Attribute::Sentiment => "sentiment",
        }
    }

    /// Column name in the Memotion CSV.
    pub fn column(self) -> &'static str {
        match self {
            Attribute::Sentiment => "overall_sentiment",
            other => other.as_str(),
        }
    }

    /// Known levels in canonical order, `unknown` excluded.
    pub fn levels(self) -> &'static [&'static str] {
        match self {
            Attribute::Humour => &["funny", "not_funny"],
            Attribute::Sarcasm => &["sarcastic", "non_sarcastic"],
            Attribute::Offensive => &["offensive", "non_offensive"],
            Attribute::Motivational => &["motivational", "non_motivational"],
            Attribute::Sentiment => &["positive", "negative", "neutral"],
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "humour" | "humor" => Ok(Attribute::Humour),
            "sarcasm" => Ok(Attribute::Sarcasm),
            "offensive" => Ok(Attribute::Offensive),
            "motivational" => Ok(Attribute::Motivational),
            "sentiment" | "overall_sentiment" => Ok(Attribute::Sentiment),
            other => Err(Error::Config(format!("unknown attribute `{other}`"))),
        }
    }
}

pub const UNKNOWN: &str = "unknown";

macro_rules! label_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant,)+
            #[default]
            Unknown,
        }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text,)+
                    $name::Unknown => UNKNOWN,
                }
            }
        }
    };
}

label_enum!(Humour { Funny => "funny", NotFunny => "not_funny" });
label_enum!(Sarcasm { Sarcastic => "sarcastic", NonSarcastic => "non_sarcastic" });
label_enum!(Offensive { Offensive => "offensive", NonOffensive => "non_offensive" });
label_enum!(Motivational { Motivational => "motivational", NonMotivational => "non_motivational" });
label_enum!(Sentiment { Positive => "positive", Negative => "negative", Neutral => "neutral" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct AttributeLabels {
    pub humour: Humour,
    pub sarcasm: Sarcasm,
    pub offensive: Offensive,
    pub motivational: Motivational,
    pub sentiment: Sentiment,
}

impl AttributeLabels {
    /// Canonical label string of one attribute (`"unknown"` when unlabeled).
    pub fn level(&self, attribute: Attribute) -> &'static str {
        match attribute {
            Attribute::Humour => self.humour.as_str(),
            Attribute::Sarcasm => self.sarcasm.as_str(),
            Attribute::Offensive => self.offensive.as_str(),
            Attribute::Motivational => self.motivational.as_str(),
            Attribute::Sentiment => self.sentiment.as_str(),
        }
    }
}

fn normalize_label(raw: &str) -> String {
    raw.trim()
        .to_lowercase()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect()
}

// Each parser returns None for strings it cannot place; the loader turns
// those into `unknown` plus a warning.

fn parse_humour(s: &str) -> Option<Humour> {
    match s {
        UNKNOWN => Some(Humour::Unknown),
        "hilarious" => Some(Humour::Funny),
        s if s.contains("funny") && s.contains("not") => Some(Humour::NotFunny),
        s if s.contains("funny") => Some(Humour::Funny),
        _ => None,
    }
}

fn parse_sarcasm(s: &str) -> Option<Sarcasm> {
    match s {
        UNKNOWN => Some(Sarcasm::Unknown),
        "not_sarcastic" | "non_sarcastic" => Some(Sarcasm::NonSarcastic),
        "sarcastic" | "general" | "twisted_meaning" | "very_twisted" => Some(Sarcasm::Sarcastic),
        _ => None,
    }
}

fn parse_offensive(s: &str) -> Option<Offensive> {
    match s {
        UNKNOWN => Some(Offensive::Unknown),
        "not_offensive" | "non_offensive" => Some(Offensive::NonOffensive),
        "offensive" | "slight" | "very_offensive" | "hateful_offensive" => {
            Some(Offensive::Offensive)
        }
        _ => None,
    }
}

fn parse_motivational(s: &str) -> Option<Motivational> {
    match s {
        UNKNOWN => Some(Motivational::Unknown),
        "not_motivational" | "non_motivational" => Some(Motivational::NonMotivational),
        "motivational" => Some(Motivational::Motivational),
        _ => None,
    }
}

fn parse_sentiment(s: &str) -> Option<Sentiment> {
    match s {
        UNKNOWN => Some(Sentiment::Unknown),
        "positive" | "very_positive" => Some(Sentiment::Positive),
        "negative" | "very_negative" => Some(Sentiment::Negative),
        "neutral" => Some(Sentiment::Neutral),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemeRecord {
    pub meme_id: String,
    pub text: String,
    pub attributes: AttributeLabels,
    pub text_present: bool,
}

impl MemeRecord {
    pub fn new(meme_id: impl Into<String>, text: impl Into<String>, attributes: AttributeLabels) -> Self {
        let text = text.into();
        let text_present = !text.trim().is_empty();
        MemeRecord {
            meme_id: meme_id.into(),
            text,
            attributes,
            text_present,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub records: Vec<MemeRecord>,
    pub source_label: String,
}

impl Corpus {
    /// Builds a corpus, rejecting empty or duplicate meme ids.
    pub fn new(records: Vec<MemeRecord>, source_label: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.meme_id.is_empty() {
                return Err(Error::Data {
                    row: i,
                    message: "empty meme id".into(),
                });
            }
            if !seen.insert(r.meme_id.as_str()) {
                return Err(Error::DuplicateId(r.meme_id.clone()));
            }
        }
        Ok(Corpus {
            records,
            source_label: source_label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.meme_id.as_str())
    }

    /// Linear scan; build [`Corpus::index`] for repeated lookups.
    pub fn get(&self, meme_id: &str) -> Option<&MemeRecord> {
        self.records.iter().find(|r| r.meme_id == meme_id)
    }

    /// Row of every meme id.
    pub fn index(&self) -> std::collections::HashMap<String, usize> {
        self.records.iter().enumerate().map(|(i, r)| (r.meme_id.clone(), i)).collect()
    }

    pub fn text_present_count(&self) -> usize {
        self.records.iter().filter(|r| r.text_present).count()
    }
}

/// An attribute value that could not be mapped and was recorded as `unknown`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadWarning {
    pub line: u64,
    pub column: String,
    pub value: String,
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}: unmapped {} value `{}` recorded as unknown",
            self.line, self.column, self.value
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub warnings: Vec<LoadWarning>,
}

fn column_index(headers: &[String], name: &str) -> Option<usize> {
    headers.iter().position(|h| h.eq_ignore_ascii_case(name))
}

fn require(headers: &[String], name: &str) -> Result<usize> {
    column_index(headers, name).ok_or_else(|| Error::Schema {
        column: name.to_string(),
    })
}

/// Loads a corpus CSV (comma separated, UTF-8, double-quote escaping, header row).
pub fn load_corpus(path: impl AsRef<Path>, schema: Schema) -> Result<LoadedCorpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(file, schema).map_err(|e| match e {
        Error::Csv { message, .. } => Error::Csv {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Reads a corpus from any reader. See [`load_corpus`].
pub fn read_corpus<R: std::io::Read>(reader: R, schema: Schema) -> Result<LoadedCorpus> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::csv("<input>", e))?
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_string())
        .collect();

    let mut warnings = Vec::new();
    let mut records = Vec::new();
    match schema {
        Schema::Memotion => {
            let id_col = require(&headers, "image_name")?;
            let text_col = require(&headers, "text_corrected")?;
            let attr_cols = Attribute::ALL
                .iter()
                .map(|a| require(&headers, a.column()).map(|i| (*a, i)))
                .collect::<Result<Vec<_>>>()?;
            for row in rdr.records() {
                let row = row.map_err(|e| Error::csv("<input>", e))?;
                let line = row.position().map_or(0, |p| p.line());
                let mut labels = AttributeLabels::default();
                for &(attr, col) in &attr_cols {
                    let raw = row.get(col).unwrap_or("");
                    if !assign_label(&mut labels, attr, raw) {
                        warnings.push(LoadWarning {
                            line,
                            column: attr.column().to_string(),
                            value: raw.to_string(),
                        });
                    }
                }
                records.push(make_record(&row, id_col, text_col, labels, line)?);
            }
        }
        Schema::Reddit => {
            let text_col = require(&headers, "title")?;
            let id_col = ["image_name", "image", "id"]
                .iter()
                .find_map(|c| column_index(&headers, c))
                .ok_or_else(|| Error::Schema {
                    column: "image_name".into(),
                })?;
            for row in rdr.records() {
                let row = row.map_err(|e| Error::csv("<input>", e))?;
                let line = row.position().map_or(0, |p| p.line());
                records.push(make_record(&row, id_col, text_col, AttributeLabels::default(), line)?);
            }
        }
    }

    let corpus = Corpus::new(records, schema.as_str())?;
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(LoadedCorpus { corpus, warnings })
}

fn make_record(
    row: &csv::StringRecord,
    id_col: usize,
    text_col: usize,
    labels: AttributeLabels,
    line: u64,
) -> Result<MemeRecord> {
    let id = row.get(id_col).unwrap_or("").trim();
    if id.is_empty() {
        return Err(Error::Parse {
            line: line as usize,
            message: "empty meme id".into(),
        });
    }
    Ok(MemeRecord::new(id, row.get(text_col).unwrap_or(""), labels))
}

/// Returns false when `raw` could not be mapped (the field is left `unknown`).
fn assign_label(labels: &mut AttributeLabels, attr: Attribute, raw: &str) -> bool {
    let norm = normalize_label(raw);
    match attr {
        Attribute::Humour => parse_humour(&norm).map(|v| labels.humour = v).is_some(),
        Attribute::Sarcasm => parse_sarcasm(&norm).map(|v| labels.sarcasm = v).is_some(),
        Attribute::Offensive => parse_offensive(&norm).map(|v| labels.offensive = v).is_some(),
        Attribute::Motivational => parse_motivational(&norm)
            .map(|v| labels.motivational = v)
            .is_some(),
        Attribute::Sentiment => parse_sentiment(&norm).map(|v| labels.sentiment = v).is_some(),
    }
}

/// Writes a corpus in the Memotion layout with canonical label strings.
pub fn write_corpus_csv<W: Write>(corpus: &Corpus, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["image_name", "text_corrected"];
    header.extend(Attribute::ALL.iter().map(|a| a.column()));
    w.write_record(&header).map_err(|e| Error::csv("<output>", e))?;
    for r in &corpus.records {
        let mut row = vec![r.meme_id.as_str(), r.text.as_str()];
        row.extend(Attribute::ALL.iter().map(|a| r.attributes.level(*a)));
        w.write_record(&row).map_err(|e| Error::csv("<output>", e))?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub label: String,
    pub count: u64,
    pub percent: f64,
}

/// Label counts and two-decimal percentages for one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub attribute: String,
    pub total: u64,
    pub rows: Vec<DistributionRow>,
}

impl DistributionTable {
    pub fn get(&self, label: &str) -> Option<&DistributionRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["label", "count", "percent"])
            .map_err(|e| Error::csv("<output>", e))?;
        for r in &self.rows {
            w.write_record([r.label.clone(), r.count.to_string(), format!("{:.2}", r.percent)])
                .map_err(|e| Error::csv("<output>", e))?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }
}

/// Counts each level of `attribute` over the corpus.
///
/// Rows follow the canonical level order with `unknown` last; only levels
/// that occur are listed. Percentages are apportioned so they total 100.00.
pub fn attribute_distribution(corpus: &Corpus, attribute: Attribute) -> Result<DistributionTable> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("corpus has no records".into()));
    }
    let mut labels: Vec<&'static str> = attribute.levels().to_vec();
    labels.push(UNKNOWN);
    let mut counts = vec![0u64; labels.len()];
    for r in &corpus.records {
        let level = r.attributes.level(attribute);
        let slot = labels.iter().position(|l| *l == level).expect("level is canonical");
        counts[slot] += 1;
    }
    let present: Vec<(&str, u64)> = labels
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(l, &c)| (*l, c))
        .collect();
    let percents = apportioned_percents(&present.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(DistributionTable {
        attribute: attribute.as_str().to_string(),
        total: corpus.len() as u64,
        rows: present
            .into_iter()
            .zip(percents)
            .map(|((label, count), percent)| DistributionRow {
                label: label.to_string(),
                count,
                percent,
            })
            .collect(),
    })
}

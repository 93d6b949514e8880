//! Emotion × attribute contingency analysis and caption word frequencies.

pub mod gamma;

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::corpus::{Attribute, Corpus, UNKNOWN};
use crate::emotion::{EmotionAnnotations, EmotionLabel};
use crate::error::{Error, Result};
use crate::util::tokenize;

pub use gamma::{chi_square_sf, gamma_p, gamma_q, ln_gamma};

/// Observed joint counts; rows and columns with no observations are dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ContingencyTable {
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != row_labels.len() {
            return Err(Error::Dimension {
                expected: row_labels.len(),
                found: counts.len(),
            });
        }
        for row in &counts {
            if row.len() != col_labels.len() {
                return Err(Error::Dimension {
                    expected: col_labels.len(),
                    found: row.len(),
                });
            }
        }
        let mut notes = Vec::new();
        let keep_rows: Vec<usize> = (0..counts.len())
            .filter(|&r| {
                let nonzero = counts[r].iter().any(|&c| c > 0);
                if !nonzero {
                    notes.push(format!("pruned empty row `{}`", row_labels[r]));
                }
                nonzero
            })
            .collect();
        let keep_cols: Vec<usize> = (0..col_labels.len())
            .filter(|&c| {
                let nonzero = counts.iter().any(|row| row[c] > 0);
                if !nonzero {
                    notes.push(format!("pruned empty column `{}`", col_labels[c]));
                }
                nonzero
            })
            .collect();
        let table = ContingencyTable {
            row_labels: keep_rows.iter().map(|&r| row_labels[r].clone()).collect(),
            col_labels: keep_cols.iter().map(|&c| col_labels[c].clone()).collect(),
            counts: keep_rows
                .iter()
                .map(|&r| keep_cols.iter().map(|&c| counts[r][c]).collect())
                .collect(),
            notes,
        };
        if table.row_labels.len() < 2 || table.col_labels.len() < 2 {
            return Err(Error::Degenerate(format!(
                "contingency table is {}×{} after pruning; at least 2×2 is required",
                table.row_labels.len(),
                table.col_labels.len()
            )));
        }
        Ok(table)
    }

    /// Convenience constructor with numbered labels.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let rows = (0..counts.len()).map(|i| format!("r{i}")).collect();
        let cols = (0..counts.first().map_or(0, Vec::len)).map(|i| format!("c{i}")).collect();
        Self::new(rows, cols, counts)
    }

    pub fn grand_total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.col_labels.len())
            .map(|c| self.counts.iter().map(|r| r[c]).sum())
            .collect()
    }
}

/// Joint counts of emotion (rows, canonical order) by attribute level
/// (columns, canonical order) over memes that carry both. `unknown`
/// attribute values are left out.
pub fn crosstab(ann: &EmotionAnnotations, corpus: &Corpus, attribute: Attribute) -> Result<ContingencyTable> {
    let levels = attribute.levels();
    let mut counts = vec![vec![0u64; levels.len()]; 6];
    let mut overlap = 0u64;
    for r in &corpus.records {
        let Some(label) = ann.label(&r.meme_id) else { continue };
        let level = r.attributes.level(attribute);
        if level == UNKNOWN {
            continue;
        }
        let col = levels.iter().position(|l| *l == level).expect("canonical level");
        counts[label.index()][col] += 1;
        overlap += 1;
    }
    if overlap == 0 {
        return Err(Error::EmptyInput(format!(
            "no meme carries both an emotion and a `{attribute}` label"
        )));
    }
    // Only emotions and levels that occur; prune silently here since they
    // were never part of the observed table.
    let rows: Vec<usize> = (0..6).filter(|&e| counts[e].iter().any(|&c| c > 0)).collect();
    let cols: Vec<usize> = (0..levels.len()).filter(|&c| counts.iter().any(|r| r[c] > 0)).collect();
    ContingencyTable::new(
        rows.iter().map(|&e| EmotionLabel::ALL[e].to_string()).collect(),
        cols.iter().map(|&c| levels[c].to_string()).collect(),
        rows.iter().map(|&e| cols.iter().map(|&c| counts[e][c]).collect()).collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
}

/// Pearson's χ² test of independence. With `yates`, the continuity
/// correction is applied to tables with one degree of freedom.
pub fn chi_square(table: &ContingencyTable, yates: bool) -> Result<ChiSquareResult> {
    let total = table.grand_total();
    if total == 0 {
        return Err(Error::Degenerate("contingency table is empty".into()));
    }
    let (rt, ct) = (table.row_totals(), table.col_totals());
    let df = ((rt.len() - 1) * (ct.len() - 1)) as u32;
    let correct = yates && df == 1;
    let n = total as f64;
    let mut statistic = 0.0;
    for (r, row) in table.counts.iter().enumerate() {
        for (c, &obs) in row.iter().enumerate() {
            let expected = rt[r] as f64 * ct[c] as f64 / n;
            let mut diff = (obs as f64 - expected).abs();
            if correct {
                diff = (diff - 0.5).max(0.0);
            }
            statistic += diff * diff / expected;
        }
    }
    Ok(ChiSquareResult {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareReport {
    pub attribute: Attribute,
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub table: ContingencyTable,
}

pub fn chi_square_report(
    ann: &EmotionAnnotations,
    corpus: &Corpus,
    attribute: Attribute,
    yates: bool,
) -> Result<ChiSquareReport> {
    let table = crosstab(ann, corpus, attribute)?;
    let r = chi_square(&table, yates)?;
    Ok(ChiSquareReport {
        attribute,
        statistic: r.statistic,
        df: r.df,
        p_value: r.p_value,
        table,
    })
}

/// Bundled English stopword list.
pub fn default_stopwords() -> &'static HashSet<String> {
    static WORDS: OnceLock<HashSet<String>> = OnceLock::new();
    WORDS.get_or_init(|| parse_stopwords(include_str!("../../data/stopwords.txt")))
}

/// One word per line; blank lines and `#` comments ignored.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCount {
    pub token: String,
    pub count: u64,
}

/// Token counts over `texts`, most frequent first (ties alphabetical),
/// truncated to `top_k`. Tokens shorter than two characters and stopwords
/// are skipped.
pub fn word_frequencies<S: AsRef<str>>(texts: &[S], stopwords: &HashSet<String>, top_k: usize) -> Result<Vec<TokenCount>> {
    if top_k == 0 {
        return Err(Error::Config("top_k must be at least 1".into()));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for t in texts {
        for tok in tokenize(t.as_ref()) {
            if tok.chars().count() < 2 || stopwords.contains(&tok) {
                continue;
            }
            *counts.entry(tok).or_default() += 1;
        }
    }
    let mut out: Vec<TokenCount> = counts.into_iter().map(|(token, count)| TokenCount { token, count }).collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.token.cmp(&b.token)));
    out.truncate(top_k);
    Ok(out)
}

/// Word frequencies of the captions carrying each emotion.
pub fn word_frequencies_by_emotion(
    ann: &EmotionAnnotations,
    corpus: &Corpus,
    stopwords: &HashSet<String>,
    top_k: usize,
) -> Result<Vec<(EmotionLabel, Vec<TokenCount>)>> {
    EmotionLabel::ALL
        .into_iter()
        .map(|label| {
            let texts: Vec<&str> = corpus
                .records
                .iter()
                .filter(|r| ann.label(&r.meme_id) == Some(label))
                .map(|r| r.text.as_str())
                .collect();
            Ok((label, word_frequencies(&texts, stopwords, top_k)?))
        })
        .collect()
}

pub fn write_frequencies_csv<W: Write>(freqs: &[TokenCount], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["token", "count"]).map_err(|e| Error::csv("<frequencies>", e))?;
    for f in freqs {
        w.write_record([f.token.as_str(), &f.count.to_string()])
            .map_err(|e| Error::csv("<frequencies>", e))?;
    }
    w.flush().map_err(|e| Error::io("<frequencies>", e))?;
    Ok(())
}

//! Cosine similarity, four-way cross-modal pair scores, and the thresholded
//! all-pairs edge list.

mod io;
mod kernel;
mod loss;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding::AlignedStore;
use crate::error::{Error, Result};

pub use io::{decode_edges_bin, encode_edges_bin, read_edges_csv, write_edges_csv, EDGE_MAGIC};
pub use loss::{contrastive_loss, ContrastiveLoss};

pub const DEFAULT_THRESHOLD: f64 = 0.8;
pub const DEFAULT_TILE: usize = 256;

/// Cosine of the angle between `a` and `b`, accumulated in f64.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Precondition("cosine of empty vectors".into()));
    }
    let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        let row = usize::from(aa != 0.0);
        return Err(Error::DegenerateVector {
            row,
            id: if row == 0 { "first argument".into() } else { "second argument".into() },
        });
    }
    Ok(ab / (aa.sqrt() * bb.sqrt()))
}

/// The four cosine scores between two memes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalityScores {
    /// image ↔ image
    pub ii: f64,
    /// text ↔ text
    pub tt: f64,
    /// image of the first ↔ text of the second
    pub it: f64,
    /// text of the first ↔ image of the second
    pub ti: f64,
}

impl ModalityScores {
    pub fn new(ii: f64, tt: f64, it: f64, ti: f64) -> Self {
        ModalityScores { ii, tt, it, ti }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.ii, self.tt, self.it, self.ti]
    }

    fn from_array(s: [f64; 4]) -> Self {
        ModalityScores::new(s[0], s[1], s[2], s[3])
    }
}

/// How the four scores are fused into one decision value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    #[default]
    Mean,
    Min,
    Max,
    /// Weights for (ii, tt, it, ti); non-negative, summing to 1.
    Weighted([f64; 4]),
}

impl AggregationMode {
    pub fn validate(&self) -> Result<()> {
        if let AggregationMode::Weighted(w) = self {
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Config(format!("aggregation weights must be non-negative: {w:?}")));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("aggregation weights sum to {sum}, expected 1")));
            }
        }
        Ok(())
    }

    #[inline]
    fn apply(&self, s: [f64; 4]) -> f64 {
        match self {
            AggregationMode::Mean => ((s[0] + s[1]) + (s[2] + s[3])) / 4.0,
            AggregationMode::Min => s.iter().copied().fold(f64::INFINITY, f64::min),
            AggregationMode::Max => s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            AggregationMode::Weighted(w) => {
                (w[0] * s[0] + w[1] * s[1]) + (w[2] * s[2] + w[3] * s[3])
            }
        }
    }
}

impl fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregationMode::Mean => f.write_str("mean"),
            AggregationMode::Min => f.write_str("min"),
            AggregationMode::Max => f.write_str("max"),
            AggregationMode::Weighted(w) => write!(f, "weighted={},{},{},{}", w[0], w[1], w[2], w[3]),
        }
    }
}

impl FromStr for AggregationMode {
    type Err = Error;

    /// Accepts `mean`, `min`, `max` or `weighted=w_ii,w_tt,w_it,w_ti`.
    fn from_str(s: &str) -> Result<Self> {
        let mode = match s.trim() {
            "mean" => AggregationMode::Mean,
            "min" => AggregationMode::Min,
            "max" => AggregationMode::Max,
            other => {
                let weights = other
                    .strip_prefix("weighted=")
                    .ok_or_else(|| Error::Config(format!("unknown aggregation mode `{other}`")))?;
                let parsed: Vec<f64> = weights
                    .split(',')
                    .map(|w| w.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Config(format!("bad aggregation weight: {e}")))?;
                let w: [f64; 4] = parsed
                    .try_into()
                    .map_err(|_| Error::Config("weighted mode takes exactly four weights".into()))?;
                AggregationMode::Weighted(w)
            }
        };
        mode.validate()?;
        Ok(mode)
    }
}

/// Fuses four scores into one value.
pub fn aggregate(scores: &ModalityScores, mode: &AggregationMode) -> Result<f64> {
    mode.validate()?;
    Ok(mode.apply(scores.as_array()))
}

/// A linked meme pair, `src < dst`, indices into the aligned store.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityEdge {
    pub src: usize,
    pub dst: usize,
    pub scores: ModalityScores,
    pub combined: f64,
}

/// Scores between memes `i` and `j` of the store, computed directly from the
/// stored vectors.
pub fn pair_scores(store: &AlignedStore, i: usize, j: usize) -> Result<ModalityScores> {
    let n = store.len();
    for idx in [i, j] {
        if idx >= n {
            return Err(Error::Index { index: idx, len: n });
        }
    }
    if i == j {
        return Err(Error::Precondition("pair scores need two distinct memes".into()));
    }
    let tag = |e: Error| match e {
        Error::DegenerateVector { row, .. } => {
            let r = if row == 0 { i } else { j };
            Error::DegenerateVector {
                row: r,
                id: store.id(r).to_string(),
            }
        }
        other => other,
    };
    let (img, txt) = (&store.image, &store.text);
    Ok(ModalityScores {
        ii: cosine(img.row(i), img.row(j)).map_err(tag)?,
        tt: cosine(txt.row(i), txt.row(j)).map_err(tag)?,
        it: cosine(img.row(i), txt.row(j)).map_err(tag)?,
        ti: cosine(txt.row(i), img.row(j)).map_err(tag)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelOptions {
    /// Worker threads; 0 uses the machine's parallelism.
    pub threads: usize,
    /// Rows per tile side.
    pub tile: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            threads: 0,
            tile: DEFAULT_TILE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeReport {
    /// Sorted by `(src, dst)`.
    pub edges: Vec<SimilarityEdge>,
    /// Meme ids with an all-zero image or text vector; their pairs were skipped.
    pub degenerate: Vec<String>,
}

/// All pairs `i < j` whose aggregated score is at least `threshold`.
pub fn pairwise_edges(
    store: &AlignedStore,
    threshold: f64,
    mode: &AggregationMode,
    options: KernelOptions,
) -> Result<EdgeReport> {
    if store.is_empty() {
        return Err(Error::EmptyInput("aligned store has no rows".into()));
    }
    if !(-1.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!("threshold {threshold} outside [-1, 1]")));
    }
    mode.validate()?;

    let image = kernel::UnitRows::new(&store.image);
    let text = kernel::UnitRows::new(&store.text);
    let degenerate: Vec<String> = (0..store.len())
        .filter(|&i| image.is_degenerate(i) || text.is_degenerate(i))
        .map(|i| store.id(i).to_string())
        .collect();
    for id in &degenerate {
        log::warn!("meme `{id}` has an all-zero embedding; its pairs are skipped");
    }

    let keep = |s: [f64; 4]| {
        let c = mode.apply(s);
        (c >= threshold).then_some(c)
    };
    let run = || kernel::tiled_pairs(&image, &text, store.len(), options.tile, keep);
    let raw = if options.threads == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(options.threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?
            .install(run)
    };
    let edges = raw
        .into_iter()
        .map(|e| SimilarityEdge {
            src: e.src,
            dst: e.dst,
            scores: ModalityScores::from_array(e.scores),
            combined: e.combined,
        })
        .collect();
    Ok(EdgeReport { edges, degenerate })
}

/// Re-expresses edges over the rows of `from_ids` as edges over the rows of
/// `index`, keeping `src < dst` (the cross-modal scores swap when a pair
/// flips).
pub fn reindex_edges(
    edges: &[SimilarityEdge],
    from_ids: &[String],
    index: &std::collections::HashMap<String, usize>,
) -> Result<Vec<SimilarityEdge>> {
    let map = |row: usize| -> Result<usize> {
        let id = from_ids.get(row).ok_or(Error::Index {
            index: row,
            len: from_ids.len(),
        })?;
        index.get(id).copied().ok_or_else(|| Error::Lookup(id.clone()))
    };
    let mut out = edges
        .iter()
        .map(|e| {
            let (a, b) = (map(e.src)?, map(e.dst)?);
            Ok(if a < b {
                SimilarityEdge { src: a, dst: b, ..*e }
            } else {
                let s = e.scores;
                SimilarityEdge {
                    src: b,
                    dst: a,
                    scores: ModalityScores::new(s.ii, s.tt, s.ti, s.it),
                    combined: e.combined,
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by_key(|e| (e.src, e.dst));
    Ok(out)
}

//! Embedding matrices, their on-disk format, and alignment to a corpus.
//!
//! Binary layout (little-endian):
//!
//! | offset | size | field                                  |
//! |-------:|-----:|----------------------------------------|
//! | 0      | 16   | magic `MEMEEMB1`, NUL padded           |
//! | 16     | 1    | version (= 1)                          |
//! | 17     | 1    | modality (0 = image, 1 = text)         |
//! | 18     | 1    | normalized flag                        |
//! | 19     | 4    | rows N (u32)                           |
//! | 23     | 4    | dim D (u32)                            |
//! | 27     | 8    | reserved f64 (= 0)                     |
//! | 35     | 4    | CRC32 of bytes 0..35                   |
//! | 39     | 2    | reserved u16 (= 0)                     |
//! | 41     | 4·N·D| row-major f32 payload                  |
//!
//! The manifest is a UTF-8 text file with one meme id per line.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const EMBEDDING_MAGIC: &[u8; 8] = b"MEMEEMB1";
pub const EMBEDDING_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 41;
const CRC_OFFSET: usize = 35;

/// Row norms of a matrix flagged as normalized must lie within this of 1.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Image,
    Text,
}

impl Modality {
    fn code(self) -> u8 {
        match self {
            Modality::Image => 0,
            Modality::Text => 1,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Modality::Image),
            1 => Ok(Modality::Text),
            other => Err(Error::Format(format!("unknown modality code {other}"))),
        }
    }
}

/// An N×D row-major matrix of f32 vectors for one modality.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    modality: Modality,
    dim: usize,
    data: Vec<f32>,
    normalized: bool,
}

fn row_norm(row: &[f32]) -> f64 {
    row.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
}

impl EmbeddingMatrix {
    pub fn new(modality: Modality, dim: usize, data: Vec<f32>, normalized: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Precondition("embedding dimension must be at least 1".into()));
        }
        if data.is_empty() {
            return Err(Error::Precondition("embedding matrix must have at least one row".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::Dimension {
                expected: dim,
                found: data.len() % dim,
            });
        }
        let m = EmbeddingMatrix {
            modality,
            dim,
            data,
            normalized,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(modality: Modality, rows: &[Vec<f32>], normalized: bool) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(modality, dim, data, normalized)
    }

    fn validate(&self) -> Result<()> {
        for (i, row) in self.rows().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data {
                    row: i,
                    message: format!("non-finite value {} at column {j}", row[j]),
                });
            }
            if self.normalized {
                let n = row_norm(row);
                if (n - 1.0).abs() > UNIT_NORM_TOLERANCE {
                    return Err(Error::Data {
                        row: i,
                        message: format!("row flagged normalized has L2 norm {n}"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// New matrix with rows taken from `order` (row i of the result is
    /// `self.row(order[i])`).
    pub fn select_rows(&self, order: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(order.len() * self.dim);
        for &i in order {
            if i >= self.len() {
                return Err(Error::Index {
                    index: i,
                    len: self.len(),
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(self.modality, self.dim, data, self.normalized)
    }
}

/// Scales every row to unit L2 norm. Fails on an all-zero row.
pub fn l2_normalize(matrix: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let mut data = Vec::with_capacity(matrix.data.len());
    for (i, row) in matrix.rows().enumerate() {
        let norm = row_norm(row);
        if norm == 0.0 {
            return Err(Error::DegenerateVector {
                row: i,
                id: format!("row {i}"),
            });
        }
        data.extend(row.iter().map(|&v| (v as f64 / norm) as f32));
    }
    Ok(EmbeddingMatrix {
        modality: matrix.modality,
        dim: matrix.dim,
        data,
        normalized: true,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingManifest {
    ids: Vec<String>,
}

impl EmbeddingManifest {
    pub fn new(ids: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if id.is_empty() {
                return Err(Error::Format("empty id in embedding manifest".into()));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(EmbeddingManifest { ids })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

pub fn encode_header(matrix: &EmbeddingMatrix) -> Result<[u8; HEADER_LEN]> {
    let n = u32::try_from(matrix.len())
        .map_err(|_| Error::Format("row count does not fit in u32".into()))?;
    let d = u32::try_from(matrix.dim)
        .map_err(|_| Error::Format("dimension does not fit in u32".into()))?;
    let mut h = [0u8; HEADER_LEN];
    h[..8].copy_from_slice(EMBEDDING_MAGIC);
    h[16] = EMBEDDING_VERSION;
    h[17] = matrix.modality.code();
    h[18] = matrix.normalized as u8;
    h[19..23].copy_from_slice(&n.to_le_bytes());
    h[23..27].copy_from_slice(&d.to_le_bytes());
    h[27..35].copy_from_slice(&0f64.to_le_bytes());
    let crc = crc32fast::hash(&h[..CRC_OFFSET]);
    h[35..39].copy_from_slice(&crc.to_le_bytes());
    Ok(h)
}

/// Serializes a matrix to the binary embedding format.
pub fn encode_embeddings(matrix: &EmbeddingMatrix) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(HEADER_LEN + matrix.data.len() * 4);
    buf.extend_from_slice(&encode_header(matrix)?);
    for v in &matrix.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

/// Parses the binary embedding format. Payload values are taken bit-for-bit.
pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    let mut magic = [0u8; 16];
    magic[..8].copy_from_slice(EMBEDDING_MAGIC);
    if bytes[..16] != magic {
        return Err(Error::Format("bad magic, not a MEMEEMB1 file".into()));
    }
    let stored_crc = u32::from_le_bytes(bytes[35..39].try_into().unwrap());
    let crc = crc32fast::hash(&bytes[..CRC_OFFSET]);
    if stored_crc != crc {
        return Err(Error::Format(format!(
            "header checksum mismatch (stored {stored_crc:08x}, computed {crc:08x})"
        )));
    }
    if bytes[16] != EMBEDDING_VERSION {
        return Err(Error::Format(format!("unsupported version {}", bytes[16])));
    }
    let modality = Modality::from_code(bytes[17])?;
    let normalized = match bytes[18] {
        0 => false,
        1 => true,
        other => return Err(Error::Format(format!("invalid normalized flag {other}"))),
    };
    let n = u32::from_le_bytes(bytes[19..23].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[23..27].try_into().unwrap()) as usize;
    let expected = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload is {} bytes, header declares {n}×{d} ({expected} bytes)",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EmbeddingMatrix::new(modality, d, data, normalized)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<EmbeddingManifest> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ids = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let id = line.strip_suffix('\r').unwrap_or(&line);
        if !id.is_empty() {
            ids.push(id.to_string());
        }
    }
    EmbeddingManifest::new(ids)
}

/// Reads a binary matrix and its manifest, checking that they agree.
pub fn read_embeddings(
    bin_path: impl AsRef<Path>,
    manifest_path: impl AsRef<Path>,
) -> Result<(EmbeddingMatrix, EmbeddingManifest)> {
    let bin_path = bin_path.as_ref();
    let bytes = fs::read(bin_path).map_err(|e| Error::io(bin_path, e))?;
    let matrix = decode_embeddings(&bytes)?;
    let manifest = read_manifest(manifest_path)?;
    if manifest.len() != matrix.len() {
        return Err(Error::Alignment(format!(
            "manifest lists {} ids but the matrix has {} rows",
            manifest.len(),
            matrix.len()
        )));
    }
    Ok((matrix, manifest))
}

pub fn write_embeddings(
    matrix: &EmbeddingMatrix,
    manifest: &EmbeddingManifest,
    bin_path: impl AsRef<Path>,
    manifest_path: impl AsRef<Path>,
) -> Result<()> {
    if manifest.len() != matrix.len() {
        return Err(Error::Alignment(format!(
            "manifest lists {} ids but the matrix has {} rows",
            manifest.len(),
            matrix.len()
        )));
    }
    let bin_path = bin_path.as_ref();
    fs::write(bin_path, encode_embeddings(matrix)?).map_err(|e| Error::io(bin_path, e))?;
    let manifest_path = manifest_path.as_ref();
    let mut text = String::with_capacity(manifest.ids.iter().map(|s| s.len() + 1).sum());
    for id in &manifest.ids {
        text.push_str(id);
        text.push('\n');
    }
    fs::write(manifest_path, text).map_err(|e| Error::io(manifest_path, e))
}

#[derive(Deserialize)]
struct JsonlRow {
    id: String,
    vec: Vec<f32>,
}

/// Reads the JSONL interchange form: one `{"id": …, "vec": […]}` per line.
pub fn read_embeddings_jsonl(
    path: impl AsRef<Path>,
    modality: Modality,
) -> Result<(EmbeddingMatrix, EmbeddingManifest)> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ids = Vec::new();
    let mut data = Vec::new();
    let mut dim = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonlRow = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let d = *dim.get_or_insert(row.vec.len());
        if row.vec.len() != d {
            return Err(Error::Dimension {
                expected: d,
                found: row.vec.len(),
            });
        }
        ids.push(row.id);
        data.extend(row.vec);
    }
    let matrix = EmbeddingMatrix::new(modality, dim.unwrap_or(0), data, false)?;
    Ok((matrix, EmbeddingManifest::new(ids)?))
}

/// Loads embeddings by file extension: `.jsonl` uses the JSONL reader,
/// anything else is the binary format with its manifest alongside
/// (same path, `.ids` extension).
pub fn load_embeddings_auto(
    path: impl AsRef<Path>,
    modality: Modality,
) -> Result<(EmbeddingMatrix, EmbeddingManifest)> {
    let path = path.as_ref();
    let (m, ids) = if path.extension().is_some_and(|e| e == "jsonl") {
        read_embeddings_jsonl(path, modality)?
    } else {
        read_embeddings(path, path.with_extension("ids"))?
    };
    if m.modality() != modality {
        return Err(Error::Format(format!(
            "{} holds {:?} embeddings, expected {:?}",
            path.display(),
            m.modality(),
            modality
        )));
    }
    Ok((m, ids))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignPolicy {
    Strict,
    #[default]
    Intersect,
}

impl std::str::FromStr for AlignPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(AlignPolicy::Strict),
            "intersect" => Ok(AlignPolicy::Intersect),
            other => Err(Error::Config(format!("unknown alignment policy `{other}`"))),
        }
    }
}

/// Corpus records paired with their image and text rows, in corpus order.
#[derive(Debug, Clone)]
pub struct AlignedStore {
    pub corpus: Corpus,
    pub image: EmbeddingMatrix,
    pub text: EmbeddingMatrix,
    index: HashMap<String, usize>,
}

impl AlignedStore {
    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.image.dim()
    }

    pub fn row_of(&self, meme_id: &str) -> Option<usize> {
        self.index.get(meme_id).copied()
    }

    pub fn id(&self, row: usize) -> &str {
        &self.corpus.records[row].meme_id
    }

    pub fn ids(&self) -> Vec<String> {
        self.corpus.ids().map(str::to_string).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub store: AlignedStore,
    /// Corpus ids left out because one or both embeddings are missing.
    pub excluded: Vec<String>,
}

/// Reorders both matrices into corpus order.
pub fn align(
    corpus: &Corpus,
    image: (&EmbeddingMatrix, &EmbeddingManifest),
    text: (&EmbeddingMatrix, &EmbeddingManifest),
    policy: AlignPolicy,
) -> Result<Alignment> {
    let (img, img_ids) = image;
    let (txt, txt_ids) = text;
    if img.dim() != txt.dim() {
        return Err(Error::Dimension {
            expected: img.dim(),
            found: txt.dim(),
        });
    }
    for (m, ids) in [(img, img_ids), (txt, txt_ids)] {
        if m.len() != ids.len() {
            return Err(Error::Alignment(format!(
                "{:?} manifest lists {} ids for {} rows",
                m.modality(),
                ids.len(),
                m.len()
            )));
        }
    }
    let img_rows: HashMap<&str, usize> = img_ids.ids().iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let txt_rows: HashMap<&str, usize> = txt_ids.ids().iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let corpus_ids: HashSet<&str> = corpus.ids().collect();

    let stray: Vec<&str> = img_ids
        .ids()
        .iter()
        .chain(txt_ids.ids())
        .map(String::as_str)
        .filter(|id| !corpus_ids.contains(id))
        .collect();
    if !stray.is_empty() {
        return Err(Error::Alignment(format!(
            "embedding ids not present in the corpus: {}",
            stray.join(", ")
        )));
    }

    let mut records = Vec::new();
    let mut img_order = Vec::new();
    let mut txt_order = Vec::new();
    let mut excluded = Vec::new();
    for r in &corpus.records {
        match (img_rows.get(r.meme_id.as_str()), txt_rows.get(r.meme_id.as_str())) {
            (Some(&i), Some(&t)) => {
                records.push(r.clone());
                img_order.push(i);
                txt_order.push(t);
            }
            _ => excluded.push(r.meme_id.clone()),
        }
    }
    if policy == AlignPolicy::Strict && !excluded.is_empty() {
        return Err(Error::Alignment(format!(
            "missing embeddings for: {}",
            excluded.join(", ")
        )));
    }
    if records.is_empty() {
        return Err(Error::EmptyInput("no corpus record has both embeddings".into()));
    }
    if !excluded.is_empty() {
        log::warn!(
            "{} of {} memes excluded for missing embeddings",
            excluded.len(),
            corpus.len()
        );
    }
    let index = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.meme_id.clone(), i))
        .collect();
    Ok(Alignment {
        store: AlignedStore {
            corpus: Corpus::new(records, corpus.source_label.clone())?,
            image: img.select_rows(&img_order)?,
            text: txt.select_rows(&txt_order)?,
            index,
        },
        excluded,
    })
}

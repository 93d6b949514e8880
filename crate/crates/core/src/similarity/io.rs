//! Edge list formats.
//!
//! CSV: `src_id,dst_id,sim_ii,sim_tt,sim_it,sim_ti,combined`, scores at six
//! decimals. Binary: 16-byte magic `MEMEEDG1` (NUL padded), u8 version, u32
//! edge count, u32 CRC32 of the preceding 21 bytes, then per edge
//! `u32 src, u32 dst, f32 × 5` little-endian (row indices, not ids).

use std::collections::HashMap;
use std::io::{Read, Write};

use super::{ModalityScores, SimilarityEdge};
use crate::error::{Error, Result};

pub const EDGE_MAGIC: &[u8; 8] = b"MEMEEDG1";
const EDGE_VERSION: u8 = 1;
const EDGE_HEADER_LEN: usize = 25;
const EDGE_RECORD_LEN: usize = 28;

pub const EDGE_CSV_HEADER: [&str; 7] = ["src_id", "dst_id", "sim_ii", "sim_tt", "sim_it", "sim_ti", "combined"];

pub fn write_edges_csv<W: Write>(edges: &[SimilarityEdge], ids: &[String], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(EDGE_CSV_HEADER).map_err(|e| Error::csv("<edges>", e))?;
    for e in edges {
        let id = |i: usize| {
            ids.get(i).ok_or(Error::Index {
                index: i,
                len: ids.len(),
            })
        };
        let s = &e.scores;
        w.write_record([
            id(e.src)?.as_str(),
            id(e.dst)?.as_str(),
            &format!("{:.6}", s.ii),
            &format!("{:.6}", s.tt),
            &format!("{:.6}", s.it),
            &format!("{:.6}", s.ti),
            &format!("{:.6}", e.combined),
        ])
        .map_err(|e| Error::csv("<edges>", e))?;
    }
    w.flush().map_err(|e| Error::io("<edges>", e))?;
    Ok(())
}

/// Reads an edge CSV, resolving ids through `index`. Pairs are oriented so
/// that `src < dst` (swapping the two cross-modal scores when needed).
pub fn read_edges_csv<R: Read>(reader: R, index: &HashMap<String, usize>) -> Result<Vec<SimilarityEdge>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::csv("<edges>", e))?.clone();
    for col in EDGE_CSV_HEADER {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Schema { column: col.into() });
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let cols: Vec<usize> = EDGE_CSV_HEADER.iter().map(|c| col(c)).collect();
    let mut edges = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv("<edges>", e))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let lookup = |k: usize| {
            let id = row.get(cols[k]).unwrap_or("");
            index.get(id).copied().ok_or_else(|| Error::Lookup(id.to_string()))
        };
        let num = |k: usize| {
            row.get(cols[k]).unwrap_or("").parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("{}: {e}", EDGE_CSV_HEADER[k]),
            })
        };
        let (a, b) = (lookup(0)?, lookup(1)?);
        let (ii, tt, it, ti, combined) = (num(2)?, num(3)?, num(4)?, num(5)?, num(6)?);
        let edge = match a.cmp(&b) {
            std::cmp::Ordering::Less => SimilarityEdge {
                src: a,
                dst: b,
                scores: ModalityScores::new(ii, tt, it, ti),
                combined,
            },
            std::cmp::Ordering::Greater => SimilarityEdge {
                src: b,
                dst: a,
                scores: ModalityScores::new(ii, tt, ti, it),
                combined,
            },
            std::cmp::Ordering::Equal => {
                return Err(Error::Parse {
                    line,
                    message: "self edge".into(),
                })
            }
        };
        edges.push(edge);
    }
    Ok(edges)
}

pub fn encode_edges_bin(edges: &[SimilarityEdge]) -> Result<Vec<u8>> {
    let count = u32::try_from(edges.len()).map_err(|_| Error::Format("too many edges for u32 count".into()))?;
    let mut buf = Vec::with_capacity(EDGE_HEADER_LEN + edges.len() * EDGE_RECORD_LEN);
    buf.extend_from_slice(EDGE_MAGIC);
    buf.extend_from_slice(&[0u8; 8]);
    buf.push(EDGE_VERSION);
    buf.extend_from_slice(&count.to_le_bytes());
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    for e in edges {
        for idx in [e.src, e.dst] {
            let v = u32::try_from(idx).map_err(|_| Error::Format("row index exceeds u32".into()))?;
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let s = &e.scores;
        for v in [s.ii, s.tt, s.it, s.ti, e.combined] {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(buf)
}

pub fn decode_edges_bin(bytes: &[u8]) -> Result<Vec<SimilarityEdge>> {
    if bytes.len() < EDGE_HEADER_LEN {
        return Err(Error::Format("edge file shorter than its header".into()));
    }
    let mut magic = [0u8; 16];
    magic[..8].copy_from_slice(EDGE_MAGIC);
    if bytes[..16] != magic {
        return Err(Error::Format("bad magic, not a MEMEEDG1 file".into()));
    }
    let crc = u32::from_le_bytes(bytes[21..25].try_into().unwrap());
    if crc != crc32fast::hash(&bytes[..21]) {
        return Err(Error::Format("edge header checksum mismatch".into()));
    }
    if bytes[16] != EDGE_VERSION {
        return Err(Error::Format(format!("unsupported edge format version {}", bytes[16])));
    }
    let count = u32::from_le_bytes(bytes[17..21].try_into().unwrap()) as usize;
    let body = &bytes[EDGE_HEADER_LEN..];
    if body.len() != count * EDGE_RECORD_LEN {
        return Err(Error::Format(format!(
            "edge payload is {} bytes, header declares {count} edges",
            body.len()
        )));
    }
    Ok(body
        .chunks_exact(EDGE_RECORD_LEN)
        .map(|r| {
            let u = |o: usize| u32::from_le_bytes(r[o..o + 4].try_into().unwrap()) as usize;
            let f = |o: usize| f32::from_le_bytes(r[o..o + 4].try_into().unwrap()) as f64;
            SimilarityEdge {
                src: u(0),
                dst: u(4),
                scores: ModalityScores::new(f(8), f(12), f(16), f(20)),
                combined: f(24),
            }
        })
        .collect())
}

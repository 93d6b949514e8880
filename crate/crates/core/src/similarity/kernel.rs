//! Tiled all-pairs kernel over unit-normalized rows.
//!
//! Rows are widened to f64 and normalized once, so each score is a plain dot
//! product. Every pair is evaluated by the same [`dot`] call regardless of
//! tile size or scheduling, and tiles are concatenated in a fixed order, so
//! the result does not depend on the thread count.

use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;

/// f64 copy of a matrix with every non-zero row scaled to unit length.
/// All-zero rows are kept as zeros and flagged.
pub(crate) struct UnitRows {
    dim: usize,
    data: Vec<f64>,
    degenerate: Vec<bool>,
}

impl UnitRows {
    pub(crate) fn new(matrix: &EmbeddingMatrix) -> Self {
        let dim = matrix.dim();
        let mut data = Vec::with_capacity(matrix.len() * dim);
        let mut degenerate = Vec::with_capacity(matrix.len());
        for row in matrix.rows() {
            let norm = row.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
            if norm == 0.0 {
                data.extend(std::iter::repeat_n(0.0, dim));
                degenerate.push(true);
            } else {
                data.extend(row.iter().map(|&v| v as f64 / norm));
                degenerate.push(false);
            }
        }
        UnitRows {
            dim,
            data,
            degenerate,
        }
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn is_degenerate(&self, i: usize) -> bool {
        self.degenerate[i]
    }
}

/// Dot product with eight independent accumulators combined in a fixed tree.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ac = a.chunks_exact(8);
    let bc = b.chunks_exact(8);
    let (ar, br) = (ac.remainder(), bc.remainder());
    for (x, y) in ac.zip(bc) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ar.iter().zip(br) {
        tail += x * y;
    }
    (((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))) + tail
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RawEdge {
    pub src: usize,
    pub dst: usize,
    pub scores: [f64; 4],
    pub combined: f64,
}

/// Visits every pair `i < j` (both rows valid) in tiles of `tile` rows and
/// keeps those for which `keep` returns a combined score.
pub(crate) fn tiled_pairs<F>(
    image: &UnitRows,
    text: &UnitRows,
    n: usize,
    tile: usize,
    keep: F,
) -> Vec<RawEdge>
where
    F: Fn([f64; 4]) -> Option<f64> + Sync,
{
    let tile = tile.max(1);
    let blocks = n.div_ceil(tile);
    let tiles: Vec<(usize, usize)> = (0..blocks)
        .flat_map(|bi| (bi..blocks).map(move |bj| (bi, bj)))
        .collect();
    let valid = |i: usize| !image.is_degenerate(i) && !text.is_degenerate(i);

    let per_tile: Vec<Vec<RawEdge>> = tiles
        .par_iter()
        .map(|&(bi, bj)| {
            let mut out = Vec::new();
            let (i0, i1) = (bi * tile, ((bi + 1) * tile).min(n));
            let (j0, j1) = (bj * tile, ((bj + 1) * tile).min(n));
            for i in i0..i1 {
                if !valid(i) {
                    continue;
                }
                let (img_i, txt_i) = (image.row(i), text.row(i));
                for j in j0.max(i + 1)..j1 {
                    if !valid(j) {
                        continue;
                    }
                    let (img_j, txt_j) = (image.row(j), text.row(j));
                    let scores = [
                        dot(img_i, img_j),
                        dot(txt_i, txt_j),
                        dot(img_i, txt_j),
                        dot(txt_i, img_j),
                    ];
                    if let Some(combined) = keep(scores) {
                        out.push(RawEdge {
                            src: i,
                            dst: j,
                            scores,
                            combined,
                        });
                    }
                }
            }
            out
        })
        .collect();

    let mut edges: Vec<RawEdge> = per_tile.into_iter().flatten().collect();
    edges.sort_unstable_by_key(|e| (e.src, e.dst));
    edges
}
